// SPDX-License-Identifier: Apache-2.0

//! Moment matching for continuous LTI plants: Markov parameters `CA^kB`,
//! the N-partial reachability space `im[B AB ⋯ A^N B]` and projection
//! onto it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{extend_orthonormal, hcat, max_abs, orthonormal_range, Matrix};
use crate::systems::{ContinuousLtiSystem, Validate};

/// Tolerance on `‖Vinv·V − I‖_max`.
pub const LEFT_INVERSE_TOL: f64 = 1e-10;
/// Relative residual allowed when checking that a block lies in `im(V)`.
pub const SPAN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeftInverseKind {
    /// `Vinv = (VᵀV)⁻¹Vᵀ`, i.e. `Vᵀ` for orthonormal `V`.
    Pseudoinverse,
    /// `Vinv = (VᵀPV)⁻¹VᵀP` for a Lyapunov matrix `P`.
    LyapunovWeighted,
}

/// How large a reduction to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionRequest {
    /// Match Markov parameters up to this horizon; the order follows.
    Moments(usize),
    /// Largest horizon whose reachability space fits in this order.
    MaxOrder(usize),
}

/// Projection `x ≈ V x̄`, `x̄ = Vinv x`.
#[derive(Debug, Clone)]
pub struct ProjectionReduction {
    pub v: Matrix,
    pub vinv: Matrix,
    pub horizon: usize,
    pub kind: LeftInverseKind,
}

impl ProjectionReduction {
    /// Orthonormal `V` with `Vinv = Vᵀ`.
    pub fn orthonormal(v: Matrix, horizon: usize) -> Result<Self> {
        let vinv = v.transpose();
        Self::new(v, vinv, horizon, LeftInverseKind::Pseudoinverse)
    }

    /// Checks `Vinv·V = I_r` before accepting the pair.
    pub fn new(v: Matrix, vinv: Matrix, horizon: usize, kind: LeftInverseKind) -> Result<Self> {
        let r = v.ncols();
        if r == 0 {
            return Err(Error::ZeroSpace("projection basis"));
        }
        if r > v.nrows() || vinv.shape() != (r, v.nrows()) {
            return Err(Error::dim(
                "projection",
                format!("V n x r with r <= n and Vinv {r}x{}", v.nrows()),
                format!("V {:?}, Vinv {:?}", v.shape(), vinv.shape()),
            ));
        }
        let err = max_abs(&(&vinv * &v - Matrix::identity(r, r)));
        if !(err <= LEFT_INVERSE_TOL) {
            return Err(Error::NotLeftInverse(err));
        }
        Ok(Self {
            v,
            vinv,
            horizon,
            kind,
        })
    }

    pub fn order(&self) -> usize {
        self.v.ncols()
    }

    pub fn identity(n: usize) -> Self {
        Self {
            v: Matrix::identity(n, n),
            vinv: Matrix::identity(n, n),
            horizon: 0,
            kind: LeftInverseKind::Pseudoinverse,
        }
    }

    /// `‖X − V·Vinv·X‖_F / ‖X‖_F`; zero for a zero block.
    pub(crate) fn span_residual(&self, block: &Matrix) -> f64 {
        let norm = block.norm();
        if norm == 0.0 {
            return 0.0;
        }
        (block - &self.v * (&self.vinv * block)).norm() / norm
    }
}

/// `M_0 … M_N` with `M_k = C A^k B`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSequenceLti(pub Vec<Matrix>);

pub fn markov_parameters_lti(sys: &ContinuousLtiSystem, horizon: usize) -> MarkovSequenceLti {
    let mut out = Vec::with_capacity(horizon + 1);
    let mut akb = sys.b.clone();
    for k in 0..=horizon {
        out.push(&sys.c * &akb);
        if k < horizon {
            akb = &sys.a * akb;
        }
    }
    MarkovSequenceLti(out)
}

/// `‖X − Y‖_F / (1 + ‖X‖_F)`, the floored relative Markov residual.
pub fn relative_residual(x: &Matrix, y: &Matrix) -> f64 {
    (x - y).norm() / (1.0 + x.norm())
}

/// Orthonormal basis built level by level, columns ordered by level.
#[derive(Debug, Clone)]
pub struct ReachabilityLevels {
    pub basis: Matrix,
    /// `dims[j]` is the dimension of the level-`j` space.
    pub dims: Vec<usize>,
    /// Set once a level added no new direction; all later levels coincide.
    pub saturated: bool,
}

impl ReachabilityLevels {
    pub fn horizon(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Breadth-first reachability recursion shared by the LTI and switched
/// cases: level 0 is `im(inputs)`, level `j+1` adds the images under every
/// map of the directions that were new at level `j`.
pub(crate) fn grow_reachability(
    maps: &[&Matrix],
    inputs: &Matrix,
    request: ReductionRequest,
    rank_tol: f64,
) -> Result<ReachabilityLevels> {
    let n = inputs.nrows();
    let mut basis = orthonormal_range(inputs, rank_tol);
    if basis.ncols() == 0 {
        return Err(Error::ZeroSpace("input matrix"));
    }
    if let ReductionRequest::MaxOrder(r_max) = request {
        if basis.ncols() > r_max {
            return Err(Error::Infeasible {
                requested: r_max,
                minimum: basis.ncols(),
            });
        }
    }
    let mut dims = vec![basis.ncols()];
    let mut newest = basis.clone();
    let mut saturated = false;

    loop {
        let level = dims.len() - 1;
        if let ReductionRequest::Moments(target) = request {
            if level >= target {
                break;
            }
        }
        if saturated {
            // later levels are identical; only reached for an explicit horizon
            dims.push(*dims.last().unwrap());
            continue;
        }
        let mut candidates = Matrix::zeros(n, 0);
        for a in maps {
            candidates = hcat(&candidates, &(*a * &newest));
        }
        let fresh = extend_orthonormal(&basis, &candidates, rank_tol);
        if fresh.ncols() == 0 {
            saturated = true;
            if let ReductionRequest::MaxOrder(_) = request {
                break;
            }
            dims.push(basis.ncols());
            continue;
        }
        if let ReductionRequest::MaxOrder(r_max) = request {
            if basis.ncols() + fresh.ncols() > r_max {
                break;
            }
        }
        basis = hcat(&basis, &fresh);
        dims.push(basis.ncols());
        newest = fresh;
    }
    Ok(ReachabilityLevels {
        basis,
        dims,
        saturated,
    })
}

/// Orthonormal basis of `im[B AB ⋯ A^N B]`.
pub fn reachability_space_lti(
    sys: &ContinuousLtiSystem,
    horizon: usize,
    rank_tol: f64,
) -> Result<Matrix> {
    reachability_levels_lti(sys, ReductionRequest::Moments(horizon), rank_tol).map(|l| l.basis)
}

pub fn reachability_levels_lti(
    sys: &ContinuousLtiSystem,
    request: ReductionRequest,
    rank_tol: f64,
) -> Result<ReachabilityLevels> {
    grow_reachability(&[&sys.a], &sys.b, request, rank_tol)
}

/// `(Vinv A V, Vinv B, C V)`.
///
/// Fails with [`Error::SpanMismatch`] if some `A^k B`, `k ≤ N`, is not
/// reproduced by `V·Vinv`.
pub fn reduce_lti(sys: &ContinuousLtiSystem, proj: &ProjectionReduction) -> Result<ContinuousLtiSystem> {
    sys.validate()?;
    if proj.v.nrows() != sys.n() {
        return Err(Error::dim("reduce_lti", format!("V with {} rows", sys.n()), proj.v.nrows()));
    }
    check_span(&[&sys.a], &sys.b, proj)?;
    Ok(ContinuousLtiSystem {
        a: &proj.vinv * &sys.a * &proj.v,
        b: &proj.vinv * &sys.b,
        c: &sys.c * &proj.v,
    })
}

/// Verifies that every word image of the inputs up to `proj.horizon` lies in
/// `im(V)`.
///
/// Level `k` holds the images of all length-`k` words, compressed to at most
/// `n` weighted columns (`UΣ` of a thin SVD) and scaled to unit Frobenius
/// norm, so a direction is judged by its actual weight in the level.
pub(crate) fn check_span(maps: &[&Matrix], inputs: &Matrix, proj: &ProjectionReduction) -> Result<()> {
    let n = inputs.nrows();
    let mut level_block = inputs.clone();
    for level in 0..=proj.horizon {
        let norm = level_block.norm();
        if norm == 0.0 {
            break;
        }
        level_block /= norm;
        let residual = proj.span_residual(&level_block);
        if residual > SPAN_TOL {
            return Err(Error::SpanMismatch { level, residual });
        }
        if level == proj.horizon {
            break;
        }
        let mut next = Matrix::zeros(n, 0);
        for a in maps {
            next = hcat(&next, &(*a * &level_block));
        }
        level_block = compress(next);
    }
    Ok(())
}

fn compress(m: Matrix) -> Matrix {
    if m.ncols() <= m.nrows() {
        return m;
    }
    let rows = m.nrows();
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let mut out = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > 1e-15 * smax {
            out.push(u.column(i) * *s);
        }
    }
    if out.is_empty() {
        return Matrix::zeros(rows, 0);
    }
    Matrix::from_columns(&out)
}
