// SPDX-License-Identifier: Apache-2.0

//! Random plants with a prescribed or randomly drawn spectrum.
//!
//! The state matrix is built as `A = Q T Qᵀ` where `T` is a real
//! quasi-triangular matrix (1×1 blocks for real eigenvalues, 2×2 rotation
//! blocks `[[a, b], [−b, a]]` for pairs `a ± ib`, scaled Gaussian coupling
//! above the blocks) and `Q` is the orthogonal factor of a Gaussian matrix.
//! `B` and `C` have standard normal entries.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::Matrix;
use crate::systems::{ContinuousLtiSystem, SamplingGrid};

/// One real eigenvalue (`im == 0`) or a conjugate pair `re ± i·im`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSpec {
    Random {
        /// Stable real parts are drawn uniformly from this range.
        real_range: (f64, f64),
        /// Imaginary parts of pairs are drawn from `[0.1, imag_max]`.
        imag_max: f64,
        /// Share of the states carried by conjugate pairs.
        complex_fraction: f64,
        /// Real eigenvalues drawn from `[0.05, 0.5]` instead.
        unstable: usize,
    },
    Explicit(Vec<SpectrumEntry>),
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self::Random {
            real_range: (-2.0, -0.1),
            imag_max: 2.0,
            complex_fraction: 0.5,
            unstable: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub spectrum: SpectrumSpec,
    /// Standard deviation of the coupling above the diagonal blocks,
    /// divided by `√n`.
    pub coupling: f64,
}

impl PlantSpec {
    pub fn stable(n: usize, m: usize, p: usize) -> Self {
        Self {
            n,
            m,
            p,
            spectrum: SpectrumSpec::default(),
            coupling: 0.3,
        }
    }
}

fn randn<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Orthogonal factor of a Gaussian matrix, sign-fixed so the distribution
/// is Haar.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    let qr = randn(rng, n, n).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn draw_spectrum<R: Rng + ?Sized>(rng: &mut R, n: usize, spec: &SpectrumSpec) -> Result<Vec<SpectrumEntry>> {
    match spec {
        SpectrumSpec::Explicit(entries) => Ok(entries.clone()),
        SpectrumSpec::Random {
            real_range: (lo, hi),
            imag_max,
            complex_fraction,
            unstable,
        } => {
            if !(lo <= hi) || *unstable > n || !(0.0..=1.0).contains(complex_fraction) {
                return Err(Error::InvalidArgument(format!(
                    "bad spectrum request: range [{lo}, {hi}], {unstable} unstable of {n}, complex share {complex_fraction}"
                )));
            }
            let stable = n - unstable;
            let pairs = ((complex_fraction * stable as f64) / 2.0).floor() as usize;
            let mut out = Vec::with_capacity(stable - pairs + unstable);
            for _ in 0..pairs {
                out.push(SpectrumEntry {
                    re: rng.random_range(*lo..=*hi),
                    im: rng.random_range(0.1..=imag_max.max(0.1)),
                });
            }
            for _ in 0..stable - 2 * pairs {
                out.push(SpectrumEntry {
                    re: rng.random_range(*lo..=*hi),
                    im: 0.0,
                });
            }
            for _ in 0..*unstable {
                out.push(SpectrumEntry {
                    re: rng.random_range(0.05..=0.5),
                    im: 0.0,
                });
            }
            Ok(out)
        }
    }
}

/// Quasi-triangular matrix with exactly the given spectrum.
pub fn quasi_triangular<R: Rng + ?Sized>(rng: &mut R, entries: &[SpectrumEntry], coupling: f64) -> Result<Matrix> {
    let n: usize = entries.iter().map(|e| if e.im != 0.0 { 2 } else { 1 }).sum();
    if entries.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
        return Err(Error::NonFinite("spectrum"));
    }
    let mut t = Matrix::zeros(n, n);
    let mut starts = Vec::with_capacity(entries.len());
    let mut i = 0;
    for e in entries {
        starts.push(i);
        t[(i, i)] = e.re;
        if e.im != 0.0 {
            let b = e.im.abs();
            t[(i, i + 1)] = b;
            t[(i + 1, i)] = -b;
            t[(i + 1, i + 1)] = e.re;
            i += 2;
        } else {
            i += 1;
        }
    }
    let scale = coupling / (n.max(1) as f64).sqrt();
    if scale != 0.0 {
        for (bi, &s) in starts.iter().enumerate() {
            let end = starts.get(bi + 1).copied().unwrap_or(n);
            for r in s..end {
                for c in end..n {
                    t[(r, c)] = scale * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
    }
    Ok(t)
}

pub fn random_plant<R: Rng + ?Sized>(rng: &mut R, spec: &PlantSpec) -> Result<ContinuousLtiSystem> {
    if spec.n == 0 || spec.m == 0 || spec.p == 0 {
        return Err(Error::InvalidArgument("plant dimensions must be positive".into()));
    }
    let entries = draw_spectrum(rng, spec.n, &spec.spectrum)?;
    let t = quasi_triangular(rng, &entries, spec.coupling)?;
    if t.nrows() != spec.n {
        return Err(Error::dim("spectrum", spec.n, t.nrows()));
    }
    let q = random_orthogonal(rng, spec.n);
    let a = &q * t * q.transpose();
    let b = randn(rng, spec.n, spec.m);
    let c = randn(rng, spec.p, spec.n);
    ContinuousLtiSystem::new(a, b, c)
}

pub fn random_stable_plant<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, p: usize) -> ContinuousLtiSystem {
    random_plant(rng, &PlantSpec::stable(n, m, p)).expect("default stable spec is valid")
}

/// `d` distinct intervals drawn uniformly from `[lo, hi]`.
pub fn random_grid<R: Rng + ?Sized>(rng: &mut R, d: usize, lo: f64, hi: f64) -> Result<SamplingGrid> {
    let mut out: Vec<f64> = Vec::with_capacity(d);
    while out.len() < d {
        let h = rng.random_range(lo..=hi);
        if out.iter().all(|x| (x - h).abs() > 1e-6 * hi) {
            out.push(h);
        }
    }
    SamplingGrid::new(out)
}
