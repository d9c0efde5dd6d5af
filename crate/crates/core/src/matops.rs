// SPDX-License-Identifier: Apache-2.0

//! Dense real-matrix kernels: matrix exponential, the zero-order-hold
//! integral, orthonormal range bases, the continuous Lyapunov solver and
//! definiteness tests.
//!
//! The exponential is the scaling-and-squaring algorithm with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13 (Higham, SIAM J. Matrix Anal.
//! Appl. 26(4), 2005). The Lyapunov solver is Bartels–Stewart on the real
//! Schur form.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Default relative singular-value cutoff for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

const SCHUR_MAX_ITER: usize = 100_000;

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|x| x.is_finite())
}

fn require_square(m: &Matrix, context: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::dim(
            context,
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

fn require_finite(m: &Matrix, context: &'static str) -> Result<()> {
    if all_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

fn one_norm(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

// Padé coefficients b_0..b_m and the 1-norm bounds theta_m below which the
// degree-m approximant is accurate to unit roundoff without scaling.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(f64, &[f64]); 4] = [
    (1.495585217958292e-2, &PADE3),
    (2.539398330063230e-1, &PADE5),
    (9.504178996162932e-1, &PADE7),
    (2.097847961257068e0, &PADE9),
];
const THETA13: f64 = 5.371920351148152;

/// `e^{A t}` by scaling and squaring.
pub fn expm(a: &Matrix, t: f64) -> Result<Matrix> {
    require_square(a, "expm")?;
    require_finite(a, "expm input")?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "expm time must be finite and non-negative, got {t}"
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let at = a * t;
    let norm = one_norm(&at);

    for (theta, coeffs) in THETA {
        if norm <= theta {
            return pade_low(&at, coeffs);
        }
    }

    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = at * 2f64.powi(-squarings);
    let mut e = pade13(&scaled)?;
    for _ in 0..squarings {
        e = &e * &e;
    }
    if !all_finite(&e) {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    Ok(e)
}

fn pade_solve(u: Matrix, v: Matrix) -> Result<Matrix> {
    let num = &v + &u;
    let den = v - u;
    den.lu()
        .solve(&num)
        .ok_or_else(|| Error::Numerical("singular Padé denominator".into()))
}

fn pade_low(a: &Matrix, b: &[f64]) -> Result<Matrix> {
    let n = a.nrows();
    let a2 = a * a;
    // Even powers I, A^2, A^4, ...
    let mut even = vec![Matrix::identity(n, n)];
    while even.len() * 2 < b.len() {
        let next = even.last().unwrap() * &a2;
        even.push(next);
    }
    let mut u_inner = Matrix::zeros(n, n);
    let mut v = Matrix::zeros(n, n);
    for (k, p) in even.iter().enumerate() {
        if 2 * k + 1 < b.len() {
            u_inner += p * b[2 * k + 1];
        }
        v += p * b[2 * k];
    }
    pade_solve(a * u_inner, v)
}

fn pade13(a: &Matrix) -> Result<Matrix> {
    let b = &PADE13;
    let n = a.nrows();
    let id = Matrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let w1 = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let w2 = &a6 * &w1 + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = a * w2;
    let z1 = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * &z1 + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    pade_solve(u, v)
}

/// Returns `(e^{Ah}, Θ(h))` where `Θ(h) = ∫_0^h e^{As} ds`, both read off a
/// single exponential of the block matrix `[[A, I], [0, 0]]·h`.
pub fn exp_and_zoh_integral(a: &Matrix, h: f64) -> Result<(Matrix, Matrix)> {
    require_square(a, "zoh_integral")?;
    require_finite(a, "zoh_integral input")?;
    let n = a.nrows();
    let mut aug = Matrix::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, n)).fill_with_identity();
    let e = expm(&aug, h)?;
    let phi = e.view((0, 0), (n, n)).into_owned();
    let theta = e.view((0, n), (n, n)).into_owned();
    Ok((phi, theta))
}

/// `Θ(h) = ∫_0^h e^{As} ds`. Does not require `A` to be invertible.
pub fn zoh_integral(a: &Matrix, h: f64) -> Result<Matrix> {
    exp_and_zoh_integral(a, h).map(|(_, theta)| theta)
}

/// Orthonormal basis of the numerical column space of `m`.
///
/// Keeps the left singular vectors whose singular value exceeds
/// `rank_tol · σ_max`. A zero matrix yields an `n × 0` result.
pub fn orthonormal_range(m: &Matrix, rank_tol: f64) -> Matrix {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 || max_abs(m) == 0.0 {
        return Matrix::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rank_tol * smax)
        .collect();
    let cols: Vec<DVector<f64>> = keep.iter().map(|&i| u.column(i).clone_owned()).collect();
    stack_columns(n, &cols)
}

/// `n × k` matrix from `k` columns; `n × 0` when there are none.
pub fn stack_columns(n: usize, cols: &[DVector<f64>]) -> Matrix {
    if cols.is_empty() {
        Matrix::zeros(n, 0)
    } else {
        Matrix::from_columns(cols)
    }
}

/// Numerical rank with the same cutoff rule as [`orthonormal_range`].
pub fn numerical_rank(m: &Matrix, rank_tol: f64) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 || max_abs(m) == 0.0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    sv.iter().filter(|&&s| s > rank_tol * smax).count()
}

fn project_out(basis: &Matrix, v: &mut DVector<f64>) {
    for q in basis.column_iter() {
        let c = q.dot(v);
        v.axpy(-c, &q, 1.0);
    }
}

/// Orthonormal directions of `candidates` not already in the span of the
/// orthonormal `basis`.
///
/// Each candidate column is orthogonalized against `basis` by modified
/// Gram–Schmidt, twice. The residual block is then rank-revealed by SVD with
/// cutoff `rank_tol` relative to the largest singular value of the
/// untouched candidate block. Returns the new columns only.
pub fn extend_orthonormal(basis: &Matrix, candidates: &Matrix, rank_tol: f64) -> Matrix {
    let n = candidates.nrows();
    debug_assert_eq!(basis.nrows(), n);
    if candidates.ncols() == 0 || max_abs(candidates) == 0.0 {
        return Matrix::zeros(n, 0);
    }
    let scale = candidates.clone().singular_values().max();
    let mut residual = candidates.clone();
    for mut col in residual.column_iter_mut() {
        let mut v = col.clone_owned();
        project_out(basis, &mut v);
        project_out(basis, &mut v);
        col.copy_from(&v);
    }
    if max_abs(&residual) == 0.0 {
        return Matrix::zeros(n, 0);
    }
    let svd = residual.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut fresh: Vec<DVector<f64>> = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= rank_tol * scale {
            continue;
        }
        let mut v = u.column(i).clone_owned();
        project_out(basis, &mut v);
        for q in &fresh {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
        }
        let norm = v.norm();
        if norm > 0.5 {
            fresh.push(v / norm);
        }
    }
    stack_columns(n, &fresh)
}

/// Horizontal concatenation of two blocks with equal row counts.
pub fn hcat(left: &Matrix, right: &Matrix) -> Matrix {
    debug_assert_eq!(left.nrows(), right.nrows());
    let mut out = Matrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.view_mut((0, 0), left.shape()).copy_from(left);
    out.view_mut((0, left.ncols()), right.shape()).copy_from(right);
    out
}

/// Real Schur form `A = U T Uᵀ`. Returns `(U, T)`.
pub fn real_schur(a: &Matrix) -> Result<(Matrix, Matrix)> {
    require_square(a, "schur")?;
    require_finite(a, "schur input")?;
    a.clone()
        .try_schur(f64::EPSILON, SCHUR_MAX_ITER)
        .map(|s| s.unpack())
        .ok_or_else(|| Error::Numerical("real Schur iteration did not converge".into()))
}

/// Diagonal block layout of a quasi-upper-triangular Schur factor.
fn schur_blocks(t: &Matrix) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

fn block_eigenvalues(t: &Matrix, start: usize, size: usize) -> Vec<Complex<f64>> {
    if size == 1 {
        return vec![Complex::new(t[(start, start)], 0.0)];
    }
    let (a, b) = (t[(start, start)], t[(start, start + 1)]);
    let (c, d) = (t[(start + 1, start)], t[(start + 1, start + 1)]);
    let half_tr = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let disc = half_diff * half_diff + b * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        vec![
            Complex::new(half_tr + s, 0.0),
            Complex::new(half_tr - s, 0.0),
        ]
    } else {
        let s = (-disc).sqrt();
        vec![Complex::new(half_tr, s), Complex::new(half_tr, -s)]
    }
}

/// Eigenvalues of a general real square matrix.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex<f64>>> {
    let (_, t) = real_schur(a)?;
    Ok(schur_blocks(&t)
        .into_iter()
        .flat_map(|(s, k)| block_eigenvalues(&t, s, k))
        .collect())
}

/// Largest real part over the spectrum, with the eigenvalue attaining it.
pub fn spectral_abscissa(a: &Matrix) -> Result<(f64, Complex<f64>)> {
    let eigs = eigenvalues(a)?;
    let worst = eigs
        .into_iter()
        .max_by(|x, y| x.re.total_cmp(&y.re))
        .unwrap_or(Complex::new(f64::NEG_INFINITY, 0.0));
    Ok((worst.re, worst))
}

/// Solves the small Sylvester equation `Lᵀ X + X R = rhs` by vectorization.
fn small_sylvester(l: &Matrix, r: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    let (p, q) = (l.nrows(), r.nrows());
    let lt = l.transpose();
    let mut k = Matrix::zeros(p * q, p * q);
    // vec(Lᵀ X) = (I_q ⊗ Lᵀ) vec X,  vec(X R) = (Rᵀ ⊗ I_p) vec X
    for j in 0..q {
        for i in 0..p {
            let row = j * p + i;
            for a in 0..p {
                k[(row, j * p + a)] += lt[(i, a)];
            }
            for b in 0..q {
                k[(row, b * p + i)] += r[(b, j)];
            }
        }
    }
    let rhs_vec = DVector::from_iterator(p * q, rhs.iter().copied());
    let x = k
        .lu()
        .solve(&rhs_vec)
        .ok_or_else(|| Error::Numerical("singular Lyapunov block".into()))?;
    Ok(Matrix::from_iterator(p, q, x.iter().copied()))
}

/// Solves `AᵀP + PA = −Q` for symmetric positive definite `P`.
///
/// `A` must be Hurwitz; otherwise the offending eigenvalue is reported.
pub fn solve_continuous_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    require_square(a, "lyapunov A")?;
    require_square(q, "lyapunov Q")?;
    if a.nrows() != q.nrows() {
        return Err(Error::dim(
            "lyapunov",
            format!("Q of order {}", a.nrows()),
            format!("order {}", q.nrows()),
        ));
    }
    require_finite(q, "lyapunov Q")?;
    let n = a.nrows();
    let (u, t) = real_schur(a)?;
    let blocks = schur_blocks(&t);
    for &(s, k) in &blocks {
        for ev in block_eigenvalues(&t, s, k) {
            if ev.re >= 0.0 {
                return Err(Error::NotHurwitz {
                    re: ev.re,
                    im: ev.im,
                });
            }
        }
    }

    // Tᵀ Y + Y T = −Uᵀ Q U, solved block row by block row.
    let c = -(u.transpose() * q * &u);
    let mut y = Matrix::zeros(n, n);
    for &(si, ki) in &blocks {
        for &(sj, kj) in &blocks {
            let mut rhs = c.view((si, sj), (ki, kj)).into_owned();
            if si > 0 {
                // Σ_{k<i} T_kiᵀ Y_kj
                let t_col = t.view((0, si), (si, ki));
                let y_col = y.view((0, sj), (si, kj));
                rhs -= t_col.transpose() * y_col;
            }
            if sj > 0 {
                // Σ_{l<j} Y_il T_lj
                let y_row = y.view((si, 0), (ki, sj));
                let t_row = t.view((0, sj), (sj, kj));
                rhs -= y_row * t_row;
            }
            let tii = t.view((si, si), (ki, ki)).into_owned();
            let tjj = t.view((sj, sj), (kj, kj)).into_owned();
            let block = small_sylvester(&tii, &tjj, &rhs)?;
            y.view_mut((si, sj), (ki, kj)).copy_from(&block);
        }
    }
    let p = &u * y * u.transpose();
    let p = symmetrize(&p);
    if !all_finite(&p) {
        return Err(Error::Numerical("Lyapunov solution is not finite".into()));
    }
    Ok(p)
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// True when `‖S − Sᵀ‖_max ≤ 1e-12·(1 + ‖S‖_max)`.
pub fn is_symmetric(s: &Matrix) -> bool {
    s.nrows() == s.ncols() && max_abs(&(s - s.transpose())) <= 1e-12 * (1.0 + max_abs(s))
}

pub fn symmetric_eigenvalues(s: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetrize(s).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn lambda_max(s: &Matrix) -> f64 {
    symmetric_eigenvalues(s)
        .last()
        .copied()
        .unwrap_or(f64::NEG_INFINITY)
}

pub fn lambda_min(s: &Matrix) -> f64 {
    symmetric_eigenvalues(s)
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
}

pub fn default_margin_tol(s: &Matrix) -> f64 {
    1e-10 * (1.0 + max_abs(s))
}

/// Strict negative definiteness: `λ_max(S) < −margin_tol`. Returns the
/// verdict together with `λ_max(S)`.
pub fn is_negative_definite(s: &Matrix, margin_tol: f64) -> Result<(bool, f64)> {
    require_square(s, "definiteness test")?;
    require_finite(s, "definiteness test")?;
    let lmax = lambda_max(s);
    Ok((lmax < -margin_tol, lmax))
}

/// Strict positive definiteness: `λ_min(S) > margin_tol`.
pub fn is_positive_definite(s: &Matrix, margin_tol: f64) -> Result<(bool, f64)> {
    let (neg, lmax) = is_negative_definite(&(-s), margin_tol)?;
    Ok((neg, -lmax))
}

/// Row-major nested vectors.
pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Inverse of [`to_rows`]; `cols` fixes the width of an empty row list.
pub fn from_rows(rows: &[Vec<f64>], cols: Option<usize>) -> Result<Matrix> {
    let width = rows.first().map(|r| r.len()).or(cols).unwrap_or(0);
    if let Some(i) = rows.iter().position(|r| r.len() != width) {
        return Err(Error::dim("matrix rows", width, format!("{} in row {i}", rows[i].len())));
    }
    Ok(Matrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

/// `#[serde(with = "matops::rows")]` for row-major nested arrays.
pub mod rows {
    use super::{from_rows, to_rows, Matrix};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Matrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows, None).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
    }

    fn rel_err(x: &Matrix, y: &Matrix) -> f64 {
        max_abs(&(x - y)) / max_abs(y).max(1e-300)
    }

    fn taylor_exp(a: &Matrix, t: f64, terms: usize) -> Matrix {
        let n = a.nrows();
        let at = a * t;
        let mut term = Matrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..terms {
            term = &term * &at / k as f64;
            sum += &term;
        }
        sum
    }

    fn simpson<F: Fn(f64) -> Matrix>(f: &F, a: f64, b: f64, fa: &Matrix, fm: &Matrix, fb: &Matrix, tol: f64, depth: u32) -> Matrix {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
        let left = (fa + &flm * 4.0 + fm) * ((m - a) / 6.0);
        let right = (fm + &frm * 4.0 + fb) * ((b - m) / 6.0);
        let refined = &left + &right;
        if depth == 0 || max_abs(&(&refined - &whole)) <= 15.0 * tol {
            return &refined + (&refined - &whole) / 15.0;
        }
        simpson(f, a, m, fa, &flm, fm, tol / 2.0, depth - 1)
            + simpson(f, m, b, fm, &frm, fb, tol / 2.0, depth - 1)
    }

    fn adaptive_simpson<F: Fn(f64) -> Matrix>(f: F, a: f64, b: f64, tol: f64) -> Matrix {
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        simpson(&f, a, b, &fa, &fm, &fb, tol, 30)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Matrix::zeros(4, 4);
        assert_eq!(expm(&z, 3.0).unwrap(), Matrix::identity(4, 4));
    }

    #[test]
    fn expm_scalar_closed_form() {
        let a = Matrix::from_element(1, 1, -1.0);
        let e = expm(&a, 2.0).unwrap();
        assert!((e[(0, 0)] - (-2.0f64).exp()).abs() <= 1e-15);
    }

    #[test]
    fn expm_matches_taylor_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = randn(&mut rng, 5, 5);
        let e = expm(&a, 0.7).unwrap();
        let oracle = taylor_exp(&a, 0.7, 60);
        assert!(max_abs(&(&e - &oracle)) <= 1e-10, "{}", max_abs(&(&e - &oracle)));
    }

    #[test]
    fn expm_each_pade_degree() {
        // norms straddling every theta threshold
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = randn(&mut rng, 4, 4);
        let base = &base / one_norm(&base);
        for scale in [0.01, 0.2, 0.9, 2.0, 5.0, 12.0] {
            let a = &base * scale;
            let e = expm(&a, 1.0).unwrap();
            let oracle = taylor_exp(&(&a / 16.0), 1.0, 40);
            let mut o = oracle;
            for _ in 0..4 {
                o = &o * &o;
            }
            assert!(rel_err(&e, &o) <= 1e-12, "scale {scale}: {}", rel_err(&e, &o));
        }
    }

    #[test]
    fn expm_rejects_bad_input() {
        assert!(matches!(expm(&Matrix::zeros(2, 3), 1.0), Err(Error::Dimension { .. })));
        let mut a = Matrix::zeros(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(expm(&a, 1.0), Err(Error::NonFinite(_))));
        assert!(expm(&Matrix::zeros(2, 2), -1.0).is_err());
    }

    #[test]
    fn expm_semigroup() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a = randn(&mut rng, 6, 6) * 0.5;
            let s: f64 = rng.random_range(0.0..2.0);
            let t: f64 = rng.random_range(0.0..2.0);
            let lhs = expm(&a, s + t).unwrap();
            let rhs = expm(&a, s).unwrap() * expm(&a, t).unwrap();
            assert!(rel_err(&lhs, &rhs) <= 1e-9);
        }
    }

    #[test]
    fn zoh_integral_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = randn(&mut rng, 3, 3);
        assert_eq!(zoh_integral(&a, 0.0).unwrap(), Matrix::zeros(3, 3));
        let th = zoh_integral(&Matrix::zeros(3, 3), 1.25).unwrap();
        assert!(max_abs(&(th - Matrix::identity(3, 3) * 1.25)) <= 1e-15);
    }

    #[test]
    fn zoh_integral_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = randn(&mut rng, 6, 6).qr().q();
        let mut t = Matrix::zeros(6, 6);
        for i in 0..6 {
            t[(i, i)] = -0.2 - 0.3 * i as f64;
            for j in i + 1..6 {
                t[(i, j)] = 0.3 * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let a = &q * t * q.transpose();
        let th = zoh_integral(&a, 1.5).unwrap();
        let oracle = adaptive_simpson(|s| taylor_exp(&a, s, 60), 0.0, 1.5, 1e-11);
        assert!(max_abs(&(&th - &oracle)) <= 1e-8, "{}", max_abs(&(&th - &oracle)));
    }

    #[test]
    fn exponential_integral_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [1, 3, 8, 20] {
            let a = randn(&mut rng, n, n) / (n as f64).sqrt();
            let h = rng.random_range(0.01..5.0);
            let (phi, th) = exp_and_zoh_integral(&a, h).unwrap();
            let alt = Matrix::identity(n, n) + &a * th;
            assert!(max_abs(&(&phi - alt)) <= 1e-10 * (1.0 + max_abs(&phi)));
        }
    }

    #[test]
    fn orthonormal_range_cases() {
        let v = orthonormal_range(&Matrix::identity(3, 3), DEFAULT_RANK_TOL);
        assert_eq!(v.ncols(), 3);
        assert!(max_abs(&(v.transpose() * &v - Matrix::identity(3, 3))) <= 1e-12);

        let m = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        let v = orthonormal_range(&m, DEFAULT_RANK_TOL);
        assert_eq!(v.ncols(), 1);
        assert!((v[(0, 0)].abs() - 1.0).abs() <= 1e-15);

        assert_eq!(orthonormal_range(&Matrix::zeros(4, 2), 1e-9).shape(), (4, 0));
    }

    #[test]
    fn orthonormal_range_of_rank_three_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = randn(&mut rng, 8, 3) * randn(&mut rng, 3, 5);
        let v = orthonormal_range(&m, 1e-9);
        assert_eq!(v.ncols(), 3);
        assert!(max_abs(&(&v * v.transpose() * &m - &m)) <= 1e-9 * (1.0 + max_abs(&m)));
        assert!(max_abs(&(v.transpose() * &v - Matrix::identity(3, 3))) <= 1e-12);
    }

    #[test]
    fn extend_orthonormal_adds_only_new_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base = orthonormal_range(&randn(&mut rng, 7, 2), 1e-9);
        let inside = &base * randn(&mut rng, 2, 3);
        assert_eq!(extend_orthonormal(&base, &inside, 1e-9).ncols(), 0);
        let mixed = hcat(&inside, &randn(&mut rng, 7, 2));
        let fresh = extend_orthonormal(&base, &mixed, 1e-9);
        assert_eq!(fresh.ncols(), 2);
        let all = hcat(&base, &fresh);
        assert!(max_abs(&(all.transpose() * &all - Matrix::identity(4, 4))) <= 1e-12);
    }

    fn kron_lyapunov(a: &Matrix, q: &Matrix) -> Matrix {
        // vec(AᵀP + PA) = (I ⊗ Aᵀ + Aᵀ ⊗ I) vec P
        let n = a.nrows();
        let mut k = Matrix::zeros(n * n, n * n);
        for j in 0..n {
            for i in 0..n {
                let row = j * n + i;
                for l in 0..n {
                    k[(row, j * n + l)] += a[(l, i)];
                    k[(row, l * n + i)] += a[(l, j)];
                }
            }
        }
        let rhs = DVector::from_iterator(n * n, q.iter().map(|x| -x));
        let x = k.lu().solve(&rhs).unwrap();
        Matrix::from_iterator(n, n, x.iter().copied())
    }

    #[test]
    fn lyapunov_trivial_cases() {
        let p = solve_continuous_lyapunov(&-Matrix::identity(3, 3), &Matrix::identity(3, 3)).unwrap();
        assert!(max_abs(&(p - Matrix::identity(3, 3) * 0.5)) <= 1e-14);
        let a = Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let p = solve_continuous_lyapunov(&a, &Matrix::identity(2, 2)).unwrap();
        let expected = Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25]);
        assert!(max_abs(&(p - expected)) <= 1e-14);
    }

    #[test]
    fn lyapunov_matches_kronecker_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let m = randn(&mut rng, 10, 10);
        let shift = spectral_abscissa(&m).unwrap().0 + 0.5;
        let a = m - Matrix::identity(10, 10) * shift;
        let q = Matrix::identity(10, 10);
        let p = solve_continuous_lyapunov(&a, &q).unwrap();
        let oracle = kron_lyapunov(&a, &q);
        assert!(max_abs(&(&p - &oracle)) <= 1e-8 * max_abs(&oracle).max(1.0));
        let resid = a.transpose() * &p + &p * &a + &q;
        assert!(max_abs(&resid) <= 1e-8 * max_abs(&q));
        assert!(lambda_min(&p) > 0.0);
    }

    #[test]
    fn lyapunov_rejects_non_hurwitz() {
        let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        match solve_continuous_lyapunov(&a, &Matrix::identity(2, 2)) {
            Err(Error::NotHurwitz { re, im }) => {
                assert!(re.abs() < 1e-12);
                assert!((im.abs() - 1.0).abs() < 1e-12);
            }
            other => panic!("expected NotHurwitz, got {other:?}"),
        }
    }

    #[test]
    fn negative_definiteness_cases() {
        let (ok, w) = is_negative_definite(&-Matrix::identity(3, 3), 1e-10).unwrap();
        assert!(ok);
        assert!((w + 1.0).abs() < 1e-14);
        let (ok, _) = is_negative_definite(&Matrix::zeros(3, 3), 1e-10).unwrap();
        assert!(!ok);
        let a = Matrix::identity(2, 2) * 0.5;
        let s = a.transpose() * Matrix::identity(2, 2) * &a - Matrix::identity(2, 2);
        let (ok, w) = is_negative_definite(&s, default_margin_tol(&s)).unwrap();
        assert!(ok);
        assert!((w + 0.75).abs() < 1e-14);
    }
}
