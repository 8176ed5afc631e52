//! Dense real linear algebra: Jordan-Chevalley and semisimple-unipotent
//! decompositions, matrix exponential and logarithm, kernel/image bases and
//! adjoints with respect to a Gram matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Below this reciprocal condition number σ_min/σ_max a matrix is treated as
/// singular.
pub const SINGULARITY_TOL: f64 = 1e-12;

/// Default tolerance for decomposition invariants.
pub const DECOMPOSITION_TOL: f64 = 1e-10;

/// Largest Frobenius-norm entry scale, used for relative tolerances.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn check_square(m: &Matrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(m.nrows())
}

pub fn check_invertible(m: &Matrix) -> Result<()> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(());
    }
    let s = singular_values(m);
    let smax = s.iter().fold(0.0_f64, |a, &b| a.max(b));
    let smin = s.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if smax == 0.0 || smin <= SINGULARITY_TOL * smax {
        return Err(Error::SingularInput {
            det: m.determinant(),
        });
    }
    Ok(())
}

pub fn inverse(m: &Matrix) -> Result<Matrix> {
    check_invertible(m)?;
    m.clone().try_inverse().ok_or(Error::SingularInput {
        det: m.determinant(),
    })
}

/// Default rank threshold: singular values below `max(r, c) * eps * sigma_max * 1e3`
/// count as zero.
pub fn default_rank_tol(sigma_max: f64, rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max * 1e3
}

fn svd_threshold(singular: &DVector<f64>, rows: usize, cols: usize, tol: Option<f64>) -> f64 {
    let smax = singular.iter().fold(0.0_f64, |a, &b| a.max(b));
    match tol {
        Some(t) => t,
        None => default_rank_tol(smax, rows, cols).max(f64::MIN_POSITIVE),
    }
}

/// Thin singular value decomposition A = U·diag(s)·Vᵀ. For an r × c matrix
/// with p = min(r, c), U is r × p and Vᵀ is p × c.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vector,
    pub v_t: Matrix,
}

impl Svd {
    fn recompose_error(&self, a: &Matrix) -> f64 {
        let s = Matrix::from_diagonal(&self.singular_values);
        max_abs(&(&self.u * s * &self.v_t - a))
    }

    fn transposed(self) -> Self {
        Self {
            u: self.v_t.transpose(),
            singular_values: self.singular_values,
            v_t: self.u.transpose(),
        }
    }
}

fn nalgebra_svd(a: &Matrix) -> Option<Svd> {
    let svd = a.clone().try_svd(true, true, f64::EPSILON, 0)?;
    Some(Svd {
        u: svd.u?,
        singular_values: svd.singular_values,
        v_t: svd.v_t?,
    })
}

/// One-sided Jacobi on the columns of a (rows ≥ cols). Slow but accurate;
/// columns of U for zero singular values are left at zero.
fn jacobi_svd(a: &Matrix) -> Svd {
    let (r, c) = a.shape();
    debug_assert!(r >= c);
    let mut w = a.clone();
    let mut v = Matrix::identity(c, c);
    for _ in 0..60 {
        let mut rotated = false;
        for i in 0..c {
            for j in i + 1..c {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for m in [&mut w, &mut v] {
                    for k in 0..m.nrows() {
                        let (x, y) = (m[(k, i)], m[(k, j)]);
                        m[(k, i)] = cs * x - sn * y;
                        m[(k, j)] = sn * x + cs * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut u = Matrix::zeros(r, c);
    let mut s = Vector::zeros(c);
    for k in 0..c {
        let nrm = w.column(k).norm();
        s[k] = nrm;
        if nrm > 0.0 {
            u.set_column(k, &(w.column(k) / nrm));
        }
    }
    Svd {
        u,
        singular_values: s,
        v_t: v.transpose(),
    }
}

/// SVD with a reconstruction check. nalgebra's bidiagonal iteration
/// occasionally returns factors that do not reproduce the input (seen on
/// well-conditioned 3 × 3 matrices); the transpose and then one-sided Jacobi
/// are tried in that case.
pub fn svd(a: &Matrix) -> Svd {
    let (r, c) = a.shape();
    let tol = 64.0 * f64::EPSILON * max_abs(a).max(f64::MIN_POSITIVE) * r.max(c) as f64;
    if let Some(s) = nalgebra_svd(a) {
        if s.recompose_error(a) <= tol {
            return s;
        }
    }
    let at = a.transpose();
    if let Some(s) = nalgebra_svd(&at) {
        if s.recompose_error(&at) <= tol {
            return s.transposed();
        }
    }
    if r >= c {
        jacobi_svd(a)
    } else {
        jacobi_svd(&at).transposed()
    }
}

pub fn singular_values(a: &Matrix) -> Vector {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vector::zeros(0);
    }
    svd(a).singular_values
}

/// Orthonormal basis (as columns) of the null space of `l`.
pub fn kernel_basis(l: &Matrix, tol: Option<f64>) -> Matrix {
    let (r, c) = l.shape();
    if c == 0 {
        return Matrix::zeros(0, 0);
    }
    // Pad with zero rows so the SVD returns a full right factor.
    let padded = if r < c {
        let mut p = Matrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(l);
        p
    } else {
        l.clone()
    };
    let svd = svd(&padded);
    let thr = svd_threshold(&svd.singular_values, r, c, tol);
    let cols: Vec<Vector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= thr)
        .map(|(i, _)| svd.v_t.row(i).transpose())
        .collect();
    columns_to_matrix(c, &cols)
}

/// Orthonormal basis (as columns) of the column space of `l`.
pub fn image_basis(l: &Matrix, tol: Option<f64>) -> Matrix {
    let (r, c) = l.shape();
    if c == 0 || r == 0 {
        return Matrix::zeros(r, 0);
    }
    let svd = svd(l);
    let u = svd.u;
    let thr = svd_threshold(&svd.singular_values, r, c, tol);
    let cols: Vec<Vector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > thr)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    columns_to_matrix(r, &cols)
}

pub fn columns_to_matrix(rows: usize, cols: &[Vector]) -> Matrix {
    let mut m = Matrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

pub fn matrix_rank(l: &Matrix, tol: Option<f64>) -> usize {
    image_basis(l, tol).ncols()
}

/// Orthonormal basis of span(a) ∩ span(b), both given as column matrices.
pub fn intersect_subspaces(a: &Matrix, b: &Matrix, tol: Option<f64>) -> Matrix {
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return Matrix::zeros(n, 0);
    }
    let qa = image_basis(a, tol);
    let qb = image_basis(b, tol);
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return Matrix::zeros(n, 0);
    }
    let mut stacked = Matrix::zeros(n, qa.ncols() + qb.ncols());
    stacked.view_mut((0, 0), (n, qa.ncols())).copy_from(&qa);
    stacked
        .view_mut((0, qa.ncols()), (n, qb.ncols()))
        .copy_from(&(-&qb));
    // Orthonormal inputs: a fixed tolerance on the coefficient null space.
    let null = kernel_basis(&stacked, Some(tol.unwrap_or(1e-8)));
    if null.ncols() == 0 {
        return Matrix::zeros(n, 0);
    }
    let coeffs = null.rows(0, qa.ncols()).into_owned();
    image_basis(&(&qa * coeffs), tol)
}

/// Moore-Penrose pseudo-inverse with the default rank tolerance.
pub fn pseudo_inverse(m: &Matrix) -> Matrix {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Matrix::zeros(c, r);
    }
    let svd = svd(m);
    let thr = svd_threshold(&svd.singular_values, r, c, None);
    let inv_s = svd
        .singular_values
        .map(|s| if s > thr { 1.0 / s } else { 0.0 });
    svd.v_t.transpose() * Matrix::from_diagonal(&inv_s) * svd.u.transpose()
}

pub fn smallest_singular_value(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return f64::INFINITY;
    }
    singular_values(m)
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

pub fn condition_number(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 1.0;
    }
    let s = singular_values(m);
    let smax = s.iter().fold(0.0_f64, |a, &b| a.max(b));
    let smin = s.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

// ---------------------------------------------------------------------------
// Spectra

pub fn eigenvalues(a: &Matrix) -> Vec<Complex64> {
    a.complex_eigenvalues().iter().copied().collect()
}

/// Groups nearly equal eigenvalues and returns the cluster means, sorted and
/// closed under conjugation.
pub fn distinct_eigenvalues(a: &Matrix, cluster_tol: f64) -> Vec<Complex64> {
    let eigs = eigenvalues(a);
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for e in eigs {
        let scale = e.norm().max(1.0);
        match clusters.iter_mut().find(|c| {
            let mean = c.iter().sum::<Complex64>() / c.len() as f64;
            (mean - e).norm() <= cluster_tol * scale
        }) {
            Some(c) => c.push(e),
            None => clusters.push(vec![e]),
        }
    }
    let mut means: Vec<Complex64> = clusters
        .iter()
        .map(|c| c.iter().sum::<Complex64>() / c.len() as f64)
        .collect();
    // Real clusters snap to the real axis; complex ones pair with their
    // conjugate partner.
    for m in means.iter_mut() {
        if m.im.abs() <= cluster_tol * m.norm().max(1.0) {
            m.im = 0.0;
        }
    }
    let mut out: Vec<Complex64> = Vec::new();
    for m in &means {
        if m.im < 0.0 {
            continue;
        }
        out.push(*m);
        if m.im > 0.0 {
            out.push(m.conj());
        }
    }
    out.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    out
}

/// Real coefficients (lowest degree first) of prod (x - r) over a
/// conjugation-closed root list.
fn real_poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        coeffs = next;
    }
    coeffs.iter().map(|c| c.re).collect()
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * i as f64)
        .collect()
}

/// Horner evaluation of a real polynomial at a matrix.
pub fn poly_eval_matrix(coeffs: &[f64], a: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut acc = Matrix::zeros(n, n);
    for c in coeffs.iter().rev() {
        acc = &acc * a + Matrix::identity(n, n) * *c;
    }
    acc
}

/// Residual of the squarefree minimal-polynomial test: a matrix is
/// semisimple iff the product of (S - mu I) over its distinct eigenvalues
/// vanishes.
pub fn semisimplicity_residual(s: &Matrix, cluster_tol: f64) -> f64 {
    let roots = distinct_eigenvalues(s, cluster_tol);
    let p = real_poly_from_roots(&roots);
    let scale = max_abs(s).max(1.0).powi(roots.len() as i32);
    max_abs(&poly_eval_matrix(&p, s)) / scale
}

pub fn is_semisimple(s: &Matrix, tol: f64) -> bool {
    semisimplicity_residual(s, 1e-6) <= tol
}

/// A spectral block of a semisimple matrix: either a real eigenvalue or a
/// conjugate pair (represented by the member with positive imaginary part).
#[derive(Debug, Clone)]
pub struct SpectralBlock {
    pub eigenvalue: Complex64,
    /// Real projector onto V_λ ∩ ℝⁿ (real λ) or W_λ = (V_λ ⊕ V_λ̄) ∩ ℝⁿ.
    pub projector: Matrix,
}

/// Real spectral projectors of a semisimple matrix, via Lagrange interpolation
/// over its distinct eigenvalues.
pub fn spectral_blocks(s: &Matrix, cluster_tol: f64) -> Vec<SpectralBlock> {
    let n = s.nrows();
    let roots = distinct_eigenvalues(s, cluster_tol);
    let sc = s.map(|v| Complex64::new(v, 0.0));
    let id = DMatrix::<Complex64>::identity(n, n);
    let mut blocks = Vec::new();
    for (j, mu) in roots.iter().enumerate() {
        if mu.im < 0.0 {
            continue;
        }
        let mut p = id.clone();
        for (i, nu) in roots.iter().enumerate() {
            if i == j {
                continue;
            }
            p *= (&sc - &id * *nu) / (mu - nu);
        }
        let real = if mu.im > 0.0 {
            p.map(|z| 2.0 * z.re)
        } else {
            p.map(|z| z.re)
        };
        blocks.push(SpectralBlock {
            eigenvalue: *mu,
            projector: real,
        });
    }
    blocks
}

// ---------------------------------------------------------------------------
// Decompositions

/// Additive Jordan-Chevalley decomposition A = S + N.
#[derive(Debug, Clone, PartialEq)]
pub struct JcDecomposition {
    pub semisimple: Matrix,
    pub nilpotent: Matrix,
}

/// Multiplicative decomposition A = S·exp(L) with S semisimple, L nilpotent,
/// SL = LS.
#[derive(Debug, Clone, PartialEq)]
pub struct SuDecomposition {
    pub semisimple: Matrix,
    pub nil_log: Matrix,
}

fn jc_invariant_residual(a: &Matrix, s: &Matrix, n: &Matrix) -> f64 {
    let dim = a.nrows();
    let scale = max_abs(a).max(1.0);
    let comm = max_abs(&(s * n - n * s)) / (scale * scale);
    let mut pow = Matrix::identity(dim, dim);
    for _ in 0..dim {
        pow = &pow * n;
    }
    let nil = max_abs(&pow) / scale.powi(dim as i32);
    let recon = max_abs(&(s + n - a)) / scale;
    comm.max(nil).max(recon)
}

/// Chevalley's Newton iteration S ← S − p(S)·p'(S)⁻¹ on the squarefree
/// polynomial with the (clustered) eigenvalues of A as roots.
fn chevalley_newton(a: &Matrix, cluster_tol: f64) -> Option<Matrix> {
    let roots = distinct_eigenvalues(a, cluster_tol);
    let p = real_poly_from_roots(&roots);
    let dp = poly_derivative(&p);
    let mut s = a.clone();
    for _ in 0..64 {
        let ps = poly_eval_matrix(&p, &s);
        let dps = poly_eval_matrix(&dp, &s);
        // p(S) and p'(S) commute, so p'(S)⁻¹p(S) = p(S)p'(S)⁻¹.
        let step = dps.lu().solve(&ps)?;
        let next = &s - &step;
        let delta = max_abs(&(&next - &s));
        s = next;
        if delta <= 1e-15 * max_abs(&s).max(1.0) {
            break;
        }
    }
    Some(s)
}

pub fn jordan_chevalley(a: &Matrix) -> Result<JcDecomposition> {
    check_invertible(a)?;
    let mut best: Option<(f64, Matrix)> = None;
    // Defective eigenvalues split by ~eps^(1/m) in floating point; try a
    // ladder of clustering tolerances and keep the first that satisfies all
    // invariants.
    for &ct in &[1e-4, 1e-6, 1e-8, 1e-3, 1e-10, 1e-2] {
        let Some(s) = chevalley_newton(a, ct) else {
            continue;
        };
        let n = a - &s;
        let res = jc_invariant_residual(a, &s, &n);
        let ss = semisimplicity_residual(&s, 1e-6);
        let total = res.max(ss);
        if total <= DECOMPOSITION_TOL {
            return Ok(JcDecomposition {
                semisimple: s,
                nilpotent: n,
            });
        }
        if best.as_ref().is_none_or(|(r, _)| total < *r) {
            best = Some((total, s));
        }
    }
    Err(Error::NoConvergence {
        what: "jordan-chevalley".into(),
        iterations: 64,
        residual: best.map_or(f64::INFINITY, |(r, _)| r),
    })
}

pub fn su_decomposition(a: &Matrix) -> Result<SuDecomposition> {
    let jc = jordan_chevalley(a)?;
    let s_inv = inverse(&jc.semisimple)?;
    let n = a.nrows();
    let unipotent = Matrix::identity(n, n) + &s_inv * &jc.nilpotent;
    let nil_log = matrix_log_unipotent(&unipotent)?;
    Ok(SuDecomposition {
        semisimple: jc.semisimple,
        nil_log,
    })
}

// ---------------------------------------------------------------------------
// exp / log

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn matrix_exp(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let norm = a.norm();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * scale;
    let mut term = Matrix::identity(n, n);
    let mut sum = term.clone();
    for j in 1..=20 {
        term = &term * &x / j as f64;
        sum += &term;
        if max_abs(&term) < 1e-18 * max_abs(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Logarithm of a unipotent matrix by the terminating series
/// Σ (−1)^{j+1} (U − I)^j / j, j ≤ n.
pub fn matrix_log_unipotent(u: &Matrix) -> Result<Matrix> {
    let n = check_square(u)?;
    let m = u - Matrix::identity(n, n);
    let scale = max_abs(&m).max(1.0);
    let mut pow = Matrix::identity(n, n);
    for _ in 0..n {
        pow = &pow * &m;
    }
    let residual = max_abs(&pow) / scale.powi(n as i32);
    if residual > 1e-10 {
        return Err(Error::NotUnipotent { residual });
    }
    let mut sum = Matrix::zeros(n, n);
    let mut pow = Matrix::identity(n, n);
    for j in 1..n {
        pow = &pow * &m;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        sum += &pow * (sign / j as f64);
    }
    Ok(sum)
}

/// Denman-Beavers square root; fails when the iteration does not settle
/// (e.g. eigenvalues on the negative real axis).
fn matrix_sqrt(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = Matrix::identity(n, n);
    for _ in 0..100 {
        let yi = inverse(&y)
            .map_err(|_| Error::NoRealLogarithm("singular square-root iterate".into()))?;
        let zi = inverse(&z)
            .map_err(|_| Error::NoRealLogarithm("singular square-root iterate".into()))?;
        let ny = (&y + zi) * 0.5;
        let nz = (&z + yi) * 0.5;
        let delta = max_abs(&(&ny - &y));
        y = ny;
        z = nz;
        if delta <= 1e-15 * max_abs(&y).max(1.0) {
            return Ok(y);
        }
    }
    Err(Error::NoRealLogarithm(
        "square-root iteration did not converge".into(),
    ))
}

/// Principal real logarithm of a matrix whose spectrum avoids the closed
/// negative real axis, by inverse scaling and squaring.
pub fn matrix_log(a: &Matrix) -> Result<Matrix> {
    let n = check_square(a)?;
    let id = Matrix::identity(n, n);
    if let Ok(l) = matrix_log_unipotent(a) {
        return Ok(l);
    }
    for e in eigenvalues(a) {
        if e.im.abs() <= 1e-12 && e.re <= 0.0 {
            return Err(Error::NoRealLogarithm(format!(
                "eigenvalue {} on the closed negative real axis",
                e.re
            )));
        }
    }
    let mut x = a.clone();
    let mut roots = 0;
    while (&x - &id).norm() > 0.25 {
        x = matrix_sqrt(&x)?;
        roots += 1;
        if roots > 60 {
            return Err(Error::NoRealLogarithm("too many square roots".into()));
        }
    }
    let m = &x - &id;
    let mut sum = Matrix::zeros(n, n);
    let mut pow = id.clone();
    for j in 1..=60 {
        pow = &pow * &m;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        let term = &pow * (sign / j as f64);
        sum += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    Ok(sum * 2f64.powi(roots))
}

// ---------------------------------------------------------------------------
// Inner products

/// Symmetric positive definite Gram matrix defining ⟨x, y⟩ = xᵀ G y and the
/// involution A* = G⁻¹ Aᵀ G.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedInnerProduct {
    gram: Matrix,
    gram_inv: Matrix,
}

impl AdaptedInnerProduct {
    pub fn new(gram: Matrix) -> Result<Self> {
        let n = check_square(&gram)?;
        let asym = max_abs(&(&gram - gram.transpose()));
        if asym > 1e-10 * max_abs(&gram).max(1.0) {
            return Err(Error::InvalidInput(format!(
                "Gram matrix is not symmetric (asymmetry {asym:e})"
            )));
        }
        let sym = (&gram + gram.transpose()) * 0.5;
        let min_eig = sym
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if min_eig.is_nan() || min_eig <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "Gram matrix is not positive definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        let gram_inv = inverse(&sym)?;
        debug_assert_eq!(gram_inv.nrows(), n);
        Ok(Self {
            gram: sym,
            gram_inv,
        })
    }

    pub fn standard(n: usize) -> Self {
        Self {
            gram: Matrix::identity(n, n),
            gram_inv: Matrix::identity(n, n),
        }
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn inner(&self, x: &Vector, y: &Vector) -> f64 {
        x.dot(&(&self.gram * y))
    }

    /// A* = G⁻¹ Aᵀ G, so that ⟨Ax, y⟩ = ⟨x, A*y⟩.
    pub fn adjoint(&self, a: &Matrix) -> Matrix {
        &self.gram_inv * a.transpose() * &self.gram
    }
}

pub fn adjoint_wrt(ip: &AdaptedInnerProduct, a: &Matrix) -> Matrix {
    ip.adjoint(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn svd_reproduces_matrix_that_breaks_bidiagonal_iteration() {
        // Column-major; the plain dynamic SVD misses this one by ~3e-3.
        let a = Matrix::from_column_slice(
            3,
            3,
            &[
                -0.037666906809750045,
                0.01723571900436105,
                -0.12400455021255191,
                0.18380998744259958,
                -0.5928848728638165,
                0.28767647496659926,
                -0.15643611290055845,
                -0.21431542162681447,
                -0.6933946217686893,
            ],
        );
        let d = svd(&a);
        let back = &d.u * Matrix::from_diagonal(&d.singular_values) * &d.v_t;
        assert!(max_abs(&(back - &a)) < 1e-13);
        let im = image_basis(&a, None);
        assert_eq!(im.ncols(), 2);
        let p = &im * im.transpose();
        assert!(max_abs(&(&p * &a - &a)) < 1e-14);
    }

    #[test]
    fn jacobi_svd_matches_reconstruction() {
        let a = dmatrix![1.0, 2.0, 0.5; -0.3, 0.7, 1.1; 2.0, -1.0, 0.0; 0.1, 0.2, 0.3];
        let d = jacobi_svd(&a);
        let back = &d.u * Matrix::from_diagonal(&d.singular_values) * &d.v_t;
        assert!(max_abs(&(back - &a)) < 1e-14);
        assert!(max_abs(&(d.v_t.transpose() * &d.v_t - Matrix::identity(3, 3))) < 1e-14);
    }

    #[test]
    fn nonsymmetric_jordan_block_decomposes() {
        // P (J + D) P⁻¹ with a 2×2 Jordan block at 2 and D = 0.5.
        let a = dmatrix![2.5, 0.5, -0.5; 0.75, 1.25, -0.75; 1.25, -0.25, 0.75];
        let s = dmatrix![2.0, 0.0, 0.0; 0.75, 1.25, -0.75; 0.75, -0.75, 1.25];
        let n = dmatrix![0.5, 0.5, -0.5; 0.0, 0.0, 0.0; 0.5, 0.5, -0.5];
        let jc = jordan_chevalley(&a).unwrap();
        assert!(max_abs(&(&jc.semisimple - s)) <= 1e-12);
        assert!(max_abs(&(&jc.nilpotent - n)) <= 1e-12);
    }

    #[test]
    fn quadrant_linearization_decomposes() {
        let a = dmatrix![3.0, -2.0; 2.0, -1.0];
        let jc = jordan_chevalley(&a).unwrap();
        assert!(max_abs(&(&jc.semisimple - Matrix::identity(2, 2))) <= 1e-12);
        assert!(max_abs(&(&jc.nilpotent - dmatrix![2.0, -2.0; 2.0, -2.0])) <= 1e-12);
        let su = su_decomposition(&a).unwrap();
        assert!(max_abs(&(&su.nil_log - dmatrix![2.0, -2.0; 2.0, -2.0])) <= 1e-12);
    }

    #[test]
    fn diagonal_is_semisimple() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, -1.0, 0.5]));
        let jc = jordan_chevalley(&a).unwrap();
        assert_eq!(jc.semisimple, a);
        assert!(max_abs(&jc.nilpotent) == 0.0);
    }

    #[test]
    fn singular_input_rejected() {
        let a = dmatrix![1.0, 2.0; 2.0, 4.0];
        assert!(matches!(
            jordan_chevalley(&a),
            Err(Error::SingularInput { .. })
        ));
    }

    #[test]
    fn orthogonal_matrix_has_trivial_log() {
        let t: f64 = 0.7;
        let a = dmatrix![t.cos(), -t.sin(); t.sin(), t.cos()];
        let su = su_decomposition(&a).unwrap();
        assert!(max_abs(&(&su.semisimple - &a)) <= 1e-12);
        assert!(max_abs(&su.nil_log) <= 1e-12);
    }

    #[test]
    fn exp_of_zero_and_log_of_square_zero() {
        assert_eq!(matrix_exp(&Matrix::zeros(3, 3)), Matrix::identity(3, 3));
        let n0 = dmatrix![2.0, -2.0; 2.0, -2.0];
        let l = matrix_log_unipotent(&(Matrix::identity(2, 2) + &n0)).unwrap();
        assert!(max_abs(&(l - n0)) <= 1e-15);
    }

    #[test]
    fn non_unipotent_log_rejected() {
        let u = dmatrix![2.0, 0.0; 0.0, 1.0];
        assert!(matches!(
            matrix_log_unipotent(&u),
            Err(Error::NotUnipotent { .. })
        ));
        assert!(matches!(
            matrix_log(&dmatrix![-1.0, 0.0; 0.0, 1.0]),
            Err(Error::NoRealLogarithm(_))
        ));
    }

    #[test]
    fn general_log_inverts_exp() {
        let m = dmatrix![0.3, -0.2, 0.1; 0.05, -0.4, 0.2; 0.0, 0.1, 0.25];
        let l = matrix_log(&matrix_exp(&m)).unwrap();
        assert!(max_abs(&(l - m)) <= 1e-13);
    }

    #[test]
    fn kernel_and_image_extremes() {
        let z = Matrix::zeros(3, 3);
        assert_eq!(kernel_basis(&z, None).ncols(), 3);
        assert_eq!(image_basis(&z, None).ncols(), 0);
        let i = Matrix::identity(3, 3);
        assert_eq!(kernel_basis(&i, None).ncols(), 0);
        assert_eq!(image_basis(&i, None).ncols(), 3);
        let wide = dmatrix![1.0, 1.0, 0.0];
        assert_eq!(kernel_basis(&wide, None).ncols(), 2);
    }

    #[test]
    fn adjoint_under_standard_product_is_transpose() {
        let a = dmatrix![1.0, 2.0; 3.0, 4.0];
        let ip = AdaptedInnerProduct::standard(2);
        assert_eq!(ip.adjoint(&a), a.transpose());
    }

    #[test]
    fn adjoint_is_an_involution() {
        let g = dmatrix![2.0, 0.5; 0.5, 1.0];
        let ip = AdaptedInnerProduct::new(g).unwrap();
        let a = dmatrix![1.0, -2.0; 0.3, 4.0];
        assert!(max_abs(&(ip.adjoint(&ip.adjoint(&a)) - a)) <= 1e-13);
    }

    #[test]
    fn non_spd_gram_rejected() {
        assert!(AdaptedInnerProduct::new(dmatrix![1.0, 2.0; 2.0, 1.0]).is_err());
        assert!(AdaptedInnerProduct::new(dmatrix![1.0, 2.0; 0.0, 1.0]).is_err());
    }

    #[test]
    fn subspace_intersection() {
        let a = dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0];
        let b = dmatrix![0.0, 1.0; 1.0, 0.0; 0.0, 1.0];
        let c = intersect_subspaces(&a, &b, None);
        assert_eq!(c.ncols(), 1);
        assert!((c[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }
}
