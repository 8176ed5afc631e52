//! Lyapunov–Schmidt reduction of the q-periodic point problem
//! ψ_λ^q(x) = x to the reduced phase space U = ker(S₀^q − I).
//!
//! The problem is lifted to ψ̂(y) = σy on Y_q, which splits along
//! Y_q = ξ(U) ⊕ Im(Ŝ₀ − σ). Points y = ξ(u) + v are handled in coordinates:
//! u-coordinates on an orthonormal basis of U and w-coordinates on an
//! orthonormal basis of the complement.

pub mod lift;
mod periodic;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, max_abs, Matrix, Vector};
use crate::polymap::TruncatedMap;

pub use lift::{
    block_diag, build_lift, build_lift_from_linear, lift_group_element, lift_invariant_residuals,
    shift_matrix, LiftContext, LIFT_TOL,
};
pub use periodic::{
    canonical_representative, find_periodic, lifted_periodicity_residual, solve_bifurcation_zero,
    solve_determining, PeriodicPoint, SearchBox,
};

pub const DEFAULT_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionOptions {
    /// Required residual of the complement equation.
    pub tol: f64,
    pub max_iter: usize,
    /// Trust radius for ‖u‖.
    pub radius: f64,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 60,
            radius: DEFAULT_RADIUS,
        }
    }
}

/// ψ̂(y) = (ψ(y_i))_i.
pub fn lift_eval(psi: &TruncatedMap, ctx: &LiftContext, y: &Vector) -> Vector {
    let n = ctx.n;
    let mut out = Vector::zeros(y.len());
    for i in 0..ctx.q {
        let x: Vec<f64> = y.rows(i * n, n).iter().copied().collect();
        out.rows_mut(i * n, n).copy_from(&psi.eval(&x));
    }
    out
}

/// Dψ̂(y) = blockdiag(Dψ(y_i)).
pub fn lift_jacobian(psi: &TruncatedMap, ctx: &LiftContext, y: &Vector) -> Matrix {
    let n = ctx.n;
    let mut out = Matrix::zeros(y.len(), y.len());
    for i in 0..ctx.q {
        let x: Vec<f64> = y.rows(i * n, n).iter().copied().collect();
        out.view_mut((i * n, i * n), (n, n))
            .copy_from(&psi.jacobian(&x));
    }
    out
}

/// Solution of the complement equation at one u, with everything derived
/// from it.
#[derive(Debug, Clone)]
pub struct ReducedPoint {
    pub u_coords: Vector,
    /// v* in w-coordinates.
    pub w: Vector,
    /// v* in Y_q.
    pub v: Vector,
    /// ψ_r(u) in u-coordinates.
    pub psi_r: Vector,
    /// Dψ_r(u) in u-coordinates.
    pub jacobian: Matrix,
    /// ‖Σ(u, v*) − σv*‖ in w-coordinates.
    pub residual: f64,
    pub iterations: usize,
}

/// Newton solve of Σ(u, v) = σv for v ∈ Im(Ŝ₀ − σ), starting from v = 0,
/// with the exact Jacobian of the lifted map.
pub fn reduce_at(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    u_coords: &Vector,
    opts: &ReductionOptions,
) -> Result<ReducedPoint> {
    if psi.dim() != ctx.n {
        return Err(Error::DimensionMismatch {
            expected: ctx.n,
            got: psi.dim(),
        });
    }
    let unorm = u_coords.norm();
    if unorm > opts.radius {
        return Err(Error::NoConvergence {
            what: format!(
                "complement equation: ‖u‖ = {unorm:e} exceeds the trust radius {}",
                opts.radius
            ),
            iterations: 0,
            residual: f64::NAN,
        });
    }
    let r = ctx.r();
    let m = ctx.m();
    let xu = &ctx.xi_basis * u_coords;
    let wb = &ctx.complement_basis;
    let mut w = Vector::zeros(m);
    let mut iterations = 0;
    let scale = xu.amax().max(f64::MIN_POSITIVE);
    let split = |img: &Vector| {
        let c = &ctx.coords * img;
        (c.rows(0, r).into_owned(), c.rows(r, m).into_owned())
    };
    let mut residual;
    loop {
        let y = &xu + wb * &w;
        let (_, sw) = split(&lift_eval(psi, ctx, &y));
        let f = sw - &ctx.sigma_w * &w;
        residual = f.amax();
        if m == 0 || residual == 0.0 || iterations >= opts.max_iter {
            break;
        }
        let jac = &ctx.coords * lift_jacobian(psi, ctx, &y) * wb;
        let jw = jac.rows(r, m) - &ctx.sigma_w;
        let step = jw.lu().solve(&f).ok_or(Error::NoConvergence {
            what: "complement equation: singular Jacobian".into(),
            iterations,
            residual,
        })?;
        w -= &step;
        iterations += 1;
        // Quadratic convergence: stop once the step reaches rounding level.
        if step.amax() <= 8.0 * f64::EPSILON * (w.amax() + scale) {
            let y = &xu + wb * &w;
            let (_, sw) = split(&lift_eval(psi, ctx, &y));
            residual = (sw - &ctx.sigma_w * &w).amax();
            break;
        }
    }
    if residual.is_nan() || residual > opts.tol {
        return Err(Error::NoConvergence {
            what: format!("complement equation at ‖u‖ = {unorm:e}; try a smaller radius"),
            iterations,
            residual,
        });
    }
    let y = &xu + wb * &w;
    let (psi_r, _) = split(&lift_eval(psi, ctx, &y));
    let jac =
        &ctx.coords * lift_jacobian(psi, ctx, &y) * crate::normalform::hcat(&ctx.xi_basis, wb);
    let juu = jac.view((0, 0), (r, r)).into_owned();
    let jacobian = if m == 0 {
        juu
    } else {
        let juw = jac.view((0, r), (r, m));
        let jwu = jac.view((r, 0), (m, r));
        let jww = jac.view((r, r), (m, m)) - &ctx.sigma_w;
        let dw = jww
            .lu()
            .solve(&(-jwu.into_owned()))
            .unwrap_or_else(|| Matrix::zeros(m, r));
        juu + juw * dw
    };
    Ok(ReducedPoint {
        u_coords: u_coords.clone(),
        v: wb * &w,
        w,
        psi_r,
        jacobian,
        residual,
        iterations,
    })
}

fn checked_coords(ctx: &LiftContext, u: &Vector) -> Result<Vector> {
    if u.len() != ctx.n {
        return Err(Error::DimensionMismatch {
            expected: ctx.n,
            got: u.len(),
        });
    }
    let defect = ctx.u_defect(u);
    if defect > 1e-9 {
        return Err(Error::NotInU { residual: defect });
    }
    Ok(ctx.u_coords(u))
}

/// v*(u) ∈ Im(Ŝ₀ − σ) ⊂ Y_q for u ∈ U given in ℝⁿ.
pub fn solve_vstar(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    u: &Vector,
    opts: &ReductionOptions,
) -> Result<Vector> {
    Ok(reduce_at(psi, ctx, &checked_coords(ctx, u)?, opts)?.v)
}

/// ψ_r(u) = Ψ(u, v*(u)) as a vector of ℝⁿ lying in U.
pub fn reduced_map(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    u: &Vector,
    opts: &ReductionOptions,
) -> Result<Vector> {
    let p = reduce_at(psi, ctx, &checked_coords(ctx, u)?, opts)?;
    Ok(ctx.from_u_coords(&p.psi_r))
}

/// x*(u) = block 0 of ξ(u) + v*(u).
pub fn xstar(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    u: &Vector,
    opts: &ReductionOptions,
) -> Result<Vector> {
    let c = checked_coords(ctx, u)?;
    let p = reduce_at(psi, ctx, &c, opts)?;
    Ok(ctx.from_u_coords(&c) + ctx.block(&p.v, 0))
}

/// ψ_r⁻¹(u) by Newton with the exact reduced Jacobian.
pub fn reduced_inverse_coords(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    target: &Vector,
    opts: &ReductionOptions,
) -> Result<Vector> {
    let a_inv = crate::linalg::inverse(&ctx.a0_u)
        .map_err(|_| Error::InverseNewtonFailed { residual: f64::NAN })?;
    let mut z = &a_inv * target;
    let scale = target.amax().max(f64::MIN_POSITIVE);
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let p =
            reduce_at(psi, ctx, &z, opts).map_err(|_| Error::InverseNewtonFailed { residual })?;
        let f = &p.psi_r - target;
        residual = f.amax();
        if residual == 0.0 {
            break;
        }
        let step = p
            .jacobian
            .clone()
            .lu()
            .solve(&f)
            .ok_or(Error::InverseNewtonFailed { residual })?;
        z -= &step;
        if step.amax() <= 8.0 * f64::EPSILON * (z.amax() + scale) {
            let p = reduce_at(psi, ctx, &z, opts)
                .map_err(|_| Error::InverseNewtonFailed { residual })?;
            residual = (&p.psi_r - target).amax();
            break;
        }
    }
    if residual > opts.tol.max(1e-14 * scale) * 10.0 {
        return Err(Error::InverseNewtonFailed { residual });
    }
    Ok(z)
}

pub fn reduced_inverse(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    u: &Vector,
    opts: &ReductionOptions,
) -> Result<Vector> {
    let c = checked_coords(ctx, u)?;
    Ok(ctx.from_u_coords(&reduced_inverse_coords(psi, ctx, &c, opts)?))
}

/// B(u) = S₀⁻¹ψ_r(u) − S₀ψ_r⁻¹(u), in u-coordinates.
pub fn bifurcation_coords(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    u_coords: &Vector,
    opts: &ReductionOptions,
) -> Result<Vector> {
    let fwd = reduce_at(psi, ctx, u_coords, opts)?.psi_r;
    let back = reduced_inverse_coords(psi, ctx, u_coords, opts)?;
    let s_inv = crate::linalg::inverse(&ctx.s0_u)?;
    Ok(s_inv * fwd - &ctx.s0_u * back)
}

pub fn bifurcation_fn(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    u: &Vector,
    opts: &ReductionOptions,
) -> Result<Vector> {
    let c = checked_coords(ctx, u)?;
    Ok(ctx.from_u_coords(&bifurcation_coords(psi, ctx, &c, opts)?))
}

/// ‖ĝv*(u) − σ^{(1−χ)/2} v*(g ψ_r^{(1−χ)/2}(u))‖ for group element `g_index`.
pub fn ghat_vstar_identity_check(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    u: &Vector,
    g_index: usize,
    opts: &ReductionOptions,
) -> Result<f64> {
    let g = ctx.gd.element(g_index);
    let gh = &ctx.g_hats[g_index];
    let lhs = gh * solve_vstar(psi, ctx, u, opts)?;
    let rhs = if ctx.gd.chi(g_index) == 1 {
        solve_vstar(psi, ctx, &(g * u), opts)?
    } else {
        let moved = g * reduced_map(psi, ctx, u, opts)?;
        &ctx.sigma * solve_vstar(psi, ctx, &moved, opts)?
    };
    Ok((lhs - rhs).amax())
}

/// Residuals of the reduced-map and bifurcation-function symmetries at u.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceResiduals {
    /// ‖ψ_r(S₀u) − S₀ψ_r(u)‖
    pub reduced_shift: f64,
    /// max_g ‖g ψ_r(g⁻¹u) − ψ_r^{χ(g)}(u)‖
    pub reduced_group: f64,
    /// ‖B(S₀u) − S₀B(u)‖
    pub bifurcation_shift: f64,
    /// max_g ‖B(gu) − χ(g) g B(u)‖
    pub bifurcation_group: f64,
    /// ‖v*(S₀u) − σv*(u)‖
    pub vstar_shift: f64,
    /// max_g of the ĝv* identity
    pub vstar_group: f64,
}

impl EquivarianceResiduals {
    pub fn max(&self) -> f64 {
        [
            self.reduced_shift,
            self.reduced_group,
            self.bifurcation_shift,
            self.bifurcation_group,
            self.vstar_shift,
            self.vstar_group,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn equivariance_residuals(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    u: &Vector,
    opts: &ReductionOptions,
) -> Result<EquivarianceResiduals> {
    let s0 = &ctx.s0;
    let su = s0 * u;
    let pr = reduced_map(psi, ctx, u, opts)?;
    let reduced_shift = (reduced_map(psi, ctx, &su, opts)? - s0 * &pr).amax();
    let b = bifurcation_fn(psi, ctx, u, opts)?;
    let bifurcation_shift = (bifurcation_fn(psi, ctx, &su, opts)? - s0 * &b).amax();
    let vstar_shift =
        (solve_vstar(psi, ctx, &su, opts)? - &ctx.sigma * solve_vstar(psi, ctx, u, opts)?).amax();
    let inv = reduced_inverse(psi, ctx, u, opts)?;
    let mut reduced_group = 0.0_f64;
    let mut bifurcation_group = 0.0_f64;
    let mut vstar_group = 0.0_f64;
    for (i, g) in ctx.gd.elements().iter().enumerate() {
        let g_inv = ctx.gd.inverse_element(i);
        let conj = g * reduced_map(psi, ctx, &(g_inv * u), opts)?;
        let target = if ctx.gd.chi(i) == 1 { &pr } else { &inv };
        reduced_group = reduced_group.max((conj - target).amax());
        let bg = bifurcation_fn(psi, ctx, &(g * u), opts)?;
        bifurcation_group = bifurcation_group.max((bg - g * &b * ctx.gd.chi(i) as f64).amax());
        vstar_group = vstar_group.max(ghat_vstar_identity_check(psi, ctx, u, i, opts)?);
    }
    Ok(EquivarianceResiduals {
        reduced_shift,
        reduced_group,
        bifurcation_shift,
        bifurcation_group,
        vstar_shift,
        vstar_group,
    })
}

/// Outcome of comparing the reduced map with a normal-form truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// (‖u‖, max over directions of ‖ψ_r(u) − ψ^NF(u)‖).
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope of log error against log ‖u‖; infinite when the
    /// error stays at rounding level.
    pub slope: f64,
    pub required_slope: f64,
    /// Largest distance between the spectra of Dψ_r(0) and Dψ^NF(0)|_U.
    pub eigenvalue_mismatch: f64,
    /// Largest |μ^q − 1| over eigenvalues μ of Dψ_r(0).
    pub root_of_unity_distance: f64,
}

/// Checks ψ_r(u) = ψ^NF(u) + O(|u|^{k+1}) by a log-log slope over
/// ‖u‖ ∈ [1e−4, 1e−2] along fixed directions in U, and compares spectra at
/// the origin.
pub fn nf_reduction_consistency(
    psi: &TruncatedMap,
    psi_nf: &TruncatedMap,
    ctx: &LiftContext,
    k: usize,
    opts: &ReductionOptions,
) -> Result<ConsistencyReport> {
    let r = ctx.r();
    let required = k as f64 + 1.0 - 0.2;
    let directions: Vec<Vector> = (0..r.max(1))
        .map(|i| {
            let mut d = Vector::from_fn(r, |j, _| 1.0 + 0.37 * ((i * 7 + j * 3) % 5) as f64);
            if r > 0 {
                d[i % r] += 1.5;
            }
            let nrm = d.norm().max(f64::MIN_POSITIVE);
            d / nrm
        })
        .collect();
    let mut samples = Vec::new();
    if r > 0 {
        for step in 0..=8 {
            let s = 10f64.powf(-4.0 + 2.0 * step as f64 / 8.0);
            let mut worst = 0.0_f64;
            for d in &directions {
                let c = d * s;
                let reduced = reduce_at(psi, ctx, &c, opts)?.psi_r;
                let nf = ctx.u_coords(&psi_nf.eval_vec(&ctx.from_u_coords(&c)));
                worst = worst.max((reduced - nf).norm());
            }
            samples.push((s, worst));
        }
    }
    let exact = samples.iter().all(|&(s, e)| e <= 64.0 * f64::EPSILON * s);
    let slope = if samples.is_empty() || exact {
        f64::INFINITY
    } else {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .map(|&(s, e)| (s.ln(), e.max(f64::MIN_POSITIVE).ln()))
            .collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    let (eigenvalue_mismatch, root_of_unity_distance) = if r > 0 {
        let jr = reduce_at(psi, ctx, &Vector::zeros(r), opts)?.jacobian;
        let nf_lin = ctx.u_basis.transpose() * psi_nf.linear() * &ctx.u_basis;
        let mut a = eigenvalues(&jr);
        let mut b = eigenvalues(&nf_lin);
        let key = |z: &num_complex::Complex64| (z.re, z.im);
        a.sort_by(|x, y| {
            key(x)
                .partial_cmp(&key(y))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        b.sort_by(|x, y| {
            key(x)
                .partial_cmp(&key(y))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mismatch = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        let dist = a
            .iter()
            .map(|z| (z.powu(ctx.q as u32) - 1.0).norm())
            .fold(0.0, f64::max);
        (mismatch, dist)
    } else {
        (0.0, 0.0)
    };
    let report = ConsistencyReport {
        samples,
        slope,
        required_slope: required,
        eigenvalue_mismatch,
        root_of_unity_distance,
    };
    if report.slope < required {
        return Err(Error::SlopeTestFailed {
            slope: report.slope,
            required,
        });
    }
    Ok(report)
}

/// Dψ_r(0) by central differences in u-coordinates, for cross-checks.
pub fn reduced_jacobian_fd(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    at: &Vector,
    h: f64,
    opts: &ReductionOptions,
) -> Result<Matrix> {
    let r = ctx.r();
    let mut j = Matrix::zeros(r, r);
    for c in 0..r {
        let mut e = Vector::zeros(r);
        e[c] = h;
        let plus = reduce_at(psi, ctx, &(at + &e), opts)?.psi_r;
        let minus = reduce_at(psi, ctx, &(at - &e), opts)?.psi_r;
        j.set_column(c, &((plus - minus) / (2.0 * h)));
    }
    Ok(j)
}

/// max |Dψ_r(0) − A₀|_U| using the analytic reduced Jacobian.
pub fn linearization_defect(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    opts: &ReductionOptions,
) -> Result<f64> {
    let p = reduce_at(psi, ctx, &Vector::zeros(ctx.r()), opts)?;
    Ok(max_abs(&(p.jacobian - &ctx.a0_u)))
}
