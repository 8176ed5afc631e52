//! Search for q-periodic points through the determining equation
//! ψ_r(u) = S₀u.

use serde::{Deserialize, Serialize};

use super::{bifurcation_coords, reduce_at, LiftContext, ReductionOptions};
use crate::error::{Error, Result};
use crate::linalg::{kernel_basis, pseudo_inverse, Matrix, Vector};
use crate::normalform::FamilySample;
use crate::polymap::TruncatedMap;

/// Starting points on a regular grid in [−radius, radius]^r (u-coordinates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub radius: f64,
    pub points_per_axis: usize,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            radius: 0.05,
            points_per_axis: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    pub lambda: Vec<f64>,
    /// Solution in ℝⁿ (lies in U).
    pub u: Vec<f64>,
    pub u_coords: Vec<f64>,
    pub x_star: Vec<f64>,
    /// u, S₀u, …, S₀^{q−1}u.
    pub orbit: Vec<Vec<f64>>,
    pub orbit_id: usize,
    /// ‖ψ_r(u) − S₀u‖.
    pub residual: f64,
    /// ‖ψ^q(x*) − x*‖.
    pub lifted_residual: f64,
    /// False when the Jacobian of the determining equation is rank
    /// deficient and nearby solutions exist along its null space.
    pub isolated: bool,
    pub null_dim: usize,
}

/// Newton (minimum-norm steps) for ψ_r(u) − S₀u = 0 in u-coordinates.
/// Returns the solution, its residual and the Jacobian there.
pub fn solve_determining(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    start: &Vector,
    opts: &ReductionOptions,
) -> Result<(Vector, f64, Matrix)> {
    let mut u = start.clone();
    let mut last = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let p = reduce_at(psi, ctx, &u, opts)?;
        let f = &p.psi_r - &ctx.s0_u * &u;
        let jac = p.jacobian - &ctx.s0_u;
        let res = f.amax();
        let step = pseudo_inverse(&jac) * &f;
        if res == 0.0
            || step.amax() <= 8.0 * f64::EPSILON * u.amax().max(1e-300)
            || (res >= last && res < 1e-13)
        {
            return Ok((u, res, jac));
        }
        last = res;
        u -= step;
    }
    let p = reduce_at(psi, ctx, &u, opts)?;
    let f = &p.psi_r - &ctx.s0_u * &u;
    Ok((u, f.amax(), p.jacobian - &ctx.s0_u))
}

/// Newton with central-difference Jacobian for B(u) = 0 in u-coordinates.
pub fn solve_bifurcation_zero(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    start: &Vector,
    opts: &ReductionOptions,
) -> Result<(Vector, f64)> {
    let r = ctx.r();
    let mut u = start.clone();
    let mut res = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let f = bifurcation_coords(psi, ctx, &u, opts)?;
        res = f.amax();
        if res <= 1e-15 * u.amax().max(1e-300) {
            break;
        }
        let h = 1e-6 * u.amax().max(1e-4);
        let mut jac = Matrix::zeros(r, r);
        for c in 0..r {
            let mut e = Vector::zeros(r);
            e[c] = h;
            let plus = bifurcation_coords(psi, ctx, &(&u + &e), opts)?;
            let minus = bifurcation_coords(psi, ctx, &(&u - &e), opts)?;
            jac.set_column(c, &((plus - minus) / (2.0 * h)));
        }
        let step = pseudo_inverse(&jac) * &f;
        u -= &step;
        if step.amax() <= 8.0 * f64::EPSILON * u.amax().max(1e-300) {
            res = bifurcation_coords(psi, ctx, &u, opts)?.amax();
            break;
        }
    }
    Ok((u, res))
}

/// Lexicographically smallest point of {S₀^j u}, compared with a tolerance.
pub fn canonical_representative(ctx: &LiftContext, u: &Vector) -> Vector {
    let mut best = u.clone();
    let mut cur = u.clone();
    for _ in 1..ctx.q {
        cur = &ctx.s0 * cur;
        if lex_less(&cur, &best, 1e-9) {
            best = cur.clone();
        }
    }
    best
}

fn lex_less(a: &Vector, b: &Vector, tol: f64) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if (x - y).abs() > tol {
            return x < y;
        }
    }
    false
}

/// ‖ψ^q(x) − x‖ using the map itself.
pub fn lifted_periodicity_residual(psi: &TruncatedMap, x: &Vector, q: usize) -> f64 {
    let mut y = x.clone();
    for _ in 0..q {
        y = psi.eval_vec(&y);
    }
    (y - x).amax()
}

fn grid(r: usize, b: &SearchBox) -> Vec<Vector> {
    let p = b.points_per_axis.max(1);
    let axis: Vec<f64> = if p == 1 {
        vec![0.0]
    } else {
        (0..p)
            .map(|i| -b.radius + 2.0 * b.radius * i as f64 / (p - 1) as f64)
            .collect()
    };
    let mut out = vec![Vector::zeros(r)];
    for d in 0..r {
        let mut next = Vec::with_capacity(out.len() * p);
        for v in &out {
            for &a in &axis {
                let mut w = v.clone();
                w[d] = a;
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// Periodic points for every sample. Starting points that fail to converge
/// are dropped; solutions are merged by ℤ_q orbit.
pub fn find_periodic(
    family: &[FamilySample],
    ctx: &LiftContext,
    search: &SearchBox,
    opts: &ReductionOptions,
) -> Result<Vec<PeriodicPoint>> {
    let r = ctx.r();
    let mut out: Vec<PeriodicPoint> = Vec::new();
    for sample in family {
        let psi = &sample.map;
        if psi.dim() != ctx.n {
            return Err(Error::DimensionMismatch {
                expected: ctx.n,
                got: psi.dim(),
            });
        }
        let mut reps: Vec<Vector> = Vec::new();
        for start in grid(r, search) {
            let Ok((u, res, jac)) = solve_determining(psi, ctx, &start, opts) else {
                continue;
            };
            if res > 1e-10 || u.norm() > opts.radius {
                continue;
            }
            let ambient = ctx.from_u_coords(&u);
            let rep = canonical_representative(ctx, &ambient);
            if reps.iter().any(|q| (q - &rep).amax() < 1e-7) {
                continue;
            }
            reps.push(rep);
            let s = crate::linalg::singular_values(&jac);
            let smax = s.iter().fold(0.0_f64, |a, &b| a.max(b)).max(1.0);
            let null = kernel_basis(&jac, Some(1e-8 * smax));
            let isolated =
                null.ncols() == 0 || !has_nearby_solutions(psi, ctx, &u, &null, search, opts);
            let Ok(x_star) = super::xstar(psi, ctx, &ambient, opts) else {
                continue;
            };
            let mut orbit = Vec::with_capacity(ctx.q);
            let mut cur = ambient.clone();
            for _ in 0..ctx.q {
                orbit.push(cur.iter().copied().collect());
                cur = &ctx.s0 * cur;
            }
            out.push(PeriodicPoint {
                lambda: sample.lambda.clone(),
                u: ambient.iter().copied().collect(),
                u_coords: u.iter().copied().collect(),
                lifted_residual: lifted_periodicity_residual(psi, &x_star, ctx.q),
                x_star: x_star.iter().copied().collect(),
                orbit,
                orbit_id: reps.len() - 1,
                residual: res,
                isolated,
                null_dim: null.ncols(),
            });
        }
    }
    Ok(out)
}

/// A rank-deficient solution is part of a family if re-solving from a point
/// displaced along each null direction lands on a different solution.
fn has_nearby_solutions(
    psi: &TruncatedMap,
    ctx: &LiftContext,
    u: &Vector,
    null: &Matrix,
    search: &SearchBox,
    opts: &ReductionOptions,
) -> bool {
    let delta = 0.1 * search.radius.max(1e-6);
    (0..null.ncols()).all(|c| {
        let start = u + null.column(c) * delta;
        match solve_determining(psi, ctx, &start, opts) {
            Ok((v, res, _)) => res <= 1e-10 && (&v - u).norm() > 0.5 * delta,
            Err(_) => false,
        }
    })
}
