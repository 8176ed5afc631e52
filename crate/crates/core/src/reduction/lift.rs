//! The space Y_q of q-periodic sequences and the lifted operators on it.

use crate::error::{Error, Result};
use crate::group::GroupData;
use crate::linalg::{
    image_basis, inverse, jordan_chevalley, kernel_basis, max_abs, Matrix, Vector,
};

/// Tolerance for the structural identities checked when a context is built,
/// relative to the size of A₀ and of ξ on a basis of U.
pub const LIFT_TOL: f64 = 1e-11;

/// Y_q ≅ ℝ^{qn} with block i holding x_i.
#[derive(Debug, Clone)]
pub struct LiftContext {
    pub q: usize,
    pub n: usize,
    pub a0: Matrix,
    pub s0: Matrix,
    pub gd: GroupData,
    /// Left shift: (σx)_i = x_{i+1}.
    pub sigma: Matrix,
    pub s0_hat: Matrix,
    pub a0_hat: Matrix,
    /// ĝ per group element: (ĝx)_i = g·x_{χ(g)i}.
    pub g_hats: Vec<Matrix>,
    /// Orthonormal basis of U = ker(S₀^q − I), n × r.
    pub u_basis: Matrix,
    /// Orthonormal basis of Im(Ŝ₀ − σ), qn × (qn − r).
    pub complement_basis: Matrix,
    /// ξ applied to the columns of `u_basis`.
    pub xi_basis: Matrix,
    /// Inverse of [ξ(U) | complement]: maps y to (u-coordinates, w-coordinates).
    pub coords: Matrix,
    /// σ restricted to the complement, in w-coordinates.
    pub sigma_w: Matrix,
    /// S₀ restricted to U, in u-coordinates.
    pub s0_u: Matrix,
    /// A₀ restricted to U, in u-coordinates.
    pub a0_u: Matrix,
}

pub fn shift_matrix(n: usize, q: usize) -> Matrix {
    let mut s = Matrix::zeros(q * n, q * n);
    for i in 0..q {
        let j = (i + 1) % q;
        for c in 0..n {
            s[(i * n + c, j * n + c)] = 1.0;
        }
    }
    s
}

pub fn block_diag(m: &Matrix, q: usize) -> Matrix {
    let n = m.nrows();
    let mut out = Matrix::zeros(q * n, q * n);
    for i in 0..q {
        out.view_mut((i * n, i * n), (n, n)).copy_from(m);
    }
    out
}

pub fn lift_group_element(g: &Matrix, chi: i8, q: usize) -> Matrix {
    let n = g.nrows();
    let mut out = Matrix::zeros(q * n, q * n);
    for i in 0..q {
        let src = if chi == 1 { i } else { (q - i) % q };
        out.view_mut((i * n, src * n), (n, n)).copy_from(g);
    }
    out
}

fn violation(what: &str, residual: f64) -> Error {
    Error::InvariantViolation(format!("{what} (residual {residual:e})"))
}

impl LiftContext {
    pub fn r(&self) -> usize {
        self.u_basis.ncols()
    }

    /// Dimension of the complement Im(Ŝ₀ − σ).
    pub fn m(&self) -> usize {
        self.complement_basis.ncols()
    }

    pub fn u_coords(&self, u: &Vector) -> Vector {
        self.u_basis.transpose() * u
    }

    pub fn from_u_coords(&self, c: &Vector) -> Vector {
        &self.u_basis * c
    }

    /// Distance of u from U, relative to ‖u‖.
    pub fn u_defect(&self, u: &Vector) -> f64 {
        let back = self.from_u_coords(&self.u_coords(u));
        (u - back).amax() / u.amax().max(1.0)
    }

    /// ξ(u) = (S₀^i u)_i.
    pub fn xi(&self, u: &Vector) -> Result<Vector> {
        if u.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        let defect = self.u_defect(u);
        if defect > 1e-9 {
            return Err(Error::NotInU { residual: defect });
        }
        let mut out = Vector::zeros(self.q * self.n);
        let mut cur = u.clone();
        for i in 0..self.q {
            out.rows_mut(i * self.n, self.n).copy_from(&cur);
            cur = &self.s0 * cur;
        }
        Ok(out)
    }

    pub fn block(&self, y: &Vector, i: usize) -> Vector {
        y.rows(i * self.n, self.n).into_owned()
    }
}

/// Builds the lift and verifies its structural identities.
pub fn build_lift(a0: &Matrix, s0: &Matrix, gd: &GroupData, q: usize) -> Result<LiftContext> {
    if q == 0 {
        return Err(Error::InvalidInput("the period must be at least 1".into()));
    }
    let n = gd.dim();
    if a0.nrows() != n || s0.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a0.nrows(),
        });
    }
    let qn = q * n;
    let sigma = shift_matrix(n, q);
    let s0_hat = block_diag(s0, q);
    let a0_hat = block_diag(a0, q);
    let g_hats: Vec<Matrix> = gd
        .elements()
        .iter()
        .enumerate()
        .map(|(i, g)| lift_group_element(g, gd.chi(i), q))
        .collect();

    let mut s0q = Matrix::identity(n, n);
    for _ in 0..q {
        s0q = &s0q * s0;
    }
    let u_op = s0q - Matrix::identity(n, n);
    let u_basis = kernel_basis(&u_op, Some(1e-8 * max_abs(&u_op).max(1.0)));
    let diff = &s0_hat - &sigma;
    let complement_basis = image_basis(&diff, Some(1e-8 * max_abs(&diff).max(1.0)));
    let r = u_basis.ncols();
    if r + complement_basis.ncols() != qn {
        return Err(violation(
            "dim U + dim Im(Ŝ₀ − σ) must equal qn",
            (r + complement_basis.ncols()) as f64 - qn as f64,
        ));
    }
    let mut ctx = LiftContext {
        q,
        n,
        a0: a0.clone(),
        s0: s0.clone(),
        gd: gd.clone(),
        sigma,
        s0_hat,
        a0_hat,
        g_hats,
        u_basis: u_basis.clone(),
        complement_basis,
        xi_basis: Matrix::zeros(qn, r),
        coords: Matrix::zeros(qn, qn),
        sigma_w: Matrix::zeros(0, 0),
        s0_u: u_basis.transpose() * s0 * &u_basis,
        a0_u: u_basis.transpose() * a0 * &u_basis,
    };
    for c in 0..r {
        let col = ctx.xi(&u_basis.column(c).into_owned())?;
        ctx.xi_basis.set_column(c, &col);
    }
    let full = crate::normalform::hcat(&ctx.xi_basis, &ctx.complement_basis);
    ctx.coords =
        inverse(&full).map_err(|_| violation("ξ(U) and Im(Ŝ₀ − σ) are not complementary", 0.0))?;
    let m = ctx.m();
    ctx.sigma_w = ctx.coords.rows(r, m) * &ctx.sigma * &ctx.complement_basis;
    let scale = max_abs(a0).max(1.0) * max_abs(&ctx.xi_basis).max(1.0);
    let worst = lift_invariant_residuals(&ctx)?;
    for (name, value) in worst {
        if value > LIFT_TOL * scale {
            return Err(violation(name, value));
        }
    }
    Ok(ctx)
}

/// Every structural identity of a lift with its residual.
pub fn lift_invariant_residuals(ctx: &LiftContext) -> Result<Vec<(&'static str, f64)>> {
    let qn = ctx.q * ctx.n;
    let id = Matrix::identity(qn, qn);
    let mut sigma_q = id.clone();
    for _ in 0..ctx.q {
        sigma_q = &sigma_q * &ctx.sigma;
    }
    let sigma_inv = ctx.sigma.transpose();
    let gd = &ctx.gd;
    let mut twist = 0.0_f64;
    let mut rep = 0.0_f64;
    let mut xi_g = 0.0_f64;
    for (i, gh) in ctx.g_hats.iter().enumerate() {
        let s = if gd.chi(i) == 1 {
            &ctx.sigma
        } else {
            &sigma_inv
        };
        twist = twist.max(max_abs(&(gh * &ctx.sigma - s * gh)));
        for (j, gh2) in ctx.g_hats.iter().enumerate() {
            let k = gd.product_index(i, j);
            rep = rep.max(max_abs(&(&ctx.g_hats[k] - gh * gh2)));
        }
        let g = gd.element(i);
        for c in 0..ctx.r() {
            let u = ctx.u_basis.column(c).into_owned();
            let lhs = gh * ctx.xi(&u)?;
            xi_g = xi_g.max((lhs - ctx.xi(&(g * &u))?).amax());
        }
    }
    let mut xi_s = 0.0_f64;
    let mut xi_a = 0.0_f64;
    for c in 0..ctx.r() {
        let u = ctx.u_basis.column(c).into_owned();
        let xu = ctx.xi(&u)?;
        let xs = ctx.xi(&(&ctx.s0 * &u))?;
        xi_s = xi_s
            .max((&xs - &ctx.s0_hat * &xu).amax())
            .max((&xs - &ctx.sigma * &xu).amax());
        xi_a = xi_a.max((ctx.xi(&(&ctx.a0 * &u))? - &ctx.a0_hat * &xu).amax());
    }
    // Invariance of the complement under Â₀, Ŝ₀ and σ.
    let w = &ctx.complement_basis;
    let off = ctx.coords.rows(0, ctx.r()).into_owned();
    let invariance = [&ctx.a0_hat, &ctx.s0_hat, &ctx.sigma]
        .iter()
        .map(|op| {
            if ctx.r() == 0 {
                0.0
            } else {
                max_abs(&(&off * *op * w))
            }
        })
        .fold(0.0, f64::max);
    Ok(vec![
        ("σ^q = I", max_abs(&(sigma_q - id))),
        ("ĝσ = σ^χ(g) ĝ", twist),
        ("hat is a representation", rep),
        (
            "σŜ₀ = Ŝ₀σ",
            max_abs(&(&ctx.sigma * &ctx.s0_hat - &ctx.s0_hat * &ctx.sigma)),
        ),
        ("ξ(S₀u) = Ŝ₀ξ(u) = σξ(u)", xi_s),
        ("ξ(A₀u) = Â₀ξ(u)", xi_a),
        ("ĝξ(u) = ξ(gu)", xi_g),
        ("complement invariant under Â₀, Ŝ₀, σ", invariance),
    ])
}

/// Lift built from A₀ alone, with S₀ from its Jordan–Chevalley decomposition.
pub fn build_lift_from_linear(a0: &Matrix, gd: &GroupData, q: usize) -> Result<LiftContext> {
    let jc = jordan_chevalley(a0)?;
    build_lift(a0, &jc.semisimple, gd, q)
}
