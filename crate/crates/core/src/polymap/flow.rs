use super::basis::{basis, Poly};
use super::operators::ck_operator;
use super::TruncatedMap;
use crate::error::{Error, Result};
use crate::linalg::{inverse, matrix_exp, matrix_log, Matrix};

fn check_dims(f: &TruncatedMap, g: &TruncatedMap) -> Result<()> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: g.dim(),
        });
    }
    Ok(())
}

/// F ∘ G modulo degree k+1.
pub fn compose(f: &TruncatedMap, g: &TruncatedMap, k: usize) -> Result<TruncatedMap> {
    check_dims(f, g)?;
    let n = f.dim();
    let gp = g.component_polys(k);
    // powers[v][p] = g_v^p truncated at k
    let mut powers: Vec<Vec<Poly>> = Vec::with_capacity(n);
    for p in &gp {
        let mut pw = vec![Poly::constant(n, k, 1.0)];
        for e in 1..=k {
            let next = pw[e - 1].mul(p);
            pw.push(next);
        }
        powers.push(pw);
    }
    let mut out: Vec<Poly> = (0..n).map(|_| Poly::zero(n, k)).collect();
    for d in 1..=f.order().min(k) {
        let layer = f.layer(d);
        let b = basis(n, d);
        for m in 0..b.len() {
            if (0..n).all(|c| layer[(c, m)] == 0.0) {
                continue;
            }
            let exps = b.exponent(m);
            let mut mono = Poly::constant(n, k, 1.0);
            for (v, &e) in exps.iter().enumerate() {
                if e > 0 {
                    mono = mono.mul(&powers[v][e as usize]);
                }
            }
            for (comp, o) in out.iter_mut().enumerate() {
                let c = layer[(comp, m)];
                if c != 0.0 {
                    o.add_assign_scaled(&mono, c);
                }
            }
        }
    }
    Ok(TruncatedMap::from_component_polys(&out, k))
}

/// The vector field X applied as a derivation to F: x ↦ DF(x)·X(x), mod
/// degree k+1.
pub fn lie_derivative(x: &TruncatedMap, f: &TruncatedMap, k: usize) -> TruncatedMap {
    let n = f.dim();
    let xp = x.component_polys(k);
    let fp = f.component_polys(k);
    let out: Vec<Poly> = fp
        .iter()
        .map(|p| {
            let mut acc = Poly::zero(n, k);
            for (v, xv) in xp.iter().enumerate() {
                let dp = p.partial(v);
                if dp.is_zero() || xv.is_zero() {
                    continue;
                }
                acc.add_assign_scaled(&dp.mul(xv), 1.0);
            }
            acc
        })
        .collect();
    TruncatedMap::from_component_polys(&out, k)
}

/// Formal inverse modulo degree k+1.
pub fn inverse_truncated(f: &TruncatedMap, k: usize) -> Result<TruncatedMap> {
    let a = f.linear();
    let a_inv = inverse(&a).map_err(|_| Error::NonInvertibleLinearPart)?;
    let n = f.dim();
    let id = TruncatedMap::identity(n, k);
    let mut g = TruncatedMap::from_linear(&a_inv, k);
    // Each pass fixes one more degree.
    for _ in 1..k {
        let fg = compose(f, &g, k)?;
        let defect = fg.sub(&id);
        g = g.sub(&defect.left_mul(&a_inv));
    }
    Ok(g)
}

/// T ∘ F ∘ T⁻¹ modulo degree k+1.
pub fn ad_conjugate(t: &TruncatedMap, f: &TruncatedMap, k: usize) -> Result<TruncatedMap> {
    check_dims(t, f)?;
    let t_inv = inverse_truncated(t, k)?;
    let inner = compose(f, &t_inv, k)?;
    compose(t, &inner, k)
}

/// Time-one flow of the vector field X modulo degree k+1.
///
/// The Lie series Σ L_X^j(id)/j! is summed for X/2^s with the linear part
/// scaled below 1/2, then the flow is squared s times by composition.
pub fn exp_vf(x: &TruncatedMap, k: usize) -> TruncatedMap {
    let n = x.dim();
    let x = x.truncate(k);
    if k == 0 {
        return TruncatedMap::zero(n, 0);
    }
    let lin_norm = x.linear().norm();
    let mut squarings = 0;
    let mut scale = 1.0;
    while lin_norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let xs = x.scale(scale);
    let mut term = TruncatedMap::identity(n, k);
    let mut sum = term.clone();
    for j in 1..=80 {
        term = lie_derivative(&xs, &term, k).scale(1.0 / j as f64);
        let size = term.max_abs();
        sum = sum.add(&term);
        if size == 0.0 || size < 1e-18 * sum.max_abs() {
            break;
        }
    }
    // Exact linear part, independent of the series.
    if lin_norm > 0.0 {
        sum.set_linear(&matrix_exp(&xs.linear()));
    }
    for _ in 0..squarings {
        sum = compose(&sum, &sum, k).expect("same dimension");
    }
    sum
}

/// Inverse of [`exp_vf`] given a logarithm of the linear part.
///
/// Degree by degree: e^{X + Y_d} = e^X ∘ e^{C_d(X₁)Y_d} at degree d, whose
/// degree-d layer differs from that of e^X by e^{X₁}·C_d(X₁)·Y_d.
pub fn log_map_with_linear(
    f: &TruncatedMap,
    linear_log: &Matrix,
    k: usize,
) -> Result<TruncatedMap> {
    let n = f.dim();
    let f = f.truncate(k);
    let mut x = TruncatedMap::from_linear(linear_log, k);
    let e1 = matrix_exp(linear_log);
    let lin_err = crate::linalg::max_abs(&(&e1 - f.linear()));
    if lin_err > 1e-9 * crate::linalg::max_abs(&e1).max(1.0) {
        return Err(Error::NoRealLogarithm(format!(
            "exp of the supplied linear logarithm misses the linear part by {lin_err:e}"
        )));
    }
    let e1_op_cache = e1.clone();
    for d in 2..=k {
        let current = exp_vf(&x.truncate(d), d);
        let defect = f.layer_vector(d) - current.layer_vector(d);
        if defect.iter().all(|&v| v == 0.0) {
            continue;
        }
        let c = ck_operator(linear_log, d);
        let lift = super::operators::adk_left_mul(&e1_op_cache, n, d) * &c.matrix;
        let y = lift.lu().solve(&defect).ok_or(Error::CkSingular {
            degree: d,
            sigma_min: 0.0,
        })?;
        let layer = TruncatedMap::layer_from_vector(n, d, &y);
        let mut next = x.clone();
        let merged = next.layer(d) + layer;
        next.set_layer(d, merged);
        x = next;
    }
    Ok(x)
}

/// Inverse of [`exp_vf`]; the linear logarithm is the principal real
/// logarithm of DF(0).
pub fn log_map(f: &TruncatedMap, k: usize) -> Result<TruncatedMap> {
    let l = matrix_log(&f.linear())?;
    log_map_with_linear(f, &l, k)
}
