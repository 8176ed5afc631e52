//! Linear operators on the homogeneous layer H_k.

use super::basis::{basis, hk_dim, monomial_count, multi_factorial, Poly};
use super::TruncatedMap;
use crate::error::{Error, Result};
use crate::linalg::{inverse, max_abs, smallest_singular_value, AdaptedInnerProduct, Matrix};

/// Threshold on the smallest singular value of C_k below which it is
/// reported as singular.
pub const CK_SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HkOperator {
    pub n: usize,
    pub degree: usize,
    pub matrix: Matrix,
}

impl HkOperator {
    pub fn identity(n: usize, degree: usize) -> Self {
        let d = hk_dim(n, degree);
        Self {
            n,
            degree,
            matrix: Matrix::identity(d, d),
        }
    }

    pub fn apply(&self, layer: &Matrix) -> Matrix {
        let v = TruncatedMap::homogeneous(layer.clone(), self.degree).layer_vector(self.degree);
        TruncatedMap::layer_from_vector(self.n, self.degree, &(&self.matrix * v))
    }
}

/// Matrix of a linear operator on H_k, assembled column by column from its
/// action on basis elements x^α eᵢ.
fn assemble(n: usize, k: usize, mut op: impl FnMut(usize, &[u32]) -> Vec<Poly>) -> Matrix {
    let b = basis(n, k);
    let m = b.len();
    let dim = n * m;
    let mut out = Matrix::zeros(dim, dim);
    for comp in 0..n {
        for j in 0..m {
            let image = op(comp, b.exponent(j));
            let col = comp * m + j;
            for (ci, p) in image.iter().enumerate() {
                for (r, &c) in p.layers[k].iter().enumerate() {
                    out[(ci * m + r, col)] = c;
                }
            }
        }
    }
    out
}

fn monomial_poly(n: usize, k: usize, exps: &[u32]) -> Poly {
    let mut p = Poly::zero(n, k);
    let idx = basis(n, k).index_of(exps).expect("exponent");
    p.layers[k][idx] = 1.0;
    p
}

/// Y ↦ A·Y on H_k (kron(A, I)).
pub(crate) fn adk_left_mul(a: &Matrix, n: usize, k: usize) -> Matrix {
    let m = monomial_count(n, k);
    let mut out = Matrix::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)];
            if v == 0.0 {
                continue;
            }
            for r in 0..m {
                out[(i * m + r, j * m + r)] = v;
            }
        }
    }
    out
}

/// Ad_k(T): X_k ↦ T ∘ X_k ∘ T⁻¹ in the monomial basis of H_k.
pub fn adk_operator(t: &Matrix, k: usize) -> Result<HkOperator> {
    let n = t.nrows();
    let t_inv = inverse(t)?;
    let forms: Vec<Poly> = (0..n)
        .map(|i| {
            let row: Vec<f64> = t_inv.row(i).iter().copied().collect();
            Poly::linear(&row, k)
        })
        .collect();
    let mut cache: std::collections::HashMap<Vec<u32>, Poly> = Default::default();
    let matrix = assemble(n, k, |comp, exps| {
        let sub = cache
            .entry(exps.to_vec())
            .or_insert_with(|| {
                let mut p = Poly::constant(n, k, 1.0);
                for (v, &e) in exps.iter().enumerate() {
                    for _ in 0..e {
                        p = p.mul(&forms[v]);
                    }
                }
                p
            })
            .clone();
        (0..n)
            .map(|i| {
                let mut q = Poly::zero(n, k);
                q.add_assign_scaled(&sub, t[(i, comp)]);
                q
            })
            .collect()
    });
    Ok(HkOperator {
        n,
        degree: k,
        matrix,
    })
}

/// The operator Y ↦ DY·(Ax) − A·Y on H_k: the Lie derivative along the
/// linear field Ax, also written ad(A).
pub fn ad_operator(a: &Matrix, k: usize) -> HkOperator {
    let n = a.nrows();
    let forms: Vec<Poly> = (0..n)
        .map(|i| {
            let row: Vec<f64> = a.row(i).iter().copied().collect();
            Poly::linear(&row, k)
        })
        .collect();
    let matrix = assemble(n, k, |comp, exps| {
        let mono = monomial_poly(n, k, exps);
        let mut deriv = Poly::zero(n, k);
        for v in 0..n {
            if exps[v] > 0 {
                deriv.add_assign_scaled(&mono.partial(v).mul(&forms[v]), 1.0);
            }
        }
        (0..n)
            .map(|i| {
                let mut q = Poly::zero(n, k);
                if i == comp {
                    q.add_assign_scaled(&deriv, 1.0);
                }
                q.add_assign_scaled(&mono, -a[(i, comp)]);
                q
            })
            .collect()
    });
    HkOperator {
        n,
        degree: k,
        matrix,
    }
}

/// Generator of s ↦ Ad_k(e^{−sX₁}); equal to [`ad_operator`] of X₁.
pub fn ck_generator(x1: &Matrix, k: usize) -> HkOperator {
    ad_operator(x1, k)
}

/// C_k(X₁) = ∫₀¹ Ad_k(e^{−sX₁}) ds, evaluated as φ(L) with φ(z) = (eᶻ − 1)/z
/// and L the generator. Taylor series at L/2^s, then the doubling rule
/// φ(2z) = φ(z)(eᶻ + 1)/2.
pub fn ck_operator(x1: &Matrix, k: usize) -> HkOperator {
    let n = x1.nrows();
    let l = ck_generator(x1, k).matrix;
    let dim = l.nrows();
    let id = Matrix::identity(dim, dim);
    let norm = l.norm();
    let mut doublings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        doublings += 1;
    }
    let z = &l * scale;
    let mut term = id.clone(); // z^j / j!
    let mut phi = id.clone();
    let mut exp = id.clone();
    for j in 1..=30 {
        term = &term * &z / j as f64;
        exp += &term;
        phi += &term / (j + 1) as f64;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..doublings {
        phi = &phi * (&exp + &id) * 0.5;
        exp = &exp * &exp;
    }
    HkOperator {
        n,
        degree: k,
        matrix: phi,
    }
}

/// Which side Y_k is composed on in [`ch_compose`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChSide {
    /// e^X ∘ e^{Y_k} = e^{X + C_k(X₁)⁻¹ Y_k}
    Left,
    /// e^{Y_k} ∘ e^X = e^{X + C_k(−X₁)⁻¹ Y_k}
    Right,
}

/// Combined exponent of e^X and e^{Y_k} modulo degree k+1.
pub fn ch_compose(x: &TruncatedMap, yk: &Matrix, k: usize, side: ChSide) -> Result<TruncatedMap> {
    let n = x.dim();
    let x1 = x.linear();
    let arg = match side {
        ChSide::Left => x1,
        ChSide::Right => -x1,
    };
    let c = ck_operator(&arg, k);
    let sigma_min = smallest_singular_value(&c.matrix);
    if sigma_min < CK_SINGULAR_TOL {
        return Err(Error::CkSingular {
            degree: k,
            sigma_min,
        });
    }
    let y = TruncatedMap::homogeneous(yk.clone(), k).layer_vector(k);
    let sol = c.matrix.lu().solve(&y).ok_or(Error::CkSingular {
        degree: k,
        sigma_min,
    })?;
    let mut out = x.truncate(k.max(x.order()));
    let merged = out.layer(k) + TruncatedMap::layer_from_vector(n, k, &sol);
    out.set_layer(k, merged);
    Ok(out)
}

/// Gram matrix on H_k of the Fischer product built from an inner product on
/// ℝⁿ: in coordinates orthonormal for `ip`, monomials are orthogonal with
/// weight α!.
pub fn fischer_gram(ip: &AdaptedInnerProduct, k: usize) -> Result<Matrix> {
    let n = ip.dim();
    let chol = ip
        .gram()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("Gram matrix is not positive definite".into()))?;
    let to_orthonormal = chol.l().transpose();
    let change = adk_operator(&to_orthonormal, k)?.matrix;
    let b = basis(n, k);
    let m = b.len();
    let mut weights = Matrix::zeros(n * m, n * m);
    for comp in 0..n {
        for j in 0..m {
            weights[(comp * m + j, comp * m + j)] = multi_factorial(b.exponent(j));
        }
    }
    Ok(change.transpose() * weights * change)
}
