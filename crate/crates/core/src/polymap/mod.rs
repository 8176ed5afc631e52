//! Truncated polynomial maps ℝⁿ → ℝⁿ fixing the origin, stored as
//! homogeneous layers of degrees 1..k.
//!
//! A layer of degree d is an n × C(n+d−1, d) matrix: row i holds the
//! coefficients of component i over the graded-lex monomial basis. When a
//! layer is viewed as a vector in H_d, the component index is the major
//! index: `i * C(n+d−1, d) + m`.

mod basis;
mod flow;
mod operators;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

pub use basis::{
    basis, hk_dim, monomial_count, monomial_value, multi_factorial, MonomialBasis, Poly,
};
pub use flow::{
    ad_conjugate, compose, exp_vf, inverse_truncated, lie_derivative, log_map, log_map_with_linear,
};
pub use operators::{
    ad_operator, adk_operator, ch_compose, ck_generator, ck_operator, fischer_gram, ChSide,
    HkOperator,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedMap {
    n: usize,
    layers: Vec<Matrix>,
}

/// One serialized coefficient: `{degree, component, multi-index, coefficient}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub degree: usize,
    pub component: usize,
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

impl TruncatedMap {
    pub fn zero(n: usize, order: usize) -> Self {
        let layers = (1..=order)
            .map(|d| Matrix::zeros(n, monomial_count(n, d)))
            .collect();
        Self { n, layers }
    }

    pub fn identity(n: usize, order: usize) -> Self {
        Self::from_linear(&Matrix::identity(n, n), order)
    }

    pub fn from_linear(a: &Matrix, order: usize) -> Self {
        let mut m = Self::zero(a.nrows(), order.max(1));
        m.layers[0] = linear_to_layer(a);
        m
    }

    /// A map with a single nonzero homogeneous layer.
    pub fn homogeneous(layer: Matrix, degree: usize) -> Self {
        let n = layer.nrows();
        let mut m = Self::zero(n, degree);
        m.set_layer(degree, layer);
        m
    }

    pub fn from_layers(n: usize, layers: Vec<Matrix>) -> Result<Self> {
        for (i, l) in layers.iter().enumerate() {
            let d = i + 1;
            if l.nrows() != n || l.ncols() != monomial_count(n, d) {
                return Err(Error::DimensionMismatch {
                    expected: monomial_count(n, d),
                    got: l.ncols(),
                });
            }
        }
        Ok(Self { n, layers })
    }

    pub fn from_entries(n: usize, order: usize, entries: &[CoefficientEntry]) -> Result<Self> {
        let mut m = Self::zero(n, order);
        for e in entries {
            if e.degree == 0 {
                return Err(Error::InvalidInput(
                    "constant terms are not allowed: the origin must be fixed".into(),
                ));
            }
            if e.component >= n || e.exponents.len() != n {
                return Err(Error::InvalidInput(format!(
                    "coefficient entry {e:?} does not fit dimension {n}"
                )));
            }
            let total: u32 = e.exponents.iter().sum();
            if total as usize != e.degree {
                return Err(Error::InvalidInput(format!(
                    "multi-index {:?} has degree {total}, entry says {}",
                    e.exponents, e.degree
                )));
            }
            if e.degree > order {
                continue;
            }
            m.add_coeff(e.component, &e.exponents, e.coefficient);
        }
        Ok(m)
    }

    /// Nonzero coefficients in (degree, component, monomial) order.
    pub fn entries(&self) -> Vec<CoefficientEntry> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let d = i + 1;
            let b = basis(self.n, d);
            for comp in 0..self.n {
                for m in 0..b.len() {
                    let c = layer[(comp, m)];
                    if c != 0.0 {
                        out.push(CoefficientEntry {
                            degree: d,
                            component: comp,
                            exponents: b.exponent(m).to_vec(),
                            coefficient: c,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Highest stored degree.
    pub fn order(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, d: usize) -> &Matrix {
        &self.layers[d - 1]
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn set_layer(&mut self, d: usize, layer: Matrix) {
        assert_eq!(layer.shape(), (self.n, monomial_count(self.n, d)));
        if d > self.order() {
            *self = self.truncate(d);
        }
        self.layers[d - 1] = layer;
    }

    pub fn coeff(&self, component: usize, exps: &[u32]) -> f64 {
        let d: u32 = exps.iter().sum();
        let d = d as usize;
        if d == 0 || d > self.order() {
            return 0.0;
        }
        let idx = basis(self.n, d).index_of(exps).expect("exponent length");
        self.layers[d - 1][(component, idx)]
    }

    pub fn add_coeff(&mut self, component: usize, exps: &[u32], value: f64) {
        let d: u32 = exps.iter().sum();
        let d = d as usize;
        assert!(
            d >= 1 && d <= self.order(),
            "degree {d} outside 1..={}",
            self.order()
        );
        let idx = basis(self.n, d).index_of(exps).expect("exponent length");
        self.layers[d - 1][(component, idx)] += value;
    }

    /// Linear part D F(0).
    pub fn linear(&self) -> Matrix {
        if self.layers.is_empty() {
            return Matrix::zeros(self.n, self.n);
        }
        layer_to_linear(&self.layers[0])
    }

    pub fn set_linear(&mut self, a: &Matrix) {
        self.layers[0] = linear_to_layer(a);
    }

    /// Keeps degrees ≤ k, padding with zero layers when k exceeds the order.
    pub fn truncate(&self, k: usize) -> Self {
        let mut layers: Vec<Matrix> = self.layers.iter().take(k).cloned().collect();
        for d in layers.len() + 1..=k {
            layers.push(Matrix::zeros(self.n, monomial_count(self.n, d)));
        }
        Self { n: self.n, layers }
    }

    /// Only the homogeneous layer of degree d, as a map of order d.
    pub fn homogeneous_part(&self, d: usize) -> Self {
        let mut m = Self::zero(self.n, d);
        if d <= self.order() {
            m.layers[d - 1] = self.layers[d - 1].clone();
        }
        m
    }

    /// Degrees ≥ 2 only.
    pub fn nonlinear_part(&self) -> Self {
        let mut m = self.clone();
        if !m.layers.is_empty() {
            m.layers[0].fill(0.0);
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.order().max(other.order());
        let mut out = self.truncate(k);
        for (i, l) in other.layers.iter().enumerate() {
            out.layers[i] += l;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            layers: self.layers.iter().map(|l| l * s).collect(),
        }
    }

    /// Largest absolute coefficient difference over all degrees present in
    /// either map.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.iter())
            .fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn max_abs_layer(&self, d: usize) -> f64 {
        if d == 0 || d > self.order() {
            return 0.0;
        }
        self.layers[d - 1]
            .iter()
            .fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    pub fn eval(&self, x: &[f64]) -> Vector {
        assert_eq!(x.len(), self.n);
        let mut out = Vector::zeros(self.n);
        for (i, layer) in self.layers.iter().enumerate() {
            let b = basis(self.n, i + 1);
            for m in 0..b.len() {
                let mv = monomial_value(b.exponent(m), x);
                if mv == 0.0 {
                    continue;
                }
                for comp in 0..self.n {
                    out[comp] += layer[(comp, m)] * mv;
                }
            }
        }
        out
    }

    pub fn eval_vec(&self, x: &Vector) -> Vector {
        self.eval(x.as_slice())
    }

    /// Jacobian at x.
    pub fn jacobian(&self, x: &[f64]) -> Matrix {
        let polys = self.component_polys(self.order());
        let mut j = Matrix::zeros(self.n, self.n);
        for (i, p) in polys.iter().enumerate() {
            for v in 0..self.n {
                j[(i, v)] = p.partial(v).eval(x);
            }
        }
        j
    }

    /// Components as scalar polynomials truncated at degree `k`.
    pub fn component_polys(&self, k: usize) -> Vec<Poly> {
        (0..self.n)
            .map(|comp| {
                let mut p = Poly::zero(self.n, k);
                for (i, layer) in self.layers.iter().enumerate().take(k) {
                    for m in 0..layer.ncols() {
                        p.layers[i + 1][m] = layer[(comp, m)];
                    }
                }
                p
            })
            .collect()
    }

    pub fn from_component_polys(polys: &[Poly], k: usize) -> Self {
        let n = polys.len();
        let mut m = Self::zero(n, k);
        for (comp, p) in polys.iter().enumerate() {
            for d in 1..=k.min(p.max_degree) {
                for (idx, &c) in p.layers[d].iter().enumerate() {
                    m.layers[d - 1][(comp, idx)] = c;
                }
            }
        }
        m
    }

    /// g ∘ F ∘ h for linear g, h (typically h = g⁻¹).
    pub fn conjugate_linear(&self, g: &Matrix, h: &Matrix) -> Self {
        let lin_h = Self::from_linear(h, self.order());
        let inner = compose(self, &lin_h, self.order()).expect("matching dimensions");
        let mut out = inner.clone();
        for (i, l) in inner.layers.iter().enumerate() {
            out.layers[i] = g * l;
        }
        out
    }

    /// Left multiplication by a matrix: x ↦ A·F(x).
    pub fn left_mul(&self, a: &Matrix) -> Self {
        Self {
            n: self.n,
            layers: self.layers.iter().map(|l| a * l).collect(),
        }
    }

    /// Coefficient vector of layer d in H_d (component-major).
    pub fn layer_vector(&self, d: usize) -> Vector {
        let m = monomial_count(self.n, d);
        let mut v = Vector::zeros(self.n * m);
        if d <= self.order() {
            let l = &self.layers[d - 1];
            for comp in 0..self.n {
                for j in 0..m {
                    v[comp * m + j] = l[(comp, j)];
                }
            }
        }
        v
    }

    pub fn layer_from_vector(n: usize, d: usize, v: &Vector) -> Matrix {
        let m = monomial_count(n, d);
        assert_eq!(v.len(), n * m);
        let mut l = Matrix::zeros(n, m);
        for comp in 0..n {
            for j in 0..m {
                l[(comp, j)] = v[comp * m + j];
            }
        }
        l
    }
}

fn linear_to_layer(a: &Matrix) -> Matrix {
    // Degree-1 basis is x₁, …, xₙ in order, so the layer equals A.
    a.clone()
}

fn layer_to_linear(l: &Matrix) -> Matrix {
    l.clone()
}
