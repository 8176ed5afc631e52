//! Monomial bases in graded lexicographic order and truncated scalar
//! polynomials over them.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Exponent vectors of all monomials of one total degree in `n` variables,
/// ordered lexicographically with larger leading exponents first
/// (x², xy, y² for n = 2).
#[derive(Debug)]
pub struct MonomialBasis {
    pub n: usize,
    pub degree: usize,
    exps: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl MonomialBasis {
    fn build(n: usize, degree: usize) -> Self {
        let mut exps = Vec::new();
        let mut current = vec![0u32; n];
        fill(&mut exps, &mut current, 0, degree as u32);
        let index = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Self {
            n,
            degree,
            exps,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exps
    }

    pub fn exponent(&self, i: usize) -> &[u32] {
        &self.exps[i]
    }

    pub fn index_of(&self, exps: &[u32]) -> Option<usize> {
        self.index.get(exps).copied()
    }
}

fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, var: usize, remaining: u32) {
    let n = current.len();
    if n == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if var == n - 1 {
        current[var] = remaining;
        out.push(current.clone());
        current[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[var] = e;
        fill(out, current, var + 1, remaining - e);
    }
    current[var] = 0;
}

/// Shared, lazily built basis for (n, degree).
pub fn basis(n: usize, degree: usize) -> Arc<MonomialBasis> {
    type Cache = Mutex<HashMap<(usize, usize), Arc<MonomialBasis>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("basis cache poisoned");
    guard
        .entry((n, degree))
        .or_insert_with(|| Arc::new(MonomialBasis::build(n, degree)))
        .clone()
}

/// Number of monomials of degree `k` in `n` variables, C(n+k−1, k).
pub fn monomial_count(n: usize, k: usize) -> usize {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= (n + i) as u128;
        den *= (i + 1) as u128;
    }
    (num / den) as usize
}

/// dim H_k = n·C(n+k−1, k).
pub fn hk_dim(n: usize, k: usize) -> usize {
    n * monomial_count(n, k)
}

/// Scalar polynomial in `n` variables truncated at total degree `max_degree`,
/// stored densely per degree (index 0 holds the constant term).
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub n: usize,
    pub max_degree: usize,
    pub layers: Vec<Vec<f64>>,
}

impl Poly {
    pub fn zero(n: usize, max_degree: usize) -> Self {
        let layers = (0..=max_degree)
            .map(|d| vec![0.0; monomial_count(n, d)])
            .collect();
        Self {
            n,
            max_degree,
            layers,
        }
    }

    pub fn constant(n: usize, max_degree: usize, c: f64) -> Self {
        let mut p = Self::zero(n, max_degree);
        p.layers[0][0] = c;
        p
    }

    /// Linear form Σ cᵢ xᵢ.
    pub fn linear(coeffs: &[f64], max_degree: usize) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n, max_degree);
        if max_degree >= 1 {
            let b = basis(n, 1);
            for (i, c) in coeffs.iter().enumerate() {
                let mut e = vec![0u32; n];
                e[i] = 1;
                p.layers[1][b.index_of(&e).expect("unit exponent")] = *c;
            }
        }
        p
    }

    pub fn add_assign_scaled(&mut self, other: &Poly, scale: f64) {
        for (d, layer) in self.layers.iter_mut().enumerate() {
            if let Some(o) = other.layers.get(d) {
                for (a, b) in layer.iter_mut().zip(o) {
                    *a += scale * b;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers.iter().all(|l| l.iter().all(|&c| c == 0.0))
    }

    /// Product truncated at `self.max_degree`.
    pub fn mul(&self, other: &Poly) -> Poly {
        let n = self.n;
        let k = self.max_degree;
        let mut out = Poly::zero(n, k);
        let mut sum = vec![0u32; n];
        for (da, la) in self.layers.iter().enumerate() {
            if la.iter().all(|&c| c == 0.0) {
                continue;
            }
            let ba = basis(n, da);
            for (db, lb) in other.layers.iter().enumerate() {
                if da + db > k || lb.iter().all(|&c| c == 0.0) {
                    continue;
                }
                let bb = basis(n, db);
                let bo = basis(n, da + db);
                let target = &mut out.layers[da + db];
                for (ia, &ca) in la.iter().enumerate() {
                    if ca == 0.0 {
                        continue;
                    }
                    let ea = ba.exponent(ia);
                    for (ib, &cb) in lb.iter().enumerate() {
                        if cb == 0.0 {
                            continue;
                        }
                        let eb = bb.exponent(ib);
                        for v in 0..n {
                            sum[v] = ea[v] + eb[v];
                        }
                        target[bo.index_of(&sum).expect("exponent in basis")] += ca * cb;
                    }
                }
            }
        }
        out
    }

    /// ∂/∂x_var.
    pub fn partial(&self, var: usize) -> Poly {
        let n = self.n;
        let mut out = Poly::zero(n, self.max_degree);
        for d in 1..self.layers.len() {
            let b = basis(n, d);
            let bl = basis(n, d - 1);
            for (i, &c) in self.layers[d].iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let e = b.exponent(i);
                if e[var] == 0 {
                    continue;
                }
                let mut lowered = e.to_vec();
                lowered[var] -= 1;
                out.layers[d - 1][bl.index_of(&lowered).expect("exponent")] += c * e[var] as f64;
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for (d, layer) in self.layers.iter().enumerate() {
            let b = basis(self.n, d);
            for (i, &c) in layer.iter().enumerate() {
                if c != 0.0 {
                    total += c * monomial_value(b.exponent(i), x);
                }
            }
        }
        total
    }
}

pub fn monomial_value(exps: &[u32], x: &[f64]) -> f64 {
    exps.iter()
        .zip(x)
        .fold(1.0, |acc, (&e, &xi)| acc * xi.powi(e as i32))
}

/// α! = Π αᵢ!.
pub fn multi_factorial(exps: &[u32]) -> f64 {
    exps.iter()
        .map(|&e| (1..=e).fold(1.0, |acc, j| acc * j as f64))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grlex_order_in_two_variables() {
        let b = basis(2, 2);
        assert_eq!(b.exponents(), &[vec![2, 0], vec![1, 1], vec![0, 2]]);
        let b3 = basis(3, 2);
        assert_eq!(b3.len(), 6);
        assert_eq!(b3.exponent(0), &[2, 0, 0]);
        assert_eq!(b3.exponent(5), &[0, 0, 2]);
    }

    #[test]
    fn counts_match_binomials() {
        for n in 1..5 {
            for k in 0..6 {
                assert_eq!(basis(n, k).len(), monomial_count(n, k));
            }
        }
        assert_eq!(hk_dim(2, 2), 6);
    }

    #[test]
    fn product_and_derivative() {
        // (x + y)² = x² + 2xy + y²
        let l = Poly::linear(&[1.0, 1.0], 3);
        let sq = l.mul(&l);
        assert_eq!(sq.layers[2], vec![1.0, 2.0, 1.0]);
        let dx = sq.partial(0);
        assert_eq!(dx.layers[1], vec![2.0, 2.0]);
        assert!((sq.eval(&[0.5, 1.5]) - 4.0).abs() < 1e-15);
        // truncation drops degree 4
        assert!(sq
            .mul(&sq)
            .layers
            .iter()
            .skip(1)
            .all(|l| l.iter().all(|&c| c == 0.0)));
    }
}
