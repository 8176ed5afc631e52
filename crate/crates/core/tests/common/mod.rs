//! Random χ-equivariant instances built from block models.
//!
//! Symmetric models: A₀ is block diagonal (rotation planes, lines) and the
//! group is cyclic, acting by rotations on planes and signs on lines.
//! Nonlinear terms are projected onto the commutant.
//!
//! Reversible models: ψ = g∘h with g a linear involution and h = P∘h₀∘P⁻¹,
//! where h₀(x, y) = (x, −y + f(x)) is an exact polynomial involution. Then
//! gψg⁻¹ = h∘g = ψ⁻¹ exactly. Adding −I as a symmetry requires f odd.
//!
//! Every model is conjugated by a random well-conditioned matrix.
#![allow(dead_code)]

use std::f64::consts::PI;

use eqnf::group::{projector_hk, GroupData};
use eqnf::linalg::{condition_number, inverse, Matrix, Vector};
use eqnf::normalform::FamilySample;
use eqnf::polymap::{basis, TruncatedMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rotation(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

pub fn random_matrix(rng: &mut TestRng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

pub fn block_diag(blocks: &[Matrix]) -> Matrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, at), (b.nrows(), b.ncols())).copy_from(b);
        at += b.nrows();
    }
    out
}

/// I + noise with condition number below 10.
pub fn random_conjugator(rng: &mut TestRng, n: usize) -> (Matrix, Matrix) {
    loop {
        let q = Matrix::identity(n, n) + random_matrix(rng, n, n, 0.35);
        if condition_number(&q) < 10.0 {
            let qi = inverse(&q).unwrap();
            return (q, qi);
        }
    }
}

pub fn conjugate_group(gd: &GroupData, q: &Matrix, qi: &Matrix) -> GroupData {
    let elements = gd.elements().iter().map(|g| q * g * qi).collect();
    GroupData::new(elements, gd.character().to_vec()).unwrap()
}

/// Random homogeneous layer of degree d with entries in (−scale, scale).
pub fn random_layer(rng: &mut TestRng, n: usize, d: usize, scale: f64) -> Matrix {
    random_matrix(rng, n, basis(n, d).len(), scale)
}

/// Orthogonal projection of every nonlinear layer onto the maps that
/// commute with the group.
pub fn project_symmetric(f: &TruncatedMap, gd: &GroupData) -> TruncatedMap {
    let n = f.dim();
    let mut out = f.clone();
    let trivial = gd.trivial_character();
    for d in 2..=f.order() {
        let p = projector_hk(gd, &trivial, d).unwrap();
        let v = p * f.layer_vector(d);
        out.set_layer(d, TruncatedMap::layer_from_vector(n, d, &v));
    }
    out
}

// Groups for the projection suite.

/// A finite matrix group of order at most 8 in dimension n ≤ 5, conjugated
/// by a random matrix.
pub fn random_group(rng: &mut TestRng) -> GroupData {
    let n = rng.gen_range(2..=5);
    let kind = rng.gen_range(0..5);
    let mut gens: Vec<Matrix> = Vec::new();
    let pad = |m: Matrix, rng: &mut TestRng| -> Matrix {
        let rest = n - m.nrows();
        let signs: Vec<Matrix> = (0..rest)
            .map(|_| Matrix::from_element(1, 1, if rng.gen_bool(0.5) { 1.0 } else { -1.0 }))
            .collect();
        let mut blocks = vec![m];
        blocks.extend(signs);
        block_diag(&blocks)
    };
    match kind {
        // Cyclic of order p acting on a plane.
        0 => {
            let p = rng.gen_range(2..=8);
            let g = pad(rotation(2.0 * PI / p as f64), rng);
            // Keep the order at p: odd-order signs would enlarge it.
            let g = if p % 2 == 1 {
                let mut g = g;
                for i in 2..n {
                    g[(i, i)] = 1.0;
                }
                g
            } else {
                g
            };
            gens.push(g);
        }
        // Dihedral of order 2p, p ≤ 4.
        1 => {
            let p = rng.gen_range(2..=4);
            let mut r = Matrix::identity(n, n);
            r.view_mut((0, 0), (2, 2))
                .copy_from(&rotation(2.0 * PI / p as f64));
            let mut f = Matrix::identity(n, n);
            f[(1, 1)] = -1.0;
            if n > 2 {
                f[(n - 1, n - 1)] = -1.0;
            }
            gens.push(r);
            gens.push(f);
        }
        // Sign groups (Z2)^m, m ≤ 3.
        2 => {
            let m = rng.gen_range(1..=3.min(n));
            for j in 0..m {
                let mut g = Matrix::identity(n, n);
                for i in 0..n {
                    if (i + j) % (m + 1) == 0 || rng.gen_bool(0.3) {
                        g[(i, i)] = -1.0;
                    }
                }
                gens.push(g);
            }
        }
        // Coordinate swap with signs.
        3 => {
            let mut g = Matrix::zeros(n, n);
            g[(0, 1)] = 1.0;
            g[(1, 0)] = 1.0;
            for i in 2..n {
                g[(i, i)] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            }
            gens.push(g);
            gens.push(-Matrix::identity(n, n));
        }
        // Cyclic permutation of three coordinates.
        _ => {
            let n3 = n.max(3);
            let mut g = Matrix::identity(n3, n3);
            g.view_mut((0, 0), (3, 3))
                .copy_from(&Matrix::from_row_slice(
                    3,
                    3,
                    &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
                ));
            gens.push(g);
        }
    }
    let dim = gens[0].nrows();
    let (q, qi) = random_conjugator(rng, dim);
    let gens: Vec<(Matrix, i8)> = gens.into_iter().map(|g| (&q * g * &qi, 1)).collect();
    let gd = GroupData::from_generators(&gens).unwrap();
    assert!(gd.order() <= 8, "order {}", gd.order());
    gd
}

// Equivariant instances.

/// A family sampled at λ = 0 and at further values.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub a0: Matrix,
    pub gd: GroupData,
    pub q: usize,
    pub samples: Vec<FamilySample>,
}

impl Instance {
    pub fn base(&self) -> &TruncatedMap {
        &self.samples[0].map
    }

    pub fn n(&self) -> usize {
        self.a0.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Block {
    /// Rotation plane with angle 2πj/q (unit modulus).
    Resonant(usize),
    /// Rotation plane r·R(φ) with r off the unit circle.
    Damped,
    /// 2×2 Jordan block at eigenvalue 1.
    Jordan,
    /// Line with eigenvalue ±1.
    UnitLine(bool),
    /// Line with eigenvalue off the unit circle.
    Line,
}

impl Block {
    fn dim(self) -> usize {
        match self {
            Block::UnitLine(_) | Block::Line => 1,
            _ => 2,
        }
    }
}

/// Random block list of total dimension ≤ nmax with at least one block
/// contributing to ker(S₀^q − I).
pub fn random_blocks(rng: &mut TestRng, q: usize, nmax: usize, allow_jordan: bool) -> Vec<Block> {
    let mut blocks = Vec::new();
    let mut dim = 0;
    let first = match rng.gen_range(0..3) {
        0 if q > 1 => Block::Resonant(rng.gen_range(1..q)),
        1 if allow_jordan && nmax >= 2 => Block::Jordan,
        _ => Block::UnitLine(q.is_multiple_of(2) && rng.gen_bool(0.5)),
    };
    let first = if first.dim() > nmax {
        Block::UnitLine(false)
    } else {
        first
    };
    dim += first.dim();
    blocks.push(first);
    while dim < nmax && rng.gen_bool(0.7) {
        let b = match rng.gen_range(0..4) {
            0 => Block::Damped,
            1 => Block::Line,
            2 if q > 1 => Block::Resonant(rng.gen_range(0..q)),
            _ => Block::UnitLine(q.is_multiple_of(2) && rng.gen_bool(0.5)),
        };
        if dim + b.dim() <= nmax {
            dim += b.dim();
            blocks.push(b);
        }
    }
    blocks
}

/// χ ≡ 1: cyclic group of order p ∈ {2, 3, 4} acting by rotations on planes
/// and signs on lines; A₀ commutes with it.
pub fn symmetric_instance(
    rng: &mut TestRng,
    q: usize,
    nmax: usize,
    allow_jordan: bool,
    lambdas: &[f64],
) -> Instance {
    let blocks = random_blocks(rng, q, nmax, allow_jordan);
    let p = rng.gen_range(2..=4usize);
    let mut a_blocks = Vec::new();
    let mut g_blocks = Vec::new();
    for b in &blocks {
        let (a, g) = match *b {
            Block::Resonant(j) => (
                rotation(2.0 * PI * j as f64 / q as f64),
                rotation(2.0 * PI * rng.gen_range(0..p) as f64 / p as f64),
            ),
            Block::Damped => (
                rotation(rng.gen_range(0.3..2.8)) * rng.gen_range(0.4..0.8),
                rotation(2.0 * PI * rng.gen_range(0..p) as f64 / p as f64),
            ),
            Block::Jordan => {
                let sign = if p % 2 == 0 && rng.gen_bool(0.5) {
                    -1.0
                } else {
                    1.0
                };
                (
                    Matrix::from_row_slice(2, 2, &[1.0, rng.gen_range(0.5..1.5), 0.0, 1.0]),
                    Matrix::identity(2, 2) * sign,
                )
            }
            Block::UnitLine(neg) => (
                Matrix::from_element(1, 1, if neg { -1.0 } else { 1.0 }),
                Matrix::from_element(
                    1,
                    1,
                    if p % 2 == 0 && rng.gen_bool(0.5) {
                        -1.0
                    } else {
                        1.0
                    },
                ),
            ),
            Block::Line => (
                Matrix::from_element(1, 1, [0.5, -0.6, 1.8, -2.2][rng.gen_range(0..4)]),
                Matrix::from_element(
                    1,
                    1,
                    if p % 2 == 0 && rng.gen_bool(0.5) {
                        -1.0
                    } else {
                        1.0
                    },
                ),
            ),
        };
        a_blocks.push(a);
        g_blocks.push(g);
    }
    let a = block_diag(&a_blocks);
    let g = block_diag(&g_blocks);
    let n = a.nrows();
    let (cq, cqi) = random_conjugator(rng, n);
    let gd = GroupData::from_generators(&[(&cq * &g * &cqi, 1)]).unwrap();
    let a0 = &cq * a * &cqi;
    let mut base = TruncatedMap::from_linear(&a0, 3);
    for d in 2..=3 {
        base.set_layer(d, random_layer(rng, n, d, 0.6));
    }
    let base = project_symmetric(&base, &gd);
    let direction =
        eqnf::group::project(&random_matrix(rng, n, n, 1.0), &gd, &gd.trivial_character()).unwrap();
    let samples = std::iter::once(0.0)
        .chain(lambdas.iter().copied())
        .map(|l| {
            let mut m = base.clone();
            m.set_linear(&(&a0 + &direction * l));
            FamilySample {
                lambda: vec![l],
                map: m,
            }
        })
        .collect();
    Instance {
        name: format!("symmetric {blocks:?} p={p} q={q}"),
        a0,
        gd,
        q,
        samples,
    }
}

/// Reversible model ψ = g∘P∘h₀∘P⁻¹ with the block recipe:
/// resonant planes from two reflections, hyperbolic planes from a swap,
/// Jordan blocks from a sheared reflection, and ±1 lines.
pub fn reversible_instance(
    rng: &mut TestRng,
    q: usize,
    nmax: usize,
    allow_jordan: bool,
    with_minus_identity: bool,
    lambdas: &[f64],
) -> Instance {
    let blocks = random_blocks(rng, q, nmax, allow_jordan);
    let refl = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let swap = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let mut g_blocks = Vec::new();
    let mut p_blocks = Vec::new();
    let mut d_signs: Vec<f64> = Vec::new();
    for b in &blocks {
        let (g, p, d): (Matrix, Matrix, Vec<f64>) = match *b {
            Block::Resonant(j) => {
                let theta = 2.0 * PI * j as f64 / q as f64;
                (refl.clone(), rotation(theta / 2.0), vec![1.0, -1.0])
            }
            Block::Damped => {
                let mu = rng.gen_range(0.4..0.8);
                (
                    swap.clone(),
                    Matrix::from_row_slice(2, 2, &[mu, -mu, 1.0, 1.0]),
                    vec![1.0, -1.0],
                )
            }
            Block::Jordan => {
                let t = rng.gen_range(0.3..0.8);
                (
                    refl.clone(),
                    Matrix::from_row_slice(2, 2, &[1.0, t, 0.0, 1.0]),
                    vec![1.0, -1.0],
                )
            }
            Block::UnitLine(neg) => {
                // g = −1 so that the reverser is never the identity.
                (
                    Matrix::from_element(1, 1, -1.0),
                    Matrix::from_element(1, 1, 1.0),
                    vec![if neg { 1.0 } else { -1.0 }],
                )
            }
            Block::Line => {
                // A reversible line is ±1; take −1.
                (
                    Matrix::from_element(1, 1, -1.0),
                    Matrix::from_element(1, 1, 1.0),
                    vec![1.0],
                )
            }
        };
        g_blocks.push(g);
        p_blocks.push(p);
        d_signs.extend(d);
    }
    let g = block_diag(&g_blocks);
    let p = block_diag(&p_blocks);
    let n = g.nrows();
    let plus: Vec<usize> = (0..n).filter(|&i| d_signs[i] > 0.0).collect();
    let minus: Vec<usize> = (0..n).filter(|&i| d_signs[i] < 0.0).collect();

    // f: polynomial in the + coordinates written into the − components.
    let mut f = TruncatedMap::zero(n, 3);
    let degrees: &[usize] = if with_minus_identity { &[3] } else { &[2, 3] };
    for &d in degrees {
        let b = basis(n, d);
        for &i in &minus {
            for m in 0..b.len() {
                let e = b.exponent(m);
                if e.iter()
                    .enumerate()
                    .all(|(c, &k)| k == 0 || plus.contains(&c))
                {
                    f.add_coeff(i, e, rng.gen_range(-0.8..0.8));
                }
            }
        }
    }
    let mut lin_f = Matrix::zeros(n, n);
    for &i in &minus {
        for &j in &plus {
            lin_f[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    let (cq, cqi) = random_conjugator(rng, n);
    let gq = &cq * &g * &cqi;
    let pq = &cq * &p;
    let pqi = inverse(&pq).unwrap();
    let d = Matrix::from_diagonal(&Vector::from_vec(d_signs.clone()));
    let make = |l: f64| -> TruncatedMap {
        let mut h0 = f.clone();
        h0.set_linear(&(&d + &lin_f * l));
        h0.conjugate_linear(&pq, &pqi).left_mul(&gq)
    };
    let mut gens = vec![(gq.clone(), -1)];
    // −I would clash with a reverser that is already −I.
    if with_minus_identity && (&g + Matrix::identity(n, n)).amax() > 0.5 {
        gens.push((-Matrix::identity(n, n), 1));
    }
    let gd = GroupData::from_generators(&gens).unwrap();
    let samples: Vec<FamilySample> = std::iter::once(0.0)
        .chain(lambdas.iter().copied())
        .map(|l| FamilySample {
            lambda: vec![l],
            map: make(l),
        })
        .collect();
    Instance {
        name: format!("reversible {blocks:?} q={q} odd={with_minus_identity}"),
        a0: samples[0].map.linear(),
        gd,
        q,
        samples,
    }
}

/// Random point of norm `radius` in the column span of `basis`.
pub fn random_in_span(rng: &mut TestRng, basis: &Matrix, radius: f64) -> Vector {
    let c = Vector::from_fn(basis.ncols(), |_, _| rng.gen_range(-1.0..1.0));
    let v = basis * c;
    let nrm = v.norm();
    if nrm == 0.0 {
        v
    } else {
        v * (radius / nrm)
    }
}
