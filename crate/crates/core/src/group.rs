//! Finite matrix groups carrying a real one-dimensional character χ.
//!
//! Elements are matched by matrix distance, so groups built from floating
//! point generators close up reliably as long as the generators are accurate
//! to well below [`ELEMENT_MATCH_TOL`].

use crate::error::{Error, Result};
use crate::linalg::{
    inverse, max_abs, semisimplicity_residual, spectral_blocks, AdaptedInnerProduct, Matrix,
};
use crate::polymap::{adk_operator, inverse_truncated, TruncatedMap};

pub const ELEMENT_MATCH_TOL: f64 = 1e-9;
pub const EQUIVARIANCE_TOL: f64 = 1e-9;
pub const MAX_GROUP_ORDER: usize = 10_000;

/// Values of a real one-dimensional character, aligned with group elements.
pub type Character = Vec<i8>;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupData {
    elements: Vec<Matrix>,
    character: Character,
    mult_table: Vec<Vec<usize>>,
    inverses: Vec<usize>,
    identity_index: usize,
}

/// Findings of [`validate_group`]; empty means the data is a group with a
/// valid character.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupReport {
    pub violations: Vec<Error>,
}

impl GroupReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn same_element(a: &Matrix, b: &Matrix) -> bool {
    max_abs(&(a - b)) <= ELEMENT_MATCH_TOL * max_abs(a).max(1.0)
}

fn find_element(elements: &[Matrix], m: &Matrix) -> Option<usize> {
    elements.iter().position(|e| same_element(e, m))
}

/// Checks closure, identity, inverses and the character product law.
/// Returns the multiplication table alongside the report when closure holds.
pub fn validate_group(
    elements: &[Matrix],
    character: &[i8],
) -> (GroupReport, Option<Vec<Vec<usize>>>) {
    let mut report = GroupReport::default();
    if elements.is_empty() {
        report
            .violations
            .push(Error::InvalidInput("group has no elements".into()));
        return (report, None);
    }
    let n = elements[0].nrows();
    for e in elements {
        if e.nrows() != n || e.ncols() != n {
            report.violations.push(Error::DimensionMismatch {
                expected: n,
                got: e.ncols().max(e.nrows()),
            });
            return (report, None);
        }
    }
    if character.len() != elements.len() {
        report.violations.push(Error::BadCharacter(format!(
            "{} character values for {} elements",
            character.len(),
            elements.len()
        )));
        return (report, None);
    }
    if let Some(i) = character.iter().position(|&c| c != 1 && c != -1) {
        report.violations.push(Error::BadCharacter(format!(
            "value {} at element {i} is not ±1",
            character[i]
        )));
    }
    let mut table = vec![vec![0usize; elements.len()]; elements.len()];
    let mut closed = true;
    for (i, a) in elements.iter().enumerate() {
        for (j, b) in elements.iter().enumerate() {
            match find_element(elements, &(a * b)) {
                Some(k) => table[i][j] = k,
                None => {
                    if closed {
                        report
                            .violations
                            .push(Error::NotClosed { left: i, right: j });
                    }
                    closed = false;
                }
            }
        }
    }
    if !closed {
        return (report, None);
    }
    let id = Matrix::identity(n, n);
    if find_element(elements, &id).is_none() {
        report
            .violations
            .push(Error::InvalidInput("identity element missing".into()));
    }
    for (i, a) in elements.iter().enumerate() {
        match a.clone().try_inverse() {
            Some(inv) if find_element(elements, &inv).is_some() => {}
            _ => report.violations.push(Error::InvalidInput(format!(
                "inverse of element {i} missing"
            ))),
        }
    }
    'outer: for i in 0..elements.len() {
        for j in 0..elements.len() {
            if character[table[i][j]] != character[i] * character[j] {
                report.violations.push(Error::BadCharacter(format!(
                    "chi({i}*{j}) != chi({i})*chi({j})"
                )));
                break 'outer;
            }
        }
    }
    (report, Some(table))
}

impl GroupData {
    pub fn new(elements: Vec<Matrix>, character: Character) -> Result<Self> {
        let (report, table) = validate_group(&elements, &character);
        if let Some(e) = report.violations.into_iter().next() {
            return Err(e);
        }
        let table = table.expect("closure verified");
        let n = elements[0].nrows();
        let identity_index = find_element(&elements, &Matrix::identity(n, n)).expect("verified");
        let inverses = (0..elements.len())
            .map(|i| {
                (0..elements.len())
                    .find(|&j| table[i][j] == identity_index)
                    .expect("verified")
            })
            .collect();
        Ok(Self {
            elements,
            character,
            mult_table: table,
            inverses,
            identity_index,
        })
    }

    /// The trivial group {I} on ℝⁿ.
    pub fn trivial(n: usize) -> Self {
        Self::new(vec![Matrix::identity(n, n)], vec![1]).expect("trivial group")
    }

    /// Closes a set of generators (with character values) under
    /// multiplication. The character is propagated through products and any
    /// conflict is reported as [`Error::BadCharacter`].
    pub fn from_generators(generators: &[(Matrix, i8)]) -> Result<Self> {
        Self::from_generators_bounded(generators, MAX_GROUP_ORDER)
    }

    pub fn from_generators_bounded(generators: &[(Matrix, i8)], limit: usize) -> Result<Self> {
        let Some((first, _)) = generators.first() else {
            return Err(Error::InvalidInput("no generators given".into()));
        };
        let n = first.nrows();
        for (g, c) in generators {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: g.ncols(),
                });
            }
            if *c != 1 && *c != -1 {
                return Err(Error::BadCharacter(format!(
                    "generator value {c} is not ±1"
                )));
            }
            inverse(g)?;
        }
        let mut elements = vec![Matrix::identity(n, n)];
        let mut character: Character = vec![1];
        let mut frontier = 0;
        while frontier < elements.len() {
            let current = elements[frontier].clone();
            let cur_chi = character[frontier];
            for (g, c) in generators {
                let prod = &current * g;
                let chi = cur_chi * c;
                match find_element(&elements, &prod) {
                    Some(k) => {
                        if character[k] != chi {
                            return Err(Error::BadCharacter(
                                "generator character values are inconsistent with the group relations"
                                    .into(),
                            ));
                        }
                    }
                    None => {
                        if elements.len() >= limit {
                            return Err(Error::GroupTooLarge { limit });
                        }
                        elements.push(prod);
                        character.push(chi);
                    }
                }
            }
            frontier += 1;
        }
        Self::new(elements, character)
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Matrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &Matrix {
        &self.elements[i]
    }

    pub fn character(&self) -> &[i8] {
        &self.character
    }

    pub fn chi(&self, i: usize) -> i8 {
        self.character[i]
    }

    pub fn identity_index(&self) -> usize {
        self.identity_index
    }

    pub fn mult_table(&self) -> &[Vec<usize>] {
        &self.mult_table
    }

    pub fn product_index(&self, i: usize, j: usize) -> usize {
        self.mult_table[i][j]
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        self.inverses[i]
    }

    pub fn inverse_element(&self, i: usize) -> &Matrix {
        &self.elements[self.inverses[i]]
    }

    pub fn trivial_character(&self) -> Character {
        vec![1; self.order()]
    }

    /// Same elements, different character.
    pub fn with_character(&self, character: Character) -> Result<Self> {
        Self::new(self.elements.clone(), character)
    }

    /// Whether `alpha` is a character of this group (values ±1 and
    /// multiplicative).
    pub fn is_character(&self, alpha: &[i8]) -> bool {
        alpha.len() == self.order()
            && alpha.iter().all(|&a| a == 1 || a == -1)
            && (0..self.order()).all(|i| {
                (0..self.order()).all(|j| alpha[self.mult_table[i][j]] == alpha[i] * alpha[j])
            })
    }

    /// All ±1 characters of the group, found by exhaustive search over the
    /// values on a generating set of minimal size (small groups only).
    pub fn all_characters(&self) -> Vec<Character> {
        let m = self.order();
        if m > 20 {
            return vec![self.trivial_character()];
        }
        (0u32..(1 << m))
            .filter_map(|mask| {
                let alpha: Character = (0..m)
                    .map(|i| if mask >> i & 1 == 1 { -1 } else { 1 })
                    .collect();
                self.is_character(&alpha).then_some(alpha)
            })
            .collect()
    }
}

/// Σ_g α(g⁻¹)β(g); zero for orthogonal characters.
pub fn character_pairing(gd: &GroupData, alpha: &[i8], beta: &[i8]) -> i64 {
    (0..gd.order())
        .map(|i| alpha[gd.inverse_index(i)] as i64 * beta[i] as i64)
        .sum()
}

/// P^α(A) = (1/|G|) Σ_g α(g)·g·A·g⁻¹.
pub fn project(a: &Matrix, gd: &GroupData, alpha: &[i8]) -> Result<Matrix> {
    let n = gd.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.nrows(),
        });
    }
    if alpha.len() != gd.order() {
        return Err(Error::BadCharacter(format!(
            "{} values for a group of order {}",
            alpha.len(),
            gd.order()
        )));
    }
    let mut acc = Matrix::zeros(n, n);
    for (i, g) in gd.elements().iter().enumerate() {
        acc += (g * a * gd.inverse_element(i)) * alpha[i] as f64;
    }
    Ok(acc / gd.order() as f64)
}

/// Matrix of the projection P^α acting on the coefficient vector of H_k.
pub fn projector_hk(gd: &GroupData, alpha: &[i8], k: usize) -> Result<Matrix> {
    let mut acc: Option<Matrix> = None;
    for (i, g) in gd.elements().iter().enumerate() {
        let op = adk_operator(g, k)?.matrix * alpha[i] as f64;
        acc = Some(match acc {
            Some(a) => a + op,
            None => op,
        });
    }
    Ok(acc.expect("nonempty group") / gd.order() as f64)
}

/// Largest deviation max_g ‖g A g⁻¹ − A^{χ(g)}‖.
pub fn linear_equivariance_residual(a: &Matrix, gd: &GroupData) -> Result<f64> {
    let n = gd.dim();
    if a.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.nrows(),
        });
    }
    let a_inv = inverse(a)?;
    let mut worst = 0.0_f64;
    for (i, g) in gd.elements().iter().enumerate() {
        let lhs = g * a * gd.inverse_element(i);
        let rhs = if gd.chi(i) == 1 { a } else { &a_inv };
        worst = worst.max(max_abs(&(lhs - rhs)));
    }
    Ok(worst / max_abs(a).max(1.0))
}

/// A ∈ GL^χ_G: g A g⁻¹ = A^{χ(g)} for every g.
pub fn is_chi_equivariant_linear(a: &Matrix, gd: &GroupData) -> bool {
    linear_equivariance_residual(a, gd).is_ok_and(|r| r <= EQUIVARIANCE_TOL)
}

/// Largest coefficient deviation of g∘F∘g⁻¹ from F^{χ(g)} mod degree k+1.
pub fn map_equivariance_residual(f: &TruncatedMap, gd: &GroupData, k: usize) -> Result<f64> {
    let f_inv = inverse_truncated(f, k)?;
    let f = f.truncate(k);
    let mut worst = 0.0_f64;
    for (i, g) in gd.elements().iter().enumerate() {
        let conj = f.conjugate_linear(g, gd.inverse_element(i));
        let target = if gd.chi(i) == 1 { &f } else { &f_inv };
        worst = worst.max(conj.max_diff(target));
    }
    Ok(worst)
}

pub fn is_chi_equivariant_map(f: &TruncatedMap, gd: &GroupData, k: usize) -> Result<bool> {
    Ok(map_equivariance_residual(f, gd, k)? <= EQUIVARIANCE_TOL)
}

/// Where an element of G^χ(A₀) came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// g itself, χ(g) = 1.
    Symmetry(usize),
    /// g·A₀ with χ(g) = −1.
    Reversing(usize),
}

/// The group G^χ(A₀) = {g : χ(g) = 1} ∪ {g·A₀ : χ(g) = −1}, carrying χ̃ as its
/// character.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedGroupData {
    pub group: GroupData,
    pub provenance: Vec<Provenance>,
}

pub fn extended_group(gd: &GroupData, a0: &Matrix) -> Result<ExtendedGroupData> {
    let residual = linear_equivariance_residual(a0, gd)?;
    if residual > EQUIVARIANCE_TOL {
        return Err(Error::NotEquivariant { residual });
    }
    let mut elements = Vec::with_capacity(gd.order());
    let mut provenance = Vec::with_capacity(gd.order());
    let mut chi_tilde = Vec::with_capacity(gd.order());
    for (i, g) in gd.elements().iter().enumerate() {
        if gd.chi(i) == 1 {
            elements.push(g.clone());
            provenance.push(Provenance::Symmetry(i));
            chi_tilde.push(1);
        } else {
            elements.push(g * a0);
            provenance.push(Provenance::Reversing(i));
            chi_tilde.push(-1);
        }
    }
    let group = GroupData::new(elements, chi_tilde)?;
    Ok(ExtendedGroupData { group, provenance })
}

/// α̃(h) = α(h) for symmetries, α̃(g·A₀) = α(g) for reversing elements.
pub fn tilde_character(gd: &GroupData, ext: &ExtendedGroupData, alpha: &[i8]) -> Result<Character> {
    if !gd.is_character(alpha) {
        return Err(Error::BadCharacter("alpha is not a character of G".into()));
    }
    let values: Character = ext
        .provenance
        .iter()
        .map(|p| match *p {
            Provenance::Symmetry(i) | Provenance::Reversing(i) => alpha[i],
        })
        .collect();
    if !ext.group.is_character(&values) {
        return Err(Error::BadCharacter(
            "induced values violate the product law on G^chi(A0)".into(),
        ));
    }
    Ok(values)
}

/// Builds an inner product on ℝⁿ under which S₀ is normal and every group
/// element is orthogonal: a block-wise product on the real spectral blocks
/// of S₀ (symmetrized with J_λ = (S₀ − αI)/β on complex pairs), averaged over
/// the group.
pub fn invariant_inner_product(s0: &Matrix, gd: &GroupData) -> Result<AdaptedInnerProduct> {
    let n = gd.dim();
    if s0.nrows() != n || s0.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s0.nrows(),
        });
    }
    let residual = semisimplicity_residual(s0, 1e-6);
    if residual > 1e-8 {
        return Err(Error::NotSemisimple { residual });
    }
    let eq = linear_equivariance_residual(s0, gd)?;
    if eq > EQUIVARIANCE_TOL {
        return Err(Error::NotEquivariant { residual: eq });
    }
    let id = Matrix::identity(n, n);
    let mut gram = Matrix::zeros(n, n);
    for block in spectral_blocks(s0, 1e-6) {
        let p = &block.projector;
        if block.eigenvalue.im == 0.0 {
            gram += p.transpose() * p;
        } else {
            let alpha = block.eigenvalue.re;
            let beta = block.eigenvalue.im;
            let jp = (s0 - &id * alpha) * p / beta;
            gram += (p.transpose() * p + jp.transpose() * &jp) * 0.5;
        }
    }
    let mut averaged = Matrix::zeros(n, n);
    for g in gd.elements() {
        averaged += g.transpose() * &gram * g;
    }
    averaged /= gd.order() as f64;
    AdaptedInnerProduct::new((&averaged + averaged.transpose()) * 0.5)
}

/// The three defining residuals of the adapted inner product:
/// ‖S₀S₀* − S₀*S₀‖, max_g ‖g*g − I‖, max_g ‖g S₀* − (S₀*)^{χ(g)} g‖.
pub fn inner_product_residuals(
    ip: &AdaptedInnerProduct,
    s0: &Matrix,
    gd: &GroupData,
) -> Result<[f64; 3]> {
    let n = gd.dim();
    let s_star = ip.adjoint(s0);
    let s_star_inv = inverse(&s_star)?;
    let normal = max_abs(&(s0 * &s_star - &s_star * s0));
    let mut orth = 0.0_f64;
    let mut equiv = 0.0_f64;
    for (i, g) in gd.elements().iter().enumerate() {
        orth = orth.max(max_abs(&(ip.adjoint(g) * g - Matrix::identity(n, n))));
        let rhs = if gd.chi(i) == 1 { &s_star } else { &s_star_inv };
        equiv = equiv.max(max_abs(&(g * &s_star - rhs * g)));
    }
    Ok([normal, orth, equiv])
}
