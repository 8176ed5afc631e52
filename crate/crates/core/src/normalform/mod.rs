//! Normal forms of χ-equivariant maps near a fixed point.
//!
//! Both variants share one engine. A map is written as ψ = M·e^Y with
//! M = A₀ (semisimple form) or M = S₀ (nilpotent form). Degree by degree, a
//! generator φ_j is chosen so that the degree-j part of the exponent of
//! e^{φ_j} ∘ ψ ∘ e^{−φ_j} lands in a target space. Conjugation by e^{φ_j}
//! changes the degree-j exponent by
//!
//!   L_j φ = C_j(−Y₁)⁻¹ Ad_j(M⁻¹) φ − C_j(Y₁)⁻¹ φ,
//!
//! which follows from applying the composition rule on both sides. For
//! j ≥ 2 this is exact modulo higher degrees; at j = 1 it is the Newton
//! derivative of the linear problem.

mod spaces;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{extended_group, projector_hk, ExtendedGroupData, GroupData};
use crate::linalg::{
    inverse, kernel_basis, matrix_log, max_abs, pseudo_inverse, smallest_singular_value,
    su_decomposition, AdaptedInnerProduct, Matrix, Vector,
};
use crate::polymap::{
    ad_conjugate, ad_operator, adk_operator, ck_operator, compose, exp_vf, fischer_gram, hk_dim,
    log_map_with_linear, CoefficientEntry, TruncatedMap,
};

pub use spaces::{
    build_splitting, constrained_subspace, hcat, Constraint, SplitSubspaces, SUBSPACE_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalFormKind {
    /// ψ = A₀·e^X with X commuting with S₀.
    Semisimple,
    /// ψ = S₀·e^{𝒩₀+X} with X commuting with S₀ and killed by ad(𝒩₀*).
    Nilpotent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NfOptions {
    /// Newton stopping tolerance on the off-target part of the exponent.
    pub tol: f64,
    /// Largest accepted off-target residual when Newton stagnates.
    pub accept: f64,
    pub max_iter: usize,
}

impl Default for NfOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            accept: 1e-9,
            max_iter: 50,
        }
    }
}

/// Target and domain of one degree.
#[derive(Debug, Clone)]
pub struct Stage {
    pub degree: usize,
    /// Orthonormal basis of the space the exponent is pushed into.
    pub target: Matrix,
    /// Basis of the admissible generators.
    pub domain: Matrix,
}

/// Everything that depends on A₀ and the group but not on the sample.
#[derive(Debug, Clone)]
pub struct NfSetup {
    pub kind: NormalFormKind,
    pub a0: Matrix,
    pub s0: Matrix,
    /// 𝒩₀ = log(S₀⁻¹A₀).
    pub nil_log: Matrix,
    /// 𝒩₀* under the adapted inner product.
    pub nil_star: Matrix,
    pub gd: GroupData,
    pub ext: ExtendedGroupData,
    pub ip: AdaptedInnerProduct,
    pub base: Matrix,
    pub base_inv: Matrix,
    pub order: usize,
    pub stages: Vec<Stage>,
}

impl NfSetup {
    pub fn new(
        kind: NormalFormKind,
        a0: &Matrix,
        gd: &GroupData,
        ip: &AdaptedInnerProduct,
        order: usize,
    ) -> Result<Self> {
        let n = gd.dim();
        if a0.nrows() != n || ip.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a0.nrows(),
            });
        }
        let su = su_decomposition(a0)?;
        let ext = extended_group(gd, a0)?;
        let nil_star = ip.adjoint(&su.nil_log);
        let base = match kind {
            NormalFormKind::Semisimple => a0.clone(),
            NormalFormKind::Nilpotent => su.semisimple.clone(),
        };
        let base_inv = inverse(&base)?;
        let mut setup = Self {
            kind,
            a0: a0.clone(),
            s0: su.semisimple,
            nil_log: su.nil_log,
            nil_star,
            gd: gd.clone(),
            ext,
            ip: ip.clone(),
            base,
            base_inv,
            order,
            stages: Vec::new(),
        };
        for j in 1..=order {
            let stage = setup.build_stage(j)?;
            setup.stages.push(stage);
        }
        Ok(setup)
    }

    /// Offset subtracted from the linear exponent before it is tested
    /// against the target: 𝒩₀ for the nilpotent form.
    pub fn offset(&self) -> Matrix {
        match self.kind {
            NormalFormKind::Semisimple => Matrix::zeros(self.s0.nrows(), self.s0.nrows()),
            NormalFormKind::Nilpotent => self.nil_log.clone(),
        }
    }

    fn shift_operator(&self, j: usize) -> Result<Matrix> {
        let d = hk_dim(self.gd.dim(), j);
        Ok(adk_operator(&self.s0, j)?.matrix - Matrix::identity(d, d))
    }

    fn build_stage(&self, j: usize) -> Result<Stage> {
        let d = hk_dim(self.gd.dim(), j);
        let shift = self.shift_operator(j)?;
        let p_one = projector_hk(&self.gd, &self.gd.trivial_character(), j)?;
        let (target, domain) = match self.kind {
            NormalFormKind::Semisimple => {
                let p_tilde = projector_hk(&self.ext.group, self.ext.group.character(), j)?;
                let target = constrained_subspace(
                    d,
                    &[
                        Constraint::Kernel(shift.clone()),
                        Constraint::Image(p_tilde),
                    ],
                );
                let domain =
                    constrained_subspace(d, &[Constraint::Image(p_one), Constraint::Image(shift)]);
                (target, domain)
            }
            NormalFormKind::Nilpotent => {
                let p_chi = projector_hk(&self.gd, self.gd.character(), j)?;
                let ad_star = ad_operator(&self.nil_star, j).matrix;
                let target = constrained_subspace(
                    d,
                    &[
                        Constraint::Kernel(shift.clone()),
                        Constraint::Kernel(ad_star.clone()),
                        Constraint::Image(p_chi),
                    ],
                );
                let domain = if j == 1 {
                    let resonant = constrained_subspace(
                        d,
                        &[
                            Constraint::Kernel(shift.clone()),
                            Constraint::Image(ad_star),
                        ],
                    );
                    let moving = Constraint::Image(shift).basis();
                    constrained_subspace(
                        d,
                        &[
                            Constraint::Image(p_one),
                            Constraint::Span(hcat(&moving, &resonant)),
                        ],
                    )
                } else {
                    constrained_subspace(d, &[Constraint::Image(p_one)])
                };
                (target, domain)
            }
        };
        Ok(Stage {
            degree: j,
            target,
            domain,
        })
    }

    /// Exponent Y of ψ = M·e^Y modulo degree j+1.
    pub fn exponent(&self, psi: &TruncatedMap, j: usize) -> Result<TruncatedMap> {
        let f = psi.truncate(j).left_mul(&self.base_inv);
        let y1 = matrix_log(&f.linear())?;
        log_map_with_linear(&f, &y1, j)
    }

    /// Degree-j effect of conjugation by e^φ, φ ∈ H_j.
    pub fn conjugation_operator(&self, y1: &Matrix, j: usize) -> Result<Matrix> {
        let minus = inverse(&ck_operator(&(-y1), j).matrix)?;
        let plus = inverse(&ck_operator(y1, j).matrix)?;
        let ad = adk_operator(&self.base_inv, j)?.matrix;
        Ok(minus * ad - plus)
    }

    /// The formula C_j(−Y₁)·Ad_j(M⁻¹) − C_j(Y₁)⁻¹, without the inverse on
    /// the first factor, for comparison with [`Self::conjugation_operator`].
    pub fn uninverted_operator(&self, y1: &Matrix, j: usize) -> Result<Matrix> {
        let minus = ck_operator(&(-y1), j).matrix;
        let plus = inverse(&ck_operator(y1, j).matrix)?;
        let ad = adk_operator(&self.base_inv, j)?.matrix;
        Ok(minus * ad - plus)
    }
}

/// Per-degree outcome.
#[derive(Debug, Clone)]
pub struct DegreeReport {
    pub degree: usize,
    pub target_dim: usize,
    pub domain_dim: usize,
    pub iterations: usize,
    /// Off-target part of the degree-j exponent after the last step.
    pub residual: f64,
    /// Coordinates of the normalized exponent layer in the target basis.
    pub target_coords: Vec<f64>,
    pub target_basis: Vec<Matrix>,
    /// Sum of the generators applied at this degree.
    pub generator: Matrix,
    /// Generators that leave the degree-j exponent unchanged; adding any
    /// combination to `generator` gives another valid choice.
    pub null_directions: Vec<Matrix>,
    /// Largest entry of (uninverted − derived)·domain at the first step.
    pub formula_discrepancy: f64,
}

impl DegreeReport {
    /// Member of the generator family with prescribed coefficients, as
    /// (component, multi-index, value) triples. Least squares over the null
    /// directions.
    pub fn family_member(&self, pins: &[(usize, Vec<u32>, f64)]) -> Result<Matrix> {
        let n = self.generator.nrows();
        let b = crate::polymap::basis(n, self.degree);
        let mut rows = Matrix::zeros(pins.len(), self.null_directions.len());
        let mut rhs = Vector::zeros(pins.len());
        for (r, (comp, exps, value)) in pins.iter().enumerate() {
            let m = b.index_of(exps).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "{exps:?} is not a degree-{} multi-index",
                    self.degree
                ))
            })?;
            rhs[r] = value - self.generator[(*comp, m)];
            for (c, dir) in self.null_directions.iter().enumerate() {
                rows[(r, c)] = dir[(*comp, m)];
            }
        }
        let s = pseudo_inverse(&rows) * &rhs;
        let mut out = self.generator.clone();
        for (c, dir) in self.null_directions.iter().enumerate() {
            out += dir * s[c];
        }
        let miss = (&rows * &s - &rhs).amax();
        if miss > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "pinned coefficients are not reachable within the family (miss {miss:e})"
            )));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct NormalFormResult {
    pub kind: NormalFormKind,
    pub order: usize,
    /// Φ, with Ad(Φ)ψ = M·e^Y modulo degree k+1.
    pub transform: TruncatedMap,
    /// log of the linear part of Φ.
    pub linear_generator: Matrix,
    /// Y: 𝒩₀ + X for the nilpotent form, X for the semisimple form.
    pub nf_exponent: TruncatedMap,
    pub base: Matrix,
    pub s0: Matrix,
    pub nil_log: Matrix,
    /// Ad(Φ)ψ.
    pub normalized: TruncatedMap,
    /// max coefficient of Ad(Φ)ψ − M·e^Y.
    pub residual: f64,
    pub degrees: Vec<DegreeReport>,
}

impl NormalFormResult {
    /// X alone: the exponent without 𝒩₀.
    pub fn x_part(&self) -> TruncatedMap {
        match self.kind {
            NormalFormKind::Semisimple => self.nf_exponent.clone(),
            NormalFormKind::Nilpotent => {
                let mut x = self.nf_exponent.clone();
                let lin = x.linear() - &self.nil_log;
                x.set_linear(&lin);
                x
            }
        }
    }

    /// The normal-form map M·e^Y.
    pub fn normal_form_map(&self) -> TruncatedMap {
        exp_vf(&self.nf_exponent, self.order).left_mul(&self.base)
    }

    pub fn report(&self) -> NormalFormReport {
        NormalFormReport {
            kind: self.kind,
            order: self.order,
            residual: self.residual,
            degrees: self
                .degrees
                .iter()
                .map(|d| DegreeSummary {
                    degree: d.degree,
                    target_dim: d.target_dim,
                    domain_dim: d.domain_dim,
                    null_dim: d.null_directions.len(),
                    iterations: d.iterations,
                    residual: d.residual,
                    formula_discrepancy: d.formula_discrepancy,
                    target_coords: d.target_coords.clone(),
                    target_basis: d
                        .target_basis
                        .iter()
                        .map(|b| layer_entries(b, d.degree))
                        .collect(),
                    generator: layer_entries(&d.generator, d.degree),
                    null_directions: d
                        .null_directions
                        .iter()
                        .map(|b| layer_entries(b, d.degree))
                        .collect(),
                })
                .collect(),
            transform: self.transform.entries(),
            exponent: self.nf_exponent.entries(),
        }
    }
}

fn layer_entries(layer: &Matrix, degree: usize) -> Vec<CoefficientEntry> {
    TruncatedMap::homogeneous(layer.clone(), degree)
        .entries()
        .into_iter()
        .filter(|e| e.degree == degree)
        .collect()
}

/// Serializable summary of a [`NormalFormResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormReport {
    pub kind: NormalFormKind,
    pub order: usize,
    pub residual: f64,
    pub degrees: Vec<DegreeSummary>,
    pub transform: Vec<CoefficientEntry>,
    pub exponent: Vec<CoefficientEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub degree: usize,
    pub target_dim: usize,
    pub domain_dim: usize,
    pub null_dim: usize,
    pub iterations: usize,
    pub residual: f64,
    pub formula_discrepancy: f64,
    pub target_coords: Vec<f64>,
    pub target_basis: Vec<Vec<CoefficientEntry>>,
    pub generator: Vec<CoefficientEntry>,
    pub null_directions: Vec<Vec<CoefficientEntry>>,
}

fn off_target(target: &Matrix, z: &Vector) -> (Vector, f64) {
    let coords = if target.ncols() > 0 {
        target.transpose() * z
    } else {
        Vector::zeros(0)
    };
    let proj = if target.ncols() > 0 {
        target * &coords
    } else {
        Vector::zeros(z.len())
    };
    let res = (z - proj).amax();
    (coords, res)
}

fn degree_layer_of_exponent(
    setup: &NfSetup,
    psi: &TruncatedMap,
    j: usize,
) -> Result<(Matrix, Vector)> {
    let y = setup.exponent(psi, j)?;
    let y1 = y.linear();
    let mut z = y.layer_vector(j);
    if j == 1 {
        z -= TruncatedMap::from_linear(&setup.offset(), 1).layer_vector(1);
    }
    Ok((y1, z))
}

fn apply_generator(
    psi: &TruncatedMap,
    phi: &Matrix,
    j: usize,
    k: usize,
) -> Result<(TruncatedMap, TruncatedMap)> {
    if j == 1 {
        let e = crate::linalg::matrix_exp(phi);
        let e_inv = inverse(&e)?;
        Ok((
            psi.conjugate_linear(&e, &e_inv),
            TruncatedMap::from_linear(&e, k),
        ))
    } else {
        let e = exp_vf(&TruncatedMap::homogeneous(phi.clone(), j), k);
        Ok((ad_conjugate(&e, psi, k)?, e))
    }
}

fn normalize_degree(
    setup: &NfSetup,
    psi: &TruncatedMap,
    j: usize,
    k: usize,
    opts: &NfOptions,
) -> Result<(TruncatedMap, TruncatedMap, DegreeReport)> {
    let n = psi.dim();
    let stage = &setup.stages[j - 1];
    let target = &stage.target;
    let domain = &stage.domain;
    let mut cur = psi.clone();
    let mut step = TruncatedMap::identity(n, k);
    let mut generator = Matrix::zeros(n, crate::polymap::monomial_count(n, j));
    let mut null_directions = Vec::new();
    let mut discrepancy = 0.0;
    let mut iterations = 0;
    let (mut y1, mut z) = degree_layer_of_exponent(setup, &cur, j)?;
    let (mut coords, mut res) = off_target(target, &z);
    let mut previous = f64::INFINITY;
    while iterations < opts.max_iter {
        let scale = z.amax().max(1.0);
        if res <= opts.tol * scale || (iterations > 0 && res >= 0.5 * previous) {
            break;
        }
        let l = setup.conjugation_operator(&y1, j)?;
        let ld = &l * domain;
        if iterations == 0 {
            let alt = setup.uninverted_operator(&y1, j)? * domain;
            discrepancy = max_abs(&(alt - &ld));
            let kernel = kernel_basis(&ld, Some(SUBSPACE_TOL * max_abs(&ld).max(1.0)));
            null_directions = (0..kernel.ncols())
                .map(|c| {
                    let v = domain * kernel.column(c);
                    TruncatedMap::layer_from_vector(n, j, &v)
                })
                .collect();
        }
        let system = hcat(target, &(-&ld));
        let sol = pseudo_inverse(&system) * &z;
        let a = sol.rows(target.ncols(), domain.ncols()).into_owned();
        let phi = TruncatedMap::layer_from_vector(n, j, &(domain * a));
        let (next, e) = apply_generator(&cur, &phi, j, k)?;
        cur = next;
        step = compose(&e, &step, k)?;
        generator += &phi;
        iterations += 1;
        previous = res;
        (y1, z) = degree_layer_of_exponent(setup, &cur, j)?;
        (coords, res) = off_target(target, &z);
    }
    let scale = z.amax().max(1.0);
    if res > opts.accept * scale {
        return Err(Error::NoConvergence {
            what: format!("normal form at degree {j}"),
            iterations,
            residual: res,
        });
    }
    if j == 1 {
        generator = matrix_log(&step.linear())?;
    }
    let target_basis = (0..target.ncols())
        .map(|c| TruncatedMap::layer_from_vector(n, j, &target.column(c).into_owned()))
        .collect();
    let report = DegreeReport {
        degree: j,
        target_dim: target.ncols(),
        domain_dim: domain.ncols(),
        iterations,
        residual: res,
        target_coords: coords.iter().copied().collect(),
        target_basis,
        generator,
        null_directions,
        formula_discrepancy: discrepancy,
    };
    Ok((cur, step, report))
}

/// Prescribed coefficient of the generator at one degree. Selects a member
/// of the generator family when the degree has null directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pin {
    pub degree: usize,
    pub component: usize,
    pub exponents: Vec<u32>,
    pub value: f64,
}

/// Brings one map into the normal form described by `setup`.
pub fn normalize(
    setup: &NfSetup,
    psi: &TruncatedMap,
    opts: &NfOptions,
) -> Result<NormalFormResult> {
    normalize_pinned(setup, psi, opts, &[])
}

/// As [`normalize`], with the generator of each pinned degree moved along
/// its null directions to meet the pins. Pins at degree 1 are rejected: the
/// linear step is solved uniquely.
pub fn normalize_pinned(
    setup: &NfSetup,
    psi: &TruncatedMap,
    opts: &NfOptions,
    pins: &[Pin],
) -> Result<NormalFormResult> {
    let k = setup.order;
    let n = setup.gd.dim();
    if psi.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: psi.dim(),
        });
    }
    let psi = psi.truncate(k);
    let mut cur = psi.clone();
    let mut transform = TruncatedMap::identity(n, k);
    let mut degrees = Vec::with_capacity(k);
    for j in 1..=k {
        let (mut next, mut step, mut report) = normalize_degree(setup, &cur, j, k, opts)?;
        let here: Vec<(usize, Vec<u32>, f64)> = pins
            .iter()
            .filter(|p| p.degree == j)
            .map(|p| (p.component, p.exponents.clone(), p.value))
            .collect();
        if !here.is_empty() {
            if j == 1 {
                return Err(Error::InvalidInput(
                    "the linear generator cannot be pinned".into(),
                ));
            }
            let member = report.family_member(&here)?;
            let shift = &member - &report.generator;
            let (moved, e) = apply_generator(&next, &shift, j, k)?;
            next = moved;
            step = compose(&e, &step, k)?;
            report.generator = member;
        }
        cur = next;
        transform = compose(&step, &transform, k)?;
        degrees.push(report);
    }
    // Exponent with every layer projected onto its target.
    let raw = setup.exponent(&cur, k)?;
    let mut nf_exponent = raw.clone();
    for (j, stage) in setup.stages.iter().enumerate().skip(1) {
        let d = j + 1;
        let z = raw.layer_vector(d);
        let proj = if stage.target.ncols() > 0 {
            &stage.target * (stage.target.transpose() * z)
        } else {
            Vector::zeros(z.len())
        };
        nf_exponent.set_layer(d, TruncatedMap::layer_from_vector(n, d, &proj));
    }
    let normalized = ad_conjugate(&transform, &psi, k)?;
    let model = exp_vf(&nf_exponent, k).left_mul(&setup.base);
    let residual = normalized.max_diff(&model);
    let linear_generator = matrix_log(&transform.linear())?;
    Ok(NormalFormResult {
        kind: setup.kind,
        order: k,
        transform,
        linear_generator,
        nf_exponent,
        base: setup.base.clone(),
        s0: setup.s0.clone(),
        nil_log: setup.nil_log.clone(),
        normalized,
        residual,
        degrees,
    })
}

/// One parameter sample of a family ψ_λ.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySample {
    pub lambda: Vec<f64>,
    pub map: TruncatedMap,
}

/// Normal form ψ_λ ↦ A₀·e^{X_λ} with X_λ ∈ ker(Ad(S₀)−I) ∩ Im(P^χ̃) on the
/// extended group.
pub fn semisimple_nf(
    family: &[FamilySample],
    a0: &Matrix,
    gd: &GroupData,
    ip: &AdaptedInnerProduct,
    k: usize,
) -> Result<Vec<NormalFormResult>> {
    let setup = NfSetup::new(NormalFormKind::Semisimple, a0, gd, ip, k)?;
    family
        .iter()
        .map(|s| normalize(&setup, &s.map, &NfOptions::default()))
        .collect()
}

/// Normal form ψ_λ ↦ S₀·e^{𝒩₀+X_λ} with X_λ commuting with S₀, killed by
/// ad(𝒩₀*), and χ-equivariant.
pub fn nilpotent_nf(
    family: &[FamilySample],
    a0: &Matrix,
    gd: &GroupData,
    ip: &AdaptedInnerProduct,
    k: usize,
) -> Result<Vec<NormalFormResult>> {
    let setup = NfSetup::new(NormalFormKind::Nilpotent, a0, gd, ip, k)?;
    family
        .iter()
        .map(|s| normalize(&setup, &s.map, &NfOptions::default()))
        .collect()
}

/// (φ, B) with e^φ A e^{−φ} = A₀e^B, B ∈ ker(Ad(S₀)−I) ∩ gl^χ̃.
pub fn linear_nf(
    a: &Matrix,
    a0: &Matrix,
    gd: &GroupData,
    ip: &AdaptedInnerProduct,
) -> Result<(Matrix, Matrix)> {
    let setup = NfSetup::new(NormalFormKind::Semisimple, a0, gd, ip, 1)?;
    let r = normalize(
        &setup,
        &TruncatedMap::from_linear(a, 1),
        &NfOptions::default(),
    )?;
    Ok((r.linear_generator, r.nf_exponent.linear()))
}

/// (φ, C) with e^φ A e^{−φ} = S₀e^{𝒩₀+C}, C ∈ ker(Ad(S₀)−I) ∩ ker(ad 𝒩₀*) ∩ gl^χ.
pub fn linear_nilpotent_nf(
    a: &Matrix,
    a0: &Matrix,
    gd: &GroupData,
    ip: &AdaptedInnerProduct,
) -> Result<(Matrix, Matrix)> {
    let setup = NfSetup::new(NormalFormKind::Nilpotent, a0, gd, ip, 1)?;
    let r = normalize(
        &setup,
        &TruncatedMap::from_linear(a, 1),
        &NfOptions::default(),
    )?;
    let c = r.x_part().linear();
    Ok((r.linear_generator, c))
}

/// Residuals of the four exponent properties of the nilpotent form, as
/// [vanishing at 0 with zero linear part, S₀-commutation, ad(𝒩₀*)-kernel,
/// (𝒩₀+X)∘g = χ(g)·g∘(𝒩₀+X)]. The first entry is only meaningful at the
/// unperturbed sample.
pub fn exponent_constraint_residuals(
    result: &NormalFormResult,
    setup: &NfSetup,
) -> Result<[f64; 4]> {
    let x = result.x_part();
    let n = x.dim();
    let vanishing = max_abs(&x.linear());
    let mut commute = 0.0_f64;
    let mut kernel = 0.0_f64;
    for d in 1..=x.order() {
        let v = x.layer_vector(d);
        let ad_s = adk_operator(&setup.s0, d)?.matrix;
        commute = commute.max((&ad_s * &v - &v).amax());
        let ad_star = ad_operator(&setup.nil_star, d).matrix;
        kernel = kernel.max((ad_star * &v).amax());
    }
    let y = &result.nf_exponent;
    let mut character = 0.0_f64;
    for (i, g) in setup.gd.elements().iter().enumerate() {
        let lhs = y.conjugate_linear(setup.gd.inverse_element(i), g);
        let rhs = y.scale(setup.gd.chi(i) as f64);
        character = character.max(lhs.max_diff(&rhs));
    }
    debug_assert_eq!(n, setup.gd.dim());
    Ok([vanishing, commute, kernel, character])
}

/// max_g of the coefficient deviation of g∘Φ∘g⁻¹ from Φ.
pub fn transform_equivariance_residual(transform: &TruncatedMap, gd: &GroupData) -> f64 {
    gd.elements()
        .iter()
        .enumerate()
        .map(|(i, g)| {
            transform
                .conjugate_linear(g, gd.inverse_element(i))
                .max_diff(transform)
        })
        .fold(0.0, f64::max)
}

/// Smallest singular value and condition number of Ad_k(A₀⁻¹) − I on
/// H_k ∩ Im(P¹_G) ∩ Im(Ad_k(S₀⁻¹) − I).
pub fn homological_condition(
    a0: &Matrix,
    s0: &Matrix,
    gd: &GroupData,
    k: usize,
) -> Result<(f64, f64)> {
    let d = hk_dim(gd.dim(), k);
    let id = Matrix::identity(d, d);
    let shift = adk_operator(s0, k)?.matrix - &id;
    let p_one = projector_hk(gd, &gd.trivial_character(), k)?;
    let domain = constrained_subspace(d, &[Constraint::Image(p_one), Constraint::Image(shift)]);
    if domain.ncols() == 0 {
        return Ok((f64::INFINITY, 1.0));
    }
    let op = (adk_operator(&inverse(a0)?, k)?.matrix - id) * &domain;
    let s = crate::linalg::singular_values(&op);
    let smin = s.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let smax = s.iter().fold(0.0_f64, |a, &b| a.max(b));
    Ok((
        smin,
        if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        },
    ))
}

/// Adjoint compatibility on H_k: with the Fischer product, the adjoint of
/// ad(𝒩₀) restricted to ker(Ad_k(S₀)−I) should be ad(𝒩₀*) restricted there.
/// Returns the largest entry of the mismatch.
pub fn adjoint_compatibility(
    nil_log: &Matrix,
    s0: &Matrix,
    ip: &AdaptedInnerProduct,
    k: usize,
) -> Result<f64> {
    let d = hk_dim(ip.dim(), k);
    let m = fischer_gram(ip, k)?;
    let shift = adk_operator(s0, k)?.matrix - Matrix::identity(d, d);
    let kernel = constrained_subspace(d, &[Constraint::Kernel(shift)]);
    if kernel.ncols() == 0 {
        return Ok(0.0);
    }
    // Fischer-orthonormal basis of the kernel.
    let gram = kernel.transpose() * &m * &kernel;
    let chol = gram.cholesky().ok_or_else(|| {
        Error::InvalidInput("Fischer Gram matrix is not positive definite".into())
    })?;
    let q = &kernel * inverse(&chol.l().transpose())?;
    let ad = ad_operator(nil_log, k).matrix;
    let ad_star = ad_operator(&ip.adjoint(nil_log), k).matrix;
    let a = q.transpose() * &m * ad * &q;
    let b = q.transpose() * &m * ad_star * &q;
    Ok(max_abs(&(a.transpose() - b)))
}

/// The two candidate codomains ker(Ad_k(S₀)−I) ∩ Im(P^χ̃) (extended group)
/// and ker(Ad_k(S₀)−I) ∩ Im(P^χ_G), compared by dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodomainComparison {
    pub degree: usize,
    pub dim_extended: usize,
    pub dim_group: usize,
    pub dim_common: usize,
}

pub fn compare_codomains(setup: &NfSetup, k: usize) -> Result<CodomainComparison> {
    let d = hk_dim(setup.gd.dim(), k);
    let shift = setup.shift_operator(k)?;
    let p_tilde = projector_hk(&setup.ext.group, setup.ext.group.character(), k)?;
    let p_chi = projector_hk(&setup.gd, setup.gd.character(), k)?;
    let a = constrained_subspace(
        d,
        &[
            Constraint::Kernel(shift.clone()),
            Constraint::Image(p_tilde),
        ],
    );
    let b = constrained_subspace(d, &[Constraint::Kernel(shift), Constraint::Image(p_chi)]);
    let common = crate::linalg::intersect_subspaces(&a, &b, None);
    Ok(CodomainComparison {
        degree: k,
        dim_extended: a.ncols(),
        dim_group: b.ncols(),
        dim_common: common.ncols(),
    })
}

/// Smallest singular value of the degree-j system at the unperturbed point,
/// restricted to the complement of its null space.
pub fn stage_sigma_min(setup: &NfSetup, j: usize) -> Result<f64> {
    let y1 = setup.offset();
    let ld = setup.conjugation_operator(&y1, j)? * &setup.stages[j - 1].domain;
    let s = crate::linalg::singular_values(&ld);
    let smax = s.iter().fold(0.0_f64, |a, &b| a.max(b));
    let thr = SUBSPACE_TOL * smax.max(1.0);
    Ok(s.iter()
        .filter(|&&v| v > thr)
        .fold(f64::INFINITY, |a, &b| a.min(b)))
    .map(|v: f64| {
        if v.is_finite() {
            v
        } else {
            smallest_singular_value(&ld)
        }
    })
}
