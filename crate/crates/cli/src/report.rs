//! Report types. Every report serializes to JSON and parses back unchanged;
//! the text form is a deterministic rendering of the same data.

use std::fmt::Write as _;

use eqnf::linalg::Matrix;
use eqnf::normalform::{NormalFormKind, NormalFormReport};
use eqnf::polymap::CoefficientEntry;
use eqnf::reduction::{EquivarianceResiduals, PeriodicPoint, SearchBox};
use serde::{Deserialize, Serialize};

pub type Rows = Vec<Vec<f64>>;

pub fn rows(m: &Matrix) -> Rows {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    /// Non-finite residuals fail and are stored as `f64::MAX` so the JSON
    /// stays numeric.
    pub fn new(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        let finite = residual.is_finite();
        Self {
            name: name.into(),
            residual: if finite { residual } else { f64::MAX },
            tol,
            pass: finite && residual <= tol,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            residual: if ok { 0.0 } else { 1.0 },
            tol: 0.0,
            pass: ok,
        }
    }
}

fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub a0: Rows,
    pub semisimple: Rows,
    pub nilpotent: Rows,
    /// 𝒩₀ with A₀ = S₀·exp(𝒩₀).
    pub nil_log: Rows,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormSample {
    pub lambda: Vec<f64>,
    pub normal_form: NormalFormReport,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormCmdReport {
    pub kind: NormalFormKind,
    pub order: usize,
    pub checks: Vec<Check>,
    pub samples: Vec<NormalFormSample>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceSample {
    pub lambda: Vec<f64>,
    /// Dψ_r(0) in u-coordinates.
    pub jacobian_at_origin: Rows,
    /// Symmetry residuals at a fixed probe point, when U ≠ 0.
    pub equivariance: Option<EquivarianceResiduals>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceReport {
    pub period: usize,
    /// dim U.
    pub reduced_dim: usize,
    /// dim of the complement in Y_q.
    pub complement_dim: usize,
    pub u_basis: Rows,
    pub s0_u: Rows,
    pub a0_u: Rows,
    pub checks: Vec<Check>,
    pub samples: Vec<ReduceSample>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicEntry {
    pub point: PeriodicPoint,
    /// ‖B(u)‖ at the determining-equation solution.
    pub bifurcation_residual: f64,
    /// Distance to the zero of B found by Newton from the same point.
    pub bifurcation_agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicReport {
    pub period: usize,
    pub search_box: SearchBox,
    pub points: Vec<PeriodicEntry>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Report {
    Decompose(DecomposeReport),
    NormalForm(NormalFormCmdReport),
    Reduce(ReduceReport),
    Periodic(PeriodicReport),
    Verify(VerifyReport),
}

impl Report {
    pub fn pass(&self) -> bool {
        match self {
            Report::Decompose(r) => r.pass,
            Report::NormalForm(r) => r.pass,
            Report::Reduce(r) => r.pass,
            Report::Periodic(r) => r.pass,
            Report::Verify(r) => r.pass,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(self).expect("reports contain only finite numbers");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Report::Decompose(r) => text_decompose(&mut out, r),
            Report::NormalForm(r) => text_normal_form(&mut out, r),
            Report::Reduce(r) => text_reduce(&mut out, r),
            Report::Periodic(r) => text_periodic(&mut out, r),
            Report::Verify(r) => text_checks(&mut out, &r.checks),
        }
        let _ = writeln!(out, "status: {}", if self.pass() { "PASS" } else { "FAIL" });
        out
    }
}

pub(crate) fn finish<T>(checks: &[Check], build: impl FnOnce(bool) -> T) -> T {
    build(all_pass(checks))
}

/// Values below this print as 0 in text output; JSON keeps them.
const PRINT_ZERO: f64 = 5e-13;

fn num(x: f64) -> String {
    if x.abs() < PRINT_ZERO {
        return "0".into();
    }
    format!("{x:.12}")
        .trim_end_matches('0')
        .trim_end_matches('.')
        .to_string()
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| num(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn matrix(out: &mut String, name: &str, m: &Rows) {
    let _ = writeln!(out, "{name}:");
    if m.iter().all(|r| r.is_empty()) {
        let _ = writeln!(out, "  (empty)");
        return;
    }
    for row in m {
        let _ = writeln!(out, "  {}", vector(row));
    }
}

fn text_checks(out: &mut String, checks: &[Check]) {
    for c in checks {
        let _ = writeln!(
            out,
            "  [{}] {:<48} {} (tol {})",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            sci(c.residual),
            sci(c.tol)
        );
    }
}

fn monomial(exps: &[u32]) -> String {
    let names = ["x", "y", "z", "w"];
    let mut parts = Vec::new();
    for (i, &e) in exps.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let v = if exps.len() <= names.len() {
            names[i].to_string()
        } else {
            format!("x{}", i + 1)
        };
        parts.push(if e == 1 { v } else { format!("{v}^{e}") });
    }
    parts.join("*")
}

fn entries(out: &mut String, pad: &str, name: &str, list: &[CoefficientEntry]) {
    let _ = writeln!(out, "{pad}{name}:");
    let nonzero: Vec<&CoefficientEntry> = list
        .iter()
        .filter(|e| e.coefficient.abs() >= PRINT_ZERO)
        .collect();
    if nonzero.is_empty() {
        let _ = writeln!(out, "{pad}  0");
    }
    for e in nonzero {
        let _ = writeln!(
            out,
            "{pad}  component {} degree {}: {} {}",
            e.component,
            e.degree,
            num(e.coefficient),
            monomial(&e.exponents)
        );
    }
}

fn text_decompose(out: &mut String, r: &DecomposeReport) {
    matrix(out, "A0", &r.a0);
    matrix(out, "S (semisimple)", &r.semisimple);
    matrix(out, "N (nilpotent)", &r.nilpotent);
    matrix(out, "log of unipotent part", &r.nil_log);
    let _ = writeln!(out, "residuals:");
    text_checks(out, &r.checks);
}

fn text_normal_form(out: &mut String, r: &NormalFormCmdReport) {
    let kind = match r.kind {
        NormalFormKind::Semisimple => "semisimple",
        NormalFormKind::Nilpotent => "nilpotent",
    };
    let _ = writeln!(out, "{kind} normal form, order {}", r.order);
    text_checks(out, &r.checks);
    for s in &r.samples {
        let _ = writeln!(out, "sample lambda = {}", vector(&s.lambda));
        for d in &s.normal_form.degrees {
            let _ = writeln!(
                out,
                "  degree {}: admissible exponent dim {}, generator domain dim {}, free generator directions {}",
                d.degree, d.target_dim, d.domain_dim, d.null_dim
            );
            if !d.target_coords.is_empty() {
                let _ = writeln!(
                    out,
                    "    solved exponent coordinates {}",
                    vector(&d.target_coords)
                );
            }
            for (i, b) in d.target_basis.iter().enumerate() {
                entries(out, "    ", &format!("admissible direction {i}"), b);
            }
            for (i, b) in d.null_directions.iter().enumerate() {
                entries(out, "    ", &format!("free generator direction {i}"), b);
            }
            entries(out, "    ", "chosen generator", &d.generator);
        }
        entries(out, "  ", "transform", &s.normal_form.transform);
        entries(out, "  ", "exponent", &s.normal_form.exponent);
        text_checks(out, &s.checks);
    }
}

fn indent(s: &str) -> String {
    s.lines().map(|l| format!("  {l}\n")).collect()
}

fn text_reduce(out: &mut String, r: &ReduceReport) {
    let _ = writeln!(
        out,
        "period {}: dim U = {}, complement dim = {}",
        r.period, r.reduced_dim, r.complement_dim
    );
    if r.reduced_dim == r.u_basis.len() && r.complement_dim == 0 && r.period == 1 {
        let _ = writeln!(out, "trivial reduction: U is the whole space");
    }
    matrix(out, "basis of U (columns)", &r.u_basis);
    matrix(out, "S0 on U", &r.s0_u);
    matrix(out, "A0 on U", &r.a0_u);
    text_checks(out, &r.checks);
    for s in &r.samples {
        let _ = writeln!(out, "sample lambda = {}", vector(&s.lambda));
        let mut tmp = String::new();
        matrix(&mut tmp, "reduced Jacobian at 0", &s.jacobian_at_origin);
        out.push_str(&indent(&tmp));
        text_checks(out, &s.checks);
    }
}

fn text_periodic(out: &mut String, r: &PeriodicReport) {
    let _ = writeln!(
        out,
        "period {}: search radius {}, {} points per axis, {} solutions",
        r.period,
        num(r.search_box.radius),
        r.search_box.points_per_axis,
        r.points.len()
    );
    for e in &r.points {
        let p = &e.point;
        let _ = writeln!(
            out,
            "  lambda {} orbit {}: u = {}, x* = {}, {}",
            vector(&p.lambda),
            p.orbit_id,
            vector(&p.u),
            vector(&p.x_star),
            if p.isolated {
                "isolated".to_string()
            } else {
                format!("non-isolated (null dim {})", p.null_dim)
            }
        );
        let _ = writeln!(
            out,
            "    residual {}, lifted residual {}, |B(u)| {}, B-zero agreement {}",
            sci(p.residual),
            sci(p.lifted_residual),
            sci(e.bifurcation_residual),
            sci(e.bifurcation_agreement)
        );
    }
    text_checks(out, &r.checks);
}
