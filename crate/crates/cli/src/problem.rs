//! Problem files: TOML describing a map family, its symmetry group and the
//! numerical settings.

use std::path::Path;

use eqnf::builtin::{quadrant_group, quadrant_map};
use eqnf::group::{map_equivariance_residual, GroupData, MAX_GROUP_ORDER};
use eqnf::linalg::{Matrix, Vector};
use eqnf::normalform::{FamilySample, NormalFormKind, Pin};
use eqnf::polymap::TruncatedMap;
use eqnf::reduction::SearchBox;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Builtin maps that can stand in for a coefficient table.
pub const BUILTINS: &[&str] = &["quadrant"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    /// Phase-space dimension.
    pub n: usize,
    /// Parameter dimension.
    #[serde(default)]
    pub m: usize,
    /// Truncation order k.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Period q.
    #[serde(default = "default_period")]
    pub period: usize,
    pub map: MapSpec,
    #[serde(default)]
    pub group: GroupSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub search_box: Option<SearchBox>,
    /// Grid of parameter values, `a:b:count` per parameter separated by commas.
    #[serde(default)]
    pub lambda_grid: Option<String>,
    #[serde(default)]
    pub normal_form: NormalFormSpec,
}

fn default_order() -> usize {
    2
}

fn default_period() -> usize {
    1
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub builtin: Option<String>,
    /// Linear part, row-major.
    pub linear: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub terms: Vec<Term>,
    /// Coefficients multiplied by one parameter and added to the base map.
    #[serde(default)]
    pub lambda_terms: Vec<LambdaTerm>,
    /// Explicit per-parameter maps. Each inherits the base linear part when
    /// it gives none.
    #[serde(default)]
    pub samples: Vec<SampleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub component: usize,
    pub exponents: Vec<u32>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaTerm {
    pub parameter: usize,
    pub component: usize,
    pub exponents: Vec<u32>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub lambda: Vec<f64>,
    pub linear: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub builtin: Option<String>,
    #[serde(default)]
    pub generators: Vec<Generator>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub matrix: Vec<Vec<f64>>,
    pub character: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Pass/fail threshold for reported residuals.
    pub residual: f64,
    /// Newton stopping tolerance.
    pub newton: f64,
    /// Trust radius of the reduction.
    pub radius: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-9,
            newton: 1e-12,
            radius: eqnf::reduction::DEFAULT_RADIUS,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFormSpec {
    pub kind: Option<NormalFormKind>,
    #[serde(default)]
    pub pins: Vec<Pin>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub order: Option<usize>,
    pub period: Option<usize>,
    pub tol: Option<f64>,
    pub radius: Option<f64>,
    pub lambda_grid: Option<String>,
}

/// A validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub n: usize,
    pub m: usize,
    pub order: usize,
    pub period: usize,
    pub group: GroupData,
    /// The map at λ = 0.
    pub base: TruncatedMap,
    pub samples: Vec<FamilySample>,
    pub tolerances: Tolerances,
    pub search_box: SearchBox,
    pub kind: NormalFormKind,
    pub pins: Vec<Pin>,
}

fn parse_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Parse(format!("{field}: {msg}"))
}

pub fn read_problem(path: &Path) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    parse_problem(&text).map_err(|e| match e {
        CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse(e.to_string().trim_end().to_string()))
}

fn matrix(field: &str, rows: &[Vec<f64>], n: usize) -> Result<Matrix, CliError> {
    if rows.len() != n {
        return Err(parse_error(
            field,
            format!("expected {n} rows, found {}", rows.len()),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(parse_error(
                &format!("{field}[{i}]"),
                format!("expected {n} entries, found {}", row.len()),
            ));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(parse_error(
                &format!("{field}[{i}]"),
                format!("non-finite entry {v}"),
            ));
        }
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Matrix::from_row_slice(n, n, &flat))
}

fn check_monomial(
    field: &str,
    component: usize,
    exponents: &[u32],
    n: usize,
) -> Result<usize, CliError> {
    if component >= n {
        return Err(parse_error(
            field,
            format!("component {component} out of range 0..{n}"),
        ));
    }
    if exponents.len() != n {
        return Err(parse_error(
            field,
            format!("expected {n} exponents, found {}", exponents.len()),
        ));
    }
    let degree: u32 = exponents.iter().sum();
    if degree == 0 {
        return Err(parse_error(
            field,
            "constant terms would move the fixed point",
        ));
    }
    Ok(degree as usize)
}

fn apply_terms(map: &mut TruncatedMap, field: &str, terms: &[Term]) -> Result<(), CliError> {
    let n = map.dim();
    for (i, t) in terms.iter().enumerate() {
        let f = format!("{field}[{i}]");
        let d = check_monomial(&f, t.component, &t.exponents, n)?;
        if d > map.order() {
            return Err(parse_error(
                &f,
                format!("degree {d} exceeds the truncation order {}", map.order()),
            ));
        }
        if !t.value.is_finite() {
            return Err(parse_error(&f, "non-finite value"));
        }
        map.add_coeff(t.component, &t.exponents, t.value);
    }
    Ok(())
}

fn max_term_degree<'a>(terms: impl Iterator<Item = &'a [u32]>) -> usize {
    terms
        .map(|e| e.iter().sum::<u32>() as usize)
        .max()
        .unwrap_or(1)
}

/// Parses `a:b:count` per parameter, comma separated; a bare number is a
/// single value. Returns the Cartesian product in row-major order.
pub fn parse_lambda_grid(spec: &str, m: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let axes: Vec<&str> = spec.split(',').map(str::trim).collect();
    if axes.len() != m {
        return Err(parse_error(
            "lambda_grid",
            format!("expected {m} axes, found {}", axes.len()),
        ));
    }
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (i, axis) in axes.iter().enumerate() {
        let field = format!("lambda_grid[{i}]");
        let parts: Vec<&str> = axis.split(':').collect();
        let num = |s: &str| -> Result<f64, CliError> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| parse_error(&field, format!("bad number '{s}'")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_error(&field, "non-finite value"))
            }
        };
        let vals = match parts.as_slice() {
            [v] => vec![num(v)?],
            [a, b, c] => {
                let (a, b) = (num(a)?, num(b)?);
                let count: usize = c
                    .trim()
                    .parse()
                    .map_err(|_| parse_error(&field, format!("bad count '{c}'")))?;
                match count {
                    0 => return Err(parse_error(&field, "count must be positive")),
                    1 => vec![a],
                    _ => (0..count)
                        .map(|j| a + (b - a) * j as f64 / (count - 1) as f64)
                        .collect(),
                }
            }
            _ => return Err(parse_error(&field, "expected 'value' or 'start:end:count'")),
        };
        values.push(vals);
    }
    let mut out = vec![Vec::new()];
    for vals in &values {
        out = out
            .iter()
            .flat_map(|prefix| {
                vals.iter().map(move |v| {
                    let mut p: Vec<f64> = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    Ok(out)
}

fn build_group(spec: &GroupSpec, n: usize) -> Result<GroupData, CliError> {
    if let Some(name) = &spec.builtin {
        if !spec.generators.is_empty() {
            return Err(parse_error(
                "group",
                "give either builtin or generators, not both",
            ));
        }
        return match name.as_str() {
            "quadrant" if n == 2 => quadrant_group().map_err(|e| parse_error("group.builtin", e)),
            "quadrant" => Err(parse_error("group.builtin", "quadrant requires n = 2")),
            other => Err(parse_error(
                "group.builtin",
                format!("unknown builtin '{other}'"),
            )),
        };
    }
    let mut gens = Vec::with_capacity(spec.generators.len());
    for (i, g) in spec.generators.iter().enumerate() {
        let field = format!("group.generators[{i}]");
        if g.character != 1 && g.character != -1 {
            return Err(parse_error(
                &format!("{field}.character"),
                "must be 1 or -1",
            ));
        }
        gens.push((
            matrix(&format!("{field}.matrix"), &g.matrix, n)?,
            g.character,
        ));
    }
    if gens.is_empty() {
        return Ok(GroupData::trivial(n));
    }
    GroupData::from_generators_bounded(&gens, MAX_GROUP_ORDER)
        .map_err(|e| parse_error("group.generators", e))
}

impl ProblemFile {
    /// Validates the file and builds the family.
    pub fn resolve(&self, ov: &Overrides) -> Result<Problem, CliError> {
        let n = self.n;
        if n == 0 {
            return Err(parse_error("n", "must be positive"));
        }
        let order = ov.order.unwrap_or(self.order);
        if order == 0 {
            return Err(parse_error("order", "must be positive"));
        }
        let period = ov.period.unwrap_or(self.period);
        if period == 0 {
            return Err(parse_error("period", "must be positive"));
        }
        let mut tolerances = self.tolerances;
        if let Some(t) = ov.tol {
            tolerances.residual = t;
        }
        if let Some(r) = ov.radius {
            tolerances.radius = r;
        }
        for (name, v) in [
            ("tolerances.residual", tolerances.residual),
            ("tolerances.newton", tolerances.newton),
            ("tolerances.radius", tolerances.radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(parse_error(name, "must be a positive number"));
            }
        }
        let group = build_group(&self.group, n)?;
        let map = &self.map;

        let term_degree = max_term_degree(
            map.terms
                .iter()
                .map(|t| t.exponents.as_slice())
                .chain(map.lambda_terms.iter().map(|t| t.exponents.as_slice()))
                .chain(
                    map.samples
                        .iter()
                        .flat_map(|s| s.terms.iter().map(|t| t.exponents.as_slice())),
                ),
        );
        let truncation = order.max(term_degree);
        let mut base = match &map.builtin {
            Some(name) => {
                if map.linear.is_some() || !map.terms.is_empty() {
                    return Err(parse_error(
                        "map",
                        "a builtin map takes no linear part or terms",
                    ));
                }
                match name.as_str() {
                    "quadrant" if n == 2 => quadrant_map(order.max(3)),
                    "quadrant" => {
                        return Err(parse_error("map.builtin", "quadrant requires n = 2"))
                    }
                    other => {
                        return Err(parse_error(
                            "map.builtin",
                            format!("unknown builtin '{other}'"),
                        ))
                    }
                }
            }
            None => {
                let rows = map
                    .linear
                    .as_ref()
                    .ok_or_else(|| parse_error("map", "missing 'linear' (or 'builtin')"))?;
                let mut f = TruncatedMap::from_linear(&matrix("map.linear", rows, n)?, truncation);
                apply_terms(&mut f, "map.terms", &map.terms)?;
                f
            }
        };
        if base.order() < truncation {
            let mut grown = TruncatedMap::zero(n, truncation);
            for (d, layer) in base.layers().iter().enumerate().skip(1) {
                grown.set_layer(d, layer.clone());
            }
            base = grown;
        }

        let grid_spec = ov.lambda_grid.as_ref().or(self.lambda_grid.as_ref());
        let samples = if !map.samples.is_empty() {
            if ov.lambda_grid.is_some() {
                return Err(parse_error(
                    "lambda_grid",
                    "the file lists explicit samples",
                ));
            }
            map.samples
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let field = format!("map.samples[{i}]");
                    if s.lambda.len() != self.m {
                        return Err(parse_error(
                            &format!("{field}.lambda"),
                            format!("expected {} values, found {}", self.m, s.lambda.len()),
                        ));
                    }
                    let mut f = TruncatedMap::zero(n, base.order());
                    let lin = match &s.linear {
                        Some(rows) => matrix(&format!("{field}.linear"), rows, n)?,
                        None => base.linear(),
                    };
                    f.set_linear(&lin);
                    apply_terms(&mut f, &format!("{field}.terms"), &s.terms)?;
                    Ok(FamilySample {
                        lambda: s.lambda.clone(),
                        map: f,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?
        } else {
            let grid = match grid_spec {
                Some(spec) => parse_lambda_grid(spec, self.m)?,
                None => vec![vec![0.0; self.m]],
            };
            for (i, t) in map.lambda_terms.iter().enumerate() {
                let field = format!("map.lambda_terms[{i}]");
                if t.parameter >= self.m {
                    return Err(parse_error(
                        &field,
                        format!("parameter {} out of range 0..{}", t.parameter, self.m),
                    ));
                }
                check_monomial(&field, t.component, &t.exponents, n)?;
            }
            grid.into_iter()
                .map(|lambda| {
                    let mut f = base.clone();
                    for t in &map.lambda_terms {
                        f.add_coeff(t.component, &t.exponents, lambda[t.parameter] * t.value);
                    }
                    FamilySample { lambda, map: f }
                })
                .collect()
        };

        for (i, p) in self.normal_form.pins.iter().enumerate() {
            let field = format!("normal_form.pins[{i}]");
            let d = check_monomial(&field, p.component, &p.exponents, n)?;
            if d != p.degree {
                return Err(parse_error(
                    &field,
                    format!("exponents have degree {d}, pin says {}", p.degree),
                ));
            }
        }
        let search_box = self.search_box.unwrap_or_default();
        if search_box.radius.is_nan() || search_box.radius <= 0.0 || search_box.points_per_axis == 0
        {
            return Err(parse_error(
                "search_box",
                "radius and points_per_axis must be positive",
            ));
        }
        Ok(Problem {
            n,
            m: self.m,
            order,
            period,
            group,
            base,
            samples,
            tolerances,
            search_box,
            kind: self.normal_form.kind.unwrap_or(NormalFormKind::Nilpotent),
            pins: self.normal_form.pins.clone(),
        })
    }
}

impl Problem {
    pub fn a0(&self) -> Matrix {
        self.base.linear()
    }

    /// Largest χ-equivariance defect over the samples.
    pub fn equivariance_residual(&self) -> Result<f64, CliError> {
        let mut worst = map_equivariance_residual(&self.base, &self.group, self.base.order())?;
        for s in &self.samples {
            worst = worst.max(map_equivariance_residual(
                &s.map,
                &self.group,
                s.map.order(),
            )?);
        }
        Ok(worst)
    }

    /// A fixed probe point of size `scale` used by the symmetry checks.
    pub fn probe(&self, dim: usize, scale: f64) -> Vector {
        Vector::from_iterator(
            dim,
            (0..dim).map(|i| scale * (1.0 - 0.37 * i as f64) / (1.0 + i as f64)),
        )
    }
}
