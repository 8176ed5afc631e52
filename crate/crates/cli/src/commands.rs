use eqnf::group::{
    character_pairing, inner_product_residuals, invariant_inner_product, projector_hk,
};
use eqnf::linalg::{
    jordan_chevalley, matrix_exp, max_abs, semisimplicity_residual, su_decomposition, Matrix,
    Vector,
};
use eqnf::normalform::{
    exponent_constraint_residuals, normalize_pinned, transform_equivariance_residual, NfOptions,
    NfSetup, NormalFormKind,
};
use eqnf::polymap::{ch_compose, ck_operator, compose, exp_vf, ChSide, TruncatedMap};
use eqnf::reduction::{
    bifurcation_coords, build_lift_from_linear, equivariance_residuals, find_periodic,
    lift_invariant_residuals, linearization_defect, reduce_at, solve_bifurcation_zero, LiftContext,
    ReductionOptions, LIFT_TOL,
};

use crate::problem::Problem;
use crate::report::{
    finish, rows, Check, DecomposeReport, NormalFormCmdReport, NormalFormSample, PeriodicEntry,
    PeriodicReport, ReduceReport, ReduceSample, Report, VerifyReport,
};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Decompose,
    NormalForm,
    Reduce,
    Periodic,
    Verify,
}

pub fn run(cmd: Command, p: &Problem) -> Result<Report, CliError> {
    Ok(match cmd {
        Command::Decompose => Report::Decompose(decompose(p)?),
        Command::NormalForm => Report::NormalForm(normal_form(p)?),
        Command::Reduce => Report::Reduce(reduce(p)?),
        Command::Periodic => Report::Periodic(periodic(p)?),
        Command::Verify => Report::Verify(verify(p)?),
    })
}

fn reduction_options(p: &Problem) -> ReductionOptions {
    ReductionOptions {
        tol: p.tolerances.newton,
        radius: p.tolerances.radius,
        ..Default::default()
    }
}

fn nf_options(p: &Problem) -> NfOptions {
    NfOptions {
        tol: p.tolerances.newton,
        accept: p.tolerances.residual,
        ..Default::default()
    }
}

fn decomposition_checks(
    a0: &Matrix,
    tol: f64,
) -> Result<(Vec<Check>, Matrix, Matrix, Matrix), CliError> {
    let n = a0.nrows();
    let jc = jordan_chevalley(a0)?;
    let su = su_decomposition(a0)?;
    let (s, nil) = (&jc.semisimple, &jc.nilpotent);
    let scale = max_abs(a0).max(1.0);
    let mut nil_pow = Matrix::identity(n, n);
    for _ in 0..n {
        nil_pow = &nil_pow * nil;
    }
    let l = &su.nil_log;
    let checks = vec![
        Check::new("S + N = A0", max_abs(&(s + nil - a0)), tol * scale),
        Check::new(
            "SN = NS",
            max_abs(&(s * nil - nil * s)),
            tol * scale * scale,
        ),
        Check::new("N^n = 0", max_abs(&nil_pow), tol * scale.powi(n as i32)),
        Check::new("S semisimple", semisimplicity_residual(s, 1e-6), tol),
        Check::new(
            "S exp(L) = A0",
            max_abs(&(&su.semisimple * matrix_exp(l) - a0)),
            tol * scale,
        ),
        Check::new(
            "SL = LS",
            max_abs(&(&su.semisimple * l - l * &su.semisimple)),
            tol * scale * scale,
        ),
        Check::new(
            "same semisimple part",
            max_abs(&(&su.semisimple - s)),
            tol * scale,
        ),
    ];
    Ok((checks, jc.semisimple, jc.nilpotent, su.nil_log))
}

pub fn decompose(p: &Problem) -> Result<DecomposeReport, CliError> {
    let a0 = p.a0();
    let (checks, s, nil, l) = decomposition_checks(&a0, p.tolerances.residual)?;
    Ok(finish(&checks, |pass| DecomposeReport {
        a0: rows(&a0),
        semisimple: rows(&s),
        nilpotent: rows(&nil),
        nil_log: rows(&l),
        checks: checks.clone(),
        pass,
    }))
}

fn setup(p: &Problem, kind: NormalFormKind) -> Result<NfSetup, CliError> {
    let a0 = p.a0();
    let s0 = su_decomposition(&a0)?.semisimple;
    let ip = invariant_inner_product(&s0, &p.group)?;
    Ok(NfSetup::new(kind, &a0, &p.group, &ip, p.order)?)
}

fn equivariance_check(p: &Problem) -> Result<Check, CliError> {
    Ok(Check::new(
        "map is chi-equivariant",
        p.equivariance_residual()?,
        p.tolerances.residual,
    ))
}

fn nf_checks(p: &Problem, setup: &NfSetup) -> Result<Vec<NormalFormSample>, CliError> {
    let tol = p.tolerances.residual;
    let opts = nf_options(p);
    let mut out = Vec::with_capacity(p.samples.len());
    for sample in &p.samples {
        let r = normalize_pinned(setup, &sample.map, &opts, &p.pins)?;
        let mut checks = vec![
            Check::new("conjugated map matches normal form", r.residual, tol),
            Check::new(
                "transform commutes with the group",
                transform_equivariance_residual(&r.transform, &p.group),
                tol,
            ),
        ];
        if setup.kind == NormalFormKind::Nilpotent {
            let [vanish, commute, kernel, character] = exponent_constraint_residuals(&r, setup)?;
            // A zero linear part is only expected where the linearization is A0.
            if max_abs(&(sample.map.linear() - &setup.a0)) == 0.0 {
                checks.push(Check::new("exponent has no linear part", vanish, tol));
            }
            checks.push(Check::new("exponent commutes with S0", commute, tol));
            checks.push(Check::new("exponent in kernel of ad(N0*)", kernel, tol));
            checks.push(Check::new(
                "exponent has the group character",
                character,
                tol,
            ));
        }
        out.push(NormalFormSample {
            lambda: sample.lambda.clone(),
            normal_form: r.report(),
            checks,
        });
    }
    Ok(out)
}

pub fn normal_form(p: &Problem) -> Result<NormalFormCmdReport, CliError> {
    let eq = equivariance_check(p)?;
    if !eq.pass {
        return Err(CliError::Invariant(format!(
            "map is not chi-equivariant (residual {:e})",
            eq.residual
        )));
    }
    let setup = setup(p, p.kind)?;
    let samples = nf_checks(p, &setup)?;
    let checks = vec![eq];
    let pass = samples.iter().flat_map(|s| s.checks.iter()).all(|c| c.pass);
    Ok(finish(&checks, |ok| NormalFormCmdReport {
        kind: p.kind,
        order: p.order,
        checks: checks.clone(),
        samples,
        pass: ok && pass,
    }))
}

fn lift(p: &Problem) -> Result<LiftContext, CliError> {
    Ok(build_lift_from_linear(&p.a0(), &p.group, p.period)?)
}

fn lift_checks(ctx: &LiftContext) -> Result<Vec<Check>, CliError> {
    let scale = max_abs(&ctx.a0).max(1.0) * max_abs(&ctx.xi_basis).max(1.0);
    Ok(lift_invariant_residuals(ctx)?
        .into_iter()
        .map(|(name, v)| Check::new(name, v, LIFT_TOL * scale))
        .collect())
}

fn reduce_samples(p: &Problem, ctx: &LiftContext) -> Result<Vec<ReduceSample>, CliError> {
    let tol = p.tolerances.residual;
    let opts = reduction_options(p);
    let r = ctx.r();
    let mut out = Vec::with_capacity(p.samples.len());
    for sample in &p.samples {
        let psi = &sample.map;
        let at0 = reduce_at(psi, ctx, &Vector::zeros(r), &opts)?;
        let mut checks = vec![Check::new("reduced map fixes 0", at0.psi_r.amax(), tol)];
        let is_base = sample.map.max_diff(&p.base) == 0.0;
        if is_base {
            checks.push(Check::new(
                "reduced linearization is A0 on U",
                linearization_defect(psi, ctx, &opts)?,
                tol,
            ));
        }
        let equivariance = if r > 0 {
            let u = ctx.from_u_coords(&p.probe(r, 1e-3));
            let e = equivariance_residuals(psi, ctx, &u, &opts)?;
            checks.push(Check::new("symmetries of reduced map and B", e.max(), tol));
            Some(e)
        } else {
            None
        };
        out.push(ReduceSample {
            lambda: sample.lambda.clone(),
            jacobian_at_origin: rows(&at0.jacobian),
            equivariance,
            checks,
        });
    }
    Ok(out)
}

pub fn reduce(p: &Problem) -> Result<ReduceReport, CliError> {
    let eq = equivariance_check(p)?;
    if !eq.pass {
        return Err(CliError::Invariant(format!(
            "map is not chi-equivariant (residual {:e})",
            eq.residual
        )));
    }
    let ctx = lift(p)?;
    let mut checks = vec![eq];
    checks.extend(lift_checks(&ctx)?);
    let samples = reduce_samples(p, &ctx)?;
    let pass = samples.iter().flat_map(|s| s.checks.iter()).all(|c| c.pass);
    Ok(finish(&checks, |ok| ReduceReport {
        period: p.period,
        reduced_dim: ctx.r(),
        complement_dim: ctx.m(),
        u_basis: rows(&ctx.u_basis),
        s0_u: rows(&ctx.s0_u),
        a0_u: rows(&ctx.a0_u),
        checks: checks.clone(),
        samples,
        pass: ok && pass,
    }))
}

pub fn periodic(p: &Problem) -> Result<PeriodicReport, CliError> {
    let eq = equivariance_check(p)?;
    if !eq.pass {
        return Err(CliError::Invariant(format!(
            "map is not chi-equivariant (residual {:e})",
            eq.residual
        )));
    }
    let tol = p.tolerances.residual;
    let ctx = lift(p)?;
    let opts = reduction_options(p);
    let found = find_periodic(&p.samples, &ctx, &p.search_box, &opts)?;
    let mut points = Vec::with_capacity(found.len());
    let mut worst_lift = 0.0_f64;
    let mut worst_b = 0.0_f64;
    for point in found {
        let sample = p
            .samples
            .iter()
            .find(|s| s.lambda == point.lambda)
            .expect("solutions carry their sample's parameter");
        let u = Vector::from_vec(point.u_coords.clone());
        let b_res = bifurcation_coords(&sample.map, &ctx, &u, &opts)?.amax();
        let (zero, _) = solve_bifurcation_zero(&sample.map, &ctx, &u, &opts)?;
        let agreement = (zero - &u).amax();
        worst_lift = worst_lift.max(point.lifted_residual);
        worst_b = worst_b
            .max(b_res)
            .max(if point.isolated { agreement } else { 0.0 });
        points.push(PeriodicEntry {
            point,
            bifurcation_residual: b_res,
            bifurcation_agreement: agreement,
        });
    }
    let checks = vec![
        eq,
        Check::new("lifted points are q-periodic", worst_lift, tol),
        Check::new("B vanishes at the solutions", worst_b, tol),
    ];
    Ok(finish(&checks, |pass| PeriodicReport {
        period: p.period,
        search_box: p.search_box,
        points,
        checks: checks.clone(),
        pass,
    }))
}

fn projection_checks(p: &Problem, tol: f64) -> Result<Vec<Check>, CliError> {
    let gd = &p.group;
    let chars = gd.all_characters();
    let mut idem = 0.0_f64;
    let mut orth = 0.0_f64;
    for k in 1..=p.order {
        let projs: Vec<Matrix> = chars
            .iter()
            .map(|c| projector_hk(gd, c, k))
            .collect::<Result<_, _>>()?;
        for (i, a) in projs.iter().enumerate() {
            idem = idem.max(max_abs(&(a * a - a)));
            for (j, b) in projs.iter().enumerate() {
                if i != j && character_pairing(gd, &chars[i], &chars[j]) == 0 {
                    orth = orth.max(max_abs(&(a * b)));
                }
            }
        }
    }
    Ok(vec![
        Check::new("projections are idempotent", idem, tol),
        Check::new("projections of orthogonal characters annihilate", orth, tol),
    ])
}

fn composition_checks(p: &Problem, tol: f64) -> Result<Vec<Check>, CliError> {
    let n = p.n;
    let k = p.order.max(2);
    let mut out = Vec::new();
    let mut worst = 0.0_f64;
    for d in 1..=k {
        let c = ck_operator(&Matrix::zeros(n, n), d).matrix;
        let id = Matrix::identity(c.nrows(), c.ncols());
        worst = worst.max(max_abs(&(c - id)));
    }
    out.push(Check::new("C_k(0) = I", worst, tol));
    // Use the map's nonlinear part as the exponent and its top layer as the
    // increment.
    let x = p
        .base
        .truncate(k)
        .nonlinear_part()
        .add(&TruncatedMap::from_linear(&(p.a0() * 0.1), k));
    let yk = p.base.truncate(k).layer(k) * 0.5;
    let ex = exp_vf(&x, k);
    let ey = exp_vf(&TruncatedMap::homogeneous(yk.clone(), k).truncate(k), k);
    for (side, name) in [(ChSide::Left, "left"), (ChSide::Right, "right")] {
        let combined = exp_vf(&ch_compose(&x, &yk, k, side)?, k);
        let direct = match side {
            ChSide::Left => compose(&ex, &ey, k)?,
            ChSide::Right => compose(&ey, &ex, k)?,
        };
        out.push(Check::new(
            format!("composition rule ({name})"),
            combined.max_diff(&direct),
            tol,
        ));
    }
    Ok(out)
}

pub fn verify(p: &Problem) -> Result<VerifyReport, CliError> {
    let tol = p.tolerances.residual;
    let a0 = p.a0();
    let mut checks = vec![equivariance_check(p)?];
    let (dec, s0, _, _) = decomposition_checks(&a0, tol)?;
    checks.extend(dec);
    let ip = invariant_inner_product(&s0, &p.group)?;
    let [normal, orth, equiv] = inner_product_residuals(&ip, &s0, &p.group)?;
    checks.push(Check::new("S0 normal", normal, tol));
    checks.push(Check::new("group orthogonal", orth, tol));
    checks.push(Check::new("g S0* = (S0*)^chi(g) g", equiv, tol));
    checks.extend(projection_checks(p, tol)?);
    checks.extend(composition_checks(p, tol)?);
    if checks[0].pass {
        let setup = setup(p, NormalFormKind::Nilpotent)?;
        for s in nf_checks(p, &setup)? {
            let tag = format!("{:?}", s.lambda);
            checks.extend(s.checks.into_iter().map(|c| Check {
                name: format!("normal form {tag}: {}", c.name),
                ..c
            }));
        }
        let ctx = lift(p)?;
        checks.extend(lift_checks(&ctx)?);
        for s in reduce_samples(p, &ctx)? {
            let tag = format!("{:?}", s.lambda);
            checks.extend(s.checks.into_iter().map(|c| Check {
                name: format!("reduction {tag}: {}", c.name),
                ..c
            }));
        }
    }
    Ok(finish(&checks, |pass| VerifyReport {
        checks: checks.clone(),
        pass,
    }))
}
