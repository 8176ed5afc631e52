//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use eqnf::builtin::{quadrant_group, quadrant_map};
use eqnf::group::{inner_product_residuals, invariant_inner_product, project, GroupData};
use eqnf::linalg::{jordan_chevalley, max_abs, su_decomposition, Matrix, Vector};
use eqnf::normalform::FamilySample;
use eqnf::normalform::{
    exponent_constraint_residuals, normalize, normalize_pinned, transform_equivariance_residual,
    NfOptions, NfSetup, NormalFormKind, Pin,
};
use eqnf::polymap::{ad_conjugate, ch_compose, ck_operator, compose, exp_vf, ChSide, TruncatedMap};
use eqnf::reduction::{
    bifurcation_fn, build_lift, build_lift_from_linear, equivariance_residuals, find_periodic,
    lifted_periodicity_residual, nf_reduction_consistency, solve_bifurcation_zero,
    ReductionOptions, SearchBox,
};
use nalgebra::dmatrix;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn nilpotent_setup(a0: &Matrix, gd: &GroupData, k: usize) -> Result<NfSetup, String> {
    let s0 = su_decomposition(a0).map_err(e)?.semisimple;
    let ip = invariant_inner_product(&s0, gd).map_err(e)?;
    NfSetup::new(NormalFormKind::Nilpotent, a0, gd, &ip, k).map_err(e)
}

// 1. Linearization of the quadrant map.
fn linearization() -> Outcome {
    let start = Instant::now();
    let a0 = dmatrix![3.0, -2.0; 2.0, -1.0];
    let jc = jordan_chevalley(&a0).map_err(e)?;
    let su = su_decomposition(&a0).map_err(e)?;
    let n0 = dmatrix![2.0, -2.0; 2.0, -2.0];
    let err = [
        max_abs(&(&jc.semisimple - Matrix::identity(2, 2))),
        max_abs(&(&jc.nilpotent - &n0)),
        max_abs(&(&su.semisimple - Matrix::identity(2, 2))),
        max_abs(&(&su.nil_log - &n0)),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    ensure(err <= 1e-12, || format!("entrywise error {err:e}"))?;
    let t = timed(Duration::from_secs(1), start)?;
    Ok(format!(
        "S0 = I, N0 = log part = [[2,-2],[2,-2]], error {err:.1e}, {t:.2?}"
    ))
}

// 2. Degree-two normal form of the quadrant map.
fn quadrant_normal_form() -> Outcome {
    let start = Instant::now();
    let gd = quadrant_group().map_err(e)?;
    let psi = quadrant_map(3);
    let setup = nilpotent_setup(&psi.linear(), &gd, 2)?;
    let r = normalize(&setup, &psi, &NfOptions::default()).map_err(e)?;
    let d2 = &r.degrees[1];
    ensure(d2.target_dim == 1, || {
        format!("admissible exponent dim {}", d2.target_dim)
    })?;
    let b = &d2.target_basis[0];
    let shape = dmatrix![1.0, 2.0, 1.0; -1.0, -2.0, -1.0] * b[(0, 0)];
    let shape_err = max_abs(&(b - shape));
    ensure(shape_err <= 1e-9, || {
        format!("exponent direction off (x+y)^2(1,-1) by {shape_err:e}")
    })?;
    let d = d2.target_coords[0];
    ensure(d.abs() <= 1e-9, || format!("d = {d:e}"))?;
    ensure(d2.null_directions.len() == 1, || {
        format!("{} free directions", d2.null_directions.len())
    })?;
    let mut worst = 0.0_f64;
    for c in [-1.5, -0.25, 0.0, 0.4, 2.0] {
        let pin = Pin {
            degree: 2,
            component: 0,
            exponents: vec![0, 2],
            value: c,
        };
        let rc = normalize_pinned(&setup, &psi, &NfOptions::default(), &[pin]).map_err(e)?;
        let t = &rc.transform;
        for (comp, mirror) in [(0usize, false), (1, true)] {
            let (xx, yy) = if mirror {
                ([0, 2], [2, 0])
            } else {
                ([2, 0], [0, 2])
            };
            let a = t.coeff(comp, &xx);
            let bb = t.coeff(comp, &[1, 1]);
            let cc = t.coeff(comp, &yy);
            worst = worst
                .max((cc - c).abs())
                .max((bb + 2.0 * c).abs())
                .max((a - (c - 0.5)).abs());
        }
        if c == 0.0 {
            let lin = TruncatedMap::from_linear(&psi.linear(), 2);
            let res = rc.normalized.truncate(2).max_diff(&lin);
            ensure(res <= 1e-9, || format!("c = 0 conjugate residual {res:e}"))?;
        }
    }
    ensure(worst <= 1e-9, || {
        format!("b = -2c, a = c - 1/2 violated by {worst:e}")
    })?;
    let t = timed(Duration::from_secs(5), start)?;
    Ok(format!(
        "dim 1, d = {d:.1e}, family relations {worst:.1e}, {t:.2?}"
    ))
}

// 3. Projections.
fn projections() -> Outcome {
    let mut rng = rng(301);
    let mut idem = 0.0_f64;
    let mut orth = 0.0_f64;
    let mut pairs = 0;
    for _ in 0..100 {
        let gd = random_group(&mut rng);
        let n = gd.dim();
        let a = random_matrix(&mut rng, n, n, 1.0);
        let chars = gd.all_characters();
        for c in &chars {
            let p = project(&a, &gd, c).map_err(e)?;
            let pp = project(&p, &gd, c).map_err(e)?;
            idem = idem.max(max_abs(&(pp - &p)));
        }
        if chars.len() >= 2 {
            let i = rng.gen_range(0..chars.len());
            let j = (i + rng.gen_range(1..chars.len())) % chars.len();
            let p2 = project(&a, &gd, &chars[j]).map_err(e)?;
            let p12 = project(&p2, &gd, &chars[i]).map_err(e)?;
            orth = orth.max(max_abs(&p12));
            pairs += 1;
        }
    }
    ensure(idem <= 1e-12 && orth <= 1e-12, || {
        format!("idempotence {idem:e}, orthogonality {orth:e}")
    })?;
    ensure(pairs >= 50, || format!("only {pairs} character pairs"))?;
    Ok(format!(
        "100 groups, {pairs} character pairs: idempotence {idem:.1e}, orthogonality {orth:.1e}"
    ))
}

fn random_instance(rng: &mut TestRng, i: usize, lambdas: &[f64]) -> Instance {
    let q = 1 + i % 4;
    match i % 3 {
        0 => symmetric_instance(rng, q, 4, true, lambdas),
        1 => reversible_instance(rng, q, 4, true, false, lambdas),
        _ => reversible_instance(rng, q, 4, false, true, lambdas),
    }
}

// 4. Invariant inner product.
fn inner_product() -> Outcome {
    let mut rng = rng(401);
    let mut worst = [0.0_f64; 3];
    for i in 0..50 {
        let inst = random_instance(&mut rng, i, &[]);
        let s0 = su_decomposition(&inst.a0).map_err(e)?.semisimple;
        let ip = invariant_inner_product(&s0, &inst.gd).map_err(e)?;
        let r = inner_product_residuals(&ip, &s0, &inst.gd).map_err(e)?;
        for (w, x) in worst.iter_mut().zip(r) {
            *w = w.max(x);
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    ensure(max <= 1e-10, || format!("residuals {worst:?}"))?;
    Ok(format!(
        "50 instances: normality {:.1e}, orthogonality {:.1e}, twisted adjoint {:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

// 5. Campbell-Hausdorff composition.
fn campbell_hausdorff() -> Outcome {
    let mut rng = rng(501);
    let mut worst = 0.0_f64;
    let mut ck0 = 0.0_f64;
    for i in 0..50 {
        let n = 1 + i % 3;
        let k = 2 + (i / 3) % 3;
        let mut x = TruncatedMap::from_linear(&random_matrix(&mut rng, n, n, 0.6), k);
        for d in 2..=k {
            x.set_layer(d, random_layer(&mut rng, n, d, 0.5));
        }
        let y = random_layer(&mut rng, n, k, 0.5);
        let ex = exp_vf(&x, k);
        let ey = exp_vf(&TruncatedMap::homogeneous(y.clone(), k), k);
        let side = if i % 2 == 0 {
            ChSide::Left
        } else {
            ChSide::Right
        };
        let z = ch_compose(&x, &y, k, side).map_err(e)?;
        let flows = match side {
            ChSide::Left => compose(&ex, &ey, k),
            ChSide::Right => compose(&ey, &ex, k),
        }
        .map_err(e)?;
        worst = worst.max(exp_vf(&z, k).max_diff(&flows));
        let c = ck_operator(&Matrix::zeros(n, n), k).matrix;
        let dim = c.nrows();
        ck0 = ck0.max(max_abs(&(c - Matrix::identity(dim, dim))));
    }
    ensure(worst <= 1e-9, || format!("flow mismatch {worst:e}"))?;
    ensure(ck0 <= 4.0 * f64::EPSILON, || {
        format!("C_k(0) - I = {ck0:e}")
    })?;
    Ok(format!(
        "50 instances, both sides: coefficient agreement {worst:.1e}, C_k(0) - I = {ck0:.1e}"
    ))
}

// 6. Symmetries of the reduced map.
fn reduction_equivariance() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(601);
    let opts = ReductionOptions::default();
    let mut worst = 0.0_f64;
    let mut families = 0;
    let mut i = 0;
    while families < 20 {
        let inst = random_instance(&mut rng, i, &[0.01, -0.02]);
        i += 1;
        assert!(inst.n() <= 4 && inst.gd.order() <= 4 && inst.q <= 4);
        let ctx = build_lift_from_linear(&inst.a0, &inst.gd, inst.q).map_err(e)?;
        if ctx.r() == 0 {
            continue;
        }
        families += 1;
        for s in &inst.samples {
            for radius in [1e-2, 3e-3] {
                let u = random_in_span(&mut rng, &ctx.u_basis, radius);
                let r = equivariance_residuals(&s.map, &ctx, &u, &opts)
                    .map_err(|err| format!("{}: {err}", inst.name))?;
                if r.max() > 1e-8 {
                    return Err(format!("{} at lambda {:?}: {r:?}", inst.name, s.lambda));
                }
                worst = worst.max(r.max());
            }
        }
    }
    let t = timed(Duration::from_secs(60), start)?;
    Ok(format!(
        "20 families, 3 samples each: max residual {worst:.1e}, {t:.2?}"
    ))
}

// 7. Reduced map against the normal form.
fn nf_consistency() -> Outcome {
    let mut rng = rng(701);
    let opts = ReductionOptions {
        tol: 1e-15,
        ..ReductionOptions::default()
    };
    let mut slopes = Vec::new();
    let mut i = 0;
    while slopes.len() < 8 {
        let k = 2 + slopes.len() % 2;
        let inst = random_instance(&mut rng, i, &[]);
        i += 1;
        let setup = nilpotent_setup(&inst.a0, &inst.gd, k)?;
        let ctx = build_lift(&inst.a0, &setup.s0, &inst.gd, inst.q).map_err(e)?;
        if ctx.r() == 0 || ctx.m() == 0 {
            continue;
        }
        let res = normalize(&setup, inst.base(), &NfOptions::default()).map_err(e)?;
        // The normalized map with its higher-order terms kept.
        let psi = ad_conjugate(&res.transform, inst.base(), k + 2).map_err(e)?;
        let psi_nf = res.normal_form_map().truncate(k);
        let rep = nf_reduction_consistency(&psi, &psi_nf, &ctx, k, &opts)
            .map_err(|err| format!("{} k={k}: {err}", inst.name))?;
        slopes.push((k, rep.slope));
    }
    // Exact agreement is allowed but cannot carry the criterion alone.
    let finite = slopes.iter().filter(|(_, s)| s.is_finite()).count();
    ensure(finite * 2 >= slopes.len(), || {
        format!("only {finite} of {} slopes are measurable", slopes.len())
    })?;
    let text: Vec<String> = slopes
        .iter()
        .map(|(k, s)| format!("k={k}: {s:.2}"))
        .collect();
    Ok(format!("slopes {}", text.join(", ")))
}

/// ψ = L∘F with F(z) = z + β(z̄^p − λ·z) on the first plane and
/// w ↦ μw + c|z|² on an optional extra line. Fixed points of F other than 0
/// are |z|^{p−1} = λ with e^{i(p+1)θ} = 1; L rotates by 2π/q.
struct Planted {
    name: String,
    family: Vec<FamilySample>,
    gd: GroupData,
    q: usize,
    /// Linear part at λ = 0.
    a0: Matrix,
    /// Planted points per sample, in ambient coordinates.
    points: Vec<Vec<Vector>>,
}

fn planted_plane(rng: &mut TestRng, q: usize, p: usize, extra: bool, lambdas: &[f64]) -> Planted {
    let n = if extra { 3 } else { 2 };
    let beta = rng.gen_range(0.5..1.5);
    let mu = rng.gen_range(0.3..0.6);
    let c = rng.gen_range(-1.0..1.0);
    let mut rot = Matrix::identity(n, n);
    rot.view_mut((0, 0), (2, 2))
        .copy_from(&rotation(2.0 * std::f64::consts::PI / q as f64));
    let mut sym = Matrix::identity(n, n);
    sym.view_mut((0, 0), (2, 2))
        .copy_from(&rotation(2.0 * std::f64::consts::PI / (p + 1) as f64));
    let (cq, cqi) = random_conjugator(rng, n);
    let mut family = Vec::new();
    let mut points = Vec::new();
    for &l in lambdas {
        let mut f = TruncatedMap::zero(n, p);
        f.add_coeff(0, &exps(n, 1, 0), 1.0 - beta * l);
        f.add_coeff(1, &exps(n, 0, 1), 1.0 - beta * l);
        // Re and −Im of (x + iy)^p.
        for j in 0..=p {
            let binom = (1..=j).fold(1.0, |acc, t| acc * (p + 1 - t) as f64 / t as f64);
            let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let comp = if j % 2 == 0 { 0 } else { 1 };
            let value = if comp == 0 {
                sign * binom
            } else {
                -sign * binom
            };
            f.add_coeff(comp, &exps(n, (p - j) as u32, j as u32), beta * value);
        }
        if extra {
            f.add_coeff(2, &[0, 0, 1], mu);
            f.add_coeff(2, &[2, 0, 0], c);
            f.add_coeff(2, &[0, 2, 0], c);
        }
        let psi = f.left_mul(&rot).conjugate_linear(&cq, &cqi);
        let radius = l.powf(1.0 / (p - 1) as f64);
        let mut pts = vec![Vector::zeros(n)];
        for j in 0..=p {
            let th = 2.0 * std::f64::consts::PI * j as f64 / (p + 1) as f64;
            let mut x = Vector::zeros(n);
            x[0] = radius * th.cos();
            x[1] = radius * th.sin();
            if extra {
                x[2] = c * radius * radius / (1.0 - mu);
            }
            pts.push(&cq * x);
        }
        family.push(FamilySample {
            lambda: vec![l],
            map: psi,
        });
        points.push(pts);
    }
    let gens = vec![(&cq * &sym * &cqi, 1)];
    let mut base = rot.clone();
    if extra {
        base[(2, 2)] = mu;
    }
    Planted {
        name: format!("plane q={q} p={p} extra={extra}"),
        family,
        gd: GroupData::from_generators(&gens).unwrap(),
        q,
        a0: &cq * base * &cqi,
        points,
    }
}

fn exps(n: usize, a: u32, b: u32) -> Vec<u32> {
    let mut v = vec![0; n];
    v[0] = a;
    v[1] = b;
    v
}

/// ψ(x) = −(x + β(x³ − λx)): period-two orbit {±√λ}.
fn planted_line(rng: &mut TestRng, lambdas: &[f64]) -> Planted {
    let beta = rng.gen_range(0.5..1.5);
    let family = lambdas
        .iter()
        .map(|&l| {
            let mut f = TruncatedMap::zero(1, 3);
            f.add_coeff(0, &[1], -(1.0 - beta * l));
            f.add_coeff(0, &[3], -beta);
            FamilySample {
                lambda: vec![l],
                map: f,
            }
        })
        .collect();
    let points = lambdas
        .iter()
        .map(|&l| vec![Vector::zeros(1), Vector::from_element(1, l.sqrt())])
        .collect();
    Planted {
        name: "line q=2".into(),
        family,
        gd: GroupData::from_generators(&[(Matrix::from_element(1, 1, -1.0), 1)]).unwrap(),
        q: 2,
        a0: Matrix::from_element(1, 1, -1.0),
        points,
    }
}

// 8. Periodic points through the reduced equation.
fn periodic_points() -> Outcome {
    let mut rng = rng(801);
    let opts = ReductionOptions::default();
    let mut families = Vec::new();
    for (q, p, extra) in [
        (1, 2, false),
        (3, 2, false),
        (3, 2, true),
        (4, 3, false),
        (4, 3, true),
        (1, 2, true),
        (3, 2, false),
        (4, 3, false),
    ] {
        let lambdas: &[f64] = if p == 2 { &[0.01, 0.02] } else { &[1e-4, 4e-4] };
        families.push(planted_plane(&mut rng, q, p, extra, lambdas));
    }
    families.push(planted_line(&mut rng, &[1e-4, 9e-4]));
    families.push(planted_line(&mut rng, &[4e-4, 2.5e-3]));
    let mut agree = 0.0_f64;
    let mut lifted = 0.0_f64;
    let mut count = 0;
    for f in &families {
        let ctx = build_lift_from_linear(&f.a0, &f.gd, f.q).map_err(e)?;
        let reach = f
            .points
            .iter()
            .flatten()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
        let search = SearchBox {
            radius: 1.6 * reach,
            points_per_axis: 7,
        };
        let found = find_periodic(&f.family, &ctx, &search, &opts).map_err(e)?;
        for (si, sample) in f.family.iter().enumerate() {
            let here: Vec<_> = found.iter().filter(|p| p.lambda == sample.lambda).collect();
            for planted in &f.points[si] {
                let orbit = orbit_of(&sample.map, planted, f.q);
                let hit = here.iter().find(|p| {
                    let x = Vector::from_vec(p.x_star.clone());
                    orbit.iter().any(|o| (o - &x).amax() < 1e-7)
                });
                let Some(hit) = hit else {
                    return Err(format!(
                        "{} lambda {:?}: planted {planted:?} not found",
                        f.name, sample.lambda
                    ));
                };
                let x = Vector::from_vec(hit.x_star.clone());
                lifted = lifted.max(lifted_periodicity_residual(&sample.map, &x, f.q));
                let u = Vector::from_vec(hit.u_coords.clone());
                let (zero, res) =
                    solve_bifurcation_zero(&sample.map, &ctx, &u, &opts).map_err(e)?;
                let b_here =
                    bifurcation_fn(&sample.map, &ctx, &Vector::from_vec(hit.u.clone()), &opts)
                        .map_err(e)?;
                agree = agree.max((zero - &u).amax()).max(res).max(b_here.amax());
                ensure(hit.isolated, || {
                    format!("{}: planted point flagged non-isolated", f.name)
                })?;
                count += 1;
            }
        }
    }
    ensure(agree <= 1e-8, || {
        format!("B zeros differ from determining solutions by {agree:e}")
    })?;
    ensure(lifted <= 1e-8, || format!("lifted residual {lifted:e}"))?;

    // Quadrant map, q = 1: a line of fixed points.
    let gd = quadrant_group().map_err(e)?;
    let psi = quadrant_map(3);
    let ctx = build_lift_from_linear(&psi.linear(), &gd, 1).map_err(e)?;
    let sample = FamilySample {
        lambda: vec![0.0],
        map: psi,
    };
    let found = find_periodic(&[sample], &ctx, &SearchBox::default(), &opts).map_err(e)?;
    let on_line = found
        .iter()
        .filter(|p| (p.x_star[0] - p.x_star[1]).abs() < 1e-9)
        .count();
    ensure(on_line > 0 && found.iter().all(|p| !p.isolated), || {
        format!(
            "quadrant fixed points not flagged: {} found, {on_line} on y = x",
            found.len()
        )
    })?;
    Ok(format!(
        "{} families, {count} planted points: B agreement {agree:.1e}, lifted residual {lifted:.1e}; quadrant line y = x flagged non-isolated",
        families.len()
    ))
}

fn orbit_of(psi: &TruncatedMap, x: &Vector, q: usize) -> Vec<Vector> {
    let mut out = vec![x.clone()];
    for _ in 1..q {
        let next = psi.eval_vec(out.last().unwrap());
        out.push(next);
    }
    out
}

// 9. Exponent identities and transform symmetry.
fn exponent_constraints() -> Outcome {
    let mut rng = rng(901);
    let mut worst = [0.0_f64; 4];
    let mut transform = 0.0_f64;
    for i in 0..10 {
        let inst = random_instance(&mut rng, i, &[0.01]);
        let setup = nilpotent_setup(&inst.a0, &inst.gd, 3)?;
        for (si, s) in inst.samples.iter().enumerate() {
            let r = normalize(&setup, &s.map, &NfOptions::default())
                .map_err(|err| format!("{}: {err}", inst.name))?;
            let c = exponent_constraint_residuals(&r, &setup).map_err(e)?;
            for (j, (w, x)) in worst.iter_mut().zip(c).enumerate() {
                if j > 0 || si == 0 {
                    *w = w.max(x);
                }
            }
            transform = transform.max(transform_equivariance_residual(&r.transform, &inst.gd));
        }
    }
    let max = worst.iter().copied().fold(transform, f64::max);
    ensure(max <= 1e-9, || {
        format!("identities {worst:?}, transform {transform:e}")
    })?;
    Ok(format!(
        "10 families: identities {:.1e}/{:.1e}/{:.1e}/{:.1e}, transform symmetry {transform:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 linearization of the quadrant map", linearization),
        ("2 quadrant normal form at degree two", quadrant_normal_form),
        ("3 projection suite", projections),
        ("4 inner-product suite", inner_product),
        ("5 Campbell-Hausdorff suite", campbell_hausdorff),
        ("6 reduction equivariance suite", reduction_equivariance),
        ("7 reduced map against normal form", nf_consistency),
        ("8 periodic points", periodic_points),
        ("9 exponent constraints", exponent_constraints),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
