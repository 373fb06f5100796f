//! Acceptance run: one PASS/FAIL line per criterion, each under its time
//! limit. Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use qgmt::bank::{self, rng};
use qgmt::chains::{
    check_boundary_commutation, check_homotopy, flat_pushforward_stability, Point, SimplicialChain, SimplicialComplex,
};
use qgmt::mesh::{Grid, Mesh};
use qgmt::multisection::Multisection;
use qgmt::oracle;
use qgmt::qfields::{AnalyticQField, Decomposition, SampledQField, Sheet};
use qgmt::qpoints::QPoint;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: qgmt::Error) -> String {
    e.to_string()
}

fn random_qpoint(r: &mut ChaCha8Rng, q: usize, n: usize) -> QPoint {
    let mut values: Vec<Vec<f64>> = (0..q).map(|_| (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    if q > 1 && r.random_bool(0.2) {
        values[1] = values[0].clone();
    }
    QPoint::from_values(n, values).unwrap()
}

fn metric() -> Check {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let (q, n) = bank::shape(&mut r, 6, 4);
        let a = random_qpoint(&mut r, q, n);
        let b = random_qpoint(&mut r, q, n);
        let d = a.distance(&b).map_err(err)?;
        let delta = (d - oracle::permutation_distance(&a, &b)).abs();
        worst = worst.max(delta);
        ensure(delta <= 1e-12, || format!("pair {case}: |Δ| = {delta:e}"))?;
        ensure(a.distance(&a).map_err(err)? == 0.0, || format!("pair {case}: G(a, a) ≠ 0"))?;
        ensure((b.distance(&a).map_err(err)? - d).abs() <= 1e-12, || format!("pair {case}: G not symmetric"))?;
    }
    for case in 0..1000 {
        let (q, n) = bank::shape(&mut r, 6, 4);
        let [a, b, c] = [0; 3].map(|_| random_qpoint(&mut r, q, n));
        let (ab, bc, ac) = (a.distance(&b).unwrap(), b.distance(&c).unwrap(), a.distance(&c).unwrap());
        ensure(ac <= ab + bc + 1e-12, || format!("triple {case}: {ac} > {ab} + {bc}"))?;
    }
    Ok(format!("1000 pairs agree with brute force (max |Δ| = {worst:.1e}), 1000 triangle triples"))
}

fn decomposition() -> Check {
    let mut r = rng(2);
    for case in 0..100 {
        let m = r.random_range(1..=2);
        let n = r.random_range(1..=3);
        let q = r.random_range(2..=4);
        let mesh = bank::unit_mesh(m, if m == 1 { 9 } else { 5 });
        let u = bank::separated_field(&mut r, m, n, q, 20.0).sample(mesh).map_err(err)?;
        let p0 = r.random_range(0..u.mesh().len());
        let atoms = u.sample(p0).atoms();
        let far = (1..atoms.len())
            .max_by(|&x, &y| {
                let dx = qgmt::linalg::dist(&atoms[0].v, &atoms[x].v);
                dx.total_cmp(&qgmt::linalg::dist(&atoms[0].v, &atoms[y].v))
            })
            .unwrap();
        match u.decompose(p0, 0, far).map_err(err)? {
            Decomposition::Split(u1, u2) => {
                ensure(oracle::is_exact_split(&u, &u1, &u2), || format!("separated {case}: parts do not rebuild u"))?;
                let lip = u.lipschitz_estimate().map_err(err)?;
                for part in [&u1, &u2] {
                    let l = part.lipschitz_estimate().map_err(err)?;
                    ensure(l <= lip + 1e-9, || format!("separated {case}: part ℓ̂ {l} > {lip}"))?;
                }
            }
            Decomposition::NotSeparated { gap, threshold } => {
                return Err(format!("separated {case}: gap {gap} ≤ threshold {threshold}"))
            }
        }
    }
    for case in 0..100 {
        let m = r.random_range(1..=2);
        let n = r.random_range(1..=3);
        let q = r.random_range(2..=4);
        let mesh = bank::unit_mesh(m, if m == 1 { 9 } else { 5 });
        let u = bank::clustered_field(&mut r, m, n, q).sample(mesh).map_err(err)?;
        let p0 = r.random_range(0..u.mesh().len());
        let k = u.sample(p0).atoms().len();
        let i = r.random_range(0..k);
        let j = (i + r.random_range(1..k)) % k;
        match u.decompose(p0, i, j).map_err(err)? {
            Decomposition::NotSeparated { gap, threshold } => {
                ensure(gap <= threshold, || format!("clustered {case}: gap above threshold"))?
            }
            Decomposition::Split(..) => return Err(format!("clustered {case}: split below threshold")),
        }
    }
    Ok("100 separated fields split exactly, 100 clustered fields refused".into())
}

fn boundary_commutation() -> Check {
    let mut r = rng(3);
    let mut dropped = 0;
    for case in 0..60 {
        let m = 1 + case % 2;
        let n = r.random_range(m..=m + 1);
        let q = r.random_range(1..=3);
        let sheets = (0..q)
            .map(|_| {
                let offset: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
                Sheet { mult: 1, poly: bank::sheet(&mut r, m, n, &offset, 1.0, 0.5) }
            })
            .collect();
        let f = AnalyticQField::new(m, n, sheets).map_err(err)?;
        let (u, sel) = f.sample_with_selection(bank::unit_mesh(m, if m == 1 { 6 } else { 4 })).map_err(err)?;
        let mut p = bank::mesh_chain(&mut r, u.mesh(), 0.7);
        if p.is_zero() {
            let s = &u.mesh().simplices()[0];
            p = SimplicialChain::simplex(u.mesh().simplex_points(s), 1).unwrap();
        }
        let rep = check_boundary_commutation(&u, &sel, &p).map_err(err)?;
        dropped += rep.dropped;
        ensure(rep.formal_equal && rep.graph_equal, || format!("case {case}: {rep:?}"))?;
    }
    for case in 0..200 {
        let k = r.random_range(2..=4);
        let d = r.random_range(k..=k + 2);
        let terms = r.random_range(1..=6);
        let c = bank::free_chain(&mut r, k, d, terms);
        ensure(c.boundary().and_then(|b| b.boundary()).map_err(err)?.is_zero(), || format!("chain {case}: ∂∂ ≠ 0"))?;
    }
    Ok(format!("60 fields on [0,1] and [0,1]² commute exactly ({dropped} degenerate images), 200 chains with ∂∂ = 0"))
}

/// A map that is affine plus a wiggle; chains only see its vertex values.
fn vertex_map(r: &mut ChaCha8Rng, a: usize, b: usize) -> impl Fn(&[f64]) -> Point {
    let map = bank::affine_map(r, a, b);
    let freq: Vec<f64> = (0..b).map(|_| r.random_range(1.0..4.0)).collect();
    move |x: &[f64]| {
        let base = bank::apply_affine(&map, x);
        let s: f64 = x.iter().sum();
        base.iter().zip(&freq).map(|(y, w)| y + 0.2 * (w * s).sin()).collect()
    }
}

fn homotopy() -> Check {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let k = r.random_range(1..=2);
        let a = r.random_range(k..=3);
        let b = r.random_range(k + 1..=3);
        let terms = r.random_range(1..=4);
        let p = bank::free_chain(&mut r, k, a, terms);
        let f = vertex_map(&mut r, a, b);
        let g = vertex_map(&mut r, a, b);
        let rep = check_homotopy(&f, &g, b, &p).map_err(err)?;
        ensure(rep.identity_formal && rep.mass_ok, || format!("case {case}: {rep:?}"))?;
        if rep.mass_bound > 0.0 {
            worst = worst.max(rep.fill_mass / rep.mass_bound);
        }
    }
    Ok(format!("100 homotopies: boundary identity exact, mass ratio ≤ {worst:.3}"))
}

fn flat_norm() -> Check {
    let mut r = rng(5);
    let mut cases = 0;
    for case in 0..30 {
        let m = 1 + case % 2;
        let mesh = bank::unit_mesh(m, r.random_range(3..=5));
        let complex = SimplicialComplex::from_mesh(&mesh).map_err(err)?;
        let top = bank::mesh_chain(&mut r, &mesh, 0.6);
        let mut chains = vec![top];
        for dim in 0..m {
            let mut terms = Vec::new();
            for s in complex.simplices(dim) {
                if r.random_bool(0.5) {
                    terms.push((s.iter().map(|&v| complex.vertices()[v].clone()).collect(), r.random_range(-2..=2)));
                }
            }
            chains.push(SimplicialChain::new(dim, m, terms).map_err(err)?);
        }
        for t in chains {
            let fl = complex.flat_norm(&t).map_err(err)?;
            ensure(fl.value <= t.mass() + 1e-9, || format!("case {case}: flat {} > mass {}", fl.value, t.mass()))?;
            cases += 1;
        }
    }
    let unit = SimplicialComplex::from_mesh(&bank::unit_mesh(1, 5)).map_err(err)?;
    let pt = |x: f64| SimplicialChain::simplex(vec![vec![x]], 1).unwrap();
    let example = unit.flat_norm(&pt(1.0).minus(&pt(0.0)).unwrap()).map_err(err)?.value;
    ensure(example == 1.0, || format!("flat norm of [[1]] − [[0]] is {example}"))?;

    let mut constants = Vec::new();
    let mut within = 0;
    for case in 0..20 {
        let m = 1 + case % 2;
        let n = r.random_range(m..=2);
        let q = r.random_range(1..=2);
        let sheets = (0..q)
            .map(|_| {
                let offset: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
                Sheet { mult: 1, poly: bank::sheet(&mut r, m, n, &offset, 1.0, 0.0) }
            })
            .collect();
        let f = AnalyticQField::new(m, n, sheets).map_err(err)?;
        let mesh = bank::unit_mesh(m, if m == 1 { 6 } else { 3 });
        let complex = SimplicialComplex::from_mesh(&mesh).map_err(err)?;
        let (u, sel) = f.sample_with_selection(mesh.clone()).map_err(err)?;
        let p1 = bank::mesh_chain(&mut r, &mesh, 0.6);
        let p2 = bank::mesh_chain(&mut r, &mesh, 0.6);
        let rep = flat_pushforward_stability(&u, &sel, &p1, &p2, &complex).map_err(err)?;
        ensure(rep.ratio.is_finite(), || format!("stability {case}: ratio {}", rep.ratio))?;
        constants.push(rep.empirical_constant);
        within += rep.passed as usize;
    }
    let cmax = constants.iter().cloned().fold(0.0, f64::max);
    Ok(format!(
        "flat ≤ mass on {cases} chains, F([[1]] − [[0]]) = 1, 20 finite stability ratios (max empirical constant {cmax:.3}, {within}/20 within Q(1 + L)^(m+1))"
    ))
}

fn multisection() -> Check {
    let mut r = rng(6);
    for case in 0..100 {
        let m = r.random_range(1..=2);
        let (q, n) = bank::shape(&mut r, 4, 3);
        let mesh = bank::unit_mesh(m, if m == 1 { 7 } else { 4 });
        let samples = (0..mesh.len()).map(|_| random_qpoint(&mut r, q, n)).collect();
        let u = SampledQField::new(mesh, samples).map_err(err)?;
        let ms = Multisection::from_qfield(&u);
        let back = ms.to_qfield().map_err(err)?;
        ensure(back.samples() == u.samples(), || format!("roundtrip {case}: samples differ"))?;
        let json = ms.to_json().map_err(err)?;
        let again = Multisection::from_json(&json).map_err(err)?.to_qfield().map_err(err)?;
        ensure(again.samples() == u.samples(), || format!("roundtrip {case}: JSON changes samples"))?;
    }
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let m = r.random_range(1..=2);
        let n = r.random_range(1..=3);
        let q = r.random_range(1..=4);
        let u = bank::layered_field(&mut r, m, n, q)
            .sample(bank::unit_mesh(m, if m == 1 { 9 } else { 5 }))
            .map_err(err)?;
        let ms = Multisection::from_qfield(&u);
        let lip = ms.lipschitz_from_cone().map_err(|e| format!("cone {case}: {e}"))?;
        ensure(lip.holds, || format!("cone {case}: {lip:?}"))?;
        if lip.bound > 0.0 {
            worst = worst.max(lip.lipschitz / lip.bound);
        }
    }
    let grid = Grid::new(vec![-1.0], vec![1.0], vec![9]);
    let sign = |x: f64| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 };
    let jump = SampledQField::from_fn(Mesh::grid(&grid).map_err(err)?, |x| QPoint::scalars(&[sign(x[0])]).unwrap())
        .map_err(err)?;
    let ms = Multisection::from_qfield(&jump);
    let flagged = !ms.check_coherence(0.5).map_err(err)?.coherent && ms.lipschitz_from_cone_with(0.5).is_err();
    ensure(flagged, || "sign jump not flagged".into())?;
    Ok(format!("100 roundtrips, 100 coherent fields with Lip ≤ √Q·τ̂ (max ratio {worst:.3}), sign jump flagged"))
}

fn reparam_estimates() -> Check {
    let bank = bank::reparam_bank(7);
    let mut th1 = (f64::INFINITY, 0.0f64);
    let mut th3: f64 = 0.0;
    let mut vl = (f64::INFINITY, 0.0f64);
    for (name, scenario) in &bank {
        let smallness = scenario.tube().and_then(|t| t.check_smallness(&scenario.field()?)).map_err(err)?;
        ensure(smallness.passed, || format!("{name}: gates {:?}", smallness.failures()))?;
        let (coarse, fine, cmp) = scenario.refinement(33, 65).map_err(|e| format!("{name}: {e}"))?;
        for rep in [&coarse, &fine] {
            ensure(rep.passed, || {
                format!(
                    "{name} at {}: mass {} residual {:e} normality {:e} th2 {} th4 {} lip {} flat {:?}",
                    rep.resolution,
                    rep.mass_ok,
                    rep.max_residual,
                    rep.max_normality,
                    rep.th2_ok,
                    rep.th4_ok,
                    rep.lip_bound_ok,
                    rep.flat_reproduction
                )
            })?;
        }
        ensure(cmp.passed, || format!("{name}: unstable constants {cmp:?}"))?;
        th1 = (th1.0.min(fine.th1_constant), th1.1.max(fine.th1_constant));
        th3 = th3.max(fine.th3_constant);
        vl = (vl.0.min(fine.vl_constant), vl.1.max(fine.vl_constant));
    }
    Ok(format!(
        "{} scenarios stable 33 → 65: C1 ∈ [{:.3}, {:.3}], C3 ≤ {:.3}, C_vl ∈ [{:.3}, {:.3}]",
        bank.len(),
        th1.0,
        th1.1,
        th3,
        vl.0,
        vl.1
    ))
}

fn graph_identity() -> Check {
    let bank = bank::reparam_bank(7);
    let mut worst: f64 = 0.0;
    let mut probes = 0;
    for (name, scenario) in &bank {
        let rep = scenario.run().map_err(|e| format!("{name}: {e}"))?;
        let graph = rep.graph.ok_or_else(|| format!("{name}: gates failed"))?;
        ensure(graph.hausdorff_ok, || format!("{name}: Hausdorff {} > {}", graph.hausdorff, graph.bound))?;
        ensure(graph.probes_ok, || format!("{name}: probe counts {:?}", graph.probes))?;
        worst = worst.max(graph.hausdorff / graph.bound);
        probes += graph.probes.len();
    }
    Ok(format!(
        "{} scenarios: Hausdorff ≤ h(1 + ℓ̂) (max ratio {worst:.2e}), {probes} probes count Q on T_F and G_f",
        bank.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Check); 8] = [
        ("metric", 5, metric),
        ("decomposition", 5, decomposition),
        ("boundary commutation", 10, boundary_commutation),
        ("homotopy", 5, homotopy),
        ("flat norm", 10, flat_norm),
        ("multisection", 5, multisection),
        ("reparametrization estimates", 60, reparam_estimates),
        ("graph identity", 10, graph_identity),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let (status, detail) = match (&outcome, in_time) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("over time limit; {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {} {status} {name} [{:.2} s / {limit} s]: {detail}", i + 1, elapsed.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
