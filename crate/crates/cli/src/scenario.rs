use std::path::PathBuf;

use serde::Deserialize;
use serde_json::{json, Value};

use qgmt::chains::{check_boundary_commutation, graph_chain, qpushforward, SimplicialChain};
use qgmt::multisection::Multisection;
use qgmt::oracle;
use qgmt::qfields::{Decomposition, FieldSpec};
use qgmt::qpoints::QPoint;
use qgmt::reparam::ReparamScenario;

use crate::output::{number, Table};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: String,
    payload: Value,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricPayload {
    a: QPoint,
    b: QPoint,
}

#[derive(Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum Expect {
    Split,
    NotSeparated,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecomposePayload {
    field: FieldSpec,
    p0: usize,
    i: usize,
    j: usize,
    #[serde(default)]
    expect: Option<Expect>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PushforwardPayload {
    field: FieldSpec,
    chain: SimplicialChain,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MultisectionPayload {
    #[serde(default)]
    multisection: Option<Value>,
    #[serde(default)]
    field: Option<FieldSpec>,
    /// Ball radius for the coherence check; half the smallest gap if absent.
    #[serde(default)]
    sep: Option<f64>,
    /// Cone slope to assert; only reported if absent.
    #[serde(default)]
    tau: Option<f64>,
}

enum Payload {
    Metric(MetricPayload),
    Decompose(DecomposePayload),
    Pushforward(PushforwardPayload),
    Multisection(Multisection, MultisectionPayload),
    Reparam(Box<ReparamScenario>),
}

pub struct Scenario {
    pub kind: String,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    payload: Payload,
}

pub struct Outcome {
    pub report: Value,
    pub table: Table,
    pub passed: bool,
    pub summary: String,
}

fn typed<T: for<'de> Deserialize<'de>>(kind: &str, v: Value) -> Result<T, String> {
    serde_json::from_value(v).map_err(|e| format!("{kind} payload: {e}"))
}

/// Library errors are input errors when the data was at fault; anything
/// else is a failed run with a report.
enum RunError {
    Input(String),
    Failed(String),
}

impl From<qgmt::Error> for RunError {
    fn from(e: qgmt::Error) -> Self {
        if e.is_input() {
            RunError::Input(e.to_string())
        } else {
            RunError::Failed(e.to_string())
        }
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

impl Scenario {
    /// Parses the file and validates the payload against its kind.
    pub fn parse(text: &str) -> Result<Self, String> {
        let raw: RawScenario = serde_json::from_str(text).map_err(|e| format!("scenario: {e}"))?;
        let kind = raw.kind.clone();
        let payload = match kind.as_str() {
            "metric" => Payload::Metric(typed(&kind, raw.payload)?),
            "decompose" => Payload::Decompose(typed(&kind, raw.payload)?),
            "pushforward" => Payload::Pushforward(typed(&kind, raw.payload)?),
            "multisection" => {
                let p: MultisectionPayload = typed(&kind, raw.payload)?;
                let ms = match (&p.multisection, &p.field) {
                    (Some(m), None) => Multisection::from_json(&m.to_string()).map_err(|e| format!("multisection payload: {e}"))?,
                    (None, Some(f)) => {
                        Multisection::from_qfield(&f.build().map_err(|e| format!("multisection payload: {e}"))?)
                    }
                    _ => return Err("multisection payload needs exactly one of \"multisection\" and \"field\"".into()),
                };
                Payload::Multisection(ms, p)
            }
            "reparam" => Payload::Reparam(Box::new(typed(&kind, raw.payload)?)),
            other => {
                return Err(format!(
                    "unknown kind {other:?}; expected metric, decompose, pushforward, multisection or reparam"
                ))
            }
        };
        Ok(Scenario { kind, seed: raw.seed, output: raw.output, payload })
    }

    pub fn execute(&self) -> Result<Outcome, String> {
        let result = match &self.payload {
            Payload::Metric(p) => metric(p),
            Payload::Decompose(p) => decompose(p),
            Payload::Pushforward(p) => pushforward(p),
            Payload::Multisection(ms, p) => multisection(ms, p),
            Payload::Reparam(s) => reparam(s),
        };
        let mut outcome = match result {
            Ok(o) => o,
            Err(RunError::Input(msg)) => return Err(msg),
            Err(RunError::Failed(msg)) => Outcome {
                report: json!({ "error": msg, "passed": false }),
                table: Table::new(&["error"]),
                passed: false,
                summary: msg,
            },
        };
        if let Value::Object(map) = &mut outcome.report {
            map.insert("kind".into(), json!(self.kind));
            if let Some(seed) = self.seed {
                map.insert("seed".into(), json!(seed));
            }
        }
        Ok(outcome)
    }
}

fn metric(p: &MetricPayload) -> Result<Outcome, RunError> {
    if p.a.q() != p.b.q() || p.a.n() != p.b.n() {
        return Err(RunError::Input(format!(
            "a is a {}-point in R^{}, b is a {}-point in R^{}",
            p.a.q(),
            p.a.n(),
            p.b.q(),
            p.b.n()
        )));
    }
    let (perm, distance) = p.a.matching(&p.b)?;
    let brute = oracle::permutation_distance(&p.a, &p.b);
    let delta = (distance - brute).abs();
    let passed = delta <= 1e-12;
    let (ea, eb) = (p.a.expanded(), p.b.expanded());
    let mut table = Table::new(&["slot_a", "slot_b", "squared_distance"]);
    for (i, &j) in perm.iter().enumerate() {
        table.row(vec![i.to_string(), j.to_string(), number(qgmt::linalg::dist2(ea[i], eb[j]))]);
    }
    Ok(Outcome {
        report: json!({
            "distance": distance,
            "brute_force": brute,
            "difference": delta,
            "matching": perm,
            "center_of_mass": [p.a.center_of_mass(), p.b.center_of_mass()],
            "passed": passed,
        }),
        table,
        passed,
        summary: format!("G = {distance}"),
    })
}

fn decompose(p: &DecomposePayload) -> Result<Outcome, RunError> {
    let u = p.field.build()?;
    let lip = u.lipschitz_estimate()?;
    let mut table = Table::new(&["point", "part", "atoms"]);
    let (report, passed, summary) = match u.decompose(p.p0, p.i, p.j)? {
        Decomposition::Split(u1, u2) => {
            let exact = oracle::is_exact_split(&u, &u1, &u2);
            let (l1, l2) = (u1.lipschitz_estimate()?, u2.lipschitz_estimate()?);
            for (k, part) in [&u1, &u2].into_iter().enumerate() {
                for (i, s) in part.samples().iter().enumerate() {
                    table.row(vec![i.to_string(), (k + 1).to_string(), s.atoms().len().to_string()]);
                }
            }
            let passed = exact && l1 <= lip + 1e-9 && l2 <= lip + 1e-9 && p.expect != Some(Expect::NotSeparated);
            (
                json!({
                    "outcome": "split",
                    "q1": u1.q(),
                    "q2": u2.q(),
                    "lipschitz": lip,
                    "part_lipschitz": [l1, l2],
                    "exact_merge": exact,
                    "parts": [u1.samples(), u2.samples()],
                    "passed": passed,
                }),
                passed,
                format!("split into Q1 = {}, Q2 = {}", u1.q(), u2.q()),
            )
        }
        Decomposition::NotSeparated { gap, threshold } => {
            let passed = p.expect != Some(Expect::Split);
            (
                json!({
                    "outcome": "not_separated",
                    "gap": gap,
                    "threshold": threshold,
                    "lipschitz": lip,
                    "passed": passed,
                }),
                passed,
                format!("not separated: gap {gap} ≤ {threshold}"),
            )
        }
    };
    Ok(Outcome { report, table, passed, summary })
}

fn pushforward(p: &PushforwardPayload) -> Result<Outcome, RunError> {
    let (u, sel) = p.field.build_with_selection()?;
    let sel = sel.unwrap_or_else(|| u.select_sheets());
    let t = qpushforward(&u, &sel, &p.chain)?;
    let g = graph_chain(&u, &sel, &p.chain)?;
    let rep = check_boundary_commutation(&u, &sel, &p.chain)?;
    let mut table = Table::new(&["chain", "term", "coefficient", "vertices"]);
    for (name, chain) in [("T_u", &t), ("G_u", &g)] {
        for (k, (verts, c)) in chain.terms().iter().enumerate() {
            let flat: Vec<String> = verts.iter().flatten().map(|x| number(*x)).collect();
            table.row(vec![name.into(), k.to_string(), c.to_string(), flat.join(" ")]);
        }
    }
    let passed = rep.passed;
    Ok(Outcome {
        report: json!({
            "pieces": sel.pieces().len(),
            "t_u": t,
            "g_u": g,
            "t_u_mass": t.mass(),
            "g_u_mass": g.mass(),
            "boundary": to_value(&rep),
            "passed": passed,
        }),
        table,
        passed,
        summary: format!("∂T_u = T_(u|∂P): {}, ∂G_u = G_(u|∂P): {}", rep.equal, rep.graph_equal),
    })
}

fn multisection(ms: &Multisection, p: &MultisectionPayload) -> Result<Outcome, RunError> {
    let sep = p.sep.unwrap_or_else(|| ms.auto_sep());
    let coherence = ms.check_coherence(sep)?;
    let cone = ms.check_cone(p.tau.unwrap_or(0.0));
    let lip = if coherence.coherent { Some(ms.lipschitz_from_cone_with(sep)?) } else { None };
    let cone_ok = p.tau.is_none() || cone.passed;
    let passed = coherence.coherent && cone_ok && lip.as_ref().is_some_and(|l| l.holds);
    let mut table = Table::new(&["point", "atoms", "coherent"]);
    for i in 0..ms.mesh().len() {
        table.row(vec![
            i.to_string(),
            ms.entries(i).len().to_string(),
            (!coherence.violations.contains(&i)).to_string(),
        ]);
    }
    let summary = match &lip {
        Some(l) => format!("coherent, Lip {} ≤ √Q·τ̂ = {}: {}", l.lipschitz, l.bound, l.holds),
        None => format!("incoherent at {} base points", coherence.violations.len()),
    };
    Ok(Outcome {
        report: json!({
            "coherence": to_value(&coherence),
            "cone": to_value(&cone),
            "lipschitz": lip.as_ref().map(to_value),
            "passed": passed,
        }),
        table,
        passed,
        summary,
    })
}

fn reparam(s: &ReparamScenario) -> Result<Outcome, RunError> {
    let report = s.run()?;
    let mut table = Table::new(&[
        "vertex", "x", "mass", "residual", "normality", "n_norm", "f_dist", "th2_ratio", "th2_ok", "th3_lhs", "th3_rhs",
        "th4_lhs", "th4_rhs", "th4_ok",
    ]);
    if let Some(e) = &report.estimates {
        for v in &e.vertices {
            let x: Vec<String> = v.x.iter().map(|c| number(*c)).collect();
            table.row(vec![
                v.index.to_string(),
                x.join(" "),
                v.mass.to_string(),
                number(v.residual),
                number(v.normality),
                number(v.n_norm),
                number(v.f_dist),
                number(v.th2_ratio),
                v.th2_ok.to_string(),
                number(v.th3_lhs),
                number(v.th3_rhs),
                v.th4_lhs.map(number).unwrap_or_default(),
                number(v.th4_rhs),
                v.th4_ok.to_string(),
            ]);
        }
    }
    let summary = match &report.estimates {
        None => {
            let names: Vec<&str> = report.smallness.failures().iter().map(|c| c.name.as_str()).collect();
            format!("smallness gates failed: {}", names.join(", "))
        }
        Some(e) => format!(
            "C1 = {:.4}, C3 = {:.4}, C_vl = {:.4}, max residual {:.1e}",
            e.th1_constant, e.th3_constant, e.vl_constant, e.max_residual
        ),
    };
    Ok(Outcome { passed: report.passed, report: to_value(&report), table, summary })
}
