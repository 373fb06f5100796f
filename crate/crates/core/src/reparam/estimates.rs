use rayon::prelude::*;
use serde::Serialize;

use super::{NormalField, TubularNeighborhood, NEWTON_TOL};
use crate::error::{Error, Result};
use crate::linalg;
use crate::qfields::AnalyticQField;
use crate::qpoints::QPoint;

/// Per-vertex quantities behind the estimates.
#[derive(Clone, Debug, Serialize)]
pub struct VertexEstimate {
    pub index: usize,
    pub x: Vec<f64>,
    /// N(Φ(x)).
    pub normal: QPoint,
    /// Fiber coordinates of the atoms.
    pub coords: QPoint,
    pub mass: usize,
    pub residual: f64,
    pub normality: f64,
    /// |N(Φ(x))|.
    pub n_norm: f64,
    /// G(f(x), Q⟦φ(x)⟧).
    pub f_dist: f64,
    /// f_dist / n_norm (1 when both vanish).
    pub th2_ratio: f64,
    pub th2_ok: bool,
    /// |η∘N(Φ(x))|.
    pub th3_lhs: f64,
    /// |η∘f(x) − φ(x)| + ℓ̂|Dφ(x)||N(Φ(x))|.
    pub th3_rhs: f64,
    /// G(N(p), Q⟦v⟧) with (x, η∘f(x)) = p + v, when p lies over B_s.
    pub th4_lhs: Option<f64>,
    /// 2√Q · G(f(x), Q⟦η∘f(x)⟧).
    pub th4_rhs: f64,
    pub th4_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimatesReport {
    pub resolution: usize,
    pub vertices: Vec<VertexEstimate>,
    pub edges: usize,
    /// ‖N‖_{C⁰}, ‖Dφ‖_{C⁰}, ‖D²φ‖_{C⁰}, ℓ̂.
    pub norm_n: f64,
    pub d1: f64,
    pub d2: f64,
    pub lip_f: f64,
    /// ‖N‖‖D²φ‖ + ‖Dφ‖ + ℓ̂.
    pub bracket: f64,
    /// Edgewise Lip(N), measured against |Φ(y) − Φ(x)|.
    pub lip_n: f64,
    /// lip_n / bracket.
    pub th1_constant: f64,
    pub th2_ok: bool,
    pub th2_ratio_min: f64,
    pub th2_ratio_max: f64,
    /// max over vertices of th3_lhs / th3_rhs.
    pub th3_constant: f64,
    pub th4_ok: bool,
    pub th4_checked: usize,
    pub th4_skipped: usize,
    /// τ̂: cone constant of the fiber coordinates over the base mesh.
    pub cone_constant: f64,
    /// τ̂ / bracket.
    pub vl_constant: f64,
    /// τ̂': largest matched increment of N per unit base length.
    pub ambient_cone_constant: f64,
    /// √Q · τ̂'.
    pub lip_bound: f64,
    pub lip_bound_ok: bool,
    pub mass_ok: bool,
    pub max_residual: f64,
    pub residual_ok: bool,
    pub max_normality: f64,
    pub normality_ok: bool,
    /// For φ ≡ 0: max over vertices of G(N(Φ(x)), Σ⟦(0, g_l(x))⟧).
    pub flat_reproduction: Option<f64>,
    pub flat_reproduction_ok: bool,
    pub constants_finite: bool,
    pub passed: bool,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

/// Checks the four estimates on a built normal field.
pub fn verify_estimates(nf: &NormalField, tube: &TubularNeighborhood, f: &AnalyticQField) -> Result<EstimatesReport> {
    let surface = tube.surface();
    let mesh = nf.mesh();
    let m = surface.m();
    let q = nf.q();
    let sq = (q as f64).sqrt();
    let lip_f = tube.sample_field(f)?.lipschitz;
    let norm_n = nf.sup_norm();
    let d1 = surface.norms().sup[1];
    let d2 = surface.norms().sup[2];
    let bracket = norm_n * d2 + d1 + lip_f;
    let flat = surface.is_flat();

    let vertex_estimate = |i: usize| -> Result<VertexEstimate> {
        let x = mesh.point(i);
        let fiber = nf.fiber(i);
        let normal = fiber.normal();
        let fx = f.eval(x);
        let phi_x = surface.phi().eval(x);
        let n_norm = normal.norm();
        let f_dist = fx.distance(&QPoint::concentrated(phi_x.clone(), q)?)?;
        let th2_ok = n_norm / (2.0 * sq) <= f_dist + 1e-12 && f_dist <= 2.0 * sq * n_norm + 1e-12;
        let th2_ratio = if n_norm == 0.0 && f_dist == 0.0 { 1.0 } else { ratio(f_dist, n_norm) };

        let eta_f = fx.center_of_mass();
        let th3_lhs = linalg::norm(&normal.center_of_mass());
        let slope = surface.phi().jacobian(x).norm();
        let th3_rhs = linalg::dist(&eta_f, &phi_x) + lip_f * slope * n_norm;

        let th4_rhs = 2.0 * sq * fx.distance(&QPoint::concentrated(eta_f.clone(), q)?)?;
        let target = [x, &eta_f[..]].concat();
        let (z, _) = tube.project(&target)?;
        let th4_lhs = if linalg::norm(&z) <= surface.s() {
            let v = linalg::sub(&target, &surface.embed(&z));
            let np = tube.solve_fiber(f, &z)?.normal();
            Some(np.distance(&QPoint::concentrated(v, q)?)?)
        } else {
            None
        };
        let th4_ok = th4_lhs.is_none_or(|l| l <= th4_rhs + 1e-10);
        Ok(VertexEstimate {
            index: i,
            x: x.to_vec(),
            coords: fiber.coords(),
            normal,
            mass: fiber.mass,
            residual: fiber.max_residual(),
            normality: fiber.normality(surface),
            n_norm,
            f_dist,
            th2_ratio,
            th2_ok,
            th3_lhs,
            th3_rhs,
            th4_lhs,
            th4_rhs,
            th4_ok,
        })
    };
    let vertices = (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            let x = mesh.point(i);
            let at = |source: Error| Error::AtVertex { index: i, x: x.to_vec(), source: Box::new(source) };
            vertex_estimate(i).map_err(at)
        })
        .collect::<Result<Vec<_>>>()?;

    let embedded: Vec<Vec<f64>> = mesh.points().iter().map(|x| surface.embed(x)).collect();
    let edge_stats: Vec<(f64, f64)> = mesh
        .edges()
        .par_iter()
        .map(|&(i, j)| -> Result<(f64, f64)> {
            let (a, b) = (&vertices[i].normal, &vertices[j].normal);
            let (perm, g) = a.matching(b)?;
            let base = linalg::dist(mesh.point(i), mesh.point(j));
            let (ea, eb) = (a.expanded(), b.expanded());
            let worst = perm
                .iter()
                .enumerate()
                .map(|(k, &l)| linalg::dist(ea[k], eb[l]))
                .fold(0.0, f64::max);
            Ok((g / linalg::dist(&embedded[i], &embedded[j]), worst / base))
        })
        .collect::<Result<Vec<_>>>()?;
    let lip_n = edge_stats.iter().map(|e| e.0).fold(0.0, f64::max);
    let ambient_cone_constant = edge_stats.iter().map(|e| e.1).fold(0.0, f64::max);
    let cone_constant = nf.coordinate_multisection()?.check_cone(0.0).cone_constant;

    let th1_constant = ratio(lip_n, bracket);
    let vl_constant = ratio(cone_constant, bracket);
    let th3_constant = vertices.iter().map(|v| ratio(v.th3_lhs, v.th3_rhs)).fold(0.0, f64::max);
    let lip_bound = sq * ambient_cone_constant;
    let lip_bound_ok = lip_n <= lip_bound + 1e-9;

    let th2_ok = vertices.iter().all(|v| v.th2_ok);
    let th2_ratio_min = vertices.iter().map(|v| v.th2_ratio).fold(f64::INFINITY, f64::min);
    let th2_ratio_max = vertices.iter().map(|v| v.th2_ratio).fold(0.0, f64::max);
    let th4_ok = vertices.iter().all(|v| v.th4_ok);
    let th4_checked = vertices.iter().filter(|v| v.th4_lhs.is_some()).count();
    let mass_ok = vertices.iter().all(|v| v.mass == q);
    let max_residual = vertices.iter().map(|v| v.residual).fold(0.0, f64::max);
    let max_normality = vertices.iter().map(|v| v.normality).fold(0.0, f64::max);

    let flat_reproduction = if flat {
        let mut worst: f64 = 0.0;
        for v in &vertices {
            let lifted = f.eval(&v.x).map(|g| [&vec![0.0; m][..], g].concat())?;
            worst = worst.max(v.normal.distance(&lifted)?);
        }
        Some(worst)
    } else {
        None
    };
    let flat_reproduction_ok = flat_reproduction.is_none_or(|d| d <= 1e-12);
    let constants_finite = [th1_constant, th3_constant, vl_constant].iter().all(|c| c.is_finite());
    let residual_ok = max_residual < NEWTON_TOL;
    let normality_ok = max_normality <= 1e-9;
    let passed = mass_ok
        && residual_ok
        && normality_ok
        && th2_ok
        && th4_ok
        && lip_bound_ok
        && flat_reproduction_ok
        && constants_finite;
    Ok(EstimatesReport {
        resolution: surface.resolution(),
        edges: mesh.edges().len(),
        norm_n,
        d1,
        d2,
        lip_f,
        bracket,
        lip_n,
        th1_constant,
        th2_ok,
        th2_ratio_min,
        th2_ratio_max,
        th3_constant,
        th4_ok,
        th4_checked,
        th4_skipped: vertices.len() - th4_checked,
        cone_constant,
        vl_constant,
        ambient_cone_constant,
        lip_bound,
        lip_bound_ok,
        mass_ok,
        max_residual,
        residual_ok,
        max_normality,
        normality_ok,
        flat_reproduction,
        flat_reproduction_ok,
        constants_finite,
        passed,
        vertices,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Stability {
    pub coarse: f64,
    pub fine: f64,
    /// Both finite and |coarse − fine| ≤ 0.2·max + 1e-12.
    pub ok: bool,
}

impl Stability {
    fn new(coarse: f64, fine: f64) -> Self {
        let ok = coarse.is_finite() && fine.is_finite() && (coarse - fine).abs() <= 0.2 * coarse.max(fine) + 1e-12;
        Stability { coarse, fine, ok }
    }
}

/// The empirical constants of two runs at different resolutions.
#[derive(Clone, Debug, Serialize)]
pub struct RefinementReport {
    pub coarse_resolution: usize,
    pub fine_resolution: usize,
    pub th1: Stability,
    pub th3: Stability,
    pub vl: Stability,
    pub passed: bool,
}

pub fn compare_refinement(coarse: &EstimatesReport, fine: &EstimatesReport) -> RefinementReport {
    let th1 = Stability::new(coarse.th1_constant, fine.th1_constant);
    let th3 = Stability::new(coarse.th3_constant, fine.th3_constant);
    let vl = Stability::new(coarse.vl_constant, fine.vl_constant);
    let passed = th1.ok && th3.ok && vl.ok;
    RefinementReport {
        coarse_resolution: coarse.resolution,
        fine_resolution: fine.resolution,
        th1,
        th3,
        vl,
        passed,
    }
}
