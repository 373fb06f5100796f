use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{NormalField, TubularNeighborhood};
use crate::chains::{Point, SimplicialChain};
use crate::error::Result;
use crate::linalg;
use crate::qfields::AnalyticQField;

#[derive(Clone, Debug, Serialize)]
pub struct ProbeCount {
    /// Base point of the probe fiber.
    pub x: Vec<f64>,
    /// Signed intersection counts with T_F and with G_f.
    pub t_f: i64,
    pub g_f: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphIdentityReport {
    /// Mesh spacing over B_s.
    pub h: f64,
    pub lip_f: f64,
    /// h (1 + ℓ̂).
    pub bound: f64,
    /// sup over {Φ(x_k) + atoms} of the distance to the graph samples.
    pub a_to_b: f64,
    /// sup over graph samples in U with base point in B_{s−h} of the
    /// distance to {Φ(x_k) + atoms}.
    pub b_to_a: f64,
    pub hausdorff: f64,
    pub hausdorff_ok: bool,
    pub cloud_a: usize,
    pub cloud_b: usize,
    pub probes: Vec<ProbeCount>,
    pub probes_ok: bool,
    pub passed: bool,
}

/// Points bucketed by their first `m` coordinates.
struct BaseIndex<'a> {
    m: usize,
    cell: f64,
    points: &'a [Vec<f64>],
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl<'a> BaseIndex<'a> {
    fn new(m: usize, cell: f64, points: &'a [Vec<f64>]) -> Self {
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(m, cell, p)).or_default().push(i);
        }
        BaseIndex { m, cell, points, buckets }
    }

    fn key(m: usize, cell: f64, p: &[f64]) -> Vec<i64> {
        p[..m].iter().map(|x| (x / cell).floor() as i64).collect()
    }

    /// Distance from `p` to the nearest indexed point whose base lies within
    /// `radius` of p's base; `∞` when there is none.
    fn nearest(&self, p: &[f64], radius: f64) -> f64 {
        let reach = (radius / self.cell).ceil() as i64;
        let center = Self::key(self.m, self.cell, p);
        let mut best = f64::INFINITY;
        let mut offset = vec![-reach; self.m];
        loop {
            let key: Vec<i64> = center.iter().zip(&offset).map(|(c, o)| c + o).collect();
            if let Some(ids) = self.buckets.get(&key) {
                for &i in ids {
                    let q = &self.points[i];
                    if linalg::dist(&q[..self.m], &p[..self.m]) <= radius {
                        best = best.min(linalg::dist(q, p));
                    }
                }
            }
            let mut a = 0;
            while a < self.m {
                offset[a] += 1;
                if offset[a] <= reach {
                    break;
                }
                offset[a] = -reach;
                a += 1;
            }
            if a == self.m {
                return best;
            }
        }
    }
}

/// Signed count of the transversal intersections of the probe
/// {c + Σ wⁱ e_i : |w| < radius} with the simplices of `chain`.
fn probe_count(chain: &SimplicialChain, c: &[f64], e: &[Vec<f64>], radius: f64) -> i64 {
    let m = chain.m();
    let d = chain.d();
    let n = e.len();
    let mut total = 0;
    for (verts, coef) in chain.terms() {
        let reach = radius + 1e-12;
        let outside = (0..m).any(|a| {
            let lo = verts.iter().map(|v| v[a]).fold(f64::INFINITY, f64::min);
            let hi = verts.iter().map(|v| v[a]).fold(f64::NEG_INFINITY, f64::max);
            c[a] < lo - reach || c[a] > hi + reach
        });
        if outside {
            continue;
        }
        let a0 = &verts[0];
        let oriented = DMatrix::from_fn(d, m + n, |i, j| if j < m { verts[j + 1][i] - a0[i] } else { e[j - m][i] });
        let mut system = oriented.clone();
        for j in m..m + n {
            for i in 0..d {
                system[(i, j)] = -system[(i, j)];
            }
        }
        let Some(sol) = linalg::solve(system, &linalg::sub(c, a0)) else {
            continue;
        };
        let lambda = &sol[..m];
        let w = &sol[m..];
        if lambda.iter().all(|&l| l > 0.0) && lambda.iter().sum::<f64>() < 1.0 && linalg::norm(w) < radius {
            total += oriented.determinant().signum() as i64 * coef;
        }
    }
    total
}

/// Probe base points: a small lattice inside B_{s/2} offset so that no
/// probe meets a mesh vertex or edge.
fn probe_points(m: usize, s: f64) -> Vec<Vec<f64>> {
    let k = if m == 1 { 9 } else { 5 };
    let offsets = [0.3141, 0.2718];
    let mut out = vec![Vec::new()];
    for a in 0..m {
        out = out
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                (0..k).map(move |i| {
                    let mut q = p.clone();
                    q.push(-0.5 * s + s * (i as f64 + offsets[a % 2]) / k as f64);
                    q
                })
            })
            .collect();
    }
    out.retain(|p| linalg::norm(p) < 0.5 * s);
    out
}

/// Compares the reparametrized sheets with the graph of f: a sampled
/// Hausdorff distance between the point clouds, and signed intersection
/// counts of probe fibers with the PL chains T_F and G_f.
pub fn verify_graph_identity(nf: &NormalField, tube: &TubularNeighborhood, f: &AnalyticQField) -> Result<GraphIdentityReport> {
    let surface = tube.surface();
    let (m, n) = (surface.m(), surface.n());
    let d = m + n;
    let s = surface.s();
    let c0 = tube.c0();
    let h = 2.0 * s / (surface.resolution() - 1) as f64;
    let samples = tube.sample_field(f)?;
    let lip_f = samples.lipschitz;
    let bound = h * (1.0 + lip_f);

    let cloud_a: Vec<Point> = nf.fibers().iter().flat_map(|fib| fib.atoms.iter().map(|a| a.xi.clone())).collect();
    let graph_mesh = samples.field.mesh();
    let cloud_b: Vec<Point> = graph_mesh
        .points()
        .iter()
        .flat_map(|y| f.sheets().iter().map(move |sh| [&y[..], &sh.poly.eval(y)[..]].concat()))
        .collect();

    let index_b = BaseIndex::new(m, h, &cloud_b);
    let a_to_b = cloud_a.par_iter().map(|p| index_b.nearest(p, 2.0 * h)).reduce(|| 0.0, f64::max);
    let index_a = BaseIndex::new(m, h, &cloud_a);
    let inner: Vec<Option<f64>> = cloud_b
        .par_iter()
        .map(|p| -> Result<Option<f64>> {
            if linalg::norm(&p[..m]) > s + c0 {
                return Ok(None);
            }
            let (z, w) = tube.project(p)?;
            if linalg::norm(&z) > s - h || linalg::norm(&w) >= c0 {
                return Ok(None);
            }
            Ok(Some(index_a.nearest(p, 2.0 * h)))
        })
        .collect::<Result<Vec<_>>>()?;
    let b_to_a = inner.iter().flatten().cloned().fold(0.0, f64::max);
    let hausdorff = a_to_b.max(b_to_a);

    // T_F: on each simplex of the base mesh, match the atoms at the other
    // vertices to those at the first.
    let mut tf_terms: Vec<(Vec<Point>, i64)> = Vec::new();
    for simplex in nf.mesh().simplices() {
        let first = nf.fiber(simplex[0]).points();
        let slots = first.expanded();
        let others: Vec<_> = simplex[1..].iter().map(|&i| nf.fiber(i).points()).collect();
        let mut perms = Vec::with_capacity(others.len());
        for other in &others {
            perms.push(first.matching(other)?.0);
        }
        for (l, head) in slots.iter().enumerate() {
            let mut verts = vec![head.to_vec()];
            for (other, perm) in others.iter().zip(&perms) {
                verts.push(other.expanded()[perm[l]].to_vec());
            }
            tf_terms.push((verts, 1));
        }
    }
    let t_f = SimplicialChain::new(m, d, tf_terms)?;
    let mut gf_terms: Vec<(Vec<Point>, i64)> = Vec::new();
    for simplex in graph_mesh.simplices() {
        for sheet in f.sheets() {
            let verts = simplex
                .iter()
                .map(|&i| {
                    let y = graph_mesh.point(i);
                    [y, &sheet.poly.eval(y)[..]].concat()
                })
                .collect();
            gf_terms.push((verts, sheet.mult as i64));
        }
    }
    let g_f = SimplicialChain::new(m, d, gf_terms)?;

    let probes = probe_points(m, s)
        .into_par_iter()
        .map(|x| -> Result<ProbeCount> {
            let frame = surface.normal_frame(&x)?;
            let c = surface.embed(&x);
            Ok(ProbeCount { t_f: probe_count(&t_f, &c, &frame, c0), g_f: probe_count(&g_f, &c, &frame, c0), x })
        })
        .collect::<Result<Vec<_>>>()?;
    let q = f.q() as i64;
    let probes_ok = probes.iter().all(|p| p.t_f == q && p.g_f == q);
    let hausdorff_ok = hausdorff <= bound;
    Ok(GraphIdentityReport {
        h,
        lip_f,
        bound,
        a_to_b,
        b_to_a,
        hausdorff,
        hausdorff_ok,
        cloud_a: cloud_a.len(),
        cloud_b: cloud_b.len(),
        probes,
        probes_ok,
        passed: hausdorff_ok && probes_ok,
    })
}
