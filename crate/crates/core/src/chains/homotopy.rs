//! Affine homotopies between piecewise-linear maps and the dyadic cube
//! construction whose boundary is the graph over ∂[0,1]^m.

use serde::Serialize;

use super::push::graph_chain;
use super::{Point, SimplicialChain};
use crate::error::{Error, Result};
use crate::linalg;
use crate::qfields::{SampledQField, SheetSelection};

/// σ♯([0,1] × P) for σ(t, p) = (1 − t) f(p) + t g(p).
///
/// Each simplex [v_0..v_k] of P contributes the prism
/// Σ_i (−1)^i [f(v_0)..f(v_i), g(v_i)..g(v_k)]; degenerate images are dropped.
pub fn affine_homotopy_fill(
    f: impl Fn(&[f64]) -> Point,
    g: impl Fn(&[f64]) -> Point,
    d_out: usize,
    p: &SimplicialChain,
) -> SimplicialChain {
    let mut terms = Vec::new();
    for (verts, c) in p.terms() {
        let fv: Vec<Point> = verts.iter().map(|v| f(v)).collect();
        let gv: Vec<Point> = verts.iter().map(|v| g(v)).collect();
        for i in 0..verts.len() {
            let mut s: Vec<Point> = fv[..=i].to_vec();
            s.extend(gv[i..].iter().cloned());
            if !linalg::is_degenerate(&s) {
                let sign = if i % 2 == 0 { 1 } else { -1 };
                terms.push((s, sign * c));
            }
        }
    }
    SimplicialChain::canonical(p.m() + 1, d_out, terms)
}

#[derive(Clone, Debug, Serialize)]
pub struct HomotopyReport {
    /// ∂fill = g♯P − f♯P − fill(∂P) term by term.
    pub identity_formal: bool,
    /// The same identity after subdividing 1-chains at collinear vertices.
    pub identity: bool,
    pub fill_mass: f64,
    pub sup_distance: f64,
    /// Largest |Df| + |Dg| over the simplices of P.
    pub sup_differential: f64,
    /// sup|f − g| · sup(|Df| + |Dg|)^m · M(P).
    pub mass_bound: f64,
    pub mass_ok: bool,
}

/// Checks the homotopy boundary formula and the mass bound for affine-per-
/// simplex maps `f`, `g`.
pub fn check_homotopy(
    f: impl Fn(&[f64]) -> Point,
    g: impl Fn(&[f64]) -> Point,
    d_out: usize,
    p: &SimplicialChain,
) -> Result<HomotopyReport> {
    let fill = affine_homotopy_fill(&f, &g, d_out, p);
    let lhs = fill.boundary()?;
    let mut rhs = p.map_vertices(d_out, &g).minus(&p.map_vertices(d_out, &f))?;
    if p.m() > 0 {
        rhs = rhs.minus(&affine_homotopy_fill(&f, &g, d_out, &p.boundary()?))?;
    }
    let identity_formal = lhs == rhs;
    let identity = identity_formal || lhs.equivalent(&rhs);

    let mut sup_distance: f64 = 0.0;
    let mut sup_differential: f64 = 0.0;
    for (verts, _) in p.terms() {
        let fv: Vec<Point> = verts.iter().map(|v| f(v)).collect();
        let gv: Vec<Point> = verts.iter().map(|v| g(v)).collect();
        for (a, b) in fv.iter().zip(&gv) {
            sup_distance = sup_distance.max(linalg::dist(a, b));
        }
        let df = linalg::affine_operator_norm(verts, &fv);
        let dg = linalg::affine_operator_norm(verts, &gv);
        sup_differential = sup_differential.max(df + dg);
    }
    let fill_mass = fill.mass();
    let mass_bound = sup_distance * sup_differential.powi(p.m() as i32) * p.mass();
    Ok(HomotopyReport {
        identity_formal,
        identity,
        fill_mass,
        sup_distance,
        sup_differential,
        mass_bound,
        mass_ok: fill_mass <= mass_bound + 1e-9,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DyadicLevel {
    pub level: usize,
    pub cubes: usize,
    /// Cubes where u is kept as its own graph because its values spread
    /// beyond 3(Q−1)ℓ̂·2^{−h}√m.
    pub spread_cubes: usize,
    pub mass: f64,
    pub boundary_mass: f64,
    /// ∂T_h equals G_{u|∂[0,1]^m}.
    pub boundary_ok: bool,
}

/// Builds, for every dyadic level h up to the grid resolution, the chain
/// T_h = Σ over cubes of either G_{u|C} (cubes with spread values) or
/// Q·G_{η∘u|C} + fill(G_{u|∂C}) with the homotopy from (p, η∘u(p)) to the
/// identity, and checks ∂T_h = G_{u|∂[0,1]^m}.
///
/// The field must live on a full grid over [0,1]^m with 2^H + 1 points per
/// axis.
pub fn dyadic_boundary_witness(u: &SampledQField, sel: &SheetSelection) -> Result<Vec<DyadicLevel>> {
    let mesh = u.mesh();
    let m = mesh.dim();
    let grid = mesh
        .grid_spec()
        .ok_or_else(|| Error::input("dyadic construction needs a grid"))?;
    let cells = grid.counts[0] - 1;
    if cells == 0
        || !cells.is_power_of_two()
        || grid.counts.iter().any(|&c| c != cells + 1)
        || grid.lower.iter().any(|&x| x != 0.0)
        || grid.upper.iter().any(|&x| x != 1.0)
        || mesh.len() != (cells + 1).pow(m as u32)
    {
        return Err(Error::input("dyadic construction needs the full grid on [0,1]^m with 2^H + 1 points per axis"));
    }
    let top = cells.trailing_zeros() as usize;
    let q = u.q();
    let n = u.n();
    let lip = u.lipschitz_estimate()?;
    let eta: Vec<Vec<f64>> = u.samples().iter().map(|s| s.center_of_mass()).collect();
    let eta_at = |x: &[f64]| -> Vec<f64> {
        let i = mesh.locate(&x[..m], 1e-9).expect("graph vertices sit over sample points");
        eta[i].clone()
    };
    let whole = SimplicialChain::canonical(
        m,
        m,
        mesh.simplices().iter().map(|s| (mesh.simplex_points(s), 1)).collect(),
    );
    let target = graph_chain(u, sel, &whole.boundary()?)?;

    let mut out = Vec::new();
    for h in 0..=top {
        let side = 1usize << (top - h);
        let per_axis = 1usize << h;
        let ncubes = per_axis.pow(m as u32);
        let mut cube_terms: Vec<Vec<(Vec<Point>, i64)>> = vec![Vec::new(); ncubes];
        for s in mesh.simplices() {
            let corner: Vec<usize> = (0..m)
                .map(|a| s.iter().map(|&i| mesh.lattice_index(i).expect("grid")[a]).min().unwrap_or(0))
                .collect();
            let id = corner.iter().fold(0, |acc, &k| acc * per_axis + k / side);
            cube_terms[id].push((mesh.simplex_points(s), 1));
        }
        let mut spread_diam = vec![0.0f64; ncubes];
        for i in 0..mesh.len() {
            let idx = mesh.lattice_index(i).expect("grid");
            // A grid point belongs to every cube whose closure contains it.
            let ranges: Vec<Vec<usize>> = idx
                .iter()
                .map(|&k| {
                    let mut r = vec![(k / side).min(per_axis - 1)];
                    if k % side == 0 && k > 0 && k / side <= per_axis {
                        r.push(k / side - 1);
                    }
                    r.sort_unstable();
                    r.dedup();
                    r
                })
                .collect();
            let mut ids = vec![0usize];
            for r in &ranges {
                ids = ids.iter().flat_map(|&acc| r.iter().map(move |&k| acc * per_axis + k)).collect();
            }
            let d = u.sample(i).diameter();
            for id in ids {
                spread_diam[id] = spread_diam[id].max(d);
            }
        }
        let threshold = 3.0 * (q as f64 - 1.0) * lip * (side as f64 / cells as f64) * (m as f64).sqrt();
        let mut total = SimplicialChain::zero(m, m + n);
        let mut spread = 0;
        for (id, terms) in cube_terms.into_iter().enumerate() {
            let c = SimplicialChain::canonical(m, m, terms);
            let piece = if spread_diam[id] > threshold {
                spread += 1;
                graph_chain(u, sel, &c)?
            } else {
                let mean_graph = c.map_vertices(m + n, |x| [x, &eta_at(x)[..]].concat()).scaled(q as i64);
                let edge = graph_chain(u, sel, &c.boundary()?)?;
                let fill = affine_homotopy_fill(
                    |z| [&z[..m], &eta_at(z)[..]].concat(),
                    |z| z.to_vec(),
                    m + n,
                    &edge,
                );
                mean_graph.plus(&fill)?
            };
            total = total.plus(&piece)?;
        }
        let b = total.boundary()?;
        out.push(DyadicLevel {
            level: h,
            cubes: ncubes,
            spread_cubes: spread,
            mass: total.mass(),
            boundary_mass: b.mass(),
            boundary_ok: b == target || b.equivalent(&target),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Grid, Mesh};
    use crate::qpoints::QPoint;

    #[test]
    fn equal_maps_fill_nothing() {
        let p = SimplicialChain::simplex(vec![vec![0.0, 0.0], vec![1.0, 0.5]], 1).unwrap();
        let f = |x: &[f64]| vec![x[0], x[1], x[0] * 2.0];
        assert!(affine_homotopy_fill(f, f, 3, &p).is_zero());
    }

    #[test]
    fn point_fill_is_a_segment() {
        let p = SimplicialChain::simplex(vec![vec![0.3]], 1).unwrap();
        let fill = affine_homotopy_fill(|_| vec![0.0], |_| vec![1.0], 1, &p);
        assert_eq!(fill, SimplicialChain::simplex(vec![vec![0.0], vec![1.0]], 1).unwrap());
        let r = check_homotopy(|_| vec![0.0], |_| vec![1.0], 1, &p).unwrap();
        assert!(r.identity_formal && r.mass_ok);
    }

    #[test]
    fn zero_to_identity_on_the_line() {
        let p = SimplicialChain::simplex(vec![vec![0.0], vec![1.0]], 1).unwrap();
        // Both prism triangles collapse into R^1 and are dropped.
        assert!(affine_homotopy_fill(|_| vec![0.0], |x| x.to_vec(), 1, &p).is_zero());
        let r = check_homotopy(|_| vec![0.0], |x| x.to_vec(), 1, &p).unwrap();
        assert!(r.identity, "{r:?}");
    }

    #[test]
    fn unit_square_prism() {
        let p = SimplicialChain::simplex(vec![vec![0.0], vec![1.0]], 1).unwrap();
        let f = |x: &[f64]| vec![x[0], 0.0];
        let g = |x: &[f64]| vec![x[0], 1.0];
        let fill = affine_homotopy_fill(f, g, 2, &p);
        assert!((fill.mass() - 1.0).abs() < 1e-15);
        let r = check_homotopy(f, g, 2, &p).unwrap();
        assert!(r.identity_formal && r.mass_ok);
        assert!((r.mass_bound - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dyadic_witness_on_interval_and_square() {
        let mesh = Mesh::grid(&Grid::unit(1, 9)).unwrap();
        let u = SampledQField::from_fn(mesh, |p| QPoint::scalars(&[p[0], 0.2 - p[0], 5.0]).unwrap()).unwrap();
        let sel = u.select_sheets();
        let levels = dyadic_boundary_witness(&u, &sel).unwrap();
        assert_eq!(levels.len(), 4);
        assert!(levels.iter().all(|l| l.boundary_ok), "{levels:?}");

        let mesh = Mesh::grid(&Grid::unit(2, 5)).unwrap();
        let u = SampledQField::from_fn(mesh, |p| {
            QPoint::scalars(&[p[0] - p[1], 0.5 * p[1] + 0.1]).unwrap()
        })
        .unwrap();
        let sel = u.select_sheets();
        assert_eq!(sel.pieces().len(), 1);
        let levels = dyadic_boundary_witness(&u, &sel).unwrap();
        assert!(levels.iter().all(|l| l.boundary_ok), "{levels:?}");
    }
}
