//! Push-forwards of chains through single- and Q-valued piecewise-linear
//! maps.
//!
//! A Q-valued field is treated as piecewise linear over its sample points:
//! every vertex of a pushed chain must be a sample point, and all vertices of
//! one simplex must lie in a single piece of the sheet selection so that each
//! branch is affine on it.

use serde::Serialize;

use super::{Point, SimplicialChain, SimplicialComplex, VERTEX_TOL};
use crate::error::{Error, Result};
use crate::linalg;
use crate::qfields::{SampledQField, SheetSelection};

/// Single-valued push-forward: vertices are mapped by `phi` into R^d_out and
/// degenerate images are dropped.
pub fn pushforward(phi: impl Fn(&[f64]) -> Point, d_out: usize, p: &SimplicialChain) -> SimplicialChain {
    p.map_vertices(d_out, phi)
}

/// Vertex indices of a simplex and the piece containing all of them.
fn simplex_piece(u: &SampledQField, sel: &SheetSelection, verts: &[Point]) -> Result<(Vec<usize>, usize)> {
    let ids = verts
        .iter()
        .map(|p| {
            u.mesh()
                .locate(p, VERTEX_TOL)
                .ok_or_else(|| Error::Refinement(format!("vertex {p:?} is not a sample point")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let piece = sel.locate(ids[0]).0;
    if ids.iter().any(|&i| sel.locate(i).0 != piece) {
        return Err(Error::Refinement(format!("simplex {verts:?} straddles selection pieces")));
    }
    Ok((ids, piece))
}

/// Pushes every branch and counts dropped degenerate images.
fn branch_push(
    u: &SampledQField,
    sel: &SheetSelection,
    p: &SimplicialChain,
    d_out: usize,
    embed: impl Fn(&[f64], &[f64]) -> Point,
) -> Result<(SimplicialChain, usize)> {
    let mut terms = Vec::new();
    let mut dropped = 0;
    for (verts, c) in p.terms() {
        let (ids, _) = simplex_piece(u, sel, verts)?;
        for l in 0..u.q() {
            let image: Vec<Point> = ids
                .iter()
                .map(|&i| embed(u.mesh().point(i), sel.value(i, l)))
                .collect();
            if linalg::is_degenerate(&image) {
                dropped += 1;
            } else {
                terms.push((image, *c));
            }
        }
    }
    Ok((SimplicialChain::canonical(p.m(), d_out, terms), dropped))
}

/// T_u(P): the sum over branches of the branch push-forwards.
pub fn qpushforward(u: &SampledQField, sel: &SheetSelection, p: &SimplicialChain) -> Result<SimplicialChain> {
    Ok(branch_push(u, sel, p, u.n(), |_, v| v.to_vec())?.0)
}

/// G_u(P): the push-forward through p ↦ Σ ⟦(p, u_l(p))⟧.
pub fn graph_chain(u: &SampledQField, sel: &SheetSelection, p: &SimplicialChain) -> Result<SimplicialChain> {
    let d = p.d() + u.n();
    Ok(branch_push(u, sel, p, d, |x, v| [x, v].concat())?.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryReport {
    /// ∂T_u and T_{u|∂P} agree term by term.
    pub formal_equal: bool,
    /// They agree after subdividing 1-chains at shared collinear vertices.
    pub equal: bool,
    /// ∂G_u and G_{u|∂P} agree term by term.
    pub graph_equal: bool,
    /// Degenerate image simplices dropped from T_u.
    pub dropped: usize,
    pub lhs_terms: usize,
    pub rhs_terms: usize,
    pub passed: bool,
}

/// Compares ∂T_u with T_{u|∂P}, and ∂G_u with G_{u|∂P}.
pub fn check_boundary_commutation(
    u: &SampledQField,
    sel: &SheetSelection,
    p: &SimplicialChain,
) -> Result<BoundaryReport> {
    let bp = p.boundary()?;
    let (t, dropped) = branch_push(u, sel, p, u.n(), |_, v| v.to_vec())?;
    let lhs = t.boundary()?;
    let rhs = qpushforward(u, sel, &bp)?;
    let formal_equal = lhs == rhs;
    let equal = formal_equal || lhs.equivalent(&rhs);
    let graph_equal = graph_chain(u, sel, p)?.boundary()? == graph_chain(u, sel, &bp)?;
    Ok(BoundaryReport {
        formal_equal,
        equal,
        graph_equal,
        dropped,
        lhs_terms: lhs.terms().len(),
        rhs_terms: rhs.terms().len(),
        passed: equal && graph_equal,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub flat_source: f64,
    pub flat_image: f64,
    /// flat_image / flat_source, 0 when both vanish.
    pub ratio: f64,
    /// Edgewise Lipschitz estimate of the field.
    pub lipschitz: f64,
    /// Largest operator norm of any branch on any simplex of K.
    pub branch_lipschitz: f64,
    /// ratio / (1 + ℓ̂)^(m+1).
    pub empirical_constant: f64,
    /// Q · (1 + branch_lipschitz)^(m+1).
    pub bound: f64,
    pub source_integral: bool,
    pub image_integral: bool,
    pub passed: bool,
}

/// Flat distance of the pushed chains in the image complex K' against the
/// flat distance of the chains in K.
///
/// K' is generated by the branch images of the m- and (m+1)-simplices of K,
/// with vertices listed in the order of K's vertices.
pub fn flat_pushforward_stability(
    u: &SampledQField,
    sel: &SheetSelection,
    p1: &SimplicialChain,
    p2: &SimplicialChain,
    k: &SimplicialComplex,
) -> Result<StabilityReport> {
    let m = p1.m();
    let source = k.flat_norm(&p1.minus(p2)?)?;

    let mut image_vertices: Vec<Point> = Vec::new();
    let mut vertex_image: Vec<Vec<usize>> = Vec::with_capacity(k.vertices().len());
    let mut vertex_sample = Vec::with_capacity(k.vertices().len());
    for v in k.vertices() {
        let i = u
            .mesh()
            .locate(v, VERTEX_TOL)
            .ok_or_else(|| Error::Refinement(format!("complex vertex {v:?} is not a sample point")))?;
        vertex_sample.push(i);
        let per_branch = (0..u.q())
            .map(|l| {
                let w = sel.value(i, l);
                match image_vertices.iter().position(|x| super::cmp_point(x, w).is_eq()) {
                    Some(j) => j,
                    None => {
                        image_vertices.push(w.to_vec());
                        image_vertices.len() - 1
                    }
                }
            })
            .collect();
        vertex_image.push(per_branch);
    }
    let mut tops = Vec::new();
    let mut branch_lip: f64 = 0.0;
    for dim in [m, m + 1] {
        for s in k.simplices(dim) {
            let piece = sel.locate(vertex_sample[s[0]]).0;
            if s.iter().any(|&i| sel.locate(vertex_sample[i]).0 != piece) {
                return Err(Error::Refinement(format!("simplex {s:?} straddles selection pieces")));
            }
            let src: Vec<Point> = s.iter().map(|&i| k.vertices()[i].clone()).collect();
            for l in 0..u.q() {
                let img: Vec<usize> = s.iter().map(|&i| vertex_image[i][l]).collect();
                let dst: Vec<Point> = img.iter().map(|&j| image_vertices[j].clone()).collect();
                branch_lip = branch_lip.max(linalg::affine_operator_norm(&src, &dst));
                let mut sorted = img.clone();
                sorted.sort_unstable();
                if sorted.windows(2).all(|w| w[0] != w[1]) {
                    tops.push(img);
                }
            }
        }
    }
    let k_image = SimplicialComplex::from_simplices(image_vertices, &tops)?;
    let diff = qpushforward(u, sel, p1)?.minus(&qpushforward(u, sel, p2)?)?;
    let image = k_image.flat_norm(&diff)?;

    let ratio = if source.value == 0.0 {
        if image.value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        image.value / source.value
    };
    let lipschitz = u.lipschitz_estimate()?;
    let exp = (m + 1) as i32;
    let bound = u.q() as f64 * (1.0 + branch_lip).powi(exp);
    Ok(StabilityReport {
        flat_source: source.value,
        flat_image: image.value,
        ratio,
        lipschitz,
        branch_lipschitz: branch_lip,
        empirical_constant: ratio / (1.0 + lipschitz).powi(exp),
        bound,
        source_integral: source.integral,
        image_integral: image.integral,
        passed: ratio.is_finite() && ratio <= bound * (1.0 + 1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Grid, Mesh};
    use crate::qpoints::QPoint;

    fn pl_line(f: impl Fn(f64) -> Vec<f64>) -> (SampledQField, SheetSelection) {
        let mesh = Mesh::grid(&Grid::unit(1, 2)).unwrap();
        let u = SampledQField::from_fn(mesh, |p| QPoint::scalars(&f(p[0])).unwrap()).unwrap();
        let branches = (0..u.q())
            .map(|l| u.mesh().points().iter().map(|p| vec![f(p[0])[l]]).collect())
            .collect();
        let sel = SheetSelection::global(&u, branches).unwrap();
        (u, sel)
    }

    fn seg(a: f64, b: f64) -> SimplicialChain {
        SimplicialChain::simplex(vec![vec![a], vec![b]], 1).unwrap()
    }

    fn pt(x: f64) -> SimplicialChain {
        SimplicialChain::simplex(vec![vec![x]], 1).unwrap()
    }

    #[test]
    fn single_valued_examples() {
        let p = &seg(0.0, 1.0) + &seg(1.0, 3.0).scaled(2);
        assert_eq!(pushforward(|x| x.to_vec(), 1, &p), p);
        assert!(pushforward(|_| vec![4.0], 1, &p).is_zero());
        assert_eq!(pushforward(|x| vec![2.0 * x[0]], 1, &seg(0.0, 1.0)), seg(0.0, 2.0));
    }

    #[test]
    fn q_valued_examples() {
        let p = seg(0.0, 1.0);
        let (u, sel) = pl_line(|x| vec![x, -x]);
        assert_eq!(qpushforward(&u, &sel, &p).unwrap(), &seg(0.0, 1.0) + &seg(0.0, -1.0));
        let (u, sel) = pl_line(|x| vec![x, x]);
        assert_eq!(qpushforward(&u, &sel, &p).unwrap(), seg(0.0, 1.0).scaled(2));
        let (u, sel) = pl_line(|x| vec![3.0 * x + 1.0]);
        assert_eq!(
            qpushforward(&u, &sel, &p).unwrap(),
            pushforward(|x| vec![3.0 * x[0] + 1.0], 1, &p)
        );
    }

    #[test]
    fn graph_examples() {
        let p = seg(0.0, 1.0);
        let (u, sel) = pl_line(|_| vec![0.0, 0.0]);
        let flat = SimplicialChain::simplex(vec![vec![0.0, 0.0], vec![1.0, 0.0]], 2).unwrap();
        assert_eq!(graph_chain(&u, &sel, &p).unwrap(), flat);
        let (u, sel) = pl_line(|x| vec![x]);
        let diag = SimplicialChain::simplex(vec![vec![0.0, 0.0], vec![1.0, 1.0]], 1).unwrap();
        assert_eq!(graph_chain(&u, &sel, &p).unwrap(), diag);
        let (u, sel) = pl_line(|x| vec![x, -x]);
        let anti = SimplicialChain::simplex(vec![vec![0.0, 0.0], vec![1.0, -1.0]], 1).unwrap();
        assert_eq!(graph_chain(&u, &sel, &p).unwrap(), &diag + &anti);
    }

    #[test]
    fn boundary_of_two_branches() {
        let (u, sel) = pl_line(|x| vec![x, -x]);
        let p = seg(0.0, 1.0);
        let r = check_boundary_commutation(&u, &sel, &p).unwrap();
        assert!(r.passed && r.formal_equal);
        let want = &(&pt(1.0) + &pt(-1.0)) - &pt(0.0).scaled(2);
        assert_eq!(qpushforward(&u, &sel, &p).unwrap().boundary().unwrap(), want);
    }

    #[test]
    fn refinement_errors() {
        let (u, sel) = pl_line(|x| vec![x]);
        assert!(matches!(qpushforward(&u, &sel, &seg(0.0, 0.5)), Err(Error::Refinement(_))));
        let mesh = Mesh::grid(&Grid::unit(1, 3)).unwrap();
        let u = SampledQField::from_fn(mesh, |p| QPoint::scalars(&[p[0], -p[0]]).unwrap()).unwrap();
        let split = crate::qfields::Piece { points: vec![0, 1], branches: vec![vec![vec![0.0], vec![0.5]], vec![vec![0.0], vec![-0.5]]] };
        let rest = crate::qfields::Piece { points: vec![2], branches: vec![vec![vec![1.0]], vec![vec![-1.0]]] };
        let sel = SheetSelection::from_pieces(&u, vec![split, rest]).unwrap();
        assert!(qpushforward(&u, &sel, &seg(0.0, 0.5)).is_ok());
        assert!(matches!(qpushforward(&u, &sel, &seg(0.5, 1.0)), Err(Error::Refinement(_))));
    }

    #[test]
    fn stability_examples() {
        let mesh = Mesh::grid(&Grid::unit(1, 5)).unwrap();
        let k = SimplicialComplex::from_mesh(&mesh).unwrap();
        let u = SampledQField::from_fn(mesh.clone(), |p| QPoint::scalars(&[p[0]]).unwrap()).unwrap();
        let sel = u.select_sheets();
        let p1 = pt(0.25);
        let p2 = pt(0.75);
        let r = flat_pushforward_stability(&u, &sel, &p1, &p2, &k).unwrap();
        assert_eq!(r.ratio, 1.0);
        let r = flat_pushforward_stability(&u, &sel, &p1, &p1, &k).unwrap();
        assert!(r.passed && r.ratio == 0.0);

        let u = SampledQField::from_fn(mesh, |p| QPoint::scalars(&[p[0], 2.0 - 0.5 * p[0]]).unwrap()).unwrap();
        let sel = u.select_sheets();
        let p1 = &seg(0.0, 0.25) + &seg(0.25, 0.5);
        let p2 = &p1 + &seg(0.5, 0.75);
        let r = flat_pushforward_stability(&u, &sel, &p1, &p2, &k).unwrap();
        assert!(r.passed && r.ratio.is_finite() && r.ratio > 0.0, "{r:?}");
    }
}
