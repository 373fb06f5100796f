//! Ambient simplicial complexes and the simplicial flat norm.

use std::collections::HashMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::{cmp_point, Point, SimplicialChain};
use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::Mesh;

/// Vertices plus every face of the listed simplices, grouped by dimension.
/// Simplices are stored as increasing vertex index tuples; that order is
/// their reference orientation.
#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    d: usize,
    vertices: Vec<Point>,
    simplices: Vec<Vec<Vec<usize>>>,
    index: Vec<HashMap<Vec<usize>, usize>>,
}

#[derive(Serialize, Deserialize)]
struct RawComplex {
    d: usize,
    vertices: Vec<Point>,
    simplices: Vec<Vec<usize>>,
}

impl<'de> Deserialize<'de> for SimplicialComplex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawComplex::deserialize(d)?;
        SimplicialComplex::from_closed(raw.d, raw.vertices, raw.simplices)
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for SimplicialComplex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawComplex {
            d: self.d,
            vertices: self.vertices.clone(),
            simplices: self.simplices.iter().flatten().cloned().collect(),
        }
        .serialize(s)
    }
}

fn subsets(s: &[usize]) -> Vec<Vec<usize>> {
    let k = s.len();
    (1..(1u64 << k))
        .map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).map(|i| s[i]).collect())
        .collect()
}

fn parity_sign(p: &[usize]) -> i64 {
    let mut sign = 1;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Real-coefficient chain attached to a complex, e.g. an LP filling.
pub type RealChain = Vec<(Vec<Point>, f64)>;

/// Result of [`SimplicialComplex::flat_norm`].
#[derive(Clone, Debug)]
pub struct FlatNorm {
    pub value: f64,
    /// The (m+1)-dimensional part S of the optimal decomposition.
    pub filling: RealChain,
    /// The m-dimensional remainder R = T − ∂S.
    pub remainder: RealChain,
    /// Whether every LP coefficient is an integer to within 1e-9.
    pub integral: bool,
}

fn round_chain(m: usize, d: usize, c: &RealChain) -> Option<SimplicialChain> {
    let terms = c
        .iter()
        .map(|(v, x)| ((x - x.round()).abs() <= 1e-9).then(|| (v.clone(), x.round() as i64)))
        .collect::<Option<Vec<_>>>()?;
    Some(SimplicialChain::canonical(m, d, terms))
}

impl FlatNorm {
    /// S as an integer chain, when the LP optimum is integral.
    pub fn filling_chain(&self, m: usize, d: usize) -> Option<SimplicialChain> {
        round_chain(m + 1, d, &self.filling)
    }

    pub fn remainder_chain(&self, m: usize, d: usize) -> Option<SimplicialChain> {
        round_chain(m, d, &self.remainder)
    }
}

impl SimplicialComplex {
    /// Face closure of the given simplices.
    pub fn from_simplices(vertices: Vec<Point>, tops: &[Vec<usize>]) -> Result<Self> {
        let d = vertices.first().map_or(0, |v| v.len());
        if vertices.iter().any(|v| v.len() != d) {
            return Err(Error::input("complex vertices must share a dimension"));
        }
        let mut all = Vec::new();
        for t in tops {
            let mut s = t.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) || s.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::input(format!("invalid simplex {t:?}")));
            }
            all.extend(subsets(&s));
        }
        Ok(Self::build(d, vertices, all))
    }

    /// Complex from a list that must already be closed under faces.
    pub fn from_closed(d: usize, vertices: Vec<Point>, simplices: Vec<Vec<usize>>) -> Result<Self> {
        if vertices.iter().any(|v| v.len() != d) {
            return Err(Error::input("complex vertices must share the declared dimension"));
        }
        let closed = Self::from_simplices(vertices.clone(), &simplices)?;
        let mut listed: Vec<Vec<usize>> = simplices
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s
            })
            .collect();
        listed.sort();
        listed.dedup();
        let total: usize = closed.simplices.iter().map(|l| l.len()).sum();
        if listed.len() != total {
            return Err(Error::input("simplex list is not closed under faces"));
        }
        Ok(closed)
    }

    /// The triangulation of a mesh with all its faces.
    pub fn from_mesh(mesh: &Mesh) -> Result<Self> {
        Self::from_simplices(mesh.points().to_vec(), mesh.simplices())
    }

    fn build(d: usize, vertices: Vec<Point>, mut all: Vec<Vec<usize>>) -> Self {
        all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        all.dedup();
        let top = all.last().map_or(0, |s| s.len());
        let mut simplices = vec![Vec::new(); top];
        for s in all {
            simplices[s.len() - 1].push(s);
        }
        let index = simplices
            .iter()
            .map(|l| l.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        SimplicialComplex { d, vertices, simplices, index }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// k-simplices as increasing vertex index tuples.
    pub fn simplices(&self, k: usize) -> &[Vec<usize>] {
        self.simplices.get(k).map_or(&[], |l| l.as_slice())
    }

    pub fn top_dim(&self) -> usize {
        self.simplices.len().saturating_sub(1)
    }

    fn points_of(&self, s: &[usize]) -> Vec<Point> {
        s.iter().map(|&i| self.vertices[i].clone()).collect()
    }

    /// Sparse ∂_k as `(row, col, ±1)` with rows indexing (k−1)-simplices.
    pub fn boundary_matrix(&self, k: usize) -> Vec<(usize, usize, i64)> {
        let mut out = Vec::new();
        if k == 0 {
            return out;
        }
        for (col, s) in self.simplices(k).iter().enumerate() {
            for i in 0..s.len() {
                let mut f = s.clone();
                f.remove(i);
                let row = self.index[k - 1][&f];
                out.push((row, col, if i % 2 == 0 { 1 } else { -1 }));
            }
        }
        out
    }

    /// ∂_{k−1} ∘ ∂_k = 0 as integer matrices for every k.
    pub fn check_boundary_squared(&self) -> bool {
        for k in 2..self.simplices.len() {
            let outer = self.boundary_matrix(k - 1);
            let inner = self.boundary_matrix(k);
            let mut by_col: HashMap<usize, Vec<(usize, i64)>> = HashMap::new();
            for &(r, c, v) in &outer {
                by_col.entry(c).or_default().push((r, v));
            }
            let mut prod: HashMap<(usize, usize), i64> = HashMap::new();
            for &(mid, col, v) in &inner {
                for &(row, w) in by_col.get(&mid).map_or(&[][..], |x| x.as_slice()) {
                    *prod.entry((row, col)).or_default() += v * w;
                }
            }
            if prod.values().any(|&x| x != 0) {
                return false;
            }
        }
        true
    }

    fn vertex_index(&self, p: &[f64]) -> Option<usize> {
        self.vertices
            .iter()
            .position(|v| cmp_point(v, p) == std::cmp::Ordering::Equal)
    }

    /// Coefficients of `t` on the m-simplices of the complex.
    pub fn represent(&self, t: &SimplicialChain) -> Result<Vec<f64>> {
        if t.d() != self.d {
            return Err(Error::NotRepresentable(format!(
                "chain lives in R^{} but the complex in R^{}",
                t.d(),
                self.d
            )));
        }
        let m = t.m();
        let mut coef = vec![0.0; self.simplices(m).len()];
        for (verts, c) in t.terms() {
            let ids = verts
                .iter()
                .map(|p| self.vertex_index(p))
                .collect::<Option<Vec<usize>>>()
                .ok_or_else(|| Error::NotRepresentable(format!("vertex of {verts:?} not in complex")))?;
            let mut order: Vec<usize> = (0..ids.len()).collect();
            order.sort_by_key(|&i| ids[i]);
            let sorted: Vec<usize> = order.iter().map(|&i| ids[i]).collect();
            let sign = parity_sign(&order);
            let pos = self
                .index
                .get(m)
                .and_then(|ix| ix.get(&sorted))
                .ok_or_else(|| Error::NotRepresentable(format!("simplex {verts:?} not in complex")))?;
            coef[*pos] += (sign * c) as f64;
        }
        Ok(coef)
    }

    /// min mass(R) + mass(S) over real chains of the complex with
    /// T = R + ∂S, solved as a linear program.
    pub fn flat_norm(&self, t: &SimplicialChain) -> Result<FlatNorm> {
        let m = t.m();
        let target = self.represent(t)?;
        let ms = self.simplices(m);
        let ss = self.simplices(m + 1);
        let vol_m: Vec<f64> = ms.iter().map(|s| linalg::simplex_volume(&self.points_of(s))).collect();
        let vol_s: Vec<f64> = ss.iter().map(|s| linalg::simplex_volume(&self.points_of(s))).collect();

        if target.iter().all(|&x| x == 0.0) {
            return Ok(FlatNorm { value: 0.0, filling: Vec::new(), remainder: Vec::new(), integral: true });
        }

        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let rp: Vec<_> = vol_m.iter().map(|&w| lp.add_var(w, (0.0, f64::INFINITY))).collect();
        let rn: Vec<_> = vol_m.iter().map(|&w| lp.add_var(w, (0.0, f64::INFINITY))).collect();
        let sp: Vec<_> = vol_s.iter().map(|&w| lp.add_var(w, (0.0, f64::INFINITY))).collect();
        let sn: Vec<_> = vol_s.iter().map(|&w| lp.add_var(w, (0.0, f64::INFINITY))).collect();
        let mut rows: Vec<Vec<(microlp::Variable, f64)>> =
            (0..ms.len()).map(|i| vec![(rp[i], 1.0), (rn[i], -1.0)]).collect();
        for (row, col, v) in self.boundary_matrix(m + 1) {
            rows[row].push((sp[col], v as f64));
            rows[row].push((sn[col], -v as f64));
        }
        for (row, rhs) in rows.iter().zip(&target) {
            lp.add_constraint(row.as_slice(), ComparisonOp::Eq, *rhs);
        }
        let sol = lp
            .solve()
            .map_err(|e| Error::Solver(format!("flat norm LP: {e}")))?
            .into_solution()
            .map_err(|e| Error::Solver(format!("flat norm LP interrupted: {e:?}")))?;

        let r: Vec<f64> = (0..ms.len()).map(|i| sol.var_value(rp[i]) - sol.var_value(rn[i])).collect();
        let s: Vec<f64> = (0..ss.len()).map(|i| sol.var_value(sp[i]) - sol.var_value(sn[i])).collect();
        let value = r.iter().zip(&vol_m).map(|(x, w)| x.abs() * w).sum::<f64>()
            + s.iter().zip(&vol_s).map(|(x, w)| x.abs() * w).sum::<f64>();
        let is_int = |x: &f64| (x - x.round()).abs() <= 1e-9;
        let integral = r.iter().all(is_int) && s.iter().all(is_int);
        let collect = |coef: &[f64], list: &[Vec<usize>]| -> RealChain {
            coef.iter()
                .zip(list)
                .filter(|(x, _)| x.abs() > 1e-12)
                .map(|(x, sim)| (self.points_of(sim), *x))
                .collect()
        };
        Ok(FlatNorm { value, filling: collect(&s, ss), remainder: collect(&r, ms), integral })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid;

    #[test]
    fn unit_segment_flat_norm() {
        let k = SimplicialComplex::from_simplices(vec![vec![0.0], vec![1.0]], &[vec![0, 1]]).unwrap();
        let t = SimplicialChain::new(0, 1, vec![(vec![vec![1.0]], 1), (vec![vec![0.0]], -1)]).unwrap();
        let f = k.flat_norm(&t).unwrap();
        assert_eq!(f.value, 1.0);
        assert!(f.integral);
        let s = f.filling_chain(0, 1).unwrap();
        assert_eq!(s, SimplicialChain::simplex(vec![vec![0.0], vec![1.0]], 1).unwrap());
        assert_eq!(k.flat_norm(&SimplicialChain::zero(0, 1)).unwrap().value, 0.0);
    }

    #[test]
    fn square_boundary_flat_norm() {
        let mesh = Mesh::grid(&Grid::unit(2, 2)).unwrap();
        let k = SimplicialComplex::from_mesh(&mesh).unwrap();
        assert!(k.check_boundary_squared());
        let square = SimplicialChain::canonical(
            2,
            2,
            mesh.simplices().iter().map(|s| (mesh.simplex_points(s), 1)).collect(),
        );
        let t = square.boundary().unwrap();
        assert!((t.mass() - 4.0).abs() < 1e-14);
        let f = k.flat_norm(&t).unwrap();
        assert!((f.value - 1.0).abs() < 1e-12);
        assert_eq!(f.filling_chain(1, 2).unwrap(), square);
    }

    #[test]
    fn no_cofaces_means_mass() {
        let k = SimplicialComplex::from_simplices(
            vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![2.0, 1.0]],
            &[vec![0, 1], vec![1, 2]],
        )
        .unwrap();
        let t = SimplicialChain::new(
            1,
            2,
            vec![(vec![vec![0.0, 0.0], vec![2.0, 0.0]], 3), (vec![vec![2.0, 1.0], vec![2.0, 0.0]], 1)],
        )
        .unwrap();
        assert!((k.flat_norm(&t).unwrap().value - t.mass()).abs() < 1e-12);
    }

    #[test]
    fn representability() {
        let k = SimplicialComplex::from_simplices(vec![vec![0.0], vec![1.0]], &[vec![0, 1]]).unwrap();
        let t = SimplicialChain::simplex(vec![vec![0.0], vec![2.0]], 1).unwrap();
        assert!(matches!(k.flat_norm(&t), Err(Error::NotRepresentable(_))));
        let back = SimplicialChain::simplex(vec![vec![1.0], vec![0.0]], 1).unwrap();
        assert_eq!(k.represent(&back).unwrap(), vec![-1.0]);
    }

    #[test]
    fn closure_validated_on_load() {
        let ok = r#"{"d":1,"vertices":[[0.0],[1.0]],"simplices":[[0],[1],[0,1]]}"#;
        assert!(serde_json::from_str::<SimplicialComplex>(ok).is_ok());
        let bad = r#"{"d":1,"vertices":[[0.0],[1.0]],"simplices":[[0,1]]}"#;
        assert!(serde_json::from_str::<SimplicialComplex>(bad).is_err());
    }
}
