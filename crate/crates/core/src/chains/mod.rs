//! Integer simplicial chains in R^d.
//!
//! A chain is a formal sum of oriented simplices (ordered vertex tuples) with
//! integer coefficients. The canonical form sorts every vertex tuple, flipping
//! the sign for odd permutations, merges equal simplices, and drops zero
//! coefficients and simplices with a repeated vertex. Vertex coordinates are
//! compared with tolerance [`VERTEX_TOL`].

mod complex;
mod homotopy;
mod push;

pub use complex::{FlatNorm, SimplicialComplex};
pub use homotopy::{
    affine_homotopy_fill, check_homotopy, dyadic_boundary_witness, DyadicLevel, HomotopyReport,
};
pub use push::{
    check_boundary_commutation, flat_pushforward_stability, graph_chain, pushforward,
    qpushforward, BoundaryReport, StabilityReport,
};

use std::cmp::Ordering;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub const VERTEX_TOL: f64 = 1e-12;

pub type Point = Vec<f64>;

pub(crate) fn cmp_point(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > VERTEX_TOL {
            return x.total_cmp(y);
        }
    }
    Ordering::Equal
}

fn cmp_simplex(a: &[Point], b: &[Point]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match cmp_point(x, y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Sorts the vertices of a simplex; returns the sign of the sorting
/// permutation, or `None` if two vertices coincide.
fn sort_simplex(verts: &mut [Point]) -> Option<i64> {
    let mut sign = 1;
    // Insertion sort keeps the parity count explicit.
    for i in 1..verts.len() {
        let mut j = i;
        while j > 0 {
            match cmp_point(&verts[j - 1], &verts[j]) {
                Ordering::Greater => {
                    verts.swap(j - 1, j);
                    sign = -sign;
                    j -= 1;
                }
                Ordering::Equal => return None,
                Ordering::Less => break,
            }
        }
    }
    for w in verts.windows(2) {
        if cmp_point(&w[0], &w[1]) == Ordering::Equal {
            return None;
        }
    }
    Some(sign)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialChain {
    m: usize,
    d: usize,
    terms: Vec<(Vec<Point>, i64)>,
}

#[derive(Serialize, Deserialize)]
struct RawTerm {
    verts: Vec<Point>,
    c: i64,
}

#[derive(Serialize, Deserialize)]
struct RawChain {
    m: usize,
    d: usize,
    terms: Vec<RawTerm>,
}

impl Serialize for SimplicialChain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawChain {
            m: self.m,
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(v, c)| RawTerm { verts: v.clone(), c: *c })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimplicialChain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawChain::deserialize(d)?;
        let terms = raw.terms.into_iter().map(|t| (t.verts, t.c)).collect();
        let chain = SimplicialChain::new(raw.m, raw.d, terms).map_err(serde::de::Error::custom)?;
        if let Some((v, _)) = chain.terms.iter().find(|(v, _)| linalg::is_degenerate(v)) {
            return Err(serde::de::Error::custom(format!("degenerate simplex {v:?}")));
        }
        Ok(chain)
    }
}

impl SimplicialChain {
    /// Canonical chain from raw terms.
    pub fn new(m: usize, d: usize, terms: Vec<(Vec<Point>, i64)>) -> Result<Self> {
        for (verts, _) in &terms {
            if verts.len() != m + 1 {
                return Err(Error::input(format!(
                    "{m}-simplex needs {} vertices, got {}",
                    m + 1,
                    verts.len()
                )));
            }
            if verts.iter().any(|v| v.len() != d || v.iter().any(|x| !x.is_finite())) {
                return Err(Error::input(format!("vertices must be finite points of R^{d}")));
            }
        }
        Ok(Self::canonical(m, d, terms))
    }

    pub fn zero(m: usize, d: usize) -> Self {
        SimplicialChain { m, d, terms: Vec::new() }
    }

    /// A single simplex with coefficient `c`.
    pub fn simplex(verts: Vec<Point>, c: i64) -> Result<Self> {
        let m = verts.len().checked_sub(1).ok_or_else(|| Error::input("empty simplex"))?;
        let d = verts[0].len();
        Self::new(m, d, vec![(verts, c)])
    }

    pub(crate) fn canonical(m: usize, d: usize, terms: Vec<(Vec<Point>, i64)>) -> Self {
        let mut sorted: Vec<(Vec<Point>, i64)> = terms
            .into_iter()
            .filter(|(_, c)| *c != 0)
            .filter_map(|(mut v, c)| sort_simplex(&mut v).map(|s| (v, s * c)))
            .collect();
        sorted.sort_by(|a, b| cmp_simplex(&a.0, &b.0));
        let mut out: Vec<(Vec<Point>, i64)> = Vec::with_capacity(sorted.len());
        for (v, c) in sorted {
            match out.last_mut() {
                Some(last) if cmp_simplex(&last.0, &v) == Ordering::Equal => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|(_, c)| *c != 0);
        SimplicialChain { m, d, terms: out }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[(Vec<Point>, i64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Alternating face sum.
    pub fn boundary(&self) -> Result<SimplicialChain> {
        if self.m == 0 {
            return Err(Error::input("the boundary of a 0-chain is not defined"));
        }
        let mut faces = Vec::with_capacity(self.terms.len() * (self.m + 1));
        for (verts, c) in &self.terms {
            for i in 0..=self.m {
                let mut f = verts.clone();
                f.remove(i);
                let sign = if i % 2 == 0 { 1 } else { -1 };
                faces.push((f, sign * c));
            }
        }
        Ok(Self::canonical(self.m - 1, self.d, faces))
    }

    /// Σ |c| · vol_m(σ).
    pub fn mass(&self) -> f64 {
        self.terms
            .iter()
            .map(|(v, c)| c.unsigned_abs() as f64 * linalg::simplex_volume(v))
            .sum()
    }

    pub fn scaled(&self, k: i64) -> SimplicialChain {
        let terms = self.terms.iter().map(|(v, c)| (v.clone(), c * k)).collect();
        Self::canonical(self.m, self.d, terms)
    }

    /// Sum of two chains of the same dimensions.
    pub fn plus(&self, other: &SimplicialChain) -> Result<SimplicialChain> {
        if self.m != other.m || self.d != other.d {
            return Err(Error::input(format!(
                "cannot add a {}-chain in R^{} to a {}-chain in R^{}",
                self.m, self.d, other.m, other.d
            )));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self::canonical(self.m, self.d, terms))
    }

    pub fn minus(&self, other: &SimplicialChain) -> Result<SimplicialChain> {
        self.plus(&other.scaled(-1))
    }

    /// Maps every vertex through `f`, dropping degenerate image simplices.
    pub fn map_vertices(&self, d: usize, f: impl Fn(&[f64]) -> Point) -> SimplicialChain {
        let terms = self
            .terms
            .iter()
            .map(|(v, c)| (v.iter().map(|p| f(p)).collect::<Vec<_>>(), *c))
            .filter(|(v, _)| !linalg::is_degenerate(v))
            .collect();
        Self::canonical(self.m, d, terms)
    }

    /// For 1-chains, splits every segment at each chain vertex lying in its
    /// relative interior, so that overlapping collinear segments cancel
    /// formally. Other dimensions are returned unchanged.
    pub fn normalized(&self) -> SimplicialChain {
        if self.m != 1 {
            return self.clone();
        }
        let mut verts: Vec<Point> = self.terms.iter().flat_map(|(v, _)| v.iter().cloned()).collect();
        verts.sort_by(|a, b| cmp_point(a, b));
        verts.dedup_by(|a, b| cmp_point(a, b) == Ordering::Equal);
        let mut terms = Vec::new();
        for (v, c) in &self.terms {
            let (a, b) = (&v[0], &v[1]);
            let dir = linalg::sub(b, a);
            let len2 = linalg::dot(&dir, &dir);
            let mut cuts: Vec<(f64, &Point)> = verts
                .iter()
                .filter_map(|p| {
                    let t = linalg::dot(&linalg::sub(p, a), &dir) / len2;
                    if t <= 1e-12 || t >= 1.0 - 1e-12 {
                        return None;
                    }
                    let foot: Vec<f64> = a.iter().zip(&dir).map(|(x, y)| x + t * y).collect();
                    (linalg::dist(&foot, p) <= VERTEX_TOL * (1.0 + len2.sqrt())).then_some((t, p))
                })
                .collect();
            cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut prev = a;
            for (_, p) in cuts {
                terms.push((vec![prev.clone(), p.clone()], *c));
                prev = p;
            }
            terms.push((vec![prev.clone(), b.clone()], *c));
        }
        Self::canonical(1, self.d, terms)
    }

    /// Equality as currents up to the 1-chain subdivision of
    /// [`normalized`](Self::normalized).
    pub fn equivalent(&self, other: &SimplicialChain) -> bool {
        match self.minus(other) {
            Ok(diff) => diff.normalized().is_zero(),
            Err(_) => false,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("chains always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl Add for &SimplicialChain {
    type Output = SimplicialChain;
    fn add(self, rhs: &SimplicialChain) -> SimplicialChain {
        self.plus(rhs).expect("chain dimensions must agree")
    }
}

impl Sub for &SimplicialChain {
    type Output = SimplicialChain;
    fn sub(self, rhs: &SimplicialChain) -> SimplicialChain {
        self.minus(rhs).expect("chain dimensions must agree")
    }
}

impl Neg for &SimplicialChain {
    type Output = SimplicialChain;
    fn neg(self) -> SimplicialChain {
        self.scaled(-1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: f64, b: f64) -> SimplicialChain {
        SimplicialChain::simplex(vec![vec![a], vec![b]], 1).unwrap()
    }

    #[test]
    fn canonical_orientation() {
        assert_eq!(seg(1.0, 0.0), seg(0.0, 1.0).scaled(-1));
        assert!((&seg(0.0, 1.0) + &seg(1.0, 0.0)).is_zero());
        let tri = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
            SimplicialChain::simplex(vec![a.to_vec(), b.to_vec(), c.to_vec()], 1).unwrap()
        };
        let t = tri([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]);
        assert_eq!(tri([1.0, 0.0], [0.0, 1.0], [0.0, 0.0]), t);
        assert_eq!(tri([1.0, 0.0], [0.0, 0.0], [0.0, 1.0]), t.scaled(-1));
        let rep = SimplicialChain::simplex(vec![vec![0.0], vec![0.0]], 5).unwrap();
        assert!(rep.is_zero());
    }

    #[test]
    fn boundary_examples() {
        let b = seg(0.0, 1.0).boundary().unwrap();
        let want = SimplicialChain::new(0, 1, vec![(vec![vec![1.0]], 1), (vec![vec![0.0]], -1)]).unwrap();
        assert_eq!(b, want);
        let t = SimplicialChain::simplex(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], 1).unwrap();
        let edges = SimplicialChain::new(
            1,
            2,
            vec![
                (vec![vec![0.0, 0.0], vec![1.0, 0.0]], 1),
                (vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1),
                (vec![vec![0.0, 1.0], vec![0.0, 0.0]], 1),
            ],
        )
        .unwrap();
        assert_eq!(t.boundary().unwrap(), edges);
        assert!(t.boundary().unwrap().boundary().unwrap().is_zero());
        assert!(b.boundary().is_err());
    }

    #[test]
    fn mass_examples() {
        assert_eq!(seg(0.0, 2.0).scaled(3).mass(), 6.0);
        assert_eq!(SimplicialChain::zero(2, 3).mass(), 0.0);
        let t = SimplicialChain::simplex(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], 1).unwrap();
        assert!((t.mass() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn collinear_overlaps_cancel_after_normalizing() {
        let c = SimplicialChain::new(
            1,
            2,
            vec![
                (vec![vec![0.0, 0.0], vec![2.0, 2.0]], 1),
                (vec![vec![0.0, 0.0], vec![1.0, 1.0]], -1),
                (vec![vec![1.0, 1.0], vec![2.0, 2.0]], -1),
            ],
        )
        .unwrap();
        assert!(!c.is_zero());
        assert!(c.normalized().is_zero());
        let a = SimplicialChain::simplex(vec![vec![0.0], vec![3.0]], 1).unwrap();
        let b = &SimplicialChain::simplex(vec![vec![0.0], vec![1.0]], 1).unwrap()
            + &SimplicialChain::simplex(vec![vec![1.0], vec![3.0]], 1).unwrap();
        assert!(a.equivalent(&b));
        assert!(!a.equivalent(&b.scaled(2)));
    }

    #[test]
    fn json_roundtrip() {
        let c = &seg(0.0, 1.0) + &seg(2.0, 3.5).scaled(-2);
        let back = SimplicialChain::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert!(SimplicialChain::from_json(r#"{"m":1,"d":2,"terms":[{"verts":[[0,0],[1,1],[2,2]],"c":1}]}"#).is_err());
        assert!(SimplicialChain::from_json(r#"{"m":2,"d":2,"terms":[{"verts":[[0,0],[1,1],[2,2]],"c":1}]}"#).is_err());
    }
}
