//! Q-points: unordered Q-tuples of vectors in R^n.
//!
//! A [`QPoint`] stores `Σ m_j ⟦v_j⟧` with pairwise distinct `v_j` sorted
//! lexicographically, so two Q-points are equal exactly when their stored
//! data are equal. Only bit-identical vectors are merged on construction;
//! [`QPoint::merge`] collapses near-duplicates on request.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::assignment;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub v: Vec<f64>,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQPoint", into = "RawQPoint")]
pub struct QPoint {
    q: usize,
    n: usize,
    atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
struct RawQPoint {
    #[serde(rename = "Q")]
    q: usize,
    n: usize,
    atoms: Vec<Atom>,
}

impl TryFrom<RawQPoint> for QPoint {
    type Error = Error;
    fn try_from(raw: RawQPoint) -> Result<Self> {
        let p = QPoint::new(raw.n, raw.atoms)?;
        if p.q != raw.q {
            return Err(Error::input(format!(
                "declared Q = {} but multiplicities sum to {}",
                raw.q, p.q
            )));
        }
        Ok(p)
    }
}

impl From<QPoint> for RawQPoint {
    fn from(p: QPoint) -> Self {
        RawQPoint { q: p.q, n: p.n, atoms: p.atoms }
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn bit_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

impl QPoint {
    /// Builds a Q-point from atoms; Q is the sum of the multiplicities.
    pub fn new(n: usize, atoms: Vec<Atom>) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("ambient dimension must be positive"));
        }
        if atoms.is_empty() {
            return Err(Error::input("a Q-point needs at least one atom"));
        }
        for a in &atoms {
            if a.v.len() != n {
                return Err(Error::input(format!(
                    "atom has dimension {}, expected {n}",
                    a.v.len()
                )));
            }
            if a.m == 0 {
                return Err(Error::input("multiplicities must be positive"));
            }
            if a.v.iter().any(|x| !x.is_finite()) {
                return Err(Error::input("atom coordinates must be finite"));
            }
        }
        Ok(Self::canonical(n, atoms))
    }

    fn canonical(n: usize, mut atoms: Vec<Atom>) -> Self {
        // -0.0 and 0.0 are the same point.
        for a in &mut atoms {
            for x in &mut a.v {
                if *x == 0.0 {
                    *x = 0.0;
                }
            }
        }
        atoms.sort_by(|a, b| lex_cmp(&a.v, &b.v));
        let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match out.last_mut() {
                Some(last) if bit_eq(&last.v, &a.v) => last.m += a.m,
                _ => out.push(a),
            }
        }
        let q = out.iter().map(|a| a.m).sum();
        QPoint { q, n, atoms: out }
    }

    /// One atom of multiplicity one per listed vector.
    pub fn from_values(n: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(n, values.into_iter().map(|v| Atom { v, m: 1 }).collect())
    }

    /// `Q⟦v⟧`.
    pub fn concentrated(v: Vec<f64>, q: usize) -> Result<Self> {
        let n = v.len();
        Self::new(n, vec![Atom { v, m: q }])
    }

    /// Scalar atoms, for the common `n = 1` case.
    pub fn scalars(values: &[f64]) -> Result<Self> {
        Self::from_values(1, values.iter().map(|&x| vec![x]).collect())
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// The Q vectors with multiplicity repeated, in canonical order.
    pub fn expanded(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.q);
        for a in &self.atoms {
            for _ in 0..a.m {
                out.push(a.v.as_slice());
            }
        }
        out
    }

    /// Index into [`atoms`](Self::atoms) of each expanded slot.
    pub fn expanded_owner(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.q);
        for (j, a) in self.atoms.iter().enumerate() {
            out.extend(std::iter::repeat_n(j, a.m));
        }
        out
    }

    fn check_compatible(&self, other: &QPoint) -> Result<()> {
        if self.q != other.q || self.n != other.n {
            return Err(Error::input(format!(
                "incompatible Q-points: (Q={}, n={}) vs (Q={}, n={})",
                self.q, self.n, other.q, other.n
            )));
        }
        Ok(())
    }

    fn cost_matrix(&self, other: &QPoint) -> Vec<f64> {
        let a = self.expanded();
        let b = other.expanded();
        let mut cost = Vec::with_capacity(self.q * self.q);
        for x in &a {
            for y in &b {
                cost.push(linalg::dist2(x, y));
            }
        }
        cost
    }

    /// G(self, other).
    pub fn distance(&self, other: &QPoint) -> Result<f64> {
        self.check_compatible(other)?;
        let (_, c) = assignment::solve(&self.cost_matrix(other), self.q);
        Ok(c.max(0.0).sqrt())
    }

    /// Lexicographically smallest optimal matching between expanded slots:
    /// `perm[l]` is the slot of `other` paired with slot `l` of `self`.
    pub fn matching(&self, other: &QPoint) -> Result<(Vec<usize>, f64)> {
        self.check_compatible(other)?;
        let (perm, c) = assignment::lex_min(&self.cost_matrix(other), self.q);
        Ok((perm, c.max(0.0).sqrt()))
    }

    /// η(T).
    pub fn center_of_mass(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n];
        for a in &self.atoms {
            for (ci, x) in c.iter_mut().zip(&a.v) {
                *ci += a.m as f64 * x;
            }
        }
        for ci in &mut c {
            *ci /= self.q as f64;
        }
        c
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.atoms.iter().enumerate() {
            for b in &self.atoms[i + 1..] {
                d = d.max(linalg::dist(&a.v, &b.v));
            }
        }
        d
    }

    /// Smallest distance between distinct support vectors, `∞` for a
    /// single support vector.
    pub fn min_gap(&self) -> f64 {
        let mut d = f64::INFINITY;
        for (i, a) in self.atoms.iter().enumerate() {
            for b in &self.atoms[i + 1..] {
                d = d.min(linalg::dist(&a.v, &b.v));
            }
        }
        d
    }

    /// Θ_T(v): the multiplicity of the unique support vector within `tol`.
    pub fn multiplicity(&self, v: &[f64], tol: f64) -> Result<usize> {
        if v.len() != self.n {
            return Err(Error::input("query vector has wrong dimension"));
        }
        let hits: Vec<&Atom> = self
            .atoms
            .iter()
            .filter(|a| linalg::dist(&a.v, v) <= tol)
            .collect();
        match hits.len() {
            0 => Ok(0),
            1 => Ok(hits[0].m),
            k => Err(Error::Ambiguous(k)),
        }
    }

    /// G(T, Q⟦0⟧).
    pub fn norm(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.m as f64 * linalg::dot(&a.v, &a.v))
            .sum::<f64>()
            .sqrt()
    }

    /// Collapses clusters of support vectors chained within `tol` into their
    /// multiplicity-weighted mean.
    pub fn merge(&self, tol: f64) -> QPoint {
        let k = self.atoms.len();
        let mut uf = UnionFind::new(k);
        for i in 0..k {
            for j in i + 1..k {
                if linalg::dist(&self.atoms[i].v, &self.atoms[j].v) <= tol {
                    uf.union(i, j);
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_to_group = vec![usize::MAX; k];
        for i in 0..k {
            let r = uf.find(i);
            if root_to_group[r] == usize::MAX {
                root_to_group[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[root_to_group[r]].push(i);
        }
        let atoms = groups
            .into_iter()
            .map(|g| {
                let m: usize = g.iter().map(|&i| self.atoms[i].m).sum();
                let mut v = vec![0.0; self.n];
                for &i in &g {
                    for (vi, x) in v.iter_mut().zip(&self.atoms[i].v) {
                        *vi += self.atoms[i].m as f64 * x;
                    }
                }
                for vi in &mut v {
                    *vi /= m as f64;
                }
                Atom { v, m }
            })
            .collect();
        Self::canonical(self.n, atoms)
    }

    /// ⟦T1⟧ + ⟦T2⟧ as a (Q1 + Q2)-point.
    pub fn union(&self, other: &QPoint) -> Result<QPoint> {
        if self.n != other.n {
            return Err(Error::input("cannot join Q-points of different dimension"));
        }
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Ok(Self::canonical(self.n, atoms))
    }

    /// Applies `f` to every support vector.
    pub fn map(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<QPoint> {
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom { v: f(&a.v), m: a.m })
            .collect();
        let n = atoms[0].v.len();
        QPoint::new(n, atoms)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("Q-points always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Disjoint-set forest with path halving.
#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(k: usize) -> Self {
        UnionFind { parent: (0..k).collect() }
    }

    pub(crate) fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
