//! Q-valued functions on sampled domains.
//!
//! Lip(u) of the continuum object cannot be recovered from samples, so the
//! edgewise estimate ℓ̂ = max over edges of G(u(p), u(q)) / |p − q| stands in
//! for it everywhere.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::{Grid, Mesh};
use crate::poly::PolyMap;
use crate::qpoints::{Atom, QPoint, UnionFind};

#[derive(Clone, Debug)]
pub struct SampledQField {
    mesh: Mesh,
    samples: Vec<QPoint>,
}

/// Result of [`SampledQField::decompose`].
#[derive(Clone, Debug)]
pub enum Decomposition {
    /// The part containing atom `i` of `u(p0)`, then the rest.
    Split(SampledQField, SampledQField),
    NotSeparated { gap: f64, threshold: f64 },
}

impl SampledQField {
    pub fn new(mesh: Mesh, samples: Vec<QPoint>) -> Result<Self> {
        if samples.len() != mesh.len() {
            return Err(Error::input(format!(
                "{} samples for {} domain points",
                samples.len(),
                mesh.len()
            )));
        }
        let (q, n) = (samples[0].q(), samples[0].n());
        if samples.iter().any(|s| s.q() != q || s.n() != n) {
            return Err(Error::input("all samples must share Q and n"));
        }
        if !mesh.is_connected() {
            return Err(Error::input("domain adjacency graph is not connected"));
        }
        Ok(SampledQField { mesh, samples })
    }

    pub fn from_fn(mesh: Mesh, f: impl Fn(&[f64]) -> QPoint) -> Result<Self> {
        let samples = mesh.points().iter().map(|p| f(p)).collect();
        Self::new(mesh, samples)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn samples(&self) -> &[QPoint] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &QPoint {
        &self.samples[i]
    }

    pub fn q(&self) -> usize {
        self.samples[0].q()
    }

    pub fn n(&self) -> usize {
        self.samples[0].n()
    }

    /// ℓ̂: the largest edge ratio G(u(p), u(q)) / |p − q|.
    pub fn lipschitz_estimate(&self) -> Result<f64> {
        let ratios: Vec<Result<f64>> = self
            .mesh
            .edges()
            .par_iter()
            .map(|&(a, b)| {
                let len = linalg::dist(self.mesh.point(a), self.mesh.point(b));
                if len == 0.0 {
                    return Err(Error::input(format!("zero-length edge ({a}, {b})")));
                }
                Ok(self.samples[a].distance(&self.samples[b])? / len)
            })
            .collect();
        let mut best: f64 = 0.0;
        for r in ratios {
            best = best.max(r?);
        }
        Ok(best)
    }

    /// Splits u into two fields with disjoint supports when atoms `i` and
    /// `j` of `u(p0)` are further apart than `3 (Q − 1) ℓ̂ diam(B)`.
    pub fn decompose(&self, p0: usize, i: usize, j: usize) -> Result<Decomposition> {
        if p0 >= self.mesh.len() {
            return Err(Error::input("base point index out of range"));
        }
        let atoms = self.samples[p0].atoms();
        if i >= atoms.len() || j >= atoms.len() || i == j {
            return Err(Error::input("atom indices must be distinct and in range"));
        }
        let q = self.q();
        let lip = self.lipschitz_estimate()?;
        let diam = self.mesh.diameter();
        let gap = linalg::dist(&atoms[i].v, &atoms[j].v);
        let threshold = 3.0 * (q as f64 - 1.0) * lip * diam;
        if !(gap > threshold) {
            return Ok(Decomposition::NotSeparated { gap, threshold });
        }
        let link = 3.0 * lip * diam;
        let k = atoms.len();
        let mut uf = UnionFind::new(k);
        for a in 0..k {
            for b in a + 1..k {
                if linalg::dist(&atoms[a].v, &atoms[b].v) <= link {
                    uf.union(a, b);
                }
            }
        }
        let root = uf.find(i);
        let owner = self.samples[p0].expanded_owner();
        let start: Vec<bool> = owner.iter().map(|&a| uf.find(a) == root).collect();

        // Slot labels propagate outwards from p0 along optimal matchings.
        let nv = self.mesh.len();
        let mut labels: Vec<Option<Vec<bool>>> = vec![None; nv];
        labels[p0] = Some(start);
        let mut queue = VecDeque::from([p0]);
        while let Some(p) = queue.pop_front() {
            let lp = labels[p].clone().expect("queued points are labelled");
            for &r in self.mesh.neighbors(p) {
                if labels[r].is_some() {
                    continue;
                }
                let (perm, _) = self.samples[p].matching(&self.samples[r])?;
                let mut lr = vec![false; q];
                for (l, &s) in perm.iter().enumerate() {
                    lr[s] = lp[l];
                }
                labels[r] = Some(lr);
                queue.push_back(r);
            }
        }

        let n = self.n();
        let mut first = Vec::with_capacity(nv);
        let mut second = Vec::with_capacity(nv);
        for (p, lab) in labels.into_iter().enumerate() {
            let lab = lab.expect("connected domain labels every point");
            let slots = self.samples[p].expanded();
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (v, &in_first) in slots.iter().zip(&lab) {
                if in_first {
                    a.push(v.to_vec());
                } else {
                    b.push(v.to_vec());
                }
            }
            let (qa, qb) = (QPoint::from_values(n, a)?, QPoint::from_values(n, b)?);
            let margin = qa
                .atoms()
                .iter()
                .flat_map(|x| qb.atoms().iter().map(move |y| linalg::dist(&x.v, &y.v)))
                .fold(f64::INFINITY, f64::min);
            if !(margin > 0.0) {
                return Err(Error::Invariant(format!(
                    "parts share a support vector at sample {p}"
                )));
            }
            first.push(qa);
            second.push(qb);
        }
        let u1 = SampledQField::new(self.mesh.clone(), first)?;
        let u2 = SampledQField::new(self.mesh.clone(), second)?;
        for part in [&u1, &u2] {
            let l = part.lipschitz_estimate()?;
            if l > lip + 1e-9 {
                return Err(Error::Invariant(format!(
                    "part Lipschitz estimate {l} exceeds field estimate {lip}"
                )));
            }
        }
        Ok(Decomposition::Split(u1, u2))
    }

    /// Splits the domain into pieces carrying Q consistently labelled
    /// branches, growing each piece breadth-first.
    ///
    /// A point joins the current piece only if the labelling induced from
    /// its parent pairs it optimally with every already-labelled neighbour
    /// in the piece; otherwise it waits for a later piece.
    pub fn select_sheets(&self) -> SheetSelection {
        let nv = self.mesh.len();
        let q = self.q();
        let mut labels: Vec<Option<Vec<Vec<f64>>>> = vec![None; nv];
        let mut piece_of = vec![usize::MAX; nv];
        let mut pieces = Vec::new();
        for start in 0..nv {
            if piece_of[start] != usize::MAX {
                continue;
            }
            let k = pieces.len();
            let mut members = vec![start];
            piece_of[start] = k;
            labels[start] =
                Some(self.samples[start].expanded().iter().map(|v| v.to_vec()).collect());
            let mut queue = VecDeque::from([start]);
            while let Some(p) = queue.pop_front() {
                for &r in self.mesh.neighbors(p) {
                    if piece_of[r] != usize::MAX {
                        continue;
                    }
                    let lp = labels[p].as_ref().expect("piece members are labelled");
                    let cand = match_labels(lp, &self.samples[r]);
                    let consistent = self.mesh.neighbors(r).iter().all(|&t| {
                        if piece_of[t] != k {
                            return true;
                        }
                        let lt = labels[t].as_ref().expect("piece members are labelled");
                        let cost: f64 = (0..q).map(|l| linalg::dist2(&lt[l], &cand[l])).sum();
                        let g = self.samples[t].distance(&self.samples[r]).unwrap_or(f64::INFINITY);
                        cost <= g * g * (1.0 + 1e-12) + 1e-300
                    });
                    if consistent {
                        piece_of[r] = k;
                        labels[r] = Some(cand);
                        members.push(r);
                        queue.push_back(r);
                    }
                }
            }
            members.sort_unstable();
            let branches = (0..q)
                .map(|l| {
                    members
                        .iter()
                        .map(|&p| labels[p].as_ref().expect("labelled")[l].clone())
                        .collect()
                })
                .collect();
            pieces.push(Piece { points: members, branches });
        }
        SheetSelection::assemble(nv, pieces)
    }

    /// Central-difference differential at an interior grid point, one
    /// `n × m` matrix (row-major) per branch.
    pub fn finite_difference_gradient(&self, p: usize) -> Result<QPoint> {
        let steps = self
            .mesh
            .steps()
            .ok_or_else(|| Error::input("finite differences need a regular grid"))?;
        let m = self.mesh.dim();
        let n = self.n();
        let mut nbrs = Vec::with_capacity(m);
        for a in 0..m {
            let fwd = self.mesh.lattice_neighbor(p, a, 1);
            let bwd = self.mesh.lattice_neighbor(p, a, -1);
            match (fwd, bwd) {
                (Some(f), Some(b)) => nbrs.push((f, b)),
                _ => return Err(Error::input("finite differences need an interior point")),
            }
        }
        let lip = self.lipschitz_estimate()?;
        let here = &self.samples[p];
        let gap = here.min_gap();
        let hmax = steps.iter().cloned().fold(0.0, f64::max);
        if !(gap > 2.0 * lip * hmax) {
            return Err(Error::AmbiguousBranch(p));
        }
        // Each atom at p owns the neighbour atoms within half the gap; the
        // owned mass must match and collapse to a single value.
        let radius = if gap.is_finite() { gap / 2.0 } else { f64::INFINITY };
        let follow = |nb: usize, atom: &Atom| -> Result<Vec<f64>> {
            let owned: Vec<&Atom> = self.samples[nb]
                .atoms()
                .iter()
                .filter(|b| linalg::dist(&b.v, &atom.v) < radius)
                .collect();
            let mass: usize = owned.iter().map(|b| b.m).sum();
            if owned.len() != 1 || mass != atom.m {
                return Err(Error::AmbiguousBranch(p));
            }
            Ok(owned[0].v.clone())
        };
        let mut atoms = Vec::with_capacity(here.atoms().len());
        for atom in here.atoms() {
            let mut lambda = vec![0.0; n * m];
            for (a, &(f, b)) in nbrs.iter().enumerate() {
                let vf = follow(f, atom)?;
                let vb = follow(b, atom)?;
                let h = linalg::dist(self.mesh.point(f), self.mesh.point(b));
                for k in 0..n {
                    lambda[k * m + a] = (vf[k] - vb[k]) / h;
                }
            }
            atoms.push(Atom { v: lambda, m: atom.m });
        }
        QPoint::new(n * m, atoms)
    }
}

/// Reorders the expanded atoms of `target` so that slot `l` is the atom
/// paired with `labels[l]` by the lexicographically smallest optimal
/// matching.
fn match_labels(labels: &[Vec<f64>], target: &QPoint) -> Vec<Vec<f64>> {
    let q = labels.len();
    let slots = target.expanded();
    let mut cost = Vec::with_capacity(q * q);
    for a in labels {
        for b in &slots {
            cost.push(linalg::dist2(a, b));
        }
    }
    let (perm, _) = crate::assignment::lex_min(&cost, q);
    perm.iter().map(|&s| slots[s].to_vec()).collect()
}

/// Chain clustering of the support of `t` with link length `4h`.
///
/// Parts are ordered by their lexicographically smallest atom.
pub fn cluster_values(t: &QPoint, h: f64) -> Result<Vec<QPoint>> {
    if !(h > 0.0) {
        return Err(Error::input("cluster scale must be positive"));
    }
    let atoms = t.atoms();
    let k = atoms.len();
    let mut uf = UnionFind::new(k);
    for a in 0..k {
        for b in a + 1..k {
            if linalg::dist(&atoms[a].v, &atoms[b].v) <= 4.0 * h {
                uf.union(a, b);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Atom>)> = Vec::new();
    for (a, atom) in atoms.iter().enumerate() {
        let r = uf.find(a);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(atom.clone()),
            None => groups.push((r, vec![atom.clone()])),
        }
    }
    groups.into_iter().map(|(_, g)| QPoint::new(t.n(), g)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    /// Domain point indices, increasing.
    pub points: Vec<usize>,
    /// `branches[l][k]` is the value of branch `l` at `points[k]`.
    pub branches: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SheetSelection {
    pieces: Vec<Piece>,
    locate: Vec<(usize, usize)>,
}

impl SheetSelection {
    fn assemble(nv: usize, pieces: Vec<Piece>) -> Self {
        let mut locate = vec![(usize::MAX, usize::MAX); nv];
        for (k, piece) in pieces.iter().enumerate() {
            for (local, &p) in piece.points.iter().enumerate() {
                locate[p] = (k, local);
            }
        }
        SheetSelection { pieces, locate }
    }

    /// Checked selection from explicit pieces.
    pub fn from_pieces(u: &SampledQField, pieces: Vec<Piece>) -> Result<Self> {
        let nv = u.mesh().len();
        let mut seen = vec![false; nv];
        for piece in &pieces {
            if piece.branches.len() != u.q() {
                return Err(Error::input("a piece must carry exactly Q branches"));
            }
            for &p in &piece.points {
                if p >= nv || seen[p] {
                    return Err(Error::input("pieces must partition the domain"));
                }
                seen[p] = true;
            }
            if piece.branches.iter().any(|b| b.len() != piece.points.len()) {
                return Err(Error::input("branch length differs from piece size"));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::input("pieces must cover the domain"));
        }
        let sel = Self::assemble(nv, pieces);
        sel.check_reconstruction(u)?;
        Ok(sel)
    }

    /// One piece covering the domain; `branches[l][p]` is branch `l` at
    /// domain point `p`.
    pub fn global(u: &SampledQField, branches: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let points = (0..u.mesh().len()).collect();
        Self::from_pieces(u, vec![Piece { points, branches }])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// `(piece, position within piece)` of a domain point.
    pub fn locate(&self, p: usize) -> (usize, usize) {
        self.locate[p]
    }

    pub fn value(&self, p: usize, l: usize) -> &[f64] {
        let (k, local) = self.locate[p];
        &self.pieces[k].branches[l][local]
    }

    /// Checks that the branch deltas reproduce u at every sample.
    pub fn check_reconstruction(&self, u: &SampledQField) -> Result<()> {
        for p in 0..u.mesh().len() {
            let vals = (0..u.q()).map(|l| self.value(p, l).to_vec()).collect();
            let rebuilt = QPoint::from_values(u.n(), vals)?;
            if &rebuilt != u.sample(p) {
                return Err(Error::Invariant(format!("branches do not reproduce u at sample {p}")));
            }
        }
        Ok(())
    }

    /// Largest edgewise Lipschitz ratio of any branch over edges inside a
    /// piece.
    pub fn branch_lipschitz(&self, u: &SampledQField) -> f64 {
        let mesh = u.mesh();
        let mut best: f64 = 0.0;
        for &(a, b) in mesh.edges() {
            if self.locate[a].0 != self.locate[b].0 {
                continue;
            }
            let len = linalg::dist(mesh.point(a), mesh.point(b));
            for l in 0..u.q() {
                best = best.max(linalg::dist(self.value(a, l), self.value(b, l)) / len);
            }
        }
        best
    }

    /// The same selection with branches permuted by `perm[piece]`.
    pub fn relabeled(&self, perm: &[Vec<usize>]) -> Self {
        let pieces = self
            .pieces
            .iter()
            .zip(perm)
            .map(|(piece, pm)| Piece {
                points: piece.points.clone(),
                branches: pm.iter().map(|&l| piece.branches[l].clone()).collect(),
            })
            .collect();
        Self::assemble(self.locate.len(), pieces)
    }
}

/// One polynomial sheet `g` of a Q-valued field, repeated `mult` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sheet {
    #[serde(default = "one")]
    pub mult: usize,
    pub poly: PolyMap,
}

fn one() -> usize {
    1
}

/// A Q-valued field given by polynomial sheets, `f = Σ mult_l ⟦g_l⟧`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticQField {
    m: usize,
    n: usize,
    sheets: Vec<Sheet>,
}

impl AnalyticQField {
    pub fn new(m: usize, n: usize, sheets: Vec<Sheet>) -> Result<Self> {
        if sheets.is_empty() {
            return Err(Error::input("a field needs at least one sheet"));
        }
        for s in &sheets {
            if s.mult == 0 {
                return Err(Error::input("sheet multiplicities must be positive"));
            }
            s.poly.validate(m, n)?;
        }
        Ok(AnalyticQField { m, n, sheets })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.sheets.iter().map(|s| s.mult).sum()
    }

    pub fn sheets(&self) -> &[Sheet] {
        &self.sheets
    }

    pub fn eval(&self, x: &[f64]) -> QPoint {
        let atoms = self
            .sheets
            .iter()
            .map(|s| Atom { v: s.poly.eval(x), m: s.mult })
            .collect();
        QPoint::new(self.n, atoms).expect("validated sheets give valid Q-points")
    }

    /// Branch values with multiplicity expanded, in sheet order.
    pub fn branch_values(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.q());
        for s in &self.sheets {
            let v = s.poly.eval(x);
            for _ in 0..s.mult {
                out.push(v.clone());
            }
        }
        out
    }

    pub fn sample(&self, mesh: Mesh) -> Result<SampledQField> {
        if mesh.dim() != self.m {
            return Err(Error::input("mesh dimension differs from field domain dimension"));
        }
        let samples = mesh.points().par_iter().map(|p| self.eval(p)).collect();
        SampledQField::new(mesh, samples)
    }

    /// Samples the field and labels branches by sheet on a single piece.
    pub fn sample_with_selection(&self, mesh: Mesh) -> Result<(SampledQField, SheetSelection)> {
        let u = self.sample(mesh)?;
        let per_point: Vec<Vec<Vec<f64>>> =
            u.mesh().points().iter().map(|p| self.branch_values(p)).collect();
        let branches = (0..self.q())
            .map(|l| per_point.iter().map(|vals| vals[l].clone()).collect())
            .collect();
        let sel = SheetSelection::global(&u, branches)?;
        Ok((u, sel))
    }
}

/// Field file contents: a grid plus either explicit samples or sheets.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Sampled { grid: Grid, samples: Vec<QPoint> },
    Analytic { grid: Grid, n: usize, sheets: Vec<Sheet> },
}

impl FieldSpec {
    pub fn build(&self) -> Result<SampledQField> {
        self.build_with_selection().map(|(u, _)| u)
    }

    /// Builds the field; analytic specs also carry their sheet labelling.
    pub fn build_with_selection(&self) -> Result<(SampledQField, Option<SheetSelection>)> {
        match self {
            FieldSpec::Sampled { grid, samples } => {
                Ok((SampledQField::new(Mesh::grid(grid)?, samples.clone())?, None))
            }
            FieldSpec::Analytic { grid, n, sheets } => {
                let f = AnalyticQField::new(grid.lower.len(), *n, sheets.clone())?;
                let (u, sel) = f.sample_with_selection(Mesh::grid(grid)?)?;
                Ok((u, Some(sel)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(count: usize, lo: f64, hi: f64) -> Mesh {
        Mesh::grid(&Grid::new(vec![lo], vec![hi], vec![count])).unwrap()
    }

    fn field(mesh: Mesh, f: impl Fn(f64) -> Vec<f64>) -> SampledQField {
        SampledQField::from_fn(mesh, |p| QPoint::scalars(&f(p[0])).unwrap()).unwrap()
    }

    #[test]
    fn lipschitz_examples() {
        let u = field(line(11, 0.0, 1.0), |_| vec![3.0, 4.0]);
        assert_eq!(u.lipschitz_estimate().unwrap(), 0.0);
        let u = field(line(11, 0.0, 1.0), |x| vec![x, x]);
        assert!((u.lipschitz_estimate().unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let u = field(line(11, 0.0, 1.0), |x| vec![x, -x]);
        assert!((u.lipschitz_estimate().unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn decompose_examples() {
        let u = field(line(11, 0.0, 1.0), |x| vec![x, x + 10.0]);
        match u.decompose(0, 0, 1).unwrap() {
            Decomposition::Split(a, b) => {
                for p in 0..11 {
                    let x = u.mesh().point(p)[0];
                    assert_eq!(a.sample(p), &QPoint::scalars(&[x]).unwrap());
                    assert_eq!(b.sample(p), &QPoint::scalars(&[x + 10.0]).unwrap());
                }
            }
            other => panic!("{other:?}"),
        }
        let u = field(line(11, 0.0, 1.0), |x| vec![x, x + 0.1]);
        assert!(matches!(u.decompose(0, 0, 1).unwrap(), Decomposition::NotSeparated { .. }));
        // ℓ̂ = √3 here, so the gap must beat 3·2·√3 ≈ 10.39.
        let u = field(line(11, 0.0, 1.0), |x| vec![x, x, x + 20.0]);
        match u.decompose(3, 1, 0).unwrap() {
            Decomposition::Split(a, b) => {
                assert_eq!(a.q(), 1);
                assert_eq!(b.q(), 2);
            }
            other => panic!("{other:?}"),
        }
        assert!(u.decompose(0, 0, 0).is_err());
        assert!(u.decompose(0, 0, 5).is_err());
    }

    #[test]
    fn cluster_examples() {
        let t = QPoint::scalars(&[0.0, 3.0, 10.0]).unwrap();
        let parts = cluster_values(&t, 1.0).unwrap();
        assert_eq!(parts, vec![QPoint::scalars(&[0.0, 3.0]).unwrap(), QPoint::scalars(&[10.0]).unwrap()]);
        let t = QPoint::concentrated(vec![1.0, 2.0], 3).unwrap();
        assert_eq!(cluster_values(&t, 0.01).unwrap(), vec![t.clone()]);
        let t = QPoint::scalars(&[0.0, 100.0]).unwrap();
        assert_eq!(cluster_values(&t, 0.1).unwrap().len(), 2);
        assert!(cluster_values(&t, 0.0).is_err());
    }

    #[test]
    fn selection_examples() {
        let u = field(line(11, 0.0, 1.0), |x| vec![x, x + 10.0]);
        let sel = u.select_sheets();
        assert_eq!(sel.pieces().len(), 1);
        for p in 0..11 {
            let x = u.mesh().point(p)[0];
            assert_eq!(sel.value(p, 0), &[x]);
            assert_eq!(sel.value(p, 1), &[x + 10.0]);
        }
        let u = field(Mesh::single(vec![0.5]), |_| vec![2.0, 1.0]);
        assert_eq!(u.select_sheets().pieces().len(), 1);

        let u = field(line(41, -1.0, 1.0), |x| vec![x.abs().sqrt(), -x.abs().sqrt()]);
        let sel = u.select_sheets();
        sel.check_reconstruction(&u).unwrap();
        assert!(sel.branch_lipschitz(&u) <= u.lipschitz_estimate().unwrap() + 1e-9);
    }

    #[test]
    fn gradient_examples() {
        let u = field(line(11, 0.0, 1.0), |x| vec![x, x]);
        let g = u.finite_difference_gradient(5).unwrap();
        assert!(g.distance(&QPoint::concentrated(vec![1.0], 2).unwrap()).unwrap() < 1e-10);
        let u = field(line(11, 0.0, 1.0), |x| vec![x, x + 10.0]);
        let g = u.finite_difference_gradient(5).unwrap();
        assert!(g.distance(&QPoint::concentrated(vec![1.0], 2).unwrap()).unwrap() < 1e-10);
        let u = field(line(21, -1.0, 1.0), |x| vec![x, -x]);
        assert!(matches!(u.finite_difference_gradient(10), Err(Error::AmbiguousBranch(10))));
        assert!(u.finite_difference_gradient(0).is_err());
    }

    #[test]
    fn gradient_of_affine_sheets_in_the_plane() {
        let mesh = Mesh::grid(&Grid::unit(2, 9)).unwrap();
        let u = SampledQField::from_fn(mesh, |p| {
            QPoint::from_values(
                2,
                vec![
                    vec![2.0 * p[0] - p[1], 0.5 * p[1]],
                    vec![5.0 + p[0], 3.0 - 4.0 * p[1]],
                ],
            )
            .unwrap()
        })
        .unwrap();
        let p = u.mesh().locate(&[0.5, 0.5], 1e-12).unwrap();
        let g = u.finite_difference_gradient(p).unwrap();
        let want = QPoint::from_values(4, vec![vec![2.0, -1.0, 0.0, 0.5], vec![1.0, 0.0, 0.0, -4.0]]).unwrap();
        assert!(g.distance(&want).unwrap() < 1e-10);
    }
}
