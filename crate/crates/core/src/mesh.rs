//! Sampled domains: points in R^m, an adjacency graph, and optionally a
//! positively oriented triangulation.
//!
//! Regular grids keep their lattice indices so that finite differences and
//! dyadic cube grouping can find neighbours without searching. Adjacency on
//! a grid is the axis-neighbour graph; the triangulation is the Kuhn
//! (Freudenthal) subdivision of every grid cell into m! simplices.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Axis-aligned box sampled with `counts[i]` points along axis `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Grid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Self {
        Grid { lower, upper, counts }
    }

    pub fn unit(m: usize, count: usize) -> Self {
        Grid { lower: vec![0.0; m], upper: vec![1.0; m], counts: vec![count; m] }
    }

    fn validate(&self) -> Result<()> {
        let m = self.lower.len();
        if m == 0 || self.upper.len() != m || self.counts.len() != m {
            return Err(Error::input("grid lower/upper/counts must share a positive length"));
        }
        for i in 0..m {
            if self.counts[i] == 0 {
                return Err(Error::input("grid counts must be positive"));
            }
            if self.counts[i] > 1 && !(self.upper[i] > self.lower[i]) {
                return Err(Error::input("grid upper bound must exceed lower bound"));
            }
            if !self.lower[i].is_finite() || !self.upper[i].is_finite() {
                return Err(Error::input("grid bounds must be finite"));
            }
        }
        Ok(())
    }

    fn coord(&self, axis: usize, k: usize) -> f64 {
        let c = self.counts[axis];
        if c == 1 {
            return self.lower[axis];
        }
        if k == c - 1 {
            return self.upper[axis];
        }
        let t = k as f64 / (c - 1) as f64;
        self.lower[axis] + t * (self.upper[axis] - self.lower[axis])
    }
}

#[derive(Clone, Debug)]
struct Lattice {
    grid: Grid,
    index: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    points: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    simplices: Vec<Vec<usize>>,
    lattice: Option<Lattice>,
}

fn lattice_indices(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &c in counts {
        let mut next = Vec::with_capacity(out.len() * c);
        for prefix in &out {
            for k in 0..c {
                let mut p = prefix.clone();
                p.push(k);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn parity(p: &[usize]) -> bool {
    let mut odd = false;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                odd = !odd;
            }
        }
    }
    odd
}

impl Mesh {
    /// Full regular grid over a box.
    pub fn grid(grid: &Grid) -> Result<Self> {
        grid.validate()?;
        Self::lattice_mesh(grid.clone(), |_| true)
    }

    /// Regular grid on `[-radius, radius]^m` with `resolution` points per
    /// axis, clipped to the closed ball of the given radius.
    pub fn ball_grid(m: usize, radius: f64, resolution: usize) -> Result<Self> {
        if resolution < 2 || !(radius > 0.0) {
            return Err(Error::input("ball grid needs resolution >= 2 and a positive radius"));
        }
        let grid = Grid::new(vec![-radius; m], vec![radius; m], vec![resolution; m]);
        grid.validate()?;
        let lim = radius * (1.0 + 1e-12);
        Self::lattice_mesh(grid, |p| linalg::norm(p) <= lim)
    }

    fn lattice_mesh(grid: Grid, keep: impl Fn(&[f64]) -> bool) -> Result<Self> {
        let m = grid.lower.len();
        let mut points = Vec::new();
        let mut index = Vec::new();
        let mut lookup = HashMap::new();
        for idx in lattice_indices(&grid.counts) {
            let p: Vec<f64> = (0..m).map(|a| grid.coord(a, idx[a])).collect();
            if keep(&p) {
                lookup.insert(idx.clone(), points.len());
                points.push(p);
                index.push(idx);
            }
        }
        if points.is_empty() {
            return Err(Error::input("grid has no points"));
        }
        let mut edges = Vec::new();
        for (i, idx) in index.iter().enumerate() {
            for a in 0..m {
                let mut nb = idx.clone();
                nb[a] += 1;
                if let Some(&j) = lookup.get(&nb) {
                    edges.push((i, j));
                }
            }
        }
        let mut simplices = Vec::new();
        let perms = permutations(m);
        for idx in &index {
            if (0..m).any(|a| idx[a] + 1 >= grid.counts[a]) {
                continue;
            }
            for perm in &perms {
                let mut cur = idx.clone();
                let mut verts = vec![lookup[&cur]];
                let mut ok = true;
                for &a in perm {
                    cur[a] += 1;
                    match lookup.get(&cur) {
                        Some(&j) => verts.push(j),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                if parity(perm) {
                    verts.swap(m - 1, m);
                }
                simplices.push(verts);
            }
        }
        let mut mesh = Mesh {
            dim: m,
            points,
            edges: Vec::new(),
            neighbors: Vec::new(),
            simplices,
            lattice: Some(Lattice { grid, index, lookup }),
        };
        mesh.set_edges(edges);
        Ok(mesh)
    }

    /// General mesh from explicit parts. Edges are unordered pairs;
    /// simplices (if any) are vertex index lists of length `dim + 1`.
    pub fn from_parts(
        dim: usize,
        points: Vec<Vec<f64>>,
        edges: Vec<(usize, usize)>,
        simplices: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::input("mesh has no points"));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::input("mesh points must all have the mesh dimension"));
        }
        let k = points.len();
        if edges.iter().any(|&(a, b)| a >= k || b >= k || a == b) {
            return Err(Error::input("edge refers to a missing point or is a loop"));
        }
        if simplices.iter().any(|s| s.len() != dim + 1 || s.iter().any(|&i| i >= k)) {
            return Err(Error::input("simplex has the wrong arity or a missing vertex"));
        }
        let mut mesh = Mesh {
            dim,
            points,
            edges: Vec::new(),
            neighbors: Vec::new(),
            simplices,
            lattice: None,
        };
        mesh.set_edges(edges);
        Ok(mesh)
    }

    pub fn single(point: Vec<f64>) -> Self {
        let dim = point.len();
        Mesh {
            dim,
            points: vec![point],
            edges: Vec::new(),
            neighbors: vec![Vec::new()],
            simplices: Vec::new(),
            lattice: None,
        }
    }

    fn set_edges(&mut self, edges: Vec<(usize, usize)>) {
        let mut e: Vec<(usize, usize)> =
            edges.into_iter().map(|(a, b)| if a < b { (a, b) } else { (b, a) }).collect();
        e.sort_unstable();
        e.dedup();
        let mut nb = vec![Vec::new(); self.points.len()];
        for &(a, b) in &e {
            nb[a].push(b);
            nb[b].push(a);
        }
        for l in &mut nb {
            l.sort_unstable();
        }
        self.edges = e;
        self.neighbors = nb;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn simplex_points(&self, s: &[usize]) -> Vec<Vec<f64>> {
        s.iter().map(|&i| self.points[i].clone()).collect()
    }

    pub fn grid_spec(&self) -> Option<&Grid> {
        self.lattice.as_ref().map(|l| &l.grid)
    }

    /// Lattice index of point `i` on a grid mesh.
    pub fn lattice_index(&self, i: usize) -> Option<&[usize]> {
        self.lattice.as_ref().map(|l| l.index[i].as_slice())
    }

    /// Grid spacing along each axis.
    pub fn steps(&self) -> Option<Vec<f64>> {
        let g = &self.lattice.as_ref()?.grid;
        Some(
            (0..self.dim)
                .map(|a| {
                    if g.counts[a] > 1 {
                        (g.upper[a] - g.lower[a]) / (g.counts[a] - 1) as f64
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
    }

    /// The grid point reached from `i` by `offset` steps along `axis`.
    pub fn lattice_neighbor(&self, i: usize, axis: usize, offset: isize) -> Option<usize> {
        let l = self.lattice.as_ref()?;
        let mut idx = l.index[i].clone();
        let k = idx[axis] as isize + offset;
        if k < 0 {
            return None;
        }
        idx[axis] = k as usize;
        l.lookup.get(&idx).copied()
    }

    /// Index of the point within `tol` of `p`, if any.
    pub fn locate(&self, p: &[f64], tol: f64) -> Option<usize> {
        if let Some(l) = &self.lattice {
            let steps = self.steps()?;
            let mut idx = Vec::with_capacity(self.dim);
            for a in 0..self.dim {
                let k = if steps[a] > 0.0 {
                    ((p[a] - l.grid.lower[a]) / steps[a]).round()
                } else {
                    0.0
                };
                if k < 0.0 {
                    return None;
                }
                idx.push(k as usize);
            }
            let i = *l.lookup.get(&idx)?;
            return (linalg::dist(&self.points[i], p) <= tol).then_some(i);
        }
        self.points.iter().position(|q| linalg::dist(q, p) <= tol)
    }

    pub fn is_connected(&self) -> bool {
        let k = self.points.len();
        let mut seen = vec![false; k];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &self.neighbors[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == k
    }

    /// Largest Euclidean distance between two sample points.
    pub fn diameter(&self) -> f64 {
        if let Some(g) = self.grid_spec() {
            if self.points.len() == g.counts.iter().product::<usize>() {
                return linalg::dist(&g.lower, &g.upper);
            }
        }
        let mut d: f64 = 0.0;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                d = d.max(linalg::dist2(p, q));
            }
        }
        d.sqrt()
    }

    /// Shortest and longest edge length.
    pub fn edge_length_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for &(a, b) in &self.edges {
            let l = linalg::dist(&self.points[a], &self.points[b]);
            lo = lo.min(l);
            hi = hi.max(l);
        }
        (lo, hi)
    }
}
