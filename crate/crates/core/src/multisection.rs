//! Q-multisections of a trivialized bundle over a sampled base.
//!
//! The bundle is the product of the base domain with R^n. A multisection
//! assigns finitely many fiber vectors with positive multiplicities to each
//! base point. The checkers quantify over adjacency neighbours at the grid
//! scale, and every report carries the resolution it was run at.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::{Grid, Mesh};
use crate::qfields::SampledQField;
use crate::qpoints::{Atom, QPoint};

#[derive(Clone, Debug)]
pub struct Multisection {
    mesh: Mesh,
    q: usize,
    n: usize,
    entries: Vec<Vec<Atom>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoherenceReport {
    pub sep: f64,
    pub coherent: bool,
    /// Base points at which some neighbour fails the ball count.
    pub violations: Vec<usize>,
    pub min_edge: f64,
    pub max_edge: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeReport {
    pub tau: f64,
    /// Smallest τ that passes on this sampling.
    pub cone_constant: f64,
    pub passed: bool,
    /// Directed edges (x, y) with a pair of atoms outside the τ-cone.
    pub violations: Vec<(usize, usize)>,
    pub pairs_checked: usize,
    pub min_edge: f64,
    pub max_edge: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzFromCone {
    pub lipschitz: f64,
    pub cone_constant: f64,
    pub sep: f64,
    /// √Q · cone_constant.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Serialize, Deserialize)]
struct RawEntry {
    p: Vec<f64>,
    atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
struct RawMultisection {
    #[serde(rename = "Q")]
    q: usize,
    grid: Grid,
    entries: Vec<RawEntry>,
}

fn canonical_atoms(n: usize, atoms: Vec<Atom>) -> Result<Vec<Atom>> {
    if atoms.is_empty() {
        return Ok(atoms);
    }
    let p = QPoint::new(n, atoms)?;
    Ok(p.atoms().to_vec())
}

/// Half of the smallest gap between distinct atoms, `∞` for one atom.
fn half_gap(atoms: &[Atom]) -> f64 {
    let mut g = f64::INFINITY;
    for (i, a) in atoms.iter().enumerate() {
        for b in &atoms[i + 1..] {
            g = g.min(linalg::dist(&a.v, &b.v));
        }
    }
    g / 2.0
}

impl Multisection {
    /// Multisection with the given per-point atoms; fiber mass is not
    /// required to be Q here (see [`to_qfield`](Self::to_qfield)).
    pub fn new(mesh: Mesh, q: usize, n: usize, entries: Vec<Vec<Atom>>) -> Result<Self> {
        if entries.len() != mesh.len() {
            return Err(Error::input("one entry list per base point is required"));
        }
        if q == 0 || n == 0 {
            return Err(Error::input("Q and n must be positive"));
        }
        let entries = entries
            .into_iter()
            .map(|a| canonical_atoms(n, a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Multisection { mesh, q, n, entries })
    }

    /// M_u(p, v) = Θ_{u(p)}(v).
    pub fn from_qfield(u: &SampledQField) -> Self {
        Multisection {
            mesh: u.mesh().clone(),
            q: u.q(),
            n: u.n(),
            entries: u.samples().iter().map(|s| s.atoms().to_vec()).collect(),
        }
    }

    /// u_M(p) = Σ_v M(p, v) ⟦v⟧.
    pub fn to_qfield(&self) -> Result<SampledQField> {
        let samples = self
            .entries
            .iter()
            .enumerate()
            .map(|(p, atoms)| {
                let mass: usize = atoms.iter().map(|a| a.m).sum();
                if mass != self.q {
                    return Err(Error::Invariant(format!(
                        "fiber mass {mass} at base point {p}, expected {}",
                        self.q
                    )));
                }
                QPoint::new(self.n, atoms.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        SampledQField::new(self.mesh.clone(), samples)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self, p: usize) -> &[Atom] {
        &self.entries[p]
    }

    /// Balls of radius `sep` around the atoms at each base point must carry
    /// the same multiplicities at every adjacent base point.
    pub fn check_coherence(&self, sep: f64) -> Result<CoherenceReport> {
        if !(sep > 0.0) {
            return Err(Error::input("separation radius must be positive"));
        }
        for (p, atoms) in self.entries.iter().enumerate() {
            if atoms.len() > 1 && 2.0 * sep > 2.0 * half_gap(atoms) {
                return Err(Error::input(format!(
                    "balls of radius {sep} overlap at base point {p}"
                )));
            }
        }
        let violations: Vec<usize> = (0..self.mesh.len())
            .into_par_iter()
            .filter(|&p| {
                let atoms = &self.entries[p];
                self.mesh.neighbors(p).iter().any(|&q| {
                    let there = &self.entries[q];
                    let total: usize = there.iter().map(|a| a.m).sum();
                    let mut inside = 0;
                    for a in atoms {
                        let mass: usize = there
                            .iter()
                            .filter(|b| linalg::dist(&a.v, &b.v) < sep)
                            .map(|b| b.m)
                            .sum();
                        if mass != a.m {
                            return true;
                        }
                        inside += mass;
                    }
                    inside != total
                })
            })
            .collect();
        let (min_edge, max_edge) = self.mesh.edge_length_range();
        Ok(CoherenceReport { sep, coherent: violations.is_empty(), violations, min_edge, max_edge })
    }

    /// Checks |w − v| ≤ τ|y − x| for atoms v at x and w at an adjacent y
    /// with |w − v| below half the smallest atom gap at x.
    pub fn check_cone(&self, tau: f64) -> ConeReport {
        let per_point: Vec<(f64, usize, Vec<(usize, usize)>)> = (0..self.mesh.len())
            .into_par_iter()
            .map(|x| {
                let atoms = &self.entries[x];
                let scale = half_gap(atoms);
                let mut worst: f64 = 0.0;
                let mut pairs = 0;
                let mut bad = Vec::new();
                for &y in self.mesh.neighbors(x) {
                    let len = linalg::dist(self.mesh.point(x), self.mesh.point(y));
                    let mut edge_bad = false;
                    for v in atoms {
                        for w in &self.entries[y] {
                            let d = linalg::dist(&v.v, &w.v);
                            if d < scale {
                                pairs += 1;
                                let r = d / len;
                                worst = worst.max(r);
                                if r > tau * (1.0 + 1e-9) + 1e-15 {
                                    edge_bad = true;
                                }
                            }
                        }
                    }
                    if edge_bad {
                        bad.push((x, y));
                    }
                }
                (worst, pairs, bad)
            })
            .collect();
        let mut cone_constant: f64 = 0.0;
        let mut pairs_checked = 0;
        let mut violations = Vec::new();
        for (w, c, b) in per_point {
            cone_constant = cone_constant.max(w);
            pairs_checked += c;
            violations.extend(b);
        }
        let (min_edge, max_edge) = self.mesh.edge_length_range();
        ConeReport {
            tau,
            cone_constant,
            passed: violations.is_empty(),
            violations,
            pairs_checked,
            min_edge,
            max_edge,
        }
    }

    /// Separation radius used by [`lipschitz_from_cone`](Self::lipschitz_from_cone):
    /// just under half the smallest atom gap over all base points, `∞` when
    /// every fiber has a single atom.
    pub fn auto_sep(&self) -> f64 {
        let g = self.entries.iter().map(|a| half_gap(a)).fold(f64::INFINITY, f64::min);
        if g.is_finite() {
            g * (1.0 - 1e-9)
        } else {
            g
        }
    }

    /// ℓ̂ of u_M together with the bound √Q·τ̂ from the cone constant.
    pub fn lipschitz_from_cone(&self) -> Result<LipschitzFromCone> {
        self.lipschitz_from_cone_with(self.auto_sep())
    }

    pub fn lipschitz_from_cone_with(&self, sep: f64) -> Result<LipschitzFromCone> {
        let coherence = self.check_coherence(sep)?;
        if !coherence.coherent {
            return Err(Error::Invariant(format!(
                "multisection is not coherent at base points {:?}",
                coherence.violations
            )));
        }
        let lipschitz = self.to_qfield()?.lipschitz_estimate()?;
        let cone_constant = self.check_cone(0.0).cone_constant;
        let bound = (self.q as f64).sqrt() * cone_constant;
        Ok(LipschitzFromCone { lipschitz, cone_constant, sep, bound, holds: lipschitz <= bound + 1e-9 })
    }

    pub fn to_json(&self) -> Result<String> {
        let grid = self
            .mesh
            .grid_spec()
            .ok_or_else(|| Error::input("only grid-based multisections serialize"))?
            .clone();
        let raw = RawMultisection {
            q: self.q,
            grid,
            entries: self
                .entries
                .iter()
                .enumerate()
                .map(|(p, a)| RawEntry { p: self.mesh.point(p).to_vec(), atoms: a.clone() })
                .collect(),
        };
        Ok(serde_json::to_string(&raw)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawMultisection = serde_json::from_str(s)?;
        let mesh = Mesh::grid(&raw.grid)?;
        let n = raw
            .entries
            .iter()
            .flat_map(|e| e.atoms.first())
            .map(|a| a.v.len())
            .next()
            .ok_or_else(|| Error::input("multisection has no atoms"))?;
        let mut entries = vec![Vec::new(); mesh.len()];
        let mut seen = vec![false; mesh.len()];
        for e in raw.entries {
            let i = mesh
                .locate(&e.p, 1e-9)
                .ok_or_else(|| Error::input(format!("entry point {:?} is not a grid point", e.p)))?;
            if seen[i] {
                return Err(Error::input(format!("duplicate entry for {:?}", e.p)));
            }
            seen[i] = true;
            entries[i] = e.atoms;
        }
        Multisection::new(mesh, raw.q, n, entries)
    }
}
