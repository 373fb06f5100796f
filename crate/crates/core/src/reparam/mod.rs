//! Normal reparametrization of a Q-valued graph over a curved graph surface.
//!
//! Σ is the graph of a polynomial φ: B_s → R^n inside R^{m+n}, parametrized
//! by Φ(x) = (x, φ(x)). A Q-valued f on B_r, given by polynomial sheets, is
//! rewritten as a Q-valued normal field N over Σ: the normal fiber at Φ(x)
//! meets the graph of f in Q points counted with multiplicity, and N(Φ(x))
//! collects their displacements from Φ(x).
//!
//! The hypothesis gates use the fixed geometric constant
//! [`geometric_constant`]; the conclusions are checked with explicit factors
//! where those are known and reported as empirical constants otherwise.

mod estimates;
mod graph;
mod scenario;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mesh::Mesh;
use crate::multisection::Multisection;
use crate::poly::PolyMap;
use crate::qfields::{AnalyticQField, SampledQField};
use crate::qpoints::{Atom, QPoint, UnionFind};

pub use estimates::{compare_refinement, verify_estimates, EstimatesReport, RefinementReport, Stability, VertexEstimate};
pub use graph::{verify_graph_identity, GraphIdentityReport, ProbeCount};
pub use scenario::{MeshSpec, ReparamReport, ReparamScenario};

/// Newton residual accepted for a fiber root.
pub const NEWTON_TOL: f64 = 1e-10;
/// Iteration cap for the fiber and projection solvers.
pub const MAX_NEWTON: usize = 50;
/// Fiber roots closer than this are one atom.
pub const MERGE_TOL: f64 = 1e-8;

/// C = 16 (m + n)², the constant in the absorption gates.
pub fn geometric_constant(m: usize, n: usize) -> f64 {
    16.0 * ((m + n) as f64).powi(2)
}

/// Points per axis of the dense sampling used for norms: four times the
/// mesh density.
pub fn dense_resolution(resolution: usize) -> usize {
    4 * (resolution - 1) + 1
}

#[derive(Clone, Debug, Serialize)]
pub struct SurfaceNorms {
    /// sup over B_s of |D^k φ| (Frobenius), k = 0..=3.
    pub sup: [f64; 4],
    /// Points per axis of the sampling grid.
    pub density: usize,
    pub samples: usize,
    /// Worst relative disagreement of the analytic derivatives with central
    /// differences at the spot-check points.
    pub fd_error: f64,
}

impl SurfaceNorms {
    /// ‖φ‖_{C^k} = Σ_{j ≤ k} sup |D^j φ|.
    pub fn c(&self, k: usize) -> f64 {
        self.sup[..=k].iter().sum()
    }
}

/// Σ = Gr(φ) over B_s.
#[derive(Clone, Debug)]
pub struct GraphSurface {
    m: usize,
    n: usize,
    s: f64,
    phi: PolyMap,
    resolution: usize,
    norms: SurfaceNorms,
    cbar: Option<f64>,
}

impl GraphSurface {
    /// Builds the surface; `resolution` is the mesh density per axis over
    /// B_s, and norms are sampled at [`dense_resolution`].
    pub fn new(m: usize, n: usize, s: f64, phi: PolyMap, resolution: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::input("m and n must be positive"));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::input("base radius s must be positive"));
        }
        if resolution < 2 {
            return Err(Error::input("mesh resolution must be at least 2"));
        }
        phi.validate(m, n)?;
        let density = dense_resolution(resolution);
        let dense = Mesh::ball_grid(m, s, density)?;
        let sup = dense
            .points()
            .par_iter()
            .map(|x| phi.derivative_norms(x))
            .reduce(|| [0.0; 4], |a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2]), a[3].max(b[3])]);
        let mut spots = vec![vec![0.0; m]];
        for i in 0..m {
            for sign in [-0.5, 0.5] {
                let mut x = vec![0.0; m];
                x[i] = sign * s;
                spots.push(x);
            }
        }
        let fd_error = spots
            .iter()
            .map(|x| phi.finite_difference_check(x, 1e-5))
            .fold(0.0, f64::max);
        if fd_error > 1e-6 {
            return Err(Error::Invariant(format!(
                "derivatives of φ disagree with finite differences by {fd_error:e}"
            )));
        }
        let norms = SurfaceNorms { sup, density, samples: dense.len(), fd_error };
        Ok(GraphSurface { m, n, s, phi, resolution, norms, cbar: None })
    }

    /// Declares c̄ and checks ‖φ‖_{C³} ≤ c̄.
    pub fn with_bound(mut self, cbar: f64) -> Result<Self> {
        let c3 = self.norms.c(3);
        if c3 > cbar {
            return Err(Error::input(format!("‖φ‖_C3 = {c3} exceeds the declared bound {cbar}")));
        }
        self.cbar = Some(cbar);
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn phi(&self) -> &PolyMap {
        &self.phi
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn norms(&self) -> &SurfaceNorms {
        &self.norms
    }

    pub fn bound(&self) -> Option<f64> {
        self.cbar
    }

    /// True when every coefficient of φ vanishes.
    pub fn is_flat(&self) -> bool {
        self.phi.components.iter().all(|p| p.terms.iter().all(|t| t.coef == 0.0))
    }

    /// Φ(x) = (x, φ(x)).
    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        [x, &self.phi.eval(x)[..]].concat()
    }

    /// ∂_iΦ(x) = (e_i, ∂_iφ(x)).
    pub fn tangents(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let jac = self.phi.jacobian(x);
        (0..self.m)
            .map(|i| {
                let mut t = vec![0.0; self.m + self.n];
                t[i] = 1.0;
                for k in 0..self.n {
                    t[self.m + k] = jac[(k, i)];
                }
                t
            })
            .collect()
    }

    /// ν_1..ν_n: e_{m+1}..e_{m+n} projected onto the normal space at Φ(x)
    /// and orthonormalized in order.
    pub fn normal_frame(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let slope = self.phi.jacobian(x).norm();
        if slope > 1.0 {
            return Err(Error::Smallness(format!("|Dφ| = {slope} exceeds 1 at {x:?}")));
        }
        let d = self.m + self.n;
        let mut tangent: Vec<Vec<f64>> = Vec::with_capacity(self.m);
        for t in self.tangents(x) {
            let u = orthogonalize(t, &tangent);
            let len = linalg::norm(&u);
            tangent.push(linalg::scale(&u, 1.0 / len));
        }
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(self.n);
        for k in 0..self.n {
            let mut e = vec![0.0; d];
            e[self.m + k] = 1.0;
            let projected = orthogonalize(e, &tangent);
            let u = orthogonalize(projected, &frame);
            // A second pass restores orthogonality lost to cancellation.
            let u = orthogonalize(orthogonalize(u, &tangent), &frame);
            let len = linalg::norm(&u);
            if len < 1e-6 {
                return Err(Error::Smallness(format!("normal projection is rank deficient at {x:?}")));
            }
            frame.push(linalg::scale(&u, 1.0 / len));
        }
        Ok(frame)
    }
}

fn orthogonalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    for b in basis {
        let c = linalg::dot(&v, b);
        for (vi, bi) in v.iter_mut().zip(b) {
            *vi -= c * bi;
        }
    }
    v
}

/// The frame as a (m+n) × n matrix.
fn frame_matrix(frame: &[Vec<f64>]) -> DMatrix<f64> {
    let d = frame[0].len();
    DMatrix::from_fn(d, frame.len(), |i, j| frame[j][i])
}

#[derive(Clone, Debug, Serialize)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

impl Condition {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Condition { name: name.to_string(), lhs, rhs, passed: lhs <= rhs }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallnessReport {
    pub c0: f64,
    pub s: f64,
    pub r: f64,
    pub geometric_constant: f64,
    /// ‖φ‖_{C⁰}, ‖φ‖_{C²} from the dense sampling.
    pub phi_c0: f64,
    pub phi_c2: f64,
    pub norm_density: usize,
    /// ℓ̂ and sup |f| sampled over B_r.
    pub lip_f: f64,
    pub sup_f: f64,
    pub field_density: usize,
    pub conditions: Vec<Condition>,
    pub passed: bool,
}

impl SmallnessReport {
    pub fn failures(&self) -> Vec<&Condition> {
        self.conditions.iter().filter(|c| !c.passed).collect()
    }
}

/// f sampled over B_r at the mesh spacing.
#[derive(Clone, Debug)]
pub struct FieldSamples {
    pub field: SampledQField,
    pub resolution: usize,
    pub lipschitz: f64,
    pub sup: f64,
}

/// One root of a fiber problem.
#[derive(Clone, Debug, Serialize)]
pub struct FiberAtom {
    /// Fiber coordinates v with ξ = Φ(x) + Σ vⁱ ν_i(x).
    pub v: Vec<f64>,
    pub xi: Vec<f64>,
    pub mult: usize,
    pub residual: f64,
    pub iterations: usize,
}

/// The points of Π⁻¹(Φ(x)) on the graph of f.
#[derive(Clone, Debug, Serialize)]
pub struct Fiber {
    pub x: Vec<f64>,
    pub base: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
    pub atoms: Vec<FiberAtom>,
    /// Σ over atoms ξ of Θ_{f(x')}(v') with (x', v') the standard
    /// coordinates of ξ, evaluated from the sheets.
    pub mass: usize,
}

impl Fiber {
    /// N(Φ(x)) = Σ M(ξ)⟦ξ − Φ(x)⟧ in R^{m+n}.
    pub fn normal(&self) -> QPoint {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom { v: linalg::sub(&a.xi, &self.base), m: a.mult })
            .collect();
        QPoint::new(self.base.len(), atoms).expect("fiber atoms are finite")
    }

    /// F(Φ(x)) = Σ M(ξ)⟦ξ⟧.
    pub fn points(&self) -> QPoint {
        let atoms = self.atoms.iter().map(|a| Atom { v: a.xi.clone(), m: a.mult }).collect();
        QPoint::new(self.base.len(), atoms).expect("fiber atoms are finite")
    }

    /// The atoms in fiber coordinates.
    pub fn coords(&self) -> QPoint {
        let n = self.frame.len();
        let atoms = self.atoms.iter().map(|a| Atom { v: a.v.clone(), m: a.mult }).collect();
        QPoint::new(n, atoms).expect("fiber atoms are finite")
    }

    pub fn max_residual(&self) -> f64 {
        self.atoms.iter().map(|a| a.residual).fold(0.0, f64::max)
    }

    /// Largest |⟨ξ − Φ(x), ∂_iΦ(x)⟩|.
    pub fn normality(&self, surface: &GraphSurface) -> f64 {
        let tangents = surface.tangents(&self.x);
        let mut worst: f64 = 0.0;
        for a in &self.atoms {
            let disp = linalg::sub(&a.xi, &self.base);
            for t in &tangents {
                worst = worst.max(linalg::dot(&disp, t).abs());
            }
        }
        worst
    }
}

/// The tubular neighbourhood of thickness c0 around Σ, with f defined on B_r.
#[derive(Clone, Debug)]
pub struct TubularNeighborhood {
    surface: GraphSurface,
    c0: f64,
    r: f64,
}

impl TubularNeighborhood {
    pub fn new(surface: GraphSurface, c0: f64, r: f64) -> Result<Self> {
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::input("thickness c0 must be positive"));
        }
        if !(r > surface.s && r.is_finite()) {
            return Err(Error::input("field radius r must exceed the base radius s"));
        }
        Ok(TubularNeighborhood { surface, c0, r })
    }

    pub fn surface(&self) -> &GraphSurface {
        &self.surface
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    fn check_field(&self, f: &AnalyticQField) -> Result<()> {
        if f.m() != self.surface.m || f.n() != self.surface.n {
            return Err(Error::input(format!(
                "field maps R^{} to R^{}, surface is a graph over R^{} in R^{}",
                f.m(),
                f.n(),
                self.surface.m,
                self.surface.m + self.surface.n
            )));
        }
        Ok(())
    }

    /// Samples f on a ball grid over B_r with spacing at most the mesh
    /// spacing over B_s.
    pub fn sample_field(&self, f: &AnalyticQField) -> Result<FieldSamples> {
        self.check_field(f)?;
        let cells = self.surface.resolution - 1;
        let resolution = ((self.r / self.surface.s) * cells as f64).ceil() as usize + 1;
        let field = f.sample(Mesh::ball_grid(self.surface.m, self.r, resolution)?)?;
        let lipschitz = field.lipschitz_estimate()?;
        let sup = field.samples().iter().map(QPoint::norm).fold(0.0, f64::max);
        Ok(FieldSamples { field, resolution, lipschitz, sup })
    }

    /// Evaluates the five hypothesis gates.
    pub fn check_smallness(&self, f: &AnalyticQField) -> Result<SmallnessReport> {
        let samples = self.sample_field(f)?;
        let (m, n) = (self.surface.m, self.surface.n);
        let c = geometric_constant(m, n);
        let (s, r, c0) = (self.surface.s, self.r, self.c0);
        let norms = &self.surface.norms;
        let conditions = vec![
            Condition::new("c2_plus_lip", norms.c(2) + samples.lipschitz, c0),
            Condition::new("c0_plus_sup", norms.c(0) + samples.sup, c0 * s),
            Condition::new("radius_margin", c0, 0.5 * (r - s)),
            Condition::new("thickness_absorption", c0 * c0, (1.0 - (s / r).powi(2)) / c),
            Condition::new("cone_absorption", c * c0 * c0, 0.5),
        ];
        let passed = conditions.iter().all(|c| c.passed);
        Ok(SmallnessReport {
            c0,
            s,
            r,
            geometric_constant: c,
            phi_c0: norms.c(0),
            phi_c2: norms.c(2),
            norm_density: norms.density,
            lip_f: samples.lipschitz,
            sup_f: samples.sup,
            field_density: samples.resolution,
            conditions,
            passed,
        })
    }

    /// Solves for the Q points where the normal fiber at Φ(x) meets the
    /// graph of f.
    ///
    /// For every sheet g this runs damped Newton on
    /// R(v) = φ(x) + V v − g(x + H v), where [H; V] is the frame split into
    /// its R^m and R^n rows, starting from v = g(x) − φ(x).
    pub fn solve_fiber(&self, f: &AnalyticQField, x: &[f64]) -> Result<Fiber> {
        self.check_field(f)?;
        let (m, n) = (self.surface.m, self.surface.n);
        if x.len() != m {
            return Err(Error::input("base point has the wrong dimension"));
        }
        let frame = self.surface.normal_frame(x)?;
        let e = frame_matrix(&frame);
        let h = e.rows(0, m).into_owned();
        let vmat = e.rows(m, n).into_owned();
        let phi_x = self.surface.phi.eval(x);
        let base = self.surface.embed(x);

        let mut roots: Vec<FiberAtom> = Vec::with_capacity(f.sheets().len());
        for sheet in f.sheets() {
            let g = &sheet.poly;
            let horiz = |v: &[f64]| -> Vec<f64> {
                let hv = &h * nalgebra::DVector::from_column_slice(v);
                x.iter().zip(hv.iter()).map(|(a, b)| a + b).collect()
            };
            let residual = |v: &[f64]| -> Vec<f64> {
                let vv = &vmat * nalgebra::DVector::from_column_slice(v);
                let gx = g.eval(&horiz(v));
                (0..n).map(|k| phi_x[k] + vv[k] - gx[k]).collect()
            };
            let mut v = linalg::sub(&g.eval(x), &phi_x);
            let mut res = linalg::norm(&residual(&v));
            let mut iterations = 0;
            while res > 1e-15 && iterations < MAX_NEWTON {
                iterations += 1;
                let jac = &vmat - g.jacobian(&horiz(&v)) * &h;
                let r = residual(&v);
                let step = linalg::solve(jac, &linalg::scale(&r, -1.0))
                    .ok_or_else(|| Error::Solver(format!("singular fiber Jacobian at {x:?}")))?;
                let mut t = 1.0;
                let (next, next_res) = loop {
                    let cand: Vec<f64> = v.iter().zip(&step).map(|(a, b)| a + t * b).collect();
                    let cr = linalg::norm(&residual(&cand));
                    if cr < res || t < 1e-6 {
                        break (cand, cr);
                    }
                    t *= 0.5;
                };
                if next_res >= res {
                    break;
                }
                v = next;
                res = next_res;
            }
            if !(res <= NEWTON_TOL) {
                return Err(Error::Solver(format!(
                    "fiber root did not converge at {x:?}: residual {res:e} after {iterations} iterations"
                )));
            }
            let len = linalg::norm(&v);
            if len >= self.c0 {
                return Err(Error::Thickness(format!(
                    "fiber root at distance {len} from Σ, thickness is {}",
                    self.c0
                )));
            }
            let hx = horiz(&v);
            if linalg::norm(&hx) >= self.r {
                return Err(Error::Thickness(format!("fiber root lies over {hx:?}, outside B_r")));
            }
            let ev = &e * nalgebra::DVector::from_column_slice(&v);
            let xi: Vec<f64> = base.iter().zip(ev.iter()).map(|(a, b)| a + b).collect();
            roots.push(FiberAtom { v, xi, mult: sheet.mult, residual: res, iterations });
        }

        let k = roots.len();
        let mut uf = UnionFind::new(k);
        for i in 0..k {
            for j in i + 1..k {
                if linalg::dist(&roots[i].v, &roots[j].v) < MERGE_TOL {
                    uf.union(i, j);
                }
            }
        }
        let mut atoms: Vec<FiberAtom> = Vec::new();
        let mut slot = vec![usize::MAX; k];
        for i in 0..k {
            let root = uf.find(i);
            if slot[root] == usize::MAX {
                slot[root] = atoms.len();
                atoms.push(roots[i].clone());
            } else {
                let a = &mut atoms[slot[root]];
                a.mult += roots[i].mult;
                a.residual = a.residual.max(roots[i].residual);
                a.iterations = a.iterations.max(roots[i].iterations);
            }
        }
        let mass = atoms
            .iter()
            .map(|a| {
                let (xp, vp) = a.xi.split_at(m);
                f.sheets()
                    .iter()
                    .filter(|s| linalg::dist(&s.poly.eval(xp), vp) < 2.0 * MERGE_TOL)
                    .map(|s| s.mult)
                    .sum::<usize>()
            })
            .sum();
        Ok(Fiber { x: x.to_vec(), base, frame, atoms, mass })
    }

    /// Nearest-point decomposition P = Φ(z) + Σ wⁱ ν_i(z).
    ///
    /// Newton on the frame equations with the frame derivative dropped from
    /// the Jacobian; the neglected term is of size |w|·|D²φ|.
    pub fn project(&self, point: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (m, n) = (self.surface.m, self.surface.n);
        if point.len() != m + n {
            return Err(Error::input("point has the wrong dimension"));
        }
        let mut z = point[..m].to_vec();
        let mut w = vec![0.0; n];
        let scale = 1.0 + linalg::norm(point);
        let mut res = f64::INFINITY;
        for _ in 0..MAX_NEWTON {
            let frame = self.surface.normal_frame(&z)?;
            let e = frame_matrix(&frame);
            let ew = &e * nalgebra::DVector::from_column_slice(&w);
            let phi = self.surface.embed(&z);
            let f: Vec<f64> = (0..m + n).map(|i| phi[i] + ew[i] - point[i]).collect();
            let r = linalg::norm(&f);
            if r <= 1e-15 * scale || r >= res {
                res = res.min(r);
                break;
            }
            res = r;
            let tangents = self.surface.tangents(&z);
            let jac = DMatrix::from_fn(m + n, m + n, |i, j| if j < m { tangents[j][i] } else { frame[j - m][i] });
            let step = linalg::solve(jac, &f).ok_or_else(|| Error::Solver("singular projection Jacobian".into()))?;
            for i in 0..m {
                z[i] -= step[i];
            }
            for k in 0..n {
                w[k] -= step[m + k];
            }
        }
        if !(res <= 1e-12 * scale) {
            return Err(Error::Solver(format!("nearest-point projection of {point:?} stalled at {res:e}")));
        }
        Ok((z, w))
    }
}

/// N over a ball grid on B_s.
#[derive(Clone, Debug)]
pub struct NormalField {
    mesh: Mesh,
    q: usize,
    fibers: Vec<Fiber>,
}

/// Solves the fiber problem at every vertex of the ball grid over B_s at
/// the surface's resolution. Refuses when a smallness gate fails.
pub fn build_normal_field(tube: &TubularNeighborhood, f: &AnalyticQField) -> Result<NormalField> {
    let report = tube.check_smallness(f)?;
    if !report.passed {
        let failed: Vec<String> = report
            .failures()
            .iter()
            .map(|c| format!("{} ({} > {})", c.name, c.lhs, c.rhs))
            .collect();
        return Err(Error::Smallness(failed.join(", ")));
    }
    let surface = tube.surface();
    let mesh = Mesh::ball_grid(surface.m, surface.s, surface.resolution)?;
    let q = f.q();
    let fibers = mesh
        .points()
        .par_iter()
        .enumerate()
        .map(|(index, x)| {
            let at = |source: Error| Error::AtVertex { index, x: x.clone(), source: Box::new(source) };
            let fiber = tube.solve_fiber(f, x).map_err(at)?;
            if fiber.mass != q {
                return Err(at(Error::Invariant(format!("fiber mass {} instead of {q}", fiber.mass))));
            }
            Ok(fiber)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormalField { mesh, q, fibers })
}

impl NormalField {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn fibers(&self) -> &[Fiber] {
        &self.fibers
    }

    pub fn fiber(&self, i: usize) -> &Fiber {
        &self.fibers[i]
    }

    /// N(Φ(x_i)).
    pub fn value(&self, i: usize) -> QPoint {
        self.fibers[i].normal()
    }

    /// ‖N‖_{C⁰} over the mesh.
    pub fn sup_norm(&self) -> f64 {
        self.fibers.iter().map(|f| f.normal().norm()).fold(0.0, f64::max)
    }

    /// The multisection of fiber coordinates over the base mesh.
    pub fn coordinate_multisection(&self) -> Result<Multisection> {
        let n = self.fibers[0].frame.len();
        let entries = self.fibers.iter().map(|f| f.coords().atoms().to_vec()).collect();
        Multisection::new(self.mesh.clone(), self.q, n, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::qfields::Sheet;

    fn affine(m: usize, c: f64, a: &[f64]) -> PolyMap {
        assert_eq!(a.len(), m);
        PolyMap::new(vec![Polynomial::affine(c, a)])
    }

    fn tube(phi: PolyMap, m: usize, n: usize, c0: f64, res: usize) -> TubularNeighborhood {
        TubularNeighborhood::new(GraphSurface::new(m, n, 0.5, phi, res).unwrap(), c0, 1.0).unwrap()
    }

    fn sheets(polys: Vec<PolyMap>) -> Vec<Sheet> {
        polys.into_iter().map(|poly| Sheet { mult: 1, poly }).collect()
    }

    #[test]
    fn frame_of_a_tilted_line() {
        for a in [0.0, 0.003, -0.2, 0.7] {
            let t = tube(affine(1, 0.0, &[a]), 1, 1, 0.01, 5);
            let nu = t.surface().normal_frame(&[0.3]).unwrap();
            let k = (1.0 + a * a).sqrt();
            assert!((nu[0][0] + a / k).abs() < 1e-15 && (nu[0][1] - 1.0 / k).abs() < 1e-15);
        }
        let t = tube(affine(1, 0.0, &[1.5]), 1, 1, 0.01, 5);
        assert!(matches!(t.surface().normal_frame(&[0.0]), Err(Error::Smallness(_))));
    }

    #[test]
    fn frame_is_orthonormal() {
        let phi = PolyMap::new(vec![
            Polynomial::affine(0.1, &[0.2, -0.1]).with(0.3, &[1, 1]),
            Polynomial::affine(0.0, &[0.05, 0.25]).with(-0.2, &[2, 0]),
        ]);
        let s = GraphSurface::new(2, 2, 0.5, phi, 5).unwrap();
        let x = [0.2, -0.3];
        let mut all = s.tangents(&x);
        let nu = s.normal_frame(&x).unwrap();
        for v in &nu {
            for t in &all {
                assert!(linalg::dot(v, t).abs() < 1e-12);
            }
        }
        for (i, a) in nu.iter().enumerate() {
            for (j, b) in nu.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((linalg::dot(a, b) - want).abs() < 1e-12);
            }
        }
        all.extend(nu);
        let flat = GraphSurface::new(2, 2, 0.5, PolyMap::zero(2), 5).unwrap();
        assert_eq!(flat.normal_frame(&x).unwrap(), vec![vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]]);
    }

    #[test]
    fn smallness_gates() {
        let zero = AnalyticQField::new(1, 1, vec![Sheet { mult: 2, poly: PolyMap::zero(1) }]).unwrap();
        let t = tube(PolyMap::zero(1), 1, 1, 0.01, 9);
        assert!(t.check_smallness(&zero).unwrap().passed);
        let t = tube(affine(1, 0.0, &[1.0]), 1, 1, 0.01, 9);
        let r = t.check_smallness(&zero).unwrap();
        assert_eq!(r.failures()[0].name, "c2_plus_lip");
        let t = tube(PolyMap::zero(1), 1, 1, 0.3, 9);
        let r = t.check_smallness(&zero).unwrap();
        assert!(r.failures().iter().any(|c| c.name == "radius_margin"));
        assert!(matches!(build_normal_field(&t, &zero), Err(Error::Smallness(_))));
    }

    #[test]
    fn flat_fibers_are_vertical() {
        let f = AnalyticQField::new(
            1,
            1,
            sheets(vec![affine(1, 0.002, &[0.0]), affine(1, -0.002, &[0.0])]),
        )
        .unwrap();
        let t = tube(PolyMap::zero(1), 1, 1, 0.01, 9);
        let fib = t.solve_fiber(&f, &[0.25]).unwrap();
        assert_eq!(fib.mass, 2);
        assert_eq!(
            fib.normal(),
            QPoint::from_values(2, vec![vec![0.0, 0.002], vec![0.0, -0.002]]).unwrap()
        );
    }

    #[test]
    fn tilted_line_meets_a_constant_sheet() {
        // The normal line (x − at/k, ax + t/k) meets y = b at t = (b − ax)k.
        let (a, b) = (0.004, 0.003);
        let f = AnalyticQField::new(1, 1, sheets(vec![affine(1, b, &[0.0])])).unwrap();
        let t = tube(affine(1, 0.0, &[a]), 1, 1, 0.01, 9);
        for x in [-0.5, -0.1, 0.0, 0.3, 0.5] {
            let fib = t.solve_fiber(&f, &[x]).unwrap();
            let k = (1.0f64 + a * a).sqrt();
            let tt = (b - a * x) * k;
            assert!((fib.atoms[0].v[0] - tt).abs() < 1e-10);
            assert!(fib.max_residual() < 1e-10);
            assert!(fib.normality(t.surface()) < 1e-12);
        }
    }

    #[test]
    fn coinciding_sheets_merge() {
        let g = affine(1, 0.001, &[0.001]);
        let f = AnalyticQField::new(1, 1, vec![Sheet { mult: 1, poly: g.clone() }, Sheet { mult: 2, poly: g }]).unwrap();
        let t = tube(affine(1, 0.0, &[0.002]), 1, 1, 0.01, 9);
        let fib = t.solve_fiber(&f, &[0.1]).unwrap();
        assert_eq!(fib.atoms.len(), 1);
        assert_eq!(fib.atoms[0].mult, 3);
        assert_eq!(fib.mass, 3);
    }

    #[test]
    fn thick_roots_are_rejected() {
        let f = AnalyticQField::new(1, 1, sheets(vec![affine(1, 0.05, &[0.0])])).unwrap();
        let t = tube(PolyMap::zero(1), 1, 1, 0.01, 9);
        assert!(matches!(t.solve_fiber(&f, &[0.0]), Err(Error::Thickness(_))));
    }

    #[test]
    fn projection_inverts_the_fiber_map() {
        let phi = PolyMap::new(vec![Polynomial::zero().with(0.002, &[2, 0]).with(0.001, &[0, 1])]);
        let t = TubularNeighborhood::new(GraphSurface::new(2, 1, 0.5, phi, 5).unwrap(), 0.01, 1.0).unwrap();
        let z = [0.2, -0.1];
        let nu = t.surface().normal_frame(&z).unwrap();
        let p = linalg::add(&t.surface().embed(&z), &linalg::scale(&nu[0], 0.004));
        let (z2, w) = t.project(&p).unwrap();
        assert!(linalg::dist(&z, &z2) < 1e-13 && (w[0] - 0.004).abs() < 1e-13);
    }

    #[test]
    fn build_on_a_flat_surface() {
        let f = AnalyticQField::new(1, 1, sheets(vec![PolyMap::new(vec![Polynomial::zero().with(0.001, &[2])])])).unwrap();
        let t = tube(PolyMap::zero(1), 1, 1, 0.01, 9);
        let nf = build_normal_field(&t, &f).unwrap();
        for (i, x) in nf.mesh().points().iter().enumerate() {
            assert_eq!(nf.value(i), QPoint::from_values(2, vec![vec![0.0, 0.001 * x[0] * x[0]]]).unwrap());
        }
    }
}
