//! Seeded generators for property suites and the scenario bank.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, so a suite
//! run is reproducible from its seed on any platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chains::{Point, SimplicialChain};
use crate::mesh::{Grid, Mesh};
use crate::poly::{PolyMap, Polynomial};
use crate::qfields::{AnalyticQField, Sheet};
use crate::qpoints::QPoint;
use crate::reparam::{MeshSpec, ReparamScenario};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn vector(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, lo, hi)).collect()
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v = vector(rng, n, -1.0, 1.0);
        let len = crate::linalg::norm(&v);
        if len > 0.1 && len <= 1.0 {
            return crate::linalg::scale(&v, 1.0 / len);
        }
    }
}

/// Q values with coordinates uniform in [lo, hi].
pub fn qpoint(rng: &mut ChaCha8Rng, q: usize, n: usize, lo: f64, hi: f64) -> QPoint {
    QPoint::from_values(n, (0..q).map(|_| vector(rng, n, lo, hi)).collect()).expect("finite values")
}

/// A random (Q, n) with Q ≤ `max_q`, n ≤ `max_n`.
pub fn shape(rng: &mut ChaCha8Rng, max_q: usize, max_n: usize) -> (usize, usize) {
    (rng.random_range(1..=max_q), rng.random_range(1..=max_n))
}

/// Sheets of a random affine-plus-quadratic field on R^m with values in R^n.
pub fn sheet(rng: &mut ChaCha8Rng, m: usize, n: usize, offset: &[f64], slope: f64, curve: f64) -> PolyMap {
    let components = (0..n)
        .map(|k| {
            let mut p = Polynomial::affine(offset[k], &vector(rng, m, -slope, slope));
            if curve > 0.0 {
                for i in 0..m {
                    let mut pow = vec![0u32; m];
                    pow[i] = 2;
                    p = p.with(uniform(rng, -curve, curve), &pow);
                }
            }
            p
        })
        .collect();
    PolyMap::new(components)
}

/// A field whose sheets split into two groups whose values stay at least
/// `gap` apart on [0,1]^m.
pub fn separated_field(rng: &mut ChaCha8Rng, m: usize, n: usize, q: usize, gap: f64) -> AnalyticQField {
    let q1 = rng.random_range(1..q);
    let dir = unit_vector(rng, n);
    let mut sheets = Vec::with_capacity(q);
    for l in 0..q {
        let shift = if l < q1 { 0.0 } else { gap + 2.0 };
        let mut offset = vector(rng, n, -0.5, 0.5);
        for (o, d) in offset.iter_mut().zip(&dir) {
            *o += shift * d;
        }
        sheets.push(Sheet { mult: 1, poly: sheet(rng, m, n, &offset, 0.25, 0.0) });
    }
    AnalyticQField::new(m, n, sheets).expect("valid sheets")
}

/// A field whose values stay within 0.3 of a common centre that drifts
/// with slope at least 0.5 along the first axis, so the atoms never get
/// far apart compared with how fast the field moves.
pub fn clustered_field(rng: &mut ChaCha8Rng, m: usize, n: usize, q: usize) -> AnalyticQField {
    let centre = vector(rng, n, -1.0, 1.0);
    let mut drift: Vec<Vec<f64>> = (0..n).map(|_| vector(rng, m, -0.5, 0.5)).collect();
    drift[0][0] = uniform(rng, 0.5, 1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let sheets = (0..q)
        .map(|_| {
            let components = (0..n)
                .map(|k| {
                    let slope: Vec<f64> = drift[k].iter().map(|d| d + uniform(rng, -0.05, 0.05)).collect();
                    Polynomial::affine(centre[k] + uniform(rng, -0.2, 0.2), &slope)
                })
                .collect();
            Sheet { mult: 1, poly: PolyMap::new(components) }
        })
        .collect();
    AnalyticQField::new(m, n, sheets).expect("valid sheets")
}

/// Sheets at levels one apart along a random direction with slopes at most
/// 0.1, so distinct sheets never meet on [0,1]^m. Some levels carry two
/// coinciding sheets.
pub fn layered_field(rng: &mut ChaCha8Rng, m: usize, n: usize, q: usize) -> AnalyticQField {
    let dir = unit_vector(rng, n);
    let mut sheets = Vec::new();
    let mut left = q;
    let mut level = 0.0;
    while left > 0 {
        let mult = if left >= 2 && rng.random_bool(0.25) { 2 } else { 1 };
        let offset: Vec<f64> = dir.iter().map(|d| level * d).collect();
        sheets.push(Sheet { mult, poly: sheet(rng, m, n, &offset, 0.1, 0.0) });
        left -= mult;
        level += 1.0;
    }
    AnalyticQField::new(m, n, sheets).expect("valid sheets")
}

/// A random chain of the m-simplices of `mesh` with coefficients in −2..=2.
pub fn mesh_chain(rng: &mut ChaCha8Rng, mesh: &Mesh, density: f64) -> SimplicialChain {
    let m = mesh.dim();
    let terms = mesh
        .simplices()
        .iter()
        .filter_map(|s| {
            if rng.random_bool(density) {
                let c = rng.random_range(-2..=2);
                Some((mesh.simplex_points(s), c))
            } else {
                None
            }
        })
        .collect();
    SimplicialChain::new(m, m, terms).expect("mesh simplices")
}

/// A random chain of k-simplices with vertices in [−1, 1]^d.
pub fn free_chain(rng: &mut ChaCha8Rng, k: usize, d: usize, terms: usize) -> SimplicialChain {
    let list = (0..terms)
        .map(|_| {
            let verts: Vec<Point> = (0..=k).map(|_| vector(rng, d, -1.0, 1.0)).collect();
            (verts, rng.random_range(-3..=3))
        })
        .collect();
    SimplicialChain::new(k, d, list).expect("finite vertices")
}

/// Random affine map R^a → R^b with entries in [−1, 1].
pub fn affine_map(rng: &mut ChaCha8Rng, a: usize, b: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    ((0..b).map(|_| vector(rng, a, -1.0, 1.0)).collect(), vector(rng, b, -1.0, 1.0))
}

pub fn apply_affine(map: &(Vec<Vec<f64>>, Vec<f64>), x: &[f64]) -> Vec<f64> {
    map.0.iter().zip(&map.1).map(|(row, c)| crate::linalg::dot(row, x) + c).collect()
}

/// The unit grid [0,1]^m with `count` points per axis.
pub fn unit_mesh(m: usize, count: usize) -> Mesh {
    Mesh::grid(&Grid::unit(m, count)).expect("valid grid")
}

/// Reparametrization scenarios at c0 = 0.01, s = 0.5, r = 1 covering
/// m, n ∈ {1, 2}, Q ∈ {1, 2, 3} with linear and quadratic φ, plus the flat
/// φ ≡ 0 cases.
pub fn reparam_bank(seed: u64) -> Vec<(String, ReparamScenario)> {
    let mut rng = rng(seed);
    let mut out = Vec::new();
    for curved in [false, true] {
        for m in 1..=2 {
            for n in 1..=2 {
                for q in 1..=3 {
                    let name = format!("{}-m{m}-n{n}-q{q}", if curved { "quadratic" } else { "linear" });
                    out.push((name, reparam_case(&mut rng, m, n, q, Some(curved))));
                }
            }
        }
    }
    for (m, n, q) in [(1, 1, 2), (2, 2, 3)] {
        out.push((format!("flat-m{m}-n{n}-q{q}"), reparam_case(&mut rng, m, n, q, None)));
    }
    out
}

/// One bank scenario; `curved = None` gives φ ≡ 0.
pub fn reparam_case(rng: &mut ChaCha8Rng, m: usize, n: usize, q: usize, curved: Option<bool>) -> ReparamScenario {
    let phi = match curved {
        None => PolyMap::zero(n),
        Some(curved) => {
            let offset = vector(rng, n, -0.0002, 0.0002);
            sheet(rng, m, n, &offset, 0.002, if curved { 0.0008 } else { 0.0 })
        }
    };
    // Sheets sit at distinct levels along one direction, shifted away from
    // φ so that η∘f − φ does not vanish on B_s.
    let dir = unit_vector(rng, n);
    let mean = 0.0009;
    let spread = 0.0011;
    let mut sheets = Vec::new();
    let mut mults = match q {
        1 => vec![1],
        2 => {
            if rng.random_bool(0.3) {
                vec![2]
            } else {
                vec![1, 1]
            }
        }
        _ => {
            if rng.random_bool(0.3) {
                vec![2, 1]
            } else {
                vec![1, 1, 1]
            }
        }
    };
    mults.shrink_to_fit();
    let k = mults.len();
    for (l, mult) in mults.into_iter().enumerate() {
        let level = mean + spread * (l as f64 - (k as f64 - 1.0) / 2.0);
        let offset: Vec<f64> = dir.iter().map(|d| level * d).collect();
        sheets.push(Sheet { mult, poly: sheet(rng, m, n, &offset, 0.0002, 0.0) });
    }
    ReparamScenario {
        m,
        n,
        q,
        s: 0.5,
        r: 1.0,
        c0: 0.01,
        phi,
        sheets,
        mesh: MeshSpec::default(),
        cbar: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_reproducible() {
        let a = qpoint(&mut rng(5), 3, 2, -1.0, 1.0);
        let b = qpoint(&mut rng(5), 3, 2, -1.0, 1.0);
        assert_eq!(a, b);
        assert_eq!(reparam_bank(3), reparam_bank(3));
    }
}
