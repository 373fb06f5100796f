//! Slow reference implementations used to cross-check the fast paths.

use crate::linalg;
use crate::qfields::SampledQField;
use crate::qpoints::QPoint;

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut next = p.clone();
            next.insert(pos, k - 1);
            out.push(next);
        }
    }
    out
}

/// G(a, b) by enumerating all Q! pairings. Panics when Q differs.
pub fn permutation_distance(a: &QPoint, b: &QPoint) -> f64 {
    assert_eq!(a.q(), b.q(), "Q must agree");
    let (ea, eb) = (a.expanded(), b.expanded());
    permutations(a.q())
        .iter()
        .map(|perm| perm.iter().enumerate().map(|(i, &j)| linalg::dist2(ea[i], eb[j])).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Whether u = u1 + u2 sample by sample with no support vector shared
/// between the parts.
pub fn is_exact_split(u: &SampledQField, u1: &SampledQField, u2: &SampledQField) -> bool {
    if u.mesh().len() != u1.mesh().len() || u.mesh().len() != u2.mesh().len() {
        return false;
    }
    (0..u.mesh().len()).all(|p| {
        let (a, b) = (u1.sample(p), u2.sample(p));
        let disjoint = a.atoms().iter().all(|x| b.atoms().iter().all(|y| x.v != y.v));
        disjoint && a.union(b).is_ok_and(|joined| &joined == u.sample(p))
    })
}
