use proptest::prelude::*;

use qgmt::chains::SimplicialChain;
use qgmt::linalg;
use qgmt::mesh::{Grid, Mesh};
use qgmt::multisection::Multisection;
use qgmt::oracle;
use qgmt::qfields::SampledQField;
use qgmt::qpoints::QPoint;

fn values(q: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, n), q)
}

/// Three Q-points of a common shape.
fn triple() -> impl Strategy<Value = (QPoint, QPoint, QPoint)> {
    (1usize..=5, 1usize..=3).prop_flat_map(|(q, n)| {
        (values(q, n), values(q, n), values(q, n)).prop_map(move |(a, b, c)| {
            (
                QPoint::from_values(n, a).unwrap(),
                QPoint::from_values(n, b).unwrap(),
                QPoint::from_values(n, c).unwrap(),
            )
        })
    })
}

fn chain(k: usize, d: usize) -> impl Strategy<Value = SimplicialChain> {
    let term = (prop::collection::vec(prop::collection::vec(-1.0..1.0f64, d), k + 1), -3i64..=3);
    prop::collection::vec(term, 0..6).prop_map(move |terms| SimplicialChain::new(k, d, terms).unwrap())
}

proptest! {
    #[test]
    fn distance_is_a_metric((a, b, c) in triple()) {
        let ab = a.distance(&b).unwrap();
        prop_assert_eq!(a.distance(&a).unwrap(), 0.0);
        prop_assert!((ab - b.distance(&a).unwrap()).abs() <= 1e-12);
        prop_assert!(a.distance(&c).unwrap() <= ab + b.distance(&c).unwrap() + 1e-12);
        prop_assert!((ab - oracle::permutation_distance(&a, &b)).abs() <= 1e-12);
    }

    #[test]
    fn order_of_values_is_irrelevant(vals in values(4, 2), shift in 0usize..4) {
        let mut rotated = vals.clone();
        rotated.rotate_left(shift);
        prop_assert_eq!(QPoint::from_values(2, vals).unwrap(), QPoint::from_values(2, rotated).unwrap());
    }

    #[test]
    fn center_of_mass_is_1_over_sqrt_q_lipschitz((a, b, _) in triple()) {
        let q = a.q() as f64;
        let moved = linalg::dist(&a.center_of_mass(), &b.center_of_mass());
        prop_assert!(moved * q.sqrt() <= a.distance(&b).unwrap() + 1e-12);
    }

    #[test]
    fn qpoint_json_roundtrip((a, _, _) in triple()) {
        prop_assert_eq!(QPoint::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn boundary_of_boundary_vanishes(c in (2usize..=3).prop_flat_map(|k| chain(k, 3))) {
        prop_assert!(c.boundary().unwrap().boundary().unwrap().is_zero());
    }

    #[test]
    fn chain_arithmetic(a in chain(1, 2), b in chain(1, 2)) {
        prop_assert!(a.minus(&a).unwrap().is_zero());
        let sum = a.plus(&b).unwrap();
        prop_assert!(sum.mass() <= a.mass() + b.mass() + 1e-12);
        prop_assert_eq!(sum.minus(&b).unwrap(), a.clone());
        prop_assert_eq!(SimplicialChain::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn multisection_roundtrip(vals in prop::collection::vec(values(3, 2), 6)) {
        let mesh = Mesh::grid(&Grid::unit(1, 6)).unwrap();
        let samples = vals.into_iter().map(|v| QPoint::from_values(2, v).unwrap()).collect();
        let u = SampledQField::new(mesh, samples).unwrap();
        let ms = Multisection::from_qfield(&u);
        let direct = ms.to_qfield().unwrap();
        prop_assert_eq!(direct.samples(), u.samples());
        let back = Multisection::from_json(&ms.to_json().unwrap()).unwrap().to_qfield().unwrap();
        prop_assert_eq!(back.samples(), u.samples());
    }
}
