mod common;

use std::collections::BTreeSet;

use cdspec::geometry::{min_pairwise_distance, rank_measure, Closure, GeometryError, Point, Simplex};
use common::{apply, random_affine, random_point, random_simplex, rng};
use proptest::prelude::*;
use rand::Rng;

fn reconstruct(s: &Simplex, alphas: &[f64]) -> Point {
    let d = s.dim();
    Point::new((0..d).map(|j| s.vertices().iter().zip(alphas).map(|(v, a)| a * v[j]).sum()).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn partition_of_unity_and_reconstruction(seed in any::<u64>(), dim in 2usize..=3) {
        let mut r = rng(seed);
        let s = random_simplex(&mut r, dim, 1e3);
        let c = random_point(&mut r, dim, 30.0);
        let b = s.barycentric(&c).unwrap();
        prop_assert!((b.sum() - 1.0).abs() <= 1e-9);
        let back = reconstruct(&s, b.alphas());
        let scale = c.coords().iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        prop_assert!(back.distance(&c) <= 1e-8 * scale);
    }

    #[test]
    fn vertices_map_to_basis_vectors(seed in any::<u64>(), dim in 2usize..=3) {
        let mut r = rng(seed);
        let s = random_simplex(&mut r, dim, 1e3);
        for (j, v) in s.vertices().iter().enumerate() {
            let b = s.barycentric(v).unwrap();
            for (k, a) in b.alphas().iter().enumerate() {
                let want = if k == j { 1.0 } else { 0.0 };
                prop_assert!((a - want).abs() <= 1e-9, "vertex {j}: {:?}", b.alphas());
            }
        }
    }

    #[test]
    fn affine_maps_preserve_barycentric_coordinates(seed in any::<u64>(), dim in 2usize..=3) {
        let mut r = rng(seed);
        let s = random_simplex(&mut r, dim, 1e2);
        let c = random_point(&mut r, dim, 15.0);
        let (a, b) = random_affine(&mut r, dim, 1e3);
        let moved = Simplex::new(s.vertices().iter().map(|v| apply(&a, &b, v)).collect()).unwrap();
        let before = s.barycentric(&c).unwrap();
        let after = moved.barycentric(&apply(&a, &b, &c)).unwrap();
        for (x, y) in before.alphas().iter().zip(after.alphas()) {
            prop_assert!((x - y).abs() <= 1e-7, "{:?} vs {:?}", before.alphas(), after.alphas());
        }
    }

    #[test]
    fn containment_modes_are_consistent(seed in any::<u64>(), dim in 2usize..=3) {
        let mut r = rng(seed);
        let s = random_simplex(&mut r, dim, 1e3);
        let c = random_point(&mut r, dim, 12.0);
        let open = s.contains(&c, Closure::Open).unwrap();
        let closed = s.contains(&c, Closure::Closed).unwrap();
        prop_assert!(!open || closed);
        prop_assert_eq!(s.classify_region(&c).unwrap().all_positive(), open);
        prop_assert!(s.classify_region(&c).unwrap().to_string() != "-".repeat(dim + 1));
    }

    #[test]
    fn min_pairwise_matches_brute_force(seed in any::<u64>(), n in 2usize..40) {
        let mut r = rng(seed);
        let pts: Vec<Point> = (0..n).map(|_| random_point(&mut r, 2, 5.0)).collect();
        let mut best = (f64::INFINITY, (0, 0));
        for i in 0..n {
            for j in i + 1..n {
                let d = pts[i].distance(&pts[j]);
                if d < best.0 {
                    best = (d, (i, j));
                }
            }
        }
        prop_assert_eq!(min_pairwise_distance(&pts).unwrap(), best);
    }
}

#[test]
fn a_triangle_splits_the_plane_into_ten_patterns() {
    let s = Simplex::new(vec![Point::new(vec![0.0, 0.0]), Point::new(vec![1.0, 0.0]), Point::new(vec![0.0, 1.0])]).unwrap();
    let mut open = BTreeSet::new();
    let mut r = rng(1);
    for _ in 0..20_000 {
        let c = Point::new(vec![r.random_range(-3.0..4.0), r.random_range(-3.0..4.0)]);
        open.insert(s.classify_region(&c).unwrap().to_string());
    }
    assert_eq!(open.len(), 7, "{open:?}");

    let mut edges = BTreeSet::new();
    for k in 1..64 {
        let u = k as f64 / 64.0;
        for c in [[u, 0.0], [0.0, u], [u, 1.0 - u]] {
            edges.insert(s.classify_region(&Point::new(c.to_vec())).unwrap().to_string());
        }
    }
    assert_eq!(edges, BTreeSet::from(["+0+".to_string(), "++0".to_string(), "0++".to_string()]));
    assert_eq!(open.union(&edges).count(), 10);
}

#[test]
fn degenerate_input_is_rejected() {
    let collinear = vec![Point::new(vec![0.0, 0.0]), Point::new(vec![1.0, 1.0]), Point::new(vec![2.0, 2.0])];
    assert_eq!(rank_measure(&collinear).unwrap(), 1);
    assert!(matches!(Simplex::new(collinear), Err(GeometryError::Degenerate { rank: 1, dim: 2 })));
    assert!(Simplex::new(vec![Point::new(vec![0.0, 0.0]), Point::new(vec![1.0, 0.0])]).is_err());
    assert!(min_pairwise_distance(&[Point::new(vec![0.0, 0.0])]).is_err());
}

#[test]
fn boundary_distance_examples() {
    let s = Simplex::new(vec![Point::new(vec![0.0, 0.0]), Point::new(vec![4.0, 0.0]), Point::new(vec![0.0, 4.0])]).unwrap();
    assert!((s.boundary_distance(&Point::new(vec![1.0, 1.0])).unwrap() - 1.0).abs() < 1e-12);
    assert!((s.boundary_distance(&Point::new(vec![1.0, 2.0])).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    assert!(matches!(s.boundary_distance(&Point::new(vec![5.0, 5.0])), Err(GeometryError::OutsideSimplex)));

    let t = Simplex::new(vec![
        Point::new(vec![0.0, 0.0, 0.0]),
        Point::new(vec![3.0, 0.0, 0.0]),
        Point::new(vec![0.0, 3.0, 0.0]),
        Point::new(vec![0.0, 0.0, 3.0]),
    ])
    .unwrap();
    assert!((t.boundary_distance(&Point::new(vec![0.5, 0.6, 0.7])).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn boundary_distance_lower_bounds_distance_to_outside_points() {
    let mut r = rng(7);
    for _ in 0..500 {
        let s = random_simplex(&mut r, 2, 50.0);
        let alphas: Vec<f64> = {
            let raw: Vec<f64> = (0..3).map(|_| r.random_range(0.05..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            raw.iter().map(|a| a / sum).collect()
        };
        let c = reconstruct(&s, &alphas);
        let d = s.boundary_distance(&c).unwrap();
        for _ in 0..20 {
            let q = random_point(&mut r, 2, 15.0);
            if !s.contains(&q, Closure::Closed).unwrap() {
                assert!(c.distance(&q) >= d - 1e-9);
            }
        }
    }
}
