use proptest::prelude::*;
use vigpm::experiments::{box_ball_projection_oracle, projection_suite, PROJECTION_VARIANTS};
use vigpm::{ConvexSet, Point};

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-8.0..8.0f64, dim)
}

fn closed_form_set() -> impl Strategy<Value = ConvexSet> {
    (1usize..=4).prop_flat_map(|n| {
        prop_oneof![
            (point(n), prop::collection::vec(0.0..4.0f64, n)).prop_map(|(lo, w)| {
                let hi = lo.iter().zip(&w).map(|(l, w)| l + w).collect();
                ConvexSet::boxed(lo, hi).unwrap()
            }),
            (point(n), 0.05..5.0f64)
                .prop_map(|(c, r)| ConvexSet::ball(Point::new(c).unwrap(), r).unwrap()),
            (point(n), -3.0..3.0f64)
                .prop_filter("nonzero normal", |(a, _)| a.iter().any(|v| v.abs() > 1e-3))
                .prop_map(|(a, b)| ConvexSet::halfspace(Point::new(a).unwrap(), b).unwrap()),
            Just(ConvexSet::simplex(n).unwrap()),
            Just(ConvexSet::full_space(n).unwrap()),
        ]
    })
}

fn box_ball() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    (1usize..=2).prop_flat_map(|n| {
        (
            point(n),
            prop::collection::vec(0.1..4.0f64, n),
            prop::collection::vec(0.0..1.0f64, n),
            0.05..4.0f64,
        )
            .prop_map(|(lo, w, t, r)| {
                let hi: Vec<f64> = lo.iter().zip(&w).map(|(l, w)| l + w).collect();
                let c = lo
                    .iter()
                    .zip(&w)
                    .zip(&t)
                    .map(|((l, w), t)| l + w * t)
                    .collect();
                (lo, hi, c, r)
            })
    })
}

fn with_points(set: ConvexSet) -> impl Strategy<Value = (ConvexSet, Point, Point)> {
    let n = set.dim();
    (Just(set), point(n), point(n))
        .prop_map(|(s, x, y)| (s, Point::new(x).unwrap(), Point::new(y).unwrap()))
}

proptest! {
    #[test]
    fn closed_form_projection_properties((set, x, z) in closed_form_set().prop_flat_map(with_points)) {
        let px = set.project(&x).unwrap();
        prop_assert!(set.project(&px).unwrap().distance(&px) <= 1e-12);
        prop_assert!(set.contains(&px, 1e-8).unwrap());
        let pz = set.project(&z).unwrap();
        prop_assert!(px.distance(&pz) <= x.distance(&z) + 1e-10);
        // pz is a feasible point, so the variational inequality applies to it.
        prop_assert!(x.sub(&px).dot(&pz.sub(&px)) <= 1e-10);
    }

    #[test]
    fn dykstra_matches_exact_box_ball_projection(
        ((lo, hi, c, r), x, z) in box_ball().prop_flat_map(|b| {
            let n = b.0.len();
            (Just(b), point(n), point(n))
        })
    ) {
        let center = Point::new(c).unwrap();
        let set = ConvexSet::intersection(vec![
            ConvexSet::boxed(lo.clone(), hi.clone()).unwrap(),
            ConvexSet::ball(center.clone(), r).unwrap(),
        ]).unwrap();
        let x = Point::new(x).unwrap();
        let z = Point::new(z).unwrap();
        let px = set.project(&x).unwrap();
        let exact = box_ball_projection_oracle(&lo, &hi, &center, r, &x).unwrap();
        prop_assert!(px.distance(&exact) <= 1e-4, "dykstra {px} exact {exact}");
        prop_assert!(set.contains(&px, 1e-8).unwrap());
        let pz = set.project(&z).unwrap();
        prop_assert!(x.sub(&px).dot(&pz.sub(&px)) <= 1e-9);
        prop_assert!(px.distance(&pz) <= x.distance(&z) + 1e-10);
        prop_assert!(set.project(&px).unwrap().distance(&px) <= 1e-9);
    }
}

#[test]
fn seeded_suite_passes_for_every_variant() {
    for (seed, variant) in PROJECTION_VARIANTS.iter().enumerate() {
        let r = projection_suite(variant, 2_000, 100 + seed as u64).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn dykstra_agrees_with_dense_grid_search() {
    // Box[0,2]² ∩ Ball((2,0), 1) from the origin, by brute force on a 1e-3 grid.
    let set = ConvexSet::intersection(vec![
        ConvexSet::cube(2, 0.0, 2.0).unwrap(),
        ConvexSet::ball(Point::new(vec![2.0, 0.0]).unwrap(), 1.0).unwrap(),
    ])
    .unwrap();
    let x = Point::new(vec![0.0, 0.0]).unwrap();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=2000 {
        for j in 0..=2000 {
            let (u, v) = (i as f64 * 1e-3, j as f64 * 1e-3);
            if (u - 2.0).hypot(v) <= 1.0 {
                let d = u.hypot(v);
                if d < best.0 {
                    best = (d, u, v);
                }
            }
        }
    }
    let p = set.project(&x).unwrap();
    assert!(
        (p[0] - best.1).abs() <= 1e-3 && (p[1] - best.2).abs() <= 1e-3,
        "{p} vs {best:?}"
    );
    assert!((p[0] - 1.0).abs() < 1e-9 && p[1].abs() < 1e-9);
}
