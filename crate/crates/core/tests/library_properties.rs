use compgn_core::convex::project_simplex;
use compgn_core::linalg;
use compgn_core::{FeasibleSet, Outer, OuterConvex, Set};
use proptest::prelude::*;

fn outer_strategy() -> impl Strategy<Value = Outer> {
    (0usize..7, 1usize..5, 0.1f64..3.0, prop::collection::vec(-2.0f64..2.0, 4)).prop_map(|(k, dim, delta, c)| match k {
        0 => Outer::HalfSquaredL2 { dim },
        1 => Outer::L1 { dim },
        2 => Outer::L2 { dim },
        3 => Outer::LInf { dim },
        4 => Outer::CoordinateMax { dim },
        5 => Outer::huber(dim, delta).unwrap(),
        _ => Outer::Linear { c: c[..dim].to_vec() },
    })
}

fn set_strategy() -> impl Strategy<Value = Set> {
    (0usize..5, 1usize..5, prop::collection::vec(-2.0f64..2.0, 8), 0.1f64..3.0).prop_map(|(k, n, v, r)| match k {
        0 => Set::whole(n),
        1 => {
            let lower: Vec<f64> = v[..n].to_vec();
            let upper = lower.iter().zip(&v[4..4 + n]).map(|(l, w)| l + w.abs()).collect();
            Set::boxed(lower, upper).unwrap()
        }
        2 => Set::ball(v[..n].to_vec(), r).unwrap(),
        3 => Set::simplex(n, r).unwrap(),
        _ => {
            let a: Vec<f64> = v[..n].iter().map(|x| if x.abs() < 0.1 { 1.0 } else { *x }).collect();
            Set::halfspace(a, v[7]).unwrap()
        }
    })
}

fn points(dim: usize, raw: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (raw[..dim].to_vec(), raw[4..4 + dim].to_vec())
}

fn tol(scale: f64) -> f64 {
    1e-10 * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn subgradient_inequality(g in outer_strategy(), raw in prop::collection::vec(-5.0f64..5.0, 8)) {
        let (x, y) = points(g.dim(), &raw);
        let s = g.subgradient(&x);
        let lower = g.value(&x) + linalg::dot(&s, &linalg::sub(&y, &x));
        prop_assert!(g.value(&y) >= lower - tol(g.value(&y).abs()));
    }

    #[test]
    fn outer_is_convex(g in outer_strategy(), raw in prop::collection::vec(-5.0f64..5.0, 8), lambda in 0.0f64..1.0) {
        let (a, b) = points(g.dim(), &raw);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(u, v)| lambda * u + (1.0 - lambda) * v).collect();
        let chord = lambda * g.value(&a) + (1.0 - lambda) * g.value(&b);
        prop_assert!(g.value(&mid) <= chord + tol(chord.abs()));
    }

    #[test]
    fn prox_satisfies_optimality(g in outer_strategy(), raw in prop::collection::vec(-5.0f64..5.0, 8), t in 0.05f64..5.0) {
        // (z − p)/t must be a subgradient of g at p = prox_{tg}(z).
        let (z, y) = points(g.dim(), &raw);
        let p = g.prox(&z, t).unwrap();
        let s: Vec<f64> = z.iter().zip(&p).map(|(a, b)| (a - b) / t).collect();
        let lower = g.value(&p) + linalg::dot(&s, &linalg::sub(&y, &p));
        prop_assert!(g.value(&y) >= lower - 1e-9 * (1.0 + g.value(&y).abs()));
    }

    #[test]
    fn moreau_decomposition(g in outer_strategy(), raw in prop::collection::vec(-5.0f64..5.0, 4), t in 0.05f64..5.0) {
        let z = raw[..g.dim()].to_vec();
        let p = g.prox(&z, t).unwrap();
        let zt: Vec<f64> = z.iter().map(|v| v / t).collect();
        let q = g.conjugate_prox(&zt, 1.0 / t).unwrap();
        for i in 0..z.len() {
            prop_assert!((p[i] + t * q[i] - z[i]).abs() <= 1e-10 * (1.0 + z[i].abs()));
        }
    }

    #[test]
    fn projection_is_idempotent_and_feasible(d in set_strategy(), raw in prop::collection::vec(-6.0f64..6.0, 4)) {
        let z = raw[..d.dim()].to_vec();
        let p = d.project(&z);
        prop_assert!(d.contains(&p, 1e-12));
        prop_assert_eq!(d.project(&p), p);
    }

    #[test]
    fn projection_is_nonexpansive(d in set_strategy(), raw in prop::collection::vec(-6.0f64..6.0, 8)) {
        let (a, b) = points(d.dim(), &raw);
        let gap = linalg::dist(&d.project(&a), &d.project(&b));
        prop_assert!(gap <= linalg::dist(&a, &b) + 1e-12);
    }

    #[test]
    fn projection_variational_inequality(d in set_strategy(), raw in prop::collection::vec(-6.0f64..6.0, 8)) {
        let (z, w) = points(d.dim(), &raw);
        let p = d.project(&z);
        let y = d.project(&w);
        let inner = linalg::dot(&linalg::sub(&z, &p), &linalg::sub(&y, &p));
        prop_assert!(inner <= 1e-10 * (1.0 + linalg::norm(&z)));
    }
}

#[test]
fn simplex_projection_matches_lattice_search() {
    // Nearest point of {x ≥ 0, Σx = 1} in R³ over a lattice of spacing 1/400.
    let steps = 400;
    let lattice: Vec<[f64; 3]> = (0..=steps)
        .flat_map(|i| (0..=steps - i).map(move |j| (i, j)))
        .map(|(i, j)| {
            let (a, b) = (i as f64 / steps as f64, j as f64 / steps as f64);
            [a, b, 1.0 - a - b]
        })
        .collect();
    for z in [[0.2, 0.9, 0.5], [3.0, -1.0, 0.0], [-1.0, -1.0, -1.0], [0.4, 0.4, 0.4], [5.0, 5.0, -5.0]] {
        let p = project_simplex(&z, 1.0);
        let nearest = lattice
            .iter()
            .min_by(|a, b| linalg::dist(*a, &z).partial_cmp(&linalg::dist(*b, &z)).unwrap())
            .unwrap();
        assert!(linalg::dist(&p, &z) <= linalg::dist(nearest, &z) + 1e-12, "{z:?}");
        assert!(linalg::dist(&p, nearest) <= 2.0 / steps as f64, "{z:?}: {p:?} vs {nearest:?}");
    }
}
