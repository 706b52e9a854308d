mod support;

use compgn_core::linalg;
use compgn_core::{solve_subproblem, InnerConfig, Outer, Set};
use compgn_core::maps::Identity;
use compgn_core::CompositeProblem;
use support::{brute_force, random_instance, Objective};

const SEED: u64 = 0x5eed_0001;

fn tight() -> InnerConfig {
    InnerConfig { tolerance: 1e-12, ..InnerConfig::default() }
}

#[test]
fn matches_brute_force_on_random_instances() {
    let mut worst_arg: f64 = 0.0;
    let mut worst_val: f64 = 0.0;
    for i in 0..60 {
        let inst = random_instance(SEED, i);
        for mu in [0.1, 1.0, 10.0] {
            let sol = solve_subproblem(&inst.problem, &inst.x, mu, &tight()).unwrap();
            let (p, v) = brute_force(&inst.problem, &inst.set, &inst.x, mu);
            let da = linalg::dist(&sol.p, &p);
            let dv = (sol.value - v).abs();
            assert!(
                da <= 1e-6 && dv <= 1e-8,
                "instance {i} mu {mu}: solver {:?} {} vs brute {:?} {} ({:?}, {:?})",
                sol.p, sol.value, p, v, inst.outer, inst.set
            );
            worst_arg = worst_arg.max(da);
            worst_val = worst_val.max(dv);
        }
    }
    eprintln!("worst argument gap {worst_arg:e}, worst value gap {worst_val:e}");
}

#[test]
fn brute_force_recovers_linf_prox() {
    // prox of ‖·‖∞ at (2, 0) with unit step, as a subproblem with F = id, x = z, μ = 1.
    let problem = CompositeProblem::new(Identity::new(2), Outer::LInf { dim: 2 }, Set::whole(2)).unwrap();
    let (p, _) = brute_force(&problem, &Set::whole(2), &[2.0, 0.0], 1.0);
    assert!(linalg::dist(&p, &[1.0, 0.0]) < 1e-6);
    let sol = solve_subproblem(&problem, &[2.0, 0.0], 1.0, &tight()).unwrap();
    assert!(linalg::dist(&sol.p, &p) < 1e-6);
}

#[test]
fn brute_force_recovers_simplex_projection() {
    // Projection = subproblem with g ≡ 0 (linear with c = 0), F = id, μ = 1.
    let problem =
        CompositeProblem::new(Identity::new(2), Outer::Linear { c: vec![0.0, 0.0] }, Set::simplex(2, 1.0).unwrap())
            .unwrap();
    for z in [[0.2, 0.9], [3.0, -1.0], [-2.0, -2.5], [0.5, 0.5]] {
        let (p, _) = brute_force(&problem, &Set::simplex(2, 1.0).unwrap(), &z, 1.0);
        let q = problem.set().project(&z);
        assert!(linalg::dist(&p, &q) < 1e-6, "{z:?}: {p:?} vs {q:?}");
    }
}

#[test]
fn descent_bound_and_monotonicity_in_mu() {
    let cfg = tight();
    let slack = 10.0 * cfg.tolerance;
    for i in 0..90 {
        let inst = random_instance(SEED ^ 7, i);
        // Descent bound needs x ∈ D.
        let x = inst.problem.set().project(&inst.x);
        let fx = inst.problem.objective(&x).unwrap();
        let mut previous: Option<f64> = None;
        for mu in [0.1, 0.3, 1.0, 3.0, 10.0, 30.0] {
            let sol = solve_subproblem(&inst.problem, &x, mu, &cfg).unwrap();
            let d = linalg::dist(&sol.p, &x);
            assert!(sol.value <= fx - 0.5 * mu * d * d + 1e-7, "instance {i} mu {mu}");
            assert!(inst.problem.set().contains(&sol.p, 1e-9));
            if let Some(prev) = previous {
                assert!(sol.value + slack >= prev, "V not nondecreasing in mu on instance {i}");
            }
            previous = Some(sol.value);
        }
    }
}

#[test]
fn minimal_against_feasible_probes() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for i in 0..60 {
        let inst = random_instance(SEED ^ 11, i);
        let mu = [0.1, 1.0, 10.0][i % 3];
        let sol = solve_subproblem(&inst.problem, &inst.x, mu, &tight()).unwrap();
        let obj = Objective::new(&inst.problem, &inst.x, mu);
        let n = inst.x.len();
        for _ in 0..200 {
            let raw: Vec<f64> = (0..n).map(|j| sol.p[j] + rng.gen_range(-1.0..1.0)).collect();
            let q = inst.problem.set().project(&raw);
            assert!(obj.eval(&q) >= sol.value - 1e-9, "instance {i}: probe {q:?} beats p");
        }
    }
}

#[test]
fn solution_is_continuous_in_x() {
    for i in 0..40 {
        let inst = random_instance(SEED ^ 13, i);
        let mu = 1.0;
        let a = solve_subproblem(&inst.problem, &inst.x, mu, &tight()).unwrap();
        let shifted: Vec<f64> = inst.x.iter().map(|v| v + 1e-7).collect();
        let b = solve_subproblem(&inst.problem, &shifted, mu, &tight()).unwrap();
        assert!(linalg::dist(&a.p, &b.p) < 1e-3, "instance {i}");
    }
}

