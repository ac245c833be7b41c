//! Property tests for invariants that hold on every input.

use approx::assert_relative_eq;
use proptest::prelude::*;

use fpp_core::cellproblem::{solve_finite_horizon, solve_stationary, LatticeFunction};
use fpp_core::distcompare::{gap_bound_dual, gap_bound_primal, kolmogorov_distance, skorokhod_values, MarginalSpec};
use fpp_core::environment::{
    sample_window, EnvironmentKind, EnvironmentSpec, EnvironmentWindow, ExplicitTable, Topology, WeightDistribution,
};
use fpp_core::fpp::{first_passage_times, passage_time, reachable_set, Path};
use fpp_core::lattice::{l1_norm, BoxShape, Direction, DirectionSet};
use fpp_core::norms::{direction_mesh, dual_norm, limit_shape, NormTable};
use fpp_core::oracle::passage_times_by_enumeration;
use fpp_core::symmin::{brute_force_hbar, infsup_bounds, run_algorithm, AtomicMedium, DEFAULT_MAX_ITER, DEFAULT_TOL};

fn iid(d: usize, seed: u64) -> EnvironmentSpec {
    EnvironmentSpec::new(EnvironmentKind::IidUndirected, d, WeightDistribution::Uniform { lo: 1.0, hi: 2.0 }, seed)
        .unwrap()
}

fn open_box(spec: &EnvironmentSpec, n: i64) -> EnvironmentWindow {
    sample_window(spec, BoxShape::from_extents(vec![n; spec.d]).unwrap(), Topology::OpenBox).unwrap()
}

fn point(d: usize, n: i64) -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::vec(0..n, d)
}

fn medium(d: usize) -> impl Strategy<Value = AtomicMedium> {
    (2usize..=4)
        .prop_flat_map(move |k| {
            (
                proptest::collection::vec(proptest::collection::vec(1.0f64..3.0, d), k),
                proptest::collection::vec(0.1f64..1.0, k),
            )
        })
        .prop_map(move |(atoms, w)| {
            let s: f64 = w.iter().sum();
            AtomicMedium::new(d, atoms, w.iter().map(|x| x / s).collect()).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dijkstra_matches_enumeration(weights in proptest::collection::vec(1u32..40, 24), src in point(2, 3)) {
        let shape = BoxShape::from_extents(vec![3, 3]).unwrap();
        let mut table = ExplicitTable::empty(shape.clone());
        let mut w = weights.iter().cycle();
        for x in shape.iter() {
            for dir in DirectionSet::new(2).positive() {
                let mut y = x.clone();
                y[dir.axis] += 1;
                if shape.contains(&y) {
                    let v = *w.next().unwrap() as f64 * 0.037;
                    table.set(&x, dir, v).unwrap();
                    table.set(&y, dir.negate(), v).unwrap();
                }
            }
        }
        let env = sample_window(&EnvironmentSpec::explicit(table).unwrap(), shape, Topology::OpenBox).unwrap();
        let fast = first_passage_times(&env, &src).unwrap();
        let slow = passage_times_by_enumeration(&env, &src);
        prop_assert_eq!(fast.times(), slow.as_slice());
    }

    #[test]
    fn passage_times_are_subadditive_and_bounded(seed in any::<u64>(), x in point(2, 9), y in point(2, 9), z in point(2, 9)) {
        let env = open_box(&iid(2, seed), 9);
        let txy = passage_time(&env, &x, &y).unwrap();
        let tyz = passage_time(&env, &y, &z).unwrap();
        let txz = passage_time(&env, &x, &z).unwrap();
        prop_assert!(txz <= txy + tyz + 1e-12);
        let dist = l1_norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>()) as f64;
        prop_assert!(txy >= dist - 1e-12 && txy <= 2.0 * dist + 1e-12);
        assert_relative_eq!(txy, passage_time(&env, &y, &x).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn path_time_telescopes(seed in any::<u64>(), steps in proptest::collection::vec(0usize..4, 1..12), cut in 0usize..12) {
        let spec = iid(2, seed);
        let env = sample_window(&spec, BoxShape::centered(&[0, 0], 12).unwrap(), Topology::OpenBox).unwrap();
        let dirs: Vec<Direction> = steps.iter().map(|&i| Direction::from_index(i, 2)).collect();
        let cut = cut.min(dirs.len());
        let whole = Path::from_steps(vec![0, 0], &dirs);
        let head = Path::from_steps(vec![0, 0], &dirs[..cut]);
        let tail = Path::from_steps(whole.vertices()[cut].clone(), &dirs[cut..]);
        let sum = head.time(&env).unwrap() + tail.time(&env).unwrap();
        assert_relative_eq!(whole.time(&env).unwrap(), sum, max_relative = 1e-14);
    }

    #[test]
    fn reachable_sets_grow_with_time(seed in any::<u64>(), t in 0.0f64..6.0, dt in 0.0f64..3.0) {
        let env = open_box(&iid(2, seed), 15);
        let small = reachable_set(&env, &[7, 7], t).unwrap();
        let big = reachable_set(&env, &[7, 7], t + dt).unwrap();
        prop_assert!(small.iter().all(|y| big.contains(y)));
        for y in &small {
            prop_assert!(passage_time(&env, &[7, 7], y).unwrap() <= t);
        }
    }

    #[test]
    fn weights_are_deterministic_and_bounded(seed in any::<u64>(), x in point(2, 6), axis in 0usize..2) {
        let spec = iid(2, seed);
        let a = open_box(&spec, 8);
        let shifted = sample_window(&spec, BoxShape::new(vec![-3, -2], vec![12, 12]).unwrap(), Topology::OpenBox).unwrap();
        let dir = Direction::plus(axis);
        let w = a.weight(&x, dir).unwrap();
        prop_assert!((1.0..=2.0).contains(&w));
        prop_assert_eq!(w, shifted.weight(&x, dir).unwrap());
        let mut y = x.clone();
        y[axis] += 1;
        prop_assert_eq!(w, a.weight(&y, dir.negate()).unwrap());
    }

    #[test]
    fn torus_weights_are_periodic(seed in any::<u64>(), x in point(2, 5), k in -3i64..3) {
        let env = sample_window(&iid(2, seed), BoxShape::from_extents(vec![5, 5]).unwrap(), Topology::Torus).unwrap();
        let y = vec![x[0] + 5 * k, x[1] - 5 * k];
        for dir in DirectionSet::new(2).all() {
            prop_assert_eq!(env.weight(&x, dir).unwrap(), env.weight(&y, dir).unwrap());
        }
    }

    #[test]
    fn horizon_value_is_monotone_in_time(seed in any::<u64>(), p in proptest::collection::vec(-1.0f64..1.0, 2), t in 0.0f64..5.0, dt in 0.0f64..3.0) {
        let env = sample_window(&iid(2, seed), BoxShape::from_extents(vec![6, 6]).unwrap(), Topology::Torus).unwrap();
        let zero = LatticeFunction::constant(2, 0.0);
        let x = [2, 3];
        let early = solve_finite_horizon(&env, &p, &x, t, &zero).unwrap().value;
        let late = solve_finite_horizon(&env, &p, &x, t + dt, &zero).unwrap().value;
        prop_assert!(late <= early);
        prop_assert!(early <= 0.0);
        let pinf = p[0].abs().max(p[1].abs());
        prop_assert!(early >= -pinf * t - 1e-12);
    }

    #[test]
    fn stationary_field_stays_in_its_bounds(seed in any::<u64>(), p in proptest::collection::vec(-1.0f64..1.0, 2), eps in 0.05f64..0.5) {
        let env = sample_window(&iid(2, seed), BoxShape::from_extents(vec![6, 6]).unwrap(), Topology::Torus).unwrap();
        let field = solve_stationary(&env, &p, eps, 1e-10).unwrap();
        let (lo, hi) = field.value_bounds(1.0, 2.0);
        for &v in &field.values {
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }
        let pinf = p[0].abs().max(p[1].abs());
        prop_assert!(field.lipschitz_norm() <= 3.0 * pinf + 1e-9);
        prop_assert!(field.residual <= 1e-10);
    }

    #[test]
    fn algorithm_output_is_an_upper_bracket(m in medium(2), p in proptest::collection::vec(-1.0f64..1.0, 2)) {
        let r = run_algorithm(&m, &p, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let bf = brute_force_hbar(&m, &p, 1e-13).unwrap();
        prop_assert!(bf.hbar <= r.hbar + 1e-9);
        let (lo, hi) = infsup_bounds(&r.profile, &m);
        prop_assert!(lo - 1e-9 <= bf.hbar && bf.hbar <= hi + 1e-9);
        for w in r.trace.windows(2) {
            prop_assert!(w[1].sup_before <= w[0].sup_before * (1.0 + 1e-12) + 1e-15);
        }
        prop_assert!(r.profile.mean(&m).abs() < 1e-9);
        if r.is_corrector() {
            prop_assert!((r.hbar - bf.hbar).abs() < 1e-6);
        }
    }

    #[test]
    fn brute_force_is_homogeneous(m in medium(2), p in proptest::collection::vec(-1.0f64..1.0, 2), lambda in 0.1f64..5.0) {
        let h = brute_force_hbar(&m, &p, 1e-13).unwrap().hbar;
        let q: Vec<f64> = p.iter().map(|c| c * lambda).collect();
        let hl = brute_force_hbar(&m, &q, 1e-13).unwrap().hbar;
        prop_assert!((hl - lambda * h).abs() <= 1e-9 * (1.0 + lambda));
        let b = m.bounds().b;
        prop_assert!(h >= p[0].abs().max(p[1].abs()) / b - 1e-12);
    }

    #[test]
    fn one_dimensional_law(m in medium(1), p in -3.0f64..3.0) {
        prop_assume!(p.abs() > 1e-3);
        let r = run_algorithm(&m, &[p], DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let mean = m.mean_weights()[0];
        prop_assert!(r.is_corrector());
        prop_assert!((r.hbar - p.abs() / mean).abs() < 1e-9);
    }

    #[test]
    fn kolmogorov_is_a_metric(l1 in 1.0f64..2.0, w1 in 0.1f64..2.0, l2 in 1.0f64..2.0, w2 in 0.1f64..2.0, l3 in 1.0f64..2.0, w3 in 0.1f64..2.0) {
        let f = MarginalSpec::uniform(l1, l1 + w1).unwrap();
        let g = MarginalSpec::uniform(l2, l2 + w2).unwrap();
        let h = MarginalSpec::uniform(l3, l3 + w3).unwrap();
        let fg = kolmogorov_distance(&f, &g, 0);
        prop_assert!((0.0..=1.0).contains(&fg));
        prop_assert_eq!(fg, kolmogorov_distance(&g, &f, 0));
        prop_assert!(fg <= kolmogorov_distance(&f, &h, 0) + kolmogorov_distance(&h, &g, 0) + 1e-12);
    }

    #[test]
    fn quantiles_are_monotone(u in 0.0f64..1.0, v in 0.0f64..1.0, vals in proptest::collection::vec(1.0f64..5.0, 1..5)) {
        let probs = vec![1.0 / vals.len() as f64; vals.len()];
        let atoms = MarginalSpec::atoms(&vals, &probs).unwrap();
        let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
        prop_assert!(skorokhod_values(&atoms, lo).unwrap() <= skorokhod_values(&atoms, hi).unwrap());
        let y = skorokhod_values(&atoms, lo).unwrap();
        prop_assert!(atoms.cdf(y) >= lo - 1e-12);
    }

    #[test]
    fn dual_bound_is_never_better(a1 in 0.5f64..2.0, r1 in 1.0f64..3.0, a2 in 0.5f64..2.0, r2 in 1.0f64..3.0, d in 0.0f64..1.0) {
        let p = gap_bound_primal(a1 * r1, a1, a2 * r2, a2, d).unwrap();
        let q = gap_bound_dual(a1 * r1, a1, a2 * r2, a2, d).unwrap();
        prop_assert!(q.value >= p.value && p.value >= 0.0);
    }

    #[test]
    fn dual_ball_of_a_scaled_norm(c in 0.5f64..3.0, x in proptest::collection::vec(-2.0f64..2.0, 2)) {
        let h = |p: &[f64]| Ok(p[0].abs().max(p[1].abs()) / c);
        let table = NormTable::from_evaluator(direction_mesh(2, std::f64::consts::PI / 64.0).unwrap(), &h, 0.0, "analytic").unwrap();
        let v = dual_norm(&table, &x, c).unwrap();
        let truth = c * (x[0].abs() + x[1].abs());
        prop_assert!(v.value <= truth + 1e-12 && truth <= v.value + v.slack + 1e-12);
        let shape = limit_shape(&table).unwrap();
        prop_assert!(shape.is_convex());
        for vert in &shape.vertices {
            prop_assert!((vert[0].abs() + vert[1].abs() - 1.0 / c).abs() < 1e-9);
        }
    }
}
