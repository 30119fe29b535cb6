mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fcavpp::bnc::{separate_connectivity, solve_bnc, BncConfig};
use fcavpp::formulation::connectivity_rows;
use fcavpp::instance::fuel_trace;
use fcavpp::milp::{ConstraintRow, Family, Sense, VarId};
use fcavpp::oracle::oracle_solve;
use fcavpp::{
    build_formulation, check_feasibility, solution_cost, BuildOptions, FormulationVariant, Solution,
};

use common::{incidence, random_solution, tiny, MULTIPLIERS};

#[test]
fn oracle_beats_random_feasible_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for seed in 0..20u64 {
        let inst = tiny(
            4 + (seed % 3) as usize,
            1 + (seed % 2) as usize,
            3.0,
            100 + seed,
        );
        let Some(best) = oracle_solve(&inst).unwrap() else {
            continue;
        };
        let mut samples = 0;
        for _ in 0..20_000 {
            if samples == 1000 {
                break;
            }
            if let Some(sol) = random_solution(&inst, &mut rng) {
                samples += 1;
                assert!(
                    best.total_cost <= sol.total_cost + 1e-9,
                    "seed {seed}: oracle {} beaten by {:?} at {}",
                    best.total_cost,
                    sol.routes,
                    sol.total_cost
                );
            }
        }
        if samples == 1000 {
            checked += 1;
        }
    }
    assert!(
        checked >= 10,
        "only {checked} instances reached 1000 samples"
    );
}

#[test]
fn cuts_are_valid_for_feasible_solutions() {
    // Every connectivity row over every station-containing set is satisfied
    // by sampled feasible solutions.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..6u64 {
        let inst = tiny(3, 1 + (seed % 2) as usize, 2.5, seed);
        let form =
            build_formulation(&inst, FormulationVariant::F2, &BuildOptions::default()).unwrap();
        let nv = inst.num_vertices();
        let sets: Vec<Vec<usize>> = (1u32..1 << (nv - 1))
            .map(|mask| {
                (1..nv)
                    .filter(|&v| mask & (1 << (v - 1)) != 0)
                    .collect::<Vec<_>>()
            })
            .filter(|s: &Vec<usize>| s.iter().any(|&v| inst.is_station(v)))
            .collect();
        let mut sols: Vec<Solution> = (0..2000)
            .filter_map(|_| random_solution(&inst, &mut rng))
            .take(50)
            .collect();
        sols.extend(oracle_solve(&inst).unwrap());
        assert!(!sols.is_empty());
        for sol in &sols {
            let values = incidence(sol, &form.index, form.model.num_vars());
            for set in &sets {
                for row in connectivity_rows(&inst, &form.index, set) {
                    assert!(
                        row.violation(&values) <= 1e-9,
                        "{set:?} cuts off {:?}",
                        sol.routes
                    );
                }
            }
        }
    }
}

#[test]
fn separated_cuts_are_violated_and_never_cut_the_optimum() {
    for seed in 0..8u64 {
        let inst = tiny(3, 2, 3.0, 40 + seed);
        let Some(best) = oracle_solve(&inst).unwrap() else {
            continue;
        };
        let form =
            build_formulation(&inst, FormulationVariant::F4, &BuildOptions::default()).unwrap();
        let cfg = BncConfig {
            record_events: true,
            ..BncConfig::default()
        };
        let res = solve_bnc(&form, &inst, &cfg).unwrap();
        assert!((res.incumbent_cost.unwrap() - best.total_cost).abs() < 1e-6);
        let values = incidence(&best, &form.index, form.model.num_vars());
        let t1 = inst.targets().next().unwrap();
        let d1 = inst.refuel_stations().next().unwrap();
        let mut detached = vec![0.0; values.len()];
        let arcs = [
            (0, t1),
            (t1, 0),
            (d1, t1 + 1),
            (t1 + 1, t1 + 2),
            (t1 + 2, d1),
        ];
        if arcs.iter().any(|&(i, j)| form.index.x(i, j).is_none()) {
            continue;
        }
        for (i, j) in arcs {
            detached[form.index.x(i, j).unwrap().0] = 1.0;
        }
        detached[form.index.y(d1).unwrap().0] = 1.0;
        // d0 -> t1 -> d0 plus a detached loop d1 -> t2 -> t3 -> d1
        let cuts = separate_connectivity(&inst, &form.index, &detached).unwrap();
        assert!(!cuts.is_empty());
        for cut in &cuts {
            for row in &cut.rows {
                assert!(row.violation(&detached) > 0.5);
                assert!(row.violation(&values) <= 1e-9);
            }
        }
    }
}

#[test]
fn forbidden_arc_fixing_keeps_the_optimum() {
    for seed in 0..10u64 {
        let inst = tiny(
            4 + (seed % 2) as usize,
            1 + (seed % 2) as usize,
            MULTIPLIERS[(seed % 4) as usize],
            200 + seed,
        );
        let oracle = oracle_solve(&inst).unwrap().map(|s| s.total_cost);
        for fix in [true, false] {
            let opts = BuildOptions {
                fix_forbidden_arcs: fix,
                ..BuildOptions::default()
            };
            let form = build_formulation(&inst, FormulationVariant::F4, &opts).unwrap();
            let res = solve_bnc(&form, &inst, &BncConfig::default()).unwrap();
            match (oracle, res.incumbent_cost) {
                (Some(a), Some(b)) => {
                    assert!((a - b).abs() < 1e-6, "seed {seed} fix {fix}: {a} vs {b}")
                }
                (None, None) => {}
                other => panic!("seed {seed} fix {fix}: {other:?}"),
            }
        }
    }
}

#[test]
fn relaxed_station_variables_keep_the_optimum() {
    for seed in 0..6u64 {
        let inst = tiny(4, 1 + (seed % 2) as usize, 2.5, 300 + seed);
        let oracle = oracle_solve(&inst).unwrap().map(|s| s.total_cost);
        let opts = BuildOptions {
            relax_station_vars: true,
            ..BuildOptions::default()
        };
        let form = build_formulation(&inst, FormulationVariant::F1, &opts).unwrap();
        let res = solve_bnc(&form, &inst, &BncConfig::default()).unwrap();
        assert_eq!(oracle.is_some(), res.incumbent_cost.is_some());
        if let (Some(a), Some(b)) = (oracle, res.incumbent_cost) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

fn reversed(sol: &Solution, inst: &fcavpp::Instance) -> Solution {
    let routes = sol
        .routes
        .iter()
        .map(|r| r.iter().rev().copied().collect())
        .collect();
    Solution::from_routes(routes, inst).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn route_reversal_keeps_cost_and_feasibility(seed in 0u64..10_000, n in 2usize..7, m in 1usize..3) {
        let inst = tiny(n, m.min(n), 2.75, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(sol) = (0..200).find_map(|_| random_solution(&inst, &mut rng)) {
            let back = reversed(&sol, &inst);
            prop_assert!((solution_cost(&back, &inst).unwrap() - sol.total_cost).abs() < 1e-9);
            prop_assert!(check_feasibility(&back, &inst).pass);
        }
    }

    #[test]
    fn feasible_routes_respect_capacity_on_every_prefix(seed in 0u64..10_000, n in 2usize..7) {
        let inst = tiny(n, 1, 2.5, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        if let Some(sol) = (0..200).find_map(|_| random_solution(&inst, &mut rng)) {
            for route in &sol.routes {
                let mut used = 0.0;
                for w in route.windows(2) {
                    used += inst.fuel[w[0]][w[1]];
                    prop_assert!(used <= inst.fuel_capacity + 1e-9);
                    if inst.is_station(w[1]) && w[1] != 0 {
                        used = 0.0;
                    }
                }
                let trace = fuel_trace(route, &inst);
                prop_assert!(trace.iter().all(|&f| f <= inst.fuel_capacity + 1e-9));
            }
        }
    }

    #[test]
    fn joint_scaling_preserves_feasibility(seed in 0u64..10_000, n in 2usize..6, factor in 0.25f64..8.0) {
        let inst = tiny(n, 1, 2.5, seed);
        let scaled = inst.scaled(factor);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let Some(sol) = random_solution(&inst, &mut rng) else { continue };
            let moved = Solution::from_routes(sol.routes.clone(), &scaled).unwrap();
            prop_assert!(check_feasibility(&moved, &scaled).pass);
            prop_assert!((moved.total_cost - factor * sol.total_cost).abs() < 1e-6 * (1.0 + moved.total_cost));
            // Shrinking the capacity alone can break it.
            let tight = scaled.with_fuel_capacity(inst.fuel_capacity);
            if factor > 1.0 + 1e-9 {
                let longest = sol
                    .routes
                    .iter()
                    .flat_map(|r| fuel_trace(r, &inst))
                    .fold(0.0, f64::max);
                if longest * factor > inst.fuel_capacity + 1e-6 {
                    let moved = Solution::from_routes(sol.routes.clone(), &tight).unwrap();
                    prop_assert!(!check_feasibility(&moved, &tight).pass);
                }
            }
        }
    }

    #[test]
    fn row_activity_matches_dense_evaluation(
        coeffs in proptest::collection::btree_map(0usize..30, -10.0f64..10.0, 1..10),
        values in proptest::collection::vec(-5.0f64..5.0, 30),
    ) {
        let row = ConstraintRow::new(
            coeffs.iter().map(|(&j, &a)| (VarId(j), a)).collect(),
            Sense::Le,
            1.0,
            Family::Other,
        );
        let mut dense = vec![0.0; 30];
        for (&j, &a) in &coeffs {
            dense[j] = a;
        }
        let expect: f64 = dense.iter().zip(&values).map(|(a, v)| a * v).sum();
        prop_assert!((row.activity(&values) - expect).abs() < 1e-9);
    }
}
