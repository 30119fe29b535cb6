#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

use fcavpp::formulation::VarIndex;
use fcavpp::generator::{generate_instance, GeneratorConfig};
use fcavpp::instance::DEPOT;
use fcavpp::{check_feasibility, Instance, Solution};

pub const MULTIPLIERS: [f64; 4] = [2.25, 2.5, 2.75, 3.0];

/// Small generated instance: `n` targets around the default stations.
pub fn tiny(n: usize, m: usize, mu: f64, seed: u64) -> Instance {
    generate_instance(&GeneratorConfig {
        num_targets: n,
        num_vehicles: m,
        fuel_multiplier: mu,
        seed,
        ..GeneratorConfig::default()
    })
    .unwrap()
}

/// Appends a fuel-feasible hop from `route`'s last vertex to `next`,
/// through one random station when the direct arc runs dry.
fn hop(
    inst: &Instance,
    route: &mut Vec<usize>,
    fuel: &mut f64,
    next: usize,
    rng: &mut impl Rng,
) -> bool {
    let cap = inst.fuel_capacity;
    let cur = *route.last().unwrap();
    let reserve = if inst.is_target(next) {
        inst.fuel_to_nearest_station(next)
    } else {
        0.0
    };
    if *fuel + inst.fuel[cur][next] + reserve <= cap + 1e-9 && !rng.gen_bool(0.15) {
        route.push(next);
        *fuel = if inst.is_target(next) {
            *fuel + inst.fuel[cur][next]
        } else {
            0.0
        };
        return true;
    }
    let mut stations: Vec<usize> = inst
        .refuel_stations()
        .filter(|&d| d != cur && *fuel + inst.fuel[cur][d] <= cap + 1e-9)
        .filter(|&d| d != next && inst.fuel[d][next] + reserve <= cap + 1e-9)
        .collect();
    stations.shuffle(rng);
    let Some(&d) = stations.first() else {
        return false;
    };
    route.push(d);
    route.push(next);
    *fuel = if inst.is_target(next) {
        inst.fuel[d][next]
    } else {
        0.0
    };
    true
}

/// A random feasible solution, or `None` when the attempt got stuck.
pub fn random_solution(inst: &Instance, rng: &mut impl Rng) -> Option<Solution> {
    let m = inst.num_vehicles;
    let mut targets: Vec<usize> = inst.targets().collect();
    targets.shuffle(rng);
    // Every vehicle gets at least one target.
    if targets.len() < m {
        return None;
    }
    let mut cuts: Vec<usize> = (1..targets.len()).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(m - 1).collect();
    cuts.sort_unstable();
    let mut routes = Vec::new();
    let mut start = 0;
    for end in cuts.into_iter().chain([targets.len()]) {
        let mut route = vec![DEPOT];
        let mut fuel = 0.0;
        for &t in &targets[start..end] {
            if !hop(inst, &mut route, &mut fuel, t, rng) {
                return None;
            }
        }
        if !hop(inst, &mut route, &mut fuel, DEPOT, rng) {
            return None;
        }
        routes.push(route);
        start = end;
    }
    let sol = Solution::from_routes(routes, inst).ok()?;
    check_feasibility(&sol, inst).pass.then_some(sol)
}

/// Arc and station-usage values of `sol` in the variable space of `index`.
pub fn incidence(sol: &Solution, index: &VarIndex, num_vars: usize) -> Vec<f64> {
    let mut values = vec![0.0; num_vars];
    for route in &sol.routes {
        for w in route.windows(2) {
            let var = index.x(w[0], w[1]).expect("arc variable");
            values[var.0] += 1.0;
        }
        for &v in route {
            if let Some(y) = index.y(v) {
                values[y.0] = 1.0;
            }
        }
    }
    values
}
