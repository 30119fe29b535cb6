//! Exhaustive optimum for tiny instances, used to check the MILP solvers.
//!
//! Routes are grown one vertex at a time by a depth-first branch and bound.
//! Arcs may be used at most once overall, as in the arc-variable models, and
//! routes are ordered by their smallest target so that vehicle permutations
//! are explored once. Between two targets a vehicle may hop through several
//! stations; such chains never repeat a station, since cutting the loop out
//! keeps the fuel state and frees arcs.
//!
//! Pruning uses the cost-to-go of a relaxed search that forgets which arcs
//! were used and rounds the fuel consumed down to a grid. Using less fuel
//! never makes the completion dearer, so the relaxed value is a valid lower
//! bound.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::instance::{Instance, Solution, DEPOT};

pub const MAX_TARGETS: usize = 8;
pub const MAX_VEHICLES: usize = 3;
pub const MAX_STATIONS: usize = 8;

const FUEL_LEVELS: f64 = 64.0;
const EPS: f64 = 1e-9;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct BoundKey {
    cur: u8,
    fuel_level: u16,
    visited: u16,
    routes_left: u8,
    chain: u8,
}

#[derive(Debug, Clone, Copy)]
struct State {
    cur: usize,
    fuel: f64,
    visited: u16,
    routes_left: usize,
    /// Lowest target unvisited at the start of the current route.
    required: usize,
    /// Stations of the chain the vehicle is currently in.
    chain: u8,
    arcs: u64,
}

struct Search<'a> {
    inst: &'a Instance,
    k: usize,
    full: u16,
    grid: f64,
    to_station: Vec<f64>,
    bounds: HashMap<BoundKey, f64>,
    best_cost: f64,
    best_routes: Option<Vec<Vec<usize>>>,
    path: Vec<usize>,
}

impl Search<'_> {
    fn bit(&self, t: usize) -> u16 {
        1 << (t - self.k)
    }

    fn arc_bit(&self, a: usize, b: usize) -> u64 {
        1 << (a * self.k + b)
    }

    fn level(&self, fuel: f64) -> u16 {
        if self.grid <= 0.0 {
            0
        } else {
            ((fuel / self.grid) + EPS).floor() as u16
        }
    }

    /// Moves allowed from `s`, without the arc-uniqueness check.
    fn moves(&self, s: &State) -> Vec<(usize, State)> {
        let inst = self.inst;
        let cap = inst.fuel_capacity;
        let mut out = Vec::new();
        if s.cur == DEPOT && s.routes_left == 0 {
            return out;
        }
        let required = if s.cur == DEPOT {
            inst.targets()
                .find(|&t| s.visited & self.bit(t) == 0)
                .unwrap_or(NONE)
        } else {
            s.required
        };
        for next in 0..inst.num_vertices() {
            if next == s.cur {
                continue;
            }
            let used = s.fuel + inst.fuel[s.cur][next];
            if used > cap + EPS {
                continue;
            }
            let child = if inst.is_target(next) {
                if s.visited & self.bit(next) != 0 || used + self.to_station[next] > cap + EPS {
                    continue;
                }
                State {
                    cur: next,
                    fuel: used,
                    visited: s.visited | self.bit(next),
                    required,
                    chain: 0,
                    ..*s
                }
            } else if next == DEPOT {
                if required != NONE && s.visited & self.bit(required) == 0 {
                    continue;
                }
                State {
                    cur: DEPOT,
                    fuel: 0.0,
                    routes_left: s.routes_left - 1,
                    required: NONE,
                    chain: 0,
                    ..*s
                }
            } else {
                if s.chain & (1 << next) != 0 {
                    continue;
                }
                State {
                    cur: next,
                    fuel: 0.0,
                    required,
                    chain: s.chain | (1 << next),
                    ..*s
                }
            };
            out.push((next, child));
        }
        out
    }

    fn lower_bound(&mut self, s: &State) -> f64 {
        if s.cur == DEPOT && s.routes_left == 0 {
            return if s.visited == self.full {
                0.0
            } else {
                f64::INFINITY
            };
        }
        let level = self.level(s.fuel);
        let key = BoundKey {
            cur: s.cur as u8,
            fuel_level: level,
            visited: s.visited,
            routes_left: s.routes_left as u8,
            chain: s.chain,
        };
        if let Some(&v) = self.bounds.get(&key) {
            return v;
        }
        let relaxed = State {
            fuel: level as f64 * self.grid,
            required: NONE,
            ..*s
        };
        let mut best = f64::INFINITY;
        for (next, child) in self.moves(&relaxed) {
            let v = self.inst.cost[s.cur][next] + self.lower_bound(&child);
            best = best.min(v);
        }
        self.bounds.insert(key, best);
        best
    }

    fn dfs(&mut self, s: State, cost: f64) {
        let inst = self.inst;
        if s.cur == DEPOT && s.routes_left == 0 {
            if s.visited == self.full && cost < self.best_cost - EPS {
                self.best_cost = cost;
                let mut routes = Vec::new();
                let mut route = Vec::new();
                for &v in &self.path {
                    route.push(v);
                    if v == DEPOT && route.len() > 1 {
                        routes.push(std::mem::take(&mut route));
                        route.push(DEPOT);
                    }
                }
                self.best_routes = Some(routes);
            }
            return;
        }
        let mut children: Vec<(f64, usize, State)> = Vec::new();
        for (next, mut child) in self.moves(&s) {
            if inst.is_station(s.cur) && inst.is_station(next) {
                let b = self.arc_bit(s.cur, next);
                if s.arcs & b != 0 {
                    continue;
                }
                child.arcs |= b;
            }
            let step = cost + inst.cost[s.cur][next];
            let lb = step + self.lower_bound(&child);
            if lb < self.best_cost - EPS {
                children.push((lb, next, child));
            }
        }
        children.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (lb, next, child) in children {
            if lb >= self.best_cost - EPS {
                break;
            }
            self.path.push(next);
            self.dfs(child, cost + inst.cost[s.cur][next]);
            self.path.pop();
        }
    }
}

/// Optimal solution by exhaustive search, or `None` when the instance is
/// infeasible. Limited to 8 targets, 3 vehicles and 8 stations.
pub fn oracle_solve(inst: &Instance) -> Result<Option<Solution>> {
    if inst.num_targets > MAX_TARGETS {
        return Err(Error::OracleLimit(format!(
            "{} targets (limit {MAX_TARGETS})",
            inst.num_targets
        )));
    }
    if inst.num_vehicles > MAX_VEHICLES || inst.num_vehicles == 0 {
        return Err(Error::OracleLimit(format!(
            "{} vehicles (limit 1..={MAX_VEHICLES})",
            inst.num_vehicles
        )));
    }
    if inst.num_stations > MAX_STATIONS {
        return Err(Error::OracleLimit(format!(
            "{} stations (limit {MAX_STATIONS})",
            inst.num_stations
        )));
    }
    let mut search = Search {
        inst,
        k: inst.num_stations,
        full: ((1u32 << inst.num_targets) - 1) as u16,
        grid: inst.fuel_capacity.max(0.0) / FUEL_LEVELS,
        to_station: (0..inst.num_vertices())
            .map(|i| inst.fuel_to_nearest_station(i))
            .collect(),
        bounds: HashMap::new(),
        best_cost: f64::INFINITY,
        best_routes: None,
        path: vec![DEPOT],
    };
    let root = State {
        cur: DEPOT,
        fuel: 0.0,
        visited: 0,
        routes_left: inst.num_vehicles,
        required: NONE,
        chain: 0,
        arcs: 0,
    };
    search.dfs(root, 0.0);
    log::debug!("oracle bound table holds {} states", search.bounds.len());
    match search.best_routes {
        Some(routes) => Solution::from_routes(routes, inst).map(Some),
        None => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::canonical_line_instance;
    use crate::instance::check_feasibility;

    #[test]
    fn canonical_with_refuel() {
        let inst = canonical_line_instance(8.0);
        let sol = oracle_solve(&inst).unwrap().unwrap();
        assert_eq!(sol.total_cost, 12.0);
        assert!(check_feasibility(&sol, &inst).pass);
        assert!(
            sol.routes[0].contains(&1),
            "needs the station: {:?}",
            sol.routes
        );
    }

    #[test]
    fn canonical_direct_tour() {
        let inst = canonical_line_instance(20.0);
        let sol = oracle_solve(&inst).unwrap().unwrap();
        assert_eq!(sol.total_cost, 12.0);
        assert!(check_feasibility(&sol, &inst).pass);
    }

    #[test]
    fn unreachable_target() {
        let inst = canonical_line_instance(3.0);
        assert!(oracle_solve(&inst).unwrap().is_none());
    }

    #[test]
    fn more_vehicles_than_targets_uses_station_loops() {
        let inst = canonical_line_instance(20.0).with_vehicles(3);
        let sol = oracle_solve(&inst).unwrap().unwrap();
        assert_eq!(sol.routes.len(), 3);
        assert!(check_feasibility(&sol, &inst).pass);
        // two single-target loops (4 + 12) and d0 -> d1 -> d0 (8)
        assert_eq!(sol.total_cost, 24.0);
    }

    #[test]
    fn station_arcs_are_not_reused() {
        // Both vehicles would like to return through d1; only one may.
        let inst = Instance::from_coordinates(
            &[[0.0, 0.0], [10.0, 0.0], [10.0, 3.0]],
            &[[15.0, 1.0], [15.0, -1.0]],
            12.0,
            2,
            1.0,
        );
        let sol = oracle_solve(&inst).unwrap().unwrap();
        assert!(check_feasibility(&sol, &inst).pass, "{:?}", sol.routes);
        // one route through both targets (32) and a station-only loop (20)
        assert_eq!(sol.total_cost, 52.0);
    }

    #[test]
    fn limits_enforced() {
        let big = Instance::from_coordinates(
            &[[0.0, 0.0]],
            &(0..9).map(|k| [k as f64, 1.0]).collect::<Vec<_>>(),
            100.0,
            1,
            1.0,
        );
        assert!(matches!(oracle_solve(&big), Err(Error::OracleLimit(_))));
        let many = canonical_line_instance(8.0).with_vehicles(4);
        assert!(matches!(oracle_solve(&many), Err(Error::OracleLimit(_))));
    }
}
