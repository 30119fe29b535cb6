//! Problem data, instance validation and the solution feasibility checker.
//!
//! Vertex ids follow the file convention: `0` is the depot, `1..=k` are the
//! refueling stations and `k+1..=k+n` are the targets.

use std::collections::HashSet;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for real-valued comparisons on instance data.
pub const DATA_TOL: f64 = 1e-9;
/// Additive slack allowed on the triangle inequality (floor rounding of distances).
pub const TRIANGLE_SLACK: f64 = 1.0;

pub const DEPOT: usize = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// Number of stations including the depot (`|D|`).
    pub num_stations: usize,
    pub num_targets: usize,
    pub cost: Vec<Vec<f64>>,
    pub fuel: Vec<Vec<f64>>,
    pub fuel_capacity: f64,
    pub num_vehicles: usize,
    pub cost_scale: f64,
    /// Planar coordinates per vertex, when the instance was built from a layout.
    pub coords: Option<Vec<[f64; 2]>>,
}

/// Floor of the Euclidean distance between two points.
pub fn floor_distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt().floor()
}

impl Instance {
    /// Builds an instance from coordinates with floor-Euclidean fuel and `c = K f`.
    ///
    /// `stations[0]` is the depot.
    pub fn from_coordinates(
        stations: &[[f64; 2]],
        targets: &[[f64; 2]],
        fuel_capacity: f64,
        num_vehicles: usize,
        cost_scale: f64,
    ) -> Instance {
        let coords: Vec<[f64; 2]> = stations.iter().chain(targets.iter()).copied().collect();
        let nv = coords.len();
        let mut fuel = vec![vec![0.0; nv]; nv];
        let mut cost = vec![vec![0.0; nv]; nv];
        for i in 0..nv {
            for j in 0..nv {
                if i != j {
                    fuel[i][j] = floor_distance(coords[i], coords[j]);
                    cost[i][j] = cost_scale * fuel[i][j];
                }
            }
        }
        Instance {
            num_stations: stations.len(),
            num_targets: targets.len(),
            cost,
            fuel,
            fuel_capacity,
            num_vehicles,
            cost_scale,
            coords: Some(coords),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_stations + self.num_targets
    }

    /// All stations, depot included.
    pub fn stations(&self) -> Range<usize> {
        0..self.num_stations
    }

    /// Stations other than the depot.
    pub fn refuel_stations(&self) -> Range<usize> {
        1..self.num_stations
    }

    pub fn targets(&self) -> Range<usize> {
        self.num_stations..self.num_vertices()
    }

    pub fn is_station(&self, v: usize) -> bool {
        v < self.num_stations
    }

    pub fn is_target(&self, v: usize) -> bool {
        v >= self.num_stations && v < self.num_vertices()
    }

    /// Fuel from the nearest station into `i` (`s_i`); zero for stations.
    pub fn fuel_from_nearest_station(&self, i: usize) -> f64 {
        if self.is_station(i) {
            return 0.0;
        }
        self.stations()
            .map(|d| self.fuel[d][i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Fuel from `i` to the nearest station (`t_i`); zero for stations.
    pub fn fuel_to_nearest_station(&self, i: usize) -> f64 {
        if self.is_station(i) {
            return 0.0;
        }
        self.stations()
            .map(|d| self.fuel[i][d])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn arc_cost(&self, i: usize, j: usize) -> Result<f64> {
        let nv = self.num_vertices();
        if i >= nv {
            return Err(Error::UnknownVertex(i));
        }
        if j >= nv {
            return Err(Error::UnknownVertex(j));
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        Ok(self.cost[i][j])
    }

    /// Returns a copy with fuel, cost and capacity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Instance {
        let scale = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            m.iter()
                .map(|row| row.iter().map(|v| v * factor).collect())
                .collect()
        };
        Instance {
            cost: scale(&self.cost),
            fuel: scale(&self.fuel),
            fuel_capacity: self.fuel_capacity * factor,
            ..self.clone()
        }
    }

    pub fn with_fuel_capacity(&self, fuel_capacity: f64) -> Instance {
        Instance {
            fuel_capacity,
            ..self.clone()
        }
    }

    pub fn with_vehicles(&self, num_vehicles: usize) -> Instance {
        Instance {
            num_vehicles,
            ..self.clone()
        }
    }

    pub fn to_file(&self) -> InstanceFile {
        let (stations, targets) = match &self.coords {
            Some(c) => (
                Some(c[..self.num_stations].to_vec()),
                Some(c[self.num_stations..].to_vec()),
            ),
            None => (None, None),
        };
        InstanceFile {
            targets,
            num_stations: if stations.is_none() {
                Some(self.num_stations)
            } else {
                None
            },
            stations,
            fuel_matrix: Some(self.fuel.clone()),
            cost_matrix: Some(self.cost.clone()),
            fuel_capacity: self.fuel_capacity,
            num_vehicles: self.num_vehicles,
            cost_scale: self.cost_scale,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Instance::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Instance> {
        Instance::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn from_file(file: InstanceFile) -> Result<Instance> {
        let num_stations = match (&file.stations, file.num_stations) {
            (Some(s), _) => s.len(),
            (None, Some(k)) => k,
            (None, None) => {
                return Err(Error::InvalidInstance(
                    "either `stations` or `num_stations` is required".into(),
                ))
            }
        };
        if num_stations == 0 {
            return Err(Error::InvalidInstance("no depot given".into()));
        }
        let coords = match (&file.stations, &file.targets) {
            (Some(s), Some(t)) => Some(s.iter().chain(t.iter()).copied().collect::<Vec<_>>()),
            _ => None,
        };
        let (fuel, cost) = match (file.fuel_matrix, file.cost_matrix) {
            (Some(f), Some(c)) => (f, c),
            (Some(f), None) => {
                let c = f
                    .iter()
                    .map(|row| row.iter().map(|v| v * file.cost_scale).collect())
                    .collect();
                (f, c)
            }
            (None, cost) => {
                let Some(coords) = coords.as_ref() else {
                    return Err(Error::InvalidInstance(
                        "matrices absent and coordinates incomplete".into(),
                    ));
                };
                let built = Instance::from_coordinates(
                    &coords[..num_stations],
                    &coords[num_stations..],
                    file.fuel_capacity,
                    file.num_vehicles,
                    file.cost_scale,
                );
                (built.fuel, cost.unwrap_or(built.cost))
            }
        };
        let nv = fuel.len();
        if nv < num_stations {
            return Err(Error::InvalidInstance(format!(
                "fuel matrix has {nv} rows but {num_stations} stations were given"
            )));
        }
        let num_targets = nv - num_stations;
        if let Some(t) = &file.targets {
            if t.len() != num_targets {
                return Err(Error::InvalidInstance(format!(
                    "{} target coordinates but matrix implies {num_targets} targets",
                    t.len()
                )));
            }
        }
        Ok(Instance {
            num_stations,
            num_targets,
            cost,
            fuel,
            fuel_capacity: file.fuel_capacity,
            num_vehicles: file.num_vehicles,
            cost_scale: file.cost_scale,
            coords,
        })
    }
}

fn default_cost_scale() -> f64 {
    1.0
}

/// On-disk JSON layout of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stations: Option<Vec<[f64; 2]>>,
    /// Only used when station coordinates are absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_stations: Option<usize>,
    #[serde(default)]
    pub fuel_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub cost_matrix: Option<Vec<Vec<f64>>>,
    pub fuel_capacity: f64,
    pub num_vehicles: usize,
    #[serde(default = "default_cost_scale")]
    pub cost_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Dimension,
    NegativeData,
    Asymmetry,
    Proportionality,
    Triangle,
    Reachability,
    BadParameter,
    RouteCount,
    RouteEndpoints,
    DepotInterior,
    UnknownVertex,
    SelfLoop,
    RepeatedArc,
    TargetUncovered,
    FuelExceeded,
    CostMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub vertices: Vec<usize>,
    pub magnitude: f64,
}

impl Violation {
    fn new(kind: ViolationKind, vertices: Vec<usize>, magnitude: f64) -> Self {
        Violation {
            kind,
            vertices,
            magnitude,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
    /// Triangle-inequality breaches beyond the rounding slack. Not fatal.
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    /// True when any violation makes the data structurally unusable
    /// (anything other than reachability).
    pub fn has_structural_errors(&self) -> bool {
        self.violations
            .iter()
            .any(|v| v.kind != ViolationKind::Reachability)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
}

pub fn validate_instance(inst: &Instance) -> ValidationReport {
    use ViolationKind::*;
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    let nv = inst.num_vertices();

    let square = |m: &Vec<Vec<f64>>| m.len() == nv && m.iter().all(|r| r.len() == nv);
    if !square(&inst.cost) || !square(&inst.fuel) {
        violations.push(Violation::new(Dimension, vec![], nv as f64));
        return ValidationReport {
            pass: false,
            violations,
            warnings,
        };
    }
    if inst.num_stations < 1 || inst.num_targets < 1 {
        violations.push(Violation::new(BadParameter, vec![], 0.0));
    }
    if !(inst.fuel_capacity > 0.0) {
        violations.push(Violation::new(BadParameter, vec![], inst.fuel_capacity));
    }
    if inst.num_vehicles < 1 {
        violations.push(Violation::new(BadParameter, vec![], 0.0));
    }
    if !(inst.cost_scale > 0.0) {
        violations.push(Violation::new(BadParameter, vec![], inst.cost_scale));
    }

    for i in 0..nv {
        for j in 0..nv {
            if i == j {
                continue;
            }
            let (c, f) = (inst.cost[i][j], inst.fuel[i][j]);
            if !(c >= 0.0) || !(f >= 0.0) {
                violations.push(Violation::new(NegativeData, vec![i, j], c.min(f)));
            }
            if i < j {
                let gap = (c - inst.cost[j][i]).abs();
                if gap > DATA_TOL {
                    violations.push(Violation::new(Asymmetry, vec![i, j], gap));
                }
            }
            let gap = (c - inst.cost_scale * f).abs();
            if gap > DATA_TOL {
                violations.push(Violation::new(Proportionality, vec![i, j], gap));
            }
        }
    }

    for i in 0..nv {
        for k in 0..nv {
            if i == k {
                continue;
            }
            for j in 0..nv {
                if j == i || j == k {
                    continue;
                }
                let excess = inst.cost[i][k] - inst.cost[i][j] - inst.cost[j][k];
                if excess > TRIANGLE_SLACK + DATA_TOL {
                    warnings.push(Violation::new(Triangle, vec![i, j, k], excess));
                }
            }
        }
    }

    for i in inst.targets() {
        let need = inst.fuel_from_nearest_station(i) + inst.fuel_to_nearest_station(i);
        if need > inst.fuel_capacity + DATA_TOL {
            violations.push(Violation::new(
                Reachability,
                vec![i],
                need - inst.fuel_capacity,
            ));
        }
    }

    ValidationReport {
        pass: violations.is_empty(),
        violations,
        warnings,
    }
}

/// Per-vehicle routes with the fuel consumed since the last refuel at each stop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<Vec<usize>>,
    pub total_cost: f64,
    #[serde(skip)]
    pub fuel_trace: Vec<Vec<f64>>,
}

impl Solution {
    /// Builds a solution, computing its cost and fuel trace.
    pub fn from_routes(routes: Vec<Vec<usize>>, inst: &Instance) -> Result<Solution> {
        let total_cost = route_set_cost(&routes, inst)?;
        let fuel_trace = routes.iter().map(|r| fuel_trace(r, inst)).collect();
        Ok(Solution {
            routes,
            total_cost,
            fuel_trace,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a solution file; the fuel trace is recomputed against `inst`
    /// when every vertex id is valid.
    pub fn from_json(text: &str, inst: &Instance) -> Result<Solution> {
        let mut sol: Solution = serde_json::from_str(text)?;
        let nv = inst.num_vertices();
        if sol.routes.iter().flatten().all(|&v| v < nv) {
            sol.fuel_trace = sol.routes.iter().map(|r| fuel_trace(r, inst)).collect();
        }
        Ok(sol)
    }
}

/// Fuel consumed since the last refuel at each position of `route`.
/// Stations other than the depot reset the counter to zero.
pub fn fuel_trace(route: &[usize], inst: &Instance) -> Vec<f64> {
    let mut trace = Vec::with_capacity(route.len());
    let mut used = 0.0;
    for (pos, &v) in route.iter().enumerate() {
        if pos > 0 {
            used += inst.fuel[route[pos - 1]][v];
        }
        if pos > 0 && v != DEPOT && inst.is_station(v) {
            used = 0.0;
        }
        trace.push(used);
    }
    trace
}

fn route_set_cost(routes: &[Vec<usize>], inst: &Instance) -> Result<f64> {
    let mut total = 0.0;
    for route in routes {
        for w in route.windows(2) {
            total += inst.arc_cost(w[0], w[1])?;
        }
        if let [only] = route.as_slice() {
            if *only >= inst.num_vertices() {
                return Err(Error::UnknownVertex(*only));
            }
        }
    }
    Ok(total)
}

/// Sum of arc costs over all routes.
pub fn solution_cost(sol: &Solution, inst: &Instance) -> Result<f64> {
    route_set_cost(&sol.routes, inst)
}

pub fn check_feasibility(sol: &Solution, inst: &Instance) -> FeasibilityReport {
    use ViolationKind::*;
    let mut violations = Vec::new();
    let nv = inst.num_vertices();
    let cap = inst.fuel_capacity;

    if sol.routes.len() != inst.num_vehicles {
        violations.push(Violation::new(
            RouteCount,
            vec![],
            sol.routes.len() as f64 - inst.num_vehicles as f64,
        ));
    }

    let mut covered = vec![false; nv];
    let mut arcs_seen = HashSet::new();
    let mut ids_ok = true;
    for (r, route) in sol.routes.iter().enumerate() {
        if route.len() < 2 || route[0] != DEPOT || route[route.len() - 1] != DEPOT {
            violations.push(Violation::new(RouteEndpoints, vec![r], 0.0));
        }
        for (pos, &v) in route.iter().enumerate() {
            if v >= nv {
                violations.push(Violation::new(UnknownVertex, vec![v], 0.0));
                ids_ok = false;
                continue;
            }
            covered[v] = true;
            if v == DEPOT && pos > 0 && pos + 1 < route.len() {
                violations.push(Violation::new(DepotInterior, vec![r, pos], 0.0));
            }
        }
        if !ids_ok {
            continue;
        }
        let mut used = 0.0;
        for w in route.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == b {
                violations.push(Violation::new(SelfLoop, vec![a], 0.0));
                continue;
            }
            if !arcs_seen.insert((a, b)) {
                violations.push(Violation::new(RepeatedArc, vec![a, b], 0.0));
            }
            used += inst.fuel[a][b];
            if used > cap + DATA_TOL {
                violations.push(Violation::new(FuelExceeded, vec![r, b], used - cap));
            }
            if b != DEPOT && inst.is_station(b) {
                used = 0.0;
            }
        }
    }

    for t in inst.targets() {
        if !covered[t] {
            violations.push(Violation::new(TargetUncovered, vec![t], 1.0));
        }
    }

    if ids_ok {
        let recomputed: f64 = sol
            .routes
            .iter()
            .flat_map(|r| r.windows(2))
            .map(|w| inst.cost[w[0]][w[1]])
            .sum();
        let gap = (recomputed - sol.total_cost).abs();
        if gap > 1e-6 {
            violations.push(Violation::new(CostMismatch, vec![], gap));
        }
    }

    FeasibilityReport {
        pass: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::canonical_line_instance;

    fn two_vertex() -> Instance {
        Instance {
            num_stations: 1,
            num_targets: 1,
            cost: vec![vec![0.0, 3.0], vec![3.0, 0.0]],
            fuel: vec![vec![0.0, 3.0], vec![3.0, 0.0]],
            fuel_capacity: 10.0,
            num_vehicles: 1,
            cost_scale: 1.0,
            coords: None,
        }
    }

    #[test]
    fn two_vertex_instance_passes() {
        let report = validate_instance(&two_vertex());
        assert!(report.pass, "{report:?}");
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn unreachable_target_reported() {
        // s_i + t_i = 6, capacity 5 = 6 - 1.
        let inst = two_vertex().with_fuel_capacity(5.0);
        let report = validate_instance(&inst);
        assert!(!report.pass);
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.kind, ViolationKind::Reachability);
        assert_eq!(v.vertices, vec![1]);
        assert!((v.magnitude - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_violation_beyond_slack() {
        let c = vec![
            vec![0.0, 3.0, 10.0],
            vec![3.0, 0.0, 4.0],
            vec![10.0, 4.0, 0.0],
        ];
        let inst = Instance {
            num_stations: 1,
            num_targets: 2,
            cost: c.clone(),
            fuel: c,
            fuel_capacity: 100.0,
            num_vehicles: 1,
            cost_scale: 1.0,
            coords: None,
        };
        let report = validate_instance(&inst);
        let tri: Vec<_> = report
            .warnings
            .iter()
            .filter(|w| w.vertices == vec![0, 1, 2])
            .collect();
        assert_eq!(tri.len(), 1);
        assert!((tri[0].magnitude - 3.0).abs() < 1e-12);
        assert!(report.pass, "triangle breaches are warnings only");
    }

    #[test]
    fn asymmetry_and_proportionality_detected() {
        let mut inst = two_vertex();
        inst.cost[0][1] = 4.0;
        let report = validate_instance(&inst);
        let kinds: Vec<_> = report.violations.iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::Asymmetry));
        assert!(kinds.contains(&ViolationKind::Proportionality));
    }

    #[test]
    fn bad_dimensions_reported() {
        let mut inst = two_vertex();
        inst.fuel.pop();
        let report = validate_instance(&inst);
        assert_eq!(report.violations[0].kind, ViolationKind::Dimension);
    }

    #[test]
    fn canonical_route_with_refuel_is_feasible() {
        let inst = canonical_line_instance(8.0);
        let sol = Solution::from_routes(vec![vec![0, 2, 3, 1, 0]], &inst).unwrap();
        let report = check_feasibility(&sol, &inst);
        assert!(report.pass, "{report:?}");
        assert_eq!(sol.fuel_trace[0], vec![0.0, 2.0, 6.0, 0.0, 4.0]);
        assert_eq!(sol.total_cost, 12.0);
    }

    #[test]
    fn canonical_route_without_refuel_runs_dry() {
        let inst = canonical_line_instance(8.0);
        let sol = Solution::from_routes(vec![vec![0, 2, 3, 0]], &inst).unwrap();
        let report = check_feasibility(&sol, &inst);
        assert!(!report.pass);
        let fuel: Vec<_> = report
            .violations
            .iter()
            .filter(|v| v.kind == ViolationKind::FuelExceeded)
            .collect();
        assert_eq!(fuel.len(), 1);
        assert_eq!(fuel[0].vertices, vec![0, 0]);
        assert!((fuel[0].magnitude - 4.0).abs() < 1e-12, "12 > 8");
    }

    #[test]
    fn route_count_mismatch() {
        let inst = canonical_line_instance(8.0).with_vehicles(2);
        let sol = Solution::from_routes(vec![vec![0, 2, 3, 1, 0]], &inst).unwrap();
        let report = check_feasibility(&sol, &inst);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::RouteCount));
    }

    #[test]
    fn depot_does_not_refuel_mid_route() {
        let inst = canonical_line_instance(8.0);
        let sol = Solution::from_routes(vec![vec![0, 2, 0, 3, 1, 0]], &inst).unwrap();
        let report = check_feasibility(&sol, &inst);
        let kinds: Vec<_> = report.violations.iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::DepotInterior));
        assert!(kinds.contains(&ViolationKind::FuelExceeded));
    }

    #[test]
    fn repeated_arc_and_uncovered_target() {
        let inst = canonical_line_instance(20.0).with_vehicles(2);
        let sol = Solution::from_routes(vec![vec![0, 1, 0], vec![0, 1, 0]], &inst).unwrap();
        let report = check_feasibility(&sol, &inst);
        let kinds: Vec<_> = report.violations.iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::RepeatedArc));
        assert_eq!(
            kinds
                .iter()
                .filter(|k| **k == ViolationKind::TargetUncovered)
                .count(),
            2
        );
    }

    #[test]
    fn cost_mismatch_detected() {
        let inst = canonical_line_instance(8.0);
        let mut sol = Solution::from_routes(vec![vec![0, 2, 3, 1, 0]], &inst).unwrap();
        sol.total_cost = 11.0;
        let report = check_feasibility(&sol, &inst);
        assert_eq!(report.violations[0].kind, ViolationKind::CostMismatch);
    }

    #[test]
    fn solution_cost_examples() {
        let inst = canonical_line_instance(8.0);
        let sol = Solution {
            routes: vec![vec![0, 2, 3, 1, 0]],
            total_cost: 0.0,
            fuel_trace: vec![],
        };
        assert_eq!(solution_cost(&sol, &inst).unwrap(), 12.0);
        let single = Solution {
            routes: vec![vec![0, 2, 0]],
            ..sol.clone()
        };
        assert_eq!(solution_cost(&single, &inst).unwrap(), 4.0);
        let empty = Solution {
            routes: vec![vec![0, 0]],
            ..sol.clone()
        };
        assert!(matches!(
            solution_cost(&empty, &inst),
            Err(Error::SelfLoop(0))
        ));
        let unknown = Solution {
            routes: vec![vec![0, 9, 0]],
            ..sol
        };
        assert!(matches!(
            solution_cost(&unknown, &inst),
            Err(Error::UnknownVertex(9))
        ));
    }

    #[test]
    fn json_round_trip_preserves_instance() {
        let inst = canonical_line_instance(8.0);
        let back = Instance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(inst, back);

        let mut bare = two_vertex();
        bare.coords = None;
        let back = Instance::from_json(&bare.to_json().unwrap()).unwrap();
        assert_eq!(bare, back);
    }

    #[test]
    fn coordinates_only_file_builds_matrices() {
        let text = r#"{"stations": [[0,0],[4,0]], "targets": [[2,0],[6,0]],
                      "fuel_capacity": 8, "num_vehicles": 1}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst, canonical_line_instance(8.0));
    }
}
