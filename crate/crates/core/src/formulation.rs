//! Builders for the four MILP formulations and route extraction from
//! integer solutions.
//!
//! F1 and F2 are arc based: a flow variable `z_ij` carries the fuel consumed
//! on reaching `j` through `(i, j)`. F3 and F4 are node based: a potential
//! `u_i` per target plays the same role. F2 and F4 are the strengthened
//! versions of F1 and F3; F4 additionally fixes arcs that no fuel-feasible
//! route can use.
//!
//! The depot-connectivity family `x(delta+(S)) >= y_d` is exponential. It is
//! left out of the stored rows unless explicitly enumerated.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::instance::{Instance, Solution, DEPOT};
use crate::milp::{ConstraintRow, Family, MilpModel, ModelMetadata, Sense, VarId, VarKind};

/// Largest vertex count for which connectivity rows may be enumerated.
pub const MAX_ENUMERATION_VERTICES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FormulationVariant {
    F1,
    F2,
    F3,
    F4,
}

impl FormulationVariant {
    pub const ALL: [FormulationVariant; 4] = [
        FormulationVariant::F1,
        FormulationVariant::F2,
        FormulationVariant::F3,
        FormulationVariant::F4,
    ];

    pub fn is_arc_based(self) -> bool {
        matches!(self, FormulationVariant::F1 | FormulationVariant::F2)
    }
}

impl fmt::Display for FormulationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FormulationVariant::F1 => "f1",
            FormulationVariant::F2 => "f2",
            FormulationVariant::F3 => "f3",
            FormulationVariant::F4 => "f4",
        };
        f.write_str(s)
    }
}

impl FromStr for FormulationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f1" => Ok(FormulationVariant::F1),
            "f2" => Ok(FormulationVariant::F2),
            "f3" => Ok(FormulationVariant::F3),
            "f4" => Ok(FormulationVariant::F4),
            other => Err(Error::InvalidConfig(format!(
                "unknown formulation `{other}`"
            ))),
        }
    }
}

/// Fuel parameters derived from an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParameters {
    /// `t_i`: least fuel from `i` to any station (0 at stations).
    pub to_station: Vec<f64>,
    /// `s_i`: least fuel from any station to `i` (0 at stations).
    pub from_station: Vec<f64>,
    /// `M_ij = F - s_j - t_i + f_ij`, filled for target pairs only.
    pub big_m: Vec<Vec<f64>>,
    /// Arcs with `s_i + f_ij + t_j > F`.
    pub forbidden: Vec<Vec<bool>>,
}

impl DerivedParameters {
    pub fn is_forbidden(&self, i: usize, j: usize) -> bool {
        self.forbidden[i][j]
    }
}

pub fn derived_params(inst: &Instance) -> DerivedParameters {
    let nv = inst.num_vertices();
    let cap = inst.fuel_capacity;
    let to_station: Vec<f64> = (0..nv).map(|i| inst.fuel_to_nearest_station(i)).collect();
    let from_station: Vec<f64> = (0..nv).map(|i| inst.fuel_from_nearest_station(i)).collect();
    let mut big_m = vec![vec![0.0; nv]; nv];
    let mut forbidden = vec![vec![false; nv]; nv];
    for i in 0..nv {
        for j in 0..nv {
            if i == j {
                continue;
            }
            let f = inst.fuel[i][j];
            forbidden[i][j] = from_station[i] + f + to_station[j] > cap + 1e-9;
            if inst.is_target(i) && inst.is_target(j) {
                big_m[i][j] = cap - from_station[j] - to_station[i] + f;
            }
        }
    }
    DerivedParameters {
        to_station,
        from_station,
        big_m,
        forbidden,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Store every connectivity row (only for tiny instances).
    pub enumerate_connectivity: bool,
    /// Drop the integrality flag on `y_d` in F1 as well. The other
    /// formulations always carry continuous `y_d`.
    pub relax_station_vars: bool,
    /// Fix arcs that no route can use to zero (F4 only).
    pub fix_forbidden_arcs: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            enumerate_connectivity: false,
            relax_station_vars: false,
            fix_forbidden_arcs: true,
        }
    }
}

/// Variable lookup tables of a built formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct VarIndex {
    nv: usize,
    x: Vec<Option<VarId>>,
    z: Vec<Option<VarId>>,
    y: Vec<Option<VarId>>,
    u: Vec<Option<VarId>>,
}

impl VarIndex {
    pub fn num_vertices(&self) -> usize {
        self.nv
    }

    pub fn x(&self, i: usize, j: usize) -> Option<VarId> {
        self.x[i * self.nv + j]
    }

    pub fn z(&self, i: usize, j: usize) -> Option<VarId> {
        self.z[i * self.nv + j]
    }

    pub fn y(&self, d: usize) -> Option<VarId> {
        self.y[d]
    }

    pub fn u(&self, i: usize) -> Option<VarId> {
        self.u[i]
    }

    /// All arc variables with their endpoints, in registry order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, VarId)> + '_ {
        (0..self.nv * self.nv).filter_map(move |k| self.x[k].map(|v| (k / self.nv, k % self.nv, v)))
    }

    /// Branching candidates in priority order: arcs, then stations.
    pub fn integer_candidates(&self) -> Vec<VarId> {
        let mut out: Vec<VarId> = self.x.iter().flatten().copied().collect();
        out.extend(self.y.iter().flatten().copied());
        out
    }
}

#[derive(Debug, Clone)]
pub struct Formulation {
    pub variant: FormulationVariant,
    pub model: MilpModel,
    pub index: VarIndex,
    pub params: DerivedParameters,
}

/// Deterministic fingerprint of the instance data.
pub fn instance_fingerprint(inst: &Instance) -> String {
    let text = inst.to_json().unwrap_or_default();
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Rows `x(delta+(S)) - y_d >= 0`, one per station in `S`.
pub fn connectivity_rows(inst: &Instance, index: &VarIndex, set: &[usize]) -> Vec<ConstraintRow> {
    let nv = inst.num_vertices();
    let mut inside = vec![false; nv];
    for &v in set {
        inside[v] = true;
    }
    let mut leaving = Vec::new();
    for &i in set {
        for j in 0..nv {
            if !inside[j] {
                if let Some(x) = index.x(i, j) {
                    leaving.push((x, 1.0));
                }
            }
        }
    }
    leaving.sort_by_key(|&(v, _)| v);
    let mut stations: Vec<usize> = set
        .iter()
        .copied()
        .filter(|&v| v != DEPOT && inst.is_station(v))
        .collect();
    stations.sort_unstable();
    stations
        .into_iter()
        .filter_map(|d| {
            let y = index.y(d)?;
            let mut coeffs = leaving.clone();
            coeffs.push((y, -1.0));
            Some(ConstraintRow::new(
                coeffs,
                Sense::Ge,
                0.0,
                Family::Connectivity,
            ))
        })
        .collect()
}

pub fn build_formulation(
    inst: &Instance,
    variant: FormulationVariant,
    opts: &BuildOptions,
) -> Result<Formulation> {
    use FormulationVariant::*;
    let nv = inst.num_vertices();
    if opts.enumerate_connectivity && nv > MAX_ENUMERATION_VERTICES {
        return Err(Error::EnumerationTooLarge(nv));
    }
    let params = derived_params(inst);
    let cap = inst.fuel_capacity;
    let m = inst.num_vehicles as f64;
    let mut model = MilpModel::new();
    let mut index = VarIndex {
        nv,
        x: vec![None; nv * nv],
        z: vec![None; nv * nv],
        y: vec![None; nv],
        u: vec![None; nv],
    };

    for i in 0..nv {
        for j in 0..nv {
            if i != j {
                let id = model.add_binary(VarKind::Arc(i, j), inst.cost[i][j])?;
                index.x[i * nv + j] = Some(id);
            }
        }
    }
    if variant.is_arc_based() {
        for i in 0..nv {
            for j in 0..nv {
                if i != j {
                    let id =
                        model.add_variable(VarKind::Flow(i, j), 0.0, f64::INFINITY, false, 0.0)?;
                    index.z[i * nv + j] = Some(id);
                }
            }
        }
    }
    let binary_y = variant == F1 && !opts.relax_station_vars;
    for d in inst.refuel_stations() {
        index.y[d] = Some(model.add_variable(VarKind::Station(d), 0.0, 1.0, binary_y, 0.0)?);
    }
    if !variant.is_arc_based() {
        for i in inst.targets() {
            index.u[i] = Some(model.add_variable(VarKind::Potential(i), 0.0, cap, false, 0.0)?);
        }
    }
    let x = |i: usize, j: usize| index.x[i * nv + j].expect("arc variable");
    let z = |i: usize, j: usize| index.z[i * nv + j].expect("flow variable");
    let y = |d: usize| index.y[d].expect("station variable");
    let u = |i: usize| index.u[i].expect("potential variable");
    let others = |v: usize| (0..nv).filter(move |&w| w != v);

    let mut rows: Vec<ConstraintRow> = Vec::new();
    let mut push = |coeffs: Vec<(VarId, f64)>, sense: Sense, rhs: f64, family: Family| {
        let coeffs: Vec<(VarId, f64)> = coeffs.into_iter().filter(|&(_, a)| a != 0.0).collect();
        rows.push(ConstraintRow::new(coeffs, sense, rhs, family));
    };

    // Degree rows.
    for d in inst.refuel_stations() {
        let mut c: Vec<(VarId, f64)> = others(d).map(|i| (x(d, i), 1.0)).collect();
        c.extend(others(d).map(|i| (x(i, d), -1.0)));
        push(c, Sense::Eq, 0.0, Family::Degree);
    }
    for d in inst.refuel_stations() {
        let mut c: Vec<(VarId, f64)> = others(d).map(|i| (x(d, i), 1.0)).collect();
        c.push((y(d), -1.0));
        push(c, Sense::Ge, 0.0, Family::Degree);
    }
    push(
        others(DEPOT).map(|i| (x(i, DEPOT), 1.0)).collect(),
        Sense::Eq,
        m,
        Family::Degree,
    );
    push(
        others(DEPOT).map(|i| (x(DEPOT, i), 1.0)).collect(),
        Sense::Eq,
        m,
        Family::Degree,
    );
    for j in inst.targets() {
        push(
            others(j).map(|i| (x(i, j), 1.0)).collect(),
            Sense::Eq,
            1.0,
            Family::Degree,
        );
        push(
            others(j).map(|i| (x(j, i), 1.0)).collect(),
            Sense::Eq,
            1.0,
            Family::Degree,
        );
    }

    // Station usage links x_di <= y_d for heads in T and the depot.
    for d in inst.refuel_stations() {
        for i in std::iter::once(DEPOT).chain(inst.targets()) {
            push(
                vec![(x(d, i), 1.0), (y(d), -1.0)],
                Sense::Le,
                0.0,
                Family::BoundLink,
            );
        }
    }

    let f = &inst.fuel;
    let (t, s) = (&params.to_station, &params.from_station);
    match variant {
        F1 | F2 => {
            for i in inst.targets() {
                let mut c: Vec<(VarId, f64)> = others(i).map(|j| (z(i, j), 1.0)).collect();
                c.extend(others(i).map(|j| (z(j, i), -1.0)));
                c.extend(others(i).map(|j| (x(i, j), -f[i][j])));
                push(c, Sense::Eq, 0.0, Family::Flow);
            }
            for i in 0..nv {
                for j in others(i) {
                    let upper = if variant == F2 && inst.is_target(j) {
                        cap - t[j]
                    } else {
                        cap
                    };
                    push(
                        vec![(z(i, j), 1.0), (x(i, j), -upper)],
                        Sense::Le,
                        0.0,
                        Family::Flow,
                    );
                    if variant == F2 && inst.is_target(i) {
                        push(
                            vec![(z(i, j), 1.0), (x(i, j), -(s[i] + f[i][j]))],
                            Sense::Ge,
                            0.0,
                            Family::Flow,
                        );
                    }
                }
            }
            for d in inst.stations() {
                for i in inst.targets() {
                    push(
                        vec![(z(d, i), 1.0), (x(d, i), -f[d][i])],
                        Sense::Eq,
                        0.0,
                        Family::Flow,
                    );
                }
            }
        }
        F3 => {
            for i in inst.targets() {
                for j in inst.targets().filter(|&j| j != i) {
                    let big = params.big_m[i][j];
                    push(
                        vec![(u(i), 1.0), (u(j), -1.0), (x(i, j), big)],
                        Sense::Le,
                        big - f[i][j],
                        Family::Mtz,
                    );
                }
            }
            for i in inst.targets() {
                let mut c = vec![(u(i), 1.0)];
                c.extend(inst.stations().map(|d| (x(d, i), -(f[d][i] - s[i]))));
                push(c, Sense::Ge, s[i], Family::Mtz);
                let mut c = vec![(u(i), 1.0)];
                c.extend(inst.stations().map(|d| (x(i, d), f[i][d] - t[i])));
                push(c, Sense::Le, cap - t[i], Family::Mtz);
            }
        }
        F4 => {
            for i in inst.targets() {
                for j in inst.targets().filter(|&j| j != i) {
                    let big = params.big_m[i][j];
                    push(
                        vec![
                            (u(i), 1.0),
                            (u(j), -1.0),
                            (x(i, j), big),
                            (x(j, i), big - f[i][j] - f[j][i]),
                        ],
                        Sense::Le,
                        big - f[i][j],
                        Family::Mtz,
                    );
                }
            }
            for i in inst.targets() {
                let mut c = vec![(u(i), 1.0)];
                c.extend(others(i).map(|j| (x(j, i), -(s[j] + f[j][i]))));
                push(c, Sense::Ge, 0.0, Family::Mtz);
                let mut c = vec![(u(i), 1.0)];
                c.extend(others(i).map(|j| (x(i, j), t[j] + f[i][j])));
                push(c, Sense::Le, cap, Family::Mtz);
                let mut c = vec![(u(i), 1.0)];
                c.extend(inst.stations().map(|d| (x(d, i), cap - t[i] - f[d][i])));
                push(c, Sense::Le, cap - t[i], Family::Mtz);
            }
        }
    }

    if opts.enumerate_connectivity {
        // Every S within V \ {d0} that holds at least one station.
        let rest: Vec<usize> = (1..nv).collect();
        for mask in 1u32..(1u32 << rest.len()) {
            let set: Vec<usize> = rest
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &v)| v)
                .collect();
            if set.iter().any(|&v| inst.is_station(v)) {
                rows.extend(connectivity_rows(inst, &index, &set));
            }
        }
    }

    for row in rows {
        model.add_constraint(row)?;
    }
    if !opts.enumerate_connectivity {
        model.lazy_families.push(Family::Connectivity);
    }
    if variant == F4 && opts.fix_forbidden_arcs {
        for i in 0..nv {
            for j in others(i) {
                if params.forbidden[i][j] {
                    model.fix_variable(x(i, j), 0.0)?;
                }
            }
        }
    }
    model.metadata = ModelMetadata {
        variant: variant.to_string(),
        instance_fingerprint: instance_fingerprint(inst),
    };
    Ok(Formulation {
        variant,
        model,
        index,
        params,
    })
}

/// Decomposes the selected arcs of an integer point into one closed walk
/// per vehicle.
///
/// Depot out-arcs seed the routes in order of their head id. At stations
/// the first unused out-arc is taken; station-rooted cycles left over are
/// spliced in at a visit of that station. Detached cycles made only of
/// stations carry no targets and are dropped.
pub fn extract_solution(inst: &Instance, index: &VarIndex, values: &[f64]) -> Result<Solution> {
    let nv = inst.num_vertices();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut indeg = vec![0usize; nv];
    for (i, j, v) in index.arcs() {
        if values[v.0] > 0.5 {
            out[i].push(j);
            indeg[j] += 1;
        }
    }
    for v in 0..nv {
        let od = out[v].len();
        if od != indeg[v] {
            return Err(Error::Decomposition(format!(
                "vertex {v} has in-degree {} and out-degree {od}",
                indeg[v]
            )));
        }
        if inst.is_target(v) && od != 1 {
            return Err(Error::Decomposition(format!("target {v} has degree {od}")));
        }
    }
    if out[DEPOT].len() != inst.num_vehicles {
        return Err(Error::Decomposition(format!(
            "depot has {} out-arcs, expected {}",
            out[DEPOT].len(),
            inst.num_vehicles
        )));
    }
    // out lists are already sorted by head id; consume from the front.
    let mut next = vec![0usize; nv];
    let take = |v: usize, next: &mut Vec<usize>| -> Option<usize> {
        let k = next[v];
        if k < out[v].len() {
            next[v] += 1;
            Some(out[v][k])
        } else {
            None
        }
    };
    let mut routes = Vec::with_capacity(inst.num_vehicles);
    while let Some(first) = take(DEPOT, &mut next) {
        let mut route = vec![DEPOT, first];
        let mut cur = first;
        while cur != DEPOT {
            cur = take(cur, &mut next)
                .ok_or_else(|| Error::Decomposition(format!("walk stuck at vertex {cur}")))?;
            route.push(cur);
        }
        routes.push(route);
    }
    // Splice leftover station-rooted cycles.
    loop {
        let mut spliced = false;
        'outer: for route in routes.iter_mut() {
            for p in 1..route.len() - 1 {
                let v = route[p];
                if next[v] < out[v].len() {
                    let mut cycle = Vec::new();
                    let mut cur = v;
                    loop {
                        cur = take(cur, &mut next).ok_or_else(|| {
                            Error::Decomposition(format!("cycle stuck at vertex {cur}"))
                        })?;
                        cycle.push(cur);
                        if cur == v {
                            break;
                        }
                    }
                    route.splice(p + 1..p + 1, cycle);
                    spliced = true;
                    break 'outer;
                }
            }
        }
        if !spliced {
            break;
        }
    }
    for v in 0..nv {
        if next[v] < out[v].len() {
            if inst.is_target(v) {
                return Err(Error::Decomposition(format!(
                    "target {v} lies on a cycle detached from the depot"
                )));
            }
            log::debug!("dropping detached station cycle through {v}");
        }
    }
    Solution::from_routes(routes, inst)
}
