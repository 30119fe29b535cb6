//! Branch-and-cut over the node LPs of a formulation.
//!
//! A single [`LpEngine`] is kept for the whole tree. Nodes only carry bound
//! overlays on integer columns and are re-solved warm with the dual simplex.
//! Connectivity cuts are separated at integral LP points only, pooled
//! globally and appended to the engine as rows.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{connectivity_rows, extract_solution, Formulation, VarIndex};
use crate::instance::{check_feasibility, Instance, Solution, DEPOT};
use crate::lp::{LpEngine, LpOptions, LpStatus};
use crate::milp::{ConstraintRow, Family, MilpModel, VarId};

pub const INTEGRALITY_TOL: f64 = 1e-6;
const OBJ_TOL: f64 = 1e-6;

/// Depot-free strongly connected component of the support graph together
/// with its violated connectivity rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub set: Vec<usize>,
    pub stations: Vec<usize>,
    pub rows: Vec<ConstraintRow>,
}

/// Tarjan's algorithm. Components come out in reverse topological order;
/// vertices inside a component are sorted.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<usize>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = s.next;
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for k in 0..s.adj[v].len() {
            let w = s.adj[v][k];
            if s.index[w] == usize::MAX {
                visit(s, w);
                s.low[v] = s.low[v].min(s.low[w]);
            } else if s.on_stack[w] {
                s.low[v] = s.low[v].min(s.index[w]);
            }
        }
        if s.low[v] == s.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().expect("vertex on stack");
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.out.push(comp);
        }
    }
    let n = adj.len();
    let mut s = State {
        adj,
        index: vec![usize::MAX; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if s.index[v] == usize::MAX {
            visit(&mut s, v);
        }
    }
    s.out
}

/// Finds the connectivity rows violated by an integral point.
///
/// The support graph holds the targets, the depot, every station with
/// `y_d = 1` and every station touched by a selected arc. Each depot-free
/// component yields one row per station it contains; only the violated ones
/// are kept.
pub fn separate_connectivity(
    inst: &Instance,
    index: &VarIndex,
    values: &[f64],
) -> Result<Vec<Cut>> {
    let nv = inst.num_vertices();
    let mut present = vec![false; nv];
    let mut adj = vec![Vec::new(); nv];
    for (i, j, v) in index.arcs() {
        let val = values[v.0];
        if (val - val.round()).abs() > INTEGRALITY_TOL {
            return Err(Error::Separation(format!(
                "arc ({i}, {j}) is fractional: {val}"
            )));
        }
        if val > 0.5 {
            adj[i].push(j);
            present[i] = true;
            present[j] = true;
        }
    }
    present[DEPOT] = true;
    for t in inst.targets() {
        present[t] = true;
    }
    for d in inst.refuel_stations() {
        if let Some(y) = index.y(d) {
            if values[y.0] > 0.5 {
                present[d] = true;
            }
        }
    }
    let verts: Vec<usize> = (0..nv).filter(|&v| present[v]).collect();
    let mut local = vec![usize::MAX; nv];
    for (k, &v) in verts.iter().enumerate() {
        local[v] = k;
    }
    let sub: Vec<Vec<usize>> = verts
        .iter()
        .map(|&v| adj[v].iter().map(|&w| local[w]).collect())
        .collect();
    let mut comps: Vec<Vec<usize>> = strongly_connected_components(&sub)
        .into_iter()
        .map(|c| c.into_iter().map(|k| verts[k]).collect())
        .collect();
    comps.sort();
    let mut cuts = Vec::new();
    for set in comps {
        if set.contains(&DEPOT) {
            continue;
        }
        let stations: Vec<usize> = set
            .iter()
            .copied()
            .filter(|&v| inst.is_station(v))
            .collect();
        if stations.is_empty() {
            return Err(Error::Separation(format!(
                "component {set:?} has neither the depot nor a station"
            )));
        }
        let rows: Vec<ConstraintRow> = connectivity_rows(inst, index, &set)
            .into_iter()
            .filter(|r| r.violation(values) > INTEGRALITY_TOL)
            .collect();
        if !rows.is_empty() {
            cuts.push(Cut {
                set,
                stations,
                rows,
            });
        }
    }
    Ok(cuts)
}

/// Most fractional integer variable; ties go to the lowest id.
pub fn branch_select(model: &MilpModel, values: &[f64]) -> Result<VarId> {
    let mut best: Option<(f64, usize)> = None;
    for (j, var) in model.vars.iter().enumerate() {
        if !var.integer {
            continue;
        }
        let v = values[j];
        let frac = v - v.floor();
        if frac <= INTEGRALITY_TOL || frac >= 1.0 - INTEGRALITY_TOL {
            continue;
        }
        let score = (frac - 0.5).abs();
        if best.is_none_or(|(s, _)| score < s - 1e-12) {
            best = Some((score, j));
        }
    }
    best.map(|(_, j)| VarId(j)).ok_or(Error::IntegralPoint)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BncStatus {
    Optimal,
    TimeLimit,
    NodeLimit,
    Infeasible,
}

impl fmt::Display for BncStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BncStatus::Optimal => "optimal",
            BncStatus::TimeLimit => "time_limit",
            BncStatus::NodeLimit => "node_limit",
            BncStatus::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BncConfig {
    pub time_limit: Option<Duration>,
    pub gap_tol: f64,
    pub node_limit: Option<usize>,
    /// Keep the event log in the result.
    pub record_events: bool,
    pub lp: LpOptions,
}

impl Default for BncConfig {
    fn default() -> Self {
        BncConfig {
            time_limit: None,
            gap_tol: 1e-6,
            node_limit: None,
            record_events: false,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum BncEvent {
    NodeOpened {
        node: usize,
        depth: usize,
        parent_bound: Option<f64>,
    },
    LpBound {
        node: usize,
        bound: f64,
        iterations: usize,
    },
    CutAdded {
        node: usize,
        set_size: usize,
        rows: usize,
    },
    IncumbentUpdated {
        node: usize,
        cost: f64,
    },
    Pruned {
        node: usize,
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct BncResult {
    pub status: BncStatus,
    pub solution: Option<Solution>,
    /// Objective of the best integer point (also set for models without an instance).
    pub incumbent_cost: Option<f64>,
    pub incumbent_values: Option<Vec<f64>>,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub cuts_added: usize,
    pub lp_iterations: usize,
    pub root_bound: Option<f64>,
    pub wall_time: Duration,
    /// Every solution accepted as incumbent, in order.
    pub incumbent_history: Vec<Solution>,
    /// Integral points whose decomposition failed the feasibility check.
    pub rejected_points: usize,
    pub events: Vec<BncEvent>,
}

impl BncResult {
    /// Writes the event log as JSON lines.
    pub fn write_events(&self, mut out: impl Write) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn relative_gap(incumbent: Option<f64>, bound: f64) -> f64 {
    match incumbent {
        None => f64::INFINITY,
        Some(inc) => {
            let diff = (inc - bound).max(0.0);
            if diff <= 1e-9 {
                0.0
            } else if inc.abs() < 1e-12 {
                f64::INFINITY
            } else {
                diff / inc.abs()
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    overlay: Vec<(usize, f64, f64)>,
}

struct ByBound(Node);

impl PartialEq for ByBound {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ByBound {}
impl PartialOrd for ByBound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByBound {
    // Max-heap: smaller bound first, then smaller id.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

enum Open {
    Dive(Vec<Node>),
    Best(BinaryHeap<ByBound>),
}

impl Open {
    fn push(&mut self, n: Node) {
        match self {
            Open::Dive(v) => v.push(n),
            Open::Best(h) => h.push(ByBound(n)),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Open::Dive(v) => v.pop(),
            Open::Best(h) => h.pop().map(|b| b.0),
        }
    }

    fn to_best(&mut self) {
        if let Open::Dive(v) = self {
            let heap = v.drain(..).map(ByBound).collect();
            *self = Open::Best(heap);
        }
    }

    fn min_bound(&self) -> f64 {
        match self {
            Open::Dive(v) => v.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min),
            Open::Best(h) => h.peek().map_or(f64::INFINITY, |b| b.0.bound),
        }
    }
}

struct Context<'a> {
    inst: &'a Instance,
    index: &'a VarIndex,
}

/// Branch-and-cut on a formulation with lazy connectivity rows.
pub fn solve_bnc(form: &Formulation, inst: &Instance, cfg: &BncConfig) -> Result<BncResult> {
    if form
        .model
        .rows
        .iter()
        .any(|r| r.family == Family::Connectivity)
        && form.model.lazy_families.contains(&Family::Connectivity)
    {
        return Err(Error::InvalidConfig(
            "connectivity rows are both stored and declared lazy".into(),
        ));
    }
    let ctx = Context {
        inst,
        index: &form.index,
    };
    run(&form.model, Some(ctx), cfg)
}

/// Plain branch-and-bound on a model without lazy rows.
pub fn solve_milp(model: &MilpModel, cfg: &BncConfig) -> Result<BncResult> {
    if !model.lazy_families.is_empty() {
        return Err(Error::InvalidConfig(
            "model declares lazy rows; use solve_bnc with an instance".into(),
        ));
    }
    run(model, None, cfg)
}

fn run(model: &MilpModel, ctx: Option<Context<'_>>, cfg: &BncConfig) -> Result<BncResult> {
    let start = Instant::now();
    let deadline = cfg.time_limit.map(|t| start + t);
    let mut lp_opts = cfg.lp.clone();
    lp_opts.deadline = deadline;
    let mut engine = LpEngine::new(model, lp_opts)?;
    let integral_obj = model.has_integral_objective();
    let root_bounds: Vec<(f64, f64)> = model.vars.iter().map(|v| (v.lower, v.upper)).collect();

    let mut events = Vec::new();
    let mut log = |e: BncEvent| {
        if cfg.record_events {
            events.push(e);
        }
    };
    let mut res = BncResult {
        status: BncStatus::Infeasible,
        solution: None,
        incumbent_cost: None,
        incumbent_values: None,
        best_bound: f64::NEG_INFINITY,
        gap: f64::INFINITY,
        nodes: 0,
        cuts_added: 0,
        lp_iterations: 0,
        root_bound: None,
        wall_time: Duration::ZERO,
        incumbent_history: Vec::new(),
        rejected_points: 0,
        events: Vec::new(),
    };
    let mut cut_keys: HashSet<String> = HashSet::new();
    let mut open = Open::Dive(vec![Node {
        id: 0,
        depth: 0,
        bound: f64::NEG_INFINITY,
        overlay: Vec::new(),
    }]);
    let mut next_id = 1;
    let mut applied: Vec<usize> = Vec::new();
    let mut stopped: Option<(BncStatus, f64)> = None;

    let can_prune = |bound: f64, inc: Option<f64>| -> bool {
        let Some(inc) = inc else { return false };
        let effective = if integral_obj {
            (bound - OBJ_TOL).ceil()
        } else {
            bound
        };
        effective >= inc - OBJ_TOL || relative_gap(Some(inc), bound) <= cfg.gap_tol
    };

    while let Some(node) = open.pop() {
        if can_prune(node.bound, res.incumbent_cost) {
            log(BncEvent::Pruned {
                node: node.id,
                reason: "bound".into(),
            });
            continue;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            stopped = Some((BncStatus::TimeLimit, node.bound.min(open.min_bound())));
            break;
        }
        if cfg.node_limit.is_some_and(|l| res.nodes >= l) {
            stopped = Some((BncStatus::NodeLimit, node.bound.min(open.min_bound())));
            break;
        }
        res.nodes += 1;
        log(BncEvent::NodeOpened {
            node: node.id,
            depth: node.depth,
            parent_bound: node.bound.is_finite().then_some(node.bound),
        });
        for &j in &applied {
            let (lo, hi) = root_bounds[j];
            engine.set_bounds(j, lo, hi);
        }
        applied.clear();
        for &(j, lo, hi) in &node.overlay {
            engine.set_bounds(j, lo, hi);
            applied.push(j);
        }

        // Solve, separating at integral points until no cut is violated.
        let outcome = loop {
            let lp = engine.resolve();
            res.lp_iterations += lp.iterations;
            match lp.status {
                LpStatus::Infeasible => break None,
                LpStatus::Optimal => {}
                LpStatus::IterationLimit if deadline.is_some_and(|d| Instant::now() >= d) => {
                    stopped = Some((BncStatus::TimeLimit, node.bound.min(open.min_bound())));
                    break None;
                }
                LpStatus::IterationLimit | LpStatus::Unbounded => {
                    return Err(Error::Numerical(format!(
                        "node {} LP ended with status {:?}",
                        node.id, lp.status
                    )));
                }
            }
            let bound = lp.objective.max(node.bound);
            log(BncEvent::LpBound {
                node: node.id,
                bound,
                iterations: lp.iterations,
            });
            if node.id == 0 && res.root_bound.is_none() {
                res.root_bound = Some(lp.objective);
            }
            if can_prune(bound, res.incumbent_cost) {
                break None;
            }
            match branch_select(model, &lp.values) {
                Ok(var) => break Some((bound, Some(var), lp.values)),
                Err(Error::IntegralPoint) => {}
                Err(e) => return Err(e),
            }
            let Some(ctx) = &ctx else {
                break Some((bound, None, lp.values));
            };
            let cuts = separate_connectivity(ctx.inst, ctx.index, &lp.values)?;
            let mut added = 0;
            for cut in &cuts {
                for row in &cut.rows {
                    let key = format!("{:?}", row.coeffs);
                    if !cut_keys.insert(key) {
                        return Err(Error::Separation(format!(
                            "cut over {:?} separated twice",
                            cut.set
                        )));
                    }
                    let coeffs: Vec<(usize, f64)> =
                        row.coeffs.iter().map(|&(v, a)| (v.0, a)).collect();
                    engine.add_row(&coeffs, row.sense, row.rhs);
                    added += 1;
                }
                log(BncEvent::CutAdded {
                    node: node.id,
                    set_size: cut.set.len(),
                    rows: cut.rows.len(),
                });
            }
            if added == 0 {
                break Some((bound, None, lp.values));
            }
            res.cuts_added += added;
        };
        if stopped.is_some() {
            break;
        }
        let Some((bound, var, values)) = outcome else {
            log(BncEvent::Pruned {
                node: node.id,
                reason: "lp".into(),
            });
            continue;
        };
        match var {
            Some(var) => {
                let j = var.0;
                let v = values[j];
                let (lo, hi) = engine.bounds(j);
                let mut down = node.overlay.clone();
                down.retain(|&(k, _, _)| k != j);
                let mut up = down.clone();
                down.push((j, lo, v.floor()));
                up.push((j, v.ceil(), hi));
                let depth = node.depth + 1;
                // Up child last so the dive takes it first.
                open.push(Node {
                    id: next_id,
                    depth,
                    bound,
                    overlay: down,
                });
                open.push(Node {
                    id: next_id + 1,
                    depth,
                    bound,
                    overlay: up,
                });
                next_id += 2;
            }
            None => {
                let (cost, solution) = match &ctx {
                    Some(ctx) => match extract_solution(ctx.inst, ctx.index, &values) {
                        Ok(sol) if check_feasibility(&sol, ctx.inst).pass => {
                            (sol.total_cost, Some(sol))
                        }
                        Ok(sol) => {
                            log::warn!(
                                "integral point rejected: {:?}",
                                check_feasibility(&sol, ctx.inst)
                            );
                            res.rejected_points += 1;
                            continue;
                        }
                        Err(e) => {
                            log::warn!("integral point rejected: {e}");
                            res.rejected_points += 1;
                            continue;
                        }
                    },
                    None => (model.objective_value(&values), None),
                };
                if res.incumbent_cost.is_none_or(|c| cost < c - 1e-9) {
                    log(BncEvent::IncumbentUpdated {
                        node: node.id,
                        cost,
                    });
                    res.incumbent_cost = Some(cost);
                    res.incumbent_values = Some(values);
                    if let Some(sol) = solution {
                        res.incumbent_history.push(sol.clone());
                        res.solution = Some(sol);
                    }
                    open.to_best();
                }
            }
        }
    }

    res.wall_time = start.elapsed();
    res.lp_iterations = engine.total_iterations();
    match stopped {
        Some((status, bound)) => {
            res.status = status;
            res.best_bound = match res.incumbent_cost {
                Some(c) => bound.min(c),
                None => bound,
            };
        }
        None => match res.incumbent_cost {
            Some(c) => {
                res.status = BncStatus::Optimal;
                res.best_bound = c;
            }
            None => {
                res.status = BncStatus::Infeasible;
                res.best_bound = f64::INFINITY;
            }
        },
    }
    res.gap = relative_gap(res.incumbent_cost, res.best_bound);
    res.events = events;
    Ok(res)
}
