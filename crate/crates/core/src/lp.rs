//! Bounded-variable simplex engine.
//!
//! Every row `a x (<=|=|>=) b` is written as `a x - r = 0` with a logical
//! column `r` bounded by the row sense, so the system has a zero right-hand
//! side and a slack basis `-I` is always available. Cold solves run a
//! phase-1/phase-2 primal simplex with artificial columns on rows whose
//! initial activity violates the row bounds. Warm re-solves after bound
//! changes or row additions run a dual simplex from the current basis.
//!
//! The basis inverse is held explicitly (dense, row-major) and updated with
//! rank-one pivots; it is rebuilt from scratch every `refactor_interval`
//! pivots.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense};

#[derive(Debug, Clone, PartialEq)]
pub struct LpOptions {
    /// Iteration cap per solve; `None` means `50 * (rows + cols)`.
    pub max_iterations: Option<usize>,
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots after which Bland's rule takes over.
    pub bland_after: usize,
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    /// Abort with `IterationLimit` once this instant has passed.
    pub deadline: Option<Instant>,
    /// Emit an iteration record through `log::trace!` every this many pivots.
    pub log_every: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            max_iterations: None,
            refactor_interval: 100,
            bland_after: 1000,
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            pivot_tol: 1e-9,
            deadline: None,
            log_every: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration cap or deadline reached.
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

/// Basis description over structural columns followed by one logical per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub structural: Vec<VarStatus>,
    pub logical: Vec<VarStatus>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    /// Row duals `pi` with reduced costs `d_j = c_j - pi^T A_j`.
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub basis: Basis,
    pub iterations: usize,
}

/// Solves the LP relaxation of `model`, optionally starting from `warm`.
pub fn solve_lp(model: &MilpModel, warm: Option<&Basis>, opts: &LpOptions) -> Result<LpSolution> {
    let mut engine = LpEngine::new(model, opts.clone())?;
    if let Some(basis) = warm {
        engine.install_basis(basis);
        Ok(engine.resolve())
    } else {
        Ok(engine.solve())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ColKind {
    Structural,
    Logical(usize),
    /// Artificial on a row with coefficient `sign`.
    Artificial(usize, f64),
}

const NOT_BASIC: usize = usize::MAX;
const STALL_TOL: f64 = 1e-9;
/// Smallest pivot Bland's rule may take when a larger one is available.
const BLAND_MIN_PIVOT: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

#[derive(Clone)]
pub struct LpEngine {
    opts: LpOptions,
    n: usize,
    m: usize,
    a_cols: Vec<Vec<(usize, f64)>>,
    kind: Vec<ColKind>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    true_cost: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    pos: Vec<usize>,
    logical_of_row: Vec<usize>,
    binv: Vec<f64>,
    /// Squared norms of the rows of `B^-1`, for dual steepest-edge pricing.
    weights: Vec<f64>,
    weights_ok: bool,
    since_refactor: usize,
    degenerate_run: usize,
    /// Best objective seen at a refactor in the current loop.
    stall_best: f64,
    iterations: usize,
    solve_iterations: usize,
    iteration_cap: usize,
    has_basis: bool,
}

fn row_bounds(sense: Sense, rhs: f64) -> (f64, f64) {
    match sense {
        Sense::Le => (f64::NEG_INFINITY, rhs),
        Sense::Eq => (rhs, rhs),
        Sense::Ge => (rhs, f64::INFINITY),
    }
}

impl LpEngine {
    pub fn new(model: &MilpModel, opts: LpOptions) -> Result<LpEngine> {
        let n = model.num_vars();
        if n == 0 {
            return Err(Error::InvalidConfig("LP has no variables".into()));
        }
        let mut a_cols = vec![Vec::new(); n];
        for (i, row) in model.rows.iter().enumerate() {
            for &(v, a) in &row.coeffs {
                if a != 0.0 {
                    a_cols[v.0].push((i, a));
                }
            }
        }
        let mut engine = LpEngine {
            opts,
            n,
            m: 0,
            a_cols,
            kind: vec![ColKind::Structural; n],
            lower: Vec::with_capacity(n + model.num_rows()),
            upper: Vec::with_capacity(n + model.num_rows()),
            true_cost: model.objective.clone(),
            cost: model.objective.clone(),
            x: vec![0.0; n],
            d: vec![0.0; n],
            status: vec![VarStatus::AtLower; n],
            head: Vec::new(),
            pos: vec![NOT_BASIC; n],
            logical_of_row: Vec::new(),
            binv: Vec::new(),
            weights: Vec::new(),
            weights_ok: false,
            since_refactor: 0,
            degenerate_run: 0,
            stall_best: f64::INFINITY,
            iterations: 0,
            solve_iterations: 0,
            iteration_cap: 0,
            has_basis: false,
        };
        for v in &model.vars {
            if v.lower.is_infinite() {
                return Err(Error::InvalidConfig(format!(
                    "variable {} has an infinite lower bound",
                    v.kind.name()
                )));
            }
            engine.lower.push(v.lower);
            engine.upper.push(v.upper);
        }
        for (i, row) in model.rows.iter().enumerate() {
            let (lo, hi) = row_bounds(row.sense, row.rhs);
            let j = engine.push_column(ColKind::Logical(i), lo, hi);
            engine.logical_of_row.push(j);
        }
        engine.m = model.num_rows();
        engine.cold_basis_slack_only();
        Ok(engine)
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn num_structural(&self) -> usize {
        self.n
    }

    pub fn total_iterations(&self) -> usize {
        self.iterations
    }

    pub fn options_mut(&mut self) -> &mut LpOptions {
        &mut self.opts
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    fn push_column(&mut self, kind: ColKind, lo: f64, hi: f64) -> usize {
        let j = self.kind.len();
        self.kind.push(kind);
        self.lower.push(lo);
        self.upper.push(hi);
        self.true_cost.push(0.0);
        self.cost.push(0.0);
        self.x.push(0.0);
        self.d.push(0.0);
        self.status.push(VarStatus::AtLower);
        self.pos.push(NOT_BASIC);
        j
    }

    /// Calls `f(row, coeff)` for each nonzero of column `j`.
    #[inline]
    fn for_col<F: FnMut(usize, f64)>(&self, j: usize, mut f: F) {
        match self.kind[j] {
            ColKind::Structural => {
                for &(i, a) in &self.a_cols[j] {
                    f(i, a)
                }
            }
            ColKind::Logical(i) => f(i, -1.0),
            ColKind::Artificial(i, s) => f(i, s),
        }
    }

    #[inline]
    fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        match self.kind[j] {
            ColKind::Structural => self.a_cols[j].iter().map(|&(i, a)| a * v[i]).sum(),
            ColKind::Logical(i) => -v[i],
            ColKind::Artificial(i, s) => s * v[i],
        }
    }

    /// `B^-1 A_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        self.for_col(j, |k, a| {
            for (i, o) in out.iter_mut().enumerate() {
                *o += a * self.binv[i * m + k];
            }
        });
        out
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtUpper => self.upper[j],
            _ => self.lower[j],
        }
    }

    /// Resets to the all-logical basis with structurals at their lower bound.
    fn cold_basis_slack_only(&mut self) {
        let m = self.m;
        // Drop artificials from an earlier solve.
        if self.kind.len() > self.n + m {
            let keep: Vec<usize> = (0..self.kind.len())
                .filter(|&j| !matches!(self.kind[j], ColKind::Artificial(..)))
                .collect();
            fn select<T: Copy>(v: &mut Vec<T>, keep: &[usize]) {
                *v = keep.iter().map(|&j| v[j]).collect();
            }
            select(&mut self.kind, &keep);
            select(&mut self.lower, &keep);
            select(&mut self.upper, &keep);
            select(&mut self.true_cost, &keep);
            select(&mut self.cost, &keep);
            select(&mut self.x, &keep);
            select(&mut self.d, &keep);
            select(&mut self.status, &keep);
            select(&mut self.pos, &keep);
            for (j, k) in self.kind.iter().enumerate() {
                if let ColKind::Logical(i) = *k {
                    self.logical_of_row[i] = j;
                }
            }
        }
        for j in self.n..self.kind.len() {
            self.status[j] = VarStatus::AtLower;
            self.pos[j] = NOT_BASIC;
        }
        for j in 0..self.n {
            self.status[j] = if self.lower[j].is_finite() {
                VarStatus::AtLower
            } else {
                VarStatus::AtUpper
            };
            self.pos[j] = NOT_BASIC;
            self.x[j] = self.nonbasic_value(j);
        }
        self.head.clear();
        for i in 0..m {
            let j = self.logical_of_row[i];
            self.status[j] = VarStatus::Basic;
            self.pos[j] = i;
            self.head.push(j);
        }
        self.binv = vec![0.0; m * m];
        self.weights_ok = false;
        for i in 0..m {
            self.binv[i * m + i] = -1.0;
        }
        self.since_refactor = 0;
        self.has_basis = true;
    }

    /// Installs a basis from a previous solve of a model with the same shape.
    /// Falls back to the slack basis when it does not fit.
    pub fn install_basis(&mut self, basis: &Basis) {
        if basis.structural.len() != self.n || basis.logical.len() != self.m {
            self.cold_basis_slack_only();
            return;
        }
        self.cold_basis_slack_only();
        let mut head = Vec::with_capacity(self.m);
        for (j, &s) in basis.structural.iter().enumerate() {
            self.status[j] = s;
            if s == VarStatus::Basic {
                head.push(j);
            }
        }
        for (i, &s) in basis.logical.iter().enumerate() {
            let j = self.logical_of_row[i];
            self.status[j] = s;
            if s == VarStatus::Basic {
                head.push(j);
            }
        }
        for j in 0..self.kind.len() {
            self.pos[j] = NOT_BASIC;
            if self.status[j] == VarStatus::AtUpper && self.upper[j].is_infinite() {
                self.status[j] = VarStatus::AtLower;
            }
            if self.status[j] == VarStatus::AtLower && self.lower[j].is_infinite() {
                self.status[j] = VarStatus::AtUpper;
            }
        }
        head.truncate(self.m);
        // Pad with logicals if the basis was short; refactor repairs the rest.
        let mut covered = vec![false; self.m];
        for &j in &head {
            if let ColKind::Logical(i) = self.kind[j] {
                covered[i] = true;
            }
        }
        let mut i = 0;
        while head.len() < self.m {
            while covered[i] {
                i += 1;
            }
            head.push(self.logical_of_row[i]);
            self.status[self.logical_of_row[i]] = VarStatus::Basic;
            covered[i] = true;
        }
        for (p, &j) in head.iter().enumerate() {
            self.pos[j] = p;
        }
        self.head = head;
        self.refactor();
    }

    /// Sets the bounds of structural variable `j`.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        assert!(j < self.n);
        self.lower[j] = lo;
        self.upper[j] = hi;
        if self.status[j] != VarStatus::Basic {
            if self.status[j] == VarStatus::AtUpper && hi.is_infinite() {
                self.status[j] = VarStatus::AtLower;
            }
            self.x[j] = self.nonbasic_value(j);
        }
    }

    /// Appends a row; its logical enters the basis.
    pub fn add_row(&mut self, coeffs: &[(usize, f64)], sense: Sense, rhs: f64) {
        let old_m = self.m;
        let new_m = old_m + 1;
        let (lo, hi) = row_bounds(sense, rhs);
        // New binv row: coefficients on basic columns times old binv rows.
        let mut new_row = vec![0.0; new_m];
        for &(j, a) in coeffs {
            if a == 0.0 {
                continue;
            }
            let p = self.pos[j];
            if p != NOT_BASIC {
                let src = &self.binv[p * old_m..(p + 1) * old_m];
                for (t, v) in new_row[..old_m].iter_mut().zip(src) {
                    *t += a * v;
                }
            }
        }
        new_row[old_m] = -1.0;
        let mut binv = vec![0.0; new_m * new_m];
        for i in 0..old_m {
            binv[i * new_m..i * new_m + old_m]
                .copy_from_slice(&self.binv[i * old_m..(i + 1) * old_m]);
        }
        binv[old_m * new_m..].copy_from_slice(&new_row);
        self.binv = binv;
        self.weights_ok = false;
        for &(j, a) in coeffs {
            if a != 0.0 {
                self.a_cols[j].push((old_m, a));
            }
        }
        self.m = new_m;
        let lj = self.push_column(ColKind::Logical(old_m), lo, hi);
        self.logical_of_row.push(lj);
        self.status[lj] = VarStatus::Basic;
        self.pos[lj] = old_m;
        self.head.push(lj);
        self.x[lj] = coeffs.iter().map(|&(j, a)| a * self.x[j]).sum();
        self.d[lj] = 0.0;
    }

    /// Rebuilds `B^-1` from the basis head, repairing singular bases by
    /// swapping in logicals.
    fn refactor(&mut self) {
        let m = self.m;
        self.since_refactor = 0;
        loop {
            // Rows covered by unit (logical/artificial) basic columns.
            let mut unit_pos = vec![NOT_BASIC; m];
            let mut struct_pos = Vec::new();
            let mut dropped = Vec::new();
            for (p, &j) in self.head.iter().enumerate() {
                match self.kind[j] {
                    ColKind::Structural => struct_pos.push(p),
                    ColKind::Logical(i) | ColKind::Artificial(i, _) => {
                        if unit_pos[i] == NOT_BASIC {
                            unit_pos[i] = p;
                        } else {
                            dropped.push(p);
                        }
                    }
                }
            }
            let kernel_rows: Vec<usize> = (0..m).filter(|&i| unit_pos[i] == NOT_BASIC).collect();
            let mut row_loc = vec![NOT_BASIC; m];
            for (l, &i) in kernel_rows.iter().enumerate() {
                row_loc[i] = l;
            }
            let kr = kernel_rows.len();
            let kc = struct_pos.len();
            // Dense kernel [K | I], K = A[kernel_rows, struct cols].
            let width = kc + kr;
            let mut work = vec![0.0; kr * width];
            for (c, &p) in struct_pos.iter().enumerate() {
                for &(i, a) in &self.a_cols[self.head[p]] {
                    let l = row_loc[i];
                    if l != NOT_BASIC {
                        work[l * width + c] = a;
                    }
                }
            }
            for l in 0..kr {
                work[l * width + kc + l] = 1.0;
            }
            // Gauss-Jordan, column by column, partial pivoting.
            let mut row_done = vec![false; kr];
            let mut pivot_row_of_col = vec![NOT_BASIC; kc];
            let mut scratch = vec![0.0; width];
            for c in 0..kc {
                let mut best = NOT_BASIC;
                let mut best_val = 1e-11;
                for l in 0..kr {
                    if !row_done[l] {
                        let v = work[l * width + c].abs();
                        if v > best_val {
                            best_val = v;
                            best = l;
                        }
                    }
                }
                if best == NOT_BASIC {
                    dropped.push(struct_pos[c]);
                    continue;
                }
                row_done[best] = true;
                pivot_row_of_col[c] = best;
                let piv = work[best * width + c];
                for t in 0..width {
                    work[best * width + t] /= piv;
                }
                scratch.copy_from_slice(&work[best * width..(best + 1) * width]);
                for l in 0..kr {
                    if l == best {
                        continue;
                    }
                    let f = work[l * width + c];
                    if f != 0.0 {
                        let row = &mut work[l * width..(l + 1) * width];
                        for (t, s) in row.iter_mut().zip(&scratch) {
                            if *s != 0.0 {
                                *t -= f * s;
                            }
                        }
                    }
                }
            }
            if !dropped.is_empty() || row_done.iter().any(|d| !d) {
                // Replace dropped columns by logicals of uncovered rows.
                let mut covered = unit_pos.iter().map(|&p| p != NOT_BASIC).collect::<Vec<_>>();
                for c in 0..kc {
                    if pivot_row_of_col[c] != NOT_BASIC {
                        covered[kernel_rows[pivot_row_of_col[c]]] = true;
                    }
                }
                let mut free_rows: Vec<usize> = (0..m).filter(|&i| !covered[i]).collect();
                free_rows.reverse();
                for &p in &dropped {
                    let j = self.head[p];
                    self.status[j] = if self.upper[j].is_finite()
                        && (self.x[j] - self.upper[j]).abs() < (self.x[j] - self.lower[j]).abs()
                    {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.pos[j] = NOT_BASIC;
                    self.x[j] = self.nonbasic_value(j);
                    let i = free_rows.pop().expect("row count matches basis size");
                    let lj = self.logical_of_row[i];
                    self.status[lj] = VarStatus::Basic;
                    self.pos[lj] = p;
                    self.head[p] = lj;
                }
                log::debug!("refactor repaired {} basis columns", dropped.len());
                continue;
            }
            // Assemble B^-1 (rows indexed by basis position).
            let mut binv = vec![0.0; m * m];
            for (c, &p) in struct_pos.iter().enumerate() {
                let l = pivot_row_of_col[c];
                let src = &work[l * width + kc..(l + 1) * width];
                for (t, &i) in kernel_rows.iter().enumerate() {
                    binv[p * m + i] = src[t];
                }
            }
            for i in 0..m {
                let p = unit_pos[i];
                if p == NOT_BASIC {
                    continue;
                }
                let sign = match self.kind[self.head[p]] {
                    ColKind::Logical(_) => -1.0,
                    ColKind::Artificial(_, s) => s,
                    ColKind::Structural => unreachable!(),
                };
                binv[p * m + i] = 1.0 / sign;
            }
            // Unit rows: subtract A[i, C] K^-1.
            for &p in &struct_pos {
                let j = self.head[p];
                for &(i, a) in &self.a_cols[j] {
                    let up = unit_pos[i];
                    if up == NOT_BASIC {
                        continue;
                    }
                    let sign = match self.kind[self.head[up]] {
                        ColKind::Logical(_) => -1.0,
                        ColKind::Artificial(_, s) => s,
                        ColKind::Structural => unreachable!(),
                    };
                    let f = a / sign;
                    for &t in &kernel_rows {
                        let v = binv[p * m + t];
                        if v != 0.0 {
                            binv[up * m + t] -= f * v;
                        }
                    }
                }
            }
            self.binv = binv;
            self.weights_ok = false;
            return;
        }
    }

    /// Recomputes basic values from the nonbasic ones.
    fn compute_primal(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.kind.len() {
            if self.status[j] != VarStatus::Basic {
                let v = self.x[j];
                if v != 0.0 {
                    self.for_col(j, |i, a| rhs[i] -= a * v);
                }
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let v: f64 = row.iter().zip(&rhs).map(|(b, r)| b * r).sum();
            self.x[self.head[p]] = v;
        }
    }

    fn compute_duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for p in 0..m {
            let c = self.cost[self.head[p]];
            if c != 0.0 {
                let row = &self.binv[p * m..(p + 1) * m];
                for (yi, b) in y.iter_mut().zip(row) {
                    *yi += c * b;
                }
            }
        }
        y
    }

    fn compute_reduced_costs(&mut self) {
        let y = self.compute_duals();
        for j in 0..self.kind.len() {
            self.d[j] = if self.status[j] == VarStatus::Basic {
                0.0
            } else {
                self.cost[j] - self.col_dot(j, &y)
            };
        }
    }

    fn refresh(&mut self) {
        self.refactor();
        self.recompute();
    }

    /// Basic values and reduced costs from the current inverse.
    fn recompute(&mut self) {
        self.compute_primal();
        self.compute_reduced_costs();
    }

    fn primal_infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        (self.lower[j] - v).max(v - self.upper[j]).max(0.0)
    }

    fn is_primal_feasible(&self) -> bool {
        self.head
            .iter()
            .all(|&j| self.primal_infeasibility(j) <= self.opts.feas_tol)
    }

    fn dual_violation(&self, j: usize) -> f64 {
        if self.status[j] == VarStatus::Basic || self.lower[j] == self.upper[j] {
            return 0.0;
        }
        match self.status[j] {
            VarStatus::AtLower => (-self.d[j]).max(0.0),
            VarStatus::AtUpper => self.d[j].max(0.0),
            VarStatus::Basic => 0.0,
        }
    }

    /// Moves nonbasic columns to the bound that matches their reduced cost.
    /// Returns false if some column cannot be made dual feasible.
    fn flip_to_dual_feasible(&mut self) -> bool {
        let mut ok = true;
        let mut moved = false;
        for j in 0..self.kind.len() {
            if self.dual_violation(j) <= self.opts.opt_tol {
                continue;
            }
            match self.status[j] {
                VarStatus::AtLower if self.upper[j].is_finite() => {
                    self.status[j] = VarStatus::AtUpper;
                    moved = true;
                }
                VarStatus::AtUpper if self.lower[j].is_finite() => {
                    self.status[j] = VarStatus::AtLower;
                    moved = true;
                }
                _ => ok = false,
            }
            self.x[j] = self.nonbasic_value(j);
        }
        if moved {
            self.compute_primal();
        }
        ok
    }

    fn limit_reached(&self) -> bool {
        if self.solve_iterations >= self.iteration_cap {
            return true;
        }
        if let Some(dl) = self.opts.deadline {
            if self.solve_iterations.is_multiple_of(16) && Instant::now() >= dl {
                return true;
            }
        }
        false
    }

    /// Called after each refactor with `sign` 1 for primal and -1 for dual
    /// loops. Pivots since the last real improvement of the recomputed
    /// objective count as degenerate, so drift cannot hide a cycle.
    fn note_objective(&mut self, sign: f64) {
        let obj: f64 = sign
            * (0..self.kind.len())
                .map(|j| self.cost[j] * self.x[j])
                .sum::<f64>();
        if obj < self.stall_best - STALL_TOL * (1.0 + obj.abs()) {
            self.stall_best = obj;
            self.degenerate_run = 0;
        }
    }

    fn reset_stall(&mut self) {
        self.stall_best = f64::INFINITY;
        self.degenerate_run = 0;
    }

    fn begin_solve(&mut self) {
        self.solve_iterations = 0;
        self.reset_stall();
        self.iteration_cap = self.opts.max_iterations.unwrap_or(50 * (self.m + self.n));
    }

    /// Cold solve from the slack basis.
    pub fn solve(&mut self) -> LpSolution {
        self.begin_solve();
        let outcome = self.cold_solve();
        self.finish(outcome)
    }

    /// Re-solves from the current basis after bound changes or new rows.
    pub fn resolve(&mut self) -> LpSolution {
        self.begin_solve();
        if !self.has_basis {
            let outcome = self.cold_solve();
            return self.finish(outcome);
        }
        for j in 0..self.kind.len() {
            if self.status[j] != VarStatus::Basic {
                self.x[j] = self.nonbasic_value(j);
            }
        }
        self.cost.copy_from_slice(&self.true_cost);
        self.recompute();
        let outcome = if self.flip_to_dual_feasible() {
            self.dual_simplex()
        } else if self.is_primal_feasible() {
            self.primal_simplex()
        } else {
            self.cold_solve()
        };
        self.finish(outcome)
    }

    fn cold_solve(&mut self) -> Outcome {
        self.cold_basis_slack_only();
        let m = self.m;
        for j in 0..self.n {
            self.x[j] = self.nonbasic_value(j);
        }
        let mut activity = vec![0.0; m];
        for j in 0..self.n {
            let v = self.x[j];
            if v != 0.0 {
                for &(i, a) in &self.a_cols[j] {
                    activity[i] += a * v;
                }
            }
        }
        let mut any_art = false;
        for i in 0..m {
            let lj = self.logical_of_row[i];
            let (lo, hi) = (self.lower[lj], self.upper[lj]);
            let a = activity[i];
            if a >= lo - self.opts.feas_tol && a <= hi + self.opts.feas_tol {
                self.x[lj] = a;
                continue;
            }
            any_art = true;
            let (bound, st) = if a < lo {
                (lo, VarStatus::AtLower)
            } else {
                (hi, VarStatus::AtUpper)
            };
            self.status[lj] = st;
            self.pos[lj] = NOT_BASIC;
            self.x[lj] = bound;
            // a - r + s*art = 0  =>  s*art = bound - a
            let sign = if bound - a > 0.0 { 1.0 } else { -1.0 };
            let aj = self.push_column(ColKind::Artificial(i, sign), 0.0, f64::INFINITY);
            self.status[aj] = VarStatus::Basic;
            self.pos[aj] = i;
            self.head[i] = aj;
            self.x[aj] = (bound - a).abs();
            self.binv[i * m + i] = sign;
            self.weights_ok = false;
        }
        if any_art {
            for j in 0..self.kind.len() {
                self.cost[j] = if matches!(self.kind[j], ColKind::Artificial(..)) {
                    1.0
                } else {
                    0.0
                };
            }
            self.compute_reduced_costs();
            match self.primal_simplex() {
                Outcome::Optimal => {}
                Outcome::Limit => return Outcome::Limit,
                // Phase 1 is bounded below by zero.
                Outcome::Unbounded | Outcome::Infeasible => return Outcome::Infeasible,
            }
            let infeas: f64 = (0..self.kind.len())
                .filter(|&j| matches!(self.kind[j], ColKind::Artificial(..)))
                .map(|j| self.x[j])
                .sum();
            if infeas > 1e-6 {
                return Outcome::Infeasible;
            }
            for j in 0..self.kind.len() {
                if matches!(self.kind[j], ColKind::Artificial(..)) {
                    self.upper[j] = 0.0;
                    if self.status[j] != VarStatus::Basic {
                        self.status[j] = VarStatus::AtLower;
                        self.x[j] = 0.0;
                    }
                }
            }
        }
        self.cost.copy_from_slice(&self.true_cost[..]);
        for j in self.true_cost.len()..self.cost.len() {
            self.cost[j] = 0.0;
        }
        self.compute_reduced_costs();
        self.primal_simplex()
    }

    fn log_iteration(&self, phase: &str) {
        if let Some(every) = self.opts.log_every {
            if every > 0 && self.iterations.is_multiple_of(every) {
                let obj: f64 = (0..self.kind.len()).map(|j| self.cost[j] * self.x[j]).sum();
                let infeas: f64 = self
                    .head
                    .iter()
                    .map(|&j| self.primal_infeasibility(j))
                    .sum();
                log::trace!(
                    "lp {phase} iter={} obj={obj:.9} primal_infeas={infeas:.3e}",
                    self.iterations
                );
            }
        }
    }

    /// Row `r` of `B^-1 A` over nonbasic columns (indexed by column).
    fn pivot_row(&self, r: usize) -> (Vec<f64>, Vec<f64>) {
        let m = self.m;
        let rho = self.binv[r * m..(r + 1) * m].to_vec();
        let mut alpha_r = vec![0.0; self.kind.len()];
        for j in 0..self.kind.len() {
            if self.status[j] != VarStatus::Basic {
                alpha_r[j] = self.col_dot(j, &rho);
            }
        }
        (rho, alpha_r)
    }

    /// Basis change: column `q` enters at position `r`; `alpha_q = B^-1 A_q`.
    fn pivot(
        &mut self,
        r: usize,
        q: usize,
        alpha_q: &[f64],
        alpha_r: &[f64],
        leave_status: VarStatus,
    ) {
        let m = self.m;
        let leaving = self.head[r];
        let arq = alpha_q[r];
        // Reduced costs.
        let theta = self.d[q] / arq;
        if theta != 0.0 {
            for j in 0..self.kind.len() {
                if self.status[j] != VarStatus::Basic && alpha_r[j] != 0.0 {
                    self.d[j] -= theta * alpha_r[j];
                }
            }
        }
        self.d[q] = 0.0;
        self.d[leaving] = -theta;
        // Inverse update.
        let mut prow = self.binv[r * m..(r + 1) * m].to_vec();
        for v in prow.iter_mut() {
            *v /= arq;
        }
        let track = self.weights_ok;
        for (i, &a) in alpha_q.iter().enumerate() {
            if i != r && a != 0.0 {
                let row = &mut self.binv[i * m..(i + 1) * m];
                let mut norm = 0.0;
                for (t, p) in row.iter_mut().zip(&prow) {
                    *t -= a * p;
                    norm += *t * *t;
                }
                if track {
                    self.weights[i] = norm;
                }
            }
        }
        if track {
            self.weights[r] = prow.iter().map(|v| v * v).sum();
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&prow);
        self.status[leaving] = leave_status;
        self.pos[leaving] = NOT_BASIC;
        self.x[leaving] = self.nonbasic_value(leaving);
        self.status[q] = VarStatus::Basic;
        self.pos[q] = r;
        self.head[r] = q;
        self.since_refactor += 1;
        self.iterations += 1;
        self.solve_iterations += 1;
    }

    fn primal_simplex(&mut self) -> Outcome {
        let tol = self.opts.opt_tol;
        let ptol = self.opts.pivot_tol;
        let ftol = self.opts.feas_tol;
        let mut verified = false;
        self.reset_stall();
        loop {
            if self.limit_reached() {
                return Outcome::Limit;
            }
            if self.since_refactor >= self.opts.refactor_interval {
                self.refresh();
                self.note_objective(1.0);
            }
            let bland = self.degenerate_run >= self.opts.bland_after;
            // Pricing.
            let mut q = NOT_BASIC;
            let mut best = 0.0;
            for j in 0..self.kind.len() {
                if self.status[j] == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let score = match self.status[j] {
                    VarStatus::AtLower if self.d[j] < -tol => -self.d[j],
                    VarStatus::AtUpper if self.d[j] > tol => self.d[j],
                    _ => continue,
                };
                if bland {
                    q = j;
                    break;
                }
                if score > best {
                    best = score;
                    q = j;
                }
            }
            if q == NOT_BASIC {
                if verified {
                    return Outcome::Optimal;
                }
                self.recompute();
                verified = true;
                continue;
            }
            verified = false;
            let dir = if self.status[q] == VarStatus::AtLower {
                1.0
            } else {
                -1.0
            };
            let alpha_q = self.ftran(q);
            // Harris two-pass ratio test.
            let mut t_max = f64::INFINITY;
            for (p, &a) in alpha_q.iter().enumerate() {
                if a.abs() <= ptol {
                    continue;
                }
                let j = self.head[p];
                let rate = -dir * a;
                let bound_room = if rate < 0.0 {
                    self.x[j] - self.lower[j]
                } else {
                    self.upper[j] - self.x[j]
                };
                if bound_room.is_infinite() {
                    continue;
                }
                let ratio = (bound_room + ftol) / rate.abs();
                if ratio < t_max {
                    t_max = ratio;
                }
            }
            let range = self.upper[q] - self.lower[q];
            let mut r = NOT_BASIC;
            let mut t = f64::INFINITY;
            if t_max.is_finite() {
                let mut largest = (NOT_BASIC, 0.0, 0.0);
                let mut lowest = (NOT_BASIC, 0.0);
                for (p, &a) in alpha_q.iter().enumerate() {
                    if a.abs() <= ptol {
                        continue;
                    }
                    let j = self.head[p];
                    let rate = -dir * a;
                    let room = if rate < 0.0 {
                        self.x[j] - self.lower[j]
                    } else {
                        self.upper[j] - self.x[j]
                    };
                    if room.is_infinite() {
                        continue;
                    }
                    let ratio = room / rate.abs();
                    if ratio <= t_max {
                        if a.abs() > largest.1 {
                            largest = (p, a.abs(), ratio);
                        }
                        if a.abs() >= BLAND_MIN_PIVOT
                            && (lowest.0 == NOT_BASIC || j < self.head[lowest.0])
                        {
                            lowest = (p, ratio);
                        }
                    }
                }
                (r, t) = if bland && lowest.0 != NOT_BASIC {
                    lowest
                } else {
                    (largest.0, largest.2)
                };
                t = t.max(0.0);
            }
            if range.is_finite() && (range <= t || r == NOT_BASIC) {
                // Bound flip.
                let step = dir * range;
                for (p, &a) in alpha_q.iter().enumerate() {
                    if a != 0.0 {
                        let j = self.head[p];
                        self.x[j] -= step * a;
                    }
                }
                self.status[q] = if dir > 0.0 {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                };
                self.x[q] = self.nonbasic_value(q);
                self.iterations += 1;
                self.solve_iterations += 1;
                self.degenerate_run += 1;
                self.log_iteration("primal");
                continue;
            }
            if r == NOT_BASIC {
                return Outcome::Unbounded;
            }
            self.degenerate_run += 1;
            let rate_r = -dir * alpha_q[r];
            let leave_status = if rate_r < 0.0 {
                VarStatus::AtLower
            } else {
                VarStatus::AtUpper
            };
            for (p, &a) in alpha_q.iter().enumerate() {
                if a != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= dir * t * a;
                }
            }
            let new_xq = self.x[q] + dir * t;
            let (_, alpha_r) = self.pivot_row(r);
            self.pivot(r, q, &alpha_q, &alpha_r, leave_status);
            self.x[q] = new_xq;
            self.log_iteration("primal");
        }
    }

    fn reset_weights(&mut self) {
        let m = self.m;
        self.weights = (0..m)
            .map(|i| self.binv[i * m..(i + 1) * m].iter().map(|v| v * v).sum())
            .collect();
        self.weights_ok = true;
    }

    fn dual_simplex(&mut self) -> Outcome {
        let ftol = self.opts.feas_tol;
        let ptol = self.opts.pivot_tol;
        let otol = self.opts.opt_tol;
        let mut verified = false;
        self.reset_stall();
        loop {
            if self.limit_reached() {
                return Outcome::Limit;
            }
            if self.since_refactor >= self.opts.refactor_interval {
                self.refresh();
                if !self.flip_to_dual_feasible() {
                    return self.recover_after_dual_loss();
                }
                self.note_objective(-1.0);
            }
            let bland = self.degenerate_run >= self.opts.bland_after;
            if !self.weights_ok {
                self.reset_weights();
            }
            // Leaving row: largest infeasibility relative to its row norm.
            let mut r = NOT_BASIC;
            let mut best = 0.0;
            for (p, &j) in self.head.iter().enumerate() {
                let inf = self.primal_infeasibility(j);
                if inf > ftol {
                    if bland {
                        if r == NOT_BASIC || j < self.head[r] {
                            r = p;
                        }
                    } else {
                        let score = inf * inf / self.weights[p].max(1e-12);
                        if score > best {
                            best = score;
                            r = p;
                        }
                    }
                }
            }
            if r == NOT_BASIC {
                if verified {
                    return Outcome::Optimal;
                }
                self.recompute();
                if !self.flip_to_dual_feasible() {
                    return self.recover_after_dual_loss();
                }
                verified = true;
                continue;
            }
            verified = false;
            let jr = self.head[r];
            let to_lower = self.x[jr] < self.lower[jr];
            let target = if to_lower {
                self.lower[jr]
            } else {
                self.upper[jr]
            };
            let (_, alpha_r) = self.pivot_row(r);
            // Dual ratio test (Harris).
            let eligible = |a: f64, st: VarStatus| -> bool {
                if a.abs() <= ptol {
                    return false;
                }
                match (st, to_lower) {
                    (VarStatus::AtLower, true) => a < 0.0,
                    (VarStatus::AtUpper, true) => a > 0.0,
                    (VarStatus::AtLower, false) => a > 0.0,
                    (VarStatus::AtUpper, false) => a < 0.0,
                    _ => false,
                }
            };
            let mut theta_max = f64::INFINITY;
            for j in 0..self.kind.len() {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let a = alpha_r[j];
                if !eligible(a, st) {
                    continue;
                }
                let dj = match st {
                    VarStatus::AtLower => self.d[j].max(0.0),
                    _ => (-self.d[j]).max(0.0),
                };
                let ratio = (dj + otol) / a.abs();
                if ratio < theta_max {
                    theta_max = ratio;
                }
            }
            if theta_max.is_infinite() {
                return Outcome::Infeasible;
            }
            let mut q = NOT_BASIC;
            let mut best_alpha = 0.0;
            for j in 0..self.kind.len() {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let a = alpha_r[j];
                if !eligible(a, st) {
                    continue;
                }
                let dj = match st {
                    VarStatus::AtLower => self.d[j].max(0.0),
                    _ => (-self.d[j]).max(0.0),
                };
                let ratio = dj / a.abs();
                if ratio <= theta_max {
                    let better = if bland && a.abs() >= BLAND_MIN_PIVOT {
                        q == NOT_BASIC || best_alpha < BLAND_MIN_PIVOT || j < q
                    } else {
                        a.abs() > best_alpha && (!bland || best_alpha < BLAND_MIN_PIVOT)
                    };
                    if better {
                        best_alpha = a.abs();
                        q = j;
                    }
                }
            }
            self.degenerate_run += 1;
            let alpha_q = self.ftran(q);
            let arq = alpha_q[r];
            if arq.abs() <= ptol {
                // Row/column disagree numerically; rebuild and retry.
                self.refresh();
                if !self.flip_to_dual_feasible() {
                    return self.recover_after_dual_loss();
                }
                continue;
            }
            let delta = (self.x[jr] - target) / arq;
            for (p, &a) in alpha_q.iter().enumerate() {
                if a != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= a * delta;
                }
            }
            let new_xq = self.x[q] + delta;
            let leave_status = if to_lower {
                VarStatus::AtLower
            } else {
                VarStatus::AtUpper
            };
            self.pivot(r, q, &alpha_q, &alpha_r, leave_status);
            self.x[q] = new_xq;
            self.log_iteration("dual");
        }
    }

    fn recover_after_dual_loss(&mut self) -> Outcome {
        if self.is_primal_feasible() {
            self.primal_simplex()
        } else {
            self.cold_solve()
        }
    }

    fn finish(&mut self, outcome: Outcome) -> LpSolution {
        let status = match outcome {
            Outcome::Optimal => LpStatus::Optimal,
            Outcome::Infeasible => LpStatus::Infeasible,
            Outcome::Unbounded => LpStatus::Unbounded,
            Outcome::Limit => LpStatus::IterationLimit,
        };
        if status == LpStatus::Infeasible {
            // A failed phase 1 leaves no usable basis for warm starts.
            self.has_basis = !self
                .head
                .iter()
                .any(|&j| matches!(self.kind[j], ColKind::Artificial(..)) && self.upper[j] > 0.0);
        }
        let y = self.compute_duals();
        let values: Vec<f64> = self.x[..self.n].to_vec();
        let objective: f64 = values
            .iter()
            .zip(&self.true_cost[..self.n])
            .map(|(x, c)| x * c)
            .sum();
        let reduced_costs = (0..self.n)
            .map(|j| self.true_cost[j] - self.col_dot(j, &y))
            .collect();
        let logical = self
            .logical_of_row
            .iter()
            .map(|&j| self.status[j])
            .collect();
        LpSolution {
            status,
            objective,
            values,
            row_duals: y,
            reduced_costs,
            basis: Basis {
                structural: self.status[..self.n].to_vec(),
                logical,
            },
            iterations: self.solve_iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{ConstraintRow, Family, VarId, VarKind};

    /// max x1 + x2 s.t. x1 + 3x2 <= 3, 3x1 + x2 <= 3, as a minimization.
    fn lifting_example() -> MilpModel {
        let mut m = MilpModel::new();
        let x1 = m
            .add_variable(VarKind::Named("x1".into()), 0.0, f64::INFINITY, true, -1.0)
            .unwrap();
        let x2 = m
            .add_variable(VarKind::Named("x2".into()), 0.0, f64::INFINITY, true, -1.0)
            .unwrap();
        m.add_constraint(ConstraintRow::new(
            vec![(x1, 1.0), (x2, 3.0)],
            Sense::Le,
            3.0,
            Family::Other,
        ))
        .unwrap();
        m.add_constraint(ConstraintRow::new(
            vec![(x1, 3.0), (x2, 1.0)],
            Sense::Le,
            3.0,
            Family::Other,
        ))
        .unwrap();
        m
    }

    #[test]
    fn lifting_example_lp_optimum() {
        let sol = solve_lp(&lifting_example(), None, &LpOptions::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 1.5).abs() < 1e-9);
        assert!((sol.values[0] - 0.75).abs() < 1e-9);
        assert!((sol.values[1] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn contradictory_fixing_is_infeasible() {
        let mut m = MilpModel::new();
        let x = m
            .add_variable(VarKind::Named("x".into()), 0.0, 0.0, false, 1.0)
            .unwrap();
        m.add_constraint(ConstraintRow::new(
            vec![(x, 1.0)],
            Sense::Ge,
            1.0,
            Family::Other,
        ))
        .unwrap();
        let sol = solve_lp(&m, None, &LpOptions::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut m = MilpModel::new();
        let x = m
            .add_variable(VarKind::Named("x".into()), 0.0, f64::INFINITY, false, -1.0)
            .unwrap();
        let y = m
            .add_variable(VarKind::Named("y".into()), 0.0, f64::INFINITY, false, 0.0)
            .unwrap();
        m.add_constraint(ConstraintRow::new(
            vec![(x, 1.0), (y, -1.0)],
            Sense::Le,
            1.0,
            Family::Other,
        ))
        .unwrap();
        let sol = solve_lp(&m, None, &LpOptions::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows_need_phase_one() {
        // min x + 2y s.t. x + y = 4, x - y >= 1, x <= 3
        let mut m = MilpModel::new();
        let x = m
            .add_variable(VarKind::Named("x".into()), 0.0, 3.0, false, 1.0)
            .unwrap();
        let y = m
            .add_variable(VarKind::Named("y".into()), 0.0, f64::INFINITY, false, 2.0)
            .unwrap();
        m.add_constraint(ConstraintRow::new(
            vec![(x, 1.0), (y, 1.0)],
            Sense::Eq,
            4.0,
            Family::Other,
        ))
        .unwrap();
        m.add_constraint(ConstraintRow::new(
            vec![(x, 1.0), (y, -1.0)],
            Sense::Ge,
            1.0,
            Family::Other,
        ))
        .unwrap();
        let sol = solve_lp(&m, None, &LpOptions::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 5.0).abs() < 1e-9, "{}", sol.objective);
        assert!((sol.values[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn warm_resolve_after_bound_change_and_row() {
        let model = lifting_example();
        let mut eng = LpEngine::new(&model, LpOptions::default()).unwrap();
        let first = eng.solve();
        assert_eq!(first.status, LpStatus::Optimal);
        eng.set_bounds(0, 0.0, 0.0);
        let second = eng.resolve();
        assert_eq!(second.status, LpStatus::Optimal);
        assert!((second.objective + 1.0).abs() < 1e-9);
        eng.set_bounds(0, 0.0, f64::INFINITY);
        eng.add_row(&[(0, 1.0), (1, 1.0)], Sense::Le, 1.0);
        let third = eng.resolve();
        assert_eq!(third.status, LpStatus::Optimal);
        assert!((third.objective + 1.0).abs() < 1e-9);
        // Warm start through the free function.
        let again = solve_lp(&model, Some(&first.basis), &LpOptions::default()).unwrap();
        assert_eq!(again.status, LpStatus::Optimal);
        assert!((again.objective + 1.5).abs() < 1e-9);
        assert!(again.iterations <= 1);
    }

    #[test]
    fn warm_resolve_detects_infeasibility() {
        let mut model = lifting_example();
        model
            .add_constraint(ConstraintRow::new(
                vec![(VarId(0), 1.0)],
                Sense::Ge,
                0.5,
                Family::Other,
            ))
            .unwrap();
        let mut eng = LpEngine::new(&model, LpOptions::default()).unwrap();
        assert_eq!(eng.solve().status, LpStatus::Optimal);
        eng.set_bounds(0, 0.0, 0.0);
        assert_eq!(eng.resolve().status, LpStatus::Infeasible);
        eng.set_bounds(0, 0.0, 1.0);
        let back = eng.resolve();
        assert_eq!(back.status, LpStatus::Optimal);
        assert!((back.objective + 1.5).abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_reported() {
        let opts = LpOptions {
            max_iterations: Some(0),
            ..LpOptions::default()
        };
        let sol = solve_lp(&lifting_example(), None, &opts).unwrap();
        assert_eq!(sol.status, LpStatus::IterationLimit);
    }

    #[test]
    fn deterministic_iteration_counts() {
        let a = solve_lp(&lifting_example(), None, &LpOptions::default()).unwrap();
        let b = solve_lp(&lifting_example(), None, &LpOptions::default()).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.values, b.values);
        assert_eq!(a.basis, b.basis);
    }
}
