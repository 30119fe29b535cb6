//! Sparse MILP container shared by the formulation builders, the simplex
//! engine and the branch-and-cut driver.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    /// `x_ij`: arc `(i, j)` is traversed.
    Arc(usize, usize),
    /// `z_ij`: fuel consumed on reaching `j` from `i`.
    Flow(usize, usize),
    /// `y_d`: station `d` is used.
    Station(usize),
    /// `u_i`: potential of target `i`.
    Potential(usize),
    /// Anything else, e.g. hand-built test models.
    Named(String),
}

impl VarKind {
    pub fn name(&self) -> String {
        match self {
            VarKind::Arc(i, j) => format!("x_{i}_{j}"),
            VarKind::Flow(i, j) => format!("z_{i}_{j}"),
            VarKind::Station(d) => format!("y_{d}"),
            VarKind::Potential(i) => format!("u_{i}"),
            VarKind::Named(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Degree,
    Connectivity,
    Flow,
    Mtz,
    BoundLink,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub family: Family,
}

impl ConstraintRow {
    pub fn new(coeffs: Vec<(VarId, f64)>, sense: Sense, rhs: f64, family: Family) -> Self {
        ConstraintRow {
            coeffs,
            sense,
            rhs,
            family,
        }
    }

    /// Left-hand side value under a dense assignment.
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which the row is violated (zero when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub variant: String,
    pub instance_fingerprint: String,
}

/// A minimization MILP. The objective is stored densely, one entry per variable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub vars: Vec<Variable>,
    pub rows: Vec<ConstraintRow>,
    pub objective: Vec<f64>,
    pub metadata: ModelMetadata,
    /// Families whose rows are separated on demand instead of stored.
    pub lazy_families: Vec<Family>,
    #[serde(skip)]
    index: KindIndex,
}

/// Lookup table from variable kind to id; ignored by equality.
#[derive(Debug, Clone, Default)]
struct KindIndex(HashMap<VarKind, VarId>);

impl PartialEq for KindIndex {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_variable(
        &mut self,
        kind: VarKind,
        lower: f64,
        upper: f64,
        integer: bool,
        cost: f64,
    ) -> Result<VarId> {
        let id = VarId(self.vars.len());
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::BoundViolation {
                var: id.0,
                value: lower,
                lower,
                upper,
            });
        }
        if !cost.is_finite() {
            return Err(Error::NonFiniteCoefficient(id.0));
        }
        self.index.0.insert(kind.clone(), id);
        self.vars.push(Variable {
            kind,
            lower,
            upper,
            integer,
        });
        self.objective.push(cost);
        Ok(id)
    }

    pub fn add_binary(&mut self, kind: VarKind, cost: f64) -> Result<VarId> {
        self.add_variable(kind, 0.0, 1.0, true, cost)
    }

    pub fn add_constraint(&mut self, row: ConstraintRow) -> Result<usize> {
        self.check_row(&row)?;
        self.rows.push(row);
        Ok(self.rows.len() - 1)
    }

    pub fn check_row(&self, row: &ConstraintRow) -> Result<()> {
        let mut seen = vec![false; self.vars.len()];
        for &(v, a) in &row.coeffs {
            if v.0 >= self.vars.len() {
                return Err(Error::UnknownVariable(v.0));
            }
            if seen[v.0] {
                return Err(Error::DuplicateVariable(v.0));
            }
            if !a.is_finite() {
                return Err(Error::NonFiniteCoefficient(v.0));
            }
            seen[v.0] = true;
        }
        if !row.rhs.is_finite() {
            return Err(Error::InvalidConfig("non-finite right-hand side".into()));
        }
        Ok(())
    }

    pub fn fix_variable(&mut self, var: VarId, value: f64) -> Result<()> {
        let v = self
            .vars
            .get_mut(var.0)
            .ok_or(Error::UnknownVariable(var.0))?;
        if !(value >= v.lower && value <= v.upper) {
            return Err(Error::BoundViolation {
                var: var.0,
                value,
                lower: v.lower,
                upper: v.upper,
            });
        }
        if v.integer && value.fract() != 0.0 {
            return Err(Error::FractionalFix { var: var.0, value });
        }
        v.lower = value;
        v.upper = value;
        Ok(())
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn find(&self, kind: &VarKind) -> Option<VarId> {
        if self.index.0.len() == self.vars.len() {
            return self.index.0.get(kind).copied();
        }
        self.vars.iter().position(|v| &v.kind == kind).map(VarId)
    }

    pub fn num_integer(&self) -> usize {
        self.vars.iter().filter(|v| v.integer).count()
    }

    /// Copy with every integrality flag cleared.
    pub fn relax(&self) -> MilpModel {
        let mut out = self.clone();
        for v in &mut out.vars {
            v.integer = false;
        }
        out
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest row or bound violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self
            .rows
            .iter()
            .map(|r| r.violation(values))
            .fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// True when every objective coefficient is integral and sits on an
    /// integer variable, so every integer-feasible objective is integral.
    pub fn has_integral_objective(&self) -> bool {
        self.objective
            .iter()
            .zip(&self.vars)
            .all(|(&c, v)| c == 0.0 || (v.integer && c.fract() == 0.0))
    }

    /// Canonical row serialization; identical models give identical text.
    pub fn serialized_rows(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            for &(v, a) in &row.coeffs {
                let _ = write!(out, "{}:{:?} ", v.0, a);
            }
            let _ = writeln!(out, "{} {:?} {:?}", row.sense.symbol(), row.rhs, row.family);
        }
        out
    }

    /// Plain-text LP-format export (one constraint per line).
    pub fn to_lp_format(&self) -> String {
        let term = |out: &mut String, first: &mut bool, a: f64, name: &str| {
            if *first {
                if a < 0.0 {
                    let _ = write!(out, "- ");
                }
                *first = false;
            } else {
                let _ = write!(out, " {} ", if a < 0.0 { "-" } else { "+" });
            }
            let _ = write!(out, "{} {}", a.abs(), name);
        };
        let mut out = String::new();
        let _ = writeln!(out, "\\ variant: {}", self.metadata.variant);
        let _ = writeln!(out, "\\ instance: {}", self.metadata.instance_fingerprint);
        let _ = write!(out, "Minimize\n obj: ");
        let mut first = true;
        for (i, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                term(&mut out, &mut first, c, &self.vars[i].kind.name());
            }
        }
        if first {
            let _ = write!(out, "0");
        }
        let _ = writeln!(out, "\nSubject To");
        for (r, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " c{r}: ");
            let mut first = true;
            for &(v, a) in &row.coeffs {
                term(&mut out, &mut first, a, &self.vars[v.0].kind.name());
            }
            if first {
                let _ = write!(
                    out,
                    "0 {}",
                    self.vars.first().map(|v| v.kind.name()).unwrap_or_default()
                );
            }
            let _ = writeln!(out, " {} {}", row.sense.symbol(), row.rhs);
        }
        let _ = writeln!(out, "Bounds");
        for v in &self.vars {
            let name = v.kind.name();
            if v.upper.is_infinite() {
                let _ = writeln!(out, " {name} >= {}", v.lower);
            } else if v.lower == v.upper {
                let _ = writeln!(out, " {name} = {}", v.lower);
            } else {
                let _ = writeln!(out, " {} <= {name} <= {}", v.lower, v.upper);
            }
        }
        let ints: Vec<String> = self
            .vars
            .iter()
            .filter(|v| v.integer)
            .map(|v| v.kind.name())
            .collect();
        if !ints.is_empty() {
            let _ = writeln!(out, "General");
            for chunk in ints.chunks(10) {
                let _ = writeln!(out, " {}", chunk.join(" "));
            }
        }
        let _ = writeln!(out, "End");
        out
    }
}
