//! Benchmark harness: LP relaxation comparison and branch-and-cut runs over
//! a suite, written as CSV.
//!
//! Instances are solved independently (in parallel with the `parallel`
//! feature); records are collected and written in input order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bnc::{solve_bnc, BncConfig, BncStatus};
use crate::error::{Error, Result};
use crate::formulation::{build_formulation, BuildOptions, FormulationVariant};
use crate::generator::{read_manifest, MANIFEST_FILE};
use crate::instance::Instance;
use crate::lp::{solve_lp, LpOptions, LpStatus};
use crate::par;

/// Status written for LP-only rows. The relaxations carry no connectivity rows.
pub const LP_STATUS: &str = "lp_without_connectivity_rows";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchInstance {
    pub id: String,
    pub n: usize,
    pub m: usize,
    pub mu: Option<f64>,
    pub instance: Instance,
}

impl BenchInstance {
    pub fn from_instance(id: impl Into<String>, instance: Instance, mu: Option<f64>) -> Self {
        BenchInstance {
            id: id.into(),
            n: instance.num_targets,
            m: instance.num_vehicles,
            mu,
            instance,
        }
    }
}

/// Reads the instances listed in a suite manifest.
pub fn load_suite(dir: impl AsRef<Path>) -> Result<Vec<BenchInstance>> {
    let dir = dir.as_ref();
    if !dir.join(MANIFEST_FILE).exists() {
        return Err(Error::InvalidConfig(format!(
            "{} has no {MANIFEST_FILE}",
            dir.display()
        )));
    }
    read_manifest(dir)?
        .into_iter()
        .map(|e| {
            let instance = Instance::load(e.path(dir))?;
            Ok(BenchInstance {
                id: e.id,
                n: e.n,
                m: e.m,
                mu: Some(e.mu),
                instance,
            })
        })
        .collect()
}

/// A single instance file or a suite directory.
pub fn load_instances(path: impl AsRef<Path>) -> Result<Vec<BenchInstance>> {
    let path = path.as_ref();
    if path.is_dir() {
        return load_suite(path);
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into());
    Ok(vec![BenchInstance::from_instance(
        id,
        Instance::load(path)?,
        None,
    )])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub id: String,
    pub variant: String,
    pub n: usize,
    pub m: usize,
    pub mu: Option<f64>,
    pub lp_f1: Option<f64>,
    pub lp_f2: Option<f64>,
    pub lp_f3: Option<f64>,
    pub lp_f4: Option<f64>,
    pub incumbent: Option<f64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub wall_time: f64,
    pub nodes: usize,
    pub cuts: usize,
    pub status: String,
    pub error: String,
}

impl BenchmarkRecord {
    fn blank(inst: &BenchInstance, variant: &str) -> Self {
        BenchmarkRecord {
            id: inst.id.clone(),
            variant: variant.into(),
            n: inst.n,
            m: inst.m,
            mu: inst.mu,
            lp_f1: None,
            lp_f2: None,
            lp_f3: None,
            lp_f4: None,
            incumbent: None,
            bound: None,
            gap: None,
            wall_time: 0.0,
            nodes: 0,
            cuts: 0,
            status: String::new(),
            error: String::new(),
        }
    }

    pub fn lp(&self, variant: FormulationVariant) -> Option<f64> {
        match variant {
            FormulationVariant::F1 => self.lp_f1,
            FormulationVariant::F2 => self.lp_f2,
            FormulationVariant::F3 => self.lp_f3,
            FormulationVariant::F4 => self.lp_f4,
        }
    }

    fn set_lp(&mut self, variant: FormulationVariant, value: Option<f64>) {
        match variant {
            FormulationVariant::F1 => self.lp_f1 = value,
            FormulationVariant::F2 => self.lp_f2 = value,
            FormulationVariant::F3 => self.lp_f3 = value,
            FormulationVariant::F4 => self.lp_f4 = value,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == BncStatus::Optimal.to_string()
    }
}

/// Root LP value of a formulation without connectivity rows.
pub fn root_lp_value(inst: &Instance, variant: FormulationVariant) -> Result<Option<f64>> {
    let form = build_formulation(inst, variant, &BuildOptions::default())?;
    let lp = solve_lp(&form.model, None, &LpOptions::default())?;
    match lp.status {
        LpStatus::Optimal => Ok(Some(lp.objective)),
        LpStatus::Infeasible => Ok(None),
        s => Err(Error::Numerical(format!(
            "root LP of {variant} ended with {s:?}"
        ))),
    }
}

fn lp_record(inst: &BenchInstance) -> BenchmarkRecord {
    let mut rec = BenchmarkRecord::blank(inst, "lp");
    let start = Instant::now();
    rec.status = LP_STATUS.into();
    for variant in FormulationVariant::ALL {
        match root_lp_value(&inst.instance, variant) {
            Ok(v) => rec.set_lp(variant, v),
            Err(e) => {
                rec.status = "error".into();
                rec.error = e.to_string();
            }
        }
    }
    rec.wall_time = start.elapsed().as_secs_f64();
    rec
}

/// One row per instance holding the four LP relaxation values.
pub fn run_lp_comparison(instances: &[BenchInstance], jobs: Option<usize>) -> Vec<BenchmarkRecord> {
    par::with_jobs(jobs, || par::map(instances, lp_record))
}

fn bnc_record(
    inst: &BenchInstance,
    variant: FormulationVariant,
    time_limit: Option<Duration>,
) -> BenchmarkRecord {
    let mut rec = BenchmarkRecord::blank(inst, &variant.to_string());
    let start = Instant::now();
    let outcome =
        build_formulation(&inst.instance, variant, &BuildOptions::default()).and_then(|form| {
            let cfg = BncConfig {
                time_limit,
                ..BncConfig::default()
            };
            solve_bnc(&form, &inst.instance, &cfg)
        });
    match outcome {
        Ok(res) => {
            rec.set_lp(variant, res.root_bound);
            rec.incumbent = res.incumbent_cost;
            rec.bound = res.best_bound.is_finite().then_some(res.best_bound);
            rec.gap = (res.status != BncStatus::Infeasible).then_some(res.gap);
            rec.nodes = res.nodes;
            rec.cuts = res.cuts_added;
            rec.status = res.status.to_string();
        }
        Err(e) => {
            rec.status = "error".into();
            rec.error = e.to_string();
        }
    }
    rec.wall_time = start.elapsed().as_secs_f64();
    rec
}

/// One row per (instance, variant), in instance-major order.
pub fn run_benchmark(
    instances: &[BenchInstance],
    variants: &[FormulationVariant],
    time_limit: Option<Duration>,
    jobs: Option<usize>,
) -> Vec<BenchmarkRecord> {
    let tasks: Vec<(usize, FormulationVariant)> = (0..instances.len())
        .flat_map(|i| variants.iter().map(move |&v| (i, v)))
        .collect();
    par::with_jobs(jobs, || {
        par::map(&tasks, |&(i, v)| bnc_record(&instances[i], v, time_limit))
    })
}

pub fn write_records(path: impl AsRef<Path>, records: &[BenchmarkRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        w.write_record([
            "id",
            "variant",
            "n",
            "m",
            "mu",
            "lp_f1",
            "lp_f2",
            "lp_f3",
            "lp_f4",
            "incumbent",
            "bound",
            "gap",
            "wall_time",
            "nodes",
            "cuts",
            "status",
            "error",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<BenchmarkRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let out = r
        .deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: String,
    pub variant: String,
    pub n: usize,
    pub m: Option<usize>,
    pub value: f64,
    pub count: usize,
}

/// Aggregates in the layout of the published tables and figures:
/// `succ` per (variant, n, m), `avg_time` per (variant, n) and `avg_cuts`
/// per (variant, n, m) over solved instances, plus the fraction of LP rows
/// per n where F4 is at least as tight as F2.
pub fn summarize(records: &[BenchmarkRecord]) -> Vec<SummaryRow> {
    let mut succ: BTreeMap<(String, usize, usize), (usize, usize, f64)> = BTreeMap::new();
    let mut time: BTreeMap<(String, usize), (usize, f64)> = BTreeMap::new();
    let mut lp_cmp: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in records {
        if r.variant == "lp" {
            if let (Some(f2), Some(f4)) = (r.lp_f2, r.lp_f4) {
                let e = lp_cmp.entry(r.n).or_default();
                e.1 += 1;
                if f4 >= f2 - 1e-6 {
                    e.0 += 1;
                }
            }
            continue;
        }
        let e = succ.entry((r.variant.clone(), r.n, r.m)).or_default();
        if r.is_optimal() {
            e.0 += 1;
            e.2 += r.cuts as f64;
            let t = time.entry((r.variant.clone(), r.n)).or_default();
            t.0 += 1;
            t.1 += r.wall_time;
        }
        e.1 += 1;
    }
    let mut out = Vec::new();
    for ((variant, n, m), (solved, _total, cuts)) in &succ {
        out.push(SummaryRow {
            metric: "succ".into(),
            variant: variant.clone(),
            n: *n,
            m: Some(*m),
            value: *solved as f64,
            count: *solved,
        });
        if *solved > 0 {
            out.push(SummaryRow {
                metric: "avg_cuts".into(),
                variant: variant.clone(),
                n: *n,
                m: Some(*m),
                value: cuts / *solved as f64,
                count: *solved,
            });
        }
    }
    for ((variant, n), (solved, total)) in &time {
        out.push(SummaryRow {
            metric: "avg_time".into(),
            variant: variant.clone(),
            n: *n,
            m: None,
            value: total / *solved as f64,
            count: *solved,
        });
    }
    for (n, (ge, total)) in &lp_cmp {
        out.push(SummaryRow {
            metric: "lp_f4_ge_f2_fraction".into(),
            variant: "lp".into(),
            n: *n,
            m: None,
            value: *ge as f64 / *total as f64,
            count: *total,
        });
    }
    out
}

/// Path of the summary file written next to `out`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "bench".into());
    out.with_file_name(format!("{stem}_summary.csv"))
}

pub fn write_summary(path: impl AsRef<Path>, rows: &[SummaryRow]) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(["metric", "variant", "n", "m", "value", "count"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::canonical_line_instance;

    fn canonical() -> BenchInstance {
        BenchInstance::from_instance("line", canonical_line_instance(8.0), None)
    }

    #[test]
    fn lp_comparison_dominance_on_canonical() {
        let recs = run_lp_comparison(&[canonical()], Some(1));
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.status, LP_STATUS);
        let (f1, f2, f3, f4) = (
            r.lp_f1.unwrap(),
            r.lp_f2.unwrap(),
            r.lp_f3.unwrap(),
            r.lp_f4.unwrap(),
        );
        assert!(f2 >= f1 - 1e-6 && f4 >= f3 - 1e-6, "{f1} {f2} {f3} {f4}");
    }

    #[test]
    fn benchmark_rows_and_summary() {
        let insts = vec![canonical()];
        let recs = run_benchmark(&insts, &FormulationVariant::ALL, None, Some(2));
        assert_eq!(recs.len(), 4);
        assert!(recs
            .iter()
            .all(|r| r.is_optimal() && r.incumbent == Some(12.0)));
        let summary = summarize(&recs);
        let succ: Vec<_> = summary.iter().filter(|s| s.metric == "succ").collect();
        assert_eq!(succ.len(), 4);
        assert!(succ.iter().all(|s| s.count == 1));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.csv");
        let recs = run_benchmark(&[canonical()], &[FormulationVariant::F4], None, None);
        write_records(&path, &recs).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].incumbent, recs[0].incumbent);
        let header = fs::read_to_string(&path).unwrap();
        assert!(header.starts_with("id,variant,n,m,mu,lp_f1,lp_f2,lp_f3,lp_f4,incumbent,bound,gap"));
        assert_eq!(summary_path(&path), dir.path().join("b_summary.csv"));
    }

    #[test]
    fn missing_manifest_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_suite(dir.path()).is_err());
    }
}
