//! Random instances on a square grid and the benchmark suite layout.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, DEPOT};

/// Depot first, then the four refuelling stations.
pub const DEFAULT_STATIONS: [[f64; 2]; 5] = [
    [50.0, 50.0],
    [25.0, 25.0],
    [25.0, 75.0],
    [75.0, 25.0],
    [75.0, 75.0],
];

pub const SUITE_TARGETS: [usize; 7] = [10, 15, 20, 25, 30, 35, 40];
pub const SUITE_LAYOUTS: usize = 5;
pub const SUITE_VEHICLES: [usize; 3] = [3, 4, 5];
pub const SUITE_FUEL_MULTIPLIERS: [f64; 4] = [2.25, 2.5, 2.75, 3.0];
pub const DEFAULT_ROOT_SEED: u64 = 20_240_101;
pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub grid_side: f64,
    /// `stations[0]` is the depot.
    pub stations: Vec<[f64; 2]>,
    pub num_targets: usize,
    pub num_vehicles: usize,
    pub fuel_multiplier: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            grid_side: 100.0,
            stations: DEFAULT_STATIONS.to_vec(),
            num_targets: 10,
            num_vehicles: 3,
            fuel_multiplier: 2.5,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_targets == 0 {
            return bad("at least one target is required".into());
        }
        if self.num_vehicles == 0 {
            return bad("at least one vehicle is required".into());
        }
        if !(self.fuel_multiplier.is_finite() && self.fuel_multiplier > 0.0) {
            return bad(format!(
                "fuel multiplier {} must be positive",
                self.fuel_multiplier
            ));
        }
        if !(self.grid_side.is_finite() && self.grid_side > 0.0) {
            return bad(format!("grid side {} must be positive", self.grid_side));
        }
        if self.stations.is_empty() {
            return bad("the depot location is required".into());
        }
        let side = self.grid_side;
        if let Some(p) = self
            .stations
            .iter()
            .find(|p| !(0.0..=side).contains(&p[0]) || !(0.0..=side).contains(&p[1]))
        {
            return bad(format!("station {p:?} lies outside the grid"));
        }
        Ok(())
    }
}

/// Largest depot-to-target fuel value.
pub fn max_depot_distance(inst: &Instance) -> f64 {
    inst.targets()
        .map(|i| inst.fuel[DEPOT][i])
        .fold(0.0, f64::max)
}

/// Instance on the given layout with `F = mu * lambda` and `c = f`.
pub fn instance_from_layout(
    stations: &[[f64; 2]],
    targets: &[[f64; 2]],
    num_vehicles: usize,
    fuel_multiplier: f64,
) -> Instance {
    let inst = Instance::from_coordinates(stations, targets, 0.0, num_vehicles, 1.0);
    let lambda = max_depot_distance(&inst);
    inst.with_fuel_capacity(fuel_multiplier * lambda)
}

pub fn generate_instance(cfg: &GeneratorConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let targets: Vec<[f64; 2]> = (0..cfg.num_targets)
        .map(|_| {
            let x = rng.gen::<f64>() * cfg.grid_side;
            let y = rng.gen::<f64>() * cfg.grid_side;
            [x, y]
        })
        .collect();
    Ok(instance_from_layout(
        &cfg.stations,
        &targets,
        cfg.num_vehicles,
        cfg.fuel_multiplier,
    ))
}

/// Two targets and one station on a line: d0=(0,0), d1=(4,0), t1=(2,0),
/// t2=(6,0). Vertex ids are 0=d0, 1=d1, 2=t1, 3=t2.
pub fn canonical_line_instance(fuel_capacity: f64) -> Instance {
    Instance::from_coordinates(
        &[[0.0, 0.0], [4.0, 0.0]],
        &[[2.0, 0.0], [6.0, 0.0]],
        fuel_capacity,
        1,
        1.0,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub file: String,
    pub n: usize,
    pub m: usize,
    pub mu: f64,
    pub layout: usize,
    pub seed: u64,
}

impl ManifestEntry {
    pub fn path(&self, dir: &Path) -> PathBuf {
        dir.join(&self.file)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteManifest {
    pub root_seed: u64,
    pub entries: Vec<ManifestEntry>,
}

/// Seed of one base layout. Every `(m, mu)` variant reuses it.
pub fn layout_seed(root_seed: u64, n: usize, layout: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream((n as u64) << 16 | layout as u64);
    rng.gen()
}

/// Suite entries without touching the disk.
pub fn suite_entries(root_seed: u64) -> Vec<ManifestEntry> {
    let mut entries = Vec::new();
    for &n in &SUITE_TARGETS {
        for layout in 0..SUITE_LAYOUTS {
            let seed = layout_seed(root_seed, n, layout);
            for &m in &SUITE_VEHICLES {
                for &mu in &SUITE_FUEL_MULTIPLIERS {
                    let id = format!(
                        "n{n:02}_l{layout}_m{m}_mu{:03}",
                        (mu * 100.0).round() as u32
                    );
                    entries.push(ManifestEntry {
                        file: format!("{id}.json"),
                        id,
                        n,
                        m,
                        mu,
                        layout,
                        seed,
                    });
                }
            }
        }
    }
    entries
}

pub fn suite_config(entry: &ManifestEntry) -> GeneratorConfig {
    GeneratorConfig {
        num_targets: entry.n,
        num_vehicles: entry.m,
        fuel_multiplier: entry.mu,
        seed: entry.seed,
        ..GeneratorConfig::default()
    }
}

pub fn generate_suite(out_dir: impl AsRef<Path>, root_seed: u64) -> Result<SuiteManifest> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;
    let entries = suite_entries(root_seed);
    for entry in &entries {
        generate_instance(&suite_config(entry))?.save(entry.path(dir))?;
    }
    let mut writer = csv::Writer::from_path(dir.join(MANIFEST_FILE))?;
    for entry in &entries {
        writer.serialize(entry)?;
    }
    writer.flush()?;
    Ok(SuiteManifest { root_seed, entries })
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::Reader::from_path(dir.as_ref().join(MANIFEST_FILE))?;
    let entries = reader
        .deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(entries)
}
