//! Output directory bookkeeping, table sidecars and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use vacuumprobe::export::{write_json, write_table, Field};

use crate::config::{Scenario, ScenarioConfig};
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Seeded generator used for every synthetic draw.
pub const RNG: &str = "ChaCha8 (rand_chacha 0.3), seed_from_u64";

/// Files written by one run, in order.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    created: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            created: false,
        }
    }

    /// Path for `name` inside the output directory, created on first use.
    pub fn path(&mut self, name: &str) -> Result<PathBuf, CliError> {
        if !self.created {
            std::fs::create_dir_all(&self.dir).map_err(|e| CliError::Io {
                path: self.dir.clone(),
                message: e.to_string(),
            })?;
            self.created = true;
        }
        self.files.push(name.to_string());
        Ok(self.dir.join(name))
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn paths(&self) -> Vec<PathBuf> {
        self.files.iter().map(|f| self.dir.join(f)).collect()
    }

    /// CSV table plus a JSON sidecar `<stem>.json` naming the columns.
    pub fn table(&mut self, stem: &str, columns: &[Column], rows: &[Vec<Field>]) -> Result<(), CliError> {
        let csv = format!("{stem}.csv");
        let header: Vec<&str> = columns.iter().map(|c| c.name).collect();
        write_table(&self.path(&csv)?, &header, rows)?;
        let sidecar = TableSidecar {
            file: csv,
            rows: rows.len(),
            columns,
        };
        write_json(&self.path(&format!("{stem}.json"))?, &sidecar)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Column {
    pub name: &'static str,
    pub label: &'static str,
    pub unit: &'static str,
}

pub const fn col(name: &'static str, label: &'static str, unit: &'static str) -> Column {
    Column { name, label, unit }
}

#[derive(Debug, Serialize)]
struct TableSidecar<'a> {
    file: String,
    rows: usize,
    columns: &'a [Column],
}

/// Everything needed to trace a result back to its inputs. Contains no
/// timestamps or host details so reruns are byte-identical.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub schema_version: u32,
    pub scenario: Scenario,
    pub seed: u64,
    pub rng: &'static str,
    pub inputs: &'a ScenarioConfig,
    pub derived: serde_json::Value,
    pub outputs: &'a [String],
}

/// Write the manifest listing every file written so far.
pub fn finish(
    out: &mut Outputs,
    scenario: Scenario,
    seed: u64,
    inputs: &ScenarioConfig,
    derived: serde_json::Value,
) -> Result<(), CliError> {
    let outputs = out.files().to_vec();
    let manifest = Manifest {
        tool: "vacuumprobe",
        version: env!("CARGO_PKG_VERSION"),
        core_version: vacuumprobe::VERSION,
        schema_version: inputs.schema_version,
        scenario,
        seed,
        rng: RNG,
        inputs,
        derived,
        outputs: &outputs,
    };
    write_json(&out.path(MANIFEST)?, &manifest)?;
    Ok(())
}
