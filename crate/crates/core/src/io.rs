//! Point-cloud files: a two-column CSV (`kind,position`) and a JSON sidecar
//! describing how the clouds were produced.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, PointClouds};

pub const CLOUDS_HEADER: &str = "kind,position";

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    kind: String,
    position: f64,
}

/// Parents first, then offspring, each in sorted order.
pub fn write_clouds_csv<W: Write>(clouds: &PointClouds, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CLOUDS_HEADER.split(','))?;
    for &x in clouds.parents() {
        w.write_record(["parent", &x.to_string()])?;
    }
    for &y in clouds.offspring() {
        w.write_record(["offspring", &y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_clouds_csv<R: Read>(input: R) -> Result<PointClouds> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CLOUDS_HEADER {
        return Err(Error::Parse(format!(
            "expected header `{CLOUDS_HEADER}`, got `{}`",
            header.join(",")
        )));
    }
    let mut parents = Vec::new();
    let mut offspring = Vec::new();
    for rec in r.deserialize::<Record>() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        match rec.kind.as_str() {
            "parent" => parents.push(rec.position),
            "offspring" => offspring.push(rec.position),
            other => return Err(Error::Parse(format!("unknown point kind `{other}`"))),
        }
    }
    PointClouds::new_unrestricted(parents, offspring)
}

pub fn read_clouds_file(path: &Path) -> Result<PointClouds> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_clouds_csv(std::io::BufReader::new(f))
}

/// Metadata written next to a simulated clouds file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSidecar {
    pub created_at: String,
    pub seed: u64,
    pub model: String,
    pub dispersal: String,
    pub parent: String,
    pub params: ModelParams,
    pub parents: usize,
    pub offspring: usize,
    pub crate_version: String,
}

impl SimulationSidecar {
    pub fn new(
        seed: u64,
        model: &str,
        dispersal: &str,
        parent: &str,
        params: ModelParams,
        clouds: &PointClouds,
    ) -> Self {
        Self {
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            seed,
            model: model.to_string(),
            dispersal: dispersal.to_string(),
            parent: parent.to_string(),
            params,
            parents: clouds.parents().len(),
            offspring: clouds.offspring().len(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// `clouds.csv` → `clouds.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}
