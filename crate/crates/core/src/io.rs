//! File formats: JSONL corpora, JSON documents, CSV exports, digests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{AllocationConfig, AllocationPlan, Region};
use crate::metrics::PrPoint;
use crate::sim::ItemRoundRow;
use crate::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(io_err(path))?))
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value =
            serde_json::from_str(&line).map_err(|e| Error::Data(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for v in values {
        serde_json::to_writer(&mut w, v)?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct PlanRow<'a> {
    item_id: u64,
    region: &'a str,
    granted: u64,
    requested: u64,
    p_at_maxcap: Option<f64>,
}

/// One row per plan entry: `item_id,region,granted,requested,p_at_maxcap`.
pub fn write_plan_csv(path: &Path, plan: &AllocationPlan) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for e in &plan.entries {
        w.serialize(PlanRow {
            item_id: e.id.0,
            region: e.region.as_str(),
            granted: e.granted,
            requested: e.requested,
            p_at_maxcap: e.p_at_maxcap,
        })?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub items: usize,
    pub funded: usize,
    pub region_counts: BTreeMap<Region, usize>,
    pub total_budget: u64,
    pub total_allocated: u64,
    pub budget_utilization: f64,
    pub max_cost: f64,
    pub total_cost: f64,
    /// Low-region fraction actually used, present when growth stats adapted it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub low_region_fraction: Option<f64>,
}

impl PlanSummary {
    pub fn new(plan: &AllocationPlan, config: &AllocationConfig, adapted_low_fraction: Option<f64>) -> Self {
        let utilization =
            if config.total_budget == 0 { 0.0 } else { plan.total_allocated as f64 / config.total_budget as f64 };
        Self {
            items: plan.entries.len(),
            funded: plan.funded_count(),
            region_counts: plan.region_counts(),
            total_budget: config.total_budget,
            total_allocated: plan.total_allocated,
            budget_utilization: utilization,
            max_cost: config.max_cost,
            total_cost: plan.total_cost,
            low_region_fraction: adapted_low_fraction,
        }
    }
}

/// Two columns, recall then precision, in curve order.
pub fn write_pr_curve_csv(path: &Path, curve: &[PrPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["recall", "precision"])?;
    for p in curve {
        w.write_record([p.recall.to_string(), p.precision.to_string()])?;
    }
    w.flush().map_err(io_err(path))
}

/// One row per item and round; an empty threshold means never discoverable.
pub fn write_item_rows_csv(path: &Path, rows: &[ItemRoundRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["round", "item_id", "region", "granted", "positive_events", "discovered", "threshold"])?;
    for r in rows {
        w.write_record([
            r.round.to_string(),
            r.item_id.to_string(),
            r.region.as_str().to_string(),
            r.granted.to_string(),
            r.positive_events.to_string(),
            r.discovered.to_string(),
            r.threshold.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(io_err(path))
}

/// Hex sha256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut reader = open(path)?;
    let mut buf = [0u8; 8192];
    loop {
        let n = reader.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
