use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{Result, RunnerError};
use crate::plot::render_svg;
use crate::suite::ResultBundle;

pub const RAW_CSV: &str = "raw.csv";
pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const MANIFEST: &str = "manifest.json";

/// Round-trippable rendering used for every CSV number.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One parsed raw-CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub algorithm: String,
    pub seed: u64,
    pub round: usize,
    pub action: Vec<f64>,
    pub reward: f64,
    pub best_so_far: f64,
    pub cum_regret: f64,
}

/// Per-round statistics across seeds for one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub algorithm: String,
    pub round: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub mean_regret: f64,
}

pub fn raw_rows(bundle: &ResultBundle) -> Vec<RawRow> {
    let mut out = Vec::new();
    for run in &bundle.runs {
        for (row, regret) in run.trace.rows.iter().zip(&run.cum_regret) {
            out.push(RawRow {
                algorithm: run.trace.algorithm.clone(),
                seed: run.trace.seed,
                round: row.round,
                action: row.action.clone(),
                reward: row.reward,
                best_so_far: row.best_so_far,
                cum_regret: *regret,
            });
        }
    }
    out
}

/// Aggregates over seeds using each seed's last row of every round (the
/// initial design collapses into round 0). Mean and population standard
/// deviation of `best_so_far`, summed in row order.
pub fn aggregate(rows: &[RawRow]) -> Vec<AggregateRow> {
    let mut algorithms: Vec<String> = Vec::new();
    // (algorithm index, round) -> per seed (seed, best, regret), last row wins
    let mut table: BTreeMap<(usize, usize), Vec<(u64, f64, f64)>> = BTreeMap::new();
    for r in rows {
        let a = match algorithms.iter().position(|x| *x == r.algorithm) {
            Some(i) => i,
            None => {
                algorithms.push(r.algorithm.clone());
                algorithms.len() - 1
            }
        };
        let cell = table.entry((a, r.round)).or_default();
        match cell.last_mut() {
            Some(last) if last.0 == r.seed => *last = (r.seed, r.best_so_far, r.cum_regret),
            _ => cell.push((r.seed, r.best_so_far, r.cum_regret)),
        }
    }
    table
        .iter()
        .map(|(&(a, round), cell)| {
            let n = cell.len() as f64;
            let mean = cell.iter().map(|v| v.1).sum::<f64>() / n;
            let var = cell.iter().map(|v| (v.1 - mean).powi(2)).sum::<f64>() / n;
            let regret = cell.iter().map(|v| v.2).sum::<f64>() / n;
            AggregateRow {
                algorithm: algorithms[a].clone(),
                round,
                mean_reward: mean,
                std_reward: var.sqrt(),
                mean_regret: regret,
            }
        })
        .collect()
}

pub fn raw_csv(rows: &[RawRow], action_dim: usize) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["algorithm".to_string(), "seed".into(), "round".into()];
    header.extend((0..action_dim).map(|i| format!("action_{i}")));
    header.extend(["reward".into(), "best_so_far".into(), "cum_regret".into()]);
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.algorithm.clone(), r.seed.to_string(), r.round.to_string()];
        rec.extend(r.action.iter().map(|v| fmt_num(*v)));
        rec.extend([fmt_num(r.reward), fmt_num(r.best_so_far), fmt_num(r.cum_regret)]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| RunnerError::Bundle(e.to_string()))
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algorithm", "round", "mean_reward", "std_reward", "mean_regret"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.round.to_string(),
            fmt_num(r.mean_reward),
            fmt_num(r.std_reward),
            fmt_num(r.mean_regret),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| RunnerError::Bundle(e.to_string()))
}

fn csv_err(e: csv::Error) -> RunnerError {
    RunnerError::Bundle(e.to_string())
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| RunnerError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| RunnerError::io(&path, e))?;
    tmp.as_file().sync_all().map_err(|e| RunnerError::io(&path, e))?;
    tmp.persist(&path).map_err(|e| RunnerError::io(&path, e.error))?;
    Ok(path)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes raw and aggregate CSVs, the SVG plot and the manifest into `dir`.
/// Returns the written paths.
pub fn emit_outputs(bundle: &ResultBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    if bundle.config.algorithms.is_empty() {
        return Err(RunnerError::Validation("algorithms must not be empty".into()));
    }
    fs::create_dir_all(dir).map_err(|e| RunnerError::io(dir, e))?;
    let action_dim = bundle
        .runs
        .first()
        .and_then(|r| r.trace.rows.first())
        .map_or(0, |r| r.action.len());

    let raw = raw_rows(bundle);
    let agg = aggregate(&raw);
    let svg_name = format!("{}.svg", bundle.config.benchmark);
    let files: Vec<(String, Vec<u8>)> = vec![
        (RAW_CSV.to_string(), raw_csv(&raw, action_dim)?),
        (AGGREGATE_CSV.to_string(), aggregate_csv(&agg)?),
        (svg_name, render_svg(&bundle.config.benchmark, &agg).into_bytes()),
    ];

    let mut written = Vec::new();
    let mut hashes = serde_json::Map::new();
    for (name, bytes) in &files {
        written.push(write_atomic(dir, name, bytes)?);
        hashes.insert(name.clone(), json!(sha256_hex(bytes)));
    }

    let oracle: serde_json::Map<String, serde_json::Value> = bundle
        .oracle
        .iter()
        .map(|(k, v)| (k.clone(), json!({ "estimate": v.estimate, "y_star": v.y_star })))
        .collect();
    let manifest = json!({
        "config": bundle.config,
        "config_hash": bundle.config_hash,
        "oracle": oracle,
        "wall_clock_seconds": bundle.wall_clock.as_secs_f64(),
        "runs": bundle.runs.iter().map(|r| json!({
            "algorithm": r.trace.algorithm,
            "seed": r.trace.seed,
            "oracle_key": r.oracle_key,
            "wall_clock_seconds": r.trace.elapsed.as_secs_f64(),
        })).collect::<Vec<_>>(),
        "failures": bundle.failures.iter().map(|f| json!({
            "algorithm": f.algorithm,
            "seed": f.seed,
            "error": f.message,
        })).collect::<Vec<_>>(),
        "files": hashes,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    written.push(write_atomic(dir, MANIFEST, text.as_bytes())?);
    Ok(written)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| RunnerError::io(path, e))
}

pub fn parse_raw_csv(bytes: &[u8]) -> Result<Vec<RawRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(csv_err)?.clone();
    let width = header.len();
    if width < 6 {
        return Err(RunnerError::Bundle("raw CSV header too short".into()));
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| RunnerError::Bundle(format!("bad number {s:?}"))) };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let int = |i: usize| -> Result<u64> {
            rec[i]
                .parse()
                .map_err(|_| RunnerError::Bundle(format!("bad integer {:?}", &rec[i])))
        };
        rows.push(RawRow {
            algorithm: rec[0].to_string(),
            seed: int(1)?,
            round: int(2)? as usize,
            action: (3..width - 3).map(|i| num(&rec[i])).collect::<Result<_>>()?,
            reward: num(&rec[width - 3])?,
            best_so_far: num(&rec[width - 2])?,
            cum_regret: num(&rec[width - 1])?,
        });
    }
    Ok(rows)
}

/// Loads a bundle directory, checks manifest hashes and that the aggregate
/// CSV equals a recomputation from the raw CSV. Returns the aggregates.
pub fn load_bundle(dir: &Path) -> Result<(Vec<RawRow>, Vec<AggregateRow>, serde_json::Value)> {
    let manifest_bytes = read(&dir.join(MANIFEST))?;
    let manifest: serde_json::Value =
        serde_json::from_slice(&manifest_bytes).map_err(|e| RunnerError::Bundle(format!("manifest: {e}")))?;
    let files = manifest["files"]
        .as_object()
        .ok_or_else(|| RunnerError::Bundle("manifest lists no files".into()))?;
    for (name, hash) in files {
        let bytes = read(&dir.join(name))?;
        if hash.as_str() != Some(sha256_hex(&bytes).as_str()) {
            return Err(RunnerError::Bundle(format!("{name} does not match its manifest hash")));
        }
    }
    let raw_bytes = read(&dir.join(RAW_CSV))?;
    let raw = parse_raw_csv(&raw_bytes)?;
    let agg = aggregate(&raw);
    if aggregate_csv(&agg)? != read(&dir.join(AGGREGATE_CSV))? {
        return Err(RunnerError::Bundle("aggregate CSV differs from recomputation".into()));
    }
    Ok((raw, agg, manifest))
}
