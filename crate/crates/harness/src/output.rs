//! Persisted artifacts of a run: the config copy, line-delimited records,
//! the summary and the report tables.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rfim_core::disagreement::SolveOptions;
use rfim_core::experiments::{run_records, summarize, ExperimentKind, ExperimentRecord, RunOptions, Summary};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::report;

pub const CONFIG_FILE: &str = "config.toml";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub runs: Vec<EpsilonSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub summary: Summary,
}

impl SummaryFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summaries always serialize");
        s.push('\n');
        s
    }
}

/// Appends whole samples to the records file, so a crash leaves only complete lines.
struct RecordWriter {
    path: PathBuf,
    file: File,
    batch: Vec<u8>,
    current: Option<u64>,
}

impl RecordWriter {
    fn create(path: PathBuf) -> Result<Self> {
        let file = File::create(&path).map_err(HarnessError::io(&path))?;
        Ok(Self { path, file, batch: Vec::new(), current: None })
    }

    fn write(&mut self, r: &ExperimentRecord) -> Result<()> {
        if self.current.is_some_and(|i| i != r.sample_index) {
            self.flush()?;
        }
        self.current = Some(r.sample_index);
        serde_json::to_writer(&mut self.batch, r).expect("records always serialize");
        self.batch.push(b'\n');
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        if !self.batch.is_empty() {
            self.file.write_all(&self.batch).map_err(HarnessError::io(&self.path))?;
            self.batch.clear();
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: SummaryFile,
    pub records: usize,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(HarnessError::io(path))
}

/// Run every epsilon of `config` in order. Records stream to disk as samples
/// complete; on failure the records already written stay in place.
pub fn run(config: &RunConfig, solve: SolveOptions) -> Result<RunOutcome> {
    config.validate()?;
    let dir = config.out_dir();
    fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;
    write_file(&dir.join(CONFIG_FILE), &config.to_toml())?;
    let _ = fs::remove_file(dir.join(SUMMARY_FILE));

    let mut writer = RecordWriter::create(dir.join(RECORDS_FILE))?;
    let mut runs = Vec::new();
    let mut count = 0;
    for &eps in &config.eps {
        let params = config.params(eps);
        let options = RunOptions { workers: config.workers, solve };
        let result = run_records::<HarnessError>(&params, options, |r| writer.write(r));
        writer.flush()?;
        let records = result?;
        count += records.len();
        runs.push(EpsilonSummary { epsilon: eps, summary: summarize(&params, &records)? });
    }
    let summary = SummaryFile { experiment: config.experiment, master_seed: config.seed, runs };
    write_file(&dir.join(SUMMARY_FILE), &summary.to_json())?;
    report::write_report(&dir, &summary)?;
    Ok(RunOutcome { dir, summary, records: count })
}

pub fn load_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let file = File::open(path).map_err(HarnessError::io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(HarnessError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| HarnessError::Records {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Rebuild the summary from records alone.
pub fn recompute(config: &RunConfig, records: &[ExperimentRecord]) -> Result<SummaryFile> {
    let mut runs = Vec::new();
    for &eps in &config.eps {
        let mine: Vec<ExperimentRecord> =
            records.iter().filter(|r| r.epsilon.to_bits() == eps.to_bits()).cloned().collect();
        runs.push(EpsilonSummary { epsilon: eps, summary: summarize(&config.params(eps), &mine)? });
    }
    let stray = records.iter().filter(|r| !config.eps.iter().any(|e| e.to_bits() == r.epsilon.to_bits())).count();
    if stray > 0 {
        return Err(HarnessError::Validation(format!("{stray} records have an epsilon that is not configured")));
    }
    Ok(SummaryFile { experiment: config.experiment, master_seed: config.seed, runs })
}

/// Recompute the summary of a finished run directory, check it against the
/// stored one (when present) and rewrite the report.
pub fn rebuild(dir: &Path) -> Result<SummaryFile> {
    let config = RunConfig::load(&dir.join(CONFIG_FILE))?;
    let records = load_records(&dir.join(RECORDS_FILE))?;
    let summary = recompute(&config, &records)?;
    let path = dir.join(SUMMARY_FILE);
    match fs::read_to_string(&path) {
        Ok(stored) if stored != summary.to_json() => return Err(HarnessError::SummaryMismatch { path }),
        Ok(_) => {}
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => write_file(&path, &summary.to_json())?,
        Err(e) => return Err(HarnessError::io(&path)(e)),
    }
    report::write_report(dir, &summary)?;
    Ok(summary)
}
