//! Result tables: CSV or JSON-lines rows, an adjacent JSON metadata file,
//! and merging several runs into one comparison table.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Csi, ExperimentConfig, OutputFormat, SweepAxis};
use crate::error::{Error, Result};
use crate::linksim::{SweepResult, SweepRow};
use crate::pdma::CombiningMode;

const FIXED_COLUMNS: [&str; 10] = [
    "scheme",
    "mode",
    "csi",
    "trials",
    "failed_trials",
    "mean_sum_rate",
    "std_err",
    "per_user_rate",
    "overhead",
    "empirical_sum_rate",
];

/// Provenance written next to every result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub axis: SweepAxis,
    pub seed: u64,
    /// SHA-256 of the resolved configuration and seed.
    pub config_digest: String,
    /// The resolved configuration as TOML.
    pub config: String,
    pub reproduce: String,
    pub generator: String,
}

impl RunMetadata {
    pub fn new(config: &ExperimentConfig, config_file: &Path, out: &Path) -> Self {
        let text = config.to_toml_string();
        Self {
            axis: config.sweep.axis,
            seed: config.sim.seed,
            config_digest: config_digest(config),
            reproduce: format!(
                "lens-pdma run --config {} --seed {} --trials {} --out {} --format {}",
                config_file.display(),
                config.sim.seed,
                config.sim.n_trials,
                out.display(),
                match config.output.format {
                    OutputFormat::Csv => "csv",
                    OutputFormat::Jsonl => "jsonl",
                }
            ),
            config: text,
            generator: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        }
    }
}

/// Hex SHA-256 of the resolved configuration followed by the seed.
pub fn config_digest(config: &ExperimentConfig) -> String {
    let mut h = Sha256::new();
    h.update(config.to_toml_string().as_bytes());
    h.update(b"\nseed=");
    h.update(config.sim.seed.to_string().as_bytes());
    hex::encode(h.finalize())
}

/// Path of the metadata file that accompanies `table`.
pub fn metadata_path(table: &Path) -> PathBuf {
    let mut name = table.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

fn mode_str(m: CombiningMode) -> &'static str {
    match m {
        CombiningMode::Mrc => "mrc",
        CombiningMode::Mmse => "mmse",
    }
}

fn csi_str(c: Csi) -> &'static str {
    match c {
        Csi::Perfect => "perfect",
        Csi::Estimated => "estimated",
    }
}

pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header = vec![result.axis.to_string()];
    header.extend(FIXED_COLUMNS.iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(io)?;
    for r in &result.rows {
        w.write_record([
            fmt_f64(r.axis_value),
            r.scheme.clone(),
            mode_str(r.mode).to_string(),
            csi_str(r.csi).to_string(),
            r.trials.to_string(),
            r.failed_trials.to_string(),
            fmt_f64(r.mean_sum_rate),
            fmt_f64(r.std_err),
            r.per_user_rate.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";"),
            r.overhead.map_or(String::new(), |o| o.to_string()),
            r.empirical_sum_rate.map_or(String::new(), fmt_f64),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R) -> Result<SweepResult> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.len() != FIXED_COLUMNS.len() + 1 || header.iter().skip(1).ne(FIXED_COLUMNS.iter().copied()) {
        return Err(Error::SchemaMismatch(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let axis: SweepAxis = header[0].parse().map_err(|_| Error::SchemaMismatch(format!("unknown axis {:?}", &header[0])))?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let opt = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { parse_f64(s).map(Some) } };
        let count = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("not a count: {s:?}")));
        rows.push(SweepRow {
            axis_value: parse_f64(&rec[0])?,
            scheme: rec[1].to_string(),
            mode: match &rec[2] {
                "mrc" => CombiningMode::Mrc,
                "mmse" => CombiningMode::Mmse,
                m => return Err(Error::Parse(format!("unknown mode {m:?}"))),
            },
            csi: match &rec[3] {
                "perfect" => Csi::Perfect,
                "estimated" => Csi::Estimated,
                c => return Err(Error::Parse(format!("unknown csi {c:?}"))),
            },
            trials: count(&rec[4])?,
            failed_trials: count(&rec[5])?,
            mean_sum_rate: parse_f64(&rec[6])?,
            std_err: parse_f64(&rec[7])?,
            per_user_rate: if rec[8].is_empty() {
                Vec::new()
            } else {
                rec[8].split(';').map(parse_f64).collect::<Result<_>>()?
            },
            overhead: if rec[9].is_empty() { None } else { Some(count(&rec[9])?) },
            empirical_sum_rate: opt(&rec[10])?,
        });
    }
    Ok(SweepResult { axis, rows })
}

#[derive(Serialize, Deserialize)]
struct JsonRow<'a> {
    axis: SweepAxis,
    #[serde(borrow)]
    #[serde(flatten)]
    row: std::borrow::Cow<'a, SweepRow>,
}

pub fn write_jsonl<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    for r in &result.rows {
        let line = serde_json::to_string(&JsonRow {
            axis: result.axis,
            row: std::borrow::Cow::Borrowed(r),
        })
        .map_err(|e| Error::Io(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<SweepResult> {
    let mut axis = None;
    let mut rows = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: JsonRow = serde_json::from_str(&line).map_err(|e| Error::Parse(e.to_string()))?;
        if axis.is_some_and(|a| a != v.axis) {
            return Err(Error::SchemaMismatch("rows disagree on the sweep axis".into()));
        }
        axis = Some(v.axis);
        rows.push(v.row.into_owned());
    }
    let axis = axis.ok_or_else(|| Error::SchemaMismatch("empty result file".into()))?;
    Ok(SweepResult { axis, rows })
}

/// Writes the table and its metadata file.
pub fn write_results(result: &SweepResult, format: OutputFormat, path: &Path, metadata: &RunMetadata) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(result, file)?,
        OutputFormat::Jsonl => write_jsonl(result, file)?,
    }
    let meta = serde_json::to_string_pretty(metadata).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(metadata_path(path), meta + "\n")?;
    Ok(())
}

/// Reads a table, choosing the format from the extension (`.jsonl` or CSV).
pub fn read_results(path: &Path) -> Result<SweepResult> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    if path.extension().is_some_and(|e| e == "jsonl") {
        read_jsonl(file)
    } else {
        read_csv(file)
    }
}

/// Several runs joined on the sweep axis; one series per (file, scheme).
#[derive(Debug, Clone, PartialEq)]
pub struct MergedTable {
    pub axis: SweepAxis,
    pub series: Vec<String>,
    /// `(axis value, per series (mean, std err))`, sorted by axis value.
    pub rows: Vec<(f64, Vec<Option<(f64, f64)>>)>,
}

pub fn merge(inputs: &[(String, SweepResult)]) -> Result<MergedTable> {
    let Some((_, first)) = inputs.first() else {
        return Err(Error::InvalidConfig("report needs at least one result file".into()));
    };
    let axis = first.axis;
    if let Some((name, r)) = inputs.iter().find(|(_, r)| r.axis != axis) {
        return Err(Error::SchemaMismatch(format!("{name} sweeps {} but the first file sweeps {axis}", r.axis)));
    }
    let mut labels: Vec<(usize, String)> = Vec::new();
    for (i, (_, r)) in inputs.iter().enumerate() {
        for row in &r.rows {
            if !labels.contains(&(i, row.scheme.clone())) {
                labels.push((i, row.scheme.clone()));
            }
        }
    }
    let ambiguous = |scheme: &str| labels.iter().filter(|(_, s)| s == scheme).count() > 1;
    let series = labels
        .iter()
        .map(|(i, s)| if ambiguous(s) { format!("{}:{s}", inputs[*i].0) } else { s.clone() })
        .collect();
    let mut grid: BTreeMap<u64, (f64, Vec<Option<(f64, f64)>>)> = BTreeMap::new();
    let key = |x: f64| {
        // total order on floats usable as a map key
        let b = x.to_bits();
        if b >> 63 == 1 { !b } else { b | (1 << 63) }
    };
    for (i, (_, r)) in inputs.iter().enumerate() {
        for row in &r.rows {
            let col = labels.iter().position(|l| *l == (i, row.scheme.clone())).expect("label collected");
            let entry = grid.entry(key(row.axis_value)).or_insert_with(|| (row.axis_value, vec![None; labels.len()]));
            entry.1[col] = Some((row.mean_sum_rate, row.std_err));
        }
    }
    Ok(MergedTable {
        axis,
        series,
        rows: grid.into_values().collect(),
    })
}

impl MergedTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut header = vec![self.axis.to_string()];
        for s in &self.series {
            header.push(s.clone());
            header.push(format!("{s}_std_err"));
        }
        w.write_record(&header).map_err(io)?;
        for (x, cells) in &self.rows {
            let mut rec = vec![fmt_f64(*x)];
            for c in cells {
                match c {
                    Some((m, e)) => {
                        rec.push(fmt_f64(*m));
                        rec.push(fmt_f64(*e));
                    }
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            w.write_record(&rec).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SweepResult {
        SweepResult {
            axis: SweepAxis::SnrDb,
            rows: vec![
                SweepRow {
                    axis_value: -10.0,
                    scheme: "mrc-perfect".into(),
                    mode: CombiningMode::Mrc,
                    csi: Csi::Perfect,
                    trials: 10,
                    failed_trials: 0,
                    mean_sum_rate: 1.0 / 3.0,
                    std_err: 0.1 + 0.2,
                    per_user_rate: vec![0.1, 2.0f64.sqrt()],
                    overhead: None,
                    empirical_sum_rate: Some(1e-300),
                },
                SweepRow {
                    axis_value: 0.0,
                    scheme: "mrc-estimated".into(),
                    mode: CombiningMode::Mrc,
                    csi: Csi::Estimated,
                    trials: 9,
                    failed_trials: 1,
                    mean_sum_rate: 7.25,
                    std_err: 0.0,
                    per_user_rate: vec![7.25],
                    overhead: Some(503),
                    empirical_sum_rate: None,
                },
            ],
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut buf = Vec::new();
        write_csv(&sample(), &mut buf).unwrap();
        assert_eq!(read_csv(std::io::Cursor::new(buf)).unwrap(), sample());
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let mut buf = Vec::new();
        write_jsonl(&sample(), &mut buf).unwrap();
        assert_eq!(read_jsonl(std::io::Cursor::new(buf)).unwrap(), sample());
    }

    #[test]
    fn merge_two_runs() {
        let a = sample();
        let mut b = sample();
        b.rows.truncate(1);
        b.rows[0].scheme = "mmse-perfect".into();
        b.rows[0].mode = CombiningMode::Mmse;
        let m = merge(&[("a".into(), a), ("b".into(), b)]).unwrap();
        assert_eq!(m.series, vec!["mrc-perfect", "mrc-estimated", "mmse-perfect"]);
        assert_eq!(m.rows.len(), 2);
        assert_eq!(m.rows[0].0, -10.0);
        assert_eq!(m.rows[0].1[1], None);
        assert_eq!(m.rows[0].1[2], Some((1.0 / 3.0, 0.1 + 0.2)));
        assert!(merge(&[]).is_err());
        let mut c = sample();
        c.axis = SweepAxis::MRf;
        assert!(matches!(merge(&[("a".into(), sample()), ("c".into(), c)]), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn duplicate_schemes_are_prefixed() {
        let m = merge(&[("x".into(), sample()), ("y".into(), sample())]).unwrap();
        assert_eq!(m.series[0], "x:mrc-perfect");
        assert_eq!(m.series[2], "y:mrc-perfect");
    }

    #[test]
    fn digest_tracks_seed() {
        let mut cfg = ExperimentConfig::paper_defaults();
        let a = config_digest(&cfg);
        assert_eq!(a.len(), 64);
        cfg.sim.seed += 1;
        assert_ne!(a, config_digest(&cfg));
    }
}
