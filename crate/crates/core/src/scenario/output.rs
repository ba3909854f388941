//! Pulse-record and summary files.
//!
//! CSV files start with one `#` metadata line (the only place a timestamp
//! appears) followed by a typed header `name:type,...`. JSONL files start with
//! a `{"_meta": ...}` line. Floats use the shortest decimal that round-trips.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use crate::detection::Clicks;
use crate::error::{Error, Result};

use super::config::{harmonic_port, DetectorConfig, ScenarioConfig};
use super::runner::{run_with, DetectorData, PointData, ScenarioOutcome, SummaryRow};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv or jsonl)")),
        }
    }
}

/// Files written by [`run_to_dir`].
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub outcome: ScenarioOutcome,
    pub summary: PathBuf,
    pub pulse_files: Vec<PathBuf>,
}

/// Shortest round-trip decimal; scientific notation for very large or small
/// magnitudes.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

fn meta(config: &ScenarioConfig, kind: &str) -> Map<String, Value> {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut m = Map::new();
    m.insert("generator".into(), json!(format!("hgsim {}", env!("CARGO_PKG_VERSION"))));
    m.insert("kind".into(), json!(kind));
    m.insert("scenario_id".into(), json!(config.scenario_id));
    m.insert("seed".into(), json!(config.seed));
    m.insert("pulses".into(), json!(config.pulses));
    m.insert("grid_points".into(), json!(config.grid_len()));
    m.insert("created_unix".into(), json!(created));
    m
}

fn csv_meta_line(m: &Map<String, Value>) -> String {
    let mut s = String::from("#");
    for (k, v) in m {
        match v {
            Value::String(t) => write!(s, " {k}={t}").unwrap(),
            other => write!(s, " {k}={other}").unwrap(),
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColumnType {
    U64,
    U32,
    U8,
    F64,
    Bool,
    Str,
}

impl ColumnType {
    fn name(&self) -> &'static str {
        match self {
            ColumnType::U64 => "u64",
            ColumnType::U32 => "u32",
            ColumnType::U8 => "u8",
            ColumnType::F64 => "f64",
            ColumnType::Bool => "bool",
            ColumnType::Str => "str",
        }
    }
}

enum Cell<'a> {
    Int(u64),
    Float(f64),
    Bool(bool),
    Str(&'a str),
}

/// Column set of the pulse-record file for a scenario.
struct RecordLayout {
    columns: Vec<(String, ColumnType)>,
}

impl RecordLayout {
    fn new(config: &ScenarioConfig) -> Self {
        let mut columns = vec![
            ("pulse".to_string(), ColumnType::U64),
            ("grid_index".to_string(), ColumnType::U32),
            ("status".to_string(), ColumnType::Str),
        ];
        if config.postselect.is_some() {
            columns.push(("selected".into(), ColumnType::Bool));
        }
        columns.push(("pump".into(), ColumnType::F64));
        if config.has_sampler() {
            columns.push(("monitor".into(), ColumnType::F64));
        }
        for (n, _) in config.harmonic_stages() {
            columns.push((harmonic_port(n), ColumnType::F64));
        }
        for det in &config.detectors {
            let name = det.name();
            match det {
                DetectorConfig::Charge { .. } => {
                    columns.push((format!("{name}_photons"), ColumnType::U64));
                    columns.push((format!("{name}_area"), ColumnType::F64));
                }
                DetectorConfig::Hbt { .. } => {
                    for arm in ["arm1", "arm2", "coincidence"] {
                        columns.push((format!("{name}_{arm}"), ColumnType::U8));
                    }
                }
            }
        }
        RecordLayout { columns }
    }

    fn header(&self) -> String {
        self.columns
            .iter()
            .map(|(n, t)| format!("{n}:{}", t.name()))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn cells<'a>(&self, data: &'a PointData, i: usize, out: &mut Vec<Cell<'a>>) {
        out.clear();
        out.push(Cell::Int(i as u64));
        out.push(Cell::Int(data.setup.index as u64));
        out.push(Cell::Str(if data.ok[i] { "ok" } else { "saturated" }));
        if let Some(sel) = &data.selection {
            out.push(Cell::Bool(sel.mask[i]));
        } else if self.columns.iter().any(|(n, _)| n == "selected") {
            out.push(Cell::Bool(false));
        }
        out.push(Cell::Float(data.pump[i]));
        if let Some(m) = &data.monitor {
            out.push(Cell::Float(m[i]));
        }
        for h in data.harmonics.values() {
            out.push(Cell::Float(h[i]));
        }
        for det in &data.detectors {
            match det {
                DetectorData::Charge(r) => {
                    out.push(Cell::Int(r[i].photons));
                    out.push(Cell::Float(r[i].area));
                }
                DetectorData::Clicks { bits, .. } => {
                    let c = Clicks::unpack(bits[i]);
                    out.extend([c.arm1, c.arm2, c.coincidence].map(|v| Cell::Int(u64::from(v))));
                }
            }
        }
    }
}

/// Streams pulse records into one file, or into numbered chunks of at most
/// `chunk_rows` rows.
struct RecordWriter {
    layout: RecordLayout,
    format: Format,
    meta: Map<String, Value>,
    dir: PathBuf,
    stem: String,
    chunked: bool,
    chunk_rows: u64,
    rows_in_chunk: u64,
    current: Option<BufWriter<File>>,
    files: Vec<PathBuf>,
    line: String,
}

impl RecordWriter {
    fn new(config: &ScenarioConfig, dir: &Path, format: Format) -> Self {
        let total = config.pulses.saturating_mul(config.grid_len() as u64);
        RecordWriter {
            layout: RecordLayout::new(config),
            format,
            meta: meta(config, "pulse_records"),
            dir: dir.to_path_buf(),
            stem: format!("{}_pulses", config.scenario_id),
            chunked: total > config.output.chunk_rows,
            chunk_rows: config.output.chunk_rows,
            rows_in_chunk: 0,
            current: None,
            files: Vec::new(),
            line: String::new(),
        }
    }

    fn open_next(&mut self) -> Result<()> {
        if let Some(mut w) = self.current.take() {
            w.flush()?;
        }
        let ext = self.format.extension();
        let name = if self.chunked {
            format!("{}.{:03}.{ext}", self.stem, self.files.len())
        } else {
            format!("{}.{ext}", self.stem)
        };
        let path = self.dir.join(name);
        let mut w = BufWriter::with_capacity(1 << 20, File::create(&path)?);
        match self.format {
            Format::Csv => {
                writeln!(w, "{}", csv_meta_line(&self.meta))?;
                writeln!(w, "{}", self.layout.header())?;
            }
            Format::Jsonl => {
                let mut m = self.meta.clone();
                let cols: Map<String, Value> =
                    self.layout.columns.iter().map(|(n, t)| (n.clone(), json!(t.name()))).collect();
                m.insert("columns".into(), Value::Object(cols));
                writeln!(w, "{}", json!({ "_meta": m }))?;
            }
        }
        self.files.push(path);
        self.current = Some(w);
        self.rows_in_chunk = 0;
        Ok(())
    }

    fn write_point(&mut self, data: &PointData) -> Result<()> {
        let mut cells = Vec::with_capacity(self.layout.columns.len());
        for i in 0..data.len() {
            if self.current.is_none() || self.rows_in_chunk >= self.chunk_rows {
                self.open_next()?;
            }
            self.layout.cells(data, i, &mut cells);
            self.line.clear();
            match self.format {
                Format::Csv => {
                    for (k, c) in cells.iter().enumerate() {
                        if k > 0 {
                            self.line.push(',');
                        }
                        match c {
                            Cell::Int(v) => write!(self.line, "{v}").unwrap(),
                            Cell::Float(v) => self.line.push_str(&format_f64(*v)),
                            Cell::Bool(v) => self.line.push_str(if *v { "true" } else { "false" }),
                            Cell::Str(s) => self.line.push_str(s),
                        }
                    }
                }
                Format::Jsonl => {
                    let obj: Map<String, Value> = self
                        .layout
                        .columns
                        .iter()
                        .zip(&cells)
                        .map(|((n, _), c)| {
                            let v = match c {
                                Cell::Int(v) => json!(v),
                                Cell::Float(v) => json!(v),
                                Cell::Bool(v) => json!(v),
                                Cell::Str(s) => json!(s),
                            };
                            (n.clone(), v)
                        })
                        .collect();
                    self.line = Value::Object(obj).to_string();
                }
            }
            let w = self.current.as_mut().expect("opened above");
            w.write_all(self.line.as_bytes())?;
            w.write_all(b"\n")?;
            self.rows_in_chunk += 1;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Vec<PathBuf>> {
        if let Some(mut w) = self.current.take() {
            w.flush()?;
        }
        Ok(self.files)
    }
}

const SUMMARY_COLUMNS: [(&str, &str); 14] = [
    ("scenario_id", "str"),
    ("grid_index", "i64"),
    ("grid_parameter", "str"),
    ("grid_value", "f64"),
    ("seed", "u64"),
    ("estimator_id", "str"),
    ("target", "str"),
    ("subset", "str"),
    ("order", "u32"),
    ("value", "f64"),
    ("std_error", "f64"),
    ("ci_low", "f64"),
    ("ci_high", "f64"),
    ("samples", "u64"),
];

/// Writes the summary table of `outcome` for `config`.
pub fn write_summary(config: &ScenarioConfig, rows: &[SummaryRow], path: &Path, format: Format) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let meta = meta(config, "summary");
    match format {
        Format::Csv => {
            writeln!(w, "{}", csv_meta_line(&meta))?;
            let header: Vec<String> = SUMMARY_COLUMNS.iter().map(|(n, t)| format!("{n}:{t}")).collect();
            writeln!(w, "{}", header.join(","))?;
            for r in rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.scenario_id,
                    r.grid_index,
                    r.grid_parameter,
                    r.grid_value.map(format_f64).unwrap_or_default(),
                    r.seed,
                    r.estimator_id,
                    r.target,
                    r.subset,
                    r.order,
                    format_f64(r.value),
                    format_f64(r.std_error),
                    format_f64(r.ci_low),
                    format_f64(r.ci_high),
                    r.samples
                )?;
            }
        }
        Format::Jsonl => {
            writeln!(w, "{}", json!({ "_meta": meta }))?;
            for r in rows {
                writeln!(w, "{}", serde_json::to_string(r).expect("rows serialize"))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs `config`, writing pulse records (when enabled) and the summary table
/// into `dir`.
pub fn run_to_dir(config: &ScenarioConfig, dir: &Path, format: Format) -> Result<RunArtifacts> {
    config.validate()?;
    write_all(config, dir, format).map_err(|e| match e {
        e @ (Error::Config { .. } | Error::Scenario { .. }) => e,
        e => Error::Scenario { scenario: config.scenario_id.clone(), source: Box::new(e) },
    })
}

fn write_all(config: &ScenarioConfig, dir: &Path, format: Format) -> Result<RunArtifacts> {
    fs::create_dir_all(dir)?;
    let mut records = config.output.pulse_records.then(|| RecordWriter::new(config, dir, format));
    let outcome = run_with(config, &mut |point| match records.as_mut() {
        Some(w) => w.write_point(point),
        None => Ok(()),
    })?;
    let pulse_files = match records {
        Some(w) => w.finish()?,
        None => Vec::new(),
    };
    let summary = dir.join(format!("{}_summary.{}", config.scenario_id, format.extension()));
    write_summary(config, &outcome.rows, &summary, format)?;
    Ok(RunArtifacts { outcome, summary, pulse_files })
}
