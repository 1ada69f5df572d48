//! Command-line front end. `run` is what the binary calls; it is also usable
//! in-process, writing to any pair of streams.
//!
//! Exit codes: 0 success (warnings allowed), 1 warnings with `--strict`,
//! 2 errors. Report files are only written once every report of a command has
//! been built, so a failing command leaves the output directory untouched.

use crate::analysis::{
    determinants_report, paired_ttest, significance_marker, summarize_behavior,
    weekend_weekday_daily_hours, CodingConfig, DescriptiveStats, RegressionResult,
};
use crate::diary::{
    parse_dataset, synth_average_participant, to_csv_strings, DaytimeSlot, DiaryDataset,
    ParticipantId, PlatformCategory,
};
use crate::engine::{
    annual_budget_share, annual_kg, cohort_mean, entry_footprint, footprints, intensity_table,
    Cell, CellKey, FootprintBreakdown, FootprintOptions, DEFAULT_ANNUAL_BUDGET_KG,
};
use crate::params::{default_params, load_params, to_toml_string, DeviceKind, ModelParams, ParamKey, ParamValue};
use crate::scenarios::{
    apply_scenario, builtin_scenario, default_ranges, load_scenario, monte_carlo_samples,
    summarize_samples, tornado, weekly_total, McConfig, ScenarioSpec, DEFAULT_SAMPLES, DEFAULT_SEED,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_WARNINGS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "streamgwp", version, about = "Greenhouse-gas footprint of video streaming from usage diaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a diary and profile file.
    Validate(InputArgs),
    /// Weekly footprint, grouped.
    Footprint(FootprintArgs),
    /// Per-hour GWP intensity of each device.
    Intensity(ParamArgs),
    /// Descriptives, weekend/weekday t-test and determinant regressions.
    Analyze(AnalyzeArgs),
    /// Compare a scenario against the baseline.
    Scenario(ScenarioArgs),
    /// Monte Carlo over parameter ranges.
    Mc(McArgs),
    /// One-at-a-time sensitivity of the weekly total.
    Tornado(TornadoArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Directory for report files; nothing is written without it.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Treat warnings as failure (exit code 1).
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Parameter file (TOML); built-in defaults otherwise.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Override one parameter, e.g. `grid_device.kg_per_kwh=0.4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Diary CSV; the built-in average participant if omitted.
    #[arg(long, requires = "profiles")]
    pub diary: Option<PathBuf>,
    /// Profile CSV.
    #[arg(long, requires = "diary")]
    pub profiles: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Diary CSV; the built-in average participant if omitted.
    #[arg(long, requires = "profiles")]
    pub diary: Option<PathBuf>,
    /// Profile CSV.
    #[arg(long, requires = "diary")]
    pub profiles: Option<PathBuf>,
    /// Parameter file (TOML); built-in defaults otherwise.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Override one parameter, e.g. `grid_device.kg_per_kwh=0.4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Divide each entry's emissions by its audience size.
    #[arg(long)]
    pub per_viewer: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FootprintArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = GroupBy::Device)]
    pub by: GroupBy,
    /// Scenario file or built-in name applied before computing.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Annual budget in kg CO₂-eq. for the budget share.
    #[arg(long, default_value_t = DEFAULT_ANNUAL_BUDGET_KG)]
    pub budget: f64,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Scenario file, or one of: low_res_default, phone_instead_of_tv, half_paid_hours.
    #[arg(long)]
    pub scenario: String,
    /// Participant to compare; cohort mean otherwise.
    #[arg(long)]
    pub participant: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Relative half-width for one parameter, e.g. `network.access_kwh_per_gb=0.5`.
    /// Replaces the default ranges when given.
    #[arg(long = "range", value_name = "KEY=FRACTION")]
    pub ranges: Vec<String>,
    #[arg(long)]
    pub participant: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct TornadoArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "range", value_name = "KEY=FRACTION")]
    pub ranges: Vec<String>,
    #[arg(long)]
    pub participant: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned text.
    Table,
    /// Comma-separated.
    Delimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    Device,
    Platform,
    PlatformDevice,
    Day,
    Slot,
}

impl GroupBy {
    fn name(self) -> &'static str {
        match self {
            GroupBy::Device => "device",
            GroupBy::Platform => "platform",
            GroupBy::PlatformDevice => "platform_device",
            GroupBy::Day => "day",
            GroupBy::Slot => "slot",
        }
    }

    fn columns(self) -> Vec<&'static str> {
        match self {
            GroupBy::PlatformDevice => vec!["platform", "device"],
            other => vec![other.name()],
        }
    }

    /// Every level, so empty groups show as zero rows.
    fn levels(self) -> Vec<Vec<String>> {
        let devices = || DeviceKind::ALL.iter().map(|d| d.as_str().to_string());
        let platforms = || PlatformCategory::STREAMING.iter().map(|p| p.as_str().to_string());
        match self {
            GroupBy::Device => devices().map(|d| vec![d]).collect(),
            GroupBy::Platform => platforms().map(|p| vec![p]).collect(),
            GroupBy::PlatformDevice => platforms()
                .flat_map(|p| devices().map(move |d| vec![p.clone(), d]))
                .collect(),
            GroupBy::Day => (1..=7).map(|d| vec![d.to_string()]).collect(),
            GroupBy::Slot => DaytimeSlot::ALL.iter().map(|s| vec![s.as_str().to_string()]).collect(),
        }
    }

    fn key(self, k: &CellKey) -> Vec<String> {
        match self {
            GroupBy::Device => vec![k.device.as_str().into()],
            GroupBy::Platform => vec![k.platform.as_str().into()],
            GroupBy::PlatformDevice => vec![k.platform.as_str().into(), k.device.as_str().into()],
            GroupBy::Day => vec![k.day.to_string()],
            GroupBy::Slot => vec![k.slot.as_str().into()],
        }
    }

    fn grouped(self, b: &FootprintBreakdown) -> Vec<(Vec<String>, Cell)> {
        let m = b.marginal(|k| self.key(k));
        self.levels()
            .into_iter()
            .map(|level| {
                let cell = m.get(&level).copied().unwrap_or_default();
                (level, cell)
            })
            .collect()
    }
}

/// Provenance block embedded in every report file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub params_sha256: String,
    /// Hash of the canonical (sorted, re-serialized) diary and profile CSV.
    pub dataset_sha256: Option<String>,
    pub seed: Option<u64>,
    /// `SOURCE_DATE_EPOCH` when set; never the wall clock.
    pub timestamp: Option<String>,
    pub command_line: Vec<String>,
}

impl RunManifest {
    fn new(argv: &[String], params: &ModelParams, ds: Option<&DiaryDataset>, seed: Option<u64>) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            params_sha256: sha256_hex(to_toml_string(params).as_bytes()),
            dataset_sha256: ds.map(|ds| {
                let (diary, profiles) = to_csv_strings(ds);
                sha256_hex(format!("{diary}\n{profiles}").as_bytes())
            }),
            seed,
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok(),
            command_line: argv.to_vec(),
        }
    }

    fn lines(&self) -> Vec<String> {
        let none = || "none".to_string();
        vec![
            format!("tool_version: {}", self.tool_version),
            format!("params_sha256: {}", self.params_sha256),
            format!("dataset_sha256: {}", self.dataset_sha256.clone().unwrap_or_else(none)),
            format!("seed: {}", self.seed.map(|s| s.to_string()).unwrap_or_else(none)),
            format!("timestamp: {}", self.timestamp.clone().unwrap_or_else(none)),
            format!("command_line: {}", self.command_line.join(" ")),
        ]
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

/// A rectangular report.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn csv_body(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 input")
    }

    /// CSV with the manifest as leading `#` lines.
    pub fn to_csv(&self, manifest: &RunManifest) -> String {
        let mut out = String::new();
        for line in manifest.lines() {
            out.push_str("# ");
            out.push_str(&line);
            out.push('\n');
        }
        out + &self.csv_body()
    }

    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|i| {
                self.rows
                    .iter()
                    .map(|r| r[i].chars().count())
                    .chain(std::iter::once(self.header[i].chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let numeric: Vec<bool> = (0..self.header.len())
            .map(|i| !self.rows.is_empty() && self.rows.iter().all(|r| r[i].parse::<f64>().is_ok()))
            .collect();
        let render = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if numeric[i] {
                        format!("{c:>w$}", w = widths[i])
                    } else {
                        format!("{c:<w$}", w = widths[i])
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = format!("== {} ==\n", self.name);
        out += &render(&self.header);
        for row in &self.rows {
            out += &render(row);
        }
        out
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.to_text(),
            Format::Delimited => self.csv_body(),
        }
    }
}

/// One bar of a stacked bar chart.
struct Bar {
    label: String,
    segments: [f64; 3],
}

const SEGMENT_NAMES: [&str; 3] = ["production", "operation", "traffic"];
const SEGMENT_COLORS: [&str; 3] = ["#4e79a7", "#f28e2b", "#59a14f"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Static horizontal stacked bar chart.
fn svg_stacked_bars(title: &str, unit: &str, bars: &[Bar], manifest: &RunManifest) -> String {
    let (left, top, bar_h, gap, plot_w) = (190.0, 50.0, 22.0, 8.0, 480.0);
    let height = top + bars.len() as f64 * (bar_h + gap) + 60.0;
    let width = left + plot_w + 110.0;
    let max = bars
        .iter()
        .map(|b| b.segments.iter().sum::<f64>())
        .fold(0.0, f64::max);
    let scale = if max > 0.0 { plot_w / max } else { 0.0 };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="12">"#);
    s.push_str("<!--\n");
    for line in manifest.lines() {
        let _ = writeln!(s, "{}", xml_escape(&line).replace("--", "- -"));
    }
    s.push_str("-->\n");
    let _ = writeln!(s, r#"<text x="10" y="24" font-size="15">{}</text>"#, xml_escape(title));
    for (i, bar) in bars.iter().enumerate() {
        let y = top + i as f64 * (bar_h + gap);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 8.0,
            y + bar_h * 0.7,
            xml_escape(&bar.label)
        );
        let mut x = left;
        for (k, v) in bar.segments.iter().enumerate() {
            let w = v * scale;
            if w > 0.0 {
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.2}" y="{y:.1}" width="{w:.2}" height="{bar_h:.1}" fill="{}"><title>{}: {}</title></rect>"#,
                    SEGMENT_COLORS[k],
                    SEGMENT_NAMES[k],
                    num(*v)
                );
            }
            x += w;
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{:.3}</text>"#,
            x + 6.0,
            y + bar_h * 0.7,
            bar.segments.iter().sum::<f64>()
        );
    }
    let ly = height - 30.0;
    for (k, name) in SEGMENT_NAMES.iter().enumerate() {
        let lx = left + k as f64 * 120.0;
        let _ = writeln!(s, r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="{}"/>"#, ly - 10.0, SEGMENT_COLORS[k]);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">{name}</text>"#, lx + 16.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, left + 3.0 * 120.0, ly, xml_escape(unit));
    s.push_str("</svg>\n");
    s
}

/// Tornado chart: one bar per parameter spanning its low and high totals,
/// with the baseline as a vertical line.
fn svg_tornado(rows: &[crate::scenarios::SensitivityRow], baseline: f64, manifest: &RunManifest) -> String {
    let (left, top, bar_h, gap, plot_w) = (250.0, 50.0, 16.0, 6.0, 420.0);
    let height = top + rows.len() as f64 * (bar_h + gap) + 40.0;
    let width = left + plot_w + 40.0;
    let lo = rows.iter().map(|r| r.low_total.min(r.high_total)).fold(baseline, f64::min);
    let hi = rows.iter().map(|r| r.low_total.max(r.high_total)).fold(baseline, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x = |v: f64| left + (v - lo) / span * plot_w;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#);
    s.push_str("<!--\n");
    for line in manifest.lines() {
        let _ = writeln!(s, "{}", xml_escape(&line).replace("--", "- -"));
    }
    s.push_str("-->\n");
    let _ = writeln!(s, r#"<text x="10" y="24" font-size="15">Sensitivity of weekly GWP (kg CO2-eq.)</text>"#);
    for (i, r) in rows.iter().enumerate() {
        let y = top + i as f64 * (bar_h + gap);
        let (a, b) = (x(r.low_total), x(r.high_total));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left - 8.0, y + bar_h * 0.75, xml_escape(&r.key.to_string()));
        let _ = writeln!(s, r##"<rect x="{:.2}" y="{y:.1}" width="{:.2}" height="{bar_h:.1}" fill="#4e79a7"><title>{} .. {}</title></rect>"##, a.min(b), (a - b).abs(), num(r.low_total), num(r.high_total));
    }
    let bx = x(baseline);
    let _ = writeln!(s, r#"<line x1="{bx:.2}" y1="{:.1}" x2="{bx:.2}" y2="{:.1}" stroke="black"/>"#, top - 6.0, height - 34.0);
    let _ = writeln!(s, r#"<text x="{bx:.2}" y="{:.1}" text-anchor="middle">baseline {:.3}</text>"#, height - 18.0, baseline);
    s.push_str("</svg>\n");
    s
}

/// Everything a command produced, written only on success.
#[derive(Debug, Default)]
struct Output {
    stdout: String,
    warnings: Vec<String>,
    files: Vec<(String, String)>,
}

impl Output {
    fn table(&mut self, table: &Table, manifest: &RunManifest, format: Format) {
        if !self.stdout.is_empty() {
            self.stdout.push('\n');
        }
        self.stdout += &table.render(format);
        self.files.push((format!("{}.csv", table.name), table.to_csv(manifest)));
    }
}

#[derive(Debug)]
struct CliError(String);

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

type CmdResult = Result<(Output, CommonArgs), CliError>;

fn parse_assignment(text: &str) -> Result<(String, String), CliError> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| CliError(format!("expected KEY=VALUE, got `{text}`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn load_model_params(path: Option<&Path>, overrides: &[String]) -> Result<ModelParams, CliError> {
    let mut params = match path {
        Some(p) => load_params(p)?,
        None => default_params(),
    };
    for o in overrides {
        let (k, v) = parse_assignment(o)?;
        let key: ParamKey = k.parse()?;
        let value = match v.parse::<f64>() {
            Ok(x) if key.is_numeric() => ParamValue::Number(x),
            _ => ParamValue::Text(v),
        };
        key.set(&mut params, &value)?;
    }
    params.validate()?;
    Ok(params)
}

fn load_dataset(diary: Option<&Path>, profiles: Option<&Path>) -> Result<DiaryDataset, CliError> {
    match (diary, profiles) {
        (Some(d), Some(p)) => Ok(parse_dataset(d, p)?),
        _ => Ok(synth_average_participant()),
    }
}

fn parse_ranges(items: &[String]) -> Result<Vec<(ParamKey, f64)>, CliError> {
    if items.is_empty() {
        return Ok(default_ranges());
    }
    items
        .iter()
        .map(|item| {
            let (k, v) = parse_assignment(item)?;
            let fraction: f64 = v
                .parse()
                .map_err(|_| CliError(format!("range for `{k}` is not a number: `{v}`")))?;
            Ok((k.parse::<ParamKey>()?, fraction))
        })
        .collect()
}

fn resolve_scenario(name_or_path: &str) -> Result<ScenarioSpec, CliError> {
    if let Some(spec) = builtin_scenario(name_or_path) {
        return Ok(spec);
    }
    Ok(load_scenario(name_or_path)?)
}

struct Loaded {
    params: ModelParams,
    ds: DiaryDataset,
    opts: FootprintOptions,
}

impl ModelArgs {
    fn load(&self) -> Result<Loaded, CliError> {
        Ok(Loaded {
            params: load_model_params(self.params.as_deref(), &self.overrides)?,
            ds: load_dataset(self.diary.as_deref(), self.profiles.as_deref())?,
            opts: FootprintOptions {
                per_viewer: self.per_viewer,
            },
        })
    }
}

fn participant_arg(ds: &DiaryDataset, id: &Option<String>) -> Result<Option<ParticipantId>, CliError> {
    match id {
        None => Ok(None),
        Some(id) => {
            let id = ParticipantId::new(id.as_str());
            ds.participant(&id)?;
            Ok(Some(id))
        }
    }
}

fn cmd_validate(args: InputArgs, argv: &[String]) -> CmdResult {
    let ds = load_dataset(args.diary.as_deref(), args.profiles.as_deref())?;
    let manifest = RunManifest::new(argv, &default_params(), Some(&ds), None);
    let mut out = Output::default();
    let mut t = Table::new("validate", &["participants", "entries", "warnings"]);
    t.push(vec![
        ds.participants().len().to_string(),
        ds.entries().len().to_string(),
        ds.warnings().len().to_string(),
    ]);
    out.table(&t, &manifest, args.common.format);
    out.warnings.extend(ds.warnings().iter().cloned());
    Ok((out, args.common))
}

fn component_cells(cell: &Cell) -> Vec<String> {
    vec![
        num(cell.hours),
        num(cell.gwp.production_kg),
        num(cell.gwp.operation_kg),
        num(cell.gwp.traffic_kg),
        num(cell.gwp.total()),
    ]
}

const COMPONENT_HEADER: [&str; 5] = ["hours", "production_kg", "operation_kg", "traffic_kg", "total_kg"];

fn cmd_footprint(args: FootprintArgs, argv: &[String]) -> CmdResult {
    let Loaded { mut params, mut ds, opts } = args.model.load()?;
    if let Some(s) = &args.scenario {
        (params, ds) = apply_scenario(&resolve_scenario(s)?, &params, &ds)?;
    }
    let manifest = RunManifest::new(argv, &params, Some(&ds), None);
    let by = args.by;
    let format = args.model.common.format;
    let mut out = Output::default();

    let mean = cohort_mean(&params, &ds, opts)?;
    let mut header = by.columns();
    header.extend(COMPONENT_HEADER);
    let mut table = Table::new(&format!("footprint_by_{}", by.name()), &header);
    let grouped = by.grouped(&mean);
    for (level, cell) in &grouped {
        let mut row = level.clone();
        row.extend(component_cells(cell));
        table.push(row);
    }
    out.table(&table, &manifest, format);

    let weekly = mean.total().gwp.total();
    let mut summary = Table::new("footprint_summary", &["weekly_kg", "annual_kg", "budget_kg", "budget_share"]);
    summary.push(vec![
        num(weekly),
        num(annual_kg(weekly)),
        num(args.budget),
        num(annual_budget_share(weekly, args.budget)?),
    ]);
    out.table(&summary, &manifest, format);

    let mut header = vec!["participant"];
    header.extend(by.columns());
    header.extend(COMPONENT_HEADER);
    let mut per = Table::new(&format!("footprint_by_{}_participants", by.name()), &header);
    for (id, breakdown) in footprints(&params, &ds, opts)? {
        for (level, cell) in by.grouped(&breakdown) {
            let mut row = vec![id.to_string()];
            row.extend(level);
            row.extend(component_cells(&cell));
            per.push(row);
        }
    }
    out.files.push((format!("{}.csv", per.name), per.to_csv(&manifest)));

    let bars: Vec<Bar> = grouped
        .iter()
        .map(|(level, c)| Bar {
            label: level.join(" / "),
            segments: [c.gwp.production_kg, c.gwp.operation_kg, c.gwp.traffic_kg],
        })
        .collect();
    let title = format!("Weekly GWP by {}", by.name().replace('_', " and "));
    out.files.push((
        format!("{}.svg", table.name),
        svg_stacked_bars(&title, "kg CO2-eq. per week", &bars, &manifest),
    ));
    out.warnings.extend(ds.warnings().iter().cloned());
    Ok((out, args.model.common))
}

fn cmd_intensity(args: ParamArgs, argv: &[String]) -> CmdResult {
    let params = load_model_params(args.params.as_deref(), &args.overrides)?;
    let manifest = RunManifest::new(argv, &params, None, None);
    let rows = intensity_table(&params)?;
    let mut header = vec!["component"];
    header.extend(rows.iter().map(|r| r.device.as_str()));
    let mut table = Table::new("intensity", &header);
    let lines: [(&str, fn(&crate::engine::IntensityRow) -> f64); 4] = [
        ("production", |r| r.production_kg_per_h),
        ("electricity", |r| r.electricity_kg_per_h),
        ("data_traffic", |r| r.traffic_kg_per_h),
        ("sum", |r| r.total_kg_per_h),
    ];
    for (name, f) in lines {
        let mut row = vec![name.to_string()];
        row.extend(rows.iter().map(|r| num(f(r))));
        table.push(row);
    }
    let mut out = Output::default();
    out.table(&table, &manifest, args.common.format);
    let bars: Vec<Bar> = rows
        .iter()
        .map(|r| Bar {
            label: r.device.label().to_string(),
            segments: [r.production_kg_per_h, r.electricity_kg_per_h, r.traffic_kg_per_h],
        })
        .collect();
    out.files.push((
        "intensity.svg".into(),
        svg_stacked_bars("GWP intensity per hour of streaming", "kg CO2-eq. per hour", &bars, &manifest),
    ));
    Ok((out, args.common))
}

fn stats_row(label: &str, s: &DescriptiveStats) -> Vec<String> {
    vec![
        label.to_string(),
        s.n.to_string(),
        num(s.mean),
        s.sd.map(num).unwrap_or_default(),
        num(s.min),
        num(s.max),
    ]
}

fn regression_rows(table: &mut Table, fit: &RegressionResult) {
    let i = &fit.intercept;
    table.push(vec![
        fit.outcome.clone(),
        "(intercept)".into(),
        num(i.b),
        num(i.se),
        String::new(),
        num(i.t),
        num(i.p),
        significance_marker(i.p).into(),
        String::new(),
        String::new(),
    ]);
    for c in &fit.coefficients {
        table.push(vec![
            fit.outcome.clone(),
            c.label.clone(),
            num(c.b),
            num(c.se),
            num(c.beta),
            num(c.t),
            num(c.p),
            significance_marker(c.p).into(),
            num(c.r),
            num(c.r_p),
        ]);
    }
}

fn cmd_analyze(args: AnalyzeArgs, argv: &[String]) -> CmdResult {
    let Loaded { params, ds, opts } = args.model.load()?;
    let manifest = RunManifest::new(argv, &params, Some(&ds), None);
    let format = args.model.common.format;
    let mut out = Output::default();
    out.warnings.extend(ds.warnings().iter().cloned());
    if ds.participants().is_empty() {
        out.warnings.push("analysis refused: no participants".into());
        return Ok((out, args.model.common));
    }

    let summary = summarize_behavior(&ds)?;
    let mut desc = Table::new("descriptives", &["variable", "n", "mean", "sd", "min", "max"]);
    desc.push(stats_row("daily_hours", &summary.daily_hours));
    desc.push(stats_row("weekday_daily_hours", &summary.weekday_daily_hours));
    desc.push(stats_row("weekend_daily_hours", &summary.weekend_daily_hours));
    for (slot, s) in &summary.slot_daily_hours {
        desc.push(stats_row(&format!("daily_hours.{slot}"), s));
    }
    for (device, s) in &summary.device_weekly_hours {
        desc.push(stats_row(&format!("weekly_hours.{device}"), s));
    }
    for (platform, s) in &summary.platform_weekly_hours {
        desc.push(stats_row(&format!("weekly_hours.{platform}"), s));
    }
    for (platform, s) in &summary.audience {
        desc.push(stats_row(&format!("audience.{platform}"), s));
    }
    out.table(&desc, &manifest, format);

    let mut shares = Table::new("shares", &["measure", "level", "percent"]);
    for (device, share) in &summary.device_user_share {
        shares.push(vec!["device_users".into(), device.to_string(), num(100.0 * share)]);
    }
    for (platform, m) in &summary.resolution_share {
        for (res, pct) in m {
            shares.push(vec![format!("resolution.{platform}"), res.to_string(), num(*pct)]);
        }
    }
    for (activity, pct) in &summary.parallel_activity_share {
        shares.push(vec!["parallel_activity".into(), activity.clone(), num(*pct)]);
    }
    out.table(&shares, &manifest, format);

    let (weekend, weekday) = weekend_weekday_daily_hours(&ds);
    match paired_ttest(&weekend, &weekday) {
        Ok(t) => {
            let mut table = Table::new(
                "ttest",
                &["comparison", "n", "mean_difference", "t", "df", "p", "sig", "cohens_d"],
            );
            table.push(vec![
                "weekend_vs_weekday_daily_hours".into(),
                weekend.len().to_string(),
                num(t.mean_difference),
                num(t.t_value),
                t.df.to_string(),
                num(t.p_value),
                significance_marker(t.p_value).into(),
                num(t.cohens_d),
            ]);
            out.table(&table, &manifest, format);
        }
        Err(e) => out.warnings.push(format!("weekend/weekday comparison refused: {e}")),
    }

    let gwp: BTreeMap<ParticipantId, f64> = footprints(&params, &ds, opts)?
        .into_iter()
        .map(|(id, b)| (id, b.total().gwp.total()))
        .collect();
    match determinants_report(&ds, &gwp, &CodingConfig::default()) {
        Ok(report) => {
            let mut coef = Table::new(
                "regression",
                &["outcome", "term", "b", "se", "beta", "t", "p", "sig", "r", "r_p"],
            );
            regression_rows(&mut coef, &report.hours);
            regression_rows(&mut coef, &report.gwp);
            out.table(&coef, &manifest, format);
            let mut fit = Table::new("regression_fit", &["outcome", "n", "df_resid", "r_squared", "excluded"]);
            for r in [&report.hours, &report.gwp] {
                fit.push(vec![
                    r.outcome.clone(),
                    r.n.to_string(),
                    r.df_resid.to_string(),
                    num(r.r_squared),
                    report.excluded.to_string(),
                ]);
            }
            out.table(&fit, &manifest, format);
        }
        Err(e) => out.warnings.push(format!("regression refused: {e}")),
    }
    Ok((out, args.model.common))
}

fn cmd_scenario(args: ScenarioArgs, argv: &[String]) -> CmdResult {
    let Loaded { params, ds, opts } = args.model.load()?;
    let spec = resolve_scenario(&args.scenario)?;
    let target = participant_arg(&ds, &args.participant)?;
    let (sp, sds) = apply_scenario(&spec, &params, &ds)?;
    let manifest = RunManifest::new(argv, &params, Some(&ds), None);
    let format = args.model.common.format;

    let breakdown = |p: &ModelParams, d: &DiaryDataset| -> Result<FootprintBreakdown, CliError> {
        Ok(match &target {
            Some(id) => crate::engine::footprint(p, d, id, opts)?,
            None => cohort_mean(p, d, opts)?,
        })
    };
    let before = breakdown(&params, &ds)?.total();
    let after = breakdown(&sp, &sds)?.total();
    let mut table = Table::new(
        &format!("scenario_{}", spec.name),
        &["component", "baseline_kg", "scenario_kg", "delta_kg", "relative_delta"],
    );
    let components = [
        ("production", before.gwp.production_kg, after.gwp.production_kg),
        ("operation", before.gwp.operation_kg, after.gwp.operation_kg),
        ("traffic", before.gwp.traffic_kg, after.gwp.traffic_kg),
        ("total", before.gwp.total(), after.gwp.total()),
        ("hours", before.hours, after.hours),
    ];
    for (name, b, a) in components {
        let rel = if b != 0.0 { num((a - b) / b) } else { String::new() };
        table.push(vec![name.into(), num(b), num(a), num(a - b), rel]);
    }
    let mut out = Output::default();
    out.table(&table, &manifest, format);

    if !spec.behavior.device_substitution.is_empty() {
        let mut subs = Table::new(
            &format!("scenario_{}_substitution", spec.name),
            &["from", "to", "hours", "baseline_kg_per_h", "scenario_kg_per_h", "intensity_ratio"],
        );
        for (from, to) in &spec.behavior.device_substitution {
            let (mut hours, mut kg_before, mut kg_after) = (0.0, 0.0, 0.0);
            for (old, new) in ds.entries().iter().zip(sds.entries()) {
                let in_target = target.as_ref().map_or(true, |id| &old.participant_id == id);
                if old.device != Some(*from) || !in_target {
                    continue;
                }
                if let (Some((_, b)), Some((_, a))) = (
                    entry_footprint(&params, old, opts)?,
                    entry_footprint(&sp, new, opts)?,
                ) {
                    hours += b.hours;
                    kg_before += b.gwp.total();
                    kg_after += a.gwp.total();
                }
            }
            if hours > 0.0 {
                let (rb, ra) = (kg_before / hours, kg_after / hours);
                subs.push(vec![from.to_string(), to.to_string(), num(hours), num(rb), num(ra), num(rb / ra)]);
            }
        }
        out.table(&subs, &manifest, format);
    }
    Ok((out, args.model.common))
}

fn cmd_mc(args: McArgs, argv: &[String]) -> CmdResult {
    let Loaded { params, ds, .. } = args.model.load()?;
    let target = participant_arg(&ds, &args.participant)?;
    let ranges = parse_ranges(&args.ranges)?;
    let cfg = McConfig::triangular_around(&params, &ranges, args.seed, args.samples)?;
    let samples = monte_carlo_samples(&params, &ds, target.as_ref(), &cfg)?;
    let s = summarize_samples(&samples);
    let baseline = weekly_total(&params, &ds, target.as_ref(), FootprintOptions::default())?;
    let manifest = RunManifest::new(argv, &params, Some(&ds), Some(args.seed));
    let mut table = Table::new("mc", &["n_samples", "baseline_kg", "mean_kg", "sd_kg", "p5_kg", "p50_kg", "p95_kg"]);
    table.push(vec![
        s.n_samples.to_string(),
        num(baseline),
        num(s.mean),
        num(s.sd),
        num(s.p5),
        num(s.p50),
        num(s.p95),
    ]);
    let mut out = Output::default();
    out.table(&table, &manifest, args.model.common.format);
    let mut all = Table::new("mc_samples", &["sample", "total_kg"]);
    for (i, v) in samples.iter().enumerate() {
        all.push(vec![i.to_string(), num(*v)]);
    }
    out.files.push(("mc_samples.csv".into(), all.to_csv(&manifest)));
    Ok((out, args.model.common))
}

fn cmd_tornado(args: TornadoArgs, argv: &[String]) -> CmdResult {
    let Loaded { params, ds, .. } = args.model.load()?;
    let target = participant_arg(&ds, &args.participant)?;
    let ranges = parse_ranges(&args.ranges)?;
    let report = tornado(&params, &ds, target.as_ref(), &ranges)?;
    let manifest = RunManifest::new(argv, &params, Some(&ds), None);
    let mut table = Table::new(
        "tornado",
        &["parameter", "fraction", "low_value", "high_value", "low_total_kg", "high_total_kg", "swing_kg"],
    );
    for r in &report.rows {
        table.push(vec![
            r.key.to_string(),
            num(r.fraction),
            num(r.low_value),
            num(r.high_value),
            num(r.low_total),
            num(r.high_total),
            num(r.swing),
        ]);
    }
    let mut out = Output::default();
    out.stdout = format!("baseline_total_kg: {}\n", num(report.baseline_total));
    out.table(&table, &manifest, args.model.common.format);
    out.files.push(("tornado.svg".into(), svg_tornado(&report.rows, report.baseline_total, &manifest)));
    Ok((out, args.model.common))
}

fn write_files(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError(format!("cannot create {}: {e}", dir.display())))?;
    for (name, content) in files {
        let path = dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| CliError(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let argv: Vec<String> = std::iter::once("streamgwp".to_string())
        .chain(args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()))
        .collect();
    let result = match cli.command {
        Command::Validate(a) => cmd_validate(a, &argv),
        Command::Footprint(a) => cmd_footprint(a, &argv),
        Command::Intensity(a) => cmd_intensity(a, &argv),
        Command::Analyze(a) => cmd_analyze(a, &argv),
        Command::Scenario(a) => cmd_scenario(a, &argv),
        Command::Mc(a) => cmd_mc(a, &argv),
        Command::Tornado(a) => cmd_tornado(a, &argv),
    };
    let (out, common) = match result {
        Ok(r) => r,
        Err(CliError(message)) => {
            let _ = writeln!(stderr, "error: {message}");
            return EXIT_ERROR;
        }
    };
    if let Some(dir) = &common.out_dir {
        if let Err(CliError(message)) = write_files(dir, &out.files) {
            let _ = writeln!(stderr, "error: {message}");
            return EXIT_ERROR;
        }
    }
    let _ = write!(stdout, "{}", out.stdout);
    for w in &out.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    if common.strict && !out.warnings.is_empty() {
        EXIT_WARNINGS
    } else {
        EXIT_OK
    }
}
