//! The `heun` command line: argument definitions, command execution and the
//! text / CSV / JSON renderings.
//!
//! Every command produces an [`OutputRecord`]. Its `inputs` hold every
//! parameter after defaults were applied, so `--replay` on a saved JSON
//! record reruns the command and reproduces the file byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Float;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analysis::{self, NegativeOnset};
use crate::error::{Error, Result};
use crate::frobenius;
use crate::model::{self, PhysicalParams, ScaledModel};
use crate::oracle::{self, GridSpec, CONTRACTION_BASE_POINTS};
use crate::precision::{format_sci, format_sig, parse_exact, Precision, DEFAULT_DIGITS};
use crate::ritz::{self, ConvergenceOptions, MAX_BASIS_SIZE};

pub const SCHEMA_VERSION: &str = "1.0";

/// Significant digits of the default (table-style) output.
pub const DEFAULT_OUTPUT_DIGITS: u32 = 10;

#[derive(Debug, Parser)]
#[command(
    name = "heun",
    version,
    about = "Spectrum of the planar oscillator with a 1/xi coupling: truncation roots, Rayleigh-Ritz and a finite-volume check",
    after_help = "Exit status: 0 ok, 1 check failure, 2 usage error, 3 precision exhausted.\nEnvironment: HEUN_DIGITS, HEUN_FORMAT, HEUN_FULL_PRECISION, HEUN_JOBS (flags take precedence)."
)]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,

    /// Rerun the command recorded in a JSON output file.
    #[arg(long, value_name = "FILE")]
    pub replay: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Output format.
    #[arg(long, global = true, value_enum, env = "HEUN_FORMAT", default_value = "text")]
    pub format: Format,

    /// Shorthand for --format json.
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,

    /// Shorthand for --format csv.
    #[arg(long, global = true)]
    pub csv: bool,

    /// Print every working digit instead of 10 significant digits.
    #[arg(
        long,
        global = true,
        env = "HEUN_FULL_PRECISION",
        action = clap::ArgAction::SetTrue,
        value_parser = clap::builder::BoolishValueParser::new()
    )]
    pub full_precision: bool,

    /// Working precision in decimal digits.
    #[arg(long, global = true, env = "HEUN_DIGITS", default_value_t = DEFAULT_DIGITS)]
    pub digits: u32,

    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true, env = "HEUN_JOBS")]
    pub jobs: Option<usize>,

    /// Write the output to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

impl GlobalOpts {
    pub fn resolved_format(&self) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            self.format
        }
    }
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Truncation family (n, l): the fixed W and all real roots in alpha.
    Truncate(TruncateArgs),
    /// Rayleigh-Ritz convergence table over basis sizes.
    Ritz(RitzArgs),
    /// Eigenvalue curves W_nu(alpha) on an alpha grid.
    Sweep(SweepArgs),
    /// Place truncation points on the eigenvalue curves.
    Overlay(OverlayArgs),
    /// Finite-volume spectrum, optionally compared with Ritz.
    Oracle(OracleArgs),
    /// Hellmann-Feynman check dW/dalpha = -<1/xi>.
    Hf(HfArgs),
    /// Effective potential curves -alpha/xi + xi^2.
    Potential(PotentialArgs),
    /// Recompute a printed convergence table for l = 0.
    Table(TableArgs),
    /// Physical parameters to alpha, and W to physical energies.
    Scale(ScaleArgs),
    /// Asymptotic class of the Coulomb-only radial problem.
    Classify(ClassifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Truncate(_) => "truncate",
            Command::Ritz(_) => "ritz",
            Command::Sweep(_) => "sweep",
            Command::Overlay(_) => "overlay",
            Command::Oracle(_) => "oracle",
            Command::Hf(_) => "hf",
            Command::Potential(_) => "potential",
            Command::Table(_) => "table",
            Command::Scale(_) => "scale",
            Command::Classify(_) => "classify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[group(required = true, multiple = false)]
pub struct AlphaArg {
    /// Coupling alpha as a number.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,

    /// Coupling as an exact token: sqrt6, -sqrt2, 3/2, 1/2*sqrt3, 0.25.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_exact: Option<String>,
}

impl AlphaArg {
    pub fn value(&self, prec: Precision) -> Result<Float> {
        match (&self.alpha, &self.alpha_exact) {
            (Some(a), None) if a.is_finite() => Ok(Float::with_val(prec.bits(), *a)),
            (Some(a), None) => Err(Error::InvalidInput(format!("alpha must be finite, got {a}"))),
            (None, Some(t)) => parse_exact(t, prec),
            _ => Err(Error::InvalidInput("give exactly one of --alpha and --alpha-exact".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TruncateArgs {
    /// Truncation order n >= 1.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RitzArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub l: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub alpha: AlphaArg,
    /// Smallest basis size.
    #[arg(long, default_value_t = 2)]
    pub nmin: usize,
    /// Largest basis size.
    #[arg(long, default_value_t = 10)]
    pub nmax: usize,
    /// Levels per row.
    #[arg(long, default_value_t = 4)]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub l: f64,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = analysis::DEFAULT_SWEEP_STEP)]
    pub step: f64,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    /// Basis size used at every grid point.
    #[arg(long, default_value_t = analysis::DEFAULT_SWEEP_BASIS)]
    pub basis_n: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OverlayArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub l: f64,
    /// Families n = 1..=n_max are placed.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub n_max: u32,
    /// Sweep range; by default just wide enough for every root.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default)]
    pub alpha_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default)]
    pub alpha_max: Option<f64>,
    #[arg(long, default_value_t = analysis::DEFAULT_SWEEP_STEP)]
    pub step: f64,
    /// Curves to sweep (default n_max + 2).
    #[arg(long)]
    #[serde(default)]
    pub levels: Option<usize>,
    #[arg(long, default_value_t = analysis::DEFAULT_SWEEP_BASIS)]
    pub basis_n: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub l: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub alpha: AlphaArg,
    #[arg(long, default_value_t = 4)]
    pub count: usize,
    #[arg(long, default_value_t = 12.0)]
    pub xi_max: f64,
    /// Cells of the base grid.
    #[arg(long, default_value_t = 20_000)]
    pub npoints: usize,
    /// Skip the doubled grid and its error estimate.
    #[arg(long)]
    pub no_richardson: bool,
    /// Compare with converged Ritz values.
    #[arg(long)]
    pub compare: bool,
    /// Measure the error contraction under grid halving.
    #[arg(long)]
    pub contraction: bool,
    /// Largest accepted |oracle - Ritz| with --compare.
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct HfArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub l: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub alpha: AlphaArg,
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    /// Central-difference step.
    #[arg(long, default_value_t = analysis::DEFAULT_HF_STEP)]
    pub step: f64,
    /// Combine steps h and h/2.
    #[arg(long)]
    pub richardson: bool,
    /// Largest accepted |dW/dalpha + <1/xi>|.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PotentialArgs {
    /// Comma-separated alpha tokens.
    #[arg(long, default_value = "-sqrt2,1,sqrt2", allow_hyphen_values = true)]
    pub alphas: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub l: f64,
    /// First grid point (default: one step).
    #[arg(long)]
    #[serde(default)]
    pub xi_min: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    pub xi_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Add the centrifugal term l^2/xi^2.
    #[arg(long)]
    pub centrifugal: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TableArgs {
    /// 1 (alpha = -sqrt2) or 2 (alpha = sqrt2).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub which: u8,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScaleArgs {
    #[arg(long)]
    pub m: f64,
    #[arg(long)]
    pub omega: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub q: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub e0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub k: f64,
    /// Scaled eigenvalues to convert to energies (comma-separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default)]
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    /// zeta^2 = 2mE - k^2.
    #[arg(long, allow_hyphen_values = true)]
    pub zeta2: f64,
}

/// Parameters that change results but not the command arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub precision: Precision,
    pub full_precision: bool,
}

impl Settings {
    pub fn new(digits: u32, full_precision: bool) -> Result<Self> {
        Ok(Settings {
            precision: Precision::digits(digits)?,
            full_precision,
        })
    }

    fn fmt(&self) -> Fmt {
        let d = self.precision.digits;
        Fmt {
            sig: if self.full_precision { d } else { d.min(DEFAULT_OUTPUT_DIGITS) } as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub schema_version: String,
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub precision_digits: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut w = csv::WriterBuilder::new().flexible(false).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// Result of one command, renderable in all three formats.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub record: OutputRecord,
    pub text: String,
    pub csv: CsvTable,
    /// Set when a check failed; the output is still complete.
    pub failure: Option<String>,
}

impl Outcome {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.text.clone(),
            Format::Csv => self.csv.render(),
            Format::Json => render_json(&self.record),
        }
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(self.failure.is_some())
    }
}

pub fn render_json(record: &OutputRecord) -> String {
    let mut s = serde_json::to_string_pretty(record).expect("record serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy)]
struct Fmt {
    sig: usize,
}

impl Fmt {
    fn hp(&self, x: &Float) -> String {
        format_sig(x, self.sig)
    }

    fn f(&self, x: f64) -> String {
        if !x.is_finite() {
            return String::new();
        }
        format_sig(&Float::with_val(53, x), self.sig.min(17))
    }

    /// Small diagnostic quantities: gaps, residuals, error bars.
    fn e(&self, x: f64) -> String {
        if !x.is_finite() {
            return String::new();
        }
        format_sci(&Float::with_val(53, x), 3)
    }
}

/// A JSON number carrying exactly the printed digits; empty means null.
fn num(s: &str) -> Value {
    s.parse::<serde_json::Number>().map_or(Value::Null, Value::Number)
}

fn inputs_of(command: &Command, settings: &Settings) -> Value {
    let tagged = serde_json::to_value(command).expect("arguments serialize");
    let mut inputs = match tagged {
        Value::Object(mut m) => match m.remove(command.name()) {
            Some(Value::Object(args)) => args,
            _ => Map::new(),
        },
        _ => Map::new(),
    };
    inputs.insert("digits".into(), json!(settings.precision.digits));
    inputs.insert("full_precision".into(), json!(settings.full_precision));
    Value::Object(inputs)
}

/// Reconstructs the command and settings stored in a record.
pub fn from_record(record: &OutputRecord) -> Result<(Command, Settings)> {
    let mut inputs = match &record.inputs {
        Value::Object(m) => m.clone(),
        _ => return Err(Error::InvalidInput("record inputs must be an object".into())),
    };
    let digits = inputs
        .remove("digits")
        .and_then(|v| v.as_u64())
        .map_or(Ok(record.precision_digits), u32::try_from)
        .map_err(|_| Error::InvalidInput("digits out of range".into()))?;
    let full = inputs
        .remove("full_precision")
        .and_then(|v| v.as_bool())
        .unwrap_or(false);
    let mut tagged = Map::new();
    tagged.insert(record.command.clone(), Value::Object(inputs));
    let command: Command = serde_json::from_value(Value::Object(tagged))
        .map_err(|e| Error::InvalidInput(format!("cannot replay record: {e}")))?;
    Ok((command, Settings::new(digits, full)?))
}

pub fn read_record(path: &Path) -> Result<OutputRecord> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{} is not an output record: {e}", path.display())))
}

/// Runs one command on the current rayon pool.
pub fn execute(command: &Command, settings: &Settings) -> Result<Outcome> {
    let body = match command {
        Command::Truncate(a) => truncate(a, settings)?,
        Command::Ritz(a) => ritz_table(a, settings)?,
        Command::Sweep(a) => sweep(a, settings)?,
        Command::Overlay(a) => overlay(a, settings)?,
        Command::Oracle(a) => oracle_cmd(a, settings)?,
        Command::Hf(a) => hf(a, settings)?,
        Command::Potential(a) => potential(a, settings)?,
        Command::Table(a) => table(a, settings)?,
        Command::Scale(a) => scale(a, settings)?,
        Command::Classify(a) => classify(a)?,
    };
    Ok(Outcome {
        record: OutputRecord {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.name().to_string(),
            inputs: inputs_of(command, settings),
            results: body.results,
            precision_digits: settings.precision.digits,
        },
        text: body.text,
        csv: body.csv,
        failure: body.failure,
    })
}

/// Entry point of the binary; returns the process exit status.
pub fn main_with(cli: Cli) -> i32 {
    match run(&cli) {
        Ok((outcome, format)) => {
            let rendered = outcome.render(format);
            if let Err(e) = emit(&rendered, cli.opts.out.as_deref()) {
                eprintln!("error: {e}");
                return 2;
            }
            if let Some(msg) = &outcome.failure {
                eprintln!("check failed: {msg}");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::PrecisionExhausted { required_digits, .. } = &e {
                eprintln!("hint: rerun with --digits {required_digits}");
            }
            e.exit_code()
        }
    }
}

/// Resolves replay / subcommand and runs inside a pool sized by `--jobs`.
pub fn run(cli: &Cli) -> Result<(Outcome, Format)> {
    let (command, settings, format) = match (&cli.replay, &cli.command) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidInput("--replay cannot be combined with a subcommand".into()))
        }
        (None, None) => return Err(Error::InvalidInput("no subcommand given; see --help".into())),
        (Some(path), None) => {
            let (c, s) = from_record(&read_record(path)?)?;
            (c, s, Format::Json)
        }
        (None, Some(c)) => (
            c.clone(),
            Settings::new(cli.opts.digits, cli.opts.full_precision)?,
            cli.opts.resolved_format(),
        ),
    };
    let outcome = match cli.opts.jobs {
        Some(0) => return Err(Error::InvalidInput("--jobs must be at least 1".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot start {j} workers: {e}")))?
            .install(|| execute(&command, &settings))?,
        None => execute(&command, &settings)?,
    };
    Ok((outcome, format))
}

fn emit(rendered: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, rendered),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(rendered.as_bytes())?;
            stdout.flush()
        }
    }
}

struct Body {
    results: Value,
    text: String,
    csv: CsvTable,
    failure: Option<String>,
}

fn truncate(a: &TruncateArgs, s: &Settings) -> Result<Body> {
    let f = s.fmt();
    let sol = frobenius::truncation_solutions_with(a.l, a.n, s.precision)?;
    let w = f.hp(&sol.w_fixed);
    let mut text = format!("n = {}, l = {}\nW = {w}\nroots ({}):\n", a.n, a.l, sol.alpha_roots.len());
    let mut csv = CsvTable::new(&["n", "l", "W", "root_index", "alpha", "nodes"]);
    let mut roots = Vec::new();
    for (i, r) in sol.alpha_roots.iter().enumerate() {
        let nodes = frobenius::polynomial_wavefunction(&sol, i + 1)?.node_count();
        let alpha = f.hp(r);
        let _ = writeln!(text, "  {:>2}  {alpha:>w$}  nodes {nodes}", i + 1, w = f.sig + 3);
        csv.rows.push(vec![
            a.n.to_string(),
            a.l.to_string(),
            w.clone(),
            (i + 1).to_string(),
            alpha.clone(),
            nodes.to_string(),
        ]);
        roots.push(json!({"index": i + 1, "alpha": num(&alpha), "nodes": nodes}));
    }
    Ok(Body {
        results: json!({"W": num(&w), "root_count": roots.len(), "roots": roots}),
        text,
        csv,
        failure: None,
    })
}

fn ritz_table(a: &RitzArgs, s: &Settings) -> Result<Body> {
    if a.count == 0 || a.nmin == 0 || a.nmin > a.nmax || a.nmax > MAX_BASIS_SIZE {
        return Err(Error::InvalidInput(format!(
            "need 1 <= nmin <= nmax <= {MAX_BASIS_SIZE} and count >= 1"
        )));
    }
    let f = s.fmt();
    let model = ScaledModel::with_alpha(a.l, a.alpha.value(s.precision)?)?;
    let sizes: Vec<usize> = (a.nmin..=a.nmax).collect();
    let study = ritz::convergence_study(&model, &sizes, a.count, s.precision)?;

    let mut header = vec!["N".to_string()];
    header.extend((0..a.count).map(|k| format!("W{k}")));
    let mut csv = CsvTable {
        header,
        rows: Vec::new(),
    };
    let width = f.sig + 4;
    let mut text = format!("l = {}, alpha = {}\n{:>3}", a.l, f.hp(&model.alpha), "N");
    for k in 0..a.count {
        let _ = write!(text, "  {:>width$}", format!("W{k}"));
    }
    text.push('\n');
    let mut rows = Vec::new();
    for (n, values) in study.rows() {
        let cells: Vec<String> = values.iter().map(|v| f.hp(v)).collect();
        let _ = write!(text, "{n:>3}");
        for c in &cells {
            let _ = write!(text, "  {c:>width$}");
        }
        text.push('\n');
        let mut row = vec![n.to_string()];
        row.extend(cells.iter().cloned());
        row.resize(a.count + 1, String::new());
        csv.rows.push(row);
        rows.push(json!({"N": n, "W": cells.iter().map(|c| num(c)).collect::<Vec<_>>()}));
    }
    let last = study.last();
    Ok(Body {
        results: json!({
            "alpha": num(&f.hp(&model.alpha)),
            "rows": rows,
            "lost_digits_at_nmax": num(&format!("{:.1}", last.lost_digits)),
        }),
        text,
        csv,
        failure: None,
    })
}

fn onset_json(o: &NegativeOnset, f: Fmt) -> Value {
    match o {
        NegativeOnset::Bracket { lo, hi, w_lo, w_hi } => json!({
            "found": true,
            "alpha_lo": num(&lo.to_string()),
            "alpha_hi": num(&hi.to_string()),
            "W_lo": num(&f.f(*w_lo)),
            "W_hi": num(&f.f(*w_hi)),
        }),
        NegativeOnset::NotFound {
            alpha_min,
            alpha_max,
            negative_at_start,
        } => json!({
            "found": false,
            "alpha_min": num(&alpha_min.to_string()),
            "alpha_max": num(&alpha_max.to_string()),
            "negative_at_start": negative_at_start,
        }),
    }
}

fn onset_text(o: &NegativeOnset) -> String {
    match o {
        NegativeOnset::Bracket { lo, hi, .. } => {
            format!("ground level turns negative between alpha = {lo} and {hi}\n")
        }
        NegativeOnset::NotFound {
            alpha_min,
            alpha_max,
            negative_at_start: true,
        } => format!("ground level already negative at alpha = {alpha_min} (range [{alpha_min}, {alpha_max}])\n"),
        NegativeOnset::NotFound {
            alpha_min, alpha_max, ..
        } => format!("ground level stays non-negative on [{alpha_min}, {alpha_max}]\n"),
    }
}

fn sweep(a: &SweepArgs, s: &Settings) -> Result<Body> {
    let f = s.fmt();
    let curves = analysis::spectrum_sweep(a.l, a.alpha_min, a.alpha_max, a.step, a.levels, a.basis_n, s.precision)?;
    let onset = analysis::negative_onset(&curves)?;
    let mut csv = CsvTable::new(&["l", "level", "alpha", "W", "basis_N"]);
    let width = f.sig.min(17) + 4;
    let mut text = format!("l = {}, N = {}\n{:>8}", a.l, a.basis_n, "alpha");
    for c in &curves {
        let _ = write!(text, "  {:>width$}", format!("W{}", c.level));
    }
    text.push('\n');
    for k in 0..curves[0].samples.len() {
        let alpha = curves[0].samples[k].0;
        let _ = write!(text, "{alpha:>8}");
        for c in &curves {
            let w = f.f(c.samples[k].1);
            let _ = write!(text, "  {w:>width$}");
            csv.rows.push(vec![
                a.l.to_string(),
                c.level.to_string(),
                alpha.to_string(),
                w,
                a.basis_n.to_string(),
            ]);
        }
        text.push('\n');
    }
    text.push_str(&onset_text(&onset));
    let curves_json: Vec<Value> = curves
        .iter()
        .map(|c| {
            json!({
                "level": c.level,
                "samples": c.samples.iter().map(|&(al, w)| json!([num(&al.to_string()), num(&f.f(w))])).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(Body {
        results: json!({
            "basis_N": a.basis_n,
            "curves": curves_json,
            "negative_onset": onset_json(&onset, f),
        }),
        text,
        csv,
        failure: None,
    })
}

fn overlay_range(a: &OverlayArgs, prec: Precision) -> Result<(f64, f64)> {
    if let (Some(lo), Some(hi)) = (a.alpha_min, a.alpha_max) {
        return Ok((lo, hi));
    }
    let mut reach = 0.0f64;
    for n in 1..=a.n_max {
        let sol = frobenius::truncation_solutions_with(a.l, n, prec)?;
        reach = sol.roots_f64().iter().fold(reach, |m, r| m.max(r.abs()));
    }
    let half = ((reach + 0.2) / a.step).ceil() * a.step;
    let half = (half * 1e12).round() / 1e12;
    Ok((a.alpha_min.unwrap_or(-half), a.alpha_max.unwrap_or(half)))
}

fn overlay(a: &OverlayArgs, s: &Settings) -> Result<Body> {
    let f = s.fmt();
    let levels = a.levels.unwrap_or(a.n_max as usize + 2);
    let (lo, hi) = overlay_range(a, s.precision)?;
    let curves = analysis::spectrum_sweep(a.l, lo, hi, a.step, levels, a.basis_n, s.precision)?;
    let report = analysis::truncation_overlay(a.l, a.n_max, &curves, s.precision)?;
    let mut csv = CsvTable::new(&[
        "n",
        "root_index",
        "alpha",
        "W",
        "level",
        "nodes",
        "curve_gap",
        "ritz_gap",
        "points_on_vertical",
    ]);
    let mut text = format!(
        "l = {}, families n <= {}, sweep [{lo}, {hi}] step {}, N = {}\n{:>2} {:>2}  {:>w$}  {:>w$}  level  nodes  {:>9}  {:>9}\n",
        a.l,
        a.n_max,
        a.step,
        a.basis_n,
        "n",
        "i",
        "alpha",
        "W",
        "curve_gap",
        "ritz_gap",
        w = f.sig + 3
    );
    let mut points = Vec::new();
    for p in &report.points {
        let alpha = f.hp(&parse_exact(&p.alpha_exact, s.precision)?);
        let w = f.f(p.w_truncation);
        let level = p.matched_levels[0];
        let _ = writeln!(
            text,
            "{:>2} {:>2}  {alpha:>aw$}  {w:>aw$}  {level:>5}  {:>5}  {:>9}  {:>9}",
            p.n,
            p.root_index,
            p.nodes,
            f.e(p.curve_gap),
            f.e(p.ritz_gap),
            aw = f.sig + 3
        );
        csv.rows.push(vec![
            p.n.to_string(),
            p.root_index.to_string(),
            alpha.clone(),
            w.clone(),
            level.to_string(),
            p.nodes.to_string(),
            f.e(p.curve_gap),
            f.e(p.ritz_gap),
            p.points_on_vertical.to_string(),
        ]);
        points.push(json!({
            "n": p.n,
            "root_index": p.root_index,
            "alpha": num(&alpha),
            "W": num(&w),
            "level": level,
            "nodes": p.nodes,
            "curve_gap": num(&f.e(p.curve_gap)),
            "ritz_gap": num(&f.e(p.ritz_gap)),
            "points_on_vertical": p.points_on_vertical,
        }));
    }
    let ladder: Vec<Value> = report
        .zero_alpha_ladder
        .iter()
        .map(|&(n, lv)| json!({"n": n, "level": lv}))
        .collect();
    let _ = writeln!(
        text,
        "each nonzero root carries exactly one truncation point: {}",
        if report.isolated { "yes" } else { "no" }
    );
    if !report.zero_alpha_ladder.is_empty() {
        let desc: Vec<String> = report
            .zero_alpha_ladder
            .iter()
            .map(|(n, lv)| format!("n={n} -> level {lv}"))
            .collect();
        let _ = writeln!(text, "alpha = 0 ladder: {}", desc.join(", "));
    }
    Ok(Body {
        results: json!({
            "alpha_range": [num(&lo.to_string()), num(&hi.to_string())],
            "basis_N": a.basis_n,
            "levels": levels,
            "isolated": report.isolated,
            "points": points,
            "zero_alpha_ladder": ladder,
        }),
        text,
        csv,
        failure: (!report.isolated).then(|| "a nonzero root carries more than one truncation point".to_string()),
    })
}

fn oracle_cmd(a: &OracleArgs, s: &Settings) -> Result<Body> {
    let f = s.fmt();
    let model = ScaledModel::with_alpha(a.l, a.alpha.value(s.precision)?)?;
    let grid = GridSpec {
        xi_max: a.xi_max,
        npoints: a.npoints,
        richardson: !a.no_richardson,
    };
    let spec = oracle::fd_spectrum(&model, &grid, a.count)?;
    let ritz_vals = if a.compare {
        let r = ritz::converged_spectrum(&model, a.count, s.precision, ConvergenceOptions::default())?;
        Some(r.eigenvalues_f64())
    } else {
        None
    };
    let ratios = if a.contraction {
        let base = GridSpec {
            npoints: CONTRACTION_BASE_POINTS,
            ..grid
        };
        Some(oracle::grid_contraction(&model, &base, a.count)?)
    } else {
        None
    };

    let mut header = vec!["level", "W", "error_bar", "coarse", "fine", "boundary_mass"];
    if ritz_vals.is_some() {
        header.extend(["ritz", "diff"]);
    }
    if ratios.is_some() {
        header.push("contraction");
    }
    let mut csv = CsvTable::new(&header);
    let mut text = format!(
        "l = {}, alpha = {}, xi_max = {}, cells = {}{}\n",
        a.l,
        f.hp(&model.alpha),
        a.xi_max,
        a.npoints,
        if grid.richardson { " and doubled" } else { "" }
    );
    let mut failures = Vec::new();
    let mut levels = Vec::new();
    for (k, lv) in spec.levels.iter().enumerate() {
        let mut row = vec![
            k.to_string(),
            f.f(lv.value),
            f.e(lv.error_bar),
            f.f(lv.coarse),
            lv.fine.map(|x| f.f(x)).unwrap_or_default(),
            f.e(lv.boundary_mass),
        ];
        let _ = write!(text, "  W{k} = {}  +- {}", f.f(lv.value), f.e(lv.error_bar));
        let mut entry = json!({
            "level": k,
            "W": num(&f.f(lv.value)),
            "error_bar": num(&f.e(lv.error_bar)),
            "coarse": num(&f.f(lv.coarse)),
            "fine": lv.fine.map_or(Value::Null, |x| num(&f.f(x))),
            "boundary_mass": num(&f.e(lv.boundary_mass)),
        });
        if let Some(rv) = &ritz_vals {
            let diff = lv.value - rv[k];
            if !(diff.abs() <= a.tolerance) {
                failures.push(format!("level {k}: |oracle - ritz| = {:.3e} > {:e}", diff.abs(), a.tolerance));
            }
            row.extend([f.f(rv[k]), f.e(diff)]);
            let _ = write!(text, "  ritz {}  diff {}", f.f(rv[k]), f.e(diff));
            entry["ritz"] = num(&f.f(rv[k]));
            entry["diff"] = num(&f.e(diff));
        }
        if let Some(rs) = &ratios {
            if !(3.0..=5.0).contains(&rs[k]) {
                failures.push(format!("level {k}: contraction ratio {:.3} outside [3, 5]", rs[k]));
            }
            row.push(format!("{:.4}", rs[k]));
            let _ = write!(text, "  contraction {:.4}", rs[k]);
            entry["contraction"] = num(&format!("{:.4}", rs[k]));
        }
        text.push('\n');
        csv.rows.push(row);
        levels.push(entry);
    }
    Ok(Body {
        results: json!({"levels": levels, "pass": failures.is_empty()}),
        text,
        csv,
        failure: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}

fn hf(a: &HfArgs, s: &Settings) -> Result<Body> {
    let f = s.fmt();
    let alpha = a.alpha.value(s.precision)?;
    let r = analysis::hellmann_feynman_check(a.l, &alpha, a.level, a.step, a.richardson, s.precision)?;
    let pass = r.abs_diff < a.tolerance;
    let alpha_s = f.hp(&alpha);
    let text = format!(
        "l = {}, alpha = {alpha_s}, level {} (N = {}), W = {}\n  dW/dalpha = {}\n  -<1/xi>   = {}\n  |diff|    = {}  {}\n",
        a.l,
        a.level,
        r.basis_size,
        f.f(r.w),
        f.f(r.lhs),
        f.f(r.rhs),
        f.e(r.abs_diff),
        if pass { "PASS" } else { "FAIL" }
    );
    let mut csv = CsvTable::new(&["l", "alpha", "level", "lhs", "rhs", "abs_diff", "step", "basis_N", "W"]);
    csv.rows.push(vec![
        a.l.to_string(),
        alpha_s.clone(),
        a.level.to_string(),
        f.f(r.lhs),
        f.f(r.rhs),
        f.e(r.abs_diff),
        a.step.to_string(),
        r.basis_size.to_string(),
        f.f(r.w),
    ]);
    Ok(Body {
        results: json!({
            "alpha": num(&alpha_s),
            "level": a.level,
            "lhs": num(&f.f(r.lhs)),
            "rhs": num(&f.f(r.rhs)),
            "abs_diff": num(&f.e(r.abs_diff)),
            "basis_N": r.basis_size,
            "W": num(&f.f(r.w)),
            "pass": pass,
        }),
        text,
        csv,
        failure: (!pass).then(|| format!("|dW/dalpha + <1/xi>| = {:.3e} >= {:e}", r.abs_diff, a.tolerance)),
    })
}

fn potential(a: &PotentialArgs, s: &Settings) -> Result<Body> {
    let f = s.fmt();
    if !(a.step > 0.0) || !a.step.is_finite() {
        return Err(Error::InvalidInput(format!("step must be positive, got {}", a.step)));
    }
    let xi_min = a.xi_min.unwrap_or(a.step);
    if !(xi_min > 0.0) || !(a.xi_max >= xi_min) {
        return Err(Error::InvalidInput("need 0 < xi_min <= xi_max".into()));
    }
    let tokens: Vec<&str> = a.alphas.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if tokens.is_empty() {
        return Err(Error::InvalidInput("no alpha values given".into()));
    }
    let count = ((a.xi_max - xi_min) / a.step + 1e-9).floor() as usize;
    let xs: Vec<f64> = (0..=count)
        .map(|k| ((xi_min + k as f64 * a.step) * 1e12).round() / 1e12)
        .collect();
    let mut models = Vec::new();
    for t in &tokens {
        let alpha = parse_exact(t, s.precision)?;
        models.push(ScaledModel::with_alpha(a.l, alpha)?);
    }
    let mut csv = CsvTable::new(&["alpha_token", "alpha", "xi", "V"]);
    let mut curves = Vec::new();
    let mut text = format!("{:>8}", "xi");
    for t in &tokens {
        let _ = write!(text, "  {:>w$}", format!("V({t})"), w = f.sig.min(17) + 4);
    }
    text.push('\n');
    let mut table = vec![Vec::new(); xs.len()];
    for (t, m) in tokens.iter().zip(&models) {
        let alpha_s = f.hp(&m.alpha);
        let mut samples = Vec::new();
        for (k, &x) in xs.iter().enumerate() {
            let v = f.f(model::effective_potential(m, x, a.centrifugal)?);
            csv.rows.push(vec![t.to_string(), alpha_s.clone(), x.to_string(), v.clone()]);
            samples.push(json!([num(&x.to_string()), num(&v)]));
            table[k].push(v);
        }
        let minimum = if a.centrifugal && a.l != 0.0 {
            Value::Null
        } else {
            model::potential_minimum(m.alpha_f64())
                .map_or(Value::Null, |(x, v)| json!({"xi": num(&f.f(x)), "V": num(&f.f(v))}))
        };
        curves.push(json!({"alpha_token": t, "alpha": num(&alpha_s), "minimum": minimum, "samples": samples}));
    }
    for (x, row) in xs.iter().zip(&table) {
        let _ = write!(text, "{x:>8}");
        for v in row {
            let _ = write!(text, "  {v:>w$}", w = f.sig.min(17) + 4);
        }
        text.push('\n');
    }
    Ok(Body {
        results: json!({"centrifugal": a.centrifugal, "curves": curves}),
        text,
        csv,
        failure: None,
    })
}

fn table(a: &TableArgs, s: &Settings) -> Result<Body> {
    let report = analysis::reproduce_table(a.which, s.precision)?;
    let mut csv = CsvTable::new(&["N", "level", "printed", "computed", "pass"]);
    let mut text = format!("table {} (l = 0, alpha = {})\n", report.which, report.alpha);
    let mut rows = Vec::new();
    for row in &report.rows {
        let _ = write!(text, "{:>3}", row.n);
        for c in &row.cells {
            let mark = if c.pass { " " } else { "*" };
            let _ = write!(text, "  {:>13}{mark}", c.computed);
            csv.rows.push(vec![
                row.n.to_string(),
                c.level.to_string(),
                c.printed.clone(),
                c.computed.clone(),
                c.pass.to_string(),
            ]);
        }
        text.push('\n');
        rows.push(json!({
            "N": row.n,
            "cells": row.cells.iter().map(|c| json!({
                "level": c.level,
                "printed": c.printed,
                "computed": c.computed,
                "pass": c.pass,
            })).collect::<Vec<_>>(),
        }));
    }
    let verdict = if report.pass() { "PASS" } else { "FAIL" };
    let _ = writeln!(text, "{verdict} with {} cell diffs", report.mismatches);
    for row in &report.rows {
        for c in row.cells.iter().filter(|c| !c.pass) {
            let _ = writeln!(text, "  N = {}, W{}: printed {}, computed {}", row.n, c.level, c.printed, c.computed);
        }
    }
    Ok(Body {
        results: json!({
            "alpha": report.alpha,
            "mismatches": report.mismatches,
            "pass": report.pass(),
            "rows": rows,
        }),
        text,
        csv,
        failure: (!report.pass()).then(|| format!("{} table cells differ", report.mismatches)),
    })
}

fn scale(a: &ScaleArgs, s: &Settings) -> Result<Body> {
    let f = s.fmt();
    let params = PhysicalParams::new(a.m, a.omega, a.q, a.e0, a.k)?;
    let alpha = model::scale(&params, 0.0)?.alpha_f64();
    let mut csv = CsvTable::new(&["quantity", "W", "value"]);
    csv.rows.push(vec!["alpha".into(), String::new(), f.f(alpha)]);
    csv.rows.push(vec!["q_tilde".into(), String::new(), f.f(params.q_tilde())]);
    let mut text = format!("alpha   = {}\nQ tilde = {}\n", f.f(alpha), f.f(params.q_tilde()));
    let mut energies = Vec::new();
    for &w in &a.w {
        let e = model::unscale_energy(w, &params)?;
        let _ = writeln!(text, "W = {w} -> E = {}", f.f(e));
        csv.rows.push(vec!["energy".into(), w.to_string(), f.f(e)]);
        energies.push(json!({"W": num(&w.to_string()), "E": num(&f.f(e))}));
    }
    Ok(Body {
        results: json!({"alpha": num(&f.f(alpha)), "q_tilde": num(&f.f(params.q_tilde())), "energies": energies}),
        text,
        csv,
        failure: None,
    })
}

fn classify(a: &ClassifyArgs) -> Result<Body> {
    let c = model::classify_asymptotics(a.zeta2)?;
    let kind = match c.kind {
        model::AsymptoticKind::Scattering => "scattering",
        model::AsymptoticKind::BoundCandidate => "bound_candidate",
    };
    let tau = c.tau.map(|t| t.to_string()).unwrap_or_default();
    let mut csv = CsvTable::new(&["zeta2", "kind", "tau"]);
    csv.rows.push(vec![a.zeta2.to_string(), kind.into(), tau.clone()]);
    let mut text = format!("zeta^2 = {}: {kind}", a.zeta2);
    if !tau.is_empty() {
        let _ = write!(text, ", tau = {tau}");
    }
    let _ = writeln!(text, "\nnote: {}", model::AsymptoticClass::NOTE);
    Ok(Body {
        results: json!({"kind": kind, "tau": c.tau.map_or(Value::Null, |t| num(&t.to_string())), "note": model::AsymptoticClass::NOTE}),
        text,
        csv,
        failure: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("heun").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults_are_echoed() {
        let cli = parse(&["ritz", "--alpha-exact", "-sqrt2"]);
        let cmd = cli.command.unwrap();
        let v = inputs_of(&cmd, &Settings::new(50, false).unwrap());
        assert_eq!(v["nmax"], json!(10));
        assert_eq!(v["alpha_exact"], json!("-sqrt2"));
        assert!(v.get("alpha").is_none());
        assert_eq!(v["digits"], json!(50));
    }

    #[test]
    fn record_round_trip() {
        let cli = parse(&["sweep", "--alpha-min", "-1", "--alpha-max", "1", "--levels", "2"]);
        let cmd = cli.command.unwrap();
        let settings = Settings::new(30, true).unwrap();
        let record = OutputRecord {
            schema_version: SCHEMA_VERSION.into(),
            command: cmd.name().into(),
            inputs: inputs_of(&cmd, &settings),
            results: Value::Null,
            precision_digits: 30,
        };
        let (back, s) = from_record(&record).unwrap();
        assert_eq!(back, cmd);
        assert_eq!(s, settings);
    }

    #[test]
    fn alpha_sources_are_exclusive() {
        let r = Cli::try_parse_from(["heun", "ritz", "--alpha", "1", "--alpha-exact", "sqrt2"]);
        assert!(r.is_err());
        assert!(Cli::try_parse_from(["heun", "ritz"]).is_err());
        assert!(Cli::try_parse_from(["heun", "truncate", "--n", "0"]).is_err());
    }

    #[test]
    fn csv_quotes_per_rfc4180() {
        let t = CsvTable {
            header: vec!["a".into(), "b".into()],
            rows: vec![vec!["x,y".into(), "say \"hi\"".into()], vec![String::new(), "1".into()]],
        };
        assert_eq!(t.render(), "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n,1\n");
    }

    #[test]
    fn number_tokens() {
        assert_eq!(serde_json::to_string(&num("4.000000000")).unwrap(), "4.000000000");
        assert_eq!(num(""), Value::Null);
    }
}
