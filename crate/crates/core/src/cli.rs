//! Command-line front end. Every command writes its result together with a
//! [`RunManifest`]: embedded for JSON, as a `<out>.manifest.json` sidecar for
//! CSV written to a file.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::appendix::{cascade_scan, VANISH_TOL};
use crate::error::Error;
use crate::families::{
    closed_form_3d, closed_form_4d_a, closed_form_4d_b, coupled_form_4d_b, invariants_3d,
    measure_anchor_3d, omega_3d, omega_4d, qubit_anchor, qubit_circle_family, Zeta4,
};
use crate::figures::{fig1, fig1_anchor, fig2a, fig2b, format_value, FigureData};
use crate::geometry::{
    affine_rank, masking_constraints, sample_constrained, xi_embed, LinearConstraint, RANK_TOL,
};
use crate::linalg::max_abs_diff;
use crate::masker::{builtin_example_3d, builtin_example_4d, qubit_circle_masker, Masker};
use crate::measure::{epsilon_sweep, DEFAULT_DELTA};
use crate::protocol::{decode_fidelities, single_share_leakage, SecretFamily};
use crate::reduce::{masking_residual, partial_trace_a, partial_trace_b, DEFAULT_TOL};
use crate::search::{find_masker_for_circle, optimize_masker, SearchConfig};
use crate::statespace::{angles_to_amplitudes, HyperAngles, PureState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "maskgrid",
    version,
    about = "Numerical lab for masking quantum information with isometries"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the closed-form reduced states of a built-in example.
    Example(ExampleArgs),
    /// Emit a parameter grid of an example's maskable set.
    Figure(FigureArgs),
    /// Monte Carlo residual fraction over an epsilon grid.
    Sweep(SweepArgs),
    /// Embed states into the real coordinates of the masking constraints.
    Embed(EmbedArgs),
    /// Run the single-phase solvability cascade on a masker.
    Classify(ClassifyArgs),
    /// Search for a masker of a state set.
    Search(SearchArgs),
    /// Two-share secret sharing demo.
    Share(ShareArgs),
    /// Decide whether a masker masks a state set.
    MaskCheck(MaskCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExampleName {
    #[value(name = "3d")]
    ThreeD,
    #[value(name = "4d")]
    FourD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureName {
    Fig1,
    Fig2a,
    Fig2b,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct MaskerArgs {
    /// builtin3, builtin4, qubit:ALPHA or a masker JSON path.
    #[arg(long, default_value = "builtin3")]
    pub masker: String,
    /// Accept a masker file that fails the isometry check.
    #[arg(long)]
    pub allow_non_isometry: bool,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    pub which: ExampleName,
    /// Comma-separated anchor: 4 angles for 3d, 5 block coordinates for 4d.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub anchor: Option<Vec<f64>>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    pub which: FigureName,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub anchor: Option<Vec<f64>>,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub masker: MaskerArgs,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub anchor: Option<Vec<f64>>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.128,0.064,0.032,0.016,0.008,0.004,0.002,0.001"
    )]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub masker: MaskerArgs,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub anchor: Option<Vec<f64>>,
    /// States to embed; sampled from the masker's family when absent.
    #[arg(long)]
    pub states: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the anchored masking constraints as JSON.
    #[arg(long)]
    pub constraints_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub masker: MaskerArgs,
    #[arg(long, default_value_t = VANISH_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// JSON array of states.
    #[arg(
        long,
        conflicts_with = "constraints",
        required_unless_present = "constraints"
    )]
    pub states: Option<PathBuf>,
    /// JSON array of linear constraints; states are sampled from their set.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// B-side dimension; defaults to the state dimension.
    #[arg(long)]
    pub db: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub step: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Masker JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Objective trace CSV output.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ShareArgs {
    #[command(flatten)]
    pub masker: MaskerArgs,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub anchor: Option<Vec<f64>>,
    /// Codebook size.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MaskCheckArgs {
    #[command(flatten)]
    pub masker: MaskerArgs,
    #[arg(long)]
    pub states: PathBuf,
    /// Reference state; defaults to the first state of the set.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub anchor: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Provenance written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, verbatim.
    pub flags: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
}

impl RunManifest {
    fn new(command: &str, flags: &[String], seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            flags: flags.to_vec(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs: Vec::new(),
            summary: None,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Assertion(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotMasked { .. } => Failure::Assertion(e.to_string()),
            e => Failure::Lib(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(e.into())
    }
}

type CmdResult = std::result::Result<bool, Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let flags: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match dispatch(cli.command, &flags) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_ASSERTION,
        Err(Failure::Assertion(msg)) => {
            eprintln!("maskgrid: {msg}");
            EXIT_ASSERTION
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("maskgrid: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Lib(Error::Io(e))) if e.kind() == io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(Failure::Lib(e)) => {
            eprintln!("maskgrid: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cmd: Command, flags: &[String]) -> CmdResult {
    match cmd {
        Command::Example(a) => cmd_example(a, flags),
        Command::Figure(a) => cmd_figure(a, flags),
        Command::Sweep(a) => cmd_sweep(a, flags),
        Command::Embed(a) => cmd_embed(a, flags),
        Command::Classify(a) => cmd_classify(a, flags),
        Command::Search(a) => cmd_search(a, flags),
        Command::Share(a) => cmd_share(a, flags),
        Command::MaskCheck(a) => cmd_mask_check(a, flags),
    }
}

// ---- masker and anchor resolution ----

#[derive(Debug, Clone, PartialEq)]
enum MaskerSpec {
    Builtin3,
    Builtin4,
    Qubit(f64),
    File(PathBuf),
}

impl MaskerSpec {
    fn parse(s: &str) -> std::result::Result<Self, Failure> {
        Ok(match s {
            "builtin3" => Self::Builtin3,
            "builtin4" => Self::Builtin4,
            _ => match s.strip_prefix("qubit:") {
                Some(alpha) => Self::Qubit(
                    alpha
                        .parse()
                        .map_err(|_| Failure::Usage(format!("invalid qubit angle '{alpha}'")))?,
                ),
                None => Self::File(s.into()),
            },
        })
    }

    fn load(&self, allow_non_isometry: bool) -> std::result::Result<Masker, Failure> {
        Ok(match self {
            Self::Builtin3 => builtin_example_3d(),
            Self::Builtin4 => builtin_example_4d(),
            Self::Qubit(a) => qubit_circle_masker(*a),
            Self::File(p) => Masker::from_json(&read_file(p)?, allow_non_isometry)?,
        })
    }
}

#[derive(Debug, Clone)]
enum Anchor {
    Angles(HyperAngles),
    Block(Zeta4),
}

impl Anchor {
    fn state(&self) -> PureState {
        match self {
            Self::Angles(a) => angles_to_amplitudes(a),
            Self::Block(z) => z.state(),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            Self::Angles(a) => a.to_flat(),
            Self::Block(z) => vec![z.zeta1, z.zeta2, z.y1, z.y2, z.y3],
        }
    }
}

struct Loaded {
    spec: MaskerSpec,
    masker: Masker,
}

fn load_masker(a: &MaskerArgs) -> std::result::Result<Loaded, Failure> {
    let spec = MaskerSpec::parse(&a.masker)?;
    let masker = spec.load(a.allow_non_isometry)?;
    Ok(Loaded { spec, masker })
}

fn angles_for(values: &[f64], dim: usize) -> std::result::Result<HyperAngles, Failure> {
    if values.len() != 2 * (dim - 1) {
        return Err(Failure::Usage(format!(
            "anchor needs {} angles for dimension {dim}, got {}",
            2 * (dim - 1),
            values.len()
        )));
    }
    HyperAngles::from_flat(values).map_err(|e| Failure::Usage(e.to_string()))
}

fn resolve_anchor(l: &Loaded, values: Option<&[f64]>) -> std::result::Result<Anchor, Failure> {
    let n = l.masker.da();
    match (&l.spec, values) {
        (MaskerSpec::Builtin4, Some(v)) => Ok(Anchor::Block(
            Zeta4::from_slice(v).map_err(|e| Failure::Usage(e.to_string()))?,
        )),
        (MaskerSpec::Builtin4, None) => Ok(Anchor::Block(Zeta4::figure_anchor())),
        (_, Some(v)) => Ok(Anchor::Angles(angles_for(v, n)?)),
        (MaskerSpec::Builtin3, None) => Ok(Anchor::Angles(measure_anchor_3d())),
        (MaskerSpec::Qubit(_), None) => Ok(Anchor::Angles(qubit_anchor())),
        (MaskerSpec::File(_), None) => Err(Failure::Usage(
            "--anchor is required for a masker file".into(),
        )),
    }
}

/// `count` states of the set masked by `l` through `anchor`.
fn family(
    l: &Loaded,
    anchor: &Anchor,
    count: usize,
    seed: u64,
) -> std::result::Result<Vec<PureState>, Failure> {
    Ok(match (&l.spec, anchor) {
        (MaskerSpec::Builtin3, Anchor::Angles(a)) => omega_3d(a, count, seed)?,
        (MaskerSpec::Builtin4, Anchor::Block(z)) => omega_4d(z, count, seed)?,
        (MaskerSpec::Qubit(alpha), Anchor::Angles(a)) => {
            qubit_circle_family(*alpha, a, count, seed)?
        }
        _ => {
            let cons = masking_constraints(&l.masker, Some(&anchor.state()))?;
            sample_constrained(&cons, l.masker.da(), count, seed, 1e-12)?
        }
    })
}

// ---- I/O ----

fn read_file(p: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(p)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))
}

fn read_states(p: &Path) -> std::result::Result<Vec<PureState>, Failure> {
    Ok(serde_json::from_str(&read_file(p)?)?)
}

fn sidecar(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_text(out: Option<&Path>, text: &str) -> io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut o = io::stdout().lock();
            o.write_all(text.as_bytes())?;
            o.flush()
        }
    }
}

fn pretty(v: &impl Serialize) -> std::result::Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Writes `{"manifest": …, "result": …}`.
fn emit_json(
    out: Option<&Path>,
    mut manifest: RunManifest,
    result: Value,
) -> std::result::Result<(), Failure> {
    if let Some(p) = out {
        manifest.outputs.push(p.display().to_string());
    }
    write_text(
        out,
        &pretty(&json!({ "manifest": manifest, "result": result }))?,
    )?;
    Ok(())
}

/// Writes CSV through `body`; a file output gets a manifest sidecar.
fn emit_csv<F>(
    out: Option<&Path>,
    mut manifest: RunManifest,
    body: F,
) -> std::result::Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> crate::Result<()>,
{
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
            let side = sidecar(p);
            manifest.outputs.push(p.display().to_string());
            manifest.outputs.push(side.display().to_string());
            std::fs::write(&side, pretty(&manifest)?)?;
        }
        None => {
            let mut w = io::stdout().lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn csv_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format_value(*v))
        .collect::<Vec<_>>()
        .join(",")
}

// ---- commands ----

fn cmd_example(a: ExampleArgs, flags: &[String]) -> CmdResult {
    let mut manifest = RunManifest::new("example", flags, Some(a.seed));
    let (states, rho_a, rho_b, invariants, extra) = match a.which {
        ExampleName::ThreeD => {
            let anchor = match &a.anchor {
                Some(v) => angles_for(v, 3)?,
                None => measure_anchor_3d(),
            };
            let (x, y) = invariants_3d(&anchor)?;
            let rho = closed_form_3d(x, y);
            let states = omega_3d(&anchor, a.samples, a.seed)?;
            (
                states,
                rho.clone(),
                rho,
                json!({ "a": x, "b": y, "anchor": anchor.to_flat() }),
                None,
            )
        }
        ExampleName::FourD => {
            let anchor = match &a.anchor {
                Some(v) => Zeta4::from_slice(v).map_err(|e| Failure::Usage(e.to_string()))?,
                None => Zeta4::figure_anchor(),
            };
            let (c, d) = anchor.invariants();
            let states = omega_4d(&anchor, a.samples, a.seed)?;
            let inv = json!({ "c": c, "d": d, "anchor": Anchor::Block(anchor).values() });
            (
                states,
                closed_form_4d_a(c, d),
                closed_form_4d_b(c, d),
                inv,
                Some(coupled_form_4d_b(c, d)),
            )
        }
    };
    let m = match a.which {
        ExampleName::ThreeD => builtin_example_3d(),
        ExampleName::FourD => builtin_example_4d(),
    };
    let (mut dev_a, mut dev_b, mut dev_coupled) = (0.0_f64, 0.0_f64, 0.0_f64);
    for p in &states {
        let img = m.apply(p)?;
        let (ra, rb) = (partial_trace_b(&img), partial_trace_a(&img));
        dev_a = dev_a.max(max_abs_diff(ra.matrix(), &rho_a));
        dev_b = dev_b.max(max_abs_diff(rb.matrix(), &rho_b));
        if let Some(c) = &extra {
            dev_coupled = dev_coupled.max(max_abs_diff(rb.matrix(), c));
        }
    }
    let max_dev = dev_a.max(dev_b);
    let pass = max_dev < a.tol;
    let mut result = json!({
        "example": match a.which { ExampleName::ThreeD => "3d", ExampleName::FourD => "4d" },
        "samples": states.len(),
        "invariants": invariants,
        "max_deviation_a": dev_a,
        "max_deviation_b": dev_b,
        "max_deviation": max_dev,
        "tol": a.tol,
        "pass": pass,
    });
    if extra.is_some() {
        result["coupled_form_deviation_b"] = json!(dev_coupled);
    }
    manifest.summary = Some(json!({ "max_deviation": max_dev, "pass": pass }));
    emit_json(a.out.as_deref(), manifest, result)?;
    eprintln!("max deviation {max_dev:.3e}");
    Ok(pass)
}

fn cmd_figure(a: FigureArgs, flags: &[String]) -> CmdResult {
    let mut manifest = RunManifest::new("figure", flags, None);
    let usage = |e: Error| Failure::Usage(e.to_string());
    let (data, anchor): (FigureData, Vec<f64>) = match a.which {
        FigureName::Fig1 => {
            let anchor = match &a.anchor {
                Some(v) => angles_for(v, 3)?,
                None => fig1_anchor(),
            };
            (fig1(&anchor, a.grid).map_err(usage)?, anchor.to_flat())
        }
        FigureName::Fig2a | FigureName::Fig2b => {
            let anchor = match &a.anchor {
                Some(v) => Zeta4::from_slice(v).map_err(usage)?,
                None => Zeta4::figure_anchor(),
            };
            let data = if a.which == FigureName::Fig2a {
                fig2a(&anchor, a.grid)
            } else {
                fig2b(&anchor, a.grid)
            };
            (data.map_err(usage)?, Anchor::Block(anchor).values())
        }
    };
    let max_residual = data.max_residual();
    let pass = max_residual < DEFAULT_TOL;
    manifest.summary = Some(json!({
        "figure": data.name,
        "anchor": anchor,
        "grid": a.grid,
        "rows": data.rows.len(),
        "omitted": data.omitted,
        "max_residual": max_residual,
    }));
    match a.format {
        Format::Csv => emit_csv(a.out.as_deref(), manifest, |w| data.write_csv(w))?,
        Format::Json => emit_json(a.out.as_deref(), manifest, serde_json::to_value(&data)?)?,
    }
    Ok(pass)
}

fn cmd_sweep(a: SweepArgs, flags: &[String]) -> CmdResult {
    let mut manifest = RunManifest::new("sweep", flags, Some(a.seed));
    let l = load_masker(&a.masker)?;
    let anchor = resolve_anchor(&l, a.anchor.as_deref())?;
    let report = epsilon_sweep(
        &l.masker,
        &anchor.state(),
        &a.eps,
        a.samples,
        a.seed,
        a.delta,
    )
    .map_err(|e| Failure::Usage(e.to_string()))?;
    manifest.summary = Some(json!({
        "anchor": anchor.values(),
        "fit": report.fit,
        "degenerate_statistics": report.degenerate_statistics,
    }));
    match a.format {
        Format::Csv => emit_csv(a.out.as_deref(), manifest, |w| {
            writeln!(w, "epsilon,fraction,stderr,samples,seed,delta")?;
            for e in &report.estimates {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    format_value(e.epsilon),
                    format_value(e.fraction),
                    format_value(e.stderr),
                    e.samples,
                    e.seed,
                    format_value(e.delta)
                )?;
            }
            Ok(())
        })?,
        Format::Json => emit_json(a.out.as_deref(), manifest, serde_json::to_value(&report)?)?,
    }
    Ok(true)
}

fn cmd_embed(a: EmbedArgs, flags: &[String]) -> CmdResult {
    let mut manifest = RunManifest::new("embed", flags, Some(a.seed));
    let l = load_masker(&a.masker)?;
    let anchor = match (&a.states, &a.anchor, &l.spec) {
        (Some(_), None, MaskerSpec::File(_)) => None,
        _ => Some(resolve_anchor(&l, a.anchor.as_deref())?),
    };
    let states = match (&a.states, &anchor) {
        (Some(p), _) => read_states(p)?,
        (None, Some(anc)) => family(&l, anc, a.samples, a.seed)?,
        (None, None) => unreachable!("anchor resolved when no states are given"),
    };
    let n = states.first().map(PureState::dim).unwrap_or(l.masker.da());
    if let Some(p) = states.iter().find(|p| p.dim() != n) {
        return Err(Failure::Usage(format!(
            "mixed state dimensions {n} and {}",
            p.dim()
        )));
    }
    let xis: Vec<_> = states.iter().map(xi_embed).collect();
    let rank = if xis.is_empty() {
        None
    } else {
        Some(affine_rank(&xis, RANK_TOL)?)
    };
    if let Some(p) = &a.constraints_out {
        let cons = masking_constraints(&l.masker, anchor.as_ref().map(Anchor::state).as_ref())?;
        std::fs::write(
            p,
            pretty(&json!({ "manifest": manifest, "constraints": cons }))?,
        )?;
        manifest.outputs.push(p.display().to_string());
    }
    manifest.summary = Some(json!({
        "states": states.len(),
        "dimension": n,
        "affine_rank": rank,
        "anchor": anchor.as_ref().map(Anchor::values),
    }));
    emit_csv(a.out.as_deref(), manifest, |w| {
        let header: Vec<String> = (1..=n * n).map(|i| format!("xi{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for x in &xis {
            writeln!(w, "{}", csv_row(x.coords()))?;
        }
        Ok(())
    })?;
    Ok(true)
}

fn cmd_classify(a: ClassifyArgs, flags: &[String]) -> CmdResult {
    let manifest = RunManifest::new("classify", flags, None);
    let l = load_masker(&a.masker)?;
    let report = cascade_scan(&l.masker, a.tol)?;
    emit_json(a.out.as_deref(), manifest, serde_json::to_value(&report)?)?;
    Ok(true)
}

fn read_constraints(p: &Path) -> std::result::Result<(Vec<LinearConstraint>, usize), Failure> {
    let text = read_file(p)?;
    let v: Value = serde_json::from_str(&text)?;
    // Accept a bare array or the `embed --constraints-out` layout.
    let arr = match v.get("constraints") {
        Some(c) => c.clone(),
        None => v,
    };
    let cons: Vec<LinearConstraint> = serde_json::from_value(arr)?;
    let len = cons
        .first()
        .map(|c| c.a.len())
        .ok_or_else(|| Failure::Usage("constraint file is empty".into()))?;
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len || n < 2 || cons.iter().any(|c| c.a.len() != len) {
        return Err(Failure::Usage(format!(
            "constraint rows of length {len} are not n² for one n ≥ 2"
        )));
    }
    Ok((cons, n))
}

fn cmd_search(a: SearchArgs, flags: &[String]) -> CmdResult {
    let mut manifest = RunManifest::new("search", flags, Some(a.seed));
    let config = SearchConfig {
        step: a.step,
        max_iter: a.max_iter,
        tol: a.tol,
        seed: a.seed,
        samples: a.samples,
    };
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let result = match (&a.states, &a.constraints) {
        (Some(p), None) => {
            let states = read_states(p)?;
            let da = states
                .first()
                .map(PureState::dim)
                .ok_or_else(|| Failure::Usage("state file is empty".into()))?;
            optimize_masker(&states, (da, a.db.unwrap_or(da)), &config)?
        }
        (None, Some(p)) => {
            let (cons, n) = read_constraints(p)?;
            if a.db.is_some_and(|d| d != n) {
                return Err(Failure::Usage("constraint search uses dB = dA".into()));
            }
            find_masker_for_circle(&cons, n, &config)?
        }
        _ => {
            return Err(Failure::Usage(
                "give exactly one of --states and --constraints".into(),
            ))
        }
    };
    manifest.summary = Some(json!({
        "objective": result.objective,
        "converged": result.converged,
        "iterations": result.trace.len() - 1,
    }));
    if let Some(p) = &a.trace {
        let mut m = manifest.clone();
        m.outputs.clear();
        emit_csv(Some(p), m, |w| {
            writeln!(w, "iteration,objective")?;
            for (i, j) in result.trace.iter().enumerate() {
                writeln!(w, "{i},{}", format_value(*j))?;
            }
            Ok(())
        })?;
        manifest.outputs.push(p.display().to_string());
        manifest.outputs.push(sidecar(p).display().to_string());
    }
    if let Some(p) = &a.out {
        manifest.outputs.push(p.display().to_string());
    }
    let mut doc = serde_json::to_value(result.masker.to_file())?;
    doc["objective"] = json!(result.objective);
    doc["converged"] = json!(result.converged);
    doc["manifest"] = serde_json::to_value(&manifest)?;
    write_text(a.out.as_deref(), &pretty(&doc)?)?;
    Ok(true)
}

fn cmd_share(a: ShareArgs, flags: &[String]) -> CmdResult {
    let manifest = RunManifest::new("share", flags, Some(a.seed));
    let l = load_masker(&a.masker)?;
    let anchor = resolve_anchor(&l, a.anchor.as_deref())?;
    let codebook = family(&l, &anchor, a.samples, a.seed)?;
    let fam = SecretFamily::new(l.masker, codebook, anchor.state())?;
    let leakage = single_share_leakage(&fam)?;
    let fidelities = decode_fidelities(&fam)?;
    let min_fidelity = fidelities.iter().copied().fold(1.0, f64::min);
    let pass = leakage.max() < 1e-12 && min_fidelity >= 1.0 - 1e-10;
    emit_json(
        a.out.as_deref(),
        manifest,
        json!({
            "parties": 2,
            "codewords": fam.codebook().len(),
            "anchor": anchor.values(),
            "leakage": leakage,
            "fidelities": fidelities,
            "min_fidelity": min_fidelity,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

fn cmd_mask_check(a: MaskCheckArgs, flags: &[String]) -> CmdResult {
    let manifest = RunManifest::new("mask-check", flags, None);
    let l = load_masker(&a.masker)?;
    let states = read_states(&a.states)?;
    let anchor = match &a.anchor {
        Some(v) => angles_to_amplitudes(&angles_for(v, l.masker.da())?),
        None => match states.first() {
            Some(p) => p.clone(),
            None => return Err(Failure::Usage("state file is empty".into())),
        },
    };
    let report = masking_residual(&l.masker, &states, &anchor)?;
    let masked = report.overall_max < a.tol;
    emit_json(
        a.out.as_deref(),
        manifest,
        json!({
            "masked": masked,
            "residual": report.overall_max,
            "side": report.side,
            "states": states.len(),
            "tol": a.tol,
        }),
    )?;
    Ok(masked)
}
