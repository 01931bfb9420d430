//! Command-line front end: clustering, descriptor summaries,
//! serialization, SVG plots, and the diagnostic studies.

use clap::{Args, Parser, Subcommand, ValueEnum};
use dendra::{
    cluster, descriptor_set, descriptor_sweep, enumerate_pair_dendrograms, permutation_study,
    parse_proximity, render_dendrogram_svg, render_sweep_svg, summary_text, to_json,
    to_merge_table, to_newick, Dendrogram, Error, Format, GroupMode, Kind, Measure, Method,
    MethodSpec, PlotOptions, ProximityMatrix, Weighting,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "dendra",
    version,
    about = "Agglomerative hierarchical clustering with multidendrograms",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a proximity matrix and emit the requested artifacts
    Cluster(ClusterArgs),
    /// Recompute a descriptor across a grid of method parameters
    Sweep(SweepArgs),
    /// Cophenetic correlation of pair-group runs under random input orders
    Permute(PermuteArgs),
    /// Count the distinct pair-group dendrograms reachable through ties
    Enumerate(EnumerateArgs),
}

#[derive(Args)]
struct InputOpts {
    /// Proximity matrix file
    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    /// Input layout
    #[arg(long, value_enum, default_value_t = FormatOpt::Labeled)]
    format: FormatOpt,

    /// Whether values are distances or similarities
    #[arg(long, value_enum, default_value_t = KindOpt::Dist)]
    kind: KindOpt,
}

#[derive(Args)]
struct MethodOpts {
    /// Linkage method: single, complete, arithmetic, geometric, harmonic,
    /// versatile, ward, centroid, or flexible
    #[arg(long, value_name = "NAME")]
    method: String,

    /// Parameter for versatile (any real, also inf/-inf) or flexible
    /// (in [-1, 1])
    #[arg(long, value_name = "REAL", allow_hyphen_values = true)]
    par: Option<String>,

    /// Weight every subcluster equally instead of every leaf
    #[arg(long, conflicts_with = "unweighted")]
    weighted: bool,

    /// Weight every leaf equally (default)
    #[arg(long)]
    unweighted: bool,
}

#[derive(Args)]
struct GroupOpts {
    /// Agglomeration mode: merge one tied pair or every tied group
    #[arg(long, value_enum, default_value_t = GroupOpt::Variable)]
    group: GroupOpt,

    /// Round proximities to this many decimals before comparing
    #[arg(long, value_name = "N")]
    digits: Option<u8>,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    method: MethodOpts,
    #[command(flatten)]
    group: GroupOpts,

    /// Artifacts to emit (repeatable)
    #[arg(long = "out", value_enum, value_name = "WHAT")]
    out: Vec<OutOpt>,

    /// Write artifacts as files here instead of stdout
    #[arg(long, value_name = "PATH")]
    out_dir: Option<PathBuf>,

    /// Reserved for reproducibility; clustering itself is deterministic
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    method: MethodOpts,

    /// Descriptor to recompute at every grid point
    #[arg(long, value_enum, default_value_t = MeasureOpt::Cor)]
    measure: MeasureOpt,

    /// Parameter grid: "a:b:step" or a comma list (inf/-inf allowed)
    #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
    params: String,

    /// Also render the sweep curve as SVG to this file
    #[arg(long, value_name = "PATH")]
    svg_out: Option<PathBuf>,
}

#[derive(Args)]
struct PermuteArgs {
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    method: MethodOpts,
    #[command(flatten)]
    group: GroupOpts,

    /// Number of random input orders to cluster
    #[arg(long, value_name = "N", default_value_t = 20)]
    trials: usize,

    /// Random seed for the input orders
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    method: MethodOpts,

    /// Round proximities to this many decimals before comparing
    #[arg(long, value_name = "N")]
    digits: Option<u8>,

    /// Stop after finding this many distinct dendrograms
    #[arg(long, value_name = "N", default_value_t = 1_000_000)]
    limit: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatOpt {
    /// Full matrix, no labels
    Square,
    /// Strict lower triangle, one row per line
    Lower,
    /// Full matrix with label header and label column
    Labeled,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindOpt {
    /// Distances: smaller is closer
    Dist,
    /// Similarities in [0, 1]: larger is closer
    Sim,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GroupOpt {
    Pair,
    Variable,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutOpt {
    Json,
    Newick,
    Merges,
    Svg,
    Summary,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeasureOpt {
    Cor,
    Sdr,
    Ac,
    Cc,
    Tb,
}

/// Failures split by exit code: flag-level mistakes exit 2, problems
/// with the data itself exit 1.
enum CliError {
    Usage(String),
    Data(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Method(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

impl FormatOpt {
    fn to_format(self) -> Format {
        match self {
            FormatOpt::Square => Format::SquareCsv,
            FormatOpt::Lower => Format::LowerTriangleCsv,
            FormatOpt::Labeled => Format::LabeledSquareCsv,
        }
    }
}

impl KindOpt {
    fn to_kind(self) -> Kind {
        match self {
            KindOpt::Dist => Kind::Distance,
            KindOpt::Sim => Kind::Similarity,
        }
    }
}

impl GroupOpt {
    fn to_group(self) -> GroupMode {
        match self {
            GroupOpt::Pair => GroupMode::Pair,
            GroupOpt::Variable => GroupMode::Variable,
        }
    }
}

impl MeasureOpt {
    fn to_measure(self) -> Measure {
        match self {
            MeasureOpt::Cor => Measure::Cor,
            MeasureOpt::Sdr => Measure::Sdr,
            MeasureOpt::Ac => Measure::Ac,
            MeasureOpt::Cc => Measure::Cc,
            MeasureOpt::Tb => Measure::Tb,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Cluster(args) => run_cluster(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Permute(args) => run_permute(args),
        Command::Enumerate(args) => run_enumerate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_matrix(opts: &InputOpts) -> CliResult<ProximityMatrix> {
    let text = std::fs::read_to_string(&opts.input).map_err(|e| {
        CliError::Data(format!("cannot read {}: {e}", opts.input.display()))
    })?;
    Ok(parse_proximity(&text, opts.format.to_format(), opts.kind.to_kind())?)
}

fn parse_par(text: &str) -> CliResult<f64> {
    let v: f64 = text
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid --par value {text:?}")))?;
    if v.is_nan() {
        return Err(CliError::Usage("--par must not be NaN".into()));
    }
    Ok(v)
}

fn build_spec(opts: &MethodOpts) -> CliResult<MethodSpec> {
    let method = Method::from_str(&opts.method)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let weighting = if opts.weighted {
        Weighting::Weighted
    } else {
        Weighting::Unweighted
    };
    let spec = match (&opts.par, method.is_parametric()) {
        (Some(text), true) => MethodSpec::with_param(method, weighting, parse_par(text)?)
            .map_err(|e| CliError::Usage(e.to_string()))?,
        (None, true) => {
            return Err(CliError::Usage(format!(
                "method {} requires --par",
                method.name()
            )))
        }
        (Some(_), false) => {
            return Err(CliError::Usage(format!(
                "method {} does not take --par",
                method.name()
            )))
        }
        (None, false) => {
            MethodSpec::new(method, weighting).map_err(|e| CliError::Usage(e.to_string()))?
        }
    };
    Ok(spec)
}

/// Echo of the effective clustering call, printed at the top of the
/// summary block.
fn call_echo(
    input: &Path,
    kind: Kind,
    digits: Option<u8>,
    spec: &MethodSpec,
    group: GroupMode,
) -> String {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| input.display().to_string());
    let mut lines = vec![format!("linkage(prox = {stem},")];
    lines.push(format!(
        "        type.prox = \"{}\",",
        match kind {
            Kind::Distance => "distance",
            Kind::Similarity => "similarity",
        }
    ));
    lines.push(format!(
        "        digits = {},",
        digits.map_or_else(|| "none".to_string(), |d| d.to_string())
    ));
    lines.push(format!("        method = \"{}\",", spec.method.name()));
    if let Some(p) = spec.param {
        lines.push(format!("        par = {p},"));
    }
    if spec.weighting == Weighting::Weighted {
        lines.push("        weighted = TRUE,".to_string());
    }
    lines.push(format!(
        "        group = \"{}\")",
        match group {
            GroupMode::Pair => "pair",
            GroupMode::Variable => "variable",
        }
    ));
    lines.join("\n")
}

fn render_artifact(
    what: OutOpt,
    d: &Dendrogram,
    m: &ProximityMatrix,
    call: &str,
) -> CliResult<String> {
    Ok(match what {
        OutOpt::Json => {
            let mut text = to_json(d);
            text.push('\n');
            text
        }
        OutOpt::Newick => {
            let mut text = to_newick(d, true);
            text.push('\n');
            text
        }
        OutOpt::Merges => to_merge_table(d).to_csv(),
        OutOpt::Svg => render_dendrogram_svg(d, &PlotOptions::default()),
        OutOpt::Summary => {
            let ds = descriptor_set(d, m)?;
            summary_text(d, &ds, call)
        }
    })
}

fn artifact_file_name(what: OutOpt, stem: &str) -> String {
    match what {
        OutOpt::Json => format!("{stem}.json"),
        OutOpt::Newick => format!("{stem}.nwk"),
        OutOpt::Merges => format!("{stem}.merges.csv"),
        OutOpt::Svg => format!("{stem}.svg"),
        OutOpt::Summary => format!("{stem}.summary.txt"),
    }
}

fn run_cluster(args: ClusterArgs) -> CliResult<()> {
    let spec = build_spec(&args.method)?;
    let m = load_matrix(&args.input)?;
    let group = args.group.group.to_group();
    let d = cluster(&m, &spec, group, args.group.digits)?;
    let call = call_echo(&args.input.input, m.kind(), args.group.digits, &spec, group);

    let outputs = if args.out.is_empty() {
        vec![OutOpt::Summary]
    } else {
        args.out.clone()
    };

    match &args.out_dir {
        None => {
            let mut stdout = String::new();
            for &what in &outputs {
                stdout.push_str(&render_artifact(what, &d, &m, &call)?);
            }
            print!("{stdout}");
        }
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| {
                CliError::Data(format!("cannot create {}: {e}", dir.display()))
            })?;
            let stem = args
                .input
                .input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dendrogram".to_string());
            for &what in &outputs {
                let path = dir.join(artifact_file_name(what, &stem));
                let content = render_artifact(what, &d, &m, &call)?;
                std::fs::write(&path, content).map_err(|e| {
                    CliError::Data(format!("cannot write {}: {e}", path.display()))
                })?;
            }
        }
    }
    Ok(())
}

/// Count of digits after the point when `text` is a plain decimal
/// literal; `None` for scientific notation or anything else.
fn plain_decimal_places(text: &str) -> Option<u32> {
    let t = text.trim();
    let t = t.strip_prefix(['-', '+']).unwrap_or(t);
    if t.is_empty() || !t.chars().any(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut dot = None;
    for (i, c) in t.char_indices() {
        match c {
            '0'..='9' => {}
            '.' if dot.is_none() => dot = Some(i),
            _ => return None,
        }
    }
    let places = match dot {
        None => 0,
        Some(i) => (t.len() - i - 1) as u32,
    };
    (places <= 12).then_some(places)
}

/// Parse "a:b:step" ranges and comma lists; both accept inf and -inf.
/// Decimal-literal ranges walk an exact decimal grid, so a step of 0.1
/// yields 0.1 and not an accumulated 0.10000000000000003.
fn parse_params(text: &str) -> CliResult<Vec<f64>> {
    const MAX_POINTS: usize = 100_000;
    let text = text.trim();
    if text.is_empty() {
        return Err(CliError::Usage("--params must not be empty".into()));
    }
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Usage(format!(
                "range syntax is a:b:step, got {text:?}"
            )));
        }
        let a = parse_par(parts[0])?;
        let b = parse_par(parts[1])?;
        let step = parse_par(parts[2])?;
        if !a.is_finite() || !b.is_finite() || !(step > 0.0) || !step.is_finite() {
            return Err(CliError::Usage(format!(
                "range bounds must be finite and the step positive, got {text:?}"
            )));
        }
        if b < a {
            return Err(CliError::Usage(format!(
                "empty range: {b} is below {a}"
            )));
        }
        let decimals = [parts[0], parts[1], parts[2]].map(plain_decimal_places);
        let out: Vec<f64> = if let [Some(da), Some(db), Some(ds)] = decimals {
            let scale = 10f64.powi(da.max(db).max(ds) as i32);
            let ai = (a * scale).round() as i64;
            let bi = (b * scale).round() as i64;
            let si = (step * scale).round() as i64;
            if si <= 0 {
                return Err(CliError::Usage(format!("step {} is too small", parts[2])));
            }
            let count = ((bi - ai) / si + 1) as usize;
            if count > MAX_POINTS {
                return Err(CliError::Usage(format!(
                    "range holds {count} points, more than the {MAX_POINTS} supported"
                )));
            }
            (0..count)
                .map(|k| (ai + k as i64 * si) as f64 / scale)
                .collect()
        } else {
            // Scientific-notation bounds: walk by index and fence the
            // endpoint against rounding.
            let count = ((b - a) / step).round() as usize + 1;
            if count > MAX_POINTS {
                return Err(CliError::Usage(format!(
                    "range holds {count} points, more than the {MAX_POINTS} supported"
                )));
            }
            let mut out: Vec<f64> = (0..count).map(|k| a + k as f64 * step).collect();
            out.retain(|&v| v <= b + step * 1e-9);
            out
        };
        if out.is_empty() {
            return Err(CliError::Usage(format!("empty range {text:?}")));
        }
        Ok(out)
    } else {
        text.split(',').map(|s| parse_par(s.trim())).collect()
    }
}

fn run_sweep(args: SweepArgs) -> CliResult<()> {
    let params = parse_params(&args.params)?;
    let method = Method::from_str(&args.method.method)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if !method.is_parametric() {
        return Err(CliError::Usage(format!(
            "method {} has no parameter to sweep",
            method.name()
        )));
    }
    if args.method.par.is_some() {
        return Err(CliError::Usage(
            "sweep takes its parameters from --params, not --par".into(),
        ));
    }
    let weighting = if args.method.weighted {
        Weighting::Weighted
    } else {
        Weighting::Unweighted
    };
    let template = MethodSpec::with_param(method, weighting, params[0])
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let m = load_matrix(&args.input)?;
    let measure = args.measure.to_measure();
    let points = descriptor_sweep(&m, &template, measure, &params)?;

    let mut csv = String::from("param,value\n");
    for &(p, v) in &points {
        csv.push_str(&format!("{p},{v}\n"));
    }
    print!("{csv}");

    if let Some(path) = &args.svg_out {
        let plottable: Vec<(f64, f64)> =
            points.iter().copied().filter(|&(_, v)| v.is_finite()).collect();
        if plottable.len() < 2 {
            return Err(CliError::Data(
                "fewer than two finite sweep values; nothing to plot".into(),
            ));
        }
        let svg = render_sweep_svg(&plottable, measure.name(), &PlotOptions::default());
        std::fs::write(path, svg).map_err(|e| {
            CliError::Data(format!("cannot write {}: {e}", path.display()))
        })?;
    }
    Ok(())
}

fn run_permute(args: PermuteArgs) -> CliResult<()> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let spec = build_spec(&args.method)?;
    let m = load_matrix(&args.input)?;
    let cors = permutation_study(
        &m,
        &spec,
        args.group.group.to_group(),
        args.group.digits,
        args.trials,
        args.seed,
    )?;
    let mut csv = String::from("cor\n");
    for v in cors {
        csv.push_str(&format!("{v}\n"));
    }
    print!("{csv}");
    Ok(())
}

fn run_enumerate(args: EnumerateArgs) -> CliResult<()> {
    if args.limit == 0 {
        return Err(CliError::Usage("--limit must be at least 1".into()));
    }
    let spec = build_spec(&args.method)?;
    let m = load_matrix(&args.input)?;
    let (count, exhausted) = enumerate_pair_dendrograms(&m, &spec, args.digits, args.limit)?;
    println!("count,exhausted");
    println!("{count},{exhausted}");
    Ok(())
}
