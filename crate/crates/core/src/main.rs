use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use softexp::builders::{build_fourier_with_gain, BuilderSpec, FourierSpec, RbfSource};
use softexp::trainer::{fit, grad_check, init_network, Dataset, TrainConfig};
use softexp::{
    activate, addmul, dsoftexp_dalpha, dsoftexp_dx, from_document, softexp_complex, softexp_real,
    to_document, Alpha, CScalar, EvalMode, Network,
};

/// Largest relative error `gradcheck` accepts.
const GRADCHECK_LIMIT: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<softexp::Error> for CliError {
    fn from(e: softexp::Error) -> Self {
        use softexp::Error as E;
        let msg = e.to_string();
        match e {
            _ if e.is_numeric() => CliError::Numeric(msg),
            E::Io(_) | E::Csv(_) | E::Parse { .. } | E::InvalidDocument(_) => CliError::Io(msg),
            _ => CliError::Usage(msg),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "softexp", version, about = "Soft exponential activation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate f(alpha, x).
    Eval(EvalArgs),
    /// Partial derivatives of f with respect to x and alpha (real alpha).
    Grad(GradArgs),
    /// CSV `alpha,x,f` over a grid of real alpha and x.
    PlotActivation(PlotActivationArgs),
    /// CSV `beta,h` of the addition/multiplication interpolation.
    PlotAddmul(PlotAddmulArgs),
    /// CSV `alpha_i,x,re,im` of f at imaginary alpha.
    PlotFourier(PlotFourierArgs),
    /// Write an exactly constructed network document.
    Build(BuildArgs),
    /// Forward pass of a saved network.
    Run(RunArgs),
    /// Train a freshly initialized network on a CSV dataset.
    Train(TrainArgs),
    /// Compare backpropagated gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Real,
    Complex,
}

impl From<Mode> for EvalMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Real => EvalMode::RealStrict,
            Mode::Complex => EvalMode::ComplexPrincipal,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    #[arg(long, value_enum, default_value = "real")]
    mode: Mode,
}

#[derive(Args)]
struct GradArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
}

#[derive(Args)]
struct PlotActivationArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
    alpha_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha_step: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -5.0)]
    x_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 5.0)]
    x_max: f64,
    #[arg(long, default_value_t = 0.5)]
    x_step: f64,
}

#[derive(Args)]
struct PlotAddmulArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = 3.0)]
    p: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 7.0)]
    q: f64,
    #[arg(long, default_value_t = 0.01)]
    beta_step: f64,
}

#[derive(Args)]
struct PlotFourierArgs {
    /// Comma-separated imaginary parts of alpha.
    #[arg(long, allow_hyphen_values = true, default_value = "0.5,1,2")]
    alpha_i_list: String,
    /// `min,max,step`.
    #[arg(long, allow_hyphen_values = true, default_value = "-5,5,0.1")]
    x_range: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    InnerProduct,
    SqDistance,
    Euclidean,
    Polynomial,
    Rbf,
    Fourier,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Vector dimension (inner-product, sq-distance, euclidean, rbf).
    #[arg(long)]
    n: Option<usize>,
    /// Polynomial coefficients `c0,c1,...` (c_k multiplies x^k).
    #[arg(long, allow_hyphen_values = true)]
    coeffs: Option<String>,
    /// RBF radius weight.
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    /// RBF source: inner-product or sq-distance.
    #[arg(long, default_value = "sq-distance")]
    source: String,
    /// Fourier frequencies.
    #[arg(long, allow_hyphen_values = true)]
    freqs: Option<String>,
    /// Fourier sine coefficients (default all 0).
    #[arg(long = "sin", allow_hyphen_values = true)]
    sin_coeffs: Option<String>,
    /// Fourier cosine coefficients (default all 0).
    #[arg(long = "cos", allow_hyphen_values = true)]
    cos_coeffs: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    offset: f64,
    /// Input gain of the Fourier hidden units.
    #[arg(long, default_value_t = 1.0)]
    gain: f64,
    /// Destination; `-` writes to standard output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    net: PathBuf,
    /// A comma-separated row, or a file with one row per line.
    #[arg(long, allow_hyphen_values = true)]
    input: String,
    #[arg(long, value_enum, default_value = "real")]
    mode: Mode,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Layer widths, input first.
    #[arg(long)]
    widths: String,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 1)]
    batch_size: usize,
    /// L1 strength on weights.
    #[arg(long, default_value_t = 0.0)]
    l1w: f64,
    /// L1 strength on alpha.
    #[arg(long, default_value_t = 0.0)]
    l1a: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "real")]
    mode: Mode,
    /// Where to save the trained network.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    input: String,
    /// Defaults to zeros.
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
    #[arg(long, value_enum, default_value = "real")]
    mode: Mode,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let result = dispatch(cli.command, &mut out).and_then(|code| {
        out.flush()?;
        Ok(code)
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = out.flush();
            eprintln!("softexp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command, out: &mut impl Write) -> CliResult<u8> {
    match command {
        Command::Eval(a) => eval(a, out),
        Command::Grad(a) => grad(a, out),
        Command::PlotActivation(a) => plot_activation(a, out),
        Command::PlotAddmul(a) => plot_addmul(a, out),
        Command::PlotFourier(a) => plot_fourier(a, out),
        Command::Build(a) => build(a, out),
        Command::Run(a) => run(a, out),
        Command::Train(a) => train(a, out),
        Command::Gradcheck(a) => return gradcheck(a, out),
    }?;
    Ok(0)
}

/// `%.17g`: 17 significant digits, trailing zeros dropped.
fn fmt_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp).max(0) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_complex(z: CScalar) -> String {
    if z.im == 0.0 {
        fmt_g17(z.re)
    } else {
        let sign = if z.im.is_sign_negative() { "" } else { "+" };
        format!("{}{sign}{}i", fmt_g17(z.re), fmt_g17(z.im))
    }
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("{what}: {t:?} is not a number ({e})")))
        })
        .collect()
}

fn parse_alpha(s: &str) -> CliResult<Alpha> {
    let parts = parse_list(s, "--alpha")?;
    let (re, im) = match parts[..] {
        [re] => (re, 0.0),
        [re, im] => (re, im),
        _ => return Err(CliError::Usage("--alpha takes `re` or `re,im`".into())),
    };
    Ok(Alpha::new(re, im)?)
}

/// `min, min + step, ...` up to `max`, each value rounded to 12 decimals so that
/// labels like 0.1 print cleanly.
fn grid(min: f64, max: f64, step: f64, what: &str) -> CliResult<Vec<f64>> {
    if !(step > 0.0 && step.is_finite() && min.is_finite() && max.is_finite()) || max < min {
        return Err(CliError::Usage(format!(
            "{what}: need finite min <= max and a positive step"
        )));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| {
            let v = min + k as f64 * step;
            let r = (v * 1e12).round() / 1e12;
            if r == 0.0 {
                0.0
            } else {
                r
            }
        })
        .collect())
}

fn eval(a: EvalArgs, out: &mut impl Write) -> CliResult<()> {
    let alpha = parse_alpha(&a.alpha)?;
    let y = activate(alpha, CScalar::new(a.x, 0.0), a.mode.into())?;
    writeln!(out, "{}", fmt_complex(y))?;
    Ok(())
}

fn grad(a: GradArgs, out: &mut impl Write) -> CliResult<()> {
    let dx = dsoftexp_dx(a.alpha, a.x)?;
    let dalpha = dsoftexp_dalpha(a.alpha, a.x)?;
    writeln!(out, "df_dx,df_dalpha")?;
    writeln!(out, "{},{}", fmt_g17(dx), fmt_g17(dalpha))?;
    Ok(())
}

fn plot_activation(a: PlotActivationArgs, out: &mut impl Write) -> CliResult<()> {
    let alphas = grid(a.alpha_min, a.alpha_max, a.alpha_step, "alpha grid")?;
    let xs = grid(a.x_min, a.x_max, a.x_step, "x grid")?;
    writeln!(out, "alpha,x,f")?;
    for &alpha in &alphas {
        for &x in &xs {
            match softexp_real(alpha, x) {
                Ok(f) => writeln!(out, "{alpha},{x},{}", fmt_g17(f))?,
                Err(softexp::Error::Domain { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}

fn plot_addmul(a: PlotAddmulArgs, out: &mut impl Write) -> CliResult<()> {
    let betas = grid(0.0, 1.0, a.beta_step, "beta grid")?;
    writeln!(out, "beta,h")?;
    for beta in betas {
        writeln!(out, "{beta},{}", fmt_g17(addmul(beta, a.p, a.q)?))?;
    }
    Ok(())
}

fn plot_fourier(a: PlotFourierArgs, out: &mut impl Write) -> CliResult<()> {
    let freqs = parse_list(&a.alpha_i_list, "--alpha-i-list")?;
    if let Some(w) = freqs.iter().find(|w| **w == 0.0 || !w.is_finite()) {
        return Err(CliError::Numeric(format!(
            "alpha_i = {w}: the frequency must be finite and nonzero"
        )));
    }
    let range = parse_list(&a.x_range, "--x-range")?;
    let [min, max, step] = range[..] else {
        return Err(CliError::Usage("--x-range takes `min,max,step`".into()));
    };
    let xs = grid(min, max, step, "x grid")?;
    writeln!(out, "alpha_i,x,re,im")?;
    for &w in &freqs {
        let alpha = Alpha::imaginary(w);
        for &x in &xs {
            let y = softexp_complex(alpha, CScalar::new(x, 0.0))?;
            writeln!(out, "{w},{x},{},{}", fmt_g17(y.re), fmt_g17(y.im))?;
        }
    }
    Ok(())
}

fn required<T>(v: Option<T>, flag: &str, kind: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("--kind {kind} needs --{flag}")))
}

fn build(a: BuildArgs, out: &mut impl Write) -> CliResult<()> {
    let net = match a.kind {
        Kind::InnerProduct => BuilderSpec::InnerProduct {
            n: required(a.n, "n", "inner-product")?,
        }
        .build()?,
        Kind::SqDistance => BuilderSpec::SquaredDistance {
            n: required(a.n, "n", "sq-distance")?,
        }
        .build()?,
        Kind::Euclidean => BuilderSpec::Euclidean {
            n: required(a.n, "n", "euclidean")?,
        }
        .build()?,
        Kind::Polynomial => BuilderSpec::Polynomial {
            coeffs: parse_list(&required(a.coeffs, "coeffs", "polynomial")?, "--coeffs")?,
        }
        .build()?,
        Kind::Rbf => BuilderSpec::Rbf {
            n: required(a.n, "n", "rbf")?,
            r: required(a.r, "r", "rbf")?,
            source: a.source.parse::<RbfSource>()?,
        }
        .build()?,
        Kind::Fourier => {
            let freqs = parse_list(&required(a.freqs, "freqs", "fourier")?, "--freqs")?;
            let coeffs = |s: Option<String>, flag| match s {
                Some(s) => parse_list(&s, flag),
                None => Ok(vec![0.0; freqs.len()]),
            };
            let spec = FourierSpec {
                sin_coeffs: coeffs(a.sin_coeffs, "--sin")?,
                cos_coeffs: coeffs(a.cos_coeffs, "--cos")?,
                freqs: freqs.clone(),
                offset: a.offset,
            };
            build_fourier_with_gain(&spec, a.gain)?
        }
    };
    write_network(&net, &a.out, out)
}

fn write_network(net: &Network, path: &Path, out: &mut impl Write) -> CliResult<()> {
    let doc = to_document(net);
    if path == Path::new("-") {
        out.write_all(doc.as_bytes())?;
    } else {
        fs::write(path, doc).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn read_network(path: &Path) -> CliResult<Network> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    from_document(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// A literal row like `1,2,3`, or else a file of rows. A non-numeric first line in a
/// file is taken as a header.
fn read_rows(spec: &str) -> CliResult<Vec<Vec<f64>>> {
    if let Ok(row) = parse_list(spec, "--input") {
        return Ok(vec![row]);
    }
    let text = fs::read_to_string(spec).map_err(|e| CliError::Io(format!("{spec}: {e}")))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_list(line, "--input") {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(CliError::Io(format!(
                    "{spec}:{}: expected comma-separated numbers",
                    i + 1
                )))
            }
        }
    }
    Ok(rows)
}

fn run(a: RunArgs, out: &mut impl Write) -> CliResult<()> {
    let net = read_network(&a.net)?;
    for row in read_rows(&a.input)? {
        let input: Vec<CScalar> = row.iter().map(|&v| CScalar::new(v, 0.0)).collect();
        let y = net.forward(&input, a.mode.into())?;
        let cells: Vec<String> = y.into_iter().map(fmt_complex).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

fn train(a: TrainArgs, out: &mut impl Write) -> CliResult<()> {
    let widths = a
        .widths
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| CliError::Usage(format!("--widths: {t:?} ({e})")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let data = Dataset::from_csv_path(&a.data).map_err(|e| match e {
        softexp::Error::Io(io) => CliError::Io(format!("{}: {io}", a.data.display())),
        other => other.into(),
    })?;
    let config = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        l1_weights: a.l1w,
        l1_alpha: a.l1a,
        seed: a.seed,
        mode: a.mode.into(),
    };
    config.validate()?;
    let mut net = init_network(&widths, a.seed)?;
    let report = fit(&mut net, &data, &config)?;
    write_network(&net, &a.out, &mut io::sink())?;
    out.write_all(report.to_csv().as_bytes())?;
    Ok(())
}

fn gradcheck(a: GradcheckArgs, out: &mut impl Write) -> CliResult<u8> {
    let net = read_network(&a.net)?;
    let input = parse_list(&a.input, "--input")?;
    let target = match &a.target {
        Some(t) => parse_list(t, "--target")?,
        None => vec![0.0; net.output_dim()],
    };
    let report = grad_check(&net, &input, &target, a.step, a.mode.into())?;
    writeln!(out, "{}", fmt_g17(report.max_relative_error))?;
    Ok(if report.max_relative_error <= GRADCHECK_LIMIT { 0 } else { 2 })
}
