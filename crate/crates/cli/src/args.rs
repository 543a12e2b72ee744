use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dctif", version, about = "DCT interpolation filter tanh approximation toolkit")]
pub struct Cli {
    /// `key = value` file supplying defaults for the chosen command.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the integer coefficient table for one filter configuration.
    Coeffs(CoeffsArgs),
    /// Evaluate the fixed-point approximation at given inputs.
    Eval(EvalArgs),
    /// Exhaustive error sweep over a grid of configurations.
    Sweep(SweepArgs),
    /// Activation-accuracy study on a small network.
    Nn(NnArgs),
    /// Dump an engine's sample table or coefficients.
    Dump(DumpArgs),
}

impl Command {
    pub const NAMES: [&'static str; 5] = ["coeffs", "eval", "sweep", "nn", "dump"];
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct CoeffsArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..=7))]
    pub tabs: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub s: Option<u32>,
    /// Fractional step, `1/2`, `1/4`, ... `1/64`.
    #[arg(long, value_parser = parse_alpha, conflicts_with = "j")]
    pub alpha: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=6))]
    pub j: Option<u32>,
    /// Smoothing window size.
    #[arg(long, default_value_t = dctif::coeffgen::DEFAULT_WINDOW)]
    pub w: u32,
    /// Compare against the reference coefficient vectors; exit 1 on mismatch.
    #[arg(long)]
    pub golden_check: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CoeffsArgs {
    pub fn resolved_j(&self) -> u32 {
        self.alpha.or(self.j).unwrap_or(2)
    }
}

fn parse_alpha(s: &str) -> Result<u32, String> {
    let den = s.strip_prefix("1/").ok_or("alpha must look like 1/4")?;
    let den: u32 = den.parse().map_err(|_| "alpha denominator is not an integer")?;
    if den < 2 || !den.is_power_of_two() {
        return Err("alpha denominator must be a power of two >= 2".into());
    }
    Ok(den.trailing_zeros())
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct EvalArgs {
    /// Input value; repeat or comma-separate for several.
    #[arg(long, required = true, allow_negative_numbers = true, value_delimiter = ',')]
    pub x: Vec<f64>,
    #[arg(long, default_value = "paper-hiacc")]
    pub preset: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridName {
    Paper,
    Trend,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    #[arg(long, value_enum, conflicts_with = "grid_file")]
    pub presets: Option<GridName>,
    /// CSV lines `tabs,j,s,eps[,in_frac_bits]`; `#` starts a comment.
    #[arg(long)]
    pub grid_file: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetName {
    Sinc,
    Sigmoid,
    Mnist,
    Cancer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Test,
    Train,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct NnArgs {
    #[arg(long, value_enum, default_value = "sinc")]
    pub dataset: DatasetName,
    /// Hidden shape `<layers>x<neurons>`; defaults per dataset.
    #[arg(long)]
    pub arch: Option<String>,
    /// `all`, or a comma list drawn from 0.04,0.02,0.01,0.001,0.0001,exact.
    #[arg(long, default_value = "all")]
    pub eps: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, value_enum, default_value = "test")]
    pub protocol: ProtocolArg,
    #[arg(long, env = "DCTIF_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    /// MNIST training images kept per digit; 0 keeps the full set.
    #[arg(long, default_value_t = dctif::datasets::MNIST_DEFAULT_TRAIN_PER_CLASS)]
    pub subset_per_class: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpWhat {
    Samples,
    Coeffs,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DumpArgs {
    #[arg(long, default_value = "paper-hiacc")]
    pub preset: String,
    #[arg(long, value_enum, default_value = "samples")]
    pub what: DumpWhat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Reads `key = value` lines. Keys may be qualified as `command.key`.
pub fn read_config(path: &PathBuf) -> Result<Vec<(String, String)>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| format!("{}:{}: expected key = value", path.display(), n + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Splices config-file entries in as flags right after the subcommand name,
/// so anything given on the command line overrides them.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let Some(pos) = args.iter().position(|a| Command::NAMES.contains(&a.to_string_lossy().as_ref())) else {
        return Ok(args);
    };
    let cmd = args[pos].to_string_lossy().into_owned();
    let mut injected = Vec::new();
    for (key, value) in read_config(&path)? {
        let key = match key.split_once('.') {
            Some((c, k)) if c == cmd => k.to_string(),
            Some(_) => continue,
            None => key,
        };
        let flag = format!("--{}", key.replace('_', "-"));
        match value.as_str() {
            "true" => injected.push(flag.into()),
            "false" => {}
            _ => {
                injected.push(flag.into());
                injected.push(value.into());
            }
        }
    }
    let mut merged = args[..=pos].to_vec();
    merged.extend(injected);
    merged.extend_from_slice(&args[pos + 1..]);
    Ok(merged)
}
