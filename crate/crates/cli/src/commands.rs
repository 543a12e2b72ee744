use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use dctif::analysis::{self, SweepPoint, DEFAULT_IN_FRAC_BITS};
use dctif::coeffgen::{coefficient_table, reference_mismatches, DctifParams, REFERENCE_VECTORS};
use dctif::datasets::{self, Dataset};
use dctif::fixedpoint::quantize;
use dctif::nn::{self, ActivationSpec, Hyperparams, MlpArchitecture, Protocol};
use dctif::presets::{Preset, ERROR_BUDGETS};

use crate::args::*;

pub enum Failure {
    Usage(String),
    Check(String),
    Runtime(String),
}

impl From<dctif::Error> for Failure {
    fn from(e: dctif::Error) -> Self {
        match e {
            dctif::Error::Param(_) | dctif::Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

pub fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Coeffs(a) => coeffs(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
        Command::Nn(a) => nn_study(a),
        Command::Dump(a) => dump(a),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => Ok(io::stdout().lock().write_all(bytes)?),
    }
}

fn config_line(pairs: &[(&str, String)]) -> String {
    let mut s = String::from("# config:");
    for (k, v) in pairs {
        let _ = write!(s, " {k}={v}");
    }
    s.push('\n');
    s
}

fn coeffs(a: CoeffsArgs) -> Outcome {
    let j = a.resolved_j();
    let mut buf = Vec::new();
    match (a.tabs, a.s) {
        (Some(tabs), Some(s)) => {
            let params = DctifParams::with_window(tabs, j, s, a.w)?;
            let table = coefficient_table(&params)?;
            buf.extend(
                config_line(&[
                    ("command", "coeffs".into()),
                    ("tabs", tabs.to_string()),
                    ("j", j.to_string()),
                    ("s", s.to_string()),
                    ("w", a.w.to_string()),
                ])
                .bytes(),
            );
            table.write_csv(&mut buf)?;
        }
        (None, None) if a.golden_check => {}
        _ => return Err(Failure::Usage("coeffs needs both --tabs and --s".into())),
    }
    emit(a.out.as_deref(), &buf)?;

    if a.golden_check {
        let bad = reference_mismatches(a.w)?;
        let total = REFERENCE_VECTORS.len();
        if !bad.is_empty() {
            let mut msg = format!("golden check FAILED: {}/{total} vectors differ (w={})", bad.len(), a.w);
            for (tabs, s, r, want, got) in bad {
                let _ = write!(msg, "\n  tabs={tabs} s={s} r={r}: expected {want:?}, got {got:?}");
            }
            return Err(Failure::Check(msg));
        }
        eprintln!("golden check passed: {total}/{total} vectors (w={})", a.w);
    }
    Ok(())
}

fn preset(name: &str) -> Result<Preset, Failure> {
    Ok(name.parse::<Preset>()?)
}

fn eval(a: EvalArgs) -> Outcome {
    let p = preset(&a.preset)?;
    let engine = p.build()?;
    let xs: Vec<String> = a.x.iter().map(f64::to_string).collect();
    let mut s = config_line(&[("command", "eval".into()), ("preset", p.name()), ("x", xs.join(";"))]);
    s.push_str("x,code,route,approx,exact,abs_err\n");
    for &x in &a.x {
        let code = quantize(x, engine.in_fmt());
        let t = engine.evaluate_traced(code);
        let approx = t.output.to_real();
        let exact = x.tanh();
        let route = format!("{:?}", t.route).to_lowercase();
        let _ = writeln!(s, "{x},{},{route},{approx},{exact},{:e}", code.raw(), (approx - exact).abs());
    }
    emit(a.out.as_deref(), s.as_bytes())
}

fn parse_grid(path: &Path) -> Result<Vec<SweepPoint>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let mut grid = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() || line.starts_with("tabs") {
            continue;
        }
        let bad = || Failure::Usage(format!("{}:{}: expected tabs,j,s,eps[,in_frac_bits]", path.display(), n + 1));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if !(4..=5).contains(&f.len()) {
            return Err(bad());
        }
        let int = |i: usize| f[i].parse::<u32>().map_err(|_| bad());
        let mut p = SweepPoint::new(int(0)?, int(1)?, int(2)?, f[3].parse().map_err(|_| bad())?);
        p.in_frac_bits = if f.len() == 5 { int(4)? } else { DEFAULT_IN_FRAC_BITS };
        grid.push(p);
    }
    Ok(grid)
}

fn sweep(a: SweepArgs) -> Outcome {
    let (grid, source) = match (&a.presets, &a.grid_file) {
        (_, Some(path)) => (parse_grid(path)?, path.display().to_string()),
        (Some(GridName::Trend), None) => (analysis::trend_grid(), "trend".into()),
        (Some(GridName::Paper), None) | (None, None) => (analysis::paper_grid(), "paper".into()),
    };
    let entries = analysis::sweep(&grid);
    let mut buf =
        config_line(&[("command", "sweep".into()), ("grid", source), ("points", grid.len().to_string())]).into_bytes();
    analysis::write_sweep_csv(&entries, &mut buf)?;
    emit(a.out.as_deref(), &buf)
}

fn parse_levels(spec: &str) -> Result<Vec<ActivationSpec>, Failure> {
    if spec.trim() == "all" {
        return Ok(ActivationSpec::study_levels());
    }
    spec.split(',')
        .map(|t| match t.trim() {
            "exact" | "0" => Ok(ActivationSpec::Exact),
            v => {
                let b: f64 = v.parse().map_err(|_| Failure::Usage(format!("bad --eps entry {v:?}")))?;
                if !ERROR_BUDGETS.iter().any(|&e| (e - b).abs() <= e * 1e-9) {
                    return Err(Failure::Usage(format!("--eps {b} is not one of {ERROR_BUDGETS:?}")));
                }
                Ok(ActivationSpec::ErrorBudget(b))
            }
        })
        .collect()
}

fn data_dir(a: &NnArgs) -> Result<PathBuf, Failure> {
    a.data_dir.clone().ok_or_else(|| Failure::Usage("this dataset needs --data-dir or DCTIF_DATA_DIR".into()))
}

fn nn_study(a: NnArgs) -> Outcome {
    let levels = parse_levels(&a.eps)?;
    let (data, default_arch): (Dataset, &str) = match a.dataset {
        DatasetName::Sinc => (datasets::make_sinc_dataset(a.seed), "4x5"),
        DatasetName::Sigmoid => (datasets::make_sigmoid_dataset(a.seed), "4x5"),
        DatasetName::Mnist => (datasets::load_mnist(data_dir(&a)?, a.subset_per_class)?, "1x30"),
        DatasetName::Cancer => (datasets::load_cancer(datasets::cancer_path(&data_dir(&a)?), a.seed)?, "1x3"),
    };
    let arch_str = a.arch.as_deref().unwrap_or(default_arch);
    let arch = MlpArchitecture::parse(arch_str, data.input_dim(), data.output_dim())?;
    let protocol = match a.protocol {
        ProtocolArg::Test => Protocol::Test,
        ProtocolArg::Train => Protocol::Train,
    };
    let hp = Hyperparams { epochs: a.epochs, learning_rate: a.lr, seed: a.seed, ..Hyperparams::default() };
    let rows = nn::run_study(&data, arch, &levels, &hp, protocol)?;
    for r in rows.iter().filter(|r| r.diverged) {
        log::warn!("{} {} eps={} diverged at epoch {}", r.dataset, r.arch, r.eps, r.stop_epoch);
    }

    let mut cfg = vec![
        ("command", "nn".to_string()),
        ("dataset", data.name.clone()),
        ("arch", arch.to_string()),
        ("eps", a.eps.clone()),
        ("seed", a.seed.to_string()),
        ("epochs", a.epochs.to_string()),
        ("lr", a.lr.to_string()),
        ("protocol", protocol.name().into()),
    ];
    if matches!(a.dataset, DatasetName::Mnist) {
        cfg.push(("subset_per_class", a.subset_per_class.to_string()));
    }
    let mut buf = config_line(&cfg).into_bytes();
    nn::write_results_csv(&rows, &mut buf)?;
    emit(a.out.as_deref(), &buf)
}

fn dump(a: DumpArgs) -> Outcome {
    let p = preset(&a.preset)?;
    let engine = p.build()?;
    let what = match a.what {
        DumpWhat::Samples => "samples",
        DumpWhat::Coeffs => "coeffs",
    };
    let mut buf = config_line(&[("command", "dump".into()), ("preset", p.name()), ("what", what.into())]).into_bytes();
    match a.what {
        DumpWhat::Samples => engine.write_samples_csv(&mut buf)?,
        DumpWhat::Coeffs => engine.coeffs().write_csv(&mut buf)?,
    }
    emit(a.out.as_deref(), &buf)
}
