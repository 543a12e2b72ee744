//! Exhaustive error characterisation and memory accounting.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::coeffgen::DctifParams;
use crate::error::Result;
use crate::fixedpoint::QFormat;
use crate::hwmodel::{build_engine, ApproxEngine};

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub params: DctifParams,
    pub eps_max: f64,
    pub in_fmt: QFormat,
    pub out_fmt: QFormat,
    pub max_err: f64,
    pub mean_abs_err: f64,
    pub argmax_x: f64,
    pub samples_count: usize,
    pub memory_bits: u64,
    pub codes_evaluated: u64,
}

impl ErrorReport {
    pub const CSV_HEADER: &'static str = "tabs,j,s,eps,max_err,mean_err,argmax_x,samples,mem_bits";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.9e},{:.9e},{},{},{}",
            self.params.tab_count(),
            self.params.j(),
            self.params.s(),
            self.eps_max,
            self.max_err,
            self.mean_abs_err,
            self.argmax_x,
            self.samples_count,
            self.memory_bits
        )
    }
}

/// Evaluates every non-negative input code against `f64::tanh`. Negative
/// codes mirror these exactly (odd symmetry of the datapath).
pub fn max_error(engine: &ApproxEngine) -> ErrorReport {
    let fmt = engine.in_fmt();
    let mut max_err = 0.0f64;
    let mut argmax_x = 0.0;
    let mut total = 0.0;
    let mut n = 0u64;
    for code in 0..=fmt.max_raw() as i64 {
        let x = fmt.from_raw(code);
        let xr = x.to_real();
        let err = (engine.evaluate(x).to_real() - xr.tanh()).abs();
        if err > max_err {
            max_err = err;
            argmax_x = xr;
        }
        total += err;
        n += 1;
    }
    ErrorReport {
        params: engine.params(),
        eps_max: engine.boundaries().eps_max,
        in_fmt: fmt,
        out_fmt: engine.out_fmt(),
        max_err,
        mean_abs_err: total / n as f64,
        argmax_x,
        samples_count: engine.table().len(),
        memory_bits: engine.memory_bits(),
        codes_evaluated: n,
    }
}

/// Worst error over real inputs, input quantization included: the output is
/// constant on each code's rounding cell and `tanh` is monotone, so the
/// supremum is attained at a cell edge.
pub fn real_input_max_error(engine: &ApproxEngine) -> f64 {
    let fmt = engine.in_fmt();
    let half = fmt.lsb() / 2.0;
    (0..=fmt.max_raw() as i64)
        .map(|code| {
            let x = fmt.from_raw(code);
            let y = engine.evaluate(x).to_real();
            let c = x.to_real();
            let lo = (y - (c - half).max(0.0).tanh()).abs();
            // the top code also absorbs every larger input
            let hi = if code == fmt.max_raw() as i64 { (y - 1.0).abs() } else { (y - (c + half).tanh()).abs() };
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

pub fn memory_footprint(engine: &ApproxEngine) -> u64 {
    engine.memory_bits()
}

/// `bits / 1024`.
pub fn kbits(bits: u64) -> f64 {
    bits as f64 / 1024.0
}

/// One point of a parameter sweep. The input grid is fixed by
/// `in_frac_bits`; the sample spacing follows as `2^-in_frac_bits / alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub tabs: u32,
    pub j: u32,
    pub s: u32,
    pub eps_max: f64,
    pub in_frac_bits: u32,
}

pub const DEFAULT_IN_INT_BITS: u32 = 3;
pub const DEFAULT_IN_FRAC_BITS: u32 = 6;
pub const DEFAULT_OUT_FRAC_BITS: u32 = 15;

impl SweepPoint {
    pub fn new(tabs: u32, j: u32, s: u32, eps_max: f64) -> Self {
        SweepPoint { tabs, j, s, eps_max, in_frac_bits: DEFAULT_IN_FRAC_BITS }
    }

    pub fn engine(&self) -> Result<ApproxEngine> {
        let params = DctifParams::new(self.tabs, self.j, self.s)?;
        let in_fmt = QFormat::new(DEFAULT_IN_INT_BITS, self.in_frac_bits)?;
        let out_fmt = QFormat::new(0, DEFAULT_OUT_FRAC_BITS)?;
        build_engine(params, self.eps_max, in_fmt, out_fmt)
    }
}

#[derive(Debug)]
pub struct SweepEntry {
    pub point: SweepPoint,
    pub report: Result<ErrorReport>,
}

/// Runs every point in parallel; output order follows `grid`.
pub fn sweep(grid: &[SweepPoint]) -> Vec<SweepEntry> {
    grid.par_iter().map(|&point| SweepEntry { point, report: point.engine().map(|e| max_error(&e)) }).collect()
}

/// Writes reports as CSV; invalid points become `# skipped:` comment lines.
pub fn write_sweep_csv<W: Write>(entries: &[SweepEntry], out: &mut W) -> io::Result<()> {
    writeln!(out, "{}", ErrorReport::CSV_HEADER)?;
    for e in entries {
        match &e.report {
            Ok(r) => writeln!(out, "{}", r.csv_row())?,
            Err(err) => {
                let p = e.point;
                writeln!(out, "# skipped: tabs={} j={} s={} eps={}: {err}", p.tabs, p.j, p.s, p.eps_max)?
            }
        }
    }
    Ok(())
}

/// The configurations with published cost/accuracy figures.
pub fn paper_grid() -> Vec<SweepPoint> {
    vec![
        SweepPoint::new(2, 2, 4, 2e-4),
        SweepPoint::new(2, 3, 4, 2e-4),
        SweepPoint::new(2, 3, 5, 2e-4),
        SweepPoint::new(4, 2, 4, 2e-4),
        SweepPoint::new(4, 2, 6, 1e-5),
    ]
}

/// Tabs x alpha x s trend grid at a fixed input granularity of 1/64.
pub fn trend_grid() -> Vec<SweepPoint> {
    let mut grid = Vec::new();
    for tabs in [2, 4, 6] {
        for j in 1..=3 {
            for s in 4..=6 {
                grid.push(SweepPoint::new(tabs, j, s, 1e-5));
            }
        }
    }
    grid
}
