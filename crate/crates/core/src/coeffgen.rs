//! DCT interpolation filter (DCTIF) coefficient generation.
//!
//! A filter interpolates the value at fractional position `i + r/2^j`
//! between samples `i` and `i + 1`. Weights come from the DCT-II / inverse
//! DCT pair evaluated at the fractional offset, are smoothed by a cosine
//! window of size `W`, scaled by `2^s`, rounded, and then nudged so the
//! integers sum to exactly `2^s`.
//!
//! Layout of an even tab count `2M`:
//!
//! * at the midpoint (`r/2^j = 1/2`) all `2M` taps `i-M+1 ..= i+M` are used;
//! * elsewhere the point is closer to one sample, so a `2M-1` tap odd-length
//!   filter centred on the nearest sample is used and the far slot is a
//!   zero pad. Two tabs (`M = 1`) are the exception: a one-tap filter does
//!   not interpolate, so the two-tap even filter is used everywhere.
//!
//! An odd tab count `2M+1` always uses taps `i-M ..= i+M`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use crate::error::{Error, Result};

/// Smallest window size reproducing every reference vector in
/// [`REFERENCE_VECTORS`] with a single setting.
pub const DEFAULT_WINDOW: u32 = 16;

pub const MIN_TABS: u32 = 2;
pub const MAX_TABS: u32 = 7;
pub const MAX_J: u32 = 6;
pub const MAX_S: u32 = 8;

/// Published 4- and 6-tab coefficient sets at `alpha = 1/4`:
/// `(tabs, s, r, coefficients)`.
pub const REFERENCE_VECTORS: [(u32, u32, u32, &[i32]); 12] = [
    (4, 4, 1, &[-2, 15, 3, 0]),
    (4, 4, 2, &[-2, 10, 10, -2]),
    (4, 4, 3, &[0, 3, 15, -2]),
    (4, 5, 1, &[-3, 29, 6, 0]),
    (4, 5, 2, &[-3, 19, 19, -3]),
    (4, 5, 3, &[0, 6, 29, -3]),
    (6, 4, 1, &[1, -2, 14, 4, -1, 0]),
    (6, 4, 2, &[1, -3, 10, 10, -3, 1]),
    (6, 4, 3, &[0, -1, 4, 14, -2, 1]),
    (6, 5, 1, &[1, -5, 29, 9, -2, 0]),
    (6, 5, 2, &[1, -5, 20, 20, -5, 1]),
    (6, 5, 3, &[0, -2, 9, 29, -5, 1]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DctifParams {
    tab_count: u32,
    j: u32,
    s: u32,
    window_size: u32,
}

impl DctifParams {
    /// Parameters with the default smoothing window.
    pub fn new(tab_count: u32, j: u32, s: u32) -> Result<Self> {
        Self::with_window(tab_count, j, s, DEFAULT_WINDOW)
    }

    pub fn with_window(tab_count: u32, j: u32, s: u32, window_size: u32) -> Result<Self> {
        if !(MIN_TABS..=MAX_TABS).contains(&tab_count) {
            return Err(Error::param(format!("tab count {tab_count} outside {MIN_TABS}..={MAX_TABS}")));
        }
        if !(1..=MAX_J).contains(&j) {
            return Err(Error::param(format!("j = {j} outside 1..={MAX_J}")));
        }
        if !(1..=MAX_S).contains(&s) {
            return Err(Error::param(format!("s = {s} outside 1..={MAX_S}")));
        }
        if window_size < 2 || window_size + 1 < tab_count {
            return Err(Error::param(format!("window size {window_size} too small for {tab_count} tabs")));
        }
        Ok(DctifParams { tab_count, j, s, window_size })
    }

    pub fn tab_count(&self) -> u32 {
        self.tab_count
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn window_size(&self) -> u32 {
        self.window_size
    }

    pub fn alpha(&self) -> f64 {
        (-(self.j as f64)).exp2()
    }

    /// Number of interpolated positions per sample interval, `2^j - 1`.
    pub fn position_count(&self) -> u32 {
        (1 << self.j) - 1
    }

    /// Offset of the first tap slot relative to sample `i`.
    pub fn first_offset(&self) -> i32 {
        let m = (self.tab_count / 2) as i32;
        if self.tab_count.is_multiple_of(2) {
            1 - m
        } else {
            -m
        }
    }

    pub fn positions(&self) -> impl Iterator<Item = FractionalPosition> + '_ {
        (1..=self.position_count()).map(move |r| FractionalPosition { r, j: self.j })
    }
}

impl fmt::Display for DctifParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-tab s={} alpha=1/{} W={}", self.tab_count, self.s, 1u32 << self.j, self.window_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FractionalPosition {
    r: u32,
    j: u32,
}

impl FractionalPosition {
    pub fn new(r: u32, j: u32) -> Result<Self> {
        if !(1..=MAX_J).contains(&j) {
            return Err(Error::param(format!("j = {j} outside 1..={MAX_J}")));
        }
        if r == 0 || r >= 1 << j {
            return Err(Error::param(format!("position r = {r} outside 1..={}", (1u32 << j) - 1)));
        }
        Ok(FractionalPosition { r, j })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    /// `r * alpha`, in (0, 1).
    pub fn value(&self) -> f64 {
        self.r as f64 / (1u32 << self.j) as f64
    }

    pub fn is_midpoint(&self) -> bool {
        2 * self.r == 1 << self.j
    }

    /// The position `1 - r*alpha`.
    pub fn mirrored(&self) -> FractionalPosition {
        FractionalPosition { r: (1 << self.j) - self.r, j: self.j }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealCoefficients {
    values: Vec<f64>,
}

impl RealCoefficients {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientSet {
    params: DctifParams,
    position: FractionalPosition,
    values: Vec<i32>,
}

impl CoefficientSet {
    pub fn params(&self) -> DctifParams {
        self.params
    }

    pub fn position(&self) -> FractionalPosition {
        self.position
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn sum(&self) -> i64 {
        self.values.iter().map(|&c| c as i64).sum()
    }

    /// Integer dot product with raw sample codes, before the `>> s` rescale.
    pub fn dot(&self, samples: &[i64]) -> i64 {
        debug_assert_eq!(samples.len(), self.values.len());
        self.values.iter().zip(samples).map(|(&c, &x)| c as i64 * x).sum()
    }
}

// One contiguous run of real filter taps inside the tab slots.
#[derive(Debug, Clone, Copy)]
enum Kernel {
    Even { m: u32 },
    Odd { m: u32 },
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    kernel: Kernel,
    // first occupied slot
    slot: usize,
    // sample offset (relative to i) the kernel treats as its origin
    origin: i32,
}

impl Layout {
    fn of(params: &DctifParams, pos: &FractionalPosition) -> Layout {
        let t = params.tab_count;
        let m = t / 2;
        if t % 2 == 1 {
            return Layout { kernel: Kernel::Odd { m }, slot: 0, origin: 0 };
        }
        if m == 1 || pos.is_midpoint() {
            return Layout { kernel: Kernel::Even { m }, slot: 0, origin: 0 };
        }
        if 2 * pos.r < 1 << pos.j {
            Layout { kernel: Kernel::Odd { m: m - 1 }, slot: 0, origin: 0 }
        } else {
            Layout { kernel: Kernel::Odd { m: m - 1 }, slot: 1, origin: 1 }
        }
    }

    fn taps(&self) -> usize {
        match self.kernel {
            Kernel::Even { m } => 2 * m as usize,
            Kernel::Odd { m } => 2 * m as usize + 1,
        }
    }

    fn active(&self) -> std::ops::Range<usize> {
        self.slot..self.slot + self.taps()
    }
}

fn dct_weight(k: u32) -> f64 {
    if k == 0 {
        0.5
    } else {
        1.0
    }
}

// Even-length kernel, taps at n = 1-M ..= M, interpolating at p in (0, 1).
fn even_kernel(m: u32, p: f64) -> Vec<f64> {
    let mf = m as f64;
    let denom = 4.0 * mf;
    (1 - m as i32..=m as i32)
        .map(|n| {
            let a = (2.0 * n as f64 - 1.0 + 2.0 * mf) / denom;
            let b = (2.0 * p - 1.0 + 2.0 * mf) / denom;
            let sum: f64 =
                (0..2 * m).map(|k| dct_weight(k) * (a * PI * k as f64).cos() * (b * PI * k as f64).cos()).sum();
            sum / mf
        })
        .collect()
}

// Odd-length kernel, taps at n = -M ..= M, interpolating at p in (-1, 1).
fn odd_kernel(m: u32, p: f64) -> Vec<f64> {
    let mf = m as f64;
    let size = 2.0 * mf + 1.0;
    (-(m as i32)..=m as i32)
        .map(|n| {
            let a = (2.0 * n as f64 + 1.0 + 2.0 * mf) / (2.0 * size);
            let b = (2.0 * p + 1.0 + 2.0 * mf) / (2.0 * size);
            let sum: f64 =
                (0..=2 * m).map(|k| dct_weight(k) * (a * PI * k as f64).cos() * (b * PI * k as f64).cos()).sum();
            2.0 * sum / size
        })
        .collect()
}

fn check_position(params: &DctifParams, pos: &FractionalPosition) -> Result<()> {
    if pos.j != params.j {
        return Err(Error::param(format!("position uses j = {} but parameters use j = {}", pos.j, params.j)));
    }
    Ok(())
}

/// Real-valued filter weights at the position, before windowing and
/// scaling. Always `tab_count` long; pad slots hold `0.0`.
pub fn generate_raw_coefficients(params: &DctifParams, position: &FractionalPosition) -> Result<RealCoefficients> {
    check_position(params, position)?;
    let layout = Layout::of(params, position);
    let p = position.value() - layout.origin as f64;
    let kernel = match layout.kernel {
        Kernel::Even { m } => even_kernel(m, p),
        Kernel::Odd { m } => odd_kernel(m, p),
    };
    let mut values = vec![0.0; params.tab_count as usize];
    values[layout.active()].copy_from_slice(&kernel);
    Ok(RealCoefficients { values })
}

/// Windows, scales by `2^s`, rounds half away from zero and normalises the
/// integer sum to exactly `2^s`.
///
/// Normalisation moves the deficit one unit at a time onto the tap whose
/// rounding lost the most in the needed direction (leftmost on ties).
pub fn finalize_coefficients(
    raw: &RealCoefficients,
    params: &DctifParams,
    position: &FractionalPosition,
) -> Result<CoefficientSet> {
    check_position(params, position)?;
    if raw.values.len() != params.tab_count as usize {
        return Err(Error::param(format!("{} raw weights for a {}-tab filter", raw.values.len(), params.tab_count)));
    }
    let layout = Layout::of(params, position);
    let scale = (params.s as f64).exp2();
    let w_span = (params.window_size - 1) as f64;
    let first = params.first_offset();
    let p = position.value();

    let scaled: Vec<f64> = raw
        .values
        .iter()
        .enumerate()
        .map(|(slot, &c)| {
            let n = (first + slot as i32) as f64;
            c * (PI * (n - p) / w_span).cos() * scale
        })
        .collect();
    let mut values: Vec<i32> = scaled
        .iter()
        .enumerate()
        .map(|(slot, x)| if layout.active().contains(&slot) { x.round() as i32 } else { 0 })
        .collect();

    let target = 1i64 << params.s;
    let mut deficit = target - values.iter().map(|&c| c as i64).sum::<i64>();
    while deficit != 0 {
        let step = deficit.signum();
        let slot = layout
            .active()
            .max_by(|&a, &b| {
                let ra = (scaled[a] - values[a] as f64) * step as f64;
                let rb = (scaled[b] - values[b] as f64) * step as f64;
                // reversed on ties so the leftmost slot wins max_by
                ra.total_cmp(&rb).then(b.cmp(&a))
            })
            .expect("filter has at least one tap");
        values[slot] += step as i32;
        deficit -= step;
    }

    Ok(CoefficientSet { params: *params, position: *position, values })
}

pub fn coefficients_at(params: &DctifParams, position: &FractionalPosition) -> Result<CoefficientSet> {
    let raw = generate_raw_coefficients(params, position)?;
    finalize_coefficients(&raw, params, position)
}

/// Finalised sets for every position `r = 1 ..= 2^j - 1`, indexed by `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientTable {
    params: DctifParams,
    sets: Vec<CoefficientSet>,
}

impl CoefficientTable {
    pub fn params(&self) -> DctifParams {
        self.params
    }

    pub fn get(&self, r: u32) -> Option<&CoefficientSet> {
        self.sets.get((r as usize).checked_sub(1)?)
    }

    pub fn iter(&self) -> impl Iterator<Item = &CoefficientSet> {
        self.sets.iter()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// CSV with header `tabs,j,r,s,w,c0,c1,...`, one row per position.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let p = self.params;
        let header: Vec<String> = (0..p.tab_count).map(|i| format!("c{i}")).collect();
        writeln!(out, "tabs,j,r,s,w,{}", header.join(","))?;
        for set in &self.sets {
            let coeffs: Vec<String> = set.values.iter().map(|c| c.to_string()).collect();
            writeln!(out, "{},{},{},{},{},{}", p.tab_count, p.j, set.position.r, p.s, p.window_size, coeffs.join(","))?;
        }
        Ok(())
    }
}

pub fn coefficient_table(params: &DctifParams) -> Result<CoefficientTable> {
    let sets = params.positions().map(|pos| coefficients_at(params, &pos)).collect::<Result<Vec<_>>>()?;
    Ok(CoefficientTable { params: *params, sets })
}

/// `(tabs, s, r, expected, got)`.
pub type Mismatch = (u32, u32, u32, Vec<i32>, Vec<i32>);

/// Compares generated coefficients against [`REFERENCE_VECTORS`] using the
/// given window.
pub fn reference_mismatches(window_size: u32) -> Result<Vec<Mismatch>> {
    let mut bad = Vec::new();
    for &(tabs, s, r, expected) in REFERENCE_VECTORS.iter() {
        let params = DctifParams::with_window(tabs, 2, s, window_size)?;
        let got = coefficients_at(&params, &FractionalPosition::new(r, 2)?)?;
        if got.values() != expected {
            bad.push((tabs, s, r, expected.to_vec(), got.values().to_vec()));
        }
    }
    Ok(bad)
}
