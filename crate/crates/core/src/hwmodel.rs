//! Bit-exact model of the three-region tanh datapath.
//!
//! An input code is sign-folded and routed by the range decoder to one of
//! four multiplexer inputs: the truncated input (pass region), the all-ones
//! code (saturation region), a stored sample, or the DCTIF interpolation of
//! `tab_count` neighbouring samples. The result is negated back for negative
//! inputs.
//!
//! Input codes sit on a grid of `spacing * alpha`, so every processing-region
//! code is either a sample position or one of the `2^j - 1` interpolated
//! positions between two samples.

use std::io::{self, Write};

use crate::coeffgen::{coefficient_table, CoefficientSet, CoefficientTable, DctifParams, FractionalPosition};
use crate::error::{Error, Result};
use crate::fixedpoint::{quantize, truncate_to, FxpValue, QFormat};
use crate::regions::{compute_boundaries, Region, RegionBoundaries};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    entries: Vec<FxpValue>,
    // sample-grid index of entries[0]
    first_index: i64,
    spacing_log2: u32,
    guard: u32,
}

impl SampleTable {
    /// Fills `first_index ..= last_index` (sample-grid indices) plus `guard`
    /// samples on each side with quantized `tanh` values.
    pub fn build(first_index: i64, last_index: i64, spacing_log2: u32, guard: u32, fmt: QFormat) -> Self {
        let lo = first_index - guard as i64;
        let hi = last_index + guard as i64;
        let spacing = (-(spacing_log2 as f64)).exp2();
        let entries = (lo..=hi).map(|k| quantize((k as f64 * spacing).tanh(), fmt)).collect();
        SampleTable { entries, first_index: lo, spacing_log2, guard }
    }

    fn empty(spacing_log2: u32, guard: u32) -> Self {
        SampleTable { entries: Vec::new(), first_index: 0, spacing_log2, guard }
    }

    pub fn entries(&self) -> &[FxpValue] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (-(self.spacing_log2 as f64)).exp2()
    }

    pub fn spacing_log2(&self) -> u32 {
        self.spacing_log2
    }

    /// `x` of entry 0.
    pub fn base(&self) -> f64 {
        self.first_index as f64 * self.spacing()
    }

    pub fn guard(&self) -> u32 {
        self.guard
    }

    pub fn x_at(&self, index: usize) -> f64 {
        (self.first_index + index as i64) as f64 * self.spacing()
    }

    /// Table index of sample-grid index `k`.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let idx = k - self.first_index;
        (0..self.entries.len() as i64).contains(&idx).then_some(idx as usize)
    }

    pub fn word_bits(&self) -> u32 {
        self.entries.first().map_or(0, |e| e.format().width())
    }

    pub fn memory_bits(&self) -> u64 {
        self.entries.len() as u64 * self.word_bits() as u64
    }
}

/// Which multiplexer input produced an output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    Pass,
    Saturation,
    Stored,
    Interpolated,
}

impl Route {
    pub fn region(&self) -> Region {
        match self {
            Route::Pass => Region::Pass,
            Route::Saturation => Region::Saturation,
            Route::Stored | Route::Interpolated => Region::Processing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Address {
    AtSample(usize),
    Interpolate { indices: Vec<usize>, position: FractionalPosition },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trace {
    pub output: FxpValue,
    pub route: Route,
    pub cycles: u32,
}

#[derive(Debug, Clone)]
pub struct ApproxEngine {
    params: DctifParams,
    boundaries: RegionBoundaries,
    table: SampleTable,
    coeffs: CoefficientTable,
    in_fmt: QFormat,
    out_fmt: QFormat,
    // input codes <= pass_code are Pass, >= sat_code are Saturation
    pass_code: i64,
    sat_code: i64,
}

/// Builds the engine. The sample spacing is implied by the formats:
/// `spacing = 2^-(in_fmt.frac_bits - j)`, so input codes land exactly on the
/// interpolation grid.
pub fn build_engine(params: DctifParams, eps_max: f64, in_fmt: QFormat, out_fmt: QFormat) -> Result<ApproxEngine> {
    let j = params.j();
    let in_frac = in_fmt.frac_bits();
    if in_frac < j {
        return Err(Error::config(format!(
            "input {in_fmt} has fewer fraction bits than alpha = 1/{} needs",
            1u32 << j
        )));
    }
    let spacing_log2 = in_frac - j;
    let boundaries = compute_boundaries(eps_max)?;
    let scale = (in_frac as f64).exp2();
    let pass_code = (boundaries.pass_end * scale).floor() as i64;
    let sat_code = ((boundaries.sat_start * scale).ceil() as i64).max(pass_code + 1);

    let guard = params.tab_count().div_ceil(2);
    let lo_code = pass_code + 1;
    let hi_code = (sat_code - 1).min(in_fmt.max_raw() as i64);
    let table = if lo_code <= hi_code {
        // the window of the last interpolated code reaches one sample past it
        SampleTable::build(lo_code >> j, (hi_code >> j) + 1, spacing_log2, guard, out_fmt)
    } else {
        SampleTable::empty(spacing_log2, guard)
    };

    let coeffs = coefficient_table(&params)?;
    Ok(ApproxEngine { params, boundaries, table, coeffs, in_fmt, out_fmt, pass_code, sat_code })
}

impl ApproxEngine {
    pub fn params(&self) -> DctifParams {
        self.params
    }

    pub fn boundaries(&self) -> RegionBoundaries {
        self.boundaries
    }

    pub fn table(&self) -> &SampleTable {
        &self.table
    }

    pub fn coeffs(&self) -> &CoefficientTable {
        &self.coeffs
    }

    pub fn in_fmt(&self) -> QFormat {
        self.in_fmt
    }

    pub fn out_fmt(&self) -> QFormat {
        self.out_fmt
    }

    /// Largest input code routed to the pass region.
    pub fn pass_code(&self) -> i64 {
        self.pass_code
    }

    /// Smallest input code routed to the saturation region.
    pub fn sat_code(&self) -> i64 {
        self.sat_code
    }

    pub fn memory_bits(&self) -> u64 {
        self.table.memory_bits()
    }

    /// Range decoder on a non-negative input code.
    pub fn route_of(&self, code: i64) -> Route {
        if code <= self.pass_code {
            Route::Pass
        } else if code >= self.sat_code {
            Route::Saturation
        } else if code & ((1 << self.params.j()) - 1) == 0 {
            Route::Stored
        } else {
            Route::Interpolated
        }
    }

    /// Sample addresses for a processing-region input (sign is ignored).
    /// Returns `None` outside the processing region.
    pub fn address_decode(&self, x: FxpValue) -> Option<Address> {
        let code = x.abs_saturating().raw() as i64;
        let j = self.params.j();
        match self.route_of(code) {
            Route::Pass | Route::Saturation => None,
            Route::Stored => self.table.index_of(code >> j).map(Address::AtSample),
            Route::Interpolated => {
                let i = code >> j;
                let r = (code & ((1 << j) - 1)) as u32;
                let first = i + self.params.first_offset() as i64;
                let indices = (0..self.params.tab_count() as i64)
                    .map(|t| self.table.index_of(first + t))
                    .collect::<Option<Vec<_>>>()?;
                let position = FractionalPosition::new(r, j).ok()?;
                Some(Address::Interpolate { indices, position })
            }
        }
    }

    fn fold(&self, x: FxpValue) -> (bool, FxpValue) {
        let x = if x.format() == self.in_fmt { x } else { truncate_to(x, self.in_fmt) };
        (x.raw() < 0, x.abs_saturating())
    }

    fn gather(&self, indices: &[usize]) -> Vec<FxpValue> {
        indices.iter().map(|&i| self.table.entries[i]).collect()
    }

    /// Runs the datapath. Interpolation goes through the two-cycle pair
    /// accumulator; see [`ApproxEngine::evaluate`] for the single-shot path.
    pub fn evaluate_traced(&self, x: FxpValue) -> Trace {
        let (negative, a) = self.fold(x);
        let route = self.route_of(a.raw() as i64);
        let (out, cycles) = match route {
            Route::Pass => (truncate_to(a, self.out_fmt), 1),
            Route::Saturation => (self.out_fmt.max_value(), 1),
            _ => match self.address_decode(a).expect("processing input addresses the table") {
                Address::AtSample(i) => (self.table.entries[i], 1),
                Address::Interpolate { indices, position } => {
                    let set = self.coeffs.get(position.r()).expect("table covers every position");
                    interpolate_two_cycle(&self.gather(&indices), set)
                }
            },
        };
        let output = if negative { out.neg_saturating() } else { out };
        Trace { output, route, cycles }
    }

    pub fn evaluate(&self, x: FxpValue) -> FxpValue {
        let (negative, a) = self.fold(x);
        let out = match self.route_of(a.raw() as i64) {
            Route::Pass => truncate_to(a, self.out_fmt),
            Route::Saturation => self.out_fmt.max_value(),
            _ => match self.address_decode(a).expect("processing input addresses the table") {
                Address::AtSample(i) => self.table.entries[i],
                Address::Interpolate { indices, position } => {
                    let set = self.coeffs.get(position.r()).expect("table covers every position");
                    interpolate(&self.gather(&indices), set)
                }
            },
        };
        if negative {
            out.neg_saturating()
        } else {
            out
        }
    }

    /// Quantizes a real input, evaluates, and converts back.
    pub fn evaluate_real(&self, x: f64) -> f64 {
        self.evaluate(quantize(x, self.in_fmt)).to_real()
    }

    /// Every code of the input format, ascending.
    pub fn input_codes(&self) -> impl Iterator<Item = FxpValue> + '_ {
        (self.in_fmt.min_raw() as i64..=self.in_fmt.max_raw() as i64).map(|c| self.in_fmt.from_raw(c))
    }

    /// Sample table as CSV `index,x,raw,real`.
    pub fn write_samples_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "index,x,raw,real")?;
        for (i, e) in self.table.entries.iter().enumerate() {
            writeln!(out, "{},{},{},{}", i, self.table.x_at(i), e.raw(), e.to_real())?;
        }
        Ok(())
    }
}

fn round_shift(acc: i64, s: u32) -> i64 {
    (acc + (1i64 << (s - 1))) >> s
}

/// Single-shot integer dot product, `+ 2^(s-1)`, arithmetic shift right by
/// `s`, clamped to the sample format.
pub fn interpolate(samples: &[FxpValue], coeffs: &CoefficientSet) -> FxpValue {
    assert_eq!(samples.len(), coeffs.values().len(), "tab count mismatch");
    let fmt = samples[0].format();
    let raws: Vec<i64> = samples.iter().map(|s| s.raw() as i64).collect();
    fmt.from_raw(round_shift(coeffs.dot(&raws), coeffs.params().s()))
}

/// Signed-digit (non-adjacent form) decomposition of a constant:
/// `c = sum(sign * 2^shift)`.
pub fn signed_digits(c: i32) -> Vec<(i8, u32)> {
    let mut digits = Vec::new();
    let mut v = c as i64;
    let mut shift = 0;
    while v != 0 {
        if v & 1 == 1 {
            // pick the digit that leaves a multiple of 4
            let d: i64 = 2 - (v & 3);
            digits.push((d as i8, shift));
            v -= d;
        }
        v >>= 1;
        shift += 1;
    }
    digits
}

// constant multiply as shifted adds/subtracts
fn shift_add(c: i32, x: i64) -> i64 {
    signed_digits(c).into_iter().fold(0, |acc, (d, k)| if d > 0 { acc + (x << k) } else { acc - (x << k) })
}

/// Pair-accumulator datapath: each cycle forms `c_a*A + c_b*B` for one pair
/// of taps using shift-and-add constant multipliers and adds it into the
/// accumulator; the final cycle's sum is rounded and shifted. Returns the
/// output and the number of cycles used (one per tap pair).
pub fn interpolate_two_cycle(samples: &[FxpValue], coeffs: &CoefficientSet) -> (FxpValue, u32) {
    assert_eq!(samples.len(), coeffs.values().len(), "tab count mismatch");
    let fmt = samples[0].format();
    let mut acc = 0i64;
    let mut cycles = 0;
    for (cs, xs) in coeffs.values().chunks(2).zip(samples.chunks(2)) {
        let pair: i64 = cs.iter().zip(xs).map(|(&c, x)| shift_add(c, x.raw() as i64)).sum();
        acc += pair;
        cycles += 1;
    }
    (fmt.from_raw(round_shift(acc, coeffs.params().s())), cycles)
}
