//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use dctif::analysis::{kbits, max_error, sweep, trend_grid};
use dctif::coeffgen::{coefficient_table, DctifParams, MAX_J, MAX_S, MAX_TABS, MIN_TABS};
use dctif::datasets::make_sinc_dataset;
use dctif::hwmodel::{interpolate, interpolate_two_cycle, Address, ApproxEngine};
use dctif::nn::{run_study, ActivationSpec, Hyperparams, MlpArchitecture, Protocol};
use dctif::presets::{Preset, ERROR_BUDGETS};
use dctif::regions::{saturation_start_bisection, saturation_start_closed_form};

type Check = fn() -> Verdict;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn within(elapsed: Duration, limit: Duration, v: Verdict) -> Verdict {
    if elapsed > limit {
        verdict(false, format!("{} [took {elapsed:.1?}, limit {limit:?}]", v.detail))
    } else {
        v
    }
}

// Coefficient vectors as published, (tabs, s, r, values).
const TABLE: [(u32, u32, u32, [i32; 6]); 12] = [
    (4, 4, 1, [-2, 15, 3, 0, 0, 0]),
    (4, 4, 2, [-2, 10, 10, -2, 0, 0]),
    (4, 4, 3, [0, 3, 15, -2, 0, 0]),
    (4, 5, 1, [-3, 29, 6, 0, 0, 0]),
    (4, 5, 2, [-3, 19, 19, -3, 0, 0]),
    (4, 5, 3, [0, 6, 29, -3, 0, 0]),
    (6, 4, 1, [1, -2, 14, 4, -1, 0]),
    (6, 4, 2, [1, -3, 10, 10, -3, 1]),
    (6, 4, 3, [0, -1, 4, 14, -2, 1]),
    (6, 5, 1, [1, -5, 29, 9, -2, 0]),
    (6, 5, 2, [1, -5, 20, 20, -5, 1]),
    (6, 5, 3, [0, -2, 9, 29, -5, 1]),
];

fn golden_coefficients() -> Verdict {
    let bin = dctif_verify::cli_binary();
    let t = Instant::now();
    let status = Command::new(bin)
        .args(["coeffs", "--tabs", "4", "--s", "4", "--alpha", "1/4", "--golden-check"])
        .output()
        .expect("run dctif");
    let mut bad = Vec::new();
    for (tabs, s, r, want) in TABLE {
        let table = coefficient_table(&DctifParams::new(tabs, 2, s).unwrap()).unwrap();
        let got = table.get(r).unwrap().values();
        if got != &want[..tabs as usize] {
            bad.push(format!("tabs={tabs} s={s} r={r}: {got:?}"));
        }
    }
    let ok = status.status.code() == Some(0) && bad.is_empty();
    within(
        t.elapsed(),
        Duration::from_secs(1),
        verdict(
            ok,
            format!("cli exit {:?}, {}/12 vectors match {}", status.status.code(), 12 - bad.len(), bad.join("; ")),
        ),
    )
}

fn error_bound(preset: Preset, bound: f64) -> Verdict {
    let t = Instant::now();
    let engine = preset.build().unwrap();
    // independent walk over every code, both signs
    let mut worst = 0.0f64;
    for x in engine.input_codes() {
        worst = worst.max((engine.evaluate(x).to_real() - x.to_real().tanh()).abs());
    }
    let report = max_error(&engine);
    let ok = worst <= bound && (report.max_err - worst).abs() < 1e-15;
    within(
        t.elapsed(),
        Duration::from_secs(60),
        verdict(ok, format!("{preset}: max error {worst:.4e} (bound {bound:.1e}) at x={}", report.argmax_x)),
    )
}

fn memory() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, published) in [(Preset::PaperLowAccuracy, 1.12), (Preset::PaperHighAccuracy, 1.52)] {
        let bits = p.build().unwrap().memory_bits();
        let k = kbits(bits);
        let rel = (k - published) / published;
        ok &= rel.abs() <= 0.10;
        parts.push(format!("{p}: {bits} bits = {k:.4} kbits vs {published} ({:+.1}%)", rel * 100.0));
    }
    verdict(ok, parts.join(", "))
}

fn engine_invariants(e: &ApproxEngine) -> Result<(), String> {
    let fmt = e.in_fmt();
    let lsb = e.out_fmt().lsb();
    let mut prev: Option<f64> = None;
    for x in e.input_codes() {
        let y = e.evaluate(x);
        if x.raw() > fmt.min_raw() && e.evaluate(x.neg_saturating()).raw() != -y.raw() {
            return Err(format!("odd symmetry broken at code {}", x.raw()));
        }
        let traced = e.evaluate_traced(x).output;
        if traced != y {
            return Err(format!("two-cycle path differs at code {}", x.raw()));
        }
        if let Some(Address::Interpolate { indices, position }) = e.address_decode(x.abs_saturating()) {
            let samples: Vec<_> = indices.iter().map(|&i| e.table().entries()[i]).collect();
            let set = e.coeffs().get(position.r()).unwrap();
            if interpolate(&samples, set) != interpolate_two_cycle(&samples, set).0 {
                return Err(format!("pairwise accumulation differs at code {}", x.raw()));
            }
        }
        if let Some(p) = prev {
            if y.to_real() < p - lsb {
                return Err(format!("output drops by more than 1 LSB at code {}", x.raw()));
            }
        }
        prev = Some(y.to_real());
    }
    Ok(())
}

fn structural() -> Verdict {
    let t = Instant::now();
    let mut sets = 0;
    let mut failures = Vec::new();
    for tabs in MIN_TABS..=MAX_TABS {
        for j in 1..=MAX_J {
            for s in 1..=MAX_S {
                let Ok(params) = DctifParams::new(tabs, j, s) else { continue };
                let table = coefficient_table(&params).unwrap();
                for set in table.iter() {
                    sets += 1;
                    let c = set.values();
                    if set.sum() != 1 << s {
                        failures.push(format!("{params} r={}: sum {}", set.position().r(), set.sum()));
                    }
                    let k = 37i64;
                    if set.dot(&vec![k; c.len()]) != k << s {
                        failures.push(format!("{params} r={}: DC gain", set.position().r()));
                    }
                    let mirror = table.get(set.position().mirrored().r()).unwrap().values();
                    let reversed: Vec<i32> = mirror.iter().rev().copied().collect();
                    let odd_tabs = tabs % 2 == 1;
                    if !odd_tabs && c != reversed.as_slice() {
                        failures.push(format!("{params} r={}: not the mirror of its partner", set.position().r()));
                    }
                }
            }
        }
    }
    let mut engines = vec![Preset::PaperLowAccuracy, Preset::PaperHighAccuracy];
    engines.extend(ERROR_BUDGETS.iter().map(|&b| Preset::Budget(b)));
    for p in engines {
        if let Err(e) = engine_invariants(&p.build().unwrap()) {
            failures.push(format!("{p}: {e}"));
        }
    }
    let ok = failures.is_empty();
    within(
        t.elapsed(),
        Duration::from_secs(120),
        verdict(
            ok,
            format!(
                "{sets} coefficient sets, 7 engines exhaustive; {}",
                if ok { "no violations".into() } else { failures.join("; ") }
            ),
        ),
    )
}

fn boundary_solver() -> Verdict {
    let mut worst = 0.0f64;
    for eps in [0.04, 0.02, 0.01, 0.001, 0.0001, 0.00001] {
        worst = worst.max((saturation_start_bisection(eps).unwrap() - saturation_start_closed_form(eps)).abs());
    }
    verdict(worst <= 1e-9, format!("worst |bisection - closed form| = {worst:.2e}"))
}

fn nn_trend() -> Verdict {
    let t = Instant::now();
    let seed = 7;
    let data = make_sinc_dataset(seed);
    let hp = Hyperparams { seed, ..Hyperparams::default() };
    let levels = ActivationSpec::study_levels();
    let study = |h| run_study(&data, MlpArchitecture::new(1, h, 5, 1).unwrap(), &levels, &hp, Protocol::Test).unwrap();
    let shallow = study(4);
    let deep = study(8);
    let norm: Vec<f64> = shallow.iter().map(|r| r.metrics.normalized_mse).collect();
    let inversions: Vec<f64> = norm.windows(2).filter(|w| w[1] > w[0]).map(|w| w[1] - w[0]).collect();
    let trend_ok = inversions.len() <= 1 && inversions.iter().all(|&d| d <= 1e-4);
    let exact_zero = *norm.last().unwrap() == 0.0;
    let depth_ok = deep[1].metrics.normalized_mse > shallow[1].metrics.normalized_mse;
    let fmt: Vec<String> = norm.iter().map(|v| format!("{v:.2e}")).collect();
    within(
        t.elapsed(),
        Duration::from_secs(600),
        verdict(
            trend_ok && exact_zero && depth_ok,
            format!(
                "4x5 norm_mse {} ({} inversions); 0.02: 8x5 {:.3e} vs 4x5 {:.3e}",
                fmt.join(" "),
                inversions.len(),
                deep[1].metrics.normalized_mse,
                shallow[1].metrics.normalized_mse
            ),
        ),
    )
}

fn sweep_monotonicity() -> Verdict {
    let entries = sweep(&trend_grid());
    let errs: Vec<_> = entries
        .iter()
        .filter_map(|e| e.report.as_ref().ok().map(|r| (e.point.tabs, e.point.j, e.point.s, r.max_err)))
        .collect();
    let mut violations = Vec::new();
    for &(t1, j1, s1, e1) in &errs {
        for &(t2, j2, s2, e2) in &errs {
            let s_step = t1 == t2 && j1 == j2 && s2 > s1;
            let tab_step = j1 == j2 && s1 == s2 && t2 > t1;
            if (s_step || tab_step) && e2 > e1 {
                violations.push(format!(
                    "({t1},a=1/{},s={s1}) {e1:.2e} -> ({t2},a=1/{},s={s2}) {e2:.2e}",
                    1 << j1,
                    1 << j2
                ));
            }
        }
    }
    let shown: Vec<_> = violations.iter().take(3).cloned().collect();
    verdict(
        violations.is_empty(),
        format!("{} grid points, {} monotonicity violations {}", errs.len(), violations.len(), shown.join("; ")),
    )
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("golden coefficients", golden_coefficients),
        ("low-accuracy preset error", || error_bound(Preset::PaperLowAccuracy, 2.5e-4)),
        ("high-accuracy preset error", || error_bound(Preset::PaperHighAccuracy, 1.5e-5)),
        ("memory accounting", memory),
        ("structural invariants", structural),
        ("boundary solver", boundary_solver),
        ("nn trend reproduction", nn_trend),
        ("sweep monotonicity", sweep_monotonicity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.ok);
        println!("{} criterion {} ({name}): {}", if v.ok { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
