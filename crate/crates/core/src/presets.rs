//! Named engine configurations.

use std::fmt;
use std::str::FromStr;

use crate::coeffgen::DctifParams;
use crate::error::{Error, Result};
use crate::fixedpoint::QFormat;
use crate::hwmodel::{build_engine, ApproxEngine};

/// Activation error budgets used in the network study, coarsest first.
pub const ERROR_BUDGETS: [f64; 5] = [0.04, 0.02, 0.01, 0.001, 0.0001];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub tabs: u32,
    pub j: u32,
    pub s: u32,
    pub eps_max: f64,
    pub in_fmt: (u32, u32),
    pub out_fmt: (u32, u32),
}

impl EngineConfig {
    pub fn build(&self) -> Result<ApproxEngine> {
        let params = DctifParams::new(self.tabs, self.j, self.s)?;
        let in_fmt = QFormat::new(self.in_fmt.0, self.in_fmt.1)?;
        let out_fmt = QFormat::new(self.out_fmt.0, self.out_fmt.1)?;
        build_engine(params, self.eps_max, in_fmt, out_fmt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// 2 tabs, s = 4, alpha = 1/4, eps = 2e-4.
    PaperLowAccuracy,
    /// 4 tabs, s = 6, alpha = 1/4, eps = 1e-5.
    PaperHighAccuracy,
    /// Engine whose worst error over real inputs stays within the budget.
    Budget(f64),
}

impl Preset {
    pub fn config(&self) -> Result<EngineConfig> {
        let cfg =
            |tabs, j, s, eps_max, in_frac| EngineConfig { tabs, j, s, eps_max, in_fmt: (3, in_frac), out_fmt: (0, 15) };
        Ok(match *self {
            Preset::PaperLowAccuracy => cfg(2, 2, 4, 2e-4, 6),
            Preset::PaperHighAccuracy => cfg(4, 2, 6, 1e-5, 6),
            // 2 tabs at s = 4, alpha = 1/4 is exactly linear interpolation.
            // A narrow pass region keeps the output monotone; the input
            // resolution then sets the error.
            Preset::Budget(b) => match budget_index(b)? {
                0 => cfg(2, 2, 4, 1e-5, 4),
                1 => cfg(2, 2, 4, 1e-5, 5),
                2 => cfg(2, 2, 4, 1e-5, 6),
                3 => cfg(2, 2, 4, 2e-5, 9),
                _ => cfg(2, 2, 4, 3e-5, 13),
            },
        })
    }

    pub fn build(&self) -> Result<ApproxEngine> {
        self.config()?.build()
    }

    pub fn name(&self) -> String {
        match self {
            Preset::PaperLowAccuracy => "paper-loacc".into(),
            Preset::PaperHighAccuracy => "paper-hiacc".into(),
            Preset::Budget(b) => format!("budget-{b}"),
        }
    }
}

fn budget_index(b: f64) -> Result<usize> {
    ERROR_BUDGETS
        .iter()
        .position(|&e| (e - b).abs() <= e * 1e-9)
        .ok_or_else(|| Error::param(format!("no preset for error budget {b}; choose one of {ERROR_BUDGETS:?}")))
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-loacc" | "lo-acc" | "loacc" => Ok(Preset::PaperLowAccuracy),
            "paper-hiacc" | "hi-acc" | "hiacc" => Ok(Preset::PaperHighAccuracy),
            other => {
                let b = other
                    .strip_prefix("budget-")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::param(format!("unknown preset '{other}'")))?;
                budget_index(b)?;
                Ok(Preset::Budget(b))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::real_input_max_error;

    #[test]
    fn budget_presets_meet_their_budget() {
        let mut prev = f64::INFINITY;
        for b in ERROR_BUDGETS {
            let err = real_input_max_error(&Preset::Budget(b).build().unwrap());
            assert!(err <= b, "budget {b}: {err}");
            // each budget is actually used, not trivially undershot
            assert!(err > b / 2.0, "budget {b}: {err}");
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn budget_presets_are_monotone() {
        for b in ERROR_BUDGETS {
            let e = Preset::Budget(b).build().unwrap();
            let out: Vec<i32> = e.input_codes().map(|x| e.evaluate(x).raw()).collect();
            assert!(out.windows(2).all(|w| w[1] >= w[0] - 1), "budget {b}");
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("hi-acc".parse::<Preset>().unwrap(), Preset::PaperHighAccuracy);
        assert_eq!("paper-loacc".parse::<Preset>().unwrap(), Preset::PaperLowAccuracy);
        assert_eq!("budget-0.01".parse::<Preset>().unwrap(), Preset::Budget(0.01));
        assert!("budget-0.3".parse::<Preset>().is_err());
        assert!("fast".parse::<Preset>().is_err());
        for p in [Preset::PaperLowAccuracy, Preset::Budget(0.001)] {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
    }

    #[test]
    fn reference_presets() {
        let e = Preset::PaperHighAccuracy.build().unwrap();
        assert_eq!(e.params().tab_count(), 4);
        assert_eq!(e.params().s(), 6);
        assert_eq!(e.in_fmt().to_string(), "Q3.6");
        assert_eq!(e.out_fmt().to_string(), "Q0.15");
    }
}
