//! Stepsize sequences `h_n = h · h~_n` for `n = 1, 2, …` and the series
//! conditions that decide whether linear integration errors wash out of the
//! average.
//!
//! Indexing is 1-based throughout: `h_1` is the first step taken.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// `h~_n = 1`.
    Constant,
    /// `h~_n = n^{-s}` with `s ∈ (0, 1]`.
    Power(f64),
    /// User-supplied `h~_1, h~_2, …`, each in `(0, 1]`.
    Explicit(Arc<[f64]>),
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Constant => f.write_str("constant"),
            Rule::Power(s) => write!(f, "power:{s}"),
            Rule::Explicit(v) => write!(f, "explicit[{} values]", v.len()),
        }
    }
}

impl Rule {
    /// Parses `constant`, `power:<s>` or `explicit:<path>`. Explicit rules
    /// are loaded from a file holding one value per line.
    pub fn parse(spec: &str) -> Result<Rule> {
        let spec = spec.trim();
        if spec == "constant" {
            return Ok(Rule::Constant);
        }
        if let Some(s) = spec.strip_prefix("power:") {
            let s: f64 = s
                .trim()
                .parse()
                .map_err(|_| invalid(format!("bad power exponent in '{spec}'")))?;
            return Ok(Rule::Power(s));
        }
        if let Some(path) = spec.strip_prefix("explicit:") {
            return Rule::load_explicit(Path::new(path.trim()));
        }
        Err(invalid(format!(
            "unknown schedule rule '{spec}' (expected constant | power:<s> | explicit:<path>)"
        )))
    }

    pub fn load_explicit(path: &Path) -> Result<Rule> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read stepsize file {}: {e}", path.display())))?;
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                invalid(format!(
                    "{}:{}: not a number: '{line}'",
                    path.display(),
                    lineno + 1
                ))
            })?;
            values.push(v);
        }
        Ok(Rule::Explicit(values.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepsizeSchedule {
    h: f64,
    rule: Rule,
}

impl StepsizeSchedule {
    pub fn new(h: f64, rule: Rule) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(invalid(format!(
                "stepsize scaling h must lie in (0, 1], got {h}"
            )));
        }
        match &rule {
            Rule::Constant => {}
            Rule::Power(s) => {
                if !(*s > 0.0 && *s <= 1.0) {
                    return Err(invalid(format!(
                        "power exponent s must lie in (0, 1], got {s}"
                    )));
                }
            }
            Rule::Explicit(values) => {
                if values.is_empty() {
                    return Err(invalid("explicit stepsize rule is empty"));
                }
                if let Some((i, v)) = values
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !(**v > 0.0 && **v <= 1.0))
                {
                    return Err(invalid(format!(
                        "explicit stepsize rule entry {} is {v}; entries must lie in (0, 1]",
                        i + 1
                    )));
                }
            }
        }
        Ok(StepsizeSchedule { h, rule })
    }

    pub fn constant(h: f64) -> Result<Self> {
        Self::new(h, Rule::Constant)
    }

    pub fn power(h: f64, s: f64) -> Result<Self> {
        Self::new(h, Rule::Power(s))
    }

    pub fn explicit(h: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(h, Rule::Explicit(values.into()))
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn description(&self) -> String {
        format!("{} h={}", self.rule, self.h)
    }

    /// Number of steps the schedule defines; `None` if unbounded.
    pub fn max_steps(&self) -> Option<usize> {
        match &self.rule {
            Rule::Explicit(v) => Some(v.len()),
            _ => None,
        }
    }

    /// The normalised rule value `h~_n`.
    pub fn normalized(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(invalid("step indices start at 1"));
        }
        match &self.rule {
            Rule::Constant => Ok(1.0),
            Rule::Power(s) => Ok((n as f64).powf(-s)),
            Rule::Explicit(v) => v.get(n - 1).copied().ok_or_else(|| {
                invalid(format!(
                    "explicit rule defines {} steps; step {n} requested",
                    v.len()
                ))
            }),
        }
    }

    /// `h_n = h · h~_n`.
    pub fn stepsize(&self, n: usize) -> Result<f64> {
        match &self.rule {
            // Avoid the multiplication so constant schedules hit `h` exactly.
            Rule::Constant if n > 0 => Ok(self.h),
            _ => Ok(self.h * self.normalized(n)?),
        }
    }

    /// `h_m^n = h_{m+1} + … + h_n`.
    pub fn cumulative(&self, m: usize, n: usize) -> Result<f64> {
        if m > n {
            return Err(invalid(format!(
                "cumulative sum needs m <= n, got m={m}, n={n}"
            )));
        }
        let mut total = 0.0;
        for i in m + 1..=n {
            total += self.stepsize(i)?;
        }
        Ok(total)
    }

    /// `[h_1, …, h_N]`.
    pub fn sequence(&self, steps: usize) -> Result<Vec<f64>> {
        (1..=steps).map(|n| self.stepsize(n)).collect()
    }

    pub fn check_conditions(&self, p: f64) -> Result<ConditionReport> {
        check_conditions(self, p)
    }
}

/// Verdicts on the series conditions for a schedule and solver order `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionReport {
    /// `Σ h~_n = ∞`.
    pub sum_diverges: bool,
    /// `Σ h~_n^{p+1} < ∞`.
    pub p_series_converges: bool,
    /// `Σ_{n≤N} h~_n² / h~_0^N → 0`, the sharper condition for Euler on a
    /// diagonal linear system.
    pub weak_condition_holds: bool,
    /// Verdicts follow from the closed form of the rule.
    pub analytic: bool,
    /// Verdicts are trends over finitely many terms and may be wrong.
    pub inconclusive: bool,
}

impl ConditionReport {
    /// Both hypotheses of the convergence theorem hold.
    pub fn theorem_conditions_hold(&self) -> bool {
        self.sum_diverges && self.p_series_converges
    }
}

/// Relative growth of a partial sum over the second half of the data below
/// which it is treated as having settled.
const SETTLED_GROWTH: f64 = 1e-2;

pub fn check_conditions(sched: &StepsizeSchedule, p: f64) -> Result<ConditionReport> {
    if !(p > 0.0) {
        return Err(invalid(format!(
            "consistency order must be positive, got {p}"
        )));
    }
    let report = match sched.rule() {
        Rule::Constant => ConditionReport {
            sum_diverges: true,
            p_series_converges: false,
            weak_condition_holds: false,
            analytic: true,
            inconclusive: false,
        },
        Rule::Power(s) => ConditionReport {
            sum_diverges: *s <= 1.0,
            p_series_converges: s * (p + 1.0) > 1.0,
            // Σn^{-2s} / Σn^{-s} decays like N^{-s}, log N/√N, N^{s-1} or
            // 1/log N across s ∈ (0, 1].
            weak_condition_holds: *s > 0.0 && *s <= 1.0,
            analytic: true,
            inconclusive: false,
        },
        Rule::Explicit(values) => {
            let n = values.len();
            let half = (n / 2).max(1);
            let partial = |upto: usize, f: &dyn Fn(f64) -> f64| -> f64 {
                values[..upto].iter().map(|&v| f(v)).sum()
            };
            let s1_half = partial(half, &|v| v);
            let s1_full = partial(n, &|v| v);
            let sp_half = partial(half, &|v| v.powf(p + 1.0));
            let sp_full = partial(n, &|v| v.powf(p + 1.0));
            let s2_half = partial(half, &|v| v * v);
            let s2_full = partial(n, &|v| v * v);
            ConditionReport {
                sum_diverges: s1_full - s1_half > SETTLED_GROWTH * s1_half,
                p_series_converges: sp_full - sp_half <= SETTLED_GROWTH * sp_half,
                weak_condition_holds: n >= 2 && s2_full / s1_full < s2_half / s1_half,
                analytic: false,
                inconclusive: true,
            }
        }
    };
    Ok(report)
}
