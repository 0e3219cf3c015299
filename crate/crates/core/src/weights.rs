//! Averaging weights `w_{n,N}` for the per-step expansion rates
//! `log(R_n)_ii / h_n`.
//!
//! Adaptive weights `h_n / h_0^N` reproduce the classical time average;
//! uniform weights `1 / N` put every step on equal footing.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::linalg::{compensated_sum, CompensatedSum};
use crate::schedules::{Rule, StepsizeSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightScheme {
    Adaptive,
    Uniform,
}

impl WeightScheme {
    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::Adaptive => "adaptive",
            WeightScheme::Uniform => "uniform",
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "adaptive" => Ok(WeightScheme::Adaptive),
            "uniform" => Ok(WeightScheme::Uniform),
            other => Err(invalid(format!(
                "unknown weight scheme '{other}' (expected adaptive|uniform)"
            ))),
        }
    }
}

/// `w_{n,N}` for `1 ≤ n ≤ N`.
pub fn weight(
    scheme: WeightScheme,
    n: usize,
    horizon: usize,
    sched: &StepsizeSchedule,
) -> Result<f64> {
    if n == 0 || n > horizon {
        return Err(invalid(format!("weight index n={n} outside 1..={horizon}")));
    }
    match scheme {
        WeightScheme::Uniform => Ok(1.0 / horizon as f64),
        WeightScheme::Adaptive => Ok(sched.stepsize(n)? / sched.cumulative(0, horizon)?),
    }
}

/// All weights `w_{1,N}, …, w_{N,N}` for the realised steps `hs = [h_1, …, h_N]`.
pub fn weights_for(scheme: WeightScheme, hs: &[f64]) -> Vec<f64> {
    let n = hs.len();
    match scheme {
        WeightScheme::Uniform => vec![1.0 / n as f64; n],
        WeightScheme::Adaptive => {
            let total = compensated_sum(hs.iter().copied());
            hs.iter().map(|h| h / total).collect()
        }
    }
}

/// `Σ_n w_{n,N} · values[n]` over the first `horizon` values, where `values`
/// holds the per-step rates `log(R_n)_ii / h_n`.
pub fn weighted_average(
    values: &[f64],
    scheme: WeightScheme,
    sched: &StepsizeSchedule,
    horizon: usize,
) -> Result<f64> {
    if horizon == 0 {
        return Err(invalid("weighted average needs at least one step"));
    }
    if values.len() < horizon {
        return Err(invalid(format!(
            "weighted average over {horizon} steps given only {} values",
            values.len()
        )));
    }
    let hs = sched.sequence(horizon)?;
    Ok(weighted_sum(&values[..horizon], &weights_for(scheme, &hs)))
}

/// `Σ_n weights[n] · values[n]` for arbitrary user weights.
pub fn weighted_sum(values: &[f64], weights: &[f64]) -> f64 {
    compensated_sum(values.iter().zip(weights).map(|(v, w)| v * w))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConditionReport {
    /// (i) `w_{n,N} → 0` as `N → ∞` for every fixed `n`.
    pub vanishing_for_fixed_n: bool,
    /// (ii) `(w_{n,N} / h_n)_n` is monotone for every `N ≤ N_max`.
    pub monotone: bool,
    /// (iii) `max_{N ≤ N_max} w_{N,N} h_0^N / h_N`.
    pub max_ratio: f64,
    /// (iii) verdict on whether the supremum over all `N` is finite.
    pub ratio_bounded: bool,
    pub analytic: bool,
}

impl WeightConditionReport {
    pub fn all_hold(&self) -> bool {
        self.vanishing_for_fixed_n && self.monotone && self.ratio_bounded
    }
}

/// Checks the three weight conditions under which convergence of the plain
/// average carries over to the weighted one.
pub fn check_weight_conditions(
    scheme: WeightScheme,
    sched: &StepsizeSchedule,
    n_max: usize,
) -> Result<WeightConditionReport> {
    if n_max < 2 {
        return Err(invalid("weight condition check needs N_max >= 2"));
    }
    let hs = sched.sequence(n_max)?;

    // (iii) w_{N,N} h_0^N / h_N for N = 1..N_max, and its trend.
    let mut elapsed = 0.0;
    let mut ratios = Vec::with_capacity(n_max);
    for (i, &h) in hs.iter().enumerate() {
        elapsed += h;
        let ratio = match scheme {
            WeightScheme::Adaptive => 1.0,
            WeightScheme::Uniform => elapsed / ((i + 1) as f64 * h),
        };
        ratios.push(ratio);
    }
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // (ii) Adaptive: w/h = 1/h_0^N is constant in n. Uniform: w/h = 1/(N h_n)
    // is monotone in n for every N iff h_n is monotone on the whole range.
    let monotone = match scheme {
        WeightScheme::Adaptive => true,
        WeightScheme::Uniform => {
            hs.windows(2).all(|w| w[1] <= w[0]) || hs.windows(2).all(|w| w[1] >= w[0])
        }
    };

    let report = match (scheme, sched.rule()) {
        (WeightScheme::Adaptive, Rule::Constant | Rule::Power(_)) => WeightConditionReport {
            vanishing_for_fixed_n: true,
            monotone,
            max_ratio,
            ratio_bounded: true,
            analytic: true,
        },
        (WeightScheme::Uniform, Rule::Constant) => WeightConditionReport {
            vanishing_for_fixed_n: true,
            monotone,
            max_ratio,
            ratio_bounded: true,
            analytic: true,
        },
        // Σ_{n≤N} n^{-s} / N^{1-s} → 1/(1-s) for s < 1 and grows like log N at s = 1.
        (WeightScheme::Uniform, Rule::Power(s)) => WeightConditionReport {
            vanishing_for_fixed_n: true,
            monotone,
            max_ratio,
            ratio_bounded: *s < 1.0,
            analytic: true,
        },
        (_, Rule::Explicit(_)) => {
            let half = n_max / 2;
            let vanishing = match scheme {
                WeightScheme::Uniform => true,
                // h_1 / h_0^N shrinks iff the elapsed time keeps growing.
                WeightScheme::Adaptive => {
                    let t_half: f64 = hs[..half].iter().sum();
                    elapsed > (1.0 + 1e-2) * t_half
                }
            };
            WeightConditionReport {
                vanishing_for_fixed_n: vanishing,
                monotone,
                max_ratio,
                ratio_bounded: ratios[n_max - 1] <= (1.0 + 1e-2) * ratios[half - 1],
                analytic: false,
            }
        }
    };
    Ok(report)
}

/// `|w_{N,N} h_0^N / h_N + Σ_{n<N} (w_{n,N}/h_n − w_{n+1,N}/h_{n+1}) h_0^n − 1|`
/// for arbitrary weights and steps of equal length.
pub fn identity_residual(weights: &[f64], hs: &[f64]) -> Result<f64> {
    if weights.is_empty() || weights.len() != hs.len() {
        return Err(invalid(
            "weights and stepsizes must be nonempty and of equal length",
        ));
    }
    let n = hs.len();
    let mut elapsed = CompensatedSum::default();
    let mut lhs = CompensatedSum::default();
    for i in 0..n - 1 {
        elapsed.add(hs[i]);
        lhs.add((weights[i] / hs[i] - weights[i + 1] / hs[i + 1]) * elapsed.value());
    }
    elapsed.add(hs[n - 1]);
    lhs.add(weights[n - 1] * elapsed.value() / hs[n - 1]);
    Ok((lhs.value() - 1.0).abs())
}

pub fn weight_identity_residual(
    scheme: WeightScheme,
    sched: &StepsizeSchedule,
    horizon: usize,
) -> Result<f64> {
    if horizon == 0 {
        return Err(invalid("weight identity needs N >= 1"));
    }
    let hs = sched.sequence(horizon)?;
    identity_residual(&weights_for(scheme, &hs), &hs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        let c = StepsizeSchedule::constant(0.01).unwrap();
        assert_eq!(weight(WeightScheme::Uniform, 3, 10, &c).unwrap(), 0.1);
        assert!((weight(WeightScheme::Adaptive, 3, 10, &c).unwrap() - 0.1).abs() < 1e-15);
        let p = StepsizeSchedule::power(1.0, 0.5).unwrap();
        let w = weight(WeightScheme::Adaptive, 1, 4, &p).unwrap();
        assert!((w - 1.0 / 2.7844571).abs() < 1e-7);
        assert!(weight(WeightScheme::Uniform, 0, 4, &p).is_err());
        assert!(weight(WeightScheme::Uniform, 5, 4, &p).is_err());
    }

    #[test]
    fn weights_are_normalised() {
        let scheds = [
            StepsizeSchedule::constant(0.05).unwrap(),
            StepsizeSchedule::power(0.1, 0.5).unwrap(),
            StepsizeSchedule::power(0.1, 1.0).unwrap(),
        ];
        for sched in &scheds {
            for n in [1usize, 10, 1_000, 100_000] {
                let hs = sched.sequence(n).unwrap();
                for scheme in [WeightScheme::Adaptive, WeightScheme::Uniform] {
                    let w = weights_for(scheme, &hs);
                    assert!(w.iter().all(|x| *x >= 0.0));
                    assert!((compensated_sum(w.iter().copied()) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_steps_make_schemes_coincide() {
        let hs = vec![0.02; 50];
        let a = weights_for(WeightScheme::Adaptive, &hs);
        let u = weights_for(WeightScheme::Uniform, &hs);
        for (x, y) in a.iter().zip(&u) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_values_average_to_themselves() {
        let p = StepsizeSchedule::power(0.1, 0.5).unwrap();
        let vals = vec![-1.75; 300];
        for scheme in [WeightScheme::Adaptive, WeightScheme::Uniform] {
            let avg = weighted_average(&vals, scheme, &p, 300).unwrap();
            assert!((avg + 1.75).abs() < 1e-13);
        }
        assert!(weighted_average(&vals, WeightScheme::Uniform, &p, 301).is_err());
    }

    #[test]
    fn weight_condition_examples() {
        let p = StepsizeSchedule::power(0.1, 0.5).unwrap();
        let a = check_weight_conditions(WeightScheme::Adaptive, &p, 1000).unwrap();
        assert!(a.all_hold());
        assert_eq!(a.max_ratio, 1.0);

        let u = check_weight_conditions(WeightScheme::Uniform, &p, 1_000_000).unwrap();
        assert!(u.all_hold() && u.analytic);
        assert!((1.8..=2.1).contains(&u.max_ratio), "{}", u.max_ratio);

        let c = StepsizeSchedule::constant(0.01).unwrap();
        let uc = check_weight_conditions(WeightScheme::Uniform, &c, 1000).unwrap();
        assert!(uc.all_hold());
        assert!((uc.max_ratio - 1.0).abs() < 1e-12);

        let harmonic = StepsizeSchedule::power(0.1, 1.0).unwrap();
        let uh = check_weight_conditions(WeightScheme::Uniform, &harmonic, 1000).unwrap();
        assert!(!uh.ratio_bounded);
        assert!(check_weight_conditions(WeightScheme::Uniform, &harmonic, 1).is_err());
    }

    #[test]
    fn identity_residual_examples() {
        let p = StepsizeSchedule::power(0.1, 0.5).unwrap();
        assert!(weight_identity_residual(WeightScheme::Adaptive, &p, 100).unwrap() < 1e-12);
        assert!(weight_identity_residual(WeightScheme::Uniform, &p, 1000).unwrap() < 1e-12);
        assert!(identity_residual(&[0.5], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!(
            "uniform".parse::<WeightScheme>().unwrap(),
            WeightScheme::Uniform
        );
        assert_eq!(
            "adaptive".parse::<WeightScheme>().unwrap(),
            WeightScheme::Adaptive
        );
        assert!("harmonic".parse::<WeightScheme>().is_err());
    }
}
