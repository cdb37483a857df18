//! Critical exponent from truncated Poincaré series.
//!
//! Shells `a_n(s) = sum_{|w| = n} exp(-s d(o, w o))` are summed in
//! lexicographic word order with a pairwise tree, after factoring out the
//! shell's smallest distance so that large `s` does not underflow.

use crate::error::{Error, Result};
use crate::hyperbolic::HyperbolicPoint;
use crate::schottky::SchottkyGroup;
use crate::sum::pairwise;

/// Orbit distances `d(o, w o)` grouped by word length.
#[derive(Clone, Debug)]
pub struct ShellDistances {
    levels: Vec<Vec<f64>>,
    mins: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PoincareTruncation {
    pub s: f64,
    /// `(n, a_n(s))`; may underflow to zero for huge `s`, see `log_sums`.
    pub shell_sums: Vec<(usize, f64)>,
    pub log_sums: Vec<f64>,
    /// Set when the shells are still growing at the last levels (`s` below
    /// the critical exponent) or a shell overflowed.
    pub diverging: bool,
}

#[derive(Clone, Debug)]
pub struct DeltaEstimate {
    pub delta_hat: f64,
    pub per_level: Vec<(usize, f64)>,
    /// `max |delta_n - delta_m|` over the last three levels.
    pub spread: f64,
}

impl ShellDistances {
    pub fn compute(group: &SchottkyGroup, basepoint: &HyperbolicPoint, n_max: usize) -> Result<Self> {
        if !group.is_validated() {
            return Err(Error::NotValidated);
        }
        let levels = group.orbit_map(n_max, |_, g| Some(g.displacement(basepoint)));
        let mins = levels
            .iter()
            .map(|l| l.iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        Ok(ShellDistances { levels, mins })
    }

    pub fn n_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &[f64] {
        &self.levels[n]
    }

    /// `log a_n(s)`.
    pub fn log_shell(&self, n: usize, s: f64) -> f64 {
        let m = self.mins[n];
        let terms: Vec<f64> = self.levels[n].iter().map(|d| (-s * (d - m)).exp()).collect();
        -s * m + pairwise(&terms).ln()
    }

    pub fn truncation(&self, s: f64) -> PoincareTruncation {
        let log_sums: Vec<f64> = (0..self.levels.len()).map(|n| self.log_shell(n, s)).collect();
        let shell_sums = log_sums.iter().enumerate().map(|(n, l)| (n, l.exp())).collect();
        let k = log_sums.len();
        let overflow = log_sums.iter().any(|l| !l.is_finite() || *l > 700.0);
        let growing = k >= 4 && (k - 3..k).all(|i| log_sums[i] > log_sums[i - 1]);
        PoincareTruncation {
            s,
            shell_sums,
            log_sums,
            diverging: overflow || growing,
        }
    }

    /// Root in `s` of `log a_n(s) - log a_{n-1}(s)`.
    pub fn level_root(&self, n: usize, s_max: f64, tol: f64) -> Result<f64> {
        let f = |s: f64| self.log_shell(n, s) - self.log_shell(n - 1, s);
        let f0 = f(0.0);
        if !(f0 > 1e-12) {
            return Err(Error::SeriesDegenerate(format!(
                "shell {n} does not outgrow shell {} at s = 0 (elementary group?)",
                n - 1
            )));
        }
        let mut hi = s_max;
        let mut tries = 0;
        while f(hi) > 0.0 {
            hi *= 2.0;
            tries += 1;
            if tries > 8 {
                return Err(Error::SeriesDegenerate(format!("no sign change for shell {n}")));
            }
        }
        let mut lo = 0.0;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

pub fn shell_sums(group: &SchottkyGroup, s: f64, n_max: usize) -> Result<PoincareTruncation> {
    shell_sums_at(group, s, n_max, &group.params().basepoint())
}

pub fn shell_sums_at(
    group: &SchottkyGroup,
    s: f64,
    n_max: usize,
    basepoint: &HyperbolicPoint,
) -> Result<PoincareTruncation> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Validation(format!("exponent s must be nonnegative, got {s}")));
    }
    Ok(ShellDistances::compute(group, basepoint, n_max)?.truncation(s))
}

#[derive(Clone, Debug)]
pub struct DeltaSettings {
    pub n_max: usize,
    pub tol: f64,
    pub basepoint: Option<HyperbolicPoint>,
}

impl DeltaSettings {
    pub fn new(n_max: usize) -> Self {
        DeltaSettings {
            n_max,
            tol: 1e-6,
            basepoint: None,
        }
    }
}

pub fn estimate_delta(group: &SchottkyGroup, n_max: usize) -> Result<DeltaEstimate> {
    estimate_delta_with(group, &DeltaSettings::new(n_max))
}

pub fn estimate_delta_with(group: &SchottkyGroup, settings: &DeltaSettings) -> Result<DeltaEstimate> {
    if settings.n_max < 6 {
        return Err(Error::Validation(format!(
            "n_max must be at least 6, got {}",
            settings.n_max
        )));
    }
    let o = settings.basepoint.clone().unwrap_or_else(|| group.params().basepoint());
    let shells = ShellDistances::compute(group, &o, settings.n_max)?;
    estimate_from_shells(&shells, group.params().d as f64, settings.tol)
}

pub fn estimate_from_shells(shells: &ShellDistances, d: f64, tol: f64) -> Result<DeltaEstimate> {
    let n_max = shells.n_max();
    let mut per_level = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        per_level.push((n, shells.level_root(n, d, tol)?));
    }
    let delta_hat = per_level.last().expect("n_max >= 1").1;
    if !(delta_hat > 0.0 && delta_hat < d) {
        return Err(Error::SeriesDegenerate(format!(
            "estimate {delta_hat} outside (0, {d})"
        )));
    }
    let tail: Vec<f64> = per_level.iter().rev().take(3).map(|p| p.1).collect();
    let spread = tail.iter().fold(f64::NEG_INFINITY, |m: f64, v| m.max(*v))
        - tail.iter().fold(f64::INFINITY, |m: f64, v| m.min(*v));
    Ok(DeltaEstimate {
        delta_hat,
        per_level,
        spread,
    })
}

impl DeltaEstimate {
    pub fn level(&self, n: usize) -> Option<f64> {
        self.per_level.iter().find(|p| p.0 == n).map(|p| p.1)
    }
}
