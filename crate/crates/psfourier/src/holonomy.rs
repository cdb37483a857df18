//! `N^- M A N^+` factorization of `n^+(v) n^-(w) g_tau m` and the closed
//! forms for its `A` and `N^+` parts.
//!
//! Writing `P = n^-(y') m' g_t n^+(phi)`, the first row of `P` is
//! `e^t (1, phi, |phi|^2 / 2)`, which gives `t` and `phi`. Stripping the
//! `A N^+` part leaves `n^-(y') m'`, whose first column is
//! `(1, y', |y'|^2 / 2)`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::hyperbolic::{check_rotation, gaussian, random_rotation, GroupElement, ModelParams};
use crate::par;

/// Inputs larger than this (in norm) leave the decomposition neighbourhood.
pub const REGIME: f64 = 0.5;
/// Tolerance of the round-trip checks.
pub const ROUND_TRIP_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

fn check_regime(name: &str, x: &[f64]) -> Result<()> {
    let n = norm_sq(x).sqrt();
    if n > REGIME + 1e-12 {
        return Err(Error::Validation(format!("|{name}| = {n:.6} exceeds {REGIME}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolonomyInput {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub m: DMatrix<f64>,
    pub tau: f64,
}

impl HolonomyInput {
    pub fn new(v: Vec<f64>, w: Vec<f64>, m: DMatrix<f64>, tau: f64) -> Result<Self> {
        let h = HolonomyInput { v, w, m, tau };
        h.check()?;
        Ok(h)
    }

    pub fn d(&self) -> usize {
        self.v.len()
    }

    pub fn check(&self) -> Result<()> {
        let d = self.v.len();
        if d == 0 {
            return Err(Error::Validation("v must be nonempty".into()));
        }
        check_len(d, self.w.len())?;
        check_rotation(&self.m, d, 1e-9)?;
        check_regime("v", &self.v)?;
        check_regime("w", &self.w)?;
        if !self.tau.is_finite() {
            return Err(Error::Validation("tau must be finite".into()));
        }
        Ok(())
    }

    /// Uniform in the regime balls, Haar rotation, `tau` uniform in `[-2, 2]`.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let v = random_in_ball(d, REGIME, rng);
        let w = random_in_ball(d, REGIME, rng);
        let m = random_rotation(d, rng);
        let tau = rng.random_range(-2.0..2.0);
        HolonomyInput { v, w, m, tau }
    }
}

fn random_in_ball<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
    let n = norm_sq(&g).sqrt();
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    g.iter().map(|x| r * x / n).collect()
}

/// `1 + <v, w> + |v|^2 |w|^2 / 4`, the `(0, 0)` entry of `n^+(v) n^-(w)`.
pub fn lambda_fn(v: &[f64], w: &[f64]) -> f64 {
    1.0 + dot(v, w) + 0.25 * norm_sq(v) * norm_sq(w)
}

/// First-order part `1 + <v, w>`.
pub fn lambda_linear(v: &[f64], w: &[f64]) -> f64 {
    1.0 + dot(v, w)
}

fn lambda_checked(h: &HolonomyInput) -> Result<f64> {
    h.check()?;
    let l = lambda_fn(&h.v, &h.w);
    if l <= crate::hyperbolic::DEFAULT_TOL {
        return Err(Error::Decomposition(format!("lambda = {l:.3e} is not positive")));
    }
    Ok(l)
}

/// `m^{-1} (v + |v|^2 w / 2) / (e^tau lambda)`.
pub fn phi_closed_form(h: &HolonomyInput) -> Result<Vec<f64>> {
    let l = lambda_checked(h)?;
    let h2 = 0.5 * norm_sq(&h.v);
    let a: Vec<f64> = h.v.iter().zip(&h.w).map(|(v, w)| v + h2 * w).collect();
    let s = 1.0 / (h.tau.exp() * l);
    let d = h.d();
    Ok((0..d)
        .map(|i| s * (0..d).map(|k| h.m[(k, i)] * a[k]).sum::<f64>())
        .collect())
}

/// `A`-part of the factorization, `tau + log lambda`.
pub fn tau_closed_form(h: &HolonomyInput) -> Result<f64> {
    Ok(h.tau + lambda_checked(h)?.ln())
}

/// The printed sign `tau - log lambda`; used to check that the property
/// suite notices a wrong formula.
pub fn tau_flipped(h: &HolonomyInput) -> Result<f64> {
    Ok(h.tau - lambda_checked(h)?.ln())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorizationResult {
    pub y_out: Vec<f64>,
    pub m_out: DMatrix<f64>,
    pub t_out: f64,
    pub phi: Vec<f64>,
    pub residual: f64,
}

/// Factors a group element as `n^-(y) m g_t n^+(phi)`.
pub fn decompose(params: &ModelParams, p: &GroupElement) -> Result<FactorizationResult> {
    let d = params.d;
    if p.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: p.dim(),
        });
    }
    let et = p.entry(0, 0);
    if !(et > params.tol) {
        return Err(Error::Decomposition(format!(
            "leading entry {et:.3e} outside the N-MAN+ cell"
        )));
    }
    let t_out = et.ln();
    let phi: Vec<f64> = (1..=d).map(|i| p.entry(0, i) / et).collect();
    let neg_phi: Vec<f64> = phi.iter().map(|x| -x).collect();
    let l = p
        .compose(&params.unipotent_plus(&neg_phi)?)
        .compose(&params.geodesic_flow(-t_out));
    let y_out: Vec<f64> = (1..=d).map(|i| l.entry(i, 0)).collect();
    let neg_y: Vec<f64> = y_out.iter().map(|x| -x).collect();
    let mid = params.unipotent_minus(&neg_y)?.compose(&l);
    let m_out = DMatrix::from_fn(d, d, |i, j| mid.entry(i + 1, j + 1));
    let rebuilt = params
        .unipotent_minus(&y_out)?
        .compose(&params.rotation_embed(&m_out)?)
        .compose(&params.geodesic_flow(t_out))
        .compose(&params.unipotent_plus(&phi)?);
    let residual = rebuilt.max_abs_diff(p);
    Ok(FactorizationResult {
        y_out,
        m_out,
        t_out,
        phi,
        residual,
    })
}

/// Factors `n^+(x) n^-(y) g_tau m` into `N^- M A N^+`.
pub fn factorize_product(x: &[f64], y: &[f64], tau: f64, m: &DMatrix<f64>) -> Result<FactorizationResult> {
    check_len(x.len(), y.len())?;
    check_regime("x", x)?;
    check_regime("y", y)?;
    let params = ModelParams::with_dim(x.len())?;
    let p = params
        .unipotent_plus(x)?
        .compose(&params.unipotent_minus(y)?)
        .compose(&params.geodesic_flow(tau))
        .compose(&params.rotation_embed(m)?);
    decompose(&params, &p)
}

/// `|chi - alpha|` where `chi = exp(i <e^{-t} xi, u>)` uses the exact
/// `N^+` coordinate `u` of `n^+(v) (p^-)^{-1}`, `p^- = n^-(w) m g_tau`, and
/// `alpha = exp(i lambda_linear(v, w) <e^{-(t - tau)} xi, m v>)` is its
/// linearization.
pub fn linearization_error(h: &HolonomyInput, xi: &[f64], t: f64) -> Result<f64> {
    h.check()?;
    check_len(h.d(), xi.len())?;
    if !(t >= 0.0) {
        return Err(Error::Validation(format!("t must be nonnegative, got {t}")));
    }
    let params = ModelParams::with_dim(h.d())?;
    let p_minus = params
        .unipotent_minus(&h.w)?
        .compose(&params.rotation_embed(&h.m)?)
        .compose(&params.geodesic_flow(h.tau));
    let g = params.unipotent_plus(&h.v)?.compose(&p_minus.inverse());
    let u = decompose(&params, &g)?.phi;
    let exact = (-t).exp() * dot(xi, &u);
    let mv = &h.m * DMatrix::from_column_slice(h.d(), 1, &h.v);
    let lin = lambda_linear(&h.v, &h.w) * (h.tau - t).exp() * dot(xi, mv.as_slice());
    // |e^{ia} - e^{ib}| without cancellation
    Ok(2.0 * (0.5 * (exact - lin)).sin().abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub phi_err: f64,
    pub tau_err: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct PropertyReport {
    pub d: usize,
    pub trials: usize,
    pub seed: u64,
    pub passed: usize,
    pub max_phi_err: f64,
    pub max_tau_err: f64,
    pub max_residual: f64,
    pub records: Vec<TrialRecord>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }
}

/// Round-trip of the closed forms against the factorization on seeded random
/// regime inputs. `inject_sign_bug` swaps in the flipped `tau` formula.
pub fn property_suite(d: usize, trials: usize, seed: u64, inject_sign_bug: bool) -> Result<PropertyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<HolonomyInput> = (0..trials).map(|_| HolonomyInput::random(d, &mut rng)).collect();
    let records: Vec<Result<TrialRecord>> = par::map_range(trials, |i| {
        let h = &inputs[i];
        let f = factorize_product(&h.v, &h.w, h.tau, &h.m)?;
        let phi = phi_closed_form(h)?;
        let tau = if inject_sign_bug {
            tau_flipped(h)?
        } else {
            tau_closed_form(h)?
        };
        let phi_err = phi.iter().zip(&f.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(TrialRecord {
            index: i,
            phi_err,
            tau_err: (tau - f.t_out).abs(),
            residual: f.residual,
        })
    });
    let records: Vec<TrialRecord> = records.into_iter().collect::<Result<_>>()?;
    let ok = |r: &TrialRecord| r.phi_err < ROUND_TRIP_TOL && r.tau_err < ROUND_TRIP_TOL && r.residual < ROUND_TRIP_TOL;
    Ok(PropertyReport {
        d,
        trials,
        seed,
        passed: records.iter().filter(|r| ok(r)).count(),
        max_phi_err: records.iter().map(|r| r.phi_err).fold(0.0, f64::max),
        max_tau_err: records.iter().map(|r| r.tau_err).fold(0.0, f64::max),
        max_residual: records.iter().map(|r| r.residual).fold(0.0, f64::max),
        records,
    })
}

#[derive(Clone, Debug)]
pub struct LinearizationReport {
    pub t1: f64,
    pub t2: f64,
    /// `error(t2) / error(t1)` per trial.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub bound: f64,
}

impl LinearizationReport {
    pub fn passed(&self) -> bool {
        self.max_ratio <= self.bound
    }
}

/// Decay of the linearization error between `t1` and `t2` on random inputs
/// and random frequencies `|xi|` in `[1, 10]`; the bound is
/// `3 e^{-(t2 - t1)}`.
pub fn linearization_suite(d: usize, trials: usize, seed: u64, t1: f64, t2: f64) -> Result<LinearizationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(HolonomyInput, Vec<f64>)> = (0..trials)
        .map(|_| {
            let h = HolonomyInput::random(d, &mut rng);
            let dir: Vec<f64> = (0..d).map(|_| gaussian(&mut rng)).collect();
            let n = norm_sq(&dir).sqrt();
            let r = rng.random_range(1.0..10.0);
            (h, dir.iter().map(|x| r * x / n).collect())
        })
        .collect();
    let ratios: Vec<Result<f64>> = par::map_slice(&cases, |(h, xi)| {
        let a = linearization_error(h, xi, t1)?;
        let b = linearization_error(h, xi, t2)?;
        Ok(if a > 0.0 { b / a } else { 0.0 })
    });
    let ratios: Vec<f64> = ratios.into_iter().collect::<Result<_>>()?;
    Ok(LinearizationReport {
        t1,
        t2,
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        ratios,
        bound: 3.0 * (t1 - t2).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_lambda() {
        assert_eq!(lambda_fn(&[0.5, 0.0], &[0.0, 0.5]), 1.015625);
        let h = HolonomyInput::new(vec![0.5, 0.0], vec![0.0, 0.5], DMatrix::identity(2, 2), 0.0).unwrap();
        assert!((tau_closed_form(&h).unwrap() - 1.015625f64.ln()).abs() < 1e-15);
        assert!((tau_flipped(&h).unwrap() + 0.0155042).abs() < 1e-7);
    }
}
