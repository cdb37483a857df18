//! Fourier transforms of atomic measures and decay statistics.
//!
//! `mu_hat(xi) = (1/mass) sum_j w_j exp(2 pi i <xi, x_j>)`, summed in atom order
//! with Neumaier compensation. Along arithmetic lines of frequencies the phase
//! factors are advanced by a complex rotation and reseeded every
//! [`RESEED`] steps.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{least_squares_slope, resolution, AtomicMeasure};
use crate::par;
use crate::sum::NeumaierSum;

const TAU: f64 = std::f64::consts::TAU;
/// Frequencies per line chunk handed to one task.
const CHUNK: usize = 64;
/// Steps between exact re-evaluations of the rotating phase.
const RESEED: usize = 32;
/// Values below this are treated as numerical zero in fits.
pub const FLOOR: f64 = 1e-14;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn fourier_transform(mu: &AtomicMeasure, xi: &[f64]) -> Complex64 {
    let mut re = NeumaierSum::default();
    let mut im = NeumaierSum::default();
    for (x, w) in mu.iter() {
        let (s, c) = (TAU * dot(xi, x)).sin_cos();
        re += w * c;
        im += w * s;
    }
    Complex64::new(re.value(), im.value()) / mu.mass()
}

/// Direct evaluation at arbitrary frequencies, in parallel.
pub fn transform_many(mu: &AtomicMeasure, freqs: &[Vec<f64>]) -> Vec<Complex64> {
    par::map_slice(freqs, |xi| fourier_transform(mu, xi))
}

/// `mu_hat(start + k * step)` for `k = 0..count`.
pub fn transform_line(mu: &AtomicMeasure, start: &[f64], step: &[f64], count: usize) -> Vec<Complex64> {
    let chunks = count.div_ceil(CHUNK);
    let parts = par::map_range(chunks, |c| {
        let k0 = c * CHUNK;
        let len = CHUNK.min(count - k0);
        line_chunk(mu, start, step, k0, len)
    });
    parts.into_iter().flatten().collect()
}

fn line_chunk(mu: &AtomicMeasure, start: &[f64], step: &[f64], k0: usize, len: usize) -> Vec<Complex64> {
    let mut re = vec![NeumaierSum::default(); len];
    let mut im = vec![NeumaierSum::default(); len];
    for (x, w) in mu.iter() {
        let a = dot(start, x);
        let b = dot(step, x);
        let (sb, cb) = (TAU * b).sin_cos();
        let rot = Complex64::new(cb, sb);
        let mut z = Complex64::new(0.0, 0.0);
        for j in 0..len {
            if j % RESEED == 0 {
                let k = (k0 + j) as f64;
                let (s, c) = (TAU * (a + k * b)).sin_cos();
                z = Complex64::new(c, s);
            } else {
                z *= rot;
            }
            re[j] += w * z.re;
            im[j] += w * z.im;
        }
    }
    let m = mu.mass();
    re.iter()
        .zip(&im)
        .map(|(r, i)| Complex64::new(r.value(), i.value()) / m)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SampleMode {
    /// One frequency per direction at each ladder radius.
    Ray,
    /// `radial_samples` geometric sub-radii per shell `[R_j, R_{j+1})` in every
    /// direction.
    Shell { radial_samples: usize },
    /// All points of the `grid_step` lattice inside each shell.
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusLadder {
    pub r0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl RadiusLadder {
    pub fn radii(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.r0 * self.ratio.powi(k as i32)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencySpec {
    pub mode: SampleMode,
    pub directions: Vec<Vec<f64>>,
    pub ladder: RadiusLadder,
    pub grid_step: f64,
    /// Largest trusted frequency; defaults to `0.5 / resolution(mu)`.
    pub cap: Option<f64>,
}

impl FrequencySpec {
    pub fn new(mode: SampleMode, directions: Vec<Vec<f64>>, ladder: RadiusLadder, grid_step: f64) -> Result<Self> {
        let spec = FrequencySpec {
            mode,
            directions,
            ladder,
            grid_step,
            cap: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.ladder;
        if !(l.r0 > 0.0 && l.ratio > 1.0 && l.count >= 2) {
            return Err(Error::Validation(
                "radius ladder must be positive and strictly increasing".into(),
            ));
        }
        if self.directions.is_empty() {
            return Err(Error::Validation("need at least one direction".into()));
        }
        for u in &self.directions {
            let n = dot(u, u).sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::Validation(format!("direction {u:?} is not a unit vector")));
            }
        }
        if let SampleMode::Shell { radial_samples } = self.mode {
            if radial_samples == 0 {
                return Err(Error::Validation("radial_samples must be positive".into()));
            }
        }
        if self.mode == SampleMode::Grid && !(self.grid_step > 0.0) {
            return Err(Error::Validation("grid_step must be positive".into()));
        }
        Ok(())
    }
}

/// `{+1, -1}` for `d = 1`, 64 equally spaced angles for `d = 2`, and a
/// spherical Fibonacci set (`d = 3`) or fixed-seed Gaussian set otherwise.
pub fn default_directions(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..64)
            .map(|k| {
                let t = TAU * k as f64 / 64.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..64)
                .map(|k| {
                    let z = 1.0 - (2 * k + 1) as f64 / 64.0;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(64);
            (0..64)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| crate::hyperbolic::gaussian(&mut rng)).collect();
                    let n = dot(&v, &v).sqrt();
                    v.iter().map(|x| x / n).collect()
                })
                .collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourierSample {
    pub shell: usize,
    pub direction: usize,
    pub xi: Vec<f64>,
    pub value: Complex64,
}

impl FourierSample {
    pub fn radius(&self) -> f64 {
        dot(&self.xi, &self.xi).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct DecayReport {
    pub samples: Vec<FourierSample>,
    /// `(R_j, max |mu_hat|)` for shells below the cap.
    pub shell_max: Vec<(f64, f64)>,
    pub kappa: Option<f64>,
    pub fit_residual: f64,
    /// Intercept of the fitted line `log max = fit_intercept - kappa log R`.
    pub fit_intercept: f64,
    /// All fitted shells were below [`FLOOR`].
    pub floor_reported: bool,
    pub cap: f64,
    /// Shells dropped because they reach past the cap.
    pub capped_shells: usize,
}

pub fn decay_scan(mu: &AtomicMeasure, spec: &FrequencySpec) -> Result<DecayReport> {
    spec.validate()?;
    let d = mu.d();
    for u in &spec.directions {
        if u.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: u.len(),
            });
        }
    }
    let radii = spec.ladder.radii();
    let shells = match spec.mode {
        SampleMode::Ray => radii.len(),
        _ => radii.len() - 1,
    };
    if shells < 8 {
        return Err(Error::Validation(format!("need at least 8 shells, got {shells}")));
    }
    let cap = spec.cap.unwrap_or_else(|| {
        let eta = resolution(mu);
        if eta.is_finite() {
            0.5 / eta
        } else {
            f64::INFINITY
        }
    });
    let mut kept = 0;
    while kept < shells {
        let outer = match spec.mode {
            SampleMode::Ray => radii[kept],
            _ => radii[kept + 1],
        };
        if outer > cap {
            break;
        }
        kept += 1;
    }
    let mut freqs: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    match spec.mode {
        SampleMode::Ray => {
            for (j, r) in radii.iter().enumerate().take(kept) {
                for (k, u) in spec.directions.iter().enumerate() {
                    freqs.push((j, k, u.iter().map(|x| r * x).collect()));
                }
            }
        }
        SampleMode::Shell { radial_samples } => {
            for j in 0..kept {
                for m in 0..radial_samples {
                    let r = radii[j] * (radii[j + 1] / radii[j]).powf(m as f64 / radial_samples as f64);
                    for (k, u) in spec.directions.iter().enumerate() {
                        freqs.push((j, k, u.iter().map(|x| r * x).collect()));
                    }
                }
            }
        }
        SampleMode::Grid => {
            if kept > 0 {
                let outer = radii[kept];
                for (idx, xi) in grid_points(d, spec.grid_step, outer).into_iter().enumerate() {
                    let r = dot(&xi, &xi).sqrt();
                    if r < radii[0] {
                        continue;
                    }
                    let j = radii.partition_point(|q| *q <= r) - 1;
                    if j < kept {
                        freqs.push((j, idx, xi));
                    }
                }
            }
        }
    }
    let values = par::map_slice(&freqs, |(_, _, xi)| fourier_transform(mu, xi));
    let samples: Vec<FourierSample> = freqs
        .into_iter()
        .zip(values)
        .map(|((shell, direction, xi), value)| FourierSample {
            shell,
            direction,
            xi,
            value,
        })
        .collect();
    let mut shell_max: Vec<(f64, f64)> = radii[..kept].iter().map(|r| (*r, 0.0)).collect();
    for s in &samples {
        let a = s.value.norm();
        if a > shell_max[s.shell].1 {
            shell_max[s.shell].1 = a;
        }
    }
    if shell_max.len() < 4 {
        return Err(Error::InsufficientResolution(format!(
            "only {} shells lie below the resolution cap {cap:.3e}",
            shell_max.len()
        )));
    }
    let upper = &shell_max[shell_max.len() / 2..];
    let floor_reported = upper.iter().all(|s| s.1 < FLOOR);
    let (kappa, fit_residual, fit_intercept) = if floor_reported {
        (None, 0.0, 0.0)
    } else {
        let pts: Vec<(f64, f64)> = upper
            .iter()
            .filter(|s| s.1 >= FLOOR)
            .map(|s| (s.0.ln(), s.1.ln()))
            .collect();
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (slope, res) = least_squares_slope(&xs, &ys);
        let n = xs.len() as f64;
        let icpt = ys.iter().sum::<f64>() / n - slope * xs.iter().sum::<f64>() / n;
        (Some(-slope), res, icpt)
    };
    Ok(DecayReport {
        samples,
        shell_max,
        kappa,
        fit_residual,
        fit_intercept,
        floor_reported,
        cap,
        capped_shells: shells - kept,
    })
}

/// Lattice points `step * k` with `|xi| <= radius`.
fn grid_points(d: usize, step: f64, radius: f64) -> Vec<Vec<f64>> {
    let m = (radius / step).floor() as i64;
    let mut out = Vec::new();
    let mut k = vec![-m; d];
    loop {
        let xi: Vec<f64> = k.iter().map(|&v| v as f64 * step).collect();
        if dot(&xi, &xi) <= radius * radius {
            out.push(xi);
        }
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if k[i] < m {
                k[i] += 1;
                break;
            }
            k[i] = -m;
        }
    }
}

/// `|mu_hat|` on the lattice `step * Z^d` inside the ball of radius `radius`,
/// with multiplicities (conjugate symmetry halves the work when `d = 1`).
#[derive(Clone, Debug)]
pub struct GridValues {
    pub d: usize,
    pub step: f64,
    pub radius: f64,
    /// `(|xi|, |mu_hat(xi)|, multiplicity)`.
    pub values: Vec<(f64, f64, f64)>,
    /// Step is larger than `1 / (2 diam)`, so the grid undersamples the
    /// oscillation scale of the measure.
    pub coarse: bool,
}

pub fn grid_values(mu: &AtomicMeasure, radius: f64, step: f64) -> Result<GridValues> {
    if !(step > 0.0 && step <= 0.25) {
        return Err(Error::Validation(format!("grid step must lie in (0, 1/4], got {step}")));
    }
    if !(radius > 0.0) {
        return Err(Error::Validation("radius must be positive".into()));
    }
    let d = mu.d();
    let diam = mu.diameter();
    let coarse = diam > 0.0 && step > 0.5 / diam;
    let mut values = Vec::new();
    if d == 1 {
        let m = (radius / step).floor() as usize;
        let line = transform_line(mu, &[0.0], &[step], m + 1);
        for (k, z) in line.into_iter().enumerate() {
            let r = k as f64 * step;
            values.push((r, z.norm(), if k == 0 { 1.0 } else { 2.0 }));
        }
    } else {
        // rows along the last axis
        let m = (radius / step).floor() as i64;
        let mut heads: Vec<Vec<f64>> = Vec::new();
        for p in grid_points(d - 1, step, radius) {
            heads.push(p);
        }
        let rows = par::map_slice(&heads, |h| {
            let mut start = h.clone();
            start.push(-(m as f64) * step);
            let mut dir = vec![0.0; d];
            dir[d - 1] = step;
            let line = transform_line(mu, &start, &dir, (2 * m + 1) as usize);
            line.into_iter()
                .enumerate()
                .filter_map(|(k, z)| {
                    let mut xi = h.clone();
                    xi.push((k as i64 - m) as f64 * step);
                    let r = dot(&xi, &xi).sqrt();
                    (r <= radius).then_some((r, z.norm(), 1.0))
                })
                .collect::<Vec<_>>()
        });
        values = rows.into_iter().flatten().collect();
    }
    Ok(GridValues {
        d,
        step,
        radius,
        values,
        coarse,
    })
}

impl GridValues {
    /// Riemann sum of `|mu_hat|^2` over `|xi| <= r`.
    pub fn l2_within(&self, r: f64) -> f64 {
        let mut s = NeumaierSum::default();
        for (rad, a, m) in &self.values {
            if *rad <= r {
                s += m * a * a;
            }
        }
        s.value() * self.step.powi(self.d as i32)
    }

    /// Lebesgue estimate of `{|xi| <= t : |mu_hat| > threshold}`.
    pub fn superlevel_within(&self, t: f64, threshold: f64) -> f64 {
        let mut s = NeumaierSum::default();
        for (rad, a, m) in &self.values {
            if *rad <= t && *a > threshold {
                s += *m;
            }
        }
        s.value() * self.step.powi(self.d as i32)
    }
}

pub fn ball_volume(d: usize, r: f64) -> f64 {
    let dd = d as f64;
    std::f64::consts::PI.powf(dd / 2.0) / libm_gamma(dd / 2.0 + 1.0) * r.powf(dd)
}

fn libm_gamma(x: f64) -> f64 {
    // x is a positive half-integer here
    if (x - x.round()).abs() < 1e-12 {
        (1..x.round() as u64).map(|k| k as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut y = 0.5;
        while y < x - 1e-12 {
            g *= y;
            y += 1.0;
        }
        g
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L2Average {
    pub estimate: f64,
    pub coarse: bool,
}

pub fn l2_average(mu: &AtomicMeasure, radius: f64, step: f64) -> Result<L2Average> {
    let g = grid_values(mu, radius, step)?;
    Ok(L2Average {
        estimate: g.l2_within(radius),
        coarse: g.coarse,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExceptionalSet {
    pub lebesgue: f64,
    pub fraction: f64,
}

pub fn exceptional_set_measure(mu: &AtomicMeasure, t: f64, delta_exp: f64, step: f64) -> Result<ExceptionalSet> {
    if !(delta_exp > 0.0 && delta_exp < 1.0) {
        return Err(Error::Validation(format!(
            "delta_exp must lie in (0, 1), got {delta_exp}"
        )));
    }
    if !(t >= 4.0) {
        return Err(Error::Validation(format!("T must be at least 4, got {t}")));
    }
    let g = grid_values(mu, t, step)?;
    Ok(exceptional_from_grid(&g, t, delta_exp))
}

pub fn exceptional_from_grid(g: &GridValues, t: f64, delta_exp: f64) -> ExceptionalSet {
    let lebesgue = g.superlevel_within(t, t.powf(-delta_exp));
    ExceptionalSet {
        lebesgue,
        fraction: lebesgue / ball_volume(g.d, t),
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub delta_exp: f64,
    /// `(T, lebesgue, fraction)`.
    pub points: Vec<(f64, f64, f64)>,
    pub fraction_decreasing: bool,
    /// Lebesgue estimate grows slower than `T^growth` between the first and
    /// last `T`.
    pub sub_growth: bool,
}

/// Exceptional-set statistics for every `delta_exp`, sharing one grid per `T`.
pub fn exceptional_sweep(
    mu: &AtomicMeasure,
    ts: &[f64],
    deltas: &[f64],
    step: f64,
    growth: f64,
) -> Result<Vec<SweepRow>> {
    let tmax = ts.iter().copied().fold(0.0, f64::max);
    let grid = grid_values(mu, tmax, step)?;
    sweep_from_grid(&grid, ts, deltas, growth)
}

pub fn sweep_from_grid(grid: &GridValues, ts: &[f64], deltas: &[f64], growth: f64) -> Result<Vec<SweepRow>> {
    if ts.is_empty() || ts.iter().any(|t| !(*t >= 4.0 && *t <= grid.radius)) {
        return Err(Error::Validation(format!("every T must lie in [4, {}]", grid.radius)));
    }
    let mut rows = Vec::new();
    for &de in deltas {
        if !(de > 0.0 && de < 1.0) {
            return Err(Error::Validation(format!("delta_exp must lie in (0, 1), got {de}")));
        }
        let points: Vec<(f64, f64, f64)> = ts
            .iter()
            .map(|&t| {
                let e = exceptional_from_grid(grid, t, de);
                (t, e.lebesgue, e.fraction)
            })
            .collect();
        let fraction_decreasing = points.windows(2).all(|w| w[1].2 < w[0].2);
        let (first, last) = (points[0], points[points.len() - 1]);
        let sub_growth = last.1 <= first.1 * (last.0 / first.0).powf(growth);
        rows.push(SweepRow {
            delta_exp: de,
            points,
            fraction_decreasing,
            sub_growth,
        });
    }
    Ok(rows)
}

/// First swept exponent whose fractions decrease and whose Lebesgue estimate
/// grows slower than `T^growth`.
pub fn select_exponent(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter().find(|r| r.fraction_decreasing && r.sub_growth)
}
