//! Atomic approximations of Patterson-Sullivan measures and their unstable
//! conditionals, plus the consistency checks run on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dd::Dd;
use crate::error::{check_len, Error, Result};
use crate::hyperbolic::{busemann_raw, chart_coords, GroupElement, HyperbolicPoint};
use crate::par;
use crate::schottky::{Letter, SchottkyGroup, Word};
use crate::sum::{neumaier, pairwise};

/// Weighted point cloud in the chart `R^d`. Points are stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    d: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    mass: f64,
}

impl AtomicMeasure {
    pub fn new(d: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Validation("chart dimension must be positive".into()));
        }
        check_len(weights.len() * d, points.len())?;
        if weights.is_empty() {
            return Err(Error::Validation("a measure needs at least one atom".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::Validation(format!("atom weight {w} is not positive")));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("atom coordinates must be finite".into()));
        }
        let mass = pairwise(&weights);
        Ok(AtomicMeasure {
            d,
            points,
            weights,
            mass,
        })
    }

    pub fn from_rows(d: usize, rows: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        let mut pts = Vec::with_capacity(rows.len() * d);
        for r in rows {
            check_len(d, r.len())?;
            pts.extend_from_slice(r);
        }
        Self::new(d, pts, weights)
    }

    pub fn point_mass(x: &[f64]) -> Self {
        AtomicMeasure {
            d: x.len(),
            points: x.to_vec(),
            weights: vec![1.0],
            mass: 1.0,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks_exact(self.d).zip(self.weights.iter().copied())
    }

    /// Rescaled copy with total mass 1.
    pub fn normalized(&self) -> AtomicMeasure {
        let weights: Vec<f64> = self.weights.iter().map(|w| w / self.mass).collect();
        let mass = pairwise(&weights);
        AtomicMeasure {
            d: self.d,
            points: self.points.clone(),
            weights,
            mass,
        }
    }

    pub fn translated(&self, shift: &[f64]) -> AtomicMeasure {
        let mut points = self.points.clone();
        for row in points.chunks_exact_mut(self.d) {
            for (x, s) in row.iter_mut().zip(shift) {
                *x += s;
            }
        }
        AtomicMeasure { points, ..self.clone() }
    }

    /// Total weight of atoms with every coordinate in `[lo_i, hi_i]`.
    pub fn mass_in_box(&self, lo: &[f64], hi: &[f64]) -> f64 {
        neumaier(self.iter().filter_map(|(x, w)| {
            let inside = x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b);
            inside.then_some(w)
        }))
    }

    /// Largest pairwise coordinate extent (diameter of the bounding box).
    pub fn diameter(&self) -> f64 {
        let mut s = 0.0;
        for k in 0..self.d {
            let (lo, hi) = self.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (x, _)| {
                (a.min(x[k]), b.max(x[k]))
            });
            s += (hi - lo) * (hi - lo);
        }
        s.sqrt()
    }
}

/// Synthetic measures used to calibrate the estimators.
pub mod synthetic {
    use super::*;

    /// Equal-weight midpoints of `n` cells of `[0, 1]`.
    pub fn uniform_segment(n: usize) -> AtomicMeasure {
        let pts: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        AtomicMeasure::new(1, pts, vec![1.0 / n as f64; n]).expect("valid segment")
    }

    /// Uniform segment `[0, 1] x {0}` inside the plane, tilted by `angle`.
    pub fn segment_in_plane(n: usize, angle: f64) -> AtomicMeasure {
        let (s, c) = angle.sin_cos();
        let mut pts = Vec::with_capacity(2 * n);
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            pts.push(c * t);
            pts.push(s * t);
        }
        AtomicMeasure::new(2, pts, vec![1.0 / n as f64; n]).expect("valid segment")
    }

    /// `n` independent uniform points of the unit square from a fixed seed.
    pub fn uniform_square(n: usize, seed: u64) -> AtomicMeasure {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<f64> = (0..2 * n).map(|_| rng.random::<f64>()).collect();
        AtomicMeasure::new(2, pts, vec![1.0 / n as f64; n]).expect("valid square")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PsConstruction {
    /// Words of length exactly `n_max`, weight `exp(-(delta + eps) d(o, w o))`.
    TopShell,
    /// All words of length `<= n_max`, weight `exp(-(delta + eps) d(o, w o))`.
    OrbitSum,
}

#[derive(Clone, Debug)]
pub struct PsSettings {
    pub n_max: usize,
    pub eps: f64,
    pub construction: PsConstruction,
    pub basepoint: Option<HyperbolicPoint>,
}

impl PsSettings {
    pub fn top_shell(n_max: usize) -> Self {
        PsSettings {
            n_max,
            eps: 0.0,
            construction: PsConstruction::TopShell,
            basepoint: None,
        }
    }

    pub fn orbit_sum(n_max: usize, eps: f64) -> Self {
        PsSettings {
            n_max,
            eps,
            construction: PsConstruction::OrbitSum,
            basepoint: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PsMeasure {
    pub measure: AtomicMeasure,
    pub words: Vec<Word>,
    /// Orbit points whose projection is the point at infinity of the chart.
    pub dropped: usize,
    pub delta_hat: f64,
}

/// Radial (visual) boundary projection of `w o` seen from `o`, as a chart
/// point: `w o - exp(-d(o, w o)) o` is null. The identity word projects to the
/// chart foot of `o`.
fn radial_projection(g: &GroupElement, o: &HyperbolicPoint, tol: f64) -> Result<(Vec<f64>, f64)> {
    let dist = g.displacement(o);
    let ov = o.coords();
    if dist == 0.0 {
        return Ok((chart_coords(ov, tol)?, 0.0));
    }
    let od: Vec<Dd> = ov.iter().map(|&x| Dd::new(x)).collect();
    let go = g.apply_dd(&od);
    let c = (-dist).exp();
    let xi: Vec<f64> = go.iter().zip(ov).map(|(a, b)| (*a - Dd::new(c * b)).to_f64()).collect();
    Ok((chart_coords(&xi, tol)?, dist))
}

pub fn patterson_orbit_measure(group: &SchottkyGroup, delta_hat: f64, settings: &PsSettings) -> Result<PsMeasure> {
    if !group.is_validated() {
        return Err(Error::NotValidated);
    }
    if !(delta_hat >= 0.0 && delta_hat.is_finite()) {
        return Err(Error::Validation(format!("exponent {delta_hat} must be nonnegative")));
    }
    if !(settings.eps >= 0.0) {
        return Err(Error::Validation("eps must be nonnegative".into()));
    }
    let s = delta_hat + settings.eps;
    let tol = group.params().tol;
    let o = settings.basepoint.clone().unwrap_or_else(|| group.params().basepoint());
    let n_max = settings.n_max;
    let top_only = settings.construction == PsConstruction::TopShell;
    if settings.construction == PsConstruction::OrbitSum {
        if !(settings.eps > 0.0) {
            return Err(Error::Validation("orbit-sum construction needs eps > 0".into()));
        }
        if n_max >= 4 {
            let shells = crate::dimension::ShellDistances::compute(group, &o, n_max)?;
            let t = shells.truncation(s);
            if t.diverging {
                return Err(Error::Divergence(format!(
                    "shell sums at s = {s} do not decay up to length {n_max}"
                )));
            }
        }
    }
    let levels = group.orbit_map(n_max, |codes, g| {
        if top_only && codes.len() != n_max {
            return None;
        }
        Some((Word::from_codes(codes), radial_projection(g, &o, tol)))
    });
    let mut words = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut dists = Vec::new();
    let mut dropped = 0;
    for (w, r) in levels.into_iter().flatten() {
        match r {
            Ok((x, dist)) => {
                rows.extend(x);
                dists.push(dist);
                words.push(w);
            }
            Err(Error::PointAtInfinity) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    if dists.is_empty() {
        return Err(Error::Degenerate("every atom projected to infinity".into()));
    }
    let dmin = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = dists.iter().map(|d| (-s * (d - dmin)).exp()).collect();
    let total = pairwise(&raw);
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let measure = AtomicMeasure::new(group.params().d, rows, weights)?;
    Ok(PsMeasure {
        measure,
        words,
        dropped,
        delta_hat,
    })
}

/// Gaussian bump `exp(-|x - c|^2 / (2 sigma^2))`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub center: Vec<f64>,
    pub scale: f64,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        (-0.5 * r2 / (self.scale * self.scale)).exp()
    }

    /// Bumps at five scales (relative to the diameter) around four centers:
    /// atoms at cumulative mass 1/6, 1/2, 5/6 and the barycenter.
    pub fn standard_family(mu: &AtomicMeasure) -> Vec<TestFunction> {
        let diam = mu.diameter().max(1e-12);
        let mut centers = Vec::new();
        let mut acc = 0.0;
        let mut targets = vec![1.0 / 6.0, 0.5, 5.0 / 6.0].into_iter().peekable();
        for (x, w) in mu.iter() {
            acc += w / mu.mass();
            while let Some(&t) = targets.peek() {
                if acc >= t {
                    centers.push(x.to_vec());
                    targets.next();
                } else {
                    break;
                }
            }
        }
        let mut bary = vec![0.0; mu.d()];
        for (x, w) in mu.iter() {
            for (b, v) in bary.iter_mut().zip(x) {
                *b += w * v / mu.mass();
            }
        }
        centers.push(bary);
        let mut out = Vec::new();
        for c in centers {
            for s in [0.01, 0.03, 0.1, 0.3, 1.0] {
                out.push(TestFunction {
                    center: c.clone(),
                    scale: s * diam,
                });
            }
        }
        out
    }
}

/// `max_f |int f d(gamma_* mu) - int f exp(delta b_xi(o, gamma o)) dmu|` for a
/// normalized `mu`: the discrete defect of the conformal change of variables
/// `gamma_* mu_o = mu_{gamma o}`.
pub fn conformality_residual(
    mu: &AtomicMeasure,
    gamma: &GroupElement,
    delta_hat: f64,
    tests: &[TestFunction],
    basepoint: &HyperbolicPoint,
    tol: f64,
) -> f64 {
    conformality_residual_signed(mu, gamma, delta_hat, tests, basepoint, tol, 1.0)
}

/// [`conformality_residual`] with the Busemann exponent multiplied by `sign`;
/// `sign = -1` is the flipped convention.
pub fn conformality_residual_signed(
    mu: &AtomicMeasure,
    gamma: &GroupElement,
    delta_hat: f64,
    tests: &[TestFunction],
    basepoint: &HyperbolicPoint,
    tol: f64,
    sign: f64,
) -> f64 {
    let go = gamma.act_point(basepoint);
    let o = basepoint.coords();
    let n = mu.len();
    let d = mu.d();
    struct Atom {
        image: Option<Vec<f64>>,
        factor: f64,
    }
    let atoms: Vec<Atom> = par::map_range(n, |i| {
        let x = mu.point(i);
        let mut xi = Vec::with_capacity(d + 2);
        xi.push(0.5 * x.iter().map(|v| v * v).sum::<f64>());
        xi.extend_from_slice(x);
        xi.push(1.0);
        let b = busemann_raw(&xi, o, go.coords()).unwrap_or(f64::NAN);
        Atom {
            image: gamma.act_chart(x, tol).ok(),
            factor: (sign * delta_hat * b).exp(),
        }
    });
    let mass = mu.mass();
    let per_test = par::map_slice(tests, |f| {
        let lhs = neumaier(
            atoms
                .iter()
                .zip(mu.weights())
                .filter_map(|(a, w)| a.image.as_ref().map(|y| w * f.eval(y))),
        );
        let rhs = neumaier(
            atoms
                .iter()
                .enumerate()
                .map(|(i, a)| mu.weight(i) * f.eval(mu.point(i)) * a.factor),
        );
        ((lhs - rhs) / mass).abs()
    });
    per_test.into_iter().fold(0.0, f64::max)
}

/// Largest conformality residual over all generators and their inverses.
pub fn group_conformality_residual(group: &SchottkyGroup, mu: &AtomicMeasure, delta_hat: f64, sign: f64) -> f64 {
    let tests = TestFunction::standard_family(mu);
    let o = group.params().basepoint();
    let tol = group.params().tol;
    (0..2 * group.rank())
        .map(|c| {
            let g = group.letter_element(Letter::from_code(c as u8));
            conformality_residual_signed(mu, g, delta_hat, &tests, &o, tol, sign)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct ConditionalMeasure {
    /// Atoms in `N^+` coordinates, weights not renormalized.
    pub measure: AtomicMeasure,
    /// Atoms whose `N^+` coordinate is at infinity for this frame.
    pub excluded: usize,
    /// Atoms with `|v| > window`.
    pub outside_window: usize,
}

/// Pullback of `mu` (a normalized PS approximation seen from `basepoint`) to the
/// unstable leaf `N^+ x` of the frame `x`.
///
/// The frame `x` sits at the point `x^-1 o` with forward endpoint
/// `x^-1 [e_{d+1}]`, so `(n^+(v) x)^+ = x^-1 chart(-v)`. An atom `xi` goes to
/// `v = -chart^-1(x xi)` with weight multiplied by
/// `exp(delta b_xi(o, x^-1 n^+(-v) o))`.
pub fn unstable_conditional(
    mu: &AtomicMeasure,
    frame: &GroupElement,
    window: f64,
    delta_hat: f64,
    basepoint: &HyperbolicPoint,
    tol: f64,
) -> Result<ConditionalMeasure> {
    let d = mu.d();
    check_len(d + 2, frame.size())?;
    if !(window > 0.0) {
        return Err(Error::Validation("window radius must be positive".into()));
    }
    let finv = frame.inverse();
    let o = basepoint.coords();
    let od: Vec<Dd> = o.iter().map(|&x| Dd::new(x)).collect();
    enum Fate {
        Kept(Vec<f64>, f64),
        Excluded,
        Outside,
    }
    let fates: Vec<Fate> = par::map_range(mu.len(), |i| {
        let x = mu.point(i);
        let v = match frame.act_chart(x, tol) {
            Ok(c) => c.iter().map(|t| -t).collect::<Vec<f64>>(),
            Err(_) => return Fate::Excluded,
        };
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > window {
            return Fate::Outside;
        }
        // n^+(-v) o, then x^-1
        let half = 0.5 * norm * norm;
        let n_len = od.len();
        let mut p = od.clone();
        let mut first = od[0];
        for (k, vk) in v.iter().enumerate() {
            first += Dd::new(-vk) * od[k + 1];
            p[k + 1] = od[k + 1] + Dd::new(-vk) * od[n_len - 1];
        }
        p[0] = first + Dd::new(half) * od[n_len - 1];
        let q: Vec<f64> = finv.apply_dd(&p).into_iter().map(Dd::to_f64).collect();
        let mut xi = Vec::with_capacity(d + 2);
        xi.push(0.5 * x.iter().map(|t| t * t).sum::<f64>());
        xi.extend_from_slice(x);
        xi.push(1.0);
        match busemann_raw(&xi, o, &q) {
            Ok(b) => Fate::Kept(v, mu.weight(i) * (delta_hat * b).exp()),
            Err(_) => Fate::Excluded,
        }
    });
    let mut pts = Vec::new();
    let mut weights = Vec::new();
    let (mut excluded, mut outside) = (0, 0);
    for f in fates {
        match f {
            Fate::Kept(v, w) => {
                pts.extend(v);
                weights.push(w);
            }
            Fate::Excluded => excluded += 1,
            Fate::Outside => outside += 1,
        }
    }
    if weights.is_empty() {
        return Err(Error::InsufficientResolution(
            "no atoms inside the conditional window".into(),
        ));
    }
    Ok(ConditionalMeasure {
        measure: AtomicMeasure::new(d, pts, weights)?,
        excluded,
        outside_window: outside,
    })
}

/// Atoms sorted by their first coordinate, for range queries.
#[derive(Clone, Debug)]
pub(crate) struct AxisIndex {
    pub order: Vec<usize>,
    pub keys: Vec<f64>,
    /// Prefix sums of weights in sorted order (length `n + 1`).
    pub cum: Vec<f64>,
}

impl AxisIndex {
    pub fn new(mu: &AtomicMeasure) -> Self {
        let mut order: Vec<usize> = (0..mu.len()).collect();
        order.sort_by(|&a, &b| mu.point(a)[0].total_cmp(&mu.point(b)[0]).then(a.cmp(&b)));
        let keys: Vec<f64> = order.iter().map(|&i| mu.point(i)[0]).collect();
        let mut cum = Vec::with_capacity(order.len() + 1);
        let mut s = crate::sum::NeumaierSum::default();
        cum.push(0.0);
        for &i in &order {
            s += mu.weight(i);
            cum.push(s.value());
        }
        AxisIndex { order, keys, cum }
    }

    /// Sorted positions with first coordinate in `[lo, hi]`.
    pub fn range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = self.keys.partition_point(|k| *k < lo);
        let b = self.keys.partition_point(|k| *k <= hi);
        a..b.max(a)
    }
}

#[derive(Clone, Debug)]
pub struct LocalDimension {
    pub slope: f64,
    pub radii: Vec<f64>,
    pub mean_log_mass: Vec<f64>,
    pub dropped_radii: Vec<f64>,
}

pub(crate) fn sample_by_weight(mu: &AtomicMeasure, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut cum = Vec::with_capacity(mu.len());
    let mut s = crate::sum::NeumaierSum::default();
    for &w in mu.weights() {
        s += w;
        cum.push(s.value());
    }
    let total = *cum.last().expect("nonempty");
    (0..count)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            cum.partition_point(|c| *c <= u).min(mu.len() - 1)
        })
        .collect()
}

/// Ball masses `mu(B(x, r))` (closed balls) for all radii, sorted ascending.
pub(crate) fn ball_masses(mu: &AtomicMeasure, idx: &AxisIndex, x: &[f64], radii: &[f64]) -> Vec<f64> {
    if mu.d() == 1 {
        return radii
            .iter()
            .map(|r| {
                let rg = idx.range(x[0] - r, x[0] + r);
                idx.cum[rg.end] - idx.cum[rg.start]
            })
            .collect();
    }
    let rmax = radii[radii.len() - 1];
    let mut bins = vec![0.0; radii.len()];
    for pos in idx.range(x[0] - rmax, x[0] + rmax) {
        let i = idx.order[pos];
        let dist = crate::schottky::dist(mu.point(i), x);
        let b = radii.partition_point(|r| *r < dist);
        if b < radii.len() {
            bins[b] += mu.weight(i);
        }
    }
    let mut acc = 0.0;
    bins.iter()
        .map(|b| {
            acc += b;
            acc
        })
        .collect()
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let resid: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (my + slope * (x - mx));
            e * e
        })
        .sum::<f64>();
    (slope, (resid / n).sqrt())
}

/// Log-log slope of the average of `log mu(B(x, r))` over `samples` centers
/// drawn from `mu`.
pub fn local_dimension_estimate(
    mu: &AtomicMeasure,
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<LocalDimension> {
    if radii.len() < 2 || samples == 0 {
        return Err(Error::Validation("need at least two radii and one sample".into()));
    }
    let mut rs = radii.to_vec();
    rs.sort_by(f64::total_cmp);
    if rs[0] <= 0.0 {
        return Err(Error::Validation("radii must be positive".into()));
    }
    if (rs[rs.len() - 1] / rs[0]).log10() < 1.5 {
        return Err(Error::Validation("radii must span at least 1.5 decades".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = sample_by_weight(mu, samples, &mut rng);
    let idx = AxisIndex::new(mu);
    let masses: Vec<Vec<f64>> = par::map_slice(&centers, |&c| ball_masses(mu, &idx, mu.point(c), &rs));
    let mut used = Vec::new();
    let mut mean_log = Vec::new();
    let mut dropped = Vec::new();
    for (k, r) in rs.iter().enumerate() {
        if masses.iter().any(|m| m[k] <= 0.0) {
            dropped.push(*r);
            continue;
        }
        let s = neumaier(masses.iter().map(|m| (m[k] / mu.mass()).ln()));
        used.push(*r);
        mean_log.push(s / samples as f64);
    }
    if used.len() < 2 {
        return Err(Error::InsufficientResolution("fewer than two usable radii".into()));
    }
    let lx: Vec<f64> = used.iter().map(|r| r.ln()).collect();
    let (slope, _) = least_squares_slope(&lx, &mean_log);
    Ok(LocalDimension {
        slope,
        radii: used,
        mean_log_mass: mean_log,
        dropped_radii: dropped,
    })
}

/// Weighted 0.95-quantile of nearest-neighbour distances: the scale below
/// which the discretization no longer looks like the measure.
pub fn resolution(mu: &AtomicMeasure) -> f64 {
    let n = mu.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let idx = AxisIndex::new(mu);
    let nn: Vec<f64> = par::map_range(n, |pos| {
        let i = idx.order[pos];
        let x = mu.point(i);
        let mut best = f64::INFINITY;
        let mut j = pos + 1;
        while j < n && idx.keys[j] - idx.keys[pos] < best {
            best = best.min(crate::schottky::dist(x, mu.point(idx.order[j])));
            j += 1;
        }
        let mut j = pos;
        while j > 0 && idx.keys[pos] - idx.keys[j - 1] < best {
            best = best.min(crate::schottky::dist(x, mu.point(idx.order[j - 1])));
            j -= 1;
        }
        best
    });
    let mut pairs: Vec<(f64, f64)> = nn.into_iter().zip(idx.order.iter().map(|&i| mu.weight(i))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let target = 0.95 * mu.mass();
    let mut acc = 0.0;
    for (d, w) in &pairs {
        acc += w;
        if acc >= target {
            return *d;
        }
    }
    pairs[pairs.len() - 1].0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_validation() {
        assert!(AtomicMeasure::new(1, vec![0.0], vec![0.0]).is_err());
        assert!(AtomicMeasure::new(1, vec![], vec![]).is_err());
        assert!(AtomicMeasure::new(2, vec![0.0], vec![1.0]).is_err());
        let m = AtomicMeasure::new(1, vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(m.mass(), 4.0);
        assert_eq!(m.normalized().mass(), 1.0);
    }

    #[test]
    fn ball_masses_agree_between_paths() {
        let seg = synthetic::uniform_segment(1000);
        let idx = AxisIndex::new(&seg);
        let m = ball_masses(&seg, &idx, &[0.5], &[0.01, 0.1]);
        assert!((m[0] - 0.02).abs() < 1.5e-3 && (m[1] - 0.2).abs() < 1.5e-3);
        let plane = synthetic::segment_in_plane(1000, 0.0);
        let idx2 = AxisIndex::new(&plane);
        let m2 = ball_masses(&plane, &idx2, &[0.5, 0.0], &[0.01, 0.1]);
        assert!((m[0] - m2[0]).abs() < 1e-12 && (m[1] - m2[1]).abs() < 1e-12);
    }

    #[test]
    fn resolution_of_grid() {
        let seg = synthetic::uniform_segment(1000);
        assert!((resolution(&seg) - 1e-3).abs() < 1e-12);
    }
}
