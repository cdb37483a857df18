//! Empirical affine non-concentration profiles.
//!
//! For sampled balls `B(x, r)` and candidate hyperplanes `W` we record the
//! largest fraction of `mu(B(x, r))` carried by an `eps r`-neighbourhood of
//! `W`. Only finitely many normals are tried, so the result is a lower bound
//! for the true supremum. Every `eps` uses the same balls and normals, and the
//! slabs are nested, so the profile is non-decreasing in `eps` exactly.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hyperbolic::gaussian;
use crate::measure::{resolution, sample_by_weight, AtomicMeasure, AxisIndex};
use crate::par;
use crate::schottky::dist;

#[derive(Clone, Debug)]
pub struct NonConcSettings {
    pub samples: usize,
    pub seed: u64,
    /// Smallest ball radius; defaults to `5 * resolution(mu)`.
    pub r_min: Option<f64>,
    pub r_max: f64,
    /// Random normals tried in addition to the local principal one (`d >= 2`).
    pub random_normals: usize,
}

impl Default for NonConcSettings {
    fn default() -> Self {
        NonConcSettings {
            samples: 200,
            seed: 0,
            r_min: None,
            r_max: 1.0,
            random_normals: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonConcProfile {
    /// `(eps, worst ratio, balls used)`, in the order the `eps` were given.
    pub pairs: Vec<(f64, f64, usize)>,
    pub samples: usize,
    pub discarded: usize,
    pub method: String,
    pub r_min: f64,
    pub r_max: f64,
}

impl NonConcProfile {
    pub fn ratio(&self, eps: f64) -> Option<f64> {
        self.pairs.iter().find(|p| p.0 == eps).map(|p| p.1)
    }

    /// Some slab already holds the whole ball at the smallest `eps`.
    pub fn concentrated(&self) -> bool {
        self.pairs
            .iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .is_some_and(|p| p.1 >= 1.0 - 1e-12)
    }
}

/// Largest mass fraction of `B(x, r)` inside a slab `|<y - x, n> - c| <= eps r`
/// over all offsets `c`, for each `eps`. `None` when the ball is empty.
pub fn slab_ratio(mu: &AtomicMeasure, x: &[f64], r: f64, normal: &[f64], eps: &[f64]) -> Option<Vec<f64>> {
    let idx = AxisIndex::new(mu);
    let ball = ball_atoms(mu, &idx, x, r);
    let mut proj = project(mu, &ball, x, normal);
    best_windows(&mut proj, r, eps)
}

fn ball_atoms(mu: &AtomicMeasure, idx: &AxisIndex, x: &[f64], r: f64) -> Vec<usize> {
    idx.range(x[0] - r, x[0] + r)
        .map(|pos| idx.order[pos])
        .filter(|&i| dist(mu.point(i), x) <= r)
        .collect()
}

fn project(mu: &AtomicMeasure, atoms: &[usize], x: &[f64], n: &[f64]) -> Vec<(f64, f64)> {
    atoms
        .iter()
        .map(|&i| {
            let p: f64 = mu.point(i).iter().zip(x).zip(n).map(|((a, b), c)| (a - b) * c).sum();
            (p, mu.weight(i))
        })
        .collect()
}

fn best_windows(proj: &mut [(f64, f64)], r: f64, eps: &[f64]) -> Option<Vec<f64>> {
    proj.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cum = Vec::with_capacity(proj.len() + 1);
    cum.push(0.0);
    let mut s = crate::sum::NeumaierSum::default();
    for (_, w) in proj.iter() {
        s += *w;
        cum.push(s.value());
    }
    let total = cum[proj.len()];
    if !(total > 0.0) {
        return None;
    }
    Some(
        eps.iter()
            .map(|e| {
                let width = 2.0 * e * r;
                let mut best: f64 = 0.0;
                let mut j = 0;
                for i in 0..proj.len() {
                    j = j.max(i);
                    while j < proj.len() && proj[j].0 - proj[i].0 <= width {
                        j += 1;
                    }
                    best = best.max(cum[j] - cum[i]);
                }
                (best / total).min(1.0)
            })
            .collect(),
    )
}

/// Unit normal of the weighted best-fit hyperplane through the atoms.
fn principal_normal(mu: &AtomicMeasure, atoms: &[usize]) -> Option<Vec<f64>> {
    let d = mu.d();
    if d == 1 {
        return Some(vec![1.0]);
    }
    let mut mass = 0.0;
    let mut mean = vec![0.0; d];
    for &i in atoms {
        let w = mu.weight(i);
        mass += w;
        for (m, v) in mean.iter_mut().zip(mu.point(i)) {
            *m += w * v;
        }
    }
    if !(mass > 0.0) {
        return None;
    }
    mean.iter_mut().for_each(|m| *m /= mass);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for &i in atoms {
        let w = mu.weight(i) / mass;
        let p = mu.point(i);
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] += w * (p[a] - mean[a]) * (p[b] - mean[b]);
            }
        }
    }
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imin();
    Some(eig.eigenvectors.column(k).iter().copied().collect())
}

pub fn affine_profile(mu: &AtomicMeasure, eps: &[f64], settings: &NonConcSettings) -> Result<NonConcProfile> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && *e <= 0.5)) {
        return Err(Error::Validation("eps values must lie in (0, 1/2]".into()));
    }
    if settings.samples == 0 {
        return Err(Error::Validation("need at least one ball sample".into()));
    }
    let d = mu.d();
    let eta = resolution(mu);
    let floor = if eta.is_finite() { 5.0 * eta } else { 0.0 };
    let r_min = settings.r_min.unwrap_or(floor);
    if r_min < floor {
        return Err(Error::InsufficientResolution(format!(
            "r_min {r_min:.3e} is below 5x the atom resolution {eta:.3e}"
        )));
    }
    if !(r_min > 0.0 && settings.r_max > r_min) {
        return Err(Error::Validation(format!(
            "need 0 < r_min < r_max, got {r_min:.3e} and {:.3e}",
            settings.r_max
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let centers = sample_by_weight(mu, settings.samples, &mut rng);
    let ratio = settings.r_max / r_min;
    let radii: Vec<f64> = (0..settings.samples)
        .map(|_| r_min * ratio.powf(rng.random::<f64>()))
        .collect();
    let randoms: Vec<Vec<f64>> = if d >= 2 {
        (0..settings.random_normals)
            .map(|_| {
                let v: Vec<f64> = (0..d).map(|_| gaussian(&mut rng)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| x / n).collect()
            })
            .collect()
    } else {
        Vec::new()
    };
    let idx = AxisIndex::new(mu);
    let per_ball: Vec<Option<Vec<f64>>> = par::map_range(settings.samples, |s| {
        let x = mu.point(centers[s]);
        let r = radii[s];
        let atoms = ball_atoms(mu, &idx, x, r);
        let mut normals = Vec::with_capacity(randoms.len() + 1);
        normals.push(principal_normal(mu, &atoms)?);
        normals.extend(randoms.iter().cloned());
        let mut worst = vec![0.0f64; eps.len()];
        for n in &normals {
            let mut proj = project(mu, &atoms, x, n);
            let ratios = best_windows(&mut proj, r, eps)?;
            for (w, q) in worst.iter_mut().zip(ratios) {
                *w = w.max(q);
            }
        }
        Some(worst)
    });
    let used: Vec<&Vec<f64>> = per_ball.iter().flatten().collect();
    let discarded = settings.samples - used.len();
    if used.is_empty() {
        return Err(Error::InsufficientResolution("every sampled ball was empty".into()));
    }
    let pairs = eps
        .iter()
        .enumerate()
        .map(|(k, e)| (*e, used.iter().map(|w| w[k]).fold(0.0, f64::max), used.len()))
        .collect();
    let method = if d == 1 {
        "interval".to_string()
    } else {
        format!("principal+random({})", randoms.len())
    };
    Ok(NonConcProfile {
        pairs,
        samples: settings.samples,
        discarded,
        method,
        r_min,
        r_max: settings.r_max,
    })
}

/// Area fraction of the disk covered by a centered slab of half-width
/// `eps` times the radius.
pub fn disk_slab_fraction(eps: f64) -> f64 {
    let e = eps.min(1.0);
    2.0 / std::f64::consts::PI * (e.asin() + e * (1.0 - e * e).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_on_a_line() {
        let mut proj = vec![(0.0, 1.0), (0.1, 1.0), (0.15, 1.0), (0.9, 1.0)];
        let r = best_windows(&mut proj, 1.0, &[0.01, 0.05, 0.1, 0.5]).unwrap();
        assert_eq!(r, vec![0.25, 0.5, 0.75, 1.0]);
        assert!(best_windows(&mut [], 1.0, &[0.1]).is_none());
    }

    #[test]
    fn disk_fraction_limits() {
        assert_eq!(disk_slab_fraction(0.0), 0.0);
        assert!((disk_slab_fraction(1.0) - 1.0).abs() < 1e-15);
    }
}
