//! Matrix model of hyperbolic space attached to the form
//! `Q(x) = 2 x_0 x_{d+1} - |x_mid|^2` and its orientation preserving
//! isometries `SO(Q)`.
//!
//! Group elements carry double-double entries so that products of a dozen
//! loxodromics still satisfy `g^T J g = J` to ~1e-11.

use nalgebra::DMatrix;
use rand::Rng;

use crate::dd::{Dd, DdMat};
use crate::error::{check_len, Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub d: usize,
    pub tol: f64,
}

/// Bilinear form of `Q`, so that `bilinear(x, x) = Q(x)`.
pub fn bilinear(x: &[f64], y: &[f64]) -> f64 {
    bilinear_dd(x, y).to_f64()
}

/// Same as [`bilinear`] but accumulated in double-double.
pub fn bilinear_dd(x: &[f64], y: &[f64]) -> Dd {
    let n = x.len();
    let mut s = Dd::new(x[0]) * Dd::new(y[n - 1]) + Dd::new(x[n - 1]) * Dd::new(y[0]);
    for i in 1..n - 1 {
        s = s - Dd::new(x[i]) * Dd::new(y[i]);
    }
    s
}

fn recip_dd(a: f64) -> Dd {
    let r = 1.0 / a;
    let res = Dd::ONE - Dd::new(a) * Dd::new(r);
    Dd::new(r) + res.mul_f64(r)
}

fn half_norm_sq_dd(x: &[f64]) -> Dd {
    let mut s = Dd::ZERO;
    for &v in x {
        s += Dd::new(v) * Dd::new(v);
    }
    s.mul_f64(0.5)
}

impl ModelParams {
    pub fn new(d: usize, tol: f64) -> Result<Self> {
        if d < 1 {
            return Err(Error::Validation("boundary dimension d must be at least 1".into()));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::Validation(format!("tolerance must be positive, got {tol}")));
        }
        Ok(ModelParams { d, tol })
    }

    pub fn with_dim(d: usize) -> Result<Self> {
        Self::new(d, DEFAULT_TOL)
    }

    /// Ambient matrix size `d + 2`.
    pub fn size(&self) -> usize {
        self.d + 2
    }

    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        check_len(self.size(), x.len())?;
        Ok(bilinear(x, x))
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.size())
    }

    pub fn geodesic_flow(&self, t: f64) -> GroupElement {
        let n = self.size();
        let et = t.exp();
        let mut m = DdMat::identity(n);
        m.set(0, 0, Dd::new(et));
        m.set(n - 1, n - 1, recip_dd(et));
        GroupElement { m }
    }

    pub fn unipotent_plus(&self, x: &[f64]) -> Result<GroupElement> {
        check_len(self.d, x.len())?;
        let n = self.size();
        let mut m = DdMat::identity(n);
        for (i, &xi) in x.iter().enumerate() {
            m.set(0, i + 1, Dd::new(xi));
            m.set(i + 1, n - 1, Dd::new(xi));
        }
        m.set(0, n - 1, half_norm_sq_dd(x));
        Ok(GroupElement { m })
    }

    pub fn unipotent_minus(&self, y: &[f64]) -> Result<GroupElement> {
        Ok(GroupElement {
            m: self.unipotent_plus(y)?.m.transpose(),
        })
    }

    /// Embeds a rotation `m` of the chart as `diag(1, m, 1)`.
    pub fn rotation_embed(&self, m: &DMatrix<f64>) -> Result<GroupElement> {
        check_rotation(m, self.d, self.tol)?;
        let n = self.size();
        let mut g = DdMat::identity(n);
        for i in 0..self.d {
            for j in 0..self.d {
                g.set(i + 1, j + 1, Dd::new(m[(i, j)]));
            }
        }
        Ok(GroupElement { m: g }.reproject())
    }

    pub fn chart_to_boundary(&self, x: &[f64]) -> Result<BoundaryPoint> {
        check_len(self.d, x.len())?;
        let mut v = Vec::with_capacity(self.size());
        v.push(half_norm_sq_dd(x).to_f64());
        v.extend_from_slice(x);
        v.push(1.0);
        Ok(BoundaryPoint { vec: v })
    }

    /// Chart coordinate of a boundary point; fails at `[e_0]`.
    pub fn boundary_from_chart_inverse(&self, xi: &BoundaryPoint) -> Result<Vec<f64>> {
        check_len(self.size(), xi.vec.len())?;
        chart_coords(&xi.vec, self.tol)
    }

    pub fn basepoint(&self) -> HyperbolicPoint {
        let n = self.size();
        let mut v = vec![0.0; n];
        v[0] = std::f64::consts::FRAC_1_SQRT_2;
        v[n - 1] = std::f64::consts::FRAC_1_SQRT_2;
        HyperbolicPoint { vec: v }
    }

    pub fn distance(&self, x: &HyperbolicPoint, y: &HyperbolicPoint) -> Result<f64> {
        check_len(self.size(), x.vec.len())?;
        check_len(self.size(), y.vec.len())?;
        let b = bilinear_dd(&x.vec, &y.vec).to_f64();
        if b < 1.0 - self.tol * b.abs().max(1.0) {
            return Err(Error::ModelViolation(format!("B(x, y) = {b} is below 1")));
        }
        let diff: Vec<Dd> = x
            .vec
            .iter()
            .zip(&y.vec)
            .map(|(a, c)| Dd::new(*a) - Dd::new(*c))
            .collect();
        Ok(distance_from_difference(&diff))
    }

    /// `log(B(x, xi) / B(y, xi))`; positive when `y` is closer to `xi`.
    pub fn busemann(&self, xi: &BoundaryPoint, x: &HyperbolicPoint, y: &HyperbolicPoint) -> Result<f64> {
        check_len(self.size(), xi.vec.len())?;
        check_len(self.size(), x.vec.len())?;
        check_len(self.size(), y.vec.len())?;
        busemann_raw(&xi.vec, &x.vec, &y.vec)
    }
}

pub(crate) fn busemann_raw(xi: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    let bx = bilinear_dd(x, xi).to_f64();
    let by = bilinear_dd(y, xi).to_f64();
    if !(bx > 0.0 && by > 0.0) {
        return Err(Error::Degenerate(format!("Busemann pairing not positive ({bx}, {by})")));
    }
    Ok((bx / by).ln())
}

fn quadratic_dd(v: &[Dd]) -> Dd {
    let n = v.len();
    let mut s = (v[0] * v[n - 1]).mul_f64(2.0);
    for x in &v[1..n - 1] {
        s = s - *x * *x;
    }
    s
}

/// For `x, y` on the hyperboloid, `-Q(x - y) = 4 sinh^2(d / 2)`; this stays
/// accurate for nearby points where `acosh(B)` does not.
fn distance_from_difference(diff: &[Dd]) -> f64 {
    let q = -quadratic_dd(diff).to_f64();
    2.0 * (0.5 * q.max(0.0).sqrt()).asinh()
}

pub(crate) fn chart_coords(v: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = v.len();
    let last = v[n - 1];
    let rest = v[1..n].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if last == 0.0 || rest <= tol * v[0].abs() {
        return Err(Error::PointAtInfinity);
    }
    Ok(v[1..n - 1].iter().map(|x| x / last).collect())
}

pub(crate) fn check_rotation(m: &DMatrix<f64>, d: usize, tol: f64) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            got: m.nrows(),
        });
    }
    let r = (m.transpose() * m - DMatrix::<f64>::identity(d, d)).amax();
    if r > tol {
        return Err(Error::Validation(format!(
            "matrix is not orthogonal (residual {r:.3e})"
        )));
    }
    let det = m.determinant();
    if (det - 1.0).abs() > tol.max(1e-12) {
        return Err(Error::Validation(format!("rotation has determinant {det}")));
    }
    Ok(())
}

/// Haar-random element of `SO(d)`.
pub fn random_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(d, d, |_, _| gaussian(rng));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    if q.determinant() < 0.0 {
        for i in 0..d {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; one draw per call keeps streams easy to reason about.
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Planar rotation by `theta`.
pub fn rotation2(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    m: DdMat,
}

#[inline]
fn sigma(i: usize, n: usize) -> usize {
    if i == 0 {
        n - 1
    } else if i == n - 1 {
        0
    } else {
        i
    }
}

#[inline]
fn sign(i: usize, n: usize) -> bool {
    i == 0 || i == n - 1
}

impl GroupElement {
    pub fn identity(size: usize) -> Self {
        GroupElement {
            m: DdMat::identity(size),
        }
    }

    /// Accepts a matrix preserving `Q` to `tol` with determinant `+1`, and
    /// snaps it onto `SO(Q)` in extended precision.
    pub fn from_matrix(mat: &DMatrix<f64>, tol: f64) -> Result<Self> {
        let n = mat.nrows();
        if n < 3 || mat.ncols() != n {
            return Err(Error::Dimension {
                expected: n.max(3),
                got: mat.ncols(),
            });
        }
        let g = GroupElement {
            m: DdMat::from_fn(n, |i, j| Dd::new(mat[(i, j)])),
        };
        let r = g.invariant_residual();
        if !(r <= tol) {
            return Err(Error::Validation(format!(
                "matrix does not preserve Q (residual {r:.3e})"
            )));
        }
        let det = mat.determinant();
        if !((det - 1.0).abs() <= tol) {
            return Err(Error::Validation(format!("determinant {det} is not +1")));
        }
        if mat[(0, 0)] + mat[(0, n - 1)] + mat[(n - 1, 0)] + mat[(n - 1, n - 1)] <= 0.0 {
            return Err(Error::Validation("matrix swaps the two sheets".into()));
        }
        Ok(g.reproject())
    }

    pub(crate) fn from_dd(m: DdMat) -> Self {
        GroupElement { m }
    }

    pub fn size(&self) -> usize {
        self.m.dim()
    }

    pub fn dim(&self) -> usize {
        self.m.dim() - 2
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m.get(i, j).to_f64()
    }

    pub fn dd(&self) -> &DdMat {
        &self.m
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            m: self.m.mul(&other.m),
        }
    }

    /// Product followed by re-projection when the residual exceeds `tol / 10`.
    pub fn compose_corrected(&self, other: &GroupElement, tol: f64) -> GroupElement {
        let p = self.compose(other);
        if p.invariant_residual() > tol / 10.0 {
            p.reproject()
        } else {
            p
        }
    }

    /// `J g^T J`, exact for elements of `SO(Q)`.
    pub fn inverse(&self) -> GroupElement {
        let n = self.size();
        GroupElement {
            m: DdMat::from_fn(n, |i, j| {
                let v = self.m.get(sigma(j, n), sigma(i, n));
                if sign(i, n) == sign(j, n) {
                    v
                } else {
                    -v
                }
            }),
        }
    }

    /// `max |g^T J g - J|`.
    pub fn invariant_residual(&self) -> f64 {
        let c = self.inverse().m.mul(&self.m);
        let n = self.size();
        let mut r = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut v = c.get(i, j);
                if i == j {
                    v = v - Dd::ONE;
                }
                r = r.max(v.to_f64().abs());
            }
        }
        r
    }

    /// Newton-Schulz steps toward the `J`-polar factor, `g <- g (3I - C)/2`
    /// with `C = J g^T J g`. A step is kept only if it lowers the residual,
    /// and none is tried once `C - I` is dominated by rounding of huge entries.
    pub fn reproject(&self) -> GroupElement {
        let n = self.size();
        let mut g = self.clone();
        let mut res = g.invariant_residual();
        for _ in 0..6 {
            if !(res > 1e-30 && res < 0.25) {
                break;
            }
            let c = g.inverse().m.mul(&g.m);
            let s = DdMat::from_fn(n, |i, j| {
                let cij = c.get(i, j);
                if i == j {
                    Dd::ONE - (cij - Dd::ONE).mul_f64(0.5)
                } else {
                    -cij.mul_f64(0.5)
                }
            });
            let next = GroupElement { m: g.m.mul(&s) };
            let r = next.invariant_residual();
            if !(r < res) {
                break;
            }
            g = next;
            res = r;
        }
        g
    }

    pub fn det(&self) -> f64 {
        self.matrix().determinant()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.matrix()
            .complex_eigenvalues()
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn apply_dd(&self, v: &[Dd]) -> Vec<Dd> {
        self.m.mul_vec(v)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let vd: Vec<Dd> = v.iter().map(|&x| Dd::new(x)).collect();
        self.apply_dd(&vd).into_iter().map(Dd::to_f64).collect()
    }

    pub fn act_point(&self, p: &HyperbolicPoint) -> HyperbolicPoint {
        HyperbolicPoint {
            vec: self.apply(&p.vec),
        }
    }

    pub fn act_boundary(&self, xi: &BoundaryPoint) -> BoundaryPoint {
        let mut v = self.apply(&xi.vec);
        let s = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if s > 0.0 && s.is_finite() {
            v.iter_mut().for_each(|x| *x /= s);
        }
        BoundaryPoint { vec: v }
    }

    /// Action on the chart (a Möbius transformation of `R^d`).
    pub fn act_chart(&self, x: &[f64], tol: f64) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        let mut v = Vec::with_capacity(self.size());
        v.push(half_norm_sq_dd(x));
        v.extend(x.iter().map(|&t| Dd::new(t)));
        v.push(Dd::ONE);
        let w: Vec<f64> = self.apply_dd(&v).into_iter().map(Dd::to_f64).collect();
        chart_coords(&w, tol)
    }

    /// `d(p, g p)`, evaluated from `B(p, g p)` in extended precision.
    pub fn displacement(&self, p: &HyperbolicPoint) -> f64 {
        let pd: Vec<Dd> = p.vec.iter().map(|&x| Dd::new(x)).collect();
        let gp = self.apply_dd(&pd);
        let diff: Vec<Dd> = gp.iter().zip(&pd).map(|(a, b)| *a - *b).collect();
        distance_from_difference(&diff)
    }

    pub fn max_abs_diff(&self, other: &GroupElement) -> f64 {
        let n = self.size();
        let mut r = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                r = r.max((self.m.get(i, j) - other.m.get(i, j)).to_f64().abs());
            }
        }
        r
    }
}

impl std::ops::Mul for &GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: &GroupElement) -> GroupElement {
        self.compose(rhs)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperbolicPoint {
    vec: Vec<f64>,
}

impl HyperbolicPoint {
    /// Checks `Q(v) = 1` (relative to `|v|^2`) and that `v` is on the future sheet.
    pub fn new(vec: Vec<f64>, tol: f64) -> Result<Self> {
        if vec.len() < 3 {
            return Err(Error::Dimension {
                expected: 3,
                got: vec.len(),
            });
        }
        let q = bilinear(&vec, &vec);
        let scale = vec.iter().fold(1.0f64, |m, x| m.max(x * x));
        if (q - 1.0).abs() > tol * scale {
            return Err(Error::ModelViolation(format!("Q(x) = {q}, expected 1")));
        }
        if vec[0] + vec[vec.len() - 1] <= 0.0 {
            return Err(Error::ModelViolation("point is on the past sheet".into()));
        }
        Ok(HyperbolicPoint { vec })
    }

    pub fn coords(&self) -> &[f64] {
        &self.vec
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPoint {
    vec: Vec<f64>,
}

impl BoundaryPoint {
    /// Any nonzero null vector; the future-pointing representative is kept.
    pub fn new(mut vec: Vec<f64>, tol: f64) -> Result<Self> {
        if vec.len() < 3 {
            return Err(Error::Dimension {
                expected: 3,
                got: vec.len(),
            });
        }
        let nsq: f64 = vec.iter().map(|x| x * x).sum();
        if nsq == 0.0 || !nsq.is_finite() {
            return Err(Error::Validation("boundary vector must be nonzero and finite".into()));
        }
        let q = bilinear(&vec, &vec);
        if q.abs() > tol * nsq {
            return Err(Error::ModelViolation(format!("vector is not null (Q = {q:.3e})")));
        }
        if vec[0] + vec[vec.len() - 1] < 0.0 {
            vec.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(BoundaryPoint { vec })
    }

    /// `[e_0]`, the point at infinity of the chart.
    pub fn infinity(d: usize) -> Self {
        let mut v = vec![0.0; d + 2];
        v[0] = 1.0;
        BoundaryPoint { vec: v }
    }

    pub fn coords(&self) -> &[f64] {
        &self.vec
    }

    /// Unit Euclidean norm, largest-magnitude coordinate positive.
    pub fn normalized(&self) -> Vec<f64> {
        let norm = self.vec.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut imax = 0;
        for (i, x) in self.vec.iter().enumerate() {
            if x.abs() > self.vec[imax].abs() {
                imax = i;
            }
        }
        let s = if self.vec[imax] < 0.0 { -norm } else { norm };
        self.vec.iter().map(|x| x / s).collect()
    }

    pub fn approx_eq(&self, other: &BoundaryPoint, tol: f64) -> bool {
        if self.vec.len() != other.vec.len() {
            return false;
        }
        let a = self.normalized();
        let b = other.normalized();
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }
}
