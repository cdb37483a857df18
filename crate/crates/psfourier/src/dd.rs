//! Double-double arithmetic: an unevaluated sum `hi + lo` with about 106 bits
//! of significand. Only the ring operations are provided; that is all the
//! matrix products need.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl AddAssign for Dd {
    #[inline]
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

/// Square `n × n` matrix of double-doubles, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DdMat {
    n: usize,
    a: Vec<Dd>,
}

impl DdMat {
    pub fn zeros(n: usize) -> Self {
        DdMat {
            n,
            a: vec![Dd::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = Dd::ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Dd) -> Self {
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                a.push(f(i, j));
            }
        }
        DdMat { n, a }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Dd {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Dd) {
        self.a[i * self.n + j] = v;
    }

    pub fn mul(&self, b: &DdMat) -> DdMat {
        let n = self.n;
        let mut out = DdMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik.hi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let t = aik * b.a[k * n + j];
                    out.a[i * n + j] += t;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DdMat {
        DdMat::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn mul_vec(&self, v: &[Dd]) -> Vec<Dd> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut s = Dd::ZERO;
                for (a, x) in self.a[i * n..(i + 1) * n].iter().zip(v) {
                    s += *a * *x;
                }
                s
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0, |m, x| m.max(x.to_f64().abs()))
    }

    pub fn entries(&self) -> &[Dd] {
        &self.a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_keeps_low_part() {
        let a = Dd::new(1.0 + f64::EPSILON);
        let p = a * a;
        // (1+e)^2 = 1 + 2e + e^2; the e^2 term survives in lo
        assert_eq!(p.hi, 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(p.lo, f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn cancellation() {
        let a = Dd::new(1e16) + Dd::new(1.0);
        let b = a - Dd::new(1e16);
        assert_eq!(b.to_f64(), 1.0);
    }

    #[test]
    fn matrix_identity() {
        let m = DdMat::from_fn(3, |i, j| Dd::new((i * 3 + j) as f64));
        assert_eq!(m.mul(&DdMat::identity(3)), m);
    }
}
