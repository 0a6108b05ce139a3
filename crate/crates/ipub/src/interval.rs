//! Interval arithmetic primitives for the interval-Newton baseline.
//!
//! Enclosures are widened by a fixed `1e-12` outward epsilon per arithmetic
//! primitive instead of directed rounding; this is a desk-scale comparison
//! baseline, not certified computing. Division by an interval containing
//! zero is an enclosure failure, not a wrapped result.

use crate::error::IpubError;

/// Outward widening applied by each arithmetic primitive.
pub const OUTWARD_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// A box enclosure of a weight vector, one interval per coordinate.
pub type IntervalBox = Vec<Interval>;

#[inline]
fn widen(lo: f64, hi: f64) -> Interval {
    Interval { lo: lo - OUTWARD_EPS, hi: hi + OUTWARD_EPS }
}

/// `a * b` that treats `0 * inf` as 0, the interval-arithmetic convention.
#[inline]
fn safe_mul(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval ordering: [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    #[inline]
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    #[inline]
    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }

    pub fn add(&self, rhs: &Interval) -> Interval {
        widen(self.lo + rhs.lo, self.hi + rhs.hi)
    }

    pub fn sub(&self, rhs: &Interval) -> Interval {
        widen(self.lo - rhs.hi, self.hi - rhs.lo)
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }

    pub fn mul(&self, rhs: &Interval) -> Interval {
        let products = [
            safe_mul(self.lo, rhs.lo),
            safe_mul(self.lo, rhs.hi),
            safe_mul(self.hi, rhs.lo),
            safe_mul(self.hi, rhs.hi),
        ];
        let lo = products.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        widen(lo, hi)
    }

    pub fn mul_scalar(&self, k: f64) -> Interval {
        if k >= 0.0 {
            widen(safe_mul(k, self.lo), safe_mul(k, self.hi))
        } else {
            widen(safe_mul(k, self.hi), safe_mul(k, self.lo))
        }
    }

    pub fn add_scalar(&self, k: f64) -> Interval {
        widen(self.lo + k, self.hi + k)
    }

    pub fn recip(&self) -> Result<Interval, IpubError> {
        if self.contains_zero() {
            return Err(IpubError::EnclosureFailure(format!(
                "reciprocal of [{}, {}] containing zero",
                self.lo, self.hi
            )));
        }
        Ok(widen(1.0 / self.hi, 1.0 / self.lo))
    }

    pub fn div(&self, rhs: &Interval) -> Result<Interval, IpubError> {
        Ok(self.mul(&rhs.recip()?))
    }

    /// Monotone endpoint map of `exp`.
    pub fn exp(&self) -> Interval {
        widen(self.lo.exp(), self.hi.exp())
    }
}

/// Interval dot product of a box with a real vector.
pub fn dot_scalar(box_: &[Interval], x: &[f64]) -> Interval {
    debug_assert_eq!(box_.len(), x.len());
    let mut acc = Interval::point(0.0);
    for (iv, &xi) in box_.iter().zip(x) {
        acc = acc.add(&iv.mul_scalar(xi));
    }
    acc
}

/// Interval dot product of a box with an interval vector.
pub fn dot(box_: &[Interval], x: &[Interval]) -> Interval {
    debug_assert_eq!(box_.len(), x.len());
    let mut acc = Interval::point(0.0);
    for (a, b) in box_.iter().zip(x) {
        acc = acc.add(&a.mul(b));
    }
    acc
}

/// Degenerate box at a point vector.
pub fn point_box(v: &[f64]) -> IntervalBox {
    v.iter().map(|&x| Interval::point(x)).collect()
}
