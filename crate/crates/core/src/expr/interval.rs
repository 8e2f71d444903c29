//! Outward-padded interval arithmetic used for domain checks.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

// Relative padding applied after every operation to absorb rounding.
const PAD: f64 = 4.0 * f64::EPSILON;

fn down(x: f64) -> f64 {
    if x.is_finite() {
        x - PAD * x.abs() - f64::MIN_POSITIVE
    } else {
        x
    }
}

fn up(x: f64) -> f64 {
    if x.is_finite() {
        x + PAD * x.abs() + f64::MIN_POSITIVE
    } else {
        x
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "empty interval {lo}..{hi}");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    fn padded(lo: f64, hi: f64) -> Self {
        Self {
            lo: down(lo),
            hi: up(hi),
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && self.hi >= 0.0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn ln(self) -> Self {
        Self::padded(self.lo.ln(), self.hi.ln())
    }

    pub fn exp(self) -> Self {
        Self::padded(self.lo.exp(), self.hi.exp()).clamp_nonneg()
    }

    fn clamp_nonneg(mut self) -> Self {
        self.lo = self.lo.max(0.0);
        self
    }

    pub fn sqr(self) -> Self {
        if self.lo >= 0.0 {
            Self::padded(self.lo * self.lo, self.hi * self.hi)
        } else if self.hi <= 0.0 {
            Self::padded(self.hi * self.hi, self.lo * self.lo)
        } else {
            Self::padded(0.0, (self.lo * self.lo).max(self.hi * self.hi)).clamp_nonneg()
        }
    }

    pub fn powi(self, k: i32) -> Self {
        if k == 0 {
            return Self::point(1.0);
        }
        if k < 0 {
            return Self::point(1.0) / self.powi(-k);
        }
        let mut result = Self::point(1.0);
        let mut base = self;
        let mut e = k as u32;
        // Even powers go through `sqr` so that intervals straddling zero stay tight.
        while e > 0 {
            if e & 1 == 1 {
                result = result * base;
            }
            e >>= 1;
            if e > 0 {
                base = base.sqr();
            }
        }
        if k % 2 == 0 {
            result = result.clamp_nonneg();
        }
        result
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval::padded(self.lo + o.lo, self.hi + o.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval::padded(self.lo - o.hi, self.hi - o.lo)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let c = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        // 0 * inf is NaN; treat it as 0.
        let c = c.map(|x| if x.is_nan() { 0.0 } else { x });
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval::padded(lo, hi)
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, o: Interval) -> Interval {
        if o.contains_zero() {
            return Interval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            };
        }
        self * Interval::padded(1.0 / o.hi, 1.0 / o.lo)
    }
}

/// A box of radial coordinates `r_j`, one interval per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialBox {
    ranges: Vec<Interval>,
}

impl RadialBox {
    pub fn new(ranges: Vec<Interval>) -> Self {
        Self { ranges }
    }

    /// The closed unit polydisc in radial coordinates, `[0,1]^n`.
    pub fn unit(n: usize) -> Self {
        Self::new(vec![Interval::new(0.0, 1.0); n])
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn get(&self, j: usize) -> Option<Interval> {
        self.ranges.get(j).copied()
    }

    pub fn ranges(&self) -> &[Interval] {
        &self.ranges
    }

    pub fn r2sum(&self) -> Interval {
        self.ranges
            .iter()
            .fold(Interval::point(0.0), |acc, r| acc + r.sqr())
    }

    /// Splits along the widest coordinate.
    pub fn bisect(&self) -> (RadialBox, RadialBox) {
        let (j, _) = self
            .ranges
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.width().total_cmp(&b.1.width()))
            .expect("non-empty box");
        let r = self.ranges[j];
        let mid = 0.5 * (r.lo + r.hi);
        let mut left = self.clone();
        let mut right = self.clone();
        left.ranges[j] = Interval::new(r.lo, mid);
        right.ranges[j] = Interval::new(mid, r.hi);
        (left, right)
    }
}
