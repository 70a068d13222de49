//! Floating-point and interval evaluation of a fixed polynomial.
//!
//! The samplers evaluate the same polynomial millions of times, so the exact
//! rational terms are flattened once into `f64` coefficients and sparse
//! exponent lists.

use super::{rational_to_f64, Polynomial};

/// Closed interval `[lo, hi]` of reals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn symmetric(r: f64) -> Self {
        Interval { lo: -r, hi: r }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest `|v|` over the interval.
    pub fn mig(&self) -> f64 {
        if self.lo > 0.0 {
            self.lo
        } else if self.hi < 0.0 {
            -self.hi
        } else {
            0.0
        }
    }

    pub fn mul(self, o: Interval) -> Interval {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Interval {
            lo: p.iter().copied().fold(f64::INFINITY, f64::min),
            hi: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn scale(self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval::new(self.lo * c, self.hi * c)
        } else {
            Interval::new(self.hi * c, self.lo * c)
        }
    }

    pub fn powi(self, e: u32) -> Interval {
        match e {
            0 => Interval::point(1.0),
            1 => self,
            _ if e % 2 == 1 => Interval::new(self.lo.powi(e as i32), self.hi.powi(e as i32)),
            _ => {
                let (a, b) = (self.lo.abs().powi(e as i32), self.hi.abs().powi(e as i32));
                if self.lo <= 0.0 && self.hi >= 0.0 {
                    Interval::new(0.0, a.max(b))
                } else {
                    Interval::new(a.min(b), a.max(b))
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Term {
    coef: f64,
    factors: Vec<(usize, u32)>,
}

/// A polynomial flattened for repeated floating-point evaluation.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    nvars: usize,
    terms: Vec<Term>,
}

impl CompiledPoly {
    pub fn new(p: &Polynomial) -> Self {
        let terms = p
            .terms()
            .map(|(m, c)| Term {
                coef: rational_to_f64(c),
                factors: m
                    .exponents()
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| **e > 0)
                    .map(|(pos, e)| (pos, *e))
                    .collect(),
            })
            .collect();
        CompiledPoly {
            nvars: p.nvars(),
            terms,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    #[inline]
    pub fn eval(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.nvars);
        let mut acc = 0.0;
        for t in &self.terms {
            let mut v = t.coef;
            for &(pos, e) in &t.factors {
                v *= match e {
                    1 => point[pos],
                    2 => point[pos] * point[pos],
                    _ => point[pos].powi(e as i32),
                };
            }
            acc += v;
        }
        acc
    }

    /// Enclosure of the range over a box. The result is widened slightly so
    /// that floating-point rounding cannot make it too narrow.
    pub fn eval_interval(&self, boxes: &[Interval]) -> Interval {
        debug_assert_eq!(boxes.len(), self.nvars);
        let mut lo = 0.0;
        let mut hi = 0.0;
        let mut mag = 0.0;
        for t in &self.terms {
            let mut v = Interval::point(1.0);
            for &(pos, e) in &t.factors {
                v = v.mul(boxes[pos].powi(e));
            }
            let v = v.scale(t.coef);
            lo += v.lo;
            hi += v.hi;
            mag += v.mag();
        }
        let pad = mag * 1e-13 + f64::MIN_POSITIVE;
        Interval::new(lo - pad, hi + pad)
    }
}
