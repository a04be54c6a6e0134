use serde::{Deserialize, Serialize};

/// Real polynomial with coefficients stored in ascending-degree order:
/// `coeffs[k]` multiplies `t^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect(),
        )
    }

    /// Real roots in `[lo, hi]`, isolated recursively between the critical
    /// points (on each monotone piece there is at most one root).
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self.coeffs.len() {
            0 | 1 => Vec::new(),
            2 => {
                let r = -self.coeffs[0] / self.coeffs[1];
                if lo <= r && r <= hi {
                    vec![r]
                } else {
                    Vec::new()
                }
            }
            _ => {
                let mut knots = vec![lo];
                knots.extend(self.derivative().roots_in(lo, hi));
                knots.push(hi);
                let mut roots: Vec<f64> = Vec::new();
                for w in knots.windows(2) {
                    if let Some(r) = self.bisect(w[0], w[1]) {
                        if roots.last().is_none_or(|p| (r - p).abs() > 1e-12 * (1.0 + r.abs())) {
                            roots.push(r);
                        }
                    }
                }
                roots
            }
        }
    }

    fn bisect(&self, mut a: f64, mut b: f64) -> Option<f64> {
        let (mut fa, fb) = (self.eval(a), self.eval(b));
        if fa == 0.0 {
            return Some(a);
        }
        if fb == 0.0 {
            return Some(b);
        }
        if fa.signum() == fb.signum() {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let fm = self.eval(mid);
            if fm == 0.0 {
                return Some(mid);
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        Some(0.5 * (a + b))
    }

    /// Exact `(min, max)` of the polynomial over `[lo, hi]`, attained at an
    /// endpoint or a critical point.
    pub fn range_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut candidates = vec![lo, hi];
        candidates.extend(self.derivative().roots_in(lo, hi));
        candidates.iter().map(|&t| self.eval(t)).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(mn, mx), v| (mn.min(v), mx.max(v)),
        )
    }

    pub fn abs_max_on(&self, lo: f64, hi: f64) -> f64 {
        let (mn, mx) = self.range_on(lo, hi);
        mn.abs().max(mx.abs())
    }
}
