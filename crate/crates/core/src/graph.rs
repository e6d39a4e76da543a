//! Scalar maximal monotone graphs and their single-valued companions
//! (inverse, resolvent, Yosida approximation).

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` of values a graph takes at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphValue {
    pub lo: f64,
    pub hi: f64,
}

impl GraphValue {
    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Distance from `v` to the interval, zero inside.
    pub fn distance(&self, v: f64) -> f64 {
        if v < self.lo {
            self.lo - v
        } else if v > self.hi {
            v - self.hi
        } else {
            0.0
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }
}

/// A maximal monotone relation on the real line, accessed through its
/// resolvent `(I + λβ)⁻¹`.
pub trait MonotoneGraph {
    /// Whether `(r, value)` belongs to the graph.
    fn contains(&self, r: f64, value: f64) -> bool;

    /// The unique `v` with `r ∈ v + λβ(v)`.
    fn resolvent(&self, lambda: f64, r: f64) -> Result<f64>;

    /// Derivative of the Moreau-Yosida regularized potential,
    /// `β_λ(r) = (r - (I + λβ)⁻¹ r) / λ`. Lipschitz with constant `1/λ`.
    fn yosida(&self, lambda: f64, r: f64) -> Result<f64> {
        let v = self.resolvent(lambda, r)?;
        Ok((r - v) / lambda)
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveLambda(lambda))
    }
}

/// Piecewise-linear monotone graph with one vertical segment:
///
/// ```text
///   value(r) = lo + slope_below·(r - kink)   r < kink
///            = [lo, hi]                       r = kink
///            = hi + slope_above·(r - kink)   r > kink
/// ```
///
/// Both slopes are positive, so the inverse is a single-valued Lipschitz
/// function. The hydrate phase relation at a fixed position is of this
/// form, and so is every translate of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkedGraph {
    pub kink: f64,
    pub lo: f64,
    pub hi: f64,
    pub slope_below: f64,
    pub slope_above: f64,
}

impl KinkedGraph {
    pub fn new(kink: f64, lo: f64, hi: f64, slope_below: f64, slope_above: f64) -> Result<Self> {
        let finite = [kink, lo, hi, slope_below, slope_above]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidLaw("graph parameters must be finite".into()));
        }
        if lo > hi {
            return Err(Error::InvalidLaw("vertical segment must satisfy lo <= hi".into()));
        }
        if slope_below <= 0.0 || slope_above <= 0.0 {
            return Err(Error::InvalidLaw("graph slopes must be positive".into()));
        }
        Ok(Self { kink, lo, hi, slope_below, slope_above })
    }

    pub fn eval(&self, r: f64) -> GraphValue {
        if r < self.kink {
            GraphValue::point(self.lo + self.slope_below * (r - self.kink))
        } else if r > self.kink {
            GraphValue::point(self.hi + self.slope_above * (r - self.kink))
        } else {
            GraphValue { lo: self.lo, hi: self.hi }
        }
    }

    /// Single-valued inverse `β⁻¹(u)`.
    pub fn inverse(&self, u: f64) -> f64 {
        if u < self.lo {
            self.kink + (u - self.lo) / self.slope_below
        } else if u > self.hi {
            self.kink + (u - self.hi) / self.slope_above
        } else {
            self.kink
        }
    }

    /// Element of the generalized derivative of [`Self::inverse`]; at the
    /// two kinks the slope of the branch on the left is used.
    pub fn inverse_slope(&self, u: f64) -> f64 {
        if u <= self.lo {
            1.0 / self.slope_below
        } else if u <= self.hi {
            0.0
        } else {
            1.0 / self.slope_above
        }
    }

    /// Closed-form resolvent, no validation of `lambda`. The sloped
    /// branches are written through their intercepts so that a branch
    /// through the origin maps `0` to `0` exactly.
    pub(crate) fn resolvent_unchecked(&self, lambda: f64, r: f64) -> f64 {
        let lower = self.kink + lambda * self.lo;
        let upper = self.kink + lambda * self.hi;
        if r < lower {
            let intercept = self.lo - self.slope_below * self.kink;
            (r - lambda * intercept) / (1.0 + lambda * self.slope_below)
        } else if r > upper {
            let intercept = self.hi - self.slope_above * self.kink;
            (r - lambda * intercept) / (1.0 + lambda * self.slope_above)
        } else {
            self.kink
        }
    }

    /// Generalized derivative of the resolvent in `r`; at the two kinks
    /// the slope of the branch on the left is used.
    pub(crate) fn resolvent_slope(&self, lambda: f64, r: f64) -> f64 {
        if r <= self.kink + lambda * self.lo {
            1.0 / (1.0 + lambda * self.slope_below)
        } else if r <= self.kink + lambda * self.hi {
            0.0
        } else {
            1.0 / (1.0 + lambda * self.slope_above)
        }
    }

    /// Branch of `r` for the resolvent: 0 below the segment window, 1 on
    /// it, 2 above.
    pub(crate) fn resolvent_branch(&self, lambda: f64, r: f64) -> u8 {
        if r <= self.kink + lambda * self.lo {
            0
        } else if r <= self.kink + lambda * self.hi {
            1
        } else {
            2
        }
    }

    /// Yosida approximation and its generalized derivative written in the
    /// offset `d = r - kink`. The segment branch is `d/μ`; evaluating in the
    /// offset keeps full precision when `μ` is tiny.
    pub(crate) fn yosida_offset(&self, mu: f64, d: f64) -> (f64, f64) {
        if d <= mu * self.lo {
            let s = 1.0 + mu * self.slope_below;
            ((self.lo + self.slope_below * d) / s, self.slope_below / s)
        } else if d <= mu * self.hi {
            (d / mu, 1.0 / mu)
        } else {
            let s = 1.0 + mu * self.slope_above;
            ((self.hi + self.slope_above * d) / s, self.slope_above / s)
        }
    }

    /// `ξ ↦ β(shift + ξ) - offset`.
    pub fn translated(&self, shift: f64, offset: f64) -> Self {
        Self {
            kink: self.kink - shift,
            lo: self.lo - offset,
            hi: self.hi - offset,
            ..*self
        }
    }

    /// Fraction of the vertical segment reached by `u`, `(u - lo)⁺/(hi - lo)`.
    /// For the hydrate law this is the hydrate saturation; it exceeds one on
    /// the extension branch. A graph without a segment reports infinity for
    /// any `u > lo`.
    pub fn saturation(&self, u: f64) -> f64 {
        let excess = (u - self.lo).max(0.0);
        if excess == 0.0 {
            0.0
        } else {
            excess / (self.hi - self.lo)
        }
    }

    /// Lipschitz constant of the inverse.
    pub fn inverse_lipschitz(&self) -> f64 {
        (1.0 / self.slope_below).max(1.0 / self.slope_above)
    }
}

impl MonotoneGraph for KinkedGraph {
    fn contains(&self, r: f64, value: f64) -> bool {
        self.eval(r).contains(value)
    }

    fn resolvent(&self, lambda: f64, r: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(self.resolvent_unchecked(lambda, r))
    }

    fn yosida(&self, lambda: f64, r: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(self.yosida_offset(lambda, r - self.kink).0)
    }
}

/// Subdifferential of the indicator of `[0, ∞)`: `{0}` for `r > 0`,
/// `(-∞, 0]` at `r = 0`, empty for `r < 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PositiveIndicator;

impl MonotoneGraph for PositiveIndicator {
    fn contains(&self, r: f64, value: f64) -> bool {
        (r > 0.0 && value == 0.0) || (r == 0.0 && value <= 0.0)
    }

    fn resolvent(&self, lambda: f64, r: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(r.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hydrate() -> KinkedGraph {
        KinkedGraph::new(0.04, 0.04, 0.1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn indicator_yosida_is_negative_part_over_lambda() {
        let y = PositiveIndicator.yosida(0.1, -0.3).unwrap();
        assert!((y + 3.0).abs() < 1e-12);
        assert_eq!(PositiveIndicator.yosida(0.1, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_lambda() {
        assert!(matches!(hydrate().resolvent(0.0, 1.0), Err(Error::NonPositiveLambda(_))));
        assert!(hydrate().yosida(-1.0, 1.0).is_err());
        assert!(PositiveIndicator.resolvent(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn rejects_degenerate_graphs() {
        assert!(KinkedGraph::new(0.0, 1.0, 0.5, 1.0, 1.0).is_err());
        assert!(KinkedGraph::new(0.0, 0.0, 0.5, 0.0, 1.0).is_err());
        assert!(KinkedGraph::new(0.0, 0.0, 0.5, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn translation_moves_the_kink() {
        let g = hydrate().translated(0.01, 0.01);
        assert!((g.kink - 0.03).abs() < 1e-15);
        assert!(g.eval(0.0).contains(0.0));
        for r in [-0.2, 0.0, 0.01, 0.05, 0.3] {
            let lhs = g.resolvent(0.7, r).unwrap();
            // (I + λβ̃)⁻¹ r = (I + λβ)⁻¹(r + s + λ·o) - s
            let rhs = hydrate().resolvent(0.7, r + 0.01 + 0.7 * 0.01).unwrap() - 0.01;
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }
}
