//! Closed-form solution of pure advection of a methane pulse through a
//! solubility profile that decreases linearly upward.
//!
//! Data: inflow fraction `χ_L` supplied for a duration `L/q`, constant
//! flux `q > 0`, `χ*(x) = χ*(0) + γ x` with `γ < 0` on `(0, D_max)`, and
//! `χ*(0) > χ_L ≥ χ*(D_max)`. Until the pulse tail arrives at `x`
//! (`t ≤ (x + L)/q`) the solution is
//!
//! ```text
//!   χ(x, t) = min(χ_L, χ*(x))                         for x < q t, else 0
//!   S(x, t) = (t - x/q)⁺ q (-γ) / (R - χ*(x))         for x ≥ x_L, else 0
//! ```
//!
//! where `χ*(x_L) = χ_L` marks the free boundary beyond which hydrate
//! forms.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::phase::PhaseLaw;

/// Relative slack for comparisons that are exact in real arithmetic.
const ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvectionScenario {
    pub chi_l: f64,
    pub pulse_length: f64,
    pub q: f64,
    /// `χ*(0)`.
    pub chi_star0: f64,
    /// `∂_x χ*`, negative.
    pub gradient: f64,
    pub ceiling: f64,
    pub d_max: f64,
}

/// Safe-pulse margin `max_{x ∈ [x_L, D_max]} L (-∂_x χ*)/(R - χ*(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafePulse {
    pub margin: f64,
    /// Where the margin is attained.
    pub at: f64,
    pub safe: bool,
}

/// Partition of `(0, D_max)` at one time: `G₋` (dissolved, no hydrate),
/// `G₀` (hydrate forming, `χ = χ*`) and `G₊` (ahead of the front).
/// Empty zones are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zones {
    pub minus: Option<(f64, f64)>,
    pub zero: Option<(f64, f64)>,
    pub plus: Option<(f64, f64)>,
}

impl AdvectionScenario {
    pub fn new(
        chi_l: f64,
        pulse_length: f64,
        q: f64,
        chi_star0: f64,
        gradient: f64,
        ceiling: f64,
        d_max: f64,
    ) -> Result<Self> {
        let sc = Self { chi_l, pulse_length, q, chi_star0, gradient, ceiling, d_max };
        sc.check()?;
        Ok(sc)
    }

    /// Reads `χ*` and `R` from a phase law that is affine on `[0, D_max]`
    /// with unit porosity.
    pub fn from_law(
        law: &PhaseLaw,
        chi_l: f64,
        pulse_length: f64,
        q: f64,
        d_max: f64,
    ) -> Result<Self> {
        if !(d_max > 0.0) {
            return Err(Error::HypothesisViolated(format!("D_max must be positive, got {d_max}")));
        }
        let c0 = law.chi_star_at(0.0);
        let c1 = law.chi_star_at(d_max);
        let gradient = (c1 - c0) / d_max;
        let affine = (1..16).all(|k| {
            let x = d_max * k as f64 / 16.0;
            (law.chi_star_at(x) - (c0 + gradient * x)).abs() <= 1e-12 * (1.0 + c0.abs())
        });
        if !affine {
            return Err(Error::HypothesisViolated(
                "solubility profile must be affine on (0, D_max)".into(),
            ));
        }
        if law.phi.min_on(0.0, d_max) != 1.0 || law.phi.max_on(0.0, d_max) != 1.0 {
            return Err(Error::HypothesisViolated("porosity must be 1 on (0, D_max)".into()));
        }
        Self::new(chi_l, pulse_length, q, c0, gradient, law.ceiling, d_max)
    }

    fn check(&self) -> Result<()> {
        let mut bad = Vec::new();
        let vals = [
            self.chi_l,
            self.pulse_length,
            self.q,
            self.chi_star0,
            self.gradient,
            self.ceiling,
            self.d_max,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            bad.push("parameters must be finite".into());
        }
        if !(self.q > 0.0) {
            bad.push(format!("flux must be positive, got {}", self.q));
        }
        if !(self.gradient < 0.0) {
            bad.push(format!("solubility must strictly decrease, slope {}", self.gradient));
        }
        if !(self.d_max > 0.0) {
            bad.push(format!("D_max must be positive, got {}", self.d_max));
        }
        if !(self.pulse_length >= 0.0) {
            bad.push(format!("pulse length must be non-negative, got {}", self.pulse_length));
        }
        let top = self.chi_star(self.d_max);
        let slack = ROUNDING * self.chi_star0.abs();
        if !(self.chi_star0 > self.chi_l && self.chi_l >= top - slack) {
            bad.push(format!(
                "need χ*(0) > χ_L ≥ χ*(D_max): {} > {} ≥ {}",
                self.chi_star0, self.chi_l, top
            ));
        }
        if !(top > 0.0 && self.chi_star0 < self.ceiling) {
            bad.push(format!("need 0 < χ*(x) < R on (0, D_max) with R = {}", self.ceiling));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::HypothesisViolated(bad.join("; ")))
        }
    }

    pub fn chi_star(&self, x: f64) -> f64 {
        self.chi_star0 + self.gradient * x
    }

    /// Breakthrough time `x/q`.
    pub fn arrival_time(&self, x: f64) -> f64 {
        x / self.q
    }

    /// Whether the closed form holds at `(x, t)`: `0 ≤ x ≤ D_max` and
    /// `0 ≤ t ≤ (x + L)/q`.
    pub fn is_valid(&self, x: f64, t: f64) -> bool {
        (0.0..=self.d_max).contains(&x) && t >= 0.0 && t <= (x + self.pulse_length) / self.q
    }

    fn require_valid(&self, x: f64, t: f64) -> Result<()> {
        if self.is_valid(x, t) {
            Ok(())
        } else {
            Err(Error::OutsideValidity { x, t })
        }
    }

    /// Free boundary `x_L` with `χ*(x_L) = χ_L`.
    pub fn free_boundary(&self) -> f64 {
        (self.chi_l - self.chi_star0) / self.gradient
    }

    /// Whether `x` lies in the closure of the hydrate-forming side of the
    /// free boundary, up to rounding.
    fn beyond_free_boundary(&self, x: f64) -> bool {
        x >= self.free_boundary() - ROUNDING * self.d_max
    }

    pub fn chi(&self, x: f64, t: f64) -> Result<f64> {
        self.require_valid(x, t)?;
        Ok(if x < self.q * t { self.chi_l.min(self.chi_star(x)) } else { 0.0 })
    }

    pub fn saturation(&self, x: f64, t: f64) -> Result<f64> {
        self.require_valid(x, t)?;
        if !self.beyond_free_boundary(x) {
            return Ok(0.0);
        }
        let elapsed = (t - self.arrival_time(x)).max(0.0);
        Ok(elapsed * self.q * (-self.gradient) / (self.ceiling - self.chi_star(x)))
    }

    /// Total content `(1 - S) χ + R S`.
    pub fn content(&self, x: f64, t: f64) -> Result<f64> {
        let s = self.saturation(x, t)?;
        let c = self.chi(x, t)?;
        Ok((1.0 - s) * c + self.ceiling * s)
    }

    /// Time at which `S(x, ·)` reaches one, for `x ≥ x_L`.
    pub fn blowup_time(&self, x: f64) -> Result<f64> {
        let xl = self.free_boundary();
        if !self.beyond_free_boundary(x) {
            return Err(Error::HypothesisViolated(format!(
                "no hydrate forms below the free boundary x_L = {xl}, got x = {x}"
            )));
        }
        Ok(self.arrival_time(x) + (self.ceiling - self.chi_star(x)) / (self.q * -self.gradient))
    }

    /// Earliest blow-up time over `[x_L, D_max]`.
    pub fn earliest_blowup(&self) -> f64 {
        let a = self.blowup_time(self.free_boundary()).expect("x_L is admissible");
        let b = self.blowup_time(self.d_max).expect("D_max ≥ x_L");
        a.min(b)
    }

    pub fn safe_pulse(&self) -> SafePulse {
        let xl = self.free_boundary();
        let margin_at = |x: f64| self.pulse_length * (-self.gradient) / (self.ceiling - self.chi_star(x));
        // χ* decreases, so R - χ* increases and the margin is largest at x_L
        let (at, margin) = (xl, margin_at(xl));
        SafePulse { margin, at, safe: margin < 1.0 }
    }

    pub fn zones(&self, t: f64) -> Zones {
        let front = (self.q * t).clamp(0.0, self.d_max);
        let xl = self.free_boundary();
        let interval = |a: f64, b: f64| (b > a).then_some((a, b));
        Zones {
            minus: interval(0.0, front.min(xl)),
            zero: interval(xl, front),
            plus: interval(front, self.d_max),
        }
    }
}
