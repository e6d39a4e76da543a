//! Hydrate phase-equilibrium law: the position-dependent graph linking
//! dissolved mass fraction `χ` to total methane content `u`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{check_lambda, GraphValue, KinkedGraph, MonotoneGraph};
use crate::grid::Grid;

/// A scalar profile over position, evaluated by linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    Affine { intercept: f64, slope: f64 },
    /// `(x, value)` knots, strictly increasing in `x`; constant outside.
    Table(Vec<(f64, f64)>),
}

impl Profile {
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidLaw("profile table is empty".into()));
        }
        if points.iter().any(|(x, v)| !x.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidLaw("profile table has non-finite entries".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidLaw("profile table positions must increase".into()));
        }
        Ok(Profile::Table(points))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Affine { intercept, slope } => intercept + slope * x,
            Profile::Table(pts) => {
                let first = pts[0];
                let last = pts[pts.len() - 1];
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                let k = pts.partition_point(|p| p.0 <= x);
                let (x0, v0) = pts[k - 1];
                let (x1, v1) = pts[k];
                v0 + (v1 - v0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Derivative in `x` (right derivative at table knots).
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Profile::Constant(_) => 0.0,
            Profile::Affine { slope, .. } => *slope,
            Profile::Table(pts) => {
                if x < pts[0].0 || x >= pts[pts.len() - 1].0 {
                    return 0.0;
                }
                let k = pts.partition_point(|p| p.0 <= x);
                let (x0, v0) = pts[k - 1];
                let (x1, v1) = pts[k];
                (v1 - v0) / (x1 - x0)
            }
        }
    }

    /// Points of `[a, b]` where a piecewise-linear profile attains its
    /// extrema: the ends plus interior knots.
    fn critical_points(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = alloc::vec![a, b];
        if let Profile::Table(t) = self {
            pts.extend(t.iter().map(|p| p.0).filter(|&x| x > a && x < b));
        }
        pts
    }

    pub fn min_on(&self, a: f64, b: f64) -> f64 {
        self.critical_points(a, b)
            .into_iter()
            .map(|x| self.value(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_on(&self, a: f64, b: f64) -> f64 {
        self.critical_points(a, b)
            .into_iter()
            .map(|x| self.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_nonincreasing_on(&self, a: f64, b: f64) -> bool {
        let mut pts = self.critical_points(a, b);
        pts.sort_by(f64::total_cmp);
        pts.windows(2).all(|w| self.value(w[1]) <= self.value(w[0]))
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Profile::Constant(c) => c.is_finite(),
            Profile::Affine { intercept, slope } => intercept.is_finite() && slope.is_finite(),
            Profile::Table(t) => t.iter().all(|(x, v)| x.is_finite() && v.is_finite()),
        }
    }
}

/// Solubility profile `χ*(x)`, hydrate ceiling `R`, porosity `φ(x)` and the
/// slope of the affine continuation above `u = R`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseLaw {
    pub chi_star: Profile,
    pub ceiling: f64,
    pub phi: Profile,
    pub extension_slope: f64,
}

impl PhaseLaw {
    pub fn new(chi_star: Profile, ceiling: f64, phi: Profile, extension_slope: f64) -> Result<Self> {
        if !chi_star.is_finite() || !phi.is_finite() || !ceiling.is_finite() {
            return Err(Error::InvalidLaw("phase law parameters must be finite".into()));
        }
        if !(extension_slope > 0.0 && extension_slope.is_finite()) {
            return Err(Error::InvalidLaw(format!(
                "extension slope must be positive, got {extension_slope}"
            )));
        }
        Ok(Self { chi_star, ceiling, phi, extension_slope })
    }

    /// Unit porosity, unit extension slope.
    pub fn simple(chi_star: Profile, ceiling: f64) -> Result<Self> {
        Self::new(chi_star, ceiling, Profile::Constant(1.0), 1.0)
    }

    /// All violations of `0 < χ*(x) < R` and `φ(x) > 0` on `[a, b]`.
    pub fn violations_on(&self, a: f64, b: f64) -> Vec<String> {
        let mut out = Vec::new();
        let lo = self.chi_star.min_on(a, b);
        let hi = self.chi_star.max_on(a, b);
        if lo <= 0.0 {
            out.push(format!("chi_star must be positive on [{a}, {b}], minimum is {lo}"));
        }
        if hi >= self.ceiling {
            out.push(format!(
                "χ ≤ χ*(x) < R violated: max chi_star = {hi} is not below R = {}",
                self.ceiling
            ));
        }
        let phi_min = self.phi.min_on(a, b);
        if phi_min <= 0.0 {
            out.push(format!("porosity must be positive on [{a}, {b}], minimum is {phi_min}"));
        }
        out
    }

    pub fn validate_on(&self, a: f64, b: f64) -> Result<()> {
        let v = self.violations_on(a, b);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidLaw(v.join("; ")))
        }
    }

    pub fn chi_star_at(&self, x: f64) -> f64 {
        self.chi_star.value(x)
    }

    pub fn phi_at(&self, x: f64) -> f64 {
        self.phi.value(x)
    }

    /// The graph `χ ↦ β̄(x, χ)` frozen at position `x`, porosity folded in.
    pub fn graph_at(&self, x: f64) -> KinkedGraph {
        let cs = self.chi_star.value(x);
        let phi = self.phi.value(x);
        KinkedGraph {
            kink: cs,
            lo: phi * cs,
            hi: phi * self.ceiling,
            slope_below: phi,
            slope_above: phi * self.extension_slope,
        }
    }

    pub fn graph_eval(&self, x: f64, chi: f64) -> GraphValue {
        self.graph_at(x).eval(chi)
    }

    pub fn graph_inverse(&self, x: f64, u: f64) -> f64 {
        self.graph_at(x).inverse(u)
    }

    /// Hydrate saturation `(u/φ - χ*)⁺ / (R - χ*)`. Values above one are
    /// returned as is.
    pub fn saturation_from_u(&self, x: f64, u: f64) -> f64 {
        let cs = self.chi_star.value(x);
        let phi = self.phi.value(x);
        (u / phi - cs).max(0.0) / (self.ceiling - cs)
    }

    pub fn graph_resolvent(&self, x: f64, lambda: f64, r: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(self.graph_at(x).resolvent_unchecked(lambda, r))
    }

    pub fn yosida_apply(&self, x: f64, lambda: f64, r: f64) -> Result<f64> {
        self.graph_at(x).yosida(lambda, r)
    }

    /// Bound on `sup{|u| : u ∈ β̄(x, v), |v| ≤ c}` over `[a, b]`.
    pub fn level_set_bound(&self, a: f64, b: f64, c: f64) -> f64 {
        self.phi.max_on(a, b) * (self.ceiling + self.extension_slope * c + c)
    }

    /// Per-cell graphs at the cell centers of `grid`.
    pub fn sample(&self, grid: &Grid) -> Vec<KinkedGraph> {
        grid.centers().map(|x| self.graph_at(x)).collect()
    }
}
