//! Quasi-static incompressible Darcy flow in one dimension.
//!
//! With `x` pointing upward, total pressure splits into the hydrostatic
//! part `p⁰(x) = p_datum + ρ g (x_right - x)` and the excess pressure `p*`,
//! which alone drives the flux: `q = -(κ/μ) ∂_x p*`, `∂_x q = 0`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams {
    /// Dynamic viscosity (Pa·s).
    pub mu: f64,
    /// Liquid density (kg/m³).
    pub rho_l: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
    /// Permeability of the hydrate-free medium (m²).
    pub kappa0: f64,
    /// Exponent `m` of `κ = κ₀ (1 - S)^m`.
    pub perm_exponent: f64,
}

impl FluidParams {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            bad.push(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.kappa0 > 0.0 && self.kappa0.is_finite()) {
            bad.push(format!("kappa0 must be positive, got {}", self.kappa0));
        }
        if !(self.perm_exponent >= 0.0 && self.perm_exponent.is_finite()) {
            bad.push(format!("perm_exponent must be non-negative, got {}", self.perm_exponent));
        }
        if !(self.rho_l.is_finite() && self.g.is_finite()) {
            bad.push("rho_l and g must be finite".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidFluid(bad.join("; ")))
        }
    }
}

/// `κ₀ max(0, 1 - S)^m`; zero once the pore space is filled.
pub fn permeability(fp: &FluidParams, saturation: f64) -> f64 {
    if saturation >= 1.0 {
        0.0
    } else {
        fp.kappa0 * libm::pow((1.0 - saturation).max(0.0), fp.perm_exponent)
    }
}

/// Permeability of every cell for the given saturations.
pub fn permeability_field(fp: &FluidParams, grid: Grid, saturation: &[f64]) -> Result<Field> {
    Field::new(grid, saturation.iter().map(|s| permeability(fp, *s)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureSolution {
    /// Excess pressure at cell centers (Pa).
    pub p_star: Field,
    /// Hydrostatic pressure at cell centers (Pa).
    pub p0: Field,
    /// Darcy flux, constant in space (m/s, positive upward).
    pub q: f64,
    /// Set when some cell has zero permeability and the flow is blocked.
    pub clogged: bool,
}

impl PressureSolution {
    /// Total pressure `p⁰ + p*`.
    pub fn total(&self) -> Field {
        let v = self.p0.iter().zip(self.p_star.iter()).map(|(a, b)| a + b).collect();
        Field::new(*self.p0.grid(), v).expect("same grid")
    }
}

/// Hydrostatic pressure with datum `p_datum` at the top of the domain.
pub fn hydrostatic(grid: &Grid, fp: &FluidParams, p_datum: f64) -> Field {
    let top = grid.x_right();
    Field::from_fn(*grid, |x| p_datum + fp.rho_l * fp.g * (top - x))
}

/// Solves for the excess pressure with Dirichlet values at the two domain
/// ends. Face permeabilities are harmonic means; the boundary faces see a
/// half cell. The hydrostatic part uses a zero datum.
pub fn solve_pressure_1d(
    grid: &Grid,
    kappa: &Field,
    fp: &FluidParams,
    p_left: f64,
    p_right: f64,
) -> Result<PressureSolution> {
    fp.validate()?;
    if kappa.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if kappa.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
        return Err(Error::InvalidFluid("permeability must be finite and non-negative".into()));
    }
    if !(p_left.is_finite() && p_right.is_finite()) {
        return Err(Error::InvalidFluid("boundary pressures must be finite".into()));
    }
    let h = grid.h();
    let k = kappa.values();
    let clogged = k.contains(&0.0);
    let q = if clogged {
        0.0
    } else {
        let resistance: f64 = k.iter().map(|v| fp.mu * h / v).sum();
        (p_left - p_right) / resistance
    };
    let mut p = Vec::with_capacity(k.len());
    if clogged {
        p.resize(k.len(), p_left);
    } else {
        let mut current = p_left - q * fp.mu * 0.5 * h / k[0];
        p.push(current);
        for w in k.windows(2) {
            current -= q * fp.mu * 0.5 * h * (1.0 / w[0] + 1.0 / w[1]);
            p.push(current);
        }
    }
    Ok(PressureSolution {
        p_star: Field::new(*grid, p)?,
        p0: hydrostatic(grid, fp, 0.0),
        q,
        clogged,
    })
}

/// As [`solve_pressure_1d`] with total-pressure boundary values; the
/// hydrostatic part with datum `p_datum` is removed first.
pub fn solve_total_pressure(
    grid: &Grid,
    kappa: &Field,
    fp: &FluidParams,
    p_datum: f64,
    total_left: f64,
    total_right: f64,
) -> Result<PressureSolution> {
    let weight = fp.rho_l * fp.g;
    let star_left = total_left - (p_datum + weight * grid.length());
    let star_right = total_right - p_datum;
    let mut sol = solve_pressure_1d(grid, kappa, fp, star_left, star_right)?;
    sol.p0 = hydrostatic(grid, fp, p_datum);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fluid() -> FluidParams {
        FluidParams { mu: 1e-3, rho_l: 1000.0, g: 9.8, kappa0: 1e-13, perm_exponent: 3.0 }
    }

    #[test]
    fn permeability_closure() {
        let fp = fluid();
        assert_eq!(permeability(&fp, 0.0), 1e-13);
        assert_eq!(permeability(&fp, 1.0), 0.0);
        assert_eq!(permeability(&fp, 1.5), 0.0);
        assert!((permeability(&fp, 0.5) - 1.25e-14).abs() < 1e-28);
        let flat = FluidParams { perm_exponent: 0.0, ..fp };
        assert_eq!(permeability(&flat, 1.0), 0.0);
    }

    #[test]
    fn equal_pressures_give_no_flow() {
        let grid = Grid::new(0.0, 1.0, 5).unwrap();
        let k = Field::constant(grid, 1e-13);
        let sol = solve_pressure_1d(&grid, &k, &fluid(), 3.0, 3.0).unwrap();
        assert_eq!(sol.q, 0.0);
        assert!(sol.p_star.iter().all(|p| *p == 3.0));
        assert!(!sol.clogged);
    }

    #[test]
    fn clog_blocks_flow() {
        let grid = Grid::new(0.0, 1.0, 5).unwrap();
        let mut k = Field::constant(grid, 1e-13);
        k[2] = 0.0;
        let sol = solve_pressure_1d(&grid, &k, &fluid(), 5.0, 0.0).unwrap();
        assert_eq!(sol.q, 0.0);
        assert!(sol.clogged);
    }

    #[test]
    fn hydrostatic_column() {
        let grid = Grid::new(0.0, 1.0, 10).unwrap();
        let fp = fluid();
        let p0 = hydrostatic(&grid, &fp, 0.0);
        let end_to_end = fp.rho_l * fp.g * (grid.x_right() - grid.x_left());
        let cell_span = p0[0] - p0[9];
        assert!((cell_span - end_to_end * 0.9).abs() < 1e-9);
        let still = hydrostatic(&grid, &FluidParams { g: 0.0, ..fp }, 7.0);
        assert!(still.iter().all(|p| *p == 7.0));
    }

    #[test]
    fn rejects_bad_fluid() {
        let grid = Grid::new(0.0, 1.0, 3).unwrap();
        let k = Field::constant(grid, 1.0);
        let fp = FluidParams { mu: 0.0, ..fluid() };
        assert!(matches!(solve_pressure_1d(&grid, &k, &fp, 1.0, 0.0), Err(Error::InvalidFluid(_))));
    }
}
