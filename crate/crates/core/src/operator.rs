//! Finite-volume advection-diffusion-reaction operator with Dirichlet data.
//!
//! For cell `i` the operator is `(F_{i+1/2} - F_{i-1/2})/h + a_i χ_i`,
//! where `F = q χ_upwind - D ∂χ` is the face flux. Diffusion uses the
//! two-point gradient (half-cell distance at the boundary faces) and
//! advection is first-order upwind, which makes the matrix part an
//! M-matrix with column sums `a_i` and row sums `a_i + Δq_i/h`.
//!
//! Boundary values enter through an affine offset, so `A χ = M χ + b`.
//! Without diffusion a boundary value only acts on inflow faces.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::tridiag::Tridiagonal;

/// Constant or per-entry coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    Values(Vec<f64>),
}

impl Coefficient {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            Coefficient::Constant(c) => Ok(alloc::vec![*c; n]),
            Coefficient::Values(v) if v.len() == n => Ok(v.clone()),
            Coefficient::Values(v) => Err(Error::InvalidCoefficients(format!(
                "{what} has {} entries, expected {n}",
                v.len()
            ))),
        }
    }
}

/// Coefficients of the transport operator. Velocity lives on faces
/// (`n + 1` values), reaction on cells.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCoefficients {
    pub diffusion: f64,
    pub velocity: Coefficient,
    pub reaction: Coefficient,
    pub dirichlet_left: f64,
    pub dirichlet_right: f64,
}

impl OperatorCoefficients {
    pub fn new(diffusion: f64, velocity: f64, dirichlet_left: f64, dirichlet_right: f64) -> Self {
        Self {
            diffusion,
            velocity: Coefficient::Constant(velocity),
            reaction: Coefficient::Constant(0.0),
            dirichlet_left,
            dirichlet_right,
        }
    }

    pub fn with_velocity(&self, q: f64) -> Self {
        Self { velocity: Coefficient::Constant(q), ..self.clone() }
    }

    pub fn with_reaction(mut self, reaction: Coefficient) -> Self {
        self.reaction = reaction;
        self
    }

    pub fn homogeneous(&self) -> Self {
        Self { dirichlet_left: 0.0, dirichlet_right: 0.0, ..self.clone() }
    }
}

/// Fluxes through the two ends of the domain, positive in the `+x`
/// direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFluxes {
    pub left: f64,
    pub right: f64,
}

impl BoundaryFluxes {
    pub fn net_outflow(&self) -> f64 {
        self.right - self.left
    }
}

/// Assembled operator `A χ = M χ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    grid: Grid,
    coeffs: OperatorCoefficients,
    face_velocity: Vec<f64>,
    reaction: Vec<f64>,
    matrix: Tridiagonal,
    offset: Vec<f64>,
}

impl DiscreteOperator {
    pub fn assemble(grid: Grid, coeffs: OperatorCoefficients) -> Result<Self> {
        let n = grid.len();
        let h = grid.h();
        let d = coeffs.diffusion;
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::InvalidCoefficients(format!(
                "diffusion must be finite and non-negative, got {d}"
            )));
        }
        if !(coeffs.dirichlet_left.is_finite() && coeffs.dirichlet_right.is_finite()) {
            return Err(Error::InvalidCoefficients("boundary values must be finite".into()));
        }
        let q = coeffs.velocity.expand(n + 1, "velocity")?;
        let a = coeffs.reaction.expand(n, "reaction")?;
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCoefficients("velocity must be finite".into()));
        }
        for (i, &ai) in a.iter().enumerate() {
            if !(ai >= 0.0 && ai.is_finite()) {
                return Err(Error::InvalidCoefficients(format!(
                    "reaction must be non-negative, cell {i} has {ai}"
                )));
            }
            let div = (q[i + 1] - q[i]) / h;
            let scale = (q[i + 1].abs() + q[i].abs()) / h + ai;
            if 2.0 * ai + div < -1e-12 * scale || ai + div < -1e-12 * scale {
                return Err(Error::InvalidCoefficients(format!(
                    "cell {i}: need 2a + dq/dx >= 0 and a + dq/dx >= 0 (a = {ai}, dq/dx = {div})"
                )));
            }
        }

        let mut m = Tridiagonal::zeros(n);
        let mut b = alloc::vec![0.0; n];
        let dh2 = d / (h * h);
        for i in 0..n {
            let qw = q[i];
            let qe = q[i + 1];
            // east face
            m.diag[i] += qe.max(0.0) / h;
            if i + 1 < n {
                m.upper[i] += qe.min(0.0) / h - dh2;
                m.diag[i] += dh2;
            } else {
                m.diag[i] += 2.0 * dh2;
                b[i] += (qe.min(0.0) / h - 2.0 * dh2) * coeffs.dirichlet_right;
            }
            // west face
            m.diag[i] -= qw.min(0.0) / h;
            if i > 0 {
                m.lower[i] += -qw.max(0.0) / h - dh2;
                m.diag[i] += dh2;
            } else {
                m.diag[i] += 2.0 * dh2;
                b[i] += (-qw.max(0.0) / h - 2.0 * dh2) * coeffs.dirichlet_left;
            }
            m.diag[i] += a[i];
        }
        Ok(Self { grid, coeffs, face_velocity: q, reaction: a, matrix: m, offset: b })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &OperatorCoefficients {
        &self.coeffs
    }

    pub fn matrix(&self) -> &Tridiagonal {
        &self.matrix
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn face_velocity(&self) -> &[f64] {
        &self.face_velocity
    }

    pub fn reaction(&self) -> &[f64] {
        &self.reaction
    }

    /// Same coefficients with zero boundary values.
    pub fn homogeneous(&self) -> Self {
        Self {
            coeffs: self.coeffs.homogeneous(),
            offset: alloc::vec![0.0; self.grid.len()],
            ..self.clone()
        }
    }

    /// `out = M v + b`.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        self.matrix.mul_vec(v, out);
        for (o, b) in out.iter_mut().zip(&self.offset) {
            *o += b;
        }
    }

    pub fn apply(&self, v: &Field) -> Result<Field> {
        if v.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = alloc::vec![0.0; self.grid.len()];
        self.apply_into(v.values(), &mut out);
        Field::new(self.grid, out)
    }

    /// Solves `(I + λA) v = f` with the boundary offset included.
    pub fn resolvent_solve(&self, lambda: f64, f: &Field) -> Result<Field> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::NonPositiveLambda(lambda));
        }
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let rhs: Vec<f64> = f
            .values()
            .iter()
            .zip(&self.offset)
            .map(|(fi, bi)| fi - lambda * bi)
            .collect();
        let v = self
            .matrix
            .shifted(1.0, lambda)
            .solve(&rhs)
            .expect("I + λA is a nonsingular M-matrix");
        Field::new(self.grid, v)
    }

    /// Face fluxes `q χ - D ∂χ` through the two domain ends for the cell
    /// values `chi`.
    pub fn boundary_fluxes(&self, chi: &[f64]) -> BoundaryFluxes {
        let n = self.grid.len();
        let h = self.grid.h();
        let d = self.coeffs.diffusion;
        let (gl, gr) = (self.coeffs.dirichlet_left, self.coeffs.dirichlet_right);
        let ql = self.face_velocity[0];
        let qr = self.face_velocity[n];
        let left = ql.max(0.0) * gl + ql.min(0.0) * chi[0] - 2.0 * d * (chi[0] - gl) / h;
        let right = qr.max(0.0) * chi[n - 1] + qr.min(0.0) * gr - 2.0 * d * (gr - chi[n - 1]) / h;
        BoundaryFluxes { left, right }
    }

    /// `h·Σ a_i χ_i`, the mass removed per unit time by the reaction term.
    pub fn reaction_sink(&self, chi: &[f64]) -> f64 {
        self.grid.h() * self.reaction.iter().zip(chi).map(|(a, c)| a * c).sum::<f64>()
    }
}
