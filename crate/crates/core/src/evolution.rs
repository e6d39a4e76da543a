//! Backward-Euler evolution `∂_t u + A β̄⁻¹(·, u) ∋ F`.
//!
//! Every step solves the stationary problem with `λ = Δt_j` and
//! `f = u_{j-1} + Δt_j F(t_j)` (right-endpoint sampling of the source).
//! The resulting step function is the ε-solution of the Cauchy problem on
//! the given time grid.

use alloc::borrow::Cow;
use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::KinkedGraph;
use crate::grid::{Field, Grid};
use crate::operator::DiscreteOperator;
use crate::phase::PhaseLaw;
use crate::stationary::{solve_problem, StationaryParams, StationaryProblem, StationarySolution};

/// Strictly increasing time knots `t_0 < t_1 < … < t_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    knots: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(t0: f64, t_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidTimeGrid("need at least one step".into()));
        }
        if !(t0.is_finite() && t_end.is_finite()) || t_end <= t0 {
            return Err(Error::InvalidTimeGrid(format!(
                "need finite t0 < t_end, got [{t0}, {t_end}]"
            )));
        }
        let dt = (t_end - t0) / steps as f64;
        let mut knots: Vec<f64> = (0..steps).map(|j| t0 + j as f64 * dt).collect();
        knots.push(t_end);
        Ok(Self { knots })
    }

    /// Uniform grid with step as close to `dt` as possible without
    /// exceeding it.
    pub fn with_max_step(t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTimeGrid(format!("step must be positive, got {dt}")));
        }
        let steps = libm::ceil((t_end - t0) / dt * (1.0 - 1e-12)).max(1.0) as usize;
        Self::uniform(t0, t_end, steps)
    }

    pub fn from_knots(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidTimeGrid("need at least two knots".into()));
        }
        if knots.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTimeGrid("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTimeGrid("knots must be strictly increasing".into()));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn steps(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.knots[0]
    }

    pub fn t_end(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Length of step `j`, `t_j - t_{j-1}`, for `j` in `1..=steps`.
    pub fn dt(&self, j: usize) -> f64 {
        self.knots[j] - self.knots[j - 1]
    }

    pub fn max_step(&self) -> f64 {
        (1..=self.steps()).map(|j| self.dt(j)).fold(0.0, f64::max)
    }

    /// Grid with every step split in two.
    pub fn refined(&self) -> Self {
        let mut knots = Vec::with_capacity(2 * self.knots.len() - 1);
        for w in self.knots.windows(2) {
            knots.push(w[0]);
            knots.push(0.5 * (w[0] + w[1]));
        }
        knots.push(self.t_end());
        Self { knots }
    }
}

/// Supplies the operator used for the step ending at knot `j` (time `t`).
pub trait OperatorSource {
    fn operator_at(&self, j: usize, t: f64) -> Result<Cow<'_, DiscreteOperator>>;
}

impl OperatorSource for DiscreteOperator {
    fn operator_at(&self, _j: usize, _t: f64) -> Result<Cow<'_, DiscreteOperator>> {
        Ok(Cow::Borrowed(self))
    }
}

impl<F> OperatorSource for F
where
    F: Fn(usize, f64) -> Result<DiscreteOperator>,
{
    fn operator_at(&self, j: usize, t: f64) -> Result<Cow<'_, DiscreteOperator>> {
        self(j, t).map(Cow::Owned)
    }
}

/// Volumetric source `F(t, x)` sampled onto a grid.
pub trait SourceTerm {
    /// Writes the cell values of `F(t, ·)` into `out`.
    fn fill(&self, t: f64, grid: &Grid, out: &mut [f64]);
}

/// `F ≡ 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NoSource;

impl SourceTerm for NoSource {
    fn fill(&self, _t: f64, _grid: &Grid, out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// A time-independent source given by its cell values.
impl SourceTerm for Field {
    fn fill(&self, _t: f64, _grid: &Grid, out: &mut [f64]) {
        out.copy_from_slice(self.values());
    }
}

/// Source given pointwise, evaluated at cell centers.
#[derive(Debug, Clone, Copy)]
pub struct PointwiseSource<F>(pub F);

impl<F: Fn(f64, f64) -> f64> SourceTerm for PointwiseSource<F> {
    fn fill(&self, t: f64, grid: &Grid, out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(grid.centers()) {
            *o = (self.0)(t, x);
        }
    }
}

/// Mass exchanged during one step, per unit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBalance {
    pub dt: f64,
    /// `h·Σ F_i`.
    pub source: f64,
    /// Flux out of the right end minus flux into the left end.
    pub outflow: f64,
    /// `h·Σ a_i χ_i`.
    pub sink: f64,
}

impl StepBalance {
    /// Predicted change of total mass over the step.
    pub fn mass_change(&self) -> f64 {
        self.dt * (self.source - self.outflow - self.sink)
    }
}

/// State at one time knot.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub u: Vec<f64>,
    pub chi: Vec<f64>,
    pub saturation: Vec<f64>,
    /// Nonlinear iterations spent on the step ending here (zero at `t_0`).
    pub iterations: usize,
    /// Stationary residual of the step ending here (zero at `t_0`).
    pub residual: f64,
    /// Mass exchange of the step ending here (`None` at `t_0`).
    pub balance: Option<StepBalance>,
    /// Darcy flux and excess pressure when the run is pressure coupled.
    pub flux: Option<f64>,
    pub p_star: Option<Vec<f64>>,
    pub clogged: bool,
}

/// First crossing of `max S = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blowup {
    /// Index of the first knot with `max S ≥ 1`.
    pub knot: usize,
    pub knot_time: f64,
    /// Linear interpolation of `max S` between the bracketing knots.
    pub crossing_time: f64,
}

/// Time-stamped states of one run plus the per-cell graphs they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Grid,
    graphs: Vec<KinkedGraph>,
    records: Vec<Record>,
    /// Estimate of `Σ_j ∫ ‖F(t) - F_j‖ dt` by the midpoint rule.
    pub quadrature_defect: f64,
}

impl Trajectory {
    pub fn new(grid: Grid, graphs: Vec<KinkedGraph>, t0: f64, u0: &Field) -> Result<Self> {
        if u0.grid() != &grid || graphs.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if !u0.is_finite() {
            return Err(Error::InvalidParams("initial data must be finite".into()));
        }
        let u = u0.values().to_vec();
        let chi = u.iter().zip(&graphs).map(|(ui, g)| g.inverse(*ui)).collect();
        let mut traj = Self { grid, graphs, records: Vec::new(), quadrature_defect: 0.0 };
        let saturation = traj.saturation_of(&u);
        traj.records.push(Record {
            t: t0,
            u,
            chi,
            saturation,
            iterations: 0,
            residual: 0.0,
            balance: None,
            flux: None,
            p_star: None,
            clogged: false,
        });
        Ok(traj)
    }

    fn saturation_of(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.graphs).map(|(ui, g)| g.saturation(*ui)).collect()
    }

    /// Appends the state reached by one step.
    pub fn push_step(
        &mut self,
        t: f64,
        solution: StationarySolution,
        balance: StepBalance,
    ) -> &mut Record {
        let u = solution.u.into_values();
        let saturation = self.saturation_of(&u);
        self.records.push(Record {
            t,
            u,
            chi: solution.chi.into_values(),
            saturation,
            iterations: solution.report.iterations,
            residual: solution.report.residual,
            balance: Some(balance),
            flux: None,
            p_star: None,
            clogged: false,
        });
        self.records.last_mut().expect("just pushed")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn graphs(&self) -> &[KinkedGraph] {
        &self.graphs
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [Record] {
        &mut self.records
    }

    pub fn last(&self) -> &Record {
        self.records.last().expect("a trajectory always holds its initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.records.len() - 1
    }

    pub fn u_field(&self, j: usize) -> Field {
        Field::new(self.grid, self.records[j].u.clone()).expect("record lives on the grid")
    }

    pub fn chi_field(&self, j: usize) -> Field {
        Field::new(self.grid, self.records[j].chi.clone()).expect("record lives on the grid")
    }

    /// Total methane `h·Σ u_i` at knot `j`.
    pub fn mass(&self, j: usize) -> f64 {
        self.grid.integral(&self.records[j].u)
    }

    /// `|mass(N) - mass(0) - Σ_j Δt_j (source_j - outflow_j - sink_j)|`.
    pub fn mass_defect(&self) -> f64 {
        let predicted: f64 = self
            .records
            .iter()
            .filter_map(|r| r.balance.map(|b| b.mass_change()))
            .sum();
        (self.mass(self.steps()) - self.mass(0) - predicted).abs()
    }

    /// Largest `|S_i (kink_i - χ_i)|` over cells at knot `j` that are not on
    /// the extension branch, together with the largest distance of `u_i`
    /// from `β̄(χ_i)`.
    pub fn complementarity_residual(&self, j: usize) -> f64 {
        let r = &self.records[j];
        let mut worst: f64 = 0.0;
        for i in 0..r.u.len() {
            let g = &self.graphs[i];
            worst = worst.max(g.eval(r.chi[i]).distance(r.u[i]));
            if r.u[i] <= g.hi {
                worst = worst.max((r.saturation[i] * (g.kink - r.chi[i])).abs());
            }
        }
        worst
    }

    pub fn max_saturation_at(&self, j: usize) -> f64 {
        self.records[j].saturation.iter().copied().fold(0.0, f64::max)
    }

    /// Largest saturation over all knots and cells.
    pub fn max_saturation(&self) -> f64 {
        (0..self.len()).map(|j| self.max_saturation_at(j)).fold(0.0, f64::max)
    }

    pub fn iterations(&self) -> Vec<usize> {
        self.records.iter().skip(1).map(|r| r.iterations).collect()
    }

    /// First knot where `max S ≥ 1`, if any.
    pub fn blowup(&self) -> Option<Blowup> {
        let knot = (0..self.len()).find(|&j| self.max_saturation_at(j) >= 1.0)?;
        let knot_time = self.records[knot].t;
        let crossing_time = if knot == 0 {
            knot_time
        } else {
            let (s0, s1) = (self.max_saturation_at(knot - 1), self.max_saturation_at(knot));
            let t0 = self.records[knot - 1].t;
            t0 + (knot_time - t0) * (1.0 - s0) / (s1 - s0)
        };
        Some(Blowup { knot, knot_time, crossing_time })
    }

    /// Whether any cell entered the extension branch above the segment.
    pub fn entered_extension(&self) -> bool {
        self.records
            .iter()
            .any(|r| r.u.iter().zip(&self.graphs).any(|(u, g)| *u > g.hi))
    }
}

/// A run that stopped early, carrying the states computed so far.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("evolution stopped in the step ending at t = {t}: {error}")]
pub struct EvolutionFailure {
    pub t: f64,
    pub error: Error,
    pub partial: Box<Trajectory>,
}

/// One backward-Euler step: solves `u + Δt A χ = u_prev + Δt F_j`.
pub fn step(
    op: &DiscreteOperator,
    graphs: &[KinkedGraph],
    u_prev: &Field,
    dt: f64,
    source: &Field,
    params: &StationaryParams,
) -> Result<StationarySolution> {
    if u_prev.grid() != op.grid() || source.grid() != op.grid() {
        return Err(Error::GridMismatch);
    }
    let f: Vec<f64> = u_prev
        .values()
        .iter()
        .zip(source.values())
        .map(|(u, s)| u + dt * s)
        .collect();
    let problem = StationaryProblem::new(op, graphs, dt, &f)?;
    solve_problem(&problem, params, Some(u_prev.values()))
}

/// Mass exchange of a step that ended in `chi` under `op` with source `f`.
pub fn step_balance(op: &DiscreteOperator, dt: f64, source: &[f64], chi: &[f64]) -> StepBalance {
    StepBalance {
        dt,
        source: op.grid().integral(source),
        outflow: op.boundary_fluxes(chi).net_outflow(),
        sink: op.reaction_sink(chi),
    }
}

/// Runs the evolution for the phase law `law` sampled at cell centers.
pub fn evolve<O, S>(
    ops: &O,
    law: &PhaseLaw,
    u0: &Field,
    source: &S,
    tg: &TimeGrid,
    params: &StationaryParams,
) -> core::result::Result<Trajectory, EvolutionFailure>
where
    O: OperatorSource + ?Sized,
    S: SourceTerm + ?Sized,
{
    let graphs = law.sample(u0.grid());
    evolve_graphs(ops, &graphs, u0, source, tg, params)
}

/// Runs the evolution with explicit per-cell graphs.
pub fn evolve_graphs<O, S>(
    ops: &O,
    graphs: &[KinkedGraph],
    u0: &Field,
    source: &S,
    tg: &TimeGrid,
    params: &StationaryParams,
) -> core::result::Result<Trajectory, EvolutionFailure>
where
    O: OperatorSource + ?Sized,
    S: SourceTerm + ?Sized,
{
    let grid = *u0.grid();
    let mut traj = Trajectory::new(grid, graphs.to_vec(), tg.t0(), u0).map_err(|error| {
        let partial = Trajectory {
            grid,
            graphs: graphs.to_vec(),
            records: Vec::new(),
            quadrature_defect: 0.0,
        };
        EvolutionFailure { t: tg.t0(), error, partial: Box::new(partial) }
    })?;
    let mut u = u0.clone();
    let mut f_j = Field::zeros(grid);
    let mut f_mid = Field::zeros(grid);
    for j in 1..=tg.steps() {
        let t = tg.knots()[j];
        let dt = tg.dt(j);
        let attempt = (|| {
            let op = ops.operator_at(j, t)?;
            if op.grid() != &grid {
                return Err(Error::GridMismatch);
            }
            source.fill(t, &grid, f_j.values_mut());
            source.fill(t - 0.5 * dt, &grid, f_mid.values_mut());
            let sol = step(&op, graphs, &u, dt, &f_j, params)?;
            let balance = step_balance(&op, dt, f_j.values(), sol.chi.values());
            Ok((sol, balance))
        })();
        match attempt {
            Ok((sol, balance)) => {
                traj.quadrature_defect += dt * grid.l1_diff(f_mid.values(), f_j.values());
                u = sol.u.clone();
                traj.push_step(t, sol, balance);
            }
            Err(error) => return Err(EvolutionFailure { t, error, partial: Box::new(traj) }),
        }
    }
    Ok(traj)
}

/// Shifted homogeneous problem obtained by subtracting a lifting `v₀` of
/// the boundary values:
///
/// ```text
///   ũ = u - u₀,  ξ = χ - v₀,  F̃ = F - A v₀,  β̃(ξ) = β̄(v₀ + ξ) - u₀
/// ```
///
/// with `u₀ ∈ β̄(v₀)`. The shifted problem uses the operator with zero
/// boundary values. Discretely the identity holds for any lifting.
#[derive(Debug, Clone, PartialEq)]
pub struct Translation {
    pub lifting: Vec<f64>,
    pub content: Vec<f64>,
    /// `A v₀`, boundary offset included.
    pub lifted_action: Vec<f64>,
    pub operator: DiscreteOperator,
    pub graphs: Vec<KinkedGraph>,
}

impl Translation {
    /// Translation with the given lifting `v₀`. `u₀` is the element of
    /// `β̄(v₀)` closest to zero.
    pub fn with_lifting(
        op: &DiscreteOperator,
        graphs: &[KinkedGraph],
        lifting: Vec<f64>,
    ) -> Result<Self> {
        let n = op.grid().len();
        if lifting.len() != n || graphs.len() != n {
            return Err(Error::GridMismatch);
        }
        let content: Vec<f64> = lifting
            .iter()
            .zip(graphs)
            .map(|(v, g)| {
                let range = g.eval(*v);
                0.0f64.clamp(range.lo, range.hi)
            })
            .collect();
        let mut lifted_action = alloc::vec![0.0; n];
        op.apply_into(&lifting, &mut lifted_action);
        let shifted = graphs
            .iter()
            .zip(&lifting)
            .zip(&content)
            .map(|((g, v), u)| g.translated(*v, *u))
            .collect();
        Ok(Self {
            lifting,
            content,
            lifted_action,
            operator: op.homogeneous(),
            graphs: shifted,
        })
    }

    pub fn shift_content(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.content).map(|(a, b)| a - b).collect()
    }

    pub fn shift_source(&self, source: &[f64]) -> Vec<f64> {
        source.iter().zip(&self.lifted_action).map(|(a, b)| a - b).collect()
    }

    /// Right-hand side of the shifted stationary problem for
    /// `u + λ A χ = f`: `f - u₀ - λ A v₀`.
    pub fn shift_rhs(&self, step_lambda: f64, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(&self.content)
            .zip(&self.lifted_action)
            .map(|((fi, u0), av)| fi - u0 - step_lambda * av)
            .collect()
    }

    /// Maps a solution `(ũ, ξ)` of the shifted problem back.
    pub fn unshift(&self, u_shifted: &[f64], xi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let u = u_shifted.iter().zip(&self.content).map(|(a, b)| a + b).collect();
        let chi = xi.iter().zip(&self.lifting).map(|(a, b)| a + b).collect();
        (u, chi)
    }
}

/// Translation by the affine lifting between the two boundary values.
pub fn translate_boundary(op: &DiscreteOperator, graphs: &[KinkedGraph]) -> Result<Translation> {
    let grid = op.grid();
    let c = op.coefficients();
    let (gl, gr) = (c.dirichlet_left, c.dirichlet_right);
    let lifting = grid
        .centers()
        .map(|x| gl + (gr - gl) * (x - grid.x_left()) / grid.length())
        .collect();
    Translation::with_lifting(op, graphs, lifting)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::OperatorCoefficients;
    use crate::phase::Profile;

    fn setup(n: usize, d: f64, q: f64, left: f64, right: f64) -> (DiscreteOperator, PhaseLaw) {
        let grid = Grid::new(0.0, 1.0, n).unwrap();
        let op = DiscreteOperator::assemble(grid, OperatorCoefficients::new(d, q, left, right))
            .unwrap();
        let law = PhaseLaw::simple(Profile::Affine { intercept: 0.04, slope: -0.03 }, 0.1)
            .unwrap();
        (op, law)
    }

    #[test]
    fn time_grids() {
        let tg = TimeGrid::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(tg.knots(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(tg.refined().steps(), 8);
        assert_eq!(TimeGrid::with_max_step(0.0, 1.2, 0.012).unwrap().steps(), 100);
        assert!(TimeGrid::from_knots(alloc::vec![0.0, 0.0]).is_err());
        assert!(TimeGrid::uniform(1.0, 0.0, 3).is_err());
    }

    #[test]
    fn zero_stays_zero() {
        let (op, law) = setup(8, 0.1, 1.0, 0.0, 0.0);
        let u0 = Field::zeros(*op.grid());
        let tg = TimeGrid::uniform(0.0, 1.0, 5).unwrap();
        let traj = evolve(&op, &law, &u0, &NoSource, &tg, &StationaryParams::default()).unwrap();
        for r in traj.records() {
            assert!(r.u.iter().all(|v| *v == 0.0));
        }
        assert!(traj.blowup().is_none());
        assert_eq!(traj.mass_defect(), 0.0);
    }

    #[test]
    fn translation_without_boundary_data_is_identity() {
        let (op, law) = setup(6, 0.2, 0.5, 0.0, 0.0);
        let graphs = law.sample(op.grid());
        let t = translate_boundary(&op, &graphs).unwrap();
        assert!(t.lifting.iter().all(|v| *v == 0.0));
        assert!(t.content.iter().all(|v| *v == 0.0));
        assert_eq!(t.graphs, graphs);
        assert_eq!(t.operator, op);
    }

    #[test]
    fn time_dependent_operator_source() {
        let (op, law) = setup(8, 0.0, 1.0, 0.02, 0.0);
        let grid = *op.grid();
        let ops = |_: usize, _: f64| {
            DiscreteOperator::assemble(grid, OperatorCoefficients::new(0.0, 1.0, 0.02, 0.0))
        };
        let tg = TimeGrid::uniform(0.0, 0.5, 10).unwrap();
        let u0 = Field::zeros(grid);
        let params = StationaryParams::default();
        let a = evolve(&ops, &law, &u0, &NoSource, &tg, &params).unwrap();
        let b = evolve(&op, &law, &u0, &NoSource, &tg, &params).unwrap();
        assert_eq!(a, b);
    }
}
