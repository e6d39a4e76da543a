//! Semilinear stationary problem `u + λ A χ = f`, `u ∈ β̄(x, χ)`.
//!
//! This is the equation solved at every backward-Euler step. Two solve
//! paths are provided and are expected to agree to within the tolerance:
//!
//! * [`Method::Newton`]: semismooth Newton on the single-valued form
//!   `u + λ A β̄⁻¹(u) = f`, with backtracking on the discrete L¹ residual.
//! * [`Method::FixedPoint`]: the regularized problem
//!   `ε v + λ A v + β̄_μ(v) = f` along a decreasing schedule of `(ε, μ)`.
//!   Each stage is the fixed point of
//!   `v ↦ (1 + με)⁻¹ (I + μ/(1 + με)·λA)⁻¹ (μ f + (I + μβ̄)⁻¹ v)`,
//!   a strict contraction with factor `(1 + με)⁻¹`.
//!
//! The Newton path falls back to the fixed-point path if its line search
//! stalls.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, NonConvergence, Result};
use crate::graph::KinkedGraph;
use crate::grid::{Field, Grid};
use crate::operator::DiscreteOperator;
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Newton,
    FixedPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryParams {
    /// Stopping tolerance on the discrete L¹ residual.
    pub tol: f64,
    /// Iteration budget: Newton iterations, or iterations per stage on the
    /// fixed-point path.
    pub max_iters: usize,
    /// Strictly decreasing `(ε, μ)` pairs for the fixed-point path.
    pub continuation: Vec<(f64, f64)>,
    pub method: Method,
}

/// `(ε, μ) = (1e-2·4^{-j}, 1e-2·4^{-j})` for `j = 0..=14`.
pub fn default_continuation() -> Vec<(f64, f64)> {
    (0..=14)
        .map(|j| {
            let s = 1e-2 * libm::pow(4.0, -(j as f64));
            (s, s)
        })
        .collect()
}

impl Default for StationaryParams {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 100,
            continuation: default_continuation(),
            method: Method::Newton,
        }
    }
}

impl StationaryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParams(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be at least 1".into()));
        }
        if self.continuation.is_empty() {
            return Err(Error::InvalidParams("continuation schedule is empty".into()));
        }
        if self.continuation.iter().any(|&(e, l)| !(e > 0.0 && l > 0.0)) {
            return Err(Error::InvalidParams("continuation entries must be positive".into()));
        }
        let decreasing = self
            .continuation
            .windows(2)
            .all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
        if !decreasing {
            return Err(Error::InvalidParams(
                "continuation schedule must be strictly decreasing".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: Method,
    pub iterations: usize,
    /// Continuation stages used (fixed-point path only).
    pub stages: usize,
    /// Last `(ε, μ)` reached on the fixed-point path.
    pub final_regularization: Option<(f64, f64)>,
    /// `‖u + λAχ - f‖` in the discrete L¹ norm.
    pub residual: f64,
    /// Set when Newton stalled and the fixed-point path finished the solve.
    pub fell_back: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarySolution {
    pub u: Field,
    pub chi: Field,
    pub report: SolveReport,
}

/// Borrowed description of one stationary problem.
#[derive(Debug, Clone, Copy)]
pub struct StationaryProblem<'a> {
    pub op: &'a DiscreteOperator,
    pub graphs: &'a [KinkedGraph],
    pub step_lambda: f64,
    pub f: &'a [f64],
}

impl<'a> StationaryProblem<'a> {
    pub fn new(
        op: &'a DiscreteOperator,
        graphs: &'a [KinkedGraph],
        step_lambda: f64,
        f: &'a [f64],
    ) -> Result<Self> {
        let n = op.grid().len();
        if graphs.len() != n || f.len() != n {
            return Err(Error::GridMismatch);
        }
        if !(step_lambda > 0.0 && step_lambda.is_finite()) {
            return Err(Error::NonPositiveLambda(step_lambda));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("right-hand side is not finite".into()));
        }
        Ok(Self { op, graphs, step_lambda, f })
    }

    fn grid(&self) -> &Grid {
        self.op.grid()
    }

    /// `u + λ A χ - f`.
    pub fn residual(&self, u: &[f64], chi: &[f64]) -> Vec<f64> {
        let mut r = alloc::vec![0.0; u.len()];
        self.op.apply_into(chi, &mut r);
        for i in 0..r.len() {
            r[i] = u[i] + self.step_lambda * r[i] - self.f[i];
        }
        r
    }

    fn inverse(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(self.graphs).map(|(ui, g)| g.inverse(*ui)).collect()
    }

    /// Discrete L¹ distance of `u` from `β̄(χ)`, cell by cell.
    pub fn membership_defect(&self, u: &[f64], chi: &[f64]) -> f64 {
        let h = self.grid().h();
        h * u
            .iter()
            .zip(chi)
            .zip(self.graphs)
            .map(|((ui, ci), g)| g.eval(*ci).distance(*ui))
            .sum::<f64>()
    }
}

/// Solves the stationary problem on `op` with per-cell graphs `graphs`.
pub fn solve_stationary(
    op: &DiscreteOperator,
    graphs: &[KinkedGraph],
    step_lambda: f64,
    f: &Field,
    params: &StationaryParams,
) -> Result<StationarySolution> {
    if f.grid() != op.grid() {
        return Err(Error::GridMismatch);
    }
    let problem = StationaryProblem::new(op, graphs, step_lambda, f.values())?;
    solve_problem(&problem, params, None)
}

/// As [`solve_stationary`] with an optional initial guess for `u`.
pub fn solve_problem(
    problem: &StationaryProblem<'_>,
    params: &StationaryParams,
    guess: Option<&[f64]>,
) -> Result<StationarySolution> {
    params.validate()?;
    let grid = *problem.grid();
    let direct = |p: &StationaryProblem<'_>, guess: Option<&[f64]>| -> Result<Solved> {
        match params.method {
            Method::Newton => match newton(p, params, guess) {
                Ok(out) => Ok(out),
                Err(_) => {
                    let chi0 = guess.map(|g| p.inverse(g));
                    let (u, chi, mut report) = continuation(p, params, chi0.as_deref())?;
                    report.fell_back = true;
                    Ok((u, chi, report))
                }
            },
            Method::FixedPoint => {
                let chi0 = guess.map(|g| p.inverse(g));
                continuation(p, params, chi0.as_deref())
            }
        }
    };
    let (u, chi, report) = match direct(problem, guess) {
        Ok(out) => out,
        Err(first) => homotopy(problem, guess, &direct).map_err(|_| first)?,
    };
    Ok(StationarySolution {
        u: Field::new(grid, u)?,
        chi: Field::new(grid, chi)?,
        report,
    })
}

type Solved = (Vec<f64>, Vec<f64>, SolveReport);

/// A solver run from an optional warm start.
type DirectSolve<'a> = dyn Fn(&StationaryProblem<'_>, Option<&[f64]>) -> Result<Solved> + 'a;

/// Number of factor-4 steps of the step-size homotopy.
const HOMOTOPY_STEPS: i32 = 16;

/// Last resort for very stiff steps: solve with `λ 4^{-k}`, `k = K..=0`,
/// each solve warm-started from the previous one.
fn homotopy(
    problem: &StationaryProblem<'_>,
    guess: Option<&[f64]>,
    direct: &DirectSolve<'_>,
) -> Result<Solved> {
    let mut current: Option<Vec<f64>> = guess.map(<[f64]>::to_vec);
    let mut iterations = 0;
    let mut stages = 0;
    let mut last = None;
    for k in (0..=HOMOTOPY_STEPS).rev() {
        let sub = StationaryProblem {
            step_lambda: problem.step_lambda * libm::pow(4.0, -f64::from(k)),
            ..*problem
        };
        let (u, chi, report) = direct(&sub, current.as_deref())?;
        iterations += report.iterations;
        stages += report.stages;
        current = Some(u.clone());
        last = Some((u, chi, report));
    }
    let (u, chi, mut report) = last.expect("at least one homotopy step");
    report.iterations = iterations;
    report.stages = stages;
    report.fell_back = true;
    Ok((u, chi, report))
}

/// Semismooth Newton in the Minty parametrization `z = χ + u` of the
/// graph: `χ = (I + β̄)⁻¹ z`, `u = z - χ`. Both are Lipschitz with slopes in
/// `[0, 1)`, so the Jacobian `diag(1 - c) + λ M diag(c)` is a column
/// diagonally dominant M-matrix for every selection `c`.
///
/// Full steps are taken while they reach a branch pattern not seen before
/// (the active-set view of Newton on a piecewise-linear system); otherwise
/// the step is backtracked on the L¹ residual.
fn newton(problem: &StationaryProblem<'_>, params: &StationaryParams, guess: Option<&[f64]>) -> Result<Solved> {
    let grid = problem.grid();
    let lam = problem.step_lambda;
    let graphs = problem.graphs;
    let split = |z: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let chi: Vec<f64> = z
            .iter()
            .zip(graphs)
            .map(|(zi, g)| g.resolvent_unchecked(1.0, *zi))
            .collect();
        let u = z.iter().zip(&chi).map(|(zi, c)| zi - c).collect();
        (u, chi)
    };
    let pattern = |z: &[f64]| -> Vec<u8> {
        z.iter().zip(graphs).map(|(zi, g)| g.resolvent_branch(1.0, *zi)).collect()
    };
    let u0: Vec<f64> = guess.map_or_else(|| problem.f.to_vec(), <[f64]>::to_vec);
    let mut z: Vec<f64> = u0.iter().zip(graphs).map(|(ui, g)| ui + g.inverse(*ui)).collect();
    let (mut u, mut chi) = split(&z);
    let mut r = problem.residual(&u, &chi);
    let mut res = grid.l1(&r);
    let mut seen = BTreeSet::new();
    seen.insert(pattern(&z));
    let mut iterations = 0;
    while res > params.tol {
        if iterations == params.max_iters {
            return Err(non_convergence(u, chi, res, iterations));
        }
        iterations += 1;
        let slopes: Vec<f64> = z
            .iter()
            .zip(graphs)
            .map(|(zi, g)| g.resolvent_slope(1.0, *zi))
            .collect();
        let mut jac = problem.op.matrix().clone();
        jac.scale_columns(&slopes);
        let mut jac = jac.shifted(0.0, lam);
        for (d, c) in jac.diag.iter_mut().zip(&slopes) {
            *d += 1.0 - c;
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let Some(delta) = jac.solve(&rhs) else {
            return Err(non_convergence(u, chi, res, iterations));
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = z.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            let (tu, tchi) = split(&trial);
            let tr = problem.residual(&tu, &tchi);
            let tres = grid.l1(&tr);
            let fresh = t == 1.0 && seen.insert(pattern(&trial));
            if tres < res || (fresh && tres.is_finite()) {
                z = trial;
                u = tu;
                chi = tchi;
                r = tr;
                res = tres;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(non_convergence(u, chi, res, iterations));
        }
    }
    let report = SolveReport {
        method: Method::Newton,
        iterations,
        stages: 0,
        final_regularization: None,
        residual: res,
        fell_back: false,
    };
    Ok((u, chi, report))
}

fn non_convergence(u: Vec<f64>, chi: Vec<f64>, residual: f64, iterations: usize) -> Error {
    Error::NonConvergence(Box::new(NonConvergence { u, chi, residual, iterations }))
}

/// One stage of the regularized problem `ε v + λ A v + β̄_μ(v) = f` at
/// fixed `(ε, μ)`.
///
/// With `χ = (I + μβ̄)⁻¹ v` and `u = β̄_μ(v) ∈ β̄(χ)` one has `v = χ + μu`.
/// The stage is solved in the Minty variable `z = χ + u` of the graph
/// (`χ = (I + β̄)⁻¹ z`, `u = z - χ`), which keeps every slope in `[0, 1]`
/// however small `μ` is and never forms the quotient `(v - χ)/μ`.
struct Stage<'p, 'a> {
    problem: &'p StationaryProblem<'a>,
    eps: f64,
    mu: f64,
    /// `f - λ b`, the right-hand side with the boundary offset folded in.
    f_shifted: Vec<f64>,
    /// `λ M`, the linear part of the scaled operator.
    scaled: Tridiagonal,
    /// `|λ M|`, for the rounding level of the residual.
    magnitude: Tridiagonal,
}

impl<'p, 'a> Stage<'p, 'a> {
    fn new(problem: &'p StationaryProblem<'a>, eps: f64, mu: f64) -> Self {
        let lam = problem.step_lambda;
        let f_shifted = problem
            .f
            .iter()
            .zip(problem.op.offset())
            .map(|(f, b)| f - lam * b)
            .collect();
        let scaled = problem.op.matrix().shifted(0.0, lam);
        let magnitude = scaled.magnitude();
        Self { problem, eps, mu, f_shifted, scaled, magnitude }
    }

    /// `(u, χ)` for the Minty variable `z`.
    fn split(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let chi: Vec<f64> = z
            .iter()
            .zip(self.problem.graphs)
            .map(|(zi, g)| g.resolvent_unchecked(1.0, *zi))
            .collect();
        let u = z.iter().zip(&chi).map(|(zi, c)| zi - c).collect();
        (u, chi)
    }

    fn pattern(&self, z: &[f64]) -> Vec<u8> {
        z.iter()
            .zip(self.problem.graphs)
            .map(|(zi, g)| g.resolvent_branch(1.0, *zi))
            .collect()
    }

    /// `v = χ + μ u`.
    fn regularized(&self, u: &[f64], chi: &[f64]) -> Vec<f64> {
        chi.iter().zip(u).map(|(c, ui)| c + self.mu * ui).collect()
    }

    /// Minty variable of the state reached from `v`.
    fn minty_from(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.problem.graphs)
            .map(|(vi, g)| {
                let (u, _) = g.yosida_offset(self.mu, vi - g.kink);
                let chi = g.kink + ((vi - g.kink) - self.mu * u);
                chi + u
            })
            .collect()
    }

    /// One application of the contraction, in `v`.
    fn sweep(&self, v: &[f64]) -> Vec<f64> {
        let s = 1.0 + self.mu * self.eps;
        let rhs: Vec<f64> = v
            .iter()
            .zip(self.problem.graphs)
            .zip(&self.f_shifted)
            .map(|((vi, g), f)| self.mu * f + g.resolvent_unchecked(self.mu, *vi))
            .collect();
        let w = self
            .scaled
            .shifted(1.0, self.mu / s)
            .solve(&rhs)
            .expect("I + cλA is a nonsingular M-matrix");
        w.into_iter().map(|x| x / s).collect()
    }

    /// Residual of `ε v + λ M v + u - (f - λb)` with `v = χ + μu`.
    fn residual(&self, z: &[f64]) -> Vec<f64> {
        let (u, chi) = self.split(z);
        let v = self.regularized(&u, &chi);
        let mut out = alloc::vec![0.0; z.len()];
        self.scaled.mul_vec(&v, &mut out);
        for i in 0..z.len() {
            out[i] += self.eps * v[i] + u[i] - self.f_shifted[i];
        }
        out
    }

    /// Size of the rounding error in evaluating the residual at `z`.
    fn rounding_level(&self, z: &[f64]) -> f64 {
        let (u, chi) = self.split(z);
        let v = self.regularized(&u, &chi);
        let abs_v: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        let mut out = alloc::vec![0.0; z.len()];
        self.magnitude.mul_vec(&abs_v, &mut out);
        for i in 0..z.len() {
            out[i] += self.eps * abs_v[i] + u[i].abs() + self.f_shifted[i].abs();
        }
        ROUNDING_FACTOR * f64::EPSILON * self.problem.grid().l1(&out)
    }

    /// Newton on the stage residual with the same step acceptance as the
    /// unregularized Newton path; plain sweeps when no step is accepted.
    /// The target `tol` is raised to the rounding level of the residual
    /// when that is larger; the returned flag tells whether it was met.
    fn solve(&self, mut z: Vec<f64>, tol: f64, max_iters: usize) -> (Vec<f64>, bool, usize) {
        let grid = self.problem.grid();
        let mut r = self.residual(&z);
        let mut res = grid.l1(&r);
        let mut seen = BTreeSet::new();
        seen.insert(self.pattern(&z));
        let mut iterations = 0;
        let met = |z: &[f64], res: f64| res <= tol || res <= self.rounding_level(z);
        while !met(&z, res) && iterations < max_iters {
            iterations += 1;
            // dχ/dz = c, du/dz = 1 - c, dv/dz = c + μ(1 - c)
            let c: Vec<f64> = z
                .iter()
                .zip(self.problem.graphs)
                .map(|(zi, g)| g.resolvent_slope(1.0, *zi))
                .collect();
            let dv: Vec<f64> = c.iter().map(|ci| ci + self.mu * (1.0 - ci)).collect();
            let mut jac = self.scaled.clone();
            jac.scale_columns(&dv);
            for i in 0..z.len() {
                jac.diag[i] += self.eps * dv[i] + (1.0 - c[i]);
            }
            let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
            let next = jac.solve(&rhs).and_then(|step| {
                let mut t = 1.0;
                for _ in 0..60 {
                    let trial: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + t * b).collect();
                    let tr = self.residual(&trial);
                    let tres = grid.l1(&tr);
                    let fresh = t == 1.0 && seen.insert(self.pattern(&trial));
                    if tres < res || (fresh && tres.is_finite()) {
                        return Some((trial, tr, tres));
                    }
                    t *= 0.5;
                }
                None
            });
            match next {
                Some((t, tr, tres)) => {
                    z = t;
                    r = tr;
                    res = tres;
                }
                None => {
                    let (u, chi) = self.split(&z);
                    let v = self.sweep(&self.regularized(&u, &chi));
                    z = self.minty_from(&v);
                    r = self.residual(&z);
                    res = grid.l1(&r);
                }
            }
        }
        let done = met(&z, res);
        (z, done, iterations)
    }
}

/// Multiple of the machine epsilon treated as rounding noise in a stage
/// residual.
const ROUNDING_FACTOR: f64 = 1.0;

/// One application of the fixed-point map at regularization `(ε, μ)`.
#[allow(clippy::too_many_arguments)]
pub fn fixed_point_sweep(
    v: &Field,
    op: &DiscreteOperator,
    graphs: &[KinkedGraph],
    step_lambda: f64,
    eps: f64,
    yosida_lambda: f64,
    f: &Field,
) -> Result<Field> {
    if v.grid() != op.grid() || f.grid() != op.grid() {
        return Err(Error::GridMismatch);
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParams(format!("eps must be positive, got {eps}")));
    }
    if !(yosida_lambda > 0.0) {
        return Err(Error::NonPositiveLambda(yosida_lambda));
    }
    let problem = StationaryProblem::new(op, graphs, step_lambda, f.values())?;
    let stage = Stage::new(&problem, eps, yosida_lambda);
    Field::new(*op.grid(), stage.sweep(v.values()))
}

/// Longest tail appended to the continuation schedule.
const EXTRA_STAGES: usize = 40;

/// The given schedule followed by up to [`EXTRA_STAGES`] further stages
/// that keep the last ratio (or a factor 4 for one-entry schedules). The
/// gap between the regularized and the exact residual is of order
/// `μ‖λA‖`, so stiff operators may need `μ` below the scheduled end.
fn extended_schedule(schedule: &[(f64, f64)]) -> impl Iterator<Item = (f64, f64)> + '_ {
    let last = schedule[schedule.len() - 1];
    let ratio = match schedule {
        [.., a, b] => (b.0 / a.0, b.1 / a.1),
        _ => (0.25, 0.25),
    };
    let tail = (1..=EXTRA_STAGES).map(move |k| {
        let k = k as i32;
        (last.0 * libm::pow(ratio.0, k as f64), last.1 * libm::pow(ratio.1, k as f64))
    });
    schedule.iter().copied().chain(tail)
}

fn continuation(
    problem: &StationaryProblem<'_>,
    params: &StationaryParams,
    chi0: Option<&[f64]>,
) -> Result<Solved> {
    let grid = problem.grid();
    let mut chi: Vec<f64> = chi0.map_or_else(|| problem.inverse(problem.f), <[f64]>::to_vec);
    let mut u: Vec<f64> = chi
        .iter()
        .zip(problem.graphs)
        .map(|(c, g)| g.eval(*c).lo)
        .collect();
    let mut iterations = 0;
    let mut settled_from: Option<Vec<f64>> = None;
    for (stage_no, (eps, mu)) in extended_schedule(&params.continuation).enumerate() {
        let stage = Stage::new(problem, eps, mu);
        let start: Vec<f64> = chi.iter().zip(&u).map(|(c, ui)| c + ui).collect();
        let (z, done, its) = stage.solve(start, 0.1 * params.tol, params.max_iters);
        iterations += its;
        (u, chi) = stage.split(&z);
        let residual = grid.l1(&problem.residual(&u, &chi));
        if !done {
            return Err(non_convergence(u, chi, residual, iterations));
        }
        let settled = settled_from
            .as_ref()
            .is_some_and(|p| grid.l1_diff(p, &u) <= params.tol);
        if settled && residual <= params.tol {
            let report = SolveReport {
                method: Method::FixedPoint,
                iterations,
                stages: stage_no + 1,
                final_regularization: Some((eps, mu)),
                residual,
                fell_back: false,
            };
            return Ok((u, chi, report));
        }
        settled_from = Some(u.clone());
    }
    let residual = grid.l1(&problem.residual(&u, &chi));
    Err(non_convergence(u, chi, residual, iterations))
}
