//! Scenario files: a TOML description of one run, its validation and its
//! translation into solver inputs.

use std::path::Path;

use hydrate_core::stationary::default_continuation;
use hydrate_core::{
    AdvectionScenario, Coefficient, DiscreteOperator, Field, FluidParams, Grid, Method,
    OperatorCoefficients, PhaseLaw, PressureBoundary, Profile, StationaryParams, TimeGrid,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub domain: DomainSpec,
    pub time: TimeSpec,
    pub phase: PhaseSpec,
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure: Option<PressureSpec>,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub source: SourceSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub x_left: f64,
    pub x_right: f64,
    pub cells: usize,
}

/// End time plus either a maximal step `dt` or a step count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSpec {
    Constant(f64),
    Affine { intercept: f64, slope: f64 },
    /// `[x, value]` pairs, linear in between, constant outside.
    Table(Vec<[f64; 2]>),
}

impl ProfileSpec {
    fn to_profile(&self) -> std::result::Result<Profile, String> {
        match self {
            ProfileSpec::Constant(c) => Ok(Profile::Constant(*c)),
            ProfileSpec::Affine { intercept, slope } => {
                Ok(Profile::Affine { intercept: *intercept, slope: *slope })
            }
            ProfileSpec::Table(points) => {
                Profile::table(points.iter().map(|p| (p[0], p[1])).collect()).map_err(|e| e.to_string())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub chi_star: ProfileSpec,
    pub ceiling: f64,
    #[serde(default = "unit_profile")]
    pub phi: ProfileSpec,
    #[serde(default = "one")]
    pub extension_slope: f64,
    /// Require `χ*` to be non-increasing in `x`.
    #[serde(default = "yes")]
    pub nonincreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocitySpec {
    Fixed(f64),
    PressureDriven,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub diffusion: f64,
    pub velocity: VelocitySpec,
    #[serde(default = "zero_profile")]
    pub reaction: ProfileSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureSpec {
    pub p_left: f64,
    pub p_right: f64,
    pub mu: f64,
    pub rho_l: f64,
    pub g: f64,
    pub kappa0: f64,
    #[serde(default = "three")]
    pub perm_exponent: f64,
    /// Hydrostatic datum at the top of the domain.
    #[serde(default)]
    pub datum: f64,
    #[serde(default)]
    pub freeze_permeability: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    #[default]
    Zero,
    Constant { value: f64 },
    /// Content of `χ = chi_l` on `[-length, 0)`, zero elsewhere.
    Pulse { chi_l: f64, length: f64 },
    /// `[x, u]` pairs, linear in between, constant outside.
    Table { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    #[default]
    Zero,
    Constant { value: f64 },
    Table { points: Vec<[f64; 2]> },
}

/// Dirichlet values of `χ`. With diffusion a missing side means zero; in
/// pure advection only the inflow side may be given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<f64>,
    /// The left value drops to zero after this time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left_until: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Newton,
    FixedPoint,
    /// Newton, with every step re-solved on the fixed-point path.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_method")]
    pub method: MethodSpec,
    /// `[eps, yosida_lambda]` stages of the fixed-point path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation: Option<Vec<[f64; 2]>>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iters: default_max_iters(),
            method: default_method(),
            continuation: None,
        }
    }
}

/// Requests comparison with the closed-form advection solution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    /// Top of the physical column; defaults to the right end of the domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Write fields at every `every`-th knot (first and last always).
    #[serde(default = "one_usize")]
    pub every: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { every: 1 }
    }
}

fn unit_profile() -> ProfileSpec {
    ProfileSpec::Constant(1.0)
}
fn zero_profile() -> ProfileSpec {
    ProfileSpec::Constant(0.0)
}
fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn yes() -> bool {
    true
}
fn one_usize() -> usize {
    1
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iters() -> usize {
    100
}
fn default_method() -> MethodSpec {
    MethodSpec::Newton
}

/// How the transport velocity is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Transport {
    Fixed { q: f64 },
    Pressure { boundary: PressureBoundary, datum: f64, freeze_permeability: bool },
}

/// Solver inputs for a validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub grid: Grid,
    pub law: PhaseLaw,
    pub diffusion: f64,
    pub reaction: Coefficient,
    pub dirichlet_left: f64,
    pub dirichlet_right: f64,
    pub left_until: Option<f64>,
    pub transport: Transport,
    pub u0: Field,
    pub source: Field,
    pub time: TimeGrid,
    pub params: StationaryParams,
    pub cross_check: bool,
    pub oracle: Option<AdvectionScenario>,
    pub every: usize,
}

impl Problem {
    /// Transport operator for velocity `q` with the given left value.
    pub fn operator(&self, q: f64, left: f64) -> hydrate_core::Result<DiscreteOperator> {
        let coeffs = OperatorCoefficients::new(self.diffusion, q, left, self.dirichlet_right)
            .with_reaction(self.reaction.clone());
        DiscreteOperator::assemble(self.grid, coeffs)
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let scenario = Self::from_toml(&text)?;
        scenario.check()?;
        Ok(scenario)
    }

    /// Canonical text: every field written out in a fixed order.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario values are representable in TOML")
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Applies command-line overrides; `dt` replaces any step count.
    pub fn with_overrides(mut self, cells: Option<usize>, dt: Option<f64>, t_end: Option<f64>) -> Self {
        if let Some(n) = cells {
            self.domain.cells = n;
        }
        if let Some(dt) = dt {
            self.time.dt = Some(dt);
            self.time.steps = None;
        }
        if let Some(t) = t_end {
            self.time.t_end = t;
        }
        self
    }

    pub fn check(&self) -> Result<()> {
        self.problem().map(|_| ())
    }

    /// Validates every block and builds the solver inputs. All problems
    /// found are reported together.
    pub fn problem(&self) -> Result<Problem> {
        let mut bad: Vec<String> = Vec::new();
        if self.name.trim().is_empty() {
            bad.push("name must not be empty".into());
        }
        let grid = Grid::new(self.domain.x_left, self.domain.x_right, self.domain.cells)
            .map_err(|e| bad.push(e.to_string()))
            .ok();
        let (a, b) = (self.domain.x_left, self.domain.x_right);

        let law = self.law(&mut bad);
        if let (Some(law), true) = (&law, a < b && a.is_finite() && b.is_finite()) {
            bad.extend(law.violations_on(a, b));
            if self.phase.nonincreasing && !law.chi_star.is_nonincreasing_on(a, b) {
                bad.push("chi_star must be non-increasing in x".into());
            }
        }

        let time = self.time_grid(&mut bad);
        let params = self.params(&mut bad);

        let d = self.operator.diffusion;
        if !(d >= 0.0 && d.is_finite()) {
            bad.push(format!("diffusion must be non-negative, got {d}"));
        }
        let reaction = self.operator.reaction.to_profile().map_err(|e| bad.push(format!("reaction: {e}"))).ok();
        let reaction = reaction.and_then(|r| {
            let g = grid?;
            let values: Vec<f64> = g.centers().map(|x| r.value(x)).collect();
            if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                bad.push("reaction must be non-negative".into());
            }
            Some(Coefficient::Values(values))
        });

        let transport = self.transport(&mut bad);
        let inflow_sign = match &transport {
            Some(Transport::Fixed { q }) => q.partial_cmp(&0.0),
            Some(Transport::Pressure { boundary, .. }) => boundary.p_left.partial_cmp(&boundary.p_right),
            None => None,
        };
        let (left, right) = self.boundary_values(d, inflow_sign, &transport, &mut bad);

        let u0 = match (grid, &law) {
            (Some(g), Some(l)) => self.initial(g, l, &mut bad),
            _ => None,
        };
        let source = grid.and_then(|g| self.source_field(g, &mut bad));
        let oracle = match (&law, &transport) {
            (Some(l), Some(t)) => self.oracle(l, t, d, &mut bad),
            _ => None,
        };
        if self.output.every == 0 {
            bad.push("output.every must be at least 1".into());
        }

        if let (Some(g), Some(r)) = (grid, &reaction) {
            let q = match &transport {
                Some(Transport::Fixed { q }) => *q,
                _ => 0.0,
            };
            let coeffs = OperatorCoefficients::new(d.max(0.0), q, left, right).with_reaction(r.clone());
            if let Err(e) = DiscreteOperator::assemble(g, coeffs) {
                bad.push(e.to_string());
            }
        }

        if !bad.is_empty() {
            return Err(SimError::Validation(bad));
        }
        let params = params.expect("validated");
        Ok(Problem {
            grid: grid.expect("validated"),
            law: law.expect("validated"),
            diffusion: d,
            reaction: reaction.expect("validated"),
            dirichlet_left: left,
            dirichlet_right: right,
            left_until: self.boundary.left_until,
            transport: transport.expect("validated"),
            u0: u0.expect("validated"),
            source: source.expect("validated"),
            time: time.expect("validated"),
            cross_check: self.solver.method == MethodSpec::Both,
            params,
            oracle,
            every: self.output.every,
        })
    }

    fn law(&self, bad: &mut Vec<String>) -> Option<PhaseLaw> {
        let chi_star = self.phase.chi_star.to_profile().map_err(|e| bad.push(format!("chi_star: {e}"))).ok();
        let phi = self.phase.phi.to_profile().map_err(|e| bad.push(format!("phi: {e}"))).ok();
        let (chi_star, phi) = (chi_star?, phi?);
        PhaseLaw::new(chi_star, self.phase.ceiling, phi, self.phase.extension_slope)
            .map_err(|e| bad.push(e.to_string()))
            .ok()
    }

    fn time_grid(&self, bad: &mut Vec<String>) -> Option<TimeGrid> {
        let t = &self.time;
        let built = match (t.dt, t.steps) {
            (Some(dt), None) => TimeGrid::with_max_step(0.0, t.t_end, dt),
            (None, Some(steps)) => TimeGrid::uniform(0.0, t.t_end, steps),
            _ => {
                bad.push("time needs exactly one of dt and steps".into());
                return None;
            }
        };
        built.map_err(|e| bad.push(e.to_string())).ok()
    }

    fn params(&self, bad: &mut Vec<String>) -> Option<StationaryParams> {
        let s = &self.solver;
        let continuation = match &s.continuation {
            Some(stages) => stages.iter().map(|p| (p[0], p[1])).collect(),
            None => default_continuation(),
        };
        let params = StationaryParams {
            tol: s.tol,
            max_iters: s.max_iters,
            method: match s.method {
                MethodSpec::FixedPoint => Method::FixedPoint,
                MethodSpec::Newton | MethodSpec::Both => Method::Newton,
            },
            continuation,
        };
        params.validate().map_err(|e| bad.push(e.to_string())).ok().map(|_| params)
    }

    fn transport(&self, bad: &mut Vec<String>) -> Option<Transport> {
        match (&self.operator.velocity, &self.pressure) {
            (VelocitySpec::Fixed(q), _) => {
                if !q.is_finite() {
                    bad.push(format!("velocity must be finite, got {q}"));
                    return None;
                }
                Some(Transport::Fixed { q: *q })
            }
            (VelocitySpec::PressureDriven, None) => {
                bad.push("pressure_driven velocity needs a [pressure] block".into());
                None
            }
            (VelocitySpec::PressureDriven, Some(p)) => {
                let fluid = FluidParams {
                    mu: p.mu,
                    rho_l: p.rho_l,
                    g: p.g,
                    kappa0: p.kappa0,
                    perm_exponent: p.perm_exponent,
                };
                let mut ok = true;
                if let Err(e) = fluid.validate() {
                    bad.push(e.to_string());
                    ok = false;
                }
                if !(p.p_left.is_finite() && p.p_right.is_finite() && p.datum.is_finite()) {
                    bad.push("pressure boundary values must be finite".into());
                    ok = false;
                }
                if self.boundary.left_until.is_some() {
                    bad.push("boundary.left_until is only supported with a fixed velocity".into());
                }
                ok.then_some(Transport::Pressure {
                    boundary: PressureBoundary { fluid, p_left: p.p_left, p_right: p.p_right },
                    datum: p.datum,
                    freeze_permeability: p.freeze_permeability,
                })
            }
        }
    }

    fn boundary_values(
        &self,
        diffusion: f64,
        inflow_sign: Option<std::cmp::Ordering>,
        transport: &Option<Transport>,
        bad: &mut Vec<String>,
    ) -> (f64, f64) {
        use std::cmp::Ordering::*;
        let bc = &self.boundary;
        for v in [bc.left, bc.right].into_iter().flatten() {
            if !v.is_finite() {
                bad.push(format!("boundary values must be finite, got {v}"));
            }
        }
        if let Some(t) = bc.left_until {
            if !(t > 0.0 && t.is_finite()) {
                bad.push(format!("boundary.left_until must be positive, got {t}"));
            }
            if bc.left.is_none() {
                bad.push("boundary.left_until needs boundary.left".into());
            }
        }
        if diffusion == 0.0 && transport.is_some() {
            let (inflow, outflow, given_in, given_out) = match inflow_sign {
                Some(Greater) => ("left", "right", bc.left, bc.right),
                Some(Less) => ("right", "left", bc.right, bc.left),
                _ => ("", "", None, None),
            };
            if !inflow.is_empty() {
                if given_in.is_none() {
                    bad.push(format!("pure advection needs an inflow value on the {inflow}"));
                }
                if given_out.is_some() {
                    bad.push(format!(
                        "pure advection takes no outflow boundary condition (remove boundary.{outflow})"
                    ));
                }
            } else if bc.left.is_some() || bc.right.is_some() {
                bad.push("without diffusion or flow the boundary values have no effect".into());
            }
        }
        (bc.left.unwrap_or(0.0), bc.right.unwrap_or(0.0))
    }

    fn initial(&self, grid: Grid, law: &PhaseLaw, bad: &mut Vec<String>) -> Option<Field> {
        let values: Vec<f64> = match &self.initial {
            InitialSpec::Zero => vec![0.0; grid.len()],
            InitialSpec::Constant { value } => vec![*value; grid.len()],
            InitialSpec::Pulse { chi_l, length } => {
                if !(*length > 0.0) || !chi_l.is_finite() {
                    bad.push("initial pulse needs a finite chi_l and a positive length".into());
                    return None;
                }
                if grid.x_left() > -length {
                    bad.push(format!(
                        "initial pulse on [-{length}, 0) needs x_left ≤ -{length}, got {}",
                        grid.x_left()
                    ));
                }
                grid.centers()
                    .map(|x| {
                        if (-length..0.0).contains(&x) {
                            law.graph_eval(x, *chi_l).lo
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            InitialSpec::Table { points } => {
                let profile = Profile::table(points.iter().map(|p| (p[0], p[1])).collect())
                    .map_err(|e| bad.push(format!("initial table: {e}")))
                    .ok()?;
                grid.centers().map(|x| profile.value(x)).collect()
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            bad.push("initial data must be finite".into());
            return None;
        }
        Field::new(grid, values).ok()
    }

    fn source_field(&self, grid: Grid, bad: &mut Vec<String>) -> Option<Field> {
        let values: Vec<f64> = match &self.source {
            SourceSpec::Zero => vec![0.0; grid.len()],
            SourceSpec::Constant { value } => vec![*value; grid.len()],
            SourceSpec::Table { points } => {
                let profile = Profile::table(points.iter().map(|p| (p[0], p[1])).collect())
                    .map_err(|e| bad.push(format!("source table: {e}")))
                    .ok()?;
                grid.centers().map(|x| profile.value(x)).collect()
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            bad.push("source must be finite".into());
            return None;
        }
        Field::new(grid, values).ok()
    }

    /// Oracle parameters: `χ_L` and the pulse length come from a switched
    /// inflow (`left`, `left_until`) or from a pulse initial condition.
    fn oracle(
        &self,
        law: &PhaseLaw,
        transport: &Transport,
        diffusion: f64,
        bad: &mut Vec<String>,
    ) -> Option<AdvectionScenario> {
        let spec = self.oracle.as_ref()?;
        let mut local = Vec::new();
        let q = match transport {
            Transport::Fixed { q } => *q,
            Transport::Pressure { .. } => {
                local.push("oracle comparison needs a fixed velocity".to_string());
                0.0
            }
        };
        if diffusion != 0.0 {
            local.push("oracle comparison needs zero diffusion".into());
        }
        if self.operator.reaction != ProfileSpec::Constant(0.0) {
            local.push("oracle comparison needs zero reaction".into());
        }
        if self.source != SourceSpec::Zero {
            local.push("oracle comparison needs a zero source".into());
        }
        let pulse = match (&self.initial, self.boundary.left, self.boundary.left_until) {
            (InitialSpec::Zero, Some(chi_l), Some(until)) => Some((chi_l, until * q)),
            (InitialSpec::Pulse { chi_l, length }, left, None) if left.unwrap_or(0.0) == 0.0 => {
                Some((*chi_l, *length))
            }
            _ => {
                local.push(
                    "oracle comparison needs either zero initial data with boundary.left and \
                     boundary.left_until, or a pulse initial condition with zero inflow"
                        .into(),
                );
                None
            }
        };
        let d_max = spec.d_max.unwrap_or(self.domain.x_right);
        if self.domain.x_left > 0.0 || d_max > self.domain.x_right {
            local.push(format!("the domain must contain the column (0, {d_max})"));
        }
        if !local.is_empty() {
            bad.extend(local);
            return None;
        }
        let (chi_l, length) = pulse?;
        AdvectionScenario::from_law(law, chi_l, length, q, d_max)
            .map_err(|e| bad.push(e.to_string()))
            .ok()
    }
}
