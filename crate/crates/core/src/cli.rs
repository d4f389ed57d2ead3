//! Run configuration, command implementations and artifact writers behind the
//! `rhjb` binary.
//!
//! Regimes are 1-indexed in every file this module reads or writes.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{QuadratureError, SimulationError, SolverError};
use crate::model::{
    validate_problem, CoefficientModel, LevyMeasureSpec, PayoffSpec, ProblemSpec, RegimeGenerator, Violation,
};
use crate::montecarlo::{GridPolicy, PathSample, Simulator, ValueEstimate};
use crate::policy::{extract_policy, extraction_boundary, free_boundary, BoundaryCurve, BoundarySlice, PolicyField};
use crate::quadrature::{build_quadrature, QuadratureSet};
use crate::solver::{solve, Grid, SolveReport, SolverSettings, ValueField};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("could not parse configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("{failed} of {total} validation points failed the dominance check")]
    ValidationFailed { failed: usize, total: usize },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invalid(_) | Self::Parse(_) => 2,
            Self::Solver(SolverError::ContractionViolation { .. }) => 3,
            Self::ValidationFailed { .. } => 4,
            _ => 1,
        }
    }
}

impl From<QuadratureError> for CliError {
    fn from(e: QuadratureError) -> Self {
        Self::Invalid(vec![Violation::new("quadrature.spacing", e.to_string())])
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientConfig {
    ExponentialLevy {
        drift: Vec<f64>,
        volatility: Vec<f64>,
        jump_scale: Vec<f64>,
    },
    LargeProducer {
        drift: Vec<f64>,
        volatility: Vec<f64>,
        jump_scale: Vec<f64>,
        impact: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffConfig {
    MiningLinear {
        extraction_cost: f64,
        fixed_cost: f64,
        salvage_strike: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevyConfig {
    None,
    Uniform { support: f64, mass: f64 },
    Triangular { support: f64, mass: f64 },
    /// Piecewise-linear density through `[z, value]` knots.
    Table { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub discount_rate: f64,
    pub horizon: f64,
    pub max_rate: f64,
    pub coefficients: CoefficientConfig,
    pub payoff: PayoffConfig,
    /// Rows and columns follow regime labels 1..m.
    pub generator: Vec<Vec<f64>>,
    pub levy: LevyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_max: f64,
    pub y_max: f64,
    pub n_s: usize,
    pub n_x: usize,
    pub n_y: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub spacing: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { spacing: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub control_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            tol: s.tol,
            max_iter: s.max_iter,
            control_points: s.control_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplePoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub regime: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub sample_points: Vec<SamplePoint>,
    /// `C` in the dominance tolerance `3·stderr + C·(dt + h + l + k)`.
    pub allowance: f64,
    /// Number of full trajectories written by `simulate`.
    pub trace_paths: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            n_paths: 10_000,
            seed: 20_240_601,
            sample_points: Vec::new(),
            allowance: 1.0,
            trace_paths: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryConfig {
    pub time_slices: Vec<f64>,
    pub reserve_slices: Vec<f64>,
}

/// One experiment: the problem, its discretization, and output location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub boundaries: BoundaryConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        let p = &self.problem;
        let coefficients = match &p.coefficients {
            CoefficientConfig::ExponentialLevy { drift, volatility, jump_scale } => CoefficientModel::ExponentialLevy {
                drift: drift.clone(),
                volatility: volatility.clone(),
                jump_scale: jump_scale.clone(),
            },
            CoefficientConfig::LargeProducer { drift, volatility, jump_scale, impact } => {
                CoefficientModel::LargeProducer {
                    drift: drift.clone(),
                    volatility: volatility.clone(),
                    jump_scale: jump_scale.clone(),
                    impact: *impact,
                }
            }
        };
        let payoff = match &p.payoff {
            PayoffConfig::MiningLinear { extraction_cost, fixed_cost, salvage_strike } => PayoffSpec::MiningLinear {
                extraction_cost: *extraction_cost,
                fixed_cost: *fixed_cost,
                salvage_strike: *salvage_strike,
            },
        };
        let levy = match &p.levy {
            LevyConfig::None => LevyMeasureSpec::none(),
            LevyConfig::Uniform { support, mass } => LevyMeasureSpec::uniform(*support, *mass),
            LevyConfig::Triangular { support, mass } => LevyMeasureSpec::triangular(*support, *mass),
            LevyConfig::Table { points } => LevyMeasureSpec::table(points.iter().map(|p| (p[0], p[1])).collect()),
        };
        ProblemSpec {
            discount_rate: p.discount_rate,
            horizon: p.horizon,
            max_rate: p.max_rate,
            coefficients,
            payoff,
            regimes: RegimeGenerator::new(p.generator.clone()),
            levy,
        }
    }

    pub fn grid(&self) -> Grid {
        Grid {
            horizon: self.problem.horizon,
            x_max: self.grid.x_max,
            y_max: self.grid.y_max,
            n_s: self.grid.n_s,
            n_x: self.grid.n_x,
            n_y: self.grid.n_y,
            regimes: self.problem.generator.len(),
        }
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            control_points: self.solver.control_points,
        }
    }

    /// Every violated invariant of the problem, grid and solver settings.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = prefixed("problem", validate_problem(&self.problem_spec()).violations);
        if let Err(SolverError::InvalidGrid(msg)) = self.grid().check() {
            out.push(Violation::new("grid", msg));
        }
        if !(self.quadrature.spacing.is_finite() && self.quadrature.spacing > 0.0) {
            out.push(Violation::new(
                "quadrature.spacing",
                format!("spacing must be positive, got {}", self.quadrature.spacing),
            ));
        }
        if !(self.solver.tol.is_finite() && self.solver.tol > 0.0) {
            out.push(Violation::new("solver.tol", "tolerance must be positive"));
        }
        if self.solver.max_iter == 0 {
            out.push(Violation::new("solver.max_iter", "must be at least 1"));
        }
        out
    }

    /// Additional checks for the commands that simulate.
    pub fn monte_carlo_violations(&self) -> Vec<Violation> {
        let mc = &self.monte_carlo;
        let mut out = Vec::new();
        if mc.n_paths < 2 {
            out.push(Violation::new(
                "monte_carlo.n_paths",
                format!("at least 2 paths are required, got {}", mc.n_paths),
            ));
        }
        if !(mc.dt.is_finite() && mc.dt > 0.0) {
            out.push(Violation::new("monte_carlo.dt", format!("time step must be positive, got {}", mc.dt)));
        }
        if !(mc.allowance.is_finite() && mc.allowance >= 0.0) {
            out.push(Violation::new("monte_carlo.allowance", "must be finite and non-negative"));
        }
        let m = self.problem.generator.len();
        for (k, p) in mc.sample_points.iter().enumerate() {
            if p.regime == 0 || p.regime > m {
                out.push(Violation::new(
                    format!("monte_carlo.sample_points[{k}].regime"),
                    format!("regime labels run from 1 to {m}, got {}", p.regime),
                ));
            }
            if !(p.x >= 0.0 && p.y >= 0.0 && p.s >= 0.0 && p.s <= self.problem.horizon) {
                out.push(Violation::new(
                    format!("monte_carlo.sample_points[{k}]"),
                    "point must satisfy 0 <= s <= horizon, x >= 0, y >= 0",
                ));
            }
        }
        out
    }
}

fn prefixed(prefix: &str, v: Vec<Violation>) -> Vec<Violation> {
    v.into_iter()
        .map(|mut v| {
            v.field = format!("{prefix}.{}", v.field);
            v
        })
        .collect()
}

/// The shipped two-regime oil-field experiment.
pub fn example5_config() -> RunConfig {
    RunConfig {
        problem: ProblemConfig {
            discount_rate: 0.005,
            horizon: 10.0,
            max_rate: 5000.0,
            coefficients: CoefficientConfig::LargeProducer {
                drift: vec![0.01, -0.01],
                volatility: vec![0.3, 0.2],
                jump_scale: vec![0.25, 0.3],
                impact: 0.001,
            },
            payoff: PayoffConfig::MiningLinear {
                extraction_cost: 25.0,
                fixed_cost: 5.0,
                salvage_strike: 30.0,
            },
            generator: vec![vec![-0.003, 0.003], vec![0.005, -0.005]],
            levy: LevyConfig::Uniform { support: 1.0, mass: 1.0 },
        },
        grid: GridConfig {
            x_max: 96.0,
            y_max: 10.0,
            n_s: 64,
            n_x: 64,
            n_y: 32,
        },
        quadrature: QuadratureConfig { spacing: 0.05 },
        solver: SolverConfig::default(),
        monte_carlo: MonteCarloConfig {
            sample_points: vec![
                SamplePoint { s: 0.0, x: 30.0, y: 5.0, regime: 1 },
                SamplePoint { s: 0.0, x: 21.0, y: 5.0, regime: 1 },
                SamplePoint { s: 0.0, x: 21.0, y: 5.0, regime: 2 },
                SamplePoint { s: 2.5, x: 36.0, y: 7.5, regime: 2 },
                SamplePoint { s: 5.0, x: 24.0, y: 2.5, regime: 1 },
            ],
            ..MonteCarloConfig::default()
        },
        boundaries: BoundaryConfig {
            time_slices: vec![0.0, 4.75, 7.25, 10.0],
            reserve_slices: vec![0.0, 4.0, 7.0, 10.0],
        },
        output_dir: default_output_dir(),
    }
}

/// Everything a command computes before writing files.
pub struct Solved {
    pub spec: ProblemSpec,
    pub grid: Grid,
    pub quad: QuadratureSet,
    pub settings: SolverSettings,
    pub values: ValueField,
    pub report: SolveReport,
}

pub fn solve_config(config: &RunConfig) -> Result<Solved, CliError> {
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(CliError::Invalid(violations));
    }
    let spec = config.problem_spec();
    let grid = config.grid();
    let settings = config.settings();
    let quad = build_quadrature(&spec.levy, config.quadrature.spacing)?;
    let (values, report) = solve(&spec, &grid, &quad, &settings)?;
    Ok(Solved {
        spec,
        grid,
        quad,
        settings,
        values,
        report,
    })
}

/// Floats with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(fs::File::create(path).map_err(io_err(path))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
}

pub fn write_value_csv(path: &Path, values: &ValueField) -> Result<(), CliError> {
    let g = &values.grid;
    let mut w = create(path)?;
    let mut body = || -> io::Result<()> {
        writeln!(w, "s,x,y,regime,V")?;
        for n in 0..=g.n_s {
            let slice = values.slice(n);
            for (node, v) in slice.iter().enumerate() {
                let (ix, iy, i) = g.coords(node);
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    fmt_f64(g.s(n)),
                    fmt_f64(g.x(ix)),
                    fmt_f64(g.y(iy)),
                    i + 1,
                    fmt_f64(*v)
                )?;
            }
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

pub fn write_policy_csv(path: &Path, policy: &PolicyField) -> Result<(), CliError> {
    let g = &policy.grid;
    let len = g.slice_len();
    let mut w = create(path)?;
    let mut body = || -> io::Result<()> {
        writeln!(w, "s,x,y,regime,u_star,stop")?;
        for n in 0..=g.n_s {
            for node in 0..len {
                let (ix, iy, i) = g.coords(node);
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    fmt_f64(g.s(n)),
                    fmt_f64(g.x(ix)),
                    fmt_f64(g.y(iy)),
                    i + 1,
                    fmt_f64(policy.u_star[n * len + node]),
                    u8::from(policy.stop[n * len + node])
                )?;
            }
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary<'a> {
    pub grid: &'a Grid,
    pub settings: &'a SolverSettings,
    pub quadrature_spacing: f64,
    pub quadrature_mass: f64,
    pub monotone: bool,
    pub solve: &'a SolveReport,
}

/// `solve`: writes `value.csv` and `report.json`.
pub fn cmd_solve(config: &RunConfig, out: &Path) -> Result<Solved, CliError> {
    let solved = solve_config(config)?;
    write_value_csv(&out.join("value.csv"), &solved.values)?;
    let summary = SolveSummary {
        grid: &solved.grid,
        settings: &solved.settings,
        quadrature_spacing: solved.quad.spacing,
        quadrature_mass: solved.quad.mass,
        monotone: solved.report.scheme.monotone,
        solve: &solved.report,
    };
    write_json(&out.join("report.json"), &summary)?;
    Ok(solved)
}

/// One boundary group as written to `boundaries.json`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryGroup {
    pub kind: &'static str,
    pub regime: usize,
    pub fixed_axis: &'static str,
    pub fixed_value: f64,
    pub points: usize,
    pub no_flip_all_lower: usize,
    pub boundary_below_grid: usize,
    pub no_flip_other: usize,
}

fn boundary_cuts(config: &RunConfig, grid: &Grid) -> Vec<BoundarySlice> {
    let mut cuts: Vec<BoundarySlice> = config
        .boundaries
        .time_slices
        .iter()
        .map(|&s| BoundarySlice::FixedTime(grid.nearest_time(s)))
        .collect();
    cuts.extend(
        config
            .boundaries
            .reserve_slices
            .iter()
            .map(|&y| BoundarySlice::FixedReserve(grid.nearest_reserve(y))),
    );
    cuts
}

fn write_boundary_csv(path: &Path, grid: &Grid, curves: &[BoundaryCurve]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let mut body = || -> io::Result<()> {
        writeln!(w, "fixed_axis,fixed_value,param,x_boundary")?;
        for c in curves {
            let (axis, value) = fixed_axis(grid, c.slice);
            for &(param, xb) in &c.points {
                writeln!(w, "{axis},{},{},{}", fmt_f64(value), fmt_f64(param), fmt_f64(xb))?;
            }
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

fn fixed_axis(grid: &Grid, slice: BoundarySlice) -> (&'static str, f64) {
    match slice {
        BoundarySlice::FixedTime(n) => ("s", grid.s(n)),
        BoundarySlice::FixedReserve(iy) => ("y", grid.y(iy)),
    }
}

pub struct PolicyArtifacts {
    pub solved: Solved,
    pub policy: PolicyField,
    pub groups: Vec<BoundaryGroup>,
}

/// `policy`: writes `policy.csv`, `boundary_<regime>.csv` (stopping
/// boundary), `extraction_<regime>.csv` (rate switching curve) and
/// `boundaries.json` with per-group flip counts.
pub fn cmd_policy(config: &RunConfig, out: &Path) -> Result<PolicyArtifacts, CliError> {
    let solved = solve_config(config)?;
    let policy = extract_policy(&solved.values, &solved.spec, &solved.quad, &solved.settings);
    write_policy_csv(&out.join("policy.csv"), &policy)?;

    let grid = solved.grid;
    let cuts = boundary_cuts(config, &grid);
    let mut groups = Vec::new();
    for regime in 0..grid.regimes {
        for (kind, file) in [("stopping", "boundary"), ("extraction", "extraction")] {
            let curves: Vec<BoundaryCurve> = cuts
                .iter()
                .map(|&cut| match kind {
                    "stopping" => free_boundary(&policy, cut, regime),
                    _ => extraction_boundary(&policy, cut, regime),
                })
                .collect();
            write_boundary_csv(&out.join(format!("{file}_{}.csv", regime + 1)), &grid, &curves)?;
            for c in &curves {
                let (axis, value) = fixed_axis(&grid, c.slice);
                groups.push(BoundaryGroup {
                    kind,
                    regime: regime + 1,
                    fixed_axis: axis,
                    fixed_value: value,
                    points: c.points.len(),
                    no_flip_all_lower: c.all_lower,
                    boundary_below_grid: c.all_upper,
                    no_flip_other: c.other,
                });
            }
        }
    }
    write_json(&out.join("boundaries.json"), &groups)?;
    Ok(PolicyArtifacts { solved, policy, groups })
}

/// A sample point snapped to its nearest lattice node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnappedPoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub regime: usize,
    #[serde(skip)]
    pub index: (usize, usize, usize, usize),
}

pub fn snap(grid: &Grid, p: &SamplePoint) -> SnappedPoint {
    let (n, ix, iy) = (grid.nearest_time(p.s), grid.nearest_price(p.x), grid.nearest_reserve(p.y));
    SnappedPoint {
        s: grid.s(n),
        x: grid.x(ix),
        y: grid.y(iy),
        regime: p.regime,
        index: (n, ix, iy, p.regime - 1),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointCheck {
    pub point: SnappedPoint,
    pub grid_v: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationOutcome {
    pub allowance: f64,
    pub discretization: f64,
    pub points: Vec<PointCheck>,
    pub all_pass: bool,
}

/// Monte Carlo estimate under the grid policy at every configured sample
/// point, checked against `mean ≤ V + 3·stderr + C·(dt + h + l + k)`.
pub fn validate_against(
    config: &RunConfig,
    spec: &ProblemSpec,
    values: &ValueField,
    policy: &PolicyField,
) -> Result<ValidationOutcome, CliError> {
    let mc = &config.monte_carlo;
    let g = &values.grid;
    let discretization = mc.dt + g.price_step() + g.reserve_step() + g.time_step();
    let sim = Simulator::new(spec);
    let rule = GridPolicy::new(policy);
    let mut points = Vec::new();
    for (k, p) in mc.sample_points.iter().enumerate() {
        let point = snap(g, p);
        let (n, ix, iy, i) = point.index;
        let grid_v = values.get(n, ix, iy, i);
        let est = sim.estimate(&rule, point.s, point.x, point.y, i, mc.dt, mc.n_paths, mc.seed.wrapping_add(k as u64))?;
        let tolerance = 3.0 * est.stderr + mc.allowance * discretization;
        points.push(PointCheck {
            point,
            grid_v,
            mc_mean: est.mean,
            mc_stderr: est.stderr,
            tolerance,
            pass: est.mean <= grid_v + tolerance,
        });
    }
    let all_pass = points.iter().all(|p| p.pass);
    Ok(ValidationOutcome {
        allowance: mc.allowance,
        discretization,
        points,
        all_pass,
    })
}

fn check_monte_carlo(config: &RunConfig) -> Result<(), CliError> {
    let mut v = config.violations();
    v.extend(config.monte_carlo_violations());
    if v.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(v))
    }
}

/// `validate`: writes `validation.json`; fails with exit code 4 when any
/// point breaks the dominance tolerance.
pub fn cmd_validate(config: &RunConfig, out: &Path) -> Result<ValidationOutcome, CliError> {
    check_monte_carlo(config)?;
    let solved = solve_config(config)?;
    let policy = extract_policy(&solved.values, &solved.spec, &solved.quad, &solved.settings);
    finish_validation(config, &solved, &policy, out)
}

fn finish_validation(
    config: &RunConfig,
    solved: &Solved,
    policy: &PolicyField,
    out: &Path,
) -> Result<ValidationOutcome, CliError> {
    let outcome = validate_against(config, &solved.spec, &solved.values, policy)?;
    write_json(&out.join("validation.json"), &outcome)?;
    if outcome.all_pass {
        Ok(outcome)
    } else {
        Err(CliError::ValidationFailed {
            failed: outcome.points.iter().filter(|p| !p.pass).count(),
            total: outcome.points.len(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationPoint {
    pub point: SnappedPoint,
    pub estimate: ValueEstimate,
}

/// `simulate`: Monte Carlo estimates under the solver policy at each sample
/// point (`estimates.json`) and a few full trajectories from the first point
/// (`paths.csv`).
pub fn cmd_simulate(config: &RunConfig, out: &Path) -> Result<Vec<SimulationPoint>, CliError> {
    check_monte_carlo(config)?;
    let solved = solve_config(config)?;
    let policy = extract_policy(&solved.values, &solved.spec, &solved.quad, &solved.settings);
    let mc = &config.monte_carlo;
    let sim = Simulator::new(&solved.spec);
    let rule = GridPolicy::new(&policy);
    let mut results = Vec::new();
    for (k, p) in mc.sample_points.iter().enumerate() {
        let point = snap(&solved.grid, p);
        let estimate = sim.estimate(
            &rule,
            point.s,
            point.x,
            point.y,
            p.regime - 1,
            mc.dt,
            mc.n_paths,
            mc.seed.wrapping_add(k as u64),
        )?;
        results.push(SimulationPoint { point, estimate });
    }
    write_json(&out.join("estimates.json"), &results)?;

    let mut traces = Vec::new();
    if let Some(p) = mc.sample_points.first() {
        let point = snap(&solved.grid, p);
        for t in 0..mc.trace_paths as u64 {
            traces.push(sim.path(&rule, point.s, point.x, point.y, p.regime - 1, mc.dt, mc.seed, t)?);
        }
    }
    write_paths_csv(&out.join("paths.csv"), &traces)?;
    Ok(results)
}

fn write_paths_csv(path: &Path, paths: &[PathSample]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let mut body = || -> io::Result<()> {
        writeln!(w, "path,t,x,y,regime,u")?;
        for (k, p) in paths.iter().enumerate() {
            for j in 0..p.times.len() {
                writeln!(
                    w,
                    "{k},{},{},{},{},{}",
                    fmt_f64(p.times[j]),
                    fmt_f64(p.prices[j]),
                    fmt_f64(p.reserves[j]),
                    p.regimes[j] + 1,
                    fmt_f64(p.controls[j])
                )?;
            }
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

/// `example5`: writes the shipped config into `out` and runs solve, policy
/// and validate there.
pub fn cmd_example5(out: &Path) -> Result<ValidationOutcome, CliError> {
    let mut config = example5_config();
    config.output_dir = out.to_path_buf();
    fs::create_dir_all(out).map_err(io_err(out))?;
    let path = out.join("config.json");
    fs::write(&path, config.to_json()).map_err(io_err(&path))?;
    check_monte_carlo(&config)?;

    let solved = solve_config(&config)?;
    write_value_csv(&out.join("value.csv"), &solved.values)?;
    let summary = SolveSummary {
        grid: &solved.grid,
        settings: &solved.settings,
        quadrature_spacing: solved.quad.spacing,
        quadrature_mass: solved.quad.mass,
        monotone: solved.report.scheme.monotone,
        solve: &solved.report,
    };
    write_json(&out.join("report.json"), &summary)?;
    let artifacts = cmd_policy(&config, out)?;
    finish_validation(&config, &artifacts.solved, &artifacts.policy, out)
}
