//! Problem-instance data: regime generator, Lévy measure, price coefficients,
//! payoffs, and the validation pass over all of them.
//!
//! Regimes are 0-indexed here. User-facing surfaces (config files, CSV output)
//! use 1-indexed labels.

use std::fmt;
use std::sync::Arc;

use crate::error::ModelError;

/// Tolerance on generator row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Number of sample points used when scanning a density for negative values.
const DENSITY_SCAN_POINTS: usize = 4001;

/// Rate matrix of the continuous-time Markov chain driving the regimes.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeGenerator {
    rates: Vec<Vec<f64>>,
}

impl RegimeGenerator {
    /// Wraps a rate matrix without checking it. Use [`validate_problem`] or
    /// [`RegimeGenerator::violations`] to inspect it.
    pub fn new(rates: Vec<Vec<f64>>) -> Self {
        Self { rates }
    }

    /// Single-regime generator (the zero 1x1 matrix).
    pub fn single() -> Self {
        Self::new(vec![vec![0.0]])
    }

    pub fn regimes(&self) -> usize {
        self.rates.len()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from][to]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rates
    }

    /// Total leaving rate `-q_ii`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.rates[i][i]
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let m = self.rates.len();
        if m == 0 {
            out.push(Violation::new("generator", "generator must have at least one regime"));
            return out;
        }
        for (i, row) in self.rates.iter().enumerate() {
            if row.len() != m {
                out.push(Violation::new(
                    "generator",
                    format!("row {} has {} entries, expected {}", i + 1, row.len(), m),
                ));
                continue;
            }
            for (j, &q) in row.iter().enumerate() {
                if !q.is_finite() {
                    out.push(Violation::new(
                        "generator",
                        format!("rate q[{}][{}] is not finite", i + 1, j + 1),
                    ));
                } else if i != j && q < 0.0 {
                    out.push(Violation::new(
                        "generator",
                        format!("negative off-diagonal rate q[{}][{}] = {}", i + 1, j + 1, q),
                    ));
                }
            }
            let sum: f64 = row.iter().sum();
            if !(sum.abs() <= ROW_SUM_TOL) {
                out.push(Violation::new(
                    "generator",
                    format!("row sum ≠ 0 in row {} (sum = {})", i + 1, sum),
                ));
            }
        }
        out
    }
}

type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Finite Lévy measure given by a density on the bounded support `[-R, R]`.
#[derive(Clone)]
pub struct LevyMeasureSpec {
    density: DensityFn,
    radius: f64,
    declared_mass: Option<f64>,
}

impl fmt::Debug for LevyMeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyMeasureSpec")
            .field("radius", &self.radius)
            .field("declared_mass", &self.declared_mass)
            .finish_non_exhaustive()
    }
}

impl LevyMeasureSpec {
    /// Density `density(z)` on `[-radius, radius]`, zero outside.
    pub fn from_density<F>(radius: f64, density: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            density: Arc::new(density),
            radius,
            declared_mass: None,
        }
    }

    /// The null measure (no jumps).
    pub fn none() -> Self {
        Self::from_density(1.0, |_| 0.0).with_declared_mass(0.0)
    }

    /// Constant density with total mass `mass` on `[-radius, radius]`.
    pub fn uniform(radius: f64, mass: f64) -> Self {
        let level = mass / (2.0 * radius);
        Self::from_density(radius, move |_| level).with_declared_mass(mass)
    }

    /// Tent-shaped density peaking at zero with total mass `mass`.
    pub fn triangular(radius: f64, mass: f64) -> Self {
        let peak = mass / radius;
        Self::from_density(radius, move |z| peak * (1.0 - z.abs() / radius).max(0.0))
            .with_declared_mass(mass)
    }

    /// Piecewise-linear density through `(z, value)` knots, zero outside the
    /// knot range. The support radius is the largest `|z|` among the knots.
    pub fn table(points: Vec<(f64, f64)>) -> Self {
        let mut pts = points;
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let radius = pts.iter().fold(0.0_f64, |acc, p| acc.max(p.0.abs()));
        let mass = pts
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum::<f64>();
        let knots = pts.clone();
        Self::from_density(radius, move |z| piecewise_linear(&knots, z)).with_declared_mass(mass)
    }

    pub fn with_declared_mass(mut self, mass: f64) -> Self {
        self.declared_mass = Some(mass);
        self
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn declared_mass(&self) -> Option<f64> {
        self.declared_mass
    }

    /// Density at `z`; zero outside the support.
    pub fn density(&self, z: f64) -> f64 {
        if z.abs() > self.radius {
            0.0
        } else {
            (self.density)(z)
        }
    }

    /// Total mass Γ: the declared value if present, otherwise a fine
    /// composite Simpson integral over the support.
    pub fn reference_mass(&self) -> f64 {
        if let Some(m) = self.declared_mass {
            return m;
        }
        let panels = 1 << 14;
        let step = 2.0 * self.radius / panels as f64;
        let mut sum = self.density(-self.radius) + self.density(self.radius);
        for j in 1..panels {
            let w = if j % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * self.density(-self.radius + j as f64 * step);
        }
        sum * step / 3.0
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.radius.is_finite() && self.radius > 0.0) {
            out.push(Violation::new(
                "levy.support",
                format!("support radius must be positive and finite, got {}", self.radius),
            ));
            return out;
        }
        let step = 2.0 * self.radius / (DENSITY_SCAN_POINTS - 1) as f64;
        let mut negative = None;
        let mut non_finite = false;
        for j in 0..DENSITY_SCAN_POINTS {
            let z = -self.radius + j as f64 * step;
            let d = (self.density)(z);
            if !d.is_finite() {
                non_finite = true;
            } else if d < 0.0 && negative.is_none() {
                negative = Some((z, d));
            }
        }
        if let Some((z, d)) = negative {
            out.push(Violation::new(
                "levy.density",
                format!("negative Lévy density {} at z = {}", d, z),
            ));
        }
        if non_finite {
            out.push(Violation::new("levy.density", "Lévy density is not finite on the support"));
        }
        if let Some(m) = self.declared_mass {
            if !(m.is_finite() && m >= 0.0) {
                out.push(Violation::new("levy.mass", format!("total mass must be finite and ≥ 0, got {}", m)));
            }
        }
        out
    }
}

fn piecewise_linear(knots: &[(f64, f64)], z: f64) -> f64 {
    if knots.is_empty() || z < knots[0].0 || z > knots[knots.len() - 1].0 {
        return 0.0;
    }
    let k = knots.partition_point(|p| p.0 <= z);
    if k == 0 {
        return knots[0].1;
    }
    if k == knots.len() {
        return knots[k - 1].1;
    }
    let (z0, v0) = knots[k - 1];
    let (z1, v1) = knots[k];
    if z1 == z0 {
        return v1;
    }
    v0 + (v1 - v0) * (z - z0) / (z1 - z0)
}

pub type DriftFn = Arc<dyn Fn(f64, f64, f64, usize) -> f64 + Send + Sync>;
pub type JumpFn = Arc<dyn Fn(f64, f64, f64, usize, f64) -> f64 + Send + Sync>;

/// Price dynamics coefficients.
#[derive(Clone)]
pub enum CoefficientModel {
    /// Arbitrary `mu(t,x,u,i)`, `sigma(t,x,u,i)`, `gamma(t,x,u,i,z)`.
    /// The Lipschitz and growth constants are informational only.
    GeneralCallbacks {
        drift: DriftFn,
        volatility: DriftFn,
        jump: JumpFn,
        lipschitz: f64,
        growth: f64,
    },
    /// `mu = x*drift[i]`, `sigma = x*volatility[i]`, `gamma = x*jump_scale[i]*z`.
    ExponentialLevy {
        drift: Vec<f64>,
        volatility: Vec<f64>,
        jump_scale: Vec<f64>,
    },
    /// Exponential Lévy with drift `x*(drift[i] - impact*u)`.
    LargeProducer {
        drift: Vec<f64>,
        volatility: Vec<f64>,
        jump_scale: Vec<f64>,
        impact: f64,
    },
}

impl fmt::Debug for CoefficientModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GeneralCallbacks { lipschitz, growth, .. } => f
                .debug_struct("GeneralCallbacks")
                .field("lipschitz", lipschitz)
                .field("growth", growth)
                .finish_non_exhaustive(),
            Self::ExponentialLevy { drift, volatility, jump_scale } => f
                .debug_struct("ExponentialLevy")
                .field("drift", drift)
                .field("volatility", volatility)
                .field("jump_scale", jump_scale)
                .finish(),
            Self::LargeProducer { drift, volatility, jump_scale, impact } => f
                .debug_struct("LargeProducer")
                .field("drift", drift)
                .field("volatility", volatility)
                .field("jump_scale", jump_scale)
                .field("impact", impact)
                .finish(),
        }
    }
}

impl CoefficientModel {
    /// Drift and volatility at `(t, x, u, i)`.
    pub fn drift_vol(&self, t: f64, x: f64, u: f64, i: usize) -> (f64, f64) {
        match self {
            Self::GeneralCallbacks { drift, volatility, .. } => (drift(t, x, u, i), volatility(t, x, u, i)),
            Self::ExponentialLevy { drift, volatility, .. } => (x * drift[i], x * volatility[i]),
            Self::LargeProducer { drift, volatility, impact, .. } => (x * (drift[i] - impact * u), x * volatility[i]),
        }
    }

    /// Jump size `gamma(t, x, u, i, z)`.
    pub fn jump(&self, t: f64, x: f64, u: f64, i: usize, z: f64) -> f64 {
        match self {
            Self::GeneralCallbacks { jump, .. } => jump(t, x, u, i, z),
            Self::ExponentialLevy { jump_scale, .. } | Self::LargeProducer { jump_scale, .. } => x * jump_scale[i] * z,
        }
    }

    /// True when drift, volatility and jumps are all affine in `u`.
    pub fn affine_in_control(&self) -> bool {
        !matches!(self, Self::GeneralCallbacks { .. })
    }

    fn violations(&self, regimes: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check_vec = |name: &str, v: &[f64]| {
            if v.len() != regimes {
                out.push(Violation::new(
                    format!("coefficients.{name}"),
                    format!("expected {} entries (one per regime), got {}", regimes, v.len()),
                ));
            }
            if v.iter().any(|c| !c.is_finite()) {
                out.push(Violation::new(format!("coefficients.{name}"), "entries must be finite"));
            }
        };
        match self {
            Self::GeneralCallbacks { lipschitz, growth, .. } => {
                for (name, c) in [("lipschitz", lipschitz), ("growth", growth)] {
                    if !(c.is_finite() && *c > 0.0) {
                        out.push(Violation::new(
                            format!("coefficients.{name}"),
                            format!("declared constant must be positive and finite, got {}", c),
                        ));
                    }
                }
            }
            Self::ExponentialLevy { drift, volatility, jump_scale } => {
                check_vec("drift", drift);
                check_vec("volatility", volatility);
                check_vec("jump_scale", jump_scale);
            }
            Self::LargeProducer { drift, volatility, jump_scale, impact } => {
                check_vec("drift", drift);
                check_vec("volatility", volatility);
                check_vec("jump_scale", jump_scale);
                if !(*impact >= 0.0 && *impact < 1.0) {
                    out.push(Violation::new(
                        "coefficients.impact",
                        format!("impact must lie in [0, 1), got {}", impact),
                    ));
                }
            }
        }
        out
    }
}

pub type RunningFn = Arc<dyn Fn(f64, f64, f64, f64, usize) -> f64 + Send + Sync>;
pub type StoppingFn = Arc<dyn Fn(f64, f64, f64, usize) -> f64 + Send + Sync>;

/// Running reward `L(t,x,y,u,i)` and stopping reward `Phi(t,x,y,i)`.
#[derive(Clone)]
pub enum PayoffSpec {
    GeneralCallbacks {
        running: RunningFn,
        stopping: StoppingFn,
    },
    /// `L = (x - extraction_cost)*u - fixed_cost`, `Phi = (x - salvage_strike)*y`.
    MiningLinear {
        extraction_cost: f64,
        fixed_cost: f64,
        salvage_strike: f64,
    },
}

impl fmt::Debug for PayoffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GeneralCallbacks { .. } => f.debug_struct("GeneralCallbacks").finish_non_exhaustive(),
            Self::MiningLinear { extraction_cost, fixed_cost, salvage_strike } => f
                .debug_struct("MiningLinear")
                .field("extraction_cost", extraction_cost)
                .field("fixed_cost", fixed_cost)
                .field("salvage_strike", salvage_strike)
                .finish(),
        }
    }
}

impl PayoffSpec {
    /// Convenience constructor for closure-based payoffs.
    pub fn general<L, P>(running: L, stopping: P) -> Self
    where
        L: Fn(f64, f64, f64, f64, usize) -> f64 + Send + Sync + 'static,
        P: Fn(f64, f64, f64, usize) -> f64 + Send + Sync + 'static,
    {
        Self::GeneralCallbacks {
            running: Arc::new(running),
            stopping: Arc::new(stopping),
        }
    }

    pub fn running(&self, t: f64, x: f64, y: f64, u: f64, i: usize) -> f64 {
        match self {
            Self::GeneralCallbacks { running, .. } => running(t, x, y, u, i),
            Self::MiningLinear { extraction_cost, fixed_cost, .. } => (x - extraction_cost) * u - fixed_cost,
        }
    }

    pub fn stopping(&self, t: f64, x: f64, y: f64, i: usize) -> f64 {
        match self {
            Self::GeneralCallbacks { stopping, .. } => stopping(t, x, y, i),
            Self::MiningLinear { salvage_strike, .. } => (x - salvage_strike) * y,
        }
    }

    pub fn affine_in_control(&self) -> bool {
        matches!(self, Self::MiningLinear { .. })
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if let Self::MiningLinear { extraction_cost, fixed_cost, salvage_strike } = self {
            for (name, v) in [
                ("extraction_cost", extraction_cost),
                ("fixed_cost", fixed_cost),
                ("salvage_strike", salvage_strike),
            ] {
                if !v.is_finite() {
                    out.push(Violation::new(format!("payoff.{name}"), "must be finite"));
                }
            }
        }
        out
    }
}

/// A complete problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub discount_rate: f64,
    pub horizon: f64,
    pub max_rate: f64,
    pub coefficients: CoefficientModel,
    pub payoff: PayoffSpec,
    pub regimes: RegimeGenerator,
    pub levy: LevyMeasureSpec,
}

impl ProblemSpec {
    pub fn regime_count(&self) -> usize {
        self.regimes.regimes()
    }

    /// True when the Hamiltonian is affine in the control, so only the
    /// endpoints of `[0, max_rate]` need to be searched.
    pub fn bang_bang(&self) -> bool {
        self.coefficients.affine_in_control() && self.payoff.affine_in_control()
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations
            .iter()
            .any(|v| v.field.contains(needle) || v.message.contains(needle))
    }
}

/// Lists every violated invariant of `spec`. An empty report means valid.
pub fn validate_problem(spec: &ProblemSpec) -> ValidationReport {
    let mut violations = Vec::new();
    if !(spec.discount_rate.is_finite() && spec.discount_rate > 0.0) {
        violations.push(Violation::new(
            "discount_rate",
            format!("discount rate must be > 0, got {}", spec.discount_rate),
        ));
    }
    if !(spec.horizon.is_finite() && spec.horizon > 0.0) {
        violations.push(Violation::new(
            "horizon",
            format!("horizon must be > 0, got {}", spec.horizon),
        ));
    }
    if !(spec.max_rate.is_finite() && spec.max_rate >= 0.0) {
        violations.push(Violation::new(
            "max_rate",
            format!("maximum extraction rate must be ≥ 0, got {}", spec.max_rate),
        ));
    }
    violations.extend(spec.regimes.violations());
    violations.extend(spec.coefficients.violations(spec.regimes.regimes()));
    violations.extend(spec.payoff.violations());
    violations.extend(spec.levy.violations());
    ValidationReport { violations }
}

/// Drift and volatility at a point together with the jump map `z -> gamma`.
pub struct CoefficientValues<'a> {
    pub drift: f64,
    pub volatility: f64,
    spec: &'a ProblemSpec,
    t: f64,
    x: f64,
    u: f64,
    regime: usize,
}

impl CoefficientValues<'_> {
    pub fn jump(&self, z: f64) -> f64 {
        self.spec.coefficients.jump(self.t, self.x, self.u, self.regime, z)
    }
}

pub fn eval_coefficients(
    spec: &ProblemSpec,
    t: f64,
    x: f64,
    u: f64,
    regime: usize,
) -> Result<CoefficientValues<'_>, ModelError> {
    let m = spec.regime_count();
    if regime >= m {
        return Err(ModelError::RegimeOutOfRange { regime, regimes: m });
    }
    let (drift, volatility) = spec.coefficients.drift_vol(t, x, u, regime);
    Ok(CoefficientValues {
        drift,
        volatility,
        spec,
        t,
        x,
        u,
        regime,
    })
}

/// Running and stopping rewards `(L, Phi)` at a point.
pub fn eval_payoffs(spec: &ProblemSpec, t: f64, x: f64, y: f64, u: f64, regime: usize) -> (f64, f64) {
    (
        spec.payoff.running(t, x, y, u, regime),
        spec.payoff.stopping(t, x, y, regime),
    )
}

/// The two-regime oil-field instance with a large producer: uptrend and
/// downtrend markets, extraction cost 25, salvage strike 30.
pub fn oil_field_example() -> ProblemSpec {
    ProblemSpec {
        discount_rate: 0.005,
        horizon: 10.0,
        max_rate: 5000.0,
        coefficients: CoefficientModel::LargeProducer {
            drift: vec![0.01, -0.01],
            volatility: vec![0.3, 0.2],
            jump_scale: vec![0.25, 0.3],
            impact: 0.001,
        },
        payoff: PayoffSpec::MiningLinear {
            extraction_cost: 25.0,
            fixed_cost: 5.0,
            salvage_strike: 30.0,
        },
        regimes: RegimeGenerator::new(vec![vec![-0.003, 0.003], vec![0.005, -0.005]]),
        levy: LevyMeasureSpec::uniform(1.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oil_field_example_is_valid() {
        let report = validate_problem(&oil_field_example());
        assert!(report.is_valid(), "{:?}", report);
    }

    #[test]
    fn unbalanced_row_is_flagged() {
        let mut spec = oil_field_example();
        spec.regimes = RegimeGenerator::new(vec![vec![0.1, 0.1], vec![0.005, -0.005]]);
        let report = validate_problem(&spec);
        assert_eq!(report.violations.len(), 1);
        assert!(report.mentions("row sum ≠ 0"));
    }

    #[test]
    fn negative_density_is_flagged() {
        let mut spec = oil_field_example();
        spec.levy = LevyMeasureSpec::from_density(1.0, |_| -1.0);
        let report = validate_problem(&spec);
        assert_eq!(report.violations.len(), 1);
        assert!(report.mentions("negative Lévy density"));
    }

    #[test]
    fn generator_cases_are_exhaustive() {
        // each case lists exactly the violations expected
        let cases: Vec<(Vec<Vec<f64>>, usize)> = vec![
            (vec![vec![0.0]], 0),
            (vec![vec![-1.0, 1.0], vec![2.0, -2.0]], 0),
            (vec![vec![1.0, -1.0], vec![2.0, -2.0]], 1),
            (vec![vec![1.0, -1.0], vec![-2.0, 2.0]], 2),
            (vec![vec![-1.0, 1.0], vec![2.0, -1.0]], 1),
            (vec![vec![-1.0, 1.0, 0.0], vec![0.0, 0.0]], 1),
            (vec![], 1),
        ];
        for (rates, expected) in cases {
            let got = RegimeGenerator::new(rates.clone()).violations();
            assert_eq!(got.len(), expected, "{:?} -> {:?}", rates, got);
        }
    }

    #[test]
    fn scalar_fields_are_named() {
        let mut spec = oil_field_example();
        spec.discount_rate = 0.0;
        spec.horizon = -1.0;
        spec.max_rate = -5.0;
        let report = validate_problem(&spec);
        assert_eq!(report.violations.len(), 3);
        assert!(report.mentions("discount_rate"));
        assert!(report.mentions("horizon"));
        assert!(report.mentions("max_rate"));
    }

    #[test]
    fn coefficient_vectors_must_match_regimes() {
        let mut spec = oil_field_example();
        spec.coefficients = CoefficientModel::LargeProducer {
            drift: vec![0.01],
            volatility: vec![0.3, 0.2],
            jump_scale: vec![0.25, 0.3],
            impact: 1.0,
        };
        let report = validate_problem(&spec);
        assert_eq!(report.violations.len(), 2);
        assert!(report.mentions("coefficients.drift"));
        assert!(report.mentions("coefficients.impact"));
    }

    #[test]
    fn large_producer_drift_by_hand() {
        let spec = oil_field_example();
        let c = eval_coefficients(&spec, 0.0, 50.0, 5000.0, 0).unwrap();
        assert!((c.drift - (-249.5)).abs() < 1e-9);
        assert!((c.volatility - 15.0).abs() < 1e-12);
        assert!((c.jump(0.5) - 50.0 * 0.25 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_rate_reduces_to_exponential_levy() {
        let spec = oil_field_example();
        for i in 0..2 {
            let c = eval_coefficients(&spec, 1.0, 42.0, 0.0, i).unwrap();
            let expected = [0.01, -0.01][i] * 42.0;
            assert_eq!(c.drift, expected);
        }
    }

    #[test]
    fn zero_price_is_inert() {
        let spec = oil_field_example();
        let c = eval_coefficients(&spec, 0.0, 0.0, 5000.0, 1).unwrap();
        assert_eq!((c.drift, c.volatility), (0.0, 0.0));
        for z in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_eq!(c.jump(z), 0.0);
        }
    }

    #[test]
    fn regime_out_of_range() {
        let spec = oil_field_example();
        assert!(matches!(
            eval_coefficients(&spec, 0.0, 1.0, 0.0, 2),
            Err(ModelError::RegimeOutOfRange { regime: 2, regimes: 2 })
        ));
    }

    #[test]
    fn mining_payoffs() {
        let spec = oil_field_example();
        assert_eq!(eval_payoffs(&spec, 0.0, 30.0, 10.0, 5000.0, 0), (24995.0, 0.0));
        assert_eq!(eval_payoffs(&spec, 0.0, 71.3, 2.0, 0.0, 1).0, -5.0);
        assert_eq!(eval_payoffs(&spec, 0.0, 71.3, 0.0, 10.0, 1).1, 0.0);
    }

    #[test]
    fn table_density_interpolates() {
        let levy = LevyMeasureSpec::table(vec![(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(levy.radius(), 1.0);
        assert!((levy.density(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(levy.density(1.5), 0.0);
        assert!((levy.reference_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn undeclared_mass_is_integrated() {
        let levy = LevyMeasureSpec::from_density(1.0, |z| z * z);
        assert!((levy.reference_mass() - 2.0 / 3.0).abs() < 1e-12);
    }
}
