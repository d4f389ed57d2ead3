//! Optimal extraction rate, stop/continue decisions and free-boundary curves
//! read off a solved value field.

use serde::Serialize;

use crate::error::PolicyError;
use crate::model::{CoefficientModel, PayoffSpec, ProblemSpec};
use crate::quadrature::QuadratureSet;
use crate::solver::{build_stencil, stencil_hamiltonian, Grid, SliceOperator, SolverSettings, ValueField};

/// Relative tolerance under which two controls count as tied.
const ARGMAX_TIE: f64 = 1e-10;

/// Stop test tolerance: `V − Φ ≤ 1e-7 (1 + |Φ|)`.
pub fn tie_tolerance(obstacle: f64) -> f64 {
    1e-7 * (1.0 + obstacle.abs())
}

/// Per-node decisions, laid out like [`ValueField`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyField {
    pub grid: Grid,
    pub controls: Vec<f64>,
    pub u_star: Vec<f64>,
    pub stop: Vec<bool>,
}

impl PolicyField {
    fn index(&self, n: usize, ix: usize, iy: usize, regime: usize) -> usize {
        n * self.grid.slice_len() + self.grid.node(ix, iy, regime)
    }

    pub fn rate(&self, n: usize, ix: usize, iy: usize, regime: usize) -> f64 {
        self.u_star[self.index(n, ix, iy, regime)]
    }

    pub fn stops(&self, n: usize, ix: usize, iy: usize, regime: usize) -> bool {
        self.stop[self.index(n, ix, iy, regime)]
    }
}

/// Argmax of the discrete Hamiltonian at every node, ties broken toward the
/// smaller rate, plus the stop flag `V − Φ ≤ tie_tol`.
pub fn extract_policy(
    values: &ValueField,
    spec: &ProblemSpec,
    quad: &QuadratureSet,
    settings: &SolverSettings,
) -> PolicyField {
    let grid = values.grid;
    let len = grid.slice_len();
    let mut u_star = vec![0.0; values.values.len()];
    let mut stop = vec![false; values.values.len()];
    let mut controls = Vec::new();
    for n in 0..=grid.n_s {
        let op = SliceOperator::build(spec, &grid, quad, settings, n);
        let cur = values.slice(n);
        for node in 0..len {
            let (ix, iy, i) = grid.coords(node);
            let mut best = 0;
            let (mut best_h, mut best_scale) = op.hamiltonian(cur, ix, iy, i, 0);
            for ctrl in 1..op.admissible(iy) {
                let (h, scale) = op.hamiltonian(cur, ix, iy, i, ctrl);
                if h > best_h + ARGMAX_TIE * (1.0 + scale + best_scale) {
                    best = ctrl;
                    best_h = h;
                    best_scale = scale;
                }
            }
            u_star[n * len + node] = op.controls[best];
            let obstacle = op.obstacle[node];
            stop[n * len + node] = cur[node] - obstacle <= tie_tolerance(obstacle);
        }
        controls = op.controls;
    }
    PolicyField {
        grid,
        controls,
        u_star,
        stop,
    }
}

/// `−λ x Δ_x V − Δ_y V + (x − c_e)` at a node, built from the same upwinded
/// differences the solver uses: it equals `r (H(K) − H(0)) / K`, so a
/// positive value means full-rate extraction.
#[allow(clippy::too_many_arguments)]
pub fn bang_bang_criterion(
    values: &ValueField,
    spec: &ProblemSpec,
    quad: &QuadratureSet,
    n: usize,
    ix: usize,
    iy: usize,
    regime: usize,
) -> Result<f64, PolicyError> {
    let family = matches!(spec.payoff, PayoffSpec::MiningLinear { .. })
        && matches!(
            spec.coefficients,
            CoefficientModel::LargeProducer { .. } | CoefficientModel::ExponentialLevy { .. }
        );
    if !family {
        return Err(PolicyError::WrongFamily);
    }
    let k = spec.max_rate;
    if k <= 0.0 || iy == 0 {
        return Err(PolicyError::DegenerateControl);
    }
    let grid = &values.grid;
    let cur = values.slice(n);
    let r = spec.discount_rate;
    let (s, x, y) = (grid.s(n), grid.x(ix), grid.y(iy));
    let eval = |u: f64| {
        let st = build_stencil(spec, grid, quad, n, ix, regime, u);
        let running = spec.payoff.running(s, x, y, u, regime) / r;
        stencil_hamiltonian(&st, grid, cur, ix, iy, regime, running).0
    };
    Ok(r * (eval(k) - eval(0.0)) / k)
}

/// Which 1-D cut of the lattice a boundary curve is traced on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BoundarySlice {
    /// Fixed time index; the curve is parameterized by reserve.
    FixedTime(usize),
    /// Fixed reserve index; the curve is parameterized by time.
    FixedReserve(usize),
}

/// Boundary prices along one cut, with counts of parameter values that had
/// no flip.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCurve {
    pub regime: usize,
    pub slice: BoundarySlice,
    /// `(parameter, boundary price)`.
    pub points: Vec<(f64, f64)>,
    /// Whole column on the lower side: no flip inside the grid.
    pub all_lower: usize,
    /// Whole column on the upper side: the boundary sits below the grid.
    pub all_upper: usize,
    /// Mixed columns without a lower-to-upper flip.
    pub other: usize,
}

impl BoundaryCurve {
    pub fn no_flip(&self) -> usize {
        self.all_lower + self.all_upper + self.other
    }
}

/// Stopping boundary: for each parameter value, the midpoint of the first
/// price cell where `stop` flips from true (below) to false (above).
pub fn free_boundary(policy: &PolicyField, slice: BoundarySlice, regime: usize) -> BoundaryCurve {
    trace_boundary(policy, slice, regime, |p, n, ix, iy| p.stops(n, ix, iy, regime))
}

/// Extraction switching curve: first price cell where the rate flips from
/// zero (below) to positive (above).
pub fn extraction_boundary(policy: &PolicyField, slice: BoundarySlice, regime: usize) -> BoundaryCurve {
    trace_boundary(policy, slice, regime, |p, n, ix, iy| p.rate(n, ix, iy, regime) == 0.0)
}

fn trace_boundary<F>(policy: &PolicyField, slice: BoundarySlice, regime: usize, lower: F) -> BoundaryCurve
where
    F: Fn(&PolicyField, usize, usize, usize) -> bool,
{
    let g = &policy.grid;
    let params: Vec<(f64, usize, usize)> = match slice {
        BoundarySlice::FixedTime(n) => (0..=g.n_y).map(|iy| (g.y(iy), n, iy)).collect(),
        BoundarySlice::FixedReserve(iy) => (0..=g.n_s).map(|n| (g.s(n), n, iy)).collect(),
    };
    let mut curve = BoundaryCurve {
        regime,
        slice,
        points: Vec::new(),
        all_lower: 0,
        all_upper: 0,
        other: 0,
    };
    for (param, n, iy) in params {
        let column: Vec<bool> = (0..=g.n_x).map(|ix| lower(policy, n, ix, iy)).collect();
        match column.windows(2).position(|w| w[0] && !w[1]) {
            Some(ix) => curve.points.push((param, 0.5 * (g.x(ix) + g.x(ix + 1)))),
            None if column.iter().all(|&b| b) => curve.all_lower += 1,
            None if column.iter().all(|&b| !b) => curve.all_upper += 1,
            None => curve.other += 1,
        }
    }
    curve
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{oil_field_example, LevyMeasureSpec, RegimeGenerator};
    use crate::quadrature::build_quadrature;

    fn small_grid() -> Grid {
        Grid::new(10.0, 48.0, 10.0, 4, 32, 8, 2).unwrap()
    }

    #[test]
    fn flat_field_criterion_is_margin() {
        let spec = oil_field_example();
        let grid = small_grid();
        let quad = build_quadrature(&spec.levy, 0.25).unwrap();
        let v = ValueField::zeros(grid);
        // x = 30 and x = 19.5 are nodes (h = 1.5)
        let up = bang_bang_criterion(&v, &spec, &quad, 0, 20, 3, 0).unwrap();
        assert!((up - 5.0).abs() < 1e-9, "{up}");
        let down = bang_bang_criterion(&v, &spec, &quad, 0, 13, 3, 1).unwrap();
        assert!((down - (19.5 - 25.0)).abs() < 1e-9, "{down}");
    }

    #[test]
    fn flat_field_policy_switches_at_marginal_cost() {
        let spec = oil_field_example();
        let grid = small_grid();
        let quad = build_quadrature(&spec.levy, 0.25).unwrap();
        let v = ValueField::zeros(grid);
        let p = extract_policy(&v, &spec, &quad, &SolverSettings::default());
        for ix in 0..=grid.n_x {
            let expected = if grid.x(ix) > 25.0 { 5000.0 } else { 0.0 };
            assert_eq!(p.rate(1, ix, 4, 0), expected, "x = {}", grid.x(ix));
            assert_eq!(p.rate(1, ix, 0, 0), 0.0);
        }
    }

    #[test]
    fn wrong_family_rejected() {
        let mut spec = oil_field_example();
        spec.payoff = PayoffSpec::general(|_, _, _, _, _| 0.0, |_, _, _, _| 0.0);
        let grid = small_grid();
        let quad = build_quadrature(&spec.levy, 0.25).unwrap();
        let v = ValueField::zeros(grid);
        assert_eq!(
            bang_bang_criterion(&v, &spec, &quad, 0, 3, 3, 0),
            Err(PolicyError::WrongFamily)
        );
    }

    #[test]
    fn zero_impact_criterion_ignores_price_slope() {
        let mut spec = oil_field_example();
        if let CoefficientModel::LargeProducer { impact, .. } = &mut spec.coefficients {
            *impact = 0.0;
        }
        let grid = small_grid();
        let quad = build_quadrature(&spec.levy, 0.25).unwrap();
        let mut v = ValueField::zeros(grid);
        // V depends on x only
        for n in 0..=grid.n_s {
            for node in 0..grid.slice_len() {
                let (ix, _, _) = grid.coords(node);
                v.slice_mut(n)[node] = (grid.x(ix) * 0.3).sin() * 40.0;
            }
        }
        for ix in 1..grid.n_x {
            let c = bang_bang_criterion(&v, &spec, &quad, 0, ix, 2, 0).unwrap();
            assert!((c - (grid.x(ix) - 25.0)).abs() < 1e-6, "ix {ix}: {c}");
        }
    }

    #[test]
    fn u_independent_problem_never_extracts() {
        let spec = ProblemSpec {
            discount_rate: 0.05,
            horizon: 1.0,
            max_rate: 3.0,
            coefficients: CoefficientModel::ExponentialLevy {
                drift: vec![0.01],
                volatility: vec![0.2],
                jump_scale: vec![0.0],
            },
            payoff: PayoffSpec::general(|_, x, _, _, _| x * 0.01, |_, x, _, _| x - 1.0),
            regimes: RegimeGenerator::single(),
            levy: LevyMeasureSpec::none(),
        };
        let grid = Grid::new(1.0, 4.0, 2.0, 4, 16, 4, 1).unwrap();
        let quad = build_quadrature(&spec.levy, 0.25).unwrap();
        let settings = SolverSettings::default();
        let (v, _) = crate::solver::solve(&spec, &grid, &quad, &settings).unwrap();
        let p = extract_policy(&v, &spec, &quad, &settings);
        assert!(p.u_star.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn terminal_slice_always_stops() {
        let spec = oil_field_example();
        let grid = small_grid();
        let quad = build_quadrature(&spec.levy, 0.25).unwrap();
        let mut v = ValueField::zeros(grid);
        for node in 0..grid.slice_len() {
            let (ix, iy, i) = grid.coords(node);
            v.slice_mut(grid.n_s)[node] = spec.payoff.stopping(10.0, grid.x(ix), grid.y(iy), i);
        }
        let p = extract_policy(&v, &spec, &quad, &SolverSettings::default());
        for node in 0..grid.slice_len() {
            assert!(p.stop[grid.n_s * grid.slice_len() + node]);
        }
    }

    fn uniform_policy(stop: impl Fn(f64) -> bool) -> PolicyField {
        let grid = Grid::new(1.0, 10.0, 1.0, 2, 10, 3, 1).unwrap();
        let total = (grid.n_s + 1) * grid.slice_len();
        let mut flags = vec![false; total];
        for (idx, f) in flags.iter_mut().enumerate() {
            let (ix, _, _) = grid.coords(idx % grid.slice_len());
            *f = stop(grid.x(ix));
        }
        PolicyField {
            grid,
            controls: vec![0.0],
            u_star: vec![0.0; total],
            stop: flags,
        }
    }

    #[test]
    fn all_stop_has_no_curve() {
        let p = uniform_policy(|_| true);
        let c = free_boundary(&p, BoundarySlice::FixedTime(0), 0);
        assert!(c.points.is_empty());
        assert_eq!(c.all_lower, 4);
        assert_eq!(c.no_flip(), 4);
    }

    #[test]
    fn all_continue_is_below_grid() {
        let p = uniform_policy(|_| false);
        let c = free_boundary(&p, BoundarySlice::FixedReserve(1), 0);
        assert!(c.points.is_empty());
        assert_eq!(c.all_upper, 3);
    }

    #[test]
    fn boundary_sits_on_cell_midpoint() {
        let p = uniform_policy(|x| x < 3.5);
        let c = free_boundary(&p, BoundarySlice::FixedTime(1), 0);
        assert_eq!(c.points.len(), 4);
        for (i, &(param, xb)) in c.points.iter().enumerate() {
            assert!((param - i as f64 / 3.0).abs() < 1e-12);
            assert_eq!(xb, 3.5);
        }
    }
}
