//! Discrete quasi-variational inequality on the truncated `(s, x, y, i)`
//! lattice, solved backward in time with a Jacobi fixed-point sweep per slice.
//!
//! Each slice solves `V = max(max_u N_u(V) / (1 + c_u), Phi)` where `N_u`
//! collects the previous-slice value, the neighbour values of the current
//! iterate with non-negative weights, and `L/r`. Compared with the raw
//! forward-difference stencil, two corrections keep every neighbour weight
//! non-negative: the price drift (including the small-jump compensator) is
//! upwinded, and reserve depletion uses the backward difference in `y`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::SolverError;
use crate::model::ProblemSpec;
use crate::quadrature::QuadratureSet;

/// Truncated lattice. `n_s`, `n_x`, `n_y` count steps, so there are `n + 1`
/// nodes along each axis. Prices live on `[0, x_max]`, reserves on `[0, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub horizon: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub n_s: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub regimes: usize,
}

impl Grid {
    pub fn new(
        horizon: f64,
        x_max: f64,
        y_max: f64,
        n_s: usize,
        n_x: usize,
        n_y: usize,
        regimes: usize,
    ) -> Result<Self, SolverError> {
        let grid = Self {
            horizon,
            x_max,
            y_max,
            n_s,
            n_x,
            n_y,
            regimes,
        };
        grid.check()?;
        Ok(grid)
    }

    pub fn check(&self) -> Result<(), SolverError> {
        for (name, v) in [("horizon", self.horizon), ("x_max", self.x_max), ("y_max", self.y_max)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SolverError::InvalidGrid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, n) in [("n_s", self.n_s), ("n_x", self.n_x), ("n_y", self.n_y), ("regimes", self.regimes)] {
            if n == 0 {
                return Err(SolverError::InvalidGrid(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    pub fn time_step(&self) -> f64 {
        self.horizon / self.n_s as f64
    }

    pub fn price_step(&self) -> f64 {
        self.x_max / self.n_x as f64
    }

    pub fn reserve_step(&self) -> f64 {
        self.y_max / self.n_y as f64
    }

    pub fn s(&self, n: usize) -> f64 {
        if n == self.n_s {
            self.horizon
        } else {
            n as f64 * self.time_step()
        }
    }

    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 * self.price_step()
    }

    pub fn y(&self, iy: usize) -> f64 {
        iy as f64 * self.reserve_step()
    }

    /// Nodes in one time slice.
    pub fn slice_len(&self) -> usize {
        (self.n_x + 1) * (self.n_y + 1) * self.regimes
    }

    /// Position of `(ix, iy, i)` inside a slice.
    #[inline]
    pub fn node(&self, ix: usize, iy: usize, regime: usize) -> usize {
        (ix * (self.n_y + 1) + iy) * self.regimes + regime
    }

    /// Inverse of [`Grid::node`].
    pub fn coords(&self, node: usize) -> (usize, usize, usize) {
        let regime = node % self.regimes;
        let rest = node / self.regimes;
        (rest / (self.n_y + 1), rest % (self.n_y + 1), regime)
    }

    /// Nearest time node to `s`.
    pub fn nearest_time(&self, s: f64) -> usize {
        ((s / self.time_step()).round().max(0.0) as usize).min(self.n_s)
    }

    pub fn nearest_price(&self, x: f64) -> usize {
        ((x / self.price_step()).round().max(0.0) as usize).min(self.n_x)
    }

    pub fn nearest_reserve(&self, y: f64) -> usize {
        ((y / self.reserve_step()).round().max(0.0) as usize).min(self.n_y)
    }

    /// One refinement in price and reserve (halved `h` and `l`).
    pub fn refined_space(&self) -> Self {
        Self {
            n_x: 2 * self.n_x,
            n_y: 2 * self.n_y,
            ..*self
        }
    }
}

/// Fixed-point and control-discretization settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSettings {
    /// Residual bound, relative to `1 + sup|V|` on the slice.
    pub tol: f64,
    pub max_iter: usize,
    /// `N_u`: the control set has `N_u + 1` equispaced points unless the
    /// problem is affine in the control.
    pub control_points: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200_000,
            control_points: 8,
        }
    }
}

/// Discretized control set; always starts with `0`.
pub fn control_set(spec: &ProblemSpec, settings: &SolverSettings) -> Vec<f64> {
    let k = spec.max_rate;
    if k == 0.0 {
        return vec![0.0];
    }
    if spec.bang_bang() {
        return vec![0.0, k];
    }
    let n = settings.control_points.max(1);
    (0..=n).map(|j| k * j as f64 / n as f64).collect()
}

/// Solved values on every lattice node, laid out slice by slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ValueField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; (grid.n_s + 1) * grid.slice_len()],
        }
    }

    pub fn slice(&self, n: usize) -> &[f64] {
        let len = self.grid.slice_len();
        &self.values[n * len..(n + 1) * len]
    }

    pub fn slice_mut(&mut self, n: usize) -> &mut [f64] {
        let len = self.grid.slice_len();
        &mut self.values[n * len..(n + 1) * len]
    }

    pub fn get(&self, n: usize, ix: usize, iy: usize, regime: usize) -> f64 {
        self.slice(n)[self.grid.node(ix, iy, regime)]
    }

    /// Nearest-node lookup.
    pub fn at(&self, s: f64, x: f64, y: f64, regime: usize) -> f64 {
        let g = &self.grid;
        self.get(g.nearest_time(s), g.nearest_price(x), g.nearest_reserve(y), regime)
    }
}

/// Which neighbour the price drift was placed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Upwind {
    Forward,
    Backward,
}

/// Stencil weights at one node and control, normalized by `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeCoefficients {
    /// Weight on `V(s, x + h, y, i)`.
    pub a: f64,
    /// Weight on `V(s, x − h, y, i)`.
    pub b: f64,
    /// Diagonal mass; the update divides by `1 + c`.
    pub c: f64,
    /// Weight on `V(s, x, y − l, i)`.
    pub reserve: f64,
    /// Σ d_j γ(z_j) / (r h).
    pub jump_weight_sum: f64,
    pub upwind: Upwind,
    /// The unupwinded forward-difference weights `(a, b)` including the
    /// compensator term on `V(x + h)`, for diagnostics.
    pub raw_a: f64,
    pub raw_b: f64,
}

/// Stencil at node `(n, ix, iy, i)` for control `u`, including the
/// zero-gradient closure at the price boundaries.
#[allow(clippy::too_many_arguments)]
pub fn assemble_coefficients(
    spec: &ProblemSpec,
    grid: &Grid,
    quad: &QuadratureSet,
    n: usize,
    ix: usize,
    iy: usize,
    regime: usize,
    u: f64,
) -> SchemeCoefficients {
    // nothing can be extracted from an empty reserve
    let u = if iy == 0 { 0.0 } else { u };
    let r = spec.discount_rate;
    let (h, k, l) = (grid.price_step(), grid.time_step(), grid.reserve_step());
    let (s, x) = (grid.s(n), grid.x(ix));
    let (mu, sigma) = spec.coefficients.drift_vol(s, x, u, regime);
    let comp = quad.compensator(spec, s, x, u, regime);
    let diffusion = sigma * sigma / (2.0 * r * h * h);
    let drift = mu - comp;

    let raw_a = diffusion + mu / (r * h) - comp / (r * h);
    let raw_b = diffusion;

    let (mut a, mut b, upwind) = if drift >= 0.0 {
        (diffusion + drift / (r * h), diffusion, Upwind::Forward)
    } else {
        (diffusion, diffusion - drift / (r * h), Upwind::Backward)
    };
    // Zero-gradient ghost nodes: the off-grid neighbour equals the node itself.
    if ix == 0 {
        b = 0.0;
    }
    if ix == grid.n_x {
        a = 0.0;
    }
    let reserve = u / (r * l);
    let switching: f64 = (0..spec.regime_count())
        .filter(|&j| j != regime)
        .map(|j| spec.regimes.rate(regime, j))
        .sum::<f64>()
        / r;
    let c = 1.0 / (r * k) + a + b + reserve + quad.mass / r + switching;
    SchemeCoefficients {
        a,
        b,
        c,
        reserve,
        jump_weight_sum: comp / (r * h),
        upwind,
        raw_a,
        raw_b,
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ControlStencil {
    pub a: f64,
    pub b: f64,
    pub reserve: f64,
    pub diag: f64,
    /// Jump targets on the price axis with merged interpolation weights.
    pub jumps: Vec<(usize, f64)>,
}

/// Stencil for one price node, regime and control, with jump targets
/// interpolated linearly onto the price axis.
#[allow(clippy::too_many_arguments)]
pub(crate) fn build_stencil(
    spec: &ProblemSpec,
    grid: &Grid,
    quad: &QuadratureSet,
    n: usize,
    ix: usize,
    regime: usize,
    u: f64,
) -> ControlStencil {
    let r = spec.discount_rate;
    let (s, x, h) = (grid.s(n), grid.x(ix), grid.price_step());
    let coef = assemble_coefficients(spec, grid, quad, n, ix, 1, regime, u);
    let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
    for (&z, &w) in quad.z_nodes.iter().zip(&quad.c_weights) {
        if w == 0.0 {
            continue;
        }
        let w = w / r;
        let target = (x + spec.coefficients.jump(s, x, u, regime, z)).clamp(0.0, grid.x_max);
        let pos = target / h;
        let lo = (pos.floor() as usize).min(grid.n_x);
        let frac = pos - lo as f64;
        if lo == grid.n_x || frac <= 0.0 {
            *merged.entry(lo).or_default() += w;
        } else {
            *merged.entry(lo).or_default() += w * (1.0 - frac);
            *merged.entry(lo + 1).or_default() += w * frac;
        }
    }
    ControlStencil {
        a: coef.a,
        b: coef.b,
        reserve: coef.reserve,
        diag: 1.0 + coef.c,
        jumps: merged.into_iter().filter(|&(_, w)| w != 0.0).collect(),
    }
}

/// Σ w (V_nbr − V) + L/r for one control: the discrete Hamiltonian without
/// its control-independent terms, scaled by `1/r`. Also returns the sum of
/// absolute term sizes, for tie tolerances.
pub(crate) fn stencil_hamiltonian(
    st: &ControlStencil,
    g: &Grid,
    cur: &[f64],
    ix: usize,
    iy: usize,
    regime: usize,
    running: f64,
) -> (f64, f64) {
    let v = cur[g.node(ix, iy, regime)];
    let mut terms = [0.0; 4];
    if st.a != 0.0 {
        terms[0] = st.a * (cur[g.node(ix + 1, iy, regime)] - v);
    }
    if st.b != 0.0 {
        terms[1] = st.b * (cur[g.node(ix - 1, iy, regime)] - v);
    }
    if st.reserve != 0.0 && iy > 0 {
        terms[2] = st.reserve * (cur[g.node(ix, iy - 1, regime)] - v);
    }
    terms[3] = st.jumps.iter().map(|&(jx, w)| w * (cur[g.node(jx, iy, regime)] - v)).sum();
    let value = terms.iter().sum::<f64>() + running;
    let scale = terms.iter().map(|t| t.abs()).sum::<f64>() + running.abs();
    (value, scale)
}

/// The operator `F_ξ` frozen at one time slice.
pub(crate) struct SliceOperator<'g> {
    pub grid: &'g Grid,
    pub controls: Vec<f64>,
    /// Indexed by `(ix * m + i) * controls + ctrl`.
    pub stencils: Vec<ControlStencil>,
    /// `L / r`, indexed by `node * controls + ctrl`.
    pub running: Vec<f64>,
    pub obstacle: Vec<f64>,
    pub time_weight: f64,
    /// `q_ij / r` with zero diagonal.
    pub switching: Vec<Vec<f64>>,
}

impl<'g> SliceOperator<'g> {
    pub fn build(
        spec: &ProblemSpec,
        grid: &'g Grid,
        quad: &QuadratureSet,
        settings: &SolverSettings,
        n: usize,
    ) -> Self {
        let r = spec.discount_rate;
        let m = grid.regimes;
        let controls = control_set(spec, settings);
        let nc = controls.len();
        let s = grid.s(n);

        let mut stencils = Vec::with_capacity((grid.n_x + 1) * m * nc);
        for ix in 0..=grid.n_x {
            for i in 0..m {
                for &u in &controls {
                    stencils.push(build_stencil(spec, grid, quad, n, ix, i, u));
                }
            }
        }

        let len = grid.slice_len();
        let mut running = vec![0.0; len * nc];
        let mut obstacle = vec![0.0; len];
        for node in 0..len {
            let (ix, iy, i) = grid.coords(node);
            let (x, y) = (grid.x(ix), grid.y(iy));
            obstacle[node] = spec.payoff.stopping(s, x, y, i);
            for (c, &u) in controls.iter().enumerate() {
                running[node * nc + c] = spec.payoff.running(s, x, y, u, i) / r;
            }
        }
        let switching = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if i == j { 0.0 } else { spec.regimes.rate(i, j) / r })
                    .collect()
            })
            .collect();

        Self {
            grid,
            controls,
            stencils,
            running,
            obstacle,
            time_weight: 1.0 / (r * grid.time_step()),
            switching,
        }
    }

    #[inline]
    pub fn stencil(&self, ix: usize, regime: usize, ctrl: usize) -> &ControlStencil {
        &self.stencils[(ix * self.grid.regimes + regime) * self.controls.len() + ctrl]
    }

    /// Controls admissible at reserve index `iy`.
    #[inline]
    pub fn admissible(&self, iy: usize) -> usize {
        if iy == 0 {
            1
        } else {
            self.controls.len()
        }
    }

    pub fn hamiltonian(&self, cur: &[f64], ix: usize, iy: usize, regime: usize, ctrl: usize) -> (f64, f64) {
        let node = self.grid.node(ix, iy, regime);
        let running = self.running[node * self.controls.len() + ctrl];
        stencil_hamiltonian(self.stencil(ix, regime, ctrl), self.grid, cur, ix, iy, regime, running)
    }

    /// One application of `F_ξ`: writes into `out` and returns the sup-norm
    /// change relative to `cur`.
    pub fn apply(&self, next: &[f64], cur: &[f64], out: &mut [f64]) -> f64 {
        let g = self.grid;
        let row = (g.n_y + 1) * g.regimes;
        out.par_chunks_mut(row)
            .enumerate()
            .map(|(ix, out_row)| {
                let mut change = 0.0_f64;
                for iy in 0..=g.n_y {
                    for i in 0..g.regimes {
                        let node = g.node(ix, iy, i);
                        let value = self.node_update(next, cur, ix, iy, i, node);
                        change = change.max((value - cur[node]).abs());
                        out_row[iy * g.regimes + i] = value;
                    }
                }
                change
            })
            .reduce(|| 0.0, f64::max)
    }

    #[inline]
    fn node_update(&self, next: &[f64], cur: &[f64], ix: usize, iy: usize, regime: usize, node: usize) -> f64 {
        let g = self.grid;
        let nc = self.controls.len();
        let mut common = self.time_weight * next[node];
        for (j, &q) in self.switching[regime].iter().enumerate() {
            if q != 0.0 {
                common += q * cur[g.node(ix, iy, j)];
            }
        }
        let mut best = f64::NEG_INFINITY;
        for ctrl in 0..self.admissible(iy) {
            let st = self.stencil(ix, regime, ctrl);
            let mut num = common + self.running[node * nc + ctrl];
            if st.a != 0.0 {
                num += st.a * cur[g.node(ix + 1, iy, regime)];
            }
            if st.b != 0.0 {
                num += st.b * cur[g.node(ix - 1, iy, regime)];
            }
            if st.reserve != 0.0 {
                num += st.reserve * cur[g.node(ix, iy - 1, regime)];
            }
            for &(jx, w) in &st.jumps {
                num += w * cur[g.node(jx, iy, regime)];
            }
            best = best.max(num / st.diag);
        }
        best.max(self.obstacle[node])
    }
}

/// `F_ξ(V)` on slice `n`, reading slice `n` of `values` as the current
/// iterate and slice `n + 1` as the already-final later slice. At `n = n_s`
/// this is the terminal payoff.
pub fn scheme_apply(
    values: &ValueField,
    spec: &ProblemSpec,
    quad: &QuadratureSet,
    settings: &SolverSettings,
    n: usize,
) -> Vec<f64> {
    let grid = &values.grid;
    if n == grid.n_s {
        return terminal_slice(spec, grid);
    }
    let op = SliceOperator::build(spec, grid, quad, settings, n);
    let mut out = vec![0.0; grid.slice_len()];
    op.apply(values.slice(n + 1), values.slice(n), &mut out);
    out
}

fn terminal_slice(spec: &ProblemSpec, grid: &Grid) -> Vec<f64> {
    (0..grid.slice_len())
        .map(|node| {
            let (ix, iy, i) = grid.coords(node);
            spec.payoff.stopping(grid.horizon, grid.x(ix), grid.y(iy), i)
        })
        .collect()
}

/// Structural diagnostics of the scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeReport {
    /// All neighbour weights non-negative after upwinding.
    pub monotone: bool,
    /// Same scan on the unupwinded forward-difference price stencil.
    pub raw_monotone: bool,
    /// The forward reserve difference puts `−u/(rl)` on `V(y + l)`; this is
    /// monotone only when the maximum rate is zero.
    pub raw_reserve_monotone: bool,
    pub min_weight: f64,
    /// |Σ c_j / r − Γ / r|.
    pub contraction_bound: f64,
    /// A priori bound on sup|V| over the lattice.
    pub stability_bound: f64,
    #[serde(skip)]
    pub first_negative: Option<(usize, usize, f64, f64)>,
}

/// Scans every slice, price node, regime and control for negative
/// neighbour weights, and evaluates the contraction precondition and the
/// a priori bound on the solution.
pub fn check_scheme(
    spec: &ProblemSpec,
    grid: &Grid,
    quad: &QuadratureSet,
    settings: &SolverSettings,
) -> SchemeReport {
    let r = spec.discount_rate;
    let controls = control_set(spec, settings);
    let mut monotone = true;
    let mut raw_monotone = true;
    let mut min_weight = f64::INFINITY;
    let mut first_negative = None;

    let quad_ok = quad.c_weights.iter().all(|&w| w >= 0.0);
    let switching_ok = (0..grid.regimes)
        .all(|i| (0..grid.regimes).all(|j| i == j || spec.regimes.rate(i, j) >= 0.0));
    monotone &= quad_ok && switching_ok;

    for n in 0..grid.n_s {
        for ix in 0..=grid.n_x {
            for i in 0..grid.regimes {
                for &u in &controls {
                    let c = assemble_coefficients(spec, grid, quad, n, ix, 1, i, u);
                    for w in [c.a, c.b, c.reserve] {
                        min_weight = min_weight.min(w);
                        if !(w >= 0.0) {
                            monotone = false;
                            first_negative.get_or_insert((n, grid.node(ix, 1.min(grid.n_y), i), u, w));
                        }
                    }
                    if !(c.raw_a >= 0.0 && c.raw_b >= 0.0) {
                        raw_monotone = false;
                    }
                }
            }
        }
    }

    let reference = spec.levy.reference_mass();
    let contraction_bound = (quad.mass / r - reference / r).abs();

    // B_N = sup|Phi(T)|; B_n = max(sup|Phi(s_n)|, (B_{n+1} + k sup|L|) / (1 + r k))
    let k = grid.time_step();
    let mut bound = terminal_slice(spec, grid).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    for n in (0..grid.n_s).rev() {
        let s = grid.s(n);
        let mut phi_max = 0.0_f64;
        let mut l_max = 0.0_f64;
        for node in 0..grid.slice_len() {
            let (ix, iy, i) = grid.coords(node);
            let (x, y) = (grid.x(ix), grid.y(iy));
            phi_max = phi_max.max(spec.payoff.stopping(s, x, y, i).abs());
            let admissible = if iy == 0 { &controls[..1] } else { &controls[..] };
            for &u in admissible {
                l_max = l_max.max(spec.payoff.running(s, x, y, u, i).abs());
            }
        }
        bound = phi_max.max((bound + k * l_max) / (1.0 + r * k));
    }

    SchemeReport {
        monotone,
        raw_monotone,
        raw_reserve_monotone: spec.max_rate == 0.0,
        min_weight: if min_weight.is_finite() { min_weight } else { 0.0 },
        contraction_bound,
        stability_bound: bound,
        first_negative,
    }
}

/// Convergence record of one time slice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceReport {
    pub slice: usize,
    pub iterations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
    /// Largest ratio of successive residuals.
    pub contraction_ratio: f64,
    /// Residuals strictly decreased after the first iterate.
    pub strictly_decreasing: bool,
    /// The stopping threshold actually used, `tol * (1 + sup|V|)`.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub slices: Vec<SliceReport>,
    pub total_iterations: usize,
    pub max_contraction_ratio: f64,
    pub max_final_residual: f64,
    pub scheme: SchemeReport,
}

/// Backward sweep `n = n_s − 1, …, 0`, iterating `V ← F_ξ(V)` on each slice
/// until the sup-norm change drops below `tol * (1 + sup|V|)`.
pub fn solve(
    spec: &ProblemSpec,
    grid: &Grid,
    quad: &QuadratureSet,
    settings: &SolverSettings,
) -> Result<(ValueField, SolveReport), SolverError> {
    grid.check()?;
    let scheme = check_scheme(spec, grid, quad, settings);
    if scheme.contraction_bound >= 1.0 {
        return Err(SolverError::ContractionViolation {
            bound: scheme.contraction_bound,
        });
    }
    if !scheme.monotone {
        let (slice, node, control, weight) = scheme.first_negative.unwrap_or((0, 0, 0.0, f64::NAN));
        return Err(SolverError::NonMonotoneStencil {
            slice,
            node,
            control,
            weight,
        });
    }

    let mut field = ValueField::zeros(*grid);
    let terminal = terminal_slice(spec, grid);
    field.slice_mut(grid.n_s).copy_from_slice(&terminal);

    let len = grid.slice_len();
    let mut cur = vec![0.0; len];
    let mut out = vec![0.0; len];
    let mut slices = Vec::with_capacity(grid.n_s);
    for n in (0..grid.n_s).rev() {
        let op = SliceOperator::build(spec, grid, quad, settings, n);
        let (done, later) = field.values.split_at_mut((n + 1) * len);
        let next = &later[..len];
        cur.copy_from_slice(next);

        let mut iterations = 0;
        let mut initial = 0.0;
        let mut previous = f64::NAN;
        let mut ratio = 0.0_f64;
        let mut decreasing = true;
        let (residual, threshold) = loop {
            let residual = op.apply(next, &cur, &mut out);
            std::mem::swap(&mut cur, &mut out);
            iterations += 1;
            if iterations == 1 {
                initial = residual;
            } else {
                if previous > 0.0 {
                    ratio = ratio.max(residual / previous);
                }
                if !(residual < previous) && residual > 0.0 {
                    decreasing = false;
                }
            }
            previous = residual;
            let scale = cur.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            let threshold = settings.tol * (1.0 + scale);
            if residual <= threshold {
                break (residual, threshold);
            }
            if iterations >= settings.max_iter {
                return Err(SolverError::IterationLimit {
                    slice: n,
                    max_iter: settings.max_iter,
                    residual,
                });
            }
        };
        done[n * len..].copy_from_slice(&cur);
        slices.push(SliceReport {
            slice: n,
            iterations,
            initial_residual: initial,
            final_residual: residual,
            contraction_ratio: ratio,
            strictly_decreasing: decreasing,
            threshold,
        });
    }
    slices.reverse();

    let total_iterations = slices.iter().map(|s| s.iterations).sum();
    let max_contraction_ratio = slices.iter().fold(0.0_f64, |a, s| a.max(s.contraction_ratio));
    let max_final_residual = slices.iter().fold(0.0_f64, |a, s| a.max(s.final_residual));
    Ok((
        field,
        SolveReport {
            slices,
            total_iterations,
            max_contraction_ratio,
            max_final_residual,
            scheme,
        },
    ))
}
