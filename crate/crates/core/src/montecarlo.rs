//! Path simulation of the controlled price/reserve/regime process and Monte
//! Carlo estimates of the payoff functional under a feedback rule.
//!
//! The chain is simulated exactly (exponential holding times), jumps as a
//! compound Poisson process with rate Γ and marks drawn from ν/Γ, and the
//! Brownian part with Euler–Maruyama. Switch, jump and reserve-exhaustion
//! times split the step they fall in.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::SimulationError;
use crate::model::{LevyMeasureSpec, ProblemSpec, RegimeGenerator};
use crate::policy::PolicyField;
use crate::quadrature::{build_quadrature, QuadratureSet};
use crate::solver::Grid;

const MARK_CELLS: usize = 4096;
const COMPENSATOR_PANELS: f64 = 1024.0;

/// Per-path generator: one root seed, one independent ChaCha stream per path.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn exponential<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    if rate > 0.0 {
        Exp::new(rate).map(|d| d.sample(rng)).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    }
}

fn next_regime<R: Rng>(rng: &mut R, q: &RegimeGenerator, from: usize) -> usize {
    let total = q.exit_rate(from);
    let mut target = rng.random::<f64>() * total;
    let mut last = from;
    for j in 0..q.regimes() {
        if j == from {
            continue;
        }
        let rate = q.rate(from, j);
        if rate <= 0.0 {
            continue;
        }
        last = j;
        if target < rate {
            return j;
        }
        target -= rate;
    }
    last
}

/// Piecewise-constant regime trajectory on `[t0, t1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimePath {
    pub t0: f64,
    pub t1: f64,
    pub switch_times: Vec<f64>,
    /// `states[0]` is the initial regime; `states[k + 1]` holds after switch `k`.
    pub states: Vec<usize>,
}

impl RegimePath {
    pub fn state_at(&self, t: f64) -> usize {
        self.states[self.switch_times.partition_point(|&s| s <= t)]
    }

    /// Fraction of `[t0, t1]` spent in each regime.
    pub fn occupation(&self, regimes: usize) -> Vec<f64> {
        let mut time = vec![0.0; regimes];
        let mut start = self.t0;
        for (k, &s) in self.switch_times.iter().enumerate() {
            time[self.states[k]] += s - start;
            start = s;
        }
        time[*self.states.last().unwrap()] += self.t1 - start;
        let span = self.t1 - self.t0;
        time.iter().map(|t| t / span).collect()
    }
}

pub fn simulate_regime(q: &RegimeGenerator, t0: f64, t1: f64, i0: usize, seed: u64) -> RegimePath {
    let mut rng = path_rng(seed, 0);
    let mut path = RegimePath {
        t0,
        t1,
        switch_times: Vec::new(),
        states: vec![i0],
    };
    let mut t = t0;
    let mut state = i0;
    loop {
        t += exponential(&mut rng, q.exit_rate(state));
        if t >= t1 {
            break;
        }
        state = next_regime(&mut rng, q, state);
        path.switch_times.push(t);
        path.states.push(state);
    }
    path
}

/// Inverse-CDF sampler for marks with density ν/Γ.
#[derive(Debug, Clone)]
pub struct MarkSampler {
    left: f64,
    cell: f64,
    cumulative: Vec<f64>,
}

impl MarkSampler {
    pub fn new(levy: &LevyMeasureSpec) -> Self {
        let left = -levy.radius();
        let cell = 2.0 * levy.radius() / MARK_CELLS as f64;
        let mut cumulative = Vec::with_capacity(MARK_CELLS + 1);
        cumulative.push(0.0);
        let mut prev = levy.density(left);
        for j in 1..=MARK_CELLS {
            let d = levy.density(left + j as f64 * cell);
            let last = *cumulative.last().unwrap();
            cumulative.push(last + 0.5 * cell * (prev + d));
            prev = d;
        }
        Self { left, cell, cumulative }
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let target = rng.random::<f64>() * self.total();
        let k = self.cumulative.partition_point(|&c| c <= target).clamp(1, MARK_CELLS);
        let (c0, c1) = (self.cumulative[k - 1], self.cumulative[k]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
        self.left + (k as f64 - 1.0 + frac) * self.cell
    }
}

/// Control decision at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    pub rate: f64,
    pub stop: bool,
}

/// A Markov feedback rule `(t, x, y, i) -> (u, stop)`.
pub trait PolicyRule: Sync {
    fn decide(&self, t: f64, x: f64, y: f64, regime: usize) -> Decision;
}

impl<F> PolicyRule for F
where
    F: Fn(f64, f64, f64, usize) -> Decision + Sync,
{
    fn decide(&self, t: f64, x: f64, y: f64, regime: usize) -> Decision {
        self(t, x, y, regime)
    }
}

/// Solver policy looked up at the time slice containing `t` and the nearest
/// `(x, y)` node.
#[derive(Debug, Clone, Copy)]
pub struct GridPolicy<'a> {
    pub policy: &'a PolicyField,
}

impl<'a> GridPolicy<'a> {
    pub fn new(policy: &'a PolicyField) -> Self {
        Self { policy }
    }
}

impl PolicyRule for GridPolicy<'_> {
    fn decide(&self, t: f64, x: f64, y: f64, regime: usize) -> Decision {
        let g: &Grid = &self.policy.grid;
        let n = ((t / g.time_step() + 1e-9).floor().max(0.0) as usize).min(g.n_s);
        let (ix, iy) = (g.nearest_price(x), g.nearest_reserve(y));
        Decision {
            rate: self.policy.rate(n, ix, iy, regime),
            stop: self.policy.stops(n, ix, iy, regime),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpMark {
    pub time: f64,
    pub mark: f64,
    pub size: f64,
}

/// One simulated trajectory. State arrays are sampled at the start of every
/// step, with the final state appended at the stopping time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub prices: Vec<f64>,
    pub reserves: Vec<f64>,
    pub regimes: Vec<usize>,
    /// Rate applied on the step starting at the matching time.
    pub controls: Vec<f64>,
    pub jumps: Vec<JumpMark>,
    /// `(time, new regime)`.
    pub switches: Vec<(f64, usize)>,
    pub stopping_time: f64,
    /// ∫ e^{−r(t−t0)} L dt + e^{−r(τ−t0)} Φ.
    pub payoff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

/// Reusable simulation state for one problem: the mark sampler and a fine
/// quadrature for the small-jump compensator.
pub struct Simulator<'a> {
    spec: &'a ProblemSpec,
    marks: MarkSampler,
    compensator: QuadratureSet,
    jump_rate: f64,
}

impl<'a> Simulator<'a> {
    pub fn new(spec: &'a ProblemSpec) -> Self {
        let spacing = spec.levy.radius() / COMPENSATOR_PANELS;
        let compensator = build_quadrature(&spec.levy, spacing).expect("support radius is positive");
        let marks = MarkSampler::new(&spec.levy);
        let jump_rate = if marks.total() > 0.0 { spec.levy.reference_mass() } else { 0.0 };
        Self {
            spec,
            marks,
            compensator,
            jump_rate,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn run<R: Rng>(
        &self,
        rule: &dyn PolicyRule,
        t0: f64,
        x0: f64,
        y0: f64,
        i0: usize,
        dt: f64,
        rng: &mut R,
        record: bool,
    ) -> PathSample {
        let spec = self.spec;
        let horizon = spec.horizon;
        let r = spec.discount_rate;
        let discount = |t: f64| (-r * (t - t0)).exp();
        let end_eps = 1e-12 * horizon.max(1.0);

        let mut sample = PathSample {
            times: Vec::new(),
            prices: Vec::new(),
            reserves: Vec::new(),
            regimes: Vec::new(),
            controls: Vec::new(),
            jumps: Vec::new(),
            switches: Vec::new(),
            stopping_time: horizon,
            payoff: 0.0,
        };
        let (mut t, mut x, mut y, mut i) = (t0, x0, y0, i0);
        let mut next_switch = t + exponential(rng, spec.regimes.exit_rate(i));
        let mut next_jump = t + exponential(rng, self.jump_rate);
        let mut payoff = 0.0;
        let mut step = 0_u64;

        loop {
            let at_end = t >= horizon - end_eps;
            let decision = if at_end {
                Decision { rate: 0.0, stop: true }
            } else {
                rule.decide(t, x, y, i)
            };
            if decision.stop {
                let tau = if at_end { horizon } else { t };
                payoff += discount(tau) * spec.payoff.stopping(tau, x, y, i);
                sample.stopping_time = tau;
                if record {
                    sample.times.push(tau);
                    sample.prices.push(x);
                    sample.reserves.push(y);
                    sample.regimes.push(i);
                    sample.controls.push(0.0);
                }
                break;
            }
            let mut u = if y > 0.0 { decision.rate.clamp(0.0, spec.max_rate) } else { 0.0 };
            if record {
                sample.times.push(t);
                sample.prices.push(x);
                sample.reserves.push(y);
                sample.regimes.push(i);
                sample.controls.push(u);
            }
            step += 1;
            let step_end = (t0 + step as f64 * dt).min(horizon);
            let mut cur = t;
            while cur < step_end {
                let exhaustion = if u > 0.0 { cur + y / u } else { f64::INFINITY };
                let seg_end = step_end.min(next_switch).min(next_jump).min(exhaustion);
                let span = seg_end - cur;
                if span > 0.0 {
                    let running = spec.payoff.running(cur, x, y, u, i);
                    payoff += running * (discount(cur) - discount(seg_end)) / r;
                    let (mu, sigma) = spec.coefficients.drift_vol(cur, x, u, i);
                    let comp = self.compensator.compensator(spec, cur, x, u, i);
                    let normal: f64 = StandardNormal.sample(rng);
                    x = (x + (mu - comp) * span + sigma * span.sqrt() * normal).max(0.0);
                    y = (y - u * span).max(0.0);
                }
                cur = seg_end;
                if seg_end == exhaustion {
                    y = 0.0;
                    u = 0.0;
                }
                if seg_end == next_switch {
                    i = next_regime(rng, &spec.regimes, i);
                    next_switch = cur + exponential(rng, spec.regimes.exit_rate(i));
                    if record {
                        sample.switches.push((cur, i));
                    }
                }
                if seg_end == next_jump {
                    let z = self.marks.sample(rng);
                    let size = spec.coefficients.jump(cur, x, u, i, z);
                    x = (x + size).max(0.0);
                    next_jump = cur + exponential(rng, self.jump_rate);
                    if record {
                        sample.jumps.push(JumpMark { time: cur, mark: z, size });
                    }
                }
            }
            t = step_end;
        }
        sample.payoff = payoff;
        sample
    }

    /// One recorded path using stream `stream` of `seed`.
    #[allow(clippy::too_many_arguments)]
    pub fn path(
        &self,
        rule: &dyn PolicyRule,
        t0: f64,
        x0: f64,
        y0: f64,
        i0: usize,
        dt: f64,
        seed: u64,
        stream: u64,
    ) -> Result<PathSample, SimulationError> {
        check_inputs(dt, x0, y0)?;
        Ok(self.run(rule, t0, x0, y0, i0, dt, &mut path_rng(seed, stream), true))
    }

    /// Mean discounted payoff over `n_paths` independent streams.
    #[allow(clippy::too_many_arguments)]
    pub fn estimate(
        &self,
        rule: &dyn PolicyRule,
        t0: f64,
        x0: f64,
        y0: f64,
        i0: usize,
        dt: f64,
        n_paths: usize,
        seed: u64,
    ) -> Result<ValueEstimate, SimulationError> {
        if n_paths < 2 {
            return Err(SimulationError::TooFewPaths(n_paths));
        }
        check_inputs(dt, x0, y0)?;
        let payoffs: Vec<f64> = (0..n_paths as u64)
            .into_par_iter()
            .map(|p| self.run(rule, t0, x0, y0, i0, dt, &mut path_rng(seed, p), false).payoff)
            .collect();
        let n = n_paths as f64;
        let mean = payoffs.iter().sum::<f64>() / n;
        let var = payoffs.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (n - 1.0);
        Ok(ValueEstimate {
            mean,
            stderr: (var / n).sqrt(),
            n_paths,
        })
    }
}

fn check_inputs(dt: f64, x0: f64, y0: f64) -> Result<(), SimulationError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SimulationError::NonPositiveStep(dt));
    }
    if !(x0 >= 0.0 && y0 >= 0.0) {
        return Err(SimulationError::InvalidInitialState);
    }
    Ok(())
}

/// Simulates one path from `(t0, x0, y0, i0)` under `rule`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_path(
    spec: &ProblemSpec,
    rule: &dyn PolicyRule,
    t0: f64,
    x0: f64,
    y0: f64,
    i0: usize,
    dt: f64,
    seed: u64,
) -> Result<PathSample, SimulationError> {
    Simulator::new(spec).path(rule, t0, x0, y0, i0, dt, seed, 0)
}

/// Monte Carlo estimate of the payoff functional under `rule`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_value(
    spec: &ProblemSpec,
    rule: &dyn PolicyRule,
    t0: f64,
    x0: f64,
    y0: f64,
    i0: usize,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<ValueEstimate, SimulationError> {
    Simulator::new(spec).estimate(rule, t0, x0, y0, i0, dt, n_paths, seed)
}
