#![allow(dead_code)]

use rhjb::{CoefficientModel, LevyMeasureSpec, PayoffSpec, ProblemSpec, RegimeGenerator};

/// Cox-Ross-Rubinstein American put.
pub fn crr_american_put(spot: f64, strike: f64, rate: f64, vol: f64, maturity: f64, steps: usize) -> f64 {
    if maturity <= 0.0 {
        return (strike - spot).max(0.0);
    }
    let dt = maturity / steps as f64;
    let up = (vol * dt.sqrt()).exp();
    let down = 1.0 / up;
    let growth = (rate * dt).exp();
    let p = (growth - down) / (up - down);
    let disc = 1.0 / growth;
    let mut v: Vec<f64> = (0..=steps)
        .map(|j| (strike - spot * up.powi(j as i32) * down.powi((steps - j) as i32)).max(0.0))
        .collect();
    for n in (0..steps).rev() {
        for j in 0..=n {
            let cont = disc * (p * v[j + 1] + (1.0 - p) * v[j]);
            let spot_here = spot * up.powi(j as i32) * down.powi((n - j) as i32);
            v[j] = cont.max(strike - spot_here);
        }
    }
    v[0]
}

/// Single-regime geometric diffusion with no jumps, no extraction and a
/// put-style obstacle.
pub fn american_put_spec(rate: f64, vol: f64, strike: f64, horizon: f64) -> ProblemSpec {
    ProblemSpec {
        discount_rate: rate,
        horizon,
        max_rate: 0.0,
        coefficients: CoefficientModel::ExponentialLevy {
            drift: vec![rate],
            volatility: vec![vol],
            jump_scale: vec![0.0],
        },
        payoff: PayoffSpec::general(|_, _, _, _, _| 0.0, move |_, x, _, _| (strike - x).max(0.0)),
        regimes: RegimeGenerator::single(),
        levy: LevyMeasureSpec::none(),
    }
}

/// No price dynamics, single regime; payoff supplied by the caller.
pub fn frozen_spec(rate: f64, horizon: f64, max_rate: f64, payoff: PayoffSpec) -> ProblemSpec {
    ProblemSpec {
        discount_rate: rate,
        horizon,
        max_rate,
        coefficients: CoefficientModel::ExponentialLevy {
            drift: vec![0.0],
            volatility: vec![0.0],
            jump_scale: vec![0.0],
        },
        payoff,
        regimes: RegimeGenerator::single(),
        levy: LevyMeasureSpec::none(),
    }
}

/// `(x − c_e)⁺ K (1 − e^{−r min(T − s, y/K)}) / r`.
pub fn deterministic_extraction(s: f64, x: f64, y: f64, horizon: f64, rate: f64, cost: f64, max_rate: f64) -> f64 {
    let life = (horizon - s).min(y / max_rate);
    (x - cost).max(0.0) * max_rate * (1.0 - (-rate * life).exp()) / rate
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    let norm: f64 = a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let scale = 0.5_f64.powi(squarings);
    let b: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
    let mul = |x: &[Vec<f64>], y: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..m)
            .map(|i| (0..m).map(|j| (0..m).map(|k| x[i][k] * y[k][j]).sum()).collect())
            .collect()
    };
    let mut result: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let mut term = result.clone();
    for k in 1..20 {
        term = mul(&term, &b);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..m {
            for j in 0..m {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mul(&result, &result);
    }
    result
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

