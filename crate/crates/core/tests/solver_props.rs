mod common;

use rhjb::policy::tie_tolerance;
use rhjb::solver::check_scheme;
use rhjb::{
    build_quadrature, extract_policy, oil_field_example, solve, CoefficientModel, Grid, LevyMeasureSpec, PayoffSpec,
    ProblemSpec, SolverSettings,
};

use common::{crr_american_put, frozen_spec};

fn small_grid(spec: &ProblemSpec) -> Grid {
    Grid::new(spec.horizon, 60.0, 4.0, 8, 20, 8, spec.regime_count()).unwrap()
}

fn oil_with_payoff(scale: f64, shift: f64) -> ProblemSpec {
    ProblemSpec {
        horizon: 1.0,
        max_rate: 20.0,
        payoff: PayoffSpec::general(
            move |_, x, _, u, _| scale * ((x - 25.0) * u - 5.0) + shift,
            move |_, x, y, _| scale * (x - 30.0) * y + shift,
        ),
        ..oil_field_example()
    }
}

#[test]
fn binomial_oracle_matches_reference_price() {
    // 36/40 put, r = 6%, sigma = 20%, one year
    let p = crr_american_put(36.0, 40.0, 0.06, 0.2, 1.0, 4000);
    assert!((p - 4.4867).abs() < 2e-3, "{p}");
}

#[test]
fn larger_payoffs_give_larger_values() {
    let low = oil_with_payoff(1.0, 0.0);
    let high = oil_with_payoff(1.0, 0.5);
    let quad = build_quadrature(&low.levy, 0.1).unwrap();
    let grid = small_grid(&low);
    let settings = SolverSettings::default();
    let (v1, _) = solve(&low, &grid, &quad, &settings).unwrap();
    let (v2, _) = solve(&high, &grid, &quad, &settings).unwrap();
    for (a, b) in v1.values.iter().zip(&v2.values) {
        assert!(*a <= b + 1e-8, "{a} > {b}");
    }
}

#[test]
fn no_dynamics_annuity() {
    let (r, horizon) = (0.1, 2.0);
    let spec = frozen_spec(r, horizon, 0.0, PayoffSpec::general(|_, _, _, _, _| 1.0, |_, _, _, _| 0.0));
    let grid = Grid::new(horizon, 10.0, 1.0, 400, 4, 1, 1).unwrap();
    let quad = build_quadrature(&spec.levy, 0.1).unwrap();
    let (v, _) = solve(&spec, &grid, &quad, &SolverSettings::default()).unwrap();
    let k = grid.time_step();
    for n in [0, 100, 200, 399] {
        let exact = (1.0 - (-r * (horizon - grid.s(n))).exp()) / r;
        for ix in 0..=4 {
            assert!((v.get(n, ix, 1, 0) - exact).abs() <= 2.0 * k, "n={n}: {} vs {exact}", v.get(n, ix, 1, 0));
        }
    }
}

#[test]
fn immediate_stop_dominates_waiting() {
    let spec = frozen_spec(0.05, 3.0, 0.0, PayoffSpec::general(|_, _, _, _, _| 0.0, |_, x, _, _| x));
    let grid = Grid::new(3.0, 10.0, 1.0, 30, 10, 1, 1).unwrap();
    let quad = build_quadrature(&spec.levy, 0.1).unwrap();
    let (v, _) = solve(&spec, &grid, &quad, &SolverSettings::default()).unwrap();
    for n in 0..=grid.n_s {
        for ix in 0..=grid.n_x {
            assert_eq!(v.get(n, ix, 0, 0), grid.x(ix));
        }
    }
}

#[test]
fn policy_is_scale_invariant() {
    let quad = build_quadrature(&oil_field_example().levy, 0.1).unwrap();
    let settings = SolverSettings {
        control_points: 4,
        ..SolverSettings::default()
    };
    let base = oil_with_payoff(1.0, 0.0);
    let scaled = oil_with_payoff(4.0, 0.0);
    let grid = small_grid(&base);
    let (v1, _) = solve(&base, &grid, &quad, &settings).unwrap();
    let (v4, _) = solve(&scaled, &grid, &quad, &settings).unwrap();
    let p1 = extract_policy(&v1, &base, &quad, &settings);
    let p4 = extract_policy(&v4, &scaled, &quad, &settings);
    assert_eq!(p1.u_star, p4.u_star);
    assert_eq!(p1.stop, p4.stop);
}

#[test]
fn stop_flags_agree_with_obstacle() {
    let spec = oil_field_example();
    let quad = build_quadrature(&spec.levy, 0.1).unwrap();
    let settings = SolverSettings::default();
    let grid = Grid::new(spec.horizon, 96.0, 10.0, 16, 32, 16, 2).unwrap();
    let (v, report) = solve(&spec, &grid, &quad, &settings).unwrap();
    let policy = extract_policy(&v, &spec, &quad, &settings);
    let len = grid.slice_len();
    for n in 0..=grid.n_s {
        for node in 0..len {
            let (ix, iy, i) = grid.coords(node);
            let phi = spec.payoff.stopping(grid.s(n), grid.x(ix), grid.y(iy), i);
            let val = v.slice(n)[node];
            assert!(val >= phi - 1e-9);
            if policy.stop[n * len + node] {
                assert!((val - phi).abs() <= tie_tolerance(phi));
            }
        }
    }
    for s in &report.slices {
        assert!(s.strictly_decreasing, "slice {}", s.slice);
        assert!(s.contraction_ratio < 1.0);
    }
}

#[test]
fn upwinding_repairs_strong_negative_drift() {
    let spec = ProblemSpec {
        coefficients: CoefficientModel::ExponentialLevy {
            drift: vec![-1000.0, -1000.0],
            volatility: vec![0.3, 0.2],
            jump_scale: vec![0.25, 0.3],
        },
        ..oil_field_example()
    };
    let quad = build_quadrature(&spec.levy, 0.05).unwrap();
    let grid = Grid::new(spec.horizon, 32.0, 10.0, 8, 64, 4, 2).unwrap();
    let report = check_scheme(&spec, &grid, &quad, &SolverSettings::default());
    assert!(!report.raw_monotone);
    assert!(report.monotone);
    assert!(report.min_weight >= 0.0);
}

#[test]
fn example_scheme_is_monotone_and_contractive() {
    let spec = oil_field_example();
    let quad = build_quadrature(&spec.levy, 0.05).unwrap();
    let grid = Grid::new(spec.horizon, 96.0, 10.0, 64, 64, 32, 2).unwrap();
    let report = check_scheme(&spec, &grid, &quad, &SolverSettings::default());
    assert!(report.monotone);
    assert!(report.contraction_bound < 1.0);
    assert!(!report.raw_reserve_monotone);
}

#[test]
fn no_jumps_in_any_regime() {
    let spec = ProblemSpec {
        levy: LevyMeasureSpec::none(),
        ..oil_field_example()
    };
    let quad = build_quadrature(&spec.levy, 0.05).unwrap();
    let grid = small_grid(&spec);
    let report = check_scheme(&spec, &grid, &quad, &SolverSettings::default());
    assert_eq!(report.contraction_bound, 0.0);
}
