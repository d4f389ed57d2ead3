//! Composite Simpson discretization of the jump integral.

use crate::error::QuadratureError;
use crate::model::{LevyMeasureSpec, ProblemSpec};

/// Simpson nodes and weights for a Lévy measure.
///
/// `c_weights` integrate against `nu(dz)` over the whole support; the `d_*`
/// pair covers only the strictly small marks `|z| < 1` that enter the
/// compensator.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSet {
    pub spacing: f64,
    pub z_nodes: Vec<f64>,
    pub c_weights: Vec<f64>,
    pub d_nodes: Vec<f64>,
    pub d_weights: Vec<f64>,
    pub mass: f64,
}

impl QuadratureSet {
    /// Σ d_j γ(t, x, u, i, z_j): the discretized compensator integral.
    pub fn compensator(&self, spec: &ProblemSpec, t: f64, x: f64, u: f64, regime: usize) -> f64 {
        self.d_nodes
            .iter()
            .zip(&self.d_weights)
            .map(|(&z, &w)| w * spec.coefficients.jump(t, x, u, regime, z))
            .sum()
    }

    pub fn small_jump_mass(&self) -> f64 {
        self.d_weights.iter().sum()
    }
}

/// Builds the composite Simpson rule with spacing `spacing`. The support is
/// padded symmetrically with zero density until it spans an even number of
/// panels.
pub fn build_quadrature(levy: &LevyMeasureSpec, spacing: f64) -> Result<QuadratureSet, QuadratureError> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(QuadratureError::NonPositiveSpacing(spacing));
    }
    let width = 2.0 * levy.radius();
    let mut panels = (width / spacing - 1e-9).ceil().max(2.0) as usize;
    if panels % 2 == 1 {
        panels += 1;
    }
    let half = panels as f64 * spacing / 2.0;
    let edge_tol = 1e-9 * spacing;

    let mut z_nodes = Vec::with_capacity(panels + 1);
    let mut c_weights = Vec::with_capacity(panels + 1);
    let mut d_nodes = Vec::new();
    let mut d_weights = Vec::new();
    for j in 0..=panels {
        let z = j as f64 * spacing - half;
        let pattern = if j == 0 || j == panels {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let w = pattern * spacing / 3.0 * levy.density(z);
        z_nodes.push(z);
        c_weights.push(w);
        if z.abs() < 1.0 - edge_tol {
            d_nodes.push(z);
            d_weights.push(w);
        }
    }
    let mass = c_weights.iter().sum();
    Ok(QuadratureSet {
        spacing,
        z_nodes,
        c_weights,
        d_nodes,
        d_weights,
        mass,
    })
}

/// Values on the uniform price grid `x_j = j*h`, read back by linear
/// interpolation clamped to `[0, n*h]`.
#[derive(Debug, Clone, Copy)]
pub struct XProfile<'a> {
    step: f64,
    values: &'a [f64],
}

impl<'a> XProfile<'a> {
    pub fn new(step: f64, values: &'a [f64]) -> Self {
        assert!(!values.is_empty(), "profile needs at least one node");
        Self { step, values }
    }

    pub fn at(&self, x: f64) -> f64 {
        let last = self.values.len() - 1;
        let pos = (x / self.step).clamp(0.0, last as f64);
        let lo = (pos.floor() as usize).min(last);
        if lo == last {
            return self.values[last];
        }
        let frac = pos - lo as f64;
        self.values[lo] * (1.0 - frac) + self.values[lo + 1] * frac
    }
}

/// Simpson-discretized nonlocal operator
/// `Σ c_j f(x + γ_j) − f'(x) Σ d_j γ_j − f(x) Γ_num` at `(s, x, ·, i)` for control `u`.
#[allow(clippy::too_many_arguments)]
pub fn apply_nonlocal(
    profile: &XProfile<'_>,
    quad: &QuadratureSet,
    spec: &ProblemSpec,
    s: f64,
    x: f64,
    regime: usize,
    u: f64,
    dv_dx: f64,
) -> f64 {
    let shifted: f64 = quad
        .z_nodes
        .iter()
        .zip(&quad.c_weights)
        .filter(|(_, &w)| w != 0.0)
        .map(|(&z, &w)| w * profile.at(x + spec.coefficients.jump(s, x, u, regime, z)))
        .sum();
    shifted - dv_dx * quad.compensator(spec, s, x, u, regime) - profile.at(x) * quad.mass
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_density_is_exact() {
        let q = build_quadrature(&LevyMeasureSpec::uniform(1.0, 2.0), 0.25).unwrap();
        assert_eq!(q.z_nodes.len(), 9);
        assert!((q.mass - 2.0).abs() < 1e-15);
        // ±1 are excluded from the compensated set
        assert_eq!(q.d_nodes.len(), 7);
        assert!(q.d_nodes.iter().all(|z| z.abs() < 1.0));
    }

    #[test]
    fn zero_density_gives_zero_weights() {
        let q = build_quadrature(&LevyMeasureSpec::none(), 0.1).unwrap();
        assert!(q.c_weights.iter().all(|&w| w == 0.0));
        assert_eq!(q.mass, 0.0);
    }

    #[test]
    fn cubic_polynomials_are_exact() {
        // ∫_{-1}^{1} z² dz = 2/3
        for xi in [0.5, 0.25, 0.125] {
            let q = build_quadrature(&LevyMeasureSpec::from_density(1.0, |z| z * z), xi).unwrap();
            assert!((q.mass - 2.0 / 3.0).abs() < 1e-14, "xi = {xi}: {}", q.mass);
        }
        // 1 + z + z² + z³ on [-2, 2]: 4 + 16/3
        let q = build_quadrature(&LevyMeasureSpec::from_density(2.0, |z| 1.0 + z + z * z + z * z * z), 0.5).unwrap();
        assert!((q.mass - (4.0 + 16.0 / 3.0)).abs() < 1e-13);
    }

    #[test]
    fn odd_panel_count_is_padded() {
        // width 2 / 0.4 = 5 panels -> padded to 6, half-width 1.2
        let q = build_quadrature(&LevyMeasureSpec::uniform(1.0, 1.0), 0.4).unwrap();
        assert_eq!(q.z_nodes.len(), 7);
        assert!((q.z_nodes[0] + 1.2).abs() < 1e-12);
        assert!(q.c_weights[0] == 0.0 && q.c_weights[6] == 0.0);
    }

    #[test]
    fn rejects_bad_spacing() {
        let levy = LevyMeasureSpec::uniform(1.0, 1.0);
        assert_eq!(build_quadrature(&levy, 0.0), Err(QuadratureError::NonPositiveSpacing(0.0)));
        assert!(build_quadrature(&levy, -0.1).is_err());
        assert!(build_quadrature(&levy, f64::NAN).is_err());
    }

    #[test]
    fn profile_interpolates_and_clamps() {
        let values = [0.0, 1.0, 4.0, 9.0];
        let p = XProfile::new(0.5, &values);
        assert_eq!(p.at(0.25), 0.5);
        assert_eq!(p.at(-3.0), 0.0);
        assert_eq!(p.at(10.0), 9.0);
        assert_eq!(p.at(1.5), 9.0);
        assert_eq!(p.at(1.0), 4.0);
    }
}
