//! Gauss-Legendre quadrature over lattice cells and radial-shell rules for
//! singular integrands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tuning knobs for all numeric integration in the crate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Gauss nodes per axis on a cell.
    pub order: usize,
    /// Innermost radius for shell decompositions around a singularity.
    pub inner_radius: f64,
    /// Outermost radius for tail integrals without an analytic closure.
    pub outer_radius: f64,
    /// Geometric growth factor between consecutive shells.
    pub shell_ratio: f64,
    /// Angular resolution multiplier for d = 2, 3 shells.
    pub angular_order: usize,
    /// Maximum number of shells before a divergence report.
    pub refinement_budget: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            order: 3,
            inner_radius: 1e-6,
            outer_radius: 1e6,
            shell_ratio: 1.6,
            angular_order: 4,
            refinement_budget: 400,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::invalid("quadrature.order", "must be >= 1"));
        }
        if !(self.inner_radius > 0.0) {
            return Err(Error::invalid("quadrature.inner_radius", "must be > 0"));
        }
        if !(self.outer_radius > self.inner_radius) {
            return Err(Error::invalid(
                "quadrature.outer_radius",
                "must exceed inner_radius",
            ));
        }
        if !(self.shell_ratio > 1.0) {
            return Err(Error::invalid("quadrature.shell_ratio", "must be > 1"));
        }
        if self.refinement_budget < 8 {
            return Err(Error::invalid("quadrature.refinement_budget", "must be >= 8"));
        }
        Ok(())
    }
}

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre rule of the given order, found by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre(order: usize) -> GaussRule {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 && n > 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

/// Tensor-product Gauss integral of `f` over the axis-aligned cube of the
/// given center and half-width.
pub fn cube_integral(
    center: &[f64],
    half_width: f64,
    order: usize,
    f: &mut dyn FnMut(&[f64]) -> f64,
) -> f64 {
    let dim = center.len();
    let rule = gauss_legendre(order);
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for a in 0..dim {
            point[a] = center[a] + half_width * rule.nodes[idx[a]];
            w *= rule.weights[idx[a]] * half_width;
        }
        total += w * f(&point);
        // Advance the multi-index.
        let mut a = 0;
        loop {
            if a == dim {
                return total;
            }
            idx[a] += 1;
            if idx[a] < order {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Partial sums of a shell decomposition, innermost shell first.
#[derive(Debug, Clone)]
pub struct ShellEstimate {
    pub value: f64,
    /// (outer radius of shell, contribution) pairs.
    pub shells: Vec<(f64, f64)>,
    pub diverged: bool,
}

fn angular_rule(dim: usize, spec: &QuadratureSpec) -> Vec<(Vec<f64>, f64)> {
    // Unit directions with surface-measure weights.
    match dim {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => {
            let m = (8 * spec.angular_order).max(16);
            (0..m)
                .map(|j| {
                    let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
                    (vec![th.cos(), th.sin()], 2.0 * std::f64::consts::PI / m as f64)
                })
                .collect()
        }
        3 => {
            let polar = gauss_legendre(spec.angular_order.max(4));
            let m = (4 * spec.angular_order).max(8);
            let mut dirs = Vec::new();
            for (u, wu) in polar.nodes.iter().zip(&polar.weights) {
                let s = (1.0 - u * u).sqrt();
                for j in 0..m {
                    let ph = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
                    dirs.push((
                        vec![s * ph.cos(), s * ph.sin(), *u],
                        wu * 2.0 * std::f64::consts::PI / m as f64,
                    ));
                }
            }
            dirs
        }
        _ => panic!("shell quadrature supports d <= 3"),
    }
}

/// Integral of `g` over the annulus r_lo < |z| < r_hi, via geometric radial
/// shells with a Gauss rule in the radius on each shell.
pub fn annulus_integral(
    dim: usize,
    r_lo: f64,
    r_hi: f64,
    spec: &QuadratureSpec,
    g: &mut dyn FnMut(&[f64]) -> f64,
) -> ShellEstimate {
    assert!(r_lo >= 0.0 && r_hi >= r_lo);
    if r_hi <= r_lo {
        return ShellEstimate {
            value: 0.0,
            shells: Vec::new(),
            diverged: false,
        };
    }
    let dirs = angular_rule(dim, spec);
    // Shells are narrow (geometric ratio), so a fixed high-order radial rule
    // resolves smooth radial profiles to near machine precision.
    let radial = gauss_legendre(spec.order.max(12));
    // Shell boundaries, geometric from the outside in.
    let lo = r_lo.max(spec.inner_radius.min(r_hi) * 1e-12).max(1e-300);
    let mut bounds = vec![r_hi];
    let mut r = r_hi;
    let mut budget_hit = false;
    while r / spec.shell_ratio > lo.max(r_lo) {
        r /= spec.shell_ratio;
        bounds.push(r);
        if bounds.len() > spec.refinement_budget {
            budget_hit = true;
            break;
        }
    }
    // Avoid a sliver of a shell at the inner edge: it would break the
    // monotonicity check below.
    if bounds.len() > 1 && *bounds.last().unwrap() < 1.25 * r_lo.max(1e-300) {
        bounds.pop();
    }
    bounds.push(r_lo.max(1e-300));
    bounds.reverse();
    let mut shells = Vec::with_capacity(bounds.len() - 1);
    let mut point = vec![0.0; dim];
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut contrib = 0.0;
        for (node, wt) in radial.nodes.iter().zip(&radial.weights) {
            let rr = c + h * node;
            let jac = rr.powi(dim as i32 - 1);
            for (dir, wdir) in &dirs {
                for k in 0..dim {
                    point[k] = rr * dir[k];
                }
                contrib += wt * h * jac * wdir * g(&point);
            }
        }
        shells.push((b, contrib));
    }
    // `bounds` is increasing, so the shells are already innermost first.
    let value: f64 = shells.iter().map(|s| s.1).sum();
    // Divergence heuristic: when integrating all the way down to the inner
    // floor, the shell contributions must shrink toward the singularity. On
    // annuli bounded away from it, decaying contributions are normal.
    let at_floor = r_lo <= spec.inner_radius * (1.0 + 1e-9);
    let mut diverged = budget_hit;
    if at_floor && shells.len() >= 4 {
        let inner: Vec<f64> = shells.iter().take(4).map(|s| s.1.abs()).collect();
        let growing = inner[0] > inner[1] && inner[1] > inner[2] && inner[2] > inner[3];
        if growing && inner[0] > 1e-9 * value.abs().max(1e-300) {
            diverged = true;
        }
    }
    ShellEstimate {
        value,
        shells,
        diverged,
    }
}

/// Integral of `g` over inner_radius < |z| < outer_radius.
pub fn radial_integral(
    dim: usize,
    spec: &QuadratureSpec,
    g: &mut dyn FnMut(&[f64]) -> f64,
) -> ShellEstimate {
    annulus_integral(dim, spec.inner_radius, spec.outer_radius, spec, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let rule = gauss_legendre(3);
        // Degree-5 polynomial: x^4 + x.
        let val: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * (x.powi(4) + x))
            .sum();
        assert_relative_eq!(val, 2.0 / 5.0, max_relative = 1e-13);
    }

    #[test]
    fn cube_integral_matches_exact_volume() {
        let v = cube_integral(&[0.5, -1.0], 0.25, 3, &mut |_| 1.0);
        assert_relative_eq!(v, 0.25, max_relative = 1e-13);
        let v2 = cube_integral(&[0.0], 0.5, 3, &mut |p| p[0] * p[0]);
        assert_relative_eq!(v2, 1.0 / 12.0, max_relative = 1e-13);
    }

    #[test]
    fn annulus_rule_integrates_power_laws() {
        let spec = QuadratureSpec::default();
        // d=1: int_{1<|z|<10} |z|^{-2} dz = 2(1 - 1/10).
        let e = annulus_integral(1, 1.0, 10.0, &spec, &mut |z| z[0].powi(-2).abs());
        assert_relative_eq!(e.value, 1.8, max_relative = 1e-10);
        assert!(!e.diverged);
        // d=2: int_{1<|z|<4} |z|^{-3} dz = 2*pi*(1 - 1/4).
        let e2 = annulus_integral(2, 1.0, 4.0, &spec, &mut |z| {
            (z[0] * z[0] + z[1] * z[1]).powf(-1.5)
        });
        assert_relative_eq!(e2.value, 2.0 * std::f64::consts::PI * 0.75, max_relative = 1e-8);
    }

    #[test]
    fn radial_rule_flags_divergence() {
        let spec = QuadratureSpec {
            inner_radius: 1e-8,
            ..QuadratureSpec::default()
        };
        let e = annulus_integral(1, spec.inner_radius, 1.0, &spec, &mut |z| z[0].abs().powf(-1.5));
        assert!(e.diverged);
        let ok = annulus_integral(1, spec.inner_radius, 1.0, &spec, &mut |z| z[0].abs().powf(-0.5));
        assert!(!ok.diverged);
        assert_relative_eq!(ok.value, 4.0, max_relative = 1e-3);
    }
}
