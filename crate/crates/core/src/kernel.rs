//! Jump kernels k(x,y), Lévy-measure fields x -> nu(x,dy), truncation
//! functions, and the built-in example families.

use std::sync::Arc;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::geom;
use crate::quad::{annulus_integral, QuadratureSpec};

pub type DensityFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type TailFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
pub type DriftFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// State-dependent jump density k(x,y), defined off the diagonal.
#[derive(Clone)]
pub struct JumpKernel {
    pub dim: usize,
    density: DensityFn,
    /// Set when k(x,y) = k(y,x) holds by construction.
    pub symmetric: bool,
    /// Optional closed form for (x, r) -> integral of k(x, .) over |y - x| > r.
    tail: Option<TailFn>,
}

impl JumpKernel {
    pub fn new(dim: usize, density: DensityFn, symmetric: bool) -> Self {
        JumpKernel {
            dim,
            density,
            symmetric,
            tail: None,
        }
    }

    pub fn with_tail(mut self, tail: TailFn) -> Self {
        self.tail = Some(tail);
        self
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert!(x != y, "kernel evaluated on the diagonal");
        (self.density)(x, y)
    }

    pub fn has_tail_closure(&self) -> bool {
        self.tail.is_some()
    }

    /// Mass of k(x, .) beyond radius r around x, preferring the analytic
    /// closure when one is registered.
    pub fn tail_mass(&self, x: &[f64], r: f64, spec: &QuadratureSpec) -> f64 {
        if let Some(t) = &self.tail {
            return t(x, r);
        }
        let mut g = |z: &[f64]| {
            let y = geom::add(x, z);
            (self.density)(x, &y)
        };
        annulus_integral(self.dim, r.max(spec.inner_radius), spec.outer_radius, spec, &mut g).value
    }
}

/// Symmetric and antisymmetric parts of k at (x, y).
pub fn k_parts(k: &JumpKernel, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x == y {
        return Err(Error::DiagonalEvaluation);
    }
    let fwd = k.eval(x, y);
    let bwd = k.eval(y, x);
    Ok(((fwd + bwd) / 2.0, (fwd - bwd) / 2.0))
}

/// Surface area of the unit sphere in R^d.
pub fn sphere_area(dim: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma(dim as f64 / 2.0)
}

/// Normalizing factor of the rotationally symmetric alpha-stable density.
pub fn stable_gamma_factor(alpha: f64, dim: usize) -> f64 {
    alpha * 2.0_f64.powf(alpha - 1.0) * gamma((alpha + dim as f64) / 2.0)
        / (std::f64::consts::PI.powf(dim as f64 / 2.0) * gamma(1.0 - alpha / 2.0))
}

fn check_alpha(alpha: f64, name: &str) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::invalid(name, format!("{alpha} outside (0, 2)")));
    }
    Ok(())
}

/// Stable-like kernel gamma(x) |y - x|^{-alpha(x)-d} with state-dependent
/// stability index.
pub fn stable_like_kernel(
    alpha: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    dim: usize,
) -> Result<JumpKernel> {
    // Probe the index on a coarse grid; each runtime evaluation re-checks.
    for i in -4..=4 {
        let x = vec![i as f64; dim];
        check_alpha(alpha(&x), "alpha")?;
    }
    let constant = {
        let a0 = alpha(&vec![0.0; dim]);
        (-8..=8).all(|i| (alpha(&vec![i as f64 / 2.0; dim]) - a0).abs() < 1e-14)
    };
    let d = dim;
    let af = alpha.clone();
    let density: DensityFn = Arc::new(move |x, y| {
        let a = af(x);
        let r = geom::dist(x, y);
        stable_gamma_factor(a, d) * r.powf(-a - d as f64)
    });
    let area = sphere_area(dim);
    let at = alpha;
    let tail: TailFn = Arc::new(move |x, r| {
        if r <= 0.0 {
            return f64::INFINITY;
        }
        let a = at(x);
        stable_gamma_factor(a, d) * area * r.powf(-a) / a
    });
    Ok(JumpKernel::new(dim, density, constant).with_tail(tail))
}

/// Rotationally symmetric 1-stable kernel; in d = 1 this is the Cauchy
/// process kernel (1/pi) |y - x|^{-2}.
pub fn cauchy_kernel(dim: usize) -> JumpKernel {
    stable_like_kernel(Arc::new(|_| 1.0), dim).expect("alpha = 1 is valid")
}

/// Membership regions used by the two-regime mixture kernel.
#[derive(Debug, Clone)]
pub enum Region {
    All,
    /// { z : <z, normal> > offset }
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn contains(&self, z: &[f64]) -> bool {
        match self {
            Region::All => true,
            Region::HalfSpace { normal, offset } => {
                z.iter().zip(normal).map(|(a, b)| a * b).sum::<f64>() > *offset
            }
            Region::Ball { center, radius } => geom::dist(z, center) < *radius,
        }
    }
}

/// Two-regime mixture: exponent `alpha` when y - x falls in the region,
/// `beta` outside it, with jumps shorter than `min_jump` suppressed so the
/// asymmetry functional stays finite.
pub fn levy_mix_kernel(
    alpha: f64,
    beta: f64,
    region: Region,
    min_jump: f64,
    dim: usize,
) -> Result<JumpKernel> {
    check_alpha(alpha, "alpha")?;
    check_alpha(beta, "beta")?;
    if !(min_jump >= 0.0) {
        return Err(Error::invalid("min_jump", "must be >= 0"));
    }
    let d = dim as f64;
    let symmetric = (alpha - beta).abs() < 1e-15 || matches!(region, Region::All);
    let reg = region.clone();
    let density: DensityFn = Arc::new(move |x, y| {
        let z = geom::sub(y, x);
        let r = geom::norm(&z);
        if r < min_jump {
            return 0.0;
        }
        let e = if reg.contains(&z) { alpha } else { beta };
        r.powf(-e - d)
    });
    let mut kern = JumpKernel::new(dim, density, symmetric);
    // Closed-form tail for the region shapes that cut every sphere in a fixed
    // proportion.
    let fraction_in = match &region {
        Region::All => Some(1.0),
        Region::HalfSpace { offset, .. } if *offset == 0.0 => Some(0.5),
        _ => None,
    };
    if let Some(frac) = fraction_in {
        let area = sphere_area(dim);
        let tail: TailFn = Arc::new(move |_x, r| {
            let r0 = r.max(min_jump);
            if r0 <= 0.0 {
                return f64::INFINITY;
            }
            area * (frac * r0.powf(-alpha) / alpha + (1.0 - frac) * r0.powf(-beta) / beta)
        });
        kern = kern.with_tail(tail);
    }
    Ok(kern)
}

/// Lévy-measure field with drift: x -> (b(x), nu(x, dy)).
#[derive(Clone)]
pub struct LevyMeasureField {
    pub dim: usize,
    drift: Option<DriftFn>,
    /// Density of nu(x, dy) with respect to dy, evaluated at the jump y != 0.
    measure_density: DensityFn,
    /// Optional closed form for (x, r) -> nu(x, complement of B_r(0)).
    tail: Option<TailFn>,
    pub symmetric: bool,
}

impl LevyMeasureField {
    pub fn new(dim: usize, measure_density: DensityFn, symmetric: bool) -> Self {
        LevyMeasureField {
            dim,
            drift: None,
            measure_density,
            tail: None,
            symmetric,
        }
    }

    pub fn with_drift(mut self, drift: DriftFn) -> Self {
        self.drift = Some(drift);
        self
    }

    pub fn with_tail(mut self, tail: TailFn) -> Self {
        self.tail = Some(tail);
        self
    }

    #[inline]
    pub fn density(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert!(y.iter().any(|v| *v != 0.0), "measure density at y = 0");
        (self.measure_density)(x, y)
    }

    pub fn drift(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.drift.as_ref().map(|b| b(x))
    }

    pub fn has_tail_closure(&self) -> bool {
        self.tail.is_some()
    }

    pub fn tail_mass(&self, x: &[f64], r: f64, spec: &QuadratureSpec) -> f64 {
        if let Some(t) = &self.tail {
            return t(x, r);
        }
        let mut g = |z: &[f64]| (self.measure_density)(x, z);
        annulus_integral(self.dim, r.max(spec.inner_radius), spec.outer_radius, spec, &mut g).value
    }
}

/// Field of an SDE driven by a symmetric Lévy noise with state-dependent
/// amplitude |phi(x)|: nu(x, A) = nu_base(A / |phi(x)|), zero drift.
pub fn sde_field(
    phi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    base_density: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    base_tail: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    dim: usize,
) -> Result<LevyMeasureField> {
    for i in -4..=4 {
        let v = phi(&vec![i as f64; dim]).abs();
        if !(v > 1e-12 && v.is_finite()) {
            return Err(Error::invalid("phi", format!("|phi| = {v} at probe {i}")));
        }
    }
    let d = dim as f64;
    let p = phi.clone();
    let bd = base_density;
    let density: DensityFn = Arc::new(move |x, y| {
        let s = p(x).abs();
        let scaled: Vec<f64> = y.iter().map(|v| v / s).collect();
        bd(&scaled) * s.powf(-d)
    });
    let mut field = LevyMeasureField::new(dim, density, true)
        .with_drift(Arc::new(move |_| vec![0.0; dim]));
    if let Some(bt) = base_tail {
        let pt = phi;
        field = field.with_tail(Arc::new(move |x, r| bt(r / pt(x).abs())));
    }
    Ok(field)
}

/// Cauchy Lévy measure field in d = 1: nu(dy) = dy / (pi y^2), zero drift.
pub fn cauchy_field() -> LevyMeasureField {
    let density: DensityFn = Arc::new(|_x, y: &[f64]| {
        1.0 / (std::f64::consts::PI * y[0] * y[0])
    });
    LevyMeasureField::new(1, density, true)
        .with_drift(Arc::new(|_| vec![0.0]))
        .with_tail(Arc::new(|_x, r| 2.0 / (std::f64::consts::PI * r)))
}

/// Bounded continuous truncation map equal to the identity near the origin.
#[derive(Clone)]
pub struct TruncationFunction {
    pub bound: f64,
    pub identity_radius: f64,
    pub symmetric: bool,
    map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl TruncationFunction {
    pub fn new(
        bound: f64,
        identity_radius: f64,
        symmetric: bool,
        map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    ) -> Self {
        TruncationFunction {
            bound,
            identity_radius,
            symmetric,
            map,
        }
    }

    /// h(x) = x inside the unit ball, x/|x| outside.
    pub fn standard() -> Self {
        TruncationFunction {
            bound: 1.0,
            identity_radius: 1.0,
            symmetric: true,
            map: Arc::new(|x: &[f64]| {
                let r = geom::norm(x);
                if r <= 1.0 {
                    x.to_vec()
                } else {
                    x.iter().map(|v| v / r).collect()
                }
            }),
        }
    }

    #[inline]
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.map)(x)
    }
}

impl Default for TruncationFunction {
    fn default() -> Self {
        TruncationFunction::standard()
    }
}

/// Result of the asymmetry-functional estimate.
#[derive(Debug, Clone)]
pub struct Alpha0Estimate {
    pub value: f64,
    pub per_probe: Vec<f64>,
    pub diverged: bool,
}

/// sup over probes of the integral of k_a(x,y)^2 / k_s(x,y) dy over the set
/// where k_s does not vanish.
pub fn alpha0_estimate(
    k: &JumpKernel,
    probe_grid: &[Vec<f64>],
    spec: &QuadratureSpec,
) -> Result<Alpha0Estimate> {
    if probe_grid.is_empty() {
        return Err(Error::invalid("probe_grid", "must be nonempty"));
    }
    if k.symmetric {
        return Ok(Alpha0Estimate {
            value: 0.0,
            per_probe: vec![0.0; probe_grid.len()],
            diverged: false,
        });
    }
    let mut per_probe = Vec::with_capacity(probe_grid.len());
    let mut diverged = false;
    for x in probe_grid {
        let mut g = |z: &[f64]| {
            let y = geom::add(x, z);
            let fwd = k.eval(x, &y);
            let bwd = k.eval(&y, x);
            let ks = (fwd + bwd) / 2.0;
            if ks <= 0.0 {
                0.0
            } else {
                let ka = (fwd - bwd) / 2.0;
                ka * ka / ks
            }
        };
        let est = annulus_integral(k.dim, spec.inner_radius, spec.outer_radius, spec, &mut g);
        diverged |= est.diverged;
        per_probe.push(est.value);
    }
    let value = per_probe.iter().cloned().fold(0.0, f64::max);
    if diverged {
        return Err(Error::QuadratureDivergence(format!(
            "asymmetry functional did not stabilize (partial estimate {value})"
        )));
    }
    Ok(Alpha0Estimate {
        value,
        per_probe,
        diverged,
    })
}
