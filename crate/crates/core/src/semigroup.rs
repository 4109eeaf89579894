//! Transition semigroup of the truncated chain via uniformization, analytic
//! reference semigroups of symmetric stable limits, and the strong L2
//! comparison between the two.

use rayon::prelude::*;

use crate::discretize::ConductanceMatrix;
use crate::error::{Error, Result};
use crate::lattice::{restrict, LatticeFunction};
use crate::quad::{annulus_integral, gauss_legendre, QuadratureSpec};

/// Rate matrix view of a conductance matrix: off-diagonal C(a,b), diagonal
/// -(kept + lost), so truncation leak acts as killing.
pub struct GeneratorOperator<'a> {
    pub matrix: &'a ConductanceMatrix,
    /// Uniformization constant, slightly above the largest row rate.
    pub lambda: f64,
}

impl<'a> GeneratorOperator<'a> {
    pub fn new(matrix: &'a ConductanceMatrix) -> Self {
        let lambda = (1.01 * matrix.max_rate()).max(1e-300);
        GeneratorOperator { matrix, lambda }
    }

    /// G v, parallel by row.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let c = self.matrix;
        (0..c.num_states() as u32)
            .into_par_iter()
            .map(|a| {
                let va = v[a as usize];
                let (targets, vals) = c.row(a);
                let mut acc = 0.0;
                for (b, w) in targets.iter().zip(vals) {
                    acc += (v[*b as usize] - va) * w;
                }
                acc - c.lost_rate(a) * va
            })
            .collect()
    }

    /// (I + G/Lambda) v — sub-stochastic by the choice of Lambda.
    fn step(&self, v: &[f64]) -> Vec<f64> {
        let gv = self.apply(v);
        v.iter()
            .zip(&gv)
            .map(|(x, g)| x + g / self.lambda)
            .collect()
    }
}

/// exp(tG) f by the Poisson-weighted uniformization series, truncated when
/// the tail bound falls below tol.
pub fn apply_semigroup(
    g: &GeneratorOperator,
    f_n: &LatticeFunction,
    t: f64,
    tol: f64,
) -> Result<LatticeFunction> {
    if t < 0.0 {
        return Err(Error::invalid("t", "must be >= 0"));
    }
    if *f_n.lattice != *g.matrix.lattice {
        return Err(Error::LatticeMismatch);
    }
    if t == 0.0 {
        return Ok(f_n.clone());
    }
    let lt = g.lambda * t;
    if lt > 700.0 {
        return Err(Error::Numeric(format!(
            "uniformization horizon too large (Lambda*t = {lt:.1})"
        )));
    }
    let sup: f64 = f_n.values.iter().fold(0.0, |m, v| m.max(v.abs()));
    let mut weight = (-lt).exp();
    let mut cumulative = weight;
    let mut iterate = f_n.values.clone();
    let mut acc: Vec<f64> = iterate.iter().map(|v| v * weight).collect();
    let cap = (lt + 60.0 * (lt.sqrt() + 1.0)) as usize + 64;
    let mut j = 0usize;
    while (1.0 - cumulative) * sup > tol {
        if j > cap {
            return Err(Error::IterationCap {
                tol,
                residual: (1.0 - cumulative) * sup,
            });
        }
        iterate = g.step(&iterate);
        j += 1;
        weight *= lt / j as f64;
        cumulative += weight;
        for (a, v) in acc.iter_mut().zip(&iterate) {
            *a += weight * v;
        }
    }
    LatticeFunction::new(f_n.lattice.clone(), acc)
}

/// Reference semigroup of the rotationally symmetric stable process with
/// symbol |xi|^alpha, d = 1.
pub struct ReferenceSemigroup {
    pub alpha: f64,
    /// Spectral cutoff and grid resolution for indices without a closure.
    pub spectral_points: usize,
}

impl ReferenceSemigroup {
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::invalid("alpha", "must lie in (0, 2)"));
        }
        Ok(ReferenceSemigroup {
            alpha,
            spectral_points: 2048,
        })
    }

    pub fn cauchy() -> Self {
        Self::stable(1.0).expect("alpha = 1 is valid")
    }

    /// P_t f on the grid. alpha = 1 uses the exact convolution closure
    /// through the substitution y = t tan(theta); other indices integrate
    /// the spectral density on an auxiliary grid.
    pub fn apply(
        &self,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        t: f64,
        x_grid: &[Vec<f64>],
    ) -> Result<Vec<f64>> {
        if t < 0.0 {
            return Err(Error::invalid("t", "must be >= 0"));
        }
        if x_grid.iter().any(|x| x.len() != 1) {
            return Err(Error::invalid(
                "x_grid",
                "reference semigroups are registered for d = 1 only",
            ));
        }
        if t == 0.0 {
            return Ok(x_grid.iter().map(|x| f(x)).collect());
        }
        if (self.alpha - 1.0).abs() < 1e-14 {
            let rule = gauss_legendre(200);
            let half_pi = std::f64::consts::FRAC_PI_2;
            Ok(x_grid
                .par_iter()
                .map(|x| {
                    let mut acc = 0.0;
                    for (node, w) in rule.nodes.iter().zip(&rule.weights) {
                        let theta = half_pi * node;
                        acc += w * f(&[x[0] - t * theta.tan()]);
                    }
                    acc * half_pi / std::f64::consts::PI
                })
                .collect())
        } else {
            self.spectral_apply(f, t, x_grid)
        }
    }

    fn spectral_apply(
        &self,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        t: f64,
        x_grid: &[Vec<f64>],
    ) -> Result<Vec<f64>> {
        let alpha = self.alpha;
        let n = self.spectral_points;
        // Frequency cutoff where exp(-t xi^alpha) ~ 1e-16.
        let xi_max = (36.8 / t).powf(1.0 / alpha);
        let dxi = xi_max / n as f64;
        // Grid-extent/resolution model: the y grid resolves the transition
        // density scale t^{1/alpha} and truncates its tail at a point where
        // the neglected mass is of order t * y_max^{-alpha} / alpha.
        let scale = t.powf(1.0 / alpha);
        let dy = (scale / 16.0).min(0.25);
        let y_max = (40.0 * scale).max(40.0);
        let ny = (2.0 * y_max / dy).ceil() as usize + 1;
        let dy = 2.0 * y_max / (ny - 1) as f64;
        // Transition density on the uniform y grid by cosine transform.
        let density: Vec<f64> = (0..ny)
            .into_par_iter()
            .map(|iy| {
                let y = -y_max + iy as f64 * dy;
                let mut acc = 0.0;
                for ix in 0..n {
                    let xi = (ix as f64 + 0.5) * dxi;
                    acc += (y * xi).cos() * (-t * xi.powf(alpha)).exp();
                }
                (acc * dxi / std::f64::consts::PI).max(0.0)
            })
            .collect();
        Ok(x_grid
            .par_iter()
            .map(|x| {
                let mut acc = 0.0;
                for iy in 0..ny {
                    let y = -y_max + iy as f64 * dy;
                    // Trapezoid endpoints carry half weight.
                    let w = if iy == 0 || iy == ny - 1 { 0.5 } else { 1.0 };
                    acc += w * density[iy] * f(&[x[0] - y]);
                }
                acc * dy
            })
            .collect())
    }
}

/// L2 distance of the lifted lattice semigroup from the reference one.
#[derive(Debug, Clone, Copy)]
pub struct StrongError {
    pub l2_error: f64,
    /// Squared reference mass outside the window.
    pub window_leakage: f64,
}

pub fn strong_semigroup_error(
    c: &ConductanceMatrix,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    t: f64,
    reference: &ReferenceSemigroup,
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<StrongError> {
    let lattice = &c.lattice;
    let f_n = restrict(f, lattice, spec)?;
    let g = GeneratorOperator::new(c);
    let pf_n = apply_semigroup(&g, &f_n, t, tol)?;
    let half = 0.5 * lattice.spacing();
    let rule = gauss_legendre(spec.order);
    // Reference values at every cell node, evaluated in one batch.
    let mut nodes: Vec<Vec<f64>> = Vec::with_capacity(lattice.len() * spec.order);
    for a in 0..lattice.len() as u32 {
        let center = lattice.state_point(a);
        for node in &rule.nodes {
            nodes.push(vec![center[0] + half * node]);
        }
    }
    let ref_vals = reference.apply(f, t, &nodes)?;
    let mut inside = 0.0;
    for a in 0..lattice.len() {
        let v = pf_n.values[a];
        for (j, w) in rule.weights.iter().enumerate() {
            let r = ref_vals[a * spec.order + j];
            inside += w * half * (v - r) * (v - r);
        }
    }
    let rim = lattice.window_radius + half * (lattice.dim as f64).sqrt();
    // Leakage by shells; each shell node needs one reference evaluation.
    let mut shell_nodes: Vec<Vec<f64>> = Vec::new();
    {
        let mut collect = |z: &[f64]| {
            shell_nodes.push(z.to_vec());
            0.0
        };
        let _ = annulus_integral(lattice.dim, rim, spec.outer_radius, spec, &mut collect);
    }
    let shell_vals = reference.apply(f, t, &shell_nodes)?;
    let mut cursor = 0usize;
    let mut g_fn = |_z: &[f64]| {
        let v = shell_vals[cursor];
        cursor += 1;
        v * v
    };
    let window_leakage =
        annulus_integral(lattice.dim, rim, spec.outer_radius, spec, &mut g_fn).value;
    Ok(StrongError {
        l2_error: (inside + window_leakage).sqrt(),
        window_leakage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::Scheme;
    use crate::lattice::Lattice;
    use approx::assert_relative_eq;

    fn cauchy_density(scale: f64) -> impl Fn(&[f64]) -> f64 + Sync {
        move |x: &[f64]| scale / (std::f64::consts::PI * (scale * scale + x[0] * x[0]))
    }

    #[test]
    fn two_state_exponential_closed_form() {
        let lat = Lattice::new(1, 1, 1.0).unwrap();
        let (lambda, mu) = (0.7, 1.9);
        // Third state isolated; the active pair behaves as a 2x2 system.
        let c = ConductanceMatrix::from_entries(
            lat.clone(),
            Scheme::DirichletAverage { p: 1.0 },
            &[(0, 1, lambda), (1, 0, mu)],
        )
        .unwrap();
        let g = GeneratorOperator::new(&c);
        let f = LatticeFunction::new(lat, vec![1.0, -2.0, 0.0]).unwrap();
        let t = 0.8;
        let out = apply_semigroup(&g, &f, t, 1e-12).unwrap();
        let s = lambda + mu;
        let e = (-s * t).exp();
        let p00 = (mu + lambda * e) / s;
        let p01 = lambda * (1.0 - e) / s;
        let p10 = mu * (1.0 - e) / s;
        let p11 = (lambda + mu * e) / s;
        assert_relative_eq!(out.values[0], p00 * 1.0 + p01 * -2.0, epsilon = 1e-8);
        assert_relative_eq!(out.values[1], p10 * 1.0 + p11 * -2.0, epsilon = 1e-8);
    }

    #[test]
    fn conservative_on_leak_free_window() {
        let lat = Lattice::new(1, 1, 1.0).unwrap();
        let c = ConductanceMatrix::from_entries(
            lat.clone(),
            Scheme::DirichletAverage { p: 1.0 },
            &[(0, 1, 1.0), (1, 0, 2.0), (1, 2, 1.0), (2, 1, 0.5)],
        )
        .unwrap();
        let g = GeneratorOperator::new(&c);
        let ones = LatticeFunction::constant(lat, 1.0);
        let out = apply_semigroup(&g, &ones, 2.5, 1e-10).unwrap();
        for v in &out.values {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn cauchy_reference_reproduces_convolution_identity() {
        let p = ReferenceSemigroup::cauchy();
        let f = cauchy_density(1.0);
        let grid: Vec<Vec<f64>> = (-8..=8).map(|i| vec![i as f64 / 2.0]).collect();
        let vals = p.apply(&f, 0.5, &grid).unwrap();
        let target = cauchy_density(1.5);
        for (x, v) in grid.iter().zip(&vals) {
            assert_relative_eq!(*v, target(x), max_relative = 1e-8);
        }
    }

    #[test]
    fn spectral_route_agrees_with_closure_at_alpha_one() {
        let closed = ReferenceSemigroup::cauchy();
        let spectral = ReferenceSemigroup {
            alpha: 1.0 + 1e-9,
            spectral_points: 2048,
        };
        let f = cauchy_density(1.0);
        let grid: Vec<Vec<f64>> = (-4..=4).map(|i| vec![i as f64]).collect();
        let a = closed.apply(&f, 0.7, &grid).unwrap();
        let b = spectral.apply(&f, 0.7, &grid).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert_relative_eq!(*u, *v, max_relative = 2e-2, epsilon = 2e-4);
        }
    }
}
