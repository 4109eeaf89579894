//! Declarative run configuration: kernel/field family, scheme, lattice,
//! simulation, and checker parameters, with strict validation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chain::{InitialDistribution, SimulationConfig};
use crate::discretize::Scheme;
use crate::error::{Error, Result};
use crate::expr::{expr_field, expr_kernel, Expression};
use crate::kernel::{
    cauchy_field, cauchy_kernel, levy_mix_kernel, sde_field, stable_like_kernel, JumpKernel,
    LevyMeasureField, Region, TruncationFunction,
};
use crate::quad::QuadratureSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    /// One of: cauchy, stable_like, levy_mix, expression.
    pub family: String,
    pub dim: usize,
    /// Constant stability index (cauchy fixes 1).
    pub alpha: Option<f64>,
    /// Expression in x1..xd for a variable index.
    pub alpha_expr: Option<String>,
    /// Second exponent of the two-regime mixture.
    pub beta: Option<f64>,
    /// Mixture region: "all" or "half_space".
    pub region: Option<String>,
    /// Minimum jump length of the mixture kernel.
    pub min_jump: Option<f64>,
    /// Density expression in x1.., y1.., r for family = expression.
    pub expression: Option<String>,
    pub symmetric: Option<bool>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            family: "cauchy".into(),
            dim: 1,
            alpha: None,
            alpha_expr: None,
            beta: None,
            region: None,
            min_jump: None,
            expression: None,
            symmetric: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    /// One of: cauchy, sde, expression.
    pub family: String,
    pub dim: usize,
    /// Amplitude expression in x1..xd for family = sde (Cauchy base noise).
    pub phi_expr: Option<String>,
    /// Measure-density expression in x1.., y1.. (jump vector) for
    /// family = expression.
    pub expression: Option<String>,
    pub symmetric: Option<bool>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            family: "cauchy".into(),
            dim: 1,
            phi_expr: None,
            expression: None,
            symmetric: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    /// "dirichlet" or "measure".
    pub kind: String,
    pub p: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            kind: "dirichlet".into(),
            p: 0.99,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub n: u32,
    /// Optional sweep list; powers of two keep the grids nested.
    pub n_list: Option<Vec<u32>>,
    pub window_radius: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            n: 16,
            n_list: None,
            window_radius: 16.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    pub bound: f64,
    pub identity_radius: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            bound: 1.0,
            identity_radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub marginal_times: Vec<f64>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            horizon: 1.0,
            n_paths: 10_000,
            seed: 1,
            x0: vec![0.0],
            marginal_times: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionsConfig {
    pub rho: f64,
    pub rho_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    /// Radial bump scales for the test-function family.
    pub ell_grid: Vec<f64>,
    /// Probe radius for the semimartingale-route checks.
    pub probe_radius: f64,
    pub probes_per_axis: usize,
    /// Boundedness cap for trend verdicts.
    pub trend_cap: f64,
}

impl Default for ConditionsConfig {
    fn default() -> Self {
        ConditionsConfig {
            rho: 1.0,
            rho_grid: vec![1.0, 2.0],
            r_grid: vec![2.0, 4.0, 8.0],
            eps_grid: vec![0.5, 0.25, 0.125],
            ell_grid: vec![0.5, 1.0, 2.0],
            probe_radius: 1.0,
            probes_per_axis: 5,
            trend_cap: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemigroupConfig {
    pub t: f64,
    /// Stability index of the reference semigroup.
    pub alpha: f64,
    /// Test function: "cauchy_density" (scale 1) or an expression in x1..xd.
    pub test_function: String,
    pub tol: f64,
}

impl Default for SemigroupConfig {
    fn default() -> Self {
        SemigroupConfig {
            t: 0.5,
            alpha: 1.0,
            test_function: "cauchy_density".into(),
            tol: 1e-8,
        }
    }
}

/// Full run configuration; unknown keys are rejected on load.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub kernel: Option<KernelConfig>,
    pub field: Option<FieldConfig>,
    pub scheme: SchemeConfig,
    pub lattice: LatticeConfig,
    pub truncation: TruncationConfig,
    pub simulation: SimulationSection,
    pub quadrature: QuadratureSpec,
    pub conditions: ConditionsConfig,
    pub semigroup: SemigroupConfig,
}

impl RunConfig {
    /// The minimal Cauchy pipeline.
    pub fn example() -> Self {
        RunConfig {
            version: 1,
            kernel: Some(KernelConfig::default()),
            ..RunConfig::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.kernel
            .as_ref()
            .map(|k| k.dim)
            .or_else(|| self.field.as_ref().map(|f| f.dim))
            .unwrap_or(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::invalid("version", "expected 1"));
        }
        if self.kernel.is_none() && self.field.is_none() {
            return Err(Error::invalid("kernel", "either kernel or field must be set"));
        }
        self.scheme()?;
        match self.scheme.kind.as_str() {
            "dirichlet" => {
                if self.kernel.is_none() {
                    return Err(Error::invalid("kernel", "dirichlet scheme needs a kernel"));
                }
            }
            "measure" => {
                if self.field.is_none() {
                    return Err(Error::invalid("field", "measure scheme needs a field"));
                }
            }
            _ => unreachable!("scheme() validated the kind"),
        }
        if self.lattice.n == 0 {
            return Err(Error::invalid("lattice.n", "must be >= 1"));
        }
        if let Some(list) = &self.lattice.n_list {
            if list.is_empty() || list.contains(&0) {
                return Err(Error::invalid("lattice.n_list", "must be nonempty, all >= 1"));
            }
        }
        if !(self.lattice.window_radius > 0.0) {
            return Err(Error::invalid("lattice.window_radius", "must be > 0"));
        }
        if !(self.simulation.horizon > 0.0) {
            return Err(Error::invalid("simulation.horizon", "must be > 0"));
        }
        if self.simulation.n_paths == 0 {
            return Err(Error::invalid("simulation.n_paths", "must be >= 1"));
        }
        if self.simulation.x0.len() != self.dim() {
            return Err(Error::invalid("simulation.x0", "dimension mismatch"));
        }
        if !(self.truncation.bound > 0.0) || !(self.truncation.identity_radius > 0.0) {
            return Err(Error::invalid("truncation", "bound and identity_radius must be > 0"));
        }
        self.quadrature.validate()?;
        if !(self.semigroup.t >= 0.0) {
            return Err(Error::invalid("semigroup.t", "must be >= 0"));
        }
        if !(self.semigroup.alpha > 0.0 && self.semigroup.alpha < 2.0) {
            return Err(Error::invalid("semigroup.alpha", "must lie in (0, 2)"));
        }
        self.build_kernel()?;
        self.build_field()?;
        Ok(())
    }

    pub fn scheme(&self) -> Result<Scheme> {
        let p = self.scheme.p;
        let scheme = match self.scheme.kind.as_str() {
            "dirichlet" => Scheme::DirichletAverage { p },
            "measure" => Scheme::SemimartingaleMeasure { p },
            other => {
                return Err(Error::invalid(
                    "scheme.kind",
                    format!("unknown scheme `{other}`"),
                ))
            }
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn build_kernel(&self) -> Result<Option<JumpKernel>> {
        let Some(kc) = &self.kernel else {
            return Ok(None);
        };
        if kc.dim == 0 || kc.dim > 3 {
            return Err(Error::invalid("kernel.dim", "supported dimensions are 1..=3"));
        }
        let k = match kc.family.as_str() {
            "cauchy" => cauchy_kernel(kc.dim),
            "stable_like" => {
                if let Some(src) = &kc.alpha_expr {
                    let expr = Expression::parse(src, kc.dim)?;
                    let dim = kc.dim;
                    stable_like_kernel(
                        Arc::new(move |x: &[f64]| expr.eval(x, &vec![0.0; dim])),
                        kc.dim,
                    )?
                } else {
                    let a = kc
                        .alpha
                        .ok_or_else(|| Error::invalid("kernel.alpha", "required for stable_like"))?;
                    stable_like_kernel(Arc::new(move |_: &[f64]| a), kc.dim)?
                }
            }
            "levy_mix" => {
                let a = kc
                    .alpha
                    .ok_or_else(|| Error::invalid("kernel.alpha", "required for levy_mix"))?;
                let b = kc
                    .beta
                    .ok_or_else(|| Error::invalid("kernel.beta", "required for levy_mix"))?;
                let region = match kc.region.as_deref().unwrap_or("half_space") {
                    "all" => Region::All,
                    "half_space" => Region::HalfSpace {
                        normal: {
                            let mut v = vec![0.0; kc.dim];
                            v[0] = 1.0;
                            v
                        },
                        offset: 0.0,
                    },
                    other => {
                        return Err(Error::invalid(
                            "kernel.region",
                            format!("unknown region `{other}`"),
                        ))
                    }
                };
                levy_mix_kernel(a, b, region, kc.min_jump.unwrap_or(1.0), kc.dim)?
            }
            "expression" => {
                let src = kc.expression.as_ref().ok_or_else(|| {
                    Error::invalid("kernel.expression", "required for family = expression")
                })?;
                expr_kernel(src, kc.dim, kc.symmetric.unwrap_or(false))?
            }
            other => {
                return Err(Error::invalid(
                    "kernel.family",
                    format!("unknown family `{other}`"),
                ))
            }
        };
        Ok(Some(k))
    }

    pub fn build_field(&self) -> Result<Option<LevyMeasureField>> {
        let Some(fc) = &self.field else {
            return Ok(None);
        };
        if fc.dim == 0 || fc.dim > 3 {
            return Err(Error::invalid("field.dim", "supported dimensions are 1..=3"));
        }
        let f = match fc.family.as_str() {
            "cauchy" => {
                if fc.dim != 1 {
                    return Err(Error::invalid("field.dim", "cauchy field is d = 1"));
                }
                cauchy_field()
            }
            "sde" => {
                if fc.dim != 1 {
                    return Err(Error::invalid("field.dim", "sde field is d = 1"));
                }
                let src = fc
                    .phi_expr
                    .as_ref()
                    .ok_or_else(|| Error::invalid("field.phi_expr", "required for family = sde"))?;
                let expr = Expression::parse(src, 1)?;
                sde_field(
                    Arc::new(move |x: &[f64]| expr.eval(x, &[0.0])),
                    Arc::new(|y: &[f64]| 1.0 / (std::f64::consts::PI * y[0] * y[0])),
                    Some(Arc::new(|r: f64| 2.0 / (std::f64::consts::PI * r))),
                    1,
                )?
            }
            "expression" => {
                let src = fc.expression.as_ref().ok_or_else(|| {
                    Error::invalid("field.expression", "required for family = expression")
                })?;
                expr_field(src, fc.dim, fc.symmetric.unwrap_or(false))?
                    .with_drift(Arc::new({
                        let dim = fc.dim;
                        move |_: &[f64]| vec![0.0; dim]
                    }))
            }
            other => {
                return Err(Error::invalid(
                    "field.family",
                    format!("unknown family `{other}`"),
                ))
            }
        };
        Ok(Some(f))
    }

    pub fn truncation_function(&self) -> TruncationFunction {
        let bound = self.truncation.bound;
        let rho = self.truncation.identity_radius;
        if (bound - 1.0).abs() < 1e-15 && (rho - 1.0).abs() < 1e-15 {
            return TruncationFunction::standard();
        }
        TruncationFunction::new(
            bound,
            rho.min(bound),
            true,
            Arc::new(move |x: &[f64]| {
                let r = crate::geom::norm(x);
                if r <= rho.min(bound) {
                    x.to_vec()
                } else {
                    x.iter().map(|v| v * bound / r.max(bound)).collect()
                }
            }),
        )
    }

    pub fn simulation_config(&self) -> SimulationConfig {
        SimulationConfig {
            horizon: self.simulation.horizon,
            n_paths: self.simulation.n_paths,
            seed: self.simulation.seed,
            initial: InitialDistribution::Point(self.simulation.x0.clone()),
            marginal_times: self.simulation.marginal_times.clone(),
        }
    }

    /// Probe grid for kernel/field checks: uniform over the cube of the
    /// configured probe radius.
    pub fn probe_grid(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let m = self.conditions.probes_per_axis.max(1);
        let r = self.conditions.probe_radius;
        let mut out = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            let p: Vec<f64> = idx
                .iter()
                .map(|i| {
                    if m == 1 {
                        0.0
                    } else {
                        -r + 2.0 * r * *i as f64 / (m - 1) as f64
                    }
                })
                .collect();
            if crate::geom::norm(&p) <= r + 1e-12 {
                out.push(p);
            }
            let mut axis = 0;
            loop {
                if axis == d {
                    return out;
                }
                idx[axis] += 1;
                if idx[axis] < m {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
            if idx.iter().all(|i| *i == 0) {
                return out;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_config_validates() {
        RunConfig::example().validate().unwrap();
    }

    #[test]
    fn missing_backend_is_rejected() {
        let cfg = RunConfig {
            version: 1,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bad_p_is_rejected_with_field_name() {
        let mut cfg = RunConfig::example();
        cfg.scheme.p = 1.5;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains('p'), "{err}");
    }

    #[test]
    fn probe_grid_is_bounded() {
        let cfg = RunConfig::example();
        for p in cfg.probe_grid() {
            assert!(crate::geom::norm(&p) <= cfg.conditions.probe_radius + 1e-9);
        }
    }
}
