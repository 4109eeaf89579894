//! Statistical comparisons between simulated ensembles and analytic limit
//! laws: empirical characteristic functions, Kolmogorov-Smirnov distances,
//! and goodness-of-fit helpers.

use num_complex::Complex64;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// 99% two-sided normal quantile.
pub const Z99: f64 = 2.5758293035489004;

/// Empirical characteristic function on a frequency grid.
#[derive(Debug, Clone)]
pub struct CFReport {
    pub xi_grid: Vec<Vec<f64>>,
    pub empirical: Vec<Complex64>,
    /// 99% confidence half-width of the complex estimate per frequency.
    pub ci_half_width: Vec<f64>,
    pub target: Option<Vec<Complex64>>,
    pub sup_discrepancy: Option<f64>,
}

impl CFReport {
    /// Attaches target values and the sup discrepancy over the grid.
    pub fn with_target(mut self, target: Vec<Complex64>) -> Self {
        let sup = self
            .empirical
            .iter()
            .zip(&target)
            .map(|(e, t)| (e - t).norm())
            .fold(0.0, f64::max);
        self.target = Some(target);
        self.sup_discrepancy = Some(sup);
        self
    }

    /// True when every discrepancy lies inside its confidence band.
    pub fn within_ci(&self) -> Option<bool> {
        let target = self.target.as_ref()?;
        Some(
            self.empirical
                .iter()
                .zip(target)
                .zip(&self.ci_half_width)
                .all(|((e, t), hw)| (e - t).norm() <= *hw),
        )
    }
}

pub fn empirical_cf(samples: &[Vec<f64>], xi_grid: &[Vec<f64>]) -> Result<CFReport> {
    empirical_cf_censored(samples, 0, xi_grid)
}

/// Empirical CF where `censored` additional trials contribute zero: paths
/// absorbed at the window edge are far from the origin, so their phases
/// average out and dropping them from the numerator (but not the trial
/// count) keeps the estimator consistent with a sub-stochastic law.
pub fn empirical_cf_censored(
    samples: &[Vec<f64>],
    censored: usize,
    xi_grid: &[Vec<f64>],
) -> Result<CFReport> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "must be nonempty"));
    }
    let n = (samples.len() + censored) as f64;
    let mut empirical = Vec::with_capacity(xi_grid.len());
    let mut ci = Vec::with_capacity(xi_grid.len());
    for xi in xi_grid {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut sum_sq_re = 0.0;
        let mut sum_sq_im = 0.0;
        for x in samples {
            let phase: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
            let z = Complex64::new(phase.cos(), phase.sin());
            sum += z;
            sum_sq_re += z.re * z.re;
            sum_sq_im += z.im * z.im;
        }
        let mean = sum / n;
        let var_re = (sum_sq_re / n - mean.re * mean.re).max(0.0);
        let var_im = (sum_sq_im / n - mean.im * mean.im).max(0.0);
        empirical.push(mean);
        ci.push(Z99 * ((var_re + var_im) / n).sqrt());
    }
    Ok(CFReport {
        xi_grid: xi_grid.to_vec(),
        empirical,
        ci_half_width: ci,
        target: None,
        sup_discrepancy: None,
    })
}

pub fn cauchy_cdf(x: f64, location: f64, scale: f64) -> f64 {
    0.5 + ((x - location) / scale).atan() / std::f64::consts::PI
}

/// Two-sided KS statistic of a sample against a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: &dyn Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("sample", "must be nonempty"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        let upper = (i as f64 + 1.0) / n - f;
        let lower = f - i as f64 / n;
        d = d.max(upper).max(lower);
    }
    Ok(d)
}

/// Asymptotic p-value of the KS statistic (Kolmogorov distribution with the
/// standard finite-sample correction).
pub fn ks_p_value(statistic: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * statistic;
    if lambda < 1e-6 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..101 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
    }
    p.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_samples: usize,
}

/// KS distance of a one-dimensional marginal sample to the Cauchy law with
/// the given scale and location.
pub fn ks_against_cauchy(sample: &[f64], t: f64, location: f64) -> Result<KsResult> {
    let stat = ks_statistic(sample, &|x| cauchy_cdf(x, location, t))?;
    Ok(KsResult {
        statistic: stat,
        p_value: ks_p_value(stat, sample.len()),
        n_samples: sample.len(),
    })
}

/// Two-sample KS distance, used for self-consistency sweeps when no closed
/// reference law exists.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("sample", "must be nonempty"));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let (xa, xb) = (sa[i], sb[j]);
        if xa <= xb {
            i += 1;
        }
        if xb <= xa {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Pearson chi-square goodness-of-fit p-value for observed category counts
/// against expected probabilities; categories with tiny expectation are
/// pooled into their neighbor.
pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64]) -> Result<f64> {
    if observed.len() != expected_probs.len() || observed.is_empty() {
        return Err(Error::invalid("observed", "length mismatch or empty"));
    }
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    // Pool sparse categories (expected < 5) from the right.
    let mut obs: Vec<f64> = observed.iter().map(|c| *c as f64).collect();
    let mut exp: Vec<f64> = expected_probs.iter().map(|p| p * n).collect();
    loop {
        if exp.len() <= 2 {
            break;
        }
        if let Some(pos) = exp.iter().position(|e| *e < 5.0) {
            let merge_into = if pos + 1 < exp.len() { pos + 1 } else { pos - 1 };
            let (o, e) = (obs.remove(pos), exp.remove(pos));
            let target = if merge_into > pos { merge_into - 1 } else { merge_into };
            obs[target] += o;
            exp[target] += e;
        } else {
            break;
        }
    }
    let dof = exp.len().saturating_sub(1).max(1) as f64;
    let stat: f64 = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| if *e > 0.0 { (o - e) * (o - e) / e } else { 0.0 })
        .sum();
    let dist = ChiSquared::new(dof).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(1.0 - dist.cdf(stat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cf_of_degenerate_sample() {
        let samples = vec![vec![0.0]; 100];
        let rep = empirical_cf(&samples, &[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        for e in &rep.empirical {
            assert_relative_eq!(e.re, 1.0);
            assert!(e.im.abs() < 1e-15);
        }
    }

    #[test]
    fn cf_of_two_point_sample() {
        let mut samples: Vec<Vec<f64>> = Vec::new();
        for _ in 0..50 {
            samples.push(vec![-1.0]);
            samples.push(vec![1.0]);
        }
        let rep = empirical_cf(&samples, &[vec![0.7]]).unwrap();
        assert_relative_eq!(rep.empirical[0].re, 0.7f64.cos(), max_relative = 1e-12);
        assert!(rep.empirical[0].im.abs() < 1e-14);
    }

    #[test]
    fn cf_of_cauchy_draws_matches_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let samples: Vec<Vec<f64>> = (0..10_000)
            .map(|_| {
                let u: f64 = rng.gen_range(-0.5..0.5);
                vec![(std::f64::consts::PI * u).tan()]
            })
            .collect();
        let rep = empirical_cf(&samples, &[vec![1.0]])
            .unwrap()
            .with_target(vec![num_complex::Complex64::new((-1.0f64).exp(), 0.0)]);
        assert_eq!(rep.within_ci(), Some(true));
    }

    #[test]
    fn ks_of_degenerate_sample() {
        let r = ks_against_cauchy(&[0.0; 32], 1.0, 0.0).unwrap();
        assert_relative_eq!(r.statistic, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn ks_null_p_values_are_roughly_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let reps = 200;
        let mut below_half = 0;
        let mut below_tenth = 0;
        for _ in 0..reps {
            let sample: Vec<f64> = (0..200)
                .map(|_| {
                    let u: f64 = rng.gen_range(-0.5..0.5);
                    (std::f64::consts::PI * u).tan()
                })
                .collect();
            let r = ks_against_cauchy(&sample, 1.0, 0.0).unwrap();
            if r.p_value < 0.5 {
                below_half += 1;
            }
            if r.p_value < 0.1 {
                below_tenth += 1;
            }
        }
        let f_half = below_half as f64 / reps as f64;
        let f_tenth = below_tenth as f64 / reps as f64;
        assert!((f_half - 0.5).abs() < 0.1, "P(p<0.5) = {f_half}");
        assert!((f_tenth - 0.1).abs() < 0.07, "P(p<0.1) = {f_tenth}");
    }

    #[test]
    fn chi_square_detects_misfit() {
        // Fair three-sided die observed uniformly.
        let p = chi_square_gof(&[333, 333, 334], &[1.0 / 3.0; 3]).unwrap();
        assert!(p > 0.9);
        let bad = chi_square_gof(&[600, 200, 200], &[1.0 / 3.0; 3]).unwrap();
        assert!(bad < 1e-6);
    }
}
