//! Exact event-by-event simulation of the chain attached to a conductance
//! matrix, plus pathwise evaluation of its modified characteristics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::discretize::ConductanceMatrix;
use crate::error::{Error, Result};
use crate::geom;
use crate::kernel::TruncationFunction;
use crate::lattice::round_coords;

/// Starting law of the ensemble.
#[derive(Clone)]
pub enum InitialDistribution {
    /// Point mass at the lattice point owning x0's cell.
    Point(Vec<f64>),
    /// Probabilities proportional to the density's cell averages.
    Density(std::sync::Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

#[derive(Clone)]
pub struct SimulationConfig {
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub initial: InitialDistribution,
    /// Times at which ensemble marginals are recorded.
    pub marginal_times: Vec<f64>,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::invalid("horizon", "must be > 0"));
        }
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths", "must be >= 1"));
        }
        Ok(())
    }
}

/// One trajectory on [0, horizon].
#[derive(Debug, Clone)]
pub struct PathSample {
    pub initial_state: u32,
    /// Strictly increasing jump times.
    pub jump_times: Vec<f64>,
    /// State after each jump.
    pub states: Vec<u32>,
    pub absorbed: bool,
    pub absorbed_at: Option<f64>,
}

impl PathSample {
    /// State occupied at time t, None when the path has already left the
    /// window.
    pub fn state_at(&self, t: f64) -> Option<u32> {
        if let Some(ta) = self.absorbed_at {
            if t >= ta {
                return None;
            }
        }
        let mut cur = self.initial_state;
        for (tau, s) in self.jump_times.iter().zip(&self.states) {
            if *tau > t {
                break;
            }
            cur = *s;
        }
        Some(cur)
    }

    pub fn num_jumps(&self) -> usize {
        self.states.len()
    }
}

fn initial_weights(c: &ConductanceMatrix, init: &InitialDistribution) -> Result<Vec<f64>> {
    match init {
        InitialDistribution::Point(x0) => {
            let coords = round_coords(x0, c.lattice.n);
            let idx = c
                .lattice
                .find_coords(&coords)
                .ok_or_else(|| Error::invalid("x0", "rounded point falls outside the window"))?;
            let mut w = vec![0.0; c.num_states()];
            w[idx as usize] = 1.0;
            Ok(w)
        }
        InitialDistribution::Density(f) => {
            let w: Vec<f64> = (0..c.num_states() as u32)
                .map(|a| f(&c.lattice.state_point(a)).max(0.0))
                .collect();
            let total: f64 = w.iter().sum();
            if !(total > 0.0) {
                return Err(Error::invalid("initial", "density vanishes on the window"));
            }
            Ok(w.into_iter().map(|v| v / total).collect())
        }
    }
}

fn sample_index(weights: &[f64], u: f64) -> u32 {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let target = u * total;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i as u32;
        }
    }
    weights.len() as u32 - 1
}

fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    // One independent counter-based stream per path: identical results for
    // any thread schedule.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

fn simulate_with_weights(
    c: &ConductanceMatrix,
    cfg: &SimulationConfig,
    weights: &[f64],
    path_index: u64,
) -> PathSample {
    let mut rng = path_rng(cfg.seed, path_index);
    let initial_state = sample_index(weights, rng.gen::<f64>());
    let mut t = 0.0;
    let mut state = initial_state;
    let mut jump_times = Vec::new();
    let mut states = Vec::new();
    let mut absorbed = false;
    let mut absorbed_at = None;
    loop {
        let (kept, lost) = c.total_rate(state);
        let rate = kept + lost;
        if rate <= 0.0 {
            break; // the chain sits here forever
        }
        let u: f64 = rng.gen();
        t += -(1.0 - u).ln() / rate;
        if t > cfg.horizon {
            break;
        }
        let v: f64 = rng.gen::<f64>() * rate;
        if v >= kept {
            absorbed = true;
            absorbed_at = Some(t);
            break;
        }
        let (targets, values) = c.row(state);
        let mut acc = 0.0;
        let mut next = *targets.last().expect("kept > 0 implies nonempty row");
        for (b, w) in targets.iter().zip(values) {
            acc += w;
            if v < acc {
                next = *b;
                break;
            }
        }
        jump_times.push(t);
        states.push(next);
        state = next;
    }
    PathSample {
        initial_state,
        jump_times,
        states,
        absorbed,
        absorbed_at,
    }
}

/// Simulates one path; deterministic in (seed, path_index).
pub fn simulate_path(
    c: &ConductanceMatrix,
    cfg: &SimulationConfig,
    path_index: u64,
) -> Result<PathSample> {
    cfg.validate()?;
    let weights = initial_weights(c, &cfg.initial)?;
    Ok(simulate_with_weights(c, cfg, &weights, path_index))
}

/// Empirical marginal at one recording time.
#[derive(Debug, Clone)]
pub struct MarginalSample {
    pub time: f64,
    /// Points of the paths still in the window at this time.
    pub points: Vec<Vec<f64>>,
    pub absorbed: usize,
}

#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub marginals: Vec<MarginalSample>,
    pub jump_counts: Vec<u32>,
    pub absorbed_fraction: f64,
    pub mean_jumps: f64,
}

/// Simulates the whole ensemble over independent RNG streams.
pub fn simulate_ensemble(c: &ConductanceMatrix, cfg: &SimulationConfig) -> Result<EnsembleSummary> {
    cfg.validate()?;
    let weights = initial_weights(c, &cfg.initial)?;
    let paths: Vec<PathSample> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_with_weights(c, cfg, &weights, i))
        .collect();
    let mut marginals = Vec::with_capacity(cfg.marginal_times.len());
    for &t in &cfg.marginal_times {
        let mut points = Vec::new();
        let mut absorbed = 0;
        for p in &paths {
            match p.state_at(t) {
                Some(s) => points.push(c.lattice.state_point(s)),
                None => absorbed += 1,
            }
        }
        marginals.push(MarginalSample {
            time: t,
            points,
            absorbed,
        });
    }
    let jump_counts: Vec<u32> = paths.iter().map(|p| p.num_jumps() as u32).collect();
    let absorbed_fraction =
        paths.iter().filter(|p| p.absorbed).count() as f64 / cfg.n_paths as f64;
    let mean_jumps = jump_counts.iter().map(|c| *c as f64).sum::<f64>() / cfg.n_paths as f64;
    Ok(EnsembleSummary {
        marginals,
        jump_counts,
        absorbed_fraction,
        mean_jumps,
    })
}

/// Time-integrated modified characteristics along one path.
#[derive(Debug, Clone)]
pub struct CharacteristicsTrace {
    pub times: Vec<f64>,
    /// Drift-type integral per coordinate, one row per time.
    pub b_values: Vec<Vec<f64>>,
    /// Truncated second-moment integral, row-major d x d per time.
    pub a_values: Vec<Vec<f64>>,
    /// Jump counts above each magnitude threshold, per time.
    pub counts: Vec<Vec<u32>>,
    pub r_grid: Vec<f64>,
}

/// The integrands are constant between jumps, so every integral is an exact
/// finite sum of segment length times a row functional.
pub fn characteristics_along_path(
    path: &PathSample,
    c: &ConductanceMatrix,
    h: &TruncationFunction,
    time_grid: &[f64],
    r_grid: &[f64],
) -> Result<CharacteristicsTrace> {
    let d = c.lattice.dim;
    // Merge requested times with jump times so kinks are retained exactly.
    let mut times: Vec<f64> = time_grid.to_vec();
    times.extend(path.jump_times.iter().copied());
    times.push(0.0);
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    // Row functionals of each visited state, computed once.
    let mut visited: Vec<u32> = vec![path.initial_state];
    visited.extend(path.states.iter().copied());
    let functionals: Vec<(Vec<f64>, Vec<f64>)> = visited
        .iter()
        .map(|a| row_functionals(c, h, *a, d))
        .collect();
    for a in &visited {
        if *a as usize >= c.num_states() {
            return Err(Error::invalid("path", "state outside window"));
        }
    }
    let mut b_acc = vec![0.0; d];
    let mut a_acc = vec![0.0; d * d];
    let mut seg = 0usize; // index into visited
    let mut t_prev = 0.0;
    let mut b_values = Vec::with_capacity(times.len());
    let mut a_values = Vec::with_capacity(times.len());
    let mut counts = Vec::with_capacity(times.len());
    for &t in &times {
        // Advance through jumps occurring in (t_prev, t].
        loop {
            let next_jump = path.jump_times.get(seg).copied();
            let cut = match next_jump {
                Some(tau) if tau <= t => tau,
                _ => t,
            };
            let dt = cut - t_prev;
            if dt > 0.0 {
                let (bf, af) = &functionals[seg];
                for i in 0..d {
                    b_acc[i] += dt * bf[i];
                }
                for i in 0..d * d {
                    a_acc[i] += dt * af[i];
                }
                t_prev = cut;
            }
            match next_jump {
                Some(tau) if tau <= t => seg += 1,
                _ => break,
            }
        }
        t_prev = t;
        b_values.push(b_acc.clone());
        a_values.push(a_acc.clone());
        let cnt: Vec<u32> = r_grid
            .iter()
            .map(|r| {
                count_jumps_above(path, c, *r, t)
            })
            .collect();
        counts.push(cnt);
    }
    Ok(CharacteristicsTrace {
        times,
        b_values,
        a_values,
        counts,
        r_grid: r_grid.to_vec(),
    })
}

fn row_functionals(
    c: &ConductanceMatrix,
    h: &TruncationFunction,
    a: u32,
    d: usize,
) -> (Vec<f64>, Vec<f64>) {
    let pa = c.lattice.state_point(a);
    let (targets, values) = c.row(a);
    let mut bf = vec![0.0; d];
    let mut af = vec![0.0; d * d];
    for (b, v) in targets.iter().zip(values) {
        let pb = c.lattice.state_point(*b);
        let jump = geom::sub(&pb, &pa);
        let hv = h.apply(&jump);
        for i in 0..d {
            bf[i] += hv[i] * v;
            for k in 0..d {
                af[i * d + k] += hv[i] * hv[k] * v;
            }
        }
    }
    (bf, af)
}

fn count_jumps_above(path: &PathSample, c: &ConductanceMatrix, r: f64, t: f64) -> u32 {
    let mut prev = path.initial_state;
    let mut count = 0;
    for (tau, s) in path.jump_times.iter().zip(&path.states) {
        if *tau > t {
            break;
        }
        let d = geom::dist(
            &c.lattice.state_point(prev),
            &c.lattice.state_point(*s),
        );
        if d > r {
            count += 1;
        }
        prev = *s;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::Scheme;
    use crate::lattice::Lattice;
    use approx::assert_relative_eq;

    fn point_cfg(x0: f64, horizon: f64, n_paths: usize, seed: u64) -> SimulationConfig {
        SimulationConfig {
            horizon,
            n_paths,
            seed,
            initial: InitialDistribution::Point(vec![x0]),
            marginal_times: vec![horizon],
        }
    }

    #[test]
    fn holding_times_have_exponential_mean() {
        let lat = Lattice::new(1, 1, 1.0).unwrap();
        let lambda = 2.5;
        let c = ConductanceMatrix::from_entries(
            lat,
            Scheme::DirichletAverage { p: 1.0 },
            &[(1, 2, lambda)],
        )
        .unwrap();
        let cfg = point_cfg(0.0, 1e6, 10_000, 42);
        let mut sum = 0.0;
        let mut count = 0;
        for i in 0..cfg.n_paths as u64 {
            let p = simulate_path(&c, &cfg, i).unwrap();
            if let Some(tau) = p.jump_times.first() {
                sum += tau;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        let se = 1.0 / lambda / (count as f64).sqrt();
        assert!(
            (mean - 1.0 / lambda).abs() < 3.0 * se,
            "mean {mean} vs {}",
            1.0 / lambda
        );
    }

    #[test]
    fn two_state_ring_occupation() {
        let lat = Lattice::new(1, 1, 1.0).unwrap();
        let (lambda, mu) = (1.0, 3.0);
        let c = ConductanceMatrix::from_entries(
            lat,
            Scheme::DirichletAverage { p: 1.0 },
            &[(0, 1, lambda), (1, 0, mu)],
        )
        .unwrap();
        let cfg = point_cfg(-1.0, 5000.0, 1, 9);
        let p = simulate_path(&c, &cfg, 0).unwrap();
        // Fraction of time spent in the starting state over a long horizon.
        let mut in_start = 0.0;
        let mut t_prev = 0.0;
        let mut state = p.initial_state;
        for (tau, s) in p.jump_times.iter().zip(&p.states) {
            if state == 0 {
                in_start += tau - t_prev;
            }
            t_prev = *tau;
            state = *s;
        }
        if state == 0 {
            in_start += cfg.horizon - t_prev;
        }
        let frac = in_start / cfg.horizon;
        assert!(
            (frac - mu / (lambda + mu)).abs() < 0.02,
            "fraction {frac}"
        );
    }

    #[test]
    fn reproducible_per_seed() {
        let lat = Lattice::new(1, 1, 2.0).unwrap();
        let c = ConductanceMatrix::from_entries(
            lat,
            Scheme::DirichletAverage { p: 1.0 },
            &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.5), (3, 0, 0.5), (1, 0, 0.25)],
        )
        .unwrap();
        let cfg = point_cfg(-2.0, 10.0, 64, 1234);
        let e1 = simulate_ensemble(&c, &cfg).unwrap();
        let e2 = simulate_ensemble(&c, &cfg).unwrap();
        assert_eq!(e1.jump_counts, e2.jump_counts);
        assert_eq!(e1.marginals[0].points, e2.marginals[0].points);
    }

    #[test]
    fn zero_rate_state_sits_forever() {
        let lat = Lattice::new(1, 1, 1.0).unwrap();
        let c = ConductanceMatrix::from_entries(
            lat,
            Scheme::DirichletAverage { p: 1.0 },
            &[(0, 1, 1.0)],
        )
        .unwrap();
        let cfg = point_cfg(1.0, 50.0, 1, 5);
        let p = simulate_path(&c, &cfg, 0).unwrap();
        assert!(p.jump_times.is_empty());
        assert!(!p.absorbed);
        assert_eq!(p.state_at(49.0), Some(p.initial_state));
    }

    #[test]
    fn characteristics_of_constant_segment() {
        let lat = Lattice::new(1, 1, 2.0).unwrap();
        let c = ConductanceMatrix::from_entries(
            lat,
            Scheme::DirichletAverage { p: 1.0 },
            &[(2, 4, 0.75)],
        )
        .unwrap();
        let path = PathSample {
            initial_state: 2,
            jump_times: vec![],
            states: vec![],
            absorbed: false,
            absorbed_at: None,
        };
        let h = TruncationFunction::standard();
        let trace =
            characteristics_along_path(&path, &c, &h, &[1.0, 2.0], &[0.5, 3.0]).unwrap();
        // Jump vector is +2 from state index 2 to 4 (points -2 + idx here):
        // h(2) = 1, rate 0.75.
        let last = trace.b_values.last().unwrap();
        assert_relative_eq!(last[0], 2.0 * 0.75 * 1.0, max_relative = 1e-12);
        let a_last = trace.a_values.last().unwrap();
        assert_relative_eq!(a_last[0], 2.0 * 0.75 * 1.0, max_relative = 1e-12);
    }

    #[test]
    fn characteristics_split_additivity() {
        let lat = Lattice::new(1, 1, 2.0).unwrap();
        let c = ConductanceMatrix::from_entries(
            lat,
            Scheme::DirichletAverage { p: 1.0 },
            &[(0, 1, 2.0), (1, 2, 1.0), (2, 3, 0.5), (3, 4, 0.25), (4, 0, 1.0)],
        )
        .unwrap();
        let cfg = point_cfg(-2.0, 4.0, 1, 77);
        let p = simulate_path(&c, &cfg, 0).unwrap();
        let h = TruncationFunction::standard();
        let both = characteristics_along_path(&p, &c, &h, &[1.7, 4.0], &[0.1]).unwrap();
        let first = characteristics_along_path(&p, &c, &h, &[1.7], &[0.1]).unwrap();
        let i_mid = both.times.iter().position(|t| *t == 1.7).unwrap();
        let j_mid = first.times.iter().position(|t| *t == 1.7).unwrap();
        // The trace up to a non-jump split time is independent of the later
        // grid points.
        assert_relative_eq!(
            first.b_values[j_mid][0],
            both.b_values[i_mid][0],
            max_relative = 1e-12,
            epsilon = 1e-15
        );
        assert_eq!(first.counts[j_mid], both.counts[i_mid]);
    }
}
