//! Numeric evaluation of the hypothesis families behind the convergence
//! theorems, at fixed n, reported as named values with optional thresholds.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::discretize::ConductanceMatrix;
use crate::error::{Error, Result};
use crate::forms::alpha0_n;
use crate::geom;
use crate::kernel::{JumpKernel, LevyMeasureField, TruncationFunction};
use crate::lattice::round_coords;
use crate::quad::{annulus_integral, QuadratureSpec};

/// One named numeric estimate with the parameters that produced it.
#[derive(Debug, Clone)]
pub struct ConditionValue {
    pub label: String,
    pub params: Vec<(String, f64)>,
    pub value: f64,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
}

/// Collection of estimates for one condition family.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub id: String,
    pub values: Vec<ConditionValue>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn new(id: &str) -> Self {
        ConditionReport {
            id: id.to_string(),
            values: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, label: &str, params: &[(&str, f64)], value: f64) {
        self.values.push(ConditionValue {
            label: label.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
            threshold: None,
            pass: None,
        });
    }

    pub fn push_checked(
        &mut self,
        label: &str,
        params: &[(&str, f64)],
        value: f64,
        threshold: f64,
    ) {
        self.values.push(ConditionValue {
            label: label.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
            threshold: Some(threshold),
            pass: Some(value <= threshold),
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Largest value among entries whose label starts with the prefix.
    pub fn max_labeled(&self, prefix: &str) -> Option<f64> {
        self.values
            .iter()
            .filter(|v| v.label.starts_with(prefix))
            .map(|v| v.value)
            .fold(None, |m, v| Some(m.map_or(v, |mm: f64| mm.max(v))))
    }

    pub fn value_labeled(&self, label: &str) -> Option<&ConditionValue> {
        self.values.iter().find(|v| v.label == label)
    }

    pub fn all_pass(&self) -> bool {
        self.values.iter().all(|v| v.pass != Some(false))
    }

    pub fn to_csv(&self, w: &mut dyn Write) -> Result<()> {
        writeln!(w, "id,label,params,value,threshold,pass")?;
        for v in &self.values {
            let params: Vec<String> =
                v.params.iter().map(|(k, x)| format!("{k}={x}")).collect();
            let thr = v.threshold.map_or(String::new(), |t| format!("{t}"));
            let pass = v.pass.map_or(String::new(), |p| p.to_string());
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.id,
                v.label,
                params.join(";"),
                v.value,
                thr,
                pass
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}]", self.id)?;
        for v in &self.values {
            let params: Vec<String> =
                v.params.iter().map(|(k, x)| format!("{k}={x}")).collect();
            write!(f, "  {} ({}) = {:.6e}", v.label, params.join(", "), v.value)?;
            if let Some(t) = v.threshold {
                write!(
                    f,
                    "  [{} threshold {:.3e}]",
                    if v.pass == Some(true) { "pass" } else { "FAIL" },
                    t
                )?;
            }
            writeln!(f)?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

/// Trend verdicts over an n sweep; estimates only, never proofs.
#[derive(Debug, Clone)]
pub struct TrendReport {
    pub ns: Vec<u32>,
    pub values: Vec<f64>,
    /// Bounded by max(first value, cap).
    pub bounded: bool,
    /// Strictly decreasing with ratio <= 0.9 between successive n.
    pub vanishing: bool,
}

pub fn assess_trend(ns: &[u32], values: &[f64], cap: f64) -> TrendReport {
    let bound = values.first().copied().unwrap_or(0.0).max(cap);
    let bounded = values.iter().all(|v| *v <= bound * (1.0 + 1e-9));
    let vanishing = values.windows(2).all(|w| w[1] <= 0.9 * w[0]) && values.len() >= 2;
    TrendReport {
        ns: ns.to_vec(),
        values: values.to_vec(),
        bounded,
        vanishing,
    }
}

/// Row-sum functionals of the matrix: large-jump tails and truncated moments.
pub fn check_t3_to_t6(
    c: &ConductanceMatrix,
    rho: f64,
    r_grid: &[f64],
) -> Result<ConditionReport> {
    if !(rho > 0.0) {
        return Err(Error::invalid("rho", "must be > 0"));
    }
    let lattice = &c.lattice;
    let max_reach = 2.0 * lattice.window_radius;
    for r in r_grid {
        if *r >= max_reach {
            return Err(Error::invalid("r_grid", "window too small for requested r"));
        }
    }
    let d = lattice.dim;
    struct RowAcc {
        tail_rho: f64,
        tails: Vec<f64>,
        first: Vec<f64>,
        second: Vec<f64>,
    }
    let per_row: Vec<RowAcc> = (0..c.num_states() as u32)
        .into_par_iter()
        .map(|a| {
            let pa = lattice.state_point(a);
            let (targets, values) = c.row(a);
            let mut acc = RowAcc {
                tail_rho: 0.0,
                tails: vec![0.0; r_grid.len()],
                first: vec![0.0; d],
                second: vec![0.0; d * d],
            };
            for (bt, v) in targets.iter().zip(values) {
                let jump = geom::sub(&lattice.state_point(*bt), &pa);
                let len = geom::norm(&jump);
                if len > rho {
                    acc.tail_rho += v;
                } else {
                    for i in 0..d {
                        acc.first[i] += jump[i] * v;
                        for k in 0..d {
                            acc.second[i * d + k] += jump[i] * jump[k] * v;
                        }
                    }
                }
                for (j, r) in r_grid.iter().enumerate() {
                    if len > *r {
                        acc.tails[j] += v;
                    }
                }
            }
            acc
        })
        .collect();
    let mut report = ConditionReport::new("T3-T6");
    let sup_tail = per_row.iter().map(|r| r.tail_rho).fold(0.0, f64::max);
    report.push("T3.tail", &[("rho", rho)], sup_tail);
    for (j, r) in r_grid.iter().enumerate() {
        let v = per_row.iter().map(|row| row.tails[j]).fold(0.0, f64::max);
        report.push("T4.tail", &[("r", *r)], v);
    }
    for i in 0..d {
        let v = per_row
            .iter()
            .map(|row| row.first[i].abs())
            .fold(0.0, f64::max);
        report.push("T5.first_moment", &[("rho", rho), ("i", i as f64 + 1.0)], v);
    }
    for i in 0..d {
        for k in 0..d {
            let v = per_row
                .iter()
                .map(|row| row.second[i * d + k].abs())
                .fold(0.0, f64::max);
            report.push(
                "T6.second_moment",
                &[("rho", rho), ("i", i as f64 + 1.0), ("k", k as f64 + 1.0)],
                v,
            );
        }
    }
    Ok(report)
}

fn note_eps_growth(report: &mut ConditionReport, label: &str, eps_grid: &[f64], values: &[f64]) {
    // eps_grid is expected decreasing; growth by more than 1.5x per step all
    // the way down signals a divergent truncated moment.
    if values.len() >= 3 && values.windows(2).all(|w| w[1] > 1.5 * w[0]) {
        report.note(format!(
            "{label}: value grows as eps decreases ({} -> {}); possible divergence",
            eps_grid.first().unwrap(),
            eps_grid.last().unwrap()
        ));
    }
}

/// Kernel-level tail and truncated-moment integrals.
pub fn check_dirichlet_route(
    k: &JumpKernel,
    rho_grid: &[f64],
    r_grid: &[f64],
    eps_grid: &[f64],
    probes: &[Vec<f64>],
    spec: &QuadratureSpec,
) -> Result<ConditionReport> {
    if probes.is_empty() {
        return Err(Error::invalid("probe_grid", "must be nonempty"));
    }
    let mut report = ConditionReport::new("dirichlet-route");
    for rho in rho_grid {
        let sup = probes
            .par_iter()
            .map(|x| k.tail_mass(x, *rho, spec))
            .reduce(|| 0.0, f64::max);
        report.push("T1.D.tail", &[("rho", *rho)], sup);
    }
    for r in r_grid {
        let sup = probes
            .par_iter()
            .map(|x| k.tail_mass(x, *r, spec))
            .reduce(|| 0.0, f64::max);
        report.push("T3.D.tail", &[("r", *r)], sup);
    }
    let dim = k.dim;
    for rho in rho_grid {
        for i in 0..dim {
            let mut vals = Vec::with_capacity(eps_grid.len());
            for eps in eps_grid {
                let sup = probes
                    .par_iter()
                    .map(|x| {
                        let mut g = |z: &[f64]| z[i] * k.eval(x, &geom::add(x, z));
                        annulus_integral(dim, *eps, *rho, spec, &mut g).value.abs()
                    })
                    .reduce(|| 0.0, f64::max);
                report.push(
                    "T4.D.1.first_moment",
                    &[("rho", *rho), ("eps", *eps), ("i", i as f64 + 1.0)],
                    sup,
                );
                vals.push(sup);
            }
            note_eps_growth(&mut report, "T4.D.1", eps_grid, &vals);
        }
        let mut vals = Vec::with_capacity(eps_grid.len());
        for eps in eps_grid {
            let sup = probes
                .par_iter()
                .map(|x| {
                    let mut g = |z: &[f64]| {
                        let r2: f64 = z.iter().map(|v| v * v).sum();
                        r2 * k.eval(x, &geom::add(x, z))
                    };
                    annulus_integral(dim, *eps, *rho, spec, &mut g).value
                })
                .reduce(|| 0.0, f64::max);
            report.push(
                "T5.D.1.second_moment",
                &[("rho", *rho), ("eps", *eps)],
                sup,
            );
            vals.push(sup);
        }
        note_eps_growth(&mut report, "T5.D.1", eps_grid, &vals);
    }
    Ok(report)
}

fn ks_at(k: &JumpKernel, x: &[f64], z: &[f64]) -> f64 {
    let y = geom::add(x, z);
    0.5 * (k.eval(x, &y) + k.eval(&y, x))
}

/// Asymmetry constant of the matrix, the small/large-jump integrability of
/// the symmetric kernel part, and its discrete counterpart with the
/// theoretical cross-bound.
pub fn check_c2_c3_c4(
    k: &JumpKernel,
    c: &ConductanceMatrix,
    rho_grid: &[f64],
    probes: &[Vec<f64>],
    spec: &QuadratureSpec,
) -> Result<ConditionReport> {
    if probes.is_empty() {
        return Err(Error::invalid("probe_grid", "must be nonempty"));
    }
    let mut report = ConditionReport::new("C2-C4");
    let alpha = alpha0_n(c);
    report.push("C2.alpha0_n", &[("n", c.lattice.n as f64)], alpha);
    if alpha == 0.0 {
        report.note("alpha0_n = 0: symmetric case, the lower C2 bound fails and is not needed");
    }
    let dim = k.dim;
    // Split at |z| = 1 so the kink of 1 ^ |z|^2 never falls inside a shell.
    let c3_integral = |x: &[f64]| {
        let mut small = |z: &[f64]| {
            let r2: f64 = z.iter().map(|v| v * v).sum();
            r2 * ks_at(k, x, z)
        };
        let mut large = |z: &[f64]| ks_at(k, x, z);
        annulus_integral(dim, spec.inner_radius, 1.0, spec, &mut small).value
            + annulus_integral(dim, 1.0, spec.outer_radius, spec, &mut large).value
    };
    let lattice = &c.lattice;
    let cols = c.transpose_targets();
    for rho in rho_grid {
        let sup_c3 = probes
            .par_iter()
            .filter(|x| geom::norm(x) <= *rho)
            .map(|x| c3_integral(x))
            .reduce(|| 0.0, f64::max);
        report.push("C3.integral", &[("rho", *rho)], sup_c3);
        let sup_c4 = (0..c.num_states() as u32)
            .into_par_iter()
            .filter(|a| geom::norm(&lattice.state_point(*a)) <= *rho)
            .map(|a| {
                let pa = lattice.state_point(a);
                let (row_t, _) = c.row(a);
                let mut union: Vec<u32> = row_t.to_vec();
                union.extend(cols[a as usize].iter().copied());
                union.sort_unstable();
                union.dedup();
                let mut acc = 0.0;
                for b in union {
                    let cs = 0.5 * (c.get(a, b) + c.get(b, a));
                    let jump = geom::dist(&lattice.state_point(b), &pa);
                    acc += (jump * jump).min(1.0) * cs;
                }
                acc
            })
            .reduce(|| 0.0, f64::max);
        report.push("C4.discrete_sum", &[("rho", *rho), ("n", lattice.n as f64)], sup_c4);
        // Theoretical bound implied by the kernel-level integrability.
        let n = lattice.n as f64;
        let margin = (dim as f64).sqrt() / (2.0 * n);
        let inner_r = 1.0 - 2.0 * margin;
        let outer_r = 1.0 + 2.0 * margin;
        let enlarged: Vec<Vec<f64>> = probes
            .iter()
            .filter(|x| geom::norm(x) <= rho + margin)
            .cloned()
            .collect();
        let bound = enlarged
            .par_iter()
            .map(|x| {
                let mut tail = |z: &[f64]| ks_at(k, x, z);
                let t = annulus_integral(dim, inner_r.max(spec.inner_radius), spec.outer_radius, spec, &mut tail)
                    .value;
                let mut small = |z: &[f64]| {
                    let r2: f64 = z.iter().map(|v| v * v).sum();
                    r2 * ks_at(k, x, z)
                };
                let s = annulus_integral(dim, spec.inner_radius, outer_r, spec, &mut small).value;
                t + 4.0 * s
            })
            .reduce(|| 0.0, f64::max);
        report.push_checked(
            "C4.vs_bound",
            &[("rho", *rho), ("n", lattice.n as f64)],
            sup_c4,
            bound * (1.0 + 1e-6),
        );
    }
    Ok(report)
}

/// Smooth radial bump supported on the shell [l, 2l], peak value 1.
pub fn radial_bump(r: f64, l: f64) -> f64 {
    if r <= l || r >= 2.0 * l {
        return 0.0;
    }
    let u = (r - l) / l;
    16.0 * u * u * (1.0 - u) * (1.0 - u)
}

/// Discrepancies between row functionals of the matrix and the integrals of
/// the limiting measure field: drift sums, truncated second moments, full
/// second moments where finite, and bump test functions.
pub fn check_semimartingale_route(
    field: &LevyMeasureField,
    c: &ConductanceMatrix,
    h: &TruncationFunction,
    big_r: f64,
    probes: &[Vec<f64>],
    ell_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<ConditionReport> {
    if probes.is_empty() {
        return Err(Error::invalid("probe_grid", "must be nonempty"));
    }
    for x in probes {
        if geom::norm(x) > big_r {
            return Err(Error::invalid("probe_grid", "probe outside B_R"));
        }
    }
    let lattice = &c.lattice;
    let d = lattice.dim;
    let mut report = ConditionReport::new("semimartingale-route");
    // Locate the rows owning the probe cells up-front.
    let rows: Vec<u32> = probes
        .iter()
        .map(|x| {
            lattice
                .find_coords(&round_coords(x, lattice.n))
                .ok_or_else(|| Error::invalid("probe_grid", "probe cell outside window"))
        })
        .collect::<Result<_>>()?;
    // Row functionals.
    struct RowData {
        drift: Vec<f64>,
        second_h: Vec<f64>,
        second_full: Vec<f64>,
        bumps: Vec<f64>,
    }
    let row_data: Vec<RowData> = rows
        .par_iter()
        .map(|a| {
            let pa = lattice.state_point(*a);
            let (targets, values) = c.row(*a);
            let mut drift = vec![0.0; d];
            let mut second_h = vec![0.0; d * d];
            let mut second_full = vec![0.0; d * d];
            let mut bumps = vec![0.0; ell_grid.len()];
            for (bt, v) in targets.iter().zip(values) {
                let jump = geom::sub(&lattice.state_point(*bt), &pa);
                let hv = h.apply(&jump);
                let len = geom::norm(&jump);
                for i in 0..d {
                    drift[i] += hv[i] * v;
                    for kk in 0..d {
                        second_h[i * d + kk] += hv[i] * hv[kk] * v;
                        second_full[i * d + kk] += jump[i] * jump[kk] * v;
                    }
                }
                for (j, l) in ell_grid.iter().enumerate() {
                    bumps[j] += radial_bump(len, *l) * v;
                }
            }
            // Jumps leaking past the window carry |h| = bound; credit that
            // mass to the diagonal so the window edge does not masquerade as
            // discretization error. (Off-diagonal products average out for
            // the symmetric tails handled here.)
            let lost = c.lost_rate(*a) * h.bound * h.bound;
            for i in 0..d {
                second_h[i * d + i] += lost / d as f64;
            }
            RowData {
                drift,
                second_h,
                second_full,
                bumps,
            }
        })
        .collect();
    // C4.S: drift sums against b(x).
    let have_drift = field.drift(&probes[0]).is_some();
    if !have_drift {
        return Err(Error::invalid("field", "drift field required for this check"));
    }
    for i in 0..d {
        let sup = probes
            .iter()
            .zip(&row_data)
            .map(|(x, rd)| {
                let b = field.drift(x).expect("checked above");
                (rd.drift[i] - b[i]).abs()
            })
            .fold(0.0, f64::max);
        report.push(
            "C4.S.drift",
            &[("R", big_r), ("i", i as f64 + 1.0), ("n", lattice.n as f64)],
            sup,
        );
    }
    // C5.S: truncated second moments against the measure integral.
    let targets_hh: Vec<Vec<f64>> = probes
        .par_iter()
        .map(|x| {
            let mut vals = vec![0.0; d * d];
            for i in 0..d {
                for kk in 0..d {
                    let mut g = |z: &[f64]| {
                        let hv = h.apply(z);
                        hv[i] * hv[kk] * field.density(x, z)
                    };
                    // Split at the truncation kink so no shell straddles it.
                    let knee = h.identity_radius.clamp(spec.inner_radius, spec.outer_radius);
                    vals[i * d + kk] =
                        annulus_integral(d, spec.inner_radius, knee, spec, &mut g).value
                            + annulus_integral(d, knee, spec.outer_radius, spec, &mut g).value;
                }
            }
            vals
        })
        .collect();
    for i in 0..d {
        for kk in 0..d {
            let sup = row_data
                .iter()
                .zip(&targets_hh)
                .map(|(rd, tg)| (rd.second_h[i * d + kk] - tg[i * d + kk]).abs())
                .fold(0.0, f64::max);
            report.push(
                "C5.S.truncated_second_moment",
                &[
                    ("R", big_r),
                    ("i", i as f64 + 1.0),
                    ("k", kk as f64 + 1.0),
                    ("n", lattice.n as f64),
                ],
                sup,
            );
        }
    }
    // C4.S^2 / C5.S^2: full second moments, only where the measure has them.
    let full_target = {
        let x0 = &probes[0];
        let mut g = |z: &[f64]| {
            let r2: f64 = z.iter().map(|v| v * v).sum();
            r2 * field.density(x0, z)
        };
        annulus_integral(d, spec.inner_radius, spec.outer_radius, spec, &mut g)
    };
    if full_target.diverged || !full_target.value.is_finite() {
        report.note("second moment of the measure is not finite; C4.S^2/C5.S^2 skipped");
    } else {
        let targets_full: Vec<Vec<f64>> = probes
            .par_iter()
            .map(|x| {
                let mut vals = vec![0.0; d * d];
                for i in 0..d {
                    for kk in 0..d {
                        let mut g = |z: &[f64]| z[i] * z[kk] * field.density(x, z);
                        vals[i * d + kk] = annulus_integral(
                            d,
                            spec.inner_radius,
                            spec.outer_radius,
                            spec,
                            &mut g,
                        )
                        .value;
                    }
                }
                vals
            })
            .collect();
        for i in 0..d {
            for kk in 0..d {
                let sup = row_data
                    .iter()
                    .zip(&targets_full)
                    .map(|(rd, tg)| (rd.second_full[i * d + kk] - tg[i * d + kk]).abs())
                    .fold(0.0, f64::max);
                report.push(
                    "C5.S2.full_second_moment",
                    &[
                        ("R", big_r),
                        ("i", i as f64 + 1.0),
                        ("k", kk as f64 + 1.0),
                        ("n", lattice.n as f64),
                    ],
                    sup,
                );
            }
        }
    }
    // C6.S: bump test functions vanishing near the origin.
    for (j, l) in ell_grid.iter().enumerate() {
        let targets_bump: Vec<f64> = probes
            .par_iter()
            .map(|x| {
                let mut g = |z: &[f64]| radial_bump(geom::norm(z), *l) * field.density(x, z);
                annulus_integral(d, (*l * 0.5).max(spec.inner_radius), spec.outer_radius, spec, &mut g)
                    .value
            })
            .collect();
        let sup = row_data
            .iter()
            .zip(&targets_bump)
            .map(|(rd, tg)| (rd.bumps[j] - tg).abs())
            .fold(0.0, f64::max);
        report.push(
            "C6.S.bump",
            &[("l", *l), ("R", big_r), ("n", lattice.n as f64)],
            sup,
        );
    }
    Ok(report)
}

/// Tail and truncated-moment families of the measure field itself.
pub fn check_ts_family(
    field: &LevyMeasureField,
    rho: f64,
    p: f64,
    r_grid: &[f64],
    eps_grid: &[f64],
    probes: &[Vec<f64>],
    spec: &QuadratureSpec,
) -> Result<ConditionReport> {
    if probes.is_empty() {
        return Err(Error::invalid("probe_grid", "must be nonempty"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid("p", "must lie in (0, 1]"));
    }
    let d = field.dim;
    let mut report = ConditionReport::new("T1.S-T4.S");
    let sup_tail = probes
        .par_iter()
        .map(|x| field.tail_mass(x, rho, spec))
        .reduce(|| 0.0, f64::max);
    report.push("T1.S.tail", &[("rho", rho)], sup_tail);
    for r in r_grid {
        let sup = probes
            .par_iter()
            .map(|x| field.tail_mass(x, *r, spec))
            .reduce(|| 0.0, f64::max);
        report.push("T2.S.tail", &[("r", *r)], sup);
    }
    for eps in eps_grid {
        let lower = eps.powf(p);
        if lower >= rho {
            continue;
        }
        for i in 0..d {
            let sup = probes
                .par_iter()
                .map(|x| {
                    let mut g = |z: &[f64]| z[i] * field.density(x, z);
                    annulus_integral(d, lower.max(spec.inner_radius), rho, spec, &mut g)
                        .value
                        .abs()
                })
                .reduce(|| 0.0, f64::max);
            report.push(
                "T3.S.first_moment",
                &[("rho", rho), ("eps", *eps), ("i", i as f64 + 1.0)],
                sup,
            );
        }
        let sup_mass = probes
            .par_iter()
            .map(|x| {
                let mut g = |z: &[f64]| field.density(x, z);
                annulus_integral(d, lower.max(spec.inner_radius), rho, spec, &mut g).value
            })
            .reduce(|| 0.0, f64::max);
        report.push(
            "T3.S.eps_mass",
            &[("rho", rho), ("eps", *eps)],
            eps * sup_mass,
        );
    }
    let mut t4_vals = Vec::with_capacity(eps_grid.len());
    for eps in eps_grid {
        if *eps >= rho {
            continue;
        }
        let sup = probes
            .par_iter()
            .map(|x| {
                let mut g = |z: &[f64]| {
                    let r2: f64 = z.iter().map(|v| v * v).sum();
                    r2 * field.density(x, z)
                };
                annulus_integral(d, eps.max(spec.inner_radius), rho, spec, &mut g).value
            })
            .reduce(|| 0.0, f64::max);
        report.push("T4.S.second_moment", &[("rho", rho), ("eps", *eps)], sup);
        t4_vals.push(sup);
    }
    note_eps_growth(&mut report, "T4.S", eps_grid, &t4_vals);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::Scheme;
    use crate::kernel::{cauchy_field, cauchy_kernel};
    use crate::lattice::Lattice;
    use approx::assert_relative_eq;

    #[test]
    fn trend_assessment() {
        let ns = [2u32, 4, 8, 16];
        let t = assess_trend(&ns, &[1.0, 0.8, 0.6, 0.5], 0.5);
        assert!(t.bounded);
        assert!(t.vanishing);
        let t2 = assess_trend(&ns, &[1.0, 0.95, 0.93, 0.92], 0.5);
        assert!(t2.bounded);
        assert!(!t2.vanishing);
        let t3 = assess_trend(&ns, &[1.0, 2.0, 4.0, 8.0], 1.5);
        assert!(!t3.bounded);
    }

    #[test]
    fn zero_matrix_reports_zeros() {
        let lat = Lattice::new(1, 1, 2.0).unwrap();
        let c = ConductanceMatrix::from_entries(lat, Scheme::DirichletAverage { p: 1.0 }, &[])
            .unwrap();
        let rep = check_t3_to_t6(&c, 1.0, &[2.0]).unwrap();
        for v in &rep.values {
            assert_eq!(v.value, 0.0);
        }
    }

    #[test]
    fn symmetric_rows_cancel_first_moments() {
        let k = cauchy_kernel(1);
        let lat = Lattice::new(2, 1, 3.0).unwrap();
        let c =
            ConductanceMatrix::build_dirichlet(&k, &lat, 1.0, &QuadratureSpec::default()).unwrap();
        let rep = check_t3_to_t6(&c, 1.0, &[1.5]).unwrap();
        // The center row is fully symmetric; border rows see an asymmetric
        // window, so we check the center row via the sup being driven by the
        // boundary, and the T5 value staying below the single-sided tail.
        let t5 = rep.max_labeled("T5.first_moment").unwrap();
        assert!(t5 < 1.0, "t5 = {t5}");
    }

    #[test]
    fn cauchy_tail_closed_form() {
        let k = cauchy_kernel(1);
        let spec = QuadratureSpec::default();
        let rep = check_dirichlet_route(
            &k,
            &[1.0],
            &[2.0, 4.0],
            &[0.5, 0.25],
            &[vec![0.0], vec![1.0]],
            &spec,
        )
        .unwrap();
        let t1 = rep.value_labeled("T1.D.tail").unwrap();
        assert_relative_eq!(t1.value, 2.0 / std::f64::consts::PI, max_relative = 1e-9);
    }

    #[test]
    fn cauchy_c3_value() {
        let k = cauchy_kernel(1);
        let lat = Lattice::new(2, 1, 2.0).unwrap();
        let spec = QuadratureSpec::default();
        let c = ConductanceMatrix::build_dirichlet(&k, &lat, 1.0, &spec).unwrap();
        let rep = check_c2_c3_c4(&k, &c, &[1.0], &[vec![0.0], vec![0.5]], &spec).unwrap();
        let c3 = rep.value_labeled("C3.integral").unwrap();
        assert_relative_eq!(c3.value, 4.0 / std::f64::consts::PI, max_relative = 1e-4);
        assert!(rep.all_pass());
    }

    #[test]
    fn cauchy_field_ts_family() {
        let field = cauchy_field();
        let spec = QuadratureSpec::default();
        let rep = check_ts_family(
            &field,
            1.0,
            0.5,
            &[2.0, 4.0, 8.0],
            &[0.5, 0.25],
            &[vec![0.0], vec![0.7]],
            &spec,
        )
        .unwrap();
        let t1 = rep.value_labeled("T1.S.tail").unwrap();
        assert_relative_eq!(t1.value, 2.0 / std::f64::consts::PI, max_relative = 1e-12);
        // Tail closure is x-independent.
        let tails: Vec<f64> = rep
            .values
            .iter()
            .filter(|v| v.label == "T2.S.tail")
            .map(|v| v.value)
            .collect();
        assert!(tails.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn bump_shape() {
        assert_eq!(radial_bump(0.9, 1.0), 0.0);
        assert_eq!(radial_bump(2.1, 1.0), 0.0);
        assert_relative_eq!(radial_bump(1.5, 1.0), 1.0);
        assert!(radial_bump(1.2, 1.0) > 0.0);
    }
}
