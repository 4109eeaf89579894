//! Conductance matrices on a lattice window, built from jump kernels (double
//! cell averages) or Lévy-measure fields (shifted-cell masses).

use std::io::{BufRead, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom;
use crate::kernel::{JumpKernel, LevyMeasureField};
use crate::lattice::Lattice;
use crate::quad::{annulus_integral, cube_integral, QuadratureSpec};

/// Discretization scheme and its short-range cutoff exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Double cell average of a jump density; cutoff 2*sqrt(d)/n^p.
    DirichletAverage { p: f64 },
    /// Measure of the shifted target cell; cutoff sqrt(d)/n^p.
    SemimartingaleMeasure { p: f64 },
}

impl Scheme {
    pub fn p(&self) -> f64 {
        match self {
            Scheme::DirichletAverage { p } | Scheme::SemimartingaleMeasure { p } => *p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid("p", format!("{p} outside (0, 1]")));
        }
        Ok(())
    }

    /// Pairs with |a - b| <= cutoff(d, n) carry no conductance.
    pub fn cutoff(&self, dim: usize, n: u32) -> f64 {
        let root_d = (dim as f64).sqrt();
        let scale = (n as f64).powf(-self.p());
        match self {
            Scheme::DirichletAverage { .. } => 2.0 * root_d * scale,
            Scheme::SemimartingaleMeasure { .. } => root_d * scale,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::DirichletAverage { .. } => "dirichlet",
            Scheme::SemimartingaleMeasure { .. } => "measure",
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Row {
    targets: Vec<u32>,
    values: Vec<f64>,
}

/// Sparse nonnegative rate matrix over the window states of a lattice.
pub struct ConductanceMatrix {
    pub lattice: Arc<Lattice>,
    pub scheme: Scheme,
    rows: Vec<Row>,
    kept: Vec<f64>,
    lost: Vec<f64>,
    pruned: Vec<f64>,
    /// Number of quadrature values clamped from negative to zero.
    pub clamped: usize,
}

const PRUNE_RELATIVE: f64 = 1e-15;

fn finish_row(mut targets: Vec<u32>, mut values: Vec<f64>) -> (Row, f64, f64, usize) {
    let mut clamped = 0;
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            clamped += 1;
        }
    }
    let row_max = values.iter().cloned().fold(0.0, f64::max);
    let floor = PRUNE_RELATIVE * row_max;
    let mut pruned = 0.0;
    let mut w = 0;
    for i in 0..values.len() {
        if values[i] > floor {
            targets[w] = targets[i];
            values[w] = values[i];
            w += 1;
        } else {
            pruned += values[i];
        }
    }
    targets.truncate(w);
    values.truncate(w);
    targets.shrink_to_fit();
    values.shrink_to_fit();
    let kept: f64 = values.iter().sum();
    (Row { targets, values }, kept, pruned, clamped)
}

impl ConductanceMatrix {
    /// Double-cell-average discretization of a jump kernel.
    pub fn build_dirichlet(
        k: &JumpKernel,
        lattice: &Arc<Lattice>,
        p: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        let scheme = Scheme::DirichletAverage { p };
        scheme.validate()?;
        if k.dim != lattice.dim {
            return Err(Error::invalid("kernel.dim", "does not match lattice"));
        }
        let cutoff = scheme.cutoff(lattice.dim, lattice.n);
        let half = 0.5 * lattice.spacing();
        let scale = 1.0 / lattice.cell_volume(); // n^d
        let s = lattice.len() as u32;
        let points: Vec<Vec<f64>> = (0..s).map(|i| lattice.state_point(i)).collect();
        let built: Vec<(Row, f64, f64, usize)> = (0..s)
            .into_par_iter()
            .map(|a| {
                let pa = &points[a as usize];
                let mut targets = Vec::new();
                let mut values = Vec::new();
                for b in 0..s {
                    if b == a {
                        continue;
                    }
                    let pb = &points[b as usize];
                    if geom::dist(pa, pb) <= cutoff {
                        continue;
                    }
                    let v = scale
                        * cube_integral(pa, half, spec.order, &mut |x| {
                            cube_integral(pb, half, spec.order, &mut |y| k.eval(x, &y))
                        });
                    targets.push(b);
                    values.push(v);
                }
                finish_row(targets, values)
            })
            .collect();
        Self::assemble(lattice.clone(), scheme, built, |a, _kept| {
            let pa = lattice.state_point(a);
            lost_rate_kernel(k, lattice, &pa, cutoff, spec)
        })
    }

    /// Shifted-cell-measure discretization of a Lévy-measure field.
    pub fn build_measure(
        field: &LevyMeasureField,
        lattice: &Arc<Lattice>,
        p: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        let scheme = Scheme::SemimartingaleMeasure { p };
        scheme.validate()?;
        if field.dim != lattice.dim {
            return Err(Error::invalid("field.dim", "does not match lattice"));
        }
        let cutoff = scheme.cutoff(lattice.dim, lattice.n);
        let half = 0.5 * lattice.spacing();
        let s = lattice.len() as u32;
        let points: Vec<Vec<f64>> = (0..s).map(|i| lattice.state_point(i)).collect();
        let built: Vec<(Row, f64, f64, usize)> = (0..s)
            .into_par_iter()
            .map(|a| {
                let pa = &points[a as usize];
                let mut targets = Vec::new();
                let mut values = Vec::new();
                for b in 0..s {
                    if b == a {
                        continue;
                    }
                    let pb = &points[b as usize];
                    if geom::dist(pa, pb) <= cutoff {
                        continue;
                    }
                    let shifted = geom::sub(pb, pa);
                    let v = cube_integral(&shifted, half, spec.order, &mut |z| {
                        field.density(pa, z)
                    });
                    targets.push(b);
                    values.push(v);
                }
                finish_row(targets, values)
            })
            .collect();
        Self::assemble(lattice.clone(), scheme, built, |a, _kept| {
            let pa = lattice.state_point(a);
            lost_rate_field(field, lattice, &pa, cutoff, spec)
        })
    }

    fn assemble(
        lattice: Arc<Lattice>,
        scheme: Scheme,
        built: Vec<(Row, f64, f64, usize)>,
        lost_fn: impl Fn(u32, f64) -> f64 + Sync,
    ) -> Result<Self> {
        let mut rows = Vec::with_capacity(built.len());
        let mut kept = Vec::with_capacity(built.len());
        let mut pruned = Vec::with_capacity(built.len());
        let mut clamped = 0;
        for (row, kr, pr, cl) in built {
            rows.push(row);
            kept.push(kr);
            pruned.push(pr);
            clamped += cl;
        }
        let lost: Vec<f64> = kept
            .par_iter()
            .enumerate()
            .map(|(a, kr)| lost_fn(a as u32, *kr))
            .collect();
        Ok(ConductanceMatrix {
            lattice,
            scheme,
            rows,
            kept,
            lost,
            pruned,
            clamped,
        })
    }

    /// Matrix with explicitly given entries; useful for small closed systems.
    pub fn from_entries(
        lattice: Arc<Lattice>,
        scheme: Scheme,
        entries: &[(u32, u32, f64)],
    ) -> Result<Self> {
        let s = lattice.len();
        let mut rows = vec![Row::default(); s];
        let mut sorted: Vec<&(u32, u32, f64)> = entries.iter().collect();
        sorted.sort_by_key(|(a, b, _)| (*a, *b));
        for (a, b, v) in sorted {
            if *a == *b {
                return Err(Error::invalid("entries", "diagonal entries are forbidden"));
            }
            if *v < 0.0 {
                return Err(Error::invalid("entries", "negative conductance"));
            }
            if *a as usize >= s || *b as usize >= s {
                return Err(Error::invalid("entries", "state index outside window"));
            }
            rows[*a as usize].targets.push(*b);
            rows[*a as usize].values.push(*v);
        }
        let kept: Vec<f64> = rows.iter().map(|r| r.values.iter().sum()).collect();
        Ok(ConductanceMatrix {
            lattice,
            scheme,
            rows,
            kept,
            lost: vec![0.0; s],
            pruned: vec![0.0; s],
            clamped: 0,
        })
    }

    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn num_entries(&self) -> usize {
        self.rows.iter().map(|r| r.targets.len()).sum()
    }

    pub fn row(&self, a: u32) -> (&[u32], &[f64]) {
        let r = &self.rows[a as usize];
        (&r.targets, &r.values)
    }

    /// Entry C(a, b), zero when absent.
    pub fn get(&self, a: u32, b: u32) -> f64 {
        let r = &self.rows[a as usize];
        match r.targets.binary_search(&b) {
            Ok(i) => r.values[i],
            Err(_) => 0.0,
        }
    }

    pub fn kept_rate(&self, a: u32) -> f64 {
        self.kept[a as usize]
    }

    pub fn lost_rate(&self, a: u32) -> f64 {
        self.lost[a as usize]
    }

    pub fn pruned_rate(&self, a: u32) -> f64 {
        self.pruned[a as usize]
    }

    /// (kept, lost) rates of the row.
    pub fn total_rate(&self, a: u32) -> (f64, f64) {
        (self.kept[a as usize], self.lost[a as usize])
    }

    pub fn max_rate(&self) -> f64 {
        self.kept
            .iter()
            .zip(&self.lost)
            .map(|(k, l)| k + l)
            .fold(0.0, f64::max)
    }

    pub fn max_kept_rate(&self) -> f64 {
        self.kept.iter().cloned().fold(0.0, f64::max)
    }

    /// Target lists of the transposed matrix.
    pub fn transpose_targets(&self) -> Vec<Vec<u32>> {
        let mut cols = vec![Vec::new(); self.rows.len()];
        for (a, row) in self.rows.iter().enumerate() {
            for &b in &row.targets {
                cols[b as usize].push(a as u32);
            }
        }
        cols
    }

    /// Writes the documented text format.
    pub fn export(&self, w: &mut dyn Write) -> Result<()> {
        writeln!(w, "jumplat-cm 1")?;
        writeln!(w, "n {}", self.lattice.n)?;
        writeln!(w, "dim {}", self.lattice.dim)?;
        writeln!(w, "window {}", self.lattice.window_radius)?;
        writeln!(w, "scheme {} {}", self.scheme.tag(), self.scheme.p())?;
        writeln!(w, "states {}", self.rows.len())?;
        for (a, row) in self.rows.iter().enumerate() {
            write!(
                w,
                "row {} {} {} {}",
                self.kept[a], self.lost[a], self.pruned[a], row.targets.len()
            )?;
            for (t, v) in row.targets.iter().zip(&row.values) {
                write!(w, " {t}:{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn import(r: &mut dyn BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let mut next_line = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of matrix file".into()))?
                .map_err(Error::from)
        };
        let magic = next_line()?;
        if magic.trim() != "jumplat-cm 1" {
            return Err(Error::Parse("unrecognized matrix header".into()));
        }
        let mut field = |name: &str| -> Result<Vec<String>> {
            let line = next_line()?;
            let mut parts = line.split_whitespace().map(String::from).collect::<Vec<_>>();
            if parts.is_empty() || parts[0] != name {
                return Err(Error::Parse(format!("expected `{name}` line")));
            }
            parts.remove(0);
            Ok(parts)
        };
        let n: u32 = parse_one(&field("n")?)?;
        let dim: usize = parse_one(&field("dim")?)?;
        let window: f64 = parse_one(&field("window")?)?;
        let scheme_parts = field("scheme")?;
        if scheme_parts.len() != 2 {
            return Err(Error::Parse("bad scheme line".into()));
        }
        let p: f64 = scheme_parts[1]
            .parse()
            .map_err(|_| Error::Parse("bad scheme exponent".into()))?;
        let scheme = match scheme_parts[0].as_str() {
            "dirichlet" => Scheme::DirichletAverage { p },
            "measure" => Scheme::SemimartingaleMeasure { p },
            other => return Err(Error::Parse(format!("unknown scheme `{other}`"))),
        };
        let states: usize = parse_one(&field("states")?)?;
        let lattice = Lattice::new(n, dim, window)?;
        if lattice.len() != states {
            return Err(Error::Parse("state count does not match window".into()));
        }
        let mut rows = Vec::with_capacity(states);
        let mut kept = Vec::with_capacity(states);
        let mut lost = Vec::with_capacity(states);
        let mut pruned = Vec::with_capacity(states);
        for _ in 0..states {
            let line = next_line()?;
            let mut it = line.split_whitespace();
            if it.next() != Some("row") {
                return Err(Error::Parse("expected `row` record".into()));
            }
            let kr: f64 = parse_next(&mut it)?;
            let lr: f64 = parse_next(&mut it)?;
            let pr: f64 = parse_next(&mut it)?;
            let m: usize = parse_next(&mut it)?;
            let mut targets = Vec::with_capacity(m);
            let mut values = Vec::with_capacity(m);
            for _ in 0..m {
                let pair = it
                    .next()
                    .ok_or_else(|| Error::Parse("short row record".into()))?;
                let (t, v) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::Parse("bad entry pair".into()))?;
                targets.push(t.parse().map_err(|_| Error::Parse("bad target".into()))?);
                values.push(v.parse().map_err(|_| Error::Parse("bad value".into()))?);
            }
            rows.push(Row { targets, values });
            kept.push(kr);
            lost.push(lr);
            pruned.push(pr);
        }
        Ok(ConductanceMatrix {
            lattice,
            scheme,
            rows,
            kept,
            lost,
            pruned,
            clamped: 0,
        })
    }

    /// CSV triplets a1..ad, b1..bd, value.
    pub fn to_csv_triplets(&self, w: &mut dyn Write) -> Result<()> {
        let d = self.lattice.dim;
        let mut header = Vec::new();
        for i in 1..=d {
            header.push(format!("a{i}"));
        }
        for i in 1..=d {
            header.push(format!("b{i}"));
        }
        header.push("value".into());
        writeln!(w, "{}", header.join(","))?;
        for a in 0..self.rows.len() as u32 {
            let pa = self.lattice.state_point(a);
            let (targets, values) = self.row(a);
            for (t, v) in targets.iter().zip(values) {
                let pb = self.lattice.state_point(*t);
                let mut fields: Vec<String> = pa.iter().map(|x| format!("{x}")).collect();
                fields.extend(pb.iter().map(|x| format!("{x}")));
                fields.push(format!("{v}"));
                writeln!(w, "{}", fields.join(","))?;
            }
        }
        Ok(())
    }
}

fn parse_one<T: std::str::FromStr>(parts: &[String]) -> Result<T> {
    if parts.len() != 1 {
        return Err(Error::Parse("malformed header field".into()));
    }
    parts[0]
        .parse()
        .map_err(|_| Error::Parse(format!("bad header value `{}`", parts[0])))
}

fn parse_next<'a, T: std::str::FromStr>(
    it: &mut impl Iterator<Item = &'a str>,
) -> Result<T> {
    it.next()
        .ok_or_else(|| Error::Parse("short record".into()))?
        .parse()
        .map_err(|_| Error::Parse("bad numeric field".into()))
}

/// Rate lost to targets outside the window: the full rate beyond the cutoff
/// radius minus what the window keeps. Clamped at zero; the clamp absorbs the
/// half-cell mismatch between the cell cutoff and the continuum ball.
/// Rate of jumps from x that land outside the window — the killing part of
/// the truncated chain. Jumps suppressed by the small-jump cutoff are simply
/// dropped by the scheme, not killed, so they do not count here.
fn window_exterior_rate(
    lattice: &Lattice,
    x: &[f64],
    cutoff: f64,
    spec: &QuadratureSpec,
    density: &dyn Fn(&[f64]) -> f64,
    tail_beyond: &dyn Fn(f64) -> f64,
) -> f64 {
    let half = 0.5 * lattice.spacing();
    let rx = geom::norm(x);
    // Radii bracketing the window boundary as seen from x. In d = 1 the
    // boundary sits exactly at these radii, so no quadrature shell straddles
    // a discontinuity of the exterior indicator.
    let (r1, r2) = if lattice.dim == 1 {
        let edge = (lattice.window_radius * lattice.n as f64).floor() / lattice.n as f64 + half;
        ((edge - rx).max(0.0), edge + rx)
    } else {
        let pad = half * (lattice.dim as f64).sqrt() + lattice.spacing();
        (
            (lattice.window_radius - rx - pad).max(0.0),
            lattice.window_radius + rx + pad,
        )
    };
    let lo = cutoff.max(spec.inner_radius);
    let a0 = r1.max(lo);
    let a1 = r2.max(a0);
    let mut total = 0.0;
    if a1 > a0 {
        let mut masked = |z: &[f64]| {
            let y = geom::add(x, z);
            if lattice.locate(&y).is_none() {
                density(z)
            } else {
                0.0
            }
        };
        total += annulus_integral(lattice.dim, a0, a1, spec, &mut masked).value;
    }
    // Beyond r2 every jump leaves the window.
    total += tail_beyond(a1);
    total.max(0.0)
}

fn lost_rate_kernel(
    k: &JumpKernel,
    lattice: &Lattice,
    x: &[f64],
    cutoff: f64,
    spec: &QuadratureSpec,
) -> f64 {
    window_exterior_rate(
        lattice,
        x,
        cutoff,
        spec,
        &|z| k.eval(x, &geom::add(x, z)),
        &|r| k.tail_mass(x, r, spec),
    )
}

fn lost_rate_field(
    field: &LevyMeasureField,
    lattice: &Lattice,
    x: &[f64],
    cutoff: f64,
    spec: &QuadratureSpec,
) -> f64 {
    window_exterior_rate(
        lattice,
        x,
        cutoff,
        spec,
        &|z| field.density(x, z),
        &|r| field.tail_mass(x, r, spec),
    )
}

/// Symmetric part (nonnegative) and antisymmetric part (signed) of a
/// conductance matrix, stored over the union of the supports of C and C^T.
pub struct SplitConductance {
    pub lattice: Arc<Lattice>,
    sym_rows: Vec<Row>,
    anti_rows: Vec<Row>,
}

impl SplitConductance {
    pub fn num_states(&self) -> usize {
        self.sym_rows.len()
    }

    pub fn sym_row(&self, a: u32) -> (&[u32], &[f64]) {
        let r = &self.sym_rows[a as usize];
        (&r.targets, &r.values)
    }

    pub fn anti_row(&self, a: u32) -> (&[u32], &[f64]) {
        let r = &self.anti_rows[a as usize];
        (&r.targets, &r.values)
    }

    pub fn sym(&self, a: u32, b: u32) -> f64 {
        let r = &self.sym_rows[a as usize];
        match r.targets.binary_search(&b) {
            Ok(i) => r.values[i],
            Err(_) => 0.0,
        }
    }

    pub fn anti(&self, a: u32, b: u32) -> f64 {
        let r = &self.anti_rows[a as usize];
        match r.targets.binary_search(&b) {
            Ok(i) => r.values[i],
            Err(_) => 0.0,
        }
    }
}

/// C = C_s + C_a with C_s(a,b) = (C(a,b) + C(b,a))/2 and
/// C_a(a,b) = (C(a,b) - C(b,a))/2.
pub fn split_symmetric(c: &ConductanceMatrix) -> SplitConductance {
    let cols = c.transpose_targets();
    let s = c.num_states() as u32;
    let pairs: Vec<(Row, Row)> = (0..s)
        .into_par_iter()
        .map(|a| {
            let (row_t, _) = c.row(a);
            let mut union: Vec<u32> = row_t.to_vec();
            union.extend(cols[a as usize].iter().copied());
            union.sort_unstable();
            union.dedup();
            let mut sym = Row::default();
            let mut anti = Row::default();
            for b in union {
                let fwd = c.get(a, b);
                let bwd = c.get(b, a);
                let cs = 0.5 * (fwd + bwd);
                let ca = 0.5 * (fwd - bwd);
                if cs != 0.0 || ca != 0.0 {
                    sym.targets.push(b);
                    sym.values.push(cs);
                    anti.targets.push(b);
                    anti.values.push(ca);
                }
            }
            (sym, anti)
        })
        .collect();
    let mut sym_rows = Vec::with_capacity(pairs.len());
    let mut anti_rows = Vec::with_capacity(pairs.len());
    for (sr, ar) in pairs {
        sym_rows.push(sr);
        anti_rows.push(ar);
    }
    SplitConductance {
        lattice: c.lattice.clone(),
        sym_rows,
        anti_rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::cauchy_kernel;
    use approx::assert_relative_eq;

    #[test]
    fn cutoff_radii_differ_by_scheme() {
        let d1 = Scheme::DirichletAverage { p: 1.0 };
        let m1 = Scheme::SemimartingaleMeasure { p: 1.0 };
        assert_relative_eq!(d1.cutoff(1, 4), 0.5);
        assert_relative_eq!(m1.cutoff(1, 4), 0.25);
    }

    #[test]
    fn cauchy_cell_pair_entry_matches_closed_form() {
        let k = cauchy_kernel(1);
        let lat = Lattice::new(1, 1, 5.0).unwrap();
        let spec = QuadratureSpec {
            order: 8,
            ..QuadratureSpec::default()
        };
        let c = ConductanceMatrix::build_dirichlet(&k, &lat, 1.0, &spec).unwrap();
        let a = lat.locate(&[0.0]).unwrap();
        let b = lat.locate(&[4.0]).unwrap();
        // (1/pi) * int_{-1/2}^{1/2} int_{3.5}^{4.5} |y-x|^{-2} dy dx = ln(16/15)/pi.
        assert_relative_eq!(c.get(a, b), 0.020543249317770393, max_relative = 1e-6);
    }

    #[test]
    fn symmetric_kernel_gives_symmetric_matrix() {
        let k = cauchy_kernel(1);
        let lat = Lattice::new(2, 1, 2.0).unwrap();
        let c =
            ConductanceMatrix::build_dirichlet(&k, &lat, 1.0, &QuadratureSpec::default()).unwrap();
        for a in 0..c.num_states() as u32 {
            let (targets, values) = c.row(a);
            for (t, v) in targets.iter().zip(values) {
                assert_relative_eq!(c.get(*t, a), *v, max_relative = 1e-9);
            }
        }
        let split = split_symmetric(&c);
        for a in 0..c.num_states() as u32 {
            let (_, anti) = split.anti_row(a);
            for v in anti {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lost_rate_is_the_window_exterior_mass() {
        let k = cauchy_kernel(1);
        let lat = Lattice::new(1, 1, 8.0).unwrap();
        let spec = QuadratureSpec::default();
        let c = ConductanceMatrix::build_dirichlet(&k, &lat, 1.0, &spec).unwrap();
        let a = lat.locate(&[0.0]).unwrap();
        let (kept, lost) = c.total_rate(a);
        // Window cells cover [-8.5, 8.5]; the killing rate from the centre is
        // the Cauchy mass beyond that edge.
        let edge = 8.5;
        assert_relative_eq!(
            lost,
            2.0 / (std::f64::consts::PI * edge),
            max_relative = 1e-9
        );
        // Kept cells are |b| >= 3 (cutoff 2), covering [2.5, 8.5] per side;
        // the sub-cutoff band is dropped by the scheme, not killed. The
        // double cell average over the source cell [-1/2, 1/2] gives
        // (2/pi) (ln(3/2) - ln(9/8)) in closed form.
        let expect_kept = 2.0 / std::f64::consts::PI * (1.5f64.ln() - 1.125f64.ln());
        assert_relative_eq!(kept, expect_kept, max_relative = 1e-4);
    }

    #[test]
    fn export_import_round_trip() {
        let k = cauchy_kernel(1);
        let lat = Lattice::new(2, 1, 2.0).unwrap();
        let c =
            ConductanceMatrix::build_dirichlet(&k, &lat, 0.5, &QuadratureSpec::default()).unwrap();
        let mut buf = Vec::new();
        c.export(&mut buf).unwrap();
        let back = ConductanceMatrix::import(&mut std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(back.num_states(), c.num_states());
        assert_eq!(back.num_entries(), c.num_entries());
        for a in 0..c.num_states() as u32 {
            let (t1, v1) = c.row(a);
            let (t2, v2) = back.row(a);
            assert_eq!(t1, t2);
            assert_eq!(v1, v2);
            assert_eq!(c.total_rate(a), back.total_rate(a));
        }
    }

    #[test]
    fn from_entries_builds_toy_systems() {
        let lat = Lattice::new(1, 1, 1.0).unwrap();
        let c = ConductanceMatrix::from_entries(
            lat,
            Scheme::DirichletAverage { p: 1.0 },
            &[(0, 1, 2.0), (1, 0, 1.0)],
        )
        .unwrap();
        assert_relative_eq!(c.get(0, 1), 2.0);
        assert_relative_eq!(c.kept_rate(0), 2.0);
        assert_relative_eq!(c.lost_rate(0), 0.0);
        let split = split_symmetric(&c);
        assert_relative_eq!(split.sym(0, 1), 1.5);
        assert_relative_eq!(split.anti(0, 1), 0.5);
        assert_relative_eq!(split.anti(1, 0), -0.5);
    }
}
