//! The lattice (1/n)Z^d restricted to a finite window, with cell-average
//! restriction, piecewise-constant extension, and the weighted l2 structure.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom;
use crate::quad::{annulus_integral, cube_integral, QuadratureSpec};

/// Grid (1/n)Z^d truncated to { a : |a| <= window_radius }.
#[derive(Debug)]
pub struct Lattice {
    pub n: u32,
    pub dim: usize,
    pub window_radius: f64,
    coords: Vec<Vec<i32>>,
    index: HashMap<Vec<i32>, u32>,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.dim == other.dim && self.window_radius == other.window_radius
    }
}

impl Lattice {
    pub fn new(n: u32, dim: usize, window_radius: f64) -> Result<Arc<Self>> {
        if n == 0 {
            return Err(Error::invalid("n", "must be >= 1"));
        }
        if dim == 0 || dim > 3 {
            return Err(Error::invalid("dim", "supported dimensions are 1..=3"));
        }
        if !(window_radius > 0.0) {
            return Err(Error::invalid("window_radius", "must be > 0"));
        }
        let m = (n as f64 * window_radius).floor() as i64;
        if m > 1 << 24 {
            return Err(Error::invalid("window_radius", "window too large for n"));
        }
        let mut coords = Vec::new();
        let mut cur = vec![0i32; dim];
        enumerate_window(n, window_radius, &mut cur, 0, &mut coords);
        let index = coords
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i as u32))
            .collect();
        Ok(Arc::new(Lattice {
            n,
            dim,
            window_radius,
            coords,
            index,
        }))
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (self.n as f64).powi(-(self.dim as i32))
    }

    pub fn state_coords(&self, idx: u32) -> &[i32] {
        &self.coords[idx as usize]
    }

    /// The lattice point of a state, in physical coordinates.
    pub fn state_point(&self, idx: u32) -> Vec<f64> {
        self.coords[idx as usize]
            .iter()
            .map(|c| *c as f64 / self.n as f64)
            .collect()
    }

    pub fn find_coords(&self, coords: &[i32]) -> Option<u32> {
        self.index.get(coords).copied()
    }

    /// State owning the cell containing x, if inside the window.
    pub fn locate(&self, x: &[f64]) -> Option<u32> {
        self.find_coords(&round_coords(x, self.n))
    }

    pub fn states(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.coords.len() as u32).into_iter()
    }
}

fn enumerate_window(n: u32, radius: f64, cur: &mut Vec<i32>, axis: usize, out: &mut Vec<Vec<i32>>) {
    let m = (n as f64 * radius * (1.0 + 1e-12)).floor() as i32;
    if axis == cur.len() {
        let r2: f64 = cur
            .iter()
            .map(|c| (*c as f64 / n as f64).powi(2))
            .sum();
        if r2.sqrt() <= radius * (1.0 + 1e-12) {
            out.push(cur.clone());
        }
        return;
    }
    for c in -m..=m {
        cur[axis] = c;
        enumerate_window(n, radius, cur, axis + 1, out);
    }
}

/// Integer cell coordinates of the lattice point whose half-open cell
/// contains x. The integer part uses floor, so cells tile the space.
pub fn round_coords(x: &[f64], n: u32) -> Vec<i32> {
    x.iter()
        .map(|v| (n as f64 * v + 0.5).floor() as i32)
        .collect()
}

/// Nearest lattice point of (1/n)Z^d under the half-open cell convention.
pub fn round_to_lattice(x: &[f64], n: u32) -> Vec<f64> {
    round_coords(x, n)
        .into_iter()
        .map(|c| c as f64 / n as f64)
        .collect()
}

/// Function on the window states of a lattice.
#[derive(Debug, Clone)]
pub struct LatticeFunction {
    pub lattice: Arc<Lattice>,
    pub values: Vec<f64>,
}

impl LatticeFunction {
    pub fn new(lattice: Arc<Lattice>, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::invalid("values", "length must match window size"));
        }
        Ok(LatticeFunction { lattice, values })
    }

    pub fn zero(lattice: Arc<Lattice>) -> Self {
        let len = lattice.len();
        LatticeFunction {
            lattice,
            values: vec![0.0; len],
        }
    }

    pub fn constant(lattice: Arc<Lattice>, c: f64) -> Self {
        let len = lattice.len();
        LatticeFunction {
            lattice,
            values: vec![c; len],
        }
    }

    /// Piecewise-constant extension, zero outside the window.
    pub fn extend(&self) -> impl Fn(&[f64]) -> f64 + '_ {
        move |x: &[f64]| match self.lattice.locate(x) {
            Some(idx) => self.values[idx as usize],
            None => 0.0,
        }
    }

    pub fn to_csv(&self, w: &mut dyn Write) -> Result<()> {
        let d = self.lattice.dim;
        let header: Vec<String> = (1..=d).map(|i| format!("a{i}")).collect();
        writeln!(w, "{},value", header.join(","))?;
        for idx in 0..self.values.len() {
            let pt = self.lattice.state_point(idx as u32);
            let coords: Vec<String> = pt.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{},{}", coords.join(","), self.values[idx])?;
        }
        Ok(())
    }

    pub fn from_csv(lattice: Arc<Lattice>, r: &mut dyn BufRead) -> Result<Self> {
        let mut values = vec![f64::NAN; lattice.len()];
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != lattice.dim + 1 {
                return Err(Error::Parse(format!("bad field count on line {}", lineno + 1)));
            }
            let pt: Vec<f64> = fields[..lattice.dim]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(e.to_string()))?;
            let val: f64 = fields[lattice.dim]
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
            let idx = lattice
                .locate(&pt)
                .ok_or_else(|| Error::Parse(format!("state outside window on line {}", lineno + 1)))?;
            values[idx as usize] = val;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Parse("missing states in CSV".into()));
        }
        LatticeFunction::new(lattice, values)
    }
}

/// Cell-average restriction of a continuum function, by tensor Gauss
/// quadrature of the configured order on every cell.
pub fn restrict(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    lattice: &Arc<Lattice>,
    spec: &QuadratureSpec,
) -> Result<LatticeFunction> {
    let half = 0.5 * lattice.spacing();
    let scale = 1.0 / lattice.cell_volume();
    let values: Vec<f64> = (0..lattice.len() as u32)
        .into_par_iter()
        .map(|idx| {
            let center = lattice.state_point(idx);
            scale * cube_integral(&center, half, spec.order, &mut |x| f(x))
        })
        .collect();
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "restriction produced a non-finite cell average at state {bad}"
        )));
    }
    LatticeFunction::new(lattice.clone(), values)
}

/// Weighted inner product n^{-d} sum_a f(a) g(a).
pub fn l2n_inner(f: &LatticeFunction, g: &LatticeFunction) -> Result<f64> {
    if f.lattice != g.lattice {
        return Err(Error::LatticeMismatch);
    }
    Ok(f.lattice.cell_volume()
        * f.values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| a * b)
            .sum::<f64>())
}

pub fn l2n_norm(f: &LatticeFunction) -> f64 {
    (f.lattice.cell_volume() * f.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// L2 distance between the piecewise-constant extension of f_n and f.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceError {
    /// Full L2 distance, window exterior included.
    pub l2_error: f64,
    /// Squared L2 mass of f outside the window (the part no lattice function
    /// can represent).
    pub window_leakage: f64,
}

pub fn strong_convergence_error(
    f_n: &LatticeFunction,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    spec: &QuadratureSpec,
) -> ConvergenceError {
    let lattice = &f_n.lattice;
    let half = 0.5 * lattice.spacing();
    let inside: f64 = (0..lattice.len() as u32)
        .into_par_iter()
        .map(|idx| {
            let center = lattice.state_point(idx);
            let v = f_n.values[idx as usize];
            cube_integral(&center, half, spec.order, &mut |x| {
                let dlt = v - f(x);
                dlt * dlt
            })
        })
        .sum();
    let rim = lattice.window_radius + geom::norm(&vec![half; lattice.dim]);
    let mut g = |z: &[f64]| {
        let v = f(z);
        v * v
    };
    let window_leakage = annulus_integral(lattice.dim, rim, spec.outer_radius, spec, &mut g).value;
    ConvergenceError {
        l2_error: (inside + window_leakage).sqrt(),
        window_leakage,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rounding_follows_half_open_cells() {
        assert_eq!(round_to_lattice(&[0.3], 1), vec![0.0]);
        assert_eq!(round_to_lattice(&[0.5], 1), vec![1.0]);
        assert_eq!(round_to_lattice(&[-0.74, 0.26], 2), vec![-0.5, 0.5]);
    }

    #[test]
    fn window_enumeration_counts_states() {
        let lat = Lattice::new(1, 1, 2.5).unwrap();
        assert_eq!(lat.len(), 5);
        let lat2 = Lattice::new(2, 2, 1.0).unwrap();
        // Integer pairs (i,j) with |(i/2, j/2)| <= 1: i^2 + j^2 <= 4.
        assert_eq!(lat2.len(), 13);
    }

    #[test]
    fn restriction_of_square_on_center_cell() {
        let lat = Lattice::new(2, 1, 1.0).unwrap();
        let spec = QuadratureSpec::default();
        let f = restrict(&|x: &[f64]| x[0] * x[0], &lat, &spec).unwrap();
        let idx = lat.locate(&[0.0]).unwrap();
        assert_relative_eq!(f.values[idx as usize], 1.0 / 48.0, max_relative = 1e-13);
    }

    #[test]
    fn inner_product_weighting() {
        let lat = Lattice::new(2, 1, 1.0).unwrap();
        let mut vals = vec![0.0; lat.len()];
        for target in [[0.0], [0.5]] {
            vals[lat.locate(&target).unwrap() as usize] = 1.0;
        }
        let f = LatticeFunction::new(lat, vals).unwrap();
        assert_relative_eq!(l2n_inner(&f, &f).unwrap(), 1.0);
    }

    #[test]
    fn aligned_indicator_restricts_exactly() {
        let lat = Lattice::new(1, 1, 3.0).unwrap();
        let spec = QuadratureSpec::default();
        // Cell boundaries of the unit lattice sit at half-integers, so the
        // indicator of [-0.5, 0.5) aligns exactly with one cell.
        let aligned = |x: &[f64]| {
            if x[0] >= -0.5 && x[0] < 0.5 {
                1.0
            } else {
                0.0
            }
        };
        let f_n = restrict(&aligned, &lat, &spec).unwrap();
        let err = strong_convergence_error(&f_n, &aligned, &spec);
        assert!(err.l2_error < 1e-12, "err = {}", err.l2_error);
    }

    #[test]
    fn csv_round_trip() {
        let lat = Lattice::new(2, 1, 1.0).unwrap();
        let vals: Vec<f64> = (0..lat.len()).map(|i| i as f64 * 0.25 - 1.0).collect();
        let f = LatticeFunction::new(lat.clone(), vals).unwrap();
        let mut buf = Vec::new();
        f.to_csv(&mut buf).unwrap();
        let back = LatticeFunction::from_csv(lat, &mut std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(back.values, f.values);
    }
}
