//! Uniform-mesh fields with zero-Neumann boundaries and the five-point Laplacian.
//!
//! Values are stored row-major with `value[i][j] ≈ φ(x_i, y_j)`, where `i` is
//! the x-index. Nodes sit at cell centres, `x_i = a + (i + ½)h` for the
//! zero-based index `i`.

mod snapshot;

pub use snapshot::{read_fsn1, write_csv, write_fsn1, write_pgm, PgmScale, FSN1_MAGIC};

use crate::error::{domain, Error, Result};

/// Relative tolerance for the uniform-mesh check `(b-a)/nx == (d-c)/ny`.
const UNIFORM_TOL: f64 = 1e-12;

/// Rectangular domain `(a, b) × (c, d)` split into `nx × ny` square cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    nx: usize,
    ny: usize,
    h: f64,
}

impl GridSpec {
    pub fn new(a: f64, b: f64, c: f64, d: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(domain(format!("grid needs at least 3x3 nodes, got {nx}x{ny}")));
        }
        if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite()) {
            return Err(domain("domain bounds must be finite"));
        }
        let hx = (b - a) / nx as f64;
        let hy = (d - c) / ny as f64;
        if hx <= 0.0 || hy <= 0.0 {
            return Err(domain("domain bounds must satisfy a < b and c < d"));
        }
        if (hx - hy).abs() > UNIFORM_TOL * hx.max(hy) {
            return Err(domain(format!("mesh is not uniform: hx = {hx}, hy = {hy}")));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            nx,
            ny,
            h: hx,
        })
    }

    /// `n × n` grid on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(0.0, 1.0, 0.0, 1.0, n, n)
    }

    /// Grid anchored at the origin with the given mesh size.
    pub fn with_mesh_size(nx: usize, ny: usize, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(domain(format!("mesh size must be positive, got {h}")));
        }
        Self::new(0.0, nx as f64 * h, 0.0, ny as f64 * h, nx, ny)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (self.a, self.b, self.c, self.d)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell-centred x coordinate of column `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.a + (i as f64 + 0.5) * self.h
    }

    /// Cell-centred y coordinate of row `j`.
    pub fn y(&self, j: usize) -> f64 {
        self.c + (j as f64 + 0.5) * self.h
    }

    pub fn area(&self) -> f64 {
        (self.b - self.a) * (self.d - self.c)
    }
}

/// Scalar field on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    spec: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            values: vec![value; spec.len()],
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(domain(format!(
                "expected {} values for a {}x{} grid, got {}",
                spec.len(),
                spec.nx,
                spec.ny,
                values.len()
            )));
        }
        Ok(Self { spec, values })
    }

    /// Evaluates `f(x_i, y_j)` at every node.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for i in 0..spec.nx {
            let x = spec.x(i);
            for j in 0..spec.ny {
                values.push(f(x, spec.y(j)));
            }
        }
        Self { spec, values }
    }

    /// Builds a field from node indices rather than coordinates.
    pub fn from_index_fn(spec: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for i in 0..spec.nx {
            for j in 0..spec.ny {
                values.push(f(i, j));
            }
        }
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.spec.nx, self.spec.ny)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.ny + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let ny = self.spec.ny;
        self.values[i * ny + j] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_same_dims(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field {
            spec: self.spec,
            values,
        })
    }

    pub fn check_same_dims(&self, other: &Field) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest value; NaN if any value is NaN.
    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| {
            if v.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(v)
            }
        })
    }

    /// Smallest value; NaN if any value is NaN.
    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| {
            if v.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.min(v)
            }
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| {
            if v.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(v.abs())
            }
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Transpose `value[i][j] -> value[j][i]`; square grids only.
    pub fn transpose(&self) -> Result<Field> {
        let (nx, ny) = self.dims();
        if nx != ny {
            return Err(domain("transpose requires a square grid"));
        }
        Ok(Field::from_index_fn(self.spec, |i, j| self.get(j, i)))
    }

    /// Quarter turn: `out[i][j] = f[n-1-j][i]`; square grids only.
    pub fn rotate90(&self) -> Result<Field> {
        let (nx, ny) = self.dims();
        if nx != ny {
            return Err(domain("rotation requires a square grid"));
        }
        Ok(Field::from_index_fn(self.spec, |i, j| self.get(nx - 1 - j, i)))
    }
}

/// Field with a one-node ghost ring, `(nx + 2) × (ny + 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedField {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl PaddedField {
    /// Padded dimensions, ghost ring included.
    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Indexed in padded coordinates: `(1, 1)` is interior node `(0, 0)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ny + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Replicate-pads the field so each ghost node copies its nearest interior node.
pub fn pad_neumann(f: &Field) -> PaddedField {
    let (nx, ny) = f.dims();
    let (px, py) = (nx + 2, ny + 2);
    let mut values = Vec::with_capacity(px * py);
    for pi in 0..px {
        let i = pi.saturating_sub(1).min(nx - 1);
        for pj in 0..py {
            let j = pj.saturating_sub(1).min(ny - 1);
            values.push(f.get(i, j));
        }
    }
    PaddedField { nx: px, ny: py, values }
}

/// A node and its four axis neighbours after Neumann replication.
///
/// `east`/`west` are `i ± 1` (x direction), `north`/`south` are `j ± 1`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Neighbors {
    pub center: f64,
    pub north: f64,
    pub south: f64,
    pub east: f64,
    pub west: f64,
}

/// Evaluates `op` on every node's replicate-padded neighbourhood, row by row.
#[inline]
pub(crate) fn map_stencil(f: &Field, mut op: impl FnMut(Neighbors) -> f64) -> Vec<f64> {
    let (nx, ny) = f.dims();
    let v = f.values();
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        let row = &v[i * ny..(i + 1) * ny];
        let west_row = &v[i.saturating_sub(1) * ny..][..ny];
        let east_row = &v[(i + 1).min(nx - 1) * ny..][..ny];
        for j in 0..ny {
            let south = row[j.saturating_sub(1)];
            let north = row[(j + 1).min(ny - 1)];
            out.push(op(Neighbors {
                center: row[j],
                north,
                south,
                east: east_row[j],
                west: west_row[j],
            }));
        }
    }
    out
}

/// Five-point Laplacian `(φ_E + φ_W + φ_N + φ_S − 4φ) / h²` with Neumann ghosts.
pub fn laplacian_5pt(f: &Field) -> Field {
    let inv_h2 = 1.0 / (f.spec.h * f.spec.h);
    let values = map_stencil(f, |n| (n.east + n.west + n.north + n.south - 4.0 * n.center) * inv_h2);
    Field { spec: f.spec, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, h: f64) -> GridSpec {
        GridSpec::with_mesh_size(n, n, h).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::unit_square(2).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0.0, 2.0, 10, 10).is_err());
        assert!(GridSpec::new(1.0, 0.0, 0.0, 1.0, 10, 10).is_err());
        let g = GridSpec::new(0.0, 1.0, 0.0, 2.0, 10, 20).unwrap();
        assert_eq!(g.h(), 0.1);
    }

    #[test]
    fn pad_constant_field() {
        let f = Field::constant(grid(4, 1.0), 3.5);
        let p = pad_neumann(&f);
        assert_eq!(p.dims(), (6, 6));
        assert!(p.values().iter().all(|&v| v == 3.5));
    }

    #[test]
    fn pad_replicates_left_column() {
        let f = Field::from_index_fn(grid(3, 1.0), |i, j| if i == 0 { 1.0 } else { (i * 3 + j) as f64 });
        let p = pad_neumann(&f);
        for pj in 1..4 {
            assert_eq!(p.get(0, pj), 1.0);
        }
    }

    #[test]
    fn pad_linear_ramp_ghost_equals_first_column() {
        let spec = GridSpec::unit_square(100).unwrap();
        let f = Field::from_fn(spec, |x, _| x);
        let p = pad_neumann(&f);
        for j in 0..100 {
            assert_eq!(p.get(0, j + 1), f.get(0, j));
            assert_eq!(p.get(101, j + 1), f.get(99, j));
        }
        // corners
        assert_eq!(p.get(0, 0), f.get(0, 0));
        assert_eq!(p.get(101, 101), f.get(99, 99));
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let f = Field::constant(grid(7, 0.1), -2.0);
        assert!(laplacian_5pt(&f).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_exact_on_quadratic() {
        let spec = GridSpec::unit_square(20).unwrap();
        let f = Field::from_fn(spec, |x, _| x * x);
        let l = laplacian_5pt(&f);
        for i in 1..19 {
            for j in 0..20 {
                // direct stencil arithmetic: ((x+h)² + (x-h)² - 2x²)/h² = 2
                assert!((l.get(i, j) - 2.0).abs() < 1e-9, "{}", l.get(i, j));
            }
        }
    }

    #[test]
    fn laplacian_of_impulse() {
        let mut f = Field::zeros(grid(5, 1.0));
        f.set(2, 2, 1.0);
        let l = laplacian_5pt(&f);
        for i in 0..5 {
            for j in 0..5 {
                let expected = match (i, j) {
                    (2, 2) => -4.0,
                    (1, 2) | (3, 2) | (2, 1) | (2, 3) => 1.0,
                    _ => 0.0,
                };
                assert_eq!(l.get(i, j), expected);
            }
        }
    }

    #[test]
    fn rotate_four_times_is_identity() {
        let f = Field::from_index_fn(grid(4, 1.0), |i, j| (i * 10 + j) as f64);
        let r = f
            .rotate90()
            .unwrap()
            .rotate90()
            .unwrap()
            .rotate90()
            .unwrap()
            .rotate90()
            .unwrap();
        assert_eq!(r, f);
    }
}
