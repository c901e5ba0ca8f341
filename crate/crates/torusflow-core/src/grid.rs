//! Periodic sampling grids on a rectangular torus and spectrally accurate
//! calculus on them: complex derivatives, the dbar-inverse, quadrature and
//! dealiasing.
//!
//! Conventions: z = x + iy, d_z = (d_x - i d_y)/2, d_zbar = (d_x + i d_y)/2.
//! Sample points are x_j = j Lx/nx, y_k = k Ly/ny with the endpoint excluded.
//! Values are stored y-major: linear index = iy * nx + ix.

use std::cell::RefCell;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Uniform rectangular sampling lattice for the torus of periods (Lx, Ly).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusLattice {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl TorusLattice {
    /// Sample counts must be even and at least 8 (transform layout and the
    /// half-rule dealiasing both require it).
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::InvalidLattice(format!(
                "sample counts must be even and >= 8, got {nx} x {ny}"
            )));
        }
        if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
            return Err(Error::InvalidLattice(format!(
                "periods must be positive and finite, got {lx} x {ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// Square lattice with the default periods Lx = Ly = 2 pi.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, TAU, TAU)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    /// Number of lattice points.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 * self.lx / self.nx as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        iy as f64 * self.ly / self.ny as f64
    }

    /// Linear index of the sample (ix, iy).
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.nx && iy < self.ny);
        iy * self.nx + ix
    }

    /// Grid spacing in x.
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    /// Grid spacing in y.
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    fn signed(i: usize, n: usize) -> i64 {
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Angular wavenumber of transform slot ix (Nyquist kept at +n/2).
    pub fn kx(&self, ix: usize) -> f64 {
        TAU * Self::signed(ix, self.nx) as f64 / self.lx
    }

    /// Angular wavenumber of transform slot iy.
    pub fn ky(&self, iy: usize) -> f64 {
        TAU * Self::signed(iy, self.ny) as f64 / self.ly
    }

    fn is_nyquist(&self, ix: usize, iy: usize) -> bool {
        ix == self.nx / 2 || iy == self.ny / 2
    }

    /// True when the slot survives half-rule dealiasing (|k index| <= n/4).
    pub fn below_dealias_cutoff(&self, ix: usize, iy: usize) -> bool {
        Self::signed(ix, self.nx).unsigned_abs() <= (self.nx / 4) as u64
            && Self::signed(iy, self.ny).unsigned_abs() <= (self.ny / 4) as u64
    }
}

fn transpose(values: &[Complex64], nx: usize, ny: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    for iy in 0..ny {
        for ix in 0..nx {
            out[ix * ny + iy] = values[iy * nx + ix];
        }
    }
    out
}

fn fft_rows(values: &mut [Complex64], row_len: usize, inverse: bool) {
    let fft = plan(row_len, inverse);
    values
        .par_chunks_mut(row_len)
        .for_each(|row| fft.process(row));
}

/// In-place 2-D transform, rows (x) then columns (y). The inverse divides by
/// nx * ny so that forward followed by inverse is the identity.
fn fft2(values: &mut Vec<Complex64>, nx: usize, ny: usize, inverse: bool) {
    fft_rows(values, nx, inverse);
    let mut t = transpose(values, nx, ny);
    fft_rows(&mut t, ny, inverse);
    *values = transpose(&t, ny, nx);
    if inverse {
        let scale = 1.0 / (nx * ny) as f64;
        for v in values.iter_mut() {
            *v *= scale;
        }
    }
}

/// Neumaier-compensated sum; sequential, so results do not depend on the
/// thread count.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn complex_mean(values: &[Complex64]) -> Complex64 {
    let n = values.len() as f64;
    Complex64::new(
        compensated_sum(values.iter().map(|v| v.re)) / n,
        compensated_sum(values.iter().map(|v| v.im)) / n,
    )
}

/// Complex scalar samples on a torus lattice.
#[derive(Clone, Debug)]
pub struct ScalarField {
    lattice: TorusLattice,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(lattice: TorusLattice) -> Self {
        Self {
            lattice,
            values: vec![Complex64::new(0.0, 0.0); lattice.len()],
        }
    }

    pub fn constant(lattice: TorusLattice, v: Complex64) -> Self {
        Self {
            lattice,
            values: vec![v; lattice.len()],
        }
    }

    pub fn from_fn(lattice: TorusLattice, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Self {
        let nx = lattice.nx();
        let mut values = vec![Complex64::new(0.0, 0.0); lattice.len()];
        values
            .par_chunks_mut(nx)
            .enumerate()
            .for_each(|(iy, row)| {
                let y = lattice.y(iy);
                for (ix, v) in row.iter_mut().enumerate() {
                    *v = f(lattice.x(ix), y);
                }
            });
        Self { lattice, values }
    }

    pub fn from_values(lattice: TorusLattice, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::DimensionMismatch(format!(
                "value count {} does not match lattice {} x {}",
                values.len(),
                lattice.nx(),
                lattice.ny()
            )));
        }
        Ok(Self { lattice, values })
    }

    pub fn lattice(&self) -> TorusLattice {
        self.lattice
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[self.lattice.idx(ix, iy)]
    }

    fn same_lattice(&self, other: &Self) {
        assert_eq!(
            self.lattice, other.lattice,
            "fields live on different lattices"
        );
    }

    fn apply_symbol(&self, sym: impl Fn(f64, f64) -> Complex64, zero_nyquist: bool) -> Self {
        let lat = self.lattice;
        let mut spec = self.values.clone();
        fft2(&mut spec, lat.nx(), lat.ny(), false);
        for iy in 0..lat.ny() {
            for ix in 0..lat.nx() {
                let i = lat.idx(ix, iy);
                if zero_nyquist && lat.is_nyquist(ix, iy) {
                    spec[i] = Complex64::new(0.0, 0.0);
                } else {
                    spec[i] *= sym(lat.kx(ix), lat.ky(iy));
                }
            }
        }
        fft2(&mut spec, lat.nx(), lat.ny(), true);
        Self {
            lattice: lat,
            values: spec,
        }
    }

    /// Spectral d/dz. Exact (to rounding) for band-limited fields; odd-order
    /// symbols are zeroed on the Nyquist slots.
    pub fn deriv_z(&self) -> Self {
        self.apply_symbol(|kx, ky| Complex64::new(ky / 2.0, kx / 2.0), true)
    }

    /// Spectral d/dzbar.
    pub fn deriv_zbar(&self) -> Self {
        self.apply_symbol(|kx, ky| Complex64::new(-ky / 2.0, kx / 2.0), true)
    }

    /// Spectral d/dx.
    pub fn deriv_x(&self) -> Self {
        self.apply_symbol(|kx, _| Complex64::new(0.0, kx), true)
    }

    /// Spectral d/dy.
    pub fn deriv_y(&self) -> Self {
        self.apply_symbol(|_, ky| Complex64::new(0.0, ky), true)
    }

    /// Spectral Laplacian d_x^2 + d_y^2.
    pub fn laplacian(&self) -> Self {
        self.apply_symbol(|kx, ky| Complex64::new(-(kx * kx + ky * ky), 0.0), false)
    }

    /// Spectral mixed derivative d_x d_y.
    pub fn deriv_xy(&self) -> Self {
        self.apply_symbol(|kx, ky| Complex64::new(-kx * ky, 0.0), true)
    }

    /// Zero every mode with |k index| > n/4 on either axis (half rule, wide
    /// enough for cubic nonlinearities). Idempotent.
    pub fn dealias(&self) -> Self {
        let lat = self.lattice;
        let mut spec = self.values.clone();
        fft2(&mut spec, lat.nx(), lat.ny(), false);
        for iy in 0..lat.ny() {
            for ix in 0..lat.nx() {
                if !lat.below_dealias_cutoff(ix, iy) {
                    spec[lat.idx(ix, iy)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        fft2(&mut spec, lat.nx(), lat.ny(), true);
        Self {
            lattice: lat,
            values: spec,
        }
    }

    /// Solve d_z u = g for the unique zero-mean u. Fails when |mean(g)| > tol
    /// (the right-hand side must integrate to zero over the torus).
    pub fn solve_dz(&self, tol: f64) -> Result<Self> {
        let lat = self.lattice;
        let mut spec = self.values.clone();
        fft2(&mut spec, lat.nx(), lat.ny(), false);
        let mean = spec[0].norm() / lat.len() as f64;
        if mean > tol {
            return Err(Error::UnsolvableOnTorus { mean, tol });
        }
        for iy in 0..lat.ny() {
            for ix in 0..lat.nx() {
                let i = lat.idx(ix, iy);
                if ix == 0 && iy == 0 {
                    spec[i] = Complex64::new(0.0, 0.0);
                } else {
                    spec[i] /= Complex64::new(lat.ky(iy) / 2.0, lat.kx(ix) / 2.0);
                }
            }
        }
        fft2(&mut spec, lat.nx(), lat.ny(), true);
        Ok(Self {
            lattice: lat,
            values: spec,
        })
    }

    /// Spectral quadrature: mean(f) * Lx * Ly. Exact for band-limited f.
    pub fn integrate(&self) -> Complex64 {
        self.mean() * self.lattice.lx() * self.lattice.ly()
    }

    pub fn mean(&self) -> Complex64 {
        complex_mean(&self.values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    /// Real part, kept in complex storage.
    pub fn re_part(&self) -> Self {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    /// Imaginary part as a real field (drops the i).
    pub fn im_part(&self) -> Self {
        self.map(|v| Complex64::new(v.im, 0.0))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Sync) -> Self {
        Self {
            lattice: self.lattice,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.same_lattice(other);
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.same_lattice(other);
        self.zip(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        self.same_lattice(other);
        self.zip(other, |a, b| a * b)
    }

    /// Pointwise quotient; caller guarantees the divisor does not vanish.
    pub fn div(&self, other: &Self) -> Self {
        self.same_lattice(other);
        self.zip(other, |a, b| a / b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|v| v * s)
    }

    pub fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        self.same_lattice(other);
        Self {
            lattice: self.lattice,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Resample on a lattice refined by `factor` via Fourier zero padding.
    /// Exact for fields that are band-limited on the source lattice.
    pub fn upsample(&self, factor: usize) -> Self {
        assert!(factor >= 1);
        let lat = self.lattice;
        if factor == 1 {
            return self.clone();
        }
        let fine = TorusLattice::new(
            lat.nx() * factor,
            lat.ny() * factor,
            lat.lx(),
            lat.ly(),
        )
        .expect("refined lattice is valid");
        let mut spec = self.values.clone();
        fft2(&mut spec, lat.nx(), lat.ny(), false);
        let gain = (fine.len() as f64) / (lat.len() as f64);
        let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
        for iy in 0..lat.ny() {
            let sy = TorusLattice::signed(iy, lat.ny());
            let ty = sy.rem_euclid(fine.ny() as i64) as usize;
            for ix in 0..lat.nx() {
                let sx = TorusLattice::signed(ix, lat.nx());
                let tx = sx.rem_euclid(fine.nx() as i64) as usize;
                out[fine.idx(tx, ty)] = spec[lat.idx(ix, iy)] * gain;
            }
        }
        fft2(&mut out, fine.nx(), fine.ny(), true);
        Self {
            lattice: fine,
            values: out,
        }
    }
}

/// Samples of a d-component complex vector per lattice point, stored
/// point-major (components of one point are adjacent).
#[derive(Clone, Debug)]
pub struct VectorField {
    lattice: TorusLattice,
    d: usize,
    values: Vec<Complex64>,
}

impl VectorField {
    pub fn zeros(lattice: TorusLattice, d: usize) -> Self {
        Self {
            lattice,
            d,
            values: vec![Complex64::new(0.0, 0.0); lattice.len() * d],
        }
    }

    /// Fill from a closure writing the components of the point (x, y).
    pub fn from_fn(
        lattice: TorusLattice,
        d: usize,
        f: impl Fn(f64, f64, &mut [Complex64]) + Sync,
    ) -> Self {
        let nx = lattice.nx();
        let mut values = vec![Complex64::new(0.0, 0.0); lattice.len() * d];
        values
            .par_chunks_mut(nx * d)
            .enumerate()
            .for_each(|(iy, row)| {
                let y = lattice.y(iy);
                for ix in 0..nx {
                    f(lattice.x(ix), y, &mut row[ix * d..(ix + 1) * d]);
                }
            });
        Self { lattice, d, values }
    }

    pub fn from_components(components: &[ScalarField]) -> Self {
        assert!(!components.is_empty());
        let lattice = components[0].lattice();
        let d = components.len();
        let mut values = vec![Complex64::new(0.0, 0.0); lattice.len() * d];
        for (c, comp) in components.iter().enumerate() {
            assert_eq!(comp.lattice(), lattice);
            for (p, &v) in comp.values().iter().enumerate() {
                values[p * d + c] = v;
            }
        }
        Self { lattice, d, values }
    }

    pub fn lattice(&self) -> TorusLattice {
        self.lattice
    }

    /// Fiber dimension.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn point(&self, ix: usize, iy: usize) -> &[Complex64] {
        let i = self.lattice.idx(ix, iy) * self.d;
        &self.values[i..i + self.d]
    }

    pub fn point_mut(&mut self, ix: usize, iy: usize) -> &mut [Complex64] {
        let i = self.lattice.idx(ix, iy) * self.d;
        &mut self.values[i..i + self.d]
    }

    /// Component c as a scalar field (copies).
    pub fn component(&self, c: usize) -> ScalarField {
        assert!(c < self.d);
        let values = (0..self.lattice.len())
            .map(|p| self.values[p * self.d + c])
            .collect();
        ScalarField::from_values(self.lattice, values).expect("component has lattice size")
    }

    fn from_component_apply(&self, op: impl Fn(&ScalarField) -> ScalarField) -> Self {
        let comps: Vec<ScalarField> = (0..self.d).map(|c| op(&self.component(c))).collect();
        Self::from_components(&comps)
    }

    pub fn deriv_z(&self) -> Self {
        self.from_component_apply(|f| f.deriv_z())
    }

    pub fn deriv_zbar(&self) -> Self {
        self.from_component_apply(|f| f.deriv_zbar())
    }

    pub fn deriv_x(&self) -> Self {
        self.from_component_apply(|f| f.deriv_x())
    }

    pub fn deriv_y(&self) -> Self {
        self.from_component_apply(|f| f.deriv_y())
    }

    pub fn dealias(&self) -> Self {
        self.from_component_apply(|f| f.dealias())
    }

    pub fn upsample(&self, factor: usize) -> Self {
        self.from_component_apply(|f| f.upsample(factor))
    }

    fn same_shape(&self, other: &Self) {
        assert_eq!(
            self.lattice, other.lattice,
            "fields live on different lattices"
        );
        assert_eq!(self.d, other.d, "fields have different fiber dimensions");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.same_shape(other);
        self.zip_values(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.same_shape(other);
        self.zip_values(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            lattice: self.lattice,
            d: self.d,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    /// Pointwise scalar times vector.
    pub fn scale_field(&self, s: &ScalarField) -> Self {
        assert_eq!(self.lattice, s.lattice());
        let d = self.d;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| v * s.values()[i / d])
            .collect();
        Self {
            lattice: self.lattice,
            d,
            values,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            lattice: self.lattice,
            d: self.d,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Real part, kept in complex storage.
    pub fn re_part(&self) -> Self {
        Self {
            lattice: self.lattice,
            d: self.d,
            values: self
                .values
                .iter()
                .map(|v| Complex64::new(v.re, 0.0))
                .collect(),
        }
    }

    /// Componentwise bilinear Euclidean dot product (no conjugation).
    pub fn dot(&self, other: &Self) -> ScalarField {
        self.same_shape(other);
        let d = self.d;
        let values = (0..self.lattice.len())
            .map(|p| {
                let mut s = Complex64::new(0.0, 0.0);
                for c in 0..d {
                    s += self.values[p * d + c] * other.values[p * d + c];
                }
                s
            })
            .collect();
        ScalarField::from_values(self.lattice, values).expect("dot has lattice size")
    }

    /// Pointwise Euclidean norm of each point's component vector, as a real
    /// scalar field.
    pub fn pointwise_norm(&self) -> ScalarField {
        let d = self.d;
        let values = (0..self.lattice.len())
            .map(|p| {
                let mut s = 0.0;
                for c in 0..d {
                    s += self.values[p * d + c].norm_sqr();
                }
                Complex64::new(s.sqrt(), 0.0)
            })
            .collect();
        ScalarField::from_values(self.lattice, values).expect("norm has lattice size")
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    fn zip_values(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        Self {
            lattice: self.lattice,
            d: self.d,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Map every point's component slice in place.
    pub fn map_points_mut(&mut self, f: impl Fn(f64, f64, &mut [Complex64]) + Sync) {
        let nx = self.lattice.nx();
        let d = self.d;
        let lattice = self.lattice;
        self.values
            .par_chunks_mut(nx * d)
            .enumerate()
            .for_each(|(iy, row)| {
                let y = lattice.y(iy);
                for ix in 0..nx {
                    f(lattice.x(ix), y, &mut row[ix * d..(ix + 1) * d]);
                }
            });
    }
}
