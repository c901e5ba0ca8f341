//! Periodic sampling of one real coordinate, used by the classical
//! Schwarzian/KdV pipeline. The spectral derivative here is d/dx along the
//! line; for samples of a holomorphic function restricted to the line this
//! equals the complex z-derivative of that function.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::compensated_sum;

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

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

/// Uniform periodic lattice on a line of period L, samples x_j = j L / n.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineLattice {
    n: usize,
    l: f64,
}

impl LineLattice {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidLattice(format!(
                "sample count must be even and >= 8, got {n}"
            )));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidLattice(format!(
                "period must be positive and finite, got {l}"
            )));
        }
        Ok(Self { n, l })
    }

    /// Default period 2 pi.
    pub fn circle(n: usize) -> Result<Self> {
        Self::new(n, TAU)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.l / self.n as f64
    }

    fn signed(i: usize, n: usize) -> i64 {
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn k(&self, j: usize) -> f64 {
        TAU * Self::signed(j, self.n) as f64 / self.l
    }
}

/// Complex samples on a line lattice.
#[derive(Clone, Debug)]
pub struct LineField {
    lattice: LineLattice,
    values: Vec<Complex64>,
}

impl LineField {
    pub fn zeros(lattice: LineLattice) -> Self {
        Self {
            lattice,
            values: vec![Complex64::new(0.0, 0.0); lattice.n()],
        }
    }

    pub fn constant(lattice: LineLattice, v: Complex64) -> Self {
        Self {
            lattice,
            values: vec![v; lattice.n()],
        }
    }

    pub fn from_fn(lattice: LineLattice, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..lattice.n()).map(|j| f(lattice.x(j))).collect();
        Self { lattice, values }
    }

    pub fn from_values(lattice: LineLattice, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != lattice.n() {
            return Err(Error::DimensionMismatch(format!(
                "value count {} does not match lattice n = {}",
                values.len(),
                lattice.n()
            )));
        }
        Ok(Self { lattice, values })
    }

    pub fn lattice(&self) -> LineLattice {
        self.lattice
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut spec = self.values.clone();
        plan(spec.len(), false).process(&mut spec);
        spec
    }

    pub fn from_spectrum(lattice: LineLattice, mut spec: Vec<Complex64>) -> Self {
        plan(spec.len(), true).process(&mut spec);
        let scale = 1.0 / lattice.n() as f64;
        for v in spec.iter_mut() {
            *v *= scale;
        }
        Self {
            lattice,
            values: spec,
        }
    }

    fn apply_symbol(&self, sym: impl Fn(f64) -> Complex64, zero_nyquist: bool) -> Self {
        let lat = self.lattice;
        let mut spec = self.spectrum();
        for (j, v) in spec.iter_mut().enumerate() {
            if zero_nyquist && j == lat.n() / 2 {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= sym(lat.k(j));
            }
        }
        Self::from_spectrum(lat, spec)
    }

    /// Spectral derivative along the line.
    pub fn deriv(&self) -> Self {
        self.apply_symbol(|k| Complex64::new(0.0, k), true)
    }

    /// n-fold spectral derivative.
    pub fn deriv_n(&self, order: u32) -> Self {
        self.apply_symbol(
            |k| Complex64::new(0.0, k).powu(order),
            order % 2 == 1,
        )
    }

    /// Zero every mode with |k index| > n/4 (half rule). Idempotent.
    pub fn dealias(&self) -> Self {
        let lat = self.lattice;
        let mut spec = self.spectrum();
        for (j, v) in spec.iter_mut().enumerate() {
            if LineLattice::signed(j, lat.n()).unsigned_abs() > (lat.n() / 4) as u64 {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        Self::from_spectrum(lat, spec)
    }

    pub fn mean(&self) -> Complex64 {
        let n = self.values.len() as f64;
        Complex64::new(
            compensated_sum(self.values.iter().map(|v| v.re)) / n,
            compensated_sum(self.values.iter().map(|v| v.im)) / n,
        )
    }

    /// Quadrature over one period: mean * L.
    pub fn integrate(&self) -> Complex64 {
        self.mean() * self.lattice.l()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn min_abs(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            lattice: self.lattice,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(
            self.lattice, other.lattice,
            "fields live on different lattices"
        );
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

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn div(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a / b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|v| v * s)
    }
}
