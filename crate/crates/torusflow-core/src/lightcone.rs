//! Minkowski R^{n+1,1} linear algebra and the projective light-cone model of
//! the conformal n-sphere: lifts, conic sections (space forms), sphere mean
//! curvature, Lorentz transforms, and generalized cross products used to
//! complete frames.
//!
//! The quadratic form is <v,v> = -v_0^2 + sum_k v_k^2. On complexified
//! vectors every pairing here is the bilinear extension; hermitian pairings
//! are written at call sites with explicit conjugation.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};

/// Minkowski inner product of real vectors; signature (n+1, 1), timelike
/// component first.
pub fn inner(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "inner product of lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let mut s = -u[0] * v[0];
    for k in 1..u.len() {
        s += u[k] * v[k];
    }
    Ok(s)
}

/// Bilinear Minkowski pairing of complexified vectors (no conjugation).
pub fn inner_c(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    assert_eq!(u.len(), v.len(), "pairing of mismatched dimensions");
    let mut s = -u[0] * v[0];
    for k in 1..u.len() {
        s += u[k] * v[k];
    }
    s
}

/// Pointwise bilinear Minkowski pairing of two vector fields.
pub fn pair(u: &VectorField, v: &VectorField) -> ScalarField {
    assert_eq!(u.dim(), v.dim(), "pairing of mismatched fiber dimensions");
    assert_eq!(u.lattice(), v.lattice());
    let d = u.dim();
    let n = u.lattice().len();
    let values = (0..n)
        .map(|p| inner_c(&u.values()[p * d..(p + 1) * d], &v.values()[p * d..(p + 1) * d]))
        .collect();
    ScalarField::from_values(u.lattice(), values).expect("pairing has lattice size")
}

/// Euclidean lift (1, f) of a point of the unit sphere; null and forward.
pub fn euclidean_lift(f: &[f64], tol: f64) -> Result<Vec<f64>> {
    let norm2: f64 = f.iter().map(|x| x * x).sum();
    let defect = norm2 - 1.0;
    if defect.abs() > tol {
        return Err(Error::NotOnSphere {
            defect,
            tol,
        });
    }
    let mut v = Vec::with_capacity(f.len() + 1);
    v.push(1.0);
    v.extend_from_slice(f);
    Ok(v)
}

/// Representative of the projective class of a forward null vector on the
/// unit sphere: spatial part divided by the timelike component.
pub fn project_to_sphere(psi: &[f64], tol: f64) -> Result<Vec<f64>> {
    let vv = inner(psi, psi)?;
    let scale: f64 = psi.iter().map(|x| x * x).sum();
    if vv.abs() > tol * scale.max(1.0) {
        return Err(Error::NotNull { value: vv, tol });
    }
    if psi[0] <= 0.0 {
        return Err(Error::NotForward { component0: psi[0] });
    }
    Ok(psi[1..].iter().map(|x| x / psi[0]).collect())
}

/// Pointwise projection of a forward null vector field to the sphere,
/// normalizing each image point back onto the unit sphere.
pub fn project_field_to_sphere(psi: &VectorField, tol: f64) -> Result<VectorField> {
    let d = psi.dim();
    let lat = psi.lattice();
    let mut out = VectorField::zeros(lat, d - 1);
    for iy in 0..lat.ny() {
        for ix in 0..lat.nx() {
            let p = psi.point(ix, iy);
            let real: Vec<f64> = p.iter().map(|v| v.re).collect();
            let f = project_to_sphere(&real, tol)?;
            let norm: f64 = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            let o = out.point_mut(ix, iy);
            for (k, x) in f.iter().enumerate() {
                o[k] = Complex64::new(x / norm, 0.0);
            }
        }
    }
    Ok(out)
}

/// Conic section S_{v0} = {v in the light cone : <v, v0> = -1}, a space form
/// of constant curvature -<v0, v0>.
#[derive(Clone, Debug)]
pub struct ConicSection {
    v0: Vec<f64>,
}

impl ConicSection {
    pub fn new(v0: Vec<f64>) -> Result<Self> {
        if v0.iter().all(|&x| x == 0.0) {
            return Err(Error::DimensionMismatch(
                "conic section requires a nonzero vector".into(),
            ));
        }
        Ok(Self { v0 })
    }

    pub fn v0(&self) -> &[f64] {
        &self.v0
    }

    /// Sectional curvature of the space form.
    pub fn curvature(&self) -> f64 {
        -inner(&self.v0, &self.v0).expect("v0 pairs with itself")
    }

    /// Scale a light-cone representative into the section.
    pub fn project(&self, psi: &[f64], tol: f64) -> Result<Vec<f64>> {
        let p = inner(psi, &self.v0)?;
        if p.abs() < tol {
            return Err(Error::PointAtInfinity {
                pairing: p.abs(),
                tol,
            });
        }
        Ok(psi.iter().map(|x| x / (-p)).collect())
    }
}

/// Mean curvature vector of the sphere cut out by v0 through a light-cone
/// point v, given the part of v0 normal to the surface's central-sphere
/// bundle: H = -v0_perp - <v0_perp, v0_perp> v.
pub fn sphere_mean_curvature(v0_perp: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let q = inner(v0_perp, v0_perp)?;
    Ok(v0_perp
        .iter()
        .zip(v.iter())
        .map(|(p, x)| -p - q * x)
        .collect())
}

/// Seeded pseudo-random Lorentz transform in the identity component,
/// exp(eta S) with S antisymmetric, entries O(scale). Deterministic in the
/// seed.
pub fn random_lorentz(dim: usize, seed: u64, scale: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gen = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in (i + 1)..dim {
            let s = scale * (rng.gen::<f64>() * 2.0 - 1.0);
            gen[i][j] = s;
            gen[j][i] = -s;
        }
    }
    // Omega = eta S satisfies Omega^T eta + eta Omega = 0
    let mut omega = gen;
    for j in 0..dim {
        omega[0][j] = -omega[0][j];
    }
    matrix_exp(&omega)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
fn matrix_exp(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = a.len();
    let norm: f64 = a
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = norm.log2().ceil().max(0.0) as u32 + 4;
    let scale = 0.5f64.powi(s as i32);
    let b: Vec<Vec<f64>> = a
        .iter()
        .map(|row| row.iter().map(|x| x * scale).collect())
        .collect();
    let mut result = identity(dim);
    let mut term = identity(dim);
    for k in 1..=16 {
        term = mat_mul(&term, &b);
        let f = 1.0 / factorial(k);
        for i in 0..dim {
            for j in 0..dim {
                result[i][j] += term[i][j] * f;
            }
        }
    }
    for _ in 0..s {
        result = mat_mul(&result, &result);
    }
    result
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn identity(dim: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = a.len();
    let mut c = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i][k];
            for j in 0..dim {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// Max |L^T eta L - eta|, a diagnostic for Lorentz-ness.
pub fn lorentz_defect(l: &[Vec<f64>]) -> f64 {
    let dim = l.len();
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let mut s = 0.0;
            for k in 0..dim {
                let eta = if k == 0 { -1.0 } else { 1.0 };
                s += l[k][i] * eta * l[k][j];
            }
            let want = if i == j {
                if i == 0 {
                    -1.0
                } else {
                    1.0
                }
            } else {
                0.0
            };
            worst = worst.max((s - want).abs());
        }
    }
    worst
}

/// Apply a matrix pointwise to a vector field (components transform as a
/// Minkowski vector).
pub fn apply_matrix(m: &[Vec<f64>], field: &VectorField) -> VectorField {
    let d = field.dim();
    assert_eq!(m.len(), d, "matrix size must match fiber dimension");
    let lat = field.lattice();
    let mut out = VectorField::zeros(lat, d);
    for iy in 0..lat.ny() {
        for ix in 0..lat.nx() {
            let p = field.point(ix, iy).to_vec();
            let o = out.point_mut(ix, iy);
            for (i, row) in m.iter().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for (k, &mk) in row.iter().enumerate() {
                    s += mk * p[k];
                }
                o[i] = s;
            }
        }
    }
    out
}

/// Minkowski-orthogonal complement vector of dim-1 given vectors in R^{dim-1,1}:
/// the unique v with <v, x> = det(x, a_1, ..., a_{dim-1}) for all x.
/// Works on complexified inputs; real inputs give a real result.
pub fn mink_cross(rows: &[&[Complex64]]) -> Vec<Complex64> {
    let dim = rows.len() + 1;
    for r in rows {
        assert_eq!(r.len(), dim, "cross product needs dim-1 vectors of length dim");
    }
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    let mut minor = vec![Complex64::new(0.0, 0.0); (dim - 1) * (dim - 1)];
    for b in 0..dim {
        // minor: all rows, columns excluding b
        for (i, r) in rows.iter().enumerate() {
            let mut jj = 0;
            for j in 0..dim {
                if j != b {
                    minor[i * (dim - 1) + jj] = r[j];
                    jj += 1;
                }
            }
        }
        let det = det_small(&mut minor.clone(), dim - 1);
        let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
        // dual w_b = sign * det; lower the index with eta to get v
        let w = sign * det;
        v[b] = if b == 0 { -w } else { w };
    }
    v
}

/// Determinant by Gaussian elimination with partial pivoting (by modulus).
fn det_small(a: &mut [Complex64], n: usize) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm();
        for r in (col + 1)..n {
            let v = a[r * n + col].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
            }
            det = -det;
        }
        let d = a[col * n + col];
        det *= d;
        for r in (col + 1)..n {
            let f = a[r * n + col] / d;
            for j in col..n {
                let v = a[col * n + j];
                a[r * n + j] -= f * v;
            }
        }
    }
    det
}
