//! Mesh emission helpers: meshes live on spheres S^n in R^{n+1}, so OBJ
//! output (3 coordinates) goes through stereographic projection from a
//! coordinate pole chosen deterministically as far from the surface as
//! possible. The exact mesh is always emitted as a field CSV alongside.

use torusflow_core::grid::VectorField;
use torusflow_core::io as field_io;

use crate::fail::{CommandError, CommandResult};

/// Stereographic OBJ bytes for a 4-coordinate mesh plus the pole axis used.
/// The pole is +e_axis where axis minimizes the mesh's maximum coordinate,
/// keeping the projection denominator 1 - x_axis away from zero.
pub fn stereographic_obj(mesh: &VectorField) -> CommandResult<(Vec<u8>, usize)> {
    if mesh.dim() != 4 {
        return Err(CommandError::Config(format!(
            "stereographic OBJ needs a surface in S^3 (4 coordinates), got {}",
            mesh.dim()
        )));
    }
    let lat = mesh.lattice();
    let vals = mesh.values();
    let mut axis = 0usize;
    let mut best = f64::INFINITY;
    for k in 0..4 {
        let top = vals
            .chunks(4)
            .map(|p| p[k].re)
            .fold(f64::NEG_INFINITY, f64::max);
        if top < best {
            best = top;
            axis = k;
        }
    }
    if best > 1.0 - 1e-9 {
        return Err(CommandError::Numeric(format!(
            "mesh touches every coordinate pole (closest gap {:.3e}); no stereographic chart covers it",
            1.0 - best
        )));
    }
    let others: Vec<usize> = (0..4).filter(|k| *k != axis).collect();
    let n_points = vals.len() / 4;
    let mut comp_vals: Vec<Vec<num_complex::Complex64>> =
        vec![Vec::with_capacity(n_points); 3];
    for p in vals.chunks(4) {
        let denom = 1.0 - p[axis].re;
        for (j, k) in others.iter().enumerate() {
            comp_vals[j].push(num_complex::Complex64::new(p[*k].re / denom, 0.0));
        }
    }
    let mut comps = Vec::with_capacity(3);
    for v in comp_vals {
        comps.push(torusflow_core::ScalarField::from_values(lat, v)?);
    }
    let projected = VectorField::from_components(&comps);
    let mut buf = Vec::new();
    field_io::write_obj(&mut buf, &projected)?;
    Ok((buf, axis))
}

/// Extent of the mesh's thinnest direction: the square root of the smallest
/// eigenvalue of the coordinate covariance matrix. Zero exactly when the
/// points lie in an affine hyperplane, i.e. when a spherical mesh lies in a
/// lower-dimensional subsphere.
pub fn thinnest_extent(mesh: &VectorField) -> f64 {
    let d = mesh.dim();
    let vals = mesh.values();
    let n = vals.len() / d;
    let mut mean = vec![0.0f64; d];
    for p in vals.chunks(d) {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v.re;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![vec![0.0f64; d]; d];
    for p in vals.chunks(d) {
        for i in 0..d {
            for j in i..d {
                cov[i][j] += (p[i].re - mean[i]) * (p[j].re - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= n as f64;
            cov[j][i] = cov[i][j];
        }
    }
    // cyclic Jacobi sweeps; the matrix is tiny and symmetric
    for _ in 0..40 {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += cov[p][q].abs();
            }
        }
        if off < 1e-300 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                if cov[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (cov[q][q] - cov[p][p]) / cov[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cth = 1.0 / (t * t + 1.0).sqrt();
                let s = t * cth;
                for k in 0..d {
                    let (a, b) = (cov[p][k], cov[q][k]);
                    cov[p][k] = cth * a - s * b;
                    cov[q][k] = s * a + cth * b;
                }
                for k in 0..d {
                    let (a, b) = (cov[k][p], cov[k][q]);
                    cov[k][p] = cth * a - s * b;
                    cov[k][q] = s * a + cth * b;
                }
            }
        }
    }
    let eig_min = (0..d).map(|i| cov[i][i]).fold(f64::INFINITY, f64::min);
    eig_min.max(0.0).sqrt()
}
