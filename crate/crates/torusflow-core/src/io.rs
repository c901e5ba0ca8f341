//! Field and mesh serialization: a CSV layout for complex fields on a torus
//! lattice and a Wavefront OBJ writer for immersed meshes.
//!
//! Field files carry one header line `nx,ny,lx,ly,d` followed by one line
//! per lattice point in row-major order, each holding `d` complex values as
//! `re,im` pairs. Floats are printed in Rust's shortest round-trip form, so
//! write-read is lossless and byte-deterministic.
//!
//! OBJ meshes list vertices in row-major lattice order and close the torus
//! with quad faces wrapping periodically in both directions, printed with 17
//! significant digits so coordinates survive a round trip through text.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusLattice, VectorField};

fn write_header(w: &mut impl Write, lat: TorusLattice, d: usize) -> Result<()> {
    writeln!(w, "{},{},{},{},{}", lat.nx(), lat.ny(), lat.lx(), lat.ly(), d)?;
    Ok(())
}

fn write_rows(w: &mut impl Write, values: &[Complex64], d: usize) -> Result<()> {
    let mut line = String::new();
    for point in values.chunks(d) {
        line.clear();
        for (j, v) in point.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{},{}", v.re, v.im));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Serialize a scalar field (fiber dimension 1).
pub fn write_scalar_csv(w: &mut impl Write, f: &ScalarField) -> Result<()> {
    write_header(w, f.lattice(), 1)?;
    write_rows(w, f.values(), 1)
}

/// Serialize a vector field with its fiber dimension in the header.
pub fn write_vector_csv(w: &mut impl Write, f: &VectorField) -> Result<()> {
    write_header(w, f.lattice(), f.dim())?;
    write_rows(w, f.values(), f.dim())
}

struct FieldData {
    lattice: TorusLattice,
    d: usize,
    values: Vec<Complex64>,
}

fn parse_field(r: impl BufRead) -> Result<FieldData> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty field file".into()))??;
    let head: Vec<&str> = header.trim().split(',').collect();
    if head.len() != 5 {
        return Err(Error::Parse(format!(
            "field header needs nx,ny,lx,ly,d, got {} entries",
            head.len()
        )));
    }
    let nx: usize = parse_num(head[0], "nx")?;
    let ny: usize = parse_num(head[1], "ny")?;
    let lx: f64 = parse_num(head[2], "lx")?;
    let ly: f64 = parse_num(head[3], "ly")?;
    let d: usize = parse_num(head[4], "d")?;
    if d == 0 {
        return Err(Error::Parse("fiber dimension 0".into()));
    }
    let lattice = TorusLattice::new(nx, ny, lx, ly)?;
    let mut values = Vec::with_capacity(nx * ny * d);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let row = line.trim();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        for j in 0..d {
            let re: f64 = parse_num(
                fields.next().ok_or_else(|| row_error(i, j, "missing re"))?,
                "re",
            )?;
            let im: f64 = parse_num(
                fields.next().ok_or_else(|| row_error(i, j, "missing im"))?,
                "im",
            )?;
            values.push(Complex64::new(re, im));
        }
        if fields.next().is_some() {
            return Err(row_error(i, d, "trailing entries"));
        }
    }
    if values.len() != nx * ny * d {
        return Err(Error::Parse(format!(
            "field file holds {} values, lattice needs {}",
            values.len(),
            nx * ny * d
        )));
    }
    Ok(FieldData { lattice, d, values })
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} entry {s:?}")))
}

fn row_error(row: usize, col: usize, what: &str) -> Error {
    Error::Parse(format!("row {row}, component {col}: {what}"))
}

/// Read a scalar field; the header must declare fiber dimension 1.
pub fn read_scalar_csv(r: impl BufRead) -> Result<ScalarField> {
    let data = parse_field(r)?;
    if data.d != 1 {
        return Err(Error::Parse(format!(
            "expected a scalar field, header says d = {}",
            data.d
        )));
    }
    ScalarField::from_values(data.lattice, data.values)
}

/// Read a vector field of any fiber dimension.
pub fn read_vector_csv(r: impl BufRead) -> Result<VectorField> {
    let data = parse_field(r)?;
    let per = data.lattice.nx() * data.lattice.ny();
    let mut comps = Vec::with_capacity(data.d);
    for j in 0..data.d {
        let vals: Vec<Complex64> = (0..per).map(|i| data.values[i * data.d + j]).collect();
        comps.push(ScalarField::from_values(data.lattice, vals)?);
    }
    Ok(VectorField::from_components(&comps))
}

/// Write a closed torus mesh as OBJ: real parts of a 3-component field as
/// vertices in row-major order, quads with periodic wrap as faces.
pub fn write_obj(w: &mut impl Write, mesh: &VectorField) -> Result<()> {
    if mesh.dim() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "OBJ meshes need 3 coordinates, field has {}",
            mesh.dim()
        )));
    }
    let lat = mesh.lattice();
    let (nx, ny) = (lat.nx(), lat.ny());
    for iy in 0..ny {
        for ix in 0..nx {
            let p = mesh.point(ix, iy);
            writeln!(w, "v {:.16e} {:.16e} {:.16e}", p[0].re, p[1].re, p[2].re)?;
        }
    }
    // OBJ indexes vertices from 1; +x then +y neighbors wrap periodically
    let idx = |ix: usize, iy: usize| (iy % ny) * nx + (ix % nx) + 1;
    for iy in 0..ny {
        for ix in 0..nx {
            writeln!(
                w,
                "f {} {} {} {}",
                idx(ix, iy),
                idx(ix + 1, iy),
                idx(ix + 1, iy + 1),
                idx(ix, iy + 1)
            )?;
        }
    }
    Ok(())
}
