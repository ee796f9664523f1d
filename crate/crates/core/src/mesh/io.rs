//! ASCII mesh readers (OFF, OBJ) and a legacy VTK writer.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use super::Mesh;
use crate::error::MeshError;
use crate::scalar::{Scalar, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    /// Guesses the format from a file extension (case-insensitive).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(Self::Off),
            "obj" => Some(Self::Obj),
            _ => None,
        }
    }
}

pub fn load_mesh<T: Scalar>(path: &Path, format: MeshFormat) -> Result<Mesh<T>, MeshError> {
    let text = fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        MeshFormat::Off => parse_off(&text),
        MeshFormat::Obj => parse_obj(&text),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn number<T: Scalar>(tok: &str, line: usize) -> Result<T, MeshError> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(T::lit)
        .ok_or_else(|| parse_err(line, format!("expected a number, found `{tok}`")))
}

fn index(tok: &str, line: usize) -> Result<usize, MeshError> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("expected an index, found `{tok}`")))
}

/// Parses an ASCII OFF file. Only triangular faces are accepted.
pub fn parse_off<T: Scalar>(text: &str) -> Result<Mesh<T>, MeshError> {
    // (line number, tokens) with comments and blank lines stripped
    let mut tokens = text.lines().enumerate().flat_map(|(n, l)| {
        let body = l.split('#').next().unwrap_or("");
        body.split_whitespace().map(move |t| (n + 1, t)).collect::<Vec<_>>()
    });

    match tokens.next() {
        Some((_, "OFF")) => {}
        Some((line, other)) => return Err(parse_err(line, format!("expected `OFF` header, found `{other}`"))),
        None => return Err(parse_err(1, "empty file")),
    }
    let mut next = |what: &str| tokens.next().ok_or_else(|| parse_err(0, format!("unexpected end of file reading {what}")));
    let (l, t) = next("vertex count")?;
    let nv = index(t, l)?;
    let (l, t) = next("face count")?;
    let nf = index(t, l)?;
    let (l, t) = next("edge count")?;
    index(t, l)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut v = [T::zero(); 3];
        for c in v.iter_mut() {
            let (l, t) = next("vertex coordinate")?;
            *c = number(t, l)?;
        }
        vertices.push(v);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, t) = next("face size")?;
        let k = index(t, l)?;
        if k != 3 {
            return Err(parse_err(l, format!("only triangular faces are supported, found a {k}-gon")));
        }
        let mut f = [0usize; 3];
        for c in f.iter_mut() {
            let (l, t) = next("face index")?;
            *c = index(t, l)?;
        }
        faces.push(f);
    }
    Mesh::new(vertices, faces)
}

/// Parses an ASCII OBJ file, honoring `v` and triangular `f` records only.
///
/// Face entries may carry `/vt/vn` suffixes and negative (relative) indices.
pub fn parse_obj<T: Scalar>(text: &str) -> Result<Mesh<T>, MeshError> {
    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut faces = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut it = raw.split('#').next().unwrap_or("").split_whitespace();
        match it.next() {
            Some("v") => {
                let mut v = [T::zero(); 3];
                for c in v.iter_mut() {
                    let t = it.next().ok_or_else(|| parse_err(line, "vertex needs three coordinates"))?;
                    *c = number(t, line)?;
                }
                vertices.push(v);
            }
            Some("f") => {
                let refs: Vec<&str> = it.collect();
                if refs.len() != 3 {
                    return Err(parse_err(line, format!("only triangular faces are supported, found {} vertices", refs.len())));
                }
                let mut f = [0usize; 3];
                for (c, r) in f.iter_mut().zip(refs) {
                    let head = r.split('/').next().unwrap_or("");
                    let i: i64 = head
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad face reference `{r}`")))?;
                    let resolved = match i {
                        0 => return Err(parse_err(line, "face index 0 is invalid in OBJ")),
                        i if i > 0 => (i - 1) as usize,
                        i => {
                            let back = (-i) as usize;
                            if back > vertices.len() {
                                return Err(parse_err(line, format!("relative index {i} before first vertex")));
                            }
                            vertices.len() - back
                        }
                    };
                    *c = resolved;
                }
                faces.push(f);
            }
            _ => {}
        }
    }
    Mesh::new(vertices, faces)
}

/// Writes an ASCII OFF file.
pub fn write_off<T: Scalar, W: Write>(mesh: &Mesh<T>, mut out: W) -> io::Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} 0", mesh.num_vertices(), mesh.num_triangles())?;
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v[0], v[1], v[2])?;
    }
    for f in mesh.triangles() {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

/// Writes legacy ASCII VTK `POLYDATA` with one point scalar per named field.
pub fn write_vtk<T: Scalar, W: Write>(
    mesh: &Mesh<T>,
    title: &str,
    fields: &[(&str, &[T])],
    mut out: W,
) -> io::Result<()> {
    let h = mesh.num_vertices();
    let s = mesh.num_triangles();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET POLYDATA")?;
    writeln!(out, "POINTS {h} double")?;
    for v in mesh.vertices() {
        writeln!(out, "{:e} {:e} {:e}", v[0].to_f64_lossy(), v[1].to_f64_lossy(), v[2].to_f64_lossy())?;
    }
    writeln!(out, "POLYGONS {s} {}", 4 * s)?;
    for f in mesh.triangles() {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    if !fields.is_empty() {
        writeln!(out, "POINT_DATA {h}")?;
        for (name, values) in fields {
            assert_eq!(values.len(), h, "field `{name}` length");
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in values.iter() {
                writeln!(out, "{:e}", v.to_f64_lossy())?;
            }
        }
    }
    Ok(())
}
