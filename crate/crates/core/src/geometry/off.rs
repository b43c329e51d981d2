//! OFF mesh text format.

use std::fmt::Write as _;
use std::path::Path;

use super::{build_surface, SurfaceMesh, Vec3};
use crate::error::{Error, Result};

pub fn to_off_string(mesh: &SurfaceMesh) -> String {
    let mut s = String::with_capacity(64 * mesh.n_vertices());
    s.push_str("OFF\n");
    let _ = writeln!(s, "{} {} 0", mesh.n_vertices(), mesh.n_faces());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn write_off(mesh: &SurfaceMesh, path: &Path) -> Result<()> {
    std::fs::write(path, to_off_string(mesh))?;
    Ok(())
}

pub fn read_off(path: &Path) -> Result<SurfaceMesh> {
    parse_off(&std::fs::read_to_string(path)?)
}

pub fn parse_off(text: &str) -> Result<SurfaceMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let perr = |line: usize, message: &str| Error::Parse { line, message: message.to_string() };

    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    if header != "OFF" {
        return Err(perr(ln, "missing OFF header"));
    }
    let (ln, counts) = lines.next().ok_or_else(|| perr(ln, "missing counts line"))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| perr(ln, "bad count")))
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(perr(ln, "counts line needs vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "unexpected end of vertex list"))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|t| t.parse().map_err(|_| perr(ln, "bad coordinate")))
            .collect::<Result<_>>()?;
        if c.len() != 3 {
            return Err(perr(ln, "vertex needs three coordinates"));
        }
        vertices.push(Vec3::new(c[0], c[1], c[2]));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| perr(ln, "unexpected end of face list"))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| perr(ln, "bad face index")))
            .collect::<Result<_>>()?;
        if idx.len() != 4 || idx[0] != 3 {
            return Err(perr(ln, "only triangular faces are supported"));
        }
        faces.push([idx[1], idx[2], idx[3]]);
    }
    build_surface(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::ellipsoid;

    #[test]
    fn round_trip_is_exact() {
        let m = ellipsoid([1.1, 0.9, 0.7], 2).unwrap();
        let back = parse_off(&to_off_string(&m)).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.faces(), m.faces());
    }

    #[test]
    fn malformed_input_reports_line() {
        let err = parse_off("OFF\n4 4 0\n0 0 0\n1 0 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        assert!(matches!(parse_off("PLY\n").unwrap_err(), Error::Parse { line: 1, .. }));
    }
}
