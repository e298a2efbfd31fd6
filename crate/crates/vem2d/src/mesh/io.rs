//! Text format for polygonal meshes.
//!
//! ```text
//! vem-mesh 1
//! <n_vertices> <n_cells>
//! x y                 (n_vertices lines, 17 significant digits)
//! <m> i_1 ... i_m     (n_cells lines, 0-based, counterclockwise)
//! ```

use super::{MeshError, PolygonalMesh};
use crate::geometry::Point2;
use std::fmt::Write as _;
use std::path::Path;

pub fn write_mesh_string(mesh: &PolygonalMesh) -> String {
    let mut s = String::new();
    writeln!(s, "vem-mesh 1").unwrap();
    writeln!(s, "{} {}", mesh.n_vertices(), mesh.n_cells()).unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{:.16e} {:.16e}", v.x, v.y).unwrap();
    }
    for cell in &mesh.cells {
        write!(s, "{}", cell.len()).unwrap();
        for &i in cell {
            write!(s, " {i}").unwrap();
        }
        writeln!(s).unwrap();
    }
    s
}

pub fn write_mesh(mesh: &PolygonalMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}

pub fn read_mesh_str(text: &str) -> Result<PolygonalMesh, MeshError> {
    let mut lines = text.lines().enumerate();
    let perr = |line: usize, msg: &str| MeshError::Parse { line: line + 1, msg: msg.to_string() };

    let (ln, header) = lines.next().ok_or_else(|| perr(0, "empty file"))?;
    if header.trim() != "vem-mesh 1" {
        return Err(perr(ln, "expected header `vem-mesh 1`"));
    }
    let (ln, counts) = lines.next().ok_or_else(|| perr(1, "missing count line"))?;
    let mut it = counts.split_whitespace();
    let n_vertices: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| perr(ln, "expected `<n_vertices> <n_cells>`"))?;
    let n_cells: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| perr(ln, "expected `<n_vertices> <n_cells>`"))?;

    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (ln, l) = lines.next().ok_or_else(|| perr(usize::MAX - 1, "unexpected end of file in vertex list"))?;
        let mut it = l.split_whitespace();
        let x: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(ln, "expected `x y`"))?;
        let y: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(ln, "expected `x y`"))?;
        vertices.push(Point2::new(x, y));
    }

    let mut cells = Vec::with_capacity(n_cells);
    for _ in 0..n_cells {
        let (ln, l) = lines.next().ok_or_else(|| perr(usize::MAX - 1, "unexpected end of file in cell list"))?;
        let mut it = l.split_whitespace();
        let m: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(ln, "expected `<m> i_1 ... i_m`"))?;
        let mut cell = Vec::with_capacity(m);
        for _ in 0..m {
            let i: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| perr(ln, "cell line has fewer indices than announced"))?;
            if i >= n_vertices {
                return Err(perr(ln, &format!("vertex index {i} out of range ({n_vertices} vertices)")));
            }
            cell.push(i);
        }
        if it.next().is_some() {
            return Err(perr(ln, "cell line has more indices than announced"));
        }
        cells.push(cell);
    }

    PolygonalMesh::new(vertices, cells)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<PolygonalMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    read_mesh_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE_SQUARE: &str = "vem-mesh 1\n4 1\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 3\n";

    #[test]
    fn reads_single_square() {
        let m = read_mesh_str(SINGLE_SQUARE).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_cells(), 1);
    }

    #[test]
    fn round_trip_is_exact() {
        let m = read_mesh_str(SINGLE_SQUARE).unwrap();
        let s = write_mesh_string(&m);
        let m2 = read_mesh_str(&s).unwrap();
        assert_eq!(m.cells, m2.cells);
        for (a, b) in m.vertices.iter().zip(m2.vertices.iter()) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
    }

    #[test]
    fn out_of_range_index_names_the_line() {
        let bad = "vem-mesh 1\n4 1\n0 0\n1 0\n1 1\n0 1\n4 0 1 2 4\n";
        match read_mesh_str(bad) {
            Err(MeshError::Parse { line, msg }) => {
                assert_eq!(line, 7);
                assert!(msg.contains("out of range"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
