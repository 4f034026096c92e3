//! Plain-text mesh format.
//!
//! ```text
//! MESH <kind> <V> <E> <C> <Lx> <Ly>
//! <x> <y>                      (V lines)
//! e <v0> <v1> <sx> <sy>        (E lines; the wrap offset is optional)
//! c <e0> <s0> <e1> <s1> ...    (C lines)
//! ```
//!
//! Floats are written in shortest round-trip form, so `read(write(m))`
//! reproduces every coordinate bit for bit. An edge line without the wrap
//! offset gets the minimum-image offset.

use std::io::{BufRead, Write};

use super::{Cell, CellKind, Edge, Mesh};
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &Mesh, mut w: W) -> Result<()> {
    writeln!(
        w,
        "MESH {} {} {} {} {} {}",
        mesh.kind().name(),
        mesh.n_vertices(),
        mesh.n_edges(),
        mesh.n_cells(),
        mesh.lx(),
        mesh.ly()
    )?;
    for p in mesh.vertices() {
        writeln!(w, "{} {}", p[0], p[1])?;
    }
    for e in mesh.edges() {
        writeln!(w, "e {} {} {} {}", e.v[0], e.v[1], e.shift[0], e.shift[1])?;
    }
    for c in mesh.cells() {
        write!(w, "c")?;
        for &(e, s) in &c.edges {
            write!(w, " {} {}", e, s)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut buf = Vec::new();
    write_mesh(mesh, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("mesh text is ASCII")
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::MeshParse { line, msg: msg.into() }
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("cannot parse {what} from '{tok}'")))
}

pub fn read_mesh<R: BufRead>(r: R) -> Result<Mesh> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty() && !s.trim_start().starts_with('#')).unwrap_or(true));

    let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let header = header?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("MESH") {
        return Err(perr(ln, "expected 'MESH' header"));
    }
    let kind_s: String = parse(tok.next(), ln, "kind")?;
    let kind = CellKind::from_name(&kind_s).ok_or_else(|| perr(ln, format!("unknown cell kind '{kind_s}'")))?;
    let nv: usize = parse(tok.next(), ln, "vertex count")?;
    let ne: usize = parse(tok.next(), ln, "edge count")?;
    let nc: usize = parse(tok.next(), ln, "cell count")?;
    let lx: f64 = parse(tok.next(), ln, "Lx")?;
    let ly: f64 = parse(tok.next(), ln, "Ly")?;
    if tok.next().is_some() {
        return Err(perr(ln, "trailing tokens in header"));
    }

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| perr(0, "unexpected end of file in vertex block"))?;
        let l = l?;
        let mut t = l.split_whitespace();
        let x: f64 = parse(t.next(), ln, "x")?;
        let y: f64 = parse(t.next(), ln, "y")?;
        if t.next().is_some() {
            return Err(perr(ln, "trailing tokens in vertex line"));
        }
        vertices.push([x, y]);
    }

    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = lines.next().ok_or_else(|| perr(0, "unexpected end of file in edge block"))?;
        let l = l?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.first() != Some(&"e") {
            return Err(perr(ln, "expected edge line starting with 'e'"));
        }
        let v0: usize = parse(t.get(1).copied(), ln, "v0")?;
        let v1: usize = parse(t.get(2).copied(), ln, "v1")?;
        if v0 >= nv || v1 >= nv {
            return Err(perr(ln, "edge references a missing vertex"));
        }
        let shift = match t.len() {
            3 => {
                let a = vertices[v0];
                let b = vertices[v1];
                [(-(b[0] - a[0]) / lx).round() as i32, (-(b[1] - a[1]) / ly).round() as i32]
            }
            5 => [parse(t.get(3).copied(), ln, "sx")?, parse(t.get(4).copied(), ln, "sy")?],
            _ => return Err(perr(ln, "edge line must have 3 or 5 fields")),
        };
        edges.push(Edge { v: [v0, v1], shift });
    }

    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = lines.next().ok_or_else(|| perr(0, "unexpected end of file in cell block"))?;
        let l = l?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.first() != Some(&"c") || t.len() % 2 != 1 || t.len() < 7 {
            return Err(perr(ln, "expected cell line 'c e0 s0 e1 s1 ...' with at least 3 edges"));
        }
        let mut ce = Vec::with_capacity(t.len() / 2);
        for k in (1..t.len()).step_by(2) {
            let e: usize = parse(Some(t[k]), ln, "edge id")?;
            let s: i8 = parse(Some(t[k + 1]), ln, "edge sign")?;
            if e >= ne || (s != 1 && s != -1) {
                return Err(perr(ln, "bad edge id or sign"));
            }
            ce.push((e, s));
        }
        cells.push(Cell { edges: ce });
    }
    if let Some((ln, _)) = lines.next() {
        return Err(perr(ln, "trailing content after the cell block"));
    }
    Mesh::from_parts(kind, lx, ly, vertices, edges, cells)
}

pub fn read_mesh_str(s: &str) -> Result<Mesh> {
    read_mesh(s.as_bytes())
}
