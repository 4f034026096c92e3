//! Doubly-periodic planar cell complexes and their centroidal duals.
//!
//! Periodicity is handled by identification: every vertex, edge and cell has
//! one global index, and geometry across the seam is recovered from integer
//! wrap offsets stored on the edges. Cells are stored as counterclockwise
//! loops of signed edges; vertex loops (with the unwrapped coordinates needed
//! for element maps) are derived from the edge walk.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub mod io;

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellKind {
    Triangle,
    Quadrilateral,
    Hexagon,
}

impl CellKind {
    pub fn name(self) -> &'static str {
        match self {
            CellKind::Triangle => "triangle",
            CellKind::Quadrilateral => "quadrilateral",
            CellKind::Hexagon => "hexagon",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "triangle" | "tri" => Some(CellKind::Triangle),
            "quadrilateral" | "quad" => Some(CellKind::Quadrilateral),
            "hexagon" | "hex" => Some(CellKind::Hexagon),
            _ => None,
        }
    }

    fn from_edge_count(n: usize) -> Option<Self> {
        match n {
            3 => Some(CellKind::Triangle),
            4 => Some(CellKind::Quadrilateral),
            6 => Some(CellKind::Hexagon),
            _ => None,
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An oriented edge from `v[0]` to the periodic image `v[1] + shift·(Lx, Ly)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub v: [usize; 2],
    pub shift: [i32; 2],
}

/// A cell as a counterclockwise loop of `(edge, sign)` pairs; sign is +1
/// when the loop traverses the edge along its orientation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub edges: Vec<(usize, i8)>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    kind: CellKind,
    lx: f64,
    ly: f64,
    vertices: Vec<Point>,
    edges: Vec<Edge>,
    cells: Vec<Cell>,
    // derived
    cell_vertices: Vec<Vec<usize>>,
    cell_positions: Vec<Vec<Point>>,
    edge_cells: Vec<[(usize, usize); 2]>,
}

/// Signed integer incidence matrices of the cell complex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceMatrices {
    /// `E × V`: row `e` has −1 at its start vertex and +1 at its end vertex.
    pub d01_topo: Vec<Vec<(usize, i32)>>,
    /// `C × E`: row `c` lists the signed edges of the cell boundary.
    pub d12_topo: Vec<Vec<(usize, i32)>>,
    pub n_vertices: usize,
    pub n_edges: usize,
}

impl IncidenceMatrices {
    /// `d12 · d01` in exact integer arithmetic, as a dense `C × V` table of
    /// nonzero entries only.
    pub fn composition_nonzeros(&self) -> Vec<(usize, usize, i64)> {
        let mut out = Vec::new();
        for (c, row) in self.d12_topo.iter().enumerate() {
            let mut acc: HashMap<usize, i64> = HashMap::new();
            for &(e, s) in row {
                for &(v, t) in &self.d01_topo[e] {
                    *acc.entry(v).or_insert(0) += (s * t) as i64;
                }
            }
            let mut nz: Vec<_> = acc.into_iter().filter(|&(_, x)| x != 0).collect();
            nz.sort();
            out.extend(nz.into_iter().map(|(v, x)| (c, v, x)));
        }
        out
    }

    pub fn d01_csr(&self) -> crate::linalg::CsrMatrix {
        let mut t = crate::linalg::Triplets::new(self.d01_topo.len(), self.n_vertices);
        for (e, row) in self.d01_topo.iter().enumerate() {
            for &(v, s) in row {
                t.push(e, v, s as f64);
            }
        }
        t.to_csr()
    }

    pub fn d12_csr(&self) -> crate::linalg::CsrMatrix {
        let mut t = crate::linalg::Triplets::new(self.d12_topo.len(), self.n_edges);
        for (c, row) in self.d12_topo.iter().enumerate() {
            for &(e, s) in row {
                t.push(c, e, s as f64);
            }
        }
        t.to_csr()
    }
}

fn polygon_area(p: &[Point]) -> f64 {
    let n = p.len();
    let mut a = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        a += p[i][0] * p[j][1] - p[j][0] * p[i][1];
    }
    0.5 * a
}

fn polygon_centroid(p: &[Point]) -> Point {
    let n = p.len();
    let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
    // shift to the first vertex to limit cancellation
    let o = p[0];
    for i in 0..n {
        let j = (i + 1) % n;
        let (xi, yi) = (p[i][0] - o[0], p[i][1] - o[1]);
        let (xj, yj) = (p[j][0] - o[0], p[j][1] - o[1]);
        let cr = xi * yj - xj * yi;
        a += cr;
        cx += (xi + xj) * cr;
        cy += (yi + yj) * cr;
    }
    [o[0] + cx / (3.0 * a), o[1] + cy / (3.0 * a)]
}

impl Mesh {
    /// Assemble a mesh from explicit edges and edge loops, deriving vertex
    /// loops and validating every invariant.
    pub fn from_parts(kind: CellKind, lx: f64, ly: f64, vertices: Vec<Point>, edges: Vec<Edge>, cells: Vec<Cell>) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidMeshParameters(format!("box size must be positive, got {lx} x {ly}")));
        }
        let mut mesh = Mesh {
            kind,
            lx,
            ly,
            vertices,
            edges,
            cells,
            cell_vertices: Vec::new(),
            cell_positions: Vec::new(),
            edge_cells: Vec::new(),
        };
        mesh.derive()?;
        mesh.validate()?;
        Ok(mesh)
    }

    /// Build from cells given as counterclockwise vertex loops with the
    /// periodic image shift of each vertex. Edges are oriented from the lower
    /// to the higher global vertex id.
    pub fn from_vertex_loops(kind: CellKind, lx: f64, ly: f64, vertices: Vec<Point>, loops: &[Vec<(usize, [i32; 2])>]) -> Result<Self> {
        let mut edge_index: HashMap<(usize, usize, [i32; 2]), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut cells = Vec::with_capacity(loops.len());
        for (c, lp) in loops.iter().enumerate() {
            let mut cell_edges = Vec::with_capacity(lp.len());
            for k in 0..lp.len() {
                let (a, sa) = lp[k];
                let (b, sb) = lp[(k + 1) % lp.len()];
                if a == b {
                    return Err(Error::InvalidMeshParameters(format!(
                        "cell {c} is adjacent to itself through the periodic seam; increase the resolution"
                    )));
                }
                let (lo, hi, dshift, sign) = if a < b {
                    (a, b, [sb[0] - sa[0], sb[1] - sa[1]], 1i8)
                } else {
                    (b, a, [sa[0] - sb[0], sa[1] - sb[1]], -1i8)
                };
                let key = (lo, hi, dshift);
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(Edge { v: [lo, hi], shift: dshift });
                    edges.len() - 1
                });
                cell_edges.push((e, sign));
            }
            cells.push(Cell { edges: cell_edges });
        }
        Mesh::from_parts(kind, lx, ly, vertices, edges, cells)
    }

    fn derive(&mut self) -> Result<()> {
        let nv = self.vertices.len();
        for (e, edge) in self.edges.iter().enumerate() {
            if edge.v[0] >= nv || edge.v[1] >= nv {
                return Err(Error::InvalidMesh(format!("edge {e} references a missing vertex")));
            }
        }
        self.cell_vertices.clear();
        self.cell_positions.clear();
        let mut edge_cells: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.edges.len()];
        for (c, cell) in self.cells.iter().enumerate() {
            if cell.edges.len() < 3 {
                return Err(Error::InvalidMesh(format!("cell {c} has fewer than 3 edges")));
            }
            let mut verts = Vec::with_capacity(cell.edges.len());
            let mut pos = Vec::with_capacity(cell.edges.len());
            let (e0, s0) = cell.edges[0];
            if e0 >= self.edges.len() {
                return Err(Error::InvalidMesh(format!("cell {c} references a missing edge")));
            }
            let start = if s0 > 0 { self.edges[e0].v[0] } else { self.edges[e0].v[1] };
            let mut p = self.vertices[start];
            let mut current = start;
            for (k, &(e, s)) in cell.edges.iter().enumerate() {
                if e >= self.edges.len() {
                    return Err(Error::InvalidMesh(format!("cell {c} references a missing edge")));
                }
                let edge = self.edges[e];
                let (from, to) = if s > 0 { (edge.v[0], edge.v[1]) } else { (edge.v[1], edge.v[0]) };
                if from != current {
                    return Err(Error::InvalidMesh(format!("cell {c}: edge loop is not connected at position {k}")));
                }
                verts.push(from);
                pos.push(p);
                let vec = self.edge_vector(e);
                p = [p[0] + s as f64 * vec[0], p[1] + s as f64 * vec[1]];
                current = to;
                edge_cells[e].push((c, k));
            }
            if current != start {
                return Err(Error::InvalidMesh(format!("cell {c}: edge loop does not return to its start vertex")));
            }
            let scale = self.lx.max(self.ly);
            if (p[0] - pos[0][0]).abs() > 1e-9 * scale || (p[1] - pos[0][1]).abs() > 1e-9 * scale {
                return Err(Error::InvalidMesh(format!("cell {c}: signed edge vectors do not sum to zero")));
            }
            self.cell_vertices.push(verts);
            self.cell_positions.push(pos);
        }
        self.edge_cells = Vec::with_capacity(self.edges.len());
        for (e, ec) in edge_cells.into_iter().enumerate() {
            if ec.len() != 2 {
                return Err(Error::InvalidMesh(format!("edge {e} is shared by {} cells (expected 2)", ec.len())));
            }
            self.edge_cells.push([ec[0], ec[1]]);
        }
        Ok(())
    }

    /// Check the torus invariants: Euler characteristic, two cells per edge
    /// with opposite induced orientations, positive cell areas.
    pub fn validate(&self) -> Result<()> {
        let chi = self.n_vertices() as i64 - self.n_edges() as i64 + self.n_cells() as i64;
        if chi != 0 {
            return Err(Error::InvalidMesh(format!("Euler characteristic is {chi}, expected 0 for a torus")));
        }
        for (e, ec) in self.edge_cells.iter().enumerate() {
            let s0 = self.cells[ec[0].0].edges[ec[0].1].1;
            let s1 = self.cells[ec[1].0].edges[ec[1].1].1;
            if s0 + s1 != 0 {
                return Err(Error::InvalidMesh(format!("edge {e} has equal induced orientations in both cells")));
            }
        }
        for c in 0..self.n_cells() {
            if self.cell_area(c) <= 0.0 {
                return Err(Error::InvalidMesh(format!("cell {c} has nonpositive signed area")));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    pub fn cell(&self, c: usize) -> &Cell {
        &self.cells[c]
    }

    /// Vector from the start vertex to the (periodic image of the) end vertex.
    pub fn edge_vector(&self, e: usize) -> Point {
        let edge = self.edges[e];
        let a = self.vertices[edge.v[0]];
        let b = self.vertices[edge.v[1]];
        [
            b[0] + edge.shift[0] as f64 * self.lx - a[0],
            b[1] + edge.shift[1] as f64 * self.ly - a[1],
        ]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let v = self.edge_vector(e);
        v[0].hypot(v[1])
    }

    /// Counterclockwise vertex ids of a cell; local vertex `k` is the start of
    /// local edge `k` as traversed by the loop.
    pub fn cell_vertices(&self, c: usize) -> &[usize] {
        &self.cell_vertices[c]
    }

    /// Unwrapped coordinates of the cell's vertices, contiguous across the seam.
    pub fn cell_positions(&self, c: usize) -> &[Point] {
        &self.cell_positions[c]
    }

    /// The two `(cell, local edge index)` pairs sharing edge `e`; the first has
    /// sign +1 (the cell to the left of the edge).
    pub fn edge_cells(&self, e: usize) -> [(usize, usize); 2] {
        let [a, b] = self.edge_cells[e];
        if self.cells[a.0].edges[a.1].1 > 0 {
            [a, b]
        } else {
            [b, a]
        }
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        polygon_area(&self.cell_positions[c])
    }

    /// Area centroid in the cell's unwrapped frame.
    pub fn cell_centroid_unwrapped(&self, c: usize) -> Point {
        polygon_centroid(&self.cell_positions[c])
    }

    pub fn wrap(&self, p: Point) -> Point {
        [p[0].rem_euclid(self.lx), p[1].rem_euclid(self.ly)]
    }

    pub fn period(&self) -> Point {
        [self.lx, self.ly]
    }

    /// Total signed area, which equals `Lx·Ly` for a valid tiling.
    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Smallest edge length, used as the mesh length scale for CFL estimates.
    pub fn min_edge_length(&self) -> f64 {
        (0..self.n_edges()).map(|e| self.edge_length(e)).fold(f64::INFINITY, f64::min)
    }

    pub fn incidence(&self) -> IncidenceMatrices {
        assemble_incidence(self)
    }

    /// Same topology with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Mesh> {
        let verts = self.vertices.iter().map(|p| [p[0] * factor, p[1] * factor]).collect();
        Mesh::from_parts(self.kind, self.lx * factor, self.ly * factor, verts, self.edges.clone(), self.cells.clone())
    }
}

/// Structured periodic mesh of `nx × ny` quadrilaterals, the same grid split
/// along one diagonal into triangles, or the centroidal dual of that
/// triangulation (hexagons).
pub fn build_periodic_mesh(kind: CellKind, nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Mesh> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidMeshParameters(format!(
            "nx and ny must be at least 2 to avoid self-adjacent cells across the seam (got {nx} x {ny})"
        )));
    }
    if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
        return Err(Error::InvalidMeshParameters(format!("box size must be positive, got {lx} x {ly}")));
    }
    let hx = lx / nx as f64;
    let hy = ly / ny as f64;
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            vertices.push([i as f64 * hx, j as f64 * hy]);
        }
    }
    // vertex id and wrap shift of lattice point (i, j) with i <= nx, j <= ny
    let node = |i: usize, j: usize| -> (usize, [i32; 2]) {
        let (si, ii) = if i == nx { (1, 0) } else { (0, i) };
        let (sj, jj) = if j == ny { (1, 0) } else { (0, j) };
        (jj * nx + ii, [si, sj])
    };
    match kind {
        CellKind::Quadrilateral => {
            let mut loops = Vec::with_capacity(nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    loops.push(vec![node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]);
                }
            }
            Mesh::from_vertex_loops(kind, lx, ly, vertices, &loops)
        }
        CellKind::Triangle => {
            let mut loops = Vec::with_capacity(2 * nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    loops.push(vec![node(i, j), node(i + 1, j), node(i + 1, j + 1)]);
                    loops.push(vec![node(i, j), node(i + 1, j + 1), node(i, j + 1)]);
                }
            }
            Mesh::from_vertex_loops(kind, lx, ly, vertices, &loops)
        }
        CellKind::Hexagon => {
            let tri = build_periodic_mesh(CellKind::Triangle, nx, ny, lx, ly)?;
            let dual = build_dual_mesh(&tri)?;
            reexport_with_lexicographic_edges(&dual, CellKind::Hexagon)
        }
    }
}

/// Rebuild a mesh from its vertex loops so that edges follow the
/// lower-id-to-higher-id orientation convention.
fn reexport_with_lexicographic_edges(m: &Mesh, kind: CellKind) -> Result<Mesh> {
    let mut loops = Vec::with_capacity(m.n_cells());
    for c in 0..m.n_cells() {
        let verts = m.cell_vertices(c);
        let pos = m.cell_positions(c);
        // shifts relative to the first vertex's stored coordinate
        let base = m.vertices[verts[0]];
        let base_pos = pos[0];
        let lp = verts
            .iter()
            .zip(pos)
            .map(|(&v, p)| {
                let x = m.vertices[v];
                let sx = ((p[0] - base_pos[0] + base[0] - x[0]) / m.lx).round() as i32;
                let sy = ((p[1] - base_pos[1] + base[1] - x[1]) / m.ly).round() as i32;
                (v, [sx, sy])
            })
            .collect();
        loops.push(lp);
    }
    Mesh::from_vertex_loops(kind, m.lx, m.ly, m.vertices.clone(), &loops)
}

/// Centroidal dual: one dual vertex per primal cell (at its centroid), one
/// dual edge per primal edge crossing it from the left cell to the right
/// cell, one dual cell per primal vertex.
pub fn build_dual_mesh(m: &Mesh) -> Result<Mesh> {
    let (lx, ly) = (m.lx, m.ly);
    let centroids_unwrapped: Vec<Point> = (0..m.n_cells()).map(|c| m.cell_centroid_unwrapped(c)).collect();
    let dual_vertices: Vec<Point> = centroids_unwrapped.iter().map(|&p| m.wrap(p)).collect();

    // centroid of cell c expressed in the frame where edge e starts at its
    // stored start-vertex coordinate
    let centroid_in_edge_frame = |e: usize, c: usize, local: usize| -> Point {
        let s = m.cells[c].edges[local].1;
        let pos = m.cell_positions(c);
        let n = pos.len();
        // loop position of the edge's start vertex
        let p_start = if s > 0 { pos[local] } else { pos[(local + 1) % n] };
        let x_start = m.vertices[m.edges[e].v[0]];
        let cu = centroids_unwrapped[c];
        [cu[0] - p_start[0] + x_start[0], cu[1] - p_start[1] + x_start[1]]
    };

    let mut dual_edges = Vec::with_capacity(m.n_edges());
    
    for e in 0..m.n_edges() {
        let [(cl, kl), (cr, kr)] = m.edge_cells(e);
        let pl = centroid_in_edge_frame(e, cl, kl);
        let pr = centroid_in_edge_frame(e, cr, kr);
        let wl = dual_vertices[cl];
        let wr = dual_vertices[cr];
        let shift = [
            ((pr[0] - pl[0] - (wr[0] - wl[0])) / lx).round() as i32,
            ((pr[1] - pl[1] - (wr[1] - wl[1])) / ly).round() as i32,
        ];
        dual_edges.push(Edge { v: [cl, cr], shift });

    }

    // dual cell around each primal vertex: incident primal edges sorted by
    // the angle of their outward direction
    let mut incident: Vec<Vec<(usize, bool)>> = vec![Vec::new(); m.n_vertices()];
    for (e, edge) in m.edges.iter().enumerate() {
        incident[edge.v[0]].push((e, true));
        incident[edge.v[1]].push((e, false));
    }
    let mut dual_cells = Vec::with_capacity(m.n_vertices());
    for (v, inc) in incident.iter().enumerate() {
        let mut items: Vec<(f64, usize, i8)> = inc
            .iter()
            .map(|&(e, outgoing)| {
                let ev = m.edge_vector(e);
                let dir = if outgoing { ev } else { [-ev[0], -ev[1]] };
                // outgoing edges are crossed clockwise around v
                let sign = if outgoing { -1 } else { 1 };
                (dir[1].atan2(dir[0]), e, sign)
            })
            .collect();
        items.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // the dual edge crossing the edge at angle θ runs between the cells
        // on either side; the ccw loop visits them in angle order, starting
        // from the edge whose dual edge ends (ccw sense) at the next one
        let mut loop_edges: Vec<(usize, i8)> = items.iter().map(|&(_, e, s)| (e, s)).collect();
        // rotate so that the loop is connected: dual edge k must end where
        // dual edge k+1 starts
        let end_of = |(e, s): (usize, i8)| if s > 0 { dual_edges[e].v[1] } else { dual_edges[e].v[0] };
        let start_of = |(e, s): (usize, i8)| if s > 0 { dual_edges[e].v[0] } else { dual_edges[e].v[1] };
        let n = loop_edges.len();
        let connected = (0..n).all(|k| end_of(loop_edges[k]) == start_of(loop_edges[(k + 1) % n]));
        if !connected {
            loop_edges.reverse();
            let connected_rev = (0..n).all(|k| end_of(loop_edges[k]) == start_of(loop_edges[(k + 1) % n]));
            if !connected_rev {
                return Err(Error::InvalidMesh(format!("cannot order the dual cell around primal vertex {v}")));
            }
        }
        dual_cells.push(Cell { edges: loop_edges });
    }

    let max_edges = dual_cells.iter().map(|c| c.edges.len()).max().unwrap_or(0);
    let kind = CellKind::from_edge_count(max_edges)
        .ok_or_else(|| Error::InvalidMesh(format!("dual cells with {max_edges} edges are not a supported kind")))?;
    let dual = Mesh::from_parts(kind, lx, ly, dual_vertices, dual_edges, dual_cells);
    let dual = match dual {
        Ok(d) => d,
        Err(Error::InvalidMesh(msg)) if msg.contains("nonpositive signed area") => {
            let c = msg.split_whitespace().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
            return Err(Error::DualSelfIntersection { cell: c });
        }
        Err(e) => return Err(e),
    };
    // each dual cell must be star-shaped about its primal vertex
    for v in 0..dual.n_cells() {
        let pos = dual.cell_positions(v);
        let n = pos.len();
        let c = m.vertices[v];
        // bring the primal vertex into the dual cell's frame
        let cen = polygon_centroid(pos);
        let cx = c[0] + ((cen[0] - c[0]) / lx).round() * lx;
        let cy = c[1] + ((cen[1] - c[1]) / ly).round() * ly;
        for k in 0..n {
            let a = pos[k];
            let b = pos[(k + 1) % n];
            let cr = (a[0] - cx) * (b[1] - cy) - (a[1] - cy) * (b[0] - cx);
            if cr <= 0.0 {
                return Err(Error::DualSelfIntersection { cell: v });
            }
        }
    }
    Ok(dual)
}

pub fn assemble_incidence(m: &Mesh) -> IncidenceMatrices {
    let d01_topo = m.edges.iter().map(|e| vec![(e.v[0], -1), (e.v[1], 1)]).collect();
    let d12_topo = m
        .cells
        .iter()
        .map(|c| c.edges.iter().map(|&(e, s)| (e, s as i32)).collect())
        .collect();
    IncidenceMatrices {
        d01_topo,
        d12_topo,
        n_vertices: m.n_vertices(),
        n_edges: m.n_edges(),
    }
}
