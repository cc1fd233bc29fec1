//! Uniform axis-aligned rectangular meshes.
//!
//! Numbering is row-major with `x` running fastest for vertices and cells.
//! Edges are numbered horizontal first (row by row), then vertical. Every edge
//! carries a fixed unit normal `n_E` (`+y` for horizontal, `+x` for vertical)
//! and tangent `t_E`, which is `n_E` rotated a quarter turn counterclockwise.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Domain {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        // written so NaN bounds are rejected as well
        if !(x_min < x_max && y_min < y_max) || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidDomain {
                x_min,
                x_max,
                y_min,
                y_max,
            });
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }
}

impl Default for Domain {
    /// `[0, 2] x [0, 1]`
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 2.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeAxis {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Endpoints ordered by increasing coordinate along the edge.
    pub vertices: [usize; 2],
    pub axis: EdgeAxis,
}

impl Edge {
    /// Fixed unit normal `n_E`.
    pub fn normal(&self) -> Point {
        match self.axis {
            EdgeAxis::Horizontal => [0.0, 1.0],
            EdgeAxis::Vertical => [1.0, 0.0],
        }
    }

    /// Fixed unit tangent `t_E`, the normal rotated counterclockwise.
    pub fn tangent(&self) -> Point {
        let n = self.normal();
        [-n[1], n[0]]
    }
}

/// Bounding box of one cell, `[x0, x1] x [y0, y1]`, together with its incident
/// entities in local order. Local vertices run counterclockwise from the
/// lower-left corner; local edge `i` joins vertices `i` and `i + 1`, so the
/// edges are bottom, right, top, left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub vertices: [usize; 4],
    pub edges: [usize; 4],
}

impl CellGeometry {
    /// A free-standing rectangle without mesh entity ids.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self {
            x0,
            x1,
            y0,
            y1,
            vertices: [0; 4],
            edges: [0; 4],
        }
    }

    /// The reference square `[-1, 1]^2`.
    pub fn reference() -> Self {
        Self::rectangle(-1.0, 1.0, -1.0, 1.0)
    }

    pub fn hx(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn hy(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn center(&self) -> Point {
        [0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)]
    }

    /// Scaled local coordinates in `[-1, 1]^2`.
    pub fn to_local(&self, p: Point) -> Point {
        [
            (2.0 * p[0] - self.x0 - self.x1) / self.hx(),
            (2.0 * p[1] - self.y0 - self.y1) / self.hy(),
        ]
    }

    pub fn to_physical(&self, q: Point) -> Point {
        let c = self.center();
        [c[0] + 0.5 * self.hx() * q[0], c[1] + 0.5 * self.hy() * q[1]]
    }

    /// Local vertex `i` (0-based, counterclockwise from lower-left).
    pub fn vertex(&self, i: usize) -> Point {
        match i % 4 {
            0 => [self.x0, self.y0],
            1 => [self.x1, self.y0],
            2 => [self.x1, self.y1],
            _ => [self.x0, self.y1],
        }
    }

    /// Endpoints of local edge `i` in counterclockwise order.
    pub fn edge_points(&self, i: usize) -> [Point; 2] {
        [self.vertex(i), self.vertex(i + 1)]
    }

    pub fn edge_axis(&self, i: usize) -> EdgeAxis {
        if i % 2 == 0 {
            EdgeAxis::Horizontal
        } else {
            EdgeAxis::Vertical
        }
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        match self.edge_axis(i) {
            EdgeAxis::Horizontal => self.hx(),
            EdgeAxis::Vertical => self.hy(),
        }
    }

    /// Outward unit normal on local edge `i`.
    pub fn outward_normal(&self, i: usize) -> Point {
        match i % 4 {
            0 => [0.0, -1.0],
            1 => [1.0, 0.0],
            2 => [0.0, 1.0],
            _ => [-1.0, 0.0],
        }
    }

    /// Outward normal rotated counterclockwise.
    pub fn tangent(&self, i: usize) -> Point {
        let n = self.outward_normal(i);
        [-n[1], n[0]]
    }

    /// `+1` when the outward normal of local edge `i` agrees with the fixed
    /// edge normal `n_E`, `-1` otherwise (bottom and left edges).
    pub fn orientation(&self, i: usize) -> f64 {
        match i % 4 {
            1 | 2 => 1.0,
            _ => -1.0,
        }
    }

    /// Linear edge weight: `(2x - x' - x'')/hx` on horizontal edges and
    /// `(2y - y' - y'')/hy` on vertical ones.
    pub fn xi(&self, i: usize, p: Point) -> f64 {
        let q = self.to_local(p);
        match self.edge_axis(i) {
            EdgeAxis::Horizontal => q[0],
            EdgeAxis::Vertical => q[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub domain: Domain,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub vertices: Vec<Point>,
    pub cells: Vec<[usize; 4]>,
    pub edges: Vec<Edge>,
    /// Local edges of every cell: bottom, right, top, left.
    pub cell_edges: Vec<[usize; 4]>,
    /// Cells incident to each edge. For interior edges the first cell is the
    /// one `n_E` points away from.
    pub edge_cells: Vec<Vec<usize>>,
    pub boundary_vertex: Vec<bool>,
    pub boundary_edge: Vec<bool>,
}

impl Mesh {
    /// `nx x ny` congruent cells covering `domain`.
    pub fn uniform(domain: Domain, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMeshSize { nx, ny });
        }
        let domain = Domain::new(domain.x_min, domain.x_max, domain.y_min, domain.y_max)?;
        let hx = (domain.x_max - domain.x_min) / nx as f64;
        let hy = (domain.y_max - domain.y_min) / ny as f64;
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let n_horizontal = nx * (ny + 1);
        let hid = |i: usize, j: usize| j * nx + i;
        let vert_id = |i: usize, j: usize| n_horizontal + j * (nx + 1) + i;

        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut boundary_vertex = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                // exact endpoints for the last row/column
                let x = if i == nx { domain.x_max } else { domain.x_min + i as f64 * hx };
                let y = if j == ny { domain.y_max } else { domain.y_min + j as f64 * hy };
                vertices.push([x, y]);
                boundary_vertex.push(i == 0 || i == nx || j == 0 || j == ny);
            }
        }

        let mut edges = Vec::with_capacity(n_horizontal + ny * (nx + 1));
        let mut boundary_edge = Vec::with_capacity(edges.capacity());
        for j in 0..=ny {
            for i in 0..nx {
                edges.push(Edge {
                    vertices: [vid(i, j), vid(i + 1, j)],
                    axis: EdgeAxis::Horizontal,
                });
                boundary_edge.push(j == 0 || j == ny);
            }
        }
        for j in 0..ny {
            for i in 0..=nx {
                edges.push(Edge {
                    vertices: [vid(i, j), vid(i, j + 1)],
                    axis: EdgeAxis::Vertical,
                });
                boundary_edge.push(i == 0 || i == nx);
            }
        }

        let mut cells = Vec::with_capacity(nx * ny);
        let mut cell_edges = Vec::with_capacity(nx * ny);
        let mut edge_cells = vec![Vec::with_capacity(2); edges.len()];
        for j in 0..ny {
            for i in 0..nx {
                cells.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
                cell_edges.push([hid(i, j), vert_id(i + 1, j), hid(i, j + 1), vert_id(i, j)]);
            }
        }
        // Fill edge -> cell incidence so that the cell below / left of an
        // edge comes first.
        for j in 0..=ny {
            for i in 0..nx {
                let e = hid(i, j);
                if j > 0 {
                    edge_cells[e].push((j - 1) * nx + i);
                }
                if j < ny {
                    edge_cells[e].push(j * nx + i);
                }
            }
        }
        for j in 0..ny {
            for i in 0..=nx {
                let e = vert_id(i, j);
                if i > 0 {
                    edge_cells[e].push(j * nx + i - 1);
                }
                if i < nx {
                    edge_cells[e].push(j * nx + i);
                }
            }
        }

        Ok(Self {
            domain,
            nx,
            ny,
            hx,
            hy,
            vertices,
            cells,
            edges,
            cell_edges,
            edge_cells,
            boundary_vertex,
            boundary_edge,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Cell diagonal `h = sqrt(hx^2 + hy^2)`.
    pub fn h(&self) -> f64 {
        self.hx.hypot(self.hy)
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_vertices()).filter(|&v| !self.boundary_vertex[v])
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_edges()).filter(|&e| !self.boundary_edge[e])
    }

    pub fn cell_geometry(&self, cell: usize) -> Result<CellGeometry> {
        let vertices = *self.cells.get(cell).ok_or(Error::IndexOutOfRange {
            what: "cell",
            index: cell,
            count: self.num_cells(),
        })?;
        let [x0, y0] = self.vertices[vertices[0]];
        let [x1, y1] = self.vertices[vertices[2]];
        Ok(CellGeometry {
            x0,
            x1,
            y0,
            y1,
            vertices,
            edges: self.cell_edges[cell],
        })
    }

    pub fn edge_endpoints(&self, edge: usize) -> Result<[Point; 2]> {
        let e = self.edges.get(edge).ok_or(Error::IndexOutOfRange {
            what: "edge",
            index: edge,
            count: self.num_edges(),
        })?;
        Ok([self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]])
    }

    /// Local index of `edge` within `cell`, if incident.
    pub fn local_edge(&self, cell: usize, edge: usize) -> Option<usize> {
        self.cell_edges[cell].iter().position(|&e| e == edge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_domain() -> Domain {
        Domain::default()
    }

    #[test]
    fn counts_and_euler() {
        let m = Mesh::uniform(default_domain(), 4, 4).unwrap();
        assert_eq!((m.num_vertices(), m.num_edges(), m.num_cells()), (25, 40, 16));
        assert_eq!(m.num_vertices() as i64 - m.num_edges() as i64 + m.num_cells() as i64, 1);
        for (nx, ny) in [(1, 1), (3, 5), (7, 2)] {
            let m = Mesh::uniform(default_domain(), nx, ny).unwrap();
            assert_eq!(m.num_vertices(), (nx + 1) * (ny + 1));
            assert_eq!(m.num_edges(), nx * (ny + 1) + ny * (nx + 1));
            assert_eq!(m.num_vertices() + m.num_cells(), m.num_edges() + 1);
        }
    }

    #[test]
    fn sizes() {
        let m = Mesh::uniform(default_domain(), 8, 8).unwrap();
        assert_eq!(m.hx, 0.25);
        assert_eq!(m.hy, 0.125);
        assert_eq!(m.h(), 0.078125f64.sqrt());
    }

    #[test]
    fn interior_entities_2x2() {
        let m = Mesh::uniform(default_domain(), 2, 2).unwrap();
        assert_eq!(m.interior_edges().count(), 4);
        assert_eq!(m.interior_vertices().collect::<Vec<_>>(), vec![4]);
    }

    #[test]
    fn incidence() {
        let m = Mesh::uniform(default_domain(), 3, 4).unwrap();
        for e in 0..m.num_edges() {
            let expect = if m.boundary_edge[e] { 1 } else { 2 };
            assert_eq!(m.edge_cells[e].len(), expect);
            if expect == 2 {
                // the two cells see the edge with opposite outward normals and
                // the first one agrees with n_E
                let [k1, k2] = [m.edge_cells[e][0], m.edge_cells[e][1]];
                let (g1, g2) = (m.cell_geometry(k1).unwrap(), m.cell_geometry(k2).unwrap());
                let (l1, l2) = (m.local_edge(k1, e).unwrap(), m.local_edge(k2, e).unwrap());
                assert_eq!(g1.orientation(l1), 1.0);
                assert_eq!(g2.orientation(l2), -1.0);
                let (n1, n2) = (g1.outward_normal(l1), g2.outward_normal(l2));
                assert_eq!([n1[0] + n2[0], n1[1] + n2[1]], [0.0, 0.0]);
                assert_eq!(n1, m.edges[e].normal());
            }
        }
    }

    #[test]
    fn cell_geometry_layout() {
        let m = Mesh::uniform(default_domain(), 4, 4).unwrap();
        let g = m.cell_geometry(0).unwrap();
        assert_eq!((g.x0, g.x1, g.y0, g.y1), (0.0, 0.5, 0.0, 0.25));
        for c in 0..m.num_cells() {
            let g = m.cell_geometry(c).unwrap();
            assert!((g.hx() - m.hx).abs() < 1e-15 && (g.hy() - m.hy).abs() < 1e-15);
            for i in 0..4 {
                let e = m.edges[g.edges[i]];
                let axis = if i % 2 == 0 { EdgeAxis::Horizontal } else { EdgeAxis::Vertical };
                assert_eq!(e.axis, axis);
                let [a, b] = g.edge_points(i);
                let ends = m.edge_endpoints(g.edges[i]).unwrap();
                assert!(ends == [a, b] || ends == [b, a]);
            }
            // top edge outward normal is +n_E, bottom is -n_E
            assert_eq!(g.outward_normal(2), m.edges[g.edges[2]].normal());
            let n = m.edges[g.edges[0]].normal();
            assert_eq!(g.outward_normal(0), [-n[0], -n[1]]);
        }
        assert!(matches!(
            m.cell_geometry(16),
            Err(Error::IndexOutOfRange { what: "cell", .. })
        ));
    }

    #[test]
    fn tangent_is_rotated_normal() {
        let e = Edge {
            vertices: [0, 1],
            axis: EdgeAxis::Horizontal,
        };
        assert_eq!(e.tangent(), [-1.0, 0.0]);
        let e = Edge {
            vertices: [0, 1],
            axis: EdgeAxis::Vertical,
        };
        assert_eq!(e.tangent(), [0.0, 1.0]);
    }

    #[test]
    fn xi_agrees_across_shared_edge() {
        let m = Mesh::uniform(default_domain(), 3, 3).unwrap();
        for e in m.interior_edges() {
            let [k1, k2] = [m.edge_cells[e][0], m.edge_cells[e][1]];
            let (g1, g2) = (m.cell_geometry(k1).unwrap(), m.cell_geometry(k2).unwrap());
            let (l1, l2) = (m.local_edge(k1, e).unwrap(), m.local_edge(k2, e).unwrap());
            let [a, b] = m.edge_endpoints(e).unwrap();
            for t in [0.0, 0.3, 0.5, 1.0] {
                let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                assert!((g1.xi(l1, p) - g2.xi(l2, p)).abs() < 1e-14);
                assert!((g1.xi(l1, p) - (2.0 * t - 1.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let a = Mesh::uniform(default_domain(), 5, 3).unwrap();
        let b = Mesh::uniform(default_domain(), 5, 3).unwrap();
        assert_eq!(a, b);
        assert!(Mesh::uniform(default_domain(), 0, 3).is_err());
        assert!(Domain::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(Domain::new(0.0, 1.0, 2.0, 1.0).is_err());
        assert!(Domain::new(f64::NAN, 1.0, 0.0, 1.0).is_err());
    }
}
