//! Gauss-Legendre rules on [-1, 1], tensor rules on cells and rules on edges.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Largest supported number of Gauss points.
pub const MAX_POINTS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Tensor rule mapped to a physical cell.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRuleCell {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

/// A rule mapped onto an edge segment.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRuleEdge {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

/// Legendre polynomial P_m and its derivative at `x` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre rule with `m` points, nodes in ascending order.
pub fn gauss_1d(m: usize) -> Result<QuadRule1D> {
    if !(1..=MAX_POINTS).contains(&m) {
        return Err(Error::QuadratureOrder(m));
    }
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if m % 2 == 1 && i == m / 2 {
            x = 0.0;
            dp = legendre(m, 0.0).1;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    Ok(QuadRule1D { nodes, weights })
}

impl QuadRule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over [-1, 1].
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

impl QuadRuleCell {
    /// Tensor Gauss rule on the rectangle `[x0, x1] x [y0, y1]`.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, mx: usize, my: usize) -> Result<Self> {
        let rx = gauss_1d(mx)?;
        let ry = gauss_1d(my)?;
        let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        let (sx, sy) = (0.5 * (x1 - x0), 0.5 * (y1 - y0));
        let mut points = Vec::with_capacity(mx * my);
        let mut weights = Vec::with_capacity(mx * my);
        for (&yn, &yw) in ry.nodes.iter().zip(&ry.weights) {
            for (&xn, &xw) in rx.nodes.iter().zip(&rx.weights) {
                points.push([cx + sx * xn, cy + sy * yn]);
                weights.push(xw * yw * sx * sy);
            }
        }
        Ok(Self { points, weights })
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

impl QuadRuleEdge {
    /// Gauss rule on the straight segment from `a` to `b`.
    pub fn segment(a: Point, b: Point, m: usize) -> Result<Self> {
        let r = gauss_1d(m)?;
        let half = 0.5 * ((b[0] - a[0]).hypot(b[1] - a[1]));
        let points = r
            .nodes
            .iter()
            .map(|&t| {
                let s = 0.5 * (1.0 + t);
                [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
            })
            .collect();
        let weights = r.weights.iter().map(|w| w * half).collect();
        Ok(Self { points, weights })
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Tensor rule on `cell` of `mesh`, exact per variable up to degree `2m - 1`.
pub fn cell_rule(mesh: &Mesh, cell: usize, mx: usize, my: usize) -> Result<QuadRuleCell> {
    let g = mesh.cell_geometry(cell)?;
    QuadRuleCell::rectangle(g.x0, g.x1, g.y0, g.y1, mx, my)
}

/// Gauss rule on `edge` of `mesh`; weights sum to the edge length.
pub fn edge_rule(mesh: &Mesh, edge: usize, m: usize) -> Result<QuadRuleEdge> {
    let [a, b] = mesh.edge_endpoints(edge)?;
    QuadRuleEdge::segment(a, b, m)
}
