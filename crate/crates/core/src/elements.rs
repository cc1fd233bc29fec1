//! Local finite elements on axis-aligned rectangles.
//!
//! Every family is described by a set of generators (polynomials in the
//! scaled coordinates `(x^, y^)` of the cell) and a list of DoF functionals.
//! The nodal basis is obtained by inverting the DoF matrix `M[i][j] =
//! dof_i(generator_j)`, so unisolvency is checked constructively.
//!
//! Normal-type DoFs use the outward normal of the cell; reconciling them with
//! the fixed edge normals happens in [`crate::spaces`].

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::functions::{Function2d, VectorFunction2d};
use crate::mesh::{CellGeometry, Mesh, Point};
use crate::poly::LocalPoly;
use crate::quadrature::{QuadRuleCell, QuadRuleEdge};

/// A shape function: one polynomial per component (scalar families leave the
/// second component zero).
pub type Shape = [LocalPoly; 2];

/// Edge Gauss points used when a DoF matrix is built. Exact for the polynomial
/// integrands of every family here (degree at most 5 along an edge).
pub const EXACT_EDGE_POINTS: usize = 3;

/// Edge Gauss points used when DoFs are applied to general smooth functions.
pub const SMOOTH_EDGE_POINTS: usize = 10;

/// DoF matrices with a larger 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementFamily {
    /// `P3 + span{x^4, y^4}` with vertex values, edge integrals and edge
    /// integrals of the normal derivative.
    Plate12,
    /// `[P1]^2 + curl span{x^3, x^2 y, x y^2, y^3, x^4, y^4}` with edge
    /// normal fluxes, first moments of the normal flux and tangential fluxes.
    Velocity12,
    /// `P3 + span{x^3 y, x y^3}` with value and gradient at the vertices.
    Adini,
    /// Constants, DoF is the cell mean.
    PressureP0,
    /// `P1`, DoFs are the cell mean and the first moments against `x^`, `y^`.
    LocalP1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueRank {
    Scalar,
    Vector,
}

impl ElementFamily {
    pub const ALL: [ElementFamily; 5] = [
        ElementFamily::Plate12,
        ElementFamily::Velocity12,
        ElementFamily::Adini,
        ElementFamily::PressureP0,
        ElementFamily::LocalP1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ElementFamily::Plate12 => "plate12",
            ElementFamily::Velocity12 => "velocity12",
            ElementFamily::Adini => "adini",
            ElementFamily::PressureP0 => "pressure_p0",
            ElementFamily::LocalP1 => "local_p1",
        }
    }

    pub fn dof_count(self) -> usize {
        match self {
            ElementFamily::Plate12 | ElementFamily::Velocity12 | ElementFamily::Adini => 12,
            ElementFamily::PressureP0 => 1,
            ElementFamily::LocalP1 => 3,
        }
    }

    pub fn value_rank(self) -> ValueRank {
        match self {
            ElementFamily::Velocity12 => ValueRank::Vector,
            _ => ValueRank::Scalar,
        }
    }

    pub fn is_vector(self) -> bool {
        self.value_rank() == ValueRank::Vector
    }

    /// DoF functionals in local order.
    pub fn dofs(self) -> Vec<DofFunctional> {
        use DofKind::*;
        use LocalEntity::*;
        let per = |kind: DofKind, entity: fn(usize) -> LocalEntity| {
            (0..4).map(move |i| DofFunctional { kind, entity: entity(i) })
        };
        match self {
            ElementFamily::Plate12 => per(PointValue, Vertex)
                .chain(per(EdgeMean, Edge))
                .chain(per(EdgeNormalDerivMean, Edge))
                .collect(),
            ElementFamily::Velocity12 => per(EdgeNormalComponentMean, Edge)
                .chain(per(EdgeNormalComponentMoment, Edge))
                .chain(per(EdgeTangentialComponentMean, Edge))
                .collect(),
            ElementFamily::Adini => per(PointValue, Vertex)
                .chain(per(PointGradientX, Vertex))
                .chain(per(PointGradientY, Vertex))
                .collect(),
            ElementFamily::PressureP0 => vec![DofFunctional { kind: CellMean, entity: Cell }],
            ElementFamily::LocalP1 => vec![
                DofFunctional { kind: CellMean, entity: Cell },
                DofFunctional { kind: CellMoment { axis: 0 }, entity: Cell },
                DofFunctional { kind: CellMoment { axis: 1 }, entity: Cell },
            ],
        }
    }

    /// Generators of the shape space on `cell`, in scaled coordinates.
    pub fn generators(self, cell: &CellGeometry) -> Vec<Shape> {
        let scalar = |i, j| [LocalPoly::monomial(i, j, 1.0), LocalPoly::zero()];
        let p3 = || (0..=3usize).flat_map(move |d| (0..=d).map(move |j| (d - j, j)));
        match self {
            ElementFamily::Plate12 => p3()
                .chain([(4, 0), (0, 4)])
                .map(|(i, j)| scalar(i, j))
                .collect(),
            ElementFamily::Adini => p3()
                .chain([(3, 1), (1, 3)])
                .map(|(i, j)| scalar(i, j))
                .collect(),
            ElementFamily::Velocity12 => {
                let (sx, sy) = (2.0 / cell.hx(), 2.0 / cell.hy());
                let mut out = Vec::with_capacity(12);
                for c in 0..2 {
                    for (i, j) in [(0, 0), (1, 0), (0, 1)] {
                        let mut s = [LocalPoly::zero(), LocalPoly::zero()];
                        s[c] = LocalPoly::monomial(i, j, 1.0);
                        out.push(s);
                    }
                }
                // physical curl of the scaled monomial
                for (i, j) in [(3, 0), (2, 1), (1, 2), (0, 3), (4, 0), (0, 4)] {
                    let m = LocalPoly::monomial(i, j, 1.0);
                    out.push([m.dy().scale(sy), m.dx().scale(-sx)]);
                }
                out
            }
            ElementFamily::PressureP0 => vec![scalar(0, 0)],
            ElementFamily::LocalP1 => vec![scalar(0, 0), scalar(1, 0), scalar(0, 1)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    PointValue,
    PointGradientX,
    PointGradientY,
    /// `int_E w ds`
    EdgeMean,
    /// `int_E dw/dn ds`, outward normal
    EdgeNormalDerivMean,
    /// `int_E v.n ds`
    EdgeNormalComponentMean,
    /// `int_E (v.n) xi ds`
    EdgeNormalComponentMoment,
    /// `int_E v.t ds`
    EdgeTangentialComponentMean,
    /// `|K|^-1 int_K q`
    CellMean,
    /// `int_K q x^` (axis 0) or `int_K q y^` (axis 1)
    CellMoment { axis: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalEntity {
    Vertex(usize),
    Edge(usize),
    Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofFunctional {
    pub kind: DofKind,
    pub entity: LocalEntity,
}

/// Point data a DoF functional may ask for: the value (one or two components)
/// and the gradient of the first component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: [f64; 2],
    pub grad: [f64; 2],
}

impl Jet {
    pub fn scalar(f: &dyn Function2d, p: Point) -> Self {
        Self {
            value: [f.value(p), 0.0],
            grad: f.gradient(p),
        }
    }

    pub fn vector(v: &dyn VectorFunction2d, p: Point) -> Self {
        Self {
            value: v.value(p),
            grad: [0.0; 2],
        }
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl DofFunctional {
    /// Apply to `f` on `cell`, integrating with `points` Gauss points per
    /// direction.
    pub fn apply(&self, cell: &CellGeometry, f: &dyn Fn(Point) -> Jet, points: usize) -> f64 {
        let edge_rule = |i: usize| {
            let [a, b] = cell.edge_points(i);
            QuadRuleEdge::segment(a, b, points).expect("edge rule order in range")
        };
        match (self.kind, self.entity) {
            (DofKind::PointValue, LocalEntity::Vertex(i)) => f(cell.vertex(i)).value[0],
            (DofKind::PointGradientX, LocalEntity::Vertex(i)) => f(cell.vertex(i)).grad[0],
            (DofKind::PointGradientY, LocalEntity::Vertex(i)) => f(cell.vertex(i)).grad[1],
            (DofKind::EdgeMean, LocalEntity::Edge(i)) => edge_rule(i).integrate(|p| f(p).value[0]),
            (DofKind::EdgeNormalDerivMean, LocalEntity::Edge(i)) => {
                let n = cell.outward_normal(i);
                edge_rule(i).integrate(|p| dot(f(p).grad, n))
            }
            (DofKind::EdgeNormalComponentMean, LocalEntity::Edge(i)) => {
                let n = cell.outward_normal(i);
                edge_rule(i).integrate(|p| dot(f(p).value, n))
            }
            (DofKind::EdgeNormalComponentMoment, LocalEntity::Edge(i)) => {
                let n = cell.outward_normal(i);
                edge_rule(i).integrate(|p| dot(f(p).value, n) * cell.xi(i, p))
            }
            (DofKind::EdgeTangentialComponentMean, LocalEntity::Edge(i)) => {
                let t = cell.tangent(i);
                edge_rule(i).integrate(|p| dot(f(p).value, t))
            }
            (DofKind::CellMean, LocalEntity::Cell) => {
                let r = QuadRuleCell::rectangle(cell.x0, cell.x1, cell.y0, cell.y1, points, points)
                    .expect("cell rule order in range");
                r.integrate(|p| f(p).value[0]) / cell.area()
            }
            (DofKind::CellMoment { axis }, LocalEntity::Cell) => {
                let r = QuadRuleCell::rectangle(cell.x0, cell.x1, cell.y0, cell.y1, points, points)
                    .expect("cell rule order in range");
                r.integrate(|p| f(p).value[0] * cell.to_local(p)[axis])
            }
            (kind, entity) => unreachable!("DoF {kind:?} is not defined on {entity:?}"),
        }
    }
}

/// Evaluate a shape at a physical point: value and first-component gradient.
pub fn shape_jet(shape: &Shape, cell: &CellGeometry, p: Point) -> Jet {
    let q = cell.to_local(p);
    let (sx, sy) = (2.0 / cell.hx(), 2.0 / cell.hy());
    Jet {
        value: [shape[0].eval(q[0], q[1]), shape[1].eval(q[0], q[1])],
        grad: [shape[0].dx().eval(q[0], q[1]) * sx, shape[0].dy().eval(q[0], q[1]) * sy],
    }
}

/// All DoFs of `family` applied to `f` on `cell` with `points` Gauss points
/// per edge (and per direction for cell integrals).
pub fn apply_dofs(family: ElementFamily, cell: &CellGeometry, f: &dyn Fn(Point) -> Jet, points: usize) -> Vec<f64> {
    family.dofs().iter().map(|d| d.apply(cell, f, points)).collect()
}

/// `M[i][j] = dof_i(generator_j)` on `cell`.
pub fn dof_matrix(family: ElementFamily, cell: &CellGeometry) -> DMatrix<f64> {
    let gens = family.generators(cell);
    let dofs = family.dofs();
    let n = dofs.len();
    DMatrix::from_fn(n, n, |i, j| {
        dofs[i].apply(cell, &|p| shape_jet(&gens[j], cell, p), EXACT_EDGE_POINTS)
    })
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Nodal basis of one family on one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementBasis {
    pub family: ElementFamily,
    pub cell: CellGeometry,
    /// `functions[j]` satisfies `dof_i(functions[j]) = delta_ij`.
    pub functions: Vec<Shape>,
    /// Columns hold the generator coefficients of each basis function.
    pub coefficients: DMatrix<f64>,
    /// 2-norm condition number of the DoF matrix.
    pub condition: f64,
}

impl ElementBasis {
    pub fn new(family: ElementFamily, cell: CellGeometry) -> Result<Self> {
        let m = dof_matrix(family, &cell);
        let condition = condition_number(&m);
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::SingularElement { family, condition });
        }
        let coefficients = m
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::SingularElement { family, condition })?;
        let gens = family.generators(&cell);
        let functions = (0..gens.len())
            .map(|j| {
                gens.iter().enumerate().fold([LocalPoly::zero(); 2], |acc, (k, g)| {
                    let c = coefficients[(k, j)];
                    [acc[0].axpy(c, &g[0]), acc[1].axpy(c, &g[1])]
                })
            })
            .collect();
        Ok(Self {
            family,
            cell,
            functions,
            coefficients,
            condition,
        })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// The same basis moved to a congruent cell (only the center changes).
    pub fn on_cell(&self, cell: CellGeometry) -> Self {
        debug_assert!((cell.hx() - self.cell.hx()).abs() <= 1e-12 * cell.hx());
        debug_assert!((cell.hy() - self.cell.hy()).abs() <= 1e-12 * cell.hy());
        Self {
            cell,
            ..self.clone()
        }
    }

    /// Chain-rule factor for a `(dx, dy)` derivative in physical coordinates.
    pub fn derivative_scale(&self, dx: usize, dy: usize) -> f64 {
        (2.0 / self.cell.hx()).powi(dx as i32) * (2.0 / self.cell.hy()).powi(dy as i32)
    }

    /// `(dx, dy)` derivative of every basis function at the scaled point `q`.
    pub fn eval_local(&self, q: Point, dx: usize, dy: usize) -> Vec<[f64; 2]> {
        let s = self.derivative_scale(dx, dy);
        self.functions
            .iter()
            .map(|f| {
                [
                    f[0].derivative(dx, dy).eval(q[0], q[1]) * s,
                    f[1].derivative(dx, dy).eval(q[0], q[1]) * s,
                ]
            })
            .collect()
    }

    /// `(dx, dy)` derivative of every basis function at the physical point `p`.
    pub fn eval(&self, p: Point, dx: usize, dy: usize) -> Result<Vec<[f64; 2]>> {
        if dx + dy > 2 {
            return Err(Error::DerivativeOrder(dx + dy));
        }
        Ok(self.eval_local(self.cell.to_local(p), dx, dy))
    }

    /// `sum_j c_j phi_j` as a polynomial shape.
    pub fn combine(&self, c: &[f64]) -> Shape {
        self.functions.iter().zip(c).fold([LocalPoly::zero(); 2], |acc, (f, &cj)| {
            [acc[0].axpy(cj, &f[0]), acc[1].axpy(cj, &f[1])]
        })
    }

    /// Local interpolant of `f`: the element function sharing all DoFs with it.
    pub fn interpolate(&self, f: &dyn Fn(Point) -> Jet) -> Shape {
        let dofs = apply_dofs(self.family, &self.cell, f, SMOOTH_EDGE_POINTS);
        self.combine(&dofs)
    }
}

/// Nodal basis of `family` on `cell` of `mesh`.
pub fn nodal_basis(mesh: &Mesh, cell: usize, family: ElementFamily) -> Result<ElementBasis> {
    ElementBasis::new(family, mesh.cell_geometry(cell)?)
}

/// `(dx, dy)` derivative of all basis functions at `point`.
pub fn eval_basis(basis: &ElementBasis, point: Point, deriv: (usize, usize)) -> Result<Vec<[f64; 2]>> {
    basis.eval(point, deriv.0, deriv.1)
}

/// `max_ij |dof_i(phi_j) - delta_ij|` for a nodal basis.
pub fn kronecker_residual(b: &ElementBasis) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, f) in b.functions.iter().enumerate() {
        let dofs = apply_dofs(b.family, &b.cell, &|p| shape_jet(f, &b.cell, p), EXACT_EDGE_POINTS);
        for (i, d) in dofs.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((d - want).abs());
        }
    }
    worst
}

/// `sum_k c_k g_k` over the generators of `family` on `cell`.
pub fn random_shape(family: ElementFamily, cell: &CellGeometry, coeffs: &[f64]) -> Shape {
    family
        .generators(cell)
        .iter()
        .zip(coeffs)
        .fold([LocalPoly::zero(); 2], |acc, (g, &c)| [acc[0].axpy(c, &g[0]), acc[1].axpy(c, &g[1])])
}

/// Relative defect of the edge identity
/// `(1/hx) int_E (dw/dy - mean) xi ds = (dw/dy(V_end) - dw/dy(V_start)) / 6`
/// on the bottom and top edges, for a plate shape `w`.
pub fn simpson_defect(w: &Shape, cell: &CellGeometry) -> f64 {
    let wy = |p: Point| shape_jet(w, cell, p).grad[1];
    let mut worst = 0.0f64;
    for (edge, start, end) in [(0usize, 0usize, 1usize), (2, 3, 2)] {
        let [a, b] = cell.edge_points(edge);
        let rule = QuadRuleEdge::segment(a, b, EXACT_EDGE_POINTS).expect("edge rule order in range");
        let mean = rule.integrate(wy) / cell.hx();
        let lhs = rule.integrate(|p| (wy(p) - mean) * cell.xi(edge, p)) / cell.hx();
        let rhs = (wy(cell.vertex(end)) - wy(cell.vertex(start))) / 6.0;
        worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
    }
    worst
}
