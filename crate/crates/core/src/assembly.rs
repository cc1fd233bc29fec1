//! Assembly and solution of the discrete plate and Stokes problems.
//!
//! All cells of a uniform mesh are translates of each other, so local matrices
//! are computed once and basis values are tabulated once at the reference
//! quadrature points. Per-cell load vectors are computed in parallel and
//! scattered in cell order, which keeps the triplet sequence bit-identical
//! across runs and thread counts.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::elements::ElementBasis;
use crate::error::{Error, Result};
use crate::functions::{Function2d, VectorFunction2d};
use crate::mesh::{Mesh, Point};
use crate::quadrature::QuadRuleCell;
use crate::spaces::{divergence_matrix, FeField, FeSpace, SpaceKind};
use crate::sparse::{SolveReport, SparseSystem, SystemKind, TripletMatrix};

/// Gauss points per direction used by the different integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureOrders {
    /// Stiffness matrices (products of shape-function derivatives).
    pub assembly: usize,
    /// Load vectors.
    pub load: usize,
    /// Error norms and postprocessing.
    pub error: usize,
}

impl Default for QuadratureOrders {
    fn default() -> Self {
        Self {
            assembly: 5,
            load: 10,
            error: 10,
        }
    }
}

/// Default relative residual required of every solve.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Basis derivatives tabulated at the points of a rule on the scaled cell
/// `[-1, 1]^2`. `values[d][q][i]` is derivative `d` of basis function `i`.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub points: Vec<Point>,
    /// Reference weights (summing to 4).
    pub weights: Vec<f64>,
    pub derivatives: Vec<(usize, usize)>,
    pub values: Vec<Vec<Vec<[f64; 2]>>>,
}

impl Tabulation {
    pub fn new(element: &ElementBasis, points_per_axis: usize, derivatives: &[(usize, usize)]) -> Result<Self> {
        let rule = QuadRuleCell::rectangle(-1.0, 1.0, -1.0, 1.0, points_per_axis, points_per_axis)?;
        let values = derivatives
            .iter()
            .map(|&(dx, dy)| rule.points.iter().map(|&q| element.eval_local(q, dx, dy)).collect())
            .collect();
        Ok(Self {
            points: rule.points,
            weights: rule.weights,
            derivatives: derivatives.to_vec(),
            values,
        })
    }

    pub fn index(&self, dx: usize, dy: usize) -> usize {
        self.derivatives
            .iter()
            .position(|&d| d == (dx, dy))
            .expect("derivative was tabulated")
    }
}

/// `K[i][j] = int_K sum_d w_d D_d phi_i . D_d phi_j` over the derivatives `d`.
fn local_stiffness(element: &ElementBasis, points: usize, terms: &[((usize, usize), f64)]) -> Result<DMatrix<f64>> {
    let derivs: Vec<_> = terms.iter().map(|t| t.0).collect();
    let tab = Tabulation::new(element, points, &derivs)?;
    let n = element.len();
    let jac = element.cell.area() / 4.0;
    let mut k = DMatrix::zeros(n, n);
    for (t, (_, w)) in terms.iter().enumerate() {
        for (q, qw) in tab.weights.iter().enumerate() {
            let v = &tab.values[t][q];
            for i in 0..n {
                for j in 0..n {
                    k[(i, j)] += w * qw * jac * (v[i][0] * v[j][0] + v[i][1] * v[j][1]);
                }
            }
        }
    }
    Ok(k)
}

/// Local plate energy: Frobenius product of Hessians.
pub fn local_hessian_stiffness(element: &ElementBasis, points: usize) -> Result<DMatrix<f64>> {
    local_stiffness(element, points, &[((2, 0), 1.0), ((1, 1), 2.0), ((0, 2), 1.0)])
}

/// Local vector Laplacian: `int grad u : grad v`.
pub fn local_gradient_stiffness(element: &ElementBasis, points: usize) -> Result<DMatrix<f64>> {
    local_stiffness(element, points, &[((1, 0), 1.0), ((0, 1), 1.0)])
}

/// Scatters one local matrix into every cell, applying signs and dropping
/// eliminated DoFs.
fn scatter_matrix(space: &FeSpace, local: &DMatrix<f64>, out: &mut TripletMatrix) {
    let map = &space.dofmap;
    for c in 0..space.mesh.num_cells() {
        let dofs = map.cell_dofs(c);
        let signs = map.cell_signs(c);
        for (i, gi) in dofs.iter().enumerate() {
            let Some(gi) = *gi else { continue };
            for (j, gj) in dofs.iter().enumerate() {
                let Some(gj) = *gj else { continue };
                let v = signs[i] * signs[j] * local[(i, j)];
                if v != 0.0 {
                    out.push(gi, gj, v);
                }
            }
        }
    }
}

/// `b[g] = sum_K int_K f . phi_g` with `f` evaluated at the tabulated points.
fn load_vector(space: &FeSpace, points: usize, f: &(dyn Fn(Point) -> [f64; 2] + Sync)) -> Result<Vec<f64>> {
    let tab = Tabulation::new(&space.element, points, &[(0, 0)])?;
    let mesh = &space.mesh;
    let jac = mesh.cell_area() / 4.0;
    let n = space.element.len();
    let locals: Vec<Vec<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let g = mesh.cell_geometry(c)?;
            let mut local = vec![0.0; n];
            for (q, w) in tab.weights.iter().enumerate() {
                let fv = f(g.to_physical(tab.points[q]));
                for (i, phi) in tab.values[0][q].iter().enumerate() {
                    local[i] += w * jac * (fv[0] * phi[0] + fv[1] * phi[1]);
                }
            }
            Ok(local)
        })
        .collect::<Result<_>>()?;
    let map = &space.dofmap;
    let mut b = vec![0.0; map.len()];
    for (c, local) in locals.iter().enumerate() {
        for ((g, s), v) in map.cell_dofs(c).iter().zip(map.cell_signs(c)).zip(local) {
            if let Some(g) = *g {
                b[g] += s * v;
            }
        }
    }
    Ok(b)
}

/// Plate system `a_h(u, v) = (f, v)` on `space` (plate12 or Adini).
pub fn assemble_biharmonic(space: &FeSpace, load: &dyn Function2d, quad: QuadratureOrders) -> Result<SparseSystem> {
    if !matches!(space.kind(), SpaceKind::Plate | SpaceKind::Adini) {
        return Err(Error::SpaceMismatch("biharmonic assembly needs a plate space".into()));
    }
    let local = local_hessian_stiffness(&space.element, quad.assembly)?;
    let mut matrix = TripletMatrix::new(space.dim(), space.dim());
    scatter_matrix(space, &local, &mut matrix);
    let rhs = load_vector(space, quad.load, &|p| [load.value(p), 0.0])?;
    Ok(SparseSystem {
        kind: SystemKind::SymmetricPositiveDefinite,
        matrix,
        rhs,
    })
}

/// Assembles and solves the plate problem with load `f`.
pub fn solve_biharmonic(
    space: &Arc<FeSpace>,
    load: &dyn Function2d,
    quad: QuadratureOrders,
    tol: f64,
) -> Result<(FeField, SolveReport)> {
    let system = assemble_biharmonic(space, load, quad)?;
    let (x, report) = system.solve(tol)?;
    Ok((FeField::new(space.clone(), x)?, report))
}

/// The bordered Stokes system
///
/// ```text
/// [  A   -B^T  0 ] [u]   [f]
/// [ -B    0    w ] [p] = [0]
/// [  0    w^T  0 ] [l]   [0]
/// ```
///
/// with `B[K][g] = int_K div phi_g` and `w_K = |K|` enforcing zero mean pressure.
pub fn assemble_stokes(
    velocity: &FeSpace,
    pressure: &FeSpace,
    load: &dyn VectorFunction2d,
    quad: QuadratureOrders,
) -> Result<SparseSystem> {
    if velocity.kind() != SpaceKind::Velocity || pressure.kind() != SpaceKind::Pressure {
        return Err(Error::SpaceMismatch("Stokes assembly needs velocity and pressure spaces".into()));
    }
    let (nv, np) = (velocity.dim(), pressure.dim());
    let n = nv + np + 1;
    let mut matrix = TripletMatrix::new(n, n);
    let a = local_gradient_stiffness(&velocity.element, quad.assembly)?;
    scatter_matrix(velocity, &a, &mut matrix);
    for (r, c, v) in divergence_matrix(velocity)?.entries {
        matrix.push(nv + r, c, -v);
        matrix.push(c, nv + r, -v);
    }
    let mesh = &pressure.mesh;
    for k in 0..np {
        matrix.push(nv + k, nv + np, mesh.cell_area());
        matrix.push(nv + np, nv + k, mesh.cell_area());
    }
    let mut rhs = load_vector(velocity, quad.load, &|p| load.value(p))?;
    rhs.resize(n, 0.0);
    Ok(SparseSystem {
        kind: SystemKind::SymmetricIndefinite,
        matrix,
        rhs,
    })
}

#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub velocity: FeField,
    pub pressure: FeField,
    /// Lagrange multiplier of the mean constraint (zero for compatible data).
    pub multiplier: f64,
    pub report: SolveReport,
}

/// Builds `V_h`, `P_h` on `mesh`, assembles and solves the Stokes problem.
pub fn solve_stokes(
    mesh: &Arc<Mesh>,
    load: &dyn VectorFunction2d,
    quad: QuadratureOrders,
    tol: f64,
) -> Result<StokesSolution> {
    let velocity = FeSpace::new(mesh.clone(), SpaceKind::Velocity)?;
    let pressure = FeSpace::new(mesh.clone(), SpaceKind::Pressure)?;
    let system = assemble_stokes(&velocity, &pressure, load, quad)?;
    let (x, report) = system.solve(tol)?;
    let (nv, np) = (velocity.dim(), pressure.dim());
    Ok(StokesSolution {
        velocity: FeField::new(velocity, x[..nv].to_vec())?,
        pressure: FeField::new(pressure, x[nv..nv + np].to_vec())?,
        multiplier: x[nv + np],
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{domain_bubble, BiharmonicCase};
    use crate::functions::{ConstantVector, ExpPolynomial, Zero};
    use crate::mesh::Domain;

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::uniform(Domain::default(), n, n).unwrap())
    }

    fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
        m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn plate_matrix_on_2x2_is_spd() {
        let space = FeSpace::new(mesh(2), SpaceKind::Plate).unwrap();
        let sys = assemble_biharmonic(&space, &Zero, QuadratureOrders::default()).unwrap();
        assert_eq!(sys.unknowns(), 9);
        assert!(sys.matrix.max_asymmetry() <= 1e-12 * sys.matrix.max_abs());
        assert!(min_eigenvalue(sys.matrix.to_dense()) > 0.0);
        let (x, _) = sys.solve(1e-10).unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hessian_stiffness_diagonal_is_seminorm() {
        let space = FeSpace::new(mesh(1), SpaceKind::Plate).unwrap();
        let k = local_hessian_stiffness(&space.element, 5).unwrap();
        let rule = QuadRuleCell::rectangle(0.0, 2.0, 0.0, 1.0, 6, 6).unwrap();
        for i in [0, 5, 10] {
            let f = &space.element.functions[i][0];
            let s = space.element.derivative_scale(1, 0).powi(2);
            let t = space.element.derivative_scale(0, 1).powi(2);
            let norm = rule.integrate(|p| {
                let q = space.element.cell.to_local(p);
                let xx = f.derivative(2, 0).eval(q[0], q[1]) * s;
                let xy = f.derivative(1, 1).eval(q[0], q[1]) * s.sqrt() * t.sqrt();
                let yy = f.derivative(0, 2).eval(q[0], q[1]) * t;
                xx * xx + 2.0 * xy * xy + yy * yy
            });
            assert!((k[(i, i)] - norm).abs() < 1e-10 * norm);
            assert!(norm > 0.0);
        }
    }

    #[test]
    fn adini_and_velocity_blocks_are_definite() {
        let m = mesh(3);
        let adini = FeSpace::new(m.clone(), SpaceKind::Adini).unwrap();
        let sys = assemble_biharmonic(&adini, &Zero, QuadratureOrders::default()).unwrap();
        assert!(min_eigenvalue(sys.matrix.to_dense()) > 0.0);

        let v = FeSpace::new(m.clone(), SpaceKind::Velocity).unwrap();
        let a = local_gradient_stiffness(&v.element, 5).unwrap();
        let mut t = TripletMatrix::new(v.dim(), v.dim());
        scatter_matrix(&v, &a, &mut t);
        assert!(t.max_asymmetry() <= 1e-12 * t.max_abs());
        assert!(min_eigenvalue(t.to_dense()) > 0.0);
    }

    #[test]
    fn divergence_block_rank_on_2x2() {
        let v = FeSpace::new(mesh(2), SpaceKind::Velocity).unwrap();
        let b = divergence_matrix(&v).unwrap().to_dense();
        assert_eq!((b.nrows(), b.ncols()), (4, 12));
        assert_eq!(b.rank(1e-10), 3);
    }

    #[test]
    fn biharmonic_galerkin_residual() {
        let case = BiharmonicCase::standard();
        let space = FeSpace::new(mesh(4), SpaceKind::Plate).unwrap();
        let sys = assemble_biharmonic(&space, &case.load, QuadratureOrders::default()).unwrap();
        let (x, report) = sys.solve(1e-10).unwrap();
        assert!(report.relative_residual <= 1e-10);
        assert!(sys.relative_residual(&x) <= 1e-10);
    }

    #[test]
    fn stokes_with_gradient_load_gives_zero_velocity() {
        // f = grad(x) is balanced by the pressure x - 1 (mean zero)
        let m = mesh(4);
        let sol = solve_stokes(&m, &ConstantVector([1.0, 0.0]), QuadratureOrders::default(), 1e-10).unwrap();
        assert!(sol.velocity.coefficients.iter().all(|v| v.abs() < 1e-10));
        for (c, p) in sol.pressure.coefficients.iter().enumerate() {
            let xc = m.cell_geometry(c).unwrap().center()[0];
            assert!((p - (xc - 1.0)).abs() < 1e-10);
        }
        assert!(sol.multiplier.abs() < 1e-10);
    }

    #[test]
    fn assembly_is_deterministic() {
        let case = crate::cases::StokesCase::standard();
        let m = mesh(6);
        let v = FeSpace::new(m.clone(), SpaceKind::Velocity).unwrap();
        let p = FeSpace::new(m, SpaceKind::Pressure).unwrap();
        let a = assemble_stokes(&v, &p, &case.load, QuadratureOrders::default()).unwrap();
        let b = assemble_stokes(&v, &p, &case.load, QuadratureOrders::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn plate_solution_of_smooth_bubble() {
        let u = ExpPolynomial::polynomial(domain_bubble().pow(2));
        let load = crate::functions::Bilaplacian(u.clone());
        let space = FeSpace::new(mesh(8), SpaceKind::Plate).unwrap();
        let (uh, _) = solve_biharmonic(&space, &load, QuadratureOrders::default(), 1e-10).unwrap();
        // centre value of the discrete solution is close to the exact one
        let c = space.mesh.num_cells() / 2 + space.mesh.nx / 2;
        let g = space.mesh.cell_geometry(c).unwrap();
        let p = g.vertex(0);
        let got = uh.eval(c, p, 0, 0).unwrap()[0];
        assert!((got - u.value(p)).abs() < 1e-2 * u.value(p).abs());
    }
}
