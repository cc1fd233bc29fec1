//! Broken-norm errors, divergence residuals, pressure postprocessing and the
//! structural checks of the discrete complex.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::assembly::Tabulation;
use crate::elements::{apply_dofs, ElementFamily, Jet, EXACT_EDGE_POINTS};
use crate::error::{Error, Result};
use crate::functions::{Curl, ExpPolynomial, Function2d, VectorFunction2d};
use crate::mesh::{Mesh, Point};
use crate::poly::Polynomial;
use crate::spaces::{
    cell_divergence, cell_means, curl_matrix, divergence_matrix, interpolate_scalar, interpolate_velocity,
    local_curl, Boundary, FeField, FeSpace, SpaceKind,
};

/// Default Gauss points per direction for error norms.
pub const ERROR_POINTS: usize = 10;

/// How mixed derivatives enter `|v|_{m,K}^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Seminorm {
    /// `sum_{|alpha| = m} ||d^alpha v||^2`, each multi-index once.
    #[default]
    MultiIndex,
    /// Full derivative tensor, mixed derivatives weighted by multiplicity
    /// (the Frobenius norm of the Hessian for `m = 2`).
    Tensor,
}

/// Multi-indices of order `m` with their weights under `convention`.
fn derivative_terms(m: usize, convention: Seminorm) -> Vec<((usize, usize), f64)> {
    (0..=m)
        .map(|dy| {
            let weight = match convention {
                Seminorm::MultiIndex => 1.0,
                Seminorm::Tensor => (1..=dy).fold(1.0, |b, k| b * (m - k + 1) as f64 / k as f64),
            };
            ((m - dy, dy), weight)
        })
        .collect()
}

/// `(sum_K |u - u_h|^2_{m,K})^{1/2}` for a scalar or vector exact solution
/// given by its derivatives, using `points` Gauss points per direction.
pub fn broken_error_with(
    field: &FeField,
    exact: &(dyn Fn(Point, usize, usize) -> [f64; 2] + Sync),
    m: usize,
    points: usize,
    convention: Seminorm,
) -> Result<f64> {
    if m > 2 {
        return Err(Error::DerivativeOrder(m));
    }
    let space = &field.space;
    let terms = derivative_terms(m, convention);
    let derivs: Vec<_> = terms.iter().map(|t| t.0).collect();
    let tab = Tabulation::new(&space.element, points, &derivs)?;
    let mesh = &space.mesh;
    let jac = mesh.cell_area() / 4.0;
    let cells: Vec<f64> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let g = mesh.cell_geometry(c)?;
            let dofs = field.local_dofs(c);
            let mut sum = 0.0;
            for (t, &((dx, dy), mult)) in terms.iter().enumerate() {
                for (q, w) in tab.weights.iter().enumerate() {
                    let e = exact(g.to_physical(tab.points[q]), dx, dy);
                    let mut uh = [0.0; 2];
                    for (phi, d) in tab.values[t][q].iter().zip(&dofs) {
                        uh[0] += d * phi[0];
                        uh[1] += d * phi[1];
                    }
                    sum += mult * w * jac * ((e[0] - uh[0]).powi(2) + (e[1] - uh[1]).powi(2));
                }
            }
            Ok(sum)
        })
        .collect::<Result<_>>()?;
    Ok(cells.iter().sum::<f64>().sqrt())
}

/// Broken error of a scalar field against a scalar exact solution.
pub fn broken_error(field: &FeField, exact: &dyn Function2d, m: usize) -> Result<f64> {
    if field.space.kind().family().is_vector() {
        return Err(Error::SpaceMismatch("scalar error of a vector field".into()));
    }
    broken_error_with(field, &|p, dx, dy| [exact.derivative(p, dx, dy), 0.0], m, ERROR_POINTS, Seminorm::MultiIndex)
}

/// Broken error of a velocity field against a vector exact solution.
pub fn broken_error_vector(field: &FeField, exact: &dyn VectorFunction2d, m: usize) -> Result<f64> {
    if !field.space.kind().family().is_vector() {
        return Err(Error::SpaceMismatch("vector error of a scalar field".into()));
    }
    broken_error_with(field, &|p, dx, dy| exact.derivative(p, dx, dy), m, ERROR_POINTS, Seminorm::MultiIndex)
}

/// `|v_h|_{m,h}` of a discrete field.
pub fn broken_seminorm(field: &FeField, m: usize) -> Result<f64> {
    broken_error_with(field, &|_, _, _| [0.0; 2], m, ERROR_POINTS, Seminorm::MultiIndex)
}

/// `max_K |div v_h|_K|`; the divergence is constant on each cell.
pub fn divergence_residual(velocity: &FeField) -> Result<f64> {
    Ok(cell_divergence(velocity)?.iter().fold(0.0, |m, d| m.max(d.abs())))
}

/// Postprocessed pressure `p_h*` in the broken P1 space: on each cell the
/// gradient is the cell mean of `lap u_h + f` and the mean is `p_h|_K`.
pub fn postprocess_pressure(
    velocity: &FeField,
    pressure: &FeField,
    load: &dyn VectorFunction2d,
    points: usize,
) -> Result<FeField> {
    if velocity.space.kind() != SpaceKind::Velocity || pressure.space.kind() != SpaceKind::Pressure {
        return Err(Error::SpaceMismatch("postprocessing needs velocity and pressure fields".into()));
    }
    let mesh = velocity.space.mesh.clone();
    let target = FeSpace::new(mesh.clone(), SpaceKind::BrokenP1)?;
    let tab = Tabulation::new(&velocity.space.element, points, &[(2, 0), (0, 2)])?;
    let locals: Vec<[f64; 3]> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let g = mesh.cell_geometry(c)?;
            let dofs = velocity.local_dofs(c);
            let mut grad = [0.0; 2];
            for (q, w) in tab.weights.iter().enumerate() {
                let f = load.value(g.to_physical(tab.points[q]));
                for comp in 0..2 {
                    let lap: f64 = (0..dofs.len())
                        .map(|i| dofs[i] * (tab.values[0][q][i][comp] + tab.values[1][q][i][comp]))
                        .sum();
                    // reference weights sum to 4
                    grad[comp] += w * (lap + f[comp]) / 4.0;
                }
            }
            let mean = pressure.local_dofs(c)[0];
            let center = g.center();
            let linear = |p: Point| Jet {
                value: [mean + grad[0] * (p[0] - center[0]) + grad[1] * (p[1] - center[1]), 0.0],
                grad,
            };
            let d = apply_dofs(ElementFamily::LocalP1, &g, &linear, EXACT_EDGE_POINTS);
            Ok([d[0], d[1], d[2]])
        })
        .collect::<Result<_>>()?;
    FeField::new(target, locals.into_iter().flatten().collect())
}

/// Observed order `log(e_c / e_f) / log(h_c / h_f)`.
pub fn observed_order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

/// Structural report of the discrete complex `W_h -> V_h -> P_h` on one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexReport {
    pub n: usize,
    pub dim_w: usize,
    pub dim_v: usize,
    pub dim_p: usize,
    /// `dim W_h + #cells - 1 == dim V_h`
    pub dimension_identity: bool,
    pub div_rank: usize,
    pub div_nullity: usize,
    /// `dim W_h - rank(curl_h)`; zero when `curl_h` is injective.
    pub curl_injectivity_defect: usize,
    /// `max |B C|`: divergence of every discrete curl.
    pub div_curl_defect: f64,
    /// Largest mismatch of a curl DoF between the two cells sharing an edge.
    pub curl_conformity_defect: f64,
    /// `max |div_h Pi_h v - P_h div v|` over the battery.
    pub commutativity_defect: f64,
    /// `max |Pi_h curl phi - curl_h I_h phi|` at DoF level over the battery.
    pub curl_commutativity_defect: f64,
    /// Method used for the ranks: `"svd"` or `"cholesky"`.
    pub rank_method: &'static str,
    /// Smallest singular value (SVD) or pivot (Cholesky) of the full-rank
    /// factors, a measure of how clearly the ranks were decided.
    pub rank_margin: f64,
}

impl ComplexReport {
    pub fn exact(&self, tol: f64) -> bool {
        self.dimension_identity
            && self.div_rank + 1 == self.dim_p
            && self.div_nullity == self.dim_w
            && self.curl_injectivity_defect == 0
            && self.div_curl_defect <= tol
            && self.curl_conformity_defect <= tol
            && self.commutativity_defect <= tol
            && self.curl_commutativity_defect <= tol
    }
}

/// Largest mesh size for which ranks are computed by dense SVD.
pub const DENSE_RANK_LIMIT: usize = 4;

/// Relative threshold on singular values / pivots for deciding rank.
const RANK_TOLERANCE: f64 = 1e-10;

/// Stream functions for the commutativity battery. All vanish to second
/// order on the boundary of the default domain, so their curls have zero
/// boundary DoFs.
pub fn stream_battery() -> Vec<ExpPolynomial> {
    let b = crate::cases::domain_bubble();
    let b2 = b.pow(2);
    let x = Polynomial::x();
    let y = Polynomial::y();
    vec![
        ExpPolynomial::polynomial(b2.clone()),
        ExpPolynomial::new(1.0, 2.0, b2.clone()),
        ExpPolynomial::polynomial(&(&x.pow(3) - &y.scale(2.0)) * &b2),
        ExpPolynomial::new(-0.5, 1.5, &(&x * &y) * &b2),
        ExpPolynomial::new(0.7, -1.3, &(&Polynomial::constant(1.0) + &y.pow(4)) * &b2),
        ExpPolynomial::polynomial(&b2 * &b),
    ]
}

/// Divergence-carrying fields for the `div_h Pi_h = P_h div` check, built as
/// gradients of bubbles so every boundary DoF is zero.
pub fn gradient_battery() -> Vec<[ExpPolynomial; 2]> {
    let b2 = crate::cases::domain_bubble().pow(2);
    let x = Polynomial::x();
    let y = Polynomial::y();
    [
        ExpPolynomial::polynomial(b2.clone()),
        ExpPolynomial::new(1.0, -1.0, b2.clone()),
        ExpPolynomial::polynomial(&(&x.pow(2) + &y) * &b2),
    ]
    .into_iter()
    .map(|phi| {
        let p = phi.poly.clone();
        let (a, bb) = (phi.a, phi.b);
        // grad(exp(ax+by) P) = exp(ax+by) (aP + P_x, bP + P_y)
        [
            ExpPolynomial::new(a, bb, &p.scale(a) + &p.dx()),
            ExpPolynomial::new(a, bb, &p.scale(bb) + &p.dy()),
        ]
    })
    .collect()
}

/// `max_K |div_h Pi_h v - P_h div v|` with `P_h` the plain cell mean (the
/// battery fields have zero boundary flux, so the mean of `div v` is zero).
pub fn commutativity_defect(velocity: &Arc<FeSpace>, v: &dyn VectorFunction2d) -> Result<f64> {
    let pi = interpolate_velocity(velocity, v)?;
    let div_h = cell_divergence(&pi)?;
    struct Div<'a>(&'a dyn VectorFunction2d);
    impl Function2d for Div<'_> {
        fn derivative(&self, p: Point, dx: usize, dy: usize) -> f64 {
            self.0.derivative(p, dx + 1, dy)[0] + self.0.derivative(p, dx, dy + 1)[1]
        }
    }
    let means = cell_means(&velocity.mesh, &Div(v))?;
    Ok(div_h.iter().zip(&means).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

/// `max |Pi_h curl phi - C I_h phi|` over the free velocity DoFs.
pub fn curl_commutativity_defect(
    plate: &Arc<FeSpace>,
    velocity: &Arc<FeSpace>,
    curl: &crate::sparse::TripletMatrix,
    phi: &dyn Function2d,
) -> Result<f64> {
    let ih = interpolate_scalar(plate, phi)?;
    let pi = interpolate_velocity(velocity, &Curl(phi))?;
    let c = curl.matvec(&ih.coefficients);
    Ok(c.iter().zip(&pi.coefficients).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

fn dense_rank(m: &DMatrix<f64>) -> (usize, f64) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, f64::INFINITY);
    }
    let sv = m.singular_values();
    let max = sv.max();
    let kept: Vec<f64> = sv.iter().copied().filter(|s| *s > RANK_TOLERANCE * max).collect();
    (kept.len(), kept.iter().copied().fold(f64::INFINITY, f64::min) / max)
}

/// Smallest relative pivot of the Cholesky factor of an SPD Gram matrix,
/// or `None` when the factorization fails (rank deficient).
fn gram_pivot(g: DMatrix<f64>) -> Option<f64> {
    if g.nrows() == 0 {
        return Some(f64::INFINITY);
    }
    let scale = g.diagonal().max();
    let l = g.cholesky()?.unpack();
    let min = l.diagonal().iter().fold(f64::INFINITY, |m, d| m.min(d * d));
    (min > RANK_TOLERANCE * scale).then_some(min / scale)
}

/// Checks the structure of the discrete complex on the `n x n` mesh of
/// `domain`-sized cells.
pub fn verify_complex(mesh: &Arc<Mesh>) -> Result<ComplexReport> {
    let plate = FeSpace::new(mesh.clone(), SpaceKind::Plate)?;
    let velocity = FeSpace::new(mesh.clone(), SpaceKind::Velocity)?;
    let pressure = FeSpace::new(mesh.clone(), SpaceKind::Pressure)?;
    let (dim_w, dim_v, dim_p) = (plate.dim(), velocity.dim(), pressure.dim());
    let b = divergence_matrix(&velocity)?;
    let c = curl_matrix(&plate, &velocity)?;

    let (div_rank, curl_rank, rank_method, rank_margin) = if mesh.nx.max(mesh.ny) <= DENSE_RANK_LIMIT {
        let (rb, mb) = dense_rank(&b.to_dense());
        let (rc, mc) = dense_rank(&c.to_dense());
        (rb, rc, "svd", mb.min(mc))
    } else {
        // B has a one-dimensional left kernel (the constants), so drop one
        // row and check that the remaining rows are independent; C must have
        // independent columns.
        let bd = b.to_dense();
        let reduced = bd.rows(0, dim_p.saturating_sub(1)).into_owned();
        let pb = gram_pivot(&reduced * reduced.transpose());
        let pc = gram_pivot(sparse_gram(&c));
        let rb = if pb.is_some() { dim_p - 1 } else { dense_rank(&bd).0 };
        let rc = if pc.is_some() { dim_w } else { dense_rank(&c.to_dense()).0 };
        let ones_left = bd.transpose() * nalgebra::DVector::from_element(dim_p, 1.0);
        let rb = if ones_left.amax() <= 1e-12 { rb } else { dense_rank(&bd).0 };
        (rb, rc, "cholesky", pb.unwrap_or(0.0).min(pc.unwrap_or(0.0)))
    };

    let bc = c.to_dense();
    let div_curl_defect = if dim_w > 0 {
        (b.to_dense() * bc).amax()
    } else {
        0.0
    };

    let curl_conformity_defect = curl_conformity(&plate, &velocity)?;

    let mut commutativity = 0.0f64;
    let mut curl_commutativity = 0.0f64;
    for phi in stream_battery() {
        commutativity = commutativity.max(commutativity_defect(&velocity, &Curl(phi.clone()))?);
        curl_commutativity = curl_commutativity.max(curl_commutativity_defect(&plate, &velocity, &c, &phi)?);
    }
    for v in gradient_battery() {
        commutativity = commutativity.max(commutativity_defect(&velocity, &v)?);
    }

    Ok(ComplexReport {
        n: mesh.nx,
        dim_w,
        dim_v,
        dim_p,
        dimension_identity: dim_w + dim_p - 1 == dim_v,
        div_rank,
        div_nullity: dim_v - div_rank,
        curl_injectivity_defect: dim_w - curl_rank,
        div_curl_defect,
        curl_conformity_defect,
        commutativity_defect: commutativity,
        curl_commutativity_defect: curl_commutativity,
        rank_method,
        rank_margin,
    })
}

/// `C^T C` accumulated row by row of `C`.
fn sparse_gram(c: &crate::sparse::TripletMatrix) -> DMatrix<f64> {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); c.nrows];
    for (r, col, v) in c.compressed() {
        rows[r].push((col, v));
    }
    let mut g = DMatrix::zeros(c.ncols, c.ncols);
    for row in rows {
        for &(i, a) in &row {
            for &(j, b) in &row {
                g[(i, j)] += a * b;
            }
        }
    }
    g
}

/// Compares the curl DoFs seen from both cells of every interior edge.
fn curl_conformity(plate: &FeSpace, velocity: &FeSpace) -> Result<f64> {
    let local = local_curl(&plate.element, &velocity.element);
    let mesh = &plate.mesh;
    let (wm, vm) = (&plate.dofmap, &velocity.dofmap);
    let mut first: Vec<Option<Vec<(usize, f64)>>> = vec![None; vm.len()];
    let mut worst = 0.0f64;
    for c in 0..mesh.num_cells() {
        for (i, (gi, si)) in vm.cell_dofs(c).iter().zip(vm.cell_signs(c)).enumerate() {
            let Some(gi) = *gi else { continue };
            let mut row: Vec<(usize, f64)> = wm
                .cell_dofs(c)
                .iter()
                .zip(wm.cell_signs(c))
                .enumerate()
                .filter_map(|(j, (gj, sj))| gj.map(|g| (g, si * sj * local[i][j])))
                .filter(|e| e.1 != 0.0)
                .collect();
            row.sort_by_key(|e| e.0);
            match &first[gi] {
                None => first[gi] = Some(row),
                Some(prev) => worst = worst.max(row_difference(prev, &row)),
            }
        }
    }
    Ok(worst)
}

fn row_difference(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let mut dense = std::collections::BTreeMap::new();
    for &(j, v) in a {
        *dense.entry(j).or_insert(0.0) += v;
    }
    for &(j, v) in b {
        *dense.entry(j).or_insert(0.0) -= v;
    }
    dense.values().fold(0.0, |m: f64, v: &f64| m.max(v.abs()))
}

/// Interpolation errors of `I_h` (plate) for a smooth function on a mesh,
/// `|u - I_h u|_{j,h}` for `j = 0, 1, 2`.
pub fn interpolation_errors(mesh: &Arc<Mesh>, kind: SpaceKind, u: &dyn Function2d) -> Result<[f64; 3]> {
    let space = FeSpace::with_boundary(mesh.clone(), kind, Boundary::Keep)?;
    let ih = interpolate_scalar(&space, u)?;
    Ok([broken_error(&ih, u, 0)?, broken_error(&ih, u, 1)?, broken_error(&ih, u, 2)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{solve_biharmonic, QuadratureOrders};
    use crate::cases::BiharmonicCase;
    use crate::mesh::Domain;

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::uniform(Domain::default(), n, n).unwrap())
    }

    #[test]
    fn multiplicities() {
        let tensor = derivative_terms(2, Seminorm::Tensor);
        assert_eq!(tensor, vec![((2, 0), 1.0), ((1, 1), 2.0), ((0, 2), 1.0)]);
        let plain = derivative_terms(2, Seminorm::MultiIndex);
        assert_eq!(plain, vec![((2, 0), 1.0), ((1, 1), 1.0), ((0, 2), 1.0)]);
        assert_eq!(derivative_terms(1, Seminorm::Tensor), derivative_terms(1, Seminorm::MultiIndex));
    }

    #[test]
    fn zero_field_has_zero_error() {
        let space = FeSpace::new(mesh(3), SpaceKind::Plate).unwrap();
        let z = FeField::zeros(space);
        for m in 0..3 {
            assert_eq!(broken_error(&z, &crate::functions::Zero, m).unwrap(), 0.0);
        }
        assert!(broken_error(&z, &crate::functions::Zero, 3).is_err());
    }

    #[test]
    fn interpolant_of_cubic_is_exact() {
        let m = mesh(3);
        let u = ExpPolynomial::polynomial(&Polynomial::x().pow(3) + &(&Polynomial::x() * &Polynomial::y().pow(2)));
        let errs = interpolation_errors(&m, SpaceKind::Plate, &u).unwrap();
        assert!(errs.iter().all(|e| *e < 1e-10), "{errs:?}");
    }

    #[test]
    fn biharmonic_n8() {
        let case = BiharmonicCase::standard();
        for kind in [SpaceKind::Plate, SpaceKind::Adini] {
            let space = FeSpace::new(mesh(8), kind).unwrap();
            let (uh, _) = solve_biharmonic(&space, &case.load, QuadratureOrders::default(), 1e-10).unwrap();
            let e: Vec<f64> = (0..3).map(|m| broken_error(&uh, &case.exact, m).unwrap()).collect();
            let expected = match kind {
                SpaceKind::Plate => [4.139e-4, 9.173e-3, 3.528e-1],
                _ => [6.283e-3, 3.060e-2, 3.113e-1],
            };
            for (got, want) in e.iter().zip(expected) {
                assert!((got - want).abs() < 2e-3 * want, "{kind:?} {e:?}");
            }
            // the Frobenius convention counts the mixed derivative twice
            let tensor = broken_error_with(
                &uh,
                &|p, dx, dy| [case.exact.derivative(p, dx, dy), 0.0],
                2,
                ERROR_POINTS,
                Seminorm::Tensor,
            );
            assert!(tensor.unwrap() > e[2] * 1.05);
        }
    }

    #[test]
    fn complex_on_small_meshes() {
        for n in [2, 4, 5] {
            let r = verify_complex(&mesh(n)).unwrap();
            eprintln!("{r:?}");
            assert!(r.exact(1e-10), "{r:?}");
        }
    }
}
