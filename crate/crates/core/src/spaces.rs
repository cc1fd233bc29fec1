//! Global spaces: DoF numbering, boundary elimination, interpolation.
//!
//! Shared DoFs live on mesh entities. Normal-type DoFs are stored with respect
//! to the fixed edge normal `n_E`; a cell sees them multiplied by the sign of
//! `n_E . n_K`. For the velocity space the same sign also applies to the
//! first-moment and tangential DoFs, because the edge weight `xi` is the same
//! function from both sides and the tangent flips together with the normal.

use std::sync::Arc;

use crate::elements::{apply_dofs, ElementBasis, ElementFamily, Jet, Shape, SMOOTH_EDGE_POINTS};
use crate::error::{Error, Result};
use crate::functions::{Function2d, VectorFunction2d};
use crate::mesh::{Mesh, Point};
use crate::quadrature::QuadRuleCell;
use crate::sparse::TripletMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// `W_h`, the 12-DoF plate space.
    Plate,
    /// Adini plate space (vertex values and gradients).
    Adini,
    /// `V_h`, the 12-DoF velocity space.
    Velocity,
    /// `P_h`, piecewise constants.
    Pressure,
    /// Discontinuous piecewise linears.
    BrokenP1,
}

impl SpaceKind {
    pub fn family(self) -> ElementFamily {
        match self {
            SpaceKind::Plate => ElementFamily::Plate12,
            SpaceKind::Adini => ElementFamily::Adini,
            SpaceKind::Velocity => ElementFamily::Velocity12,
            SpaceKind::Pressure => ElementFamily::PressureP0,
            SpaceKind::BrokenP1 => ElementFamily::LocalP1,
        }
    }
}

/// How DoFs on the boundary are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Homogeneous clamped / no-slip conditions: boundary DoFs are removed.
    Eliminate,
    /// Every DoF is free (the unconstrained nonconforming space).
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofClass {
    VertexValue,
    VertexGradientX,
    VertexGradientY,
    EdgeMean,
    EdgeNormalDerivMean,
    EdgeNormalMean,
    EdgeNormalMoment,
    EdgeTangentialMean,
    CellMean,
    CellMoment,
}

/// Numbering of the free DoFs of one space.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub kind: SpaceKind,
    pub boundary: Boundary,
    local_count: usize,
    num_dofs: usize,
    local_to_global: Vec<Option<usize>>,
    signs: Vec<f64>,
    classes: Vec<DofClass>,
}

/// Assigns consecutive numbers to the free entities of one block.
fn number_block(free: impl Iterator<Item = bool>, next: &mut usize) -> Vec<Option<usize>> {
    free.map(|f| {
        f.then(|| {
            *next += 1;
            *next - 1
        })
    })
    .collect()
}

impl DofMap {
    pub fn new(mesh: &Mesh, kind: SpaceKind) -> Self {
        Self::with_boundary(mesh, kind, Boundary::Eliminate)
    }

    pub fn with_boundary(mesh: &Mesh, kind: SpaceKind, boundary: Boundary) -> Self {
        let keep = boundary == Boundary::Keep;
        let free_vertices = || mesh.boundary_vertex.iter().map(move |&b| keep || !b);
        let free_edges = || mesh.boundary_edge.iter().map(move |&b| keep || !b);
        let local_count = kind.family().dof_count();
        let mut next = 0;
        let mut classes = Vec::new();
        let mut block = |free: Vec<bool>, class: DofClass, next: &mut usize| {
            let slots = number_block(free.into_iter(), next);
            classes.extend(slots.iter().flatten().map(|_| class));
            slots
        };

        let mut local_to_global = Vec::with_capacity(mesh.num_cells() * local_count);
        let mut signs = Vec::with_capacity(mesh.num_cells() * local_count);
        match kind {
            SpaceKind::Plate => {
                let v = block(free_vertices().collect(), DofClass::VertexValue, &mut next);
                let m = block(free_edges().collect(), DofClass::EdgeMean, &mut next);
                let d = block(free_edges().collect(), DofClass::EdgeNormalDerivMean, &mut next);
                for c in 0..mesh.num_cells() {
                    let g = mesh.cell_geometry(c).expect("cell in range");
                    for i in 0..4 {
                        local_to_global.push(v[g.vertices[i]]);
                        signs.push(1.0);
                    }
                    for i in 0..4 {
                        local_to_global.push(m[g.edges[i]]);
                        signs.push(1.0);
                    }
                    for i in 0..4 {
                        local_to_global.push(d[g.edges[i]]);
                        signs.push(g.orientation(i));
                    }
                }
            }
            SpaceKind::Adini => {
                let v = block(free_vertices().collect(), DofClass::VertexValue, &mut next);
                let gx = block(free_vertices().collect(), DofClass::VertexGradientX, &mut next);
                let gy = block(free_vertices().collect(), DofClass::VertexGradientY, &mut next);
                for c in 0..mesh.num_cells() {
                    let g = mesh.cell_geometry(c).expect("cell in range");
                    for slots in [&v, &gx, &gy] {
                        for i in 0..4 {
                            local_to_global.push(slots[g.vertices[i]]);
                            signs.push(1.0);
                        }
                    }
                }
            }
            SpaceKind::Velocity => {
                let n = block(free_edges().collect(), DofClass::EdgeNormalMean, &mut next);
                let m = block(free_edges().collect(), DofClass::EdgeNormalMoment, &mut next);
                let t = block(free_edges().collect(), DofClass::EdgeTangentialMean, &mut next);
                for c in 0..mesh.num_cells() {
                    let g = mesh.cell_geometry(c).expect("cell in range");
                    for slots in [&n, &m, &t] {
                        for i in 0..4 {
                            local_to_global.push(slots[g.edges[i]]);
                            signs.push(g.orientation(i));
                        }
                    }
                }
            }
            SpaceKind::Pressure => {
                for c in 0..mesh.num_cells() {
                    local_to_global.push(Some(c));
                    signs.push(1.0);
                    classes.push(DofClass::CellMean);
                }
                next = mesh.num_cells();
            }
            SpaceKind::BrokenP1 => {
                for c in 0..mesh.num_cells() {
                    for k in 0..3 {
                        local_to_global.push(Some(3 * c + k));
                        signs.push(1.0);
                        classes.push(if k == 0 { DofClass::CellMean } else { DofClass::CellMoment });
                    }
                }
                next = 3 * mesh.num_cells();
            }
        }
        Self {
            kind,
            boundary,
            local_count,
            num_dofs: next,
            local_to_global,
            signs,
            classes,
        }
    }

    /// Number of free global DoFs.
    pub fn len(&self) -> usize {
        self.num_dofs
    }

    pub fn is_empty(&self) -> bool {
        self.num_dofs == 0
    }

    pub fn local_count(&self) -> usize {
        self.local_count
    }

    /// Global index of each local DoF of `cell`; `None` when eliminated.
    pub fn cell_dofs(&self, cell: usize) -> &[Option<usize>] {
        &self.local_to_global[cell * self.local_count..(cell + 1) * self.local_count]
    }

    pub fn cell_signs(&self, cell: usize) -> &[f64] {
        &self.signs[cell * self.local_count..(cell + 1) * self.local_count]
    }

    pub fn class(&self, dof: usize) -> DofClass {
        self.classes[dof]
    }

    pub fn num_cells(&self) -> usize {
        self.local_to_global.len() / self.local_count
    }
}

/// `dofmap` alias matching the free-function style of the other modules.
pub fn build_dofmap(mesh: &Mesh, kind: SpaceKind) -> DofMap {
    DofMap::new(mesh, kind)
}

/// A mesh, a DoF map and the shared local basis (all cells are congruent).
#[derive(Debug, Clone)]
pub struct FeSpace {
    pub mesh: Arc<Mesh>,
    pub dofmap: DofMap,
    pub element: ElementBasis,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, kind: SpaceKind) -> Result<Arc<Self>> {
        Self::with_boundary(mesh, kind, Boundary::Eliminate)
    }

    pub fn with_boundary(mesh: Arc<Mesh>, kind: SpaceKind, boundary: Boundary) -> Result<Arc<Self>> {
        let dofmap = DofMap::with_boundary(&mesh, kind, boundary);
        let element = ElementBasis::new(kind.family(), mesh.cell_geometry(0)?)?;
        Ok(Arc::new(Self { mesh, dofmap, element }))
    }

    pub fn kind(&self) -> SpaceKind {
        self.dofmap.kind
    }

    pub fn dim(&self) -> usize {
        self.dofmap.len()
    }

    pub fn basis_on(&self, cell: usize) -> Result<ElementBasis> {
        Ok(self.element.on_cell(self.mesh.cell_geometry(cell)?))
    }
}

/// A finite element function: coefficients over the free DoFs of a space.
#[derive(Debug, Clone)]
pub struct FeField {
    pub space: Arc<FeSpace>,
    pub coefficients: Vec<f64>,
}

impl FeField {
    pub fn new(space: Arc<FeSpace>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != space.dim() {
            return Err(Error::SpaceMismatch(format!(
                "{} coefficients for a space of dimension {}",
                coefficients.len(),
                space.dim()
            )));
        }
        Ok(Self { space, coefficients })
    }

    pub fn zeros(space: Arc<FeSpace>) -> Self {
        let n = space.dim();
        Self {
            space,
            coefficients: vec![0.0; n],
        }
    }

    /// Local DoF values on `cell` (eliminated DoFs are zero).
    pub fn local_dofs(&self, cell: usize) -> Vec<f64> {
        let map = &self.space.dofmap;
        map.cell_dofs(cell)
            .iter()
            .zip(map.cell_signs(cell))
            .map(|(g, s)| g.map_or(0.0, |g| s * self.coefficients[g]))
            .collect()
    }

    /// The restriction to `cell` as a polynomial in scaled coordinates.
    pub fn local_shape(&self, cell: usize) -> Shape {
        self.space.element.combine(&self.local_dofs(cell))
    }

    /// `(dx, dy)` derivative at the physical point `p` inside `cell`.
    pub fn eval(&self, cell: usize, p: Point, dx: usize, dy: usize) -> Result<[f64; 2]> {
        let basis = self.space.basis_on(cell)?;
        let vals = basis.eval(p, dx, dy)?;
        let dofs = self.local_dofs(cell);
        Ok(vals.iter().zip(&dofs).fold([0.0; 2], |acc, (v, d)| {
            [acc[0] + d * v[0], acc[1] + d * v[1]]
        }))
    }
}

fn interpolate_jet(space: &Arc<FeSpace>, f: &(dyn Fn(Point) -> Jet + Sync)) -> Result<FeField> {
    let mesh = &space.mesh;
    let map = &space.dofmap;
    let family = space.kind().family();
    let mut coefficients = vec![0.0; map.len()];
    let mut assigned = vec![false; map.len()];
    for c in 0..mesh.num_cells() {
        let geom = mesh.cell_geometry(c)?;
        let pending = map.cell_dofs(c).iter().any(|g| g.is_some_and(|g| !assigned[g]));
        if !pending {
            continue;
        }
        let local = apply_dofs(family, &geom, f, SMOOTH_EDGE_POINTS);
        for ((g, s), v) in map.cell_dofs(c).iter().zip(map.cell_signs(c)).zip(local) {
            if let Some(g) = *g {
                if !assigned[g] {
                    coefficients[g] = s * v;
                    assigned[g] = true;
                }
            }
        }
    }
    FeField::new(space.clone(), coefficients)
}

/// Global interpolant `I_h u` (eliminated boundary DoFs are set to zero).
pub fn interpolate_scalar(space: &Arc<FeSpace>, u: &dyn Function2d) -> Result<FeField> {
    if space.kind().family().is_vector() {
        return Err(Error::SpaceMismatch("scalar interpolation into a vector space".into()));
    }
    interpolate_jet(space, &|p| Jet::scalar(u, p))
}

/// Global interpolant `Pi_h v`.
pub fn interpolate_velocity(space: &Arc<FeSpace>, v: &dyn VectorFunction2d) -> Result<FeField> {
    if !space.kind().family().is_vector() {
        return Err(Error::SpaceMismatch("vector interpolation into a scalar space".into()));
    }
    interpolate_jet(space, &|p| Jet::vector(v, p))
}

/// Gauss points per direction for cell means of smooth functions.
pub const PROJECTION_POINTS: usize = 10;

/// Cell means of `q` (the unconstrained L2 projection onto piecewise constants).
pub fn cell_means(mesh: &Mesh, q: &dyn Function2d) -> Result<Vec<f64>> {
    (0..mesh.num_cells())
        .map(|c| {
            let g = mesh.cell_geometry(c)?;
            let r = QuadRuleCell::rectangle(g.x0, g.x1, g.y0, g.y1, PROJECTION_POINTS, PROJECTION_POINTS)?;
            Ok(r.integrate(|p| q.value(p)) / g.area())
        })
        .collect()
}

/// Removes the area-weighted mean from piecewise-constant values (uniform
/// cells, so the plain average).
pub fn remove_mean(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter_mut().for_each(|v| *v -= mean);
}

/// `P_h q`: cell means with the global mean removed.
pub fn project_pressure(space: &Arc<FeSpace>, q: &dyn Function2d) -> Result<FeField> {
    if space.kind() != SpaceKind::Pressure {
        return Err(Error::SpaceMismatch("pressure projection needs the P_h space".into()));
    }
    let mut values = cell_means(&space.mesh, q)?;
    remove_mean(&mut values);
    FeField::new(space.clone(), values)
}

/// Per-cell divergence of a velocity field (constant on every cell).
pub fn cell_divergence(velocity: &FeField) -> Result<Vec<f64>> {
    if velocity.space.kind() != SpaceKind::Velocity {
        return Err(Error::SpaceMismatch("divergence needs a velocity field".into()));
    }
    let mesh = &velocity.space.mesh;
    (0..mesh.num_cells())
        .map(|c| {
            let g = mesh.cell_geometry(c)?;
            let p = g.center();
            let dx = velocity.eval(c, p, 1, 0)?;
            let dy = velocity.eval(c, p, 0, 1)?;
            Ok(dx[0] + dy[1])
        })
        .collect()
}

/// `B[K][g] = int_K div phi_g` for the velocity basis, one row per cell.
pub fn divergence_matrix(velocity: &FeSpace) -> Result<TripletMatrix> {
    let mesh = &velocity.mesh;
    let map = &velocity.dofmap;
    let local = local_divergence(&velocity.element);
    let mut b = TripletMatrix::new(mesh.num_cells(), map.len());
    for c in 0..mesh.num_cells() {
        for ((g, s), d) in map.cell_dofs(c).iter().zip(map.cell_signs(c)).zip(&local) {
            if let Some(g) = *g {
                if *d != 0.0 {
                    b.push(c, g, s * d);
                }
            }
        }
    }
    Ok(b)
}

/// `int_K div phi_j` for every local velocity basis function, by the
/// divergence theorem from the normal-flux DoFs; exact for `V_K`.
pub(crate) fn local_divergence(element: &ElementBasis) -> Vec<f64> {
    let q = QuadRuleCell::rectangle(-1.0, 1.0, -1.0, 1.0, 3, 3).expect("order in range");
    let area = element.cell.area();
    element
        .functions
        .iter()
        .map(|f| {
            let (sx, sy) = (2.0 / element.cell.hx(), 2.0 / element.cell.hy());
            let div = f[0].dx().scale(sx).axpy(sy, &f[1].dy());
            // reference rule has total weight 4
            q.integrate(|p| div.eval(p[0], p[1])) * area / 4.0
        })
        .map(|v| if v.abs() < 1e-14 { 0.0 } else { v })
        .collect()
}

/// DoF-level `curl_h`: column `g` holds the `V_h` DoFs of `curl` applied to
/// the `g`-th global basis function of `W_h`. Each velocity DoF is read from
/// the first cell containing it.
pub fn curl_matrix(plate: &FeSpace, velocity: &FeSpace) -> Result<TripletMatrix> {
    let local = local_curl(&plate.element, &velocity.element);
    let mesh = &plate.mesh;
    let (wm, vm) = (&plate.dofmap, &velocity.dofmap);
    let mut owner = vec![usize::MAX; vm.len()];
    for c in 0..mesh.num_cells() {
        for g in vm.cell_dofs(c).iter().flatten() {
            if owner[*g] == usize::MAX {
                owner[*g] = c;
            }
        }
    }
    let mut m = TripletMatrix::new(vm.len(), wm.len());
    for c in 0..mesh.num_cells() {
        for (i, (gi, si)) in vm.cell_dofs(c).iter().zip(vm.cell_signs(c)).enumerate() {
            let Some(gi) = *gi else { continue };
            if owner[gi] != c {
                continue;
            }
            for (j, (gj, sj)) in wm.cell_dofs(c).iter().zip(wm.cell_signs(c)).enumerate() {
                if let Some(gj) = *gj {
                    let v = local[i][j];
                    if v != 0.0 {
                        m.push(gi, gj, si * sj * v);
                    }
                }
            }
        }
    }
    Ok(m)
}

/// `L[i][j] = sigma_i(curl phi_j)` on one cell.
pub(crate) fn local_curl(plate: &ElementBasis, velocity: &ElementBasis) -> Vec<Vec<f64>> {
    let cell = plate.cell;
    let (sx, sy) = (2.0 / cell.hx(), 2.0 / cell.hy());
    let mut out = vec![vec![0.0; plate.len()]; velocity.len()];
    for (j, f) in plate.functions.iter().enumerate() {
        let curl = [f[0].dy().scale(sy), f[0].dx().scale(-sx)];
        let dofs = apply_dofs(
            ElementFamily::Velocity12,
            &cell,
            &|p| crate::elements::shape_jet(&curl, &cell, p),
            crate::elements::EXACT_EDGE_POINTS,
        );
        for (i, d) in dofs.into_iter().enumerate() {
            out[i][j] = if d.abs() < 1e-13 { 0.0 } else { d };
        }
    }
    out
}
