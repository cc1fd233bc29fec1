//! Convergence sweeps over uniform meshes and their CSV / text rendering.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::analysis::{
    broken_error_with, broken_seminorm, divergence_residual, observed_order, postprocess_pressure, verify_complex,
    ComplexReport, Seminorm,
};
use crate::assembly::{solve_biharmonic, solve_stokes, QuadratureOrders};
use crate::cases::{BiharmonicCase, StokesCase};
use crate::elements::ElementFamily;
use crate::error::{Error, Result};
use crate::functions::{Function2d, VectorFunction2d};
use crate::mesh::{Domain, Mesh};
use crate::spaces::{FeSpace, SpaceKind};

/// Settings shared by all sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub domain: Domain,
    pub levels: Vec<usize>,
    pub quadrature: QuadratureOrders,
    pub tolerance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            domain: Domain::default(),
            levels: vec![4, 8, 16, 32, 64],
            quadrature: QuadratureOrders::default(),
            tolerance: crate::assembly::DEFAULT_TOLERANCE,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Parse("no levels given".into()));
        }
        if let Some(&n) = self.levels.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidMeshSize { nx: n, ny: n });
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse("levels must be strictly increasing".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::Parse(format!("invalid tolerance {}", self.tolerance)));
        }
        Ok(())
    }

    fn mesh(&self, n: usize) -> Result<Arc<Mesh>> {
        Ok(Arc::new(Mesh::uniform(self.domain, n, n)?))
    }
}

/// One mesh level of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    /// Free unknowns (velocity plus pressure for Stokes).
    pub dofs: usize,
    pub h: f64,
    pub errors: Vec<f64>,
    /// `None` on the first level.
    pub orders: Vec<Option<f64>>,
    /// Only for Stokes: `max_K |div u_h|`.
    pub divergence_residual: Option<f64>,
}

/// A convergence table: one row per level, one error column per norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub norms: Vec<String>,
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn new(norms: &[&str]) -> Self {
        Self {
            norms: norms.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a level and fills in the orders against the previous one.
    pub fn push(&mut self, n: usize, dofs: usize, h: f64, errors: Vec<f64>, divergence_residual: Option<f64>) {
        let orders = match self.rows.last() {
            Some(prev) => prev
                .errors
                .iter()
                .zip(&errors)
                .map(|(ec, ef)| Some(observed_order(*ec, *ef, prev.h, h)))
                .collect(),
            None => vec![None; errors.len()],
        };
        self.rows.push(ErrorRow {
            n,
            dofs,
            h,
            errors,
            orders,
            divergence_residual,
        });
    }

    pub fn has_divergence(&self) -> bool {
        self.rows.iter().any(|r| r.divergence_residual.is_some())
    }

    pub fn column(&self, norm: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.errors[norm]).collect()
    }

    /// Finest-level observed order of every norm.
    pub fn final_orders(&self) -> Vec<Option<f64>> {
        self.rows.last().map(|r| r.orders.clone()).unwrap_or_default()
    }
}

/// Norm column names of the plate sweep.
pub const BIHARMONIC_NORMS: [&str; 3] = ["h2", "h1", "l2"];
/// Norm column names of the Stokes sweep.
pub const STOKES_NORMS: [&str; 4] = ["u_h1", "u_l2", "p_l2", "pstar_l2"];

/// Plate sweep with `family` (plate12 or Adini) on `case`.
pub fn run_biharmonic(config: &SweepConfig, family: ElementFamily, case: &BiharmonicCase) -> Result<ErrorReport> {
    config.validate()?;
    let kind = match family {
        ElementFamily::Plate12 => SpaceKind::Plate,
        ElementFamily::Adini => SpaceKind::Adini,
        other => {
            return Err(Error::SpaceMismatch(format!("{} is not a plate element", other.name())));
        }
    };
    let mut report = ErrorReport::new(&BIHARMONIC_NORMS);
    for &n in &config.levels {
        let mesh = config.mesh(n)?;
        let space = FeSpace::new(mesh.clone(), kind)?;
        let (uh, _) = solve_biharmonic(&space, &case.load, config.quadrature, config.tolerance)?;
        let exact = |p, dx, dy| [case.exact.derivative(p, dx, dy), 0.0];
        let errors = [2, 1, 0]
            .iter()
            .map(|&m| broken_error_with(&uh, &exact, m, config.quadrature.error, Seminorm::MultiIndex))
            .collect::<Result<Vec<_>>>()?;
        report.push(n, space.dim(), mesh.h(), errors, None);
    }
    Ok(report)
}

/// Stokes sweep on `case`: velocity H1 and L2 errors, pressure and
/// postprocessed pressure L2 errors, and the divergence residual.
pub fn run_stokes(config: &SweepConfig, case: &StokesCase) -> Result<ErrorReport> {
    config.validate()?;
    let mut report = ErrorReport::new(&STOKES_NORMS);
    let q = config.quadrature.error;
    for &n in &config.levels {
        let mesh = config.mesh(n)?;
        let sol = solve_stokes(&mesh, &case.load, config.quadrature, config.tolerance)?;
        let u = |p, dx, dy| case.velocity.derivative(p, dx, dy);
        let p = |x, dx, dy| [case.pressure.derivative(x, dx, dy), 0.0];
        let pstar = postprocess_pressure(&sol.velocity, &sol.pressure, &case.load, config.quadrature.load)?;
        let errors = vec![
            broken_error_with(&sol.velocity, &u, 1, q, Seminorm::MultiIndex)?,
            broken_error_with(&sol.velocity, &u, 0, q, Seminorm::MultiIndex)?,
            broken_error_with(&sol.pressure, &p, 0, q, Seminorm::MultiIndex)?,
            broken_error_with(&pstar, &p, 0, q, Seminorm::MultiIndex)?,
        ];
        let div = divergence_residual(&sol.velocity)?;
        let dofs = sol.velocity.space.dim() + sol.pressure.space.dim();
        report.push(n, dofs, mesh.h(), errors, Some(div));
    }
    Ok(report)
}

/// `|u_h|_{1,h}` and the divergence residual of a Stokes solve, for the
/// divergence-free check relative to the solution size.
pub fn stokes_divergence_ratio(config: &SweepConfig, n: usize, load: &dyn VectorFunction2d) -> Result<(f64, f64)> {
    let mesh = config.mesh(n)?;
    let sol = solve_stokes(&mesh, load, config.quadrature, config.tolerance)?;
    Ok((divergence_residual(&sol.velocity)?, broken_seminorm(&sol.velocity, 1)?))
}

/// Structural checks of the complex at every level.
pub fn run_complex_check(config: &SweepConfig) -> Result<Vec<ComplexReport>> {
    config.validate()?;
    config.levels.iter().map(|&n| verify_complex(&config.mesh(n)?)).collect()
}

fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

/// CSV with header `n,dofs,<norm>,<norm>_order,...[,div_residual]`.
pub fn to_csv(report: &ErrorReport) -> String {
    let mut out = String::from("n,dofs");
    for norm in &report.norms {
        let _ = write!(out, ",{norm},{norm}_order");
    }
    let div = report.has_divergence();
    if div {
        out.push_str(",div_residual");
    }
    out.push('\n');
    for row in &report.rows {
        let _ = write!(out, "{},{}", row.n, row.dofs);
        for (e, o) in row.errors.iter().zip(&row.orders) {
            let _ = write!(out, ",{},{}", sci(*e), o.map(sci).unwrap_or_default());
        }
        if div {
            let _ = write!(out, ",{}", row.divergence_residual.map(sci).unwrap_or_default());
        }
        out.push('\n');
    }
    out
}

fn parse_number<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse {s:?}")))
}

fn parse_optional(s: &str, line: usize) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_number(s, line).map(Some)
    }
}

/// Reads a table written by [`to_csv`]. Mesh sizes are not stored, so `h` is
/// recomputed from `n` on `domain`.
pub fn parse_csv(text: &str, domain: Domain) -> Result<ErrorReport> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "n" || cols[1] != "dofs" {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let div = cols.last() == Some(&"div_residual");
    let norm_cols = &cols[2..cols.len() - usize::from(div)];
    if norm_cols.len() % 2 != 0 || norm_cols.chunks(2).any(|c| c[1] != format!("{}_order", c[0])) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut report = ErrorReport {
        norms: norm_cols.chunks(2).map(|c| c[0].to_string()).collect(),
        rows: Vec::new(),
    };
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse(format!("line {}: expected {} fields", i + 1, cols.len())));
        }
        let n: usize = parse_number(fields[0], i + 1)?;
        let mut errors = Vec::new();
        let mut orders = Vec::new();
        for pair in fields[2..2 + norm_cols.len()].chunks(2) {
            errors.push(parse_number(pair[0], i + 1)?);
            orders.push(parse_optional(pair[1], i + 1)?);
        }
        let h = ((domain.x_max - domain.x_min).powi(2) + (domain.y_max - domain.y_min).powi(2)).sqrt() / n as f64;
        report.rows.push(ErrorRow {
            n,
            dofs: parse_number(fields[1], i + 1)?,
            h,
            errors,
            orders,
            divergence_residual: if div { parse_optional(fields[cols.len() - 1], i + 1)? } else { None },
        });
    }
    Ok(report)
}

/// Human-readable table in the layout of the usual convergence tables.
pub fn to_table(report: &ErrorReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:>5} {:>8}", "n", "dofs");
    for norm in &report.norms {
        let _ = write!(out, " {:>12} {:>6}", norm, "order");
    }
    let div = report.has_divergence();
    if div {
        let _ = write!(out, " {:>12}", "max|div|");
    }
    out.push('\n');
    for row in &report.rows {
        let _ = write!(out, "{:>5} {:>8}", row.n, row.dofs);
        for (e, o) in row.errors.iter().zip(&row.orders) {
            let order = o.map(|o| format!("{o:.2}")).unwrap_or_default();
            let _ = write!(out, " {:>12} {:>6}", format!("{e:.3e}"), order);
        }
        if let (true, Some(d)) = (div, row.divergence_residual) {
            let _ = write!(out, " {:>12}", format!("{d:.1e}"));
        }
        out.push('\n');
    }
    out
}

const COMPLEX_HEADER: &str = "n,dim_w,dim_v,dim_p,dimension_identity,div_rank,div_nullity,curl_injectivity_defect,\
div_curl_defect,curl_conformity_defect,commutativity_defect,curl_commutativity_defect,rank_method,passed";

/// One CSV row per level of the complex check.
pub fn complex_to_csv(reports: &[ComplexReport], tol: f64) -> String {
    let mut out = format!("{COMPLEX_HEADER}\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.dim_w,
            r.dim_v,
            r.dim_p,
            r.dimension_identity,
            r.div_rank,
            r.div_nullity,
            r.curl_injectivity_defect,
            sci(r.div_curl_defect),
            sci(r.curl_conformity_defect),
            sci(r.commutativity_defect),
            sci(r.curl_commutativity_defect),
            r.rank_method,
            r.exact(tol)
        );
    }
    out
}

pub fn complex_to_table(reports: &[ComplexReport], tol: f64) -> String {
    let mut out = format!(
        "{:>4} {:>6} {:>6} {:>6} {:>9} {:>8} {:>8} {:>10} {:>10} {:>10} {:>10} {:>6}\n",
        "n", "dim W", "dim V", "dim P", "W+P-1=V", "rank B", "null B", "curl def", "|BC|", "comm", "curl comm", "ok"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:>4} {:>6} {:>6} {:>6} {:>9} {:>8} {:>8} {:>10} {:>10.1e} {:>10.1e} {:>10.1e} {:>6}",
            r.n,
            r.dim_w,
            r.dim_v,
            r.dim_p,
            r.dimension_identity,
            r.div_rank,
            r.div_nullity,
            r.curl_injectivity_defect,
            r.div_curl_defect,
            r.commutativity_defect,
            r.curl_commutativity_defect,
            if r.exact(tol) { "yes" } else { "NO" }
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            levels: vec![2, 4],
            ..SweepConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(small().validate().is_ok());
        for levels in [vec![], vec![4, 4], vec![8, 4], vec![1, 2]] {
            let c = SweepConfig { levels, ..small() };
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn single_level_has_no_orders() {
        let c = SweepConfig {
            levels: vec![4],
            ..small()
        };
        let r = run_biharmonic(&c, ElementFamily::Plate12, &BiharmonicCase::standard()).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.rows[0].orders.iter().all(Option::is_none));
        let csv = to_csv(&r);
        assert!(csv.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn csv_round_trip() {
        let r = run_stokes(&small(), &StokesCase::standard()).unwrap();
        let csv = to_csv(&r);
        let parsed = parse_csv(&csv, Domain::default()).unwrap();
        assert_eq!(to_csv(&parsed), csv);
        assert_eq!(parsed.norms, r.norms);
        for (a, b) in parsed.rows.iter().zip(&r.rows) {
            assert_eq!((a.n, a.dofs), (b.n, b.dofs));
            for (x, y) in a.errors.iter().zip(&b.errors) {
                assert_eq!(*x, sci(*y).parse::<f64>().unwrap());
            }
            assert_eq!(a.orders.iter().map(Option::is_some).collect::<Vec<_>>(), b.orders.iter().map(Option::is_some).collect::<Vec<_>>());
            assert!((a.h - b.h).abs() < 1e-15);
        }
        assert!(parse_csv("x,y\n", Domain::default()).is_err());
        assert!(parse_csv("n,dofs,h1,h1_order\n4,10,abc,\n", Domain::default()).is_err());
    }

    #[test]
    fn text_table_layout() {
        let r = run_biharmonic(&small(), ElementFamily::Adini, &BiharmonicCase::standard()).unwrap();
        let t = to_table(&r);
        assert_eq!(t.lines().count(), 3);
        assert!(t.lines().next().unwrap().contains("h2"));
    }

    #[test]
    fn complex_check_rows() {
        let reports = run_complex_check(&small()).unwrap();
        let csv = complex_to_csv(&reports, 1e-10);
        assert!(csv.lines().skip(1).all(|l| l.ends_with("true")));
        assert_eq!(complex_to_table(&reports, 1e-10).lines().count(), 3);
    }
}
