//! Acceptance suite: reproduces the reference convergence tables and checks
//! the structural properties of the elements and the discrete complex.
//!
//! Runs as a plain binary and prints one PASS/FAIL line per criterion,
//! followed by the details of every failed check.

use std::process::ExitCode;
use std::sync::Arc;

use ncstokes_core::analysis::{interpolation_errors, observed_order, verify_complex, ComplexReport};
use ncstokes_core::cases::{BiharmonicCase, StokesCase};
use ncstokes_core::convergence::{run_biharmonic, run_stokes, stokes_divergence_ratio, ErrorReport, SweepConfig};
use ncstokes_core::elements::{kronecker_residual, random_shape, simpson_defect, ElementBasis, ElementFamily};
use ncstokes_core::functions::{Curl, ExpPolynomial, Function2d, SinProduct, StokesLoad, VectorFunction2d};
use ncstokes_core::mesh::{CellGeometry, Domain, Mesh};
use ncstokes_core::poly::Polynomial;
use ncstokes_core::spaces::SpaceKind;
use rand::{Rng, SeedableRng};

const LEVELS: [usize; 5] = [4, 8, 16, 32, 64];

/// Plate element, errors in (H2, H1, L2) per level.
const TABLE_PLATE: [[f64; 3]; 5] = [
    [1.209e0, 7.041e-2, 9.209e-3],
    [3.528e-1, 9.173e-3, 4.139e-4],
    [8.880e-2, 1.063e-3, 2.060e-5],
    [2.140e-2, 1.242e-4, 1.202e-6],
    [5.198e-3, 1.487e-5, 7.428e-8],
];

/// Adini element, errors in (H2, H1, L2) per level.
const TABLE_ADINI: [[f64; 3]; 5] = [
    [1.112e0, 1.270e-1, 2.195e-2],
    [3.113e-1, 3.060e-2, 6.283e-3],
    [7.681e-2, 7.642e-3, 1.636e-3],
    [1.901e-2, 1.915e-3, 4.137e-4],
    [4.738e-3, 4.791e-4, 1.037e-4],
];

/// Stokes errors (u H1, u L2, p L2, postprocessed p L2) per level.
const TABLE_STOKES: [[f64; 4]; 5] = [
    [2.473e0, 1.100e-1, 6.569e-1, 1.045e0],
    [7.505e-1, 1.657e-2, 3.485e-1, 3.187e-1],
    [1.968e-1, 2.305e-3, 1.772e-1, 6.173e-2],
    [4.846e-2, 2.399e-4, 8.932e-2, 9.938e-3],
    [1.188e-2, 2.878e-5, 4.477e-2, 1.869e-3],
];

const TABLE_TOL: f64 = 0.05;

struct Criterion {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.failures.push(what);
        }
    }

    fn note(&mut self, what: String) {
        self.notes.push(what);
    }
}

fn relative(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn compare_table<const N: usize>(
    c: &mut Criterion,
    report: &ErrorReport,
    table: &[[f64; N]],
    tolerance: impl Fn(usize, usize) -> f64,
) {
    for (level, (row, want)) in report.rows.iter().zip(table).enumerate() {
        for (k, (&got, &w)) in row.errors.iter().zip(want).enumerate() {
            let tol = tolerance(level, k);
            c.check(
                relative(got, w) <= tol,
                format!(
                    "n={} {}: {got:.4e} vs {w:.4e} ({:+.1}%, allowed {:.0}%)",
                    row.n,
                    report.norms[k],
                    100.0 * (got - w) / w,
                    100.0 * tol
                ),
            );
        }
    }
}

fn compare_orders(c: &mut Criterion, report: &ErrorReport, targets: &[f64], band: f64) {
    for (k, (order, target)) in report.final_orders().iter().zip(targets).enumerate() {
        let order = order.unwrap_or(f64::NAN);
        c.check(
            (order - target).abs() <= band,
            format!("final {} order {order:.3} outside {target} +- {band}", report.norms[k]),
        );
        c.note(format!("{} {order:.2}", report.norms[k]));
    }
}

fn sweep() -> SweepConfig {
    SweepConfig {
        levels: LEVELS.to_vec(),
        ..SweepConfig::default()
    }
}

fn table_plate() -> Criterion {
    let mut c = Criterion::new();
    match run_biharmonic(&sweep(), ElementFamily::Plate12, &BiharmonicCase::standard()) {
        Ok(r) => {
            // the finest L2 entry is close to the quadrature/rounding floor
            compare_table(&mut c, &r, &TABLE_PLATE, |level, k| if level == 4 && k == 2 { 0.10 } else { TABLE_TOL });
            compare_orders(&mut c, &r, &[2.0, 3.0, 4.0], 0.15);
        }
        Err(e) => c.check(false, format!("sweep failed: {e}")),
    }
    c
}

fn table_adini() -> Criterion {
    let mut c = Criterion::new();
    match run_biharmonic(&sweep(), ElementFamily::Adini, &BiharmonicCase::standard()) {
        Ok(r) => {
            compare_table(&mut c, &r, &TABLE_ADINI, |_, _| TABLE_TOL);
            compare_orders(&mut c, &r, &[2.0, 2.0, 2.0], 0.1);
        }
        Err(e) => c.check(false, format!("sweep failed: {e}")),
    }
    c
}

fn table_stokes() -> Criterion {
    let mut c = Criterion::new();
    match run_stokes(&sweep(), &StokesCase::standard()) {
        Ok(r) => {
            compare_table(&mut c, &r, &TABLE_STOKES, |_, _| TABLE_TOL);
            let mut orders = r.clone();
            orders.norms.truncate(3);
            compare_orders(&mut c, &orders, &[2.0, 3.0, 1.0], 0.15);
            // consistency of the reference entries with the reference orders
            // printed next to them (3.03 and 3.08 for the velocity L2 error)
            let h = |n: f64| (5.0f64).sqrt() / n;
            let printed = [(TABLE_STOKES[1][1], TABLE_STOKES[2][1], 3.03), (TABLE_STOKES[2][1], TABLE_STOKES[3][1], 3.08)];
            for (i, (coarse, fine, order)) in printed.iter().enumerate() {
                let n = LEVELS[i + 1] as f64;
                let implied = observed_order(*coarse, *fine, h(n), h(2.0 * n));
                if (implied - order).abs() > 0.02 {
                    c.note(format!(
                        "reference u_l2 entries at n={},{} imply order {implied:.2}, printed {order}",
                        n,
                        2.0 * n
                    ));
                }
            }
        }
        Err(e) => c.check(false, format!("sweep failed: {e}")),
    }
    c
}

fn complex_reports() -> Vec<(usize, Result<ComplexReport, String>)> {
    [2usize, 4, 8, 16]
        .iter()
        .map(|&n| {
            let mesh = Arc::new(Mesh::uniform(Domain::default(), n, n).expect("valid mesh"));
            (n, verify_complex(&mesh).map_err(|e| e.to_string()))
        })
        .collect()
}

fn exactness(reports: &[(usize, Result<ComplexReport, String>)]) -> Criterion {
    let mut c = Criterion::new();
    for (n, r) in reports {
        match r {
            Ok(r) => {
                c.check(r.dimension_identity, format!("n={n}: {} + {} - 1 != {}", r.dim_w, r.dim_p, r.dim_v));
                c.check(r.div_rank + 1 == r.dim_p, format!("n={n}: div rank {} != {}", r.div_rank, r.dim_p - 1));
                c.check(r.div_nullity == r.dim_w, format!("n={n}: div nullity {} != {}", r.div_nullity, r.dim_w));
                c.check(r.curl_injectivity_defect == 0, format!("n={n}: curl rank defect {}", r.curl_injectivity_defect));
                c.check(r.div_curl_defect <= 1e-10, format!("n={n}: |B C| = {:e}", r.div_curl_defect));
                let expect_method = if *n <= 4 { "svd" } else { "cholesky" };
                c.check(r.rank_method == expect_method, format!("n={n}: rank method {}", r.rank_method));
                c.note(format!("n={n} ({}, {}, {}) {}", r.dim_w, r.dim_v, r.dim_p, r.rank_method));
            }
            Err(e) => c.check(false, format!("n={n}: {e}")),
        }
    }
    c
}

fn commutativity(reports: &[(usize, Result<ComplexReport, String>)]) -> Criterion {
    let mut c = Criterion::new();
    let fields = ncstokes_core::analysis::stream_battery().len() + ncstokes_core::analysis::gradient_battery().len();
    c.check(fields >= 5, format!("battery has only {fields} fields"));
    c.note(format!("{fields} fields"));
    for (n, r) in reports {
        match r {
            Ok(r) => {
                c.check(r.commutativity_defect <= 1e-10, format!("n={n}: div defect {:e}", r.commutativity_defect));
                c.check(
                    r.curl_commutativity_defect <= 1e-10,
                    format!("n={n}: curl defect {:e}", r.curl_commutativity_defect),
                );
                c.check(r.curl_conformity_defect <= 1e-10, format!("n={n}: curl conformity {:e}", r.curl_conformity_defect));
            }
            Err(e) => c.check(false, format!("n={n}: {e}")),
        }
    }
    c
}

fn divergence_free() -> Criterion {
    let mut c = Criterion::new();
    let config = sweep();
    let standard = StokesCase::standard();
    let other = StokesLoad {
        velocity: Curl(ExpPolynomial::new(-1.0, 0.5, &Polynomial::x() * &ncstokes_core::cases::domain_bubble().pow(2))),
        pressure: SinProduct { amplitude: 2.0, kx: 1.0, ky: 3.0 },
    };
    // a shear load that is not a gradient, so the velocity is nonzero
    let shear = [ExpPolynomial::polynomial(Polynomial::y()), ExpPolynomial::polynomial(Polynomial::zero())];
    let loads: [(&str, &dyn VectorFunction2d); 3] =
        [("standard", &standard.load), ("alternative", &other), ("shear", &shear)];
    for (name, load) in loads {
        for &n in &LEVELS {
            match stokes_divergence_ratio(&config, n, load) {
                Ok((div, seminorm)) => c.check(
                    div <= 1e-10 * seminorm,
                    format!("{name} n={n}: max div {div:e} vs |u_h|_1 {seminorm:e}"),
                ),
                Err(e) => c.check(false, format!("{name} n={n}: {e}")),
            }
        }
    }
    c
}

fn unisolvency() -> Criterion {
    let mut c = Criterion::new();
    let mesh = Mesh::uniform(Domain::default(), 8, 8).expect("valid mesh");
    let cells = [CellGeometry::reference(), mesh.cell_geometry(19).expect("cell in range")];
    for cell in cells {
        for family in [ElementFamily::Plate12, ElementFamily::Velocity12, ElementFamily::Adini] {
            match ElementBasis::new(family, cell) {
                Ok(b) => {
                    let r = kronecker_residual(&b);
                    c.check(r <= 1e-10, format!("{} on {:?}: {r:e}", family.name(), (cell.hx(), cell.hy())));
                }
                Err(e) => c.check(false, format!("{}: {e}", family.name())),
            }
        }
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for cell in cells {
        for _ in 0..200 {
            let coeffs: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            worst = worst.max(simpson_defect(&random_shape(ElementFamily::Plate12, &cell, &coeffs), &cell));
        }
    }
    c.check(worst <= 1e-12, format!("Simpson identity defect {worst:e}"));
    c.note(format!("Simpson defect {worst:.1e}"));
    c
}

fn interpolation_orders() -> Criterion {
    let mut c = Criterion::new();
    let functions: [(&str, Box<dyn Function2d>); 2] = [
        ("exp(x+2y)", Box::new(ExpPolynomial::new(1.0, 2.0, Polynomial::constant(1.0)))),
        (
            "sin(pi x/2) sin(pi y)",
            Box::new(SinProduct { amplitude: 1.0, kx: std::f64::consts::FRAC_PI_2, ky: std::f64::consts::PI }),
        ),
    ];
    for (name, u) in &functions {
        let mut previous: Option<(f64, [f64; 3])> = None;
        let mut worst = [f64::INFINITY; 3];
        for &n in &LEVELS {
            let mesh = Arc::new(Mesh::uniform(Domain::default(), n, n).expect("valid mesh"));
            match interpolation_errors(&mesh, SpaceKind::Plate, u.as_ref()) {
                Ok(errs) => {
                    if let Some((h, prev)) = previous {
                        for j in [1usize, 2] {
                            let slope = observed_order(prev[j], errs[j], h, mesh.h());
                            worst[j] = worst[j].min(slope);
                            c.check(slope >= (4 - j) as f64 - 0.15, format!("{name} n={n} j={j}: slope {slope:.3}"));
                        }
                    }
                    previous = Some((mesh.h(), errs));
                }
                Err(e) => c.check(false, format!("{name} n={n}: {e}")),
            }
        }
        c.note(format!("{name}: min slopes j=1 {:.2}, j=2 {:.2}", worst[1], worst[2]));
    }
    c
}

type Check<'a> = Box<dyn Fn() -> Criterion + 'a>;

fn main() -> ExitCode {
    let reports = complex_reports();
    let criteria: Vec<(&str, Check<'_>)> = vec![
        ("1 plate12 biharmonic table", Box::new(table_plate)),
        ("2 adini biharmonic table", Box::new(table_adini)),
        ("3 stokes table", Box::new(table_stokes)),
        ("4 exactness of the complex", Box::new(|| exactness(&reports))),
        ("5 commutativity", Box::new(|| commutativity(&reports))),
        ("6 divergence-free velocity", Box::new(divergence_free)),
        ("7 unisolvency", Box::new(unisolvency)),
        ("8 interpolation orders", Box::new(interpolation_orders)),
    ];
    let mut failed = 0;
    let mut details = Vec::new();
    for (name, run) in &criteria {
        let c = run();
        let status = if c.failures.is_empty() { "PASS" } else { "FAIL" };
        let notes = if c.notes.is_empty() { String::new() } else { format!(" [{}]", c.notes.join("; ")) };
        println!("criterion {name}: {status}{notes}");
        if !c.failures.is_empty() {
            failed += 1;
            details.extend(c.failures.iter().map(|f| format!("  criterion {name}: {f}")));
        }
    }
    for d in &details {
        println!("{d}");
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
