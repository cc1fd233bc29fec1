//! Manufactured solutions for the convergence studies.

use std::f64::consts::PI;

use crate::functions::{Bilaplacian, Curl, ExpPolynomial, Function2d, SinProduct, StokesLoad, VectorFunction2d};
use crate::mesh::Point;
use crate::poly::Polynomial;

/// `x (x - 2) y (y - 1)`, vanishing on the boundary of `[0,2] x [0,1]`.
pub fn domain_bubble() -> Polynomial {
    let x = Polynomial::x();
    let y = Polynomial::y();
    let c = Polynomial::constant;
    &(&(&x * &(&x - &c(2.0))) * &y) * &(&y - &c(1.0))
}

/// Clamped plate problem `lap^2 u = f` with a known solution.
#[derive(Debug, Clone)]
pub struct BiharmonicCase {
    pub name: &'static str,
    pub exact: ExpPolynomial,
    pub load: Bilaplacian<ExpPolynomial>,
}

impl BiharmonicCase {
    pub fn new(name: &'static str, exact: ExpPolynomial) -> Self {
        Self {
            name,
            load: Bilaplacian(exact.clone()),
            exact,
        }
    }

    /// `u = (3x^2 - 2y + 6xy^2) (x(x-2)y(y-1))^2`
    pub fn standard() -> Self {
        let x = Polynomial::x();
        let y = Polynomial::y();
        let front = &(&Polynomial::monomial(2, 0, 3.0) - &y.scale(2.0)) + &(&x * &y.pow(2)).scale(6.0);
        Self::new("plate-polynomial", ExpPolynomial::polynomial(&front * &domain_bubble().pow(2)))
    }
}

/// Stokes problem with `u = curl psi` and a given pressure.
#[derive(Debug, Clone)]
pub struct StokesCase {
    pub name: &'static str,
    pub velocity: Curl<ExpPolynomial>,
    pub pressure: SinProduct,
    pub load: StokesLoad<Curl<ExpPolynomial>, SinProduct>,
}

impl StokesCase {
    pub fn new(name: &'static str, stream: ExpPolynomial, pressure: SinProduct) -> Self {
        let velocity = Curl(stream);
        Self {
            name,
            load: StokesLoad {
                velocity: velocity.clone(),
                pressure,
            },
            velocity,
            pressure,
        }
    }

    /// `u = curl(exp(x + 2y) (x(x-2)y(y-1))^2)`, `p = -sin(2 pi x) sin(2 pi y)`
    pub fn standard() -> Self {
        Self::new(
            "stokes-exp-sin",
            ExpPolynomial::new(1.0, 2.0, domain_bubble().pow(2)),
            SinProduct {
                amplitude: -1.0,
                kx: 2.0 * PI,
                ky: 2.0 * PI,
            },
        )
    }
}

/// Worst relative mismatch between `f`'s `(dx, dy)` derivatives, for all
/// `dx + dy <= order`, and nested central differences of its value
/// (one Richardson step, so the truncation error is `O(h^4)`).
pub fn max_fd_mismatch(f: &dyn Function2d, points: &[Point], order: usize, h: f64) -> f64 {
    let value = |p: Point| f.value(p);
    let mut worst = 0.0f64;
    for &p in points {
        for k in 1..=order {
            for dy in 0..=k {
                let exact = f.derivative(p, k - dy, dy);
                let fd = richardson(|s| crate::functions::finite_difference(&value, p, k - dy, dy, s), h);
                worst = worst.max((exact - fd).abs() / exact.abs().max(1.0));
            }
        }
    }
    worst
}

fn richardson(d: impl Fn(f64) -> f64, h: f64) -> f64 {
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Same as [`max_fd_mismatch`] but differencing a lower-order oracle, so the
/// comparison stays accurate for high derivatives: each `(dx, dy)` derivative
/// is compared with a first central difference of a neighbouring one.
pub fn max_fd_step_mismatch(f: &dyn Function2d, points: &[Point], order: usize, h: f64) -> f64 {
    let mut worst = 0.0f64;
    for &p in points {
        for k in 1..=order {
            for dy in 0..=k {
                let dx = k - dy;
                let exact = f.derivative(p, dx, dy);
                let fd = richardson(
                    |s| {
                        if dx > 0 {
                            (f.derivative([p[0] + s, p[1]], dx - 1, dy) - f.derivative([p[0] - s, p[1]], dx - 1, dy))
                                / (2.0 * s)
                        } else {
                            (f.derivative([p[0], p[1] + s], dx, dy - 1) - f.derivative([p[0], p[1] - s], dx, dy - 1))
                                / (2.0 * s)
                        }
                    },
                    h,
                );
                worst = worst.max((exact - fd).abs() / exact.abs().max(1.0));
            }
        }
    }
    worst
}

/// Componentwise version of [`max_fd_step_mismatch`] for vector fields.
pub fn max_fd_step_mismatch_vector(v: &dyn VectorFunction2d, points: &[Point], order: usize, h: f64) -> f64 {
    struct Component<'a>(&'a dyn VectorFunction2d, usize);
    impl Function2d for Component<'_> {
        fn derivative(&self, p: Point, dx: usize, dy: usize) -> f64 {
            self.0.derivative(p, dx, dy)[self.1]
        }
    }
    (0..2)
        .map(|i| max_fd_step_mismatch(&Component(v, i), points, order, h))
        .fold(0.0, f64::max)
}
