//! Smooth functions with exact derivatives, used as exact solutions, loads and
//! interpolation targets.

use crate::mesh::Point;
use crate::poly::Polynomial;

/// A scalar function on the plane with derivatives of any order.
pub trait Function2d: Send + Sync {
    /// `d^(dx+dy) f / dx^dx dy^dy` at `p`.
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> f64;

    fn value(&self, p: Point) -> f64 {
        self.derivative(p, 0, 0)
    }

    fn gradient(&self, p: Point) -> [f64; 2] {
        [self.derivative(p, 1, 0), self.derivative(p, 0, 1)]
    }
}

/// A vector field on the plane, differentiated componentwise.
pub trait VectorFunction2d: Send + Sync {
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> [f64; 2];

    fn value(&self, p: Point) -> [f64; 2] {
        self.derivative(p, 0, 0)
    }

    fn divergence(&self, p: Point) -> f64 {
        self.derivative(p, 1, 0)[0] + self.derivative(p, 0, 1)[1]
    }
}

impl<F: Function2d + ?Sized> Function2d for &F {
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> f64 {
        (**self).derivative(p, dx, dy)
    }
}

impl<F: Function2d + ?Sized> Function2d for Box<F> {
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> f64 {
        (**self).derivative(p, dx, dy)
    }
}

impl<F: VectorFunction2d + ?Sized> VectorFunction2d for &F {
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> [f64; 2] {
        (**self).derivative(p, dx, dy)
    }
}

impl<F: VectorFunction2d + ?Sized> VectorFunction2d for Box<F> {
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> [f64; 2] {
        (**self).derivative(p, dx, dy)
    }
}

/// A pair of scalar functions viewed as a vector field.
impl<F: Function2d> VectorFunction2d for [F; 2] {
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> [f64; 2] {
        [self[0].derivative(p, dx, dy), self[1].derivative(p, dx, dy)]
    }
}

impl Function2d for Polynomial {
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> f64 {
        let mut q = self.clone();
        for _ in 0..dx {
            q = q.dx();
        }
        for _ in 0..dy {
            q = q.dy();
        }
        q.eval(p[0], p[1])
    }
}

/// Derivatives up to this total order are tabulated on construction.
const TABLE_ORDER: usize = 6;

fn table_index(dx: usize, dy: usize) -> usize {
    let k = dx + dy;
    k * (k + 1) / 2 + dy
}

/// `exp(a x + b y) * P(x, y)`; a plain polynomial when `a = b = 0`.
#[derive(Debug, Clone)]
pub struct ExpPolynomial {
    pub a: f64,
    pub b: f64,
    pub poly: Polynomial,
    table: Vec<Polynomial>,
}

impl ExpPolynomial {
    pub fn new(a: f64, b: f64, poly: Polynomial) -> Self {
        let mut table = vec![Polynomial::zero(); table_index(0, TABLE_ORDER) + 1];
        table[0] = poly.clone();
        for k in 1..=TABLE_ORDER {
            for dy in 0..=k {
                let dx = k - dy;
                table[table_index(dx, dy)] = if dx > 0 {
                    Self::step_x(a, &table[table_index(dx - 1, dy)])
                } else {
                    Self::step_y(b, &table[table_index(dx, dy - 1)])
                };
            }
        }
        Self { a, b, poly, table }
    }

    pub fn polynomial(poly: Polynomial) -> Self {
        Self::new(0.0, 0.0, poly)
    }

    fn step_x(a: f64, p: &Polynomial) -> Polynomial {
        &p.scale(a) + &p.dx()
    }

    fn step_y(b: f64, p: &Polynomial) -> Polynomial {
        &p.scale(b) + &p.dy()
    }

    /// Polynomial factor of the `(dx, dy)` derivative.
    pub fn derivative_factor(&self, dx: usize, dy: usize) -> Polynomial {
        if dx + dy <= TABLE_ORDER {
            return self.table[table_index(dx, dy)].clone();
        }
        let mut q = self.poly.clone();
        for _ in 0..dx {
            q = Self::step_x(self.a, &q);
        }
        for _ in 0..dy {
            q = Self::step_y(self.b, &q);
        }
        q
    }

    fn exp_factor(&self, p: Point) -> f64 {
        if self.a == 0.0 && self.b == 0.0 {
            1.0
        } else {
            (self.a * p[0] + self.b * p[1]).exp()
        }
    }
}

impl Function2d for ExpPolynomial {
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> f64 {
        let e = self.exp_factor(p);
        if dx + dy <= TABLE_ORDER {
            e * self.table[table_index(dx, dy)].eval(p[0], p[1])
        } else {
            e * self.derivative_factor(dx, dy).eval(p[0], p[1])
        }
    }
}

/// `amplitude * sin(kx x) * sin(ky y)`
#[derive(Debug, Clone, Copy)]
pub struct SinProduct {
    pub amplitude: f64,
    pub kx: f64,
    pub ky: f64,
}

fn sin_derivative(k: f64, t: f64, d: usize) -> f64 {
    let s = (k * t).sin();
    let c = (k * t).cos();
    let v = match d % 4 {
        0 => s,
        1 => c,
        2 => -s,
        _ => -c,
    };
    k.powi(d as i32) * v
}

impl Function2d for SinProduct {
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> f64 {
        self.amplitude * sin_derivative(self.kx, p[0], dx) * sin_derivative(self.ky, p[1], dy)
    }
}

/// `curl psi = (d psi/dy, -d psi/dx)`
#[derive(Debug, Clone)]
pub struct Curl<F>(pub F);

impl<F: Function2d> VectorFunction2d for Curl<F> {
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> [f64; 2] {
        [self.0.derivative(p, dx, dy + 1), -self.0.derivative(p, dx + 1, dy)]
    }
}

/// `lap^2 u`
#[derive(Debug, Clone)]
pub struct Bilaplacian<F>(pub F);

impl<F: Function2d> Function2d for Bilaplacian<F> {
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> f64 {
        let u = &self.0;
        u.derivative(p, dx + 4, dy) + 2.0 * u.derivative(p, dx + 2, dy + 2) + u.derivative(p, dx, dy + 4)
    }
}

/// Stokes momentum load `-lap u + grad p`.
#[derive(Debug, Clone)]
pub struct StokesLoad<U, P> {
    pub velocity: U,
    pub pressure: P,
}

impl<U: VectorFunction2d, P: Function2d> VectorFunction2d for StokesLoad<U, P> {
    fn derivative(&self, p: Point, dx: usize, dy: usize) -> [f64; 2] {
        let uxx = self.velocity.derivative(p, dx + 2, dy);
        let uyy = self.velocity.derivative(p, dx, dy + 2);
        [
            -(uxx[0] + uyy[0]) + self.pressure.derivative(p, dx + 1, dy),
            -(uxx[1] + uyy[1]) + self.pressure.derivative(p, dx, dy + 1),
        ]
    }
}

/// The zero function, usable as scalar or vector.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl Function2d for Zero {
    fn derivative(&self, _: Point, _: usize, _: usize) -> f64 {
        0.0
    }
}

impl VectorFunction2d for Zero {
    fn derivative(&self, _: Point, _: usize, _: usize) -> [f64; 2] {
        [0.0; 2]
    }
}

/// A constant vector field.
#[derive(Debug, Clone, Copy)]
pub struct ConstantVector(pub [f64; 2]);

impl VectorFunction2d for ConstantVector {
    fn derivative(&self, _: Point, dx: usize, dy: usize) -> [f64; 2] {
        if dx + dy == 0 {
            self.0
        } else {
            [0.0; 2]
        }
    }
}

/// Central finite-difference approximation of `f`'s `(dx, dy)` derivative,
/// built by nesting first differences with step `h`.
pub fn finite_difference(f: &dyn Fn(Point) -> f64, p: Point, dx: usize, dy: usize, h: f64) -> f64 {
    if dx > 0 {
        let g = |q: Point| finite_difference(f, q, dx - 1, dy, h);
        (g([p[0] + h, p[1]]) - g([p[0] - h, p[1]])) / (2.0 * h)
    } else if dy > 0 {
        let g = |q: Point| finite_difference(f, q, dx, dy - 1, h);
        (g([p[0], p[1] + h]) - g([p[0], p[1] - h])) / (2.0 * h)
    } else {
        f(p)
    }
}
