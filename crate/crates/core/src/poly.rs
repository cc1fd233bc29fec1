//! Bivariate polynomials.
//!
//! [`LocalPoly`] is the fixed-size representation used for shape functions in
//! scaled cell coordinates (degree at most 4 in each variable). [`Polynomial`]
//! is a growable dense representation used for closed-form exact solutions.

use std::ops::{Add, Mul, Neg, Sub};

/// Maximum exponent per variable for shape functions.
pub const LOCAL_DEGREE: usize = 4;
const N: usize = LOCAL_DEGREE + 1;

/// `sum c[i][j] x^i y^j` with `i, j <= 4`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalPoly {
    pub coeffs: [[f64; N]; N],
}

impl LocalPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(i: usize, j: usize, c: f64) -> Self {
        let mut p = Self::zero();
        p.coeffs[i][j] = c;
        p
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for row in self.coeffs.iter().rev() {
            let mut inner = 0.0;
            for &c in row.iter().rev() {
                inner = inner * y + c;
            }
            acc = acc * x + inner;
        }
        acc
    }

    pub fn dx(&self) -> Self {
        let mut out = Self::zero();
        for i in 1..N {
            for j in 0..N {
                out.coeffs[i - 1][j] = i as f64 * self.coeffs[i][j];
            }
        }
        out
    }

    pub fn dy(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..N {
            for j in 1..N {
                out.coeffs[i][j - 1] = j as f64 * self.coeffs[i][j];
            }
        }
        out
    }

    pub fn derivative(&self, dx: usize, dy: usize) -> Self {
        let mut p = *self;
        for _ in 0..dx {
            p = p.dx();
        }
        for _ in 0..dy {
            p = p.dy();
        }
        p
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.coeffs.iter_mut().flatten().for_each(|c| *c *= s);
        out
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.coeffs.iter_mut().flatten().zip(other.coeffs.iter().flatten()) {
            *a += s * b;
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().flatten().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Dense bivariate polynomial `sum c[i][j] x^i y^j` of arbitrary degree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<Vec<f64>>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn x() -> Self {
        Self::monomial(1, 0, 1.0)
    }

    pub fn y() -> Self {
        Self::monomial(0, 1, 1.0)
    }

    pub fn monomial(i: usize, j: usize, c: f64) -> Self {
        let mut coeffs = vec![vec![0.0; j + 1]; i + 1];
        coeffs[i][j] = c;
        Self { coeffs }
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0)
    }

    fn set(&mut self, i: usize, j: usize, c: f64) {
        if self.coeffs.len() <= i {
            self.coeffs.resize(i + 1, Vec::new());
        }
        if self.coeffs[i].len() <= j {
            self.coeffs[i].resize(j + 1, 0.0);
        }
        self.coeffs[i][j] = c;
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let mut deg = None;
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c != 0.0 {
                    deg = Some(deg.map_or(i + j, |d: usize| d.max(i + j)));
                }
            }
        }
        deg
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for row in self.coeffs.iter().rev() {
            let inner = row.iter().rev().fold(0.0, |s, &c| s * y + c);
            acc = acc * x + inner;
        }
        acc
    }

    pub fn dx(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, row)| row.iter().map(|c| i as f64 * c).collect())
            .collect();
        Self { coeffs }
    }

    pub fn dy(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|row| row.iter().enumerate().skip(1).map(|(j, c)| j as f64 * c).collect())
            .collect();
        Self { coeffs }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|r| r.iter().map(|c| c * s).collect()).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(1.0), |acc, _| &acc * self)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (i, row) in rhs.coeffs.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c != 0.0 {
                    out.set(i, j, out.coeff(i, j) + c);
                }
            }
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &rhs.scale(-1.0)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (i, a_row) in self.coeffs.iter().enumerate() {
            for (j, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (k, b_row) in rhs.coeffs.iter().enumerate() {
                    for (l, &b) in b_row.iter().enumerate() {
                        if b != 0.0 {
                            out.set(i + k, j + l, out.coeff(i + k, j + l) + a * b);
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_poly_derivatives() {
        // p = 3 x^2 y + y^4
        let p = LocalPoly::monomial(2, 1, 3.0).axpy(1.0, &LocalPoly::monomial(0, 4, 1.0));
        assert_eq!(p.eval(2.0, 1.0), 13.0);
        assert_eq!(p.dx().eval(2.0, 1.0), 12.0);
        assert_eq!(p.dy().eval(2.0, 1.0), 16.0);
        assert_eq!(p.derivative(0, 2).eval(2.0, 1.0), 12.0);
        assert_eq!(p.derivative(2, 1).eval(0.3, 0.7), 6.0);
        assert_eq!(p.derivative(3, 0).max_abs_coeff(), 0.0);
    }

    #[test]
    fn polynomial_algebra() {
        let x = Polynomial::x();
        let y = Polynomial::y();
        // (x - 2)(x + y) = x^2 + xy - 2x - 2y
        let p = &(&x - &Polynomial::constant(2.0)) * &(&x + &y);
        assert_eq!(p.eval(1.5, -0.5), (1.5 - 2.0) * (1.5 - 0.5));
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.dx().eval(1.0, 1.0), 2.0 + 1.0 - 2.0);
        assert_eq!(p.dy().eval(1.0, 1.0), 1.0 - 2.0);
        assert_eq!(x.pow(3).eval(2.0, 0.0), 8.0);
        assert_eq!(Polynomial::zero().degree(), None);
        assert_eq!((-&y).eval(0.0, 4.0), -4.0);
    }
}
