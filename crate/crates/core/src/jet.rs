//! Forward-mode Taylor arithmetic to second order.
//!
//! A [`Jet<N>`] carries a value together with its gradient and Hessian with
//! respect to `N` independent variables. Propagating jets through a
//! computation yields exact first and second derivatives (up to rounding),
//! which the geometry kernels use instead of finite differences: metric
//! derivatives, moving frames and lift charts all stay at machine precision.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Value, gradient and Hessian of a scalar quantity in `N` variables.
///
/// The Hessian is stored as a full symmetric matrix; the arithmetic below
/// preserves symmetry exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
    pub h: [[f64; N]; N],
}

pub type Jet2 = Jet<2>;
pub type Jet3 = Jet<3>;
pub type Jet4 = Jet<4>;

impl<const N: usize> Jet<N> {
    pub const fn constant(v: f64) -> Self {
        Jet { v, d: [0.0; N], h: [[0.0; N]; N] }
    }

    /// The `i`-th independent variable with value `v`.
    pub fn variable(i: usize, v: f64) -> Self {
        let mut j = Self::constant(v);
        j.d[i] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.v
    }

    /// Chain rule through a scalar function with derivatives `df`, `ddf` at `self.v`.
    fn chain(&self, f: f64, df: f64, ddf: f64) -> Self {
        let mut out = Jet { v: f, d: [0.0; N], h: [[0.0; N]; N] };
        for i in 0..N {
            out.d[i] = df * self.d[i];
        }
        for i in 0..N {
            for j in 0..N {
                out.h[i][j] = df * self.h[i][j] + ddf * self.d[i] * self.d[j];
            }
        }
        out
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    /// Square root; the caller is responsible for rejecting negative values.
    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    /// Integer power by repeated multiplication, so that `x^2` at `x = 0`
    /// has the exact Hessian rather than a `0 * infinity` artifact.
    pub fn powi(self, n: i32) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut acc = Self::constant(1.0);
        let mut base = self;
        let mut k = n as u32;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.v += rhs.v;
        for i in 0..N {
            self.d[i] += rhs.d[i];
            for j in 0..N {
                self.h[i][j] += rhs.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self.v -= rhs.v;
        for i in 0..N {
            self.d[i] -= rhs.d[i];
            for j in 0..N {
                self.h[i][j] -= rhs.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for i in 0..N {
            self.d[i] = -self.d[i];
            for j in 0..N {
                self.h[i][j] = -self.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Jet { v: self.v * rhs.v, d: [0.0; N], h: [[0.0; N]; N] };
        for i in 0..N {
            out.d[i] = self.d[i] * rhs.v + self.v * rhs.d[i];
        }
        for i in 0..N {
            for j in 0..N {
                out.h[i][j] = self.h[i][j] * rhs.v
                    + self.d[i] * rhs.d[j]
                    + self.d[j] * rhs.d[i]
                    + self.v * rhs.h[i][j];
            }
        }
        out
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        // q = a/b solved from a = q b, one derivative order at a time.
        let b = rhs.v;
        let q = self.v / b;
        let mut out = Jet { v: q, d: [0.0; N], h: [[0.0; N]; N] };
        for i in 0..N {
            out.d[i] = (self.d[i] - q * rhs.d[i]) / b;
        }
        for i in 0..N {
            for j in 0..N {
                out.h[i][j] = (self.h[i][j]
                    - out.d[i] * rhs.d[j]
                    - out.d[j] * rhs.d[i]
                    - q * rhs.h[i][j])
                    / b;
            }
        }
        out
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self * Self::constant(rhs)
    }
}

impl<const N: usize> Add<f64> for Jet<N> {
    type Output = Self;
    fn add(mut self, rhs: f64) -> Self {
        self.v += rhs;
        self
    }
}

impl<const N: usize> AddAssign for Jet<N> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Jet<2> {
    /// Embed a jet in `(u, v)` into `(u, v, θ)` with vanishing θ-derivatives.
    pub fn lift3(&self) -> Jet<3> {
        let mut out = Jet::<3>::constant(self.v);
        for i in 0..2 {
            out.d[i] = self.d[i];
            for j in 0..2 {
                out.h[i][j] = self.h[i][j];
            }
        }
        out
    }
}

/// Scalar types the geometry kernels can be written over: plain `f64` for
/// point evaluation and [`Jet`] for exact derivative propagation.
pub trait Smooth:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn c(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn zero() -> Self {
        Self::c(0.0)
    }
    fn one() -> Self {
        Self::c(1.0)
    }
}

impl Smooth for f64 {
    fn c(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

impl<const N: usize> Smooth for Jet<N> {
    fn c(v: f64) -> Self {
        Self::constant(v)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        Jet::sqrt(self)
    }
    fn sin(self) -> Self {
        Jet::sin(self)
    }
    fn cos(self) -> Self {
        Jet::cos(self)
    }
    fn exp(self) -> Self {
        Jet::exp(self)
    }
    fn powi(self, n: i32) -> Self {
        Jet::powi(self, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn square_of_variable_has_quadratic_jet() {
        let u = Jet2::variable(0, 3.0);
        let q = u * u;
        assert_eq!(q.v, 9.0);
        assert_eq!(q.d[0], 6.0);
        assert_eq!(q.h[0][0], 2.0);
        assert_eq!(q.d[1], 0.0);
    }

    #[test]
    fn product_mixed_partial() {
        let u = Jet2::variable(0, 1.25);
        let v = Jet2::variable(1, -0.5);
        let p = u * v;
        assert_eq!(p.h[0][1], 1.0);
        assert_eq!(p.h[1][0], 1.0);
        assert_eq!(p.h[0][0], 0.0);
        assert_eq!(p.h[1][1], 0.0);
    }

    #[test]
    fn division_matches_analytic_derivatives() {
        // f(u, v) = u / v at (2, 3): df/du = 1/v, df/dv = -u/v^2,
        // d2f/dudv = -1/v^2, d2f/dv2 = 2u/v^3.
        let u = Jet2::variable(0, 2.0);
        let v = Jet2::variable(1, 3.0);
        let q = u / v;
        assert_close(q.v, 2.0 / 3.0, 1e-15);
        assert_close(q.d[0], 1.0 / 3.0, 1e-15);
        assert_close(q.d[1], -2.0 / 9.0, 1e-15);
        assert_close(q.h[0][1], -1.0 / 9.0, 1e-15);
        assert_close(q.h[1][1], 4.0 / 27.0, 1e-15);
    }

    #[test]
    fn sqrt_and_recip_roundtrip() {
        let u = Jet2::variable(0, 1.7);
        let s = u.sqrt();
        let back = s * s;
        assert_close(back.v, 1.7, 1e-14);
        assert_close(back.d[0], 1.0, 1e-14);
        assert_close(back.h[0][0], 0.0, 1e-14);
        let r = u.recip() * u;
        assert_close(r.v, 1.0, 1e-15);
        assert_close(r.d[0], 0.0, 1e-15);
    }

    #[test]
    fn powi_at_zero_base_is_exact() {
        let u = Jet2::variable(0, 0.0);
        let q = u.powi(2);
        assert_eq!(q.v, 0.0);
        assert_eq!(q.d[0], 0.0);
        assert_eq!(q.h[0][0], 2.0);
        let c = u.powi(3);
        assert_eq!(c.h[0][0], 0.0);
    }

    #[test]
    fn trig_second_derivatives() {
        let u = Jet2::variable(0, 0.9);
        let s = u.sin();
        assert_close(s.v, 0.9f64.sin(), 1e-15);
        assert_close(s.d[0], 0.9f64.cos(), 1e-15);
        assert_close(s.h[0][0], -0.9f64.sin(), 1e-15);
    }
}
