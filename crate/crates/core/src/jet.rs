//! Truncated bivariate Taylor polynomials of total degree 3.
//!
//! Evaluating a surface formula on `Jet` inputs yields all partial derivatives
//! up to third order in one pass, exact to round-off.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic shared by `f64` and `Jet`, so catalog formulas are written once.
pub trait Real:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(x: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;

    fn sq(self) -> Self {
        self * self
    }
    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }
    fn add_c(self, k: f64) -> Self {
        self + Self::cst(k)
    }
}

impl Real for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn add_c(self, k: f64) -> Self {
        self + k
    }
}

/// Monomial exponents (i, j) of u^i v^j, graded by total degree.
pub const MONOMIALS: [(usize, usize); 10] =
    [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];

const fn index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

const fn product_table() -> ([(u8, u8, u8); 35], usize) {
    let mut out = [(0u8, 0u8, 0u8); 35];
    let mut n = 0;
    let mut a = 0;
    while a < 10 {
        let mut b = 0;
        while b < 10 {
            let (i1, j1) = MONOMIALS[a];
            let (i2, j2) = MONOMIALS[b];
            if i1 + j1 + i2 + j2 <= 3 {
                out[n] = (a as u8, b as u8, index(i1 + i2, j1 + j2) as u8);
                n += 1;
            }
            b += 1;
        }
        a += 1;
    }
    (out, n)
}

const PRODUCTS: ([(u8, u8, u8); 35], usize) = product_table();

/// Taylor coefficients `c[index(i,j)] = d^(i+j) f / du^i dv^j / (i! j!)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [f64; 10],
}

impl Jet {
    pub fn constant(x: f64) -> Self {
        let mut c = [0.0; 10];
        c[0] = x;
        Jet { c }
    }

    /// The coordinate u expanded at u0.
    pub fn var_u(u0: f64) -> Self {
        let mut j = Jet::constant(u0);
        j.c[1] = 1.0;
        j
    }

    pub fn var_v(v0: f64) -> Self {
        let mut j = Jet::constant(v0);
        j.c[2] = 1.0;
        j
    }

    /// Partial derivative d^(i+j)/du^i dv^j at the expansion point.
    pub fn deriv(&self, i: usize, j: usize) -> f64 {
        const FACT: [f64; 4] = [1.0, 1.0, 2.0, 6.0];
        self.c[index(i, j)] * FACT[i] * FACT[j]
    }

    /// `g(self)` given g and its first three derivatives at the constant term.
    fn compose(self, g: [f64; 4]) -> Self {
        let mut d = self;
        d.c[0] = 0.0;
        let d2 = d * d;
        let d3 = d2 * d;
        let mut out = Jet::constant(g[0]);
        for k in 1..10 {
            out.c[k] = g[1] * d.c[k] + 0.5 * g[2] * d2.c[k] + g[3] / 6.0 * d3.c[k];
        }
        out
    }

    pub fn recip(self) -> Self {
        let x = self.c[0];
        let r = 1.0 / x;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        for k in 0..10 {
            self.c[k] += o.c[k];
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        for k in 0..10 {
            self.c[k] -= o.c[k];
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for k in 0..10 {
            self.c[k] = -self.c[k];
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; 10];
        let (table, n) = PRODUCTS;
        for &(a, b, k) in &table[..n] {
            c[k as usize] += self.c[a as usize] * o.c[b as usize];
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Real for Jet {
    fn cst(x: f64) -> Self {
        Jet::constant(x)
    }
    fn value(&self) -> f64 {
        self.c[0]
    }
    fn sin(self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        self.compose([s, c, -s, -c])
    }
    fn cos(self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        self.compose([c, -s, -c, s])
    }
    fn sqrt(self) -> Self {
        let x = self.c[0];
        let r = x.sqrt();
        self.compose([r, 0.5 / r, -0.25 / (r * x), 0.375 / (r * x * x)])
    }
    fn exp(self) -> Self {
        let e = self.c[0].exp();
        self.compose([e, e, e, e])
    }
    fn ln(self) -> Self {
        let x = self.c[0];
        self.compose([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)])
    }
    fn scale(mut self, k: f64) -> Self {
        for v in self.c.iter_mut() {
            *v *= k;
        }
        self
    }
    fn add_c(mut self, k: f64) -> Self {
        self.c[0] += k;
        self
    }
}
