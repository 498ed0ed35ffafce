//! Multivariate polynomials with exact symbolic differentiation.
//!
//! Smooth problem data is polynomial so that gradients and Hessians are
//! available in closed form without any automatic-differentiation
//! machinery.

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Largest allowed total degree of a single term.
pub const MAX_TERM_DEGREE: u32 = 6;

#[derive(Clone, Debug, PartialEq)]
struct Term {
    coeff: f64,
    exponents: Vec<u32>,
}

/// A polynomial in `dimension` variables as a canonical list of terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dimension: usize,
    terms: Vec<Term>,
}

impl Polynomial {
    /// Builds a polynomial from `(coefficient, exponent vector)` pairs.
    /// Terms sharing an exponent vector are merged; zero terms dropped.
    pub fn new(dimension: usize, terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        let mut canon: Vec<Term> = Vec::new();
        for (coeff, exponents) in terms {
            if exponents.len() != dimension {
                return Err(Error::DimensionMismatch {
                    context: "polynomial term",
                    expected: dimension,
                    actual: exponents.len(),
                });
            }
            if !coeff.is_finite() {
                return Err(Error::InvalidPolynomial("non-finite coefficient".into()));
            }
            let degree: u32 = exponents.iter().sum();
            if degree > MAX_TERM_DEGREE {
                return Err(Error::InvalidPolynomial(format!(
                    "term degree {degree} exceeds cap {MAX_TERM_DEGREE}"
                )));
            }
            if let Some(t) = canon.iter_mut().find(|t| t.exponents == exponents) {
                t.coeff += coeff;
            } else {
                canon.push(Term { coeff, exponents });
            }
        }
        canon.retain(|t| t.coeff != 0.0);
        canon.sort_by(|a, b| a.exponents.cmp(&b.exponents));
        Ok(Polynomial {
            dimension,
            terms: canon,
        })
    }

    pub fn zero(dimension: usize) -> Self {
        Polynomial {
            dimension,
            terms: Vec::new(),
        }
    }

    pub fn constant(dimension: usize, c: f64) -> Self {
        Polynomial::new(dimension, vec![(c, vec![0; dimension])]).unwrap()
    }

    /// Single monomial helper.
    pub fn monomial(dimension: usize, coeff: f64, exponents: Vec<u32>) -> Result<Self> {
        Polynomial::new(dimension, vec![(coeff, exponents)])
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (f64, &[u32])> {
        self.terms.iter().map(|t| (t.coeff, t.exponents.as_slice()))
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exponents.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Exact partial derivative with respect to variable `j`.
    pub fn partial(&self, j: usize) -> Polynomial {
        assert!(j < self.dimension);
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exponents[j] > 0)
            .map(|t| {
                let mut e = t.exponents.clone();
                let k = e[j];
                e[j] -= 1;
                (t.coeff * k as f64, e)
            })
            .collect();
        Polynomial::new(self.dimension, terms).expect("derivative stays within the degree cap")
    }

    /// Value, gradient, and Hessian at `x`, all exact analytic derivatives.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>, Mat)> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                context: "polynomial evaluation",
                expected: self.dimension,
                actual: x.len(),
            });
        }
        let n = self.dimension;
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        let mut hess = Mat::zeros(n, n);
        for t in &self.terms {
            // powers x_j^{e_j}, x_j^{e_j-1}, x_j^{e_j-2}
            let p0: Vec<f64> = (0..n).map(|j| pow_u32(x[j], t.exponents[j])).collect();
            let full: f64 = p0.iter().product();
            value += t.coeff * full;
            for k in 0..n {
                let ek = t.exponents[k];
                if ek == 0 {
                    continue;
                }
                let gk = t.coeff
                    * ek as f64
                    * pow_u32(x[k], ek - 1)
                    * prod_except(&p0, &[k]);
                grad[k] += gk;
                // diagonal second derivative
                if ek >= 2 {
                    let h = t.coeff
                        * (ek * (ek - 1)) as f64
                        * pow_u32(x[k], ek - 2)
                        * prod_except(&p0, &[k]);
                    hess.set(k, k, hess.get(k, k) + h);
                }
                for l in k + 1..n {
                    let el = t.exponents[l];
                    if el == 0 {
                        continue;
                    }
                    let h = t.coeff
                        * (ek * el) as f64
                        * pow_u32(x[k], ek - 1)
                        * pow_u32(x[l], el - 1)
                        * prod_except(&p0, &[k, l]);
                    hess.set(k, l, hess.get(k, l) + h);
                    hess.set(l, k, hess.get(l, k) + h);
                }
            }
        }
        Ok((value, grad, hess))
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                context: "polynomial evaluation",
                expected: self.dimension,
                actual: x.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.exponents
                        .iter()
                        .zip(x)
                        .map(|(&e, &xi)| pow_u32(xi, e))
                        .product::<f64>()
            })
            .sum())
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(x)?.1)
    }

    /// Coefficients (ascending) of the univariate polynomial
    /// `s -> p(x + s e_axis)`.
    pub fn line_restriction(&self, x: &[f64], axis: usize) -> [f64; 8] {
        let mut d = vec![0.0; self.dimension];
        d[axis] = 1.0;
        self.line_restriction_dir(x, &d)
    }

    /// Coefficients (ascending) of `s -> p(x + s d)` for an arbitrary
    /// direction, by expanding each term's product of binomial powers.
    pub fn line_restriction_dir(&self, x: &[f64], d: &[f64]) -> [f64; 8] {
        const BINOM: [[f64; 7]; 7] = [
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 3.0, 3.0, 1.0, 0.0, 0.0, 0.0],
            [1.0, 4.0, 6.0, 4.0, 1.0, 0.0, 0.0],
            [1.0, 5.0, 10.0, 10.0, 5.0, 1.0, 0.0],
            [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0],
        ];
        assert_eq!(d.len(), self.dimension);
        assert_eq!(x.len(), self.dimension);
        let mut out = [0.0; 8];
        let mut acc = [0.0f64; 8];
        let mut next = [0.0f64; 8];
        for t in &self.terms {
            // expand prod_k (x_k + s d_k)^{e_k} by convolution
            acc.fill(0.0);
            acc[0] = t.coeff;
            let mut degree = 0usize;
            for (k, &e) in t.exponents.iter().enumerate() {
                let e = e as usize;
                if e == 0 {
                    continue;
                }
                if d[k] == 0.0 {
                    let f = pow_u32(x[k], e as u32);
                    for a in acc.iter_mut() {
                        *a *= f;
                    }
                    continue;
                }
                // binomial coefficients of (x_k + s d_k)^e
                next.fill(0.0);
                for j in 0..=e {
                    let b = BINOM[e][j] * pow_u32(x[k], (e - j) as u32) * pow_u32(d[k], j as u32);
                    for i in 0..=degree {
                        next[i + j] += acc[i] * b;
                    }
                }
                degree += e;
                acc.copy_from_slice(&next);
            }
            for (o, a) in out.iter_mut().zip(&acc) {
                *o += a;
            }
        }
        out
    }

    /// Upper bound on `|p|` over the sup-norm ball of the given radius.
    pub fn abs_bound(&self, center: &[f64], radius: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff.abs()
                    * t.exponents
                        .iter()
                        .zip(center)
                        .map(|(&e, &c)| pow_u32(c.abs() + radius, e))
                        .product::<f64>()
            })
            .sum()
    }

    /// Upper bound on the Frobenius norm of the Hessian over the ball.
    pub fn hessian_abs_bound(&self, center: &[f64], radius: f64) -> f64 {
        let n = self.dimension;
        let mut sum = 0.0;
        for k in 0..n {
            let dk = self.partial(k);
            for l in 0..n {
                let b = dk.partial(l).abs_bound(center, radius);
                sum += b * b;
            }
        }
        sum.sqrt()
    }
}

fn pow_u32(x: f64, e: u32) -> f64 {
    // 0^0 = 1 by the monomial convention
    match e {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(e as i32),
    }
}

fn prod_except(p: &[f64], skip: &[usize]) -> f64 {
    p.iter()
        .enumerate()
        .filter(|(j, _)| !skip.contains(j))
        .map(|(_, v)| v)
        .product()
}
