//! Multivariate polynomials with exact derivative evaluation.
//!
//! A [`PolyMap`] is a vector of [`Polynomial`]s, one per output component.
//! It is the analytic form for the base surface φ and for the sheets of a
//! Q-valued field.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub pow: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Term>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { terms: Vec::new() }
    }

    pub fn constant(c: f64, m: usize) -> Self {
        Polynomial { terms: vec![Term { coef: c, pow: vec![0; m] }] }
    }

    /// `c + Σ a_i x_i`.
    pub fn affine(c: f64, a: &[f64]) -> Self {
        let m = a.len();
        let mut terms = vec![Term { coef: c, pow: vec![0; m] }];
        for (i, &ai) in a.iter().enumerate() {
            let mut pow = vec![0; m];
            pow[i] = 1;
            terms.push(Term { coef: ai, pow });
        }
        Polynomial { terms }
    }

    /// Adds `coef · x^pow`.
    pub fn with(mut self, coef: f64, pow: &[u32]) -> Self {
        self.terms.push(Term { coef, pow: pow.to_vec() });
        self
    }

    fn validate(&self, m: usize) -> Result<()> {
        for t in &self.terms {
            if t.pow.len() != m {
                return Err(Error::input(format!(
                    "monomial has {} exponents, expected {m}",
                    t.pow.len()
                )));
            }
            if !t.coef.is_finite() {
                return Err(Error::input("polynomial coefficients must be finite"));
            }
        }
        Ok(())
    }

    /// ∂^α p(x).
    pub fn derivative(&self, x: &[f64], alpha: &[u32]) -> f64 {
        let mut total = 0.0;
        'terms: for t in &self.terms {
            let mut v = t.coef;
            for i in 0..x.len() {
                let p = t.pow[i];
                let a = alpha[i];
                if a > p {
                    continue 'terms;
                }
                for k in 0..a {
                    v *= (p - k) as f64;
                }
                v *= x[i].powi((p - a) as i32);
            }
            total += v;
        }
        total
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.derivative(x, &vec![0; x.len()])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolyMap {
    pub components: Vec<Polynomial>,
}

fn unit_alpha(m: usize, idx: &[usize]) -> Vec<u32> {
    let mut a = vec![0u32; m];
    for &i in idx {
        a[i] += 1;
    }
    a
}

impl PolyMap {
    pub fn new(components: Vec<Polynomial>) -> Self {
        PolyMap { components }
    }

    pub fn zero(n: usize) -> Self {
        PolyMap { components: vec![Polynomial::zero(); n] }
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.components.len() != n {
            return Err(Error::input(format!(
                "polynomial map has {} components, expected {n}",
                self.components.len()
            )));
        }
        self.components.iter().try_for_each(|p| p.validate(m))
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval(x)).collect()
    }

    /// `n × m` Jacobian.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let m = x.len();
        DMatrix::from_fn(self.n(), m, |k, i| self.components[k].derivative(x, &unit_alpha(m, &[i])))
    }

    /// Second derivatives, one symmetric `m × m` matrix per component.
    pub fn hessians(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let m = x.len();
        self.components
            .iter()
            .map(|p| DMatrix::from_fn(m, m, |i, j| p.derivative(x, &unit_alpha(m, &[i, j]))))
            .collect()
    }

    /// Frobenius norms of D^k at `x` for k = 0..=3.
    pub fn derivative_norms(&self, x: &[f64]) -> [f64; 4] {
        let m = x.len();
        let mut out = [0.0; 4];
        for p in &self.components {
            out[0] += p.eval(x).powi(2);
            for i in 0..m {
                out[1] += p.derivative(x, &unit_alpha(m, &[i])).powi(2);
                for j in 0..m {
                    out[2] += p.derivative(x, &unit_alpha(m, &[i, j])).powi(2);
                    for k in 0..m {
                        out[3] += p.derivative(x, &unit_alpha(m, &[i, j, k])).powi(2);
                    }
                }
            }
        }
        out.map(f64::sqrt)
    }

    /// Largest relative disagreement between the analytic first and second
    /// derivatives and central differences with step `h` at `x`.
    pub fn finite_difference_check(&self, x: &[f64], h: f64) -> f64 {
        let m = x.len();
        let jac = self.jacobian(x);
        let hess = self.hessians(x);
        let mut worst: f64 = 0.0;
        let shifted = |i: usize, d: f64| {
            let mut y = x.to_vec();
            y[i] += d;
            y
        };
        for i in 0..m {
            let fp = self.eval(&shifted(i, h));
            let fm = self.eval(&shifted(i, -h));
            let jp = self.jacobian(&shifted(i, h));
            let jm = self.jacobian(&shifted(i, -h));
            for k in 0..self.n() {
                let fd = (fp[k] - fm[k]) / (2.0 * h);
                worst = worst.max((fd - jac[(k, i)]).abs() / (1.0 + jac[(k, i)].abs()));
                for j in 0..m {
                    let fd2 = (jp[(k, j)] - jm[(k, j)]) / (2.0 * h);
                    worst = worst.max((fd2 - hess[k][(i, j)]).abs() / (1.0 + hess[k][(i, j)].abs()));
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_a_cubic() {
        // p(x, y) = 2 + 3x - y + x^2 y + 0.5 y^3
        let p = Polynomial::affine(2.0, &[3.0, -1.0]).with(1.0, &[2, 1]).with(0.5, &[0, 3]);
        let x = [0.7, -1.3];
        assert!((p.eval(&x) - (2.0 + 2.1 + 1.3 + 0.49 * -1.3 + 0.5 * (-1.3f64).powi(3))).abs() < 1e-14);
        assert!((p.derivative(&x, &[1, 0]) - (3.0 + 2.0 * 0.7 * -1.3)).abs() < 1e-14);
        assert!((p.derivative(&x, &[0, 1]) - (-1.0 + 0.49 + 1.5 * 1.69)).abs() < 1e-14);
        assert!((p.derivative(&x, &[1, 1]) - 1.4).abs() < 1e-14);
        assert!((p.derivative(&x, &[0, 3]) - 3.0).abs() < 1e-14);
        assert_eq!(p.derivative(&x, &[3, 0]), 0.0);
        let map = PolyMap::new(vec![p]);
        assert!(map.finite_difference_check(&x, 1e-5) < 1e-8);
    }

    #[test]
    fn json_shape() {
        let map = PolyMap::new(vec![Polynomial::zero().with(0.25, &[2])]);
        let s = serde_json::to_string(&map).unwrap();
        assert_eq!(s, r#"[{"terms":[{"coef":0.25,"pow":[2]}]}]"#);
        let back: PolyMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, map);
        assert!(back.validate(2, 1).is_err());
    }
}
