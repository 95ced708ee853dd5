use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use super::Expr;

/// Exponent vector α of a monomial `y^α = y1^α1 ⋯ yn^αn`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, var: usize) -> Self {
        let mut m = MultiIndex::zero(n);
        m.0[var] = 1;
        m
    }

    pub fn from_slice(exps: &[u32]) -> Self {
        MultiIndex(exps.to_vec())
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `w(α) = Σ w_i α_i`
    pub fn weighted_degree(&self, weights: &[u32]) -> u32 {
        self.0.iter().zip(weights).map(|(a, w)| a * w).sum()
    }

    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&a| (1..=a).map(f64::from).product::<f64>())
            .product()
    }

    pub fn incremented(&self, var: usize) -> Self {
        let mut m = self.clone();
        m.0[var] += 1;
        m
    }

    pub(crate) fn last_nonzero(&self) -> Option<usize> {
        self.0.iter().rposition(|&a| a > 0)
    }

    pub fn monomial(&self, point: &[f64]) -> f64 {
        self.0.iter().zip(point).map(|(&a, &x)| x.powi(a as i32)).product()
    }

    fn key(&self) -> String {
        self.0.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
    }
}

/// Sparse polynomial `Σ a_α y^α`; exact zeros are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn new(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Polynomial::new(dim);
        p.insert(MultiIndex::zero(dim), c);
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sets a coefficient; a zero value removes the monomial.
    pub fn insert(&mut self, alpha: MultiIndex, coeff: f64) {
        assert_eq!(alpha.dim(), self.dim, "multi-index dimension mismatch");
        if coeff == 0.0 {
            self.terms.remove(&alpha);
        } else {
            self.terms.insert(alpha, coeff);
        }
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(k, v)| (k, *v))
    }

    /// Monomials whose weighted degree satisfies `keep`.
    pub fn filter_weighted(&self, weights: &[u32], keep: impl Fn(u32) -> bool) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(a, _)| keep(a.weighted_degree(weights)))
                .map(|(a, c)| (a.clone(), *c))
                .collect(),
        }
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(a, c)| c * a.monomial(point)).sum()
    }

    /// Coefficients passed through [`super::snap_constant`]; terms that snap to zero are dropped.
    pub fn snapped(&self, tol: f64) -> Polynomial {
        let mut out = Polynomial::new(self.dim);
        for (alpha, &c) in &self.terms {
            out.insert(alpha.clone(), super::snap_constant(c, tol));
        }
        out
    }

    /// Sum of monomials ordered by total degree, then by variable index.
    pub fn to_expr(&self) -> Expr {
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| a.total_degree().cmp(&b.total_degree()).then_with(|| b.cmp(a)));
        Expr::sum(
            terms
                .into_iter()
                .map(|(alpha, &c)| {
                    let mut factors = vec![Expr::Const(c)];
                    for (var, &e) in alpha.exponents().iter().enumerate() {
                        factors.extend(std::iter::repeat_n(Expr::Var(var), e as usize));
                    }
                    Expr::product(factors)
                })
                .collect(),
        )
    }
}

impl Serialize for Polynomial {
    /// Coefficient map keyed by the comma-separated multi-index, e.g. `"0,1,0,0,0,0"`.
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.terms.len()))?;
        for (alpha, c) in &self.terms {
            map.serialize_entry(&alpha.key(), c)?;
        }
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees() {
        let a = MultiIndex::from_slice(&[1, 0, 2, 0, 1, 0]);
        assert_eq!(a.total_degree(), 4);
        assert_eq!(a.weighted_degree(&[1, 1, 1, 2, 2, 2]), 5);
        assert_eq!(a.factorial(), 2.0);
    }

    #[test]
    fn zero_coefficients_are_not_stored() {
        let mut p = Polynomial::new(2);
        p.insert(MultiIndex::unit(2, 0), 1.0);
        p.insert(MultiIndex::unit(2, 0), 0.0);
        assert!(p.is_empty());
    }

    #[test]
    fn expression_roundtrip_evaluates_equal() {
        let mut p = Polynomial::new(3);
        p.insert(MultiIndex::zero(3), -0.5);
        p.insert(MultiIndex::from_slice(&[0, 2, 1]), 3.0);
        let pt = [0.3, -0.7, 1.1];
        assert!((p.eval(&pt) - p.to_expr().eval(&pt)).abs() < 1e-15);
    }

    #[test]
    fn json_keys_are_multi_indices() {
        let mut p = Polynomial::new(2);
        p.insert(MultiIndex::from_slice(&[0, 1]), 0.5);
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"0,1":0.5}"#);
    }
}
