//! Symbolic scalar expressions over numbered coordinates.
//!
//! The grammar is deliberately small: constants, coordinates, `sin`/`cos` of
//! affine arguments, sums, products and negation. Every derivative of such an
//! expression is again in the grammar, and substituting affine forms for the
//! coordinates keeps trigonometric arguments affine, which is all the
//! privileged-coordinate and nilpotent machinery needs.
//!
//! Coordinates are 0-based internally (`Expr::Var(0)` prints as `x1`).

mod format;
mod parse;
mod poly;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use format::{format_constant, snap_constant, ExprDisplay};
pub(crate) use parse::parse_field_terms;
pub use parse::{parse, parse_with_prefix, ParseError, Token};
pub use poly::{MultiIndex, Polynomial};

/// Default threshold under which Taylor coefficients and sampled values count as zero.
pub const ZERO_TOL: f64 = 1e-9;

/// Relative tolerance for [`snap_constant`] when cleaning up round-off in derived coefficients.
pub const SNAP_TOL: f64 = 1e-12;

/// Seed of the deterministic sample set used by [`is_zero`].
pub const ZERO_TEST_SEED: u64 = 0x7121_de47;

/// Number of sample points used by [`is_zero`].
pub const ZERO_TEST_SAMPLES: usize = 64;

/// An affine form `offset + Σ coeff·x_var`, the only admissible argument of `sin`/`cos`.
///
/// Terms are kept sorted by variable with no zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub offset: f64,
    terms: Vec<(usize, f64)>,
}

impl Affine {
    pub fn new(offset: f64, terms: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc: Vec<(usize, f64)> = Vec::new();
        for (var, coeff) in terms {
            match acc.iter_mut().find(|(v, _)| *v == var) {
                Some(slot) => slot.1 += coeff,
                None => acc.push((var, coeff)),
            }
        }
        acc.retain(|(_, c)| *c != 0.0);
        acc.sort_by_key(|(v, _)| *v);
        Affine { offset, terms: acc }
    }

    pub fn constant(offset: f64) -> Self {
        Affine {
            offset,
            terms: Vec::new(),
        }
    }

    /// `x_var + offset`
    pub fn shifted(var: usize, offset: f64) -> Self {
        Affine::new(offset, [(var, 1.0)])
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn coeff(&self, var: usize) -> f64 {
        self.terms.iter().find(|(v, _)| *v == var).map_or(0.0, |(_, c)| *c)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.terms.iter().fold(self.offset, |acc, (v, c)| acc + c * point[*v])
    }

    /// Compose with `x_k = subs[k]`.
    pub fn substitute(&self, subs: &[Affine]) -> Affine {
        let mut offset = self.offset;
        let mut terms = Vec::new();
        for &(var, coeff) in &self.terms {
            let inner = &subs[var];
            offset += coeff * inner.offset;
            terms.extend(inner.terms.iter().map(|&(v, c)| (v, coeff * c)));
        }
        Affine::new(offset, terms)
    }

    /// The affine form as an ordinary expression.
    pub fn to_expr(&self) -> Expr {
        let mut parts: Vec<Expr> = self
            .terms
            .iter()
            .map(|&(v, c)| Expr::product(vec![Expr::Const(c), Expr::Var(v)]))
            .collect();
        parts.push(Expr::Const(self.offset));
        Expr::sum(parts)
    }

    fn max_var(&self) -> Option<usize> {
        self.terms.last().map(|(v, _)| *v)
    }
}

/// Symbolic scalar expression.
///
/// Build through the smart constructors ([`Expr::sum`], [`Expr::product`],
/// [`Expr::neg`], [`Expr::sin`], [`Expr::cos`]) which fold constants and
/// flatten nested sums/products so derivatives stay small.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Sin(Affine),
    Cos(Affine),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Neg(Box<Expr>),
}

/// Merges `a*t + b*t` into `(a+b)*t`, keeping first-occurrence order and
/// dropping terms whose coefficients cancel.
fn combine_like_terms(terms: Vec<Expr>) -> Vec<Expr> {
    if terms.len() < 2 {
        return terms;
    }
    let mut groups: Vec<(f64, Expr)> = Vec::with_capacity(terms.len());
    for t in terms {
        let (c, body) = t.split_coefficient();
        match groups.iter_mut().find(|(_, b)| *b == body) {
            Some(g) => g.0 += c,
            None => groups.push((c, body)),
        }
    }
    groups
        .into_iter()
        .filter(|(c, _)| *c != 0.0)
        .map(|(c, body)| Expr::product(vec![Expr::Const(c), body]))
        .collect()
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn sin(arg: Affine) -> Expr {
        if arg.is_constant() {
            Expr::Const(arg.offset.sin())
        } else {
            Expr::Sin(arg)
        }
    }

    pub fn cos(arg: Affine) -> Expr {
        if arg.is_constant() {
            Expr::Const(arg.offset.cos())
        } else {
            Expr::Cos(arg)
        }
    }

    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            Expr::Product(mut fs) if matches!(fs.first(), Some(Expr::Const(_))) => {
                if let Expr::Const(c) = fs[0] {
                    fs[0] = Expr::Const(-c);
                }
                Expr::product(fs)
            }
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn sum(items: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(items.len());
        let mut constant = 0.0;
        let mut saw_constant = false;
        for item in items {
            match item {
                Expr::Sum(inner) => {
                    for e in inner {
                        if let Expr::Const(c) = e {
                            constant += c;
                            saw_constant = true;
                        } else {
                            flat.push(e);
                        }
                    }
                }
                Expr::Const(c) => {
                    constant += c;
                    saw_constant = true;
                }
                other => flat.push(other),
            }
        }
        let mut flat = combine_like_terms(flat);
        if saw_constant && (constant != 0.0 || flat.is_empty()) {
            // keep the constant where a reader expects it: first, as in `1 + cos(x5)`
            flat.insert(0, Expr::Const(constant));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::Sum(flat),
        }
    }

    /// Splits `c*body` into its numeric coefficient and the remaining factor.
    fn split_coefficient(self) -> (f64, Expr) {
        match self {
            Expr::Neg(inner) => {
                let (c, body) = inner.split_coefficient();
                (-c, body)
            }
            Expr::Product(mut fs) if matches!(fs.first(), Some(Expr::Const(_))) => {
                let Expr::Const(c) = fs.remove(0) else { unreachable!() };
                let body = if fs.len() == 1 {
                    fs.pop().unwrap()
                } else {
                    Expr::Product(fs)
                };
                (c, body)
            }
            other => (1.0, other),
        }
    }

    pub fn product(items: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(items.len());
        let mut constant = 1.0;
        let mut negate = false;
        for item in items {
            match item {
                Expr::Product(inner) => {
                    for e in inner {
                        match e {
                            Expr::Const(c) => constant *= c,
                            other => flat.push(other),
                        }
                    }
                }
                Expr::Const(c) => constant *= c,
                Expr::Neg(inner) => {
                    negate = !negate;
                    match *inner {
                        Expr::Product(fs) => flat.extend(fs),
                        other => flat.push(other),
                    }
                }
                other => flat.push(other),
            }
        }
        if negate {
            constant = -constant;
        }
        if constant == 0.0 {
            return Expr::zero();
        }
        if flat.is_empty() {
            return Expr::Const(constant);
        }
        // re-split constants that may have been hidden inside a negated product
        let mut rest = Vec::with_capacity(flat.len());
        for e in flat {
            match e {
                Expr::Const(c) => constant *= c,
                other => rest.push(other),
            }
        }
        if constant == 0.0 {
            return Expr::zero();
        }
        let body = if rest.len() == 1 {
            rest.pop().unwrap()
        } else {
            Expr::Product(rest)
        };
        if constant == 1.0 {
            body
        } else if constant == -1.0 {
            Expr::neg(body)
        } else {
            let mut fs = vec![Expr::Const(constant)];
            match body {
                Expr::Product(inner) => fs.extend(inner),
                other => fs.push(other),
            }
            Expr::Product(fs)
        }
    }

    pub fn add(self, other: Expr) -> Expr {
        Expr::sum(vec![self, other])
    }

    pub fn sub(self, other: Expr) -> Expr {
        Expr::sum(vec![self, Expr::neg(other)])
    }

    pub fn mul(self, other: Expr) -> Expr {
        Expr::product(vec![self, other])
    }

    pub fn scale(self, c: f64) -> Expr {
        Expr::product(vec![Expr::Const(c), self])
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Structurally zero (not a numerical test; see [`is_zero`]).
    pub fn is_const_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    /// Largest variable index appearing in the expression.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(v) => Some(*v),
            Expr::Sin(a) | Expr::Cos(a) => a.max_var(),
            Expr::Sum(xs) | Expr::Product(xs) => xs.iter().filter_map(Expr::max_var).max(),
            Expr::Neg(e) => e.max_var(),
        }
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => point[*v],
            Expr::Sin(a) => a.eval(point).sin(),
            Expr::Cos(a) => a.eval(point).cos(),
            Expr::Sum(xs) => xs.iter().map(|e| e.eval(point)).sum(),
            Expr::Product(xs) => xs.iter().map(|e| e.eval(point)).product(),
            Expr::Neg(e) => -e.eval(point),
        }
    }

    /// Partial derivative with respect to coordinate `var`.
    pub fn diff(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Sin(a) => {
                let c = a.coeff(var);
                if c == 0.0 {
                    Expr::zero()
                } else {
                    Expr::product(vec![Expr::Const(c), Expr::Cos(a.clone())])
                }
            }
            Expr::Cos(a) => {
                let c = a.coeff(var);
                if c == 0.0 {
                    Expr::zero()
                } else {
                    Expr::product(vec![Expr::Const(-c), Expr::Sin(a.clone())])
                }
            }
            Expr::Sum(xs) => Expr::sum(xs.iter().map(|e| e.diff(var)).collect()),
            Expr::Product(xs) => {
                let mut terms = Vec::new();
                for (k, factor) in xs.iter().enumerate() {
                    let d = factor.diff(var);
                    if d.is_const_zero() {
                        continue;
                    }
                    let mut fs = xs.clone();
                    fs[k] = d;
                    terms.push(Expr::product(fs));
                }
                Expr::sum(terms)
            }
            Expr::Neg(e) => Expr::neg(e.diff(var)),
        }
    }

    /// Replace every coordinate `x_k` by the affine form `subs[k]`.
    pub fn substitute(&self, subs: &[Affine]) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => subs[*v].to_expr(),
            Expr::Sin(a) => Expr::sin(a.substitute(subs)),
            Expr::Cos(a) => Expr::cos(a.substitute(subs)),
            Expr::Sum(xs) => Expr::sum(xs.iter().map(|e| e.substitute(subs)).collect()),
            Expr::Product(xs) => Expr::product(xs.iter().map(|e| e.substitute(subs)).collect()),
            Expr::Neg(e) => Expr::neg(e.substitute(subs)),
        }
    }

    /// Interpret the expression as an affine form, if it is one.
    pub fn to_affine(&self) -> Option<Affine> {
        match self {
            Expr::Const(c) => Some(Affine::constant(*c)),
            Expr::Var(v) => Some(Affine::shifted(*v, 0.0)),
            Expr::Sin(_) | Expr::Cos(_) => None,
            Expr::Neg(e) => {
                let a = e.to_affine()?;
                Some(Affine::new(-a.offset, a.terms.iter().map(|&(v, c)| (v, -c))))
            }
            Expr::Sum(xs) => {
                let mut offset = 0.0;
                let mut terms = Vec::new();
                for e in xs {
                    let a = e.to_affine()?;
                    offset += a.offset;
                    terms.extend(a.terms);
                }
                Some(Affine::new(offset, terms))
            }
            Expr::Product(xs) => {
                let mut scale = 1.0;
                let mut linear: Option<Affine> = None;
                for e in xs {
                    let a = e.to_affine()?;
                    if a.is_constant() {
                        scale *= a.offset;
                    } else if linear.is_some() {
                        return None;
                    } else {
                        linear = Some(a);
                    }
                }
                Some(match linear {
                    None => Affine::constant(scale),
                    Some(a) => Affine::new(scale * a.offset, a.terms.iter().map(|&(v, c)| (v, scale * c))),
                })
            }
        }
    }

    /// Display with a coordinate prefix (`x` or `y`).
    pub fn display(&self, prefix: char) -> ExprDisplay<'_> {
        ExprDisplay { expr: self, prefix }
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.display('x').fmt(f)
    }
}

/// Partial derivative, 0-based coordinate index.
pub fn differentiate(e: &Expr, var: usize) -> Expr {
    e.diff(var)
}

pub fn evaluate(e: &Expr, point: &[f64]) -> f64 {
    e.eval(point)
}

/// Taylor polynomial of `e` at `center` up to total degree `max_degree`,
/// dropping coefficients below [`ZERO_TOL`].
pub fn taylor(e: &Expr, center: &[f64], max_degree: u32) -> Polynomial {
    taylor_with_tol(e, center, max_degree, ZERO_TOL)
}

/// Taylor coefficients `a_α = (∂^α e)(center) / α!` computed by repeated
/// symbolic differentiation. The polynomial is in the shifted variables
/// `x − center`.
pub fn taylor_with_tol(e: &Expr, center: &[f64], max_degree: u32, tol: f64) -> Polynomial {
    let n = center.len();
    let mut poly = Polynomial::new(n);
    let mut derivatives: HashMap<MultiIndex, Expr> = HashMap::new();
    let root = MultiIndex::zero(n);
    let mut frontier = vec![root.clone()];
    derivatives.insert(root, e.clone());
    for degree in 0..=max_degree {
        let mut next = Vec::new();
        for alpha in &frontier {
            let d = derivatives[alpha].clone();
            let coeff = d.eval(center) / alpha.factorial();
            if coeff.abs() > tol {
                poly.insert(alpha.clone(), coeff);
            }
            if degree == max_degree || d.is_const_zero() {
                continue;
            }
            // extend only at or after the last nonzero slot so each α is reached once
            let start = alpha.last_nonzero().unwrap_or(0);
            for var in start..n {
                let beta = alpha.incremented(var);
                let dd = d.diff(var);
                derivatives.insert(beta.clone(), dd);
                next.push(beta);
            }
        }
        frontier = next;
    }
    poly
}

/// Numerical zero test: every sample in a fixed deterministic set of
/// [`ZERO_TEST_SAMPLES`] points in `[-1, 1]^n` evaluates within `tol`, and
/// the degree-2 Taylor polynomial at the origin has no coefficient above `tol`.
pub fn is_zero(e: &Expr, tol: f64) -> bool {
    let n = e.max_var().map_or(0, |v| v + 1).max(6);
    if !zero_test_points(n).iter().all(|p| e.eval(p).abs() <= tol) {
        return false;
    }
    let center = vec![0.0; n];
    taylor_with_tol(e, &center, 2, 0.0).iter().all(|(_, c)| c.abs() <= tol)
}

/// The deterministic sample set used by [`is_zero`].
pub fn zero_test_points(n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(ZERO_TEST_SEED);
    (0..ZERO_TEST_SAMPLES)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn x(i: usize) -> Expr {
        Expr::Var(i - 1)
    }

    #[test]
    fn like_terms_merge() {
        let e = parse("x1/3 + sin(x2) + 2*x1/3 - sin(x2)").unwrap();
        assert_eq!(e, Expr::Var(0));
        assert_eq!(parse("x1*x2 - x1*x2").unwrap(), Expr::zero());
        assert_eq!(parse("x1*x1/3").unwrap().diff(0).to_string(), "2/3*x1");
    }

    #[test]
    fn evaluates_model_components_at_origin() {
        let p = [0.0; 6];
        let e = Expr::sin(Affine::shifted(3, -2.0 * PI / 3.0));
        assert!((e.eval(&p) + 3f64.sqrt() / 2.0).abs() < 1e-15);
        let e = Expr::neg(Expr::sum(vec![Expr::one(), Expr::cos(Affine::shifted(3, 0.0))]));
        assert_eq!(e.eval(&p), -2.0);
        let e = Expr::cos(Affine::shifted(5, 2.0 * PI / 3.0));
        assert!((e.eval(&p) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn chain_rule_on_affine_sine() {
        let arg = Affine::shifted(3, -2.0 * PI / 3.0);
        assert_eq!(Expr::sin(arg.clone()).diff(3), Expr::Cos(arg));
        let e = Expr::neg(Expr::sum(vec![Expr::one(), Expr::cos(Affine::shifted(4, 0.0))]));
        assert!(e.diff(0).is_const_zero());
    }

    #[test]
    fn derivative_matches_central_difference() {
        let e = parse("sin(2*x1 - x4 + 0.3)*cos(x5) + x2*x3*x6 - (1 + cos(x4))*sin(x6 + 2*pi/3)").unwrap();
        let p = [0.1; 6];
        let h = 1e-5;
        for i in 0..6 {
            let mut hi = p;
            let mut lo = p;
            hi[i] += h;
            lo[i] -= h;
            let fd = (e.eval(&hi) - e.eval(&lo)) / (2.0 * h);
            assert!((e.diff(i).eval(&p) - fd).abs() <= 1e-8, "var {i}");
        }
    }

    #[test]
    fn taylor_of_shifted_sine() {
        let e = Expr::sin(Affine::shifted(3, -2.0 * PI / 3.0));
        let t = taylor(&e, &[0.0; 6], 1);
        assert_eq!(t.len(), 2);
        assert!((t.coeff(&MultiIndex::zero(6)) + 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((t.coeff(&MultiIndex::unit(6, 3)) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn taylor_of_even_function_has_no_linear_term() {
        let e = Expr::neg(Expr::sum(vec![Expr::one(), Expr::cos(Affine::shifted(3, 0.0))]));
        let t = taylor(&e, &[0.0; 6], 1);
        assert_eq!(t.len(), 1);
        assert_eq!(t.coeff(&MultiIndex::zero(6)), -2.0);
    }

    #[test]
    fn taylor_of_constant() {
        for k in 0..4 {
            let t = taylor(&Expr::Const(2.5), &[0.0; 6], k);
            assert_eq!(t.len(), 1);
            assert_eq!(t.coeff(&MultiIndex::zero(6)), 2.5);
        }
    }

    #[test]
    fn taylor_second_order_of_product() {
        // x1*x2 + 3*x1^2 at 0
        let e = Expr::sum(vec![x(1).mul(x(2)), x(1).mul(x(1)).scale(3.0)]);
        let t = taylor(&e, &[0.0; 6], 2);
        assert_eq!(t.len(), 2);
        assert_eq!(t.coeff(&MultiIndex::from_slice(&[1, 1, 0, 0, 0, 0])), 1.0);
        assert_eq!(t.coeff(&MultiIndex::from_slice(&[2, 0, 0, 0, 0, 0])), 3.0);
    }

    #[test]
    fn pythagorean_identity_is_zero() {
        let s = Expr::sin(Affine::shifted(3, 0.0));
        let c = Expr::cos(Affine::shifted(3, 0.0));
        let e = Expr::sum(vec![s.clone().mul(s), c.clone().mul(c), Expr::Const(-1.0)]);
        assert!(is_zero(&e, 1e-9));
    }

    #[test]
    fn small_constant_is_not_zero() {
        assert!(!is_zero(&Expr::Const(1e-3), 1e-9));
        assert!(is_zero(&Expr::Const(1e-12), 1e-9));
    }

    #[test]
    fn zero_test_points_are_deterministic_and_in_box() {
        let a = zero_test_points(6);
        assert_eq!(a, zero_test_points(6));
        assert_eq!(a.len(), ZERO_TEST_SAMPLES);
        assert!(a.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn affine_substitution_stays_affine() {
        // sin(x1 + 2 x2) with x1 = y1 - y2, x2 = 0.5 + y2
        let e = Expr::sin(Affine::new(0.0, [(0, 1.0), (1, 2.0)]));
        let subs = [Affine::new(0.0, [(0, 1.0), (1, -1.0)]), Affine::new(0.5, [(1, 1.0)])];
        let s = e.substitute(&subs);
        assert_eq!(s, Expr::Sin(Affine::new(1.0, [(0, 1.0), (1, 1.0)])));
    }

    #[test]
    fn smart_constructors_fold() {
        assert_eq!(
            Expr::product(vec![Expr::Const(2.0), Expr::Const(0.0), x(1)]),
            Expr::zero()
        );
        assert_eq!(Expr::sum(vec![x(1), Expr::Const(0.0)]), x(1));
        assert_eq!(Expr::product(vec![Expr::Const(-1.0), x(2)]), Expr::neg(x(2)));
        assert_eq!(Expr::neg(Expr::neg(x(3))), x(3));
        assert_eq!(Expr::sin(Affine::constant(0.0)), Expr::Const(0.0));
    }

    #[test]
    fn non_affine_products_are_detected() {
        assert!(x(4).mul(x(5)).to_affine().is_none());
        let a = Expr::sum(vec![x(4).scale(2.0), Expr::Const(1.0)]).to_affine().unwrap();
        assert_eq!(a.coeff(3), 2.0);
        assert_eq!(a.offset, 1.0);
    }
}
