//! Vector fields with symbolic components, Lie brackets, flags of the
//! generated distribution, weights and non-holonomic orders of functions.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::symexpr::{self, Expr, ParseError};

/// Relative singular-value threshold used for numeric rank.
pub const RANK_TOL: f64 = 1e-8;

/// Maximal bracket length explored by [`growth_vector`].
pub const BRACKET_DEPTH_CAP: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("coordinate systems differ: {0} vs {1}")]
    CoordinateMismatch(Coords, Coords),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("empty list of vector fields")]
    NoFields,
    #[error("not bracket-generating at p within depth {depth} (dims {dims:?})")]
    NotBracketGenerating { depth: usize, dims: Vec<usize> },
    #[error("invalid flag dimensions {0:?}")]
    InvalidFlag(Vec<usize>),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Which coordinate chart the components are written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coords {
    X,
    Y,
}

impl Coords {
    pub fn prefix(self) -> char {
        match self {
            Coords::X => 'x',
            Coords::Y => 'y',
        }
    }
}

impl fmt::Display for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.prefix())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    coords: Coords,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(coords: Coords, components: Vec<Expr>) -> Self {
        VectorField { coords, components }
    }

    pub fn zero(coords: Coords, dim: usize) -> Self {
        VectorField::new(coords, vec![Expr::zero(); dim])
    }

    /// Coordinate field `∂/∂x_k` (0-based `k`).
    pub fn basis(coords: Coords, dim: usize, k: usize) -> Self {
        let mut f = VectorField::zero(coords, dim);
        f.components[k] = Expr::one();
        f
    }

    /// Parse `Σ coeff * d/dx_k` in the expression DSL.
    pub fn parse(src: &str) -> Result<Self, FieldError> {
        let terms = symexpr::parse_field_terms(src)?;
        let coords = match terms.prefix {
            Some('y') => Coords::Y,
            _ => Coords::X,
        };
        Ok(VectorField::new(coords, terms.components))
    }

    pub fn coords(&self) -> Coords {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &Expr {
        &self.components[k]
    }

    pub fn eval(&self, point: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    /// Lie derivative `X f = Σ X_j ∂f/∂x_j`.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::sum(
            self.components
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_const_zero())
                .map(|(j, c)| c.clone().mul(f.diff(j)))
                .collect(),
        )
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField::new(self.coords, self.components.iter().map(f).collect())
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField, FieldError> {
        self.check_compatible(other)?;
        Ok(VectorField::new(
            self.coords,
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.clone().sub(b.clone()))
                .collect(),
        ))
    }

    /// All components vanish under [`symexpr::is_zero`].
    pub fn is_zero(&self, tol: f64) -> bool {
        self.components.iter().all(|c| symexpr::is_zero(c, tol))
    }

    pub fn with_coords(mut self, coords: Coords) -> VectorField {
        self.coords = coords;
        self
    }

    fn check_compatible(&self, other: &VectorField) -> Result<(), FieldError> {
        if self.coords != other.coords {
            return Err(FieldError::CoordinateMismatch(self.coords, other.coords));
        }
        if self.dim() != other.dim() {
            return Err(FieldError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

impl fmt::Display for VectorField {
    /// `d/dx1 + sin(x4 - 2*pi/3)*d/dx4 - (1 + cos(x5))*d/dx5`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = self.coords.prefix();
        let mut first = true;
        for (k, c) in self.components.iter().enumerate() {
            if c.is_const_zero() {
                continue;
            }
            let (negative, magnitude) = match c {
                Expr::Neg(inner) => (true, (**inner).clone()),
                Expr::Const(v) if *v < 0.0 => (true, Expr::Const(-v)),
                Expr::Product(fs) if matches!(fs.first(), Some(Expr::Const(v)) if *v < 0.0) => {
                    (true, Expr::neg(c.clone()))
                }
                other => (false, other.clone()),
            };
            match (first, negative) {
                (true, true) => write!(f, "-")?,
                (true, false) => {}
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
            }
            first = false;
            let basis = format!("d/d{prefix}{}", k + 1);
            match magnitude {
                Expr::Const(1.0) => write!(f, "{basis}")?,
                Expr::Sum(_) | Expr::Neg(_) => write!(f, "({})*{basis}", magnitude.display(prefix))?,
                m => write!(f, "{}*{basis}", m.display(prefix))?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Symbolic Lie bracket `[X, Y]_k = Σ_j (X_j ∂Y_k/∂x_j − Y_j ∂X_k/∂x_j)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, FieldError> {
    x.check_compatible(y)?;
    let components = (0..x.dim())
        .map(|k| x.apply(&y.components[k]).sub(y.apply(&x.components[k])))
        .collect();
    Ok(VectorField::new(x.coords, components))
}

/// Central-difference Jacobian `J[k][j] = ∂X_k/∂x_j` at `p`.
pub fn fd_jacobian(x: &VectorField, p: &[f64], h: f64) -> Matrix {
    let n = p.len();
    let mut jac = Matrix::zeros(x.dim(), n);
    let mut hi = p.to_vec();
    let mut lo = p.to_vec();
    for j in 0..n {
        hi[j] = p[j] + h;
        lo[j] = p[j] - h;
        let fp = x.eval(&hi);
        let fm = x.eval(&lo);
        for k in 0..x.dim() {
            jac[(k, j)] = (fp[k] - fm[k]) / (2.0 * h);
        }
        hi[j] = p[j];
        lo[j] = p[j];
    }
    jac
}

/// Numerical bracket `JY(p)·X(p) − JX(p)·Y(p)` from central differences.
pub fn fd_bracket(x: &VectorField, y: &VectorField, p: &[f64], h: f64) -> Vec<f64> {
    let xv = x.eval(p);
    let yv = y.eval(p);
    let a = fd_jacobian(y, p, h).mul_vec(&xv);
    let b = fd_jacobian(x, p, h).mul_vec(&yv);
    a.iter().zip(&b).map(|(u, v)| u - v).collect()
}

/// Flag `Δ¹(p) ⊂ Δ²(p) ⊂ … ⊂ Δʳ(p) = T_pM` summarised by its dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Flag {
    pub dims: Vec<usize>,
    pub degree_of_nonholonomy: usize,
    pub weights: Vec<u32>,
}

impl Flag {
    /// Builds a flag from non-decreasing dimensions ending at full rank.
    pub fn from_dims(dims: Vec<usize>) -> Result<Flag, FieldError> {
        let valid = !dims.is_empty() && dims[0] > 0 && dims.windows(2).all(|w| w[0] <= w[1]);
        if !valid {
            return Err(FieldError::InvalidFlag(dims));
        }
        let weights = weights_from_dims(&dims);
        Ok(Flag {
            degree_of_nonholonomy: dims.len(),
            weights,
            dims,
        })
    }

    pub fn dim(&self) -> usize {
        *self.dims.last().unwrap()
    }
}

fn weights_from_dims(dims: &[usize]) -> Vec<u32> {
    let n = *dims.last().unwrap();
    (1..=n)
        .map(|j| {
            let s = dims.iter().position(|&ns| j <= ns).unwrap();
            s as u32 + 1
        })
        .collect()
}

/// `w_j = s` iff `n_{s−1} < j ≤ n_s`.
pub fn weights(flag: &Flag) -> Vec<u32> {
    weights_from_dims(&flag.dims)
}

/// Numeric rank of the column stack of `vectors`.
fn rank_of(vectors: &[Vec<f64>], rel_tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    Matrix::from_columns(vectors).rank(rel_tol)
}

/// Dimensions of the flag generated by `fields` at `p`.
///
/// Level `s+1` adjoins `[g_i, Z]` for every generator `g_i` and every bracket
/// `Z` of length `s`; the search stops at full rank or after
/// [`BRACKET_DEPTH_CAP`] levels.
pub fn growth_vector(fields: &[VectorField], p: &[f64], rel_tol: f64) -> Result<Flag, FieldError> {
    let first = fields.first().ok_or(FieldError::NoFields)?;
    let n = first.dim();
    if p.len() != n {
        return Err(FieldError::DimensionMismatch(n, p.len()));
    }
    let mut values: Vec<Vec<f64>> = fields.iter().map(|f| f.eval(p)).collect();
    let mut dims = vec![rank_of(&values, rel_tol)];
    let mut level: Vec<VectorField> = fields.to_vec();
    for depth in 2..=BRACKET_DEPTH_CAP {
        if *dims.last().unwrap() == n {
            break;
        }
        let mut next = Vec::new();
        for (i, g) in fields.iter().enumerate() {
            for (j, z) in level.iter().enumerate() {
                // at length 2 the pair (i, j) and (j, i) span the same line
                if depth == 2 && j <= i {
                    continue;
                }
                next.push(lie_bracket(g, z)?);
            }
        }
        values.extend(next.iter().map(|b| b.eval(p)));
        dims.push(rank_of(&values, rel_tol));
        level = next;
    }
    if *dims.last().unwrap() != n {
        return Err(FieldError::NotBracketGenerating {
            depth: dims.len(),
            dims,
        });
    }
    Flag::from_dims(dims)
}

/// Non-holonomic order of a function, or a lower bound when the search is exhausted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Order {
    Finite(usize),
    AtLeast(usize),
}

/// Smallest `s` such that some `X_{i1}⋯X_{is} f` is nonzero (beyond `tol`) at `p`.
///
/// Words are searched breadth-first by length; if none up to `max_order`
/// is nonzero the result is `AtLeast(max_order + 1)`.
pub fn function_order(f: &Expr, p: &[f64], fields: &[VectorField], max_order: usize, tol: f64) -> Order {
    let mut level = vec![f.clone()];
    for s in 0..=max_order {
        if level.iter().any(|g| g.eval(p).abs() > tol) {
            return Order::Finite(s);
        }
        if s == max_order {
            break;
        }
        level = level
            .iter()
            .flat_map(|g| fields.iter().map(move |x| x.apply(g)))
            .filter(|g| !g.is_const_zero())
            .collect();
        if level.is_empty() {
            break;
        }
    }
    Order::AtLeast(max_order + 1)
}
