//! Linear privileged coordinates at a regular point.
//!
//! The frame `G` has the generator values at `p` in its first columns and
//! bracket values completing it to a basis. The linear change
//! `y = M (x − p)` with `M = G⁻¹` makes `∂/∂y_i|_p = g_i|_p` for every column.
//! For a step-2 distribution with weights `(1,…,1,2,…,2)` such a linear change
//! is already privileged.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};
use crate::symexpr::{self, Affine, Expr, SNAP_TOL, ZERO_TOL};
use crate::vfield::{self, lie_bracket, FieldError, Flag, Order, VectorField, RANK_TOL};

/// Bracket pairs tried, in order, to complete the frame.
pub const DEFAULT_BRACKET_ORDER: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];

/// Tolerance on `‖M·G − I‖∞` accepted from the inversion.
pub const INVERSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("point is not regular: frame reaches rank {achieved} of {required}")]
    RankDeficient { achieved: usize, required: usize },
    #[error("expected a {expected:?} matrix")]
    WrongRole { expected: FrameRole },
    #[error("inverse residual {0:.3e} exceeds tolerance")]
    InaccurateInverse(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameRole {
    /// Columns are field values at a point.
    Frame,
    /// Maps x-coordinates to y-coordinates.
    Transform,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameMatrix {
    pub role: FrameRole,
    pub entries: Matrix,
}

impl FrameMatrix {
    pub fn frame(entries: Matrix) -> Self {
        FrameMatrix {
            role: FrameRole::Frame,
            entries,
        }
    }

    pub fn transform(entries: Matrix) -> Self {
        FrameMatrix {
            role: FrameRole::Transform,
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }
}

/// Frame at a point together with the fields that produced each column.
#[derive(Debug, Clone)]
pub struct AdaptedFrame {
    pub matrix: FrameMatrix,
    /// Index pairs `(i, j)` of the brackets `[g_i, g_j]` used for columns after the generators.
    pub brackets: Vec<(usize, usize)>,
    /// Column fields: generators first, then the chosen brackets.
    pub columns: Vec<VectorField>,
}

/// Frame from `fields` and brackets in [`DEFAULT_BRACKET_ORDER`].
pub fn adapted_frame(fields: &[VectorField], p: &[f64]) -> Result<AdaptedFrame, FrameError> {
    adapted_frame_with_order(fields, p, &DEFAULT_BRACKET_ORDER)
}

/// Frame completed by the brackets in `order`, skipping any that do not raise
/// the rank, then by remaining pairs in lexicographic order.
pub fn adapted_frame_with_order(
    fields: &[VectorField],
    p: &[f64],
    order: &[(usize, usize)],
) -> Result<AdaptedFrame, FrameError> {
    let n = p.len();
    let m = fields.len();
    let mut columns: Vec<VectorField> = fields.to_vec();
    let mut values: Vec<Vec<f64>> = fields.iter().map(|f| f.eval(p)).collect();
    let rank = Matrix::from_columns(&values).rank(RANK_TOL);
    if rank < m {
        return Err(FrameError::RankDeficient {
            achieved: rank,
            required: n,
        });
    }
    let mut candidates: Vec<(usize, usize)> = order.to_vec();
    for i in 0..m {
        for j in i + 1..m {
            if !candidates.iter().any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i)) {
                candidates.push((i, j));
            }
        }
    }
    let mut brackets = Vec::new();
    let mut rank = m;
    for (i, j) in candidates {
        if rank == n {
            break;
        }
        let bracket = lie_bracket(&fields[i], &fields[j])?;
        let value = bracket.eval(p);
        values.push(value);
        let new_rank = Matrix::from_columns(&values).rank(RANK_TOL);
        if new_rank > rank {
            rank = new_rank;
            brackets.push((i, j));
            columns.push(bracket);
        } else {
            values.pop();
        }
    }
    if rank < n {
        return Err(FrameError::RankDeficient {
            achieved: rank,
            required: n,
        });
    }
    for v in values.iter_mut().flatten() {
        *v = symexpr::snap_constant(*v, SNAP_TOL);
    }
    Ok(AdaptedFrame {
        matrix: FrameMatrix::frame(Matrix::from_columns(&values)),
        brackets,
        columns,
    })
}

/// Size `m` of a leading block when `G = [[I_m, 0], [A, B]]` holds exactly.
fn identity_block_size(g: &Matrix) -> Option<usize> {
    let n = g.rows();
    (1..n)
        .rev()
        .find(|&m| (0..m).all(|i| (0..n).all(|j| g[(i, j)] == if i == j { 1.0 } else { 0.0 })))
}

/// `M = G⁻¹`, computed blockwise as `[[I, 0], [−B⁻¹A, B⁻¹]]` when the frame
/// has an identity/zero top block row, by full Gauss–Jordan otherwise.
pub fn privileged_transform(g: &FrameMatrix) -> Result<FrameMatrix, FrameError> {
    if g.role != FrameRole::Frame {
        return Err(FrameError::WrongRole {
            expected: FrameRole::Frame,
        });
    }
    let gm = &g.entries;
    let n = gm.rows();
    let inverse = match identity_block_size(gm) {
        Some(m) => {
            let a = gm.block(m, 0, n - m, m);
            let b_inv = gm.block(m, m, n - m, n - m).inverse()?;
            let lower_left = b_inv.mul(&a);
            let mut inv = Matrix::identity(n);
            for i in 0..n - m {
                for j in 0..m {
                    inv[(m + i, j)] = -lower_left[(i, j)];
                }
            }
            inv.set_block(m, m, &b_inv);
            inv
        }
        None => gm.inverse()?,
    };
    let mut inverse = inverse;
    for i in 0..n {
        for j in 0..n {
            inverse[(i, j)] = symexpr::snap_constant(inverse[(i, j)], SNAP_TOL);
        }
    }
    let residual = inverse.mul(gm).sub(&Matrix::identity(n)).norm_inf();
    if residual > INVERSE_TOL {
        return Err(FrameError::InaccurateInverse(residual));
    }
    Ok(FrameMatrix::transform(inverse))
}

/// The affine change `y = M (x − origin)` and its inverse `x = origin + G y`.
#[derive(Debug, Clone)]
pub struct PrivilegedCoordinates {
    pub origin: Vec<f64>,
    pub frame: AdaptedFrame,
    pub transform: FrameMatrix,
    pub flag: Flag,
}

impl PrivilegedCoordinates {
    /// Builds the flag, adapted frame and transform at `p`.
    pub fn at(fields: &[VectorField], p: &[f64]) -> Result<Self, FrameError> {
        Self::with_order(fields, p, &DEFAULT_BRACKET_ORDER)
    }

    pub fn with_order(fields: &[VectorField], p: &[f64], order: &[(usize, usize)]) -> Result<Self, FrameError> {
        let flag = vfield::growth_vector(fields, p, RANK_TOL)?;
        let frame = adapted_frame_with_order(fields, p, order)?;
        let transform = privileged_transform(&frame.matrix)?;
        Ok(PrivilegedCoordinates {
            origin: p.to_vec(),
            frame,
            transform,
            flag,
        })
    }

    /// Builds the change from an explicit transform, e.g. the identity.
    pub fn from_transform(origin: &[f64], transform: FrameMatrix, frame: AdaptedFrame, flag: Flag) -> Self {
        PrivilegedCoordinates {
            origin: origin.to_vec(),
            frame,
            transform,
            flag,
        }
    }

    pub fn weights(&self) -> &[u32] {
        &self.flag.weights
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn to_privileged(&self, x: &[f64]) -> Vec<f64> {
        let shifted: Vec<f64> = x.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        self.transform.entries.mul_vec(&shifted)
    }

    pub fn from_privileged(&self, y: &[f64]) -> Vec<f64> {
        let g = self.inverse_matrix();
        g.mul_vec(y).iter().zip(&self.origin).map(|(a, b)| a + b).collect()
    }

    /// `M⁻¹`, equal to the frame when the transform was built from it.
    pub fn inverse_matrix(&self) -> Matrix {
        self.transform
            .entries
            .inverse()
            .expect("privileged transform is invertible by construction")
    }

    /// `y_j` as a function of x.
    pub fn coordinate_function(&self, j: usize) -> Expr {
        self.y_of_x()[j].to_expr()
    }

    /// Affine forms `y_j(x) = Σ_k M_jk (x_k − p_k)`.
    pub fn y_of_x(&self) -> Vec<Affine> {
        affine_rows(&self.transform.entries, &self.origin, true)
    }

    /// Affine forms `x_k(y) = p_k + Σ_j G_kj y_j`.
    pub fn x_of_y(&self) -> Vec<Affine> {
        affine_rows(&self.inverse_matrix(), &self.origin, false)
    }
}

fn affine_rows(m: &Matrix, origin: &[f64], forward: bool) -> Vec<Affine> {
    (0..m.rows())
        .map(|i| {
            let terms = (0..m.cols()).map(|k| (k, m[(i, k)]));
            let offset = if forward {
                -(0..m.cols()).map(|k| m[(i, k)] * origin[k]).sum::<f64>()
            } else {
                origin[i]
            };
            Affine::new(offset, terms)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateCheck {
    /// 1-based coordinate index.
    pub coordinate: usize,
    pub weight: u32,
    pub order: Order,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivilegedReport {
    pub checks: Vec<CoordinateCheck>,
    pub pass: bool,
}

/// Checks `ord_p(y_j) = w_j` for `y = M (x − p)`.
pub fn verify_privileged(m: &FrameMatrix, fields: &[VectorField], p: &[f64], weights: &[u32]) -> PrivilegedReport {
    let forms = affine_rows(&m.entries, p, true);
    let max_order = weights.iter().copied().max().unwrap_or(0) as usize;
    let checks: Vec<CoordinateCheck> = forms
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(j, (form, &w))| {
            let order = vfield::function_order(&form.to_expr(), p, fields, max_order, ZERO_TOL);
            CoordinateCheck {
                coordinate: j + 1,
                weight: w,
                order,
                pass: order == Order::Finite(w as usize),
            }
        })
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    PrivilegedReport { checks, pass }
}
