//! Nilpotent approximation: fields rewritten in privileged coordinates,
//! expanded in Taylor series and truncated to their homogeneous part of
//! weighted degree −1.

use serde::Serialize;

use crate::linalg::Matrix;
use crate::privcoord::{FrameError, FrameMatrix, PrivilegedCoordinates};
use crate::symexpr::{self, Affine, Expr, Polynomial, SNAP_TOL, ZERO_TOL};
use crate::vfield::{lie_bracket, Coords, FieldError, VectorField};

/// Total degree of the Taylor expansions used to certify first-order approximation.
pub const CERTIFICATE_DEGREE: u32 = 2;

/// Rewrites `field` (x-coordinates) in `y = M (x − origin)`:
/// `[X]_y^i(y) = Σ_j M_ij X_j(origin + M⁻¹ y)`.
pub fn pushforward(field: &VectorField, m: &FrameMatrix, origin: &[f64]) -> Result<VectorField, FrameError> {
    let inverse = m.entries.inverse()?;
    let subs = affine_map(&inverse, origin);
    Ok(linear_change(field, &m.entries, &subs, Coords::Y))
}

/// Rewrites a y-field back in x-coordinates: `[X]_x^k(x) = Σ_j G_kj X_j(M (x − origin))`.
pub fn pullback(field: &VectorField, m: &FrameMatrix, origin: &[f64]) -> Result<VectorField, FrameError> {
    let inverse = m.entries.inverse()?;
    let shift: Vec<f64> = m.entries.mul_vec(origin).iter().map(|v| -v).collect();
    let subs: Vec<Affine> = (0..m.dim())
        .map(|i| Affine::new(shift[i], (0..m.dim()).map(|k| (k, m.entries[(i, k)]))))
        .collect();
    Ok(linear_change(field, &inverse, &subs, Coords::X))
}

/// `x = origin + L y` as affine forms in y.
fn affine_map(linear: &Matrix, origin: &[f64]) -> Vec<Affine> {
    (0..linear.rows())
        .map(|k| Affine::new(origin[k], (0..linear.cols()).map(|j| (j, linear[(k, j)]))))
        .collect()
}

fn linear_change(field: &VectorField, jacobian: &Matrix, subs: &[Affine], target: Coords) -> VectorField {
    let substituted: Vec<Expr> = field.components().iter().map(|c| c.substitute(subs)).collect();
    let components = (0..jacobian.rows())
        .map(|i| {
            Expr::sum(
                substituted
                    .iter()
                    .enumerate()
                    .filter(|(j, c)| jacobian[(i, *j)] != 0.0 && !c.is_const_zero())
                    .map(|(j, c)| c.clone().scale(jacobian[(i, j)]))
                    .collect(),
            )
        })
        .collect();
    VectorField::new(target, components)
}

/// Multiplies out a polynomial field of total degree ≤ `degree` into monomials in x.
fn expand(field: &VectorField, degree: u32) -> VectorField {
    let zero = vec![0.0; field.dim()];
    field.map(|c| symexpr::taylor(c, &zero, degree).snapped(SNAP_TOL).to_expr())
}

/// Polynomial vector field in y-coordinates with coordinate weights attached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedField {
    pub components: Vec<Polynomial>,
    pub weights: Vec<u32>,
}

impl WeightedField {
    pub fn to_field(&self) -> VectorField {
        VectorField::new(Coords::Y, self.components.iter().map(Polynomial::to_expr).collect())
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval(y)).collect()
    }

    /// Every monomial on component j has weighted degree `w_j − 1`.
    pub fn is_homogeneous_of_degree_minus_one(&self) -> bool {
        self.components
            .iter()
            .zip(&self.weights)
            .all(|(p, &w)| p.iter().all(|(alpha, _)| alpha.weighted_degree(&self.weights) + 1 == w))
    }
}

/// Keeps exactly the Taylor monomials `y^α` with `w(α) = w_j − 1` on component j.
pub fn weighted_truncate(field: &VectorField, weights: &[u32]) -> WeightedField {
    let n = field.dim();
    let center = vec![0.0; n];
    let components = field
        .components()
        .iter()
        .zip(weights)
        .map(|(c, &w)| {
            let target = w.saturating_sub(1);
            symexpr::taylor(c, &center, target)
                .filter_weighted(weights, |d| d == target)
                .snapped(SNAP_TOL)
        })
        .collect();
    WeightedField {
        components,
        weights: weights.to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonomialViolation {
    /// 1-based component index.
    pub component: usize,
    pub exponents: Vec<u32>,
    pub coefficient: f64,
    pub weighted_degree: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstOrderReport {
    pub violations: Vec<MonomialViolation>,
    pub pass: bool,
}

/// Certifies that `g − ĝ` has order ≥ 0 up to Taylor degree [`CERTIFICATE_DEGREE`]:
/// every surviving monomial on component j has `w(α) ≥ w_j`.
pub fn verify_first_order(g: &VectorField, hat: &WeightedField) -> Result<FirstOrderReport, FieldError> {
    let residual = g.sub(&hat.to_field())?;
    let center = vec![0.0; g.dim()];
    let mut violations = Vec::new();
    for (j, (c, &w)) in residual.components().iter().zip(&hat.weights).enumerate() {
        let poly = symexpr::taylor(c, &center, CERTIFICATE_DEGREE);
        for (alpha, coeff) in poly.iter() {
            let d = alpha.weighted_degree(&hat.weights);
            if d < w {
                violations.push(MonomialViolation {
                    component: j + 1,
                    exponents: alpha.exponents().to_vec(),
                    coefficient: coeff,
                    weighted_degree: d,
                });
            }
        }
    }
    let pass = violations.is_empty();
    Ok(FirstOrderReport { violations, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairBracket {
    /// 1-based field indices.
    pub pair: (usize, usize),
    pub value: Vec<f64>,
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NilpotentReport {
    pub pairwise: Vec<PairBracket>,
    /// 1-based `(i, j, k)` of every `[[ĝ_i, ĝ_j], ĝ_k]` that failed the zero test.
    pub nonzero_triples: Vec<(usize, usize, usize)>,
    pub pass: bool,
}

/// Checks that pairwise brackets of `hats` are constant fields and every
/// bracket of length 3 vanishes.
pub fn verify_nilpotent(hats: &[VectorField]) -> Result<NilpotentReport, FieldError> {
    let m = hats.len();
    let mut pairwise = Vec::new();
    let mut nonzero_triples = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let b = lie_bracket(&hats[i], &hats[j])?;
            if i < j {
                let n = b.dim();
                let constant = b
                    .components()
                    .iter()
                    .all(|c| (0..n).all(|v| symexpr::is_zero(&c.diff(v), ZERO_TOL)));
                pairwise.push(PairBracket {
                    pair: (i + 1, j + 1),
                    value: b.eval(&vec![0.0; n]),
                    constant,
                });
            }
            for (k, hk) in hats.iter().enumerate() {
                if !lie_bracket(&b, hk)?.is_zero(ZERO_TOL) {
                    nonzero_triples.push((i + 1, j + 1, k + 1));
                }
            }
        }
    }
    let pass = nonzero_triples.is_empty() && pairwise.iter().all(|p| p.constant);
    Ok(NilpotentReport {
        pairwise,
        nonzero_triples,
        pass,
    })
}

/// Weighted dilation `δ_λ(y)_j = λ^{w_j} y_j`.
pub fn dilate(y: &[f64], weights: &[u32], lambda: f64) -> Vec<f64> {
    y.iter().zip(weights).map(|(v, &w)| lambda.powi(w as i32) * v).collect()
}

/// The complete construction at a point.
#[derive(Debug, Clone)]
pub struct NilpotentApproximation {
    pub coords: PrivilegedCoordinates,
    /// Original fields expressed in y.
    pub fields_y: Vec<VectorField>,
    pub hats: Vec<WeightedField>,
    /// `ĝ_i` in x-coordinates.
    pub hats_x: Vec<VectorField>,
}

impl NilpotentApproximation {
    pub fn at(fields: &[VectorField], p: &[f64]) -> Result<Self, FrameError> {
        Self::from_coordinates(fields, PrivilegedCoordinates::at(fields, p)?)
    }

    pub fn from_coordinates(fields: &[VectorField], coords: PrivilegedCoordinates) -> Result<Self, FrameError> {
        let fields_y = fields
            .iter()
            .map(|f| pushforward(f, &coords.transform, &coords.origin))
            .collect::<Result<Vec<_>, _>>()?;
        let hats: Vec<WeightedField> = fields_y
            .iter()
            .map(|f| weighted_truncate(f, coords.weights()))
            .collect();
        let hats_x = hats
            .iter()
            .map(|h| {
                let degree = h
                    .components
                    .iter()
                    .flat_map(|p| p.iter().map(|(a, _)| a.total_degree()))
                    .max();
                let pulled = pullback(&h.to_field(), &coords.transform, &coords.origin)?;
                Ok(expand(&pulled, degree.unwrap_or(0)))
            })
            .collect::<Result<Vec<_>, FrameError>>()?;
        Ok(NilpotentApproximation {
            coords,
            fields_y,
            hats,
            hats_x,
        })
    }

    pub fn hats_y(&self) -> Vec<VectorField> {
        self.hats.iter().map(WeightedField::to_field).collect()
    }

    /// `[ĝ_i, ĝ_j]` for the bracket pairs that completed the frame, in y-coordinates.
    pub fn bracket_hats_y(&self) -> Result<Vec<VectorField>, FieldError> {
        let hats = self.hats_y();
        self.coords
            .frame
            .brackets
            .iter()
            .map(|&(i, j)| lie_bracket(&hats[i], &hats[j]))
            .collect()
    }

    pub fn first_order_reports(&self) -> Result<Vec<FirstOrderReport>, FieldError> {
        self.fields_y
            .iter()
            .zip(&self.hats)
            .map(|(g, h)| verify_first_order(g, h))
            .collect()
    }

    pub fn nilpotent_report(&self) -> Result<NilpotentReport, FieldError> {
        verify_nilpotent(&self.hats_y())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::MultiIndex;
    use crate::trident::fields_transformed;

    fn approx() -> NilpotentApproximation {
        NilpotentApproximation::at(&fields_transformed(), &[0.0; 6]).unwrap()
    }

    #[test]
    fn identity_pushforward_renames_coordinates() {
        let f = VectorField::basis(Coords::X, 6, 0);
        let pushed = pushforward(&f, &FrameMatrix::transform(Matrix::identity(6)), &[0.0; 6]).unwrap();
        assert_eq!(pushed, VectorField::basis(Coords::Y, 6, 0));
    }

    #[test]
    fn pushed_generators_are_unit_vectors_at_origin() {
        let a = approx();
        for (i, g) in a.fields_y.iter().enumerate() {
            let v = g.eval(&[0.0; 6]);
            for (k, c) in v.iter().enumerate() {
                assert!(
                    (c - if k == i { 1.0 } else { 0.0 }).abs() < 1e-12,
                    "g{} comp {k}",
                    i + 1
                );
            }
        }
    }

    #[test]
    fn third_hat_field_is_a_coordinate_field() {
        let a = approx();
        let hat3 = &a.hats[2];
        assert_eq!(hat3.components[2], Polynomial::constant(6, 1.0));
        assert!(hat3.components.iter().enumerate().all(|(k, p)| k == 2 || p.is_empty()));
        assert_eq!(hat3.to_field().to_string(), "d/dy3");
    }

    #[test]
    fn hat_components_have_expected_shape() {
        let a = approx();
        for hat in &a.hats {
            assert!(hat.is_homogeneous_of_degree_minus_one());
            for p in &hat.components[3..] {
                for (alpha, _) in p.iter() {
                    assert_eq!(alpha.total_degree(), 1);
                    assert!(alpha.exponents()[3..].iter().all(|&e| e == 0));
                }
            }
        }
    }

    #[test]
    fn truncation_is_idempotent() {
        let a = approx();
        for hat in &a.hats {
            assert_eq!(&weighted_truncate(&hat.to_field(), &hat.weights), hat);
        }
    }

    #[test]
    fn first_order_certificates() {
        let a = approx();
        for report in a.first_order_reports().unwrap() {
            assert!(report.pass, "{report:?}");
        }
        let zero = WeightedField {
            components: vec![Polynomial::new(6); 6],
            weights: vec![1, 1, 1, 2, 2, 2],
        };
        let report = verify_first_order(&a.fields_y[0], &zero).unwrap();
        assert!(!report.pass);
        assert!(report
            .violations
            .iter()
            .any(|v| v.component == 1 && v.weighted_degree == 0));
    }

    #[test]
    fn perturbed_hat_fails_certificate() {
        let a = approx();
        let mut hat = a.hats[1].clone();
        let (alpha, c) = hat.components[3].iter().next().map(|(k, v)| (k.clone(), v)).unwrap();
        hat.components[3].insert(alpha, c + 1e-3);
        assert!(!verify_first_order(&a.fields_y[1], &hat).unwrap().pass);
    }

    #[test]
    fn hats_generate_step_two_algebra() {
        let report = approx().nilpotent_report().unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.pairwise.len(), 3);
    }

    #[test]
    fn hat_brackets_match_frame_columns() {
        let a = approx();
        for (k, b) in a.bracket_hats_y().unwrap().iter().enumerate() {
            let v = b.eval(&[0.0; 6]);
            for (i, c) in v.iter().enumerate() {
                assert!((c - if i == 3 + k { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pulled_back_hats_agree_with_fields_at_origin() {
        let a = approx();
        for (h, g) in a.hats_x.iter().zip(fields_transformed()) {
            let hv = h.eval(&[0.0; 6]);
            let gv = g.eval(&[0.0; 6]);
            assert!(hv.iter().zip(&gv).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn linear_coefficients_only_in_first_three_coordinates() {
        let a = approx();
        let c = a.hats[0].components[3].coeff(&MultiIndex::unit(6, 3));
        assert_eq!(c, 0.0);
    }
}
