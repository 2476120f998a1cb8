//! Problem definition, natural and normal maps, and residual error bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::OperatorSpec;
use crate::point::Point;
use crate::sets::ConvexSet;
use crate::MEMBERSHIP_TOL;

/// Natural-map residual a reference solution must meet.
pub const REFERENCE_TOL: f64 = 1e-8;

/// `VI(K, F)` with an optional known solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViProblem {
    pub set: ConvexSet,
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_solution: Option<Point>,
}

/// Which residual an [`ErrorBoundCertificate`] is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `‖x − x*‖ ≤ (L + 1)/γ · ‖F_K^nat(x)‖` for `x ∈ K`; needs strong
    /// monotonicity and a Lipschitz constant.
    NaturalMap,
    /// `‖x* − pr_K(x)‖ ≤ ‖F_K^nor(x)‖ / γ` for any `x`; needs only strong
    /// pseudomonotonicity and continuity.
    NormalMap,
    /// `‖x* − x‖ ≤ ‖F(x)‖ / γ` for `x ∈ K`.
    InteriorResidual,
}

/// Where the constants used by a certificate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantSource {
    /// Taken from the operator's declared constants.
    Declared,
    /// Passed in by the caller, typically from the sampling estimators.
    Supplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundCertificate {
    pub kind: BoundKind,
    pub evaluation_point: Point,
    pub residual_norm: f64,
    /// Asserted bound on the distance from `anchor` to the solution.
    pub radius: f64,
    pub anchor: Point,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    pub source: ConstantSource,
}

impl ViProblem {
    pub fn new(set: ConvexSet, operator: OperatorSpec) -> Result<Self> {
        set.validate()?;
        operator.validate()?;
        if set.dim() != operator.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                found: operator.dim(),
            });
        }
        Ok(ViProblem {
            set,
            operator,
            reference_solution: None,
        })
    }

    /// Attaches a known solution after checking `x* ∈ K` and
    /// `‖F_K^nat(x*)‖ ≤ 1e-8`.
    pub fn with_reference(mut self, x_star: Point) -> Result<Self> {
        let residual = self.natural_map(&x_star)?.norm();
        if residual > REFERENCE_TOL {
            return Err(Error::InvalidReference { residual });
        }
        self.reference_solution = Some(x_star);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub(crate) fn require_member(&self, x: &Point) -> Result<()> {
        let violation = self.set.violation(x)?;
        if violation > MEMBERSHIP_TOL {
            Err(Error::OutsideSet { violation })
        } else {
            Ok(())
        }
    }

    /// `F_K^nat(x) = x − pr_K(x − F(x))`, defined for `x ∈ K`.
    pub fn natural_map(&self, x: &Point) -> Result<Point> {
        self.require_member(x)?;
        let fx = self.operator.evaluate(x)?;
        Ok(x.sub(&self.set.project(&x.sub(&fx))?))
    }

    /// `F_K^nor(x) = F(pr_K(x)) + x − pr_K(x)`, defined on all of `R^n`.
    pub fn normal_map(&self, x: &Point) -> Result<Point> {
        let px = self.set.project(x)?;
        Ok(self.operator.evaluate(&px)?.add(&x.sub(&px)))
    }

    pub fn is_solution(&self, x: &Point, tol: f64) -> Result<bool> {
        Ok(self.natural_map(x)?.norm() <= tol)
    }

    fn resolve_gamma(&self, gamma: Option<f64>) -> Result<(f64, ConstantSource)> {
        let (g, src) = match gamma {
            Some(g) => (g, ConstantSource::Supplied),
            None => (
                self.operator
                    .declared_gamma()
                    .ok_or(Error::MissingConstant("gamma"))?,
                ConstantSource::Declared,
            ),
        };
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::Precondition(format!(
                "gamma must be positive, got {g}"
            )));
        }
        Ok((g, src))
    }

    /// Natural-map bound with radius `(L + 1)/γ · ‖F_K^nat(x)‖`, anchored at `x`.
    /// Constants passed as `None` are read from the declared constants.
    pub fn error_bound_natural(
        &self,
        x: &Point,
        gamma: Option<f64>,
        lipschitz: Option<f64>,
    ) -> Result<ErrorBoundCertificate> {
        let (gamma, gsrc) = self.resolve_gamma(gamma)?;
        let (l, lsrc) = match lipschitz {
            Some(l) => (l, ConstantSource::Supplied),
            None => (
                self.operator
                    .declared_lipschitz()
                    .ok_or(Error::MissingConstant("lipschitz"))?,
                ConstantSource::Declared,
            ),
        };
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::Precondition(format!(
                "lipschitz must be positive, got {l}"
            )));
        }
        let residual = self.natural_map(x)?.norm();
        let source = if gsrc == ConstantSource::Supplied || lsrc == ConstantSource::Supplied {
            ConstantSource::Supplied
        } else {
            ConstantSource::Declared
        };
        Ok(ErrorBoundCertificate {
            kind: BoundKind::NaturalMap,
            evaluation_point: x.clone(),
            residual_norm: residual,
            radius: (l + 1.0) / gamma * residual,
            anchor: x.clone(),
            gamma,
            lipschitz: Some(l),
            source,
        })
    }

    /// Normal-map bound with radius `‖F_K^nor(x)‖ / γ`, anchored at `pr_K(x)`.
    pub fn error_bound_normal(
        &self,
        x: &Point,
        gamma: Option<f64>,
    ) -> Result<ErrorBoundCertificate> {
        let (gamma, source) = self.resolve_gamma(gamma)?;
        let residual = self.normal_map(x)?.norm();
        Ok(ErrorBoundCertificate {
            kind: BoundKind::NormalMap,
            evaluation_point: x.clone(),
            residual_norm: residual,
            radius: residual / gamma,
            anchor: self.set.project(x)?,
            gamma,
            lipschitz: None,
            source,
        })
    }

    /// Radius `‖F(x)‖ / γ` around a point of `K`. This is the normal-map bound
    /// restricted to `K`, where `pr_K(x) = x`.
    pub fn error_bound_interior(
        &self,
        x: &Point,
        gamma: Option<f64>,
    ) -> Result<ErrorBoundCertificate> {
        let (gamma, source) = self.resolve_gamma(gamma)?;
        self.require_member(x)?;
        let residual = self.operator.evaluate(x)?.norm();
        Ok(ErrorBoundCertificate {
            kind: BoundKind::InteriorResidual,
            evaluation_point: x.clone(),
            residual_norm: residual,
            radius: residual / gamma,
            anchor: x.clone(),
            gamma,
            lipschitz: None,
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::DeclaredConstants;
    use approx::assert_abs_diff_eq;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn example_41() -> ViProblem {
        ViProblem::new(
            ConvexSet::interval(-1.0, 1.0).unwrap(),
            OperatorSpec::sqrt_sign(),
        )
        .unwrap()
    }

    /// `F(x) = x − 3` on `[−1, 1]`, solution `x* = 1`.
    fn shifted_identity() -> ViProblem {
        ViProblem::new(
            ConvexSet::interval(-1.0, 1.0).unwrap(),
            OperatorSpec::scaled_identity(1.0, vec![-3.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn natural_map_examples() {
        assert_eq!(example_41().natural_map(&p(&[0.0])).unwrap(), p(&[0.0]));
        // 1 - pr(1 - 2) = 2
        assert_eq!(example_41().natural_map(&p(&[1.0])).unwrap(), p(&[2.0]));
        // 1 - pr(1 + 2) = 0
        assert_eq!(
            shifted_identity().natural_map(&p(&[1.0])).unwrap(),
            p(&[0.0])
        );
    }

    #[test]
    fn natural_map_requires_membership() {
        assert!(matches!(
            example_41().natural_map(&p(&[1.5])),
            Err(Error::OutsideSet { .. })
        ));
        // Within the 1e-9 membership tolerance.
        assert!(example_41().natural_map(&p(&[1.0 + 1e-10])).is_ok());
    }

    #[test]
    fn normal_map_examples() {
        // F(1) + 2 - 1 = 3
        assert_eq!(example_41().normal_map(&p(&[2.0])).unwrap(), p(&[3.0]));
        assert_eq!(example_41().normal_map(&p(&[0.0])).unwrap(), p(&[0.0]));
        let full = ViProblem::new(
            ConvexSet::full_space(1).unwrap(),
            OperatorSpec::exp_growth(),
        )
        .unwrap();
        assert_eq!(
            full.normal_map(&p(&[1.5])).unwrap(),
            OperatorSpec::exp_growth().evaluate(&p(&[1.5])).unwrap()
        );
    }

    #[test]
    fn natural_bound_examples() {
        let prob = shifted_identity();
        let at_solution = prob
            .error_bound_natural(&p(&[1.0]), Some(1.0), Some(1.0))
            .unwrap();
        assert_eq!(at_solution.radius, 0.0);

        let c0 = prob
            .error_bound_natural(&p(&[0.0]), Some(1.0), Some(1.0))
            .unwrap();
        assert_eq!(c0.residual_norm, 1.0);
        assert_eq!(c0.radius, 2.0);
        assert!(1.0 <= c0.radius);

        let c5 = prob
            .error_bound_natural(&p(&[0.5]), Some(1.0), Some(1.0))
            .unwrap();
        assert_eq!(c5.radius, 1.0);
        assert_eq!(c5.anchor, p(&[0.5]));
        assert_eq!(c5.source, ConstantSource::Supplied);
    }

    #[test]
    fn missing_constants() {
        let prob = shifted_identity();
        assert_eq!(
            prob.error_bound_natural(&p(&[0.0]), None, None),
            Err(Error::MissingConstant("gamma"))
        );
        assert_eq!(
            prob.error_bound_natural(&p(&[0.0]), Some(1.0), None),
            Err(Error::MissingConstant("lipschitz"))
        );
        assert_eq!(
            prob.error_bound_normal(&p(&[0.0]), None),
            Err(Error::MissingConstant("gamma"))
        );
    }

    #[test]
    fn declared_constants_are_recorded() {
        let mut prob = shifted_identity();
        prob.operator = prob
            .operator
            .with_constants(DeclaredConstants {
                gamma: 1.0,
                lipschitz: Some(1.0),
                value_bound: None,
            })
            .unwrap();
        let c = prob.error_bound_natural(&p(&[0.0]), None, None).unwrap();
        assert_eq!(c.source, ConstantSource::Declared);
        assert_eq!(c.radius, 2.0);
    }

    #[test]
    fn normal_bound_examples() {
        let c = example_41()
            .error_bound_normal(&p(&[2.0]), Some(1.0))
            .unwrap();
        assert_eq!(c.residual_norm, 3.0);
        assert_eq!(c.radius, 3.0);
        assert_eq!(c.anchor, p(&[1.0]));
        assert!((0.0f64 - 1.0).abs() <= c.radius);

        assert_eq!(
            example_41()
                .error_bound_normal(&p(&[0.0]), Some(1.0))
                .unwrap()
                .radius,
            0.0
        );

        let ball = ViProblem::new(
            ConvexSet::ball(p(&[0.0, 0.0]), 1.0).unwrap(),
            OperatorSpec::scaled_identity(1.0, vec![0.0, 0.0]).unwrap(),
        )
        .unwrap();
        let c = ball.error_bound_normal(&p(&[2.0, 0.0]), Some(1.0)).unwrap();
        assert_abs_diff_eq!(c.radius, 2.0, epsilon = 1e-15);
        assert_eq!(c.anchor, p(&[1.0, 0.0]));
        assert!(c.anchor.norm() <= c.radius);
    }

    #[test]
    fn interior_bound_examples() {
        let c = example_41()
            .error_bound_interior(&p(&[0.25]), Some(1.0))
            .unwrap();
        assert_eq!(c.radius, 1.0);
        assert_eq!(
            example_41()
                .error_bound_interior(&p(&[0.0]), Some(1.0))
                .unwrap()
                .radius,
            0.0
        );

        let full = ViProblem::new(
            ConvexSet::full_space(1).unwrap(),
            OperatorSpec::exp_growth(),
        )
        .unwrap();
        assert_eq!(
            full.error_bound_interior(&p(&[1.0]), Some(1.0))
                .unwrap()
                .radius,
            2.0
        );

        assert!(matches!(
            example_41().error_bound_interior(&p(&[3.0]), Some(1.0)),
            Err(Error::OutsideSet { .. })
        ));
    }

    #[test]
    fn solution_checks() {
        assert!(example_41().is_solution(&p(&[0.0]), 1e-12).unwrap());
        // ‖F^nat(0.5)‖ = |0.5 - pr(0.5 - √2)| = 0.5 + (√2 - 0.5) = √2.
        let r = example_41().natural_map(&p(&[0.5])).unwrap().norm();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-15);
        assert!(!example_41().is_solution(&p(&[0.5]), 1e-12).unwrap());
        assert!(shifted_identity().is_solution(&p(&[1.0]), 1e-12).unwrap());
    }

    #[test]
    fn reference_validation() {
        assert!(shifted_identity().with_reference(p(&[1.0])).is_ok());
        assert!(matches!(
            shifted_identity().with_reference(p(&[0.0])),
            Err(Error::InvalidReference { .. })
        ));
    }

    #[test]
    fn dimension_checked_at_construction() {
        assert!(ViProblem::new(
            ConvexSet::cube(2, -1.0, 1.0).unwrap(),
            OperatorSpec::sqrt_sign()
        )
        .is_err());
    }
}
