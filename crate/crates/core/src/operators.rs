//! The operator catalog and sampling estimators for its constants.
//!
//! The estimators are one-sided diagnostics, not certificates: the monotonicity
//! estimates are upper estimates of the true modulus on the sampled region and
//! the Lipschitz estimate is a lower estimate of the true constant.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;
use crate::sets::ConvexSet;

/// Positive scalar factor `c(x)` of a [`OperatorFamily::ScaledAffine`] operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scaling {
    Constant {
        c: f64,
    },
    /// `1 + ‖x‖²`
    OnePlusNormSq,
    /// `2 + sin(x_1)`
    TwoPlusSinFirst,
}

impl Scaling {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Scaling::Constant { c } => *c,
            Scaling::OnePlusNormSq => 1.0 + x.iter().map(|v| v * v).sum::<f64>(),
            Scaling::TwoPlusSinFirst => 2.0 + x[0].sin(),
        }
    }

    /// Global lower bound of `c(x)`.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Scaling::Constant { c } => *c,
            Scaling::OnePlusNormSq | Scaling::TwoPlusSinFirst => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorFamily {
    /// `F(x) = A x + b`, `A` given row by row.
    Affine { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// `F(x) = 2√x` for `x ≥ 0`, `−2√(−x)` otherwise. Strongly monotone with
    /// modulus 1 on `[−1, 1]` but not Lipschitz near 0.
    SqrtSign1d,
    /// `F(x) = 2^{|x|} x`.
    ExpGrowth1d,
    /// `F(x) = c(x) (A x + b)`. If `A` is strongly monotone with modulus `μ`
    /// then `F` is strongly pseudomonotone with modulus `c_min · μ` and has
    /// the same solution set as the affine map.
    ScaledAffine {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        scaling: Scaling,
    },
}

/// Constants the caller vouches for. `gamma` is a strong (pseudo)monotonicity
/// modulus, `lipschitz` a Lipschitz constant and `value_bound` a bound `M` on
/// `‖F‖` over the feasible set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredConstants {
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_bound: Option<f64>,
}

impl DeclaredConstants {
    pub fn gamma(gamma: f64) -> Self {
        DeclaredConstants {
            gamma,
            lipschitz: None,
            value_bound: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.gamma) {
            return Err(Error::InvalidOperator(format!(
                "declared gamma must be positive, got {}",
                self.gamma
            )));
        }
        if let Some(l) = self.lipschitz {
            if !positive(l) {
                return Err(Error::InvalidOperator(format!(
                    "declared lipschitz must be positive, got {l}"
                )));
            }
        }
        if let Some(m) = self.value_bound {
            if !positive(m) {
                return Err(Error::InvalidOperator(format!(
                    "declared value_bound must be positive, got {m}"
                )));
            }
        }
        Ok(())
    }
}

/// A catalog operator, an output scale factor and optional declared constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub family: OperatorFamily,
    #[serde(default = "unit_scale")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<DeclaredConstants>,
}

fn unit_scale() -> f64 {
    1.0
}

impl OperatorSpec {
    pub fn new(family: OperatorFamily) -> Result<Self> {
        let op = OperatorSpec {
            family,
            scale: 1.0,
            constants: None,
        };
        op.validate()?;
        Ok(op)
    }

    pub fn affine(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        OperatorSpec::new(OperatorFamily::Affine { a, b })
    }

    /// `F(x) = alpha · x + b`
    pub fn scaled_identity(alpha: f64, b: Vec<f64>) -> Result<Self> {
        let n = b.len();
        let a = (0..n)
            .map(|i| (0..n).map(|j| if i == j { alpha } else { 0.0 }).collect())
            .collect();
        OperatorSpec::affine(a, b)
    }

    pub fn sqrt_sign() -> Self {
        OperatorSpec {
            family: OperatorFamily::SqrtSign1d,
            scale: 1.0,
            constants: None,
        }
    }

    pub fn exp_growth() -> Self {
        OperatorSpec {
            family: OperatorFamily::ExpGrowth1d,
            scale: 1.0,
            constants: None,
        }
    }

    pub fn scaled_affine(a: Vec<Vec<f64>>, b: Vec<f64>, scaling: Scaling) -> Result<Self> {
        OperatorSpec::new(OperatorFamily::ScaledAffine { a, b, scaling })
    }

    pub fn with_constants(mut self, constants: DeclaredConstants) -> Result<Self> {
        constants.validate()?;
        self.constants = Some(constants);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidOperator(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        if let Some(c) = &self.constants {
            c.validate()?;
        }
        match &self.family {
            OperatorFamily::Affine { a, b } => check_affine(a, b),
            OperatorFamily::ScaledAffine { a, b, scaling } => {
                check_affine(a, b)?;
                let c_min = scaling.lower_bound();
                if !(c_min.is_finite() && c_min > 0.0) {
                    return Err(Error::InvalidOperator(format!(
                        "scaling lower bound must be positive, got {c_min}"
                    )));
                }
                Ok(())
            }
            OperatorFamily::SqrtSign1d | OperatorFamily::ExpGrowth1d => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.family {
            OperatorFamily::Affine { b, .. } | OperatorFamily::ScaledAffine { b, .. } => b.len(),
            OperatorFamily::SqrtSign1d | OperatorFamily::ExpGrowth1d => 1,
        }
    }

    pub fn declared_gamma(&self) -> Option<f64> {
        self.constants.map(|c| c.gamma)
    }

    pub fn declared_lipschitz(&self) -> Option<f64> {
        self.constants.and_then(|c| c.lipschitz)
    }

    pub fn declared_value_bound(&self) -> Option<f64> {
        self.constants.and_then(|c| c.value_bound)
    }

    /// Evaluates `F(x)`.
    ///
    /// Values that do not fit in `f64` (only reachable for the exponential
    /// family, or for absurdly large affine inputs) come back as
    /// [`Error::OperatorOverflow`] carrying the sign of the true value.
    /// Solvers treat that as divergence.
    pub fn evaluate(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.dim())?;
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
        let v = x.as_slice();
        let mut out = match &self.family {
            OperatorFamily::Affine { a, b } => affine_apply(a, b, v),
            OperatorFamily::ScaledAffine { a, b, scaling } => {
                let c = scaling.value(v);
                affine_apply(a, b, v).into_iter().map(|y| c * y).collect()
            }
            OperatorFamily::SqrtSign1d => {
                let t = v[0];
                vec![if t >= 0.0 {
                    2.0 * t.sqrt()
                } else {
                    -2.0 * (-t).sqrt()
                }]
            }
            OperatorFamily::ExpGrowth1d => {
                let t = v[0];
                vec![2f64.powf(t.abs()) * t]
            }
        };
        if self.scale != 1.0 {
            for y in &mut out {
                *y *= self.scale;
            }
        }
        if let Some(bad) = out.iter().find(|y| !y.is_finite()) {
            return Err(Error::OperatorOverflow {
                positive: bad.is_sign_positive(),
            });
        }
        Ok(Point::from_vec_unchecked(out))
    }

    /// The operator `F / (2γ)`: same solution set, strong pseudomonotonicity
    /// modulus `1/2`, Lipschitz constant and value bound scaled alike.
    pub fn rescale_to_half_modulus(&self, gamma: f64) -> Result<OperatorSpec> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidOperator(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        let factor = 1.0 / (2.0 * gamma);
        let constants = DeclaredConstants {
            gamma: 0.5,
            lipschitz: self.declared_lipschitz().map(|l| l * factor),
            value_bound: self.declared_value_bound().map(|m| m * factor),
        };
        Ok(OperatorSpec {
            family: self.family.clone(),
            scale: self.scale * factor,
            constants: Some(constants),
        })
    }

    /// Minimum of `⟨F(x) − F(y), x − y⟩ / ‖x − y‖²` over `samples` random pairs.
    pub fn estimate_strong_monotonicity(
        &self,
        region: &ConvexSet,
        samples: usize,
        seed: u64,
    ) -> Result<f64> {
        let mut best = f64::INFINITY;
        for_each_pair(self, region, samples, seed, |x, y, fx, fy| {
            let d = x.sub(y);
            let dd = d.norm_squared();
            if dd > 0.0 {
                best = best.min(fx.sub(fy).dot(&d) / dd);
            }
        })?;
        Ok(best)
    }

    /// Minimum of `⟨F(x), x − y⟩ / ‖x − y‖²` over sampled ordered pairs with
    /// `⟨F(y), x − y⟩ ≥ 0`; `+∞` when no pair satisfies the premise.
    pub fn estimate_strong_pseudomonotonicity(
        &self,
        region: &ConvexSet,
        samples: usize,
        seed: u64,
    ) -> Result<f64> {
        let mut best = f64::INFINITY;
        for_each_pair(self, region, samples, seed, |x, y, fx, fy| {
            let d = x.sub(y);
            let dd = d.norm_squared();
            if dd == 0.0 {
                return;
            }
            // Both orientations of the pair.
            if fy.dot(&d) >= 0.0 {
                best = best.min(fx.dot(&d) / dd);
            }
            if -fx.dot(&d) >= 0.0 {
                best = best.min(-fy.dot(&d) / dd);
            }
        })?;
        Ok(best)
    }

    /// Maximum of `‖F(x) − F(y)‖ / ‖x − y‖` over sampled pairs.
    ///
    /// The estimate is flagged as still growing when the 5th largest quotient
    /// over all pairs exceeds 1.25 times the 5th largest over the first
    /// sixteenth of the same sample stream. The order statistic is much less
    /// noisy than the maximum. Operators that are not Lipschitz on the region
    /// are flagged, and so are Lipschitz ones whose steepest pairs are too
    /// rare for the sample size.
    pub fn estimate_lipschitz(
        &self,
        region: &ConvexSet,
        samples: usize,
        seed: u64,
    ) -> Result<LipschitzEstimate> {
        let mut quotients = Vec::with_capacity(samples);
        for_each_pair(self, region, samples, seed, |x, y, fx, fy| {
            let dist = x.distance(y);
            quotients.push(if dist > 0.0 {
                fx.distance(fy) / dist
            } else {
                0.0
            });
        })?;
        let best = quotients.iter().copied().fold(0.0, f64::max);
        let prefix = samples / 16;
        let unbounded_suspected = prefix >= GROWTH_RANK
            && nth_largest(&mut quotients.clone(), GROWTH_RANK)
                > 1.25 * nth_largest(&mut quotients[..prefix].to_vec(), GROWTH_RANK);
        Ok(LipschitzEstimate {
            value: best,
            unbounded_suspected,
        })
    }

    /// Maximum of `‖F(x)‖` over `samples` random points of the region plus its
    /// extreme points (box corners, ball axis points).
    pub fn value_bound(&self, region: &ConvexSet, samples: usize, seed: u64) -> Result<f64> {
        check_region(self, region)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = 0.0f64;
        for x in region.extreme_points() {
            best = best.max(self.evaluate(&x)?.norm());
        }
        for _ in 0..samples {
            let x = region.sample_uniform(&mut rng)?;
            best = best.max(self.evaluate(&x)?.norm());
        }
        Ok(best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub value: f64,
    /// The estimate had not stabilised at this sample size.
    pub unbounded_suspected: bool,
}

fn check_affine(a: &[Vec<f64>], b: &[f64]) -> Result<()> {
    let n = b.len();
    if n == 0 {
        return Err(Error::InvalidOperator(
            "affine operator needs dimension >= 1".into(),
        ));
    }
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidOperator(format!("matrix must be {n}x{n}")));
    }
    if a.iter().flatten().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidOperator(
            "affine coefficients must be finite".into(),
        ));
    }
    Ok(())
}

fn affine_apply(a: &[Vec<f64>], b: &[f64], x: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(row, bi)| row.iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>() + bi)
        .collect()
}

fn to_matrix(a: &[Vec<f64>]) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| a[i][j])
}

/// Strong monotonicity modulus of `x ↦ A x + b`: the smallest eigenvalue of
/// the symmetric part of `A`.
pub fn affine_modulus(a: &[Vec<f64>]) -> f64 {
    let m = to_matrix(a);
    let sym = (&m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Lipschitz constant of `x ↦ A x + b`: the spectral norm of `A`.
pub fn spectral_norm(a: &[Vec<f64>]) -> f64 {
    let m = to_matrix(a);
    m.singular_values().max()
}

fn check_region(op: &OperatorSpec, region: &ConvexSet) -> Result<()> {
    if region.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: region.dim(),
        });
    }
    if !region.is_bounded() {
        return Err(Error::UnboundedRegion);
    }
    Ok(())
}

const GROWTH_RANK: usize = 5;

fn nth_largest(v: &mut [f64], rank: usize) -> f64 {
    let i = v.len() - rank;
    *v.select_nth_unstable_by(i, f64::total_cmp).1
}

fn for_each_pair(
    op: &OperatorSpec,
    region: &ConvexSet,
    samples: usize,
    seed: u64,
    mut visit: impl FnMut(&Point, &Point, &Point, &Point),
) -> Result<()> {
    check_region(op, region)?;
    if samples < 2 {
        return Err(Error::Precondition(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x = region.sample_uniform(&mut rng)?;
        let y = region.sample_uniform(&mut rng)?;
        let fx = op.evaluate(&x)?;
        let fy = op.evaluate(&y)?;
        visit(&x, &y, &fx, &fy);
    }
    Ok(())
}
