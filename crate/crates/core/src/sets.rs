//! Closed convex sets in `R^n` and Euclidean projections onto them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

/// Displacement tolerance for one Dykstra cycle.
pub const DYKSTRA_TOL: f64 = 1e-10;
/// Cycle budget for Dykstra before the intersection is declared (likely) empty.
pub const DYKSTRA_MAX_ITERS: usize = 1_000_000;

const SAMPLE_ATTEMPTS: usize = 10_000;

/// A non-empty closed convex set.
///
/// Box bounds may be `±∞`; an all-infinite box behaves like [`ConvexSet::FullSpace`].
/// Intersections are expected to be non-empty. Emptiness is only detected
/// when Dykstra's method fails to settle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexSet {
    Box {
        #[serde(with = "extended_reals")]
        lower: Vec<f64>,
        #[serde(with = "extended_reals")]
        upper: Vec<f64>,
    },
    Ball {
        center: Point,
        radius: f64,
    },
    /// `{x : ⟨normal, x⟩ ≤ offset}`
    Halfspace {
        normal: Point,
        offset: f64,
    },
    /// The probability simplex `{x ≥ 0, Σ x_i = 1}`.
    Simplex {
        dim: usize,
    },
    FullSpace {
        dim: usize,
    },
    Intersection {
        members: Vec<ConvexSet>,
    },
}

impl ConvexSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let set = ConvexSet::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    /// The box `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        ConvexSet::boxed(vec![lo; dim], vec![hi; dim])
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        ConvexSet::boxed(vec![lo], vec![hi])
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        let set = ConvexSet::Ball { center, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn halfspace(normal: Point, offset: f64) -> Result<Self> {
        let set = ConvexSet::Halfspace { normal, offset };
        set.validate()?;
        Ok(set)
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        let set = ConvexSet::Simplex { dim };
        set.validate()?;
        Ok(set)
    }

    pub fn full_space(dim: usize) -> Result<Self> {
        let set = ConvexSet::FullSpace { dim };
        set.validate()?;
        Ok(set)
    }

    pub fn intersection(members: Vec<ConvexSet>) -> Result<Self> {
        let set = ConvexSet::Intersection { members };
        set.validate()?;
        Ok(set)
    }

    /// Checks the structural invariants of the set (recursively for intersections).
    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::Box { lower, upper } => {
                if lower.is_empty() {
                    return Err(Error::InvalidSet("box must have dimension >= 1".into()));
                }
                if lower.len() != upper.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lower.len(),
                        found: upper.len(),
                    });
                }
                for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if l.is_nan() || u.is_nan() {
                        return Err(Error::InvalidSet(format!("box bound {i} is NaN")));
                    }
                    if l > u {
                        return Err(Error::InvalidSet(format!(
                            "box lower[{i}] = {l} exceeds upper[{i}] = {u}"
                        )));
                    }
                    if *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                        return Err(Error::InvalidSet(format!("box coordinate {i} is empty")));
                    }
                }
                Ok(())
            }
            ConvexSet::Ball { radius, .. } => {
                if radius.is_finite() && *radius > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidSet(format!(
                        "ball radius must be positive and finite, got {radius}"
                    )))
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                if normal.norm() == 0.0 {
                    return Err(Error::InvalidSet("halfspace normal must be nonzero".into()));
                }
                if !offset.is_finite() {
                    return Err(Error::InvalidSet("halfspace offset must be finite".into()));
                }
                Ok(())
            }
            ConvexSet::Simplex { dim } | ConvexSet::FullSpace { dim } => {
                if *dim == 0 {
                    Err(Error::InvalidSet("dimension must be >= 1".into()))
                } else {
                    Ok(())
                }
            }
            ConvexSet::Intersection { members } => {
                if members.len() < 2 {
                    return Err(Error::InvalidSet(
                        "intersection needs at least two members".into(),
                    ));
                }
                let n = members[0].dim();
                for m in members {
                    m.validate()?;
                    if m.dim() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            found: m.dim(),
                        });
                    }
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::Ball { center, .. } => center.dim(),
            ConvexSet::Halfspace { normal, .. } => normal.dim(),
            ConvexSet::Simplex { dim } | ConvexSet::FullSpace { dim } => *dim,
            ConvexSet::Intersection { members } => members.first().map_or(0, ConvexSet::dim),
        }
    }

    /// Euclidean projection `pr_K(x)`.
    pub fn project(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.dim())?;
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(match self {
            ConvexSet::Box { lower, upper } => Point::from_vec_unchecked(
                x.as_slice()
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(v, (l, u))| v.max(*l).min(*u))
                    .collect(),
            ),
            ConvexSet::Ball { center, radius } => {
                let d = x.distance(center);
                if d <= *radius {
                    x.clone()
                } else {
                    center.axpy(radius / d, &x.sub(center))
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x.axpy(-excess / normal.norm_squared(), normal)
                }
            }
            ConvexSet::Simplex { .. } => Point::from_vec_unchecked(project_simplex(x.as_slice())),
            ConvexSet::FullSpace { .. } => x.clone(),
            ConvexSet::Intersection { members } => dykstra(members, x)?,
        })
    }

    /// Largest violation of any defining constraint at `x` (zero when feasible).
    pub fn violation(&self, x: &Point) -> Result<f64> {
        x.check_dim(self.dim())?;
        Ok(match self {
            ConvexSet::Box { lower, upper } => x
                .as_slice()
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| (l - v).max(v - u))
                .fold(0.0, f64::max),
            ConvexSet::Ball { center, radius } => (x.distance(center) - radius).max(0.0),
            ConvexSet::Halfspace { normal, offset } => (normal.dot(x) - offset).max(0.0),
            ConvexSet::Simplex { .. } => {
                let neg = x.as_slice().iter().map(|v| -v).fold(0.0, f64::max);
                let sum: f64 = x.as_slice().iter().sum();
                neg.max((sum - 1.0).abs())
            }
            ConvexSet::FullSpace { .. } => 0.0,
            ConvexSet::Intersection { members } => members_violation(members, x)?,
        })
    }

    pub fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        Ok(self.violation(x)? <= tol)
    }

    /// `self ∩ B(center, radius)`, flattening nested intersections.
    pub fn intersect_with_ball(&self, center: &Point, radius: f64) -> Result<ConvexSet> {
        center.check_dim(self.dim())?;
        let ball = ConvexSet::ball(center.clone(), radius)?;
        Ok(match self {
            ConvexSet::FullSpace { .. } => ball,
            ConvexSet::Intersection { members } => {
                let mut members = members.clone();
                members.push(ball);
                ConvexSet::Intersection { members }
            }
            other => ConvexSet::Intersection {
                members: vec![other.clone(), ball],
            },
        })
    }

    /// Coordinate-wise bounding box; infinite entries where the set is unbounded.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        match self {
            ConvexSet::Box { lower, upper } => (lower.clone(), upper.clone()),
            ConvexSet::Ball { center, radius } => (
                center.as_slice().iter().map(|c| c - radius).collect(),
                center.as_slice().iter().map(|c| c + radius).collect(),
            ),
            ConvexSet::Simplex { .. } => (vec![0.0; n], vec![1.0; n]),
            ConvexSet::Halfspace { .. } | ConvexSet::FullSpace { .. } => {
                (vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])
            }
            ConvexSet::Intersection { members } => {
                let mut lo = vec![f64::NEG_INFINITY; n];
                let mut hi = vec![f64::INFINITY; n];
                for m in members {
                    let (ml, mh) = m.bounding_box();
                    for i in 0..n {
                        lo[i] = lo[i].max(ml[i]);
                        hi[i] = hi[i].min(mh[i]);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        let (lo, hi) = self.bounding_box();
        lo.iter().chain(&hi).all(|v| v.is_finite())
    }

    /// Draws a point uniformly from the set: uniform on the bounding box with
    /// rejection, except for the simplex which has no volume and is sampled
    /// from the flat Dirichlet distribution.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        if let ConvexSet::Simplex { dim } = self {
            let e: Vec<f64> = (0..*dim)
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let s: f64 = e.iter().sum();
            return Ok(Point::from_vec_unchecked(
                e.into_iter().map(|v| v / s).collect(),
            ));
        }
        let (lo, hi) = self.bounding_box();
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::UnboundedRegion);
        }
        for _ in 0..SAMPLE_ATTEMPTS {
            let x = Point::from_vec_unchecked(
                lo.iter()
                    .zip(&hi)
                    .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                    .collect(),
            );
            if self.contains(&x, 0.0)? {
                return Ok(x);
            }
        }
        Err(Error::SamplingFailed {
            attempts: SAMPLE_ATTEMPTS,
        })
    }

    /// Corners of a finite box, or the `2n` axis extreme points of a ball.
    /// Empty for other sets.
    pub fn extreme_points(&self) -> Vec<Point> {
        match self {
            ConvexSet::Box { lower, upper }
                if lower.len() <= 16 && lower.iter().chain(upper).all(|v| v.is_finite()) =>
            {
                let n = lower.len();
                (0..1usize << n)
                    .map(|mask| {
                        Point::from_vec_unchecked(
                            (0..n)
                                .map(|i| {
                                    if mask >> i & 1 == 1 {
                                        upper[i]
                                    } else {
                                        lower[i]
                                    }
                                })
                                .collect(),
                        )
                    })
                    .collect()
            }
            ConvexSet::Ball { center, radius } => {
                let n = center.dim();
                let mut pts = Vec::with_capacity(2 * n);
                for i in 0..n {
                    for s in [-1.0, 1.0] {
                        let mut v = center.as_slice().to_vec();
                        v[i] += s * radius;
                        pts.push(Point::from_vec_unchecked(v));
                    }
                }
                pts
            }
            _ => Vec::new(),
        }
    }
}

/// Sort-and-threshold projection onto the probability simplex.
fn project_simplex(x: &[f64]) -> Vec<f64> {
    let mut u = x.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Dykstra's alternating projections onto `∩ members`.
///
/// A cycle counts as settled when the combined displacement of the iterate and
/// of all correction vectors is at most [`DYKSTRA_TOL`]. Including the
/// corrections matters: on an empty intersection the iterate itself can settle
/// while the corrections grow without bound.
fn dykstra(members: &[ConvexSet], x0: &Point) -> Result<Point> {
    let n = x0.dim();
    let mut x = x0.clone();
    let mut corrections = vec![vec![0.0; n]; members.len()];
    for _ in 0..DYKSTRA_MAX_ITERS {
        // Movement summed over every sub-projection of the cycle. When it
        // vanishes each correction is a normal vector at x, which certifies
        // x as the projection; it stays bounded away from zero when the
        // members do not meet.
        let mut moved_sq = 0.0;
        for (member, corr) in members.iter().zip(corrections.iter_mut()) {
            let y = Point::from_vec_unchecked(
                x.as_slice()
                    .iter()
                    .zip(corr.iter())
                    .map(|(a, c)| a + c)
                    .collect(),
            );
            let p = member.project(&y)?;
            for i in 0..n {
                corr[i] = y[i] - p[i];
            }
            moved_sq += p.sub(&x).norm_squared();
            x = p;
        }
        if moved_sq.sqrt() <= DYKSTRA_TOL {
            return Ok(x);
        }
    }
    Err(Error::DykstraNoConvergence {
        iterations: DYKSTRA_MAX_ITERS,
    })
}

fn members_violation(members: &[ConvexSet], x: &Point) -> Result<f64> {
    let mut worst = 0.0f64;
    for m in members {
        worst = worst.max(m.violation(x)?);
    }
    Ok(worst)
}

/// Serde helpers for coordinate bounds that may be infinite. Finite values are
/// plain numbers; infinities are written as the strings `"inf"` / `"-inf"`
/// (formats such as JSON have no literal for them). Numeric infinities are
/// accepted on input where the format supports them.
mod extended_reals {
    use serde::de::{self, Deserializer, SeqAccess, Visitor};
    use serde::ser::{SerializeSeq, Serializer};
    use serde::Deserialize;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Bound {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            if *x == f64::INFINITY {
                seq.serialize_element("inf")?;
            } else if *x == f64::NEG_INFINITY {
                seq.serialize_element("-inf")?;
            } else {
                seq.serialize_element(x)?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Vec<f64>;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a list of numbers or \"inf\"/\"-inf\"")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Vec<f64>, A::Error> {
                let mut out = Vec::new();
                while let Some(b) = seq.next_element::<Bound>()? {
                    out.push(match b {
                        Bound::Num(x) => x,
                        Bound::Text(t) => match t.trim() {
                            "inf" | "+inf" | "infinity" => f64::INFINITY,
                            "-inf" | "-infinity" => f64::NEG_INFINITY,
                            other => {
                                return Err(de::Error::custom(format!("invalid bound {other:?}")))
                            }
                        },
                    });
                }
                Ok(out)
            }
        }
        d.deserialize_seq(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn box_clamps() {
        let s = ConvexSet::interval(-1.0, 1.0).unwrap();
        assert_eq!(s.project(&p(&[2.0])).unwrap(), p(&[1.0]));
    }

    #[test]
    fn ball_scales_radially() {
        let s = ConvexSet::ball(p(&[0.0, 0.0]), 1.0).unwrap();
        let y = s.project(&p(&[3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(y[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn simplex_symmetric_point() {
        let s = ConvexSet::simplex(3).unwrap();
        let y = s.project(&p(&[0.5, 0.5, 0.5])).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(y[i], 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn simplex_sparse_projection() {
        let s = ConvexSet::simplex(3).unwrap();
        let y = s.project(&p(&[2.0, 0.0, -1.0])).unwrap();
        assert_eq!(y, p(&[1.0, 0.0, 0.0]));
    }

    #[test]
    fn halfspace_projection() {
        let s = ConvexSet::halfspace(p(&[1.0, 1.0]), 1.0).unwrap();
        let y = s.project(&p(&[2.0, 2.0])).unwrap();
        assert_abs_diff_eq!(y[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], 0.5, epsilon = 1e-15);
        assert_eq!(s.project(&p(&[0.0, 0.0])).unwrap(), p(&[0.0, 0.0]));
    }

    #[test]
    fn unbounded_box_bounds() {
        let s = ConvexSet::boxed(vec![f64::NEG_INFINITY, 0.0], vec![1.0, f64::INFINITY]).unwrap();
        assert_eq!(s.project(&p(&[5.0, -5.0])).unwrap(), p(&[1.0, 0.0]));
        assert_eq!(
            s.project(&p(&[-1e300, 1e300])).unwrap(),
            p(&[-1e300, 1e300])
        );
        assert!(!s.is_bounded());
    }

    #[test]
    fn intersection_box_ball_matches_grid_search() {
        let s = ConvexSet::intersection(vec![
            ConvexSet::cube(2, 0.0, 2.0).unwrap(),
            ConvexSet::ball(p(&[2.0, 0.0]), 1.0).unwrap(),
        ])
        .unwrap();
        let x = p(&[0.0, 0.0]);
        // Oracle: dense grid over the box with step 1e-3, feasible points only.
        let step = 1e-3;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=2000 {
            for j in 0..=2000 {
                let (a, b) = (i as f64 * step, j as f64 * step);
                if (a - 2.0).powi(2) + b * b <= 1.0 {
                    let d = a * a + b * b;
                    if d < best.0 {
                        best = (d, a, b);
                    }
                }
            }
        }
        assert_abs_diff_eq!(best.1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(best.2, 0.0, epsilon = 1e-12);
        let y = s.project(&x).unwrap();
        assert_abs_diff_eq!(y[0], best.1, epsilon = 1e-6);
        assert_abs_diff_eq!(y[1], best.2, epsilon = 1e-6);
    }

    #[test]
    fn empty_intersection_errors() {
        let s = ConvexSet::intersection(vec![
            ConvexSet::interval(0.0, 1.0).unwrap(),
            ConvexSet::interval(2.0, 3.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(
            s.project(&p(&[0.5])),
            Err(Error::DykstraNoConvergence {
                iterations: DYKSTRA_MAX_ITERS
            })
        );
    }

    #[test]
    fn contains_examples() {
        let b = ConvexSet::interval(-1.0, 1.0).unwrap();
        assert!(b.contains(&p(&[1.0]), 0.0).unwrap());
        let ball = ConvexSet::ball(p(&[0.0, 0.0]), 1.0).unwrap();
        assert!(!ball.contains(&p(&[1.1, 0.0]), 0.0).unwrap());
        let simplex = ConvexSet::simplex(3).unwrap();
        assert!(simplex.contains(&p(&[0.3, 0.3, 0.4]), 1e-12).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let b = ConvexSet::interval(-1.0, 1.0).unwrap();
        assert_eq!(
            b.project(&p(&[1.0, 2.0])),
            Err(Error::DimensionMismatch {
                expected: 1,
                found: 2
            })
        );
        assert!(b.contains(&p(&[1.0, 2.0]), 0.0).is_err());
        assert!(b.intersect_with_ball(&p(&[0.0, 0.0]), 1.0).is_err());
    }

    #[test]
    fn intersect_with_ball_rules() {
        let c = p(&[0.0]);
        let full = ConvexSet::full_space(1).unwrap();
        assert_eq!(
            full.intersect_with_ball(&c, 2.0).unwrap(),
            ConvexSet::ball(c.clone(), 2.0).unwrap()
        );

        let b = ConvexSet::interval(-1.0, 1.0).unwrap();
        match b.intersect_with_ball(&c, 3.0).unwrap() {
            ConvexSet::Intersection { members } => {
                assert_eq!(
                    members,
                    vec![b.clone(), ConvexSet::ball(c.clone(), 3.0).unwrap()]
                );
            }
            other => panic!("unexpected {other:?}"),
        }

        let a = ConvexSet::interval(-2.0, 2.0).unwrap();
        let ab = ConvexSet::intersection(vec![a.clone(), b.clone()]).unwrap();
        match ab.intersect_with_ball(&c, 1.5).unwrap() {
            ConvexSet::Intersection { members } => {
                assert_eq!(members, vec![a, b, ConvexSet::ball(c, 1.5).unwrap()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_sets_rejected() {
        assert!(ConvexSet::boxed(vec![1.0], vec![0.0]).is_err());
        assert!(ConvexSet::ball(p(&[0.0]), 0.0).is_err());
        assert!(ConvexSet::halfspace(p(&[0.0, 0.0]), 1.0).is_err());
        assert!(ConvexSet::intersection(vec![ConvexSet::simplex(2).unwrap()]).is_err());
        assert!(ConvexSet::intersection(vec![
            ConvexSet::simplex(2).unwrap(),
            ConvexSet::simplex(3).unwrap()
        ])
        .is_err());
        assert!(ConvexSet::ball(p(&[0.0]), -1.0).is_err());
    }
}
