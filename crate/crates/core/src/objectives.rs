//! Closed-form benchmark objectives with exact stationary-set metadata.
//!
//! Every objective is nonnegative, has an analytic gradient, and knows its
//! stationary set `J` as a list of connected-component families. Constants
//! (gradient Lipschitz `c`, local P-L `s`) are exact on the metadata window.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;
use thiserror::Error;

use crate::param::{ParamVector, Region};
use crate::rng::RngStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("point lies outside the metadata window of `{0}`")]
    OutsideWindow(String),
    #[error("point lies on stationary component {0}; the P-L ratio is undefined there")]
    OnComponent(usize),
    #[error("objective `{id}` has dimension {expected}, got a point of dimension {got}")]
    Dimension { id: String, expected: usize, got: usize },
    #[error("objective `{id}` has no stationary component {index}")]
    UnknownComponent { id: String, index: usize },
    #[error("invalid objective parameter: {0}")]
    Invalid(String),
}

/// Shape of one family of connected stationary components.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "descriptor", rename_all = "snake_case")]
pub enum Descriptor {
    Point { at: ParamVector },
    /// The isolated points `anchor + k * period`, `k ∈ Z` (one-dimensional).
    PeriodicLattice { anchor: f64, period: f64 },
    /// The segment `[lo, hi]` (one-dimensional).
    Interval { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    #[serde(flatten)]
    pub descriptor: Descriptor,
    /// `g_i`, the constant value of `g` on the component.
    pub value: f64,
    pub is_minimum: bool,
}

impl Component {
    /// Exact Euclidean distance from `theta` to the component.
    pub fn distance(&self, theta: &ParamVector) -> f64 {
        match &self.descriptor {
            Descriptor::Point { at } => theta.distance(at),
            Descriptor::PeriodicLattice { anchor, period } => {
                let x = theta[0] - anchor;
                (x - period * (x / period).round()).abs()
            }
            Descriptor::Interval { lo, hi } => {
                let x = theta[0];
                (lo - x).max(x - hi).max(0.0)
            }
        }
    }

    /// A member of the component inside `window`, or `None` if none exists.
    pub fn sample_member(&self, window: &Region, rng: &mut RngStream) -> Option<ParamVector> {
        match &self.descriptor {
            Descriptor::Point { at } => window.contains(at).then(|| at.clone()),
            Descriptor::PeriodicLattice { anchor, period } => {
                let k_lo = ((window.lower[0] - anchor) / period).ceil() as i64;
                let k_hi = ((window.upper[0] - anchor) / period).floor() as i64;
                if k_hi < k_lo {
                    return None;
                }
                let k = k_lo + rng.index((k_hi - k_lo + 1) as usize) as i64;
                Some(ParamVector::scalar(anchor + k as f64 * period))
            }
            Descriptor::Interval { lo, hi } => {
                let a = lo.max(window.lower[0]);
                let b = hi.min(window.upper[0]);
                (a <= b).then(|| ParamVector::scalar(rng.uniform_in(a, b)))
            }
        }
    }

    /// A point at distance exactly `r` from the component (the nearest
    /// member being a canonical one), in a random direction.
    pub fn point_at_distance(&self, r: f64, rng: &mut RngStream) -> ParamVector {
        match &self.descriptor {
            Descriptor::Point { at } => {
                let mut dir = ParamVector::zeros(at.dim());
                loop {
                    for x in dir.as_mut_slice() {
                        *x = rng.standard_normal();
                    }
                    let n = dir.norm();
                    if n > 1e-12 {
                        let mut p = at.clone();
                        p.axpy(r / n, &dir);
                        return p;
                    }
                }
            }
            Descriptor::PeriodicLattice { anchor, .. } => {
                let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                ParamVector::scalar(anchor + sign * r)
            }
            Descriptor::Interval { lo, hi } => {
                if rng.uniform() < 0.5 {
                    ParamVector::scalar(lo - r)
                } else {
                    ParamVector::scalar(hi + r)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarySetInfo {
    pub components: Vec<Component>,
    /// Box within which the metadata and constants are exact.
    pub window: Region,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    /// `½ c ‖θ‖²`
    Quad { c: f64 },
    /// `sin²(x)`
    Sin2,
    /// `cos²(x)`
    Cos2,
    /// `(x−1)(x−2)(x−3)(x−4) + shift`
    Quartic { shift: f64 },
    /// `(1/m) Σ ½‖θ − a_i‖²`, stored as its mean and constant offset.
    FiniteSumQuad {
        centers: Vec<ParamVector>,
        mean: ParamVector,
        offset: f64,
    },
    /// `½ max(|x| − 1, 0)²`: a flat valley whose stationary set is `[−1, 1]`.
    Plateau,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    id: String,
    dim: usize,
    kind: ObjectiveKind,
    metadata: StationarySetInfo,
    known_lipschitz: Option<f64>,
    known_local_pl: Option<f64>,
    infimum: f64,
}

pub const DEFAULT_WINDOW: (f64, f64) = (-10.0, 10.0);

fn default_window(dim: usize) -> Region {
    Region::cube(dim, DEFAULT_WINDOW.0, DEFAULT_WINDOW.1)
}

impl Objective {
    pub fn quad(c: f64, dim: usize) -> Result<Self, ObjectiveError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(ObjectiveError::Invalid(format!("quad curvature c must be positive, got {c}")));
        }
        if dim == 0 {
            return Err(ObjectiveError::Invalid("dimension must be at least 1".into()));
        }
        Ok(Objective {
            id: "quad".into(),
            dim,
            kind: ObjectiveKind::Quad { c },
            metadata: StationarySetInfo {
                components: vec![Component {
                    descriptor: Descriptor::Point {
                        at: ParamVector::zeros(dim),
                    },
                    value: 0.0,
                    is_minimum: true,
                }],
                window: default_window(dim),
            },
            known_lipschitz: Some(c),
            known_local_pl: Some(2.0 * c),
            infimum: 0.0,
        })
    }

    pub fn sin2() -> Self {
        Objective {
            id: "sin2".into(),
            dim: 1,
            kind: ObjectiveKind::Sin2,
            metadata: StationarySetInfo {
                components: vec![
                    Component {
                        descriptor: Descriptor::PeriodicLattice {
                            anchor: 0.0,
                            period: PI,
                        },
                        value: 0.0,
                        is_minimum: true,
                    },
                    Component {
                        descriptor: Descriptor::PeriodicLattice {
                            anchor: FRAC_PI_2,
                            period: PI,
                        },
                        value: 1.0,
                        is_minimum: false,
                    },
                ],
                window: default_window(1),
            },
            known_lipschitz: Some(2.0),
            known_local_pl: Some(4.0),
            infimum: 0.0,
        }
    }

    pub fn cos2() -> Self {
        Objective {
            id: "cos2".into(),
            dim: 1,
            kind: ObjectiveKind::Cos2,
            metadata: StationarySetInfo {
                components: vec![
                    Component {
                        descriptor: Descriptor::PeriodicLattice {
                            anchor: FRAC_PI_2,
                            period: PI,
                        },
                        value: 0.0,
                        is_minimum: true,
                    },
                    Component {
                        descriptor: Descriptor::PeriodicLattice {
                            anchor: 0.0,
                            period: PI,
                        },
                        value: 1.0,
                        is_minimum: false,
                    },
                ],
                window: default_window(1),
            },
            known_lipschitz: Some(2.0),
            known_local_pl: Some(4.0),
            infimum: 0.0,
        }
    }

    /// The quartic with roots 1..4, shifted up so its minimum value is zero.
    ///
    /// The shift is minus the smallest raw value over the critical points,
    /// which are the real roots of the cubic derivative.
    pub fn quartic() -> Self {
        let critical = quartic_critical_points();
        let raw = |x: f64| (x - 1.0) * (x - 2.0) * (x - 3.0) * (x - 4.0);
        let shift = -critical.iter().map(|&x| raw(x)).fold(f64::INFINITY, f64::min);
        let curvature = |x: f64| (12.0 * x - 60.0) * x + 70.0;
        let window = default_window(1);
        let components = critical
            .iter()
            .map(|&x| Component {
                descriptor: Descriptor::Point {
                    at: ParamVector::scalar(x),
                },
                value: raw(x) + shift,
                is_minimum: curvature(x) > 0.0,
            })
            .collect();
        // g'' is a convex parabola (vertex at 2.5); on an interval its
        // largest magnitude sits at an endpoint or the vertex.
        let lipschitz = [window.lower[0], window.upper[0], 2.5]
            .iter()
            .map(|&x| curvature(x).abs())
            .fold(0.0, f64::max);
        let local_pl = critical
            .iter()
            .map(|&x| 2.0 * curvature(x).abs())
            .fold(f64::INFINITY, f64::min);
        Objective {
            id: "quartic".into(),
            dim: 1,
            kind: ObjectiveKind::Quartic { shift },
            metadata: StationarySetInfo { components, window },
            known_lipschitz: Some(lipschitz),
            known_local_pl: Some(local_pl),
            infimum: 0.0,
        }
    }

    pub fn finite_sum_quad(centers: Vec<ParamVector>) -> Result<Self, ObjectiveError> {
        let m = centers.len();
        if m == 0 {
            return Err(ObjectiveError::Invalid("finite_sum_quad needs at least one center".into()));
        }
        let dim = centers[0].dim();
        if dim == 0 || centers.iter().any(|c| c.dim() != dim || !c.is_finite()) {
            return Err(ObjectiveError::Invalid(
                "finite_sum_quad centers must be finite and share one nonzero dimension".into(),
            ));
        }
        let mut mean = ParamVector::zeros(dim);
        for c in &centers {
            mean.axpy(1.0 / m as f64, c);
        }
        let offset = 0.5 * centers.iter().map(|c| c.distance(&mean).powi(2)).sum::<f64>() / m as f64;
        let mut window = default_window(dim);
        // Keep the centers inside the window.
        for c in &centers {
            for (j, x) in c.iter().enumerate() {
                window.lower[j] = window.lower[j].min(x - 10.0);
                window.upper[j] = window.upper[j].max(x + 10.0);
            }
        }
        Ok(Objective {
            id: "finite_sum_quad".into(),
            dim,
            metadata: StationarySetInfo {
                components: vec![Component {
                    descriptor: Descriptor::Point { at: mean.clone() },
                    value: offset,
                    is_minimum: true,
                }],
                window,
            },
            kind: ObjectiveKind::FiniteSumQuad {
                centers,
                mean,
                offset,
            },
            known_lipschitz: Some(1.0),
            known_local_pl: Some(2.0),
            infimum: offset,
        })
    }

    /// Centers at all `2^dim` vertices of `{−1, 1}^dim`, so a uniformly
    /// sampled component has independent ±1 noise in every coordinate.
    pub fn finite_sum_quad_hypercube(dim: usize) -> Result<Self, ObjectiveError> {
        if dim == 0 || dim > 16 {
            return Err(ObjectiveError::Invalid(format!("hypercube dimension must be in 1..=16, got {dim}")));
        }
        let centers = (0..1usize << dim)
            .map(|mask| {
                ParamVector::new(
                    (0..dim)
                        .map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 })
                        .collect(),
                )
            })
            .collect();
        Self::finite_sum_quad(centers)
    }

    pub fn plateau() -> Self {
        Objective {
            id: "plateau".into(),
            dim: 1,
            kind: ObjectiveKind::Plateau,
            metadata: StationarySetInfo {
                components: vec![Component {
                    descriptor: Descriptor::Interval { lo: -1.0, hi: 1.0 },
                    value: 0.0,
                    is_minimum: true,
                }],
                window: default_window(1),
            },
            known_lipschitz: Some(1.0),
            known_local_pl: Some(2.0),
            infimum: 0.0,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn metadata(&self) -> &StationarySetInfo {
        &self.metadata
    }

    pub fn window(&self) -> &Region {
        &self.metadata.window
    }

    pub fn known_lipschitz(&self) -> Option<f64> {
        self.known_lipschitz
    }

    pub fn known_local_pl(&self) -> Option<f64> {
        self.known_local_pl
    }

    /// `g* = inf g`.
    pub fn infimum(&self) -> f64 {
        self.infimum
    }

    pub fn eval(&self, theta: &ParamVector) -> f64 {
        match &self.kind {
            ObjectiveKind::Quad { c } => 0.5 * c * theta.norm_sq(),
            ObjectiveKind::Sin2 => {
                let s = theta[0].sin();
                s * s
            }
            ObjectiveKind::Cos2 => {
                let c = theta[0].cos();
                c * c
            }
            ObjectiveKind::Quartic { shift } => {
                let x = theta[0];
                (x - 1.0) * (x - 2.0) * (x - 3.0) * (x - 4.0) + shift
            }
            ObjectiveKind::FiniteSumQuad { mean, offset, .. } => {
                0.5 * theta.distance(mean).powi(2) + offset
            }
            ObjectiveKind::Plateau => {
                let e = (theta[0].abs() - 1.0).max(0.0);
                0.5 * e * e
            }
        }
    }

    /// Writes `∇g(θ)` into `out`.
    pub fn grad_into(&self, theta: &ParamVector, out: &mut ParamVector) {
        match &self.kind {
            ObjectiveKind::Quad { c } => {
                for (o, x) in out.as_mut_slice().iter_mut().zip(theta.iter()) {
                    *o = c * x;
                }
            }
            ObjectiveKind::Sin2 => out[0] = (2.0 * theta[0]).sin(),
            ObjectiveKind::Cos2 => out[0] = -(2.0 * theta[0]).sin(),
            ObjectiveKind::Quartic { .. } => {
                let x = theta[0];
                out[0] = ((4.0 * x - 30.0) * x + 70.0) * x - 50.0;
            }
            ObjectiveKind::FiniteSumQuad { mean, .. } => {
                for ((o, x), m) in out.as_mut_slice().iter_mut().zip(theta.iter()).zip(mean.iter()) {
                    *o = x - m;
                }
            }
            ObjectiveKind::Plateau => {
                let x = theta[0];
                out[0] = x.signum() * (x.abs() - 1.0).max(0.0);
            }
        }
    }

    pub fn grad(&self, theta: &ParamVector) -> ParamVector {
        let mut out = ParamVector::zeros(self.dim);
        self.grad_into(theta, &mut out);
        out
    }

    /// Number of summands when the objective is a finite sum.
    pub fn finite_sum_len(&self) -> Option<usize> {
        match &self.kind {
            ObjectiveKind::FiniteSumQuad { centers, .. } => Some(centers.len()),
            _ => None,
        }
    }

    /// Writes `∇g_i(θ) = θ − a_i` for summand `i` of a finite-sum objective.
    pub fn component_grad_into(&self, i: usize, theta: &ParamVector, out: &mut ParamVector) {
        match &self.kind {
            ObjectiveKind::FiniteSumQuad { centers, .. } => {
                for ((o, x), a) in out.as_mut_slice().iter_mut().zip(theta.iter()).zip(centers[i].iter()) {
                    *o = x - a;
                }
            }
            _ => panic!("objective `{}` is not a finite sum", self.id),
        }
    }

    fn check_dim(&self, theta: &ParamVector) -> Result<(), ObjectiveError> {
        if theta.dim() != self.dim {
            return Err(ObjectiveError::Dimension {
                id: self.id.clone(),
                expected: self.dim,
                got: theta.dim(),
            });
        }
        Ok(())
    }

    fn check_window(&self, theta: &ParamVector) -> Result<(), ObjectiveError> {
        self.check_dim(theta)?;
        if !self.metadata.window.contains(theta) {
            return Err(ObjectiveError::OutsideWindow(self.id.clone()));
        }
        Ok(())
    }

    /// Nearest component and its distance, ignoring the window. Ties go to
    /// the smaller index.
    pub fn nearest_component_unchecked(&self, theta: &ParamVector) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.metadata.components.iter().enumerate() {
            let d = c.distance(theta);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    pub fn nearest_component(&self, theta: &ParamVector) -> Result<(usize, f64), ObjectiveError> {
        self.check_window(theta)?;
        Ok(self.nearest_component_unchecked(theta))
    }

    /// `d(θ, J)` without the window check; the closed forms are exact everywhere.
    pub fn distance_unchecked(&self, theta: &ParamVector) -> f64 {
        self.nearest_component_unchecked(theta).1
    }

    pub fn component(&self, index: usize) -> Result<&Component, ObjectiveError> {
        self.metadata
            .components
            .get(index)
            .ok_or_else(|| ObjectiveError::UnknownComponent {
                id: self.id.clone(),
                index,
            })
    }
}

/// The benchmark catalog with default parameters.
pub fn catalog() -> Vec<Objective> {
    vec![
        Objective::quad(1.0, 1).expect("valid"),
        Objective::sin2(),
        Objective::cos2(),
        Objective::quartic(),
        Objective::finite_sum_quad(vec![ParamVector::scalar(-1.0), ParamVector::scalar(1.0)])
            .expect("valid"),
        Objective::plateau(),
    ]
}

/// `d(θ, J)`, the exact distance to the stationary set.
pub fn distance_to_stationary_set(obj: &Objective, theta: &ParamVector) -> Result<f64, ObjectiveError> {
    Ok(obj.nearest_component(theta)?.1)
}

/// `‖∇g(θ)‖² / (g(θ) − g_i)` for the component `i` nearest to `θ`.
///
/// The sign is kept, so the ratio is negative near maxima.
pub fn local_pl_ratio(obj: &Objective, theta: &ParamVector) -> Result<f64, ObjectiveError> {
    let (i, d) = obj.nearest_component(theta)?;
    let gap = obj.eval(theta) - obj.metadata.components[i].value;
    if d == 0.0 || gap == 0.0 {
        return Err(ObjectiveError::OnComponent(i));
    }
    Ok(obj.grad(theta).norm_sq() / gap)
}

/// Max over points and coordinates of `|central difference − analytic| / (1 + |analytic|)`.
pub fn gradient_check(obj: &Objective, points: &[ParamVector], h: f64) -> f64 {
    gradient_check_with(|x| obj.eval(x), |x| obj.grad(x), points, h)
}

/// [`gradient_check`] for an arbitrary value/gradient pair.
pub fn gradient_check_with<F, G>(f: F, grad: G, points: &[ParamVector], h: f64) -> f64
where
    F: Fn(&ParamVector) -> f64,
    G: Fn(&ParamVector) -> ParamVector,
{
    assert!((1e-8..=1e-3).contains(&h), "step h must lie in [1e-8, 1e-3]");
    let mut worst: f64 = 0.0;
    for p in points {
        let analytic = grad(p);
        let mut probe = p.clone();
        for j in 0..p.dim() {
            probe[j] = p[j] + h;
            let up = f(&probe);
            probe[j] = p[j] - h;
            let down = f(&probe);
            probe[j] = p[j];
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max((numeric - analytic[j]).abs() / (1.0 + analytic[j].abs()));
        }
    }
    worst
}

/// Real roots of `4x³ − 30x² + 70x − 50`, the quartic's derivative, ascending.
fn quartic_critical_points() -> Vec<f64> {
    cubic_real_roots(4.0, -30.0, 70.0, -50.0)
}

/// Real roots of `a x³ + b x² + c x + d` (`a ≠ 0`) in ascending order, via
/// the depressed cubic and the trigonometric/Cardano closed forms.
pub fn cubic_real_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let (b, c, d) = (b / a, c / a, d / a);
    let shift = b / 3.0;
    // x = t − b/3 gives t³ + p t + q = 0.
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if p.abs() < 1e-14 && q.abs() < 1e-14 {
        vec![0.0]
    } else if disc < 0.0 {
        let r = 2.0 * (-p / 3.0).sqrt();
        let phi = ((3.0 * q) / (p * r)).clamp(-1.0, 1.0).acos() / 3.0;
        (0..3)
            .map(|k| r * (phi - 2.0 * PI * k as f64 / 3.0).cos())
            .collect()
    } else {
        let sq = disc.sqrt();
        vec![(-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt()]
    };
    for t in roots.iter_mut() {
        *t -= shift;
    }
    roots.sort_by(f64::total_cmp);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_substream;

    fn uniform_points(obj: &Objective, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<ParamVector> {
        let mut rng = rng_substream(seed, 0);
        (0..count)
            .map(|_| ParamVector::new((0..obj.dim()).map(|_| rng.uniform_in(lo, hi)).collect()))
            .collect()
    }

    #[test]
    fn quad_values() {
        let q = Objective::quad(1.0, 1).unwrap();
        let t = ParamVector::scalar(2.0);
        assert_eq!(q.eval(&t), 2.0);
        assert_eq!(q.grad(&t)[0], 2.0);
    }

    #[test]
    fn sin2_values() {
        let s = Objective::sin2();
        let t = ParamVector::scalar(FRAC_PI_2);
        assert!((s.eval(&t) - 1.0).abs() < 1e-15);
        assert!(s.grad(&t)[0].abs() < 1e-15);
        assert_eq!(s.eval(&ParamVector::scalar(0.0)), 0.0);
        assert_eq!(s.grad(&ParamVector::scalar(0.0))[0], 0.0);
    }

    #[test]
    fn distances() {
        let s = Objective::sin2();
        let d = distance_to_stationary_set(&s, &ParamVector::scalar(0.3)).unwrap();
        assert!((d - 0.3).abs() < 1e-15);
        assert!(distance_to_stationary_set(&s, &ParamVector::scalar(FRAC_PI_2)).unwrap() < 1e-15);
        let q = Objective::quad(1.0, 1).unwrap();
        assert_eq!(distance_to_stationary_set(&q, &ParamVector::scalar(0.0)).unwrap(), 0.0);
        assert!(matches!(
            distance_to_stationary_set(&q, &ParamVector::scalar(10.5)),
            Err(ObjectiveError::OutsideWindow(_))
        ));
        let p = Objective::plateau();
        assert_eq!(distance_to_stationary_set(&p, &ParamVector::scalar(0.4)).unwrap(), 0.0);
        assert!((distance_to_stationary_set(&p, &ParamVector::scalar(-1.25)).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn nearest_component_tie_breaks_to_smaller_index() {
        // π/4 is equidistant from 0 (component 0) and π/2 (component 1).
        let s = Objective::sin2();
        let (i, _) = s.nearest_component(&ParamVector::scalar(std::f64::consts::FRAC_PI_4)).unwrap();
        assert_eq!(i, 0);
    }

    #[test]
    fn pl_ratio_examples() {
        let q = Objective::quad(1.0, 1).unwrap();
        assert!((local_pl_ratio(&q, &ParamVector::scalar(0.1)).unwrap() - 2.0).abs() < 1e-12);
        let s = local_pl_ratio(&Objective::sin2(), &ParamVector::scalar(0.01)).unwrap();
        assert!((s - 4.0).abs() < 1e-3);
        let c = local_pl_ratio(&Objective::cos2(), &ParamVector::scalar(FRAC_PI_2 + 0.01)).unwrap();
        assert!((c - 4.0).abs() < 1e-3);
        assert_eq!(
            local_pl_ratio(&q, &ParamVector::scalar(0.0)),
            Err(ObjectiveError::OnComponent(0))
        );
    }

    #[test]
    fn gradient_check_examples() {
        let q = Objective::quad(1.0, 1).unwrap();
        let pts = uniform_points(&q, 100, -5.0, 5.0, 1);
        assert!(gradient_check(&q, &pts, 1e-5) < 1e-8);
        let s = Objective::sin2();
        assert!(gradient_check(&s, &uniform_points(&s, 100, -5.0, 5.0, 2), 1e-5) < 1e-6);
        let zero_field = gradient_check_with(|x| q.eval(x), |x| ParamVector::zeros(x.dim()), &[ParamVector::scalar(1.0)], 1e-5);
        assert!(zero_field > 0.1);
    }

    #[test]
    fn every_catalog_gradient_matches_finite_differences() {
        for obj in catalog().into_iter().chain([
            Objective::quad(3.0, 3).unwrap(),
            Objective::finite_sum_quad_hypercube(3).unwrap(),
        ]) {
            let pts = uniform_points(&obj, 100, -5.0, 5.0, 3);
            let err = gradient_check(&obj, &pts, 1e-6);
            assert!(err < 1e-6, "{}: {err}", obj.id());
        }
    }

    // Independent oracle: Newton iteration on the derivative from brackets
    // around each sign change, then the raw value at the minima.
    fn quartic_shift_by_newton() -> f64 {
        let dg = |x: f64| 4.0 * x.powi(3) - 30.0 * x.powi(2) + 70.0 * x - 50.0;
        let d2g = |x: f64| 12.0 * x.powi(2) - 60.0 * x + 70.0;
        let raw = |x: f64| (x - 1.0) * (x - 2.0) * (x - 3.0) * (x - 4.0);
        let mut best = f64::INFINITY;
        for start in [1.0, 2.5, 4.0] {
            let mut x: f64 = start;
            for _ in 0..100 {
                x -= dg(x) / d2g(x);
            }
            best = best.min(raw(x));
        }
        -best
    }

    #[test]
    fn quartic_shift_matches_newton_oracle() {
        let q = Objective::quartic();
        let ObjectiveKind::Quartic { shift } = q.kind() else { unreachable!() };
        assert!((shift - quartic_shift_by_newton()).abs() < 1e-12);
        // Minimum value is within 1e-9 of zero.
        let mins: Vec<_> = q.metadata().components.iter().filter(|c| c.is_minimum).collect();
        assert_eq!(mins.len(), 2);
        for c in mins {
            assert!(c.value.abs() < 1e-9);
        }
        assert_eq!(q.known_lipschitz(), Some(1870.0));
        assert!((q.known_local_pl().unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn cubic_roots_of_known_polynomials() {
        let r = cubic_real_roots(1.0, -6.0, 11.0, -6.0);
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let single = cubic_real_roots(1.0, 0.0, 0.0, -8.0);
        assert_eq!(single.len(), 1);
        assert!((single[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nonnegative_on_window() {
        for obj in catalog() {
            let w = obj.window().clone();
            let mut rng = rng_substream(11, 0);
            for _ in 0..10_000 {
                let p = ParamVector::new((0..obj.dim()).map(|j| rng.uniform_in(w.lower[j], w.upper[j])).collect());
                assert!(obj.eval(&p) >= -1e-12, "{} at {:?}", obj.id(), p);
            }
        }
    }

    #[test]
    fn stationary_metadata_is_exact() {
        for obj in catalog() {
            let mut rng = rng_substream(12, 0);
            for c in &obj.metadata().components {
                for _ in 0..1000 {
                    let p = c.sample_member(obj.window(), &mut rng).unwrap();
                    assert!(obj.grad(&p).norm() < 1e-8, "{} grad at {:?}", obj.id(), p);
                    assert!((obj.eval(&p) - c.value).abs() < 1e-12, "{} value at {:?}", obj.id(), p);
                }
            }
        }
    }

    #[test]
    fn lipschitz_and_descent_bounds_hold_on_window() {
        for obj in catalog() {
            let c = obj.known_lipschitz().unwrap();
            let w = obj.window().clone();
            let mut rng = rng_substream(13, 0);
            for _ in 0..20_000 {
                let x = ParamVector::new((0..obj.dim()).map(|j| rng.uniform_in(w.lower[j], w.upper[j])).collect());
                let mut y = x.clone();
                for j in 0..obj.dim() {
                    y[j] = (x[j] + rng.uniform_in(-0.5, 0.5)).clamp(w.lower[j], w.upper[j]);
                }
                let sep = x.distance(&y);
                if sep > 1e-6 {
                    let q = obj.grad(&x).distance(&obj.grad(&y)) / sep;
                    assert!(q <= c + 1e-6, "{}: quotient {q} > {c}", obj.id());
                }
                let gs = obj.grad(&x).norm_sq();
                let bound = 2.0 * c * (obj.eval(&x) - obj.infimum());
                assert!(gs <= bound + 1e-9, "{}: {gs} > {bound} at {:?}", obj.id(), x);
            }
        }
    }

    #[test]
    fn near_component_gradient_bound() {
        for obj in catalog() {
            let c = obj.known_lipschitz().unwrap();
            let mut rng = rng_substream(14, 0);
            for comp in &obj.metadata().components {
                for _ in 0..2000 {
                    let r = rng.uniform_in(0.0, 0.1);
                    let p = comp.point_at_distance(r, &mut rng);
                    let lhs = obj.grad(&p).norm_sq();
                    let rhs = 2.0 * c * (obj.eval(&p) - comp.value).abs();
                    assert!(lhs <= rhs + 1e-9, "{}: {lhs} > {rhs}", obj.id());
                }
            }
        }
    }
}
