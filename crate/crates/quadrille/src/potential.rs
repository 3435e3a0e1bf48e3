//! Radial pair potentials and their squared-variable representation.
//!
//! A potential is stored as a piecewise description of `W(s) = V(√s)` in the
//! squared-distance variable `s = r²`: closed-form segments (power core,
//! shifted parabola, flat floor, inverse-power tail, polynomial, squared
//! radial offset) separated by knots, plus a hard-core radius below which the
//! potential is infeasible (`V = +∞`). Working in `s` keeps every segment a
//! rational expression and makes one-sided derivatives at knots exact.
//!
//! The module provides:
//!
//! * constructors: [`hard_well`] (hard core, flat well, zero beyond),
//!   [`plateau_well`] (steep power core, parabolic walls, flat floor between
//!   `floor_start` and `floor_end`, truncated or inverse-power tail, fitted
//!   `C¹` and normalized to depth −1), and [`quintic_well`] (a polynomial
//!   well with prescribed value/slope/curvature data, for spectrum
//!   experiments);
//! * evaluation with value, first derivative, and both one-sided second
//!   derivatives, in `r` or in `s`;
//! * [`check_conditions`]: the quantitative one-well checklist
//!   (normalized depth, well convexity and curvature floor, square
//!   criticality and stability, well ceiling, outside shallowness, core
//!   repulsion, and finite-range / decaying-tail behaviour), each reported
//!   with a numeric margin and the method used;
//! * [`separation_threshold`]: the explicit repulsion strength that forces
//!   minimizers to keep pairwise distances above `1 − α`;
//! * [`resum`]: lattice resummation of the tail onto the fundamental well
//!   (the scale-set series), returning a new potential, with certified
//!   truncation bounds.

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use thiserror::Error;

use crate::lattice;

/// Upper limit for the deformation tolerances: `(2 − √2)/4`.
pub const DEFORMATION_LIMIT: f64 = (2.0 - SQRT_2) / 4.0;

/// Errors arising from potential construction and evaluation.
#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("radius must be positive (got {0})")]
    NonPositiveRadius(f64),
    #[error("well cutoff must be at least 1 (got {0})")]
    CutoffBelowOne(f64),
    #[error(
        "deformation tolerances must satisfy 0 < fine < mid < coarse < (2−√2)/4 ≈ 0.1464; \
         got fine={fine}, mid={mid}, coarse={coarse}"
    )]
    BadDeformationParams { fine: f64, mid: f64, coarse: f64 },
    #[error(
        "core exponent {got} is too soft for a positive-coefficient wall fit; \
         it must exceed {min_exponent}"
    )]
    CoreTooSoft { got: f64, min_exponent: f64 },
    #[error("tail exponent must exceed 4 for convergent lattice sums (got {0})")]
    TailTooFat(f64),
    #[error("knots must be strictly increasing and positive")]
    UnsortedKnots,
    #[error("expected one segment more than knots (got {segments} segments, {knots} knots)")]
    SegmentMismatch { segments: usize, knots: usize },
    #[error("invalid potential parameters: {0}")]
    Invalid(String),
    #[error("hard wells carry no derivative data")]
    NotDifferentiable,
    #[error("evaluation hit the hard core where a finite value was required (r = {0})")]
    UnexpectedInfeasible(f64),
}

/// The three deformation tolerances `0 < fine < mid < coarse < (2−√2)/4`
/// used throughout the laboratory: `fine` for the tight well ceiling,
/// `mid` for bond windows and minimum-distance arguments, `coarse` for
/// chart-level rigidity and the outer reach of the well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationParams {
    /// Tightest tolerance (well-ceiling window half-width).
    pub alpha_prime: f64,
    /// Working tolerance (bond window, minimum distance `1 − α`).
    pub alpha: f64,
    /// Coarsest tolerance (outer reach `√2 + α″`, chart rigidity).
    pub alpha_pp: f64,
}

impl Default for DeformationParams {
    /// Reference triple used by the committed well fixtures.
    fn default() -> Self {
        DeformationParams { alpha_prime: 3e-4, alpha: 0.045, alpha_pp: 0.05 }
    }
}

impl DeformationParams {
    /// Checks the strict ordering chain required by every downstream bound.
    pub fn validate(&self) -> Result<(), PotentialError> {
        let ok = 0.0 < self.alpha_prime
            && self.alpha_prime < self.alpha
            && self.alpha < self.alpha_pp
            && self.alpha_pp < DEFORMATION_LIMIT;
        if ok {
            Ok(())
        } else {
            Err(PotentialError::BadDeformationParams {
                fine: self.alpha_prime,
                mid: self.alpha,
                coarse: self.alpha_pp,
            })
        }
    }

    /// Outer reach of the well: `√2 + α″`. Beyond this radius a
    /// finite-range potential vanishes and a decaying tail is envelope-bounded.
    pub fn reach(&self) -> f64 {
        SQRT_2 + self.alpha_pp
    }
}

/// Tail classification of a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Range {
    /// `V ≡ 0` for `r ≥ cutoff`.
    Finite { cutoff: f64 },
    /// `|V(r)|, r|V′(r)|, r²|V″(r)| ≤ epsilon·r^(−exponent)` for `r ≥ √2 + α″`.
    Decaying { epsilon: f64, exponent: f64 },
}

/// A closed-form piece of `W(s)` on one knot interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Segment {
    /// `a·s^(−q/2)` — repulsive power core.
    PowerCore { a: f64, q: f64 },
    /// `c + a·(s − s_ref)²` — parabolic wall anchored at `s_ref`.
    Parabola { c: f64, a: f64, s_ref: f64 },
    /// Constant `c` — flat floor.
    Flat { c: f64 },
    /// `a·(s − s_ref)^(−p/2)` — inverse-power tail (requires `s > s_ref`).
    PowerTail { a: f64, p: f64, s_ref: f64 },
    /// `Σ_k coeffs[k]·(s − center)^k` — polynomial piece.
    Poly { center: f64, coeffs: Vec<f64> },
    /// `a·(√s − r_ref)²` — squared radial offset (exact in `r = √s`).
    SqrtShiftSquared { a: f64, r_ref: f64 },
}

impl Segment {
    /// Value, first, and second derivative of the piece at `s > 0`,
    /// all with respect to the squared variable.
    fn eval(&self, s: f64) -> (f64, f64, f64) {
        match *self {
            Segment::PowerCore { a, q } => {
                let w = a * s.powf(-q / 2.0);
                let w1 = -(q / 2.0) * w / s;
                let w2 = (q / 2.0) * (q / 2.0 + 1.0) * w / (s * s);
                (w, w1, w2)
            }
            Segment::Parabola { c, a, s_ref } => {
                let d = s - s_ref;
                (c + a * d * d, 2.0 * a * d, 2.0 * a)
            }
            Segment::Flat { c } => (c, 0.0, 0.0),
            Segment::PowerTail { a, p, s_ref } => {
                let u = s - s_ref;
                let w = a * u.powf(-p / 2.0);
                let w1 = -(p / 2.0) * w / u;
                let w2 = (p / 2.0) * (p / 2.0 + 1.0) * w / (u * u);
                (w, w1, w2)
            }
            Segment::Poly { center, ref coeffs } => {
                let u = s - center;
                let (mut w, mut w1, mut w2) = (0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    w2 = w2 * u + 2.0 * w1;
                    w1 = w1 * u + w;
                    w = w * u + c;
                }
                (w, w1, w2)
            }
            Segment::SqrtShiftSquared { a, r_ref } => {
                let r = s.sqrt();
                let w = a * (r - r_ref) * (r - r_ref);
                let w1 = a * (1.0 - r_ref / r);
                let w2 = a * r_ref / (2.0 * r * r * r);
                (w, w1, w2)
            }
        }
    }

    /// Interior stationary points of the piece inside `(lo, hi)`, used by the
    /// condition scans on top of the dense grid.
    fn stationary_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        match *self {
            Segment::Parabola { s_ref, .. } if lo < s_ref && s_ref < hi => vec![s_ref],
            Segment::SqrtShiftSquared { r_ref, .. } if lo < r_ref * r_ref && r_ref * r_ref < hi => {
                vec![r_ref * r_ref]
            }
            _ => Vec::new(),
        }
    }
}

/// Family tag of a potential (kept explicit in the serialized form).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    HardWell,
    PiecewiseSmooth,
}

/// One-sided limits of a derivative at a point (`left` = from below).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sided {
    pub left: f64,
    pub right: f64,
}

impl Sided {
    /// Average of the two one-sided limits (equals either at smooth points).
    pub fn mean(&self) -> f64 {
        0.5 * (self.left + self.right)
    }

    /// Size of the jump between the one-sided limits.
    pub fn jump(&self) -> f64 {
        (self.right - self.left).abs()
    }
}

/// Value and derivative data of `V` (or `W`) at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointData {
    pub value: f64,
    pub slope: Sided,
    pub curvature: Sided,
}

/// Result of evaluating a potential at a radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eval {
    /// Inside the hard core; treated as `+∞` by comparisons, never arithmetic.
    Infeasible,
    Finite(PointData),
}

impl Eval {
    /// The finite data, or an error if the point is inside the hard core.
    pub fn finite(self, r: f64) -> Result<PointData, PotentialError> {
        match self {
            Eval::Infeasible => Err(PotentialError::UnexpectedInfeasible(r)),
            Eval::Finite(d) => Ok(d),
        }
    }
}

/// A radial pair potential, stored in the squared variable.
///
/// `segments[i]` applies on `(knots[i−1], knots[i]]` (with `knots[−1] = 0`
/// and `knots[len] = ∞`); values at a knot use the left segment, and both
/// one-sided derivative limits are reported. `hard_core_radius` is the
/// radius **below** which the potential is infeasible; the boundary itself
/// is feasible (the well is closed on the left).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub kind: Kind,
    pub knots: Vec<f64>,
    pub segments: Vec<Segment>,
    pub hard_core_radius: f64,
    pub range: Range,
    pub params: DeformationParams,
}

impl Potential {
    /// Validates the structural invariants (knot ordering, segment count,
    /// tolerance chain). Builders call this; deserialized data should too.
    pub fn validate(&self) -> Result<(), PotentialError> {
        if self.segments.len() != self.knots.len() + 1 {
            return Err(PotentialError::SegmentMismatch {
                segments: self.segments.len(),
                knots: self.knots.len(),
            });
        }
        if self.knots.iter().any(|k| !k.is_finite() || *k <= 0.0)
            || self.knots.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(PotentialError::UnsortedKnots);
        }
        if !(self.hard_core_radius >= 0.0) {
            return Err(PotentialError::Invalid("negative hard-core radius".into()));
        }
        self.params.validate()
    }

    /// Evaluates `W` and its one-sided derivatives at squared distance `s`.
    pub fn evaluate_squared(&self, s: f64) -> Result<Eval, PotentialError> {
        if !(s > 0.0) {
            return Err(PotentialError::NonPositiveRadius(s));
        }
        let core = self.hard_core_radius * self.hard_core_radius;
        if s < core {
            return Ok(Eval::Infeasible);
        }
        let idx = self.knots.partition_point(|k| *k < s);
        let (value, l1, l2) = {
            let (w, w1, w2) = self.segments[idx].eval(s);
            (w, w1, w2)
        };
        let (r1, r2) = if idx < self.knots.len() && s == self.knots[idx] {
            let (_, a, b) = self.segments[idx + 1].eval(s);
            (a, b)
        } else {
            (l1, l2)
        };
        Ok(Eval::Finite(PointData {
            value,
            slope: Sided { left: l1, right: r1 },
            curvature: Sided { left: l2, right: r2 },
        }))
    }

    /// Evaluates `V` and its one-sided derivatives at radius `r > 0`.
    ///
    /// Derivatives convert from the squared variable by `V′(r) = 2r·W′(s)`
    /// and `V″(r) = 2W′(s) + 4s·W″(s)` with `s = r²`; since `s` is increasing
    /// in `r`, one-sided limits convert side-by-side.
    pub fn evaluate(&self, r: f64) -> Result<Eval, PotentialError> {
        if !(r > 0.0) {
            return Err(PotentialError::NonPositiveRadius(r));
        }
        let s = r * r;
        Ok(match self.evaluate_squared(s)? {
            Eval::Infeasible => Eval::Infeasible,
            Eval::Finite(w) => Eval::Finite(PointData {
                value: w.value,
                slope: Sided { left: 2.0 * r * w.slope.left, right: 2.0 * r * w.slope.right },
                curvature: Sided {
                    left: 2.0 * w.slope.left + 4.0 * s * w.curvature.left,
                    right: 2.0 * w.slope.right + 4.0 * s * w.curvature.right,
                },
            }),
        })
    }

    /// `V(r)`, or `None` inside the hard core. Assumes `r > 0`.
    pub fn value(&self, r: f64) -> Option<f64> {
        debug_assert!(r > 0.0);
        match self.evaluate(r).expect("positive radius") {
            Eval::Infeasible => None,
            Eval::Finite(d) => Some(d.value),
        }
    }

    /// `V′(r)` (mean of the one-sided limits), or `None` inside the hard core.
    pub fn slope(&self, r: f64) -> Option<f64> {
        debug_assert!(r > 0.0);
        match self.evaluate(r).expect("positive radius") {
            Eval::Infeasible => None,
            Eval::Finite(d) => Some(d.slope.mean()),
        }
    }

    /// Whether the potential has any hard core at all.
    pub fn has_hard_core(&self) -> bool {
        self.hard_core_radius > 0.0
    }

    /// Squared radius beyond which `W` is identically zero, when the range
    /// is finite.
    pub fn support_end_squared(&self) -> Option<f64> {
        match self.range {
            Range::Finite { cutoff } => Some(cutoff * cutoff),
            Range::Decaying { .. } => None,
        }
    }

    /// Envelope `|W(s)| ≤ amplitude·(s − pole)^(−exponent/2)` valid for
    /// `s ≥ start`, extracted from a trailing inverse-power segment.
    /// Derivatives obey the matching differentiated envelopes.
    pub fn tail_envelope(&self) -> Option<TailEnvelope> {
        match (self.segments.last()?, self.knots.last()) {
            (&Segment::PowerTail { a, p, s_ref }, Some(&start)) => Some(TailEnvelope {
                amplitude: a.abs(),
                exponent: p,
                pole: s_ref,
                start,
            }),
            _ => None,
        }
    }
}

/// Certified decay envelope of a potential's tail in the squared variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEnvelope {
    pub amplitude: f64,
    pub exponent: f64,
    pub pole: f64,
    pub start: f64,
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

/// The hard-core square-well potential: infeasible below 1, −1 on
/// `[1, r_max]`, 0 beyond. With `r_max = √2` its minimizers crystallize onto
/// the unit square lattice.
pub fn hard_well(r_max: f64) -> Result<Potential, PotentialError> {
    if !(r_max >= 1.0) {
        return Err(PotentialError::CutoffBelowOne(r_max));
    }
    let pot = Potential {
        kind: Kind::HardWell,
        knots: vec![r_max * r_max],
        segments: vec![Segment::Flat { c: -1.0 }, Segment::Flat { c: 0.0 }],
        hard_core_radius: 1.0,
        range: Range::Finite { cutoff: r_max },
        params: DeformationParams::default(),
    };
    pot.validate()?;
    Ok(pot)
}

/// Tail variant for [`plateau_well`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlateauTail {
    /// The outer wall rises to exactly zero at `√2 + α″`; the potential
    /// vanishes beyond (finite range, value-continuous, slope jump at the
    /// cutoff).
    Truncated,
    /// An inverse-power tail `a·(s − pole)^(−exponent/2)` (pole in the
    /// squared variable) glued with matching value and slope at `√2 + α″`;
    /// `exponent > 4` required.
    Decaying { pole: f64, exponent: f64 },
}

/// Parameters of the plateau well: a steep power core, an inner parabolic
/// wall, a flat floor at depth −1 between `floor_start` and `floor_end`, an
/// outer parabolic wall, and the chosen tail.
///
/// The floor edges live in the **squared** variable so that the two critical
/// squared distances 1 and 2 of the unit square are hit exactly (the radius
/// √2 is not representable, its square is).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauParams {
    /// Exponent `q` of the repulsive core `a·s^(−q/2)`; must exceed
    /// `4·(1−α″)²/(floor_start − (1−α″)²)` for a positive-coefficient fit.
    pub core_exponent: f64,
    /// Left edge of the flat floor, squared variable, in `[1, 2]`.
    pub floor_start: f64,
    /// Right edge of the flat floor, squared variable, in `[floor_start, 2]`.
    pub floor_end: f64,
    /// Well depth before normalization (the builder renormalizes to −1).
    pub depth: f64,
    pub tail: PlateauTail,
    pub params: DeformationParams,
}

impl PlateauParams {
    /// Committed fixture with a truncated tail. Passes the full one-well
    /// checklist with the margins pinned in this module's tests; the core
    /// exponent sits just above the fit threshold so that the inner wall is
    /// steep enough for the separation bound.
    pub fn truncated_reference() -> Self {
        PlateauParams {
            core_exponent: 37.059,
            floor_start: 1.0,
            floor_end: 2.0,
            depth: 1.0,
            tail: PlateauTail::Truncated,
            params: DeformationParams::default(),
        }
    }

    /// Committed fixture with an inverse-power tail of exponent 6, used by
    /// the resummation experiments.
    pub fn decaying_reference() -> Self {
        PlateauParams {
            core_exponent: 37.059,
            floor_start: 1.0,
            floor_end: 2.0,
            depth: 1.0,
            tail: PlateauTail::Decaying { pole: 2.0, exponent: 6.0 },
            params: DeformationParams::default(),
        }
    }
}

/// Builds a plateau well, solving for the wall and tail coefficients so that
/// `W` is `C¹` at the interior knots (the truncated variant is only
/// value-continuous at the cutoff), then renormalizing so the floor sits at
/// exactly −1.
pub fn plateau_well(p: &PlateauParams) -> Result<Potential, PotentialError> {
    p.params.validate()?;
    let a_pp = p.params.alpha_pp;
    if !(1.0 <= p.floor_start && p.floor_start <= p.floor_end && p.floor_end <= 2.0) {
        return Err(PotentialError::Invalid(format!(
            "floor edges must satisfy 1 ≤ floor_start ≤ floor_end ≤ 2 (got {} and {})",
            p.floor_start, p.floor_end
        )));
    }
    if !(p.depth > 0.0) {
        return Err(PotentialError::Invalid(format!("depth must be positive (got {})", p.depth)));
    }
    let s0 = (1.0 - a_pp) * (1.0 - a_pp);
    let s1 = p.floor_start;
    let s2 = p.floor_end;
    let s3 = (SQRT_2 + a_pp) * (SQRT_2 + a_pp);
    let depth = p.depth;

    // Inner wall + core: the wall `−depth + a2·(s−s1)²` must meet the core
    // `a1·s^(−q/2)` with matching value and slope at `s0`. Eliminating `a1`
    // gives `a2 = depth·x / (Δ²·(x−1))` with `Δ = s1 − s0` and
    // `x = q·Δ/(4·s0)`, solvable with positive coefficients iff `x > 1`.
    let delta = s1 - s0;
    let x = p.core_exponent * delta / (4.0 * s0);
    if x <= 1.0 {
        return Err(PotentialError::CoreTooSoft {
            got: p.core_exponent,
            min_exponent: 4.0 * s0 / delta,
        });
    }
    let a1 = depth * s0.powf(p.core_exponent / 2.0) / (x - 1.0);
    let a2 = depth * x / (delta * delta * (x - 1.0));

    // Outer wall + tail.
    let u3 = s3 - s2;
    let (a3, tail_segment, range) = match p.tail {
        PlateauTail::Truncated => {
            // Wall reaches zero exactly at the cutoff: depth = a3·u3².
            let a3 = depth / (u3 * u3);
            (a3, Segment::Flat { c: 0.0 }, Range::Finite { cutoff: SQRT_2 + a_pp })
        }
        PlateauTail::Decaying { pole, exponent } => {
            if exponent <= 4.0 {
                return Err(PotentialError::TailTooFat(exponent));
            }
            if !(pole >= p.floor_start && pole < s3) {
                return Err(PotentialError::Invalid(format!(
                    "tail pole must lie in [floor_start, (√2+α″)²) (got {pole})"
                )));
            }
            let w3 = s3 - pole;
            // Value and slope matching at s3:
            //   −depth + a3·u3² = a4·w3^(−p/2),  2·a3·u3 = −(p/2)·a4·w3^(−p/2−1).
            let a3 = depth / (u3 * u3 + 4.0 * u3 * w3 / exponent);
            let a4 = -(4.0 * a3 * u3 / exponent) * w3.powf(exponent / 2.0 + 1.0);
            // Envelope prefactor for the decaying-tail classification: the
            // largest of the three ratios |V|, r|V′|, r²|V″| against
            // r^(−exponent), each attained at the cutoff.
            let ratio = s3 / w3;
            let half = exponent / 2.0;
            let e_value = ratio.powf(half);
            let e_slope = exponent * ratio.powf(half + 1.0);
            let e_curv = e_slope + 2.0 * exponent * (half + 1.0) * ratio.powf(half + 2.0);
            let epsilon = a4.abs() / depth * e_value.max(e_slope).max(e_curv) * 1.0001;
            (
                a3,
                Segment::PowerTail { a: a4 / depth, p: exponent, s_ref: pole },
                Range::Decaying { epsilon, exponent },
            )
        }
    };

    // Assemble, dividing every coefficient by `depth` so the floor is −1.
    let mut knots = vec![s0, s1];
    let mut segments = vec![
        Segment::PowerCore { a: a1 / depth, q: p.core_exponent },
        Segment::Parabola { c: -1.0, a: a2 / depth, s_ref: s1 },
    ];
    if s2 > s1 {
        knots.push(s2);
        segments.push(Segment::Flat { c: -1.0 });
    }
    knots.push(s3);
    segments.push(Segment::Parabola { c: -1.0, a: a3 / depth, s_ref: s2 });
    segments.push(tail_segment);

    let pot = Potential {
        kind: Kind::PiecewiseSmooth,
        knots,
        segments,
        hard_core_radius: 0.0,
        range,
        params: p.params,
    };
    pot.validate()?;
    Ok(pot)
}

/// Prescribed data for [`quintic_well`]: values, slopes, and curvatures of
/// `W` (in the squared variable) at `s = 1` and `s = 2` — the two distances
/// that control the four-point energy at the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteData {
    pub value_at_one: f64,
    pub slope_at_one: f64,
    pub curvature_at_one: f64,
    pub value_at_two: f64,
    pub slope_at_two: f64,
    pub curvature_at_two: f64,
}

/// A smooth test well: the unique quintic in `(s − 1)` matching the given
/// data at `s = 1` and `s = 2`, truncated to zero beyond `√2 + α″`.
///
/// These wells exist for spectrum and criticality experiments (they are `C²`
/// on the whole well window); they are not meant to pass the one-well
/// checklist.
pub fn quintic_well(data: &HermiteData, params: DeformationParams) -> Result<Potential, PotentialError> {
    params.validate()?;
    let c0 = data.value_at_one;
    let c1 = data.slope_at_one;
    let c2 = data.curvature_at_one / 2.0;
    // Solve for c3, c4, c5 from the data at s = 2 (u = 1):
    //   c3 +  c4 +  c5 = value − (c0+c1+c2)
    //  3c3 + 4c4 + 5c5 = slope − (c1+2c2)
    //  6c3 +12c4 +20c5 = curvature − 2c2
    let b = nalgebra::Vector3::new(
        data.value_at_two - (c0 + c1 + c2),
        data.slope_at_two - (c1 + 2.0 * c2),
        data.curvature_at_two - 2.0 * c2,
    );
    let m = nalgebra::Matrix3::new(1.0, 1.0, 1.0, 3.0, 4.0, 5.0, 6.0, 12.0, 20.0);
    let c345 = m
        .lu()
        .solve(&b)
        .ok_or_else(|| PotentialError::Invalid("singular quintic interpolation system".into()))?;
    let cutoff = params.reach();
    let pot = Potential {
        kind: Kind::PiecewiseSmooth,
        knots: vec![cutoff * cutoff],
        segments: vec![
            Segment::Poly { center: 1.0, coeffs: vec![c0, c1, c2, c345[0], c345[1], c345[2]] },
            Segment::Flat { c: 0.0 },
        ],
        hard_core_radius: 0.0,
        range: Range::Finite { cutoff },
        params,
    };
    pot.validate()?;
    Ok(pot)
}

// ---------------------------------------------------------------------------
// Condition checks
// ---------------------------------------------------------------------------

/// Thresholds for the one-well checklist. Where `None`, the threshold is
/// derived from the potential itself ([`separation_threshold`] for the core
/// floor; the stored range data for the tail budget).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionConstants {
    /// Lower bound `c` demanded of `V″` on the wall windows.
    pub curvature_floor: f64,
    /// Stability level `c′`; the five curvature combinations at the square
    /// must exceed `quad_constant · stability_floor`.
    pub stability_floor: f64,
    /// Dimensional constant multiplying `stability_floor`.
    pub quad_constant: f64,
    /// Extra depth slack `c″ ∈ [0, 1/16)` demanded of the well ceiling.
    pub ceiling_slack: f64,
    /// Repulsion threshold `K` for the core window; derived when `None`.
    pub separation_floor: Option<f64>,
    /// Tail prefactor budget; the potential's stored value when `None`.
    pub tail_prefactor: Option<f64>,
    /// Absolute tolerance for equality-type checks (criticality, depth).
    pub equality_tol: f64,
}

impl Default for ConditionConstants {
    fn default() -> Self {
        ConditionConstants {
            curvature_floor: 1.0,
            stability_floor: 1.0,
            quad_constant: 64.0,
            ceiling_slack: 0.01,
            separation_floor: None,
            tail_prefactor: None,
            equality_tol: 1e-9,
        }
    }
}

/// Outcome of a single checklist item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionStatus {
    Holds,
    Fails,
    /// The check consumes derivative data the potential does not carry
    /// (hard wells).
    NotApplicable,
}

/// One checklist verdict with its quantitative evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    /// Stable identifier, e.g. `"core_repulsion"`.
    pub id: String,
    pub status: ConditionStatus,
    /// Positive iff the condition holds; distance to the threshold.
    pub margin: f64,
    /// The measured quantity (sup, inf, or combination value).
    pub observed: f64,
    /// The threshold it is compared against.
    pub threshold: f64,
    /// Radius (or distance) witnessing the extremum, when meaningful.
    pub witness: Option<f64>,
    /// How the number was obtained (grid density, analytic points).
    pub method: String,
}

/// Full checklist report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub verdicts: Vec<ConditionVerdict>,
    /// True iff no verdict fails (not-applicable entries do not block).
    pub all_hold: bool,
}

impl ConditionReport {
    /// Looks up a verdict by identifier.
    pub fn verdict(&self, id: &str) -> Option<&ConditionVerdict> {
        self.verdicts.iter().find(|v| v.id == id)
    }
}

/// Extrema of `V` and `V″` over a closed radius window, from a dense grid
/// plus knots and analytic stationary points. Infeasible radii are skipped.
struct WindowScan {
    v_min: f64,
    v_min_at: f64,
    v_max: f64,
    v_max_at: f64,
    /// Minimum over both one-sided second derivatives; at the window ends
    /// only the inward-facing side is used (windows are open intervals).
    v2_min: f64,
    v2_min_at: f64,
    any_infeasible: bool,
    any_finite: bool,
}

const CONDITION_GRID: usize = 10_000;

impl Potential {
    fn scan_window(&self, r_lo: f64, r_hi: f64) -> WindowScan {
        let mut scan = WindowScan {
            v_min: f64::INFINITY,
            v_min_at: f64::NAN,
            v_max: f64::NEG_INFINITY,
            v_max_at: f64::NAN,
            v2_min: f64::INFINITY,
            v2_min_at: f64::NAN,
            any_infeasible: false,
            any_finite: false,
        };
        let (s_lo, s_hi) = (r_lo * r_lo, r_hi * r_hi);
        let mut points: Vec<f64> = (0..=CONDITION_GRID)
            .map(|i| r_lo + (r_hi - r_lo) * (i as f64) / (CONDITION_GRID as f64))
            .collect();
        for (i, k) in self.knots.iter().enumerate() {
            if s_lo < *k && *k < s_hi {
                points.push(k.sqrt());
            }
            let (lo_i, hi_i) = (
                if i == 0 { 0.0 } else { self.knots[i - 1] },
                *k,
            );
            for s in self.segments[i].stationary_points(lo_i.max(s_lo), hi_i.min(s_hi)) {
                points.push(s.sqrt());
            }
        }
        if let Some(last) = self.knots.last() {
            for s in self.segments[self.segments.len() - 1].stationary_points(last.max(s_lo), s_hi)
            {
                points.push(s.sqrt());
            }
        }
        for r in points {
            if !(r > 0.0) {
                continue;
            }
            match self.evaluate(r).expect("positive radius") {
                Eval::Infeasible => scan.any_infeasible = true,
                Eval::Finite(d) => {
                    scan.any_finite = true;
                    if d.value < scan.v_min {
                        scan.v_min = d.value;
                        scan.v_min_at = r;
                    }
                    if d.value > scan.v_max {
                        scan.v_max = d.value;
                        scan.v_max_at = r;
                    }
                    // Use only inward-facing one-sided curvature at the ends.
                    let candidates: &[f64] = if r <= r_lo {
                        &[d.curvature.right]
                    } else if r >= r_hi {
                        &[d.curvature.left]
                    } else {
                        &[d.curvature.left, d.curvature.right]
                    };
                    for &c in candidates {
                        if c < scan.v2_min {
                            scan.v2_min = c;
                            scan.v2_min_at = r;
                        }
                    }
                }
            }
        }
        scan
    }
}

fn merge_scans(a: WindowScan, b: WindowScan) -> WindowScan {
    WindowScan {
        v_min: if a.v_min <= b.v_min { a.v_min } else { b.v_min },
        v_min_at: if a.v_min <= b.v_min { a.v_min_at } else { b.v_min_at },
        v_max: if a.v_max >= b.v_max { a.v_max } else { b.v_max },
        v_max_at: if a.v_max >= b.v_max { a.v_max_at } else { b.v_max_at },
        v2_min: if a.v2_min <= b.v2_min { a.v2_min } else { b.v2_min },
        v2_min_at: if a.v2_min <= b.v2_min { a.v2_min_at } else { b.v2_min_at },
        any_infeasible: a.any_infeasible || b.any_infeasible,
        any_finite: a.any_finite || b.any_finite,
    }
}

/// Radius up to which every condition scan samples the potential.
const CHECK_REACH: f64 = 10.0;

/// Runs the quantitative one-well checklist and reports one verdict per
/// condition, each with its numeric margin and the scan method used.
///
/// The checklist, in report order:
///
/// * `tolerance_chain` — the deformation triple is strictly ordered.
/// * `depth_normalized` — `min V = −1` (within `equality_tol`).
/// * `well_convexity` — `V″ ≥ 0` on the two wall windows of half-width `α″`
///   around 1 and √2.
/// * `wall_curvature_floor` — `V″ ≥ curvature_floor` on the wall windows
///   outside the closed well `[1, √2]`.
/// * `square_criticality` — `W′(1) + 2W′(2) = 0` (within `equality_tol`),
///   the first-variation identity for the unit square.
/// * `square_stability` — the five one-sided curvature combinations at the
///   square exceed `quad_constant · stability_floor`.
/// * `well_ceiling` — `sup V < −15/16 − ceiling_slack` on the tight windows
///   of half-width `α′` around 1 and √2.
/// * `outside_shallowness` — `V ≥ −1/2` outside `(1−α, √2+α)`.
/// * `core_repulsion` — `V ≥ K` on `(0, 1−α]`, with `K` the separation
///   threshold.
/// * `finite_range` or `tail_decay` — the tail matches its declared class.
pub fn check_conditions(pot: &Potential, constants: &ConditionConstants) -> ConditionReport {
    let mut verdicts = Vec::new();
    let p = &pot.params;
    let grid_note = format!("grid of {CONDITION_GRID} points per window plus knots and vertices");
    let smooth = pot.kind == Kind::PiecewiseSmooth;

    // Tolerance chain.
    let chain_ok = p.validate().is_ok();
    verdicts.push(ConditionVerdict {
        id: "tolerance_chain".into(),
        status: if chain_ok { ConditionStatus::Holds } else { ConditionStatus::Fails },
        margin: if chain_ok { DEFORMATION_LIMIT - p.alpha_pp } else { -1.0 },
        observed: p.alpha_pp,
        threshold: DEFORMATION_LIMIT,
        witness: None,
        method: "direct comparison".into(),
    });

    // Depth normalization: global minimum of V equals −1.
    let global = pot.scan_window(0.01_f64.max(pot.hard_core_radius), CHECK_REACH);
    let depth_err = (global.v_min + 1.0).abs();
    verdicts.push(ConditionVerdict {
        id: "depth_normalized".into(),
        status: if depth_err <= constants.equality_tol {
            ConditionStatus::Holds
        } else {
            ConditionStatus::Fails
        },
        margin: constants.equality_tol - depth_err,
        observed: global.v_min,
        threshold: -1.0,
        witness: Some(global.v_min_at),
        method: grid_note.clone(),
    });

    // Windows around the two well distances.
    let wall = merge_scans(
        pot.scan_window(1.0 - p.alpha_pp, 1.0 + p.alpha_pp),
        pot.scan_window(SQRT_2 - p.alpha_pp, SQRT_2 + p.alpha_pp),
    );
    let wall_outside_well = merge_scans(
        pot.scan_window(1.0 - p.alpha_pp, 1.0),
        pot.scan_window(SQRT_2, SQRT_2 + p.alpha_pp),
    );
    if smooth {
        verdicts.push(ConditionVerdict {
            id: "well_convexity".into(),
            status: if wall.v2_min >= -constants.equality_tol {
                ConditionStatus::Holds
            } else {
                ConditionStatus::Fails
            },
            margin: wall.v2_min + constants.equality_tol,
            observed: wall.v2_min,
            threshold: 0.0,
            witness: Some(wall.v2_min_at),
            method: grid_note.clone(),
        });
        verdicts.push(ConditionVerdict {
            id: "wall_curvature_floor".into(),
            status: if wall_outside_well.v2_min > constants.curvature_floor {
                ConditionStatus::Holds
            } else {
                ConditionStatus::Fails
            },
            margin: wall_outside_well.v2_min - constants.curvature_floor,
            observed: wall_outside_well.v2_min,
            threshold: constants.curvature_floor,
            witness: Some(wall_outside_well.v2_min_at),
            method: grid_note.clone(),
        });
    } else {
        for id in ["well_convexity", "wall_curvature_floor"] {
            verdicts.push(ConditionVerdict {
                id: id.into(),
                status: ConditionStatus::NotApplicable,
                margin: 0.0,
                observed: f64::NAN,
                threshold: f64::NAN,
                witness: None,
                method: "hard wells carry no derivative data".into(),
            });
        }
    }

    // Criticality and stability at the square (squared-variable data at 1, 2).
    if smooth {
        let w1 = pot.evaluate_squared(1.0).expect("s=1").finite(1.0);
        let w2 = pot.evaluate_squared(2.0).expect("s=2").finite(SQRT_2);
        match (w1, w2) {
            (Ok(w1), Ok(w2)) => {
                let crit = w1.slope.mean() + 2.0 * w2.slope.mean();
                verdicts.push(ConditionVerdict {
                    id: "square_criticality".into(),
                    status: if crit.abs() <= constants.equality_tol {
                        ConditionStatus::Holds
                    } else {
                        ConditionStatus::Fails
                    },
                    margin: constants.equality_tol - crit.abs(),
                    observed: crit,
                    threshold: 0.0,
                    witness: None,
                    method: "one-sided derivative means at squared distances 1 and 2".into(),
                });
                let combos = [
                    w1.curvature.left + w1.curvature.right + 2.0 * w1.slope.mean(),
                    w2.curvature.left + w2.curvature.right,
                    w1.curvature.left + w1.curvature.right,
                    w1.curvature.right + 4.0 * w2.curvature.right,
                    w1.curvature.left + 4.0 * w2.curvature.left,
                ];
                let worst = combos.iter().cloned().fold(f64::INFINITY, f64::min);
                let threshold = constants.quad_constant * constants.stability_floor;
                verdicts.push(ConditionVerdict {
                    id: "square_stability".into(),
                    status: if worst > threshold {
                        ConditionStatus::Holds
                    } else {
                        ConditionStatus::Fails
                    },
                    margin: worst - threshold,
                    observed: worst,
                    threshold,
                    witness: None,
                    method: "five one-sided curvature combinations at the square".into(),
                });
            }
            _ => {
                for id in ["square_criticality", "square_stability"] {
                    verdicts.push(ConditionVerdict {
                        id: id.into(),
                        status: ConditionStatus::Fails,
                        margin: -1.0,
                        observed: f64::NAN,
                        threshold: 0.0,
                        witness: None,
                        method: "well distances inside the hard core".into(),
                    });
                }
            }
        }
    } else {
        for id in ["square_criticality", "square_stability"] {
            verdicts.push(ConditionVerdict {
                id: id.into(),
                status: ConditionStatus::NotApplicable,
                margin: 0.0,
                observed: f64::NAN,
                threshold: f64::NAN,
                witness: None,
                method: "hard wells carry no derivative data".into(),
            });
        }
    }

    // Well ceiling on the tight windows. A hard well enforces the bond
    // window combinatorially (hard core plus sharp cutoff), so the smooth
    // ceiling bound carries no content for it.
    if smooth {
        let tight = merge_scans(
            pot.scan_window(1.0 - p.alpha_prime, 1.0 + p.alpha_prime),
            pot.scan_window(SQRT_2 - p.alpha_prime, SQRT_2 + p.alpha_prime),
        );
        let ceiling = -15.0 / 16.0 - constants.ceiling_slack;
        verdicts.push(ConditionVerdict {
            id: "well_ceiling".into(),
            status: if tight.v_max < ceiling {
                ConditionStatus::Holds
            } else {
                ConditionStatus::Fails
            },
            margin: ceiling - tight.v_max,
            observed: tight.v_max,
            threshold: ceiling,
            witness: Some(tight.v_max_at),
            method: grid_note.clone(),
        });
    } else {
        verdicts.push(ConditionVerdict {
            id: "well_ceiling".into(),
            status: ConditionStatus::NotApplicable,
            margin: 0.0,
            observed: f64::NAN,
            threshold: f64::NAN,
            witness: None,
            method: "hard wells pin the well depth through the core and cutoff".into(),
        });
    }

    // Outside shallowness: V ≥ −1/2 off the bond window (infeasible radii
    // count as +∞ and therefore never violate the bound).
    let outside = merge_scans(
        pot.scan_window(0.01, 1.0 - p.alpha),
        pot.scan_window(SQRT_2 + p.alpha, CHECK_REACH),
    );
    let observed_out = if outside.any_finite { outside.v_min } else { f64::MAX };
    verdicts.push(ConditionVerdict {
        id: "outside_shallowness".into(),
        status: if observed_out >= -0.5 { ConditionStatus::Holds } else { ConditionStatus::Fails },
        margin: observed_out.min(1e6) + 0.5,
        observed: observed_out.min(1e6),
        threshold: -0.5,
        witness: if outside.any_finite { Some(outside.v_min_at) } else { None },
        method: format!("{grid_note}; scan capped at radius {CHECK_REACH}"),
    });

    // Core repulsion: V ≥ K on (0, 1−α].
    let k_floor = constants.separation_floor.unwrap_or_else(|| separation_threshold(pot));
    let core = pot.scan_window(0.01, 1.0 - p.alpha);
    let observed_core = if core.any_finite { core.v_min } else { f64::MAX };
    verdicts.push(ConditionVerdict {
        id: "core_repulsion".into(),
        status: if observed_core >= k_floor {
            ConditionStatus::Holds
        } else {
            ConditionStatus::Fails
        },
        margin: (observed_core - k_floor).min(1e6),
        observed: observed_core.min(1e6),
        threshold: k_floor,
        witness: if core.any_finite { Some(core.v_min_at) } else { None },
        method: if core.any_infeasible {
            format!("{grid_note}; hard-core radii count as +inf")
        } else {
            grid_note.clone()
        },
    });

    // Tail behaviour, by declared class.
    match pot.range {
        Range::Finite { cutoff } => {
            let beyond = pot.scan_window(cutoff * (1.0 + 1e-12), CHECK_REACH);
            let sup_abs = beyond.v_max.abs().max(beyond.v_min.abs());
            let reach_margin = p.reach() + constants.equality_tol - cutoff;
            let ok = sup_abs <= constants.equality_tol && reach_margin > 0.0;
            verdicts.push(ConditionVerdict {
                id: "finite_range".into(),
                status: if ok { ConditionStatus::Holds } else { ConditionStatus::Fails },
                margin: if sup_abs > constants.equality_tol {
                    constants.equality_tol - sup_abs
                } else {
                    reach_margin
                },
                observed: if sup_abs > constants.equality_tol { sup_abs } else { cutoff },
                threshold: p.reach(),
                witness: None,
                method: format!(
                    "cutoff within reach √2+α″, and sup|V| beyond the cutoff ≤ {} on the grid",
                    constants.equality_tol
                ),
            });
        }
        Range::Decaying { epsilon, exponent } => {
            let budget = constants.tail_prefactor.unwrap_or(epsilon);
            let mut ok = exponent > 4.0;
            // V ≤ 0 from the well onward.
            let onward = pot.scan_window(1.0, CHECK_REACH);
            ok &= onward.v_max <= constants.equality_tol;
            // Envelope ratios beyond the reach.
            let mut eps_req: f64 = 0.0;
            let mut eps_at = p.reach();
            let n = 4000;
            for i in 0..=n {
                let r = p.reach() + (CHECK_REACH - p.reach()) * (i as f64) / (n as f64);
                if let Ok(Eval::Finite(d)) = pot.evaluate(r) {
                    let weight = r.powf(exponent);
                    let local = (d.value.abs())
                        .max(r * d.slope.left.abs().max(d.slope.right.abs()))
                        .max(r * r * d.curvature.left.abs().max(d.curvature.right.abs()))
                        * weight;
                    if local > eps_req {
                        eps_req = local;
                        eps_at = r;
                    }
                }
            }
            ok &= eps_req <= budget;
            verdicts.push(ConditionVerdict {
                id: "tail_decay".into(),
                status: if ok { ConditionStatus::Holds } else { ConditionStatus::Fails },
                margin: if exponent <= 4.0 { exponent - 4.0 } else { budget - eps_req },
                observed: eps_req,
                threshold: budget,
                witness: Some(eps_at),
                method: format!(
                    "sup of |V|, r|V′|, r²|V″| against r^(−{exponent}) on [√2+α″, {CHECK_REACH}], \
                     4001 samples; nonpositivity of V beyond the well checked on the same grid"
                ),
            });
        }
    }

    let all_hold = verdicts.iter().all(|v| v.status != ConditionStatus::Fails);
    ConditionReport { verdicts, all_hold }
}

// ---------------------------------------------------------------------------
// Separation threshold
// ---------------------------------------------------------------------------

/// Explicit repulsion threshold from the building blocks: well depth, the
/// minimum admissible distance `r_min`, the interaction reach `r_reach`, and
/// an optional decaying-tail envelope `(epsilon, exponent)`.
///
/// If one pair sits closer than `r_min`, removing a point frees energy at
/// most `64·depth` per occupied shell of width `r_min` within the reach
/// (each shell `k` holds at most `8k` points of a `r_min`-separated set,
/// bounded here by `64·depth·(k₀(k₀+1)/2 − 1)` with
/// `k₀ = ⌈1 + 2·r_reach/r_min⌉`), plus the enveloped tail beyond. A core
/// value above the returned threshold therefore makes such a pair
/// energetically impossible in a minimizer.
pub fn separation_threshold_parts(
    depth: f64,
    r_min: f64,
    r_reach: f64,
    tail: Option<(f64, f64)>,
) -> f64 {
    let k0 = (1.0 + 2.0 * r_reach / r_min).ceil() as u64;
    let near = 64.0 * depth * ((k0 * (k0 + 1) / 2 - 1) as f64);
    let far = match tail {
        None => 0.0,
        Some((epsilon, exponent)) => {
            // Σ_{k≥k0} (k+1)/(k−1)^p, summed until negligible, plus an
            // integral remainder so the bound stays one-sided.
            let mut sum = 0.0;
            let mut k = k0.max(2);
            loop {
                let term = ((k + 1) as f64) / (((k - 1) as f64).powf(exponent));
                sum += term;
                k += 1;
                if term < 1e-16 || k > 1_000_000 {
                    break;
                }
            }
            let m = (k - 1) as f64;
            sum += (m + 2.0) * m.powf(1.0 - exponent) / (exponent - 1.0)
                + m.powf(2.0 - exponent) / (exponent - 2.0);
            64.0 * epsilon * (2.0 / r_min).powf(exponent) * sum
        }
    };
    near + far
}

/// [`separation_threshold_parts`] with every ingredient read off the
/// potential: unit depth (the wells are normalized), `r_min = 1 − α`, reach
/// from the range classification, and the stored tail envelope.
pub fn separation_threshold(pot: &Potential) -> f64 {
    let r_min = 1.0 - pot.params.alpha;
    let (r_reach, tail) = match pot.range {
        Range::Finite { cutoff } => (cutoff.max(pot.params.reach()), None),
        Range::Decaying { epsilon, exponent } => (pot.params.reach(), Some((epsilon, exponent))),
    };
    separation_threshold_parts(1.0, r_min, r_reach, tail)
}

// ---------------------------------------------------------------------------
// Lattice resummation
// ---------------------------------------------------------------------------

/// Resummation mode: which derived potential to build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResumMode {
    /// The pure scale-set series `Σ_{scales r ≥ 2} m(r)·W(s·r²)`.
    SeriesOnly,
    /// Original plus series: the effective well whose four-point energy at a
    /// side-`t` square equals the full lattice energy per point at scale `t`.
    Resummed,
    /// Resummed, minus `correction · (squared radial offset from the well
    /// distances)`, truncated to zero beyond `√2 + α″`.
    CorrectedTruncated { correction: f64 },
    /// Just the squared radial offset weight: `(1−r)²` on the window around
    /// 1, `(√2−r)²` on the window around √2, zero elsewhere.
    OffsetWeight,
}

/// One evaluation of the scale-set series with a certified truncation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEval {
    pub value: f64,
    /// Series derivative in the squared variable.
    pub slope: f64,
    pub curvature: f64,
    /// Certified bound on the dropped part of the value series.
    pub truncation: f64,
    /// Largest squared scale actually summed.
    pub last_scale_sq: u64,
}

/// Evaluates the scale-set series `Σ m(r)·W(s·r²)` over the scales
/// `r ∈ D̃ ∖ {1}` (squared scales with even 2-adic valuation representable
/// as a sum of two squares), truncating once the certified tail bound drops
/// below `tail_tol`.
pub fn scale_series(pot: &Potential, s: f64, tail_tol: f64) -> Result<SeriesEval, PotentialError> {
    let mut table = lattice::ScaleTable::new();
    scale_series_with(pot, s, tail_tol, &mut table)
}

/// [`scale_series`] with a caller-owned multiplicity table, so repeated
/// evaluations (tabulation, scans) share the sieve work.
pub fn scale_series_with(
    pot: &Potential,
    s: f64,
    tail_tol: f64,
    table: &mut lattice::ScaleTable,
) -> Result<SeriesEval, PotentialError> {
    if !(s > 0.0) {
        return Err(PotentialError::NonPositiveRadius(s));
    }
    if !(tail_tol > 0.0) {
        return Err(PotentialError::Invalid("tail tolerance must be positive".into()));
    }
    let envelope = match pot.range {
        Range::Finite { .. } => None,
        Range::Decaying { exponent, .. } => {
            if exponent <= 4.0 {
                return Err(PotentialError::TailTooFat(exponent));
            }
            Some(pot.tail_envelope().ok_or_else(|| {
                PotentialError::Invalid(
                    "decaying potential lacks an inverse-power tail segment to certify".into(),
                )
            })?)
        }
    };
    let support_end = pot.support_end_squared();
    let mut out =
        SeriesEval { value: 0.0, slope: 0.0, curvature: 0.0, truncation: 0.0, last_scale_sq: 0 };
    let mut n: u64 = 4;
    // The tail bound is re-examined once per integer shell (whenever ⌊√n⌋
    // steps), not at every scale.
    let mut next_check: u64 = 4;
    loop {
        if let Some(end) = support_end {
            if s * (n as f64) > end {
                out.truncation = 0.0;
                break;
            }
        } else if n >= next_check {
            let k = (n as f64).sqrt().floor() as u64;
            let env = envelope.expect("decaying range implies an envelope");
            let bound = shell_tail_bound(env, s, k);
            if bound < tail_tol {
                out.truncation = bound;
                break;
            }
            next_check = (k + 1) * (k + 1);
            if n > 100_000_000 {
                return Err(PotentialError::Invalid(format!(
                    "series truncation bound did not reach {tail_tol} within 1e8 scales"
                )));
            }
        }
        let m = table.multiplicity(n);
        if m > 0 {
            let nf = n as f64;
            match pot.evaluate_squared(s * nf)? {
                Eval::Infeasible => {
                    return Err(PotentialError::UnexpectedInfeasible((s * nf).sqrt()))
                }
                Eval::Finite(d) => {
                    let mf = m as f64;
                    out.value += mf * d.value;
                    out.slope += mf * nf * d.slope.mean();
                    out.curvature += mf * nf * nf * d.curvature.mean();
                    out.last_scale_sq = n;
                }
            }
        }
        n += 1;
    }
    Ok(out)
}

/// Certified bound on the value series over all scales in shells `≥ k0`,
/// from the inverse-power envelope. Each shell `k` holds at most
/// `π(1+√2)(2k+1)/4 ≤ 3π(1+√2)k/4` scale vectors, and once `s·k²` doubles
/// the envelope pole each term is at most `amp·(s·k²/2)^(−p/2)`, giving the
/// closed-form majorant `C·(k0^(1−p) + k0^(2−p)/(p−2))`.
pub(crate) fn shell_tail_bound(env: TailEnvelope, s: f64, k0: u64) -> f64 {
    let kf = (k0 as f64).max(1.0);
    // Below the envelope's validity the bound is not usable yet.
    if s * kf * kf < env.start.max(2.0 * env.pole) {
        return f64::INFINITY;
    }
    let c = std::f64::consts::PI * (1.0 + SQRT_2) / 4.0
        * 3.0
        * env.amplitude
        * (s / 2.0).powf(-env.exponent / 2.0);
    c * (kf.powf(1.0 - env.exponent) + kf.powf(2.0 - env.exponent) / (env.exponent - 2.0))
}

/// Builds the resummed potential for the requested mode.
///
/// The returned object agrees with the mathematical definition on radii at
/// and beyond `1 − α″`; below that (deep inside the repulsive core, where
/// the original dominates by orders of magnitude) the original segments are
/// kept verbatim. Series-bearing modes are materialized as piecewise-cubic
/// interpolants on an adaptively refined knot grid with local interpolation
/// defect below `tail_tol/10`, and are truncated to zero once the certified
/// series bound drops below `tail_tol`; the returned range reflects the
/// truncation radius of the materialized object.
pub fn resum(pot: &Potential, mode: ResumMode, tail_tol: f64) -> Result<Potential, PotentialError> {
    if !(tail_tol > 0.0) {
        return Err(PotentialError::Invalid("tail tolerance must be positive".into()));
    }
    let p = pot.params;
    match mode {
        ResumMode::OffsetWeight => {
            let a = p.alpha;
            let pot = Potential {
                kind: Kind::PiecewiseSmooth,
                knots: vec![
                    (1.0 - a) * (1.0 - a),
                    (1.0 + a) * (1.0 + a),
                    (SQRT_2 - a) * (SQRT_2 - a),
                    (SQRT_2 + a) * (SQRT_2 + a),
                ],
                segments: vec![
                    Segment::Flat { c: 0.0 },
                    Segment::SqrtShiftSquared { a: 1.0, r_ref: 1.0 },
                    Segment::Flat { c: 0.0 },
                    Segment::SqrtShiftSquared { a: 1.0, r_ref: SQRT_2 },
                    Segment::Flat { c: 0.0 },
                ],
                hard_core_radius: 0.0,
                range: Range::Finite { cutoff: SQRT_2 + a },
                params: p,
            };
            pot.validate()?;
            return Ok(pot);
        }
        ResumMode::Resummed => {
            // Short reach means the series vanishes on the represented
            // domain: the smallest scale is 2, so every summed distance is at
            // least 2(1−α″), beyond a short finite cutoff.
            if let Range::Finite { cutoff } = pot.range {
                if 2.0 * (1.0 - p.alpha_pp) >= cutoff {
                    return Ok(pot.clone());
                }
            }
        }
        _ => {}
    }

    let s_lo = (1.0 - p.alpha_pp) * (1.0 - p.alpha_pp);
    let node_tol = tail_tol / 10.0;
    let table = std::cell::RefCell::new(lattice::ScaleTable::new());

    // Pointwise target values for the tabulated modes.
    let eval_target = |s: f64| -> Result<(f64, f64), PotentialError> {
        let series = scale_series_with(pot, s, node_tol, &mut table.borrow_mut())?;
        match mode {
            ResumMode::SeriesOnly => Ok((series.value, series.slope)),
            ResumMode::Resummed | ResumMode::CorrectedTruncated { .. } => {
                let base = pot.evaluate_squared(s)?.finite(s.sqrt())?;
                let mut v = base.value + series.value;
                let mut d = base.slope.mean() + series.slope;
                if let ResumMode::CorrectedTruncated { correction } = mode {
                    let r = s.sqrt();
                    let (w, w1) = offset_weight(r, p.alpha);
                    v -= correction * w;
                    d -= correction * w1;
                }
                Ok((v, d))
            }
            ResumMode::OffsetWeight => unreachable!("handled above"),
        }
    };

    // Truncation radius: where the remaining material is below tail_tol.
    let s_hi = {
        let mut s = (p.reach() * p.reach()).max(s_lo + 1.0);
        loop {
            let series = scale_series_with(pot, s, node_tol, &mut table.borrow_mut())?;
            let base = match mode {
                ResumMode::SeriesOnly => 0.0,
                _ => pot.evaluate_squared(s)?.finite(s.sqrt())?.value,
            };
            if (series.value.abs() + series.truncation + base.abs()) < tail_tol || s > 1e6 {
                break s;
            }
            s *= 1.25;
        }
    };

    // Forced knots: original knots in range, plus offset-window edges and the
    // hard truncation point for the corrected mode.
    let mut forced: Vec<f64> = pot.knots.iter().cloned().filter(|k| s_lo < *k && *k < s_hi).collect();
    if let ResumMode::CorrectedTruncated { .. } = mode {
        for r in [1.0 - p.alpha, 1.0 + p.alpha, SQRT_2 - p.alpha, SQRT_2 + p.alpha] {
            let s = r * r;
            if s_lo < s && s < s_hi {
                forced.push(s);
            }
        }
    }
    let cut = match mode {
        ResumMode::CorrectedTruncated { .. } => {
            let s = p.reach() * p.reach();
            forced.push(s);
            Some(s)
        }
        _ => None,
    };
    forced.push(s_hi);
    forced.sort_by(|a, b| a.partial_cmp(b).unwrap());
    forced.dedup();

    // Adaptive piecewise-cubic tabulation between forced knots.
    let mut knots: Vec<f64> = Vec::new();
    let mut segments: Vec<Segment> = Vec::new();
    let mut s_left = s_lo;
    let mut left = eval_target(s_lo)?;
    for &s_stop in &forced {
        if let Some(c) = cut {
            if s_left >= c {
                break;
            }
        }
        let stop = cut.map_or(s_stop, |c| s_stop.min(c));
        if stop <= s_left {
            continue;
        }
        let mut pending: Vec<(f64, (f64, f64))> = vec![(stop, eval_target(stop)?)];
        while let Some(&(s_right, right)) = pending.last() {
            let seg = hermite_cubic(s_left, left, s_right, right);
            let mid = 0.5 * (s_left + s_right);
            let target_mid = eval_target(mid)?;
            let (interp_mid, _, _) = seg.eval(mid);
            if (interp_mid - target_mid.0).abs() <= node_tol || (s_right - s_left) < 1e-7 {
                pending.pop();
                knots.push(s_right);
                segments.push(seg);
                s_left = s_right;
                left = right;
            } else {
                pending.push((mid, target_mid));
            }
        }
    }
    // Zero beyond the truncation radius.
    segments.push(Segment::Flat { c: 0.0 });
    let end = *knots.last().unwrap();

    // Prefix: original segments verbatim below the table start.
    let mut all_knots: Vec<f64> = pot.knots.iter().cloned().filter(|k| *k < s_lo).collect();
    let prefix_segments = all_knots.len() + 1;
    let mut all_segments: Vec<Segment> = pot.segments[..prefix_segments].to_vec();
    match mode {
        ResumMode::SeriesOnly => {
            // The pure series has no core part: zero below the table.
            all_knots.clear();
            all_segments = vec![Segment::Flat { c: 0.0 }];
        }
        _ => {}
    }
    all_knots.push(s_lo);
    all_knots.extend(knots);
    all_segments.extend(segments);

    let out = Potential {
        kind: Kind::PiecewiseSmooth,
        knots: all_knots,
        segments: all_segments,
        hard_core_radius: pot.hard_core_radius,
        range: Range::Finite { cutoff: end.sqrt() },
        params: p,
    };
    out.validate()?;
    Ok(out)
}

/// The squared radial offset weight and its derivative in the squared
/// variable: `(1−r)²` within `α` of 1, `(√2−r)²` within `α` of √2, else 0.
fn offset_weight(r: f64, alpha: f64) -> (f64, f64) {
    let anchor = if (r - 1.0).abs() < alpha {
        1.0
    } else if (r - SQRT_2).abs() < alpha {
        SQRT_2
    } else {
        return (0.0, 0.0);
    };
    let w = (anchor - r) * (anchor - r);
    // d/ds (anchor−√s)² = (√s − anchor)/√s
    (w, (r - anchor) / r)
}

/// Cubic matching value and slope at both interval ends, stored as a
/// polynomial piece centered at the left end.
fn hermite_cubic(s0: f64, (v0, d0): (f64, f64), s1: f64, (v1, d1): (f64, f64)) -> Segment {
    let h = s1 - s0;
    let c0 = v0;
    let c1 = d0;
    let c2 = (3.0 * (v1 - v0) / h - 2.0 * d0 - d1) / h;
    let c3 = (2.0 * (v0 - v1) / h + d0 + d1) / (h * h);
    Segment::Poly { center: s0, coeffs: vec![c0, c1, c2, c3] }
}

/// The series amplification constant: `Σ m(r)·r^(−p)` over scales `r ≥ 2`,
/// scaled by `(1−α)^(−p)`. For a tail enveloped by `ε·r^(−p)`, the uniform
/// distance between the original and resummed potentials on `(1−α, ∞)` is at
/// most this constant times `ε`.
pub fn resummation_constant(exponent: f64, alpha: f64) -> Result<f64, PotentialError> {
    if exponent <= 4.0 {
        return Err(PotentialError::TailTooFat(exponent));
    }
    let mut table = lattice::ScaleTable::new();
    let mut sum = 0.0;
    let mut n: u64 = 4;
    loop {
        let m = table.multiplicity(n);
        if m > 0 {
            sum += (m as f64) * (n as f64).powf(-exponent / 2.0);
        }
        n += 1;
        // Certified stop: the remaining scales are dominated by all lattice
        // shells, at most π(1+√2)(2k+1)/4 scale vectors of size ≥ k each.
        let k = (n as f64).sqrt();
        let rem =
            std::f64::consts::PI * (1.0 + SQRT_2) * k.powf(2.0 - exponent) / (exponent - 2.0);
        if rem < 1e-10 * sum.max(1e-6) {
            break;
        }
    }
    Ok((1.0 - alpha).powf(-exponent) * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn point(pot: &Potential, r: f64) -> PointData {
        pot.evaluate(r).unwrap().finite(r).unwrap()
    }

    #[test]
    fn hard_well_levels() {
        let pot = hard_well(SQRT_2).unwrap();
        assert_eq!(point(&pot, 1.2).value, -1.0);
        assert_eq!(pot.evaluate(0.5).unwrap(), Eval::Infeasible);
        assert_eq!(point(&pot, 2.0).value, 0.0);
        // Closed well: the boundary distances are feasible and rewarded.
        assert_eq!(point(&pot, 1.0).value, -1.0);
        assert_eq!(point(&pot, SQRT_2).value, -1.0);
        assert!(pot.evaluate(0.0).is_err());
        assert!(hard_well(0.8).is_err());
    }

    #[test]
    fn hard_well_boundary_is_closed_on_the_right() {
        let pot = hard_well(1.3).unwrap();
        assert_eq!(point(&pot, 1.3).value, -1.0);
        assert_eq!(point(&pot, 1.3 + 1e-12).value, 0.0);
    }

    #[test]
    fn plateau_floor_is_flat_at_minus_one() {
        let pot = plateau_well(&PlateauParams::truncated_reference()).unwrap();
        for r in [1.0, 1.1, 1.2, 1.3] {
            let d = point(&pot, r);
            assert_abs_diff_eq!(d.value, -1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(d.slope.mean(), 0.0, epsilon = 1e-15);
        }
        // The floor is closed at both squared-variable endpoints, exactly.
        for s in [1.0, 2.0] {
            let d = pot.evaluate_squared(s).unwrap().finite(s.sqrt()).unwrap();
            assert_eq!(d.value, -1.0);
        }
        // The rounded radius √2 squares to one ulp past 2 and lands on the
        // outer wall: still −1 to machine precision, with vanishing slope.
        let d = point(&pot, SQRT_2);
        assert_abs_diff_eq!(d.value, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.slope.mean(), 0.0, epsilon = 1e-12);
        // Zero beyond the cutoff, continuous at it.
        let cutoff = pot.params.reach();
        assert_abs_diff_eq!(point(&pot, cutoff).value, 0.0, epsilon = 1e-12);
        assert_eq!(point(&pot, cutoff + 0.01).value, 0.0);
    }

    #[test]
    fn plateau_knot_continuity() {
        for params in [PlateauParams::truncated_reference(), PlateauParams::decaying_reference()] {
            let pot = plateau_well(&params).unwrap();
            let cutoff_sq = pot.params.reach() * pot.params.reach();
            for &k in &pot.knots {
                let d = pot.evaluate_squared(k).unwrap().finite(k.sqrt()).unwrap();
                // Value continuity everywhere except a truncated cutoff is
                // exact by construction; slopes match except at the cutoff.
                let below = pot.evaluate_squared(k * (1.0 - 1e-9)).unwrap().finite(0.0).unwrap();
                let above = pot.evaluate_squared(k * (1.0 + 1e-9)).unwrap().finite(0.0).unwrap();
                assert_abs_diff_eq!(below.value, d.value, epsilon = 1e-5 * (1.0 + d.value.abs()));
                let truncated_cutoff =
                    matches!(params.tail, PlateauTail::Truncated) && k == cutoff_sq;
                if !truncated_cutoff {
                    assert_abs_diff_eq!(
                        d.slope.jump(),
                        0.0,
                        epsilon = 1e-7 * (1.0 + d.slope.mean().abs())
                    );
                    assert_abs_diff_eq!(
                        above.value,
                        d.value,
                        epsilon = 1e-5 * (1.0 + d.value.abs())
                    );
                }
            }
        }
    }

    #[test]
    fn plateau_rejects_soft_core() {
        let mut params = PlateauParams::truncated_reference();
        params.core_exponent = 30.0; // below the fit threshold ≈ 37.026
        match plateau_well(&params) {
            Err(PotentialError::CoreTooSoft { min_exponent, .. }) => {
                assert_relative_eq!(min_exponent, 37.0256, max_relative = 1e-3);
            }
            other => panic!("expected CoreTooSoft, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_floor_collapses_cleanly() {
        // floor_start = floor_end: zero-width floor, still constructible.
        let params = PlateauParams {
            core_exponent: 80.0,
            floor_start: 1.44,
            floor_end: 1.44,
            depth: 2.0,
            tail: PlateauTail::Truncated,
            params: DeformationParams::default(),
        };
        let pot = plateau_well(&params).unwrap();
        let d = point(&pot, 1.2);
        assert_abs_diff_eq!(d.value, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.slope.mean(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quintic_matches_prescribed_data() {
        let data = HermiteData {
            value_at_one: -1.0,
            slope_at_one: 2.0,
            curvature_at_one: 3.0,
            value_at_two: -1.0,
            slope_at_two: -1.0,
            curvature_at_two: 1.0,
        };
        let pot = quintic_well(&data, DeformationParams::default()).unwrap();
        let w1 = pot.evaluate_squared(1.0).unwrap().finite(1.0).unwrap();
        let w2 = pot.evaluate_squared(2.0).unwrap().finite(SQRT_2).unwrap();
        assert_relative_eq!(w1.value, -1.0, epsilon = 1e-12);
        assert_relative_eq!(w1.slope.mean(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(w1.curvature.mean(), 3.0, epsilon = 1e-12);
        assert_relative_eq!(w2.value, -1.0, epsilon = 1e-12);
        assert_relative_eq!(w2.slope.mean(), -1.0, epsilon = 1e-12);
        assert_relative_eq!(w2.curvature.mean(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn radial_derivatives_match_finite_differences() {
        let pot = plateau_well(&PlateauParams::decaying_reference()).unwrap();
        // Away from knots, compare V′ and V″ with central differences.
        for r in [0.93, 0.97, 1.2, 1.43, 1.47, 1.6, 2.5] {
            let d = point(&pot, r);
            for h in [1e-5, 3e-6] {
                let fd1 = (point(&pot, r + h).value - point(&pot, r - h).value) / (2.0 * h);
                assert_relative_eq!(d.slope.mean(), fd1, max_relative = 1e-5, epsilon = 1e-8);
            }
            let h = 3e-5;
            let fd2 = (point(&pot, r + h).value - 2.0 * d.value + point(&pot, r - h).value)
                / (h * h);
            assert_relative_eq!(d.curvature.mean(), fd2, max_relative = 1e-4, epsilon = 1e-5);
        }
    }

    #[test]
    fn serde_roundtrip_is_exact() {
        for pot in [
            hard_well(SQRT_2).unwrap(),
            plateau_well(&PlateauParams::truncated_reference()).unwrap(),
            plateau_well(&PlateauParams::decaying_reference()).unwrap(),
        ] {
            let json = serde_json::to_string(&pot).unwrap();
            let back: Potential = serde_json::from_str(&json).unwrap();
            assert_eq!(pot, back);
        }
    }

    #[test]
    fn truncated_reference_passes_all_conditions() {
        let pot = plateau_well(&PlateauParams::truncated_reference()).unwrap();
        let constants = ConditionConstants {
            curvature_floor: 700.0,
            stability_floor: 1.0,
            quad_constant: 64.0,
            ceiling_slack: 0.01,
            ..ConditionConstants::default()
        };
        let report = check_conditions(&pot, &constants);
        for v in &report.verdicts {
            assert_eq!(v.status, ConditionStatus::Holds, "condition {} failed: {v:?}", v.id);
        }
        assert!(report.all_hold);

        // Pinned margins (hand-derived from the closed-form fit):
        // inner wall coefficient ≈ 1.1686e5, outer ≈ 48.28.
        let repulsion = report.verdict("core_repulsion").unwrap();
        assert_relative_eq!(repulsion.threshold, 896.0, epsilon = 1e-9);
        assert_relative_eq!(repulsion.observed, 903.48, max_relative = 1e-3);
        let ceiling = report.verdict("well_ceiling").unwrap();
        assert_relative_eq!(ceiling.observed, -0.95794, max_relative = 1e-3);
        let stability = report.verdict("square_stability").unwrap();
        assert_relative_eq!(stability.observed, 2.0 / 0.020713, max_relative = 1e-3);
        let floor = report.verdict("wall_curvature_floor").unwrap();
        assert_relative_eq!(floor.observed, 772.5, max_relative = 1e-3);
        let shallow = report.verdict("outside_shallowness").unwrap();
        assert_relative_eq!(shallow.observed, -0.1929, max_relative = 1e-2);
    }

    #[test]
    fn hard_well_conditions_are_partial() {
        let report = check_conditions(&hard_well(SQRT_2).unwrap(), &ConditionConstants::default());
        assert_eq!(
            report.verdict("square_criticality").unwrap().status,
            ConditionStatus::NotApplicable
        );
        assert_eq!(report.verdict("well_ceiling").unwrap().status, ConditionStatus::NotApplicable);
        assert_eq!(report.verdict("depth_normalized").unwrap().status, ConditionStatus::Holds);
        assert_eq!(report.verdict("outside_shallowness").unwrap().status, ConditionStatus::Holds);
        assert_eq!(report.verdict("core_repulsion").unwrap().status, ConditionStatus::Holds);
        assert_eq!(report.verdict("finite_range").unwrap().status, ConditionStatus::Holds);
        assert!(report.all_hold);
    }

    #[test]
    fn criticality_violation_is_reported_with_margin() {
        let data = HermiteData {
            value_at_one: -1.0,
            slope_at_one: 1.0,
            curvature_at_one: 1.0,
            value_at_two: -1.0,
            slope_at_two: 0.0,
            curvature_at_two: 1.0,
        };
        let pot = quintic_well(&data, DeformationParams::default()).unwrap();
        let report = check_conditions(&pot, &ConditionConstants::default());
        let crit = report.verdict("square_criticality").unwrap();
        assert_eq!(crit.status, ConditionStatus::Fails);
        assert_relative_eq!(crit.observed, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn separation_threshold_reference_value() {
        // r_min = 0.955, reach ≈ 1.4642 → k₀ = 5, near part 64·14 = 896.
        let pot = plateau_well(&PlateauParams::truncated_reference()).unwrap();
        assert_relative_eq!(separation_threshold(&pot), 896.0, epsilon = 1e-9);
        // A decaying tail adds a positive far-field part.
        let dec = plateau_well(&PlateauParams::decaying_reference()).unwrap();
        assert!(separation_threshold(&dec) > 896.0);
    }

    #[test]
    fn finite_range_resummation_is_identity() {
        let pot = plateau_well(&PlateauParams::truncated_reference()).unwrap();
        let star = resum(&pot, ResumMode::Resummed, 1e-9).unwrap();
        assert_eq!(pot, star);
    }

    #[test]
    fn offset_weight_vanishes_at_well_distances() {
        let pot = plateau_well(&PlateauParams::decaying_reference()).unwrap();
        let w = resum(&pot, ResumMode::OffsetWeight, 1e-9).unwrap();
        assert_abs_diff_eq!(point(&w, 1.0).value, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(point(&w, SQRT_2).value, 0.0, epsilon = 1e-15);
        let alpha = pot.params.alpha;
        assert_relative_eq!(point(&w, 1.02).value, 0.02f64.powi(2), epsilon = 1e-12);
        assert_relative_eq!(
            point(&w, SQRT_2 - 0.03).value,
            0.03f64.powi(2),
            max_relative = 1e-9
        );
        assert_eq!(point(&w, 1.0 + 2.0 * alpha).value, 0.0);
        assert_eq!(point(&w, 0.5).value, 0.0);
    }

    #[test]
    fn series_matches_brute_force_oracle() {
        // Oracle: sum the defining series directly out to squared scale 10⁶;
        // the certified truncation must agree within its reported bound.
        let pot = plateau_well(&PlateauParams::decaying_reference()).unwrap();
        let mut table = lattice::ScaleTable::new();
        for s in [0.95, 1.0, 1.3, 2.0, 2.5] {
            let series = scale_series(&pot, s, 1e-12).unwrap();
            let mut oracle = 0.0;
            for n in 4..=1_000_000u64 {
                let m = table.multiplicity(n);
                if m > 0 {
                    if let Eval::Finite(d) = pot.evaluate_squared(s * n as f64).unwrap() {
                        oracle += (m as f64) * d.value;
                    }
                }
            }
            assert_abs_diff_eq!(series.value, oracle, epsilon = 1e-11);
        }
    }

    #[test]
    fn resummed_table_matches_series() {
        let pot = plateau_well(&PlateauParams::decaying_reference()).unwrap();
        let star = resum(&pot, ResumMode::Resummed, 1e-9).unwrap();
        for r in [0.96, 1.0, 1.2, SQRT_2, 1.5, 2.0] {
            let direct = point(&pot, r).value + scale_series(&pot, r * r, 1e-13).unwrap().value;
            assert_abs_diff_eq!(point(&star, r).value, direct, epsilon = 1e-9);
        }
    }

    #[test]
    fn resummed_difference_respects_amplification_constant() {
        let pot = plateau_well(&PlateauParams::decaying_reference()).unwrap();
        let (eps, p) = match pot.range {
            Range::Decaying { epsilon, exponent } => (epsilon, exponent),
            _ => unreachable!(),
        };
        let cbar = resummation_constant(p, pot.params.alpha).unwrap();
        let mut sup = 0.0f64;
        for i in 0..2000 {
            let r = (1.0 - pot.params.alpha) + 3.0 * (i as f64) / 2000.0;
            let diff = scale_series(&pot, r * r, 1e-13).unwrap().value.abs();
            sup = sup.max(diff);
        }
        assert!(sup <= cbar * eps, "sup {sup} exceeds C̄·ε = {}", cbar * eps);
        assert!(sup > 0.0);
    }

    #[test]
    fn corrected_truncated_vanishes_beyond_reach() {
        let pot = plateau_well(&PlateauParams::decaying_reference()).unwrap();
        let vss = resum(&pot, ResumMode::CorrectedTruncated { correction: 0.5 }, 1e-9).unwrap();
        let reach = pot.params.reach();
        assert_eq!(point(&vss, reach + 1e-6).value, 0.0);
        assert_eq!(point(&vss, 3.0).value, 0.0);
        // Inside the offset window the correction is subtracted.
        let r = 1.0 + 0.02;
        let expected = point(&pot, r).value + scale_series(&pot, r * r, 1e-13).unwrap().value
            - 0.5 * (r - 1.0) * (r - 1.0);
        assert_abs_diff_eq!(point(&vss, r).value, expected, epsilon = 1e-9);
    }

    #[test]
    fn decaying_reference_tail_conditions() {
        let pot = plateau_well(&PlateauParams::decaying_reference()).unwrap();
        let report = check_conditions(&pot, &ConditionConstants::default());
        assert_eq!(report.verdict("tail_decay").unwrap().status, ConditionStatus::Holds);
        assert_eq!(report.verdict("square_criticality").unwrap().status, ConditionStatus::Holds);
        assert_eq!(report.verdict("depth_normalized").unwrap().status, ConditionStatus::Holds);
    }
}
