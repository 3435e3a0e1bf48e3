//! Configurations and interaction energies.
//!
//! A configuration is a finite set of labelled planar points interacting
//! through a radial pair potential; its energy is the sum of `V` over
//! unordered pairs. The four-point energy weights the four sides of a
//! quadrilateral by ½ and its two diagonals by 1 — in the square lattice
//! every bond is a side of exactly two unit cells and a diagonal of exactly
//! one, so summing the four-point energy over all cells reproduces the plain
//! pair sum. That weighting makes the centered unit square a critical point
//! exactly when `W′(1) + 2W′(2) = 0` (`W(s) = V(√s)`), and its Hessian
//! splits under the square's symmetry into six labelled eigenfamilies
//! computed here in closed form.
//!
//! The module also evaluates the per-point energy of the infinite scaled
//! square lattice by a certified series (exact termination for finite-range
//! potentials, envelope-bounded truncation for decaying tails) and locates
//! the energetically optimal lattice scale.

use crate::geometry::Vec2;
use crate::lattice::ScaleTable;
use crate::potential::{self, Eval, Kind, Potential, PotentialError, Sided};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

/// Errors from configuration handling and four-point geometry.
#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("degenerate quadrilateral: {0}")]
    Degenerate(String),
    #[error("configuration I/O failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("configuration row {row}: expected two numeric fields")]
    BadRow { row: usize },
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

// ---------------------------------------------------------------------------
// Configurations
// ---------------------------------------------------------------------------

/// A finite labelled point configuration in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ConfigurationData", into = "ConfigurationData")]
pub struct Configuration {
    points: Vec<Vec2>,
}

/// Serialized form: `{"points": [[x, y], …]}`.
#[derive(Serialize, Deserialize)]
struct ConfigurationData {
    points: Vec<[f64; 2]>,
}

impl From<ConfigurationData> for Configuration {
    fn from(d: ConfigurationData) -> Self {
        Configuration { points: d.points.iter().map(|p| Vec2::new(p[0], p[1])).collect() }
    }
}

impl From<Configuration> for ConfigurationData {
    fn from(c: Configuration) -> Self {
        ConfigurationData { points: c.points.iter().map(|p| [p.x, p.y]).collect() }
    }
}

impl Configuration {
    pub fn new(points: Vec<Vec2>) -> Self {
        Configuration { points }
    }

    pub fn from_xy(coords: &[(f64, f64)]) -> Self {
        Configuration { points: coords.iter().map(|&(x, y)| Vec2::new(x, y)).collect() }
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [Vec2] {
        &mut self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The image under an isometry: optional reflection `x ↦ −x`, then a
    /// rotation by `angle`, then a translation. Energies are invariant under
    /// this map.
    pub fn transformed(&self, angle: f64, translation: Vec2, reflect: bool) -> Self {
        let (sin, cos) = angle.sin_cos();
        Configuration {
            points: self
                .points
                .iter()
                .map(|p| {
                    let q = if reflect { Vec2::new(-p.x, p.y) } else { *p };
                    Vec2::new(cos * q.x - sin * q.y, sin * q.x + cos * q.y) + translation
                })
                .collect(),
        }
    }

    /// Reads a two-column `x,y` CSV (header row required, `#` comments
    /// skipped).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, EnergyError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut points = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |i: usize| -> Option<f64> { record.get(i)?.parse().ok() };
            match (record.len(), parse(0), parse(1)) {
                (2, Some(x), Some(y)) => points.push(Vec2::new(x, y)),
                _ => return Err(EnergyError::BadRow { row: row + 2 }),
            }
        }
        Ok(Configuration { points })
    }

    /// Writes the two-column `x,y` CSV form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), EnergyError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["x", "y"])?;
        for p in &self.points {
            wtr.write_record([p.x.to_string(), p.y.to_string()])?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Energies
// ---------------------------------------------------------------------------

/// An energy value; `Infeasible` marks hard-core violations (including
/// coincident points) and is worse than every finite value. Serializes to a
/// number or `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Energy {
    Finite(f64),
    Infeasible,
}

impl Energy {
    pub fn finite(self) -> Option<f64> {
        match self {
            Energy::Finite(v) => Some(v),
            Energy::Infeasible => None,
        }
    }

    pub fn is_infeasible(self) -> bool {
        matches!(self, Energy::Infeasible)
    }

    /// The value with `Infeasible` mapped to `+∞` (for comparisons only).
    pub fn or_infinity(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// Strictly-lower-energy comparison with `Infeasible` as `+∞`.
    pub fn better_than(self, other: Energy) -> bool {
        self.or_infinity() < other.or_infinity()
    }
}

/// Pair value with coincident points treated as a hard-core violation.
fn pair_value(pot: &Potential, r2: f64) -> Option<f64> {
    if r2 == 0.0 {
        return None;
    }
    match pot.evaluate_squared(r2).expect("positive squared radius") {
        Eval::Infeasible => None,
        Eval::Finite(d) => Some(d.value),
    }
}

/// Total pair energy `Σ_{i<j} V(|x_i − x_j|)`, `Infeasible` if any pair
/// violates the hard core or coincides.
pub fn total_energy(pot: &Potential, config: &Configuration) -> Energy {
    let pts = config.points();
    let mut total = 0.0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            match pair_value(pot, (pts[i] - pts[j]).norm_squared()) {
                None => return Energy::Infeasible,
                Some(v) => total += v,
            }
        }
    }
    Energy::Finite(total)
}

/// Per-point energies `E_p = ½·Σ_{q≠p} V(|x_p − x_q|)`; they sum to the
/// total energy. Deep interior points of a square-lattice patch each
/// contribute the four-point energy of the unit cell.
pub fn per_point_energies(pot: &Potential, config: &Configuration) -> Vec<Energy> {
    let pts = config.points();
    let mut out = vec![Energy::Finite(0.0); pts.len()];
    for i in 0..pts.len() {
        let mut acc = Energy::Finite(0.0);
        for j in 0..pts.len() {
            if i == j {
                continue;
            }
            acc = match (acc, pair_value(pot, (pts[i] - pts[j]).norm_squared())) {
                (Energy::Finite(a), Some(v)) => Energy::Finite(a + 0.5 * v),
                _ => Energy::Infeasible,
            };
            if acc.is_infeasible() {
                break;
            }
        }
        out[i] = acc;
    }
    out
}

/// Gradient of the total pair energy. Hard wells carry no derivative data;
/// at derivative jumps (segment knots) the mean of the one-sided limits is
/// used.
pub fn total_gradient(pot: &Potential, config: &Configuration) -> Result<Vec<Vec2>, PotentialError> {
    if matches!(pot.kind, Kind::HardWell) {
        return Err(PotentialError::NotDifferentiable);
    }
    let pts = config.points();
    let mut grad = vec![Vec2::zeros(); pts.len()];
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let d = pts[i] - pts[j];
            let s = d.norm_squared();
            if s == 0.0 {
                return Err(PotentialError::NonPositiveRadius(0.0));
            }
            let data = pot.evaluate_squared(s)?.finite(s.sqrt())?;
            // ∇_x V(|x−y|) = 2·W′(s)·(x−y)
            let g = 2.0 * data.slope.mean() * d;
            grad[i] += g;
            grad[j] -= g;
        }
    }
    Ok(grad)
}

// ---------------------------------------------------------------------------
// Quadrilaterals and the four-point energy
// ---------------------------------------------------------------------------

/// Four planar points in canonical counter-clockwise order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "QuadrilateralData", into = "QuadrilateralData")]
pub struct Quadrilateral {
    vertices: [Vec2; 4],
}

#[derive(Serialize, Deserialize)]
struct QuadrilateralData {
    vertices: [[f64; 2]; 4],
}

impl From<QuadrilateralData> for Quadrilateral {
    fn from(d: QuadrilateralData) -> Self {
        Quadrilateral { vertices: d.vertices.map(|p| Vec2::new(p[0], p[1])) }
    }
}

impl From<Quadrilateral> for QuadrilateralData {
    fn from(q: Quadrilateral) -> Self {
        QuadrilateralData { vertices: q.vertices.map(|p| [p.x, p.y]) }
    }
}

/// Vertex index pairs forming the four sides (consecutive vertices).
const SIDES: [(usize, usize); 4] = [(0, 1), (1, 2), (2, 3), (3, 0)];
/// Vertex index pairs forming the two diagonals.
const DIAGONALS: [(usize, usize); 2] = [(0, 2), (1, 3)];

impl Quadrilateral {
    /// The axis-aligned square of the given side length centered at the
    /// origin, vertices counter-clockwise from the lower-left.
    pub fn centered_square(side: f64) -> Self {
        let h = side / 2.0;
        Quadrilateral {
            vertices: [
                Vec2::new(-h, -h),
                Vec2::new(h, -h),
                Vec2::new(h, h),
                Vec2::new(-h, h),
            ],
        }
    }

    /// The centered unit square — the reference critical configuration.
    pub fn unit() -> Self {
        Self::centered_square(1.0)
    }

    pub fn vertices(&self) -> &[Vec2; 4] {
        &self.vertices
    }

    pub fn side_lengths(&self) -> [f64; 4] {
        SIDES.map(|(i, j)| (self.vertices[i] - self.vertices[j]).norm())
    }

    pub fn diagonal_lengths(&self) -> [f64; 2] {
        DIAGONALS.map(|(i, j)| (self.vertices[i] - self.vertices[j]).norm())
    }
}

/// Orders four points counter-clockwise around their centroid, starting at
/// the smallest angle in `(−π, π]`; angle ties break toward the centroid
/// first and then by input index. Coincident vertices and zero enclosed
/// area are rejected.
pub fn canonicalize_quadrilateral(points: &[Vec2; 4]) -> Result<Quadrilateral, EnergyError> {
    for i in 0..4 {
        for j in (i + 1)..4 {
            if points[i] == points[j] {
                return Err(EnergyError::Degenerate(format!(
                    "vertices {i} and {j} coincide at ({}, {})",
                    points[i].x, points[i].y
                )));
            }
        }
    }
    let centroid = (points[0] + points[1] + points[2] + points[3]) / 4.0;
    let mut keyed: Vec<(f64, f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let d = p - centroid;
            (d.y.atan2(d.x), d.norm_squared(), i)
        })
        .collect();
    keyed.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).expect("finite keys"));
    let vertices = [
        points[keyed[0].2],
        points[keyed[1].2],
        points[keyed[2].2],
        points[keyed[3].2],
    ];
    let area = crate::geometry::polygon_signed_area(&vertices);
    let diam2 = SIDES
        .iter()
        .chain(DIAGONALS.iter())
        .map(|&(i, j)| (vertices[i] - vertices[j]).norm_squared())
        .fold(0.0f64, f64::max);
    if area.abs() <= 1e-14 * diam2 {
        return Err(EnergyError::Degenerate("the four points enclose no area".into()));
    }
    Ok(Quadrilateral { vertices })
}

/// The four-point energy: sides weighted ½, diagonals weighted 1.
pub fn four_point_energy(pot: &Potential, quad: &Quadrilateral) -> Energy {
    let v = quad.vertices();
    let mut total = 0.0;
    for (pairs, weight) in [(&SIDES[..], 0.5), (&DIAGONALS[..], 1.0)] {
        for &(i, j) in pairs {
            match pair_value(pot, (v[i] - v[j]).norm_squared()) {
                None => return Energy::Infeasible,
                Some(val) => total += weight * val,
            }
        }
    }
    Energy::Finite(total)
}

/// Analytic gradient of the four-point energy with respect to the vertices.
/// Hard wells are rejected; derivative jumps use the mean of the one-sided
/// limits (sides and diagonals of exact squares sit at smooth points of all
/// committed well fixtures, where the mean is the plain derivative).
pub fn four_point_gradient(
    pot: &Potential,
    quad: &Quadrilateral,
) -> Result<[Vec2; 4], PotentialError> {
    if matches!(pot.kind, Kind::HardWell) {
        return Err(PotentialError::NotDifferentiable);
    }
    let v = quad.vertices();
    let mut grad = [Vec2::zeros(); 4];
    for (pairs, weight) in [(&SIDES[..], 0.5), (&DIAGONALS[..], 1.0)] {
        for &(i, j) in pairs {
            let d = v[i] - v[j];
            let s = d.norm_squared();
            if s == 0.0 {
                return Err(PotentialError::NonPositiveRadius(0.0));
            }
            let data = pot.evaluate_squared(s)?.finite(s.sqrt())?;
            let g = 2.0 * weight * data.slope.mean() * d;
            grad[i] += g;
            grad[j] -= g;
        }
    }
    Ok(grad)
}

/// Directional derivative of the four-point energy at the centered unit
/// square along the vertex perturbation `h`. Vanishes for every `h` exactly
/// when `W′(1) + 2W′(2) = 0`.
pub fn square_directional_derivative(
    pot: &Potential,
    h: &[Vec2; 4],
) -> Result<f64, PotentialError> {
    let grad = four_point_gradient(pot, &Quadrilateral::unit())?;
    Ok((0..4).map(|i| grad[i].dot(&h[i])).sum())
}

/// Second-variation bilinear form of the four-point energy at the centered
/// unit square, probed along `h` and read off against `k`.
///
/// Each edge contributes `4·W″·⟨Δh, Δq⟩⟨Δk, Δq⟩ + 2·W′·⟨Δh, Δk⟩` at its
/// squared length; the derivative side is chosen by the sign of `⟨Δh, Δq⟩`
/// (the direction the probe moves the squared length), and edges with
/// `⟨Δh, Δq⟩ = 0` move outward at second order, so their slope is taken
/// from the right. For twice-differentiable wells the form is symmetric;
/// otherwise it is the one-sided form along `ε·h`, `ε ↓ 0`.
pub fn square_hessian_bilinear(
    pot: &Potential,
    h: &[Vec2; 4],
    k: &[Vec2; 4],
) -> Result<f64, PotentialError> {
    if matches!(pot.kind, Kind::HardWell) {
        return Err(PotentialError::NotDifferentiable);
    }
    let q = Quadrilateral::unit();
    let v = q.vertices();
    let mut total = 0.0;
    for (pairs, weight) in [(&SIDES[..], 0.5), (&DIAGONALS[..], 1.0)] {
        for &(i, j) in pairs {
            let dq = v[i] - v[j];
            let dh = h[i] - h[j];
            let dk = k[i] - k[j];
            let s = dq.norm_squared();
            let data = pot.evaluate_squared(s)?.finite(s.sqrt())?;
            let ip = dh.dot(&dq);
            let (w1, w2) = if ip > 0.0 {
                (data.slope.right, data.curvature.right)
            } else if ip < 0.0 {
                (data.slope.left, data.curvature.left)
            } else {
                (data.slope.right, 0.0)
            };
            total += weight * (4.0 * w2 * ip * dk.dot(&dq) + 2.0 * w1 * dh.dot(&dk));
        }
    }
    Ok(total)
}

/// One-sided second derivative `d²/dε² E₄(⊠ + εh)` at `ε = 0⁺`: the
/// quadratic form `square_hessian_bilinear(pot, h, h)`.
pub fn square_hessian_form(pot: &Potential, h: &[Vec2; 4]) -> Result<f64, PotentialError> {
    square_hessian_bilinear(pot, h, h)
}

/// One symmetry-adapted eigenfamily of the four-point Hessian at the
/// centered unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFamily {
    pub label: String,
    /// Dimension of the eigenspace (the families total 8).
    pub dimension: usize,
    /// Eigenvalue computed from the left/right derivative data; the two
    /// coincide for twice-differentiable wells and bracket the one-sided
    /// quadratic forms otherwise.
    pub eigenvalue: Sided,
    /// Whether left and right data agree exactly.
    pub two_sided: bool,
    /// One representative vertex perturbation (rows are `h₁…h₄`).
    pub representative: [[f64; 2]; 4],
}

impl SpectralFamily {
    /// The representative as vertex vectors.
    pub fn mode(&self) -> [Vec2; 4] {
        self.representative.map(|p| Vec2::new(p[0], p[1]))
    }
}

/// The six eigenfamilies of the four-point Hessian at the centered unit
/// square, in closed form from `W′, W″` at squared lengths 1 and 2:
///
/// | family            | dim | eigenvalue                              |
/// |-------------------|-----|-----------------------------------------|
/// | translation       | 2   | 0                                       |
/// | alternating       | 2   | 4(W′(1) + W″(1))                        |
/// | dilation          | 1   | 2W′(1) + 4W′(2) + 4W″(1) + 16W″(2)      |
/// | rotation          | 1   | 2W′(1) + 4W′(2)                         |
/// | axis-mirror       | 1   | 2W′(1) + 4W′(2) + 4W″(1)                |
/// | diagonal-mirror   | 1   | 2W′(1) + 4W′(2) + 16W″(2)               |
///
/// Eigenvalues are Rayleigh quotients `q(h)/|h|²`; at a critical square the
/// rotation eigenvalue vanishes along with the translations.
pub fn square_spectrum(pot: &Potential) -> Result<Vec<SpectralFamily>, PotentialError> {
    if matches!(pot.kind, Kind::HardWell) {
        return Err(PotentialError::NotDifferentiable);
    }
    let d1 = pot.evaluate_squared(1.0)?.finite(1.0)?;
    let d2 = pot.evaluate_squared(2.0)?.finite(std::f64::consts::SQRT_2)?;
    let eig = |p1: f64, p2: f64, c1: f64, c2: f64| -> [f64; 6] {
        let base = 2.0 * p1 + 4.0 * p2;
        [0.0, 4.0 * (p1 + c1), base + 4.0 * c1 + 16.0 * c2, base, base + 4.0 * c1, base + 16.0 * c2]
    };
    let left = eig(d1.slope.left, d2.slope.left, d1.curvature.left, d2.curvature.left);
    let right = eig(d1.slope.right, d2.slope.right, d1.curvature.right, d2.curvature.right);
    let h = 0.5;
    let families: [(&str, usize, [[f64; 2]; 4]); 6] = [
        ("translation", 2, [[1.0, 0.0]; 4]),
        ("alternating", 2, [[1.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]]),
        ("dilation", 1, [[-h, -h], [h, -h], [h, h], [-h, h]]),
        ("rotation", 1, [[h, -h], [h, h], [-h, h], [-h, -h]]),
        ("axis-mirror", 1, [[-h, h], [h, h], [h, -h], [-h, -h]]),
        ("diagonal-mirror", 1, [[-h, -h], [-h, h], [h, h], [h, -h]]),
    ];
    Ok(families
        .iter()
        .enumerate()
        .map(|(k, (label, dimension, representative))| SpectralFamily {
            label: label.to_string(),
            dimension: *dimension,
            eigenvalue: Sided { left: left[k], right: right[k] },
            two_sided: left[k] == right[k],
            representative: *representative,
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Lattice energy and optimal scale
// ---------------------------------------------------------------------------

/// Per-point energy of the scaled square lattice, with its certified
/// truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeEnergy {
    pub scale: f64,
    pub energy: Energy,
    /// Certified bound on the dropped series tail (0 for finite ranges).
    pub truncation: f64,
    /// Largest squared lattice distance actually summed.
    pub last_norm_sq: u64,
}

/// Per-point energy `e(t) = ½·Σ_{v∈Z²∖0} V(t·|v|)` of the square lattice at
/// scale `t`. Finite-range potentials terminate exactly; decaying tails
/// truncate once the envelope bound falls below `tail_tol`. A hard-core
/// violation anywhere makes the energy `Infeasible`.
pub fn lattice_energy_per_point(
    pot: &Potential,
    scale: f64,
    tail_tol: f64,
) -> Result<LatticeEnergy, PotentialError> {
    let mut table = ScaleTable::new();
    lattice_energy_with(pot, scale, tail_tol, &mut table)
}

/// [`lattice_energy_per_point`] with a caller-owned multiplicity table so
/// scale scans share the sieve work.
pub fn lattice_energy_with(
    pot: &Potential,
    scale: f64,
    tail_tol: f64,
    table: &mut ScaleTable,
) -> Result<LatticeEnergy, PotentialError> {
    if !(scale > 0.0) {
        return Err(PotentialError::NonPositiveRadius(scale));
    }
    if !(tail_tol > 0.0) {
        return Err(PotentialError::Invalid("tail tolerance must be positive".into()));
    }
    let envelope = match pot.range {
        potential::Range::Finite { .. } => None,
        potential::Range::Decaying { exponent, .. } => {
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
    let s = scale * scale;
    let support_end = pot.support_end_squared();
    let mut out =
        LatticeEnergy { scale, energy: Energy::Finite(0.0), truncation: 0.0, last_norm_sq: 0 };
    let mut total = 0.0;
    let mut n: u64 = 1;
    let mut next_check: u64 = 1;
    loop {
        if let Some(end) = support_end {
            if s * (n as f64) > end {
                break;
            }
        } else if n >= next_check {
            let k = (n as f64).sqrt().floor() as u64;
            let env = envelope.expect("decaying range implies an envelope");
            // The shell majorant bounds Σ (r₂/4)·|W| over shells ≥ k; the
            // full sum carries the prefactor 2.
            let bound = 2.0 * potential::shell_tail_bound(env, s, k);
            if bound < tail_tol {
                out.truncation = bound;
                break;
            }
            next_check = (k + 1) * (k + 1);
            if n > 100_000_000 {
                return Err(PotentialError::Invalid(format!(
                    "lattice sum truncation bound did not reach {tail_tol} within 1e8 shells"
                )));
            }
        }
        let count = table.raw_count(n);
        if count > 0 {
            match pot.evaluate_squared(s * n as f64)? {
                Eval::Infeasible => {
                    out.energy = Energy::Infeasible;
                    return Ok(out);
                }
                Eval::Finite(d) => {
                    total += 0.5 * count as f64 * d.value;
                    out.last_norm_sq = n;
                }
            }
        }
        n += 1;
    }
    out.energy = Energy::Finite(total);
    Ok(out)
}

/// Result of the optimal-scale search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalScale {
    pub scale: f64,
    pub energy: Energy,
    /// Search bracket actually used.
    pub bracket: (f64, f64),
    /// Whether the minimizer landed within `10·tol` of a bracket end.
    pub on_boundary: bool,
    pub evaluations: u32,
}

/// The default optimal-scale bracket `[1 − α, 1 + α]` for a potential.
pub fn default_scale_bracket(pot: &Potential) -> (f64, f64) {
    (1.0 - pot.params.alpha, 1.0 + pot.params.alpha)
}

/// Minimizes the lattice per-point energy over scales in the bracket by
/// golden-section search, then probes the exact scales 1 and the hard-core
/// radius (hard wells minimize at the closed feasibility edge, which no
/// open search can see) and returns the best. A minimizer within `10·tol`
/// of a bracket end is flagged rather than silently returned.
pub fn optimal_scale(
    pot: &Potential,
    bracket: (f64, f64),
    scale_tol: f64,
    tail_tol: f64,
) -> Result<OptimalScale, PotentialError> {
    if !(scale_tol > 0.0) {
        return Err(PotentialError::Invalid("scale tolerance must be positive".into()));
    }
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(PotentialError::Invalid(format!(
            "scale bracket must satisfy 0 < lo < hi (got {lo}, {hi})"
        )));
    }
    let mut table = ScaleTable::new();
    let mut evaluations = 0u32;
    let eval = |t: f64, table: &mut ScaleTable, evals: &mut u32| -> Result<f64, PotentialError> {
        *evals += 1;
        Ok(lattice_energy_with(pot, t, tail_tol, table)?.energy.or_infinity())
    };

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c, &mut table, &mut evaluations)?;
    let mut fd = eval(d, &mut table, &mut evaluations)?;
    while b - a > scale_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c, &mut table, &mut evaluations)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d, &mut table, &mut evaluations)?;
        }
    }
    let (mut scale, mut best) = if fc < fd { (c, fc) } else { (d, fd) };

    let mut probes = vec![1.0];
    if pot.has_hard_core() {
        probes.push(pot.hard_core_radius);
    }
    for t in probes {
        if (lo..=hi).contains(&t) {
            let f = eval(t, &mut table, &mut evaluations)?;
            if f < best {
                best = f;
                scale = t;
            }
        }
    }

    Ok(OptimalScale {
        scale,
        energy: if best.is_finite() { Energy::Finite(best) } else { Energy::Infeasible },
        bracket: (lo, hi),
        on_boundary: scale - lo < 10.0 * scale_tol || hi - scale < 10.0 * scale_tol,
        evaluations,
    })
}
