//! Metric charts over integer-coordinate embeddings.
//!
//! [`crate::graph::embed_region`] recovers integer coordinates for the
//! interior of a near-lattice configuration. This module turns that
//! combinatorial data into metric objects and measurements:
//!
//! - [`triangulate_chart`] splits every unit cell of the embedded region
//!   along a deterministically chosen diagonal and rejects regions that are
//!   not simply connected;
//! - [`build_affine_map`] extends the vertex data to a piecewise-affine map
//!   from chart coordinates to the plane, repairs a globally reversed
//!   orientation by re-labelling, and reports how far the per-triangle
//!   gradients sit from the rotation group;
//! - [`john_check`] certifies, pair by pair, that small gradient distortion
//!   forces small length distortion over the elliptical neighborhood of the
//!   pair;
//! - [`enumerate_scale_squares`] lists the integer squares of a given side
//!   length (tilted ones included) whose geometry is safely inside the
//!   charted region;
//! - [`quadratic_distortion_check`], [`cardinality_bounds_report`] and
//!   [`taylor_area_check`] measure one large-scale quantity each against a
//!   sum of near-neighbor deformations, reporting the configured and the
//!   empirically realized constants;
//! - [`classify_edges`] sorts every interaction pair by how often the
//!   scale-one squares cover it and re-assembles the total energy from the
//!   per-square energies — an identity that holds to machine precision for
//!   every configuration.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::SQRT_2;
use std::io::Write;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{total_energy, Configuration};
use crate::geometry::{
    convex_hull, convex_polygon_contains, cross, distance_to_rotations, ellipse_boundary,
    heron_area, pair_segment_distance, Vec2,
};
use crate::graph::BondGraph;
use crate::lattice::representation_count;
use crate::potential::{Eval, Potential};

/// Absolute slack used when a measured left side is compared against a
/// right side that is exactly zero up to roundoff (undeformed fixtures).
const NUMERICAL_SLACK: f64 = 1e-11;

/// Errors raised while building charts or running the metric checks.
#[derive(Debug, Error)]
pub enum ChartError {
    /// Two labels were assigned the same integer coordinate.
    #[error("labels {labels:?} share the chart coordinate {coordinate:?}")]
    DuplicateCoordinate { coordinate: (i64, i64), labels: (usize, usize) },
    /// The embedded region has a hole or is disconnected; `witness` is the
    /// lowest cell inside a hole, or a vertex of a separated component.
    #[error(
        "chart region is not simply connected (Euler characteristic \
         {characteristic}, expected 1); witness {witness:?}"
    )]
    NotSimplyConnected { characteristic: i64, witness: (i64, i64) },
    /// A chart label does not index into the configuration.
    #[error("label {label} exceeds the configuration size {points}")]
    LabelOutOfRange { label: usize, points: usize },
    /// A triangle's image in the plane has (numerically) no area.
    #[error("triangle {corners:?} has a degenerate image (signed doubled area {doubled_area:e})")]
    DegenerateTriangle { corners: [usize; 3], doubled_area: f64 },
    /// One triangle reverses orientation while another preserves it, so no
    /// global re-labelling can make the map orientation-preserving.
    #[error("triangle {corners:?} folds against the orientation of the rest of the chart")]
    InconsistentOrientation { corners: [usize; 3] },
    /// A sampled point of the pair ellipse left the domain of the map.
    #[error("ellipse sample ({:.6}, {:.6}) escapes the chart domain", point.0, point.1)]
    EllipseEscapesDomain { point: (f64, f64) },
    /// The gradient strays at least the window width away from the
    /// rotations somewhere on the pair ellipse.
    #[error("gradient distance {observed:.6} from the rotations reaches the window {limit}")]
    GradientDistortionTooLarge { observed: f64, limit: f64 },
    /// No integer vector has the requested squared length.
    #[error("no integer vector has squared length {norm_sq}")]
    ScaleNotRepresentable { norm_sq: u64 },
    /// A label required by a check has no chart coordinate.
    #[error("label {label} is not charted")]
    UnchartedLabel { label: usize },
    /// A configured deformation window is not below its validity limit.
    #[error("window {alpha} is not below the configured limit {limit}")]
    WindowTooWide { alpha: f64, limit: f64 },
    /// The quadrilateral deviates from the reference square by more than
    /// the deformation window allows.
    #[error("pair deformation {observed:.6} exceeds the window {allowed}")]
    DeformationTooLarge { observed: f64, allowed: f64 },
    /// Triangle side lengths violating the triangle inequality.
    #[error("quadrilateral corner triangle with sides {sides:?} is degenerate")]
    DegenerateQuadrilateral { sides: [f64; 3] },
    /// A pair sits inside the hard core (or two points coincide).
    #[error("pair ({p}, {q}) at distance {distance} is infeasible")]
    InfeasiblePair { p: usize, q: usize, distance: f64 },
    /// CSV serialization failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Configured constants for the metric checks. Existence proofs fix none of
/// them, so they are inputs; every report also carries the empirically
/// realized value so the defaults can be tightened from data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartConstants {
    /// Quadratic-distortion constant (side deformation² against the local
    /// deformation sum).
    pub quadratic: f64,
    /// Cardinality/area/crossing constant of the boundary error bounds.
    pub cardinality: f64,
    /// Taylor-area constant (area linearization error against the
    /// deformation sum).
    pub taylor: f64,
    /// Gradient-distortion amplification factor of chart building.
    pub lipschitz: f64,
    /// Validity window for the length-distortion certificate.
    pub john_window: f64,
    /// Validity window for the Taylor-area check.
    pub taylor_window: f64,
    /// Metric radius around a segment within which near-neighbor
    /// deformations are summed (recorded because a combinatorial variant
    /// scaling with the side length is equally defensible).
    pub neighborhood_radius: f64,
    /// Boundary samples used per ellipse-containment certificate.
    pub ellipse_samples: usize,
}

impl Default for ChartConstants {
    fn default() -> Self {
        ChartConstants {
            quadratic: 64.0,
            cardinality: 64.0,
            taylor: 32.0,
            lipschitz: 8.0,
            john_window: 0.05,
            taylor_window: 0.05,
            neighborhood_radius: 4.0,
            ellipse_samples: 64,
        }
    }
}

/// One verified inequality: `lhs ≤ rhs`, with the margin and the measured
/// value of the constant that the right side was configured with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityRecord {
    /// What the inequality measures.
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; nonnegative exactly when the inequality holds.
    pub margin: f64,
    /// `lhs` divided by the right side with its configured constant removed
    /// (the constant that would make the bound tight), when defined.
    pub empirical_constant: Option<f64>,
    pub holds: bool,
}

impl InequalityRecord {
    fn bound(name: &str, lhs: f64, rhs: f64, unit_rhs: Option<f64>) -> Self {
        let empirical_constant = unit_rhs.and_then(|u| (u > 0.0).then_some(lhs / u));
        InequalityRecord {
            inequality: name.to_owned(),
            lhs,
            rhs,
            margin: rhs - lhs,
            empirical_constant,
            holds: lhs <= rhs,
        }
    }
}

/// Writes inequality records as a flat CSV summary for plotting.
pub fn write_inequality_csv<W: Write>(
    records: &[InequalityRecord],
    writer: W,
) -> Result<(), ChartError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["inequality", "lhs", "rhs", "margin", "empirical_constant", "holds"])?;
    for r in records {
        out.write_record([
            r.inequality.clone(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.margin.to_string(),
            r.empirical_constant.map(|c| c.to_string()).unwrap_or_default(),
            r.holds.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Triangulation of the embedded region
// ---------------------------------------------------------------------------

/// Triangulation of an integer-coordinate region: every unit cell split in
/// two along one deterministically chosen diagonal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Triangulation {
    /// Lower-left corners of the unit cells, sorted.
    pub cells: Vec<(i64, i64)>,
    /// Chosen diagonal per cell (endpoint coordinates), aligned with `cells`.
    pub diagonals: Vec<((i64, i64), (i64, i64))>,
    /// Triangles as label triples, two per cell in cell order. The
    /// right-angle corner comes first and the corners wind counter-clockwise
    /// in chart coordinates.
    pub triangles: Vec<[usize; 3]>,
    /// Euler characteristic `V − E + F` of the region complex (always 1).
    pub characteristic: i64,
}

/// Per-cell corner triples of the two triangles: right-angle corner first,
/// counter-clockwise. The diagonal is the one through the corner of even
/// coordinate parity, which makes the choice deterministic and invariant
/// under the mirror re-labelling used to repair orientation.
fn cell_triangles(cell: (i64, i64)) -> ([[(i64, i64); 3]; 2], ((i64, i64), (i64, i64))) {
    let (a, b) = cell;
    if (a + b).rem_euclid(2) == 0 {
        // Diagonal from (a, b): the right angles sit on the other corners.
        (
            [
                [(a + 1, b), (a + 1, b + 1), (a, b)],
                [(a, b + 1), (a, b), (a + 1, b + 1)],
            ],
            ((a, b), (a + 1, b + 1)),
        )
    } else {
        // Diagonal from (a + 1, b), the even-parity corner of this cell.
        (
            [
                [(a, b), (a + 1, b), (a, b + 1)],
                [(a + 1, b + 1), (a, b + 1), (a + 1, b)],
            ],
            ((a + 1, b), (a, b + 1)),
        )
    }
}

/// Splits every unit cell of the coordinate set along the diagonal through
/// its even-parity corner. Fails unless the region complex (vertices, unit
/// edges, filled cells) is simply connected, witnessed by its Euler
/// characteristic; the error carries the lowest cell of an enclosed hole or
/// a vertex of a separated component.
pub fn triangulate_chart(phi: &[(usize, (i64, i64))]) -> Result<Triangulation, ChartError> {
    let mut index: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for &(label, z) in phi {
        if let Some(&other) = index.get(&z) {
            return Err(ChartError::DuplicateCoordinate { coordinate: z, labels: (other, label) });
        }
        index.insert(z, label);
    }
    let has = |z: (i64, i64)| index.contains_key(&z);

    let vertices = index.len() as i64;
    let mut edge_count = 0_i64;
    let mut horizontal: BTreeSet<(i64, i64)> = BTreeSet::new(); // edge {z, z+e₁} keyed by z
    let mut vertical: BTreeSet<(i64, i64)> = BTreeSet::new(); // edge {z, z+e₂} keyed by z
    for &z in index.keys() {
        if has((z.0 + 1, z.1)) {
            horizontal.insert(z);
            edge_count += 1;
        }
        if has((z.0, z.1 + 1)) {
            vertical.insert(z);
            edge_count += 1;
        }
    }
    let cells: Vec<(i64, i64)> = index
        .keys()
        .copied()
        .filter(|&(a, b)| has((a + 1, b)) && has((a, b + 1)) && has((a + 1, b + 1)))
        .collect();

    let characteristic = vertices - edge_count + cells.len() as i64;
    if characteristic != 1 {
        let witness = defect_witness(&index, &horizontal, &vertical, &cells);
        return Err(ChartError::NotSimplyConnected { characteristic, witness });
    }

    let mut diagonals = Vec::with_capacity(cells.len());
    let mut triangles = Vec::with_capacity(2 * cells.len());
    for &cell in &cells {
        let (tris, diagonal) = cell_triangles(cell);
        diagonals.push(diagonal);
        for corners in tris {
            triangles.push([index[&corners[0]], index[&corners[1]], index[&corners[2]]]);
        }
    }
    Ok(Triangulation { cells, diagonals, triangles, characteristic })
}

/// Locates a witness for a failed simple-connectedness check: the lowest
/// complement cell that an outside flood (blocked by present edges) cannot
/// reach, or — when the defect is disconnection — the lowest vertex outside
/// the component of the overall lowest vertex.
fn defect_witness(
    index: &BTreeMap<(i64, i64), usize>,
    horizontal: &BTreeSet<(i64, i64)>,
    vertical: &BTreeSet<(i64, i64)>,
    cells: &[(i64, i64)],
) -> (i64, i64) {
    let cell_set: BTreeSet<(i64, i64)> = cells.iter().copied().collect();
    let xs: Vec<i64> = index.keys().map(|z| z.0).collect();
    let ys: Vec<i64> = index.keys().map(|z| z.1).collect();
    let (x_lo, x_hi) = (xs.iter().min().unwrap() - 2, xs.iter().max().unwrap() + 1);
    let (y_lo, y_hi) = (ys.iter().min().unwrap() - 2, ys.iter().max().unwrap() + 1);

    // Flood the complement cells from the outside margin. Two side-by-side
    // cells communicate unless the unit edge between them is present.
    let mut seen: BTreeSet<(i64, i64)> = BTreeSet::new();
    let mut queue = VecDeque::new();
    let start = (x_lo, y_lo);
    seen.insert(start);
    queue.push_back(start);
    while let Some((a, b)) = queue.pop_front() {
        // Shared edges: left/right neighbors are separated by a vertical
        // edge, up/down neighbors by a horizontal one.
        let moves = [
            ((a - 1, b), vertical.contains(&(a, b))),
            ((a + 1, b), vertical.contains(&(a + 1, b))),
            ((a, b - 1), horizontal.contains(&(a, b))),
            ((a, b + 1), horizontal.contains(&(a, b + 1))),
        ];
        for (next, blocked) in moves {
            if blocked
                || next.0 < x_lo
                || next.0 > x_hi
                || next.1 < y_lo
                || next.1 > y_hi
                || cell_set.contains(&next)
                || !seen.insert(next)
            {
                continue;
            }
            queue.push_back(next);
        }
    }
    for a in x_lo..=x_hi {
        for b in y_lo..=y_hi {
            let cell = (a, b);
            if !cell_set.contains(&cell) && !seen.contains(&cell) {
                return cell;
            }
        }
    }

    // No enclosed hole: the region is disconnected. Walk the component of
    // the lowest vertex and report the lowest vertex left over.
    let first = *index.keys().next().expect("witness search needs a nonempty region");
    let mut component: BTreeSet<(i64, i64)> = BTreeSet::new();
    let mut queue = VecDeque::new();
    component.insert(first);
    queue.push_back(first);
    while let Some((a, b)) = queue.pop_front() {
        let steps = [(a + 1, b), (a - 1, b), (a, b + 1), (a, b - 1)];
        for next in steps {
            if index.contains_key(&next) && component.insert(next) {
                queue.push_back(next);
            }
        }
    }
    index
        .keys()
        .copied()
        .find(|z| !component.contains(z))
        .expect("a connected region with characteristic 1 cannot reach the witness search")
}

// ---------------------------------------------------------------------------
// Piecewise-affine extension
// ---------------------------------------------------------------------------

/// Affine data of one triangle of the chart.
#[derive(Debug, Clone)]
pub struct AffinePiece {
    /// Corner labels, right-angle corner first.
    pub corners: [usize; 3],
    /// Chart coordinates of the corners.
    pub chart_corners: [(i64, i64); 3],
    /// Plane position of the right-angle corner.
    pub plane_corner: Vec2,
    /// Gradient of the plane-ward map (chart coordinates → plane).
    pub to_plane: Matrix2<f64>,
    /// Gradient of the chart-ward inverse (plane → chart coordinates).
    pub to_chart: Matrix2<f64>,
    /// Frobenius distance of the plane-ward gradient from the rotations.
    pub planeward_distance: f64,
    /// Frobenius distance of the chart-ward gradient from the rotations.
    pub chartward_distance: f64,
}

/// Distortion summary of a chart: the suprema over triangles of the
/// Frobenius distances of both gradients from the rotation group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionReport {
    /// Number of triangles measured.
    pub triangles: usize,
    /// `sup` over triangles for the chart-ward gradient.
    pub sup_chartward: f64,
    /// `sup` over triangles for the plane-ward gradient.
    pub sup_planeward: f64,
    /// Whether the chart was re-labelled through `(a, b) ↦ (−a, b)` to make
    /// the map orientation-preserving.
    pub mirrored: bool,
    /// Matrix-distance convention (no canonical choice exists, so it is
    /// recorded with every report).
    pub convention: String,
}

/// A chart with its piecewise-affine extension: integer coordinates per
/// label, a triangulation of the coordinate region, and per-triangle affine
/// maps interpolating the configuration exactly at the vertices.
#[derive(Debug, Clone)]
pub struct DiscreteChart {
    /// Label-to-coordinate assignment, sorted by label (after any mirror
    /// re-labelling).
    phi: Vec<(usize, (i64, i64))>,
    /// Plane positions aligned with `phi`.
    points: Vec<Vec2>,
    /// Coordinate-to-label reverse index.
    index: BTreeMap<(i64, i64), usize>,
    /// The cell triangulation, two pieces per cell aligned with it.
    pub triangulation: Triangulation,
    /// Affine pieces aligned with `triangulation.triangles`.
    pub pieces: Vec<AffinePiece>,
    /// Distortion summary over all pieces.
    pub report: DistortionReport,
}

fn to_vec2(z: (i64, i64)) -> Vec2 {
    Vec2::new(z.0 as f64, z.1 as f64)
}

impl DiscreteChart {
    /// Label-to-coordinate assignments, sorted by label.
    pub fn assignments(&self) -> &[(usize, (i64, i64))] {
        &self.phi
    }

    /// Chart coordinate of a label, if charted.
    pub fn coordinate_of(&self, label: usize) -> Option<(i64, i64)> {
        self.phi
            .binary_search_by_key(&label, |(l, _)| *l)
            .ok()
            .map(|i| self.phi[i].1)
    }

    /// Plane position of a charted label.
    pub fn point_of(&self, label: usize) -> Option<Vec2> {
        self.phi
            .binary_search_by_key(&label, |(l, _)| *l)
            .ok()
            .map(|i| self.points[i])
    }

    /// Label sitting at a chart coordinate, if any.
    pub fn label_at(&self, coordinate: (i64, i64)) -> Option<usize> {
        self.index.get(&coordinate).copied()
    }

    /// All plane positions of charted labels.
    pub fn plane_points(&self) -> &[Vec2] {
        &self.points
    }

    /// The affine piece whose triangle contains the chart point, if any.
    /// Candidate cells come from the floor coordinates, so lookup stays
    /// constant-time over the sorted cell list.
    pub fn piece_at(&self, z: Vec2) -> Option<&AffinePiece> {
        const EPS: f64 = 1e-9;
        let (fa, fb) = (z.x.floor() as i64, z.y.floor() as i64);
        for cell in [(fa, fb), (fa - 1, fb), (fa, fb - 1), (fa - 1, fb - 1)] {
            let Ok(k) = self.triangulation.cells.binary_search(&cell) else {
                continue;
            };
            for piece in &self.pieces[2 * k..2 * k + 2] {
                let c = piece.chart_corners.map(to_vec2);
                let inside = (0..3)
                    .all(|i| cross(c[(i + 1) % 3] - c[i], z - c[i]) >= -EPS);
                if inside {
                    return Some(piece);
                }
            }
        }
        None
    }

    /// Value of the piecewise-affine extension at a chart point, or `None`
    /// outside the triangulated region.
    pub fn evaluate(&self, z: Vec2) -> Option<Vec2> {
        let piece = self.piece_at(z)?;
        Some(piece.plane_corner + piece.to_plane * (z - to_vec2(piece.chart_corners[0])))
    }
}

/// Solves for the affine pieces over a coordinate assignment.
///
/// Each triangle's plane-ward gradient maps the two legs at the right-angle
/// corner onto the corresponding position differences; the chart-ward
/// gradient is its inverse, and the distance of either from the rotation
/// group measures the local distortion. When every triangle reverses
/// orientation the assignment is composed with `(a, b) ↦ (−a, b)`, which
/// leaves lengths and the diagonal rule untouched but flips the sign of the
/// determinant; mixed orientations cannot be repaired and are an error.
pub fn build_affine_map(
    phi: &[(usize, (i64, i64))],
    x: &Configuration,
) -> Result<DiscreteChart, ChartError> {
    for &(label, _) in phi {
        if label >= x.len() {
            return Err(ChartError::LabelOutOfRange { label, points: x.len() });
        }
    }
    let triangulation = triangulate_chart(phi)?;

    // Orientation survey on the raw assignment: the plane-ward determinant
    // of a counter-clockwise chart triangle is twice the signed area of its
    // image.
    let mut orientation: Option<bool> = None;
    {
        let coord: BTreeMap<usize, (i64, i64)> = phi.iter().copied().collect();
        for tri in &triangulation.triangles {
            let y = tri.map(|l| x.points()[l]);
            let doubled = cross(y[1] - y[0], y[2] - y[0]);
            let scale = (y[1] - y[0]).norm_squared().max((y[2] - y[0]).norm_squared());
            if doubled.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(ChartError::DegenerateTriangle {
                    corners: *tri,
                    doubled_area: doubled,
                });
            }
            let preserves = doubled > 0.0;
            match orientation {
                None => orientation = Some(preserves),
                Some(seen) if seen != preserves => {
                    return Err(ChartError::InconsistentOrientation { corners: *tri })
                }
                Some(_) => {}
            }
        }
        // A chart with no cells has nothing to orient; treat as preserving.
        let _ = coord;
    }
    let mirrored = orientation == Some(false);

    let mut phi_fixed: Vec<(usize, (i64, i64))> = phi
        .iter()
        .map(|&(l, (a, b))| (l, if mirrored { (-a, b) } else { (a, b) }))
        .collect();
    phi_fixed.sort_unstable();
    let triangulation = if mirrored { triangulate_chart(&phi_fixed)? } else { triangulation };

    let index: BTreeMap<(i64, i64), usize> = phi_fixed.iter().map(|&(l, z)| (z, l)).collect();
    let points: Vec<Vec2> = phi_fixed.iter().map(|&(l, _)| x.points()[l]).collect();
    let coord_of: BTreeMap<usize, (i64, i64)> = phi_fixed.iter().copied().collect();

    let mut pieces = Vec::with_capacity(triangulation.triangles.len());
    let mut sup_chartward = 0.0_f64;
    let mut sup_planeward = 0.0_f64;
    for tri in &triangulation.triangles {
        let z = tri.map(|l| to_vec2(coord_of[&l]));
        let y = tri.map(|l| x.points()[l]);
        let legs_chart = Matrix2::from_columns(&[z[1] - z[0], z[2] - z[0]]);
        let legs_plane = Matrix2::from_columns(&[y[1] - y[0], y[2] - y[0]]);
        let doubled = legs_plane.determinant();
        let scale = (y[1] - y[0]).norm_squared().max((y[2] - y[0]).norm_squared());
        if doubled.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(ChartError::DegenerateTriangle { corners: *tri, doubled_area: doubled });
        }
        let to_plane = legs_plane
            * legs_chart.try_inverse().expect("unit-leg chart triangles are unimodular");
        let to_chart = legs_chart
            * legs_plane.try_inverse().expect("nondegenerate image triangle");
        let planeward_distance = distance_to_rotations(&to_plane);
        let chartward_distance = distance_to_rotations(&to_chart);
        sup_planeward = sup_planeward.max(planeward_distance);
        sup_chartward = sup_chartward.max(chartward_distance);
        pieces.push(AffinePiece {
            corners: *tri,
            chart_corners: tri.map(|l| coord_of[&l]),
            plane_corner: y[0],
            to_plane,
            to_chart,
            planeward_distance,
            chartward_distance,
        });
    }

    let report = DistortionReport {
        triangles: pieces.len(),
        sup_chartward,
        sup_planeward,
        mirrored,
        convention: "frobenius: sqrt((s1-1)^2 + (s2-1)^2) over singular values".to_owned(),
    };
    Ok(DiscreteChart { phi: phi_fixed, points, index, triangulation, pieces, report })
}

// ---------------------------------------------------------------------------
// Length-distortion certificate over pair ellipses
// ---------------------------------------------------------------------------

/// A map from chart coordinates to the plane that can report its domain and
/// the local gradient distance from the rotations.
pub trait ChartMap {
    /// Value at a chart point, `None` outside the domain.
    fn value(&self, z: Vec2) -> Option<Vec2>;
    /// Frobenius distance of the gradient from the rotations at a chart
    /// point, `None` outside the domain.
    fn gradient_distance(&self, z: Vec2) -> Option<f64>;
}

impl ChartMap for DiscreteChart {
    fn value(&self, z: Vec2) -> Option<Vec2> {
        self.evaluate(z)
    }

    fn gradient_distance(&self, z: Vec2) -> Option<f64> {
        self.piece_at(z).map(|p| p.planeward_distance)
    }
}

/// A globally affine map on the whole plane; the control cases of the
/// length-distortion certificate (isometries pass, inflations fail).
#[derive(Debug, Clone)]
pub struct GlobalAffine {
    pub matrix: Matrix2<f64>,
    pub offset: Vec2,
}

impl GlobalAffine {
    /// Rotation by `angle` about the origin plus `offset`.
    pub fn isometry(angle: f64, offset: Vec2) -> Self {
        let (s, c) = angle.sin_cos();
        GlobalAffine { matrix: Matrix2::new(c, -s, s, c), offset }
    }

    /// Uniform scaling by `factor` about the origin.
    pub fn scaling(factor: f64) -> Self {
        GlobalAffine { matrix: Matrix2::new(factor, 0.0, 0.0, factor), offset: Vec2::zeros() }
    }
}

impl ChartMap for GlobalAffine {
    fn value(&self, z: Vec2) -> Option<Vec2> {
        Some(self.matrix * z + self.offset)
    }

    fn gradient_distance(&self, _z: Vec2) -> Option<f64> {
        Some(distance_to_rotations(&self.matrix))
    }
}

/// Outcome of the length-distortion certificate for one pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JohnVerdict {
    /// Distortion window the certificate was checked against.
    pub alpha: f64,
    /// Chart-space separation of the pair.
    pub separation: f64,
    /// Plane-space separation of the images.
    pub image_separation: f64,
    /// Length distortion `||u(a) − u(b)| − |a − b||`.
    pub delta: f64,
    /// Largest gradient distance from the rotations over the probe cloud.
    pub sup_gradient_distance: f64,
    /// Number of probe points certifying the two hypotheses.
    pub probes: usize,
    /// Whether `delta ≤ alpha`.
    pub holds: bool,
    /// `alpha − delta`.
    pub margin: f64,
}

/// Certifies that gradient distortion below the window forces length
/// distortion of the pair below the same window.
///
/// Both hypotheses are checked over a probe cloud — concentric rings of the
/// pair ellipse, the chord, and the foci; the gradient of a chart is
/// piecewise constant, so modest sampling certifies it. Any probe outside
/// the domain, or with gradient distance reaching the window, is a
/// precondition error. The verdict itself can still fail (`holds = false`):
/// a near-isometric gradient bound limits the length distortion of a pair
/// only while the window stays small relative to the pair ellipse, and the
/// failure of a uniform inflation over a long chord is the sharp example.
pub fn john_check(
    map: &dyn ChartMap,
    a: Vec2,
    b: Vec2,
    alpha: f64,
    boundary_samples: usize,
) -> Result<JohnVerdict, ChartError> {
    let center = 0.5 * (a + b);
    let mut probes: Vec<Vec2> = Vec::new();
    for ring in 1..=4 {
        let scale = ring as f64 / 4.0;
        for s in ellipse_boundary(a, b, alpha, boundary_samples.max(8)) {
            probes.push(center + scale * (s - center));
        }
    }
    let chord_steps = ((b - a).norm() * 4.0).ceil().max(1.0) as usize;
    for k in 0..=chord_steps {
        probes.push(a + (k as f64 / chord_steps as f64) * (b - a));
    }
    probes.push(center);

    let mut sup_gradient_distance = 0.0_f64;
    for &z in &probes {
        if map.value(z).is_none() {
            return Err(ChartError::EllipseEscapesDomain { point: (z.x, z.y) });
        }
        let Some(d) = map.gradient_distance(z) else {
            return Err(ChartError::EllipseEscapesDomain { point: (z.x, z.y) });
        };
        sup_gradient_distance = sup_gradient_distance.max(d);
    }
    if sup_gradient_distance >= alpha {
        return Err(ChartError::GradientDistortionTooLarge {
            observed: sup_gradient_distance,
            limit: alpha,
        });
    }

    let ua = map.value(a).expect("focus passed the domain check");
    let ub = map.value(b).expect("focus passed the domain check");
    let separation = (a - b).norm();
    let image_separation = (ua - ub).norm();
    let delta = (image_separation - separation).abs();
    Ok(JohnVerdict {
        alpha,
        separation,
        image_separation,
        delta,
        sup_gradient_distance,
        probes: probes.len(),
        holds: delta <= alpha,
        margin: alpha - delta,
    })
}

// ---------------------------------------------------------------------------
// Scale squares
// ---------------------------------------------------------------------------

/// Four charted labels whose coordinates form an integer square of side
/// `√norm_sq`, with its geometry certified to sit inside the charted region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleSquare {
    /// Corner labels in counter-clockwise cyclic order.
    pub labels: [usize; 4],
    /// Squared side length (integer).
    pub norm_sq: u64,
    /// Side length.
    pub scale: f64,
    /// Chart coordinates of the corners, cyclic order matching `labels`.
    pub chart_corners: [(i64, i64); 4],
    /// Side label pairs (each stored `(min, max)`).
    pub sides: [(usize, usize); 4],
    /// Diagonal label pairs (each stored `(min, max)`).
    pub diagonals: [(usize, usize); 2],
    /// Realized deformation: the largest deviation of a pair distance from
    /// its reference (side `r` or diagonal `√2·r`).
    pub deformation: f64,
}

fn ordered(p: usize, q: usize) -> (usize, usize) {
    (p.min(q), p.max(q))
}

/// Integer square roots for small inputs (scale enumerations).
fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Enumerates every integer square of squared side `norm_sq` whose corners
/// are charted, whose convex hull covers only charted coordinates, and whose
/// six pair ellipses stay inside the convex hull of the charted plane
/// points. Tilted squares are found through one side vector per quarter-turn
/// class; each square is produced exactly once, in deterministic order.
pub fn enumerate_scale_squares(
    chart: &DiscreteChart,
    norm_sq: u64,
    alpha: f64,
    boundary_samples: usize,
) -> Result<Vec<ScaleSquare>, ChartError> {
    if norm_sq == 0 || representation_count(norm_sq).unwrap_or(0) == 0 {
        return Err(ChartError::ScaleNotRepresentable { norm_sq });
    }
    let scale = (norm_sq as f64).sqrt();
    let hull = convex_hull(chart.plane_points());
    let samples = boundary_samples.max(8);

    // One representative side vector per quarter-turn class: a > 0, b ≥ 0.
    let mut orientations: Vec<(i64, i64)> = Vec::new();
    for a in 1..=isqrt(norm_sq) as i64 {
        let rest = norm_sq - (a * a) as u64;
        let b = isqrt(rest) as i64;
        if (b * b) as u64 == rest {
            orientations.push((a, b));
        }
    }

    let mut squares = Vec::new();
    for &(_, base) in chart.assignments() {
        'candidate: for &(va, vb) in &orientations {
            let v = (va, vb);
            let w = (-vb, va);
            let corners = [
                base,
                (base.0 + v.0, base.1 + v.1),
                (base.0 + v.0 + w.0, base.1 + v.1 + w.1),
                (base.0 + w.0, base.1 + w.1),
            ];
            let mut labels = [0_usize; 4];
            for (slot, &c) in labels.iter_mut().zip(&corners) {
                match chart.label_at(c) {
                    Some(l) => *slot = l,
                    None => continue 'candidate,
                }
            }

            // Every integer point of the square's hull must be charted.
            let poly = corners.map(to_vec2);
            let (x_lo, x_hi) = (
                corners.iter().map(|c| c.0).min().unwrap(),
                corners.iter().map(|c| c.0).max().unwrap(),
            );
            let (y_lo, y_hi) = (
                corners.iter().map(|c| c.1).min().unwrap(),
                corners.iter().map(|c| c.1).max().unwrap(),
            );
            for gx in x_lo..=x_hi {
                for gy in y_lo..=y_hi {
                    if convex_polygon_contains(&poly, to_vec2((gx, gy)), 1e-9)
                        && chart.label_at((gx, gy)).is_none()
                    {
                        continue 'candidate;
                    }
                }
            }

            // Every pair ellipse must stay inside the charted plane hull.
            let pts = labels.map(|l| chart.point_of(l).expect("corner labels are charted"));
            let mut deformation = 0.0_f64;
            for i in 0..4 {
                for j in (i + 1)..4 {
                    for s in ellipse_boundary(pts[i], pts[j], alpha, samples) {
                        if !convex_polygon_contains(&hull, s, 1e-9) {
                            continue 'candidate;
                        }
                    }
                    let reference =
                        if (i + 2) % 4 == j { SQRT_2 * scale } else { scale };
                    deformation =
                        deformation.max(((pts[i] - pts[j]).norm() - reference).abs());
                }
            }

            squares.push(ScaleSquare {
                labels,
                norm_sq,
                scale,
                chart_corners: corners,
                sides: [
                    ordered(labels[0], labels[1]),
                    ordered(labels[1], labels[2]),
                    ordered(labels[2], labels[3]),
                    ordered(labels[3], labels[0]),
                ],
                diagonals: [ordered(labels[0], labels[2]), ordered(labels[1], labels[3])],
                deformation,
            });
        }
    }
    squares.sort_by_key(|s| s.chart_corners);
    Ok(squares)
}

// ---------------------------------------------------------------------------
// Quadratic distortion
// ---------------------------------------------------------------------------

/// Outcome of the quadratic-distortion estimate for one square side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadraticDistortionVerdict {
    /// The measured side (label pair).
    pub pair: (usize, usize),
    /// Base scale `r` of the square family the side belongs to.
    pub scale: f64,
    /// Squared length distortion of the side.
    pub lhs: f64,
    /// Budget: constant × scale × local deformation sum.
    pub rhs: f64,
    /// Metric radius within which bond deformations are summed (recorded).
    pub neighborhood_radius: f64,
    /// Bonds contributing to the sum.
    pub edges_in_sum: usize,
    /// Bonds within the radius skipped for missing chart coordinates.
    pub skipped_uncharted: usize,
    /// Configured constant.
    pub constant: f64,
    /// `lhs / (scale × deformation sum)` when the sum is positive.
    pub empirical_constant: Option<f64>,
    pub holds: bool,
}

/// Squared deviation of a charted pair's plane distance from its chart
/// distance.
fn charted_delta_sq(chart: &DiscreteChart, x: &Configuration, p: usize, q: usize) -> Option<f64> {
    let zp = chart.coordinate_of(p)?;
    let zq = chart.coordinate_of(q)?;
    let ideal = (((zp.0 - zq.0).pow(2) + (zp.1 - zq.1).pow(2)) as f64).sqrt();
    let d = (x.points()[p] - x.points()[q]).norm();
    Some((d - ideal).powi(2))
}

/// Measures the squared length distortion of one square side against the
/// sum of squared bond deformations near the side's segment, scaled by the
/// configured constant and the base scale of the square family.
pub fn quadratic_distortion_check(
    x: &Configuration,
    graph: &BondGraph,
    chart: &DiscreteChart,
    pair: (usize, usize),
    scale: f64,
    constants: &ChartConstants,
) -> Result<QuadraticDistortionVerdict, ChartError> {
    let lhs = charted_delta_sq(chart, x, pair.0, pair.1).ok_or(ChartError::UnchartedLabel {
        label: if chart.coordinate_of(pair.0).is_none() { pair.0 } else { pair.1 },
    })?;
    let (xa, xb) = (x.points()[pair.0], x.points()[pair.1]);

    let mut sum = 0.0_f64;
    let mut edges_in_sum = 0_usize;
    let mut skipped_uncharted = 0_usize;
    for &(p, q) in graph.edges() {
        let (xp, xq) = (x.points()[p], x.points()[q]);
        if pair_segment_distance(xp, xq, xa, xb) >= constants.neighborhood_radius {
            continue;
        }
        match charted_delta_sq(chart, x, p, q) {
            Some(d2) => {
                sum += d2;
                edges_in_sum += 1;
            }
            None => skipped_uncharted += 1,
        }
    }

    let rhs = constants.quadratic * scale * sum;
    Ok(QuadraticDistortionVerdict {
        pair: ordered(pair.0, pair.1),
        scale,
        lhs,
        rhs,
        neighborhood_radius: constants.neighborhood_radius,
        edges_in_sum,
        skipped_uncharted,
        constant: constants.quadratic,
        empirical_constant: (scale * sum > 0.0).then_some(lhs / (scale * sum)),
        holds: lhs <= rhs + NUMERICAL_SLACK * lhs.max(1.0).min(1.0),
    })
}

// ---------------------------------------------------------------------------
// Cardinality and area bounds
// ---------------------------------------------------------------------------

/// Counting and area comparisons between the scale-one squares and the
/// squares at a larger scale, each bounded by the boundary size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CardinalityReport {
    /// Squared side length of the larger scale.
    pub norm_sq: u64,
    /// Side length `r`.
    pub scale: f64,
    /// Quarter-turn orientation classes at that scale.
    pub multiplicity: u64,
    /// Number of scale-one squares.
    pub unit_squares: usize,
    /// Number of scale-`r` squares.
    pub scale_squares: usize,
    /// Number of boundary labels of the bond graph.
    pub boundary_count: usize,
    /// Whether the minimum pair distance clears `1 − α`.
    pub min_distance_ok: bool,
    /// Whether `α` sits below the configured validity window.
    pub alpha_ok: bool,
    /// Metric radius of the square-neighborhood count (recorded).
    pub neighborhood_radius: f64,
    /// The verified inequalities.
    pub records: Vec<InequalityRecord>,
}

fn orient_sign(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    cross(b - a, c - a)
}

/// Closed-segment intersection test (shared endpoints count).
fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    const EPS: f64 = 1e-12;
    let d1 = orient_sign(q1, q2, p1);
    let d2 = orient_sign(q1, q2, p2);
    let d3 = orient_sign(p1, p2, q1);
    let d4 = orient_sign(p1, p2, q2);
    if ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS))
        && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS))
    {
        return true;
    }
    let within = |a: Vec2, b: Vec2, p: Vec2| {
        p.x >= a.x.min(b.x) - EPS
            && p.x <= a.x.max(b.x) + EPS
            && p.y >= a.y.min(b.y) - EPS
            && p.y <= a.y.max(b.y) + EPS
    };
    (d1.abs() <= EPS && within(q1, q2, p1))
        || (d2.abs() <= EPS && within(q1, q2, p2))
        || (d3.abs() <= EPS && within(p1, p2, q1))
        || (d4.abs() <= EPS && within(p1, p2, q2))
}

/// Minimum distance between two closed segments.
fn segment_segment_distance(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    pair_segment_distance(p1, p2, q1, q2).min(pair_segment_distance(q1, q2, p1, p2))
}

/// Distance between the convex hull of a square's plane corners and a
/// segment: zero when they touch, else the least edge-to-segment distance.
fn quad_segment_distance(corners: &[Vec2; 4], a: Vec2, b: Vec2) -> f64 {
    if convex_polygon_contains(&corners[..], a, 1e-12) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let (c, d) = (corners[i], corners[(i + 1) % 4]);
        best = best.min(segment_segment_distance(c, d, a, b));
        if best == 0.0 {
            return 0.0;
        }
    }
    best
}

/// Shoelace area of the square's plane image in its cyclic corner order.
fn square_area(x: &Configuration, square: &ScaleSquare) -> f64 {
    let pts = square.labels.map(|l| x.points()[l]);
    crate::geometry::polygon_signed_area(&pts).abs()
}

/// Compares counts, areas, side crossings, square neighborhoods, and the
/// side/diagonal exchange between scale one and scale `√norm_sq`, bounding
/// every defect by the boundary size with the configured constant.
pub fn cardinality_bounds_report(
    x: &Configuration,
    graph: &BondGraph,
    chart: &DiscreteChart,
    norm_sq: u64,
    constants: &ChartConstants,
) -> Result<CardinalityReport, ChartError> {
    let alpha = graph.alpha();
    let unit = enumerate_scale_squares(chart, 1, alpha, constants.ellipse_samples)?;
    let at_scale = enumerate_scale_squares(chart, norm_sq, alpha, constants.ellipse_samples)?;
    let doubled = enumerate_scale_squares(chart, 2 * norm_sq, alpha, constants.ellipse_samples)?;
    let multiplicity = crate::lattice::pair_multiplicity(norm_sq)
        .map_err(|_| ChartError::ScaleNotRepresentable { norm_sq })?;
    let scale = (norm_sq as f64).sqrt();
    let m = multiplicity as f64;
    let boundary_count = graph.boundary().len();
    let boundary = boundary_count as f64;
    let c = constants.cardinality;

    let pts = x.points();
    let mut min_distance = f64::INFINITY;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            min_distance = min_distance.min((pts[i] - pts[j]).norm());
        }
    }
    let min_distance_ok = pts.len() < 2 || min_distance > 1.0 - alpha;
    let alpha_ok = alpha < constants.john_window;

    let mut records = Vec::new();

    // Count gap: orientations × unit squares, minus the larger squares that
    // actually fit; boundary effects are the only loss.
    let count_gap = m * unit.len() as f64 - at_scale.len() as f64;
    records.push(InequalityRecord::bound("scale-count-gap-lower", 0.0, count_gap, None));
    let unit_rhs = scale * scale * m * boundary;
    records.push(InequalityRecord::bound(
        "scale-count-gap-upper",
        count_gap,
        c * unit_rhs,
        Some(unit_rhs),
    ));

    // Area gap, with the same structure after weighting unit areas by r²m.
    let unit_area: f64 = unit.iter().map(|q| square_area(x, q)).sum();
    let scale_area: f64 = at_scale.iter().map(|q| square_area(x, q)).sum();
    let area_gap = scale * scale * m * unit_area - scale_area;
    records.push(InequalityRecord::bound("scale-area-gap-lower", 0.0, area_gap, None));
    let unit_rhs = scale.powi(4) * m * boundary;
    records.push(InequalityRecord::bound(
        "scale-area-gap-upper",
        area_gap,
        c * unit_rhs,
        Some(unit_rhs),
    ));

    // Unit sides crossing a larger side: the larger segment has length r and
    // meets unit-length segments of separated endpoints, so the count grows
    // linearly in r.
    let unit_sides: BTreeSet<(usize, usize)> =
        unit.iter().flat_map(|q| q.sides).collect();
    let mut max_crossings = 0_usize;
    for square in &at_scale {
        for &(a, b) in &square.sides {
            let crossings = unit_sides
                .iter()
                .filter(|&&(p, q)| segments_intersect(pts[p], pts[q], pts[a], pts[b]))
                .count();
            max_crossings = max_crossings.max(crossings);
        }
    }
    records.push(InequalityRecord::bound(
        "side-crossing-count",
        max_crossings as f64,
        c * scale,
        Some(scale),
    ));

    // Larger squares passing near one unit square: count the distinct
    // squares with an edge segment within the recorded radius of the unit
    // square's hull (the square itself excluded when scales coincide).
    let mut max_near = 0_usize;
    for cell in &unit {
        let hull = cell.labels.map(|l| pts[l]);
        let mut near = 0_usize;
        for square in &at_scale {
            if square.labels == cell.labels {
                continue;
            }
            let mut meets = false;
            'pairs: for i in 0..4 {
                for j in (i + 1)..4 {
                    let (p, q) = (pts[square.labels[i]], pts[square.labels[j]]);
                    if quad_segment_distance(&hull, p, q) < constants.neighborhood_radius {
                        meets = true;
                        break 'pairs;
                    }
                }
            }
            if meets {
                near += 1;
            }
        }
        max_near = max_near.max(near);
    }
    records.push(InequalityRecord::bound(
        "square-neighborhood-count",
        max_near as f64,
        c * scale * m,
        Some(scale * m),
    ));

    // Sides at scale √2·r against diagonals at scale r: deep inside the
    // chart the two sets coincide and every mismatch hugs the boundary.
    let double_sides: BTreeSet<(usize, usize)> =
        doubled.iter().flat_map(|q| q.sides).collect();
    let scale_diagonals: BTreeSet<(usize, usize)> =
        at_scale.iter().flat_map(|q| q.diagonals).collect();
    let mismatch = double_sides.symmetric_difference(&scale_diagonals).count();
    let unit_rhs = scale * scale * boundary;
    records.push(InequalityRecord::bound(
        "side-diagonal-mismatch",
        mismatch as f64,
        c * unit_rhs,
        Some(unit_rhs),
    ));

    Ok(CardinalityReport {
        norm_sq,
        scale,
        multiplicity,
        unit_squares: unit.len(),
        scale_squares: at_scale.len(),
        boundary_count,
        min_distance_ok,
        alpha_ok,
        neighborhood_radius: constants.neighborhood_radius,
        records,
    })
}

// ---------------------------------------------------------------------------
// Taylor-area check
// ---------------------------------------------------------------------------

/// A radial function with the derivative data the area check needs.
pub trait RadialFunction {
    fn value_at(&self, r: f64) -> f64;
    /// First derivative (mean of one-sided limits at kinks).
    fn slope_at(&self, r: f64) -> f64;
    /// Upper bound for |second derivative| over `[lo, hi]`.
    fn curvature_bound(&self, lo: f64, hi: f64) -> f64;
}

impl RadialFunction for Potential {
    fn value_at(&self, r: f64) -> f64 {
        self.value(r).unwrap_or(f64::INFINITY)
    }

    fn slope_at(&self, r: f64) -> f64 {
        self.slope(r).unwrap_or(f64::INFINITY)
    }

    /// Sampled bound: the committed wells are piecewise quadratic in the
    /// squared variable, so curvature varies slowly and a dense grid with
    /// both one-sided limits at each probe is an honest supremum.
    fn curvature_bound(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(f64::MIN_POSITIVE);
        let hi = hi.max(lo);
        let mut sup = 0.0_f64;
        for k in 0..=256 {
            let r = lo + (hi - lo) * (k as f64) / 256.0;
            match self.evaluate(r) {
                Ok(Eval::Finite(d)) => {
                    sup = sup.max(d.curvature.left.abs()).max(d.curvature.right.abs());
                }
                _ => return f64::INFINITY,
            }
        }
        sup
    }
}

/// Outcome of the Taylor-area check for one deformed square.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaylorVerdict {
    /// Reference side length.
    pub scale: f64,
    /// Deformation window the quadrilateral was validated against.
    pub alpha: f64,
    /// Largest pair deviation from the reference square.
    pub deformation: f64,
    /// Area from side lengths (mean over the four corner triangles).
    pub area: f64,
    /// `area − r²`.
    pub area_gap: f64,
    /// Linearization defect (see [`taylor_area_check`]).
    pub lhs: f64,
    /// Budget: constant × derivative budget × deformation sum.
    pub rhs: f64,
    /// `Σ δ²` over all six pairs.
    pub delta_sq_sum: f64,
    /// `|v′(r)|/r + sup |v″|` over the deformed length range.
    pub derivative_budget: f64,
    /// Configured constant.
    pub constant: f64,
    /// `lhs / (derivative budget × deformation sum)` when defined.
    pub empirical_constant: Option<f64>,
    pub holds: bool,
}

/// Area of a quadrilateral from its side lengths alone: half the sum of the
/// four corner-triangle areas. Averaging both diagonal splits makes the
/// result independent of the split choice.
pub fn quadrilateral_area_by_heron(quad: &[Vec2; 4]) -> Result<f64, ChartError> {
    let d = |i: usize, j: usize| (quad[i] - quad[j]).norm();
    let mut acc = 0.0;
    for t in [[0, 1, 2], [1, 2, 3], [2, 3, 0], [3, 0, 1]] {
        let sides = [d(t[0], t[1]), d(t[1], t[2]), d(t[0], t[2])];
        acc += heron_area(sides[0], sides[1], sides[2])
            .ok_or(ChartError::DegenerateQuadrilateral { sides })?;
    }
    Ok(0.5 * acc)
}

/// Checks that the area linearization absorbs the side sum of a radial
/// function over a deformed square up to a quadratic deformation budget.
///
/// The corners must be a cyclic `α`-deformation of the square `{0, r}²`
/// (sides within `α` of `r`, diagonals within `α` of `√2·r`). Each side lies
/// in two of the four area triangles and the area derivative along a side
/// equals `Area/r` there, so the area linearizes as `(r/2)·Σ_sides δ` while
/// the diagonals drop out; the factor `2v′(r)/r` below therefore cancels the
/// side sum to first order, leaving a defect controlled by `Σ δ²`.
pub fn taylor_area_check(
    v: &dyn RadialFunction,
    quad: &[Vec2; 4],
    scale: f64,
    alpha: f64,
    constants: &ChartConstants,
) -> Result<TaylorVerdict, ChartError> {
    if alpha >= constants.taylor_window {
        return Err(ChartError::WindowTooWide { alpha, limit: constants.taylor_window });
    }
    let d = |i: usize, j: usize| (quad[i] - quad[j]).norm();
    let mut deformation = 0.0_f64;
    let mut delta_sq_sum = 0.0_f64;
    let mut side_sum = 0.0_f64;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let len = d(i, j);
            let reference = if (i + 2) % 4 == j { SQRT_2 * scale } else { scale };
            let delta = (len - reference).abs();
            deformation = deformation.max(delta);
            delta_sq_sum += delta * delta;
            if (i + 2) % 4 != j {
                side_sum += v.value_at(len);
            }
        }
    }
    if deformation > alpha {
        return Err(ChartError::DeformationTooLarge { observed: deformation, allowed: alpha });
    }

    let area = quadrilateral_area_by_heron(quad)?;
    let area_gap = area - scale * scale;
    let slope = v.slope_at(scale);
    let lhs = (2.0 * slope / scale * area_gap + 4.0 * v.value_at(scale) - side_sum).abs();

    let lo = (scale - alpha).min(scale * (1.0 - alpha)).max(f64::MIN_POSITIVE);
    let hi = (SQRT_2 * scale + alpha).max(scale * (SQRT_2 + alpha));
    let derivative_budget = slope.abs() / scale + v.curvature_bound(lo, hi);
    let rhs = constants.taylor * derivative_budget * delta_sq_sum;
    let slack = NUMERICAL_SLACK * (1.0 + derivative_budget * scale * scale);
    Ok(TaylorVerdict {
        scale,
        alpha,
        deformation,
        area,
        area_gap,
        lhs,
        rhs,
        delta_sq_sum,
        derivative_budget,
        constant: constants.taylor,
        empirical_constant: (derivative_budget * delta_sq_sum > 0.0)
            .then_some(lhs / (derivative_budget * delta_sq_sum)),
        holds: lhs <= rhs + slack,
    })
}

// ---------------------------------------------------------------------------
// Edge classification and the exact resummation identity
// ---------------------------------------------------------------------------

/// How often the scale-one squares cover a pair, in half-weights: a side
/// appearance counts one, a diagonal appearance two. Fully covered pairs
/// need no correction; the rest are re-added with the complementary weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverClass {
    /// Covered twice (full weight) by the square sum.
    Covered,
    /// Covered once; re-added with weight one half.
    HalfCovered,
    /// In the bond window but in no square; re-added with full weight.
    Uncovered,
    /// In the long window past the diagonals; always outside the squares.
    Long,
    /// Outside every interaction window (tail pairs, or below the bond
    /// window); re-added with full weight.
    Outside,
}

/// One pair with its cover multiplicity and class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeCover {
    pub p: usize,
    pub q: usize,
    pub distance: f64,
    /// Half-weight cover count from square membership.
    pub multiplicity: u32,
    pub class: CoverClass,
}

/// The re-assembled total energy: per-square energies plus the weighted
/// sums over partially covered pairs. The residual against the directly
/// computed total is a machine-precision identity for every configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResummationIdentity {
    /// Directly computed total pair energy.
    pub total: f64,
    /// Sum of four-point energies over the scale-one squares.
    pub square_sum: f64,
    /// Sum of pair values over half-covered pairs (re-added × ½).
    pub half_covered_sum: f64,
    /// Sum over uncovered bond-window pairs.
    pub uncovered_sum: f64,
    /// Sum over long-window pairs.
    pub long_sum: f64,
    /// Sum over pairs outside every window.
    pub outside_sum: f64,
    /// Correction for pairs covered more than twice (zero in honest
    /// geometry; kept so the identity stays exact unconditionally).
    pub overcover_adjustment: f64,
    /// `total − reassembled`.
    pub residual: f64,
    pub covered: usize,
    pub half_covered: usize,
    pub uncovered: usize,
    pub long: usize,
    pub outside: usize,
    /// Pairs covered more than twice.
    pub overcovered: usize,
    /// Pairs with positive multiplicity or within the graph's reach,
    /// sorted by label pair.
    pub edges: Vec<EdgeCover>,
}

/// Classifies every pair by its cover multiplicity under the scale-one
/// squares and verifies the exact resummation of the total energy.
pub fn classify_edges(
    pot: &Potential,
    x: &Configuration,
    graph: &BondGraph,
    squares: &[ScaleSquare],
) -> Result<ResummationIdentity, ChartError> {
    let pts = x.points();
    let value = |p: usize, q: usize| -> Result<f64, ChartError> {
        let distance = (pts[p] - pts[q]).norm();
        if distance <= 0.0 {
            return Err(ChartError::InfeasiblePair { p, q, distance });
        }
        pot.value(distance).ok_or(ChartError::InfeasiblePair { p, q, distance })
    };

    let mut multiplicity: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut square_sum = 0.0_f64;
    for square in squares.iter().filter(|s| s.norm_sq == 1) {
        for &(p, q) in &square.sides {
            *multiplicity.entry((p, q)).or_insert(0) += 1;
            square_sum += 0.5 * value(p, q)?;
        }
        for &(p, q) in &square.diagonals {
            *multiplicity.entry((p, q)).or_insert(0) += 2;
            square_sum += value(p, q)?;
        }
    }

    let alpha = graph.alpha();
    let reach = SQRT_2 + graph.alpha_pp();
    let mut half_covered_sum = 0.0;
    let mut uncovered_sum = 0.0;
    let mut long_sum = 0.0;
    let mut outside_sum = 0.0;
    let mut overcover_adjustment = 0.0;
    let mut counts = [0_usize; 5]; // covered, half, uncovered, long, outside
    let mut overcovered = 0_usize;
    let mut edges = Vec::new();
    for p in 0..pts.len() {
        for q in (p + 1)..pts.len() {
            let distance = (pts[p] - pts[q]).norm();
            let val = value(p, q)?;
            let m = multiplicity.get(&(p, q)).copied().unwrap_or(0);
            let class = match m {
                0 => {
                    if graph.is_bond(p, q) {
                        uncovered_sum += val;
                        counts[2] += 1;
                        CoverClass::Uncovered
                    } else if distance >= SQRT_2 + alpha && distance < reach {
                        long_sum += val;
                        counts[3] += 1;
                        CoverClass::Long
                    } else {
                        outside_sum += val;
                        counts[4] += 1;
                        CoverClass::Outside
                    }
                }
                1 => {
                    half_covered_sum += val;
                    counts[1] += 1;
                    CoverClass::HalfCovered
                }
                2 => {
                    counts[0] += 1;
                    CoverClass::Covered
                }
                _ => {
                    overcovered += 1;
                    overcover_adjustment += (1.0 - 0.5 * m as f64) * val;
                    counts[0] += 1;
                    CoverClass::Covered
                }
            };
            if m > 0 || distance < reach {
                edges.push(EdgeCover { p, q, distance, multiplicity: m, class });
            }
        }
    }

    let total = match total_energy(pot, x) {
        crate::energy::Energy::Finite(t) => t,
        crate::energy::Energy::Infeasible => {
            return Err(ChartError::InfeasiblePair { p: 0, q: 0, distance: 0.0 })
        }
    };
    let reassembled = square_sum
        + 0.5 * half_covered_sum
        + uncovered_sum
        + long_sum
        + outside_sum
        + overcover_adjustment;
    Ok(ResummationIdentity {
        total,
        square_sum,
        half_covered_sum,
        uncovered_sum,
        long_sum,
        outside_sum,
        overcover_adjustment,
        residual: total - reassembled,
        covered: counts[0],
        half_covered: counts[1],
        uncovered: counts[2],
        long: counts[3],
        outside: counts[4],
        overcovered,
        edges,
    })
}
