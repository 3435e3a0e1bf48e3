//! Bond graphs, local square-lattice charts, and rigidity checks.
//!
//! Points interact combinatorially through a distance window: two labels are
//! *bonded* when their separation falls in `(1−α, √2+α)` (closed `[1, √2]`
//! in the degenerate case `α = 0`, which is the intersection of the open
//! windows). A point whose bonded neighborhood — itself included — has
//! exactly nine members looks locally like a square-lattice site; everything
//! else is boundary. Around an interior site the eight neighbors, ordered
//! counterclockwise from the nearest one, alternate between axis neighbors
//! and diagonal neighbors, which pins an integer chart on the neighborhood.
//! Charts of adjacent interior sites agree on overlaps, so a breadth-first
//! glue extends them to integer coordinates for a whole path-connected
//! interior region, unique up to a symmetry of the integer lattice.
//!
//! The module also packages two metric rigidity facts used throughout:
//! a quadrilateral whose sides and diagonals all satisfy the bond window is
//! (close to) a unit square, and triangles built from bonds have interior
//! angles confined to explicit windows. Both come with numeric extremum
//! searches so the claimed constants can be confronted with brute force.

use crate::energy::Configuration;
use crate::geometry::Vec2;
use crate::potential::{Potential, DEFORMATION_LIMIT};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::f64::consts::SQRT_2;
use std::io::Write;
use thiserror::Error;

/// Errors from graph construction, chart building, and region embedding.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error(
        "invalid distance windows: need 0 <= alpha < alpha'' < {DEFORMATION_LIMIT:.6}, \
         got alpha = {alpha}, alpha'' = {alpha_pp}"
    )]
    BadWindow { alpha: f64, alpha_pp: f64 },
    #[error("no chart at {center}: neighborhood has {count} members instead of 9")]
    ChartUnavailable { center: usize, count: usize },
    #[error(
        "rigidity failure at chart {center}: pair ({p}, {q}) at distance {observed:.6} \
         {} the bond window ({:.6}, {:.6})",
        if *expected_bond { "should lie in" } else { "should lie outside" },
        window.0,
        window.1
    )]
    RigidityFailure {
        center: usize,
        p: usize,
        q: usize,
        observed: f64,
        expected_bond: bool,
        window: (f64, f64),
    },
    #[error(
        "chart gluing conflict at {target}: assigned ({}, {}) through {through}, \
         but chart {center} proposes ({}, {})",
        existing.0, existing.1, proposed.0, proposed.1
    )]
    GluingConflict {
        through: usize,
        center: usize,
        target: usize,
        existing: (i64, i64),
        proposed: (i64, i64),
    },
    #[error("labels {a} and {b} glued to the same integer coordinate ({}, {})", coord.0, coord.1)]
    EmbeddingOverlap { a: usize, b: usize, coord: (i64, i64) },
    #[error(
        "embedded region is not combinatorially square: pair ({p}, {q}) is \
         {}bonded but its image separation squared is {image_dist_sq}",
        if *bonded { "" } else { "not " }
    )]
    NotCombinatorial { p: usize, q: usize, bonded: bool, image_dist_sq: i64 },
    #[error("no interior site available to seed the embedding")]
    RegionEmpty,
    #[error("seed {seed} is not an interior site of the graph")]
    SeedNotInterior { seed: usize },
    #[error("edge table I/O failed: {0}")]
    Csv(#[from] csv::Error),
}

// ---------------------------------------------------------------------------
// Bond graph
// ---------------------------------------------------------------------------

/// How a pair separation relates to the distance windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeClass {
    /// Separation inside the bond window `(1−α, √2+α)`.
    SideRange,
    /// Separation in the long window `[√2+α, √2+α″)`.
    Long,
    /// Separation at or below the window floor `1−α` (too close to bond).
    None,
}

/// Distance-window graph over a labelled configuration.
///
/// Bonds use the window `(1−α, √2+α)` for `α > 0` and the closed window
/// `[1, √2]` for `α = 0`; the long set collects the pairs in `[√2+α, √2+α″)`
/// that fall just beyond bonding range. Neighbor lists are sorted by label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BondGraph {
    alpha: f64,
    alpha_pp: f64,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    long_edges: Vec<(usize, usize)>,
}

/// Whether a separation lies in the bond window for the given `alpha`.
fn in_bond_window(d: f64, alpha: f64) -> bool {
    if alpha > 0.0 {
        d > 1.0 - alpha && d < SQRT_2 + alpha
    } else {
        (1.0..=SQRT_2).contains(&d)
    }
}

/// Builds the bond graph of a configuration.
///
/// Requires `0 <= alpha < alpha_pp < (2−√2)/4`; the ceiling keeps the window
/// short enough that second-ring lattice pairs can never bond.
pub fn build_bond_graph(
    x: &Configuration,
    alpha: f64,
    alpha_pp: f64,
) -> Result<BondGraph, GraphError> {
    if !(0.0 <= alpha && alpha < alpha_pp && alpha_pp < DEFORMATION_LIMIT) {
        return Err(GraphError::BadWindow { alpha, alpha_pp });
    }
    let pts = x.points();
    let n = pts.len();
    let mut neighbors = vec![Vec::new(); n];
    let mut edges = Vec::new();
    let mut long_edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (pts[i] - pts[j]).norm();
            if in_bond_window(d, alpha) {
                neighbors[i].push(j);
                neighbors[j].push(i);
                edges.push((i, j));
            } else if d >= SQRT_2 + alpha && d < SQRT_2 + alpha_pp {
                long_edges.push((i, j));
            }
        }
    }
    // Inner loops visit j in increasing order, so the lists are born sorted.
    Ok(BondGraph { alpha, alpha_pp, neighbors, edges, long_edges })
}

impl BondGraph {
    /// Bond window half-width `α`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Long window ceiling parameter `α″`.
    pub fn alpha_pp(&self) -> f64 {
        self.alpha_pp
    }

    /// Number of labelled points.
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    /// True when the graph has no points.
    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Bonded neighbors of `p`, excluding `p`, sorted by label.
    pub fn neighbors(&self, p: usize) -> &[usize] {
        &self.neighbors[p]
    }

    /// Members of the bonded neighborhood of `p`, including `p` itself.
    pub fn neighborhood(&self, p: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.neighbors[p].len() + 1);
        out.extend_from_slice(&self.neighbors[p]);
        let pos = out.binary_search(&p).unwrap_err();
        out.insert(pos, p);
        out
    }

    /// Size of the bonded neighborhood of `p`, including `p` itself.
    pub fn neighborhood_size(&self, p: usize) -> usize {
        self.neighbors[p].len() + 1
    }

    /// True when `p` fails the nine-member neighborhood rule.
    pub fn is_boundary(&self, p: usize) -> bool {
        self.neighborhood_size(p) != 9
    }

    /// Labels whose neighborhood has any size other than nine, sorted.
    pub fn boundary(&self) -> Vec<usize> {
        (0..self.len()).filter(|&p| self.is_boundary(p)).collect()
    }

    /// Labels with exactly nine-member neighborhoods, sorted.
    pub fn interior(&self) -> Vec<usize> {
        (0..self.len()).filter(|&p| !self.is_boundary(p)).collect()
    }

    /// True when `p` and `q` are bonded.
    pub fn is_bond(&self, p: usize, q: usize) -> bool {
        self.neighbors[p].binary_search(&q).is_ok()
    }

    /// All bonds as label pairs `(p, q)` with `p < q`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// All long-window pairs `(p, q)` with `p < q`, sorted.
    pub fn long_edges(&self) -> &[(usize, usize)] {
        &self.long_edges
    }
}

/// One row of the pair-classification table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRow {
    pub p: usize,
    pub q: usize,
    pub distance: f64,
    pub class: EdgeClass,
}

/// Classifies every pair within reach `√2+α″` of each other.
///
/// Pairs at or below the window floor are reported with class `none`; pairs
/// beyond the long window are omitted entirely.
pub fn edge_rows(x: &Configuration, graph: &BondGraph) -> Vec<EdgeRow> {
    let pts = x.points();
    let mut rows = Vec::new();
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let d = (pts[i] - pts[j]).norm();
            let class = if in_bond_window(d, graph.alpha) {
                EdgeClass::SideRange
            } else if d >= SQRT_2 + graph.alpha && d < SQRT_2 + graph.alpha_pp {
                EdgeClass::Long
            } else if d <= 1.0 - graph.alpha {
                EdgeClass::None
            } else {
                continue;
            };
            rows.push(EdgeRow { p: i, q: j, distance: d, class });
        }
    }
    rows
}

/// Writes the pair-classification table as CSV with header `p,q,distance,class`.
pub fn write_edge_csv<W: Write>(
    x: &Configuration,
    graph: &BondGraph,
    writer: W,
) -> Result<(), GraphError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["p", "q", "distance", "class"])?;
    for row in edge_rows(x, graph) {
        let class = match row.class {
            EdgeClass::SideRange => "side-range",
            EdgeClass::Long => "long",
            EdgeClass::None => "none",
        };
        w.write_record([
            row.p.to_string(),
            row.q.to_string(),
            row.distance.to_string(),
            class.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Minimum separation
// ---------------------------------------------------------------------------

/// Outcome of the minimum pairwise separation check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinDistanceReport {
    /// Floor the separation is compared against.
    pub r_min: f64,
    /// Smallest pairwise distance, absent for fewer than two points.
    pub min_distance: Option<f64>,
    /// Label pair achieving the minimum.
    pub witness: Option<(usize, usize)>,
    /// True when every pair is strictly farther apart than `r_min`.
    pub holds: bool,
}

/// Measures the minimum pairwise separation against a floor.
///
/// When no explicit floor is given it defaults to `1 − α` from the
/// potential's deformation parameters, the floor under which the wall height
/// of a deep enough well forbids minimizers from packing points.
pub fn min_distance_check(
    pot: &Potential,
    x: &Configuration,
    r_min: Option<f64>,
) -> MinDistanceReport {
    let r_min = r_min.unwrap_or(1.0 - pot.params.alpha);
    let pts = x.points();
    let mut best: Option<(f64, (usize, usize))> = None;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let d = (pts[i] - pts[j]).norm();
            if best.map(|(b, _)| d < b).unwrap_or(true) {
                best = Some((d, (i, j)));
            }
        }
    }
    MinDistanceReport {
        r_min,
        min_distance: best.map(|(d, _)| d),
        witness: best.map(|(_, w)| w),
        holds: best.map(|(d, _)| d > r_min).unwrap_or(true),
    }
}

// ---------------------------------------------------------------------------
// Local charts
// ---------------------------------------------------------------------------

/// Integer offsets assigned to the ring positions `p1..p8`, counterclockwise
/// from the nearest neighbor: axis neighbors at odd positions, diagonal
/// neighbors at even positions.
const RING_OFFSETS: [(i64, i64); 8] =
    [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

/// Deformation of one pair inside a chart: observed separation against the
/// separation of the assigned integer offsets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairDeformation {
    pub p: usize,
    pub q: usize,
    pub observed: f64,
    pub reference: f64,
    pub delta: f64,
}

/// Observed extent of one metric bound family inside a chart.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyBounds {
    /// Which pairs the family covers.
    pub name: String,
    /// Required window for every covered separation.
    pub window: (f64, f64),
    /// Smallest and largest observed separation.
    pub observed: (f64, f64),
    /// True when every observation lies inside the window.
    pub holds: bool,
}

/// Integer chart of a nine-member neighborhood.
///
/// The assignment maps the center to `(0, 0)` and ring members to
/// `{−1, 0, 1}²` counterclockwise from the nearest neighbor, so the midpoint
/// relations `φ(p_{2j}) = φ(p_{2j−1}) + φ(p_{2j+1})` hold by construction.
/// Construction fails unless the bond pattern inside the neighborhood matches
/// the integer lattice exactly: pairs whose assigned offsets are at squared
/// distance 1 or 2 must be bonds and all other pairs must not be.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalChart {
    /// Center label.
    pub center: usize,
    /// Ring labels `p1..p8` counterclockwise from the nearest neighbor.
    pub ring: [usize; 8],
    /// Label-to-offset assignment, center first and then the ring in order.
    pub assignment: Vec<(usize, (i64, i64))>,
    /// Deformation of every pair in the neighborhood (36 rows).
    pub pair_deformations: Vec<PairDeformation>,
    /// Largest absolute deformation over all pairs.
    pub max_delta: f64,
    /// Largest deformation relative to the reference separation.
    pub max_relative_delta: f64,
    /// `max_relative_delta / α`, absent in the degenerate case `α = 0`.
    pub empirical_constant: Option<f64>,
    /// The four metric bound families with their observed extents.
    pub families: [FamilyBounds; 4],
    /// True when all four families hold.
    pub bounds_hold: bool,
    /// The four unit cells around the center, each a complete bond subgraph:
    /// center, axis neighbor, diagonal between, next axis neighbor.
    pub unit_cells: [[usize; 4]; 4],
}

impl LocalChart {
    /// Offset assigned to a label, if it belongs to the chart.
    pub fn offset_of(&self, label: usize) -> Option<(i64, i64)> {
        self.assignment.iter().find(|(l, _)| *l == label).map(|(_, o)| *o)
    }
}

/// Builds the integer chart of the neighborhood of `center`.
///
/// `c3` scales the `O(α)` windows of the metric bound families; the window
/// checks are reported, while a mismatch between the bond pattern and the
/// integer lattice is a hard error carrying the offending pair. In the
/// degenerate case `α = 0` the family windows shrink to `1e-9` slack.
pub fn local_chart(
    x: &Configuration,
    graph: &BondGraph,
    center: usize,
    c3: f64,
) -> Result<LocalChart, GraphError> {
    let count = graph.neighborhood_size(center);
    if count != 9 {
        return Err(GraphError::ChartUnavailable { center, count });
    }
    let pts = x.points();
    let c = pts[center];

    // Ring order: counterclockwise from the nearest neighbor, ties broken by
    // radius and then label. The angular key is measured from the nearest
    // neighbor's direction so the nearest sorts first.
    let mut members: Vec<(usize, f64, f64)> = graph
        .neighbors(center)
        .iter()
        .map(|&q| {
            let d = pts[q] - c;
            (q, d.norm(), d.y.atan2(d.x))
        })
        .collect();
    let &(_, _, theta0) = members
        .iter()
        .min_by(|a, b| (a.1, a.0).partial_cmp(&(b.1, b.0)).unwrap())
        .expect("ring has eight members");
    members.sort_by(|a, b| {
        let ka = (a.2 - theta0).rem_euclid(std::f64::consts::TAU);
        let kb = (b.2 - theta0).rem_euclid(std::f64::consts::TAU);
        (ka, a.1, a.0).partial_cmp(&(kb, b.1, b.0)).unwrap()
    });
    let ring: [usize; 8] = std::array::from_fn(|i| members[i].0);

    let mut assignment = Vec::with_capacity(9);
    assignment.push((center, (0, 0)));
    for (i, &label) in ring.iter().enumerate() {
        assignment.push((label, RING_OFFSETS[i]));
    }

    // Bond pattern check: offsets at squared distance 1 or 2 must be bonds,
    // everything else (squared distances 4, 5, 8) must not be.
    let window = if graph.alpha > 0.0 {
        (1.0 - graph.alpha, SQRT_2 + graph.alpha)
    } else {
        (1.0, SQRT_2)
    };
    for a in 0..assignment.len() {
        for b in (a + 1)..assignment.len() {
            let (pa, oa) = assignment[a];
            let (pb, ob) = assignment[b];
            let lattice_sq = (oa.0 - ob.0).pow(2) + (oa.1 - ob.1).pow(2);
            let should_bond = lattice_sq <= 2;
            if graph.is_bond(pa, pb) != should_bond {
                return Err(GraphError::RigidityFailure {
                    center,
                    p: pa,
                    q: pb,
                    observed: (pts[pa] - pts[pb]).norm(),
                    expected_bond: should_bond,
                    window,
                });
            }
        }
    }

    // Pair deformations against the assigned integer offsets.
    let mut pair_deformations = Vec::with_capacity(36);
    let mut max_delta: f64 = 0.0;
    let mut max_relative_delta: f64 = 0.0;
    for a in 0..assignment.len() {
        for b in (a + 1)..assignment.len() {
            let (pa, oa) = assignment[a];
            let (pb, ob) = assignment[b];
            let reference =
                (((oa.0 - ob.0).pow(2) + (oa.1 - ob.1).pow(2)) as f64).sqrt();
            let observed = (pts[pa] - pts[pb]).norm();
            let delta = (observed - reference).abs();
            max_delta = max_delta.max(delta);
            max_relative_delta = max_relative_delta.max(delta / reference);
            pair_deformations.push(PairDeformation { p: pa, q: pb, observed, reference, delta });
        }
    }

    // Metric bound families. Slack scales with c3·α; the skip family keeps
    // the hard bond ceiling √2+α as its upper end.
    let alpha = graph.alpha;
    let slack = if alpha > 0.0 { c3 * alpha } else { 1e-9 };
    let floor = if alpha > 0.0 { 1.0 - alpha } else { 1.0 - 1e-9 };
    let obs = |pairs: &[(usize, usize)]| -> (f64, f64) {
        let ds: Vec<f64> = pairs.iter().map(|&(u, v)| (pts[u] - pts[v]).norm()).collect();
        (
            ds.iter().cloned().fold(f64::INFINITY, f64::min),
            ds.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let ring_pairs: Vec<(usize, usize)> =
        (0..8).map(|j| (ring[j], ring[(j + 1) % 8])).collect();
    let axis_pairs: Vec<(usize, usize)> =
        (0..4).map(|j| (center, ring[2 * j])).collect();
    let diag_pairs: Vec<(usize, usize)> =
        (0..4).map(|j| (center, ring[2 * j + 1])).collect();
    let skip_pairs: Vec<(usize, usize)> =
        (0..4).map(|j| (ring[2 * j], ring[(2 * j + 2) % 8])).collect();
    let families = [
        ("ring-consecutive", (floor, 1.0 + slack), obs(&ring_pairs)),
        ("center-axis", (floor, 1.0 + slack), obs(&axis_pairs)),
        ("center-diagonal", (SQRT_2 - slack, SQRT_2 + slack), obs(&diag_pairs)),
        (
            "ring-skip",
            (SQRT_2 - slack, SQRT_2 + if alpha > 0.0 { alpha } else { 1e-9 }),
            obs(&skip_pairs),
        ),
    ]
    .map(|(name, window, observed)| FamilyBounds {
        name: String::from(name),
        window,
        observed,
        holds: observed.0 >= window.0 && observed.1 <= window.1,
    });
    let bounds_hold = families.iter().all(|f| f.holds);

    let unit_cells: [[usize; 4]; 4] = std::array::from_fn(|j| {
        [center, ring[2 * j], ring[2 * j + 1], ring[(2 * j + 2) % 8]]
    });
    // The bond pattern check already certified each cell is a complete bond
    // subgraph: its six pairs sit at offset distances 1 or √2.

    debug_assert!((0..4).all(|j| {
        let a = RING_OFFSETS[2 * j];
        let m = RING_OFFSETS[(2 * j + 1) % 8];
        let b = RING_OFFSETS[(2 * j + 2) % 8];
        m.0 == a.0 + b.0 && m.1 == a.1 + b.1
    }));

    Ok(LocalChart {
        center,
        ring,
        assignment,
        pair_deformations,
        max_delta,
        max_relative_delta,
        empirical_constant: (alpha > 0.0).then(|| max_relative_delta / alpha),
        families,
        bounds_hold,
        unit_cells,
    })
}

// ---------------------------------------------------------------------------
// Region embedding
// ---------------------------------------------------------------------------

/// Disjoint-set forest over labels.
struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Integer coordinates recovered for a path-connected interior region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionEmbedding {
    /// Label anchoring the normalization at `(0, 0)`.
    pub seed: usize,
    /// Seed's nearest neighbor, anchored at `(1, 0)`.
    pub nearest: usize,
    /// Label-to-coordinate map, sorted by label. Covers the embedded
    /// interior sites and the one-ring of charted members around them.
    pub coordinates: Vec<(usize, (i64, i64))>,
    /// Interior sites (whole neighborhood free of boundary labels), sorted.
    pub interior: Vec<usize>,
    /// Interior sites outside the seed's bond component, left unembedded.
    pub omitted: Vec<usize>,
}

impl RegionEmbedding {
    /// Coordinate of a label, if it was embedded.
    pub fn coordinate_of(&self, label: usize) -> Option<(i64, i64)> {
        self.coordinates
            .binary_search_by_key(&label, |(l, _)| *l)
            .ok()
            .map(|i| self.coordinates[i].1)
    }
}

/// The eight symmetries of the integer lattice fixing the origin, written as
/// row-major 2×2 matrices. The identity comes first so that unconstrained
/// fits (the seed) default to it.
const LATTICE_SYMMETRIES: [[i64; 4]; 8] = [
    [1, 0, 0, 1],   // identity
    [0, -1, 1, 0],  // quarter turn
    [-1, 0, 0, -1], // half turn
    [0, 1, -1, 0],  // three-quarter turn
    [1, 0, 0, -1],  // mirror across the x axis
    [-1, 0, 0, 1],  // mirror across the y axis
    [0, 1, 1, 0],   // mirror across the diagonal
    [0, -1, -1, 0], // mirror across the anti-diagonal
];

fn apply_symmetry(m: &[i64; 4], v: (i64, i64)) -> (i64, i64) {
    (m[0] * v.0 + m[1] * v.1, m[2] * v.0 + m[3] * v.1)
}

/// Glues per-center integer charts from a seed outward.
///
/// Charts map member labels to offsets relative to their center, each in a
/// frame of its own (every chart normalizes its nearest neighbor to `(1, 0)`).
/// Breadth first over centers, the lattice symmetry reconciling a chart with
/// the coordinates already assigned on its overlap is fitted first — the
/// overlap always contains the full chart of the assigning center, which
/// spans both directions, so the fit is forced — and the remaining members
/// are assigned through it. When no symmetry fits, the best partial fit
/// produces a conflict report carrying the triple (earlier assigner, current
/// center, target).
pub(crate) fn glue_charts(
    seed: usize,
    centers: &BTreeSet<usize>,
    charts: &BTreeMap<usize, Vec<(usize, (i64, i64))>>,
    coords: &mut BTreeMap<usize, (i64, i64)>,
) -> Result<(), GraphError> {
    let mut assigner: HashMap<usize, usize> = HashMap::new();
    let mut queued: BTreeSet<usize> = BTreeSet::new();
    let mut queue = VecDeque::new();
    coords.insert(seed, (0, 0));
    assigner.insert(seed, seed);
    queue.push_back(seed);
    queued.insert(seed);
    while let Some(p) = queue.pop_front() {
        let base = coords[&p];
        let constraints: Vec<((i64, i64), (i64, i64))> = charts[&p]
            .iter()
            .filter_map(|&(r, off)| {
                coords.get(&r).map(|&c| (off, (c.0 - base.0, c.1 - base.1)))
            })
            .collect();
        let fits = |m: &[i64; 4]| {
            constraints.iter().all(|&(off, delta)| apply_symmetry(m, off) == delta)
        };
        let frame = match LATTICE_SYMMETRIES.iter().find(|m| fits(m)) {
            Some(m) => m,
            None => {
                // No lattice symmetry reconciles this chart with the earlier
                // assignments; report through the closest partial fit.
                let best = LATTICE_SYMMETRIES
                    .iter()
                    .enumerate()
                    .min_by_key(|(i, m)| {
                        let misses = constraints
                            .iter()
                            .filter(|&&(off, delta)| apply_symmetry(m, off) != delta)
                            .count();
                        (misses, *i)
                    })
                    .map(|(_, m)| m)
                    .expect("symmetry list is nonempty");
                let (r, proposed) = charts[&p]
                    .iter()
                    .find_map(|&(r, off)| {
                        let img = apply_symmetry(best, off);
                        let proposed = (base.0 + img.0, base.1 + img.1);
                        match coords.get(&r) {
                            Some(&c) if c != proposed => Some((r, proposed)),
                            _ => None,
                        }
                    })
                    .expect("some constraint is violated");
                return Err(GraphError::GluingConflict {
                    through: assigner[&r],
                    center: p,
                    target: r,
                    existing: coords[&r],
                    proposed,
                });
            }
        };
        for &(r, off) in &charts[&p] {
            let img = apply_symmetry(frame, off);
            let proposed = (base.0 + img.0, base.1 + img.1);
            match coords.get(&r) {
                None => {
                    coords.insert(r, proposed);
                    assigner.insert(r, p);
                }
                Some(&existing) => debug_assert_eq!(existing, proposed),
            }
            if centers.contains(&r) && queued.insert(r) {
                queue.push_back(r);
            }
        }
    }
    Ok(())
}

/// Recovers integer coordinates for a path-connected interior region.
///
/// The region consists of the sites whose whole neighborhood stays clear of
/// the boundary; their charts are glued breadth-first from the seed (default:
/// the smallest label in the largest bond component of the region). The
/// result is normalized by construction — seed at `(0, 0)`, its nearest
/// neighbor at `(1, 0)`, the next counterclockwise neighbor at `(1, 1)` — and
/// is unique up to composing with a symmetry of the integer lattice.
pub fn embed_region(
    x: &Configuration,
    graph: &BondGraph,
    seed: Option<usize>,
    c3: f64,
) -> Result<RegionEmbedding, GraphError> {
    // Interior sites: nine-member neighborhoods all of whose members also
    // have nine-member neighborhoods.
    let lambda: BTreeSet<usize> = (0..graph.len())
        .filter(|&p| {
            !graph.is_boundary(p) && graph.neighbors(p).iter().all(|&q| !graph.is_boundary(q))
        })
        .collect();
    if lambda.is_empty() {
        return Err(GraphError::RegionEmpty);
    }

    // Bond components within the region.
    let mut dsu = Dsu::new(graph.len());
    for &p in &lambda {
        for &q in graph.neighbors(p) {
            if lambda.contains(&q) {
                dsu.union(p, q);
            }
        }
    }
    let seed = match seed {
        Some(s) => {
            if !lambda.contains(&s) {
                return Err(GraphError::SeedNotInterior { seed: s });
            }
            s
        }
        None => {
            let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
            for &p in &lambda {
                *sizes.entry(dsu.find(p)).or_insert(0) += 1;
            }
            // Largest component, ties to the smallest root label; the root
            // is the smallest label in its component by union order.
            *sizes.iter().max_by_key(|&(root, size)| (*size, std::cmp::Reverse(*root))).unwrap().0
        }
    };
    let seed_root = dsu.find(seed);
    let embeddable: BTreeSet<usize> =
        lambda.iter().copied().filter(|&p| dsu.find(p) == seed_root).collect();
    let omitted: Vec<usize> =
        lambda.iter().copied().filter(|p| !embeddable.contains(p)).collect();

    // Charts for every embeddable center.
    let mut charts: BTreeMap<usize, Vec<(usize, (i64, i64))>> = BTreeMap::new();
    let mut nearest = seed;
    for &p in &embeddable {
        let chart = local_chart(x, graph, p, c3)?;
        if p == seed {
            nearest = chart.ring[0];
        }
        charts.insert(p, chart.assignment);
    }

    let mut coords: BTreeMap<usize, (i64, i64)> = BTreeMap::new();
    glue_charts(seed, &embeddable, &charts, &mut coords)?;

    // Injectivity: no two labels may share a coordinate.
    let mut seen: HashMap<(i64, i64), usize> = HashMap::new();
    for (&label, &coord) in &coords {
        if let Some(&other) = seen.get(&coord) {
            return Err(GraphError::EmbeddingOverlap { a: other, b: label, coord });
        }
        seen.insert(coord, label);
    }

    // Combinatorial faithfulness on the embedded interior: bonds if and only
    // if the images sit at squared distance 1 or 2.
    let embedded: Vec<usize> = embeddable.iter().copied().collect();
    for (i, &p) in embedded.iter().enumerate() {
        for &q in &embedded[(i + 1)..] {
            let (cp, cq) = (coords[&p], coords[&q]);
            let image_dist_sq = (cp.0 - cq.0).pow(2) + (cp.1 - cq.1).pow(2);
            let bonded = graph.is_bond(p, q);
            if bonded != (image_dist_sq <= 2) {
                return Err(GraphError::NotCombinatorial { p, q, bonded, image_dist_sq });
            }
        }
    }

    Ok(RegionEmbedding {
        seed,
        nearest,
        coordinates: coords.into_iter().collect(),
        interior: lambda.into_iter().collect(),
        omitted,
    })
}

/// Writes recovered integer coordinates as CSV with header `label,u,v`.
pub fn write_embedding_csv<W: Write>(
    embedding: &RegionEmbedding,
    writer: W,
) -> Result<(), GraphError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["label", "u", "v"])?;
    for &(label, (u, v)) in &embedding.coordinates {
        w.write_record([label.to_string(), u.to_string(), v.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Quadrilateral rigidity
// ---------------------------------------------------------------------------

/// Verdict of the quadrilateral rigidity check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum RigidityVerdict {
    /// The distance hypothesis holds and the shape matches the unit square.
    Square {
        /// Mean side length.
        side: f64,
        /// Largest deviation of any of the six separations from the unit
        /// square value, relative to that value.
        deviation: f64,
        /// `deviation / α`, absent in the exact case `α = 0`.
        empirical_constant: Option<f64>,
    },
    /// The hypothesis fails at this pair; the rigidity claim is silent.
    NotConstrained { pair: (usize, usize), distance: f64, window: (f64, f64) },
    /// The hypothesis holds but the shape strays beyond the allowance: a
    /// counterexample witness to the rigidity claim.
    Violation {
        pair: (usize, usize),
        observed: f64,
        reference: f64,
        deviation: f64,
        allowance: f64,
    },
}

/// Checks that a constrained quadrilateral is (close to) a unit square.
///
/// Vertices are taken in cyclic order: sides join consecutive vertices and
/// diagonals join opposite ones. In the exact case `α = 0` the hypothesis is
/// `sides ≥ 1` and `diagonals ≤ √2`, each tested with numerical slack `tol`,
/// and the shape must match the unit square within the relative allowance
/// `c3p·tol`: a simple quadrilateral meeting the hypothesis at slack `tol`
/// can genuinely deviate by a small multiple of `tol` (shrinking both
/// diagonals by `τ√2` keeps every constraint within `2τ` while a pair
/// deviates by `2τ`), so the allowance carries the same deformation constant
/// as the windowed case instead of silently assuming the slack itself.
/// For `α > 0` the hypothesis is that all six separations lie in the bond
/// window `(1−α, √2+α)` — the four points form a complete bond graph — and
/// the shape must match within the relative allowance `c3p·α`.
pub fn quadrilateral_rigidity_check(
    vertices: &[Vec2; 4],
    alpha: f64,
    c3p: f64,
    tol: f64,
) -> RigidityVerdict {
    const SIDES: [(usize, usize); 4] = [(0, 1), (1, 2), (2, 3), (3, 0)];
    const DIAGONALS: [(usize, usize); 2] = [(0, 2), (1, 3)];
    let dist = |(i, j): (usize, usize)| (vertices[i] - vertices[j]).norm();

    // Hypothesis.
    if alpha > 0.0 {
        let window = (1.0 - alpha, SQRT_2 + alpha);
        for &pair in SIDES.iter().chain(DIAGONALS.iter()) {
            let d = dist(pair);
            if d <= window.0 || d >= window.1 {
                return RigidityVerdict::NotConstrained { pair, distance: d, window };
            }
        }
    } else {
        for &pair in &SIDES {
            let d = dist(pair);
            if d < 1.0 - tol {
                return RigidityVerdict::NotConstrained {
                    pair,
                    distance: d,
                    window: (1.0, f64::INFINITY),
                };
            }
        }
        for &pair in &DIAGONALS {
            let d = dist(pair);
            if d > SQRT_2 + tol {
                return RigidityVerdict::NotConstrained {
                    pair,
                    distance: d,
                    window: (0.0, SQRT_2),
                };
            }
        }
    }

    // Claim: sides at 1, diagonals at √2, within the allowance.
    let allowance = c3p * if alpha > 0.0 { alpha } else { tol };
    let mut worst: Option<(f64, (usize, usize), f64, f64)> = None;
    let mut side_sum = 0.0;
    for &pair in SIDES.iter().chain(DIAGONALS.iter()) {
        let reference = if SIDES.contains(&pair) { 1.0 } else { SQRT_2 };
        let d = dist(pair);
        if SIDES.contains(&pair) {
            side_sum += d;
        }
        let deviation = (d - reference).abs() / reference;
        if worst.map(|(w, ..)| deviation > w).unwrap_or(true) {
            worst = Some((deviation, pair, d, reference));
        }
    }
    let (deviation, pair, observed, reference) = worst.expect("six pairs examined");
    if deviation > allowance {
        RigidityVerdict::Violation { pair, observed, reference, deviation, allowance }
    } else {
        RigidityVerdict::Square {
            side: side_sum / 4.0,
            deviation,
            empirical_constant: (alpha > 0.0).then(|| deviation / alpha),
        }
    }
}

// ---------------------------------------------------------------------------
// Triangle angle bounds
// ---------------------------------------------------------------------------

/// Which bond pattern the triangle satisfies. The apex is the vertex joined
/// to the other two by bonds; cases with a pinned base fix the first bond's
/// length near 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TriangleCase {
    /// Two bonds from the apex, third pair beyond the window.
    TwoBondsFar,
    /// All three pairs bonded.
    AllBonds,
    /// Two bonds from the apex with one pinned near 1, third pair beyond.
    PinnedBondFar,
    /// All three pairs bonded, one pinned near 1.
    AllBondsPinned,
}

/// Which angle of the triangle a bound constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleTarget {
    /// Angle at the apex, between the two bonds.
    Apex,
    /// Angle at an endpoint of the base (either, by symmetry).
    Base,
    /// Any interior angle.
    Any,
}

/// One verified angle bound: the closed-form corner value against a numeric
/// extremum over the full constraint region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngleBound {
    pub target: AngleTarget,
    /// True for a lower bound on the angle, false for an upper bound.
    pub lower: bool,
    /// Closed-form bound, degrees.
    pub analytic_deg: f64,
    /// Numeric extremum over the constraint region, degrees.
    pub numeric_deg: f64,
    /// `|analytic − numeric|`, degrees.
    pub gap_deg: f64,
}

/// Angle bounds for one triangle case at window half-width `epsilon`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngleBoundsReport {
    pub case: TriangleCase,
    pub epsilon: f64,
    pub bounds: Vec<AngleBound>,
}

/// Interior angle at the vertex opposite side `c`, for sides `(a, b, c)`, in
/// degrees. Arguments follow the law of cosines with the angle between `a`
/// and `b`.
fn angle_deg(a: f64, b: f64, c: f64) -> f64 {
    (((a * a + b * b - c * c) / (2.0 * a * b)).clamp(-1.0, 1.0)).acos().to_degrees()
}

/// Numeric extremum of an angle over a box of side triples, grid scan plus
/// compass refinement. `feasible` prunes triples violating the triangle
/// inequality or case constraints; `angle` evaluates the target in degrees.
fn angle_extremum(
    lo: [f64; 3],
    hi: [f64; 3],
    feasible: &dyn Fn([f64; 3]) -> bool,
    angle: &dyn Fn([f64; 3]) -> f64,
    maximize: bool,
) -> f64 {
    const GRID: usize = 48;
    let sample = |idx: [usize; 3]| -> [f64; 3] {
        std::array::from_fn(|k| {
            lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / (GRID - 1).max(1) as f64
        })
    };
    let score = |v: f64| if maximize { v } else { -v };
    let mut best: Option<([f64; 3], f64)> = None;
    for i in 0..GRID {
        for j in 0..GRID {
            for k in 0..GRID {
                let s = sample([i, j, k]);
                if !feasible(s) {
                    continue;
                }
                let v = angle(s);
                if best.map(|(_, b)| score(v) > score(b)).unwrap_or(true) {
                    best = Some((s, v));
                }
            }
        }
    }
    let (mut point, mut value) = best.expect("constraint region contains grid points");
    let mut step = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(hi[2] - lo[2]) / GRID as f64;
    while step > 1e-12 {
        let mut improved = false;
        for k in 0..3 {
            for dir in [-1.0, 1.0] {
                let mut candidate = point;
                candidate[k] = (candidate[k] + dir * step).clamp(lo[k], hi[k]);
                if !feasible(candidate) {
                    continue;
                }
                let v = angle(candidate);
                if score(v) > score(value) {
                    point = candidate;
                    value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    value
}

/// Computes the angle bounds of one triangle case.
///
/// Sides are `a = |x1−x2|`, `b = |x1−x3|`, `c = |x2−x3|` with the apex at
/// `x1`. Bonded sides range over the window `(1−ε, √2+ε)`, far pairs obey
/// `c ≥ √2+ε`, and pinned cases restrict `a` to `[1−ε, 1+ε]`. Each bound
/// pairs the closed-form corner value with a grid-plus-compass numeric
/// extremum over the same region; `epsilon = 0` degenerates to the closed
/// windows.
pub fn triangle_angle_bounds(case: TriangleCase, epsilon: f64) -> AngleBoundsReport {
    let e = epsilon;
    let bond = (1.0 - e, SQRT_2 + e);
    let far_hi = 2.0 * (SQRT_2 + e);
    let apex = |s: [f64; 3]| angle_deg(s[0], s[1], s[2]);
    let base = |s: [f64; 3]| angle_deg(s[0], s[2], s[1]);
    let tri = |s: [f64; 3]| s[0] + s[1] > s[2] && s[0] + s[2] > s[1] && s[1] + s[2] > s[0];

    let mut bounds = Vec::new();
    let mut push = |target: AngleTarget,
                    lower: bool,
                    analytic_deg: f64,
                    lo: [f64; 3],
                    hi: [f64; 3],
                    feasible: &dyn Fn([f64; 3]) -> bool,
                    angle: &dyn Fn([f64; 3]) -> f64| {
        let numeric_deg = angle_extremum(lo, hi, feasible, angle, !lower);
        bounds.push(AngleBound {
            target,
            lower,
            analytic_deg,
            numeric_deg,
            gap_deg: (analytic_deg - numeric_deg).abs(),
        });
    };

    match case {
        TriangleCase::TwoBondsFar => {
            let lo = [bond.0, bond.0, bond.1];
            let hi = [bond.1, bond.1, far_hi];
            // Apex minimum 60°: corner a = b = c = √2+ε, an equilateral
            // triangle, independent of ε.
            push(AngleTarget::Apex, true, 60.0, lo, hi, &tri, &apex);
            // Base maximum: corner (a, b, c) = (1−ε, √2+ε, √2+ε), where the
            // base angle between a and c has cos = a / (2c) since b = c.
            let analytic =
                ((bond.0 / (2.0 * bond.1)).clamp(-1.0, 1.0)).acos().to_degrees();
            push(AngleTarget::Base, false, analytic, lo, hi, &tri, &base);
        }
        TriangleCase::AllBonds => {
            let lo = [bond.0; 3];
            let hi = [bond.1; 3];
            // Minimum: corner a = b = √2+ε, c = 1−ε.
            let min_analytic = angle_deg(bond.1, bond.1, bond.0);
            push(AngleTarget::Any, true, min_analytic, lo, hi, &tri, &apex);
            // Maximum: corner a = b = 1−ε, c = √2+ε.
            let max_analytic = angle_deg(bond.0, bond.0, bond.1);
            push(AngleTarget::Any, false, max_analytic, lo, hi, &tri, &apex);
        }
        TriangleCase::PinnedBondFar => {
            let lo = [1.0 - e, bond.0, bond.1];
            let hi = [1.0 + e, bond.1, far_hi];
            // Apex minimum: corner a = 1+ε, b = c = √2+ε, where
            // cos = a / (2b).
            let analytic =
                (((1.0 + e) / (2.0 * bond.1)).clamp(-1.0, 1.0)).acos().to_degrees();
            push(AngleTarget::Apex, true, analytic, lo, hi, &tri, &apex);
        }
        TriangleCase::AllBondsPinned => {
            let lo = [1.0 - e, bond.0, bond.0];
            let hi = [1.0 + e, bond.1, bond.1];
            // Base minimum toward 45°: corner a = 1−ε, b = 1−ε, c = √2+ε,
            // where cos = c / (2a).
            let analytic =
                ((bond.1 / (2.0 * (1.0 - e))).clamp(-1.0, 1.0)).acos().to_degrees();
            push(AngleTarget::Base, true, analytic, lo, hi, &tri, &base);
        }
    }

    AngleBoundsReport { case, epsilon, bounds }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{plateau_well, PlateauParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Integer lattice points in the closed disk of the given radius, with
    /// their labels ordered by `(x, y)`.
    fn lattice_disk(radius: f64) -> (Configuration, Vec<(i64, i64)>) {
        let r = radius.floor() as i64;
        let mut coords = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                if ((x * x + y * y) as f64).sqrt() <= radius {
                    coords.push((x, y));
                }
            }
        }
        let pts: Vec<(f64, f64)> =
            coords.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
        (Configuration::from_xy(&pts), coords)
    }

    fn grid3x3() -> (Configuration, Vec<(i64, i64)>) {
        lattice_disk(1.5)
    }

    #[test]
    fn window_preconditions_are_enforced() {
        let (x, _) = grid3x3();
        assert!(matches!(
            build_bond_graph(&x, 0.05, 0.05),
            Err(GraphError::BadWindow { .. })
        ));
        assert!(matches!(
            build_bond_graph(&x, -0.01, 0.05),
            Err(GraphError::BadWindow { .. })
        ));
        assert!(matches!(
            build_bond_graph(&x, 0.05, 0.2),
            Err(GraphError::BadWindow { .. })
        ));
        assert!(build_bond_graph(&x, 0.0, 0.01).is_ok());
    }

    #[test]
    fn lattice_disk_degrees_match_the_offset_rule() {
        let (x, coords) = lattice_disk(5.0);
        let graph = build_bond_graph(&x, 0.05, 0.1).unwrap();
        let set: BTreeSet<(i64, i64)> = coords.iter().copied().collect();
        for (label, &(cx, cy)) in coords.iter().enumerate() {
            let expected = 1 + RING_OFFSETS
                .iter()
                .filter(|&&(dx, dy)| set.contains(&(cx + dx, cy + dy)))
                .count();
            assert_eq!(graph.neighborhood_size(label), expected, "at {:?}", (cx, cy));
            assert_eq!(graph.is_boundary(label), expected != 9);
        }
        // The exact lattice has no pairs in the long window: after √2 the
        // next separation is 2.
        assert!(graph.long_edges().is_empty());
        // Interior plus boundary partitions the labels.
        assert_eq!(
            graph.interior().len() + graph.boundary().len(),
            coords.len()
        );
    }

    #[test]
    fn degenerate_window_is_closed_at_both_ends() {
        let x = Configuration::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]);
        let graph = build_bond_graph(&x, 0.0, 0.01).unwrap();
        assert!(graph.is_bond(0, 1), "separation exactly 1 bonds at alpha = 0");
        assert!(graph.is_bond(0, 2), "separation exactly sqrt(2) bonds at alpha = 0");
        let y = Configuration::from_xy(&[(0.0, 0.0), (0.9999999, 0.0)]);
        let graph = build_bond_graph(&y, 0.0, 0.01).unwrap();
        assert!(!graph.is_bond(0, 1));
    }

    #[test]
    fn chart_of_an_exact_lattice_center() {
        let (x, coords) = grid3x3();
        let graph = build_bond_graph(&x, 0.05, 0.1).unwrap();
        let center = coords.iter().position(|&c| c == (0, 0)).unwrap();
        let chart = local_chart(&x, &graph, center, 5.0).unwrap();

        assert_eq!(chart.assignment[0], (center, (0, 0)));
        // Nearest neighbor: the axis sites tie at radius 1, smallest label
        // wins — that is (−1, 0), the second label in (x, y) order.
        let nearest = coords.iter().position(|&c| c == (-1, 0)).unwrap();
        assert_eq!(chart.ring[0], nearest);
        assert_eq!(chart.offset_of(nearest), Some((1, 0)));
        // Counterclockwise from (−1, 0): the diagonal (−1, −1) follows.
        let second = coords.iter().position(|&c| c == (-1, -1)).unwrap();
        assert_eq!(chart.ring[1], second);
        assert_eq!(chart.offset_of(second), Some((1, 1)));

        assert_eq!(chart.pair_deformations.len(), 36);
        assert!(chart.max_delta < 1e-12);
        assert!(chart.bounds_hold);
        assert_eq!(chart.empirical_constant, Some(0.0));
        for cell in &chart.unit_cells {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    assert!(graph.is_bond(cell[i], cell[j]) || cell[i] == cell[j]);
                }
            }
        }
    }

    #[test]
    fn chart_requires_a_nine_member_neighborhood() {
        let (x, coords) = grid3x3();
        let graph = build_bond_graph(&x, 0.05, 0.1).unwrap();
        let corner = coords.iter().position(|&c| c == (-1, -1)).unwrap();
        match local_chart(&x, &graph, corner, 5.0) {
            Err(GraphError::ChartUnavailable { count, .. }) => assert_eq!(count, 4),
            other => panic!("expected ChartUnavailable, got {other:?}"),
        }
    }

    #[test]
    fn diagonal_pushed_to_1_6_loses_the_chart() {
        let (_, coords) = grid3x3();
        let mut pts: Vec<(f64, f64)> =
            coords.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
        let corner = coords.iter().position(|&c| c == (1, 1)).unwrap();
        let s = 1.6 / SQRT_2;
        pts[corner] = (s, s);
        let x = Configuration::from_xy(&pts);
        let graph = build_bond_graph(&x, 0.05, 0.1).unwrap();
        let center = coords.iter().position(|&c| c == (0, 0)).unwrap();
        match local_chart(&x, &graph, center, 5.0) {
            Err(GraphError::ChartUnavailable { count, .. }) => assert_eq!(count, 8),
            other => panic!("expected ChartUnavailable, got {other:?}"),
        }
    }

    #[test]
    fn stretched_axis_neighbor_is_a_rigidity_failure() {
        let (_, coords) = grid3x3();
        let mut pts: Vec<(f64, f64)> =
            coords.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
        let moved = coords.iter().position(|&c| c == (0, 1)).unwrap();
        pts[moved] = (0.0, 1.41);
        let x = Configuration::from_xy(&pts);
        let graph = build_bond_graph(&x, 0.05, 0.1).unwrap();
        let center = coords.iter().position(|&c| c == (0, 0)).unwrap();
        // The moved site still bonds to the center (1.41 < √2 + 0.05), so the
        // neighborhood keeps nine members, but its separation from the axis
        // neighbors (≈1.73) exceeds the window while the chart demands a
        // bond there.
        match local_chart(&x, &graph, center, 5.0) {
            Err(GraphError::RigidityFailure { p, q, expected_bond, observed, .. }) => {
                assert!(p == moved || q == moved);
                assert!(expected_bond);
                assert!(observed > SQRT_2 + 0.05);
            }
            other => panic!("expected RigidityFailure, got {other:?}"),
        }
    }

    #[test]
    fn noise_preserves_edges_charts_and_the_deformation_constant() {
        let (clean, coords) = lattice_disk(5.0);
        let alpha = 0.05;
        let clean_graph = build_bond_graph(&clean, alpha, 0.1).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noisy_pts: Vec<(f64, f64)> = clean
            .points()
            .iter()
            .map(|p| {
                (
                    p.x + rng.random_range(-0.01..=0.01),
                    p.y + rng.random_range(-0.01..=0.01),
                )
            })
            .collect();
        let noisy = Configuration::from_xy(&noisy_pts);
        let noisy_graph = build_bond_graph(&noisy, alpha, 0.1).unwrap();

        assert_eq!(clean_graph.edges(), noisy_graph.edges());
        assert_eq!(clean_graph.boundary(), noisy_graph.boundary());

        let mut worst_constant: f64 = 0.0;
        for center in clean_graph.interior() {
            let a = local_chart(&clean, &clean_graph, center, 5.0).unwrap();
            let b = local_chart(&noisy, &noisy_graph, center, 5.0).unwrap();
            // The clean lattice breaks the four-way nearest tie by label;
            // noise resolves it by actual radius, so the noisy ring may start
            // at a different axis neighbor. The charts must agree up to that
            // quarter-turn ambiguity: same cyclic ring, even offset.
            let offset = (0..8)
                .find(|&k| (0..8).all(|i| b.ring[i] == a.ring[(i + k) % 8]))
                .unwrap_or_else(|| {
                    panic!("noisy ring is not a rotation of the clean ring at {:?}", coords[center])
                });
            assert_eq!(offset % 2, 0, "ring must start at an axis neighbor");
            assert!(b.bounds_hold);
            worst_constant = worst_constant.max(b.empirical_constant.unwrap());
        }
        assert!(
            worst_constant <= 5.0,
            "deformation constant {worst_constant} exceeded 5"
        );
    }

    #[test]
    fn nine_member_cap_holds_under_the_window_ceiling() {
        // Sparse random configurations respecting the separation floor never
        // produce more than nine members, even with the window pushed near
        // its theoretical ceiling.
        let alpha = 0.067;
        let floor = 1.0 - alpha;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let mut pts: Vec<(f64, f64)> = Vec::new();
            while pts.len() < 30 {
                let cand = (rng.random_range(0.0..6.0), rng.random_range(0.0..6.0));
                if pts.iter().all(|&(px, py)| {
                    ((px - cand.0).powi(2) + (py - cand.1).powi(2)).sqrt() > floor
                }) {
                    pts.push(cand);
                }
            }
            let x = Configuration::from_xy(&pts);
            let graph = build_bond_graph(&x, alpha, 0.1).unwrap();
            for p in 0..graph.len() {
                assert!(graph.neighborhood_size(p) <= 9);
            }
        }
        // A compressed lattice sits exactly at the cap.
        let s = 0.951;
        let pts: Vec<(f64, f64)> = (-2..=2)
            .flat_map(|i| (-2..=2).map(move |j| (i as f64 * s, j as f64 * s)))
            .collect();
        let x = Configuration::from_xy(&pts);
        let graph = build_bond_graph(&x, alpha, 0.1).unwrap();
        let center = pts.iter().position(|&(a, b)| a == 0.0 && b == 0.0).unwrap();
        assert_eq!(graph.neighborhood_size(center), 9);
    }

    #[test]
    fn rotated_patch_embeds_back_onto_the_integer_lattice() {
        let (clean, coords) = lattice_disk(4.0);
        let rotated = clean.transformed(30f64.to_radians(), Vec2::new(0.3, 0.7), false);
        let graph = build_bond_graph(&rotated, 0.05, 0.1).unwrap();
        let embedding = embed_region(&rotated, &graph, None, 5.0).unwrap();

        assert_eq!(embedding.coordinate_of(embedding.seed), Some((0, 0)));
        assert_eq!(embedding.coordinate_of(embedding.nearest), Some((1, 0)));
        assert!(embedding.omitted.is_empty());

        // Recovered coordinates must be congruent to the original integer
        // coordinates: all pairwise squared distances agree.
        for (i, &(p, cp)) in embedding.coordinates.iter().enumerate() {
            for &(q, cq) in &embedding.coordinates[(i + 1)..] {
                let orig = {
                    let (a, b) = (coords[p], coords[q]);
                    (a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)
                };
                let image = (cp.0 - cq.0).pow(2) + (cp.1 - cq.1).pow(2);
                assert_eq!(orig, image, "pair ({p}, {q})");
            }
        }

        // The embedded region covers every interior site and its one-ring.
        for &p in &embedding.interior {
            assert!(embedding.coordinate_of(p).is_some());
            for &q in graph.neighbors(p) {
                assert!(embedding.coordinate_of(q).is_some());
            }
        }
    }

    #[test]
    fn reflected_patch_still_embeds_consistently() {
        let (clean, coords) = lattice_disk(3.0);
        let reflected = clean.transformed(0.0, Vec2::new(0.0, 0.0), true);
        let graph = build_bond_graph(&reflected, 0.05, 0.1).unwrap();
        let embedding = embed_region(&reflected, &graph, None, 5.0).unwrap();
        for (i, &(p, cp)) in embedding.coordinates.iter().enumerate() {
            for &(q, cq) in &embedding.coordinates[(i + 1)..] {
                let orig = {
                    let (a, b) = (coords[p], coords[q]);
                    (a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)
                };
                let image = (cp.0 - cq.0).pow(2) + (cp.1 - cq.1).pow(2);
                assert_eq!(orig, image);
            }
        }
    }

    #[test]
    fn explicit_seed_controls_the_normalization() {
        let (x, coords) = lattice_disk(4.0);
        let graph = build_bond_graph(&x, 0.05, 0.1).unwrap();
        let seed = coords.iter().position(|&c| c == (1, 0)).unwrap();
        let embedding = embed_region(&x, &graph, Some(seed), 5.0).unwrap();
        assert_eq!(embedding.seed, seed);
        assert_eq!(embedding.coordinate_of(seed), Some((0, 0)));
        assert_eq!(embedding.coordinate_of(embedding.nearest), Some((1, 0)));

        let boundary_label = graph.boundary()[0];
        assert!(matches!(
            embed_region(&x, &graph, Some(boundary_label), 5.0),
            Err(GraphError::SeedNotInterior { .. })
        ));
    }

    #[test]
    fn too_small_patch_has_no_interior_region() {
        let (x, _) = grid3x3();
        let graph = build_bond_graph(&x, 0.05, 0.1).unwrap();
        // The center is interior, but its neighbors are all boundary, so no
        // site has a boundary-free neighborhood.
        assert!(matches!(
            embed_region(&x, &graph, None, 5.0),
            Err(GraphError::RegionEmpty)
        ));
    }

    #[test]
    fn ninety_degree_chart_seam_is_a_gluing_conflict() {
        // Two adjacent centers whose hand-written charts disagree by a
        // quarter turn: center 0 places target 2 at (1, 1), while center 1 —
        // itself at (1, 0) from center 0 — places target 2 at (1, 0) + its
        // own offset (1, 0), i.e. (2, 0). Honest geometry cannot reach this
        // state (adjacent charts of one plane always agree), so the fixture
        // drives the conflict branch directly.
        let mut charts: BTreeMap<usize, Vec<(usize, (i64, i64))>> = BTreeMap::new();
        charts.insert(0, vec![(0, (0, 0)), (1, (1, 0)), (2, (1, 1))]);
        charts.insert(1, vec![(1, (0, 0)), (0, (-1, 0)), (2, (1, 0))]);
        let centers: BTreeSet<usize> = [0, 1].into_iter().collect();
        let mut coords = BTreeMap::new();
        match glue_charts(0, &centers, &charts, &mut coords) {
            Err(GraphError::GluingConflict { through, center, target, existing, proposed }) => {
                assert_eq!((through, center, target), (0, 1, 2));
                assert_eq!(existing, (1, 1));
                assert_eq!(proposed, (2, 0));
            }
            other => panic!("expected GluingConflict, got {other:?}"),
        }
    }

    #[test]
    fn min_distance_check_reports_the_closest_pair() {
        let pot = plateau_well(&PlateauParams::truncated_reference()).unwrap();
        let x = Configuration::from_xy(&[(0.0, 0.0), (3.0, 0.0), (3.0, 0.9), (-2.0, 0.0)]);
        let report = min_distance_check(&pot, &x, None);
        assert_relative_eq!(report.r_min, 1.0 - pot.params.alpha);
        assert_relative_eq!(report.min_distance.unwrap(), 0.9);
        assert_eq!(report.witness, Some((1, 2)));
        assert!(!report.holds);

        let report = min_distance_check(&pot, &x, Some(0.5));
        assert!(report.holds);

        let single = Configuration::from_xy(&[(0.0, 0.0)]);
        let report = min_distance_check(&pot, &single, None);
        assert!(report.holds);
        assert!(report.min_distance.is_none());
    }

    #[test]
    fn edge_rows_classify_the_three_windows() {
        // Distances: (0,1) at 1.0 (bond), (0,2) at 1.47 (long for
        // alpha'' = 0.12), (1,2) at 0.9 (below the floor).
        let p2 = (1.17545, 0.8827342355005660_f64);
        let x = Configuration::from_xy(&[(0.0, 0.0), (1.0, 0.0), p2]);
        let graph = build_bond_graph(&x, 0.05, 0.12).unwrap();
        let rows = edge_rows(&x, &graph);
        let class_of = |p: usize, q: usize| {
            rows.iter().find(|r| (r.p, r.q) == (p, q)).map(|r| r.class)
        };
        assert_eq!(class_of(0, 1), Some(EdgeClass::SideRange));
        assert_eq!(class_of(0, 2), Some(EdgeClass::Long));
        assert_eq!(class_of(1, 2), Some(EdgeClass::None));

        let mut csv_bytes = Vec::new();
        write_edge_csv(&x, &graph, &mut csv_bytes).unwrap();
        let text = String::from_utf8(csv_bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("p,q,distance,class"));
        assert_eq!(lines.next(), Some("0,1,1,side-range"));
        assert!(lines.next().unwrap().ends_with(",long"));
        assert!(lines.next().unwrap().ends_with(",none"));
    }

    #[test]
    fn embedding_csv_uses_integer_coordinates() {
        let embedding = RegionEmbedding {
            seed: 4,
            nearest: 1,
            coordinates: vec![(1, (1, 0)), (4, (0, 0)), (7, (-1, 2))],
            interior: vec![4],
            omitted: vec![],
        };
        let mut out = Vec::new();
        write_embedding_csv(&embedding, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "label,u,v\n1,1,0\n4,0,0\n7,-1,2\n"
        );
    }

    #[test]
    fn exact_rigidity_accepts_squares_and_reports_hypothesis_gaps() {
        let square = [
            Vec2::new(0.2, 0.3),
            Vec2::new(1.2, 0.3),
            Vec2::new(1.2, 1.3),
            Vec2::new(0.2, 1.3),
        ];
        match quadrilateral_rigidity_check(&square, 0.0, 8.0, 1e-9) {
            RigidityVerdict::Square { side, deviation, empirical_constant } => {
                assert_relative_eq!(side, 1.0);
                assert!(deviation < 1e-12);
                assert!(empirical_constant.is_none());
            }
            other => panic!("expected Square, got {other:?}"),
        }

        // Diagonal pushed to 1.6 breaks the hypothesis: the claim is silent.
        let s = 1.6 / SQRT_2;
        let pushed = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(s, s),
            Vec2::new(0.0, 1.0),
        ];
        match quadrilateral_rigidity_check(&pushed, 0.0, 8.0, 1e-9) {
            RigidityVerdict::NotConstrained { pair, distance, .. } => {
                assert_eq!(pair, (0, 2));
                assert_relative_eq!(distance, 1.6, max_relative = 1e-12);
            }
            other => panic!("expected NotConstrained, got {other:?}"),
        }

        // Short side also breaks the hypothesis.
        let short = [
            Vec2::new(0.0, 0.0),
            Vec2::new(0.9, 0.0),
            Vec2::new(0.9, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(matches!(
            quadrilateral_rigidity_check(&short, 0.0, 8.0, 1e-9),
            RigidityVerdict::NotConstrained { pair: (0, 1), .. }
        ));
    }

    #[test]
    fn window_rigidity_measures_the_deformation_constant() {
        let alpha = 0.02;
        // A slightly deformed unit square: all six separations stay inside
        // the window, the worst relative deviation is about 0.02.
        let quad = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.02, 0.0),
            Vec2::new(1.01, 1.01),
            Vec2::new(0.0, 0.99),
        ];
        match quadrilateral_rigidity_check(&quad, alpha, 8.0, 1e-9) {
            RigidityVerdict::Square { deviation, empirical_constant, .. } => {
                let c = empirical_constant.unwrap();
                assert!(c > 0.0 && c <= 8.0, "constant {c}");
                assert_relative_eq!(deviation, c * alpha, max_relative = 1e-12);
            }
            other => panic!("expected Square, got {other:?}"),
        }

        // The same quadrilateral fails a tighter allowance: a violation with
        // the worst pair as witness.
        match quadrilateral_rigidity_check(&quad, alpha, 0.5, 1e-9) {
            RigidityVerdict::Violation { deviation, allowance, .. } => {
                assert!(deviation > allowance);
                assert_relative_eq!(allowance, 0.5 * alpha);
            }
            other => panic!("expected Violation, got {other:?}"),
        }

        // Hypothesis failure: one vertex pulled out of the window.
        let wide = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.5, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(matches!(
            quadrilateral_rigidity_check(&wide, alpha, 8.0, 1e-9),
            RigidityVerdict::NotConstrained { .. }
        ));
    }

    #[test]
    fn triangle_bounds_match_the_named_constants_at_zero_width() {
        let report = triangle_angle_bounds(TriangleCase::AllBonds, 0.0);
        let min = report.bounds.iter().find(|b| b.lower).unwrap();
        let max = report.bounds.iter().find(|b| !b.lower).unwrap();
        assert_relative_eq!(min.analytic_deg, (3f64 / 4.0).acos().to_degrees());
        assert_relative_eq!(max.analytic_deg, 90.0);
        assert!(min.gap_deg < 0.01, "gap {}", min.gap_deg);
        assert!(max.gap_deg < 0.01, "gap {}", max.gap_deg);

        let report = triangle_angle_bounds(TriangleCase::TwoBondsFar, 0.0);
        let apex = report
            .bounds
            .iter()
            .find(|b| b.target == AngleTarget::Apex)
            .unwrap();
        let base = report
            .bounds
            .iter()
            .find(|b| b.target == AngleTarget::Base)
            .unwrap();
        assert_relative_eq!(apex.analytic_deg, 60.0);
        assert_relative_eq!(
            base.analytic_deg,
            (1.0 / (2.0 * SQRT_2)).acos().to_degrees()
        );
        assert!(apex.gap_deg < 0.01);
        assert!(base.gap_deg < 0.01);
    }

    #[test]
    fn triangle_bounds_track_the_window_width() {
        for &eps in &[0.0, 0.01, 0.05] {
            for case in [
                TriangleCase::TwoBondsFar,
                TriangleCase::AllBonds,
                TriangleCase::PinnedBondFar,
                TriangleCase::AllBondsPinned,
            ] {
                let report = triangle_angle_bounds(case, eps);
                for bound in &report.bounds {
                    assert!(
                        bound.gap_deg < 0.01,
                        "{case:?} eps {eps}: analytic {} vs numeric {}",
                        bound.analytic_deg,
                        bound.numeric_deg
                    );
                }
            }
        }
        // The pinned-far apex bound approaches arccos(1/(2√2)) from below as
        // the window tightens.
        let tight = triangle_angle_bounds(TriangleCase::PinnedBondFar, 1e-6);
        assert_relative_eq!(
            tight.bounds[0].analytic_deg,
            (1.0 / (2.0 * SQRT_2)).acos().to_degrees(),
            epsilon = 1e-3
        );
        let pinned = triangle_angle_bounds(TriangleCase::AllBondsPinned, 1e-6);
        assert_relative_eq!(pinned.bounds[0].analytic_deg, 45.0, epsilon = 1e-3);
    }
}
