//! Square-lattice number theory: representation counts, the scale set, and
//! the doubling-map orbit decomposition behind lattice resummation.
//!
//! Distances realized by `Z²` are square roots of sums of two squares. The
//! quarter-plane `Q = {(a,b) : a > 0, b ≥ 0}` is a fundamental domain for
//! the quarter-turn rotation, so the number of quarter-plane vectors of
//! squared length `n` is `r₂(n)/4`, with `r₂` the classical representation
//! count. The doubling map
//!
//! ```text
//! F(a,b) = (a−b, a+b)  if a > b,   (a+b, b−a)  otherwise
//! ```
//!
//! sends the quarter-plane into itself, doubles squared lengths, and is a
//! bijection onto the vectors of even squared length. Walking `F` from the
//! vectors of odd squared length (the orbit roots) visits every
//! quarter-plane vector exactly once; pairing consecutive orbit elements
//! `(v, F(v))` splits all realized distances into classes `{r, √2·r}` with
//! the generator lengths forming the *scale set* — exactly the `√n` with
//! `n` a sum of two squares of even 2-adic valuation. The resummation series
//! in the potential module runs over these scales, and [`verify_cover`] and
//! [`edge_cover_identity`] check the combinatorial facts the resummation
//! identity rests on.
//!
//! Everything here is exact integer arithmetic.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Errors from the lattice routines.
#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("representation count requires a positive norm (got 0)")]
    ZeroNorm,
    #[error("decomposition radius must be at least √2 (got {0})")]
    RadiusTooSmall(f64),
    #[error("no lattice vector has squared length {0}")]
    NotRepresentable(u64),
}

/// An integer lattice vector.
pub type Vector = (i64, i64);

/// Squared Euclidean length.
pub fn norm_sq(v: Vector) -> u64 {
    (v.0 * v.0 + v.1 * v.1) as u64
}

/// Counter-clockwise quarter turn.
pub fn rotate_quarter(v: Vector) -> Vector {
    (-v.1, v.0)
}

/// Membership in the quarter-plane fundamental domain `{a > 0, b ≥ 0}`.
pub fn in_quarter_plane(v: Vector) -> bool {
    v.0 > 0 && v.1 >= 0
}

/// The unique quarter-turn rotate of `v` inside the quarter-plane
/// (`None` for the zero vector).
pub fn quarter_plane_rep(v: Vector) -> Option<Vector> {
    let mut w = v;
    for _ in 0..4 {
        if in_quarter_plane(w) {
            return Some(w);
        }
        w = rotate_quarter(w);
    }
    None
}

/// The doubling map on the quarter-plane: multiplication by `1+i` composed
/// with the rotation that lands back in the quarter-plane. Doubles squared
/// lengths.
pub fn doubling_map(v: Vector) -> Vector {
    debug_assert!(in_quarter_plane(v));
    if v.0 > v.1 {
        (v.0 - v.1, v.0 + v.1)
    } else {
        (v.0 + v.1, v.1 - v.0)
    }
}

/// Inverse of the doubling map: `Some` exactly on the quarter-plane vectors
/// of even squared length (the image of [`doubling_map`]).
pub fn doubling_preimage(v: Vector) -> Option<Vector> {
    if !in_quarter_plane(v) || norm_sq(v) % 2 == 1 {
        return None;
    }
    let (c, d) = v;
    Some(if d >= c { ((c + d) / 2, (d - c) / 2) } else { ((c - d) / 2, (c + d) / 2) })
}

/// Number of odd-prime-factor data: whether `n`'s odd part is a sum of two
/// squares, and the product of `(e_p + 1)` over primes `p ≡ 1 (mod 4)`.
fn odd_part_profile(mut n: u64) -> (bool, u64) {
    n >>= n.trailing_zeros();
    let mut m = 1u64;
    let mut p = 3u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0u64;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            if p % 4 == 1 {
                m *= e + 1;
            } else if e % 2 == 1 {
                return (false, 0);
            }
        }
        p += 2;
    }
    if n > 1 {
        if n % 4 == 1 {
            m *= 2;
        } else {
            return (false, 0);
        }
    }
    (true, m)
}

/// `r₂(n)`: the number of lattice vectors of squared length `n`, by the
/// divisor formula (`4·Π(e_p+1)` over primes `≡ 1 mod 4`, zero if any prime
/// `≡ 3 mod 4` divides to an odd power). Zero is a parameter error.
pub fn representation_count(n: u64) -> Result<u64, LatticeError> {
    if n == 0 {
        return Err(LatticeError::ZeroNorm);
    }
    let (representable, m) = odd_part_profile(n);
    Ok(if representable { 4 * m } else { 0 })
}

/// `m(r) = r₂(r²)/4` for `r = √n`: the number of quarter-plane vectors of
/// squared length `n`. Satisfies `m(r) = m(√2·r)`, i.e. this function takes
/// the same value at `n` and `2n`.
pub fn pair_multiplicity(norm_sq: u64) -> Result<u64, LatticeError> {
    representation_count(norm_sq).map(|c| c / 4)
}

/// Membership of `√n` in the scale set: `n` has even 2-adic valuation and is
/// a sum of two squares.
pub fn in_scale_set(norm_sq: u64) -> bool {
    if norm_sq == 0 || norm_sq.trailing_zeros() % 2 == 1 {
        return false;
    }
    odd_part_profile(norm_sq).0
}

/// `m(√n)` when `√n` is in the scale set, zero otherwise. This is the
/// coefficient sequence of the resummation series.
pub fn scale_multiplicity(norm_sq: u64) -> u64 {
    if !in_scale_set(norm_sq) {
        return 0;
    }
    pair_multiplicity(norm_sq).expect("norm is positive")
}

/// Memoized representation counts built by direct lattice enumeration,
/// independent of the divisor formula. Grows geometrically on demand.
#[derive(Debug, Clone)]
pub struct ScaleTable {
    counts: Vec<u32>,
}

impl Default for ScaleTable {
    fn default() -> Self {
        Self::new()
    }
}

impl ScaleTable {
    pub fn new() -> Self {
        Self::up_to(1 << 12)
    }

    pub fn up_to(norm_max: u64) -> Self {
        ScaleTable { counts: build_counts(norm_max as usize) }
    }

    fn ensure(&mut self, n: u64) {
        if (n as usize) < self.counts.len() {
            return;
        }
        let mut m = self.counts.len().max(2);
        while m <= n as usize {
            m *= 2;
        }
        self.counts = build_counts(m);
    }

    /// `r₂(n)` by enumeration.
    pub fn raw_count(&mut self, n: u64) -> u64 {
        if n == 0 {
            return 0;
        }
        self.ensure(n);
        self.counts[n as usize] as u64
    }

    /// Same as [`scale_multiplicity`], from the enumeration table.
    pub fn multiplicity(&mut self, n: u64) -> u64 {
        if n == 0 || n.trailing_zeros() % 2 == 1 {
            return 0;
        }
        self.raw_count(n) / 4
    }
}

fn build_counts(norm_max: usize) -> Vec<u32> {
    let mut counts = vec![0u32; norm_max + 1];
    let r = (norm_max as f64).sqrt() as usize + 1;
    for x in 0..=r {
        let x2 = x * x;
        if x2 > norm_max {
            break;
        }
        for y in 0..=r {
            let n = x2 + y * y;
            if n > norm_max {
                break;
            }
            if n == 0 {
                continue;
            }
            let mult = (if x > 0 { 2 } else { 1 }) * (if y > 0 { 2 } else { 1 });
            counts[n] += mult as u32;
        }
    }
    counts
}

/// One orbit pair `{generator, partner}` with `partner = F(generator)` and
/// `|partner|² = 2·|generator|²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitPair {
    pub generator: Vector,
    pub partner: Vector,
}

/// All orbit pairs whose generator has a given squared length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleClass {
    /// Squared generator length `r²` (a scale-set member).
    pub norm_sq: u64,
    /// Number of pairs — equals `m(r)`.
    pub multiplicity: u64,
    /// Pairs sorted lexicographically by generator.
    pub pairs: Vec<OrbitPair>,
}

/// The orbit decomposition of the quarter-plane up to a squared-length bound:
/// every vector of squared length `≤ max_norm_sq` sits in exactly one pair of
/// exactly one class (partners may exceed the bound; they are the doubling
/// images of the last in-range generators).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub max_norm_sq: u64,
    /// Classes sorted by `norm_sq`.
    pub classes: Vec<ScaleClass>,
}

/// One row of the tabular export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecompositionRow {
    pub norm_sq: u64,
    pub generator_x: i64,
    pub generator_y: i64,
    pub partner_x: i64,
    pub partner_y: i64,
    pub multiplicity: u64,
}

impl Decomposition {
    /// The squared scales present, ascending.
    pub fn scale_norms(&self) -> Vec<u64> {
        self.classes.iter().map(|c| c.norm_sq).collect()
    }

    /// Flat rows in deterministic order (class norm, then generator).
    pub fn rows(&self) -> Vec<DecompositionRow> {
        let mut out = Vec::new();
        for class in &self.classes {
            for pair in &class.pairs {
                out.push(DecompositionRow {
                    norm_sq: class.norm_sq,
                    generator_x: pair.generator.0,
                    generator_y: pair.generator.1,
                    partner_x: pair.partner.0,
                    partner_y: pair.partner.1,
                    multiplicity: class.multiplicity,
                });
            }
        }
        out
    }
}

fn build_decomposition_norm(norm_max: u64) -> Decomposition {
    let reach = (norm_max as f64).sqrt() as i64 + 1;
    // Roots: quarter-plane vectors of odd squared length.
    let mut roots: Vec<Vector> = Vec::new();
    for a in 1..=reach {
        for b in 0..=reach {
            let v = (a, b);
            let n = norm_sq(v);
            if n <= norm_max && n % 2 == 1 {
                roots.push(v);
            }
        }
    }
    roots.sort_by_key(|v| (norm_sq(*v), v.0, v.1));

    let mut classes: BTreeMap<u64, Vec<OrbitPair>> = BTreeMap::new();
    for root in roots {
        let mut chain = vec![root];
        loop {
            let next = doubling_map(*chain.last().expect("nonempty"));
            if norm_sq(next) > norm_max {
                break;
            }
            chain.push(next);
        }
        for pair in chain.chunks(2) {
            let generator = pair[0];
            let partner = if pair.len() == 2 { pair[1] } else { doubling_map(generator) };
            classes
                .entry(norm_sq(generator))
                .or_default()
                .push(OrbitPair { generator, partner });
        }
    }
    let classes = classes
        .into_iter()
        .map(|(norm_sq, mut pairs)| {
            pairs.sort_by_key(|p| p.generator);
            ScaleClass { norm_sq, multiplicity: pairs.len() as u64, pairs }
        })
        .collect();
    Decomposition { max_norm_sq: norm_max, classes }
}

/// Builds the orbit decomposition for all squared lengths up to `radius²`.
pub fn build_decomposition(radius: f64) -> Result<Decomposition, LatticeError> {
    if !(radius * radius >= 2.0 - 1e-9) {
        return Err(LatticeError::RadiusTooSmall(radius));
    }
    Ok(build_decomposition_norm((radius * radius + 1e-9).floor() as u64))
}

/// Outcome of the covering check behind the resummation identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub radius: f64,
    /// Squared-length bound up to which covering was demanded.
    pub norm_checked: u64,
    /// Quarter-plane vectors within the bound.
    pub vectors_checked: u64,
    /// Every in-range vector sits in exactly one pair slot.
    pub exactly_once: bool,
    /// Every partner equals the doubling image of its generator, with
    /// doubled squared length, inside the quarter-plane.
    pub pairing_consistent: bool,
    /// Every class size matches the divisor-formula multiplicity.
    pub multiplicity_consistent: bool,
    /// Human-readable description of the first failure, if any.
    pub first_failure: Option<String>,
}

impl CoverReport {
    pub fn holds(&self) -> bool {
        self.exactly_once && self.pairing_consistent && self.multiplicity_consistent
    }
}

/// Verifies, exhaustively up to `radius`, that the orbit pairing covers the
/// quarter-plane exactly once, is structurally consistent, and reproduces
/// the divisor-formula multiplicities. The decomposition is built out to
/// `√2·radius` so that every vector within `radius` is certainly assigned.
pub fn verify_cover(radius: f64) -> Result<CoverReport, LatticeError> {
    if !(radius * radius >= 2.0 - 1e-9) {
        return Err(LatticeError::RadiusTooSmall(radius));
    }
    let norm_checked = (radius * radius + 1e-9).floor() as u64;
    let deco = build_decomposition_norm(2 * norm_checked);

    let mut report = CoverReport {
        radius,
        norm_checked,
        vectors_checked: 0,
        exactly_once: true,
        pairing_consistent: true,
        multiplicity_consistent: true,
        first_failure: None,
    };
    let fail = |report: &mut CoverReport, what: String| {
        if report.first_failure.is_none() {
            report.first_failure = Some(what);
        }
    };

    let mut seen: HashMap<Vector, u32> = HashMap::new();
    for class in &deco.classes {
        let expected = pair_multiplicity(class.norm_sq)?;
        if class.multiplicity != expected {
            report.multiplicity_consistent = false;
            fail(
                &mut report,
                format!(
                    "class {} has {} pairs, divisor formula gives {}",
                    class.norm_sq, class.multiplicity, expected
                ),
            );
        }
        for pair in &class.pairs {
            let ok = in_quarter_plane(pair.generator)
                && in_quarter_plane(pair.partner)
                && pair.partner == doubling_map(pair.generator)
                && norm_sq(pair.partner) == 2 * norm_sq(pair.generator)
                && norm_sq(pair.generator) == class.norm_sq;
            if !ok {
                report.pairing_consistent = false;
                fail(&mut report, format!("inconsistent pair {pair:?} in class {}", class.norm_sq));
            }
            for v in [pair.generator, pair.partner] {
                *seen.entry(v).or_insert(0) += 1;
            }
        }
    }
    for (v, count) in &seen {
        if *count != 1 {
            report.exactly_once = false;
            fail(&mut report, format!("vector {v:?} appears in {count} pair slots"));
        }
    }
    let reach = (norm_checked as f64).sqrt() as i64 + 1;
    for a in 1..=reach {
        for b in 0..=reach {
            let v = (a, b);
            if norm_sq(v) > norm_checked {
                continue;
            }
            report.vectors_checked += 1;
            if seen.get(&v).copied().unwrap_or(0) == 0 {
                report.exactly_once = false;
                fail(&mut report, format!("vector {v:?} not covered by any pair"));
            }
        }
    }
    Ok(report)
}

/// Outcome of the edge-covering identity on a finite box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCoverReport {
    pub box_radius: i64,
    pub norm_sq: u64,
    /// Squares of the given side length fully inside the box.
    pub squares: u64,
    /// Interior pairs at the side distance that were checked.
    pub side_pairs_checked: u64,
    /// Interior pairs at the diagonal distance that were checked.
    pub diagonal_pairs_checked: u64,
    pub holds: bool,
    pub first_failure: Option<String>,
}

/// Checks, for squares of side `√norm_sq` with vertices in a box
/// `{−B..B}²`, that every interior pair at the side distance is a side of
/// exactly two such squares and every interior pair at the diagonal distance
/// is the diagonal of exactly one — the counting fact that turns sums of
/// four-point energies over all lattice squares into plain pair sums.
pub fn edge_cover_identity(box_radius: i64, norm_sq: u64) -> Result<EdgeCoverReport, LatticeError> {
    if norm_sq == 0 {
        return Err(LatticeError::ZeroNorm);
    }
    // Side-vector representatives in the quarter-plane; each square has
    // exactly one of its four side directions there, so enumerating
    // (corner, representative) lists each square exactly once.
    let reach = (norm_sq as f64).sqrt() as i64 + 1;
    let mut reps: Vec<Vector> = Vec::new();
    for a in 1..=reach {
        for b in 0..=reach {
            if (a * a + b * b) as u64 == norm_sq {
                reps.push((a, b));
            }
        }
    }
    if reps.is_empty() {
        return Err(LatticeError::NotRepresentable(norm_sq));
    }

    let b = box_radius;
    let inside = |v: Vector| v.0.abs() <= b && v.1.abs() <= b;
    let canon = |p: Vector, q: Vector| if p <= q { (p, q) } else { (q, p) };
    let add = |map: &mut HashMap<(Vector, Vector), u32>, p: Vector, q: Vector| {
        *map.entry(canon(p, q)).or_insert(0) += 1;
    };

    let mut side: HashMap<(Vector, Vector), u32> = HashMap::new();
    let mut diag: HashMap<(Vector, Vector), u32> = HashMap::new();
    let mut squares = 0u64;
    for x in -b..=b {
        for y in -b..=b {
            let a0 = (x, y);
            for &v in &reps {
                let iv = rotate_quarter(v);
                let c2 = (a0.0 + v.0, a0.1 + v.1);
                let c3 = (c2.0 + iv.0, c2.1 + iv.1);
                let c4 = (a0.0 + iv.0, a0.1 + iv.1);
                if inside(c2) && inside(c3) && inside(c4) {
                    squares += 1;
                    add(&mut side, a0, c2);
                    add(&mut side, c2, c3);
                    add(&mut side, c4, c3);
                    add(&mut side, a0, c4);
                    add(&mut diag, a0, c3);
                    add(&mut diag, c2, c4);
                }
            }
        }
    }

    let margin = 2 * reach + 2;
    let inner = b - margin;
    let mut report = EdgeCoverReport {
        box_radius: b,
        norm_sq,
        squares,
        side_pairs_checked: 0,
        diagonal_pairs_checked: 0,
        holds: inner > 0,
        first_failure: if inner > 0 {
            None
        } else {
            Some(format!("box radius {b} too small for side length √{norm_sq}"))
        },
    };
    let fail = |report: &mut EdgeCoverReport, what: String| {
        report.holds = false;
        if report.first_failure.is_none() {
            report.first_failure = Some(what);
        }
    };
    let in_inner = |v: Vector| v.0.abs() <= inner && v.1.abs() <= inner;
    for x in -inner..=inner.max(-inner) {
        for y in -inner..=inner {
            let a0 = (x, y);
            for &v in &reps {
                let iv = rotate_quarter(v);
                for u in [v, iv] {
                    let q = (a0.0 + u.0, a0.1 + u.1);
                    if in_inner(q) {
                        report.side_pairs_checked += 1;
                        let got = side.get(&canon(a0, q)).copied().unwrap_or(0);
                        if got != 2 {
                            fail(
                                &mut report,
                                format!("pair {a0:?}-{q:?} is a side of {got} squares, expected 2"),
                            );
                        }
                    }
                }
                let w = (v.0 + iv.0, v.1 + iv.1);
                for u in [w, rotate_quarter(w)] {
                    let q = (a0.0 + u.0, a0.1 + u.1);
                    if in_inner(q) {
                        report.diagonal_pairs_checked += 1;
                        let got = diag.get(&canon(a0, q)).copied().unwrap_or(0);
                        if got != 1 {
                            fail(
                                &mut report,
                                format!(
                                    "pair {a0:?}-{q:?} is a diagonal of {got} squares, expected 1"
                                ),
                            );
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representation_counts_match_known_values() {
        assert_eq!(representation_count(1).unwrap(), 4);
        assert_eq!(representation_count(2).unwrap(), 4);
        assert_eq!(representation_count(3).unwrap(), 0);
        assert_eq!(representation_count(5).unwrap(), 8);
        assert_eq!(representation_count(9).unwrap(), 4);
        assert_eq!(representation_count(25).unwrap(), 12);
        assert_eq!(representation_count(45).unwrap(), 8);
        assert!(matches!(representation_count(0), Err(LatticeError::ZeroNorm)));
    }

    #[test]
    fn divisor_formula_matches_enumeration() {
        let mut table = ScaleTable::up_to(2000);
        for n in 1..=2000u64 {
            assert_eq!(
                representation_count(n).unwrap(),
                table.raw_count(n),
                "representation count mismatch at n = {n}"
            );
        }
    }

    #[test]
    fn multiplicity_is_doubling_invariant() {
        for n in 1..=2000u64 {
            assert_eq!(
                pair_multiplicity(n).unwrap(),
                pair_multiplicity(2 * n).unwrap(),
                "m(√n) ≠ m(√(2n)) at n = {n}"
            );
        }
    }

    #[test]
    fn scale_set_membership() {
        // 1 and 2 are scales (as squared lengths 1 and 4); √2 (squared
        // length 2) is not; 3 is not representable; 5 is; 18 = 2·9 has odd
        // 2-adic valuation; 20 = 4·5 has even valuation and is representable.
        assert!(in_scale_set(1));
        assert!(!in_scale_set(2));
        assert!(!in_scale_set(3));
        assert!(in_scale_set(4));
        assert!(in_scale_set(5));
        assert!(in_scale_set(9));
        assert!(!in_scale_set(18));
        assert!(in_scale_set(20));
        assert_eq!(scale_multiplicity(4), 1);
        assert_eq!(scale_multiplicity(2), 0);
        assert_eq!(scale_multiplicity(25), 3);
        assert_eq!(scale_multiplicity(0), 0);
    }

    #[test]
    fn doubling_map_walks_the_axis_orbit() {
        let mut v = (1, 0);
        let expected = [(1, 1), (2, 0), (2, 2), (4, 0), (4, 4), (8, 0)];
        for e in expected {
            v = doubling_map(v);
            assert_eq!(v, e);
        }
    }

    #[test]
    fn doubling_preimage_inverts_exactly_on_even_norms() {
        for a in 1..=40i64 {
            for b in 0..=40i64 {
                let v = (a, b);
                let image = doubling_map(v);
                assert_eq!(norm_sq(image), 2 * norm_sq(v));
                assert!(in_quarter_plane(image));
                assert_eq!(doubling_preimage(image), Some(v), "preimage failed for {v:?}");
                if norm_sq(v) % 2 == 1 {
                    assert_eq!(doubling_preimage(v), None);
                } else {
                    let u = doubling_preimage(v).expect("even norm has a preimage");
                    assert_eq!(doubling_map(u), v);
                }
            }
        }
    }

    #[test]
    fn decomposition_classes_match_closed_form_scale_set() {
        let deco = build_decomposition(20.0).unwrap();
        let norms = deco.scale_norms();
        let expected: Vec<u64> = (1..=400u64).filter(|n| in_scale_set(*n)).collect();
        assert_eq!(norms, expected);
        for class in &deco.classes {
            assert_eq!(class.multiplicity, scale_multiplicity(class.norm_sq));
        }
    }

    #[test]
    fn decomposition_pairs_the_smallest_scales_as_expected() {
        let deco = build_decomposition(5.0).unwrap();
        let class1 = &deco.classes[0];
        assert_eq!(class1.norm_sq, 1);
        assert_eq!(class1.pairs, vec![OrbitPair { generator: (1, 0), partner: (1, 1) }]);
        let class4 = deco.classes.iter().find(|c| c.norm_sq == 4).unwrap();
        assert_eq!(class4.pairs, vec![OrbitPair { generator: (2, 0), partner: (2, 2) }]);
        let class5 = deco.classes.iter().find(|c| c.norm_sq == 5).unwrap();
        assert_eq!(class5.multiplicity, 2);
        assert_eq!(
            class5.pairs,
            vec![
                OrbitPair { generator: (1, 2), partner: (3, 1) },
                OrbitPair { generator: (2, 1), partner: (1, 3) },
            ]
        );
    }

    #[test]
    fn roots_are_exactly_the_odd_norms() {
        let deco = build_decomposition(12.0).unwrap();
        let mut from_pairs: Vec<Vector> = Vec::new();
        for class in &deco.classes {
            for pair in &class.pairs {
                for v in [pair.generator, pair.partner] {
                    if doubling_preimage(v).is_none() && norm_sq(v) <= deco.max_norm_sq {
                        from_pairs.push(v);
                    }
                }
            }
        }
        from_pairs.sort_by_key(|v| (norm_sq(*v), v.0, v.1));
        let mut expected: Vec<Vector> = Vec::new();
        for a in 1..=13i64 {
            for b in 0..=13i64 {
                if norm_sq((a, b)) <= 144 && norm_sq((a, b)) % 2 == 1 {
                    expected.push((a, b));
                }
            }
        }
        expected.sort_by_key(|v| (norm_sq(*v), v.0, v.1));
        assert_eq!(from_pairs, expected);
    }

    #[test]
    fn cover_is_exact_at_moderate_radius() {
        let report = verify_cover(15.0).unwrap();
        assert!(report.holds(), "{:?}", report.first_failure);
        assert!(report.vectors_checked > 150);
        assert!(verify_cover(1.0).is_err());
    }

    #[test]
    fn edge_cover_identity_small_boxes() {
        for norm in [1u64, 2, 4, 5] {
            let report = edge_cover_identity(12, norm).unwrap();
            assert!(report.holds, "norm {norm}: {:?}", report.first_failure);
            assert!(report.side_pairs_checked > 0);
            assert!(report.diagonal_pairs_checked > 0);
        }
        assert!(matches!(edge_cover_identity(12, 3), Err(LatticeError::NotRepresentable(3))));
        assert!(matches!(edge_cover_identity(12, 0), Err(LatticeError::ZeroNorm)));
    }

    #[test]
    fn decomposition_rows_are_deterministic() {
        let a = build_decomposition(10.0).unwrap();
        let b = build_decomposition(10.0).unwrap();
        assert_eq!(a.rows(), b.rows());
        let rows = a.rows();
        assert!(rows.windows(2).all(|w| {
            (w[0].norm_sq, (w[0].generator_x, w[0].generator_y))
                <= (w[1].norm_sq, (w[1].generator_x, w[1].generator_y))
        }));
    }
}
