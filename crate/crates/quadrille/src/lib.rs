//! # quadrille
//!
//! A desk-scale laboratory for two-dimensional crystallization onto the
//! square lattice.
//!
//! The crate studies finite point configurations `X = {x_1, …, x_N} ⊂ ℝ²`
//! interacting through a radial pair potential `V`, with total energy
//!
//! ```text
//! E[V](X) = ½ Σ_{i≠j} V(|x_i − x_j|).
//! ```
//!
//! For *one-well* potentials — a hard or steeply repulsive core, a single
//! well spanning the distances `1` and `√2`, and a short or rapidly decaying
//! tail — minimizers of `E[V]` crystallize onto scaled copies of the square
//! lattice `ℤ²`. The library provides the computational machinery behind
//! that phenomenon:
//!
//! * [`potential`] — hard wells, piecewise-smooth "plateau" wells (steep
//!   power core, parabolic walls, flat floor, decaying tail), quantitative
//!   one-well condition checks, and lattice resummation of tails.
//! * [`energy`] — total and four-point energies, the gradient / Hessian /
//!   spectrum of the four-point energy at the unit square, and per-point
//!   lattice energies with certified truncation tails.
//! * [`graph`] — bond graphs at deformation tolerance `α`, local square
//!   charts around interior points, breadth-first region embeddings into
//!   `ℤ²`, quadrilateral rigidity, and triangle angle bounds.
//! * [`chart`] — triangulated discrete charts, piecewise-affine comparison
//!   maps, John-type linear distortion checks, quadratic distortion and
//!   cardinality inequalities for squares of every scale, and the exact
//!   edge-classification identity behind energy resummation.
//! * [`lattice`] — integer geometry of `ℤ²`: representation counts of
//!   integers as sums of two squares, the scale set `D̃` with its
//!   orbit-pairing construction, sublattice decompositions, and exact
//!   covering verifications.
//! * [`minimize`] — deterministic seeded local minimization (Barzilai–Borwein
//!   descent with backtracking), multi-start drivers, lattice candidates,
//!   bond-count maximization for hard wells, and crystallization bound
//!   reports.
//!
//! All floating-point tolerances are explicit arguments or named constants;
//! every randomized routine takes a seed and is bit-reproducible.

pub mod chart;
pub mod energy;
pub mod geometry;
pub mod graph;
pub mod lattice;
pub mod minimize;
pub mod potential;

pub use energy::{Configuration, Energy, Quadrilateral};
pub use geometry::Vec2;
pub use potential::{Potential, Range, Segment};
