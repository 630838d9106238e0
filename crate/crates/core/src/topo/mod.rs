//! Source-topology to canonical-topology transfer.
//!
//! A one-time precompute finds, for every canonical (wrap) vertex, the
//! closest source triangle and solves for coordinates in the tetrahedron
//! obtained by lifting that triangle along its unnormalized normal. At
//! runtime the canonical mesh is a pure gather over deformed source faces.

pub mod bvh;
pub mod correspondence;
pub mod tet;

pub use bvh::{brute_force_closest, closest_point_on_triangle, ClosestHit, TriangleBvh};
pub use correspondence::{
    precompute_correspondence, precompute_correspondence_with, Correspondence, CorrespondenceOptions,
};
pub use tet::{interpolate, lift, solve_tet_barycentric};
