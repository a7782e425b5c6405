//! Toric non-commutative crepant resolutions of 3-dimensional Gorenstein cones.

pub mod analysis;
pub mod cm;
pub mod dimer;
pub mod lattice;
pub mod modmax;
pub mod mutation;
pub mod quiver;
pub mod render;
pub mod verify;

pub use cm::{cm_interval, enumerate_cm, is_cm, is_cm_by_cells, CmError, CmWitness, Signature};
pub use lattice::{BVector, LatticeError, Mat3, RationalVec3, ToricData, Vec3};
