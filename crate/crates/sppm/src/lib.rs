//! Stochastic periodic porous microstructures: generation, tiling, slicing
//! and elastic analysis.
//!
//! The pipeline runs in unit-cell coordinates end to end:
//!
//! 1. [`sampling`] places pores by dart throwing, with shared face patterns
//!    duplicated onto opposite faces for boundary periodicity.
//! 2. [`connectivity`] links pores with degree-bounded tunnel networks and
//!    bridges the surface to the interior.
//! 3. [`field`] turns pores and tunnels into one implicit field; [`voxel`]
//!    samples it, measures porosity and verifies solid connectivity;
//!    [`mesh`] extracts isosurfaces when a mesh is actually wanted.
//! 4. [`unit`] searches pore count and band depth until a cell meets its
//!    target porosity, [`tiling`] assembles cells under Wang-tile rules,
//!    [`slicer`] rasterizes printer layer images straight from the fields,
//!    and [`analysis`] computes effective elastic properties.

pub mod analysis;
pub mod config;
pub mod connectivity;
pub mod field;
pub mod mesh;
pub mod sampling;
pub mod seed;
pub mod slicer;
pub mod tiling;
pub mod unit;
pub mod voxel;
