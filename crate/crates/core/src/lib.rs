//! Flat-surface realization toolkit: end-space classification for infinite
//! translation surfaces, the end-grafting construction, Cayley slit
//! assemblies realizing prescribed isometry and Veech groups, and exact
//! rational verification of the resulting certificates.

pub mod assembly;
pub mod end_space;
pub mod flatgeom;
pub mod geom;
pub mod ordinal;
pub mod grafting;
pub mod groups;
pub mod surface;
