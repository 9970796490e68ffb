//! Semiclassical wave-packet dynamics for electrons carrying orbital
//! angular momentum: transverse vortex modes, a paraxial reference solver,
//! momentum-space monopole geometry, equations of motion with Berry and
//! Zeeman terms, and the associated noncanonical symplectic structure.

pub mod berry;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod modes;
pub mod ode;
pub mod output;
pub mod paraxial;
pub mod scenarios;
pub mod selftest;
pub mod special;
pub mod spectral;
pub mod svg;
pub mod symplectic;
pub mod units;

pub use error::{Error, Result, Warning};
