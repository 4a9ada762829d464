//! Torus-invariant minimal Lagrangian tori in complex projective space.
//!
//! The crate works with the Fubini–Study metric on `CP^n` and the standard
//! `T^n`-action. A weight vector `v` selects a codimension-one subtorus; the
//! quotient dynamics live on a three-dimensional reduced space with chart
//! `(tau, theta, psi)`, where a characteristic field is integrated, its return
//! map measured, and closed orbits swept back into immersed tori which are
//! then certified by finite differences.
//!
//! Everything here is `no_std` with `alloc`; file formats, the CLI and
//! parallel scans live in the `mintori` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod calabi;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod kdtree;
pub mod linalg;
pub mod reduced;
pub mod subtorus;
pub mod torus;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{AmbientPoint, CanonicalFiberData, FubiniStudy, TangentVec, TorusAlgebraVec};
pub use num_complex::Complex64 as C64;
