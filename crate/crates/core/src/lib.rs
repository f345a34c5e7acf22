//! WG-7 stream cipher and a bit-based division property cube attack workbench.

pub mod anf;
pub mod cipher;
pub mod cube;
pub mod divprop;
mod error;
pub mod gf7;
pub mod milp;
pub mod trail;

pub use cipher::{keystream, CipherState, Iv81, Key80};
pub use cube::{AttackReport, CubeSpec, SuperpolyProfile};
pub use divprop::{DivVector, KSet, SboxTrailTable};
pub use error::Error;
pub use gf7::{BinMatrix7, FieldElem};
pub use trail::{Frontier, MatrixSel, RoundSpec, TrailEngine, Verdict};
