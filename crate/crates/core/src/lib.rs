//! Exact equivariant cell complexes for PSL2 over imaginary quadratic integers, their
//! torsion subcomplexes, and the resulting homology.

pub mod cellcomplex;
pub mod error;
pub mod groupcohom;
pub mod iqfield;
pub mod linalg;
pub mod moebius;
pub mod poly;
pub mod specseq;
pub mod swan;
pub mod torsion;
pub mod wallres;

pub use error::{Error, Result};
