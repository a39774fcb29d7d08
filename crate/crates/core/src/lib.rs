//! Binary MDS array codes built on EVENODD, with the pairwise transformation
//! that gives optimal repair access, and exact repair-bandwidth accounting.

pub mod error;
pub mod evenodd;
pub mod gf2;
pub mod meter;
pub mod multilayer;
pub mod quad;
pub mod ring;
pub mod te2;
pub mod transform;

pub use error::{CodeError, Result};
pub use evenodd::{
    check_mds, encode, syndrome_decode, CodeParams, CodewordArray, ErasurePattern, MdsReport,
};
pub use meter::{optimal_bound, AccessReport};
pub use multilayer::{build_multilayer, MultilayerCode, RepairPlan};
pub use ring::{Modulus, RingElement, RingError};
