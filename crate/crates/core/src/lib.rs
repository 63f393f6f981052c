//! Popular max-weight and max-utility common independent sets under matroid constraints.

pub mod error;
pub mod exhaustive;
pub mod io;
pub mod lp;
pub mod matroid;
pub mod mnat;
pub mod nearopt;
pub mod onesided;
pub mod random;
pub mod rational;
pub mod set;
pub mod twosided;
pub mod wmi;

pub use error::{Error, Result};
pub use set::{ElemSet, Ground};
