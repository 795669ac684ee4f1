#![no_std]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod corpus;
pub mod features;
pub mod scaling;
pub mod text;
pub mod eval;
pub mod regressor;
pub mod tuning;
pub mod llm;
pub mod trait_features;
pub mod synthetic;
