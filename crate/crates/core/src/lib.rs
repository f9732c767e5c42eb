#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod control;
pub mod expr;
pub mod green;
pub mod grid;
pub mod inverse;
pub mod math;
pub mod mc;
pub mod optim;
pub mod path;
pub mod problem;
pub mod rate;
pub mod skeleton;
pub mod suites;
