//! Hyperlapse planning: choose which input frames (or panoramas built around
//! them) to keep so that the output video is smooth, steady in speed and
//! consistent in appearance.

pub mod cli;
pub mod cost;
pub mod dag;
pub mod error;
pub mod eval;
pub mod multi;
pub mod panorama;
pub mod sampler;
pub mod second_order;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
