//! Detection-dataset synthesis and evaluation toolkit.
//!
//! - [`model`]: rasters, boxes, manifests, object crops, seeding
//! - [`poisson`]: gradient-domain seamless cloning (5-point Poisson solve)
//! - [`compositor`]: object sets, vicinity placement, clone images, training pairs, dataset expansion
//! - [`region_loss`]: box-weighted region loss and the generator loss aggregate
//! - [`nn`]: reference kernels for multi-scale blur downsampling and the fusion block
//! - [`eval`]: heat-map decoding, AP and mAP@0.5
//! - [`augment`]: baseline geometric pipeline and information-dropping augmentations
//! - [`stats`]: instance-size statistics and plots
//! - [`demo`]: procedural seabed scenes for examples and smoke runs
//! - [`cli`]: the `seaclone` command-line surface

pub mod augment;
pub mod cli;
pub mod compositor;
pub mod demo;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod poisson;
pub mod region_loss;
pub mod stats;

pub use error::{Error, Result};
