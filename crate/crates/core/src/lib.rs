//! Semantic-aware point cloud registration.
//!
//! Builds correspondences between two labeled LiDAR scans, scores them with
//! combined semantic and geometric consistency inside local groups, and
//! selects the best local rigid transform before refining it. Works without
//! `std`; only `alloc` is required.

#![no_std]

extern crate alloc;

pub mod cloud;
pub mod config;
pub mod consistency;
pub mod correspond;
pub mod correspondence;
pub mod error;
pub mod eval;
pub mod ground;
pub mod labels;
pub mod neighbors;
pub mod pipeline;
pub mod synth;
pub mod transform;
pub mod verify;

pub use cloud::{Label, Point, SemanticPointCloud};
pub use config::{PipelineConfig, SemanticMode, Variant};
pub use correspondence::{Correspondence, CorrespondenceSet};
pub use error::{Error, Result};
pub use transform::RigidTransform;
