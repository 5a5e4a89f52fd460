//! Visual-attention video analysis: phase-spectrum saliency over color
//! opponency, intensity and motion channels; inhibition-of-return region
//! extraction; appearance/position matching against a bounded track memory;
//! and flagging of sudden speed changes.
//!
//! [`pipeline::Pipeline`] ties the stages together frame by frame.
//! [`synthgen`] renders synthetic scenes with ground truth for evaluation
//! through [`metrics`].

pub mod channels;
pub mod config;
pub mod descriptors;
pub mod error;
pub mod io;
pub mod ior;
pub mod metrics;
pub mod pipeline;
pub mod plane;
pub mod spectral;
pub mod synthgen;
pub mod tracker;

pub use channels::{ChannelConfig, ChannelSet, Frame};
pub use config::PipelineConfig;
pub use descriptors::{ColorHistogram, RegionDescriptor};
pub use error::{Error, Result};
pub use ior::{IorConfig, Region};
pub use metrics::{EvalReport, GroundTruth};
pub use pipeline::{FrameOutput, Pipeline};
pub use plane::Plane;
pub use spectral::{FusionConfig, SaliencyMap};
pub use synthgen::SceneScript;
pub use tracker::{MatchConfig, SuspicionEvent, TrackMemory};
