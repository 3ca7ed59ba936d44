//! File formats, dataset pipeline and command line for `raychan-core`.
//!
//! * [`scene`]: JSON scene description traced by the built-in tracer
//! * [`config`]: job configuration
//! * [`tensor`]: `DAI6` binary tensor files
//! * [`manifest`]: per-run manifest with shapes and checksums
//! * [`pipeline`]: static, mobile and beam dataset generation, validation

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod scene;
pub mod tensor;
