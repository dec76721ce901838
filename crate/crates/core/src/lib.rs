//! Color-space detectability and discriminability toolkit: conversions,
//! histogram backprojection, pixel clustering, a synthetic scene renderer,
//! and a grid-world color-guided search simulator.

pub mod cluster;
pub mod colorspace;
pub mod detect;
pub mod error;
pub mod harness;
pub mod palette;
pub mod raster;
pub mod scenegen;
pub mod searchsim;

pub use colorspace::{ColorSpaceId, Space};
pub use error::{Error, Result};
pub use raster::{LabelMap, RasterImage};
