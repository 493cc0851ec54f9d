//! Dialect pronunciation distances, agglomerative clustering and spatially
//! aware evaluation of the resulting partitions.

pub mod cdistance;
pub mod cluster;
pub mod distmatrix;
pub mod dtw;
pub mod error;
pub mod io;
pub mod levenshtein;
pub mod mds;
pub mod model;
pub mod pipeline;
pub mod segments;
pub mod transport;

pub use error::{Error, Result};
