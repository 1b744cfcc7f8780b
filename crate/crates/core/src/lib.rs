//! Geocoding as geohash sequence generation.
//!
//! A text query is mapped to a length-9 geohash by a small autoregressive
//! policy; the decoded cell centroid is the predicted coordinate. The crate
//! holds every piece needed to reproduce that pipeline at desk scale:
//!
//! * [`geohash`] bit-exact geohash codec and validation of model output
//! * [`geodesic`] WGS-84 inverse and forward geodesic solver
//! * [`reward`] distance-deviation reward and group-relative advantages
//! * [`policy`] tabular log-linear policy, MLE training, sampling, beam search
//! * [`grpo`] clipped-surrogate policy optimization over rollout groups
//! * [`dataset`] synthetic city, base / anchor-offset samples, CoT records, splits
//! * [`eval`] ADD / Acc@k / EC metrics and simplified retrieval baselines

pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geodesic;
pub mod geohash;
pub mod grpo;
pub mod policy;
pub mod reward;
pub mod rng;

pub use error::{Error, Result};
pub use geohash::{BBox, Geohash, LatLon};
