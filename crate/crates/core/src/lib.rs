//! Robot-centric knowledge about household objects.
//!
//! The crate turns raw measurements of objects (two depth views, marker
//! heights, a press test, a ramp test and a scale reading) into a symbolic
//! knowledge base:
//!
//! 1. [`sensing`] simulates or ingests [`sensing::MeasurementRecord`]s.
//! 2. [`geometry`] and [`properties`] extract six physical properties and
//!    derive four functional ones (support, containment, movability, blockage).
//! 3. [`symbols`] clusters every property into qualitative labels and
//!    summarizes each class as label distributions, serialized as JSON.
//! 4. [`analysis`] embeds instances with Isomap and clusters them with K-means.
//!
//! ```
//! use object_kb::symbols::{subcategorize, Orientation};
//!
//! let values = [("cup_1", 0.76), ("cup_2", 3.17), ("cup_3", 7.69)]
//!     .map(|(id, v)| (id.to_string(), v));
//! let labels = ["soft", "medium", "rigid"].map(String::from);
//! let sub = subcategorize("rigidity", &values, 3, &labels, Orientation::Ascending).unwrap();
//! assert_eq!(sub.assignments[2].1, "rigid");
//! ```

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod properties;
pub mod rng;
pub mod sensing;
pub mod symbols;

pub use error::{Error, ErrorClass, Result};

/// Seed used whenever none is given.
pub const DEFAULT_SEED: u64 = 42;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sensing.md")]
    mod sensing {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/properties.md")]
    mod properties {}
    #[doc = include_str!("../../../book/src/symbols.md")]
    mod symbols {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
