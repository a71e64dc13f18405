//! Physical properties measured per instance, and the functional properties
//! (affordance degrees) derived from them.
//!
//! The functional combinations are fixed choices of this crate:
//!
//! * support = (rigidity · flatness · area_n)^(1/3)
//! * containment = (hollowness · volume_n)^(1/2)
//! * movability = 1 − (weight_n + roughness_deg / 90) / 2
//! * blockage = 1 − movability
//!
//! The geometric means let any missing prerequisite veto the affordance.
//! Movability averages instead, since weight and sliding resistance trade off.
//! `_n` values are min-max normalized over the corpus ([`NormalizationContext`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, RansacParams};
use crate::sensing::MeasurementRecord;

pub const DEFAULT_DELTA0_MM: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Size {
    pub length_m: f64,
    pub width_m: f64,
    pub height_m: f64,
}

impl Size {
    pub fn footprint_area(&self) -> f64 {
        self.length_m * self.width_m
    }

    pub fn volume(&self) -> f64 {
        self.length_m * self.width_m * self.height_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalProfile {
    pub size: Size,
    pub flatness: f64,
    pub hollowness: f64,
    /// 1 for a fully rigid object, decaying with press deformation.
    pub rigidity: f64,
    pub roughness_deg: f64,
    pub weight_g: f64,
    pub deformation_mm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalProfile {
    pub support: f64,
    pub containment: f64,
    pub movability: f64,
    pub blockage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionConfig {
    pub delta0_mm: f64,
    pub ransac: RansacParams,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            delta0_mm: DEFAULT_DELTA0_MM,
            ransac: RansacParams::default(),
        }
    }
}

/// Observed range of one scalar over the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(values: impl IntoIterator<Item = f64>) -> Self {
        values.into_iter().fold(
            Range {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |r, v| Range {
                min: r.min.min(v),
                max: r.max.max(v),
            },
        )
    }

    /// Min-max scaling into [0, 1]; a degenerate range maps everything to 0.5.
    pub fn normalize(&self, v: f64) -> f64 {
        if self.max == self.min {
            0.5
        } else {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationContext {
    pub footprint_area_m2: Range,
    pub volume_m3: Range,
    pub weight_g: Range,
    pub roughness_deg: Range,
}

pub fn rigidity_from_deformation(deformation_mm: f64, delta0_mm: f64) -> f64 {
    (-deformation_mm / delta0_mm).exp()
}

pub fn extract_physical(
    record: &MeasurementRecord,
    config: &ExtractionConfig,
) -> Result<PhysicalProfile> {
    let id = record.instance_id.as_str();
    if !(config.delta0_mm > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "delta0_mm must be positive, got {}",
            config.delta0_mm
        )));
    }
    let bb = geometry::bounding_box(&record.side_cloud.merged(&record.top_cloud))
        .map_err(|e| e.in_instance(id))?;
    let flatness =
        geometry::flatness_ratio(&record.top_cloud, &config.ransac).map_err(|e| e.in_instance(id))?;
    if flatness.no_plane_warning() {
        log::warn!("{id}: no near-horizontal plane in the top view; flatness set to 0");
    }
    let hollowness = geometry::marker_depth_ratio(
        record.rim_top_z_m,
        record.marker_internal_z_m,
        record.marker_reference_z_m,
    )
    .map_err(|e| e.in_instance(id))?;
    let deformation_mm = ((record.press_contact_z_m - record.press_stop_z_m) * 1000.0).max(0.0);
    Ok(PhysicalProfile {
        size: Size {
            length_m: bb.length_m,
            width_m: bb.width_m,
            height_m: bb.height_m,
        },
        flatness: flatness.ratio,
        hollowness,
        rigidity: rigidity_from_deformation(deformation_mm, config.delta0_mm),
        roughness_deg: record.slide_angle_deg,
        weight_g: record.weight_g,
        deformation_mm,
    })
}

pub fn normalize(profiles: &[PhysicalProfile]) -> Result<NormalizationContext> {
    if profiles.is_empty() {
        return Err(Error::EmptyInput("normalize"));
    }
    Ok(NormalizationContext {
        footprint_area_m2: Range::of(profiles.iter().map(|p| p.size.footprint_area())),
        volume_m3: Range::of(profiles.iter().map(|p| p.size.volume())),
        weight_g: Range::of(profiles.iter().map(|p| p.weight_g)),
        roughness_deg: Range::of(profiles.iter().map(|p| p.roughness_deg)),
    })
}

pub fn derive_support(p: &PhysicalProfile, ctx: &NormalizationContext) -> f64 {
    let area = ctx.footprint_area_m2.normalize(p.size.footprint_area());
    (p.rigidity * p.flatness * area).cbrt().clamp(0.0, 1.0)
}

pub fn derive_containment(p: &PhysicalProfile, ctx: &NormalizationContext) -> f64 {
    let volume = ctx.volume_m3.normalize(p.size.volume());
    (p.hollowness * volume).sqrt().clamp(0.0, 1.0)
}

/// Ease of moving the object; 1 is effortless.
pub fn derive_movability(p: &PhysicalProfile, ctx: &NormalizationContext) -> f64 {
    let weight = ctx.weight_g.normalize(p.weight_g);
    let roughness = (p.roughness_deg / 90.0).clamp(0.0, 1.0);
    (1.0 - (weight + roughness) / 2.0).clamp(0.0, 1.0)
}

pub fn derive_blockage(movability: f64) -> f64 {
    1.0 - movability
}

pub fn derive_functional(p: &PhysicalProfile, ctx: &NormalizationContext) -> FunctionalProfile {
    let movability = derive_movability(p, ctx);
    FunctionalProfile {
        support: derive_support(p, ctx),
        containment: derive_containment(p, ctx),
        movability,
        blockage: derive_blockage(movability),
    }
}
