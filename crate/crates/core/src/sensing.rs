//! Measurement records, produced either by simulating parametric objects or
//! by reading a dataset directory recorded elsewhere.
//!
//! The simulator stands in for the camera, arm and scale. Objects rest in
//! their natural pose with openings facing up, the table plane is `z = 0`, and
//! the object footprint is centered on the origin. Two orthographic views are
//! rendered: one looking down from `+z` and one looking along `-x`.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};
use crate::rng::seeded;

/// Objects at or above this height cannot be pressed by the arm.
pub const MAX_PRESS_HEIGHT_M: f64 = 0.20;
pub const DEFAULT_RAMP_STEP_DEG: f64 = 0.5;
pub const DEFAULT_POINTS_PER_VIEW: usize = 1000;
pub const MIN_POINTS_PER_VIEW: usize = 100;
/// File name reserved for the dataset manifest.
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CLOUD_DIR: &str = "clouds";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Box,
    OpenBox,
    Cylinder,
    /// Cups and bowls: a cylindrical shell with a closed base.
    OpenCylinder,
    Sphere,
    Sheet,
}

impl Shape {
    pub fn is_open(self) -> bool {
        matches!(self, Shape::OpenBox | Shape::OpenCylinder)
    }

    pub fn is_round(self) -> bool {
        matches!(self, Shape::Cylinder | Shape::OpenCylinder | Shape::Sphere)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Shape::Box => "box",
            Shape::OpenBox => "open_box",
            Shape::Cylinder => "cylinder",
            Shape::OpenCylinder => "open_cylinder",
            Shape::Sphere => "sphere",
            Shape::Sheet => "sheet",
        };
        f.write_str(s)
    }
}

/// Outer dimensions in meters. Round shapes use `length_m` as the diameter
/// and require `width_m` to match; a sphere also requires `height_m` to match.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    pub length_m: f64,
    pub width_m: f64,
    pub height_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_thickness_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_thickness_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    #[serde(default)]
    pub name: String,
    /// Press deformation in mm once the effort threshold is reached.
    pub stiffness_mm: f64,
    pub friction_mu: f64,
    pub density_g_cm3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: String,
    pub class_name: String,
    pub shape: Shape,
    pub dims: Dimensions,
    pub material: Material,
    #[serde(default)]
    pub noise_sigma_m: f64,
}

impl ObjectSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| {
            Err(Error::InvalidSpec {
                id: self.id.clone(),
                reason,
            })
        };
        if self.id.trim().is_empty() {
            return bad("id must not be empty".into());
        }
        let d = &self.dims;
        for (name, v) in [
            ("length_m", d.length_m),
            ("width_m", d.width_m),
            ("height_m", d.height_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("dims.{name} must be positive, got {v}"));
            }
        }
        if self.shape.is_round() && (d.length_m - d.width_m).abs() > 1e-9 {
            return bad(format!(
                "{} needs length_m == width_m (diameter), got {} and {}",
                self.shape, d.length_m, d.width_m
            ));
        }
        if self.shape == Shape::Sphere && (d.length_m - d.height_m).abs() > 1e-9 {
            return bad(format!(
                "sphere needs height_m == length_m (diameter), got {} and {}",
                d.height_m, d.length_m
            ));
        }
        if self.shape.is_open() {
            let (Some(wall), Some(base)) = (d.wall_thickness_m, d.base_thickness_m) else {
                return bad(format!(
                    "{} needs wall_thickness_m and base_thickness_m",
                    self.shape
                ));
            };
            if !(wall.is_finite() && wall > 0.0 && 2.0 * wall < d.width_m.min(d.length_m)) {
                return bad(format!(
                    "wall_thickness_m must be positive and leave a cavity, got {wall}"
                ));
            }
            if !(base.is_finite() && base > 0.0 && base < d.height_m) {
                return bad(format!(
                    "base_thickness_m must be positive and below height_m, got {base}"
                ));
            }
        }
        let m = &self.material;
        if !(m.stiffness_mm.is_finite() && m.stiffness_mm >= 0.0) {
            return bad(format!("material.stiffness_mm must be >= 0, got {}", m.stiffness_mm));
        }
        if !(m.friction_mu.is_finite() && m.friction_mu >= 0.0) {
            return bad(format!("material.friction_mu must be >= 0, got {}", m.friction_mu));
        }
        if !(m.density_g_cm3.is_finite() && m.density_g_cm3 >= 0.0) {
            return bad(format!(
                "material.density_g_cm3 must be >= 0, got {}",
                m.density_g_cm3
            ));
        }
        if !(self.noise_sigma_m.is_finite() && self.noise_sigma_m >= 0.0) {
            return bad(format!("noise_sigma_m must be >= 0, got {}", self.noise_sigma_m));
        }
        Ok(())
    }

    /// Height of the first surface hit by a vertical ray at `(x, y)`.
    pub fn top_surface_z(&self, x: f64, y: f64) -> Option<f64> {
        let d = &self.dims;
        let (hl, hw) = (d.length_m / 2.0, d.width_m / 2.0);
        let wall = d.wall_thickness_m.unwrap_or(0.0);
        let base = d.base_thickness_m.unwrap_or(0.0);
        match self.shape {
            Shape::Box | Shape::Sheet => {
                (x.abs() <= hl && y.abs() <= hw).then_some(d.height_m)
            }
            Shape::OpenBox => {
                if x.abs() > hl || y.abs() > hw {
                    None
                } else if x.abs() < hl - wall && y.abs() < hw - wall {
                    Some(base)
                } else {
                    Some(d.height_m)
                }
            }
            Shape::Cylinder => (x.hypot(y) <= hl).then_some(d.height_m),
            Shape::OpenCylinder => {
                let rho = x.hypot(y);
                if rho > hl {
                    None
                } else if rho < hl - wall {
                    Some(base)
                } else {
                    Some(d.height_m)
                }
            }
            Shape::Sphere => {
                let rho2 = x * x + y * y;
                (rho2 <= hl * hl).then(|| hl + (hl * hl - rho2).sqrt())
            }
        }
    }

    /// `x` of the first surface hit by a ray travelling along `-x` at `(y, z)`.
    pub fn side_surface_x(&self, y: f64, z: f64) -> Option<f64> {
        let d = &self.dims;
        let (hl, hw) = (d.length_m / 2.0, d.width_m / 2.0);
        if !(0.0..=d.height_m).contains(&z) {
            return None;
        }
        match self.shape {
            Shape::Box | Shape::Sheet | Shape::OpenBox => (y.abs() <= hw).then_some(hl),
            Shape::Cylinder | Shape::OpenCylinder => {
                (y.abs() <= hl).then(|| (hl * hl - y * y).sqrt())
            }
            Shape::Sphere => {
                let r2 = hl * hl - y * y - (z - hl) * (z - hl);
                (r2 >= 0.0).then(|| r2.sqrt())
            }
        }
    }

    /// Material volume in m³ (outer volume minus any open cavity).
    pub fn shell_volume_m3(&self) -> f64 {
        let d = &self.dims;
        let r = d.length_m / 2.0;
        let wall = d.wall_thickness_m.unwrap_or(0.0);
        let base = d.base_thickness_m.unwrap_or(0.0);
        match self.shape {
            Shape::Box | Shape::Sheet => d.length_m * d.width_m * d.height_m,
            Shape::OpenBox => {
                d.length_m * d.width_m * d.height_m
                    - (d.length_m - 2.0 * wall) * (d.width_m - 2.0 * wall) * (d.height_m - base)
            }
            Shape::Cylinder => PI * r * r * d.height_m,
            Shape::OpenCylinder => {
                PI * r * r * d.height_m - PI * (r - wall) * (r - wall) * (d.height_m - base)
            }
            Shape::Sphere => 4.0 / 3.0 * PI * r * r * r,
        }
    }

    /// Height of a marker placed inside an open object or on top of a closed one.
    pub fn internal_marker_z(&self) -> f64 {
        if self.shape.is_open() {
            self.dims.base_thickness_m.unwrap_or(0.0)
        } else {
            self.dims.height_m
        }
    }
}

/// Raw per-instance feature data.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub instance_id: String,
    pub class_name: String,
    pub top_cloud: PointCloud,
    pub side_cloud: PointCloud,
    pub marker_reference_z_m: f64,
    pub marker_internal_z_m: f64,
    pub rim_top_z_m: f64,
    pub press_contact_z_m: f64,
    pub press_stop_z_m: f64,
    pub slide_angle_deg: f64,
    pub weight_g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub points_per_view: usize,
    pub ramp_step_deg: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            points_per_view: DEFAULT_POINTS_PER_VIEW,
            ramp_step_deg: DEFAULT_RAMP_STEP_DEG,
        }
    }
}

pub fn simulate_views(
    spec: &ObjectSpec,
    points_per_view: usize,
    seed: u64,
) -> Result<(PointCloud, PointCloud)> {
    spec.validate()?;
    if points_per_view < MIN_POINTS_PER_VIEW {
        return Err(Error::InvalidSpec {
            id: spec.id.clone(),
            reason: format!(
                "points_per_view must be at least {MIN_POINTS_PER_VIEW}, got {points_per_view}"
            ),
        });
    }
    let mut rng = seeded(seed);
    let noise = Normal::new(0.0, spec.noise_sigma_m).expect("validated sigma");
    let d = spec.dims;
    let (hl, hw) = (d.length_m / 2.0, d.width_m / 2.0);

    let mut render = |sample: &mut dyn FnMut(&mut crate::rng::Rng) -> Option<Point>| {
        let mut points = Vec::with_capacity(points_per_view);
        while points.len() < points_per_view {
            if let Some(mut p) = sample(&mut rng) {
                if spec.noise_sigma_m > 0.0 {
                    p.iter_mut().for_each(|c| *c += rng.sample(noise));
                }
                points.push(p);
            }
        }
        PointCloud::new(points)
    };

    let top = render(&mut |rng| {
        let x = rng.random_range(-hl..=hl);
        let y = rng.random_range(-hw..=hw);
        spec.top_surface_z(x, y).map(|z| [x, y, z])
    });
    let side = render(&mut |rng| {
        let y = rng.random_range(-hw..=hw);
        let z = rng.random_range(0.0..=d.height_m);
        spec.side_surface_x(y, z).map(|x| [x, y, z])
    });
    Ok((top, side))
}

/// Arm heights at first contact and once the effort threshold is exceeded.
pub fn simulate_press(spec: &ObjectSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let h = spec.dims.height_m;
    if h >= MAX_PRESS_HEIGHT_M {
        return Err(Error::ApparatusLimit {
            id: spec.id.clone(),
            reason: format!("height {h} m is not below the {MAX_PRESS_HEIGHT_M} m press reach"),
        });
    }
    let deformation = (spec.material.stiffness_mm / 1000.0).min(h);
    Ok((h, h - deformation))
}

/// Ramp angle at slide onset: the first actuator step at or above `atan(mu)`.
pub fn simulate_ramp(spec: &ObjectSpec, step_deg: f64) -> Result<f64> {
    spec.validate()?;
    if spec.shape == Shape::Sphere {
        return Err(Error::UnsupportedShape {
            id: spec.id.clone(),
            shape: spec.shape.to_string(),
            experiment: "the ramp experiment (spheres roll instead of sliding)",
        });
    }
    Ok(quantize_up(spec.material.friction_mu.atan().to_degrees(), step_deg).min(90.0))
}

pub fn simulate_scale(spec: &ObjectSpec) -> f64 {
    let cm3 = spec.shell_volume_m3() * 1e6;
    (cm3 * spec.material.density_g_cm3).round()
}

/// Runs every simulated experiment for one object.
pub fn simulate_record(
    spec: &ObjectSpec,
    config: &SimulationConfig,
    seed: u64,
) -> Result<MeasurementRecord> {
    let (top_cloud, side_cloud) = simulate_views(spec, config.points_per_view, seed)?;
    let (press_contact_z_m, press_stop_z_m) = simulate_press(spec)?;
    let slide_angle_deg = match simulate_ramp(spec, config.ramp_step_deg) {
        Ok(angle) => angle,
        Err(Error::UnsupportedShape { .. }) => {
            log::warn!(
                "{}: sphere rolls off the ramp at the first step; recording 0 deg",
                spec.id
            );
            0.0
        }
        Err(e) => return Err(e),
    };
    Ok(MeasurementRecord {
        instance_id: spec.id.clone(),
        class_name: spec.class_name.clone(),
        top_cloud,
        side_cloud,
        marker_reference_z_m: 0.0,
        marker_internal_z_m: spec.internal_marker_z(),
        rim_top_z_m: spec.dims.height_m,
        press_contact_z_m,
        press_stop_z_m,
        slide_angle_deg,
        weight_g: simulate_scale(spec),
    })
}

fn quantize_up(angle_deg: f64, step_deg: f64) -> f64 {
    if step_deg <= 0.0 {
        return angle_deg;
    }
    // absorb atan rounding so that exact multiples stay on their step
    let steps = (angle_deg / step_deg - 1e-9).ceil().max(0.0);
    steps * step_deg
}

// ---------------------------------------------------------------------------
// Dataset files

/// On-disk form of a record; clouds are paths relative to the dataset root.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordFile {
    instance_id: String,
    class_name: String,
    top_cloud: String,
    side_cloud: String,
    marker_reference_z_m: f64,
    marker_internal_z_m: f64,
    rim_top_z_m: f64,
    press_contact_z_m: f64,
    press_stop_z_m: f64,
    slide_angle_deg: f64,
    weight_g: f64,
}

/// Summary written next to a simulated dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub instances: usize,
    pub classes: std::collections::BTreeMap<String, usize>,
}

impl Manifest {
    pub fn from_records(records: &[MeasurementRecord]) -> Self {
        let mut classes = std::collections::BTreeMap::new();
        for r in records {
            *classes.entry(r.class_name.clone()).or_insert(0) += 1;
        }
        Manifest {
            instances: records.len(),
            classes,
        }
    }
}

impl MeasurementRecord {
    /// Checks the scalar invariants; `source` names the file in error messages.
    pub fn validate(&self, source: &Path) -> Result<()> {
        let fail = |field: &str, constraint: String| {
            Err(Error::validation(source, format!("/{field}"), constraint))
        };
        if self.instance_id.trim().is_empty() {
            return fail("instance_id", "must not be empty".into());
        }
        if self.instance_id == MANIFEST_FILE.trim_end_matches(".json") {
            return fail("instance_id", "`manifest` is reserved".into());
        }
        for (field, v) in [
            ("marker_reference_z_m", self.marker_reference_z_m),
            ("marker_internal_z_m", self.marker_internal_z_m),
            ("rim_top_z_m", self.rim_top_z_m),
            ("press_contact_z_m", self.press_contact_z_m),
            ("press_stop_z_m", self.press_stop_z_m),
            ("slide_angle_deg", self.slide_angle_deg),
            ("weight_g", self.weight_g),
        ] {
            if !v.is_finite() {
                return fail(field, format!("must be finite, got {v}"));
            }
        }
        if self.press_contact_z_m < self.press_stop_z_m {
            return fail(
                "press_stop_z_m",
                format!(
                    "press_contact_z_m >= press_stop_z_m violated ({} < {})",
                    self.press_contact_z_m, self.press_stop_z_m
                ),
            );
        }
        if !(0.0..=90.0).contains(&self.slide_angle_deg) {
            return fail(
                "slide_angle_deg",
                format!("must lie within [0, 90], got {}", self.slide_angle_deg),
            );
        }
        if self.weight_g < 0.0 || self.weight_g.fract() != 0.0 {
            return fail(
                "weight_g",
                format!("must be a non-negative whole number of grams, got {}", self.weight_g),
            );
        }
        if self.marker_internal_z_m < self.marker_reference_z_m {
            return fail(
                "marker_internal_z_m",
                format!(
                    "marker_internal_z_m >= marker_reference_z_m violated ({} < {})",
                    self.marker_internal_z_m, self.marker_reference_z_m
                ),
            );
        }
        for (field, cloud) in [("top_cloud", &self.top_cloud), ("side_cloud", &self.side_cloud)] {
            if cloud.is_empty() {
                return fail(field, "point cloud must not be empty".into());
            }
            if !cloud.is_finite() {
                return fail(field, "point cloud has non-finite coordinates".into());
            }
        }
        Ok(())
    }
}

pub fn read_xyz(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_xyz(&text, path)
}

pub fn parse_xyz(text: &str, source: &Path) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let coords: Vec<f64> = content
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| {
                Error::validation(source, format!("line {}", lineno + 1), format!("{e}"))
            })?;
        let [x, y, z] = coords[..] else {
            return Err(Error::validation(
                source,
                format!("line {}", lineno + 1),
                format!("expected `x y z`, found {} values", coords.len()),
            ));
        };
        points.push([x, y, z]);
    }
    Ok(PointCloud::new(points))
}

pub fn write_xyz(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut out = String::with_capacity(cloud.len() * 64);
    out.push_str("# x y z (meters)\n");
    for [x, y, z] in &cloud.points {
        out.push_str(&format!("{x} {y} {z}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes `<dir>/<id>.json`, `<dir>/clouds/<id>_{top,side}.xyz` per record and
/// a manifest. `dir` must exist.
pub fn write_dataset(dir: &Path, records: &[MeasurementRecord]) -> Result<Manifest> {
    let clouds = dir.join(CLOUD_DIR);
    fs::create_dir_all(&clouds).map_err(|e| Error::io(&clouds, e))?;
    for r in records {
        let top_rel = format!("{CLOUD_DIR}/{}_top.xyz", r.instance_id);
        let side_rel = format!("{CLOUD_DIR}/{}_side.xyz", r.instance_id);
        write_xyz(&dir.join(&top_rel), &r.top_cloud)?;
        write_xyz(&dir.join(&side_rel), &r.side_cloud)?;
        let file = RecordFile {
            instance_id: r.instance_id.clone(),
            class_name: r.class_name.clone(),
            top_cloud: top_rel,
            side_cloud: side_rel,
            marker_reference_z_m: r.marker_reference_z_m,
            marker_internal_z_m: r.marker_internal_z_m,
            rim_top_z_m: r.rim_top_z_m,
            press_contact_z_m: r.press_contact_z_m,
            press_stop_z_m: r.press_stop_z_m,
            slide_angle_deg: r.slide_angle_deg,
            weight_g: r.weight_g,
        };
        write_json(&dir.join(format!("{}.json", r.instance_id)), &file)?;
    }
    let manifest = Manifest::from_records(records);
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Reads every record in a dataset directory, sorted by instance id.
pub fn ingest_dataset(dir: &Path) -> Result<Vec<MeasurementRecord>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_json = path.extension().is_some_and(|e| e == "json");
        let is_manifest = path.file_name().is_some_and(|n| n == MANIFEST_FILE);
        if is_json && !is_manifest && path.is_file() {
            files.push(path);
        }
    }
    files.sort();

    let mut records = Vec::with_capacity(files.len());
    let mut seen = BTreeSet::new();
    for path in files {
        let record = read_record(dir, &path)?;
        if !seen.insert(record.instance_id.clone()) {
            return Err(Error::validation(
                &path,
                "/instance_id",
                format!("duplicate instance_id `{}`", record.instance_id),
            ));
        }
        records.push(record);
    }
    records.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok(records)
}

fn read_record(root: &Path, path: &Path) -> Result<MeasurementRecord> {
    let file: RecordFile = read_json(path)?;
    let record = MeasurementRecord {
        top_cloud: read_xyz(&root.join(&file.top_cloud))?,
        side_cloud: read_xyz(&root.join(&file.side_cloud))?,
        instance_id: file.instance_id,
        class_name: file.class_name,
        marker_reference_z_m: file.marker_reference_z_m,
        marker_internal_z_m: file.marker_internal_z_m,
        rim_top_z_m: file.rim_top_z_m,
        press_contact_z_m: file.press_contact_z_m,
        press_stop_z_m: file.press_stop_z_m,
        slide_angle_deg: file.slide_angle_deg,
        weight_g: file.weight_g,
    };
    record.validate(path)?;
    Ok(record)
}

/// Loads a JSON array of object specs and validates each entry.
pub fn load_corpus(path: &Path) -> Result<Vec<ObjectSpec>> {
    let specs: Vec<ObjectSpec> = read_json(path)?;
    validate_corpus(&specs, path)?;
    Ok(specs)
}

pub fn parse_corpus(text: &str) -> Result<Vec<ObjectSpec>> {
    let source = Path::new("<corpus>");
    let specs: Vec<ObjectSpec> = parse_json(text, source)?;
    validate_corpus(&specs, source)?;
    Ok(specs)
}

fn validate_corpus(specs: &[ObjectSpec], source: &Path) -> Result<()> {
    let mut ids = BTreeSet::new();
    for (i, spec) in specs.iter().enumerate() {
        spec.validate()
            .map_err(|e| Error::validation(source, format!("/{i}"), e.to_string()))?;
        if spec.id == MANIFEST_FILE.trim_end_matches(".json") {
            return Err(Error::validation(source, format!("/{i}/id"), "`manifest` is reserved"));
        }
        if !ids.insert(spec.id.as_str()) {
            return Err(Error::validation(
                source,
                format!("/{i}/id"),
                format!("duplicate instance_id `{}`", spec.id),
            ));
        }
    }
    Ok(())
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text, path)
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str, source: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = json_pointer(e.path());
        Error::validation(source, pointer, e.inner().to_string())
    })
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, value)
        .map_err(|e| Error::io(path, e.into()))?;
    file.write_all(b"\n").map_err(|e| Error::io(path, e))
}
