//! Point-cloud primitives behind the size, flatness and hollowness extractors.
//!
//! Clouds arrive already segmented from the scene. Everything here is a pure
//! function of its inputs (plus an explicit seed for RANSAC), so extraction
//! can run per instance in parallel.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Minimum `|nz|` for a plane to count as "top-level" when measuring flatness.
pub const HORIZONTAL_MIN_NZ: f64 = 0.9;
pub const DEFAULT_RANSAC_THRESHOLD_M: f64 = 0.005;
pub const DEFAULT_RANSAC_ITERATIONS: usize = 500;

pub type Point = [f64; 3];

/// Points of one simulated or ingested depth view, in meters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointCloud {
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().flatten().all(|c| c.is_finite())
    }

    /// Concatenation of two views of the same object.
    pub fn merged(&self, other: &PointCloud) -> PointCloud {
        let mut points = Vec::with_capacity(self.len() + other.len());
        points.extend_from_slice(&self.points);
        points.extend_from_slice(&other.points);
        PointCloud { points }
    }
}

impl FromIterator<Point> for PointCloud {
    fn from_iter<I: IntoIterator<Item = Point>>(iter: I) -> Self {
        PointCloud {
            points: iter.into_iter().collect(),
        }
    }
}

/// Axis-aligned extents. `length_m >= width_m` by convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub length_m: f64,
    pub width_m: f64,
    pub height_m: f64,
}

impl BoundingBox {
    pub fn footprint_area(&self) -> f64 {
        self.length_m * self.width_m
    }

    pub fn volume(&self) -> f64 {
        self.length_m * self.width_m * self.height_m
    }
}

/// Plane `normal · p = offset` with the consensus it gathered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneModel {
    pub normal: [f64; 3],
    pub offset: f64,
    pub inlier_count: usize,
    pub inlier_threshold_m: f64,
}

impl PlaneModel {
    pub fn distance(&self, p: &Point) -> f64 {
        (dot(&self.normal, p) - self.offset).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub threshold_m: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            threshold_m: DEFAULT_RANSAC_THRESHOLD_M,
            iterations: DEFAULT_RANSAC_ITERATIONS,
            seed: crate::DEFAULT_SEED,
        }
    }
}

/// Result of a flatness measurement. `plane` is `None` when no near-horizontal
/// plane could be fitted, in which case `ratio` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flatness {
    pub ratio: f64,
    pub plane: Option<PlaneModel>,
}

impl Flatness {
    pub fn no_plane_warning(&self) -> bool {
        self.plane.is_none()
    }
}

pub fn bounding_box(cloud: &PointCloud) -> Result<BoundingBox> {
    let first = cloud.points.first().ok_or(Error::EmptyInput("bounding_box"))?;
    let (mut lo, mut hi) = (*first, *first);
    for p in &cloud.points[1..] {
        for axis in 0..3 {
            lo[axis] = lo[axis].min(p[axis]);
            hi[axis] = hi[axis].max(p[axis]);
        }
    }
    let (ex, ey) = (hi[0] - lo[0], hi[1] - lo[1]);
    Ok(BoundingBox {
        length_m: ex.max(ey),
        width_m: ex.min(ey),
        height_m: hi[2] - lo[2],
    })
}

/// Fits the plane with maximal consensus among 3-point hypotheses.
///
/// When the cloud has no more distinct triples than `iterations`, every
/// triple is tried once instead of sampling, which makes the result the exact
/// best plane through any three points. Ties keep the earliest hypothesis.
pub fn ransac_plane(cloud: &PointCloud, params: &RansacParams) -> Result<PlaneModel> {
    ransac_filtered(cloud, params, |_| true)
}

/// Share of top-view points lying on the greatest near-horizontal plane.
pub fn flatness_ratio(top_cloud: &PointCloud, params: &RansacParams) -> Result<Flatness> {
    match ransac_filtered(top_cloud, params, |n| n[2].abs() >= HORIZONTAL_MIN_NZ) {
        Ok(plane) => Ok(Flatness {
            ratio: plane.inlier_count as f64 / top_cloud.len() as f64,
            plane: Some(plane),
        }),
        Err(Error::NoPlaneFound) => Ok(Flatness {
            ratio: 0.0,
            plane: None,
        }),
        Err(e) => Err(e),
    }
}

/// Hollowness from two marker heights and the object's rim height, all
/// measured in the table frame.
pub fn marker_depth_ratio(
    rim_top_z_m: f64,
    marker_internal_z_m: f64,
    marker_reference_z_m: f64,
) -> Result<f64> {
    if !(rim_top_z_m > marker_reference_z_m) {
        return Err(Error::InvalidGeometry(format!(
            "rim top {rim_top_z_m} m must lie above the reference marker at {marker_reference_z_m} m"
        )));
    }
    let depth = rim_top_z_m - marker_internal_z_m;
    let height = rim_top_z_m - marker_reference_z_m;
    Ok((depth / height).clamp(0.0, 1.0))
}

fn ransac_filtered(
    cloud: &PointCloud,
    params: &RansacParams,
    accept_normal: impl Fn(&[f64; 3]) -> bool,
) -> Result<PlaneModel> {
    let n = cloud.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "plane fitting needs at least 3 points, got {n}"
        )));
    }
    if !(params.threshold_m > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "RANSAC threshold must be positive, got {}",
            params.threshold_m
        )));
    }

    let mut best: Option<PlaneModel> = None;
    let mut consider = |[a, b, c]: [usize; 3]| {
        let pts = &cloud.points;
        let Some((normal, offset)) = plane_through(&pts[a], &pts[b], &pts[c]) else {
            return;
        };
        if !accept_normal(&normal) {
            return;
        }
        let inlier_count = pts
            .iter()
            .filter(|p| (dot(&normal, p) - offset).abs() <= params.threshold_m)
            .count();
        if best.is_none_or(|b| inlier_count > b.inlier_count) {
            best = Some(PlaneModel {
                normal,
                offset,
                inlier_count,
                inlier_threshold_m: params.threshold_m,
            });
        }
    };

    let triples = n * (n - 1) * (n - 2) / 6;
    if triples <= params.iterations {
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    consider([a, b, c]);
                }
            }
        }
    } else {
        let mut rng = seeded(params.seed);
        for _ in 0..params.iterations {
            let picked = index::sample(&mut rng, n, 3);
            consider([picked.index(0), picked.index(1), picked.index(2)]);
        }
    }
    best.ok_or(Error::NoPlaneFound)
}

/// Unit normal and offset of the plane through three points, oriented so the
/// first nonzero normal component (z, then y, then x) is positive. `None` for
/// collinear or coincident points.
fn plane_through(a: &Point, b: &Point, c: &Point) -> Option<([f64; 3], f64)> {
    let u = sub(b, a);
    let v = sub(c, a);
    let mut normal = cross(&u, &v);
    let norm = dot(&normal, &normal).sqrt();
    let scale = dot(&u, &u).sqrt() * dot(&v, &v).sqrt();
    if !(norm > 1e-12 * scale) || norm == 0.0 {
        return None;
    }
    normal.iter_mut().for_each(|c| *c /= norm);
    let flip = [normal[2], normal[1], normal[0]]
        .into_iter()
        .find(|c| *c != 0.0)
        .is_some_and(|c| c < 0.0);
    if flip {
        normal.iter_mut().for_each(|c| *c = -*c);
    }
    Some((normal, dot(&normal, a)))
}

fn sub(a: &Point, b: &Point) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn params(threshold_m: f64, iterations: usize) -> RansacParams {
        RansacParams {
            threshold_m,
            iterations,
            seed: 7,
        }
    }

    #[test]
    fn unit_cube_corners() {
        let cloud: PointCloud = (0..8)
            .map(|i| [(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64])
            .collect();
        let bb = bounding_box(&cloud).unwrap();
        assert_eq!((bb.length_m, bb.width_m, bb.height_m), (1.0, 1.0, 1.0));
    }

    #[test]
    fn single_point_box_is_degenerate() {
        let bb = bounding_box(&PointCloud::new(vec![[0.3, -2.0, 5.0]])).unwrap();
        assert_eq!((bb.length_m, bb.width_m, bb.height_m), (0.0, 0.0, 0.0));
    }

    #[test]
    fn empty_cloud_is_rejected() {
        assert!(matches!(
            bounding_box(&PointCloud::default()),
            Err(Error::EmptyInput(_))
        ));
        assert!(ransac_plane(&PointCloud::default(), &params(0.01, 10)).is_err());
    }

    #[test]
    fn length_is_the_longer_horizontal_extent() {
        let cloud = PointCloud::new(vec![[0.0, 0.0, 0.0], [0.1, 0.3, 0.05]]);
        let bb = bounding_box(&cloud).unwrap();
        assert_abs_diff_eq!(bb.length_m, 0.3);
        assert_abs_diff_eq!(bb.width_m, 0.1);
    }

    #[test]
    fn noisy_box_extents_stay_close() {
        let mut rng = seeded(3);
        let noise = rand_distr::Normal::new(0.0, 0.002).unwrap();
        let (l, w, h) = (0.3, 0.2, 0.1);
        let cloud: PointCloud = (0..2000)
            .map(|_| {
                let mut p = [
                    rng.random_range(-l / 2.0..=l / 2.0),
                    rng.random_range(-w / 2.0..=w / 2.0),
                    rng.random_range(0.0..=h),
                ];
                p.iter_mut().for_each(|c| *c += rng.sample(noise));
                p
            })
            .collect();
        // min/max oracle over the generated points
        let ext = |axis: usize| {
            let it = cloud.points.iter().map(|p| p[axis]);
            it.clone().fold(f64::MIN, f64::max) - it.fold(f64::MAX, f64::min)
        };
        let bb = bounding_box(&cloud).unwrap();
        assert_eq!(bb.length_m, ext(0));
        assert_eq!(bb.width_m, ext(1));
        assert_eq!(bb.height_m, ext(2));
        assert!((bb.length_m - l).abs() < 0.01);
        assert!((bb.width_m - w).abs() < 0.01);
        assert!((bb.height_m - h).abs() < 0.01);
    }

    #[test]
    fn coplanar_points_are_all_inliers() {
        let mut rng = seeded(11);
        let cloud: PointCloud = (0..100)
            .map(|_| {
                let x: f64 = rng.random_range(-1.0..1.0);
                let y: f64 = rng.random_range(-1.0..1.0);
                [x, y, 0.2 * x - 0.1 * y + 0.5]
            })
            .collect();
        let plane = ransac_plane(&cloud, &params(1e-6, 200)).unwrap();
        assert_eq!(plane.inlier_count, 100);
        let norm: f64 = plane.normal.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn three_points_define_the_plane() {
        let cloud = PointCloud::new(vec![[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]);
        let plane = ransac_plane(&cloud, &params(1e-3, 1)).unwrap();
        assert_eq!(plane.inlier_count, 3);
        assert_abs_diff_eq!(plane.normal[2], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(plane.offset, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn collinear_cloud_has_no_plane() {
        let cloud: PointCloud = (0..10).map(|i| [i as f64, 2.0 * i as f64, 0.0]).collect();
        assert!(matches!(
            ransac_plane(&cloud, &params(0.01, 500)),
            Err(Error::NoPlaneFound)
        ));
    }

    #[test]
    fn plane_with_uniform_outliers() {
        let mut rng = seeded(5);
        let mut points: Vec<Point> = (0..80)
            .map(|_| [rng.random_range(0.0..0.2), rng.random_range(0.0..0.2), 0.1])
            .collect();
        points.extend((0..20).map(|_| {
            [
                rng.random_range(0.0..0.2),
                rng.random_range(0.0..0.2),
                rng.random_range(0.0..0.2),
            ]
        }));
        let cloud = PointCloud::new(points);
        let plane = ransac_plane(&cloud, &params(0.005, 500)).unwrap();
        // oracle: the inliers of z = 0.1 itself
        let oracle = cloud
            .points
            .iter()
            .filter(|p| (p[2] - 0.1).abs() <= 0.005)
            .count();
        assert!(plane.inlier_count >= 80);
        assert!(plane.inlier_count >= oracle);
        assert!(plane.normal[2].abs() > 0.99);
    }

    #[test]
    fn flat_sheet_is_maximally_flat() {
        let cloud: PointCloud = (0..400)
            .map(|i| [(i % 20) as f64 * 0.01, (i / 20) as f64 * 0.01, 0.001])
            .collect();
        let f = flatness_ratio(&cloud, &RansacParams::default()).unwrap();
        assert_eq!(f.ratio, 1.0);
        assert!(!f.no_plane_warning());
    }

    #[test]
    fn constructed_top_face_share() {
        let mut rng = seeded(9);
        let mut points: Vec<Point> = (0..80)
            .map(|_| [rng.random_range(0.0..0.1), rng.random_range(0.0..0.1), 0.1])
            .collect();
        // side-wall points far below the top face
        points.extend((0..20).map(|_| [0.1, rng.random_range(0.0..0.1), rng.random_range(0.0..0.08)]));
        let f = flatness_ratio(&PointCloud::new(points), &RansacParams::default()).unwrap();
        assert!((f.ratio - 0.8).abs() <= 0.02, "ratio {}", f.ratio);
    }

    #[test]
    fn vertical_wall_gives_zero_flatness_with_warning() {
        let cloud: PointCloud = (0..50)
            .map(|i| [0.0, (i % 10) as f64 * 0.01, (i / 10) as f64 * 0.01])
            .collect();
        let f = flatness_ratio(&cloud, &RansacParams::default()).unwrap();
        assert_eq!(f.ratio, 0.0);
        assert!(f.no_plane_warning());
    }

    #[test]
    fn marker_on_solid_top_is_not_hollow() {
        assert_eq!(marker_depth_ratio(0.1, 0.1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn cup_hollowness() {
        let h = marker_depth_ratio(0.10, 0.01, 0.0).unwrap();
        assert_abs_diff_eq!(h, 0.9, epsilon = 1e-12);
    }

    #[test]
    fn hollowness_is_clamped() {
        assert_eq!(marker_depth_ratio(0.1, -0.002, 0.0).unwrap(), 1.0);
        assert_eq!(marker_depth_ratio(0.1, 0.12, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rim_below_reference_is_invalid() {
        assert!(matches!(
            marker_depth_ratio(0.0, 0.0, 0.0),
            Err(Error::InvalidGeometry(_))
        ));
    }
}
