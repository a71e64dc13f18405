use std::fs;

use object_kb::corpus::{bundled_corpus, CLASSES};
use object_kb::pipeline::simulate_corpus;
use object_kb::sensing::{
    ingest_dataset, simulate_ramp, simulate_record, simulate_scale, simulate_views, write_dataset,
    Dimensions, Material, ObjectSpec, Shape, SimulationConfig,
};
use object_kb::{Error, ErrorClass};
use proptest::prelude::*;

fn spec(shape: Shape, dims: Dimensions, mu: f64, stiffness: f64) -> ObjectSpec {
    ObjectSpec {
        id: "obj_1".into(),
        class_name: "Thing".into(),
        shape,
        dims,
        material: Material {
            name: "plastic".into(),
            stiffness_mm: stiffness,
            friction_mu: mu,
            density_g_cm3: 1.0,
        },
        noise_sigma_m: 0.0,
    }
}

fn cup() -> ObjectSpec {
    spec(
        Shape::OpenCylinder,
        Dimensions {
            length_m: 0.08,
            width_m: 0.08,
            height_m: 0.10,
            wall_thickness_m: Some(0.004),
            base_thickness_m: Some(0.01),
        },
        0.5,
        1.0,
    )
}

/// Dense samples of every face of a cup, independent of the simulator.
fn cup_surface(radius: f64, wall: f64, height: f64, base: f64) -> Vec<[f64; 3]> {
    let inner = radius - wall;
    let mut pts = Vec::new();
    let (na, nz, nr) = (360, 100, 40);
    for a in 0..na {
        let t = a as f64 / na as f64 * std::f64::consts::TAU;
        let (c, s) = (t.cos(), t.sin());
        for iz in 0..=nz {
            let z = height * iz as f64 / nz as f64;
            pts.push([radius * c, radius * s, z]);
            if z >= base {
                pts.push([inner * c, inner * s, z]);
            }
        }
        for ir in 0..=nr {
            let r = inner + wall * ir as f64 / nr as f64;
            pts.push([r * c, r * s, height]);
            let r = inner * ir as f64 / nr as f64;
            pts.push([r * c, r * s, base]);
        }
    }
    pts
}

#[test]
fn cup_views_agree_with_ray_visibility_oracle() {
    let s = cup();
    let (top, side) = simulate_views(&s, 2000, 3).unwrap();
    let surface = cup_surface(0.04, 0.004, 0.10, 0.01);
    let eps = 0.0015;

    // Top view: the first surface hit of a downward ray is the highest sample nearby.
    let mut rim = 0;
    let mut floor = 0;
    for p in &top.points {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if r > 0.04 - eps || (r - 0.036).abs() < eps {
            continue; // silhouette edges are ambiguous at this sampling density
        }
        let visible = surface
            .iter()
            .filter(|q| (q[0] - p[0]).hypot(q[1] - p[1]) < eps)
            .map(|q| q[2])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((p[2] - visible).abs() < 1e-9, "{p:?} vs oracle z {visible}");
        if (p[2] - 0.10).abs() < 1e-9 {
            rim += 1;
        } else if (p[2] - 0.01).abs() < 1e-9 {
            floor += 1;
        }
    }
    assert!(rim > 0 && floor > 0, "rim {rim} floor {floor}");

    let max_z = side.points.iter().map(|p| p[2]).fold(f64::NEG_INFINITY, f64::max);
    assert!((max_z - 0.10).abs() < 1e-3, "side max z {max_z}");
    // from +x only the outer wall faces the camera
    for p in &side.points {
        assert!(p[0] >= 0.0);
        assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 0.04).abs() < 1e-9);
    }
}

#[test]
fn sphere_top_view_lies_on_upper_hemisphere() {
    let s = spec(
        Shape::Sphere,
        Dimensions {
            length_m: 0.1,
            width_m: 0.1,
            height_m: 0.1,
            wall_thickness_m: None,
            base_thickness_m: None,
        },
        0.3,
        0.0,
    );
    let (top, _) = simulate_views(&s, 1000, 1).unwrap();
    for p in &top.points {
        let r2 = p[0] * p[0] + p[1] * p[1] + (p[2] - 0.05).powi(2);
        assert!((r2 - 0.0025).abs() < 1e-12);
        assert!(p[2] >= 0.05);
    }
}

#[test]
fn shell_weight_matches_analytic_volume() {
    let s = cup();
    let outer = std::f64::consts::PI * 0.04f64.powi(2) * 0.10;
    let cavity = std::f64::consts::PI * 0.036f64.powi(2) * 0.09;
    let expected = ((outer - cavity) * 1e6).round();
    assert_eq!(simulate_scale(&s), expected);
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let specs = bundled_corpus().unwrap();
    let config = SimulationConfig::default();
    let a = simulate_corpus(&specs[..5], &config, 42).unwrap();
    let b = simulate_corpus(&specs[..5], &config, 42).unwrap();
    let c = simulate_corpus(&specs[..5], &config, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn bundled_corpus_has_table_counts() {
    let specs = bundled_corpus().unwrap();
    assert_eq!(specs.len(), 46);
    for (class, count) in CLASSES {
        assert_eq!(specs.iter().filter(|s| s.class_name == class).count(), count, "{class}");
    }
    let classes: std::collections::BTreeSet<&str> = specs.iter().map(|s| s.class_name.as_str()).collect();
    assert_eq!(classes.len(), 17);
}

#[test]
fn dataset_round_trips_and_regenerates_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let records = simulate_corpus(&bundled_corpus().unwrap(), &SimulationConfig::default(), 42).unwrap();
    let manifest = write_dataset(dir.path(), &records).unwrap();
    assert_eq!(manifest.instances, 46);
    let back = ingest_dataset(dir.path()).unwrap();
    assert_eq!(back.len(), 46);
    let classes: std::collections::BTreeSet<&str> = back.iter().map(|r| r.class_name.as_str()).collect();
    assert_eq!(classes.len(), 17);
    let mut sorted = records.clone();
    sorted.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    for (a, b) in sorted.iter().zip(&back) {
        assert_eq!(a, b);
    }
}

#[test]
fn empty_directory_ingests_to_nothing() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ingest_dataset(dir.path()).unwrap().is_empty());
}

#[test]
fn out_of_range_slide_angle_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let record = simulate_record(&cup(), &SimulationConfig::default(), 1).unwrap();
    write_dataset(dir.path(), &[record]).unwrap();
    let path = dir.path().join("obj_1.json");
    let mut json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    json["slide_angle_deg"] = 95.0.into();
    fs::write(&path, json.to_string()).unwrap();
    let err = ingest_dataset(dir.path()).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Validation);
    let msg = err.to_string();
    assert!(msg.contains("slide_angle_deg") && msg.contains("90"), "{msg}");
}

#[test]
fn missing_cloud_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let record = simulate_record(&cup(), &SimulationConfig::default(), 1).unwrap();
    write_dataset(dir.path(), &[record]).unwrap();
    fs::remove_file(dir.path().join("clouds/obj_1_top.xyz")).unwrap();
    let err = ingest_dataset(dir.path()).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Io, "{err}");
}

#[test]
fn ramp_rejects_spheres() {
    let mut s = cup();
    s.shape = Shape::Sphere;
    s.dims = Dimensions {
        length_m: 0.1,
        width_m: 0.1,
        height_m: 0.1,
        wall_thickness_m: None,
        base_thickness_m: None,
    };
    assert!(matches!(simulate_ramp(&s, 0.5), Err(Error::UnsupportedShape { .. })));
}

#[test]
fn ramp_of_mu_0_577_is_thirty_degrees() {
    let mut s = cup();
    s.material.friction_mu = 0.577;
    assert!((simulate_ramp(&s, 0.5).unwrap() - 30.0).abs() <= 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ramp_angle_tracks_atan_mu(mu in 0.0..3.0_f64, step in prop::sample::select(vec![0.1, 0.25, 0.5])) {
        let mut s = cup();
        s.material.friction_mu = mu;
        let angle = simulate_ramp(&s, step).unwrap();
        let exact = mu.atan().to_degrees();
        prop_assert!(angle >= exact - 1e-6 && angle - exact <= step + 1e-6, "{angle} vs {exact}");
        prop_assert!((angle - exact).abs() <= 0.5 + 1e-9);
    }

    #[test]
    fn roughness_is_monotone_in_friction(a in 0.0..3.0_f64, b in 0.0..3.0_f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mut s = cup();
        s.material.friction_mu = lo;
        let x = simulate_ramp(&s, 0.5).unwrap();
        s.material.friction_mu = hi;
        prop_assert!(x <= simulate_ramp(&s, 0.5).unwrap());
    }

    #[test]
    fn noise_free_box_clouds_lie_on_the_box(
        l in 0.02..0.5_f64, w in 0.02..0.5_f64, h in 0.01..0.19_f64, seed in any::<u64>(),
    ) {
        let s = spec(Shape::Box, Dimensions { length_m: l, width_m: w, height_m: h, wall_thickness_m: None, base_thickness_m: None }, 0.4, 0.0);
        let (top, side) = simulate_views(&s, 200, seed).unwrap();
        for p in &top.points {
            prop_assert!((p[2] - h).abs() < 1e-12);
            prop_assert!(p[0].abs() <= l / 2.0 + 1e-12 && p[1].abs() <= w / 2.0 + 1e-12);
        }
        for p in &side.points {
            prop_assert!((p[0] - l / 2.0).abs() < 1e-12);
            prop_assert!(p[2] >= -1e-12 && p[2] <= h + 1e-12);
        }
    }

    #[test]
    fn same_seed_same_clouds(seed in any::<u64>()) {
        let s = cup();
        prop_assert_eq!(simulate_views(&s, 150, seed).unwrap(), simulate_views(&s, 150, seed).unwrap());
    }
}
