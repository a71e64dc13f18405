use object_kb::properties::{
    derive_blockage, derive_functional, extract_physical, normalize, rigidity_from_deformation,
    ExtractionConfig, PhysicalProfile, Size,
};
use object_kb::sensing::{simulate_record, Dimensions, Material, ObjectSpec, Shape, SimulationConfig};
use proptest::prelude::*;

fn cup(stiffness_mm: f64) -> ObjectSpec {
    ObjectSpec {
        id: "cup_1".into(),
        class_name: "Cup".into(),
        shape: Shape::OpenCylinder,
        dims: Dimensions {
            length_m: 0.08,
            width_m: 0.08,
            height_m: 0.10,
            wall_thickness_m: Some(0.004),
            base_thickness_m: Some(0.01),
        },
        material: Material {
            name: "ceramic".into(),
            stiffness_mm,
            friction_mu: 0.6,
            density_g_cm3: 2.4,
        },
        noise_sigma_m: 0.0,
    }
}

#[test]
fn cup_record_composes_geometry_results() {
    let record = simulate_record(&cup(0.5), &SimulationConfig::default(), 42).unwrap();
    let p = extract_physical(&record, &ExtractionConfig::default()).unwrap();
    assert!((p.hollowness - 0.9).abs() < 1e-12, "{}", p.hollowness);
    assert!((p.size.height_m - 0.10).abs() < 2e-3, "{}", p.size.height_m);
    assert!((p.size.length_m - 0.08).abs() < 2e-3);
    assert!((p.deformation_mm - 0.5).abs() < 1e-9);
    assert!((p.rigidity - (-0.05f64).exp()).abs() < 1e-12);
}

fn profile() -> impl Strategy<Value = PhysicalProfile> {
    (
        (0.01..1.0_f64, 0.01..1.0_f64, 0.001..0.5_f64),
        0.0..=1.0_f64,
        0.0..=1.0_f64,
        0.0..200.0_f64,
        0.0..=90.0_f64,
        0.0..5000.0_f64,
    )
        .prop_map(|((l, w, h), flatness, hollowness, deformation_mm, roughness_deg, weight)| PhysicalProfile {
            size: Size { length_m: l.max(w), width_m: l.min(w), height_m: h },
            flatness,
            hollowness,
            rigidity: rigidity_from_deformation(deformation_mm, 10.0),
            roughness_deg,
            weight_g: weight.round(),
            deformation_mm,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn functional_values_in_unit_interval(profiles in prop::collection::vec(profile(), 1..30)) {
        let ctx = normalize(&profiles).unwrap();
        for p in &profiles {
            prop_assert!((0.0..=1.0).contains(&p.rigidity));
            let f = derive_functional(p, &ctx);
            for v in [f.support, f.containment, f.movability, f.blockage] {
                prop_assert!((0.0..=1.0).contains(&v), "{f:?}");
            }
            prop_assert_eq!(f.blockage + f.movability, 1.0);
            prop_assert_eq!(f.blockage, derive_blockage(f.movability));
        }
    }

    #[test]
    fn rigidity_decreases_with_stiffness(a in 0.0..150.0_f64, b in 0.0..150.0_f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let soft = simulate_record(&cup(hi), &SimulationConfig { points_per_view: 100, ..Default::default() }, 1).unwrap();
        let hard = simulate_record(&cup(lo), &SimulationConfig { points_per_view: 100, ..Default::default() }, 1).unwrap();
        let config = ExtractionConfig::default();
        let (ps, ph) = (extract_physical(&soft, &config).unwrap(), extract_physical(&hard, &config).unwrap());
        prop_assert!(ps.rigidity <= ph.rigidity);
        prop_assert!((0.0..=1.0).contains(&ps.rigidity));
    }

    #[test]
    fn movability_falls_as_roughness_rises(mut profiles in prop::collection::vec(profile(), 2..10), extra in 0.0..45.0_f64) {
        let ctx = normalize(&profiles).unwrap();
        let before = derive_functional(&profiles[0], &ctx).movability;
        profiles[0].roughness_deg = (profiles[0].roughness_deg + extra).min(90.0);
        // keep the same normalization so only roughness changes
        let after = derive_functional(&profiles[0], &ctx).movability;
        prop_assert!(after <= before);
    }
}
