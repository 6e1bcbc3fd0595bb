use approx::assert_relative_eq;

use hadamard::currents::{self, ChainMap};
use hadamard::filling::{self, FillConfig};
use hadamard::{bundled, cycles, Error, GroupPoint, MassOptions, Structure};

fn quick() -> FillConfig {
    FillConfig {
        mass: MassOptions {
            tol: 1e-5,
            ..MassOptions::default()
        },
        ..FillConfig::default()
    }
}

fn assert_translation_invariant(name: &str, z: &hadamard::Chain, g: GroupPoint) {
    let m = bundled::manifold(name).unwrap();
    let s = Structure::new(&m, 0.5, 0).unwrap();
    let moved = currents::pushforward(&m, &ChainMap::LeftTranslate(g), z).unwrap();
    let cfg = quick();
    let a = filling::fill(&m, &s, z, &cfg).unwrap().report;
    let b = filling::fill(&m, &s, &moved, &cfg).unwrap().report;
    assert_relative_eq!(a.mass_z_input.value, b.mass_z_input.value, max_relative = 10.0 * cfg.mass.tol);
    assert_relative_eq!(a.ratio, b.ratio, max_relative = 10.0 * cfg.mass.tol);
}

#[test]
fn ratio_is_translation_invariant() {
    // translations keeping the cells affine in the chart: along A, and
    // arbitrary ones when N is abelian
    let ch2 = bundled::manifold("ch2").unwrap();
    let z = cycles::ch2_loop(24).to_chain(&ch2).unwrap();
    assert_translation_invariant("ch2", &z, GroupPoint::from_a(&ch2, &[0.8]));
    let h3 = bundled::manifold("h3").unwrap();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9);
    let z = cycles::random_polygon(&h3, &mut rng, 6, 1.0).to_chain(&h3).unwrap();
    let g = GroupPoint::from_chart(&h3, &[0.4, -1.1, 2.0]).unwrap();
    assert_translation_invariant("h3", &z, g);
}

#[test]
fn product_torus_is_filled_within_the_bound() {
    let m = bundled::manifold("h2xh2").unwrap();
    let s = Structure::new(&m, 0.5, 0).unwrap();
    assert_relative_eq!(s.epsilon(), 0.5f64.sqrt() / 2.0, epsilon = 1e-9);
    let z = cycles::h2xh2_torus(1.0, 0.5, 3).to_chain(&m).unwrap();
    let f = filling::fill(&m, &s, &z, &quick()).unwrap();
    let r = &f.report;
    assert!(r.boundary_verified);
    assert_eq!(f.v.boundary(&m).unwrap(), f.translated);
    assert!(r.ratio <= r.bound_v1 + r.measured_cone_constant * r.mass_pi_z.value / r.mass_z.value + 1e-6);
    assert!(r.v1_within_bound() && r.projection_within_bound());
}

#[test]
fn translated_cycle_sits_in_the_cone() {
    let m = bundled::manifold("h2xh2").unwrap();
    let s = Structure::new(&m, 0.5, 0).unwrap();
    let z = cycles::h2xh2_torus(2.0, 1.0, 4).to_chain(&m).unwrap();
    let (zt, tr) = filling::ensure_in_cone(&m, &s, &z, 10.0).unwrap();
    assert!(tr.distance > 0.0);
    for c in zt.vertex_points() {
        let h = &c.point[m.dim_n()..];
        assert!(s.cone.slack(h) <= -filling::CONE_SLACK);
        assert!(m.norm_a(h) >= 10.0 - 1e-9);
    }
    // the minimal distance: a slightly shorter move violates some vertex
    let hs: Vec<Vec<f64>> = z.vertex_points().iter().map(|c| c.point[m.dim_n()..].to_vec()).collect();
    let dir = s.cone.interior_point();
    let shorter = tr.distance * (1.0 - 1e-6);
    let violated = hs.iter().any(|h| {
        let moved: Vec<f64> = h.iter().zip(&dir).map(|(a, d)| a + shorter * d).collect();
        s.cone.slack(&moved) > -filling::CONE_SLACK || m.norm_a(&moved) < 10.0
    });
    assert!(violated);
}

#[test]
fn open_chains_and_wrong_dimensions_are_rejected() {
    let m = bundled::manifold("h3").unwrap();
    let s = Structure::new(&m, 0.5, 0).unwrap();
    let mut c = cycles::random_sphere(&m, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1), 1, 1.0);
    c.cycle = false;
    c.cells.pop();
    let open = c.to_chain(&m).unwrap();
    assert!(matches!(filling::fill(&m, &s, &open, &quick()), Err(Error::NotACycle { .. })));
    let sphere = cycles::random_sphere(&m, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2), 3, 1.0);
    let z = sphere.to_chain(&m).unwrap();
    assert!(matches!(filling::fill(&m, &s, &z, &quick()), Err(Error::RankRange { k: 3, .. })));
}

#[test]
fn sweep_flags_nothing_for_circles() {
    let m = bundled::manifold("h2").unwrap();
    let s = Structure::new(&m, 0.5, 0).unwrap();
    let sweep = filling::verify_theorem(&m, &s, &cycles::h2_circle(1.0, 32), &[100.0, 1.0, 10.0], &quick()).unwrap();
    assert_eq!(sweep.rows[0].scale, 1.0);
    assert!(!sweep.drift);
    assert!(sweep.empirical_constant <= 2.0);
    let csv = sweep.to_csv();
    assert!(csv.starts_with("scale,mass_Z,mass_V1,mass_piZ,mass_V2,ratio\n"));
    assert_eq!(csv.lines().count(), 4);
}
