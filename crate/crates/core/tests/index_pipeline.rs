//! End-to-end checks of the index pipeline: model, projector, Dirac phase, pairings.

use ncchern::dirac::{dirac_phase, fedosov_tindex, kernel_dims, midpoint_grid};
use ncchern::{
    build_clifford, build_hamiltonian, chern_model, direct_cocycle, fermi_projector, local_cocycle,
    momentum_oracle_chern, sample_disorder, Geometry, HoppingModel, SpectralProjector,
};

fn torus_value(model: &HoppingModel, l: usize, seed: Option<u64>) -> f64 {
    let g = Geometry::torus(&[l, l]).unwrap();
    let dis = seed.map(|s| sample_disorder(&g, s));
    let h = build_hamiltonian(model, &g, dis.as_ref()).unwrap();
    let p = fermi_projector(&h, 0.0).unwrap().into_projector();
    local_cocycle(&[&p, &p, &p]).unwrap().value.re
}

fn box_projector(model: &HoppingModel, radius: usize, seed: Option<u64>) -> SpectralProjector {
    let g = Geometry::open_box(2, radius).unwrap();
    let dis = seed.map(|s| sample_disorder(&g, s));
    let h = build_hamiltonian(model, &g, dis.as_ref()).unwrap();
    fermi_projector(&h, 0.0).unwrap()
}

fn fedosov(sp: &SpectralProjector, window: usize) -> f64 {
    let cl = build_clifford(2).unwrap();
    let f = dirac_phase(sp.projector().geometry(), &cl, &[0.5, 0.5], 2).unwrap();
    let iv = fedosov_tindex(sp.projector(), &f, 2, window).unwrap();
    assert!(iv.imag_residual < 1e-6);
    iv.value
}

#[test]
fn direct_route_matches_local_route_up_to_orientation() {
    let local = torus_value(&chern_model(1.0), 16, None);
    let sp = box_projector(&chern_model(1.0), 8, None);
    let cl = build_clifford(2).unwrap();
    let p = sp.projector();
    let direct = direct_cocycle(&[p, p, p], &cl, &midpoint_grid(2, 3), 4, 1e-2).unwrap();
    assert!(direct.imag_residual < 1e-6);
    assert!((direct.value.re + local).abs() < 0.05, "direct {} local {}", direct.value.re, local);
}

#[test]
fn fedosov_value_is_stable_in_the_window() {
    let sp = box_projector(&chern_model(1.0), 9, None);
    let a = fedosov(&sp, 3);
    let b = fedosov(&sp, 4);
    assert!((a - b).abs() < 0.02, "{a} vs {b}");
    assert!((a + 1.0).abs() < 0.05, "{a}");
}

#[test]
fn fedosov_value_converges_with_the_box() {
    let small = fedosov(&box_projector(&chern_model(1.0), 5, None), 2);
    let large = fedosov(&box_projector(&chern_model(1.0), 9, None), 4);
    assert!((large + 1.0).abs() <= (small + 1.0).abs() + 1e-3, "{small} -> {large}");
    assert!((large + 1.0).abs() < 0.05);
}

#[test]
fn index_is_stable_under_small_deformations() {
    let oracle = momentum_oracle_chern(&chern_model(1.0), 0, 32).unwrap().chern as f64;
    for mass in [0.8, 1.0, 1.2] {
        let v = torus_value(&chern_model(mass), 16, None);
        assert!((v - oracle).abs() < 0.05, "mass {mass}: {v}");
    }
    let disordered = chern_model(1.0).with_onsite_disorder(0.5).unwrap();
    let v = torus_value(&disordered, 16, Some(11));
    assert!((v - oracle).abs() < 0.05, "{v}");
}

#[test]
fn trivial_phase_has_vanishing_index() {
    let model = chern_model(3.0).with_onsite_disorder(1.0).unwrap();
    assert!(torus_value(&model, 12, Some(5)).abs() < 0.02);
    let sp = box_projector(&model, 7, Some(5));
    let v = fedosov(&sp, 3);
    assert!(v.abs() < 0.02, "{v}");
    let cl = build_clifford(2).unwrap();
    let f = dirac_phase(sp.projector().geometry(), &cl, &[0.5, 0.5], 2).unwrap();
    let kd = kernel_dims(&sp, &f, 1e-6, 3).unwrap();
    assert_eq!(kd.ker_f, kd.ker_f_adj);
}

#[test]
fn opposite_mass_flips_the_sign() {
    let plus = torus_value(&chern_model(1.0), 12, None);
    let minus = torus_value(&chern_model(-1.0), 12, None);
    assert!((plus + minus).abs() < 1e-8, "{plus} {minus}");
    assert!((plus.abs() - 1.0).abs() < 0.02);
}
