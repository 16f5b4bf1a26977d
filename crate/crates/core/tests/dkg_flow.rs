use std::sync::Arc;

use dkg_core::dkg::{
    cascade_free_wave, evolve, free_dirac_propagate, picard_iterate, split_phi, step, DkgState,
    InitialData, PhysicsParams, Sign, WaveSlice,
};
use dkg_core::imethod::charge;
use dkg_core::spectral::{make_grid, Grid, SpectralField};
use dkg_core::Complex64;

fn rel_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).l2_norm_phys() / b.l2_norm_phys().max(1e-300)
}

fn state_diff(a: &DkgState, b: &DkgState) -> f64 {
    let num = a.u.sub(&b.u).l2_norm_phys().powi(2)
        + a.v.sub(&b.v).l2_norm_phys().powi(2)
        + a.phi.sub(&b.phi).l2_norm_phys().powi(2)
        + a.phi_t.sub(&b.phi_t).l2_norm_phys().powi(2);
    num.sqrt()
}

fn gaussian_setup(n: usize, len: f64) -> (Arc<Grid>, DkgState, PhysicsParams) {
    let g = make_grid(n, len).unwrap();
    let s0 = InitialData::Gaussian {
        amplitude: 1.0,
        width: 2.0,
    }
    .build(&g);
    (g, s0, PhysicsParams::new(1.0, 1.0).unwrap())
}

fn final_state(s0: &DkgState, p: &PhysicsParams, t: f64, h: f64) -> DkgState {
    let steps = (t / h).round() as usize;
    evolve(s0, p, t, h, steps, &mut [])
        .unwrap()
        .last()
        .unwrap()
        .clone()
}

#[test]
fn scalar_field_without_spinor_is_exact() {
    let g = make_grid(64, 10.0).unwrap();
    let phi = SpectralField::from_real_fn(g.clone(), |x| (-(x - 5.0).powi(2)).exp());
    let phi_t = SpectralField::from_real_fn(g.clone(), |x| (x * 0.7).sin() * 0.3);
    let zero = SpectralField::zeros(g.clone());
    let s0 = DkgState::new(0.0, zero.clone(), zero, phi.clone(), phi_t.clone()).unwrap();
    let mass = 1.7;
    let params = PhysicsParams::new(0.4, mass).unwrap();
    let h = 0.05;

    let mut state = s0;
    for _ in 0..20 {
        state = step(&state, &params, h).unwrap();
    }
    let t = 20.0 * h;
    // closed form per mode
    let expected = SpectralField::from_spec(
        g.clone(),
        g.freqs()
            .iter()
            .zip(phi.spec().iter().zip(phi_t.spec()))
            .map(|(&xi, (&a, &b))| {
                let w = (mass * mass + xi * xi).sqrt();
                a * (w * t).cos() + b * ((w * t).sin() / w)
            })
            .collect(),
    );
    assert!(rel_diff(&state.phi, &expected) < 1e-12);
    assert!(state.u.l2_norm_phys() == 0.0 && state.v.l2_norm_phys() == 0.0);
}

#[test]
fn free_transport_shifts_by_whole_cells() {
    let g = make_grid(128, 16.0).unwrap();
    let f = SpectralField::from_fn(g.clone(), |x| {
        Complex64::new((-(x - 8.0).powi(2)).exp(), 0.3 * (-(x - 7.0).powi(2)).exp())
    });
    let shift = 5;
    let h = shift as f64 * g.dx();
    let right = free_dirac_propagate(&f, h, Sign::Plus).unwrap();
    let left = free_dirac_propagate(&f, h, Sign::Minus).unwrap();
    let n = g.n();
    for j in 0..n {
        assert!((right.phys()[j] - f.phys()[(j + n - shift) % n]).norm() < 1e-12);
        assert!((left.phys()[j] - f.phys()[(j + shift) % n]).norm() < 1e-12);
    }
    for (a, b) in right.spec().iter().zip(f.spec()) {
        assert!((a.norm() - b.norm()).abs() < 1e-14 * (1.0 + b.norm()));
    }
}

#[test]
fn smooth_data_step_refinement_is_second_order() {
    let (_, s0, p) = gaussian_setup(128, 40.0);
    let t = 0.5;
    let h = 0.02;
    let reference = final_state(&s0, &p, t, h / 16.0);
    let e1 = state_diff(&final_state(&s0, &p, t, h), &reference);
    let e2 = state_diff(&final_state(&s0, &p, t, h / 2.0), &reference);
    let ratio = e1 / e2;
    assert!((ratio - 4.0).abs() <= 0.8, "error ratio {ratio}");
}

#[test]
fn evolve_composes_as_a_semigroup() {
    let (_, s0, p) = gaussian_setup(128, 40.0);
    let h = 0.01;
    let a = final_state(&s0, &p, 0.3, h);
    let ab = final_state(&a, &p, 0.2, h);
    let direct = final_state(&s0, &p, 0.5, h);
    assert!((ab.t - direct.t).abs() < 1e-12);
    assert!(
        state_diff(&ab, &direct)
            <= 1e-13 * (1.0 + state_diff(&direct, &DkgState::zeros(direct.grid().clone())))
    );
}

#[test]
fn charge_drift_shrinks_quadratically() {
    let (_, s0, p) = gaussian_setup(128, 60.0);
    let q0 = charge(&s0);
    let drift = |h: f64| (charge(&final_state(&s0, &p, 1.0, h)) - q0).abs();
    let (d1, d2) = (drift(0.02), drift(0.01));
    assert!(d1 / q0 < 1e-4);
    let ratio = d1 / d2;
    assert!((ratio - 4.0).abs() < 0.8, "drift ratio {ratio}");
}

#[test]
fn real_scalar_field_stays_real() {
    let g = make_grid(64, 12.0).unwrap();
    let s0 = InitialData::Rough {
        s: -0.1,
        r: Some(0.3),
        seed: 3,
        amplitude: 0.5,
        phi_amplitude: None,
    }
    .build(&g);
    let p = PhysicsParams::new(1.0, 2.0).unwrap();
    let end = final_state(&s0, &p, 0.2, 0.01);
    let scale = end.phi.l2_norm_phys();
    assert!(end.phi.max_imag() < 1e-12 * scale.max(1.0));
    assert!(end.phi_t.max_imag() < 1e-12 * scale.max(1.0));
}

#[test]
fn split_phi_on_free_scalar_has_no_remainder() {
    let g = make_grid(64, 10.0).unwrap();
    let mut s0 = DkgState::zeros(g.clone());
    s0.phi = SpectralField::from_real_fn(g.clone(), |x| (x * 0.6283185307179586).cos());
    let p = PhysicsParams::new(1.0, 1.0).unwrap();
    let traj = evolve(&s0, &p, 0.5, 0.01, 5, &mut []).unwrap();
    let split = split_phi(&traj).unwrap();
    for (slice, state) in split.inhomogeneous.slices.iter().zip(&traj.states) {
        assert!(slice.phi.l2_norm_phys() <= 1e-12 * (1.0 + state.phi.l2_norm_phys()));
        assert!(slice.phi_t.l2_norm_phys() <= 1e-12 * (1.0 + state.phi.l2_norm_phys()));
    }
}

#[test]
fn split_phi_recombines_and_starts_at_rest() {
    let (_, s0, p) = gaussian_setup(128, 40.0);
    let traj = evolve(&s0, &p, 0.4, 0.01, 4, &mut []).unwrap();
    let split = split_phi(&traj).unwrap();
    let start = &split.inhomogeneous.slices[0];
    assert_eq!(start.phi.l2_norm_phys(), 0.0);
    assert_eq!(start.phi_t.l2_norm_phys(), 0.0);
    for ((hom, inh), state) in split
        .homogeneous
        .slices
        .iter()
        .zip(&split.inhomogeneous.slices)
        .zip(&traj.states)
    {
        assert!(rel_diff(&hom.phi.add(&inh.phi), &state.phi) < 1e-13);
        assert!(rel_diff(&hom.phi_t.add(&inh.phi_t), &state.phi_t) < 1e-13);
    }
    // the remainder is driven by the spinor, so it is not zero
    let last = split.inhomogeneous.slices.last().unwrap();
    assert!(last.phi_t.l2_norm_phys() > 1e-6);
}

#[test]
fn cascade_telescopes_across_slabs() {
    let (g, s0, p) = gaussian_setup(128, 40.0);
    let slab = 0.2;
    let h = 0.01;
    let mass = p.scalar_mass;

    // three slabs, each split against its own starting data
    let mut starts = vec![s0.clone()];
    let mut remainders = Vec::new();
    for _ in 0..3 {
        let begin = starts.last().unwrap().clone();
        let traj = evolve(&begin, &p, slab, h, 20, &mut []).unwrap();
        let split = split_phi(&traj).unwrap();
        remainders.push(split.inhomogeneous.slices.last().unwrap().clone());
        starts.push(traj.last().unwrap().clone());
    }

    // at the start of slab n+1, φ⁽⁰⁾_{n+1} is the free wave of the data there;
    // it equals φ⁽⁰⁾_1 plus the free continuations of each slab remainder
    let probe_t = 3.0 * slab + 0.15;
    let target = {
        let data = starts[3].scalar_slice();
        cascade_free_wave(
            &data,
            3.0 * slab,
            probe_t - 3.0 * slab,
            probe_t - 3.0 * slab,
            mass,
        )
        .unwrap()
        .slices
        .pop()
        .unwrap()
    };
    let mut sum = cascade_free_wave(&s0.scalar_slice(), 0.0, probe_t, probe_t, mass)
        .unwrap()
        .slices
        .pop()
        .unwrap();
    for (k, rem) in remainders.iter().enumerate() {
        let from = (k + 1) as f64 * slab;
        let piece = cascade_free_wave(rem, from, probe_t - from, probe_t - from, mass)
            .unwrap()
            .slices
            .pop()
            .unwrap();
        sum = WaveSlice {
            phi: sum.phi.add(&piece.phi),
            phi_t: sum.phi_t.add(&piece.phi_t),
        };
    }
    assert!(rel_diff(&sum.phi, &target.phi) < 1e-10);
    assert!(rel_diff(&sum.phi_t, &target.phi_t) < 1e-10);
    assert_eq!(sum.phi.grid().n(), g.n());
}

#[test]
fn cascade_with_zero_horizon_returns_data() {
    let (_, s0, _) = gaussian_setup(64, 20.0);
    let series = cascade_free_wave(&s0.scalar_slice(), 1.5, 0.0, 0.1, 1.0).unwrap();
    assert_eq!(series.times, vec![1.5]);
    assert_eq!(series.slices[0].phi.spec(), s0.phi.spec());
}

#[test]
fn picard_contracts_and_matches_the_integrator() {
    let g = make_grid(128, 40.0).unwrap();
    let s0 = InitialData::Gaussian {
        amplitude: 0.5,
        width: 2.0,
    }
    .build(&g);
    let p = PhysicsParams::new(1.0, 1.0).unwrap();
    let horizon = 0.4;
    let h = 0.005;
    let run = picard_iterate(&s0, &p, horizon, h, 12).unwrap();
    let inc = &run.increments;
    for w in inc.windows(2).skip(1) {
        assert!(w[1] < 0.5 * w[0], "increments {inc:?}");
    }
    assert!(*inc.last().unwrap() < 1e-10, "increments {inc:?}");

    let direct = final_state(&s0, &p, horizon, h);
    let fixed = run.states.last().unwrap();
    let size = state_diff(&direct, &DkgState::zeros(g.clone()));
    let gap = state_diff(fixed, &direct);
    assert!(gap < 1e-3 * size, "gap {gap} size {size} inc {inc:?}");
}
