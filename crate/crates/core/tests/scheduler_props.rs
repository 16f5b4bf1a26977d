use dkg_core::scheduler::{
    boundary_equivalence, exponent_check, exponent_terms, gwp_lower, induction_step, region_check,
    region_curves, run_induction, search_cutoff, slab_length, RegionKind, SchedulerParams,
    SearchOutcome, Verdict,
};
use proptest::prelude::*;

fn params(cutoff: f64) -> SchedulerParams {
    SchedulerParams {
        s: -0.01,
        r: 0.4,
        eps: 0.01,
        cutoff,
        c: 1.0,
        a: 0.1,
        b: 0.1,
        t: 10.0,
    }
}

#[test]
fn quadratic_boundary_agrees_with_radical_on_a_lattice() {
    let mut checked = 0;
    for i in 1..100 {
        let s = -0.125 * i as f64 / 100.0;
        for j in 0..=100 {
            let r = j as f64 / 100.0;
            let radical = r > s + (s * s - s).sqrt();
            // skip lattice points sitting on the curve itself
            if (r - gwp_lower(s)).abs() < 1e-12 {
                continue;
            }
            assert_eq!(boundary_equivalence(s, r), radical, "s = {s}, r = {r}");
            checked += 1;
        }
    }
    assert!(checked > 9_000);
}

#[test]
fn reduced_region_closes_at_the_corner() {
    let c = region_curves(-0.125);
    assert!((c.lower_gwp - 0.25).abs() < 1e-15);
    assert!((c.upper_reduced - 0.25).abs() < 1e-15);
    for j in 0..=1000 {
        let r = j as f64 / 1000.0;
        assert!(!region_check(RegionKind::Gwp, -0.125, r));
        assert!(!region_check(RegionKind::Reduced, -0.125, r));
    }
    assert!(region_check(RegionKind::Reduced, -0.1, 0.28));
    assert!(!region_check(RegionKind::Reduced, -0.1, 0.23));
}

#[test]
fn exponent_examples() {
    assert!(exponent_check(-0.1, 0.28, 0.005).unwrap());
    let (first, _) = exponent_terms(-0.1, 0.23, 0.001).unwrap();
    assert!(first > 0.0);
    assert!(!exponent_check(-0.1, 0.23, 0.001).unwrap());
}

#[test]
fn slab_count_edges() {
    let p = SchedulerParams {
        t: 0.5,
        cutoff: 2.0,
        ..params(2.0)
    };
    let (dt, k) = slab_length(&p).unwrap();
    assert!(dt > 0.5);
    assert_eq!(k, 0);
    let exact = SchedulerParams { t: 3.0 * dt, ..p };
    assert_eq!(slab_length(&exact).unwrap().1, 3);
    let trace = run_induction(&p).unwrap();
    assert!(trace.steps.is_empty());
    assert_eq!(trace.verdict, Verdict::Sustained);
}

#[test]
fn final_bounds_do_not_grow_with_the_cutoff() {
    // K = ⌈T/ΔT⌉ overshoots T by up to one slab; a long horizon and a large B
    // keep that jitter below the decay of the cutoff-dependent terms
    let finals: Vec<(f64, f64)> = [1024.0, 2048.0, 4096.0]
        .iter()
        .map(|&n| {
            let p = SchedulerParams {
                c: 0.01,
                b: 10.0,
                t: 100.0,
                ..params(n)
            };
            let trace = run_induction(&p).unwrap();
            assert_eq!(trace.verdict, Verdict::Sustained);
            let last = trace.steps.last().unwrap();
            (last.a_n, last.b_n)
        })
        .collect();
    for w in finals.windows(2) {
        assert!(w[1].0 <= w[0].0, "{finals:?}");
        assert!(w[1].1 <= w[0].1, "{finals:?}");
    }
}

#[test]
fn search_finds_a_cutoff_inside_the_region() {
    match search_cutoff(&params(2.0), 40).unwrap() {
        SearchOutcome::Found { cutoff, trace } => {
            assert!(cutoff.log2().fract() == 0.0);
            assert_eq!(trace.verdict, Verdict::Sustained);
            let below = run_induction(&params(cutoff / 2.0));
            if cutoff > 2.0 {
                assert_ne!(below.unwrap().verdict, Verdict::Sustained);
            }
        }
        other => panic!("unexpected {other:?}"),
    }
    let outside = SchedulerParams {
        s: -0.1,
        r: 0.23,
        ..params(2.0)
    };
    match search_cutoff(&outside, 30).unwrap() {
        SearchOutcome::Infeasible {
            region_ok,
            exponent_ok,
            ..
        } => {
            assert!(!region_ok);
            assert!(!exponent_ok);
        }
        other => panic!("unexpected {other:?}"),
    }
}

proptest! {
    #[test]
    fn induction_step_is_monotone(
        a in 0.0..10.0f64,
        b in 0.0..10.0f64,
        da in 0.0..1.0f64,
        db in 0.0..1.0f64,
        cutoff in 2.0..1e6f64,
        dt in 1e-3..1.0f64,
    ) {
        let p = params(cutoff);
        let (a1, b1) = induction_step(a, b, &p, dt);
        let (a2, b2) = induction_step(a + da, b + db, &p, dt);
        prop_assert!(a1 >= a && b1 >= b);
        prop_assert!(a2 >= a1 && b2 >= b1);
    }

    #[test]
    fn radical_and_quadratic_forms_agree(s in -0.125..0.0f64, r in 0.0..1.0f64) {
        prop_assume!((r - gwp_lower(s)).abs() > 1e-9);
        prop_assert_eq!(boundary_equivalence(s, r), r > gwp_lower(s));
    }
}
