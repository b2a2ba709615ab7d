use proptest::prelude::*;

use swstream::codec::{decode_block, encode_stream, suffix_entropy, DEFAULT_CAP};
use swstream::exponents::GallagerCurves;
use swstream::info_measures::profile;
use swstream::md_analysis::{
    f_gamma, gain_region, minimize_f_over_gamma, nu_nonstreaming, nu_streaming_lower,
    BoundaryTarget, Case,
};
use swstream::source_model::{make_asymmetric, make_dsbs, make_zchannel, sample_blocks, JointPmf};
use swstream::{BinningCode, Schedule, Side};

fn pmf_strategy() -> impl Strategy<Value = JointPmf> {
    (2usize..4, 2usize..4)
        .prop_flat_map(|(nx, ny)| {
            (
                Just(nx),
                Just(ny),
                prop::collection::vec(0.02f64..1.0, nx * ny),
            )
        })
        .prop_map(|(nx, ny, w)| {
            let s: f64 = w.iter().sum();
            JointPmf::new(nx, ny, w.into_iter().map(|v| v / s).collect()).unwrap()
        })
}

fn schedule_strategy() -> impl Strategy<Value = Schedule> {
    (1usize..4, 0usize..3, 1usize..6).prop_map(|(t, extra, gap)| {
        let omega = t + extra;
        Schedule::new(2 * omega + gap, omega, t).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factories_sum_to_one(p in 0.0f64..=0.5, d in 0.001f64..0.999, a in 0.001f64..0.33) {
        prop_assume!((a - 0.25).abs() > 1e-3);
        for pmf in [make_dsbs(p).unwrap(), make_zchannel(d).unwrap(), make_asymmetric(a).unwrap()] {
            let s: f64 = pmf.probs().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(pmf.probs().iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn chain_rule(pmf in pmf_strategy()) {
        let p = profile(&pmf);
        prop_assert!((p.h_joint - (p.h_x_given_y + p.h_y)).abs() < 1e-12);
        prop_assert!((p.h_joint - (p.h_y_given_x + p.h_x)).abs() < 1e-12);
        prop_assert!(p.v_joint >= 0.0 && p.v_x_given_y >= 0.0 && p.v_y_given_x >= 0.0);
    }

    #[test]
    fn exponents_non_negative(pmf in pmf_strategy(), dx in 0.0f64..0.5, dy in 0.0f64..0.5, g in 0.0f64..1.0) {
        let p = profile(&pmf);
        let c = GallagerCurves::new(&pmf);
        let (rx, ry) = (p.h_x_given_y + dx, p.h_y + dy);
        prop_assert!(c.exponent(Side::X, rx, ry, g) >= 0.0);
        prop_assert!(c.exponent(Side::Y, rx, ry, g) >= 0.0);
        let m = c.min_exponent_over_gamma(Side::X, rx, ry);
        prop_assert!(m.value <= c.exponent(Side::X, rx, ry, g) + 1e-9);
    }

    #[test]
    fn exponents_grow_with_rate(pmf in pmf_strategy(), dx in 0.0f64..0.3, step in 0.0f64..0.2) {
        let p = profile(&pmf);
        let c = GallagerCurves::new(&pmf);
        let ry = p.h_y + 0.1;
        let a = c.min_both(p.h_x_given_y + dx, ry);
        let b = c.min_both(p.h_x_given_y + dx + step, ry);
        prop_assert!(b >= a - 1e-9);
    }

    #[test]
    fn codewords_per_block_bounded(s in schedule_strategy(), k in 1usize..200) {
        let c = s.codewords_per_block(k).unwrap();
        prop_assert!(c >= s.omega() && c <= s.psi());
    }

    #[test]
    fn encode_window_shape(s in schedule_strategy(), k in 1usize..200) {
        let w = s.encode_window(k).unwrap();
        prop_assert_eq!(w.hi, k);
        prop_assert!(!w.is_empty() && w.len() <= s.psi());
        if k >= s.psi() {
            prop_assert!(w.len() >= s.omega());
        }
    }

    #[test]
    fn plans_are_closed(s in schedule_strategy(), k in 1usize..120) {
        let plan = s.decode_plan(k).unwrap();
        prop_assert!(plan.prerequisites_closed());
        prop_assert_eq!(plan.stages.last().unwrap().targets.hi, k);
        for st in &plan.stages {
            prop_assert!(st.codewords.hi <= plan.decode_time);
            for tau in st.codewords.iter() {
                prop_assert!(s.encode_window(tau).unwrap().lo >= st.window.lo);
            }
        }
    }

    #[test]
    fn g1_dominates_g2(pmf in pmf_strategy()) {
        let p = profile(&pmf);
        prop_assume!(p.v_x_given_y > 1e-9 && p.v_joint > 1e-9);
        let v = gain_region(&p, 1.0, 0.0).unwrap();
        prop_assert!(v.g1 >= v.g2 - 1e-12);
    }

    #[test]
    fn f_minimum_beats_grid(pmf in pmf_strategy(), t1 in 0.1f64..3.0, r in -0.95f64..3.0) {
        let p = profile(&pmf);
        prop_assume!(p.v_x_given_y > 1e-9 && p.v_joint > 1e-9);
        let t2 = r * t1;
        let (v, g) = minimize_f_over_gamma(&p, t1, t2).unwrap();
        prop_assert!((0.0..=1.0).contains(&g));
        for i in 0..=200 {
            let gg = i as f64 / 200.0;
            prop_assert!(v <= f_gamma(p.v_x_given_y, p.v_joint, t1, t2, gg) + 1e-12);
        }
    }

    #[test]
    fn streaming_never_below_nonstreaming(pmf in pmf_strategy(), t1 in 0.1f64..3.0, r in -0.95f64..3.0) {
        let p = profile(&pmf);
        prop_assume!(p.v_x_given_y > 1e-9 && p.v_joint > 1e-9);
        let t = BoundaryTarget::canonical(&p, Case::II, t1, r * t1).unwrap();
        let s = nu_streaming_lower(&p, &t, 1).unwrap();
        let ns = nu_nonstreaming(&p, &t).unwrap();
        prop_assert!(s <= ns + 1e-12);
    }

    #[test]
    fn suffix_entropy_mirror(seed in 0u64..1000, l in 0usize..4, m in 0usize..4) {
        let s = sample_blocks(&make_dsbs(0.2).unwrap(), 3, 4, seed).unwrap();
        let a = suffix_entropy(l + 1, m + 1, 1, 4, &s.x, &s.y).unwrap();
        let b = suffix_entropy(m + 1, l + 1, 1, 4, &s.y, &s.x).unwrap();
        prop_assert!((a.value - b.value).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decoder_deterministic_and_keeps_truth(seed in 0u64..10_000, nb in 2u64..16) {
        let sched = Schedule::new(5, 2, 2).unwrap();
        let pmf = make_dsbs(0.1).unwrap();
        let s = sample_blocks(&pmf, 1, 14, seed).unwrap();
        let code = BinningCode::new(seed ^ 0x55, nb, nb, 1, 2, 2, sched).unwrap();
        let cw = encode_stream(&code, &s, 14).unwrap();
        for k in [3usize, 10, 13] {
            let tk = sched.decode_time(k);
            let a = decode_block(&code, &cw[..tk], k, DEFAULT_CAP).unwrap();
            let b = decode_block(&code, &cw[..tk], k, DEFAULT_CAP).unwrap();
            prop_assert_eq!(&a, &b);
            // while every earlier stage committed the truth, the truth survives
            let mut prefix_true = true;
            for st in &a.trace.stages {
                if !prefix_true {
                    break;
                }
                prop_assert!(st.survivors >= 1);
                let truth: (Vec<Vec<u8>>, Vec<Vec<u8>>) = (
                    st.targets.iter().map(|b| s.x[b - 1].clone()).collect(),
                    st.targets.iter().map(|b| s.y[b - 1].clone()).collect(),
                );
                prefix_true = !st.error && st.winner.as_ref() == Some(&truth);
            }
            if a.estimate.is_some() {
                prop_assert!(a.trace.stages.iter().all(|st| !st.error));
            }
        }
    }
}
