use evl_core::ensemble::fold_trials;
use evl_core::escapes::{escape_at, escape_event, no_escape_window};
use evl_core::estimators::ei_from_max;
use evl_core::observables::ExceedanceTest;
use evl_core::stats::MeanAcc;
use evl_core::symbolic::{period_sequence, primitive_root, ReturnStatus};
use evl_core::theory::{analytic_ei, potential_sum, theoretical_cdf, LawKind, ZetaDescriptor};
use evl_core::*;
use proptest::prelude::*;

fn map_specs() -> impl Strategy<Value = ProcessSpec> {
    prop_oneof![
        Just(ProcessSpec::doubling()),
        Just(ProcessSpec::m_ary(3)),
        Just(ProcessSpec::m_ary(5)),
        (0.05f64..0.95).prop_map(|a| ProcessSpec::bernoulli(a).unwrap()),
    ]
}

fn any_spec() -> impl Strategy<Value = ProcessSpec> {
    prop_oneof![
        Just(ProcessSpec::doubling()),
        Just(ProcessSpec::m_ary(3)),
        (0.25f64..0.75).prop_map(|a| ProcessSpec::bernoulli(a).unwrap()),
        Just(ProcessSpec::dyadic_jump()),
        Just(ProcessSpec::chebyshev()),
        (2u32..8).prop_map(|r| ProcessSpec::ar1(r).unwrap()),
        Just(ProcessSpec::mma2()),
        Just(ProcessSpec::mma13()),
        Just(ProcessSpec::iid_uniform()),
    ]
}

fn word(base: u32, max_len: usize) -> impl Strategy<Value = SymbolicWord> {
    prop::collection::vec(0..base as u8, 1..=max_len).prop_map(move |s| SymbolicWord::new(s, base).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shifting_drops_exactly_one_digit(spec in map_specs(), seed in any::<u64>(), warmup in 0usize..500) {
        let mut s = ProcessState::stationary(&spec, seed, 0);
        for _ in 0..warmup {
            s.step();
        }
        let before = s.leading_digits(40).unwrap();
        let x = s.evaluate_point(64);
        s.step();
        let after = s.leading_digits(39).unwrap();
        prop_assert_eq!(&before[1..], &after[..]);
        let m = spec.digit_base().unwrap() as f64;
        let expected = (m * x).fract();
        let got = s.evaluate_point(64);
        let err = (expected - got).abs().min(1.0 - (expected - got).abs());
        prop_assert!(err <= 4.0 * m * f64::EPSILON, "{err}");
    }

    #[test]
    fn chebyshev_orbit_follows_the_quadratic_map(seed in any::<u64>(), warmup in 0usize..200) {
        let spec = ProcessSpec::chebyshev();
        let mut s = ProcessState::stationary(&spec, seed, 1);
        for _ in 0..warmup {
            s.step();
        }
        let x = s.point();
        s.step();
        prop_assert!((s.point() - (1.0 - 2.0 * x * x)).abs() < 1e-12);
    }

    #[test]
    fn dyadic_jump_orbit_follows_its_branches(seed in any::<u64>(), warmup in 0usize..200) {
        let spec = ProcessSpec::dyadic_jump();
        let mut s = ProcessState::stationary(&spec, seed, 2);
        for _ in 0..warmup {
            s.step();
        }
        let x = s.evaluate_point(64);
        prop_assume!(x > 1e-9);
        let k = (-x.log2()).floor() + 1.0;
        s.step();
        let expected = 2f64.powf(k) * x - 1.0;
        prop_assert!((s.evaluate_point(64) - expected).abs() < 1e-15 * 2f64.powf(k) + 1e-15);
    }

    #[test]
    fn ar1_prepend_agrees_with_recursion(r in 2u32..8, seed in any::<u64>()) {
        let spec = ProcessSpec::ar1(r).unwrap();
        let mut s = ProcessState::stationary(&spec, seed, 3);
        let mut direct = s.point();
        for _ in 0..1000 {
            s.step();
            let d = s.leading_digits(1).unwrap()[0];
            direct = (direct + d as f64) / r as f64;
            prop_assert!((s.point() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_path(spec in any_spec(), seed in any::<u64>(), trial in any::<u64>()) {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        ProcessState::stationary(&spec, seed, trial).fill_coordinates(&mut a, 300);
        ProcessState::stationary(&spec, seed, trial).fill_coordinates(&mut b, 300);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn escape_or_capture_at_every_exceedance(
        series in prop::collection::vec(0.0f64..1.0, 20..200),
        u in 0.3f64..0.95,
        p in 1usize..5,
    ) {
        let offsets = EscapeOffsets::single(p);
        for j in 0..series.len() - p {
            let escape = escape_event(&series, j, &offsets, u).unwrap();
            let capture = series[j] > u && series[j + p] > u;
            prop_assert_eq!(series[j] > u, escape ^ capture);
            prop_assert!(!(escape && capture));
        }
    }

    #[test]
    fn window_test_matches_index_bookkeeping(
        series in prop::collection::vec(0.0f64..1.0, 30..200),
        u in 0.5f64..0.95,
        offsets in prop_oneof![Just(vec![1usize]), Just(vec![2]), Just(vec![1, 3]), Just(vec![2, 1, 4])],
    ) {
        let offsets = EscapeOffsets::new(offsets).unwrap();
        let idx: Vec<u64> = (0..series.len() as u64).filter(|&j| series[j as usize] > u).collect();
        let len = series.len() - offsets.span();
        let clean = no_escape_window(&series, 0, len, &offsets, u).unwrap();
        let by_index = !(0..len as u64).any(|j| escape_at(&idx, j, &offsets));
        prop_assert_eq!(clean, by_index);
        for j in 0..len {
            prop_assert_eq!(escape_event(&series, j, &offsets, u).unwrap(), escape_at(&idx, j as u64, &offsets));
        }
    }

    #[test]
    fn levels_rise_with_the_window(spec in any_spec(), tau in 0.2f64..3.0, n in 100u64..100_000) {
        let obs = match spec.kind {
            ProcessKind::ChebyshevQuadratic => ObservableSpec::chebyshev_default(),
            ProcessKind::ChernickAr1 { .. } | ProcessKind::Mma2 | ProcessKind::Mma13 | ProcessKind::IidUniform => ObservableSpec::identity(),
            _ => ObservableSpec::distance(GForm::G1, Anchor::Point { value: 0.0 }),
        };
        let o = Observer::new(&spec, &obs).unwrap();
        // Balls under unequal digit weights can have edges finer than 53 bits,
        // and near x = −1 the level 1 − r cannot hold a radius of order q².
        // Those are refused, never mis-sized. Everything else must resolve.
        let may_refuse = spec.digit_weights().is_some_and(|w| w.iter().any(|x| (x - w[0]).abs() > 1e-12))
            || spec.kind == ProcessKind::ChebyshevQuadratic;
        let (a, b) = match (o.level_for_tau(n, tau), o.level_for_tau(2 * n, tau)) {
            (Ok(a), Ok(b)) => (a, b),
            (a, b) => {
                for r in [a, b] {
                    if let Err(e) = r {
                        prop_assert!(may_refuse && matches!(e, EvlError::Undefined(_)), "{:?}", e);
                    }
                }
                return Ok(());
            }
        };
        prop_assert!(b.u >= a.u);
        prop_assert!((a.tail * n as f64 - tau).abs() <= 1e-6 * tau);
    }

    #[test]
    fn skewed_balls_below_resolution_are_rejected(tau in 0.2f64..3.0) {
        // The side of the ball near 1 has mass 0.95^k per k bits, so a mass-1e-3
        // ball needs ~135 bits there.
        let spec = ProcessSpec::bernoulli(0.05).unwrap();
        let o = Observer::new(&spec, &ObservableSpec::distance(GForm::G1, Anchor::Point { value: 0.0 })).unwrap();
        prop_assert!(matches!(o.level_for_tau((tau * 1e3) as u64, tau), Err(EvlError::Undefined(_))));
    }

    #[test]
    fn period_sequence_is_monotone(w in word(2, 40)) {
        let seq = period_sequence(&w);
        let r: Vec<usize> = seq.rows.iter().map(|row| row.r).collect();
        prop_assert!(r.windows(2).all(|x| x[0] <= x[1]));
        prop_assert!(seq.values.windows(2).all(|x| x[0] < x[1]));
    }

    #[test]
    fn periodic_words_stabilise_at_the_prime_period(w in word(3, 8), reps in 3usize..6) {
        let root = primitive_root(&w);
        let symbols: Vec<u8> = w.symbols.iter().copied().cycle().take(w.len() * reps).collect();
        let long = SymbolicWord::new(symbols, 3).unwrap();
        let seq = period_sequence(&long);
        let last = seq.rows.iter().rev().find(|row| row.status == ReturnStatus::Decided).unwrap();
        prop_assert_eq!(last.r, root.len());
    }

    #[test]
    fn potential_is_non_positive(a in 0.01f64..0.99, w in word(2, 12)) {
        let spec = ProcessSpec::bernoulli(a).unwrap();
        let text = w.to_string();
        let s = potential_sum(&spec, &text).unwrap();
        prop_assert!(s <= 0.0);
        let th = analytic_ei(&spec, &ZetaDescriptor::Periodic { word: text.clone() }).unwrap();
        prop_assert!((th.theta - (1.0 - s.exp())).abs() < 1e-12);
        // 1 − α^k (1−α)^{p−k} over the primitive root.
        let root = primitive_root(&w);
        let k = root.symbols.iter().filter(|&&d| d == 0).count() as i32;
        let p = root.len() as i32;
        prop_assert!((th.theta - (1.0 - a.powi(k) * (1.0 - a).powi(p - k))).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_potential_for_dyadic_jump(blocks in prop::collection::vec(1usize..5, 1..5)) {
        let text: String = blocks.iter().map(|&k| "0".repeat(k - 1) + "1").collect();
        let spec = ProcessSpec::dyadic_jump();
        let s = potential_sum(&spec, &text).unwrap();
        let th = analytic_ei(&spec, &ZetaDescriptor::Periodic { word: text }).unwrap();
        prop_assert!((th.theta - (1.0 - s.exp())).abs() < 1e-12);
    }

    #[test]
    fn max_law_inversion_round_trips(theta in 0.0f64..1.0, tau in 0.1f64..5.0) {
        let e = ei_from_max((-theta * tau).exp(), 0.0, tau).unwrap();
        prop_assert!((e.theta - theta).abs() < 1e-12);
        prop_assert!(!e.clamped);
    }

    #[test]
    fn g2_inverse_scales_as_a_power(beta in 0.2f64..4.0, s in 1e-8f64..1e-2, y in 0.1f64..10.0) {
        let g = GForm::G2 { beta };
        let ratio = g.inverse(s * y) / g.inverse(s);
        prop_assert!((ratio / y.powf(-beta) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn merged_folds_do_not_depend_on_thread_count(trials in 1u64..2000, threads in 1usize..5) {
        let run = || {
            fold_trials(
                trials,
                || (),
                MeanAcc::default,
                |t, _, acc: &mut MeanAcc| {
                    let mut s = ProcessState::stationary(&ProcessSpec::mma13(), 5, t);
                    acc.push(s.point());
                },
                |a, b| a.merge(&b),
            )
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        prop_assert_eq!(pool.install(run), run());
    }

    #[test]
    fn maximum_and_hitting_time_describe_the_same_event(spec in any_spec(), seed in any::<u64>(), q in 0.001f64..0.2, n in 1u64..400) {
        let test = ExceedanceTest::Above(1.0 - q);
        let mut a = ProcessState::stationary(&spec, seed, 9);
        let mut b = a.clone();
        let no_return = a.first_hit(&test, n).is_none();
        b.step();
        let mut idx = Vec::new();
        b.collect_exceedances(&test, n, &mut idx);
        prop_assert_eq!(no_return, idx.is_empty());
    }
}

/// `∫_0^t (1 − G̃(s)) ds` by composite Simpson on the continuous part, the
/// atom sitting at `s = 0` where the integrand is evaluated from the right.
fn integrated_rts_survival(theta: f64, t: f64) -> f64 {
    let rts = theoretical_cdf(LawKind::Rts, theta);
    let f = |s: f64| 1.0 - rts(s);
    let steps = 2000;
    let h = t / steps as f64;
    let mut acc = f(0.0) + f(t);
    for i in 1..steps {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn hitting_law_integrates_the_return_survival() {
    for theta in [0.25, 0.5, 0.75, 1.0] {
        let hts = theoretical_cdf(LawKind::Hts, theta);
        for i in 1..=50 {
            let t = i as f64 * 0.1;
            assert!(
                (hts(t) - integrated_rts_survival(theta, t)).abs() < 1e-10,
                "θ={theta}, t={t}"
            );
        }
    }
}
