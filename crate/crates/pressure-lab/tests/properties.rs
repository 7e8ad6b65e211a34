use pressure_lab::inducing::{self, induced_potential, InducedSystem};
use pressure_lab::pressure::{self, pressure_combined, pressure_sign, pressure_truncated, pressure_truncated_combined};
use pressure_lab::series::{sum_series, SeriesSpec, SumSign};
use pressure_lab::suspension::{s_infinity, suspension_pressure, variational_lower_bound, FlowSystem};
use pressure_lab::*;
use proptest::prelude::*;

fn finite(e: ExtendedReal) -> Interval {
    e.interval().expect("finite")
}

fn decided(s: &SumSign) -> Option<bool> {
    match s {
        SumSign::Above { .. } => Some(true),
        SumSign::AtMost => Some(false),
        SumSign::Undecided(_) => None,
    }
}

prop_compose! {
    fn interval()(a in -50.0f64..50.0, w in 0.0f64..5.0) -> Interval {
        Interval::new(a, a + w)
    }
}

prop_compose! {
    /// Summable tail-family potential on the full shift.
    fn summable()(a in -4.0f64..-1.5, b in -2.0f64..2.0, d in -2.0f64..1.0, k in 3.0f64..10.0) -> TailPotential {
        TailPotential::tail_only(TailForm::new(a, b, 0.0, d, k.round()))
    }
}

prop_compose! {
    /// Finite full-shift system with constant head values.
    fn finite_system()(
        roof in prop::collection::vec(0.3f64..2.0, 2..6),
        obs in prop::collection::vec(-1.0f64..1.0, 6),
    ) -> FlowSystem {
        let n = roof.len();
        FlowSystem::new(
            SymbolicShift::full(0),
            TailPotential::head_only(roof.into_iter().map(Some).collect()),
            TailPotential::head_only(obs[..n].iter().copied().map(Some).collect()),
        )
        .unwrap()
    }
}

prop_compose! {
    /// `τ = a log(n+k)`, `Δ = b loglog(n+k) + d`.
    fn tail_system()(a in 1.0f64..2.0, b in -1.0f64..1.0, d in -1.0f64..1.0, k in 3u32..12) -> FlowSystem {
        let k = k as f64;
        FlowSystem::new(
            SymbolicShift::full(0),
            TailPotential::tail_only(TailForm::new(a, 0.0, 0.0, 0.0, k)),
            TailPotential::tail_only(TailForm::new(0.0, b, 0.0, d, k)),
        )
        .unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn arithmetic_encloses_samples(x in interval(), y in interval(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let p = x.lo + u * x.width();
        let q = y.lo + v * y.width();
        prop_assert!((x + y).contains(p + q));
        prop_assert!((x - y).contains(p - q));
        prop_assert!((x * y).contains(p * q));
        prop_assert!(x.exp().contains(p.exp()));
        if q.abs() > 1e-3 && !y.contains(0.0) {
            prop_assert!((x / y).contains(p / q));
        }
        if p > 0.0 && x.lo > 0.0 {
            prop_assert!(x.ln().contains(p.ln()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn series_enclosures_are_nested_and_sound(phi in summable()) {
        let spec = SeriesSpec::single(&phi, 0);
        let coarse = finite(sum_series(&spec, 1e-4).unwrap());
        let fine = finite(sum_series(&spec, 1e-9).unwrap());
        prop_assert!(fine.width() <= 1e-9 + 1e-15);
        prop_assert!(fine.lo <= coarse.hi && coarse.lo <= fine.hi);
        // every partial sum lies below the series
        let partial: f64 = (0..2000).map(|n| phi.eval(n).lo.exp()).sum();
        prop_assert!(partial <= fine.hi * (1.0 + 1e-12));
    }

    #[test]
    fn truncated_pressure_grows_with_the_block(phi in summable()) {
        let shift = SymbolicShift::full(0);
        let mut prev = f64::NEG_INFINITY;
        for n in [5u64, 50, 500, 5000] {
            let p = pressure_truncated(&shift, &phi, n).unwrap();
            prop_assert!(p >= prev - 1e-12, "{n}: {p} < {prev}");
            prev = p;
        }
        let full = finite(pressure::pressure_fullshift(&phi, 1e-9).unwrap());
        prop_assert!(prev <= full.hi + 1e-12);
    }

    #[test]
    fn pressure_is_convex_along_lines(phi in summable(), t0 in 0.8f64..1.0, t1 in 1.0f64..2.0) {
        // t ↦ P(t φ) on the full shift
        let shift = SymbolicShift::full(0);
        let p = |t: f64| finite(pressure_combined(&shift, &[(t, &phi)], 1e-8).unwrap());
        let mid = 0.5 * (t0 + t1);
        let (a, b, m) = (p(t0), p(t1), p(mid));
        prop_assert!(m.lo <= 0.5 * (a.hi + b.hi) + 1e-7);
    }

    #[test]
    fn truncation_agrees_on_finite_shifts(sys in finite_system(), s in 0.0f64..3.0) {
        let terms = [(1.0, &sys.observable), (-s, &sys.roof)];
        let p = finite(pressure_combined(&sys.shift, &terms, 1e-10).unwrap());
        let tr = pressure_truncated_combined(&sys.shift, &terms, 10).unwrap();
        prop_assert!((p.mid() - tr).abs() < 1e-9, "{p} {tr}");
    }

    #[test]
    fn variational_bound_below_pressure(sys in finite_system(), w in prop::collection::vec(0.01f64..1.0, 6), t in -2.0f64..1.0) {
        let n = sys.roof.n0 as usize;
        let total: f64 = w[..n].iter().sum();
        let mut weights: Vec<f64> = w[..n].iter().map(|x| x / total).collect();
        let residue = 1.0 - weights.iter().sum::<f64>();
        weights[0] += residue;
        let lower = variational_lower_bound(&sys, &weights, t).unwrap();
        let p = suspension_pressure(&sys, t, 1e-8).unwrap();
        prop_assert!(lower <= p.value.hi + 1e-8, "{lower} > {}", p.value);
    }

    #[test]
    fn samples_never_drop_below_s_inf(sys in tail_system(), t in -3.0f64..1.0) {
        let s_inf = s_infinity(&sys, 1e-6).unwrap();
        let v = suspension_pressure(&sys, t, 1e-6).unwrap();
        prop_assert!(v.value.is_finite());
        prop_assert!(v.value.lo >= s_inf.lo - 1e-6, "{} < {}", v.value, s_inf);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn induced_sign_matches_direct(sys in tail_system(), t in -2.0f64..1.0, s in 0.5f64..3.0, a in 0u64..3) {
        let terms = [(t, &sys.observable), (-s, &sys.roof)];
        let direct = pressure_sign(&sys.shift, &terms, 1e-9).unwrap();
        let induced = inducing::induced_pressure_sign(&sys.shift, a, &terms, inducing::DEFAULT_MAX_LEN, 1e-9).unwrap();
        if let (Some(x), Some(y)) = (decided(&direct), decided(&induced)) {
            prop_assert_eq!(x, y, "{:?} {:?}", direct, induced);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn induced_roof_grows_with_the_word(
        roof in prop::collection::vec(0.1f64..2.0, 4),
        word in prop::collection::vec(1u64..4, 0..6),
    ) {
        let tau = TailPotential::head_only(roof.into_iter().map(Some).collect());
        let mut w = vec![0u64];
        w.extend(&word);
        let mut prev = Interval::ZERO;
        for len in 1..=w.len() {
            let r = induced_potential(&tau, &w[..len]);
            prop_assert_eq!(InducedSystem::return_time(&w[..len]), len);
            prop_assert!(r.lo > prev.lo - 1e-12);
            prev = r;
        }
    }
}
