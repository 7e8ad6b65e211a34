//! Library results against independent closed forms and plain f64 sums.

use pressure_lab::instances;
use pressure_lab::pressure::{pressure_fullshift, pressure_truncated};
use pressure_lab::suspension::{self, locate_t0, suspension_pressure, Regime, TransitionPoint};
use pressure_lab::*;

/// `Σ_{m >= m0} m^{-s}` by a direct sum to `M` plus Euler–Maclaurin.
fn power_tail(s: f64, m0: u64) -> f64 {
    let big = 200_000u64;
    let direct: f64 = (m0..big).map(|m| (m as f64).powf(-s)).sum();
    let x = big as f64;
    let f = x.powf(-s);
    let f1 = -s * x.powf(-s - 1.0);
    let f3 = -s * (s + 1.0) * (s + 2.0) * x.powf(-s - 3.0);
    direct + x.powf(1.0 - s) / (s - 1.0) + f / 2.0 - f1 / 12.0 + f3 / 720.0
}

/// `Σ_{m >= m0} (ln m)^t / m`, valid for `t < -1`.
fn log_tail(t: f64, m0: u64) -> f64 {
    let big = 1_000_000u64;
    let direct: f64 = (m0..big).map(|m| (m as f64).ln().powf(t) / m as f64).sum();
    let x = big as f64;
    let l = x.ln();
    let f = l.powf(t) / x;
    let f1 = l.powf(t - 1.0) * (t - l) / (x * x);
    direct + l.powf(t + 1.0) / (-(t + 1.0)) + f / 2.0 - f1 / 12.0
}

/// Root of an increasing function by plain bisection.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn zeta_two_brackets_log_pi_squared_over_six() {
    let phi = TailPotential::tail_only(TailForm::new(-2.0, 0.0, 0.0, 0.0, 1.0));
    let p = pressure_fullshift(&phi, 1e-10).unwrap().interval().unwrap();
    let want = (std::f64::consts::PI.powi(2) / 6.0).ln();
    assert!(p.contains(want), "{p}");
    assert!(p.width() <= 1e-8);
}

#[test]
fn zeta_three_against_euler_maclaurin() {
    let phi = TailPotential::tail_only(TailForm::new(-3.0, 0.0, 0.0, 0.0, 1.0));
    let p = pressure_fullshift(&phi, 1e-10).unwrap().interval().unwrap();
    let want = power_tail(3.0, 1).ln();
    assert!((p.mid() - want).abs() < 1e-9, "{p} {want}");
}

#[test]
fn geometric_weights() {
    // Σ_{n>=0} 2^{-n} = 2
    let phi = TailPotential::tail_only(TailForm::linear(-std::f64::consts::LN_2));
    let p = pressure_fullshift(&phi, 1e-10).unwrap().interval().unwrap();
    assert!(p.contains(std::f64::consts::LN_2), "{p}");
}

#[test]
fn truncation_approaches_the_series() {
    let phi = TailPotential::tail_only(TailForm::new(-2.5, 0.0, 0.0, 0.0, 1.0));
    let full = pressure_fullshift(&phi, 1e-10).unwrap().interval().unwrap();
    let tr = pressure_truncated(&SymbolicShift::full(0), &phi, 10_000).unwrap();
    let missing = power_tail(2.5, 10_001);
    assert!(tr <= full.hi);
    assert!(full.lo - tr <= missing * 1.01, "{} {tr} {missing}", full.lo);
}

#[test]
fn two_symbol_closed_form() {
    // P(tg) = (ln 2 + t g) / τ for constant roof τ and constant Δ_g = g
    let roof = TailPotential::head_only(vec![Some(1.5); 2]);
    let obs = TailPotential::head_only(vec![Some(0.4); 2]);
    let sys = suspension::FlowSystem::new(SymbolicShift::full(0), roof, obs).unwrap();
    for t in [-2.0, 0.0, 1.0] {
        let v = suspension_pressure(&sys, t, 1e-8).unwrap();
        let want = (std::f64::consts::LN_2 + 0.4 * t) / 1.5;
        assert!((v.value.mid() - want).abs() < 1e-8, "{t} {:?}", v);
    }
}

#[test]
fn nophase_at_zero_solves_zeta_equals_two() {
    // Σ_{n>=0} (n+2)^{-s} = 1
    let want = bisect(|s| 1.0 - power_tail(s, 2), 1.1, 3.0);
    let v = suspension_pressure(&instances::nophase(), 0.0, 1e-8).unwrap();
    assert_eq!(v.regime, Regime::Analytic);
    assert!((v.value.mid() - want).abs() < 1e-7, "{:?} {want}", v.value);
}

#[test]
fn onephase_at_zero() {
    // Σ_{m>=20} m^{-s} = 1
    let want = bisect(|s| 1.0 - power_tail(s, 20), 1.01, 3.0);
    let sys = instances::onephase(20.0).unwrap();
    let v = suspension_pressure(&sys, 0.0, 1e-8).unwrap();
    assert!((v.value.mid() - want).abs() < 1e-7, "{:?} {want}", v.value);
}

#[test]
fn onephase_transition_against_log_series() {
    // t_0 = sup{t : Σ_{m>=20} (ln m)^t / m <= 1}
    let want = bisect(|t| log_tail(t, 20) - 1.0, -3.0, -1.01);
    let sys = instances::onephase(20.0).unwrap();
    let TransitionPoint::Transition { t0 } = locate_t0(&sys, 1e-6).unwrap() else {
        panic!("no transition found");
    };
    assert!(t0.width() <= 1e-6 + 1e-12, "{t0}");
    assert!(t0.lo - 1e-9 <= want && want <= t0.hi + 1e-9, "{t0} {want}");
}

#[test]
fn count_values_follow_the_shifted_envelope() {
    let (sys, coef) = instances::count(6, 0.25).unwrap();
    let a: Vec<f64> = (1..=6).map(|i| 0.5f64.powi(i - 1)).collect();
    let env = instances::envelope(&a, &coef.c, (-5.0, -1.5)).unwrap();
    for t in [-4.5, -3.0, -2.2] {
        let v = suspension_pressure(&sys, t, 1e-6).unwrap();
        assert!((v.value.mid() - env.value(t)).abs() <= 5e-6, "{t} {:?} {}", v.value, env.value(t));
    }
}

#[test]
fn geodesic_entropy_between_half_and_one() {
    let h = instances::geodesic_entropy(10, 2, 1e-6).unwrap();
    assert!(h.lo > 0.5 && h.hi < 1.0, "{h}");
}
