//! Pressure of suspension flows: `P_Φ(tg) = inf{s : P(tΔ_g - sτ) <= 0}`.
//!
//! `s_∞` is the abscissa of `Σ e^{-sτ}`. The value at `t` is flat (equal to
//! `s_∞`) when `P(tΔ_g - s_∞τ) <= 0`; otherwise it is the root of the
//! decreasing map `s ↦ P(tΔ_g - sτ)` found by bisection on certified signs.
//! A root that sits on a `t`-dependent divergence abscissa is labelled
//! `critical`.

use crate::error::{domain, inconclusive, Error, Result};
use crate::interval::{ExtendedReal, Interval};
use crate::potential::{Tail, TailForm, TailPotential};
use crate::pressure;
use crate::series::{self, Convergence, SeriesSpec, SumSign};
use crate::shift::SymbolicShift;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOL: f64 = 1e-6;
const MAX_EXPANSIONS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSystem {
    pub shift: SymbolicShift,
    /// Roof `τ`; the lower roof when `roof_upper` is present.
    pub roof: TailPotential,
    /// `Δ_g`.
    pub observable: TailPotential,
    /// Upper roof for systems whose roof is only known as an enclosure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roof_upper: Option<TailPotential>,
}

/// Order of growth: linear, log, loglog, logloglog, bounded.
fn growth(f: &TailForm) -> (u8, f64) {
    if f.e != 0.0 {
        (4, f.e)
    } else if f.a != 0.0 {
        (3, f.a)
    } else if f.b != 0.0 {
        (2, f.b)
    } else if f.c != 0.0 {
        (1, f.c)
    } else {
        (0, f.d)
    }
}

fn forms(p: &TailPotential) -> Vec<&TailForm> {
    match &p.tail {
        None => vec![],
        Some(Tail::Single(f)) => vec![f],
        Some(Tail::Leveled { levels }) => levels.iter().collect(),
    }
}

impl FlowSystem {
    pub fn new(shift: SymbolicShift, roof: TailPotential, observable: TailPotential) -> Result<Self> {
        let s = FlowSystem { shift, roof, observable, roof_upper: None };
        s.validate()?;
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sys: FlowSystem =
            serde_json::from_str(s).map_err(|e| Error::Domain(format!("system json: {e}")))?;
        sys.validate()?;
        Ok(sys)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("system serializes")
    }

    pub fn roofs(&self) -> Vec<&TailPotential> {
        let mut r = vec![&self.roof];
        if let Some(u) = &self.roof_upper {
            r.push(u);
        }
        r
    }

    /// Certified `inf τ` over present symbols.
    pub fn roof_floor(&self) -> Result<f64> {
        let mut inf = f64::INFINITY;
        for roof in self.roofs() {
            let off = self.shift.alphabet_offset;
            for n in off..roof.n0 {
                if let Some(v) = roof.head[n as usize] {
                    inf = inf.min(v);
                }
            }
            for f in forms(roof) {
                if f.a < 0.0 || f.b < 0.0 || f.c < 0.0 || f.e < 0.0 {
                    return domain("roof tail is not nondecreasing; cannot bound it away from zero");
                }
                inf = inf.min(f.eval(roof.n0.max(off)).lo);
            }
        }
        Ok(inf)
    }

    pub fn validate(&self) -> Result<()> {
        self.shift.validate()?;
        self.roof.validate()?;
        self.observable.validate()?;
        if let Some(u) = &self.roof_upper {
            u.validate()?;
        }
        if !(self.roof_floor()? > 0.0) {
            return domain("roof must be bounded away from zero");
        }
        // |Δ_g|/τ bounded: the observable grows no faster than the roof
        for roof in self.roofs() {
            let rf = forms(roof);
            let of = forms(&self.observable);
            let levels = rf.len().max(of.len());
            for i in 0..levels {
                let (Some(r), Some(o)) = (rf.get(i.min(rf.len().saturating_sub(1))), of.get(i.min(of.len().saturating_sub(1)))) else {
                    continue;
                };
                if growth(o).0 > growth(r).0 {
                    return domain("observable outgrows the roof");
                }
            }
        }
        Ok(())
    }

    fn terms<'a>(&'a self, roof: &'a TailPotential, t: f64, s: f64) -> Vec<(f64, &'a TailPotential)> {
        vec![(t, &self.observable), (-s, roof)]
    }

    /// Certified sign of `P(tΔ_g - sτ)` for one roof.
    pub fn sign(&self, roof: &TailPotential, t: f64, s: f64, min_tol: f64) -> Result<SumSign> {
        match pressure::pressure_sign(&self.shift, &self.terms(roof, t, s), min_tol) {
            Err(Error::Inconclusive(_)) => Ok(SumSign::Undecided(Interval::ENTIRE)),
            r => r,
        }
    }
}

/// Bisection result on a certified sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub value: Interval,
    /// The lower end was certified infinite rather than finite positive.
    pub lo_infinite: bool,
}

fn is_above(s: &SumSign) -> bool {
    matches!(s, SumSign::Above { .. })
}

/// Bisection for the crossing of a sign that is `Above` to the left and
/// `AtMost` to the right. The bracket grows outward until it holds.
pub fn root_by_sign<F>(sign: F, lo: f64, hi: f64, tol: f64) -> Result<Root>
where
    F: Fn(f64) -> Result<SumSign>,
{
    if !(lo < hi) || !(tol > 0.0) {
        return domain("need lo < hi and tol > 0");
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut lo_sign = sign(lo)?;
    let mut n = 0;
    while !is_above(&lo_sign) {
        n += 1;
        if n > MAX_EXPANSIONS {
            return Err(Error::Bracket("no lower bracket with positive sign".into()));
        }
        let w = hi - lo;
        if matches!(lo_sign, SumSign::AtMost) {
            hi = lo;
        }
        lo -= 2.0 * w;
        lo_sign = sign(lo)?;
    }
    let mut n = 0;
    loop {
        match sign(hi)? {
            SumSign::AtMost => break,
            s => {
                n += 1;
                if n > MAX_EXPANSIONS {
                    return Err(Error::Bracket("no upper bracket with nonpositive sign".into()));
                }
                let w = hi - lo;
                if is_above(&s) {
                    lo = hi;
                    lo_sign = s;
                }
                hi += 2.0 * w;
            }
        }
    }
    let mut lo_inf = matches!(lo_sign, SumSign::Above { infinite: true });
    while hi - lo > tol {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        match sign(mid)? {
            SumSign::AtMost => hi = mid,
            SumSign::Above { infinite } => {
                lo = mid;
                lo_inf = infinite;
            }
            SumSign::Undecided(_) => {
                let d = 0.45 * tol;
                let (a, b) = ((mid - d).max(lo), (mid + d).min(hi));
                let sa = sign(a)?;
                let sb = sign(b)?;
                if let SumSign::Above { infinite } = sa {
                    lo = a;
                    lo_inf = infinite;
                }
                if let SumSign::AtMost = sb {
                    hi = b;
                }
                if !is_above(&sa) && !matches!(sb, SumSign::AtMost) {
                    return inconclusive(format!("sign undecided on [{a}, {b}] inside [{lo}, {hi}]"));
                }
                if matches!(sa, SumSign::AtMost) {
                    hi = a;
                }
                if is_above(&sb) {
                    lo = b;
                }
            }
        }
    }
    Ok(Root { value: Interval::new(lo, hi), lo_infinite: lo_inf })
}

/// Exact abscissa from the tail exponents, when it is representable.
fn exact_abscissa(roof: &TailPotential) -> Option<f64> {
    let mut best: Option<f64> = None;
    let fs = forms(roof);
    if fs.is_empty() {
        return None;
    }
    for (i, f) in fs.iter().enumerate() {
        let p = if matches!(roof.tail, Some(Tail::Leveled { .. })) { 1u64 << i } else { 1 };
        let cand = if f.e > 0.0 {
            0.0
        } else if f.a > 0.0 {
            let s = 1.0 / (p as f64 * f.a);
            if Interval::point(s) * Interval::point(f.a) * (p as f64) != Interval::ONE {
                return None;
            }
            s
        } else {
            return None;
        };
        best = Some(best.map_or(cand, |b: f64| b.max(cand)));
    }
    best
}

fn abscissa_one(shift: &SymbolicShift, roof: &TailPotential, tol: f64) -> Result<Interval> {
    if roof.tail.is_none() {
        return Ok(Interval::point(f64::NEG_INFINITY));
    }
    let off = shift.alphabet_offset;
    if let Some(s) = exact_abscissa(roof) {
        // confirm the verdicts on both sides before trusting it
        let v = |x: f64| series::verdict(&SeriesSpec::new(vec![(-x, roof)], off));
        let left = if s > 0.0 { v(s * (1.0 - 1e-9))? } else { v(-1e-9)? };
        let right = v(s * (1.0 + 1e-9) + 1e-12)?;
        if left == Convergence::Diverges && right == Convergence::Converges {
            return Ok(Interval::point(s));
        }
    }
    let mut hi = 1.0f64;
    let mut n = 0;
    while series::verdict(&SeriesSpec::new(vec![(-hi, roof)], off))? != Convergence::Converges {
        hi *= 2.0;
        n += 1;
        if n > 40 {
            return Err(Error::Bracket("roof grows too slowly: Σ e^{-sτ} diverges for every tested s".into()));
        }
    }
    series::convergence_abscissa(|s| SeriesSpec::new(vec![(-s, roof)], off), (0.0, hi), tol)
}

/// Abscissa of convergence of `s ↦ Σ e^{-sτ(n)}` (hull over both roofs).
pub fn s_infinity(system: &FlowSystem, tol: f64) -> Result<Interval> {
    let mut out: Option<Interval> = None;
    for roof in system.roofs() {
        let a = abscissa_one(&system.shift, roof, tol)?;
        out = Some(out.map_or(a, |o| o.hull(a)));
    }
    Ok(out.expect("at least one roof"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Value equals `s_∞`.
    Flat,
    /// Root of a finite, decreasing pressure.
    Analytic,
    /// Root pinned at a `t`-dependent divergence abscissa above `s_∞`.
    Critical,
    /// Sign at `s_∞` could not be decided.
    Boundary,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Flat => "flat",
            Regime::Analytic => "analytic",
            Regime::Critical => "critical",
            Regime::Boundary => "boundary",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SuspensionValue {
    pub value: Interval,
    pub regime: Regime,
}

fn one_roof(system: &FlowSystem, roof: &TailPotential, t: f64, s_inf: Interval, tol: f64) -> Result<SuspensionValue> {
    value_from_sign(|s: f64| system.sign(roof, t, s, tol * 1e-3), s_inf, tol)
}

/// Root of a sign function in `s` with the regime read off at `s_∞`.
pub fn value_from_sign<F>(sign: F, s_inf: Interval, tol: f64) -> Result<SuspensionValue>
where
    F: Fn(f64) -> Result<SumSign>,
{
    if s_inf.hi == f64::NEG_INFINITY {
        let r = root_by_sign(&sign, -1.0, 1.0, tol)?;
        return Ok(SuspensionValue { value: r.value, regime: Regime::Analytic });
    }
    let at = sign(s_inf.hi)?;
    match at {
        SumSign::AtMost => Ok(SuspensionValue { value: s_inf, regime: Regime::Flat }),
        SumSign::Above { .. } => {
            let r = root_by_sign(&sign, s_inf.hi, s_inf.hi + 1.0, tol)?;
            let regime = if r.lo_infinite && r.value.lo > s_inf.hi { Regime::Critical } else { Regime::Analytic };
            Ok(SuspensionValue { value: r.value, regime })
        }
        SumSign::Undecided(_) => {
            let hi = s_inf.hi + tol;
            let value = match sign(hi)? {
                SumSign::AtMost => Interval::new(s_inf.lo, hi),
                _ => {
                    let r = root_by_sign(&sign, hi, hi + 1.0, tol)?;
                    Interval::new(s_inf.lo, r.value.hi)
                }
            };
            Ok(SuspensionValue { value, regime: Regime::Boundary })
        }
    }
}

/// `P_Φ(tg)` with its regime.
pub fn suspension_pressure(system: &FlowSystem, t: f64, tol: f64) -> Result<SuspensionValue> {
    let s_inf = s_infinity(system, tol)?;
    suspension_pressure_with(system, t, tol, s_inf)
}

pub fn suspension_pressure_with(system: &FlowSystem, t: f64, tol: f64, s_inf: Interval) -> Result<SuspensionValue> {
    if !(tol > 0.0) || !t.is_finite() {
        return domain("need finite t and tol > 0");
    }
    let mut out: Option<SuspensionValue> = None;
    for roof in system.roofs() {
        let v = one_roof(system, roof, t, s_inf, tol)?;
        out = Some(match out {
            None => v,
            Some(o) => SuspensionValue {
                value: o.value.hull(v.value),
                regime: if o.regime == v.regime { o.regime } else { Regime::Boundary },
            },
        });
    }
    Ok(out.expect("at least one roof"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseSample {
    pub t: f64,
    pub value: Interval,
    pub regime: Regime,
    pub kink: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Kink {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Kink {
    pub fn center(&self) -> f64 {
        0.5 * (self.t_lo + self.t_hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureCurve {
    pub s_inf: Interval,
    pub tol: f64,
    pub step: f64,
    pub samples: Vec<PhaseSample>,
    pub kinks: Vec<Kink>,
}

impl PressureCurve {
    /// CSV rows `t,lo,hi,regime,kink_flag` after a `#` header line.
    pub fn to_csv(&self, header: &str) -> String {
        let mut s = String::new();
        s.push_str("# ");
        s.push_str(header);
        s.push('\n');
        s.push_str("t,lo,hi,regime,kink_flag\n");
        for p in &self.samples {
            s.push_str(&format!(
                "{},{:e},{:e},{},{}\n",
                p.t,
                p.value.lo,
                p.value.hi,
                p.regime.as_str(),
                p.kink as u8
            ));
        }
        s
    }
}

/// Grid `t_min, t_min + step, …` up to `t_max` (inclusive within rounding).
pub fn t_grid(t_min: f64, t_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(t_min <= t_max) {
        return domain("need step > 0 and t_min <= t_max");
    }
    let n = ((t_max - t_min) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return domain("grid too large");
    }
    // snap to a 1e-12 lattice so accumulated rounding does not leak into labels
    Ok((0..=n).map(|k| ((t_min + k as f64 * step) * 1e12).round() / 1e12).collect())
}

/// Kink candidates: grid points where the jump between the left and right
/// difference quotients exceeds `10 tol / step` after removing the background
/// jump two points away, and which carry the largest jump within two points.
/// Smooth curvature can still pass this test on a coarse grid; see
/// [`confirm_kinks`].
pub fn flag_kinks(values: &[f64], step: f64, tol: f64) -> Vec<bool> {
    let n = values.len();
    let mut flags = vec![false; n];
    if n < 3 {
        return flags;
    }
    let thr = 10.0 * tol / step;
    let jump: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 || k + 1 == n {
                f64::NAN
            } else {
                (values[k + 1] - values[k]) / step - (values[k] - values[k - 1]) / step
            }
        })
        .collect();
    let near = |k: usize| (k.saturating_sub(2)..(k + 3).min(n)).filter(move |&i| i != k);
    for k in 1..n - 1 {
        let bg = [k.checked_sub(2), Some(k + 2)]
            .iter()
            .flatten()
            .filter_map(|&i| jump.get(i).copied().filter(|j| j.is_finite()))
            .min_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        let peak = near(k).all(|i| !(jump[i].abs() > jump[k].abs()));
        if peak && (jump[k] - bg).abs() > thr {
            flags[k] = true;
        }
    }
    flags
}

/// Refinement factor used by [`confirm_kinks`].
pub const KINK_REFINE: usize = 8;

/// Re-samples `[t_k - step, t_k + step]` at `step / 8` around each candidate.
/// A slope discontinuity keeps its jump under refinement while curvature
/// shrinks with the spacing; a candidate survives when the largest jump over
/// two adjacent fine points is at least half the coarse one.
pub fn confirm_kinks<F>(ts: &[f64], values: &[f64], flags: &[bool], step: f64, tol: f64, eval: F) -> Result<Vec<bool>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let n = values.len();
    let cand: Vec<usize> = (1..n.saturating_sub(1)).filter(|&k| flags[k]).collect();
    let r = KINK_REFINE;
    let h = step / r as f64;
    let keep: Vec<Result<bool>> = cand
        .par_iter()
        .map(|&k| {
            let jump = |v: &[f64], i: usize, d: f64| (v[i + 1] - 2.0 * v[i] + v[i - 1]) / d;
            let coarse = jump(values, k, step);
            let wide = [k - 1, k + 1]
                .iter()
                .filter(|&&i| i >= 1 && i + 1 < n)
                .map(|&i| coarse + jump(values, i, step))
                .fold(coarse, |a, b| if b.abs() > a.abs() { b } else { a });
            let mut fine = Vec::with_capacity(2 * r + 1);
            for i in 0..=2 * r {
                fine.push(match i {
                    0 => values[k - 1],
                    _ if i == r => values[k],
                    _ if i == 2 * r => values[k + 1],
                    _ => eval(ts[k] - step + i as f64 * h)?,
                });
            }
            let fj: Vec<f64> = (1..2 * r).map(|i| jump(&fine, i, h)).collect();
            let best = fj.windows(2).map(|w| w[0] + w[1]).fold(0.0f64, |a, b| a.max(b.abs()));
            Ok(best > 10.0 * tol / h && best >= 0.5 * wide.abs())
        })
        .collect();
    let mut out = vec![false; n];
    for (k, v) in cand.into_iter().zip(keep) {
        out[k] = v?;
    }
    Ok(out)
}

pub fn phase_scan(system: &FlowSystem, t_min: f64, t_max: f64, step: f64, tol: f64) -> Result<PressureCurve> {
    let ts = t_grid(t_min, t_max, step)?;
    let s_inf = s_infinity(system, tol)?;
    let vals: Vec<Result<SuspensionValue>> =
        ts.par_iter().map(|&t| suspension_pressure_with(system, t, tol, s_inf)).collect();
    let mut samples = Vec::with_capacity(ts.len());
    for (t, v) in ts.iter().zip(vals) {
        let v = v?;
        samples.push(PhaseSample { t: *t, value: v.value, regime: v.regime, kink: false });
    }
    let mids: Vec<f64> = samples.iter().map(|p| p.value.mid()).collect();
    let flags = flag_kinks(&mids, step, tol);
    let flags = confirm_kinks(&ts, &mids, &flags, step, tol, |t| {
        suspension_pressure_with(system, t, tol, s_inf).map(|v| v.value.mid())
    })?;
    let mut kinks: Vec<Kink> = Vec::new();
    for (k, f) in flags.iter().enumerate() {
        samples[k].kink = *f;
        if *f {
            let t = samples[k].t;
            match kinks.last_mut() {
                Some(last) if k > 0 && flags[k - 1] => last.t_hi = t,
                _ => kinks.push(Kink { t_lo: t, t_hi: t }),
            }
        }
    }
    Ok(PressureCurve { s_inf, tol, step, samples, kinks })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransitionPoint {
    NoTransition,
    Transition { t0: Interval },
}

/// `t_0 = sup{t : P(tΔ_g - s_∞τ) <= 0}`.
pub fn locate_t0(system: &FlowSystem, tol: f64) -> Result<TransitionPoint> {
    let s_inf = s_infinity(system, tol)?;
    if s_inf.hi == f64::NEG_INFINITY {
        return Ok(TransitionPoint::NoTransition);
    }
    let s = s_inf.hi;
    let roof = system.roofs().last().copied().expect("roof");
    let sign_t = |t: f64| system.sign(roof, t, s, tol * 1e-3);
    // a t with nonpositive sign first
    let mut t = -1.0f64;
    let mut found = None;
    for _ in 0..14 {
        if let SumSign::AtMost = sign_t(t)? {
            found = Some(t);
            break;
        }
        t *= 2.0;
    }
    let Some(t_low) = found else {
        return Ok(TransitionPoint::NoTransition);
    };
    // bisect in u = -t, where the sign is positive for small u
    let r = root_by_sign(|u| sign_t(-u), -(t_low + 1.0), -t_low, tol)?;
    Ok(TransitionPoint::Transition { t0: Interval::new(-r.value.hi, -r.value.lo) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Equilibrium {
    NoEquilibrium,
    Equilibrium,
    Undecided,
}

fn integrability(system: &FlowSystem, t: f64, s: f64) -> Result<Convergence> {
    let mut all = Convergence::Converges;
    for roof in system.roofs() {
        let spec = SeriesSpec::new(system.terms(roof, t, s), system.shift.alphabet_offset);
        match series::verdict_times_roof(&spec, roof)? {
            Convergence::Diverges => return Ok(Convergence::Diverges),
            Convergence::Borderline => all = Convergence::Borderline,
            Convergence::Converges => {}
        }
    }
    Ok(all)
}

/// Verdict from an already computed value.
pub fn equilibrium_from(system: &FlowSystem, t: f64, v: &SuspensionValue, s_inf: Interval) -> Result<Equilibrium> {
    match v.regime {
        Regime::Critical => return Ok(Equilibrium::NoEquilibrium),
        Regime::Analytic if v.value.lo > s_inf.hi => {
            return Ok(match integrability(system, t, v.value.lo)? {
                Convergence::Converges => Equilibrium::Equilibrium,
                Convergence::Diverges => Equilibrium::NoEquilibrium,
                Convergence::Borderline => Equilibrium::Undecided,
            });
        }
        _ => {}
    }
    if s_inf.hi == f64::NEG_INFINITY {
        return Ok(Equilibrium::Undecided);
    }
    if v.regime == Regime::Flat {
        let mut negative = true;
        for roof in system.roofs() {
            match pressure::pressure_combined(&system.shift, &system.terms(roof, t, s_inf.hi), 1e-8) {
                Ok(ExtendedReal::Interval(p)) if p.hi < 0.0 => {}
                _ => negative = false,
            }
        }
        if negative {
            return Ok(Equilibrium::NoEquilibrium);
        }
    }
    if integrability(system, t, s_inf.hi)? == Convergence::Diverges {
        return Ok(Equilibrium::NoEquilibrium);
    }
    Ok(Equilibrium::Undecided)
}

pub fn equilibrium_verdict(system: &FlowSystem, t: f64) -> Result<Equilibrium> {
    let s_inf = s_infinity(system, DEFAULT_TOL)?;
    let v = suspension_pressure_with(system, t, DEFAULT_TOL, s_inf)?;
    equilibrium_from(system, t, &v, s_inf)
}

/// `(h + t Σ p_n Δ_g(n)) / Σ p_n τ(n)` for the Bernoulli measure with
/// weights `p_n` on symbols `offset, offset+1, …`.
pub fn variational_lower_bound(system: &FlowSystem, weights: &[f64], t: f64) -> Result<f64> {
    if !system.shift.is_full() {
        return domain("variational bound needs a full shift");
    }
    if weights.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return domain("weights must be finite and nonnegative");
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return domain(format!("weights sum to {total}, not 1"));
    }
    let off = system.shift.alphabet_offset;
    let mut h = 0.0;
    let mut dg = 0.0;
    let mut tau = 0.0;
    for (i, &p) in weights.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let n = off + i as u64;
        let d = system.observable.eval(n);
        let r = system.roof.eval(n);
        if d.hi == f64::NEG_INFINITY || r.hi == f64::NEG_INFINITY {
            return domain(format!("weight on absent symbol {n}"));
        }
        h -= p * p.ln();
        dg += p * d.mid();
        tau += p * r.mid();
    }
    Ok((h + t * dg) / tau)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    NoTransition,
    SingleTransition { t0: Interval },
    MultiTransition { kinks: Vec<Kink> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseReport {
    pub s_inf: Interval,
    pub classification: Classification,
    pub equilibrium: Vec<(f64, Equilibrium)>,
}

/// Scan, classify, and attach equilibrium verdicts at every grid point.
pub fn phase_report(system: &FlowSystem, t_min: f64, t_max: f64, step: f64, tol: f64) -> Result<(PressureCurve, PhaseReport)> {
    let curve = phase_scan(system, t_min, t_max, step, tol)?;
    let classification = if curve.kinks.len() >= 2 {
        Classification::MultiTransition { kinks: curve.kinks.clone() }
    } else {
        match locate_t0(system, tol)? {
            TransitionPoint::Transition { t0 } => Classification::SingleTransition { t0 },
            TransitionPoint::NoTransition => Classification::NoTransition,
        }
    };
    let equilibrium = curve
        .samples
        .par_iter()
        .map(|p| {
            let v = SuspensionValue { value: p.value, regime: p.regime };
            equilibrium_from(system, p.t, &v, curve.s_inf).map(|e| (p.t, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((curve.clone(), PhaseReport { s_inf: curve.s_inf, classification, equilibrium }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    fn two_symbol() -> FlowSystem {
        let roof = TailPotential::head_only(vec![Some(2f64.ln()); 2]);
        let obs = TailPotential::head_only(vec![Some(0.0); 2]);
        FlowSystem::new(SymbolicShift::full(0), roof, obs).unwrap()
    }

    #[test]
    fn two_symbol_entropy_is_one() {
        let v = suspension_pressure(&two_symbol(), 0.7, 1e-8).unwrap();
        assert!(v.value.contains(1.0) && v.value.width() <= 1e-8, "{:?}", v);
        assert_eq!(v.regime, Regime::Analytic);
    }

    #[test]
    fn s_inf_examples() {
        let s = s_infinity(&instances::nophase(), 1e-6).unwrap();
        assert!(s.contains(1.0) && s.width() <= 2e-6);
        let lin = TailPotential::tail_only(TailForm::linear(1.0));
        let sys = FlowSystem::new(SymbolicShift::full(1), lin, TailPotential::constant(0.0)).unwrap();
        let s = s_infinity(&sys, 1e-6).unwrap();
        assert!(s.lo >= -1e-6 && s.hi <= 1e-6, "{s}");
    }

    #[test]
    fn roof_must_be_positive() {
        let roof = TailPotential::head_only(vec![Some(0.0); 2]);
        let obs = TailPotential::head_only(vec![Some(0.0); 2]);
        assert!(FlowSystem::new(SymbolicShift::full(0), roof, obs).is_err());
    }

    #[test]
    fn kink_flags() {
        let v: Vec<f64> = (0..11).map(|k| (k as f64 * 0.1 - 0.5).abs()).collect();
        let f = flag_kinks(&v, 0.1, 1e-6);
        assert_eq!(f.iter().filter(|x| **x).count(), 1);
        assert!(f[5]);
    }

    #[test]
    fn refinement_drops_curvature() {
        let ts: Vec<f64> = (0..21).map(|k| -1.0 + k as f64 * 0.1).collect();
        // steep smooth crossover: jumps of order 0.05 on the coarse grid
        let smooth = |t: f64| (1.0 + (t / 0.1).powi(2)).sqrt() * 0.1;
        let v: Vec<f64> = ts.iter().map(|&t| smooth(t)).collect();
        let f = flag_kinks(&v, 0.1, 1e-6);
        assert!(f.iter().any(|x| *x));
        let c = confirm_kinks(&ts, &v, &f, 0.1, 1e-6, |t| Ok(smooth(t))).unwrap();
        assert!(c.iter().all(|x| !*x));
        // a genuine kink off the grid survives
        let kink = |t: f64| (t - 0.03f64).abs() + 0.2 * t * t;
        let v: Vec<f64> = ts.iter().map(|&t| kink(t)).collect();
        let f = flag_kinks(&v, 0.1, 1e-6);
        let c = confirm_kinks(&ts, &v, &f, 0.1, 1e-6, |t| Ok(kink(t))).unwrap();
        assert_eq!(c.iter().filter(|x| **x).count(), 1);
        assert!(c[10]);
    }

    #[test]
    fn variational_single_symbol() {
        let sys = instances::nophase();
        let mut w = vec![0.0; 20];
        w[17] = 1.0;
        let v = variational_lower_bound(&sys, &w, 2.0).unwrap();
        let want = 2.0 * sys.observable.value(17) / sys.roof.value(17);
        assert!((v - want).abs() < 1e-12);
        assert!(variational_lower_bound(&sys, &[0.5, 0.4], 0.0).is_err());
    }
}
