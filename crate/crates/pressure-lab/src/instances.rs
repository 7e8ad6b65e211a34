//! Reference systems: the three full-shift examples and the positive
//! geodesic flow, with the counting-example coefficients, minus continued
//! fraction roof enclosures and piecewise-linear envelopes.

use crate::error::{domain, inconclusive, Result};
use crate::interval::{up, ExtendedReal, Interval};
use crate::potential::{Tail, TailForm, TailPotential};
use crate::pressure;
use crate::series::{self, SeriesSpec};
use crate::shift::SymbolicShift;
use crate::suspension::FlowSystem;
use serde::{Deserialize, Serialize};

/// Level of `n` in the partition `A_1, A_2, …`: `A_1` holds `0`, `1` and the
/// non-squares, and `n ∈ A_{i+1}` when `√n ∈ A_i`.
pub fn count_level(n: u64) -> u32 {
    let mut m = n;
    let mut level = 1;
    while m > 1 {
        let r = m.isqrt();
        if r * r != m {
            break;
        }
        m = r;
        level += 1;
    }
    level
}

/// `c_1 = -1/4`, `c_{i+1} = c_i - 1/(2^i (i+1))`, as intervals.
pub fn count_slopes(levels: usize) -> Vec<Interval> {
    let mut c = Vec::with_capacity(levels);
    let mut cur = Interval::point(-0.25);
    for i in 1..=levels {
        c.push(cur);
        let step = Interval::ONE / Interval::point(2f64.powi(i as i32) * (i as f64 + 1.0));
        cur = cur - step;
    }
    c
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountCoefficients {
    /// `c_1, …, c_L` (midpoints of exact rationals).
    pub c: Vec<f64>,
    /// `ln k_i`.
    pub log_k: Vec<f64>,
    /// Certified upper bounds of the level sums at the chosen `k_i`.
    pub level_sums: Vec<f64>,
}

const LOG_K_CAP: f64 = 1e15;

/// Level form `(n+k)^{-2^{-(i-1)}} log(n+k)^{-(1+δ)}` as a tail form.
fn lemma_form(level: usize, delta: f64, log_k: f64) -> TailForm {
    let alpha = 0.5f64.powi(level as i32 - 1);
    TailForm::with_log_k(-alpha, -(1.0 + delta), 0.0, 0.0, log_k)
}

/// Upper bound of the level-`i` lemma sum, taken over the superset
/// `{r^{2^{i-1}} : r >= 2}` of `A_i` (all `n >= 0` on level 1).
pub fn count_level_sum(level: usize, delta: f64, log_k: f64, abs_tol: f64) -> Result<ExtendedReal> {
    if level == 0 {
        return domain("levels start at 1");
    }
    let form = lemma_form(level, delta, log_k);
    let p = 1u32 << (level - 1);
    let (head, r0) = if level == 1 {
        (form.eval(0).exp(), 1)
    } else {
        (Interval::ZERO, 2)
    };
    Ok(match series::sum_over_powers(&form, p, r0, abs_tol)? {
        ExtendedReal::Infinite => ExtendedReal::Infinite,
        ExtendedReal::Interval(s) => ExtendedReal::Interval(s + head),
    })
}

fn level_sum_below(level: usize, delta: f64, log_k: f64) -> Result<Option<f64>> {
    let target = 0.5f64.powi(level as i32);
    for tol in [target * 1e-3, target * 1e-6] {
        match count_level_sum(level, delta, log_k, tol)? {
            ExtendedReal::Infinite => return Ok(None),
            ExtendedReal::Interval(s) => {
                if s.hi < target {
                    return Ok(Some(s.hi));
                }
                if s.lo >= target {
                    return Ok(None);
                }
            }
        }
    }
    Ok(None)
}

/// Slopes `c_i` and the smallest integer `ln k_i` whose certified level sum
/// is below `2^{-i}`.
pub fn count_coefficients(levels: usize, delta: f64) -> Result<CountCoefficients> {
    if levels == 0 {
        return domain("levels must be at least 1");
    }
    if !(delta > 0.0 && delta < 0.5) {
        return domain("delta must lie in (0, 1/2)");
    }
    let c = count_slopes(levels).iter().map(|x| x.mid()).collect();
    let mut log_k = Vec::new();
    let mut sums = Vec::new();
    let mut hint = 1.0f64;
    for level in 1..=levels {
        // exponential search, then integer bisection
        let mut hi = hint;
        let mut hi_sum;
        loop {
            if hi > LOG_K_CAP {
                return inconclusive(format!("no ln k below {LOG_K_CAP:e} certifies level {level}"));
            }
            if let Some(s) = level_sum_below(level, delta, hi)? {
                hi_sum = s;
                break;
            }
            hi *= 2.0;
        }
        let mut lo = if hi == hint { 0.0 } else { hi / 2.0 };
        while hi - lo > 1.0 {
            let mid = ((lo + hi) / 2.0).floor();
            match level_sum_below(level, delta, mid)? {
                Some(s) => {
                    hi = mid;
                    hi_sum = s;
                }
                None => lo = mid,
            }
        }
        if hi < 1.0 {
            hi = 1.0;
            hi_sum = level_sum_below(level, delta, hi)?.expect("monotone in k");
        }
        log_k.push(hi);
        sums.push(hi_sum);
        hint = hi;
    }
    Ok(CountCoefficients { c, log_k, level_sums: sums })
}

/// Checks a user-supplied `ln k_i` list against the level inequality.
pub fn validate_count_log_k(log_k: &[f64], delta: f64) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, &l) in log_k.iter().enumerate() {
        match level_sum_below(i + 1, delta, l)? {
            Some(s) => out.push(s),
            None => {
                return domain(format!(
                    "ln k_{} = {l} does not certify the level sum below 2^-{}",
                    i + 1,
                    i + 1
                ))
            }
        }
    }
    Ok(out)
}

/// Upper envelope of lines `t ↦ a_i + c_i t` on a range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Envelope {
    pub intercepts: Vec<f64>,
    pub slopes: Vec<f64>,
    pub t_range: (f64, f64),
    /// Indices of the lines on the envelope, left to right.
    pub active: Vec<usize>,
    pub kinks: Vec<f64>,
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        self.intercepts
            .iter()
            .zip(&self.slopes)
            .map(|(a, c)| a + c * t)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn envelope(intercepts: &[f64], slopes: &[f64], t_range: (f64, f64)) -> Result<Envelope> {
    if intercepts.len() != slopes.len() || intercepts.is_empty() {
        return domain("need equally many intercepts and slopes, at least one");
    }
    if slopes.windows(2).any(|w| !(w[1] < w[0])) {
        return domain("slopes must be strictly decreasing");
    }
    let (t0, t1) = t_range;
    if !(t0 < t1) {
        return domain("empty t range");
    }
    let best = |t: f64| -> usize {
        let mut k = 0;
        for i in 1..slopes.len() {
            if intercepts[i] + slopes[i] * t > intercepts[k] + slopes[k] * t {
                k = i;
            }
        }
        k
    };
    // walk right to left: shallower slopes dominate on the right
    let mut active = vec![best(t1)];
    let mut kinks = Vec::new();
    let mut t = t1;
    loop {
        let cur = *active.last().expect("nonempty");
        let mut next: Option<(f64, usize)> = None;
        for j in cur + 1..slopes.len() {
            let x = (intercepts[j] - intercepts[cur]) / (slopes[cur] - slopes[j]);
            if x < t && next.map_or(true, |(y, _)| x >= y) {
                next = Some((x, j));
            }
        }
        match next {
            Some((x, j)) if x > t0 => {
                kinks.push(x);
                active.push(j);
                t = x;
            }
            _ => break,
        }
    }
    active.reverse();
    kinks.reverse();
    Ok(Envelope { intercepts: intercepts.to_vec(), slopes: slopes.to_vec(), t_range, active, kinks })
}

/// Certified bound on every minus-continued-fraction tail with digits `>= 3`.
pub fn cf_tail() -> Interval {
    Interval::new(0.0, up(0.4))
}

/// Enclosure of `w = n_1 + 1/(n_2 - 1/(n_3 - …))` from the first `depth`
/// digits, the rest replaced by `cf_tail()`.
pub fn minus_cf_enclosure(digits: &[u64], depth: usize) -> Result<Interval> {
    if depth == 0 || depth > digits.len() {
        return domain("depth must lie in 1..=digits.len()");
    }
    if digits.iter().any(|&n| n < 3) {
        return domain("minus continued fraction digits must be at least 3");
    }
    let d: Vec<Interval> = digits[..depth].iter().map(|&n| Interval::point(n as f64)).collect();
    Ok(cf_eval(&d))
}

fn cf_eval(d: &[Interval]) -> Interval {
    let mut t = cf_tail();
    for &n in d[1..].iter().rev() {
        t = Interval::ONE / (n - t);
        t = Interval::new(t.lo.max(0.0), t.hi);
    }
    d[0] + t
}

/// Roof enclosure data for one leading digit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoofBounds {
    pub n1: u64,
    pub w: Interval,
    pub tau: Interval,
}

/// Hull of `w` over all admissible depth-`depth` words starting with `n1`;
/// continuation digits above `max_symbol` are lumped into `[max_symbol+1, ∞)`.
pub fn leading_digit_enclosure(n1: u64, depth: usize, max_symbol: u64) -> Result<Interval> {
    let g = SymbolicShift::geodesic();
    if n1 < 3 {
        return domain("digits start at 3");
    }
    let over = Interval::new((max_symbol + 1) as f64, f64::INFINITY);
    // digit alphabet for continuations: explicit symbols, then the overflow class
    let mut cont: Vec<(Option<u64>, Interval)> =
        (3..=max_symbol).map(|n| (Some(n), Interval::point(n as f64))).collect();
    cont.push((None, over));
    let mut hull: Option<Interval> = None;
    let mut word: Vec<(Option<u64>, Interval)> = vec![(Some(n1), Interval::point(n1 as f64))];
    fn rec(
        g: &SymbolicShift,
        word: &mut Vec<(Option<u64>, Interval)>,
        depth: usize,
        cont: &[(Option<u64>, Interval)],
        hull: &mut Option<Interval>,
    ) {
        if word.len() == depth {
            let d: Vec<Interval> = word.iter().map(|x| x.1).collect();
            let w = cf_eval(&d);
            *hull = Some(hull.map_or(w, |h| h.hull(w)));
            return;
        }
        let last = word.last().expect("nonempty").0;
        for &(sym, iv) in cont {
            if let (Some(a), Some(b)) = (last, sym) {
                if !g.allows(a, b) {
                    continue;
                }
            }
            word.push((sym, iv));
            rec(g, word, depth, cont, hull);
            word.pop();
        }
    }
    if depth == 0 {
        return domain("depth must be at least 1");
    }
    rec(&g, &mut word, depth, &cont, &mut hull);
    Ok(hull.expect("some continuation exists"))
}

/// Lower and upper depth-one roofs `2 log w` for the geodesic shift: exact
/// enclosures on leading digits `3..=max_symbol`, `2 log n` and
/// `2 log(n + 1/2)` beyond.
pub fn geodesic_roof(depth: usize, max_symbol: u64) -> Result<(TailPotential, TailPotential, Vec<RoofBounds>)> {
    if max_symbol < 6 {
        return domain("max_symbol must be at least 6");
    }
    let mut lo_head = vec![None; 3];
    let mut hi_head = vec![None; 3];
    let mut bounds = Vec::new();
    for n1 in 3..=max_symbol {
        let w = leading_digit_enclosure(n1, depth, max_symbol)?;
        let tau = w.ln() * 2.0;
        lo_head.push(Some(tau.lo));
        hi_head.push(Some(tau.hi));
        bounds.push(RoofBounds { n1, w, tau });
    }
    let lower = TailPotential::new(lo_head, Some(Tail::Single(TailForm::new(2.0, 0.0, 0.0, 0.0, 0.0))))?;
    let upper = TailPotential::new(hi_head, Some(Tail::Single(TailForm::new(2.0, 0.0, 0.0, 0.0, 0.5))))?;
    Ok((lower, upper, bounds))
}

/// Outcome of comparing the enclosures with `2 log(c n_1) <= τ <= 2 log(n_1 + 1/2)`
/// where `c = (3 + √5)/6`, and with the upper bound `2 log n_1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoofComparison {
    pub c: f64,
    pub lower_c_holds: bool,
    pub upper_half_holds: bool,
    pub upper_n1_holds: bool,
}

pub fn compare_roof_bounds(bounds: &[RoofBounds], up_to: u64) -> RoofComparison {
    let c = (Interval::point(3.0) + Interval::point(5.0).ln().scale(0.5).exp()) / Interval::point(6.0);
    let mut out = RoofComparison { c: c.mid(), lower_c_holds: true, upper_half_holds: true, upper_n1_holds: true };
    for b in bounds.iter().filter(|b| b.n1 <= up_to) {
        let n = Interval::point(b.n1 as f64);
        if !((c * n).ln() * 2.0).hi.le(&b.tau.lo) {
            out.lower_c_holds = false;
        }
        if !(b.tau.hi <= ((n + 0.5).ln() * 2.0).lo) {
            out.upper_half_holds = false;
        }
        if !(b.tau.hi <= (n.ln() * 2.0).lo) {
            out.upper_n1_holds = false;
        }
    }
    out
}

/// Root of the decreasing map `s ↦ P(-s τ)` on the geodesic shift.
fn geodesic_root(roof: &TailPotential, tol: f64) -> Result<Interval> {
    let g = SymbolicShift::geodesic();
    let sign = |s: f64| pressure::pressure_sign(&g, &[(-s, roof)], tol * 1e-3);
    Ok(crate::suspension::root_by_sign(sign, 0.5, 2.0, tol)?.value)
}

/// Enclosure of the topological entropy of the positive geodesic flow.
pub fn geodesic_entropy(max_symbol: u64, depth: usize, tol: f64) -> Result<Interval> {
    if max_symbol < 6 {
        return domain("max_symbol must be at least 6");
    }
    let (lower, upper, _) = geodesic_roof(depth, max_symbol)?;
    let lo = geodesic_root(&upper, tol)?;
    let hi = geodesic_root(&lower, tol)?;
    Ok(Interval::new(lo.lo, hi.hi))
}

/// `sup g - inf g < h_top - 1/2`.
pub fn small_oscillation_check(g_sup: f64, g_inf: f64, h_top: f64) -> Result<bool> {
    if !(g_sup >= g_inf) {
        return domain("g_sup must be at least g_inf");
    }
    Ok(g_sup - g_inf < h_top - 0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleName {
    Nophase,
    Onephase,
    Count,
    Geodesic,
}

impl std::str::FromStr for ExampleName {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nophase" => Ok(ExampleName::Nophase),
            "onephase" => Ok(ExampleName::Onephase),
            "count" => Ok(ExampleName::Count),
            "geodesic" => Ok(ExampleName::Geodesic),
            _ => domain(format!("unknown example {s}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleParams {
    /// Shift of the one-phase example.
    pub k: f64,
    pub levels: usize,
    pub delta: f64,
    /// `ln k_i` for the counting example; searched when absent.
    pub log_k: Option<Vec<f64>>,
    pub max_symbol: u64,
    pub depth: usize,
    /// Observable for the geodesic system; zero when absent.
    pub observable: Option<TailPotential>,
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams {
            k: 20.0,
            levels: 6,
            delta: 0.25,
            log_k: None,
            max_symbol: 50,
            depth: 2,
            observable: None,
        }
    }
}

/// `τ = log(n+2)`, `Δ = logloglog(n+1)` from `n = 15`, `Δ = 1` below.
pub fn nophase() -> FlowSystem {
    let roof = TailPotential::tail_only(TailForm::new(1.0, 0.0, 0.0, 0.0, 2.0));
    let obs = TailPotential::new(
        vec![Some(1.0); 15],
        Some(Tail::Single(TailForm::new(0.0, 0.0, 1.0, 0.0, 1.0))),
    )
    .expect("valid observable");
    FlowSystem::new(SymbolicShift::full(0), roof, obs).expect("valid system")
}

/// Certified `Σ_{n >= k} 1/(n log² n)`.
pub fn onephase_constraint(k: u64) -> Result<Interval> {
    if k < 2 {
        return domain("k must be at least 2");
    }
    let p = TailPotential::tail_only(TailForm::new(-1.0, -2.0, 0.0, 0.0, 0.0));
    match series::sum_series(&SeriesSpec::single(&p, k), 1e-6)? {
        ExtendedReal::Interval(s) => Ok(s),
        ExtendedReal::Infinite => inconclusive("constraint series diverged"),
    }
}

/// `τ = log(n+k)`, `Δ = loglog(n+k)`.
pub fn onephase(k: f64) -> Result<FlowSystem> {
    if !(k >= 2.0 && k.fract() == 0.0 && k < 1e15) {
        return domain("k must be an integer >= 2");
    }
    let s = onephase_constraint(k as u64)?;
    if !(s.hi < 1.0) {
        return domain(format!("k = {k} fails the constraint: sum {s}"));
    }
    let roof = TailPotential::tail_only(TailForm::new(1.0, 0.0, 0.0, 0.0, k));
    let obs = TailPotential::tail_only(TailForm::new(0.0, 1.0, 0.0, 0.0, k));
    FlowSystem::new(SymbolicShift::full(0), roof, obs)
}

/// Counting example with the given `ln k_i`.
pub fn count_with(log_k: &[f64]) -> Result<FlowSystem> {
    let c = count_slopes(log_k.len());
    let roof = TailPotential {
        head: vec![],
        tail: Some(Tail::Leveled {
            levels: log_k.iter().map(|&l| TailForm::with_log_k(1.0, 0.0, 0.0, 0.0, l)).collect(),
        }),
        n0: 0,
    };
    let obs = TailPotential {
        head: vec![],
        tail: Some(Tail::Leveled {
            levels: log_k
                .iter()
                .zip(&c)
                .map(|(&l, ci)| TailForm::with_log_k(ci.mid(), 1.0, 0.0, 0.0, l))
                .collect(),
        }),
        n0: 0,
    };
    roof.validate()?;
    obs.validate()?;
    FlowSystem::new(SymbolicShift::full(0), roof, obs)
}

pub fn count(levels: usize, delta: f64) -> Result<(FlowSystem, CountCoefficients)> {
    let coef = count_coefficients(levels, delta)?;
    Ok((count_with(&coef.log_k)?, coef))
}

pub fn geodesic(depth: usize, max_symbol: u64, observable: Option<TailPotential>) -> Result<FlowSystem> {
    let (lower, upper, _) = geodesic_roof(depth, max_symbol)?;
    let obs = observable.unwrap_or_else(|| TailPotential::constant(0.0));
    let mut sys = FlowSystem::new(SymbolicShift::geodesic(), lower, obs)?;
    sys.roof_upper = Some(upper);
    Ok(sys)
}

pub fn make_example(name: ExampleName, params: &ExampleParams) -> Result<FlowSystem> {
    match name {
        ExampleName::Nophase => Ok(nophase()),
        ExampleName::Onephase => onephase(params.k),
        ExampleName::Count => match &params.log_k {
            Some(l) => {
                validate_count_log_k(l, params.delta)?;
                count_with(l)
            }
            None => Ok(count(params.levels, params.delta)?.0),
        },
        ExampleName::Geodesic => geodesic(params.depth, params.max_symbol, params.observable.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_level(n: u64) -> u32 {
        // A_1 ∪ {0,1}; n ∈ A_{i+1} iff n = m², m ∈ A_i, m >= 2
        let mut m = n;
        let mut lvl = 1;
        loop {
            if m <= 1 {
                return lvl;
            }
            let r = (1..=m).take_while(|r| r * r <= m).last().unwrap();
            if r * r != m {
                return lvl;
            }
            m = r;
            lvl += 1;
        }
    }

    #[test]
    fn levels_of_small_numbers() {
        assert_eq!(count_level(2), 1);
        assert_eq!(count_level(0), 1);
        assert_eq!(count_level(16), 3);
        assert_eq!(count_level(65536), 5);
        for n in 0..3000 {
            assert_eq!(count_level(n), brute_level(n), "{n}");
        }
    }

    #[test]
    fn slopes() {
        let c = count_slopes(3);
        assert!(c[0].contains(-0.25));
        assert!(c[1].contains(-0.5));
        assert!(c[2].contains(-7.0 / 12.0));
    }

    #[test]
    fn envelope_examples() {
        let e = envelope(&[1.0], &[0.0], (-5.0, 5.0)).unwrap();
        assert!(e.kinks.is_empty());
        let e = envelope(&[1.0, 0.0], &[0.0, -1.0], (-5.0, 5.0)).unwrap();
        assert_eq!(e.kinks, vec![-1.0]);
        assert_eq!(e.value(0.0), 1.0);
        assert!(envelope(&[0.0, 0.0], &[1.0, 2.0], (-1.0, 1.0)).is_err());
    }

    #[test]
    fn printed_intercepts_give_half_integer_kinks() {
        let c: Vec<f64> = count_slopes(5).iter().map(|x| x.mid()).collect();
        let a: Vec<f64> = (1..=5).map(|i| 0.5f64.powi(i)).collect();
        let e = envelope(&a, &c, (-10.0, 0.0)).unwrap();
        let want = [-3.0, -2.5, -2.0, -1.5, -1.0];
        assert_eq!(e.kinks.len(), 5 - 1);
        for (k, w) in e.kinks.iter().zip(&want[1..]) {
            assert!((k - w).abs() < 1e-12, "{k} {w}");
        }
    }

    #[test]
    fn minus_cf_examples() {
        let w = minus_cf_enclosure(&[5], 1).unwrap();
        assert_eq!(w.lo, 5.0);
        assert!((w.hi - 5.4).abs() < 1e-12);
        let w = minus_cf_enclosure(&[4, 4], 2).unwrap();
        assert!(w.is_subset_of(&minus_cf_enclosure(&[4, 4], 1).unwrap()));
        let w = minus_cf_enclosure(&[3; 12], 12).unwrap();
        assert!(w.contains(3.0 + (3.0 - 5f64.sqrt()) / 2.0), "{w}");
        assert!(w.width() < 1e-4);
        assert!(minus_cf_enclosure(&[5, 2], 2).is_err());
    }

    #[test]
    fn small_oscillation() {
        assert!(small_oscillation_check(0.3, 0.0, 1.0).unwrap());
        assert!(!small_oscillation_check(0.6, 0.0, 1.0).unwrap());
        assert!(!small_oscillation_check(0.5, 0.0, 1.0).unwrap());
        assert!(small_oscillation_check(0.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn onephase_constraint_at_twenty() {
        let s = onephase_constraint(20).unwrap();
        assert!(s.hi < 1.0);
        // 1/log(k - 1/2) approximates the tail; a crude independent check
        assert!((s.mid() - 1.0 / 19.5f64.ln()).abs() < 0.05, "{s}");
    }
}
