//! Certified sums of `Σ_n exp(Σ_j w_j φ_j(n))` over depth-one tail potentials.
//!
//! Convergence is decided exactly from the symbolic tail exponents (Bertrand
//! scale). Sums are a direct partial sum up to a cutoff `M` plus an enclosure
//! of the remaining terms. That enclosure integrates the summand in log
//! coordinates `v = ln m` (and `w = ln v` once the logarithmic factors take
//! over), bounding `∫ e^h` on each segment from an interval enclosure of `h'`.
//! The sum/integral gap uses the trapezoid bound when the summand is certified
//! convex, and the plain integral test otherwise.

use crate::error::{domain, inconclusive, Error, Result};
use crate::instances::count_level;
use crate::interval::{ExtendedReal, Interval};
use crate::potential::{TailForm, TailPotential};

/// Default absolute tolerance of `sum_series`.
pub const DEFAULT_ABS_TOL: f64 = 1e-9;
/// Default bracket width of `convergence_abscissa`.
pub const DEFAULT_BISECT_TOL: f64 = 1e-6;

const MIN_DIRECT: u64 = 32;
const MAX_DIRECT: u64 = 2_000_000;
const MAX_SEGMENTS: usize = 4_000_000;
const LEVEL1_SWITCH: f64 = 30.0;

/// Positive series `Σ_{n >= start, n ∉ skip} exp(Σ_j w_j φ_j(n))`.
#[derive(Clone, Debug)]
pub struct SeriesSpec<'a> {
    pub terms: Vec<(f64, &'a TailPotential)>,
    pub start: u64,
    pub skip: Vec<u64>,
}

impl<'a> SeriesSpec<'a> {
    pub fn new(terms: Vec<(f64, &'a TailPotential)>, start: u64) -> Self {
        SeriesSpec { terms, start, skip: Vec::new() }
    }

    pub fn single(phi: &'a TailPotential, start: u64) -> Self {
        Self::new(vec![(1.0, phi)], start)
    }

    pub fn skipping(mut self, skip: Vec<u64>) -> Self {
        self.skip = skip;
        self
    }

    fn active(&self) -> impl Iterator<Item = (f64, &'a TailPotential)> + '_ {
        self.terms.iter().copied().filter(|(w, _)| *w != 0.0)
    }

    /// Enclosure of the exponent at symbol `n`; `None` when the symbol is
    /// absent from some potential of the combination.
    pub fn exponent(&self, n: u64) -> Result<Option<Interval>> {
        let mut e = Interval::ZERO;
        for &(w, phi) in &self.terms {
            let v = phi.eval(n);
            if v.hi == f64::NEG_INFINITY {
                return Ok(None);
            }
            if w != 0.0 {
                e = e + v * w;
            }
        }
        Ok(Some(e))
    }

    /// Enclosure of the term at symbol `n`.
    pub fn term(&self, n: u64) -> Result<Interval> {
        Ok(match self.exponent(n)? {
            Some(e) => e.exp(),
            None => Interval::ZERO,
        })
    }

    fn levels(&self) -> usize {
        self.active().map(|(_, p)| p.levels()).max().unwrap_or(1)
    }

    fn leveled(&self) -> bool {
        self.active().any(|(_, p)| matches!(p.tail, Some(crate::potential::Tail::Leveled { .. })))
    }

    /// Symbol from which every potential follows its tail form, or `None`
    /// when some potential has no tail (finite series).
    fn tail_start(&self) -> Result<Option<u64>> {
        let mut n0 = self.start;
        for (_, phi) in &self.terms {
            if phi.tail.is_none() {
                return Ok(None);
            }
            n0 = n0.max(phi.n0);
        }
        Ok(Some(n0))
    }

    /// Weighted tail forms on a level.
    /// Weighted forms, merged when they share `k` so that `λ = e^{pv}/(e^{pv}+k)`
    /// enters each derivative once.
    fn forms(&self, level: usize) -> Vec<WForm> {
        let mut out: Vec<WForm> = Vec::new();
        for (w, p) in self.active() {
            let f = WForm::new(w, p.form(level).expect("tail present"));
            match out.iter_mut().find(|g| g.ln_k == f.ln_k) {
                Some(g) => {
                    g.wa = g.wa + f.wa;
                    g.wb = g.wb + f.wb;
                    g.wc = g.wc + f.wc;
                    g.wd = g.wd + f.wd;
                    g.we = g.we + f.we;
                }
                None => out.push(f),
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convergence {
    Converges,
    Diverges,
    /// Rounding prevents an exact comparison with the critical exponent.
    Borderline,
}

/// Tail form scaled by its weight.
#[derive(Clone, Debug)]
struct WForm {
    wa: Interval,
    wb: Interval,
    wc: Interval,
    wd: Interval,
    we: Interval,
    ln_k: Interval,
}

impl WForm {
    fn new(w: f64, f: &TailForm) -> Self {
        let w = Interval::point(w);
        WForm {
            wa: w * f.a,
            wb: w * f.b,
            wc: w * f.c,
            wd: w * f.d,
            we: w * f.e,
            ln_k: f.ln_k(),
        }
    }
    fn needs_l2(&self) -> bool {
        self.wb != Interval::ZERO || self.wc != Interval::ZERO
    }
    fn needs_l3(&self) -> bool {
        self.wc != Interval::ZERO
    }
}

/// Exponents of `m^{-σ} (log m)^β (loglog m)^γ e^{ε m}` for `m ↦ F(m^p)`.
fn exponents(forms: &[WForm], p: u32) -> (Interval, Interval, Interval, Interval) {
    let mut a = Interval::ZERO;
    let mut b = Interval::ZERO;
    let mut c = Interval::ZERO;
    let mut e = Interval::ZERO;
    for f in forms {
        a = a + f.wa;
        b = b + f.wb;
        c = c + f.wc;
        e = e + f.we;
    }
    (-(a * p as f64), b, c, e)
}

fn bertrand(sigma: Interval, beta: Interval, gamma: Interval, eps: Interval) -> Convergence {
    use Convergence::*;
    if eps != Interval::ZERO {
        return if eps.hi < 0.0 {
            Converges
        } else if eps.lo > 0.0 {
            Diverges
        } else {
            Borderline
        };
    }
    if sigma.lo > 1.0 {
        return Converges;
    }
    if sigma.hi < 1.0 {
        return Diverges;
    }
    if sigma != Interval::ONE {
        return Borderline;
    }
    if beta.hi < -1.0 {
        return Converges;
    }
    if beta.lo > -1.0 {
        return Diverges;
    }
    if beta != Interval::point(-1.0) {
        return Borderline;
    }
    if gamma.hi < -1.0 {
        Converges
    } else if gamma.lo >= -1.0 {
        Diverges
    } else {
        Borderline
    }
}

/// One sum `sign · Σ_{m >= m0} F_level(m^p)` of the tail decomposition.
#[derive(Clone, Debug)]
struct Piece {
    negative: bool,
    p: u32,
    m0: u64,
    level: usize,
}

fn iroot_ceil(n: u64, p: u32) -> u64 {
    if n <= 1 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / p as f64).round() as u64;
    let pow = |r: u64| -> u128 { (r as u128).saturating_pow(p) };
    while r > 1 && pow(r - 1) >= n as u128 {
        r -= 1;
    }
    while pow(r) < n as u128 {
        r += 1;
    }
    r
}

/// Decomposition of the symbols `n >= cut` by level into power sums.
fn pieces(levels: usize, leveled: bool, cut: u64) -> Vec<Piece> {
    if !leveled || levels == 1 {
        return vec![Piece { negative: false, p: 1, m0: cut, level: 1 }];
    }
    let mut out = vec![Piece { negative: false, p: 1, m0: cut, level: 1 }];
    // level 1 excludes the squares j^2 with j >= 2
    out.push(Piece { negative: true, p: 2, m0: iroot_ceil(cut, 2).max(2), level: 1 });
    for i in 2..=levels {
        let p = 1u32 << (i - 1);
        let r0 = iroot_ceil(cut, p).max(2);
        out.push(Piece { negative: false, p, m0: r0, level: i });
        if i < levels {
            out.push(Piece { negative: true, p: 2 * p, m0: iroot_ceil(r0, 2).max(2), level: i });
        }
    }
    out
}

/// Exact convergence verdict from the symbolic tails.
pub fn verdict(spec: &SeriesSpec) -> Result<Convergence> {
    let Some(_) = spec.tail_start()? else {
        return Ok(Convergence::Converges);
    };
    let levels = spec.levels();
    let mut all = Convergence::Converges;
    for pc in pieces(levels, spec.leveled(), 2).iter().filter(|p| !p.negative) {
        let forms = spec.forms(pc.level);
        let (s, b, c, e) = exponents(&forms, pc.p);
        match bertrand(s, b, c, e) {
            Convergence::Diverges => return Ok(Convergence::Diverges),
            Convergence::Borderline => all = Convergence::Borderline,
            Convergence::Converges => {}
        }
    }
    Ok(all)
}

/// Point values of the summand's log-structure at `v = ln m`.
struct PointState {
    e: Interval,
    /// `e(v) − (−σ)·v`, formed without cancellation.
    e_rel: Interval,
    de: Interval,
}

/// Per-form quantities at one value of `v`.
#[derive(Clone, Copy)]
struct FormAt {
    lam: Interval,
    l1: Interval,
    u1: Interval,
    l2: Interval,
    u2: Interval,
    l3: Interval,
    vu1: Interval,
    psi: Interval,
    epv: Interval,
    /// `ln(1 + k e^{-pv})`
    sp: Interval,
}

fn form_at(f: &WForm, p: u32, v: Interval) -> Option<FormAt> {
    let pv = v * p as f64;
    let l1 = Interval::logaddexp(pv, f.ln_k);
    let lam = if f.ln_k.hi == f64::NEG_INFINITY {
        Interval::ONE
    } else {
        (pv - f.ln_k).logistic()
    };
    let one_minus = if f.ln_k.hi == f64::NEG_INFINITY {
        Interval::ZERO
    } else {
        (f.ln_k - pv).logistic()
    };
    let (u1, l2, u2, l3, vu1) = if f.needs_l2() {
        if l1.lo <= 0.0 {
            return None;
        }
        let u1 = l1.recip();
        let l2 = l1.ln();
        let (u2, l3) = if f.needs_l3() {
            if l2.lo <= 0.0 {
                return None;
            }
            (l2.recip(), l2.ln())
        } else {
            (Interval::ZERO, Interval::ZERO)
        };
        (u1, l2, u2, l3, v * u1)
    } else {
        (Interval::ZERO, Interval::ZERO, Interval::ZERO, Interval::ZERO, Interval::ZERO)
    };
    let epv = if f.we != Interval::ZERO { pv.exp() } else { Interval::ZERO };
    let sp = if f.ln_k.hi == f64::NEG_INFINITY {
        Interval::ZERO
    } else {
        let sp = Interval::logaddexp(Interval::ZERO, f.ln_k - pv);
        Interval::new(sp.lo.max(0.0), sp.hi)
    };
    Some(FormAt { lam, l1, u1, l2, u2, l3, vu1, psi: v * one_minus, epv, sp })
}

/// Limit values as `v → ∞`.
fn form_at_infinity(f: &WForm, p: u32) -> FormAt {
    let inf = Interval::point(f64::INFINITY);
    FormAt {
        lam: Interval::ONE,
        l1: inf,
        u1: Interval::ZERO,
        l2: if f.needs_l2() { inf } else { Interval::ZERO },
        u2: Interval::ZERO,
        l3: if f.needs_l3() { inf } else { Interval::ZERO },
        vu1: if f.needs_l2() { Interval::point(1.0 / p as f64).hull(Interval::point(1.0) / Interval::point(p as f64)) } else { Interval::ZERO },
        psi: Interval::ZERO,
        epv: if f.we != Interval::ZERO { inf } else { Interval::ZERO },
        sp: Interval::ZERO,
    }
}

fn point_state(forms: &[WForm], p: u32, v: Interval) -> Option<PointState> {
    let mut e = Interval::ZERO;
    let mut e_rel = Interval::ZERO;
    let mut de = Interval::ZERO;
    let pf = p as f64;
    for f in forms {
        let s = form_at(f, p, v)?;
        e = e + f.wd + f.wa * s.l1;
        e_rel = e_rel + f.wd + f.wa * s.sp;
        de = de + f.wa * s.lam * pf;
        if f.wb != Interval::ZERO {
            e_rel = e_rel + f.wb * s.l2;
            e = e + f.wb * s.l2;
            de = de + f.wb * s.lam * s.u1 * pf;
        }
        if f.wc != Interval::ZERO {
            e_rel = e_rel + f.wc * s.l3;
            e = e + f.wc * s.l3;
            de = de + f.wc * s.lam * s.u1 * s.u2 * pf;
        }
        if f.we != Interval::ZERO {
            e_rel = e_rel + f.we * s.epv;
            e = e + f.we * s.epv;
            de = de + f.we * s.epv * pf;
        }
    }
    Some(PointState { e, e_rel, de })
}

/// Derivative enclosures over a segment of `v`.
struct SegState {
    /// `e'(v)`
    de: Interval,
    /// `e''(v)`
    dde: Interval,
    /// Bounded part of `v·(1 + e'(v))` excluding `v·(1 − σ')`.
    g1_rest: Option<Interval>,
}

fn seg_state(forms: &[WForm], p: u32, va: Interval, vb: Option<Interval>) -> Option<SegState> {
    let pf = p as f64;
    let mut de = Interval::ZERO;
    let mut dde = Interval::ZERO;
    let mut rest = Some(Interval::ZERO);
    for f in forms {
        let a = form_at(f, p, va)?;
        let b = match vb {
            Some(vb) => form_at(f, p, vb)?,
            None => form_at_infinity(f, p),
        };
        let lam = Interval::new(a.lam.lo, b.lam.hi);
        let oml = Interval::new((Interval::ONE - b.lam).lo.max(0.0), (Interval::ONE - a.lam).hi);
        let u1 = Interval::new(b.u1.lo, a.u1.hi);
        let u2 = Interval::new(b.u2.lo, a.u2.hi);
        let vu1 = Interval::new(a.vu1.lo, b.vu1.hi);
        let epv = Interval::new(a.epv.lo, b.epv.hi);
        let _ = (a.l1, a.l2, a.l3, b.l1, b.l2, b.l3);

        let l1p = lam * pf;
        let l1pp = lam * oml * (pf * pf);
        de = de + f.wa * l1p;
        dde = dde + f.wa * l1pp;
        if f.needs_l2() {
            let l2p = l1p * u1;
            let l2pp = l1pp * u1 - l2p.sqr();
            if f.wb != Interval::ZERO {
                de = de + f.wb * l2p;
                dde = dde + f.wb * l2pp;
            }
            if f.wc != Interval::ZERO {
                let l3p = l2p * u2;
                let l3pp = l2pp * u2 - l3p.sqr();
                de = de + f.wc * l3p;
                dde = dde + f.wc * l3pp;
            }
        }
        if f.we != Interval::ZERO {
            de = de + f.we * epv * pf;
            dde = dde + f.we * epv * (pf * pf);
            rest = None;
        }
        if let Some(r) = rest {
            // ψ = v(1 − λ) decreases once e^{pv}(pv − 1) >= k
            let psi = if f.wa == Interval::ZERO || f.ln_k.hi == f64::NEG_INFINITY {
                Some(Interval::ZERO)
            } else {
                let pva = va.lo * pf;
                let decreasing = pva > 1.0 && (pva + (pva - 1.0).ln()) > f.ln_k.hi + 1e-9;
                if decreasing {
                    Some(Interval::new(b.psi.lo.max(0.0), a.psi.hi))
                } else {
                    vb.map(|vb| Interval::new(va.lo, vb.hi) * oml)
                }
            };
            rest = psi.map(|psi| {
                let mut r = r + (-f.wa * pf) * psi;
                if f.wb != Interval::ZERO {
                    r = r + f.wb * lam * vu1 * pf;
                }
                if f.wc != Interval::ZERO {
                    r = r + f.wc * lam * vu1 * u2 * pf;
                }
                r
            });
        }
    }
    Some(SegState { de, dde, g1_rest: rest })
}

/// Lower (`upper == false`) or upper bound of `ln ∫_0^Δ e^{g x} dx`.
fn ln_e(g: f64, delta: f64, upper: bool) -> f64 {
    let pick = |r: Interval| if upper { r.hi } else { r.lo };
    if g == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if g.is_nan() || g == f64::INFINITY {
        return if upper { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    if delta == f64::INFINITY {
        if g >= 0.0 {
            return if upper { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        return pick(-(Interval::point(-g).ln()));
    }
    if g == 0.0 {
        return pick(Interval::point(delta).ln());
    }
    let gd = Interval::point(g) * Interval::point(delta);
    if g > 0.0 {
        let t = -((-gd).exp_m1());
        if t.lo <= 0.0 && !upper {
            return f64::NEG_INFINITY;
        }
        let t = Interval::new(t.lo.max(f64::MIN_POSITIVE), t.hi);
        pick(gd + t.ln() - Interval::point(g).ln())
    } else {
        let t = -(gd.exp_m1());
        if t.lo <= 0.0 && !upper {
            return f64::NEG_INFINITY;
        }
        let t = Interval::new(t.lo.max(f64::MIN_POSITIVE), t.hi);
        pick(t.ln() - Interval::point(-g).ln())
    }
}

fn mass(h: Interval, g: Interval, delta_lo: f64, delta_hi: f64) -> Interval {
    let lo = ln_e(g.lo, delta_lo, false);
    let hi = ln_e(g.hi, delta_hi, true);
    let lo = if lo == f64::NEG_INFINITY { 0.0 } else { (Interval::point(h.lo) + Interval::point(lo)).exp().lo };
    let hi = if hi == f64::INFINITY { f64::INFINITY } else { (Interval::point(h.hi) + Interval::point(hi)).exp().hi };
    Interval::new(lo, hi.max(lo))
}

enum PieceOutcome {
    Done(Interval),
    /// Summand not certified decreasing beyond `v`.
    NotMonotone(f64),
}

struct Budget {
    eta: f64,
    floor: f64,
    segments: usize,
}

/// Enclosure of `Σ_{m >= m0} F(m^p)` for the given weighted forms.
fn sum_piece(forms: &[WForm], p: u32, m0: u64, budget: &mut Budget) -> Result<PieceOutcome> {
    let m0f = m0.max(1) as f64;
    let v0 = Interval::point(m0f).ln();
    let lin = forms.iter().any(|f| f.we != Interval::ZERO);
    let (sigma, ..) = exponents(forms, p);
    let one_minus_sigma = Interval::ONE - sigma;

    let ps = point_state(forms, p, v0).ok_or_else(|| Error::Inconclusive("tail undefined at cutoff".into()))?;
    let f_m = ps.e.exp();
    let df_m = f_m * ps.de / Interval::point(m0f);

    let mut acc = Interval::ZERO;
    let mut convex = true;
    let mut level = 0u8;
    let mut x = v0.lo;
    let mut step = 0.5f64;

    // sliver between v0.lo and ln m0 only affects the lower bound
    let sliver = {
        let h = ps.e + v0;
        (h + Interval::point(v0.width().max(f64::MIN_POSITIVE)).ln() + 1.0).exp().hi
    };

    loop {
        budget.segments += 1;
        if budget.segments > MAX_SEGMENTS {
            return inconclusive("segment budget exhausted in tail enclosure");
        }
        let (va, h) = if level == 0 {
            let va = Interval::point(x);
            let st = point_state(forms, p, va).ok_or_else(|| Error::Inconclusive("tail undefined".into()))?;
            (va, st.e_rel + one_minus_sigma * va)
        } else {
            let w = Interval::point(x);
            let va = w.exp();
            let st = point_state(forms, p, va).ok_or_else(|| Error::Inconclusive("tail undefined".into()))?;
            (va, st.e_rel + one_minus_sigma * va + w)
        };

        // try to close with the infinite segment
        if let Some(st) = seg_state(forms, p, va, None) {
            let g = if level == 0 {
                Some(st.de + 1.0)
            } else {
                st.g1_rest.map(|r| {
                    let vs = if one_minus_sigma == Interval::ZERO {
                        Interval::ZERO
                    } else {
                        one_minus_sigma * Interval::new(va.lo, f64::INFINITY)
                    };
                    r + vs + 1.0
                })
            };
            if let Some(g) = g {
                if g.hi < 0.0 && st.de.hi < 0.0 {
                    let m = mass(h, g, f64::INFINITY, f64::INFINITY);
                    if m.width() <= budget.eta * m.hi + budget.floor {
                        if (st.dde + st.de * (st.de - 1.0)).lo < 0.0 {
                            convex = false;
                        }
                        acc = acc + m;
                        break;
                    }
                }
            }
        }

        if level == 0
            && !lin
            && x >= LEVEL1_SWITCH
            && forms.iter().all(|f| x * p as f64 >= f.ln_k.hi + 40.0)
        {
            level = 1;
            x = Interval::point(x).ln().lo;
            step = 0.25;
            continue;
        }

        let xb = x + step;
        let (vb, delta_lo, delta_hi) = if level == 0 {
            (Interval::point(xb), super_down(xb - x), super_up(xb - x))
        } else {
            (Interval::point(xb).exp(), super_down(xb - x), super_up(xb - x))
        };
        let Some(st) = seg_state(forms, p, va, Some(vb)) else {
            return inconclusive("tail undefined on segment");
        };
        if st.de.hi > 0.0 {
            return Ok(PieceOutcome::NotMonotone(vb.hi));
        }
        let g = if level == 0 {
            st.de + 1.0
        } else {
            match st.g1_rest {
                Some(r) => {
                    let vs = if one_minus_sigma == Interval::ZERO {
                        Interval::ZERO
                    } else {
                        one_minus_sigma * Interval::new(va.lo, vb.hi)
                    };
                    r + vs + 1.0
                }
                None => (Interval::new(va.lo, vb.hi) * (st.de + 1.0)) + 1.0,
            }
        };
        let m = mass(h, g, delta_lo, delta_hi);
        let min_step = 1e-10 * (1.0 + x.abs());
        if m.width() <= budget.eta * m.hi + budget.floor || step <= min_step {
            if (st.dde + st.de * (st.de - 1.0)).lo < 0.0 {
                convex = false;
            }
            acc = acc + m;
            x = xb;
            step *= 2.0;
        } else {
            step *= 0.5;
        }
    }

    let acc = Interval::new((acc.lo - sliver).max(0.0), acc.hi);
    let total = if convex {
        acc + f_m * 0.5 + Interval::new(0.0, (df_m.lo.abs().max(df_m.hi.abs()) * 0.25).next_up())
    } else {
        acc + Interval::new(0.0, f_m.hi)
    };
    Ok(PieceOutcome::Done(total))
}

fn super_down(x: f64) -> f64 {
    crate::interval::down(x)
}
fn super_up(x: f64) -> f64 {
    crate::interval::up(x)
}

/// Best-effort enclosure targeting width `abs_tol`; may come back wider.
pub fn enclose(spec: &SeriesSpec, abs_tol: f64) -> Result<ExtendedReal> {
    if !(abs_tol > 0.0) {
        return domain("abs_tol must be positive");
    }
    match verdict(spec)? {
        Convergence::Diverges => return Ok(ExtendedReal::Infinite),
        Convergence::Borderline => {
            return inconclusive("tail exponents too close to the critical line to decide")
        }
        Convergence::Converges => {}
    }
    let tail_start = spec.tail_start()?;
    let max_skip = spec.skip.iter().copied().max().map(|s| s + 1).unwrap_or(0);
    let mut cut = match tail_start {
        None => {
            // finite support: every potential with positive weight and no tail ends at its N0
            let end = spec
                .terms
                .iter()
                .filter(|(_, p)| p.tail.is_none())
                .map(|(_, p)| p.n0)
                .min()
                .unwrap_or(spec.start);
            let mut s = Interval::ZERO;
            for n in spec.start..end.max(spec.start) {
                if !spec.skip.contains(&n) {
                    s = s + spec.term(n)?;
                }
            }
            return Ok(ExtendedReal::Interval(s));
        }
        Some(n0) => n0.max(spec.start).max(max_skip).max(spec.start + MIN_DIRECT),
    };

    // push the cut until the end correction |F'(cut)|/4 is well below the target
    while cut < MAX_DIRECT {
        let (a, b) = match (spec.term(cut), spec.term(cut + 1)) {
            (Ok(a), Ok(b)) => (a.mid(), b.mid()),
            _ => break,
        };
        if !((a - b).abs() * 0.25 > abs_tol / 8.0) {
            break;
        }
        cut = cut.saturating_mul(2).min(MAX_DIRECT);
    }
    let mut direct = Interval::ZERO;
    let mut summed_to = spec.start;
    let mut attempts = 0;
    let mut eta = (abs_tol / 4.0).min(1e-2);
    if eta < 1e-3 {
        // the per-segment budget is relative, so size it against a coarse tail mass
        if let Ok(TailPass::Done(_, mass)) = tail_pass(spec, cut, 1e-2, abs_tol) {
            if mass > 0.0 && mass.is_finite() {
                eta = (abs_tol / (4.0 * mass)).min(1e-2);
            }
        }
    }
    loop {
        attempts += 1;
        for n in summed_to..cut {
            if !spec.skip.contains(&n) {
                direct = direct + spec.term(n)?;
            }
        }
        summed_to = cut;
        let (tail, gross) = match tail_pass(spec, cut, eta, abs_tol)? {
            TailPass::Done(t, g) => (t, g),
            TailPass::Restart(n) => {
                let next = n.max(cut.saturating_mul(4));
                if next > MAX_DIRECT {
                    return inconclusive(format!("summand not certified monotone below n = {next}"));
                }
                cut = next;
                continue;
            }
        };
        let total = direct + tail;
        let total = Interval::new(total.lo.max(direct.lo), total.hi);
        if total.width() <= abs_tol || attempts >= 6 {
            return Ok(ExtendedReal::Interval(total));
        }
        let scale = gross.max(abs_tol);
        eta = (abs_tol / (4.0 * scale)).min(eta / 4.0);
        if cut < MAX_DIRECT {
            cut = cut.saturating_mul(16).min(MAX_DIRECT);
        }
    }
}

enum TailPass {
    /// Net tail and the sum of the piece masses.
    Done(Interval, f64),
    Restart(u64),
}

fn tail_pass(spec: &SeriesSpec, cut: u64, eta: f64, abs_tol: f64) -> Result<TailPass> {
    let mut budget = Budget { eta, floor: abs_tol * 1e-8, segments: 0 };
    let mut total = Interval::ZERO;
    let mut gross = 0.0;
    for pc in pieces(spec.levels(), spec.leveled(), cut) {
        let forms = spec.forms(pc.level);
        match sum_piece(&forms, pc.p, pc.m0, &mut budget)? {
            PieceOutcome::Done(s) => {
                gross += s.hi;
                total = if pc.negative { total - s } else { total + s };
            }
            PieceOutcome::NotMonotone(v) => {
                let n = (v * pc.p as f64).exp();
                return Ok(TailPass::Restart(if n.is_finite() { (n as u64).saturating_add(1) } else { u64::MAX }));
            }
        }
    }
    Ok(TailPass::Done(total, gross))
}

/// Enclosure of `Σ_{r >= r0} exp(φ(r^p))` for a single tail form.
pub fn sum_over_powers(form: &TailForm, p: u32, r0: u64, abs_tol: f64) -> Result<ExtendedReal> {
    if p == 0 || r0 == 0 {
        return domain("power and start must be positive");
    }
    let forms = vec![WForm::new(1.0, form)];
    let (s, b, c, e) = exponents(&forms, p);
    match bertrand(s, b, c, e) {
        Convergence::Diverges => return Ok(ExtendedReal::Infinite),
        Convergence::Borderline => return inconclusive("power sum on the critical line"),
        Convergence::Converges => {}
    }
    let mut cut = r0.max(MIN_DIRECT);
    let mut direct = Interval::ZERO;
    let mut from = r0;
    let mut eta = (abs_tol / 4.0).min(1e-2);
    for _ in 0..6 {
        for r in from..cut {
            let v = Interval::point(r as f64).ln();
            let st = point_state(&forms, p, v)
                .ok_or_else(|| Error::Inconclusive(format!("form undefined at {r}^{p}")))?;
            direct = direct + st.e.exp();
        }
        from = cut;
        let mut budget = Budget { eta, floor: abs_tol * 1e-8, segments: 0 };
        match sum_piece(&forms, p, cut, &mut budget)? {
            PieceOutcome::Done(t) => {
                let total = direct + t;
                if total.width() <= abs_tol {
                    return Ok(ExtendedReal::Interval(total));
                }
                eta = (abs_tol / (4.0 * total.hi.max(1.0))).min(eta / 4.0);
                cut = cut.saturating_mul(16).min(MAX_DIRECT).max(cut);
            }
            PieceOutcome::NotMonotone(v) => {
                let n = v.exp();
                let next = if n.is_finite() { (n as u64).saturating_add(1) } else { u64::MAX };
                let next = next.max(cut.saturating_mul(4));
                if next > MAX_DIRECT {
                    return inconclusive(format!("power sum not monotone below r = {next}"));
                }
                cut = next;
            }
        }
    }
    inconclusive(format!("power sum wider than {abs_tol:e}"))
}

/// Certified sum with width at most `abs_tol`, or `Infinite` on certified
/// divergence.
pub fn sum_series(spec: &SeriesSpec, abs_tol: f64) -> Result<ExtendedReal> {
    let r = enclose(spec, abs_tol)?;
    if let ExtendedReal::Interval(i) = r {
        if i.width() > abs_tol {
            return inconclusive(format!("enclosure {i} wider than {abs_tol:e}"));
        }
    }
    Ok(r)
}

/// First tolerance of the sign ladders: any enclosure at all.
pub const COARSE_TOL: f64 = 1e300;
/// Largest tolerance after the first pass.
pub const LADDER_TOL: f64 = 1e-2;

/// Comparison of a series with 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SumSign {
    /// Sum exceeds 1 (possibly infinite).
    Above { infinite: bool },
    /// Sum is at most 1.
    AtMost,
    Undecided(Interval),
}

/// Decide `Σ > 1` versus `Σ <= 1`, tightening the enclosure down to `min_tol`.
pub fn compare_to_one(spec: &SeriesSpec, min_tol: f64) -> Result<SumSign> {
    match verdict(spec)? {
        Convergence::Diverges => return Ok(SumSign::Above { infinite: true }),
        Convergence::Borderline => return Ok(SumSign::Undecided(Interval::ENTIRE)),
        Convergence::Converges => {}
    }
    // start coarse: a sum far from 1 is decided by a crude enclosure
    let mut tol = COARSE_TOL;
    loop {
        let t = tol.max(min_tol);
        match enclose(spec, t)? {
            ExtendedReal::Infinite => return Ok(SumSign::Above { infinite: true }),
            ExtendedReal::Interval(s) => {
                if s.lo > 1.0 {
                    return Ok(SumSign::Above { infinite: false });
                }
                if s.hi <= 1.0 {
                    return Ok(SumSign::AtMost);
                }
                if t <= min_tol {
                    return Ok(SumSign::Undecided(s));
                }
                // next tolerance sized to the distance from 1
                let gap = (s.mid() - 1.0).abs();
                tol = (gap / 4.0).min(t / 16.0).min(s.width() / 4.0).min(LADDER_TOL);
            }
        }
    }
}

/// Bisection for `inf{s : Σ converges}` over a family decreasing in `s`.
pub fn convergence_abscissa<'a, F>(family: F, bracket: (f64, f64), tol: f64) -> Result<Interval>
where
    F: Fn(f64) -> SeriesSpec<'a>,
{
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !(tol > 0.0) {
        return domain("bracket must satisfy lo < hi and tol > 0");
    }
    let status = |s: f64| verdict(&family(s));
    let sl = status(lo)?;
    let sh = status(hi)?;
    if sl == sh {
        return Err(Error::Bracket(format!("both ends report {sl:?}")));
    }
    if sl != Convergence::Diverges || sh != Convergence::Converges {
        if sl == Convergence::Borderline {
            return Ok(Interval::new(lo - tol / 2.0, lo + tol / 2.0));
        }
        if sh == Convergence::Borderline {
            return Ok(Interval::new(hi - tol / 2.0, hi + tol / 2.0));
        }
        return Err(Error::Bracket("family converges below and diverges above".into()));
    }
    while hi - lo > tol {
        let mid = lo + 0.5 * (hi - lo);
        match status(mid)? {
            Convergence::Diverges => lo = mid,
            Convergence::Converges => hi = mid,
            Convergence::Borderline => {
                // σ' equals 1 up to rounding, so the abscissa sits at mid
                let r = 1e-12 * (1.0 + mid.abs());
                return Ok(Interval::new((mid - r).max(lo), (mid + r).min(hi)));
            }
        }
    }
    Ok(Interval::new(lo, hi))
}

/// Verdict with one extra logarithmic power of `τ` multiplied in, used for
/// the integrability series `Σ τ e^{φ}`.
pub fn verdict_times_roof(spec: &SeriesSpec, roof: &TailPotential) -> Result<Convergence> {
    let Some(_) = spec.tail_start()? else {
        return Ok(Convergence::Converges);
    };
    let levels = spec.levels().max(roof.levels());
    let mut all = Convergence::Converges;
    for pc in pieces(levels, spec.leveled(), 2).iter().filter(|p| !p.negative) {
        let forms = spec.forms(pc.level);
        let (s, mut b, mut c, e) = exponents(&forms, pc.p);
        let Some(t) = roof.form(pc.level) else {
            continue;
        };
        if t.e != 0.0 {
            return inconclusive("roof with linear growth");
        }
        if t.a > 0.0 {
            b = b + 1.0;
        } else if t.b > 0.0 {
            c = c + 1.0;
        }
        match bertrand(s, b, c, e) {
            Convergence::Diverges => return Ok(Convergence::Diverges),
            Convergence::Borderline => all = Convergence::Borderline,
            Convergence::Converges => {}
        }
    }
    Ok(all)
}

#[allow(dead_code)]
fn level_of(n: u64, levels: usize) -> usize {
    (count_level(n) as usize).min(levels)
}
