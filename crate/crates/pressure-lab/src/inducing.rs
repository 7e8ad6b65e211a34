//! First-return inducing on a cylinder `[a]`.
//!
//! Induced words are `a i_1 … i_m` with every `i_j ≠ a` and `i_m → a`
//! allowed. The induced shift is full on those words, so its pressure is
//! `log Z` with `Z = Σ_m M_m`, where `M_m` is the total weight of the words of
//! length `m`.
//!
//! `M_m` is computed from an excursion matrix: block symbols other than `a`
//! appear individually, and every symbol past the exception block is folded
//! into one generic state `G` of weight `R_G = Σ_{n > span} e^{ψ_n}`. Generic
//! symbols connect to everything, so the folding is exact. Lengths past
//! `max_len` are covered by `‖Q^K‖_∞ < 1` for the excursion matrix `Q`.

use crate::error::{domain, inconclusive, Result};
use crate::interval::{ExtendedReal, Interval};
use crate::potential::TailPotential;
use crate::pressure::Combination;
use crate::series::{self, Convergence, SeriesSpec, SumSign};
use crate::shift::{CylinderWord, Rule, SymbolicShift, MAX_WORDS};
use crate::suspension::{s_infinity, value_from_sign, FlowSystem, SuspensionValue};
use rayon::prelude::*;

pub const DEFAULT_MAX_LEN: usize = 30;

/// First-return system with its words enumerated up to a length and a symbol bound.
#[derive(Clone, Debug)]
pub struct InducedSystem {
    pub base: SymbolicShift,
    pub return_symbol: u64,
    pub words: Vec<CylinderWord>,
}

impl InducedSystem {
    pub fn new(base: SymbolicShift, a: u64, max_len: usize, max_symbol: u64) -> Result<Self> {
        let words = induced_alphabet(&base, a, max_len, max_symbol)?;
        Ok(InducedSystem { base, return_symbol: a, words })
    }

    /// `r_a` on the cylinder of a word.
    pub fn return_time(word: &[u64]) -> usize {
        word.len()
    }

    pub fn as_shift(&self) -> Result<SymbolicShift> {
        SymbolicShift::induced(self.base.clone(), self.return_symbol)
    }
}

fn check_base(base: &SymbolicShift, a: u64) -> Result<()> {
    base.validate()?;
    if let Rule::InducedWords { .. } = base.rule {
        return domain("inducing an induced shift is not supported");
    }
    if a < base.alphabet_offset {
        return domain(format!("return symbol {a} below offset {}", base.alphabet_offset));
    }
    Ok(())
}

/// First-return words at `a` of length at most `max_len` over symbols up to
/// `max_symbol`, in lexicographic order.
pub fn induced_alphabet(base: &SymbolicShift, a: u64, max_len: usize, max_symbol: u64) -> Result<Vec<CylinderWord>> {
    check_base(base, a)?;
    if max_len == 0 {
        return Ok(Vec::new());
    }
    let syms: Vec<u64> = (base.alphabet_offset..=max_symbol.max(base.alphabet_offset)).filter(|&n| n != a).collect();
    let mut out = Vec::new();
    if base.allows(a, a) {
        out.push(vec![a]);
    }
    if max_len < 2 {
        return Ok(out);
    }
    let firsts: Vec<u64> = syms.iter().copied().filter(|&j| base.allows(a, j)).collect();
    let branches: Vec<Result<Vec<CylinderWord>>> = firsts
        .par_iter()
        .map(|&j| {
            let mut acc = Vec::new();
            let mut word = vec![a, j];
            extend(base, a, &syms, max_len, &mut word, &mut acc)?;
            Ok(acc)
        })
        .collect();
    for b in branches {
        out.extend(b?);
        if out.len() > MAX_WORDS {
            return inconclusive(format!("more than {MAX_WORDS} induced words"));
        }
    }
    Ok(out)
}

fn extend(
    base: &SymbolicShift,
    a: u64,
    syms: &[u64],
    max_len: usize,
    word: &mut Vec<u64>,
    acc: &mut Vec<CylinderWord>,
) -> Result<()> {
    let last = *word.last().expect("nonempty");
    if base.allows(last, a) {
        acc.push(word.clone());
        if acc.len() > MAX_WORDS {
            return inconclusive(format!("more than {MAX_WORDS} induced words"));
        }
    }
    if word.len() >= max_len {
        return Ok(());
    }
    for &k in syms {
        if base.allows(last, k) {
            word.push(k);
            extend(base, a, syms, max_len, word, acc)?;
            word.pop();
        }
    }
    Ok(())
}

/// `φ̄(word) = Σ φ(symbol)`.
pub fn induced_potential(phi: &TailPotential, word: &[u64]) -> Interval {
    word.iter().fold(Interval::ZERO, |s, &n| s + phi.eval(n))
}

/// Per-length masses and the tail bound for one enclosure of `R_G`.
#[derive(Clone, Debug)]
pub struct InducedSum {
    /// `M_1, …, M_L`.
    pub masses: Vec<Interval>,
    /// Upper bound for `Σ_{m > L} M_m`; infinite when it diverges or no contraction was certified.
    pub tail: f64,
    pub total: Interval,
}

struct Excursion {
    /// weight of each non-return state; the last one is `G`
    w: Vec<Interval>,
    /// `A(i, j)` between states
    allow: Vec<Vec<bool>>,
    /// `A(a, j)` and `A(j, a)`
    from_a: Vec<bool>,
    to_a: Vec<bool>,
    wa: Interval,
    loop_a: bool,
}

fn excursion(base: &SymbolicShift, a: u64, terms: &Combination, rg: Interval) -> Result<Excursion> {
    let span = base.block_span().max(a);
    let spec = SeriesSpec::new(terms.to_vec(), 0);
    let mut syms = Vec::new();
    let mut w = Vec::new();
    for n in base.alphabet_offset..=span {
        if n == a {
            continue;
        }
        let e = spec.term(n)?;
        if e.hi > 0.0 {
            syms.push(n);
            w.push(e);
        }
    }
    w.push(rg);
    let m = w.len();
    let g = m - 1;
    let allow = (0..m)
        .map(|i| (0..m).map(|j| i == g || j == g || base.allows(syms[i], syms[j])).collect())
        .collect();
    let from_a = (0..m).map(|j| j == g || base.allows(a, syms[j])).collect();
    let to_a = (0..m).map(|j| j == g || base.allows(syms[j], a)).collect();
    Ok(Excursion { w, allow, from_a, to_a, wa: spec.term(a)?, loop_a: base.allows(a, a) })
}

fn mat_mul(x: &[Vec<Interval>], y: &[Vec<Interval>]) -> Vec<Vec<Interval>> {
    let m = x.len();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| (0..m).fold(Interval::ZERO, |s, k| s + x[i][k] * y[k][j]))
                .collect()
        })
        .collect()
}

fn inf_norm_hi(x: &[Vec<Interval>]) -> f64 {
    x.iter()
        .map(|row| row.iter().fold(Interval::ZERO, |s, v| s + *v).hi)
        .fold(0.0, f64::max)
}

impl Excursion {
    fn sum(&self, max_len: usize) -> InducedSum {
        let m = self.w.len();
        let mut masses = Vec::with_capacity(max_len);
        masses.push(if self.loop_a { self.wa } else { Interval::ZERO });
        // x_j: weight of words a i_1 … i_k ending in state j
        let mut x: Vec<Interval> = (0..m)
            .map(|j| if self.from_a[j] { self.wa * self.w[j] } else { Interval::ZERO })
            .collect();
        for _ in 1..max_len {
            let close = (0..m).filter(|&j| self.to_a[j]).fold(Interval::ZERO, |s, j| s + x[j]);
            masses.push(close);
            x = (0..m)
                .map(|k| {
                    let s = (0..m).filter(|&j| self.allow[j][k]).fold(Interval::ZERO, |s, j| s + x[j]);
                    s * self.w[k]
                })
                .collect();
        }
        let partial = masses.iter().fold(Interval::ZERO, |s, v| s + *v);
        let tail = self.tail(&x);
        let total = Interval::point(partial.lo) + Interval::point(tail.lo);
        let total = Interval::new(total.lo.max(partial.lo), (Interval::point(partial.hi) + Interval::point(tail.hi)).hi);
        InducedSum { masses, tail: tail.hi, total }
    }

    fn q(&self) -> Vec<Vec<Interval>> {
        let m = self.w.len();
        (0..m)
            .map(|i| (0..m).map(|j| if self.allow[i][j] { self.w[j] } else { Interval::ZERO }).collect())
            .collect()
    }

    /// `Σ_{m > L} M_m = x · y` with `y = Σ_{k >= 0} Q^k c`, where `c_j = A(j, a)`.
    /// `y` comes from doubling `S_{2K} = S_K + Q^K S_K` until `‖Q^K‖_∞` is negligible,
    /// after which `y ∈ S_K c + [0, ‖Q^K‖ · ‖S_K c‖ / (1 − ‖Q^K‖)]`.
    fn tail(&self, x: &[Interval]) -> Interval {
        let m = self.w.len();
        if x.iter().all(|v| v.hi == 0.0) {
            return Interval::ZERO;
        }
        let q = self.q();
        let mut s: Vec<Vec<Interval>> =
            (0..m).map(|i| (0..m).map(|j| if i == j { Interval::ONE } else { Interval::ZERO }).collect()).collect();
        let mut p = q.clone();
        let mut contracted = None;
        for _ in 0..72 {
            let n = inf_norm_hi(&p);
            if !n.is_finite() {
                break;
            }
            if n <= 0.5 {
                // squaring drives the slack below rounding within a few more steps
                let stalled = contracted.is_some_and(|c: f64| n >= c);
                contracted = Some(n);
                if n <= 1e-17 || stalled {
                    break;
                }
            }
            let ps = mat_mul(&p, &s);
            for i in 0..m {
                for j in 0..m {
                    s[i][j] = s[i][j] + ps[i][j];
                }
            }
            p = mat_mul(&p, &p);
        }
        let Some(n) = contracted else {
            if self.w[m - 1].lo > 0.0 && perron_lower(&q) >= 1.0 {
                // irreducible through the generic state and ρ(Q) >= 1
                return Interval::new(f64::INFINITY, f64::INFINITY);
            }
            return Interval::new(0.0, f64::INFINITY);
        };
        let sc: Vec<Interval> = (0..m)
            .map(|i| (0..m).filter(|&j| self.to_a[j]).fold(Interval::ZERO, |acc, j| acc + s[i][j]))
            .collect();
        let norm_sc = sc.iter().map(|v| v.hi).fold(0.0, f64::max);
        let slack = (Interval::point(n) * Interval::point(norm_sc) / (Interval::ONE - Interval::point(n))).hi;
        (0..m).fold(Interval::ZERO, |acc, i| acc + x[i] * Interval::new(sc[i].lo, up_add(sc[i].hi, slack)))
    }
}

fn up_add(a: f64, b: f64) -> f64 {
    (Interval::point(a) + Interval::point(b)).hi
}

/// Collatz–Wielandt lower bound `min_i (Qv)_i / v_i` for a positive vector from power iteration.
fn perron_lower(q: &[Vec<Interval>]) -> f64 {
    let m = q.len();
    let mut v = vec![1.0f64; m];
    for _ in 0..2000 {
        let mv: Vec<f64> = (0..m).map(|i| (0..m).map(|j| q[i][j].mid() * v[j]).sum()).collect();
        let norm = mv.iter().copied().fold(0.0, f64::max);
        if !(norm > 0.0) || !norm.is_finite() {
            return 0.0;
        }
        v = mv.iter().map(|x| (x / norm).max(1e-300)).collect();
    }
    (0..m)
        .map(|i| {
            let s = (0..m).fold(Interval::ZERO, |acc, j| acc + q[i][j] * Interval::point(v[j]));
            (s / Interval::point(v[i])).lo
        })
        .fold(f64::INFINITY, f64::min)
}

/// Enclosure of `Z = Σ_{words} e^{ψ̄(word)}` with `R_G` enclosed to `abs_tol`.
pub fn induced_sum(base: &SymbolicShift, a: u64, terms: &Combination, max_len: usize, abs_tol: f64) -> Result<ExtendedReal> {
    check_base(base, a)?;
    let span = base.block_span().max(a);
    let tail = SeriesSpec::new(terms.to_vec(), span + 1);
    let rg = match series::enclose(&tail, abs_tol)? {
        ExtendedReal::Infinite => return Ok(ExtendedReal::Infinite),
        ExtendedReal::Interval(i) => i,
    };
    let ex = excursion(base, a, terms, rg)?;
    Ok(ExtendedReal::Interval(ex.sum(max_len).total))
}

/// Sign of the induced pressure `log Z`, which matches the sign of the base pressure.
pub fn induced_pressure_sign(
    base: &SymbolicShift,
    a: u64,
    terms: &Combination,
    max_len: usize,
    min_tol: f64,
) -> Result<SumSign> {
    check_base(base, a)?;
    if max_len == 0 {
        return domain("max_len must be positive");
    }
    let span = base.block_span().max(a);
    let spec = SeriesSpec::new(terms.to_vec(), 0);
    if spec.term(a)?.hi <= 0.0 {
        return domain(format!("return symbol {a} carries no weight"));
    }
    let tail = SeriesSpec::new(terms.to_vec(), span + 1);
    match series::verdict(&tail)? {
        Convergence::Diverges => return Ok(SumSign::Above { infinite: true }),
        Convergence::Borderline => return Ok(SumSign::Undecided(Interval::ENTIRE)),
        Convergence::Converges => {}
    }
    let mut tol = series::COARSE_TOL;
    loop {
        let t = tol.max(min_tol);
        let rg = match series::enclose(&tail, t / 8.0)? {
            ExtendedReal::Infinite => return Ok(SumSign::Above { infinite: true }),
            ExtendedReal::Interval(i) => i,
        };
        let z = excursion(base, a, terms, rg)?.sum(max_len).total;
        if z.lo > 1.0 {
            return Ok(SumSign::Above { infinite: false });
        }
        if z.hi <= 1.0 {
            return Ok(SumSign::AtMost);
        }
        let p = Interval::new(z.lo.max(f64::MIN_POSITIVE), z.hi).ln();
        if t <= min_tol {
            return Ok(SumSign::Undecided(p));
        }
        let gap = p.mid().abs();
        tol = if gap.is_finite() { (gap / 4.0).min(t / 16.0) } else { t / 16.0 }.min(rg.width() / 4.0).min(series::LADDER_TOL);
    }
}

/// `P_Φ(tg)` computed through the first-return system at `a`.
pub fn suspension_pressure_induced(
    system: &FlowSystem,
    a: u64,
    t: f64,
    tol: f64,
    max_len: usize,
) -> Result<SuspensionValue> {
    if !(tol > 0.0) || !t.is_finite() {
        return domain("need finite t and tol > 0");
    }
    let s_inf = s_infinity(system, tol)?;
    let mut out: Option<SuspensionValue> = None;
    for roof in system.roofs() {
        let sign = |s: f64| -> Result<SumSign> {
            let terms = [(t, &system.observable), (-s, roof)];
            match induced_pressure_sign(&system.shift, a, &terms, max_len, tol * 1e-3) {
                Err(crate::Error::Inconclusive(_)) => Ok(SumSign::Undecided(Interval::ENTIRE)),
                r => r,
            }
        };
        let v = value_from_sign(sign, s_inf, tol)?;
        out = Some(match out {
            None => v,
            Some(o) => SuspensionValue {
                value: o.value.hull(v.value),
                regime: if o.regime == v.regime { o.regime } else { crate::suspension::Regime::Boundary },
            },
        });
    }
    Ok(out.expect("at least one roof"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::TailForm;

    #[test]
    fn alphabet_full_three() {
        let f = SymbolicShift::full(0);
        let w = induced_alphabet(&f, 0, 2, 2).unwrap();
        assert_eq!(w, vec![vec![0], vec![0, 1], vec![0, 2]]);
        assert_eq!(induced_alphabet(&f, 0, 1, 2).unwrap(), vec![vec![0]]);
    }

    #[test]
    fn alphabet_geodesic_at_six() {
        let g = SymbolicShift::geodesic();
        let w = induced_alphabet(&g, 6, 2, 40).unwrap();
        let mut expect = vec![vec![6]];
        expect.extend((3..=40).filter(|&j| j != 6).map(|j| vec![6, j]));
        assert_eq!(w, expect);
    }

    #[test]
    fn potential_sums() {
        let tau = TailPotential::tail_only(TailForm::new(1.0, 0.0, 0.0, 0.0, 2.0));
        let v = induced_potential(&tau, &[0, 3]);
        assert!(v.contains(2f64.ln() + 5f64.ln()));
        let c = TailPotential::constant(0.3);
        assert!(induced_potential(&c, &[1, 2, 3, 4]).contains(1.2));
    }

    #[test]
    fn geometric_boundary() {
        let f = SymbolicShift::full(0);
        let tau = TailPotential::head_only(vec![Some(2f64.ln()); 2]);
        let at_one = induced_pressure_sign(&f, 0, &[(-1.0, &tau)], 30, 1e-9).unwrap();
        assert!(matches!(at_one, SumSign::Undecided(_)), "{at_one:?}");
        let above = induced_pressure_sign(&f, 0, &[(-(1.0 + 1e-6), &tau)], 30, 1e-9).unwrap();
        assert_eq!(above, SumSign::AtMost);
        let below = induced_pressure_sign(&f, 0, &[(-0.9, &tau)], 30, 1e-9).unwrap();
        assert!(matches!(below, SumSign::Above { .. }));
    }

    #[test]
    fn masses_match_enumeration() {
        let g = SymbolicShift::geodesic();
        // truncate the alphabet so enumeration and the matrix see the same symbols
        let head: Vec<Option<f64>> = (0..12).map(|n| if n < 3 { None } else { Some(-2.0 * (n as f64).ln()) }).collect();
        let trunc = TailPotential::head_only(head);
        let words = induced_alphabet(&g, 6, 3, 11).unwrap();
        let mut by_len = [Interval::ZERO; 3];
        for w in &words {
            by_len[w.len() - 1] = by_len[w.len() - 1] + induced_potential(&trunc, w).exp();
        }
        let spec = SeriesSpec::new(vec![(1.0, &trunc)], 7);
        let rg = series::enclose(&spec, 1e-12).unwrap().interval().unwrap();
        let s = excursion(&g, 6, &[(1.0, &trunc)], rg).unwrap().sum(3);
        for m in 0..3 {
            assert!((s.masses[m].mid() - by_len[m].mid()).abs() < 1e-12, "{m} {} {}", s.masses[m], by_len[m]);
        }
    }
}
