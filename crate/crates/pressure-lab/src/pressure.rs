//! Gurevich pressure of depth-one potentials.
//!
//! On the full shift the pressure is `log Σ e^{φ_n}`. On a finite-exception
//! shift every symbol past the exception block is generic: it may follow and
//! be followed by anything. Those symbols collapse into one aggregate state of
//! weight `R = Σ_{n >= N} e^{φ_n}`, and the pressure is the log of the Perron
//! root of the resulting finite matrix. The root is enclosed by
//! Collatz–Wielandt ratios evaluated in interval arithmetic.

use crate::error::{domain, inconclusive, Error, Result};
use crate::interval::{ExtendedReal, Interval};
use crate::potential::TailPotential;
use crate::series::{self, SeriesSpec, SumSign};
use crate::shift::{Rule, SymbolicShift};

/// Largest truncation accepted by `pressure_truncated`.
pub const N_MAX: u64 = 20_000;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 100_000;

/// Weighted sum `Σ_j w_j φ_j` of depth-one potentials.
pub type Combination<'a> = [(f64, &'a TailPotential)];

#[derive(Clone, Debug)]
pub struct PressureReport {
    pub value: ExtendedReal,
    /// Size of the explicit block used by the lumped matrix.
    pub n_used: Option<u64>,
}

fn check_offset(shift: &SymbolicShift) -> Result<()> {
    if let Rule::InducedWords { .. } = shift.rule {
        return domain("pressure on induced words goes through the inducing module");
    }
    shift.validate()
}

fn weight(terms: &Combination, n: u64) -> Result<Interval> {
    SeriesSpec::new(terms.to_vec(), 0).term(n)
}

/// Exponent enclosure at `n` (negative infinity for absent symbols).
fn exponent(terms: &Combination, n: u64) -> Result<Interval> {
    Ok(SeriesSpec::new(terms.to_vec(), 0)
        .exponent(n)?
        .unwrap_or(Interval::point(f64::NEG_INFINITY)))
}

/// `log Σ_n e^{φ_n}` over the full shift on `{0, 1, …}`.
pub fn pressure_fullshift(phi: &TailPotential, tol: f64) -> Result<ExtendedReal> {
    pressure(&SymbolicShift::full(0), phi, tol)
}

/// Log of the Perron root of the matrix `B(i,j) e^{φ_i}` on symbols
/// `offset..n`, by power iteration from the all-ones vector.
pub fn pressure_truncated(shift: &SymbolicShift, phi: &TailPotential, n: u64) -> Result<f64> {
    pressure_truncated_combined(shift, &[(1.0, phi)], n)
}

pub fn pressure_truncated_combined(shift: &SymbolicShift, terms: &Combination, n: u64) -> Result<f64> {
    check_offset(shift)?;
    let off = shift.alphabet_offset;
    if n <= off {
        return domain(format!("truncation {n} leaves no symbols above offset {off}"));
    }
    if n - off > N_MAX.max(1_000_000) {
        return domain(format!("truncation {n} too large"));
    }
    let syms: Vec<u64> = (off..n).collect();
    let expo: Vec<f64> = syms
        .iter()
        .map(|&i| exponent(terms, i).map(|e| e.mid()))
        .collect::<Result<_>>()?;
    let top = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::Reducible(format!("every symbol below {n} is absent")));
    }
    let w: Vec<f64> = expo.iter().map(|e| (e - top).exp()).collect();
    let forbidden: Vec<Vec<usize>> = syms
        .iter()
        .map(|&i| {
            shift
                .forbidden_successors(i)
                .into_iter()
                .filter(|&j| j >= off && j < n)
                .map(|j| (j - off) as usize)
                .collect()
        })
        .collect();
    let matvec = |v: &[f64], out: &mut [f64]| {
        let total: f64 = v.iter().sum();
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = total;
            for &j in &forbidden[i] {
                s -= v[j];
            }
            *o = w[i] * s.max(0.0);
        }
    };
    let mut v = vec![1.0; syms.len()];
    let mut mv = vec![0.0; syms.len()];
    let mut last = f64::NAN;
    let mut calm = 0;
    for _ in 0..POWER_MAX_ITERS {
        matvec(&v, &mut mv);
        let norm = mv.iter().copied().fold(0.0, f64::max);
        if norm == 0.0 {
            return Err(Error::Reducible(format!(
                "truncation at {n} carries no cycle; increase N"
            )));
        }
        let num: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().map(|a| a * a).sum();
        let rq = num / den;
        if ((rq - last) / rq).abs() < POWER_TOL {
            calm += 1;
            if calm >= 3 {
                return Ok(rq.ln() + top);
            }
        } else {
            calm = 0;
        }
        last = rq;
        for (a, b) in v.iter_mut().zip(&mv) {
            *a = b / norm;
        }
    }
    inconclusive(format!("power iteration did not settle at N = {n}"))
}

/// Certified pressure for a full or finite-exception shift.
pub fn pressure(shift: &SymbolicShift, phi: &TailPotential, tol: f64) -> Result<ExtendedReal> {
    Ok(pressure_report(shift, &[(1.0, phi)], tol)?.value)
}

pub fn pressure_combined(shift: &SymbolicShift, terms: &Combination, tol: f64) -> Result<ExtendedReal> {
    Ok(pressure_report(shift, terms, tol)?.value)
}

pub fn pressure_report(shift: &SymbolicShift, terms: &Combination, tol: f64) -> Result<PressureReport> {
    check_offset(shift)?;
    if !(tol > 0.0) {
        return domain("tol must be positive");
    }
    let off = shift.alphabet_offset;
    // the series tolerance is absolute; d log S = dS / S, so size it from a coarse pass
    let mut scale = 1.0f64;
    if shift.is_full() {
        match series::enclose(&SeriesSpec::new(terms.to_vec(), off), 0.1)? {
            ExtendedReal::Infinite => return Ok(PressureReport { value: ExtendedReal::Infinite, n_used: None }),
            ExtendedReal::Interval(c) if c.lo > 0.0 => scale = c.lo,
            _ => {}
        }
    }
    for _ in 0..4 {
        let report = if shift.is_full() {
            let s = series::enclose(&SeriesSpec::new(terms.to_vec(), off), scale * tol / 4.0)?;
            PressureReport { value: log_sum(s)?, n_used: None }
        } else {
            let n = shift.block_span() + 1;
            let value = match series::enclose(&SeriesSpec::new(terms.to_vec(), n), scale * tol / 8.0)? {
                ExtendedReal::Infinite => ExtendedReal::Infinite,
                ExtendedReal::Interval(rg) => lumped_root(shift, terms, n, rg)?,
            };
            PressureReport { value, n_used: Some(n) }
        };
        match report.value {
            ExtendedReal::Interval(i) if i.width() > tol => {
                let next = scale.min(i.lo.exp() / 2.0);
                if !(next < scale) || next == 0.0 {
                    return inconclusive(format!("pressure enclosure {i} wider than {tol:e}"));
                }
                scale = next;
            }
            _ => return Ok(report),
        }
    }
    inconclusive(format!("pressure enclosure wider than {tol:e}"))
}

fn log_sum(s: ExtendedReal) -> Result<ExtendedReal> {
    match s {
        ExtendedReal::Infinite => Ok(ExtendedReal::Infinite),
        ExtendedReal::Interval(i) if i.hi <= 0.0 => domain("potential vanishes on every symbol"),
        ExtendedReal::Interval(i) => Ok(ExtendedReal::Interval(Interval::new(i.lo.max(0.0), i.hi).ln())),
    }
}

/// Enclosure of `log ρ` for the block `offset..n` plus the aggregate state.
fn lumped_root(shift: &SymbolicShift, terms: &Combination, n: u64, rg: Interval) -> Result<ExtendedReal> {
    let off = shift.alphabet_offset;
    let mut syms = Vec::new();
    let mut w = Vec::new();
    for i in off..n {
        let e = weight(terms, i)?;
        if e.hi > 0.0 {
            syms.push(i);
            w.push(e);
        }
    }
    // index k < syms.len() is a block symbol, the last index the aggregate
    let m = syms.len() + 1;
    let allowed = |a: usize, b: usize| -> bool {
        if a == m - 1 || b == m - 1 {
            true
        } else {
            shift.allows(syms[a], syms[b])
        }
    };
    let row_w = |a: usize| if a == m - 1 { rg } else { w[a] };
    if rg.hi <= 0.0 && !(0..m - 1).any(|a| (0..m - 1).any(|b| allowed(a, b))) {
        return Err(Error::Reducible("no cycle among present symbols".into()));
    }
    // float power iteration on midpoints
    let mid: Vec<f64> = (0..m).map(|a| row_w(a).mid()).collect();
    let mut v = vec![1.0; m];
    let mut mv = vec![0.0; m];
    for _ in 0..10_000 {
        for a in 0..m {
            let s: f64 = (0..m).filter(|&b| allowed(a, b)).map(|b| v[b]).sum();
            mv[a] = mid[a] * s;
        }
        let norm = mv.iter().copied().fold(0.0, f64::max);
        if norm == 0.0 {
            return Err(Error::Reducible("lumped matrix is nilpotent".into()));
        }
        let mut change = 0.0f64;
        for a in 0..m {
            let nv = (mv[a] / norm).max(1e-300);
            change = change.max((nv - v[a]).abs());
            v[a] = nv;
        }
        if change < 1e-15 {
            break;
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for a in 0..m {
        let mut s = Interval::ZERO;
        for b in (0..m).filter(|&b| allowed(a, b)) {
            s = s + Interval::point(v[b]);
        }
        let r = row_w(a) * s / Interval::point(v[a]);
        lo = lo.min(r.lo);
        hi = hi.max(r.hi);
    }
    if hi <= 0.0 {
        return Err(Error::Reducible("lumped matrix is nilpotent".into()));
    }
    Ok(ExtendedReal::Interval(Interval::new(lo.max(0.0), hi).ln()))
}

/// Sign of `P(Σ w_j φ_j)` relative to zero, tightening down to `min_tol`.
pub fn pressure_sign(shift: &SymbolicShift, terms: &Combination, min_tol: f64) -> Result<SumSign> {
    check_offset(shift)?;
    let off = shift.alphabet_offset;
    if shift.is_full() {
        return series::compare_to_one(&SeriesSpec::new(terms.to_vec(), off), min_tol);
    }
    let n = shift.block_span() + 1;
    let tail = SeriesSpec::new(terms.to_vec(), n);
    match series::verdict(&tail)? {
        series::Convergence::Diverges => return Ok(SumSign::Above { infinite: true }),
        series::Convergence::Borderline => return Ok(SumSign::Undecided(Interval::ENTIRE)),
        series::Convergence::Converges => {}
    }
    let mut tol = series::COARSE_TOL;
    loop {
        let t = tol.max(min_tol);
        let rg = match series::enclose(&tail, t / 8.0)? {
            ExtendedReal::Infinite => return Ok(SumSign::Above { infinite: true }),
            ExtendedReal::Interval(i) => i,
        };
        let p = lumped_root(shift, terms, n, rg)?.interval().expect("finite");
        if p.lo > 0.0 {
            return Ok(SumSign::Above { infinite: false });
        }
        if p.hi <= 0.0 {
            return Ok(SumSign::AtMost);
        }
        if t <= min_tol {
            return Ok(SumSign::Undecided(p));
        }
        let gap = p.mid().abs();
        tol = if gap.is_finite() { (gap / 4.0).min(t / 16.0) } else { t / 16.0 }.min(rg.width() / 4.0).min(series::LADDER_TOL);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::TailForm;

    #[test]
    fn zeta_two_pressure() {
        let p = TailPotential::tail_only(TailForm::new(-2.0, 0.0, 0.0, 0.0, 1.0));
        let v = pressure_fullshift(&p, 1e-9).unwrap().interval().unwrap();
        assert!(v.contains((std::f64::consts::PI.powi(2) / 6.0).ln()));
    }

    #[test]
    fn finite_full_shift() {
        let p = TailPotential::head_only(vec![Some(0.0); 4]);
        let v = pressure_fullshift(&p, 1e-9).unwrap().interval().unwrap();
        assert!(v.contains(4f64.ln()) && v.width() < 1e-12);
    }

    #[test]
    fn geodesic_block_radius_two() {
        let g = SymbolicShift::geodesic();
        let p = TailPotential::constant(0.0);
        let v = pressure_truncated(&g, &p, 6).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-10, "{v}");
    }

    #[test]
    fn single_symbol() {
        let f = SymbolicShift::full(0);
        let p = TailPotential::head_only(vec![Some(0.7)]);
        assert!((pressure_truncated(&f, &p, 1).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn nilpotent_block_is_reducible() {
        let s = SymbolicShift::exceptions(3, vec![(3, 3)]).unwrap();
        let p = TailPotential::constant(0.0);
        assert!(matches!(pressure_truncated(&s, &p, 4), Err(Error::Reducible(_))));
    }

    #[test]
    fn lumped_matches_truncation_limit() {
        // geodesic shift with φ_n = -2 log n: lumped value sits above every truncation
        let g = SymbolicShift::geodesic();
        let p = TailPotential::tail_only(TailForm::new(-2.0, 0.0, 0.0, 0.0, 0.0));
        let v = pressure(&g, &p, 1e-9).unwrap().interval().unwrap();
        let t = pressure_truncated(&g, &p, 20_000).unwrap();
        assert!(t <= v.hi && v.lo - t < 2e-4, "{v} {t}");
    }
}
