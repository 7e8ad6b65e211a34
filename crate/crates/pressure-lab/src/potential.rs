//! Depth-one locally constant potentials with a symbolic tail.
//!
//! A potential lists explicit values on the symbols `0..N0` (entries below the
//! owning shift's offset are ignored) and, from `N0` on, follows
//! `a·log(n+k) + b·loglog(n+k) + c·logloglog(n+k) + d + e·n`.
//! A leveled tail uses the level-`i` form on the set `A_i` of the counting
//! example, with every level past the last one folded into it.

use crate::error::{domain, Result};
use crate::instances::count_level;
use crate::interval::Interval;
use serde::{Deserialize, Serialize};

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailForm {
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub d: f64,
    /// Coefficient of the linear term `n`.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub e: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Natural log of the shift, for shifts beyond the `f64` range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_k: Option<f64>,
}

impl TailForm {
    pub fn new(a: f64, b: f64, c: f64, d: f64, k: f64) -> Self {
        TailForm { a, b, c, d, e: 0.0, k: Some(k), log_k: None }
    }

    pub fn with_log_k(a: f64, b: f64, c: f64, d: f64, log_k: f64) -> Self {
        TailForm { a, b, c, d, e: 0.0, k: None, log_k: Some(log_k) }
    }

    pub fn linear(e: f64) -> Self {
        TailForm { a: 0.0, b: 0.0, c: 0.0, d: 0.0, e, k: Some(0.0), log_k: None }
    }

    /// Enclosure of `ln k`; negative infinity when `k = 0`.
    pub fn ln_k(&self) -> Interval {
        match (self.log_k, self.k) {
            (Some(l), _) => Interval::point(l),
            (None, Some(k)) if k == 0.0 => Interval::point(f64::NEG_INFINITY),
            (None, Some(k)) => Interval::point(k).ln(),
            (None, None) => Interval::point(f64::NEG_INFINITY),
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d), ("e", self.e)] {
            if !v.is_finite() {
                return domain(format!("tail coefficient {name} is not finite"));
            }
        }
        match (self.k, self.log_k) {
            (Some(_), Some(_)) => domain("give either k or log_k, not both"),
            (Some(k), None) if !(k.is_finite() && k >= 0.0) => domain("k must be finite and >= 0"),
            (None, Some(l)) if !l.is_finite() => domain("log_k must be finite"),
            _ => Ok(()),
        }
    }

    /// `(L1, L2, L3)` at real argument with `ln x` enclosed by `ln_x`.
    pub(crate) fn logs(&self, ln_n: Interval) -> (Interval, Interval, Interval) {
        let l1 = Interval::logaddexp(ln_n, self.ln_k());
        let l2 = if self.b != 0.0 || self.c != 0.0 {
            if l1.lo > 0.0 {
                l1.ln()
            } else {
                Interval::ENTIRE
            }
        } else {
            Interval::ZERO
        };
        let l3 = if self.c != 0.0 {
            if l2.lo > 0.0 {
                l2.ln()
            } else {
                Interval::ENTIRE
            }
        } else {
            Interval::ZERO
        };
        (l1, l2, l3)
    }

    /// Value at symbol `n`.
    pub fn eval(&self, n: u64) -> Interval {
        let ln_n = if n == 0 {
            Interval::point(f64::NEG_INFINITY)
        } else {
            Interval::point(n as f64).ln()
        };
        let (l1, l2, l3) = self.logs(ln_n);
        let mut v = Interval::point(self.d);
        if self.a != 0.0 {
            v = v + l1 * self.a;
        }
        if self.b != 0.0 {
            v = v + l2 * self.b;
        }
        if self.c != 0.0 {
            v = v + l3 * self.c;
        }
        if self.e != 0.0 {
            v = v + Interval::point(n as f64) * self.e;
        }
        v
    }

    /// Whether the loglog/logloglog terms are defined at symbol `n`.
    fn defined_at(&self, n: u64) -> bool {
        let ln_n = if n == 0 {
            Interval::point(f64::NEG_INFINITY)
        } else {
            Interval::point(n as f64).ln()
        };
        let l1 = Interval::logaddexp(ln_n, self.ln_k());
        if self.a != 0.0 && l1.lo == f64::NEG_INFINITY {
            return false;
        }
        if (self.b != 0.0 || self.c != 0.0) && l1.lo <= 0.0 {
            return false;
        }
        if self.c != 0.0 && l1.ln().lo <= 0.0 {
            return false;
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tail {
    Leveled { levels: Vec<TailForm> },
    Single(TailForm),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPotential {
    /// Values on symbols `0..N0`; `null` stands for negative infinity.
    pub head: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<Tail>,
    #[serde(rename = "N0")]
    pub n0: u64,
}

impl TailPotential {
    pub fn tail_only(form: TailForm) -> Self {
        TailPotential { head: Vec::new(), tail: Some(Tail::Single(form)), n0: 0 }
    }

    pub fn new(head: Vec<Option<f64>>, tail: Option<Tail>) -> Result<Self> {
        let p = TailPotential { n0: head.len() as u64, head, tail };
        p.validate()?;
        Ok(p)
    }

    /// Finitely supported potential; every symbol past the head is absent.
    pub fn head_only(head: Vec<Option<f64>>) -> Self {
        TailPotential { n0: head.len() as u64, head, tail: None }
    }

    pub fn constant(c: f64) -> Self {
        Self::tail_only(TailForm::new(0.0, 0.0, 0.0, c, 0.0))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: TailPotential = serde_json::from_str(s)
            .map_err(|e| crate::Error::Domain(format!("potential json: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("potential serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.head.len() as u64 != self.n0 {
            return domain(format!(
                "head has {} entries but N0 = {}",
                self.head.len(),
                self.n0
            ));
        }
        for v in self.head.iter().flatten() {
            if !v.is_finite() {
                return domain("head values must be finite or null");
            }
        }
        match &self.tail {
            None => Ok(()),
            Some(Tail::Single(f)) => {
                f.validate()?;
                if !f.defined_at(self.n0) {
                    return domain(format!("tail form undefined at N0 = {}", self.n0));
                }
                Ok(())
            }
            Some(Tail::Leveled { levels }) => {
                if levels.is_empty() {
                    return domain("leveled tail needs at least one level");
                }
                for f in levels {
                    f.validate()?;
                    if f.e != 0.0 {
                        return domain("leveled tails take no linear term");
                    }
                    if !f.defined_at(self.n0) {
                        return domain(format!("tail form undefined at N0 = {}", self.n0));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn levels(&self) -> usize {
        match &self.tail {
            Some(Tail::Leveled { levels }) => levels.len(),
            _ => 1,
        }
    }

    /// Tail form used on level `i` (1-based); `None` for a head-only potential.
    pub fn form(&self, level: usize) -> Option<&TailForm> {
        match &self.tail {
            None => None,
            Some(Tail::Single(f)) => Some(f),
            Some(Tail::Leveled { levels }) => Some(&levels[level.clamp(1, levels.len()) - 1]),
        }
    }

    /// Enclosure of the value at symbol `n`; a point at negative infinity
    /// when the symbol carries no weight.
    pub fn eval(&self, n: u64) -> Interval {
        if n < self.n0 {
            return match self.head[n as usize] {
                Some(v) => Interval::point(v),
                None => Interval::point(f64::NEG_INFINITY),
            };
        }
        match &self.tail {
            None => Interval::point(f64::NEG_INFINITY),
            Some(Tail::Single(f)) => f.eval(n),
            Some(Tail::Leveled { levels }) => {
                let lv = (count_level(n) as usize).min(levels.len());
                levels[lv - 1].eval(n)
            }
        }
    }

    /// Point estimate of the value at `n`.
    pub fn value(&self, n: u64) -> f64 {
        self.eval(n).mid()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_switches_at_n0() {
        let p = TailPotential::new(
            vec![Some(1.0), None],
            Some(Tail::Single(TailForm::new(-2.0, 0.0, 0.0, 0.0, 1.0))),
        )
        .unwrap();
        assert_eq!(p.eval(0), Interval::point(1.0));
        assert_eq!(p.eval(1).hi, f64::NEG_INFINITY);
        assert!(p.eval(2).contains(-2.0 * 3f64.ln()));
    }

    #[test]
    fn json_shape() {
        let p = TailPotential::tail_only(TailForm::new(-2.0, 0.0, 0.0, 0.0, 1.0));
        let s = p.to_json();
        assert_eq!(s, r#"{"head":[],"tail":{"a":-2.0,"b":0.0,"c":0.0,"d":0.0,"k":1.0},"N0":0}"#);
        assert_eq!(TailPotential::from_json(&s).unwrap(), p);
        let lv = r#"{"head":[],"tail":{"levels":[{"a":1,"log_k":4000},{"a":1,"b":1,"log_k":4000}]},"N0":0}"#;
        let q = TailPotential::from_json(lv).unwrap();
        assert_eq!(q.levels(), 2);
        assert!((q.eval(2).mid() - 4000.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_undefined_logloglog() {
        let bad = TailPotential::tail_only(TailForm::new(0.0, 0.0, 1.0, 0.0, 1.0));
        assert!(bad.validate().is_err());
        let good = TailPotential::new(
            vec![Some(1.0); 15],
            Some(Tail::Single(TailForm::new(0.0, 0.0, 1.0, 0.0, 1.0))),
        );
        assert!(good.is_ok());
    }
}
