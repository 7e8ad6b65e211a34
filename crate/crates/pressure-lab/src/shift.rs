//! Countable Markov shifts over the naturals.
//!
//! Alphabets are implicit: every symbol `>= offset` exists, and the rule says
//! which consecutive pairs are allowed. Nothing is materialized without an
//! explicit truncation bound.

use crate::error::{domain, inconclusive, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub type CylinderWord = Vec<u64>;

/// Hard cap on the number of words any enumeration may return.
pub const MAX_WORDS: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Rule {
    #[serde(rename = "full")]
    FullShift,
    /// All transitions allowed except the listed ordered pairs.
    #[serde(rename = "exceptions")]
    FiniteExceptions { forbidden: Vec<(u64, u64)> },
    /// Full shift on the first-return words of `base` at `return_symbol`;
    /// symbols index those words.
    #[serde(rename = "induced")]
    InducedWords { base: Box<SymbolicShift>, return_symbol: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicShift {
    #[serde(flatten)]
    pub rule: Rule,
    #[serde(rename = "offset")]
    pub alphabet_offset: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bip_witness: Option<Vec<u64>>,
}

impl SymbolicShift {
    pub fn full(offset: u64) -> Self {
        SymbolicShift { rule: Rule::FullShift, alphabet_offset: offset, bip_witness: None }
    }

    pub fn exceptions(offset: u64, forbidden: Vec<(u64, u64)>) -> Result<Self> {
        let s = SymbolicShift {
            rule: Rule::FiniteExceptions { forbidden },
            alphabet_offset: offset,
            bip_witness: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Symbolic model of the positive geodesic flow: digits `>= 3`, the five
    /// platonic pairs removed.
    pub fn geodesic() -> Self {
        SymbolicShift {
            rule: Rule::FiniteExceptions {
                forbidden: vec![(3, 3), (3, 4), (3, 5), (4, 3), (5, 3)],
            },
            alphabet_offset: 3,
            bip_witness: Some(vec![6]),
        }
    }

    pub fn induced(base: SymbolicShift, return_symbol: u64) -> Result<Self> {
        if return_symbol < base.alphabet_offset {
            return domain(format!(
                "return symbol {return_symbol} below offset {}",
                base.alphabet_offset
            ));
        }
        Ok(SymbolicShift {
            rule: Rule::InducedWords { base: Box::new(base), return_symbol },
            alphabet_offset: 0,
            bip_witness: None,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let shift: SymbolicShift = serde_json::from_str(s)
            .map_err(|e| crate::Error::Domain(format!("shift json: {e}")))?;
        shift.validate()?;
        Ok(shift)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("shift serializes")
    }

    pub fn validate(&self) -> Result<()> {
        match &self.rule {
            Rule::FullShift => Ok(()),
            Rule::FiniteExceptions { forbidden } => {
                for &(i, j) in forbidden {
                    if i < self.alphabet_offset || j < self.alphabet_offset {
                        return domain(format!(
                            "forbidden pair ({i},{j}) below offset {}",
                            self.alphabet_offset
                        ));
                    }
                }
                Ok(())
            }
            Rule::InducedWords { base, return_symbol } => {
                base.validate()?;
                if *return_symbol < base.alphabet_offset {
                    return domain("return symbol below base offset");
                }
                Ok(())
            }
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self.rule, Rule::FullShift)
    }

    /// Largest symbol involved in an exception; the offset when there are none.
    pub fn block_span(&self) -> u64 {
        match &self.rule {
            Rule::FiniteExceptions { forbidden } => forbidden
                .iter()
                .map(|&(i, j)| i.max(j))
                .max()
                .unwrap_or(self.alphabet_offset)
                .max(self.alphabet_offset),
            _ => self.alphabet_offset,
        }
    }

    /// `B(i, j)` for symbols already known to be in the alphabet.
    pub fn allows(&self, i: u64, j: u64) -> bool {
        match &self.rule {
            Rule::FiniteExceptions { forbidden } => !forbidden.contains(&(i, j)),
            _ => true,
        }
    }

    /// Symbols `j` with `B(i, j) = 0`.
    pub fn forbidden_successors(&self, i: u64) -> Vec<u64> {
        match &self.rule {
            Rule::FiniteExceptions { forbidden } => {
                let set: BTreeSet<u64> =
                    forbidden.iter().filter(|p| p.0 == i).map(|p| p.1).collect();
                set.into_iter().collect()
            }
            _ => Vec::new(),
        }
    }

    fn check_symbol(&self, a: u64) -> Result<()> {
        if a < self.alphabet_offset {
            return domain(format!("symbol {a} below alphabet offset {}", self.alphabet_offset));
        }
        Ok(())
    }

    pub fn is_admissible(&self, word: &[u64]) -> Result<bool> {
        if word.is_empty() {
            return domain("empty word");
        }
        for &a in word {
            self.check_symbol(a)?;
        }
        Ok(word.windows(2).all(|w| self.allows(w[0], w[1])))
    }

    /// Checks the BIP condition with the given witness set. Beyond the
    /// exception block every symbol behaves identically, so a passing check
    /// up to `check_up_to >= block_span()` (plus one generic symbol) is complete.
    pub fn verify_bip_witness(&self, witness: &[u64], check_up_to: u64) -> Result<bool> {
        if witness.is_empty() {
            return domain("empty witness");
        }
        for &b in witness {
            self.check_symbol(b)?;
        }
        match &self.rule {
            Rule::FullShift | Rule::InducedWords { .. } => Ok(true),
            Rule::FiniteExceptions { .. } => {
                let span = self.block_span();
                if check_up_to < span {
                    return inconclusive(format!(
                        "check_up_to {check_up_to} below exception block span {span}"
                    ));
                }
                // one symbol past the block stands for every generic symbol
                let top = check_up_to.max(span + 1);
                for a in self.alphabet_offset..=top {
                    let into = witness.iter().any(|&b| self.allows(b, a));
                    let out = witness.iter().any(|&b| self.allows(a, b));
                    if !(into && out) {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// All admissible words of exactly `depth` symbols from
    /// `[offset, max_symbol]`, in lexicographic order.
    pub fn enumerate_cylinders(&self, depth: usize, max_symbol: u64) -> Result<Vec<CylinderWord>> {
        if depth == 0 {
            return domain("depth must be at least 1");
        }
        let mut out = Vec::new();
        if max_symbol < self.alphabet_offset {
            return Ok(out);
        }
        let mut word = Vec::with_capacity(depth);
        self.extend(&mut word, depth, max_symbol, &mut out)?;
        Ok(out)
    }

    fn extend(
        &self,
        word: &mut Vec<u64>,
        depth: usize,
        max_symbol: u64,
        out: &mut Vec<CylinderWord>,
    ) -> Result<()> {
        if word.len() == depth {
            if out.len() >= MAX_WORDS {
                return domain(format!("more than {MAX_WORDS} cylinders"));
            }
            out.push(word.clone());
            return Ok(());
        }
        for a in self.alphabet_offset..=max_symbol {
            if let Some(&last) = word.last() {
                if !self.allows(last, a) {
                    continue;
                }
            }
            word.push(a);
            self.extend(word, depth, max_symbol, out)?;
            word.pop();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geodesic_admissibility() {
        let g = SymbolicShift::geodesic();
        assert!(!g.is_admissible(&[3, 3]).unwrap());
        assert!(g.is_admissible(&[3, 6, 3]).unwrap());
        assert!(g.is_admissible(&[2]).is_err());
    }

    #[test]
    fn full_shift_admits_everything() {
        let f = SymbolicShift::full(0);
        assert!(f.is_admissible(&[7, 0, 7]).unwrap());
    }

    #[test]
    fn bip_witnesses() {
        let g = SymbolicShift::geodesic();
        assert!(g.verify_bip_witness(&[6], 10).unwrap());
        assert!(!g.verify_bip_witness(&[3], 10).unwrap());
        assert!(g.verify_bip_witness(&[6], 4).is_err());
        assert!(SymbolicShift::full(0).verify_bip_witness(&[0], 10).unwrap());
    }

    #[test]
    fn cylinder_lists() {
        let f = SymbolicShift::full(0);
        assert_eq!(f.enumerate_cylinders(1, 2).unwrap(), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(
            f.enumerate_cylinders(2, 1).unwrap(),
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        let g = SymbolicShift::geodesic();
        assert_eq!(g.enumerate_cylinders(2, 4).unwrap(), vec![vec![4, 4]]);
    }

    #[test]
    fn json_round_trip() {
        let g = SymbolicShift::geodesic();
        let s = g.to_json();
        assert_eq!(s, r#"{"kind":"exceptions","forbidden":[[3,3],[3,4],[3,5],[4,3],[5,3]],"offset":3,"bip_witness":[6]}"#);
        let back = SymbolicShift::from_json(&s).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), s);
        let full = SymbolicShift::from_json(r#"{"kind":"full","offset":0}"#).unwrap();
        assert!(full.is_full());
    }
}
