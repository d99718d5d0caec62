//! Progression-free subsets of `[N] = {1, ..., N}`: exact r_3 with witnesses,
//! and the digit construction giving large explicit examples.

mod behrend;
mod cache;
mod search;

pub use behrend::{behrend_construct, behrend_sweep, BehrendCandidate};
pub use cache::{load_certificates, save_certificates, R3Cache};
pub use search::{r3_exact, r3_exhaustive, R3Search, DEFAULT_BUDGET, MAX_SEARCH_N};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted distinct integers in `[1, N]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntSet {
    n: usize,
    members: Vec<usize>,
}

impl IntSet {
    pub fn new(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members.iter().find(|&&x| x == 0 || x > n) {
            return Err(Error::ElementOutOfRange(bad, n));
        }
        Ok(Self { n, members })
    }

    pub fn range_bound(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }
}

/// No `x != y` in S with `x + y = 2z`, `z` in S (over the integers).
pub fn is_ap_free(s: &IntSet) -> bool {
    let m = s.members();
    for (i, &x) in m.iter().enumerate() {
        for &y in &m[i + 1..] {
            if (x + y) % 2 == 0 && s.contains((x + y) / 2) {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum R3Method {
    Exhaustive,
    BranchAndBound,
}

impl R3Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            R3Method::Exhaustive => "exhaustive",
            R3Method::BranchAndBound => "branch_and_bound",
        }
    }
}

impl std::str::FromStr for R3Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(R3Method::Exhaustive),
            "branch_and_bound" => Ok(R3Method::BranchAndBound),
            other => Err(Error::Csv(format!("unknown certificate method {other:?}"))),
        }
    }
}

/// `value = r_3([n])`, realized by `witness`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct R3Certificate {
    pub n: usize,
    pub value: usize,
    pub witness: IntSet,
    pub method: R3Method,
}

impl R3Certificate {
    /// Witness size and progression-freeness (optimality is what the search certifies).
    pub fn is_consistent(&self) -> bool {
        self.witness.len() == self.value && self.witness.range_bound() == self.n && is_ap_free(&self.witness)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ap_free_examples() {
        let s = |v: &[usize]| IntSet::new(10, v.iter().copied()).unwrap();
        assert!(is_ap_free(&s(&[1, 2])));
        assert!(!is_ap_free(&s(&[1, 2, 3])));
        assert!(is_ap_free(&s(&[1, 2, 4, 5])));
        assert!(!is_ap_free(&s(&[1, 5, 9])));
        assert!(is_ap_free(&s(&[])));
    }

    #[test]
    fn intset_range() {
        assert_eq!(IntSet::new(5, [6]), Err(Error::ElementOutOfRange(6, 5)));
        assert_eq!(IntSet::new(5, [0]), Err(Error::ElementOutOfRange(0, 5)));
        assert_eq!(IntSet::new(5, [3, 1, 3]).unwrap().members(), &[1, 3]);
    }
}
