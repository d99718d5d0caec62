use serde::Serialize;

use super::{is_ap_free, IntSet};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BehrendCandidate {
    pub base: usize,
    pub dims: usize,
    /// Squared radius of the chosen sphere; `None` when the whole digit cube is taken.
    pub radius_sq: Option<usize>,
    pub size: usize,
}

/// All `(q, k)` with `3 <= q <= 12`, `1 <= k <= 6`, `q^k <= N`, with the set each yields.
///
/// Numbers `0 <= x < q^k` whose base-q digits are all below `q/2` add without
/// carries, so `x + z = 2y` holds digitwise. On a sphere that forces `x = y = z`.
/// With digits in `{0, 1}` it does anyway, so the whole cube is used.
pub fn behrend_sweep(n: usize) -> Vec<(BehrendCandidate, Vec<usize>)> {
    let mut out = Vec::new();
    for q in 3..=12usize {
        let digit_max = q.div_ceil(2) - 1;
        for k in 1..=6u32 {
            let Some(span) = q.checked_pow(k).filter(|&s| s <= n) else { break };
            let mut by_radius: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
            let mut cube = Vec::new();
            for x in 0..span {
                let (mut rest, mut r2, mut ok) = (x, 0, true);
                for _ in 0..k {
                    let d = rest % q;
                    ok &= d <= digit_max;
                    r2 += d * d;
                    rest /= q;
                }
                if ok {
                    by_radius.entry(r2).or_default().push(x + 1);
                    cube.push(x + 1);
                }
            }
            let cand = if digit_max == 1 {
                (BehrendCandidate { base: q, dims: k as usize, radius_sq: None, size: cube.len() }, cube)
            } else {
                // most populous sphere, smallest radius on ties
                let (r2, members) = by_radius
                    .into_iter()
                    .rev()
                    .max_by_key(|(_, m)| m.len())
                    .expect("cube is nonempty");
                (BehrendCandidate { base: q, dims: k as usize, radius_sq: Some(r2), size: members.len() }, members)
            };
            out.push(cand);
        }
    }
    out
}

/// The largest verified set over [`behrend_sweep`].
pub fn behrend_construct(n: usize) -> Result<IntSet> {
    if n < 8 {
        return Err(Error::RangeTooSmall(n));
    }
    let (_, best) = behrend_sweep(n)
        .into_iter()
        .rev()
        .max_by_key(|(c, _)| c.size)
        .expect("q = 3, k = 1 always fits");
    let set = IntSet::new(n, best)?;
    assert!(is_ap_free(&set), "digit construction produced a progression");
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_ranges() {
        assert_eq!(behrend_construct(7), Err(Error::RangeTooSmall(7)));
        let s10 = behrend_construct(10).unwrap();
        assert!(s10.len() >= 4 && is_ap_free(&s10));
        assert_eq!(s10.members(), &[1, 2, 4, 5]);
    }

    #[test]
    fn every_candidate_is_ap_free() {
        for n in [8, 30, 100, 250, 1000] {
            for (cand, members) in behrend_sweep(n) {
                let s = IntSet::new(n, members).unwrap();
                assert!(is_ap_free(&s), "{cand:?}");
                assert_eq!(s.len(), cand.size);
            }
        }
        assert!(behrend_construct(1000).unwrap().len() >= 64);
    }
}
