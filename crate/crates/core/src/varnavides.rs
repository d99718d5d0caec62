//! Exact audit of the averaging argument over length-N progressions.
//!
//! The family `A_N` is every `{a, a+d, ..., a+(N-1)d}` with `d != 0`, indexed by
//! the pair `(a, d)`, so `|A_N| = p(p-1)`. Progression counts inside a member
//! are counts of nondegenerate 3-APs of F_p lying in the intersection as a set.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lambda::count_t3;
use crate::rng::StreamRng;
use crate::zp::{IndicatorSet, PrimeField};

/// Full-family scans cost `O(p^2 N^2)`; larger p is refused.
pub const FAMILY_CAP: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct APFamily {
    field: PrimeField,
    n: usize,
}

impl APFamily {
    pub fn new(field: PrimeField, n: usize) -> Result<Self> {
        if n < 2 || n > field.p() {
            return Err(Error::BadLength { n, p: field.p() });
        }
        Ok(Self { field, n })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn len_n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> u64 {
        let p = self.field.p() as u64;
        p * (p - 1)
    }

    pub fn member(&self, a: usize, d: usize) -> Result<IndicatorSet> {
        if d.is_multiple_of(self.field.p()) {
            return Err(Error::ZeroDilation);
        }
        let f = self.field;
        Ok(IndicatorSet::from_members(f, (0..self.n).map(|i| f.add(a, f.mul(i, d)))))
    }

    pub fn members(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let p = self.field.p();
        (1..p).flat_map(move |d| (0..p).map(move |a| (a, d)))
    }
}

fn audited_family(field: PrimeField, n: usize, min_n: usize) -> Result<APFamily> {
    if n < min_n || n > field.p() {
        return Err(Error::BadLength { n, p: field.p() });
    }
    if field.p() > FAMILY_CAP {
        return Err(Error::FamilyTooLarge { p: field.p(), cap: FAMILY_CAP });
    }
    APFamily::new(field, n)
}

/// Number of family members containing a fixed nondegenerate 3-AP.
///
/// Each such member is fixed by the positions `(i, j, k)` the three terms occupy
/// in it, which must be distinct and satisfy `i + k = 2j (mod p)`.
pub fn containment_count(n: usize, field: PrimeField) -> Result<u64> {
    if n < 3 || n > field.p() {
        return Err(Error::BadLength { n, p: field.p() });
    }
    let p = field.p();
    let mut count = 0u64;
    for i in 0..n {
        for j in 0..n {
            if i != j && (2 * j + p - i) % p < n {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Members of `A_N` containing `{a, a+d, a+2d}`, by scanning the whole family.
pub fn containment_brute(n: usize, field: PrimeField, a: usize, d: usize) -> Result<u64> {
    let family = audited_family(field, n, 3)?;
    let triple = [a, field.add(a, d), field.add(a, field.mul(2, d))];
    let p = field.p();
    let count = (1..p)
        .into_par_iter()
        .map(|step| {
            let inv = field.inv(step).expect("nonzero step");
            (0..p)
                .filter(|&start| {
                    triple.iter().all(|&x| field.mul(field.sub(x, start), inv) < family.n)
                })
                .count() as u64
        })
        .sum();
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContainmentAudit {
    pub n: usize,
    pub count: u64,
    /// Brute-force counts for the sampled base progressions.
    pub sampled: Vec<u64>,
    /// `|P - N^2/2| <= 2N`; fails once progressions of the family wrap around.
    pub band_ok: bool,
}

impl ContainmentAudit {
    pub fn independent(&self) -> bool {
        self.sampled.iter().all(|&c| c == self.count)
    }
}

/// [`containment_count`] cross-checked by brute force on `samples` random base progressions.
pub fn containment_audit(n: usize, field: PrimeField, samples: usize, rng: &mut StreamRng) -> Result<ContainmentAudit> {
    let count = containment_count(n, field)?;
    let p = field.p();
    let sampled = (0..samples)
        .map(|_| containment_brute(n, field, rng.random_range(0..p), rng.random_range(1..p)))
        .collect::<Result<Vec<_>>>()?;
    let band_ok = (count as f64 - (n * n) as f64 / 2.0).abs() <= 2.0 * n as f64;
    Ok(ContainmentAudit { n, count, sampled, band_ok })
}

/// Per-member statistics of `A ∩ S` over the whole family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyScan {
    pub n: usize,
    /// `sum_A |A ∩ S|`.
    pub slot_sum: u64,
    /// `sum_A T_3(A ∩ S)`.
    pub t3_sum: u64,
    /// `histogram[k]` = number of members with `|A ∩ S| = k`.
    pub histogram: Vec<u64>,
}

impl FamilyScan {
    /// Members meeting S in more than `r` points.
    pub fn count_above(&self, r: usize) -> u64 {
        self.histogram.iter().skip(r + 1).sum()
    }
}

pub fn family_scan(s: &IndicatorSet, n: usize) -> Result<FamilyScan> {
    let field = s.field();
    audited_family(field, n, 2)?;
    let p = field.p();
    let per_step = |d: usize| {
        let mut scan = FamilyScan { n, slot_sum: 0, t3_sum: 0, histogram: vec![0; n + 1] };
        let mut hit = vec![false; n];
        for a in 0..p {
            let mut size = 0;
            for (i, h) in hit.iter_mut().enumerate() {
                *h = s.contains(field.add(a, field.mul(i, d)));
                size += *h as usize;
            }
            // progressions by position: terms at i, j and 2j - i (mod p)
            let mut t3 = 0;
            for i in (0..n).filter(|&i| hit[i]) {
                for j in (0..n).filter(|&j| j != i && hit[j]) {
                    let k = (2 * j + p - i) % p;
                    if k < n && hit[k] {
                        t3 += 1;
                    }
                }
            }
            scan.slot_sum += size as u64;
            scan.t3_sum += t3;
            scan.histogram[size] += 1;
        }
        scan
    };
    let merged = (1..p).into_par_iter().map(per_step).reduce(
        || FamilyScan { n, slot_sum: 0, t3_sum: 0, histogram: vec![0; n + 1] },
        |mut x, y| {
            x.slot_sum += y.slot_sum;
            x.t3_sum += y.t3_sum;
            for (h, v) in x.histogram.iter_mut().zip(y.histogram) {
                *h += v;
            }
            x
        },
    );
    Ok(merged)
}

/// `sum_A T_3(A ∩ S) - P T_3(S)`; zero exactly.
pub fn averaging_identity_residual(s: &IndicatorSet, n: usize) -> Result<i128> {
    if n < 3 {
        return Err(Error::BadLength { n, p: s.field().p() });
    }
    let scan = family_scan(s, n)?;
    let p_count = containment_count(n, s.field())?;
    Ok(scan.t3_sum as i128 - p_count as i128 * count_t3(s) as i128)
}

/// `sum_A |A ∩ S| - (p-1) N |S|`; zero exactly.
pub fn slot_count_identity(s: &IndicatorSet, n: usize) -> Result<i128> {
    if n < 3 {
        return Err(Error::BadLength { n, p: s.field().p() });
    }
    let scan = family_scan(s, n)?;
    let p = s.field().p() as i128;
    Ok(scan.slot_sum as i128 - (p - 1) * n as i128 * s.len() as i128)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarnavidesVerdict {
    pub p: usize,
    pub n: usize,
    pub r3: usize,
    pub size: usize,
    /// `|S| >= 2 (r_3/N) p`.
    pub hypothesis: bool,
    /// Members with `|A ∩ S| > r_3`.
    pub y: u64,
    /// `(p-1)|S| - p(p-1) r_3 / N`.
    pub y_bound: f64,
    pub y_ok: bool,
    pub containment: u64,
    pub t3: u64,
    /// `Y / P`.
    pub t3_bound: f64,
    pub t3_ok: bool,
}

impl VarnavidesVerdict {
    /// The chain holds; vacuously true when the hypothesis fails.
    pub fn pass(&self) -> bool {
        !self.hypothesis || (self.y_ok && self.t3_ok)
    }
}

/// Evaluate the counting chain for S with the exact value `r3 = r_3([N])`.
/// The chain values are reported even when the density hypothesis fails.
pub fn varnavides_bound_check(s: &IndicatorSet, n: usize, r3: usize) -> Result<VarnavidesVerdict> {
    if n < 3 || r3 > n {
        return Err(Error::BadLength { n, p: s.field().p() });
    }
    let scan = family_scan(s, n)?;
    let p = s.field().p();
    let size = s.len();
    let y = scan.count_above(r3);
    let containment = containment_count(n, s.field())?;
    let t3 = count_t3(s);
    // integer forms: N |S| >= 2 r3 p, N Y >= N(p-1)|S| - p(p-1) r3, P T3 >= Y
    let (pi, ni, ri) = (p as i128, n as i128, r3 as i128);
    let hypothesis = ni * size as i128 >= 2 * ri * pi;
    let y_ok = ni * y as i128 >= ni * (pi - 1) * size as i128 - pi * (pi - 1) * ri;
    let t3_ok = containment as i128 * t3 as i128 >= y as i128;
    Ok(VarnavidesVerdict {
        p,
        n,
        r3,
        size,
        hypothesis,
        y,
        y_bound: (p - 1) as f64 * size as f64 - (p * (p - 1)) as f64 * r3 as f64 / n as f64,
        y_ok,
        containment,
        t3,
        t3_bound: y as f64 / containment as f64,
        t3_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn field(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn containment_examples() {
        let f = field(31);
        assert_eq!(containment_count(3, f).unwrap(), 2);
        assert_eq!(containment_count(4, f).unwrap(), 4);
        assert_eq!(containment_count(5, f).unwrap(), 8);
        assert_eq!(containment_brute(5, f, 3, 7).unwrap(), 8);
        assert!(matches!(containment_count(2, f), Err(Error::BadLength { .. })));
        assert!(matches!(containment_count(32, f), Err(Error::BadLength { .. })));
    }

    #[test]
    fn containment_wraps_at_full_length() {
        // N = p: every member is F_p itself, so all p(p-1) contain the progression
        let f = field(7);
        assert_eq!(containment_count(7, f).unwrap(), 42);
        assert_eq!(containment_brute(7, f, 0, 1).unwrap(), 42);
        let audit = containment_audit(7, f, 3, &mut stream_rng(1, "t")).unwrap();
        assert!(audit.independent());
        assert!(!audit.band_ok);
    }

    #[test]
    fn family_basics() {
        let f = field(11);
        let fam = APFamily::new(f, 4).unwrap();
        assert_eq!(fam.size(), 110);
        assert_eq!(fam.members().count(), 110);
        assert_eq!(fam.member(9, 3).unwrap().members(), vec![1, 4, 7, 9]);
        assert_eq!(fam.member(0, 0), Err(Error::ZeroDilation));
    }

    #[test]
    fn trivial_identities() {
        let f = field(13);
        for s in [IndicatorSet::empty(f), IndicatorSet::full(f), IndicatorSet::from_members(f, [5])] {
            assert_eq!(slot_count_identity(&s, 4).unwrap(), 0);
            assert_eq!(averaging_identity_residual(&s, 4).unwrap(), 0);
        }
        let scan = family_scan(&IndicatorSet::full(f), 4).unwrap();
        assert_eq!(scan.t3_sum, containment_count(4, f).unwrap() * 13 * 12);
    }

    #[test]
    fn hypothesis_infeasible_at_small_n() {
        let f = field(31);
        let v = varnavides_bound_check(&IndicatorSet::full(f), 5, 4).unwrap();
        assert!(!v.hypothesis && v.pass());
        assert_eq!(v.t3, 31 * 30);
        assert!(v.y_ok && v.t3_ok);
    }
}
