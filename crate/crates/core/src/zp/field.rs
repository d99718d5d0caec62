use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The prime field F_p for an odd prime p.
///
/// Elements are represented by their canonical residues `0..p` as `usize`,
/// which is also how grid functions are indexed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeField {
    p: usize,
    inv2: usize,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p == 2 {
            return Err(Error::EvenModulus);
        }
        if p < 3 {
            return Err(Error::ModulusTooSmall(p));
        }
        if !is_prime(p) {
            return Err(Error::CompositeModulus(p));
        }
        let p = usize::try_from(p).map_err(|_| Error::InvalidConfig("modulus exceeds usize".into()))?;
        Ok(Self { p, inv2: p.div_ceil(2) })
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    /// Multiplicative inverse of 2.
    #[inline]
    pub fn inv2(&self) -> usize {
        self.inv2
    }

    #[inline]
    pub fn reduce(&self, x: i64) -> usize {
        x.rem_euclid(self.p as i64) as usize
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        ((a as u128 * b as u128) % self.p as u128) as usize
    }

    #[inline]
    pub fn half(&self, a: usize) -> usize {
        self.mul(a, self.inv2)
    }

    pub fn pow(&self, mut base: usize, mut exp: u64) -> usize {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse of a nonzero element (Fermat).
    pub fn inv(&self, a: usize) -> Result<usize> {
        if a.is_multiple_of(self.p) {
            return Err(Error::ZeroDilation);
        }
        Ok(self.pow(a, self.p as u64 - 2))
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.p
    }

    pub(crate) fn ensure_same(&self, other: &PrimeField) -> Result<()> {
        if self.p != other.p {
            return Err(Error::FieldMismatch { left: self.p, right: other.p });
        }
        Ok(())
    }
}
