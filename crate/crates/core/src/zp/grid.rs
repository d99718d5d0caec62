use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::PrimeField;
use crate::error::{Error, Result};

/// Whether a grid function is constrained to `[0, 1]` or is an unconstrained
/// intermediate (convolutions, gradient fields).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Density,
    Real,
}

/// A real-valued function on F_p, stored as one value per residue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFn {
    field: PrimeField,
    values: Vec<f64>,
    role: Role,
}

impl GridFn {
    /// A `[0,1]`-valued function. Every value is range-checked.
    pub fn density(field: PrimeField, values: Vec<f64>) -> Result<Self> {
        if values.len() != field.p() {
            return Err(Error::LengthMismatch { expected: field.p(), got: values.len() });
        }
        if let Some((index, &value)) =
            values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::OutOfRange { index, value });
        }
        Ok(Self { field, values, role: Role::Density })
    }

    pub fn real(field: PrimeField, values: Vec<f64>) -> Result<Self> {
        if values.len() != field.p() {
            return Err(Error::LengthMismatch { expected: field.p(), got: values.len() });
        }
        Ok(Self { field, values, role: Role::Real })
    }

    pub fn constant(field: PrimeField, c: f64) -> Result<Self> {
        Self::density(field, vec![c; field.p()])
    }

    pub fn delta(field: PrimeField, at: usize) -> Self {
        let mut values = vec![0.0; field.p()];
        values[at % field.p()] = 1.0;
        Self { field, values, role: Role::Density }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn p(&self) -> usize {
        self.field.p()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, n: usize) -> f64 {
        self.values[n]
    }

    /// Overwrite one coordinate, enforcing the range for density functions.
    pub fn set(&mut self, n: usize, v: f64) -> Result<()> {
        if self.role == Role::Density && !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange { index: n, value: v });
        }
        self.values[n] = v;
        Ok(())
    }

    /// Density E(f) = p^{-1} sum_n f(n).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.p() as f64
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_indicator(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Reinterpret as an unconstrained function.
    pub fn into_real(mut self) -> Self {
        self.role = Role::Real;
        self
    }

    /// Reinterpret as a density function, range-checking every value.
    pub fn into_density(self) -> Result<Self> {
        Self::density(self.field, self.values)
    }

    pub fn support(&self) -> IndicatorSet {
        IndicatorSet::from_predicate(self.field, |n| self.values[n] != 0.0)
    }

    /// Pointwise product with an indicator.
    pub fn restrict(&self, set: &IndicatorSet) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(n, &v)| if set.contains(n) { v } else { 0.0 })
            .collect();
        Self { field: self.field, values, role: self.role }
    }

    pub fn l1_distance(&self, other: &GridFn) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn max_abs_diff(&self, other: &GridFn) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Fourier coefficients `coeffs[a] = sum_n f(n) e^{2 pi i a n / p}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    field: PrimeField,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(field: PrimeField, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != field.p() {
            return Err(Error::LengthMismatch { expected: field.p(), got: coeffs.len() });
        }
        Ok(Self { field, coeffs })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn at(&self, a: usize) -> Complex64 {
        self.coeffs[a % self.field.p()]
    }

    /// Largest deviation from conjugate symmetry `c[p-a] = conj(c[a])`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let p = self.field.p();
        (0..p)
            .map(|a| (self.coeffs[(p - a) % p] - self.coeffs[a].conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// A subset of F_p, one bit per residue.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndicatorSet {
    field: PrimeField,
    words: Vec<u64>,
}

impl IndicatorSet {
    pub fn empty(field: PrimeField) -> Self {
        Self { field, words: vec![0; field.p().div_ceil(64)] }
    }

    pub fn full(field: PrimeField) -> Self {
        let mut s = Self::empty(field);
        for n in 0..field.p() {
            s.insert(n);
        }
        s
    }

    pub fn from_members<I: IntoIterator<Item = usize>>(field: PrimeField, members: I) -> Self {
        let mut s = Self::empty(field);
        for n in members {
            s.insert(n % field.p());
        }
        s
    }

    pub fn from_predicate(field: PrimeField, pred: impl Fn(usize) -> bool) -> Self {
        Self::from_members(field, (0..field.p()).filter(|&n| pred(n)))
    }

    /// Bit `n` of `mask` selects residue `n`; for exhaustive sweeps at tiny p.
    pub fn from_mask(field: PrimeField, mask: u64) -> Self {
        Self::from_predicate(field, |n| n < 64 && mask >> n & 1 == 1)
    }

    /// `{0, 1, ..., len - 1}`.
    pub fn interval(field: PrimeField, len: usize) -> Self {
        Self::from_members(field, 0..len.min(field.p()))
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn contains(&self, n: usize) -> bool {
        self.words[n / 64] >> (n % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, n: usize) {
        self.words[n / 64] |= 1 << (n % 64);
    }

    #[inline]
    pub fn remove(&mut self, n: usize) {
        self.words[n / 64] &= !(1 << (n % 64));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.field.p()).filter(move |&n| self.contains(n))
    }

    pub fn members(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn complement(&self) -> Self {
        IndicatorSet::from_predicate(self.field, |n| !self.contains(n))
    }

    pub fn union(&self, other: &Self) -> Self {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        Self { field: self.field, words }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        Self { field: self.field, words }
    }

    pub fn difference(&self, other: &Self) -> Self {
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect();
        Self { field: self.field, words }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Values exactly 0 or 1.
    pub fn as_gridfn(&self) -> GridFn {
        let values = (0..self.field.p()).map(|n| if self.contains(n) { 1.0 } else { 0.0 }).collect();
        GridFn { field: self.field, values, role: Role::Density }
    }

    /// Density |S|/p.
    pub fn density(&self) -> f64 {
        self.len() as f64 / self.field.p() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn density_rejects_out_of_range() {
        let err = GridFn::density(f(5), vec![0.0, 0.5, 1.2, 0.0, 0.0]).unwrap_err();
        assert_eq!(err, Error::OutOfRange { index: 2, value: 1.2 });
        assert!(GridFn::density(f(5), vec![0.0; 4]).is_err());
        assert!(GridFn::real(f(5), vec![-3.0, 0.5, 1.2, 0.0, 7.0]).is_ok());
    }

    #[test]
    fn indicator_basics() {
        let field = f(101);
        let s = IndicatorSet::from_members(field, [0, 3, 64, 100]);
        assert_eq!(s.len(), 4);
        assert!(s.contains(64) && !s.contains(65));
        let c = s.complement();
        assert_eq!(c.len(), 97);
        assert!(s.is_disjoint(&c));
        assert_eq!(s.union(&c).len(), 101);
        let g = s.as_gridfn();
        assert!(g.is_indicator());
        assert_eq!(g.sum(), 4.0);
    }

    #[test]
    fn mask_sets() {
        let s = IndicatorSet::from_mask(f(5), 0b10011);
        assert_eq!(s.members(), vec![0, 1, 4]);
    }
}
