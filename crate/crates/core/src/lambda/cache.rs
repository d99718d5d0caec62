//! Exact two-coordinate perturbation of Lambda.
//!
//! Changing `h` at two points `x != y` by `dx`, `dy` moves Lambda by thirteen
//! closed-form terms: four first-order terms read off the gradient pieces,
//! seven quadratic terms and two cubic ones. Every other term of the cubic
//! expansion vanishes because a nondegenerate progression has three distinct
//! points and cannot sit inside `{x, y}`.

use serde::Serialize;

use super::eval::{gradient_parts, lambda_direct};
use crate::error::{Error, Result};
use crate::zp::{GridFn, PrimeField};

/// The thirteen increments `E_1 ... E_13` of a two-point move.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PerturbationTerms(pub [f64; 13]);

impl PerturbationTerms {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `E_1 + ... + E_4`, the part linear in the displacement.
    pub fn first_order(&self) -> f64 {
        self.0[..4].iter().sum()
    }
}

#[derive(Clone, Debug)]
pub struct LambdaCache {
    h: GridFn,
    lambda: f64,
    mid: Vec<f64>,
    end: Vec<f64>,
    incremental: bool,
}

impl LambdaCache {
    pub fn new(h: GridFn) -> Self {
        let parts = gradient_parts(&h);
        let lambda = lambda_direct(&h);
        Self { h, lambda, mid: parts.mid, end: parts.end, incremental: true }
    }

    /// With incremental bookkeeping off, every update recomputes the gradient in full.
    pub fn with_incremental(mut self, on: bool) -> Self {
        self.incremental = on;
        self
    }

    pub fn field(&self) -> PrimeField {
        self.h.field()
    }

    pub fn h(&self) -> &GridFn {
        &self.h
    }

    pub fn into_h(self) -> GridFn {
        self.h
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `G(n) = mid(n) + 2 end(n)`.
    #[inline]
    pub fn grad_at(&self, n: usize) -> f64 {
        self.mid[n] + 2.0 * self.end[n]
    }

    pub fn grad(&self) -> GridFn {
        let values = (0..self.h.p()).map(|n| self.grad_at(n)).collect();
        GridFn::real(self.h.field(), values).expect("length preserved")
    }

    /// Largest drift of the cached Lambda and gradient from a full recomputation.
    pub fn drift(&self) -> (f64, f64) {
        let fresh = LambdaCache::new(self.h.clone());
        let dl = (fresh.lambda - self.lambda).abs();
        let dg = (0..self.h.p()).map(|n| (fresh.grad_at(n) - self.grad_at(n)).abs()).fold(0.0, f64::max);
        (dl, dg)
    }

    pub fn validate(&self, tol: f64) -> bool {
        let (dl, dg) = self.drift();
        dl <= tol && dg <= tol
    }

    /// The thirteen terms for moving `h(x) -> vx`, `h(y) -> vy`, without applying them.
    pub fn terms(&self, x: usize, y: usize, vx: f64, vy: f64) -> PerturbationTerms {
        let field = self.h.field();
        let h = |n: usize| self.h.get(n);
        let dx = vx - h(x);
        let dy = vy - h(y);
        let s = 1.0 / (field.p() as f64).powi(2);
        let two_x_minus_y = field.sub(field.mul(2, x), y);
        let two_y_minus_x = field.sub(field.mul(2, y), x);
        let midpoint = field.half(field.add(x, y));
        PerturbationTerms([
            s * self.mid[y] * dy,
            s * self.mid[x] * dx,
            2.0 * s * self.end[y] * dy,
            2.0 * s * self.end[x] * dx,
            2.0 * s * dy * dy * h(y),
            2.0 * s * dy * dx * h(two_x_minus_y),
            2.0 * s * dy * dx * h(two_y_minus_x),
            2.0 * s * dx * dx * h(x),
            s * dy * dy * h(y),
            s * dx * dx * h(x),
            2.0 * s * dx * dy * h(midpoint),
            s * dy * dy * dy,
            s * dx * dx * dx,
        ])
    }

    /// Copying form of [`Self::apply_two_point`].
    pub fn two_point_update(&self, x: usize, y: usize, vx: f64, vy: f64) -> Result<LambdaCache> {
        let mut next = self.clone();
        next.apply_two_point(x, y, vx, vy)?;
        Ok(next)
    }

    /// Set `h(x) = vx`, `h(y) = vy` and update Lambda and the gradient in place.
    pub fn apply_two_point(&mut self, x: usize, y: usize, vx: f64, vy: f64) -> Result<PerturbationTerms> {
        let p = self.h.p();
        if x == y || x >= p || y >= p {
            return Err(Error::InvalidConfig(format!("two-point move needs distinct x, y < p (got {x}, {y})")));
        }
        for (n, v) in [(x, vx), (y, vy)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange { index: n, value: v });
            }
        }
        let terms = self.terms(x, y, vx, vy);
        let old = self.h.clone();
        self.h.set(x, vx)?;
        self.h.set(y, vy)?;
        self.lambda += terms.total();
        if self.incremental {
            self.refresh_gradient(&old, x, y);
        } else {
            let parts = gradient_parts(&self.h);
            self.mid = parts.mid;
            self.end = parts.end;
        }
        #[cfg(debug_assertions)]
        if p <= 64 {
            let full = lambda_direct(&self.h);
            debug_assert!(
                (full - self.lambda).abs() <= 1e-9,
                "two-point expansion disagrees with recomputation: {} vs {full}",
                self.lambda
            );
        }
        Ok(terms)
    }

    // Only configurations through n whose other two points touch {x, y} change.
    fn refresh_gradient(&mut self, old: &GridFn, x: usize, y: usize) {
        let field = self.h.field();
        let new = &self.h;
        let changed = [x, y];
        let mut seen: [usize; 4] = [usize::MAX; 4];
        for n in 0..field.p() {
            // mid(n) = sum over ordered (u, 2n - u)
            let two_n = field.mul(2, n);
            let mut k = 0;
            let mut delta = 0.0;
            for &q in &changed {
                for u in [q, field.sub(two_n, q)] {
                    if !seen[..k].contains(&u) {
                        seen[k] = u;
                        k += 1;
                        let v = field.sub(two_n, u);
                        delta += new.get(u) * new.get(v) - old.get(u) * old.get(v);
                    }
                }
            }
            self.mid[n] += delta;

            // end(n) = sum over d of h(n+d) h(n+2d)
            k = 0;
            delta = 0.0;
            for &q in &changed {
                let e = field.sub(q, n);
                for d in [e, field.half(e)] {
                    if !seen[..k].contains(&d) {
                        seen[k] = d;
                        k += 1;
                        let (a, b) = (field.add(n, d), field.add(n, field.mul(2, d)));
                        delta += new.get(a) * new.get(b) - old.get(a) * old.get(b);
                    }
                }
            }
            self.end[n] += delta;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unchanged_values_leave_lambda_alone() {
        let f = PrimeField::new(11).unwrap();
        let h = GridFn::density(f, (0..11).map(|n| n as f64 / 11.0).collect()).unwrap();
        let cache = LambdaCache::new(h.clone());
        let next = cache.two_point_update(2, 5, h.get(2), h.get(5)).unwrap();
        assert_eq!(next.lambda(), cache.lambda());
        assert!(next.terms(2, 5, h.get(2), h.get(5)).0.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn delta_to_zero() {
        let f = PrimeField::new(7).unwrap();
        let cache = LambdaCache::new(GridFn::delta(f, 0));
        let next = cache.two_point_update(0, 1, 0.0, 0.0).unwrap();
        assert!(next.lambda().abs() < 1e-15);
        assert!(next.validate(1e-12));
    }

    #[test]
    fn rejects_bad_moves() {
        let f = PrimeField::new(7).unwrap();
        let cache = LambdaCache::new(GridFn::delta(f, 0));
        assert!(matches!(cache.two_point_update(0, 1, 1.5, 0.0), Err(Error::OutOfRange { .. })));
        assert!(cache.two_point_update(3, 3, 0.5, 0.5).is_err());
    }

    #[test]
    fn random_moves_match_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = PrimeField::new(53).unwrap();
        let h = GridFn::density(f, (0..53).map(|_| rng.random()).collect()).unwrap();
        let mut inc = LambdaCache::new(h.clone());
        let mut full = LambdaCache::new(h).with_incremental(false);
        for _ in 0..300 {
            let x = rng.random_range(0..53);
            let y = (x + rng.random_range(1..53)) % 53;
            let (vx, vy) = (rng.random(), rng.random());
            inc.apply_two_point(x, y, vx, vy).unwrap();
            full.apply_two_point(x, y, vx, vy).unwrap();
            assert!((inc.lambda() - lambda_direct(inc.h())).abs() <= 1e-10);
        }
        let (dl, dg) = inc.drift();
        assert!(dl < 1e-10 && dg < 1e-9, "{dl} {dg}");
        assert!(inc.grad().max_abs_diff(&full.grad()) < 1e-9);
    }
}
