//! The function space `H = J(l^2)`.
//!
//! `J(x)(z) = sum_n <x, y_n> / ||y_n|| * z^{sigma(n)}`, with the inner product
//! carried over from the sequence space. `J(||y_n|| x_n) = z^{sigma(n)}`, so
//! monomials, polynomials and Taylor coefficients all have explicit
//! coordinates. In the Fourier embedding every term carries an extra factor
//! `2^{-n}` and `sigma` maps onto the integers.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::One;

use crate::error::{Error, Result};
use crate::mbasis::{SequenceCache, WeightSpec};
use crate::project::{project_vectors, Generator, ProjectionOptions, ProjectionResult};
use crate::scalar::{Mode, Rational, Scalar};
use crate::sparse::SparseVec;
use crate::variants::IndexMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Embedding {
    /// Power series on the unit disk.
    Holomorphic,
    /// Fourier series on the circle, term `n` damped by `2^{-n}`.
    Fourier,
}

/// One concrete space: weights, cached sequences and the index map.
#[derive(Debug, Clone)]
pub struct SpaceHandle {
    cache: SequenceCache,
    sigma: IndexMap,
    embedding: Embedding,
}

/// An element of `H`, stored as its sequence-space representative.
///
/// `tail_bound` bounds the norm of whatever was truncated away. The Taylor
/// cache is behind a mutex so an `HFunction` can be shared across threads.
#[derive(Debug)]
pub struct HFunction {
    coords: SparseVec,
    tail_bound: f64,
    taylor: Mutex<BTreeMap<i64, Scalar>>,
}

impl Clone for HFunction {
    fn clone(&self) -> Self {
        HFunction {
            coords: self.coords.clone(),
            tail_bound: self.tail_bound,
            taylor: Mutex::new(self.taylor.lock().expect("taylor cache poisoned").clone()),
        }
    }
}

impl HFunction {
    pub fn new(coords: SparseVec, tail_bound: f64) -> Self {
        HFunction {
            coords,
            tail_bound,
            taylor: Mutex::new(BTreeMap::new()),
        }
    }

    /// A function known exactly (no truncation).
    pub fn exact(coords: SparseVec) -> Self {
        HFunction::new(coords, 0.0)
    }

    pub fn coords(&self) -> &SparseVec {
        &self.coords
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `||f||_H^2`, equal to the sequence-space norm of the representative.
    pub fn norm_sq(&self) -> Result<Scalar> {
        Ok(self.coords.norm_sq()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormStatus {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone)]
pub struct MonomialNormRow {
    pub index: usize,
    pub degree: i64,
    pub norm_sq: Scalar,
    pub norm: f64,
    /// `(1 + omega_n)^2` when a bound is claimed.
    pub bound_sq: Option<Scalar>,
    pub status: NormStatus,
}

/// Partial Taylor sum with a rigorous error bound.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub value: Complex64,
    pub bound: f64,
    pub degree: i64,
}

impl SpaceHandle {
    /// Power-series space with identity index map, prepared up to `max_index`.
    pub fn new(weights: WeightSpec, mode: Mode, max_index: usize) -> Result<Self> {
        SpaceHandle::with_map(weights, mode, max_index, IndexMap::Identity, Embedding::Holomorphic)
    }

    pub fn with_map(
        weights: WeightSpec,
        mode: Mode,
        max_index: usize,
        sigma: IndexMap,
        embedding: Embedding,
    ) -> Result<Self> {
        if embedding == Embedding::Holomorphic && sigma == IndexMap::ToIntegers {
            return Err(Error::IndexMap("integer-valued index map needs the Fourier embedding".into()));
        }
        let cache = SequenceCache::build(weights, mode, max_index)?;
        let s = SpaceHandle { cache, sigma, embedding };
        s.check_sigma_range(max_index)?;
        Ok(s)
    }

    fn check_sigma_range(&self, max_index: usize) -> Result<()> {
        if let Some(b) = self.sigma.bound() {
            if b < max_index {
                return Err(Error::IndexMap(format!(
                    "index map tabulated up to {b}, space prepared up to {max_index}"
                )));
            }
        }
        Ok(())
    }

    pub fn ensure_index(&mut self, max_index: usize) -> Result<()> {
        self.check_sigma_range(max_index)?;
        self.cache.ensure_index(max_index)
    }

    pub fn cache(&self) -> &SequenceCache {
        &self.cache
    }

    pub fn weights(&self) -> &WeightSpec {
        self.cache.spec()
    }

    pub fn mode(&self) -> Mode {
        self.cache.mode()
    }

    pub fn sigma(&self) -> &IndexMap {
        &self.sigma
    }

    pub fn embedding(&self) -> Embedding {
        self.embedding
    }

    pub fn max_index(&self) -> usize {
        self.cache.max_index().unwrap_or(0)
    }

    pub fn degree_of(&self, n: usize) -> Result<i64> {
        self.sigma.forward(n)
    }

    pub fn index_of(&self, degree: i64) -> Result<usize> {
        self.sigma.inverse(degree)
    }

    /// `||y_n||`, times `2^n` in the Fourier embedding.
    pub fn monomial_scale(&self, n: usize) -> Result<Scalar> {
        let y = self.cache.y_norm(n)?.clone();
        match self.embedding {
            Embedding::Holomorphic => Ok(y),
            Embedding::Fourier => {
                let two_n = Scalar::from_rational(Rational::from_integer(BigInt::one() << n), self.mode());
                Ok(y.try_mul(&two_n)?)
            }
        }
    }

    /// Coordinates of the monomial attached to index `n`.
    pub fn generator_coords(&self, n: usize) -> Result<SparseVec> {
        Ok(self.cache.x_vec(n)?.scale(&self.monomial_scale(n)?)?)
    }

    /// Coordinates of `z^degree` (or `e^{i degree t}`).
    pub fn monomial_coords(&self, degree: i64) -> Result<SparseVec> {
        self.generator_coords(self.index_of(degree)?)
    }

    /// Coordinates of `sum_k c_k z^k`.
    pub fn polynomial_coords(&self, coeffs: &BTreeMap<i64, Scalar>) -> Result<SparseVec> {
        let mut out = SparseVec::zero(self.mode());
        for (k, c) in coeffs {
            if c.is_zero() {
                continue;
            }
            out.axpy(c, &self.monomial_coords(*k)?)?;
        }
        Ok(out)
    }

    /// Coefficient of the term attached to index `n`: `<x, y_n> / scale_n`.
    pub fn coefficient_at_index(&self, coords: &SparseVec, n: usize) -> Result<Scalar> {
        let raw = coords.dot(&self.cache.y_vec(n)?)?;
        if raw.is_zero() {
            return Ok(Scalar::zero(self.mode()));
        }
        Ok(raw.try_div(&self.monomial_scale(n)?)?)
    }

    /// Taylor (or Fourier) coefficient of `f` at `degree`, memoized on `f`.
    pub fn taylor_of(&self, f: &HFunction, degree: i64) -> Result<Scalar> {
        if let Some(c) = f.taylor.lock().expect("taylor cache poisoned").get(&degree) {
            return Ok(c.clone());
        }
        let n = self.index_of(degree)?;
        let c = self.coefficient_at_index(&f.coords, n)?;
        f.taylor
            .lock()
            .expect("taylor cache poisoned")
            .insert(degree, c.clone());
        Ok(c)
    }

    /// Indices `n` whose `y_n` meets the support of `coords`.
    pub fn touching_indices(coords: &SparseVec) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for k in coords.support() {
            out.insert(k);
            if k % 2 == 1 {
                out.insert(k - 1);
                if k >= 3 {
                    out.insert(k - 3);
                }
            }
        }
        out
    }

    /// Every non-zero coefficient of `J(coords)`, keyed by degree.
    pub fn taylor_support(&self, f: &HFunction) -> Result<BTreeMap<i64, Scalar>> {
        let mut out = BTreeMap::new();
        for n in SpaceHandle::touching_indices(&f.coords) {
            let d = self.degree_of(n)?;
            let c = self.taylor_of(f, d)?;
            if !c.is_zero() {
                out.insert(d, c);
            }
        }
        Ok(out)
    }

    pub fn inner_product(&self, f: &HFunction, g: &HFunction) -> Result<Scalar> {
        Ok(f.coords.dot(&g.coords)?)
    }

    /// `||monomial_n||^2 = scale_n^2 ||x_n||^2`.
    pub fn monomial_norm_sq(&self, n: usize) -> Result<Scalar> {
        let s = self.monomial_scale(n)?;
        Ok(s.try_mul(&s)?.try_mul(&self.cache.norm_sq_x(n)?)?)
    }

    /// Compares `||z^{sigma(n)}||^2` against `(1 + omega_n)^2` for `n <= n_max`.
    /// Eta-direct weights and the Fourier embedding are reported without a bound.
    pub fn monomial_norm_check(&self, n_max: usize) -> Result<Vec<MonomialNormRow>> {
        let mode = self.mode();
        let claims_bound = self.weights().is_omega() && self.embedding == Embedding::Holomorphic;
        (0..=n_max)
            .map(|n| {
                let norm_sq = self.monomial_norm_sq(n)?;
                let norm = norm_sq.to_f64().sqrt();
                let degree = self.degree_of(n)?;
                if !claims_bound {
                    return Ok(MonomialNormRow {
                        index: n,
                        degree,
                        norm_sq,
                        norm,
                        bound_sq: None,
                        status: NormStatus::Info,
                    });
                }
                let omega = self.weights().omega(n)?.expect("omega weights");
                let one_plus = omega + Rational::one();
                let bound_sq = Scalar::from_rational(&one_plus * &one_plus, mode);
                let ok = match mode {
                    Mode::Exact => norm_sq.cmp_value(&bound_sq)? != std::cmp::Ordering::Greater,
                    Mode::Approx => norm_sq.to_f64() <= bound_sq.to_f64() * (1.0 + 1e-12),
                };
                Ok(MonomialNormRow {
                    index: n,
                    degree,
                    norm_sq,
                    norm,
                    bound_sq: Some(bound_sq),
                    status: if ok { NormStatus::Pass } else { NormStatus::Fail },
                })
            })
            .collect()
    }

    /// Best approximation of `f` from `span(generators)`.
    pub fn project(&self, f: &HFunction, generators: &[Generator], opts: &ProjectionOptions) -> Result<ProjectionResult> {
        project_vectors(&f.coords, generators, opts)
    }

    /// Evaluates `f` at `z` in the disk. The partial sum stops at the first
    /// degree `D` where `||x|| |z|^{D+1} / (1 - |z|)` drops below `accuracy`
    /// (or at the last non-zero term); the returned bound adds the
    /// truncation tail of `f` itself.
    pub fn eval_at(&self, f: &HFunction, z: Complex64, accuracy: f64) -> Result<Evaluation> {
        if self.embedding != Embedding::Holomorphic {
            return Err(Error::Unsupported("point evaluation is defined on the disk model only".into()));
        }
        let r = z.norm();
        if !(r < 1.0) {
            return Err(Error::OutsideDisk(format!("{z}")));
        }
        let x_norm = f.coords.norm_f64();
        let terms = self.taylor_support(f)?;
        let max_degree = terms.keys().next_back().copied().unwrap_or(-1);
        let series_tail = |d: i64| x_norm * r.powi((d + 1) as i32) / (1.0 - r);
        let mut degree = 0i64;
        while degree < max_degree && series_tail(degree) >= accuracy {
            degree += 1;
        }
        let value: Complex64 = terms
            .iter()
            .filter(|(k, _)| **k <= degree)
            .map(|(k, c)| z.powi(*k as i32) * c.to_f64())
            .sum();
        let omitted = if degree >= max_degree { 0.0 } else { series_tail(degree) };
        Ok(Evaluation {
            value,
            bound: omitted + f.tail_bound / (1.0 - r),
            degree,
        })
    }
}
