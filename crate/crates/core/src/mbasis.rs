//! Weight sequences and the biorthogonal system `(x_n, y_n)`.
//!
//! For coefficient sequences `a_m = 1/eta_m^2` and `b_m = 1/(eta_m eta_{m-1})`:
//!
//! ```text
//! x_{2m}   = e_{2m}
//! x_{2m+1} = e_{2m+1} - a_m e_{2m} + b_m e_{2m-2}      (no b-term for m = 0)
//! y_{2m}   = e_{2m} + a_m e_{2m+1} - b_{m+1} e_{2m+3}
//! y_{2m+1} = e_{2m+1}
//! ```
//!
//! `<x_n, y_m> = delta_{nm}` and both families span the finitely supported
//! vectors, which [`SequenceCache::reconstruct_e`] makes explicit.

use num_bigint::BigInt;
use num_traits::{One, Pow, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{format_rational, Mode, Rational, Scalar};
use crate::sparse::SparseVec;

/// How the sequence `eta_n` is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightMode {
    /// `omega_n = (n+1)^exponent`, integer exponent > 1.
    OmegaPower { exponent: u32 },
    /// Explicit finite prefix of `omega_n`.
    OmegaList(Vec<Rational>),
    /// `eta_n = 1/(n+1)` directly.
    EtaReciprocal,
    /// Explicit finite prefix of `eta_n^2`.
    EtaList(Vec<Rational>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    pub mode: WeightMode,
    /// `sum 1/omega_n < infinity` (for eta modes: `sum eta_n^2 < infinity`).
    pub summable_reciprocal: bool,
    /// `omega_n^{1/n} -> 1`.
    pub nth_root_limit_one: bool,
}

fn check_positive(values: &[Rational], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::WeightSpec(format!("{what} list is empty")));
    }
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| *v <= &Rational::zero()) {
        return Err(Error::WeightSpec(format!(
            "{what}[{i}] = {} is not strictly positive",
            format_rational(v)
        )));
    }
    Ok(())
}

impl WeightSpec {
    /// `omega_n = (n+1)^alpha`. Only integer `alpha > 1` keeps every `omega_n`
    /// rational; both analytic flags hold.
    pub fn omega_power(alpha: &Rational) -> Result<Self> {
        if !alpha.is_integer() {
            return Err(Error::WeightSpec(format!(
                "omega exponent {} must be an integer so that omega_n is rational",
                format_rational(alpha)
            )));
        }
        let exponent = alpha
            .to_integer()
            .to_u32()
            .filter(|e| *e > 1 && *e <= 64)
            .ok_or_else(|| {
                Error::WeightSpec(format!(
                    "omega exponent {} must satisfy 1 < alpha <= 64",
                    format_rational(alpha)
                ))
            })?;
        Ok(WeightSpec {
            mode: WeightMode::OmegaPower { exponent },
            summable_reciprocal: true,
            nth_root_limit_one: true,
        })
    }

    /// `eta_n = 1/(n+1)`: every derived quantity is rational.
    pub fn eta_reciprocal() -> Self {
        WeightSpec {
            mode: WeightMode::EtaReciprocal,
            summable_reciprocal: true,
            nth_root_limit_one: true,
        }
    }

    /// Custom omega prefix. Flags are the caller's assertion.
    pub fn omega_list(values: Vec<Rational>, summable_reciprocal: bool, nth_root_limit_one: bool) -> Result<Self> {
        check_positive(&values, "omega")?;
        Ok(WeightSpec {
            mode: WeightMode::OmegaList(values),
            summable_reciprocal,
            nth_root_limit_one,
        })
    }

    /// Custom `eta_n^2` prefix. Flags are the caller's assertion.
    pub fn eta_list(eta_sq: Vec<Rational>, summable_reciprocal: bool, nth_root_limit_one: bool) -> Result<Self> {
        check_positive(&eta_sq, "eta_sq")?;
        Ok(WeightSpec {
            mode: WeightMode::EtaList(eta_sq),
            summable_reciprocal,
            nth_root_limit_one,
        })
    }

    pub fn is_omega(&self) -> bool {
        matches!(self.mode, WeightMode::OmegaPower { .. } | WeightMode::OmegaList(_))
    }

    pub fn label(&self) -> String {
        match &self.mode {
            WeightMode::OmegaPower { exponent } => format!("omega_n=(n+1)^{exponent}"),
            WeightMode::OmegaList(v) => format!("omega list ({} values)", v.len()),
            WeightMode::EtaReciprocal => "eta_n=1/(n+1)".to_string(),
            WeightMode::EtaList(v) => format!("eta_sq list ({} values)", v.len()),
        }
    }

    /// `omega_n`, or `None` in eta-direct modes.
    pub fn omega(&self, n: usize) -> Result<Option<Rational>> {
        match &self.mode {
            WeightMode::OmegaPower { exponent } => {
                Ok(Some(Rational::from_integer(BigInt::from(n + 1).pow(*exponent))))
            }
            WeightMode::OmegaList(v) => v.get(n).cloned().map(Some).ok_or(Error::IndexOutOfRange {
                what: "omega",
                index: n,
                available: v.len().saturating_sub(1),
            }),
            _ => Ok(None),
        }
    }

    /// `eta_n^2` for any mode.
    pub fn eta_sq(&self, n: usize) -> Result<Rational> {
        match &self.mode {
            WeightMode::EtaReciprocal => Ok(Rational::new(BigInt::one(), BigInt::from(n + 1).pow(2u32))),
            WeightMode::EtaList(v) => v.get(n).cloned().ok_or(Error::IndexOutOfRange {
                what: "eta_sq",
                index: n,
                available: v.len().saturating_sub(1),
            }),
            _ => eta_sq_from_omega(self, n),
        }
    }

    fn eta_sq_f64(&self, n: usize) -> f64 {
        match &self.mode {
            WeightMode::EtaReciprocal => 1.0 / ((n + 1) as f64).powi(2),
            WeightMode::OmegaPower { exponent } => {
                let w = |k: usize| ((k + 1) as f64).powi(*exponent as i32);
                let mut s = 3.0 / w(2 * n) + 3.0 / w(2 * n + 1) + 1.0 / w(2 * n + 3);
                if n > 0 {
                    s += 1.0 / w(2 * n - 2);
                }
                s
            }
            _ => self.eta_sq(n).map(|r| Scalar::Rational(r).to_f64()).unwrap_or(f64::INFINITY),
        }
    }

    /// Upper bound on `sum_{j > m} eta_j^2`; infinite for custom lists.
    pub fn eta_sq_tail_bound(&self, m: usize) -> f64 {
        const EXPLICIT: usize = 4096;
        let last = m + EXPLICIT;
        let remainder = match &self.mode {
            // sum_{j > K} 1/(j+1)^2 <= 1/(K+1)
            WeightMode::EtaReciprocal => 1.0 / (last as f64 + 1.0),
            // eta_j^2 <= 8/(2j-1)^alpha, integrate from K.
            WeightMode::OmegaPower { exponent } => {
                let a = *exponent as f64;
                8.0 / (2.0 * (a - 1.0) * (2.0 * last as f64 - 1.0).powf(a - 1.0))
            }
            _ => return f64::INFINITY,
        };
        let explicit: f64 = (m + 1..=last).map(|j| self.eta_sq_f64(j)).sum();
        (explicit + remainder) * (1.0 + 1e-12)
    }
}

/// `eta_n^2 = 3/omega_{2n} + 1/omega_{2n-2} + 3/omega_{2n+1} + 1/omega_{2n+3}`,
/// the second term omitted for `n = 0`.
pub fn eta_sq_from_omega(w: &WeightSpec, n: usize) -> Result<Rational> {
    if !w.is_omega() {
        return Err(Error::WrongWeightMode {
            expected: "an omega weight specification",
            actual: w.label(),
        });
    }
    let omega = |k: usize| -> Result<Rational> { Ok(w.omega(k)?.expect("omega mode")) };
    let three = Rational::from_integer(BigInt::from(3));
    let mut s = &three / omega(2 * n)? + &three / omega(2 * n + 1)? + omega(2 * n + 3)?.recip();
    if n > 0 {
        s += omega(2 * n - 2)?.recip();
    }
    Ok(s)
}

/// Which family a reconstruction is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    X,
    Y,
}

/// Memoized `eta_m^2`, `eta_m`, `a_m`, `b_m` and `||y_n||`.
///
/// Extension needs `&mut self`; once built the cache is shared read-only.
#[derive(Debug, Clone)]
pub struct SequenceCache {
    spec: WeightSpec,
    mode: Mode,
    eta_sq: Vec<Rational>,
    eta: Vec<Scalar>,
    a: Vec<Scalar>,
    // b[0] is a placeholder and never handed out.
    b: Vec<Scalar>,
    y_norm: Vec<Scalar>,
}

impl SequenceCache {
    pub fn new(spec: WeightSpec, mode: Mode) -> Self {
        SequenceCache {
            spec,
            mode,
            eta_sq: Vec::new(),
            eta: Vec::new(),
            a: Vec::new(),
            b: Vec::new(),
            y_norm: Vec::new(),
        }
    }

    /// Cache prepared for every index `n <= max_index`.
    pub fn build(spec: WeightSpec, mode: Mode, max_index: usize) -> Result<Self> {
        let mut c = SequenceCache::new(spec, mode);
        c.ensure_index(max_index)?;
        Ok(c)
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Largest index `n` for which `x_n`, `y_n` and `||y_n||` are available.
    pub fn max_index(&self) -> Option<usize> {
        self.y_norm.len().checked_sub(1)
    }

    fn ensure_level(&mut self, m: usize) -> Result<()> {
        while self.eta_sq.len() <= m {
            let k = self.eta_sq.len();
            let sq = self.spec.eta_sq(k)?;
            let eta = Scalar::sqrt_of_rational(&sq, self.mode)?;
            let a = Scalar::from_rational(sq.recip(), self.mode);
            let b = if k == 0 {
                Scalar::zero(self.mode)
            } else {
                eta.try_mul(&self.eta[k - 1])?.try_recip()?
            };
            self.eta_sq.push(sq);
            self.eta.push(eta);
            self.a.push(a);
            self.b.push(b);
        }
        Ok(())
    }

    /// Extends the cache so every index `n <= max_index` is available.
    pub fn ensure_index(&mut self, max_index: usize) -> Result<()> {
        self.ensure_level(max_index / 2 + 1)?;
        while self.y_norm.len() <= max_index {
            let n = self.y_norm.len();
            let norm_sq = self.norm_sq_y(n)?;
            let r = norm_sq.as_rational().cloned();
            let norm = match (self.mode, r) {
                (Mode::Exact, Some(r)) => Scalar::sqrt_of_rational(&r, Mode::Exact)?,
                (Mode::Exact, None) => {
                    return Err(Error::Unsupported(format!("||y_{n}||^2 = {norm_sq} is not rational")))
                }
                (Mode::Approx, _) => Scalar::Approx(norm_sq.to_f64().sqrt()),
            };
            self.y_norm.push(norm);
        }
        Ok(())
    }

    fn level<'a>(&self, v: &'a [Scalar], what: &'static str, m: usize) -> Result<&'a Scalar> {
        v.get(m).ok_or(Error::IndexOutOfRange {
            what,
            index: m,
            available: v.len().saturating_sub(1),
        })
    }

    pub fn eta_sq(&self, m: usize) -> Result<&Rational> {
        self.eta_sq.get(m).ok_or(Error::IndexOutOfRange {
            what: "eta_sq",
            index: m,
            available: self.eta_sq.len().saturating_sub(1),
        })
    }

    pub fn eta(&self, m: usize) -> Result<&Scalar> {
        self.level(&self.eta, "eta", m)
    }

    pub fn a(&self, m: usize) -> Result<&Scalar> {
        self.level(&self.a, "a", m)
    }

    /// `b_m` for `m >= 1`.
    pub fn b(&self, m: usize) -> Result<&Scalar> {
        if m == 0 {
            return Err(Error::IndexOutOfRange {
                what: "b (defined from 1)",
                index: 0,
                available: 0,
            });
        }
        self.level(&self.b, "b", m)
    }

    /// `||y_n||`: 1 for odd `n`, a square root (possibly a registered
    /// generator) for even `n`.
    pub fn y_norm(&self, n: usize) -> Result<&Scalar> {
        self.level(&self.y_norm, "y_norm", n)
    }

    pub fn x_vec(&self, n: usize) -> Result<SparseVec> {
        let m = n / 2;
        let mut v = SparseVec::unit(n, self.mode);
        if n % 2 == 1 {
            v.set(2 * m, -self.a(m)?.clone())?;
            if m >= 1 {
                v.set(2 * m - 2, self.b(m)?.clone())?;
            }
        }
        Ok(v)
    }

    pub fn y_vec(&self, n: usize) -> Result<SparseVec> {
        let m = n / 2;
        let mut v = SparseVec::unit(n, self.mode);
        if n % 2 == 0 {
            v.set(2 * m + 1, self.a(m)?.clone())?;
            v.set(2 * m + 3, -self.b(m + 1)?.clone())?;
        }
        Ok(v)
    }

    /// `||x_n||^2` from the closed form; rational in exact mode.
    pub fn norm_sq_x(&self, n: usize) -> Result<Scalar> {
        let m = n / 2;
        if n % 2 == 0 {
            return Ok(Scalar::one(self.mode));
        }
        let a = self.a(m)?;
        let mut s = &Scalar::one(self.mode) + &(a * a);
        if m >= 1 {
            let b = self.b(m)?;
            s = &s + &(b * b);
        }
        Ok(s)
    }

    /// `||y_n||^2` from the closed form; rational in exact mode.
    pub fn norm_sq_y(&self, n: usize) -> Result<Scalar> {
        let m = n / 2;
        if n % 2 == 1 {
            return Ok(Scalar::one(self.mode));
        }
        let a = self.a(m)?;
        let b = self.b(m + 1)?;
        Ok(&(&Scalar::one(self.mode) + &(a * a)) + &(b * b))
    }

    /// Coefficients expressing `e_n` in the chosen family.
    pub fn reconstruct_e(&self, n: usize, basis: Basis) -> Result<SparseVec> {
        let m = n / 2;
        let one = Scalar::one(self.mode);
        let mut c = SparseVec::zero(self.mode);
        match (basis, n % 2) {
            (Basis::X, 0) | (Basis::Y, 1) => c.set(n, one)?,
            (Basis::X, _) => {
                c.set(n, one)?;
                c.set(2 * m, self.a(m)?.clone())?;
                if m >= 1 {
                    c.set(2 * m - 2, -self.b(m)?.clone())?;
                }
            }
            (Basis::Y, _) => {
                c.set(n, one)?;
                c.set(2 * m + 1, -self.a(m)?.clone())?;
                c.set(2 * m + 3, self.b(m + 1)?.clone())?;
            }
        }
        Ok(c)
    }

    /// `sum_k coeffs[k] * x_k` (or `y_k`).
    pub fn expand(&self, coeffs: &SparseVec, basis: Basis) -> Result<SparseVec> {
        let mut out = SparseVec::zero(self.mode);
        for (k, c) in coeffs.iter() {
            let v = match basis {
                Basis::X => self.x_vec(k)?,
                Basis::Y => self.y_vec(k)?,
            };
            out.axpy(c, &v)?;
        }
        Ok(out)
    }

    /// Maximum of `|<x_n, y_m> - delta_nm|` over `0 <= n, m <= n_max`.
    pub fn check_biorthogonality(&self, n_max: usize) -> Result<BiorthogonalityReport> {
        let xs: Vec<SparseVec> = (0..=n_max).map(|n| self.x_vec(n)).collect::<Result<_>>()?;
        let ys: Vec<SparseVec> = (0..=n_max).map(|n| self.y_vec(n)).collect::<Result<_>>()?;
        let one = Scalar::one(self.mode);
        let rows: Vec<Option<(f64, Scalar, usize, usize)>> = xs
            .par_iter()
            .enumerate()
            .map(|(n, x)| -> Result<Option<(f64, Scalar, usize, usize)>> {
                let mut worst: Option<(f64, Scalar, usize, usize)> = None;
                for (m, y) in ys.iter().enumerate() {
                    let mut d = x.dot(y)?;
                    if n == m {
                        d = d.try_sub(&one)?;
                    }
                    if d.is_zero() {
                        continue;
                    }
                    let mag = d.to_f64().abs();
                    if worst.as_ref().is_none_or(|w| mag > w.0) {
                        worst = Some((mag, d, n, m));
                    }
                }
                Ok(worst)
            })
            .collect::<Result<_>>()?;
        let worst = rows
            .into_iter()
            .flatten()
            .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        Ok(match worst {
            None => BiorthogonalityReport {
                n_max,
                max_deviation: Scalar::zero(self.mode),
                max_abs: 0.0,
                worst_pair: None,
            },
            Some((mag, d, n, m)) => BiorthogonalityReport {
                n_max,
                max_deviation: d,
                max_abs: mag,
                worst_pair: Some((n, m)),
            },
        })
    }
}

#[derive(Debug, Clone)]
pub struct BiorthogonalityReport {
    pub n_max: usize,
    /// Deviation `<x_n, y_m> - delta_nm` of largest magnitude (zero if none).
    pub max_deviation: Scalar,
    pub max_abs: f64,
    pub worst_pair: Option<(usize, usize)>,
}

impl BiorthogonalityReport {
    pub fn is_exact_zero(&self) -> bool {
        self.max_deviation.is_exact() && self.max_deviation.is_zero()
    }
}

/// The sequence-space inner product.
pub fn dot(u: &SparseVec, v: &SparseVec) -> Result<Scalar> {
    Ok(u.dot(v)?)
}
