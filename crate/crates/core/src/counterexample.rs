//! The witnesses `u`, `v` and the checks built on them.
//!
//! `f = J(u)` is odd, `g = J(v)` is orthogonal to every odd monomial, and
//! `<f, g> = 1`. By Cauchy-Schwarz every odd polynomial `p` of degree at most
//! `2N+1` satisfies `||f - p|| >= 1/||v_N||`, so no summability method built
//! from Taylor partial sums can converge to `f`, while the full polynomial
//! span still contains `f_M` exactly.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mbasis::WeightMode;
use crate::project::{Generator, ProjectionOptions, ProjectionResult};
use crate::report::{CheckRecord, DistanceRow, DistanceTable, Section, Status};
use crate::scalar::{Mode, Rational, Scalar};
use crate::space::{HFunction, SpaceHandle};
use crate::sparse::SparseVec;
use crate::variants::IndexMap;

/// Truncated witnesses `u_M`, `v_N` with norm bounds on what was cut off.
#[derive(Debug, Clone)]
pub struct WitnessPair {
    pub level_m: usize,
    pub level_n: usize,
    pub u: SparseVec,
    pub v: SparseVec,
    /// `(sum_{j > M} eta_j^2)^{1/2}`, infinite for custom weight lists.
    pub u_tail: f64,
    pub v_tail: f64,
}

impl WitnessPair {
    pub fn f(&self) -> HFunction {
        HFunction::new(self.u.clone(), self.u_tail)
    }

    pub fn g(&self) -> HFunction {
        HFunction::new(self.v.clone(), self.v_tail)
    }
}

/// Largest sequence index touched by the witness checks at levels `m`, `n`.
pub fn required_index(m: usize, n: usize) -> usize {
    (2 * m + 1).max(2 * n + 3)
}

fn need_index(space: &SpaceHandle, what: &'static str, n: usize) -> Result<()> {
    if n > space.max_index() {
        return Err(Error::IndexOutOfRange {
            what,
            index: n,
            available: space.max_index(),
        });
    }
    Ok(())
}

/// `u_M = sum_{j <= M} eta_j e_{2j+1}`.
pub fn u_vector(space: &SpaceHandle, m: usize) -> Result<SparseVec> {
    let cache = space.cache();
    let mut u = SparseVec::zero(space.mode());
    for j in 0..=m {
        u.set(2 * j + 1, cache.eta(j)?.clone())?;
    }
    Ok(u)
}

/// `v_N = (1/eta_0) e_1 + sum_{k <= N} eta_k e_{2k}`.
pub fn v_vector(space: &SpaceHandle, n: usize) -> Result<SparseVec> {
    let cache = space.cache();
    let mut v = SparseVec::zero(space.mode());
    v.set(1, cache.eta(0)?.try_recip()?)?;
    for k in 0..=n {
        v.set(2 * k, cache.eta(k)?.clone())?;
    }
    Ok(v)
}

pub fn make_witnesses(space: &SpaceHandle, m: usize, n: usize) -> Result<WitnessPair> {
    need_index(space, "witness", required_index(m, n))?;
    let w = space.weights();
    Ok(WitnessPair {
        level_m: m,
        level_n: n,
        u: u_vector(space, m)?,
        v: v_vector(space, n)?,
        u_tail: w.eta_sq_tail_bound(m).sqrt(),
        v_tail: w.eta_sq_tail_bound(n).sqrt(),
    })
}

/// `sum |a_i| |b_i|`, the natural magnitude for a tolerance on `<a, b>`.
fn abs_dot(a: &SparseVec, b: &SparseVec) -> f64 {
    a.iter()
        .filter_map(|(i, x)| b.get(i).map(|y| (x.to_f64() * y.to_f64()).abs()))
        .sum()
}

/// Exact zero test, or `|value| <= tol * max(1, scale)` in approx mode.
pub fn negligible(value: &Scalar, scale: f64, tol: f64) -> bool {
    match value {
        Scalar::Approx(x) => x.abs() <= tol * scale.max(1.0),
        _ => value.is_zero(),
    }
}

fn same_value(a: &Scalar, b: &Scalar, tol: f64) -> Result<bool> {
    let d = a.try_sub(b)?;
    Ok(negligible(&d, a.to_f64().abs().max(b.to_f64().abs()), tol))
}

/// `f_M` has no coefficient at the degrees `sigma(2n)`, `n <= up_to <= M-1`.
/// Also reports the boundary value at `sigma(2M)`, which is non-zero and at
/// most `eta_M` in modulus.
pub fn check_f_odd(space: &SpaceHandle, pair: &WitnessPair, up_to: usize, tol: f64) -> Result<Section> {
    let m = pair.level_m;
    if m == 0 || up_to > m - 1 {
        return Err(Error::OutsideWindow {
            what: "vanishing of f at even indices",
            requested: up_to,
            limit: m.saturating_sub(1),
        });
    }
    let mut s = Section::new("f_odd");
    let mut offending = Vec::new();
    let mut worst = 0.0f64;
    for n in 0..=up_to {
        let y = space.cache().y_vec(2 * n)?;
        let raw = pair.u.dot(&y)?;
        worst = worst.max(raw.to_f64().abs());
        if !negligible(&raw, abs_dot(&pair.u, &y), tol) {
            offending.push(format!("degree {}: {}", space.degree_of(2 * n)?, raw));
        }
    }
    s.push(
        CheckRecord::new("f_even_coefficients_vanish", Status::Pass)
            .with_value(worst)
            .with_window(format!("n <= {up_to}"))
            .with_offending(offending),
    );

    let boundary = space.coefficient_at_index(&pair.u, 2 * m)?;
    let eta_m = space.cache().eta(m)?.to_f64();
    let ok = !boundary.is_zero() && boundary.to_f64().abs() <= eta_m * (1.0 + 1e-12);
    s.push(
        CheckRecord::new("f_boundary_residual", Status::from_bool(ok))
            .with_scalar(&boundary)
            .with_bound(eta_m)
            .with_window(format!("degree {}", space.degree_of(2 * m)?))
            .with_note("truncation artifact at the first index outside the window"),
    );
    Ok(s)
}

/// `<x_{2n+1}, v_N> = 0` for `n <= up_to <= N`; the first value outside the
/// window must equal `eta_N b_{N+1}`.
pub fn check_g_perp_odd(space: &SpaceHandle, pair: &WitnessPair, up_to: usize, tol: f64) -> Result<Section> {
    let big_n = pair.level_n;
    if up_to > big_n {
        return Err(Error::OutsideWindow {
            what: "orthogonality of g to odd monomials",
            requested: up_to,
            limit: big_n,
        });
    }
    let cache = space.cache();
    let mut s = Section::new("g_perp_odd");
    let mut offending = Vec::new();
    let mut worst = 0.0f64;
    for n in 0..=up_to {
        let x = cache.x_vec(2 * n + 1)?;
        let val = x.dot(&pair.v)?;
        worst = worst.max(val.to_f64().abs());
        if !negligible(&val, abs_dot(&x, &pair.v), tol) {
            offending.push(format!("degree {}: {}", space.degree_of(2 * n + 1)?, val));
        }
    }
    s.push(
        CheckRecord::new("g_orthogonal_to_odd_monomials", Status::Pass)
            .with_value(worst)
            .with_window(format!("n <= {up_to}"))
            .with_offending(offending),
    );

    let boundary = cache.x_vec(2 * big_n + 3)?.dot(&pair.v)?;
    let expected = cache.eta(big_n)?.try_mul(cache.b(big_n + 1)?)?;
    let ok = !boundary.is_zero() && same_value(&boundary, &expected, tol)?;
    s.push(
        CheckRecord::new("g_boundary_term", Status::from_bool(ok))
            .with_scalar(&boundary)
            .with_window(format!("degree {}", space.degree_of(2 * big_n + 3)?))
            .with_note("equals eta_N b_(N+1)"),
    );
    Ok(s)
}

/// `<f_M, g_N> = 1`.
pub fn check_pairing(space: &SpaceHandle, pair: &WitnessPair, tol: f64) -> Result<CheckRecord> {
    let p = space.inner_product(&pair.f(), &pair.g())?;
    let ok = same_value(&p, &Scalar::one(space.mode()), tol)?;
    Ok(CheckRecord::new("pairing", Status::from_bool(ok))
        .with_scalar(&p)
        .with_window(format!("M = {}, N = {}", pair.level_m, pair.level_n)))
}

/// Cauchy-Schwarz lower bound for distances to odd polynomials.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub level: usize,
    /// `||v_level||^2`, rational in exact mode.
    pub v_norm_sq: Scalar,
    /// `1/||v_level||`, valid for odd polynomials of degree `<= 2 level + 1`.
    pub bound: f64,
    /// `1/(||v_level||^2 + tail^2)^{1/2} <= 1/||v||`, valid for the whole
    /// closed odd span.
    pub infinite_bound: f64,
}

impl Certificate {
    /// `1/||v_level||^2`.
    pub fn bound_sq(&self) -> Result<Scalar> {
        Ok(self.v_norm_sq.try_recip()?)
    }
}

pub fn certificate_at(space: &SpaceHandle, level: usize) -> Result<Certificate> {
    let cache = space.cache();
    let mut sum = cache.eta_sq(0)?.recip();
    for k in 0..=level {
        sum += cache.eta_sq(k)?;
    }
    let v_norm_sq = Scalar::from_rational(sum, space.mode());
    let ns = v_norm_sq.to_f64();
    let tail = space.weights().eta_sq_tail_bound(level);
    Ok(Certificate {
        level,
        bound: 1.0 / ns.sqrt(),
        infinite_bound: 1.0 / (ns + tail).sqrt(),
        v_norm_sq,
    })
}

/// `1/||v_N||` for the pair's level `N`.
pub fn odd_span_distance_bound(space: &SpaceHandle, pair: &WitnessPair) -> Result<Certificate> {
    certificate_at(space, pair.level_n)
}

pub fn x_generators(space: &SpaceHandle, indices: impl Iterator<Item = usize>) -> Result<Vec<Generator>> {
    indices
        .map(|n| Ok(Generator::new(format!("x_{n}"), space.cache().x_vec(n)?)))
        .collect()
}

/// Projects `f_m` onto `x_n` for `n` in `indices`.
///
/// The generators are linearly independent, so an approx projection that
/// drops a pivot (or fails its conditioning checks) has misjudged the rank.
/// Such a projection is recomputed in exact arithmetic and flagged.
pub fn project_witness(
    space: &SpaceHandle,
    m: usize,
    indices: &[usize],
    opts: &ProjectionOptions,
) -> Result<(ProjectionResult, bool)> {
    let gens = x_generators(space, indices.iter().copied())?;
    let f = HFunction::exact(u_vector(space, m)?);
    match space.project(&f, &gens, opts) {
        Ok(p) if space.mode() == Mode::Exact || p.rank == gens.len() => return Ok((p, false)),
        Ok(_) | Err(Error::Conditioning(_)) | Err(Error::ResidualMismatch { .. }) => {}
        Err(e) => return Err(e),
    }
    let top = indices.iter().copied().max().unwrap_or(0).max(2 * m + 1);
    let exact = SpaceHandle::new(space.weights().clone(), Mode::Exact, top)?;
    let gens = x_generators(&exact, indices.iter().copied())?;
    let f = HFunction::exact(u_vector(&exact, m)?);
    Ok((exact.project(&f, &gens, opts)?, true))
}

pub const ESCALATION_NOTE: &str = "approx projection lost rank; recomputed in exact arithmetic";

#[derive(Debug, Clone)]
pub struct HeadlineRow {
    pub k: usize,
    pub dist_sq: Scalar,
    pub dist: f64,
    pub certificate: Certificate,
    pub dominates: bool,
    pub rank: usize,
    pub escalated: bool,
}

#[derive(Debug, Clone)]
pub struct HeadlineReport {
    pub full_span: ProjectionResult,
    pub full_span_escalated: bool,
    pub rows: Vec<HeadlineRow>,
    pub nonincreasing: bool,
}

impl HeadlineReport {
    pub fn passed(&self) -> bool {
        self.full_span.dist_sq.is_zero() || self.full_span.dist() <= 1e-9
    }

    pub fn to_section(&self, space: &SpaceHandle, m: usize) -> Result<Section> {
        let mut s = Section::new("headline");
        let top = space.degree_of(2 * m + 1)?;
        let full_zero = match &self.full_span.dist_sq {
            Scalar::Approx(d) => d.abs() <= 1e-18 * self.full_span.f_norm_sq.to_f64().max(1.0),
            d => d.is_zero(),
        };
        let mut full = CheckRecord::new("full_span_distance_sq", Status::from_bool(full_zero))
            .with_scalar(&self.full_span.dist_sq)
            .with_window(format!("span of monomials indexed 0..={}, top degree {top}", 2 * m + 1));
        if self.full_span_escalated {
            full = full.with_note(ESCALATION_NOTE);
        }
        s.push(full);
        for r in &self.rows {
            let mut rec = CheckRecord::new(format!("odd_span_distance_sq_k{}", r.k), Status::from_bool(r.dominates))
                .with_scalar(&r.dist_sq)
                .with_bound(r.certificate.bound * r.certificate.bound)
                .with_window(format!("odd indices <= {}", 2 * r.k + 1));
            if r.escalated {
                rec = rec.with_note(ESCALATION_NOTE);
            }
            s.push(rec);
        }
        s.push(CheckRecord::new("odd_span_nonincreasing", Status::from_bool(self.nonincreasing)));
        Ok(s)
    }

    pub fn to_table(&self, m: usize) -> DistanceTable {
        let mut t = DistanceTable::new("headline");
        t.rows.push(DistanceRow {
            method: "full_span".into(),
            level: (2 * m + 1).to_string(),
            exact: bounded_exact(&self.full_span.dist_sq),
            value: self.full_span.dist(),
            bound: None,
            slack: 0.0,
            status: Status::Info,
            note: self.full_span_escalated.then(|| ESCALATION_NOTE.to_string()),
        });
        for r in &self.rows {
            t.rows.push(DistanceRow {
                method: "odd_span".into(),
                level: (2 * r.k + 1).to_string(),
                exact: bounded_exact(&r.dist_sq),
                value: r.dist,
                bound: Some(r.certificate.bound),
                slack: 0.0,
                status: Status::from_bool(r.dominates),
                note: r.escalated.then(|| ESCALATION_NOTE.to_string()),
            });
        }
        t
    }
}

fn bounded_exact(s: &Scalar) -> Option<String> {
    s.is_exact()
        .then(|| s.exact_string())
        .filter(|e| e.len() <= MAX_EXACT_LEN)
}

fn dominates(dist_sq: &Scalar, bound_sq: &Scalar) -> Result<bool> {
    Ok(match dist_sq {
        Scalar::Approx(d) => *d >= bound_sq.to_f64() * (1.0 - 1e-9),
        _ => dist_sq.cmp_value(bound_sq)? != std::cmp::Ordering::Less,
    })
}

/// Distance from `f_M` to the full span `x_0..x_{2M+1}` (zero) and to the
/// odd spans `x_1, x_3, .., x_{2k+1}` for each `k` in `levels`.
pub fn headline_contrast(
    space: &SpaceHandle,
    pair: &WitnessPair,
    levels: &[usize],
    opts: &ProjectionOptions,
) -> Result<HeadlineReport> {
    let m = pair.level_m;
    need_index(space, "headline", 2 * m + 1)?;
    if let Some(&k) = levels.iter().max() {
        need_index(space, "headline", 2 * k + 1)?;
    }
    let all: Vec<usize> = (0..=2 * m + 1).collect();
    let (full, full_span_escalated) = project_witness(space, m, &all, opts)?;
    let rows: Vec<HeadlineRow> = levels
        .par_iter()
        .map(|&k| {
            let odd: Vec<usize> = (0..=k).map(|j| 2 * j + 1).collect();
            let (p, escalated) = project_witness(space, m, &odd, opts)?;
            let certificate = certificate_at(space, k)?;
            let dominates = dominates(&p.dist_sq, &certificate.bound_sq()?)?;
            Ok(HeadlineRow {
                k,
                dist: p.dist(),
                dist_sq: p.dist_sq,
                certificate,
                dominates,
                rank: p.rank,
                escalated,
            })
        })
        .collect::<Result<_>>()?;
    let mut sorted: Vec<&HeadlineRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.k);
    let nonincreasing = sorted.windows(2).all(|w| w[1].dist <= w[0].dist * (1.0 + 1e-12));
    Ok(HeadlineReport {
        full_span: full,
        full_span_escalated,
        rows,
        nonincreasing,
    })
}

/// Something whose Taylor coefficients can be queried index by index.
pub trait TaylorSource: Sync {
    /// `<x, y_n>` for the representative `x`: the coefficient at degree
    /// `sigma(n)` times the monomial scale.
    fn y_coefficient(&self, space: &SpaceHandle, n: usize) -> Result<Scalar>;

    /// `(c, beta)` with `|<x, y_n>| ||x_n|| <= c (n+1)^beta` for every `n`.
    fn envelope(&self, space: &SpaceHandle) -> Option<(f64, f64)>;
}

impl TaylorSource for HFunction {
    fn y_coefficient(&self, space: &SpaceHandle, n: usize) -> Result<Scalar> {
        Ok(self.coords().dot(&space.cache().y_vec(n)?)?)
    }

    fn envelope(&self, space: &SpaceHandle) -> Option<(f64, f64)> {
        let mut c = 0.0f64;
        for n in SpaceHandle::touching_indices(self.coords()) {
            let raw = self.y_coefficient(space, n).ok()?;
            let xn = space.cache().norm_sq_x(n).ok()?.to_f64().sqrt();
            c = c.max(raw.to_f64().abs() * xn);
        }
        Some((c * (1.0 + 1e-12), 0.0))
    }
}

/// The untruncated witness `f = J(u)`: coefficient `eta_j` at index `2j+1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct WitnessF;

impl TaylorSource for WitnessF {
    fn y_coefficient(&self, space: &SpaceHandle, n: usize) -> Result<Scalar> {
        if n % 2 == 1 {
            Ok(space.cache().eta(n / 2)?.clone())
        } else {
            Ok(Scalar::zero(space.mode()))
        }
    }

    fn envelope(&self, space: &SpaceHandle) -> Option<(f64, f64)> {
        match space.weights().mode {
            // eta_j ||x_{2j+1}|| <= (1 + a_j + b_j)/(j+1) <= 3(j+1)
            WeightMode::EtaReciprocal => Some((3.0, 1.0)),
            // eta_j^2 <= 8 and ||x_n|| <= ||z^n|| <= 1 + omega_n <= 2 (n+1)^alpha
            WeightMode::OmegaPower { exponent } => Some((2.0 * 8f64.sqrt(), exponent as f64)),
            _ => None,
        }
    }
}

/// Indices whose degrees lie in `lo..=hi`.
pub fn indices_for_degrees(space: &SpaceHandle, lo: i64, hi: i64) -> Result<Vec<usize>> {
    (lo..=hi).map(|d| space.index_of(d)).collect()
}

fn combine(space: &SpaceHandle, src: &dyn TaylorSource, weighted: &[(usize, Scalar)]) -> Result<SparseVec> {
    let cache = space.cache();
    let mut out = SparseVec::zero(space.mode());
    for (n, w) in weighted {
        if w.is_zero() {
            continue;
        }
        let c = src.y_coefficient(space, *n)?;
        if c.is_zero() {
            continue;
        }
        out.axpy(&c.try_mul(w)?, &cache.x_vec(*n)?)?;
    }
    Ok(out)
}

/// `s_k(f)`: the Taylor terms of degree `0..=k`.
pub fn partial_sum(space: &SpaceHandle, src: &dyn TaylorSource, k: i64) -> Result<HFunction> {
    if k < 0 {
        return Ok(HFunction::exact(SparseVec::zero(space.mode())));
    }
    let one = Scalar::one(space.mode());
    let w: Vec<(usize, Scalar)> = indices_for_degrees(space, 0, k)?
        .into_iter()
        .map(|n| (n, one.clone()))
        .collect();
    Ok(HFunction::exact(combine(space, src, &w)?))
}

#[derive(Debug, Clone)]
pub struct GrowthRow {
    pub k: usize,
    pub norm_sq: Scalar,
    pub norm: f64,
    /// `||s_k(f)||^{1/k}`.
    pub root: f64,
    /// `sum_{n <= k} |f^(n)| ||z^n||`.
    pub triangle_bound: f64,
}

/// `||s_k(f)||` and its `k`-th root for `k` in `k_min..=k_max` (identity map).
pub fn partial_sum_norm_growth(
    space: &SpaceHandle,
    src: &dyn TaylorSource,
    k_min: usize,
    k_max: usize,
) -> Result<Vec<GrowthRow>> {
    if space.sigma() != &IndexMap::Identity {
        return Err(Error::Unsupported("partial-sum growth is tabulated for the identity index map".into()));
    }
    if !(space.weights().is_omega() && space.weights().nth_root_limit_one) {
        return Err(Error::WrongWeightMode {
            expected: "weights with omega_n^(1/n) -> 1",
            actual: space.weights().label(),
        });
    }
    need_index(space, "partial sums", k_max)?;
    let cache = space.cache();
    let mut coords = SparseVec::zero(space.mode());
    let mut triangle = 0.0f64;
    let mut rows = Vec::new();
    for n in 0..=k_max {
        let c = src.y_coefficient(space, n)?;
        if !c.is_zero() {
            coords.axpy(&c, &cache.x_vec(n)?)?;
            triangle += c.to_f64().abs() * cache.norm_sq_x(n)?.to_f64().sqrt();
        }
        if n >= k_min.max(1) {
            let norm_sq = coords.norm_sq()?;
            let norm = norm_sq.to_f64().max(0.0).sqrt();
            rows.push(GrowthRow {
                k: n,
                norm_sq,
                norm,
                root: norm.powf(1.0 / n as f64),
                triangle_bound: triangle,
            });
        }
    }
    Ok(rows)
}

/// Coefficient array of a summability method.
#[derive(Debug, Clone, PartialEq)]
pub enum SummabilityVector {
    /// `c_nk = [k = n]`, giving `s_n(f)`.
    Taylor,
    /// `c_nk = 1/(n+1)`.
    Cesaro,
    /// Explicit rows; `rows[i]` holds `c_{n k}` for `k = 0..=n` with `n = rows[i].len() - 1`.
    Triangular { label: String, rows: Vec<Vec<Rational>> },
    /// `T(f) = sum_k c_k s_k(f)` with `|c_k| <= envelope_c * radius^k` declared for all `k`.
    PowerDecay {
        label: String,
        coeffs: Vec<Rational>,
        envelope_c: f64,
        radius: f64,
    },
    /// `c_k = (1-r) r^k`; the sum is the dilate `f_r`.
    Abel { r: Rational },
}

impl SummabilityVector {
    pub fn label(&self) -> String {
        match self {
            SummabilityVector::Taylor => "taylor".into(),
            SummabilityVector::Cesaro => "cesaro".into(),
            SummabilityVector::Triangular { label, .. } | SummabilityVector::PowerDecay { label, .. } => label.clone(),
            SummabilityVector::Abel { r } => format!("abel(r={})", crate::scalar::format_rational(r)),
        }
    }

    pub fn is_series(&self) -> bool {
        matches!(self, SummabilityVector::PowerDecay { .. } | SummabilityVector::Abel { .. })
    }

    /// Row `n` of a triangular method.
    pub fn row(&self, n: usize) -> Result<Vec<Rational>> {
        match self {
            SummabilityVector::Taylor => {
                let mut r = vec![Rational::zero(); n + 1];
                r[n] = Rational::one();
                Ok(r)
            }
            SummabilityVector::Cesaro => Ok(vec![Rational::new(BigInt::one(), BigInt::from(n + 1)); n + 1]),
            SummabilityVector::Triangular { rows, .. } => rows
                .iter()
                .find(|r| r.len() == n + 1)
                .cloned()
                .ok_or_else(|| Error::Unsupported(format!("no row of length {} in {}", n + 1, self.label()))),
            _ => Err(Error::Unsupported(format!("{} is not triangular", self.label()))),
        }
    }

    /// `(C, rho)` with `|c_k| <= C rho^k`.
    fn decay(&self) -> Option<(f64, f64)> {
        match self {
            SummabilityVector::Abel { r } => {
                let rf = Scalar::Rational(r.clone()).to_f64();
                Some((1.0 - rf, rf))
            }
            SummabilityVector::PowerDecay { envelope_c, radius, .. } => Some((*envelope_c, *radius)),
            _ => None,
        }
    }

    /// `c_0..=c_K` (series) or row `K` (triangular) as integers `C_k = D c_k`
    /// over a common denominator `D`.
    pub fn scaled_coefficients(&self, k_max: usize) -> Result<(Vec<BigInt>, BigInt)> {
        match self {
            SummabilityVector::Abel { r } => {
                let (p, q) = (r.numer().clone(), r.denom().clone());
                if !(p.is_positive() && p < q) {
                    return Err(Error::Config(format!("Abel radius {} is not in (0, 1)", self.label())));
                }
                // C_k = (q - p) p^k q^{K-k}, D = q^{K+1}
                let q_pows = powers(&q, k_max + 1);
                let mut p_pow = BigInt::one();
                let mut c = Vec::with_capacity(k_max + 1);
                for k in 0..=k_max {
                    c.push((&q - &p) * &p_pow * &q_pows[k_max - k]);
                    p_pow *= &p;
                }
                Ok((c, q_pows[k_max + 1].clone()))
            }
            SummabilityVector::PowerDecay { coeffs, .. } => {
                if coeffs.len() <= k_max {
                    return Err(Error::OutsideWindow {
                        what: "declared series coefficients",
                        requested: k_max,
                        limit: coeffs.len().saturating_sub(1),
                    });
                }
                Ok(common_denominator(&coeffs[..=k_max]))
            }
            _ => Ok(common_denominator(&self.row(k_max)?)),
        }
    }
}

fn powers(base: &BigInt, top: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(top + 1);
    let mut acc = BigInt::one();
    for _ in 0..=top {
        out.push(acc.clone());
        acc *= base;
    }
    out
}

fn common_denominator(values: &[Rational]) -> (Vec<BigInt>, BigInt) {
    let d = values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let scaled = values.iter().map(|v| v.numer() * (&d / v.denom())).collect();
    (scaled, d)
}

/// Bound on `sum_{k > K} C rho^k ||s_k(f)||` using `||s_k(f)|| <= c (k+1)^{beta+1}`.
/// Consecutive terms shrink by at most `q = rho ((K+3)/(K+2))^{beta+1}`.
pub fn series_tail_bound(envelope: (f64, f64), decay: (f64, f64), k: usize) -> Option<f64> {
    let (c, beta) = envelope;
    let (big_c, rho) = decay;
    if !(0.0..1.0).contains(&rho) {
        return None;
    }
    let p = beta + 1.0;
    let kf = k as f64;
    let q = rho * ((kf + 3.0) / (kf + 2.0)).powf(p);
    if q >= 1.0 {
        return None;
    }
    // Work in logs: rho^{K+1} underflows long before the product does.
    let log_first = big_c.ln() + (kf + 1.0) * rho.ln() + c.ln() + p * (kf + 2.0).ln();
    Some(log_first.exp() / (1.0 - q))
}

/// Smallest truncation `K` whose series tail is below `target`.
pub fn choose_truncation(envelope: (f64, f64), decay: (f64, f64), target: f64) -> Result<usize> {
    const CAP: usize = 1 << 20;
    let ok = |k: usize| series_tail_bound(envelope, decay, k).is_some_and(|t| t <= target);
    let mut hi = 1usize;
    while !ok(hi) {
        hi *= 2;
        if hi > CAP {
            return Err(Error::NonSummable(format!(
                "series tail stays above {target:e} up to truncation {CAP}"
            )));
        }
    }
    // The bound is eventually decreasing; bisect on the first success.
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `T(f)` stored as `D T(f)`: weights over a huge common denominator (such
/// as `q^{K+1}` for an Abel radius `p/q`) would make every exact addition
/// pay for a gcd of that size, so `D` is divided out only once at the end.
#[derive(Debug, Clone)]
pub struct SummabilityOutput {
    /// `D T(f)` in exact mode, `T(f)` itself in approx mode.
    pub scaled: SparseVec,
    /// `D` (exact) or 1 (approx).
    pub denom: BigInt,
    /// `D w_j` with `w_j = sum_{k >= j} c_k`.
    pub scaled_weights: Vec<BigInt>,
    pub truncation: Option<usize>,
    pub series_tail: f64,
}

impl SummabilityOutput {
    /// `T(f)` as an `HFunction` carrying the series tail.
    pub fn function(&self) -> Result<HFunction> {
        let mode = self.scaled.mode();
        let inv = Scalar::from_rational(Rational::new(BigInt::one(), self.denom.clone()), mode);
        Ok(HFunction::new(self.scaled.scale(&inv)?, self.series_tail))
    }
}

fn big_ratio_f64(num: &BigInt, den: &BigInt) -> f64 {
    Scalar::Rational(Rational::new_raw(num.clone(), den.clone())).to_f64()
}

/// `T_n(f) = sum_k c_nk s_k(f)`, computed as `sum_j w_j f^(j) z^j` with
/// `w_j = sum_{k >= j} c_nk`. Series methods are cut at `level` (or at the
/// first `K` meeting `tail_target`) and carry the geometric tail estimate.
pub fn apply_summability(
    space: &SpaceHandle,
    src: &dyn TaylorSource,
    method: &SummabilityVector,
    level: Option<usize>,
    tail_target: f64,
) -> Result<SummabilityOutput> {
    if space.sigma() != &IndexMap::Identity {
        return Err(Error::Unsupported("summability methods act on the identity index map".into()));
    }
    let mode = space.mode();
    let (k, truncation, series_tail) = if method.is_series() {
        let envelope = src.envelope(space).ok_or_else(|| {
            Error::NonSummable("no coefficient envelope is known for this function".into())
        })?;
        let decay = method.decay().expect("series methods declare their decay");
        let k = match level {
            Some(k) => k,
            None => choose_truncation(envelope, decay, tail_target)?,
        };
        let tail = series_tail_bound(envelope, decay, k)
            .ok_or_else(|| Error::NonSummable(format!("{} at truncation {k}", method.label())))?;
        (k, Some(k), tail)
    } else {
        let n = level.ok_or_else(|| Error::Unsupported("triangular methods need a row index".into()))?;
        (n, None, 0.0)
    };
    need_index(space, "summability", k)?;
    let (coeffs, denom) = method.scaled_coefficients(k)?;
    let mut scaled_weights = vec![BigInt::zero(); coeffs.len()];
    let mut acc = BigInt::zero();
    for j in (0..coeffs.len()).rev() {
        acc += &coeffs[j];
        scaled_weights[j] = acc.clone();
    }
    let (weights, denom_out): (Vec<Scalar>, BigInt) = match mode {
        Mode::Exact => (
            scaled_weights
                .iter()
                .map(|w| Scalar::from_rational(Rational::from_integer(w.clone()), mode))
                .collect(),
            denom,
        ),
        Mode::Approx => (
            scaled_weights.iter().map(|w| Scalar::Approx(big_ratio_f64(w, &denom))).collect(),
            BigInt::one(),
        ),
    };
    let indexed: Vec<(usize, Scalar)> = weights.into_iter().enumerate().collect();
    let scaled = combine(space, src, &indexed)?;
    Ok(SummabilityOutput {
        scaled,
        denom: denom_out,
        scaled_weights,
        truncation,
        series_tail,
    })
}

/// For `Abel(r)` truncated at `K` the weights must satisfy
/// `sum_{k=j}^K (1-r) r^k = r^j - r^{K+1}` for every `j <= K`, and the
/// coefficient of `T(f)` at each degree `j <= up_to` must be
/// `f^(j) (r^j - r^{K+1})`: the dilate coefficient `f^(j) r^j` up to the
/// explicit remainder. Returns the verdict and the largest coefficient
/// deviation.
pub fn abel_dilate_check(
    space: &SpaceHandle,
    src: &dyn TaylorSource,
    r: &Rational,
    out: &SummabilityOutput,
    up_to: usize,
    tol: f64,
) -> Result<(bool, f64)> {
    let k = out.truncation.ok_or_else(|| Error::Unsupported("not a series output".into()))?;
    let (p, q) = (r.numer().clone(), r.denom().clone());
    let q_pows = powers(&q, k + 1);
    let p_k1 = num_traits::pow(p.clone(), k + 1);
    let mut p_pow = BigInt::one();
    let mut ok = true;
    for j in 0..=k {
        ok &= out.scaled_weights[j] == &p_pow * &q_pows[k + 1 - j] - &p_k1;
        p_pow *= &p;
    }
    let full_denom = &q_pows[k + 1];
    let cache = space.cache();
    let mut worst = 0.0f64;
    for j in 0..=k.min(up_to) {
        let got = out.scaled.dot(&cache.y_vec(j)?)?;
        let w = match space.mode() {
            Mode::Exact => Scalar::from_rational(Rational::from_integer(out.scaled_weights[j].clone()), Mode::Exact),
            Mode::Approx => Scalar::Approx(big_ratio_f64(&out.scaled_weights[j], full_denom)),
        };
        let want = src.y_coefficient(space, j)?.try_mul(&w)?;
        let d = got.try_sub(&want)?;
        let dev = match space.mode() {
            Mode::Exact => big_ratio_f64(&BigInt::one(), &out.denom) * d.to_f64(),
            Mode::Approx => d.to_f64(),
        };
        worst = worst.max(dev.abs());
        ok &= negligible(&d, want.to_f64().abs(), tol);
    }
    Ok((ok, worst))
}

/// The method rows evaluated by `summability_failure_report`.
#[derive(Debug, Clone)]
pub struct SummabilityPlan {
    /// Row indices `n` for Taylor and Cesaro.
    pub rows: Vec<usize>,
    pub radii: Vec<Rational>,
    pub random_rows: usize,
    pub seed: u64,
    /// Degrees `D` for the control projection onto `z^0..z^D`.
    pub control_degrees: Vec<usize>,
    pub tail_target: f64,
}

impl SummabilityPlan {
    pub fn standard(pair: &WitnessPair, seed: u64) -> Self {
        let top = 2 * pair.level_n + 1;
        SummabilityPlan {
            rows: (0..=top).collect(),
            radii: vec![
                Rational::new(BigInt::from(1), BigInt::from(2)),
                Rational::new(BigInt::from(9), BigInt::from(10)),
                Rational::new(BigInt::from(99), BigInt::from(100)),
            ],
            random_rows: 20,
            seed,
            control_degrees: control_degrees(2 * pair.level_m + 1),
            tail_target: 1e-6,
        }
    }

    /// Largest index any row of the plan touches, given the space's weights.
    pub fn required_index(&self, space: &SpaceHandle, pair: &WitnessPair) -> Result<usize> {
        let mut top = required_index(pair.level_m, pair.level_n);
        top = top.max(self.rows.iter().copied().max().unwrap_or(0) + 1);
        if !self.radii.is_empty() {
            let envelope = WitnessF
                .envelope(space)
                .ok_or_else(|| Error::NonSummable("no coefficient envelope for these weights".into()))?;
            for r in &self.radii {
                let method = SummabilityVector::Abel { r: r.clone() };
                let k = choose_truncation(envelope, method.decay().expect("abel decay"), self.tail_target)?;
                top = top.max(k + 1);
            }
        }
        Ok(top)
    }
}

/// `1, 3, 7, 15, ...` up to and including `top`.
pub fn control_degrees(top: usize) -> Vec<usize> {
    let mut d: Vec<usize> = (1..)
        .map(|e: u32| (1usize << e) - 1)
        .take_while(|d| *d < top)
        .collect();
    d.push(top);
    d
}

/// Random rows with non-negative integer entries normalized to sum 1.
pub fn random_triangular_rows(count: usize, max_n: usize, seed: u64) -> Vec<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_n.max(1));
            let mut raw: Vec<u32> = (0..=n).map(|_| rng.gen_range(0..=1000)).collect();
            if raw.iter().all(|x| *x == 0) {
                raw[n] = 1;
            }
            let total: u64 = raw.iter().map(|x| *x as u64).sum();
            raw.into_iter()
                .map(|x| Rational::new(BigInt::from(x), BigInt::from(total)))
                .collect()
        })
        .collect()
}

/// `||T - f||` against `f_{M'}` with `M'` large enough to cover `T`, plus
/// the certificate for the odd polynomial `T`.
pub(crate) fn distance_row(
    space: &SpaceHandle,
    pair: &WitnessPair,
    method: &str,
    level: String,
    out: &SummabilityOutput,
) -> Result<DistanceRow> {
    let coords = &out.scaled;
    let top = coords.max_index().unwrap_or(0);
    let mut odd_only = true;
    for n in SpaceHandle::touching_indices(coords).into_iter().filter(|n| n % 2 == 0) {
        let y = space.cache().y_vec(n)?;
        if !negligible(&coords.dot(&y)?, abs_dot(coords, &y), 1e-10) {
            odd_only = false;
            break;
        }
    }
    let m_ref = pair.level_m.max(top / 2);
    let reference = if m_ref == pair.level_m {
        pair.u.clone()
    } else {
        u_vector(space, m_ref)?
    };
    let u_tail = space.weights().eta_sq_tail_bound(m_ref).sqrt();
    let mode = space.mode();
    let d = Scalar::from_rational(Rational::from_integer(out.denom.clone()), mode);
    let diff = coords.try_sub(&reference.scale(&d)?)?;
    let dist_sq = diff.norm_sq()?.try_div(&d.try_mul(&d)?)?;
    let value = dist_sq.to_f64().max(0.0).sqrt();
    let slack = u_tail + out.series_tail;
    let bound = if !odd_only {
        None
    } else if out.truncation.is_some() {
        Some(certificate_at(space, pair.level_n)?.infinite_bound)
    } else {
        Some(certificate_at(space, top.saturating_sub(1) / 2)?.bound)
    };
    let status = match bound {
        Some(b) => Status::from_bool(value >= b - slack),
        None => Status::Fail,
    };
    let exact = dist_sq
        .is_exact()
        .then(|| dist_sq.exact_string())
        .filter(|e| e.len() <= MAX_EXACT_LEN);
    Ok(DistanceRow {
        method: method.to_string(),
        level,
        exact,
        value,
        bound,
        slack,
        status,
        note: None,
    })
}

pub use crate::report::MAX_EXACT_LEN;

/// `||T_n(f) - f||` for Taylor, Cesaro, Abel and random triangular rows, each
/// compared with the odd-span certificate, followed by the control projection
/// of `f_M` onto full polynomial spans.
pub fn summability_failure_report(
    space: &SpaceHandle,
    pair: &WitnessPair,
    plan: &SummabilityPlan,
    opts: &ProjectionOptions,
) -> Result<DistanceTable> {
    let src = WitnessF;
    let mut jobs: Vec<(String, String, SummabilityVector, Option<usize>)> = Vec::new();
    for n in &plan.rows {
        jobs.push(("taylor".into(), n.to_string(), SummabilityVector::Taylor, Some(*n)));
    }
    for n in &plan.rows {
        jobs.push(("cesaro".into(), n.to_string(), SummabilityVector::Cesaro, Some(*n)));
    }
    for r in &plan.radii {
        let m = SummabilityVector::Abel { r: r.clone() };
        jobs.push(("abel".into(), crate::scalar::format_rational(r), m, None));
    }
    let max_row = plan.rows.iter().copied().max().unwrap_or(2 * pair.level_n + 1);
    for (i, row) in random_triangular_rows(plan.random_rows, max_row, plan.seed)
        .into_iter()
        .enumerate()
    {
        let n = row.len() - 1;
        let m = SummabilityVector::Triangular {
            label: format!("random_{i}"),
            rows: vec![row],
        };
        jobs.push(("random_triangular".into(), format!("{i}:n={n}"), m, Some(n)));
    }
    let mut rows: Vec<DistanceRow> = jobs
        .par_iter()
        .map(|(method, level, vector, n)| {
            let out = apply_summability(space, &src, vector, *n, plan.tail_target)?;
            distance_row(space, pair, method, level.clone(), &out)
        })
        .collect::<Result<_>>()?;

    let control: Vec<DistanceRow> = plan
        .control_degrees
        .par_iter()
        .map(|&d| {
            let all: Vec<usize> = (0..=d).collect();
            let (p, escalated) = project_witness(space, pair.level_m, &all, opts)?;
            Ok(DistanceRow {
                note: escalated.then(|| ESCALATION_NOTE.to_string()),
                method: "control_full_span".into(),
                level: d.to_string(),
                exact: p
                    .dist_sq
                    .is_exact()
                    .then(|| p.dist_sq.exact_string())
                    .filter(|e| e.len() <= MAX_EXACT_LEN),
                value: p.dist(),
                bound: None,
                slack: pair.u_tail,
                status: Status::Info,
            })
        })
        .collect::<Result<_>>()?;
    let decreasing = control.windows(2).all(|w| w[1].value <= w[0].value * (1.0 + 1e-12));
    let n_control = control.len();
    for (i, mut row) in control.into_iter().enumerate() {
        if i + 1 == n_control {
            row.status = Status::from_bool(decreasing && row.value < 0.01);
        }
        rows.push(row);
    }
    Ok(DistanceTable {
        name: "summability".into(),
        rows,
    })
}
