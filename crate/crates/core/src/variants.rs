//! Support-set and Fourier variants of the construction.
//!
//! Replacing `z^n` by `z^{sigma(n)}` for a permutation `sigma` that sends odd
//! arguments into a set `I` and even arguments into its complement transports
//! every identity of the base construction. With `sigma` a bijection onto the
//! integers and damping `2^{-n}`, the same vectors describe a space of Fourier
//! series in which holomorphic polynomials fail to be dense in `H ∩ H^2`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::One;

use crate::counterexample::{
    check_f_odd, check_g_perp_odd, check_pairing, distance_row, headline_contrast, indices_for_degrees, negligible,
    SummabilityOutput, TaylorSource, WitnessF, WitnessPair,
};
use crate::error::{Error, Result};
use crate::mbasis::WeightSpec;
use crate::project::ProjectionOptions;
use crate::report::{CheckRecord, Section, Status};
use crate::scalar::{Mode, Rational, Scalar};
use crate::space::{Embedding, HFunction, NormStatus, SpaceHandle};
use crate::sparse::SparseVec;

/// Membership rule for a subset `I` of the non-negative integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SupportSpec {
    Evens,
    Odds,
    Squares,
    /// Explicit members below `prefix_len`, then `k ∈ I` iff `k % period ∈ residues`.
    Custom {
        members: Vec<usize>,
        prefix_len: usize,
        period: usize,
        residues: Vec<usize>,
    },
}

impl SupportSpec {
    pub fn contains(&self, k: usize) -> bool {
        match self {
            SupportSpec::Evens => k % 2 == 0,
            SupportSpec::Odds => k % 2 == 1,
            SupportSpec::Squares => {
                let r = (k as f64).sqrt() as usize;
                (r.saturating_sub(1)..=r + 1).any(|s| s * s == k)
            }
            SupportSpec::Custom {
                members,
                prefix_len,
                period,
                residues,
            } => {
                if k < *prefix_len {
                    members.contains(&k)
                } else {
                    *period > 0 && residues.contains(&(k % period))
                }
            }
        }
    }

    /// Analytic flag: `I` and its complement are both infinite.
    pub fn both_infinite_certificate(&self) -> bool {
        match self {
            SupportSpec::Custom { period, residues, .. } => {
                if *period == 0 {
                    return false;
                }
                let mut classes: Vec<usize> = residues.iter().map(|r| r % period).collect();
                classes.sort_unstable();
                classes.dedup();
                !classes.is_empty() && classes.len() < *period
            }
            _ => true,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SupportSpec::Evens => "evens".into(),
            SupportSpec::Odds => "odds".into(),
            SupportSpec::Squares => "squares".into(),
            SupportSpec::Custom { period, residues, .. } => {
                format!("custom(period={period}, residues={residues:?})")
            }
        }
    }
}

/// Relabelling of the sequence index `n` as a Taylor degree or Fourier frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexMap {
    Identity,
    /// Permutation of the non-negative integers, tabulated for arguments `<= bound`.
    Permutation {
        forward: Vec<usize>,
        inverse: HashMap<usize, usize>,
    },
    /// Odd `2j+1 -> j`, even `2j -> -(j+1)`.
    ToIntegers,
}

impl IndexMap {
    pub fn forward(&self, n: usize) -> Result<i64> {
        match self {
            IndexMap::Identity => Ok(n as i64),
            IndexMap::Permutation { forward, .. } => forward.get(n).map(|k| *k as i64).ok_or_else(|| {
                Error::IndexMap(format!(
                    "argument {n} beyond tabulated bound {}",
                    forward.len().saturating_sub(1)
                ))
            }),
            IndexMap::ToIntegers => {
                let j = (n / 2) as i64;
                Ok(if n % 2 == 1 { j } else { -(j + 1) })
            }
        }
    }

    pub fn inverse(&self, k: i64) -> Result<usize> {
        match self {
            IndexMap::Identity => usize::try_from(k).map_err(|_| Error::IndexMap(format!("negative degree {k}"))),
            IndexMap::Permutation { inverse, .. } => usize::try_from(k)
                .ok()
                .and_then(|k| inverse.get(&k).copied())
                .ok_or_else(|| Error::IndexMap(format!("degree {k} is not in the tabulated range"))),
            IndexMap::ToIntegers => Ok(if k >= 0 {
                2 * k as usize + 1
            } else {
                2 * ((-k - 1) as usize)
            }),
        }
    }

    /// Largest argument covered, when finite.
    pub fn bound(&self) -> Option<usize> {
        match self {
            IndexMap::Permutation { forward, .. } => forward.len().checked_sub(1),
            _ => None,
        }
    }
}

/// `sigma(2j+1)` = j-th smallest element of `I`, `sigma(2j)` = j-th smallest
/// element of the complement, tabulated for arguments `0..=bound`.
pub fn build_sigma(spec: &SupportSpec, bound: usize) -> Result<IndexMap> {
    let need_odd = (bound + 1) / 2;
    let need_even = bound / 2 + 1;
    let cap = (bound + 2) * (bound + 2) + 64;
    let mut inside = Vec::with_capacity(need_odd);
    let mut outside = Vec::with_capacity(need_even);
    let mut k = 0usize;
    while (inside.len() < need_odd || outside.len() < need_even) && k <= cap {
        if spec.contains(k) {
            if inside.len() < need_odd {
                inside.push(k);
            }
        } else if outside.len() < need_even {
            outside.push(k);
        }
        k += 1;
    }
    if inside.len() < need_odd {
        return Err(Error::IndexMap(format!(
            "support set {} has only {} members up to {cap}, need {need_odd}",
            spec.label(),
            inside.len()
        )));
    }
    if outside.len() < need_even {
        return Err(Error::IndexMap(format!(
            "complement of {} has only {} members up to {cap}, need {need_even}",
            spec.label(),
            outside.len()
        )));
    }
    let forward: Vec<usize> = (0..=bound)
        .map(|n| if n % 2 == 1 { inside[n / 2] } else { outside[n / 2] })
        .collect();
    let inverse = forward.iter().enumerate().map(|(n, k)| (*k, n)).collect();
    Ok(IndexMap::Permutation { forward, inverse })
}

/// Finite stand-in for "`I` and its complement are both infinite": each must
/// supply at least `ceil((Q+1)/2)` members to tabulate `sigma` up to `Q`.
pub fn density_certificate(spec: &SupportSpec, bound: usize) -> CheckRecord {
    let need = bound.div_ceil(2).max(1);
    let mut inside = 0usize;
    let mut outside = 0usize;
    let mut k = 0usize;
    let cap = (bound + 2) * (bound + 2) + 64;
    while (inside < need || outside < need) && k <= cap {
        if spec.contains(k) {
            inside += 1;
        } else {
            outside += 1;
        }
        k += 1;
    }
    let ok = inside >= need && outside >= need && spec.both_infinite_certificate();
    CheckRecord::new("support_density", Status::from_bool(ok))
        .with_value(inside.min(outside) as f64)
        .with_bound(need as f64)
        .with_window(format!("members below {k}, index bound {bound}"))
        .with_note(format!(
            "{}: analytic flag {}",
            spec.label(),
            spec.both_infinite_certificate()
        ))
}

/// Power-series space with `z^n` replaced by `z^{sigma(n)}`.
pub fn support_space(weights: WeightSpec, mode: Mode, spec: &SupportSpec, max_index: usize) -> Result<SpaceHandle> {
    let sigma = build_sigma(spec, max_index)?;
    SpaceHandle::with_map(weights, mode, max_index, sigma, Embedding::Holomorphic)
}

/// Fourier-series model: index `n` contributes `e^{i sigma(n) t} / 2^n`.
pub fn fourier_space(weights: WeightSpec, mode: Mode, max_index: usize) -> Result<SpaceHandle> {
    SpaceHandle::with_map(weights, mode, max_index, IndexMap::ToIntegers, Embedding::Fourier)
}

/// Sections shared by every variant: oddness, orthogonality, pairing and the
/// distance contrast, computed in the relabelled space.
pub fn core_sections(
    space: &SpaceHandle,
    pair: &WitnessPair,
    levels: &[usize],
    opts: &ProjectionOptions,
    tol: f64,
) -> Result<Vec<Section>> {
    let mut pairing = Section::new("pairing");
    pairing.push(check_pairing(space, pair, tol)?);
    let headline = headline_contrast(space, pair, levels, opts)?;
    Ok(vec![
        check_f_odd(space, pair, pair.level_m - 1, tol)?,
        check_g_perp_odd(space, pair, pair.level_n, tol)?,
        pairing,
        headline.to_section(space, pair.level_m)?,
    ])
}

/// The support-set analogue: `f` has Taylor support in `I`, `g` annihilates
/// `z^i` for `i` in `I` up to the window, `<f, g> = 1`, and the distance from
/// `f` to polynomials supported in `I` stays above the certificate.
pub fn supported_span_distance(
    space: &SpaceHandle,
    spec: &SupportSpec,
    pair: &WitnessPair,
    levels: &[usize],
    opts: &ProjectionOptions,
    tol: f64,
) -> Result<Vec<Section>> {
    let mut sections = core_sections(space, pair, levels, opts, tol)?;
    let mut s = Section::new("support");
    s.push(density_certificate(spec, space.max_index()));

    let f = pair.f();
    let mut outside = Vec::new();
    for n in SpaceHandle::touching_indices(&pair.u).into_iter().filter(|n| *n < 2 * pair.level_m) {
        let d = space.degree_of(n)?;
        let c = space.taylor_of(&f, d)?;
        if !c.is_zero() && (d < 0 || !spec.contains(d as usize)) {
            outside.push(format!("degree {d}: {c}"));
        }
    }
    s.push(
        CheckRecord::new("f_support_in_set", Status::Pass)
            .with_window(format!("indices < {}", 2 * pair.level_m))
            .with_offending(outside),
    );

    let mut not_perp = Vec::new();
    let mut degrees = Vec::new();
    for n in 0..=pair.level_n {
        let d = space.degree_of(2 * n + 1)?;
        degrees.push(d);
        let val = space.monomial_coords(d)?.dot(&pair.v)?;
        if !d_is_member(spec, d) || !negligible(&val, 1.0, tol) {
            not_perp.push(format!("degree {d}: {val}"));
        }
    }
    s.push(
        CheckRecord::new("g_orthogonal_to_set_monomials", Status::Pass)
            .with_window(format!("degrees {:?}", degrees))
            .with_offending(not_perp),
    );

    let rows = space.monomial_norm_check(space.max_index().min(2 * pair.level_m + 1))?;
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| r.status == NormStatus::Fail)
        .map(|r| format!("index {} (degree {}): {}", r.index, r.degree, r.norm))
        .collect();
    let claims = rows.iter().any(|r| r.status != NormStatus::Info);
    s.push(
        CheckRecord::new(
            "relabelled_monomial_norm_bound",
            if claims { Status::Pass } else { Status::Info },
        )
        .with_window(format!("indices <= {}", rows.len().saturating_sub(1)))
        .with_offending(failed),
    );
    sections.push(s);
    Ok(sections)
}

fn d_is_member(spec: &SupportSpec, d: i64) -> bool {
    d >= 0 && spec.contains(d as usize)
}

/// `||J(x)||_{L^2}^2 = sum_n |<x, y_n>|^2 / (||y_n||^2 4^n)`.
pub fn l2_norm_sq(space: &SpaceHandle, x: &SparseVec) -> Result<Scalar> {
    if space.embedding() != Embedding::Fourier {
        return Err(Error::Unsupported("L2 norms are defined for the Fourier model".into()));
    }
    let mode = space.mode();
    let mut total = Scalar::zero(mode);
    for n in SpaceHandle::touching_indices(x) {
        let c = x.dot(&space.cache().y_vec(n)?)?;
        if c.is_zero() {
            continue;
        }
        let four_n = Scalar::from_rational(Rational::from_integer(BigInt::one() << (2 * n)), mode);
        let den = space.cache().norm_sq_y(n)?.try_mul(&four_n)?;
        total = total.try_add(&c.try_mul(&c)?.try_div(&den)?)?;
    }
    Ok(total)
}

/// Non-density of holomorphic trigonometric polynomials in `H` intersected
/// with `H^2`, plus the symmetric partial sums of the witness.
pub fn fourier_counterexample(
    space: &SpaceHandle,
    pair: &WitnessPair,
    levels: &[usize],
    partial_sums: &[usize],
    opts: &ProjectionOptions,
    tol: f64,
) -> Result<Vec<Section>> {
    if space.embedding() != Embedding::Fourier {
        return Err(Error::Unsupported("fourier_counterexample needs the Fourier model".into()));
    }
    let mode = space.mode();
    let mut sections = core_sections(space, pair, levels, opts, tol)?;
    let mut s = Section::new("fourier");

    let f = pair.f();
    let support: Vec<i64> = space.taylor_support(&f)?.into_keys().collect();
    let window: Vec<i64> = support
        .iter()
        .copied()
        .filter(|d| *d >= -(pair.level_m as i64))
        .collect();
    let expected: Vec<i64> = (0..=pair.level_m as i64).collect();
    s.push(
        CheckRecord::new("f_frequencies_nonnegative", Status::from_bool(window == expected))
            .with_window(format!("frequencies >= -{}", pair.level_m))
            .with_note(format!("support {:?}", window)),
    );

    let mut bad = Vec::new();
    let four = Scalar::from_int(4, mode);
    let mut probes: Vec<(String, SparseVec)> = vec![("u".into(), pair.u.clone()), ("v".into(), pair.v.clone())];
    for n in 0..=8usize.min(space.max_index()) {
        probes.push((format!("x_{n}"), space.cache().x_vec(n)?));
    }
    for (name, x) in &probes {
        let l2 = l2_norm_sq(space, x)?;
        let bound = four.try_mul(&x.norm_sq()?)?;
        let ok = match mode {
            Mode::Exact => l2.cmp_value(&bound)? != std::cmp::Ordering::Greater,
            Mode::Approx => l2.to_f64() <= bound.to_f64() * (1.0 + 1e-12),
        };
        if !ok {
            bad.push(format!("{name}: {} > {}", l2.to_f64(), bound.to_f64()));
        }
    }
    s.push(
        CheckRecord::new("l2_continuity", Status::Pass)
            .with_window(format!("{} probe vectors", probes.len()))
            .with_offending(bad),
    );

    let mut mismatched = Vec::new();
    let top = 6usize.min(space.max_index());
    for n in 0..=top {
        for m in 0..=top {
            let lhs = space.generator_coords(n)?.dot(&space.generator_coords(m)?)?;
            let rhs = space
                .monomial_scale(n)?
                .try_mul(&space.monomial_scale(m)?)?
                .try_mul(&space.cache().x_vec(n)?.dot(&space.cache().x_vec(m)?)?)?;
            if !negligible(&lhs.try_sub(&rhs)?, lhs.to_f64().abs(), tol) {
                mismatched.push(format!("({n}, {m})"));
            }
        }
    }
    s.push(
        CheckRecord::new("generator_inner_products", Status::Pass)
            .with_window(format!("indices <= {top}"))
            .with_offending(mismatched),
    );
    sections.push(s);

    let mut c5 = Section::new("symmetric_partial_sums");
    for &n in partial_sums {
        let sn = partial_sum_symmetric(space, &WitnessF, n)?;
        let freqs: Vec<i64> = space.taylor_support(&sn)?.into_keys().collect();
        let holomorphic = freqs.iter().all(|k| (0..=n as i64).contains(k));
        let out = SummabilityOutput {
            scaled: sn.coords().clone(),
            denom: BigInt::one(),
            scaled_weights: Vec::new(),
            truncation: None,
            series_tail: 0.0,
        };
        let row = distance_row(space, pair, "symmetric_partial_sum", n.to_string(), &out)?;
        let ok = holomorphic && row.status == Status::Pass;
        c5.push(
            CheckRecord::new(format!("s_{n}"), Status::from_bool(ok))
                .with_value(row.value)
                .with_bound(row.bound.unwrap_or(f64::NAN))
                .with_slack(row.slack)
                .with_window(format!("frequencies {:?}", freqs)),
        );
    }
    sections.push(c5);
    Ok(sections)
}

/// `s_n(f) = sum_{k=-n}^{n} f^(k) e^{ikt}`.
pub fn partial_sum_symmetric(space: &SpaceHandle, src: &dyn TaylorSource, n: usize) -> Result<HFunction> {
    let mut coords = SparseVec::zero(space.mode());
    for idx in indices_for_degrees(space, -(n as i64), n as i64)? {
        let c = src.y_coefficient(space, idx)?;
        if !c.is_zero() {
            coords.axpy(&c, &space.cache().x_vec(idx)?)?;
        }
    }
    Ok(HFunction::exact(coords))
}
