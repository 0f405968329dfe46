//! Two-mode scalar kernel.
//!
//! Exact values live in the ring `Q[t_0, t_1, ...] / (t_i^2 - r_i)` where every
//! generator `t_i` is a registered square root of a positive rational `r_i`.
//! A value is stored as a sum of monomials `c * t_i * t_j * ...` with each
//! generator appearing at most once; squares are folded back into the
//! rational coefficient. Floating-point values use plain binary64.
//!
//! Zero testing is formal: a canonical sum with no terms is zero. That is
//! sound for every exact identity (a formal zero is a real zero). A single
//! monomial with non-zero coefficient is always a real non-zero, because
//! every generator is a positive square root.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{LazyLock, RwLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational, always reduced with a positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarError {
    #[error("scalar mode mismatch: cannot combine exact and approximate values")]
    ModeMismatch,
    #[error("generator eta({0}) is not registered")]
    UnregisteredGenerator(u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("division by a multi-term value is not supported: {0}")]
    NonMonomialDivisor(String),
    #[error("square root requires a positive rational, got {0}")]
    NonPositiveRadicand(String),
}

/// Arithmetic regime of a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Approx,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Approx => f.write_str("approx"),
        }
    }
}

/// Handle of a registered square-root generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenId(u32);

impl GenId {
    pub fn index(self) -> u32 {
        self.0
    }

    /// Refers to a generator by raw index. Arithmetic on a handle that was
    /// never registered fails with [`ScalarError::UnregisteredGenerator`].
    pub fn from_raw(index: u32) -> Self {
        GenId(index)
    }
}

struct GenInfo {
    square: Rational,
    value: f64,
}

#[derive(Default)]
struct Registry {
    gens: Vec<GenInfo>,
    // Generators whose fingerprint is defined at every probe prime.
    by_fingerprint: HashMap<u64, Vec<u32>>,
    // Generators with a partially defined fingerprint, scanned linearly.
    partial: Vec<(Fingerprint, u32)>,
}

// Append-only; entries are never mutated once published.
static REGISTRY: LazyLock<RwLock<Registry>> = LazyLock::new(|| RwLock::new(Registry::default()));

fn generator_square(id: GenId) -> Result<Rational, ScalarError> {
    let reg = REGISTRY.read().expect("generator registry poisoned");
    reg.gens
        .get(id.0 as usize)
        .map(|g| g.square.clone())
        .ok_or(ScalarError::UnregisteredGenerator(id.0))
}

fn generator_value(id: GenId) -> Result<f64, ScalarError> {
    let reg = REGISTRY.read().expect("generator registry poisoned");
    reg.gens
        .get(id.0 as usize)
        .map(|g| g.value)
        .ok_or(ScalarError::UnregisteredGenerator(id.0))
}

/// Square of a registered generator.
pub fn square_of(id: GenId) -> Result<Rational, ScalarError> {
    generator_square(id)
}

/// Number of generators registered so far in this process.
pub fn registered_generators() -> usize {
    REGISTRY.read().expect("generator registry poisoned").gens.len()
}

fn biguint_sqrt_exact(n: &BigUint) -> Option<BigUint> {
    let s = n.sqrt();
    if &s * &s == *n {
        Some(s)
    } else {
        None
    }
}

/// Exact square root of a non-negative rational, when it is rational.
pub fn rational_sqrt_exact(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let num = biguint_sqrt_exact(r.numer().magnitude())?;
    let den = biguint_sqrt_exact(r.denom().magnitude())?;
    Some(Rational::new(
        BigInt::from_biguint(Sign::Plus, num),
        BigInt::from_biguint(Sign::Plus, den),
    ))
}

fn rational_to_f64(r: &Rational) -> f64 {
    match r.to_f64() {
        Some(v) if v.is_finite() => v,
        _ => {
            // Very large numerator/denominator: scale by bit lengths first.
            let nb = r.numer().bits() as i64;
            let db = r.denom().bits() as i64;
            let shift = nb - db;
            let scaled = if shift > 0 {
                r / Rational::from_integer(BigInt::one() << (shift as usize))
            } else {
                r * Rational::from_integer(BigInt::one() << ((-shift) as usize))
            };
            scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
        }
    }
}

/// Registers `sqrt(r)` and returns it as an exact scalar.
///
/// Perfect squares come back as rationals. If `r` lies in the square class of
/// an already registered generator (`r / s` is a rational square), the
/// existing generator is reused with a rational cofactor.
pub fn register_sqrt(r: &Rational) -> Result<Scalar, ScalarError> {
    if !r.is_positive() {
        return Err(ScalarError::NonPositiveRadicand(format_rational(r)));
    }
    if let Some(q) = rational_sqrt_exact(r) {
        return Ok(Scalar::Rational(q));
    }
    let fp = fingerprint(r);
    {
        let reg = REGISTRY.read().expect("generator registry poisoned");
        if let Some(found) = find_class(&reg, r, fp) {
            return Ok(found);
        }
    }
    let mut reg = REGISTRY.write().expect("generator registry poisoned");
    // Another thread may have registered the same class meanwhile.
    if let Some(found) = find_class(&reg, r, fp) {
        return Ok(found);
    }
    let id = reg.gens.len() as u32;
    reg.gens.push(GenInfo {
        square: r.clone(),
        value: rational_to_f64(r).sqrt(),
    });
    if fp.defined == u64::MAX {
        reg.by_fingerprint.entry(fp.symbols).or_default().push(id);
    } else {
        reg.partial.push((fp, id));
    }
    Ok(Scalar::monomial(Rational::one(), vec![GenId(id)]))
}

/// Quadratic characters of `num(r) * den(r)` modulo 64 fixed primes.
///
/// If `r / s` is a rational square then `num(r) den(r) num(s) den(s)` is a
/// perfect square, so the characters agree at every prime dividing neither.
/// Bit `i` of `symbols` is set for a non-residue at prime `i`; bit `i` of
/// `defined` is clear when the prime divides the product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Fingerprint {
    symbols: u64,
    defined: u64,
}

impl Fingerprint {
    fn compatible(self, other: Fingerprint) -> bool {
        (self.symbols ^ other.symbols) & self.defined & other.defined == 0
    }
}

static PROBE_PRIMES: LazyLock<Vec<u64>> = LazyLock::new(|| {
    let is_prime = |n: u64| n > 1 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
    (0..(1u64 << 31)).rev().filter(|&n| is_prime(n)).take(64).collect()
});

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

fn fingerprint(r: &Rational) -> Fingerprint {
    let mut fp = Fingerprint { symbols: 0, defined: 0 };
    for (i, &p) in PROBE_PRIMES.iter().enumerate() {
        let a = (r.numer().magnitude() % p).to_u64().expect("residue below p");
        let b = (r.denom().magnitude() % p).to_u64().expect("residue below p");
        let x = a * b % p;
        if x == 0 {
            continue;
        }
        fp.defined |= 1 << i;
        if pow_mod(x, (p - 1) / 2, p) != 1 {
            fp.symbols |= 1 << i;
        }
    }
    fp
}

fn find_class(reg: &Registry, r: &Rational, fp: Fingerprint) -> Option<Scalar> {
    let full: &[u32] = if fp.defined == u64::MAX {
        reg.by_fingerprint.get(&fp.symbols).map(Vec::as_slice).unwrap_or(&[])
    } else {
        &[]
    };
    let mut candidates: Vec<u32> = if fp.defined == u64::MAX {
        full.to_vec()
    } else {
        // A partial fingerprint can match anything in the hash buckets.
        reg.by_fingerprint
            .iter()
            .filter(|(s, _)| fp.compatible(Fingerprint { symbols: **s, defined: u64::MAX }))
            .flat_map(|(_, ids)| ids.iter().copied())
            .collect()
    };
    candidates.extend(reg.partial.iter().filter(|(f, _)| f.compatible(fp)).map(|(_, id)| *id));
    candidates.sort_unstable();
    for i in candidates {
        let g = &reg.gens[i as usize];
        if g.square == *r {
            return Some(Scalar::monomial(Rational::one(), vec![GenId(i)]));
        }
        if let Some(q) = rational_sqrt_exact(&rat_div(r, &g.square)) {
            return Some(Scalar::monomial(q, vec![GenId(i)]));
        }
    }
    None
}

// num-bigint's gcd is binary and costs time proportional to the larger
// operand's bit length per step; a leading Euclidean step removes the imbalance.
fn gcd_big(a: &BigUint, b: &BigUint) -> BigUint {
    let (mut x, mut y) = if a >= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
    loop {
        if y.is_zero() {
            return x;
        }
        if let Some(small) = y.to_u64() {
            let r = (&x % small).to_u64().expect("remainder below divisor");
            return BigUint::from(small.gcd(&r));
        }
        if x.bits() > y.bits() + 32 {
            x %= &y;
            std::mem::swap(&mut x, &mut y);
            continue;
        }
        return x.gcd(&y);
    }
}

fn gcd_int(a: &BigInt, b: &BigInt) -> BigInt {
    BigInt::from_biguint(Sign::Plus, gcd_big(a.magnitude(), b.magnitude()))
}

/// `a + b`, reduced with imbalance-aware gcds.
pub(crate) fn rat_add(a: &Rational, b: &Rational) -> Rational {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    let (n1, d1, n2, d2) = (a.numer(), a.denom(), b.numer(), b.denom());
    if d1 == d2 {
        let num = n1 + n2;
        let g = gcd_int(&num, d1);
        return if g.is_one() {
            Rational::new_raw(num, d1.clone())
        } else {
            Rational::new_raw(num / &g, d1 / g)
        };
    }
    let g = gcd_int(d1, d2);
    if g.is_one() {
        return Rational::new_raw(n1 * d2 + n2 * d1, d1 * d2);
    }
    let (d1g, d2g) = (d1 / &g, d2 / &g);
    let t = n1 * &d2g + n2 * &d1g;
    if t.is_zero() {
        return Rational::zero();
    }
    let g2 = gcd_int(&t, &g);
    Rational::new_raw(t / &g2, d1g * (d2 / g2))
}

/// `a * b`, reduced with imbalance-aware gcds.
pub(crate) fn rat_mul(a: &Rational, b: &Rational) -> Rational {
    if a.is_zero() || b.is_zero() {
        return Rational::zero();
    }
    let (n1, d1, n2, d2) = (a.numer(), a.denom(), b.numer(), b.denom());
    let g1 = gcd_int(n1, d2);
    let g2 = gcd_int(n2, d1);
    Rational::new_raw((n1 / &g1) * (n2 / &g2), (d1 / g2) * (d2 / g1))
}

pub(crate) fn rat_div(a: &Rational, b: &Rational) -> Rational {
    rat_mul(a, &b.recip())
}

/// One term `coeff * prod(generators)` of an exact value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EtaMonomial {
    pub coeff: Rational,
    pub generators: Vec<GenId>,
}

/// Canonical finite sum of monomials keyed by their (sorted) generator set.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EtaSum {
    terms: BTreeMap<Vec<GenId>, Rational>,
}

impl EtaSum {
    pub fn monomials(&self) -> impl Iterator<Item = EtaMonomial> + '_ {
        self.terms.iter().map(|(g, c)| EtaMonomial {
            coeff: c.clone(),
            generators: g.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// A number produced by the construction, either exact or binary64.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Rational(Rational),
    Eta(EtaSum),
    Approx(f64),
}

/// Outcome of a zero test together with the regime that decided it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroTest {
    pub is_zero: bool,
    pub regime: ZeroRegime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroRegime {
    Exact,
    Tolerance(f64),
}

type Terms = BTreeMap<Vec<GenId>, Rational>;

fn merge_generators(a: &[GenId], b: &[GenId]) -> Result<(Vec<GenId>, Rational), ScalarError> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut fold = Rational::one();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                fold *= generator_square(a[i])?;
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Ok((out, fold))
}

impl Scalar {
    pub fn zero(mode: Mode) -> Self {
        match mode {
            Mode::Exact => Scalar::Rational(Rational::zero()),
            Mode::Approx => Scalar::Approx(0.0),
        }
    }

    pub fn one(mode: Mode) -> Self {
        match mode {
            Mode::Exact => Scalar::Rational(Rational::one()),
            Mode::Approx => Scalar::Approx(1.0),
        }
    }

    pub fn from_rational(r: Rational, mode: Mode) -> Self {
        match mode {
            Mode::Exact => Scalar::Rational(r),
            Mode::Approx => Scalar::Approx(rational_to_f64(&r)),
        }
    }

    pub fn from_int(v: i64, mode: Mode) -> Self {
        Scalar::from_rational(Rational::from_integer(BigInt::from(v)), mode)
    }

    pub fn ratio(p: i64, q: i64, mode: Mode) -> Self {
        Scalar::from_rational(Rational::new(BigInt::from(p), BigInt::from(q)), mode)
    }

    /// The registered generator `id` as a scalar.
    pub fn generator(id: GenId) -> Result<Self, ScalarError> {
        generator_square(id)?;
        Ok(Scalar::monomial(Rational::one(), vec![id]))
    }

    fn monomial(coeff: Rational, mut generators: Vec<GenId>) -> Self {
        generators.sort();
        generators.dedup();
        let mut terms = Terms::new();
        terms.insert(generators, coeff);
        Scalar::from_terms(terms)
    }

    /// Builds the canonical representative of a term map.
    fn from_terms(mut terms: Terms) -> Self {
        terms.retain(|_, c| !c.is_zero());
        if terms.is_empty() {
            return Scalar::Rational(Rational::zero());
        }
        if terms.len() == 1 {
            if let Some(c) = terms.get(&Vec::new()) {
                return Scalar::Rational(c.clone());
            }
        }
        Scalar::Eta(EtaSum { terms })
    }

    fn to_terms(&self) -> Option<Terms> {
        match self {
            Scalar::Rational(r) => {
                let mut t = Terms::new();
                if !r.is_zero() {
                    t.insert(Vec::new(), r.clone());
                }
                Some(t)
            }
            Scalar::Eta(s) => Some(s.terms.clone()),
            Scalar::Approx(_) => None,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Approx(_) => Mode::Approx,
            _ => Mode::Exact,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.mode() == Mode::Exact
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Scalar::Rational(r) => Some(r),
            _ => None,
        }
    }

    /// Re-runs canonicalization. Values are always kept canonical, so this
    /// is the identity on representations.
    pub fn canonicalize(&self) -> Scalar {
        match self.to_terms() {
            Some(t) => Scalar::from_terms(t),
            None => self.clone(),
        }
    }

    pub fn try_add(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, other) {
            (Scalar::Approx(a), Scalar::Approx(b)) => Ok(Scalar::Approx(a + b)),
            (Scalar::Rational(a), Scalar::Rational(b)) => Ok(Scalar::Rational(rat_add(a, b))),
            (Scalar::Approx(_), _) | (_, Scalar::Approx(_)) => Err(ScalarError::ModeMismatch),
            _ => {
                let mut t = self.to_terms().unwrap_or_default();
                for (g, c) in other.to_terms().unwrap_or_default() {
                    let e = t.entry(g).or_insert_with(Rational::zero);
                    *e = rat_add(e, &c);
                }
                Ok(Scalar::from_terms(t))
            }
        }
    }

    pub fn try_sub(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.try_add(&other.neg_ref())
    }

    fn neg_ref(&self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Approx(v) => Scalar::Approx(-v),
            Scalar::Eta(s) => Scalar::Eta(EtaSum {
                terms: s.terms.iter().map(|(g, c)| (g.clone(), -c)).collect(),
            }),
        }
    }

    pub fn try_mul(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, other) {
            (Scalar::Approx(a), Scalar::Approx(b)) => Ok(Scalar::Approx(a * b)),
            (Scalar::Rational(a), Scalar::Rational(b)) => Ok(Scalar::Rational(rat_mul(a, b))),
            (Scalar::Approx(_), _) | (_, Scalar::Approx(_)) => Err(ScalarError::ModeMismatch),
            (Scalar::Rational(r), Scalar::Eta(s)) | (Scalar::Eta(s), Scalar::Rational(r)) => {
                if r.is_zero() {
                    return Ok(Scalar::Rational(Rational::zero()));
                }
                Ok(Scalar::from_terms(
                    s.terms.iter().map(|(g, c)| (g.clone(), rat_mul(c, r))).collect(),
                ))
            }
            (Scalar::Eta(a), Scalar::Eta(b)) => {
                let mut t = Terms::new();
                for (ga, ca) in &a.terms {
                    for (gb, cb) in &b.terms {
                        let (g, fold) = merge_generators(ga, gb)?;
                        let e = t.entry(g).or_insert_with(Rational::zero);
                        *e = rat_add(e, &rat_mul(&rat_mul(ca, cb), &fold));
                    }
                }
                Ok(Scalar::from_terms(t))
            }
        }
    }

    /// Multiplicative inverse. Exact inverses exist for rationals and single
    /// monomials: `1/(c t_i t_j) = t_i t_j / (c r_i r_j)`.
    pub fn try_recip(&self) -> Result<Scalar, ScalarError> {
        match self {
            Scalar::Approx(v) => {
                if *v == 0.0 {
                    Err(ScalarError::DivisionByZero)
                } else {
                    Ok(Scalar::Approx(1.0 / v))
                }
            }
            Scalar::Rational(r) => {
                if r.is_zero() {
                    Err(ScalarError::DivisionByZero)
                } else {
                    Ok(Scalar::Rational(r.recip()))
                }
            }
            Scalar::Eta(s) => {
                if s.terms.len() != 1 {
                    return Err(ScalarError::NonMonomialDivisor(self.to_string()));
                }
                let (gens, c) = s.terms.iter().next().expect("one term");
                let mut denom = c.clone();
                for g in gens {
                    denom *= generator_square(*g)?;
                }
                Ok(Scalar::monomial(denom.recip(), gens.clone()))
            }
        }
    }

    pub fn try_div(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        if self.mode() != other.mode() {
            return Err(ScalarError::ModeMismatch);
        }
        self.try_mul(&other.try_recip()?)
    }

    /// Exact zero for exact values; `|a| <= tol` for approximate ones.
    pub fn zero_test(&self, tol: f64) -> ZeroTest {
        match self {
            Scalar::Approx(v) => ZeroTest {
                is_zero: v.abs() <= tol,
                regime: ZeroRegime::Tolerance(tol),
            },
            Scalar::Rational(r) => ZeroTest {
                is_zero: r.is_zero(),
                regime: ZeroRegime::Exact,
            },
            Scalar::Eta(s) => ZeroTest {
                is_zero: s.terms.is_empty(),
                regime: ZeroRegime::Exact,
            },
        }
    }

    /// True only for a structurally zero value (exact zero or `0.0`).
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Approx(v) => *v == 0.0,
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Eta(s) => s.terms.is_empty(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Approx(v) => *v,
            Scalar::Rational(r) => rational_to_f64(r),
            Scalar::Eta(s) => s
                .terms
                .iter()
                .map(|(g, c)| {
                    let gv: f64 = g
                        .iter()
                        .map(|id| generator_value(*id).unwrap_or(f64::NAN))
                        .product();
                    rational_to_f64(c) * gv
                })
                .sum(),
        }
    }

    /// Same value in binary64.
    pub fn to_approx(&self) -> Scalar {
        Scalar::Approx(self.to_f64())
    }

    /// Converts to the requested mode. Approximate values cannot be made exact.
    pub fn into_mode(self, mode: Mode) -> Result<Scalar, ScalarError> {
        match (self.mode(), mode) {
            (a, b) if a == b => Ok(self),
            (Mode::Exact, Mode::Approx) => Ok(self.to_approx()),
            _ => Err(ScalarError::ModeMismatch),
        }
    }

    /// `sqrt(r)`: rational for perfect squares, otherwise a registered
    /// generator (exact) or the binary64 square root (approx).
    pub fn sqrt_of_rational(r: &Rational, mode: Mode) -> Result<Scalar, ScalarError> {
        if !r.is_positive() {
            return Err(ScalarError::NonPositiveRadicand(format_rational(r)));
        }
        match mode {
            Mode::Exact => register_sqrt(r),
            Mode::Approx => Ok(Scalar::Approx(rational_to_f64(r).sqrt())),
        }
    }

    /// Compares two values. Exact when both are rational, otherwise by the
    /// binary64 value of the difference.
    pub fn cmp_value(&self, other: &Scalar) -> Result<std::cmp::Ordering, ScalarError> {
        if let (Scalar::Rational(a), Scalar::Rational(b)) = (self, other) {
            return Ok(a.cmp(b));
        }
        let d = self.try_sub(other)?;
        if d.is_zero() {
            return Ok(std::cmp::Ordering::Equal);
        }
        Ok(d.to_f64().partial_cmp(&0.0).unwrap_or(std::cmp::Ordering::Equal))
    }

    pub fn monomial_count(&self) -> usize {
        match self {
            Scalar::Eta(s) => s.terms.len(),
            Scalar::Rational(r) if r.is_zero() => 0,
            _ => 1,
        }
    }
}

/// Formats a rational as `p/q`, including `q = 1`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

impl Scalar {
    /// Rendering that does not depend on generator registration order:
    /// each monomial is written `c*sqrt(R)` with `R` the product of its
    /// radicands, and terms are sorted.
    pub fn exact_string(&self) -> String {
        match self {
            Scalar::Eta(s) => {
                let mut terms: Vec<String> = s
                    .terms
                    .iter()
                    .map(|(g, c)| {
                        let radicand = g
                            .iter()
                            .map(|id| generator_square(*id).expect("registered generator"))
                            .fold(Rational::one(), |acc, r| acc * r);
                        format!("{}*sqrt({})", format_rational(c), format_rational(&radicand))
                    })
                    .collect();
                terms.sort();
                terms.join(" + ")
            }
            other => other.to_string(),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Approx(v) => write!(f, "{v:?}"),
            Scalar::Rational(r) => f.write_str(&format_rational(r)),
            Scalar::Eta(s) => {
                let mut first = true;
                for (g, c) in &s.terms {
                    if !first {
                        f.write_str(" + ")?;
                    }
                    first = false;
                    f.write_str(&format_rational(c))?;
                    if !g.is_empty() {
                        f.write_str(" * ")?;
                        let names: Vec<String> =
                            g.iter().map(|id| format!("eta({})", id.0)).collect();
                        f.write_str(&names.join("*"))?;
                    }
                }
                Ok(())
            }
        }
    }
}

// Operator sugar for same-mode arithmetic inside the library. Mixing modes
// through these operators is a programming error and panics; use the
// `try_*` methods when the modes are not known to agree.
impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        self.try_add(rhs).expect("scalar addition")
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self.try_sub(rhs).expect("scalar subtraction")
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        self.try_mul(rhs).expect("scalar multiplication")
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.neg_ref()
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.neg_ref()
    }
}

/// Parses `p/q`, an integer, or a plain decimal such as `0.99` into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let neg = int.starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" || int == "+" {
            BigInt::zero()
        } else {
            int.parse().ok()?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part: BigInt = frac.parse().ok()?;
        let magnitude = int_part.abs() * &scale + frac_part;
        let numer = if neg { -magnitude } else { magnitude };
        return Some(Rational::new(numer, scale));
    }
    s.parse::<BigInt>().ok().map(Rational::from_integer)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(p), BigInt::from(d))
    }

    #[test]
    fn rational_addition() {
        let a = Scalar::Rational(q(1, 2));
        let b = Scalar::Rational(q(1, 3));
        assert_eq!(a.try_add(&b).unwrap(), Scalar::Rational(q(5, 6)));
    }

    #[test]
    fn inverse_eta_minus_eta_a_is_zero() {
        // 1/eta0 - eta0 * a0 with a0 = 1/eta0^2, eta0^2 = 7/3.
        let eta0 = register_sqrt(&q(7, 3)).unwrap();
        let a0 = Scalar::Rational(q(3, 7));
        let lhs = eta0.try_recip().unwrap();
        let rhs = &eta0 * &a0;
        let d = &lhs - &rhs;
        assert!(d.zero_test(0.0).is_zero);
        assert_eq!(d.zero_test(0.0).regime, ZeroRegime::Exact);
    }

    #[test]
    fn additive_and_multiplicative_identity() {
        let g = register_sqrt(&q(11, 5)).unwrap();
        let x = &(&g * &Scalar::Rational(q(2, 9))) + &Scalar::Rational(q(-4, 3));
        assert_eq!(&x + &Scalar::zero(Mode::Exact), x);
        assert_eq!(&x * &Scalar::one(Mode::Exact), x);
    }

    #[test]
    fn perfect_square_roots_stay_rational() {
        assert_eq!(
            Scalar::sqrt_of_rational(&q(1, 4), Mode::Exact).unwrap(),
            Scalar::Rational(q(1, 2))
        );
        let s = Scalar::sqrt_of_rational(&q(3, 2), Mode::Exact).unwrap();
        assert_eq!(s.monomial_count(), 1);
        assert_eq!((&s * &s), Scalar::Rational(q(3, 2)));
        let a = Scalar::sqrt_of_rational(&q(2, 1), Mode::Approx).unwrap();
        assert_eq!(a, Scalar::Approx(1.4142135623730951));
    }

    #[test]
    fn square_class_reuses_generator() {
        let a = register_sqrt(&q(13, 1)).unwrap();
        let b = register_sqrt(&q(52, 9)).unwrap(); // (2/3)^2 * 13
        let ratio = b.try_div(&a).unwrap();
        assert_eq!(ratio, Scalar::Rational(q(2, 3)));
    }

    #[test]
    fn distinct_generators_stay_symbolic() {
        let a = register_sqrt(&q(17, 1)).unwrap();
        let b = register_sqrt(&q(19, 1)).unwrap();
        let p = &a * &b;
        assert_eq!(p.monomial_count(), 1);
        match &p {
            Scalar::Eta(s) => {
                let m: Vec<_> = s.monomials().collect();
                assert_eq!(m[0].coeff, q(1, 1));
                assert_eq!(m[0].generators.len(), 2);
            }
            other => panic!("expected symbolic product, got {other}"),
        }
    }

    #[test]
    fn fold_rule_with_quarter() {
        // eta = 1/2 in reciprocal mode is rational; a non-square stand-in.
        let g = register_sqrt(&q(1, 4)).unwrap();
        assert_eq!(&g * &g, Scalar::Rational(q(1, 4)));
    }

    #[test]
    fn mode_mismatch_is_an_error() {
        let a = Scalar::Approx(1.0);
        let b = Scalar::Rational(q(1, 1));
        assert_eq!(a.try_add(&b), Err(ScalarError::ModeMismatch));
        assert_eq!(b.try_mul(&a), Err(ScalarError::ModeMismatch));
        assert_eq!(a.try_div(&b), Err(ScalarError::ModeMismatch));
    }

    #[test]
    fn unregistered_generator_is_an_error() {
        let bogus = GenId::from_raw(u32::MAX);
        assert_eq!(
            Scalar::generator(bogus),
            Err(ScalarError::UnregisteredGenerator(u32::MAX))
        );
    }

    #[test]
    fn zero_tests() {
        assert!(!Scalar::Rational(q(1, 1)).zero_test(1e-12).is_zero);
        let t = Scalar::Approx(1e-15).zero_test(1e-12);
        assert!(t.is_zero);
        assert_eq!(t.regime, ZeroRegime::Tolerance(1e-12));
    }

    #[test]
    fn non_positive_radicand() {
        assert!(Scalar::sqrt_of_rational(&q(0, 1), Mode::Exact).is_err());
        assert!(Scalar::sqrt_of_rational(&q(-1, 2), Mode::Approx).is_err());
    }

    #[test]
    fn division_by_sum_is_rejected() {
        let g = register_sqrt(&q(23, 1)).unwrap();
        let s = &g + &Scalar::Rational(q(1, 1));
        assert!(matches!(
            Scalar::one(Mode::Exact).try_div(&s),
            Err(ScalarError::NonMonomialDivisor(_))
        ));
        assert_eq!(
            Scalar::one(Mode::Exact).try_div(&Scalar::zero(Mode::Exact)),
            Err(ScalarError::DivisionByZero)
        );
    }

    #[test]
    fn display_formats() {
        assert_eq!(Scalar::Rational(q(5, 1)).to_string(), "5/1");
        assert_eq!(Scalar::Rational(q(-5, 6)).to_string(), "-5/6");
        let g = register_sqrt(&q(29, 1)).unwrap();
        let s = &(&g * &Scalar::Rational(q(1, 2))) + &Scalar::Rational(q(3, 1));
        let text = s.to_string();
        assert!(text.starts_with("3/1 + 1/2 * eta("), "{text}");
        assert_eq!(Scalar::Approx(0.5).to_string(), "0.5");
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("99/100"), Some(q(99, 100)));
        assert_eq!(parse_rational("0.99"), Some(q(99, 100)));
        assert_eq!(parse_rational("-1.5"), Some(q(-3, 2)));
        assert_eq!(parse_rational("7"), Some(q(7, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn huge_rationals_convert_to_finite_floats() {
        let big = Rational::new(BigInt::from(3) * (BigInt::one() << 2000usize), BigInt::one() << 2000usize);
        assert_eq!(rational_to_f64(&big), 3.0);
    }
}
