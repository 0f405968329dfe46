//! Finitely supported vectors in the sequence space over non-negative indices.

use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::{Mode, Scalar, ScalarError};

/// Finitely supported coefficient vector. Explicit zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec {
    mode: Mode,
    entries: BTreeMap<usize, Scalar>,
}

impl SparseVec {
    pub fn zero(mode: Mode) -> Self {
        SparseVec {
            mode,
            entries: BTreeMap::new(),
        }
    }

    /// The standard unit vector `e_n`.
    pub fn unit(n: usize, mode: Mode) -> Self {
        let mut v = SparseVec::zero(mode);
        v.entries.insert(n, Scalar::one(mode));
        v
    }

    pub fn from_entries<I>(mode: Mode, entries: I) -> Result<Self, ScalarError>
    where
        I: IntoIterator<Item = (usize, Scalar)>,
    {
        let mut v = SparseVec::zero(mode);
        for (i, s) in entries {
            v.add_at(i, &s)?;
        }
        Ok(v)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<&Scalar> {
        self.entries.get(&n)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Scalar)> + '_ {
        self.entries.iter().map(|(i, s)| (*i, s))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    fn check_mode(&self, s: &Scalar) -> Result<(), ScalarError> {
        if s.mode() != self.mode {
            Err(ScalarError::ModeMismatch)
        } else {
            Ok(())
        }
    }

    /// Sets entry `n`, removing it when `value` is zero.
    pub fn set(&mut self, n: usize, value: Scalar) -> Result<(), ScalarError> {
        self.check_mode(&value)?;
        if value.is_zero() {
            self.entries.remove(&n);
        } else {
            self.entries.insert(n, value);
        }
        Ok(())
    }

    /// `self[n] += value`.
    pub fn add_at(&mut self, n: usize, value: &Scalar) -> Result<(), ScalarError> {
        self.check_mode(value)?;
        if value.is_zero() {
            return Ok(());
        }
        let next = match self.entries.get(&n) {
            Some(cur) => cur.try_add(value)?,
            None => value.clone(),
        };
        self.set(n, next)
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: &Scalar, other: &SparseVec) -> Result<(), ScalarError> {
        if other.mode != self.mode {
            return Err(ScalarError::ModeMismatch);
        }
        self.check_mode(c)?;
        if c.is_zero() {
            return Ok(());
        }
        for (i, s) in other.iter() {
            self.add_at(i, &c.try_mul(s)?)?;
        }
        Ok(())
    }

    pub fn scale(&self, c: &Scalar) -> Result<SparseVec, ScalarError> {
        let mut out = SparseVec::zero(self.mode);
        out.axpy(c, self)?;
        Ok(out)
    }

    pub fn try_add(&self, other: &SparseVec) -> Result<SparseVec, ScalarError> {
        let mut out = self.clone();
        out.axpy(&Scalar::one(self.mode), other)?;
        Ok(out)
    }

    pub fn try_sub(&self, other: &SparseVec) -> Result<SparseVec, ScalarError> {
        let mut out = self.clone();
        out.axpy(&-Scalar::one(self.mode), other)?;
        Ok(out)
    }

    /// Inner product over shared indices. Entries are real, so no conjugation.
    pub fn dot(&self, other: &SparseVec) -> Result<Scalar, ScalarError> {
        if self.mode != other.mode {
            return Err(ScalarError::ModeMismatch);
        }
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut acc = Scalar::zero(self.mode);
        for (i, a) in small.iter() {
            if let Some(b) = large.entries.get(&i) {
                acc = acc.try_add(&a.try_mul(b)?)?;
            }
        }
        Ok(acc)
    }

    pub fn norm_sq(&self) -> Result<Scalar, ScalarError> {
        self.dot(self)
    }

    /// Binary64 Euclidean norm.
    pub fn norm_f64(&self) -> f64 {
        self.entries
            .values()
            .map(|s| {
                let v = s.to_f64();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Copy of this vector with every entry converted to binary64.
    pub fn to_approx(&self) -> SparseVec {
        SparseVec {
            mode: Mode::Approx,
            entries: self
                .entries
                .iter()
                .map(|(i, s)| (*i, s.to_approx()))
                .filter(|(_, s)| !s.is_zero())
                .collect(),
        }
    }
}

impl fmt::Display for SparseVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(i, s)| format!("({s})e{i}"))
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_dot_unit() {
        let e5 = SparseVec::unit(5, Mode::Exact);
        assert_eq!(e5.dot(&e5).unwrap(), Scalar::one(Mode::Exact));
        let e4 = SparseVec::unit(4, Mode::Exact);
        assert!(e5.dot(&e4).unwrap().is_zero());
    }

    #[test]
    fn cancellation_removes_entry() {
        let mut v = SparseVec::unit(3, Mode::Exact);
        v.add_at(3, &Scalar::from_int(-1, Mode::Exact)).unwrap();
        assert!(v.is_empty());
        v.set(2, Scalar::zero(Mode::Exact)).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn mode_mismatch() {
        let a = SparseVec::unit(0, Mode::Exact);
        let b = SparseVec::unit(0, Mode::Approx);
        assert!(a.dot(&b).is_err());
        let mut c = SparseVec::zero(Mode::Exact);
        assert!(c.set(1, Scalar::Approx(1.0)).is_err());
    }

    #[test]
    fn linear_combination() {
        let m = Mode::Exact;
        let a = SparseVec::from_entries(m, [(0, Scalar::from_int(1, m)), (2, Scalar::from_int(3, m))]).unwrap();
        let b = SparseVec::from_entries(m, [(2, Scalar::from_int(1, m)), (4, Scalar::from_int(1, m))]).unwrap();
        let c = a.try_sub(&b.scale(&Scalar::from_int(3, m)).unwrap()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.get(4), Some(&Scalar::from_int(-3, m)));
        assert_eq!(c.norm_sq().unwrap(), Scalar::from_int(10, m));
        assert_eq!(c.max_index(), Some(4));
    }
}
