//! Orthogonal projection onto the span of finitely many generators.
//!
//! The normal equations `G c = b`, with `G_ij = <g_i, g_j>` and `b_i = <f, g_i>`,
//! are solved by symmetric elimination. Exact mode pivots on the first
//! non-zero diagonal entry (keeping banded Gram matrices banded) and drops
//! generators whose Schur pivot is exactly zero. Approx mode is a diagonally
//! pivoted Cholesky/LDL^T that drops pivots below `pivot_tol * max diag`,
//! followed by iterative refinement against the generator vectors.
//!
//! Exact Gram entries built from `x_n`, `y_n` and the witness vectors are single
//! monomials of the same generator degree in every Schur complement, so
//! division by a pivot never meets a multi-term sum.

use serde_json::json;

use crate::error::{Error, Result};
use crate::scalar::{Mode, Scalar};
use crate::sparse::SparseVec;

#[derive(Debug, Clone)]
pub struct Generator {
    pub id: String,
    pub coords: SparseVec,
}

impl Generator {
    pub fn new(id: impl Into<String>, coords: SparseVec) -> Self {
        Generator { id: id.into(), coords }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionOptions {
    /// Relative pivot-drop threshold (approx mode).
    pub pivot_tol: f64,
    /// Allowed disagreement between the Pythagoras and direct residuals,
    /// relative to `||f||^2` (approx mode).
    pub residual_rel_tol: f64,
    pub refinement_steps: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            pivot_tol: 1e-12,
            residual_rel_tol: 1e-8,
            refinement_steps: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub generator_ids: Vec<String>,
    pub gram: Vec<Vec<Scalar>>,
    pub rhs: Vec<Scalar>,
    /// One coefficient per generator; dropped generators get zero.
    pub coeffs: Vec<Scalar>,
    pub kept: Vec<bool>,
    pub rank: usize,
    pub f_norm_sq: Scalar,
    /// `||f||^2 - sum c_i <f, g_i>`.
    pub pythagoras_dist_sq: Scalar,
    /// `||f - P f||^2` computed from the vectors.
    pub direct_dist_sq: Scalar,
    /// Reported squared distance: the (identical) exact value, or the direct
    /// residual in approx mode.
    pub dist_sq: Scalar,
    pub projection: SparseVec,
    /// Ratio of largest to smallest kept pivot (approx mode only).
    pub condition_estimate: Option<f64>,
}

impl ProjectionResult {
    pub fn dist(&self) -> f64 {
        self.dist_sq.to_f64().max(0.0).sqrt()
    }

    /// `[dist - tail, dist + tail]` for a function known up to `tail` in norm.
    pub fn dist_interval(&self, tail: f64) -> (f64, f64) {
        let d = self.dist();
        ((d - tail).max(0.0), d + tail)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "generators": self.generator_ids,
            "rank": self.rank,
            "dist_sq_exact": if self.dist_sq.is_exact() { Some(self.dist_sq.to_string()) } else { None },
            "dist_sq": self.dist_sq.to_f64(),
            "dist": self.dist(),
            "condition_estimate": self.condition_estimate,
        })
    }
}

struct Factorization {
    mode: Mode,
    order: Vec<usize>,
    // (pivot, [(row, multiplier)]) in elimination order.
    ops: Vec<(usize, Vec<(usize, Scalar)>)>,
    reduced: Vec<Vec<Scalar>>,
}

impl Factorization {
    fn solve(&self, rhs: &[Scalar]) -> Result<Vec<Scalar>> {
        let mut r = rhs.to_vec();
        for (p, col) in &self.ops {
            let rp = r[*p].clone();
            if rp.is_zero() {
                continue;
            }
            for (i, l) in col {
                r[*i] = r[*i].try_sub(&l.try_mul(&rp)?)?;
            }
        }
        let mut c = vec![Scalar::zero(self.mode); rhs.len()];
        for (pos, &p) in self.order.iter().enumerate().rev() {
            let mut acc = r[p].clone();
            for &q in &self.order[pos + 1..] {
                let s = &self.reduced[p][q];
                if !s.is_zero() && !c[q].is_zero() {
                    acc = acc.try_sub(&s.try_mul(&c[q])?)?;
                }
            }
            c[p] = acc.try_div(&self.reduced[p][p])?;
        }
        Ok(c)
    }
}

fn factorize(gram: &[Vec<Scalar>], mode: Mode, opts: &ProjectionOptions) -> Result<Factorization> {
    let n = gram.len();
    let mut s: Vec<Vec<Scalar>> = gram.to_vec();
    let mut active = vec![true; n];
    let mut order = Vec::new();
    let mut ops = Vec::new();
    let max_diag0 = (0..n).map(|i| s[i][i].to_f64()).fold(0.0f64, f64::max);
    let drop_below = opts.pivot_tol * max_diag0;

    loop {
        let pivot = match mode {
            Mode::Exact => (0..n).find(|&i| active[i] && !s[i][i].is_zero()),
            Mode::Approx => (0..n)
                .filter(|&i| active[i])
                .max_by(|&a, &b| s[a][a].to_f64().total_cmp(&s[b][b].to_f64()))
                .filter(|&p| s[p][p].to_f64() > drop_below),
        };
        let Some(p) = pivot else { break };
        active[p] = false;
        order.push(p);
        let mut col = Vec::new();
        for i in 0..n {
            if !active[i] || s[i][p].is_zero() {
                continue;
            }
            let l = s[i][p].try_div(&s[p][p])?;
            for j in 0..n {
                if active[j] && !s[p][j].is_zero() {
                    let upd = l.try_mul(&s[p][j])?;
                    s[i][j] = s[i][j].try_sub(&upd)?;
                }
            }
            col.push((i, l));
        }
        ops.push((p, col));
    }

    // Whatever is left is (numerically) dependent; it must not be indefinite.
    let rest: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
    match mode {
        Mode::Exact => {
            for &i in &rest {
                if let Some(&j) = rest.iter().find(|&&j| !s[i][j].is_zero()) {
                    return Err(Error::Conditioning(format!(
                        "exact Gram matrix is not positive semidefinite: Schur entry ({i},{j}) = {} with zero pivot",
                        s[i][j]
                    )));
                }
            }
        }
        Mode::Approx => {
            let neg_tol = 1e-8 * max_diag0.max(f64::MIN_POSITIVE);
            if let Some(&i) = rest.iter().find(|&&i| s[i][i].to_f64() < -neg_tol) {
                return Err(Error::Conditioning(format!(
                    "Gram matrix indefinite: Schur pivot {i} = {:e} (max diagonal {:e}, kept {} of {n})",
                    s[i][i].to_f64(),
                    max_diag0,
                    order.len()
                )));
            }
        }
    }
    Ok(Factorization {
        mode,
        order,
        ops,
        reduced: s,
    })
}

fn combine(mode: Mode, gens: &[Generator], coeffs: &[Scalar]) -> Result<SparseVec> {
    let mut p = SparseVec::zero(mode);
    for (g, c) in gens.iter().zip(coeffs) {
        p.axpy(c, &g.coords)?;
    }
    Ok(p)
}

/// Projects `f` onto `span(gens)`.
pub fn project_vectors(f: &SparseVec, gens: &[Generator], opts: &ProjectionOptions) -> Result<ProjectionResult> {
    let mode = f.mode();
    for g in gens {
        if g.coords.mode() != mode {
            return Err(Error::Scalar(crate::scalar::ScalarError::ModeMismatch));
        }
        if g.coords.is_empty() {
            return Err(Error::InvalidGenerator(format!("generator {} is the zero vector", g.id)));
        }
    }
    let n = gens.len();
    let f_norm_sq = f.norm_sq()?;
    let mut gram = vec![vec![Scalar::zero(mode); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = gens[i].coords.dot(&gens[j].coords)?;
            gram[j][i] = v.clone();
            gram[i][j] = v;
        }
    }
    let rhs: Vec<Scalar> = gens.iter().map(|g| f.dot(&g.coords)).collect::<std::result::Result<_, _>>()?;

    let fact = factorize(&gram, mode, opts)?;
    let mut kept = vec![false; n];
    for &p in &fact.order {
        kept[p] = true;
    }
    let mut coeffs = fact.solve(&rhs)?;
    if mode == Mode::Approx {
        for _ in 0..opts.refinement_steps {
            let residual = f.try_sub(&combine(mode, gens, &coeffs)?)?;
            let r: Vec<Scalar> = gens
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    if kept[i] {
                        residual.dot(&g.coords)
                    } else {
                        Ok(Scalar::zero(mode))
                    }
                })
                .collect::<std::result::Result<_, _>>()?;
            let delta = fact.solve(&r)?;
            for (c, d) in coeffs.iter_mut().zip(&delta) {
                *c = c.try_add(d)?;
            }
        }
    }

    let mut explained = Scalar::zero(mode);
    for (c, b) in coeffs.iter().zip(&rhs) {
        explained = explained.try_add(&c.try_mul(b)?)?;
    }
    let pythagoras = f_norm_sq.try_sub(&explained)?;
    let projection = combine(mode, gens, &coeffs)?;
    let direct = f.try_sub(&projection)?.norm_sq()?;

    let dist_sq = match mode {
        Mode::Exact => {
            if pythagoras != direct {
                return Err(Error::ResidualMismatch {
                    pythagoras: pythagoras.to_string(),
                    direct: direct.to_string(),
                });
            }
            direct.clone()
        }
        Mode::Approx => {
            let scale = f_norm_sq.to_f64().abs().max(f64::MIN_POSITIVE);
            let gap = (pythagoras.to_f64() - direct.to_f64()).abs();
            if gap > opts.residual_rel_tol * scale {
                return Err(Error::ResidualMismatch {
                    pythagoras: pythagoras.to_string(),
                    direct: direct.to_string(),
                });
            }
            Scalar::Approx(direct.to_f64().max(0.0))
        }
    };

    let condition_estimate = match mode {
        Mode::Approx if !fact.order.is_empty() => {
            let piv: Vec<f64> = fact.order.iter().map(|&p| fact.reduced[p][p].to_f64().abs()).collect();
            let hi = piv.iter().cloned().fold(0.0, f64::max);
            let lo = piv.iter().cloned().fold(f64::INFINITY, f64::min);
            Some(hi / lo)
        }
        _ => None,
    };

    Ok(ProjectionResult {
        generator_ids: gens.iter().map(|g| g.id.clone()).collect(),
        gram,
        rhs,
        coeffs,
        rank: fact.order.len(),
        kept,
        f_norm_sq,
        pythagoras_dist_sq: pythagoras,
        direct_dist_sq: direct,
        dist_sq,
        projection,
        condition_estimate,
    })
}
