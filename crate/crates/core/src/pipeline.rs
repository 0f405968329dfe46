//! The three commands behind the CLI, each producing a [`ReportBundle`].

use crate::config::{RunConfig, VariantConfig};
use crate::counterexample::{
    abel_dilate_check, apply_summability, check_f_odd, check_g_perp_odd, check_pairing, headline_contrast,
    make_witnesses, partial_sum_norm_growth, required_index, summability_failure_report, SummabilityPlan,
    SummabilityVector, WitnessF, WitnessPair,
};
use crate::error::{Error, Result};
use crate::mbasis::Basis;
use crate::project::ProjectionOptions;
use crate::report::{CheckRecord, DistanceRow, DistanceTable, ReportBundle, Section, Status};
use crate::scalar::{format_rational, Mode, Scalar};
use crate::space::{NormStatus, SpaceHandle};
use crate::sparse::SparseVec;
use crate::variants::{fourier_counterexample, fourier_space, support_space, supported_span_distance};

/// Process exit status for a finished run.
pub fn exit_code(bundle: &ReportBundle) -> i32 {
    if bundle.passed {
        0
    } else {
        1
    }
}

impl Error {
    /// Exit status for a run that stopped with this error: 3 for numerical
    /// conditioning, 2 for configuration and usage problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Conditioning(_) | Error::ResidualMismatch { .. } => 3,
            Error::Config(_)
            | Error::WeightSpec(_)
            | Error::WrongWeightMode { .. }
            | Error::OutsideWindow { .. }
            | Error::IndexOutOfRange { .. }
            | Error::IndexMap(_)
            | Error::NonSummable(_)
            | Error::Unsupported(_)
            | Error::Json(_) => 2,
            _ => 1,
        }
    }
}

fn projection_options(cfg: &RunConfig) -> ProjectionOptions {
    ProjectionOptions {
        pivot_tol: cfg.tolerances.pivot,
        residual_rel_tol: cfg.tolerances.residual,
        ..ProjectionOptions::default()
    }
}

fn headline_top(cfg: &RunConfig) -> usize {
    let l = &cfg.levels;
    let k = l.headline.iter().copied().max().unwrap_or(0);
    required_index(l.m, l.n).max(2 * k + 1)
}

/// `max |<x_n, y_m> - delta_nm|` and the reconstruction of every `e_n` from
/// both families.
pub fn basis_section(space: &SpaceHandle, n_max: usize, tol: f64) -> Result<Section> {
    let mut s = Section::new("biorthogonality");
    let cache = space.cache();
    let report = cache.check_biorthogonality(n_max)?;
    let ok = match space.mode() {
        Mode::Exact => report.is_exact_zero(),
        Mode::Approx => report.max_abs < tol,
    };
    let mut rec = CheckRecord::new("x_y_biorthogonal", Status::from_bool(ok))
        .with_scalar(&report.max_deviation)
        .with_window(format!("n, m <= {n_max}"));
    if space.mode() == Mode::Approx {
        rec = rec.with_bound(tol);
    }
    if let (false, Some((n, m))) = (ok, report.worst_pair) {
        rec = rec.with_offending(vec![format!("(n, m) = ({n}, {m}): {}", report.max_abs)]);
    }
    s.push(rec);

    for (basis, name) in [(Basis::X, "reconstruct_e_from_x"), (Basis::Y, "reconstruct_e_from_y")] {
        let mut bad = Vec::new();
        let mut worst = 0.0f64;
        for n in 0..=n_max {
            let coeffs = cache.reconstruct_e(n, basis)?;
            let mut e = SparseVec::zero(space.mode());
            e.set(n, Scalar::one(space.mode()))?;
            let diff = cache.expand(&coeffs, basis)?.try_sub(&e)?;
            let dev = diff.iter().map(|(_, c)| c.to_f64().abs()).fold(0.0, f64::max);
            worst = worst.max(dev);
            let zero = match space.mode() {
                Mode::Exact => diff.iter().all(|(_, c)| c.is_zero()),
                Mode::Approx => dev <= tol,
            };
            if !zero {
                bad.push(format!("n = {n}: {dev:e}"));
            }
        }
        s.push(
            CheckRecord::new(name, Status::Pass)
                .with_value(worst)
                .with_window(format!("n <= {n_max}"))
                .with_offending(bad),
        );
    }
    Ok(s)
}

/// `||z^n||^2 <= (1 + omega_n)^2`, informational for eta-direct weights.
pub fn norm_bound_section(space: &SpaceHandle, n_max: usize) -> Result<Section> {
    let rows = space.monomial_norm_check(n_max)?;
    let claims = rows.iter().any(|r| r.status != NormStatus::Info);
    let worst_ratio = rows
        .iter()
        .filter_map(|r| r.bound_sq.as_ref().map(|b| r.norm_sq.to_f64() / b.to_f64()))
        .fold(0.0, f64::max);
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| r.status == NormStatus::Fail)
        .map(|r| format!("n = {}: ||z^n||^2 = {}", r.index, r.norm_sq.to_f64()))
        .collect();
    let mut rec = CheckRecord::new("monomial_norm_bound", if claims { Status::Pass } else { Status::Info })
        .with_window(format!("n <= {n_max}"))
        .with_offending(failed);
    if claims {
        rec = rec.with_value(worst_ratio).with_bound(1.0).with_note("largest ||z^n||^2 / (1 + omega_n)^2");
    } else {
        rec = rec.with_note("no norm bound is claimed for these weights");
    }
    let mut s = Section::new("norm_bound");
    s.push(rec);
    Ok(s)
}

/// Oddness, orthogonality and pairing of the witnesses.
pub fn witness_sections(space: &SpaceHandle, pair: &WitnessPair, tol: f64) -> Result<Vec<Section>> {
    let mut pairing = Section::new("pairing");
    pairing.push(check_pairing(space, pair, tol)?);
    Ok(vec![
        check_f_odd(space, pair, pair.level_m - 1, tol)?,
        check_g_perp_odd(space, pair, pair.level_n, tol)?,
        pairing,
    ])
}

/// Basis identities, norm bound, witness identities and the headline contrast.
pub fn cmd_verify(cfg: &RunConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let l = &cfg.levels;
    let tol = cfg.tolerances.zero;
    let top = headline_top(cfg).max(l.biorthogonality + 3).max(l.norm_bound);
    let space = SpaceHandle::new(cfg.weight_spec()?, cfg.mode, top)?;
    let pair = make_witnesses(&space, l.m, l.n)?;
    let opts = projection_options(cfg);

    let mut bundle = ReportBundle::new("verify", cfg.to_json());
    bundle.add_section(basis_section(&space, l.biorthogonality, cfg.tolerances.biorthogonality)?);
    bundle.add_section(norm_bound_section(&space, l.norm_bound)?);
    for s in witness_sections(&space, &pair, tol)? {
        bundle.add_section(s);
    }
    let headline = headline_contrast(&space, &pair, &l.headline, &opts)?;
    bundle.add_section(headline.to_section(&space, l.m)?);
    bundle.add_table(headline.to_table(l.m));
    Ok(bundle)
}

/// Distance tables: headline contrast, summability rows with their
/// certificates, dilate identities and partial-sum growth.
pub fn cmd_distances(cfg: &RunConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let l = &cfg.levels;
    let tol = cfg.tolerances.zero;
    let opts = projection_options(cfg);
    let weights = cfg.weight_spec()?;
    let growth = weights.is_omega() && weights.nth_root_limit_one;

    let mut space = SpaceHandle::new(weights, cfg.mode, headline_top(cfg))?;
    let pair = make_witnesses(&space, l.m, l.n)?;
    let mut plan = SummabilityPlan::standard(&pair, cfg.seed);
    plan.radii = cfg.radii()?;
    plan.random_rows = l.random_rows;
    plan.tail_target = cfg.tolerances.series_tail;
    let mut top = plan.required_index(&space, &pair)?;
    if growth {
        top = top.max(l.growth_max);
    }
    space.ensure_index(top)?;

    let mut bundle = ReportBundle::new("distances", cfg.to_json());
    let headline = headline_contrast(&space, &pair, &l.headline, &opts)?;
    bundle.add_section(headline.to_section(&space, l.m)?);
    bundle.add_table(headline.to_table(l.m));
    bundle.add_table(summability_failure_report(&space, &pair, &plan, &opts)?);

    let mut dilates = Section::new("abel_dilates");
    for r in &plan.radii {
        let out = apply_summability(
            &space,
            &WitnessF,
            &SummabilityVector::Abel { r: r.clone() },
            None,
            plan.tail_target,
        )?;
        let k = out.truncation.unwrap_or(0);
        let (ok, worst) = abel_dilate_check(&space, &WitnessF, r, &out, 2 * l.m + 1, tol)?;
        dilates.push(
            CheckRecord::new(format!("abel_equals_dilate_r{}", format_rational(r)), Status::from_bool(ok))
                .with_value(worst)
                .with_slack(out.series_tail)
                .with_window(format!("truncation K = {k}")),
        );
    }
    bundle.add_section(dilates);

    let mut g = Section::new("partial_sum_growth");
    if growth {
        let rows = partial_sum_norm_growth(&space, &WitnessF, l.growth_min, l.growth_max)?;
        let worst = rows.iter().map(|r| r.root).fold(0.0, f64::max);
        let bad: Vec<String> = rows
            .iter()
            .filter(|r| r.root > l.growth_root_limit)
            .map(|r| format!("k = {}: {}", r.k, r.root))
            .collect();
        g.push(
            CheckRecord::new("partial_sum_root_bound", Status::Pass)
                .with_value(worst)
                .with_bound(l.growth_root_limit)
                .with_window(format!("k in {}..={}", l.growth_min, l.growth_max))
                .with_offending(bad),
        );
        let mut t = DistanceTable::new("growth");
        for r in &rows {
            t.rows.push(DistanceRow {
                method: "partial_sum_norm".into(),
                level: r.k.to_string(),
                exact: None,
                value: r.norm,
                bound: None,
                slack: 0.0,
                status: Status::Info,
                note: None,
            });
        }
        bundle.add_table(t);
    } else {
        g.push(
            CheckRecord::new("partial_sum_root_bound", Status::Info)
                .with_note("growth is tabulated for omega weights with omega_n^(1/n) -> 1"),
        );
    }
    bundle.add_section(g);
    Ok(bundle)
}

/// The configured variant: identity, a support set, or the Fourier model.
pub fn cmd_variant(cfg: &RunConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let l = &cfg.levels;
    let tol = cfg.tolerances.zero;
    let opts = projection_options(cfg);
    let weights = cfg.weight_spec()?;
    let top = headline_top(cfg);
    let mut bundle = ReportBundle::new("variant", cfg.to_json());
    let (space, extra): (SpaceHandle, Option<Vec<Section>>) = match &cfg.variant {
        VariantConfig::Identity => (SpaceHandle::new(weights, cfg.mode, top)?, None),
        VariantConfig::Support { set } => {
            let spec = set.to_spec();
            let space = support_space(weights, cfg.mode, &spec, top)?;
            let pair = make_witnesses(&space, l.m, l.n)?;
            let sections = supported_span_distance(&space, &spec, &pair, &l.headline, &opts, tol)?;
            (space, Some(sections))
        }
        VariantConfig::Fourier => {
            let ps = l.partial_sums.iter().copied().max().unwrap_or(0);
            let space = fourier_space(weights, cfg.mode, top.max(2 * ps + 4))?;
            let pair = make_witnesses(&space, l.m, l.n)?;
            let sections = fourier_counterexample(&space, &pair, &l.headline, &l.partial_sums, &opts, tol)?;
            (space, Some(sections))
        }
    };
    match extra {
        Some(sections) => {
            for s in sections {
                bundle.add_section(s);
            }
        }
        None => {
            let pair = make_witnesses(&space, l.m, l.n)?;
            for s in witness_sections(&space, &pair, tol)? {
                bundle.add_section(s);
            }
            let headline = headline_contrast(&space, &pair, &l.headline, &opts)?;
            bundle.add_section(headline.to_section(&space, l.m)?);
        }
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{SupportConfig, WeightsConfig};

    fn small() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.levels.m = 8;
        cfg.levels.n = 8;
        cfg.levels.headline = vec![2, 4, 8];
        cfg.levels.biorthogonality = 16;
        cfg.levels.norm_bound = 32;
        cfg.levels.growth_min = 4;
        cfg.levels.growth_max = 32;
        cfg.levels.growth_root_limit = 2.0;
        cfg.levels.random_rows = 3;
        cfg.levels.radii = vec!["1/2".into()];
        cfg.tolerances.series_tail = 1e-3;
        cfg
    }

    #[test]
    fn verify_passes_small() {
        for mode in [Mode::Exact, Mode::Approx] {
            let mut cfg = small();
            cfg.mode = mode;
            let b = cmd_verify(&cfg).unwrap();
            assert!(b.passed, "{}", b.to_json().unwrap());
            assert_eq!(exit_code(&b), 0);
            assert!(b.section("biorthogonality").is_some());
        }
    }

    #[test]
    fn eta_weights_report_norm_bound_as_info() {
        let mut cfg = small();
        cfg.weights = WeightsConfig::EtaReciprocal;
        let b = cmd_verify(&cfg).unwrap();
        let rec = b.section("norm_bound").unwrap().get("monomial_norm_bound").unwrap();
        assert_eq!(rec.status, Status::Info);
    }

    #[test]
    fn distances_pass_small() {
        let b = cmd_distances(&small()).unwrap();
        assert!(b.passed, "{}", b.to_json().unwrap());
        assert!(b.table("summability").is_some());
        assert!(b.table("growth").is_some());
    }

    #[test]
    fn variants_pass_small() {
        for variant in [
            VariantConfig::Identity,
            VariantConfig::Support { set: SupportConfig::Evens },
            VariantConfig::Fourier,
        ] {
            let mut cfg = small();
            cfg.variant = variant;
            let b = cmd_variant(&cfg).unwrap();
            assert!(b.passed, "{}", b.to_json().unwrap());
        }
    }

    #[test]
    fn identity_variant_reproduces_verify_sections() {
        let cfg = small();
        let v = cmd_verify(&cfg).unwrap();
        let i = cmd_variant(&cfg).unwrap();
        for s in &i.sections {
            let base = v.section(&s.name).unwrap();
            assert_eq!(serde_json::to_string(s).unwrap(), serde_json::to_string(base).unwrap());
        }
    }

    #[test]
    fn error_exit_codes() {
        assert_eq!(Error::Config("x".into()).exit_code(), 2);
        assert_eq!(Error::Conditioning("x".into()).exit_code(), 3);
    }
}
