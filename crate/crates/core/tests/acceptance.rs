//! One test per acceptance criterion. Each prints a single
//! `criterion NN PASS|FAIL ...` line (visible with `--nocapture`) and then
//! asserts. All tolerances and limits are pinned below.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use oddpoly_core::config::{RunConfig, SupportConfig, VariantConfig, WeightsConfig};
use oddpoly_core::counterexample::{
    headline_contrast, make_witnesses, partial_sum_norm_growth, required_index, summability_failure_report,
    SummabilityPlan, WitnessF,
};
use oddpoly_core::mbasis::{Basis, WeightSpec};
use oddpoly_core::pipeline::{cmd_distances, cmd_variant, cmd_verify, witness_sections};
use oddpoly_core::project::{project_vectors, Generator, ProjectionOptions};
use oddpoly_core::report::{ReportBundle, Status};
use oddpoly_core::scalar::{Mode, Rational, Scalar};
use oddpoly_core::space::{NormStatus, SpaceHandle};
use oddpoly_core::sparse::SparseVec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const APPROX_BIORTHOGONALITY_TOL: f64 = 1e-10;
const CRITERION_1_LIMIT: Duration = Duration::from_secs(5);
const CRITERION_5_LIMIT: Duration = Duration::from_secs(60);
const HEADLINE_K64_FLOOR: f64 = 0.615;
const ORACLE_INSTANCES: usize = 60;
const ORACLE_MAX_GENERATORS: usize = 8;
const ORACLE_APPROX_REL_TOL: f64 = 1e-10;
const CONTROL_CEILING: f64 = 0.01;
const GROWTH_ROOT_CEILING: f64 = 1.1;
const CROSS_MODE_REL_TOL: f64 = 1e-9;

fn line(n: u32, ok: bool, name: &str, detail: impl AsRef<str>) {
    println!(
        "criterion {n:02} {} {name}: {}",
        if ok { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
}

fn omega2() -> WeightSpec {
    WeightSpec::omega_power(&Rational::from_integer(BigInt::from(2))).unwrap()
}

fn q(p: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(d))
}

#[test]
fn criterion_01_biorthogonality() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, w) in [("omega=(n+1)^2", omega2()), ("eta=1/(n+1)", WeightSpec::eta_reciprocal())] {
        let exact = SpaceHandle::new(w.clone(), Mode::Exact, 130).unwrap();
        let r = exact.cache().check_biorthogonality(128).unwrap();
        ok &= r.is_exact_zero();
        detail.push(format!("{label} exact n,m<=128 max dev {}", r.max_abs));
        let approx = SpaceHandle::new(w, Mode::Approx, 514).unwrap();
        let r = approx.cache().check_biorthogonality(512).unwrap();
        ok &= r.max_abs < APPROX_BIORTHOGONALITY_TOL;
        detail.push(format!("{label} approx n,m<=512 max dev {:e}", r.max_abs));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < CRITERION_1_LIMIT;
    line(
        1,
        ok,
        "biorthogonality",
        format!("{}; {elapsed:.2?} (limit {CRITERION_1_LIMIT:?}, approx tol {APPROX_BIORTHOGONALITY_TOL:e})", detail.join("; ")),
    );
    assert!(ok);
}

#[test]
fn criterion_02_reconstruction() {
    let mut ok = true;
    for w in [omega2(), WeightSpec::eta_reciprocal()] {
        let space = SpaceHandle::new(w, Mode::Exact, 131).unwrap();
        let cache = space.cache();
        for n in 0..=128 {
            for basis in [Basis::X, Basis::Y] {
                let back = cache.expand(&cache.reconstruct_e(n, basis).unwrap(), basis).unwrap();
                ok &= back == SparseVec::unit(n, Mode::Exact);
            }
        }
    }
    line(2, ok, "reconstruction", "e_n rebuilt exactly from x and y for n <= 128, both weight families");
    assert!(ok);
}

#[test]
fn criterion_03_norm_bound() {
    let space = SpaceHandle::new(omega2(), Mode::Exact, 512).unwrap();
    let rows = space.monomial_norm_check(512).unwrap();
    let failed: Vec<usize> = rows.iter().filter(|r| r.status != NormStatus::Pass).map(|r| r.index).collect();
    let worst = rows
        .iter()
        .map(|r| r.norm_sq.to_f64() / r.bound_sq.as_ref().unwrap().to_f64())
        .fold(0.0, f64::max);
    let ok = failed.is_empty() && rows.len() == 513;
    line(
        3,
        ok,
        "norm bound",
        format!("||z^n||^2 <= (1+omega_n)^2 exactly for n <= 512; largest ratio {worst:.6}; failures {failed:?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_04_witness_identities() {
    let space = SpaceHandle::new(omega2(), Mode::Exact, required_index(64, 64)).unwrap();
    let pair = make_witnesses(&space, 64, 64).unwrap();
    let sections = witness_sections(&space, &pair, 1e-12).unwrap();
    let mut ok = true;
    for (section, name) in [
        ("f_odd", "f_even_coefficients_vanish"),
        ("g_perp_odd", "g_orthogonal_to_odd_monomials"),
        ("pairing", "pairing"),
    ] {
        let rec = sections.iter().find(|s| s.name == section).unwrap().get(name).unwrap();
        ok &= rec.status == Status::Pass;
    }
    let pairing = sections.iter().find(|s| s.name == "pairing").unwrap().get("pairing").unwrap();
    ok &= pairing.scalar == Some(Scalar::one(Mode::Exact));
    line(
        4,
        ok,
        "witness identities",
        format!(
            "omega=(n+1)^2, M=N=64: even coefficients vanish for n <= 63, g orthogonal for n <= 64, <f,g> = {}",
            pairing.exact.as_deref().unwrap_or("?")
        ),
    );
    assert!(ok);
}

fn basel_bound(k: usize) -> f64 {
    let s: f64 = (0..=k).map(|j| 1.0 / ((j + 1) as f64).powi(2)).sum();
    1.0 / (1.0 + s).sqrt()
}

#[test]
fn criterion_05_headline_contrast() {
    let start = Instant::now();
    let space = SpaceHandle::new(WeightSpec::eta_reciprocal(), Mode::Exact, required_index(64, 64)).unwrap();
    let pair = make_witnesses(&space, 64, 64).unwrap();
    let levels = [4, 8, 16, 32, 64];
    let h = headline_contrast(&space, &pair, &levels, &ProjectionOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let mut ok = h.full_span.dist_sq.is_exact() && h.full_span.dist_sq.is_zero() && !h.full_span_escalated;
    let mut detail = vec!["dist(f, z^0..z^129)^2 = 0 exactly".to_string()];
    for r in &h.rows {
        // The certificate is recomputed here from the partial Basel sum.
        let oracle = basel_bound(r.k);
        ok &= r.dominates && r.dist_sq.is_exact();
        ok &= (r.certificate.bound - oracle).abs() <= 1e-12;
        detail.push(format!("k={} dist {:.6} >= bound {:.6}", r.k, r.dist, r.certificate.bound));
    }
    let k64 = h.rows.iter().find(|r| r.k == 64).unwrap().certificate.bound;
    ok &= k64 >= HEADLINE_K64_FLOOR && h.nonincreasing;
    ok &= elapsed < CRITERION_5_LIMIT;
    line(
        5,
        ok,
        "headline contrast",
        format!(
            "{}; k=64 bound {k64:.6} (floor {HEADLINE_K64_FLOOR}); {elapsed:.2?} (limit {CRITERION_5_LIMIT:?})",
            detail.join("; ")
        ),
    );
    assert!(ok);
}

/// `det(A)` by dynamic programming over the set of used columns.
fn det_subset_dp(a: &[Vec<Rational>]) -> Rational {
    let n = a.len();
    if n == 0 {
        return Rational::one();
    }
    let mut dp = vec![Rational::zero(); 1 << n];
    dp[0] = Rational::one();
    for mask in 0usize..(1 << n) {
        if dp[mask].is_zero() {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == n {
            continue;
        }
        for c in 0..n {
            if mask & (1 << c) != 0 || a[row][c].is_zero() {
                continue;
            }
            // Inversions added by placing column c after the larger used columns.
            let larger = (mask >> (c + 1)).count_ones();
            let term = &dp[mask] * &a[row][c];
            let slot = &mut dp[mask | (1 << c)];
            if larger % 2 == 0 {
                *slot += term;
            } else {
                *slot -= term;
            }
        }
    }
    dp[(1 << n) - 1].clone()
}

fn gram(vs: &[&Vec<Rational>]) -> Vec<Vec<Rational>> {
    vs.iter()
        .map(|a| {
            vs.iter()
                .map(|b| a.iter().zip(b.iter()).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect()
}

/// Squared distance from `f` to `span(gens)` as a ratio of Gram determinants
/// over a maximal independent subset.
fn gram_oracle(f: &Vec<Rational>, gens: &[Vec<Rational>]) -> Rational {
    let mut basis: Vec<&Vec<Rational>> = Vec::new();
    for g in gens {
        let mut trial = basis.clone();
        trial.push(g);
        if !det_subset_dp(&gram(&trial)).is_zero() {
            basis = trial;
        }
    }
    let den = det_subset_dp(&gram(&basis));
    let mut with_f = basis.clone();
    with_f.push(f);
    det_subset_dp(&gram(&with_f)) / den
}

fn to_sparse(v: &[Rational], mode: Mode) -> SparseVec {
    SparseVec::from_entries(
        mode,
        v.iter()
            .enumerate()
            .map(|(i, r)| (i, Scalar::from_rational(r.clone(), mode))),
    )
    .unwrap()
}

#[test]
fn criterion_06_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let opts = ProjectionOptions::default();
    let mut exact_ok = 0usize;
    let mut approx_ok = 0usize;
    let mut worst_rel = 0.0f64;
    let mut done = 0usize;
    while done < ORACLE_INSTANCES {
        let dim = rng.gen_range(2..=10usize);
        let k = rng.gen_range(1..=ORACLE_MAX_GENERATORS);
        let entry = |rng: &mut ChaCha8Rng| q(rng.gen_range(-6..=6), rng.gen_range(1..=4));
        let f: Vec<Rational> = (0..dim).map(|_| entry(&mut rng)).collect();
        let mut gens: Vec<Vec<Rational>> = Vec::new();
        for _ in 0..k {
            if gens.len() >= 2 && rng.gen_bool(0.25) {
                // A deliberately dependent generator.
                let (a, b) = (&gens[0], &gens[1]);
                let c = entry(&mut rng);
                gens.push(a.iter().zip(b).map(|(x, y)| x + &c * y).collect());
            } else {
                gens.push((0..dim).map(|_| entry(&mut rng)).collect());
            }
        }
        if f.iter().all(|x| x.is_zero()) || gens.iter().any(|g| g.iter().all(|x| x.is_zero())) {
            continue;
        }
        done += 1;
        let want = gram_oracle(&f, &gens);

        let generators: Vec<Generator> = gens
            .iter()
            .enumerate()
            .map(|(i, g)| Generator::new(format!("g{i}"), to_sparse(g, Mode::Exact)))
            .collect();
        let got = project_vectors(&to_sparse(&f, Mode::Exact), &generators, &opts).unwrap();
        if got.dist_sq == Scalar::Rational(want.clone()) {
            exact_ok += 1;
        }

        let generators: Vec<Generator> = gens
            .iter()
            .enumerate()
            .map(|(i, g)| Generator::new(format!("g{i}"), to_sparse(g, Mode::Approx)))
            .collect();
        let fa = to_sparse(&f, Mode::Approx);
        let got = project_vectors(&fa, &generators, &opts).unwrap();
        let want_f = Scalar::Rational(want).to_f64();
        // Relative to ||f||^2, since the distance itself may vanish.
        let rel = (got.dist_sq.to_f64() - want_f).abs() / fa.norm_sq().unwrap().to_f64();
        worst_rel = worst_rel.max(rel);
        if rel <= ORACLE_APPROX_REL_TOL {
            approx_ok += 1;
        }
    }
    let ok = exact_ok == ORACLE_INSTANCES && approx_ok == ORACLE_INSTANCES;
    line(
        6,
        ok,
        "oracle equivalence",
        format!(
            "{ORACLE_INSTANCES} instances, <= {ORACLE_MAX_GENERATORS} generators: exact equal {exact_ok}, approx within {ORACLE_APPROX_REL_TOL:e} {approx_ok} (worst {worst_rel:e})"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_07_summability_failure() {
    let space0 = SpaceHandle::new(WeightSpec::eta_reciprocal(), Mode::Exact, required_index(64, 64)).unwrap();
    let pair0 = make_witnesses(&space0, 64, 64).unwrap();
    let plan = SummabilityPlan::standard(&pair0, 7);
    let top = plan.required_index(&space0, &pair0).unwrap();
    let space = SpaceHandle::new(WeightSpec::eta_reciprocal(), Mode::Exact, top).unwrap();
    let pair = make_witnesses(&space, 64, 64).unwrap();
    let table = summability_failure_report(&space, &pair, &plan, &ProjectionOptions::default()).unwrap();
    let count = |m: &str| table.rows.iter().filter(|r| r.method == m).count();
    let failed: Vec<String> = table
        .rows
        .iter()
        .filter(|r| r.status == Status::Fail)
        .map(|r| format!("{} {}", r.method, r.level))
        .collect();
    let control: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| r.method == "control_full_span")
        .map(|r| r.value)
        .collect();
    let last_control = table.rows.iter().rev().find(|r| r.method == "control_full_span").unwrap();
    let decreasing = control.windows(2).all(|w| w[1] < w[0]);
    let ok = failed.is_empty()
        && count("taylor") == 130
        && count("cesaro") == 130
        && count("abel") == 3
        && count("random_triangular") == 20
        && decreasing
        && last_control.level == "129"
        && last_control.value < CONTROL_CEILING;
    let abel: Vec<String> = table
        .rows
        .iter()
        .filter(|r| r.method == "abel")
        .map(|r| format!("r={} {:.4}", r.level, r.value))
        .collect();
    line(
        7,
        ok,
        "summability failure",
        format!(
            "{} rows, failures {failed:?}; abel {}; control {:?} (final < {CONTROL_CEILING})",
            table.rows.len(),
            abel.join(", "),
            control.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_08_partial_sum_growth() {
    let space = SpaceHandle::new(omega2(), Mode::Exact, 256).unwrap();
    let rows = partial_sum_norm_growth(&space, &WitnessF, 32, 256).unwrap();
    let worst = rows.iter().map(|r| r.root).fold(0.0, f64::max);
    let ok = rows.len() == 225 && worst <= GROWTH_ROOT_CEILING;
    line(
        8,
        ok,
        "partial-sum growth",
        format!("omega=(n+1)^2: max ||s_k(f)||^(1/k) over k in [32, 256] = {worst:.6} (ceiling {GROWTH_ROOT_CEILING})"),
    );
    assert!(ok);
}

fn small_config(variant: VariantConfig) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.levels.m = 32;
    cfg.levels.n = 32;
    cfg.levels.headline = vec![4, 8, 16, 32];
    cfg.variant = variant;
    cfg
}

#[test]
fn criterion_09_variants() {
    let mut ok = true;
    let mut detail = Vec::new();
    for (label, variant) in [
        ("support(evens)", VariantConfig::Support { set: SupportConfig::Evens }),
        ("support(squares)", VariantConfig::Support { set: SupportConfig::Squares }),
        ("fourier", VariantConfig::Fourier),
    ] {
        let b = cmd_variant(&small_config(variant)).unwrap();
        let has_extra = b.section("support").is_some() || b.section("symmetric_partial_sums").is_some();
        ok &= b.passed && has_extra;
        detail.push(format!("{label} {}", if b.passed { "pass" } else { "fail" }));
    }
    let cfg = small_config(VariantConfig::Identity);
    let identity = cmd_variant(&cfg).unwrap();
    let core = cmd_verify(&cfg).unwrap();
    let mut same = !identity.sections.is_empty();
    for s in &identity.sections {
        same &= core
            .section(&s.name)
            .is_some_and(|c| serde_json::to_string(c).unwrap() == serde_json::to_string(s).unwrap());
    }
    ok &= same && identity.passed;
    detail.push(format!("identity equals core sections: {same}"));
    line(9, ok, "variants", format!("M=N=32: {}", detail.join("; ")));
    assert!(ok);
}

fn values(b: &ReportBundle) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for (section, r) in b.records() {
        if let Some(v) = r.value {
            out.push((format!("{section}/{}", r.name), v));
        }
        if let Some(v) = r.bound {
            out.push((format!("{section}/{}#bound", r.name), v));
        }
    }
    for t in &b.tables {
        for r in &t.rows {
            out.push((format!("{}/{}/{}", t.name, r.method, r.level), r.value));
            if let Some(v) = r.bound {
                out.push((format!("{}/{}/{}#bound", t.name, r.method, r.level), v));
            }
        }
    }
    out
}

#[test]
fn criterion_10_cross_mode_consistency() {
    let mut runs: Vec<(String, Box<dyn Fn(&RunConfig) -> oddpoly_core::Result<ReportBundle>>, RunConfig)> = vec![
        ("verify".into(), Box::new(cmd_verify), RunConfig::default()),
        ("distances".into(), Box::new(cmd_distances), RunConfig::default()),
    ];
    let mut eta = RunConfig::default();
    eta.weights = WeightsConfig::EtaReciprocal;
    runs.push(("distances eta".into(), Box::new(cmd_distances), eta));
    runs.push((
        "variant fourier".into(),
        Box::new(cmd_variant),
        small_config(VariantConfig::Fourier),
    ));
    runs.push((
        "variant evens".into(),
        Box::new(cmd_variant),
        small_config(VariantConfig::Support { set: SupportConfig::Evens }),
    ));
    let mut compared = 0usize;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (label, cmd, cfg) in &runs {
        let mut approx_cfg = cfg.clone();
        approx_cfg.mode = Mode::Approx;
        let exact = values(&cmd(cfg).unwrap());
        let approx = values(&cmd(&approx_cfg).unwrap());
        for (key, a) in &exact {
            let Some((_, b)) = approx.iter().find(|(k, _)| k == key) else {
                continue;
            };
            compared += 1;
            // Relative, with unit scale for values that vanish exactly.
            let rel = (a - b).abs() / a.abs().max(b.abs()).max(1.0);
            worst = worst.max(rel);
            if rel > CROSS_MODE_REL_TOL {
                bad.push(format!("{label} {key}: {a} vs {b}"));
            }
        }
    }
    let ok = bad.is_empty() && compared > 0;
    line(
        10,
        ok,
        "cross-mode consistency",
        format!("{compared} values compared, worst relative gap {worst:e} (tol {CROSS_MODE_REL_TOL:e}); mismatches {bad:?}"),
    );
    assert!(ok);
}
