use std::collections::HashSet;

use num_bigint::BigInt;
use num_complex::Complex64;
use oddpoly_core::counterexample::{certificate_at, make_witnesses, required_index, u_vector, x_generators};
use oddpoly_core::mbasis::{Basis, WeightSpec};
use oddpoly_core::project::{project_vectors, Generator, ProjectionOptions};
use oddpoly_core::scalar::{register_sqrt, Mode, Rational, Scalar};
use oddpoly_core::space::{HFunction, SpaceHandle};
use oddpoly_core::sparse::SparseVec;
use oddpoly_core::variants::{build_sigma, SupportSpec};
use proptest::prelude::*;

const RADICANDS: [(i64, i64); 5] = [(2, 1), (3, 1), (5, 7), (6, 1), (11, 3)];

fn q(p: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(d))
}

fn rational() -> impl Strategy<Value = Rational> {
    (-40i64..=40, 1i64..=12).prop_map(|(p, d)| q(p, d))
}

/// `c_0 + sum_i c_i sqrt(r_i)` over a fixed pool of radicands.
fn exact_scalar() -> impl Strategy<Value = Scalar> {
    (rational(), prop::collection::vec((0usize..RADICANDS.len(), rational()), 0..3)).prop_map(|(c0, terms)| {
        let mut s = Scalar::Rational(c0);
        for (i, c) in terms {
            let (p, d) = RADICANDS[i];
            let root = register_sqrt(&q(p, d)).unwrap();
            s = &s + &(&Scalar::Rational(c) * &root);
        }
        s
    })
}

fn nonzero_monomial() -> impl Strategy<Value = Scalar> {
    (rational().prop_filter("non-zero", |r| *r != q(0, 1)), prop::collection::vec(0usize..RADICANDS.len(), 0..3))
        .prop_map(|(c, gens)| {
            let mut s = Scalar::Rational(c);
            for i in gens {
                let (p, d) = RADICANDS[i];
                s = &s * &register_sqrt(&q(p, d)).unwrap();
            }
            s
        })
}

fn eta_sq_list() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((1i64..=9, 1i64..=9), 24).prop_map(|v| v.into_iter().map(|(p, d)| q(p, d)).collect())
}

fn int_vector(len: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-5i64..=5, len)
}

fn to_sparse(entries: &[i64]) -> SparseVec {
    SparseVec::from_entries(
        Mode::Exact,
        entries.iter().enumerate().map(|(i, v)| (i, Scalar::from_int(*v, Mode::Exact))),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn addition_and_multiplication_are_associative(a in exact_scalar(), b in exact_scalar(), c in exact_scalar()) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    }

    #[test]
    fn multiplication_distributes(a in exact_scalar(), b in exact_scalar(), c in exact_scalar()) {
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
    }

    #[test]
    fn inverses(a in exact_scalar(), m in nonzero_monomial()) {
        prop_assert!((&a - &a).is_zero());
        prop_assert!((&a + &(-&a)).is_zero());
        let prod = &m * &m.try_recip().unwrap();
        prop_assert_eq!(prod, Scalar::one(Mode::Exact));
    }

    #[test]
    fn canonical_form_is_idempotent(a in exact_scalar(), b in exact_scalar()) {
        let s = &a * &b;
        prop_assert_eq!(s.canonicalize(), s.clone());
        prop_assert_eq!(s.canonicalize().canonicalize(), s);
    }

    #[test]
    fn rational_arithmetic_matches_reference(a in rational(), b in rational(), k in 0u32..40) {
        // Large powers exercise the unbalanced-gcd path.
        let big = &a * Rational::from_integer(BigInt::from(3).pow(k * 20));
        let (sa, sb) = (Scalar::Rational(big.clone()), Scalar::Rational(b.clone()));
        prop_assert_eq!(&sa + &sb, Scalar::Rational(&big + &b));
        prop_assert_eq!(&sa * &sb, Scalar::Rational(&big * &b));
    }

    #[test]
    fn approx_agrees_with_exact(a in exact_scalar(), b in exact_scalar()) {
        let exact = (&a * &b).to_f64();
        let approx = a.to_f64() * b.to_f64();
        prop_assert!((exact - approx).abs() <= 1e-9 * exact.abs().max(1.0));
    }

    #[test]
    fn biorthogonality_and_reconstruction_for_random_weights(eta_sq in eta_sq_list()) {
        let w = WeightSpec::eta_list(eta_sq, true, true).unwrap();
        let space = SpaceHandle::new(w, Mode::Exact, 20).unwrap();
        let cache = space.cache();
        prop_assert!(cache.check_biorthogonality(20).unwrap().is_exact_zero());
        for n in 0..=20 {
            prop_assert!(cache.x_vec(n).unwrap().len() <= 3);
            prop_assert!(cache.y_vec(n).unwrap().len() <= 3);
            for basis in [Basis::X, Basis::Y] {
                let back = cache.expand(&cache.reconstruct_e(n, basis).unwrap(), basis).unwrap();
                prop_assert_eq!(back, SparseVec::unit(n, Mode::Exact));
            }
        }
    }

    #[test]
    fn projection_is_monotone_and_pythagorean(
        f in int_vector(7),
        gens in prop::collection::vec(int_vector(7), 1..6),
    ) {
        let f = to_sparse(&f);
        prop_assume!(!f.is_empty());
        let gens: Vec<Generator> = gens
            .iter()
            .enumerate()
            .map(|(i, g)| Generator::new(format!("g{i}"), to_sparse(g)))
            .filter(|g| !g.coords.is_empty())
            .collect();
        let opts = ProjectionOptions::default();
        let mut prev = f.norm_sq().unwrap();
        for k in 1..=gens.len() {
            let p = project_vectors(&f, &gens[..k], &opts).unwrap();
            prop_assert_eq!(&p.pythagoras_dist_sq, &p.direct_dist_sq);
            let total = &p.dist_sq + &p.projection.norm_sq().unwrap();
            prop_assert_eq!(total, f.norm_sq().unwrap());
            prop_assert!(p.dist_sq.cmp_value(&prev).unwrap() != std::cmp::Ordering::Greater);
            prev = p.dist_sq;
        }
    }

    #[test]
    fn pairing_is_one_for_every_level(m in 0usize..20, n in 0usize..20) {
        let space = SpaceHandle::new(WeightSpec::eta_reciprocal(), Mode::Exact, required_index(m, n)).unwrap();
        let pair = make_witnesses(&space, m, n).unwrap();
        prop_assert_eq!(space.inner_product(&pair.f(), &pair.g()).unwrap(), Scalar::one(Mode::Exact));
    }

    #[test]
    fn odd_polynomials_stay_away_from_f(
        m in 1usize..12,
        n in 1usize..12,
        coeffs in prop::collection::vec(rational(), 12),
    ) {
        let space = SpaceHandle::new(WeightSpec::eta_reciprocal(), Mode::Exact, required_index(m, n)).unwrap();
        let pair = make_witnesses(&space, m, n).unwrap();
        let mut p = SparseVec::zero(Mode::Exact);
        for (j, c) in coeffs.iter().take(n + 1).enumerate() {
            p.axpy(&Scalar::Rational(c.clone()), &space.cache().x_vec(2 * j + 1).unwrap()).unwrap();
        }
        prop_assert!(p.dot(&pair.v).unwrap().is_zero());
        let dist_sq = pair.u.try_sub(&p).unwrap().norm_sq().unwrap();
        let bound_sq = certificate_at(&space, n).unwrap().bound_sq().unwrap();
        prop_assert!(dist_sq.cmp_value(&bound_sq).unwrap() != std::cmp::Ordering::Less);
    }

    #[test]
    fn odd_span_distance_is_nonincreasing(m in 2usize..10) {
        let space = SpaceHandle::new(WeightSpec::eta_reciprocal(), Mode::Exact, required_index(m, m)).unwrap();
        let f = HFunction::exact(u_vector(&space, m).unwrap());
        let opts = ProjectionOptions::default();
        let mut prev: Option<Scalar> = None;
        for k in 0..=m {
            let gens = x_generators(&space, (0..=k).map(|j| 2 * j + 1)).unwrap();
            let d = space.project(&f, &gens, &opts).unwrap().dist_sq;
            if let Some(prev) = &prev {
                prop_assert!(d.cmp_value(prev).unwrap() != std::cmp::Ordering::Greater);
            }
            let bound_sq = certificate_at(&space, k).unwrap().bound_sq().unwrap();
            prop_assert!(d.cmp_value(&bound_sq).unwrap() != std::cmp::Ordering::Less);
            prev = Some(d);
        }
    }

    #[test]
    fn sigma_is_injective_and_respects_parity(
        period in 2usize..7,
        residue_mask in 1u8..63,
        bound in 4usize..60,
    ) {
        let residues: Vec<usize> = (0..period).filter(|r| residue_mask & (1 << r) != 0).collect();
        prop_assume!(!residues.is_empty() && residues.len() < period);
        let spec = SupportSpec::Custom { members: vec![], prefix_len: 0, period, residues };
        let sigma = build_sigma(&spec, bound).unwrap();
        let mut seen = HashSet::new();
        for n in 0..=bound {
            let k = sigma.forward(n).unwrap();
            prop_assert!(seen.insert(k));
            prop_assert_eq!(spec.contains(k as usize), n % 2 == 1);
            prop_assert_eq!(sigma.inverse(k).unwrap(), n);
        }
    }

    #[test]
    fn point_evaluation_respects_the_norm(coeffs in int_vector(12), re in -0.9f64..0.9, im in -0.4f64..0.4) {
        let z = Complex64::new(re, im);
        prop_assume!(z.norm() < 0.95);
        let space = SpaceHandle::new(WeightSpec::eta_reciprocal(), Mode::Approx, 16).unwrap();
        let f = HFunction::exact(to_sparse(&coeffs).to_approx());
        let e = space.eval_at(&f, z, 1e-12).unwrap();
        let norm = f.norm_sq().unwrap().to_f64().sqrt();
        prop_assert!(e.value.norm() <= norm / (1.0 - z.norm()) + e.bound + 1e-9);
    }
}

#[test]
fn monomial_round_trip() {
    let space = SpaceHandle::new(WeightSpec::eta_reciprocal(), Mode::Exact, 130).unwrap();
    for n in 0..=128i64 {
        let f = HFunction::exact(space.monomial_coords(n).unwrap());
        let support = space.taylor_support(&f).unwrap();
        assert_eq!(support.len(), 1, "degree {n}");
        assert_eq!(support.get(&n), Some(&Scalar::one(Mode::Exact)), "degree {n}");
    }
}
