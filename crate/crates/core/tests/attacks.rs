use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fuzzylink::attacks::engine::{naive_first_hit, PatternSpace, SyndromeScanner};
use fuzzylink::attacks::{
    attack_records, generalized_attack, linear_decodability_attack, modified_decodability_attack, AttackOptions,
    ScanMode, Strategy, Verdict,
};
use fuzzylink::commitment::{enroll_with_codeword, EnrollOptions, HashAlg};
use fuzzylink::transforms::{random_transform, TransformDescriptor, TransformKind};
use fuzzylink::{bch_build, reed_solomon, Field, FieldMatrix, FieldVector};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// The incremental scan returns the same first hit as recomputing
    /// H (r - e) from scratch for every pattern.
    #[test]
    fn incremental_scan_matches_naive(
        q in prop::sample::select(vec![2u32, 3, 4, 5]),
        n in 1usize..9,
        rows in 1usize..5,
        b in 0usize..4,
        seed: u64,
    ) {
        let b = b.min(n);
        let field = Field::with_order(q).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = FieldMatrix::random(&field, rows, n, &mut rng);
        let r = FieldVector::random(&field, n, &mut rng);
        let space = PatternSpace::new(n, q, b).unwrap();
        let scanner = SyndromeScanner::new(&h, &r).unwrap();
        let fast = scanner.first_hit(&space, false, |e| Some(e.clone())).map(|hit| hit.payload);
        prop_assert_eq!(fast, naive_first_hit(&h, &r, b).unwrap());

        let mut naive_hits = 0u64;
        for p in space.iter() {
            let e = p.to_vector(&field, n);
            if h.mul_vec(&r.sub(&e).unwrap()).unwrap().is_zero() {
                naive_hits += 1;
            }
        }
        prop_assert_eq!(scanner.count_hits(&space, false), naive_hits);
    }

    #[test]
    fn rank_unrank_round_trip(q in 2u32..6, n in 1usize..30, b in 0usize..4, index: u64) {
        let b = b.min(n);
        let space = PatternSpace::new(n, q, b).unwrap();
        let i = index % space.total();
        let p = space.unrank(i).unwrap();
        prop_assert!(p.weight() <= b);
        prop_assert!(p.support.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(p.values.iter().all(|&v| v >= 1 && u32::from(v) < q));
        prop_assert_eq!(space.rank(&p), i);
        prop_assert!(space.unrank(space.total()).is_none());
    }
}

/// Scans that cross chunk boundaries agree between the pool and a single
/// thread, in both scan modes.
#[test]
fn parallel_scan_equals_sequential() {
    let code = bch_build(7, 13).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..6 {
        let w1 = FieldVector::random(code.field(), 127, &mut rng);
        let w2 = if trial % 2 == 0 {
            w1.add(&FieldVector::random_weight(code.field(), 127, 3, &mut rng).unwrap()).unwrap()
        } else {
            FieldVector::random(code.field(), 127, &mut rng)
        };
        let t1 = random_transform(TransformKind::BitPermutation, 127, code.field(), &mut rng);
        let t2 = random_transform(TransformKind::BitPermutation, 127, code.field(), &mut rng);
        let (r1, _) = enroll_with_codeword(&w1, &code, &t1, EnrollOptions::default(), &mut rng).unwrap();
        let (r2, _) = enroll_with_codeword(&w2, &code, &t2, EnrollOptions::default(), &mut rng).unwrap();
        for mode in [ScanMode::FirstHit, ScanMode::AllHits] {
            let mut opts = AttackOptions::new(3);
            opts.mode = mode;
            let (_, seq) = attack_records(&code, &r1, &r2, false, &opts).unwrap();
            opts.parallel = true;
            let (_, par) = attack_records(&code, &r1, &r2, false, &opts).unwrap();
            assert_eq!(seq.verdict, par.verdict);
            assert_eq!(seq.error_pattern, par.error_pattern);
            assert_eq!(seq.pattern_index, par.pattern_index);
            assert_eq!(seq.candidates, par.candidates);
            assert_eq!(seq.hits, par.hits);
        }
    }
}

fn perm_pair(n: usize, rng: &mut ChaCha8Rng) -> (TransformDescriptor, TransformDescriptor) {
    let f = Field::gf2();
    (
        random_transform(TransformKind::BitPermutation, n, &f, rng),
        random_transform(TransformKind::BitPermutation, n, &f, rng),
    )
}

/// With Q = P1^-1 and R = P2^-1 the linear attack is the modified attack.
#[test]
fn linear_attack_with_inverse_permutations_is_modified_attack() {
    let code = bch_build(5, 3).unwrap();
    let n = code.n();
    let g = code.generator();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut related = 0;
    for i in 0..1000 {
        let (t1, t2) = perm_pair(n, &mut rng);
        let w1 = FieldVector::random(code.field(), n, &mut rng);
        let w2 = if i % 2 == 0 {
            let e = rng.random_range(0..=2);
            w1.add(&FieldVector::random_weight(code.field(), n, e, &mut rng).unwrap()).unwrap()
        } else {
            FieldVector::random(code.field(), n, &mut rng)
        };
        let f1 = code.random_codeword(&mut rng).add(&t1.apply(&w1).unwrap()).unwrap();
        let f2 = code.random_codeword(&mut rng).add(&t2.apply(&w2).unwrap()).unwrap();
        let opts = AttackOptions::new(2);
        let modified = modified_decodability_attack(g, (&f1, &t1), (&f2, &t2), None, &opts).unwrap();
        let q = t1.inverse(n, code.field()).unwrap().as_matrix(n, code.field()).unwrap();
        let r = t2.inverse(n, code.field()).unwrap().as_matrix(n, code.field()).unwrap();
        let linear = linear_decodability_attack(g, &f1, &f2, &q, &r, None, &opts).unwrap();
        assert_eq!(modified.verdict, linear.verdict, "instance {i}");
        assert_eq!(modified.error_pattern, linear.error_pattern);
        assert_eq!(modified.pattern_index, linear.pattern_index);
        assert_eq!(modified.rank, linear.rank);
        assert_eq!(modified.candidates, linear.candidates);
        related += usize::from(modified.is_related());
    }
    assert!(related >= 500, "every related pair links, got {related}");
}

/// With Q = R = I the linear attack is the generalized attack with
/// G1 = G2 = G, over a non-binary field as well.
#[test]
fn linear_attack_with_identity_is_generalized_attack() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (field, code) in [
        (Field::gf2(), bch_build(4, 2).unwrap()),
        (Field::with_order(8).unwrap(), reed_solomon(&Field::with_order(8).unwrap(), 7, 3).unwrap()),
    ] {
        let n = code.n();
        let g = code.generator();
        let id = FieldMatrix::identity(&field, n);
        for _ in 0..200 {
            let w1 = FieldVector::random(&field, n, &mut rng);
            let w2 = w1.add(&FieldVector::random_weight(&field, n, 1, &mut rng).unwrap()).unwrap();
            let f1 = code.random_codeword(&mut rng).add(&w1).unwrap();
            let f2 = code.random_codeword(&mut rng).add(&w2).unwrap();
            let opts = AttackOptions::new(1);
            let a = linear_decodability_attack(g, &f1, &f2, &id, &id, None, &opts).unwrap();
            let b = generalized_attack(g, g, &f1, &f2, None, &opts).unwrap();
            assert_eq!(a.verdict, b.verdict);
            assert_eq!(a.error_pattern, b.error_pattern);
            assert_eq!(a.candidates, b.candidates);
        }
    }
}

/// Hash-confirmed candidates are consistent with both published records and
/// match the hidden codewords.
#[test]
fn hash_confirmed_candidates_reproduce_the_records() {
    let code = bch_build(5, 5).unwrap();
    let n = code.n();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let options = EnrollOptions { hash: Some(HashAlg::Sha256), noise_flips: 0 };
    let mut confirmed = 0;
    for _ in 0..100 {
        let (t1, t2) = perm_pair(n, &mut rng);
        let w1 = FieldVector::random(code.field(), n, &mut rng);
        let w2 = w1.add(&FieldVector::random_weight(code.field(), n, 1, &mut rng).unwrap()).unwrap();
        let (r1, c1) = enroll_with_codeword(&w1, &code, &t1, options, &mut rng).unwrap();
        let (r2, c2) = enroll_with_codeword(&w2, &code, &t2, options, &mut rng).unwrap();
        let (strategy, out) = attack_records(&code, &r1, &r2, true, &AttackOptions::new(1)).unwrap();
        assert_eq!(strategy, Strategy::Modified);
        assert_eq!(out.verdict, Verdict::Related);
        if out.hash_verified {
            confirmed += 1;
            let cand = out.candidates.unwrap();
            assert_eq!((&cand.c1, &cand.c2), (&c1, &c2));
            assert_eq!(cand.c1.add(&t1.apply(&cand.w1).unwrap()).unwrap(), r1.commitment);
            assert_eq!(cand.c2.add(&t2.apply(&cand.w2).unwrap()).unwrap(), r2.commitment);
            assert_eq!((&cand.w1, &cand.w2), (&w1, &w2));
        }
    }
    assert_eq!(confirmed, 100);
}

#[test]
fn bound_larger_than_length_is_an_error() {
    let code = bch_build(3, 1).unwrap();
    let g = code.generator();
    let f = FieldVector::zeros(code.field(), 7);
    assert!(generalized_attack(g, g, &f, &f, None, &AttackOptions::new(8)).is_err());
}
