use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qtext::classify::{decide_translatable, Reason};
use qtext::generate::{oracle_feasible, OracleParams};
use qtext::graph::{graph_of_text, recognize, SimpleGraph};
use qtext::synth::{translate, TranslateOptions};
use qtext::text::{embed_text, text_properties, texts_equivalent, validate_text, Text, EMBED_TOL, ZERO_TOL};
use qtext::translation::{build_omega, check_witness, entanglement_parameter, TranslationWitness};
use qtext::{linalg, C64};

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

/// `n` random vectors in `C^d` (columns), `d ≥ n` so the text is efficient
/// with probability one.
fn vectors(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = DMatrix<C64>> {
    n.prop_flat_map(|n| (Just(n), n..=n + 2)).prop_flat_map(|(n, d)| {
        proptest::collection::vec(complex(), n * d).prop_map(move |v| DMatrix::from_vec(d, n, v))
    })
}

/// Efficient text with a random orthogonality pattern: diagonally dominant
/// entries on the edges of a random graph.
fn patterned_text(max_n: usize) -> impl Strategy<Value = Text> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (proptest::collection::vec(any::<bool>(), pairs), proptest::collection::vec((0.2..1.0f64, 0.0..std::f64::consts::TAU), pairs))
            .prop_map(move |(mask, vals)| {
                let mut g = DMatrix::<C64>::identity(n, n);
                let mut k = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        if mask[k] {
                            let z = C64::from_polar(vals[k].0, vals[k].1);
                            g[(i, j)] = z;
                            g[(j, i)] = z.conj();
                        }
                        k += 1;
                    }
                }
                let row = (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| g[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
                if row > 0.0 {
                    let s = 0.9 / row;
                    for i in 0..n {
                        for j in 0..n {
                            if i != j {
                                g[(i, j)] *= s;
                            }
                        }
                    }
                }
                validate_text(&g).unwrap()
            })
    })
}

fn rephase(t: &Text, phases: &[f64], perm: &[usize]) -> Text {
    let n = t.n();
    let u: Vec<C64> = phases.iter().map(|&a| C64::from_polar(1.0, a)).collect();
    let g = DMatrix::from_fn(n, n, |i, j| u[i].conj() * t.z(perm[i], perm[j]) * u[j]);
    validate_text(&g).unwrap()
}

fn overlap_pattern_checks(t: &Text, w: &TranslationWitness) -> Result<(), TestCaseError> {
    let g = graph_of_text(t);
    let overlaps = w.overlaps(t);
    let p = text_properties(t);
    if t.n() >= 2 && g.is_connected() && !p.fully_quantum {
        prop_assert!(w.big_q > 0.0);
    }
    if w.q.re != 0.0 {
        let zero: Vec<usize> = (0..t.n()).filter(|&i| overlaps[i].norm() <= ZERO_TOL).collect();
        let nonzero: Vec<usize> = (0..t.n()).filter(|&i| overlaps[i].norm() > ZERO_TOL).collect();
        prop_assert!(g.is_independent(&zero));
        prop_assert!(g.is_clique(&nonzero));
    }
    if p.fully_quantum && t.n() >= 3 {
        prop_assert!(overlaps.iter().all(|o| o.norm() > ZERO_TOL));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn embedding_reproduces_gram(v in vectors(1..=6), pad in any::<bool>()) {
        let t = Text::from_vectors(&v).unwrap();
        let emb = embed_text(&t, pad);
        let g = emb.vectors.adjoint() * &emb.vectors;
        prop_assert!(linalg::max_abs_diff(&g, t.gram()) <= EMBED_TOL);
        prop_assert_eq!(emb.dim, emb.rank() + usize::from(pad));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn equivalence_is_an_equivalence(t in patterned_text(5), a in proptest::collection::vec(0.0..6.3f64, 5), b in proptest::collection::vec(0.0..6.3f64, 5)) {
        let n = t.n();
        let id: Vec<usize> = (0..n).collect();
        let u = rephase(&t, &a[..n], &id);
        let v = rephase(&u, &b[..n], &id);
        prop_assert!(texts_equivalent(&t, &t).unwrap());
        prop_assert!(texts_equivalent(&t, &u).unwrap() && texts_equivalent(&u, &t).unwrap());
        prop_assert!(texts_equivalent(&u, &v).unwrap() && texts_equivalent(&t, &v).unwrap());
    }

    #[test]
    fn decision_is_invariant(t in patterned_text(5), phases in proptest::collection::vec(0.0..6.3f64, 5), seed in any::<u64>()) {
        let n = t.n();
        let perm = {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            p
        };
        let u = rephase(&t, &phases[..n], &perm);
        let (a, b) = (decide_translatable(&t).unwrap(), decide_translatable(&u).unwrap());
        prop_assert_eq!(a.translatable, b.translatable);
        prop_assert_eq!(a.reason, b.reason);
        prop_assert_eq!(a.sign_constraint, b.sign_constraint);
        prop_assert_eq!(a.signature.map(|s| s.counts()), b.signature.map(|s| s.counts()));
    }

    #[test]
    fn omega_gram_depends_on_q_only_through_big_q(v in vectors(1..=4), tab in proptest::collection::vec(complex(), 7), q in complex()) {
        prop_assume!(q.norm() > 1e-3);
        let t = Text::from_vectors(&v).unwrap();
        let emb = embed_text(&t, true);
        let mut tablet = DVector::from_iterator(emb.dim, tab.into_iter().take(emb.dim));
        prop_assume!(tablet.len() == emb.dim && tablet.norm() > 1e-3);
        tablet /= C64::new(tablet.norm(), 0.0);
        let gram = |q: C64| -> Option<DMatrix<C64>> {
            let sys = build_omega(&emb, &tablet, q).ok()?;
            let n = sys.omegas.len();
            Some(DMatrix::from_fn(n, n, |i, j| sys.omegas[i].dotc(&sys.omegas[j])))
        };
        for other in [q.conj(), C64::new(1.0, 0.0) / q.conj()] {
            prop_assert!((entanglement_parameter(other) - entanglement_parameter(q)).abs() < 1e-12);
            if let (Some(a), Some(b)) = (gram(q), gram(other)) {
                prop_assert!(linalg::max_abs_diff(&a, &b) < 1e-9);
            }
        }
    }

    #[test]
    fn well_split_is_hereditary(n in 1usize..=7, mask in any::<u64>(), keep in any::<u8>()) {
        let pairs = n * (n - 1) / 2;
        let g = SimpleGraph::from_mask(n, mask & ((1u64 << pairs) - 1));
        let vs: Vec<usize> = (0..n).filter(|&v| keep >> v & 1 == 1).collect();
        prop_assume!(!vs.is_empty());
        if recognize(&g).is_well_split() {
            prop_assert!(recognize(&g.induced(&vs)).is_well_split());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 120, ..ProptestConfig::default() })]

    #[test]
    fn translations_are_sound(t in patterned_text(6), seed in 0u64..1000) {
        let d = decide_translatable(&t).unwrap();
        match translate(&t, &TranslateOptions { seed, ..TranslateOptions::default() }) {
            Ok(w) => {
                prop_assert!(d.translatable);
                let r = check_witness(&t, &w).unwrap();
                prop_assert!(r.pass, "{:?}", r);
                prop_assert!(r.eq2.unwrap() <= 1e-8 && r.unitarity.unwrap() <= 1e-10);
                if !d.sign_constraint.is_empty() {
                    prop_assert!(d.sign_constraint.contains(&(w.big_q.signum() as i8)));
                }
                overlap_pattern_checks(&t, &w)?;
            }
            Err(e) => prop_assert!(!d.translatable, "translatable text failed: {}", e),
        }
    }

    #[test]
    fn translatability_is_hereditary(t in patterned_text(5), keep in any::<u8>()) {
        let idx: Vec<usize> = (0..t.n()).filter(|&i| keep >> i & 1 == 1).collect();
        prop_assume!(!idx.is_empty());
        if decide_translatable(&t).unwrap().translatable {
            prop_assert!(decide_translatable(&t.subtext(&idx)).unwrap().translatable);
        }
    }

    #[test]
    fn witness_files_round_trip(t in patterned_text(4)) {
        if let Ok(w) = translate(&t, &TranslateOptions::default()) {
            let json = serde_json::to_string(&w).unwrap();
            let back: TranslationWitness = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(&back, &w);
            prop_assert!(check_witness(&t, &back).unwrap().pass);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    /// Whatever the oracle finds, the decision procedure accepts, and on
    /// connected mixed texts the oracle only ever finds `Q > 0`.
    #[test]
    fn oracle_hits_are_decided_translatable(t in patterned_text(4), seed in 0u64..100) {
        let r = oracle_feasible(&t, &OracleParams { samples: 3000, seed, exhaustive: true });
        let d = decide_translatable(&t).unwrap();
        if r.found {
            prop_assert!(d.translatable, "oracle found a witness for {:?}", d.reason);
            if d.reason == Reason::OkMixed && graph_of_text(&t).is_connected() {
                prop_assert!(r.accepted_q.iter().all(|&q| q > 0.0));
            }
        }
    }
}
