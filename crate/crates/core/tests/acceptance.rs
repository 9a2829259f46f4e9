//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Every expected value is either asserted directly, hand-expanded, or
//! recomputed by an independent oracle inside the test. All checks are
//! exact; there are no tolerances anywhere.

use std::collections::BTreeSet;

use subshift::lgs::LambdaGraphSystem;
use subshift::sms::{brute_force_language, compare_languages, BasePolicy, Sms, SmsViolation};
use subshift::sse::{step_from_symbolic_automorphism, PsseChain};
use subshift::symbolic::{BitMatrix, FormalSum, Specification, Sym, SymbolicMatrix, Word};
use subshift::textile::{
    build_decoder, check_nondegenerate, enumerate_patches, extract_bias_word, shift_patch,
    BiasVariant, CodeSide, ShiftDirection,
};

fn sum(words: &[&str]) -> FormalSum {
    FormalSum::from_words(words.iter().map(|w| Word::from_chars(w)).collect())
}

fn full_shift() -> Sms {
    let m = SymbolicMatrix::new(1, 1, 1, vec![sum(&["a", "b"])]).unwrap();
    Sms::stationary(m, BitMatrix::identity(1)).unwrap()
}

fn golden_mean() -> Sms {
    let m = SymbolicMatrix::new(
        2,
        2,
        1,
        vec![sum(&["a"]), sum(&["a"]), sum(&["b"]), FormalSum::zero()],
    )
    .unwrap();
    Sms::stationary(m, BitMatrix::identity(2)).unwrap()
}

fn swap_pi() -> Specification {
    Specification::new(vec![
        (Word::from_chars("a"), Word::from_chars("b")),
        (Word::from_chars("b"), Word::from_chars("a")),
    ])
    .unwrap()
}

fn id_pi() -> Specification {
    Specification::new(vec![
        (Word::from_chars("a"), Word::from_chars("a")),
        (Word::from_chars("b"), Word::from_chars("b")),
    ])
    .unwrap()
}

fn swap_chain() -> PsseChain {
    let step = step_from_symbolic_automorphism(&full_shift(), &swap_pi()).unwrap();
    PsseChain::new(vec![step]).unwrap()
}

fn swap_letter(s: &Sym) -> Word {
    Word::from_chars(if s.as_str() == "a" { "b" } else { "a" })
}

fn swap_word(w: &Word) -> Word {
    let mut out = Word::empty();
    for s in w.syms() {
        out = out.concat(&swap_letter(s));
    }
    out
}

fn flatten(symbols: &[Word]) -> Word {
    let mut out = Word::empty();
    for s in symbols {
        out = out.concat(s);
    }
    out
}

#[test]
fn criterion_1_axiom_validation() {
    assert!(full_shift().validate().is_valid());
    assert!(golden_mean().validate().is_valid());

    let gm_m = golden_mean().matrix(0).unwrap().clone();
    let fs_m = full_shift().matrix(0).unwrap().clone();

    // mutation 1: golden mean with an all-zero I row
    let sys = Sms::stationary(
        gm_m.clone(),
        BitMatrix::new(2, 2, vec![1, 1, 0, 0]).unwrap(),
    )
    .unwrap();
    let report = sys.validate();
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, SmsViolation::RowZero { level: 0, row: 1 })));

    // mutation 2: golden mean with a doubled and an empty I column
    let sys = Sms::stationary(
        gm_m.clone(),
        BitMatrix::new(2, 2, vec![1, 0, 1, 0]).unwrap(),
    )
    .unwrap();
    let report = sys.validate();
    assert!(report.violations.iter().any(|v| matches!(
        v,
        SmsViolation::ColumnOnes {
            col: 0,
            ones: 2,
            ..
        }
    )));
    assert!(report.violations.iter().any(|v| matches!(
        v,
        SmsViolation::ColumnOnes {
            col: 1,
            ones: 0,
            ..
        }
    )));

    // mutation 3: explicit golden mean with a row-swapped second level
    let swapped = gm_m.permute_rows(&[1, 0]);
    let sys = Sms::explicit(vec![
        (gm_m.clone(), BitMatrix::identity(2)),
        (swapped, BitMatrix::identity(2)),
    ])
    .unwrap();
    let report = sys.validate();
    assert!(report.violations.iter().any(|v| matches!(
        v,
        SmsViolation::Commutation {
            level: 0,
            row: 0,
            col: 0,
            ..
        }
    )));

    // mutation 4: full shift with a zero I
    let sys = Sms::stationary(fs_m.clone(), BitMatrix::new(1, 1, vec![0]).unwrap()).unwrap();
    let report = sys.validate();
    assert!(report.violations.iter().any(|v| matches!(
        v,
        SmsViolation::ColumnOnes {
            col: 0,
            ones: 0,
            ..
        }
    )));
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, SmsViolation::RowZero { row: 0, .. })));

    // mutation 5: explicit full shift with a relabeled second level
    let doubled = SymbolicMatrix::new(1, 1, 1, vec![sum(&["a", "a"])]).unwrap();
    let sys = Sms::explicit(vec![
        (fs_m, BitMatrix::identity(1)),
        (doubled, BitMatrix::identity(1)),
    ])
    .unwrap();
    let report = sys.validate();
    assert!(report.violations.iter().any(|v| matches!(
        v,
        SmsViolation::Commutation {
            level: 0,
            row: 0,
            col: 0,
            ..
        }
    )));

    // mutation 6: golden mean with the transposition as I
    let sys = Sms::stationary(gm_m, BitMatrix::new(2, 2, vec![0, 1, 1, 0]).unwrap()).unwrap();
    let report = sys.validate();
    assert!(report.violations.iter().any(|v| matches!(
        v,
        SmsViolation::Commutation {
            level: 0,
            row: 0,
            col: 0,
            ..
        }
    )));

    println!("criterion 1 (axiom validation): PASS");
}

#[test]
fn criterion_2_structure_checks() {
    let g = LambdaGraphSystem::from_sms(&golden_mean()).unwrap();
    assert!(g.check_essential().is_empty());
    assert!(g.check_left_resolving().is_empty());
    assert!(g.check_local_property().is_empty());

    // the presentation [[a,b],[a,0]] has two a-edges into vertex 0
    let m = SymbolicMatrix::new(
        2,
        2,
        1,
        vec![sum(&["a"]), sum(&["b"]), sum(&["a"]), FormalSum::zero()],
    )
    .unwrap();
    let bad = Sms::stationary(m, BitMatrix::identity(2)).unwrap();
    let g = LambdaGraphSystem::from_sms(&bad).unwrap();
    let witnesses = g.check_left_resolving();
    assert_eq!(witnesses.len(), 1);
    let w = &witnesses[0];
    let edges = g.edges_at(0).unwrap();
    assert_eq!(edges[w.first].label, Word::from_chars("a"));
    assert_eq!(edges[w.second].label, Word::from_chars("a"));
    assert_eq!(edges[w.first].dst, 0);
    assert_eq!(edges[w.second].dst, 0);

    println!("criterion 2 (structure checks): PASS");
}

#[test]
fn criterion_3_language_oracle() {
    let gm = golden_mean();
    let syms = vec![Sym::new("a"), Sym::new("b")];
    let expect = [2usize, 3, 5, 8, 13];
    for (m, want) in (1..=5).zip(expect) {
        let enumerated = gm.language(m, BasePolicy::Deepest).unwrap();
        let brute = brute_force_language(&gm, &syms, m, 0).unwrap();
        assert_eq!(enumerated, brute, "length {m}");
        assert_eq!(enumerated.len(), want, "length {m}");
    }
    println!("criterion 3 (language oracle): PASS");
}

#[test]
fn criterion_4_higher_block_invariance() {
    for sys in [golden_mean(), full_shift()] {
        for n in [2usize, 3] {
            let blocked = sys.higher_block(n).unwrap();
            assert!(blocked.validate().is_valid());
            for m in 1..=6 {
                let cmp = compare_languages(&blocked, &sys, m, None).unwrap();
                assert!(cmp.equal, "n={n}, m={m}: {:?} {:?}", cmp.only_a, cmp.only_b);
            }
        }
    }
    println!("criterion 4 (higher-block invariance): PASS");
}

#[test]
fn criterion_5_lr_textile_and_dual() {
    let chain = swap_chain();
    let t = chain.textile().unwrap();
    let report = t.validate();
    assert!(report.is_valid(), "{:?}", report.violations);
    for depth in 1..=6 {
        assert!(check_nondegenerate(&t, depth).unwrap().is_nondegenerate());
    }
    let dual = t.dual().unwrap();
    let report = dual.validate();
    assert!(report.is_valid(), "{:?}", report.violations);
    for depth in 1..=6 {
        assert!(check_nondegenerate(&dual, depth)
            .unwrap()
            .is_nondegenerate());
    }
    let round = dual.dual().unwrap();
    assert_eq!(round, t.canonical_form().unwrap());
    println!("criterion 5 (LR textile, nondegeneracy, dual involution): PASS");
}

#[test]
fn criterion_6_decoders_and_automorphism() {
    let chain = swap_chain();
    let t = chain.textile().unwrap();
    let xi = build_decoder(&t, CodeSide::Top, 2).unwrap();
    assert!(xi.window <= 2);
    let eta = build_decoder(&t, CodeSide::Bottom, 2).unwrap();
    assert!(eta.window <= 2);
    // all admissible words of length <= 8 pass letterwise through the swap
    for m in 1..=8usize {
        for code in 0..(1u32 << m) {
            let mut w = Word::empty();
            for bit in 0..m {
                w = w.concat(&Word::from_chars(if code >> bit & 1 == 0 {
                    "a"
                } else {
                    "b"
                }));
            }
            let out = t.apply_automorphism(&w, 2).unwrap();
            let expected = swap_word(&w).slice(out.left, out.left + out.word.len());
            assert_eq!(out.word, expected);
        }
    }
    println!("criterion 6 (bounded decoders, letterwise automorphism): PASS");
}

#[test]
fn criterion_7_subshift_identification() {
    let one_step = swap_chain();
    let two_step = {
        let step = step_from_symbolic_automorphism(&full_shift(), &swap_pi()).unwrap();
        PsseChain::new(vec![step.clone(), step]).unwrap()
    };
    for (chain, chain_name) in [(&one_step, "1-step"), (&two_step, "2-step")] {
        let span = chain.len();
        let code = chain.forward_code().unwrap();
        for (k, n) in [(1usize, 1usize), (1, 2), (2, 1)] {
            let identified = chain.identify_subshift(k, n).unwrap();
            for m in 1..=4usize {
                // encoded images of all admissible inputs of matched length
                let input_len = n * m;
                if input_len > 10 {
                    continue;
                }
                let mut images: BTreeSet<Word> = BTreeSet::new();
                for code_bits in 0..(1u32 << input_len) {
                    let mut w = Word::empty();
                    for bit in 0..input_len {
                        w = w.concat(&Word::from_chars(if code_bits >> bit & 1 == 0 {
                            "a"
                        } else {
                            "b"
                        }));
                    }
                    let symbols = chain.encode_orbit(&w, k, n, m).unwrap();
                    images.insert(flatten(&symbols));
                }
                let lang = identified.language(m, BasePolicy::Deepest).unwrap();
                assert_eq!(
                    images, lang,
                    "{chain_name} chain, k={k}, n={n}, m={m}: encoded images differ from language"
                );
            }
            // the encoding intertwines phi^k sigma^n with the composite shift
            let m = 2usize;
            let long_len = n * (m + 1) + k * span;
            for code_bits in 0..(1u32 << long_len) {
                let mut w = Word::empty();
                for bit in 0..long_len {
                    w = w.concat(&Word::from_chars(if code_bits >> bit & 1 == 0 {
                        "a"
                    } else {
                        "b"
                    }));
                }
                let c_full = chain.encode_orbit(&w, k, n, m + 1).unwrap();
                let moved = code.apply_power(&w, k, n).unwrap();
                let c_moved = chain.encode_orbit(&moved.word, k, n, m).unwrap();
                assert_eq!(
                    c_moved.as_slice(),
                    &c_full[1..],
                    "{chain_name} chain, k={k}, n={n}: intertwining square fails on {w}"
                );
            }
        }
    }
    println!("criterion 7 (identification of phi^k sigma^n, intertwining): PASS");
}

#[test]
fn criterion_8_specification_automorphism() {
    let chain = swap_chain();
    let identified = chain.identify_subshift(1, 1).unwrap();
    for m in 1..=8usize {
        let lang = identified.language(m, BasePolicy::Deepest).unwrap();
        assert_eq!(lang.len(), 1usize << m, "length {m}");
    }
    // the identified system never consults pi beyond the specification pair
    let id_chain = {
        let step = step_from_symbolic_automorphism(&full_shift(), &id_pi()).unwrap();
        PsseChain::new(vec![step]).unwrap()
    };
    assert_eq!(
        chain.identify_subshift(1, 1).unwrap(),
        id_chain.identify_subshift(1, 1).unwrap()
    );
    println!("criterion 8 (specification automorphism realized as the full shift): PASS");
}

#[test]
fn criterion_9_patch_properties() {
    let chain = swap_chain();
    let data = chain.p_blocks().unwrap();
    let t = chain.textile().unwrap();
    let m_sys = full_shift();

    // membership and joint exhaustion for all rectangles up to 4x4
    for (k, n, count) in [(1usize, 1usize, 3usize), (1, 2, 2), (2, 1, 1)] {
        let product = subshift::sms::product_system(&data.blocked_system, &m_sys, k, n).unwrap();
        let lang = product.language(count, BasePolicy::Deepest).unwrap();
        let mut extracted: BTreeSet<Word> = BTreeSet::new();
        for rows in 1..=4usize {
            for cols in 1..=4usize {
                for patch in enumerate_patches(&t, rows, cols).unwrap() {
                    if let Ok(symbols) =
                        extract_bias_word(&t, &patch, k, n, BiasVariant::Check, count)
                    {
                        let flat = flatten(&symbols);
                        assert!(
                            lang.contains(&flat),
                            "extracted word {flat} is not in the product language (k={k}, n={n})"
                        );
                        extracted.insert(flat);
                    }
                }
            }
        }
        assert_eq!(extracted, lang, "k={k}, n={n}, count={count}");
    }

    // the check/hat readings are related by the (0,n)-shift on every patch
    let mut related = 0usize;
    for patch in enumerate_patches(&t, 4, 4).unwrap() {
        for (k, n) in [(1usize, 1usize), (1, 2)] {
            let count = 2usize;
            let hat = match extract_bias_word(&t, &patch, k, n, BiasVariant::Hat, count) {
                Ok(w) => w,
                Err(_) => continue,
            };
            let mut shifted = patch.clone();
            for _ in 0..n {
                shifted = shift_patch(&t, &shifted, ShiftDirection::Right).unwrap();
            }
            let check = match extract_bias_word(&t, &shifted, k, n, BiasVariant::Check, count - 1) {
                Ok(w) => w,
                Err(_) => continue,
            };
            for i in 0..count - 1 {
                let b_part = hat[i].slice(n, n + k);
                let a_part = hat[i + 1].slice(0, n);
                assert_eq!(check[i], b_part.concat(&a_part));
            }
            related += 1;
        }
    }
    assert!(related > 0);
    println!("criterion 9 (patch membership, exhaustion, shift relation): PASS");
}
