mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xattr_core::aggregate::aggregate_ratings;
use xattr_core::fixtures::{build_synthetic, random_stratum, LanguageSpec, SyntheticSpec};
use xattr_core::metrics::{
    accuracy_at, ais_tally, calibrate_threshold, example_attributed, exact_match, roc_auc, AisOptions, Pool,
    SubsetFilter, Top1Mode,
};
use xattr_core::model::{
    AnswerType, Example, JudgmentIndex, LanguageCode, Passage, RatingRecord, Scenario, ScoredPassage,
};
use xattr_core::rerank::rerank;
use xattr_core::scorer::{build_prompt_parts, invert_prompt, normalize, string_match_score, NLI_TEMPLATE};
use xattr_core::translate::{translate_example_for_test, MockTranslationClient, TranslationCache, Translator};

fn lang(code: &str) -> LanguageCode {
    LanguageCode::new(code).unwrap()
}

fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((0u32..12, any::<bool>()), 2..40)
        .prop_filter("both classes", |v| v.iter().any(|x| x.1) && v.iter().any(|x| !x.1))
        .prop_map(|v| (v.iter().map(|x| x.0 as f64 / 11.0).collect(), v.iter().map(|x| x.1).collect()))
}

proptest! {
    #[test]
    fn auc_matches_pair_count((scores, labels) in scored_labels()) {
        let auc = roc_auc(&scores, &labels).unwrap();
        prop_assert!((auc - brute_auc(&scores, &labels)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&auc));
    }

    #[test]
    fn auc_invariant_under_monotone_maps((scores, labels) in scored_labels()) {
        let auc = roc_auc(&scores, &labels).unwrap();
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 2.0).collect();
        prop_assert!((roc_auc(&warped, &labels).unwrap() - auc).abs() < 1e-12);
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((roc_auc(&negated, &labels).unwrap() - (1.0 - auc)).abs() < 1e-12);
    }

    #[test]
    fn calibration_is_optimal((scores, labels) in scored_labels()) {
        let cal = calibrate_threshold(&scores, &labels).unwrap();
        let mut distinct = scores.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        // accuracy of "score >= t" only changes at score values; t = +inf covers the rest
        let mut cuts: Vec<f64> = distinct.clone();
        cuts.push(f64::INFINITY);
        let acc = |t: f64| {
            let ok = scores.iter().zip(&labels).filter(|(s, l)| (**s >= t) == **l).count();
            100.0 * ok as f64 / scores.len() as f64
        };
        let best = cuts.iter().map(|&t| acc(t)).fold(f64::MIN, f64::max);
        prop_assert!((cal.accuracy - best).abs() < 1e-9);
        prop_assert!((accuracy_at(&scores, &labels, cal.threshold).unwrap() - cal.accuracy).abs() < 1e-9);
        let k = cuts.iter().position(|&t| acc(t) == best).unwrap();
        let expected = if k == 0 {
            distinct[0] - 1.0
        } else if k == distinct.len() {
            distinct[k - 1] + 1.0
        } else {
            distinct[k - 1] + (distinct[k] - distinct[k - 1]) / 2.0
        };
        prop_assert_eq!(cal.threshold, expected);
    }
}

#[derive(Debug, Clone)]
struct Case {
    example: Example,
    judgments: JudgmentIndex,
}

fn case(missing: bool) -> impl Strategy<Value = Case> {
    let label = if missing {
        prop_oneof![Just(Some(true)), Just(Some(false)), Just(None)].boxed()
    } else {
        any::<bool>().prop_map(Some).boxed()
    };
    prop::collection::vec((prop::sample::select(vec!["fi", "en", "sv"]), label), 0..6).prop_map(|ps| {
        let mut judgments = JudgmentIndex::default();
        let passages = ps
            .iter()
            .enumerate()
            .map(|(i, (l, y))| {
                let id = format!("p{}", i + 1);
                if let Some(y) = y {
                    judgments.insert("e", &id, *y);
                }
                Passage::new(id, format!("text {i}"), lang(l), i as u32 + 1).unwrap()
            })
            .collect();
        Case {
            example: Example {
                example_id: "e".into(),
                query: "q".into(),
                query_language: lang("fi"),
                answer: "a".into(),
                gold_answers: vec!["a".into()],
                answer_type: AnswerType::ShortSpan,
                passages,
                original: None,
            },
            judgments,
        }
    })
}

const SUBSETS: [SubsetFilter; 3] = [SubsetFilter::Any, SubsetFilter::InLanguage, SubsetFilter::EnglishExclusive];

proptest! {
    #[test]
    fn top1_never_exceeds_all(c in case(false)) {
        for subset in SUBSETS {
            for top1_mode in [Top1Mode::WithinSubset, Top1Mode::Overall] {
                let at = |pool| example_attributed(&c.example, &c.judgments, AisOptions { pool, subset, top1_mode }).unwrap();
                prop_assert!(!at(Pool::Top1) || at(Pool::All));
            }
        }
    }

    #[test]
    fn english_exclusive_containment(c in case(false)) {
        let at = |pool, subset| example_attributed(&c.example, &c.judgments, AisOptions::new(pool, subset)).unwrap();
        for pool in [Pool::Top1, Pool::All] {
            let ee = at(pool, SubsetFilter::EnglishExclusive);
            prop_assert!(!ee || at(Pool::All, SubsetFilter::Any));
            prop_assert!(!(ee && at(Pool::All, SubsetFilter::InLanguage)));
        }
    }

    #[test]
    fn missing_judgments_only_exclude(c in case(true)) {
        let t = ais_tally([&c.example], &c.judgments, AisOptions::new(Pool::All, SubsetFilter::Any));
        let complete = c.example.passages.iter().all(|p| c.judgments.label("e", &p.passage_id).is_some());
        prop_assert_eq!(t.evaluated + t.excluded.len(), 1);
        if complete {
            prop_assert_eq!(t.evaluated, 1);
        }
    }
}

fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-Z ]{0,12}",
        "[ａ-ｚＡ-Ｚ０-９ ]{0,8}",
        "[à-ÿ ß\t]{0,8}",
        "\\PC{0,10}",
    ]
}

proptest! {
    #[test]
    fn exact_match_symmetric(a in text(), b in text()) {
        prop_assert_eq!(exact_match(&a, std::slice::from_ref(&b)).unwrap(), exact_match(&b, std::slice::from_ref(&a)).unwrap());
        prop_assert!(exact_match(&a, std::slice::from_ref(&a)).unwrap());
    }

    #[test]
    fn normalize_idempotent(a in text()) {
        let n = normalize(&a);
        prop_assert_eq!(normalize(&n), n);
    }

    #[test]
    fn prompt_roundtrip(q in "[^\\x00]{0,20}", a in "\\PC{0,12}", p in "\\PC{0,30}") {
        prop_assume!(!q.contains("\" is \""));
        let t = build_prompt_parts(&q, &a, &p, NLI_TEMPLATE).unwrap();
        prop_assert_eq!(invert_prompt(&t, NLI_TEMPLATE).unwrap(), (q, a, p));
    }

    #[test]
    fn string_match_survives_appended_text(answer in "[a-zA-Z]{1,6}", before in "[a-z ]{0,10}", after in "[a-z ]{0,10}", extra in "[a-z0-9 ]{0,12}") {
        let passage = format!("{before}{answer}{after}");
        let mut e = example_with(&answer, &passage);
        prop_assert_eq!(string_match_score(&e, &e.passages[0]), 1.0);
        e.passages[0].text = format!("{extra} {passage} {extra}");
        prop_assert_eq!(string_match_score(&e, &e.passages[0]), 1.0);
        e.answer_type = AnswerType::YesNo;
        prop_assert_eq!(string_match_score(&e, &e.passages[0]), 0.0);
    }
}

fn example_with(answer: &str, passage: &str) -> Example {
    Example {
        example_id: "e".into(),
        query: "q".into(),
        query_language: lang("fi"),
        answer: answer.into(),
        gold_answers: vec![answer.into()],
        answer_type: AnswerType::ShortSpan,
        passages: vec![Passage::new("p1", passage, lang("fi"), 1).unwrap()],
        original: None,
    }
}

fn rater(vote: Option<bool>, flagged: bool, interpretable: Option<bool>, i: usize) -> RatingRecord {
    RatingRecord {
        example_id: "e".into(),
        passage_id: "p".into(),
        rater_id: format!("r{i}"),
        scenario: Scenario::InLanguage,
        interpretable,
        attributed: if flagged || interpretable == Some(false) { None } else { vote },
        flagged,
    }
}

fn ratings() -> impl Strategy<Value = Vec<RatingRecord>> {
    prop::collection::vec(
        (prop::option::of(any::<bool>()), prop::bool::weighted(0.15), prop::option::of(prop::bool::weighted(0.85))),
        1..6,
    )
    .prop_map(|v| v.into_iter().enumerate().map(|(i, (a, f, it))| rater(a, f, it, i)).collect())
}

proptest! {
    #[test]
    fn aggregation_order_free_and_counted(rs in ratings(), seed in any::<u64>()) {
        let mut shuffled = rs.clone();
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
        let a = aggregate_ratings(&rs).unwrap();
        prop_assert_eq!(&a, &aggregate_ratings(&shuffled).unwrap());
        let valid: Vec<bool> = rs
            .iter()
            .filter(|r| !r.flagged && r.interpretable != Some(false))
            .filter_map(|r| r.attributed)
            .collect();
        match a {
            None => prop_assert!(valid.len() < 2),
            Some(j) => {
                prop_assert!(valid.len() >= 2);
                prop_assert_eq!(j.label, valid.iter().filter(|v| **v).count() >= 2);
            }
        }
    }

    #[test]
    fn aggregation_monotone_in_yes_votes(rs in ratings(), which in any::<prop::sample::Index>()) {
        let before = aggregate_ratings(&rs).unwrap();
        let mut more = rs.clone();
        let i = which.index(more.len());
        if more[i].attributed == Some(false) {
            more[i].attributed = Some(true);
        }
        let after = aggregate_ratings(&more).unwrap();
        if let (Some(b), Some(a)) = (before, after) {
            prop_assert!(!b.label || a.label);
        }
    }

    #[test]
    fn rerank_invariant_to_monotone_rescoring(raw in prop::collection::vec(0u32..6, 1..8), seed in any::<u64>()) {
        let passages: Vec<Passage> = (0..raw.len())
            .map(|i| Passage::new(format!("p{}", i + 1), "t", lang("fi"), i as u32 + 1).unwrap())
            .collect();
        let mut e = example_with("a", "t");
        e.passages = passages;
        let scored = |f: &dyn Fn(f64) -> f64| -> Vec<ScoredPassage> {
            raw.iter()
                .enumerate()
                .map(|(i, s)| ScoredPassage::new(format!("p{}", i + 1), f(*s as f64 / 5.0), "x").unwrap())
                .collect()
        };
        let base = rerank(&e, &scored(&|x| x)).unwrap();
        let mut warped = scored(&|x| x * x * 0.5 + 0.1);
        rand::seq::SliceRandom::shuffle(warped.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(&rerank(&e, &warped).unwrap().selected_passage_id, &base.selected_passage_id);
        // ties resolve to the best retrieval rank
        let top = raw.iter().copied().max().unwrap();
        let first = raw.iter().position(|s| *s == top).unwrap();
        prop_assert_eq!(base.selected_passage_id, format!("p{}", first + 1));
    }

    #[test]
    fn translate_test_idempotent(langs in prop::collection::vec(prop::sample::select(vec!["fi", "en", "ja"]), 0..5), target in prop::sample::select(vec!["en", "fi"])) {
        let mut e = example_with("Helsinki", "Helsinki on pääkaupunki.");
        e.passages = langs
            .iter()
            .enumerate()
            .map(|(i, l)| Passage::new(format!("p{}", i + 1), format!("passage {i}"), lang(l), i as u32 + 1).unwrap())
            .collect();
        let tr = Translator::new(Arc::new(MockTranslationClient::new()), TranslationCache::in_memory());
        let target = lang(target);
        let once = translate_example_for_test(&e, &target, &tr).unwrap();
        let twice = translate_example_for_test(&once, &target, &tr).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.source_language(), &lang("fi"));
        for (p, q) in e.passages.iter().zip(&once.passages) {
            prop_assert_eq!(p.retrieval_rank, q.retrieval_rank);
            prop_assert_eq!(q.source_language(), &p.language);
            prop_assert_eq!(&q.language, &target);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fixture_recount_exact(n_em in 0usize..25, n_non in 0usize..25, n_none in 0usize..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut spec = LanguageSpec::new("fi", random_stratum(n_em, &mut rng)).unwrap();
        spec.non_exact_match = random_stratum(n_non, &mut rng);
        spec.no_gold = random_stratum(n_none, &mut rng);
        let fx = build_synthetic(&SyntheticSpec::new(vec![spec.clone()]), seed).unwrap();
        let counts = common::recount(&fx.examples, &fx.judgments, Scenario::InLanguage);
        let get = |s| counts.get(&("fi".to_owned(), s)).copied().unwrap_or_default();
        prop_assert_eq!(get(common::Stratum::Em), spec.exact_match);
        prop_assert_eq!(get(common::Stratum::NonEm), spec.non_exact_match);
        prop_assert_eq!(get(common::Stratum::NoGold), spec.no_gold);
    }
}
