mod common;

use common::{bundled_dir, check_golden, golden_dir};
use xattr_core::fixtures::{bundled_documents, write_bundled};
use xattr_core::mine::{mine_all, render_training_file};
use xattr_core::model::LanguageCode;
use xattr_core::scorer::{build_fewshot_prompt, Exemplar, FewShotTarget, NLI_TEMPLATE};

#[test]
fn bundled_fixture_matches_generator() {
    let tmp = tempfile::tempdir().unwrap();
    write_bundled(tmp.path()).unwrap();
    for name in [
        "examples.jsonl",
        "ratings.jsonl",
        "judgments.jsonl",
        "scores.jsonl",
        "documents.jsonl",
        "handcrafted.jsonl",
    ] {
        let fresh = std::fs::read_to_string(tmp.path().join(name)).unwrap();
        check_golden(&bundled_dir().join(name), &fresh);
    }
}

#[test]
fn training_file_snapshot() {
    let (pairs, warnings) = mine_all(&bundled_documents(), 10, 7).unwrap();
    assert_eq!(warnings.len(), 1);
    assert_eq!(pairs.len(), 11 + 5 + 1);
    let text = render_training_file(&pairs, NLI_TEMPLATE, 7).unwrap();
    check_golden(&golden_dir().join("training_seed7.jsonl"), &text);
}

fn exemplar(q: &str, a: &str, p: &str, ql: &str, pl: &str, label: bool, why: &str) -> Exemplar {
    Exemplar {
        query: q.into(),
        answer: a.into(),
        passage: p.into(),
        query_language: LanguageCode::new(ql).unwrap(),
        passage_language: LanguageCode::new(pl).unwrap(),
        label,
        rationale: Some(why.into()),
    }
}

fn pool() -> Vec<Exemplar> {
    vec![
        exemplar("Kuka kirjoitti Kalevalan?", "Elias Lönnrot", "Elias Lönnrot kokosi Kalevalan kansanrunoista.", "fi", "fi", true, "Kohta nimeää kokoajan."),
        exemplar("Milloin Suomi itsenäistyi?", "1917", "Suomen itsenäisyyspäivää vietetään joulukuussa.", "fi", "fi", false, "Vuotta ei mainita."),
        exemplar("Mikä on Suomen suurin järvi?", "Saimaa", "Saimaa is the largest lake in Finland.", "fi", "en", true, "The passage names Saimaa."),
        exemplar("Kuinka pitkä on Tornionjoki?", "522 km", "The Torne river forms part of the border with Sweden.", "fi", "en", false, "No length is given."),
        exemplar("Missä Sibelius syntyi?", "Hämeenlinnassa", "Jean Sibelius syntyi Hämeenlinnassa vuonna 1865.", "fi", "fi", true, "Syntymäpaikka mainitaan."),
        exemplar("Mikä on Lapin pääkaupunki?", "Rovaniemi", "Rovaniemi is the administrative centre of Lapland.", "fi", "en", true, "Stated directly."),
        exemplar("Who founded Nokia?", "Fredrik Idestam", "Nokia began as a paper mill.", "en", "en", false, "Founder missing."),
    ]
}

#[test]
fn fewshot_prompt_snapshot() {
    let fi = LanguageCode::new("fi").unwrap();
    let target = FewShotTarget {
        query: "Mikä on Suomen pääkaupunki?",
        answer: "Helsinki",
        passage: "Helsinki on Suomen pääkaupunki ja suurin kaupunki.",
        language: &fi,
    };
    let plain = build_fewshot_prompt(target, &pool(), false, 7, NLI_TEMPLATE).unwrap();
    let with_rationale = build_fewshot_prompt(target, &pool(), true, 7, NLI_TEMPLATE).unwrap();
    assert_eq!(plain.matches("attributed: yes").count(), 2);
    assert_eq!(plain.matches("attributed: no").count(), 2);
    assert!(plain.ends_with("attributed:"));
    assert!(with_rationale.ends_with("rationale:"));
    check_golden(&golden_dir().join("fewshot_seed7.txt"), &plain);
    check_golden(&golden_dir().join("fewshot_rationale_seed7.txt"), &with_rationale);
}

#[test]
fn fewshot_pool_too_small() {
    let fi = LanguageCode::new("fi").unwrap();
    let target = FewShotTarget {
        query: "q",
        answer: "a",
        passage: "p",
        language: &fi,
    };
    let small: Vec<Exemplar> = pool().into_iter().filter(|x| x.label).collect();
    assert!(build_fewshot_prompt(target, &small, false, 7, NLI_TEMPLATE).is_err());
}
