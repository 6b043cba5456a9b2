use proptest::prelude::*;
use stance_core::vectorizer::{fit, smoothed_idf};

fn docs(text: &[&str]) -> Vec<Vec<String>> {
    text.iter()
        .map(|d| d.split_whitespace().map(str::to_string).collect())
        .collect()
}

// Spreadsheet oracle: count × ln((1+N)/(1+df)) + 1, then divide by the L2 norm.
const IDF_CAT: f64 = 1.2876820724517808;
const IDF_SAT: f64 = 1.6931471805599454;
const CAT_SAT: [f64; 3] = [0.6053485081062916, 0.0, 0.7959605415681652];

#[test]
fn toy_corpus_matches_oracle() {
    let corpus = docs(&["cat sat", "cat cat", "dog"]);
    let model = fit(&corpus).unwrap();
    assert_eq!(model.vocabulary(), &["cat", "dog", "sat"]);
    assert_eq!(model.doc_freq(), &[2, 1, 1]);
    assert!((model.idf()[0] - IDF_CAT).abs() < 1e-12);
    assert!((model.idf()[2] - IDF_SAT).abs() < 1e-12);

    let expected = [CAT_SAT, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    for (doc, want) in corpus.iter().zip(expected) {
        let got = model.transform(doc).to_dense();
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }
}

#[test]
fn column_counts_equal_document_frequencies() {
    let corpus = docs(&["a b c", "a a d", "b e", "a", "e e e f"]);
    let model = fit(&corpus).unwrap();
    let matrix = model.transform_all(&corpus);
    let counts: Vec<u64> = matrix.column_counts().into_iter().map(|c| c as u64).collect();
    assert_eq!(counts, model.doc_freq());
    for (t, &df) in model.doc_freq().iter().enumerate() {
        assert!(df <= model.n_docs());
        assert_eq!(model.idf()[t], smoothed_idf(model.n_docs(), df));
    }
}

fn corpus() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec("[a-h]{1,2}", 0..15), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norms_are_zero_or_one(corpus in corpus(), extra in prop::collection::vec("[a-j]{1,2}", 0..20)) {
        let model = fit(&corpus).unwrap();
        for doc in corpus.iter().chain(std::iter::once(&extra)) {
            let norm = model.transform(doc).norm();
            prop_assert!(norm.abs() < 1e-12 || (norm - 1.0).abs() < 1e-12, "{}", norm);
        }
    }

    #[test]
    fn bag_of_words(corpus in corpus(), seed in any::<u64>()) {
        let model = fit(&corpus).unwrap();
        let doc = corpus[seed as usize % corpus.len()].clone();
        let mut shuffled = doc.clone();
        shuffled.reverse();
        shuffled.rotate_left(seed as usize % (doc.len().max(1)));
        prop_assert_eq!(model.transform(&doc), model.transform(&shuffled));
    }

    #[test]
    fn extra_occurrence_never_lowers_weight(corpus in corpus(), pick in any::<usize>()) {
        let model = fit(&corpus).unwrap();
        let doc = corpus[pick % corpus.len()].clone();
        if let Some(term) = doc.first() {
            let i = model.term_index(term).unwrap();
            let before = model.weights(&doc).to_dense()[i];
            let mut more = doc.clone();
            more.push(term.clone());
            prop_assert!(model.weights(&more).to_dense()[i] >= before);
        }
    }
}

#[test]
fn thousand_doc_fuzz_norms() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000);
    let corpus: Vec<Vec<String>> = (0..1000)
        .map(|_| {
            let len = rng.random_range(0..30);
            (0..len).map(|_| format!("w{}", rng.random_range(0..300))).collect()
        })
        .collect();
    let model = fit(&corpus).unwrap();
    for doc in &corpus {
        let norm = model.transform(doc).norm();
        assert!(norm.abs() < 1e-12 || (norm - 1.0).abs() < 1e-12, "{norm}");
    }
}
