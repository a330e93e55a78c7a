use word2rate::analysis::{
    fluctuation, generate_synthetic_corpus, length_probe, order_probe, sentence_embedding,
    stability_curve, word_embedding, GrammarSpec, MatrixDraw,
};
use word2rate::corpus::{tokenize, LengthBounds};
use word2rate::rng::seeded;
use word2rate::trainer::{train, Mode, TrainConfig, TrainOutput};
use word2rate::Error;

fn corpus(seed: u64, sentences: usize) -> Vec<Vec<String>> {
    let spec = GrammarSpec {
        sentences,
        ..GrammarSpec::with_seed(seed)
    };
    generate_synthetic_corpus(&spec)
        .unwrap()
        .iter()
        .map(|s| tokenize(s))
        .collect()
}

fn trained(mode: Mode) -> TrainOutput {
    let config = TrainConfig {
        mode,
        dim: 10,
        epsilon: 0.03,
        learning_rate: 0.03,
        batch_size: 100,
        epochs: 2,
        min_count: 1,
        ..TrainConfig::default()
    };
    train(&corpus(0, 1000), &config).unwrap()
}

fn encoded(out: &TrainOutput, seed: u64, sentences: usize) -> Vec<Vec<usize>> {
    corpus(seed, sentences)
        .iter()
        .filter_map(|s| out.vocab.encode(s, LengthBounds::default()))
        .collect()
}

#[test]
fn fluctuations_shrink_with_epsilon() {
    let seeds: Vec<u64> = (0..10).collect();
    let eps = [0.01, 0.001, 0.0001];
    let records = stability_curve(25, &eps, 20, &seeds, MatrixDraw::Signed).unwrap();
    assert_eq!(records.len(), 3 * 20 * 10);
    let ordered = seeds
        .iter()
        .filter(|&&s| {
            let sd: Vec<f64> = eps.iter().map(|&e| fluctuation(&records, e, s)).collect();
            sd[0] > sd[1] && sd[1] > sd[2]
        })
        .count();
    assert!(ordered >= 8, "{ordered} of 10");
}

#[test]
fn projected_products_stay_at_uniform_magnitude() {
    let records = stability_curve(25, &[0.01], 20, &[0, 1], MatrixDraw::Projected).unwrap();
    for r in records {
        assert!((r.mean_abs - 1.0 / 25.0).abs() < 1e-12);
    }
}

#[test]
fn one_word_sentence_is_the_word() {
    for mode in [Mode::Fos, Mode::Sos, Mode::HybridFosFop] {
        let out = trained(mode);
        for id in 0..out.vocab.len() {
            assert_eq!(
                sentence_embedding(&out.bank, 0.03, &[id]).unwrap(),
                word_embedding(&out.bank, 0.03, id).unwrap()
            );
        }
    }
}

#[test]
fn order_probe_separates_fop_from_fos() {
    let fos = trained(Mode::Fos);
    let fop = trained(Mode::Fop);
    let probe = encoded(&fos, 100, 600);
    let a = order_probe(&fos.bank, 0.03, &probe, &mut seeded(0)).unwrap();
    let b = order_probe(&fop.bank, 0.03, &probe, &mut seeded(0)).unwrap();
    assert_eq!(a.accuracy, 0.5);
    assert!(b.accuracy > a.accuracy, "{}", b.accuracy);
    assert_eq!(a.probe, "bshift");
    assert_eq!(b.mode, "fop");
}

#[test]
fn length_probe_runs() {
    let out = trained(Mode::Fos);
    let probe = encoded(&out, 100, 600);
    let r = length_probe(&out.bank, 0.03, &probe, &mut seeded(1)).unwrap();
    assert!((0.0..=1.0).contains(&r.accuracy));
    assert!((0.0..=1.0).contains(&r.baseline));
}

#[test]
fn probe_needs_enough_sentences() {
    let out = trained(Mode::Fop);
    let probe = encoded(&out, 100, 50);
    let err = order_probe(&out.bank, 0.03, &probe, &mut seeded(0)).unwrap_err();
    assert!(matches!(err, Error::TooFewSentences { .. }));
}
