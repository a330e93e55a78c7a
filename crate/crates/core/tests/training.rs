use word2rate::analysis::{
    all_word_embeddings, generate_synthetic_corpus, nearest_in, GrammarSpec,
};
use word2rate::corpus::{example_at, tokenize, LengthBounds};
use word2rate::persistence::{
    export_text_vectors, load_checkpoint, read_text_vectors, save_checkpoint, VectorKind,
};
use word2rate::trainer::{
    batch_loss, forward, negative_sampling_loss, split_loss, train, ContextEmbedding, Mode,
    TrainConfig, TrainOutput,
};

fn toy_corpus(sentences: usize) -> Vec<Vec<String>> {
    let spec = GrammarSpec {
        sentences,
        ..GrammarSpec::with_seed(7)
    };
    generate_synthetic_corpus(&spec)
        .unwrap()
        .iter()
        .map(|s| tokenize(s))
        .collect()
}

fn toy_config(mode: Mode, seed: u64) -> TrainConfig {
    TrainConfig {
        mode,
        dim: if mode == Mode::Cmow { 9 } else { 10 },
        epsilon: mode.default_epsilon(),
        learning_rate: 0.01,
        batch_size: 100,
        epochs: 3,
        min_count: 1,
        seed,
        ..TrainConfig::default()
    }
}

fn trained(mode: Mode) -> TrainOutput {
    train(&toy_corpus(200), &toy_config(mode, 0)).unwrap()
}

#[test]
fn rate_constraints_hold_after_training() {
    let corpus = toy_corpus(200);
    for mode in [Mode::Fos, Mode::Fop, Mode::Sos, Mode::HybridFosFop, Mode::HybridFosSos] {
        for lr_split in [false, true] {
            let config = TrainConfig { lr_split, ..toy_config(mode, 1) };
            let out = train(&corpus, &config).unwrap();
            assert!(out.bank.rate_constraints_hold(1e-12), "{}", mode.name());
            assert!(out.bank.is_finite());
        }
    }
}

#[test]
fn loss_decreases_every_epoch() {
    let corpus = toy_corpus(200);
    for mode in Mode::ALL {
        let out = train(&corpus, &toy_config(mode, 2)).unwrap();
        let losses: Vec<f64> = out.report.epochs.iter().map(|e| e.mean_loss).collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{}: {losses:?}", mode.name());
    }
}

#[test]
fn split_loss_at_sentence_edge_is_one_sided() {
    let out = trained(Mode::Fop);
    let sentence: Vec<usize> = (0..8).collect();
    let joint = toy_config(Mode::Fop, 0);
    let split = TrainConfig { lr_split: true, ..joint.clone() };
    let negatives = vec![vec![9, 10, 11, 12, 13]];
    for t in [0, sentence.len() - 1] {
        let example = example_at(&sentence, 4, t).unwrap();
        let batch = [example.clone()];
        let a = batch_loss(&batch, &negatives, &out.bank, &joint).unwrap();
        let b = batch_loss(&batch, &negatives, &out.bank, &split).unwrap();
        assert_eq!(a, b);

        let ContextEmbedding::Split(left, right) = forward(&example, &out.bank, &split).unwrap()
        else {
            panic!("split forward gives two sides");
        };
        let side = left.as_deref().or(right.as_deref()).unwrap();
        assert!(left.is_none() || right.is_none());
        let negs: Vec<&[f64]> = negatives[0].iter().map(|&n| out.bank.target(n)).collect();
        let target = out.bank.target(example.target);
        assert_eq!(
            split_loss(left.as_deref(), right.as_deref(), target, &negs).unwrap(),
            negative_sampling_loss(side, target, &negs)
        );
    }
}

#[test]
fn checkpoint_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for mode in [Mode::Cmow, Mode::Sos, Mode::HybridFosFop] {
        let out = trained(mode);
        let config = toy_config(mode, 0);
        let path = dir.path().join(format!("{}.ckpt", mode.name()));
        save_checkpoint(&out.bank, Some(&out.adam), &config, &out.vocab, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.bank, out.bank);
        assert_eq!(back.adam.as_ref(), Some(&out.adam));
        assert_eq!(back.vocab, out.vocab);
        assert_eq!(back.config, config);

        let again = dir.path().join("again.ckpt");
        save_checkpoint(&back.bank, back.adam.as_ref(), &back.config, &back.vocab, &again)
            .unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }
}

#[test]
fn text_export_keeps_top_ten_neighbors() {
    let dir = tempfile::tempdir().unwrap();
    for mode in [Mode::Fos, Mode::Fop, Mode::Cbow] {
        let out = trained(mode);
        let eps = mode.default_epsilon();
        let path = dir.path().join("vectors.txt");
        export_text_vectors(&out.bank, eps, &out.vocab, &path, VectorKind::Word).unwrap();
        let (tokens, vectors) = read_text_vectors(&path).unwrap();
        assert_eq!(tokens, out.vocab.tokens());
        let original = all_word_embeddings(&out.bank, eps).unwrap();
        for q in 0..original.len() {
            let a: Vec<usize> = nearest_in(&original, q, 10).unwrap().iter().map(|r| r.0).collect();
            let b: Vec<usize> = nearest_in(&vectors, q, 10).unwrap().iter().map(|r| r.0).collect();
            assert_eq!(a, b, "{} query {q}", mode.name());
        }
    }
}

#[test]
fn sentences_outside_bounds_are_skipped() {
    let mut corpus = toy_corpus(200);
    corpus.push(tokenize("det00 noun00"));
    let config = TrainConfig {
        length_bounds: LengthBounds::new(10, 12).unwrap(),
        ..toy_config(Mode::Fos, 0)
    };
    let a = train(&corpus, &config).unwrap();
    let b = train(&corpus[..200], &config).unwrap();
    assert_eq!(a.bank, b.bank);
}
