//! Corpus handling: tokenization, vocabularies, training examples and the
//! negative-sampling distribution.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;

use crate::rng::Rng;
use crate::{Error, Result};

/// Lowercased, whitespace-delimited tokens.
pub fn tokenize(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_lowercase).collect()
}

/// Reads a corpus file (one sentence per line). Blank lines are skipped.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut sentences = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let tokens = tokenize(&line);
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    Ok(sentences)
}

/// Inclusive bounds on sentence length, in tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthBounds {
    pub min: usize,
    pub max: usize,
}

impl LengthBounds {
    pub fn new(min: usize, max: usize) -> Result<Self> {
        if min > max {
            return Err(Error::invalid(format!(
                "length bounds [{min}, {max}] are empty"
            )));
        }
        Ok(LengthBounds { min, max })
    }

    pub fn contains(&self, len: usize) -> bool {
        (self.min..=self.max).contains(&len)
    }
}

impl Default for LengthBounds {
    fn default() -> Self {
        LengthBounds { min: 10, max: 20 }
    }
}

/// Word ids in sentence order.
pub type EncodedSentence = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    tokens: Vec<String>,
    counts: Vec<u64>,
    total: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from `(token, count)` pairs already in id order.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut token_to_id = HashMap::with_capacity(entries.len());
        let mut tokens = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        for (id, (token, count)) in entries.into_iter().enumerate() {
            if token_to_id.insert(token.clone(), id).is_some() {
                return Err(Error::Parse(format!("duplicate token {token:?}")));
            }
            tokens.push(token);
            counts.push(count);
        }
        let total = counts.iter().sum();
        Ok(Vocabulary {
            token_to_id,
            tokens,
            counts,
            total,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, id: usize) -> Option<u64> {
        self.counts.get(id).copied()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Sum of the stored counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Maps tokens to ids, dropping out-of-vocabulary tokens. Returns `None`
    /// (skip) when the remaining length falls outside `bounds`.
    pub fn encode<S: AsRef<str>>(
        &self,
        tokens: &[S],
        bounds: LengthBounds,
    ) -> Option<EncodedSentence> {
        let ids: Vec<usize> = tokens.iter().filter_map(|t| self.id(t.as_ref())).collect();
        bounds.contains(ids.len()).then_some(ids)
    }

    pub fn decode(&self, ids: &[usize]) -> Result<Vec<&str>> {
        ids.iter()
            .map(|&id| self.token(id).ok_or(Error::UnknownId(id)))
            .collect()
    }

    /// Writes the TSV block: a `#n=<size>` header, then `token\tid\tcount`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "#n={}", self.len())?;
        for (id, (token, count)) in self.tokens.iter().zip(&self.counts).enumerate() {
            writeln!(out, "{token}\t{id}\t{count}")?;
        }
        Ok(())
    }

    pub fn to_tsv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("tokens are UTF-8")
    }

    pub fn from_tsv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing vocabulary header".into()))?;
        let n: usize = header
            .strip_prefix("#n=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad vocabulary header {header:?}")))?;
        let mut entries = Vec::with_capacity(n);
        for (expected_id, line) in lines.enumerate() {
            let mut fields = line.split('\t');
            let (Some(token), Some(id), Some(count), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::Parse(format!("bad vocabulary line {line:?}")));
            };
            let id: usize = id
                .parse()
                .map_err(|_| Error::Parse(format!("bad id in {line:?}")))?;
            let count: u64 = count
                .parse()
                .map_err(|_| Error::Parse(format!("bad count in {line:?}")))?;
            if id != expected_id {
                return Err(Error::Parse(format!(
                    "vocabulary ids not dense: expected {expected_id}, found {id}"
                )));
            }
            entries.push((token.to_string(), count));
        }
        if entries.len() != n {
            return Err(Error::Parse(format!(
                "vocabulary header says {n} entries, found {}",
                entries.len()
            )));
        }
        Vocabulary::from_entries(entries)
    }

    pub fn save_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_tsv(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vocabulary::from_tsv_str(&text)
    }
}

/// Counts tokens over sentences whose length lies within `bounds` and keeps
/// those seen at least `min_count` times. Ids are assigned by descending
/// count, ties broken lexicographically.
pub fn build_vocabulary<I, S, T>(
    sentences: I,
    min_count: u64,
    bounds: LengthBounds,
) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[T]>,
    T: AsRef<str>,
{
    if min_count == 0 {
        return Err(Error::invalid("min_count must be at least 1"));
    }
    let mut freq: HashMap<String, u64> = HashMap::new();
    for sentence in sentences {
        let sentence = sentence.as_ref();
        if !bounds.contains(sentence.len()) {
            continue;
        }
        for token in sentence {
            *freq.entry(token.as_ref().to_string()).or_default() += 1;
        }
    }
    let mut entries: Vec<(String, u64)> =
        freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_entries(entries)
}

/// Encodes every sentence, dropping the skipped ones.
pub fn encode_corpus<S: AsRef<[T]>, T: AsRef<str>>(
    vocab: &Vocabulary,
    sentences: &[S],
    bounds: LengthBounds,
) -> Vec<EncodedSentence> {
    sentences
        .iter()
        .filter_map(|s| vocab.encode(s.as_ref(), bounds))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    /// Words before the target, in sentence order.
    pub left: Vec<usize>,
    /// Words after the target, in sentence order.
    pub right: Vec<usize>,
    pub target: usize,
}

impl TrainingExample {
    /// Left and right context joined in sentence order, target excluded.
    pub fn context(&self) -> Vec<usize> {
        let mut ids = Vec::with_capacity(self.left.len() + self.right.len());
        ids.extend_from_slice(&self.left);
        ids.extend_from_slice(&self.right);
        ids
    }
}

/// How target positions are drawn from a sentence of length `n`: `n` draws
/// either with or without replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetPolicy {
    #[default]
    WithReplacement,
    WithoutReplacement,
}

/// The example whose target sits at position `t`, or `None` when the window
/// holds no context word.
pub fn example_at(sentence: &[usize], window: usize, t: usize) -> Option<TrainingExample> {
    if t >= sentence.len() {
        return None;
    }
    let left = sentence[t.saturating_sub(window)..t].to_vec();
    let right = sentence[t + 1..sentence.len().min(t + window + 1)].to_vec();
    if left.is_empty() && right.is_empty() {
        return None;
    }
    Some(TrainingExample {
        left,
        right,
        target: sentence[t],
    })
}

pub fn generate_examples(
    sentence: &[usize],
    window: usize,
    policy: TargetPolicy,
    rng: &mut Rng,
) -> Vec<TrainingExample> {
    let n = sentence.len();
    if n < 2 || window == 0 {
        return Vec::new();
    }
    let positions: Vec<usize> = match policy {
        TargetPolicy::WithReplacement => (0..n).map(|_| rng.random_range(0..n)).collect(),
        TargetPolicy::WithoutReplacement => {
            rand::seq::index::sample(rng, n, n).into_iter().collect()
        }
    };
    positions
        .into_iter()
        .filter_map(|t| example_at(sentence, window, t))
        .collect()
}

/// Unigram distribution raised to `exponent`, used to draw negative words.
#[derive(Debug, Clone)]
pub struct NegativeTable {
    probs: Vec<f64>,
    exponent: f64,
    index: WeightedIndex<f64>,
}

impl NegativeTable {
    pub fn new(vocab: &Vocabulary, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::invalid(format!(
                "negative-table exponent must be positive, got {exponent}"
            )));
        }
        if vocab.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let weights: Vec<f64> = vocab
            .counts()
            .iter()
            .map(|&c| (c as f64).powf(exponent))
            .collect();
        let norm: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / norm).collect();
        let index = WeightedIndex::new(&probs)
            .map_err(|e| Error::invalid(format!("bad unigram weights: {e}")))?;
        Ok(NegativeTable {
            probs,
            exponent,
            index,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        self.index.sample(rng)
    }

    /// `k` independent draws, re-drawing any that hit `target`.
    pub fn sample_negatives(&self, k: usize, target: usize, rng: &mut Rng) -> Result<Vec<usize>> {
        if self.probs.len() == 1 && target == 0 {
            return Err(Error::CannotSampleNegatives);
        }
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            let id = self.sample(rng);
            if id != target {
                out.push(id);
            }
        }
        Ok(out)
    }
}

pub fn build_negative_table(vocab: &Vocabulary, exponent: f64) -> Result<NegativeTable> {
    NegativeTable::new(vocab, exponent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn toy() -> Vec<Vec<String>> {
        ["a b a", "a c"].iter().map(|s| tokenize(s)).collect()
    }

    fn bounds(min: usize, max: usize) -> LengthBounds {
        LengthBounds::new(min, max).unwrap()
    }

    #[test]
    fn min_count_two_keeps_only_a() {
        let vocab = build_vocabulary(toy(), 2, bounds(1, 20)).unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.id("a"), Some(0));
        assert_eq!(vocab.count(0), Some(3));
    }

    #[test]
    fn ids_by_count_then_lexicographic() {
        let vocab = build_vocabulary(toy(), 1, bounds(1, 20)).unwrap();
        assert_eq!(vocab.tokens(), &["a", "b", "c"]);
        assert_eq!(vocab.counts(), &[3, 1, 1]);
        assert_eq!(vocab.total(), 5);
    }

    #[test]
    fn empty_stream_is_an_error() {
        let empty: Vec<Vec<String>> = Vec::new();
        assert!(matches!(
            build_vocabulary(empty, 1, bounds(1, 20)),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn length_bounds_filter_counting() {
        // "a b a" has three tokens and is excluded by [1, 2].
        let vocab = build_vocabulary(toy(), 1, bounds(1, 2)).unwrap();
        assert_eq!(vocab.tokens(), &["a", "c"]);
        assert_eq!(vocab.counts(), &[1, 1]);
        assert!(LengthBounds::new(3, 2).is_err());
        assert!(build_vocabulary(toy(), 0, bounds(1, 2)).is_err());
    }

    #[test]
    fn encode_drops_oov() {
        let vocab = Vocabulary::from_entries(vec![("a".into(), 2), ("b".into(), 1)]).unwrap();
        assert_eq!(vocab.encode(&["a", "z", "b"], bounds(1, 20)), Some(vec![0, 1]));
        assert_eq!(vocab.encode(&["z", "y"], bounds(1, 20)), None);
        assert_eq!(vocab.encode(&["b", "a"], bounds(1, 20)), Some(vec![1, 0]));
        // post-drop length 1 falls below the bound
        assert_eq!(vocab.encode(&["a", "z"], bounds(2, 20)), None);
    }

    #[test]
    fn tsv_round_trip() {
        let vocab = build_vocabulary(toy(), 1, bounds(1, 20)).unwrap();
        let text = vocab.to_tsv_string();
        assert_eq!(text, "#n=3\na\t0\t3\nb\t1\t1\nc\t2\t1\n");
        assert_eq!(Vocabulary::from_tsv_str(&text).unwrap(), vocab);
        assert!(Vocabulary::from_tsv_str("#n=2\na\t0\t3\n").is_err());
        assert!(Vocabulary::from_tsv_str("a\t0\t3\n").is_err());
    }

    #[test]
    fn forced_target_windows() {
        let s = [5, 7, 9];
        assert_eq!(
            example_at(&s, 4, 1),
            Some(TrainingExample { left: vec![5], right: vec![9], target: 7 })
        );
        assert_eq!(
            example_at(&s, 1, 2),
            Some(TrainingExample { left: vec![7], right: vec![], target: 9 })
        );
        assert_eq!(example_at(&[5], 3, 0), None);
    }

    #[test]
    fn short_sentences_yield_nothing() {
        let mut rng = seeded(1);
        assert!(generate_examples(&[5], 4, TargetPolicy::WithReplacement, &mut rng).is_empty());
        assert!(generate_examples(&[], 4, TargetPolicy::WithReplacement, &mut rng).is_empty());
    }

    #[test]
    fn default_policy_draws_one_target_per_word() {
        let s: Vec<usize> = (0..12).collect();
        let mut rng = seeded(3);
        let ex = generate_examples(&s, 4, TargetPolicy::WithReplacement, &mut rng);
        assert_eq!(ex.len(), 12);
        let ex = generate_examples(&s, 4, TargetPolicy::WithoutReplacement, &mut rng);
        let mut targets: Vec<usize> = ex.iter().map(|e| e.target).collect();
        targets.sort();
        assert_eq!(targets, s);
    }

    #[test]
    fn negative_table_normalizes() {
        let vocab = Vocabulary::from_entries(vec![("a".into(), 3), ("b".into(), 1)]).unwrap();
        let t = build_negative_table(&vocab, 1.0).unwrap();
        assert!((t.probabilities()[0] - 0.75).abs() < 1e-15);
        assert!((t.probabilities()[1] - 0.25).abs() < 1e-15);
        assert!(build_negative_table(&vocab, 0.0).is_err());
        assert!(build_negative_table(&vocab, -1.0).is_err());

        let single = Vocabulary::from_entries(vec![("a".into(), 4)]).unwrap();
        let t = build_negative_table(&single, 0.75).unwrap();
        assert_eq!(t.probabilities(), &[1.0]);
        assert!(matches!(
            t.sample_negatives(5, 0, &mut seeded(0)),
            Err(Error::CannotSampleNegatives)
        ));
    }

    #[test]
    fn negatives_skip_target_and_are_seeded() {
        let vocab =
            Vocabulary::from_entries(vec![("a".into(), 5), ("b".into(), 3), ("c".into(), 2)])
                .unwrap();
        let t = build_negative_table(&vocab, 0.75).unwrap();
        let a = t.sample_negatives(5, 0, &mut seeded(11)).unwrap();
        let b = t.sample_negatives(5, 0, &mut seeded(11)).unwrap();
        assert_eq!(a.len(), 5);
        assert_eq!(a, b);
        assert!(a.iter().all(|&id| id != 0));
    }

    #[test]
    fn empirical_frequencies_match_table() {
        let vocab =
            Vocabulary::from_entries(vec![("a".into(), 6), ("b".into(), 3), ("c".into(), 1)])
                .unwrap();
        let t = build_negative_table(&vocab, 0.75).unwrap();
        let mut rng = seeded(2024);
        let draws = 1_000_000;
        let mut hist = [0usize; 3];
        for _ in 0..draws {
            hist[t.sample(&mut rng)] += 1;
        }
        for (i, &h) in hist.iter().enumerate() {
            let freq = h as f64 / draws as f64;
            let p = t.probabilities()[i];
            assert!((freq - p).abs() < 0.01 * p, "id {i}: {freq} vs {p}");
        }
    }

    proptest! {
        #[test]
        fn vocabulary_ids_invert(words in prop::collection::vec("[a-e]{1,3}", 1..60)) {
            let vocab = build_vocabulary([words.clone()], 1, bounds(1, 100)).unwrap();
            for w in &words {
                let id = vocab.id(w).unwrap();
                prop_assert_eq!(vocab.token(id), Some(w.as_str()));
            }
            for id in 0..vocab.len() {
                prop_assert_eq!(vocab.id(vocab.token(id).unwrap()), Some(id));
            }
            prop_assert!(vocab.counts().windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn encode_decode_preserves_order(idx in prop::collection::vec(0usize..5, 1..20)) {
            let vocab = Vocabulary::from_entries(
                ["p", "q", "r", "s", "t"].iter().map(|t| (t.to_string(), 1)).collect(),
            ).unwrap();
            let tokens: Vec<&str> = idx.iter().map(|&i| vocab.token(i).unwrap()).collect();
            let ids = vocab.encode(&tokens, bounds(1, 20)).unwrap();
            prop_assert_eq!(vocab.decode(&ids).unwrap(), tokens);
        }

        #[test]
        fn examples_respect_window(
            sentence in prop::collection::vec(0usize..50, 0..30),
            window in 1usize..6,
            seed in any::<u64>(),
        ) {
            let mut rng = seeded(seed);
            for ex in generate_examples(&sentence, window, TargetPolicy::WithReplacement, &mut rng) {
                prop_assert!(ex.left.len() <= window && ex.right.len() <= window);
                prop_assert!(!ex.left.is_empty() || !ex.right.is_empty());
                prop_assert!(ex.context().iter().chain([&ex.target]).all(|&id| id < 50));
            }
        }

        #[test]
        fn table_sums_to_one(counts in prop::collection::vec(1u64..10_000, 1..200), exp in 0.05f64..2.0) {
            let vocab = Vocabulary::from_entries(
                counts.iter().enumerate().map(|(i, &c)| (format!("w{i}"), c)).collect(),
            ).unwrap();
            let t = build_negative_table(&vocab, exp).unwrap();
            prop_assert!((t.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
