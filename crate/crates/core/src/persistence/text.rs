//! Plain-text interchange: word vectors and the stability CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::{word_embedding, StabilityRecord};
use crate::corpus::Vocabulary;
use crate::rate_algebra::Embedding;
use crate::trainer::ParameterBank;
use crate::{Error, Result};

pub const VECTOR_DIGITS: usize = 9;
pub const CSV_DIGITS: usize = 17;

/// Which vectors an export writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VectorKind {
    /// Composed single-word embeddings.
    #[default]
    Word,
    /// Rows of the target table.
    Target,
}

impl std::str::FromStr for VectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(VectorKind::Word),
            "target" => Ok(VectorKind::Target),
            _ => Err(Error::invalid(format!("unknown vector kind {s:?}"))),
        }
    }
}

/// Shortest `%g`-style rendering of `x` with `digits` significant digits:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros dropped.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn export_vectors(
    bank: &ParameterBank,
    epsilon: f64,
    which: VectorKind,
) -> Result<Vec<Embedding>> {
    match which {
        VectorKind::Word => (0..bank.n).map(|id| word_embedding(bank, epsilon, id)).collect(),
        VectorKind::Target => Ok((0..bank.n).map(|id| bank.target(id).to_vec()).collect()),
    }
}

/// Writes the `<n> <d>` header and one `token v1 … vd` line per word, in id
/// order.
pub fn write_text_vectors<W: Write>(
    mut out: W,
    tokens: &[String],
    vectors: &[Embedding],
) -> std::io::Result<()> {
    let dim = vectors.first().map_or(0, |v| v.len());
    writeln!(out, "{} {}", vectors.len(), dim)?;
    for (token, v) in tokens.iter().zip(vectors) {
        write!(out, "{token}")?;
        for x in v {
            write!(out, " {}", format_significant(*x, VECTOR_DIGITS))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn export_text_vectors(
    bank: &ParameterBank,
    epsilon: f64,
    vocab: &Vocabulary,
    path: impl AsRef<Path>,
    which: VectorKind,
) -> Result<()> {
    if vocab.len() != bank.n {
        return Err(Error::DimensionMismatch {
            expected: bank.n,
            found: vocab.len(),
        });
    }
    let vectors = export_vectors(bank, epsilon, which)?;
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_text_vectors(&mut out, vocab.tokens(), &vectors)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn parse_text_vectors(text: &str) -> Result<(Vec<String>, Vec<Embedding>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("missing vector header".into()))?;
    let (n, d) = header
        .split_once(' ')
        .and_then(|(n, d)| Some((n.parse::<usize>().ok()?, d.parse::<usize>().ok()?)))
        .ok_or_else(|| Error::Parse(format!("bad vector header {header:?}")))?;
    let mut tokens = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for line in lines {
        let mut fields = line.split(' ');
        let token = fields.next().unwrap_or_default().to_string();
        let v = fields
            .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("bad float {f:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
        tokens.push(token);
        vectors.push(v);
    }
    if vectors.len() != n {
        return Err(Error::Parse(format!(
            "vector header says {n} rows, found {}",
            vectors.len()
        )));
    }
    Ok((tokens, vectors))
}

pub fn read_text_vectors(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Embedding>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_text_vectors(&text)
}

pub fn write_stability_csv<W: Write>(mut out: W, records: &[StabilityRecord]) -> std::io::Result<()> {
    writeln!(out, "epsilon,length,seed,mean_abs")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{}",
            format_significant(r.epsilon, CSV_DIGITS),
            r.length,
            r.seed,
            format_significant(r.mean_abs, CSV_DIGITS)
        )?;
    }
    Ok(())
}

pub fn save_stability_csv(records: &[StabilityRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_stability_csv(&mut out, records)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}
