//! Binary checkpoint container.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "W2RATE1\n"
//! header_len   u32
//! header       header_len bytes:
//!   version u32, mode u8, flags u8 (bit 0 lr_split, bit 1 Adam state
//!   present, bit 2 targets drawn without replacement), dim u64, n u64,
//!   epsilon f64, learning_rate f64, batch_size u64, epochs u64,
//!   window u64, negatives u64, seed u64, neg_exponent f64,
//!   min_count u64, min_len u64, max_len u64
//! vocab_len    u64, then the vocabulary TSV block (UTF-8)
//! arrays       u32 count, then per array: u64 length, length × f64
//!              (context tables in component order, then targets)
//! adam         only when flagged: step u64, beta1 f64, beta2 f64,
//!              stability f64, first-moment arrays, second-moment arrays
//!              (same framing as above)
//! checksum     u64: first 8 bytes of SHA-256 over everything before it
//! ```
//!
//! The worker-thread count is not stored: it never changes the result.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::corpus::{LengthBounds, TargetPolicy, Vocabulary};
use crate::trainer::{AdamState, Mode, ParameterBank, TrainConfig};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"W2RATE1\n";
pub const FORMAT_VERSION: u32 = 1;

const FLAG_LR_SPLIT: u8 = 1;
const FLAG_ADAM: u8 = 1 << 1;
const FLAG_WITHOUT_REPLACEMENT: u8 = 1 << 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub vocab: Vocabulary,
    pub bank: ParameterBank,
    pub adam: Option<AdamState>,
}

pub fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

fn put_arrays(out: &mut Vec<u8>, bank: &ParameterBank) {
    let arrays = bank.arrays();
    out.extend((arrays.len() as u32).to_le_bytes());
    for a in arrays {
        out.extend((a.len() as u64).to_le_bytes());
        for x in a {
            out.extend(x.to_le_bytes());
        }
    }
}

/// Serializes a checkpoint. Identical inputs give identical bytes.
pub fn encode_checkpoint(
    bank: &ParameterBank,
    adam: Option<&AdamState>,
    config: &TrainConfig,
    vocab: &Vocabulary,
) -> Result<Vec<u8>> {
    if bank.mode != config.mode || bank.dim != config.dim {
        return Err(Error::invalid("parameter bank does not match the configuration"));
    }
    if bank.n != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            found: bank.n,
        });
    }
    let mut flags = 0;
    if config.lr_split {
        flags |= FLAG_LR_SPLIT;
    }
    if adam.is_some() {
        flags |= FLAG_ADAM;
    }
    if config.target_policy == TargetPolicy::WithoutReplacement {
        flags |= FLAG_WITHOUT_REPLACEMENT;
    }

    let mut header = Vec::new();
    header.extend(FORMAT_VERSION.to_le_bytes());
    header.push(config.mode.code());
    header.push(flags);
    for v in [config.dim as u64, bank.n as u64] {
        header.extend(v.to_le_bytes());
    }
    header.extend(config.epsilon.to_le_bytes());
    header.extend(config.learning_rate.to_le_bytes());
    for v in [
        config.batch_size as u64,
        config.epochs as u64,
        config.window as u64,
        config.negatives as u64,
        config.seed,
    ] {
        header.extend(v.to_le_bytes());
    }
    header.extend(config.neg_exponent.to_le_bytes());
    for v in [
        config.min_count,
        config.length_bounds.min as u64,
        config.length_bounds.max as u64,
    ] {
        header.extend(v.to_le_bytes());
    }

    let mut out = Vec::with_capacity(64 + 8 * bank.param_count() * if adam.is_some() { 3 } else { 1 });
    out.extend(MAGIC);
    out.extend((header.len() as u32).to_le_bytes());
    out.extend(header);
    let tsv = vocab.to_tsv_string();
    out.extend((tsv.len() as u64).to_le_bytes());
    out.extend(tsv.as_bytes());
    put_arrays(&mut out, bank);
    if let Some(state) = adam {
        out.extend(state.step.to_le_bytes());
        for v in [state.beta1, state.beta2, state.stability] {
            out.extend(v.to_le_bytes());
        }
        put_arrays(&mut out, &state.first);
        put_arrays(&mut out, &state.second);
    }
    let sum = checksum(&out);
    out.extend(sum.to_le_bytes());
    Ok(out)
}

pub fn save_checkpoint(
    bank: &ParameterBank,
    adam: Option<&AdamState>,
    config: &TrainConfig,
    vocab: &Vocabulary,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_checkpoint(bank, adam, config, vocab)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| Error::Parse("checkpoint ends early".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Parse("size does not fit in memory".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    /// Fills `bank` from the array section, checking each length against the
    /// shape the bank already has.
    fn arrays_into(&mut self, bank: &mut ParameterBank) -> Result<()> {
        let count = self.u32()? as usize;
        let expected = bank.arrays().len();
        if count != expected {
            return Err(Error::ShapeMismatch {
                what: "array count",
                expected,
                found: count,
            });
        }
        for dest in bank.arrays_mut() {
            let len = self.usize()?;
            if len != dest.len() {
                return Err(Error::ShapeMismatch {
                    what: "parameter array",
                    expected: dest.len(),
                    found: len,
                });
            }
            let raw = self.take(len.checked_mul(8).ok_or_else(|| Error::Parse("array too large".into()))?)?;
            for (d, chunk) in dest.iter_mut().zip(raw.chunks_exact(8)) {
                *d = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
            }
        }
        Ok(())
    }
}

/// Parses a checkpoint, validating magic and checksum before anything else.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::NotACheckpoint);
    }
    if bytes.len() < MAGIC.len() + 8 {
        return Err(Error::ChecksumMismatch);
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    if checksum(body) != u64::from_le_bytes(tail.try_into().expect("8 bytes")) {
        return Err(Error::ChecksumMismatch);
    }

    let mut r = Reader {
        bytes: body,
        pos: MAGIC.len(),
    };
    let header_len = r.u32()? as usize;
    let mut h = Reader {
        bytes: r.take(header_len)?,
        pos: 0,
    };
    let version = h.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let code = h.u8()?;
    let mode = Mode::from_code(code).ok_or_else(|| Error::Parse(format!("unknown mode code {code}")))?;
    let flags = h.u8()?;
    let dim = h.usize()?;
    let n = h.usize()?;
    let epsilon = h.f64()?;
    let learning_rate = h.f64()?;
    let batch_size = h.usize()?;
    let epochs = h.usize()?;
    let window = h.usize()?;
    let negatives = h.usize()?;
    let seed = h.u64()?;
    let neg_exponent = h.f64()?;
    let min_count = h.u64()?;
    let min_len = h.usize()?;
    let max_len = h.usize()?;
    let config = TrainConfig {
        mode,
        dim,
        epsilon,
        learning_rate,
        batch_size,
        epochs,
        window,
        negatives,
        lr_split: flags & FLAG_LR_SPLIT != 0,
        seed,
        neg_exponent,
        min_count,
        length_bounds: LengthBounds::new(min_len, max_len)?,
        target_policy: if flags & FLAG_WITHOUT_REPLACEMENT != 0 {
            TargetPolicy::WithoutReplacement
        } else {
            TargetPolicy::WithReplacement
        },
        threads: 1,
    };
    config.validate()?;

    let vocab_len = r.usize()?;
    let tsv = std::str::from_utf8(r.take(vocab_len)?)
        .map_err(|_| Error::Parse("vocabulary block is not UTF-8".into()))?;
    let vocab = Vocabulary::from_tsv_str(tsv)?;
    if vocab.len() != n {
        return Err(Error::ShapeMismatch {
            what: "vocabulary",
            expected: n,
            found: vocab.len(),
        });
    }

    let mut bank = ParameterBank::zeros(mode, dim, n);
    r.arrays_into(&mut bank)?;
    let adam = if flags & FLAG_ADAM != 0 {
        let mut state = AdamState::new(&bank);
        state.step = r.u64()?;
        state.beta1 = r.f64()?;
        state.beta2 = r.f64()?;
        state.stability = r.f64()?;
        r.arrays_into(&mut state.first)?;
        r.arrays_into(&mut state.second)?;
        Some(state)
    } else {
        None
    };
    if r.pos != body.len() {
        return Err(Error::Parse(format!(
            "{} trailing bytes after the checkpoint body",
            body.len() - r.pos
        )));
    }
    Ok(Checkpoint {
        config,
        vocab,
        bank,
        adam,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
