//! Checkpoints, text vector export and CSV output.

mod checkpoint;
mod text;

pub use checkpoint::{
    checksum, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint,
    FORMAT_VERSION, MAGIC,
};
pub use text::{
    export_text_vectors, export_vectors, format_significant, parse_text_vectors,
    read_text_vectors, save_stability_csv, write_stability_csv, write_text_vectors, VectorKind,
    CSV_DIGITS, VECTOR_DIGITS,
};
