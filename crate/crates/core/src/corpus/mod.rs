//! Document records, MinHash deduplication, source manifests and
//! ratio-preserving mixture sampling.

mod dedup;
mod manifest;
mod minhash;
mod mixture;
mod records;
pub mod synth;

pub use dedup::{dedup, DedupConfig, DedupOutcome, DropRecord};
pub use manifest::{CorpusManifest, SourceEntry, REFERENCE_MIXTURE};
pub use minhash::{exact_jaccard, minhash_signature, shingles, MinHashSignature, MinHasher};
pub use mixture::{mixture_sampler, DocRef, MixtureSampler};
pub use records::{decode_records, encode_records, read_records, write_records, RECORD_EXTENSION};
