//! BPE vocabulary with a `##` continuation convention, hardware-aware size
//! policy, and compression/parameter-budget measurements.

mod io;
mod model;
mod segment;
mod stats;
mod train;

pub use io::{escape, read_lexicon, unescape, LEXICON_FILE, MERGES_FILE, META_FILE, VOCAB_FILE};
pub use model::{
    Encoding, SpecialTokens, TokenizerModel, CLS_ID, MASK_ID, NUM_SPECIALS, PAD_ID, SEP_ID, UNK_ID,
};
pub use segment::{is_cjk, is_punctuation, DefaultSegmenter, Lexicon, Segmenter};
pub use stats::{budget_report, compression_stats, Bucket, BudgetReport, CompressionReport};
pub use train::{
    round_to_multiple, train_bpe, BpeTrainer, BpeTrainerConfig, SizePolicy, HARDWARE_MULTIPLE,
};
