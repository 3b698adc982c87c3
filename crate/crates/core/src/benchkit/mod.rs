//! Throughput measurement, attention-cost accounting and similarity
//! correlation metrics.

mod metrics;
mod sts;
mod throughput;

pub use metrics::{correlate, fractional_ranks, pearson, spearman, CorrelationReport};
pub use sts::{cosine, embed, parse_pairs, read_pairs, sts_score, Pooling, StsPair};
pub use throughput::{activation_bytes, throughput, BenchBucket, BenchConfig, BenchReport, Precision, MIN_RUNS};
