//! A small seeded setup (synthetic corpus, tokenizer, encoder config) that
//! exercises the whole stack at desk scale.

use crate::corpus::synth::{synth_corpus, SynthLanguage, SynthSource};
use crate::corpus::REFERENCE_MIXTURE;
use crate::encoder::EncoderConfig;
use crate::error::Result;
use crate::seed;
use crate::tokenizer::{BpeTrainer, BpeTrainerConfig, SizePolicy, TokenizerModel};
use crate::trainloop::TrainData;

pub const TOY_VOCAB_TARGET: usize = 512;

/// Mean document length in characters for each reference source; the last
/// source carries long documents for the long-context stage.
const MEAN_CHARS: [usize; 5] = [160, 400, 300, 300, 2400];

pub struct ToySetup {
    pub language: SynthLanguage,
    pub names: Vec<String>,
    pub ratios: Vec<f64>,
    pub sources: Vec<Vec<String>>,
    pub heldout: Vec<String>,
    pub tokenizer: TokenizerModel,
    pub data: TrainData,
}

pub fn toy_language(seed: u64) -> SynthLanguage {
    SynthLanguage::new(400, 150, seed)
}

pub fn toy_sources(docs_per_source: usize) -> Vec<SynthSource> {
    REFERENCE_MIXTURE
        .iter()
        .zip(MEAN_CHARS)
        .map(|(&(name, _), mean_chars)| SynthSource {
            name: name.to_string(),
            docs: docs_per_source,
            mean_chars,
        })
        .collect()
}

/// Two layers (one global, one local), hidden 32.
pub fn toy_encoder_config(vocab_size: usize) -> EncoderConfig {
    EncoderConfig {
        layers: 2,
        hidden: 32,
        heads: 2,
        intermediate: Some(64),
        global_layer_interval: 2,
        local_window_radius: 16,
        max_context: 1024,
        vocab_size,
        init_std: 0.05,
        ..EncoderConfig::default()
    }
}

pub fn toy_tokenizer<S: AsRef<str>>(lang: &SynthLanguage, docs: &[S]) -> Result<TokenizerModel> {
    let cfg = BpeTrainerConfig {
        target_size: TOY_VOCAB_TARGET,
        size_policy: SizePolicy::RoundTo64,
        ..BpeTrainerConfig::default()
    };
    BpeTrainer::new(cfg, lang.lexicon()).train(docs, 0)
}

pub fn toy_setup(root_seed: u64, docs_per_source: usize) -> Result<ToySetup> {
    let language = toy_language(seed::derive(root_seed, "toy.language"));
    let specs = toy_sources(docs_per_source);
    let sources = synth_corpus(&language, &specs, 0.0, seed::derive(root_seed, "toy.corpus"));
    let heldout_spec = [SynthSource {
        name: "heldout".into(),
        docs: 6,
        mean_chars: 3000,
    }];
    let heldout = synth_corpus(&language, &heldout_spec, 0.0, seed::derive(root_seed, "toy.heldout")).remove(0);
    let all: Vec<&String> = sources.iter().flatten().collect();
    let tokenizer = toy_tokenizer(&language, &all)?;
    let ratios: Vec<f64> = REFERENCE_MIXTURE.iter().map(|(_, r)| *r).collect();
    let data = TrainData::tokenize(&sources, &ratios, &tokenizer)?;
    Ok(ToySetup {
        language,
        names: specs.into_iter().map(|s| s.name).collect(),
        ratios,
        sources,
        heldout,
        tokenizer,
        data,
    })
}
