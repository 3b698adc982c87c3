use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use modernzh_core::corpus::synth::synth_corpus;
use modernzh_core::corpus::{
    dedup, read_records, write_records, CorpusManifest, MixtureSampler, SourceEntry, RECORD_EXTENSION,
};
use modernzh_core::error::IoContext;
use modernzh_core::toy::{toy_language, toy_sources};
use modernzh_core::{seed, Error, Result};

use crate::context::Context;
use crate::inputs::{emit, read_lines, record_files, write_text};

#[derive(Subcommand)]
pub enum CorpusCommand {
    /// Near-duplicate removal over every record file in a directory.
    Dedup(DedupArgs),
    /// Mixture shares implied by a manifest.
    Mix(MixArgs),
    /// Write a seeded synthetic corpus with its manifest.
    Synth(SynthArgs),
    /// Convert text with one document per line into a record file.
    Ingest(IngestArgs),
}

#[derive(Args)]
pub struct DedupArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct MixArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Only report shares; the sampler is stateless so nothing else runs.
    #[arg(long)]
    dry_run: bool,
    /// Also draw this many tokens for one step and report realized shares.
    #[arg(long)]
    sample_tokens: Option<usize>,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Documents per source.
    #[arg(long, default_value_t = 40)]
    docs: usize,
    /// Probability that a document is a perturbed copy of an earlier one.
    #[arg(long, default_value_t = 0.0)]
    dup_rate: f64,
    #[arg(long, default_value_t = 6)]
    heldout: usize,
}

#[derive(Args)]
pub struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(ctx: &Context, cmd: CorpusCommand) -> Result<()> {
    match cmd {
        CorpusCommand::Dedup(a) => {
            let mut resolved = ctx.config.clone();
            if let Some(t) = a.threshold {
                resolved.dedup.threshold = t;
            }
            resolved.dedup.validate()?;
            let files = record_files(&a.input)?;
            let mut docs = Vec::new();
            let mut origin = Vec::new();
            for (fi, f) in files.iter().enumerate() {
                let d = read_records(f)?;
                origin.extend((0..d.len()).map(|i| (fi, i)));
                docs.extend(d);
            }
            let outcome = dedup(&docs, &resolved.dedup, seed::derive(resolved.seed, "corpus.dedup"))?;
            let kept: BTreeSet<usize> = outcome.kept.iter().copied().collect();
            fs::create_dir_all(&a.out).at(&a.out)?;
            for (fi, f) in files.iter().enumerate() {
                let mine: Vec<&String> = (0..docs.len())
                    .filter(|g| origin[*g].0 == fi && kept.contains(g))
                    .map(|g| &docs[g])
                    .collect();
                write_records(&a.out.join(f.file_name().unwrap()), &mine)?;
            }
            let name = |g: usize| files[origin[g].0].file_name().unwrap().to_string_lossy().into_owned();
            let mut tsv = String::from("file\tindex\tduplicate_of_file\tduplicate_of_index\tsimilarity\n");
            for d in &outcome.dropped {
                writeln!(
                    tsv,
                    "{}\t{}\t{}\t{}\t{:.4}",
                    name(d.index),
                    origin[d.index].1,
                    name(d.duplicate_of),
                    origin[d.duplicate_of].1,
                    d.similarity
                )
                .unwrap();
            }
            write_text(&a.out.join("drops.tsv"), &tsv)?;
            // Keep the output usable as a drop-in corpus directory.
            let manifest = a.input.join("manifest.toml");
            if a.input.is_dir() && manifest.is_file() {
                fs::copy(&manifest, a.out.join("manifest.toml")).at(&manifest)?;
            }
            log::info!(
                "kept {} of {} documents, {} near misses",
                outcome.kept.len(),
                docs.len(),
                outcome.near_misses.len()
            );
            ctx.log_config(&resolved, &a.out)
        }
        CorpusCommand::Mix(a) => {
            let manifest = CorpusManifest::load(&a.manifest)?;
            let docs = manifest.load_documents()?;
            let lengths = docs
                .iter()
                .map(|d| d.iter().map(|s| s.chars().count()).collect())
                .collect();
            let sampler = MixtureSampler::new(&manifest.ratios(), lengths)?;
            let shares = sampler.expected_shares();
            let realized = match a.sample_tokens.filter(|_| !a.dry_run) {
                Some(n) => {
                    let mut per = vec![0usize; shares.len()];
                    for r in sampler.sample(n, seed::derive(ctx.config.seed, "corpus.mix"), 0) {
                        per[r.source] += sampler.length(r);
                    }
                    let total: usize = per.iter().sum();
                    Some(per.into_iter().map(|t| t as f64 / total as f64).collect::<Vec<_>>())
                }
                None => None,
            };
            let mut out = String::from("source,ratio,expected_share");
            out.push_str(if realized.is_some() { ",realized_share\n" } else { "\n" });
            for (i, s) in manifest.sources.iter().enumerate() {
                write!(out, "{},{},{}", s.name, s.ratio, shares[i]).unwrap();
                if let Some(r) = &realized {
                    write!(out, ",{}", r[i]).unwrap();
                }
                out.push('\n');
            }
            emit(None, &out)
        }
        CorpusCommand::Synth(a) => {
            let root = ctx.config.seed;
            let lang = toy_language(seed::derive(root, "toy.language"));
            let mut specs = toy_sources(a.docs);
            let sources = synth_corpus(&lang, &specs, a.dup_rate, seed::derive(root, "toy.corpus"));
            fs::create_dir_all(&a.out).at(&a.out)?;
            let mut manifest = CorpusManifest { sources: Vec::new() };
            let ratios = modernzh_core::corpus::REFERENCE_MIXTURE;
            for ((spec, docs), (_, ratio)) in specs.drain(..).zip(&sources).zip(ratios) {
                let file = PathBuf::from(format!("{}.{RECORD_EXTENSION}", spec.name));
                write_records(&a.out.join(&file), docs)?;
                manifest.sources.push(SourceEntry {
                    name: spec.name,
                    path: file,
                    ratio,
                });
            }
            manifest.validate()?;
            write_text(&a.out.join("manifest.toml"), &manifest.to_toml()?)?;
            let held_spec = [modernzh_core::corpus::synth::SynthSource {
                name: "heldout".into(),
                docs: a.heldout,
                mean_chars: 3000,
            }];
            let held = synth_corpus(&lang, &held_spec, 0.0, seed::derive(root, "toy.heldout")).remove(0);
            write_text(&a.out.join("heldout.txt"), &(held.join("\n") + "\n"))?;
            let words = lang.lexicon();
            write_text(&a.out.join("lexicon.txt"), &(words.sorted_words().join("\n") + "\n"))?;
            ctx.log_config(&ctx.config, &a.out)
        }
        CorpusCommand::Ingest(a) => {
            let docs = read_lines(&a.input)?;
            if docs.is_empty() {
                return Err(Error::input(format!("{} has no documents", a.input.display())));
            }
            write_records(&a.out, &docs)
        }
    }
}
