//! On-disk checkpoints: `config.toml`, a tab-separated `manifest.txt`
//! (name, dtype, shape, byte offset, byte length) and one little-endian
//! `tensors.bin`. Optimizer moments, when present, are extra tensors named
//! `optim.m.<name>` / `optim.v.<name>` and `training.toml` holds the step.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::EncoderConfig;
use super::forward::{forward_weights, ForwardOutput};
use super::packed::PackedBatch;
use super::weights::EncoderWeights;
use crate::error::{Error, IoContext, Result};
use crate::optimsched::{AdamWConfig, Moments, OptimizerState};

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const BLOB_FILE: &str = "tensors.bin";
pub const TRAINING_FILE: &str = "training.toml";
const MANIFEST_HEADER: &str = "# modernzh checkpoint v1";
const DTYPE: &str = "f64";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: EncoderConfig,
    pub weights: EncoderWeights<f64>,
    pub optimizer: Option<OptimizerState>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainingMeta {
    step: u64,
    adamw: AdamWConfig,
}

struct Entry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    len: usize,
}

impl Checkpoint {
    pub fn new(config: EncoderConfig, weights: EncoderWeights<f64>) -> Self {
        Self {
            config,
            weights,
            optimizer: None,
        }
    }

    pub fn init(config: EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let weights = EncoderWeights::init(&config, seed);
        Ok(Self::new(config, weights))
    }

    pub fn forward(&self, batch: &PackedBatch) -> Result<ForwardOutput<f64>> {
        forward_weights(&self.weights, &self.config, batch)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).at(dir)?;
        let cfg = toml::to_string(&self.config).map_err(|e| Error::runtime(e.to_string()))?;
        fs::write(dir.join(CONFIG_FILE), cfg).at(dir.join(CONFIG_FILE))?;

        let shapes = self.config.param_shapes();
        let mut tensors: Vec<(String, Vec<usize>, &[f64])> = self
            .weights
            .tensors()
            .into_iter()
            .zip(shapes.iter())
            .map(|((n, t), (_, s))| (n, s.clone(), t))
            .collect();
        if let Some(opt) = &self.optimizer {
            for mo in &opt.moments {
                let shape = shapes
                    .iter()
                    .find(|(n, _)| *n == mo.name)
                    .map(|(_, s)| s.clone())
                    .unwrap_or_else(|| vec![mo.m.len()]);
                tensors.push((format!("optim.m.{}", mo.name), shape.clone(), &mo.m));
                tensors.push((format!("optim.v.{}", mo.name), shape, &mo.v));
            }
            let meta = TrainingMeta {
                step: opt.step,
                adamw: opt.config.clone(),
            };
            let text = toml::to_string(&meta).map_err(|e| Error::runtime(e.to_string()))?;
            fs::write(dir.join(TRAINING_FILE), text).at(dir.join(TRAINING_FILE))?;
        } else if dir.join(TRAINING_FILE).exists() {
            fs::remove_file(dir.join(TRAINING_FILE)).at(dir.join(TRAINING_FILE))?;
        }

        let mut manifest = String::from(MANIFEST_HEADER);
        manifest.push('\n');
        let total: usize = tensors.iter().map(|(_, _, t)| t.len()).sum();
        let mut blob = Vec::with_capacity(total * 8);
        for (name, shape, data) in &tensors {
            let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
            manifest.push_str(&format!(
                "{name}\t{DTYPE}\t{}\t{}\t{}\n",
                dims.join(","),
                blob.len(),
                data.len() * 8
            ));
            for x in data.iter() {
                blob.extend_from_slice(&x.to_le_bytes());
            }
        }
        fs::write(dir.join(MANIFEST_FILE), manifest).at(dir.join(MANIFEST_FILE))?;
        fs::write(dir.join(BLOB_FILE), blob).at(dir.join(BLOB_FILE))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let cfg_text = fs::read_to_string(dir.join(CONFIG_FILE)).at(dir.join(CONFIG_FILE))?;
        let config: EncoderConfig =
            toml::from_str(&cfg_text).map_err(|e| Error::config(format!("{}: {e}", dir.join(CONFIG_FILE).display())))?;
        config.validate()?;
        let manifest = fs::read_to_string(dir.join(MANIFEST_FILE)).at(dir.join(MANIFEST_FILE))?;
        let blob = fs::read(dir.join(BLOB_FILE)).at(dir.join(BLOB_FILE))?;
        let entries = parse_manifest(&manifest)?;

        let read = |e: &Entry| -> Result<Vec<f64>> {
            let end = e.offset.checked_add(e.len).filter(|&end| end <= blob.len());
            let Some(end) = end else {
                return Err(Error::input(format!("tensor `{}` runs past the end of {BLOB_FILE}", e.name)));
            };
            if !e.len.is_multiple_of(8) || e.shape.iter().product::<usize>() * 8 != e.len {
                return Err(Error::input(format!("tensor `{}` has inconsistent size", e.name)));
            }
            Ok(blob[e.offset..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };

        let n_weights = config.param_shapes().len();
        if entries.len() < n_weights {
            return Err(Error::input(format!(
                "manifest lists {} tensors, config needs {n_weights}",
                entries.len()
            )));
        }
        let flat = entries[..n_weights]
            .iter()
            .map(|e| Ok((e.name.clone(), read(e)?)))
            .collect::<Result<Vec<_>>>()?;
        let weights = EncoderWeights::from_flat(&config, flat)?;

        let optim_entries = &entries[n_weights..];
        let optimizer = if dir.join(TRAINING_FILE).exists() {
            let text = fs::read_to_string(dir.join(TRAINING_FILE)).at(dir.join(TRAINING_FILE))?;
            let meta: TrainingMeta = toml::from_str(&text).map_err(|e| Error::config(format!("{TRAINING_FILE}: {e}")))?;
            if optim_entries.len() % 2 != 0 {
                return Err(Error::input("optimizer moments must come in m/v pairs"));
            }
            let mut moments = Vec::new();
            for pair in optim_entries.chunks(2) {
                let name = pair[0]
                    .name
                    .strip_prefix("optim.m.")
                    .ok_or_else(|| Error::input(format!("unexpected tensor `{}`", pair[0].name)))?;
                if pair[1].name != format!("optim.v.{name}") {
                    return Err(Error::input(format!("unexpected tensor `{}`", pair[1].name)));
                }
                moments.push(Moments {
                    name: name.to_string(),
                    m: read(&pair[0])?,
                    v: read(&pair[1])?,
                });
            }
            Some(OptimizerState {
                config: meta.adamw,
                step: meta.step,
                moments,
            })
        } else {
            if !optim_entries.is_empty() {
                return Err(Error::input(format!("optimizer tensors present without {TRAINING_FILE}")));
            }
            None
        };
        Ok(Self {
            config,
            weights,
            optimizer,
        })
    }
}

fn parse_manifest(text: &str) -> Result<Vec<Entry>> {
    let mut lines = text.lines();
    if lines.next() != Some(MANIFEST_HEADER) {
        return Err(Error::input(format!("{MANIFEST_FILE}: missing header")));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let bad = || Error::input(format!("{MANIFEST_FILE}: malformed line `{line}`"));
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 5 {
                return Err(bad());
            }
            if f[1] != DTYPE {
                return Err(Error::input(format!("{MANIFEST_FILE}: unsupported dtype `{}`", f[1])));
            }
            let shape = f[2]
                .split(',')
                .map(|d| d.parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            Ok(Entry {
                name: f[0].to_string(),
                shape,
                offset: f[3].parse().map_err(|_| bad())?,
                len: f[4].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = EncoderConfig::toy();
        let mut ck = Checkpoint::init(cfg.clone(), 9).unwrap();
        ck.weights.layers[0].wo[[0, 0]] = f64::from_bits(0x3ff0_0000_0000_0001);
        ck.save(dir.path()).unwrap();
        let back = Checkpoint::load(dir.path()).unwrap();
        for ((_, a), (_, b)) in ck.weights.tensors().iter().zip(back.weights.tensors()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(back, ck);
    }

    #[test]
    fn optimizer_state_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut ck = Checkpoint::init(EncoderConfig::toy(), 1).unwrap();
        let mut opt = OptimizerState::for_weights(AdamWConfig::default(), &ck.weights);
        opt.step = 17;
        opt.moments[3].m[0] = 0.25;
        opt.moments[3].v[1] = 1e-9;
        ck.optimizer = Some(opt);
        ck.save(dir.path()).unwrap();
        assert_eq!(Checkpoint::load(dir.path()).unwrap(), ck);
    }

    #[test]
    fn truncated_blob_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        Checkpoint::init(EncoderConfig::toy(), 1).unwrap().save(dir.path()).unwrap();
        let blob = dir.path().join(BLOB_FILE);
        let bytes = fs::read(&blob).unwrap();
        fs::write(&blob, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(Checkpoint::load(dir.path()), Err(Error::Input(_))));
    }
}
