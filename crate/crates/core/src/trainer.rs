//! Training loop: balanced mini-batches, hKR or least-squares loss, Adam.

use std::fmt;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LabeledDataset;
use crate::lipnet::{AdamConfig, AdamState, LipNet, ModelMeta};
use crate::losses::{fit_loss, hkr_loss, HkrConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    #[default]
    Hkr,
    Fit,
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hkr" => Ok(LossKind::Hkr),
            "fit" => Ok(LossKind::Fit),
            other => Err(Error::invalid(format!("unknown loss `{other}` (expected hkr|fit)"))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Hkr => "hkr",
            LossKind::Fit => "fit",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub depth: usize,
    /// Channel width of every layer.
    pub k: usize,
    pub margin: f64,
    pub lambda: f64,
    pub loss: LossKind,
    pub epochs: usize,
    /// Points drawn from each label per batch (hkr). Fit batches hold twice this.
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Save a checkpoint every this many epochs; 0 disables.
    pub checkpoint_every: usize,
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            depth: 20,
            k: 128,
            margin: 1e-2,
            lambda: 100.0,
            loss: LossKind::Hkr,
            epochs: 1000,
            batch_size: 512,
            lr: 1e-3,
            seed: 0,
            checkpoint_every: 0,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.k == 0 || self.batch_size == 0 {
            return Err(Error::invalid("depth, k and batch_size must be positive"));
        }
        HkrConfig::new(self.margin, self.lambda)?;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("lr must be > 0, got {}", self.lr)));
        }
        if self.checkpoint_every > 0 && self.checkpoint_dir.is_none() {
            return Err(Error::invalid("checkpoint_every needs checkpoint_dir"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub kr: f64,
    pub hinge: f64,
    pub total: f64,
    /// Fraction of points seen this epoch with `y f < 0`, measured before
    /// each batch update.
    pub misclassified: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// Same records with wall times zeroed, for run-to-run comparison.
    pub fn without_timing(&self) -> TrainLog {
        TrainLog {
            records: self
                .records
                .iter()
                .map(|r| EpochRecord {
                    wall_seconds: 0.0,
                    ..r.clone()
                })
                .collect(),
        }
    }

    /// CSV with one row per epoch. Wall time is left out unless asked for,
    /// so logs of identical runs are byte-identical.
    pub fn write_csv(&self, w: impl Write, with_wall_time: bool) -> Result<()> {
        let mut w = BufWriter::new(w);
        write!(w, "epoch,kr,hinge,total,misclassified")?;
        writeln!(w, "{}", if with_wall_time { ",wall_seconds" } else { "" })?;
        for r in &self.records {
            write!(w, "{},{},{},{},{}", r.epoch, r.kr, r.hinge, r.total, r.misclassified)?;
            if with_wall_time {
                write!(w, ",{}", r.wall_seconds)?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn checkpoint(net: &LipNet, path: impl AsRef<Path>) -> Result<()> {
    net.save(path)
}

pub fn restore(path: impl AsRef<Path>) -> Result<LipNet> {
    LipNet::load(path)
}

/// Index lists for one epoch. In hkr mode every batch holds the same number
/// of points from each label; the smaller class wraps around.
fn epoch_batches(
    inside: &[usize],
    outside: &[usize],
    all: &[usize],
    loss: LossKind,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    match loss {
        LossKind::Fit => {
            let mut order = all.to_vec();
            order.shuffle(rng);
            order.chunks(2 * batch_size).map(<[usize]>::to_vec).collect()
        }
        LossKind::Hkr => {
            let mut a = inside.to_vec();
            let mut b = outside.to_vec();
            a.shuffle(rng);
            b.shuffle(rng);
            let longest = a.len().max(b.len());
            let mut batches = Vec::new();
            let mut start = 0;
            while start < longest {
                let take = batch_size.min(longest - start);
                let mut batch = Vec::with_capacity(2 * take);
                batch.extend((start..start + take).map(|t| a[t % a.len()]));
                batch.extend((start..start + take).map(|t| b[t % b.len()]));
                batches.push(batch);
                start += take;
            }
            batches
        }
    }
}

pub fn train(dataset: &LabeledDataset, cfg: &TrainConfig) -> Result<(LipNet, TrainLog)> {
    train_with_observer(dataset, cfg, |_, _| Ok(()))
}

/// Like [`train`], calling `observer` with the network after every epoch.
/// An error from the observer stops training.
pub fn train_with_observer(
    dataset: &LabeledDataset,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&EpochRecord, &LipNet) -> Result<()>,
) -> Result<(LipNet, TrainLog)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    let inside = dataset.indices_with_label(-1.0);
    let outside = dataset.indices_with_label(1.0);
    let s_true = match cfg.loss {
        LossKind::Fit => Some(
            dataset
                .s_true
                .as_ref()
                .ok_or_else(|| Error::invalid("loss=fit needs s_true in the dataset"))?,
        ),
        LossKind::Hkr => {
            if inside.is_empty() || outside.is_empty() {
                return Err(Error::invalid("hkr training needs both labels"));
            }
            if dataset.mode == crate::geometry::FieldMode::Signed && !dataset.is_balanced() {
                return Err(Error::invalid(format!(
                    "signed hkr training needs a balanced dataset ({} inside, {} outside)",
                    inside.len(),
                    outside.len()
                )));
            }
            None
        }
    };
    let all: Vec<usize> = (0..dataset.len()).collect();
    let hkr = HkrConfig::new(cfg.margin, cfg.lambda)?;

    let mut net = LipNet::init(dataset.dim, cfg.k, cfg.depth, cfg.seed)?;
    net.set_normalization(dataset.transform.clone())?;
    net.meta = ModelMeta {
        mode: dataset.mode,
        margin: cfg.margin,
        lambda: cfg.lambda,
    };
    let mut adam = AdamState::new(
        &net.param_shapes(),
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
    );
    // Separate stream from the weight initialization.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_ba7c);
    let mut log = TrainLog::default();
    let start = Instant::now();
    let d = dataset.dim;

    for epoch in 1..=cfg.epochs {
        let batches = epoch_batches(&inside, &outside, &all, cfg.loss, cfg.batch_size, &mut rng);
        let (mut kr, mut hinge, mut total) = (0.0, 0.0, 0.0);
        let (mut wrong, mut seen) = (0usize, 0usize);
        for (bi, batch) in batches.iter().enumerate() {
            let mut pts = Vec::with_capacity(batch.len() * d);
            let mut y = Vec::with_capacity(batch.len());
            for &i in batch {
                pts.extend_from_slice(dataset.point(i));
                y.push(dataset.labels[i]);
            }
            let (f, tape) = net.forward_batch(&pts)?;
            wrong += f.iter().zip(&y).filter(|(f, y)| **f * **y < 0.0).count();
            seen += f.len();
            let report = hkr_loss(&f, &y, &hkr)?;
            let (value, grad) = match s_true {
                Some(s) => {
                    let target: Vec<f64> = batch.iter().map(|&i| s[i]).collect();
                    let fit = fit_loss(&f, &target)?;
                    (fit.value, fit.grad)
                }
                None => (report.total, report.grad),
            };
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: bi,
                    param_norms: net.param_norms(),
                });
            }
            kr += report.kr;
            hinge += report.hinge;
            total += value;
            let grads = net.backward_params(&tape, &grad)?;
            net.apply_adam(&mut adam, &grads)?;
            if !net.params_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: bi,
                    param_norms: net.param_norms(),
                });
            }
        }
        let nb = batches.len() as f64;
        let record = EpochRecord {
            epoch,
            kr: kr / nb,
            hinge: hinge / nb,
            total: total / nb,
            misclassified: wrong as f64 / seen as f64,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        observer(&record, &net)?;
        if cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 {
            if let Some(dir) = &cfg.checkpoint_dir {
                std::fs::create_dir_all(dir)?;
                checkpoint(&net, dir.join(format!("epoch_{epoch:05}.lndf")))?;
            }
        }
        log.records.push(record);
    }
    Ok((net, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::circle_dataset;

    fn small_cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            depth: 3,
            k: 8,
            epochs,
            batch_size: 64,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_epochs_returns_init() {
        let data = circle_dataset(0.5, 100, 1).unwrap();
        let (net, log) = train(&data, &small_cfg(0)).unwrap();
        let mut fresh = LipNet::init(2, 8, 3, 3).unwrap();
        fresh.set_normalization(data.transform.clone()).unwrap();
        fresh.meta = net.meta.clone();
        assert_eq!(net, fresh);
        assert!(log.records.is_empty());
    }

    #[test]
    fn reproducible_and_logged() {
        let data = circle_dataset(0.5, 200, 1).unwrap();
        let (a, la) = train(&data, &small_cfg(3)).unwrap();
        let (b, lb) = train(&data, &small_cfg(3)).unwrap();
        assert_eq!(a.flat_params(), b.flat_params());
        assert_eq!(la.without_timing(), lb.without_timing());
        assert_eq!(la.records.len(), 3);
        let mut csv = Vec::new();
        la.write_csv(&mut csv, false).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("epoch,kr,hinge,total,misclassified\n1,"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn balanced_batches() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let inside: Vec<usize> = (0..10).collect();
        let outside: Vec<usize> = (10..35).collect();
        let batches = epoch_batches(&inside, &outside, &[], LossKind::Hkr, 8, &mut rng);
        assert_eq!(batches.len(), 4);
        for b in &batches {
            let n_in = b.iter().filter(|&&i| i < 10).count();
            assert_eq!(2 * n_in, b.len());
        }
        let seen: std::collections::HashSet<usize> = batches.iter().flatten().copied().collect();
        assert_eq!(seen.len(), 35);
    }

    #[test]
    fn config_checks() {
        let data = circle_dataset(0.5, 50, 1).unwrap();
        let mut no_truth = data.clone();
        no_truth.s_true = None;
        let cfg = TrainConfig {
            loss: LossKind::Fit,
            ..small_cfg(1)
        };
        assert!(train(&no_truth, &cfg).is_err());
        let cfg = TrainConfig {
            margin: 0.0,
            ..small_cfg(1)
        };
        assert!(train(&data, &cfg).is_err());
        let cfg: TrainConfig = serde_json::from_str(r#"{"depth": 4, "loss": "fit"}"#).unwrap();
        assert_eq!((cfg.depth, cfg.k, cfg.loss), (4, 128, LossKind::Fit));
        assert!(serde_json::from_str::<TrainConfig>(r#"{"dpth": 4}"#).is_err());
    }

    #[test]
    fn checkpoints_written() {
        let dir = tempfile::tempdir().unwrap();
        let data = circle_dataset(0.5, 50, 1).unwrap();
        let cfg = TrainConfig {
            checkpoint_every: 2,
            checkpoint_dir: Some(dir.path().to_path_buf()),
            ..small_cfg(4)
        };
        let (net, _) = train(&data, &cfg).unwrap();
        assert!(dir.path().join("epoch_00002.lndf").exists());
        let last = restore(dir.path().join("epoch_00004.lndf")).unwrap();
        assert_eq!(last, net);
    }
}
