//! Per-fold training, evaluation, and k-fold cross validation.

use super::metrics::{confusion_matrix, precision_at_k, rank_classes};
use super::split::SplitPlan;
use super::store::FeatureStore;
use crate::error::{Error, Result};
use crate::features::HyperImage;
use crate::neuralnet::{
    example_gradients, forward, softmax_cross_entropy, Checkpoint, NetworkSpec, ParamSet, Sgd,
    Tensor,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    /// Epochs without sufficient improvement before stopping.
    pub patience: usize,
    /// Minimum relative train-loss improvement that counts as progress.
    pub min_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub early_stop: Option<EarlyStop>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            epochs: 30,
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 5e-4,
            batch_size: 32,
            early_stop: Some(EarlyStop {
                patience: 8,
                min_delta: 1e-3,
            }),
        }
    }
}

/// Test-side results of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    /// Mean test cross-entropy.
    pub loss: f64,
    /// Rank -> percentage, per snippet.
    pub precision_at: BTreeMap<usize, f64>,
    /// Rank -> percentage after per-song majority vote over snippets.
    pub song_precision_at: BTreeMap<usize, f64>,
    /// Rows true class, columns predicted top-1.
    pub confusion: Vec<Vec<usize>>,
    pub epochs_run: usize,
    pub n_test: usize,
}

pub struct FoldOutcome {
    pub checkpoint: Checkpoint,
    pub momentum: ParamSet,
    pub report: FoldReport,
    /// (epoch, mean train loss) pairs.
    pub history: Vec<(usize, f64)>,
}

/// Deterministic seed mixing (splitmix64 finalizer).
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9e3779b97f4a7c15)
        .wrapping_add(stream.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn image_to_input(image: &HyperImage, spec: &NetworkSpec) -> Result<Tensor> {
    let (h, w, c) = spec.input_shape;
    if c != 1 || image.height() != h || image.width() != w {
        return Err(Error::Shape(format!(
            "hyper-image {}x{} does not match network input {h}x{w}x{c}",
            image.height(),
            image.width()
        )));
    }
    Tensor::from_vec(&[h, w, 1], image.pixels.data().to_vec())
}

fn label_index(image: &HyperImage, classes: &[String], id: &str) -> Result<usize> {
    let label = image
        .label
        .as_deref()
        .ok_or_else(|| Error::Data(format!("hyper-image `{id}` carries no label")))?;
    classes
        .iter()
        .position(|c| c == label)
        .ok_or_else(|| Error::Data(format!("label `{label}` of `{id}` not in class list")))
}

fn fetch_examples(
    ids: &[String],
    store: &dyn FeatureStore,
    classes: &[String],
    spec: &NetworkSpec,
) -> Result<Vec<(Tensor, usize)>> {
    ids.iter()
        .map(|id| {
            let image = store.fetch(id)?;
            let x = image_to_input(&image, spec)?;
            let label = label_index(&image, classes, id)?;
            Ok((x, label))
        })
        .collect()
}

/// Mean loss and parameter gradients over a batch. Examples are processed
/// in parallel; the reduction runs in index order so results are bitwise
/// independent of the worker count.
fn batch_gradients(
    net: &Checkpoint,
    examples: &[(Tensor, usize)],
    batch: &[usize],
) -> Result<(f64, ParamSet)> {
    let per_example: Vec<Result<(f64, ParamSet)>> = batch
        .par_iter()
        .map(|&i| {
            let (x, label) = &examples[i];
            example_gradients(net, x, *label)
        })
        .collect();

    let mut total = net.params.zeros_like();
    let mut loss_sum = 0.0;
    for r in per_example {
        let (loss, grads) = r?;
        loss_sum += loss;
        total.accumulate(&grads);
    }
    let scale = 1.0 / batch.len() as f64;
    total.scale(scale);
    Ok((loss_sum * scale, total))
}

/// Train one fold end to end: seeded init, epoch loop with per-epoch
/// shuffling, divergence guard, optional early stop, then evaluation on the
/// fold's test snippets.
pub fn train_fold(
    plan: &SplitPlan,
    fold: usize,
    spec: &NetworkSpec,
    hp: &Hyperparams,
    store: &dyn FeatureStore,
    classes: &[String],
    config_hash: &str,
) -> Result<FoldOutcome> {
    let fold_def = plan
        .folds
        .get(fold)
        .ok_or_else(|| Error::Config(format!("fold {fold} out of range")))?;
    if hp.batch_size == 0 || hp.epochs == 0 {
        return Err(Error::Config(
            "batch_size and epochs must be positive".into(),
        ));
    }

    let fold_seed = mix_seed(plan.seed, fold as u64);
    let mut net = Checkpoint::init(spec.clone(), fold_seed, config_hash)?;
    let train = fetch_examples(&fold_def.train, store, classes, spec)?;
    if train.is_empty() {
        return Err(Error::Data(format!("fold {fold} has no training snippets")));
    }

    let mut sgd = Sgd::new(&net.params);
    let mut history = Vec::with_capacity(hp.epochs);
    let mut best_loss = f64::INFINITY;
    let mut stale_epochs = 0usize;

    for epoch in 0..hp.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(fold_seed, epoch as u64 + 1));
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(hp.batch_size) {
            let (loss, grads) = batch_gradients(&net, &train, batch)?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    fold,
                    epoch,
                    detail: "batch loss is not finite".into(),
                });
            }
            epoch_loss += loss * batch.len() as f64;
            sgd.step(
                &mut net.params,
                &grads,
                hp.learning_rate,
                hp.momentum,
                hp.weight_decay,
            );
        }
        epoch_loss /= train.len() as f64;
        history.push((epoch, epoch_loss));
        net.epoch = epoch + 1;

        if let Some(stop) = &hp.early_stop {
            if epoch_loss < best_loss * (1.0 - stop.min_delta) {
                best_loss = epoch_loss;
                stale_epochs = 0;
            } else {
                stale_epochs += 1;
                if stale_epochs >= stop.patience {
                    break;
                }
            }
        }
    }

    let report = evaluate_fold(plan, fold, &net, store, classes)?;
    Ok(FoldOutcome {
        momentum: sgd.velocity().clone(),
        checkpoint: net,
        report,
        history,
    })
}

/// Evaluate a checkpoint on one fold's test snippets.
pub fn evaluate_fold(
    plan: &SplitPlan,
    fold: usize,
    net: &Checkpoint,
    store: &dyn FeatureStore,
    classes: &[String],
) -> Result<FoldReport> {
    let fold_def = plan
        .folds
        .get(fold)
        .ok_or_else(|| Error::Config(format!("fold {fold} out of range")))?;
    let test = fetch_examples(&fold_def.test, store, classes, &net.spec)?;
    if test.is_empty() {
        return Err(Error::Data(format!("fold {fold} has no test snippets")));
    }
    let k_classes = classes.len();

    let evaluated: Vec<Result<(f64, Vec<usize>)>> = test
        .par_iter()
        .map(|(x, label)| {
            let pass = forward(net, x)?;
            let (loss, _) = softmax_cross_entropy(pass.logits(), *label)?;
            Ok((loss, rank_classes(pass.logits().data())))
        })
        .collect();

    let mut losses = Vec::with_capacity(test.len());
    let mut ranked = Vec::with_capacity(test.len());
    for r in evaluated {
        let (loss, ranks) = r?;
        losses.push(loss);
        ranked.push(ranks);
    }
    let labels: Vec<usize> = test.iter().map(|(_, l)| *l).collect();
    let mean_loss = losses.iter().sum::<f64>() / losses.len() as f64;
    if !mean_loss.is_finite() {
        return Err(Error::Divergence {
            fold,
            epoch: net.epoch,
            detail: "test loss is not finite".into(),
        });
    }

    let ks: Vec<usize> = ranks_to_report(k_classes);
    let precision_at = precision_at_k(&ranked, &labels, &ks, k_classes)?;
    let confusion = confusion_matrix(&ranked, &labels, k_classes);
    let song_precision_at =
        song_vote_precision(plan, &fold_def.test, &ranked, &labels, &ks, k_classes)?;

    Ok(FoldReport {
        fold,
        loss: mean_loss,
        precision_at,
        song_precision_at,
        confusion,
        epochs_run: net.epoch,
        n_test: test.len(),
    })
}

fn ranks_to_report(n_classes: usize) -> Vec<usize> {
    let mut ks = vec![1];
    if n_classes >= 3 {
        ks.push(3);
    }
    if n_classes > 1 && !ks.contains(&n_classes) {
        ks.push(n_classes);
    }
    ks
}

/// Per-song precision: rank classes by their top-1 vote count over the
/// song's snippets (ties to the lower class index).
fn song_vote_precision(
    plan: &SplitPlan,
    test_ids: &[String],
    ranked: &[Vec<usize>],
    labels: &[usize],
    ks: &[usize],
    n_classes: usize,
) -> Result<BTreeMap<usize, f64>> {
    let mut per_song: BTreeMap<&String, (Vec<usize>, usize)> = BTreeMap::new();
    for (i, id) in test_ids.iter().enumerate() {
        let song = plan
            .snippet_songs
            .get(id)
            .ok_or_else(|| Error::Data(format!("snippet `{id}` missing from plan")))?;
        let entry = per_song
            .entry(song)
            .or_insert((vec![0; n_classes], labels[i]));
        entry.0[ranked[i][0]] += 1;
        if entry.1 != labels[i] {
            return Err(Error::Data(format!(
                "song `{song}` has inconsistent labels"
            )));
        }
    }
    let mut song_ranked = Vec::with_capacity(per_song.len());
    let mut song_labels = Vec::with_capacity(per_song.len());
    for (_, (votes, label)) in per_song {
        let mut order: Vec<usize> = (0..n_classes).collect();
        order.sort_by(|&a, &b| votes[b].cmp(&votes[a]).then(a.cmp(&b)));
        song_ranked.push(order);
        song_labels.push(label);
    }
    precision_at_k(&song_ranked, &song_labels, ks, n_classes)
}

// ---------------------------------------------------------------------------
// Cross validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Mean and population std of loss and each precision rank over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub loss: MeanStd,
    pub precision_at: BTreeMap<usize, MeanStd>,
    pub folds: usize,
}

pub fn aggregate_reports(reports: &[FoldReport]) -> Option<Aggregate> {
    if reports.is_empty() {
        return None;
    }
    let stat = |values: &[f64]| {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd {
            mean,
            std: var.sqrt(),
        }
    };
    let losses: Vec<f64> = reports.iter().map(|r| r.loss).collect();
    let mut precision_at = BTreeMap::new();
    for k in reports[0].precision_at.keys() {
        let vals: Vec<f64> = reports
            .iter()
            .filter_map(|r| r.precision_at.get(k))
            .cloned()
            .collect();
        precision_at.insert(*k, stat(&vals));
    }
    Some(Aggregate {
        loss: stat(&losses),
        precision_at,
        folds: reports.len(),
    })
}

pub struct CvOutcome {
    pub folds: Vec<FoldOutcome>,
    pub failures: Vec<(usize, Error)>,
    pub aggregate: Option<Aggregate>,
}

impl CvOutcome {
    pub fn reports(&self) -> Vec<&FoldReport> {
        self.folds.iter().map(|f| &f.report).collect()
    }

    /// First failure as a hard error; successful folds are kept either way.
    pub fn into_result(self) -> Result<CvOutcome> {
        if let Some((fold, err)) = self.failures.into_iter().next() {
            return Err(match err {
                Error::Divergence { epoch, detail, .. } => Error::Divergence {
                    fold,
                    epoch,
                    detail,
                },
                other => other,
            });
        }
        Ok(CvOutcome {
            folds: self.folds,
            failures: Vec::new(),
            aggregate: self.aggregate,
        })
    }
}

/// Run every fold of the plan; failures are collected per fold and partial
/// results preserved.
pub fn cross_validate(
    plan: &SplitPlan,
    spec: &NetworkSpec,
    hp: &Hyperparams,
    store: &dyn FeatureStore,
    classes: &[String],
    config_hash: &str,
) -> CvOutcome {
    let mut folds = Vec::new();
    let mut failures = Vec::new();
    for fold in 0..plan.folds.len() {
        match train_fold(plan, fold, spec, hp, store, classes, config_hash) {
            Ok(outcome) => folds.push(outcome),
            Err(e) => failures.push((fold, e)),
        }
    }
    let reports: Vec<FoldReport> = folds.iter().map(|f| f.report.clone()).collect();
    let aggregate = aggregate_reports(&reports);
    CvOutcome {
        folds,
        failures,
        aggregate,
    }
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

/// CSV with one data row per fold: `fold,architecture,loss,precision@1,precision@3`.
/// The architecture column is double-quoted because the layer notation
/// itself contains commas.
pub fn report_csv(arch: &str, reports: &[&FoldReport]) -> String {
    let mut out = String::from("fold,architecture,loss,precision@1,precision@3\n");
    for r in reports {
        let p1 = r.precision_at.get(&1).copied().unwrap_or(f64::NAN);
        let p3 = r
            .precision_at
            .get(&3)
            .copied()
            .unwrap_or_else(|| r.precision_at.values().last().copied().unwrap_or(f64::NAN));
        out.push_str(&format!(
            "{},\"{}\",{:.4},{:.2},{:.2}\n",
            r.fold, arch, r.loss, p1, p3
        ));
    }
    out
}

/// CSV of the per-epoch training loss: `epoch,train_loss`.
pub fn history_csv(history: &[(usize, f64)]) -> String {
    let mut out = String::from("epoch,train_loss\n");
    for (epoch, loss) in history {
        out.push_str(&format!("{epoch},{loss:.6}\n"));
    }
    out
}
