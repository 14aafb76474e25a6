use std::io::Write;
use std::path::Path;

use gssl_autodiff::{Tape, Tensor};
use serde::{Deserialize, Serialize};

use super::{Adam, TrainConfig};
use crate::data::{negative_sample_edges, Dataset, EdgeBatch};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, cross_entropy};
use crate::model::ModelBundle;
use crate::nets::{BeliefMatrix, GraphInputs, Pass};
use crate::objective::{supervised_loss, total_loss, LabelContext, LossBreakdown, ObjectiveInputs};
use crate::rng::{derive_seed, stream, tags};

/// One line of the JSON-lines training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub recon: f64,
    pub kl: f64,
    pub prior: f64,
    pub supervised: f64,
    pub eta: f64,
    pub total: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// Scores of the restored best snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitMetrics {
    pub model: String,
    pub seed: u64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub val_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: Option<f64>,
}

pub struct FitResult {
    pub bundle: ModelBundle,
    pub log: Vec<EpochRecord>,
    pub metrics: FitMetrics,
    /// Posterior class probabilities in eval mode, observed rows not pinned.
    pub beliefs: BeliefMatrix,
}

/// Trains `config.model` on `ds` until the validation cross-entropy has not
/// improved for more than `patience` epochs, then restores the best epoch.
///
/// Generative models minimise `recon + kl + prior + η·supervised` over the
/// observed edges plus an equal number of non-edges drawn afresh each epoch;
/// baselines minimise the supervised cross-entropy alone.
pub fn fit(config: &TrainConfig, ds: &Dataset) -> Result<FitResult> {
    config.validate()?;
    ds.validate()?;
    if ds.val.is_empty() {
        return Err(Error::Dataset("early stopping needs a non-empty validation split".into()));
    }
    if ds.observed.iter().all(|&o| !o) {
        return Err(Error::Dataset("no observed labels".into()));
    }
    let mut init = stream(config.seed, &[tags::INIT]);
    let mut bundle = ModelBundle::new(
        config.model.spec(),
        &config.architecture(),
        (ds.num_features(), ds.num_classes),
        &mut init,
    )?;
    let inputs = GraphInputs::new(ds, config.normalize_features);
    let labels = LabelContext::new(ds);
    let mut adam = Adam::new(&bundle.params, config.lr, config.weight_decay);
    let negatives = ds.graph.num_edges().min(ds.graph.num_non_edges());

    let mut log = Vec::new();
    let mut best = (f64::INFINITY, 0usize, bundle.params.snapshot());
    let mut since = 0usize;
    for epoch in 1..=config.max_epochs {
        let mut tape = Tape::new();
        let bound = bundle.params.bind(&mut tape);
        let mut drop_rng = stream(config.seed, &[tags::DROPOUT, epoch as u64]);
        let mut pass = Pass {
            training: true,
            rng: &mut drop_rng,
        };
        let out = bundle.forward(&mut tape, &bound, &inputs, &mut pass)?;
        let annotate = |e: Error| match e {
            Error::Numeric { what, detail } => Error::Numeric {
                what: format!("{what} at epoch {epoch}"),
                detail,
            },
            other => other,
        };
        let (vars, breakdown): (_, LossBreakdown) = match (&bundle.generative, out.logp) {
            (Some(g), Some(logp)) => {
                let seed = derive_seed(config.seed, &[tags::NEGATIVES, epoch as u64]);
                let mut rng = stream(seed, &[]);
                let batch = EdgeBatch {
                    positives: ds.graph.edges().to_vec(),
                    negatives: negative_sample_edges(&ds.graph, negatives, &mut rng)?,
                    seed,
                };
                let io = ObjectiveInputs {
                    head: &g.head,
                    bound: &bound,
                    features: &inputs.features,
                    labels: &labels,
                    batch: &batch,
                    eta: config.eta,
                    reduction: config.reduction,
                };
                total_loss(&mut tape, out.logq, logp, &io).map_err(annotate)?
            }
            _ => supervised_loss(&mut tape, out.logq, &labels, config.reduction).map_err(annotate)?,
        };
        let grads = tape.backward(vars.total)?;
        adam.step(&mut bundle.params, &Adam::collect(&bound, &grads))
            .map_err(annotate)?;

        let logq = evaluate(&bundle, &inputs)?;
        let val_loss = cross_entropy(&logq, ds, &ds.val)?;
        let val_acc = accuracy(&BeliefMatrix::from_log_probs(&logq)?, ds, &ds.val)?;
        log.push(EpochRecord {
            epoch,
            recon: breakdown.recon,
            kl: breakdown.kl,
            prior: breakdown.prior,
            supervised: breakdown.supervised,
            eta: breakdown.eta,
            total: breakdown.total,
            val_loss,
            val_acc,
        });
        if !val_loss.is_finite() {
            return Err(Error::Numeric {
                what: format!("validation loss at epoch {epoch}"),
                detail: format!("{val_loss}"),
            });
        }
        if val_loss < best.0 {
            best = (val_loss, epoch, bundle.params.snapshot());
            since = 0;
        } else {
            since += 1;
            if since > config.patience {
                break;
            }
        }
    }

    let epochs_run = log.len();
    bundle.params.restore(&best.2);
    let logq = evaluate(&bundle, &inputs)?;
    let beliefs = BeliefMatrix::from_log_probs(&logq)?;
    let metrics = FitMetrics {
        model: config.model.name().into(),
        seed: config.seed,
        best_epoch: best.1,
        epochs_run,
        val_loss: best.0,
        train_acc: accuracy(&beliefs, ds, &ds.train).unwrap_or(f64::NAN),
        val_acc: accuracy(&beliefs, ds, &ds.val)?,
        test_acc: if ds.test.is_empty() {
            None
        } else {
            Some(accuracy(&beliefs, ds, &ds.test)?)
        },
    };
    log::debug!(
        "{} seed {}: best epoch {} of {}, val acc {:.4}",
        metrics.model,
        metrics.seed,
        metrics.best_epoch,
        epochs_run,
        metrics.val_acc
    );
    Ok(FitResult {
        bundle,
        log,
        metrics,
        beliefs,
    })
}

/// Posterior log-probabilities in eval mode.
pub fn evaluate(bundle: &ModelBundle, inputs: &GraphInputs) -> Result<Tensor> {
    let mut tape = Tape::new();
    let bound = bundle.params.bind(&mut tape);
    let mut rng = stream(0, &[]);
    let mut pass = Pass {
        training: false,
        rng: &mut rng,
    };
    let logq = bundle.posterior.forward(&mut tape, &bound, inputs, &mut pass)?;
    Ok(tape.value(logq).clone())
}

pub fn write_log(log: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for r in log {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<EpochRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::load(path, i + 1, e.to_string())))
        .collect()
}
