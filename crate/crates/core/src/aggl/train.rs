use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{MfAglModel, TrainConfig};
use crate::error::{Error, Result};
use crate::netcore::{AdamState, Gradient};
use crate::regions::{AreaId, LabelView, MixedFrequencyPanel, Period};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLoss {
    /// 1-based.
    pub epoch: usize,
    /// Sum of squared aggregate residuals seen during the epoch.
    pub loss: f64,
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub model: MfAglModel,
    pub history: Vec<EpochLoss>,
}

/// One optimizer step: a coarse label and one of its fine ticks.
struct Sample {
    p: AreaId,
    t: Period,
    tau: NaiveDate,
    label: f64,
    /// Encoded inputs and weight for each child of `p`.
    children: Vec<(Vec<f64>, Vec<f64>, f64)>,
}

/// Train on every label in the panel.
pub fn train(panel: &MixedFrequencyPanel, config: &TrainConfig) -> Result<Trained> {
    train_with_labels(panel, &panel.labels, config)
}

/// Train on the labels visible through `labels`; the panel's own label
/// map is not consulted.
///
/// Samples are `(p, t, τ)` triples visited one at a time in a seeded
/// shuffled order, each followed by an Adam step.
pub fn train_with_labels<L: LabelView>(
    panel: &MixedFrequencyPanel,
    labels: &L,
    config: &TrainConfig,
) -> Result<Trained> {
    train_observed(panel, labels, config, |_, _| {})
}

/// [`train_with_labels`], calling `on_epoch` with the loss and the current
/// parameters after every epoch.
pub fn train_observed<L, F>(panel: &MixedFrequencyPanel, labels: &L, config: &TrainConfig, mut on_epoch: F) -> Result<Trained>
where
    L: LabelView,
    F: FnMut(&EpochLoss, &MfAglModel),
{
    config.check()?;
    let violations = panel.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidPanel(violations));
    }

    // Scaling uses only what the caller lets us see.
    let mut visible = panel.clone();
    visible.labels.clear();
    for (p, t) in labels.keys() {
        if let Some(y) = labels.value(&p, t) {
            visible.labels.insert((p, t), y);
        }
    }
    if visible.labels.is_empty() {
        return Err(Error::NoLabels);
    }
    let mut model = MfAglModel::init(&visible, config)?;
    if config.epochs == 0 {
        return Ok(Trained {
            model,
            history: Vec::new(),
        });
    }

    let mut samples = Vec::new();
    for ((p, t), &label) in &visible.labels {
        let children = panel.hierarchy.children(p.as_str())?;
        for &tau in panel.calendar.ticks_in(*t) {
            let mut inputs = Vec::with_capacity(children.len());
            for q in children {
                let window = model.window(&panel.features, q.as_str(), tau)?;
                let (seq, extra) = model.encode(&window);
                inputs.push((seq, extra, panel.hierarchy.weight_of(q.as_str())?));
            }
            samples.push(Sample {
                p: p.clone(),
                t: *t,
                tau,
                label,
                children: inputs,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut adam = AdamState::new(config.adam, &model.network);
    let mut grad = Gradient::zeros_like(&model.network);
    let mut history = Vec::with_capacity(config.epochs);
    let scale = model.scaling.target;
    let mut upstream = Vec::new();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &i in &order {
            let s = &samples[i];
            let items: Vec<(&[f64], &[f64])> = s.children.iter().map(|(seq, extra, _)| (&seq[..], &extra[..])).collect();
            let (outputs, trace) = model.network.forward_batch(&items)?;
            let agg: f64 = outputs.iter().zip(&s.children).map(|(y, (_, _, w))| w * scale * y).sum();
            let residual = s.label - agg;
            let term = residual * residual;
            let diverged = || Error::NonFiniteLoss {
                epoch,
                sample: format!("({}, {}, {})", s.p, s.t, s.tau),
            };
            if !term.is_finite() {
                return Err(diverged());
            }
            epoch_loss += term;

            grad.fill(0.0);
            upstream.clear();
            upstream.extend(s.children.iter().map(|(_, _, w)| -2.0 * residual * w * scale));
            model.network.backward_batch_into(&trace, &upstream, &mut grad)?;
            if !grad.is_finite() {
                return Err(diverged());
            }
            adam.step(&mut model.network, &grad)?;
        }
        let done = EpochLoss {
            epoch,
            loss: epoch_loss,
        };
        on_epoch(&done, &model);
        history.push(done);
    }
    Ok(Trained { model, history })
}
