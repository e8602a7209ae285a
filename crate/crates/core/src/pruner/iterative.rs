use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::numerics::{format_real, DenseMatrix};
use crate::pruner::mlp::TinyMlp;
use crate::pruner::obs::{prune_layer, LayerProblem, DEFAULT_DAMP_FRACTION};
use crate::Scalar;

/// Source of `(inputs, targets)` batches, inputs as `d_in × n`.
pub trait DataSource<T> {
    fn sample(&mut self, rng: &mut dyn rand::RngCore, batch: usize) -> Result<(DenseMatrix<T>, DenseMatrix<T>)>;
}

/// Standard-normal inputs labelled by a fixed teacher network.
#[derive(Debug, Clone)]
pub struct TeacherData<T> {
    pub teacher: TinyMlp<T>,
}

impl<T: Scalar> DataSource<T> for TeacherData<T> {
    fn sample(&mut self, rng: &mut dyn rand::RngCore, batch: usize) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
        let d = self.teacher.input_dim();
        let x = DenseMatrix::from_fn(d, batch, |_, _| T::c(rng.sample::<f64, _>(StandardNormal)));
        let y = self.teacher.forward(&x)?.output().clone();
        Ok((x, y))
    }
}

#[derive(Debug, Clone)]
pub struct PruneSchedule<T> {
    pub rounds: usize,
    pub lr: T,
    /// Weights kept per row, one entry per layer.
    pub k_row: Vec<usize>,
    /// Dampening as a fraction of the mean Hessian diagonal.
    pub damp_fraction: T,
    pub batch: usize,
}

impl<T: Scalar> PruneSchedule<T> {
    pub fn new(rounds: usize, lr: T, k_row: Vec<usize>, batch: usize) -> Self {
        Self { rounds, lr, k_row, damp_fraction: T::c(DEFAULT_DAMP_FRACTION), batch }
    }
}

/// One row of the prune report.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: usize,
    pub layer: usize,
    /// `‖WX − ŴX‖² / n` for this layer.
    pub recon_loss: f64,
    /// Network loss on the round's batch right after pruning.
    pub train_loss: f64,
    /// Fraction of zero weights in the layer after pruning.
    pub sparsity: f64,
}

pub const REPORT_HEADER: &str = "round,layer,recon_loss,train_loss,sparsity";

pub fn write_report_csv<W: Write>(mut w: W, rows: &[RoundReport]) -> Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.round,
            r.layer,
            format_real(r.recon_loss),
            format_real(r.train_loss),
            format_real(r.sparsity)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PruneOutcome<T> {
    pub model: TinyMlp<T>,
    pub reports: Vec<RoundReport>,
}

fn prune_all_layers<T: Scalar>(
    model: &mut TinyMlp<T>,
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    schedule: &PruneSchedule<T>,
    round: usize,
    reports: &mut Vec<RoundReport>,
) -> Result<()> {
    let pass = model.forward(x)?;
    if !pass.inputs.iter().all(DenseMatrix::is_finite) {
        return Err(Error::NonFiniteLoss { round });
    }
    let n = x.cols().max(1) as f64;
    let mut recon = Vec::with_capacity(model.layers.len());
    for (l, layer) in model.layers.iter_mut().enumerate() {
        let problem =
            LayerProblem::from_calibration(layer.weights.clone(), &pass.inputs[l], schedule.damp_fraction, schedule.k_row[l])?;
        let pruned = prune_layer(&problem)?;
        recon.push(pruned.loss().to_f64_lossy() / n);
        layer.weights = pruned.weights;
    }
    let train_loss = model.loss(x, y)?.to_f64_lossy();
    if !train_loss.is_finite() {
        return Err(Error::NonFiniteLoss { round });
    }
    for (l, layer) in model.layers.iter().enumerate() {
        let w = layer.weights.as_slice();
        reports.push(RoundReport {
            round,
            layer: l,
            recon_loss: recon[l],
            train_loss,
            sparsity: w.iter().filter(|x| x.is_zero()).count() as f64 / w.len().max(1) as f64,
        });
    }
    Ok(())
}

/// Alternates layerwise second-order pruning with one dense gradient step
/// per round, then prunes once more so the returned model meets the
/// per-row budgets. Layer inputs for a round come from the model as it
/// stood at the start of that round.
pub fn iterative_prune_loop<T: Scalar, D: DataSource<T> + ?Sized>(
    mlp: &TinyMlp<T>,
    data: &mut D,
    schedule: &PruneSchedule<T>,
    rng: &mut dyn rand::RngCore,
) -> Result<PruneOutcome<T>> {
    if schedule.rounds == 0 {
        return Err(Error::InvalidConfig("need at least one round".into()));
    }
    check_dim("per-layer budgets", mlp.layers.len(), schedule.k_row.len())?;
    for (l, (&k, layer)) in schedule.k_row.iter().zip(&mlp.layers).enumerate() {
        if k > layer.weights.cols() {
            return Err(Error::InvalidConfig(format!("layer {l}: k_row {k} exceeds fan-in {}", layer.weights.cols())));
        }
    }
    let mut model = mlp.clone();
    let mut reports = Vec::new();
    for round in 1..=schedule.rounds {
        let (x, y) = data.sample(rng, schedule.batch)?;
        prune_all_layers(&mut model, &x, &y, schedule, round, &mut reports)?;
        let grads = model.backprop(&x, &y)?;
        for (layer, g) in model.layers.iter_mut().zip(&grads) {
            layer.weights = layer.weights.sub(&g.scale(schedule.lr))?;
        }
        if !model.layers.iter().all(|l| l.weights.is_finite()) {
            return Err(Error::NonFiniteLoss { round });
        }
    }
    let (x, y) = data.sample(rng, schedule.batch)?;
    prune_all_layers(&mut model, &x, &y, schedule, schedule.rounds + 1, &mut reports)?;
    Ok(PruneOutcome { model, reports })
}

/// Prunes every layer once on a single batch.
pub fn one_shot_prune<T: Scalar, D: DataSource<T> + ?Sized>(
    mlp: &TinyMlp<T>,
    data: &mut D,
    schedule: &PruneSchedule<T>,
    rng: &mut dyn rand::RngCore,
) -> Result<PruneOutcome<T>> {
    check_dim("per-layer budgets", mlp.layers.len(), schedule.k_row.len())?;
    let mut model = mlp.clone();
    let mut reports = Vec::new();
    let (x, y) = data.sample(rng, schedule.batch)?;
    prune_all_layers(&mut model, &x, &y, schedule, 1, &mut reports)?;
    Ok(PruneOutcome { model, reports })
}
