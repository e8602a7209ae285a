//! Second-order layerwise pruning: single-weight OBS removal with
//! inverse-Hessian downdates, greedy row and layer solvers, and the
//! prune-then-step loop on a small network.

mod iterative;
mod mlp;
mod obs;

pub use iterative::{
    iterative_prune_loop, one_shot_prune, write_report_csv, DataSource, PruneOutcome, PruneSchedule,
    RoundReport, TeacherData, REPORT_HEADER,
};
pub use mlp::{Activation, DenseLayer, ForwardPass, TinyMlp};
pub use obs::{
    obs_remove_one, prune_layer, prune_row_greedy, relative_damp, shrink_inverse, LayerProblem,
    PruneDecision, PrunedLayer, RowPrune, DEFAULT_DAMP_FRACTION, SINGULAR_DIAGONAL_TOL,
};
