//! Iterative sparse solvers: k-IHT, Top-k I-OBS, exact I-OBS and
//! stochastic I-OBS, plus the driver loop that records traces.

mod steps;
mod trace;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::numerics::{cholesky, lambda_max_default, DenseVector};
use crate::objectives::Objective;
use crate::sparsity::{top_k, Mask};
use crate::Scalar;

pub use steps::{
    fixed_mask_stochastic_update, iht_step, iobs_step_exact, iobs_step_topk, mask_objective,
    masked_newton_update, newton_target, select_mask_exact, stochastic_iobs_step, stochastic_step_size,
    NewtonPoint, StochasticStep, BRUTE_FORCE_COUNT_LIMIT, BRUTE_FORCE_DIM_LIMIT,
};
pub use trace::{format_trace_row, parse_trace_csv, write_trace_csv, TraceRecord, TRACE_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Iht,
    TopkIobs,
    ExactIobs,
    StochIobs,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Iht, Method::TopkIobs, Method::ExactIobs, Method::StochIobs];

    pub fn name(self) -> &'static str {
        match self {
            Method::Iht => "iht",
            Method::TopkIobs => "topk-iobs",
            Method::ExactIobs => "exact-iobs",
            Method::StochIobs => "stoch-iobs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown method {s:?} (expected iht|topk-iobs|exact-iobs|stoch-iobs)")))
    }
}

/// Learning-rate policy for IHT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize<T> {
    /// `1/λ_max(H(θ₀))`.
    Auto,
    Fixed(T),
}

impl<T: Scalar> FromStr for StepSize<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "auto" {
            return Ok(StepSize::Auto);
        }
        let v: f64 = s.trim().parse().map_err(|e| Error::Parse(format!("eta {s:?}: {e}")))?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidConfig(format!("eta must be positive, got {v}")));
        }
        Ok(StepSize::Fixed(T::c(v)))
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig<T> {
    /// Sparsity budget.
    pub k: usize,
    pub max_iters: usize,
    pub eta: StepSize<T>,
    /// Added to the Hessian diagonal before factoring.
    pub damp: T,
    /// `λ` in the stochastic step size.
    pub stoch_lambda: T,
    /// Mini-batch size for stochastic gradients; `None` uses all samples.
    pub batch_size: Option<usize>,
    /// Stop once `‖θ_{t+1} − θ_t‖ ≤ tol`; zero runs the full budget.
    pub tol: T,
    pub seed: u64,
    pub brute_force_limit: usize,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iters: 750,
            eta: StepSize::Auto,
            damp: T::zero(),
            stoch_lambda: T::one(),
            batch_size: None,
            tol: T::zero(),
            seed: 0,
            brute_force_limit: BRUTE_FORCE_DIM_LIMIT,
        }
    }

    pub fn with_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SolverState<T> {
    pub theta: DenseVector<T>,
    pub t: usize,
    pub trace: Vec<TraceRecord<T>>,
    /// Set when a stopping rule fired before the iteration budget ran out.
    pub converged: bool,
    /// Learning rate actually used by IHT.
    pub eta: Option<T>,
}

fn record<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    t: usize,
    theta: &DenseVector<T>,
    step_norm: T,
    target: Option<(&DenseVector<T>, &Mask)>,
) -> Result<TraceRecord<T>> {
    let (dist_to_opt, support_recall) = match target {
        Some((star, star_mask)) => {
            let recall = if star_mask.is_empty() {
                T::one()
            } else {
                T::from_count(Mask::support_of(theta).intersection_count(star_mask))
                    / T::from_count(star_mask.cardinality())
            };
            (Some(theta.distance(star)), Some(recall))
        }
        None => (None, None),
    };
    Ok(TraceRecord { t, loss: obj.value(theta)?, dist_to_opt, support_recall, step_norm })
}

/// Resolves the IHT learning rate for the objective at `theta`.
pub fn resolve_eta<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    theta: &DenseVector<T>,
    eta: StepSize<T>,
) -> Result<T> {
    match eta {
        StepSize::Fixed(v) => Ok(v),
        StepSize::Auto => {
            let lmax = lambda_max_default(&obj.hessian(theta)?)?.value;
            if !(lmax > T::zero()) {
                return Err(Error::InvalidConfig("Hessian has no positive eigenvalue; pass eta explicitly".into()));
            }
            Ok(T::one() / lmax)
        }
    }
}

/// Runs `method` from `theta0` for `cfg.max_iters` steps, recording a trace
/// entry for the initial point and after every step.
pub fn run<T: Scalar, O: Objective<T> + ?Sized>(
    obj: &O,
    method: Method,
    theta0: &DenseVector<T>,
    cfg: &SolverConfig<T>,
    theta_star: Option<&DenseVector<T>>,
) -> Result<SolverState<T>> {
    let d = obj.dim();
    check_dim("run: initial point", d, theta0.dim())?;
    if cfg.k == 0 || cfg.k > d {
        return Err(Error::KOutOfRange { k: cfg.k, d });
    }
    if let Some(star) = theta_star {
        check_dim("run: reference solution", d, star.dim())?;
    }
    let star_mask = theta_star.map(Mask::support_of);
    let target = theta_star.zip(star_mask.as_ref());

    let eta = match method {
        Method::Iht => Some(resolve_eta(obj, theta0, cfg.eta)?),
        _ => None,
    };
    // A constant Hessian is factored (and, for the exhaustive search,
    // inverted) once for the whole run instead of at every iterate.
    let fixed = match method {
        Method::TopkIobs | Method::ExactIobs if obj.hessian_is_constant() => {
            let f = cholesky(&obj.hessian(theta0)?, cfg.damp)?;
            let inv = (method == Method::ExactIobs).then(|| f.inverse());
            Some((f, inv))
        }
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut theta = theta0.clone();
    let mut trace = vec![record(obj, 0, &theta, T::zero(), target)?];
    let mut converged = false;
    let mut t = 0;
    while t < cfg.max_iters {
        let next = match method {
            Method::Iht => iht_step(obj, &theta, cfg.k, eta.expect("resolved above")),
            Method::TopkIobs => match &fixed {
                Some((f, _)) => f
                    .solve(&obj.gradient(&theta)?)
                    .and_then(|step| top_k(&theta.sub(&step), cfg.k))
                    .map(|(next, _)| next),
                None => iobs_step_topk(obj, &theta, cfg.k, cfg.damp),
            },
            Method::ExactIobs => match &fixed {
                Some((f, Some(inv))) => NewtonPoint::from_factor(f, inv.clone(), &theta, &obj.gradient(&theta)?)
                    .and_then(|np| np.select_mask_exact(cfg.k, cfg.brute_force_limit).and_then(|m| np.masked_update(&m))),
                _ => iobs_step_exact(obj, &theta, cfg.k, cfg.damp, cfg.brute_force_limit),
            },
            Method::StochIobs => {
                let b = match cfg.batch_size {
                    Some(b) => b,
                    None => obj.sample_count().ok_or(Error::Unsupported)?,
                };
                match stochastic_iobs_step(obj, &theta, cfg.k, cfg.stoch_lambda, b, &mut rng) {
                    Ok(step) => Ok(step.theta),
                    Err(Error::ZeroGradient) => {
                        converged = true;
                        break;
                    }
                    Err(e) => Err(e),
                }
            }
        }?;
        t += 1;
        let step_norm = next.distance(&theta);
        theta = next;
        trace.push(record(obj, t, &theta, step_norm, target)?);
        if cfg.tol > T::zero() && step_norm <= cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(SolverState { theta, t, trace, converged, eta })
}
