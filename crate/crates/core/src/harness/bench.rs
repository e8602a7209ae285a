use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::instance::{derive_seed, gen_image_instance, gen_instance, GrayImage, Instance};
use crate::harness::spec::{ExperimentSpec, Prior};
use crate::numerics::{format_real, save_vector};
use crate::solvers::{run, write_trace_csv, Method, TraceRecord};
use crate::Vector;

/// Outcome of one method on one run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run: usize,
    pub method: Method,
    pub result: std::result::Result<Vec<TraceRecord<f64>>, String>,
}

/// Per-iteration mean and standard deviation over successful runs.
#[derive(Debug, Clone)]
pub struct MethodAggregate {
    pub method: Method,
    pub mean: Vec<TraceRecord<f64>>,
    pub std: Vec<TraceRecord<f64>>,
    pub successes: usize,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub outcomes: Vec<RunOutcome>,
    pub aggregates: Vec<MethodAggregate>,
}

impl BenchResult {
    pub fn aggregate(&self, method: Method) -> Option<&MethodAggregate> {
        self.aggregates.iter().find(|a| a.method == method)
    }
}

/// Builds the problem for run `run` of `spec`.
pub fn instance_for_run(spec: &ExperimentSpec, image: Option<&GrayImage>, run: usize) -> Result<Instance> {
    let seed = derive_seed(spec.seed, run as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec.prior {
        Prior::Gaussian => gen_instance(spec, seed, &mut rng),
        Prior::Image => {
            let img = image.ok_or_else(|| Error::InvalidConfig("image prior needs an image".into()))?;
            gen_image_instance(img, spec.n, spec.noise, seed, &mut rng)
        }
    }
}

fn solve_run(spec: &ExperimentSpec, image: Option<&GrayImage>, r: usize) -> Vec<RunOutcome> {
    let inst = match instance_for_run(spec, image, r) {
        Ok(inst) => inst,
        Err(e) => {
            return spec
                .methods
                .iter()
                .map(|&method| RunOutcome { run: r, method, result: Err(e.to_string()) })
                .collect()
        }
    };
    let obj = inst.objective();
    let run_seed = derive_seed(spec.seed, r as u64);
    spec.methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let cfg = spec.solver_config(derive_seed(run_seed, j as u64 + 1));
            let result = obj
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|obj| {
                    run(obj, method, &Vector::zeros(inst.d()), &cfg, Some(&inst.theta_star))
                        .map(|s| s.trace)
                        .map_err(|e| e.to_string())
                });
            RunOutcome { run: r, method, result }
        })
        .collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn aggregate(method: Method, traces: &[&Vec<TraceRecord<f64>>]) -> MethodAggregate {
    let len = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    let mut mean = Vec::with_capacity(len);
    let mut std = Vec::with_capacity(len);
    for t in 0..len {
        let col = |f: &dyn Fn(&TraceRecord<f64>) -> Option<f64>| -> Option<(f64, f64)> {
            let v: Option<Vec<f64>> = traces.iter().map(|tr| f(&tr[t])).collect();
            v.map(|v| mean_std(&v))
        };
        let (lm, ls) = col(&|r| Some(r.loss)).expect("always present");
        let dist = col(&|r| r.dist_to_opt);
        let rec = col(&|r| r.support_recall);
        let (sm, ss) = col(&|r| Some(r.step_norm)).expect("always present");
        mean.push(TraceRecord { t, loss: lm, dist_to_opt: dist.map(|p| p.0), support_recall: rec.map(|p| p.0), step_norm: sm });
        std.push(TraceRecord { t, loss: ls, dist_to_opt: dist.map(|p| p.1), support_recall: rec.map(|p| p.1), step_norm: ss });
    }
    MethodAggregate { method, mean, std, successes: traces.len() }
}

/// Runs every method on `spec.runs` independent instances. Runs execute on
/// up to `spec.jobs` threads; results are assembled in run order, so the
/// output does not depend on scheduling.
pub fn run_bench(spec: &ExperimentSpec, image: Option<&GrayImage>) -> Result<BenchResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        (0..spec.runs)
            .into_par_iter()
            .map(|r| solve_run(spec, image, r))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    let mut aggregates = Vec::new();
    for &method in &spec.methods {
        let ok: Vec<&Vec<TraceRecord<f64>>> = outcomes
            .iter()
            .filter(|o| o.method == method)
            .filter_map(|o| o.result.as_ref().ok())
            .collect();
        let failed = spec.runs - ok.len();
        if ok.is_empty() || 2 * ok.len() < spec.runs {
            return Err(Error::TooManyFailures { failed, runs: spec.runs });
        }
        aggregates.push(aggregate(method, &ok));
    }
    Ok(BenchResult { outcomes, aggregates })
}

/// Writes per-run traces, `mean_<method>.csv`, `std_<method>.csv` and
/// `summary.csv` under `dir`.
pub fn write_bench(result: &BenchResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut summary = String::from("run,method,status,final_loss,final_dist_to_opt,final_support_recall\n");
    for o in &result.outcomes {
        match &o.result {
            Ok(trace) => {
                let mut buf = Vec::new();
                write_trace_csv(&mut buf, trace)?;
                std::fs::write(dir.join(format!("run_{:03}_{}.csv", o.run, o.method)), buf)?;
                let last = trace.last().expect("trace has the initial record");
                let opt = |x: Option<f64>| x.map(format_real).unwrap_or_default();
                let _ = writeln!(
                    summary,
                    "{},{},ok,{},{},{}",
                    o.run,
                    o.method,
                    format_real(last.loss),
                    opt(last.dist_to_opt),
                    opt(last.support_recall)
                );
            }
            Err(msg) => {
                let _ = writeln!(summary, "{},{},failed: {},,,", o.run, o.method, msg.replace(',', ";"));
            }
        }
    }
    std::fs::write(dir.join("summary.csv"), summary)?;
    for agg in &result.aggregates {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &agg.mean)?;
        std::fs::write(dir.join(format!("mean_{}.csv", agg.method)), buf)?;
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &agg.std)?;
        std::fs::write(dir.join(format!("std_{}.csv", agg.method)), buf)?;
    }
    Ok(())
}

/// Recovered image and its quality against the ground truth.
#[derive(Debug, Clone)]
pub struct Recovery {
    /// Solver output clamped to `[0, 255]`.
    pub signal: Vector,
    /// `signal` rounded to 8 bits.
    pub pixels: Vec<u8>,
    /// PSNR of `pixels` against `θ*`; infinite for exact recovery.
    pub psnr: f64,
    pub trace: Vec<TraceRecord<f64>>,
}

pub fn psnr(truth: &Vector, pixels: &[u8]) -> f64 {
    let mse = truth
        .iter()
        .zip(pixels)
        .map(|(&t, &p)| (t - p as f64).powi(2))
        .sum::<f64>()
        / truth.dim().max(1) as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// Runs `method` on an image instance from `θ₀ = 0` and clamps the result
/// to the pixel range.
pub fn recover_image(inst: &Instance, method: Method, spec: &ExperimentSpec, seed: u64) -> Result<Recovery> {
    let obj = inst.objective()?;
    let cfg = spec.solver_config(seed);
    let state = run(&obj, method, &Vector::zeros(inst.d()), &cfg, Some(&inst.theta_star))?;
    let signal = state.theta.map(|x| x.clamp(0.0, 255.0));
    let pixels: Vec<u8> = signal.iter().map(|&x| x.round() as u8).collect();
    Ok(Recovery { psnr: psnr(&inst.theta_star, &pixels), signal, pixels, trace: state.trace })
}

/// Writes `recovered.vec`, `recovered.pgm` and a trace for a recovery.
pub fn write_recovery(rec: &Recovery, width: usize, height: usize, dir: &Path, label: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    save_vector(dir.join(format!("{label}.vec")), &rec.signal)?;
    GrayImage { width, height, pixels: rec.pixels.clone() }.save_pgm(&dir.join(format!("{label}.pgm")))?;
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, &rec.trace)?;
    std::fs::write(dir.join(format!("{label}_trace.csv")), buf)?;
    Ok(())
}
