use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use iobs::harness::{
    gen_image_instance, gen_instance, recover_image, run_bench, write_bench, write_recovery, ExperimentSpec,
    GrayImage, Instance, Prior,
};
use iobs::numerics::{format_real, save_vector};
use iobs::objectives::probe_constants;
use iobs::pruner::{
    iterative_prune_loop, one_shot_prune, write_report_csv, Activation, DenseLayer, PruneSchedule, TeacherData,
};
use iobs::solvers::{run, write_trace_csv, Method, StepSize};
use iobs::{Error, Matrix, Mlp, Vector};

#[derive(Parser)]
#[command(name = "iobs", version, about = "Sparse recovery and second-order pruning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem instance bundle.
    Gen(GenArgs),
    /// Run one solver on an instance bundle.
    Solve(SolveArgs),
    /// Run several methods over independent instances and aggregate traces.
    Bench(BenchArgs),
    /// Recover an image signal from Gaussian measurements.
    Recover(RecoverArgs),
    /// Prune a small network with the iterative prune-and-step loop.
    Prune(PruneArgs),
    /// Estimate curvature constants of an instance.
    Probe(ProbeArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "gaussian")]
    prior: Prior,
    #[arg(long, default_value_t = 128)]
    d: usize,
    /// Number of measurements; defaults to 2d.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 16)]
    kstar: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "topk-iobs")]
    method: Method,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 750)]
    iters: usize,
    /// `auto` or a positive learning rate (IHT only).
    #[arg(long, default_value = "auto")]
    eta: StepSize<f64>,
    #[arg(long, default_value_t = 0.0)]
    damp: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Mini-batch size for stoch-iobs; defaults to all samples.
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Where to write the final iterate.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment spec file (key=value lines); flags given here override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    prior: Option<Prior>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    kstar: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Comma-separated list of methods.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    eta: Option<StepSize<f64>>,
    #[arg(long)]
    damp: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    outdir: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    image: PathBuf,
    /// Comma-separated list of methods.
    #[arg(long, default_value = "iht,topk-iobs")]
    methods: String,
    #[arg(long, default_value_t = 4000)]
    iters: usize,
    /// Sparsity budget; defaults to twice the number of nonzero pixels.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    outdir: PathBuf,
}

#[derive(Args)]
struct PruneArgs {
    /// Model file to prune; it also serves as the teacher that labels data.
    #[arg(long, conflicts_with = "layers")]
    model: Option<PathBuf>,
    /// Generate a random relu network with these layer widths instead.
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    #[arg(long, default_value_t = 10)]
    rounds: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Weights kept per row, one value per layer (or one value for all).
    #[arg(long, value_delimiter = ',')]
    krow: Vec<usize>,
    #[arg(long, default_value_t = 128)]
    batch: usize,
    #[arg(long, default_value_t = 0.01)]
    damp_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Where to write the pruned model.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    k: usize,
    /// Random points sampled around theta_star, in addition to theta_star.
    #[arg(long, default_value_t = 4)]
    samples: usize,
    #[arg(long, default_value_t = 64)]
    directions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_methods(s: &str) -> Result<Vec<Method>, Error> {
    s.split(',').map(str::parse).collect()
}

fn write_trace(path: &Path, trace: &[iobs::solvers::TraceRecord<f64>]) -> Result<(), Error> {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, trace)?;
    std::fs::write(path, buf)?;
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<(), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let inst = match a.prior {
        Prior::Gaussian => {
            let spec = ExperimentSpec {
                d: a.d,
                n: a.n.unwrap_or(2 * a.d),
                k_star: a.kstar,
                k: a.kstar.max(1),
                noise: a.noise,
                ..ExperimentSpec::default()
            };
            gen_instance(&spec, a.seed, &mut rng)?
        }
        Prior::Image => {
            let path = a.image.ok_or_else(|| Error::InvalidConfig("--image is required for the image prior".into()))?;
            let img = GrayImage::load(&path)?;
            let d = img.width * img.height;
            gen_image_instance(&img, a.n.unwrap_or(2 * d), a.noise, a.seed, &mut rng)?
        }
    };
    inst.write_bundle(&a.out)?;
    println!("wrote {} (d={}, n={}, kstar={})", a.out.display(), inst.d(), inst.n(), inst.k_star());
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> Result<(), Error> {
    let inst = Instance::read_bundle(&a.data)?;
    let obj = inst.objective()?;
    let mut cfg = iobs::Config::new(a.k).with_iters(a.iters);
    cfg.eta = a.eta;
    cfg.damp = a.damp;
    cfg.stoch_lambda = a.lambda;
    cfg.batch_size = a.batch;
    cfg.tol = a.tol;
    cfg.seed = a.seed;
    let state = run(&obj, a.method, &Vector::zeros(inst.d()), &cfg, Some(&inst.theta_star))?;
    if let Some(path) = &a.trace {
        write_trace(path, &state.trace)?;
    }
    if let Some(path) = &a.out {
        save_vector(path, &state.theta)?;
    }
    let last = state.trace.last().expect("initial record");
    println!(
        "method={} iters={} loss={} dist_to_opt={}",
        a.method,
        state.t,
        format_real(last.loss),
        last.dist_to_opt.map(format_real).unwrap_or_default()
    );
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Error> {
    let mut spec = match &a.spec {
        Some(path) => ExperimentSpec::parse(&std::fs::read_to_string(path)?)?,
        None => ExperimentSpec::default(),
    };
    if let Some(v) = a.prior {
        spec.prior = v;
    }
    macro_rules! set {
        ($($field:ident <- $arg:expr),* $(,)?) => { $(if let Some(v) = $arg { spec.$field = v; })* };
    }
    set!(d <- a.d, n <- a.n, k_star <- a.kstar, k <- a.k, iters <- a.iters, eta <- a.eta, damp <- a.damp,
         lambda <- a.lambda, seed <- a.seed, runs <- a.runs, jobs <- a.jobs);
    if let Some(b) = a.batch {
        spec.batch = Some(b);
    }
    if let Some(m) = &a.methods {
        spec.methods = parse_methods(m)?;
    }
    if let Some(p) = a.image {
        spec.image_path = Some(p);
    }
    let image = match spec.prior {
        Prior::Image => {
            let path = spec.image_path.clone().ok_or_else(|| Error::InvalidConfig("image prior needs --image".into()))?;
            let img = GrayImage::load(&path)?;
            let d = img.width * img.height;
            if a.spec.is_none() {
                let base = ExperimentSpec::image(path, d, img.nonzero());
                spec.d = d;
                spec.n = a.n.unwrap_or(base.n);
                spec.k_star = base.k_star;
                spec.k = a.k.unwrap_or(base.k);
                spec.iters = a.iters.unwrap_or(base.iters);
            }
            Some(img)
        }
        Prior::Gaussian => None,
    };
    let result = run_bench(&spec, image.as_ref())?;
    write_bench(&result, &a.outdir)?;
    std::fs::write(a.outdir.join("spec.txt"), spec.to_text())?;
    for agg in &result.aggregates {
        let last = agg.mean.last().expect("nonempty");
        println!(
            "{}: runs={} mean_final_loss={} mean_final_dist={}",
            agg.method,
            agg.successes,
            format_real(last.loss),
            last.dist_to_opt.map(format_real).unwrap_or_default()
        );
    }
    Ok(())
}

fn cmd_recover(a: RecoverArgs) -> Result<(), Error> {
    let img = GrayImage::load(&a.image)?;
    let d = img.width * img.height;
    let mut spec = ExperimentSpec::image(a.image.clone(), d, img.nonzero());
    spec.iters = a.iters;
    if let Some(k) = a.k {
        spec.k = k;
    }
    spec.seed = a.seed;
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let inst = gen_image_instance(&img, spec.n, 0.0, a.seed, &mut rng)?;
    std::fs::create_dir_all(&a.outdir)?;
    img.save_pgm(&a.outdir.join("truth.pgm"))?;
    save_vector(a.outdir.join("truth.vec"), &inst.theta_star)?;
    for method in parse_methods(&a.methods)? {
        let rec = recover_image(&inst, method, &spec, a.seed)?;
        write_recovery(&rec, img.width, img.height, &a.outdir, method.name())?;
        println!("{method}: psnr={}", rec.psnr);
    }
    Ok(())
}

fn random_relu_net(widths: &[usize], rng: &mut ChaCha8Rng) -> Result<Mlp, Error> {
    if widths.len() < 2 {
        return Err(Error::InvalidConfig("--layers needs at least input and output widths".into()));
    }
    let last = widths.len() - 2;
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let scale = (1.0 / w[0] as f64).sqrt();
            let weights = Matrix::from_fn(w[1], w[0], |_, _| { let z: f64 = StandardNormal.sample(rng); scale * z });
            let activation = if l == last { Activation::Identity } else { Activation::Relu };
            DenseLayer { weights, activation }
        })
        .collect();
    Mlp::new(layers)
}

fn cmd_prune(a: PruneArgs) -> Result<(), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let model = match (&a.model, &a.layers) {
        (Some(path), _) => Mlp::from_text(&std::fs::read_to_string(path)?)?,
        (None, Some(widths)) => random_relu_net(widths, &mut rng)?,
        (None, None) => return Err(Error::InvalidConfig("pass --model FILE or --layers W0,W1,...".into())),
    };
    let k_row = match a.krow.len() {
        0 => model.layers.iter().map(|l| l.weights.cols() / 2).collect(),
        1 => vec![a.krow[0]; model.layers.len()],
        _ => a.krow.clone(),
    };
    let mut schedule = PruneSchedule::new(a.rounds, a.lr, k_row, a.batch);
    schedule.damp_fraction = a.damp_frac;
    let mut data = TeacherData { teacher: model.clone() };
    let mut one_shot_rng = rng.clone();
    let one_shot = one_shot_prune(&model, &mut data, &schedule, &mut one_shot_rng)?;
    let outcome = iterative_prune_loop(&model, &mut data, &schedule, &mut rng)?;

    let mut test_rng = ChaCha8Rng::seed_from_u64(a.seed ^ 0x7e57);
    let (x, y) = iobs::pruner::DataSource::sample(&mut data, &mut test_rng, 4 * a.batch)?;
    println!("one-shot test_loss={}", format_real(one_shot.model.loss(&x, &y)?));
    println!(
        "iterative test_loss={} sparsity={:.4}",
        format_real(outcome.model.loss(&x, &y)?),
        outcome.model.sparsity()
    );
    if let Some(path) = &a.report {
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &outcome.reports)?;
        std::fs::write(path, buf)?;
    }
    if let Some(path) = &a.out {
        std::fs::write(path, outcome.model.to_text())?;
    }
    Ok(())
}

fn cmd_probe(a: ProbeArgs) -> Result<(), Error> {
    let inst = Instance::read_bundle(&a.data)?;
    let obj = inst.objective()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut samples = vec![inst.theta_star.clone()];
    for _ in 0..a.samples {
        let noise = Vector::from_fn(inst.d(), |_| StandardNormal.sample(&mut rng));
        samples.push(inst.theta_star.add(&noise));
    }
    let p = probe_constants(&obj, &samples, a.k, a.directions, &mut rng)?;
    println!("mu={}\nL={}\nM={}\nkstar={}", format_real(p.mu), format_real(p.l), format_real(p.m), inst.k_star());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Recover(a) => cmd_recover(a),
        Command::Prune(a) => cmd_prune(a),
        Command::Probe(a) => cmd_probe(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
