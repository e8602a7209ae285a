mod common;

use std::path::PathBuf;

use common::rng;
use iobs::harness::{
    gen_image_instance, gen_instance, instance_for_run, recover_image, run_bench, write_bench, ExperimentSpec,
    GrayImage, Instance,
};
use iobs::objectives::Objective;
use iobs::solvers::{parse_trace_csv, Method};
use iobs::Error;

fn bundled_digit() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/digit.pgm")
}

#[test]
fn dense_signal_when_every_entry_is_kept() {
    let spec = ExperimentSpec { d: 12, n: 24, k_star: 12, k: 12, ..Default::default() };
    let inst = gen_instance(&spec, 0, &mut rng(0)).unwrap();
    assert_eq!(inst.k_star(), 12);
}

#[test]
fn generated_measurements_are_consistent() {
    let spec = ExperimentSpec::default();
    for seed in 0..10 {
        let inst = gen_instance(&spec, seed, &mut rng(seed)).unwrap();
        assert_eq!(inst.theta_star.nnz(), spec.k_star);
        let g = inst.objective().unwrap().gradient(&inst.theta_star).unwrap();
        assert!(g.norm() <= 1e-10 * inst.x.frobenius_norm());
        // Entries of X have variance 1/n.
        let var = inst.x.as_slice().iter().map(|v| v * v).sum::<f64>() / (inst.n() * inst.d()) as f64;
        assert!((var * inst.n() as f64 - 1.0).abs() < 0.05);
    }
}

#[test]
fn bundled_digit_sets_the_image_budget() {
    let img = GrayImage::load(&bundled_digit()).unwrap();
    assert_eq!((img.width, img.height), (28, 28));
    assert_eq!(img.nonzero(), 150);
    let spec = ExperimentSpec::image(bundled_digit(), img.width * img.height, img.nonzero());
    assert_eq!((spec.k_star, spec.k, spec.n, spec.iters), (150, 300, 1568, 4000));
    spec.validate().unwrap();
}

#[test]
fn image_edge_cases() {
    let blank = GrayImage { width: 2, height: 2, pixels: vec![0; 4] };
    assert!(matches!(gen_image_instance(&blank, 8, 0.0, 0, &mut rng(0)), Err(Error::EmptySignal)));
    let dot = GrayImage { width: 1, height: 1, pixels: vec![255] };
    let inst = gen_image_instance(&dot, 2, 0.0, 0, &mut rng(0)).unwrap();
    assert_eq!(inst.theta_star.as_slice(), &[255.0]);
    assert!(matches!(GrayImage::load(&PathBuf::from("/nonexistent.pgm")), Err(Error::ImageLoad(_))));
}

#[test]
fn image_round_trips_through_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let img = GrayImage::load(&bundled_digit()).unwrap();
    let path = dir.path().join("copy.pgm");
    img.save_pgm(&path).unwrap();
    assert_eq!(GrayImage::load(&path).unwrap(), img);
}

fn image_spec(iters: usize) -> (GrayImage, ExperimentSpec) {
    let img = GrayImage::load(&bundled_digit()).unwrap();
    let mut spec = ExperimentSpec::image(bundled_digit(), 784, img.nonzero());
    spec.iters = iters;
    (img, spec)
}

#[test]
fn image_recovery_examples() {
    let (img, spec) = image_spec(1);
    let inst = instance_for_run(&spec, Some(&img), 0).unwrap();
    let rec = recover_image(&inst, Method::TopkIobs, &spec, 0).unwrap();
    assert!(rec.psnr.is_infinite());
    assert_eq!(rec.pixels, img.pixels);

    let zero = ExperimentSpec { iters: 0, ..spec };
    let rec = recover_image(&inst, Method::Iht, &zero, 0).unwrap();
    assert!(rec.pixels.iter().all(|&p| p == 0));
}

#[test]
fn iht_never_beats_top_k_iobs_at_matched_iterations() {
    // Matched budgets of 1 and 25 iterations over 20 measurement draws.
    for iters in [1, 25] {
        let (img, spec) = image_spec(iters);
        let mut wins = 0;
        for run in 0..20 {
            let inst = instance_for_run(&spec, Some(&img), run).unwrap();
            let iht = recover_image(&inst, Method::Iht, &spec, 0).unwrap().psnr;
            let topk = recover_image(&inst, Method::TopkIobs, &spec, 0).unwrap().psnr;
            wins += (iht <= topk) as usize;
        }
        assert!(wins >= 18, "{wins}/20 at {iters} iterations");
    }
}

#[test]
fn bench_files_are_reproducible_and_parse_back() {
    let spec = ExperimentSpec { d: 24, n: 48, k_star: 4, k: 8, iters: 30, runs: 3, jobs: 2, ..Default::default() };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_bench(&run_bench(&spec, None).unwrap(), a.path()).unwrap();
    write_bench(&run_bench(&spec, None).unwrap(), b.path()).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 2 * 3 + 4);
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(&name)).unwrap(), "{name:?}");
        let name = name.to_string_lossy().into_owned();
        if name.starts_with("run_") {
            let records = parse_trace_csv(std::str::from_utf8(&x).unwrap()).unwrap();
            assert_eq!(records.len(), 31);
        }
    }
}

#[test]
fn gaussian_bench_ordering() {
    let spec = ExperimentSpec { jobs: 4, ..Default::default() };
    let res = run_bench(&spec, None).unwrap();
    let iht = res.aggregate(Method::Iht).unwrap();
    let topk = res.aggregate(Method::TopkIobs).unwrap();
    assert_eq!((iht.successes, topk.successes), (20, 20));
    assert!(topk.mean[1].dist_to_opt.unwrap() <= 1e-6);
    for t in 1..=spec.iters {
        assert!(iht.mean[t].dist_to_opt.unwrap() > topk.mean[t].dist_to_opt.unwrap(), "t={t}");
    }
    // Decreasing while above the roundoff floor.
    for w in iht.mean.windows(2).filter(|w| w[0].dist_to_opt.unwrap() > 1e-12) {
        assert!(w[1].dist_to_opt.unwrap() < w[0].dist_to_opt.unwrap());
    }
}

#[test]
fn bundle_survives_disk() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen_instance(&ExperimentSpec::default(), 3, &mut rng(3)).unwrap();
    inst.write_bundle(dir.path()).unwrap();
    assert_eq!(Instance::read_bundle(dir.path()).unwrap(), inst);
}
