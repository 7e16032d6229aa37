use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rbfpdm::cli::{self, EvaluateArgs, GenDataArgs, ReconstructArgs};
use rbfpdm::io::{self, ReportRow, RunConfig};
use rbfpdm::optimizer::{CohortState, Optimizer};
use rbfpdm::Kernel;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rbfpdm"))
}

fn gen(dir: &Path, count: usize, dims: usize) -> Vec<PathBuf> {
    cli::gen_data(&GenDataArgs {
        count,
        x_range: vec![1.0, 2.0],
        yz: 0.5,
        dims,
        seed: 0,
        out: dir.join("data"),
    })
    .unwrap()
}

fn write_config(dir: &Path, epochs: usize, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        "[data]\ngrid_dir = \"data\"\noutput = \"out\"\n{extra}\n\
         [optimizer]\nparticles = 24\nepochs = {epochs}\npre_opt_epochs = 3\nseed = 4\n\n\
         [optimizer.loss]\nalpha = 0.01\nerror_pull = 1.0\nband_samples = 300\n"
    );
    fs::write(&path, text).unwrap();
    path
}

fn particle_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "particles"))
        .collect();
    v.sort();
    v
}

#[test]
fn gen_data_writes_grids_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let paths = gen(dir.path(), 5, 24);
    assert_eq!(paths.len(), 5);
    assert!(paths.iter().all(|p| p.is_file()));
    let manifest = fs::read_to_string(dir.path().join("data/manifest.csv")).unwrap();
    assert!(manifest.starts_with("file,a,b,c\nellipsoid_000.sdfgrid,1.0,0.5,0.5\n"), "{manifest}");
    assert_eq!(manifest.lines().count(), 6);
}

#[test]
fn optimize_writes_one_file_per_shape() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 20, 24);
    let config = write_config(dir.path(), 2, "checkpoint_every = 1");
    let status = bin().arg("optimize").arg(&config).env("RBFPDM_THREADS", "1").status().unwrap();
    assert!(status.success());
    let out = dir.path().join("out");
    let files = particle_files(&out);
    assert_eq!(files.len(), 20);
    for f in &files {
        let text = fs::read_to_string(f).unwrap();
        assert_eq!(text.lines().count(), 24);
    }
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);
    assert_eq!(io::read_manifest(out.join("manifest.csv")).unwrap().len(), 20);
    assert_eq!(particle_files(&out.join("checkpoints/epoch_0002")).len(), 20);
    RunConfig::parse(&fs::read_to_string(out.join("config.toml")).unwrap()).unwrap();
}

#[test]
fn zero_epochs_writes_the_broadcast() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 3, 24);
    let config = RunConfig::load(write_config(dir.path(), 0, "")).unwrap();
    cli::optimize(&config).unwrap();

    let grids = cli::load_grids(&config.data.grids).unwrap();
    let opt = Optimizer::new(&grids, config.optimizer.clone()).unwrap();
    let reference = opt.pre_optimize(&opt.initialize().unwrap()).unwrap();
    let expected = CohortState::broadcast(&reference, 3).unwrap();
    for (n, f) in particle_files(&config.data.output).iter().enumerate() {
        assert_eq!(io::load_particles(f, n).unwrap(), expected.shapes[n]);
    }
}

#[test]
fn corrupt_grid_fails_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let grids = gen(dir.path(), 3, 24);
    fs::write(&grids[1], b"not a grid").unwrap();
    let config = write_config(dir.path(), 1, "");
    let out = bin().arg("optimize").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("ellipsoid_001.sdfgrid"), "{stderr}");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(bin().output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["gen-data"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["frobnicate"]).output().unwrap().status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["gen-data", "--count", "2", "--dims", "8", "--out"])
        .arg(dir.path())
        .env("RBFPDM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_exits_with_one() {
    let out = bin().args(["optimize", "/nonexistent/run.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

fn evaluate_args(particles: Vec<PathBuf>, grids: Vec<PathBuf>, out: PathBuf) -> EvaluateArgs {
    EvaluateArgs {
        model: None,
        particles,
        grids,
        out,
        modes: 10,
        samples: 50,
        resolution: 24,
        seed: 0,
        kernel: Kernel::Biharmonic,
        offset: None,
    }
}

#[test]
fn evaluate_caps_modes_on_small_cohorts() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), 5, 24);
    let config = RunConfig::load(write_config(dir.path(), 3, "")).unwrap();
    cli::optimize(&config).unwrap();
    let csv = dir.path().join("metrics.csv");
    let status = bin()
        .args(["evaluate", "--resolution", "24", "--samples", "50", "--model"])
        .arg(config.data.output.join("manifest.csv"))
        .arg("--out")
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("metric,mode_count,value\nwarning,4,modes_capped\n"), "{text}");
    for metric in ["compactness", "specificity", "generalization"] {
        assert!(text.contains(&format!("{metric},4,")), "{metric} missing");
        assert!(!text.contains(&format!("{metric},5,")));
    }
    assert_eq!(text.lines().filter(|l| l.starts_with("distance,")).count(), 6);
}

#[test]
fn identical_particle_files_report_zero_variance() {
    let dir = tempfile::tempdir().unwrap();
    let grids = gen(dir.path(), 2, 24);
    let config = RunConfig::load(write_config(dir.path(), 0, "")).unwrap();
    cli::optimize(&config).unwrap();
    let file = config.data.output.join("shape_000.particles");
    let report = cli::evaluate(&evaluate_args(
        vec![file.clone(), file.clone(), file],
        vec![grids[0].clone(), grids[0].clone(), grids[0].clone()],
        dir.path().join("m.csv"),
    ))
    .unwrap();
    assert!(report.rows.contains(&ReportRow::Error { modes: 0, message: "zero_variance" }), "{:?}", report.rows);
    let d = &report.distances;
    assert_eq!(d.len(), 3);
    assert!(d.iter().all(|x| x.distance == d[0].distance));
}

#[test]
fn mismatched_particle_counts_fail() {
    let dir = tempfile::tempdir().unwrap();
    let grids = gen(dir.path(), 2, 24);
    let a = dir.path().join("a.particles");
    let b = dir.path().join("b.particles");
    let row = |x: f64| format!("{x} 0 0 1 0 0\n");
    fs::write(&a, (0..5).map(|i| row(i as f64)).collect::<String>()).unwrap();
    fs::write(&b, (0..6).map(|i| row(i as f64)).collect::<String>()).unwrap();
    let out = bin()
        .arg("evaluate")
        .arg("--particles")
        .args([&a, &b])
        .arg("--grids")
        .args(&grids)
        .arg("--out")
        .arg(dir.path().join("m.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expected 5"));
}

#[test]
fn reconstruct_writes_an_obj() {
    let dir = tempfile::tempdir().unwrap();
    let grids = gen(dir.path(), 2, 24);
    let config = RunConfig::load(write_config(dir.path(), 0, "")).unwrap();
    cli::optimize(&config).unwrap();
    let particles = config.data.output.join("shape_000.particles");
    for grid in [Some(grids[0].clone()), None] {
        let out = dir.path().join("shape.obj");
        let mesh = cli::reconstruct(&ReconstructArgs {
            particles: particles.clone(),
            out: out.clone(),
            grid,
            resolution: 24,
            kernel: Kernel::Biharmonic,
            offset: None,
        })
        .unwrap();
        assert!(!mesh.triangles.is_empty());
        let text = fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), mesh.vertices.len());
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), mesh.triangles.len());
    }
}
