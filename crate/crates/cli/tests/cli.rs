use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use partsel_cli::report::{reports_from_csv, RunReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_partsel"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn report(args: &[&str]) -> RunReport {
    serde_json::from_str(&stdout(&run(args))).unwrap()
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for (p, workers) in [(&a, "1"), (&b, "3")] {
        let o = run(&["generate", "--users", "1000", "--seed", "7", "--workers", workers, "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert!(!a.is_empty());
    assert!(a == b);
    assert_eq!(a.iter().filter(|&&c| c == b'\n').count(), 1000);
}

#[test]
fn generate_zero_users_writes_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.txt");
    let o = run(&["generate", "--users", "0", "--out", p.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read(&p).unwrap().len(), 0);
}

#[test]
fn generate_to_unwritable_path_fails() {
    let o = run(&["generate", "--users", "3", "--out", "/nonexistent-dir/x.txt"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn empty_dataset_releases_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.txt");
    fs::write(&p, "").unwrap();
    let r = report(&["run", "--mech", "wgauss", "--data", p.to_str().unwrap()]);
    assert_eq!(r.partitions_released, 0);
    assert_eq!(r.num_users, 0);
}

#[test]
fn run_writes_report_and_released_items() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let rel = dir.path().join("released.txt");
    let data = fixture("tiny.txt");
    let o = run(&[
        "run", "--mech", "sips", "--rho", "5", "--delta", "1e-3", "--delta0", "5",
        "--data", data.to_str().unwrap(),
        "--out", out.to_str().unwrap(), "--released", rel.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: RunReport = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let released = fs::read_to_string(&rel).unwrap();
    assert_eq!(released.lines().count(), r.partitions_released);
    assert_eq!(r.per_iteration_counts.iter().sum::<usize>(), r.partitions_released);
    assert!(r.partitions_released > 0);
    let corpus = fs::read_to_string(&data).unwrap();
    let vocab: Vec<&str> = corpus.split_whitespace().collect();
    assert!(released.lines().all(|w| vocab.contains(&w)));
    assert_eq!((r.rho, r.delta, r.delta0, r.iterations, r.engine_stages), (5.0, 1e-3, 5, 3, 8));
}

#[test]
fn defaults_are_echoed() {
    let data = fixture("tiny.txt");
    let r = report(&["run", "--mech", "wgauss", "--data", data.to_str().unwrap(), "--workers", "2"]);
    assert_eq!((r.rho, r.delta, r.delta0, r.iterations), (0.1, 1e-5, 100, 3));
    assert_eq!(r.ratio, 1.0 / 3.0);
    assert_eq!(r.seed, partsel_core::DEFAULT_SEED);
    assert_eq!(r.workers, 2);
    assert_eq!(r.epsilon, None);
}

#[test]
fn reports_reproduce_from_their_parameters() {
    let data = fixture("tiny.txt");
    let d = data.to_str().unwrap();
    let first = report(&["run", "--mech", "sips", "--entropy", "--rho", "3", "--delta", "1e-3", "--delta0", "4", "--data", d]);
    let again = report(&[
        "run", "--mech", &first.mechanism, "--data", d,
        "--rho", &first.rho.to_string(), "--delta", &first.delta.to_string(),
        "--delta0", &first.delta0.to_string(), "--iters", &first.iterations.to_string(),
        "--ratio", &first.ratio.to_string(), "--seed", &first.seed.to_string(),
        "--workers", &first.workers.to_string(),
    ]);
    assert_eq!(again.partitions_released, first.partitions_released);
    assert_eq!(again.per_iteration_counts, first.per_iteration_counts);
}

#[test]
fn gw_reports_implied_zcdp() {
    let data = fixture("tiny.txt");
    let r = report(&["run", "--mech", "gw", "--eps", "1.7", "--delta-dp", "8.1142e-5", "--data", data.to_str().unwrap()]);
    assert_eq!((r.epsilon, r.delta_dp), (Some(1.7), Some(8.1142e-5)));
    assert_eq!(r.delta, 1e-5);
    assert!((r.rho - 0.1).abs() < 0.005, "implied rho {}", r.rho);
}

#[test]
fn exit_codes() {
    let data = fixture("tiny.txt");
    let d = data.to_str().unwrap();
    let code = |args: &[&str]| run(args).status.code();
    assert_eq!(code(&["run", "--mech", "nope", "--data", d]), Some(2));
    assert_eq!(code(&["run", "--mech", "gw", "--rho", "0.1", "--data", d]), Some(2));
    assert_eq!(code(&["run", "--mech", "sips", "--eps", "1", "--data", d]), Some(2));
    assert_eq!(code(&["run", "--mech", "sips", "--rho", "-1", "--data", d]), Some(2));
    assert_eq!(code(&["run", "--mech", "dpsu-iter", "--data", d]), Some(2));
    assert_eq!(code(&["run", "--mech", "dpsu-iter", "--experimental", "--data", d]), Some(0));
    assert_eq!(code(&["run", "--mech", "wgauss", "--data", "/nonexistent/file"]), Some(3));
    assert_eq!(code(&["convert", "--rho", "0.1", "--delta-cdp", "1e-5", "--delta-dp", "1e-6"]), Some(2));
    assert_eq!(code(&["sweep", "--mech", "sips", "--data", d, "--axis", "ratio", "--axis", "delta0", "--values", "1"]), Some(2));
    assert_eq!(code(&["sweep", "--mech", "sips", "--data", d, "--ratio", "0.5", "--axis", "ratio", "--values", "1"]), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,a\n2\n").unwrap();
    let o = run(&["run", "--mech", "wgauss", "--format", "csv", "--data", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.csv:2:"));
}

#[test]
fn csv_input_with_header() {
    let data = fixture("tiny.csv");
    let r = report(&["run", "--mech", "wgauss", "--format", "csv-header", "--data", data.to_str().unwrap()]);
    assert_eq!(r.num_users, 3);
}

#[test]
fn convert_prints_table_row() {
    let text = stdout(&run(&["convert", "--rho", "0.001", "--delta-cdp", "1e-5", "--eps", "0.14"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rho\tdelta_cdp\tepsilon\tdelta_dp\talpha");
    let cols: Vec<&str> = lines[1].split('\t').collect();
    assert_eq!(cols[..3], ["0.001", "1.00e-5", "0.14"]);
    let delta_dp: f64 = cols[3].parse().unwrap();
    assert!((delta_dp - 5.00e-5).abs() / 5.00e-5 < 0.01);
    let alpha: f64 = cols[4].parse().unwrap();
    assert!((alpha - 77.033).abs() / 77.033 < 0.02);

    let json = stdout(&run(&["convert", "--rho", "0.2", "--delta-cdp", "1", "--eps", "3", "--json"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["delta_dp"], 1.0);
}

#[test]
fn sweep_emits_one_row_per_value_and_seed() {
    let data = fixture("tiny.txt");
    let text = stdout(&run(&[
        "sweep", "--mech", "sips", "--rho", "2", "--data", data.to_str().unwrap(),
        "--axis", "ratio", "--values", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0", "--reps", "5",
    ]));
    let rows = reports_from_csv(&text).unwrap();
    assert_eq!(rows.len(), 50);
    assert_eq!(rows[0].ratio, 0.1);
    assert_eq!(rows[49].ratio, 1.0);
    let seeds: Vec<u64> = rows[..5].iter().map(|r| r.seed).collect();
    let base = partsel_core::DEFAULT_SEED;
    assert_eq!(seeds, (0..5).map(|i| base + i).collect::<Vec<_>>());
}

#[test]
fn sweep_over_prefix_and_gw_axis() {
    let data = fixture("tiny.txt");
    let d = data.to_str().unwrap();
    let rows = reports_from_csv(&stdout(&run(&["sweep", "--mech", "wgauss", "--data", d, "--axis", "users", "--values", "10,30"]))).unwrap();
    assert_eq!(rows.iter().map(|r| r.num_users).collect::<Vec<_>>(), vec![10, 30]);
    let rows = reports_from_csv(&stdout(&run(&["sweep", "--mech", "gw", "--data", d, "--axis", "eps", "--values", "1,2"]))).unwrap();
    assert_eq!(rows.iter().map(|r| r.epsilon).collect::<Vec<_>>(), vec![Some(1.0), Some(2.0)]);
    assert!(rows[1].rho > rows[0].rho);
    assert_eq!(run(&["sweep", "--mech", "gw", "--data", d, "--axis", "rho", "--values", "1"]).status.code(), Some(2));
}

#[test]
fn even_split_is_worse_than_geometric() {
    let rows = reports_from_csv(&stdout(&run(&[
        "sweep", "--mech", "sips", "--synthetic", "30000", "--axis", "ratio", "--values", "0.3333333333333333,1", "--reps", "5",
    ])))
    .unwrap();
    let mean = |r: f64| {
        let v: Vec<usize> = rows.iter().filter(|x| x.ratio == r).map(|x| x.partitions_released).collect();
        v.iter().sum::<usize>() as f64 / v.len() as f64
    };
    assert!(mean(1.0) < mean(1.0 / 3.0), "r=1: {}, r=1/3: {}", mean(1.0), mean(1.0 / 3.0));
}

/// Mean of floor(Pareto(10, a)): 10 + Σ_{n≥11} (10/n)^a.
fn floored_mean(shape: f64) -> f64 {
    let m = 1_000_000usize;
    let head: f64 = (11..m).map(|n| (10.0 / n as f64).powf(shape)).sum();
    10.0 + head + 10f64.powf(shape) * (m as f64).powf(1.0 - shape) / (shape - 1.0)
}

#[test]
fn generated_lengths_have_the_pareto_mean() {
    // Sample means are unreliable under shape 1.16; estimate the shape from
    // the fraction of users with at least 100 items and use the exact mean.
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.txt");
    assert!(run(&["generate", "--users", "100000", "--seed", "1", "--out", p.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(&p).unwrap();
    let lens: Vec<usize> = text.lines().map(|l| l.split(' ').count()).collect();
    assert_eq!(lens.len(), 100_000);
    assert!(lens.iter().all(|&l| l >= 10));
    let above = lens.iter().filter(|&&l| l >= 100).count() as f64 / lens.len() as f64;
    let shape = above.ln() / 0.1f64.ln();
    let mean = floored_mean(shape);
    assert!((mean - 72.5).abs() < 5.0, "shape {shape}, mean {mean}");
}
