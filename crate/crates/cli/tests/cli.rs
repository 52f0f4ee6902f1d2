use basisrisk_cli::output::{sha256_hex, RunManifest};
use std::fs;
use std::path::Path;
use std::process::Command;

struct Run {
    code: i32,
    stderr: String,
}

fn basisrisk(args: &[&str], out_dir: &Path) -> Run {
    let output = Command::new(env!("CARGO_BIN_EXE_basisrisk"))
        .args(args)
        .env_remove(basisrisk_cli::OUT_DIR_ENV)
        .arg("--out-dir")
        .arg(out_dir)
        .output()
        .expect("binary runs");
    Run {
        code: output.status.code().expect("exit code"),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

fn manifest(dir: &Path, command: &str) -> RunManifest {
    let text = fs::read_to_string(dir.join(format!("{command}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn checksums(m: &RunManifest) -> Vec<(String, String)> {
    m.outputs.iter().map(|o| (o.path.clone(), o.sha256.clone())).collect()
}

#[test]
fn simulate_writes_sample_and_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = ["simulate", "--family", "gumbel", "--tau", "0.5", "--n", "100000", "--seed", "7"];
    assert_eq!(basisrisk(&args, &a).code, 0);
    assert_eq!(basisrisk(&args, &b).code, 0);

    let bytes = fs::read(a.join("sample.csv")).unwrap();
    let text = String::from_utf8(bytes.clone()).unwrap();
    assert!(text.starts_with("x,y\n"));
    assert_eq!(text.lines().count(), 100_001);

    let m = manifest(&a, "simulate");
    assert_eq!(m.command, "simulate");
    assert_eq!(m.seed, Some(7));
    assert_eq!(m.config["family"], "gumbel");
    assert_eq!(m.outputs[0].sha256, sha256_hex(&bytes));
    assert_eq!(checksums(&m), checksums(&manifest(&b, "simulate")));
}

#[test]
fn simulate_rejects_out_of_range_tau() {
    let tmp = tempfile::tempdir().unwrap();
    let run = basisrisk(&["simulate", "--family", "frank", "--tau", "1.2"], tmp.path());
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("`tau`"), "{}", run.stderr);
    assert!(!tmp.path().join("sample.csv").exists());
}

#[test]
fn usage_errors_are_validation_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(basisrisk(&["simulate", "--tau", "abc"], tmp.path()).code, 1);
    assert_eq!(basisrisk(&["simulate", "--family", "clayton-ish"], tmp.path()).code, 1);
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sim.toml");
    fs::write(&cfg, "family = \"clayton_survival\"\ntau = 0.5\nn = 5000\nseed = 3\n").unwrap();
    let out = tmp.path().join("out");
    let run = basisrisk(&["simulate", "--config", cfg.to_str().unwrap(), "--n", "2000"], &out);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let m = manifest(&out, "simulate");
    assert_eq!(m.config["n"], 2000);
    assert_eq!(m.config["tau"], 0.5);
    assert_eq!(m.config["family"], "clayton_survival");
    assert_eq!(m.seed, Some(3));
    let rows = fs::read_to_string(out.join("sample.csv")).unwrap().lines().count();
    assert_eq!(rows, 2001);
}

#[test]
fn out_dir_defaults_to_env_var() {
    let tmp = tempfile::tempdir().unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_basisrisk"))
        .args(["gaussian-check", "--n", "5000"])
        .env(basisrisk_cli::OUT_DIR_ENV, tmp.path())
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(tmp.path().join("gaussian_check.csv").exists());
    assert!(tmp.path().join("gaussian-check.manifest.json").exists());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let run = basisrisk(&["gaussian-check", "--n", "5000"], &blocker.join("sub"));
    assert_eq!(run.code, 3, "{}", run.stderr);
}

#[test]
fn figures_fig1_tables_and_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let run = basisrisk(&["figures", "fig1", "--n", "20000", "--seed", "5", "--quantiles", "0.5,0.9"], &a);
    assert_eq!(run.code, 0, "{}", run.stderr);

    let m = manifest(&a, "figures");
    let names: Vec<&str> = m.outputs.iter().map(|o| o.path.as_str()).collect();
    assert_eq!(names, ["fig1_mean.csv", "fig1_square.csv"]);
    let text = fs::read_to_string(a.join("fig1_mean.csv")).unwrap();
    let mut series: Vec<(String, String)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].to_string(), f[2].to_string())
        })
        .collect();
    series.sort();
    series.dedup();
    assert_eq!(series.len(), 9);

    // Replaying the manifest reproduces the tables byte for byte.
    let manifest_path = a.join("figures.manifest.json");
    let run = basisrisk(&["figures", "--config", manifest_path.to_str().unwrap()], &b);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(checksums(&m), checksums(&manifest(&b, "figures")));
}

#[test]
fn figures_rejects_unknown_id() {
    let tmp = tempfile::tempdir().unwrap();
    let run = basisrisk(&["figures", "fig7"], tmp.path());
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("fig1..fig4"), "{}", run.stderr);
}

#[test]
fn figures_ratio_tables_cover_benchmarks() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["figures", "fig2", "--shape", "1.4", "--n", "20000", "--quantiles", "0.5,0.8"];
    let run = basisrisk(&args, tmp.path());
    assert_eq!(run.code, 0, "{}", run.stderr);
    let text = fs::read_to_string(tmp.path().join("fig2_mean.csv")).unwrap();
    for bench in ["B1", "B2", "B3"] {
        assert!(text.contains(&format!("clayton_survival/{bench}")), "{bench} missing");
    }
}

#[test]
fn figures_ratio_needs_finite_payout_variance() {
    let tmp = tempfile::tempdir().unwrap();
    let run = basisrisk(&["figures", "fig3", "--n", "5000"], tmp.path());
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("infinite"), "{}", run.stderr);
}

fn write_column(path: &Path, name: &str, values: &[f64]) {
    let mut text = format!("{name}\n");
    for v in values {
        text.push_str(&format!("{v}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn fit_gpd_on_exponential_column_gives_zero_index() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("exp.csv");
    // Exponential quantiles at mid-ranks: a noiseless exponential sample.
    let n = 20_000;
    let values: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
    write_column(&input, "loss", &values);
    let out = tmp.path().join("out");
    let run = basisrisk(
        &["fit-gpd", "--input", input.to_str().unwrap(), "--column", "loss", "--level", "0.8"],
        &out,
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let fit: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("gpd_fit.json")).unwrap()).unwrap();
    assert!(fit["gamma"].as_f64().unwrap().abs() < 0.05, "{fit}");
    assert!((fit["sigma"].as_f64().unwrap() - 1.0).abs() < 0.05, "{fit}");
    let qq = fs::read_to_string(out.join("gpd_qq.csv")).unwrap();
    assert!(qq.starts_with("rank,theoretical,empirical\n"));
    assert_eq!(qq.lines().count() as u64, fit["n_excess"].as_u64().unwrap() + 1);
}

#[test]
fn fit_gpd_with_too_few_excesses_fails_explicitly() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("small.csv");
    let values: Vec<f64> = (1..=50).map(f64::from).collect();
    write_column(&input, "damage_usd", &values);
    let run = basisrisk(&["fit-gpd", "--input", input.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("excess"), "{}", run.stderr);
}

#[test]
fn floods_small_file_fold_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("events.csv");
    fs::write(
        &input,
        "country,year,affected,damage_usd\n\
         A,2000,10,100\nB,2001,,200\nA,2002,30,150\nC,2003,5,900\nB,2004,12,300\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let run = basisrisk(
        &["floods", "--input", input.to_str().unwrap(), "--k", "3", "--min-leaf", "1"],
        &out,
    );
    assert_eq!(run.code, 0, "{}", run.stderr);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("floods_summary.json")).unwrap()).unwrap();
    let mut sizes: Vec<u64> = summary["fold_sizes"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    sizes.sort_unstable();
    assert_eq!(sizes, [1, 2, 2]);
    assert!(summary["damage_tail"].is_null());
    let preds = fs::read_to_string(out.join("cv_predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 6);
}

#[test]
fn floods_missing_column_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("events.csv");
    fs::write(&input, "country,year,damage_usd\nA,2000,100\n").unwrap();
    let run = basisrisk(&["floods", "--input", input.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("`affected`"), "{}", run.stderr);
}

#[test]
fn floods_synthetic_run_has_ten_deciles() {
    let tmp = tempfile::tempdir().unwrap();
    let run = basisrisk(&["floods", "--synthetic", "--seed", "2"], tmp.path());
    assert_eq!(run.code, 0, "{}", run.stderr);
    let deciles = fs::read_to_string(tmp.path().join("rmse_deciles.csv")).unwrap();
    assert_eq!(deciles.lines().count(), 11);
    assert!(tmp.path().join("synthetic_events.csv").exists());
}

#[test]
fn floods_without_data_source_fails() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(basisrisk(&["floods"], tmp.path()).code, 1);
}

#[test]
fn gaussian_check_default_passes_and_degenerate_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let run = basisrisk(&["gaussian-check"], &a);
    assert_eq!(run.code, 0, "{}", run.stderr);

    let run = basisrisk(&["gaussian-check", "--rho", "1", "--mu-x", "2", "--mu-y", "2", "--n", "20000"], &b);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let text = fs::read_to_string(b.join("gaussian_check.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let exact = header.iter().position(|h| *h == "exact").unwrap();
    for line in text.lines().skip(1) {
        assert_eq!(line.split(',').nth(exact).unwrap().parse::<f64>().unwrap(), 0.0, "{line}");
    }
}

#[test]
fn gaussian_check_rejects_bad_correlation() {
    let tmp = tempfile::tempdir().unwrap();
    let run = basisrisk(&["gaussian-check", "--rho", "1.5"], tmp.path());
    assert_eq!(run.code, 1);
}
