//! End-to-end runs of the `amm-lab` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn amm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amm-lab"))
        .current_dir(dir)
        .env_remove("AMM_LAB_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = amm(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn manifest(bundle: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(bundle.join("manifest.json")).unwrap()).unwrap()
}

fn result(bundle: &Path, key: &str) -> f64 {
    manifest(bundle)["results"][key].as_f64().unwrap_or_else(|| panic!("result {key}"))
}

fn files(bundle: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![bundle.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(bundle).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

const SMALL: &[&str] = &["--sigma", "0.002", "--steps", "200", "--runs", "500", "--fee", "0.0003", "--seed", "7"];

fn simulate(dir: &Path, out: &str, extra: &[&str]) -> PathBuf {
    let mut args = vec!["simulate"];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", out]);
    ok(dir, &args);
    dir.join(out)
}

#[test]
fn same_seed_gives_byte_identical_bundles() {
    let tmp = TempDir::new().unwrap();
    let a = simulate(tmp.path(), "a", &[]);
    let b = simulate(tmp.path(), "b", &["--threads", "3"]);
    assert_eq!(files(&a), files(&b));
    let mut args: Vec<&str> = SMALL.to_vec();
    *args.last_mut().unwrap() = "8";
    args.splice(0..0, ["simulate", "--out", "c"]);
    ok(tmp.path(), &args);
    assert_ne!(files(&a), files(&tmp.path().join("c")));
}

#[test]
fn replay_reproduces_every_payload() {
    let tmp = TempDir::new().unwrap();
    let a = simulate(tmp.path(), "a", &[]);
    ok(tmp.path(), &["replay", "a/manifest.json", "--out", "r"]);
    assert_eq!(files(&a), files(&tmp.path().join("r")));
}

#[test]
fn config_file_reproduces_the_bundle() {
    let tmp = TempDir::new().unwrap();
    let a = simulate(tmp.path(), "a", &["--band-rule", "linearized"]);
    ok(tmp.path(), &["simulate", "--config", "a/config.txt", "--out", "b"]);
    assert_eq!(files(&a), files(&tmp.path().join("b")));
}

#[test]
fn csv_headers_match_the_schema() {
    let tmp = TempDir::new().unwrap();
    let a = simulate(tmp.path(), "a", &[]);
    let schema = String::from_utf8(ok(tmp.path(), &["schema"]).stdout).unwrap();
    let header = |p: &Path| fs::read_to_string(p).unwrap().lines().next().unwrap().to_string();
    let summary = header(&a.join("tables/summary.csv"));
    let runs = header(&a.join("tables/runs.csv"));
    assert_eq!(summary, "metric,mean,stderr,variance,skewness");
    assert_eq!(runs, "run,il,lvr,volume,fees,lvr_net,il_net,final_price,n_arb_events");
    ok(tmp.path(), &["sweep", "sigma", "--steps", "50", "--runs", "50", "--grid", "0.001,0.002", "--out", "s"]);
    let sweep = header(&tmp.path().join("s/tables/sweep.csv"));
    ok(tmp.path(), &["analytic", "il-pdf", "--points", "11", "--out", "p"]);
    let pdf = header(&tmp.path().join("p/tables/il_pdf.csv"));
    for h in [&summary, &runs, &sweep, &pdf] {
        assert!(schema.contains(h.as_str()), "{h} missing from schema");
    }
    let rows = fs::read_to_string(a.join("tables/runs.csv")).unwrap();
    assert_eq!(rows.lines().count(), 501);
    let cell = rows.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert!(cell.contains('e') && !cell.contains(' '), "{cell}");
}

#[test]
fn histograms_carry_edges_counts_and_moments() {
    let tmp = TempDir::new().unwrap();
    let a = simulate(tmp.path(), "a", &["--bins", "20"]);
    let h: Value = serde_json::from_str(&fs::read_to_string(a.join("histograms/lvr.json")).unwrap()).unwrap();
    assert_eq!(h["bin_edges"].as_array().unwrap().len(), 21);
    let counts: u64 = h["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(counts, 500);
    assert!(h["moments"]["skewness"].is_number());
}

#[test]
fn output_directory_precedence() {
    let tmp = TempDir::new().unwrap();
    let env_dir = tmp.path().join("from-env");
    let run = |extra: &[&str]| {
        let mut args = vec!["analytic", "lvr-mean"];
        args.extend_from_slice(extra);
        let out = Command::new(env!("CARGO_BIN_EXE_amm-lab"))
            .current_dir(tmp.path())
            .env("AMM_LAB_OUT", &env_dir)
            .args(&args)
            .output()
            .unwrap();
        assert!(out.status.success());
    };
    run(&[]);
    assert!(env_dir.join("manifest.json").exists());
    run(&["--out", "flag"]);
    assert!(tmp.path().join("flag/manifest.json").exists());
    ok(tmp.path(), &["analytic", "lvr-mean"]);
    assert!(tmp.path().join("amm-lab-out/analytic-lvr-mean/manifest.json").exists());
}

#[test]
fn analytic_means() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["analytic", "lvr-mean", "--out", "l"]);
    assert!((result(&tmp.path().join("l"), "lvr_mean") - 0.25).abs() < 1e-12);
    ok(tmp.path(), &["analytic", "il-mean", "--out", "i"]);
    let il = result(&tmp.path().join("i"), "il_mean");
    assert!((il / 0.25 - 1.0).abs() < 0.01, "{il}");
}

#[test]
fn il_pdf_table_integrates_to_one() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["analytic", "il-pdf", "--out", "p"]);
    let text = fs::read_to_string(tmp.path().join("p/tables/il_pdf.csv")).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (c[2], c[3])
        })
        .collect();
    let area: f64 = rows.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    assert!((area - 1.0).abs() < 1e-4, "{area}");
    assert!((result(&tmp.path().join("p"), "mass") - 1.0).abs() < 1e-4);
}

#[test]
fn first_passage_matches_gamblers_ruin() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["analytic", "first-passage", "--lower", "-10", "--upper", "10", "--out", "f"]);
    let f = tmp.path().join("f");
    let (mean, se) = (result(&f, "mean_steps"), result(&f, "stderr"));
    assert_eq!(result(&f, "gamblers_ruin_mean"), 100.0);
    assert!((mean - 100.0).abs() < 4.0 * se, "{mean} +- {se}");
}

#[test]
fn sample_and_clt_commands_write_their_outputs() {
    let tmp = TempDir::new().unwrap();
    let params = ["--sigma", "0.1", "--T", "1"];
    let mut args = vec!["analytic", "sample-il", "--n", "20000", "--out", "s"];
    args.extend_from_slice(&params);
    ok(tmp.path(), &args);
    let s = tmp.path().join("s");
    assert!(s.join("histograms/il.json").exists());
    assert!((result(&s, "mean") / result(&s, "analytic_mean") - 1.0).abs() < 0.05);
    let mut args = vec!["analytic", "clt-sum", "--n-per-sum", "100", "--repeats", "200", "--out", "c"];
    args.extend_from_slice(&params);
    ok(tmp.path(), &args);
    let sums = fs::read_to_string(tmp.path().join("c/tables/sums.csv")).unwrap();
    assert_eq!(sums.lines().next(), Some("repeat,sum"));
    assert_eq!(sums.lines().count(), 201);
}

#[test]
fn zero_volatility_gives_a_zero_bundle() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["simulate", "--sigma", "0", "--steps", "20", "--runs", "10", "--out", "z"]);
    let summary = fs::read_to_string(tmp.path().join("z/tables/summary.csv")).unwrap();
    for line in summary.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let mean: f64 = cells[1].parse().unwrap();
        let expected = if cells[0] == "final_price" { 100.0 } else { 0.0 };
        assert_eq!(mean, expected, "{line}");
    }
}

#[test]
fn presets_are_listed_and_parse() {
    let tmp = TempDir::new().unwrap();
    let list = String::from_utf8(ok(tmp.path(), &["presets"]).stdout).unwrap();
    for name in [
        "fig-bm-vs-gbm-short",
        "fig-lvril-nofee",
        "fig-lvr-longtime",
        "fig-sumil",
        "fig-rwbarrier",
        "fig-lvrfee",
        "fig-volvsfee",
        "fig-lvr-vs-fee",
    ] {
        assert!(list.contains(name), "{name}");
        let text = String::from_utf8(ok(tmp.path(), &["presets", name]).stdout).unwrap();
        assert!(text.starts_with("# amm-lab "));
    }
    ok(tmp.path(), &["simulate", "--preset", "fig-lvrfee", "--runs", "20", "--steps", "50", "--out", "p"]);
    assert_eq!(manifest(&tmp.path().join("p"))["config"]["fee"], "0.0002");
}

#[test]
fn errors_map_to_exit_codes() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("bad.txt"), "sigma = 0.001\nsteps = many\n").unwrap();
    let out = amm(tmp.path(), &["simulate", "--config", "bad.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("steps"), "{err}");

    assert_eq!(amm(tmp.path(), &["simulate", "--sigma", "-1"]).status.code(), Some(2));
    assert_eq!(amm(tmp.path(), &["simulate", "--fee", "1.5"]).status.code(), Some(2));
    assert_eq!(amm(tmp.path(), &["simulate", "--set", "unknown=3"]).status.code(), Some(2));
    assert_eq!(amm(tmp.path(), &["simulate", "--preset", "nope"]).status.code(), Some(2));

    let guard = amm(tmp.path(), &["simulate", "--runs", "100000", "--memory-budget", "1000"]);
    assert_eq!(guard.status.code(), Some(3));
    assert!(!tmp.path().join("amm-lab-out/simulate").exists());

    let streaming = amm(
        tmp.path(),
        &["simulate", "--runs", "2000", "--steps", "10", "--memory-budget", "1000", "--streaming", "--out", "s"],
    );
    assert!(streaming.status.success());
    assert!(!tmp.path().join("s/tables/runs.csv").exists());
}
