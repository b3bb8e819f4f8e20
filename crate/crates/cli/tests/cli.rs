use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use linkbias::exposure::{exposure_report, ReportOptions};
use linkbias::{build_matrix, CwpKind, NavigationConfig, TopicNetwork};
use serde_json::Value;
use tempfile::TempDir;

fn linkbias(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linkbias"))
        .args(args)
        .current_dir(dir)
        .env_remove("LINKBIAS_OUT_DIR")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Writes a small fixture into `dir/data` and builds `dir/synthetic.network`.
fn setup(extra_fixture_args: &[&str]) -> (TempDir, PathBuf) {
    let tmp = TempDir::new().unwrap();
    let mut args = vec![
        "fixture", "--out-dir", "data", "--p-nodes", "20", "--pbar-nodes", "15", "--neighbor-nodes", "40",
        "--rest-nodes", "40", "--out-degree", "6",
    ];
    args.extend_from_slice(extra_fixture_args);
    ok(linkbias(tmp.path(), &args));
    ok(linkbias(
        tmp.path(),
        &[
            "build",
            "--edges",
            "data/edges.tsv",
            "--partitions",
            "data/partitions.tsv",
            "--clickstream",
            "data/clickstream.tsv",
            "--topic",
            "synthetic",
        ],
    ));
    let net = tmp.path().join("synthetic.network");
    assert!(net.exists());
    (tmp, net)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn build_is_deterministic_and_round_trips() {
    let (tmp, net) = setup(&[]);
    let first = fs::read(&net).unwrap();
    let sidecar = fs::read_to_string(tmp.path().join("synthetic.network.sha256")).unwrap();
    let summary: Value = serde_json::from_str(&ok(linkbias(
        tmp.path(),
        &[
            "build",
            "--edges",
            "data/edges.tsv",
            "--partitions",
            "data/partitions.tsv",
            "--clickstream",
            "data/clickstream.tsv",
            "--topic",
            "synthetic",
        ],
    )))
    .unwrap();
    assert_eq!(fs::read(&net).unwrap(), first);
    assert_eq!(fs::read_to_string(tmp.path().join("synthetic.network.sha256")).unwrap(), sidecar);

    let g = TopicNetwork::read_from(first.as_slice(), "artifact").unwrap();
    assert_eq!(summary["digest"], g.digest());
    assert!(sidecar.starts_with(&g.digest()));
    assert_eq!(summary["block_edge_counts"], serde_json::to_value(g.block_edge_counts()).unwrap());
    assert_eq!(summary["nodes"]["P"], 20);
    assert_eq!(summary["nodes"]["PBAR"], 15);
}

#[test]
fn mined_partitions_give_the_same_network() {
    let (tmp, net) = setup(&[]);
    ok(linkbias(
        tmp.path(),
        &[
            "build",
            "--edges",
            "data/edges.tsv",
            "--categories",
            "data/categories.tsv",
            "--seed-p",
            "Support movement",
            "--seed-pbar",
            "Opposition movement",
            "--keywords-p",
            "support",
            "--keywords-pbar",
            "opposition",
            "--clickstream",
            "data/clickstream.tsv",
            "--topic",
            "synthetic",
            "--output",
            "mined.network",
        ],
    ));
    assert_eq!(fs::read(tmp.path().join("mined.network")).unwrap(), fs::read(net).unwrap());
}

#[test]
fn missing_input_exits_nonzero_with_message() {
    let tmp = TempDir::new().unwrap();
    let out = linkbias(tmp.path(), &["build", "--edges", "nope.tsv", "--partitions", "nope.tsv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.tsv"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = linkbias(tmp.path(), &["exposure", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--frobnicate"));
    assert_eq!(linkbias(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_alpha_is_rejected() {
    let (tmp, _) = setup(&[]);
    let out = linkbias(tmp.path(), &["exposure", "--network", "synthetic.network", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn empty_partition_is_reported() {
    let (tmp, _) = setup(&[]);
    let only_p: String = fs::read_to_string(tmp.path().join("data/partitions.tsv"))
        .unwrap()
        .lines()
        .filter(|l| !l.ends_with("PBAR"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(tmp.path().join("only_p.tsv"), only_p).unwrap();
    let out = linkbias(
        tmp.path(),
        &["build", "--edges", "data/edges.tsv", "--partitions", "only_p.tsv", "--output", "p.network"],
    );
    let failed_at_build = !out.status.success();
    let out = if failed_at_build {
        out
    } else {
        linkbias(tmp.path(), &["exposure", "--network", "p.network", "--clicks", "2"])
    };
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr).to_lowercase();
    assert!(err.contains("pbar") || err.contains("empty"), "{err}");
}

#[test]
fn first_click_does_not_depend_on_alpha() {
    let (tmp, _) = setup(&[]);
    ok(linkbias(
        tmp.path(),
        &["exposure", "--network", "synthetic.network", "--alpha", "0,1", "--clicks", "1", "--format", "json"],
    ));
    for cwp in ["uniform", "position", "clicks"] {
        let a = read_json(&tmp.path().join(format!("exposure_{cwp}_alpha0.json")));
        let b = read_json(&tmp.path().join(format!("exposure_{cwp}_alpha1.json")));
        assert_eq!(a["steps"], b["steps"], "{cwp}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (tmp, _) = setup(&[]);
    let args = [
        "exposure", "--network", "synthetic.network", "--cwp", "clicks", "--alpha", "0.5", "--clicks", "4",
        "--bootstrap", "40", "--seed", "7", "--convergence", "--format", "json,csv",
    ];
    ok(linkbias(tmp.path(), &args));
    let json = fs::read(tmp.path().join("exposure_clicks_alpha0.5.json")).unwrap();
    let csv = fs::read(tmp.path().join("exposure_clicks_alpha0.5.csv")).unwrap();
    ok(linkbias(tmp.path(), &args));
    assert_eq!(fs::read(tmp.path().join("exposure_clicks_alpha0.5.json")).unwrap(), json);
    assert_eq!(fs::read(tmp.path().join("exposure_clicks_alpha0.5.csv")).unwrap(), csv);
    let v: Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["adjusted"]["B"], 40);
    assert_eq!(v["adjusted"]["steps"].as_array().unwrap().len(), 4);
}

#[test]
fn report_matches_library_results() {
    let (tmp, net) = setup(&[]);
    ok(linkbias(
        tmp.path(),
        &["exposure", "--network", "synthetic.network", "--cwp", "position", "--alpha", "0.25", "--clicks", "6"],
    ));
    let v = read_json(&tmp.path().join("exposure_position_alpha0.25.json"));
    let g = TopicNetwork::read_from(fs::read(net).unwrap().as_slice(), "artifact").unwrap();
    let cfg = NavigationConfig::new(0.25, 6, CwpKind::Position);
    let m0 = build_matrix(&g, cfg.cwp).unwrap();
    let r = exposure_report(&g, &m0, &cfg, &ReportOptions::default()).unwrap();
    let steps = v["steps"].as_array().unwrap();
    assert_eq!(steps.len(), r.steps.len());
    // serde_json's default float parser may land one ulp off the written value.
    let same = |a: &Value, b: f64| (a.as_f64().unwrap() - b).abs() <= 4.0 * f64::EPSILON * b.abs();
    for (got, want) in steps.iter().zip(&r.steps) {
        assert!(same(&got["e_p_to_pbar"], want.e_p_to_pbar));
        assert!(same(&got["e_pbar_to_p"], want.e_pbar_to_p));
        assert!(same(&got["e_p_to_p"], want.e_p_to_p));
        assert!(same(&got["mutual"], want.mutual));
    }
    let csv = fs::read_to_string(tmp.path().join("exposure_position_alpha0.25.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn svg_charts_are_written() {
    let (tmp, _) = setup(&[]);
    ok(linkbias(
        tmp.path(),
        &["exposure", "--network", "synthetic.network", "--cwp", "uniform", "--alpha", "0", "--format", "svg"],
    ));
    let svg = fs::read_to_string(tmp.path().join("exposure_uniform_alpha0.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(tmp.path().join("exposure_uniform_alpha0_ratio.svg").exists());
    assert!(!tmp.path().join("exposure_uniform_alpha0.json").exists());
}

#[test]
fn zero_across_fixture_has_no_across_links() {
    let (tmp, _) = setup(&["--across-fraction", "0"]);
    ok(linkbias(
        tmp.path(),
        &["stats", "--network", "synthetic.network", "--samples", "3", "--welch-replicates", "100", "--csv"],
    ));
    let v = read_json(&tmp.path().join("stats.json"));
    assert_eq!(v["block_fractions"]["p"]["across"], 0.0);
    assert_eq!(v["block_fractions"]["pbar"]["across"], 0.0);
    assert_eq!(v["nodes"]["p"], 20);
    let csvs = fs::read_dir(tmp.path()).unwrap().filter(|e| {
        e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv")
    });
    assert!(csvs.count() >= 3);
}

#[test]
fn stats_homophily_correlation_is_reported() {
    let (tmp, _) = setup(&[]);
    ok(linkbias(
        tmp.path(),
        &[
            "stats", "--network", "synthetic.network", "--samples", "2", "--welch-replicates", "50", "--homophily-step",
            "2", "--cwp", "position", "--alpha", "0.5",
        ],
    ));
    let v = read_json(&tmp.path().join("stats.json"));
    assert_eq!(v["homophily"]["l"], 2);
    let r = v["homophily"]["r"].as_f64().unwrap();
    assert!((-1.0..=1.0).contains(&r));
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let (tmp, _) = setup(&[]);
    fs::write(
        tmp.path().join("run.conf"),
        "# exposure settings\nnetwork = synthetic.network\ncwp = uniform\nalpha = 0.5\nclicks = 3\nformat = json\nout-dir = conf_out\n",
    )
    .unwrap();
    ok(linkbias(tmp.path(), &["exposure", "--config", "run.conf", "--clicks", "2"]));
    let v = read_json(&tmp.path().join("conf_out/exposure_uniform_alpha0.5.json"));
    assert_eq!(v["steps"].as_array().unwrap().len(), 2);

    fs::write(tmp.path().join("bad.conf"), "network = synthetic.network\nclicsk = 3\n").unwrap();
    let out = linkbias(tmp.path(), &["exposure", "--config", "bad.conf"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("clicsk"));
}

#[test]
fn out_dir_can_come_from_the_environment() {
    let (tmp, _) = setup(&[]);
    let out = Command::new(env!("CARGO_BIN_EXE_linkbias"))
        .args(["exposure", "--network", "synthetic.network", "--cwp", "uniform", "--alpha", "0", "--clicks", "2"])
        .current_dir(tmp.path())
        .env("LINKBIAS_OUT_DIR", tmp.path().join("env_out"))
        .output()
        .unwrap();
    ok(out);
    assert!(tmp.path().join("env_out/exposure_uniform_alpha0.json").exists());
    assert!(tmp.path().join("env_out/exposure_uniform_alpha0.csv").exists());
}

#[test]
fn version_subcommand_prints_version() {
    let tmp = TempDir::new().unwrap();
    let out = ok(linkbias(tmp.path(), &["version"]));
    assert!(out.starts_with("linkbias "));
}
