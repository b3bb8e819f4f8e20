use std::path::{Path, PathBuf};

use linkbias::cwp::build_matrix;
use linkbias::exposure::{exposure_report, BootstrapConfig, ExposureReport, ReportOptions};
use linkbias::fixture::{Fixture, FixtureConfig};
use linkbias::ingest::{
    build_topic_network, mine_partitions, parse_category_file, parse_clickstream, parse_edge_list,
    parse_partition_file, ClickCounts,
};
use linkbias::stats::{stats_report, StatsOptions};
use linkbias::{CwpKind, NavigationConfig, NodeLabel, TopicInfo, TopicNetwork};
use rayon::prelude::*;

use crate::config::Settings;
use crate::error::CliError;
use crate::output::{open, out_dir, require_file, tag, write_atomic};
use crate::svg::line_chart;
use crate::{BuildArgs, ExposureArgs, FixtureArgs, StatsArgs};

const DEFAULT_ALPHAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn required<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("--{flag} is required")))
}

fn source(path: &Path) -> String {
    path.display().to_string()
}

fn read_network(path: &Path) -> Result<TopicNetwork, CliError> {
    require_file(path, "network")?;
    Ok(TopicNetwork::read_from(open(path)?, &source(path))?)
}

pub fn build(a: BuildArgs) -> Result<(), CliError> {
    let s = Settings::load(a.common.config.as_deref())?;
    let edges: Option<PathBuf> = s.get("edges", a.edges)?;
    let partitions: Option<PathBuf> = s.get("partitions", a.partitions)?;
    let categories: Option<PathBuf> = s.get("categories", a.categories)?;
    let seed_p: Option<String> = s.get("seed_p", a.seed_p)?;
    let seed_pbar: Option<String> = s.get("seed_pbar", a.seed_pbar)?;
    let keywords_p: Vec<String> = s.list("keywords_p", a.keywords_p)?;
    let keywords_pbar: Vec<String> = s.list("keywords_pbar", a.keywords_pbar)?;
    let clickstream: Vec<PathBuf> = s.list("clickstream", a.clickstream)?;
    let topic = TopicInfo {
        name: s.get_or("topic", a.topic, "topic".to_string())?,
        label_p: s.get_or("label_p", a.label_p, "P".to_string())?,
        label_pbar: s.get_or("label_pbar", a.label_pbar, "PBAR".to_string())?,
    };
    let output: Option<PathBuf> = s.get("output", a.output)?;
    let dir = out_dir(s.get("out_dir", a.common.out_dir)?);
    s.finish()?;

    let edges = required(edges, "edges")?;
    require_file(&edges, "edge list")?;
    for p in &clickstream {
        require_file(p, "clickstream")?;
    }
    if topic.name.is_empty() || topic.name.contains(['\t', '\n', '/']) {
        return Err(CliError::Config(format!("invalid topic name {:?}", topic.name)));
    }
    let spec = match (partitions, categories) {
        (Some(p), None) => {
            require_file(&p, "partition file")?;
            parse_partition_file(open(&p)?, &source(&p), topic.clone())?
        }
        (None, Some(c)) => {
            require_file(&c, "category file")?;
            let seed_p = required(seed_p, "seed-p")?;
            let seed_pbar = required(seed_pbar, "seed-pbar")?;
            let cats = parse_category_file(open(&c)?, &source(&c))?;
            mine_partitions(&cats, topic.clone(), &seed_p, &seed_pbar, &keywords_p, &keywords_pbar)?
        }
        _ => {
            return Err(CliError::Config(
                "exactly one of --partitions or --categories is required".into(),
            ))
        }
    };

    let raw = parse_edge_list(open(&edges)?, &source(&edges))?;
    let periods = clickstream
        .iter()
        .map(|p| Ok(parse_clickstream(open(p)?, &source(p))?))
        .collect::<Result<Vec<ClickCounts>, CliError>>()?;
    let clicks = (!periods.is_empty()).then(|| ClickCounts::average(&periods));
    let (g, report) = build_topic_network(&raw, &spec, clicks.as_ref())?;

    let output = output.unwrap_or_else(|| dir.join(format!("{}.network", topic.name)));
    let bytes = g.to_bytes();
    let digest = g.digest();
    write_atomic(&output, &bytes)?;
    let file_name = output.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let mut sidecar = output.clone().into_os_string();
    sidecar.push(".sha256");
    write_atomic(Path::new(&sidecar), format!("{digest}  {file_name}\n").as_bytes())?;

    let summary = serde_json::json!({
        "artifact": output.display().to_string(),
        "digest": digest,
        "nodes": {
            "P": g.count_label(NodeLabel::P),
            "PBAR": g.count_label(NodeLabel::PBar),
            "NEIGHBOR": g.count_label(NodeLabel::Neighbor),
        },
        "edges": g.edge_count(),
        "block_edge_counts": g.block_edge_counts(),
        "missing": report.missing.len(),
        "overlap": report.overlap.len(),
        "contracted": report.contracted,
        "dangling_fixed": report.dangling_fixed,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}

fn parse_cwps(names: &[String], smoothing: f64) -> Result<Vec<CwpKind>, CliError> {
    if names.is_empty() {
        return Ok(CwpKind::all()
            .into_iter()
            .map(|k| with_smoothing(k, smoothing))
            .collect());
    }
    let mut out: Vec<CwpKind> = Vec::new();
    for n in names {
        let k = with_smoothing(n.parse::<CwpKind>()?, smoothing);
        if !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(out)
}

fn with_smoothing(k: CwpKind, smoothing: f64) -> CwpKind {
    match k {
        CwpKind::Clicks { .. } => CwpKind::Clicks { smoothing },
        other => other,
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Json,
    Csv,
    Svg,
}

fn parse_formats(names: &[String]) -> Result<Vec<Format>, CliError> {
    if names.is_empty() {
        return Ok(vec![Format::Json, Format::Csv]);
    }
    names
        .iter()
        .map(|n| match n.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            other => Err(CliError::Config(format!("unknown format {other:?} (json, csv, svg)"))),
        })
        .collect()
}

pub fn exposure(a: ExposureArgs) -> Result<(), CliError> {
    let s = Settings::load(a.common.config.as_deref())?;
    let network: Option<PathBuf> = s.get("network", a.network)?;
    let cwp_names: Vec<String> = s.list("cwp", a.cwp)?;
    let mut alphas: Vec<f64> = s.list("alpha", a.alpha)?;
    let clicks = s.get_or("clicks", a.clicks, 10usize)?;
    let smoothing = s.get_or("smoothing", a.smoothing, linkbias::cwp::DEFAULT_CLICK_SMOOTHING)?;
    let replicates = s.get_or("bootstrap", a.bootstrap, 0usize)?;
    let gamma = s.get_or("gamma", a.gamma, 0.9)?;
    let seed = s.get_or("seed", a.seed, 0u64)?;
    let convergence = s.flag("convergence", a.convergence)?;
    let formats = parse_formats(&s.list("format", a.format)?)?;
    let dir = out_dir(s.get("out_dir", a.common.out_dir)?);
    s.finish()?;

    let network = required(network, "network")?;
    let cwps = parse_cwps(&cwp_names, smoothing)?;
    if alphas.is_empty() {
        alphas = DEFAULT_ALPHAS.to_vec();
    }
    let bootstrap = (replicates > 0).then_some(BootstrapConfig {
        replicates,
        gamma,
        seed,
    });
    if let Some(b) = &bootstrap {
        b.validate()?;
    }
    let combos: Vec<(usize, NavigationConfig)> = cwps
        .iter()
        .enumerate()
        .flat_map(|(i, &k)| alphas.iter().map(move |&al| (i, NavigationConfig::new(al, clicks, k))))
        .collect();
    for (_, cfg) in &combos {
        cfg.validate()?;
    }

    let g = read_network(&network)?;
    let matrices = cwps
        .iter()
        .map(|&k| build_matrix(&g, k))
        .collect::<linkbias::Result<Vec<_>>>()?;
    let opts = ReportOptions {
        convergence,
        bootstrap,
    };
    let reports: Vec<ExposureReport> = combos
        .par_iter()
        .map(|(i, cfg)| exposure_report(&g, &matrices[*i], cfg, &opts))
        .collect::<linkbias::Result<_>>()?;

    for r in &reports {
        let stem = format!("exposure_{}_alpha{}", r.cwp, tag(r.alpha));
        for f in &formats {
            match f {
                Format::Json => write_atomic(&dir.join(format!("{stem}.json")), (r.to_json() + "\n").as_bytes())?,
                Format::Csv => write_atomic(&dir.join(format!("{stem}.csv")), r.to_csv().as_bytes())?,
                Format::Svg => {
                    let title = format!("{} / {} / alpha = {}", r.topic, r.cwp, tag(r.alpha));
                    let e = |f: fn(&linkbias::exposure::StepExposure) -> f64| {
                        r.steps.iter().map(|s| Some(f(s))).collect::<Vec<_>>()
                    };
                    let series = [
                        ("P to PBAR", e(|s| s.e_p_to_pbar)),
                        ("PBAR to P", e(|s| s.e_pbar_to_p)),
                        ("P to P", e(|s| s.e_p_to_p)),
                        ("PBAR to PBAR", e(|s| s.e_pbar_to_pbar)),
                    ];
                    write_atomic(
                        &dir.join(format!("{stem}.svg")),
                        line_chart(&title, "exposure", &series).as_bytes(),
                    )?;
                    let ratios = [
                        ("ratio P", r.steps.iter().map(|s| s.ratio_p).collect()),
                        ("ratio PBAR", r.steps.iter().map(|s| s.ratio_pbar).collect()),
                        ("mutual", e(|s| s.mutual)),
                    ];
                    write_atomic(
                        &dir.join(format!("{stem}_ratio.svg")),
                        line_chart(&title, "ratio", &ratios).as_bytes(),
                    )?;
                }
            }
        }
        println!("{stem}");
    }
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<(), CliError> {
    let s = Settings::load(a.common.config.as_deref())?;
    let network: Option<PathBuf> = s.get("network", a.network)?;
    let defaults = StatsOptions::default();
    let samples = s.get_or("samples", a.samples, defaults.samples)?;
    let swaps: Option<usize> = s.get("swaps", a.swaps)?;
    let seed = s.get_or("seed", a.seed, 0u64)?;
    let welch_replicates = s.get_or("welch_replicates", a.welch_replicates, defaults.welch_replicates)?;
    let step: Option<usize> = s.get("homophily_step", a.homophily_step)?;
    let cwp: CwpKind = s.get_or("cwp", a.cwp, "uniform".to_string())?.parse()?;
    let alpha = s.get_or("alpha", a.alpha, 0.0)?;
    let csv = s.flag("csv", a.csv)?;
    let dir = out_dir(s.get("out_dir", a.common.out_dir)?);
    s.finish()?;

    let network = required(network, "network")?;
    if samples == 0 {
        return Err(CliError::Config("--samples must be at least 1".into()));
    }
    if welch_replicates == 0 {
        return Err(CliError::Config("--welch-replicates must be at least 1".into()));
    }
    let homophily = match step {
        Some(l) => {
            let cfg = NavigationConfig::new(alpha, l, cwp);
            cfg.validate()?;
            Some((cfg, l))
        }
        None => None,
    };
    let g = read_network(&network)?;
    let opts = StatsOptions {
        samples,
        swaps,
        seed,
        welch_replicates,
        homophily,
        ..defaults
    };
    let r = stats_report(&g, &opts)?;
    write_atomic(&dir.join("stats.json"), (r.to_json() + "\n").as_bytes())?;
    println!("stats.json");
    if csv {
        for (name, body) in [
            ("stats_fractions.csv", r.fractions_csv()),
            ("stats_across_links.csv", r.across_links_csv()),
            ("stats_across_weights.csv", r.across_weights_csv()),
        ] {
            write_atomic(&dir.join(name), body.as_bytes())?;
            println!("{name}");
        }
    }
    Ok(())
}

pub fn fixture(a: FixtureArgs) -> Result<(), CliError> {
    let s = Settings::load(a.common.config.as_deref())?;
    let d = FixtureConfig::default();
    let cfg = FixtureConfig {
        topic: s.get_or("topic", a.topic, d.topic)?,
        p_nodes: s.get_or("p_nodes", a.p_nodes, d.p_nodes)?,
        pbar_nodes: s.get_or("pbar_nodes", a.pbar_nodes, d.pbar_nodes)?,
        neighbor_nodes: s.get_or("neighbor_nodes", a.neighbor_nodes, d.neighbor_nodes)?,
        rest_nodes: s.get_or("rest_nodes", a.rest_nodes, d.rest_nodes)?,
        out_degree: s.get_or("out_degree", a.out_degree, d.out_degree)?,
        across_fraction: s.get_or("across_fraction", a.across_fraction, d.across_fraction)?,
        neighbor_fraction: s.get_or("neighbor_fraction", a.neighbor_fraction, d.neighbor_fraction)?,
        click_coverage: s.get_or("click_coverage", a.click_coverage, d.click_coverage)?,
        seed: s.get_or("seed", a.seed, d.seed)?,
    };
    let dir = out_dir(s.get("out_dir", a.common.out_dir)?);
    s.finish()?;

    let fx = Fixture::generate(&cfg)?;
    let files = [
        ("edges.tsv", fx.edge_list_tsv()),
        ("clickstream.tsv", fx.clickstream_tsv()),
        ("partitions.tsv", fx.partition_tsv()),
        ("categories.tsv", fx.category_tsv()),
        (
            "fixture.json",
            serde_json::to_string_pretty(&cfg).expect("config serializes") + "\n",
        ),
    ];
    for (name, body) in files {
        write_atomic(&dir.join(name), body.as_bytes())?;
        println!("{}", dir.join(name).display());
    }
    Ok(())
}
