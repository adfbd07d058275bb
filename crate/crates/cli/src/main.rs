mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use gsp_core::applications::{
    classify, standard_alpha_grid, sweep_alpha, Calibration, ClassifierConfig, DetectorConfig,
    RegularizationForm,
};
use gsp_core::filtering::{apply_filter, design_ideal, frequency_response, BandKind};
use gsp_core::generators;
use gsp_core::graph::{
    build_knn_graph, symmetrized, Euclidean, Graph, Haversine, KnnOptions, Metric,
};
use gsp_core::io;
use gsp_core::spectral::{decompose, gft, order_frequencies, VariationForm};
use gsp_core::GspError;

use manifest::Run;

#[derive(Parser, Debug)]
#[command(
    name = "gsp",
    version,
    about = "Graph signal processing on the adjacency matrix"
)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for output files and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a graph as an edge list.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Eigenvalues, total variations, frequency ordering and basis condition.
    Spectrum { graph: PathBuf },
    /// Least-squares design of an ideal band filter.
    Design {
        graph: PathBuf,
        #[arg(long, default_value = "lowpass")]
        kind: String,
        #[arg(long)]
        degree: usize,
        /// Design on the eigenvalues of A instead of A^norm.
        #[arg(long)]
        raw: bool,
    },
    /// Apply a filter to a signal and tabulate its spectrum before and after.
    Filter {
        graph: PathBuf,
        filter: PathBuf,
        signal: PathBuf,
        /// Apply the taps to A instead of A^norm.
        #[arg(long)]
        raw: bool,
    },
    /// Flag a snapshot whose high-pass spectrum exceeds the recent history.
    Detect {
        graph: PathBuf,
        /// Filter file; when absent a high-pass filter of `--degree` is designed.
        #[arg(long)]
        filter: Option<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        history: Vec<PathBuf>,
        #[arg(long)]
        current: PathBuf,
        #[arg(long, default_value_t = 3)]
        window: usize,
        #[arg(long, default_value_t = 1.0)]
        threshold_scale: f64,
        #[arg(long, default_value_t = 10)]
        degree: usize,
        /// Calibrate on the median of per-snapshot peaks instead of the max.
        #[arg(long)]
        median: bool,
        #[arg(long)]
        raw: bool,
    },
    /// Two-class label regularization, or an accuracy sweep over alpha.
    Classify {
        graph: PathBuf,
        /// Known labels (`node,label`); not used with `--sweep`.
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value = "shift")]
        form: String,
        /// `standard` for the 199-value grid, or a comma-separated list.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// Fraction of nodes whose label is revealed in each sweep run.
        #[arg(long, default_value_t = 0.05)]
        ratio: f64,
        /// Make every edge undirected before solving.
        #[arg(long)]
        symmetrize: bool,
    },
    /// Rerun the command recorded in a manifest after checking its inputs.
    Replay { manifest: PathBuf },
}

#[derive(Subcommand, Debug)]
enum GenKind {
    /// Directed cycle on N nodes.
    Cycle { n: usize },
    /// Undirected path on N nodes.
    Path { n: usize },
    /// Random simple d-regular undirected graph.
    Regular { n: usize, d: usize },
    /// k-nearest-neighbour graph with Gaussian weights from a point CSV.
    Knn {
        points: PathBuf,
        k: usize,
        #[arg(long)]
        symmetrize: bool,
        #[arg(long)]
        unweighted: bool,
        /// `euclidean`, or `haversine` for (lat, lon) in degrees.
        #[arg(long, default_value = "euclidean")]
        metric: String,
    },
    /// Two-block stochastic block model; also writes the block labels.
    Sbm { n: usize, p: f64, q: f64 },
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, strip_out(&argv)) {
        Ok(outputs) => {
            for o in outputs {
                println!("{o}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<GspError>() {
        Some(g) if g.is_numerical() => 2,
        _ => 1,
    }
}

/// The manifest records arguments without the output directory, so a
/// replay can write elsewhere.
fn strip_out(argv: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(argv.len());
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            out.push(a.clone());
        }
    }
    out
}

fn run(cli: Cli, argv: Vec<String>) -> Result<Vec<String>> {
    let seed = cli.seed;
    let out = cli.out.as_path();
    match cli.cmd {
        Cmd::Gen { kind } => cmd_gen(kind, seed, out, argv),
        Cmd::Spectrum { graph } => cmd_spectrum(&graph, seed, out, argv),
        Cmd::Design {
            graph,
            kind,
            degree,
            raw,
        } => cmd_design(&graph, &kind, degree, raw, seed, out, argv),
        Cmd::Filter {
            graph,
            filter,
            signal,
            raw,
        } => cmd_filter(&graph, &filter, &signal, raw, seed, out, argv),
        Cmd::Detect {
            graph,
            filter,
            history,
            current,
            window,
            threshold_scale,
            degree,
            median,
            raw,
        } => {
            let mut run = Run::new("detect", argv, seed, out)?;
            let g = read_graph(&mut run, &graph)?;
            let b = decompose(&g)?;
            let f = match &filter {
                Some(p) => io::filter_from_json(&run.read(p)?)?,
                None => {
                    run.config("degree", degree);
                    design_ideal(&b, BandKind::HighPass, degree, !raw)?.1.filter
                }
            };
            let mut cfg = DetectorConfig::new(f);
            cfg.window = window;
            cfg.threshold_scale = threshold_scale;
            cfg.normalized = !raw;
            cfg.calibration = if median {
                Calibration::Median
            } else {
                Calibration::Max
            };
            run.config("window", window);
            run.config("threshold_scale", threshold_scale);
            run.config("calibration", if median { "median" } else { "max" });
            run.config("normalized", !raw);
            let hist = history
                .iter()
                .map(|p| {
                    let text = run.read(p)?;
                    io::read_signal(&g, &text).with_context(|| format!("in {}", p.display()))
                })
                .collect::<Result<Vec<_>>>()?;
            let cur_text = run.read(&current)?;
            let cur = io::read_signal(&g, &cur_text)
                .with_context(|| format!("in {}", current.display()))?;
            let d = gsp_core::applications::detect_malfunction(&g, &b, &cfg, &hist, &cur)?;
            let report = io::DetectionReport::from(&d);
            run.write(
                "detection.json",
                &(serde_json::to_string_pretty(&report)? + "\n"),
            )?;
            run.finish()
        }
        Cmd::Classify {
            graph,
            labels,
            alpha,
            form,
            sweep,
            truth,
            runs,
            ratio,
            symmetrize,
        } => {
            let form: RegularizationForm = form.parse()?;
            let mut run = Run::new("classify", argv, seed, out)?;
            let mut g = read_graph(&mut run, &graph)?;
            if symmetrize {
                g = symmetrized(&g)?;
            }
            run.config("form", form);
            run.config("symmetrize", symmetrize);
            match sweep {
                Some(grid) => {
                    let alphas = parse_grid(&grid)?;
                    let truth = truth.ok_or_else(|| anyhow!("--sweep needs --truth"))?;
                    let truth = io::read_labels(g.n(), &run.read(&truth)?)?;
                    run.config("sweep", &grid);
                    run.config("runs", runs);
                    run.config("ratio", ratio);
                    let table = sweep_alpha(&g, &truth, form, &alphas, ratio, runs, seed)?;
                    let best = table.best_row();
                    run.config("best_alpha", io::format_float(best.alpha));
                    run.config("best_mean_accuracy", io::format_float(best.mean_accuracy));
                    run.write("accuracy.csv", &io::write_accuracy_table(&table))?;
                }
                None => {
                    let labels = labels
                        .ok_or_else(|| anyhow!("classify needs a labels file (or --sweep)"))?;
                    let labels = io::read_labels(g.n(), &run.read(&labels)?)?;
                    run.config("alpha", io::format_float(alpha));
                    let out = classify(&g, &labels, &ClassifierConfig::new(alpha, form))?;
                    let mut csv = String::from("node,predicted,class\n");
                    for (i, (p, c)) in out.predicted.iter().zip(&out.classes).enumerate() {
                        csv.push_str(&format!("{i},{},{c}\n", io::format_float(*p)));
                    }
                    run.write("predictions.csv", &csv)?;
                }
            }
            run.finish()
        }
        Cmd::Replay { manifest } => {
            let m = manifest::load(&manifest)?;
            manifest::verify_inputs(&m)?;
            let mut args = vec!["gsp".to_string()];
            args.extend(m.argv.iter().cloned());
            let mut cli = Cli::try_parse_from(&args)
                .map_err(|e| anyhow!("manifest arguments do not parse: {e}"))?;
            if matches!(cli.cmd, Cmd::Replay { .. }) {
                bail!("a manifest cannot replay another replay");
            }
            cli.out = out.to_path_buf();
            run(cli, m.argv)
        }
    }
}

fn read_graph(run: &mut Run, path: &Path) -> Result<Graph> {
    let text = run.read(path)?;
    io::read_edge_list(&text).with_context(|| format!("in {}", path.display()))
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    if s == "standard" {
        return Ok(standard_alpha_grid());
    }
    s.split(',')
        .map(|t| {
            let t = t.trim();
            match t.split_once('/') {
                Some((a, b)) => Ok(a.parse::<f64>()? / b.parse::<f64>()?),
                None => Ok(t.parse::<f64>()?),
            }
        })
        .collect::<Result<Vec<f64>>>()
        .with_context(|| format!("bad alpha grid {s:?}"))
}

fn cmd_gen(kind: GenKind, seed: u64, out: &Path, argv: Vec<String>) -> Result<Vec<String>> {
    let mut run = Run::new("gen", argv, seed, out)?;
    let mut rng = generators::seeded(seed);
    let g = match kind {
        GenKind::Cycle { n } => {
            run.config("kind", "cycle");
            run.config("n", n);
            generators::cycle(n)?
        }
        GenKind::Path { n } => {
            run.config("kind", "path");
            run.config("n", n);
            generators::path(n)?
        }
        GenKind::Regular { n, d } => {
            run.config("kind", "regular");
            run.config("n", n);
            run.config("d", d);
            generators::random_regular(n, d, &mut rng)?
        }
        GenKind::Knn {
            points,
            k,
            symmetrize,
            unweighted,
            metric,
        } => {
            run.config("kind", "knn");
            run.config("k", k);
            run.config("symmetrize", symmetrize);
            run.config("unweighted", unweighted);
            run.config("metric", &metric);
            let text = run.read(&points)?;
            let pts = io::read_points(&text).with_context(|| format!("in {}", points.display()))?;
            let metric: Box<dyn Metric> = match metric.as_str() {
                "euclidean" => Box::new(Euclidean),
                "haversine" => Box::new(Haversine::default()),
                other => bail!("unknown metric {other:?} (expected euclidean or haversine)"),
            };
            build_knn_graph(
                &pts,
                k,
                metric.as_ref(),
                KnnOptions {
                    unweighted,
                    symmetrize,
                },
            )?
        }
        GenKind::Sbm { n, p, q } => {
            run.config("kind", "sbm");
            run.config("n", n);
            run.config("p", p);
            run.config("q", q);
            let (g, truth) = generators::sbm(n, p, q, &mut rng)?;
            run.write("truth.csv", &io::write_labels(&truth))?;
            g
        }
    };
    run.write("graph.tsv", &io::write_edge_list(&g))?;
    run.finish()
}

fn cmd_spectrum(graph: &Path, seed: u64, out: &Path, argv: Vec<String>) -> Result<Vec<String>> {
    let mut run = Run::new("spectrum", argv, seed, out)?;
    let g = read_graph(&mut run, graph)?;
    let b = decompose(&g)?;
    let ordering = order_frequencies(&b, VariationForm::TotalVariation);
    let report = io::SpectrumReport::new(&b, &ordering);
    run.write(
        "spectrum.json",
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )?;
    run.finish()
}

fn cmd_design(
    graph: &Path,
    kind: &str,
    degree: usize,
    raw: bool,
    seed: u64,
    out: &Path,
    argv: Vec<String>,
) -> Result<Vec<String>> {
    let kind: BandKind = kind.parse()?;
    let mut run = Run::new("design", argv, seed, out)?;
    let g = read_graph(&mut run, graph)?;
    run.config("kind", kind);
    run.config("degree", degree);
    run.config("normalized", !raw);
    let b = decompose(&g)?;
    let (target, design) = design_ideal(&b, kind, degree, !raw)?;
    let report = io::DesignReport::new(&target, &design);
    let mut table =
        String::from("rank,lambda_re,lambda_im,desired_re,desired_im,achieved_re,achieved_im\n");
    for (rank, r) in report.response.iter().enumerate() {
        table.push_str(&format!(
            "{rank},{},{},{},{},{},{}\n",
            io::format_float(r.frequency[0]),
            io::format_float(r.frequency[1]),
            io::format_float(r.desired[0]),
            io::format_float(r.desired[1]),
            io::format_float(r.achieved[0]),
            io::format_float(r.achieved[1])
        ));
    }
    run.write("filter.json", &io::filter_to_json(&design.filter))?;
    run.write(
        "design.json",
        &(serde_json::to_string_pretty(&report)? + "\n"),
    )?;
    run.write("response.csv", &table)?;
    run.finish()
}

fn cmd_filter(
    graph: &Path,
    filter: &Path,
    signal: &Path,
    raw: bool,
    seed: u64,
    out: &Path,
    argv: Vec<String>,
) -> Result<Vec<String>> {
    let mut run = Run::new("filter", argv, seed, out)?;
    let g = read_graph(&mut run, graph)?;
    let f = io::filter_from_json(&run.read(filter)?)
        .with_context(|| format!("in {}", filter.display()))?;
    let s_text = run.read(signal)?;
    let s = io::read_signal(&g, &s_text).with_context(|| format!("in {}", signal.display()))?;
    run.config("normalized", !raw);
    let y = apply_filter(&g, &f, &s, !raw)?;
    let b = decompose(&g)?;
    let ordering = order_frequencies(&b, VariationForm::TotalVariation);
    let before: Vec<_> = gft(&b, &s)?.iter().cloned().collect();
    let after: Vec<_> = gft(&b, &y)?.iter().cloned().collect();
    let response = frequency_response(&b, &f, !raw);
    let mut table = io::write_spectrum_table(&ordering, b.eigenvalues(), &before, &after);
    // the response column lets the convolution theorem be checked from the file alone
    table = table
        .lines()
        .enumerate()
        .map(|(i, line)| {
            if i == 0 {
                format!("{line},response_re,response_im\n")
            } else {
                let k = ordering.order[i - 1];
                format!(
                    "{line},{},{}\n",
                    io::format_float(response[k].re),
                    io::format_float(response[k].im)
                )
            }
        })
        .collect();
    run.write("output.csv", &io::write_signal(&y))?;
    run.write("spectrum.csv", &table)?;
    run.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_flag_is_stripped() {
        let argv: Vec<String> = ["gen", "--out", "x", "cycle", "4", "--out=y", "--seed", "3"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(strip_out(&argv), vec!["gen", "cycle", "4", "--seed", "3"]);
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("standard").unwrap().len(), 199);
        assert_eq!(parse_grid("1/4, 2,10").unwrap(), vec![0.25, 2.0, 10.0]);
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn numerical_errors_exit_with_two() {
        let e = anyhow::Error::from(GspError::NearDefective { condition: 1e12 });
        assert_eq!(exit_code(&e), 2);
        let e = anyhow::Error::from(GspError::EmptyBand).context("while designing");
        assert_eq!(exit_code(&e), 1);
        let e = anyhow::Error::from(GspError::SingularSystem { component: vec![1] }).context("x");
        assert_eq!(exit_code(&e), 2);
    }
}
