use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oselab::cocycle::{verify_iterate_holder, CocycleSystem};
use oselab::harness::{
    self,
    config::{load_config, ExperimentConfig},
    report::{build_report, write_pair_csv},
    verify,
};
use oselab::oseledets::{self, Spectrum};
use oselab::regular_blocks::{self, RegularBlockParams};
use oselab::systems;

#[derive(Parser)]
#[command(
    name = "oselab",
    about = "Lyapunov spectra, Oseledets splittings, regular blocks, and Hölder bound verification for linear cocycles",
    version
)]
struct Cli {
    /// Experiment config file (flat TOML key table).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for report files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format for report documents.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the Lyapunov spectrum of the configured system.
    Exponents,
    /// Compute the Oseledets splitting at a sampled point and report its
    /// structural and equivariance defects.
    Splitting,
    /// Sweep the block parameter ℓ and report empirical passing fractions.
    Block,
    /// Verify one of the bound lemmas on synthetic instances, or the
    /// iterate-Hölder estimate on the configured system.
    VerifyLemma {
        #[arg(value_enum)]
        which: Lemma,
        /// Number of random instances (pair/triple/metric) or pairs (iterate).
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// Sample block pairs and fit the empirical Hölder exponent.
    Holder,
    /// Run the full experiment pipeline and write pair CSV plus report.
    Report,
}

#[derive(Copy, Clone, ValueEnum)]
enum Lemma {
    Pair,
    Triple,
    Metric,
    Iterate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("failed to configure thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, String> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| "this command needs --config <path>".to_string())?;
    let text = fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    let mut cfg = load_config(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn spectrum_of(cfg: &ExperimentConfig) -> Result<(CocycleSystem, Spectrum), String> {
    let sys = systems::make_system(&cfg.system).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED);
    let x0 = sys.sample(&mut rng);
    let spectrum = oseledets::lyapunov_spectrum(&sys, &x0, cfg.spectrum_horizon, cfg.gap_tol)
        .map_err(|e| e.to_string())?;
    Ok((sys, spectrum))
}

fn emit(cli: &Cli, value: &impl serde::Serialize) -> Result<(), String> {
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(value).map_err(|e| e.to_string())?,
        Format::Csv => {
            let value = serde_json::to_value(value).map_err(|e| e.to_string())?;
            flat_csv(&value)
        }
    };
    println!("{text}");
    Ok(())
}

fn flat_csv(value: &serde_json::Value) -> String {
    fn rec(prefix: &str, v: &serde_json::Value, rows: &mut Vec<(String, String)>) {
        match v {
            serde_json::Value::Object(map) => {
                for (k, val) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    rec(&key, val, rows);
                }
            }
            serde_json::Value::Array(items) => {
                for (i, val) in items.iter().enumerate() {
                    rec(&format!("{prefix}[{i}]"), val, rows);
                }
            }
            other => rows.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    rec("", value, &mut rows);
    let mut out = String::from("key,value");
    for (k, v) in rows {
        out.push('\n');
        out.push_str(&format!("{k},{v}"));
    }
    out
}

fn run(cli: Cli) -> Result<(), String> {
    match &cli.command {
        Command::Exponents => {
            let cfg = load(&cli)?;
            let (_, spectrum) = spectrum_of(&cfg)?;
            emit(&cli, &spectrum)?;
            eprintln!(
                "determinant identity defect: {:.3e}",
                spectrum.det_identity_defect()
            );
            Ok(())
        }
        Command::Splitting => {
            let cfg = load(&cli)?;
            let (sys, spectrum) = spectrum_of(&cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED);
            let x = sys.sample(&mut rng);
            let n = cfg.resolved_split_horizon(&spectrum);
            let data = if sys.invertible() {
                oseledets::splitting(&sys, &x, n, &spectrum).map_err(|e| e.to_string())?
            } else {
                let flags = oseledets::forward_filtration(&sys, &x, n, &spectrum)
                    .map_err(|e| e.to_string())?;
                oseledets::OseledetsData {
                    at: x.clone(),
                    spectrum: spectrum.clone(),
                    flags,
                    splitting: None,
                }
            };
            #[derive(serde::Serialize)]
            struct SplitSummary {
                exponents: Vec<f64>,
                multiplicities: Vec<usize>,
                horizon: usize,
                structural_defect: f64,
                equivariance_defects: Option<Vec<f64>>,
            }
            let equivariance = if data.splitting.is_some() {
                Some(oseledets::equivariance_defect(&sys, &data, n).map_err(|e| e.to_string())?)
            } else {
                None
            };
            let summary = SplitSummary {
                exponents: spectrum.exponents().to_vec(),
                multiplicities: spectrum.multiplicities().to_vec(),
                horizon: n,
                structural_defect: data.structural_defect().map_err(|e| e.to_string())?,
                equivariance_defects: equivariance,
            };
            emit(&cli, &summary)
        }
        Command::Block => {
            let cfg = load(&cli)?;
            let (sys, spectrum) = spectrum_of(&cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xB10C);
            let samples: Vec<_> = (0..cfg.sample_count)
                .map(|_| sys.sample(&mut rng))
                .collect();
            let n = cfg.resolved_split_horizon(&spectrum);
            let data_fn = |pt: &oselab::cocycle::Point| {
                if sys.invertible() {
                    oseledets::splitting(&sys, pt, n, &spectrum)
                } else {
                    let flags = oseledets::forward_filtration(&sys, pt, n, &spectrum)?;
                    Ok(oseledets::OseledetsData {
                        at: pt.clone(),
                        spectrum: spectrum.clone(),
                        flags,
                        splitting: None,
                    })
                }
            };
            #[derive(serde::Serialize)]
            struct SweepRow {
                ell: u32,
                passing_fraction: f64,
            }
            let mut rows = Vec::new();
            for &ell in &cfg.ell_sweep {
                let params = RegularBlockParams::new(cfg.eps, ell, cfg.horizon, spectrum.clone())
                    .map_err(|e| e.to_string())?;
                let summary = regular_blocks::build_block(&sys, &samples, data_fn, &params)
                    .map_err(|e| e.to_string())?;
                rows.push(SweepRow {
                    ell,
                    passing_fraction: summary.passing_fraction,
                });
            }
            emit(&cli, &rows)
        }
        Command::VerifyLemma { which, count } => {
            let seed = cli.seed.unwrap_or(0);
            match which {
                Lemma::Pair => {
                    let out = verify::pair_lemma_sweep(*count, seed).map_err(|e| e.to_string())?;
                    emit(&cli, &out)?;
                    if !out.sound() {
                        return Err("pair lemma sweep found bound violations".into());
                    }
                    Ok(())
                }
                Lemma::Triple => {
                    let out =
                        verify::triple_lemma_sweep(*count, seed).map_err(|e| e.to_string())?;
                    emit(&cli, &out)?;
                    if !out.sound() {
                        return Err("triple lemma sweep found bound violations".into());
                    }
                    Ok(())
                }
                Lemma::Metric => {
                    let out =
                        verify::metric_lemma_sweep(*count, seed).map_err(|e| e.to_string())?;
                    emit(&cli, &out)?;
                    if !out.sound() {
                        return Err("metric lemma sweep found bound violations".into());
                    }
                    Ok(())
                }
                Lemma::Iterate => {
                    let cfg = load(&cli)?;
                    let sys = systems::make_system(&cfg.system).map_err(|e| e.to_string())?;
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    let pairs: Vec<_> = (0..*count)
                        .map(|_| {
                            let x = sys.sample(&mut rng);
                            let r = cfg.delta_min
                                + rand::Rng::gen::<f64>(&mut rng) * (cfg.delta_max - cfg.delta_min);
                            let y = harness::partner_at_distance(&x, r, &mut rng);
                            (x, y)
                        })
                        .collect();
                    let report =
                        verify_iterate_holder(&sys, &pairs, 10).map_err(|e| e.to_string())?;
                    emit(&cli, &report)?;
                    if !report.passed {
                        return Err("iterate-Hölder check failed".into());
                    }
                    Ok(())
                }
            }
        }
        Command::Holder => {
            let cfg = load(&cli)?;
            let outcome = harness::run_experiment(&cfg).map_err(|e| e.to_string())?;
            match &outcome.fit {
                Some(fit) => emit(&cli, fit),
                None => Err("no usable pairs for a Hölder fit".into()),
            }
        }
        Command::Report => {
            let cfg = load(&cli)?;
            let outcome = harness::run_experiment(&cfg).map_err(|e| e.to_string())?;
            fs::create_dir_all(&cli.out).map_err(|e| e.to_string())?;
            let csv_path = cli.out.join("pairs.csv");
            let mut buf = Vec::new();
            write_pair_csv(&mut buf, &outcome.sampled.pairs).map_err(|e| e.to_string())?;
            fs::write(&csv_path, &buf).map_err(|e| e.to_string())?;
            let report = build_report(&outcome, cfg.eps, cfg.horizon, cfg.subspace_index);
            let (name, text) = match cli.format {
                Format::Json => ("report.json", report.to_json().map_err(|e| e.to_string())?),
                Format::Csv => (
                    "report.csv",
                    report.to_flat_csv().map_err(|e| e.to_string())?,
                ),
            };
            let report_path = cli.out.join(name);
            fs::write(&report_path, text).map_err(|e| e.to_string())?;
            println!(
                "wrote {} pairs to {} and report to {}",
                outcome.sampled.pairs.len(),
                csv_path.display(),
                report_path.display()
            );
            println!("verdict: {}", report.verdict);
            Ok(())
        }
    }
}
