use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rfmix_core::metrics::{psd_welch, report, segment_for, stft_spectrogram, DEFAULT_OVERLAP};
use rfmix_core::separation::{Method, SuiteConfig};
use rfmix_core::{IqBuffer, Rng, Standard, WaveformConfig};
use rfmix_harness::bench::{bench_standards, BenchConfig, BenchReport};
use rfmix_harness::dataset::{
    generate_dataset, load_manifest, read_json, read_sample, verify, write_json, write_sample, DatasetManifest,
    Plan, FORMAT_VERSION, MANIFEST_FILE,
};
use rfmix_harness::export::{psd_csv, spectrogram_csv, spectrogram_png};
use rfmix_harness::scenario::ScenarioSpec;
use rfmix_harness::suite::{evaluate_suite, separate_sample, Grouping};
use rfmix_harness::{iq, HarnessError, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "rfmix", version, about = "Multi-standard cellular IQ synthesis and mixing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one standard's waveform into an IQ file
    Gen {
        /// Standard with default settings (gsm, umts, lte, nr)
        #[arg(long, conflicts_with = "config")]
        standard: Option<Standard>,
        /// Waveform config JSON
        #[arg(long)]
        config: Option<PathBuf>,
        /// Stretch the waveform to at least this long
        #[arg(long)]
        duration_s: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario spec and write it as a one-sample dataset
    Mix {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Expand a plan into a dataset with manifest and throughput report
    Dataset {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the plan's master seed
        #[arg(long)]
        master_seed: Option<u64>,
    },
    /// Signal metrics for an IQ file or a stored sample
    Metrics {
        #[command(flatten)]
        input: Input,
        /// Also write the Welch PSD as CSV
        #[arg(long)]
        psd_csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a magnitude spectrogram as CSV and/or PNG
    Spectrogram {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 256)]
        window: usize,
        #[arg(long, default_value_t = 128)]
        hop: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        png: Option<PathBuf>,
        #[arg(long, default_value_t = 80.0)]
        dynamic_range_db: f64,
    },
    /// Separate a stored sample, or run the seeded evaluation suite
    Separate {
        #[arg(long, required_unless_present = "suite")]
        manifest: Option<PathBuf>,
        #[arg(long, required_unless_present = "suite")]
        id: Option<String>,
        #[arg(long, value_parser = parse_method, default_value = "ica")]
        method: Method,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = parse_grouping, default_value = "sequential")]
        grouping: Grouping,
        #[arg(long, default_value_t = 256)]
        window: usize,
        #[arg(long, default_value_t = 128)]
        hop: usize,
        /// Treat FastICA non-convergence as a failure (exit 3)
        #[arg(long)]
        strict: bool,
        /// Directory for estimate IQ files
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the evaluation suite instead of one sample
        #[arg(long, conflicts_with_all = ["manifest", "id"])]
        suite: bool,
        #[arg(long, default_value_t = 50)]
        seeds: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        sources: Vec<usize>,
        #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "ica,nmf")]
        methods: Vec<Method>,
        /// Suite settings JSON
        #[arg(long)]
        suite_config: Option<PathBuf>,
    },
    /// Time generation of each standard's default waveform
    Bench {
        #[arg(long, default_value_t = 10e-3)]
        duration_s: f64,
        #[arg(long, default_value_t = 0.5)]
        min_wall_s: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Earlier bench output to compare against
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Largest tolerated drop in real-time multiple, as a fraction
        #[arg(long, default_value_t = 0.25)]
        max_regression: f64,
    },
    /// Check every file a manifest references
    Verify {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(clap::Args)]
struct Input {
    /// Bare IQ file (needs --sample-rate-hz)
    #[arg(long, conflicts_with_all = ["manifest", "id"], requires = "sample_rate_hz")]
    input: Option<PathBuf>,
    #[arg(long)]
    sample_rate_hz: Option<f64>,
    /// Manifest holding the sample given by --id; its first mixture stream is used
    #[arg(long, requires = "id")]
    manifest: Option<PathBuf>,
    #[arg(long)]
    id: Option<String>,
}

impl Input {
    fn load(&self) -> Result<IqBuffer> {
        match (&self.input, &self.manifest, &self.id) {
            (Some(p), _, _) => iq::read_raw(p, self.sample_rate_hz.expect("clap enforces")),
            (None, Some(m), Some(id)) => {
                let manifest = load_manifest(m)?;
                Ok(read_sample(&manifest, root_of(m), id)?.mixture().clone())
            }
            _ => Err(HarnessError::validation("give --input or --manifest with --id")),
        }
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    match s {
        "ica" => Ok(Method::Ica),
        "nmf" => Ok(Method::Nmf),
        _ => Err(format!("unknown method {s:?} (ica, nmf)")),
    }
}

fn parse_grouping(s: &str) -> std::result::Result<Grouping, String> {
    match s {
        "sequential" => Ok(Grouping::Sequential),
        "oracle" => Ok(Grouping::Oracle),
        _ => Err(format!("unknown grouping {s:?} (sequential, oracle)")),
    }
}

fn root_of(manifest: &Path) -> &Path {
    manifest.parent().unwrap_or(Path::new("."))
}

// a reader that closes the pipe early (`| head`) is not an error
fn print_json<T: Serialize>(v: &T) {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn emit<T: Serialize>(v: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_json(p, v),
        None => {
            print_json(v);
            Ok(())
        }
    }
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| HarnessError::io(p, e))
}

#[derive(Serialize)]
struct GenOutput {
    standard: Standard,
    seed: u64,
    config: WaveformConfig,
    file: iq::FileEntry,
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen {
            standard,
            config,
            duration_s,
            seed,
            out,
        } => {
            let mut wf = match (standard, config) {
                (_, Some(p)) => read_json::<WaveformConfig>(&p)?,
                (Some(s), None) => WaveformConfig::default_for(s),
                (None, None) => return Err(HarnessError::validation("give --standard or --config")),
            };
            if let Some(d) = duration_s {
                wf = wf.covering(d)?;
            }
            let buf = wf.generate(&Rng::new(seed))?;
            let dir = root_of(&out);
            let name = out
                .file_name()
                .ok_or_else(|| HarnessError::validation("--out must name a file"))?
                .to_string_lossy()
                .into_owned();
            let file = iq::write(dir, &name, &buf)?;
            print_json(&GenOutput {
                standard: wf.standard(),
                seed,
                config: wf,
                file,
            });
        }
        Command::Mix { spec, out } => {
            let s: ScenarioSpec = read_json(&spec)?;
            create_dir(&out)?;
            let (entry, _) = write_sample(&out, &s.id, &s)?;
            let manifest = DatasetManifest {
                format_version: FORMAT_VERSION.to_string(),
                config_hash: iq::sha256_hex(&serde_json::to_vec(&s).expect("spec serializes")),
                samples: vec![entry],
            };
            let path = out.join(MANIFEST_FILE);
            fs::write(&path, manifest.to_bytes()).map_err(|e| HarnessError::io(&path, e))?;
            print_json(&manifest.samples[0].metrics);
        }
        Command::Dataset {
            plan,
            out,
            master_seed,
        } => {
            let mut p: Plan = read_json(&plan)?;
            if let Some(s) = master_seed {
                p.master_seed = s;
            }
            let (manifest, throughput) = generate_dataset(&p, &out)?;
            #[derive(Serialize)]
            struct Summary {
                n_samples: usize,
                manifest_hash: String,
                per_standard: std::collections::BTreeMap<Standard, usize>,
                throughput: rfmix_harness::dataset::ThroughputReport,
            }
            print_json(&Summary {
                n_samples: manifest.samples.len(),
                manifest_hash: manifest.hash(),
                per_standard: manifest.count_by_standard(),
                throughput,
            });
        }
        Command::Metrics { input, psd_csv: csv, out } => {
            let buf = input.load()?;
            if let Some(p) = csv {
                psd_csv(&psd_welch(&buf, segment_for(buf.len()), DEFAULT_OVERLAP)?, &p)?;
            }
            emit(&report(&buf)?, out.as_deref())?;
        }
        Command::Spectrogram {
            input,
            window,
            hop,
            csv,
            png,
            dynamic_range_db,
        } => {
            if csv.is_none() && png.is_none() {
                return Err(HarnessError::validation("give --csv and/or --png"));
            }
            let sg = stft_spectrogram(&input.load()?, window, hop)?;
            if let Some(p) = csv {
                spectrogram_csv(&sg, &p)?;
            }
            if let Some(p) = png {
                spectrogram_png(&sg, dynamic_range_db, &p)?;
            }
            eprintln!("{} frames x {} bins", sg.n_frames, sg.n_bins);
        }
        Command::Separate {
            manifest,
            id,
            method,
            seed,
            grouping,
            window,
            hop,
            strict,
            out,
            suite,
            seeds,
            sources,
            methods,
            suite_config,
        } => {
            if suite {
                let cfg = match suite_config {
                    Some(p) => read_json(&p)?,
                    None => SuiteConfig::default(),
                };
                let report = evaluate_suite(&methods, &cfg, &sources, seed, seeds)?;
                eprint!("{}", report.table());
                emit(&report, out.as_deref())?;
            } else {
                let (m, id) = (manifest.expect("clap enforces"), id.expect("clap enforces"));
                let manifest = load_manifest(&m)?;
                let sample = read_sample(&manifest, root_of(&m), &id)?;
                let result = separate_sample(&sample, method, seed, grouping, (window, hop), strict)?;
                if let Some(dir) = &out {
                    create_dir(dir)?;
                    for (k, e) in result.estimates.iter().enumerate() {
                        iq::write(dir, &format!("estimate{k}.iq"), e)?;
                    }
                }
                print_json(&result);
            }
        }
        Command::Bench {
            duration_s,
            min_wall_s,
            out,
            baseline,
            max_regression,
        } => {
            let report = bench_standards(&BenchConfig {
                duration_s,
                min_wall_s,
                ..Default::default()
            })?;
            emit(&report, out.as_deref())?;
            if let Some(b) = baseline {
                let base: BenchReport = read_json(&b)?;
                let slow = report.regressions(&base, max_regression);
                if !slow.is_empty() {
                    return Err(HarnessError::validation(format!(
                        "throughput regression beyond {:.0}%: {}",
                        100.0 * max_regression,
                        slow.join("; ")
                    )));
                }
            }
        }
        Command::Verify { manifest } => {
            let m = load_manifest(&manifest)?;
            let r = verify(&m, root_of(&manifest));
            print_json(&r);
            if !r.ok() {
                return Err(HarnessError::Integrity(format!(
                    "{} of {} files failed",
                    r.problems.len(),
                    r.n_files
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
