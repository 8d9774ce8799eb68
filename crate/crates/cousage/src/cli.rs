//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, invalid
//! configuration), 2 for data errors (unreadable or malformed input).

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cousage_core::baseline::{
    baseline_patterns, baseline_recommend, closed_itemsets, generate_rules,
    mine_frequent_itemsets_up_to, BaselineConfig,
};
use cousage_core::evaluation::{
    evaluate_folds, make_folds, mine_folds, sweep_dataset_size, sweep_max_epsilon,
};
use cousage_core::metrics::{is_informative, puc_indexed, INFORMATIVE_THRESHOLD};
use cousage_core::recommend::{eval_ranking, recommend, RecommendMode};
use cousage_core::{epsilon_dbscan, DependencyMatrix, LibraryId, MiningConfig, MiningResult};

use crate::clock::InstantClock;
use crate::error::{Error, Result};
use crate::matrix_io::{load_matrix, write_matrix, MatrixFormat};
use crate::reports::{self, join_libs};
use crate::result_json::{result_from_json, result_to_json};
use crate::viz::to_viz_json;

#[derive(Debug, Parser)]
#[command(
    name = "cousage",
    version,
    about = "Mine layered library co-usage patterns from dependency data"
)]
pub struct Cli {
    /// Seed for every random choice (folds, held-out splits, subsets)
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of worker threads [default: one per core]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log progress, including one line per clustering step
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a dependency matrix from CSV, JSON or a directory of manifests
    Ingest {
        /// Input file, or a directory of `<client>.xml` manifests
        #[arg(long)]
        input: PathBuf,
        /// Input format
        #[arg(long, value_enum)]
        format: MatrixFormat,
        /// Output matrix; `.csv` writes CSV, anything else JSON
        #[arg(long)]
        out: PathBuf,
        /// Drop libraries used by fewer clients
        #[arg(long, default_value_t = 2)]
        min_clients: usize,
        /// Drop clients using fewer libraries
        #[arg(long, default_value_t = 1)]
        min_libs: usize,
    },
    /// Mine layered co-usage patterns
    Mine {
        /// Dependency matrix: `.csv`, JSON, or a directory of manifests
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        mining: MiningArgs,
        /// Mining result (JSON)
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the cohesion of every mined pattern as CSV
    Metrics {
        /// Dependency matrix: `.csv`, JSON, or a directory of manifests
        #[arg(long)]
        matrix: PathBuf,
        /// Mining result written by `mine`
        #[arg(long)]
        result: PathBuf,
    },
    /// K-fold cross-validation of pattern cohesion and recommendation
    Cv {
        /// Dependency matrix: `.csv`, JSON, or a directory of manifests
        #[arg(long)]
        matrix: PathBuf,
        /// Number of folds
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        mining: MiningArgs,
        /// Cut-offs for recall@k
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,10")]
        ks: Vec<usize>,
        /// Which library set selects and scores patterns
        #[arg(long, value_enum, default_value_t = ModeArg::HoldoutSafe)]
        mode: ModeArg,
        /// Directory for the CV and ranking reports
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Mine once per max epsilon (or per dataset size) and tabulate
    Sweep {
        /// Dependency matrix: `.csv`, JSON, or a directory of manifests
        #[arg(long)]
        matrix: PathBuf,
        /// `start:end:step` range (inclusive) or comma-separated values
        #[arg(long, default_value = "0.05:0.95:0.05", value_parser = parse_range)]
        epsilons: EpsilonList,
        /// Distance increment between clustering steps
        #[arg(long, default_value_t = 0.05)]
        epsilon_step: f64,
        /// Minimum neighborhood size (the point itself included) of a core point
        #[arg(long, default_value_t = 2)]
        min_pts: usize,
        /// Sweep nested random library subsets of these sizes instead,
        /// mining each at --max-epsilon
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// Max epsilon for a dataset-size sweep
        #[arg(long, default_value_t = 0.5)]
        max_epsilon: f64,
        /// Add a wall_time_secs column (not reproducible across runs)
        #[arg(long)]
        with_timing: bool,
        /// Sweep table (CSV)
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank libraries to adopt alongside a set already in use
    Recommend {
        /// Dependency matrix: `.csv`, JSON, or a directory of manifests
        #[arg(long)]
        matrix: PathBuf,
        /// Mining result written by `mine`
        #[arg(long)]
        result: PathBuf,
        /// Libraries already in use
        #[arg(long, value_delimiter = ',', required = true)]
        seed_libs: Vec<String>,
        /// Number of recommendations to print
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Which library set selects and scores patterns
        #[arg(long, value_enum, default_value_t = ModeArg::HoldoutSafe)]
        mode: ModeArg,
        /// Reference set for faithful mode
        #[arg(long, value_delimiter = ',')]
        ground_truth: Option<Vec<String>>,
    },
    /// Association-rule and nearest-neighbor baseline
    Baseline {
        /// Dependency matrix: `.csv`, JSON, or a directory of manifests
        #[arg(long)]
        matrix: PathBuf,
        /// Minimum share of clients containing an itemset
        #[arg(long, default_value_t = 0.002)]
        minsup: f64,
        /// Minimum rule confidence
        #[arg(long, default_value_t = 0.8)]
        minconf: f64,
        /// Neighbor clients voting in collaborative filtering
        #[arg(long, default_value_t = 25)]
        neighbors: usize,
        /// Longest itemset explored
        #[arg(long, default_value_t = 4)]
        max_itemset_len: usize,
        /// Libraries in use; prints baseline recommendations for them
        #[arg(long, value_delimiter = ',')]
        target: Option<Vec<String>>,
        /// Number of recommendations to print
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Directory for rules.csv and baseline_patterns.csv
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Export patterns as a JSON hierarchy for the explorer
    ExportViz {
        /// Dependency matrix: `.csv`, JSON, or a directory of manifests
        #[arg(long)]
        matrix: PathBuf,
        /// Mining result written by `mine`
        #[arg(long)]
        result: PathBuf,
        /// Hierarchy JSON
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct MiningArgs {
    /// Clustering stops below this distance
    #[arg(long, default_value_t = 0.5)]
    pub max_epsilon: f64,
    /// Distance increment between clustering steps
    #[arg(long, default_value_t = 0.05)]
    pub epsilon_step: f64,
    /// Minimum neighborhood size (the point itself included) of a core point
    #[arg(long, default_value_t = 2)]
    pub min_pts: usize,
}

impl MiningArgs {
    fn config(&self) -> Result<MiningConfig> {
        let cfg = MiningConfig {
            max_epsilon: self.max_epsilon,
            epsilon_step: self.epsilon_step,
            min_pts: self.min_pts,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Select and score patterns by the libraries already in use
    HoldoutSafe,
    /// Select and score by the ground-truth set (evaluation replication)
    Faithful,
}

impl From<ModeArg> for RecommendMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::HoldoutSafe => RecommendMode::HoldoutSafe,
            ModeArg::Faithful => RecommendMode::Faithful,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonList(pub Vec<f64>);

/// Parses `start:end:step` (end inclusive) or a comma-separated list.
pub fn parse_range(s: &str) -> std::result::Result<EpsilonList, String> {
    let number = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("not a number: {t:?}"))
    };
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, end, step] = parts[..] else {
            return Err(format!("expected start:end:step, got {s:?}"));
        };
        let (start, end, step) = (number(start)?, number(end)?, number(step)?);
        if step <= 0.0 || start > end {
            return Err(format!("empty range {s:?}"));
        }
        let mut out = Vec::new();
        let mut i = 0u32;
        loop {
            let x = ((start + f64::from(i) * step) * 1e12).round() / 1e12;
            if x > end + 1e-9 {
                break;
            }
            out.push(x);
            i += 1;
        }
        out
    } else {
        s.split(',')
            .map(number)
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err("values must be strictly ascending".into());
    }
    Ok(EpsilonList(values))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                1
            } else {
                2
            }
        }
    }
}

fn matrix_at(path: &Path) -> Result<DependencyMatrix> {
    load_matrix(path, MatrixFormat::from_path(path))
}

fn result_at(path: &Path, m: &DependencyMatrix) -> Result<MiningResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    result_from_json(&text, m, path)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn lib_set(names: &[String]) -> Result<BTreeSet<LibraryId>> {
    names
        .iter()
        .map(|n| LibraryId::new(n).map_err(|e| Error::Usage(e.to_string())))
        .collect()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.4}"))
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()));
        }
        if rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .is_err()
        {
            log::debug!("thread pool already initialized");
        }
    }
    let seed = cli.seed;
    match cli.command {
        Command::Ingest {
            input,
            format,
            out,
            min_clients,
            min_libs,
        } => {
            let out_format = match MatrixFormat::from_path(&out) {
                MatrixFormat::Csv => MatrixFormat::Csv,
                _ => MatrixFormat::Json,
            };
            let m = load_matrix(&input, format)?.filter(min_clients, min_libs)?;
            write_matrix(&m, &out, out_format)?;
            let s = m.stats();
            println!(
                "clients={} libraries={} avg_libs_per_client={:.4} median_libs_per_client={}",
                s.client_count, s.library_count, s.avg_libs_per_client, s.median_libs_per_client
            );
        }
        Command::Mine {
            matrix,
            mining,
            out,
        } => {
            let cfg = mining.config()?;
            let m = matrix_at(&matrix)?;
            let r = epsilon_dbscan(&m, &cfg)?;
            write_file(&out, &result_to_json(&r))?;
            println!("patterns={} noise={}", r.patterns.len(), r.noise.len());
        }
        Command::Metrics { matrix, result } => {
            let m = matrix_at(&matrix)?;
            let r = result_at(&result, &m)?;
            println!("pattern,size,clients,epsilon,puc,informative,members");
            let mut pucs = Vec::new();
            for (i, p) in r.patterns.iter().enumerate() {
                let libs = m.library_indices(p.members())?;
                let puc = puc_indexed(&libs, &m, None);
                pucs.extend(puc);
                println!(
                    "{},{},{},{},{},{},{}",
                    i + 1,
                    p.len(),
                    p.root().vector().cardinality(),
                    p.epsilon(),
                    puc.map(|v| v.to_string()).unwrap_or_default(),
                    puc.is_some_and(|v| is_informative(v, INFORMATIVE_THRESHOLD)),
                    join_libs(p.members())
                );
            }
            let avg = (!pucs.is_empty()).then(|| pucs.iter().sum::<f64>() / pucs.len() as f64);
            println!("# patterns={} avg_puc={}", r.patterns.len(), fmt_opt(avg));
        }
        Command::Cv {
            matrix,
            k,
            mining,
            ks,
            mode,
            out_dir,
        } => {
            let cfg = mining.config()?;
            if ks.is_empty() || ks.contains(&0) {
                return Err(Error::Usage("--ks needs positive cut-offs".into()));
            }
            let m = matrix_at(&matrix)?;
            let plan = make_folds(m.clients(), k, seed).map_err(|e| Error::Usage(e.to_string()))?;
            let folds = mine_folds(&m, &cfg, &plan)?;
            let cv = evaluate_folds(&m, &plan, &folds)?;
            let ranking = eval_ranking(&plan, &m, &folds, &ks, seed, mode.into())?;
            reports::write_reports(&out_dir, Some(&cv), None, Some(&ranking))?;
            let a = &cv.aggregate;
            println!(
                "runs={} avg_eligible={:.2} puc_training={} puc_validation={} consistency={} precision={}",
                cv.runs.len(),
                a.avg_eligible_count,
                fmt_opt(a.avg_puc_training),
                fmt_opt(a.avg_puc_validation),
                fmt_opt(a.avg_consistency),
                fmt_opt(a.avg_precision)
            );
            let recall: Vec<String> = ranking
                .recall_at_k
                .iter()
                .map(|(k, r)| format!("recall@{k}={r:.4}"))
                .collect();
            println!(
                "{} mrr={:.4} systems={} skipped={}",
                recall.join(" "),
                ranking.mrr,
                ranking.system_count,
                ranking.skipped
            );
        }
        Command::Sweep {
            matrix,
            epsilons,
            epsilon_step,
            min_pts,
            sizes,
            max_epsilon,
            with_timing,
            out,
        } => {
            let clock = InstantClock::new();
            let report = match sizes {
                Some(sizes) => {
                    let cfg = MiningArgs {
                        max_epsilon,
                        epsilon_step,
                        min_pts,
                    }
                    .config()?;
                    let m = matrix_at(&matrix)?;
                    sweep_dataset_size(&m, &sizes, &cfg, seed, &clock)
                        .map_err(|e| Error::Usage(e.to_string()))?
                }
                None => {
                    for &e in &epsilons.0 {
                        if e >= epsilon_step {
                            MiningArgs {
                                max_epsilon: e,
                                epsilon_step,
                                min_pts,
                            }
                            .config()?;
                        }
                    }
                    let m = matrix_at(&matrix)?;
                    sweep_max_epsilon(&m, &epsilons.0, epsilon_step, min_pts, &clock)?
                }
            };
            write_file(&out, &reports::sweep_csv(&report, with_timing))?;
            println!("rows={}", report.rows.len());
        }
        Command::Recommend {
            matrix,
            result,
            seed_libs,
            k,
            mode,
            ground_truth,
        } => {
            let seed_set = lib_set(&seed_libs)?;
            let truth = ground_truth.as_deref().map(lib_set).transpose()?;
            if mode == ModeArg::Faithful && truth.is_none() {
                return Err(Error::Usage("--mode faithful needs --ground-truth".into()));
            }
            let m = matrix_at(&matrix)?;
            let r = result_at(&result, &m)?;
            let rec = recommend(&seed_set, truth.as_ref(), &r, &m, k, mode.into())?;
            println!("rank,library,score");
            for (i, (lib, score)) in rec.ranked.iter().enumerate() {
                println!("{},{},{}", i + 1, lib, score);
            }
        }
        Command::Baseline {
            matrix,
            minsup,
            minconf,
            neighbors,
            max_itemset_len,
            target,
            k,
            out_dir,
        } => {
            let cfg = BaselineConfig {
                minsup,
                minconf,
                neighbors,
                max_itemset_len: Some(max_itemset_len),
            };
            cfg.validate()?;
            let target = target.as_deref().map(lib_set).transpose()?;
            let m = matrix_at(&matrix)?;
            let frequent = mine_frequent_itemsets_up_to(&m, cfg.minsup, cfg.max_itemset_len)?;
            let closed = closed_itemsets(&frequent);
            let rules = generate_rules(&closed, cfg.minconf)?;
            let patterns = baseline_patterns(&rules);

            fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            write_file(
                &out_dir.join(reports::RULES_FILE),
                &reports::rules_csv(&rules),
            )?;
            let mut text = String::from("pattern,size,puc,members\n");
            let mut pucs = Vec::new();
            for (i, p) in patterns.iter().enumerate() {
                let libs = m.library_indices(p)?;
                let puc = puc_indexed(&libs, &m, None);
                pucs.extend(puc);
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    i + 1,
                    p.len(),
                    puc.map(|v| v.to_string()).unwrap_or_default(),
                    join_libs(p)
                ));
            }
            write_file(&out_dir.join("baseline_patterns.csv"), &text)?;
            let avg = (!pucs.is_empty()).then(|| pucs.iter().sum::<f64>() / pucs.len() as f64);
            println!(
                "frequent={} closed={} rules={} patterns={} avg_puc={}",
                frequent.len(),
                closed.len(),
                rules.len(),
                patterns.len(),
                fmt_opt(avg)
            );
            if let Some(target) = target {
                let rec = baseline_recommend(&target, &rules, &m, cfg.neighbors, k)?;
                println!("rank,library,score");
                for (i, (lib, score)) in rec.ranked.iter().enumerate() {
                    println!("{},{},{}", i + 1, lib, score);
                }
            }
        }
        Command::ExportViz {
            matrix,
            result,
            out,
        } => {
            let m = matrix_at(&matrix)?;
            let r = result_at(&result, &m)?;
            write_file(&out, &to_viz_json(&r, &m)?)?;
        }
    }
    Ok(())
}
