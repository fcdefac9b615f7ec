//! Command-line front end. [`run`] executes a parsed command and writes its
//! report; the binary maps errors onto exit codes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::domination::{DominationSolver, SolverKind, SolverOutput};
use crate::error::{Error, Result};
use crate::generators::{self, BaseScheme};
use crate::harness::{self, SuccessEstimate, DEFAULT_ALPHA, DEFAULT_R_MAX, DEFAULT_TARGET_P, DEFAULT_TRIALS};
use crate::info::{info_vec, lb_domination, lb_topk, InfoReport, LowerBound};
use crate::io::{self, Instance};
use crate::model::{domination_from_topk, embed_domination};
use crate::oracles;
use crate::rng::{Domain, StreamKey};
use crate::samples::{sample_domination, sample_topk, SampleDump};
use crate::topk::{solve_topk, TournamentStats};

#[derive(Debug, Parser)]
#[command(name = "sst-topk", version, about = "Top-K and Domination solvers for noisy pairwise comparisons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Diag,
    Countingfails,
    Maxfails,
    Countingfails2,
    Maxfails2,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Half,
    Ramp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleWhat {
    SuccessCount,
    SuccessMax,
    SuccessBayes,
    Mi,
}

/// Flags shared by most subcommands.
#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance file.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        /// Inclusion probability of the hard family.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, value_enum, default_value_t = Scheme::Half)]
        scheme: Scheme,
        /// For `hard`: write the drawn perturbation sets here.
        #[arg(long)]
        meta: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Information content and lower bounds of an instance.
    Info {
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sample once and run a Domination solver.
    SolveDomination {
        instance: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long, value_parser = parse_kind)]
        algo: SolverKind,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// 1-based coordinates for `subset`, comma separated.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<usize>>,
        /// Debug only: write the sampled bit matrices as hex rows.
        #[arg(long)]
        dump_samples: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Sample once and run the Top-K solver.
    SolveTopk {
        instance: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Exact success probability or mutual information on a small instance.
    Oracle {
        instance: PathBuf,
        #[arg(long, value_enum)]
        what: OracleWhat,
        #[arg(long)]
        r: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo success probability at a fixed `r`.
    EstimateSuccess {
        instance: PathBuf,
        #[arg(long)]
        r: usize,
        /// Domination solver, or `bayes`. Ignored for Top-K instances.
        #[arg(long, default_value = "count")]
        algo: String,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<usize>>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Empirical smallest `r` reaching a success target.
    EstimateRmin {
        instance: PathBuf,
        #[arg(long, default_value = "count", value_parser = parse_kind)]
        algo: SolverKind,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<usize>>,
        #[arg(long, default_value_t = DEFAULT_TARGET_P)]
        target_p: f64,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_R_MAX)]
        r_max: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Competitive ratios of several solvers against the lower bound.
    Report {
        instance: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "count,max,comb,cube,coup", value_parser = parse_kind)]
        algos: Vec<SolverKind>,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_TARGET_P)]
        target_p: f64,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_R_MAX)]
        r_max: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_kind(s: &str) -> std::result::Result<SolverKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn instance_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into())
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn json_text<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn json_only(common: &Common, what: &str) -> Result<()> {
    if common.format == Format::Csv {
        return Err(Error::Parameter(format!("{what} supports only --format json")));
    }
    Ok(())
}

fn subset_from_cli(subset: Option<Vec<usize>>) -> Result<Option<Vec<usize>>> {
    subset
        .map(|v| {
            v.into_iter()
                .map(|i| {
                    i.checked_sub(1).ok_or_else(|| Error::Parameter("subset coordinates are 1-based".into()))
                })
                .collect()
        })
        .transpose()
}

fn need<T>(v: Option<T>, flag: &str, family: &str) -> Result<T> {
    v.ok_or_else(|| Error::Parameter(format!("--{flag} is required for family {family}")))
}

fn gen(
    family: Family,
    n: usize,
    k: Option<usize>,
    eps: Option<f64>,
    gamma: Option<f64>,
    scheme: Scheme,
    meta: Option<&Path>,
    seed: u64,
) -> Result<Instance> {
    Ok(match family {
        Family::Diag => Instance::TopK(generators::gen_diag_eps(n, need(k, "k", "diag")?, need(eps, "eps", "diag")?)?),
        Family::Countingfails => Instance::Domination(generators::gen_countingfails(
            n,
            need(k, "k", "countingfails")?,
            need(eps, "eps", "countingfails")?,
            None,
        )?),
        Family::Maxfails => Instance::Domination(generators::gen_maxfails(n, eps)?),
        Family::Countingfails2 => {
            Instance::Domination(generators::gen_countingfails2(n, need(eps, "eps", "countingfails2")?)?)
        }
        Family::Maxfails2 => Instance::Domination(generators::gen_maxfails2(n, need(eps, "eps", "maxfails2")?)?),
        Family::Hard => {
            let scheme = match scheme {
                Scheme::Half => BaseScheme::ConstantHalf,
                Scheme::Ramp => BaseScheme::EmbeddingRamp,
            };
            let draw = generators::draw_hard(n, gamma, eps, scheme, StreamKey::new(seed, 0))?;
            if let Some(path) = meta {
                let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
                let m = json!({
                    "s_p": one_based(&draw.s_p),
                    "s_q": one_based(&draw.s_q),
                    "gamma": draw.gamma,
                    "eps": draw.eps,
                    "r_base": draw.r_base,
                });
                fs::write(path, json_text(&m)?)?;
            }
            Instance::Domination(draw.instance)
        }
    })
}

#[derive(Debug, Serialize)]
struct InfoOutput {
    #[serde(flatten)]
    report: InfoReport,
    lb_domination: LowerBound,
    /// Absent when the instance has no valid Top-K form.
    lb_topk: Option<LowerBound>,
}

fn info(instance: &Instance) -> InfoOutput {
    match instance {
        Instance::Domination(d) => InfoOutput {
            report: info_vec(d),
            lb_domination: lb_domination(d),
            lb_topk: embed_domination(d).ok().map(|t| lb_topk(&t)),
        },
        Instance::TopK(t) => {
            let d = domination_from_topk(t);
            InfoOutput { report: info_vec(&d), lb_domination: lb_domination(&d), lb_topk: Some(lb_topk(t)) }
        }
    }
}

#[derive(Debug, Serialize)]
struct DominationRun {
    solver: String,
    r: usize,
    seed: u64,
    #[serde(flatten)]
    output: SolverOutput,
    hidden_bit: u8,
    correct: bool,
}

#[derive(Debug, Serialize)]
struct TopKRun {
    r: usize,
    seed: u64,
    labels: Vec<usize>,
    stats: TournamentStats,
    true_top: Vec<usize>,
    correct: bool,
}

#[derive(Debug, Serialize)]
struct OracleOutput {
    what: &'static str,
    r: usize,
    value: f64,
    cost: u64,
}

fn success_csv(e: &SuccessEstimate) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trials", "successes", "p_hat", "wilson_low", "wilson_high", "seed"])?;
    w.write_record([
        e.trials.to_string(),
        e.successes.to_string(),
        e.p_hat.to_string(),
        e.wilson_low.to_string(),
        e.wilson_high.to_string(),
        e.seed.to_string(),
    ])?;
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("utf-8"))
}

fn render_report(report: &harness::CompetitiveReport, format: Format) -> Result<String> {
    match format {
        Format::Json => json_text(report),
        Format::Csv => report.to_csv(),
    }
}

/// Executes one command and writes its output.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { family, n, k, eps, gamma, scheme, meta, common } => {
            json_only(&common, "gen")?;
            let inst = gen(family, n, k, eps, gamma, scheme, meta.as_deref(), common.seed)?;
            emit(&common, &io::to_json(&inst))
        }
        Command::Info { instance, common } => {
            json_only(&common, "info")?;
            emit(&common, &json_text(&info(&io::read_instance(&instance)?))?)
        }
        Command::SolveDomination { instance, r, algo, alpha, subset, dump_samples, common } => {
            json_only(&common, "solve-domination")?;
            let d = io::read_domination(&instance)?;
            let solver = algo.with_params(alpha, subset_from_cli(subset)?)?;
            let key = StreamKey::new(common.seed, 0);
            let (samples, truth) = sample_domination(&d, r, key)?;
            if let Some(path) = dump_samples {
                fs::write(path, json_text(&SampleDump::from(&samples))?)?;
            }
            let output = solver.solve(&samples, &mut key.rng(Domain::Solver, 0))?;
            let hidden_bit = truth.hidden_bit().expect("domination truth");
            let run = DominationRun {
                solver: solver.name().into(),
                r,
                seed: common.seed,
                correct: output.guess == hidden_bit,
                output,
                hidden_bit,
            };
            emit(&common, &json_text(&run)?)
        }
        Command::SolveTopk { instance, r, alpha, common } => {
            json_only(&common, "solve-topk")?;
            let t = io::read_topk(&instance)?;
            let key = StreamKey::new(common.seed, 0);
            let (samples, truth) = sample_topk(&t, r, key)?;
            let (labels, stats) = solve_topk(&samples, t.k(), alpha, &mut key.rng(Domain::Solver, 0))?;
            let pi = truth.permutation().expect("top-k truth");
            let mut true_top: Vec<usize> = (0..t.k()).map(|rank| pi.forward(rank)).collect();
            true_top.sort_unstable();
            let run = TopKRun { r, seed: common.seed, correct: labels == true_top, labels, stats, true_top };
            emit(&common, &json_text(&run)?)
        }
        Command::Oracle { instance, what, r, common } => {
            json_only(&common, "oracle")?;
            let d = io::read_domination(&instance)?;
            let (name, v) = match what {
                OracleWhat::SuccessCount => ("success-count", oracles::exact_success_count(&d, r)?),
                OracleWhat::SuccessMax => ("success-max", oracles::exact_success_max(&d, r)?),
                OracleWhat::SuccessBayes => ("success-bayes", oracles::exact_success_bayes(&d, r)?),
                OracleWhat::Mi => ("mi", oracles::exact_mutual_information(&d, r)?),
            };
            emit(&common, &json_text(&OracleOutput { what: name, r, value: v.value, cost: v.cost })?)
        }
        Command::EstimateSuccess { instance, r, algo, alpha, subset, trials, common } => {
            let est = match io::read_instance(&instance)? {
                Instance::TopK(t) => harness::estimate_success_topk(&t, alpha, r, trials, common.seed)?,
                Instance::Domination(d) if algo == "bayes" => {
                    harness::estimate_success_bayes(&d, r, trials, common.seed)?
                }
                Instance::Domination(d) => {
                    let solver = algo.parse::<SolverKind>()?.with_params(alpha, subset_from_cli(subset)?)?;
                    harness::estimate_success(&solver, &d, r, trials, common.seed)?
                }
            };
            let text = match common.format {
                Format::Json => json_text(&est)?,
                Format::Csv => success_csv(&est)?,
            };
            emit(&common, &text)
        }
        Command::EstimateRmin { instance, algo, alpha, subset, target_p, trials, r_max, common } => {
            let id = instance_id(&instance);
            let report = match io::read_instance(&instance)? {
                Instance::TopK(t) => {
                    harness::competitive_report_topk(&t, &id, alpha, target_p, trials, common.seed, r_max)?
                }
                Instance::Domination(d) => {
                    let solver: DominationSolver = algo.with_params(alpha, subset_from_cli(subset)?)?;
                    harness::competitive_report(&d, &id, &[solver], target_p, trials, common.seed, r_max)?
                }
            };
            let text = match common.format {
                Format::Json => json_text(&report.rows[0].estimate)?,
                Format::Csv => report.to_csv()?,
            };
            emit(&common, &text)
        }
        Command::Report { instance, algos, alpha, target_p, trials, r_max, common } => {
            let id = instance_id(&instance);
            let report = match io::read_instance(&instance)? {
                Instance::TopK(t) => {
                    harness::competitive_report_topk(&t, &id, alpha, target_p, trials, common.seed, r_max)?
                }
                Instance::Domination(d) => {
                    let solvers =
                        algos.into_iter().map(|a| a.with_params(alpha, None)).collect::<Result<Vec<_>>>()?;
                    harness::competitive_report(&d, &id, &solvers, target_p, trials, common.seed, r_max)?
                }
            };
            emit(&common, &render_report(&report, common.format)?)
        }
    }
}
