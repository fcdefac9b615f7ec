//! Monte Carlo estimation of success probabilities, empirical `r_min`
//! search and competitive-ratio reports.
//!
//! Trial `t` of an estimate draws everything from the stream key
//! `(seed, t)`, so results do not depend on how the work pool schedules
//! trials.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::domination::DominationSolver;
use crate::error::{Error, Result};
use crate::info::{lb_domination, lb_topk};
use crate::model::{DominationInstance, TopKInstance};
use crate::oracles;
use crate::rng::{Domain, StreamKey};
use crate::samples::{sample_domination, sample_topk};
use crate::topk::{solve_topk, topk_min_r};

pub const DEFAULT_TARGET_P: f64 = 0.75;
pub const DEFAULT_ALPHA: f64 = 0.25;
pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_R_MAX: usize = 1 << 26;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Normal quantile for a two-sided interval at `confidence`.
pub fn z_for(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Parameter(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + confidence / 2.0))
}

/// Wilson score interval for `successes` out of `trials` at quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // clamp so that rounding never pushes the bounds past p_hat or [0, 1]
    ((centre - half).clamp(0.0, p), (centre + half).clamp(p, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuccessEstimate {
    pub trials: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub seed: u64,
}

impl SuccessEstimate {
    pub fn from_counts(successes: u64, trials: u64, seed: u64) -> Self {
        let (wilson_low, wilson_high) = wilson_interval(successes, trials, Z95);
        SuccessEstimate { trials, successes, p_hat: successes as f64 / trials as f64, wilson_low, wilson_high, seed }
    }

    /// Interval at a different confidence level over the same counts.
    pub fn interval(&self, confidence: f64) -> Result<(f64, f64)> {
        Ok(wilson_interval(self.successes, self.trials, z_for(confidence)?))
    }
}

/// Runs `trial(key)` for stream ids `0..trials` on the work pool and counts
/// successes. The first failing trial in index order aborts the estimate.
pub fn run_trials<F>(trials: usize, seed: u64, trial: F) -> Result<SuccessEstimate>
where
    F: Fn(StreamKey) -> Result<bool> + Sync,
{
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let outcomes: Vec<Result<bool>> =
        (0..trials as u64).into_par_iter().map(|t| trial(StreamKey::new(seed, t))).collect();
    let mut successes = 0u64;
    for (t, outcome) in outcomes.into_iter().enumerate() {
        if outcome.map_err(|e| e.context(&format!("trial {t}")))? {
            successes += 1;
        }
    }
    Ok(SuccessEstimate::from_counts(successes, trials as u64, seed))
}

/// Success probability of a Domination solver at `r` columns.
pub fn estimate_success(
    solver: &DominationSolver,
    instance: &DominationInstance,
    r: usize,
    trials: usize,
    seed: u64,
) -> Result<SuccessEstimate> {
    run_trials(trials, seed, |key| {
        let (samples, truth) = sample_domination(instance, r, key)?;
        let out = solver.solve(&samples, &mut key.rng(Domain::Solver, 0))?;
        Ok(Some(out.guess) == truth.hidden_bit())
    })
}

/// Success probability of the maximum a posteriori rule.
pub fn estimate_success_bayes(
    instance: &DominationInstance,
    r: usize,
    trials: usize,
    seed: u64,
) -> Result<SuccessEstimate> {
    run_trials(trials, seed, |key| {
        let (samples, truth) = sample_domination(instance, r, key)?;
        let guess = oracles::bayes_decide(instance, &samples, &mut key.rng(Domain::Solver, 0));
        Ok(Some(guess) == truth.hidden_bit())
    })
}

/// Success probability of `solve_topk`: a trial succeeds when the returned
/// set equals the true top `k` labels.
pub fn estimate_success_topk(
    instance: &TopKInstance,
    alpha: f64,
    r: usize,
    trials: usize,
    seed: u64,
) -> Result<SuccessEstimate> {
    let k = instance.k();
    run_trials(trials, seed, |key| {
        let (samples, truth) = sample_topk(instance, r, key)?;
        let (top, _) = solve_topk(&samples, k, alpha, &mut key.rng(Domain::Solver, 0))?;
        let pi = truth.permutation().expect("top-k truth is a permutation");
        let want: HashSet<usize> = (0..k).map(|rank| pi.forward(rank)).collect();
        Ok(top.len() == k && top.iter().all(|l| want.contains(l)))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RminStep {
    pub r: usize,
    pub phase: SearchPhase,
    pub crossed: bool,
    pub estimate: SuccessEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchPhase {
    Doubling,
    Bisection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RminEstimate {
    pub solver: String,
    pub instance: String,
    pub target_p: f64,
    /// `None` when the target was not reached below the cap.
    pub r_hat: Option<usize>,
    /// Largest tested (or untestable) `r` known to miss the target.
    pub r_low: usize,
    pub r_high: Option<usize>,
    pub trials_per_point: usize,
    pub decision_rule: String,
    pub transcript: Vec<RminStep>,
}

impl RminEstimate {
    pub fn reached(&self) -> bool {
        self.r_hat.is_some()
    }
}

/// Search settings for [`estimate_rmin_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RminSearch {
    pub target_p: f64,
    pub trials_per_point: usize,
    pub seed: u64,
    /// First `r` tried; solvers with a structural minimum start there.
    pub r_start: usize,
    pub r_max: usize,
}

/// Doubling then bisection on `r`, where `eval(r)` estimates the success
/// probability. A point counts as crossed when its Wilson lower bound is at
/// least the target; bisection stops once `(r_high - r_low) <= r_high / 10`.
pub fn estimate_rmin_with<F>(search: RminSearch, mut eval: F) -> Result<(Option<usize>, usize, Vec<RminStep>)>
where
    F: FnMut(usize) -> Result<SuccessEstimate>,
{
    let target = search.target_p;
    if !(target > 0.5 && target < 1.0) {
        return Err(Error::Parameter(format!("target_p must lie in (0.5, 1), got {target}")));
    }
    if search.r_start == 0 || search.r_start > search.r_max {
        return Err(Error::Parameter(format!(
            "start r = {} must lie in [1, r_max = {}]",
            search.r_start, search.r_max
        )));
    }
    let mut transcript = Vec::new();
    let mut test = |r: usize, phase: SearchPhase, transcript: &mut Vec<RminStep>| -> Result<bool> {
        let estimate = eval(r)?;
        let crossed = estimate.wilson_low >= target;
        transcript.push(RminStep { r, phase, crossed, estimate });
        Ok(crossed)
    };

    let mut lo = search.r_start - 1;
    let mut r = search.r_start;
    let hi = loop {
        if test(r, SearchPhase::Doubling, &mut transcript)? {
            break r;
        }
        lo = r;
        if r >= search.r_max {
            return Ok((None, lo, transcript));
        }
        r = r.saturating_mul(2).min(search.r_max);
    };
    let mut hi = hi;
    while hi - lo > 1 && (hi - lo) * 10 > hi {
        let mid = lo + (hi - lo) / 2;
        if test(mid, SearchPhase::Bisection, &mut transcript)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((Some(hi), lo, transcript))
}

fn decision_rule(target: f64) -> String {
    format!("crossed when the 95% Wilson lower bound is at least {target}")
}

/// Empirical `r_min` of a Domination solver.
pub fn estimate_rmin(
    solver: &DominationSolver,
    instance: &DominationInstance,
    instance_id: &str,
    target_p: f64,
    trials_per_point: usize,
    seed: u64,
    r_max: usize,
) -> Result<RminEstimate> {
    let search =
        RminSearch { target_p, trials_per_point, seed, r_start: solver.min_r(instance.n())?.max(1), r_max };
    let (r_hat, r_low, transcript) =
        estimate_rmin_with(search, |r| estimate_success(solver, instance, r, trials_per_point, seed))?;
    Ok(RminEstimate {
        solver: solver.name().to_string(),
        instance: instance_id.to_string(),
        target_p,
        r_hat,
        r_low,
        r_high: r_hat,
        trials_per_point,
        decision_rule: decision_rule(target_p),
        transcript,
    })
}

/// Empirical `r_min` of `solve_topk`.
pub fn estimate_rmin_topk(
    instance: &TopKInstance,
    instance_id: &str,
    alpha: f64,
    target_p: f64,
    trials_per_point: usize,
    seed: u64,
    r_max: usize,
) -> Result<RminEstimate> {
    let search = RminSearch { target_p, trials_per_point, seed, r_start: topk_min_r(instance.n(), alpha)?, r_max };
    let (r_hat, r_low, transcript) =
        estimate_rmin_with(search, |r| estimate_success_topk(instance, alpha, r, trials_per_point, seed))?;
    Ok(RminEstimate {
        solver: "topk".into(),
        instance: instance_id.to_string(),
        target_p,
        r_hat,
        r_low,
        r_high: r_hat,
        trials_per_point,
        decision_rule: decision_rule(target_p),
        transcript,
    })
}

/// Smallest `r` at which the Bayes rule reaches `target_p` exactly, scanning
/// upward while enumeration stays within the oracle limits.
pub fn exact_bayes_rmin(instance: &DominationInstance, target_p: f64) -> Option<usize> {
    let mut r = 1;
    while let Ok(v) = oracles::exact_success_bayes(instance, r) {
        if v.value >= target_p {
            return Some(r);
        }
        r += 1;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub solver: String,
    pub estimate: RminEstimate,
    /// `r_hat / baseline_lb`; absent when the target was not reached.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompetitiveReport {
    pub instance: String,
    pub target_p: f64,
    pub baseline_lb: f64,
    /// Exact optimum `r` of the Bayes rule, when small enough to enumerate.
    pub bayes_rmin: Option<usize>,
    pub rows: Vec<ReportRow>,
}

pub const CSV_HEADER: [&str; 9] =
    ["instance", "solver", "target_p", "r_hat", "r_low", "r_high", "trials", "baseline_lb", "ratio"];

fn baseline(lb: crate::info::LowerBound) -> Result<f64> {
    lb.finite()
        .filter(|&x| x > 0.0)
        .ok_or_else(|| Error::Precondition("lower bound is unbounded: the instance carries no information".into()))
}

fn assemble(
    instance: &str,
    target_p: f64,
    baseline_lb: f64,
    bayes_rmin: Option<usize>,
    estimates: Vec<RminEstimate>,
) -> CompetitiveReport {
    let rows = estimates
        .into_iter()
        .map(|e| ReportRow { solver: e.solver.clone(), ratio: e.r_hat.map(|r| r as f64 / baseline_lb), estimate: e })
        .collect();
    CompetitiveReport { instance: instance.to_string(), target_p, baseline_lb, bayes_rmin, rows }
}

/// Runs the `r_min` search for every solver and relates the results to the
/// information-theoretic lower bound.
pub fn competitive_report(
    instance: &DominationInstance,
    instance_id: &str,
    solvers: &[DominationSolver],
    target_p: f64,
    trials_per_point: usize,
    seed: u64,
    r_max: usize,
) -> Result<CompetitiveReport> {
    let baseline_lb = baseline(lb_domination(instance))?;
    let estimates = solvers
        .iter()
        .map(|s| estimate_rmin(s, instance, instance_id, target_p, trials_per_point, seed, r_max))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(instance_id, target_p, baseline_lb, exact_bayes_rmin(instance, target_p), estimates))
}

pub fn competitive_report_topk(
    instance: &TopKInstance,
    instance_id: &str,
    alpha: f64,
    target_p: f64,
    trials_per_point: usize,
    seed: u64,
    r_max: usize,
) -> Result<CompetitiveReport> {
    let baseline_lb = baseline(lb_topk(instance))?;
    let e = estimate_rmin_topk(instance, instance_id, alpha, target_p, trials_per_point, seed, r_max)?;
    Ok(assemble(instance_id, target_p, baseline_lb, None, vec![e]))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl CompetitiveReport {
    /// CSV with the documented header; unreached targets leave `r_hat`,
    /// `r_high` and `ratio` empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            let e = &row.estimate;
            w.write_record([
                self.instance.clone(),
                row.solver.clone(),
                self.target_p.to_string(),
                opt(e.r_hat),
                e.r_low.to_string(),
                opt(e.r_high),
                e.trials_per_point.to_string(),
                self.baseline_lb.to_string(),
                opt(row.ratio),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn wilson_known_values() {
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert_abs_diff_eq!(lo, 0.403_831_9, epsilon = 1e-6);
        assert_abs_diff_eq!(hi, 0.596_168_1, epsilon = 1e-6);
        let (lo, hi) = wilson_interval(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert_abs_diff_eq!(hi, 0.277_532, epsilon = 1e-6);
        assert_eq!(wilson_interval(10, 10, Z95).1, 1.0);
        assert_abs_diff_eq!(z_for(0.95).unwrap(), Z95, epsilon = 1e-9);
        assert_abs_diff_eq!(z_for(0.9999).unwrap(), 3.890_591_886, epsilon = 1e-6);
    }

    #[test]
    fn trivial_instance_always_solved() {
        let d = DominationInstance::new(vec![1.0], vec![0.0]).unwrap();
        let e = estimate_success(&DominationSolver::Count, &d, 1, 100, 7).unwrap();
        assert_eq!(e.p_hat, 1.0);
        let r = estimate_rmin(&DominationSolver::Count, &d, "trivial", 0.75, 200, 1, DEFAULT_R_MAX).unwrap();
        assert_eq!(r.r_hat, Some(1));
        assert_eq!(r.r_low, 0);
    }

    #[test]
    fn uninformative_instance_is_a_coin() {
        let d = DominationInstance::new(vec![0.5, 0.3], vec![0.5, 0.3]).unwrap();
        let e = estimate_success(&DominationSolver::Max, &d, 8, 10_000, 3).unwrap();
        assert!(e.wilson_low <= 0.5 && 0.5 <= e.wilson_high, "{e:?}");
    }

    #[test]
    fn not_reached_is_reported() {
        let d = DominationInstance::new(vec![0.5], vec![0.5]).unwrap();
        let r = estimate_rmin(&DominationSolver::Count, &d, "flat", 0.75, 100, 0, 16).unwrap();
        assert_eq!(r.r_hat, None);
        assert_eq!(r.transcript.iter().map(|s| s.r).collect::<Vec<_>>(), vec![1, 2, 4, 8, 16]);
    }

    #[test]
    fn bisection_narrows_bracket() {
        // synthetic curve: crossed exactly from r = 1000 on
        let search = RminSearch { target_p: 0.75, trials_per_point: 1, seed: 0, r_start: 1, r_max: DEFAULT_R_MAX };
        let (hat, lo, t) = estimate_rmin_with(search, |r| {
            Ok(SuccessEstimate::from_counts(if r >= 1000 { 10_000 } else { 0 }, 10_000, 0))
        })
        .unwrap();
        let hat = hat.unwrap();
        assert!(lo < 1000 && hat >= 1000);
        assert!((hat - lo) * 10 <= hat);
        assert!(t.iter().filter(|s| s.crossed).all(|s| s.r >= hat));
    }

    #[test]
    fn report_ratio_and_csv() {
        let d = DominationInstance::new(vec![1.0], vec![0.0]).unwrap();
        let rep = competitive_report(&d, "trivial", &[DominationSolver::Count], 0.75, 100, 0, 64).unwrap();
        assert_abs_diff_eq!(rep.rows[0].ratio.unwrap(), 1.0 / rep.baseline_lb, epsilon = 1e-12);
        assert_eq!(rep.bayes_rmin, Some(1));
        let csv = rep.to_csv().unwrap();
        let mut rd = csv::Reader::from_reader(csv.as_bytes());
        assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER.to_vec());
        let rec = rd.records().next().unwrap().unwrap();
        assert_eq!(&rec[1], "count");
        assert_eq!(&rec[3], "1");
        let flat = DominationInstance::new(vec![0.5], vec![0.5]).unwrap();
        assert!(competitive_report(&flat, "flat", &[DominationSolver::Count], 0.75, 10, 0, 4).is_err());
    }

    #[test]
    fn trial_errors_carry_context() {
        let d = DominationInstance::new(vec![0.9, 0.8], vec![0.1, 0.2]).unwrap();
        let e = estimate_success(&DominationSolver::Subset(vec![5]), &d, 4, 10, 0).unwrap_err();
        assert!(e.to_string().contains("trial 0"), "{e}");
    }
}
