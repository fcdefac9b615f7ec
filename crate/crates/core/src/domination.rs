//! Solvers for the Domination problem. Each maps the visible samples `(X, Y)`
//! and a private coin stream to a guess of the hidden bit.
//!
//! Every statistic is built from range popcounts over packed rows, so one
//! coordinate of a segment costs `O(len / 64)`.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{coin, mask_tail};
use crate::samples::DominationSamples;

/// Which decision path `coup` took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoupBranch {
    /// One coordinate was consistent enough across segments.
    Dominant,
    /// Segment-wise majorities decided.
    Majority,
}

/// Optional statistics reported next to a guess.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// 1-based index of the coordinate that decided, when one did.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winner: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups_per_half: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch: Option<CoupBranch>,
    /// True when the final decision came from a fair coin.
    pub tie_coin: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverOutput {
    pub guess: u8,
    pub diagnostics: Diagnostics,
}

/// Positive means "X came from p", i.e. guess 0. Zero flips a fair coin.
#[inline]
fn decide_sign<R: RngCore + ?Sized>(z: i64, rng: &mut R) -> (u8, bool) {
    match z.signum() {
        1 => (0, false),
        -1 => (1, false),
        _ => (coin(rng) as u8, true),
    }
}

/// Sign with a fair `+1/-1` coin at zero.
#[inline]
fn coin_sign<R: RngCore + ?Sized>(z: i64, rng: &mut R) -> i64 {
    match z.signum() {
        0 => {
            if coin(rng) {
                1
            } else {
                -1
            }
        }
        s => s,
    }
}

fn count_on<R: RngCore + ?Sized>(s: &DominationSamples, start: usize, end: usize, rng: &mut R) -> SolverOutput {
    let z: i64 = (0..s.n()).map(|i| s.diff(i, start, end)).sum();
    let (guess, tie_coin) = decide_sign(z, rng);
    SolverOutput { guess, diagnostics: Diagnostics { z: Some(z as f64), tie_coin, ..Default::default() } }
}

fn max_on<R: RngCore + ?Sized>(s: &DominationSamples, start: usize, end: usize, rng: &mut R) -> SolverOutput {
    let (mut best, mut best_abs, mut z) = (0usize, -1i64, 0i64);
    for i in 0..s.n() {
        let d = s.diff(i, start, end);
        if d.abs() > best_abs {
            best = i;
            best_abs = d.abs();
            z = d;
        }
    }
    let (guess, tie_coin) = decide_sign(z, rng);
    SolverOutput {
        guess,
        diagnostics: Diagnostics { z: Some(z as f64), winner: Some(best + 1), tie_coin, ..Default::default() },
    }
}

/// Sign of the total difference across all coordinates.
pub fn solve_count<R: RngCore + ?Sized>(s: &DominationSamples, rng: &mut R) -> SolverOutput {
    count_on(s, 0, s.r(), rng)
}

/// Sign of the coordinate with the largest absolute difference; ties go to
/// the lowest index.
pub fn solve_max<R: RngCore + ?Sized>(s: &DominationSamples, rng: &mut R) -> SolverOutput {
    max_on(s, 0, s.r(), rng)
}

/// Groups per half used by `comb`: `ceil(16 ln(1/alpha))`.
pub fn comb_groups(alpha: f64) -> Result<usize> {
    check_alpha(alpha)?;
    Ok((16.0 * (1.0 / alpha).ln()).ceil().max(1.0) as usize)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Runs `count` on the first `g` column groups and `max` on the last `g`,
/// then outputs 0 iff the mean of all `2g` output bits is at most 1/2.
///
/// Groups are contiguous blocks of `floor(r / 2g)` columns; leftover columns
/// join the final group.
pub fn solve_comb<R: RngCore + ?Sized>(s: &DominationSamples, alpha: f64, rng: &mut R) -> Result<SolverOutput> {
    let g = comb_groups(alpha)?;
    let r = s.r();
    if r < 2 * g {
        return Err(Error::InsufficientSamples { needed: 2 * g, got: r });
    }
    let width = r / (2 * g);
    let bounds = |t: usize| (t * width, if t == 2 * g - 1 { r } else { (t + 1) * width });
    let mut ones_count = 0usize;
    for t in 0..g {
        let (a, b) = bounds(t);
        ones_count += count_on(s, a, b, rng).guess as usize;
    }
    let mut ones_max = 0usize;
    for t in g..2 * g {
        let (a, b) = bounds(t);
        ones_max += max_on(s, a, b, rng).guess as usize;
    }
    let z1 = ones_count as f64 / g as f64;
    let z2 = ones_max as f64 / g as f64;
    let guess = if ones_count + ones_max <= g { 0 } else { 1 };
    Ok(SolverOutput {
        guess,
        diagnostics: Diagnostics {
            z1: Some(z1),
            z2: Some(z2),
            groups_per_half: Some(g),
            segment_len: Some(width),
            ..Default::default()
        },
    })
}

/// Sum of cubes. Each column contributes `+1` where `X > Y`, `-1` where
/// `X < Y` and a fair `+/-1` where they agree; outputs 0 iff `sum S_i^3 >= 0`.
pub fn solve_cube<R: RngCore + ?Sized>(s: &DominationSamples, rng: &mut R) -> SolverOutput {
    let r = s.r();
    let mut buf = vec![0u64; s.x.stride()];
    let mut z: i128 = 0;
    for i in 0..s.n() {
        for ((o, &x), &y) in buf.iter_mut().zip(s.x.row(i)).zip(s.y.row(i)) {
            *o = (x & !y) | (!(x ^ y) & rng.next_u64());
        }
        mask_tail(&mut buf, r);
        let plus: u32 = buf.iter().map(|w| w.count_ones()).sum();
        let si = 2 * plus as i128 - r as i128;
        z += si * si * si;
    }
    SolverOutput {
        guess: if z >= 0 { 0 } else { 1 },
        diagnostics: Diagnostics { z: Some(z as f64), ..Default::default() },
    }
}

/// Segment count used by `coup`: `ceil(18 ln(2n / alpha))`.
pub fn coup_segments(n: usize, alpha: f64) -> Result<usize> {
    check_alpha(alpha)?;
    Ok((18.0 * (2.0 * n as f64 / alpha).ln()).ceil().max(1.0) as usize)
}

/// General coupling solver.
///
/// Columns are cut into `l` segments of `floor(r / l)` columns (the rest is
/// ignored). Each coordinate votes per segment; if some coordinate's votes
/// sum to at least `l/3` in absolute value, its sign decides. Otherwise each
/// segment takes a majority over coordinates and the segments vote.
pub fn solve_coup<R: RngCore + ?Sized>(s: &DominationSamples, alpha: f64, rng: &mut R) -> Result<SolverOutput> {
    let n = s.n();
    let ell = coup_segments(n, alpha)?;
    let r = s.r();
    if r < ell {
        return Err(Error::InsufficientSamples { needed: ell, got: r });
    }
    let len = r / ell;
    // votes[i * ell + j] = S_ij
    let mut votes = vec![0i8; n * ell];
    let (mut best, mut best_abs, mut z1) = (0usize, -1i64, 0i64);
    for i in 0..n {
        let mut sum = 0i64;
        for j in 0..ell {
            let v = coin_sign(s.diff(i, j * len, (j + 1) * len), rng);
            votes[i * ell + j] = v as i8;
            sum += v;
        }
        if sum.abs() > best_abs {
            best = i;
            best_abs = sum.abs();
            z1 = sum;
        }
    }
    let mut diagnostics = Diagnostics {
        z1: Some(z1 as f64),
        winner: Some(best + 1),
        segments: Some(ell),
        segment_len: Some(len),
        ..Default::default()
    };
    // |Z1| >= l/3 without rounding l/3
    if 3 * z1.abs() >= ell as i64 {
        diagnostics.branch = Some(CoupBranch::Dominant);
        return Ok(SolverOutput { guess: if z1 > 0 { 0 } else { 1 }, diagnostics });
    }
    let mut total = 0i64;
    for j in 0..ell {
        let col: i64 = (0..n).map(|i| votes[i * ell + j] as i64).sum();
        total += coin_sign(col, rng);
    }
    let z2 = coin_sign(total, rng);
    diagnostics.branch = Some(CoupBranch::Majority);
    diagnostics.z2 = Some(z2 as f64);
    diagnostics.tie_coin = total == 0;
    Ok(SolverOutput { guess: if z2 > 0 { 0 } else { 1 }, diagnostics })
}

/// Restricted counting: `T = sum over i in subset of sum_j (X_ij - Y_ij)`,
/// output 0 iff `T >= 0`. `subset` holds 0-based coordinates.
pub fn solve_subset_count(s: &DominationSamples, subset: &[usize]) -> Result<SolverOutput> {
    if subset.is_empty() {
        return Err(Error::Precondition("subset must be non-empty".into()));
    }
    if let Some(&i) = subset.iter().find(|&&i| i >= s.n()) {
        return Err(Error::Precondition(format!("subset coordinate {} exceeds n = {}", i + 1, s.n())));
    }
    let t: i64 = subset.iter().map(|&i| s.diff(i, 0, s.r())).sum();
    Ok(SolverOutput {
        guess: if t >= 0 { 0 } else { 1 },
        diagnostics: Diagnostics { z: Some(t as f64), ..Default::default() },
    })
}

/// A Domination solver together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum DominationSolver {
    Count,
    Max,
    Comb { alpha: f64 },
    Cube,
    Coup { alpha: f64 },
    /// 0-based coordinates.
    Subset(Vec<usize>),
}

impl DominationSolver {
    pub fn solve<R: RngCore + ?Sized>(&self, s: &DominationSamples, rng: &mut R) -> Result<SolverOutput> {
        match self {
            DominationSolver::Count => Ok(solve_count(s, rng)),
            DominationSolver::Max => Ok(solve_max(s, rng)),
            DominationSolver::Comb { alpha } => solve_comb(s, *alpha, rng),
            DominationSolver::Cube => Ok(solve_cube(s, rng)),
            DominationSolver::Coup { alpha } => solve_coup(s, *alpha, rng),
            DominationSolver::Subset(set) => solve_subset_count(s, set),
        }
    }

    /// Smallest `r` the solver accepts on an `n`-coordinate instance.
    pub fn min_r(&self, n: usize) -> Result<usize> {
        Ok(match self {
            DominationSolver::Comb { alpha } => 2 * comb_groups(*alpha)?,
            DominationSolver::Coup { alpha } => coup_segments(n, *alpha)?,
            _ => 1,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            DominationSolver::Count => "count",
            DominationSolver::Max => "max",
            DominationSolver::Comb { .. } => "comb",
            DominationSolver::Cube => "cube",
            DominationSolver::Coup { .. } => "coup",
            DominationSolver::Subset(_) => "subset",
        }
    }
}

impl fmt::Display for DominationSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Solver names without parameters, as accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Count,
    Max,
    Comb,
    Cube,
    Coup,
    Subset,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "count" => SolverKind::Count,
            "max" => SolverKind::Max,
            "comb" => SolverKind::Comb,
            "cube" => SolverKind::Cube,
            "coup" => SolverKind::Coup,
            "subset" => SolverKind::Subset,
            other => return Err(Error::Parameter(format!("unknown solver '{other}'"))),
        })
    }
}

impl SolverKind {
    pub fn with_params(self, alpha: f64, subset: Option<Vec<usize>>) -> Result<DominationSolver> {
        Ok(match self {
            SolverKind::Count => DominationSolver::Count,
            SolverKind::Max => DominationSolver::Max,
            SolverKind::Comb => DominationSolver::Comb { alpha },
            SolverKind::Cube => DominationSolver::Cube,
            SolverKind::Coup => DominationSolver::Coup { alpha },
            SolverKind::Subset => DominationSolver::Subset(
                subset.ok_or_else(|| Error::Parameter("subset solver needs a coordinate set".into()))?,
            ),
        })
    }
}
