//! Instance types for Top-K and Domination, SST validation, and the structural
//! maps between the two problems.
//!
//! Indices are 0-based in this API. Human-facing messages (violation reports,
//! instance files) use 1-based indices.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance for the SST equalities and inequalities.
pub const SST_TOLERANCE: f64 = 1e-12;

/// An `n x n` comparison-probability matrix satisfying strong stochastic
/// transitivity. Entry `(u, v)` is the probability that the item of rank `u`
/// beats the item of rank `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    n: usize,
    entries: Vec<f64>,
}

/// Which SST rule a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SstRule {
    Diagonal,
    SkewSymmetry,
    RowMonotonicity,
}

impl fmt::Display for SstRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SstRule::Diagonal => "diagonal",
            SstRule::SkewSymmetry => "skew-symmetry",
            SstRule::RowMonotonicity => "row monotonicity",
        })
    }
}

/// One failed SST check. `row`/`col` are 1-based; for row monotonicity `row`
/// is the upper of two consecutive rows, compared at column `col`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SstViolation {
    pub rule: SstRule,
    pub row: usize,
    pub col: usize,
}

impl fmt::Display for SstViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            SstRule::RowMonotonicity => write!(
                f,
                "row monotonicity: row {} below row {} at column {}",
                self.row,
                self.row + 1,
                self.col
            ),
            rule => write!(f, "{} at ({},{})", rule, self.row, self.col),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "violations", rename_all = "lowercase")]
pub enum SstVerdict {
    Ok,
    Violations(Vec<SstViolation>),
}

impl SstVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, SstVerdict::Ok)
    }
}

/// Checks the three SST conditions on a square array of probabilities.
///
/// Shape problems (ragged rows, empty input, entries outside `[0,1]` or NaN)
/// are errors; rule failures are reported in the verdict.
pub fn validate_sst(rows: &[Vec<f64>]) -> Result<SstVerdict> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InputShape("empty matrix".into()));
    }
    for (u, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InputShape(format!(
                "row {} has {} entries, expected {}",
                u + 1,
                row.len(),
                n
            )));
        }
        for (v, &x) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InputShape(format!(
                    "entry ({},{}) = {} outside [0,1]",
                    u + 1,
                    v + 1,
                    x
                )));
            }
        }
    }

    let mut violations = Vec::new();
    for u in 0..n {
        if (rows[u][u] - 0.5).abs() > SST_TOLERANCE {
            violations.push(SstViolation { rule: SstRule::Diagonal, row: u + 1, col: u + 1 });
        }
    }
    for u in 0..n {
        for v in (u + 1)..n {
            if (rows[v][u] - (1.0 - rows[u][v])).abs() > SST_TOLERANCE {
                violations.push(SstViolation { rule: SstRule::SkewSymmetry, row: v + 1, col: u + 1 });
            }
        }
    }
    // Consecutive rows suffice: the ordering is transitive.
    for u in 0..n.saturating_sub(1) {
        for l in 0..n {
            if rows[u][l] < rows[u + 1][l] - SST_TOLERANCE {
                violations.push(SstViolation { rule: SstRule::RowMonotonicity, row: u + 1, col: l + 1 });
            }
        }
    }

    Ok(if violations.is_empty() { SstVerdict::Ok } else { SstVerdict::Violations(violations) })
}

impl ProbMatrix {
    /// Builds a matrix from rows, rejecting anything that is not SST.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        match validate_sst(&rows)? {
            SstVerdict::Ok => {}
            SstVerdict::Violations(v) => {
                let msg = v.iter().take(5).map(ToString::to_string).collect::<Vec<_>>().join("; ");
                return Err(Error::Invariant(format!("not an SST matrix: {msg}")));
            }
        }
        let n = rows.len();
        Ok(ProbMatrix { n, entries: rows.into_iter().flatten().collect() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.entries[u * self.n + v]
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.entries[u * self.n..(u + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn row_sum(&self, u: usize) -> f64 {
        self.row(u).iter().sum()
    }
}

/// Link function for score-based (parametric) SST matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    /// `1 / (1 + e^{-t})`, the Bradley-Terry-Luce link.
    Logistic,
    /// Standard normal CDF, the Thurstone case V link.
    Gaussian,
}

impl Link {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Link::Logistic => 1.0 / (1.0 + (-t).exp()),
            Link::Gaussian => 0.5 * statrs::function::erf::erfc(-t / std::f64::consts::SQRT_2),
        }
    }
}

/// `P[u][v] = F(w_u - w_v)` for weakly decreasing scores `w`.
pub fn sst_from_scores(scores: &[f64], link: Link) -> Result<ProbMatrix> {
    if scores.is_empty() {
        return Err(Error::Precondition("score vector is empty".into()));
    }
    if let Some(i) = scores.windows(2).position(|w| !(w[0] >= w[1])) {
        return Err(Error::Precondition(format!(
            "scores must be weakly decreasing (position {} < position {})",
            i + 1,
            i + 2
        )));
    }
    let n = scores.len();
    let mut rows = vec![vec![0.5; n]; n];
    for u in 0..n {
        for v in (u + 1)..n {
            let x = link.eval(scores[u] - scores[v]);
            rows[u][v] = x;
            rows[v][u] = 1.0 - x;
        }
    }
    ProbMatrix::from_rows(rows)
}

/// A Top-K instance `(n, k, P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKInstance {
    matrix: ProbMatrix,
    k: usize,
}

impl TopKInstance {
    pub fn new(matrix: ProbMatrix, k: usize) -> Result<Self> {
        let n = matrix.n();
        if n < 2 || k == 0 || k >= n {
            return Err(Error::Precondition(format!("need 1 <= k <= n-1, got n={n}, k={k}")));
        }
        Ok(TopKInstance { matrix, k })
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &ProbMatrix {
        &self.matrix
    }
}

/// A Domination instance `(n, p, q)` with `1 >= p_i >= q_i >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominationInstance {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl DominationInstance {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Precondition("instance needs at least one coordinate".into()));
        }
        if p.len() != q.len() {
            return Err(Error::InputShape(format!("p has {} entries, q has {}", p.len(), q.len())));
        }
        for (i, (&a, &b)) in p.iter().zip(&q).enumerate() {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                return Err(Error::InputShape(format!("coordinate {} outside [0,1]", i + 1)));
            }
            if b > a {
                return Err(Error::Precondition(format!(
                    "domination order violated at coordinate {}: q={} > p={}",
                    i + 1,
                    b,
                    a
                )));
            }
        }
        Ok(DominationInstance { p, q })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }
}

/// A bijection on `0..n` with both directions stored. `forward(u)` is the label
/// of the item of rank `u`; `inverse(label)` is its rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { forward: (0..n).collect(), inverse: (0..n).collect() }
    }

    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (u, &label) in forward.iter().enumerate() {
            if label >= n || inverse[label] != usize::MAX {
                return Err(Error::Precondition(format!("not a permutation of 0..{n}")));
            }
            inverse[label] = u;
        }
        Ok(Permutation { forward, inverse })
    }

    /// Uniform permutation via Fisher-Yates.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut forward: Vec<usize> = (0..n).collect();
        forward.shuffle(rng);
        Self::from_forward(forward).expect("shuffle yields a bijection")
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    #[inline]
    pub fn forward(&self, rank: usize) -> usize {
        self.forward[rank]
    }

    #[inline]
    pub fn inverse(&self, label: usize) -> usize {
        self.inverse[label]
    }

    pub fn as_forward(&self) -> &[usize] {
        &self.forward
    }
}

/// The Domination instance formed by rows `k` and `k+1` (1-based) of the matrix.
pub fn domination_from_topk(instance: &TopKInstance) -> DominationInstance {
    let m = instance.matrix();
    let k = instance.k();
    let p = m.row(k - 1).to_vec();
    let q = m.row(k).to_vec();
    DominationInstance::new(p, q).expect("SST row monotonicity gives p >= q")
}

/// Embeds a Domination instance of size `n` as rows `n+1`, `n+2` of an SST
/// matrix of size `n+2`, with `k = n+1`.
///
/// Requires `p` strictly increasing and every `p_i < 1/2`. The built matrix is
/// re-validated; inputs that still fail (e.g. `q` not ordered like `p`) are
/// rejected, never repaired.
pub fn embed_domination(instance: &DominationInstance) -> Result<TopKInstance> {
    let n = instance.n();
    let (p, q) = (instance.p(), instance.q());
    if let Some(i) = p.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(Error::EmbeddingInvalid(format!(
            "p must be strictly increasing (p_{} >= p_{})",
            i + 1,
            i + 2
        )));
    }
    if let Some(i) = p.iter().position(|&x| !(x < 0.5)) {
        return Err(Error::EmbeddingInvalid(format!("p_{} = {} is not below 1/2", i + 1, p[i])));
    }

    let size = n + 2;
    let (top, bottom) = (n, n + 1);
    let mut rows = vec![vec![0.5; size]; size];
    for j in 0..n {
        rows[top][j] = p[j];
        rows[bottom][j] = q[j];
        rows[j][top] = 1.0 - p[j];
        rows[j][bottom] = 1.0 - q[j];
    }

    match validate_sst(&rows)? {
        SstVerdict::Ok => {}
        SstVerdict::Violations(v) => {
            return Err(Error::EmbeddingInvalid(format!("embedded matrix is not SST: {}", v[0])));
        }
    }
    TopKInstance::new(ProbMatrix::from_rows(rows)?, n + 1)
}
