//! Exact computations on small Domination instances, used as ground truth
//! for the Monte Carlo paths: success probabilities of `count`, `max` and the
//! Bayes-optimal rule, and the mutual information between samples and the
//! hidden bit.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DominationInstance;
use crate::rng::coin;
use crate::samples::DominationSamples;

pub const PMF_MAX_R: usize = 10_000;
pub const COUNT_MAX_NR: usize = 100_000;
pub const MAX_MAX_N: usize = 16;
pub const MAX_MAX_R: usize = 200;
pub const ENUM_MAX_OUTCOMES: f64 = 1e7;
pub const RATIONAL_MAX_NR: usize = 64;

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::default();
        for x in iter {
            k.add(x);
        }
        k
    }
}

/// Distribution of an integer variable supported on `[-r, r]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    pub r: usize,
    /// `mass[s + r] = Pr[S = s]`.
    pub mass: Vec<f64>,
}

impl Pmf {
    #[inline]
    pub fn at(&self, s: i64) -> f64 {
        let idx = s + self.r as i64;
        if idx < 0 || idx as usize >= self.mass.len() {
            0.0
        } else {
            self.mass[idx as usize]
        }
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(i, m)| (i as f64 - self.r as f64) * m).collect::<KahanSum>().value()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().copied().collect::<KahanSum>().value()
    }
}

/// Exact value plus a rough count of elementary steps spent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValue {
    pub value: f64,
    pub cost: u64,
}

fn case_probs(p: f64, q: f64, case_b: u8) -> (f64, f64) {
    if case_b == 0 {
        (p, q)
    } else {
        (q, p)
    }
}

/// Distribution of `S = sum_j (X_j - Y_j)` for one coordinate, where under
/// case 0 `X ~ Bernoulli(p)` and `Y ~ Bernoulli(q)` and case 1 swaps them.
/// Built as an `r`-fold convolution of the three-point step distribution.
pub fn pmf_coordinate_sum(p: f64, q: f64, r: usize, case_b: u8) -> Result<Pmf> {
    if r > PMF_MAX_R {
        return Err(Error::Resource(format!("r = {r} exceeds the pmf limit {PMF_MAX_R}")));
    }
    let (a, b) = case_probs(p, q, case_b);
    let up = a * (1.0 - b);
    let down = b * (1.0 - a);
    let stay = 1.0 - up - down;
    let width = 2 * r + 1;
    let mut cur = vec![0.0; width];
    let mut next = vec![0.0; width];
    cur[r] = 1.0;
    for step in 0..r {
        // support after `step` steps is [r - step, r + step]
        let (lo, hi) = (r - step, r + step);
        for x in next[lo.saturating_sub(1)..=(hi + 1).min(width - 1)].iter_mut() {
            *x = 0.0;
        }
        for idx in lo..=hi {
            let m = cur[idx];
            next[idx - 1] += down * m;
            next[idx] += stay * m;
            next[idx + 1] += up * m;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(Pmf { r, mass: cur })
}

/// Distribution of the number of ones among independent Bernoulli draws,
/// `counts[i]` draws with probability `probs[i]`.
fn poisson_binomial(probs: &[f64], counts: usize) -> Vec<f64> {
    let total = probs.len() * counts;
    let mut dp = vec![0.0; total + 1];
    dp[0] = 1.0;
    let mut len = 0usize;
    for &pr in probs {
        for _ in 0..counts {
            len += 1;
            for s in (1..=len).rev() {
                dp[s] = dp[s] * (1.0 - pr) + dp[s - 1] * pr;
            }
            dp[0] *= 1.0 - pr;
        }
    }
    dp
}

/// Exact success probability of `count` with `r` columns.
///
/// Under case 0, `Z = U - V` with `U` the number of ones in X and `V` in Y,
/// independent. Success is `Pr[Z > 0] + Pr[Z = 0] / 2`, which by symmetry
/// equals the success probability averaged over the hidden bit.
pub fn exact_success_count(instance: &DominationInstance, r: usize) -> Result<OracleValue> {
    let n = instance.n();
    if n * r > COUNT_MAX_NR {
        return Err(Error::Resource(format!("n*r = {} exceeds {COUNT_MAX_NR}", n * r)));
    }
    let u = poisson_binomial(instance.p(), r);
    let v = poisson_binomial(instance.q(), r);
    // cdf_v[t] = Pr[V < t]
    let mut cdf_v = vec![0.0; v.len() + 1];
    let mut acc = KahanSum::default();
    for t in 0..v.len() {
        cdf_v[t] = acc.value();
        acc.add(v[t]);
    }
    cdf_v[v.len()] = acc.value();
    let mut win = KahanSum::default();
    let mut tie = KahanSum::default();
    for (s, &pu) in u.iter().enumerate() {
        win.add(pu * cdf_v[s]);
        tie.add(pu * v[s]);
    }
    let nr = (n * r) as u64;
    Ok(OracleValue { value: (win.value() + 0.5 * tie.value()).clamp(0.0, 1.0), cost: nr * nr })
}

/// Exact rational version of [`exact_success_count`] for `n * r <= 64`.
/// Inputs are converted from `f64` exactly.
pub fn exact_success_count_rational(instance: &DominationInstance, r: usize) -> Result<BigRational> {
    let n = instance.n();
    if n * r > RATIONAL_MAX_NR {
        return Err(Error::Resource(format!("n*r = {} exceeds {RATIONAL_MAX_NR}", n * r)));
    }
    let to_q = |x: f64| BigRational::from_float(x).expect("finite probability");
    let pb = |probs: &[f64]| -> Vec<BigRational> {
        let mut dp = vec![BigRational::zero(); probs.len() * r + 1];
        dp[0] = BigRational::one();
        let mut len = 0;
        for &x in probs {
            let pr = to_q(x);
            let qr = BigRational::one() - &pr;
            for _ in 0..r {
                len += 1;
                for s in (1..=len).rev() {
                    dp[s] = &dp[s] * &qr + &dp[s - 1] * &pr;
                }
                dp[0] = &dp[0] * &qr;
            }
        }
        dp
    };
    let u = pb(instance.p());
    let v = pb(instance.q());
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let mut below = BigRational::zero();
    let mut total = BigRational::zero();
    for s in 0..u.len() {
        total += &u[s] * (&below + &v[s] * &half);
        below += &v[s];
    }
    Ok(total)
}

/// Exact success probability of `max` with lowest-index tie-breaking.
///
/// Scans the maximum absolute value `m` and the winning coordinate `i`: all
/// earlier coordinates must be strictly below `m` in absolute value, later
/// ones at most `m`. The all-zero outcome adds half its probability.
pub fn exact_success_max(instance: &DominationInstance, r: usize) -> Result<OracleValue> {
    let n = instance.n();
    if n > MAX_MAX_N || r > MAX_MAX_R {
        return Err(Error::Resource(format!(
            "exact max oracle limited to n <= {MAX_MAX_N}, r <= {MAX_MAX_R} (got n={n}, r={r})"
        )));
    }
    let pmfs: Vec<Pmf> =
        instance.p().iter().zip(instance.q()).map(|(&p, &q)| pmf_coordinate_sum(p, q, r, 0)).collect::<Result<_>>()?;
    // abs_le[i][m] = Pr[|S_i| <= m]
    let abs_le: Vec<Vec<f64>> = pmfs
        .iter()
        .map(|f| {
            let mut acc = KahanSum::default();
            (0..=r as i64)
                .map(|m| {
                    acc.add(f.at(m));
                    if m > 0 {
                        acc.add(f.at(-m));
                    }
                    acc.value()
                })
                .collect()
        })
        .collect();
    let mut total = KahanSum::default();
    for m in 1..=r {
        for i in 0..n {
            let mut w = pmfs[i].at(m as i64);
            if w == 0.0 {
                continue;
            }
            for j in 0..i {
                w *= abs_le[j][m - 1];
            }
            for row in &abs_le[i + 1..] {
                w *= row[m];
            }
            total.add(w);
        }
    }
    let all_zero: f64 = pmfs.iter().map(|f| f.at(0)).product();
    total.add(0.5 * all_zero);
    Ok(OracleValue { value: total.value().clamp(0.0, 1.0), cost: (n * n * r) as u64 })
}

/// Per-coordinate log-likelihood ratio weight `ln(p(1-q) / (q(1-p)))`.
fn llr_weight(p: f64, q: f64) -> f64 {
    let num = p * (1.0 - q);
    let den = q * (1.0 - p);
    if num == den {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else if num == 0.0 {
        f64::NEG_INFINITY
    } else {
        (num / den).ln()
    }
}

/// Posterior log-odds of `B = 0` against `B = 1` given heads counts `a` in X
/// and `b` in Y. Returns `None` when the observation is impossible under
/// both hypotheses.
pub fn log_odds(instance: &DominationInstance, a: &[usize], b: &[usize]) -> Option<f64> {
    let mut finite = 0.0f64;
    let (mut pos_inf, mut neg_inf) = (false, false);
    for i in 0..instance.n() {
        let d = a[i] as f64 - b[i] as f64;
        if d == 0.0 {
            continue;
        }
        let w = llr_weight(instance.p()[i], instance.q()[i]);
        if w.is_infinite() {
            if (w > 0.0) == (d > 0.0) {
                pos_inf = true;
            } else {
                neg_inf = true;
            }
        } else {
            finite += d * w;
        }
    }
    match (pos_inf, neg_inf) {
        (true, true) => None,
        (true, false) => Some(f64::INFINITY),
        (false, true) => Some(f64::NEG_INFINITY),
        (false, false) => Some(finite),
    }
}

/// Maximum a posteriori guess of the hidden bit; exact ties flip a coin.
pub fn bayes_decide<R: RngCore + ?Sized>(instance: &DominationInstance, samples: &DominationSamples, rng: &mut R) -> u8 {
    let r = samples.r();
    let a: Vec<usize> = (0..samples.n()).map(|i| samples.x.count_row(i, 0, r) as usize).collect();
    let b: Vec<usize> = (0..samples.n()).map(|i| samples.y.count_row(i, 0, r) as usize).collect();
    match log_odds(instance, &a, &b) {
        Some(l) if l > 0.0 => 0,
        Some(l) if l < 0.0 => 1,
        _ => coin(rng) as u8,
    }
}

fn binomial_pmf(r: usize, p: f64) -> Vec<f64> {
    poisson_binomial(&[p], r)
}

fn check_enum(n: usize, r: usize) -> Result<u64> {
    let outcomes = ((r + 1) as f64).powi(2 * n as i32);
    if outcomes > ENUM_MAX_OUTCOMES {
        return Err(Error::Resource(format!(
            "(r+1)^(2n) = {outcomes:.3e} outcomes exceeds {ENUM_MAX_OUTCOMES:.0e}"
        )));
    }
    Ok(outcomes as u64)
}

/// Visits every vector of per-coordinate heads counts with its likelihood
/// under both hypotheses.
fn enumerate_outcomes(instance: &DominationInstance, r: usize, mut visit: impl FnMut(f64, f64)) {
    // joint[i] lists (P(a,b | B=0), P(a,b | B=1)) over all (a, b)
    let joint: Vec<Vec<(f64, f64)>> = instance
        .p()
        .iter()
        .zip(instance.q())
        .map(|(&p, &q)| {
            let (bp, bq) = (binomial_pmf(r, p), binomial_pmf(r, q));
            let mut v = Vec::with_capacity((r + 1) * (r + 1));
            for a in 0..=r {
                for b in 0..=r {
                    v.push((bp[a] * bq[b], bq[a] * bp[b]));
                }
            }
            v
        })
        .collect();
    fn rec(joint: &[Vec<(f64, f64)>], l0: f64, l1: f64, visit: &mut dyn FnMut(f64, f64)) {
        match joint.split_first() {
            None => visit(l0, l1),
            Some((head, rest)) => {
                for &(a, b) in head {
                    if a == 0.0 && b == 0.0 {
                        continue;
                    }
                    rec(rest, l0 * a, l1 * b, visit);
                }
            }
        }
    }
    rec(&joint, 1.0, 1.0, &mut visit);
}

/// Success probability of the Bayes-optimal rule:
/// `1/2 * sum over outcomes of max(P(o | B=0), P(o | B=1))`.
pub fn exact_success_bayes(instance: &DominationInstance, r: usize) -> Result<OracleValue> {
    let cost = check_enum(instance.n(), r)?;
    let mut acc = KahanSum::default();
    enumerate_outcomes(instance, r, |l0, l1| acc.add(l0.max(l1)));
    Ok(OracleValue { value: (0.5 * acc.value()).clamp(0.0, 1.0), cost })
}

/// `I(B; X, Y)` in bits with a uniform hidden bit.
pub fn exact_mutual_information(instance: &DominationInstance, r: usize) -> Result<OracleValue> {
    let cost = check_enum(instance.n(), r)?;
    let mut acc = KahanSum::default();
    enumerate_outcomes(instance, r, |l0, l1| {
        let mix = 0.5 * (l0 + l1);
        if l0 > 0.0 {
            acc.add(0.5 * l0 * (l0 / mix).log2());
        }
        if l1 > 0.0 {
            acc.add(0.5 * l1 * (l1 / mix).log2());
        }
    });
    Ok(OracleValue { value: acc.value().max(0.0), cost })
}
