//! Binary entropy, KL divergence, the per-comparison information quantity
//! and the sample-count lower bounds derived from it. All results are in bits.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{domination_from_topk, DominationInstance, TopKInstance};

fn check_prob(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {x} is not a probability")))
    }
}

/// `x log2 x` with the continuity convention at zero.
#[inline]
fn xlog2x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Binary entropy in bits.
pub fn entropy(p: f64) -> Result<f64> {
    check_prob("p", p)?;
    Ok(-xlog2x(p) - xlog2x(1.0 - p))
}

/// `a log2(a/b)` with `0 log(0/b) = 0` and `a log(a/0) = inf` for `a > 0`.
fn kl_term(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a * (a / b).log2()
    }
}

/// KL divergence between Bernoulli(a) and Bernoulli(b), in bits.
pub fn kl(a: f64, b: f64) -> Result<f64> {
    check_prob("a", a)?;
    check_prob("b", b)?;
    Ok(kl_term(a, b) + kl_term(1.0 - a, 1.0 - b))
}

/// Information about the hidden bit carried by one `(X, Y)` pair at a
/// coordinate with probabilities `p` and `q`.
///
/// With `x = p(1-q)` and `y = q(1-p)` this is `(x + y)(1 - H(x / (x + y)))`,
/// and zero when `x + y = 0`.
pub fn info_pair(p: f64, q: f64) -> Result<f64> {
    check_prob("p", p)?;
    check_prob("q", q)?;
    Ok(info_pair_unchecked(p, q))
}

pub(crate) fn info_pair_unchecked(p: f64, q: f64) -> f64 {
    let x = p * (1.0 - q);
    let y = q * (1.0 - p);
    let m = x + y;
    if m == 0.0 || x == y {
        return 0.0;
    }
    // m (1 - H(x/m)) = m + x log2(x/m) + y log2(y/m), written so that
    // equal x and y cancel exactly.
    let v = m + xlog2x(x) + xlog2x(y) - m * m.log2();
    v.max(0.0)
}

/// Chernoff-type exponent `-2 log2(sqrt(pq) + sqrt((1-p)(1-q)))` for `q <= p`.
pub fn sanov_exponent(p: f64, q: f64) -> Result<f64> {
    check_prob("p", p)?;
    check_prob("q", q)?;
    if q > p {
        return Err(Error::Domain(format!("sanov exponent needs q <= p, got p={p}, q={q}")));
    }
    if p == q {
        return Ok(0.0);
    }
    let bc = (p * q).sqrt() + ((1.0 - p) * (1.0 - q)).sqrt();
    Ok(if bc == 0.0 { f64::INFINITY } else { (-2.0 * bc.log2()).max(0.0) })
}

/// A lower bound that may be infinite when the samples carry no information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LowerBound {
    Finite(f64),
    Unbounded,
}

impl LowerBound {
    pub fn finite(self) -> Option<f64> {
        match self {
            LowerBound::Finite(x) => Some(x),
            LowerBound::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, LowerBound::Unbounded)
    }

    fn from_info(numerator: f64, total: f64) -> Self {
        if total > 0.0 {
            LowerBound::Finite(numerator / total)
        } else {
            LowerBound::Unbounded
        }
    }
}

impl Serialize for LowerBound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LowerBound::Finite(x) => s.serialize_f64(*x),
            LowerBound::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

/// Per-coordinate information, its total and the gap norms of an instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoReport {
    pub per_coordinate: Vec<f64>,
    #[serde(rename = "total_bits")]
    pub total: f64,
    pub l1_gap: f64,
    pub l2_gap_sq: f64,
    pub linf_gap: f64,
}

pub fn info_vec(instance: &DominationInstance) -> InfoReport {
    let per_coordinate: Vec<f64> =
        instance.p().iter().zip(instance.q()).map(|(&p, &q)| info_pair_unchecked(p, q)).collect();
    let gaps = instance.p().iter().zip(instance.q()).map(|(p, q)| p - q);
    let (mut l1, mut l2, mut linf) = (0.0f64, 0.0f64, 0.0f64);
    for g in gaps {
        l1 += g.abs();
        l2 += g * g;
        linf = linf.max(g.abs());
    }
    InfoReport { total: per_coordinate.iter().sum(), per_coordinate, l1_gap: l1, l2_gap_sq: l2, linf_gap: linf }
}

/// `0.05 / I(p, q)`: no algorithm succeeds with probability 3/4 below this.
pub fn lb_domination(instance: &DominationInstance) -> LowerBound {
    LowerBound::from_info(0.05, info_vec(instance).total)
}

/// `0.1 / I(P_k, P_{k+1})` for a Top-K instance.
pub fn lb_topk(instance: &TopKInstance) -> LowerBound {
    LowerBound::from_info(0.1, info_vec(&domination_from_topk(instance)).total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(0.5).unwrap(), 1.0);
        assert_eq!(entropy(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(entropy(0.9).unwrap(), 0.468_996, epsilon = 1e-6);
        assert!(matches!(entropy(1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn kl_values() {
        assert_eq!(kl(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(kl(1.0, 0.0).unwrap(), f64::INFINITY);
        let z: f64 = 0.1;
        let d = kl(0.5 + z, 0.5).unwrap();
        assert!(d >= z * z / LN_2 && d <= 4.0 * z * z / LN_2);
    }

    #[test]
    fn info_pair_values() {
        assert_eq!(info_pair(0.3, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(info_pair(1.0, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        // x = 0.5625, y = 0.0625, m = 0.625, x/m = 0.9
        let expect = 0.625 * (1.0 - entropy(0.9).unwrap());
        assert_abs_diff_eq!(info_pair(0.75, 0.25).unwrap(), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(info_pair(0.75, 0.25).unwrap(), 0.331_877_754, epsilon = 1e-6);
        assert_abs_diff_eq!(info_pair(0.1, 0.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(info_pair(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn sanov_values() {
        assert_abs_diff_eq!(sanov_exponent(0.75, 0.25).unwrap(), -2.0 * (3f64.sqrt() / 2.0).log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(sanov_exponent(0.75, 0.25).unwrap(), 0.415_037, epsilon = 1e-6);
        assert_eq!(sanov_exponent(0.4, 0.4).unwrap(), 0.0);
        assert!(sanov_exponent(0.2, 0.4).is_err());
    }

    #[test]
    fn vector_report_and_bounds() {
        let d = DominationInstance::new(vec![0.6; 10], vec![0.5; 10]).unwrap();
        let rep = info_vec(&d);
        assert_abs_diff_eq!(rep.total, 10.0 * info_pair(0.6, 0.5).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(rep.l1_gap, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.linf_gap, 0.1, epsilon = 1e-12);

        let single = DominationInstance::new(vec![0.6], vec![0.5]).unwrap();
        let lb = lb_domination(&single).finite().unwrap();
        assert_abs_diff_eq!(lb, 0.05 / info_pair(0.6, 0.5).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(lb, 3.4424, epsilon = 1e-3);

        let eq = DominationInstance::new(vec![0.4, 0.7], vec![0.4, 0.7]).unwrap();
        assert!(lb_domination(&eq).is_unbounded());
        let sure = DominationInstance::new(vec![1.0], vec![0.0]).unwrap();
        assert_abs_diff_eq!(lb_domination(&sure).finite().unwrap(), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn serialization_of_unbounded() {
        assert_eq!(serde_json::to_string(&LowerBound::Unbounded).unwrap(), "\"unbounded\"");
        assert_eq!(serde_json::to_string(&LowerBound::Finite(2.5)).unwrap(), "2.5");
    }

    proptest! {
        #[test]
        fn info_pair_symmetries(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
            let a = info_pair(p, q).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - info_pair(q, p).unwrap()).abs() < 1e-12);
            prop_assert!((a - info_pair(1.0 - p, 1.0 - q).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn info_pair_monotone(mut v in prop::array::uniform4(0.0f64..=1.0)) {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let [q2, q, p, p2] = v;
            prop_assert!(info_pair(p2, q2).unwrap() >= info_pair(p, q).unwrap() - 1e-12);
        }

        #[test]
        fn quadratic_sandwich(p in 0.0f64..=1.0, q in 0.0f64..=1.0, wide in any::<bool>()) {
            let delta = if wide { 0.05 } else { 0.25 };
            let (p, q) = (delta + p * (1.0 - 2.0 * delta), delta + q * (1.0 - 2.0 * delta));
            let i = info_pair(p, q).unwrap();
            let g = (p - q) * (p - q);
            prop_assert!(i >= g / (4.0 * LN_2) - 1e-12);
            prop_assert!(i <= g / (delta * LN_2) + 1e-12);
        }

        #[test]
        fn sanov_dominates_half_info(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (p, q) = if a >= b { (a, b) } else { (b, a) };
            prop_assert!(sanov_exponent(p, q).unwrap() >= info_pair(p, q).unwrap() / 2.0 - 1e-12);
        }
    }

    #[test]
    fn kl_two_sided_grid() {
        // sum_x d_x^2 / (2 max(a_x, b_x)) <= ln2 * D(a||b) <= sum_x d_x^2 / b_x
        for ia in 1..100 {
            for ib in 1..100 {
                let (a, b) = (ia as f64 / 100.0, ib as f64 / 100.0);
                let d = LN_2 * kl(a, b).unwrap();
                let g = (a - b) * (a - b);
                let lower = g / (2.0 * a.max(b)) + g / (2.0 * (1.0 - a).max(1.0 - b));
                let upper = g / b + g / (1.0 - b);
                assert!(d >= lower - 1e-12, "{a} {b}");
                assert!(d <= upper + 1e-12, "{a} {b}");
            }
        }
    }
}
