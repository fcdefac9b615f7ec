//! Named instance families: the uniform-gap matrix, the instances on which
//! the counting and max solvers fail, and the sparse hard distribution.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{DominationInstance, ProbMatrix, TopKInstance};
use crate::rng::{Domain, StreamKey};

/// `P[u][v] = 1/2 + eps` above the diagonal and `1/2 - eps` below it.
pub fn gen_diag_eps(n: usize, k: usize, eps: f64) -> Result<TopKInstance> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    if n < 2 {
        return Err(Error::Parameter("n must be at least 2".into()));
    }
    let mut rows = vec![vec![0.5; n]; n];
    for (u, row) in rows.iter_mut().enumerate() {
        for (v, x) in row.iter_mut().enumerate() {
            if u < v {
                *x = 0.5 + eps;
            } else if u > v {
                *x = 0.5 - eps;
            }
        }
    }
    TopKInstance::new(ProbMatrix::from_rows(rows)?, k)
}

/// Identical coordinates except at positions `k` and `k+1` (1-based), where
/// `q` sits `eps` below `p`. `base` defaults to all 1/2.
pub fn gen_countingfails(n: usize, k: usize, eps: f64, base: Option<&[f64]>) -> Result<DominationInstance> {
    if n < 2 || k == 0 || k >= n {
        return Err(Error::Parameter(format!("need n >= 2 and 1 <= k <= n-1, got n={n}, k={k}")));
    }
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1/10), got {eps}")));
    }
    let base = match base {
        Some(b) if b.len() != n => {
            return Err(Error::Parameter(format!("base has {} entries, expected {n}", b.len())));
        }
        Some(b) => b.to_vec(),
        None => vec![0.5; n],
    };
    let open = |x: f64| x > 0.25 && x < 0.75;
    if let Some(i) = base.iter().position(|&x| !open(x)) {
        return Err(Error::Parameter(format!("base_{} = {} outside (1/4, 3/4)", i + 1, base[i])));
    }
    let mut q = base.clone();
    for i in [k - 1, k] {
        q[i] -= eps;
        if !open(q[i]) {
            return Err(Error::Parameter(format!(
                "base_{} - eps = {} leaves (1/4, 3/4)",
                i + 1,
                q[i]
            )));
        }
    }
    DominationInstance::new(base, q)
}

/// `p_i = 1/2 + eps`, `q_i = 1/2` everywhere; `eps` defaults to `1/n^2`.
pub fn gen_maxfails(n: usize, eps: Option<f64>) -> Result<DominationInstance> {
    if n < 2 {
        return Err(Error::Parameter("n must be at least 2".into()));
    }
    let eps = eps.unwrap_or(1.0 / (n * n) as f64);
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    DominationInstance::new(vec![0.5 + eps; n], vec![0.5; n])
}

/// One informative coordinate `(eps, 0)` followed by uninformative `(1/2, 1/2)`.
pub fn gen_countingfails2(n: usize, eps: f64) -> Result<DominationInstance> {
    if n < 1 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    let mut p = vec![0.5; n];
    let mut q = vec![0.5; n];
    p[0] = eps;
    q[0] = 0.0;
    DominationInstance::new(p, q)
}

/// A faint one-sided coordinate `(eps/100, 0)` followed by `(1/2 + eps, 1/2)`.
pub fn gen_maxfails2(n: usize, eps: f64) -> Result<DominationInstance> {
    if n < 1 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    let mut p = vec![0.5 + eps; n];
    let mut q = vec![0.5; n];
    p[0] = eps / 100.0;
    q[0] = 0.0;
    DominationInstance::new(p, q)
}

/// Base rates used by the hard distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseScheme {
    /// `R_i = 1/2`.
    ConstantHalf,
    /// `R_i = 1/4 + i/(8n)` for 1-based `i`, which keeps the embedding valid.
    EmbeddingRamp,
}

impl BaseScheme {
    pub fn base(self, n: usize) -> Vec<f64> {
        match self {
            BaseScheme::ConstantHalf => vec![0.5; n],
            BaseScheme::EmbeddingRamp => (1..=n).map(|i| 0.25 + i as f64 / (8.0 * n as f64)).collect(),
        }
    }
}

/// One draw from the hard distribution together with its hidden structure.
#[derive(Debug, Clone, PartialEq)]
pub struct HardDraw {
    pub instance: DominationInstance,
    /// 0-based coordinates where `p` is raised.
    pub s_p: Vec<usize>,
    /// 0-based coordinates where `q` is lowered.
    pub s_q: Vec<usize>,
    pub gamma: f64,
    pub eps: f64,
    pub r_base: Vec<f64>,
}

pub fn default_gamma(n: usize) -> f64 {
    1.0 / (100.0 * (n as f64).sqrt())
}

pub fn default_hard_eps(n: usize) -> f64 {
    1.0 / (100.0 * (n * n) as f64)
}

/// Draws `S_P` and `S_Q` with independent inclusion probability `gamma` and
/// perturbs the base rates by a factor `1 + eps` (on `S_P`, in `p`) or
/// `1 - eps` (on `S_Q`, in `q`).
pub fn draw_hard(
    n: usize,
    gamma: Option<f64>,
    eps: Option<f64>,
    scheme: BaseScheme,
    key: StreamKey,
) -> Result<HardDraw> {
    if n < 1 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    let gamma = gamma.unwrap_or_else(|| default_gamma(n));
    let eps = eps.unwrap_or_else(|| default_hard_eps(n));
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Parameter(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Parameter(format!("eps must lie in [0, 1), got {eps}")));
    }
    let r_base = scheme.base(n);
    if scheme == BaseScheme::EmbeddingRamp {
        for i in 0..n.saturating_sub(1) {
            if r_base[i] * (1.0 + eps) > r_base[i + 1] * (1.0 - eps) {
                return Err(Error::Parameter(format!(
                    "ramp spacing violated at coordinate {}: eps = {eps} too large for n = {n}",
                    i + 1
                )));
            }
        }
        if r_base[n - 1] * (1.0 + eps) >= 0.5 {
            return Err(Error::Parameter(format!("eps = {eps} pushes p above 1/2")));
        }
    }

    let mut rng = key.rng(Domain::Generator, 0);
    let mut s_p = Vec::new();
    let mut s_q = Vec::new();
    for i in 0..n {
        if rng.gen::<f64>() < gamma {
            s_p.push(i);
        }
        if rng.gen::<f64>() < gamma {
            s_q.push(i);
        }
    }
    let mut p = r_base.clone();
    let mut q = r_base.clone();
    for &i in &s_p {
        p[i] = r_base[i] * (1.0 + eps);
    }
    for &i in &s_q {
        q[i] = r_base[i] * (1.0 - eps);
    }
    let instance = DominationInstance::new(p, q)?;
    Ok(HardDraw { instance, s_p, s_q, gamma, eps, r_base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{domination_from_topk, embed_domination, validate_sst};

    #[test]
    fn diag_small() {
        let t = gen_diag_eps(2, 1, 0.2).unwrap();
        assert_eq!(t.matrix().to_rows(), vec![vec![0.5, 0.7], vec![0.3, 0.5]]);
        let t = gen_diag_eps(9, 3, 0.05).unwrap();
        for u in 0..8 {
            assert!(t.matrix().row_sum(u) > t.matrix().row_sum(u + 1));
        }
        assert!(gen_diag_eps(4, 2, 0.5).is_err());
    }

    #[test]
    fn diag_rows_by_hand() {
        // rows 2 and 3 (1-based) of the uniform-gap 4x4 matrix
        let d = domination_from_topk(&gen_diag_eps(4, 2, 0.1).unwrap());
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
        assert!(close(d.p(), &[0.4, 0.5, 0.6, 0.6]));
        assert!(close(d.q(), &[0.4, 0.4, 0.5, 0.6]));
    }

    #[test]
    fn countingfails_shape() {
        let d = gen_countingfails(4, 2, 0.05, None).unwrap();
        assert_eq!(d.p(), &[0.5; 4]);
        assert_eq!(d.q(), &[0.5, 0.45, 0.45, 0.5]);
        let d = gen_countingfails(100, 50, 0.05, None).unwrap();
        let rep = crate::info::info_vec(&d);
        assert!((rep.l1_gap - 0.1).abs() < 1e-12);
        assert!((rep.linf_gap - 0.05).abs() < 1e-12);
        assert!(gen_countingfails(4, 2, 0.05, Some(&[0.5, 0.3, 0.5, 0.5])).is_err());
        assert!(gen_countingfails(4, 4, 0.05, None).is_err());
        assert!(gen_countingfails(4, 2, 0.2, None).is_err());
    }

    #[test]
    fn maxfails_families() {
        let d = gen_maxfails(10, None).unwrap();
        assert!(d.p().iter().all(|&p| (p - 0.51).abs() < 1e-15));
        assert!((crate::info::info_vec(&d).l1_gap - 0.1).abs() < 1e-12);
        let d = gen_maxfails(5, Some(0.02)).unwrap();
        assert!(d.p().iter().zip(d.q()).all(|(p, q)| (p - q - 0.02).abs() < 1e-15));

        let d = gen_countingfails2(3, 0.1).unwrap();
        assert_eq!(d.p(), &[0.1, 0.5, 0.5]);
        assert_eq!(d.q(), &[0.0, 0.5, 0.5]);
        assert!((crate::info::info_vec(&d).total - 0.1).abs() < 1e-15);

        let d = gen_maxfails2(2, 0.01).unwrap();
        assert!((d.p()[0] - 0.0001).abs() < 1e-18 && (d.p()[1] - 0.51).abs() < 1e-15);
        assert_eq!(d.q(), &[0.0, 0.5]);
    }

    #[test]
    fn maxfails2_information_window() {
        // eps below 1/n^3 keeps the total between eps/100 and eps/50 once n
        // is large enough for the (n-1) eps^2 / ln 2 tail to fit
        for n in [16usize, 32, 64] {
            let eps = 0.5 / (n * n * n) as f64;
            let total = crate::info::info_vec(&gen_maxfails2(n, eps).unwrap()).total;
            assert!(total >= eps / 100.0 && total <= eps / 50.0, "n={n} total={total}");
        }
    }

    #[test]
    fn hard_extremes() {
        let key = StreamKey::new(1, 0);
        let h = draw_hard(6, Some(1.0), Some(0.1), BaseScheme::ConstantHalf, key).unwrap();
        assert_eq!(h.s_p.len(), 6);
        assert!(h.instance.p().iter().all(|&p| (p - 0.55).abs() < 1e-15));
        assert!(h.instance.q().iter().all(|&q| (q - 0.45).abs() < 1e-15));
        let h = draw_hard(6, Some(0.0), Some(0.001), BaseScheme::EmbeddingRamp, key).unwrap();
        assert_eq!(h.instance.p(), h.r_base.as_slice());
        assert_eq!(h.instance.q(), h.r_base.as_slice());
        assert!(draw_hard(16, Some(0.5), Some(0.2), BaseScheme::EmbeddingRamp, key).is_err());
    }

    #[test]
    fn hard_defaults_and_embedding() {
        for s in 0..50 {
            let h = draw_hard(16, None, None, BaseScheme::EmbeddingRamp, StreamKey::new(s, 0)).unwrap();
            assert!(h.r_base.iter().all(|&r| (0.25..=0.75).contains(&r)));
            let t = embed_domination(&h.instance).unwrap();
            assert!(validate_sst(&t.matrix().to_rows()).unwrap().is_ok());
        }
    }
}
