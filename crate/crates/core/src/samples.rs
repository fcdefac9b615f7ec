//! Packed sample containers and the seeded samplers that fill them.

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DominationInstance, Permutation, TopKInstance};
use crate::rng::{self, Domain, StreamKey};

/// Row-major bit matrix with 64 columns per word. Bits past `cols` in the
/// last word of each row are always zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

#[inline]
pub fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// Number of set bits of `row` in columns `start..end`.
#[inline]
pub fn count_range(row: &[u64], start: usize, end: usize) -> u32 {
    if start >= end {
        return 0;
    }
    let (w0, b0) = (start / 64, start % 64);
    let (w1, b1) = (end / 64, end % 64);
    if w0 == w1 {
        let mask = ((1u64 << (b1 - b0)) - 1) << b0;
        return (row[w0] & mask).count_ones();
    }
    let mut total = (row[w0] >> b0).count_ones();
    for w in &row[w0 + 1..w1] {
        total += w.count_ones();
    }
    if b1 != 0 {
        total += (row[w1] & ((1u64 << b1) - 1)).count_ones();
    }
    total
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix { rows, cols, stride, data: vec![0; rows * stride] }
    }

    /// Builds a matrix from explicit 0/1 rows.
    pub fn from_bits(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::InputShape(format!("bit row {} has length {}", i + 1, row.len())));
            }
            for (l, &b) in row.iter().enumerate() {
                match b {
                    0 => {}
                    1 => m.set(i, l, true),
                    _ => return Err(Error::InputShape(format!("bit ({},{}) is not 0 or 1", i + 1, l + 1))),
                }
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub fn get(&self, i: usize, l: usize) -> bool {
        (self.data[i * self.stride + l / 64] >> (l % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, l: usize, v: bool) {
        let w = &mut self.data[i * self.stride + l / 64];
        if v {
            *w |= 1 << (l % 64);
        } else {
            *w &= !(1 << (l % 64));
        }
    }

    pub fn count_row(&self, i: usize, start: usize, end: usize) -> u32 {
        count_range(self.row(i), start, end)
    }

    /// Copies columns `start..start + len` into a new matrix.
    pub fn columns(&self, start: usize, len: usize) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows, len);
        for i in 0..self.rows {
            for l in 0..len {
                if self.get(i, start + l) {
                    out.set(i, l, true);
                }
            }
        }
        out
    }

    pub fn to_hex_rows(&self) -> Vec<String> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|w| format!("{w:016x}")).collect::<String>())
            .collect()
    }
}

/// Solver-visible samples of a Domination instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominationSamples {
    pub x: BitMatrix,
    pub y: BitMatrix,
}

impl DominationSamples {
    pub fn new(x: BitMatrix, y: BitMatrix) -> Result<Self> {
        if x.rows() != y.rows() || x.cols() != y.cols() {
            return Err(Error::InputShape("X and Y dimensions differ".into()));
        }
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::InputShape("sample matrices must be non-empty".into()));
        }
        Ok(DominationSamples { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn r(&self) -> usize {
        self.x.cols()
    }

    /// `sum_j (X_ij - Y_ij)` over columns `start..end`.
    #[inline]
    pub fn diff(&self, i: usize, start: usize, end: usize) -> i64 {
        self.x.count_row(i, start, end) as i64 - self.y.count_row(i, start, end) as i64
    }

    /// The same samples with the roles of X and Y exchanged.
    pub fn swapped(&self) -> Self {
        DominationSamples { x: self.y.clone(), y: self.x.clone() }
    }

    /// Columns `start..start + len` of both matrices.
    pub fn columns(&self, start: usize, len: usize) -> Self {
        DominationSamples { x: self.x.columns(start, len), y: self.y.columns(start, len) }
    }
}

/// Hidden ground truth, kept away from solvers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Truth {
    HiddenBit(u8),
    Permutation(Permutation),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub truth: Truth,
    pub key: StreamKey,
}

impl GroundTruth {
    pub fn hidden_bit(&self) -> Option<u8> {
        match self.truth {
            Truth::HiddenBit(b) => Some(b),
            Truth::Permutation(_) => None,
        }
    }

    pub fn permutation(&self) -> Option<&Permutation> {
        match &self.truth {
            Truth::Permutation(p) => Some(p),
            Truth::HiddenBit(_) => None,
        }
    }
}

/// Draws the hidden bit of a Domination trial.
pub fn draw_hidden_bit(key: StreamKey) -> u8 {
    (key.rng(Domain::HiddenBit, 0).next_u64() >> 63) as u8
}

/// Samples for a known hidden bit. Row `i` of X is Bernoulli(p_i) when
/// `b = 0` and Bernoulli(q_i) when `b = 1`; Y takes the other vector.
pub fn sample_domination_with_bit(
    instance: &DominationInstance,
    r: usize,
    b: u8,
    key: StreamKey,
) -> Result<DominationSamples> {
    if r == 0 {
        return Err(Error::Precondition("r must be at least 1".into()));
    }
    let n = instance.n();
    let (xs, ys) = if b == 0 { (instance.p(), instance.q()) } else { (instance.q(), instance.p()) };
    let mut x = BitMatrix::zeros(n, r);
    let mut y = BitMatrix::zeros(n, r);
    for i in 0..n {
        rng::fill_bernoulli(&mut key.rng(Domain::X, i as u64), xs[i], x.row_mut(i), r);
        rng::fill_bernoulli(&mut key.rng(Domain::Y, i as u64), ys[i], y.row_mut(i), r);
    }
    DominationSamples::new(x, y)
}

pub fn sample_domination(
    instance: &DominationInstance,
    r: usize,
    key: StreamKey,
) -> Result<(DominationSamples, GroundTruth)> {
    let b = draw_hidden_bit(key);
    let samples = sample_domination_with_bit(instance, r, b, key)?;
    Ok((samples, GroundTruth { truth: Truth::HiddenBit(b), key }))
}

/// Comparison samples between labels. Only pairs `i < j` are stored; the
/// reverse orientation is the complement of the same comparison. Diagonal
/// cells carry no data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopKSamples {
    n: usize,
    r: usize,
    stride: usize,
    pairs: Vec<u64>,
}

#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl TopKSamples {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Packed samples of the comparison `i` vs `j` with `i < j`; bit `l` set
    /// means `i` won the `l`-th comparison.
    pub fn pair_row(&self, i: usize, j: usize) -> &[u64] {
        let idx = pair_index(self.n, i, j);
        &self.pairs[idx * self.stride..(idx + 1) * self.stride]
    }

    /// Writes `Z[i][j][..]` into `out`. Panics on `i == j`.
    pub fn copy_oriented(&self, i: usize, j: usize, out: &mut [u64]) {
        assert_ne!(i, j, "diagonal cells carry no samples");
        if i < j {
            out.copy_from_slice(self.pair_row(i, j));
        } else {
            for (o, w) in out.iter_mut().zip(self.pair_row(j, i)) {
                *o = !w;
            }
            rng::mask_tail(out, self.r);
        }
    }

    /// `Z[i][j][l]` for `i != j`.
    pub fn get(&self, i: usize, j: usize, l: usize) -> bool {
        assert_ne!(i, j, "diagonal cells carry no samples");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let bit = (self.pair_row(a, b)[l / 64] >> (l % 64)) & 1 == 1;
        if i < j {
            bit
        } else {
            !bit
        }
    }

    /// Builds samples from an explicit per-cell function, used by reductions
    /// that assemble comparison data from other sources. `f(i, j, l)` is only
    /// called with `i < j`.
    pub fn from_fn(n: usize, r: usize, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let stride = words_for(r);
        let mut pairs = vec![0u64; n * (n - 1) / 2 * stride];
        for i in 0..n {
            for j in (i + 1)..n {
                let base = pair_index(n, i, j) * stride;
                for l in 0..r {
                    if f(i, j, l) {
                        pairs[base + l / 64] |= 1 << (l % 64);
                    }
                }
            }
        }
        TopKSamples { n, r, stride, pairs }
    }
}

/// Samples a Top-K trial: a uniform hidden permutation and `r` comparisons
/// for every unordered pair of labels.
pub fn sample_topk(instance: &TopKInstance, r: usize, key: StreamKey) -> Result<(TopKSamples, GroundTruth)> {
    if r == 0 {
        return Err(Error::Precondition("r must be at least 1".into()));
    }
    let n = instance.n();
    let pi = Permutation::random(n, &mut key.rng(Domain::Permutation, 0));
    let m = instance.matrix();
    let stride = words_for(r);
    let mut pairs = vec![0u64; n * (n - 1) / 2 * stride];
    for i in 0..n {
        for j in (i + 1)..n {
            let idx = pair_index(n, i, j);
            let prob = m.get(pi.inverse(i), pi.inverse(j));
            let row = &mut pairs[idx * stride..(idx + 1) * stride];
            rng::fill_bernoulli(&mut key.rng(Domain::Pair, idx as u64), prob, row, r);
        }
    }
    Ok((TopKSamples { n, r, stride, pairs }, GroundTruth { truth: Truth::Permutation(pi), key }))
}

/// Debug dump of Domination samples; the layout is not a stable format.
#[derive(Debug, Serialize)]
pub struct SampleDump {
    pub n: usize,
    pub r: usize,
    pub word_order: &'static str,
    pub x: Vec<String>,
    pub y: Vec<String>,
}

impl From<&DominationSamples> for SampleDump {
    fn from(s: &DominationSamples) -> Self {
        SampleDump {
            n: s.n(),
            r: s.r(),
            word_order: "64-bit words, column l at bit l%64 of word l/64, words written most significant nibble first",
            x: s.x.to_hex_rows(),
            y: s.y.to_hex_rows(),
        }
    }
}
