//! EVENODD codes over `R_p` with `r` parity columns.
//!
//! Column `k + j` stores `sum_i x^(i*j) a_i`. Column `k` is therefore the plain
//! XOR of the information columns. The classic adjuster bit is absorbed by
//! the canonical form of `R_p`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CodeError, Result};
use crate::ring::{Modulus, RingElement};

/// Code parameters shared by the base and the transformed codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub k: usize,
    pub r: usize,
    pub d: usize,
    pub p: u32,
    pub e: u32,
    pub layers: usize,
}

impl CodeParams {
    pub fn new(k: usize, r: usize, d: usize, p: u32, e: u32, layers: usize) -> Result<Self> {
        let params = CodeParams {
            k,
            r,
            d,
            p,
            e,
            layers,
        };
        params.validate()?;
        Ok(params)
    }

    /// Untransformed EVENODD with `d = k`.
    pub fn base(k: usize, r: usize, p: u32) -> Result<Self> {
        Self::new(k, r, k, p, 1, 0)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CodeError::InvalidParams(msg));
        if self.k == 0 || self.r == 0 {
            return bad(format!(
                "k={} and r={} must both be positive",
                self.k, self.r
            ));
        }
        Modulus::evenodd(self.p)?;
        if (self.p as usize) < self.k.max(self.r) {
            return bad(format!("p={} must be at least max(k, r)", self.p));
        }
        if self.e == 0 || self.e >= self.p {
            return bad(format!("e={} must lie in 1..p-1", self.e));
        }
        if self.d < self.k || self.d > (self.k + self.r - 1).max(self.k) {
            return bad(format!("d={} must satisfy k <= d <= k+r-1", self.d));
        }
        if self.layers > 0 && self.d == self.k {
            return bad("transformed codes need d > k".into());
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.k + self.r
    }

    /// Partition width `d - k + 1`.
    pub fn t(&self) -> usize {
        self.d - self.k + 1
    }

    pub fn modulus(&self) -> Modulus {
        Modulus::EvenoddRing { p: self.p }
    }

    /// Ring elements per column.
    pub fn rows(&self) -> usize {
        self.t().pow(self.layers as u32)
    }

    /// Bits per column.
    pub fn column_bits(&self) -> usize {
        self.rows() * (self.p as usize - 1)
    }
}

/// A codeword: `k + r` columns of equal length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodewordArray {
    pub params: CodeParams,
    pub columns: Vec<Vec<RingElement>>,
}

impl CodewordArray {
    pub fn zero(params: CodeParams) -> Self {
        let z = RingElement::zero(params.modulus());
        CodewordArray {
            params,
            columns: vec![vec![z; params.rows()]; params.n()],
        }
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn info(&self) -> &[Vec<RingElement>] {
        &self.columns[..self.params.k]
    }

    /// Column-wise sum of two arrays with the same parameters.
    pub fn xor(&self, other: &Self) -> Self {
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| *x + *y).collect())
            .collect();
        CodewordArray {
            params: self.params,
            columns,
        }
    }
}

/// A set of erased column indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ErasurePattern {
    erased: Vec<usize>,
}

impl ErasurePattern {
    pub fn new(erased: impl IntoIterator<Item = usize>, n: usize, r: usize) -> Result<Self> {
        let mut erased: Vec<usize> = erased.into_iter().collect();
        erased.sort_unstable();
        erased.dedup();
        if let Some(&bad) = erased.iter().find(|&&c| c >= n) {
            return Err(CodeError::ColumnOutOfRange(bad));
        }
        if erased.len() > r {
            return Err(CodeError::TooManyErasures {
                erased: erased.len(),
                max: r,
            });
        }
        Ok(ErasurePattern { erased })
    }

    pub fn erased(&self) -> &[usize] {
        &self.erased
    }

    pub fn contains(&self, column: usize) -> bool {
        self.erased.binary_search(&column).is_ok()
    }

    pub fn survivors(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|c| !self.contains(*c)).collect()
    }
}

/// Parity row of one codeword: writes `k + r` elements into `out`.
pub fn encode_row(params: &CodeParams, info: &[RingElement], out: &mut [RingElement]) {
    let (k, r, p) = (params.k, params.r, params.p);
    out[..k].copy_from_slice(&info[..k]);
    for j in 0..r {
        let mut acc = RingElement::zero(params.modulus());
        for (i, a) in info.iter().enumerate() {
            acc += a.shift_mul(((i * j) % p as usize) as u32);
        }
        out[k + j] = acc;
    }
}

/// Single-row EVENODD encoding.
pub fn encode(params: &CodeParams, info: &[RingElement]) -> Result<CodewordArray> {
    if info.len() != params.k {
        return Err(CodeError::ShapeMismatch {
            expected: params.k,
            got: info.len(),
        });
    }
    if let Some(a) = info.iter().find(|a| a.modulus() != params.modulus()) {
        return Err(crate::ring::RingError::ModulusMismatch(a.modulus(), params.modulus()).into());
    }
    let mut row = vec![RingElement::zero(params.modulus()); params.n()];
    encode_row(params, info, &mut row);
    Ok(CodewordArray {
        params: CodeParams {
            layers: 0,
            ..*params
        },
        columns: row.into_iter().map(|x| vec![x]).collect(),
    })
}

/// Erasure decoder for one erasure pattern, reusable across rows.
///
/// Erased information columns are found by solving the Vandermonde system in
/// powers of `x` built from the first surviving parities.
#[derive(Debug, Clone)]
pub struct RowDecoder {
    params: CodeParams,
    erased_info: Vec<usize>,
    known_info: Vec<usize>,
    parities: Vec<usize>,
    erased_parity: bool,
    /// Inverse of the Vandermonde block, row-major.
    inverse: Vec<Vec<RingElement>>,
}

impl RowDecoder {
    pub fn new(params: &CodeParams, erased: &[usize]) -> Result<Self> {
        let pattern = ErasurePattern::new(erased.iter().copied(), params.n(), params.r)?;
        let (k, p) = (params.k, params.p as usize);
        let erased_info: Vec<usize> = pattern
            .erased()
            .iter()
            .copied()
            .filter(|&c| c < k)
            .collect();
        let known_info: Vec<usize> = (0..k).filter(|c| !pattern.contains(*c)).collect();
        let parities: Vec<usize> = (0..params.r)
            .filter(|j| !pattern.contains(k + j))
            .take(erased_info.len())
            .collect();
        let g = erased_info.len();
        let m = params.modulus();
        let matrix: Vec<Vec<RingElement>> = parities
            .iter()
            .map(|&j| {
                erased_info
                    .iter()
                    .map(|&e| RingElement::monomial(m, ((e * j) % p) as u32))
                    .collect()
            })
            .collect();
        let inverse = invert_matrix(matrix, g, m).ok_or_else(|| {
            CodeError::DecodeFailed(format!(
                "singular system for erased columns {:?} with p={}",
                pattern.erased(),
                params.p
            ))
        })?;
        Ok(RowDecoder {
            params: *params,
            erased_parity: pattern.erased().iter().any(|&c| c >= k),
            erased_info,
            known_info,
            parities,
            inverse,
        })
    }

    /// Fills the erased entries of one row in place.
    pub fn decode(&self, row: &mut [RingElement]) {
        let (k, p) = (self.params.k, self.params.p as usize);
        if !self.erased_info.is_empty() {
            let syndromes: Vec<RingElement> = self
                .parities
                .iter()
                .map(|&j| {
                    let mut s = row[k + j];
                    for &i in &self.known_info {
                        s += row[i].shift_mul(((i * j) % p) as u32);
                    }
                    s
                })
                .collect();
            for (idx, &e) in self.erased_info.iter().enumerate() {
                let mut acc = RingElement::zero(self.params.modulus());
                for (coef, s) in self.inverse[idx].iter().zip(&syndromes) {
                    acc += *coef * *s;
                }
                row[e] = acc;
            }
        }
        if self.erased_parity {
            let info = row[..k].to_vec();
            encode_row(&self.params, &info, row);
        }
    }
}

/// Gauss-Jordan inversion over `R_p`, pivoting only on units.
fn invert_matrix(
    mut a: Vec<Vec<RingElement>>,
    n: usize,
    m: Modulus,
) -> Option<Vec<Vec<RingElement>>> {
    let mut inv: Vec<Vec<RingElement>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        RingElement::one(m)
                    } else {
                        RingElement::zero(m)
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let (pivot, pinv) =
            (col..n).find_map(|row| a[row][col].inverse().ok().map(|g| (row, g)))?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        for j in 0..n {
            a[col][j] = a[col][j] * pinv;
            inv[col][j] = inv[col][j] * pinv;
        }
        for row in 0..n {
            if row != col && !a[row][col].is_zero() {
                let f = a[row][col];
                for j in 0..n {
                    let (x, y) = (a[col][j], inv[col][j]);
                    a[row][j] += f * x;
                    inv[row][j] += f * y;
                }
            }
        }
    }
    Some(inv)
}

/// Recovers the erased columns of a single-row codeword.
pub fn syndrome_decode(array: &CodewordArray, pattern: &ErasurePattern) -> Result<CodewordArray> {
    let params = array.params;
    if params.layers != 0 {
        return Err(CodeError::InvalidParams(
            "syndrome_decode expects an untransformed array".into(),
        ));
    }
    let decoder = RowDecoder::new(&params, pattern.erased())?;
    let mut out = array.clone();
    for row in 0..array.rows() {
        let mut values: Vec<RingElement> = out.columns.iter().map(|c| c[row]).collect();
        decoder.decode(&mut values);
        for (col, v) in out.columns.iter_mut().zip(values) {
            col[row] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MdsReport {
    pub is_mds: bool,
    /// Surviving column set that failed to decode, if any.
    pub counterexample: Option<Vec<usize>>,
}

/// Every `k`-subset of `r`-erasure patterns, as erased column lists.
pub fn erasure_patterns(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for c in start..n {
            cur.push(c);
            rec(c + 1, n, size, cur, out);
            cur.pop();
        }
    }
    rec(0, n, size, &mut current, &mut out);
    out
}

const MDS_RANDOM_TRIALS: usize = 8;

/// Checks that every set of `k` columns decodes basis and random codewords.
pub fn check_mds(params: &CodeParams) -> MdsReport {
    let base = CodeParams {
        layers: 0,
        ..*params
    };
    let m = base.modulus();
    let mut trials: Vec<Vec<RingElement>> = Vec::new();
    for i in 0..base.k {
        for b in 0..base.p - 1 {
            let mut info = vec![RingElement::zero(m); base.k];
            info[i] = RingElement::monomial(m, b);
            trials.push(info);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..MDS_RANDOM_TRIALS {
        trials.push(
            (0..base.k)
                .map(|_| RingElement::random(m, &mut rng))
                .collect(),
        );
    }
    for erased in erasure_patterns(base.n(), base.r) {
        let survivors: Vec<usize> = (0..base.n()).filter(|c| !erased.contains(c)).collect();
        let Ok(decoder) = RowDecoder::new(&base, &erased) else {
            return MdsReport {
                is_mds: false,
                counterexample: Some(survivors),
            };
        };
        for info in &trials {
            let mut row = vec![RingElement::zero(m); base.n()];
            encode_row(&base, info, &mut row);
            let original = row.clone();
            for &c in &erased {
                row[c] = RingElement::zero(m);
            }
            decoder.decode(&mut row);
            if row != original {
                return MdsReport {
                    is_mds: false,
                    counterexample: Some(survivors),
                };
            }
        }
    }
    MdsReport {
        is_mds: true,
        counterexample: None,
    }
}
