//! Two-instance EVENODD with `r = 2` whose parity columns mix the instances
//! so that either parity column is repaired from `k + 1` whole vectors,
//! while information columns keep the roughly 3/4 repair of plain EVENODD.
//!
//! Column layout (first vector, second vector):
//! information column `j` holds `(a_j, b_j)`, column `k` holds
//! `(a_k + b_k, b_{k+1})` and column `k + 1` holds
//! `(a_{k+1}, a_k + bar(b_k) + star(b_k))`.

use std::collections::BTreeSet;

use crate::error::{CodeError, Result};
use crate::evenodd::{encode_row, CodeParams, MdsReport};
use crate::gf2::{BinaryCode, RepairRecipe};
use crate::meter::AccessReport;
use crate::ring::RingElement;

/// The two vectors stored in one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TePair {
    pub a: RingElement,
    pub b: RingElement,
}

fn to_bits(e: &RingElement, len: usize) -> Vec<u8> {
    (0..len).map(|i| u8::from(e.coeff(i as u32))).collect()
}

fn from_bits(params: &CodeParams, bits: &[u8]) -> RingElement {
    let packed = bits
        .iter()
        .enumerate()
        .fold(0u128, |acc, (i, &b)| acc | (u128::from(b & 1) << i));
    RingElement::from_bits(params.modulus(), packed)
}

/// Swaps entries `2i` and `2i + 1` of a `(p - 1)`-vector.
pub fn star(v: &[u8]) -> Vec<u8> {
    (0..v.len()).map(|i| v[i ^ 1]).collect()
}

/// Zeroes the odd entries.
pub fn bar(v: &[u8]) -> Vec<u8> {
    v.iter()
        .enumerate()
        .map(|(i, &x)| if i % 2 == 0 { x } else { 0 })
        .collect()
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

fn base_params(k: usize, p: u32) -> Result<CodeParams> {
    if p < 3 || p.is_multiple_of(2) {
        return Err(CodeError::InvalidParams(format!(
            "p={p} must be an odd prime"
        )));
    }
    if k < 2 || k >= p as usize {
        return Err(CodeError::InvalidParams(format!(
            "need 2 <= k <= p-1, got k={k}, p={p}"
        )));
    }
    CodeParams::base(k, 2, p)
}

/// Encodes `k` information columns into `k + 2` columns. Works for any odd
/// prime `p > k`; the repair guarantees additionally need `p = 1 mod 4`.
pub fn te2_encode(info: &[TePair], p: u32) -> Result<Vec<TePair>> {
    let params = base_params(info.len(), p)?;
    let k = params.k;
    let m = params.modulus();
    if let Some(e) = info
        .iter()
        .flat_map(|t| [t.a, t.b])
        .find(|e| e.modulus() != m)
    {
        return Err(CodeError::InvalidParams(format!(
            "element {e} is not in R_{p}"
        )));
    }
    let instance = |pick: fn(&TePair) -> RingElement| {
        let data: Vec<RingElement> = info.iter().map(pick).collect();
        let mut row = vec![RingElement::zero(m); k + 2];
        encode_row(&params, &data, &mut row);
        row
    };
    let a = instance(|t| t.a);
    let b = instance(|t| t.b);
    let len = p as usize - 1;
    let (bk, ak) = (to_bits(&b[k], len), to_bits(&a[k], len));
    let mixed = xor(&xor(&ak, &bar(&bk)), &star(&bk));
    let mut out = info.to_vec();
    out.push(TePair {
        a: a[k] + b[k],
        b: b[k + 1],
    });
    out.push(TePair {
        a: a[k + 1],
        b: from_bits(&params, &mixed),
    });
    Ok(out)
}

/// The plain EVENODD code with `r = 2` as a binary code, one row per column.
fn evenodd_binary(params: &CodeParams) -> BinaryCode {
    let (k, len) = (params.k, params.p as usize - 1);
    BinaryCode::from_encoder(k, k + 1, k * len, |bits| {
        let data: Vec<RingElement> = bits.chunks(len).map(|c| from_bits(params, c)).collect();
        let mut row = vec![RingElement::zero(params.modulus()); k + 2];
        encode_row(params, &data, &mut row);
        row.iter().map(|e| to_bits(e, len)).collect()
    })
}

/// Bit positions of the failed column's repair in plain EVENODD: which rows
/// of each helper column are read. Rows below `(p - 1) / 2` come from the row
/// parity and the rest from diagonals; the diagonal adjuster is taken from
/// whichever diagonal adds the fewest extra reads. `sets[f]` is empty.
pub fn evenodd_info_repair_sets(f: usize, k: usize, p: u32) -> Result<Vec<Vec<usize>>> {
    let params = base_params(k, p)?;
    if f >= k {
        return Err(CodeError::ColumnOutOfRange(f));
    }
    let p = p as usize;
    let h = (p - 1) / 2;
    let mut need: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..h {
        need.extend((0..=k).filter(|&j| j != f).map(|j| (j, i)));
    }
    // Bits of diagonal `m` other than column `f`, plus its stored parity.
    let diagonal = |m: usize| -> Vec<(usize, usize)> {
        let mut bits: Vec<(usize, usize)> = (0..k)
            .filter(|&j| j != f)
            .map(|j| (j, (m + p - j) % p))
            .filter(|&(_, i)| i != p - 1)
            .collect();
        if m != p - 1 {
            bits.push((k + 1, m));
        }
        bits
    };
    for i in h..p - 1 {
        need.extend(diagonal((i + f) % p));
    }
    let known = |m: usize| {
        let i = (m + p - f) % p;
        i < h || i == p - 1
    };
    let best = (0..p)
        .filter(|&m| known(m))
        .map(|m| {
            let mut total = need.clone();
            total.extend(diagonal(m));
            total
        })
        .min_by_key(BTreeSet::len)
        .ok_or_else(|| CodeError::InvalidRepairSets("no diagonal yields the adjuster".into()))?;
    let mut sets = vec![Vec::new(); k + 2];
    for (j, i) in best {
        sets[j].push(i);
    }
    let downloads: Vec<(usize, usize)> = sets
        .iter()
        .enumerate()
        .flat_map(|(j, s)| s.iter().map(move |&i| (j, i)))
        .collect();
    evenodd_binary(&params).repair_recipe(f, &downloads)?;
    Ok(sets)
}

/// The transformed code as a binary code over `2(p - 1)`-bit columns.
#[derive(Debug, Clone)]
pub struct Te2Code {
    params: CodeParams,
    code: BinaryCode,
    base: BinaryCode,
}

impl Te2Code {
    pub fn new(k: usize, p: u32) -> Result<Self> {
        let params = base_params(k, p)?;
        if !(p - 1).is_multiple_of(4) {
            return Err(CodeError::InvalidParams(format!(
                "p={p} must satisfy p = 1 mod 4"
            )));
        }
        let len = p as usize - 1;
        let code = BinaryCode::from_encoder(k, k + 1, 2 * k * len, |bits| {
            let info: Vec<TePair> = bits
                .chunks(2 * len)
                .map(|c| TePair {
                    a: from_bits(&params, &c[..len]),
                    b: from_bits(&params, &c[len..]),
                })
                .collect();
            te2_encode(&info, p)
                .expect("parameters checked above")
                .iter()
                .map(|t| [to_bits(&t.a, len), to_bits(&t.b, len)].concat())
                .collect()
        });
        let base = evenodd_binary(&params);
        Ok(Te2Code { params, code, base })
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn p(&self) -> u32 {
        self.params.p
    }

    fn half(&self) -> usize {
        self.params.p as usize - 1
    }

    pub fn column_bits(&self) -> usize {
        2 * self.half()
    }

    pub fn binary(&self) -> &BinaryCode {
        &self.code
    }

    /// Columns as bit vectors, first vector then second. Information bits
    /// are laid out column by column.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<Vec<u8>>> {
        self.code.encode(info)
    }

    pub fn pairs_to_bits(&self, columns: &[TePair]) -> Vec<Vec<u8>> {
        let len = self.half();
        columns
            .iter()
            .map(|t| [to_bits(&t.a, len), to_bits(&t.b, len)].concat())
            .collect()
    }

    /// Downloads for column `f`. Information repairs take the plain EVENODD
    /// sets `sets` (defaulting to [`evenodd_info_repair_sets`]) and read both
    /// vectors at the same rows.
    pub fn download_set(
        &self,
        f: usize,
        sets: Option<&[Vec<usize>]>,
    ) -> Result<Vec<(usize, usize)>> {
        let (k, len) = (self.params.k, self.half());
        let whole = |c: usize, offset: usize| (0..len).map(move |i| (c, i + offset));
        if f == k {
            return Ok((0..k)
                .flat_map(|j| whole(j, len))
                .chain(whole(k + 1, len))
                .collect());
        }
        if f == k + 1 {
            return Ok((0..k)
                .flat_map(|j| whole(j, 0))
                .chain(whole(k, 0))
                .collect());
        }
        if f > k + 1 {
            return Err(CodeError::ColumnOutOfRange(f));
        }
        let owned;
        let sets = match sets {
            Some(s) => s,
            None => {
                owned = evenodd_info_repair_sets(f, k, self.params.p)?;
                &owned
            }
        };
        self.validate_sets(f, sets)?;
        let h = len / 2;
        let mut out = Vec::new();
        for (j, s) in sets.iter().enumerate().take(k) {
            if j != f {
                out.extend(s.iter().map(|&i| (j, i)));
                out.extend(s.iter().map(|&i| (j, i + len)));
            }
        }
        out.extend((0..h).map(|i| (k, i)));
        out.extend(sets[k + 1].iter().map(|&i| (k, i + len)));
        out.extend(sets[k + 1].iter().map(|&i| (k + 1, i)));
        out.extend((0..h).map(|i| (k + 1, i + len)));
        Ok(out)
    }

    fn validate_sets(&self, f: usize, sets: &[Vec<usize>]) -> Result<()> {
        let (k, len) = (self.params.k, self.half());
        if sets.len() != k + 2 {
            return Err(CodeError::InvalidRepairSets(format!(
                "expected {} sets, got {}",
                k + 2,
                sets.len()
            )));
        }
        if !sets[f].is_empty() {
            return Err(CodeError::InvalidRepairSets(format!(
                "set of the failed column {f} is not empty"
            )));
        }
        if sets[k] != (0..len / 2).collect::<Vec<_>>() {
            return Err(CodeError::InvalidRepairSets(format!(
                "row-parity set must be 0..{}, got {:?}",
                len / 2,
                sets[k]
            )));
        }
        let downloads: Vec<(usize, usize)> = sets
            .iter()
            .enumerate()
            .flat_map(|(j, s)| s.iter().map(move |&i| (j, i)))
            .collect();
        self.base.repair_recipe(f, &downloads).map(|_| ())
    }

    pub fn repair_recipe(&self, f: usize, sets: Option<&[Vec<usize>]>) -> Result<RepairRecipe> {
        self.code.repair_recipe(f, &self.download_set(f, sets)?)
    }

    pub fn decode(&self, columns: &[Option<&[u8]>]) -> Result<Vec<u8>> {
        let n = self.params.n();
        let alive: Vec<usize> = (0..n)
            .filter(|&c| columns.get(c).copied().flatten().is_some())
            .collect();
        if alive.len() < self.params.k {
            return Err(CodeError::TooManyErasures {
                erased: n - alive.len(),
                max: 2,
            });
        }
        self.code
            .decode_recipe(&alive[..self.params.k])?
            .decode(columns)
    }

    pub fn check_mds(&self) -> MdsReport {
        self.code.check_mds()
    }
}

/// Repairs column `f`; `sets` are plain EVENODD repair sets for an
/// information column and are ignored for parity columns.
pub fn te2_repair(
    code: &Te2Code,
    f: usize,
    columns: &[Option<&[u8]>],
    sets: Option<&[Vec<usize>]>,
) -> Result<(Vec<u8>, AccessReport)> {
    code.repair_recipe(f, sets)?.repair(columns)
}
