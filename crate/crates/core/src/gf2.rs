//! Binary linear codes described by their generator, with an elimination
//! solver that turns "which bits were downloaded" into XOR recipes for the
//! bits that need rebuilding.

use crate::error::{CodeError, Result};
use crate::evenodd::{erasure_patterns, MdsReport};
use crate::meter::{audit, AccessReport, BoundContext, TracedReader};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }

    /// Inner product with a 0/1 byte vector.
    pub fn dot(&self, bits: &[u8]) -> u8 {
        self.ones().fold(0, |acc, i| acc ^ (bits[i] & 1))
    }
}

/// Incremental basis with pivots on the lowest set bit, tracking which
/// inputs each basis vector combines.
struct Basis {
    rows: Vec<Option<(BitVec, BitVec)>>,
    sources: usize,
}

impl Basis {
    fn new(width: usize, sources: usize) -> Self {
        Basis {
            rows: vec![None; width],
            sources,
        }
    }

    /// Reduces `v`; returns the residue and the combination used.
    fn reduce(&self, mut v: BitVec, mut combo: BitVec) -> (BitVec, BitVec) {
        while let Some(pivot) = v.first_one() {
            match &self.rows[pivot] {
                Some((b, c)) => {
                    v.xor_assign(b);
                    combo.xor_assign(c);
                }
                None => break,
            }
        }
        (v, combo)
    }

    /// Returns false when `v` is already in the span.
    fn insert(&mut self, v: BitVec, source: usize) -> bool {
        let (v, combo) = self.reduce(v, BitVec::unit(self.sources, source));
        match v.first_one() {
            Some(pivot) => {
                self.rows[pivot] = Some((v, combo));
                true
            }
            None => false,
        }
    }

    /// Combination of sources equal to `v`, if it lies in the span.
    fn express(&self, v: &BitVec) -> Option<Vec<usize>> {
        let (residue, combo) = self.reduce(v.clone(), BitVec::zeros(self.sources));
        residue.is_zero().then(|| combo.ones().collect())
    }
}

/// Array code over GF(2): column `c`, bit `i` equals `<generator[c][i], info>`.
#[derive(Debug, Clone)]
pub struct BinaryCode {
    pub k: usize,
    pub d: usize,
    pub info_bits: usize,
    pub column_bits: usize,
    generator: Vec<Vec<BitVec>>,
}

/// Bits to XOR for each rebuilt bit, expressed as indices into `downloads`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairRecipe {
    pub failed: usize,
    pub downloads: Vec<(usize, usize)>,
    combos: Vec<Vec<usize>>,
    context: BoundContext,
}

impl RepairRecipe {
    pub fn bits(&self) -> usize {
        self.downloads.len()
    }

    /// Reads the planned bits and rebuilds the failed column.
    pub fn repair(&self, columns: &[Option<&[u8]>]) -> Result<(Vec<u8>, AccessReport)> {
        let mut reader = TracedReader::new(columns.to_vec(), 1, self.context);
        let values = self
            .downloads
            .iter()
            .map(|&(c, i)| reader.read(c, i))
            .collect::<Result<Vec<u8>>>()?;
        let column = self
            .combos
            .iter()
            .map(|combo| combo.iter().fold(0u8, |acc, &s| acc ^ values[s]))
            .collect();
        Ok((column, audit(&reader.finish())?))
    }
}

/// Rebuilds the information bits from a fixed set of whole columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeRecipe {
    pub columns: Vec<usize>,
    combos: Vec<Vec<(usize, usize)>>,
}

impl DecodeRecipe {
    pub fn decode(&self, columns: &[Option<&[u8]>]) -> Result<Vec<u8>> {
        self.combos
            .iter()
            .map(|combo| {
                combo.iter().try_fold(0u8, |acc, &(c, i)| {
                    let col = columns
                        .get(c)
                        .copied()
                        .flatten()
                        .ok_or(CodeError::MissingHelper(c))?;
                    Ok(acc ^ col[i])
                })
            })
            .collect()
    }
}

impl BinaryCode {
    /// Builds the generator by encoding every unit vector.
    pub fn from_encoder<F>(k: usize, d: usize, info_bits: usize, encoder: F) -> Self
    where
        F: Fn(&[u8]) -> Vec<Vec<u8>>,
    {
        let images: Vec<Vec<Vec<u8>>> = (0..info_bits)
            .map(|i| {
                let mut unit = vec![0u8; info_bits];
                unit[i] = 1;
                encoder(&unit)
            })
            .collect();
        let n = images.first().map_or(0, Vec::len);
        let column_bits = images
            .first()
            .and_then(|cols| cols.first())
            .map_or(0, Vec::len);
        let generator = (0..n)
            .map(|c| {
                (0..column_bits)
                    .map(|b| {
                        let mut row = BitVec::zeros(info_bits);
                        for (i, img) in images.iter().enumerate() {
                            row.set(i, img[c][b] == 1);
                        }
                        row
                    })
                    .collect()
            })
            .collect();
        BinaryCode {
            k,
            d,
            info_bits,
            column_bits,
            generator,
        }
    }

    pub fn n(&self) -> usize {
        self.generator.len()
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<Vec<u8>>> {
        if info.len() != self.info_bits {
            return Err(CodeError::ShapeMismatch {
                expected: self.info_bits,
                got: info.len(),
            });
        }
        Ok(self
            .generator
            .iter()
            .map(|col| col.iter().map(|row| row.dot(info)).collect())
            .collect())
    }

    /// Plans a repair of `failed` from exactly the listed bits. Fails when
    /// those bits do not determine the column.
    pub fn repair_recipe(
        &self,
        failed: usize,
        downloads: &[(usize, usize)],
    ) -> Result<RepairRecipe> {
        if failed >= self.n() {
            return Err(CodeError::ColumnOutOfRange(failed));
        }
        if let Some(&(c, i)) = downloads
            .iter()
            .find(|&&(c, i)| c == failed || c >= self.n() || i >= self.column_bits)
        {
            return Err(CodeError::InvalidRepairSets(format!(
                "cannot download bit {i} of column {c}"
            )));
        }
        let mut basis = Basis::new(self.info_bits, downloads.len());
        for (s, &(c, i)) in downloads.iter().enumerate() {
            basis.insert(self.generator[c][i].clone(), s);
        }
        let combos = self.generator[failed]
            .iter()
            .map(|row| basis.express(row))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                CodeError::InvalidRepairSets(format!(
                    "downloaded bits do not determine column {failed}"
                ))
            })?;
        Ok(RepairRecipe {
            failed,
            downloads: downloads.to_vec(),
            combos,
            context: BoundContext {
                k: self.k,
                d: self.d,
                column_bits: self.column_bits as u64,
                failed,
            },
        })
    }

    /// Plans decoding of the information bits from whole columns.
    pub fn decode_recipe(&self, columns: &[usize]) -> Result<DecodeRecipe> {
        let sources: Vec<(usize, usize)> = columns
            .iter()
            .flat_map(|&c| (0..self.column_bits).map(move |i| (c, i)))
            .collect();
        let mut basis = Basis::new(self.info_bits, sources.len());
        for (s, &(c, i)) in sources.iter().enumerate() {
            if c >= self.n() {
                return Err(CodeError::ColumnOutOfRange(c));
            }
            basis.insert(self.generator[c][i].clone(), s);
        }
        let combos = (0..self.info_bits)
            .map(|b| {
                basis
                    .express(&BitVec::unit(self.info_bits, b))
                    .map(|combo| combo.into_iter().map(|s| sources[s]).collect())
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                CodeError::DecodeFailed(format!("columns {columns:?} do not determine the data"))
            })?;
        Ok(DecodeRecipe {
            columns: columns.to_vec(),
            combos,
        })
    }

    /// Exact MDS check: every `k` columns determine the information bits.
    pub fn check_mds(&self) -> MdsReport {
        for erased in erasure_patterns(self.n(), self.n() - self.k) {
            let survivors: Vec<usize> = (0..self.n()).filter(|c| !erased.contains(c)).collect();
            if self.decode_recipe(&survivors).is_err() {
                return MdsReport {
                    is_mds: false,
                    counterexample: Some(survivors),
                };
            }
        }
        MdsReport {
            is_mds: true,
            counterexample: None,
        }
    }
}
