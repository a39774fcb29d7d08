//! The fixed (4, 2) array code with eight stored bits per column and its
//! two-instance transformation over `F2[x]/(1 + x^12)`.
//!
//! Each column `a_j` is read as a polynomial of degree < 12 whose top four
//! coefficients are the extra bits `a_{8+m} = a_m + a_{4+m}`. Such vectors
//! are exactly the multiples of `1 + x^4`, an ideal, so cyclic shifts keep
//! them well formed. A coupling coefficient acts on that ideal only through
//! its residue mod `1 + x^4 + x^8`.

use crate::error::{CodeError, Result};
use crate::evenodd::MdsReport;
use crate::gf2::{BinaryCode, RepairRecipe};
use crate::meter::AccessReport;
use crate::ring::{Modulus, RingElement};

pub type QuadColumn = [u8; 8];

pub const QUAD_K: usize = 2;
pub const QUAD_D: usize = 3;
const RING_N: u32 = 12;

fn ring() -> Modulus {
    Modulus::circulant(RING_N).expect("12 is a valid circulant length")
}

pub fn quad_extra_bits(col: &QuadColumn) -> [u8; 4] {
    std::array::from_fn(|m| (col[m] ^ col[m + 4]) & 1)
}

/// Extended 12-bit polynomial of a stored column.
fn extend(col: &QuadColumn) -> RingElement {
    let extra = quad_extra_bits(col);
    let bits = col
        .iter()
        .chain(extra.iter())
        .enumerate()
        .fold(0u128, |acc, (i, &b)| acc | (u128::from(b & 1) << i));
    RingElement::from_bits(ring(), bits)
}

fn truncate(e: &RingElement) -> QuadColumn {
    std::array::from_fn(|i| u8::from(e.coeff(i as u32)))
}

fn parities(a0: &RingElement, a1: &RingElement) -> (RingElement, RingElement) {
    (*a0 + *a1, a0.shift_mul(1) + a1.shift_mul(2))
}

/// `a_{i,2} = a_{i,0} + a_{i,1}` and `a_{i,3} = a_{i-1,0} + a_{i-2,1}`, with
/// subscripts taken mod 12 through the extra bits.
pub fn quad_encode(info: &[QuadColumn; 2]) -> [QuadColumn; 4] {
    let (a0, a1) = (extend(&info[0]), extend(&info[1]));
    let (a2, a3) = parities(&a0, &a1);
    [info[0], info[1], truncate(&a2), truncate(&a3)]
}

/// Two instances `a`, `b` coupled on the parity columns: column 2 stores
/// `(a_2, b_2 + c a_3)` and column 3 stores `(a_3 + b_2, b_3)`.
pub fn quad_transformed_encode(
    a: &[QuadColumn; 2],
    b: &[QuadColumn; 2],
    coefficient: &RingElement,
) -> Result<[[QuadColumn; 2]; 4]> {
    if coefficient.modulus() != ring() {
        return Err(CodeError::InvalidParams(format!(
            "coefficient {coefficient} is not in F2[x]/(1+x^12)"
        )));
    }
    let (a0, a1) = (extend(&a[0]), extend(&a[1]));
    let (b0, b1) = (extend(&b[0]), extend(&b[1]));
    let (a2, a3) = parities(&a0, &a1);
    let (b2, b3) = parities(&b0, &b1);
    let mixed2 = b2 + *coefficient * a3;
    let mixed3 = a3 + b2;
    Ok([
        [a[0], b[0]],
        [a[1], b[1]],
        [truncate(&a2), truncate(&mixed2)],
        [truncate(&mixed3), truncate(&b3)],
    ])
}

/// Either the base code (8 bits per column) or a transformed code with a
/// given coupling coefficient (16 bits per column, first vector then second).
#[derive(Debug, Clone)]
pub struct QuadCode {
    coefficient: Option<RingElement>,
    code: BinaryCode,
}

fn column_from(bits: &[u8]) -> QuadColumn {
    std::array::from_fn(|i| bits[i])
}

const EVEN_ROWS: [usize; 4] = [0, 2, 4, 6];
const COL1_FROM_0: [usize; 6] = [0, 1, 3, 4, 5, 7];
const COL1_FROM_PARITY: [usize; 4] = [0, 1, 4, 5];

impl QuadCode {
    pub fn base() -> Self {
        let code = BinaryCode::from_encoder(QUAD_K, QUAD_D, 16, |bits| {
            quad_encode(&[column_from(&bits[..8]), column_from(&bits[8..])])
                .iter()
                .map(|c| c.to_vec())
                .collect()
        });
        QuadCode {
            coefficient: None,
            code,
        }
    }

    /// The transformed code with coefficient `x^4`.
    pub fn transformed() -> Self {
        Self::with_coefficient(RingElement::monomial(ring(), 4))
            .expect("x^4 is a valid coefficient")
    }

    pub fn with_coefficient(coefficient: RingElement) -> Result<Self> {
        quad_transformed_encode(&[[0; 8]; 2], &[[0; 8]; 2], &coefficient)?;
        let c = coefficient;
        let code = BinaryCode::from_encoder(QUAD_K, QUAD_D, 32, move |bits| {
            let a = [column_from(&bits[0..8]), column_from(&bits[16..24])];
            let b = [column_from(&bits[8..16]), column_from(&bits[24..32])];
            quad_transformed_encode(&a, &b, &c)
                .expect("coefficient checked above")
                .iter()
                .map(|pair| pair.concat())
                .collect()
        });
        Ok(QuadCode {
            coefficient: Some(coefficient),
            code,
        })
    }

    pub fn coefficient(&self) -> Option<&RingElement> {
        self.coefficient.as_ref()
    }

    pub fn binary(&self) -> &BinaryCode {
        &self.code
    }

    pub fn column_bits(&self) -> usize {
        self.code.column_bits
    }

    /// Information bits are laid out column by column, so the systematic
    /// columns are the first `2 * column_bits` bits verbatim.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<Vec<u8>>> {
        self.code.encode(info)
    }

    /// The bits read to rebuild column `f`, as `(column, bit)` pairs.
    pub fn download_set(&self, f: usize) -> Result<Vec<(usize, usize)>> {
        let rows: Vec<(usize, Vec<usize>)> = match f {
            0 => (1..4).map(|c| (c, EVEN_ROWS.to_vec())).collect(),
            1 => vec![
                (0, COL1_FROM_0.to_vec()),
                (2, COL1_FROM_PARITY.to_vec()),
                (3, COL1_FROM_PARITY.to_vec()),
            ],
            2 | 3 => {
                let all: Vec<usize> = (0..8).collect();
                if self.coefficient.is_none() {
                    return Ok([0, 1]
                        .iter()
                        .flat_map(|&c| all.iter().map(move |&i| (c, i)))
                        .collect());
                }
                // Column 2 needs only first vectors, column 3 only second ones.
                let offset = if f == 2 { 0 } else { 8 };
                return Ok([0, 1, 5 - f]
                    .iter()
                    .flat_map(|&c| all.iter().map(move |&i| (c, i + offset)))
                    .collect());
            }
            _ => return Err(CodeError::ColumnOutOfRange(f)),
        };
        let halves: &[usize] = if self.coefficient.is_some() {
            &[0, 8]
        } else {
            &[0]
        };
        Ok(rows
            .iter()
            .flat_map(|(c, idx)| {
                halves
                    .iter()
                    .flat_map(move |&h| idx.iter().map(move |&i| (*c, i + h)))
            })
            .collect())
    }

    pub fn repair_recipe(&self, f: usize) -> Result<RepairRecipe> {
        self.code.repair_recipe(f, &self.download_set(f)?)
    }

    pub fn repair(&self, f: usize, columns: &[Option<&[u8]>]) -> Result<(Vec<u8>, AccessReport)> {
        self.repair_recipe(f)?.repair(columns)
    }

    /// Rebuilds the information bits from any two surviving columns.
    pub fn decode(&self, columns: &[Option<&[u8]>]) -> Result<Vec<u8>> {
        let alive: Vec<usize> = (0..4)
            .filter(|&c| columns.get(c).copied().flatten().is_some())
            .collect();
        if alive.len() < QUAD_K {
            return Err(CodeError::TooManyErasures {
                erased: 4 - alive.len(),
                max: 2,
            });
        }
        self.code.decode_recipe(&alive[..QUAD_K])?.decode(columns)
    }

    pub fn check_mds(&self) -> MdsReport {
        self.code.check_mds()
    }
}

/// Repairs column `f` of a base codeword.
pub fn quad_repair(f: usize, array: &[QuadColumn; 4]) -> Result<(QuadColumn, AccessReport)> {
    let columns: Vec<Option<&[u8]>> = (0..4).map(|c| (c != f).then_some(&array[c][..])).collect();
    let (bits, report) = QuadCode::base().repair(f, &columns)?;
    Ok((column_from(&bits), report))
}

/// Repairs column `f` of a transformed codeword built with coefficient `x^4`.
pub fn quad_transformed_repair(
    f: usize,
    array: &[[QuadColumn; 2]; 4],
) -> Result<([QuadColumn; 2], AccessReport)> {
    let flat: Vec<Vec<u8>> = array.iter().map(|pair| pair.concat()).collect();
    let columns: Vec<Option<&[u8]>> = (0..4).map(|c| (c != f).then_some(&flat[c][..])).collect();
    let (bits, report) = QuadCode::transformed().repair(f, &columns)?;
    Ok(([column_from(&bits[..8]), column_from(&bits[8..])], report))
}
