//! Uniform stripe-level interface over the supported codes. Every code is
//! systematic, so a stripe's information bits are the first `k` columns
//! concatenated.

use anyhow::{bail, Context, Result};
use xmds::gf2::{DecodeRecipe, RepairRecipe};
use xmds::multilayer::{full_layers, MultilayerCode, RepairPlan};
use xmds::quad::QuadCode;
use xmds::te2::Te2Code;
use xmds::{AccessReport, CodeError, CodeParams, Modulus, RingElement};

use crate::shard::{CodeId, ShardHeader, VERSION};

/// Code parameters as stored in shard headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct CodeSpec {
    pub code: CodeId,
    pub k: usize,
    pub r: usize,
    pub d: usize,
    pub p: u32,
    pub e: u32,
    pub layers: usize,
}

impl CodeSpec {
    /// Fills in the parameters each code fixes and checks the rest.
    pub fn new(
        code: CodeId,
        k: usize,
        r: usize,
        d: Option<usize>,
        p: u32,
        e: u32,
        layers: Option<usize>,
    ) -> Result<Self> {
        let spec = match code {
            CodeId::Multilayer => {
                let d = d.unwrap_or(k + r - 1);
                let t = d.saturating_sub(k) + 1;
                let layers = match layers {
                    Some(l) => l,
                    None if d > k => full_layers(k, r, t),
                    None => 0,
                };
                CodeSpec {
                    code,
                    k,
                    r,
                    d,
                    p,
                    e,
                    layers,
                }
            }
            CodeId::QuadBase | CodeId::QuadTransformed => CodeSpec {
                code,
                k: 2,
                r: 2,
                d: 3,
                p: 3,
                e: 4,
                layers: usize::from(code == CodeId::QuadTransformed),
            },
            CodeId::Te2 => CodeSpec {
                code,
                k,
                r: 2,
                d: k + 1,
                p,
                e: 0,
                layers: 1,
            },
        };
        Codec::build(&spec)?;
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.k + self.r
    }

    pub fn header(&self, column_index: usize, payload_len_bits: u64) -> ShardHeader {
        ShardHeader {
            version: VERSION,
            code: self.code,
            k: self.k as u16,
            r: self.r as u16,
            d: self.d as u16,
            p: self.p as u16,
            e: self.e as u16,
            layers: self.layers as u8,
            column_index: column_index as u16,
            payload_len_bits,
        }
    }

    pub fn from_header(h: &ShardHeader) -> Self {
        CodeSpec {
            code: h.code,
            k: h.k.into(),
            r: h.r.into(),
            d: h.d.into(),
            p: h.p.into(),
            e: h.e.into(),
            layers: h.layers.into(),
        }
    }
}

pub enum Codec {
    Multilayer(MultilayerCode),
    Quad(QuadCode),
    Te2(Te2Code),
}

/// A repair strategy fixed once per file and replayed on every stripe.
pub enum Repairer<'a> {
    Multilayer(&'a MultilayerCode, RepairPlan),
    Binary(RepairRecipe),
}

pub enum Decoder<'a> {
    Multilayer(&'a MultilayerCode),
    Binary(DecodeRecipe),
}

fn to_elements(m: Modulus, bits: &[u8], width: usize) -> Vec<RingElement> {
    bits.chunks(width)
        .map(|el| {
            RingElement::from_bits(
                m,
                el.iter()
                    .enumerate()
                    .fold(0u128, |acc, (i, &b)| acc | (u128::from(b) << i)),
            )
        })
        .collect()
}

fn to_bits(elements: &[RingElement], width: usize) -> Vec<u8> {
    elements
        .iter()
        .flat_map(|e| (0..width as u32).map(move |i| u8::from(e.coeff(i))))
        .collect()
}

impl Codec {
    pub fn build(spec: &CodeSpec) -> Result<Self> {
        Ok(match spec.code {
            CodeId::Multilayer => {
                let params = CodeParams::new(spec.k, spec.r, spec.d, spec.p, spec.e, spec.layers)?;
                Codec::Multilayer(MultilayerCode::new(params, None)?)
            }
            CodeId::QuadBase => Codec::Quad(QuadCode::base()),
            CodeId::QuadTransformed => Codec::Quad(QuadCode::transformed()),
            CodeId::Te2 => Codec::Te2(Te2Code::new(spec.k, spec.p)?),
        })
    }

    pub fn n(&self) -> usize {
        match self {
            Codec::Multilayer(c) => c.params.n(),
            Codec::Quad(_) => 4,
            Codec::Te2(c) => c.k() + 2,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Codec::Multilayer(c) => c.params.k,
            Codec::Quad(_) => 2,
            Codec::Te2(c) => c.k(),
        }
    }

    pub fn column_bits(&self) -> usize {
        match self {
            Codec::Multilayer(c) => c.params.column_bits(),
            Codec::Quad(c) => c.column_bits(),
            Codec::Te2(c) => c.column_bits(),
        }
    }

    pub fn stripe_info_bits(&self) -> usize {
        self.k() * self.column_bits()
    }

    fn width(code: &MultilayerCode) -> usize {
        code.params.p as usize - 1
    }

    pub fn encode_stripe(&self, info: &[u8]) -> Result<Vec<Vec<u8>>> {
        Ok(match self {
            Codec::Multilayer(c) => {
                let w = Self::width(c);
                let m = c.params.modulus();
                let cols: Vec<Vec<RingElement>> = info
                    .chunks(self.column_bits())
                    .map(|col| to_elements(m, col, w))
                    .collect();
                c.encode(&cols)?
                    .columns
                    .iter()
                    .map(|col| to_bits(col, w))
                    .collect()
            }
            Codec::Quad(c) => c.encode(info)?,
            Codec::Te2(c) => c.encode(info)?,
        })
    }

    /// Plans the repair of `f` from the `available` columns. Falls back to
    /// reading `k` whole columns when no bandwidth-optimal plan fits.
    pub fn repairer(&self, f: usize, available: &[usize]) -> Result<Repairer<'_>> {
        if f >= self.n() {
            bail!(CodeError::ColumnOutOfRange(f));
        }
        match self {
            Codec::Multilayer(c) => {
                let plan = match c.select_helpers_from(f, available) {
                    Ok(plan) => plan,
                    Err(CodeError::InsufficientHelpers { .. }) => {
                        c.full_decode_plan(f, available)?
                    }
                    Err(e) => return Err(e.into()),
                };
                Ok(Repairer::Multilayer(c, plan))
            }
            Codec::Quad(_) | Codec::Te2(_) => {
                let planned = match self {
                    Codec::Quad(c) => c.repair_recipe(f),
                    Codec::Te2(c) => c.repair_recipe(f, None),
                    Codec::Multilayer(_) => unreachable!(),
                }?;
                if planned
                    .downloads
                    .iter()
                    .all(|(col, _)| available.contains(col))
                {
                    return Ok(Repairer::Binary(planned));
                }
                let helpers: Vec<usize> = available
                    .iter()
                    .copied()
                    .filter(|&c| c != f)
                    .take(self.k())
                    .collect();
                if helpers.len() < self.k() {
                    bail!(CodeError::InsufficientHelpers { failed: f });
                }
                let downloads: Vec<(usize, usize)> = helpers
                    .iter()
                    .flat_map(|&h| (0..self.column_bits()).map(move |i| (h, i)))
                    .collect();
                let binary = match self {
                    Codec::Quad(c) => c.binary(),
                    Codec::Te2(c) => c.binary(),
                    Codec::Multilayer(_) => unreachable!(),
                };
                Ok(Repairer::Binary(binary.repair_recipe(f, &downloads)?))
            }
        }
    }

    pub fn decoder(&self, available: &[usize]) -> Result<Decoder<'_>> {
        let (n, k) = (self.n(), self.k());
        if available.len() < k {
            bail!(CodeError::TooManyErasures {
                erased: n - available.len(),
                max: n - k,
            });
        }
        Ok(match self {
            Codec::Multilayer(c) => Decoder::Multilayer(c),
            Codec::Quad(c) => Decoder::Binary(c.binary().decode_recipe(&available[..k])?),
            Codec::Te2(c) => Decoder::Binary(c.binary().decode_recipe(&available[..k])?),
        })
    }
}

impl Repairer<'_> {
    pub fn helpers(&self) -> Vec<usize> {
        match self {
            Repairer::Multilayer(_, plan) => plan.helpers.clone(),
            Repairer::Binary(recipe) => {
                let mut h: Vec<usize> = recipe.downloads.iter().map(|&(c, _)| c).collect();
                h.sort_unstable();
                h.dedup();
                h
            }
        }
    }

    pub fn is_optimal_plan(&self) -> bool {
        match self {
            Repairer::Multilayer(_, plan) => plan.layer.is_some(),
            Repairer::Binary(_) => true,
        }
    }

    pub fn repair_stripe(&self, columns: &[Option<&[u8]>]) -> Result<(Vec<u8>, AccessReport)> {
        match self {
            Repairer::Multilayer(c, plan) => {
                let w = Codec::width(c);
                let m = c.params.modulus();
                let owned: Vec<Option<Vec<RingElement>>> = columns
                    .iter()
                    .map(|col| col.map(|bits| to_elements(m, bits, w)))
                    .collect();
                let refs: Vec<Option<&[RingElement]>> =
                    owned.iter().map(|c| c.as_deref()).collect();
                let (col, report) = c.repair_from(&refs, plan)?;
                Ok((to_bits(&col, w), report))
            }
            Repairer::Binary(recipe) => Ok(recipe.repair(columns)?),
        }
    }
}

impl Decoder<'_> {
    /// Information bits of one stripe.
    pub fn decode_stripe(&self, columns: &[Option<&[u8]>]) -> Result<Vec<u8>> {
        match self {
            Decoder::Multilayer(c) => {
                let w = Codec::width(c);
                let m = c.params.modulus();
                let owned: Vec<Option<Vec<RingElement>>> = columns
                    .iter()
                    .map(|col| col.map(|bits| to_elements(m, bits, w)))
                    .collect();
                let refs: Vec<Option<&[RingElement]>> =
                    owned.iter().map(|c| c.as_deref()).collect();
                let all = c.recover(&refs).context("decoding stripe")?;
                Ok(all[..c.params.k]
                    .iter()
                    .flat_map(|col| to_bits(col, w))
                    .collect())
            }
            Decoder::Binary(recipe) => Ok(recipe.decode(columns)?),
        }
    }
}
