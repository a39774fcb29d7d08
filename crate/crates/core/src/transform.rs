//! The pairwise transformation that couples `t` code instances over a
//! partition of `t` columns.
//!
//! Rows are indexed by base-`t` digits. A layer with weight `w` uses digit
//! `(row / w) % t` as the instance index. For partition positions `a` and
//! instance `b`, with `row_a` the same row with that digit replaced by `a`:
//!
//! * `b == a`: `out[a][row] = in[a][row]`
//! * `b <  a`: `out[a][row] = in[a][row] + in[b][row_a]`
//! * `b >  a`: `out[a][row] = in[a][row] + c * in[b][row_a]`
//!
//! where `c` is the encoding coefficient (`1 + x^e` by default). Any pair of
//! coupled entries can be separated again when `c + 1` is invertible.

use crate::error::{CodeError, Result};
use crate::evenodd::{encode_row, CodeParams, CodewordArray};
use crate::ring::{Modulus, RingElement};

/// Encoding coefficient together with the inverses needed to undo it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coupling {
    c: RingElement,
    c_plus_one_inv: RingElement,
    c_inv: RingElement,
}

impl Coupling {
    /// Both `c` and `c + 1` must be units: the first for separating pairs,
    /// the second for single-column repair.
    pub fn new(c: RingElement) -> Result<Self> {
        let one = RingElement::one(c.modulus());
        Ok(Coupling {
            c,
            c_plus_one_inv: (c + one).inverse()?,
            c_inv: c.inverse()?,
        })
    }

    /// `1 + x^e`.
    pub fn default_for(modulus: Modulus, e: u32) -> Result<Self> {
        Self::new(RingElement::from_exponents(modulus, &[0, e]))
    }

    pub fn coefficient(&self) -> RingElement {
        self.c
    }

    /// Coefficient applied to the partner entry for column position `a` at
    /// instance `b`.
    fn scale(&self, a: usize, b: usize, v: RingElement) -> RingElement {
        if b < a {
            v
        } else {
            self.c * v
        }
    }

    /// Forward pairing for positions `i < j`: returns
    /// `(a_ij + c a_ji, a_ji + a_ij)`.
    pub fn pair(&self, a_ij: RingElement, a_ji: RingElement) -> (RingElement, RingElement) {
        (a_ij + self.c * a_ji, a_ji + a_ij)
    }

    /// Inverse of [`Coupling::pair`].
    pub fn pair_solve(&self, u: RingElement, v: RingElement) -> (RingElement, RingElement) {
        let a_ji = (u + v) * self.c_plus_one_inv;
        (v + a_ji, a_ji)
    }

    /// Recovers `in[a]` at instance `b` from the partner column's stored
    /// entry `out[b][row_a]` and its own `in[b][row_a]`.
    fn unscale(&self, a: usize, b: usize, out_b: RingElement, in_b: RingElement) -> RingElement {
        let diff = out_b + in_b;
        if a < b {
            diff
        } else {
            diff * self.c_inv
        }
    }
}

/// Vector form of [`Coupling::pair_solve`], element by element.
pub fn pair_solve(
    u: &[RingElement],
    v: &[RingElement],
    coupling: &Coupling,
) -> Result<(Vec<RingElement>, Vec<RingElement>)> {
    if u.len() != v.len() {
        return Err(CodeError::ShapeMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    Ok(u.iter()
        .zip(v)
        .map(|(a, b)| coupling.pair_solve(*a, *b))
        .unzip())
}

/// One application of the transformation: which columns, and how they are
/// coupled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformSpec {
    pub partition_start: usize,
    pub t: usize,
    pub coupling: Coupling,
    pub systematic: bool,
}

impl TransformSpec {
    pub fn new(
        partition_start: usize,
        t: usize,
        coefficient: RingElement,
        systematic: bool,
    ) -> Result<Self> {
        if t == 0 {
            return Err(CodeError::InvalidParams(
                "partition width must be positive".into(),
            ));
        }
        Ok(TransformSpec {
            partition_start,
            t,
            coupling: Coupling::new(coefficient)?,
            systematic,
        })
    }

    /// Spec with the default coefficient `1 + x^e`.
    pub fn with_default(
        params: &CodeParams,
        partition_start: usize,
        systematic: bool,
    ) -> Result<Self> {
        Self::new(
            partition_start,
            params.t(),
            RingElement::from_exponents(params.modulus(), &[0, params.e]),
            systematic,
        )
    }

    /// Partition columns; wraps around modulo `n`.
    pub fn partition(&self, n: usize) -> Vec<usize> {
        (0..self.t)
            .map(|i| (self.partition_start + i) % n)
            .collect()
    }
}

/// A set of code instances to be coupled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceBundle {
    pub instances: Vec<CodewordArray>,
}

fn digit(row: usize, weight: usize, t: usize) -> usize {
    (row / weight) % t
}

/// Applies the transformation in place to every row group `base + b*weight`
/// for base rows in `bases`.
pub(crate) fn apply_groups(
    columns: &mut [Vec<RingElement>],
    partition: &[usize],
    weight: usize,
    coupling: &Coupling,
    bases: impl Iterator<Item = usize>,
) {
    let t = partition.len();
    let mut input = vec![Vec::with_capacity(t); t];
    for base in bases {
        for (a, &col) in partition.iter().enumerate() {
            input[a].clear();
            input[a].extend((0..t).map(|b| columns[col][base + b * weight]));
        }
        for (a, &col) in partition.iter().enumerate() {
            for b in 0..t {
                if b != a {
                    columns[col][base + b * weight] =
                        input[a][b] + coupling.scale(a, b, input[b][a]);
                }
            }
        }
    }
}

pub(crate) fn invert_groups(
    columns: &mut [Vec<RingElement>],
    partition: &[usize],
    weight: usize,
    coupling: &Coupling,
    bases: impl Iterator<Item = usize>,
) {
    let t = partition.len();
    for base in bases {
        for i in 0..t {
            for j in i + 1..t {
                let (ci, cj) = (partition[i], partition[j]);
                let u = columns[ci][base + j * weight];
                let v = columns[cj][base + i * weight];
                let (a_ij, a_ji) = coupling.pair_solve(u, v);
                columns[ci][base + j * weight] = a_ij;
                columns[cj][base + i * weight] = a_ji;
            }
        }
    }
}

/// Base rows (digit zero at `weight`) among `rows`.
fn group_bases<'a>(rows: &'a [usize], weight: usize, t: usize) -> impl Iterator<Item = usize> + 'a {
    rows.iter()
        .copied()
        .filter(move |&r| digit(r, weight, t) == 0)
}

/// Applies one layer to all rows of the given columns.
pub fn apply_layer(
    columns: &mut [Vec<RingElement>],
    partition: &[usize],
    weight: usize,
    coupling: &Coupling,
) {
    let t = partition.len();
    let rows = columns.first().map_or(0, Vec::len);
    apply_groups(
        columns,
        partition,
        weight,
        coupling,
        (0..rows).filter(|&r| digit(r, weight, t) == 0),
    );
}

/// Inverse of [`apply_layer`].
pub fn invert_layer(
    columns: &mut [Vec<RingElement>],
    partition: &[usize],
    weight: usize,
    coupling: &Coupling,
) {
    let t = partition.len();
    let rows = columns.first().map_or(0, Vec::len);
    invert_groups(
        columns,
        partition,
        weight,
        coupling,
        (0..rows).filter(|&r| digit(r, weight, t) == 0),
    );
}

/// [`apply_layer`] restricted to the listed rows, which must be closed under
/// changing the digit at `weight`.
pub fn apply_layer_rows(
    columns: &mut [Vec<RingElement>],
    partition: &[usize],
    weight: usize,
    coupling: &Coupling,
    rows: &[usize],
) {
    apply_groups(
        columns,
        partition,
        weight,
        coupling,
        group_bases(rows, weight, partition.len()),
    );
}

/// [`invert_layer`] restricted to the listed rows.
pub fn invert_layer_rows(
    columns: &mut [Vec<RingElement>],
    partition: &[usize],
    weight: usize,
    coupling: &Coupling,
    rows: &[usize],
) {
    invert_groups(
        columns,
        partition,
        weight,
        coupling,
        group_bases(rows, weight, partition.len()),
    );
}

/// Undoes the coupling for one column position of a partition, given the
/// other partition columns: entry at instance `b` of position `a`, where
/// `partner_out = out[b][row_a]` and `partner_in = in[b][row_a]`.
pub(crate) fn recover_entry(
    coupling: &Coupling,
    a: usize,
    b: usize,
    partner_out: RingElement,
    partner_in: RingElement,
) -> RingElement {
    coupling.unscale(a, b, partner_out, partner_in)
}

pub(crate) fn couple_entry(
    coupling: &Coupling,
    a: usize,
    b: usize,
    own_in: RingElement,
    partner_in: RingElement,
) -> RingElement {
    own_in + coupling.scale(a, b, partner_in)
}

/// Stacks `t` instances (instance `l` at rows `l*R .. (l+1)*R`) and couples
/// them over the spec's partition.
pub fn first_transform(bundle: &InstanceBundle, spec: &TransformSpec) -> Result<CodewordArray> {
    let Some(first) = bundle.instances.first() else {
        return Err(CodeError::ShapeMismatch {
            expected: spec.t,
            got: 0,
        });
    };
    if bundle.instances.len() != spec.t {
        return Err(CodeError::ShapeMismatch {
            expected: spec.t,
            got: bundle.instances.len(),
        });
    }
    let params = first.params;
    let rows = first.rows();
    for inst in &bundle.instances {
        if inst.params != params || inst.rows() != rows || inst.columns.len() != params.n() {
            return Err(CodeError::ShapeMismatch {
                expected: rows,
                got: inst.rows(),
            });
        }
    }
    let mut columns: Vec<Vec<RingElement>> = (0..params.n())
        .map(|c| {
            bundle
                .instances
                .iter()
                .flat_map(|inst| inst.columns[c].iter().copied())
                .collect()
        })
        .collect();
    apply_layer(
        &mut columns,
        &spec.partition(params.n()),
        rows,
        &spec.coupling,
    );
    Ok(CodewordArray {
        params: CodeParams {
            layers: params.layers + 1,
            ..params
        },
        columns,
    })
}

/// Systematic form over single-row base instances: information columns hold
/// the stored values `D` verbatim and parity column `k + j` at instance `b`
/// is `sum_i x^(i*j) term_i(b)`, where for partition positions `a`:
///
/// * `a == b`: `D[a][a]`
/// * `a >  b`: `(D[b][a] + D[a][b]) / (c + 1)`
/// * `a <  b`: `D[b][a] + (D[a][b] + D[b][a]) / (c + 1)`
pub fn systematic_transform(
    params: &CodeParams,
    info: &[Vec<RingElement>],
    spec: &TransformSpec,
) -> Result<CodewordArray> {
    let (k, t) = (params.k, spec.t);
    if info.len() != k {
        return Err(CodeError::ShapeMismatch {
            expected: k,
            got: info.len(),
        });
    }
    if let Some(col) = info.iter().find(|c| c.len() != t) {
        return Err(CodeError::ShapeMismatch {
            expected: t,
            got: col.len(),
        });
    }
    let partition = spec.partition(params.n());
    if partition.iter().any(|&c| c >= k) {
        return Err(CodeError::InvalidParams(
            "systematic form needs the partition inside the information columns".into(),
        ));
    }
    let base = CodeParams {
        layers: 0,
        ..*params
    };
    let c1 = spec.coupling.c_plus_one_inv;
    let mut columns: Vec<Vec<RingElement>> = info.to_vec();
    columns.resize(params.n(), Vec::with_capacity(t));
    let mut row = vec![RingElement::zero(params.modulus()); params.n()];
    for b in 0..t {
        let terms: Vec<RingElement> = (0..k)
            .map(|col| match partition.iter().position(|&c| c == col) {
                None => info[col][b],
                Some(a) => {
                    let (d_ab, d_ba) = (info[col][b], info[partition[b]][a]);
                    match a.cmp(&b) {
                        std::cmp::Ordering::Equal => d_ab,
                        std::cmp::Ordering::Greater => (d_ba + d_ab) * c1,
                        std::cmp::Ordering::Less => d_ba + (d_ab + d_ba) * c1,
                    }
                }
            })
            .collect();
        encode_row(&base, &terms, &mut row);
        for (col, v) in columns.iter_mut().zip(&row).skip(k) {
            col.push(*v);
        }
    }
    Ok(CodewordArray {
        params: CodeParams {
            layers: 1,
            ..*params
        },
        columns,
    })
}

/// Checks that the systematic form computed from the information part of
/// the first transform reproduces the first transform exactly.
pub fn transform_equivalence_check(bundle: &InstanceBundle, spec: &TransformSpec) -> bool {
    let Ok(first) = first_transform(bundle, spec) else {
        return false;
    };
    let params = first.params;
    match systematic_transform(&params, first.info(), spec) {
        Ok(sys) => sys.columns == first.columns,
        Err(_) => false,
    }
}
