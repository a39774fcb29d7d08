//! Multi-layer transformed EVENODD codes.
//!
//! The `k` information columns and the `r` parity columns are each split into
//! partitions of `t = d - k + 1` columns; when `t` does not divide the count,
//! the last partition is the last `t` columns and overlaps its predecessor.
//! Partitions are labelled information first, then parity. Layer `j` (0-based,
//! label `j + 1`) couples the `t` instances selected by base-`t` row digit `j`
//! over partition `j`. A column in a coupled partition can then be repaired
//! by reading `1/t` of each of `d` helpers.

use crate::error::{CodeError, Result};
use crate::evenodd::{
    check_mds, encode_row, CodeParams, CodewordArray, ErasurePattern, RowDecoder,
};
use crate::meter::{audit, AccessReport, BoundContext, TracedReader};
use crate::ring::RingElement;
use crate::transform::{apply_groups, couple_entry, invert_groups, recover_entry, Coupling};

/// Information and parity partitions in label order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMap {
    pub info: Vec<Vec<usize>>,
    pub parity: Vec<Vec<usize>>,
}

fn split(start: usize, count: usize, t: usize) -> Vec<Vec<usize>> {
    let parts = count.div_ceil(t);
    (0..parts)
        .map(|i| {
            let first = if i + 1 == parts { count - t } else { i * t };
            (start + first..start + first + t).collect()
        })
        .collect()
}

impl PartitionMap {
    pub fn new(k: usize, r: usize, t: usize) -> Self {
        PartitionMap {
            info: split(0, k, t),
            parity: split(k, r, t),
        }
    }

    /// All partitions; index `j` carries label `j + 1`.
    pub fn labelled(&self) -> Vec<Vec<usize>> {
        self.info.iter().chain(&self.parity).cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.info.len() + self.parity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Number of layers of the fully transformed code.
pub fn full_layers(k: usize, r: usize, t: usize) -> usize {
    if t <= 1 {
        0
    } else {
        k.div_ceil(t) + r.div_ceil(t)
    }
}

/// How to repair one column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairPlan {
    pub failed: usize,
    /// Layer whose partition repairs the column; `None` means full decoding.
    pub layer: Option<usize>,
    /// Position of the failed column inside that partition.
    pub position: usize,
    /// Partition mates first, then the remaining helpers in ascending order.
    pub helpers: Vec<usize>,
    /// Row indices read from every helper.
    pub rows: Vec<usize>,
    pub predicted_elements: usize,
    pub predicted_bits: usize,
}

impl RepairPlan {
    /// Row indices read from `helper`; empty for non-helpers.
    pub fn row_set(&self, helper: usize) -> &[usize] {
        if self.helpers.contains(&helper) {
            &self.rows
        } else {
            &[]
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultilayerCode {
    pub params: CodeParams,
    pub partitions: PartitionMap,
    /// Partition coupled by each applied layer.
    layers: Vec<Vec<usize>>,
    coupling: Coupling,
}

/// Fully layered code with the default coefficient `1 + x^e`.
pub fn build_multilayer(k: usize, r: usize, d: usize, p: u32, e: u32) -> Result<MultilayerCode> {
    let t = d.saturating_sub(k) + 1;
    MultilayerCode::new(CodeParams::new(k, r, d, p, e, full_layers(k, r, t))?, None)
}

impl MultilayerCode {
    /// `params.layers` may be smaller than the full count, in which case only
    /// the first partitions in label order are coupled.
    pub fn new(params: CodeParams, coefficient: Option<RingElement>) -> Result<Self> {
        let t = params.t();
        if t > params.k {
            return Err(CodeError::InvalidParams(format!(
                "partition width {t} exceeds the {} information columns",
                params.k
            )));
        }
        let partitions = PartitionMap::new(params.k, params.r, t);
        let full = full_layers(params.k, params.r, t);
        if params.layers > full {
            return Err(CodeError::InvalidParams(format!(
                "{} layers requested but the code has {full} partitions",
                params.layers
            )));
        }
        if params.r >= 3 {
            let report = check_mds(&params);
            if !report.is_mds {
                return Err(CodeError::InvalidParams(format!(
                    "base code is not MDS; columns {:?} do not decode",
                    report.counterexample.unwrap_or_default()
                )));
            }
        }
        let coupling = match coefficient {
            Some(c) => Coupling::new(c)?,
            None => Coupling::default_for(params.modulus(), params.e)?,
        };
        let layers = partitions
            .labelled()
            .into_iter()
            .take(params.layers)
            .collect();
        Ok(MultilayerCode {
            params,
            partitions,
            layers,
            coupling,
        })
    }

    pub fn t(&self) -> usize {
        self.params.t()
    }

    pub fn rows(&self) -> usize {
        self.params.rows()
    }

    /// Partitions coupled by the applied layers, in layer order.
    pub fn layer_partitions(&self) -> &[Vec<usize>] {
        &self.layers
    }

    fn weight(&self, layer: usize) -> usize {
        self.t().pow(layer as u32)
    }

    fn digit(&self, row: usize, layer: usize) -> usize {
        (row / self.weight(layer)) % self.t()
    }

    /// Rows whose digit at `weight` is zero, within `[start, start + len)`.
    fn bases(&self, start: usize, len: usize, weight: usize) -> impl Iterator<Item = usize> {
        let t = self.t();
        (start..start + len).filter(move |r| (r / weight).is_multiple_of(t))
    }

    fn zero_columns(&self) -> Vec<Vec<RingElement>> {
        vec![vec![RingElement::zero(self.params.modulus()); self.rows()]; self.params.n()]
    }

    /// Systematic encoding of `k` columns of `rows()` elements each.
    pub fn encode(&self, info: &[Vec<RingElement>]) -> Result<CodewordArray> {
        let (k, n, rows) = (self.params.k, self.params.n(), self.rows());
        if info.len() != k {
            return Err(CodeError::ShapeMismatch {
                expected: k,
                got: info.len(),
            });
        }
        if let Some(col) = info.iter().find(|c| c.len() != rows) {
            return Err(CodeError::ShapeMismatch {
                expected: rows,
                got: col.len(),
            });
        }
        let mut cols = self.zero_columns();
        cols[..k].clone_from_slice(info);
        let info_layers = self.layers.iter().take_while(|p| p[0] < k).count();
        for j in (0..info_layers).rev() {
            let w = self.weight(j);
            invert_groups(
                &mut cols,
                &self.layers[j],
                w,
                &self.coupling,
                self.bases(0, rows, w),
            );
        }
        let base = CodeParams {
            layers: 0,
            ..self.params
        };
        let mut row = vec![RingElement::zero(self.params.modulus()); n];
        let mut base_info = vec![RingElement::zero(self.params.modulus()); k];
        for l in 0..rows {
            for (dst, col) in base_info.iter_mut().zip(&cols) {
                *dst = col[l];
            }
            encode_row(&base, &base_info, &mut row);
            for (col, v) in cols.iter_mut().zip(&row).skip(k) {
                col[l] = *v;
            }
        }
        cols[..k].clone_from_slice(info);
        for j in info_layers..self.layers.len() {
            let w = self.weight(j);
            apply_groups(
                &mut cols,
                &self.layers[j],
                w,
                &self.coupling,
                self.bases(0, rows, w),
            );
        }
        Ok(CodewordArray {
            params: self.params,
            columns: cols,
        })
    }

    /// Row offsets spanned by the digits of `layers`.
    fn offsets(&self, layers: &[usize]) -> Vec<usize> {
        let t = self.t();
        layers.iter().fold(vec![0], |acc, &j| {
            let w = self.weight(j);
            (0..t)
                .flat_map(|b| acc.iter().map(move |o| o + b * w))
                .collect()
        })
    }

    /// Recovers every column of the sub-code spanned by `layers` (ascending
    /// layer indices) at rows `start + offsets(layers)`, given values on the
    /// surviving columns. Values are those after exactly these layers.
    fn decode_layers(
        &self,
        layers: &[usize],
        start: usize,
        cols: &mut [Vec<RingElement>],
        survivors: &[bool],
        decoder: &RowDecoder,
    ) {
        let Some((&layer, inner)) = layers.split_last() else {
            let mut row: Vec<RingElement> = cols.iter().map(|c| c[start]).collect();
            decoder.decode(&mut row);
            for (col, v) in cols.iter_mut().zip(row) {
                col[start] = v;
            }
            return;
        };
        let part = &self.layers[layer];
        let (t, w) = (self.t(), self.weight(layer));
        let offsets = self.offsets(inner);
        let (alive, lost): (Vec<usize>, Vec<usize>) = (0..t).partition(|&a| survivors[part[a]]);

        for &off in &offsets {
            let base = start + off;
            for (x, &i) in alive.iter().enumerate() {
                for &j in &alive[x + 1..] {
                    let u = cols[part[i]][base + j * w];
                    let v = cols[part[j]][base + i * w];
                    let (a_ij, a_ji) = self.coupling.pair_solve(u, v);
                    cols[part[i]][base + j * w] = a_ij;
                    cols[part[j]][base + i * w] = a_ji;
                }
            }
        }
        for &b in &alive {
            self.decode_layers(inner, start + b * w, cols, survivors, decoder);
        }
        for &b in &lost {
            for &a in &alive {
                for &off in &offsets {
                    let row = start + off + b * w;
                    let partner = cols[part[b]][start + off + a * w];
                    let out = cols[part[a]][row];
                    cols[part[a]][row] = couple_entry(&self.coupling, a, b, out, partner);
                }
            }
            self.decode_layers(inner, start + b * w, cols, survivors, decoder);
        }
        apply_groups(
            cols,
            part,
            w,
            &self.coupling,
            offsets.iter().map(|o| start + o),
        );
    }

    fn all_layers(&self) -> Vec<usize> {
        (0..self.layers.len()).collect()
    }

    /// Recovers all columns from the columns that are present.
    pub fn recover(&self, columns: &[Option<&[RingElement]>]) -> Result<Vec<Vec<RingElement>>> {
        let n = self.params.n();
        if columns.len() != n {
            return Err(CodeError::ShapeMismatch {
                expected: n,
                got: columns.len(),
            });
        }
        let erased: Vec<usize> = (0..n).filter(|&c| columns[c].is_none()).collect();
        let decoder = RowDecoder::new(&self.params, &erased)?;
        let mut cols = self.zero_columns();
        for (dst, src) in cols.iter_mut().zip(columns) {
            if let Some(src) = src {
                if src.len() != self.rows() {
                    return Err(CodeError::ShapeMismatch {
                        expected: self.rows(),
                        got: src.len(),
                    });
                }
                dst.copy_from_slice(src);
            }
        }
        let survivors: Vec<bool> = columns.iter().map(Option::is_some).collect();
        self.decode_layers(&self.all_layers(), 0, &mut cols, &survivors, &decoder);
        Ok(cols)
    }

    /// Recovers the information columns when the columns in `pattern` are
    /// lost; their contents in `array` are ignored.
    pub fn decode(
        &self,
        array: &CodewordArray,
        pattern: &ErasurePattern,
    ) -> Result<Vec<Vec<RingElement>>> {
        let columns: Vec<Option<&[RingElement]>> = array
            .columns
            .iter()
            .enumerate()
            .map(|(c, col)| (!pattern.contains(c)).then_some(col.as_slice()))
            .collect();
        let mut all = self.recover(&columns)?;
        all.truncate(self.params.k);
        Ok(all)
    }

    /// Last applied layer whose partition contains `f`.
    fn home(&self, f: usize) -> Option<(usize, usize)> {
        self.layers
            .iter()
            .enumerate()
            .rev()
            .find_map(|(j, part)| part.iter().position(|&c| c == f).map(|i| (j, i)))
    }

    /// Later layers whose partitions are linked to the partition of layer
    /// `m` through shared columns. Only overlapping tail partitions do this.
    fn entangled(&self, m: usize) -> Vec<usize> {
        let mut touched = self.layers[m].clone();
        let mut out: Vec<usize> = Vec::new();
        loop {
            let before = out.len();
            for j in m + 1..self.layers.len() {
                if !out.contains(&j) && self.layers[j].iter().any(|c| touched.contains(c)) {
                    touched.extend(self.layers[j].iter().copied());
                    out.push(j);
                }
            }
            if out.len() == before {
                out.sort_unstable();
                return out;
            }
        }
    }

    /// Adds every partition in `rule` that shares a column with `set`.
    fn close(set: &[usize], rule: &[&[usize]]) -> Vec<usize> {
        let mut set = set.to_vec();
        loop {
            let mut grew = false;
            for q in rule {
                if q.iter().any(|c| set.contains(c)) {
                    for c in q.iter() {
                        if !set.contains(c) {
                            set.push(*c);
                            grew = true;
                        }
                    }
                }
            }
            if !grew {
                return set;
            }
        }
    }

    fn is_closed(set: &[usize], rule: &[&[usize]]) -> bool {
        Self::close(set, rule).len() == set.len()
    }

    /// Helper set containing `mates`, closed under `rule`, of size `d`.
    /// Whole partitions are taken in label order, then single columns in
    /// index order; an exhaustive search covers the remaining cases.
    fn choose_helpers(
        &self,
        mates: &[usize],
        rule: &[&[usize]],
        usable: &dyn Fn(&usize) -> bool,
    ) -> Option<Vec<usize>> {
        let (n, d) = (self.params.n(), self.params.d);
        let feasible = |set: &[usize]| set.len() <= d && set.iter().all(usable);
        let mut chosen = Self::close(mates, rule);
        if !feasible(&chosen) {
            return None;
        }
        let candidates = rule
            .iter()
            .map(|q| q.to_vec())
            .chain((0..n).map(|c| vec![c]));
        for cand in candidates {
            if chosen.len() == d {
                break;
            }
            let mut grown = chosen.clone();
            grown.extend(cand.iter().filter(|c| !chosen.contains(c)));
            let grown = Self::close(&grown, rule);
            if grown.len() > chosen.len() && feasible(&grown) {
                chosen = grown;
            }
        }
        if chosen.len() == d {
            return Some(chosen);
        }
        let pool: Vec<usize> = (0..n).filter(|c| usable(c) && !mates.contains(c)).collect();
        let need = d.checked_sub(mates.len())?;
        crate::evenodd::erasure_patterns(pool.len(), need)
            .into_iter()
            .map(|pick| {
                mates
                    .iter()
                    .copied()
                    .chain(pick.iter().map(|&i| pool[i]))
                    .collect::<Vec<_>>()
            })
            .find(|set| Self::is_closed(set, rule))
    }

    pub fn select_helpers(&self, f: usize) -> Result<RepairPlan> {
        let all: Vec<usize> = (0..self.params.n()).collect();
        self.select_helpers_from(f, &all)
    }

    /// Plans the repair of `f` using only `available` columns as helpers.
    ///
    /// Helpers are the other columns of the partition that repairs `f` plus
    /// `k` more. Any later partition is used either whole or not at all when
    /// such a choice exists; otherwise only partitions sharing columns with
    /// the repairing partition are kept whole, which is all the repair needs.
    pub fn select_helpers_from(&self, f: usize, available: &[usize]) -> Result<RepairPlan> {
        let (n, k) = (self.params.n(), self.params.k);
        if f >= n {
            return Err(CodeError::ColumnOutOfRange(f));
        }
        let usable = |c: &usize| *c != f && available.contains(c);
        let Some((layer, position)) = self.home(f) else {
            let helpers: Vec<usize> = (0..n).filter(usable).take(k).collect();
            if helpers.len() < k {
                return Err(CodeError::InsufficientHelpers { failed: f });
            }
            return Ok(self.plan(f, None, 0, helpers, (0..self.rows()).collect()));
        };
        let part = &self.layers[layer];
        let mates: Vec<usize> = part.iter().copied().filter(|&c| c != f).collect();
        let strict: Vec<&[usize]> = self.layers[layer + 1..].iter().map(Vec::as_slice).collect();
        let relaxed: Vec<&[usize]> = self
            .entangled(layer)
            .into_iter()
            .map(|j| self.layers[j].as_slice())
            .collect();
        let chosen = self
            .choose_helpers(&mates, &strict, &usable)
            .or_else(|| self.choose_helpers(&mates, &relaxed, &usable))
            .ok_or(CodeError::InsufficientHelpers { failed: f })?;
        let mut others: Vec<usize> = chosen.into_iter().filter(|c| !part.contains(c)).collect();
        others.sort_unstable();
        let helpers: Vec<usize> = mates.into_iter().chain(others).collect();
        let rows: Vec<usize> = (0..self.rows())
            .filter(|&l| self.digit(l, layer) == position)
            .collect();
        Ok(self.plan(f, Some(layer), position, helpers, rows))
    }

    /// Reads all rows of the first `k` available columns and decodes.
    pub fn full_decode_plan(&self, f: usize, available: &[usize]) -> Result<RepairPlan> {
        let helpers: Vec<usize> = (0..self.params.n())
            .filter(|c| *c != f && available.contains(c))
            .take(self.params.k)
            .collect();
        if helpers.len() < self.params.k {
            return Err(CodeError::InsufficientHelpers { failed: f });
        }
        Ok(self.plan(f, None, 0, helpers, (0..self.rows()).collect()))
    }

    fn plan(
        &self,
        failed: usize,
        layer: Option<usize>,
        position: usize,
        helpers: Vec<usize>,
        rows: Vec<usize>,
    ) -> RepairPlan {
        let elements = helpers.len() * rows.len();
        RepairPlan {
            failed,
            layer,
            position,
            predicted_elements: elements,
            predicted_bits: elements * (self.params.p as usize - 1),
            helpers,
            rows,
        }
    }

    /// Structural check: `d` distinct helpers, all partition mates present,
    /// entangled partitions whole, `1/t` of the rows.
    pub fn plan_is_valid(&self, plan: &RepairPlan) -> bool {
        let f = plan.failed;
        let mut sorted = plan.helpers.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != plan.helpers.len() || plan.helpers.contains(&f) {
            return false;
        }
        let Some(layer) = plan.layer else {
            return plan.helpers.len() >= self.params.k;
        };
        let part = &self.layers[layer];
        let entangled: Vec<&[usize]> = self
            .entangled(layer)
            .into_iter()
            .map(|j| self.layers[j].as_slice())
            .collect();
        plan.helpers.len() == self.params.d
            && part.iter().all(|c| *c == f || plan.helpers.contains(c))
            && Self::is_closed(&plan.helpers, &entangled)
            && plan.rows.len() * self.t() == self.rows()
    }

    /// True when every later partition is used whole or not at all.
    pub fn plan_is_all_or_nothing(&self, plan: &RepairPlan) -> bool {
        let Some(layer) = plan.layer else {
            return true;
        };
        let later: Vec<&[usize]> = self.layers[layer + 1..].iter().map(Vec::as_slice).collect();
        Self::is_closed(&plan.helpers, &later)
    }

    pub fn repair_column(
        &self,
        array: &CodewordArray,
        plan: &RepairPlan,
    ) -> Result<(Vec<RingElement>, AccessReport)> {
        let columns: Vec<Option<&[RingElement]>> =
            array.columns.iter().map(|c| Some(c.as_slice())).collect();
        self.repair_from(&columns, plan)
    }

    /// Repairs `plan.failed` reading only the planned helper rows.
    pub fn repair_from(
        &self,
        columns: &[Option<&[RingElement]>],
        plan: &RepairPlan,
    ) -> Result<(Vec<RingElement>, AccessReport)> {
        let (n, k) = (self.params.n(), self.params.k);
        let f = plan.failed;
        let context = BoundContext {
            k,
            d: self.params.d,
            column_bits: self.params.column_bits() as u64,
            failed: f,
        };
        let mut reader = TracedReader::new(columns.to_vec(), self.params.p as u64 - 1, context);
        let mut cols = self.zero_columns();
        for &h in &plan.helpers {
            for &l in &plan.rows {
                cols[h][l] = reader.read(h, l)?;
            }
        }
        let report = audit(&reader.finish())?;
        let is_helper = |c: &usize| plan.helpers.contains(c);

        let Some(layer) = plan.layer else {
            let survivors: Vec<bool> = (0..n).map(|c| is_helper(&c)).collect();
            let erased: Vec<usize> = (0..n).filter(|&c| !survivors[c]).collect();
            let decoder = RowDecoder::new(&self.params, &erased)?;
            self.decode_layers(&self.all_layers(), 0, &mut cols, &survivors, &decoder);
            return Ok((std::mem::take(&mut cols[f]), report));
        };

        // Peel the later layers tied to this partition, then decode the
        // instance of `layer` that holds the read rows through the rest.
        let part = &self.layers[layer];
        let entangled = self.entangled(layer);
        for &j in entangled.iter().rev() {
            let q = &self.layers[j];
            if !q.iter().all(is_helper) {
                return Err(CodeError::InvalidParams(format!(
                    "helpers {:?} split partition {q:?}",
                    plan.helpers
                )));
            }
            let bases = plan.rows.iter().copied().filter(|&l| self.digit(l, j) == 0);
            invert_groups(&mut cols, q, self.weight(j), &self.coupling, bases);
        }
        let stored: Vec<Vec<RingElement>> = part.iter().map(|&c| cols[c].clone()).collect();
        let survivors: Vec<bool> = (0..n)
            .map(|c| is_helper(&c) && !part.contains(&c))
            .collect();
        let erased: Vec<usize> = (0..n).filter(|&c| !survivors[c]).collect();
        let decoder = RowDecoder::new(&self.params, &erased)?;
        let inner: Vec<usize> = (0..self.layers.len())
            .filter(|&j| j != layer && !entangled.contains(&j))
            .collect();
        for &l in &plan.rows {
            if inner.iter().all(|&j| self.digit(l, j) == 0) {
                self.decode_layers(&inner, l, &mut cols, &survivors, &decoder);
            }
        }

        let (i, w) = (plan.position, self.weight(layer));
        let mut column = vec![RingElement::zero(self.params.modulus()); self.rows()];
        for (l, slot) in column.iter_mut().enumerate() {
            let b = self.digit(l, layer);
            if b == i {
                *slot = cols[f][l];
                continue;
            }
            let l_i = l - b * w + i * w;
            let partner_in = cols[part[b]][l_i];
            let own_in = recover_entry(&self.coupling, i, b, stored[b][l_i], partner_in);
            *slot = couple_entry(&self.coupling, i, b, own_in, partner_in);
        }
        Ok((column, report))
    }
}
