//! Read/transfer accounting for repairs, compared with the cut-set bound
//! `d * m / (d - k + 1)` on repair bandwidth.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{CodeError, Result};

/// Minimum number of bits any repair from `d` helpers must download when each
/// column stores `m_bits`.
pub fn optimal_bound(k: usize, d: usize, m_bits: u64) -> Result<u64> {
    if d < k {
        return Err(CodeError::InvalidParams(format!(
            "d={d} is smaller than k={k}"
        )));
    }
    let num = d as u64 * m_bits;
    let den = (d - k + 1) as u64;
    if !num.is_multiple_of(den) {
        return Err(CodeError::NonIntegralBound {
            numerator: num,
            denominator: den,
        });
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadEvent {
    pub column: usize,
    pub index: usize,
    pub bits_read: u64,
    pub bits_sent: u64,
    /// Set when the helper combined data before sending it.
    pub coded: bool,
}

/// What a repair is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundContext {
    pub k: usize,
    pub d: usize,
    pub column_bits: u64,
    pub failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessTrace {
    pub events: Vec<ReadEvent>,
    pub context: Option<BoundContext>,
}

impl AccessTrace {
    pub fn new(context: BoundContext) -> Self {
        AccessTrace {
            events: Vec::new(),
            context: Some(context),
        }
    }

    /// Records a verbatim read.
    pub fn record(&mut self, column: usize, index: usize, bits: u64) {
        self.events.push(ReadEvent {
            column,
            index,
            bits_read: bits,
            bits_sent: bits,
            coded: false,
        });
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessReport {
    pub bits_read: u64,
    pub bits_transferred: u64,
    pub elements_read: u64,
    pub helpers_used: Vec<usize>,
    pub optimal_bits: u64,
    #[serde(with = "ratio_json")]
    pub ratio: Ratio<u64>,
    pub uncoded: bool,
}

impl AccessReport {
    fn ratio_of(transferred: u64, optimal: u64) -> Ratio<u64> {
        if optimal == 0 {
            Ratio::new(0, 1)
        } else {
            Ratio::new(transferred, optimal)
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.optimal_bits > 0 && self.ratio == Ratio::new(1, 1)
    }

    /// Adds another repair's totals to this one.
    pub fn merge(&mut self, other: &AccessReport) {
        self.bits_read += other.bits_read;
        self.bits_transferred += other.bits_transferred;
        self.elements_read += other.elements_read;
        self.optimal_bits += other.optimal_bits;
        self.uncoded &= other.uncoded;
        for h in &other.helpers_used {
            if !self.helpers_used.contains(h) {
                self.helpers_used.push(*h);
            }
        }
        self.ratio = Self::ratio_of(self.bits_transferred, self.optimal_bits);
    }
}

impl Default for AccessReport {
    fn default() -> Self {
        AccessReport {
            bits_read: 0,
            bits_transferred: 0,
            elements_read: 0,
            helpers_used: Vec::new(),
            optimal_bits: 0,
            ratio: Ratio::new(0, 1),
            uncoded: true,
        }
    }
}

/// Summarizes a trace. Helpers are listed in order of first access.
pub fn audit(trace: &AccessTrace) -> Result<AccessReport> {
    if trace.events.is_empty() {
        return Ok(AccessReport::default());
    }
    let Some(ctx) = trace.context else {
        return Err(CodeError::MalformedTrace(
            "reads recorded without a repair context".into(),
        ));
    };
    let mut report = AccessReport::default();
    for ev in &trace.events {
        if ev.column == ctx.failed {
            return Err(CodeError::MalformedTrace(format!(
                "read from the failed column {}",
                ev.column
            )));
        }
        if !ev.coded && ev.bits_sent != ev.bits_read {
            return Err(CodeError::MalformedTrace(format!(
                "uncoded read of column {} sent {} bits but read {}",
                ev.column, ev.bits_sent, ev.bits_read
            )));
        }
        report.bits_read += ev.bits_read;
        report.bits_transferred += ev.bits_sent;
        report.elements_read += 1;
        report.uncoded &= !ev.coded;
        if !report.helpers_used.contains(&ev.column) {
            report.helpers_used.push(ev.column);
        }
    }
    report.optimal_bits = optimal_bound(ctx.k, ctx.d, ctx.column_bits)?;
    report.ratio = AccessReport::ratio_of(report.bits_transferred, report.optimal_bits);
    Ok(report)
}

/// Column reader that logs every access and refuses the failed column and
/// anything not present.
pub struct TracedReader<'a, T> {
    columns: Vec<Option<&'a [T]>>,
    failed: usize,
    element_bits: u64,
    trace: AccessTrace,
}

impl<'a, T: Copy> TracedReader<'a, T> {
    pub fn new(columns: Vec<Option<&'a [T]>>, element_bits: u64, context: BoundContext) -> Self {
        TracedReader {
            columns,
            failed: context.failed,
            element_bits,
            trace: AccessTrace::new(context),
        }
    }

    pub fn read(&mut self, column: usize, index: usize) -> Result<T> {
        if column == self.failed {
            return Err(CodeError::MissingHelper(column));
        }
        let data = self
            .columns
            .get(column)
            .copied()
            .flatten()
            .ok_or(CodeError::MissingHelper(column))?;
        let value = *data.get(index).ok_or(CodeError::MissingHelper(column))?;
        self.trace.record(column, index, self.element_bits);
        Ok(value)
    }

    pub fn finish(self) -> AccessTrace {
        self.trace
    }
}

mod ratio_json {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Pair {
        numerator: u64,
        denominator: u64,
    }

    pub fn serialize<S: Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
        Pair {
            numerator: *r.numer(),
            denominator: *r.denom(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<u64>, D::Error> {
        let pair = Pair::deserialize(d)?;
        if pair.denominator == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Ratio::new(pair.numerator, pair.denominator))
    }
}
