//! Histogram (jumbled) indexing and the reduction that encodes a
//! Diff-Convolution-3SUM instance as a string whose substring histograms
//! reveal solutions.

mod encoding;
mod pipeline;
mod split;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encoding::{
    carry_set, classify_match, encode, encode_hashes, query_family, BlockBounds, CarrySet, EncodedDump,
    EncodedInstance, MatchClass, Scheme,
};
pub use pipeline::{
    decision_pipeline, decision_r, lemma3_sample, reporting_pipeline, reporting_pipeline_split, DecisionConfig, DecisionReport, FpRow,
    Lemma3Sample, ReportingReport, DEFAULT_BASE_SCALE_LOG2,
};
pub use split::{build_split_structure, default_levels, split_query, SplitLevel, SplitPart, SplitStructure};

#[derive(Debug, Error, PartialEq)]
pub enum HistError {
    #[error("character {0:?} outside the alphabet")]
    ForeignCharacter(char),
    #[error("symbol {symbol} outside an alphabet of size {ell}")]
    ForeignSymbol { symbol: u8, ell: usize },
    #[error("alphabet size {0} unsupported")]
    BadAlphabet(usize),
    #[error("binary-interval mode needs a two-letter alphabet, got {0}")]
    ModeMismatch(usize),
    #[error("query has {got} counts, index alphabet has {ell}")]
    WrongArity { got: usize, ell: usize },
    #[error("empty query vector")]
    EmptyQuery,
    #[error("R = {r_total} is not a {d}-th power of a power of two")]
    NotPerfectPower { r_total: u64, d: u32 },
    #[error("scheme {scheme} needs an alphabet of at least {min}, got {ell}")]
    AlphabetTooSmall { scheme: u8, min: usize, ell: usize },
    #[error("alpha {0} outside [0, 1]")]
    BadAlpha(f64),
    #[error("{0}")]
    BadParameter(String),
}

/// Largest supported alphabet (including a splitting character).
pub const MAX_ALPHABET: usize = 26;

/// Per-symbol counts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParikhVector(pub Vec<u64>);

impl ParikhVector {
    pub fn zeros(ell: usize) -> Self {
        Self(vec![0; ell])
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn ell(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl From<Vec<u64>> for ParikhVector {
    fn from(v: Vec<u64>) -> Self {
        Self(v)
    }
}

/// Letters `a, b, ...` to symbols `0, 1, ...`.
pub fn symbols_from_str(t: &str, ell: usize) -> Result<Vec<u8>, HistError> {
    t.chars()
        .map(|c| {
            let s = (c as u32).wrapping_sub('a' as u32);
            if (s as usize) < ell {
                Ok(s as u8)
            } else {
                Err(HistError::ForeignCharacter(c))
            }
        })
        .collect()
}

pub fn symbols_to_string(t: &[u8]) -> String {
    t.iter().map(|&s| (b'a' + s) as char).collect()
}

/// Histogram of a letter string over an alphabet of size `ell`.
pub fn parikh(t: &str, ell: usize) -> Result<ParikhVector, HistError> {
    parikh_symbols(&symbols_from_str(t, ell)?, ell)
}

pub fn parikh_symbols(t: &[u8], ell: usize) -> Result<ParikhVector, HistError> {
    let mut counts = vec![0u64; ell];
    for &s in t {
        *counts.get_mut(s as usize).ok_or(HistError::ForeignSymbol { symbol: s, ell })? += 1;
    }
    Ok(ParikhVector(counts))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexMode {
    /// Prefix counts; a query scans every window of the query length.
    Prefix,
    /// Prefix counts plus, per window length, the range of first-symbol
    /// counts; decision queries take constant time. Binary alphabets only.
    BinaryInterval,
}

#[derive(Clone, Debug)]
pub struct HistogramIndex {
    text: Vec<u8>,
    ell: usize,
    /// `prefix[p * ell + s]`: occurrences of `s` in `text[..p]`.
    prefix: Vec<u32>,
    /// Per window length `m`: (min, max) count of symbol 0.
    interval: Option<Vec<(u32, u32)>>,
}

impl HistogramIndex {
    pub fn text(&self) -> &[u8] {
        &self.text
    }

    pub fn len(&self) -> usize {
        self.text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn mode(&self) -> IndexMode {
        if self.interval.is_some() {
            IndexMode::BinaryInterval
        } else {
            IndexMode::Prefix
        }
    }

    /// Row `p` of the prefix table.
    pub fn prefix_row(&self, p: usize) -> &[u32] {
        &self.prefix[p * self.ell..(p + 1) * self.ell]
    }

    pub fn interval(&self, m: usize) -> Option<(u32, u32)> {
        self.interval.as_ref().and_then(|t| t.get(m).copied())
    }

    /// Count of `s` in `text[a..b]`.
    pub fn count(&self, s: usize, a: usize, b: usize) -> u32 {
        self.prefix[b * self.ell + s] - self.prefix[a * self.ell + s]
    }

    fn window_matches(&self, p: usize, m: usize, want: &[u64]) -> bool {
        let lo = &self.prefix[p * self.ell..(p + 1) * self.ell];
        let hi = &self.prefix[(p + m) * self.ell..(p + m + 1) * self.ell];
        (0..self.ell).all(|s| (hi[s] - lo[s]) as u64 == want[s])
    }
}

pub fn hist_build_symbols(text: Vec<u8>, ell: usize, mode: IndexMode) -> Result<HistogramIndex, HistError> {
    if !(1..=MAX_ALPHABET).contains(&ell) {
        return Err(HistError::BadAlphabet(ell));
    }
    if mode == IndexMode::BinaryInterval && ell != 2 {
        return Err(HistError::ModeMismatch(ell));
    }
    let n = text.len();
    let mut prefix = vec![0u32; (n + 1) * ell];
    for (p, &s) in text.iter().enumerate() {
        if s as usize >= ell {
            return Err(HistError::ForeignSymbol { symbol: s, ell });
        }
        let (done, rest) = prefix.split_at_mut((p + 1) * ell);
        rest[..ell].copy_from_slice(&done[p * ell..]);
        rest[s as usize] += 1;
    }
    let interval = (mode == IndexMode::BinaryInterval).then(|| {
        (0..=n)
            .map(|m| {
                (0..=n - m)
                    .map(|p| prefix[(p + m) * 2] - prefix[p * 2])
                    .fold((u32::MAX, 0), |(lo, hi), c| (lo.min(c), hi.max(c)))
            })
            .collect()
    });
    Ok(HistogramIndex { text, ell, prefix, interval })
}

pub fn hist_build(t: &str, ell: usize, mode: IndexMode) -> Result<HistogramIndex, HistError> {
    hist_build_symbols(symbols_from_str(t, ell)?, ell, mode)
}

fn check_query(idx: &HistogramIndex, psi: &ParikhVector) -> Result<usize, HistError> {
    if psi.ell() != idx.ell {
        return Err(HistError::WrongArity { got: psi.ell(), ell: idx.ell });
    }
    match psi.total() {
        0 => Err(HistError::EmptyQuery),
        m => Ok(m as usize),
    }
}

/// Whether some substring has histogram `psi`.
pub fn hist_decide(idx: &HistogramIndex, psi: &ParikhVector) -> Result<bool, HistError> {
    let m = check_query(idx, psi)?;
    if m > idx.len() {
        return Ok(false);
    }
    if let Some(table) = &idx.interval {
        let (lo, hi) = table[m];
        return Ok((lo as u64..=hi as u64).contains(&psi.0[0]));
    }
    Ok((0..=idx.len() - m).any(|p| idx.window_matches(p, m, &psi.0)))
}

/// Start positions of all substrings with histogram `psi`, ascending.
pub fn hist_report(idx: &HistogramIndex, psi: &ParikhVector) -> Result<Vec<usize>, HistError> {
    let m = check_query(idx, psi)?;
    if m > idx.len() {
        return Ok(Vec::new());
    }
    Ok((0..=idx.len() - m).filter(|&p| idx.window_matches(p, m, &psi.0)).collect())
}

/// [`hist_report`] for many queries, one pass per distinct query length.
/// Output `i` belongs to `queries[i]`.
pub fn hist_report_many(idx: &HistogramIndex, queries: &[ParikhVector]) -> Result<Vec<Vec<usize>>, HistError> {
    let mut by_len: HashMap<usize, HashMap<&[u64], Vec<usize>>> = HashMap::new();
    for (i, q) in queries.iter().enumerate() {
        let m = check_query(idx, q)?;
        by_len.entry(m).or_default().entry(q.counts()).or_default().push(i);
    }
    let mut out = vec![Vec::new(); queries.len()];
    let mut window = vec![0u64; idx.ell];
    for (m, wanted) in by_len {
        if m > idx.len() {
            continue;
        }
        for p in 0..=idx.len() - m {
            for (s, w) in window.iter_mut().enumerate() {
                *w = idx.count(s, p, p + m) as u64;
            }
            if let Some(ids) = wanted.get(window.as_slice()) {
                for &i in ids {
                    out[i].push(p);
                }
            }
        }
    }
    Ok(out)
}

/// Whether any of `queries` occurs; stops at the first hit.
pub fn hist_decide_any(idx: &HistogramIndex, queries: &[ParikhVector]) -> Result<bool, HistError> {
    let mut by_len: HashMap<usize, std::collections::HashSet<&[u64]>> = HashMap::new();
    for q in queries {
        let m = check_query(idx, q)?;
        if m <= idx.len() {
            by_len.entry(m).or_default().insert(q.counts());
        }
    }
    let mut window = vec![0u64; idx.ell];
    for (m, wanted) in by_len {
        for p in 0..=idx.len() - m {
            for (s, w) in window.iter_mut().enumerate() {
                *w = idx.count(s, p, p + m) as u64;
            }
            if wanted.contains(window.as_slice()) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}
