use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{build_length_tree, build_ones_tree_with_density, TreeVariant, WitnessSearch};
use crate::convolution::{characteristic_vector, SparseBitVector};
use crate::hashing::{build_buckets, scan_overflow, BucketDecomposition, HashFn, DEFAULT_WORD_BITS};
use crate::instances::{ConvInstance, SolutionWitness};
use crate::partial_ops::{build_special_quad_tree_with_density, LeafBackend};
use crate::rng::SplitMix64;

/// Which search structure the pipeline builds per bucket pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SearchVariant {
    Tree(TreeVariant),
    SpecialQuad(LeafBackend),
}

impl SearchVariant {
    pub const ALL: [SearchVariant; 5] = [
        SearchVariant::Tree(TreeVariant::OnesSplitBinary),
        SearchVariant::Tree(TreeVariant::LengthSplitBinary),
        SearchVariant::Tree(TreeVariant::LengthSplitQuad),
        SearchVariant::SpecialQuad(LeafBackend::Direct),
        SearchVariant::SpecialQuad(LeafBackend::Matmul),
    ];

    pub fn name(self) -> &'static str {
        match self {
            SearchVariant::Tree(t) => t.name(),
            SearchVariant::SpecialQuad(LeafBackend::Direct) => "special-quad-direct",
            SearchVariant::SpecialQuad(LeafBackend::Matmul) => "special-quad-matmul",
        }
    }
}

impl fmt::Display for SearchVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SearchVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        SearchVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown search variant '{s}'"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionConfig {
    /// Bucket count `R`, a power of two.
    pub buckets: usize,
    /// Leaf parameter `X`, a power of two.
    pub leaf: usize,
    pub variant: SearchVariant,
    pub fp_budget_factor: f64,
    pub max_rehash: usize,
    pub seed: u64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            buckets: 8,
            leaf: 64,
            variant: SearchVariant::Tree(TreeVariant::OnesSplitBinary),
            fp_budget_factor: 2.0,
            max_rehash: 8,
            seed: 0,
        }
    }
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<(), ReductionError> {
        if self.buckets < 2 || !self.buckets.is_power_of_two() {
            return Err(ReductionError::Config(format!("R={} must be a power of two >= 2", self.buckets)));
        }
        if !self.leaf.is_power_of_two() {
            return Err(ReductionError::Config(format!("X={} must be a power of two", self.leaf)));
        }
        if self.fp_budget_factor.is_nan() || self.fp_budget_factor <= 0.0 {
            return Err(ReductionError::Config("fp budget factor must be positive".into()));
        }
        Ok(())
    }

    /// `R` actually used for an instance of length `n`: never above the
    /// largest power of two not exceeding `n`, and at least 2.
    pub fn effective_buckets(&self, n: usize) -> usize {
        let cap = if n < 2 { 2 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        self.buckets.min(cap).max(2)
    }

    /// Rehash threshold on false positives for one hash draw.
    pub fn fp_budget(&self, n: usize, r: usize) -> f64 {
        self.fp_budget_factor * (n * n) as f64 / r as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Found,
    None,
    RehashExhausted,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Found => "found",
            Verdict::None => "none",
            Verdict::RehashExhausted => "rehash-exhausted",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub bucketing: f64,
    pub trees: f64,
    pub enumeration: f64,
    pub verification: f64,
}

/// Outcome and counters of one pipeline run, summed over all hash draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub verdict: Verdict,
    pub witness: Option<SolutionWitness>,
    pub candidates: u64,
    pub false_positives: u64,
    pub rehashes: usize,
    pub timings_ms: PhaseTimings,
}

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("false-positive budget exceeded on {} consecutive hash draws", .0.rehashes + 1)]
    RehashExhausted(Box<ReductionReport>),
}

#[derive(Default)]
struct PairOutcome {
    best: Option<(usize, usize)>,
    candidates: u64,
    false_positives: u64,
    trees: Duration,
    enumeration: Duration,
    verification: Duration,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn build_structure(
    variant: SearchVariant,
    u: &SparseBitVector,
    v: &SparseBitVector,
    x: usize,
    r: usize,
    max_ones: usize,
) -> Box<dyn WitnessSearch> {
    let padded = |s: &SparseBitVector| s.padded(s.len().next_power_of_two().max(x));
    // Parameters were validated up front; failure here is a logic error.
    match variant {
        SearchVariant::Tree(TreeVariant::OnesSplitBinary) => {
            Box::new(build_ones_tree_with_density(u, v, x, r, max_ones).expect("ones tree"))
        }
        SearchVariant::Tree(t) => Box::new(build_length_tree(&padded(u), &padded(v), x, t).expect("length tree")),
        SearchVariant::SpecialQuad(backend) => {
            Box::new(build_special_quad_tree_with_density(u, v, x, r, max_ones, backend).expect("special tree"))
        }
    }
}

/// Target buckets `(a + b - d) mod R` for every linearity offset `d`.
fn target_buckets(h: &HashFn, a: usize, b: usize) -> Vec<usize> {
    let r = h.range();
    let mut t: Vec<usize> = h.linearity_offsets().into_iter().map(|d| (a + b + r - d) % r).collect();
    t.sort_unstable();
    t.dedup();
    t
}

/// Sum positions to query for bucket pair `(a, b)`, ascending.
fn query_positions(dec: &BucketDecomposition, h: &HashFn, a: usize, b: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = target_buckets(h, a, b).into_iter().flat_map(|t| dec.light_bucket(t).iter().copied()).collect();
    ks.sort_unstable();
    ks
}

/// Number of candidate pairs the pipeline would enumerate under `h`, split
/// into (candidates, false positives), computed without any tree. Candidate
/// pairs are light `(i, j)` whose sum position is light and hashes into a
/// target bucket of `(h(A[i]), h(A[j]))`.
pub fn count_candidates(inst: &ConvInstance, h: &HashFn) -> (u64, u64) {
    let dec = build_buckets(inst, h).expect("values are in range");
    let n = inst.len();
    let light: Vec<bool> = (0..n).map(|i| !dec.is_overflowed_bucket(dec.hash_of(i))).collect();
    let r = h.range();
    let offsets: Vec<usize> = h.linearity_offsets().into_iter().collect();
    let (mut cand, mut fp) = (0u64, 0u64);
    for i in (0..n).filter(|&i| light[i]) {
        for j in (0..n - i).filter(|&j| light[j]) {
            let k = i + j;
            if !light[k] {
                continue;
            }
            let s = dec.hash_of(i) + dec.hash_of(j);
            if offsets.iter().any(|&d| (s + r - d) % r == dec.hash_of(k)) {
                cand += 1;
                if !inst.conv_holds(i, j) {
                    fp += 1;
                }
            }
        }
    }
    (cand, fp)
}

/// Convolution-3SUM through hashing into `R` buckets and witness search
/// over every bucket pair.
///
/// Every candidate is checked against the original values, so a reported
/// witness always holds. A hash draw whose false positives exceed the
/// budget is discarded; after `max_rehash` redraws the run fails with
/// [`ReductionError::RehashExhausted`]. On success the witness is the
/// lexicographically smallest `(i, j)` that holds.
pub fn reduce_conv3sum(inst: &ConvInstance, cfg: &ReductionConfig) -> Result<ReductionReport, ReductionError> {
    cfg.validate()?;
    let n = inst.len();
    let r = cfg.effective_buckets(n);
    let s = r.trailing_zeros();
    let budget = cfg.fp_budget(n, r);
    let mut rng = SplitMix64::new(cfg.seed);
    let mut report = ReductionReport {
        verdict: Verdict::None,
        witness: None,
        candidates: 0,
        false_positives: 0,
        rehashes: 0,
        timings_ms: PhaseTimings::default(),
    };

    for attempt in 0..=cfg.max_rehash {
        report.rehashes = attempt;
        let start = Instant::now();
        let h = HashFn::draw(&mut rng, DEFAULT_WORD_BITS, s).expect("valid widths");
        let dec = build_buckets(inst, &h).expect("values are in range");
        let overflow_hit = scan_overflow(inst, &dec).and_then(|w| w.to_conv());
        report.timings_ms.bucketing += ms(start.elapsed());

        let fp_total = AtomicU64::new(0);
        let abort = AtomicBool::new(false);
        let pairs: Vec<(usize, usize)> = (0..r)
            .flat_map(|a| (0..r).map(move |b| (a, b)))
            .filter(|&(a, b)| !dec.light_bucket(a).is_empty() && !dec.light_bucket(b).is_empty())
            .collect();

        let outcomes: Vec<PairOutcome> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let mut out = PairOutcome::default();
                if abort.load(Ordering::Relaxed) {
                    return out;
                }
                let ks = query_positions(&dec, &h, a, b);
                if ks.is_empty() {
                    return out;
                }
                let t0 = Instant::now();
                let u = characteristic_vector(dec.light_bucket(a), n).expect("indices in range");
                let v = characteristic_vector(dec.light_bucket(b), n).expect("indices in range");
                let tree = build_structure(cfg.variant, &u, &v, cfg.leaf, r, dec.threshold());
                out.trees += t0.elapsed();
                for k in ks {
                    if abort.load(Ordering::Relaxed) {
                        break;
                    }
                    let t1 = Instant::now();
                    let found = tree.witnesses(k, None).expect("k below n");
                    out.enumeration += t1.elapsed();
                    let t2 = Instant::now();
                    for (i, j) in found {
                        out.candidates += 1;
                        if inst.conv_holds(i, j) {
                            if out.best.is_none_or(|b| (i, j) < b) {
                                out.best = Some((i, j));
                            }
                        } else {
                            out.false_positives += 1;
                            let total = fp_total.fetch_add(1, Ordering::Relaxed) + 1;
                            if total as f64 > budget {
                                abort.store(true, Ordering::Relaxed);
                            }
                        }
                    }
                    out.verification += t2.elapsed();
                }
                out
            })
            .collect();

        let mut best = overflow_hit;
        for o in &outcomes {
            report.candidates += o.candidates;
            report.false_positives += o.false_positives;
            report.timings_ms.trees += ms(o.trees);
            report.timings_ms.enumeration += ms(o.enumeration);
            report.timings_ms.verification += ms(o.verification);
            if let Some(w) = o.best {
                if best.is_none_or(|b| w < b) {
                    best = Some(w);
                }
            }
        }
        if abort.load(Ordering::Relaxed) {
            log::debug!("hash draw {attempt} exceeded the false-positive budget {budget:.1}");
            continue;
        }
        report.witness = best.map(|(i, j)| SolutionWitness::Conv { i, j });
        report.verdict = if best.is_some() { Verdict::Found } else { Verdict::None };
        return Ok(report);
    }
    report.verdict = Verdict::RehashExhausted;
    Err(ReductionError::RehashExhausted(Box::new(report)))
}

/// Build and query cost of the search structures for one hash draw.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTiming {
    pub build_ms: f64,
    pub query_ms: f64,
    /// Witnesses enumerated over all queried positions, honest or not.
    pub witnesses: u64,
    pub pairs: usize,
}

/// Runs the bucket-pair workload of [`reduce_conv3sum`] for the first hash
/// drawn from `cfg.seed`, single-threaded, timing structure construction
/// and enumeration separately. Each queried position lists at most `limit`
/// witnesses. No verification and no early exit, so the witness count
/// depends only on the instance, the hash and `limit`.
pub fn timed_search(
    inst: &ConvInstance,
    cfg: &ReductionConfig,
    limit: Option<usize>,
) -> Result<SearchTiming, ReductionError> {
    cfg.validate()?;
    let n = inst.len();
    let r = cfg.effective_buckets(n);
    let mut rng = SplitMix64::new(cfg.seed);
    let h = HashFn::draw(&mut rng, DEFAULT_WORD_BITS, r.trailing_zeros()).expect("valid widths");
    let dec = build_buckets(inst, &h).expect("values are in range");
    let mut out = SearchTiming::default();
    let mut built = Vec::new();
    let t0 = Instant::now();
    for a in 0..r {
        for b in 0..r {
            if dec.light_bucket(a).is_empty() || dec.light_bucket(b).is_empty() {
                continue;
            }
            let ks = query_positions(&dec, &h, a, b);
            if ks.is_empty() {
                continue;
            }
            let u = characteristic_vector(dec.light_bucket(a), n).expect("indices in range");
            let v = characteristic_vector(dec.light_bucket(b), n).expect("indices in range");
            built.push((build_structure(cfg.variant, &u, &v, cfg.leaf, r, dec.threshold()), ks));
        }
    }
    out.build_ms = ms(t0.elapsed());
    out.pairs = built.len();
    let t1 = Instant::now();
    for (tree, ks) in &built {
        for &k in ks {
            out.witnesses += tree.witnesses(k, limit).expect("k below n").len() as u64;
        }
    }
    out.query_ms = ms(t1.elapsed());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate, solve_conv3sum_naive, PlantKind};

    fn cfg(variant: SearchVariant, r: usize, x: usize, seed: u64) -> ReductionConfig {
        ReductionConfig { buckets: r, leaf: x, variant, seed, ..Default::default() }
    }

    #[test]
    fn small_no_solution() {
        let inst = ConvInstance::new(vec![1, 2, 3]).unwrap();
        for v in SearchVariant::ALL {
            let rep = reduce_conv3sum(&inst, &cfg(v, 8, 4, 1)).unwrap();
            assert_eq!(rep.verdict, Verdict::None);
            assert_eq!(rep.witness, None);
            assert_eq!(solve_conv3sum_naive(&inst), None);
        }
    }

    #[test]
    fn planted_found_by_every_variant() {
        let inst = generate(512, 1 << 30, 7, Some(PlantKind::Conv)).unwrap();
        let oracle = solve_conv3sum_naive(&inst);
        for v in SearchVariant::ALL {
            let rep = reduce_conv3sum(&inst, &cfg(v, 8, 64, 3)).unwrap();
            assert_eq!(rep.verdict, Verdict::Found, "{v}");
            assert_eq!(rep.witness, oracle, "{v}");
            assert!(rep.witness.unwrap().holds_for_conv(&inst));
        }
    }

    #[test]
    fn matches_oracle_on_small_universe() {
        let mut rng = SplitMix64::new(21);
        for t in 0..40 {
            let n = 1 + rng.index(100);
            let inst = generate(n, [8, 64, 1000][t % 3], rng.next_u64(), None).unwrap();
            let v = SearchVariant::ALL[t % 5];
            let rep = reduce_conv3sum(&inst, &cfg(v, 8, 16, t as u64)).unwrap();
            assert_eq!(rep.witness, solve_conv3sum_naive(&inst), "{v} {:?}", inst.values());
        }
    }

    #[test]
    fn candidate_count_matches_pipeline() {
        let inst = generate(200, 1 << 30, 5, None).unwrap();
        let c = ReductionConfig { fp_budget_factor: 1e9, ..cfg(SearchVariant::Tree(TreeVariant::OnesSplitBinary), 8, 16, 9) };
        let rep = reduce_conv3sum(&inst, &c).unwrap();
        let mut rng = SplitMix64::new(9);
        let h = HashFn::draw(&mut rng, DEFAULT_WORD_BITS, 3).unwrap();
        assert_eq!(count_candidates(&inst, &h), (rep.candidates, rep.false_positives));
    }

    #[test]
    fn tiny_budget_exhausts_rehashes() {
        let inst = generate(64, 1 << 30, 5, None).unwrap();
        let c = ReductionConfig { fp_budget_factor: 1e-9, max_rehash: 2, ..Default::default() };
        match reduce_conv3sum(&inst, &c) {
            Err(ReductionError::RehashExhausted(rep)) => {
                assert_eq!(rep.verdict, Verdict::RehashExhausted);
                assert_eq!(rep.rehashes, 2);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn timed_search_counts_are_variant_independent() {
        let inst = generate(300, 1 << 30, 12, None).unwrap();
        let counts: Vec<u64> = SearchVariant::ALL
            .iter()
            .map(|&v| timed_search(&inst, &cfg(v, 8, 16, 4), None).unwrap().witnesses)
            .collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
        let rep = reduce_conv3sum(&inst, &ReductionConfig { fp_budget_factor: 1e9, ..cfg(SearchVariant::ALL[0], 8, 16, 4) }).unwrap();
        assert_eq!(counts[0], rep.candidates);
    }

    #[test]
    fn config_validation_and_clamp() {
        let bad = ReductionConfig { buckets: 6, ..Default::default() };
        assert!(matches!(bad.validate(), Err(ReductionError::Config(_))));
        let c = ReductionConfig { buckets: 64, ..Default::default() };
        assert_eq!(c.effective_buckets(40), 32);
        assert_eq!(c.effective_buckets(1), 2);
        assert_eq!(c.effective_buckets(1000), 64);
    }

    #[test]
    fn report_json_shape() {
        let inst = ConvInstance::new(vec![0, 5, 7]).unwrap();
        let rep = reduce_conv3sum(&inst, &ReductionConfig::default()).unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["verdict"], "found");
        assert_eq!(json["witness"]["kind"], "conv");
        for key in ["bucketing", "trees", "enumeration", "verification"] {
            assert!(json["timings_ms"][key].is_number());
        }
        for key in ["candidates", "false_positives", "rehashes"] {
            assert!(json[key].is_number());
        }
    }
}
