use rayon::prelude::*;
use serde::Serialize;

use super::encoding::{encode, family, MatchClass, Radix, Scheme};
use super::{
    build_split_structure, classify_match, hist_build_symbols, hist_decide_any, hist_report_many, split_query, HistError,
    IndexMode,
};
use crate::hashing::{HashFn, DEFAULT_WORD_BITS};
use crate::instances::{ConvInstance, SolutionWitness};
use crate::rng::SplitMix64;

/// Per-gap statistics of one reporting run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FpRow {
    pub k: usize,
    pub queries: u64,
    pub matches: u64,
    /// Aligned matches, honest or not.
    pub candidates: u64,
    pub false_candidates: u64,
    pub encoding_errors: u64,
}

impl FpRow {
    pub const CSV_HEADER: &'static str = "k,queries,matches,candidates,false_candidates,encoding_errors";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.k, self.queries, self.matches, self.candidates, self.false_candidates, self.encoding_errors
        )
    }

    pub fn false_positives(&self) -> u64 {
        self.false_candidates + self.encoding_errors
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportingReport {
    pub witness: Option<SolutionWitness>,
    #[serde(rename = "R")]
    pub r_total: u64,
    pub text_len: usize,
    pub rows: Vec<FpRow>,
}

fn draw_hash(rng: &mut SplitMix64, radix: &Radix) -> Result<HashFn, HistError> {
    let bits = radix.r_total.trailing_zeros();
    HashFn::draw(rng, DEFAULT_WORD_BITS, bits).map_err(|e| HistError::BadParameter(e.to_string()))
}

/// `A[0] = 0` makes every `(i, i)` a solution; report the first.
fn zero_gap(inst: &ConvInstance) -> Option<SolutionWitness> {
    (inst.get(0) == 0).then_some(SolutionWitness::ConvDiff { i: 0, k: 0 })
}

/// Encodes the instance under a fresh hash, reports every member of every
/// gap's query family, classifies and verifies the matches. The witness is
/// the honest candidate of smallest gap, then smallest start block.
pub fn reporting_pipeline(
    inst: &ConvInstance,
    r_total: u64,
    ell: usize,
    scheme: Scheme,
    seed: u64,
) -> Result<ReportingReport, HistError> {
    run_reporting(inst, r_total, ell, scheme, seed, None)
}

/// [`reporting_pipeline`] with every query answered through a split
/// structure of parameter `alpha` instead of the plain index.
pub fn reporting_pipeline_split(
    inst: &ConvInstance,
    r_total: u64,
    ell: usize,
    scheme: Scheme,
    alpha: f64,
    seed: u64,
) -> Result<ReportingReport, HistError> {
    run_reporting(inst, r_total, ell, scheme, seed, Some(alpha))
}

fn run_reporting(
    inst: &ConvInstance,
    r_total: u64,
    ell: usize,
    scheme: Scheme,
    seed: u64,
    alpha: Option<f64>,
) -> Result<ReportingReport, HistError> {
    let radix = Radix::new(r_total, ell, scheme)?;
    let mut rng = SplitMix64::new(seed);
    let h = draw_hash(&mut rng, &radix)?;
    let enc = encode(inst, &h, r_total, ell, scheme)?;
    let idx = hist_build_symbols(enc.text().to_vec(), ell, IndexMode::Prefix)?;
    let split = alpha.map(|a| build_split_structure(&enc, a, None)).transpose()?;
    let offsets = h.linearity_offsets();
    let n = inst.len();

    let per_gap: Vec<(FpRow, Option<usize>)> = (1..n)
        .into_par_iter()
        .map(|k| {
            let fam = family(&radix, k, enc.hashes()[k], &offsets);
            let hits = match &split {
                Some(ss) => fam.iter().map(|q| split_query(ss, q)).collect::<Result<Vec<_>, _>>()?,
                None => hist_report_many(&idx, &fam)?,
            };
            let mut row = FpRow { k, queries: fam.len() as u64, ..FpRow::default() };
            let mut best = None::<usize>;
            for (q, starts) in fam.iter().zip(&hits) {
                row.matches += starts.len() as u64;
                for &p in starts {
                    match classify_match(&enc, p, q.total() as usize, k) {
                        MatchClass::Candidate { i, j } => {
                            row.candidates += 1;
                            if inst.diff_holds(i, j) {
                                best = Some(best.map_or(i, |b| b.min(i)));
                            } else {
                                row.false_candidates += 1;
                            }
                        }
                        MatchClass::EncodingError => row.encoding_errors += 1,
                    }
                }
            }
            Ok((row, best))
        })
        .collect::<Result<_, HistError>>()?;

    let witness = zero_gap(inst).or_else(|| {
        per_gap.iter().find_map(|&(row, best)| best.map(|i| SolutionWitness::ConvDiff { i, k: i + row.k }))
    });
    Ok(ReportingReport { witness, r_total, text_len: enc.len(), rows: per_gap.into_iter().map(|(r, _)| r).collect() })
}

/// One sample of the single-carry-set false-positive count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma3Sample {
    pub k: usize,
    pub matches: u64,
    pub honest: u64,
    pub false_positives: u64,
    /// `2^(ell-1) N / R^(1 - 1/ell)` for this text length.
    pub bound: f64,
}

/// Draws a hash, encodes with scheme 1 and queries the plain carry set of
/// gap `k` (no offsets, no wrap). Matches that are not honest solutions
/// count as false positives.
pub fn lemma3_sample(inst: &ConvInstance, k: usize, r_total: u64, ell: usize, seed: u64) -> Result<Lemma3Sample, HistError> {
    let radix = Radix::new(r_total, ell, Scheme::Plain)?;
    if k == 0 || k >= inst.len() {
        return Err(HistError::BadParameter(format!("gap {k} outside 1..{}", inst.len())));
    }
    let mut rng = SplitMix64::new(seed);
    let h = draw_hash(&mut rng, &radix)?;
    let enc = encode(inst, &h, r_total, ell, Scheme::Plain)?;
    let idx = hist_build_symbols(enc.text().to_vec(), ell, IndexMode::Prefix)?;
    let cs = super::carry_set(k, enc.hashes()[k], r_total, ell, Scheme::Plain)?;
    let hits = hist_report_many(&idx, &cs.members)?;
    let (mut matches, mut honest) = (0, 0);
    for (q, starts) in cs.members.iter().zip(&hits) {
        matches += starts.len() as u64;
        for &p in starts {
            if let MatchClass::Candidate { i, j } = classify_match(&enc, p, q.total() as usize, k) {
                honest += u64::from(inst.diff_holds(i, j));
            }
        }
    }
    let bound = (1u64 << (ell - 1)) as f64 * enc.len() as f64 / (radix.r as f64).powi(ell as i32 - 1);
    Ok(Lemma3Sample { k, matches, honest, false_positives: matches - honest, bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecisionConfig {
    pub ell: usize,
    /// Defaults to `ceil(log2 n) + 4`.
    pub trials: Option<usize>,
    pub seed: u64,
    /// Extra doublings of the digit base on top of `n^(1/(ell-2))`.
    pub base_scale_log2: u32,
    /// Scheme 1 has a window that matches every gap's base vector (the k-1
    /// whole blocks before the complement partial of block k), so it never
    /// eliminates anything; the padded scheme rules it out by length.
    pub scheme: Scheme,
}

impl DecisionConfig {
    pub fn new(ell: usize, seed: u64) -> Self {
        Self { ell, trials: None, seed, base_scale_log2: DEFAULT_BASE_SCALE_LOG2, scheme: Scheme::Padded }
    }

    pub fn trials_for(&self, n: usize) -> usize {
        self.trials.unwrap_or(ceil_log2(n) as usize + 4)
    }
}

pub const DEFAULT_BASE_SCALE_LOG2: u32 = 2;

fn ceil_log2(n: usize) -> u32 {
    n.max(1).next_power_of_two().trailing_zeros()
}

/// `R = r^d` (d digits of the scheme) with `r` a power of two near
/// `2^scale * n^(1/(ell-2))`, kept within the hash's output width.
pub fn decision_r(n: usize, ell: usize, scheme: Scheme, base_scale_log2: u32) -> Result<u64, HistError> {
    if ell < 3 || ell < scheme.min_ell() {
        return Err(HistError::AlphabetTooSmall { scheme: scheme.id(), min: scheme.min_ell().max(3), ell });
    }
    let digits = scheme.digits(ell) as u32;
    let want = ceil_log2(n).div_ceil(ell as u32 - 2) + base_scale_log2;
    let log_r = want.clamp(1, 62 / digits);
    Ok(1u64 << (log_r * digits))
}

#[derive(Clone, Debug, Serialize)]
pub struct DecisionReport {
    pub witness: Option<SolutionWitness>,
    #[serde(rename = "R")]
    pub r_total: u64,
    pub trials: usize,
    /// Gaps still alive after each trial.
    pub surviving: Vec<usize>,
    /// Gaps handed to the verification scan.
    pub verified_gaps: usize,
}

/// Decision-only filter: a gap survives a trial when some vector of its
/// query family occurs in the trial's encoding. Survivors of every trial
/// are checked by a linear scan, so the answer is always sound; true gaps
/// always survive, so it is also complete.
pub fn decision_pipeline(inst: &ConvInstance, cfg: &DecisionConfig) -> Result<DecisionReport, HistError> {
    let n = inst.len();
    let trials = cfg.trials_for(n);
    if trials == 0 {
        return Err(HistError::BadParameter("trials must be at least 1".into()));
    }
    let r_total = decision_r(n, cfg.ell, cfg.scheme, cfg.base_scale_log2)?;
    let radix = Radix::new(r_total, cfg.ell, cfg.scheme)?;
    let mut rng = SplitMix64::new(cfg.seed);
    let mut alive: Vec<usize> = (1..n).collect();
    let mut surviving = Vec::with_capacity(trials);
    for _ in 0..trials {
        if alive.is_empty() {
            break;
        }
        let h = draw_hash(&mut rng, &radix)?;
        let enc = encode(inst, &h, r_total, cfg.ell, cfg.scheme)?;
        let idx = hist_build_symbols(enc.text().to_vec(), cfg.ell, IndexMode::Prefix)?;
        let offsets = h.linearity_offsets();
        let keep: Vec<bool> = alive
            .par_iter()
            .map(|&k| hist_decide_any(&idx, &family(&radix, k, enc.hashes()[k], &offsets)))
            .collect::<Result<_, _>>()?;
        alive = alive.into_iter().zip(keep).filter_map(|(k, y)| y.then_some(k)).collect();
        surviving.push(alive.len());
    }
    let witness = zero_gap(inst).or_else(|| {
        alive.iter().find_map(|&k| (0..n - k).find(|&i| inst.diff_holds(i, i + k)).map(|i| SolutionWitness::ConvDiff { i, k: i + k }))
    });
    Ok(DecisionReport { witness, r_total, trials, surviving, verified_gaps: alive.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate, solve_conv3sum_diff_naive, PlantKind};

    fn diff_key(w: Option<SolutionWitness>) -> Option<(usize, usize)> {
        w.map(|w| match w {
            SolutionWitness::ConvDiff { i, k } => (k - i, i),
            other => panic!("unexpected witness {other:?}"),
        })
    }

    /// Smallest gap, then smallest start.
    fn oracle(inst: &ConvInstance) -> Option<(usize, usize)> {
        if inst.get(0) == 0 {
            return Some((0, 0));
        }
        let n = inst.len();
        (1..n).find_map(|g| (0..n - g).find(|&i| inst.diff_holds(i, i + g)).map(|i| (g, i)))
    }

    #[test]
    fn reporting_finds_planted_n256() {
        let inst = generate(256, 1 << 30, 5, Some(PlantKind::ConvDiff)).unwrap();
        let rep = reporting_pipeline(&inst, 1 << 9, 3, Scheme::Plain, 1).unwrap();
        let w = rep.witness.expect("planted witness");
        assert!(w.holds_for_conv(&inst));
        assert_eq!(diff_key(rep.witness), oracle(&inst));
        assert_eq!(rep.rows.len(), 255);
    }

    #[test]
    fn reporting_agrees_with_oracle_all_schemes() {
        for seed in 0..30u64 {
            let n = 8 + (seed as usize * 7) % 40;
            let universe = if seed % 2 == 0 { 1 << 30 } else { 40 };
            let plant = (seed % 3 == 0).then_some(PlantKind::ConvDiff);
            let inst = generate(n, universe, seed, plant).unwrap();
            for (scheme, ell, r_total) in [(Scheme::Plain, 2, 64), (Scheme::Plain, 3, 512), (Scheme::Padded, 3, 64), (Scheme::Separated, 4, 64)] {
                let rep = reporting_pipeline(&inst, r_total, ell, scheme, seed).unwrap();
                assert_eq!(diff_key(rep.witness), oracle(&inst), "seed {seed} {scheme:?}");
                assert_eq!(rep.witness.is_some(), solve_conv3sum_diff_naive(&inst).is_some());
            }
        }
    }

    #[test]
    fn rows_are_consistent() {
        let inst = generate(40, 1 << 20, 3, None).unwrap();
        let rep = reporting_pipeline(&inst, 64, 2, Scheme::Plain, 9).unwrap();
        for row in &rep.rows {
            assert_eq!(row.matches, row.candidates + row.encoding_errors);
            assert!(row.false_candidates <= row.candidates);
        }
        assert_eq!(rep.rows[0].csv().split(',').count(), FpRow::CSV_HEADER.split(',').count());
    }

    #[test]
    fn decision_r_regime() {
        assert_eq!(decision_r(64, 3, Scheme::Plain, 1).unwrap(), 1 << 21);
        assert_eq!(decision_r(64, 3, Scheme::Padded, 1).unwrap(), 1 << 14);
        assert_eq!(decision_r(64, 4, Scheme::Plain, 0).unwrap(), 1 << 12);
        assert_eq!(decision_r(1 << 20, 3, Scheme::Plain, 1).unwrap(), 1 << 60);
        assert!(decision_r(64, 2, Scheme::Plain, 1).is_err());
        assert!(decision_r(64, 3, Scheme::Separated, 1).is_err());
    }

    #[test]
    fn decision_agrees_with_oracle() {
        for seed in 0..40u64 {
            let n = 4 + (seed as usize * 5) % 40;
            let plant = (seed % 2 == 0).then_some(PlantKind::ConvDiff);
            let inst = generate(n, 1 << 30, 100 + seed, plant).unwrap();
            let ell = 3 + (seed as usize % 2);
            let rep = decision_pipeline(&inst, &DecisionConfig::new(ell, seed)).unwrap();
            assert_eq!(diff_key(rep.witness), oracle(&inst), "seed {seed}");
            assert_eq!(rep.trials, ceil_log2(n) as usize + 4);
        }
    }

    #[test]
    fn padded_filter_eliminates_plain_does_not() {
        let inst = generate(48, 1 << 30, 21, None).unwrap();
        let rep = decision_pipeline(&inst, &DecisionConfig::new(3, 2)).unwrap();
        assert_eq!(rep.verified_gaps, 0, "{:?}", rep.surviving);
        assert!(rep.surviving[0] < 47 / 2);
        // Every gap keeps its aliasing window under scheme 1.
        let plain = DecisionConfig { scheme: Scheme::Plain, trials: Some(3), ..DecisionConfig::new(3, 2) };
        let rep = decision_pipeline(&inst, &plain).unwrap();
        assert_eq!(rep.surviving, vec![47; 3]);
        assert!(rep.witness.is_none());
    }

    #[test]
    fn single_trial_stays_sound() {
        let inst = generate(30, 1 << 30, 77, None).unwrap();
        let cfg = DecisionConfig { trials: Some(1), base_scale_log2: 0, ..DecisionConfig::new(3, 3) };
        let rep = decision_pipeline(&inst, &cfg).unwrap();
        assert_eq!(rep.witness.is_some(), oracle(&inst).is_some());
        assert!(decision_pipeline(&inst, &DecisionConfig { trials: Some(0), ..cfg }).is_err());
    }

    #[test]
    fn split_routing_matches_plain_reporting() {
        for seed in 0..4 {
            let plant = (seed % 2 == 0).then_some(PlantKind::ConvDiff);
            let inst = generate(40, 1 << 30, 30 + seed, plant).unwrap();
            let plain = reporting_pipeline(&inst, 1 << 6, 3, Scheme::Plain, seed).unwrap();
            for alpha in [0.0, 0.5, 1.0] {
                let split = reporting_pipeline_split(&inst, 1 << 6, 3, Scheme::Plain, alpha, seed).unwrap();
                assert_eq!(split.witness, plain.witness);
                assert_eq!(split.rows, plain.rows);
            }
        }
    }

    #[test]
    fn lemma3_sample_shape() {
        let inst = generate(64, 1 << 30, 8, None).unwrap();
        let s = lemma3_sample(&inst, 5, 64, 2, 4).unwrap();
        assert_eq!(s.false_positives + s.honest, s.matches);
        assert!((s.bound - 2.0 * (64.0 * 16.0) / 8.0).abs() < 1e-9);
        assert!(lemma3_sample(&inst, 0, 64, 2, 4).is_err());
    }
}
