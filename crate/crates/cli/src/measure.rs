use std::io::Write;

use fgl_core::hashing::{HashFn, DEFAULT_WORD_BITS};
use fgl_core::histogram::lemma3_sample;
use fgl_core::instances::generate;
use fgl_core::witness_trees::{count_candidates, timed_search, ReductionConfig};
use fgl_core::SplitMix64;
use rayon::prelude::*;

use crate::{emit, Failure, FpArgs, FpMode, TradeoffArgs};

pub const FP_CSV_HEADER: &str = "n,R,ell,samples,measured_mean,predicted_bound,ratio";
pub const TRADEOFF_CSV_HEADER: &str = "variant,n,R,X,build_ms,query_ms,witnesses";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FpMeasureRow {
    pub n: usize,
    pub r_total: u64,
    /// Absent for the bucket measurement.
    pub ell: Option<usize>,
    pub samples: usize,
    pub measured_mean: f64,
    pub predicted_bound: f64,
    pub ratio: f64,
}

impl FpMeasureRow {
    pub fn csv(&self) -> String {
        let ell = self.ell.map(|l| l.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6}",
            self.n, self.r_total, ell, self.samples, self.measured_mean, self.predicted_bound, self.ratio
        )
    }
}

fn lemma1_rows(args: &FpArgs, samples: usize) -> Result<Vec<FpMeasureRow>, Failure> {
    if !args.ell.is_empty() || !args.base.is_empty() {
        return Err(Failure::usage("--ell and --base apply to --mode lemma3 only"));
    }
    let n = args.n.unwrap_or(2048);
    let ranges = if args.r.is_empty() { vec![16] } else { args.r.clone() };
    let mut master = SplitMix64::new(args.seed);
    let inst = generate(n, args.universe, master.next_u64(), None).map_err(anyhow::Error::from)?;
    let mut rows = Vec::new();
    for &r in &ranges {
        if r < 2 || !r.is_power_of_two() || r > 1 << 62 {
            return Err(Failure::usage(format!("R={r} must be a power of two in [2, 2^62]")));
        }
        let mut rng = master.fork();
        let hashes: Vec<HashFn> = (0..samples)
            .map(|_| HashFn::draw(&mut rng, DEFAULT_WORD_BITS, r.trailing_zeros()))
            .collect::<Result<_, _>>()
            .map_err(anyhow::Error::from)?;
        if samples == 0 {
            continue;
        }
        let total: u64 = hashes.par_iter().map(|h| count_candidates(&inst, h).1).sum();
        let mean = total as f64 / samples as f64;
        let bound = (n * n) as f64 / r as f64;
        rows.push(FpMeasureRow { n, r_total: r, ell: None, samples, measured_mean: mean, predicted_bound: bound, ratio: mean / bound });
    }
    Ok(rows)
}

fn lemma3_rows(args: &FpArgs, samples: usize) -> Result<Vec<FpMeasureRow>, Failure> {
    let n = args.n.unwrap_or(64);
    if n < 2 {
        return Err(Failure::usage("--n must be at least 2 to have a nonzero gap"));
    }
    let ells = if args.ell.is_empty() { vec![3] } else { args.ell.clone() };
    let mut master = SplitMix64::new(args.seed);
    let mut rows = Vec::new();
    for &ell in &ells {
        let ranges: Vec<u64> = if !args.r.is_empty() {
            args.r.clone()
        } else {
            let bases = if args.base.is_empty() { vec![8] } else { args.base.clone() };
            bases
                .iter()
                .map(|&b| b.checked_pow(ell as u32).ok_or_else(|| Failure::usage(format!("{b}^{ell} overflows"))))
                .collect::<Result<_, _>>()?
        };
        for r_total in ranges {
            // (instance seed, gap, hash seed) per sample, drawn up front.
            let draws: Vec<(u64, usize, u64)> =
                (0..samples).map(|_| (master.next_u64(), 1 + master.index(n - 1), master.next_u64())).collect();
            let results = draws
                .par_iter()
                .map(|&(inst_seed, k, hash_seed)| {
                    let inst = generate(n, args.universe, inst_seed, None).map_err(anyhow::Error::from)?;
                    lemma3_sample(&inst, k, r_total, ell, hash_seed).map_err(Failure::usage)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let Some(first) = results.first() else { continue };
            let mean = results.iter().map(|s| s.false_positives).sum::<u64>() as f64 / samples as f64;
            rows.push(FpMeasureRow {
                n,
                r_total,
                ell: Some(ell),
                samples,
                measured_mean: mean,
                predicted_bound: first.bound,
                ratio: mean / first.bound,
            });
        }
    }
    Ok(rows)
}

/// Measured false positives against their predicted bound, one row per
/// (ell, R). `samples = 0` gives the header alone.
pub fn cmd_fp_measure(args: &FpArgs, stdout: &mut dyn Write) -> Result<Vec<FpMeasureRow>, Failure> {
    let rows = match args.mode {
        FpMode::Lemma1 => lemma1_rows(args, args.samples.unwrap_or(30))?,
        FpMode::Lemma3 => lemma3_rows(args, args.samples.unwrap_or(1000))?,
    };
    let mut csv = format!("{FP_CSV_HEADER}\n");
    for row in &rows {
        csv.push_str(&row.csv());
        csv.push('\n');
    }
    emit(args.out.as_deref(), stdout, &csv)?;
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TradeoffRow {
    pub variant: String,
    pub n: usize,
    pub r: usize,
    pub x: usize,
    pub build_ms: f64,
    pub query_ms: f64,
    pub witnesses: u64,
}

impl TradeoffRow {
    pub fn csv(&self) -> String {
        format!("{},{},{},{},{:.3},{:.3},{}", self.variant, self.n, self.r, self.x, self.build_ms, self.query_ms, self.witnesses)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Build and query times per sweep point, median over `reps` runs. Points
/// run one after another so their timings do not compete for cores.
pub fn cmd_tradeoff(args: &TradeoffArgs, stdout: &mut dyn Write) -> Result<Vec<TradeoffRow>, Failure> {
    if args.x.is_empty() || args.r.is_empty() || args.variant.is_empty() {
        return Err(Failure::usage("sweep lists must be nonempty"));
    }
    if args.reps == 0 {
        return Err(Failure::usage("--reps must be at least 1"));
    }
    let inst = generate(args.n, args.universe, args.seed, None).map_err(anyhow::Error::from)?;
    let mut rows = Vec::new();
    for &variant in &args.variant {
        for &r in &args.r {
            for &x in &args.x {
                let cfg = ReductionConfig { buckets: r, leaf: x, variant, seed: args.seed, ..ReductionConfig::default() };
                let mut build = Vec::with_capacity(args.reps);
                let mut query = Vec::with_capacity(args.reps);
                let mut witnesses = None;
                for _ in 0..args.reps {
                    let t = timed_search(&inst, &cfg, args.limit).map_err(Failure::usage)?;
                    if witnesses.is_some_and(|w| w != t.witnesses) {
                        return Err(Failure::Invariant(format!("witness count changed between runs at {variant} R={r} X={x}")));
                    }
                    witnesses = Some(t.witnesses);
                    build.push(t.build_ms);
                    query.push(t.query_ms);
                }
                rows.push(TradeoffRow {
                    variant: variant.name().to_string(),
                    n: args.n,
                    r: cfg.effective_buckets(args.n),
                    x,
                    build_ms: median(build),
                    query_ms: median(query),
                    witnesses: witnesses.unwrap_or(0),
                });
            }
        }
    }
    let mut csv = format!("{TRADEOFF_CSV_HEADER}\n");
    for row in &rows {
        csv.push_str(&row.csv());
        csv.push('\n');
    }
    emit(args.out.as_deref(), stdout, &csv)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn csv_rows_format() {
        let row = FpMeasureRow { n: 8, r_total: 16, ell: None, samples: 2, measured_mean: 1.5, predicted_bound: 4.0, ratio: 0.375 };
        assert_eq!(row.csv(), "8,16,,2,1.500000,4.000000,0.375000");
        let row = TradeoffRow { variant: "v".into(), n: 4, r: 2, x: 16, build_ms: 1.0, query_ms: 0.25, witnesses: 7 };
        assert_eq!(row.csv(), "v,4,2,16,1.000,0.250,7");
    }
}
