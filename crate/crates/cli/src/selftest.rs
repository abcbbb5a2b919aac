use std::io::Write;

use fgl_core::convolution::{convolve_fast, convolve_naive, witnesses_at, DenseVector, SparseBitVector};
use fgl_core::histogram::{
    build_split_structure, decision_pipeline, encode_hashes, hist_build_symbols, hist_report, parikh, query_family,
    reporting_pipeline, split_query, DecisionConfig, IndexMode, Scheme,
};
use fgl_core::instances::{generate, solve_conv3sum_diff_naive, solve_conv3sum_naive, PlantKind};
use fgl_core::partial_ops::{build_shift_matrices, build_v_blocks, leaf_conv_via_matmul};
use fgl_core::witness_trees::{
    build_length_tree, build_ones_tree, enumerate_witnesses, reduce_conv3sum, ReductionConfig, SearchVariant,
    TreeVariant,
};
use fgl_core::SplitMix64;

use crate::{emit, Failure, SelftestArgs};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckResult {
    pub name: &'static str,
    pub error: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.error.is_none()
    }

    pub fn line(&self) -> String {
        match &self.error {
            None => format!("PASS {}", self.name),
            Some(e) => format!("FAIL {}: {e}", self.name),
        }
    }
}

type Check = fn(&mut SplitMix64, usize) -> Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn conv_exact(rng: &mut SplitMix64, count: usize) -> Result<(), String> {
    for _ in 0..count {
        let (lu, lv) = (1 + rng.index(256), 1 + rng.index(256));
        let mut vec = |len: usize| DenseVector::new((0..len).map(|_| rng.below(1 << 20)).collect());
        let (u, v) = (vec(lu), vec(lv));
        let fast = convolve_fast(&u, &v).map_err(|e| e.to_string())?;
        let naive = convolve_naive(&u, &v).map_err(|e| e.to_string())?;
        ensure(fast == naive, || format!("lengths {} and {}", u.len(), v.len()))?;
    }
    Ok(())
}

fn sparse(rng: &mut SplitMix64, n: usize, ones: usize) -> SparseBitVector {
    SparseBitVector::new(n, rng.sample_sorted(n, ones)).expect("sorted in range")
}

fn tree_enumeration(rng: &mut SplitMix64, count: usize) -> Result<(), String> {
    let (n, r, x) = (128, 4, 16);
    for _ in 0..count {
        let (ou, ov) = (1 + rng.index(n / r), 1 + rng.index(n / r));
        let u = sparse(rng, n, ou);
        let v = sparse(rng, n, ov);
        for variant in TreeVariant::ALL {
            let tree = match variant {
                TreeVariant::OnesSplitBinary => build_ones_tree(&u, &v, x, r),
                t => build_length_tree(&u, &v, x, t),
            }
            .map_err(|e| e.to_string())?;
            for k in 0..2 * n - 1 {
                let got = enumerate_witnesses(&tree, k, None).map_err(|e| e.to_string())?;
                let want = witnesses_at(&u, &v, k).map_err(|e| e.to_string())?;
                ensure(got == want, || format!("{variant} at k={k}"))?;
            }
        }
    }
    Ok(())
}

fn matmul_leaf(rng: &mut SplitMix64, count: usize) -> Result<(), String> {
    for _ in 0..count {
        let x = [4, 8, 16][rng.index(3)];
        let mut bits = |len: usize| (0..len).map(|_| rng.coin(1, 3)).collect::<Vec<bool>>();
        let u = bits(x);
        let cols: Vec<Vec<bool>> = (0..x).map(|_| bits(x)).collect();
        let pair = build_shift_matrices::<i64>(&u, x).map_err(|e| e.to_string())?;
        let blocks = build_v_blocks::<i64>(&cols, x).map_err(|e| e.to_string())?;
        let out = leaf_conv_via_matmul(&pair, &blocks.blocks()[0]).map_err(|e| e.to_string())?;
        let dense = |b: &[bool]| DenseVector::new(b.iter().map(|&t| u64::from(t)).collect());
        for (c, col) in cols.iter().enumerate() {
            let want = convolve_naive(&dense(&u), &dense(col)).map_err(|e| e.to_string())?;
            let got: Vec<u64> = out[c].iter().map(|&t| t as u64).collect();
            ensure(got == want.entries, || format!("X={x} column {c}"))?;
        }
    }
    Ok(())
}

fn reductions(rng: &mut SplitMix64, count: usize) -> Result<(), String> {
    for t in 0..count {
        let n = 8 + rng.index(57);
        let plant = (t % 2 == 0).then_some(PlantKind::Conv);
        let inst = generate(n, 1 << 30, rng.next_u64(), plant).map_err(|e| e.to_string())?;
        let oracle = solve_conv3sum_naive(&inst);
        for variant in SearchVariant::ALL {
            let cfg = ReductionConfig { buckets: 8, leaf: 16, variant, seed: rng.next_u64(), ..ReductionConfig::default() };
            let rep = reduce_conv3sum(&inst, &cfg).map_err(|e| e.to_string())?;
            ensure(rep.witness.is_some() == oracle.is_some(), || format!("{variant} n={n}: verdict {}", rep.verdict))?;
            ensure(rep.witness.is_none_or(|w| w.holds_for_conv(&inst)), || format!("{variant}: unverified witness"))?;
        }
    }
    Ok(())
}

fn histogram_pipelines(rng: &mut SplitMix64, count: usize) -> Result<(), String> {
    for t in 0..count {
        let n = 8 + rng.index(33);
        let plant = (t % 2 == 0).then_some(PlantKind::ConvDiff);
        let inst = generate(n, 1 << 30, rng.next_u64(), plant).map_err(|e| e.to_string())?;
        let oracle = solve_conv3sum_diff_naive(&inst).is_some();
        let rep = reporting_pipeline(&inst, 1 << 9, 3, Scheme::Plain, rng.next_u64()).map_err(|e| e.to_string())?;
        ensure(rep.witness.is_some() == oracle, || format!("reporting n={n}"))?;
        ensure(rep.witness.is_none_or(|w| w.holds_for_conv(&inst)), || "reporting: unverified witness".into())?;
        let dec = decision_pipeline(&inst, &DecisionConfig::new(3, rng.next_u64())).map_err(|e| e.to_string())?;
        ensure(dec.witness.is_some() == oracle, || format!("decision n={n}"))?;
        ensure(dec.witness.is_none_or(|w| w.holds_for_conv(&inst)), || "decision: unverified witness".into())?;
    }
    Ok(())
}

fn split_transparency(rng: &mut SplitMix64, count: usize) -> Result<(), String> {
    let (ell, r_total) = (2, 16u64);
    for t in 0..count {
        let n = 8 + rng.index(17);
        let hashes: Vec<u64> = (0..n).map(|_| rng.below(r_total)).collect();
        let enc = encode_hashes(&hashes, r_total, ell, Scheme::Plain).map_err(|e| e.to_string())?;
        let idx = hist_build_symbols(enc.text().to_vec(), ell, IndexMode::Prefix).map_err(|e| e.to_string())?;
        let alpha = [0.0, 0.5, 1.0][t % 3];
        let ss = build_split_structure(&enc, alpha, None).map_err(|e| e.to_string())?;
        for k in 1..n {
            let family = query_family(k, hashes[k], r_total, ell, Scheme::Plain, &[0, r_total as usize - 1].into())
                .map_err(|e| e.to_string())?;
            for v in family {
                let split = split_query(&ss, &v).map_err(|e| e.to_string())?;
                let direct = hist_report(&idx, &v).map_err(|e| e.to_string())?;
                ensure(split == direct, || format!("alpha={alpha} k={k}"))?;
            }
        }
    }
    Ok(())
}

fn parikh_example(_: &mut SplitMix64, _: usize) -> Result<(), String> {
    let got = parikh("abbbacab", 3).map_err(|e| e.to_string())?;
    ensure(got.counts() == [3, 4, 1], || format!("got {:?}", got.counts()))
}

const CHECKS: [(&str, Check); 7] = [
    ("convolution-exact", conv_exact),
    ("tree-enumeration", tree_enumeration),
    ("matmul-leaf", matmul_leaf),
    ("reductions-vs-oracle", reductions),
    ("histogram-pipelines-vs-oracle", histogram_pipelines),
    ("split-transparency", split_transparency),
    ("parikh-example", parikh_example),
];

/// Runs every check with its own seeded stream; exit 2 when any fails.
pub fn cmd_selftest(args: &SelftestArgs, stdout: &mut dyn Write) -> Result<Vec<CheckResult>, Failure> {
    let mut master = SplitMix64::new(args.seed);
    let results: Vec<CheckResult> = CHECKS
        .iter()
        .map(|&(name, check)| {
            let mut rng = master.fork();
            CheckResult { name, error: check(&mut rng, args.instances).err() }
        })
        .collect();
    let mut text = String::new();
    for r in &results {
        text.push_str(&r.line());
        text.push('\n');
    }
    emit(args.out.as_deref(), stdout, &text)?;
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(results)
    } else {
        Err(Failure::Invariant(format!("selftest checks failed: {}", failed.join(", "))))
    }
}
