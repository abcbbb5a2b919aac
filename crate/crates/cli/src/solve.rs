use std::fs;
use std::io::Write;

use anyhow::Context;
use clap::ValueEnum;
use fgl_core::histogram::{
    decision_pipeline, reporting_pipeline, reporting_pipeline_split, DecisionConfig, FpRow, Scheme,
};
use fgl_core::instances::{
    generate, generate_3sum, solve_conv3sum_diff_naive, solve_conv3sum_naive, AnyInstance, ConvInstance, InstanceFile,
    PlantKind, SolutionWitness,
};
use fgl_core::partial_ops::LeafBackend;
use fgl_core::witness_trees::{reduce_conv3sum, ReductionConfig, ReductionError, SearchVariant, TreeVariant};
use serde_json::{json, Value};

use crate::{emit, Failure, GenArgs, GenSpec, Pipeline, SolveArgs};

/// Default per-digit base of the reporting pipeline's hash range.
const DEFAULT_DIGIT_BASE: u64 = 8;

pub fn cmd_gen(args: &GenArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let GenSpec { n, universe, plant } = args.spec;
    let file = if plant == Some(PlantKind::ThreeSum) {
        InstanceFile::from(&generate_3sum(n, universe, args.seed, true).map_err(anyhow::Error::from)?)
    } else {
        InstanceFile::from(&generate(n, universe, args.seed, plant).map_err(anyhow::Error::from)?)
    };
    let text = serde_json::to_string(&file).context("serializing instance")? + "\n";
    emit(args.out.as_deref(), stdout, &text)
}

/// What `solve` printed, for callers that drive it in-process.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub json: Value,
    pub verdict: String,
    pub witness: Option<SolutionWitness>,
    /// Oracle agreement under `--check`.
    pub agrees: Option<bool>,
}

fn pipeline_name(p: Pipeline) -> String {
    p.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn load_instance(args: &SolveArgs) -> Result<ConvInstance, Failure> {
    let any = match (&args.input, &args.gen) {
        (Some(path), _) => InstanceFile::read(path).with_context(|| format!("reading {}", path.display()))?,
        (None, Some(spec)) => {
            if spec.plant == Some(PlantKind::ThreeSum) {
                return Err(Failure::usage("pipelines take Convolution-3SUM instances; plant=3sum is for gen only"));
            }
            AnyInstance::Conv(generate(spec.n, spec.universe, args.seed, spec.plant).map_err(anyhow::Error::from)?)
        }
        (None, None) => return Err(Failure::usage("one of --in or --gen is required")),
    };
    match any {
        AnyInstance::Conv(inst) => Ok(inst),
        AnyInstance::ThreeSum(_) => Err(Failure::usage("pipelines take Convolution-3SUM instances, got a 3sum file")),
    }
}

/// Rejects flags the chosen pipeline does not read.
fn reject_unused(args: &SolveArgs, flags: &[(&str, bool)]) -> Result<(), Failure> {
    match flags.iter().find(|(_, set)| *set) {
        Some((name, _)) => Err(Failure::usage(format!("--{name} does not apply to --pipeline {}", pipeline_name(args.pipeline)))),
        None => Ok(()),
    }
}

fn scheme_of(args: &SolveArgs, default: Scheme) -> Scheme {
    args.scheme.and_then(Scheme::from_id).unwrap_or(default)
}

fn require_ell(args: &SolveArgs) -> Result<usize, Failure> {
    args.ell.ok_or_else(|| Failure::usage(format!("--pipeline {} requires --ell", pipeline_name(args.pipeline))))
}

fn run_tree(args: &SolveArgs, inst: &ConvInstance) -> Result<(Option<SolutionWitness>, String, Value), Failure> {
    reject_unused(
        args,
        &[
            ("ell", args.ell.is_some()),
            ("scheme", args.scheme.is_some()),
            ("trials", args.trials.is_some()),
            ("alpha", args.alpha.is_some()),
            ("fp-out", args.fp_out.is_some()),
        ],
    )?;
    let variant = match (args.pipeline, args.variant) {
        (Pipeline::MatmulTree, None) => SearchVariant::SpecialQuad(LeafBackend::Matmul),
        (_, None) => SearchVariant::Tree(TreeVariant::OnesSplitBinary),
        (Pipeline::Lemma1Tree, Some(v @ SearchVariant::Tree(_))) => v,
        (Pipeline::MatmulTree, Some(v @ SearchVariant::SpecialQuad(_))) => v,
        (p, Some(v)) => {
            return Err(Failure::usage(format!("variant {v} does not belong to --pipeline {}", pipeline_name(p))));
        }
    };
    let buckets = usize::try_from(args.r.unwrap_or(8)).map_err(|_| Failure::usage("--R is too large"))?;
    let defaults = ReductionConfig::default();
    let cfg = ReductionConfig {
        buckets,
        leaf: args.x,
        variant,
        seed: args.seed,
        fp_budget_factor: args.fp_budget.unwrap_or(defaults.fp_budget_factor),
        max_rehash: args.max_rehash.unwrap_or(defaults.max_rehash),
    };
    let report = match reduce_conv3sum(inst, &cfg) {
        Ok(r) => r,
        Err(ReductionError::RehashExhausted(r)) => *r,
        Err(e @ ReductionError::Config(_)) => return Err(Failure::usage(e)),
    };
    let mut value = serde_json::to_value(&report).context("serializing report")?;
    value["R"] = json!(cfg.effective_buckets(inst.len()));
    value["X"] = json!(args.x);
    value["variant"] = json!(variant.name());
    Ok((report.witness, report.verdict.to_string(), value))
}

fn fp_totals(rows: &[FpRow]) -> Value {
    let sum = |f: fn(&FpRow) -> u64| rows.iter().map(f).sum::<u64>();
    json!({
        "queries": sum(|r| r.queries),
        "matches": sum(|r| r.matches),
        "candidates": sum(|r| r.candidates),
        "false_candidates": sum(|r| r.false_candidates),
        "encoding_errors": sum(|r| r.encoding_errors),
    })
}

fn run_report(args: &SolveArgs, inst: &ConvInstance) -> Result<(Option<SolutionWitness>, String, Value), Failure> {
    let ell = require_ell(args)?;
    reject_unused(
        args,
        &[
            ("trials", args.trials.is_some()),
            ("variant", args.variant.is_some()),
            ("fp-budget", args.fp_budget.is_some()),
            ("max-rehash", args.max_rehash.is_some()),
        ],
    )?;
    let scheme = scheme_of(args, Scheme::Plain);
    if ell < scheme.min_ell() {
        return Err(Failure::usage(format!("scheme {} needs --ell >= {}", scheme.id(), scheme.min_ell())));
    }
    let r_total = match args.r {
        Some(r) => r,
        None => {
            let digits = scheme.digits(ell) as u32;
            DEFAULT_DIGIT_BASE
                .checked_pow(digits)
                .filter(|r| r.trailing_zeros() < 63)
                .ok_or_else(|| Failure::usage(format!("default R = 8^{digits} is too large; pass --R")))?
        }
    };
    let report = match args.alpha {
        Some(alpha) => reporting_pipeline_split(inst, r_total, ell, scheme, alpha, args.seed),
        None => reporting_pipeline(inst, r_total, ell, scheme, args.seed),
    }
    .map_err(Failure::usage)?;
    if let Some(path) = &args.fp_out {
        let mut csv = String::from(FpRow::CSV_HEADER);
        csv.push('\n');
        for row in &report.rows {
            csv.push_str(&row.csv());
            csv.push('\n');
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    let verdict = if report.witness.is_some() { "found" } else { "none" };
    let value = json!({
        "R": report.r_total,
        "ell": ell,
        "scheme": scheme.id(),
        "alpha": args.alpha,
        "text_len": report.text_len,
        "totals": fp_totals(&report.rows),
    });
    Ok((report.witness, verdict.into(), value))
}

fn run_decide(args: &SolveArgs, inst: &ConvInstance) -> Result<(Option<SolutionWitness>, String, Value), Failure> {
    let ell = require_ell(args)?;
    reject_unused(
        args,
        &[
            ("R", args.r.is_some()),
            ("alpha", args.alpha.is_some()),
            ("variant", args.variant.is_some()),
            ("fp-out", args.fp_out.is_some()),
            ("fp-budget", args.fp_budget.is_some()),
            ("max-rehash", args.max_rehash.is_some()),
        ],
    )?;
    let mut cfg = DecisionConfig::new(ell, args.seed);
    cfg.trials = args.trials;
    cfg.scheme = scheme_of(args, cfg.scheme);
    let report = decision_pipeline(inst, &cfg).map_err(Failure::usage)?;
    let verdict = if report.witness.is_some() { "found" } else { "none" };
    let value = json!({
        "R": report.r_total,
        "ell": ell,
        "scheme": cfg.scheme.id(),
        "trials": report.trials,
        "surviving": report.surviving,
        "verified_gaps": report.verified_gaps,
    });
    Ok((report.witness, verdict.into(), value))
}

pub fn cmd_solve(args: &SolveArgs, stdout: &mut dyn Write) -> Result<SolveOutcome, Failure> {
    if args.x == 0 {
        return Err(Failure::usage("--X must be positive"));
    }
    let inst = load_instance(args)?;
    let (witness, verdict, report) = match args.pipeline {
        Pipeline::Lemma1Tree | Pipeline::MatmulTree => run_tree(args, &inst)?,
        Pipeline::HistogramReport => run_report(args, &inst)?,
        Pipeline::HistogramDecide => run_decide(args, &inst)?,
    };
    let mut json = json!({
        "pipeline": pipeline_name(args.pipeline),
        "n": inst.len(),
        "seed": args.seed,
        "verdict": verdict,
        "witness": witness,
        "report": report,
    });
    let mut agrees = None;
    if args.check {
        // Tree pipelines answer the sum form, histogram pipelines the
        // difference form; both forms are solvable together.
        let oracle = match args.pipeline {
            Pipeline::Lemma1Tree | Pipeline::MatmulTree => solve_conv3sum_naive(&inst),
            Pipeline::HistogramReport | Pipeline::HistogramDecide => solve_conv3sum_diff_naive(&inst),
        };
        let valid = witness.is_none_or(|w| w.holds_for_conv(&inst));
        let ok = valid && matches!((verdict.as_str(), oracle.is_some()), ("found", true) | ("none", false));
        json["check"] = json!({
            "oracle_verdict": if oracle.is_some() { "found" } else { "none" },
            "oracle_witness": oracle,
            "witness_valid": valid,
            "agree": ok,
        });
        agrees = Some(ok);
    }
    let text = serde_json::to_string_pretty(&json).context("serializing verdict")? + "\n";
    emit(args.out.as_deref(), stdout, &text)?;
    if agrees == Some(false) {
        return Err(Failure::Invariant(format!(
            "pipeline {} answered '{verdict}' but the oracle disagrees",
            pipeline_name(args.pipeline)
        )));
    }
    Ok(SolveOutcome { json, verdict, witness, agrees })
}
