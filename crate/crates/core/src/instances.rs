//! Problem instances, seeded generators, and the brute-force solvers every
//! reduction is checked against.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

/// Default bound on element magnitude: values live in `[-2^30, 2^30]`.
pub const UNIVERSE_BOUND: i64 = 1 << 30;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("instance must contain at least one element")]
    Empty,
    #[error("element {value} at index {index} exceeds universe bound {bound}")]
    OutOfUniverse { index: usize, value: i64, bound: i64 },
    #[error("universe bound {0} must lie in [1, 2^30]")]
    BadUniverse(i64),
    #[error("cannot plant {kind} into n={n}, universe={universe}")]
    CannotPlant { kind: PlantKind, n: usize, universe: i64 },
    #[error("instance file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Which identity a generator embeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantKind {
    #[serde(rename = "3sum")]
    ThreeSum,
    Conv,
    ConvDiff,
}

impl fmt::Display for PlantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlantKind::ThreeSum => "3sum",
            PlantKind::Conv => "conv",
            PlantKind::ConvDiff => "conv-diff",
        })
    }
}

impl std::str::FromStr for PlantKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "3sum" => Ok(PlantKind::ThreeSum),
            "conv" => Ok(PlantKind::Conv),
            "conv-diff" | "diff" => Ok(PlantKind::ConvDiff),
            other => Err(format!("unknown plant kind '{other}'")),
        }
    }
}

/// Provenance recorded alongside generated instances.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plant: Option<PlantKind>,
    /// Indices of the planted identity, in the form of its witness kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universe: Option<i64>,
}

fn check_universe(values: &[i64], bound: i64) -> Result<(), InstanceError> {
    for (index, &value) in values.iter().enumerate() {
        if value.unsigned_abs() > bound as u64 {
            return Err(InstanceError::OutOfUniverse { index, value, bound });
        }
    }
    Ok(())
}

/// Three-array 3SUM: is there `a + b + c = 0` with one element per array?
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreeSumInstance {
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    pub c: Vec<i64>,
    pub meta: InstanceMeta,
}

impl ThreeSumInstance {
    pub fn new(a: Vec<i64>, b: Vec<i64>, c: Vec<i64>) -> Result<Self, InstanceError> {
        if a.is_empty() || b.is_empty() || c.is_empty() {
            return Err(InstanceError::Empty);
        }
        for arr in [&a, &b, &c] {
            check_universe(arr, UNIVERSE_BOUND)?;
        }
        Ok(Self { a, b, c, meta: InstanceMeta::default() })
    }
}

/// An ordered integer sequence; the input to Convolution-3SUM and its
/// difference form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvInstance {
    values: Vec<i64>,
    pub meta: InstanceMeta,
}

impl ConvInstance {
    pub fn new(values: Vec<i64>) -> Result<Self, InstanceError> {
        Self::with_universe(values, UNIVERSE_BOUND)
    }

    pub fn with_universe(values: Vec<i64>, universe: i64) -> Result<Self, InstanceError> {
        if values.is_empty() {
            return Err(InstanceError::Empty);
        }
        if !(1..=UNIVERSE_BOUND).contains(&universe) {
            return Err(InstanceError::BadUniverse(universe));
        }
        check_universe(&values, universe)?;
        Ok(Self { values, meta: InstanceMeta::default() })
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> i64 {
        self.values[i]
    }

    /// `A[i] + A[j] = A[i+j]` with `i + j` in range.
    pub fn conv_holds(&self, i: usize, j: usize) -> bool {
        i + j < self.len() && self.values[i] + self.values[j] == self.values[i + j]
    }

    /// `A[k] - A[i] = A[k-i]` with `i <= k` in range.
    pub fn diff_holds(&self, i: usize, k: usize) -> bool {
        i <= k && k < self.len() && self.values[k] - self.values[i] == self.values[k - i]
    }
}

/// A claimed solution. Indices only; values are recovered from the instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolutionWitness {
    /// Indices into the A, B and C arrays.
    #[serde(rename = "3sum")]
    ThreeSum { a: usize, b: usize, c: usize },
    /// `A[i] + A[j] = A[i+j]`.
    Conv { i: usize, j: usize },
    /// `A[k] - A[i] = A[k-i]`.
    ConvDiff { i: usize, k: usize },
}

impl SolutionWitness {
    pub fn kind(&self) -> PlantKind {
        match self {
            SolutionWitness::ThreeSum { .. } => PlantKind::ThreeSum,
            SolutionWitness::Conv { .. } => PlantKind::Conv,
            SolutionWitness::ConvDiff { .. } => PlantKind::ConvDiff,
        }
    }

    /// Whether the indexed values satisfy the witness's defining identity.
    pub fn holds_for_conv(&self, inst: &ConvInstance) -> bool {
        match *self {
            SolutionWitness::Conv { i, j } => inst.conv_holds(i, j),
            SolutionWitness::ConvDiff { i, k } => inst.diff_holds(i, k),
            SolutionWitness::ThreeSum { .. } => false,
        }
    }

    pub fn holds_for_3sum(&self, inst: &ThreeSumInstance) -> bool {
        match *self {
            SolutionWitness::ThreeSum { a, b, c } => {
                a < inst.a.len()
                    && b < inst.b.len()
                    && c < inst.c.len()
                    && inst.a[a] + inst.b[b] + inst.c[c] == 0
            }
            _ => false,
        }
    }

    /// Re-express a conv or conv-diff witness in the other form.
    pub fn to_conv(self) -> Option<(usize, usize)> {
        match self {
            SolutionWitness::Conv { i, j } => Some((i, j)),
            SolutionWitness::ConvDiff { i, k } => Some((i, k - i)),
            SolutionWitness::ThreeSum { .. } => None,
        }
    }
}

/// Quadratic-time 3SUM. Scans targets `c` in index order, then `a`, and
/// takes the smallest `b` index completing the sum, so the result is the
/// smallest witness under the key `(c, a, b)`.
pub fn solve_3sum_naive(inst: &ThreeSumInstance) -> Option<SolutionWitness> {
    let mut first_b: HashMap<i64, usize> = HashMap::with_capacity(inst.b.len());
    for (idx, &v) in inst.b.iter().enumerate() {
        first_b.entry(v).or_insert(idx);
    }
    for (c, &vc) in inst.c.iter().enumerate() {
        for (a, &va) in inst.a.iter().enumerate() {
            if let Some(&b) = first_b.get(&(-vc - va)) {
                return Some(SolutionWitness::ThreeSum { a, b, c });
            }
        }
    }
    None
}

/// Lexicographically smallest `(i, j)` with `A[i] + A[j] = A[i+j]`.
pub fn solve_conv3sum_naive(inst: &ConvInstance) -> Option<SolutionWitness> {
    let a = inst.values();
    let n = a.len();
    for i in 0..n {
        for j in 0..n - i {
            if a[i] + a[j] == a[i + j] {
                return Some(SolutionWitness::Conv { i, j });
            }
        }
    }
    None
}

/// Lexicographically smallest `(i, k)`, `i <= k`, with `A[k] - A[i] = A[k-i]`.
pub fn solve_conv3sum_diff_naive(inst: &ConvInstance) -> Option<SolutionWitness> {
    let a = inst.values();
    let n = a.len();
    for i in 0..n {
        for k in i..n {
            if a[k] - a[i] == a[k - i] {
                return Some(SolutionWitness::ConvDiff { i, k });
            }
        }
    }
    None
}

/// All `(i, j)` pairs satisfying the convolution identity.
pub fn all_conv_solutions(inst: &ConvInstance) -> Vec<(usize, usize)> {
    let a = inst.values();
    let n = a.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n - i {
            if a[i] + a[j] == a[i + j] {
                out.push((i, j));
            }
        }
    }
    out
}

fn nonzero_in(rng: &mut SplitMix64, half: i64) -> i64 {
    loop {
        let v = rng.range_i64(-half, half);
        if v != 0 {
            return v;
        }
    }
}

/// Seeded Convolution-3SUM instance with elements drawn uniformly from
/// `[-universe, universe]`.
///
/// With `plant` set to `Conv` or `ConvDiff`, an identity
/// `A[i] + A[j] = A[i+j]` with `1 <= i <= j` is embedded and its indices are
/// recorded in `meta.planted` (as `(i, j)` for conv, `(i, i+j)` for diff).
/// Planting needs `n >= 3` and `universe >= 2` so both addends can be
/// nonzero.
pub fn generate(
    n: usize,
    universe: i64,
    seed: u64,
    plant: Option<PlantKind>,
) -> Result<ConvInstance, InstanceError> {
    if !(1..=UNIVERSE_BOUND).contains(&universe) {
        return Err(InstanceError::BadUniverse(universe));
    }
    if n == 0 {
        return Err(InstanceError::Empty);
    }
    if let Some(kind) = plant {
        if kind == PlantKind::ThreeSum || n < 3 || universe < 2 {
            return Err(InstanceError::CannotPlant { kind, n, universe });
        }
    }
    let mut rng = SplitMix64::new(seed);
    let mut values: Vec<i64> = (0..n).map(|_| rng.range_i64(-universe, universe)).collect();
    let mut planted = None;
    if let Some(kind) = plant {
        let i = 1 + rng.index((n - 1) / 2);
        let j = i + rng.index(n - 2 * i);
        let half = universe / 2;
        let vi = nonzero_in(&mut rng, half);
        let vj = if i == j { vi } else { nonzero_in(&mut rng, half) };
        values[i] = vi;
        values[j] = vj;
        values[i + j] = vi + vj;
        planted = Some(match kind {
            PlantKind::Conv => vec![i, j],
            _ => vec![i, i + j],
        });
    }
    let mut inst = ConvInstance::with_universe(values, universe)?;
    inst.meta = InstanceMeta { seed: Some(seed), plant, planted, universe: Some(universe) };
    Ok(inst)
}

/// Seeded three-array instance; with `plant` a zero-sum triple is embedded.
pub fn generate_3sum(
    n: usize,
    universe: i64,
    seed: u64,
    plant: bool,
) -> Result<ThreeSumInstance, InstanceError> {
    if !(2..=UNIVERSE_BOUND).contains(&universe) {
        return Err(InstanceError::BadUniverse(universe));
    }
    let mut rng = SplitMix64::new(seed);
    let draw = |rng: &mut SplitMix64| -> Vec<i64> {
        (0..n).map(|_| rng.range_i64(-universe, universe)).collect()
    };
    let a = draw(&mut rng);
    let b = draw(&mut rng);
    let mut c = draw(&mut rng);
    let mut planted = None;
    if plant {
        let (ia, ib, ic) = (rng.index(n), rng.index(n), rng.index(n));
        let half = universe / 2;
        let mut inst_a = a.clone();
        let mut inst_b = b.clone();
        inst_a[ia] = rng.range_i64(-half, half);
        inst_b[ib] = rng.range_i64(-half, half);
        c[ic] = -(inst_a[ia] + inst_b[ib]);
        planted = Some(vec![ia, ib, ic]);
        let mut inst = ThreeSumInstance::new(inst_a, inst_b, c)?;
        inst.meta = InstanceMeta { seed: Some(seed), plant: Some(PlantKind::ThreeSum), planted, universe: Some(universe) };
        return Ok(inst);
    }
    let mut inst = ThreeSumInstance::new(a, b, c)?;
    inst.meta = InstanceMeta { seed: Some(seed), plant: None, planted, universe: Some(universe) };
    Ok(inst)
}

/// On-disk instance: `{"kind": "conv"|"3sum", "arrays": [[...]], "meta": {...}}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub kind: String,
    pub arrays: Vec<Vec<i64>>,
    #[serde(default)]
    pub meta: InstanceMeta,
}

/// Either kind of instance, as read from a file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyInstance {
    Conv(ConvInstance),
    ThreeSum(ThreeSumInstance),
}

impl From<&ConvInstance> for InstanceFile {
    fn from(inst: &ConvInstance) -> Self {
        Self { kind: "conv".into(), arrays: vec![inst.values.clone()], meta: inst.meta.clone() }
    }
}

impl From<&ThreeSumInstance> for InstanceFile {
    fn from(inst: &ThreeSumInstance) -> Self {
        Self {
            kind: "3sum".into(),
            arrays: vec![inst.a.clone(), inst.b.clone(), inst.c.clone()],
            meta: inst.meta.clone(),
        }
    }
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<AnyInstance, InstanceError> {
        match (self.kind.as_str(), self.arrays.len()) {
            ("conv", 1) => {
                let universe = self.meta.universe.unwrap_or(UNIVERSE_BOUND);
                let mut inst = ConvInstance::with_universe(self.arrays.into_iter().next().unwrap(), universe)?;
                inst.meta = self.meta;
                Ok(AnyInstance::Conv(inst))
            }
            ("3sum", 3) => {
                let mut it = self.arrays.into_iter();
                let (a, b, c) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                let mut inst = ThreeSumInstance::new(a, b, c)?;
                inst.meta = self.meta;
                Ok(AnyInstance::ThreeSum(inst))
            }
            (kind, count) => Err(InstanceError::Format(format!(
                "kind '{kind}' with {count} arrays is not a valid instance"
            ))),
        }
    }

    pub fn read(path: &Path) -> Result<AnyInstance, InstanceError> {
        let text = std::fs::read_to_string(path)?;
        let file: InstanceFile = serde_json::from_str(&text)?;
        file.into_instance()
    }

    pub fn write(&self, path: &Path) -> Result<(), InstanceError> {
        std::fs::write(path, serde_json::to_string(self)? + "\n")?;
        Ok(())
    }
}
