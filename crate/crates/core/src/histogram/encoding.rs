// Layout of one block (all schemes): the complement partial encoding, then
// the regular one. A partial encoding writes digit t of the value in unary
// with symbol t, lowest digit first. Scheme 2 pads each partial on the left
// with the padding symbol up to a fixed length; scheme 3 does the same and
// also puts a separator before every partial and one after the last.
//
// The substring S_{i,j} for blocks i < j runs from the split of block i to
// the split of block j. In scheme 3 the split is the separator in front of
// the regular partial, and S_{i,j} also takes the separator at split j.
//
// Count of digit symbol t in S_{i,j}, with k = j - i:
//   p_t(h_i) + (k-1) r + (r - p_t(h_j))
// If h_j - h_i = h' (mod R), subtracting h_i from h_j digit by digit with
// borrows b_t gives p_t(h_j) - p_t(h_i) = p_t(h') + b_{t-1} - r b_t, so the
// count is (r - p_t(h')) + (k-1) r + r b_t - b_{t-1}: the carry formula with
// u = b. The top borrow is 1 exactly when h_j < h_i, which the forced-zero
// carry set misses; query families therefore also include that variant.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{HistError, ParikhVector};
use crate::hashing::HashFn;
use crate::instances::ConvInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Unary digits only, alphabet of `ell` digit symbols.
    Plain = 1,
    /// `ell - 1` digit symbols plus a padding symbol.
    Padded = 2,
    /// `ell - 2` digit symbols, a padding symbol and a separator.
    Separated = 3,
}

impl Scheme {
    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(Scheme::Plain),
            2 => Some(Scheme::Padded),
            3 => Some(Scheme::Separated),
            _ => None,
        }
    }

    /// Smallest alphabet the scheme supports.
    pub fn min_ell(self) -> usize {
        match self {
            Scheme::Plain => 2,
            Scheme::Padded => 3,
            Scheme::Separated => 4,
        }
    }

    /// Number of base-`r` digits.
    pub fn digits(self, ell: usize) -> usize {
        ell + 1 - self.id() as usize
    }
}

/// Digit base and digit count for `R` under a scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Radix {
    pub scheme: Scheme,
    pub ell: usize,
    pub digits: usize,
    pub log_r: u32,
    pub r: u64,
    pub r_total: u64,
}

impl Radix {
    pub fn new(r_total: u64, ell: usize, scheme: Scheme) -> Result<Self, HistError> {
        if ell < scheme.min_ell() || ell > super::MAX_ALPHABET - 1 {
            return Err(HistError::AlphabetTooSmall { scheme: scheme.id(), min: scheme.min_ell(), ell });
        }
        let digits = scheme.digits(ell);
        let bits = r_total.trailing_zeros();
        if !r_total.is_power_of_two() || bits == 0 || !bits.is_multiple_of(digits as u32) || bits > 62 {
            return Err(HistError::NotPerfectPower { r_total, d: digits as u32 });
        }
        let log_r = bits / digits as u32;
        Ok(Self { scheme, ell, digits, log_r, r: 1 << log_r, r_total })
    }

    pub fn digit(&self, h: u64, t: usize) -> u64 {
        (h >> (self.log_r as usize * t)) & (self.r - 1)
    }

    /// Length every padded partial is brought up to (schemes 2 and 3).
    fn partial_len(&self) -> u64 {
        match self.scheme {
            Scheme::Plain => 0,
            Scheme::Padded => self.ell as u64 * self.r,
            Scheme::Separated => (self.ell as u64 - 1) * self.r,
        }
    }

    fn pad_symbol(&self) -> u8 {
        self.digits as u8
    }

    fn sep_symbol(&self) -> u8 {
        self.ell as u8 - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockBounds {
    pub start: usize,
    /// Start of the candidate window for this block (see module comment).
    pub split: usize,
    pub end: usize,
}

#[derive(Clone, Debug)]
pub struct EncodedInstance {
    pub(crate) radix: Radix,
    hashes: Vec<u64>,
    text: Vec<u8>,
    blocks: Vec<BlockBounds>,
}

/// On-disk form of an encoded instance.
#[derive(Clone, Debug, Serialize)]
pub struct EncodedDump {
    pub scheme: u8,
    #[serde(rename = "R")]
    pub r_total: u64,
    pub ell: usize,
    #[serde(rename = "S")]
    pub s: String,
    /// Per block: `[start, split, end)`.
    pub boundaries: Vec<[usize; 3]>,
}

impl EncodedInstance {
    pub fn scheme(&self) -> Scheme {
        self.radix.scheme
    }

    pub fn ell(&self) -> usize {
        self.radix.ell
    }

    pub fn r_total(&self) -> u64 {
        self.radix.r_total
    }

    /// Digit base `r` with `r^d = R`.
    pub fn base(&self) -> u64 {
        self.radix.r
    }

    pub fn hashes(&self) -> &[u64] {
        &self.hashes
    }

    pub fn text(&self) -> &[u8] {
        &self.text
    }

    pub fn len(&self) -> usize {
        self.text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn blocks(&self) -> &[BlockBounds] {
        &self.blocks
    }

    /// Block starts plus the end of the text: every position a cut may use.
    pub fn block_boundaries(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.blocks.iter().map(|b| b.start).collect();
        b.push(self.text.len());
        b
    }

    /// Start of `S_{i,j}`.
    pub fn window_start(&self, i: usize) -> usize {
        self.blocks[i].split
    }

    /// End (exclusive) of `S_{i,j}`.
    pub fn window_end(&self, j: usize) -> usize {
        self.blocks[j].split + usize::from(self.radix.scheme == Scheme::Separated)
    }

    pub fn dump(&self) -> EncodedDump {
        EncodedDump {
            scheme: self.radix.scheme.id(),
            r_total: self.radix.r_total,
            ell: self.radix.ell,
            s: super::symbols_to_string(&self.text),
            boundaries: self.blocks.iter().map(|b| [b.start, b.split, b.end]).collect(),
        }
    }
}

fn push_partial(out: &mut Vec<u8>, radix: &Radix, digits: impl Iterator<Item = u64>) {
    let body: Vec<u8> = digits.enumerate().flat_map(|(t, c)| std::iter::repeat_n(t as u8, c as usize)).collect();
    if radix.scheme == Scheme::Separated {
        out.push(radix.sep_symbol());
    }
    if radix.scheme != Scheme::Plain {
        let pad = radix.partial_len() - body.len() as u64;
        out.extend(std::iter::repeat_n(radix.pad_symbol(), pad as usize));
    }
    out.extend(body);
}

/// Encoding of precomputed hash values, each below `R`.
pub fn encode_hashes(hashes: &[u64], r_total: u64, ell: usize, scheme: Scheme) -> Result<EncodedInstance, HistError> {
    let radix = Radix::new(r_total, ell, scheme)?;
    if let Some(&h) = hashes.iter().find(|&&h| h >= r_total) {
        return Err(HistError::BadParameter(format!("hash value {h} not below R = {r_total}")));
    }
    let mut text = Vec::new();
    let mut blocks = Vec::with_capacity(hashes.len());
    for &h in hashes {
        let start = text.len();
        push_partial(&mut text, &radix, (0..radix.digits).map(|t| radix.r - radix.digit(h, t)));
        let split = text.len();
        push_partial(&mut text, &radix, (0..radix.digits).map(|t| radix.digit(h, t)));
        blocks.push(BlockBounds { start, split, end: text.len() });
    }
    if scheme == Scheme::Separated {
        text.push(radix.sep_symbol());
    }
    Ok(EncodedInstance { radix, hashes: hashes.to_vec(), text, blocks })
}

pub fn encode(inst: &ConvInstance, h: &HashFn, r_total: u64, ell: usize, scheme: Scheme) -> Result<EncodedInstance, HistError> {
    if h.range() as u64 != r_total {
        return Err(HistError::BadParameter(format!("hash range {} differs from R = {r_total}", h.range())));
    }
    let hashes = h
        .eval_all(inst.values())
        .map_err(|e| HistError::BadParameter(e.to_string()))?
        .into_iter()
        .map(|x| x as u64)
        .collect::<Vec<_>>();
    encode_hashes(&hashes, r_total, ell, scheme)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CarrySet {
    pub k: usize,
    pub base: ParikhVector,
    pub members: Vec<ParikhVector>,
}

/// Vector for gap `k`, target residue `target`, carries `u` (bit `t` is the
/// carry out of digit `t`; the top bit is the wrap).
fn member(radix: &Radix, k: usize, target: u64, u: u64) -> ParikhVector {
    let (r, d) = (radix.r, radix.digits);
    let bit = |t: usize| (u >> t) & 1;
    let mut counts: Vec<u64> = (0..d)
        .map(|t| {
            let borrow_in = if t == 0 { 0 } else { bit(t - 1) };
            (r - radix.digit(target, t)) + (k as u64 - 1) * r + r * bit(t) - borrow_in
        })
        .collect();
    let digit_total: u64 = counts.iter().sum();
    // Remaining symbols: whatever length is left after the digit counts.
    match radix.scheme {
        Scheme::Plain => {}
        Scheme::Padded => counts.push(2 * radix.partial_len() * k as u64 - digit_total),
        Scheme::Separated => {
            counts.push(2 * radix.partial_len() * k as u64 - digit_total);
            counts.push(2 * k as u64 + 1);
        }
    }
    ParikhVector(counts)
}

/// The carry set of gap `k` for hash value `h_of_xk`: carries over every
/// digit but the top one.
pub fn carry_set(k: usize, h_of_xk: u64, r_total: u64, ell: usize, scheme: Scheme) -> Result<CarrySet, HistError> {
    let radix = Radix::new(r_total, ell, scheme)?;
    check_family_args(&radix, k, h_of_xk)?;
    let half = 1u64 << (radix.digits - 1);
    let members = (0..half).map(|u| member(&radix, k, h_of_xk, u)).collect();
    Ok(CarrySet { k, base: member(&radix, k, h_of_xk, 0), members })
}

fn check_family_args(radix: &Radix, k: usize, h: u64) -> Result<(), HistError> {
    if k == 0 {
        return Err(HistError::BadParameter("carry sets need k >= 1".into()));
    }
    if h >= radix.r_total {
        return Err(HistError::BadParameter(format!("hash value {h} not below R = {}", radix.r_total)));
    }
    Ok(())
}

/// Every vector `S_{i,i+k}` can have when `h(x_{i+k}) - h(x_i) = h(x_k) - d`
/// (mod R) for some `d` in `offsets`: carry sets of each shifted target,
/// with and without a top-digit wrap. Sorted, duplicate-free.
pub fn query_family(
    k: usize,
    h_of_xk: u64,
    r_total: u64,
    ell: usize,
    scheme: Scheme,
    offsets: &BTreeSet<usize>,
) -> Result<Vec<ParikhVector>, HistError> {
    let radix = Radix::new(r_total, ell, scheme)?;
    check_family_args(&radix, k, h_of_xk)?;
    Ok(family(&radix, k, h_of_xk, offsets))
}

pub(crate) fn family(radix: &Radix, k: usize, h_of_xk: u64, offsets: &BTreeSet<usize>) -> Vec<ParikhVector> {
    let mut out = BTreeSet::new();
    for &d in offsets {
        let target = (h_of_xk + radix.r_total - d as u64 % radix.r_total) % radix.r_total;
        for u in 0..1u64 << radix.digits {
            out.insert(member(radix, k, target, u));
        }
    }
    out.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchClass {
    Candidate { i: usize, j: usize },
    EncodingError,
}

/// A match of length `len` at `start`, found for gap `k`, is a candidate
/// exactly when it is the window `S_{i,i+k}` for some block `i`.
pub fn classify_match(enc: &EncodedInstance, start: usize, len: usize, k: usize) -> MatchClass {
    let Ok(i) = enc.blocks.binary_search_by_key(&start, |b| b.split) else {
        return MatchClass::EncodingError;
    };
    let j = i + k;
    if k >= 1 && j < enc.blocks.len() && start + len == enc.window_end(j) {
        MatchClass::Candidate { i, j }
    } else {
        MatchClass::EncodingError
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::{parikh_symbols, symbols_to_string};
    use crate::rng::SplitMix64;

    fn window(enc: &EncodedInstance, i: usize, j: usize) -> ParikhVector {
        parikh_symbols(&enc.text()[enc.window_start(i)..enc.window_end(j)], enc.ell()).unwrap()
    }

    #[test]
    fn block_example() {
        let enc = encode_hashes(&[1], 4, 2, Scheme::Plain).unwrap();
        assert_eq!(symbols_to_string(enc.text()), "abba");
        assert_eq!(enc.blocks()[0], BlockBounds { start: 0, split: 3, end: 4 });
        let zero = encode_hashes(&[0], 64, 3, Scheme::Plain).unwrap();
        assert_eq!(symbols_to_string(zero.text()), "aaaabbbbcccc");
        assert_eq!(zero.blocks()[0].split, 12);
    }

    #[test]
    fn parameter_checks() {
        assert!(matches!(encode_hashes(&[0], 8, 2, Scheme::Plain), Err(HistError::NotPerfectPower { .. })));
        assert!(matches!(encode_hashes(&[0], 1, 2, Scheme::Plain), Err(HistError::NotPerfectPower { .. })));
        assert!(matches!(encode_hashes(&[0], 16, 2, Scheme::Padded), Err(HistError::AlphabetTooSmall { .. })));
        assert!(matches!(encode_hashes(&[0], 16, 3, Scheme::Separated), Err(HistError::AlphabetTooSmall { .. })));
        assert!(encode_hashes(&[16], 16, 2, Scheme::Plain).is_err());
        assert!(encode_hashes(&[5], 16, 4, Scheme::Separated).is_ok());
    }

    #[test]
    fn block_laws_all_schemes() {
        let mut rng = SplitMix64::new(61);
        for _ in 0..60 {
            let scheme = [Scheme::Plain, Scheme::Padded, Scheme::Separated][rng.index(3)];
            let ell = scheme.min_ell() + rng.index(3);
            let d = scheme.digits(ell) as u32;
            let log_r = 1 + rng.index(3) as u32;
            let r_total = 1u64 << (log_r * d);
            let n = 1 + rng.index(20);
            let hashes: Vec<u64> = (0..n).map(|_| rng.below(r_total)).collect();
            let enc = encode_hashes(&hashes, r_total, ell, scheme).unwrap();
            let r = 1u64 << log_r;
            for b in enc.blocks() {
                let counts = parikh_symbols(&enc.text()[b.start..b.end], ell).unwrap();
                for t in 0..d as usize {
                    assert_eq!(counts.0[t], r, "digit symbol {t} in {scheme:?}");
                }
                let partial = match scheme {
                    Scheme::Plain => None,
                    Scheme::Padded => Some(ell as u64 * r),
                    Scheme::Separated => Some((ell as u64 - 1) * r + 1),
                };
                if let Some(p) = partial {
                    assert_eq!((b.split - b.start) as u64, p);
                    assert_eq!((b.end - b.split) as u64, p);
                }
            }
            match scheme {
                Scheme::Plain => assert_eq!(enc.len() as u64, n as u64 * ell as u64 * r),
                Scheme::Padded => assert_eq!(enc.len() as u64, 2 * n as u64 * ell as u64 * r),
                Scheme::Separated => {
                    let step = (ell - 1) * r as usize + 1;
                    let seps: Vec<usize> =
                        (0..enc.len()).filter(|&p| enc.text()[p] == ell as u8 - 1).collect();
                    assert_eq!(seps, (0..=2 * n).map(|j| j * step).collect::<Vec<_>>());
                }
            }
        }
    }

    #[test]
    fn carry_set_example() {
        let cs = carry_set(1, 1, 4, 2, Scheme::Plain).unwrap();
        assert_eq!(cs.base, ParikhVector(vec![1, 2]));
        // r = R^{1/2} = 2 multiplies the carry.
        assert_eq!(cs.members, vec![ParikhVector(vec![1, 2]), ParikhVector(vec![3, 1])]);
        assert!(carry_set(0, 1, 4, 2, Scheme::Plain).is_err());
    }

    #[test]
    fn carry_set_sizes_and_totals() {
        let mut rng = SplitMix64::new(62);
        for scheme in [Scheme::Plain, Scheme::Padded, Scheme::Separated] {
            for ell in scheme.min_ell()..scheme.min_ell() + 3 {
                let d = scheme.digits(ell);
                let log_r = 1 + rng.index(3);
                let r = 1u64 << log_r;
                let r_total = 1u64 << (log_r * d);
                let k = 1 + rng.index(10);
                let h = rng.below(r_total);
                let cs = carry_set(k, h, r_total, ell, scheme).unwrap();
                assert_eq!(cs.members.len(), 1 << (d - 1));
                assert_eq!(cs.members.iter().collect::<BTreeSet<_>>().len(), cs.members.len());
                for (u, m) in cs.members.iter().enumerate() {
                    let ones = (u as u64).count_ones() as u64;
                    // Each carry adds r to its digit and takes one from the next.
                    let digits: u64 = m.0[..d].iter().sum();
                    assert_eq!(digits, cs.base.0[..d].iter().sum::<u64>() + ones * (r - 1));
                    match scheme {
                        Scheme::Plain => {}
                        Scheme::Padded => assert_eq!(m.total(), 2 * k as u64 * ell as u64 * r),
                        Scheme::Separated => {
                            assert_eq!(m.total(), 2 * k as u64 * ((ell as u64 - 1) * r + 1) + 1)
                        }
                    }
                }
            }
        }
    }

    /// Every window whose hash difference hits a shifted target lies in the
    /// query family, checked over all pairs.
    #[test]
    fn windows_land_in_query_family() {
        let mut rng = SplitMix64::new(63);
        for trial in 0..24 {
            let scheme = [Scheme::Plain, Scheme::Padded, Scheme::Separated][trial % 3];
            let ell = scheme.min_ell() + rng.index(2);
            let d = scheme.digits(ell);
            let log_r = 1 + rng.index(2);
            let r_total = 1u64 << (log_r * d);
            let n = 2 + rng.index(63);
            let hashes: Vec<u64> = (0..n).map(|_| rng.below(r_total)).collect();
            let enc = encode_hashes(&hashes, r_total, ell, scheme).unwrap();
            let offsets = BTreeSet::from([0, r_total as usize - 1]);
            let mut families = Vec::new();
            for k in 1..n {
                families.push(query_family(k, hashes[k], r_total, ell, scheme, &offsets).unwrap());
            }
            for i in 0..n {
                for j in i + 1..n {
                    let k = j - i;
                    let diff = (hashes[j] + r_total - hashes[i]) % r_total;
                    let hits = offsets.iter().any(|&o| (hashes[k] + r_total - o as u64) % r_total == diff);
                    if hits {
                        assert!(families[k - 1].contains(&window(&enc, i, j)), "{scheme:?} i={i} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn forced_zero_set_covers_non_wrapping_pairs() {
        let mut rng = SplitMix64::new(64);
        let r_total = 1 << 9;
        let hashes: Vec<u64> = (0..40).map(|_| rng.below(r_total)).collect();
        let enc = encode_hashes(&hashes, r_total, 3, Scheme::Plain).unwrap();
        for i in 0..40 {
            for j in i + 1..40 {
                if hashes[j] >= hashes[i] {
                    let cs = carry_set(j - i, hashes[j] - hashes[i], r_total, 3, Scheme::Plain).unwrap();
                    assert!(cs.members.contains(&window(&enc, i, j)));
                }
            }
        }
    }

    #[test]
    fn classification() {
        let enc = encode_hashes(&[3, 7, 1, 0], 16, 2, Scheme::Plain).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                let (s, e) = (enc.window_start(i), enc.window_end(j));
                assert_eq!(classify_match(&enc, s, e - s, j - i), MatchClass::Candidate { i, j });
                assert_eq!(classify_match(&enc, s, e - s + 1, j - i), MatchClass::EncodingError);
            }
        }
        assert_eq!(classify_match(&enc, 1, 8, 1), MatchClass::EncodingError);
        let sep = encode_hashes(&[3, 7, 1], 16, 4, Scheme::Separated).unwrap();
        let (s, e) = (sep.window_start(0), sep.window_end(2));
        assert_eq!(sep.text()[s], 3);
        assert_eq!(sep.text()[e - 1], 3);
        assert_eq!(classify_match(&sep, s, e - s, 2), MatchClass::Candidate { i: 0, j: 2 });
    }

    #[test]
    fn dump_shape() {
        let enc = encode_hashes(&[1], 4, 2, Scheme::Plain).unwrap();
        let json = serde_json::to_value(enc.dump()).unwrap();
        assert_eq!(json, serde_json::json!({"scheme": 1, "R": 4, "ell": 2, "S": "abba", "boundaries": [[0, 3, 4]]}));
    }
}
