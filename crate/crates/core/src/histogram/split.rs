// Level i cuts S into pieces of about N/2^i twice: once at multiples of
// N/2^i and once shifted by half a piece (dropping the two ragged ends).
// All cuts are moved down to block boundaries. Inside a piece of length P
// the splitting symbol is inserted in three regions starting at P/4, P/2
// and 3P/4: region r gets G = ceil(n^alpha / 2^i) - 1 evenly spaced groups
// of r copies, each group also moved down to a block boundary.
//
// A query of total m goes to the level whose pieces are about 2m to 4m
// long. Moving cuts to block boundaries can leave a window straddling two
// pieces of both cuttings; the query then falls back to shallower levels
// until every window of length m fits in some piece. Within a piece each
// possible count of splitting symbols is queried separately, and hits are
// mapped back to positions of S.

use std::collections::BTreeSet;

use super::{hist_build_symbols, hist_report, EncodedInstance, HistError, HistogramIndex, IndexMode, ParikhVector};

#[derive(Clone, Debug)]
pub struct SplitPart {
    /// Covered range of S.
    pub start: usize,
    pub end: usize,
    index: HistogramIndex,
    /// Per position of the piece text: the S position of that symbol, or of
    /// the next ordinary symbol when it is a splitting symbol.
    origin: Vec<usize>,
}

impl SplitPart {
    /// The piece with splitting symbols inserted.
    pub fn text(&self) -> &[u8] {
        self.index.text()
    }

    pub fn index(&self) -> &HistogramIndex {
        &self.index
    }

    pub fn stars(&self) -> usize {
        let star = (self.index.ell() - 1) as u8;
        self.text().iter().filter(|&&c| c == star).count()
    }

    /// Position in the piece text of S position `q` (inside the piece).
    fn local(&self, q: usize) -> usize {
        // origin is nondecreasing; ordinary symbols have distinct origins and
        // come after any splitting symbols sharing the same origin.
        self.origin.partition_point(|&o| o <= q) - 1
    }
}

#[derive(Clone, Debug)]
pub struct SplitLevel {
    pub level: usize,
    /// Splitting-symbol groups per region.
    pub groups: usize,
    pub parts: Vec<SplitPart>,
}

#[derive(Clone, Debug)]
pub struct SplitStructure {
    ell: usize,
    text_len: usize,
    alpha: f64,
    levels: Vec<SplitLevel>,
}

impl SplitStructure {
    pub fn levels(&self) -> &[SplitLevel] {
        &self.levels
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The splitting symbol.
    pub fn star(&self) -> u8 {
        self.ell as u8
    }

    /// Level a query of total `m` is answered from.
    pub fn level_for(&self, m: usize) -> usize {
        let n = self.text_len;
        let mut i = 0;
        while i + 1 < self.levels.len() && m << (i + 2) < n {
            i += 1;
        }
        while i > 0 && !covers(&self.levels[i], n, m) {
            i -= 1;
        }
        i
    }
}

/// `floor(alpha * log2 n)`.
pub fn default_levels(n: usize, alpha: f64) -> usize {
    (alpha * (n.max(1) as f64).log2()).floor() as usize
}

fn round_down(boundaries: &[usize], pos: usize) -> usize {
    boundaries[boundaries.partition_point(|&b| b <= pos) - 1]
}

fn pieces(cuts: impl IntoIterator<Item = usize>) -> Vec<(usize, usize)> {
    let cuts: Vec<usize> = cuts.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn build_part(text: &[u8], ell: usize, boundaries: &[usize], (start, end): (usize, usize), groups: usize) -> Result<SplitPart, HistError> {
    let p = end - start;
    // stars_before[q - start]: splitting symbols inserted before S position q.
    let mut stars_before = vec![0usize; p + 1];
    for region in 1..=3 {
        for a in 1..=groups {
            let off = p * (region * (groups + 1) + a) / (4 * (groups + 1));
            let at = round_down(boundaries, start + off).max(start);
            stars_before[at - start] += region;
        }
    }
    let star = ell as u8;
    let mut out = Vec::with_capacity(p + stars_before.iter().sum::<usize>());
    let mut origin = Vec::with_capacity(out.capacity());
    for q in start..=end {
        for _ in 0..stars_before[q - start] {
            out.push(star);
            origin.push(q);
        }
        if q < end {
            out.push(text[q]);
            origin.push(q);
        }
    }
    Ok(SplitPart { start, end, index: hist_build_symbols(out, ell + 1, IndexMode::Prefix)?, origin })
}

/// Builds levels `0..=levels` over scheme-1 text (any scheme works; the
/// splitting symbol is one past the text's alphabet).
pub fn build_split_structure(enc: &EncodedInstance, alpha: f64, levels: Option<usize>) -> Result<SplitStructure, HistError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(HistError::BadAlpha(alpha));
    }
    let ell = enc.ell();
    if ell + 1 > super::MAX_ALPHABET {
        return Err(HistError::BadAlphabet(ell + 1));
    }
    let n_blocks = enc.blocks().len();
    let top = levels.unwrap_or_else(|| default_levels(n_blocks, alpha));
    let text = enc.text();
    let big_n = text.len();
    let boundaries = enc.block_boundaries();
    let mut out = Vec::with_capacity(top + 1);
    for i in 0..=top.min(60) {
        let count = 1usize << i;
        let ranges = if i == 0 {
            vec![(0, big_n)]
        } else {
            let first = pieces((0..=count).map(|j| round_down(&boundaries, j * big_n / count)));
            let shifted = pieces((0..count).map(|j| round_down(&boundaries, (2 * j + 1) * big_n / (2 * count))));
            first.into_iter().chain(shifted).collect()
        };
        let groups = (((n_blocks as f64).powf(alpha) / count as f64).ceil() as usize).saturating_sub(1);
        let parts = ranges
            .into_iter()
            .map(|r| build_part(text, ell, &boundaries, r, groups))
            .collect::<Result<_, _>>()?;
        out.push(SplitLevel { level: i, groups, parts });
    }
    Ok(SplitStructure { ell, text_len: big_n, alpha, levels: out })
}

/// Every window of length `m` lies inside some part of the level.
fn covers(level: &SplitLevel, n: usize, m: usize) -> bool {
    if m > n {
        return true;
    }
    let mut spans: Vec<(usize, usize)> = level.parts.iter().map(|p| (p.start, p.end)).collect();
    spans.sort_unstable();
    let mut next = 0;
    let mut reach = 0;
    for q in 0..=n - m {
        while next < spans.len() && spans[next].0 <= q {
            reach = reach.max(spans[next].1);
            next += 1;
        }
        if reach < q + m {
            return false;
        }
    }
    true
}

/// All S positions where a window with histogram `v` starts, ascending.
/// Equal to a direct report on S.
pub fn split_query(ss: &SplitStructure, v: &ParikhVector) -> Result<Vec<usize>, HistError> {
    if v.ell() != ss.ell {
        return Err(HistError::WrongArity { got: v.ell(), ell: ss.ell });
    }
    let m = v.total() as usize;
    if m == 0 {
        return Err(HistError::EmptyQuery);
    }
    let level = &ss.levels[ss.level_for(m)];
    let mut hits = BTreeSet::new();
    for part in level.parts.iter().filter(|p| p.end - p.start >= m) {
        // Splitting symbols strictly inside each window of the part.
        let star = ss.star() as usize;
        let (mut lo, mut hi) = (usize::MAX, 0);
        for q in part.start..=part.end - m {
            let (a, b) = (part.local(q), part.local(q + m - 1));
            let t = part.index.count(star, a, b + 1) as usize;
            lo = lo.min(t);
            hi = hi.max(t);
        }
        for t in lo..=hi {
            let mut counts = v.counts().to_vec();
            counts.push(t as u64);
            for p in hist_report(&part.index, &ParikhVector(counts))? {
                hits.insert(part.origin[p]);
            }
        }
    }
    Ok(hits.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::{encode_hashes, hist_build_symbols, query_family, Scheme};
    use crate::rng::SplitMix64;

    fn random_enc(rng: &mut SplitMix64, n: usize, ell: usize, log_r: u32) -> EncodedInstance {
        let r_total = 1u64 << (log_r * ell as u32);
        let hashes: Vec<u64> = (0..n).map(|_| rng.below(r_total)).collect();
        encode_hashes(&hashes, r_total, ell, Scheme::Plain).unwrap()
    }

    #[test]
    fn alpha_zero_has_no_stars() {
        let mut rng = SplitMix64::new(71);
        let enc = random_enc(&mut rng, 16, 2, 2);
        let ss = build_split_structure(&enc, 0.0, None).unwrap();
        assert_eq!(ss.levels().len(), 1);
        assert_eq!(ss.levels()[0].parts.len(), 1);
        assert_eq!(ss.levels()[0].parts[0].stars(), 0);
        let idx = hist_build_symbols(enc.text().to_vec(), 2, IndexMode::Prefix).unwrap();
        for v in query_family(3, enc.hashes()[3], 16, 2, Scheme::Plain, &[0, 15].into()).unwrap() {
            assert_eq!(split_query(&ss, &v).unwrap(), hist_report(&idx, &v).unwrap());
        }
    }

    #[test]
    fn parts_strip_to_block_aligned_substrings() {
        let mut rng = SplitMix64::new(72);
        for alpha in [0.0, 0.5, 1.0] {
            let enc = random_enc(&mut rng, 32, 3, 2);
            let ss = build_split_structure(&enc, alpha, None).unwrap();
            assert_eq!(ss.levels().len(), default_levels(32, alpha) + 1);
            let bounds = enc.block_boundaries();
            for level in ss.levels() {
                assert!(level.parts.len() < 2 << level.level);
                for part in &level.parts {
                    let stripped: Vec<u8> = part.text().iter().copied().filter(|&c| c != ss.star()).collect();
                    assert_eq!(stripped, enc.text()[part.start..part.end]);
                    assert!(bounds.contains(&part.start) && bounds.contains(&part.end));
                    assert_eq!(part.stars(), 6 * level.groups);
                }
            }
        }
        assert!(matches!(build_split_structure(&random_enc(&mut rng, 4, 2, 1), 1.5, None), Err(HistError::BadAlpha(_))));
    }

    #[test]
    fn split_query_equals_direct_report() {
        let mut rng = SplitMix64::new(73);
        for trial in 0..12 {
            let ell = 2 + trial % 2;
            let n = 8 + rng.index(25);
            let log_r = 1 + rng.index(2) as u32;
            let enc = random_enc(&mut rng, n, ell, log_r);
            let idx = hist_build_symbols(enc.text().to_vec(), ell, IndexMode::Prefix).unwrap();
            let alpha = [0.0, 0.5, 1.0][trial % 3];
            let ss = build_split_structure(&enc, alpha, None).unwrap();
            let big_n = enc.len();
            for _ in 0..40 {
                let m = 1 + rng.index(big_n);
                let p = rng.index(big_n - m + 1);
                let v = crate::histogram::parikh_symbols(&enc.text()[p..p + m], ell).unwrap();
                assert_eq!(split_query(&ss, &v).unwrap(), hist_report(&idx, &v).unwrap(), "m={m} alpha={alpha}");
            }
        }
    }
}
