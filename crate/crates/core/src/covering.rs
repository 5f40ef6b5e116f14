//! Load-balancing covering families.
//!
//! A `(k, B, eps)` family is a list of `m` subsets of the nodes. Every set has
//! between `nB/2k` and `2nB/k` members, and any `k` of the sets put a load
//! within `(1 +- eps) B` on all but `eps n` nodes. The construction is a seeded
//! random draw filtered on the size bounds; the load property is checked
//! empirically by [`certify_load_balance`].

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{self, BufRead, Write};

use fixedbitset::FixedBitSet;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::net::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("invalid family parameters: {0}")]
    InvalidParams(String),
    #[error("only {accepted} of {candidates} candidate sets met the size bounds, {needed} needed")]
    ConstructionFailed {
        accepted: usize,
        candidates: usize,
        needed: usize,
    },
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("malformed family file, line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FamilyParams {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl FamilyParams {
    pub fn new(n: usize, m: usize, k: usize, b: usize, epsilon: f64, seed: u64) -> Self {
        FamilyParams {
            n,
            m,
            k,
            b,
            epsilon,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        let bad = |msg: String| Err(FamilyError::InvalidParams(msg));
        if self.n == 0 || self.n > u32::MAX as usize {
            return bad(format!("n = {} out of range", self.n));
        }
        if self.m == 0 || self.m > self.n {
            return bad(format!(
                "need 1 <= m <= n, got m = {}, n = {}",
                self.m, self.n
            ));
        }
        if self.b == 0 {
            return bad("B must be at least 1".into());
        }
        if self.k < self.b || self.k > self.m {
            return bad(format!(
                "need B <= k <= m, got B = {}, k = {}, m = {}",
                self.b, self.k, self.m
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        Ok(())
    }

    /// Inclusion probability `min(B/k, 1)`.
    pub fn inclusion_probability(&self) -> f64 {
        (self.b as f64 / self.k as f64).min(1.0)
    }

    /// Inclusive size range `[ceil(nB/2k), floor(2nB/k)]`.
    pub fn size_bounds(&self) -> (usize, usize) {
        let nb = self.n as u128 * self.b as u128;
        let k = self.k as u128;
        let lo = nb.div_ceil(2 * k);
        let hi = 2 * nb / k;
        (lo as usize, hi as usize)
    }

    /// Inclusive load range `[(1 - eps) B, (1 + eps) B]` as integers.
    pub fn load_bounds(&self) -> (usize, usize) {
        let b = self.b as f64;
        let lo = ((1.0 - self.epsilon) * b - 1e-9).ceil().max(0.0) as usize;
        let hi = ((1.0 + self.epsilon) * b + 1e-9).floor() as usize;
        (lo, hi)
    }

    /// Smallest `|J|` that satisfies the load-balance requirement.
    pub fn min_good(&self) -> usize {
        ((1.0 - self.epsilon) * self.n as f64 - 1e-9)
            .ceil()
            .max(0.0) as usize
    }

    fn stream_seed(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        out[..8].copy_from_slice(&self.seed.to_le_bytes());
        out[8..12].copy_from_slice(&(self.n as u32).to_le_bytes());
        out[12..16].copy_from_slice(&(self.m as u32).to_le_bytes());
        out[16..20].copy_from_slice(&(self.k as u32).to_le_bytes());
        out[20..24].copy_from_slice(&(self.b as u32).to_le_bytes());
        out[24..32].copy_from_slice(&self.epsilon.to_bits().to_le_bytes());
        out
    }
}

/// Constants from the existence argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoryConstants {
    pub epsilon: f64,
    pub c: f64,
    #[serde(rename = "B")]
    pub b: u64,
}

impl TheoryConstants {
    /// `c = eps^3 / 8` and `B = ceil(72 / c)` for a given `eps`.
    pub fn from_epsilon(epsilon: f64) -> Self {
        let c = epsilon.powi(3) / 8.0;
        let b = (72.0 / c - 1e-6).ceil() as u64;
        TheoryConstants { epsilon, c, b }
    }
}

/// `eps = (1 - alpha) / (6 + alpha)`, the largest `eps` with
/// `(1 - 4 eps - (1 + eps) alpha) / 2 >= eps`.
pub fn derive_constants(alpha: f64) -> TheoryConstants {
    TheoryConstants::from_epsilon((1.0 - alpha) / (6.0 + alpha))
}

/// The `eps` used when the caller does not pick one: the theory value clamped
/// into the range where desk-scale families are usable.
pub fn practical_epsilon(alpha: f64) -> f64 {
    derive_constants(alpha).epsilon.clamp(0.05, 0.3)
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Members(Vec<u32>);

#[derive(Clone, Debug)]
pub struct CoveringFamily {
    params: FamilyParams,
    sets: Vec<FixedBitSet>,
    members: Vec<Members>,
}

impl PartialEq for CoveringFamily {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.sets == other.sets
    }
}

impl CoveringFamily {
    /// Builds a family from explicit member lists (1-based node ids).
    pub fn from_sets(params: FamilyParams, sets: Vec<Vec<u32>>) -> Result<Self, FamilyError> {
        if sets.len() != params.m {
            return Err(FamilyError::InvalidParams(format!(
                "expected {} sets, got {}",
                params.m,
                sets.len()
            )));
        }
        let mut bits = Vec::with_capacity(sets.len());
        let mut members = Vec::with_capacity(sets.len());
        for set in sets {
            let mut b = FixedBitSet::with_capacity(params.n);
            for &v in &set {
                if v == 0 || v as usize > params.n {
                    return Err(FamilyError::IndexOutOfRange {
                        index: v as usize,
                        max: params.n,
                    });
                }
                b.insert(v as usize - 1);
            }
            members.push(Members(b.ones().map(|i| i as u32).collect()));
            bits.push(b);
        }
        Ok(CoveringFamily {
            params,
            sets: bits,
            members,
        })
    }

    fn from_bitsets(params: FamilyParams, sets: Vec<FixedBitSet>) -> Self {
        let members = sets
            .iter()
            .map(|b| Members(b.ones().map(|i| i as u32).collect()))
            .collect();
        CoveringFamily {
            params,
            sets,
            members,
        }
    }

    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// The set `A_i`, `i` in `1..=m`.
    pub fn set(&self, i: usize) -> &FixedBitSet {
        &self.sets[i - 1]
    }

    pub fn set_size(&self, i: usize) -> usize {
        self.members[i - 1].0.len()
    }

    /// Zero-based member indices of `A_i`.
    pub fn member_indices(&self, i: usize) -> &[u32] {
        &self.members[i - 1].0
    }

    pub fn contains(&self, i: usize, node: NodeId) -> bool {
        self.sets[i - 1].contains(node.index())
    }

    /// For every node, the 1-based indices of the sets it belongs to.
    pub fn assignments(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.params.n];
        for (i, m) in self.members.iter().enumerate() {
            for &v in &m.0 {
                out[v as usize].push(i as u32 + 1);
            }
        }
        out
    }

    /// Loads of every node for the index set `I` (1-based indices).
    pub fn loads(&self, index_set: &[usize]) -> Result<Vec<u32>, FamilyError> {
        let mut loads = vec![0u32; self.params.n];
        for &i in index_set {
            self.check_index(i)?;
            for &v in &self.members[i - 1].0 {
                loads[v as usize] += 1;
            }
        }
        Ok(loads)
    }

    fn check_index(&self, i: usize) -> Result<(), FamilyError> {
        if i == 0 || i > self.sets.len() {
            return Err(FamilyError::IndexOutOfRange {
                index: i,
                max: self.sets.len(),
            });
        }
        Ok(())
    }

    /// Writes the family as a header line `n m k B epsilon seed` followed by
    /// one line of member ids per set.
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        let p = &self.params;
        writeln!(
            out,
            "{} {} {} {} {} {}",
            p.n, p.m, p.k, p.b, p.epsilon, p.seed
        )?;
        for m in &self.members {
            let line: Vec<String> = m.0.iter().map(|v| (v + 1).to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, FamilyError> {
        let mut lines = input.lines().enumerate();
        let parse_err = |line: usize, msg: String| FamilyError::Parse { line, msg };
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty input".into()))?;
        let header = header.map_err(|e| parse_err(1, e.to_string()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(parse_err(
                1,
                format!("expected 6 header fields, got {}", fields.len()),
            ));
        }
        let int = |i: usize| -> Result<usize, FamilyError> {
            fields[i]
                .parse()
                .map_err(|e| parse_err(1, format!("field {}: {e}", i + 1)))
        };
        let params = FamilyParams {
            n: int(0)?,
            m: int(1)?,
            k: int(2)?,
            b: int(3)?,
            epsilon: fields[4]
                .parse()
                .map_err(|e| parse_err(1, format!("epsilon: {e}")))?,
            seed: fields[5]
                .parse()
                .map_err(|e| parse_err(1, format!("seed: {e}")))?,
        };
        params.validate()?;
        let mut sets = Vec::with_capacity(params.m);
        for (idx, line) in lines {
            let line = line.map_err(|e| parse_err(idx + 1, e.to_string()))?;
            if sets.len() == params.m {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(parse_err(idx + 1, "more sets than m".into()));
            }
            let set = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|e| parse_err(idx + 1, format!("`{t}`: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            sets.push(set);
        }
        if sets.len() != params.m {
            return Err(parse_err(
                params.m + 1,
                format!("expected {} sets, got {}", params.m, sets.len()),
            ));
        }
        CoveringFamily::from_sets(params, sets)
    }
}

/// Draws up to `2m` candidates, each node included independently with
/// probability `min(B/k, 1)`, and keeps the first `m` that meet the size
/// bounds. The result is a pure function of `params`.
pub fn generate(params: FamilyParams) -> Result<CoveringFamily, FamilyError> {
    params.validate()?;
    let p = params.inclusion_probability();
    let (lo, hi) = params.size_bounds();
    let mut rng = ChaCha8Rng::from_seed(params.stream_seed());
    let candidates = 2 * params.m;
    let mut accepted = Vec::with_capacity(params.m);
    for _ in 0..candidates {
        let mut set = FixedBitSet::with_capacity(params.n);
        if p >= 1.0 {
            set.insert_range(..);
        } else {
            for j in 0..params.n {
                if rng.gen_bool(p) {
                    set.insert(j);
                }
            }
        }
        let size = set.count_ones(..);
        if (lo..=hi).contains(&size) {
            accepted.push(set);
            if accepted.len() == params.m {
                return Ok(CoveringFamily::from_bitsets(params, accepted));
            }
        }
    }
    Err(FamilyError::ConstructionFailed {
        accepted: accepted.len(),
        candidates,
        needed: params.m,
    })
}

/// [`generate`] with the seed bumped by one after each failed construction.
pub fn generate_with_retry(
    mut params: FamilyParams,
    attempts: u32,
) -> Result<CoveringFamily, FamilyError> {
    let mut last = None;
    for _ in 0..attempts.max(1) {
        match generate(params) {
            Ok(f) => return Ok(f),
            Err(e @ FamilyError::ConstructionFailed { .. }) => {
                last = Some(e);
                params.seed = params.seed.wrapping_add(1);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// `|{l in I : j in A_l}|` for 1-based task indices `I`.
pub fn load(j: NodeId, index_set: &[usize], family: &CoveringFamily) -> Result<usize, FamilyError> {
    if j.get() == 0 || j.index() >= family.params.n {
        return Err(FamilyError::IndexOutOfRange {
            index: j.get() as usize,
            max: family.params.n,
        });
    }
    let mut count = 0;
    for &i in index_set {
        family.check_index(i)?;
        if family.sets[i - 1].contains(j.index()) {
            count += 1;
        }
    }
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SizeReport {
    pub lower: usize,
    pub upper: usize,
    /// `(set index, size)` for every set outside the bounds.
    pub violations: Vec<(usize, usize)>,
}

impl SizeReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify_size_bounds(family: &CoveringFamily) -> SizeReport {
    let (lower, upper) = family.params.size_bounds();
    let violations = (1..=family.len())
        .map(|i| (i, family.set_size(i)))
        .filter(|&(_, s)| s < lower || s > upper)
        .collect();
    SizeReport {
        lower,
        upper,
        violations,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampleRecord {
    pub index_hash: u64,
    /// `|J|`.
    pub good: usize,
    /// Extremes of the load over `J`; zero when `J` is empty.
    pub min_load: u32,
    pub max_load: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceCertificate {
    pub k: usize,
    pub samples: usize,
    pub exhaustive: bool,
    /// Largest `(n - |J|) / n` over all samples.
    pub worst_bad_fraction: f64,
    pub passing: usize,
    pub per_sample: Vec<SampleRecord>,
}

impl BalanceCertificate {
    pub fn passed(&self) -> bool {
        self.passing == self.samples
    }

    pub fn pass_fraction(&self) -> f64 {
        if self.samples == 0 {
            return 1.0;
        }
        self.passing as f64 / self.samples as f64
    }
}

impl fmt::Display for BalanceCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={} samples={}{} passing={} worst_bad_fraction={:.4}",
            self.k,
            self.samples,
            if self.exhaustive { " (exhaustive)" } else { "" },
            self.passing,
            self.worst_bad_fraction
        )
    }
}

/// Subset counts up to this many are enumerated instead of sampled.
pub const EXHAUSTIVE_LIMIT: u128 = 100_000;

/// `C(m, k)`, saturating at `u128::MAX`.
pub fn binomial(m: usize, k: usize) -> u128 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((m - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Checks the load-balance property on `k`-subsets of the family: every
/// subset when there are at most [`EXHAUSTIVE_LIMIT`] of them, otherwise
/// `samples` uniformly drawn ones.
pub fn certify_load_balance(
    family: &CoveringFamily,
    k: usize,
    samples: usize,
    rng_seed: u64,
) -> Result<BalanceCertificate, FamilyError> {
    let m = family.len();
    if k == 0 || k > m {
        return Err(FamilyError::InvalidParams(format!(
            "need 1 <= k <= m, got k = {k}, m = {m}"
        )));
    }
    if samples == 0 {
        return Err(FamilyError::InvalidParams(
            "samples must be at least 1".into(),
        ));
    }
    let p = &family.params;
    let (lo, hi) = p.load_bounds();
    let min_good = p.min_good();
    let mut loads = vec![0u32; p.n];
    let mut cert = BalanceCertificate {
        k,
        samples: 0,
        exhaustive: false,
        worst_bad_fraction: 0.0,
        passing: 0,
        per_sample: Vec::new(),
    };

    let mut check = |subset: &[usize], cert: &mut BalanceCertificate| {
        loads.iter_mut().for_each(|l| *l = 0);
        for &i in subset {
            for &v in &family.members[i].0 {
                loads[v as usize] += 1;
            }
        }
        let mut rec = SampleRecord {
            index_hash: {
                let mut h = DefaultHasher::new();
                subset.hash(&mut h);
                h.finish()
            },
            good: 0,
            min_load: u32::MAX,
            max_load: 0,
        };
        for &l in &loads {
            if (lo..=hi).contains(&(l as usize)) {
                rec.good += 1;
                rec.min_load = rec.min_load.min(l);
                rec.max_load = rec.max_load.max(l);
            }
        }
        if rec.good == 0 {
            rec.min_load = 0;
        }
        let bad = (p.n - rec.good) as f64 / p.n as f64;
        cert.worst_bad_fraction = cert.worst_bad_fraction.max(bad);
        cert.samples += 1;
        if rec.good >= min_good {
            cert.passing += 1;
        }
        cert.per_sample.push(rec);
    };

    if binomial(m, k) <= EXHAUSTIVE_LIMIT {
        cert.exhaustive = true;
        let mut subset: Vec<usize> = (0..k).collect();
        loop {
            check(&subset, &mut cert);
            // Advance to the next combination in lexicographic order.
            let mut i = k;
            while i > 0 && subset[i - 1] == m - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            subset[i - 1] += 1;
            for j in i..k {
                subset[j] = subset[j - 1] + 1;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut subset = Vec::with_capacity(k);
        for _ in 0..samples {
            subset.clear();
            subset.extend(index::sample(&mut rng, m, k));
            subset.sort_unstable();
            check(&subset, &mut cert);
        }
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny() -> CoveringFamily {
        let params = FamilyParams::new(3, 3, 3, 1, 0.5, 0);
        CoveringFamily::from_sets(params, vec![vec![1, 2], vec![2, 3], vec![2]]).unwrap()
    }

    #[test]
    fn constants() {
        assert!((derive_constants(0.0).epsilon - 1.0 / 6.0).abs() < 1e-12);
        assert!((derive_constants(0.5).epsilon - 1.0 / 13.0).abs() < 1e-12);
        let t = TheoryConstants::from_epsilon(0.1);
        assert!((t.c - 1.25e-4).abs() < 1e-15);
        assert_eq!(t.b, 576_000);
    }

    #[test]
    fn load_counts() {
        let f = tiny();
        assert_eq!(load(NodeId::new(2), &[1, 2, 3], &f).unwrap(), 3);
        assert_eq!(load(NodeId::new(2), &[], &f).unwrap(), 0);
        assert_eq!(load(NodeId::new(1), &[2, 3], &f).unwrap(), 0);
        assert!(matches!(
            load(NodeId::new(1), &[4], &f),
            Err(FamilyError::IndexOutOfRange { index: 4, max: 3 })
        ));
    }

    #[test]
    fn degenerate_family_is_everything() {
        let f = generate(FamilyParams::new(8, 4, 4, 4, 0.1, 1)).unwrap();
        for i in 1..=4 {
            assert_eq!(f.set_size(i), 8);
        }
        assert!(verify_size_bounds(&f).passed());
        let cert = certify_load_balance(&f, 4, 10, 0).unwrap();
        assert!(cert.passed());
        assert_eq!(cert.worst_bad_fraction, 0.0);
        assert!(cert.per_sample.iter().all(|s| s.good == 8));
    }

    #[test]
    fn sizes_within_bounds() {
        let f = generate(FamilyParams::new(1000, 100, 50, 10, 0.1, 42)).unwrap();
        let report = verify_size_bounds(&f);
        assert_eq!((report.lower, report.upper), (100, 400));
        assert!(report.passed());
    }

    #[test]
    fn seeds_matter_and_replay() {
        let p = FamilyParams::new(200, 40, 20, 4, 0.2, 42);
        let a = generate(p).unwrap();
        let b = generate(p).unwrap();
        let c = generate(FamilyParams { seed: 43, ..p }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn empty_set_fails_size_check() {
        let params = FamilyParams::new(4, 2, 2, 1, 0.5, 0);
        let f = CoveringFamily::from_sets(params, vec![vec![1, 2], vec![]]).unwrap();
        let r = verify_size_bounds(&f);
        assert_eq!(r.violations, vec![(2, 0)]);
    }

    #[test]
    fn exhaustive_matches_brute_force() {
        let params = FamilyParams::new(12, 6, 3, 2, 0.5, 9);
        let f = generate(params).unwrap();
        let cert = certify_load_balance(&f, 3, 1, 0).unwrap();
        assert!(cert.exhaustive);
        assert_eq!(cert.samples, 20);
        // Independent enumeration via bitmasks.
        let (lo, hi) = params.load_bounds();
        let mut goods = Vec::new();
        for mask in 0u32..64 {
            if mask.count_ones() != 3 {
                continue;
            }
            let mut good = 0;
            for j in 1..=12 {
                let l = (0..6)
                    .filter(|&i| mask & (1 << i) != 0 && f.contains(i + 1, NodeId::new(j)))
                    .count();
                if (lo..=hi).contains(&l) {
                    good += 1;
                }
            }
            goods.push(good);
        }
        let mut ours: Vec<usize> = cert.per_sample.iter().map(|s| s.good).collect();
        ours.sort_unstable();
        goods.sort_unstable();
        assert_eq!(ours, goods);
    }

    #[test]
    fn serialization_round_trip() {
        let f = generate(FamilyParams::new(30, 10, 5, 2, 0.25, 3)).unwrap();
        let text = f.to_text();
        assert!(text.starts_with("30 10 5 2 0.25 3\n"));
        let back = CoveringFamily::read_from(text.as_bytes()).unwrap();
        assert_eq!(back, f);
        assert!(CoveringFamily::read_from("30 10 5\n".as_bytes()).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(1000, 500), u128::MAX);
    }

    proptest! {
        #[test]
        fn load_is_monotone(seed in 0u64..1000, cut in 0usize..20, extra in 0usize..20) {
            let f = generate(FamilyParams::new(40, 20, 10, 3, 0.3, seed)).unwrap();
            let small: Vec<usize> = (1..=cut.min(20)).collect();
            let big: Vec<usize> = (1..=(cut + extra).min(20)).collect();
            for j in 1..=40 {
                let j = NodeId::new(j);
                prop_assert!(load(j, &small, &f).unwrap() <= load(j, &big, &f).unwrap());
            }
        }

        #[test]
        fn generated_families_meet_size_bounds(seed in 0u64..10_000, n in 16usize..300, b in 1usize..6) {
            let m = (n / 4).max(b);
            let k = (m / 2).max(b);
            match generate(FamilyParams::new(n, m, k, b, 0.2, seed)) {
                Ok(f) => prop_assert!(verify_size_bounds(&f).passed()),
                Err(FamilyError::ConstructionFailed { .. }) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
