//! Reed-Solomon erasure code over a prime field.
//!
//! A message of `K` symbols is read as the coefficients of a polynomial of
//! degree below `K` and encoded as its values at `0, 1, ..., N - 1`. Any `K`
//! surviving positions determine the message.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("invalid codec parameters: {0}")]
    InvalidParams(String),
    #[error("only {survivors} symbols survived, {needed} needed")]
    TooManyErasures { survivors: usize, needed: usize },
    #[error("expected {expected} symbols, got {actual}")]
    WrongLength { expected: usize, actual: usize },
    #[error("symbol {0} is not a field element")]
    NotInField(u64),
}

pub fn is_prime(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= x {
        if x.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime `>= x`.
pub fn next_prime(x: u64) -> u64 {
    let mut p = x.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

/// Arithmetic modulo a prime below `2^32`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, CodecError> {
        if !is_prime(p) || p >= 1 << 32 {
            return Err(CodecError::InvalidParams(format!(
                "{p} is not a prime below 2^32"
            )));
        }
        Ok(PrimeField { p })
    }

    pub fn order(&self) -> u64 {
        self.p
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.p
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.p - b) % self.p
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.p
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1;
        a %= self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `a` must be nonzero.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(!a.is_multiple_of(self.p));
        self.pow(a, self.p - 2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CodecParams {
    pub field: PrimeField,
    /// Message length.
    pub k: usize,
    /// Block length.
    pub n: usize,
}

impl CodecParams {
    pub fn new(p: u64, k: usize, n: usize) -> Result<Self, CodecError> {
        let field = PrimeField::new(p)?;
        if k == 0 || k >= n {
            return Err(CodecError::InvalidParams(format!(
                "need 1 <= K < N, got K = {k}, N = {n}"
            )));
        }
        if n as u64 > p {
            return Err(CodecError::InvalidParams(format!(
                "N = {n} exceeds the field order {p}"
            )));
        }
        Ok(CodecParams { field, k, n })
    }

    /// Code for an `n`-node network tolerating `floor(alpha n)` erasures:
    /// `p` the smallest prime `>= n`, `N = n`, `K = max(1, floor((1 - alpha) n) - 1)`.
    pub fn for_network(n: usize, alpha: f64) -> Result<Self, CodecError> {
        let honest = ((1.0 - alpha) * n as f64 + 1e-9).floor() as usize;
        let k = honest.saturating_sub(1).max(1);
        CodecParams::new(next_prime(n as u64), k, n)
    }

    pub fn p(&self) -> u64 {
        self.field.order()
    }

    /// Relative distance `(N - K + 1) / N`.
    pub fn relative_distance(&self) -> f64 {
        (self.n - self.k + 1) as f64 / self.n as f64
    }

    /// Number of `K`-symbol parts a blob of `len` symbols splits into.
    pub fn parts(&self, len: usize) -> usize {
        len.div_ceil(self.k).max(1)
    }

    pub fn encode(&self, message: &[u64]) -> Result<Vec<u64>, CodecError> {
        if message.len() != self.k {
            return Err(CodecError::WrongLength {
                expected: self.k,
                actual: message.len(),
            });
        }
        if let Some(&bad) = message.iter().find(|&&s| s >= self.p()) {
            return Err(CodecError::NotInField(bad));
        }
        let f = &self.field;
        Ok((0..self.n as u64)
            .map(|x| {
                message
                    .iter()
                    .rev()
                    .fold(0, |acc, &c| f.add(f.mul(acc, x), c))
            })
            .collect())
    }

    /// Recovers the message from a codeword with erasures (`None`), using the
    /// first `K` surviving positions.
    pub fn decode(&self, received: &[Option<u64>]) -> Result<Vec<u64>, CodecError> {
        if received.len() != self.n {
            return Err(CodecError::WrongLength {
                expected: self.n,
                actual: received.len(),
            });
        }
        let points: Vec<(u64, u64)> = received
            .iter()
            .enumerate()
            .filter_map(|(x, y)| y.map(|y| (x as u64, y)))
            .take(self.k)
            .collect();
        if points.len() < self.k {
            return Err(CodecError::TooManyErasures {
                survivors: received.iter().filter(|y| y.is_some()).count(),
                needed: self.k,
            });
        }
        if let Some(&(_, bad)) = points.iter().find(|&&(_, y)| y >= self.p()) {
            return Err(CodecError::NotInField(bad));
        }
        Ok(interpolate(&self.field, &points))
    }
}

/// Coefficients (lowest degree first) of the unique polynomial of degree
/// below `points.len()` through `points`.
fn interpolate(f: &PrimeField, points: &[(u64, u64)]) -> Vec<u64> {
    let k = points.len();
    // master[d] is the coefficient of x^d in prod (x - x_i).
    let mut master = vec![0u64; k + 1];
    master[0] = 1;
    for (deg, &(xi, _)) in points.iter().enumerate() {
        for d in (0..=deg + 1).rev() {
            let shifted = if d > 0 { master[d - 1] } else { 0 };
            master[d] = f.sub(shifted, f.mul(xi, master[d]));
        }
    }
    let mut out = vec![0u64; k];
    let mut quotient = vec![0u64; k];
    for (i, &(xi, yi)) in points.iter().enumerate() {
        if yi == 0 {
            continue;
        }
        // master / (x - xi) by synthetic division.
        let mut carry = 0;
        for d in (0..k).rev() {
            carry = f.add(master[d + 1], f.mul(carry, xi));
            quotient[d] = carry;
        }
        let mut denom = 1;
        for (j, &(xj, _)) in points.iter().enumerate() {
            if j != i {
                denom = f.mul(denom, f.sub(xi, xj));
            }
        }
        let scale = f.mul(yi, f.inv(denom));
        for d in 0..k {
            out[d] = f.add(out[d], f.mul(scale, quotient[d]));
        }
    }
    out
}

/// Splits `blob` into zero-padded parts of `k` symbols.
pub fn split_blob(blob: &[u64], k: usize) -> Vec<Vec<u64>> {
    let parts = blob.len().div_ceil(k).max(1);
    (0..parts)
        .map(|j| {
            let mut part: Vec<u64> = blob.iter().skip(j * k).take(k).copied().collect();
            part.resize(k, 0);
            part
        })
        .collect()
}

/// Inverse of [`split_blob`] given the original length.
pub fn join_blob(parts: &[Vec<u64>], len: usize) -> Vec<u64> {
    let mut out: Vec<u64> = parts.iter().flatten().copied().collect();
    out.truncate(len);
    out
}
