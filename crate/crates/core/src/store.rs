//! Erasure-coded storage spread over the network.
//!
//! Storing a blob under a key sends one codeword symbol of every part to every
//! node, one part per round. Retrieving it broadcasts the key and then collects
//! the symbols back, again one part per round, and decodes each part from
//! whatever arrived. Any `floor(alpha n)` missing nodes are tolerated.
//!
//! Every operation here is lockstep: all jobs passed to one call run in the
//! same rounds, which is how concurrent executors share the network without
//! two messages ever competing for one edge.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::adversary::CrashAdversary;
use crate::ecc::{join_blob, split_blob, CodecError, CodecParams};
use crate::net::{Attempt, Intent, Network, NodeId, Payload, SimError};
use crate::task::TcError;

pub type Key = u64;

/// What one node holds for one `(key, part)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StoredSymbol {
    pub symbol: u64,
    /// Length of the whole blob, used for unpadding.
    pub len: u64,
}

pub type Directory = HashMap<(Key, u32), StoredSymbol>;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum StoreError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("blob of {len} symbols needs {needed} parts but only {parts} rounds were scheduled")]
    TooLong {
        len: usize,
        needed: usize,
        parts: usize,
    },
}

impl From<StoreError> for TcError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Sim(e) => TcError::Sim(e),
            other => TcError::Executor(other.to_string()),
        }
    }
}

/// Per-node directories plus the shared code.
/// Outcome of one retrieve job: `None` when the requester did not survive.
pub type Retrieved = Option<Result<Vec<u64>, CodecError>>;

/// `(key, blob length, codeword parts)`.
type EncodedJob = (Key, u64, Vec<Vec<u64>>);

#[derive(Clone, Debug)]
pub struct Storage {
    codec: CodecParams,
    dirs: Vec<Directory>,
    /// Stores that tried to overwrite a symbol with a different value.
    conflicts: u64,
}

impl Storage {
    pub fn new(codec: CodecParams) -> Self {
        Storage {
            codec,
            dirs: vec![Directory::new(); codec.n],
            conflicts: 0,
        }
    }

    pub fn codec(&self) -> &CodecParams {
        &self.codec
    }

    pub fn directory(&self, node: NodeId) -> &Directory {
        &self.dirs[node.index()]
    }

    pub fn directories(&self) -> &[Directory] {
        &self.dirs
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    /// Rounds a store of `len` symbols takes.
    pub fn store_rounds(&self, len: usize) -> u64 {
        self.codec.parts(len) as u64
    }

    /// Rounds a retrieve of `len` symbols takes.
    pub fn retrieve_rounds(&self, len: usize) -> u64 {
        1 + self.codec.parts(len) as u64
    }

    fn record(&mut self, node: usize, key: Key, part: u32, sym: StoredSymbol) {
        match self.dirs[node].insert((key, part), sym) {
            Some(old) if old != sym => self.conflicts += 1,
            _ => {}
        }
    }

    /// Places the symbols of `blob` directly, as if stored before round 1.
    pub fn preload(&mut self, key: Key, blob: &[u64]) -> Result<(), StoreError> {
        let words = self.encode(blob)?;
        for (j, word) in words.iter().enumerate() {
            for (v, &symbol) in word.iter().enumerate() {
                let sym = StoredSymbol {
                    symbol,
                    len: blob.len() as u64,
                };
                self.record(v, key, j as u32 + 1, sym);
            }
        }
        Ok(())
    }

    fn encode(&self, blob: &[u64]) -> Result<Vec<Vec<u64>>, StoreError> {
        split_blob(blob, self.codec.k)
            .iter()
            .map(|part| self.codec.encode(part).map_err(StoreError::from))
            .collect()
    }

    /// Runs every store job in `jobs` (indexed by node) over exactly `parts`
    /// rounds. Returns which jobs' storers survived, i.e. stored successfully.
    pub fn multi_store(
        &mut self,
        net: &mut Network,
        adversary: &mut dyn CrashAdversary,
        jobs: &[Option<(Key, &[u64])>],
        parts: usize,
        intent_hook: &dyn Fn(usize) -> Option<Attempt>,
    ) -> Result<Vec<bool>, StoreError> {
        let n = net.n();
        let mut encoded: Vec<Option<EncodedJob>> = Vec::with_capacity(n);
        for job in jobs {
            encoded.push(match job {
                Some((key, blob)) => {
                    let words = self.encode(blob)?;
                    if words.len() > parts {
                        return Err(StoreError::TooLong {
                            len: blob.len(),
                            needed: words.len(),
                            parts,
                        });
                    }
                    Some((*key, blob.len() as u64, words))
                }
                None => None,
            });
        }
        for j in 0..parts {
            let part = j as u32 + 1;
            let intents = encoded
                .iter()
                .enumerate()
                .map(|(s, job)| {
                    let mut intent = Intent {
                        attempt: intent_hook(s),
                        ..Intent::default()
                    };
                    if let Some((key, len, words)) = job {
                        if let Some(word) = words.get(j) {
                            intent.unicast = (0..n)
                                .map(|r| {
                                    (
                                        NodeId::from_index(r),
                                        Payload::new(&[*key, part as u64, word[r], *len]),
                                    )
                                })
                                .collect();
                        }
                    }
                    intent
                })
                .collect();
            let delivery = net.exchange(intents, adversary)?;
            for r in net.alive().ones().collect::<Vec<_>>() {
                for (_, p) in delivery.unicasts(NodeId::from_index(r)) {
                    let w = p.words();
                    self.record(
                        r,
                        w[0],
                        w[1] as u32,
                        StoredSymbol {
                            symbol: w[2],
                            len: w[3],
                        },
                    );
                }
            }
        }
        Ok(jobs
            .iter()
            .enumerate()
            .map(|(s, j)| j.is_some() && net.is_alive(NodeId::from_index(s)))
            .collect())
    }

    /// Runs every retrieve job in `jobs` (indexed by node): one request round
    /// and `parts` reply rounds. A job's result is `None` when its requester
    /// did not survive.
    pub fn multi_retrieve(
        &mut self,
        net: &mut Network,
        adversary: &mut dyn CrashAdversary,
        jobs: &[Option<Key>],
        parts: usize,
        intent_hook: &dyn Fn(usize) -> Option<Attempt>,
    ) -> Result<Vec<Retrieved>, StoreError> {
        let n = net.n();
        let intents = jobs
            .iter()
            .enumerate()
            .map(|(s, key)| Intent {
                broadcast: key.map(Payload::word),
                attempt: intent_hook(s),
                ..Intent::default()
            })
            .collect();
        let delivery = net.exchange(intents, adversary)?;
        // requests[h] lists (requester, key) pairs holder h heard.
        let mut requests: Vec<Vec<(usize, Key)>> = vec![Vec::new(); n];
        for h in net.alive().ones() {
            for (q, key) in jobs.iter().enumerate() {
                let Some(key) = key else { continue };
                if q != h
                    && delivery
                        .broadcast_from(NodeId::from_index(h), NodeId::from_index(q))
                        .is_some()
                {
                    requests[h].push((q, *key));
                }
            }
        }

        // received[q][j][h]
        let mut received: Vec<Option<Vec<Vec<Option<u64>>>>> = jobs
            .iter()
            .map(|k| k.map(|_| vec![vec![None; n]; parts]))
            .collect();
        let mut lengths: Vec<Option<u64>> = vec![None; n];
        for j in 0..parts {
            let part = j as u32 + 1;
            let intents = (0..n)
                .map(|h| {
                    let mut intent = Intent {
                        attempt: intent_hook(h),
                        ..Intent::default()
                    };
                    if net.is_alive(NodeId::from_index(h)) {
                        intent.unicast = requests[h]
                            .iter()
                            .filter_map(|&(q, key)| {
                                self.dirs[h].get(&(key, part)).map(|s| {
                                    (
                                        NodeId::from_index(q),
                                        Payload::new(&[key, part as u64, s.symbol, s.len]),
                                    )
                                })
                            })
                            .collect();
                    }
                    intent
                })
                .collect();
            let delivery = net.exchange(intents, adversary)?;
            for (q, key) in jobs.iter().enumerate() {
                let (Some(key), Some(rx)) = (key, received[q].as_mut()) else {
                    continue;
                };
                if !net.is_alive(NodeId::from_index(q)) {
                    continue;
                }
                if let Some(own) = self.dirs[q].get(&(*key, part)) {
                    rx[j][q] = Some(own.symbol);
                    lengths[q].get_or_insert(own.len);
                }
                for (h, p) in delivery.unicasts(NodeId::from_index(q)) {
                    let w = p.words();
                    if w[0] == *key && w[1] == part as u64 {
                        rx[j][h.index()] = Some(w[2]);
                        lengths[q].get_or_insert(w[3]);
                    }
                }
            }
        }

        Ok(received
            .into_iter()
            .enumerate()
            .map(|(q, rx)| {
                let rx = rx?;
                if !net.is_alive(NodeId::from_index(q)) {
                    return None;
                }
                let decoded = rx
                    .iter()
                    .map(|col| self.codec.decode(col))
                    .collect::<Result<Vec<_>, _>>()
                    .map(|parts| join_blob(&parts, lengths[q].unwrap_or(0) as usize));
                Some(decoded)
            })
            .collect())
    }

    /// Decodes `key` from the directories of the nodes in `holders`, without
    /// using the network. Meant for checking results.
    pub fn read_back(
        &self,
        key: Key,
        len: usize,
        holders: &FixedBitSet,
    ) -> Result<Vec<u64>, CodecError> {
        let parts = self.codec.parts(len);
        let mut decoded = Vec::with_capacity(parts);
        for j in 0..parts {
            let col: Vec<Option<u64>> = (0..self.codec.n)
                .map(|h| {
                    if holders.contains(h) {
                        self.dirs[h].get(&(key, j as u32 + 1)).map(|s| s.symbol)
                    } else {
                        None
                    }
                })
                .collect();
            decoded.push(self.codec.decode(&col)?);
        }
        Ok(join_blob(&decoded, len))
    }

    /// Single store by `node`.
    pub fn net_store(
        &mut self,
        net: &mut Network,
        adversary: &mut dyn CrashAdversary,
        node: NodeId,
        key: Key,
        blob: &[u64],
    ) -> Result<bool, StoreError> {
        let mut jobs = vec![None; net.n()];
        jobs[node.index()] = Some((key, blob));
        let parts = self.codec.parts(blob.len());
        Ok(self.multi_store(net, adversary, &jobs, parts, &|_| None)?[node.index()])
    }

    /// Single retrieve by `node` of a blob known to have `len` symbols.
    pub fn net_retrieve(
        &mut self,
        net: &mut Network,
        adversary: &mut dyn CrashAdversary,
        node: NodeId,
        key: Key,
        len: usize,
    ) -> Result<Option<Vec<u64>>, StoreError> {
        let mut jobs = vec![None; net.n()];
        jobs[node.index()] = Some(key);
        let parts = self.codec.parts(len);
        match self
            .multi_retrieve(net, adversary, &jobs, parts, &|_| None)?
            .swap_remove(node.index())
        {
            Some(Ok(blob)) => Ok(Some(blob)),
            Some(Err(e)) => Err(e.into()),
            None => Ok(None),
        }
    }
}
