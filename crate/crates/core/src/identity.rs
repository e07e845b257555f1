//! Node credentials and the identities embedded into filters and hash-chains.
//!
//! Edge and double-edge identities are HMAC-SHA256 outputs keyed by the
//! embedding node's derived key over big-endian `u32` node indices. The
//! hash-chain step is `SHA-256(seq_be32 || id || previous)`.

use hmac::{Hmac, KeyInit, Mac};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::topology::Node;

pub const KEY_LEN: usize = 32;
pub const ID_LEN: usize = 32;

pub type Key = [u8; KEY_LEN];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(pub [u8; ID_LEN]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DoubleEdgeId(pub [u8; ID_LEN]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashChain(pub [u8; 32]);

impl EdgeId {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl DoubleEdgeId {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl HashChain {
    /// Public chain seed shared by every deployment of this crate.
    pub fn seed() -> Self {
        Self(Sha256::digest(b"topoprov/hash-chain-seed/v1").into())
    }

    pub fn update(&self, id: &[u8], seq: u32) -> Self {
        let mut h = Sha256::new();
        h.update(seq.to_be_bytes());
        h.update(id);
        h.update(self.0);
        Self(h.finalize().into())
    }

    /// Folds `ids` into the chain starting from `self`.
    pub fn extend<'a>(self, ids: impl IntoIterator<Item = &'a [u8]>, seq: u32) -> Self {
        ids.into_iter().fold(self, |hc, id| hc.update(id, seq))
    }
}

pub fn chain_update(hc: &HashChain, id: &[u8], seq: u32) -> HashChain {
    hc.update(id, seq)
}

/// Per-node derived keys. The destination holds the whole ring.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyRing {
    node_keys: Vec<Key>,
}

impl std::fmt::Debug for KeyRing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyRing").field("nodes", &self.node_keys.len()).finish()
    }
}

fn prf(key: &Key, parts: &[Node]) -> [u8; ID_LEN] {
    let mut mac = <Hmac<Sha256> as KeyInit>::new_from_slice(key).expect("hmac accepts any key length");
    for &p in parts {
        mac.update(&(p as u32).to_be_bytes());
    }
    mac.finalize().into_bytes().into()
}

impl KeyRing {
    pub fn new(node_keys: Vec<Key>) -> Self {
        Self { node_keys }
    }

    /// Deterministic ring of `n` keys drawn from a seeded stream.
    pub fn from_seed(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { node_keys: (0..n).map(|_| rng.random()).collect() }
    }

    pub fn len(&self) -> usize {
        self.node_keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_keys.is_empty()
    }

    pub fn key(&self, node: Node) -> Result<&Key> {
        self.node_keys.get(node).ok_or(Error::MissingKey(node))
    }

    pub fn chain_seed(&self) -> HashChain {
        HashChain::seed()
    }

    pub fn edge_id(&self, i: Node, j: Node) -> Result<EdgeId> {
        if i == j {
            return Err(Error::Domain(format!("edge id needs distinct nodes, got {i}")));
        }
        Ok(EdgeId(prf(self.key(i)?, &[i, j])))
    }

    pub fn double_edge_id(&self, prev: Node, center: Node, next: Node) -> Result<DoubleEdgeId> {
        if prev == center || center == next || prev == next {
            return Err(Error::Domain(format!("double-edge needs distinct nodes, got ({prev},{center},{next})")));
        }
        Ok(DoubleEdgeId(prf(self.key(center)?, &[prev, center, next])))
    }

    /// One lowercase hex key per line, node order.
    pub fn to_key_file(&self) -> String {
        self.node_keys.iter().map(|k| hex::encode(k) + "\n").collect()
    }

    pub fn parse_key_file(text: &str) -> Result<Self> {
        let mut keys = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bytes = hex::decode(line).map_err(|e| Error::Decode(format!("key line {}: {e}", ln + 1)))?;
            let key: Key = bytes
                .try_into()
                .map_err(|_| Error::Decode(format!("key line {}: expected {KEY_LEN} bytes", ln + 1)))?;
            keys.push(key);
        }
        Ok(Self { node_keys: keys })
    }
}

/// Anything able to produce edge and double-edge identities.
pub trait IdentitySource: Sync {
    fn edge_id(&self, i: Node, j: Node) -> Result<EdgeId>;
    fn double_edge_id(&self, prev: Node, center: Node, next: Node) -> Result<DoubleEdgeId>;
}

impl IdentitySource for KeyRing {
    fn edge_id(&self, i: Node, j: Node) -> Result<EdgeId> {
        KeyRing::edge_id(self, i, j)
    }

    fn double_edge_id(&self, prev: Node, center: Node, next: Node) -> Result<DoubleEdgeId> {
        KeyRing::double_edge_id(self, prev, center, next)
    }
}

/// Precomputed identities for every ordered pair (and optionally every
/// ordered triple) of `n` nodes. Monte Carlo runs share one of these.
#[derive(Debug, Clone)]
pub struct IdentityCache {
    n: usize,
    edges: Vec<Option<EdgeId>>,
    double_edges: Option<Vec<Option<DoubleEdgeId>>>,
}

impl IdentityCache {
    pub fn new(keys: &KeyRing, n: usize, with_double_edges: bool) -> Result<Self> {
        if keys.len() < n {
            return Err(Error::MissingKey(keys.len()));
        }
        let mut edges = vec![None; n * n];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                edges[i * n + j] = Some(keys.edge_id(i, j)?);
            }
        }
        let double_edges = if with_double_edges {
            let mut v = vec![None; n * n * n];
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if a != b && b != c && a != c {
                            v[(a * n + b) * n + c] = Some(keys.double_edge_id(a, b, c)?);
                        }
                    }
                }
            }
            Some(v)
        } else {
            None
        };
        Ok(Self { n, edges, double_edges })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }
}

impl IdentitySource for IdentityCache {
    fn edge_id(&self, i: Node, j: Node) -> Result<EdgeId> {
        if i >= self.n || j >= self.n {
            return Err(Error::MissingKey(i.max(j)));
        }
        self.edges[i * self.n + j].ok_or_else(|| Error::Domain(format!("edge id needs distinct nodes, got {i}")))
    }

    fn double_edge_id(&self, prev: Node, center: Node, next: Node) -> Result<DoubleEdgeId> {
        let n = self.n;
        if prev >= n || center >= n || next >= n {
            return Err(Error::MissingKey(prev.max(center).max(next)));
        }
        let table = self
            .double_edges
            .as_ref()
            .ok_or_else(|| Error::Domain("identity cache built without double-edges".into()))?;
        table[(prev * n + center) * n + next]
            .ok_or_else(|| Error::Domain(format!("double-edge needs distinct nodes, got ({prev},{center},{next})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_ids_are_asymmetric_and_deterministic() {
        let keys = KeyRing::from_seed(4, 1);
        assert_ne!(keys.edge_id(1, 2).unwrap(), keys.edge_id(2, 1).unwrap());
        assert_eq!(keys.edge_id(1, 2).unwrap(), keys.edge_id(1, 2).unwrap());
        assert!(keys.edge_id(1, 1).is_err());
        assert!(matches!(keys.edge_id(7, 1), Err(Error::MissingKey(7))));
    }

    #[test]
    fn double_edge_ids() {
        let keys = KeyRing::from_seed(5, 2);
        let a = keys.double_edge_id(1, 2, 3).unwrap();
        assert_ne!(a, keys.double_edge_id(3, 2, 1).unwrap());
        assert_eq!(a, keys.double_edge_id(1, 2, 3).unwrap());
        assert!(keys.double_edge_id(1, 2, 1).is_err());
        // destination recomputes from its own copy of the ring
        let copy = KeyRing::parse_key_file(&keys.to_key_file()).unwrap();
        assert_eq!(copy.double_edge_id(1, 2, 3).unwrap(), a);
    }

    #[test]
    fn chain_over_nothing_is_seed() {
        let seed = HashChain::seed();
        assert_eq!(seed.extend(std::iter::empty(), 5), seed);
        let a = seed.update(b"x", 1);
        assert_ne!(a, seed);
        assert_eq!(a, chain_update(&seed, b"x", 1));
        assert_ne!(a, seed.update(b"x", 2));
    }

    #[test]
    fn cache_matches_ring() {
        let keys = KeyRing::from_seed(6, 3);
        let cache = IdentityCache::new(&keys, 6, true).unwrap();
        assert_eq!(IdentitySource::edge_id(&cache, 4, 2).unwrap(), keys.edge_id(4, 2).unwrap());
        assert_eq!(
            IdentitySource::double_edge_id(&cache, 0, 5, 3).unwrap(),
            keys.double_edge_id(0, 5, 3).unwrap()
        );
        assert!(IdentitySource::edge_id(&cache, 2, 2).is_err());
        let small = IdentityCache::new(&keys, 6, false).unwrap();
        assert!(IdentitySource::double_edge_id(&small, 0, 1, 2).is_err());
    }

    #[test]
    fn key_file_rejects_garbage() {
        assert!(KeyRing::parse_key_file("zz\n").is_err());
        assert!(KeyRing::parse_key_file("abcd\n").is_err());
        let ring = KeyRing::parse_key_file(&format!("# keys\n{}\n\n", "11".repeat(32))).unwrap();
        assert_eq!(ring.len(), 1);
    }
}
