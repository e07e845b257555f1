//! m-bit Bloom filter with k digest-derived index positions.
//!
//! Index `r` (1-based) of an item is the first eight bytes of
//! `SHA-256(item || seq_be32 || r_be32)`, read big-endian and reduced mod `m`.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn check_params(m: usize, k: usize) -> Result<()> {
    if m == 0 || k == 0 || k > m || m > u32::MAX as usize || k > u16::MAX as usize {
        return Err(Error::InvalidBloomParams { m, k });
    }
    Ok(())
}

fn prefix(item: &[u8], seq: u32) -> Sha256 {
    let mut h = Sha256::new();
    h.update(item);
    h.update(seq.to_be_bytes());
    h
}

#[inline]
fn index_from(prefix: &Sha256, r: u32, m: usize) -> usize {
    let digest = prefix.clone().chain_update(r.to_be_bytes()).finalize();
    let word = u64::from_be_bytes(digest[..8].try_into().unwrap());
    (word % m as u64) as usize
}

pub fn derive_indices(item: &[u8], seq: u32, m: usize, k: usize) -> Result<IndexSet> {
    check_params(m, k)?;
    let p = prefix(item, seq);
    Ok(IndexSet::new((1..=k as u32).map(|r| index_from(&p, r, m)).collect()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BloomFilter {
    words: Vec<u64>,
    m: usize,
    k: usize,
}

impl BloomFilter {
    pub fn new(m: usize, k: usize) -> Result<Self> {
        check_params(m, k)?;
        Ok(Self { words: vec![0; m.div_ceil(64)], m, k })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bit(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set_bit(&mut self, i: usize) -> Result<()> {
        if i >= self.m {
            return Err(Error::IndexOutOfRange { index: i, m: self.m });
        }
        self.words[i / 64] |= 1 << (i % 64);
        Ok(())
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_saturated(&self) -> bool {
        self.popcount() == self.m
    }

    /// Sets every bit. Useful for worst-case fixtures.
    pub fn saturate(&mut self) {
        for i in 0..self.m {
            self.words[i / 64] |= 1 << (i % 64);
        }
    }

    pub fn insert(&mut self, idx: &IndexSet) -> Result<()> {
        if let Some(&bad) = idx.as_slice().iter().find(|&&i| i >= self.m) {
            return Err(Error::IndexOutOfRange { index: bad, m: self.m });
        }
        for &i in idx.as_slice() {
            self.words[i / 64] |= 1 << (i % 64);
        }
        Ok(())
    }

    pub fn contains(&self, idx: &IndexSet) -> Result<bool> {
        if let Some(&bad) = idx.as_slice().iter().find(|&&i| i >= self.m) {
            return Err(Error::IndexOutOfRange { index: bad, m: self.m });
        }
        Ok(idx.as_slice().iter().all(|&i| self.bit(i)))
    }

    /// Derives this filter's `k` indices for `item || seq` and sets them.
    pub fn insert_item(&mut self, item: &[u8], seq: u32) {
        let p = prefix(item, seq);
        for r in 1..=self.k as u32 {
            let i = index_from(&p, r, self.m);
            self.words[i / 64] |= 1 << (i % 64);
        }
    }

    /// Membership of `item || seq`; stops hashing at the first clear bit.
    pub fn contains_item(&self, item: &[u8], seq: u32) -> bool {
        let p = prefix(item, seq);
        (1..=self.k as u32).all(|r| self.bit(index_from(&p, r, self.m)))
    }

    /// `m` as big-endian u32, `k` as big-endian u16, then `ceil(m/8)` bytes
    /// with bit 0 in the most significant position of the first byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + self.m.div_ceil(8));
        out.extend_from_slice(&(self.m as u32).to_be_bytes());
        out.extend_from_slice(&(self.k as u16).to_be_bytes());
        let mut bytes = vec![0u8; self.m.div_ceil(8)];
        for i in (0..self.m).filter(|&i| self.bit(i)) {
            bytes[i / 8] |= 0x80 >> (i % 8);
        }
        out.extend_from_slice(&bytes);
        out
    }

    /// Decodes one filter from the front of `data`, returning it and the
    /// number of bytes consumed.
    pub fn from_bytes(data: &[u8]) -> Result<(Self, usize)> {
        if data.len() < 6 {
            return Err(Error::Decode("bloom header truncated".into()));
        }
        let m = u32::from_be_bytes(data[..4].try_into().unwrap()) as usize;
        let k = u16::from_be_bytes(data[4..6].try_into().unwrap()) as usize;
        let mut bf = Self::new(m, k).map_err(|e| Error::Decode(e.to_string()))?;
        let len = m.div_ceil(8);
        let body = data.get(6..6 + len).ok_or_else(|| Error::Decode("bloom body truncated".into()))?;
        for (b, &byte) in body.iter().enumerate() {
            for bit in 0..8 {
                if byte & (0x80 >> bit) != 0 {
                    let i = b * 8 + bit;
                    if i >= m {
                        return Err(Error::Decode("nonzero padding bits".into()));
                    }
                    bf.words[i / 64] |= 1 << (i % 64);
                }
            }
        }
        Ok((bf, 6 + len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_deterministic() {
        let a = derive_indices(b"edge", 9, 64, 5).unwrap();
        assert_eq!(a, derive_indices(b"edge", 9, 64, 5).unwrap());
        assert_ne!(a, derive_indices(b"edge", 10, 64, 5).unwrap());
        assert_eq!(derive_indices(b"x", 0, 1, 1).unwrap().as_slice(), &[0]);
        assert!(derive_indices(b"x", 0, 4, 5).is_err());
        assert!(derive_indices(b"x", 0, 0, 1).is_err());
    }

    #[test]
    fn insert_and_query() {
        let mut bf = BloomFilter::new(16, 2).unwrap();
        let idx = IndexSet::new(vec![2, 5]);
        assert!(!bf.contains(&idx).unwrap());
        bf.insert(&idx).unwrap();
        assert!(bf.bit(2) && bf.bit(5));
        assert_eq!(bf.popcount(), 2);
        let before = bf.clone();
        bf.insert(&idx).unwrap();
        assert_eq!(bf, before);
        assert!(bf.contains(&idx).unwrap());
        assert!(bf.insert(&IndexSet::new(vec![16])).is_err());
        assert!(bf.contains(&IndexSet::new(vec![99])).is_err());
    }

    #[test]
    fn saturated_filter_contains_everything() {
        let mut bf = BloomFilter::new(10, 3).unwrap();
        bf.saturate();
        assert!(bf.is_saturated());
        assert!(bf.contains_item(b"anything", 4));
    }

    #[test]
    fn singleton_inserts_bounded_by_pigeonhole() {
        let mut bf = BloomFilter::new(32, 1).unwrap();
        for j in 0..20u32 {
            bf.insert_item(&j.to_be_bytes(), 0);
            assert!(bf.popcount() <= j as usize + 1);
        }
    }

    #[test]
    fn item_api_agrees_with_index_api() {
        let mut a = BloomFilter::new(37, 4).unwrap();
        let mut b = a.clone();
        a.insert_item(b"node", 3);
        b.insert(&derive_indices(b"node", 3, 37, 4).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn golden_bytes() {
        let mut bf = BloomFilter::new(12, 2).unwrap();
        bf.insert(&IndexSet::new(vec![0, 9])).unwrap();
        assert_eq!(bf.to_bytes(), vec![0, 0, 0, 12, 0, 2, 0x80, 0x40]);
        let (back, used) = BloomFilter::from_bytes(&bf.to_bytes()).unwrap();
        assert_eq!((back, used), (bf, 8));
        assert!(BloomFilter::from_bytes(&[0, 0, 0, 12, 0, 2, 0x80, 0x48]).is_err());
        assert!(BloomFilter::from_bytes(&[0, 0, 0, 12, 0, 2, 0x80]).is_err());
    }
}
