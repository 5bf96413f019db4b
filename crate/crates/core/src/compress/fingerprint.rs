use std::collections::HashMap;
use std::fmt;

use sha2::{Digest, Sha256, Sha512};

use crate::fist::Cell;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FingerprintAlgo {
    #[default]
    Sha256,
    Sha512,
}

impl std::str::FromStr for FingerprintAlgo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sha256" => Ok(FingerprintAlgo::Sha256),
            "sha512" => Ok(FingerprintAlgo::Sha512),
            other => Err(format!("unknown fingerprint algorithm `{other}` (sha256|sha512)")),
        }
    }
}

/// Digest of a canonical cell-vector serialization: four little-endian bytes
/// per cell, invalid cells as the all-ones sentinel.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VectorFingerprint(Box<[u8]>);

impl VectorFingerprint {
    pub fn of(algo: FingerprintAlgo, cells: &[Cell]) -> Self {
        let bytes = canonical_bytes(cells);
        let digest: Box<[u8]> = match algo {
            FingerprintAlgo::Sha256 => Sha256::digest(&bytes).to_vec().into(),
            FingerprintAlgo::Sha512 => Sha512::digest(&bytes).to_vec().into(),
        };
        VectorFingerprint(digest)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Two 64-bit words drawn from the digest, for filter probing.
    pub(crate) fn words(&self) -> (u64, u64) {
        let w = |i: usize| u64::from_le_bytes(self.0[i..i + 8].try_into().unwrap());
        (w(0), w(8) | 1)
    }
}

impl fmt::Debug for VectorFingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0.iter().take(8) {
            write!(f, "{b:02x}")?;
        }
        f.write_str("..")
    }
}

/// Assigns dense ids to distinct cell vectors. Vectors are grouped by
/// digest and compared byte for byte inside a group, so a digest collision
/// yields two ids instead of a wrong merge.
#[derive(Clone, Debug, Default)]
pub struct VectorInterner {
    algo: FingerprintAlgo,
    groups: HashMap<VectorFingerprint, Vec<u32>>,
    vectors: Vec<Vec<Cell>>,
}

impl VectorInterner {
    pub fn new(algo: FingerprintAlgo) -> Self {
        VectorInterner {
            algo,
            ..Default::default()
        }
    }

    /// Id of `cells`, and whether it was new.
    pub fn intern(&mut self, cells: &[Cell]) -> (u32, bool) {
        let group = self.groups.entry(VectorFingerprint::of(self.algo, cells)).or_default();
        if let Some(&id) = group.iter().find(|&&id| self.vectors[id as usize] == cells) {
            return (id, false);
        }
        let id = self.vectors.len() as u32;
        group.push(id);
        self.vectors.push(cells.to_vec());
        (id, true)
    }

    pub fn get(&self, id: u32) -> &[Cell] {
        &self.vectors[id as usize]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn canonical_bytes(cells: &[Cell]) -> Vec<u8> {
    cells.iter().flat_map(|c| c.to_raw().to_le_bytes()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_vectors_equal_digests() {
        let a = [Cell::Valid(1), Cell::Invalid];
        let b = [Cell::Valid(1), Cell::Invalid];
        let c = [Cell::Invalid, Cell::Valid(1)];
        for algo in [FingerprintAlgo::Sha256, FingerprintAlgo::Sha512] {
            assert_eq!(VectorFingerprint::of(algo, &a), VectorFingerprint::of(algo, &b));
            assert_ne!(VectorFingerprint::of(algo, &a), VectorFingerprint::of(algo, &c));
        }
        assert_eq!(VectorFingerprint::of(FingerprintAlgo::Sha256, &a).as_bytes().len() * 8, 256);
        assert_eq!(canonical_bytes(&a), vec![1, 0, 0, 0, 255, 255, 255, 255]);
    }

    #[test]
    fn interner_ids_are_dense() {
        let mut i = VectorInterner::new(FingerprintAlgo::Sha256);
        assert_eq!(i.intern(&[Cell::Valid(1)]), (0, true));
        assert_eq!(i.intern(&[Cell::Invalid]), (1, true));
        assert_eq!(i.intern(&[Cell::Valid(1)]), (0, false));
        assert_eq!(i.get(1), &[Cell::Invalid]);
        assert_eq!(i.len(), 2);
    }
}
