use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::prefix::{Address, Prefix};

/// Default number of slots reserved per length cluster.
pub const DEFAULT_PREALLOC: usize = 1000;

/// TCAM slot placement with prefixes clustered by length.
///
/// Slot order is match priority. Cluster `k` holds prefixes of length
/// `width - k`, so longer prefixes sit at lower slot positions. A cluster
/// owns the contiguous region `begin[k]..begin[k + 1]`; new entries take the
/// lowest free slot of their region, which keeps each cluster's free gap
/// against the cluster below it.
///
/// A full cluster borrows a slot from the cluster with a free slot that needs
/// the fewest entry moves. Shifting a boundary moves the entry sitting on the
/// boundary slot, if any, into a free slot of its own cluster. Ties go to the
/// nearer cluster, then to the longer-prefix side.
#[derive(Clone, Debug)]
pub struct TcamLayout {
    width: u8,
    slots: Vec<Option<Prefix>>,
    begin: Vec<usize>,
    used: Vec<usize>,
    index: HashMap<Prefix, usize>,
}

/// Writes charged by one layout operation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LayoutCost {
    /// Entries relocated to open a slot.
    pub moves: u64,
    /// Total entry writes, moves included.
    pub writes: u64,
}

impl TcamLayout {
    pub fn new(width: u8, prealloc: usize) -> Self {
        let clusters = width as usize + 1;
        TcamLayout {
            width,
            slots: vec![None; clusters * prealloc],
            begin: (0..=clusters).map(|k| k * prealloc).collect(),
            used: vec![0; clusters],
            index: HashMap::new(),
        }
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, p: &Prefix) -> bool {
        self.index.contains_key(p)
    }

    pub fn slot_of(&self, p: &Prefix) -> Option<usize> {
        self.index.get(p).copied()
    }

    fn cluster_of(&self, p: &Prefix) -> usize {
        (self.width - p.len()) as usize
    }

    fn region(&self, k: usize) -> std::ops::Range<usize> {
        self.begin[k]..self.begin[k + 1]
    }

    fn free_in(&self, k: usize) -> usize {
        self.region(k).len() - self.used[k]
    }

    fn lowest_free(&self, k: usize) -> Option<usize> {
        self.region(k).find(|&i| self.slots[i].is_none())
    }

    /// Moves needed to grow cluster `i` by one slot taken from `donor`.
    fn borrow_cost(&self, i: usize, donor: usize) -> u64 {
        let occupied = |slot: usize| self.slots[slot].is_some() as u64;
        if donor < i {
            // each cluster from the donor down to i - 1 hands its last slot on
            (donor..i)
                .filter(|&k| !self.region(k).is_empty())
                .map(|k| occupied(self.begin[k + 1] - 1))
                .sum()
        } else {
            (i + 1..=donor)
                .filter(|&k| !self.region(k).is_empty())
                .map(|k| occupied(self.begin[k]))
                .sum()
        }
    }

    fn borrow(&mut self, i: usize, donor: usize) -> u64 {
        let mut moves = 0;
        if donor < i {
            for k in donor..i {
                if self.region(k).is_empty() {
                    self.begin[k + 1] -= 1;
                    continue;
                }
                let last = self.begin[k + 1] - 1;
                if self.slots[last].is_some() {
                    self.begin[k + 1] -= 1;
                    // the slot now belongs to k + 1; put the entry back into k
                    let p = self.slots[last].take().unwrap();
                    let to = self.lowest_free(k).expect("donor chain keeps a free slot");
                    self.slots[to] = Some(p);
                    self.index.insert(p, to);
                    moves += 1;
                } else {
                    self.begin[k + 1] -= 1;
                }
            }
        } else {
            for k in (i + 1..=donor).rev() {
                if self.region(k).is_empty() {
                    self.begin[k] += 1;
                    continue;
                }
                let first = self.begin[k];
                self.begin[k] += 1;
                if self.slots[first].is_some() {
                    let p = self.slots[first].take().unwrap();
                    let to = self.lowest_free(k).expect("donor chain keeps a free slot");
                    self.slots[to] = Some(p);
                    self.index.insert(p, to);
                    moves += 1;
                }
            }
        }
        moves
    }

    /// Places `p`; one write, plus one per entry moved to open a slot.
    pub fn insert(&mut self, p: Prefix) -> Result<LayoutCost> {
        if p.width() != self.width {
            return Err(Error::WidthMismatch {
                expected: self.width,
                found: p.width(),
            });
        }
        if self.index.contains_key(&p) {
            return Ok(LayoutCost::default());
        }
        let i = self.cluster_of(&p);
        let mut moves = 0;
        if self.free_in(i) == 0 {
            let clusters = self.used.len();
            let donor = (0..clusters)
                .filter(|&k| k != i && self.free_in(k) > 0)
                .min_by_key(|&k| (self.borrow_cost(i, k), k.abs_diff(i), k > i))
                .ok_or(Error::CapacityExhausted {
                    capacity: self.capacity(),
                })?;
            let expect = self.borrow_cost(i, donor);
            moves = self.borrow(i, donor);
            debug_assert_eq!(moves, expect);
        }
        let slot = self.lowest_free(i).expect("cluster has a free slot after borrowing");
        self.slots[slot] = Some(p);
        self.index.insert(p, slot);
        self.used[i] += 1;
        Ok(LayoutCost {
            moves,
            writes: moves + 1,
        })
    }

    /// Frees the slot of `p`: one write when present.
    pub fn remove(&mut self, p: &Prefix) -> LayoutCost {
        match self.index.remove(p) {
            Some(slot) => {
                self.slots[slot] = None;
                let k = self.cluster_of(p);
                self.used[k] -= 1;
                LayoutCost { moves: 0, writes: 1 }
            }
            None => LayoutCost::default(),
        }
    }

    /// First stored prefix matching `addr` in slot order.
    pub fn first_match(&self, addr: &Address) -> Option<Prefix> {
        self.slots
            .iter()
            .flatten()
            .find(|p| p.matches_unchecked(addr))
            .copied()
    }

    /// Checks that every entry lies in its own cluster's region.
    pub fn is_clustered(&self) -> bool {
        self.index.iter().all(|(p, &slot)| {
            self.slots[slot] == Some(*p) && self.region(self.cluster_of(p)).contains(&slot)
        }) && self.slots.iter().flatten().count() == self.index.len()
    }
}
