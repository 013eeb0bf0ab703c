//! Per-receiver knowledge state and the structure derived from it: which
//! packets are decoded, heard of and seen, and the equivalence classes of
//! packets tied together by known two-term combinations.

use std::collections::{BTreeMap, BTreeSet};

use crate::gf3::{CoeffVector, Gf3, KnowledgeBasis, PacketId};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReceiverState {
    /// 0-based receiver index.
    pub id: usize,
    pub basis: KnowledgeBasis,
}

impl ReceiverState {
    pub fn new(id: usize) -> Self {
        Self {
            id,
            basis: KnowledgeBasis::new(),
        }
    }

    pub fn with_rows<I: IntoIterator<Item = CoeffVector>>(id: usize, rows: I) -> Self {
        Self {
            id,
            basis: KnowledgeBasis::from_rows(rows),
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    /// Absorbs a successfully delivered combination. Returns whether it was
    /// innovative.
    pub fn receive(&mut self, v: &CoeffVector) -> bool {
        self.basis.insert(v)
    }

    pub fn receive_tracking(&mut self, v: &CoeffVector, newly_decoded: &mut Vec<PacketId>) -> bool {
        self.basis.insert_tracking(v, newly_decoded)
    }

    pub fn is_decoded(&self, p: PacketId) -> bool {
        self.basis.is_decoded(p)
    }

    /// Packets whose unit vector is in the knowledge space.
    pub fn decoded_set(&self) -> BTreeSet<PacketId> {
        (1..=self.basis.decoded_prefix())
            .chain(self.basis.sparse_decoded())
            .collect()
    }

    /// Heard-of but undecoded packets: the union of the supports of the
    /// non-unit basis rows.
    pub fn heard_undecoded(&self) -> BTreeSet<PacketId> {
        self.basis
            .mixed_rows()
            .flat_map(|r| r.support())
            .collect()
    }

    /// Every known combination is a combination of basis rows, so its support
    /// lies inside the union of the row supports, and each row is itself known.
    pub fn heard_set(&self) -> BTreeSet<PacketId> {
        let mut h = self.decoded_set();
        h.extend(self.heard_undecoded());
        h
    }

    /// Pivot columns. With lowest-index pivots each row reads `p + q` where `q`
    /// only involves later packets, which is exactly "p is seen".
    pub fn seen_set(&self) -> BTreeSet<PacketId> {
        self.basis.pivots().into_iter().collect()
    }

    /// Partition of the heard packets (plus the implicit all-zero packet)
    /// under `x ~ y  <=>  x + y or x + 2y is known`.
    ///
    /// `arrived` bounds the ground set to packets `1..=arrived`. Unheard
    /// packets are singleton classes and are left out.
    pub fn class_partition(&self, arrived: PacketId) -> ClassPartition {
        let decoded: BTreeSet<PacketId> = self
            .decoded_set()
            .into_iter()
            .filter(|&p| p <= arrived)
            .collect();
        let undecoded: Vec<PacketId> = self
            .heard_undecoded()
            .into_iter()
            .filter(|&p| p <= arrived)
            .collect();

        // A decoded packet is related to x only if x is decoded too (subtract
        // its unit vector), and decoded packets all sit in the zero class, so
        // only pairs of heard-undecoded packets need testing.
        let mut sets = DisjointSets::new(undecoded.len());
        for i in 0..undecoded.len() {
            for j in (i + 1)..undecoded.len() {
                if self.related(undecoded[i], undecoded[j]) {
                    sets.union(i, j);
                }
            }
        }
        let mut by_root: BTreeMap<usize, BTreeSet<PacketId>> = BTreeMap::new();
        for (i, &p) in undecoded.iter().enumerate() {
            by_root.entry(sets.find(i)).or_default().insert(p);
        }
        let mut classes: Vec<BTreeSet<PacketId>> = by_root.into_values().collect();
        classes.sort_by_key(|c| c.first().copied());
        ClassPartition { decoded, classes }
    }

    /// Number of heard-but-undecoded classes: how many more packet
    /// revelations the receiver needs to decode everything it has heard of.
    pub fn deficit(&self, arrived: PacketId) -> usize {
        self.class_partition(arrived).deficit()
    }

    fn related(&self, x: PacketId, y: PacketId) -> bool {
        [Gf3::ONE, Gf3::TWO].into_iter().any(|c| {
            let v = CoeffVector::from_pairs([(x, 1), (y, c.value())]);
            self.basis.contains(&v)
        })
    }
}

/// Equivalence classes of one receiver's heard packets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassPartition {
    /// The class of the all-zero packet, i.e. the decoded packets.
    pub decoded: BTreeSet<PacketId>,
    /// Remaining classes of heard packets, ordered by smallest member.
    pub classes: Vec<BTreeSet<PacketId>>,
}

impl ClassPartition {
    pub fn nontrivial(&self) -> impl Iterator<Item = &BTreeSet<PacketId>> + '_ {
        self.classes.iter().filter(|c| c.len() >= 2)
    }

    pub fn deficit(&self) -> usize {
        self.nontrivial().count()
    }
}

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}
