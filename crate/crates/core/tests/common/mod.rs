//! Brute-force reference for knowledge states: enumerates the whole span of
//! the received rows and reads every set straight off its definition.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use bcast3_core::{CoeffVector, PacketId};
use rand::Rng;

/// Dense vector over packets `1..=n`; index 0 is packet 1.
pub type Dense = Vec<u8>;

pub fn dense(v: &CoeffVector, n: usize) -> Dense {
    let mut d = vec![0u8; n];
    for (p, c) in v.iter() {
        d[p as usize - 1] = c.value();
    }
    d
}

pub fn sparse(d: &[u8]) -> CoeffVector {
    CoeffVector::from_pairs(d.iter().enumerate().map(|(i, &c)| (i as u32 + 1, c)))
}

pub struct Oracle {
    pub n: usize,
    pub span: HashSet<Dense>,
}

impl Oracle {
    pub fn new(rows: &[CoeffVector], n: usize) -> Self {
        let mut span: HashSet<Dense> = HashSet::new();
        span.insert(vec![0; n]);
        for row in rows {
            let r = dense(row, n);
            let current: Vec<Dense> = span.iter().cloned().collect();
            for v in current {
                for c in 1..3u8 {
                    let w: Dense = v.iter().zip(&r).map(|(a, b)| (a + c * b) % 3).collect();
                    span.insert(w);
                }
            }
        }
        Self { n, span }
    }

    /// log3 of the span size.
    pub fn rank(&self) -> usize {
        let mut size = self.span.len();
        let mut k = 0;
        while size > 1 {
            assert_eq!(size % 3, 0);
            size /= 3;
            k += 1;
        }
        k
    }

    pub fn contains(&self, v: &CoeffVector) -> bool {
        self.span.contains(&dense(v, self.n))
    }

    fn packets(&self) -> impl Iterator<Item = PacketId> {
        1..=self.n as PacketId
    }

    /// Packets p for which some known combination starts at p.
    pub fn seen(&self) -> BTreeSet<PacketId> {
        self.span
            .iter()
            .filter_map(|v| v.iter().position(|&c| c != 0))
            .map(|i| i as PacketId + 1)
            .collect()
    }

    pub fn decoded(&self) -> BTreeSet<PacketId> {
        self.packets().filter(|&p| self.contains(&CoeffVector::unit(p))).collect()
    }

    pub fn heard(&self) -> BTreeSet<PacketId> {
        self.packets()
            .filter(|&p| self.span.iter().any(|v| v[p as usize - 1] != 0))
            .collect()
    }

    pub fn related(&self, x: PacketId, y: PacketId) -> bool {
        (1..3u8).any(|c| self.contains(&CoeffVector::from_pairs([(x, 1), (y, c)])))
    }

    /// Classes of heard-undecoded packets with at least two members, built
    /// directly from the relation. Panics if the relation is not transitive.
    pub fn nontrivial_classes(&self) -> Vec<BTreeSet<PacketId>> {
        let decoded = self.decoded();
        let open: Vec<PacketId> = self.heard().into_iter().filter(|p| !decoded.contains(p)).collect();
        let mut classes: Vec<BTreeSet<PacketId>> = Vec::new();
        for &x in &open {
            let class: BTreeSet<PacketId> = open
                .iter()
                .copied()
                .filter(|&y| y == x || self.related(x, y))
                .collect();
            for &y in &class {
                for &z in &class {
                    assert!(y == z || self.related(y, z), "relation not transitive at {y},{z}");
                }
            }
            if class.len() >= 2 && !classes.contains(&class) {
                classes.push(class);
            }
        }
        classes.sort_by_key(|c| c.first().copied());
        classes
    }
}

/// Random coefficient rows over packets `1..=n`. Most rows are short, so
/// states with nontrivial classes and partial decoding come up often.
pub fn random_rows<R: Rng>(rng: &mut R, n: usize, count: usize) -> Vec<CoeffVector> {
    (0..count)
        .map(|_| {
            let len = match rng.gen_range(0..10) {
                0..=2 => 1,
                3..=6 => 2,
                7..=8 => 3,
                _ => n,
            };
            let mut d = vec![0u8; n];
            for _ in 0..len {
                d[rng.gen_range(0..n)] = rng.gen_range(1..3);
            }
            sparse(&d)
        })
        .collect()
}
