//! Arithmetic over the three-element field and sparse linear algebra on
//! coefficient vectors indexed by packet number.
//!
//! A [`KnowledgeBasis`] is kept in reduced row-echelon form with pivots at the
//! lowest packet index of each row. Rows that are unit vectors (decoded
//! packets) are stored as a contiguous prefix plus a sparse set, so a basis
//! that has absorbed millions of packets stays small in memory; only rows
//! that still mix two or more packets are stored explicitly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::Error;

/// Index of an original packet. Packets are numbered from 1 in arrival order.
pub type PacketId = u32;

/// An element of GF(3).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Gf3(u8);

impl Gf3 {
    pub const ZERO: Gf3 = Gf3(0);
    pub const ONE: Gf3 = Gf3(1);
    pub const TWO: Gf3 = Gf3(2);

    /// Reduces any integer modulo 3.
    pub const fn new(value: u8) -> Self {
        Gf3(value % 3)
    }

    pub const fn value(self) -> u8 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse. Every nonzero element is its own inverse.
    pub fn inv(self) -> Result<Gf3, Error> {
        match self.0 {
            0 => Err(Error::ZeroInverse),
            v => Ok(Gf3(v)),
        }
    }
}

impl Add for Gf3 {
    type Output = Gf3;
    fn add(self, rhs: Gf3) -> Gf3 {
        Gf3((self.0 + rhs.0) % 3)
    }
}

impl Sub for Gf3 {
    type Output = Gf3;
    fn sub(self, rhs: Gf3) -> Gf3 {
        Gf3((self.0 + 3 - rhs.0) % 3)
    }
}

impl Mul for Gf3 {
    type Output = Gf3;
    fn mul(self, rhs: Gf3) -> Gf3 {
        Gf3((self.0 * rhs.0) % 3)
    }
}

impl Neg for Gf3 {
    type Output = Gf3;
    fn neg(self) -> Gf3 {
        Gf3((3 - self.0) % 3)
    }
}

impl fmt::Display for Gf3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Sparse GF(3) vector: entries sorted by packet index, zeros never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CoeffVector {
    entries: Vec<(PacketId, Gf3)>,
}

impl CoeffVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit(p: PacketId) -> Self {
        Self {
            entries: vec![(p, Gf3::ONE)],
        }
    }

    /// Builds a vector from arbitrary `(index, coefficient)` pairs. Repeated
    /// indices are summed and zero results dropped.
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (PacketId, u8)>,
    {
        let mut acc: BTreeMap<PacketId, Gf3> = BTreeMap::new();
        for (p, c) in pairs {
            let e = acc.entry(p).or_default();
            *e = *e + Gf3::new(c);
        }
        Self {
            entries: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn get(&self, p: PacketId) -> Gf3 {
        match self.entries.binary_search_by_key(&p, |&(i, _)| i) {
            Ok(k) => self.entries[k].1,
            Err(_) => Gf3::ZERO,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (PacketId, Gf3)> + '_ {
        self.entries.iter().copied()
    }

    pub fn support(&self) -> impl Iterator<Item = PacketId> + '_ {
        self.entries.iter().map(|&(p, _)| p)
    }

    /// Number of nonzero entries. A vector with none is [`Self::is_zero`].
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lowest-index nonzero entry.
    pub fn leading(&self) -> Option<(PacketId, Gf3)> {
        self.entries.first().copied()
    }

    pub fn max_index(&self) -> Option<PacketId> {
        self.entries.last().map(|&(p, _)| p)
    }

    pub fn scale(&self, alpha: Gf3) -> CoeffVector {
        if alpha.is_zero() {
            return CoeffVector::zero();
        }
        CoeffVector {
            entries: self.entries.iter().map(|&(p, c)| (p, c * alpha)).collect(),
        }
    }
}

impl fmt::Display for CoeffVector {
    /// `i:c|j:c`, or `-` for the zero vector.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("-");
        }
        for (k, (p, c)) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str("|")?;
            }
            write!(f, "{p}:{c}")?;
        }
        Ok(())
    }
}

/// `alpha * x + y`.
pub fn vec_axpy(alpha: Gf3, x: &CoeffVector, y: &CoeffVector) -> CoeffVector {
    if alpha.is_zero() {
        return y.clone();
    }
    let (a, b) = (&x.entries, &y.entries);
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (pa, ca) = a[i];
        let (pb, cb) = b[j];
        if pa < pb {
            out.push((pa, ca * alpha));
            i += 1;
        } else if pb < pa {
            out.push((pb, cb));
            j += 1;
        } else {
            let c = ca * alpha + cb;
            if !c.is_zero() {
                out.push((pa, c));
            }
            i += 1;
            j += 1;
        }
    }
    out.extend(a[i..].iter().map(|&(p, c)| (p, c * alpha)));
    out.extend_from_slice(&b[j..]);
    CoeffVector { entries: out }
}

/// Reduced row-echelon basis of a subspace of GF(3)^N.
///
/// Invariants: every row has leading coefficient 1 at its pivot, pivot columns
/// are zero in every other row, and pivots are distinct. Unit rows are held
/// implicitly in `prefix` / `units`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowledgeBasis {
    /// Packets `1..=prefix` all have unit rows.
    prefix: PacketId,
    /// Unit rows above the prefix.
    units: BTreeSet<PacketId>,
    /// Rows with two or more nonzero entries, keyed by pivot.
    mixed: BTreeMap<PacketId, CoeffVector>,
}

impl KnowledgeBasis {
    pub fn new() -> Self {
        Self::default()
    }

    /// Span of arbitrary (not necessarily echelon) rows.
    pub fn from_rows<I: IntoIterator<Item = CoeffVector>>(rows: I) -> Self {
        let mut b = Self::new();
        for r in rows {
            b.insert(&r);
        }
        b
    }

    pub fn rank(&self) -> usize {
        self.prefix as usize + self.units.len() + self.mixed.len()
    }

    pub fn is_decoded(&self, p: PacketId) -> bool {
        (p >= 1 && p <= self.prefix) || self.units.contains(&p)
    }

    pub fn is_pivot(&self, p: PacketId) -> bool {
        self.is_decoded(p) || self.mixed.contains_key(&p)
    }

    /// Largest `k` such that every packet in `1..=k` is decoded.
    pub fn decoded_prefix(&self) -> PacketId {
        self.prefix
    }

    /// Packets decoded above the contiguous prefix.
    pub fn sparse_decoded(&self) -> impl Iterator<Item = PacketId> + '_ {
        self.units.iter().copied()
    }

    /// Rows that still combine at least two packets, in pivot order.
    pub fn mixed_rows(&self) -> impl Iterator<Item = &CoeffVector> + '_ {
        self.mixed.values()
    }

    pub fn has_mixed_rows(&self) -> bool {
        !self.mixed.is_empty()
    }

    /// All pivots in ascending order.
    pub fn pivots(&self) -> Vec<PacketId> {
        let mut out: Vec<PacketId> = (1..=self.prefix).collect();
        out.extend(self.units.iter().copied());
        out.extend(self.mixed.keys().copied());
        out.sort_unstable();
        out
    }

    /// Materialized rows sorted by pivot.
    pub fn rows(&self) -> Vec<CoeffVector> {
        self.pivots()
            .into_iter()
            .map(|p| match self.mixed.get(&p) {
                Some(row) => row.clone(),
                None => CoeffVector::unit(p),
            })
            .collect()
    }

    /// Structural check of the stored rows: each mixed row starts with
    /// coefficient 1 at its own pivot and vanishes on every other pivot. When
    /// this holds the pivots are exactly the seen packets and their count is
    /// the rank.
    pub fn is_echelon(&self) -> bool {
        self.units.iter().all(|&p| p > self.prefix)
            && self.mixed.iter().all(|(&q, row)| {
                row.len() >= 2
                    && row.leading() == Some((q, Gf3::ONE))
                    && row.iter().skip(1).all(|(p, _)| !self.is_pivot(p))
            })
    }

    /// Remainder of `v` after elimination against the basis. Zero iff `v` is
    /// in the span; otherwise it has no entries at pivot columns.
    pub fn reduce(&self, v: &CoeffVector) -> CoeffVector {
        let mut r = CoeffVector {
            entries: v.iter().filter(|&(p, _)| !self.is_decoded(p)).collect(),
        };
        let hits: Vec<(PacketId, Gf3)> = r
            .iter()
            .filter(|(p, _)| self.mixed.contains_key(p))
            .collect();
        // Mixed rows vanish on every other pivot column, so one pass suffices.
        for (p, c) in hits {
            r = vec_axpy(-c, &self.mixed[&p], &r);
        }
        r
    }

    pub fn contains(&self, v: &CoeffVector) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v` to the spanning set. Returns whether the rank grew.
    pub fn insert(&mut self, v: &CoeffVector) -> bool {
        let mut scratch = Vec::new();
        self.insert_tracking(v, &mut scratch)
    }

    /// Like [`insert`](Self::insert), additionally appending to `newly_decoded`
    /// every packet whose unit vector entered the span.
    pub fn insert_tracking(&mut self, v: &CoeffVector, newly_decoded: &mut Vec<PacketId>) -> bool {
        let r = self.reduce(v);
        let Some((pivot, lead)) = r.leading() else {
            return false;
        };
        // lead is nonzero, so the inverse exists.
        let r = r.scale(lead.inv().unwrap_or(Gf3::ONE));

        // Clear the new pivot column from existing rows. Rows only hold
        // entries at or above their own pivot.
        let touched: Vec<PacketId> = self
            .mixed
            .range(..pivot)
            .filter(|(_, row)| !row.get(pivot).is_zero())
            .map(|(&q, _)| q)
            .collect();
        for q in touched {
            let row = self.mixed.remove(&q).expect("touched row present");
            let updated = vec_axpy(-row.get(pivot), &r, &row);
            if updated.len() == 1 {
                self.mark_decoded(q, newly_decoded);
            } else {
                self.mixed.insert(q, updated);
            }
        }

        if r.len() == 1 {
            self.mark_decoded(pivot, newly_decoded);
        } else {
            self.mixed.insert(pivot, r);
        }
        true
    }

    fn mark_decoded(&mut self, p: PacketId, newly_decoded: &mut Vec<PacketId>) {
        newly_decoded.push(p);
        self.units.insert(p);
        while self.units.remove(&(self.prefix + 1)) {
            self.prefix += 1;
        }
    }
}

/// Convenience wrapper over [`KnowledgeBasis::insert`].
pub fn basis_insert(basis: &mut KnowledgeBasis, v: &CoeffVector) -> bool {
    basis.insert(v)
}

/// Convenience wrapper over [`KnowledgeBasis::contains`].
pub fn in_span(basis: &KnowledgeBasis, v: &CoeffVector) -> bool {
    basis.contains(v)
}
