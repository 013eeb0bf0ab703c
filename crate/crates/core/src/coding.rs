//! The sender's per-slot choice of linear combination.
//!
//! With full feedback the sender knows every receiver's knowledge space. Let
//! `m` be the largest receiver rank; a receiver with rank `m` is a leader.
//! Transmissions never involve a packet beyond `m + 1`, and dispatch on the
//! number of leaders:
//!
//! * three leaders: combine the (at most three) unseen packets;
//! * two leaders: serve the non-leader, or fall through to the unique-leader
//!   rules when only one leader has decoded `1..=m`;
//! * one leader: classify the universe into nine sets from the two
//!   non-leaders' decoded/heard status and follow a fixed preference order
//!   keyed on where packet `m + 1` falls.
//!
//! Coefficients are restricted to {1, 2} and picked so the combination is
//! innovative to every receiver that does not already know everything.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gf3::{CoeffVector, Gf3, PacketId};
use crate::knowledge::ReceiverState;

pub const RECEIVERS: usize = 3;

/// Everything the sender knows at the start of a slot.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SenderView {
    /// Packets `1..=arrived` are in the sender's possession.
    pub arrived: PacketId,
    /// Exact copies of the receivers' knowledge, kept current by feedback.
    pub receivers: [ReceiverState; RECEIVERS],
}

impl SenderView {
    pub fn new() -> Self {
        Self {
            arrived: 0,
            receivers: [
                ReceiverState::new(0),
                ReceiverState::new(1),
                ReceiverState::new(2),
            ],
        }
    }

    pub fn with_receivers(arrived: PacketId, receivers: [ReceiverState; RECEIVERS]) -> Self {
        Self { arrived, receivers }
    }

    pub fn ranks(&self) -> [usize; RECEIVERS] {
        [
            self.receivers[0].rank(),
            self.receivers[1].rank(),
            self.receivers[2].rank(),
        ]
    }

    /// Whether receiver `r` already knows every arrived packet.
    pub fn caught_up(&self, r: usize) -> bool {
        self.receivers[r].rank() >= self.arrived as usize
    }

    /// The receiver playing the unique leader when the nine-set rules apply:
    /// the sole leader, or the only one of two leaders that decoded `1..=m`.
    pub fn partition_leader(&self) -> Option<usize> {
        let leaders = compute_leaders(self);
        match leaders.ids.as_slice() {
            [only] => Some(*only),
            [a, b] => {
                let full = |r: usize| self.receivers[r].basis.decoded_prefix() >= leaders.m;
                match (full(*a), full(*b)) {
                    (true, false) => Some(*a),
                    (false, true) => Some(*b),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Human-readable state for error reports.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "arrived = {}", self.arrived);
        for r in &self.receivers {
            let b = &r.basis;
            let sparse: Vec<PacketId> = b.sparse_decoded().collect();
            let _ = writeln!(
                s,
                "rx{}: rank {} decoded 1..={} + {:?}",
                r.id + 1,
                b.rank(),
                b.decoded_prefix(),
                sparse
            );
            for row in b.mixed_rows() {
                let _ = writeln!(s, "    row {row}");
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaders {
    pub m: PacketId,
    /// 0-based receiver indices, ascending.
    pub ids: Vec<usize>,
}

pub fn compute_leaders(view: &SenderView) -> Leaders {
    let ranks = view.ranks();
    let m = *ranks.iter().max().expect("three receivers");
    Leaders {
        m: m as PacketId,
        ids: (0..RECEIVERS).filter(|&r| ranks[r] == m).collect(),
    }
}

/// Which rule produced a transmission.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum CaseLabel {
    AllLeaders,
    /// Two leaders, only one of which has decoded `1..=m`.
    TwoLeadersDelegate,
    /// Two leaders, packet `m + 1` not yet arrived.
    TwoLeadersA,
    /// Two leaders, packet `m + 1` already decoded by the non-leader.
    TwoLeadersB,
    /// Two leaders, packet `m + 1` not decoded by the non-leader.
    TwoLeadersC,
    /// Unique leader, case 1 through 10.
    UniqueLeader(u8),
    Idle,
    /// Plain retransmission in the single-receiver baseline.
    Arq,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        const UL: [&str; 10] = [
            "UL_CASE1", "UL_CASE2", "UL_CASE3", "UL_CASE4", "UL_CASE5", "UL_CASE6", "UL_CASE7",
            "UL_CASE8", "UL_CASE9", "UL_CASE10",
        ];
        match self {
            CaseLabel::AllLeaders => "ALL_LEADERS",
            CaseLabel::TwoLeadersDelegate => "TWO_LEADERS_DELEGATE",
            CaseLabel::TwoLeadersA => "TWO_LEADERS_A",
            CaseLabel::TwoLeadersB => "TWO_LEADERS_B",
            CaseLabel::TwoLeadersC => "TWO_LEADERS_C",
            CaseLabel::UniqueLeader(k) => UL[(*k as usize).clamp(1, 10) - 1],
            CaseLabel::Idle => "IDLE",
            CaseLabel::Arq => "ARQ",
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransmissionPlan {
    /// Ascending packet indices.
    pub support: Vec<PacketId>,
    pub coeffs: Vec<Gf3>,
    pub case: CaseLabel,
    /// Set when a preference list ran dry and `m + 1` was sent alone.
    pub fallback: bool,
}

impl TransmissionPlan {
    pub fn idle() -> Self {
        Self {
            support: Vec::new(),
            coeffs: Vec::new(),
            case: CaseLabel::Idle,
            fallback: false,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.support.is_empty()
    }

    pub fn vector(&self) -> CoeffVector {
        CoeffVector::from_pairs(
            self.support
                .iter()
                .zip(&self.coeffs)
                .map(|(&p, c)| (p, c.value())),
        )
    }
}

/// Status of one packet at one receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Decoded,
    HeardOnly,
    Unheard,
}

/// Index (1..=9) of the set a packet falls in, given its status at the first
/// and second non-leader.
pub fn classify(first: Membership, second: Membership) -> usize {
    use Membership::*;
    match (first, second) {
        (Decoded, Decoded) => 1,
        (Decoded, HeardOnly) => 2,
        (HeardOnly, Decoded) => 3,
        (HeardOnly, HeardOnly) => 4,
        (Decoded, Unheard) => 5,
        (Unheard, Decoded) => 6,
        (HeardOnly, Unheard) => 7,
        (Unheard, HeardOnly) => 8,
        (Unheard, Unheard) => 9,
    }
}

/// The nine-way partition of the universe `1..=universe` induced by the two
/// non-leaders.
///
/// Packets `1..=common_prefix` are decoded by both non-leaders and belong to
/// the first set without being stored; `sets[0]` only holds first-set members
/// above that prefix.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NineSetPartition {
    pub universe: PacketId,
    pub common_prefix: PacketId,
    sets: [BTreeSet<PacketId>; 9],
}

impl NineSetPartition {
    /// Builds the partition from explicit decoded/heard sets.
    pub fn from_sets(
        universe: PacketId,
        d1: &BTreeSet<PacketId>,
        h1: &BTreeSet<PacketId>,
        d2: &BTreeSet<PacketId>,
        h2: &BTreeSet<PacketId>,
    ) -> Self {
        let status = |d: &BTreeSet<PacketId>, h: &BTreeSet<PacketId>, p| {
            if d.contains(&p) {
                Membership::Decoded
            } else if h.contains(&p) {
                Membership::HeardOnly
            } else {
                Membership::Unheard
            }
        };
        let mut part = Self {
            universe,
            ..Self::default()
        };
        for p in 1..=universe {
            part.sets[classify(status(d1, h1, p), status(d2, h2, p)) - 1].insert(p);
        }
        part
    }

    /// Stored members of set `k` (1..=9). For `k = 1` this omits the common
    /// prefix; see [`full`](Self::full).
    pub fn set(&self, k: usize) -> &BTreeSet<PacketId> {
        &self.sets[k - 1]
    }

    pub fn full(&self, k: usize) -> BTreeSet<PacketId> {
        let mut s = self.sets[k - 1].clone();
        if k == 1 {
            s.extend(1..=self.common_prefix);
        }
        s
    }

    pub fn contains(&self, k: usize, p: PacketId) -> bool {
        (k == 1 && p >= 1 && p <= self.common_prefix) || self.sets[k - 1].contains(&p)
    }

    /// Set index containing `p`, if `p` is in the universe.
    pub fn which(&self, p: PacketId) -> Option<usize> {
        (1..=9).find(|&k| self.contains(k, p))
    }

    pub fn oldest(&self, k: usize) -> Option<PacketId> {
        if k == 1 && self.common_prefix >= 1 {
            return Some(1);
        }
        self.sets[k - 1].first().copied()
    }

    fn is_empty(&self, k: usize) -> bool {
        self.oldest(k).is_none()
    }
}

fn membership(r: &ReceiverState, heard_undecoded: &BTreeSet<PacketId>, p: PacketId) -> Membership {
    if r.is_decoded(p) {
        Membership::Decoded
    } else if heard_undecoded.contains(&p) {
        Membership::HeardOnly
    } else {
        Membership::Unheard
    }
}

/// The two receivers other than `leader`, lower index first.
fn non_leaders(leader: usize) -> (usize, usize) {
    match leader {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn universe_size(view: &SenderView, m: PacketId) -> PacketId {
    if view.arrived > m {
        m + 1
    } else {
        m
    }
}

/// Nine-set partition for the given unique leader. Only packets above the
/// non-leaders' common decoded prefix are visited.
pub fn partition_sets(view: &SenderView, leader: usize) -> NineSetPartition {
    let m = view.receivers[leader].rank() as PacketId;
    let universe = universe_size(view, m);
    let (a, b) = non_leaders(leader);
    let (ra, rb) = (&view.receivers[a], &view.receivers[b]);
    let (ha, hb) = (ra.heard_undecoded(), rb.heard_undecoded());
    let common_prefix = ra
        .basis
        .decoded_prefix()
        .min(rb.basis.decoded_prefix())
        .min(universe);

    let mut part = NineSetPartition {
        universe,
        common_prefix,
        ..NineSetPartition::default()
    };
    for p in (common_prefix + 1)..=universe {
        let k = classify(membership(ra, &ha, p), membership(rb, &hb, p));
        part.sets[k - 1].insert(p);
    }
    part
}

/// Lexicographically first coefficient tuple in {1,2}^k that makes the
/// combination innovative for every receiver still missing something.
pub fn choose_coefficients(support: &[PacketId], view: &SenderView) -> Result<Vec<Gf3>> {
    let k = support.len();
    let behind: Vec<&ReceiverState> = (0..RECEIVERS)
        .filter(|&r| !view.caught_up(r))
        .map(|r| &view.receivers[r])
        .collect();
    for mask in 0u32..(1 << k) {
        let coeffs: Vec<Gf3> = (0..k)
            .map(|i| {
                if mask >> (k - 1 - i) & 1 == 1 {
                    Gf3::TWO
                } else {
                    Gf3::ONE
                }
            })
            .collect();
        let v = CoeffVector::from_pairs(support.iter().zip(&coeffs).map(|(&p, c)| (p, c.value())));
        if behind.iter().all(|r| !r.basis.contains(&v)) {
            return Ok(coeffs);
        }
    }
    Err(Error::NoValidCoefficients {
        support: support.to_vec(),
        dump: view.dump(),
    })
}

fn plan(view: &SenderView, mut support: Vec<PacketId>, case: CaseLabel, fallback: bool) -> Result<TransmissionPlan> {
    if support.is_empty() {
        return Ok(TransmissionPlan::idle());
    }
    support.sort_unstable();
    support.dedup();
    let coeffs = choose_coefficients(&support, view)?;
    Ok(TransmissionPlan {
        support,
        coeffs,
        case,
        fallback,
    })
}

/// All three receivers share rank `m`.
pub fn select_all_leaders(view: &SenderView) -> Result<TransmissionPlan> {
    let m = view.receivers[0].rank() as PacketId;
    if view.arrived <= m {
        return Ok(TransmissionPlan::idle());
    }
    let bound = m + 1;
    let mut support = Vec::with_capacity(RECEIVERS);
    for r in &view.receivers {
        let unseen: Vec<PacketId> = (r.basis.decoded_prefix() + 1..=bound)
            .filter(|&p| !r.basis.is_pivot(p))
            .collect();
        if unseen.len() != 1 {
            return Err(Error::UnseenCount {
                receiver: r.id + 1,
                unseen: unseen.len(),
                bound,
                dump: view.dump(),
            });
        }
        support.push(unseen[0]);
    }
    plan(view, support, CaseLabel::AllLeaders, false)
}

/// Oldest undecoded packet of `r` within `1..=upto`, preferring packets it
/// has heard of.
fn oldest_undecoded(r: &ReceiverState, upto: PacketId) -> Option<PacketId> {
    let heard = r.heard_undecoded().into_iter().find(|&p| p <= upto);
    heard.or_else(|| (r.basis.decoded_prefix() + 1..=upto).find(|&p| !r.is_decoded(p)))
}

/// Exactly two receivers share the top rank `m`.
pub fn select_two_leaders(view: &SenderView) -> Result<TransmissionPlan> {
    let leaders = compute_leaders(view);
    let m = leaders.m;
    let (a, b) = (leaders.ids[0], leaders.ids[1]);
    let full = |r: usize| view.receivers[r].basis.decoded_prefix() >= m;
    match (full(a), full(b)) {
        (true, true) => {}
        (true, false) => return unique_leader(view, a, CaseLabel::TwoLeadersDelegate),
        (false, true) => return unique_leader(view, b, CaseLabel::TwoLeadersDelegate),
        (false, false) => {
            return Err(Error::LeaderDecode {
                m,
                dump: view.dump(),
            })
        }
    }

    let other = &view.receivers[3 - a - b];
    let next = m + 1;
    if view.arrived <= m {
        let support = oldest_undecoded(other, m).into_iter().collect();
        plan(view, support, CaseLabel::TwoLeadersA, false)
    } else if other.is_decoded(next) {
        match oldest_undecoded(other, m) {
            Some(x) => plan(view, vec![x, next], CaseLabel::TwoLeadersB, false),
            None => plan(view, vec![next], CaseLabel::TwoLeadersB, true),
        }
    } else {
        plan(view, vec![next], CaseLabel::TwoLeadersC, false)
    }
}

/// Selection used when packet `m + 1` is absent, and reused when it is
/// decoded by both non-leaders.
fn case_one(part: &NineSetPartition) -> Option<Vec<PacketId>> {
    if let Some(x) = part.oldest(4) {
        return Some(vec![x]);
    }
    for (i, j) in [(2, 3), (3, 5), (2, 6), (5, 6)] {
        if let (Some(x), Some(y)) = (part.oldest(i), part.oldest(j)) {
            return Some(vec![x, y]);
        }
    }
    [7, 8, 9, 2, 3, 5, 6]
        .into_iter()
        .find_map(|k| part.oldest(k))
        .map(|x| vec![x])
}

fn first_nonempty(part: &NineSetPartition, order: [usize; 6]) -> Option<PacketId> {
    order.into_iter().find(|&k| !part.is_empty(k)).and_then(|k| part.oldest(k))
}

fn unique_leader(view: &SenderView, leader: usize, label: CaseLabel) -> Result<TransmissionPlan> {
    let m = view.receivers[leader].rank() as PacketId;
    if view.receivers[leader].basis.decoded_prefix() < m {
        return Err(Error::LeaderDecode {
            m,
            dump: view.dump(),
        });
    }
    let part = partition_sets(view, leader);
    let next = m + 1;

    let (case, support, fallback) = if view.arrived <= m {
        (1, case_one(&part).unwrap_or_default(), false)
    } else {
        let with_next = |other: Option<PacketId>| match other {
            Some(x) => (vec![x, next], false),
            None => (vec![next], true),
        };
        let location = part.which(next).expect("m + 1 is in the universe");
        let (support, fallback) = match location {
            1 => match case_one(&part) {
                Some(mut s) => {
                    s.push(next);
                    (s, false)
                }
                None => (vec![next], true),
            },
            2 => with_next(first_nonempty(&part, [3, 4, 6, 8, 7, 9])),
            3 => with_next(first_nonempty(&part, [2, 4, 5, 7, 8, 9])),
            5 => with_next(first_nonempty(&part, [3, 6, 4, 8, 7, 9])),
            6 => with_next(first_nonempty(&part, [2, 5, 4, 7, 8, 9])),
            _ => (vec![next], false),
        };
        (location as u8 + 1, support, fallback)
    };

    let label = match label {
        CaseLabel::TwoLeadersDelegate => label,
        _ => CaseLabel::UniqueLeader(case),
    };
    plan(view, support, label, fallback)
}

/// A single receiver holds the top rank.
pub fn select_unique_leader(view: &SenderView) -> Result<TransmissionPlan> {
    let leaders = compute_leaders(view);
    unique_leader(view, leaders.ids[0], CaseLabel::UniqueLeader(0))
}

/// Decides this slot's transmission from the feedback-current view.
pub fn next_transmission(view: &SenderView) -> Result<TransmissionPlan> {
    if view.arrived == 0 {
        return Ok(TransmissionPlan::idle());
    }
    match compute_leaders(view).ids.len() {
        3 => select_all_leaders(view),
        2 => select_two_leaders(view),
        _ => select_unique_leader(view),
    }
}

/// Receivers not yet caught up for which `plan` carries nothing new.
pub fn non_innovative_receivers(view: &SenderView, plan: &TransmissionPlan) -> Vec<usize> {
    let v = plan.vector();
    (0..RECEIVERS)
        .filter(|&r| !view.caught_up(r) && view.receivers[r].basis.contains(&v))
        .collect()
}

/// Whether every packet in the plan has index at most `m + 1`.
pub fn within_index_bound(view: &SenderView, plan: &TransmissionPlan) -> bool {
    let m = compute_leaders(view).m;
    plan.support.iter().all(|&p| p <= m + 1)
}

/// Number of packets in the plan that receiver `r` has not decoded.
pub fn undecoded_in_support(view: &SenderView, plan: &TransmissionPlan, r: usize) -> usize {
    plan.support
        .iter()
        .filter(|&&p| !view.receivers[r].is_decoded(p))
        .count()
}

/// Whether some rank-`m` receiver has decoded all of `1..=m`.
pub fn leader_has_decoded_prefix(view: &SenderView) -> bool {
    let leaders = compute_leaders(view);
    leaders
        .ids
        .iter()
        .any(|&r| view.receivers[r].basis.decoded_prefix() >= leaders.m)
}
