//! Per-slot invariant checks on the coded broadcast.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::coding::{
    leader_has_decoded_prefix, non_innovative_receivers, undecoded_in_support, within_index_bound,
    SenderView, TransmissionPlan, RECEIVERS,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AssertLevel {
    /// Skip all checks.
    Off,
    /// Count violations and keep going.
    #[default]
    Monitor,
    /// Abort the run on the first hard violation.
    Strict,
}

impl FromStr for AssertLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(AssertLevel::Off),
            "monitor" => Ok(AssertLevel::Monitor),
            "strict" => Ok(AssertLevel::Strict),
            other => Err(Error::InvalidParameter(format!("unknown assert level {other:?}"))),
        }
    }
}

impl fmt::Display for AssertLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssertLevel::Off => "off",
            AssertLevel::Monitor => "monitor",
            AssertLevel::Strict => "strict",
        })
    }
}

/// Violation counters. Everything except the last three fields is a hard
/// invariant.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Violations {
    /// A receiver still missing packets got a combination it already knew.
    pub non_innovative: u64,
    /// The sender idled while some receiver was behind.
    pub idle_while_behind: u64,
    /// A transmission used a packet beyond `m + 1`.
    pub index_bound: u64,
    /// A transmission carried more than two undecoded packets for a receiver.
    pub undecoded_support: u64,
    /// No top-rank receiver had decoded `1..=m`.
    pub leader_decode: u64,
    /// Rank disagreed with the pivot count, or moved other than by +1 on an
    /// innovative reception.
    pub rank_seen: u64,
    /// Slots where both non-leaders had heard-but-undecoded packets.
    pub both_nonleaders_mixed: u64,
    /// Slots where a preference list ran dry and `m + 1` went out alone.
    pub fallbacks: u64,
    /// Slots that went through the nine-set rules.
    pub partition_slots: u64,
}

impl Violations {
    pub fn hard_total(&self) -> u64 {
        self.non_innovative
            + self.idle_while_behind
            + self.index_bound
            + self.undecoded_support
            + self.leader_decode
            + self.rank_seen
    }

    pub fn merge(&mut self, other: &Violations) {
        self.non_innovative += other.non_innovative;
        self.idle_while_behind += other.idle_while_behind;
        self.index_bound += other.index_bound;
        self.undecoded_support += other.undecoded_support;
        self.leader_decode += other.leader_decode;
        self.rank_seen += other.rank_seen;
        self.both_nonleaders_mixed += other.both_nonleaders_mixed;
        self.fallbacks += other.fallbacks;
        self.partition_slots += other.partition_slots;
    }
}

#[derive(Clone, Debug, Default)]
pub struct Monitor {
    pub level: AssertLevel,
    pub counts: Violations,
}

impl Monitor {
    pub fn new(level: AssertLevel) -> Self {
        Self {
            level,
            counts: Violations::default(),
        }
    }

    pub fn enabled(&self) -> bool {
        self.level != AssertLevel::Off
    }

    fn hard(&self, slot: u64, kind: &'static str, view: &SenderView) -> Result<()> {
        if self.level == AssertLevel::Strict {
            return Err(Error::Invariant {
                slot,
                kind,
                dump: view.dump(),
            });
        }
        Ok(())
    }

    /// Checks made before the channel acts, against the state the sender
    /// decided from.
    pub fn before_delivery(&mut self, slot: u64, view: &SenderView, plan: &TransmissionPlan) -> Result<()> {
        if !self.enabled() {
            return Ok(());
        }
        if !leader_has_decoded_prefix(view) {
            self.counts.leader_decode += 1;
            self.hard(slot, "leader-decode", view)?;
        }
        if plan.fallback {
            self.counts.fallbacks += 1;
        }
        if let Some(leader) = view.partition_leader() {
            self.counts.partition_slots += 1;
            let mut others = (0..RECEIVERS).filter(|&r| r != leader);
            let both = others.all(|r| view.receivers[r].basis.has_mixed_rows());
            if both {
                self.counts.both_nonleaders_mixed += 1;
            }
        }
        if plan.is_idle() {
            if (0..RECEIVERS).any(|r| !view.caught_up(r)) {
                self.counts.idle_while_behind += 1;
                self.hard(slot, "idle while a receiver is behind", view)?;
            }
            return Ok(());
        }
        if !within_index_bound(view, plan) {
            self.counts.index_bound += 1;
            self.hard(slot, "support index above m+1", view)?;
        }
        if (0..RECEIVERS).any(|r| undecoded_in_support(view, plan, r) > 2) {
            self.counts.undecoded_support += 1;
            self.hard(slot, "more than two undecoded packets in support", view)?;
        }
        if !non_innovative_receivers(view, plan).is_empty() {
            self.counts.non_innovative += 1;
            self.hard(slot, "non-innovative transmission", view)?;
        }
        Ok(())
    }

    /// Rank bookkeeping after one receiver processed a delivery.
    pub fn after_reception(
        &mut self,
        slot: u64,
        view: &SenderView,
        r: usize,
        rank_before: usize,
        innovative: bool,
    ) -> Result<()> {
        if !self.enabled() {
            return Ok(());
        }
        let basis = &view.receivers[r].basis;
        let expected = rank_before + usize::from(innovative);
        if basis.rank() != expected || !basis.is_echelon() {
            self.counts.rank_seen += 1;
            self.hard(slot, "rank / seen-count mismatch", view)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf3::CoeffVector;
    use crate::knowledge::ReceiverState;

    #[test]
    fn parse_levels() {
        assert_eq!("strict".parse::<AssertLevel>().unwrap(), AssertLevel::Strict);
        assert!("loud".parse::<AssertLevel>().is_err());
        assert_eq!(AssertLevel::default().to_string(), "monitor");
    }

    #[test]
    fn flags_non_innovative_plan() {
        let view = SenderView::with_receivers(
            2,
            [
                ReceiverState::with_rows(0, [CoeffVector::unit(1)]),
                ReceiverState::new(1),
                ReceiverState::new(2),
            ],
        );
        let plan = TransmissionPlan {
            support: vec![1],
            coeffs: vec![crate::gf3::Gf3::ONE],
            case: crate::coding::CaseLabel::UniqueLeader(1),
            fallback: false,
        };
        let mut m = Monitor::new(AssertLevel::Monitor);
        m.before_delivery(1, &view, &plan).unwrap();
        assert_eq!(m.counts.non_innovative, 1);
        assert_eq!(m.counts.hard_total(), 1);

        let mut m = Monitor::new(AssertLevel::Strict);
        assert!(matches!(m.before_delivery(1, &view, &plan), Err(Error::Invariant { .. })));

        let mut m = Monitor::new(AssertLevel::Off);
        m.before_delivery(1, &view, &plan).unwrap();
        assert_eq!(m.counts, Violations::default());
    }

    #[test]
    fn flags_idle_while_behind() {
        let view = SenderView::with_receivers(1, Default::default());
        let mut m = Monitor::new(AssertLevel::Monitor);
        m.before_delivery(3, &view, &TransmissionPlan::idle()).unwrap();
        assert_eq!(m.counts.idle_while_behind, 1);
    }
}
