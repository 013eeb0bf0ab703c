//! Slotted-time simulation of the erasure broadcast channel.
//!
//! Within a slot: a packet may arrive, the sender picks its transmission from
//! feedback-current state, each receiver independently gets it with
//! probability `mu`, feedback updates the sender, and packets every receiver
//! has decoded leave the queue.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coding::{next_transmission, CaseLabel, SenderView, TransmissionPlan, RECEIVERS};
use crate::error::{Error, Result};
use crate::gf3::{Gf3, PacketId};
use crate::monitor::{AssertLevel, Monitor, Violations};

/// Name of the random generator and seeding scheme, echoed in reports.
pub const RNG_NAME: &str = "rand_chacha::ChaCha8Rng::seed_from_u64";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    #[default]
    ThreeRxCoded,
    SingleRxArq,
}

impl Mode {
    pub fn receivers(self) -> usize {
        match self {
            Mode::ThreeRxCoded => RECEIVERS,
            Mode::SingleRxArq => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    /// Arrival probability per slot.
    pub lambda: f64,
    /// Per-receiver delivery probability per slot.
    pub mu: f64,
    /// Number of slots during which packets may arrive.
    pub slots: u64,
    pub seed: u64,
    pub mode: Mode,
    /// Keep running without arrivals until the queue empties.
    pub drain: bool,
    pub assert_level: AssertLevel,
    /// Keep the per-slot trace in memory.
    #[serde(skip)]
    pub record_trace: bool,
}

impl SimConfig {
    pub fn new(lambda: f64, mu: f64, slots: u64, seed: u64) -> Self {
        Self {
            lambda,
            mu,
            slots,
            seed,
            mode: Mode::ThreeRxCoded,
            drain: true,
            assert_level: AssertLevel::Monitor,
            record_trace: false,
        }
    }

    /// Configuration with `lambda = rho * mu`.
    pub fn from_rho(rho: f64, mu: f64, slots: u64, seed: u64) -> Self {
        Self::new(rho * mu, mu, slots, seed)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    pub fn with_assert_level(mut self, level: AssertLevel) -> Self {
        self.assert_level = level;
        self
    }

    pub fn with_drain(mut self, drain: bool) -> Self {
        self.drain = drain;
        self
    }

    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }

    /// The queue only has a steady state below full load.
    pub fn is_stable(&self) -> bool {
        self.rho() < 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidParameter(format!("lambda = {} outside [0, 1]", self.lambda)));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidParameter(format!("mu = {} outside (0, 1]", self.mu)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotRecord {
    pub slot: u64,
    pub arrival: bool,
    pub plan: TransmissionPlan,
    pub delivered: [bool; RECEIVERS],
    pub ranks: [u32; RECEIVERS],
    pub queue: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PacketRecord {
    pub id: PacketId,
    pub arrival_slot: u64,
    pub decode_slot: [Option<u64>; RECEIVERS],
    pub drop_slot: Option<u64>,
}

impl PacketRecord {
    pub fn new(id: PacketId, arrival_slot: u64) -> Self {
        Self {
            id,
            arrival_slot,
            decode_slot: [None; RECEIVERS],
            drop_slot: None,
        }
    }

    /// Slots from arrival until receiver `r` decoded it.
    pub fn delay(&self, r: usize) -> Option<u64> {
        self.decode_slot[r].map(|d| d - self.arrival_slot)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: SimConfig,
    /// Empty unless `config.record_trace`.
    pub trace: Vec<SlotRecord>,
    pub packets: Vec<PacketRecord>,
    /// Queue length at the end of every slot, drain slots included.
    pub queue: Vec<u32>,
    pub violations: Violations,
}

impl RunOutput {
    pub fn receivers(&self) -> usize {
        self.config.mode.receivers()
    }

    /// Queue samples from the arrival phase, skipping the first `warmup` slots.
    pub fn arrival_phase_queue(&self, warmup: u64) -> &[u32] {
        let end = (self.config.slots as usize).min(self.queue.len());
        let start = (warmup as usize).min(end);
        &self.queue[start..end]
    }
}

fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    // One uniform draw per trial, so the draw sequence does not depend on p.
    rng.gen::<f64>() < p
}

/// Three-receiver coded broadcast with drop-when-decoded queueing.
pub struct BroadcastSim {
    config: SimConfig,
    rng: ChaCha8Rng,
    view: SenderView,
    packets: Vec<PacketRecord>,
    dropped: u64,
    slot: u64,
    monitor: Monitor,
    scratch: Vec<PacketId>,
}

impl BroadcastSim {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            monitor: Monitor::new(config.assert_level),
            config,
            view: SenderView::new(),
            packets: Vec::new(),
            dropped: 0,
            slot: 0,
            scratch: Vec::new(),
        })
    }

    pub fn view(&self) -> &SenderView {
        &self.view
    }

    pub fn packets(&self) -> &[PacketRecord] {
        &self.packets
    }

    pub fn violations(&self) -> &Violations {
        &self.monitor.counts
    }

    pub fn queue_len(&self) -> u32 {
        (self.view.arrived as u64 - self.dropped) as u32
    }

    /// Advances one slot; `arrivals` gates the arrival draw (off while draining).
    pub fn step(&mut self, arrivals: bool) -> Result<SlotRecord> {
        self.slot += 1;
        let slot = self.slot;

        let arrival = arrivals && bernoulli(&mut self.rng, self.config.lambda);
        if arrival {
            self.view.arrived += 1;
            self.packets.push(PacketRecord::new(self.view.arrived, slot));
        }

        let plan = next_transmission(&self.view)?;
        self.monitor.before_delivery(slot, &self.view, &plan)?;

        let mut delivered = [false; RECEIVERS];
        if !plan.is_idle() {
            let v = plan.vector();
            for (r, got) in delivered.iter_mut().enumerate() {
                *got = bernoulli(&mut self.rng, self.config.mu);
                if !*got {
                    continue;
                }
                let rank_before = self.view.receivers[r].rank();
                self.scratch.clear();
                let innovative = self.view.receivers[r].receive_tracking(&v, &mut self.scratch);
                self.monitor
                    .after_reception(slot, &self.view, r, rank_before, innovative)?;
                for &p in &self.scratch {
                    let rec = &mut self.packets[p as usize - 1];
                    rec.decode_slot[r] = Some(slot);
                    if rec.decode_slot.iter().all(Option::is_some) {
                        rec.drop_slot = Some(slot);
                        self.dropped += 1;
                    }
                }
            }
        }

        let ranks = self.view.ranks().map(|r| r as u32);
        Ok(SlotRecord {
            slot,
            arrival,
            plan,
            delivered,
            ranks,
            queue: self.queue_len(),
        })
    }

    pub fn into_packets(self) -> (Vec<PacketRecord>, Violations) {
        (self.packets, self.monitor.counts)
    }
}

/// Runs `config.slots` arrival slots, then drains if requested.
pub fn run(config: &SimConfig) -> Result<RunOutput> {
    match config.mode {
        Mode::ThreeRxCoded => run_coded(config),
        Mode::SingleRxArq => run_arq_single(config),
    }
}

fn run_coded(config: &SimConfig) -> Result<RunOutput> {
    let mut sim = BroadcastSim::new(config.clone())?;
    let mut trace = Vec::new();
    let mut queue = Vec::with_capacity(config.slots as usize);
    let mut slot = 0u64;
    while slot < config.slots || (config.drain && sim.queue_len() > 0) {
        let rec = sim.step(slot < config.slots)?;
        queue.push(rec.queue);
        if config.record_trace {
            trace.push(rec);
        }
        slot += 1;
    }
    let (packets, violations) = sim.into_packets();
    Ok(RunOutput {
        config: config.clone(),
        trace,
        packets,
        queue,
        violations,
    })
}

/// Single receiver, no coding: retransmit the head-of-line packet until it
/// gets through. Same slot ordering and draw order as the coded system.
pub fn run_arq_single(config: &SimConfig) -> Result<RunOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut fifo: VecDeque<PacketId> = VecDeque::new();
    let mut packets: Vec<PacketRecord> = Vec::new();
    let mut trace = Vec::new();
    let mut queue = Vec::with_capacity(config.slots as usize);
    let mut delivered_total = 0u32;
    let mut slot = 0u64;

    while slot < config.slots || (config.drain && !fifo.is_empty()) {
        slot += 1;
        let arrival = slot <= config.slots && bernoulli(&mut rng, config.lambda);
        if arrival {
            let id = packets.len() as PacketId + 1;
            packets.push(PacketRecord::new(id, slot));
            fifo.push_back(id);
        }
        let mut plan = TransmissionPlan::idle();
        let mut delivered = [false; RECEIVERS];
        if let Some(&head) = fifo.front() {
            plan = TransmissionPlan {
                support: vec![head],
                coeffs: vec![Gf3::ONE],
                case: CaseLabel::Arq,
                fallback: false,
            };
            if bernoulli(&mut rng, config.mu) {
                delivered[0] = true;
                fifo.pop_front();
                delivered_total += 1;
                let rec = &mut packets[head as usize - 1];
                rec.decode_slot[0] = Some(slot);
                rec.drop_slot = Some(slot);
            }
        }
        queue.push(fifo.len() as u32);
        if config.record_trace {
            trace.push(SlotRecord {
                slot,
                arrival,
                plan,
                delivered,
                ranks: [delivered_total, 0, 0],
                queue: fifo.len() as u32,
            });
        }
    }

    Ok(RunOutput {
        config: config.clone(),
        trace,
        packets,
        queue,
        violations: Violations::default(),
    })
}
