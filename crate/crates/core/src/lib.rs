//! Feedback-adaptive network coding over GF(3) for a packet erasure
//! broadcast channel with three receivers.
//!
//! The sender sees every receiver's knowledge through perfect per-slot
//! feedback and picks, each slot, an uncoded packet or a sum of a few packets
//! so that every receiver still missing data learns something new, while
//! steering receivers toward decoding packets early. Around the coding rule
//! sit a slotted-time simulator with drop-when-decoded queueing, a
//! single-receiver ARQ baseline, and the statistics needed to study how
//! decoding delay grows as the load approaches capacity.

pub mod analytics;
pub mod batch;
pub mod coding;
pub mod error;
pub mod gf3;
pub mod knowledge;
pub mod monitor;
pub mod output;
pub mod sim;
pub mod sweep;

pub use analytics::{analytic_delay, analytic_queue, loglog_slope, summarize, ScalingPoint, StatsReport};
pub use coding::{next_transmission, CaseLabel, SenderView, TransmissionPlan};
pub use error::{Error, Result};
pub use gf3::{CoeffVector, Gf3, KnowledgeBasis, PacketId};
pub use knowledge::{ClassPartition, ReceiverState};
pub use monitor::{AssertLevel, Violations};
pub use sim::{run, run_arq_single, Mode, PacketRecord, RunOutput, SimConfig, SlotRecord};
