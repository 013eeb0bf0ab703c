//! Trace and packet CSV files.
//!
//! Trace columns: `slot,arrival,case_label,support,rx1_recv,rx2_recv,rx3_recv,rank1,rank2,rank3,queue`.
//! `support` is `i:c|j:c` or `-` when idle. Packet columns:
//! `id,arrival_slot,decode1,decode2,decode3,drop_slot`, with `-1` for a slot
//! that never happened (undrained runs, or receivers 2 and 3 under ARQ).

use std::io::{self, Write};

use crate::sim::{PacketRecord, SlotRecord};

pub const TRACE_HEADER: &str =
    "slot,arrival,case_label,support,rx1_recv,rx2_recv,rx3_recv,rank1,rank2,rank3,queue";
pub const PACKET_HEADER: &str = "id,arrival_slot,decode1,decode2,decode3,drop_slot";

pub fn write_trace_csv<W: Write>(mut w: W, trace: &[SlotRecord]) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for t in trace {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            t.slot,
            u8::from(t.arrival),
            t.plan.case,
            t.plan.vector(),
            u8::from(t.delivered[0]),
            u8::from(t.delivered[1]),
            u8::from(t.delivered[2]),
            t.ranks[0],
            t.ranks[1],
            t.ranks[2],
            t.queue
        )?;
    }
    w.flush()
}

fn slot_or_missing(s: Option<u64>) -> i64 {
    s.map_or(-1, |v| v as i64)
}

pub fn write_packets_csv<W: Write>(mut w: W, packets: &[PacketRecord]) -> io::Result<()> {
    writeln!(w, "{PACKET_HEADER}")?;
    for p in packets {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            p.id,
            p.arrival_slot,
            slot_or_missing(p.decode_slot[0]),
            slot_or_missing(p.decode_slot[1]),
            slot_or_missing(p.decode_slot[2]),
            slot_or_missing(p.drop_slot)
        )?;
    }
    w.flush()
}
