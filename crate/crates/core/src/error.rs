use thiserror::Error;

use crate::gf3::PacketId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero has no multiplicative inverse in GF(3)")]
    ZeroInverse,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no coefficients in {{1,2}} make support {support:?} innovative for every receiver\n{dump}")]
    NoValidCoefficients { support: Vec<PacketId>, dump: String },

    #[error("no rank-{m} leader has decoded packets 1..={m}\n{dump}")]
    LeaderDecode { m: PacketId, dump: String },

    #[error("receiver {receiver} has {unseen} unseen packets among 1..={bound} with all receivers at equal rank\n{dump}")]
    UnseenCount {
        receiver: usize,
        unseen: usize,
        bound: PacketId,
        dump: String,
    },

    #[error("slot {slot}: invariant violated: {kind}\n{dump}")]
    Invariant {
        slot: u64,
        kind: &'static str,
        dump: String,
    },

    #[error("statistics need at least one packet")]
    NoPackets,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
