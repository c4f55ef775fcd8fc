use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// A protocol participant. Client ids are dense from 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PartyId {
    Server,
    Client(u32),
}

impl PartyId {
    pub(crate) const SERVER_WIRE: u32 = u32::MAX;

    pub fn to_wire(self) -> u32 {
        match self {
            PartyId::Server => Self::SERVER_WIRE,
            PartyId::Client(id) => id,
        }
    }

    pub fn from_wire(v: u32) -> PartyId {
        if v == Self::SERVER_WIRE {
            PartyId::Server
        } else {
            PartyId::Client(v)
        }
    }

    pub fn is_server(self) -> bool {
        self == PartyId::Server
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyId::Server => f.write_str("server"),
            PartyId::Client(id) => write!(f, "client {id}"),
        }
    }
}

/// Message body. No variant can hold a raw view or label matrix as such:
/// every matrix here is a model quantity (`Z`, `Z_k`, `W_k`, `w`).
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    ConsensusZ(Matrix),
    PseudoLabel { zeta: f64, z: Matrix },
    TransformSet(Vec<Matrix>),
    ParamVector { view: u32, w: Vec<f64> },
    TestConsensus(Matrix),
    TestPseudoLabel { zeta: f64, z: Matrix },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    ConsensusZ,
    PseudoLabel,
    TransformSet,
    ParamVector,
    TestConsensus,
    TestPseudoLabel,
}

impl MessageKind {
    pub const ALL: [MessageKind; 6] = [
        MessageKind::ConsensusZ,
        MessageKind::PseudoLabel,
        MessageKind::TransformSet,
        MessageKind::ParamVector,
        MessageKind::TestConsensus,
        MessageKind::TestPseudoLabel,
    ];

    pub fn tag(self) -> u8 {
        match self {
            MessageKind::ConsensusZ => 1,
            MessageKind::PseudoLabel => 2,
            MessageKind::TransformSet => 3,
            MessageKind::ParamVector => 4,
            MessageKind::TestConsensus => 5,
            MessageKind::TestPseudoLabel => 6,
        }
    }

    pub fn from_tag(tag: u8) -> Option<MessageKind> {
        MessageKind::ALL.into_iter().find(|k| k.tag() == tag)
    }

    pub fn name(self) -> &'static str {
        match self {
            MessageKind::ConsensusZ => "ConsensusZ",
            MessageKind::PseudoLabel => "PseudoLabel",
            MessageKind::TransformSet => "TransformSet",
            MessageKind::ParamVector => "ParamVector",
            MessageKind::TestConsensus => "TestConsensus",
            MessageKind::TestPseudoLabel => "TestPseudoLabel",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Payload {
    pub fn kind(&self) -> MessageKind {
        match self {
            Payload::ConsensusZ(_) => MessageKind::ConsensusZ,
            Payload::PseudoLabel { .. } => MessageKind::PseudoLabel,
            Payload::TransformSet(_) => MessageKind::TransformSet,
            Payload::ParamVector { .. } => MessageKind::ParamVector,
            Payload::TestConsensus(_) => MessageKind::TestConsensus,
            Payload::TestPseudoLabel { .. } => MessageKind::TestPseudoLabel,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Payload::ConsensusZ(m) | Payload::TestConsensus(m) => m.is_finite(),
            Payload::PseudoLabel { zeta, z } | Payload::TestPseudoLabel { zeta, z } => {
                zeta.is_finite() && z.is_finite()
            }
            Payload::TransformSet(ms) => ms.iter().all(Matrix::is_finite),
            Payload::ParamVector { w, .. } => w.iter().all(|v| v.is_finite()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FedMessage {
    pub round: u32,
    pub sender: PartyId,
    pub payload: Payload,
}

impl FedMessage {
    pub fn new(round: u32, sender: PartyId, payload: Payload) -> Self {
        FedMessage { round, sender, payload }
    }

    pub fn kind(&self) -> MessageKind {
        self.payload.kind()
    }
}

/// Which federated protocol is running; fixes the message allowlist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Protocol {
    Vertical,
    Horizontal,
    Sequential,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Vertical => "vertical",
            Protocol::Horizontal => "horizontal",
            Protocol::Sequential => "sequential",
        }
    }

    /// Kinds each side may send.
    pub fn allowed(self, sender: PartyId) -> &'static [MessageKind] {
        use MessageKind::*;
        match (self, sender.is_server()) {
            (Protocol::Vertical, true) => &[ConsensusZ, TestConsensus],
            (Protocol::Vertical, false) => &[PseudoLabel, TestPseudoLabel],
            (Protocol::Horizontal, _) => &[TransformSet],
            (Protocol::Sequential, _) => &[ParamVector],
        }
    }

    pub fn allows(self, sender: PartyId, kind: MessageKind) -> bool {
        self.allowed(sender).contains(&kind)
    }

    pub fn check(self, msg: &FedMessage) -> Result<()> {
        if self.allows(msg.sender, msg.kind()) {
            Ok(())
        } else {
            Err(Error::Disallowed {
                kind: msg.kind().name(),
                sender: msg.sender,
                protocol: self.name(),
            })
        }
    }
}
