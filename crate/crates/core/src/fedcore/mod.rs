//! Federation substrate: messages, wire format, transports and the
//! lock-step round runtime.

mod aggregate;
mod message;
mod runtime;
mod transport;
pub mod wire;

pub use aggregate::{aggregation_weights, weighted_average};
pub use message::{FedMessage, MessageKind, PartyId, Payload, Protocol};
pub use runtime::{run_rounds, ClientRole, Control, MessageRecord, RoundLog, RoundRecord, ServerRole};
pub use transport::{FramedTransport, InProcessTransport, Transport};
pub use wire::{decode_message, encode_message};
