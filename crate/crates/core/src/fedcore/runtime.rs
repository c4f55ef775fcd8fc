use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use super::message::{FedMessage, MessageKind, PartyId, Payload, Protocol};
use super::transport::Transport;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

pub trait ServerRole {
    /// Payload sent to every client at the start of `round`, if any.
    fn broadcast(&mut self, round: u32) -> Result<Option<Payload>>;

    /// Consumes the round's client messages, ordered by ascending client id.
    fn aggregate(&mut self, round: u32, inbox: Vec<FedMessage>) -> Result<Control>;
}

pub trait ClientRole: Send {
    /// Local computation for `round`, given the server's broadcast.
    fn step(&mut self, round: u32, broadcast: Option<&FedMessage>) -> Result<Payload>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageRecord {
    pub from: PartyId,
    pub to: PartyId,
    pub kind: MessageKind,
    pub bytes: usize,
}

#[derive(Clone, Debug)]
pub struct RoundRecord {
    pub round: u32,
    pub messages: Vec<MessageRecord>,
    pub wall_time: Duration,
}

/// Append-only record of every message a run exchanged.
#[derive(Clone, Debug, Default)]
pub struct RoundLog {
    rounds: Vec<RoundRecord>,
}

impl RoundLog {
    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn messages(&self) -> impl Iterator<Item = &MessageRecord> {
        self.rounds.iter().flat_map(|r| r.messages.iter())
    }

    pub fn message_count(&self) -> usize {
        self.messages().count()
    }

    pub fn total_bytes(&self) -> usize {
        self.messages().map(|m| m.bytes).sum()
    }

    pub fn bytes_sent_by(&self, party: PartyId) -> usize {
        self.messages().filter(|m| m.from == party).map(|m| m.bytes).sum()
    }

    pub fn kinds(&self) -> BTreeSet<MessageKind> {
        self.messages().map(|m| m.kind).collect()
    }

    /// Appends the rounds of a later phase.
    pub fn extend(&mut self, other: RoundLog) {
        self.rounds.extend(other.rounds);
    }

    /// Every round and message except wall times.
    pub fn fingerprint(&self) -> String {
        let mut s = String::new();
        for r in &self.rounds {
            let _ = write!(s, "r{}:", r.round);
            for m in &r.messages {
                let _ = write!(s, "{}>{}:{}:{};", m.from.to_wire(), m.to.to_wire(), m.kind.tag(), m.bytes);
            }
            s.push('\n');
        }
        s
    }
}

fn missing(expected: usize, actual: usize) -> Error {
    Error::MissingClient { expected, actual }
}

/// Runs up to `max_rounds` lock-step rounds (numbered from 1): broadcast,
/// client steps in parallel, barrier, aggregation in ascending client order.
/// Every message is checked against the protocol's allowlist.
pub fn run_rounds<C: ClientRole>(
    transport: &dyn Transport,
    protocol: Protocol,
    server: &mut dyn ServerRole,
    clients: &mut [C],
    max_rounds: u32,
) -> Result<RoundLog> {
    let mut log = RoundLog::default();
    for round in 1..=max_rounds {
        let start = Instant::now();
        let mut records = Vec::new();

        let ids: Vec<PartyId> = (0..clients.len() as u32).map(PartyId::Client).collect();
        if let Some(payload) = server.broadcast(round)? {
            let msg = FedMessage::new(round, PartyId::Server, payload);
            protocol.check(&msg)?;
            for &to in &ids {
                let bytes = transport.send(to, msg.clone())?;
                records.push(MessageRecord {
                    from: PartyId::Server,
                    to,
                    kind: msg.kind(),
                    bytes,
                });
            }
        }

        let outcomes: Vec<Result<MessageRecord>> = std::thread::scope(|scope| {
            let handles: Vec<_> = clients
                .iter_mut()
                .zip(&ids)
                .map(|(client, &me)| {
                    scope.spawn(move || -> Result<MessageRecord> {
                        let inbound = transport.receive(PartyId::Server, me)?;
                        let payload = client.step(round, inbound.as_ref())?;
                        let msg = FedMessage::new(round, me, payload);
                        protocol.check(&msg)?;
                        let kind = msg.kind();
                        let bytes = transport.send(PartyId::Server, msg)?;
                        Ok(MessageRecord {
                            from: me,
                            to: PartyId::Server,
                            kind,
                            bytes,
                        })
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
                .collect()
        });
        for (outcome, &party) in outcomes.into_iter().zip(&ids) {
            match outcome {
                Ok(r) => records.push(r),
                Err(e) => {
                    return Err(Error::PartyFailure {
                        round,
                        party,
                        source: Box::new(e),
                    })
                }
            }
        }

        let mut inbox = Vec::with_capacity(ids.len());
        for &from in &ids {
            if let Some(m) = transport.receive(from, PartyId::Server)? {
                inbox.push(m);
            }
        }
        if inbox.len() != ids.len() {
            return Err(missing(ids.len(), inbox.len()));
        }
        let control = server.aggregate(round, inbox)?;
        log.rounds.push(RoundRecord {
            round,
            messages: records,
            wall_time: start.elapsed(),
        });
        if control == Control::Stop {
            break;
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fedcore::transport::{FramedTransport, InProcessTransport};
    use crate::numerics::{Matrix, RngSeed};

    struct EchoServer {
        sent: Vec<Matrix>,
        got: Vec<Matrix>,
    }

    impl ServerRole for EchoServer {
        fn broadcast(&mut self, round: u32) -> Result<Option<Payload>> {
            let m = Matrix::gaussian(3, 2, RngSeed(round as u64));
            self.sent.push(m.clone());
            Ok(Some(Payload::TransformSet(vec![m])))
        }

        fn aggregate(&mut self, _round: u32, inbox: Vec<FedMessage>) -> Result<Control> {
            if let Payload::TransformSet(ms) = &inbox[0].payload {
                self.got.extend(ms.first().cloned());
            }
            Ok(Control::Continue)
        }
    }

    struct Echo;

    impl ClientRole for Echo {
        fn step(&mut self, _round: u32, b: Option<&FedMessage>) -> Result<Payload> {
            Ok(b.expect("broadcast").payload.clone())
        }
    }

    struct Failing;

    impl ClientRole for Failing {
        fn step(&mut self, round: u32, _b: Option<&FedMessage>) -> Result<Payload> {
            if round == 2 {
                Err(Error::EmptyBatch)
            } else {
                Ok(Payload::TransformSet(vec![]))
            }
        }
    }

    #[test]
    fn zero_rounds_is_empty() {
        let mut s = EchoServer { sent: vec![], got: vec![] };
        let log = run_rounds(&InProcessTransport::new(), Protocol::Horizontal, &mut s, &mut [Echo], 0).unwrap();
        assert_eq!(log.num_rounds(), 0);
        assert_eq!(log.message_count(), 0);
    }

    #[test]
    fn echo_round_trips() {
        for t in [&InProcessTransport::new() as &dyn Transport, &FramedTransport::new()] {
            let mut s = EchoServer { sent: vec![], got: vec![] };
            let log = run_rounds(t, Protocol::Horizontal, &mut s, &mut [Echo, Echo], 3).unwrap();
            assert_eq!(s.sent, s.got);
            assert_eq!(log.message_count(), 12);
            assert_eq!(log.kinds().into_iter().collect::<Vec<_>>(), vec![MessageKind::TransformSet]);
        }
    }

    #[test]
    fn client_failure_carries_round() {
        let mut s = EchoServer { sent: vec![], got: vec![] };
        let err = run_rounds(&InProcessTransport::new(), Protocol::Horizontal, &mut s, &mut [Failing], 5).unwrap_err();
        assert!(matches!(err, Error::PartyFailure { round: 2, party: PartyId::Client(0), .. }), "{err}");
    }

    #[test]
    fn disallowed_kind_rejected() {
        let mut s = EchoServer { sent: vec![], got: vec![] };
        let err = run_rounds(&InProcessTransport::new(), Protocol::Sequential, &mut s, &mut [Echo], 1).unwrap_err();
        assert!(matches!(err, Error::Disallowed { .. }));
    }

    #[test]
    fn fingerprint_is_deterministic() {
        let run = || {
            let mut s = EchoServer { sent: vec![], got: vec![] };
            run_rounds(&FramedTransport::new(), Protocol::Horizontal, &mut s, &mut [Echo, Echo, Echo], 4)
                .unwrap()
                .fingerprint()
        };
        assert_eq!(run(), run());
    }
}
