use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use super::message::{FedMessage, PartyId};
use super::wire::{decode_message, encode_message, encoded_len};
use crate::error::Result;

/// Point-to-point message delivery with per-link FIFO order.
pub trait Transport: Send + Sync {
    /// Queues `msg` for `to`; returns the encoded frame size in bytes.
    fn send(&self, to: PartyId, msg: FedMessage) -> Result<usize>;

    /// Next message on the `from → to` link, if any.
    fn receive(&self, from: PartyId, to: PartyId) -> Result<Option<FedMessage>>;
}

type Link = (PartyId, PartyId);

/// Queues of owned messages. Delivery moves the value, so receivers never
/// alias sender state.
#[derive(Default)]
pub struct InProcessTransport {
    queues: Mutex<HashMap<Link, VecDeque<FedMessage>>>,
}

impl InProcessTransport {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Transport for InProcessTransport {
    fn send(&self, to: PartyId, msg: FedMessage) -> Result<usize> {
        let bytes = encoded_len(&msg);
        let mut q = self.queues.lock().unwrap_or_else(|e| e.into_inner());
        q.entry((msg.sender, to)).or_default().push_back(msg);
        Ok(bytes)
    }

    fn receive(&self, from: PartyId, to: PartyId) -> Result<Option<FedMessage>> {
        let mut q = self.queues.lock().unwrap_or_else(|e| e.into_inner());
        Ok(q.get_mut(&(from, to)).and_then(VecDeque::pop_front))
    }
}

/// Encodes every message to its wire frame on send and decodes it on
/// receive. Optionally keeps a copy of every frame sent.
#[derive(Default)]
pub struct FramedTransport {
    queues: Mutex<HashMap<Link, VecDeque<Vec<u8>>>>,
    capture: Option<Mutex<Vec<Vec<u8>>>>,
}

impl FramedTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn capturing() -> Self {
        FramedTransport {
            queues: Mutex::default(),
            capture: Some(Mutex::default()),
        }
    }

    /// Frames sent so far, in send order (empty unless capturing).
    pub fn captured_frames(&self) -> Vec<Vec<u8>> {
        self.capture
            .as_ref()
            .map(|c| c.lock().unwrap_or_else(|e| e.into_inner()).clone())
            .unwrap_or_default()
    }
}

impl Transport for FramedTransport {
    fn send(&self, to: PartyId, msg: FedMessage) -> Result<usize> {
        let frame = encode_message(&msg)?;
        let n = frame.len();
        if let Some(c) = &self.capture {
            c.lock().unwrap_or_else(|e| e.into_inner()).push(frame.clone());
        }
        let mut q = self.queues.lock().unwrap_or_else(|e| e.into_inner());
        q.entry((msg.sender, to)).or_default().push_back(frame);
        Ok(n)
    }

    fn receive(&self, from: PartyId, to: PartyId) -> Result<Option<FedMessage>> {
        let frame = {
            let mut q = self.queues.lock().unwrap_or_else(|e| e.into_inner());
            q.get_mut(&(from, to)).and_then(VecDeque::pop_front)
        };
        frame.map(|f| decode_message(&f)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fedcore::message::Payload;
    use crate::fedcore::wire::{read_frame, write_frame};
    use crate::numerics::{Matrix, RngSeed};

    fn msg(round: u32, from: PartyId) -> FedMessage {
        FedMessage::new(round, from, Payload::ConsensusZ(Matrix::gaussian(2, 2, RngSeed(round as u64))))
    }

    #[test]
    fn fifo_per_link() {
        for t in [&InProcessTransport::new() as &dyn Transport, &FramedTransport::new()] {
            let a = PartyId::Client(0);
            let b = PartyId::Client(1);
            t.send(PartyId::Server, msg(1, a)).unwrap();
            t.send(PartyId::Server, msg(2, b)).unwrap();
            t.send(PartyId::Server, msg(3, a)).unwrap();
            assert_eq!(t.receive(a, PartyId::Server).unwrap().unwrap().round, 1);
            assert_eq!(t.receive(a, PartyId::Server).unwrap().unwrap().round, 3);
            assert_eq!(t.receive(b, PartyId::Server).unwrap().unwrap().round, 2);
            assert!(t.receive(a, PartyId::Server).unwrap().is_none());
        }
    }

    #[test]
    fn byte_counts_agree() {
        let m = msg(4, PartyId::Server);
        let a = InProcessTransport::new().send(PartyId::Client(0), m.clone()).unwrap();
        let b = FramedTransport::new().send(PartyId::Client(0), m.clone()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, encode_message(&m).unwrap().len());
    }

    #[test]
    fn frames_over_tcp_loopback() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let sent: Vec<FedMessage> = (0..5).map(|r| msg(r, PartyId::Client(r))).collect();
        let expected = sent.clone();
        let writer = std::thread::spawn(move || {
            let mut s = std::net::TcpStream::connect(addr).unwrap();
            for m in &sent {
                write_frame(&mut s, m).unwrap();
            }
        });
        let (mut conn, _) = listener.accept().unwrap();
        for m in &expected {
            assert_eq!(&read_frame(&mut conn).unwrap(), m);
        }
        writer.join().unwrap();
    }
}
