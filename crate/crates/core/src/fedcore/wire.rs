//! Binary frame format.
//!
//! ```text
//! "FMV1" | version u8 = 1 | kind u8 | round u32 | sender u32 | payload length u64 | payload
//! ```
//!
//! All integers and floats are little-endian. A matrix is `rows u64 | cols u64`
//! followed by its row-major binary64 entries. The server's sender id is
//! `u32::MAX`.

use std::io::{Read, Write};

use super::message::{FedMessage, MessageKind, PartyId, Payload};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const MAGIC: &[u8; 4] = b"FMV1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 4 + 1 + 1 + 4 + 4 + 8;

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedFrame(msg.into())
}

fn matrix_len(m: &Matrix) -> usize {
    16 + 8 * m.data().len()
}

fn payload_len(p: &Payload) -> usize {
    match p {
        Payload::ConsensusZ(m) | Payload::TestConsensus(m) => matrix_len(m),
        Payload::PseudoLabel { z, .. } | Payload::TestPseudoLabel { z, .. } => 8 + matrix_len(z),
        Payload::TransformSet(ms) => 8 + ms.iter().map(matrix_len).sum::<usize>(),
        Payload::ParamVector { w, .. } => 4 + 8 + 8 * w.len(),
    }
}

/// Size of the encoded frame, without encoding it.
pub fn encoded_len(msg: &FedMessage) -> usize {
    HEADER_LEN + payload_len(&msg.payload)
}

fn put_matrix(out: &mut Vec<u8>, m: &Matrix) {
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Encoding of a bare matrix as it would appear inside a payload.
pub fn encode_matrix(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(matrix_len(m));
    put_matrix(&mut out, m);
    out
}

pub fn encode_message(msg: &FedMessage) -> Result<Vec<u8>> {
    if !msg.payload.is_finite() {
        return Err(malformed(format!("{} payload has non-finite entries", msg.kind())));
    }
    let len = payload_len(&msg.payload);
    let mut out = Vec::with_capacity(HEADER_LEN + len);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(msg.kind().tag());
    out.extend_from_slice(&msg.round.to_le_bytes());
    out.extend_from_slice(&msg.sender.to_wire().to_le_bytes());
    out.extend_from_slice(&(len as u64).to_le_bytes());
    match &msg.payload {
        Payload::ConsensusZ(m) | Payload::TestConsensus(m) => put_matrix(&mut out, m),
        Payload::PseudoLabel { zeta, z } | Payload::TestPseudoLabel { zeta, z } => {
            out.extend_from_slice(&zeta.to_le_bytes());
            put_matrix(&mut out, z);
        }
        Payload::TransformSet(ms) => {
            out.extend_from_slice(&(ms.len() as u64).to_le_bytes());
            for m in ms {
                put_matrix(&mut out, m);
            }
        }
        Payload::ParamVector { view, w } => {
            out.extend_from_slice(&view.to_le_bytes());
            out.extend_from_slice(&(w.len() as u64).to_le_bytes());
            for v in w {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    debug_assert_eq!(out.len(), HEADER_LEN + len);
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(malformed(format!(
                "truncated {what}: need {n} bytes at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            ))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let v = f64::from_le_bytes(self.take(8, what)?.try_into().unwrap());
        if v.is_finite() {
            Ok(v)
        } else {
            Err(malformed(format!("non-finite {what}")))
        }
    }

    fn f64s(&mut self, count: u64, what: &str) -> Result<Vec<f64>> {
        let remaining = (self.buf.len() - self.pos) as u64;
        if count > remaining / 8 {
            return Err(malformed(format!("truncated {what}: {count} values declared")));
        }
        (0..count).map(|_| self.f64(what)).collect()
    }

    fn matrix(&mut self) -> Result<Matrix> {
        let rows = self.u64("matrix rows")?;
        let cols = self.u64("matrix cols")?;
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| malformed(format!("matrix shape {rows}x{cols} overflows")))?;
        let data = self.f64s(count, "matrix data")?;
        Matrix::new(rows as usize, cols as usize, data).map_err(|e| malformed(e.to_string()))
    }
}

pub fn decode_message(bytes: &[u8]) -> Result<FedMessage> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(4, "magic")? != MAGIC {
        return Err(malformed("bad magic"));
    }
    let version = c.take(1, "version")?[0];
    if version != VERSION {
        return Err(malformed(format!("unsupported version {version}")));
    }
    let tag = c.take(1, "kind tag")?[0];
    let kind = MessageKind::from_tag(tag).ok_or_else(|| malformed(format!("unknown kind tag {tag}")))?;
    let round = c.u32("round")?;
    let sender = PartyId::from_wire(c.u32("sender")?);
    let len = c.u64("payload length")?;
    if len != (bytes.len() - HEADER_LEN) as u64 {
        return Err(malformed(format!(
            "payload length {len} does not match the {} bytes present",
            bytes.len() - HEADER_LEN
        )));
    }
    let payload = match kind {
        MessageKind::ConsensusZ => Payload::ConsensusZ(c.matrix()?),
        MessageKind::TestConsensus => Payload::TestConsensus(c.matrix()?),
        MessageKind::PseudoLabel => Payload::PseudoLabel {
            zeta: c.f64("zeta")?,
            z: c.matrix()?,
        },
        MessageKind::TestPseudoLabel => Payload::TestPseudoLabel {
            zeta: c.f64("zeta")?,
            z: c.matrix()?,
        },
        MessageKind::TransformSet => {
            let n = c.u64("transform count")?;
            if n > (bytes.len() - c.pos) as u64 / 16 {
                return Err(malformed(format!("truncated transform set: {n} matrices declared")));
            }
            Payload::TransformSet((0..n).map(|_| c.matrix()).collect::<Result<_>>()?)
        }
        MessageKind::ParamVector => {
            let view = c.u32("view")?;
            let n = c.u64("vector length")?;
            Payload::ParamVector {
                view,
                w: c.f64s(n, "vector data")?,
            }
        }
    };
    if c.pos != bytes.len() {
        return Err(malformed(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    Ok(FedMessage { round, sender, payload })
}

/// Writes one frame to a stream.
pub fn write_frame(w: &mut impl Write, msg: &FedMessage) -> Result<usize> {
    let bytes = encode_message(msg)?;
    w.write_all(&bytes)?;
    Ok(bytes.len())
}

/// Reads one frame from a stream.
pub fn read_frame(r: &mut impl Read) -> Result<FedMessage> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => malformed("truncated header"),
        _ => Error::Io(e),
    })?;
    let len = u64::from_le_bytes(header[14..22].try_into().unwrap());
    let len = usize::try_from(len).map_err(|_| malformed("payload length overflows"))?;
    let mut frame = header.to_vec();
    frame.resize(HEADER_LEN + len, 0);
    r.read_exact(&mut frame[HEADER_LEN..]).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => malformed("truncated payload"),
        _ => Error::Io(e),
    })?;
    decode_message(&frame)
}
