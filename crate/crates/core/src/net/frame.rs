//! Wire frames: `len:u32 | session:16 | protocol:u8 | step:u8 | payload`.
//!
//! `len` counts everything after itself. Payloads are sequences of
//! length-prefixed big-endian integers.

use std::fmt;
use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const HEADER_LEN: usize = 22;
pub const MAX_FRAME: usize = 64 << 20;
pub const PROTOCOL_VERSION: u8 = 1;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId(pub [u8; 16]);

impl fmt::Debug for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0[..6] {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

#[repr(u8)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProtocolId {
    Control = 0,
    Sad = 1,
    Smd = 2,
    Cmp = 3,
    Set = 4,
    Sut = 5,
    Src = 6,
    Ssm = 7,
    Smin = 8,
    Bpsk = 9,
    Pgene = 10,
}

impl TryFrom<u8> for ProtocolId {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        use ProtocolId::*;
        Ok(match v {
            0 => Control,
            1 => Sad,
            2 => Smd,
            3 => Cmp,
            4 => Set,
            5 => Sut,
            6 => Src,
            7 => Ssm,
            8 => Smin,
            9 => Bpsk,
            10 => Pgene,
            _ => return Err(Error::Decode(format!("unknown protocol id {v}"))),
        })
    }
}

/// Step values of CONTROL frames.
pub mod control {
    pub const HELLO: u8 = 0;
    pub const BYE: u8 = 1;
    pub const ABORT: u8 = 2;
    pub const END_SESSION: u8 = 3;
}

#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    pub session: SessionId,
    pub protocol: ProtocolId,
    pub step: u8,
    pub payload: Vec<u8>,
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Frame({:?} {:?}#{} {}B)",
            self.session,
            self.protocol,
            self.step,
            self.payload.len()
        )
    }
}

impl Frame {
    pub fn new(session: SessionId, protocol: ProtocolId, step: u8, payload: Vec<u8>) -> Self {
        Frame { session, protocol, step, payload }
    }

    pub fn abort(session: SessionId, message: &str) -> Self {
        Frame::new(session, ProtocolId::Control, control::ABORT, message.as_bytes().to_vec())
    }

    pub fn is_abort(&self) -> bool {
        self.protocol == ProtocolId::Control && self.step == control::ABORT
    }

    pub fn encode(&self) -> Vec<u8> {
        let body = HEADER_LEN - 4 + self.payload.len();
        let mut out = Vec::with_capacity(4 + body);
        out.extend_from_slice(&(body as u32).to_be_bytes());
        out.extend_from_slice(&self.session.0);
        out.push(self.protocol as u8);
        out.push(self.step);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        if buf.len() < HEADER_LEN {
            return Err(Error::Decode("truncated frame header".into()));
        }
        let len = u32::from_be_bytes([buf[0], buf[1], buf[2], buf[3]]) as usize;
        if len != buf.len() - 4 {
            return Err(Error::Decode(format!(
                "frame length {len} does not match {} available bytes",
                buf.len() - 4
            )));
        }
        Self::from_body(&buf[4..])
    }

    fn from_body(body: &[u8]) -> Result<Self> {
        if body.len() < HEADER_LEN - 4 {
            return Err(Error::Decode("truncated frame header".into()));
        }
        let mut sid = [0u8; 16];
        sid.copy_from_slice(&body[..16]);
        Ok(Frame {
            session: SessionId(sid),
            protocol: ProtocolId::try_from(body[16])?,
            step: body[17],
            payload: body[18..].to_vec(),
        })
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&self.encode()).map_err(|e| Error::Transport(e.to_string()))?;
        w.flush().map_err(|e| Error::Transport(e.to_string()))
    }

    /// Read one frame; `Ok(None)` on clean end of stream.
    pub fn read_from<R: Read>(r: &mut R) -> Result<Option<Self>> {
        let mut len = [0u8; 4];
        match r.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(Error::Transport(e.to_string())),
        }
        let len = u32::from_be_bytes(len) as usize;
        if len > MAX_FRAME {
            return Err(Error::Decode(format!("frame of {len} bytes exceeds limit")));
        }
        let mut body = vec![0u8; len];
        r.read_exact(&mut body).map_err(|e| Error::Decode(format!("truncated frame: {e}")))?;
        Self::from_body(&body).map(Some)
    }
}
