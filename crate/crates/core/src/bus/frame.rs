//! `"CYBL" | version | msg_type | u32 BE length | payload`

use std::fmt;

use thiserror::Error;

use crate::negotiation::MessageKind;

pub const MAGIC: [u8; 4] = *b"CYBL";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 10;
pub const MAX_PAYLOAD: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MsgType {
    Statement,
    Delivery,
    Context,
    /// Announces the sending connection's agent profile.
    Register,
    Negotiation(MessageKind),
    Error,
}

impl MsgType {
    pub fn code(self) -> u8 {
        match self {
            MsgType::Statement => 0x01,
            MsgType::Delivery => 0x02,
            MsgType::Context => 0x03,
            MsgType::Register => 0x04,
            MsgType::Negotiation(k) => k.code(),
            MsgType::Error => 0x7F,
        }
    }

    pub fn from_code(code: u8) -> Option<MsgType> {
        match code {
            0x01 => Some(MsgType::Statement),
            0x02 => Some(MsgType::Delivery),
            0x03 => Some(MsgType::Context),
            0x04 => Some(MsgType::Register),
            0x7F => Some(MsgType::Error),
            c => MessageKind::from_code(c).map(MsgType::Negotiation),
        }
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:02x}", self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub payload: String,
}

impl Frame {
    pub fn new(msg_type: MsgType, payload: impl Into<String>) -> Frame {
        Frame {
            msg_type,
            payload: payload.into(),
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, FrameError> {
        encode_frame(self.msg_type, &self.payload)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("bad magic {0:02x?}")]
    BadMagic(Vec<u8>),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown message type 0x{0:02x}")]
    UnknownType(u8),
    #[error("payload of {0} bytes exceeds the 16 MiB limit")]
    OversizePayload(usize),
    #[error("payload is not valid UTF-8")]
    InvalidUtf8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    /// A whole frame and the number of bytes it used.
    Frame(Frame, usize),
    /// The input is a valid prefix; at least this many bytes are needed in
    /// total.
    NeedMore(usize),
}

pub fn encode_frame(msg_type: MsgType, payload: &str) -> Result<Vec<u8>, FrameError> {
    let len = payload.len();
    if len > MAX_PAYLOAD {
        return Err(FrameError::OversizePayload(len));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + len);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(msg_type.code());
    out.extend_from_slice(&(len as u32).to_be_bytes());
    out.extend_from_slice(payload.as_bytes());
    Ok(out)
}

/// Checks the header fields present in `bytes`, so that garbage is
/// rejected as early as possible.
fn check_prefix(bytes: &[u8]) -> Result<(), FrameError> {
    let n = bytes.len().min(4);
    if bytes[..n] != MAGIC[..n] {
        return Err(FrameError::BadMagic(bytes[..n].to_vec()));
    }
    if let Some(&v) = bytes.get(4) {
        if v != VERSION {
            return Err(FrameError::UnsupportedVersion(v));
        }
    }
    if let Some(&t) = bytes.get(5) {
        if MsgType::from_code(t).is_none() {
            return Err(FrameError::UnknownType(t));
        }
    }
    Ok(())
}

/// Decodes the frame at the start of `bytes`. Trailing bytes are left for
/// the next call.
pub fn decode_frame(bytes: &[u8]) -> Result<Decoded, FrameError> {
    check_prefix(bytes)?;
    if bytes.len() < HEADER_LEN {
        return Ok(Decoded::NeedMore(HEADER_LEN));
    }
    let msg_type = MsgType::from_code(bytes[5]).expect("checked");
    let len = u32::from_be_bytes(bytes[6..10].try_into().expect("four bytes")) as usize;
    if len > MAX_PAYLOAD {
        return Err(FrameError::OversizePayload(len));
    }
    let total = HEADER_LEN + len;
    if bytes.len() < total {
        return Ok(Decoded::NeedMore(total));
    }
    let payload = std::str::from_utf8(&bytes[HEADER_LEN..total]).map_err(|_| FrameError::InvalidUtf8)?;
    Ok(Decoded::Frame(Frame::new(msg_type, payload), total))
}

/// Accumulates stream bytes and yields whole frames.
#[derive(Debug, Default)]
pub struct FrameBuffer {
    buf: Vec<u8>,
}

impl FrameBuffer {
    pub fn new() -> FrameBuffer {
        FrameBuffer::default()
    }

    pub fn extend(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// The next complete frame, if any. An error leaves the buffer unusable.
    pub fn next_frame(&mut self) -> Result<Option<Frame>, FrameError> {
        if self.buf.is_empty() {
            return Ok(None);
        }
        match decode_frame(&self.buf)? {
            Decoded::Frame(frame, used) => {
                self.buf.drain(..used);
                Ok(Some(frame))
            }
            Decoded::NeedMore(_) => Ok(None),
        }
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }
}
