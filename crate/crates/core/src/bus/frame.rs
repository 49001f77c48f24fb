//! Wire format.
//!
//! ```text
//! "MECO" | version u8 | kind u8 | topic_len u16 | topic | timestamp_ns u64 | payload_len u32 | payload
//! ```
//! All integers are big-endian.

use std::io::{self, Read, Write};

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"MECO";
pub const VERSION: u8 = 1;
pub const MAX_PAYLOAD: usize = 1 << 20;
/// Bytes before the topic.
pub const PREFIX_LEN: usize = 8;
/// Bytes between topic and payload.
pub const SUFFIX_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FrameKind {
    Hello = 0,
    Subscribe = 1,
    Unsubscribe = 2,
    Publish = 3,
    TopicList = 4,
    Error = 5,
}

impl FrameKind {
    pub fn from_u8(b: u8) -> Option<Self> {
        Some(match b {
            0 => FrameKind::Hello,
            1 => FrameKind::Subscribe,
            2 => FrameKind::Unsubscribe,
            3 => FrameKind::Publish,
            4 => FrameKind::TopicList,
            5 => FrameKind::Error,
            _ => return None,
        })
    }

    fn needs_topic(self) -> bool {
        matches!(self, FrameKind::Subscribe | FrameKind::Unsubscribe | FrameKind::Publish)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub topic: String,
    pub timestamp_ns: u64,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(kind: FrameKind, topic: impl Into<String>, timestamp_ns: u64, payload: impl Into<Vec<u8>>) -> Self {
        Frame { kind, topic: topic.into(), timestamp_ns, payload: payload.into() }
    }

    pub fn publish(topic: impl Into<String>, timestamp_ns: u64, payload: impl Into<Vec<u8>>) -> Self {
        Frame::new(FrameKind::Publish, topic, timestamp_ns, payload)
    }

    pub fn encoded_len(&self) -> usize {
        PREFIX_LEN + self.topic.len() + SUFFIX_LEN + self.payload.len()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("payload of {0} bytes exceeds the 1 MiB limit")]
    PayloadTooLarge(usize),
    #[error("topic of {0} bytes does not fit a u16 length")]
    TopicTooLong(usize),
    #[error("{0:?} frame requires a topic")]
    EmptyTopic(FrameKind),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    /// The buffer is a valid prefix; at least `needed` more bytes are required.
    #[error("incomplete frame, need {needed} more bytes")]
    Incomplete { needed: usize },
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown frame kind {0}")]
    UnknownKind(u8),
    #[error("declared payload of {0} bytes exceeds the 1 MiB limit")]
    PayloadTooLarge(u32),
    #[error("topic is not valid UTF-8")]
    TopicNotUtf8,
    #[error("{0:?} frame requires a topic")]
    EmptyTopic(FrameKind),
}

impl DecodeError {
    /// True when more input cannot help.
    pub fn is_corrupt(&self) -> bool {
        !matches!(self, DecodeError::Incomplete { .. })
    }
}

pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, EncodeError> {
    let mut out = Vec::with_capacity(frame.encoded_len());
    encode_into(frame, &mut out)?;
    Ok(out)
}

pub fn encode_into(frame: &Frame, out: &mut Vec<u8>) -> Result<(), EncodeError> {
    if frame.payload.len() > MAX_PAYLOAD {
        return Err(EncodeError::PayloadTooLarge(frame.payload.len()));
    }
    let topic_len = u16::try_from(frame.topic.len()).map_err(|_| EncodeError::TopicTooLong(frame.topic.len()))?;
    if frame.kind.needs_topic() && topic_len == 0 {
        return Err(EncodeError::EmptyTopic(frame.kind));
    }
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(frame.kind as u8);
    out.extend_from_slice(&topic_len.to_be_bytes());
    out.extend_from_slice(frame.topic.as_bytes());
    out.extend_from_slice(&frame.timestamp_ns.to_be_bytes());
    out.extend_from_slice(&(frame.payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&frame.payload);
    Ok(())
}

fn need(buf: &[u8], upto: usize) -> Result<(), DecodeError> {
    if buf.len() < upto {
        Err(DecodeError::Incomplete { needed: upto - buf.len() })
    } else {
        Ok(())
    }
}

/// Decodes one frame from the front of `buf`, returning it with the number
/// of bytes consumed. Errors are reported as early as the bytes allow.
pub fn decode_frame(buf: &[u8]) -> Result<(Frame, usize), DecodeError> {
    let seen = buf.len().min(4);
    if buf[..seen] != MAGIC[..seen] {
        return Err(DecodeError::BadMagic);
    }
    need(buf, 5)?;
    if buf[4] != VERSION {
        return Err(DecodeError::UnsupportedVersion(buf[4]));
    }
    need(buf, 6)?;
    let kind = FrameKind::from_u8(buf[5]).ok_or(DecodeError::UnknownKind(buf[5]))?;
    need(buf, PREFIX_LEN)?;
    let topic_len = u16::from_be_bytes([buf[6], buf[7]]) as usize;
    if topic_len == 0 && kind.needs_topic() {
        return Err(DecodeError::EmptyTopic(kind));
    }
    let topic_end = PREFIX_LEN + topic_len;
    let header_end = topic_end + SUFFIX_LEN;
    need(buf, header_end)?;
    let payload_len = u32::from_be_bytes(buf[header_end - 4..header_end].try_into().expect("4 bytes"));
    if payload_len as usize > MAX_PAYLOAD {
        return Err(DecodeError::PayloadTooLarge(payload_len));
    }
    let topic = std::str::from_utf8(&buf[PREFIX_LEN..topic_end]).map_err(|_| DecodeError::TopicNotUtf8)?;
    let timestamp_ns = u64::from_be_bytes(buf[topic_end..topic_end + 8].try_into().expect("8 bytes"));
    let end = header_end + payload_len as usize;
    need(buf, end)?;
    Ok((
        Frame { kind, topic: topic.to_owned(), timestamp_ns, payload: buf[header_end..end].to_vec() },
        end,
    ))
}

/// Blocking read of exactly one frame. `Ok(None)` on clean end of stream
/// before the first byte.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<Frame>> {
    let mut buf = vec![0u8; PREFIX_LEN];
    let mut filled = 0;
    while filled < PREFIX_LEN {
        match r.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    loop {
        match decode_frame(&buf) {
            Ok((frame, _)) => return Ok(Some(frame)),
            Err(DecodeError::Incomplete { needed }) => {
                let start = buf.len();
                buf.resize(start + needed, 0);
                r.read_exact(&mut buf[start..])?;
            }
            Err(e) => return Err(io::Error::new(io::ErrorKind::InvalidData, e)),
        }
    }
}

pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> io::Result<()> {
    let bytes = encode_frame(frame).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    w.write_all(&bytes)
}
