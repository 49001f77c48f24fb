//! Topic publish/subscribe over a framed byte protocol.
//!
//! A [`Broker`] routes frames between sessions. Sessions connect in-process
//! ([`LocalClient`]) or over TCP ([`TcpClient`] against a [`BrokerServer`]);
//! [`ConstrainedClient`] is the fixed-topic, fixed-slot profile meant for
//! microcontroller-class nodes. Delivery is best-effort and at most once.

mod broker;
mod client;
mod frame;
mod pattern;
mod tcp;
pub mod topics;

pub use broker::{
    Broker, BrokerError, BrokerStats, ErrorCode, Hello, Mailbox, Profile, SessionId, TopicStats,
    CONSTRAINED_TOPIC_CAP, QUEUE_CAPACITY,
};
pub use client::{BusClient, BusError, ConstrainedClient, LocalClient, PublishAck, TcpClient, ACK_TIMEOUT};
pub use frame::{
    decode_frame, encode_frame, encode_into, read_frame, write_frame, DecodeError, EncodeError, Frame, FrameKind,
    MAGIC, MAX_PAYLOAD, VERSION,
};
pub use pattern::{PatternError, TopicPattern};
pub use tcp::{send_raw, BrokerServer, DEFAULT_PORT};
