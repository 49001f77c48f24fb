use std::collections::VecDeque;
use std::io::{self, BufReader, BufWriter, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::broker::{Broker, BrokerError, Hello, Mailbox, SessionId};
use super::frame::{read_frame, write_frame, EncodeError, Frame, FrameKind, MAX_PAYLOAD};

/// How long request/acknowledge exchanges wait for the broker.
pub const ACK_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum BusError {
    #[error("broker rejected request: {0}")]
    Rejected(#[from] BrokerError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("bus i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not connected")]
    Disconnected,
    #[error("timed out waiting for the broker")]
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublishAck {
    /// Sessions the frame was queued for; unknown over asynchronous transports.
    pub delivered: Option<usize>,
}

/// Common interface of in-process and networked bus sessions.
pub trait BusClient: Send {
    fn subscribe(&mut self, pattern: &str) -> Result<(), BusError>;
    fn unsubscribe(&mut self, pattern: &str) -> Result<(), BusError>;
    fn publish(&mut self, topic: &str, timestamp_ns: u64, payload: &[u8]) -> Result<PublishAck, BusError>;
    /// Next PUBLISH (or asynchronous ERROR) frame, waiting at most `timeout`.
    fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<Arc<Frame>>, BusError>;

    fn try_recv(&mut self) -> Result<Option<Arc<Frame>>, BusError> {
        self.recv_timeout(Duration::ZERO)
    }
}

/// Session on a broker in the same process.
pub struct LocalClient {
    broker: Broker,
    id: SessionId,
    mailbox: Arc<Mailbox>,
}

impl LocalClient {
    pub fn connect(broker: &Broker, name: &str) -> Self {
        Self::connect_with(broker, &Hello::full(name)).expect("full-profile hello always succeeds")
    }

    pub fn connect_with(broker: &Broker, hello: &Hello) -> Result<Self, BusError> {
        let (id, mailbox) = broker.connect();
        if let Err(e) = broker.hello(id, hello) {
            broker.disconnect(id);
            return Err(e.into());
        }
        Ok(LocalClient { broker: broker.clone(), id, mailbox })
    }

    pub fn session(&self) -> SessionId {
        self.id
    }

    pub fn dropped(&self) -> u64 {
        self.mailbox.dropped()
    }
}

impl Drop for LocalClient {
    fn drop(&mut self) {
        self.broker.disconnect(self.id);
    }
}

impl BusClient for LocalClient {
    fn subscribe(&mut self, pattern: &str) -> Result<(), BusError> {
        Ok(self.broker.subscribe(self.id, pattern)?)
    }

    fn unsubscribe(&mut self, pattern: &str) -> Result<(), BusError> {
        Ok(self.broker.unsubscribe(self.id, pattern)?)
    }

    fn publish(&mut self, topic: &str, timestamp_ns: u64, payload: &[u8]) -> Result<PublishAck, BusError> {
        if self.mailbox.is_closed() {
            return Err(BusError::Disconnected);
        }
        let n = self.broker.publish(self.id, Frame::publish(topic, timestamp_ns, payload))?;
        Ok(PublishAck { delivered: Some(n) })
    }

    fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<Arc<Frame>>, BusError> {
        match self.mailbox.pop_timeout(timeout) {
            Some(f) => Ok(Some(f)),
            None if self.mailbox.is_closed() => Err(BusError::Disconnected),
            None => Ok(None),
        }
    }
}

/// Session on a remote broker over TCP.
pub struct TcpClient {
    out: BufWriter<TcpStream>,
    incoming: Receiver<io::Result<Frame>>,
    pending: VecDeque<Arc<Frame>>,
    closed: bool,
}

impl TcpClient {
    pub fn connect(addr: impl ToSocketAddrs, name: &str) -> Result<Self, BusError> {
        Self::connect_with(addr, &Hello::full(name))
    }

    pub fn connect_with(addr: impl ToSocketAddrs, hello: &Hello) -> Result<Self, BusError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let read_half = stream.try_clone()?;
        let (tx, rx) = mpsc::channel();
        thread::Builder::new().name("bus-client-reader".into()).spawn(move || {
            let mut r = BufReader::new(read_half);
            loop {
                match read_frame(&mut r) {
                    Ok(Some(f)) => {
                        if tx.send(Ok(f)).is_err() {
                            return;
                        }
                    }
                    Ok(None) => return,
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        return;
                    }
                }
            }
        })?;
        let mut client = TcpClient { out: BufWriter::new(stream), incoming: rx, pending: VecDeque::new(), closed: false };
        let body = serde_json::to_vec(hello).expect("hello serializes");
        client.request(Frame::new(FrameKind::Hello, "", 0, body), FrameKind::Hello, "")?;
        Ok(client)
    }

    fn send(&mut self, frame: &Frame) -> Result<(), BusError> {
        if self.closed {
            return Err(BusError::Disconnected);
        }
        write_frame(&mut self.out, frame)?;
        self.out.flush()?;
        Ok(())
    }

    /// Sends `frame` and waits for the matching acknowledgement, buffering
    /// deliveries that arrive meanwhile.
    fn request(&mut self, frame: Frame, ack: FrameKind, topic: &str) -> Result<Frame, BusError> {
        self.send(&frame)?;
        let deadline = Instant::now() + ACK_TIMEOUT;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.incoming.recv_timeout(left) {
                Ok(Ok(f)) if f.kind == ack && f.topic == topic => return Ok(f),
                Ok(Ok(f)) if f.kind == FrameKind::Error && f.topic == topic => {
                    return Err(BrokerError::from_frame(&f).into())
                }
                Ok(Ok(f)) => self.pending.push_back(Arc::new(f)),
                Ok(Err(e)) => {
                    self.closed = true;
                    return Err(e.into());
                }
                Err(RecvTimeoutError::Timeout) => return Err(BusError::Timeout),
                Err(RecvTimeoutError::Disconnected) => {
                    self.closed = true;
                    return Err(BusError::Disconnected);
                }
            }
        }
    }

    /// Asks the broker for every topic it has seen.
    pub fn topic_list(&mut self) -> Result<Vec<String>, BusError> {
        let reply = self.request(Frame::new(FrameKind::TopicList, "", 0, Vec::new()), FrameKind::TopicList, "")?;
        serde_json::from_slice(&reply.payload).map_err(|e| BusError::Io(io::Error::new(io::ErrorKind::InvalidData, e)))
    }

    pub fn close(&mut self) {
        self.closed = true;
        let _ = self.out.flush();
        let _ = self.out.get_ref().shutdown(Shutdown::Both);
    }
}

impl Drop for TcpClient {
    fn drop(&mut self) {
        self.close();
    }
}

impl BusClient for TcpClient {
    fn subscribe(&mut self, pattern: &str) -> Result<(), BusError> {
        self.request(Frame::new(FrameKind::Subscribe, pattern, 0, Vec::new()), FrameKind::Subscribe, pattern)
            .map(|_| ())
    }

    fn unsubscribe(&mut self, pattern: &str) -> Result<(), BusError> {
        self.request(Frame::new(FrameKind::Unsubscribe, pattern, 0, Vec::new()), FrameKind::Unsubscribe, pattern)
            .map(|_| ())
    }

    fn publish(&mut self, topic: &str, timestamp_ns: u64, payload: &[u8]) -> Result<PublishAck, BusError> {
        if payload.len() > MAX_PAYLOAD {
            return Err(EncodeError::PayloadTooLarge(payload.len()).into());
        }
        self.send(&Frame::publish(topic, timestamp_ns, payload))?;
        Ok(PublishAck { delivered: None })
    }

    fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<Arc<Frame>>, BusError> {
        if let Some(f) = self.pending.pop_front() {
            return Ok(Some(f));
        }
        if self.closed {
            return Err(BusError::Disconnected);
        }
        match self.incoming.recv_timeout(timeout) {
            Ok(Ok(f)) => Ok(Some(Arc::new(f))),
            Ok(Err(e)) => {
                self.closed = true;
                Err(e.into())
            }
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => {
                self.closed = true;
                Err(BusError::Disconnected)
            }
        }
    }
}

/// Constrained-profile session: topics fixed at HELLO, every PUBLISH payload
/// padded with spaces to the declared slot size.
pub struct ConstrainedClient {
    inner: Box<dyn BusClient>,
    slot_size: usize,
}

impl ConstrainedClient {
    pub fn local(broker: &Broker, name: &str, publishes: &[&str], subscribes: &[&str], slot_size: usize) -> Result<Self, BusError> {
        let hello = Hello::constrained(name, publishes, subscribes, slot_size);
        Ok(ConstrainedClient { inner: Box::new(LocalClient::connect_with(broker, &hello)?), slot_size })
    }

    pub fn tcp(
        addr: impl ToSocketAddrs,
        name: &str,
        publishes: &[&str],
        subscribes: &[&str],
        slot_size: usize,
    ) -> Result<Self, BusError> {
        let hello = Hello::constrained(name, publishes, subscribes, slot_size);
        Ok(ConstrainedClient { inner: Box::new(TcpClient::connect_with(addr, &hello)?), slot_size })
    }

    pub fn slot_size(&self) -> usize {
        self.slot_size
    }
}

impl BusClient for ConstrainedClient {
    fn subscribe(&mut self, pattern: &str) -> Result<(), BusError> {
        self.inner.subscribe(pattern)
    }

    fn unsubscribe(&mut self, pattern: &str) -> Result<(), BusError> {
        self.inner.unsubscribe(pattern)
    }

    fn publish(&mut self, topic: &str, timestamp_ns: u64, payload: &[u8]) -> Result<PublishAck, BusError> {
        if payload.len() > self.slot_size {
            return Err(EncodeError::PayloadTooLarge(payload.len()).into());
        }
        let mut slot = Vec::with_capacity(self.slot_size);
        slot.extend_from_slice(payload);
        slot.resize(self.slot_size, b' ');
        self.inner.publish(topic, timestamp_ns, &slot)
    }

    fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<Arc<Frame>>, BusError> {
        self.inner.recv_timeout(timeout)
    }
}
