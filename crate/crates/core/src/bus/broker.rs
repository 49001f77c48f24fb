use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frame::{Frame, FrameKind, MAX_PAYLOAD};
use super::pattern::TopicPattern;

/// Per-subscriber queue depth; the oldest frame is dropped beyond this.
pub const QUEUE_CAPACITY: usize = 1024;
/// Topic registrations allowed for a constrained session.
pub const CONSTRAINED_TOPIC_CAP: usize = 8;

pub type SessionId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Full,
    Constrained,
}

/// Payload of a HELLO frame.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Hello {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub profile: Profile,
    /// Constrained sessions only: the topics it will publish.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub publishes: Vec<String>,
    /// Constrained sessions only: the patterns it will subscribe to.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subscribes: Vec<String>,
    /// Constrained sessions only: every PUBLISH payload has exactly this length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_size: Option<usize>,
}

impl Hello {
    pub fn full(name: &str) -> Self {
        Hello { name: name.to_string(), ..Default::default() }
    }

    pub fn constrained(name: &str, publishes: &[&str], subscribes: &[&str], slot_size: usize) -> Self {
        Hello {
            name: name.to_string(),
            profile: Profile::Constrained,
            publishes: publishes.iter().map(|s| s.to_string()).collect(),
            subscribes: subscribes.iter().map(|s| s.to_string()).collect(),
            slot_size: Some(slot_size),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadHello,
    TopicCap,
    UnregisteredTopic,
    BadPattern,
    Oversize,
    SlotSize,
    UnknownSession,
    Protocol,
}

/// Body of an ERROR frame.
#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[error("{code:?}: {message}")]
pub struct BrokerError {
    pub code: ErrorCode,
    pub message: String,
}

impl BrokerError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        BrokerError { code, message: message.into() }
    }

    pub fn to_frame(&self, topic: &str, timestamp_ns: u64) -> Frame {
        let body = serde_json::to_vec(self).expect("error body serializes");
        Frame::new(FrameKind::Error, topic, timestamp_ns, body)
    }

    pub fn from_frame(frame: &Frame) -> Self {
        serde_json::from_slice(&frame.payload)
            .unwrap_or_else(|_| BrokerError::new(ErrorCode::Protocol, String::from_utf8_lossy(&frame.payload)))
    }
}

/// Bounded drop-oldest queue feeding one session.
#[derive(Debug, Default)]
pub struct Mailbox {
    queue: Mutex<VecDeque<Arc<Frame>>>,
    ready: Condvar,
    closed: AtomicBool,
    dropped: AtomicU64,
}

impl Mailbox {
    fn lock(&self) -> MutexGuard<'_, VecDeque<Arc<Frame>>> {
        self.queue.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Enqueues a frame and returns the one evicted to make room, if any.
    fn push(&self, frame: Arc<Frame>) -> Option<Arc<Frame>> {
        let mut q = self.lock();
        let evicted = if q.len() >= QUEUE_CAPACITY { q.pop_front() } else { None };
        if evicted.is_some() {
            self.dropped.fetch_add(1, Ordering::Relaxed);
        }
        q.push_back(frame);
        drop(q);
        self.ready.notify_one();
        evicted
    }

    /// Waits up to `timeout` for a frame. `None` on timeout or once closed and drained.
    pub fn pop_timeout(&self, timeout: Duration) -> Option<Arc<Frame>> {
        let deadline = Instant::now() + timeout;
        let mut q = self.lock();
        loop {
            if let Some(f) = q.pop_front() {
                return Some(f);
            }
            if self.is_closed() {
                return None;
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            q = self.ready.wait_timeout(q, deadline - now).unwrap_or_else(|p| p.into_inner()).0;
        }
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }

    pub fn close(&self) {
        self.closed.store(true, Ordering::Release);
        self.ready.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::Acquire)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TopicStats {
    pub published: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Sessions whose subscriptions currently match the topic.
    pub subscribers: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BrokerStats {
    pub sessions: u64,
    pub topics: BTreeMap<String, TopicStats>,
}

#[derive(Debug)]
struct Constrained {
    publishes: Vec<String>,
    subscribes: Vec<TopicPattern>,
    slot_size: usize,
}

#[derive(Debug)]
struct Session {
    name: String,
    subs: Vec<TopicPattern>,
    mailbox: Arc<Mailbox>,
    constrained: Option<Constrained>,
}

#[derive(Debug, Default)]
struct State {
    sessions: BTreeMap<SessionId, Session>,
    topics: BTreeMap<String, TopicStats>,
    next_id: SessionId,
}

/// Topic router shared by every transport. Cloning shares the same broker.
///
/// A single lock covers routing, so frames from one publisher on one topic
/// enter every subscriber mailbox in publication order.
#[derive(Debug, Clone, Default)]
pub struct Broker {
    state: Arc<Mutex<State>>,
}

impl Broker {
    pub fn new() -> Self {
        Broker::default()
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Opens a session with the full profile. Deliveries arrive in the returned mailbox.
    pub fn connect(&self) -> (SessionId, Arc<Mailbox>) {
        let mut st = self.lock();
        let id = st.next_id;
        st.next_id += 1;
        let mailbox = Arc::new(Mailbox::default());
        st.sessions.insert(
            id,
            Session { name: String::new(), subs: Vec::new(), mailbox: mailbox.clone(), constrained: None },
        );
        (id, mailbox)
    }

    pub fn disconnect(&self, id: SessionId) {
        if let Some(s) = self.lock().sessions.remove(&id) {
            s.mailbox.close();
        }
    }

    pub fn disconnect_all(&self) {
        let mut st = self.lock();
        for (_, s) in std::mem::take(&mut st.sessions) {
            s.mailbox.close();
        }
    }

    pub fn session_count(&self) -> usize {
        self.lock().sessions.len()
    }

    pub fn session_name(&self, id: SessionId) -> Option<String> {
        self.lock().sessions.get(&id).map(|s| s.name.clone())
    }

    pub fn hello(&self, id: SessionId, hello: &Hello) -> Result<(), BrokerError> {
        let mut st = self.lock();
        let session = st
            .sessions
            .get_mut(&id)
            .ok_or_else(|| BrokerError::new(ErrorCode::UnknownSession, format!("session {id}")))?;
        session.name = hello.name.clone();
        if hello.profile == Profile::Full {
            session.constrained = None;
            return Ok(());
        }
        let count = hello.publishes.len() + hello.subscribes.len();
        if count > CONSTRAINED_TOPIC_CAP {
            return Err(BrokerError::new(
                ErrorCode::TopicCap,
                format!("{count} topics registered, constrained sessions allow {CONSTRAINED_TOPIC_CAP}"),
            ));
        }
        let slot_size = hello
            .slot_size
            .filter(|s| (1..=MAX_PAYLOAD).contains(s))
            .ok_or_else(|| BrokerError::new(ErrorCode::BadHello, "constrained hello needs slot_size in 1..=1 MiB"))?;
        let mut subscribes = Vec::new();
        for p in &hello.subscribes {
            subscribes.push(TopicPattern::parse(p).map_err(|e| BrokerError::new(ErrorCode::BadPattern, e.to_string()))?);
        }
        for t in &hello.publishes {
            match TopicPattern::parse(t) {
                Ok(TopicPattern::Exact(_)) => {}
                _ => return Err(BrokerError::new(ErrorCode::BadHello, format!("cannot publish to pattern {t:?}"))),
            }
        }
        session.constrained = Some(Constrained { publishes: hello.publishes.clone(), subscribes, slot_size });
        Ok(())
    }

    pub fn subscribe(&self, id: SessionId, pattern: &str) -> Result<(), BrokerError> {
        let pattern = TopicPattern::parse(pattern).map_err(|e| BrokerError::new(ErrorCode::BadPattern, e.to_string()))?;
        let mut st = self.lock();
        let session = st
            .sessions
            .get_mut(&id)
            .ok_or_else(|| BrokerError::new(ErrorCode::UnknownSession, format!("session {id}")))?;
        if let Some(c) = &session.constrained {
            if !c.subscribes.contains(&pattern) {
                return Err(BrokerError::new(
                    ErrorCode::UnregisteredTopic,
                    format!("{pattern} was not registered at hello"),
                ));
            }
        }
        if !session.subs.contains(&pattern) {
            session.subs.push(pattern);
        }
        Ok(())
    }

    pub fn unsubscribe(&self, id: SessionId, pattern: &str) -> Result<(), BrokerError> {
        let pattern = TopicPattern::parse(pattern).map_err(|e| BrokerError::new(ErrorCode::BadPattern, e.to_string()))?;
        let mut st = self.lock();
        let session = st
            .sessions
            .get_mut(&id)
            .ok_or_else(|| BrokerError::new(ErrorCode::UnknownSession, format!("session {id}")))?;
        session.subs.retain(|p| p != &pattern);
        Ok(())
    }

    /// Routes a PUBLISH frame and returns how many sessions it was queued for.
    pub fn publish(&self, id: SessionId, frame: Frame) -> Result<usize, BrokerError> {
        if frame.topic.is_empty() {
            return Err(BrokerError::new(ErrorCode::Protocol, "publish needs a topic"));
        }
        if frame.payload.len() > MAX_PAYLOAD {
            return Err(BrokerError::new(
                ErrorCode::Oversize,
                format!("payload of {} bytes exceeds 1 MiB", frame.payload.len()),
            ));
        }
        let mut st = self.lock();
        let session = st
            .sessions
            .get(&id)
            .ok_or_else(|| BrokerError::new(ErrorCode::UnknownSession, format!("session {id}")))?;
        if let Some(c) = &session.constrained {
            if !c.publishes.iter().any(|t| *t == frame.topic) {
                return Err(BrokerError::new(
                    ErrorCode::UnregisteredTopic,
                    format!("{} was not registered at hello", frame.topic),
                ));
            }
            if frame.payload.len() != c.slot_size {
                return Err(BrokerError::new(
                    ErrorCode::SlotSize,
                    format!("payload is {} bytes, slot is {}", frame.payload.len(), c.slot_size),
                ));
            }
        }
        let frame = Arc::new(frame);
        let mut delivered = 0;
        let mut evicted = Vec::new();
        for s in st.sessions.values() {
            if s.subs.iter().any(|p| p.matches(&frame.topic)) {
                delivered += 1;
                if let Some(old) = s.mailbox.push(frame.clone()) {
                    evicted.push(old);
                }
            }
        }
        let entry = st.topics.entry(frame.topic.clone()).or_default();
        entry.published += 1;
        entry.delivered += delivered as u64;
        for old in evicted {
            st.topics.entry(old.topic.clone()).or_default().dropped += 1;
        }
        Ok(delivered)
    }

    /// Topics seen so far, sorted.
    pub fn topics(&self) -> Vec<String> {
        self.lock().topics.keys().cloned().collect()
    }

    pub fn stats(&self) -> BrokerStats {
        let st = self.lock();
        let mut topics = st.topics.clone();
        for (topic, entry) in topics.iter_mut() {
            entry.subscribers =
                st.sessions.values().filter(|s| s.subs.iter().any(|p| p.matches(topic))).count() as u64;
        }
        BrokerStats { sessions: st.sessions.len() as u64, topics }
    }

    /// Applies one client frame and returns the reply to send back, if any.
    ///
    /// HELLO, SUBSCRIBE and UNSUBSCRIBE are echoed as acknowledgements,
    /// TOPIC_LIST returns a JSON array, PUBLISH is silent unless rejected.
    pub fn handle(&self, id: SessionId, frame: Frame) -> Option<Frame> {
        let ts = frame.timestamp_ns;
        let topic = frame.topic.clone();
        let result = match frame.kind {
            FrameKind::Hello => serde_json::from_slice::<Hello>(if frame.payload.is_empty() { b"{}" } else { &frame.payload })
                .map_err(|e| BrokerError::new(ErrorCode::BadHello, e.to_string()))
                .and_then(|h| self.hello(id, &h))
                .map(|_| Some(Frame::new(FrameKind::Hello, "", ts, format!("{{\"session\":{id}}}")))),
            FrameKind::Subscribe => {
                self.subscribe(id, &topic).map(|_| Some(Frame::new(FrameKind::Subscribe, topic.clone(), ts, Vec::new())))
            }
            FrameKind::Unsubscribe => self
                .unsubscribe(id, &topic)
                .map(|_| Some(Frame::new(FrameKind::Unsubscribe, topic.clone(), ts, Vec::new()))),
            FrameKind::Publish => self.publish(id, frame).map(|_| None),
            FrameKind::TopicList => {
                let body = serde_json::to_vec(&self.topics()).expect("topic list serializes");
                Ok(Some(Frame::new(FrameKind::TopicList, "", ts, body)))
            }
            FrameKind::Error => Ok(None),
        };
        result.unwrap_or_else(|e| Some(e.to_frame(&topic, ts)))
    }

    /// Queues a frame for one session without routing (used for replies).
    pub fn send_to(&self, id: SessionId, frame: Frame) -> bool {
        match self.lock().sessions.get(&id) {
            Some(s) => {
                s.mailbox.push(Arc::new(frame));
                true
            }
            None => false,
        }
    }
}
