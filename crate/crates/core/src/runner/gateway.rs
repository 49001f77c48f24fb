//! WebSocket bridge between bus topics and browser consoles.
//!
//! Every bus frame becomes one text message
//! `{"topic": "...", "timestamp_ns": "<decimal>", "payload": <JSON>}`.
//! Payloads that are not compact JSON travel as `"payload_b64"` instead, so
//! the bytes survive a round trip unchanged. Consoles may publish only on
//! allowlisted topics; anything else is answered with a `/gateway/error`
//! message and the connection stays open.

use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use tungstenite::{Message as WsFrame, WebSocket};

use crate::bus::{topics, Broker, BusClient, BusError, Frame, LocalClient, TcpClient, TopicPattern};

/// Opens one bus session per console connection.
pub type ClientFactory = Arc<dyn Fn(&str) -> Result<Box<dyn BusClient>, BusError> + Send + Sync>;

const POLL: Duration = Duration::from_millis(5);
const BATCH: usize = 512;

/// Console message as sent on the wire.
#[derive(Debug, Serialize)]
struct Outbound<'a> {
    topic: &'a str,
    timestamp_ns: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    payload: Option<&'a RawValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    payload_b64: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Inbound<'a> {
    topic: String,
    #[serde(default)]
    timestamp_ns: Option<serde_json::Value>,
    #[serde(default, borrow)]
    payload: Option<&'a RawValue>,
    #[serde(default)]
    payload_b64: Option<String>,
}

#[derive(Debug, Serialize)]
struct GatewayError<'a> {
    code: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    topic: Option<&'a str>,
}

/// Encodes a bus frame as a console message.
pub fn frame_to_ws(topic: &str, timestamp_ns: u64, payload: &[u8]) -> String {
    let raw = std::str::from_utf8(payload)
        .ok()
        .and_then(|s| serde_json::from_str::<&RawValue>(s).ok().filter(|r| r.get().len() == s.len()));
    let msg = Outbound {
        topic,
        timestamp_ns: timestamp_ns.to_string(),
        payload: raw,
        payload_b64: if raw.is_none() { Some(B64.encode(payload)) } else { None },
    };
    serde_json::to_string(&msg).expect("gateway messages serialize")
}

/// A console message decoded into bus terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsolePublish {
    pub topic: String,
    pub timestamp_ns: u64,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub code: &'static str,
    pub message: String,
    pub topic: Option<String>,
}

impl Rejection {
    fn new(code: &'static str, message: impl Into<String>, topic: Option<&str>) -> Self {
        Rejection { code, message: message.into(), topic: topic.map(str::to_string) }
    }

    pub fn to_ws(&self) -> String {
        let body = GatewayError { code: self.code, message: self.message.clone(), topic: self.topic.as_deref() };
        let payload = serde_json::to_string(&body).expect("errors serialize");
        frame_to_ws(topics::GATEWAY_ERROR, now_ns(), payload.as_bytes())
    }
}

fn now_ns() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0)
}

/// Topic filter for console-originated messages.
#[derive(Debug, Clone)]
pub struct Allowlist(Vec<TopicPattern>);

impl Allowlist {
    pub fn new(patterns: &[&str]) -> Self {
        Allowlist(patterns.iter().map(|p| TopicPattern::parse(p).expect("allowlist patterns are valid")).collect())
    }

    pub fn console() -> Self {
        Allowlist::new(&topics::CONSOLE_ALLOWLIST)
    }

    pub fn allows(&self, topic: &str) -> bool {
        self.0.iter().any(|p| p.matches(topic))
    }
}

/// Parses and screens one console message.
pub fn parse_console_message(text: &str, allow: &Allowlist) -> Result<ConsolePublish, Rejection> {
    let msg: Inbound = serde_json::from_str(text).map_err(|e| Rejection::new("bad_message", e.to_string(), None))?;
    let topic = msg.topic.as_str();
    if !allow.allows(topic) {
        return Err(Rejection::new("not_allowed", format!("consoles may not publish on {topic}"), Some(topic)));
    }
    let timestamp_ns = match &msg.timestamp_ns {
        None | Some(serde_json::Value::Null) => now_ns(),
        Some(serde_json::Value::String(s)) => s
            .parse()
            .map_err(|_| Rejection::new("bad_message", format!("timestamp_ns {s:?} is not an integer"), Some(topic)))?,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| Rejection::new("bad_message", "timestamp_ns is not an integer", Some(topic)))?,
    };
    let payload = match (msg.payload, &msg.payload_b64) {
        (Some(raw), None) => raw.get().as_bytes().to_vec(),
        (None, Some(b)) => {
            B64.decode(b).map_err(|e| Rejection::new("bad_message", format!("payload_b64: {e}"), Some(topic)))?
        }
        _ => return Err(Rejection::new("bad_message", "exactly one of payload, payload_b64 is required", Some(topic))),
    };
    Ok(ConsolePublish { topic: msg.topic.clone(), timestamp_ns, payload })
}

/// Accepts console connections until shut down.
pub struct Gateway {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
    connections: Arc<Mutex<Vec<JoinHandle<()>>>>,
}

impl Gateway {
    pub fn bind(addr: impl ToSocketAddrs, factory: ClientFactory, allow: Allowlist) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let connections = Arc::new(Mutex::new(Vec::new()));
        let accept = {
            let stop = stop.clone();
            let connections = connections.clone();
            thread::Builder::new().name("ws-accept".into()).spawn(move || {
                let counter = AtomicU64::new(0);
                while !stop.load(Ordering::Relaxed) {
                    match listener.accept() {
                        Ok((stream, peer)) => {
                            let n = counter.fetch_add(1, Ordering::Relaxed);
                            let (stop, factory, allow) = (stop.clone(), factory.clone(), allow.clone());
                            let h = thread::Builder::new().name(format!("ws-{n}")).spawn(move || {
                                if let Err(e) = serve_console(stream, &format!("console-{n}"), &factory, &allow, &stop) {
                                    debug!("console {peer}: {e}");
                                }
                            });
                            match h {
                                Ok(h) => connections.lock().unwrap_or_else(|p| p.into_inner()).push(h),
                                Err(e) => warn!("cannot spawn console thread: {e}"),
                            }
                        }
                        Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(10)),
                        Err(e) => warn!("websocket accept: {e}"),
                    }
                }
            })?
        };
        info!("websocket gateway on ws://{addr}");
        Ok(Gateway { addr, stop, accept: Some(accept), connections })
    }

    /// Bridges consoles to an in-process broker.
    pub fn local(broker: &Broker, addr: impl ToSocketAddrs) -> io::Result<Self> {
        let broker = broker.clone();
        let factory: ClientFactory =
            Arc::new(move |name: &str| Ok(Box::new(LocalClient::connect(&broker, name)) as Box<dyn BusClient>));
        Gateway::bind(addr, factory, Allowlist::console())
    }

    /// Bridges consoles to a broker over TCP.
    pub fn tcp(broker_addr: SocketAddr, addr: impl ToSocketAddrs) -> io::Result<Self> {
        let factory: ClientFactory = Arc::new(move |name: &str| {
            TcpClient::connect(broker_addr, name).map(|c| Box::new(c) as Box<dyn BusClient>)
        });
        Gateway::bind(addr, factory, Allowlist::console())
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
        let handles = std::mem::take(&mut *self.connections.lock().unwrap_or_else(|p| p.into_inner()));
        for h in handles {
            let _ = h.join();
        }
    }
}

impl Drop for Gateway {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn is_timeout(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if matches!(io.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut))
}

fn serve_console(
    stream: TcpStream,
    name: &str,
    factory: &ClientFactory,
    allow: &Allowlist,
    stop: &AtomicBool,
) -> Result<(), Box<dyn std::error::Error>> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(|e| e.to_string())?;
    ws.get_ref().set_read_timeout(Some(POLL))?;
    let mut client = factory(name)?;
    client.subscribe("*")?;

    loop {
        if stop.load(Ordering::Relaxed) {
            let _ = ws.close(None);
            let _ = ws.flush();
            return Ok(());
        }
        match ws.read() {
            Ok(WsFrame::Text(text)) => {
                let reply = match parse_console_message(text.as_str(), allow) {
                    Ok(p) => match client.publish(&p.topic, p.timestamp_ns, &p.payload) {
                        Ok(_) => None,
                        Err(e) => Some(Rejection::new("publish_failed", e.to_string(), Some(&p.topic))),
                    },
                    Err(r) => Some(r),
                };
                if let Some(r) = reply {
                    ws.send(WsFrame::text(r.to_ws()))?;
                }
            }
            Ok(WsFrame::Binary(_)) => {
                let r = Rejection::new("bad_message", "binary messages are not supported", None);
                ws.send(WsFrame::text(r.to_ws()))?;
            }
            Ok(WsFrame::Close(_)) => {}
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e.into()),
        }
        for _ in 0..BATCH {
            let Some(frame) = client.try_recv()? else { break };
            ws.write(WsFrame::text(to_ws(&frame)))?;
        }
        match ws.flush() {
            Ok(()) => {}
            Err(e) if is_timeout(&e) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e.into()),
        }
    }
}

fn to_ws(frame: &Frame) -> String {
    frame_to_ws(&frame.topic, frame.timestamp_ns, &frame.payload)
}
