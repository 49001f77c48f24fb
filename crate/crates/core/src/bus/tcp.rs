use std::io::{self, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use log::{debug, warn};

use super::broker::{Broker, BrokerError, ErrorCode};
use super::frame::{read_frame, write_frame};

pub const DEFAULT_PORT: u16 = 7777;

/// TCP front end for a [`Broker`]. Each connection gets a reader thread that
/// applies incoming frames and a writer thread that drains its mailbox.
pub struct BrokerServer {
    addr: SocketAddr,
    broker: Broker,
    stop: Arc<AtomicBool>,
    streams: Arc<Mutex<Vec<TcpStream>>>,
    accept: Option<JoinHandle<()>>,
}

impl BrokerServer {
    pub fn bind(broker: Broker, addr: impl ToSocketAddrs) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let streams = Arc::new(Mutex::new(Vec::new()));
        let accept = {
            let (broker, stop, streams) = (broker.clone(), stop.clone(), streams.clone());
            thread::Builder::new()
                .name("bus-accept".into())
                .spawn(move || accept_loop(listener, broker, stop, streams))?
        };
        Ok(BrokerServer { addr, broker, stop, streams, accept: Some(accept) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn broker(&self) -> &Broker {
        &self.broker
    }

    pub fn shutdown(&mut self) {
        self.stop.store(true, Ordering::Release);
        for s in self.streams.lock().unwrap_or_else(|p| p.into_inner()).drain(..) {
            let _ = s.shutdown(std::net::Shutdown::Both);
        }
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for BrokerServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn accept_loop(listener: TcpListener, broker: Broker, stop: Arc<AtomicBool>, streams: Arc<Mutex<Vec<TcpStream>>>) {
    while !stop.load(Ordering::Acquire) {
        match listener.accept() {
            Ok((stream, peer)) => {
                debug!("bus connection from {peer}");
                if let Ok(clone) = stream.try_clone() {
                    let mut all = streams.lock().unwrap_or_else(|p| p.into_inner());
                    all.retain(|s| s.peer_addr().is_ok());
                    all.push(clone);
                }
                let broker = broker.clone();
                let _ = thread::Builder::new()
                    .name(format!("bus-session-{peer}"))
                    .spawn(move || serve_connection(stream, broker));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(e) => {
                warn!("accept failed: {e}");
                thread::sleep(Duration::from_millis(50));
            }
        }
    }
}

fn serve_connection(stream: TcpStream, broker: Broker) {
    let _ = stream.set_nonblocking(false);
    let _ = stream.set_nodelay(true);
    let (id, mailbox) = broker.connect();
    let Ok(write_half) = stream.try_clone() else {
        broker.disconnect(id);
        return;
    };
    let writer = {
        let mailbox = mailbox.clone();
        let broker = broker.clone();
        thread::spawn(move || {
            let mut out = BufWriter::new(write_half);
            loop {
                match mailbox.pop_timeout(Duration::from_millis(100)) {
                    Some(frame) => {
                        if write_frame(&mut out, &frame).is_err() {
                            break;
                        }
                        if mailbox.is_empty() && out.flush().is_err() {
                            break;
                        }
                    }
                    None if mailbox.is_closed() => break,
                    None => {}
                }
            }
            let _ = out.flush();
            broker.disconnect(id);
        })
    };
    let mut reader = BufReader::new(stream);
    loop {
        match read_frame(&mut reader) {
            Ok(Some(frame)) => {
                if let Some(reply) = broker.handle(id, frame) {
                    broker.send_to(id, reply);
                }
            }
            Ok(None) => break,
            Err(e) => {
                if e.kind() == io::ErrorKind::InvalidData {
                    let err = BrokerError::new(ErrorCode::Protocol, e.to_string());
                    broker.send_to(id, err.to_frame("", 0));
                    thread::sleep(Duration::from_millis(20));
                }
                break;
            }
        }
    }
    broker.disconnect(id);
    let _ = writer.join();
    let _ = reader.get_ref().shutdown(std::net::Shutdown::Both);
}

/// Writes raw bytes on a socket; used by tests to inject malformed input.
pub fn send_raw(stream: &mut TcpStream, bytes: &[u8]) -> io::Result<()> {
    stream.write_all(bytes)?;
    stream.flush()
}
