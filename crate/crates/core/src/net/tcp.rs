//! TCP transport: one persistent connection multiplexing sessions.

use std::collections::HashMap;
use std::io::{BufReader, BufWriter};
use std::net::{IpAddr, Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use num_bigint::BigUint;

use super::frame::{control, Frame, ProtocolId, SessionId, PROTOCOL_VERSION};
use super::{Channel, CspResponder};
use crate::error::{Error, Result};
use crate::pctd::codec;

const CONTROL_SESSION: SessionId = SessionId([0; 16]);

/// Running CSP listener. Dropping it stops accepting new connections.
pub struct CspServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl CspServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Block until the accept loop exits.
    pub fn join(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for CspServer {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.shutdown();
        }
    }
}

pub fn serve_csp<A: ToSocketAddrs>(addr: A, responder: Arc<CspResponder>) -> Result<CspServer> {
    serve_csp_for(addr, responder, None)
}

/// Like [`serve_csp`], but drops connections whose peer IP is not `peer`.
pub fn serve_csp_for<A: ToSocketAddrs>(addr: A, responder: Arc<CspResponder>, peer: Option<IpAddr>) -> Result<CspServer> {
    let listener = TcpListener::bind(addr).map_err(|e| Error::Transport(e.to_string()))?;
    let local = listener.local_addr().map_err(|e| Error::Transport(e.to_string()))?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    let accept = std::thread::spawn(move || {
        for stream in listener.incoming() {
            if flag.load(Ordering::SeqCst) {
                break;
            }
            if let Ok(stream) = stream {
                if peer.is_some_and(|ip| stream.peer_addr().map_or(true, |a| a.ip() != ip)) {
                    let _ = stream.shutdown(Shutdown::Both);
                    continue;
                }
                let responder = responder.clone();
                std::thread::spawn(move || serve_connection(stream, responder));
            }
        }
    });
    Ok(CspServer { addr: local, stop, accept: Some(accept) })
}

fn serve_connection(stream: TcpStream, responder: Arc<CspResponder>) {
    let _ = stream.set_nodelay(true);
    let Ok(read_half) = stream.try_clone() else { return };
    let writer = Arc::new(Mutex::new(BufWriter::new(stream)));
    let mut reader = BufReader::new(read_half);
    loop {
        match Frame::read_from(&mut reader) {
            Ok(Some(frame)) => {
                if frame.protocol == ProtocolId::Control && frame.step == control::BYE {
                    break;
                }
                let responder = responder.clone();
                let writer = writer.clone();
                std::thread::spawn(move || {
                    if let Some(reply) = responder.handle(&frame) {
                        let _ = reply.write_to(&mut *writer.lock().unwrap());
                    }
                });
            }
            Ok(None) => break,
            Err(e) => {
                let _ = Frame::abort(CONTROL_SESSION, &e.to_string()).write_to(&mut *writer.lock().unwrap());
                break;
            }
        }
    }
    let _ = writer.lock().unwrap().get_ref().shutdown(Shutdown::Both);
}

type Waiter = mpsc::Sender<Result<Frame>>;

#[derive(Default)]
struct Pending {
    waiters: HashMap<SessionId, Waiter>,
    closed: Option<String>,
}

impl Pending {
    fn fail_all(&mut self, reason: &str) {
        self.closed = Some(reason.to_string());
        for (_, w) in self.waiters.drain() {
            let _ = w.send(Err(Error::SessionAbort(reason.to_string())));
        }
    }
}

/// CP side of a TCP link.
pub struct TcpChannel {
    writer: Mutex<BufWriter<TcpStream>>,
    pending: Arc<Mutex<Pending>>,
    reader: Option<JoinHandle<()>>,
}

pub fn connect_cp<A: ToSocketAddrs>(addr: A) -> Result<TcpChannel> {
    let stream = TcpStream::connect(addr).map_err(|e| Error::Transport(e.to_string()))?;
    let _ = stream.set_nodelay(true);
    let read_half = stream.try_clone().map_err(|e| Error::Transport(e.to_string()))?;
    let pending = Arc::new(Mutex::new(Pending::default()));
    let shared = pending.clone();
    let reader = std::thread::spawn(move || {
        let mut reader = BufReader::new(read_half);
        loop {
            match Frame::read_from(&mut reader) {
                Ok(Some(frame)) => {
                    let mut p = shared.lock().unwrap();
                    match p.waiters.remove(&frame.session) {
                        Some(w) => {
                            let _ = w.send(Ok(frame));
                        }
                        None if frame.is_abort() => {
                            let msg = String::from_utf8_lossy(&frame.payload).into_owned();
                            p.fail_all(&msg);
                            return;
                        }
                        None => {}
                    }
                }
                Ok(None) => {
                    shared.lock().unwrap().fail_all("connection closed by peer");
                    return;
                }
                Err(e) => {
                    shared.lock().unwrap().fail_all(&format!("connection lost: {e}"));
                    return;
                }
            }
        }
    });
    let chan = TcpChannel { writer: Mutex::new(BufWriter::new(stream)), pending, reader: Some(reader) };
    let mut hello = Vec::new();
    codec::put_int(&mut hello, &BigUint::from(PROTOCOL_VERSION));
    codec::put_int(&mut hello, &BigUint::from(0u8));
    let reply = chan.call(Frame::new(CONTROL_SESSION, ProtocolId::Control, control::HELLO, hello))?;
    let vals = codec::decode_ints(&reply.payload)?;
    if reply.step != control::HELLO || vals.first() != Some(&BigUint::from(PROTOCOL_VERSION)) {
        return Err(Error::Transport("handshake failed".into()));
    }
    Ok(chan)
}

impl TcpChannel {
    fn send(&self, frame: &Frame) -> Result<()> {
        frame.write_to(&mut *self.writer.lock().unwrap())
    }
}

impl Channel for TcpChannel {
    fn call(&self, request: Frame) -> Result<Frame> {
        let (tx, rx) = mpsc::channel();
        {
            let mut p = self.pending.lock().unwrap();
            if let Some(reason) = &p.closed {
                return Err(Error::SessionAbort(reason.clone()));
            }
            if p.waiters.insert(request.session, tx).is_some() {
                return Err(Error::Precondition("two outstanding requests in one session".into()));
            }
        }
        if let Err(e) = self.send(&request) {
            self.pending.lock().unwrap().waiters.remove(&request.session);
            return Err(e);
        }
        rx.recv().map_err(|_| Error::SessionAbort("connection closed".into()))?
    }

    fn notify(&self, frame: Frame) -> Result<()> {
        if let Some(reason) = &self.pending.lock().unwrap().closed {
            return Err(Error::SessionAbort(reason.clone()));
        }
        self.send(&frame)
    }
}

impl Drop for TcpChannel {
    fn drop(&mut self) {
        let _ = self.send(&Frame::new(CONTROL_SESSION, ProtocolId::Control, control::BYE, Vec::new()));
        if let Ok(w) = self.writer.lock() {
            let _ = w.get_ref().shutdown(Shutdown::Both);
        }
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
    }
}
