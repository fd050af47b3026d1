//! Transports between CP and CSP, plus key distribution.

pub mod frame;
pub mod kgc;
mod responder;
pub mod tcp;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use crate::error::Result;
use frame::{Frame, SessionId};

pub use responder::{CspResponder, TapRecord};

/// CP's view of a link to CSP.
pub trait Channel: Send + Sync {
    /// Send a request and wait for the reply to it.
    fn call(&self, request: Frame) -> Result<Frame>;
    /// Send a frame that gets no reply.
    fn notify(&self, frame: Frame) -> Result<()>;
}

/// Direct in-process link. Frames still go through encode/decode.
pub struct InProcess {
    responder: Arc<CspResponder>,
}

impl InProcess {
    pub fn new(responder: Arc<CspResponder>) -> Self {
        InProcess { responder }
    }

    pub fn responder(&self) -> &Arc<CspResponder> {
        &self.responder
    }

    fn deliver(&self, frame: &Frame) -> Result<Option<Frame>> {
        let wire = Frame::decode(&frame.encode())?;
        match self.responder.handle(&wire) {
            Some(reply) => Ok(Some(Frame::decode(&reply.encode())?)),
            None => Ok(None),
        }
    }
}

impl Channel for InProcess {
    fn call(&self, request: Frame) -> Result<Frame> {
        self.deliver(&request)?
            .ok_or_else(|| crate::Error::SessionAbort("no reply from responder".into()))
    }

    fn notify(&self, frame: Frame) -> Result<()> {
        self.deliver(&frame).map(|_| ())
    }
}

/// Captured wire bytes, grouped per session in send order.
#[derive(Default)]
pub struct Transcript {
    sessions: Mutex<BTreeMap<SessionId, Vec<Vec<u8>>>>,
}

impl Transcript {
    fn push(&self, sid: SessionId, bytes: Vec<u8>) {
        self.sessions.lock().unwrap().entry(sid).or_default().push(bytes);
    }

    /// Session-ordered view, independent of how sessions interleaved.
    pub fn canonical(&self) -> BTreeMap<SessionId, Vec<Vec<u8>>> {
        self.sessions.lock().unwrap().clone()
    }

    pub fn frame_count(&self) -> usize {
        self.sessions.lock().unwrap().values().map(Vec::len).sum()
    }
}

/// Wraps a channel and records every frame in both directions.
pub struct Recording<C> {
    inner: C,
    transcript: Arc<Transcript>,
}

impl<C: Channel> Recording<C> {
    pub fn new(inner: C) -> Self {
        Recording { inner, transcript: Arc::new(Transcript::default()) }
    }

    pub fn transcript(&self) -> Arc<Transcript> {
        self.transcript.clone()
    }
}

impl<C: Channel> Channel for Recording<C> {
    fn call(&self, request: Frame) -> Result<Frame> {
        self.transcript.push(request.session, request.encode());
        let reply = self.inner.call(request)?;
        self.transcript.push(reply.session, reply.encode());
        Ok(reply)
    }

    fn notify(&self, frame: Frame) -> Result<()> {
        self.transcript.push(frame.session, frame.encode());
        self.inner.notify(frame)
    }
}
