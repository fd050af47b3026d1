use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::frame::{control, Frame, ProtocolId, SessionId, PROTOCOL_VERSION};
use crate::error::{Error, Result};
use crate::pctd::{codec, PartialKeyShare, PublicParams, Role};
use crate::protocols::{csp, seed_from};

/// One decrypted CSP view, captured in debug mode.
#[derive(Clone, Debug)]
pub struct TapRecord {
    pub session: SessionId,
    pub step: u8,
    pub protocol: ProtocolId,
    pub values: Vec<BigUint>,
}

/// CSP's session-aware dispatcher. Holds λ₂ only.
pub struct CspResponder {
    pp: Arc<PublicParams>,
    share: PartialKeyShare,
    seed: [u8; 32],
    sessions: Mutex<HashMap<SessionId, u8>>,
    tap: Option<Mutex<Vec<TapRecord>>>,
}

impl CspResponder {
    pub fn new(pp: Arc<PublicParams>, share: PartialKeyShare, seed: [u8; 32]) -> Result<Self> {
        if share.role() != Role::Csp {
            return Err(Error::Precondition("CSP responder needs the CSP key share".into()));
        }
        Ok(CspResponder { pp, share, seed, sessions: Mutex::new(HashMap::new()), tap: None })
    }

    /// Record every plaintext CSP decrypts. Test use only.
    pub fn with_tap(mut self) -> Self {
        self.tap = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn take_tap(&self) -> Vec<TapRecord> {
        self.tap.as_ref().map(|t| std::mem::take(&mut *t.lock().unwrap())).unwrap_or_default()
    }

    pub fn open_sessions(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    /// Handle one frame. `None` means no reply is due.
    pub fn handle(&self, frame: &Frame) -> Option<Frame> {
        if frame.protocol == ProtocolId::Control {
            return self.control(frame);
        }
        {
            let mut sessions = self.sessions.lock().unwrap();
            let expected = sessions.get(&frame.session).copied().unwrap_or(0);
            if frame.step != expected {
                sessions.remove(&frame.session);
                return Some(Frame::abort(
                    frame.session,
                    &format!("out-of-order step {} (expected {expected})", frame.step),
                ));
            }
            sessions.insert(frame.session, expected.wrapping_add(1));
        }
        let mut rng = ChaCha20Rng::from_seed(seed_from(&[&self.seed, &frame.session.0, &[frame.step]]));
        let (session, step) = (frame.session, frame.step);
        let record = |protocol: ProtocolId, values: &[BigUint]| {
            if let Some(t) = &self.tap {
                t.lock().unwrap().push(TapRecord { session, step, protocol, values: values.to_vec() });
            }
        };
        let tap: Option<csp::Tap<'_>> = if self.tap.is_some() { Some(&record) } else { None };
        match csp::respond(&self.pp, &self.share, frame.protocol, &frame.payload, &mut rng, tap) {
            Ok(payload) => Some(Frame::new(frame.session, frame.protocol, frame.step, payload)),
            Err(e) => {
                self.sessions.lock().unwrap().remove(&frame.session);
                Some(Frame::abort(frame.session, &e.to_string()))
            }
        }
    }

    fn control(&self, frame: &Frame) -> Option<Frame> {
        match frame.step {
            control::HELLO => {
                let mut payload = Vec::new();
                codec::put_int(&mut payload, &BigUint::from(PROTOCOL_VERSION));
                codec::put_int(&mut payload, &BigUint::from(1u8));
                Some(Frame::new(frame.session, ProtocolId::Control, control::HELLO, payload))
            }
            control::END_SESSION => {
                self.sessions.lock().unwrap().remove(&frame.session);
                None
            }
            control::BYE => None,
            other => Some(Frame::abort(frame.session, &format!("unexpected control step {other}"))),
        }
    }
}
