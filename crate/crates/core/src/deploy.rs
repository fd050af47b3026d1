//! A complete two-server deployment: parameters, shares, the three user
//! key pairs, and a CSP responder. Used by the CLI, tests and benches.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::net::kgc::{kgc_bootstrap, PartyKind};
use crate::net::{Channel, CspResponder, InProcess};
use crate::pctd::{MasterKey, PartialKeyShare, PublicParams, UserKeyPair};
use crate::protocols::{seed_from, CpContext};

/// Key file names inside a key directory.
pub const FILES: [&str; 6] = ["params.bin", "cp.share", "csp.share", "hospital.key", "patient.key", "sigma.key"];

fn io(e: std::io::Error) -> Error {
    Error::Fixture(e.to_string())
}

/// Randomness for the data owners' own encryptions.
pub fn client_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed ^ 0x5eed_c11e)
}

pub struct Deployment {
    pub pp: Arc<PublicParams>,
    pub cp_share: PartialKeyShare,
    pub csp_share: PartialKeyShare,
    pub hospital: UserKeyPair,
    pub patient: UserKeyPair,
    pub sigma: UserKeyPair,
    master: Option<MasterKey>,
    seed: u64,
}

impl Deployment {
    /// Deterministic bootstrap from a seed.
    pub fn generate(kappa: u32, seed: u64) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (mut kgc, mut dist) = kgc_bootstrap(
            kappa,
            &[("hospital", PartyKind::Hospital), ("patient", PartyKind::Patient)],
            &mut rng,
        )?;
        let (_, sigma) = kgc.authorize("hospital", "patient", "demo", &mut rng)?;
        let master = kgc.master_key().clone();
        Ok(Deployment {
            pp: Arc::new(dist.pp),
            cp_share: dist.cp_share,
            csp_share: dist.csp_share,
            hospital: dist.users.remove("hospital").expect("hospital key"),
            patient: dist.users.remove("patient").expect("patient key"),
            sigma,
            master: Some(master),
            seed,
        })
    }

    /// The undivided λ; only for oracle-side checks. Not kept on disk.
    pub fn master(&self) -> Option<&MasterKey> {
        self.master.as_ref()
    }

    /// Write every key file into `dir` (created if missing).
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(io)?;
        let files = [
            (FILES[0], self.pp.to_bytes()),
            (FILES[1], self.cp_share.to_bytes()),
            (FILES[2], self.csp_share.to_bytes()),
            (FILES[3], self.hospital.to_bytes()),
            (FILES[4], self.patient.to_bytes()),
            (FILES[5], self.sigma.to_bytes()),
        ];
        let mut out = Vec::new();
        for (name, bytes) in files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io)?;
            out.push(path);
        }
        Ok(out)
    }

    /// Read a directory written by [`Deployment::save`]. `seed` only drives
    /// CSP-side randomness.
    pub fn load(dir: &Path, seed: u64) -> Result<Self> {
        let read = |name: &str| fs::read(dir.join(name)).map_err(|e| Error::Fixture(format!("{}: {e}", dir.join(name).display())));
        Ok(Deployment {
            pp: Arc::new(PublicParams::from_bytes(&read(FILES[0])?)?),
            cp_share: PartialKeyShare::from_bytes(&read(FILES[1])?)?,
            csp_share: PartialKeyShare::from_bytes(&read(FILES[2])?)?,
            hospital: UserKeyPair::from_bytes(&read(FILES[3])?)?,
            patient: UserKeyPair::from_bytes(&read(FILES[4])?)?,
            sigma: UserKeyPair::from_bytes(&read(FILES[5])?)?,
            master: None,
            seed,
        })
    }

    pub fn responder(&self) -> CspResponder {
        let seed = seed_from(&[b"csp", &self.seed.to_be_bytes()]);
        CspResponder::new(self.pp.clone(), self.csp_share.clone(), seed).expect("CSP share")
    }

    pub fn context(&self, channel: Arc<dyn Channel>, seed: u64) -> CpContext {
        let keys = [self.hospital.public().clone(), self.patient.public().clone()];
        CpContext::new(
            self.pp.clone(),
            self.cp_share.clone(),
            self.sigma.public().clone(),
            &keys,
            channel,
            seed_from(&[b"cp", &seed.to_be_bytes()]),
        )
        .expect("CP share")
    }

    /// CP context wired to a fresh in-process responder.
    pub fn inproc(&self, seed: u64) -> (CpContext, Arc<CspResponder>) {
        let responder = Arc::new(self.responder());
        let ctx = self.context(Arc::new(InProcess::new(responder.clone())), seed);
        (ctx, responder)
    }
}
