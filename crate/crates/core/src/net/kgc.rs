//! Key generation center: parameters, share split, user keys and
//! authorization records.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pctd::{self, MasterKey, PartialKeyShare, PublicKey, PublicParams, UserKeyPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartyKind {
    Hospital,
    Patient,
}

/// Unsigned authorization certificate for one hospital/patient pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuthorizationRecord {
    pub cert_number: u64,
    pub hospital: String,
    pub patient: String,
    pub service_period: String,
    pub pk_sigma: PublicKey,
}

pub struct Kgc {
    pp: PublicParams,
    master: MasterKey,
    parties: BTreeMap<String, PartyKind>,
    next_cert: u64,
}

/// Everything the bootstrap hands out.
pub struct Distribution {
    pub pp: PublicParams,
    pub cp_share: PartialKeyShare,
    pub csp_share: PartialKeyShare,
    pub users: BTreeMap<String, UserKeyPair>,
}

impl Kgc {
    pub fn new<R: RngCore + ?Sized>(kappa: u32, rng: &mut R) -> Self {
        let (pp, master, _) = pctd::keygen(kappa, rng);
        Kgc { pp, master, parties: BTreeMap::new(), next_cert: 1 }
    }

    pub fn pp(&self) -> &PublicParams {
        &self.pp
    }

    pub fn master_key(&self) -> &MasterKey {
        &self.master
    }

    pub fn register<R: RngCore + ?Sized>(&mut self, id: &str, kind: PartyKind, rng: &mut R) -> Result<UserKeyPair> {
        if self.parties.contains_key(id) {
            return Err(Error::Validation(format!("party {id} already registered")));
        }
        self.parties.insert(id.to_string(), kind);
        Ok(UserKeyPair::generate(&self.pp, rng))
    }

    /// Fresh λ split between CP and CSP.
    pub fn split<R: RngCore + ?Sized>(&self, rng: &mut R) -> (PartialKeyShare, PartialKeyShare) {
        pctd::split_master(&self.pp, &self.master, rng)
    }

    /// Issue (pk_σ, sk_σ); the record goes to the hospital, the key pair to the patient.
    pub fn authorize<R: RngCore + ?Sized>(
        &mut self,
        hospital: &str,
        patient: &str,
        service_period: &str,
        rng: &mut R,
    ) -> Result<(AuthorizationRecord, UserKeyPair)> {
        if self.parties.get(hospital) != Some(&PartyKind::Hospital) {
            return Err(Error::Validation(format!("{hospital} is not a registered hospital")));
        }
        if self.parties.get(patient) != Some(&PartyKind::Patient) {
            return Err(Error::Validation(format!("{patient} is not a registered patient")));
        }
        let sigma = UserKeyPair::generate(&self.pp, rng);
        let record = AuthorizationRecord {
            cert_number: self.next_cert,
            hospital: hospital.to_string(),
            patient: patient.to_string(),
            service_period: service_period.to_string(),
            pk_sigma: sigma.public().clone(),
        };
        self.next_cert += 1;
        Ok((record, sigma))
    }
}

/// Generate parameters, split λ, and issue a key pair per listed party.
pub fn kgc_bootstrap<R: RngCore + ?Sized>(
    kappa: u32,
    parties: &[(&str, PartyKind)],
    rng: &mut R,
) -> Result<(Kgc, Distribution)> {
    let mut kgc = Kgc::new(kappa, rng);
    let (cp_share, csp_share) = kgc.split(rng);
    let mut users = BTreeMap::new();
    for (id, kind) in parties {
        users.insert(id.to_string(), kgc.register(id, *kind, rng)?);
    }
    let dist = Distribution { pp: kgc.pp.clone(), cp_share, csp_share, users };
    Ok((kgc, dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use num_bigint::BigUint;
    use num_traits::{One, Zero};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn bootstrap_and_authorize() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (mut kgc, d) =
            kgc_bootstrap(32, &[("H", PartyKind::Hospital), ("P", PartyKind::Patient)], &mut rng).unwrap();
        let sum = d.cp_share.share() + d.csp_share.share();
        assert!((&sum % d.pp.n_squared()).is_one());
        assert!((&sum % kgc.master.lambda()).is_zero());
        let (rec, sigma) = kgc.authorize("H", "P", "2026-Q4", &mut rng).unwrap();
        assert_eq!(&rec.pk_sigma, sigma.public());
        let ct = pctd::encrypt_u64(&d.pp, &rec.pk_sigma, 42, &mut rng).unwrap();
        assert_eq!(pctd::weak_decrypt(&d.pp, &sigma, &ct).unwrap(), BigUint::from(42u8));
        assert_eq!(pctd::weak_decrypt(&d.pp, &d.users["H"], &ct), Err(Error::WrongKey));
        assert!(kgc.authorize("P", "H", "x", &mut rng).is_err());
    }

    #[test]
    fn duplicate_party() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let r = kgc_bootstrap(32, &[("H", PartyKind::Hospital), ("H", PartyKind::Patient)], &mut rng);
        assert!(matches!(r, Err(Error::Validation(_))));
    }
}
