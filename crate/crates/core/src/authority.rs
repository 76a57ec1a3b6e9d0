//! The trusted authority: key generation, signed token roots and verifiable
//! tally decryption.

use std::sync::OnceLock;

use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{
    hash, Ciphertext, DomainTag, CryptoError, Digest, DlogTable, EncKeyPair, EncPublicKey, SigKeyPair,
    SigVerifyingKey, Signature,
};
use crate::merkle::{mt_root, token_leaf};
use crate::nizk::{prove_decryption, DecryptionProof, DecryptionStatement, NizkError};
use crate::params::{ElectionId, PartyId};
use crate::tally::basis_points;

/// Everything the board needs to initialize.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetupBundle {
    pub pk_enc: EncPublicKey,
    pub vk_sig: SigVerifyingKey,
    pub token_list: Vec<u64>,
    pub token_root: Digest,
    pub root_sig: Signature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transfer {
    pub from: PartyId,
    pub to: PartyId,
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyResult {
    pub eid: ElectionId,
    pub counts: Vec<u64>,
    pub percentages: Vec<u32>,
    pub no_votes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthorityError {
    #[error("party {party} holds {tokens} tokens, above the bound {bound}")]
    TokenOutOfBound { party: PartyId, tokens: u64, bound: u64 },
    #[error("empty token list")]
    EmptyTokenList,
    #[error("transfer {index} does not apply to the current token list")]
    InconsistentEvents { index: usize },
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("tally for option {option} decrypts to a negative count")]
    NegativeCount { option: usize },
    #[error(transparent)]
    Proof(#[from] NizkError),
}

/// Message the authority signs for a token root.
pub fn root_message(root: &Digest) -> Digest {
    hash(DomainTag::RootSignature, root.as_bytes())
}

pub fn token_root(token_list: &[u64]) -> Digest {
    let leaves: Vec<_> = token_list
        .iter()
        .enumerate()
        .map(|(i, t)| token_leaf(PartyId(i as u32), *t))
        .collect();
    mt_root(&leaves).expect("nonempty token list")
}

#[derive(Serialize, Deserialize)]
struct Persisted {
    enc: EncKeyPair,
    #[serde(with = "hex::serde")]
    sig_secret: [u8; 32],
    token_list: Vec<u64>,
    token_root: Digest,
}

/// Holds both secret keys. Serializable so a node can keep it on disk.
#[derive(Serialize, Deserialize)]
#[serde(from = "Persisted", into = "Persisted")]
pub struct Authority {
    enc: EncKeyPair,
    sig: SigKeyPair,
    token_list: Vec<u64>,
    token_root: Digest,
    table: OnceLock<DlogTable>,
}

impl From<Persisted> for Authority {
    fn from(p: Persisted) -> Self {
        Authority {
            enc: p.enc,
            sig: SigKeyPair::from_secret_bytes(&p.sig_secret),
            token_list: p.token_list,
            token_root: p.token_root,
            table: OnceLock::new(),
        }
    }
}

impl From<Authority> for Persisted {
    fn from(a: Authority) -> Self {
        Persisted {
            sig_secret: a.sig.secret_bytes(),
            enc: a.enc,
            token_list: a.token_list,
            token_root: a.token_root,
        }
    }
}

impl Clone for Authority {
    fn clone(&self) -> Self {
        Authority {
            enc: self.enc.clone(),
            sig: self.sig.clone(),
            token_list: self.token_list.clone(),
            token_root: self.token_root,
            table: self.table.clone(),
        }
    }
}

impl std::fmt::Debug for Authority {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Authority")
            .field("pk_enc", &self.enc.pk)
            .field("vk_sig", &self.sig.vk)
            .field("token_root", &self.token_root)
            .finish_non_exhaustive()
    }
}

impl Authority {
    /// Generates both keypairs, signs the token root and returns the public
    /// bundle alongside the secret-holding authority.
    pub fn setup<R: RngCore + CryptoRng>(
        token_list: &[u64],
        bound: u64,
        rng: &mut R,
    ) -> Result<(SetupBundle, Authority), AuthorityError> {
        if token_list.is_empty() {
            return Err(AuthorityError::EmptyTokenList);
        }
        if let Some((i, &t)) = token_list.iter().enumerate().find(|(_, &t)| t > bound) {
            return Err(AuthorityError::TokenOutOfBound {
                party: PartyId(i as u32),
                tokens: t,
                bound,
            });
        }
        let enc = EncKeyPair::generate(rng);
        let sig = SigKeyPair::generate(rng);
        let root = token_root(token_list);
        let authority = Authority {
            enc,
            sig,
            token_list: token_list.to_vec(),
            token_root: root,
            table: OnceLock::new(),
        };
        Ok((authority.bundle(), authority))
    }

    pub fn bundle(&self) -> SetupBundle {
        SetupBundle {
            pk_enc: self.enc.pk,
            vk_sig: self.sig.vk,
            token_list: self.token_list.clone(),
            token_root: self.token_root,
            root_sig: self.sign_root(&self.token_root),
        }
    }

    pub fn pk_enc(&self) -> EncPublicKey {
        self.enc.pk
    }

    pub fn vk_sig(&self) -> SigVerifyingKey {
        self.sig.vk
    }

    pub fn token_list(&self) -> &[u64] {
        &self.token_list
    }

    pub fn current_root(&self) -> Digest {
        self.token_root
    }

    /// Test and tooling access to the decryption key.
    pub fn enc_keys(&self) -> &EncKeyPair {
        &self.enc
    }

    fn sign_root(&self, root: &Digest) -> Signature {
        self.sig.sign(root_message(root).as_bytes())
    }

    fn max_total(&self) -> u64 {
        self.token_list.iter().sum::<u64>().max(1)
    }

    pub fn dlog_table(&self) -> &DlogTable {
        self.table.get_or_init(|| DlogTable::new(self.max_total()))
    }

    /// Applies transfers in order and signs the resulting root. Nothing is
    /// applied unless every transfer is consistent.
    pub fn refresh_root(
        &mut self,
        transfers: &[Transfer],
    ) -> Result<(Digest, Signature), AuthorityError> {
        let mut list = self.token_list.clone();
        for (index, tr) in transfers.iter().enumerate() {
            let bad = AuthorityError::InconsistentEvents { index };
            let (f, t) = (tr.from.index(), tr.to.index());
            if f >= list.len() || t >= list.len() || list[f] < tr.amount {
                return Err(bad);
            }
            list[f] -= tr.amount;
            list[t] = list[t].checked_add(tr.amount).ok_or(bad)?;
        }
        self.token_root = token_root(&list);
        self.token_list = list;
        Ok((self.token_root, self.sign_root(&self.token_root)))
    }

    /// Adopts a ledger observed on the board, e.g. after a crash between a
    /// transfer and its root refresh. The total supply must not change.
    pub fn observe_ledger(
        &mut self,
        balances: &[u64],
    ) -> Result<(Digest, Signature), AuthorityError> {
        let same_total = balances.iter().sum::<u64>() == self.token_list.iter().sum::<u64>();
        if balances.len() != self.token_list.len() || !same_total {
            return Err(AuthorityError::InconsistentEvents { index: 0 });
        }
        self.token_list = balances.to_vec();
        self.token_root = token_root(balances);
        Ok((self.token_root, self.sign_root(&self.token_root)))
    }

    pub fn decrypt_counts(&self, tallies: &[Ciphertext]) -> Result<Vec<u64>, AuthorityError> {
        tallies
            .iter()
            .enumerate()
            .map(|(option, ct)| {
                let m = self.enc.decrypt(ct, self.dlog_table())?;
                u64::try_from(m).map_err(|_| AuthorityError::NegativeCount { option })
            })
            .collect()
    }

    pub fn tally_decrypt<R: RngCore + CryptoRng>(
        &self,
        eid: ElectionId,
        tallies: &[Ciphertext],
        rng: &mut R,
    ) -> Result<(TallyResult, DecryptionProof), AuthorityError> {
        let counts = self.decrypt_counts(tallies)?;
        let stmt = DecryptionStatement {
            pk: self.enc.pk,
            tally_cts: tallies.to_vec(),
            plain_counts: counts.clone(),
        };
        let proof = prove_decryption(&stmt, &self.enc.sk, rng)?;
        let result = TallyResult {
            eid,
            percentages: basis_points(&counts),
            no_votes: counts.iter().all(|&c| c == 0),
            counts: counts.clone(),
        };
        Ok((result, DecryptionProof { counts, proof }))
    }
}
