use std::path::Path;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::model::Participant;
use crate::store::{self, Store};

/// Entry point tying the store to the relay, experiment-manager, export and integrity
/// operations (implemented in their own modules).
pub struct Platform {
    pub(crate) store: Store,
}

impl Platform {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::with_store(Store::open(path)?))
    }

    pub fn in_memory() -> Result<Self> {
        Ok(Self::with_store(Store::open_in_memory()?))
    }

    pub fn with_store(store: Store) -> Self {
        Self { store }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn authenticate(&self, token: &str) -> Result<Participant> {
        let hash = hash_token(token);
        self.store
            .read(|conn| store::participant_by_token_hash(conn, &hash))
    }
}

/// 256 random bits, URL-safe base64 without padding (43 characters).
pub(crate) fn new_token() -> String {
    let mut bytes = [0u8; 32];
    rand::rng().fill_bytes(&mut bytes);
    URL_SAFE_NO_PAD.encode(bytes)
}

pub(crate) fn hash_token(token: &str) -> String {
    format!("{:x}", Sha256::digest(token.as_bytes()))
}
