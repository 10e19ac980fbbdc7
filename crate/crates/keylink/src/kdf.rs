//! Keyed key derivation: one step is k' = f_k(encode(r, r')) for a keyed
//! pseudorandom function f, chains fold that step along a label path.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::access::ResourceId;
use crate::error::{Error, Result};
use crate::linker::LinkForest;

pub const KEY_LEN: usize = 32; // 256-bit keys

/// Fixed-length secret key bytes. Zeroed on drop; equality is
/// constant-time.
#[derive(Clone)]
pub struct KeyMaterial {
    bytes: Vec<u8>,
}

impl KeyMaterial {
    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() != KEY_LEN {
            return Err(Error::Kdf(format!(
                "key material must be {KEY_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        Ok(KeyMaterial { bytes })
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s.trim()).map_err(|e| Error::Kdf(format!("bad hex: {e}")))?;
        KeyMaterial::new(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }
}

impl PartialEq for KeyMaterial {
    fn eq(&self, other: &Self) -> bool {
        let mut diff = self.bytes.len() ^ other.bytes.len();
        for (a, b) in self.bytes.iter().zip(&other.bytes) {
            diff |= (a ^ b) as usize;
        }
        diff == 0
    }
}
impl Eq for KeyMaterial {}

impl Drop for KeyMaterial {
    fn drop(&mut self) {
        for b in self.bytes.iter_mut() {
            unsafe { std::ptr::write_volatile(b, 0) };
        }
    }
}

impl std::fmt::Debug for KeyMaterial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "KeyMaterial(<{} bytes>)", self.bytes.len())
    }
}

/// Keyed derivation function. Deterministic; output length equals the key
/// length so derived outputs can key further derivations.
pub trait PrfContract {
    fn derive(&self, key: &KeyMaterial, input: &[u8]) -> KeyMaterial;
}

/// HMAC-SHA-256, written out against the RFC 2104 pad construction and
/// checked against the RFC 4231 test vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct HmacSha256;

const BLOCK: usize = 64;

pub fn hmac_sha256(key: &[u8], message: &[u8]) -> [u8; 32] {
    let mut block_key = [0u8; BLOCK];
    if key.len() > BLOCK {
        block_key[..32].copy_from_slice(&Sha256::digest(key));
    } else {
        block_key[..key.len()].copy_from_slice(key);
    }
    let mut ipad = [0u8; BLOCK];
    let mut opad = [0u8; BLOCK];
    for i in 0..BLOCK {
        ipad[i] = block_key[i] ^ 0x36;
        opad[i] = block_key[i] ^ 0x5c;
    }
    let mut inner = Sha256::new();
    inner.update(ipad);
    inner.update(message);
    let inner_digest = inner.finalize();
    let mut outer = Sha256::new();
    outer.update(opad);
    outer.update(inner_digest);
    outer.finalize().into()
}

impl PrfContract for HmacSha256 {
    fn derive(&self, key: &KeyMaterial, input: &[u8]) -> KeyMaterial {
        KeyMaterial::new(hmac_sha256(key.as_bytes(), input).to_vec()).expect("32-byte digest")
    }
}

/// Injective encoding of a label pair: big-endian 4-byte length prefixes
/// keep ("r1","r2") and ("r","1r2") apart.
pub fn encode_label(src: &ResourceId, dst: &ResourceId) -> Result<Vec<u8>> {
    if src == dst {
        return Err(Error::Kdf(format!("identical labels {src}")));
    }
    let s = src.as_str().as_bytes();
    let d = dst.as_str().as_bytes();
    let mut out = Vec::with_capacity(8 + s.len() + d.len());
    out.extend_from_slice(&(s.len() as u32).to_be_bytes());
    out.extend_from_slice(s);
    out.extend_from_slice(&(d.len() as u32).to_be_bytes());
    out.extend_from_slice(d);
    Ok(out)
}

pub fn derive_key(
    k: &KeyMaterial,
    src: &ResourceId,
    dst: &ResourceId,
    f: &dyn PrfContract,
) -> Result<KeyMaterial> {
    Ok(f.derive(k, &encode_label(src, dst)?))
}

/// Fold derive_key along consecutive label pairs of the path.
pub fn derive_chain(
    k: &KeyMaterial,
    path: &[ResourceId],
    f: &dyn PrfContract,
) -> Result<KeyMaterial> {
    if path.len() < 2 {
        return Err(Error::Kdf("derivation path needs at least two labels".into()));
    }
    let mut key = k.clone();
    for pair in path.windows(2) {
        key = derive_key(&key, &pair[0], &pair[1], f)?;
    }
    Ok(key)
}

/// Key of a resource under a link forest: a root's key is its seed, any
/// other key is derived from its parent's key along the parent->child edge.
pub fn resource_key(
    forest: &LinkForest,
    seeds: &BTreeMap<ResourceId, KeyMaterial>,
    r: &ResourceId,
    f: &dyn PrfContract,
) -> Result<KeyMaterial> {
    // path from r up to its root
    let mut path = vec![r.clone()];
    let mut cur = r;
    while let Some(p) = forest.parent(cur) {
        if path.contains(p) {
            return Err(Error::Kdf(format!("cycle in forest through {p}")));
        }
        path.push(p.clone());
        cur = p;
    }
    path.reverse();
    let root = &path[0];
    let seed = seeds
        .get(root)
        .ok_or_else(|| Error::Kdf(format!("missing seed for root {root}")))?;
    if path.len() == 1 {
        return Ok(seed.clone());
    }
    derive_chain(seed, &path, f)
}
