//! Passcode-protected session containers (`.pfb`).
//!
//! Layout, integers big-endian:
//!
//! | bytes | field                                  |
//! |-------|----------------------------------------|
//! | 4     | magic `PFB1`                           |
//! | 16    | PBKDF2 salt                            |
//! | 4     | PBKDF2-HMAC-SHA256 iteration count     |
//! | 12    | AES-GCM nonce                          |
//! | rest  | AES-256-GCM ciphertext with 16-byte tag |
//!
//! The 36-byte header is bound to the ciphertext as associated data.

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes256Gcm, Key, Nonce};
use rand::rngs::OsRng;
use rand::RngCore;
use sha2::Sha256;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"PFB1";
pub const SALT_LEN: usize = 16;
pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;
pub const HEADER_LEN: usize = 4 + SALT_LEN + 4 + NONCE_LEN;
pub const DEFAULT_KDF_ITERATIONS: u32 = 310_000;
/// Containers asking for more work than this are refused unread.
pub const MAX_KDF_ITERATIONS: u32 = 10_000_000;
pub const FILE_EXTENSION: &str = "pfb";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StoreError {
    #[error("passcode must not be empty")]
    EmptyPasscode,
    #[error("wrong passcode or the container was modified")]
    WrongPasscodeOrTampered,
    #[error("not a valid container: {0}")]
    MalformedContainer(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedContainer {
    pub kdf_salt: [u8; SALT_LEN],
    pub kdf_iterations: u32,
    pub nonce: [u8; NONCE_LEN],
    pub ciphertext: Vec<u8>,
}

impl EncryptedContainer {
    fn header(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[..4].copy_from_slice(MAGIC);
        h[4..20].copy_from_slice(&self.kdf_salt);
        h[20..24].copy_from_slice(&self.kdf_iterations.to_be_bytes());
        h[24..].copy_from_slice(&self.nonce);
        h
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.ciphertext.len());
        out.extend_from_slice(&self.header());
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StoreError> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(StoreError::MalformedContainer("missing PFB1 magic"));
        }
        if bytes.len() < HEADER_LEN + TAG_LEN {
            return Err(StoreError::MalformedContainer("truncated"));
        }
        let kdf_iterations = u32::from_be_bytes(bytes[20..24].try_into().unwrap());
        if kdf_iterations == 0 || kdf_iterations > MAX_KDF_ITERATIONS {
            return Err(StoreError::MalformedContainer(
                "KDF iteration count out of range",
            ));
        }
        Ok(EncryptedContainer {
            kdf_salt: bytes[4..20].try_into().unwrap(),
            kdf_iterations,
            nonce: bytes[24..HEADER_LEN].try_into().unwrap(),
            ciphertext: bytes[HEADER_LEN..].to_vec(),
        })
    }
}

/// True when `bytes` start with the container magic.
pub fn is_container(bytes: &[u8]) -> bool {
    bytes.starts_with(MAGIC)
}

fn derive_key(passcode: &str, salt: &[u8], iterations: u32) -> Key<Aes256Gcm> {
    let mut key = Key::<Aes256Gcm>::default();
    pbkdf2::pbkdf2_hmac::<Sha256>(passcode.as_bytes(), salt, iterations, &mut key);
    key
}

pub fn encrypt(plaintext: &[u8], passcode: &str) -> Result<EncryptedContainer, StoreError> {
    encrypt_with_iterations(plaintext, passcode, DEFAULT_KDF_ITERATIONS)
}

/// Encrypt with a fresh random salt and nonce.
pub fn encrypt_with_iterations(
    plaintext: &[u8],
    passcode: &str,
    kdf_iterations: u32,
) -> Result<EncryptedContainer, StoreError> {
    if passcode.is_empty() {
        return Err(StoreError::EmptyPasscode);
    }
    assert!(
        (1..=MAX_KDF_ITERATIONS).contains(&kdf_iterations),
        "KDF iteration count out of range"
    );
    let mut kdf_salt = [0u8; SALT_LEN];
    let mut nonce = [0u8; NONCE_LEN];
    OsRng.fill_bytes(&mut kdf_salt);
    OsRng.fill_bytes(&mut nonce);

    let mut c = EncryptedContainer {
        kdf_salt,
        kdf_iterations,
        nonce,
        ciphertext: Vec::new(),
    };
    let cipher = Aes256Gcm::new(&derive_key(passcode, &kdf_salt, kdf_iterations));
    let aad = c.header();
    c.ciphertext = cipher
        .encrypt(
            Nonce::from_slice(&nonce),
            Payload {
                msg: plaintext,
                aad: &aad,
            },
        )
        .expect("AES-GCM encryption of an in-memory buffer");
    Ok(c)
}

/// Wrong passcodes and modified containers fail the same way.
pub fn decrypt(c: &EncryptedContainer, passcode: &str) -> Result<Vec<u8>, StoreError> {
    let cipher = Aes256Gcm::new(&derive_key(passcode, &c.kdf_salt, c.kdf_iterations));
    let aad = c.header();
    cipher
        .decrypt(
            Nonce::from_slice(&c.nonce),
            Payload {
                msg: &c.ciphertext,
                aad: &aad,
            },
        )
        .map_err(|_| StoreError::WrongPasscodeOrTampered)
}

pub fn decrypt_bytes(bytes: &[u8], passcode: &str) -> Result<Vec<u8>, StoreError> {
    decrypt(&EncryptedContainer::from_bytes(bytes)?, passcode)
}

/// A derived key bound to one file's salt, for rewriting the same
/// container repeatedly without re-running the KDF. Every seal draws a
/// fresh nonce.
pub struct Sealer {
    key: Key<Aes256Gcm>,
    kdf_salt: [u8; SALT_LEN],
    kdf_iterations: u32,
}

impl Sealer {
    /// New key with a random salt.
    pub fn new(passcode: &str, kdf_iterations: u32) -> Result<Self, StoreError> {
        if passcode.is_empty() {
            return Err(StoreError::EmptyPasscode);
        }
        let mut kdf_salt = [0u8; SALT_LEN];
        OsRng.fill_bytes(&mut kdf_salt);
        Ok(Sealer {
            key: derive_key(passcode, &kdf_salt, kdf_iterations),
            kdf_salt,
            kdf_iterations,
        })
    }

    /// Key for an existing container, checked by decrypting it.
    pub fn unlock(bytes: &[u8], passcode: &str) -> Result<(Self, Vec<u8>), StoreError> {
        let c = EncryptedContainer::from_bytes(bytes)?;
        let sealer = Sealer {
            key: derive_key(passcode, &c.kdf_salt, c.kdf_iterations),
            kdf_salt: c.kdf_salt,
            kdf_iterations: c.kdf_iterations,
        };
        let plain = sealer.open(&c)?;
        Ok((sealer, plain))
    }

    pub fn seal(&self, plaintext: &[u8]) -> EncryptedContainer {
        let mut nonce = [0u8; NONCE_LEN];
        OsRng.fill_bytes(&mut nonce);
        let mut c = EncryptedContainer {
            kdf_salt: self.kdf_salt,
            kdf_iterations: self.kdf_iterations,
            nonce,
            ciphertext: Vec::new(),
        };
        let aad = c.header();
        c.ciphertext = Aes256Gcm::new(&self.key)
            .encrypt(
                Nonce::from_slice(&nonce),
                Payload {
                    msg: plaintext,
                    aad: &aad,
                },
            )
            .expect("AES-GCM encryption of an in-memory buffer");
        c
    }

    /// Decrypt a container sealed under the same salt and passcode.
    pub fn open(&self, c: &EncryptedContainer) -> Result<Vec<u8>, StoreError> {
        if c.kdf_salt != self.kdf_salt || c.kdf_iterations != self.kdf_iterations {
            return Err(StoreError::WrongPasscodeOrTampered);
        }
        let aad = c.header();
        Aes256Gcm::new(&self.key)
            .decrypt(
                Nonce::from_slice(&c.nonce),
                Payload {
                    msg: &c.ciphertext,
                    aad: &aad,
                },
            )
            .map_err(|_| StoreError::WrongPasscodeOrTampered)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAST: u32 = 1_000;

    #[test]
    fn round_trip() {
        let c = encrypt(b"pfsession 1\n", "hunter2").unwrap();
        assert_eq!(c.kdf_iterations, DEFAULT_KDF_ITERATIONS);
        let bytes = c.to_bytes();
        assert_eq!(decrypt_bytes(&bytes, "hunter2").unwrap(), b"pfsession 1\n");
    }

    #[test]
    fn fresh_salt_and_nonce_each_time() {
        let a = encrypt_with_iterations(b"same", "pw", FAST).unwrap();
        let b = encrypt_with_iterations(b"same", "pw", FAST).unwrap();
        assert_ne!(a.to_bytes(), b.to_bytes());
        assert_ne!(a.kdf_salt, b.kdf_salt);
    }

    #[test]
    fn empty_passcode() {
        assert_eq!(encrypt(b"x", ""), Err(StoreError::EmptyPasscode));
    }

    #[test]
    fn wrong_passcode() {
        let bytes = encrypt_with_iterations(b"secret", "right", FAST)
            .unwrap()
            .to_bytes();
        assert_eq!(
            decrypt_bytes(&bytes, "wrong"),
            Err(StoreError::WrongPasscodeOrTampered)
        );
        assert_eq!(
            decrypt_bytes(&bytes, ""),
            Err(StoreError::WrongPasscodeOrTampered)
        );
    }

    #[test]
    fn flipped_ciphertext_byte() {
        let mut bytes = encrypt_with_iterations(b"secret", "pw", FAST)
            .unwrap()
            .to_bytes();
        bytes[HEADER_LEN] ^= 0x01;
        assert_eq!(
            decrypt_bytes(&bytes, "pw"),
            Err(StoreError::WrongPasscodeOrTampered)
        );
    }

    #[test]
    fn header_fields_are_authenticated() {
        let bytes = encrypt_with_iterations(b"secret", "pw", FAST)
            .unwrap()
            .to_bytes();
        for pos in [4, 19, 23, 24, 35] {
            let mut t = bytes.clone();
            t[pos] ^= 0x80;
            assert!(decrypt_bytes(&t, "pw").is_err(), "byte {pos}");
        }
    }

    #[test]
    fn truncated_or_foreign_files() {
        let bytes = encrypt_with_iterations(b"secret", "pw", FAST)
            .unwrap()
            .to_bytes();
        assert_eq!(
            decrypt_bytes(&bytes[..HEADER_LEN + 3], "pw"),
            Err(StoreError::MalformedContainer("truncated"))
        );
        assert!(matches!(
            decrypt_bytes(b"pfsession 1\n", "pw"),
            Err(StoreError::MalformedContainer(_))
        ));
        assert!(matches!(
            decrypt_bytes(b"", "pw"),
            Err(StoreError::MalformedContainer(_))
        ));
    }

    #[test]
    fn layout_is_fixed() {
        let c = encrypt_with_iterations(b"abc", "pw", 0x0102).unwrap();
        let bytes = c.to_bytes();
        assert_eq!(&bytes[..4], b"PFB1");
        assert_eq!(&bytes[4..20], &c.kdf_salt);
        assert_eq!(&bytes[20..24], &[0, 0, 1, 2]);
        assert_eq!(&bytes[24..36], &c.nonce);
        assert_eq!(bytes.len(), HEADER_LEN + 3 + TAG_LEN);
        assert_eq!(EncryptedContainer::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn sealer_reuses_salt_with_fresh_nonces() {
        let sealer = Sealer::new("pw", FAST).unwrap();
        let a = sealer.seal(b"one");
        let b = sealer.seal(b"two");
        assert_eq!(a.kdf_salt, b.kdf_salt);
        assert_ne!(a.nonce, b.nonce);
        assert_eq!(decrypt(&b, "pw").unwrap(), b"two");

        let (again, plain) = Sealer::unlock(&a.to_bytes(), "pw").unwrap();
        assert_eq!(plain, b"one");
        assert_eq!(again.open(&sealer.seal(b"three")).unwrap(), b"three");
        assert!(Sealer::unlock(&a.to_bytes(), "nope").is_err());
        assert!(matches!(
            Sealer::new("", FAST),
            Err(StoreError::EmptyPasscode)
        ));
    }

    #[test]
    fn absurd_iteration_counts_refused() {
        let mut bytes = encrypt_with_iterations(b"x", "pw", FAST)
            .unwrap()
            .to_bytes();
        bytes[20] = 0xff;
        assert!(matches!(
            decrypt_bytes(&bytes, "pw"),
            Err(StoreError::MalformedContainer(_))
        ));
    }

    #[test]
    fn iterations_come_from_the_header() {
        let bytes = encrypt_with_iterations(b"old file", "pw", 5)
            .unwrap()
            .to_bytes();
        assert_eq!(decrypt_bytes(&bytes, "pw").unwrap(), b"old file");
    }
}
