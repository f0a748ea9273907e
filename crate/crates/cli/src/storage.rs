//! Session files on disk, plaintext or encrypted.
//!
//! Plaintext sessions grow by appending records. Encrypted sessions are
//! rewritten whole on every change through a temporary file and rename.
//! Writers serialize on a `<session>.lock` sidecar so that `capture` and
//! `run` can share one session.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use procviz_core::session::{record_bytes, Record, SessionFile};
use procviz_core::store::{self, Sealer};
use procviz_core::SessionKind;

use crate::error::CliError;
use crate::passcode::PasscodeSource;

pub struct SessionStore {
    path: PathBuf,
    sealer: Option<Sealer>,
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn lock(path: &Path) -> Result<File, CliError> {
    let lock_path = sidecar(path, ".lock");
    let f = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(&lock_path)
        .map_err(|e| CliError::io(format!("opening {}", lock_path.display()), e))?;
    f.lock()
        .map_err(|e| CliError::io(format!("locking {}", lock_path.display()), e))?;
    Ok(f)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = sidecar(path, ".tmp");
    let write = || -> std::io::Result<()> {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::reading(path, e))
}

fn parse(bytes: &[u8]) -> Result<SessionFile, CliError> {
    SessionFile::parse(bytes).map_err(|e| CliError::Malformed(e.to_string()))
}

impl SessionStore {
    /// Open an existing session, prompting for a passcode only if it is
    /// encrypted.
    pub fn open(path: &Path, passcode: &PasscodeSource) -> Result<(Self, SessionFile), CliError> {
        let bytes = read(path)?;
        if store::is_container(&bytes) {
            let (sealer, plain) = Sealer::unlock(&bytes, &passcode.get()?)?;
            let file = parse(&plain)?;
            Ok((
                SessionStore {
                    path: path.to_owned(),
                    sealer: Some(sealer),
                },
                file,
            ))
        } else {
            Ok((
                SessionStore {
                    path: path.to_owned(),
                    sealer: None,
                },
                parse(&bytes)?,
            ))
        }
    }

    /// Start a new session file, or continue an existing one.
    pub fn create_or_resume(
        path: &Path,
        kind: SessionKind,
        interval_ms: u64,
        encrypt: Option<(&PasscodeSource, u32)>,
    ) -> Result<(Self, SessionFile), CliError> {
        if path.exists() {
            let (s, file) = Self::open(path, encrypt.map_or(&PasscodeSource::Prompt, |e| e.0))?;
            if encrypt.is_some() != s.sealer.is_some() {
                return Err(CliError::Usage(format!(
                    "{} exists and is {}encrypted",
                    path.display(),
                    if s.sealer.is_some() { "" } else { "not " }
                )));
            }
            return Ok((s, file));
        }
        let file = SessionFile::new(kind, interval_ms);
        let sealer = match encrypt {
            Some((passcode, iterations)) => Some(Sealer::new(&passcode.get()?, iterations)?),
            None => None,
        };
        let s = SessionStore {
            path: path.to_owned(),
            sealer,
        };
        let _guard = lock(path)?;
        s.write_whole(&file)?;
        Ok((s, file))
    }

    pub fn is_encrypted(&self) -> bool {
        self.sealer.is_some()
    }

    fn write_whole(&self, file: &SessionFile) -> Result<(), CliError> {
        match &self.sealer {
            Some(sealer) => write_atomic(&self.path, &sealer.seal(&file.to_bytes()).to_bytes()),
            None => write_atomic(&self.path, &file.to_bytes()),
        }
    }

    /// Add one record, flushing it to disk before returning.
    pub fn append(&self, record: Record) -> Result<(), CliError> {
        let _guard = lock(&self.path)?;
        match &self.sealer {
            None => {
                let mut f = OpenOptions::new()
                    .append(true)
                    .open(&self.path)
                    .map_err(|e| CliError::reading(&self.path, e))?;
                f.write_all(&record_bytes(&record))
                    .and_then(|_| f.sync_data())
                    .map_err(|e| CliError::io(format!("appending to {}", self.path.display()), e))
            }
            Some(sealer) => {
                let container = store::EncryptedContainer::from_bytes(&read(&self.path)?)?;
                let mut file = parse(&sealer.open(&container)?)?;
                file.records.push(record);
                self.write_whole(&file)
            }
        }
    }
}
