//! On-disk session store.
//!
//! Layout under the store root:
//!
//! ```text
//! sessions/<id>/session.json     header, rewritten on finalize
//! sessions/<id>/decisions.jsonl  append-only decision records
//! sessions/<id>/export.json      written once by finalize
//! ```
//!
//! Mutations of one session hold its write lock for the whole
//! validate/append/publish sequence. Readers clone the published snapshot.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::Utc;
use printlab_core::consistency::DecisionRecord;
use printlab_core::pipeline::{load_manifest, validate_manifest, LoadedManifest};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::session::{
    DecisionRequest, DecisionResponse, ExportDocument, PairPayload, Prepared, Session, SessionMeta, SessionStatus,
    SessionView,
};
use crate::AnnotateError;

const SESSION_FILE: &str = "session.json";
const LOG_FILE: &str = "decisions.jsonl";
const EXPORT_FILE: &str = "export.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSession {
    pub manifest_ref: String,
    pub annotator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalizeResponse {
    pub session_id: String,
    pub status: SessionStatus,
    pub export_ref: String,
    pub export_path: PathBuf,
}

struct Handle {
    dir: PathBuf,
    write: Mutex<()>,
    snapshot: RwLock<Arc<Session>>,
}

impl Handle {
    fn new(dir: PathBuf, session: Session) -> Self {
        Handle {
            dir,
            write: Mutex::new(()),
            snapshot: RwLock::new(Arc::new(session)),
        }
    }

    fn snapshot(&self) -> Arc<Session> {
        Arc::clone(&self.snapshot.read().unwrap_or_else(|e| e.into_inner()))
    }

    fn publish(&self, session: Session) {
        *self.snapshot.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(session);
    }
}

pub struct SessionStore {
    root: PathBuf,
    manifest_root: PathBuf,
    sessions: RwLock<BTreeMap<String, Arc<Handle>>>,
    load_errors: Vec<(PathBuf, AnnotateError)>,
}

fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), AnnotateError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text).map_err(|e| AnnotateError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| AnnotateError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, AnnotateError> {
    let raw = fs::read(path).map_err(|e| AnnotateError::io(path, e))?;
    Ok(serde_json::from_slice(&raw)?)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses a decision log. A final line cut short by a crash (no trailing
/// newline, not parseable) is dropped.
pub fn parse_decision_log(session_id: &str, text: &str) -> Result<Vec<DecisionRecord>, AnnotateError> {
    let lines: Vec<&str> = text.split('\n').collect();
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match serde_json::from_str::<DecisionRecord>(trimmed) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() => break,
            Err(e) => {
                return Err(AnnotateError::CorruptLog {
                    session: session_id.to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

fn load_checked(meta: &SessionMeta) -> Result<LoadedManifest, AnnotateError> {
    let loaded = load_manifest(&meta.manifest_path)?;
    if loaded.digest != meta.manifest_digest {
        return Err(AnnotateError::ManifestChanged {
            path: meta.manifest_path.clone(),
        });
    }
    Ok(loaded)
}

/// Cold replay of a persisted session directory.
pub fn replay_session_dir(dir: &Path) -> Result<Session, AnnotateError> {
    let mut meta: SessionMeta = read_json(&dir.join(SESSION_FILE))?;
    let export_path = dir.join(EXPORT_FILE);
    if export_path.exists() {
        let export: ExportDocument = read_json(&export_path)?;
        meta.status = SessionStatus::Finalized;
        meta.finalized_at = Some(export.finalized_at);
    }
    let log_path = dir.join(LOG_FILE);
    let text = match fs::read_to_string(&log_path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(AnnotateError::io(&log_path, e)),
    };
    let records = parse_decision_log(&meta.session_id, &text)?;
    let loaded = load_checked(&meta)?;
    Session::replay(meta, &loaded, &records)
}

impl SessionStore {
    /// Opens (creating if needed) a store and replays every persisted
    /// session. Sessions that fail to replay are listed in
    /// [`SessionStore::load_errors`] and left unserved.
    pub fn open(root: impl Into<PathBuf>, manifest_root: impl Into<PathBuf>) -> Result<Self, AnnotateError> {
        let root = root.into();
        let sessions_dir = root.join("sessions");
        fs::create_dir_all(&sessions_dir).map_err(|e| AnnotateError::io(&sessions_dir, e))?;
        let mut sessions = BTreeMap::new();
        let mut load_errors = Vec::new();
        let mut dirs: Vec<PathBuf> = fs::read_dir(&sessions_dir)
            .map_err(|e| AnnotateError::io(&sessions_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(SESSION_FILE).is_file())
            .collect();
        dirs.sort();
        for dir in dirs {
            match replay_session_dir(&dir) {
                Ok(s) => {
                    sessions.insert(s.meta().session_id.clone(), Arc::new(Handle::new(dir, s)));
                }
                Err(e) => load_errors.push((dir, e)),
            }
        }
        Ok(SessionStore {
            root,
            manifest_root: manifest_root.into(),
            sessions: RwLock::new(sessions),
            load_errors,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn load_errors(&self) -> &[(PathBuf, AnnotateError)] {
        &self.load_errors
    }

    pub fn session_dir(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(id)
    }

    pub fn decision_log_path(&self, id: &str) -> PathBuf {
        self.session_dir(id).join(LOG_FILE)
    }

    fn handle(&self, id: &str) -> Result<Arc<Handle>, AnnotateError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| AnnotateError::UnknownSession(id.to_string()))
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned()
            .collect()
    }

    pub fn snapshot(&self, id: &str) -> Result<Arc<Session>, AnnotateError> {
        Ok(self.handle(id)?.snapshot())
    }

    pub fn create(&self, req: &CreateSession) -> Result<SessionView, AnnotateError> {
        if req.annotator.trim().is_empty() {
            return Err(AnnotateError::BadRequest("annotator must not be empty".into()));
        }
        let path = {
            let p = Path::new(&req.manifest_ref);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                self.manifest_root.join(p)
            }
        };
        let loaded = load_manifest(&path).map_err(|e| AnnotateError::ManifestInvalid {
            message: e.to_string(),
            issues: Vec::new(),
        })?;
        let report = validate_manifest(&loaded);
        if !report.is_valid() || loaded.manifest.pairs.is_empty() {
            let message = if loaded.manifest.pairs.is_empty() {
                "manifest has no pairs".to_string()
            } else {
                format!("{} validation issue(s)", report.issues.len())
            };
            return Err(AnnotateError::ManifestInvalid {
                message,
                issues: report.issues,
            });
        }
        let meta = SessionMeta {
            session_id: uuid::Uuid::new_v4().simple().to_string(),
            manifest_ref: req.manifest_ref.clone(),
            manifest_path: path,
            manifest_digest: loaded.digest.clone(),
            annotator: req.annotator.clone(),
            created_at: Utc::now(),
            status: SessionStatus::Open,
            finalized_at: None,
        };
        let session = Session::start(meta.clone(), &loaded)?;
        let dir = self.session_dir(&meta.session_id);
        fs::create_dir_all(&dir).map_err(|e| AnnotateError::io(&dir, e))?;
        let log = dir.join(LOG_FILE);
        fs::write(&log, b"").map_err(|e| AnnotateError::io(&log, e))?;
        write_json_atomic(&dir.join(SESSION_FILE), &meta)?;
        let view = session.view();
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(meta.session_id.clone(), Arc::new(Handle::new(dir, session)));
        Ok(view)
    }

    pub fn view(&self, id: &str) -> Result<SessionView, AnnotateError> {
        Ok(self.snapshot(id)?.view())
    }

    pub fn pair(&self, id: &str, pair_id: &str) -> Result<PairPayload, AnnotateError> {
        self.snapshot(id)?.pair_payload(pair_id)
    }

    pub fn post_decision(
        &self,
        id: &str,
        pair_id: &str,
        req: DecisionRequest,
    ) -> Result<DecisionResponse, AnnotateError> {
        let handle = self.handle(id)?;
        let _guard = handle.write.lock().unwrap_or_else(|e| e.into_inner());
        let current = handle.snapshot();
        match current.prepare(pair_id, req, Utc::now())? {
            Prepared::Duplicate(resp) => Ok(resp),
            Prepared::Append(record, next) => {
                let mut line = serde_json::to_string(&record)?;
                line.push('\n');
                let path = handle.dir.join(LOG_FILE);
                let mut f = OpenOptions::new()
                    .append(true)
                    .create(true)
                    .open(&path)
                    .map_err(|e| AnnotateError::io(&path, e))?;
                f.write_all(line.as_bytes())
                    .and_then(|_| f.sync_data())
                    .map_err(|e| AnnotateError::io(&path, e))?;
                let resp = next.response_for(pair_id, record.sequence)?;
                handle.publish(next);
                Ok(resp)
            }
        }
    }

    pub fn finalize(&self, id: &str) -> Result<FinalizeResponse, AnnotateError> {
        let handle = self.handle(id)?;
        let _guard = handle.write.lock().unwrap_or_else(|e| e.into_inner());
        let current = handle.snapshot();
        if current.meta().status == SessionStatus::Finalized {
            return Err(AnnotateError::SessionFinalized(id.to_string()));
        }
        let log_path = handle.dir.join(LOG_FILE);
        let log = fs::read(&log_path).map_err(|e| AnnotateError::io(&log_path, e))?;
        let now = Utc::now();
        let export = current.export(now, sha256_hex(&log));
        let export_path = handle.dir.join(EXPORT_FILE);
        write_json_atomic(&export_path, &export)?;

        let mut next = (*current).clone();
        next.meta.status = SessionStatus::Finalized;
        next.meta.finalized_at = Some(now);
        write_json_atomic(&handle.dir.join(SESSION_FILE), &next.meta)?;
        handle.publish(next);
        Ok(FinalizeResponse {
            session_id: id.to_string(),
            status: SessionStatus::Finalized,
            export_ref: format!("/sessions/{id}/export"),
            export_path,
        })
    }

    pub fn export(&self, id: &str) -> Result<ExportDocument, AnnotateError> {
        let handle = self.handle(id)?;
        if handle.snapshot().meta().status != SessionStatus::Finalized {
            return Err(AnnotateError::NotFinalized(id.to_string()));
        }
        read_json(&handle.dir.join(EXPORT_FILE))
    }
}
