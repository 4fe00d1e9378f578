//! Event-sourced twin store.
//!
//! Every accepted mutation becomes one [`LogRecord`]. Live state is nothing
//! more than the fold of the log, so [`TwinStore::replay`] over
//! [`TwinStore::log`] rebuilds an identical store.
//!
//! The on-disk form is newline-delimited JSON, one [`LogLine`] per record.
//! Each line carries a sequence number and a SHA-256 checksum over the
//! sequence number and the record's canonical JSON.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::model::{validate_value, ModelError, Scalar, TwinModel};

pub type PropertyMap = BTreeMap<String, Scalar>;

pub const EVENT_LOG_FILE: &str = "events.ndjson";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("twin `{0}` already exists")]
    DuplicateTwin(String),
    #[error("unknown twin `{0}`")]
    UnknownTwin(String),
    #[error("model `{model_id}` has no property `{property}`")]
    UnknownProperty { model_id: String, property: String },
    #[error("model `{0}` is referenced by existing twins and cannot be redefined")]
    ModelInUse(String),
    #[error(transparent)]
    Validation(#[from] ModelError),
    #[error("corrupt event log at record {index}: {reason}")]
    CorruptLog { index: usize, reason: String },
    #[error("event log I/O: {0}")]
    Io(#[from] io::Error),
}

/// Source of event timestamps.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Deterministic clock: starts at a fixed instant and advances one step per
/// reading.
#[derive(Debug)]
pub struct SteppingClock {
    next_millis: AtomicI64,
    step_millis: i64,
}

impl SteppingClock {
    pub fn new(start: DateTime<Utc>, step_millis: i64) -> Self {
        Self {
            next_millis: AtomicI64::new(start.timestamp_millis()),
            step_millis,
        }
    }
}

impl Default for SteppingClock {
    fn default() -> Self {
        Self::new(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(), 1000)
    }
}

impl Clock for SteppingClock {
    fn now(&self) -> DateTime<Utc> {
        let ms = self.next_millis.fetch_add(self.step_millis, Ordering::SeqCst);
        Utc.timestamp_millis_opt(ms).single().expect("clock in range")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinInstance {
    pub twin_id: String,
    pub model_id: String,
    pub properties: PropertyMap,
    pub version: u64,
}

/// One accepted update batch. Version 1 is the creation event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateEvent {
    pub twin_id: String,
    pub model_id: String,
    pub version: u64,
    pub timestamp: DateTime<Utc>,
    pub changes: PropertyMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Model { model: TwinModel },
    Update(UpdateEvent),
}

/// Serialized form of one log record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogLine {
    pub seq: u64,
    pub record: LogRecord,
    pub checksum: String,
}

impl LogLine {
    pub fn new(seq: u64, record: LogRecord) -> Self {
        let checksum = checksum(seq, &record);
        Self {
            seq,
            record,
            checksum,
        }
    }

    pub fn verify(&self) -> bool {
        checksum(self.seq, &self.record) == self.checksum
    }
}

fn checksum(seq: u64, record: &LogRecord) -> String {
    let body = serde_json::to_string(record).expect("log records serialize");
    let mut hasher = Sha256::new();
    hasher.update(seq.to_le_bytes());
    hasher.update(body.as_bytes());
    hex::encode(hasher.finalize())
}

/// Encode records as NDJSON lines.
pub fn encode_log(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for (i, r) in records.iter().enumerate() {
        out.push_str(&serde_json::to_string(&LogLine::new(i as u64 + 1, r.clone())).unwrap());
        out.push('\n');
    }
    out
}

/// Decode and verify NDJSON log text. Blank lines are skipped.
pub fn decode_log(text: &str) -> Result<Vec<LogRecord>, StoreError> {
    let mut records = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let index = records.len();
        let parsed: LogLine = serde_json::from_str(line).map_err(|e| StoreError::CorruptLog {
            index,
            reason: format!("unparseable line: {e}"),
        })?;
        if parsed.seq != index as u64 + 1 {
            return Err(StoreError::CorruptLog {
                index,
                reason: format!("sequence {} where {} expected", parsed.seq, index + 1),
            });
        }
        if !parsed.verify() {
            return Err(StoreError::CorruptLog {
                index,
                reason: "checksum mismatch".into(),
            });
        }
        records.push(parsed.record);
    }
    Ok(records)
}

/// Comparable view of a store's live state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreState {
    pub models: BTreeMap<String, TwinModel>,
    pub twins: BTreeMap<String, TwinInstance>,
}

pub struct TwinStore {
    models: BTreeMap<String, TwinModel>,
    twins: BTreeMap<String, TwinInstance>,
    log: Vec<LogRecord>,
    clock: Arc<dyn Clock>,
}

impl Default for TwinStore {
    fn default() -> Self {
        Self::new(Arc::new(SystemClock))
    }
}

impl std::fmt::Debug for TwinStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TwinStore")
            .field("models", &self.models.len())
            .field("twins", &self.twins.len())
            .field("log", &self.log.len())
            .finish()
    }
}

impl TwinStore {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        Self {
            models: BTreeMap::new(),
            twins: BTreeMap::new(),
            log: Vec::new(),
            clock,
        }
    }

    /// Rebuild a store from its log. Any inconsistency is reported as
    /// [`StoreError::CorruptLog`].
    pub fn replay(records: &[LogRecord], clock: Arc<dyn Clock>) -> Result<Self, StoreError> {
        let mut store = Self::new(clock);
        for (index, record) in records.iter().enumerate() {
            store.check(record).map_err(|e| StoreError::CorruptLog {
                index,
                reason: e.to_string(),
            })?;
            store.commit(record.clone());
        }
        Ok(store)
    }

    pub fn state(&self) -> StoreState {
        StoreState {
            models: self.models.clone(),
            twins: self.twins.clone(),
        }
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn model(&self, model_id: &str) -> Option<&TwinModel> {
        self.models.get(model_id)
    }

    pub fn twin_ids(&self) -> impl Iterator<Item = &str> {
        self.twins.keys().map(String::as_str)
    }

    pub fn get_twin(&self, twin_id: &str) -> Result<&TwinInstance, StoreError> {
        self.twins
            .get(twin_id)
            .ok_or_else(|| StoreError::UnknownTwin(twin_id.to_owned()))
    }

    pub fn history(&self, twin_id: &str) -> Result<Vec<UpdateEvent>, StoreError> {
        self.get_twin(twin_id)?;
        Ok(self
            .log
            .iter()
            .filter_map(|r| match r {
                LogRecord::Update(e) if e.twin_id == twin_id => Some(e.clone()),
                _ => None,
            })
            .collect())
    }

    pub fn register_model(&mut self, model: TwinModel) -> Result<(), StoreError> {
        if let Some(record) = self.plan_register(model)? {
            self.commit(record);
        }
        Ok(())
    }

    pub fn create_twin(
        &mut self,
        twin_id: &str,
        model_id: &str,
        initial: PropertyMap,
    ) -> Result<TwinInstance, StoreError> {
        let record = self.plan_create(twin_id, model_id, initial)?;
        self.commit(record);
        Ok(self.twins[twin_id].clone())
    }

    /// Apply a batch of changes atomically. An empty batch is a no-op that
    /// neither bumps the version nor logs an event.
    pub fn patch_properties(
        &mut self,
        twin_id: &str,
        changes: PropertyMap,
    ) -> Result<TwinInstance, StoreError> {
        if let Some(record) = self.plan_patch(twin_id, changes)? {
            self.commit(record);
        }
        Ok(self.twins[twin_id].clone())
    }

    /// Validate a model registration. `None` means the identical model is
    /// already registered.
    pub fn plan_register(&self, model: TwinModel) -> Result<Option<LogRecord>, StoreError> {
        if let Some(existing) = self.models.get(&model.model_id) {
            if *existing == model {
                return Ok(None);
            }
        }
        let record = LogRecord::Model { model };
        self.check(&record)?;
        Ok(Some(record))
    }

    pub fn plan_create(
        &self,
        twin_id: &str,
        model_id: &str,
        initial: PropertyMap,
    ) -> Result<LogRecord, StoreError> {
        let record = LogRecord::Update(UpdateEvent {
            twin_id: twin_id.to_owned(),
            model_id: model_id.to_owned(),
            version: 1,
            timestamp: self.clock.now(),
            changes: initial,
        });
        self.check(&record)?;
        Ok(self.normalized(record))
    }

    pub fn plan_patch(
        &self,
        twin_id: &str,
        changes: PropertyMap,
    ) -> Result<Option<LogRecord>, StoreError> {
        let twin = self.get_twin(twin_id)?;
        let model = &self.models[&twin.model_id];
        validate_changes(model, &changes)?;
        if changes.is_empty() {
            return Ok(None);
        }
        let record = LogRecord::Update(UpdateEvent {
            twin_id: twin_id.to_owned(),
            model_id: twin.model_id.clone(),
            version: twin.version + 1,
            timestamp: self.clock.now(),
            changes,
        });
        self.check(&record)?;
        Ok(Some(self.normalized(record)))
    }

    // Store validated (widened) values so the log and the live state agree.
    fn normalized(&self, record: LogRecord) -> LogRecord {
        match record {
            LogRecord::Update(mut e) => {
                let model = &self.models[&e.model_id];
                e.changes = validate_changes(model, &e.changes).expect("checked");
                LogRecord::Update(e)
            }
            other => other,
        }
    }

    /// Validate a record against the current state without applying it.
    pub fn check(&self, record: &LogRecord) -> Result<(), StoreError> {
        match record {
            LogRecord::Model { model } => {
                // Re-run invariants in case the record was deserialized.
                TwinModel::new(
                    model.model_id.clone(),
                    model.display_name.clone(),
                    model.properties.clone(),
                )?;
                if let Some(existing) = self.models.get(&model.model_id) {
                    let in_use = self.twins.values().any(|t| t.model_id == model.model_id);
                    if existing != model && in_use {
                        return Err(StoreError::ModelInUse(model.model_id.clone()));
                    }
                }
                Ok(())
            }
            LogRecord::Update(e) => {
                let model = self
                    .models
                    .get(&e.model_id)
                    .ok_or_else(|| StoreError::UnknownModel(e.model_id.clone()))?;
                match self.twins.get(&e.twin_id) {
                    None if e.version == 1 => {}
                    None => return Err(StoreError::UnknownTwin(e.twin_id.clone())),
                    Some(_) if e.version == 1 => {
                        return Err(StoreError::DuplicateTwin(e.twin_id.clone()))
                    }
                    Some(t) => {
                        if t.model_id != e.model_id {
                            return Err(StoreError::UnknownModel(e.model_id.clone()));
                        }
                        if e.version != t.version + 1 {
                            return Err(StoreError::CorruptLog {
                                index: self.log.len(),
                                reason: format!(
                                    "twin `{}` jumps from version {} to {}",
                                    e.twin_id, t.version, e.version
                                ),
                            });
                        }
                        if e.changes.is_empty() {
                            return Err(StoreError::CorruptLog {
                                index: self.log.len(),
                                reason: "empty update event".into(),
                            });
                        }
                    }
                }
                validate_changes(model, &e.changes)?;
                Ok(())
            }
        }
    }

    /// Apply a record that has already passed [`TwinStore::check`].
    pub fn commit(&mut self, record: LogRecord) {
        match &record {
            LogRecord::Model { model } => {
                self.models.insert(model.model_id.clone(), model.clone());
            }
            LogRecord::Update(e) => {
                let model = &self.models[&e.model_id];
                let changes = validate_changes(model, &e.changes).expect("record was checked");
                let twin = self
                    .twins
                    .entry(e.twin_id.clone())
                    .or_insert_with(|| TwinInstance {
                        twin_id: e.twin_id.clone(),
                        model_id: e.model_id.clone(),
                        properties: PropertyMap::new(),
                        version: 0,
                    });
                twin.properties.extend(changes);
                twin.version = e.version;
            }
        }
        self.log.push(record);
    }
}

fn validate_changes(model: &TwinModel, changes: &PropertyMap) -> Result<PropertyMap, StoreError> {
    changes
        .iter()
        .map(|(name, value)| {
            let spec = model
                .property(name)
                .ok_or_else(|| StoreError::UnknownProperty {
                    model_id: model.model_id.clone(),
                    property: name.clone(),
                })?;
            Ok((name.clone(), validate_value(spec, value)?))
        })
        .collect()
}

/// Append-only NDJSON writer.
#[derive(Debug)]
pub struct LogWriter {
    out: BufWriter<File>,
    next_seq: u64,
}

impl LogWriter {
    pub fn append(&mut self, record: &LogRecord) -> io::Result<()> {
        let line = LogLine::new(self.next_seq, record.clone());
        serde_json::to_writer(&mut self.out, &line)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        self.out.get_ref().sync_data()?;
        self.next_seq += 1;
        Ok(())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()?;
        self.out.get_ref().sync_all()
    }
}

/// Thread-safe store handle: one writer at a time, many concurrent readers.
///
/// When backed by a directory, each mutation is appended to the event log
/// before it becomes visible to readers.
pub struct SharedStore {
    store: RwLock<TwinStore>,
    writer: Mutex<Option<LogWriter>>,
    dir: Option<PathBuf>,
}

impl SharedStore {
    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        Self {
            store: RwLock::new(TwinStore::new(clock)),
            writer: Mutex::new(None),
            dir: None,
        }
    }

    /// Open (or create) a store directory and replay its event log.
    pub fn open(dir: impl AsRef<Path>, clock: Arc<dyn Clock>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let path = dir.join(EVENT_LOG_FILE);
        let records = if path.exists() {
            let mut text = String::new();
            for line in BufReader::new(File::open(&path)?).lines() {
                text.push_str(&line?);
                text.push('\n');
            }
            decode_log(&text)?
        } else {
            Vec::new()
        };
        let store = TwinStore::replay(&records, clock)?;
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            store: RwLock::new(store),
            writer: Mutex::new(Some(LogWriter {
                out: BufWriter::new(file),
                next_seq: records.len() as u64 + 1,
            })),
            dir: Some(dir.to_owned()),
        })
    }

    pub fn read<R>(&self, f: impl FnOnce(&TwinStore) -> R) -> R {
        f(&self.store.read().expect("store lock poisoned"))
    }

    fn mutate<R>(
        &self,
        plan: impl FnOnce(&TwinStore) -> Result<Option<LogRecord>, StoreError>,
        finish: impl FnOnce(&TwinStore) -> R,
    ) -> Result<R, StoreError> {
        let mut writer = self.writer.lock().expect("writer lock poisoned");
        // Planning under the writer mutex keeps the check-persist-commit
        // sequence linearizable; readers are only blocked for the commit.
        let record = plan(&self.store.read().expect("store lock poisoned"))?;
        if let Some(record) = record {
            if let Some(w) = writer.as_mut() {
                w.append(&record)?;
            }
            self.store
                .write()
                .expect("store lock poisoned")
                .commit(record);
        }
        Ok(finish(&self.store.read().expect("store lock poisoned")))
    }

    pub fn register_model(&self, model: TwinModel) -> Result<(), StoreError> {
        self.mutate(|s| s.plan_register(model), |_| ())
    }

    pub fn create_twin(
        &self,
        twin_id: &str,
        model_id: &str,
        initial: PropertyMap,
    ) -> Result<TwinInstance, StoreError> {
        self.mutate(
            |s| s.plan_create(twin_id, model_id, initial).map(Some),
            |s| s.get_twin(twin_id).cloned().expect("just created"),
        )
    }

    pub fn patch_properties(
        &self,
        twin_id: &str,
        changes: PropertyMap,
    ) -> Result<TwinInstance, StoreError> {
        self.mutate(
            |s| s.plan_patch(twin_id, changes),
            |s| s.get_twin(twin_id).cloned().expect("twin exists"),
        )
    }

    pub fn get_twin(&self, twin_id: &str) -> Result<TwinInstance, StoreError> {
        self.read(|s| s.get_twin(twin_id).cloned())
    }

    pub fn history(&self, twin_id: &str) -> Result<Vec<UpdateEvent>, StoreError> {
        self.read(|s| s.history(twin_id))
    }

    pub fn state(&self) -> StoreState {
        self.read(TwinStore::state)
    }

    /// Flush the log and, for directory-backed stores, write a snapshot of
    /// the live state next to it.
    pub fn flush(&self) -> Result<(), StoreError> {
        if let Some(w) = self.writer.lock().expect("writer lock poisoned").as_mut() {
            w.flush()?;
        }
        if let Some(dir) = &self.dir {
            let snapshot = serde_json::to_string_pretty(&self.state()).expect("state serializes");
            std::fs::write(dir.join(SNAPSHOT_FILE), snapshot)?;
        }
        Ok(())
    }
}
