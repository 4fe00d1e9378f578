//! Twin definitions and the event-sourced twin store.

pub mod model;
pub mod store;

pub use model::{
    parse_model, validate_value, ModelError, PropertySpec, Scalar, TwinModel, ValueKind,
    MODEL_FILE_SUFFIX,
};
pub use store::{
    decode_log, encode_log, Clock, LogLine, LogRecord, PropertyMap, SharedStore, SteppingClock,
    StoreError, StoreState, SystemClock, TwinInstance, TwinStore, UpdateEvent, EVENT_LOG_FILE,
    SNAPSHOT_FILE,
};
