//! File formats: model JSON, CSV datasets, and edit scripts.

mod dataset;
mod model_file;
mod script;

pub use dataset::{load_dataset, Dataset, DatasetError, DatasetOptions, DEFAULT_LABEL_COLUMN};
pub use model_file::{
    load_model, save_model, HistoryRecord, InteractionRecord, LoadError, LoadedModel, ModelFile, TermRecord,
    FORMAT_VERSION,
};
pub use script::{EditScript, ScriptEdit, ScriptError};
