//! DeepONet surrogates in four variants that differ in where `cv` enters
//! the network, plus training and persistence.

mod model;
mod persist;
mod train;

pub use model::{assemble_inputs, decode, operator_loss, AssembledInputs, DeepOnet, InputBatch, ModelSpec, Variant, MERGE_DEPTH};
pub use persist::{load_model, save_model, ArrayEntry, MODEL_MAGIC, MODEL_SCHEMA_VERSION};
pub use train::{init_model, train, train_with_progress, EpochRecord, ModelState, TrainConfig, TrainingData};
