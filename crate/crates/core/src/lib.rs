//! Single-qubit data re-uploading classifier.
//!
//! The numeric core ([`qmath`], [`model`], [`trainer`], [`transpiler`]) is
//! generic over [`Scalar`] (`f32` or `f64`); the aliases below fix the
//! precision for the common cases. Datasets, serialized models, native
//! programs and the backends work in `f64`.

pub mod backend;
pub mod data;
pub mod model;
pub mod qmath;
pub mod scalar;
pub mod trainer;
pub mod transpiler;

pub use num_complex::Complex;
pub use scalar::Scalar;

pub use backend::{Backend, BackendError, Counts, NoiseModel};
pub use data::{DataError, Dataset, LabeledPoint, Point2, Problem};
pub use model::ModelError;
pub use trainer::{AdamConfig, TrainConfig, TrainError, TrainMetrics};
pub use transpiler::{Basis, NativeGate, NativeProgram, TranspileError};

pub type Unitary2F64 = qmath::Unitary2<f64>;
pub type Unitary2F32 = qmath::Unitary2<f32>;
pub type PureStateF64 = qmath::PureState<f64>;
pub type PureStateF32 = qmath::PureState<f32>;
pub type BlochVecF64 = qmath::BlochVec<f64>;
pub type BlochVecF32 = qmath::BlochVec<f32>;
pub type LayerParamsF64 = model::LayerParams<f64>;
pub type LayerParamsF32 = model::LayerParams<f32>;
pub type UqcParamsF64 = model::UqcParams<f64>;
pub type UqcParamsF32 = model::UqcParams<f32>;
pub type LabelSetF64 = model::LabelSet<f64>;
pub type LabelSetF32 = model::LabelSet<f32>;
pub type XyxAnglesF64 = transpiler::XyxAngles<f64>;
pub type AdamStateF64 = trainer::AdamState<f64>;

/// Any error raised by the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Transpile(#[from] TranspileError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}
