//! The data re-uploading classifier.
//!
//! Each layer uploads the input `x` through
//! `U_l = RZ(v3) · RY(v2) · RZ(v1)` with `v = (θ1 x1 + ω1, θ2 x2 + ω2, ω3)`.
//! Layer 1 acts first on `|0⟩`, so the condensed circuit is the matrix
//! product `U_L ⋯ U_2 · U_1`.

use std::fs;
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Point2;
use crate::qmath::{bloch_of, fidelity_bloch, ry, rz, BlochVec, PureState, Unitary2};
use crate::scalar::Scalar;

/// Number of trainable reals per layer: θ1, θ2, ω1, ω2, ω3.
pub const PARAMS_PER_LAYER: usize = 5;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unsupported class count {0} (label states exist for 2 or 3 classes)")]
    UnsupportedClassCount(usize),
    #[error("a model needs at least one layer")]
    NoLayers,
    #[error("expected {expected} parameters for {layers} layers, found {found}")]
    ParamCount {
        layers: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite parameter at index {0}")]
    NonFinite(usize),
    #[error("model file: {0}")]
    Format(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Trainable parameters of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LayerParams<T> {
    /// Data scaling weights θ1, θ2.
    pub theta: [T; 2],
    /// Biases ω1, ω2, ω3.
    pub omega: [T; 3],
}

impl<T: Scalar> LayerParams<T> {
    pub fn new(theta: [T; 2], omega: [T; 3]) -> Self {
        Self { theta, omega }
    }

    /// Euler angles `(v1, v2, v3)` for input `x`.
    pub fn angles(&self, x: &Point2<T>) -> [T; 3] {
        [
            self.theta[0] * x.x1 + self.omega[0],
            self.theta[1] * x.x2 + self.omega[1],
            self.omega[2],
        ]
    }

    pub fn to_array(&self) -> [T; PARAMS_PER_LAYER] {
        [self.theta[0], self.theta[1], self.omega[0], self.omega[1], self.omega[2]]
    }

    pub fn from_slice(s: &[T]) -> Self {
        Self::new([s[0], s[1]], [s[2], s[3], s[4]])
    }
}

/// Full classifier: ordered layers plus the class count it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct UqcParams<T> {
    pub layers: Vec<LayerParams<T>>,
    pub num_classes: usize,
}

impl<T: Scalar> UqcParams<T> {
    pub fn new(layers: Vec<LayerParams<T>>, num_classes: usize) -> Result<Self, ModelError> {
        if layers.is_empty() {
            return Err(ModelError::NoLayers);
        }
        if !(2..=3).contains(&num_classes) {
            return Err(ModelError::UnsupportedClassCount(num_classes));
        }
        let p = Self {
            layers,
            num_classes,
        };
        if let Some(i) = p.to_flat().iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite(i));
        }
        Ok(p)
    }

    pub fn zeros(num_layers: usize, num_classes: usize) -> Result<Self, ModelError> {
        Self::new(vec![LayerParams::default(); num_layers], num_classes)
    }

    /// Flat layout `[θ1, θ2, ω1, ω2, ω3]` per layer, in layer order.
    pub fn from_flat(flat: &[T], num_classes: usize) -> Result<Self, ModelError> {
        if flat.is_empty() || !flat.len().is_multiple_of(PARAMS_PER_LAYER) {
            let layers = flat.len() / PARAMS_PER_LAYER;
            return Err(ModelError::ParamCount {
                layers,
                expected: layers.max(1) * PARAMS_PER_LAYER,
                found: flat.len(),
            });
        }
        let layers = flat
            .chunks_exact(PARAMS_PER_LAYER)
            .map(LayerParams::from_slice)
            .collect();
        Self::new(layers, num_classes)
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.layers.iter().flat_map(|l| l.to_array()).collect()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_params(&self) -> usize {
        self.layers.len() * PARAMS_PER_LAYER
    }

    pub fn cast<U: Scalar>(&self) -> UqcParams<U> {
        let flat: Vec<U> = self.to_flat().into_iter().map(|v| U::of(v.as_f64())).collect();
        UqcParams::from_flat(&flat, self.num_classes).expect("cast keeps a valid shape")
    }
}

/// `RZ(v3) · RY(v2) · RZ(v1)` for one layer.
pub fn layer_unitary<T: Scalar>(p: &LayerParams<T>, x: &Point2<T>) -> Unitary2<T> {
    let [v1, v2, v3] = p.angles(x);
    rz(v3).mul(&ry(v2)).mul(&rz(v1))
}

/// Condensed circuit `U_L ⋯ U_1`.
pub fn model_unitary<T: Scalar>(params: &UqcParams<T>, x: &Point2<T>) -> Unitary2<T> {
    params
        .layers
        .iter()
        .fold(Unitary2::identity(), |acc, l| layer_unitary(l, x).mul(&acc))
}

/// State after the full circuit acting on `|0⟩`.
pub fn forward_state<T: Scalar>(params: &UqcParams<T>, x: &Point2<T>) -> PureState<T> {
    model_unitary(params, x).apply(&PureState::zero())
}

/// Maximally orthogonal label states, one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet<T> {
    pub states: Vec<PureState<T>>,
    blochs: Vec<BlochVec<T>>,
}

impl<T: Scalar> LabelSet<T> {
    /// Two classes: the poles `|0⟩`, `|1⟩`. Three classes: Bloch vectors
    /// `(sin φ, 0, cos φ)` for `φ ∈ {0, 2π/3, 4π/3}`.
    pub fn new(num_classes: usize) -> Result<Self, ModelError> {
        let states = match num_classes {
            2 => vec![PureState::zero(), PureState::one()],
            3 => (0..3)
                .map(|k| {
                    let phi = T::of(k as f64) * T::TAU() / T::of(3.0);
                    // |ψ⟩ = cos(φ/2)|0⟩ + sin(φ/2)|1⟩ with signed sine keeps the azimuth at 0
                    let (s, c) = (phi * T::half()).sin_cos();
                    PureState::new(Complex::new(c, T::zero()), Complex::new(s, T::zero()))
                })
                .collect(),
            n => return Err(ModelError::UnsupportedClassCount(n)),
        };
        let blochs = states.iter().map(bloch_of).collect();
        Ok(Self { states, blochs })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn bloch(&self, class: usize) -> &BlochVec<T> {
        &self.blochs[class]
    }

    pub fn blochs(&self) -> &[BlochVec<T>] {
        &self.blochs
    }

    /// Fidelity of every label state with the state `r`.
    pub fn fidelities(&self, r: &BlochVec<T>) -> Vec<T> {
        self.blochs.iter().map(|s| fidelity_bloch(s, r)).collect()
    }

    /// Class with the highest fidelity to `r`; ties go to the lowest index.
    pub fn closest(&self, r: &BlochVec<T>) -> usize {
        let mut best = 0;
        let mut best_f = fidelity_bloch(&self.blochs[0], r);
        for (c, s) in self.blochs.iter().enumerate().skip(1) {
            let f = fidelity_bloch(s, r);
            if f > best_f {
                best = c;
                best_f = f;
            }
        }
        best
    }
}

pub fn label_states<T: Scalar>(num_classes: usize) -> Result<LabelSet<T>, ModelError> {
    LabelSet::new(num_classes)
}

/// Noise-free classification through the condensed unitary.
pub fn classify_exact<T: Scalar>(params: &UqcParams<T>, x: &Point2<T>, labels: &LabelSet<T>) -> usize {
    labels.closest(&bloch_of(&forward_state(params, x)))
}

/// Serialized model: flat parameters plus metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub num_layers: usize,
    pub num_classes: usize,
    pub problem_name: String,
    pub seed: u64,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

impl ModelFile {
    pub fn from_params(params: &UqcParams<f64>, problem_name: &str, seed: u64) -> Self {
        Self {
            num_layers: params.num_layers(),
            num_classes: params.num_classes,
            problem_name: problem_name.to_string(),
            seed,
            params: params.to_flat(),
            provenance: None,
        }
    }

    pub fn to_params(&self) -> Result<UqcParams<f64>, ModelError> {
        let expected = self.num_layers * PARAMS_PER_LAYER;
        if self.params.len() != expected {
            return Err(ModelError::ParamCount {
                layers: self.num_layers,
                expected,
                found: self.params.len(),
            });
        }
        UqcParams::from_flat(&self.params, self.num_classes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| ModelError::Format(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
