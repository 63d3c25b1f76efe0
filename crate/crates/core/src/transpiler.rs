//! Condensation and XYX decomposition into the native gate set.
//!
//! A condensed unitary `U` is conjugated by `RY(π/2)`, which maps the Z axis
//! onto X and fixes Y, so a ZYZ Euler decomposition of
//! `V = RY(π/2)† U RY(π/2)` reads directly as `U ∝ RX(a) RY(b) RX(c)`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Point2;
use crate::model::{model_unitary, UqcParams};
use crate::qmath::{rx, ry, Unitary2};
use crate::scalar::{wrap_angle, Scalar};

/// Default shots per data point and measurement basis.
pub const DEFAULT_SHOTS: u32 = 100;

#[derive(Debug, Error)]
pub enum TranspileError {
    #[error("input is not unitary (‖U†U − I‖_F = {0:e})")]
    NotUnitary(f64),
    #[error("CZ is not emitted for a single-qubit model")]
    CzNotSupported,
    #[error("shots must be at least 1")]
    ZeroShots,
    #[error("program schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
}

/// `U = e^{-iγ} RX(a) RY(b) RX(c)`, i.e. `RX(a) RY(b) RX(c) = e^{iγ} U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyxAngles<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub global_phase: T,
}

impl<T: Scalar> XyxAngles<T> {
    /// `RX(a) · RY(b) · RX(c)`
    pub fn unitary(&self) -> Unitary2<T> {
        rx(self.a).mul(&ry(self.b)).mul(&rx(self.c))
    }

    /// `‖RX(a)RY(b)RX(c) − e^{iγ} U‖_F`.
    pub fn reconstruction_error(&self, u: &Unitary2<T>) -> T {
        let phase = Complex::from_polar(T::one(), self.global_phase);
        self.unitary().frobenius_distance(&u.scale(phase))
    }
}

/// ZYZ angles `(α, β, λ)` with `V ∝ RZ(α) RY(β) RZ(λ)`, `β ∈ [0, π]`, folded
/// to `λ = 0` when `|sin β|` is below the gimbal-lock threshold.
fn zyz_angles<T: Scalar>(v: &Unitary2<T>) -> (T, T, T) {
    // SU(2) representative: [[c e^{-i(α+λ)/2}, ·], [s e^{i(α−λ)/2}, c e^{i(α+λ)/2}]]
    let v = v.scale(v.det().sqrt().inv());
    let m = &v.m;
    let beta = T::two() * m[1][0].norm().atan2(m[1][1].norm());
    let half_sum = m[1][1].arg();
    let half_diff = m[1][0].arg();
    if beta.sin().abs() < T::geometric_tol() {
        if beta < T::FRAC_PI_2() {
            // RZ(α) RZ(λ)
            (T::two() * half_sum, beta, T::zero())
        } else {
            // RZ(α) RY(π) RZ(λ) = RZ(α − λ) RY(π)
            (T::two() * half_diff, beta, T::zero())
        }
    } else {
        // 2π slips in either arg shift α and λ together, which only flips the sign
        (half_sum + half_diff, beta, half_sum - half_diff)
    }
}

/// Exact XYX decomposition of a single-qubit unitary.
///
/// Ranges: `b ∈ [0, π]`, `a, c ∈ (−π, π]`; the phase `γ` absorbs the sign
/// flips from wrapping. When `b` sits at 0 or π the rotation is folded
/// into `a` and `c = 0`.
pub fn decompose_xyx<T: Scalar>(u: &Unitary2<T>) -> Result<XyxAngles<T>, TranspileError> {
    if !u.is_unitary(T::geometric_tol()) {
        return Err(TranspileError::NotUnitary(u.unitarity_error().as_f64()));
    }
    let basis = ry(T::FRAC_PI_2());
    let v = basis.dagger().mul(u).mul(&basis);
    let (alpha, beta, lambda) = zyz_angles(&v);
    let a = wrap_angle(alpha);
    let c = wrap_angle(lambda);
    let b = beta;
    let w = rx(a).mul(&ry(b)).mul(&rx(c));
    // W = e^{iγ} U  ⇒  tr(U† W) = 2 e^{iγ}
    let global_phase = u.dagger().mul(&w).trace().arg();
    Ok(XyxAngles {
        a,
        b,
        c,
        global_phase,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn index(self) -> u64 {
        match self {
            Basis::Z => 0,
            Basis::X => 1,
        }
    }
}

/// Device-native gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "g", deny_unknown_fields)]
pub enum NativeGate {
    RX { theta: f64 },
    RY { theta: f64 },
    CZ { control: u32, target: u32 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProgramMeta {
    pub point: [f64; 2],
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

/// Deployable program. `gates` are listed in execution order, so the first
/// entry acts first on `|0⟩`; measurement in `basis` follows the last gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NativeProgram {
    pub gates: Vec<NativeGate>,
    pub basis: Basis,
    pub shots: u32,
    pub meta: ProgramMeta,
}

impl NativeProgram {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("program serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TranspileError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let prog: NativeProgram = serde_path_to_error::deserialize(de).map_err(|e| TranspileError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        prog.validate()?;
        Ok(prog)
    }

    pub fn validate(&self) -> Result<(), TranspileError> {
        if self.shots == 0 {
            return Err(TranspileError::Schema {
                path: "shots".into(),
                message: "shots must be at least 1".into(),
            });
        }
        for (i, g) in self.gates.iter().enumerate() {
            if let NativeGate::RX { theta } | NativeGate::RY { theta } = g {
                if !theta.is_finite() {
                    return Err(TranspileError::Schema {
                        path: format!("gates[{i}].theta"),
                        message: "angle must be finite".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn serialize(p: &NativeProgram) -> String {
    p.to_json()
}

pub fn deserialize(text: &str) -> Result<NativeProgram, TranspileError> {
    NativeProgram::from_json(text)
}

/// Native program for `XyxAngles`, with the X-basis change `RY(−π/2)`
/// appended when measuring in X.
pub fn program_from_angles(angles: &XyxAngles<f64>, basis: Basis, shots: u32, meta: ProgramMeta) -> Result<NativeProgram, TranspileError> {
    if shots == 0 {
        return Err(TranspileError::ZeroShots);
    }
    // RX(a)·RY(b)·RX(c) applies RX(c) first
    let mut gates = vec![
        NativeGate::RX { theta: angles.c },
        NativeGate::RY { theta: angles.b },
        NativeGate::RX { theta: angles.a },
    ];
    if basis == Basis::X {
        gates.push(NativeGate::RY {
            theta: -std::f64::consts::FRAC_PI_2,
        });
    }
    Ok(NativeProgram {
        gates,
        basis,
        shots,
        meta,
    })
}

/// Condense the model at `x`, decompose it, and emit the native program.
pub fn compile_point(
    params: &UqcParams<f64>,
    x: &Point2,
    basis: Basis,
    shots: u32,
    model_id: &str,
) -> Result<NativeProgram, TranspileError> {
    let angles = decompose_xyx(&model_unitary(params, x))?;
    program_from_angles(
        &angles,
        basis,
        shots,
        ProgramMeta {
            point: [x.x1, x.x2],
            model_id: model_id.to_string(),
            provenance: None,
        },
    )
}

/// Unitary of a program's gate list (execution order), excluding measurement.
pub fn program_unitary<T: Scalar>(gates: &[NativeGate]) -> Result<Unitary2<T>, TranspileError> {
    gates.iter().try_fold(Unitary2::identity(), |acc, g| {
        let u = match *g {
            NativeGate::RX { theta } => rx(T::of(theta)),
            NativeGate::RY { theta } => ry(T::of(theta)),
            NativeGate::CZ { .. } => return Err(TranspileError::CzNotSupported),
        };
        Ok(u.mul(&acc))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward_state, LabelSet};
    use crate::qmath::{bloch_of, rz, PureState};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn identity_decomposes_to_zeros() {
        let d = decompose_xyx(&Unitary2::<f64>::identity()).unwrap();
        assert_abs_diff_eq!(d.a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.b, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.c, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.global_phase, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_x_rotation_folds_into_a() {
        let d = decompose_xyx(&rx(0.7)).unwrap();
        assert_abs_diff_eq!(d.b, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.a, 0.7, epsilon = 1e-12);
        assert_eq!(d.c, 0.0);
        assert!(d.reconstruction_error(&rx(0.7)) < 1e-12);
    }

    #[test]
    fn y_pi_gimbal_lock() {
        let u = rx(0.4).mul(&ry(PI)).mul(&rx(-1.1));
        let d = decompose_xyx(&u).unwrap();
        assert_abs_diff_eq!(d.b, PI, epsilon = 1e-9);
        assert_eq!(d.c, 0.0);
        assert!(d.reconstruction_error(&u) < 1e-10);
    }

    #[test]
    fn haar_random_reconstruction() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let u = Unitary2::<f64>::haar_random(&mut r);
            let phase = Complex::from_polar(1.0, r.random_range(-PI..PI));
            let u = u.scale(phase);
            let d = decompose_xyx(&u).unwrap();
            assert!(d.reconstruction_error(&u) <= 1e-10);
            assert!((0.0..=PI).contains(&d.b));
            assert!(d.a > -PI && d.a <= PI && d.c > -PI && d.c <= PI);
        }
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let u = Unitary2::<f64>::haar_random(&mut r);
            let d = decompose_xyx(&u).unwrap();
            let again = decompose_xyx(&d.unitary()).unwrap();
            assert_abs_diff_eq!(d.a, again.a, epsilon = 1e-9);
            assert_abs_diff_eq!(d.b, again.b, epsilon = 1e-9);
            assert_abs_diff_eq!(d.c, again.c, epsilon = 1e-9);
            assert_abs_diff_eq!(again.global_phase, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let mut u = rz(0.3);
        u.m[0][0] *= 1.01;
        assert!(matches!(decompose_xyx(&u), Err(TranspileError::NotUnitary(_))));
    }

    #[test]
    fn zero_model_compiles_to_zero_rotations() {
        let p = UqcParams::<f64>::zeros(6, 2).unwrap();
        let prog = compile_point(&p, &Point2::new(0.1, 0.2), Basis::Z, DEFAULT_SHOTS, "m").unwrap();
        assert_eq!(prog.gates.len(), 3);
        for g in &prog.gates {
            match g {
                NativeGate::RX { theta } | NativeGate::RY { theta } => assert_abs_diff_eq!(*theta, 0.0, epsilon = 1e-12),
                NativeGate::CZ { .. } => panic!("CZ emitted"),
            }
        }
        assert_eq!(prog.basis, Basis::Z);
        assert_eq!(prog.shots, 100);
        let px = compile_point(&p, &Point2::new(0.1, 0.2), Basis::X, 100, "m").unwrap();
        assert_eq!(px.gates.len(), 4);
        assert_eq!(px.gates[3], NativeGate::RY { theta: -std::f64::consts::FRAC_PI_2 });
        assert!(matches!(compile_point(&p, &Point2::new(0.0, 0.0), Basis::Z, 0, "m"), Err(TranspileError::ZeroShots)));
    }

    #[test]
    fn basis_change_maps_x_onto_z() {
        let plus = ry(PI / 2.0).apply(&PureState::zero());
        let b = bloch_of(&ry(-PI / 2.0).apply(&plus));
        assert_abs_diff_eq!(b.z, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn compiled_programs_reproduce_model_states() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let labels = LabelSet::<f64>::new(3).unwrap();
        for _ in 0..1000 {
            let flat: Vec<f64> = (0..50).map(|_| r.random_range(-PI..PI)).collect();
            let p = UqcParams::from_flat(&flat, 3).unwrap();
            let x = Point2::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            let prog = compile_point(&p, &x, Basis::Z, 100, "m").unwrap();
            let u = program_unitary::<f64>(&prog.gates).unwrap();
            let direct = bloch_of(&forward_state(&p, &x));
            let compiled = bloch_of(&u.apply(&PureState::zero()));
            assert_abs_diff_eq!(direct.x, compiled.x, epsilon = 1e-9);
            assert_abs_diff_eq!(direct.y, compiled.y, epsilon = 1e-9);
            assert_abs_diff_eq!(direct.z, compiled.z, epsilon = 1e-9);
            assert_eq!(labels.closest(&direct), labels.closest(&compiled));
        }
    }

    #[test]
    fn json_round_trip_and_schema_errors() {
        let p = UqcParams::<f64>::from_flat(&[0.3, -1.2, 0.5, 2.0, -0.1], 2).unwrap();
        let prog = compile_point(&p, &Point2::new(0.25, -0.5), Basis::X, 100, "circle-s7").unwrap();
        let back = deserialize(&serialize(&prog)).unwrap();
        assert_eq!(back, prog);

        let missing = r#"{"gates":[],"basis":"Z","meta":{"point":[0,0],"model_id":"m"}}"#;
        let err = deserialize(missing).unwrap_err();
        assert!(err.to_string().contains("shots"), "{err}");

        let bad_gate = r#"{"gates":[{"g":"RZ","theta":1}],"basis":"Z","shots":1,"meta":{"point":[0,0],"model_id":"m"}}"#;
        match deserialize(bad_gate).unwrap_err() {
            TranspileError::Schema { path, .. } => assert!(path.starts_with("gates[0]"), "{path}"),
            e => panic!("{e}"),
        }
        let zero = r#"{"gates":[],"basis":"Z","shots":0,"meta":{"point":[0,0],"model_id":"m"}}"#;
        assert!(matches!(deserialize(zero), Err(TranspileError::Schema { .. })));
        let cz = r#"{"gates":[{"g":"CZ","control":0,"target":1}],"basis":"Z","shots":5,"meta":{"point":[0,0],"model_id":"m"}}"#;
        let prog = deserialize(cz).unwrap();
        assert!(matches!(program_unitary::<f64>(&prog.gates), Err(TranspileError::CzNotSupported)));
    }

    #[test]
    fn single_precision_decomposition() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let u = Unitary2::<f32>::haar_random(&mut r);
            let d = decompose_xyx(&u).unwrap();
            assert!(d.reconstruction_error(&u) < 1e-4);
        }
    }
}
