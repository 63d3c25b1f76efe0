//! Exact single-qubit linear algebra.
//!
//! Rotations follow `R_A(θ) = exp(-i θ A / 2)`. Global phase is kept in every
//! [`Unitary2`]; comparisons that ignore it say so explicitly.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2<T> {
    pub m: [[Complex<T>; 2]; 2],
}

/// Single-qubit pure state `a0|0⟩ + a1|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState<T> {
    pub a0: Complex<T>,
    pub a1: Complex<T>,
}

/// Real Bloch vector. Length one for pure states, shorter for mixed ones.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVec<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

#[inline]
fn c<T: Scalar>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

impl<T: Scalar> Unitary2<T> {
    pub fn new(u00: Complex<T>, u01: Complex<T>, u10: Complex<T>, u11: Complex<T>) -> Self {
        Self {
            m: [[u00, u01], [u10, u11]],
        }
    }

    pub fn identity() -> Self {
        let (o, z) = (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()));
        Self::new(o, z, z, o)
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let m = &self.m;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> Complex<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let m = &self.m;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                acc = acc + (self.m[i][j] - other.m[i][j]).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `‖U†U − I‖_F`.
    pub fn unitarity_error(&self) -> T {
        self.dagger().mul(self).frobenius_distance(&Self::identity())
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.is_finite() && self.unitarity_error() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.m
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Frobenius distance after removing the best-fitting global phase.
    pub fn distance_up_to_phase(&self, other: &Self) -> T {
        let overlap = other.dagger().mul(self).trace();
        let phase = if overlap.norm() > T::zero() {
            overlap / c(overlap.norm(), T::zero())
        } else {
            c(T::one(), T::zero())
        };
        self.frobenius_distance(&other.scale(phase))
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    /// Matrix-vector product.
    pub fn apply(&self, psi: &PureState<T>) -> PureState<T> {
        let m = &self.m;
        PureState {
            a0: m[0][0] * psi.a0 + m[0][1] * psi.a1,
            a1: m[1][0] * psi.a0 + m[1][1] * psi.a1,
        }
    }

    /// Haar-random element of SU(2) from a normalised Gaussian quaternion.
    pub fn haar_random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let q: [f64; 4] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n < 1e-12 {
                continue;
            }
            let [a, b, cc, d] = q.map(|v| T::of(v / n));
            // a + i(b X + c Y + d Z) as a matrix in SU(2)
            return Self::new(c(a, d), c(cc, b), c(-cc, b), c(a, -d));
        }
    }
}

/// `exp(-i θ X / 2)`.
pub fn rx<T: Scalar>(theta: T) -> Unitary2<T> {
    let (s, co) = (theta * T::half()).sin_cos();
    let z = T::zero();
    Unitary2::new(c(co, z), c(z, -s), c(z, -s), c(co, z))
}

/// `exp(-i θ Y / 2)`. All entries are real.
pub fn ry<T: Scalar>(theta: T) -> Unitary2<T> {
    let (s, co) = (theta * T::half()).sin_cos();
    let z = T::zero();
    Unitary2::new(c(co, z), c(-s, z), c(s, z), c(co, z))
}

/// `exp(-i θ Z / 2)`.
pub fn rz<T: Scalar>(theta: T) -> Unitary2<T> {
    let (s, co) = (theta * T::half()).sin_cos();
    let z = T::zero();
    Unitary2::new(c(co, -s), c(z, z), c(z, z), c(co, s))
}

pub fn apply<T: Scalar>(u: &Unitary2<T>, psi: &PureState<T>) -> PureState<T> {
    u.apply(psi)
}

pub fn mul<T: Scalar>(a: &Unitary2<T>, b: &Unitary2<T>) -> Unitary2<T> {
    a.mul(b)
}

impl<T: Scalar> PureState<T> {
    pub fn new(a0: Complex<T>, a1: Complex<T>) -> Self {
        Self { a0, a1 }
    }

    /// `|0⟩`
    pub fn zero() -> Self {
        Self::new(c(T::one(), T::zero()), c(T::zero(), T::zero()))
    }

    /// `|1⟩`
    pub fn one() -> Self {
        Self::new(c(T::zero(), T::zero()), c(T::one(), T::zero()))
    }

    /// Pure state with the given polar/azimuthal Bloch angles.
    pub fn from_angles(polar: T, azimuth: T) -> Self {
        let (s, co) = (polar * T::half()).sin_cos();
        Self::new(c(co, T::zero()), Complex::from_polar(s, azimuth))
    }

    pub fn norm_sqr(&self) -> T {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    pub fn is_normalized(&self, tol: T) -> bool {
        (self.norm_sqr() - T::one()).abs() <= tol
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.a0.conj() * other.a0 + self.a1.conj() * other.a1
    }

    pub fn bloch(&self) -> BlochVec<T> {
        bloch_of(self)
    }
}

impl<T: Scalar> BlochVec<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    /// True when the vector describes a physical state (`|r| ≤ 1`).
    pub fn is_physical(&self) -> bool {
        self.norm() <= T::one() + T::geometric_tol()
    }
}

/// Bloch vector `(2 Re(a0* a1), 2 Im(a0* a1), |a0|² − |a1|²)`.
pub fn bloch_of<T: Scalar>(psi: &PureState<T>) -> BlochVec<T> {
    let cross = psi.a0.conj() * psi.a1;
    BlochVec {
        x: T::two() * cross.re,
        y: T::two() * cross.im,
        z: psi.a0.norm_sqr() - psi.a1.norm_sqr(),
    }
}

/// Fidelity `⟨Y|ρ|Y⟩ = (1 + s·r)/2` between a pure label state and a state
/// with Bloch vector `r`, clamped to `[0, 1]`.
pub fn fidelity<T: Scalar>(label: &PureState<T>, r: &BlochVec<T>) -> T {
    fidelity_bloch(&bloch_of(label), r)
}

/// Fidelity between a pure state with Bloch vector `s` and any state `r`.
pub fn fidelity_bloch<T: Scalar>(s: &BlochVec<T>, r: &BlochVec<T>) -> T {
    let f = (T::one() + s.dot(r)) * T::half();
    f.max(T::zero()).min(T::one())
}
