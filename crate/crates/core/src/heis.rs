//! Arithmetic on the Heisenberg group `H_d` in its complex model.
//!
//! A point is a pair `(h, c)` with `h ∈ C^d` the horizontal part and `c ∈ R`
//! the center. The group law is
//!
//! ```text
//! (h, c) · (h', c') = (h + h', c + c' + ½ ω(h, h'))
//! ```
//!
//! where `ω(z, z') = Σ Im(conj(z_i) z'_i)` is the standard symplectic form.
//! Distances use the Koranyi gauge `N(h, c) = (‖h‖⁴ + c²)^{1/4}` through
//! `d(a, b) = N(a⁻¹ b)`.
//!
//! The real model `(x, y, z)` with `x, y ∈ R^d` is the view `h = x + i y`;
//! see [`HPoint::from_real`].
//!
//! [`H1`] is a `Copy` specialisation of the `d = 1` case used by the graph
//! embeddings, where millions of distances are evaluated.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite complex vector, `d ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVector(Vec<Complex64>);

impl CVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVector);
        }
        Ok(CVector(entries))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); dim])
    }

    /// Builds a vector from interleaved `(re, im)` pairs.
    pub fn from_interleaved(parts: &[f64]) -> Result<Self> {
        if !parts.len().is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "interleaved vector needs an even number of reals, got {}",
                parts.len()
            )));
        }
        Self::new(
            parts
                .chunks_exact(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Real inner product `Re⟨x, y⟩` of the underlying `R^{2d}` vectors.
    pub fn real_dot(&self, other: &CVector) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum())
    }

    /// Hermitian inner product `Σ conj(x_i) y_i`.
    pub fn hermitian(&self, other: &CVector) -> Result<Complex64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scale(&self, s: f64) -> CVector {
        CVector(self.0.iter().map(|z| z * s).collect())
    }

    pub fn add(&self, other: &CVector) -> Result<CVector> {
        check_dims(self.dim(), other.dim())?;
        Ok(CVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &CVector) -> Result<CVector> {
        check_dims(self.dim(), other.dim())?;
        Ok(CVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn neg(&self) -> CVector {
        CVector(self.0.iter().map(|z| -z).collect())
    }

    /// The interleaved `(re, im)` coordinates.
    pub fn to_interleaved(&self) -> Vec<f64> {
        self.0.iter().flat_map(|z| [z.re, z.im]).collect()
    }
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// The symplectic form `ω(x, y) = Σ Im(conj(x_i) y_i)`.
pub fn symplectic(x: &CVector, y: &CVector) -> Result<f64> {
    check_dims(x.dim(), y.dim())?;
    Ok(x.0
        .iter()
        .zip(&y.0)
        .map(|(a, b)| a.re * b.im - a.im * b.re)
        .sum())
}

/// A point of `H_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub horizontal: CVector,
    pub center: f64,
}

impl HPoint {
    pub fn new(horizontal: CVector, center: f64) -> Self {
        HPoint { horizontal, center }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Ok(HPoint::new(CVector::zeros(dim)?, 0.0))
    }

    /// Convenience constructor from complex entries.
    pub fn from_parts(entries: Vec<Complex64>, center: f64) -> Result<Self> {
        Ok(HPoint::new(CVector::new(entries)?, center))
    }

    /// Converts from the real model `(x, y, z)`, `x, y ∈ R^d`.
    pub fn from_real(x: &[f64], y: &[f64], z: f64) -> Result<Self> {
        check_dims(x.len(), y.len())?;
        let entries = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        Self::from_parts(entries, z)
    }

    /// The real-model coordinates `(x, y, z)`.
    pub fn to_real(&self) -> (Vec<f64>, Vec<f64>, f64) {
        let xs = self.horizontal.0.iter().map(|z| z.re).collect();
        let ys = self.horizontal.0.iter().map(|z| z.im).collect();
        (xs, ys, self.center)
    }

    pub fn dim(&self) -> usize {
        self.horizontal.dim()
    }
}

pub fn product(a: &HPoint, b: &HPoint) -> Result<HPoint> {
    let omega = symplectic(&a.horizontal, &b.horizontal)?;
    Ok(HPoint {
        horizontal: a.horizontal.add(&b.horizontal)?,
        center: a.center + b.center + 0.5 * omega,
    })
}

pub fn inverse(a: &HPoint) -> HPoint {
    HPoint {
        horizontal: a.horizontal.neg(),
        center: -a.center,
    }
}

/// Koranyi gauge `(‖h‖⁴ + c²)^{1/4}`.
pub fn koranyi_norm(a: &HPoint) -> f64 {
    gauge(a.horizontal.norm_sqr(), a.center)
}

#[inline]
pub(crate) fn gauge(norm_sqr: f64, center: f64) -> f64 {
    (norm_sqr * norm_sqr + center * center).sqrt().sqrt()
}

/// `a⁻¹ · b`, computed without the intermediate inverse.
pub fn difference(a: &HPoint, b: &HPoint) -> Result<HPoint> {
    let omega = symplectic(&a.horizontal, &b.horizontal)?;
    Ok(HPoint {
        horizontal: b.horizontal.sub(&a.horizontal)?,
        center: b.center - a.center - 0.5 * omega,
    })
}

/// Koranyi distance `N(a⁻¹ b)`.
pub fn distance(a: &HPoint, b: &HPoint) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let mut norm_sqr = 0.0;
    let mut omega = 0.0;
    for (p, q) in a.horizontal.0.iter().zip(&b.horizontal.0) {
        norm_sqr += (q - p).norm_sqr();
        omega += p.re * q.im - p.im * q.re;
    }
    Ok(gauge(norm_sqr, b.center - a.center - 0.5 * omega))
}

/// The dilation `δ_λ(h, c) = (λ h, λ² c)`.
pub fn dilate(lambda: f64, a: &HPoint) -> Result<HPoint> {
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveDilation(lambda));
    }
    Ok(HPoint {
        horizontal: a.horizontal.scale(lambda),
        center: lambda * lambda * a.center,
    })
}

/// Non-horizontality `NH(g) = d(π̃(g), g) = |c|^{1/2}`.
pub fn nh(a: &HPoint) -> f64 {
    a.center.abs().sqrt()
}

/// The 1-Lipschitz homomorphism `π(h, c) = h`.
pub fn plane_project(a: &HPoint) -> CVector {
    a.horizontal.clone()
}

/// Rotates the `plane_index`-th symplectic plane by `angle`.
pub fn rotate(a: &HPoint, plane_index: usize, angle: f64) -> Result<HPoint> {
    if plane_index >= a.dim() {
        return Err(Error::PlaneIndexOutOfRange {
            index: plane_index,
            dim: a.dim(),
        });
    }
    let mut out = a.clone();
    out.horizontal.0[plane_index] *= Complex64::from_polar(1.0, angle);
    Ok(out)
}

/// Coordinate-wise affine midpoint of `a` and `b` in the `(h, c)` chart.
pub fn affine_midpoint(a: &HPoint, b: &HPoint) -> Result<HPoint> {
    Ok(HPoint {
        horizontal: a.horizontal.add(&b.horizontal)?.scale(0.5),
        center: 0.5 * (a.center + b.center),
    })
}

/// A point of `H_1` as `(z, t)` with `z ∈ C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H1 {
    pub z: Complex64,
    pub t: f64,
}

impl H1 {
    pub const IDENTITY: H1 = H1 {
        z: Complex64 { re: 0.0, im: 0.0 },
        t: 0.0,
    };

    pub fn new(x: f64, y: f64, t: f64) -> Self {
        H1 {
            z: Complex64::new(x, y),
            t,
        }
    }

    pub fn product(self, other: H1) -> H1 {
        H1 {
            z: self.z + other.z,
            t: self.t + other.t + 0.5 * omega1(self.z, other.z),
        }
    }

    pub fn inverse(self) -> H1 {
        H1 {
            z: -self.z,
            t: -self.t,
        }
    }

    pub fn norm(self) -> f64 {
        gauge(self.z.norm_sqr(), self.t)
    }

    /// `self⁻¹ · other`.
    pub fn difference(self, other: H1) -> H1 {
        H1 {
            z: other.z - self.z,
            t: other.t - self.t - 0.5 * omega1(self.z, other.z),
        }
    }

    pub fn distance(self, other: H1) -> f64 {
        self.difference(other).norm()
    }

    pub fn nh(self) -> f64 {
        self.t.abs().sqrt()
    }

    pub fn dilate(self, lambda: f64) -> H1 {
        H1 {
            z: self.z * lambda,
            t: self.t * lambda * lambda,
        }
    }
}

#[inline]
fn omega1(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

impl From<H1> for HPoint {
    fn from(p: H1) -> Self {
        HPoint {
            horizontal: CVector(vec![p.z]),
            center: p.t,
        }
    }
}

impl TryFrom<&HPoint> for H1 {
    type Error = Error;

    fn try_from(p: &HPoint) -> Result<Self> {
        check_dims(p.dim(), 1)?;
        Ok(H1 {
            z: p.horizontal.0[0],
            t: p.center,
        })
    }
}
