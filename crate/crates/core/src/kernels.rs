//! Smoothing kernels: the flat-top C¹ kernel used in the numerical study,
//! the rectangular kernel of the counting estimators, and a band-limited
//! kernel for spectral deconvolution.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::integrate_with_breaks;

/// Support radius of [`Kernel::Paper`].
pub const PAPER_SUPPORT: f64 = 23.0 / 32.0;
/// `K ≡ 1` on `|z| ≤ 1/4` for [`Kernel::Paper`].
pub const PAPER_FLAT: f64 = 0.25;
const PAPER_SLOPE: f64 = 32.0 / 15.0;

/// Truncation radius used when integrating the band-limited kernel.
pub const BANDLIMITED_RADIUS: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    /// `1` on `|z| ≤ 1/4`, `((32/15 (|z| - 1/4))² - 1)²` up to `|z| = 23/32`.
    Paper,
    /// Indicator of `[-1/2, 1/2]`.
    Rectangular,
    /// Inverse Fourier transform of `(1 - u²)³ 1{|u| ≤ 1}`.
    BandLimited,
}

pub fn paper_kernel() -> Kernel {
    Kernel::Paper
}

pub fn rect_kernel() -> Kernel {
    Kernel::Rectangular
}

pub fn bandlimited_kernel() -> Kernel {
    Kernel::BandLimited
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Paper => "paper",
            Kernel::Rectangular => "rect",
            Kernel::BandLimited => "bandlimited",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Kernel::Paper),
            "rect" | "rectangular" => Ok(Kernel::Rectangular),
            "bandlimited" | "band-limited" => Ok(Kernel::BandLimited),
            other => Err(Error::Parse(format!("unknown kernel `{other}`"))),
        }
    }

    /// Number of vanishing moments `ℓ_K`.
    pub fn order(&self) -> u32 {
        1
    }

    pub fn support_radius(&self) -> Option<f64> {
        match self {
            Kernel::Paper => Some(PAPER_SUPPORT),
            Kernel::Rectangular => Some(0.5),
            Kernel::BandLimited => None,
        }
    }

    /// Radius of the region on which `K ≡ 1` exactly.
    pub fn flat_radius(&self) -> Option<f64> {
        match self {
            Kernel::Paper => Some(PAPER_FLAT),
            Kernel::Rectangular => Some(0.5),
            Kernel::BandLimited => None,
        }
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self, Kernel::Rectangular)
    }

    pub fn require_differentiable(&self) -> Result<()> {
        if self.is_differentiable() {
            Ok(())
        } else {
            Err(Error::NonDifferentiableKernel {
                kernel: self.name(),
            })
        }
    }

    /// Points where the kernel or its derivative changes formula.
    pub fn junctions(&self) -> Vec<f64> {
        match self {
            Kernel::Paper => vec![-PAPER_SUPPORT, -PAPER_FLAT, PAPER_FLAT, PAPER_SUPPORT],
            Kernel::Rectangular => vec![-0.5, 0.5],
            Kernel::BandLimited => vec![],
        }
    }

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        match self {
            Kernel::Paper => {
                let a = z.abs();
                if a <= PAPER_FLAT {
                    1.0
                } else if a <= PAPER_SUPPORT {
                    let u = PAPER_SLOPE * (a - PAPER_FLAT);
                    let w = u * u - 1.0;
                    w * w
                } else {
                    0.0
                }
            }
            Kernel::Rectangular => {
                if z.abs() <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::BandLimited => bandlimited_value(z),
        }
    }

    /// `K'`. For the rectangular kernel the distributional part at `±1/2`
    /// is dropped and the result is 0 everywhere.
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            Kernel::Paper => {
                let a = z.abs();
                if a <= PAPER_FLAT || a >= PAPER_SUPPORT {
                    0.0
                } else {
                    let u = PAPER_SLOPE * (a - PAPER_FLAT);
                    4.0 * u * (u * u - 1.0) * PAPER_SLOPE * z.signum()
                }
            }
            Kernel::Rectangular => 0.0,
            Kernel::BandLimited => bandlimited_derivative(z),
        }
    }

    /// `K^{(-1)}(z) = ∫_{-∞}^z K`.
    pub fn antiderivative(&self, z: f64) -> f64 {
        match self {
            Kernel::Paper => {
                let a = z.abs();
                let half = if a <= PAPER_FLAT {
                    a
                } else if a <= PAPER_SUPPORT {
                    let u = PAPER_SLOPE * (a - PAPER_FLAT);
                    PAPER_FLAT + (u - 2.0 * u.powi(3) / 3.0 + u.powi(5) / 5.0) / PAPER_SLOPE
                } else {
                    0.5
                };
                0.5 + half.copysign(z)
            }
            Kernel::Rectangular => (z + 0.5).clamp(0.0, 1.0),
            Kernel::BandLimited => {
                let half = integrate_with_breaks(bandlimited_value, &[0.0, z], 1e-13)
                    .map(|r| r.value)
                    .unwrap_or(f64::NAN);
                0.5 + half
            }
        }
    }

    /// Fourier transform `FK(u) = ∫ e^{iuz} K(z) dz`, populated for the
    /// band-limited kernel only.
    pub fn fourier(&self, u: f64) -> Option<f64> {
        match self {
            Kernel::BandLimited => {
                let a = u.abs();
                Some(if a <= 1.0 { (1.0 - a * a).powi(3) } else { 0.0 })
            }
            _ => None,
        }
    }

    pub fn has_fourier(&self) -> bool {
        matches!(self, Kernel::BandLimited)
    }

    /// `K_h(x) = K(x / h) / h`.
    #[inline]
    pub fn scaled(&self, h: f64, x: f64) -> f64 {
        self.value(x / h) / h
    }

    /// Quadrature range and breakpoints for integrals against the kernel.
    pub(crate) fn quadrature_breaks(&self) -> Vec<f64> {
        match self.support_radius() {
            Some(r) => {
                let mut b = self.junctions();
                b.push(-r);
                b.push(r);
                b.push(0.0);
                b
            }
            None => {
                let r = BANDLIMITED_RADIUS;
                (-20..=20).map(|k| k as f64 * r / 20.0).collect()
            }
        }
    }
}

// m_j = ∫_0^1 u^j (1 - u²)³ du
fn bl_moment(j: u32) -> f64 {
    let j = j as f64;
    48.0 / ((j + 1.0) * (j + 3.0) * (j + 5.0) * (j + 7.0))
}

const BL_SERIES_CUTOFF: f64 = 3.0;

/// Spherical Bessel functions j_0..=j_4 by upward recurrence (stable for |z| ≥ 3).
fn spherical_bessel_0_to_4(z: f64) -> [f64; 5] {
    let (s, c) = z.sin_cos();
    let mut j = [0.0; 5];
    j[0] = s / z;
    j[1] = s / (z * z) - c / z;
    for n in 1..4 {
        j[n + 1] = (2 * n + 1) as f64 / z * j[n] - j[n - 1];
    }
    j
}

fn bandlimited_value(z: f64) -> f64 {
    let a = z.abs();
    if a < BL_SERIES_CUTOFF {
        // (1/π) Σ (-1)^k z^{2k} / (2k)! m_{2k}
        let z2 = a * a;
        let mut term = 1.0;
        let mut sum = bl_moment(0);
        for k in 1..40u32 {
            term *= -z2 / ((2 * k - 1) as f64 * (2 * k) as f64);
            let t = term * bl_moment(2 * k);
            sum += t;
            if t.abs() < 1e-18 {
                break;
            }
        }
        sum / PI
    } else {
        let j = spherical_bessel_0_to_4(a);
        48.0 / PI * j[3] / (a * a * a)
    }
}

fn bandlimited_derivative(z: f64) -> f64 {
    let a = z.abs();
    let d = if a < BL_SERIES_CUTOFF {
        // -(1/π) Σ (-1)^k z^{2k+1} / (2k+1)! m_{2k+2}
        let z2 = a * a;
        let mut term = a;
        let mut sum = term * bl_moment(2);
        for k in 1..40u32 {
            term *= -z2 / ((2 * k) as f64 * (2 * k + 1) as f64);
            let t = term * bl_moment(2 * k + 2);
            sum += t;
            if t.abs() < 1e-18 {
                break;
            }
        }
        -sum / PI
    } else {
        let j = spherical_bessel_0_to_4(a);
        -48.0 / PI * j[4] / (a * a * a)
    };
    if z < 0.0 {
        -d
    } else {
        d
    }
}

/// Quadrature moments of a kernel and whether the order conditions hold.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    /// `∫ z^ℓ K(z) dz` for `ℓ = 0..=max_order`.
    pub moments: Vec<f64>,
    pub violations: Vec<String>,
}

impl OrderReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tolerance on `|∫ z^ℓ K|` for `1 ≤ ℓ ≤ ℓ_K`.
pub const ORDER_TOL: f64 = 1e-8;

/// Computes kernel moments by quadrature and checks `∫K = 1` and the
/// vanishing moments up to the kernel's order.
pub fn verify_order(k: Kernel, max_order: u32) -> Result<OrderReport> {
    let breaks = k.quadrature_breaks();
    let mut moments = Vec::with_capacity(max_order as usize + 1);
    for l in 0..=max_order {
        let m = integrate_with_breaks(|z| z.powi(l as i32) * k.value(z), &breaks, 1e-13)?.value;
        moments.push(m);
    }
    let mut violations = Vec::new();
    let mass_tol = if k.support_radius().is_some() {
        1e-10
    } else {
        1e-6
    };
    if (moments[0] - 1.0).abs() > mass_tol {
        violations.push(format!("∫K = {} differs from 1", moments[0]));
    }
    for l in 1..=k.order().min(max_order) {
        if moments[l as usize].abs() > ORDER_TOL {
            violations.push(format!(
                "moment {l} = {:e} does not vanish",
                moments[l as usize]
            ));
        }
    }
    Ok(OrderReport {
        moments,
        violations,
    })
}
