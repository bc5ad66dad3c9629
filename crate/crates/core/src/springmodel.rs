//! Dressed-state secular dynamics and the mechanical spring picture.
//!
//! In the secular (strong-drive) limit the populations of the dressed states
//! |±⟩ (mixtures of |1⟩ and |3⟩ with angle θ) and of the shelf |2⟩ decouple
//! from the coherences and obey dϱ⃗/dt = M ϱ⃗ with a 3×3 rate matrix M whose
//! columns each sum to zero. Its three modes map onto the central spectral
//! components: a zero mode (the elastic line, zero width), an O(γ) mode (the
//! central Mollow peak) and an O(γ₃) mode (the narrow shelving peak).
//!
//! The same dynamics is reproduced by three masses m₊, m₋, m₂ coupled by
//! springs D₁, D₂, D₃ (second-order form F = M² with population = mass ×
//! elongation). Mode widths follow from summing the dressed-state transition
//! rates, either naively or weighted by the per-mode dressed populations; the
//! weighted sums reproduce the first-order secular widths exactly.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::liouvillian::{LiouvilleError, SystemParams};
use crate::numerics::{self, ComplexMatrix, NumericsError};

pub type C64 = Complex64;

/// Mode-identification guard: |Re λ_b| must exceed |Re λ_c| by this factor,
/// otherwise the secular mode picture is meaningless.
const MODE_SEPARATION: f64 = 10.0;

/// Normalization of the mode weights: the largest dressed-state weight in a
/// mode is unity, so the pairwise triples sum to α = 2.
const WEIGHT_NORM: f64 = 2.0;

#[derive(Debug, Error)]
pub enum SpringError {
    #[error("degenerate dressing: Ω = Δ = 0 leaves no laser-defined basis")]
    DegenerateDressing,
    #[error("ambiguous modes: |Re λ_b|/|Re λ_c| = {0:.2} < 10, no secular separation")]
    AmbiguousModes(f64),
    #[error(transparent)]
    Liouville(#[from] LiouvilleError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Dressing angle θ of the laser-atom eigenstates.
///
/// sin θ = Ω / (√2 (Δ² + Ω² − Δ√(Δ²+Ω²))^{1/2}), cos θ = √(1 − sin²θ);
/// evaluated through the cancellation-free forms sin²θ = (1 + Δ/Ω̃)/2,
/// cos²θ = (1 − Δ/Ω̃)/2 with Ω̃ = √(Ω²+Δ²). Principal branch: both ≥ 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DressedAngle {
    pub theta: f64,
    pub sin_t: f64,
    pub cos_t: f64,
}

impl DressedAngle {
    pub fn sin2(&self) -> f64 {
        self.sin_t * self.sin_t
    }
    pub fn cos2(&self) -> f64 {
        self.cos_t * self.cos_t
    }
    /// cos 4θ = 1 − 8 sin²θ cos²θ.
    pub fn cos4t(&self) -> f64 {
        1.0 - 8.0 * self.sin2() * self.cos2()
    }
    /// cos 2θ = cos²θ − sin²θ.
    pub fn cos2t(&self) -> f64 {
        self.cos2() - self.sin2()
    }
}

/// Masses, spring constants and the second-order evolution matrix F.
#[derive(Debug, Clone, Serialize)]
pub struct SpringSystem {
    /// (m₊, m₋, m₂) = (sin⁻⁴θ, cos⁻⁴θ, (γ₃/γ₂)·sin⁻²θcos⁻²θ).
    pub masses: (f64, f64, f64),
    /// Spring constants (D₁, D₂, D₃); D₁ couples + and −, D₂ couples + and 2,
    /// D₃ couples − and 2.
    pub constants: (f64, f64, f64),
    /// d²Q⃗/dt² = F·Q⃗ with Q⃗ = (m₊q₊, m₋q₋, m₂q₂) the populations.
    #[serde(skip)]
    pub f: ComplexMatrix,
}

/// Per-mode dressed-state weights (w⁺, w⁻, w²).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModeWeights {
    pub plus: f64,
    pub minus: f64,
    pub shelf: f64,
}

/// One fundamental mode: eigenvalue of M plus the two width estimates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Mode {
    pub eigenvalue_re: f64,
    pub eigenvalue_im: f64,
    pub naive_width: f64,
    pub weighted_width: f64,
    pub weights: ModeWeights,
}

/// The three central modes: elastic (zero width), Mollow (O(γ)), and the
/// narrow shelving peak (O(γ₃)).
#[derive(Debug, Clone, Serialize)]
pub struct ModeSet {
    pub elastic: Mode,
    pub mollow: Mode,
    pub peak: Mode,
}

pub fn dressed_angle(p: &SystemParams) -> Result<DressedAngle, SpringError> {
    if p.rabi == 0.0 && p.detuning == 0.0 {
        return Err(SpringError::DegenerateDressing);
    }
    let omega_tilde = p.generalized_rabi();
    let sin2 = 0.5 * (1.0 + p.detuning / omega_tilde);
    let sin_t = sin2.sqrt();
    let cos_t = (1.0 - sin2).max(0.0).sqrt();
    Ok(DressedAngle {
        theta: sin_t.asin(),
        sin_t,
        cos_t,
    })
}

/// Secular population rate matrix M for ϱ⃗ = (ϱ₊₊, ϱ₋₋, ϱ₂₂):
///
/// ```text
///       ⎛ −2γ₃s² − 2γs⁴      2γc⁴          2γ₂c² ⎞
///   M = ⎜     2γs⁴       −2γ₃c² − 2γc⁴     2γ₂s² ⎟      s = sinθ, c = cosθ
///       ⎝     2γ₃s²          2γ₃c²         −2γ₂  ⎠
/// ```
///
/// Columns sum to zero (population conservation among the three states).
pub fn secular_matrix(p: &SystemParams) -> Result<ComplexMatrix, SpringError> {
    let ang = dressed_angle(p)?;
    let (s2, c2) = (ang.sin2(), ang.cos2());
    let (s4, c4) = (s2 * s2, c2 * c2);
    let (g, g2, g3) = (p.gamma, p.gamma2, p.gamma3);
    let r = |x: f64| C64::new(x, 0.0);
    Ok(ComplexMatrix::from_entries(
        3,
        vec![
            r(-2.0 * g3 * s2 - 2.0 * g * s4),
            r(2.0 * g * c4),
            r(2.0 * g2 * c2),
            r(2.0 * g * s4),
            r(-2.0 * g3 * c2 - 2.0 * g * c4),
            r(2.0 * g2 * s2),
            r(2.0 * g3 * s2),
            r(2.0 * g3 * c2),
            r(-2.0 * g2),
        ],
    ))
}

/// Mechanical analogue of the secular dynamics.
pub fn spring_system(p: &SystemParams) -> Result<SpringSystem, SpringError> {
    if p.gamma2 <= 0.0 || p.gamma3 <= 0.0 {
        return Err(LiouvilleError::InvalidParams(
            "spring system needs γ₂, γ₃ > 0".into(),
        )
        .into());
    }
    let ang = dressed_angle(p)?;
    let (s2, c2) = (ang.sin2(), ang.cos2());
    let (g, g2, g3) = (p.gamma, p.gamma2, p.gamma3);
    let (cos2t, cos4t) = (ang.cos2t(), ang.cos4t());

    let m_plus = 1.0 / (s2 * s2);
    let m_minus = 1.0 / (c2 * c2);
    let m_shelf = g3 / g2 / (s2 * c2);

    let d1 = 3.0 * g * g + 4.0 * g * g3 - 4.0 * g2 * g3 + g * g * cos4t;
    let d2 = g3 / s2 * (g + 4.0 * g2 + 2.0 * g3 - 2.0 * (g + g3) * cos2t + g * cos4t);
    let d3 = g3 / c2 * (g + 4.0 * g2 + 2.0 * g3 + 2.0 * (g + g3) * cos2t + g * cos4t);

    let r = |x: f64| C64::new(x, 0.0);
    let f = ComplexMatrix::from_entries(
        3,
        vec![
            r((d1 + d2) / m_plus),
            r(-d1 / m_minus),
            r(-d2 / m_shelf),
            r(-d1 / m_plus),
            r((d1 + d3) / m_minus),
            r(-d3 / m_shelf),
            r(-d2 / m_plus),
            r(-d3 / m_minus),
            r((d2 + d3) / m_shelf),
        ],
    );
    Ok(SpringSystem {
        masses: (m_plus, m_minus, m_shelf),
        constants: (d1, d2, d3),
        f,
    })
}

/// Naive mode widths from summing the relevant transition rates:
/// Γ_a = 0, Γ_b = (3+cos4θ)/2 · γ, Γ_c = 2(a+1)γ₃.
pub fn mode_widths_naive(p: &SystemParams) -> Result<(f64, f64, f64), SpringError> {
    let ang = dressed_angle(p)?;
    let a = p.shelving_ratio()?;
    let gamma_b = 0.5 * (3.0 + ang.cos4t()) * p.gamma;
    let gamma_c = 2.0 * (a + 1.0) * p.gamma3;
    Ok((0.0, gamma_b, gamma_c))
}

/// First-order correction shared (with opposite sign) by the Mollow and peak
/// modes: (5 + 3cos4θ)/(3 + cos4θ) · γ₃.
fn width_correction(p: &SystemParams, ang: &DressedAngle) -> f64 {
    (5.0 + 3.0 * ang.cos4t()) / (3.0 + ang.cos4t()) * p.gamma3
}

/// Population-weighted mode widths, exact to first order in γ₃/γ:
///
///   Γ_b^w = (3+cos4θ)/2 · γ + (5+3cos4θ)/(3+cos4θ) · γ₃
///   Γ_c^w = 2(a+1)γ₃ − (5+3cos4θ)/(3+cos4θ) · γ₃
///
/// Returns the two widths and the (b, c) weight triples. The triples are
/// even in Δ (widths depend on the detuning only through cos4θ), so they are
/// reported for |Δ| to keep every weight in [0, 1].
pub fn mode_widths_weighted(
    p: &SystemParams,
) -> Result<(f64, f64, (ModeWeights, ModeWeights)), SpringError> {
    let ang = dressed_angle(p)?;
    let a = p.shelving_ratio()?;
    let corr = width_correction(p, &ang);
    let gamma_b = 0.5 * (3.0 + ang.cos4t()) * p.gamma + corr;
    let gamma_c = 2.0 * (a + 1.0) * p.gamma3 - corr;

    let (s2, c2) = if p.detuning >= 0.0 {
        (ang.sin2(), ang.cos2())
    } else {
        (ang.cos2(), ang.sin2())
    };
    let m_plus = 1.0 / (s2 * s2);
    let m_minus = 1.0 / (c2 * c2);
    let kappa = (m_minus - m_plus) / (m_plus + m_minus);
    let wb = ModeWeights {
        plus: WEIGHT_NORM / 2.0,
        minus: WEIGHT_NORM / 2.0 * (1.0 - kappa * p.gamma3 / p.gamma),
        shelf: WEIGHT_NORM / 2.0 * kappa * p.gamma3 / p.gamma,
    };
    let wc = ModeWeights {
        plus: WEIGHT_NORM / 2.0 * m_plus / (m_plus + m_minus),
        minus: WEIGHT_NORM / 2.0 * m_minus / (m_plus + m_minus),
        shelf: WEIGHT_NORM / 2.0,
    };
    Ok((gamma_b, gamma_c, (wb, wc)))
}

/// Identify the three central modes from the eigenvalues of M and attach the
/// width estimates. Modes are assigned by |Re|: one eigenvalue must vanish
/// (conservation), the smallest nonzero |Re| is the narrow peak, the largest
/// the Mollow mode; the two must be separated by at least a factor 10.
pub fn mode_set(p: &SystemParams) -> Result<ModeSet, SpringError> {
    let m = secular_matrix(p)?;
    let eig = numerics::eigenvalues(&m)?;
    let mut vals = eig.values.clone();
    vals.sort_by(|x, y| x.re.abs().total_cmp(&y.re.abs()));
    let (lam0, lam_c, lam_b) = (vals[0], vals[1], vals[2]);
    let separation = lam_b.re.abs() / lam_c.re.abs().max(f64::MIN_POSITIVE);
    if separation < MODE_SEPARATION {
        return Err(SpringError::AmbiguousModes(separation));
    }
    let (naive_a, naive_b, naive_c) = mode_widths_naive(p)?;
    let (wb, wc, (weights_b, weights_c)) = mode_widths_weighted(p)?;
    let sys = spring_system(p)?;
    let mass_max = sys.masses.0.max(sys.masses.1).max(sys.masses.2);
    let mode = |lam: C64, naive: f64, weighted: f64, weights: ModeWeights| Mode {
        eigenvalue_re: lam.re,
        eigenvalue_im: lam.im,
        naive_width: naive,
        weighted_width: weighted,
        weights,
    };
    Ok(ModeSet {
        // Uniform elongation: populations distribute like the masses.
        elastic: mode(
            lam0,
            naive_a,
            0.0,
            ModeWeights {
                plus: sys.masses.0 / mass_max,
                minus: sys.masses.1 / mass_max,
                shelf: sys.masses.2 / mass_max,
            },
        ),
        mollow: mode(lam_b, naive_b, wb, weights_b),
        peak: mode(lam_c, naive_c, wc, weights_c),
    })
}
