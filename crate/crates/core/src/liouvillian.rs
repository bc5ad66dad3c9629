//! The driven three-level system with a weak shelving level.
//!
//! Level scheme: the |1⟩ ↔ |3⟩ transition is driven by a monochromatic laser
//! with Rabi frequency Ω and detuning Δ = ω_L − ω₀. The upper level |3⟩ decays
//! back to |1⟩ with total width 2γ and into the shelf |2⟩ with width 2γ₃; the
//! shelf drains back to |1⟩ with width 2γ₂. The shelf couples only through
//! these radiative decays, never to the laser.
//!
//! With ρ₂₂ = 1 − ρ₃₃ − ρ₁₁ eliminated, the Bloch vector
//! ρ⃗ = (ρ₃₃, ρ₁₁, ρ₃₁, ρ₁₃)ᵀ obeys
//!
//!   dρ⃗/dt = B ρ⃗ + I⃗,      I⃗ = (0, 2γ₂, 0, 0)ᵀ
//!
//! with the constant 4×4 generator B built in [`build_liouvillian`]. The
//! coherences ρ₃₂, ρ₂₁ decouple (they relax at γ+γ₃+γ₂ and γ₂ and vanish in
//! the steady state), so they are not represented.
//!
//! All rates are in units of γ (so `gamma` is canonically 1.0) and times in
//! 1/γ; this matches the natural scaling of the problem and keeps every
//! matrix well conditioned.

use num_complex::Complex64;
use serde::Serialize;
use std::sync::OnceLock;
use thiserror::Error;

use crate::numerics::{self, ComplexMatrix, NumericsError};

pub type C64 = Complex64;

#[derive(Debug, Error)]
pub enum LiouvilleError {
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate system: no scattering steady state (Ω = 0)")]
    DegenerateSystem,
    #[error("population fully shelved: γ₂ = 0 traps everything in |2⟩")]
    PopulationTrapped,
    #[error("shelving ratio a = γ₂/γ₃ undefined for γ₃ = 0")]
    UndefinedShelvingRatio,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// The five rates defining one configuration, in units of γ.
///
/// `gamma`, `gamma2`, `gamma3` are HALF the total decay widths (the widths
/// are 2γ, 2γ₂, 2γ₃). Constructed with γ₂ = γ₃ = 0 the system degenerates to
/// a driven two-level atom; that branch is tracked explicitly so downstream
/// code can use the two-level closed forms (ρ₂₂ ≡ 0) instead of running into
/// the 0/0 ratio a = γ₂/γ₃.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    pub gamma: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub rabi: f64,
    pub detuning: f64,
    two_level: bool,
}

impl SystemParams {
    pub fn new(
        gamma: f64,
        gamma2: f64,
        gamma3: f64,
        rabi: f64,
        detuning: f64,
    ) -> Result<Self, LiouvilleError> {
        let all_finite = [gamma, gamma2, gamma3, rabi, detuning]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(LiouvilleError::InvalidParams("non-finite rate".into()));
        }
        if gamma <= 0.0 {
            return Err(LiouvilleError::InvalidParams(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if gamma2 < 0.0 || gamma3 < 0.0 {
            return Err(LiouvilleError::InvalidParams(
                "gamma2 and gamma3 must be nonnegative".into(),
            ));
        }
        if rabi < 0.0 {
            return Err(LiouvilleError::InvalidParams(
                "rabi frequency must be nonnegative".into(),
            ));
        }
        Ok(Self {
            gamma,
            gamma2,
            gamma3,
            rabi,
            detuning,
            // Both shelf couplings absent: this IS the two-level atom.
            two_level: gamma2 == 0.0 && gamma3 == 0.0,
        })
    }

    /// The corresponding driven two-level system (γ₂ = γ₃ = 0, ρ₂₂ ≡ 0).
    pub fn two_level(&self) -> Self {
        Self {
            gamma2: 0.0,
            gamma3: 0.0,
            two_level: true,
            ..*self
        }
    }

    pub fn is_two_level(&self) -> bool {
        self.two_level
    }

    /// a = γ₂/γ₃, the de-shelving to shelving ratio.
    pub fn shelving_ratio(&self) -> Result<f64, LiouvilleError> {
        if self.gamma3 > 0.0 {
            Ok(self.gamma2 / self.gamma3)
        } else {
            Err(LiouvilleError::UndefinedShelvingRatio)
        }
    }

    /// Generalized Rabi frequency Ω̃ = √(Ω² + Δ²).
    pub fn generalized_rabi(&self) -> f64 {
        self.rabi.hypot(self.detuning)
    }

    pub fn with_detuning(self, detuning: f64) -> Self {
        Self { detuning, ..self }
    }
}

/// Bloch vector (ρ₃₃, ρ₁₁, ρ₃₁, ρ₁₃); ρ₂₂ is reconstructed on demand.
///
/// Populations are stored as complex so the numeric solve can be compared
/// entrywise against the closed form; physically Im ρ₃₃ = Im ρ₁₁ = 0 and
/// ρ₁₃ = ρ₃₁* to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub rho33: C64,
    pub rho11: C64,
    pub rho31: C64,
    pub rho13: C64,
}

impl BlochVector {
    /// The eliminated shelf population ρ₂₂ = 1 − ρ₃₃ − ρ₁₁.
    pub fn rho22(&self) -> C64 {
        C64::new(1.0, 0.0) - self.rho33 - self.rho11
    }

    pub fn as_array(&self) -> [C64; 4] {
        [self.rho33, self.rho11, self.rho31, self.rho13]
    }

    fn from_array(v: &[C64]) -> Self {
        Self {
            rho33: v[0],
            rho11: v[1],
            rho31: v[2],
            rho13: v[3],
        }
    }
}

/// Generator of the Bloch-vector motion: dρ⃗/dt = B ρ⃗ + I⃗.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub b: ComplexMatrix,
    pub drive: [C64; 4],
}

/// Fault-injection hook for the validation self-test: flips the sign of
/// B[0][2] so the suite can demonstrate that a corrupted generator is caught
/// (the spectral sum rule breaks). Enabled only via the environment variable
/// FLUORSIM_INJECT_B_SIGN_FLIP; never set in normal operation.
fn b_sign_flip_injected() -> bool {
    static FLAG: OnceLock<bool> = OnceLock::new();
    *FLAG.get_or_init(|| std::env::var_os("FLUORSIM_INJECT_B_SIGN_FLIP").is_some())
}

/// Build B and I⃗ for the given rates.
///
/// Row order matches the Bloch vector (ρ₃₃, ρ₁₁, ρ₃₁, ρ₁₃):
///
/// ```text
///       ⎛ −2(γ+γ₃)      0         iΩ/2       −iΩ/2    ⎞
///   B = ⎜ 2(γ−γ₂)     −2γ₂       −iΩ/2        iΩ/2    ⎟
///       ⎜   iΩ/2      −iΩ/2   −iΔ−γ−γ₃         0      ⎟
///       ⎝  −iΩ/2       iΩ/2        0        iΔ−γ−γ₃   ⎠
/// ```
///
/// and I⃗ = (0, 2γ₂, 0, 0)ᵀ. Rows 4 is the complex conjugate of row 3, which
/// propagates ρ₁₃ = ρ₃₁*.
pub fn build_liouvillian(p: &SystemParams) -> Liouvillian {
    let (g, g2, g3, om, de) = (p.gamma, p.gamma2, p.gamma3, p.rabi, p.detuning);
    let i = C64::new(0.0, 1.0);
    let hw = C64::new(0.5 * om, 0.0); // Ω/2
    let z = C64::new(0.0, 0.0);

    let mut b = ComplexMatrix::from_entries(
        4,
        vec![
            C64::new(-2.0 * (g + g3), 0.0),
            z,
            i * hw,
            -i * hw,
            C64::new(2.0 * (g - g2), 0.0),
            C64::new(-2.0 * g2, 0.0),
            -i * hw,
            i * hw,
            i * hw,
            -i * hw,
            C64::new(-g - g3, -de),
            z,
            -i * hw,
            i * hw,
            z,
            C64::new(-g - g3, de),
        ],
    );
    if b_sign_flip_injected() {
        b[(0, 2)] = -b[(0, 2)];
    }
    Liouvillian {
        b,
        drive: [z, C64::new(2.0 * g2, 0.0), z, z],
    }
}

/// Closed-form steady state.
///
/// Three-level branch, with a = γ₂/γ₃ and
/// N = Ω² + 2a(2Δ² + 2γ² + 4γγ₃ + 2γ₃² + Ω²):
///
///   ρ₃₃ = aΩ²/N
///   ρ₁₁ = a(4Δ² + 4γ² + 8γγ₃ + 4γ₃² + Ω²)/N
///   ρ₂₂ = Ω²/N
///   ρ₃₁ = −2aΩ(Δ + i(γ+γ₃))/N
///
/// Two-level branch (γ₂ = γ₃ = 0, ρ₂₂ ≡ 0), with K = 2Δ² + 2γ² + Ω²:
///
///   ρ₃₃ = Ω²/(2K),  ρ₁₁ = (4Δ² + 4γ² + Ω²)/(2K),  ρ₃₁ = −Ω(Δ + iγ)/K
///
/// The two-level branch is also taken for γ₃ = 0 with γ₂ > 0 (the shelf
/// drains and stays empty, which is the a → ∞ limit of the general form).
pub fn steady_state_closed(p: &SystemParams) -> Result<BlochVector, LiouvilleError> {
    let (g, g3, om, de) = (p.gamma, p.gamma3, p.rabi, p.detuning);
    if p.two_level || p.gamma3 == 0.0 {
        let k = 2.0 * de * de + 2.0 * g * g + om * om;
        let rho31 = C64::new(de, g) * (-om / k);
        return Ok(BlochVector {
            rho33: C64::new(om * om / (2.0 * k), 0.0),
            rho11: C64::new((4.0 * de * de + 4.0 * g * g + om * om) / (2.0 * k), 0.0),
            rho31,
            rho13: rho31.conj(),
        });
    }
    let a = p.gamma2 / p.gamma3;
    let n = om * om
        + 2.0 * a * (2.0 * de * de + 2.0 * g * g + 4.0 * g * g3 + 2.0 * g3 * g3 + om * om);
    if n == 0.0 {
        // Only reachable for Ω = 0 with a = 0.
        return Err(LiouvilleError::DegenerateSystem);
    }
    let rho31 = C64::new(de, g + g3) * (-2.0 * a * om / n);
    Ok(BlochVector {
        rho33: C64::new(a * om * om / n, 0.0),
        rho11: C64::new(
            a * (4.0 * de * de + 4.0 * g * g + 8.0 * g * g3 + 4.0 * g3 * g3 + om * om) / n,
            0.0,
        ),
        rho31,
        rho13: rho31.conj(),
    })
}

/// Steady state from the linear system, as an independent cross-check of the
/// closed form.
///
/// Three-level: solves B ρ⃗ = −I⃗ directly (B is nonsingular for γ₂ > 0).
/// Two-level: B has an exact conservation mode (row 2 = −row 1), so row 2 is
/// replaced by the population constraint ρ₃₃ + ρ₁₁ = 1.
pub fn steady_state_numeric(p: &SystemParams) -> Result<BlochVector, LiouvilleError> {
    let lv = build_liouvillian(p);
    if p.two_level {
        let mut m = lv.b;
        let one = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        m[(1, 0)] = one;
        m[(1, 1)] = one;
        m[(1, 2)] = z;
        m[(1, 3)] = z;
        let rhs = [z, one, z, z];
        let x = numerics::solve(&m, &rhs)?;
        return Ok(BlochVector::from_array(&x));
    }
    if p.gamma2 == 0.0 && p.gamma3 > 0.0 {
        // Everything ends up shelved; the formal solution ρ⃗ = 0 is useless
        // downstream (no scattering), so flag it.
        return Err(LiouvilleError::PopulationTrapped);
    }
    let rhs: Vec<C64> = lv.drive.iter().map(|d| -d).collect();
    let x = numerics::solve(&lv.b, &rhs)?;
    Ok(BlochVector::from_array(&x))
}

/// Correlation seed R⃗ for the incoherent spectrum.
///
/// The spectrum needs the steady-state dipole fluctuation correlator
/// ⟨δσ₃(0) δσ⃗(τ)⟩ with σ₁ = |3⟩⟨3|, σ₂ = |1⟩⟨1|, σ₃ = |3⟩⟨1|, σ₄ = |1⟩⟨3|;
/// by the quantum regression theorem it evolves with the same B as the Bloch
/// vector, so only the τ = 0 seed is needed. The operator products collapse
/// (σ₃σ₁ = 0, σ₃σ₂ = σ₃, σ₃σ₃ = 0, σ₃σ₄ = σ₁), leaving
///
///   R⃗ = ( −ρ₃₃ρ₃₁,  (1−ρ₁₁)ρ₃₁,  −ρ₃₁²,  ρ₃₃ − |ρ₃₁|² )   at steady state.
///
/// The fourth component of the evolved vector is then the dipole correlation
/// whose transform is the spectrum; R₄ = ρ₃₃ − |ρ₃₁|² carries exactly the
/// incoherent weight, which is what makes the spectrum integrate to
/// 1 − I_coh (verified against a brute-force 3×3 operator oracle in the
/// tests, and by the sum-rule checks downstream).
pub fn correlation_seed(_p: &SystemParams, ss: &BlochVector) -> [C64; 4] {
    let (r33, r11, r31) = (ss.rho33, ss.rho11, ss.rho31);
    let one = C64::new(1.0, 0.0);
    [
        -r33 * r31,
        (one - r11) * r31,
        -r31 * r31,
        r33 - r31 * r31.conj(),
    ]
}
