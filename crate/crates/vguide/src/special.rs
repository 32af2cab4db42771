//! Special functions behind the extension machinery.
//!
//! The Fourier multiplier of the generalized Poisson kernel is the radial
//! profile
//!
//! ```text
//!   ψ_s(r) = 2^{1-s}/Γ(s) · r^s K_s(r),        ψ_s(0) = 1,
//!   ψ_s'(r) = −2^{1-s}/Γ(s) · r^s K_{1-s}(r),
//! ```
//!
//! so that the extension of `u` is `F⁻¹[ψ_s(|ξ|t) û]`.  `K_ν` is evaluated
//! from the integral representation `K_ν(r) = ∫₀^∞ e^{−r cosh u} cosh(νu) du`
//! with the trapezoid rule, which converges geometrically for this entire
//! integrand.  [`PsiProfile`] tabulates ψ and its derivative on a logarithmic
//! grid with cubic Hermite interpolation, because the extension and the
//! trial-function moments evaluate ψ millions of times.
//!
//! Γ comes from `statrs`.

use statrs::function::gamma::gamma as statrs_gamma;

/// Euler's Γ function.
pub fn gamma(x: f64) -> f64 {
    statrs_gamma(x)
}

/// `e^{r} K_ν(r)` for `r > 0`, accurate to roughly 1e−14 relative.
pub fn bessel_k_scaled(nu: f64, r: f64) -> f64 {
    assert!(r > 0.0, "bessel_k_scaled needs r > 0, got {r}");
    // Step small enough to resolve the peak of width ~1/sqrt(r) at u = 0.
    let du = 0.1 * (1.0f64).min(1.0 / r.sqrt());
    let mut sum = 0.5; // u = 0 term, halved for the trapezoid rule
    let mut k = 1usize;
    loop {
        let u = k as f64 * du;
        let term = (-r * (u.cosh() - 1.0)).exp() * (nu * u).cosh();
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    sum * du
}

/// Modified Bessel function of the second kind `K_ν(r)`, `r > 0`.
pub fn bessel_k(nu: f64, r: f64) -> f64 {
    if r > 740.0 {
        return 0.0;
    }
    (-r).exp() * bessel_k_scaled(nu, r)
}

/// Constant `C_s = 4^s Γ(s+1) / (2s Γ(1−s))` of the energy identity.
pub fn cs_constant(s: f64) -> f64 {
    4f64.powf(s) * gamma(s + 1.0) / (2.0 * s * gamma(1.0 - s))
}

/// `d_s = 2^{1−2s} Γ(1−s)/Γ(s) = 1/C_s`, the Neumann coefficient of ψ_s.
pub fn neumann_coefficient(s: f64) -> f64 {
    2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s)
}

/// Exact evaluation of ψ_s(r) (no table).
pub fn psi_exact(s: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 1.0;
    }
    if r > 740.0 {
        return 0.0;
    }
    2f64.powf(1.0 - s) / gamma(s) * r.powf(s) * bessel_k(s, r)
}

/// Exact evaluation of ψ_s'(r) (no table); `−∞` at `r = 0` when `s < 1/2`.
pub fn dpsi_exact(s: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return if s < 0.5 {
            f64::NEG_INFINITY
        } else if s == 0.5 {
            -1.0
        } else {
            0.0
        };
    }
    if r > 740.0 {
        return 0.0;
    }
    -(2f64.powf(1.0 - s) / gamma(s)) * r.powf(s) * bessel_k(1.0 - s, r)
}

const LN_R_MIN: f64 = -30.0;
const LN_R_MAX: f64 = 6.6; // r ≈ 735, where ψ is below 1e−300
const POINTS_PER_UNIT: f64 = 64.0;

/// Tabulated ψ_s with cubic Hermite interpolation in `ln r`.
///
/// Two smooth functions of `ln r` are stored: ψ itself and
/// `q(r) = −ψ'(r) r^{1−2s}` (which stays bounded at `r → 0` even when ψ' blows
/// up).  Below the table the small-argument expansions are used, above it
/// both vanish.
#[derive(Debug, Clone)]
pub struct PsiProfile {
    s: f64,
    psi: Vec<f64>,
    dpsi_dln: Vec<f64>,
    q: Vec<f64>,
    dq_dln: Vec<f64>,
    /// ψ(r) ≈ 1 − kappa r^{2s} for tiny r.
    kappa: f64,
    /// q(0) = d_s.
    q0: f64,
}

impl PsiProfile {
    pub fn new(s: f64) -> Self {
        assert!(s > 0.0 && s < 1.0, "order must lie in (0,1), got {s}");
        let n = ((LN_R_MAX - LN_R_MIN) * POINTS_PER_UNIT).ceil() as usize + 1;
        let c = 2f64.powf(1.0 - s) / gamma(s);
        let mut psi = Vec::with_capacity(n);
        let mut dpsi_dln = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        let mut dq_dln = Vec::with_capacity(n);
        for i in 0..n {
            let lr = LN_R_MIN + i as f64 / POINTS_PER_UNIT;
            let r = lr.exp();
            // Scaled Bessel values keep the products finite over the whole range.
            let e = (-r).exp();
            let ks = e * bessel_k_scaled(s, r);
            let k1s = e * bessel_k_scaled(1.0 - s, r);
            psi.push(c * r.powf(s) * ks);
            dpsi_dln.push(-c * r.powf(s + 1.0) * k1s);
            q.push(c * r.powf(1.0 - s) * k1s);
            dq_dln.push(-c * r.powf(2.0 - s) * ks);
        }
        let kappa = gamma(1.0 - s) / gamma(1.0 + s) * 0.5f64.powf(2.0 * s);
        PsiProfile {
            s,
            psi,
            dpsi_dln,
            q,
            dq_dln,
            kappa,
            q0: neumann_coefficient(s),
        }
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    fn hermite(vals: &[f64], ders: &[f64], lr: f64) -> f64 {
        let x = (lr - LN_R_MIN) * POINTS_PER_UNIT;
        let i = (x.floor() as usize).min(vals.len() - 2);
        let t = x - i as f64;
        let h = 1.0 / POINTS_PER_UNIT;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * vals[i] + h10 * h * ders[i] + h01 * vals[i + 1] + h11 * h * ders[i + 1]
    }

    /// ψ_s(r) for `r ≥ 0`.
    pub fn psi(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 1.0;
        }
        let lr = r.ln();
        if lr < LN_R_MIN {
            1.0 - self.kappa * r.powf(2.0 * self.s)
        } else if lr >= LN_R_MAX {
            0.0
        } else {
            Self::hermite(&self.psi, &self.dpsi_dln, lr).max(0.0)
        }
    }

    /// `q(r) = −ψ_s'(r)·r^{1−2s}`, bounded and positive on `[0, ∞)`.
    pub fn q(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.q0;
        }
        let lr = r.ln();
        if lr < LN_R_MIN {
            self.q0
        } else if lr >= LN_R_MAX {
            0.0
        } else {
            Self::hermite(&self.q, &self.dq_dln, lr)
        }
    }

    /// ψ_s'(r) for `r > 0`.
    pub fn dpsi(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return dpsi_exact(self.s, 0.0);
        }
        -self.q(r) * r.powf(2.0 * self.s - 1.0)
    }
}
