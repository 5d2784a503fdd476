//! Green function of `(−Δ + m0²)^α` in momentum and position space, and the
//! Källén–Lehmann density that writes it as a superposition of ordinary
//! massive propagators.
//!
//! Fourier convention: `G(x) = (2π)^{−d} ∫ Ĝ(k) e^{ik·x} dk`. On a periodic
//! lattice with `V = (La)^d` this becomes `G(x) = V^{−1} Σ_k Ĝ(k) e^{ik·x}`,
//! so that `a^d Σ_x G(x) = Ĝ(0)` and `a^d Σ_x G(x)² = V^{−1} Σ_k Ĝ(k)²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{numerical, Error, Result};
use crate::fft::LatticeFft;
use crate::lattice::{LatticeField, LatticeSpec};
use crate::quad::{integrate, QuadOptions, QuadResult};

/// How `|k|²` is represented on the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumSymbol {
    /// Nearest-neighbour Laplacian, `(2/a²) Σᵢ (1 − cos a kᵢ)`.
    #[default]
    Discrete,
    /// `|k|²` evaluated on the FFT grid. Discontinuous across the zone
    /// boundary, which shows up as non-vanishing real-space artifacts.
    Continuum,
}

impl MomentumSymbol {
    /// Symbol value for one axis momentum component.
    #[inline]
    pub fn axis_term(&self, k: f64, spacing: f64) -> f64 {
        match self {
            MomentumSymbol::Continuum => k * k,
            MomentumSymbol::Discrete => {
                let s = (0.5 * spacing * k).sin();
                4.0 * s * s / (spacing * spacing)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub m0: f64,
    #[serde(default)]
    pub symbol: MomentumSymbol,
}

impl ModelParams {
    pub fn new(alpha: f64, m0: f64, symbol: MomentumSymbol) -> Result<Self> {
        let p = Self { alpha, m0, symbol };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.m0.is_finite() && self.m0 >= 0.0) {
            return Err(Error::Config(format!("m0 must be >= 0, got {}", self.m0)));
        }
        Ok(())
    }

    /// Lattice operations evaluate the zero mode and need a mass gap.
    pub fn require_mass_gap(&self) -> Result<()> {
        if self.m0 > 0.0 {
            Ok(())
        } else {
            Err(Error::Singularity(
                "m0 = 0: the zero mode of the Green function diverges".into(),
            ))
        }
    }

    /// `Ĝ` as a function of `|k|²`.
    pub fn green_from_k2(&self, k2: f64) -> Result<f64> {
        let base = k2 + self.m0 * self.m0;
        if base <= 0.0 {
            return Err(Error::Singularity(
                "Green function evaluated at k = 0 with m0 = 0".into(),
            ));
        }
        Ok(base.powf(-self.alpha))
    }
}

/// `Ĝ(k) = (|k|² + m0²)^{−α}`.
pub fn green_momentum(p: &ModelParams, k: &[f64]) -> Result<f64> {
    p.green_from_k2(k.iter().map(|v| v * v).sum())
}

/// Real-space lattice kernel `V^{−1} Σ_k (S(k) + m²)^{−exponent} e^{ik·x}`.
///
/// `exponent` may be any positive number here; the model itself uses `α`
/// (Green function) and `2α` (two-point function), tests also use `1`.
pub fn lattice_kernel(spec: &LatticeSpec, symbol: MomentumSymbol, m0: f64, exponent: f64) -> Result<LatticeField> {
    if !(m0 > 0.0) {
        return Err(Error::Singularity(
            "m0 = 0: the zero mode of the lattice kernel diverges".into(),
        ));
    }
    let axis: Vec<f64> = (0..spec.sites_per_axis())
        .map(|j| symbol.axis_term(spec.momentum(j), spec.spacing()))
        .collect();
    let m2 = m0 * m0;
    let mut data: Vec<Complex64> = (0..spec.num_sites())
        .map(|i| {
            let s: f64 = spec.coords(i).iter().map(|&j| axis[j as usize]).sum();
            Complex64::new((s + m2).powf(-exponent), 0.0)
        })
        .collect();
    LatticeFft::new(spec).inverse(&mut data);
    let scale = 1.0 / spec.physical_volume();
    real_part_checked(spec, data, scale)
}

/// Projects onto the real part after scaling, refusing large imaginary residue.
pub(crate) fn real_part_checked(spec: &LatticeSpec, data: Vec<Complex64>, scale: f64) -> Result<LatticeField> {
    let norm = data.iter().map(|c| c.re * c.re).sum::<f64>().sqrt();
    let residue = data.iter().map(|c| c.im * c.im).sum::<f64>().sqrt();
    if residue > 1e-10 * norm.max(f64::MIN_POSITIVE) {
        return Err(numerical(
            "inverse transform is not real",
            format!("imaginary residue {residue:e} vs norm {norm:e}"),
        ));
    }
    LatticeField::new(*spec, data.into_iter().map(|c| c.re * scale).collect())
}

/// Lattice Green function `G(x)` by inverse FFT of `Ĝ` on the dual grid.
pub fn green_real_fft(p: &ModelParams, spec: &LatticeSpec) -> Result<LatticeField> {
    p.validate()?;
    p.require_mass_gap()?;
    lattice_kernel(spec, p.symbol, p.m0, p.alpha)
}

/// `a^d Σ_y G(x − y) G(y)`, the lattice convolution `G∗G`, via its symbol `Ĝ²`.
pub fn two_point_kernel(p: &ModelParams, spec: &LatticeSpec) -> Result<LatticeField> {
    p.validate()?;
    p.require_mass_gap()?;
    lattice_kernel(spec, p.symbol, p.m0, 2.0 * p.alpha)
}

/// Continuum estimate of the torus Green function at `site` of the coarse
/// lattice, from the lattice spacings `a` and `a/2` combined to cancel the
/// `O(a²)` discretization error. Meaningful for the discrete symbol only.
pub fn green_continuum_richardson(p: &ModelParams, coarse: &LatticeSpec, site: &[i64]) -> Result<f64> {
    if p.symbol != MomentumSymbol::Discrete {
        return Err(Error::Config(
            "Richardson extrapolation requires the discrete momentum symbol".into(),
        ));
    }
    let fine = LatticeSpec::new(coarse.dim(), 2 * coarse.sites_per_axis(), 0.5 * coarse.spacing())?;
    let g_coarse = green_real_fft(p, coarse)?.at(site);
    let fine_site: Vec<i64> = site.iter().map(|c| 2 * c).collect();
    let g_fine = green_real_fft(p, &fine)?.at(&fine_site);
    Ok((4.0 * g_fine - g_coarse) / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralNormalization {
    /// `sin(πα)/π`, the constant for which the superposition reproduces `Ĝ`.
    #[default]
    Analytic,
    /// `2 sin(πα)`, as printed alongside the Wightman representation.
    Paper,
}

/// `ρ(m²) = C Θ(m² − m0²) (m² − m0²)^{−α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub alpha: f64,
    pub m0: f64,
    pub normalization: SpectralNormalization,
}

impl SpectralDensity {
    pub fn new(alpha: f64, m0: f64, normalization: SpectralNormalization) -> Result<Self> {
        ModelParams::new(alpha, m0, MomentumSymbol::Discrete)?;
        Ok(Self {
            alpha,
            m0,
            normalization,
        })
    }

    pub fn for_model(p: &ModelParams) -> Self {
        Self {
            alpha: p.alpha,
            m0: p.m0,
            normalization: SpectralNormalization::Analytic,
        }
    }

    pub fn prefactor(&self) -> f64 {
        let s = (PI * self.alpha).sin();
        match self.normalization {
            SpectralNormalization::Analytic => s / PI,
            SpectralNormalization::Paper => 2.0 * s,
        }
    }

    pub fn rho(&self, m2: f64) -> Result<f64> {
        let threshold = self.m0 * self.m0;
        if m2 < threshold {
            Ok(0.0)
        } else if m2 == threshold {
            Err(Error::Singularity(format!(
                "spectral density is singular at the threshold m² = {threshold}"
            )))
        } else {
            Ok(self.prefactor() * (m2 - threshold).powf(-self.alpha))
        }
    }

    /// `∫_{m0²}^∞ ρ(s) K(s) ds`.
    ///
    /// The range is split at `s − m0² = 1`. Below, `u = (s − m0²)^{1−α}`
    /// removes the endpoint singularity; above, `w = (s − m0²)^{−α}` maps the
    /// infinite tail onto `(0, 1]` with a bounded integrand whenever `K`
    /// decays at least like `1/s`.
    pub fn integrate(&self, kernel: impl Fn(f64) -> f64, opts: &QuadOptions) -> Result<QuadResult> {
        let a = self.alpha;
        let m2 = self.m0 * self.m0;
        let head = integrate(
            |u| {
                let t = u.powf(1.0 / (1.0 - a));
                kernel(m2 + t) / (1.0 - a)
            },
            0.0,
            1.0,
            opts,
        )?;
        let tail = integrate(
            |w| {
                if w <= 0.0 {
                    return 0.0;
                }
                let t = w.powf(-1.0 / a);
                if !t.is_finite() {
                    return 0.0;
                }
                let v = t * kernel(m2 + t) / a;
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
            opts,
        )?;
        let c = self.prefactor();
        Ok(QuadResult {
            value: c * (head.value + tail.value),
            abs_error: c * (head.abs_error + tail.abs_error),
            intervals: head.intervals + tail.intervals,
            evaluations: head.evaluations + tail.evaluations,
        })
    }
}

/// `∫ ρ(s) / (q² + s) ds`; equals `(q² + m0²)^{−α}` for the analytic normalization.
pub fn spectral_propagator(sd: &SpectralDensity, q2: f64, opts: &QuadOptions) -> Result<f64> {
    Ok(sd.integrate(|s| 1.0 / (q2 + s), opts)?.value)
}

/// Modified Bessel function `K_ν(z)` for `ν ≥ 0`, `z > 0`.
///
/// Half-integer orders use the closed form and upward recurrence; other
/// orders the integral `∫_0^∞ e^{−z cosh t} cosh(νt) dt`.
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) || nu < 0.0 {
        return Err(Error::Range(format!("bessel_k({nu}, {z}) outside nu >= 0, z > 0")));
    }
    let twice = 2.0 * nu;
    if (twice - twice.round()).abs() < 1e-12 && twice.round() as i64 % 2 == 1 {
        let mut k_prev = (PI / (2.0 * z)).sqrt() * (-z).exp(); // K_{-1/2}
        let mut k_cur = k_prev; // K_{1/2}
        let mut order = 0.5;
        while order + 0.5 <= nu + 1e-12 {
            let next = k_prev + 2.0 * order / z * k_cur;
            k_prev = k_cur;
            k_cur = next;
            order += 1.0;
        }
        return Ok(k_cur);
    }
    let upper = (1.0 + 745.0 / z).acosh().max(1.0);
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 500,
    };
    let r = integrate(|t| (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh(), 0.0, upper, &opts)?;
    Ok(r.value * (-z).exp())
}

/// Green function of `−Δ + M²` in `d` dimensions at distance `r > 0`.
pub fn yukawa(d: usize, mass2: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !(mass2 > 0.0) {
        return Err(Error::Singularity(format!(
            "Yukawa kernel needs r > 0 and M² > 0 (r = {r}, M² = {mass2})"
        )));
    }
    let m = mass2.sqrt();
    match d {
        1 => Ok((-m * r).exp() / (2.0 * m)),
        3 => Ok((-m * r).exp() / (4.0 * PI * r)),
        _ => {
            let nu = 0.5 * d as f64 - 1.0;
            Ok((2.0 * PI).powf(-0.5 * d as f64) * (m / r).powf(nu) * bessel_k(nu, m * r)?)
        }
    }
}

/// Continuum `G(x)` as `∫ ρ(s) G_{M²=s}(x) ds` with the analytic density.
pub fn green_real_kl(p: &ModelParams, x: &[f64], opts: &QuadOptions) -> Result<f64> {
    p.validate()?;
    p.require_mass_gap()?;
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(r > 0.0) {
        return Err(Error::Singularity("green_real_kl at x = 0".into()));
    }
    let d = x.len();
    let sd = SpectralDensity::for_model(p);
    let result = sd.integrate(|s| yukawa(d, s, r).unwrap_or(0.0), opts)?;
    Ok(result.value)
}

/// Torus version of [`green_real_kl`]: sums the images `x + period·m` with
/// every component of `m` in `-images..=images`.
pub fn green_real_kl_periodic(p: &ModelParams, x: &[f64], period: f64, images: i64, opts: &QuadOptions) -> Result<f64> {
    let d = x.len();
    let side = (2 * images + 1) as usize;
    let mut total = 0.0;
    let mut shifted = vec![0.0; d];
    for idx in 0..side.pow(d as u32) {
        let mut rem = idx;
        for (slot, &xi) in shifted.iter_mut().zip(x) {
            let m = (rem % side) as i64 - images;
            rem /= side;
            *slot = xi + period * m as f64;
        }
        total += green_real_kl(p, &shifted, opts)?;
    }
    Ok(total)
}
