//! Lévy characteristics and generalized white noise on a lattice.
//!
//! The characteristic is `ψ(t) = i b t − σ²t²/2 + λ ∫(e^{ist} − 1) dr(s)`
//! with a jump law `r` drawn from a small catalogue whose Fourier transform
//! and moments are known in closed form.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeField, LatticeSpec};

/// Highest cumulant / jump moment order the crate supports.
pub const MAX_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
}

/// Probability law of the jump sizes, supported on ℝ∖{0}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpLaw {
    /// Finitely many atoms at nonzero positions.
    Atoms { atoms: Vec<Atom> },
    /// Uniform on `[lo, hi]`, an interval that does not contain 0.
    Uniform { lo: f64, hi: f64 },
    /// Symmetric density `(β/2) e^{−β|s|}`; the origin carries no mass.
    TwoSidedExponential { rate: f64 },
}

impl JumpLaw {
    pub fn atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let law = JumpLaw::Atoms {
            atoms: atoms
                .into_iter()
                .map(|(position, weight)| Atom { position, weight })
                .collect(),
        };
        law.validate()?;
        Ok(law)
    }

    pub fn atom(position: f64) -> Result<Self> {
        Self::atoms(vec![(position, 1.0)])
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let law = JumpLaw::Uniform { lo, hi };
        law.validate()?;
        Ok(law)
    }

    pub fn two_sided_exponential(rate: f64) -> Result<Self> {
        let law = JumpLaw::TwoSidedExponential { rate };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            JumpLaw::Atoms { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::Config("jump law needs at least one atom".into()));
                }
                for a in atoms {
                    if !a.position.is_finite() || a.position == 0.0 {
                        return Err(Error::Config(format!(
                            "atom position must be finite and nonzero, got {}",
                            a.position
                        )));
                    }
                    if !(a.weight.is_finite() && a.weight > 0.0) {
                        return Err(Error::Config(format!("atom weight must be positive, got {}", a.weight)));
                    }
                }
                let total: f64 = atoms.iter().map(|a| a.weight).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(format!("atom weights sum to {total}, expected 1")));
                }
            }
            JumpLaw::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::Config(format!("invalid interval [{lo}, {hi}]")));
                }
                if *lo <= 0.0 && *hi >= 0.0 {
                    return Err(Error::Config(format!("interval [{lo}, {hi}] contains 0")));
                }
            }
            JumpLaw::TwoSidedExponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::Config(format!("rate must be positive, got {rate}")));
                }
            }
        }
        Ok(())
    }

    /// `r_n = ∫ s^n dr(s)`.
    pub fn moment(&self, n: usize) -> Result<f64> {
        if n > MAX_ORDER {
            return Err(Error::Range(format!(
                "moment order {n} exceeds the supported maximum {MAX_ORDER}"
            )));
        }
        let k = n as i32;
        Ok(match self {
            JumpLaw::Atoms { atoms } => atoms.iter().map(|a| a.weight * a.position.powi(k)).sum(),
            JumpLaw::Uniform { lo, hi } => (hi.powi(k + 1) - lo.powi(k + 1)) / ((k + 1) as f64 * (hi - lo)),
            JumpLaw::TwoSidedExponential { rate } => {
                if n % 2 == 1 {
                    0.0
                } else {
                    (1..=n).map(|i| i as f64).product::<f64>() / rate.powi(k)
                }
            }
        })
    }

    /// `∫ (e^{ist} − 1) dr(s)`, arranged to avoid cancellation at small `t`.
    pub fn fourier_minus_one(&self, t: f64) -> Complex64 {
        match self {
            JumpLaw::Atoms { atoms } => atoms.iter().map(|a| a.weight * expm1_i(a.position * t)).sum(),
            JumpLaw::Uniform { lo, hi } => {
                // e^{ict} sinc(ht) − 1 = (e^{ict} − 1) sinc(ht) + (sinc(ht) − 1)
                let c = 0.5 * (lo + hi);
                let h = 0.5 * (hi - lo);
                let x = h * t;
                expm1_i(c * t) * sinc(x) + sinc_minus_one(x)
            }
            JumpLaw::TwoSidedExponential { rate } => Complex64::new(-t * t / (rate * rate + t * t), 0.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpLaw::Atoms { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for a in atoms {
                    acc += a.weight;
                    if u < acc {
                        return a.position;
                    }
                }
                atoms.last().expect("validated non-empty").position
            }
            JumpLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            JumpLaw::TwoSidedExponential { rate } => {
                let magnitude = Exp::new(*rate).expect("validated rate").sample(rng);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }
}

/// `e^{ix} − 1` without cancellation.
fn expm1_i(x: f64) -> Complex64 {
    let s = (0.5 * x).sin();
    Complex64::new(-2.0 * s * s, x.sin())
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn sinc_minus_one(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        -x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0
    } else {
        x.sin() / x - 1.0
    }
}

/// Drift `b`, diffusion `σ²`, jump intensity `λ` and jump law `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyCharacteristic {
    pub drift: f64,
    pub sigma2: f64,
    pub lambda: f64,
    pub jump_law: JumpLaw,
}

impl LevyCharacteristic {
    pub fn new(drift: f64, sigma2: f64, lambda: f64, jump_law: JumpLaw) -> Result<Self> {
        let chi = Self {
            drift,
            sigma2,
            lambda,
            jump_law,
        };
        chi.validate()?;
        Ok(chi)
    }

    /// Pure drift + Gaussian noise. The jump law is a placeholder that never fires.
    pub fn gaussian(drift: f64, sigma2: f64) -> Result<Self> {
        Self::new(drift, sigma2, 0.0, JumpLaw::atom(1.0)?)
    }

    /// Pure compound-Poisson noise without drift or diffusion.
    pub fn poisson(lambda: f64, jump_law: JumpLaw) -> Result<Self> {
        Self::new(0.0, 0.0, lambda, jump_law)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.drift.is_finite() {
            return Err(Error::Config(format!("drift must be finite, got {}", self.drift)));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(Error::Config(format!("sigma2 must be >= 0, got {}", self.sigma2)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        self.jump_law.validate()
    }

    pub fn psi(&self, t: f64) -> Complex64 {
        let gaussian = Complex64::new(-0.5 * self.sigma2 * t * t, self.drift * t);
        if self.lambda == 0.0 {
            gaussian
        } else {
            gaussian + self.lambda * self.jump_law.fourier_minus_one(t)
        }
    }

    /// Noise cumulant κₙ: `b + λr₁`, `σ² + λr₂`, then `λrₙ`.
    pub fn cumulant(&self, n: usize) -> Result<f64> {
        if n == 0 || n > MAX_ORDER {
            return Err(Error::Range(format!("cumulant order {n} outside 1..={MAX_ORDER}")));
        }
        let jumps = if self.lambda == 0.0 {
            0.0
        } else {
            self.lambda * self.jump_law.moment(n)?
        };
        Ok(match n {
            1 => self.drift + jumps,
            2 => self.sigma2 + jumps,
            _ => jumps,
        })
    }

    /// `exp(a^d Σ_x ψ(f_x))`.
    pub fn characteristic_functional(&self, f: &LatticeField) -> Complex64 {
        let cell = f.spec().cell_volume();
        let sum: Complex64 = f.values().iter().map(|&v| self.psi(v)).sum();
        (cell * sum).exp()
    }

    /// Draws one noise configuration. Each site independently gets
    /// `b + σ a^{−d/2} Z + a^{−d} Σ_{j≤N} s_j` with `N ~ Poisson(λ a^d)`.
    pub fn sample_noise<R: Rng + ?Sized>(&self, spec: &LatticeSpec, rng: &mut R) -> LatticeField {
        let cell = spec.cell_volume();
        let sigma_site = (self.sigma2 / cell).sqrt();
        let poisson = if self.lambda > 0.0 {
            Some(Poisson::new(self.lambda * cell).expect("positive Poisson mean"))
        } else {
            None
        };
        let values = (0..spec.num_sites())
            .map(|_| {
                let mut v = self.drift;
                if sigma_site > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    v += sigma_site * z;
                }
                if let Some(p) = &poisson {
                    let count = p.sample(rng) as u64;
                    let jumps: f64 = (0..count).map(|_| self.jump_law.sample(rng)).sum();
                    v += jumps / cell;
                }
                v
            })
            .collect();
        LatticeField::new(*spec, values).expect("noise values are finite")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{domain, StreamKey};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn catalogue() -> Vec<LevyCharacteristic> {
        vec![
            LevyCharacteristic::gaussian(0.3, 1.2).unwrap(),
            LevyCharacteristic::new(-0.2, 0.5, 2.0, JumpLaw::atoms(vec![(1.0, 0.25), (-2.0, 0.75)]).unwrap()).unwrap(),
            LevyCharacteristic::new(0.0, 0.0, 1.5, JumpLaw::uniform(0.5, 2.0).unwrap()).unwrap(),
            LevyCharacteristic::new(1.0, 0.1, 3.0, JumpLaw::two_sided_exponential(1.7).unwrap()).unwrap(),
        ]
    }

    #[test]
    fn psi_examples() {
        for chi in catalogue() {
            assert_eq!(chi.psi(0.0), Complex64::new(0.0, 0.0));
        }
        let g = LevyCharacteristic::gaussian(0.0, 1.0).unwrap();
        assert_eq!(g.psi(2.0), Complex64::new(-2.0, 0.0));
        let p = LevyCharacteristic::poisson(1.0, JumpLaw::atom(1.0).unwrap()).unwrap();
        let v = p.psi(PI);
        assert!((v - Complex64::new(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cumulant_examples() {
        let drift = LevyCharacteristic::gaussian(0.5, 0.0).unwrap();
        assert_eq!(drift.cumulant(1).unwrap(), 0.5);
        let mixed = LevyCharacteristic::new(0.0, 1.0, 2.0, JumpLaw::atom(1.0).unwrap()).unwrap();
        assert_eq!(mixed.cumulant(2).unwrap(), 3.0);
        let pure = LevyCharacteristic::poisson(2.0, JumpLaw::atom(1.0).unwrap()).unwrap();
        assert_eq!(pure.cumulant(4).unwrap(), 2.0);
        assert!(matches!(pure.cumulant(9), Err(Error::Range(_))));
        assert!(matches!(pure.cumulant(0), Err(Error::Range(_))));
    }

    #[test]
    fn cumulants_match_taylor_coefficients_of_psi() {
        // κₙ = ψ⁽ⁿ⁾(0) / iⁿ by central differences, n = 1, 2.
        for chi in catalogue() {
            let h = 1e-4;
            let d1 = (chi.psi(h) - chi.psi(-h)) / (2.0 * h);
            let d2 = (chi.psi(h) - 2.0 * chi.psi(0.0) + chi.psi(-h)) / (h * h);
            assert!((d1.im - chi.cumulant(1).unwrap()).abs() < 1e-6);
            assert!((-d2.re - chi.cumulant(2).unwrap()).abs() < 1e-5);
        }
    }

    #[test]
    fn higher_cumulants_match_series_of_psi() {
        // Σ_n κₙ (it)ⁿ/n! truncated at the maximum order reproduces ψ at small t.
        for chi in catalogue() {
            let t = 0.05;
            let mut series = Complex64::new(0.0, 0.0);
            let mut it_pow = Complex64::new(1.0, 0.0);
            let mut fact = 1.0;
            for n in 1..=MAX_ORDER {
                it_pow *= Complex64::new(0.0, t);
                fact *= n as f64;
                series += it_pow * chi.cumulant(n).unwrap() / fact;
            }
            assert!((series - chi.psi(t)).norm() < 1e-12, "{chi:?}");
        }
    }

    #[test]
    fn uniform_moments_and_fourier_are_consistent() {
        let law = JumpLaw::uniform(-3.0, -1.0).unwrap();
        assert!((law.moment(1).unwrap() + 2.0).abs() < 1e-14);
        assert!((law.moment(2).unwrap() - 13.0 / 3.0).abs() < 1e-14);
        let t = 0.7;
        let direct =
            (Complex64::new(0.0, -t).exp() - Complex64::new(0.0, -3.0 * t).exp()) / Complex64::new(0.0, 2.0 * t) - 1.0;
        assert!((law.fourier_minus_one(t) - direct).norm() < 1e-14);
    }

    #[test]
    fn rejects_invalid_laws() {
        assert!(JumpLaw::atoms(vec![(0.0, 1.0)]).is_err());
        assert!(JumpLaw::atoms(vec![(1.0, 0.5)]).is_err());
        assert!(JumpLaw::uniform(-1.0, 1.0).is_err());
        assert!(JumpLaw::two_sided_exponential(0.0).is_err());
        assert!(LevyCharacteristic::new(0.0, -1.0, 0.0, JumpLaw::atom(1.0).unwrap()).is_err());
        assert!(LevyCharacteristic::new(0.0, 1.0, -1.0, JumpLaw::atom(1.0).unwrap()).is_err());
    }

    #[test]
    fn characteristic_functional_examples() {
        let spec = LatticeSpec::new(2, 4, 0.5).unwrap();
        let chi = catalogue()[1].clone();
        assert_eq!(
            chi.characteristic_functional(&LatticeField::zeros(spec)),
            Complex64::new(1.0, 0.0)
        );

        let f = LatticeField::from_fn(spec, |x| 0.3 * x[0] as f64 - 0.1 * x[1] as f64).unwrap();
        let g = LevyCharacteristic::gaussian(0.0, 0.8).unwrap();
        let expected = (-0.4 * f.power_sum(2)).exp();
        assert!((g.characteristic_functional(&f) - expected).norm() < 1e-14);

        // Independent per-site product of single-site characteristic functions.
        for chi in catalogue() {
            let mut prod = Complex64::new(1.0, 0.0);
            for &v in f.values() {
                let cell = spec.cell_volume();
                let mut site = Complex64::new(-0.5 * chi.sigma2 * v * v, chi.drift * v);
                if chi.lambda > 0.0 {
                    site += chi.lambda * chi.jump_law.fourier_minus_one(v);
                }
                prod *= (cell * site).exp();
            }
            assert!((chi.characteristic_functional(&f) - prod).norm() < 1e-12);
        }
    }

    #[test]
    fn deterministic_noise_is_constant() {
        let spec = LatticeSpec::new(3, 3, 0.5).unwrap();
        let chi = LevyCharacteristic::gaussian(1.0, 0.0).unwrap();
        let eta = chi.sample_noise(&spec, &mut StreamKey::new(1, domain::ENSEMBLE).stream(0));
        assert!(eta.values().iter().all(|&v| v == 1.0));
    }

    proptest! {
        #[test]
        fn psi_is_hermitian_and_dissipative(t in -50.0f64..50.0, which in 0usize..4) {
            let chi = &catalogue()[which];
            let p = chi.psi(t);
            let m = chi.psi(-t);
            prop_assert!(p.re <= 1e-15);
            prop_assert!((p - m.conj()).norm() <= 1e-12 * (1.0 + p.norm()));
        }

        #[test]
        fn characteristic_functional_is_bounded(seed in 0u64..1000, which in 0usize..4) {
            let spec = LatticeSpec::new(2, 5, 0.7).unwrap();
            let mut rng = StreamKey::new(seed, 99).stream(0);
            let f = LatticeField::from_fn(spec, |_| 4.0 * (rand::Rng::random::<f64>(&mut rng) - 0.5)).unwrap();
            prop_assert!(catalogue()[which].characteristic_functional(&f).norm() <= 1.0 + 1e-15);
        }
    }
}
