//! Experiment configuration (TOML).
//!
//! ```toml
//! version = 1
//!
//! [model]
//! alpha = 0.75
//! m0 = 1.0
//! symbol = "discrete"          # or "continuum"
//!
//! [noise]
//! b = 0.0
//! sigma2 = 1.0
//! lambda = 0.0
//! jump_law = { kind = "atoms", atoms = [{ position = 1.0, weight = 1.0 }] }
//!
//! [lattice]
//! d = 3
//! L = 8
//! a = 0.5
//!
//! [run]
//! seed = 7
//! n_samples = 1000
//! ```
//!
//! Task sections (`[noise_check]`, `[cumulants]`, `[schwinger]`, `[rp]`,
//! `[rp_scan]`, `[baumann]`, `[spectral]`, `[verify]`) are optional and
//! only required by the command that reads them.

use std::path::{Path, PathBuf};

use lfl_core::greens::{ModelParams, MomentumSymbol, SpectralNormalization};
use lfl_core::os::{BasisSpec, TranslationAverage};
use lfl_core::{FieldModel, JumpLaw, LatticeSpec, LevyCharacteristic};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

fn version() -> u32 {
    CONFIG_VERSION
}

fn yes() -> bool {
    true
}

fn one_sample() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "version")]
    pub version: u32,
    pub model: ModelSection,
    pub noise: NoiseSection,
    pub lattice: LatticeSection,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_check: Option<NoiseCheckSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulants: Option<CumulantsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schwinger: Option<SchwingerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rp: Option<RpSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rp_scan: Option<RpScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baumann: Option<BaumannSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub alpha: f64,
    pub m0: f64,
    #[serde(default)]
    pub symbol: MomentumSymbol,
}

fn default_law() -> JumpLaw {
    JumpLaw::atom(1.0).expect("atom at 1 is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub sigma2: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_law")]
    pub jump_law: JumpLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    #[serde(default = "one_sample")]
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

/// Lattice test function `f` for the noise check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestField {
    Constant {
        value: f64,
    },
    /// `amplitude · exp(−|x|²/(2 width²))` with `|x|` the torus distance to the origin.
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    /// `amplitude · cos(k·x)` for the lattice mode `k = 2π mode/(La)`.
    Cosine {
        amplitude: f64,
        mode: Vec<i64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseCheckSection {
    pub n_draws: usize,
    pub test_functions: Vec<TestField>,
    #[serde(default = "three")]
    pub sigmas: f64,
}

fn three() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CumulantsSection {
    pub point_sets: Vec<Vec<Vec<i64>>>,
    #[serde(default = "yes")]
    pub translation_average: bool,
    /// Read samples from this file instead of drawing them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchwingerSection {
    pub point_sets: Vec<Vec<Vec<i64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Negative,
    NoWitness,
}

fn time_translations() -> TranslationAverage {
    TranslationAverage::Time
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RpSection {
    pub basis: BasisSpec,
    #[serde(default = "yes")]
    pub centered: bool,
    /// Fresh samples for witness verification; 0 skips it.
    #[serde(default)]
    pub verify_samples: usize,
    #[serde(default = "time_translations")]
    pub translation: TranslationAverage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RpScanSection {
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub basis: BasisSpec,
    #[serde(default = "yes")]
    pub centered: bool,
    #[serde(default)]
    pub verify_samples: usize,
    #[serde(default = "time_translations")]
    pub translation: TranslationAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: [f64; 3],
    pub width: f64,
    pub radius: f64,
}

fn unit_mass() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaumannSection {
    pub epsilons: Vec<f64>,
    pub samples: usize,
    #[serde(default = "unit_mass")]
    pub mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Bump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Bump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<Bump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h2: Option<Bump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_h1: Option<Bump>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_h2: Option<Bump>,
}

fn kl_tolerance() -> f64 {
    1e-6
}

fn green_tolerance() -> f64 {
    1e-3
}

fn two_images() -> i64 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    /// Momenta for the propagator identity check.
    pub q2: Vec<f64>,
    /// Exponents checked; empty means the model's `alpha`.
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub normalization: SpectralNormalization,
    /// Lattice sites where the lattice and spectral Green functions are compared.
    #[serde(default)]
    pub separations: Vec<Vec<i64>>,
    #[serde(default = "kl_tolerance")]
    pub kl_tolerance: f64,
    #[serde(default = "green_tolerance")]
    pub green_tolerance: f64,
    #[serde(default = "two_images")]
    pub images: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub n_samples: usize,
    #[serde(default = "time_translations")]
    pub translation: TranslationAverage,
}

/// Largest seed representable in TOML integers.
pub const MAX_SEED: u64 = i64::MAX as u64;

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Copy for embedding in reports; the worker count does not affect results.
    pub fn for_report(&self) -> Self {
        let mut c = self.clone();
        c.run.workers = None;
        c
    }

    /// Every violated precondition, one line per field.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        check(
            self.version == CONFIG_VERSION,
            format!("version: expected {CONFIG_VERSION}, got {}", self.version),
        );
        let m = &self.model;
        check(
            m.alpha > 0.0 && m.alpha < 1.0,
            format!("model.alpha: must lie in (0, 1), got {}", m.alpha),
        );
        check(
            m.m0 > 0.0 && m.m0.is_finite(),
            format!(
                "model.m0: must be positive (the zero mode diverges at m0 = 0), got {}",
                m.m0
            ),
        );
        let n = &self.noise;
        check(n.b.is_finite(), format!("noise.b: must be finite, got {}", n.b));
        check(
            n.sigma2 >= 0.0 && n.sigma2.is_finite(),
            format!("noise.sigma2: must be >= 0, got {}", n.sigma2),
        );
        check(
            n.lambda >= 0.0 && n.lambda.is_finite(),
            format!("noise.lambda: must be >= 0, got {}", n.lambda),
        );
        if let Err(e) = n.jump_law.validate() {
            check(false, format!("noise.jump_law: {e}"));
        }
        let l = &self.lattice;
        check(l.d >= 1, format!("lattice.d: must be >= 1, got {}", l.d));
        check(l.l >= 1, format!("lattice.L: must be >= 1, got {}", l.l));
        check(
            l.a > 0.0 && l.a.is_finite(),
            format!("lattice.a: must be positive, got {}", l.a),
        );
        let spec = LatticeSpec::new(l.d, l.l, l.a);
        if let (true, Err(e)) = (l.d >= 1 && l.l >= 1 && l.a > 0.0, &spec) {
            check(false, format!("lattice: {e}"));
        }
        check(
            self.run.seed <= MAX_SEED,
            format!("run.seed: must not exceed {MAX_SEED}, got {}", self.run.seed),
        );
        check(self.run.n_samples >= 1, "run.n_samples: must be >= 1".into());
        if let Some(w) = self.run.workers {
            check(w >= 1, "run.workers: must be >= 1".into());
        }
        let spec = spec.ok();
        let sites_ok = |name: &str, sets: &[Vec<Vec<i64>>], max: usize, errs: &mut Vec<String>| {
            if sets.is_empty() {
                errs.push(format!("{name}.point_sets: must not be empty"));
            }
            for (i, set) in sets.iter().enumerate() {
                if set.is_empty() || set.len() > max {
                    errs.push(format!(
                        "{name}.point_sets[{i}]: needs 1 to {max} points, got {}",
                        set.len()
                    ));
                }
                if let Some(s) = &spec {
                    for p in set {
                        if let Err(e) = s.check_site(p) {
                            errs.push(format!("{name}.point_sets[{i}]: {e}"));
                        }
                    }
                }
            }
        };
        if let Some(c) = &self.cumulants {
            sites_ok("cumulants", &c.point_sets, 4, &mut errs);
        }
        if let Some(c) = &self.schwinger {
            sites_ok("schwinger", &c.point_sets, 6, &mut errs);
        }
        if let Some(c) = &self.noise_check {
            if c.n_draws < 2 {
                errs.push("noise_check.n_draws: must be >= 2".into());
            }
            if c.test_functions.is_empty() {
                errs.push("noise_check.test_functions: must not be empty".into());
            }
            if !(c.sigmas > 0.0) {
                errs.push("noise_check.sigmas: must be positive".into());
            }
            for (i, f) in c.test_functions.iter().enumerate() {
                match f {
                    TestField::Gaussian { width, .. } if !(*width > 0.0) => {
                        errs.push(format!("noise_check.test_functions[{i}].width: must be positive"))
                    }
                    TestField::Cosine { mode, .. } if mode.len() != l.d => errs.push(format!(
                        "noise_check.test_functions[{i}].mode: needs {} components",
                        l.d
                    )),
                    _ => {}
                }
            }
        }
        if let (Some(r), Some(s)) = (&self.rp, spec) {
            if let Err(e) = r.basis.build(s) {
                errs.push(format!("rp.basis: {e}"));
            }
        }
        if let Some(r) = &self.rp_scan {
            if r.alphas.is_empty() || r.lambdas.is_empty() {
                errs.push("rp_scan: alphas and lambdas must be non-empty".into());
            }
            for a in &r.alphas {
                if !(*a > 0.0 && *a < 1.0) {
                    errs.push(format!("rp_scan.alphas: {a} outside (0, 1)"));
                }
            }
            for x in &r.lambdas {
                if !(*x >= 0.0 && x.is_finite()) {
                    errs.push(format!("rp_scan.lambdas: {x} must be >= 0"));
                }
            }
            if let Some(s) = spec {
                if let Err(e) = r.basis.build(s) {
                    errs.push(format!("rp_scan.basis: {e}"));
                }
            }
        }
        if let Some(b) = &self.baumann {
            if b.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                errs.push("baumann.epsilons: must be positive".into());
            }
            if b.epsilons.windows(2).any(|w| w[1] >= w[0]) {
                errs.push("baumann.epsilons: must decrease strictly".into());
            }
            if b.epsilons.is_empty() {
                errs.push("baumann.epsilons: must not be empty".into());
            }
            if b.samples < 64 {
                errs.push(format!("baumann.samples: at least 64 needed, got {}", b.samples));
            }
            if !(b.mass > 0.0 && b.mass.is_finite()) {
                errs.push(format!("baumann.mass: must be positive, got {}", b.mass));
            }
            if l.d != 3 {
                errs.push(format!("lattice.d: the baumann check runs in d = 3, got {}", l.d));
            }
        }
        if let Some(s) = &self.spectral {
            if s.q2.iter().any(|q| !(*q >= 0.0 && q.is_finite())) {
                errs.push("spectral.q2: values must be >= 0".into());
            }
            if s.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
                errs.push("spectral.alphas: values must lie in (0, 1)".into());
            }
            if !(s.kl_tolerance > 0.0 && s.green_tolerance > 0.0) {
                errs.push("spectral: tolerances must be positive".into());
            }
            if s.images < 0 {
                errs.push("spectral.images: must be >= 0".into());
            }
            if !s.separations.is_empty() && m.symbol != MomentumSymbol::Discrete {
                errs.push("spectral.separations: the lattice comparison needs model.symbol = \"discrete\"".into());
            }
            for (i, p) in s.separations.iter().enumerate() {
                if p.len() != l.d || p.iter().all(|&c| c == 0) {
                    errs.push(format!(
                        "spectral.separations[{i}]: needs {} components, not all zero",
                        l.d
                    ));
                }
            }
        }
        if let Some(v) = &self.verify {
            if v.n_samples < 2 {
                errs.push("verify.n_samples: must be >= 2".into());
            }
        }
        errs
    }

    pub fn spec(&self) -> lfl_core::Result<LatticeSpec> {
        LatticeSpec::new(self.lattice.d, self.lattice.l, self.lattice.a)
    }

    pub fn noise(&self) -> lfl_core::Result<LevyCharacteristic> {
        let n = &self.noise;
        LevyCharacteristic::new(n.b, n.sigma2, n.lambda, n.jump_law.clone())
    }

    pub fn params(&self) -> lfl_core::Result<ModelParams> {
        ModelParams::new(self.model.alpha, self.model.m0, self.model.symbol)
    }

    pub fn field_model(&self) -> lfl_core::Result<FieldModel> {
        FieldModel::new(self.params()?, self.noise()?, self.spec()?)
    }
}
