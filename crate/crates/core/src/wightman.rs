//! Regularized fixed-mass truncated four-point Wightman distribution in
//! `d = 3` and the spacelike-support vanishing check.
//!
//! The distribution is
//! `Σ_j Π_{l<j} δ⁺(k_l² − m_l²) · PV 1/(k_j² − m_j²) · Π_{l>j} δ⁻(k_l² − m_l²) · δ(Σ k_l)`,
//! with the second product taken over `l = j+1..n`. Shell deltas are
//! replaced by Gaussians of width `ε` and the principal value by
//! `x/(x² + ε²)`. Momentum conservation removes the principal-value leg of
//! each `j`-term; the remaining three legs (nine dimensions) are integrated
//! by stratified Monte Carlo.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{numerical, Error, Result};
use crate::greens::{SpectralDensity, SpectralNormalization};
use crate::par;
use crate::quad::gauss_legendre;
use crate::rng::{domain, StreamKey};

/// Minkowski momentum `(k⁰, k¹, k²)`.
pub type Momentum = [f64; 3];
pub const LEGS: usize = 4;

/// `k² = (k⁰)² − |𝐤|²`.
pub fn minkowski_square(k: &Momentum) -> f64 {
    k[0] * k[0] - k[1] * k[1] - k[2] * k[2]
}

fn spatial_norm(k: &Momentum) -> f64 {
    k[1].hypot(k[2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Spacelike,
    Timelike,
    Generic,
}

/// `amplitude · exp(−|k − center|²/(2 width²))` on the Euclidean ball of
/// radius `radius` around `center`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumTestFunction {
    pub center: Momentum,
    pub width: f64,
    pub radius: f64,
    pub amplitude: f64,
    pub classification: Classification,
}

impl MomentumTestFunction {
    pub fn generic(center: Momentum, width: f64, radius: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!(
                "test function needs positive width and radius, got {width}, {radius}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("test function center must be finite".into()));
        }
        Ok(Self {
            center,
            width,
            radius,
            amplitude: 1.0,
            classification: Classification::Generic,
        })
    }

    /// Classifies the ball as timelike when it lies inside one light cone.
    pub fn make_timelike_test(center: Momentum, width: f64, radius: f64) -> Result<Self> {
        let mut t = Self::generic(center, width, radius)?;
        let k0 = center[0].abs();
        let kk = spatial_norm(&center);
        if !(k0 > radius && (k0 - radius).powi(2) > (kk + radius).powi(2)) {
            return Err(Error::Classification(format!(
                "ball of radius {radius} around {center:?} leaves the light cone"
            )));
        }
        t.classification = Classification::Timelike;
        Ok(t)
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.amplitude *= c;
        self
    }

    /// Rotates the spatial part of the center by `angle`.
    pub fn rotated(mut self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let [k0, k1, k2] = self.center;
        self.center = [k0, c * k1 - s * k2, s * k1 + c * k2];
        self
    }

    pub fn value(&self, k: &Momentum) -> f64 {
        let r2: f64 = k.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        if r2 > self.radius * self.radius {
            0.0
        } else {
            self.amplitude * (-r2 / (2.0 * self.width * self.width)).exp()
        }
    }

    fn ball_volume(&self) -> f64 {
        4.0 / 3.0 * std::f64::consts::PI * self.radius.powi(3)
    }
}

/// Refuses to label a ball spacelike unless `(|k⁰_c| + R)² < (|𝐤_c| − R)²` and `|𝐤_c| > R`.
pub fn make_spacelike_test(center: Momentum, width: f64, radius: f64) -> Result<MomentumTestFunction> {
    let mut t = MomentumTestFunction::generic(center, width, radius)?;
    let kk = spatial_norm(&center);
    if !(kk > radius && (center[0].abs() + radius).powi(2) < (kk - radius).powi(2)) {
        return Err(Error::Classification(format!(
            "ball of radius {radius} around {center:?} is not purely spacelike"
        )));
    }
    t.classification = Classification::Spacelike;
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellRegularization {
    pub epsilon: f64,
}

impl ShellRegularization {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    /// Gaussian surrogate of `δ(x)`.
    pub fn delta(&self, x: f64) -> f64 {
        let e = self.epsilon;
        (-(x / e) * (x / e)).exp() / (e * std::f64::consts::PI.sqrt())
    }

    /// `δ^±(k² − m²)`; `sign` is `+1` or `−1`.
    pub fn shell_delta(&self, k: &Momentum, mass2: f64, sign: f64) -> f64 {
        if k[0] * sign > 0.0 {
            self.delta(minkowski_square(k) - mass2)
        } else {
            0.0
        }
    }

    /// Regularized principal value of `1/x`.
    pub fn principal_value(&self, x: f64) -> f64 {
        x / (x * x + self.epsilon * self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MassAssignment {
    Fixed {
        masses: [f64; LEGS],
    },
    /// Every leg integrated against the spectral density on
    /// `[m0², m0² + cutoff]` with `nodes` Gauss–Legendre points.
    Superposed {
        alpha: f64,
        m0: f64,
        nodes: usize,
        cutoff: f64,
    },
}

pub const MAX_SUPERPOSITION_NODES: usize = 8;

impl MassAssignment {
    pub fn fixed(m: f64) -> Result<Self> {
        let a = Self::Fixed { masses: [m; LEGS] };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MassAssignment::Fixed { masses } => {
                if masses.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
                    return Err(Error::Config(format!("masses must be positive, got {masses:?}")));
                }
            }
            MassAssignment::Superposed {
                alpha,
                m0,
                nodes,
                cutoff,
            } => {
                SpectralDensity::new(*alpha, *m0, SpectralNormalization::Analytic)?;
                if !(*m0 > 0.0) {
                    return Err(Error::Config("superposed masses need m0 > 0".into()));
                }
                if *nodes == 0 || *nodes > MAX_SUPERPOSITION_NODES {
                    return Err(Error::Config(format!(
                        "nodes must be in 1..={MAX_SUPERPOSITION_NODES}, got {nodes}"
                    )));
                }
                if !(*cutoff > 0.0 && cutoff.is_finite()) {
                    return Err(Error::Config("cutoff must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Squared-mass nodes with positive weights `w_i ρ(m_i²)`.
    pub fn nodes(&self) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        match *self {
            MassAssignment::Fixed { .. } => Ok(vec![]),
            MassAssignment::Superposed {
                alpha,
                m0,
                nodes,
                cutoff,
            } => {
                // t = u^{1/(1−α)} absorbs the threshold singularity t^{−α}.
                let sd = SpectralDensity::new(alpha, m0, SpectralNormalization::Analytic)?;
                let p = 1.0 / (1.0 - alpha);
                Ok(gauss_legendre(nodes, 0.0, cutoff.powf(1.0 - alpha))
                    .into_iter()
                    .map(|(u, w)| (m0 * m0 + u.powf(p), w * p * sd.prefactor()))
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    /// Total samples per evaluation, split over the four terms and eight strata.
    pub samples: usize,
    pub seed: u64,
    /// Largest acceptable standard error; `None` accepts any.
    pub tolerance: Option<f64>,
}

impl IntegratorSpec {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            tolerance: None,
        }
    }

    fn per_stratum(&self) -> Result<usize> {
        let n = self.samples / (LEGS * STRATA);
        if n < 2 {
            return Err(Error::Config(format!(
                "at least {} samples needed, got {}",
                2 * LEGS * STRATA,
                self.samples
            )));
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WightmanEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

const STRATA: usize = 1 << (LEGS - 1);
const CHUNK: usize = 4096;

/// Proposal for one sampled leg: uniform in the test ball or concentrated
/// on the `sign` mass shell over the ball's spatial disc.
struct LegProposal<'a> {
    test: &'a MomentumTestFunction,
    mass2: f64,
    sign: f64,
    eps: f64,
}

impl LegProposal<'_> {
    fn sample_uniform<R: Rng>(&self, rng: &mut R) -> Momentum {
        let r = self.test.radius;
        loop {
            let p: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            if p.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                return std::array::from_fn(|i| self.test.center[i] + r * p[i]);
            }
        }
    }

    fn sample_shell<R: Rng>(&self, rng: &mut R) -> Momentum {
        let r = self.test.radius;
        let (k1, k2) = loop {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            if a * a + b * b <= 1.0 {
                break (self.test.center[1] + r * a, self.test.center[2] + r * b);
            }
        };
        let c = k1 * k1 + k2 * k2 + self.mass2;
        let sigma = self.eps / std::f64::consts::SQRT_2;
        let u = loop {
            let z: f64 = StandardNormal.sample(rng);
            if sigma * z > -c {
                break sigma * z;
            }
        };
        [self.sign * (c + u).sqrt(), k1, k2]
    }

    fn density(&self, k: &Momentum) -> f64 {
        let t = self.test;
        let r2: f64 = k.iter().zip(&t.center).map(|(a, b)| (a - b) * (a - b)).sum();
        let uniform = if r2 <= t.radius * t.radius {
            1.0 / t.ball_volume()
        } else {
            0.0
        };
        let d2 = (k[1] - t.center[1]).powi(2) + (k[2] - t.center[2]).powi(2);
        let shell = if d2 <= t.radius * t.radius && k[0] * self.sign > 0.0 {
            let c = k[1] * k[1] + k[2] * k[2] + self.mass2;
            let u = k[0] * k[0] - c;
            let accept = 1.0 - 0.5 * erfc(c / self.eps);
            let phi = (-(u / self.eps).powi(2)).exp() / (self.eps * std::f64::consts::PI.sqrt());
            phi * 2.0 * k[0].abs() / (accept * std::f64::consts::PI * t.radius * t.radius)
        } else {
            0.0
        };
        0.5 * (uniform + shell)
    }
}

/// Per-chunk sums `(Σ y, M, Σ (y/M)²)` with `M = max |y|`, so that squares
/// of tiny values do not underflow.
#[allow(clippy::too_many_arguments)]
fn chunk_sums(
    tests: &[MomentumTestFunction; LEGS],
    mass2: &[f64; LEGS],
    reg: &ShellRegularization,
    j: usize,
    stratum: usize,
    n: usize,
    key: StreamKey,
    chunk: usize,
) -> (f64, f64, f64) {
    let legs: Vec<usize> = (0..LEGS).filter(|&l| l != j).collect();
    let proposals: Vec<LegProposal> = legs
        .iter()
        .map(|&l| LegProposal {
            test: &tests[l],
            mass2: mass2[l],
            sign: if l < j { 1.0 } else { -1.0 },
            eps: reg.epsilon,
        })
        .collect();
    let mut rng = key.stream(chunk as u64);
    let mut ys = Vec::with_capacity(n);
    let mut k = [[0.0; 3]; LEGS];
    for _ in 0..n {
        let mut q = 1.0;
        let mut kj = [0.0; 3];
        for (slot, (&l, prop)) in legs.iter().zip(&proposals).enumerate() {
            let p = if stratum >> slot & 1 == 1 {
                prop.sample_shell(&mut rng)
            } else {
                prop.sample_uniform(&mut rng)
            };
            q *= prop.density(&p);
            for i in 0..3 {
                kj[i] -= p[i];
            }
            k[l] = p;
        }
        k[j] = kj;
        let mut f = reg.principal_value(minkowski_square(&k[j]) - mass2[j]);
        for (l, prop) in legs.iter().zip(&proposals) {
            f *= reg.shell_delta(&k[*l], mass2[*l], prop.sign);
        }
        if f != 0.0 {
            for (l, t) in tests.iter().enumerate() {
                f *= t.value(&k[l]);
            }
        }
        ys.push(if f == 0.0 { 0.0 } else { f / q });
    }
    let s1 = ys.iter().sum();
    let m = ys.iter().fold(0.0f64, |a, y| a.max(y.abs()));
    let q = if m > 0.0 {
        ys.iter().map(|y| (y / m).powi(2)).sum()
    } else {
        0.0
    };
    (s1, m, q)
}

fn fixed_mass(
    tests: &[MomentumTestFunction; LEGS],
    mass2: &[f64; LEGS],
    reg: &ShellRegularization,
    spec: &IntegratorSpec,
    key: StreamKey,
) -> Result<WightmanEstimate> {
    let per = spec.per_stratum()?;
    let chunks = per.div_ceil(CHUNK);
    let jobs: Vec<(usize, usize, usize)> = (0..LEGS)
        .flat_map(|j| (0..STRATA).flat_map(move |s| (0..chunks).map(move |c| (j, s, c))))
        .collect();
    let sums = par::map_indexed(jobs.len(), |i| {
        let (j, s, c) = jobs[i];
        let n = CHUNK.min(per - c * CHUNK);
        let k = key.child(j as u64).child(s as u64);
        chunk_sums(tests, mass2, reg, j, s, n, k, c)
    });
    let mut value = 0.0;
    let mut var_terms = Vec::new();
    for j in 0..LEGS {
        for s in 0..STRATA {
            let base = (j * STRATA + s) * chunks;
            let part = &sums[base..base + chunks];
            let s1: f64 = part.iter().map(|v| v.0).sum();
            let big = part.iter().fold(0.0f64, |a, v| a.max(v.1));
            let nf = per as f64;
            let mean = s1 / nf;
            value += mean / STRATA as f64;
            if big > 0.0 {
                let q: f64 = part.iter().map(|v| v.2 * (v.1 / big).powi(2)).sum();
                let scaled_var = ((q - nf * (mean / big).powi(2)) / (nf - 1.0)).max(0.0);
                let se = big * (scaled_var / nf).sqrt() / STRATA as f64;
                var_terms.push(se);
            }
        }
    }
    let big = var_terms.iter().fold(0.0f64, |a, &v| a.max(v));
    let stderr = if big > 0.0 {
        big * var_terms.iter().map(|v| (v / big).powi(2)).sum::<f64>().sqrt()
    } else {
        0.0
    };
    Ok(WightmanEstimate {
        value,
        stderr,
        samples: per * LEGS * STRATA,
    })
}

/// Regularized pairing `⟨Ŵ⁴ᵀ, t₁⊗t₂⊗t₃⊗t₄⟩`, up to an overall positive constant.
/// With real test functions the pairing is real.
pub fn wightman_n_regularized(
    tests: &[MomentumTestFunction],
    masses: &MassAssignment,
    reg: &ShellRegularization,
    spec: &IntegratorSpec,
) -> Result<WightmanEstimate> {
    let tests: &[MomentumTestFunction; LEGS] = tests.try_into().map_err(|_| {
        Error::Config(format!(
            "exactly {LEGS} test functions are supported, got {}",
            tests.len()
        ))
    })?;
    ShellRegularization::new(reg.epsilon)?;
    masses.validate()?;
    let key = StreamKey::new(spec.seed, domain::WIGHTMAN);
    let est = match masses {
        MassAssignment::Fixed { masses } => {
            let m2 = masses.map(|m| m * m);
            fixed_mass(tests, &m2, reg, spec, key)?
        }
        MassAssignment::Superposed { .. } => {
            let nodes = masses.nodes()?;
            let n = nodes.len();
            let tuples = n.pow(LEGS as u32);
            let sub = IntegratorSpec {
                samples: (spec.samples / tuples).max(2 * LEGS * STRATA),
                ..*spec
            };
            let (mut value, mut var, mut samples) = (0.0, 0.0, 0);
            for t in 0..tuples {
                let mut m2 = [0.0; LEGS];
                let mut w = 1.0;
                let mut rest = t;
                for slot in m2.iter_mut() {
                    let (node, weight) = nodes[rest % n];
                    *slot = node;
                    w *= weight;
                    rest /= n;
                }
                let e = fixed_mass(tests, &m2, reg, &sub, key.child(t as u64))?;
                value += w * e.value;
                var += (w * e.stderr).powi(2);
                samples += e.samples;
            }
            WightmanEstimate {
                value,
                stderr: var.sqrt(),
                samples,
            }
        }
    };
    if !est.value.is_finite() || !est.stderr.is_finite() {
        return Err(numerical(
            "Wightman integral is not finite",
            format!("value {}, stderr {}", est.value, est.stderr),
        ));
    }
    if let Some(tol) = spec.tolerance {
        if est.stderr > tol {
            return Err(numerical(
                "Monte-Carlo error exceeds the requested tolerance",
                format!(
                    "value {:e}, stderr {:e} > {tol:e} with {} samples",
                    est.value, est.stderr, est.samples
                ),
            ));
        }
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Required decay of `|W|` per decade of `ε`.
pub const DECAY_PER_DECADE: f64 = 100.0;
/// Smallest-`ε` spacelike value relative to the control.
pub const CONTROL_RATIO: f64 = 1e-3;
const SIGMAS: f64 = 4.0;

fn upper(e: &WightmanEstimate) -> f64 {
    e.value.abs() + SIGMAS * e.stderr
}

fn lower(e: &WightmanEstimate) -> f64 {
    (e.value.abs() - SIGMAS * e.stderr).max(0.0)
}

/// Does the sequence decay by `DECAY_PER_DECADE` per decade of `ε`?
///
/// Values below `f64::EPSILON · scale` count as vanished. `Fail` means the
/// decay is resolved to be too slow; `Inconclusive` that the errors cannot
/// tell.
pub fn vanishing_study(epsilons: &[f64], values: &[WightmanEstimate], scale: f64) -> Result<(Verdict, Vec<String>)> {
    if epsilons.len() != values.len() {
        return Err(Error::Contract("one estimate per epsilon expected".into()));
    }
    check_epsilons(epsilons)?;
    let mut notes = Vec::new();
    if epsilons.len() < 3 {
        notes.push(format!("{} epsilon values given, at least 3 needed", epsilons.len()));
        return Ok((Verdict::Inconclusive, notes));
    }
    let floor = f64::EPSILON * scale.abs();
    let mut verdict = Verdict::Pass;
    for i in 0..values.len() - 1 {
        let decades = (epsilons[i] / epsilons[i + 1]).log10();
        let factor = DECAY_PER_DECADE.powf(decades);
        let (a, b) = (&values[i], &values[i + 1]);
        if upper(b) <= (lower(a) / factor).max(floor) {
            continue;
        }
        if lower(b) > upper(a) / factor {
            notes.push(format!(
                "eps {} -> {}: |W| {:e} -> {:e}, decay slower than {factor:e}",
                epsilons[i],
                epsilons[i + 1],
                a.value.abs(),
                b.value.abs()
            ));
            verdict = Verdict::Fail;
        } else if verdict == Verdict::Pass {
            notes.push(format!(
                "eps {} -> {}: statistical errors too large to resolve the decay",
                epsilons[i],
                epsilons[i + 1]
            ));
            verdict = Verdict::Inconclusive;
        }
    }
    Ok((verdict, notes))
}

fn check_epsilons(epsilons: &[f64]) -> Result<()> {
    if epsilons.is_empty() {
        return Err(Error::Config("epsilon sequence is empty".into()));
    }
    for e in epsilons {
        ShellRegularization::new(*e)?;
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(format!(
            "epsilon sequence must decrease strictly: {epsilons:?}"
        )));
    }
    Ok(())
}

/// Anchors `f, g`, spacelike `h₁, h₂` and a matched timelike pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaumannSetup {
    pub masses: MassAssignment,
    pub f: MomentumTestFunction,
    pub g: MomentumTestFunction,
    pub h1: MomentumTestFunction,
    pub h2: MomentumTestFunction,
    pub control_h1: MomentumTestFunction,
    pub control_h2: MomentumTestFunction,
}

impl BaumannSetup {
    /// Unit masses; spacelike bumps at `(0, ±3, 0)`; control bumps on the
    /// positive shell at `(√2, ±1, 0)`; `f` on the shell at `(1, 0, 0)` and
    /// `g` at `−(f + h₁ + h₂)` so that the control conserves momentum.
    pub fn standard() -> Result<Self> {
        let s2 = std::f64::consts::SQRT_2;
        Ok(Self {
            masses: MassAssignment::fixed(1.0)?,
            f: MomentumTestFunction::generic([1.0, 0.0, 0.0], 1.0, 1.0)?,
            g: MomentumTestFunction::generic([-(1.0 + 2.0 * s2), 0.0, 0.0], 1.0, 1.0)?,
            h1: make_spacelike_test([0.0, 3.0, 0.0], 1.0, 1.0)?,
            h2: make_spacelike_test([0.0, -3.0, 0.0], 1.0, 1.0)?,
            control_h1: MomentumTestFunction::make_timelike_test([s2, 1.0, 0.0], 0.15, 0.15)?,
            control_h2: MomentumTestFunction::make_timelike_test([s2, -1.0, 0.0], 0.15, 0.15)?,
        })
    }

    pub fn spacelike_tests(&self) -> [MomentumTestFunction; LEGS] {
        [self.f, self.h1, self.h2, self.g]
    }

    pub fn control_tests(&self) -> [MomentumTestFunction; LEGS] {
        [self.f, self.control_h1, self.control_h2, self.g]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaumannReport {
    pub masses: MassAssignment,
    pub epsilons: Vec<f64>,
    pub spacelike: Vec<WightmanEstimate>,
    pub control: Vec<WightmanEstimate>,
    pub verdict: Verdict,
    /// Outcome of the vanishing test applied to the control itself.
    pub control_vanishing: Verdict,
    pub notes: Vec<String>,
}

pub fn baumann_check(setup: &BaumannSetup, epsilons: &[f64], spec: &IntegratorSpec) -> Result<BaumannReport> {
    check_epsilons(epsilons)?;
    for (name, t) in [("h1", &setup.h1), ("h2", &setup.h2)] {
        if t.classification != Classification::Spacelike {
            return Err(Error::Classification(format!("{name} is not classified spacelike")));
        }
    }
    let run = |tests: [MomentumTestFunction; LEGS], tag: u64| -> Result<Vec<WightmanEstimate>> {
        epsilons
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let sub = IntegratorSpec {
                    seed: StreamKey::new(spec.seed, tag).child(i as u64).stream(0).random(),
                    ..*spec
                };
                wightman_n_regularized(&tests, &setup.masses, &ShellRegularization::new(e)?, &sub)
            })
            .collect()
    };
    let spacelike = run(setup.spacelike_tests(), 1)?;
    let control = run(setup.control_tests(), 2)?;
    let last = control.last().expect("non-empty");
    let scale = last.value.abs();
    let (mut verdict, mut notes) = vanishing_study(epsilons, &spacelike, scale)?;
    let (control_vanishing, _) = vanishing_study(epsilons, &control, scale)?;
    if verdict != Verdict::Inconclusive {
        if lower(last) == 0.0 {
            notes.push("timelike control is not resolved from zero".into());
            verdict = Verdict::Inconclusive;
        } else {
            let s = spacelike.last().expect("non-empty");
            if upper(s) > CONTROL_RATIO * lower(last) {
                notes.push(format!(
                    "smallest-eps spacelike |W| {:e} exceeds {CONTROL_RATIO:e} of the control {:e}",
                    s.value.abs(),
                    last.value.abs()
                ));
                verdict = if lower(s) > CONTROL_RATIO * upper(last) {
                    Verdict::Fail
                } else {
                    Verdict::Inconclusive
                };
            }
        }
    }
    Ok(BaumannReport {
        masses: setup.masses.clone(),
        epsilons: epsilons.to_vec(),
        spacelike,
        control,
        verdict,
        control_vanishing,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadOptions};

    #[test]
    fn spacelike_classification_examples() {
        assert!(make_spacelike_test([0.0, 3.0, 0.0], 1.0, 1.0).is_ok());
        assert!(matches!(
            make_spacelike_test([2.0, 1.0, 0.0], 0.1, 0.1),
            Err(Error::Classification(_))
        ));
        assert!(matches!(
            make_spacelike_test([0.0, 3.0, 0.0], 1.0, 3.0),
            Err(Error::Classification(_))
        ));
    }

    #[test]
    fn spacelike_balls_stay_spacelike() {
        let t = make_spacelike_test([0.5, 2.0, 1.0], 0.4, 0.4).unwrap();
        let mut rng = StreamKey::new(1, 2).stream(0);
        let prop = LegProposal {
            test: &t,
            mass2: 1.0,
            sign: 1.0,
            eps: 0.1,
        };
        for _ in 0..10_000 {
            assert!(minkowski_square(&prop.sample_uniform(&mut rng)) < 0.0);
        }
    }

    #[test]
    fn delta_surrogate_is_normalized() {
        for eps in [0.5, 0.05, 0.005] {
            let r = ShellRegularization::new(eps).unwrap();
            let v = integrate(|x| r.delta(x), -40.0 * eps, 40.0 * eps, &QuadOptions::default()).unwrap();
            assert!((v.value - 1.0).abs() < 1e-6, "{eps}: {}", v.value);
        }
    }

    #[test]
    fn shell_proposal_density_is_normalized() {
        // Integrate the shell component over the 2-disc and k⁰ line.
        let t = MomentumTestFunction::generic([1.5, 0.3, -0.2], 1.0, 0.5).unwrap();
        let prop = LegProposal {
            test: &t,
            mass2: 1.0,
            sign: 1.0,
            eps: 0.2,
        };
        let opts = QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_intervals: 4000,
        };
        let nodes = gauss_legendre(40, -0.5, 0.5);
        let mut total = 0.0;
        for &(a, wa) in &nodes {
            for &(b, wb) in &nodes {
                let (k1, k2) = (0.3 + a, -0.2 + b);
                if a * a + b * b > 0.25 {
                    continue;
                }
                let c = k1 * k1 + k2 * k2 + 1.0;
                let inner = integrate(
                    |k0| 2.0 * prop.density(&[k0, k1, k2]) - 2.0 * uniform_part(&t, &[k0, k1, k2]),
                    0.0,
                    (c + 3.0).sqrt(),
                    &opts,
                )
                .unwrap();
                total += wa * wb * inner.value;
            }
        }
        // Disc cut by the square grid: compare with the grid's own disc area.
        let area: f64 = nodes
            .iter()
            .flat_map(|&(a, wa)| {
                nodes
                    .iter()
                    .map(move |&(b, wb)| if a * a + b * b <= 0.25 { wa * wb } else { 0.0 })
            })
            .sum();
        let expected = area / (std::f64::consts::PI * 0.25);
        assert!((total - expected).abs() < 1e-6, "{total} vs {expected}");
    }

    fn uniform_part(t: &MomentumTestFunction, k: &Momentum) -> f64 {
        let r2: f64 = k.iter().zip(&t.center).map(|(a, b)| (a - b) * (a - b)).sum();
        if r2 <= t.radius * t.radius {
            0.5 / t.ball_volume()
        } else {
            0.0
        }
    }

    fn spec() -> IntegratorSpec {
        IntegratorSpec::new(64_000, 5)
    }

    #[test]
    fn zero_test_function_gives_zero() {
        let s = BaumannSetup::standard().unwrap();
        let mut tests = s.control_tests();
        tests[2] = tests[2].scaled(0.0);
        let r = ShellRegularization::new(0.05).unwrap();
        let e = wightman_n_regularized(&tests, &s.masses, &r, &spec()).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn control_is_nonzero_and_multilinear() {
        let s = BaumannSetup::standard().unwrap();
        let r = ShellRegularization::new(0.05).unwrap();
        let base = wightman_n_regularized(&s.control_tests(), &s.masses, &r, &spec()).unwrap();
        assert!(base.value.abs() > 10.0 * base.stderr, "{base:?}");
        let mut tests = s.control_tests();
        tests[1] = tests[1].scaled(-2.5);
        let scaled = wightman_n_regularized(&tests, &s.masses, &r, &spec()).unwrap();
        assert!((scaled.value + 2.5 * base.value).abs() <= 1e-12 * base.value.abs());
    }

    #[test]
    fn control_is_rotation_covariant() {
        let s = BaumannSetup::standard().unwrap();
        let r = ShellRegularization::new(0.05).unwrap();
        let base = wightman_n_regularized(&s.control_tests(), &s.masses, &r, &spec()).unwrap();
        let rotated = s.control_tests().map(|t| t.rotated(0.7));
        let other = wightman_n_regularized(&rotated, &s.masses, &r, &spec()).unwrap();
        let err = (base.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        assert!((base.value - other.value).abs() < 4.0 * err, "{base:?} vs {other:?}");
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let s = BaumannSetup::standard().unwrap();
        let r = ShellRegularization::new(0.05).unwrap();
        let one = par::with_workers(Some(1), || {
            wightman_n_regularized(&s.control_tests(), &s.masses, &r, &spec()).unwrap()
        });
        let four = par::with_workers(Some(4), || {
            wightman_n_regularized(&s.control_tests(), &s.masses, &r, &spec()).unwrap()
        });
        assert_eq!(one, four);
    }

    #[test]
    fn tolerance_violation_is_a_numerical_error() {
        let s = BaumannSetup::standard().unwrap();
        let r = ShellRegularization::new(0.05).unwrap();
        let mut sp = spec();
        sp.tolerance = Some(1e-30);
        assert!(matches!(
            wightman_n_regularized(&s.control_tests(), &s.masses, &r, &sp),
            Err(Error::Numerical { .. })
        ));
    }

    #[test]
    fn superposed_masses_give_a_finite_value() {
        let s = BaumannSetup::standard().unwrap();
        let m = MassAssignment::Superposed {
            alpha: 0.4,
            m0: 1.0,
            nodes: 2,
            cutoff: 2.0,
        };
        let r = ShellRegularization::new(0.1).unwrap();
        let e = wightman_n_regularized(&s.control_tests(), &m, &r, &spec()).unwrap();
        assert!(e.value.is_finite() && e.stderr.is_finite());
        assert!(m.nodes().unwrap().iter().all(|&(m2, w)| m2 > 1.0 && w > 0.0));
    }

    #[test]
    fn short_epsilon_sequence_is_inconclusive() {
        let s = BaumannSetup::standard().unwrap();
        let r = baumann_check(&s, &[0.5], &spec()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(baumann_check(&s, &[0.05, 0.5, 0.005], &spec()).is_err());
    }

    #[test]
    fn vanishing_study_classifies_sequences() {
        let e = |v: f64, s: f64| WightmanEstimate {
            value: v,
            stderr: s,
            samples: 10,
        };
        let eps = [0.5, 0.05, 0.005];
        let fast = [e(1.0, 0.01), e(1e-3, 1e-5), e(0.0, 0.0)];
        assert_eq!(vanishing_study(&eps, &fast, 1.0).unwrap().0, Verdict::Pass);
        let flat = [e(1.0, 0.01), e(1.0, 0.01), e(1.0, 0.01)];
        assert_eq!(vanishing_study(&eps, &flat, 1.0).unwrap().0, Verdict::Fail);
        let noisy = [e(1.0, 0.01), e(0.05, 0.05), e(0.0, 0.0)];
        assert_eq!(vanishing_study(&eps, &noisy, 1.0).unwrap().0, Verdict::Inconclusive);
    }
}
