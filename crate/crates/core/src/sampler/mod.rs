//! Spectral solver for `(−Δ + m0²)^α φ = η` and ensembles of solutions.

pub mod format;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::LatticeFft;
use crate::greens::{real_part_checked, ModelParams};
use crate::lattice::{LatticeField, LatticeSpec};
use crate::levy::LevyCharacteristic;
use crate::par;
use crate::rng::{domain, StreamKey};

/// Diagonalizes the operator on the periodic lattice: `φ̂(k) = Ĝ(k) η̂(k)`.
#[derive(Debug, Clone)]
pub struct SpdeSolver {
    params: ModelParams,
    spec: LatticeSpec,
    fft: LatticeFft,
    green: Vec<f64>,
}

impl SpdeSolver {
    pub fn new(params: ModelParams, spec: LatticeSpec) -> Result<Self> {
        params.validate()?;
        params.require_mass_gap()?;
        let axis: Vec<f64> = (0..spec.sites_per_axis())
            .map(|j| params.symbol.axis_term(spec.momentum(j), spec.spacing()))
            .collect();
        let m2 = params.m0 * params.m0;
        let green = (0..spec.num_sites())
            .map(|i| {
                let s: f64 = spec.coords(i).iter().map(|&j| axis[j as usize]).sum();
                (s + m2).powf(-params.alpha)
            })
            .collect();
        Ok(Self {
            params,
            spec,
            fft: LatticeFft::new(&spec),
            green,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    /// `Ĝ` at every FFT bin, in storage order.
    pub fn green_symbol(&self) -> &[f64] {
        &self.green
    }

    pub fn solve(&self, eta: &LatticeField) -> Result<LatticeField> {
        self.filter(eta, |g| g)
    }

    /// Applies `(S(k) + m0²)^α`, the inverse of [`SpdeSolver::solve`].
    pub fn apply_operator(&self, phi: &LatticeField) -> Result<LatticeField> {
        self.filter(phi, |g| 1.0 / g)
    }

    fn filter(&self, input: &LatticeField, factor: impl Fn(f64) -> f64) -> Result<LatticeField> {
        if input.spec() != &self.spec {
            return Err(Error::Config("field lattice does not match the solver lattice".into()));
        }
        let mut data: Vec<Complex64> = input.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut data);
        for (c, &g) in data.iter_mut().zip(&self.green) {
            *c *= factor(g);
        }
        self.fft.inverse(&mut data);
        real_part_checked(&self.spec, data, 1.0 / self.spec.num_sites() as f64)
    }
}

/// One-shot solve; builds a solver for the field's lattice.
pub fn solve_spde(params: &ModelParams, eta: &LatticeField) -> Result<LatticeField> {
    SpdeSolver::new(*params, *eta.spec())?.solve(eta)
}

/// Everything needed to draw a field: operator, noise and lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldModel {
    pub params: ModelParams,
    pub noise: LevyCharacteristic,
    pub spec: LatticeSpec,
}

impl FieldModel {
    pub fn new(params: ModelParams, noise: LevyCharacteristic, spec: LatticeSpec) -> Result<Self> {
        params.validate()?;
        params.require_mass_gap()?;
        noise.validate()?;
        Ok(Self { params, noise, spec })
    }

    /// Exact lattice mean `⟨φ(x)⟩ = κ₁ Ĝ(0) = κ₁ m0^{−2α}`.
    pub fn mean(&self) -> f64 {
        self.noise.cumulant(1).expect("order 1 is supported")
            * (self.params.m0 * self.params.m0).powf(-self.params.alpha)
    }

    pub fn solver(&self) -> Result<SpdeSolver> {
        SpdeSolver::new(self.params, self.spec)
    }

    /// Sample `index` of the ensemble with the given master seed.
    pub fn sample(&self, solver: &SpdeSolver, master_seed: u64, index: u64) -> LatticeField {
        let mut rng = StreamKey::new(master_seed, domain::ENSEMBLE).stream(index);
        let eta = self.noise.sample_noise(&self.spec, &mut rng);
        solver.solve(&eta).expect("solver lattice matches the model lattice")
    }
}

/// Anything that can hand out the samples of an ensemble in index order.
pub trait SampleSource: Sync {
    fn model(&self) -> &FieldModel;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Evaluates `f(i, sample_i)` for every sample and returns results in order.
    fn map_samples<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &LatticeField) -> T + Sync + Send;
}

/// Materialized ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub model: FieldModel,
    pub master_seed: u64,
    pub samples: Vec<LatticeField>,
}

impl SampleSource for Ensemble {
    fn model(&self) -> &FieldModel {
        &self.model
    }

    fn len(&self) -> usize {
        self.samples.len()
    }

    fn map_samples<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &LatticeField) -> T + Sync + Send,
    {
        par::map_indexed(self.samples.len(), |i| f(i, &self.samples[i]))
    }
}

/// Ensemble whose samples are regenerated on demand from `(seed, index)`.
/// Same samples as [`sample_ensemble`] with equal arguments, constant memory.
#[derive(Debug, Clone)]
pub struct LazyEnsemble {
    model: FieldModel,
    master_seed: u64,
    n_samples: usize,
    solver: SpdeSolver,
}

impl LazyEnsemble {
    pub fn new(model: FieldModel, n_samples: usize, master_seed: u64) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::Range("an ensemble needs at least one sample".into()));
        }
        let solver = model.solver()?;
        Ok(Self {
            model,
            master_seed,
            n_samples,
            solver,
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn sample(&self, index: usize) -> LatticeField {
        self.model.sample(&self.solver, self.master_seed, index as u64)
    }

    pub fn materialize(&self) -> Result<Ensemble> {
        let mut samples = Vec::new();
        samples
            .try_reserve_exact(self.n_samples)
            .map_err(|e| exhausted(&self.model, self.n_samples, 0, e))?;
        samples.extend(par::map_indexed(self.n_samples, |i| self.sample(i)));
        Ok(Ensemble {
            model: self.model.clone(),
            master_seed: self.master_seed,
            samples,
        })
    }
}

impl SampleSource for LazyEnsemble {
    fn model(&self) -> &FieldModel {
        &self.model
    }

    fn len(&self) -> usize {
        self.n_samples
    }

    fn map_samples<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &LatticeField) -> T + Sync + Send,
    {
        par::map_indexed(self.n_samples, |i| f(i, &self.sample(i)))
    }
}

/// Upper bound on the memory a materialized ensemble may take.
pub const MAX_ENSEMBLE_BYTES: usize = 4 << 30;

fn exhausted(model: &FieldModel, requested: usize, done: usize, e: impl std::fmt::Display) -> Error {
    Error::Range(format!(
        "cannot hold {requested} samples of {} sites in memory ({done} generated): {e}; \
         use a lazy ensemble or spill to disk",
        model.spec.num_sites()
    ))
}

/// Draws `n_samples` fields; sample `i` uses stream `i` of the master seed.
pub fn sample_ensemble(model: &FieldModel, n_samples: usize, master_seed: u64) -> Result<Ensemble> {
    let bytes = n_samples
        .checked_mul(model.spec.num_sites())
        .and_then(|v| v.checked_mul(8));
    match bytes {
        Some(b) if b <= MAX_ENSEMBLE_BYTES => {}
        _ => {
            return Err(exhausted(
                model,
                n_samples,
                0,
                format!("exceeds the {MAX_ENSEMBLE_BYTES}-byte limit"),
            ))
        }
    }
    LazyEnsemble::new(model.clone(), n_samples, master_seed)?.materialize()
}
