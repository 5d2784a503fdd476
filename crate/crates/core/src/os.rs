//! Reflection-positivity Gram matrices and negative-metric witnesses.
//!
//! Time is axis 0. The reflection on the torus is `θ(t) = (L − t) mod L`;
//! basis points live in `0 < t < L/2`, so a reflected point never coincides
//! with an unreflected one. Entries are `M_ab = E[Θ(m_a) m_b]`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cumulants::SchwingerModel;
use crate::error::{numerical, Error, Result};
use crate::lattice::{LatticeSpec, Site};
use crate::levy::{JumpLaw, LevyCharacteristic};
use crate::par;
use crate::sampler::{FieldModel, LazyEnsemble, SampleSource};

pub const MAX_DEGREE: usize = 2;
/// Relative threshold below which a negative eigenvalue counts as a witness.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-8;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Product of at most two field values; the empty product is the constant 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial {
    pub points: Vec<Site>,
}

impl Monomial {
    pub fn constant() -> Self {
        Self { points: Vec::new() }
    }

    pub fn degree(&self) -> usize {
        self.points.len()
    }

    pub fn reflected(&self, spec: &LatticeSpec) -> Self {
        Self {
            points: self.points.iter().map(|p| reflect(spec, p)).collect(),
        }
    }
}

pub fn reflect(spec: &LatticeSpec, site: &[i64]) -> Site {
    let mut out = site.to_vec();
    out[0] = (spec.sites_per_axis() as i64 - site[0]).rem_euclid(spec.sites_per_axis() as i64);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialBasis {
    pub spec: LatticeSpec,
    pub monomials: Vec<Monomial>,
}

impl MonomialBasis {
    pub fn new(spec: LatticeSpec, monomials: Vec<Monomial>) -> Result<Self> {
        if monomials.is_empty() {
            return Err(Error::Config("basis is empty".into()));
        }
        if spec.sites_per_axis() < 3 {
            return Err(Error::Config("reflection needs at least 3 sites along time".into()));
        }
        for m in &monomials {
            if m.degree() > MAX_DEGREE {
                return Err(Error::Range(format!(
                    "monomial of degree {} exceeds {MAX_DEGREE}",
                    m.degree()
                )));
            }
            for p in &m.points {
                spec.check_site(p)?;
                if !(p[0] > 0 && 2 * p[0] < spec.sites_per_axis() as i64) {
                    return Err(Error::Config(format!(
                        "basis point {p:?} must satisfy 0 < t < L/2 = {}",
                        spec.sites_per_axis() as f64 / 2.0
                    )));
                }
            }
        }
        Ok(Self { spec, monomials })
    }

    pub fn degree_one(spec: LatticeSpec, points: &[Site]) -> Result<Self> {
        Self::new(
            spec,
            points
                .iter()
                .map(|p| Monomial {
                    points: vec![p.clone()],
                })
                .collect(),
        )
    }

    /// Constant (optional), every `φ(x)` and every product `φ(x)φ(x′)` with `x ≤ x′`.
    pub fn up_to_degree_two(spec: LatticeSpec, points: &[Site], constant: bool) -> Result<Self> {
        let mut monomials = Vec::new();
        if constant {
            monomials.push(Monomial::constant());
        }
        for p in points {
            monomials.push(Monomial {
                points: vec![p.clone()],
            });
        }
        for (i, p) in points.iter().enumerate() {
            for q in &points[i..] {
                monomials.push(Monomial {
                    points: vec![p.clone(), q.clone()],
                });
            }
        }
        Self::new(spec, monomials)
    }

    /// `φ(x)` for every site on the given time slices.
    pub fn time_slices(spec: LatticeSpec, times: &[i64]) -> Result<Self> {
        let slice = spec.num_sites() / spec.sites_per_axis();
        let mut points = Vec::with_capacity(times.len() * slice);
        for &t in times {
            for i in 0..slice {
                let mut p = spec.coords(i);
                p[0] = t;
                points.push(p);
            }
        }
        Self::degree_one(spec, &points)
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.monomials.iter().map(Monomial::degree).max().unwrap_or(0)
    }
}

/// Declarative basis description used by configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisSpec {
    Points {
        points: Vec<Site>,
        max_degree: usize,
        #[serde(default)]
        constant: bool,
    },
    TimeSlices {
        times: Vec<i64>,
    },
}

impl BasisSpec {
    pub fn build(&self, spec: LatticeSpec) -> Result<MonomialBasis> {
        match self {
            BasisSpec::Points {
                points,
                max_degree,
                constant,
            } => match max_degree {
                1 => {
                    let mut b = MonomialBasis::degree_one(spec, points)?;
                    if *constant {
                        b.monomials.insert(0, Monomial::constant());
                    }
                    Ok(b)
                }
                2 => MonomialBasis::up_to_degree_two(spec, points, *constant),
                d => Err(Error::Config(format!("basis max_degree must be 1 or 2, got {d}"))),
            },
            BasisSpec::TimeSlices { times } => MonomialBasis::time_slices(spec, times),
        }
    }
}

/// Row-major symmetric matrix `M_ab = E[Θ(m_a) m_b]`.
pub fn build_reflection_gram(
    schwinger: &SchwingerModel,
    basis: &MonomialBasis,
    centered: bool,
) -> Result<Vec<Vec<f64>>> {
    if schwinger.model().spec != basis.spec {
        return Err(Error::Config("basis lattice differs from the model lattice".into()));
    }
    let spec = basis.spec;
    let reflected: Vec<Monomial> = basis.monomials.iter().map(|m| m.reflected(&spec)).collect();
    let n = basis.len();
    let rows = par::map_indexed(n, |a| -> Result<Vec<f64>> {
        (a..n)
            .map(|b| {
                let mut pts = reflected[a].points.clone();
                pts.extend(basis.monomials[b].points.iter().cloned());
                schwinger.moment(&pts, centered)
            })
            .collect()
    });
    let mut m = vec![vec![0.0; n]; n];
    for (a, row) in rows.into_iter().enumerate() {
        for (k, v) in row?.into_iter().enumerate() {
            m[a][a + k] = v;
            m[a + k][a] = v;
        }
    }
    Ok(m)
}

/// Largest eigenvalue modulus.
pub fn spectral_norm(m: &[Vec<f64>]) -> Result<f64> {
    let eig = eigen(m)?;
    Ok(eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

fn eigen(m: &[Vec<f64>]) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) {
        return Err(Error::Contract("matrix must be square and non-empty".into()));
    }
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !scale.is_finite() {
        return Err(numerical("matrix has non-finite entries", String::new()));
    }
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate().take(i) {
            if (v - m[j][i]).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::Contract(format!(
                    "matrix is not symmetric at ({i}, {j}): {v} vs {}",
                    m[j][i]
                )));
            }
        }
    }
    let dm = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    Ok(SymmetricEigen::new(dm))
}

/// Smallest eigenvalue and a unit eigenvector, signed so that its largest
/// component is positive.
pub fn min_eigenvalue(m: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let eig = eigen(m)?;
    let (k, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let lead = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    let sign = if lead < 0.0 { -1.0 } else { 1.0 };
    v.iter_mut().for_each(|x| *x *= sign / norm);
    Ok((lambda, v))
}

pub fn quadratic_form(m: &[Vec<f64>], w: &[f64]) -> f64 {
    m.iter()
        .zip(w)
        .map(|(row, wa)| wa * row.iter().zip(w).map(|(x, wb)| x * wb).sum::<f64>())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GramVerdict {
    NegativeWitness,
    /// Only one-sided evidence: a larger basis might still find one.
    NoWitnessFound,
}

impl GramVerdict {
    pub fn describe(self) -> &'static str {
        match self {
            GramVerdict::NegativeWitness => "negative witness found",
            GramVerdict::NoWitnessFound => "no witness found at this basis size",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub model: FieldModel,
    pub centered: bool,
    pub basis: MonomialBasis,
    pub matrix: Vec<Vec<f64>>,
    pub min_eig: f64,
    pub norm: f64,
    pub witness: Vec<f64>,
    pub verdict: GramVerdict,
}

impl GramReport {
    pub fn compute(model: &FieldModel, basis: &MonomialBasis, centered: bool) -> Result<Self> {
        let schwinger = SchwingerModel::new(model.clone())?;
        let matrix = build_reflection_gram(&schwinger, basis, centered)?;
        let (min_eig, witness) = min_eigenvalue(&matrix)?;
        let norm = spectral_norm(&matrix)?;
        let verdict = if min_eig < -NEGATIVITY_TOLERANCE * norm {
            GramVerdict::NegativeWitness
        } else {
            GramVerdict::NoWitnessFound
        };
        Ok(Self {
            model: model.clone(),
            centered,
            basis: basis.clone(),
            matrix,
            min_eig,
            norm,
            witness,
            verdict,
        })
    }

    pub fn relative_min_eig(&self) -> f64 {
        if self.norm > 0.0 {
            self.min_eig / self.norm
        } else {
            0.0
        }
    }

    pub fn witness_record(&self) -> WitnessRecord {
        WitnessRecord {
            model: self.model.clone(),
            centered: self.centered,
            basis: self.basis.clone(),
            coefficients: self.witness.clone(),
            min_eig: self.min_eig,
            norm: self.norm,
            verification: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub alpha: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub point: ScanPoint,
    pub report: std::result::Result<GramReport, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
    /// Fewer than two successful grid points.
    Undetermined,
}

/// Trend of `min_eig/‖M‖` along the scan order.
pub fn trend(rows: &[ScanRow]) -> Trend {
    let v: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.report.as_ref().ok().map(GramReport::relative_min_eig))
        .collect();
    if v.len() < 2 {
        return Trend::Undetermined;
    }
    let up = v.windows(2).all(|w| w[1] >= w[0]);
    let down = v.windows(2).all(|w| w[1] <= w[0]);
    match (up, down) {
        (true, true) => Trend::Constant,
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (false, false) => Trend::Mixed,
    }
}

/// One Gram report per grid point; `template` supplies everything except
/// `α` and `λ`. Failing points are recorded and the scan goes on.
pub fn rp_scan(
    template: &FieldModel,
    grid: &[ScanPoint],
    basis: &MonomialBasis,
    centered: bool,
) -> Result<Vec<ScanRow>> {
    if grid.is_empty() {
        return Err(Error::Config("scan grid is empty".into()));
    }
    Ok(par::map_indexed(grid.len(), |i| {
        let point = grid[i];
        let report = scan_model(template, point)
            .and_then(|m| GramReport::compute(&m, basis, centered))
            .map_err(|e| e.to_string());
        ScanRow { point, report }
    }))
}

fn scan_model(template: &FieldModel, point: ScanPoint) -> Result<FieldModel> {
    let mut params = template.params;
    params.alpha = point.alpha;
    let n = &template.noise;
    let noise = LevyCharacteristic::new(n.drift, n.sigma2, point.lambda, n.jump_law.clone())?;
    FieldModel::new(params, noise, template.spec)
}

/// Scales the field by `c > 0`: drift, diffusion and jump sizes are rescaled.
pub fn scale_noise(noise: &LevyCharacteristic, c: f64) -> Result<LevyCharacteristic> {
    let law = match &noise.jump_law {
        JumpLaw::Atoms { atoms } => JumpLaw::atoms(atoms.iter().map(|a| (c * a.position, a.weight)).collect())?,
        JumpLaw::Uniform { lo, hi } => JumpLaw::uniform(c * lo, c * hi)?,
        JumpLaw::TwoSidedExponential { rate } => JumpLaw::two_sided_exponential(rate / c)?,
    };
    LevyCharacteristic::new(c * noise.drift, c * c * noise.sigma2, noise.lambda, law)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationStatus {
    /// Analytic and Monte-Carlo values both negative and consistent.
    Confirmed,
    /// Analytic value negative but the Monte-Carlo estimate cannot resolve it.
    Unresolved,
    /// Monte-Carlo estimate inconsistent with the analytic value.
    Refuted,
    /// The recomputed quadratic form is not negative.
    NotNegative,
    /// Coefficient vector vanishes or is not finite.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslationAverage {
    None,
    Time,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub status: VerificationStatus,
    pub analytic: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Archived witness: everything needed to recompute its quadratic form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub model: FieldModel,
    pub centered: bool,
    pub basis: MonomialBasis,
    pub coefficients: Vec<f64>,
    pub min_eig: f64,
    pub norm: f64,
    #[serde(default)]
    pub verification: Option<Verification>,
}

const RECORD_MISMATCH_TOLERANCE: f64 = 1e-6;

/// Recomputes `wᵀMw` from scratch and estimates `E[Θ(Σ w_a m_a) Σ w_b m_b]`
/// on a fresh ensemble drawn with `seed`.
pub fn verify_witness(
    record: &WitnessRecord,
    n_samples: usize,
    seed: u64,
    translations: TranslationAverage,
) -> Result<Verification> {
    let w = &record.coefficients;
    if w.len() != record.basis.len() {
        return Err(Error::Contract(format!(
            "{} coefficients for a basis of {} monomials",
            w.len(),
            record.basis.len()
        )));
    }
    let wnorm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(wnorm.is_finite() && wnorm > 0.0) {
        return Ok(Verification {
            status: VerificationStatus::Degenerate,
            analytic: 0.0,
            mc_mean: 0.0,
            mc_stderr: 0.0,
            n_samples: 0,
            seed,
        });
    }
    if n_samples < 2 {
        return Err(Error::Range("verification needs at least 2 samples".into()));
    }
    let schwinger = SchwingerModel::new(record.model.clone())?;
    let matrix = build_reflection_gram(&schwinger, &record.basis, record.centered)?;
    let analytic = quadratic_form(&matrix, w);
    let rayleigh = analytic / (wnorm * wnorm);
    let scale = record.norm.abs().max(record.min_eig.abs()).max(f64::MIN_POSITIVE);
    if (rayleigh - record.min_eig).abs() > RECORD_MISMATCH_TOLERANCE * scale {
        return Err(Error::Contract(format!(
            "archived min_eig {} does not match the recomputed Rayleigh quotient {rayleigh}; \
             parameters and witness disagree",
            record.min_eig
        )));
    }
    let ensemble = LazyEnsemble::new(record.model.clone(), n_samples, seed)?;
    let per_sample = monte_carlo_form(&ensemble, record, translations);
    let n = per_sample.len() as f64;
    let mc_mean = per_sample.iter().sum::<f64>() / n;
    let var = per_sample.iter().map(|v| (v - mc_mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mc_stderr = (var / n).sqrt();
    let status = if !(analytic < 0.0) {
        VerificationStatus::NotNegative
    } else if (mc_mean - analytic).abs() > 4.0 * mc_stderr {
        VerificationStatus::Refuted
    } else if mc_mean < 0.0 && mc_mean + 4.0 * mc_stderr < 0.0 {
        VerificationStatus::Confirmed
    } else {
        VerificationStatus::Unresolved
    };
    Ok(Verification {
        status,
        analytic,
        mc_mean,
        mc_stderr,
        n_samples,
        seed,
    })
}

/// Per-sample values of `Θ(A)·A` with `A = Σ w_a m_a`, averaged over translations.
fn monte_carlo_form(source: &impl SampleSource, record: &WitnessRecord, translations: TranslationAverage) -> Vec<f64> {
    let spec = record.basis.spec;
    let mean = if record.centered { source.model().mean() } else { 0.0 };
    let shifts: Vec<Site> = match translations {
        TranslationAverage::None => vec![vec![0; spec.dim()]],
        TranslationAverage::Time => (0..spec.sites_per_axis() as i64)
            .map(|t| {
                let mut s = vec![0; spec.dim()];
                s[0] = t;
                s
            })
            .collect(),
        TranslationAverage::All => (0..spec.num_sites()).map(|i| spec.coords(i)).collect(),
    };
    let index = |p: &Site, s: &Site| -> usize {
        let q: Vec<i64> = p.iter().zip(s).map(|(a, b)| a + b).collect();
        spec.index(&q)
    };
    // For every translation, the site indices of each monomial and its reflection.
    type Sites = Vec<Vec<usize>>;
    let tables: Vec<(Sites, Sites)> = shifts
        .iter()
        .map(|s| {
            let plain = record
                .basis
                .monomials
                .iter()
                .map(|m| m.points.iter().map(|p| index(p, s)).collect())
                .collect();
            let refl = record
                .basis
                .monomials
                .iter()
                .map(|m| m.reflected(&spec).points.iter().map(|p| index(p, s)).collect())
                .collect();
            (plain, refl)
        })
        .collect();
    let w = &record.coefficients;
    source.map_samples(|_, field| {
        let v = field.values();
        let eval = |sites: &[Vec<usize>]| -> f64 {
            sites
                .iter()
                .zip(w)
                .map(|(idx, c)| c * idx.iter().map(|&i| v[i] - mean).product::<f64>())
                .sum()
        };
        let total: f64 = tables.iter().map(|(plain, refl)| eval(refl) * eval(plain)).sum();
        total / tables.len() as f64
    })
}
