//! Truncated Schwinger functions: exact lattice values and ensemble estimates.
//!
//! With `φ = G ∗ η` and noise cumulants `κₙ`, the `n`-th joint cumulant of
//! the field is `Sₙᵀ(x₁…xₙ) = κₙ a^d Σ_y Πⱼ G(xⱼ − y)`. On the lattice this
//! is exact, not a discretization of the integral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{green_real_fft, two_point_kernel};
use crate::lattice::{LatticeField, LatticeSpec, Site};
use crate::partitions::{moments_from_cumulants, set_partitions};
use crate::sampler::{FieldModel, SampleSource};

/// Most points accepted by the analytic functions.
pub const MAX_POINTS: usize = 6;
/// Highest order of the ensemble estimator.
pub const MAX_EMPIRICAL_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointConfig {
    points: Vec<Site>,
}

impl PointConfig {
    pub fn new(spec: &LatticeSpec, points: Vec<Site>) -> Result<Self> {
        if points.is_empty() || points.len() > MAX_POINTS {
            return Err(Error::Range(format!(
                "{} points given, between 1 and {MAX_POINTS} supported",
                points.len()
            )));
        }
        for p in &points {
            spec.check_site(p)?;
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Site] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn subset(&self, mask: u32) -> Vec<&Site> {
        self.points
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, p)| p)
            .collect()
    }
}

/// Precomputed kernels for analytic Schwinger functions of one model.
#[derive(Debug, Clone)]
pub struct SchwingerModel {
    model: FieldModel,
    green: LatticeField,
    two_point: LatticeField,
    cumulants: [f64; MAX_POINTS],
}

impl SchwingerModel {
    pub fn new(model: FieldModel) -> Result<Self> {
        model.spec.require_dim_at_least(1)?;
        let green = green_real_fft(&model.params, &model.spec)?;
        let two_point = two_point_kernel(&model.params, &model.spec)?;
        let mut cumulants = [0.0; MAX_POINTS];
        for (n, c) in cumulants.iter_mut().enumerate() {
            *c = model.noise.cumulant(n + 1)?;
        }
        Ok(Self {
            model,
            green,
            two_point,
            cumulants,
        })
    }

    pub fn model(&self) -> &FieldModel {
        &self.model
    }

    /// `G` on the lattice, indexed by displacement.
    pub fn green(&self) -> &LatticeField {
        &self.green
    }

    /// `⟨φ(x)⟩ = κ₁ Ĝ(0)`.
    pub fn mean(&self) -> f64 {
        self.model.mean()
    }

    /// `Sₙᵀ` at the given points.
    pub fn truncated(&self, points: &[Site]) -> Result<f64> {
        let refs: Vec<&Site> = points.iter().collect();
        self.truncated_refs(&refs)
    }

    fn truncated_refs(&self, points: &[&Site]) -> Result<f64> {
        let spec = &self.model.spec;
        let n = points.len();
        if n == 0 || n > MAX_POINTS {
            return Err(Error::Range(format!("order {n} outside 1..={MAX_POINTS}")));
        }
        for p in points {
            spec.check_site(p)?;
        }
        let c = self.cumulants[n - 1];
        if c == 0.0 {
            return Ok(0.0);
        }
        Ok(match n {
            1 => self.mean(),
            2 => c * self.two_point.values()[spec.difference_index(points[0], points[1])],
            _ => c * self.direct_sum(points),
        })
    }

    /// `a^d Σ_y Πⱼ G(xⱼ − y)` by direct summation over `y`.
    pub fn direct_sum(&self, points: &[&Site]) -> f64 {
        let spec = &self.model.spec;
        let g = self.green.values();
        let mut total = 0.0;
        for i in 0..spec.num_sites() {
            let y = spec.coords(i);
            let mut prod = 1.0;
            for p in points {
                prod *= g[spec.difference_index(p, &y)];
            }
            total += prod;
        }
        total * spec.cell_volume()
    }

    /// `E[Πⱼ φ(xⱼ)]`, or of the centered fields `φ − ⟨φ⟩` when `centered`.
    pub fn moment(&self, points: &[Site], centered: bool) -> Result<f64> {
        let n = points.len();
        if n == 0 {
            return Ok(1.0);
        }
        if n > MAX_POINTS {
            return Err(Error::Range(format!("moment of order {n} exceeds {MAX_POINTS}")));
        }
        let refs: Vec<&Site> = points.iter().collect();
        let mut kappa = vec![0.0; 1 << n];
        for (mask, k) in kappa.iter_mut().enumerate().skip(1) {
            if centered && mask.count_ones() == 1 {
                continue;
            }
            let sub: Vec<&Site> = refs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| *p)
                .collect();
            *k = self.truncated_refs(&sub)?;
        }
        moments_from_cumulants(n, |mask| Some(kappa[mask as usize]))
    }
}

pub fn analytic_truncated_schwinger(model: &FieldModel, pts: &PointConfig) -> Result<f64> {
    SchwingerModel::new(model.clone())?.truncated(pts.points())
}

/// Uncentered `E[Πⱼ φ(xⱼ)]` for up to four points.
pub fn full_schwinger_moment(model: &FieldModel, pts: &PointConfig) -> Result<f64> {
    if pts.len() > MAX_EMPIRICAL_ORDER {
        return Err(Error::Range(format!(
            "full moments are provided up to order {MAX_EMPIRICAL_ORDER}"
        )));
    }
    SchwingerModel::new(model.clone())?.moment(pts.points(), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Average each sample over all lattice translations of the point set.
    pub translation_average: bool,
}

/// Products `Π_{j∈S}(vⱼ − shiftⱼ)` for every subset mask `S`.
fn subset_products(values: &[f64], shift: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    for mask in 1..out.len() {
        let low = mask.trailing_zeros() as usize;
        out[mask] = out[mask & (mask - 1)] * (values[low] - shift[low]);
    }
}

/// Plug-in cumulant with jackknife bias correction and standard error.
///
/// `products[i]` holds the subset products of sample `i` about `shift`.
fn jackknife(products: &[Vec<f64>], n: usize, shift: &[f64]) -> Result<CumulantEstimate> {
    let samples = products.len();
    let width = 1usize << n;
    let partitions: Vec<(f64, Vec<usize>)> = set_partitions(n)
        .into_iter()
        .map(|p| {
            let k = p.len();
            let coeff = (1..k).fold(if k % 2 == 1 { 1.0 } else { -1.0 }, |acc, j| acc * j as f64);
            (coeff, p.into_iter().map(|b| b as usize).collect())
        })
        .collect();
    let combine = |m: &[f64]| -> f64 {
        let raw: f64 = partitions
            .iter()
            .map(|(c, blocks)| c * blocks.iter().map(|&b| m[b]).product::<f64>())
            .sum();
        if n == 1 {
            raw + shift[0]
        } else {
            raw
        }
    };
    let mut sums = vec![0.0; width];
    for p in products {
        for (s, v) in sums.iter_mut().zip(p) {
            *s += v;
        }
    }
    let full: Vec<f64> = sums.iter().map(|s| s / samples as f64).collect();
    let theta = combine(&full);
    let mut loo = vec![0.0; width];
    let mut jack = Vec::with_capacity(samples);
    for p in products {
        for ((l, s), v) in loo.iter_mut().zip(&sums).zip(p) {
            *l = (s - v) / (samples - 1) as f64;
        }
        jack.push(combine(&loo));
    }
    let nf = samples as f64;
    let mean = jack.iter().sum::<f64>() / nf;
    let var = jack.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() * (nf - 1.0) / nf;
    let value = nf * theta - (nf - 1.0) * mean;
    if !value.is_finite() || !var.is_finite() {
        return Err(crate::error::numerical(
            "cumulant estimate is not finite",
            format!("theta {theta}, jackknife mean {mean}, variance {var}"),
        ));
    }
    Ok(CumulantEstimate {
        value,
        stderr: var.sqrt(),
        n_samples: samples,
        order: n,
    })
}

fn check_sample_count(order: usize, samples: usize) -> Result<()> {
    if order == 0 || order > MAX_EMPIRICAL_ORDER {
        return Err(Error::Range(format!("order {order} outside 1..={MAX_EMPIRICAL_ORDER}")));
    }
    let needed = 10 << order;
    if samples < needed {
        return Err(Error::Range(format!(
            "order {order} needs at least {needed} samples, got {samples}"
        )));
    }
    Ok(())
}

/// Joint cumulant of the columns of `rows` (one row per observation).
pub fn joint_cumulant(rows: &[Vec<f64>]) -> Result<CumulantEstimate> {
    let order = rows.first().map_or(0, Vec::len);
    check_sample_count(order, rows.len())?;
    if rows.iter().any(|r| r.len() != order) {
        return Err(Error::Config("observations have differing lengths".into()));
    }
    let mut shift = vec![0.0; order];
    for r in rows {
        for (s, v) in shift.iter_mut().zip(r) {
            *s += v;
        }
    }
    shift.iter_mut().for_each(|s| *s /= rows.len() as f64);
    let products: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut p = vec![0.0; 1 << order];
            subset_products(r, &shift, &mut p);
            p
        })
        .collect();
    jackknife(&products, order, &shift)
}

/// Estimates `Sₙᵀ(x₁…xₙ)` as the joint cumulant of `φ(x₁),…,φ(xₙ)` across samples.
pub fn empirical_cumulant<S: SampleSource>(
    source: &S,
    pts: &PointConfig,
    opts: EstimatorOptions,
) -> Result<CumulantEstimate> {
    let order = pts.len();
    check_sample_count(order, source.len())?;
    let spec = source.model().spec;
    let shift = vec![source.model().mean(); order];
    let base: Vec<usize> = pts.points().iter().map(|p| spec.index(p)).collect();
    let offsets: Vec<Vec<usize>> = if opts.translation_average {
        (0..spec.num_sites())
            .map(|t| {
                let shift_t = spec.coords(t);
                pts.points()
                    .iter()
                    .map(|p| {
                        let q: Vec<i64> = p.iter().zip(&shift_t).map(|(a, b)| a + b).collect();
                        spec.index(&q)
                    })
                    .collect()
            })
            .collect()
    } else {
        vec![base]
    };
    let width = 1usize << order;
    let products = source.map_samples(|_, field| {
        let mut acc = vec![0.0; width];
        let mut buf = vec![0.0; width];
        let mut vals = vec![0.0; order];
        for idx in &offsets {
            for (v, &i) in vals.iter_mut().zip(idx) {
                *v = field.values()[i];
            }
            subset_products(&vals, &shift, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b;
            }
        }
        let norm = offsets.len() as f64;
        acc.iter_mut().for_each(|a| *a /= norm);
        acc
    });
    jackknife(&products, order, &shift)
}

/// Subset of points selected by `mask`, for callers assembling moments.
pub fn select_points(pts: &PointConfig, mask: u32) -> Vec<Site> {
    pts.subset(mask).into_iter().cloned().collect()
}
