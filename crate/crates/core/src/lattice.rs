//! Periodic hypercubic lattices and real fields on them.
//!
//! Sites are stored row-major with axis 0 slowest; axis 0 doubles as the
//! Euclidean time axis wherever a time direction is needed. Fields use the
//! density convention: the smeared pairing of two lattice functions is
//! `a^d Σ_x f(x) g(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer lattice coordinates. Components may be negative or exceed the
/// extent; they are reduced modulo the extent when indexing.
pub type Site = Vec<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    d: usize,
    sites_per_axis: usize,
    spacing: f64,
}

impl LatticeSpec {
    pub fn new(d: usize, sites_per_axis: usize, spacing: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("lattice dimension must be at least 1".into()));
        }
        if sites_per_axis == 0 {
            return Err(Error::Config("sites_per_axis must be at least 1".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Config(format!("spacing must be positive, got {spacing}")));
        }
        let volume = (sites_per_axis as u128).checked_pow(d as u32);
        match volume {
            Some(v) if v <= (1u128 << 34) => {}
            _ => return Err(Error::Range(format!("lattice {sites_per_axis}^{d} is too large"))),
        }
        Ok(Self {
            d,
            sites_per_axis,
            spacing,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sites_per_axis(&self) -> usize {
        self.sites_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of sites, `L^d`.
    pub fn num_sites(&self) -> usize {
        self.sites_per_axis.pow(self.d as u32)
    }

    /// `a^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.d as i32)
    }

    /// `(L a)^d`.
    pub fn physical_volume(&self) -> f64 {
        (self.sites_per_axis as f64 * self.spacing).powi(self.d as i32)
    }

    /// Physical period `L a` of each axis.
    pub fn period(&self) -> f64 {
        self.sites_per_axis as f64 * self.spacing
    }

    /// Relativistic formulas need at least three space-time dimensions.
    pub fn require_dim_at_least(&self, min: usize) -> Result<()> {
        if self.d < min {
            Err(Error::Config(format!(
                "operation needs d >= {min}, lattice has d = {}",
                self.d
            )))
        } else {
            Ok(())
        }
    }

    /// Reduces one coordinate into `0..L`.
    #[inline]
    pub fn wrap(&self, c: i64) -> usize {
        c.rem_euclid(self.sites_per_axis as i64) as usize
    }

    /// Linear index of a (wrapped) site.
    pub fn index(&self, site: &[i64]) -> usize {
        debug_assert_eq!(site.len(), self.d);
        site.iter()
            .fold(0usize, |acc, &c| acc * self.sites_per_axis + self.wrap(c))
    }

    /// Coordinates in `0..L` of a linear index.
    pub fn coords(&self, mut index: usize) -> Site {
        let l = self.sites_per_axis;
        let mut out = vec![0i64; self.d];
        for slot in out.iter_mut().rev() {
            *slot = (index % l) as i64;
            index /= l;
        }
        out
    }

    /// Index of `a - b` on the torus.
    #[inline]
    pub fn difference_index(&self, a: &[i64], b: &[i64]) -> usize {
        a.iter()
            .zip(b)
            .fold(0usize, |acc, (&x, &y)| acc * self.sites_per_axis + self.wrap(x - y))
    }

    /// Signed mode number of FFT bin `j`: `j` for `j < L/2`, `j - L` above.
    #[inline]
    pub fn mode_number(&self, j: usize) -> i64 {
        let l = self.sites_per_axis as i64;
        let j = j as i64;
        if 2 * j < l {
            j
        } else {
            j - l
        }
    }

    /// Momentum `2π n / (L a)` of FFT bin `j` along one axis.
    pub fn momentum(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.mode_number(j) as f64 / self.period()
    }

    /// Shortest displacement on the torus, in physical units.
    pub fn min_image_displacement(&self, site: &[i64]) -> Vec<f64> {
        site.iter()
            .map(|&c| self.mode_number(self.wrap(c)) as f64 * self.spacing)
            .collect()
    }

    /// Checks that `site` has the right dimension and lies in `0..L` on every axis.
    pub fn check_site(&self, site: &[i64]) -> Result<()> {
        if site.len() != self.d {
            return Err(Error::Config(format!(
                "site {site:?} has dimension {}, lattice has {}",
                site.len(),
                self.d
            )));
        }
        if site.iter().any(|&c| c < 0 || c >= self.sites_per_axis as i64) {
            return Err(Error::Config(format!(
                "site {site:?} lies outside 0..{}",
                self.sites_per_axis
            )));
        }
        Ok(())
    }
}

/// Real field values on a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    spec: LatticeSpec,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(spec: LatticeSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.num_sites() {
            return Err(Error::Config(format!(
                "field has {} values, lattice has {} sites",
                values.len(),
                spec.num_sites()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                message: "non-finite field value".into(),
                diagnostics: format!("site {:?}", spec.coords(i)),
            });
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: LatticeSpec) -> Self {
        Self {
            values: vec![0.0; spec.num_sites()],
            spec,
        }
    }

    pub fn from_fn(spec: LatticeSpec, mut f: impl FnMut(&[i64]) -> f64) -> Result<Self> {
        let values = (0..spec.num_sites()).map(|i| f(&spec.coords(i))).collect();
        Self::new(spec, values)
    }

    /// Unit-mass lattice delta: `a^{-d}` at `site`, zero elsewhere.
    pub fn delta(spec: LatticeSpec, site: &[i64]) -> Self {
        let mut field = Self::zeros(spec);
        field.values[spec.index(site)] = 1.0 / spec.cell_volume();
        field
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, site: &[i64]) -> f64 {
        self.values[self.spec.index(site)]
    }

    /// `a^d Σ_x self(x) other(x)`.
    pub fn pairing(&self, other: &LatticeField) -> f64 {
        debug_assert_eq!(self.spec, other.spec);
        self.spec.cell_volume() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `a^d Σ_x self(x)^n`.
    pub fn power_sum(&self, n: i32) -> f64 {
        self.spec.cell_volume() * self.values.iter().map(|v| v.powi(n)).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
