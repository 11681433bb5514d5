//! Quenched Gaussian disorder keyed by lattice coordinates.
//!
//! The value at a site depends only on `(master_seed, sample_index, x, y)`, so
//! the same disorder realization can be viewed through any window: a field
//! sampled on `Lambda_16` and one sampled on `Lambda_4` agree on `Lambda_4`
//! bit for bit. Nested-box comparisons rely on this.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{AnnulusRegion, Region, Sites, Vertex};

/// Fixed-point resolution of the field as seen by the solver: `2^20` units per unit energy.
pub const FIXED_SCALE: f64 = (1u64 << 20) as f64;

/// Fields with `|h_v|` above this are rejected so capacities cannot overflow.
pub const MAX_FIELD_MAGNITUDE: f64 = (1u64 << 30) as f64;

/// Counter-based generator: each output is a pure function of its key.
pub mod keyed {
    use crate::lattice::Vertex;

    /// Gaussian disorder values.
    pub const STREAM_FIELD: u64 = 0;
    /// Random nonnegative perturbations.
    pub const STREAM_SHIFT: u64 = 1;

    /// SplitMix64 finalizer.
    pub fn mix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn key(seed: u64, index: u64, stream: u64, v: Vertex) -> u64 {
        let xy = (u64::from(v.x as u32) << 32) | u64::from(v.y as u32);
        let mut h = mix64(seed);
        h = mix64(h ^ index);
        h = mix64(h ^ stream.rotate_left(17));
        mix64(h ^ xy)
    }

    /// The `lane`-th 64-bit word for a key.
    pub fn word(seed: u64, index: u64, stream: u64, v: Vertex, lane: u64) -> u64 {
        mix64(key(seed, index, stream, v) ^ lane.wrapping_mul(0xd6e8_feb8_6659_fd93))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn unit(seed: u64, index: u64, stream: u64, v: Vertex) -> f64 {
        (word(seed, index, stream, v, 0) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller; the sine partner is discarded.
    pub fn standard_normal(seed: u64, index: u64, v: Vertex) -> f64 {
        let a = word(seed, index, STREAM_FIELD, v, 0);
        let b = word(seed, index, STREAM_FIELD, v, 1);
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Round to the solver's fixed-point grid, ties to even.
pub fn quantize(x: f64) -> i64 {
    (x * FIXED_SCALE).round_ties_even() as i64
}

/// A realization of `{h_v}` over a region, possibly with a nonnegative shift applied.
///
/// `value(v) = base(v) * epsilon + shift(v)` where `base` is the keyed standard normal.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    sites: Arc<Sites>,
    epsilon: f64,
    master_seed: u64,
    sample_index: u64,
    base: Vec<f64>,
    shift: Vec<f64>,
}

/// Draw the keyed Gaussian field on `region` with standard deviation `epsilon`.
pub fn sample_field(
    region: &impl Region,
    epsilon: f64,
    master_seed: u64,
    sample_index: u64,
) -> Result<FieldSample> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")));
    }
    let sites = Arc::new(Sites::new(region));
    let base = sites
        .vertices()
        .iter()
        .map(|&v| keyed::standard_normal(master_seed, sample_index, v))
        .collect();
    let shift = vec![0.0; sites.len()];
    Ok(FieldSample { sites, epsilon, master_seed, sample_index, base, shift })
}

impl FieldSample {
    /// A deterministic field with explicit values (unit `epsilon`, no shift).
    pub fn from_values(region: &impl Region, values: impl Fn(Vertex) -> f64) -> Self {
        let sites = Arc::new(Sites::new(region));
        let base = sites.vertices().iter().map(|&v| values(v)).collect();
        let shift = vec![0.0; sites.len()];
        Self { sites, epsilon: 1.0, master_seed: 0, sample_index: 0, base, shift }
    }

    pub fn sites(&self) -> &Arc<Sites> {
        &self.sites
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn sample_index(&self) -> u64 {
        self.sample_index
    }

    pub fn covers(&self, region: &impl Region) -> bool {
        region.vertices().into_iter().all(|v| self.sites.contains(v))
    }

    pub fn value(&self, v: Vertex) -> Option<f64> {
        self.sites.index_of(v).map(|i| self.value_at(i))
    }

    pub fn value_at(&self, i: usize) -> f64 {
        self.base[i] * self.epsilon + self.shift[i]
    }

    pub fn shift_at(&self, i: usize) -> f64 {
        self.shift[i]
    }

    pub fn has_shift(&self) -> bool {
        self.shift.iter().any(|&s| s != 0.0)
    }

    /// Fixed-point value seen by the solver: the Gaussian part and the shift are
    /// rounded separately, so a constant shift moves every site by the same amount.
    pub fn fixed_at(&self, i: usize) -> Result<i64> {
        let value = self.value_at(i);
        if !(value.abs() <= MAX_FIELD_MAGNITUDE) {
            return Err(Error::FieldMagnitude { vertex: self.sites.vertex(i), value });
        }
        Ok(quantize(self.base[i] * self.epsilon) + quantize(self.shift[i]))
    }

    pub fn fixed_value(&self, v: Vertex) -> Result<i64> {
        let i = self.index(v)?;
        self.fixed_at(i)
    }

    fn index(&self, v: Vertex) -> Result<usize> {
        self.sites
            .index_of(v)
            .ok_or_else(|| Error::RegionMismatch(format!("field does not cover {v}")))
    }

    /// The same realization seen on a sub-region.
    pub fn restrict(&self, region: &impl Region) -> Result<FieldSample> {
        let sites = Arc::new(Sites::new(region));
        let mut base = Vec::with_capacity(sites.len());
        let mut shift = Vec::with_capacity(sites.len());
        for &v in sites.vertices() {
            let i = self.index(v)?;
            base.push(self.base[i]);
            shift.push(self.shift[i]);
        }
        Ok(FieldSample {
            sites,
            base,
            shift,
            epsilon: self.epsilon,
            master_seed: self.master_seed,
            sample_index: self.sample_index,
        })
    }

    /// Apply a perturbation additively on top of any existing shift.
    pub fn perturb(&self, spec: &PerturbationSpec) -> Result<FieldSample> {
        spec.validate()?;
        let mut out = self.clone();
        match spec {
            PerturbationSpec::GlobalShift { delta } => {
                out.shift.iter_mut().for_each(|s| *s += delta);
            }
            PerturbationSpec::AnnulusShift { delta, annulus } => {
                for v in annulus.vertices() {
                    let i = self.sites.index_of(v).ok_or_else(|| {
                        Error::RegionMismatch(format!("annulus site {v} outside the field"))
                    })?;
                    out.shift[i] += delta;
                }
            }
            PerturbationSpec::Pointwise { shifts } => {
                for (&v, &x) in shifts {
                    out.shift[self.index(v)?] += x;
                }
            }
        }
        Ok(out)
    }

    /// The base realization with every shift removed.
    pub fn unperturbed(&self) -> FieldSample {
        let mut out = self.clone();
        out.shift.iter_mut().for_each(|s| *s = 0.0);
        out
    }

    /// Exact-as-possible `h_A` for `A` inside the field's region.
    pub fn region_sum(&self, subregion: &impl Region) -> Result<f64> {
        let mut acc = NeumaierSum::default();
        for v in subregion.vertices() {
            acc.add(self.value_at(self.index(v)?));
        }
        Ok(acc.total())
    }

    /// Sum of the solver's fixed-point values over a sub-region.
    pub fn fixed_sum(&self, subregion: &impl Region) -> Result<i128> {
        let mut total = 0i128;
        for v in subregion.vertices() {
            total += i128::from(self.fixed_at(self.index(v)?)?);
        }
        Ok(total)
    }

    /// One `x y value` line per site in row-major order.
    pub fn dump(&self, mut out: impl Write) -> io::Result<()> {
        for (i, v) in self.sites.vertices().iter().enumerate() {
            writeln!(out, "{} {} {}", v.x, v.y, self.value_at(i))?;
        }
        Ok(())
    }
}

/// Neumaier's compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// An upward shift of the field.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationSpec {
    /// `h_v + delta` everywhere.
    GlobalShift { delta: f64 },
    /// `h_v + delta` on the annulus only.
    AnnulusShift { delta: f64, annulus: AnnulusRegion },
    /// Arbitrary nonnegative per-site shifts.
    Pointwise { shifts: BTreeMap<Vertex, f64> },
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |d: f64| d > 0.0 && d.is_finite();
        match self {
            PerturbationSpec::GlobalShift { delta } | PerturbationSpec::AnnulusShift { delta, .. }
                if !ok(*delta) =>
            {
                Err(Error::Parameter(format!("shift must be positive, got {delta}")))
            }
            PerturbationSpec::Pointwise { shifts }
                if shifts.values().any(|x| !(*x >= 0.0 && x.is_finite())) =>
            {
                Err(Error::Parameter("pointwise shifts must be nonnegative".into()))
            }
            _ => Ok(()),
        }
    }

    /// Keyed i.i.d. uniform shifts on `[0, max)` over `region`.
    pub fn uniform(region: &impl Region, max: f64, master_seed: u64, sample_index: u64) -> Self {
        let shifts = region
            .vertices()
            .into_iter()
            .map(|v| {
                let u = keyed::unit(master_seed, sample_index, keyed::STREAM_SHIFT, v);
                (v, u * max)
            })
            .collect();
        PerturbationSpec::Pointwise { shifts }
    }
}

/// Constants of the perturbation arguments: path-length threshold `k` and shift `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationParams {
    pub gamma: f64,
    pub k: f64,
    pub delta: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
}

pub const DEFAULT_GAMMA: f64 = 100.0;

impl PerturbationParams {
    /// `K = N/4`, `delta = gamma/N`.
    pub fn linear(n: u32, gamma: f64) -> Result<Self> {
        if n == 0 || !(gamma > 0.0) {
            return Err(Error::Parameter(format!("need N > 0 and gamma > 0 (N={n}, gamma={gamma})")));
        }
        let n = f64::from(n);
        Ok(Self { gamma, k: n / 4.0, delta: gamma / n, alpha: 1.0, alpha_prime: 1.0 })
    }

    /// `K = N*^(alpha alpha')`, `delta = N*^(-alpha alpha'^2)`.
    pub fn polynomial(n_star: u32, alpha: f64, alpha_prime: f64) -> Result<Self> {
        check_exponents(alpha, alpha_prime)?;
        let n = f64::from(n_star);
        Ok(Self {
            gamma: DEFAULT_GAMMA,
            k: n.powf(alpha * alpha_prime),
            delta: n.powf(-alpha * alpha_prime * alpha_prime),
            alpha,
            alpha_prime,
        })
    }
}

pub fn check_exponents(alpha: f64, alpha_prime: f64) -> Result<()> {
    if !(alpha > 1.0) {
        return Err(Error::Parameter(format!("alpha must exceed 1, got {alpha}")));
    }
    if !(alpha_prime > (1.0 / alpha).sqrt() && alpha_prime < 1.0) {
        return Err(Error::Parameter(format!(
            "alpha' must lie in (sqrt(1/alpha), 1) = ({:.4}, 1), got {alpha_prime}",
            (1.0 / alpha).sqrt()
        )));
    }
    Ok(())
}

/// Shift applied on `A_{N/4}` in the annulus experiment: `(N/16)^(-alpha alpha'^2)`.
pub fn annulus_delta(n: u32, alpha: f64, alpha_prime: f64) -> Result<f64> {
    check_exponents(alpha, alpha_prime)?;
    if n < 16 {
        return Err(Error::Parameter(format!("annulus shift needs N >= 16, got {n}")));
    }
    Ok((f64::from(n) / 16.0).powf(-alpha * alpha_prime * alpha_prime))
}

/// Density of the unshifted law with respect to the globally shifted one,
/// evaluated at a shifted sample:
/// `exp(-delta (h~_L - delta |L|) / eps^2) * exp(-delta^2 |L| / (2 eps^2))`.
pub fn rn_derivative(
    field_tilde: &FieldSample,
    delta: f64,
    region: &impl Region,
    epsilon: f64,
) -> Result<f64> {
    Ok(log_rn_derivative(field_tilde, delta, region, epsilon)?.exp())
}

pub fn log_rn_derivative(
    field_tilde: &FieldSample,
    delta: f64,
    region: &impl Region,
    epsilon: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let size = region.len() as f64;
    let total = field_tilde.region_sum(region)?;
    let var = epsilon * epsilon;
    Ok(-delta * (total - delta * size) / var - delta * delta * size / (2.0 * var))
}
