//! Intensity-correlation estimators for far-field snapshot streams.
//!
//! Samples produced by the stochastic integrator are Q-representation
//! amplitudes, so every raw moment carries vacuum contributions of size
//! κ = 1/(n_th Δk) per mode. The estimators here remove them:
//!
//! * mean photon number  ⟨n(k)⟩ = ⟨I(k)⟩ − κ with I = |a(k)|²,
//! * normally ordered variance  Var_N(k) = Var(I) − κ⟨I⟩,
//! * cross covariances between distinct modes need no correction.
//!
//! Normalized observables follow:
//!
//! * `C^n_ij(k, k')` — photon-number correlation coefficient,
//! * `C^±_ij(k, k')` — intensity sum/difference variances normalized to the
//!   coherent-state (shot-noise) level, so 1 marks the classical boundary.
//!
//! Accumulation uses Welford-style single-pass co-moments (numerically safe
//! when means dwarf fluctuations, as they do near k = 0) and an exact
//! pairwise merge, which makes parallel ensembles deterministic. Standard
//! errors come from delete-one-block jackknife over time/trajectory blocks;
//! [`AutocorrDiagnostic`] offers a dyadic-lag autocorrelation probe to sanity
//! check that blocks are long compared to the correlation time.

use crate::error::{Error, Result};
use crate::grid::{FieldPair, Grid1D, Spectral};
use crate::sim::SnapshotSink;
use crate::C64;

/// Field selector for per-mode statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Fundamental,
    SecondHarmonic,
}

/// Normalized observables retrievable from an accumulator.
///
/// Spectra are indexed by a mode m (wavenumber k_m); "Opposite" pairs the
/// mode with its mirror −k_m, "Same" pairs it with itself, and the
/// `…Zero…` variants correlate against the homogeneous mode k = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    /// ⟨n_j(k)⟩, vacuum removed (not normalized).
    MeanPhoton(Field),
    /// C^n_jj(k, −k)
    NumberCorrelation(Field),
    /// C^n_12(k, −k)
    CrossNumberOpposite,
    /// C^n_12(k, k)
    CrossNumberSame,
    /// C^−_jj(k, −k)
    IntensityDifference(Field),
    /// C^+_jj(k, −k)
    IntensitySum(Field),
    /// C^−_12(k, −k)
    CrossDifferenceOpposite,
    /// C^+_12(k, −k)
    CrossSumOpposite,
    /// C^−_12(k, k)
    CrossDifferenceSame,
    /// C^+_12(k, k)
    CrossSumSame,
    /// C^n_jj(0, k)
    NumberCorrelationFromZero(Field),
    /// C^n_12(0, k)
    CrossNumberZeroTo,
    /// C^n_12(k, 0)
    CrossNumberToZero,
}

/// Point estimate with a jackknife standard error.
#[derive(Debug, Clone, Copy)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub se: f64,
}

/// Single-pass co-moment accumulator for the intensity pairs entering the
/// correlation observables.
///
/// Per mode m it tracks means and second co-moments of
/// (I1(m), I1(−m)), (I2(m), I2(−m)), (I1(m), I2(m)), (I1(m), I2(−m)),
/// plus the k = 0 rows (I1(0), I1(m)), (I2(0), I2(m)), (I1(0), I2(m)) and
/// (I1(m), I2(0)).
#[derive(Debug, Clone)]
pub struct CorrelationAccumulator {
    n: usize,
    opp: Vec<usize>,
    kappa: f64,
    count: u64,
    mean1: Vec<f64>,
    mean2: Vec<f64>,
    m2_1: Vec<f64>,
    m2_2: Vec<f64>,
    c11_opp: Vec<f64>,
    c22_opp: Vec<f64>,
    c12_same: Vec<f64>,
    c12_opp: Vec<f64>,
    c1z_1: Vec<f64>,
    c2z_2: Vec<f64>,
    c1z_2: Vec<f64>,
    c1_2z: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl CorrelationAccumulator {
    pub fn new(grid: &Grid1D, n_th: f64) -> Result<CorrelationAccumulator> {
        if !(n_th.is_finite() && n_th > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "thermal scale n_th must be positive and finite, got {n_th}"
            )));
        }
        let n = grid.n();
        let opp = (0..n).map(|m| grid.opposite_mode(m)).collect();
        Ok(CorrelationAccumulator {
            n,
            opp,
            kappa: 1.0 / (n_th * grid.dk()),
            count: 0,
            mean1: vec![0.0; n],
            mean2: vec![0.0; n],
            m2_1: vec![0.0; n],
            m2_2: vec![0.0; n],
            c11_opp: vec![0.0; n],
            c22_opp: vec![0.0; n],
            c12_same: vec![0.0; n],
            c12_opp: vec![0.0; n],
            c1z_1: vec![0.0; n],
            c2z_2: vec![0.0; n],
            c1z_2: vec![0.0; n],
            c1_2z: vec![0.0; n],
            d1: vec![0.0; n],
            d2: vec![0.0; n],
        })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    /// Fold in one far-field sample (complex mode amplitudes, natural FFT
    /// ordering, both fields).
    pub fn push(&mut self, far1: &[C64], far2: &[C64]) -> Result<()> {
        if far1.len() != self.n || far2.len() != self.n {
            return Err(Error::AccumulatorMismatch(format!(
                "sample holds {}/{} modes, accumulator tracks {}",
                far1.len(),
                far2.len(),
                self.n
            )));
        }
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        // delta_new = x − mean_new = delta_old (1 − 1/count)
        let shrink = 1.0 - inv;
        for m in 0..self.n {
            let i1 = far1[m].norm_sqr();
            let i2 = far2[m].norm_sqr();
            self.d1[m] = i1 - self.mean1[m];
            self.d2[m] = i2 - self.mean2[m];
            self.mean1[m] += self.d1[m] * inv;
            self.mean2[m] += self.d2[m] * inv;
        }
        for m in 0..self.n {
            let o = self.opp[m];
            self.m2_1[m] += self.d1[m] * self.d1[m] * shrink;
            self.m2_2[m] += self.d2[m] * self.d2[m] * shrink;
            self.c11_opp[m] += self.d1[m] * self.d1[o] * shrink;
            self.c22_opp[m] += self.d2[m] * self.d2[o] * shrink;
            self.c12_same[m] += self.d1[m] * self.d2[m] * shrink;
            self.c12_opp[m] += self.d1[m] * self.d2[o] * shrink;
            self.c1z_1[m] += self.d1[0] * self.d1[m] * shrink;
            self.c2z_2[m] += self.d2[0] * self.d2[m] * shrink;
            self.c1z_2[m] += self.d1[0] * self.d2[m] * shrink;
            self.c1_2z[m] += self.d1[m] * self.d2[0] * shrink;
        }
        Ok(())
    }

    /// Exact pairwise merge: the result equals a single accumulator that saw
    /// both sample streams.
    pub fn merge(&mut self, other: &CorrelationAccumulator) -> Result<()> {
        if other.n != self.n {
            return Err(Error::AccumulatorMismatch(format!(
                "cannot merge accumulators tracking {} and {} modes",
                self.n, other.n
            )));
        }
        if (other.kappa - self.kappa).abs() > 1e-12 * self.kappa.abs() {
            return Err(Error::AccumulatorMismatch(
                "cannot merge accumulators with different vacuum scales".into(),
            ));
        }
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            *self = other.clone();
            return Ok(());
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let total = na + nb;
        let w = na * nb / total;
        for m in 0..self.n {
            // reuse the scratch buffers for the mean gaps
            self.d1[m] = other.mean1[m] - self.mean1[m];
            self.d2[m] = other.mean2[m] - self.mean2[m];
        }
        for m in 0..self.n {
            let o = self.opp[m];
            self.m2_1[m] += other.m2_1[m] + self.d1[m] * self.d1[m] * w;
            self.m2_2[m] += other.m2_2[m] + self.d2[m] * self.d2[m] * w;
            self.c11_opp[m] += other.c11_opp[m] + self.d1[m] * self.d1[o] * w;
            self.c22_opp[m] += other.c22_opp[m] + self.d2[m] * self.d2[o] * w;
            self.c12_same[m] += other.c12_same[m] + self.d1[m] * self.d2[m] * w;
            self.c12_opp[m] += other.c12_opp[m] + self.d1[m] * self.d2[o] * w;
            self.c1z_1[m] += other.c1z_1[m] + self.d1[0] * self.d1[m] * w;
            self.c2z_2[m] += other.c2z_2[m] + self.d2[0] * self.d2[m] * w;
            self.c1z_2[m] += other.c1z_2[m] + self.d1[0] * self.d2[m] * w;
            self.c1_2z[m] += other.c1_2z[m] + self.d1[m] * self.d2[0] * w;
        }
        for m in 0..self.n {
            self.mean1[m] += self.d1[m] * nb / total;
            self.mean2[m] += self.d2[m] * nb / total;
        }
        self.count += other.count;
        Ok(())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n {
            return Err(Error::AccumulatorMismatch(format!(
                "mode {mode} outside tracked range 0..{}",
                self.n
            )));
        }
        if self.count < 2 {
            return Err(Error::InsufficientSamples {
                have: self.count,
                need: 2,
            });
        }
        Ok(())
    }

    fn mean(&self, field: Field, m: usize) -> f64 {
        match field {
            Field::Fundamental => self.mean1[m],
            Field::SecondHarmonic => self.mean2[m],
        }
    }

    fn var_q(&self, field: Field, m: usize) -> f64 {
        let m2 = match field {
            Field::Fundamental => self.m2_1[m],
            Field::SecondHarmonic => self.m2_2[m],
        };
        m2 / (self.count as f64 - 1.0)
    }

    /// Normally ordered photon-number variance at one mode.
    fn var_n(&self, field: Field, m: usize) -> Result<f64> {
        let v = self.var_q(field, m) - self.kappa * self.mean(field, m);
        if v <= 0.0 {
            return Err(Error::DegenerateVariance(format!(
                "ordered variance non-positive ({v:.3e}) at mode {m}; the mode \
                 may hold too few photons for normalized statistics"
            )));
        }
        Ok(v)
    }

    fn cov(&self, series: &[f64], m: usize) -> f64 {
        series[m] / (self.count as f64 - 1.0)
    }

    /// Shot-noise-normalized sum/difference variance for intensities at two
    /// generally distinct tracked slots.
    fn pm_statistic(
        &self,
        mean_a: f64,
        var_a: f64,
        mean_b: f64,
        var_b: f64,
        cov_ab: f64,
        plus: bool,
        m: usize,
    ) -> Result<f64> {
        let k = self.kappa;
        let denom = k * (mean_a + mean_b) - 2.0 * k * k;
        if denom <= 0.0 {
            return Err(Error::DegenerateVariance(format!(
                "shot-noise reference non-positive at mode {m}"
            )));
        }
        let combined = if plus {
            var_a + var_b + 2.0 * cov_ab
        } else {
            var_a + var_b - 2.0 * cov_ab
        };
        Ok((combined - k * (mean_a + mean_b)) / denom)
    }

    /// Evaluate one normalized observable at one mode.
    pub fn statistic(&self, stat: Statistic, mode: usize) -> Result<f64> {
        self.check_mode(mode)?;
        let m = mode;
        let o = self.opp[m];
        let k = self.kappa;
        use Field::*;
        use Statistic::*;
        match stat {
            MeanPhoton(f) => Ok(self.mean(f, m) - k),
            NumberCorrelation(f) => {
                if o == m {
                    // ⟨:n²:⟩ − ⟨n⟩² over itself: exactly one by construction
                    self.var_n(f, m)?;
                    return Ok(1.0);
                }
                let series = match f {
                    Fundamental => &self.c11_opp,
                    SecondHarmonic => &self.c22_opp,
                };
                Ok(self.cov(series, m) / (self.var_n(f, m)? * self.var_n(f, o)?).sqrt())
            }
            CrossNumberOpposite => Ok(self.cov(&self.c12_opp, m)
                / (self.var_n(Fundamental, m)? * self.var_n(SecondHarmonic, o)?).sqrt()),
            CrossNumberSame => Ok(self.cov(&self.c12_same, m)
                / (self.var_n(Fundamental, m)? * self.var_n(SecondHarmonic, m)?).sqrt()),
            IntensityDifference(f) => {
                if o == m {
                    // I − I vanishes identically
                    self.var_n(f, m)?;
                    return Ok(0.0);
                }
                let series = match f {
                    Fundamental => &self.c11_opp,
                    SecondHarmonic => &self.c22_opp,
                };
                self.pm_statistic(
                    self.mean(f, m),
                    self.var_q(f, m),
                    self.mean(f, o),
                    self.var_q(f, o),
                    self.cov(series, m),
                    false,
                    m,
                )
            }
            IntensitySum(f) => {
                if o == m {
                    // a self-conjugate mode reduces to its Fano factor
                    // Var(n)/(κ⟨n⟩), which is 1 for a coherent state just
                    // like the two-mode normalization
                    let mean = self.mean(f, m);
                    let denom = k * mean - k * k;
                    if denom <= 0.0 {
                        return Err(Error::DegenerateVariance(format!(
                            "shot-noise reference non-positive at mode {m}"
                        )));
                    }
                    return Ok((self.var_q(f, m) - k * mean) / denom);
                }
                let series = match f {
                    Fundamental => &self.c11_opp,
                    SecondHarmonic => &self.c22_opp,
                };
                self.pm_statistic(
                    self.mean(f, m),
                    self.var_q(f, m),
                    self.mean(f, o),
                    self.var_q(f, o),
                    self.cov(series, m),
                    true,
                    m,
                )
            }
            CrossDifferenceOpposite | CrossSumOpposite => self.pm_statistic(
                self.mean(Fundamental, m),
                self.var_q(Fundamental, m),
                self.mean(SecondHarmonic, o),
                self.var_q(SecondHarmonic, o),
                self.cov(&self.c12_opp, m),
                matches!(stat, CrossSumOpposite),
                m,
            ),
            CrossDifferenceSame | CrossSumSame => self.pm_statistic(
                self.mean(Fundamental, m),
                self.var_q(Fundamental, m),
                self.mean(SecondHarmonic, m),
                self.var_q(SecondHarmonic, m),
                self.cov(&self.c12_same, m),
                matches!(stat, CrossSumSame),
                m,
            ),
            NumberCorrelationFromZero(f) => {
                if m == 0 {
                    self.var_n(f, 0)?;
                    return Ok(1.0);
                }
                let series = match f {
                    Fundamental => &self.c1z_1,
                    SecondHarmonic => &self.c2z_2,
                };
                Ok(self.cov(series, m) / (self.var_n(f, 0)? * self.var_n(f, m)?).sqrt())
            }
            CrossNumberZeroTo => Ok(self.cov(&self.c1z_2, m)
                / (self.var_n(Fundamental, 0)? * self.var_n(SecondHarmonic, m)?).sqrt()),
            CrossNumberToZero => Ok(self.cov(&self.c1_2z, m)
                / (self.var_n(Fundamental, m)? * self.var_n(SecondHarmonic, 0)?).sqrt()),
        }
    }
}

/// Block-partitioned accumulator: samples stream into `blocks` equally sized
/// [`CorrelationAccumulator`]s, enabling delete-one-block jackknife errors
/// that absorb temporal autocorrelation (provided blocks span several
/// correlation times).
#[derive(Debug, Clone)]
pub struct BlockedAccumulator {
    blocks: Vec<CorrelationAccumulator>,
    per_block: u64,
    pushed: u64,
}

impl BlockedAccumulator {
    /// `expected_pushes` sets the block boundaries; spillover lands in the
    /// last block.
    pub fn new(
        grid: &Grid1D,
        n_th: f64,
        blocks: usize,
        expected_pushes: u64,
    ) -> Result<BlockedAccumulator> {
        if blocks < 2 {
            return Err(Error::InvalidConfig(
                "jackknife needs at least 2 blocks".into(),
            ));
        }
        let proto = CorrelationAccumulator::new(grid, n_th)?;
        Ok(BlockedAccumulator {
            blocks: vec![proto; blocks],
            per_block: (expected_pushes / blocks as u64).max(1),
            pushed: 0,
        })
    }

    pub fn push(&mut self, far1: &[C64], far2: &[C64]) -> Result<()> {
        let idx = ((self.pushed / self.per_block) as usize).min(self.blocks.len() - 1);
        self.blocks[idx].push(far1, far2)?;
        self.pushed += 1;
        Ok(())
    }

    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    /// Merge block-by-block, so block i keeps holding the i-th time segment
    /// of every merged stream (independent trajectories stay independent
    /// across blocks).
    pub fn merge_blockwise(&mut self, other: &BlockedAccumulator) -> Result<()> {
        if other.blocks.len() != self.blocks.len() {
            return Err(Error::AccumulatorMismatch(format!(
                "cannot merge {} blocks into {}",
                other.blocks.len(),
                self.blocks.len()
            )));
        }
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.merge(b)?;
        }
        self.pushed += other.pushed;
        Ok(())
    }

    /// Precompute the full merge and all delete-one merges.
    pub fn jackknife(&self) -> Result<JackknifeView> {
        let occupied: Vec<&CorrelationAccumulator> =
            self.blocks.iter().filter(|b| b.count() > 0).collect();
        if occupied.len() < 2 {
            return Err(Error::InsufficientSamples {
                have: occupied.len() as u64,
                need: 2,
            });
        }
        let mut full = occupied[0].clone();
        for b in &occupied[1..] {
            full.merge(b)?;
        }
        let mut drop_one = Vec::with_capacity(occupied.len());
        for skip in 0..occupied.len() {
            let mut acc: Option<CorrelationAccumulator> = None;
            for (i, b) in occupied.iter().enumerate() {
                if i == skip {
                    continue;
                }
                match &mut acc {
                    None => acc = Some((*b).clone()),
                    Some(a) => a.merge(b)?,
                }
            }
            drop_one.push(acc.expect("at least two occupied blocks"));
        }
        Ok(JackknifeView { full, drop_one })
    }
}

/// Frozen merge hierarchy for jackknife evaluation of any [`Statistic`].
pub struct JackknifeView {
    full: CorrelationAccumulator,
    drop_one: Vec<CorrelationAccumulator>,
}

impl JackknifeView {
    pub fn accumulator(&self) -> &CorrelationAccumulator {
        &self.full
    }

    /// Point estimate from all samples, standard error from delete-one-block
    /// replicates.
    pub fn estimate(&self, stat: Statistic, mode: usize) -> Result<CorrelationEstimate> {
        let value = self.full.statistic(stat, mode)?;
        let reps: Vec<f64> = self
            .drop_one
            .iter()
            .map(|acc| acc.statistic(stat, mode))
            .collect::<Result<_>>()?;
        let b = reps.len() as f64;
        let mean = reps.iter().sum::<f64>() / b;
        let ss: f64 = reps.iter().map(|r| (r - mean) * (r - mean)).sum();
        let se = ((b - 1.0) / b * ss).sqrt();
        Ok(CorrelationEstimate { value, se })
    }

    /// Evaluate one statistic across a set of modes.
    pub fn spectrum(&self, stat: Statistic, modes: &[usize]) -> Result<Vec<CorrelationEstimate>> {
        modes.iter().map(|&m| self.estimate(stat, m)).collect()
    }
}

/// Snapshot sink that transforms fields to the far field and streams the
/// intensities into a [`BlockedAccumulator`].
pub struct AccumulatingSink {
    spectral: Spectral,
    far1: Vec<C64>,
    far2: Vec<C64>,
    acc: BlockedAccumulator,
}

impl AccumulatingSink {
    pub fn new(grid: Grid1D, n_th: f64, blocks: usize, expected_pushes: u64) -> Result<Self> {
        let acc = BlockedAccumulator::new(&grid, n_th, blocks, expected_pushes)?;
        let n = grid.n();
        Ok(AccumulatingSink {
            spectral: Spectral::new(grid),
            far1: vec![C64::ZERO; n],
            far2: vec![C64::ZERO; n],
            acc,
        })
    }

    pub fn into_accumulator(self) -> BlockedAccumulator {
        self.acc
    }

    pub fn accumulator(&self) -> &BlockedAccumulator {
        &self.acc
    }
}

impl SnapshotSink for AccumulatingSink {
    fn push(&mut self, _time: f64, _trajectory: u64, fields: &FieldPair) -> Result<()> {
        if fields.len() != self.far1.len() {
            return Err(Error::AccumulatorMismatch(format!(
                "snapshot holds {} modes, sink expects {}",
                fields.len(),
                self.far1.len()
            )));
        }
        self.spectral.far_field_into(&fields.a1, &mut self.far1);
        self.spectral.far_field_into(&fields.a2, &mut self.far2);
        self.acc.push(&self.far1, &self.far2)
    }
}

/// Dyadic-lag autocorrelation probe for a scalar observable stream.
///
/// Tracks ρ(lag) at lags 1, 2, 4, …, 2^(levels−1) from a single pass and
/// reports a trapezoidal estimate of the integrated autocorrelation time.
/// Intended as block-length guidance, not as an error estimator.
#[derive(Debug, Clone)]
pub struct AutocorrDiagnostic {
    ring: Vec<f64>,
    count: u64,
    mean: f64,
    m2: f64,
    lag_sums: Vec<(f64, u64)>,
}

impl AutocorrDiagnostic {
    /// `levels` dyadic lags; the ring buffer holds 2^(levels−1) samples.
    pub fn new(levels: usize) -> AutocorrDiagnostic {
        let levels = levels.clamp(1, 24);
        AutocorrDiagnostic {
            ring: vec![0.0; 1usize << (levels - 1)],
            count: 0,
            mean: 0.0,
            m2: 0.0,
            lag_sums: vec![(0.0, 0); levels],
        }
    }

    pub fn push(&mut self, x: f64) {
        let cap = self.ring.len() as u64;
        for (j, (sum, n)) in self.lag_sums.iter_mut().enumerate() {
            let lag = 1u64 << j;
            if self.count >= lag {
                let past = self.ring[((self.count - lag) % cap) as usize];
                *sum += x * past;
                *n += 1;
            }
        }
        self.ring[(self.count % cap) as usize] = x;
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Normalized autocorrelation estimates (lag, ρ).
    pub fn rho(&self) -> Vec<(u64, f64)> {
        if self.count < 2 || self.m2 <= 0.0 {
            return Vec::new();
        }
        let var = self.m2 / (self.count as f64 - 1.0);
        self.lag_sums
            .iter()
            .enumerate()
            .filter(|(_, (_, n))| *n > 1)
            .map(|(j, (sum, n))| {
                let lag = 1u64 << j;
                (lag, (sum / *n as f64 - self.mean * self.mean) / var)
            })
            .collect()
    }

    /// Integrated autocorrelation time from a trapezoid over the dyadic
    /// lags, truncated at the first non-positive ρ.
    pub fn tau_int(&self) -> f64 {
        let rho = self.rho();
        let mut tau = 1.0;
        let mut prev: (u64, f64) = (0, 1.0);
        for (lag, r) in rho {
            if r <= 0.0 {
                break;
            }
            tau += (lag - prev.0) as f64 * (r + prev.1);
            prev = (lag, r);
        }
        tau
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn grid() -> Grid1D {
        Grid1D::new(16, 16.0).unwrap()
    }

    fn circular(rng: &mut ChaCha8Rng, scale: f64) -> C64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * (scale / 2.0f64.sqrt())
    }

    #[test]
    fn merge_equals_single_stream() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = g.n();
        let mut whole = CorrelationAccumulator::new(&g, 1e6).unwrap();
        let mut first = CorrelationAccumulator::new(&g, 1e6).unwrap();
        let mut second = CorrelationAccumulator::new(&g, 1e6).unwrap();
        for i in 0..40 {
            let f1: Vec<C64> = (0..n).map(|_| circular(&mut rng, 1.0)).collect();
            let f2: Vec<C64> = (0..n).map(|_| circular(&mut rng, 0.5)).collect();
            whole.push(&f1, &f2).unwrap();
            if i < 17 {
                first.push(&f1, &f2).unwrap();
            } else {
                second.push(&f1, &f2).unwrap();
            }
        }
        first.merge(&second).unwrap();
        assert_eq!(first.count(), whole.count());
        for m in 0..n {
            assert!((first.mean1[m] - whole.mean1[m]).abs() < 1e-12);
            assert!((first.m2_1[m] - whole.m2_1[m]).abs() < 1e-12);
            assert!((first.c12_opp[m] - whole.c12_opp[m]).abs() < 1e-12);
            assert!((first.c1z_2[m] - whole.c1z_2[m]).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_samples_have_no_excess_correlations() {
        // circular noise at the vacuum scale: photon numbers vanish and the
        // normalized statistics must degenerate (no photons to normalize by)
        let g = grid();
        let n_th = 1e4;
        let kappa = 1.0 / (n_th * g.dk());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut acc = CorrelationAccumulator::new(&g, n_th).unwrap();
        let n = g.n();
        for _ in 0..6000 {
            let f1: Vec<C64> = (0..n).map(|_| circular(&mut rng, kappa.sqrt())).collect();
            let f2: Vec<C64> = (0..n).map(|_| circular(&mut rng, kappa.sqrt())).collect();
            acc.push(&f1, &f2).unwrap();
        }
        let mean_n = acc.statistic(Statistic::MeanPhoton(Field::Fundamental), 3).unwrap();
        let se = kappa / (6000f64).sqrt();
        assert!(mean_n.abs() < 4.0 * se, "vacuum photon excess {mean_n}");
        // ordered variance then hovers near zero: degenerate roughly half the
        // time, tiny when positive — accept either outcome
        match acc.statistic(Statistic::NumberCorrelation(Field::Fundamental), 3) {
            Ok(v) => assert!(v.abs() < 1.0),
            Err(Error::DegenerateVariance(_)) => {}
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn coherent_state_sits_at_the_shot_noise_boundary() {
        // displaced circular noise: Poissonian statistics, C^± must be 1
        let g = grid();
        let n_th = 100.0;
        let kappa = 1.0 / (n_th * g.dk());
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = g.n();
        let alpha1 = C64::new(40.0 * kappa.sqrt(), 0.0);
        let alpha2 = C64::new(0.0, 25.0 * kappa.sqrt());
        let mut acc = BlockedAccumulator::new(&g, n_th, 8, 48_000).unwrap();
        let mut f1 = vec![C64::ZERO; n];
        let mut f2 = vec![C64::ZERO; n];
        for _ in 0..48_000 {
            for m in 0..n {
                f1[m] = alpha1 + circular(&mut rng, kappa.sqrt());
                f2[m] = alpha2 + circular(&mut rng, kappa.sqrt());
            }
            acc.push(&f1, &f2).unwrap();
        }
        let view = acc.jackknife().unwrap();
        for stat in [
            Statistic::IntensityDifference(Field::Fundamental),
            Statistic::IntensitySum(Field::Fundamental),
            Statistic::IntensityDifference(Field::SecondHarmonic),
            Statistic::CrossDifferenceOpposite,
            Statistic::CrossSumSame,
        ] {
            let e = view.estimate(stat, 5).unwrap();
            assert!(
                (e.value - 1.0).abs() < 4.0 * e.se.max(0.02),
                "{stat:?}: {} ± {}",
                e.value,
                e.se
            );
        }
        // photon-number correlations of independent modes vanish
        for stat in [
            Statistic::NumberCorrelation(Field::Fundamental),
            Statistic::CrossNumberOpposite,
            Statistic::CrossNumberSame,
            Statistic::CrossNumberZeroTo,
            Statistic::CrossNumberToZero,
        ] {
            let e = view.estimate(stat, 5).unwrap();
            assert!(
                e.value.abs() < 4.0 * e.se.max(0.02),
                "{stat:?}: {} ± {}",
                e.value,
                e.se
            );
        }
    }

    #[test]
    fn perfect_twin_beams_reach_the_correlation_ceiling() {
        // two-mode squeezed vacuum at (k, −k): photon numbers of the pair are
        // identical, so C^n → 1 and C^− → 0 while C^+ = 2cosh²r ≫ 1. Its
        // Q-distribution samples are α_k = √κ ch z₁, α_−k = √κ (sh z₁* + z₂*)
        // with z₁, z₂ unit circular Gaussians (Cholesky of the Q covariance).
        let g = grid();
        let n_th = 50.0;
        let kappa = 1.0 / (n_th * g.dk());
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = g.n();
        let m = 3;
        let o = g.opposite_mode(m);
        let (sh, ch) = (60.0f64.sqrt(), 61.0f64.sqrt());
        let mut acc = CorrelationAccumulator::new(&g, n_th).unwrap();
        let mut f1 = vec![C64::ZERO; n];
        let f2 = vec![C64::ZERO; n];
        for _ in 0..20_000 {
            let z1 = circular(&mut rng, 1.0);
            let z2 = circular(&mut rng, 1.0);
            f1[m] = kappa.sqrt() * ch * z1;
            f1[o] = kappa.sqrt() * (sh * z1.conj() + z2.conj());
            acc.push(&f1, &f2).unwrap();
        }
        let cn = acc
            .statistic(Statistic::NumberCorrelation(Field::Fundamental), m)
            .unwrap();
        assert!(cn > 0.95, "twin-beam number correlation {cn}");
        let cm = acc
            .statistic(Statistic::IntensityDifference(Field::Fundamental), m)
            .unwrap();
        assert!(cm.abs() < 0.15, "twin-beam difference variance {cm}");
        let cp = acc
            .statistic(Statistic::IntensitySum(Field::Fundamental), m)
            .unwrap();
        assert!(
            (cp - 2.0 * ch * ch).abs() < 0.1 * 2.0 * ch * ch,
            "twin-beam sum variance {cp} vs {}",
            2.0 * ch * ch
        );
    }

    #[test]
    fn rejects_mismatched_shapes_and_scales() {
        let g = grid();
        let mut a = CorrelationAccumulator::new(&g, 1e4).unwrap();
        let short = vec![C64::ZERO; 4];
        assert!(matches!(
            a.push(&short, &short),
            Err(Error::AccumulatorMismatch(_))
        ));
        let b = CorrelationAccumulator::new(&g, 2e4).unwrap();
        assert!(matches!(a.merge(&b), Err(Error::AccumulatorMismatch(_))));
        let other = CorrelationAccumulator::new(&Grid1D::new(8, 8.0).unwrap(), 1e4).unwrap();
        assert!(matches!(
            a.merge(&other),
            Err(Error::AccumulatorMismatch(_))
        ));
    }

    #[test]
    fn autocorrelation_probe_tracks_an_ar1_chain() {
        // AR(1) with coefficient φ: ρ(lag) = φ^lag, τ_int = (1+φ)/(1−φ)
        let phi = 0.8f64;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut diag = AutocorrDiagnostic::new(10);
        let mut x = 0.0f64;
        for _ in 0..400_000 {
            let noise: f64 = rng.sample(StandardNormal);
            x = phi * x + noise;
            diag.push(x);
        }
        for (lag, r) in diag.rho() {
            if lag <= 8 {
                let want = phi.powi(lag as i32);
                assert!((r - want).abs() < 0.02, "lag {lag}: {r} vs {want}");
            }
        }
        let tau = diag.tau_int();
        let want = (1.0 + phi) / (1.0 - phi);
        assert!(
            (tau - want).abs() < 0.35 * want,
            "τ_int {tau} vs AR(1) value {want}"
        );
    }
}
