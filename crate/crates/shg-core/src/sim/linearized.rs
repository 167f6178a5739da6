//! Exact-propagator simulation of the linearized per-mode dynamics.
//!
//! For one mode pair (k, −k) the fluctuation 4-vector
//! b = (β1(k), β1*(−k), β2(k), β2*(−k)) obeys a linear Langevin equation
//! db = M(k) b dt + dW with circular noise ⟨dW dW†⟩ = C dt,
//!
//! ```text
//! C = [[1, −A2/2, 0, 0], [−A2*/2, 1, 0, 0], [0, 0, γ, 0], [0, 0, 0, γ]]
//! ```
//!
//! in natural units (the 2/n_th strength divides out of all normalized
//! observables). The chain
//!
//! ```text
//! b ← e^{MΔt} b + w,   ⟨w w†⟩ = ∫₀^Δt e^{Ms} C e^{M†s} ds
//! ```
//!
//! samples the exact stationary distribution at any Δt, so its moments
//! estimate the G-functions directly — an end-to-end check of the
//! semi-analytic spectra that shares no code path with them beyond the mode
//! matrix itself.
//!
//! At k = 0 the pair collapses (β1*(−k) = β1*), leaving a real-linear system
//! in the quadratures of (β1, β2); [`simulate_linearized_k0`] integrates that
//! constrained form and reports the same moment layout.

use crate::error::{Error, Result};
use crate::linear::{eigensystem, mode_matrix};
use crate::params::Params;
use crate::steady::SteadyState;
use crate::C64;
use ndarray::Array2;
use ndarray_linalg::{Cholesky, UPLO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Sampling plan for the linearized chains.
#[derive(Debug, Clone, Copy)]
pub struct LinearizedConfig {
    /// Chain step; any value samples the stationary law exactly, larger
    /// values decorrelate faster.
    pub dt: f64,
    /// Steps discarded before accumulation.
    pub burn_in: u64,
    /// Retained samples.
    pub samples: u64,
    pub seed: u64,
    /// Blocks for the standard-error estimate.
    pub blocks: usize,
}

impl Default for LinearizedConfig {
    fn default() -> Self {
        LinearizedConfig {
            dt: 0.25,
            burn_in: 2_000,
            samples: 200_000,
            seed: 7,
            blocks: 16,
        }
    }
}

/// Moment estimates in G-function layout, with per-entry standard errors.
#[derive(Debug, Clone, Copy)]
pub struct LinearizedMoments {
    pub minus: [[C64; 2]; 2],
    pub plus: [[C64; 2]; 2],
    pub se_minus: [[f64; 2]; 2],
    pub se_plus: [[f64; 2]; 2],
    pub samples: u64,
}

/// Blocked mean/SE over a series of 7 complex moments:
/// (m11, m12, m22, p11, p12, p21, p22).
struct BlockStats {
    block_sums: Vec<[C64; 7]>,
    per_block: u64,
    in_block: u64,
    current: [C64; 7],
}

impl BlockStats {
    fn new(samples: u64, blocks: usize) -> BlockStats {
        BlockStats {
            block_sums: Vec::with_capacity(blocks),
            per_block: (samples / blocks as u64).max(1),
            in_block: 0,
            current: [C64::ZERO; 7],
        }
    }

    fn push(&mut self, vals: [C64; 7]) {
        for (c, v) in self.current.iter_mut().zip(vals) {
            *c += v;
        }
        self.in_block += 1;
        if self.in_block == self.per_block {
            self.block_sums.push(self.current);
            self.current = [C64::ZERO; 7];
            self.in_block = 0;
        }
    }

    fn finish(mut self) -> ([C64; 7], [f64; 7], u64) {
        if self.in_block > 0 {
            // fold the remainder into the last block
            if let Some(last) = self.block_sums.last_mut() {
                for (c, v) in last.iter_mut().zip(self.current) {
                    *c += v;
                }
            } else {
                self.block_sums.push(self.current);
            }
        }
        let total: u64 = self.per_block * self.block_sums.len() as u64 + self.in_block;
        let nb = self.block_sums.len().max(1) as f64;
        let mut mean = [C64::ZERO; 7];
        for sums in &self.block_sums {
            for (m, s) in mean.iter_mut().zip(sums) {
                *m += s;
            }
        }
        for m in &mut mean {
            *m /= C64::from(total as f64);
        }
        // block means: sums are over (roughly) per_block samples each
        let mut se = [0.0; 7];
        if self.block_sums.len() > 1 {
            for (i, s) in se.iter_mut().enumerate() {
                let mut var = 0.0;
                for sums in &self.block_sums {
                    let bm = sums[i] / C64::from(self.per_block as f64);
                    var += (bm - mean[i]).norm_sqr();
                }
                *s = (var / (nb * (nb - 1.0))).sqrt();
            }
        }
        (mean, se, total)
    }
}

fn moments_from(stats: BlockStats) -> LinearizedMoments {
    let (mean, se, total) = stats.finish();
    let minus = [[mean[0], mean[1]], [mean[1].conj(), mean[2]]];
    let se_minus = [[se[0], se[1]], [se[1], se[2]]];
    let plus = [[mean[3], mean[4]], [mean[5], mean[6]]];
    let se_plus = [[se[3], se[4]], [se[5], se[6]]];
    LinearizedMoments {
        minus,
        plus,
        se_minus,
        se_plus,
        samples: total,
    }
}

fn to_fixed(m: &Array2<C64>) -> [[C64; 4]; 4] {
    let mut out = [[C64::ZERO; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    out
}

fn matvec(m: &[[C64; 4]; 4], v: &[C64; 4]) -> [C64; 4] {
    let mut out = [C64::ZERO; 4];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
    }
    out
}

/// Lower-triangular factor of a Hermitian PSD matrix, with a tiny diagonal
/// jitter to absorb rounding.
fn chol_psd(q: &Array2<C64>) -> Result<Array2<C64>> {
    let n = q.nrows();
    let mut h = Array2::<C64>::zeros((n, n));
    let mut scale = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = 0.5 * (q[(i, j)] + q[(j, i)].conj());
        }
        scale = scale.max(h[(i, i)].re.abs());
    }
    for i in 0..n {
        h[(i, i)] += C64::from(scale * 1e-13);
    }
    h.cholesky(UPLO::Lower)
        .map_err(|e| Error::EigenFailure(format!("noise covariance factorization: {e}")))
}

fn noise_c(p: &Params, s: &SteadyState) -> Array2<C64> {
    let g = p.gamma;
    let a2 = s.a2;
    let mut c = Array2::<C64>::zeros((4, 4));
    c[(0, 0)] = C64::ONE;
    c[(1, 1)] = C64::ONE;
    c[(0, 1)] = -0.5 * a2;
    c[(1, 0)] = -0.5 * a2.conj();
    c[(2, 2)] = C64::from(g);
    c[(3, 3)] = C64::from(g);
    c
}

/// Exact discrete propagator pair (U, L) with U = e^{MΔt} and L L† the
/// integrated noise covariance over Δt, from an eigendecomposition of M.
fn propagator(
    m: &Array2<C64>,
    c: &Array2<C64>,
    dt: f64,
    k: f64,
    conjugate_pairs: bool,
) -> Result<(Array2<C64>, Array2<C64>)> {
    let eig = eigensystem(m, k)?;
    let rate = eig.values[0].re;
    if rate >= 0.0 {
        return Err(Error::AboveThreshold { k, rate });
    }
    let v = &eig.vectors;
    let t = &eig.inverse;

    let mut u = Array2::<C64>::zeros((4, 4));
    for l in 0..4 {
        let e = (eig.values[l] * dt).exp();
        for i in 0..4 {
            for j in 0..4 {
                u[(i, j)] += v[(i, l)] * e * t[(l, j)];
            }
        }
    }

    // project C on the eigenbasis: Ĉ = T C T† (or T C Tᵀ for the real form)
    let mut c_hat = Array2::<C64>::zeros((4, 4));
    for l in 0..4 {
        for mm in 0..4 {
            let mut acc = C64::ZERO;
            for a in 0..4 {
                for b in 0..4 {
                    let tb = if conjugate_pairs {
                        t[(mm, b)].conj()
                    } else {
                        t[(mm, b)]
                    };
                    acc += t[(l, a)] * c[(a, b)] * tb;
                }
            }
            c_hat[(l, mm)] = acc;
        }
    }
    let mut q = Array2::<C64>::zeros((4, 4));
    for l in 0..4 {
        for mm in 0..4 {
            let pair = if conjugate_pairs {
                eig.values[l] + eig.values[mm].conj()
            } else {
                eig.values[l] + eig.values[mm]
            };
            let w = c_hat[(l, mm)] * (1.0 - (pair * dt).exp()) / -pair;
            for i in 0..4 {
                for j in 0..4 {
                    let vb = if conjugate_pairs {
                        v[(j, mm)].conj()
                    } else {
                        v[(j, mm)]
                    };
                    q[(i, j)] += v[(i, l)] * w * vb;
                }
            }
        }
    }
    let l = chol_psd(&q)?;
    Ok((u, l))
}

/// Sample the stationary moments of the mode pair (k, −k), k ≠ 0.
pub fn simulate_linearized(
    p: &Params,
    s: &SteadyState,
    k: f64,
    cfg: &LinearizedConfig,
) -> Result<LinearizedMoments> {
    if k == 0.0 {
        return simulate_linearized_k0(p, s, cfg);
    }
    let m = mode_matrix(p, s, k);
    let c = noise_c(p, s);
    let (u, l) = propagator(&m, &c, cfg.dt, k, true)?;
    let (u, l) = (to_fixed(&u), to_fixed(&l));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut b = [C64::ZERO; 4];
    let mut stats = BlockStats::new(cfg.samples, cfg.blocks);
    let root_half = std::f64::consts::FRAC_1_SQRT_2;
    let mut zeta = [C64::ZERO; 4];
    for step in 0..cfg.burn_in + cfg.samples {
        for z in &mut zeta {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z = C64::new(re * root_half, im * root_half);
        }
        let drift = matvec(&u, &b);
        let kick = matvec(&l, &zeta);
        for i in 0..4 {
            b[i] = drift[i] + kick[i];
        }
        if step >= cfg.burn_in {
            // components 1 and 3 hold conjugated mirror amplitudes, so the
            // anomalous pair moments ⟨β_i(k) β_j(−k)⟩ conjugate them back
            stats.push([
                b[0] * b[0].conj(),
                b[0] * b[2].conj(),
                b[2] * b[2].conj(),
                b[0] * b[1].conj(),
                b[0] * b[3].conj(),
                b[2] * b[1].conj(),
                b[2] * b[3].conj(),
            ]);
        }
    }
    Ok(moments_from(stats))
}

/// Sample the stationary moments of the homogeneous mode (k = 0), where the
/// mirror constraint reduces the dynamics to the real quadrature 4-vector
/// (Re β1, Im β1, Re β2, Im β2).
pub fn simulate_linearized_k0(
    p: &Params,
    s: &SteadyState,
    cfg: &LinearizedConfig,
) -> Result<LinearizedMoments> {
    // real drift matrix: columns are images of the quadrature basis vectors
    let s1 = C64::new(-1.0, p.delta1);
    let s2 = C64::new(-p.gamma, p.delta2);
    let (a1, a2) = (s.a1, s.a2);
    let mut r = Array2::<C64>::zeros((4, 4));
    for (col, (b1, b2)) in [
        (C64::ONE, C64::ZERO),
        (C64::I, C64::ZERO),
        (C64::ZERO, C64::ONE),
        (C64::ZERO, C64::I),
    ]
    .into_iter()
    .enumerate()
    {
        let f1 = s1 * b1 + a2 * b1.conj() + a1.conj() * b2;
        let f2 = -a1 * b1 + s2 * b2;
        r[(0, col)] = C64::from(f1.re);
        r[(1, col)] = C64::from(f1.im);
        r[(2, col)] = C64::from(f2.re);
        r[(3, col)] = C64::from(f2.im);
    }
    // quadrature noise covariance
    let mut c = Array2::<C64>::zeros((4, 4));
    c[(0, 0)] = C64::from((2.0 - a2.re) / 4.0);
    c[(1, 1)] = C64::from((2.0 + a2.re) / 4.0);
    c[(0, 1)] = C64::from(-a2.im / 4.0);
    c[(1, 0)] = c[(0, 1)];
    c[(2, 2)] = C64::from(0.5 * p.gamma);
    c[(3, 3)] = C64::from(0.5 * p.gamma);

    let (u, l) = propagator(&r, &c, cfg.dt, 0.0, false)?;
    // the propagator of a real system is real; discard rounding residue
    let u = to_fixed(&u.map(|z| C64::from(z.re)));
    let l = to_fixed(&l.map(|z| C64::from(z.re)));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut v = [C64::ZERO; 4];
    let mut stats = BlockStats::new(cfg.samples, cfg.blocks);
    let mut z = [C64::ZERO; 4];
    for step in 0..cfg.burn_in + cfg.samples {
        for zi in &mut z {
            let x: f64 = rng.sample(StandardNormal);
            *zi = C64::from(x);
        }
        let drift = matvec(&u, &v);
        let kick = matvec(&l, &z);
        for i in 0..4 {
            v[i] = drift[i] + kick[i];
        }
        if step >= cfg.burn_in {
            let b1 = C64::new(v[0].re, v[1].re);
            let b2 = C64::new(v[2].re, v[3].re);
            stats.push([
                b1 * b1.conj(),
                b1 * b2.conj(),
                b2 * b2.conj(),
                b1 * b1,
                b1 * b2,
                b2 * b1,
                b2 * b2,
            ]);
        }
    }
    Ok(moments_from(stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::steady_states;

    fn params(pump: f64) -> Params {
        Params {
            delta1: 2.0,
            delta2: -2.0,
            gamma: 0.5,
            pump,
            n_th: 1e8,
        }
    }

    #[test]
    fn vacuum_chain_reproduces_vacuum_moments() {
        let p = params(0.0);
        let s = SteadyState::vacuum();
        let cfg = LinearizedConfig {
            samples: 60_000,
            burn_in: 500,
            seed: 21,
            ..Default::default()
        };
        let m = simulate_linearized(&p, &s, 1.0, &cfg).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 0.5 } else { 0.0 };
                let dev = (m.minus[i][j] - C64::from(want)).norm();
                assert!(
                    dev < 4.0 * m.se_minus[i][j].max(1e-3),
                    "G-[{i}][{j}] off by {dev} (se {})",
                    m.se_minus[i][j]
                );
                let devp = m.plus[i][j].norm();
                assert!(devp < 4.0 * m.se_plus[i][j].max(1e-3));
            }
        }
    }

    #[test]
    fn constrained_k0_chain_reproduces_vacuum_moments() {
        let p = params(0.0);
        let s = SteadyState::vacuum();
        let cfg = LinearizedConfig {
            samples: 60_000,
            burn_in: 500,
            seed: 22,
            ..Default::default()
        };
        let m = simulate_linearized_k0(&p, &s, &cfg).unwrap();
        for i in 0..2 {
            let dev = (m.minus[i][i] - C64::from(0.5)).norm();
            assert!(dev < 4.0 * m.se_minus[i][i].max(1e-3), "dev {dev}");
        }
        assert!(m.plus[0][0].norm() < 4.0 * m.se_plus[0][0].max(1e-3));
    }

    #[test]
    fn refuses_to_sample_an_unstable_mode() {
        let p = params(7.6);
        let s = steady_states(&p).unwrap()[0];
        match simulate_linearized(&p, &s, 1.829, &LinearizedConfig::default()) {
            Err(Error::AboveThreshold { rate, .. }) => assert!(rate > 0.0),
            other => panic!("expected above-threshold error, got {other:?}"),
        }
    }
}
