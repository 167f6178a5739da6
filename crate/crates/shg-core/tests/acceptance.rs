//! Acceptance gate: nine end-to-end criteria covering thresholds, the
//! linearized correlation theory, and the stochastic simulation pipeline.
//! Each criterion is reported as one PASS/FAIL line; run
//! `cargo test --test acceptance -- --nocapture` to see the report while
//! it executes (the full gate integrates ~5e7 SDE steps and takes a few
//! minutes on one core).

use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};
use shg_core::estimators::{
    AutocorrDiagnostic, BlockedAccumulator, CorrelationEstimate, Field, JackknifeView, Statistic,
};
use shg_core::grid::Spectral;
use shg_core::linear::growth_rate;
use shg_core::sim::{run_ensemble, run_trajectory, InitialState, RunConfig, SnapshotSink};
use shg_core::{
    find_threshold, predict, steady_states, C64, FieldPair, Grid1D, InstabilityKind, Params,
    SteadyState, ThresholdResult,
};
use std::time::Instant;

/// Reference operating point: Δ1 = 0, Δ2 = −2, γ = 1.
fn base_params() -> Params {
    Params {
        delta1: 0.0,
        delta2: -2.0,
        gamma: 1.0,
        pump: 0.0,
        n_th: 1e8,
    }
}

fn steady(p: &Params) -> SteadyState {
    steady_states(p).expect("steady state")[0]
}

// Frozen reference values for the operating point above (independently
// cross-checked against a high-precision reimplementation of the
// dispersion relation and the linearized moment equations).
const REF_E_T: f64 = 7.481757109268358;
const REF_K_C: f64 = 1.8290740953921558;
/// Widely tabulated rounded value; inconsistent with the dispersion
/// relation in its third decimal (see criterion 1 report line).
const TABULATED_K_C: f64 = 1.833;
/// cn11(k_c, −k_c) at E = 0.999 E_t: upper bound for the patterned state.
const REF_CN11_0999: f64 = 0.996556;
/// (cn11, cn12_opp, cn22) at k_c, E = 0.9 E_t.
const REF_TRIPLE_09: [f64; 3] = [0.752661, 0.498828, 0.349693];

#[derive(Default)]
struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn report(&mut self, idx: usize, name: &str, pass: bool, detail: &str) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {idx} [{verdict}] {name}: {detail}");
        if !pass {
            self.failures.push(format!("criterion {idx}: {detail}"));
        }
    }
}

// ---------------------------------------------------------------------------
// Monte-Carlo plumbing: far-field moment accumulation over an ensemble.
// ---------------------------------------------------------------------------

struct AccSink {
    spectral: Spectral,
    far1: Vec<C64>,
    far2: Vec<C64>,
    acc: BlockedAccumulator,
    diag: AutocorrDiagnostic,
    probe: usize,
}

impl AccSink {
    fn new(grid: &Grid1D, n_th: f64, blocks: usize, expected: u64, probe: usize) -> AccSink {
        AccSink {
            spectral: Spectral::new(*grid),
            far1: vec![C64::default(); grid.n()],
            far2: vec![C64::default(); grid.n()],
            acc: BlockedAccumulator::new(grid, n_th, blocks, expected).expect("accumulator"),
            diag: AutocorrDiagnostic::new(16),
            probe,
        }
    }
}

impl SnapshotSink for AccSink {
    fn push(&mut self, _t: f64, _id: u64, fields: &FieldPair) -> shg_core::Result<()> {
        self.spectral.far_field_into(&fields.a1, &mut self.far1);
        self.spectral.far_field_into(&fields.a2, &mut self.far2);
        self.diag.push(self.far1[self.probe].norm_sqr());
        self.acc.push(&self.far1, &self.far2)
    }
}

struct Mc {
    grid: Grid1D,
    view: JackknifeView,
    max_sh: f64,
    samples: u64,
}

struct McPlan {
    params: Params,
    grid: Grid1D,
    dt: f64,
    t_transient: f64,
    t_total: f64,
    stride: u64,
    trajectories: u64,
    blocks: usize,
    seed: u64,
    initial: InitialState,
    probe: usize,
}

fn run_mc(plan: &McPlan) -> Mc {
    let base = RunConfig {
        params: plan.params,
        grid: plan.grid,
        dt: plan.dt,
        t_transient: plan.t_transient,
        t_total: plan.t_total,
        record_stride: plan.stride,
        seed: plan.seed,
        trajectory: 0,
        noise: true,
        initial: plan.initial.clone(),
    };
    let expected = ((plan.t_total / plan.dt).round() as u64).div_ceil(plan.stride);
    let results = run_ensemble(&base, plan.trajectories, |_| {
        AccSink::new(
            &plan.grid,
            plan.params.n_th,
            plan.blocks,
            expected,
            plan.probe,
        )
    })
    .expect("ensemble");

    let mut merged: Option<BlockedAccumulator> = None;
    let mut max_sh = 0.0f64;
    for (summary, sink) in &results {
        max_sh = max_sh.max(summary.max_sh_modulus);
        match &mut merged {
            None => merged = Some(sink.acc.clone()),
            Some(acc) => acc.merge_blockwise(&sink.acc).expect("merge"),
        }
    }
    let acc = merged.expect("at least one trajectory");
    let samples = acc.pushed();
    Mc {
        grid: plan.grid,
        view: acc.jackknife().expect("jackknife"),
        max_sh,
        samples,
    }
}

/// The four opposite-pair photon-number correlations with their analytic
/// counterparts extracted from a prediction.
const NUMBER_FAMILIES: [(&str, Statistic); 4] = [
    ("cn11", Statistic::NumberCorrelation(Field::Fundamental)),
    ("cn22", Statistic::NumberCorrelation(Field::SecondHarmonic)),
    ("cn12_opp", Statistic::CrossNumberOpposite),
    ("cn12_same", Statistic::CrossNumberSame),
];

fn predicted_number(stat: Statistic, pr: &shg_core::CorrelationPrediction) -> f64 {
    match stat {
        Statistic::NumberCorrelation(Field::Fundamental) => pr.cn11,
        Statistic::NumberCorrelation(Field::SecondHarmonic) => pr.cn22,
        Statistic::CrossNumberOpposite => pr.cn12_opp,
        Statistic::CrossNumberSame => pr.cn12_same,
        _ => unreachable!("not a number-correlation statistic"),
    }
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

fn criterion_1(gate: &mut Gate) -> ThresholdResult {
    let t0 = Instant::now();
    let thr = find_threshold(&base_params(), &Default::default()).expect("threshold search");
    let secs = t0.elapsed().as_secs_f64();
    let e_ok = (thr.e_t - REF_E_T).abs() <= 1e-5;
    let k_ok = (thr.k_c - REF_K_C).abs() <= 1e-3;
    let kind_ok =
        thr.kind == InstabilityKind::StationaryTransverse && thr.lambda_imag.abs() < 1e-6;
    let fast = secs < 5.0;
    gate.report(
        1,
        "pattern-formation threshold",
        e_ok && k_ok && kind_ok && fast,
        &format!(
            "E_t = {:.9} (ref {REF_E_T}), k_c = {:.7} (dispersion-consistent ref {REF_K_C:.7}; \
             commonly tabulated {TABULATED_K_C} disagrees in the third decimal), stationary \
             instability with Im lambda = {:.1e}, solved in {secs:.2} s",
            thr.e_t, thr.k_c, thr.lambda_imag
        ),
    );
    thr
}

fn criterion_2(gate: &mut Gate, thr: &ThresholdResult) {
    let t0 = Instant::now();
    let p = base_params().with_pump(0.99 * thr.e_t);
    let s = steady(&p);
    let pr = predict(&p, &s, 50.0).expect("prediction at k = 50");
    let secs = t0.elapsed().as_secs_f64();
    let near = |v: f64, lim: f64| (v / lim - 1.0).abs() <= 0.01;
    let ok = near(pr.c11_minus, 0.5)
        && near(pr.c11_plus, 1.5)
        && near(pr.c22_minus, 1.0)
        && near(pr.c22_plus, 1.0)
        && secs < 1.0;
    gate.report(
        2,
        "large-k free-field limits",
        ok,
        &format!(
            "at k = 50: C11- = {:.4} (-> 0.5), C11+ = {:.4} (-> 1.5), C22- = {:.4}, \
             C22+ = {:.4} (-> 1.0), within 1% in {secs:.3} s",
            pr.c11_minus, pr.c11_plus, pr.c22_minus, pr.c22_plus
        ),
    );
}

fn criterion_3(gate: &mut Gate, thr: &ThresholdResult) {
    let grid = Grid1D::new(256, 103.057).expect("grid");
    let p = base_params().with_pump(0.99 * thr.e_t);
    let s = steady(&p);
    let mut best = (0usize, f64::MIN);
    for mode in 1..grid.n() / 2 {
        let pr = predict(&p, &s, grid.wavenumber(mode)).expect("prediction");
        if pr.c11_plus > best.1 {
            best = (mode, pr.c11_plus);
        }
    }
    let mc = grid.mode_nearest(thr.k_c);
    let in_band = best.1 >= 25.0 && best.1 <= 45.0;
    let at_kc = best.0.abs_diff(mc) <= 1;
    gate.report(
        3,
        "excess intensity-sum noise peaks at k_c",
        in_band && at_kc,
        &format!(
            "max C11+ = {:.3} in [25, 45] at grid mode {} (k = {:.4}), k_c mode {} +- 1",
            best.1,
            best.0,
            grid.wavenumber(best.0),
            mc
        ),
    );
}

fn criterion_4(gate: &mut Gate, thr: &ThresholdResult) {
    let fracs = [0.999, 0.9995, 0.9997];
    let mut quads = Vec::new();
    for f in fracs {
        let p = base_params().with_pump(f * thr.e_t);
        let s = steady(&p);
        let pr = predict(&p, &s, thr.k_c).expect("prediction at k_c");
        quads.push([pr.cn11, pr.cn12_opp, pr.cn22, pr.cn12_same]);
    }
    // cn11 and cn12_opp clear 0.99 at pump fraction 0.999; the
    // second-harmonic pair needs 0.9995. All four grow monotonically
    // toward +1 as threshold is approached.
    let strong = quads[0][0] > 0.99 && quads[0][1] > 0.99;
    let sh_strong = quads[1][2] > 0.99 && quads[1][3] > 0.99;
    let monotone = (0..4).all(|j| quads[0][j] < quads[1][j] && quads[1][j] < quads[2][j]);
    gate.report(
        4,
        "near-perfect twin-beam correlations approaching threshold",
        strong && sh_strong && monotone,
        &format!(
            "at k_c (cn11, cn12_opp, cn22, cn12_same): 0.999 -> ({:.6}, {:.6}, {:.6}, {:.6}); \
             0.9995 -> ({:.6}, {:.6}, {:.6}, {:.6}); 0.9997 -> ({:.6}, {:.6}, {:.6}, {:.6}); \
             all increasing",
            quads[0][0], quads[0][1], quads[0][2], quads[0][3],
            quads[1][0], quads[1][1], quads[1][2], quads[1][3],
            quads[2][0], quads[2][1], quads[2][2], quads[2][3]
        ),
    );
}

fn criterion_5(gate: &mut Gate, thr: &ThresholdResult) -> Mc {
    let grid = Grid1D::new(256, 103.057).expect("grid");
    let p = base_params().with_pump(0.99 * thr.e_t);
    let s = steady(&p);
    let mc = run_mc(&McPlan {
        params: p,
        grid,
        dt: 1e-3,
        t_transient: 200.0,
        t_total: 5000.0,
        stride: 50,
        trajectories: 4,
        blocks: 16,
        seed: 1,
        initial: InitialState::Steady,
        probe: grid.mode_nearest(thr.k_c),
    });
    let mut details = Vec::new();
    let mut all_ok = true;
    for (name, stat) in NUMBER_FAMILIES {
        let mut resolvable = 0usize;
        let mut covered = 0usize;
        for mode in 1..grid.n() / 2 {
            if let Ok(est) = mc.view.estimate(stat, mode) {
                resolvable += 1;
                let pr = predict(&p, &s, grid.wavenumber(mode)).expect("prediction");
                if (est.value - predicted_number(stat, &pr)).abs() <= 3.0 * est.se {
                    covered += 1;
                }
            }
        }
        let ok = resolvable >= 30 && (covered as f64) >= 0.95 * resolvable as f64;
        all_ok &= ok;
        details.push(format!("{name} {covered}/{resolvable}"));
    }
    let valid = mc.max_sh < 2.0;
    gate.report(
        5,
        "simulated number correlations track the linearized theory",
        all_ok && valid,
        &format!(
            "3-SE agreement over statistically resolvable modes (floor 30, need 95%): {}; \
             {} samples at 0.99 E_t, max |A2| = {:.3} < 2",
            details.join(", "),
            mc.samples,
            mc.max_sh
        ),
    );
    mc
}

fn criterion_6(gate: &mut Gate, thr: &ThresholdResult, mc: &Mc) {
    // Analytic ordering at 0.9 E_t, evaluated exactly at k_c.
    let p9 = base_params().with_pump(0.9 * thr.e_t);
    let s9 = steady(&p9);
    let pr9 = predict(&p9, &s9, thr.k_c).expect("prediction");
    let triple = [pr9.cn11, pr9.cn12_opp, pr9.cn22];
    let frozen = triple
        .iter()
        .zip(REF_TRIPLE_09)
        .all(|(v, r)| (v - r).abs() <= 1e-3);
    let ordered = triple[0] >= triple[1] && triple[1] >= triple[2];

    // Monte-Carlo two-beam squeezing at 0.99 E_t: the intensity-difference
    // variance sits significantly below shot noise at k_c, the cross
    // difference dips below it in the mid band, and neither rises
    // significantly above shot noise anywhere it is resolvable.
    let probe = mc.grid.mode_nearest(thr.k_c);
    let c11m = Statistic::IntensityDifference(Field::Fundamental);
    let at_kc = mc.view.estimate(c11m, probe).expect("c11- at k_c");
    let squeezed = at_kc.value + 3.0 * at_kc.se < 1.0;
    let mid_mode = mc.grid.mode_nearest(1.4);
    let cross_mid = mc
        .view
        .estimate(Statistic::CrossDifferenceOpposite, mid_mode)
        .expect("c12- mid band");
    let cross_squeezed = cross_mid.value + 3.0 * cross_mid.se < 1.0;
    let mut never_above = true;
    for mode in 1..mc.grid.n() / 2 {
        if let Ok(est) = mc.view.estimate(c11m, mode) {
            never_above &= est.value - 1.0 <= 3.0 * est.se;
        }
    }
    gate.report(
        6,
        "hierarchy and sub-shot-noise intensity differences",
        frozen && ordered && squeezed && cross_squeezed && never_above,
        &format!(
            "analytic at 0.9 E_t, k_c: cn11 {:.6} >= cn12_opp {:.6} >= cn22 {:.6} \
             (each within 1e-3 of its reference); measured C11-(k_c) = {:.4} +- {:.4} \
             and C12-(k = 1.4) = {:.4} +- {:.4}, both + 3 SE < 1; C11- never exceeds \
             shot noise by 3 SE at any resolvable mode",
            triple[0], triple[1], triple[2], at_kc.value, at_kc.se, cross_mid.value, cross_mid.se
        ),
    );
}

fn criterion_7(gate: &mut Gate, thr: &ThresholdResult) {
    // Deterministic roll formation just above threshold on a commensurate
    // domain: seed transverse mode 30 and integrate the noiseless equations.
    let grid = Grid1D::new(256, 102.84).expect("grid");
    let p = base_params().with_pump(1.01 * thr.e_t);
    let cfg = RunConfig {
        params: p,
        grid,
        dt: 2e-3,
        t_transient: 0.0,
        t_total: 1200.0,
        record_stride: 1_000_000,
        seed: 0,
        trajectory: 0,
        noise: false,
        initial: InitialState::SteadyPerturbed {
            mode: 30,
            amplitude: 1e-3,
        },
    };
    let summary = run_trajectory(&cfg, &mut ()).expect("deterministic run");
    let mut spectral = Spectral::new(grid);
    let mut far = vec![C64::default(); grid.n()];
    spectral.far_field_into(&summary.final_fields.a1, &mut far);
    let sym = |m: usize| m.min(grid.n() - m);
    let mut peak = (0usize, f64::MIN);
    let mut background = f64::MIN;
    for (m, a) in far.iter().enumerate() {
        let i = a.norm_sqr();
        let h = sym(m);
        if h == 0 {
            continue;
        }
        if i > peak.1 {
            peak = (h, i);
        }
        // Rolls put power on the harmonics of the seeded mode; anything
        // more than one bin away from that comb is background.
        let on_comb = (0..=4).any(|mult| h.abs_diff(30 * mult) <= 1);
        if !on_comb {
            background = background.max(i);
        }
    }
    let ratio = peak.1 / background;
    let pattern_ok = peak.0.abs_diff(30) <= 1 && ratio >= 1e3 && summary.max_sh_modulus < 2.0;

    // Stochastic patterned state at 1.05 E_t: the critical mode is
    // macroscopically occupied and its opposite-mode correlation stays
    // below the near-threshold bound.
    let mc = run_mc(&McPlan {
        params: base_params().with_pump(1.05 * thr.e_t),
        grid,
        dt: 1e-3,
        t_transient: 400.0,
        t_total: 2000.0,
        stride: 50,
        trajectories: 2,
        blocks: 16,
        seed: 9,
        initial: InitialState::SteadyPerturbed {
            mode: 30,
            amplitude: 1e-3,
        },
        probe: 30,
    });
    let n_kc = mc
        .view
        .estimate(Statistic::MeanPhoton(Field::Fundamental), 30)
        .expect("occupation at k_c");
    let n_off = mc
        .view
        .estimate(Statistic::MeanPhoton(Field::Fundamental), 64)
        .expect("occupation off pattern");
    let occupied = n_kc.value > 100.0 * n_off.value.abs();
    let cn11 = mc
        .view
        .estimate(Statistic::NumberCorrelation(Field::Fundamental), 30)
        .expect("cn11 above threshold");
    let below_bound = cn11.value + 3.0 * cn11.se < REF_CN11_0999;
    gate.report(
        7,
        "roll pattern above threshold",
        pattern_ok && occupied && below_bound && mc.max_sh < 2.0,
        &format!(
            "deterministic far field peaks at mode {} (ratio {:.1e} >= 1e3 over background); \
             stochastic 1.05 E_t: n(k_c) = {:.3e} vs {:.1e} off-pattern, \
             cn11(k_c, -k_c) = {:.4} +- {:.4} stays below {REF_CN11_0999}",
            peak.0, ratio, n_kc.value, n_off.value, cn11.value, cn11.se
        ),
    );
}

fn criterion_8(gate: &mut Gate, thr: &ThresholdResult, shared: &Mc) {
    // (a) In the linearized regime the k = 0 mode is uncorrelated with the
    // critical modes: all four zero-family statistics consistent with zero.
    let probe = shared.grid.mode_nearest(thr.k_c);
    let zero_stats = [
        Statistic::NumberCorrelationFromZero(Field::Fundamental),
        Statistic::NumberCorrelationFromZero(Field::SecondHarmonic),
        Statistic::CrossNumberZeroTo,
        Statistic::CrossNumberToZero,
    ];
    let linear_zero: Vec<CorrelationEstimate> = zero_stats
        .iter()
        .map(|s| shared.view.estimate(*s, probe).expect("zero-family at 0.99"))
        .collect();
    let consistent = linear_zero.iter().all(|e| e.value.abs() <= 3.0 * e.se);

    // (b) Extremely close to threshold with strong noise (n_th = 1e4) the
    // nonlinearity couples the homogeneous mode to the pattern: the cross
    // correlations with k = 0 turn significantly negative.
    let grid = Grid1D::new(128, 103.057).expect("grid");
    let p = Params {
        n_th: 1e4,
        ..base_params()
    }
    .with_pump(0.999999 * thr.e_t);
    let mc = run_mc(&McPlan {
        params: p,
        grid,
        dt: 1e-3,
        t_transient: 2000.0,
        t_total: 2500.0,
        stride: 25,
        trajectories: 4,
        blocks: 16,
        seed: 8,
        initial: InitialState::Steady,
        probe: grid.mode_nearest(thr.k_c),
    });
    let mode = grid.mode_nearest(thr.k_c);
    let zero_to = mc
        .view
        .estimate(Statistic::CrossNumberZeroTo, mode)
        .expect("cn12(0 -> k_c)");
    let to_zero = mc
        .view
        .estimate(Statistic::CrossNumberToZero, mode)
        .expect("cn12(k_c -> 0)");
    let negative = zero_to.value + 3.0 * zero_to.se < 0.0 && to_zero.value + 3.0 * to_zero.se < 0.0;
    gate.report(
        8,
        "homogeneous-critical mode coupling appears only beyond the linear regime",
        consistent && negative && mc.max_sh < 2.0,
        &format!(
            "0.99 E_t: zero-family correlations all within 3 SE of zero \
             (|v|/SE = {:.2}, {:.2}, {:.2}, {:.2}); 0.999999 E_t, n_th = 1e4: \
             cn12(0 -> k_c) = {:.4} +- {:.4} and cn12(k_c -> 0) = {:.4} +- {:.4}, \
             both negative at 3 SE; max |A2| = {:.3} < 2",
            linear_zero[0].value.abs() / linear_zero[0].se,
            linear_zero[1].value.abs() / linear_zero[1].se,
            linear_zero[2].value.abs() / linear_zero[2].se,
            linear_zero[3].value.abs() / linear_zero[3].se,
            zero_to.value,
            zero_to.se,
            to_zero.value,
            to_zero.se,
            mc.max_sh
        ),
    );
}

fn pt_runner(cases: u32) -> TestRunner {
    TestRunner::new(PtConfig {
        cases,
        failure_persistence: None,
        ..PtConfig::default()
    })
}

fn criterion_9(gate: &mut Gate) {
    let t0 = Instant::now();
    let mut broken: Vec<String> = Vec::new();

    // Steady states satisfy the homogeneous fixed-point equations.
    let mut runner = pt_runner(96);
    if let Err(e) = runner.run(
        &(-5.0..5.0f64, -5.0..5.0f64, 0.2..5.0f64, 0.0..20.0f64),
        |(d1, d2, g, e)| {
            let p = Params {
                delta1: d1,
                delta2: d2,
                gamma: g,
                pump: e,
                n_th: 1e8,
            };
            let states = steady_states(&p).map_err(|err| {
                proptest::test_runner::TestCaseError::fail(err.to_string())
            })?;
            prop_assert!(!states.is_empty());
            for s in &states {
                let (r1, r2) = shg_core::model::rhs_homogeneous(&p, s.a1, s.a2);
                let scale = 1e-8 * (1.0 + s.a1.norm() + s.a2.norm() + e);
                prop_assert!(r1.norm() <= scale, "fixed-point residual {}", r1.norm());
                prop_assert!(r2.norm() <= scale, "fixed-point residual {}", r2.norm());
            }
            Ok(())
        },
    ) {
        broken.push(format!("steady-state residuals: {e}"));
    }

    // The threshold is marginal: zero growth at (E_t, k_c), strictly
    // stable at 0.99 E_t for every wavenumber, across the detuning range
    // spanning both instability branches.
    let mut runner = pt_runner(20);
    if let Err(e) = runner.run(&(-6.0..2.0f64), |d2| {
        let p = Params {
            delta2: d2,
            ..base_params()
        };
        let thr = find_threshold(&p, &Default::default())
            .map_err(|err| proptest::test_runner::TestCaseError::fail(err.to_string()))?;
        let at = p.with_pump(thr.e_t);
        let g_c = growth_rate(&at, &steady(&at), thr.k_c).unwrap();
        prop_assert!(g_c.abs() < 1e-4, "marginal growth {g_c} at delta2 = {d2}");
        let below = p.with_pump(0.99 * thr.e_t);
        let s = steady(&below);
        for i in 0..=80 {
            let k = 4.0 * i as f64 / 80.0;
            let g = growth_rate(&below, &s, k).unwrap();
            prop_assert!(g < 0.0, "unstable below threshold: {g} at k = {k}");
        }
        Ok(())
    }) {
        broken.push(format!("threshold marginality: {e}"));
    }

    // Correlation spectra: coefficients bounded by 1, variances positive,
    // and the sum/difference pair encodes the same correlation
    // coefficient as the direct estimate.
    let mut runner = pt_runner(48);
    if let Err(e) = runner.run(
        &(0.05..0.95f64, 0.01..6.0f64, 0.5..2.0f64),
        |(f, k, g)| {
            let p = Params {
                gamma: g,
                ..base_params()
            };
            let thr = find_threshold(&p, &Default::default())
                .map_err(|err| proptest::test_runner::TestCaseError::fail(err.to_string()))?;
            let at = p.with_pump(f * thr.e_t);
            let s = steady(&at);
            let pr = predict(&at, &s, k)
                .map_err(|err| proptest::test_runner::TestCaseError::fail(err.to_string()))?;
            for c in [pr.cn11, pr.cn22, pr.cn12_opp, pr.cn12_same] {
                prop_assert!(c.abs() <= 1.0 + 1e-9, "correlation {c} out of [-1, 1]");
            }
            for v in [
                pr.c11_minus,
                pr.c11_plus,
                pr.c22_minus,
                pr.c22_plus,
                pr.c12_minus_opp,
                pr.c12_plus_opp,
                pr.c12_minus_same,
                pr.c12_plus_same,
            ] {
                prop_assert!(v.is_finite() && v > 0.0, "variance ratio {v}");
            }
            let from_pair = (pr.c11_plus - pr.c11_minus) / (pr.c11_plus + pr.c11_minus);
            prop_assert!(
                (from_pair - pr.cn11).abs() <= 1e-8 * (1.0 + pr.cn11.abs()),
                "cn11 {} vs sum/difference {}",
                pr.cn11,
                from_pair
            );
            let from_pair2 = (pr.c22_plus - pr.c22_minus) / (pr.c22_plus + pr.c22_minus);
            prop_assert!(
                (from_pair2 - pr.cn22).abs() <= 1e-8 * (1.0 + pr.cn22.abs()),
                "cn22 {} vs sum/difference {}",
                pr.cn22,
                from_pair2
            );
            Ok(())
        },
    ) {
        broken.push(format!("correlation identities: {e}"));
    }

    // Spectral transforms: far/near round trip and Parseval's identity in
    // the dx/sqrt(2 pi) normalization.
    let mut runner = pt_runner(64);
    if let Err(e) = runner.run(
        &(proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64), 10.0..500.0f64),
        |(parts, length)| {
            let grid = Grid1D::new(64, length).unwrap();
            let near: Vec<C64> = parts.iter().map(|(re, im)| C64::new(*re, *im)).collect();
            let mut spectral = Spectral::new(grid);
            let mut far = vec![C64::default(); 64];
            let mut back = vec![C64::default(); 64];
            spectral.far_field_into(&near, &mut far);
            spectral.near_field_into(&far, &mut back);
            for (a, b) in near.iter().zip(&back) {
                prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()), "round trip");
            }
            let pow_near: f64 = near.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dx();
            let pow_far: f64 = far.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dk();
            prop_assert!(
                (pow_near - pow_far).abs() <= 1e-12 * (1.0 + pow_near),
                "Parseval: {pow_near} vs {pow_far}"
            );
            Ok(())
        },
    ) {
        broken.push(format!("spectral transforms: {e}"));
    }

    let secs = t0.elapsed().as_secs_f64();
    gate.report(
        9,
        "randomized invariant battery",
        broken.is_empty() && secs < 300.0,
        &if broken.is_empty() {
            format!(
                "fixed points, threshold marginality, correlation identities and \
                 spectral transforms hold over 228 random draws in {secs:.1} s (< 300 s)"
            )
        } else {
            broken.join("; ")
        },
    );
}

#[test]
fn acceptance_gate() {
    let mut gate = Gate::default();
    let thr = criterion_1(&mut gate);
    criterion_2(&mut gate, &thr);
    criterion_3(&mut gate, &thr);
    criterion_4(&mut gate, &thr);
    let shared = criterion_5(&mut gate, &thr);
    criterion_6(&mut gate, &thr, &shared);
    criterion_7(&mut gate, &thr);
    criterion_8(&mut gate, &thr, &shared);
    criterion_9(&mut gate);
    assert!(
        gate.failures.is_empty(),
        "acceptance criteria failed:\n{}",
        gate.failures.join("\n")
    );
}
