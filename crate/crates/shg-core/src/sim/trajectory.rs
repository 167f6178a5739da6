//! Trajectory driver: initial conditions, recording, snapshot files, and
//! parallel ensembles.
//!
//! Snapshots are near-field records. The binary file layout is little-endian:
//!
//! ```text
//! magic    8 bytes  "SHGSNAP1"
//! n        u32      grid points
//! length   f64      box length
//! dt       f64      step size
//! stride   u32      steps between records
//! seed     u64      base RNG seed
//! n_th     f64      threshold photon-number scale
//! records  { time f64, trajectory u64, A1 n×(re,im) f64, A2 n×(re,im) f64 }*
//! ```
//!
//! Reproducibility: the RNG is counter-based with the trajectory id as the
//! stream index, so a trajectory's output is bit-identical for a given
//! (seed, trajectory) pair no matter how the ensemble is scheduled.

use crate::error::{Error, Result};
use crate::grid::{FieldPair, Grid1D};
use crate::params::Params;
use crate::sim::stepper::SplitStepper;
use crate::steady::steady_states;
use crate::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Where a trajectory starts.
#[derive(Debug, Clone)]
pub enum InitialState {
    /// Vacuum (both fields dark).
    Vacuum,
    /// Lowest-intensity homogeneous steady state of the run parameters.
    Steady,
    /// Steady state with a cosine modulation seeded on the fundamental:
    /// A1(x) += amplitude·cos(mode·dk·x).
    SteadyPerturbed { mode: i64, amplitude: f64 },
    /// Explicit near-field start.
    Fields(FieldPair),
}

/// Full specification of one stochastic (or deterministic) trajectory.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: Params,
    pub grid: Grid1D,
    pub dt: f64,
    /// Settling time discarded before any recording.
    pub t_transient: f64,
    /// Measurement window after the transient.
    pub t_total: f64,
    /// Steps between records.
    pub record_stride: u64,
    pub seed: u64,
    /// Trajectory id, used as the RNG stream index.
    pub trajectory: u64,
    /// Noise off integrates the deterministic equations only.
    pub noise: bool,
    pub initial: InitialState,
}

impl RunConfig {
    fn transient_steps(&self) -> u64 {
        (self.t_transient / self.dt).round() as u64
    }

    fn total_steps(&self) -> u64 {
        self.transient_steps() + (self.t_total / self.dt).round() as u64
    }

    fn initial_fields(&self) -> Result<FieldPair> {
        match &self.initial {
            InitialState::Vacuum => Ok(FieldPair::vacuum(&self.grid)),
            InitialState::Steady => {
                let s = steady_states(&self.params)?[0];
                Ok(FieldPair::homogeneous(&self.grid, &s))
            }
            InitialState::SteadyPerturbed { mode, amplitude } => {
                let s = steady_states(&self.params)?[0];
                let mut f = FieldPair::homogeneous(&self.grid, &s);
                let k = *mode as f64 * self.grid.dk();
                for (m, a) in f.a1.iter_mut().enumerate() {
                    *a += C64::from(amplitude * (k * self.grid.position(m)).cos());
                }
                Ok(f)
            }
            InitialState::Fields(f) => {
                if f.len() != self.grid.n() {
                    return Err(Error::InvalidConfig(format!(
                        "initial fields have {} points, grid has {}",
                        f.len(),
                        self.grid.n()
                    )));
                }
                Ok(f.clone())
            }
        }
    }
}

/// Consumer of recorded snapshots.
pub trait SnapshotSink {
    fn push(&mut self, time: f64, trajectory: u64, fields: &FieldPair) -> Result<()>;
}

/// Discards all snapshots; useful when only the final state matters.
impl SnapshotSink for () {
    fn push(&mut self, _: f64, _: u64, _: &FieldPair) -> Result<()> {
        Ok(())
    }
}

/// In-memory snapshot record.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub trajectory: u64,
    pub fields: FieldPair,
}

/// Collects snapshots in memory.
#[derive(Debug, Default)]
pub struct VecSink(pub Vec<Snapshot>);

impl SnapshotSink for VecSink {
    fn push(&mut self, time: f64, trajectory: u64, fields: &FieldPair) -> Result<()> {
        self.0.push(Snapshot {
            time,
            trajectory,
            fields: fields.clone(),
        });
        Ok(())
    }
}

/// Outcome summary of one trajectory.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: u64,
    pub recorded: u64,
    pub final_fields: FieldPair,
    /// Largest |A2| seen at record times and at the end.
    pub max_sh_modulus: f64,
}

/// Integrate one trajectory, pushing post-transient records into `sink`.
pub fn run_trajectory(config: &RunConfig, sink: &mut impl SnapshotSink) -> Result<RunSummary> {
    if config.record_stride == 0 {
        return Err(Error::InvalidConfig("record_stride must be at least 1".into()));
    }
    let mut fields = config.initial_fields()?;
    let mut stepper = SplitStepper::new(config.params, config.grid, config.dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(config.trajectory);

    let n_transient = config.transient_steps();
    let n_total = config.total_steps();
    let mut recorded = 0;
    let mut max_sh = 0.0_f64;
    let track_max = |f: &FieldPair, max_sh: &mut f64| {
        for a in &f.a2 {
            let m = a.norm();
            if m > *max_sh {
                *max_sh = m;
            }
        }
    };

    for step in 0..n_total {
        if step >= n_transient && (step - n_transient) % config.record_stride == 0 {
            let time = step as f64 * config.dt;
            sink.push(time, config.trajectory, &fields)?;
            recorded += 1;
            track_max(&fields, &mut max_sh);
        }
        if config.noise {
            stepper.step(&mut fields, &mut rng, step as f64 * config.dt)?;
        } else {
            stepper.step_deterministic(&mut fields);
        }
    }
    track_max(&fields, &mut max_sh);

    Ok(RunSummary {
        steps: n_total,
        recorded,
        final_fields: fields,
        max_sh_modulus: max_sh,
    })
}

/// Run trajectories 0..n in parallel, each with its own sink.
///
/// The base config's `trajectory` field is replaced by the ensemble index;
/// results are returned in trajectory order.
pub fn run_ensemble<S, F>(
    base: &RunConfig,
    n_trajectories: u64,
    make_sink: F,
) -> Result<Vec<(RunSummary, S)>>
where
    S: SnapshotSink + Send,
    F: Fn(u64) -> S + Sync,
{
    (0..n_trajectories)
        .into_par_iter()
        .map(|id| {
            let cfg = RunConfig {
                trajectory: id,
                ..base.clone()
            };
            let mut sink = make_sink(id);
            let summary = run_trajectory(&cfg, &mut sink)?;
            Ok((summary, sink))
        })
        .collect()
}

const MAGIC: &[u8; 8] = b"SHGSNAP1";

/// File-header metadata stored with every snapshot stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub n: u32,
    pub length: f64,
    pub dt: f64,
    pub stride: u32,
    pub seed: u64,
    pub n_th: f64,
}

impl SnapshotHeader {
    pub fn for_run(config: &RunConfig) -> SnapshotHeader {
        SnapshotHeader {
            n: config.grid.n() as u32,
            length: config.grid.length(),
            dt: config.dt,
            stride: config.record_stride as u32,
            seed: config.seed,
            n_th: config.params.n_th,
        }
    }
}

/// Streams snapshots to a binary file.
pub struct SnapshotWriter<W: Write> {
    w: W,
    n: usize,
}

impl SnapshotWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, header: &SnapshotHeader) -> Result<Self> {
        SnapshotWriter::new(BufWriter::new(File::create(path)?), header)
    }
}

impl<W: Write> SnapshotWriter<W> {
    pub fn new(mut w: W, header: &SnapshotHeader) -> Result<Self> {
        w.write_all(MAGIC)?;
        w.write_all(&header.n.to_le_bytes())?;
        w.write_all(&header.length.to_le_bytes())?;
        w.write_all(&header.dt.to_le_bytes())?;
        w.write_all(&header.stride.to_le_bytes())?;
        w.write_all(&header.seed.to_le_bytes())?;
        w.write_all(&header.n_th.to_le_bytes())?;
        Ok(SnapshotWriter {
            w,
            n: header.n as usize,
        })
    }

    /// Flush and hand back the inner writer.
    pub fn finish(mut self) -> Result<W> {
        self.w.flush()?;
        Ok(self.w)
    }
}

impl<W: Write> SnapshotSink for SnapshotWriter<W> {
    fn push(&mut self, time: f64, trajectory: u64, fields: &FieldPair) -> Result<()> {
        if fields.len() != self.n {
            return Err(Error::AccumulatorMismatch(format!(
                "snapshot has {} points, file expects {}",
                fields.len(),
                self.n
            )));
        }
        self.w.write_all(&time.to_le_bytes())?;
        self.w.write_all(&trajectory.to_le_bytes())?;
        for field in [&fields.a1, &fields.a2] {
            for a in field {
                self.w.write_all(&a.re.to_le_bytes())?;
                self.w.write_all(&a.im.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Fill `buf`, distinguishing clean EOF (Ok(false), nothing read) from a
/// truncated stream (error).
fn read_fully(r: &mut impl Read, buf: &mut [u8]) -> Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        let got = r.read(&mut buf[filled..])?;
        if got == 0 {
            if filled == 0 {
                return Ok(false);
            }
            return Err(Error::SnapshotFormat(format!(
                "stream truncated: expected {} more bytes",
                buf.len() - filled
            )));
        }
        filled += got;
    }
    Ok(true)
}

fn take_f64(buf: &[u8], at: &mut usize) -> f64 {
    let v = f64::from_le_bytes(buf[*at..*at + 8].try_into().unwrap());
    *at += 8;
    v
}

/// Read back a complete snapshot stream.
pub fn read_snapshots(path: impl AsRef<Path>) -> Result<(SnapshotHeader, Vec<Snapshot>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    if !read_fully(&mut r, &mut magic)? || &magic != MAGIC {
        return Err(Error::SnapshotFormat("bad or missing magic".into()));
    }
    let mut fixed = [0u8; 4 + 8 + 8 + 4 + 8 + 8];
    if !read_fully(&mut r, &mut fixed)? {
        return Err(Error::SnapshotFormat("truncated header".into()));
    }
    let n = u32::from_le_bytes(fixed[0..4].try_into().unwrap());
    let mut at = 4;
    let length = take_f64(&fixed, &mut at);
    let dt = take_f64(&fixed, &mut at);
    let stride = u32::from_le_bytes(fixed[at..at + 4].try_into().unwrap());
    at += 4;
    let seed = u64::from_le_bytes(fixed[at..at + 8].try_into().unwrap());
    at += 8;
    let n_th = take_f64(&fixed, &mut at);
    let header = SnapshotHeader {
        n,
        length,
        dt,
        stride,
        seed,
        n_th,
    };

    let np = n as usize;
    let mut record = vec![0u8; 16 + 32 * np];
    let mut snaps = Vec::new();
    while read_fully(&mut r, &mut record)? {
        let mut at = 0;
        let time = take_f64(&record, &mut at);
        let trajectory = u64::from_le_bytes(record[at..at + 8].try_into().unwrap());
        at += 8;
        let mut fields = FieldPair {
            a1: Vec::with_capacity(np),
            a2: Vec::with_capacity(np),
        };
        for _ in 0..np {
            let re = take_f64(&record, &mut at);
            let im = take_f64(&record, &mut at);
            fields.a1.push(C64::new(re, im));
        }
        for _ in 0..np {
            let re = take_f64(&record, &mut at);
            let im = take_f64(&record, &mut at);
            fields.a2.push(C64::new(re, im));
        }
        snaps.push(Snapshot {
            time,
            trajectory,
            fields,
        });
    }
    Ok((header, snaps))
}
