//! Exact-increment sampling of Lévy paths started from `h₀`.

use crate::density::Density;
use crate::levy::{linear_interp, tabulated_moment, JumpMeasure, LevyError, LevyTriplet, StableJumps};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PathError {
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error("unsupported jump measure: {0}")]
    Unsupported(String),
    #[error("invalid path config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    pub dt_base: f64,
    /// Horizon cap; clocks that have not fired by then are censored.
    pub t_max: f64,
    pub seed: u64,
    /// Jumps of a tabulated measure below this size are replaced by a matched Gaussian.
    pub small_jump_cutoff: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self { dt_base: 1e-3, t_max: 50.0, seed: 0, small_jump_cutoff: 0.1 }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<(), PathError> {
        let bad = |m: &str| Err(PathError::Invalid(m.into()));
        if !(self.dt_base > 0.0 && self.dt_base.is_finite()) {
            return bad("dt_base must be positive");
        }
        if !(self.t_max >= self.dt_base && self.t_max.is_finite()) {
            return bad("t_max must be finite and at least dt_base");
        }
        if !(self.small_jump_cutoff > 0.0 && self.small_jump_cutoff <= 1.0) {
            return bad("small_jump_cutoff must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Independent stream for path `index` under `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn sample_initial<R: RngCore + ?Sized>(h0: &Density, rng: &mut R) -> f64 {
    h0.sample(rng)
}

/// Finite jump law given by cumulative masses over cells with linear density.
#[derive(Debug, Clone)]
struct TableJumps {
    rate: f64,
    nodes: Vec<f64>,
    /// Density at the two ends of each cell.
    cells: Vec<(f64, f64)>,
    cum: Vec<f64>,
}

impl TableJumps {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let target = rng.random::<f64>() * self.rate;
        let i = self.cum.partition_point(|&c| c <= target).clamp(1, self.nodes.len() - 1);
        let (x0, x1) = (self.nodes[i - 1], self.nodes[i]);
        let (v0, v1) = self.cells[i - 1];
        let m = target - self.cum[i - 1];
        let w = x1 - x0;
        // solve v0·s + (v1 - v0)s²/(2w) = m for s in [0, w]
        let a = 0.5 * (v1 - v0) / w;
        let s = if a.abs() < 1e-14 * v0.max(v1) / w {
            if v0 > 0.0 { m / v0 } else { 0.5 * w }
        } else {
            let disc = (v0 * v0 + 4.0 * a * m).max(0.0);
            2.0 * m / (v0 + disc.sqrt())
        };
        x0 + s.clamp(0.0, w)
    }
}

#[derive(Debug, Clone, Copy)]
struct StableSampler {
    alpha: f64,
    scale: f64,
    beta: f64,
}

impl StableSampler {
    /// Chambers-Mallows-Stuck draw of `S_α(1, β, 0)`.
    fn standard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = PI * (rng.random::<f64>() - 0.5);
        let w: f64 = Exp1.sample(rng);
        let a = self.alpha;
        if (a - 1.0).abs() < 1e-12 {
            return v.tan();
        }
        let t = self.beta * (PI * a / 2.0).tan();
        let b = t.atan() / a;
        let s = (1.0 + t * t).powf(1.0 / (2.0 * a));
        s * (a * (v + b)).sin() / v.cos().powf(1.0 / a) * ((v - a * (v + b)).cos() / w).powf((1.0 - a) / a)
    }

    fn increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        let z = self.standard(rng);
        if (self.alpha - 1.0).abs() < 1e-12 {
            self.scale * dt * z
        } else {
            (self.scale * dt).powf(1.0 / self.alpha) * z
        }
    }
}

/// One sampler step: the continuous part is bridged linearly, the jump part lands at the end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Increment {
    pub continuous: f64,
    pub jump: f64,
    /// A compound-Poisson event occurred.
    pub had_jump: bool,
}

impl Increment {
    pub fn total(&self) -> f64 {
        self.continuous + self.jump
    }
}

/// Precomputed increment law of a triplet.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    variance: f64,
    drift: f64,
    atoms: Vec<(f64, f64)>,
    atom_rate: f64,
    table: Option<TableJumps>,
    stable: Option<StableSampler>,
}

impl IncrementSampler {
    pub fn new(triplet: &LevyTriplet, small_jump_cutoff: f64) -> Result<Self, PathError> {
        triplet.validate()?;
        let mut s = Self { variance: triplet.alpha2, drift: triplet.gamma, atoms: Vec::new(), atom_rate: 0.0, table: None, stable: None };
        match &triplet.nu {
            JumpMeasure::None => {}
            JumpMeasure::FiniteAtoms { atoms } => {
                for a in atoms.iter().filter(|a| a.rate > 0.0) {
                    if a.location.abs() <= 1.0 {
                        s.drift -= a.rate * a.location;
                    }
                    s.atom_rate += a.rate;
                    s.atoms.push((a.location, s.atom_rate));
                }
            }
            JumpMeasure::StableDensity(sj) => s.stable = Some(stable_sampler(sj, &mut s.drift)?),
            JumpMeasure::TabulatedDensity { grid, values } => {
                let c = small_jump_cutoff;
                s.variance += tabulated_moment(grid, values, |y| if y.abs() < c { y * y } else { 0.0 });
                s.drift -= tabulated_moment(grid, values, |y| if y.abs() >= c && y.abs() <= 1.0 { y } else { 0.0 });
                s.table = table_jumps(grid, values, c);
            }
        }
        Ok(s)
    }

    /// True when the law has no jump part, so paths are continuous.
    pub fn is_continuous(&self) -> bool {
        self.atom_rate == 0.0 && self.table.is_none() && self.stable.is_none()
    }

    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Increment {
        let mut continuous = self.drift * dt;
        if self.variance > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            continuous += (self.variance * dt).sqrt() * z;
        }
        let mut jump = 0.0;
        let mut had_jump = false;
        if self.atom_rate > 0.0 {
            let n = poisson(self.atom_rate * dt, rng);
            for _ in 0..n {
                let u = rng.random::<f64>() * self.atom_rate;
                let i = self.atoms.partition_point(|&(_, c)| c <= u).min(self.atoms.len() - 1);
                jump += self.atoms[i].0;
            }
            had_jump |= n > 0;
        }
        if let Some(t) = &self.table {
            let n = poisson(t.rate * dt, rng);
            for _ in 0..n {
                jump += t.sample(rng);
            }
            had_jump |= n > 0;
        }
        if let Some(st) = &self.stable {
            jump += st.increment(dt, rng);
        }
        Increment { continuous, jump, had_jump }
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

fn stable_sampler(sj: &StableJumps, drift: &mut f64) -> Result<StableSampler, PathError> {
    let (cl, cr) = sj.constants();
    let beta = sj.beta();
    if (sj.alpha - 1.0).abs() < 1e-12 {
        if beta != 0.0 {
            return Err(PathError::Unsupported("asymmetric stable jumps with index 1".into()));
        }
    } else {
        *drift += (cr - cl) / (sj.alpha - 1.0);
    }
    Ok(StableSampler { alpha: sj.alpha, scale: sj.scale, beta })
}

/// Restriction of a tabulated density to `|y| ≥ cutoff`. With `±cutoff` inserted as
/// nodes every cell lies wholly inside or outside the excluded band.
fn table_jumps(grid: &[f64], values: &[f64], cutoff: f64) -> Option<TableJumps> {
    let mut nodes: Vec<f64> = grid.to_vec();
    for b in [-cutoff, cutoff] {
        if b > grid[0] && b < grid[grid.len() - 1] {
            nodes.push(b);
        }
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mut cells = Vec::with_capacity(nodes.len() - 1);
    let mut cum = vec![0.0];
    for w in nodes.windows(2) {
        let (v0, v1) = if (0.5 * (w[0] + w[1])).abs() < cutoff {
            (0.0, 0.0)
        } else {
            (linear_interp(grid, values, w[0]), linear_interp(grid, values, w[1]))
        };
        cells.push((v0, v1));
        cum.push(cum.last().unwrap() + 0.5 * (v0 + v1) * (w[1] - w[0]));
    }
    let rate = *cum.last().unwrap();
    (rate > 0.0).then_some(TableJumps { rate, nodes, cells, cum })
}

/// A stretch of path over which the clock sees `x(t) = x0 + continuous·(t - t0)/(t1 - t0)`,
/// followed by the jump at `t1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub x0: f64,
    pub continuous: f64,
    pub jump: f64,
    pub had_jump: bool,
}

impl Segment {
    pub fn state_at(&self, t: f64) -> f64 {
        let w = self.t1 - self.t0;
        let f = if w > 0.0 { ((t - self.t0) / w).clamp(0.0, 1.0) } else { 0.0 };
        self.x0 + self.continuous * f
    }

    pub fn end_state(&self) -> f64 {
        self.x0 + self.continuous + self.jump
    }
}

/// Lazily sampled path for one stream.
pub struct PathStream<'a> {
    sampler: &'a IncrementSampler,
    rng: ChaCha8Rng,
    t: f64,
    x: f64,
    dt: f64,
    t_max: f64,
}

impl<'a> PathStream<'a> {
    pub fn new(sampler: &'a IncrementSampler, x0: f64, rng: ChaCha8Rng, cfg: &PathConfig) -> Self {
        Self { sampler, rng, t: 0.0, x: x0, dt: cfg.dt_base, t_max: cfg.t_max }
    }

    /// Start at a draw from `initial`, using the path's own stream.
    pub fn from_initial(sampler: &'a IncrementSampler, initial: &Density, cfg: &PathConfig, index: u64) -> Self {
        let mut rng = path_rng(cfg.seed, index);
        let x0 = sample_initial(initial, &mut rng);
        Self::new(sampler, x0, rng, cfg)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> f64 {
        self.x
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl Iterator for PathStream<'_> {
    type Item = Segment;

    fn next(&mut self) -> Option<Segment> {
        if self.t >= self.t_max {
            return None;
        }
        let t1 = (self.t + self.dt).min(self.t_max);
        let inc = self.sampler.sample_increment(t1 - self.t, &mut self.rng);
        let seg = Segment { t0: self.t, t1, x0: self.x, continuous: inc.continuous, jump: inc.jump, had_jump: inc.had_jump };
        self.t = t1;
        self.x = seg.end_state();
        Some(seg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub jump_flags: Vec<bool>,
}

impl SamplePath {
    pub fn simulate(triplet: &LevyTriplet, h0: &Density, cfg: &PathConfig, index: u64) -> Result<Self, PathError> {
        cfg.validate()?;
        let sampler = IncrementSampler::new(triplet, cfg.small_jump_cutoff)?;
        let mut stream = PathStream::from_initial(&sampler, h0, cfg, index);
        let mut p = SamplePath { times: vec![0.0], states: vec![stream.state()], jump_flags: vec![false] };
        for seg in stream.by_ref() {
            p.times.push(seg.t1);
            p.states.push(seg.end_state());
            p.jump_flags.push(seg.had_jump);
        }
        Ok(p)
    }

    /// CSV with columns `t,L,jump`.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "t,L,jump")?;
        for ((t, x), j) in self.times.iter().zip(&self.states).zip(&self.jump_flags) {
            writeln!(w, "{t},{x},{}", u8::from(*j))?;
        }
        w.flush()
    }
}
