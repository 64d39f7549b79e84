//! Path samplers and path functionals.
//!
//! * the unconditioned process: Gaussian part plus compound-Poisson jumps
//!   above a cutoff `delta`, with the mean of the removed small jumps
//!   restored through the drift and their variance folded into the
//!   Gaussian coefficient;
//! * the process conditioned to stay positive, as the discrete-time
//!   W-transform of the killed step chain;
//! * the passage-time subordinators, stepped in the level variable;
//! * supremum / future-infimum / minimum functionals and first/last
//!   passage times of a sampled skeleton.
//!
//! Samplers are pure functions of `(spec, parameters, seed)`; parallel
//! callers derive one independent stream per replica from
//! `(master_seed, replica_index)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::levy::{JumpFamily, ProcessSpec};
use crate::numeric;
use crate::scale::ScaleFunction;
use crate::subordinator::{SubordinatorJumps, SubordinatorSpec};

/// Proposal draws per h-transform step; the step normalization is the
/// average weight over these proposals.
pub const H_PROPOSALS: usize = 64;

/// Expected jumps per step above which a sampler refuses to run.
pub const JUMPS_PER_STEP_CAP: f64 = 10.0;

/// Degeneracy threshold for the h-transform acceptance ratio.
pub const H_DEGENERACY: f64 = 1e-4;

/// Fraction of the Gaussian scale the neglected third moment may reach
/// (per unit time) when choosing the small-jump cutoff.
const THIRD_MOMENT_BUDGET: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    Unconditioned,
    Conditioned,
    KilledAtZero,
}

/// A discretized trajectory on a uniform grid.
#[derive(Debug, Clone)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub start: f64,
    pub kind: PathKind,
    pub dt: f64,
}

impl SamplePath {
    /// Truncate at the first grid time where the value drops below zero,
    /// i.e. at `R = inf { t : xi_t < 0 }`.
    pub fn killed_at_zero(mut self) -> SamplePath {
        if let Some(pos) = self.values.iter().position(|&v| v < 0.0) {
            self.times.truncate(pos + 1);
            self.values.truncate(pos + 1);
        }
        self.kind = PathKind::KilledAtZero;
        self
    }
}

/// Supremum, future infimum (over the simulated horizon), and minimum data
/// of a path.
#[derive(Debug, Clone)]
pub struct PathFunctionals {
    pub supremum: Vec<f64>,
    pub future_infimum: Vec<f64>,
    pub min_index: usize,
    pub min_time: f64,
    pub min_value: f64,
    /// Several grid points tie for the minimum to 1e-12. The continuous
    /// minimum is a.s. unique; grids can tie.
    pub min_tied: bool,
}

/// Level-indexed subordinator skeleton.
#[derive(Debug, Clone)]
pub struct SubordinatorPath {
    pub levels: Vec<f64>,
    pub times: Vec<f64>,
    /// Exponential killing level when the killing rate is positive; the
    /// skeleton stops there.
    pub killed_at: Option<f64>,
    pub dx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassageTimes {
    pub first: Option<f64>,
    pub last: Option<f64>,
    /// The horizon truncates the last passage time: the path does not end
    /// strictly above the level.
    pub censored: bool,
}

/// Independent seeded stream for replica `index` of a run.
pub fn rng_stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut state = master_seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1));
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
enum StepJumps {
    None,
    /// Finite-intensity exponential marks.
    Exp(Exp<f64>),
    /// Power tail above `delta`, optionally tempered by thinning.
    PowerTail { delta: f64, alpha: f64, theta: f64 },
}

/// Increment law of the unconditioned process over one step `dt`.
#[derive(Debug, Clone)]
pub struct StepLaw {
    pub dt: f64,
    drift: f64,
    gauss_sd: f64,
    jump_rate: f64,
    poisson: Option<Poisson<f64>>,
    jumps: StepJumps,
    jump_scale: f64,
}

impl StepLaw {
    /// Build the step law, choosing the small-jump cutoff by the
    /// third-moment rule unless `delta_override` pins it.
    pub fn new(spec: &ProcessSpec, dt: f64, delta_override: Option<f64>) -> Result<StepLaw> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Domain(format!("dt must be positive, got {dt}")));
        }
        let s2 = spec.sigma * spec.sigma;
        let (drift_unit, gauss_var_unit, jump_rate_unit, jumps, jump_scale) = match spec.jumps {
            JumpFamily::None {} => (spec.a, s2, 0.0, StepJumps::None, 0.0),
            JumpFamily::CompoundPoisson { intensity, rate } => (
                spec.a + intensity * crate::levy::exp_mean_below_one(rate),
                s2,
                intensity,
                StepJumps::Exp(Exp::new(rate).expect("rate > 0")),
                1.0 / rate,
            ),
            JumpFamily::Stable { alpha } => {
                let c = crate::levy::stable_constant(alpha);
                let delta = match delta_override {
                    Some(d) => d,
                    None => small_jump_cutoff(c, alpha, 0.0, s2),
                };
                let v = c * delta.powf(2.0 - alpha) / (2.0 - alpha);
                let comp = if delta < 1.0 {
                    c * (delta.powf(1.0 - alpha) - 1.0) / (alpha - 1.0)
                } else {
                    0.0
                };
                let rate = c * delta.powf(-alpha) / alpha;
                (
                    spec.a + comp,
                    s2 + v,
                    rate,
                    StepJumps::PowerTail {
                        delta,
                        alpha,
                        theta: 0.0,
                    },
                    dt.powf(1.0 / alpha) / dt,
                )
            }
            JumpFamily::TemperedStable {
                alpha,
                theta,
                scale,
            } => {
                let delta = match delta_override {
                    Some(d) => d,
                    None => small_jump_cutoff(scale, alpha, theta, s2),
                };
                let v = tempered_power_moment(scale, alpha, theta, delta, 2.0);
                let comp = if delta < 1.0 {
                    numeric::integrate(
                        &|u: f64| scale * u.powf(-alpha) * (-theta * u).exp(),
                        delta,
                        1.0,
                        1e-12,
                    )
                } else {
                    0.0
                };
                // Proposal intensity is the untempered tail; individual
                // jumps are thinned by e^{-theta u}.
                let rate = scale * delta.powf(-alpha) / alpha;
                (
                    spec.a + comp,
                    s2 + v,
                    rate,
                    StepJumps::PowerTail {
                        delta,
                        alpha,
                        theta,
                    },
                    dt.powf(1.0 / alpha) / dt,
                )
            }
        };
        let jump_rate = jump_rate_unit * dt;
        if jump_rate > JUMPS_PER_STEP_CAP {
            return Err(Error::Resolution {
                dt,
                expected_jumps: jump_rate,
                cap: JUMPS_PER_STEP_CAP,
            });
        }
        Ok(StepLaw {
            dt,
            drift: drift_unit * dt,
            gauss_sd: (gauss_var_unit * dt).sqrt(),
            jump_rate,
            poisson: (jump_rate > 0.0).then(|| Poisson::new(jump_rate).expect("rate > 0")),
            jumps,
            jump_scale: jump_scale * dt,
        })
    }

    /// Like [`StepLaw::new`], but when the third-moment cutoff would put
    /// more than `target` expected jumps in one step, coarsen the cutoff to
    /// hit `target` instead. Trades small-jump resolution for speed; the
    /// removed jumps keep their mean and variance through the Gaussian
    /// part.
    pub fn with_jump_cap(spec: &ProcessSpec, dt: f64, target: f64) -> Result<StepLaw> {
        match StepLaw::new(spec, dt, None) {
            Ok(law) if law.jump_rate <= target => Ok(law),
            first => {
                let (scale, alpha) = match spec.jumps {
                    JumpFamily::Stable { alpha } => (crate::levy::stable_constant(alpha), alpha),
                    JumpFamily::TemperedStable { alpha, scale, .. } => (scale, alpha),
                    // No power tail: nothing to coarsen.
                    _ => return first,
                };
                let delta = (scale * dt / (alpha * target)).powf(1.0 / alpha);
                StepLaw::new(spec, dt, Some(delta.min(1.0)))
            }
        }
    }

    /// Expected (proposal) jumps per step.
    pub fn jump_rate(&self) -> f64 {
        self.jump_rate
    }

    /// One increment of the unconditioned process.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let mut inc = self.drift;
        if self.gauss_sd > 0.0 {
            inc += self.gauss_sd * rng.sample::<f64, _>(StandardNormal);
        }
        if let Some(poisson) = &self.poisson {
            let n = poisson.sample(rng) as usize;
            for _ in 0..n {
                match &self.jumps {
                    StepJumps::None => unreachable!(),
                    StepJumps::Exp(exp) => inc -= exp.sample(rng),
                    StepJumps::PowerTail {
                        delta,
                        alpha,
                        theta,
                    } => {
                        // Inverse-CDF draw from the untempered tail, thinned
                        // by e^{-theta u} so the accepted intensity is
                        // exactly scale * u^{-1-alpha} e^{-theta u}.
                        let v: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                        let u = delta * v.powf(-1.0 / alpha);
                        if *theta == 0.0 || rng.gen::<f64>() < (-theta * u).exp() {
                            inc -= u;
                        }
                    }
                }
            }
        }
        inc
    }

    /// Standard deviation of the Gaussian component of one step.
    pub fn gauss_sd(&self) -> f64 {
        self.gauss_sd
    }

    /// Rough magnitude of one step, for start offsets and censor bands.
    pub fn typical_move(&self) -> f64 {
        self.gauss_sd.max(self.jump_scale) + self.drift.abs()
    }
}

/// Third-moment rule: largest cutoff in (0, 1] whose neglected third
/// moment stays below `THIRD_MOMENT_BUDGET` of the Gaussian scale per unit
/// time.
fn small_jump_cutoff(scale: f64, alpha: f64, theta: f64, sigma2: f64) -> f64 {
    let ratio = |delta: f64| {
        let mu3 = tempered_power_moment(scale, alpha, theta, delta, 3.0);
        let var = sigma2 + tempered_power_moment(scale, alpha, theta, delta, 2.0);
        mu3 / var.powf(1.5)
    };
    if ratio(1.0) <= THIRD_MOMENT_BUDGET {
        return 1.0;
    }
    let mut lo = 1e-12f64;
    let mut hi = 1.0f64;
    for _ in 0..80 {
        let mid = (lo * hi).sqrt();
        if ratio(mid) <= THIRD_MOMENT_BUDGET {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `scale * int_0^delta u^{p - 1 - alpha} e^{-theta u} du`, the p-th moment
/// of the removed small jumps. The substitution `u = delta w^{1/(p-alpha)}`
/// removes the integrable endpoint singularity.
fn tempered_power_moment(scale: f64, alpha: f64, theta: f64, delta: f64, p: f64) -> f64 {
    let q = p - alpha;
    if theta == 0.0 {
        return scale * delta.powf(q) / q;
    }
    let inner = numeric::integrate(
        &|w: f64| (-theta * delta * w.powf(1.0 / q)).exp(),
        0.0,
        1.0,
        1e-12,
    );
    scale * delta.powf(q) / q * inner
}

/// Skeleton of the unconditioned process started at zero.
pub fn sample_unconditioned<R: Rng>(
    spec: &ProcessSpec,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<SamplePath> {
    if !(horizon > 0.0) || !(dt > 0.0 && dt < horizon) {
        return Err(Error::Domain(format!(
            "need 0 < dt < horizon, got dt = {dt}, horizon = {horizon}"
        )));
    }
    let law = StepLaw::new(spec, dt, None)?;
    let n = (horizon / dt).round() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut x = 0.0;
    times.push(0.0);
    values.push(x);
    for i in 1..=n {
        x += law.sample(rng);
        times.push(i as f64 * dt);
        values.push(x);
    }
    Ok(SamplePath {
        times,
        values,
        start: 0.0,
        kind: PathKind::Unconditioned,
        dt,
    })
}

/// One step of the discrete h-transform chain: among `H_PROPOSALS` draws
/// from the unconditioned step law, pick one with probability proportional
/// to `W(x + delta) 1{x + delta > 0}`.
pub struct ConditionedStepper<'a> {
    sf: &'a ScaleFunction,
    law: StepLaw,
    pub t: f64,
    pub x: f64,
    w_cur: f64,
}

impl<'a> ConditionedStepper<'a> {
    pub fn new(sf: &'a ScaleFunction, law: StepLaw, t0: f64, x0: f64) -> Result<Self> {
        let w_cur = sf.w(x0)?;
        Ok(ConditionedStepper {
            sf,
            law,
            t: t0,
            x: x0,
            w_cur,
        })
    }

    /// Switch to a coarser or finer step law mid-path.
    pub fn set_law(&mut self, law: StepLaw) {
        self.law = law;
    }

    pub fn law(&self) -> &StepLaw {
        &self.law
    }

    pub fn step<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        let mut proposals = [0.0f64; H_PROPOSALS];
        let mut weights = [0.0f64; H_PROPOSALS];
        let mut total = 0.0;
        for i in 0..H_PROPOSALS {
            let inc = self.law.sample(rng);
            let y = self.x + inc;
            let w = if y > 0.0 { self.sf.w(y)? } else { 0.0 };
            proposals[i] = y;
            weights[i] = w;
            total += w;
        }
        let ratio = total / (H_PROPOSALS as f64) / self.w_cur.max(f64::MIN_POSITIVE);
        if ratio < H_DEGENERACY {
            return Err(Error::HTransform {
                t: self.t,
                x: self.x,
                ratio,
            });
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = H_PROPOSALS - 1;
        for i in 0..H_PROPOSALS {
            pick -= weights[i];
            if pick <= 0.0 {
                chosen = i;
                break;
            }
        }
        self.x = proposals[chosen];
        self.w_cur = weights[chosen];
        self.t += self.law.dt;
        Ok(())
    }
}

/// Start height used to approximate a conditioned start at exactly zero
/// for unbounded-variation specs (the conditioned law at zero is an
/// entrance limit; the discrete chain needs a few step-scales of room).
pub fn conditioned_start_offset(spec: &ProcessSpec, law: &StepLaw) -> f64 {
    if spec.bv_drift().is_some() {
        0.0
    } else {
        10.0 * law.typical_move()
    }
}

/// Skeleton of the process conditioned to stay positive, started at `x0`
/// (at an offset start when `x0 = 0` for unbounded variation).
pub fn sample_conditioned<R: Rng>(
    spec: &ProcessSpec,
    sf: &ScaleFunction,
    x0: f64,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<SamplePath> {
    if x0 < 0.0 {
        return Err(Error::Domain(format!("x0 must be >= 0, got {x0}")));
    }
    if !(horizon > 0.0) || !(dt > 0.0 && dt < horizon) {
        return Err(Error::Domain(format!(
            "need 0 < dt < horizon, got dt = {dt}, horizon = {horizon}"
        )));
    }
    let law = StepLaw::new(spec, dt, None)?;
    let start = if x0 > 0.0 {
        x0
    } else {
        conditioned_start_offset(spec, &law)
    };
    let mut stepper = ConditionedStepper::new(sf, law, 0.0, start)?;
    let n = (horizon / dt).round() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    times.push(0.0);
    values.push(start);
    for i in 1..=n {
        stepper.step(rng)?;
        times.push(i as f64 * dt);
        values.push(stepper.x);
    }
    Ok(SamplePath {
        times,
        values,
        start,
        kind: PathKind::Conditioned,
        dt,
    })
}

#[derive(Debug, Clone)]
enum SubJumps {
    None,
    PowerTail { delta: f64, s: f64, theta: f64 },
}

/// Increment law of a subordinator over one level window.
#[derive(Debug, Clone)]
pub struct SubStepLaw {
    pub width: f64,
    drift: f64,
    rate: f64,
    poisson: Option<Poisson<f64>>,
    jumps: SubJumps,
}

impl SubStepLaw {
    /// Build the increment law over a window of `width` in the level
    /// variable. `delta` truncates the jump measure; the removed small
    /// jumps are restored through their mean. When `None`, the cutoff is
    /// chosen so that about five jumps fall in the window.
    pub fn new(sub: &SubordinatorSpec, width: f64, delta: Option<f64>) -> Result<SubStepLaw> {
        if !(width > 0.0) {
            return Err(Error::Domain(format!("window must be positive, got {width}")));
        }
        let (drift_unit, rate_unit, jumps) = match sub.nu {
            SubordinatorJumps::Zero => (sub.d, 0.0, SubJumps::None),
            SubordinatorJumps::StableTail { index } => {
                let s = index;
                let delta = delta.unwrap_or_else(|| {
                    (gamma(1.0 - s) * 5.0 / width).powf(-1.0 / s)
                });
                // mean of removed jumps: int_0^delta x nu(dx)
                let comp = s / gamma(1.0 - s) * delta.powf(1.0 - s) / (1.0 - s);
                let rate = delta.powf(-s) / gamma(1.0 - s);
                (
                    sub.d + comp,
                    rate,
                    SubJumps::PowerTail {
                        delta,
                        s,
                        theta: 0.0,
                    },
                )
            }
            SubordinatorJumps::InverseGaussianTail { s2, theta } => {
                let base = 2.0 / (2.0 * std::f64::consts::PI * s2).sqrt();
                let delta = delta.unwrap_or_else(|| (base * width / 5.0).powi(2));
                // int_0^delta x nu(dx) with the x = u^2 substitution.
                let comp = numeric::integrate(
                    &|u: f64| (-theta * u * u).exp(),
                    0.0,
                    delta.sqrt(),
                    1e-12,
                ) * 2.0
                    / (2.0 * std::f64::consts::PI * s2).sqrt();
                let rate = base * delta.powf(-0.5);
                (
                    sub.d + comp,
                    rate,
                    SubJumps::PowerTail {
                        delta,
                        s: 0.5,
                        theta,
                    },
                )
            }
            SubordinatorJumps::Numeric { .. } => {
                return Err(Error::Unsupported(
                    "cannot sample a subordinator with a numeric-only tail".into(),
                ))
            }
        };
        let rate = rate_unit * width;
        if rate > JUMPS_PER_STEP_CAP && delta.is_some() {
            return Err(Error::Resolution {
                dt: width,
                expected_jumps: rate,
                cap: JUMPS_PER_STEP_CAP,
            });
        }
        Ok(SubStepLaw {
            width,
            drift: drift_unit * width,
            rate,
            poisson: (rate > 0.0).then(|| Poisson::new(rate).expect("rate > 0")),
            jumps,
        })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let mut inc = self.drift;
        if let Some(poisson) = &self.poisson {
            let n = poisson.sample(rng) as usize;
            for _ in 0..n {
                if let SubJumps::PowerTail { delta, s, theta } = &self.jumps {
                    let v: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    let x = delta * v.powf(-1.0 / s);
                    if *theta == 0.0 || rng.gen::<f64>() < (-theta * x).exp() {
                        inc += x;
                    }
                }
            }
        }
        inc
    }

    /// Expected proposal jumps in the window.
    pub fn jump_rate(&self) -> f64 {
        self.rate
    }
}

/// Subordinator skeleton on a uniform level grid, killed at an independent
/// exponential level when the killing rate is positive.
pub fn sample_subordinator<R: Rng>(
    sub: &SubordinatorSpec,
    level_max: f64,
    dx: f64,
    rng: &mut R,
) -> Result<SubordinatorPath> {
    if !(level_max > 0.0) || !(dx > 0.0 && dx < level_max) {
        return Err(Error::Domain(format!(
            "need 0 < dx < level_max, got dx = {dx}, level_max = {level_max}"
        )));
    }
    let law = SubStepLaw::new(sub, dx, None)?;
    let killed_at = if sub.k > 0.0 {
        Some(Exp::new(sub.k).expect("k > 0").sample(rng))
    } else {
        None
    };
    let n = (level_max / dx).round() as usize;
    let mut levels = Vec::with_capacity(n + 1);
    let mut times = Vec::with_capacity(n + 1);
    let mut t = 0.0;
    levels.push(0.0);
    times.push(0.0);
    for i in 1..=n {
        let level = i as f64 * dx;
        if let Some(kill) = killed_at {
            if level > kill {
                break;
            }
        }
        t += law.sample(rng);
        levels.push(level);
        times.push(t);
    }
    Ok(SubordinatorPath {
        levels,
        times,
        killed_at,
        dx,
    })
}

/// First grid time the unconditioned process reaches `level`, capped at
/// `t_cap` (`None` when censored by the cap).
pub fn sample_first_passage<R: Rng>(
    spec: &ProcessSpec,
    level: f64,
    dt: f64,
    t_cap: f64,
    rng: &mut R,
) -> Result<Option<f64>> {
    let law = StepLaw::new(spec, dt, None)?;
    let mut x = 0.0;
    let mut t = 0.0;
    while t < t_cap {
        x += law.sample(rng);
        t += dt;
        if x >= level {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Supremum, future infimum, and minimum functionals of a path.
pub fn functionals(path: &SamplePath) -> Result<PathFunctionals> {
    if path.values.is_empty() {
        return Err(Error::Domain("functionals of an empty path".into()));
    }
    let n = path.values.len();
    let mut supremum = Vec::with_capacity(n);
    let mut running = f64::NEG_INFINITY;
    for &v in &path.values {
        running = running.max(v);
        supremum.push(running);
    }
    let mut future_infimum = vec![0.0; n];
    let mut back = f64::INFINITY;
    for i in (0..n).rev() {
        back = back.min(path.values[i]);
        future_infimum[i] = back;
    }
    let min_value = future_infimum[0];
    let min_index = path
        .values
        .iter()
        .position(|&v| v == min_value)
        .expect("minimum attained");
    let min_tied = path
        .values
        .iter()
        .enumerate()
        .any(|(i, &v)| i != min_index && (v - min_value).abs() <= 1e-12);
    Ok(PathFunctionals {
        supremum,
        future_infimum,
        min_index,
        min_time: path.times[min_index],
        min_value,
        min_tied,
    })
}

/// First time at or above `x` and last time at or below `x` on the grid.
pub fn passage_times(path: &SamplePath, x: f64) -> Result<PassageTimes> {
    if x < 0.0 {
        return Err(Error::Domain(format!("passage level must be >= 0, got {x}")));
    }
    if path.values.is_empty() {
        return Err(Error::Domain("passage times of an empty path".into()));
    }
    let first = path
        .values
        .iter()
        .position(|&v| v >= x)
        .map(|i| path.times[i]);
    let last = path
        .values
        .iter()
        .rposition(|&v| v <= x)
        .map(|i| path.times[i]);
    let censored = *path.values.last().unwrap() <= x;
    Ok(PassageTimes {
        first,
        last,
        censored,
    })
}
