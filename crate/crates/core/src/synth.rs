//! Synthetic six-task exoskeleton trajectories with known dynamics.
//!
//! The state is `[elbow angle, elbow velocity, wrist angle, wrist
//! velocity]`, the robot action is the pair of sEMG thresholds and the user
//! action is biceps, triceps, hand-open and hand-close sEMG. One step of
//! the ground truth is
//!
//! ```text
//! Δθ = ω·dt
//! Δω = dt·(τ(d) − c·ω − k·(θ − θ₀))
//! τ(d) = G·d + A·tanh(s·d)·σ((|d| − thr) / w)
//! ```
//!
//! with `d` the agonist minus antagonist activation of the joint and `thr`
//! its threshold. A simulated user tracks a task-specific reference with a
//! PD law and produces whatever activation yields the needed torque;
//! co-contraction bursts ride on both channels of a pair and cancel in `d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed::derive_seed;
use crate::types::{DimensionProfile, NoiseSpec, TaskLabel, Trial};

/// Per-joint default noise standard deviations: angle (rad), velocity (rad/s).
pub const DEFAULT_ANGLE_NOISE_STD: f64 = 0.005;
pub const DEFAULT_VELOCITY_NOISE_STD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileShape {
    /// `sin(2πp)`
    Sine,
    /// `(1 − cos(2πp)) / 2`, resting at 0 and peaking at 1.
    Raised,
}

/// Angle as a function of cycle phase `φ ∈ [0, 1)`:
/// `mean + amplitude·shape(w(φ) + offset) + harmonic·sin(4π(w(φ) + offset))`
/// with the monotone warp `w(φ) = φ + κ₁ sin(2πφ)/2π + κ₂ sin(4πφ)/4π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AngleProfile {
    pub mean: f64,
    pub amplitude: f64,
    pub shape: ProfileShape,
    /// Phase offset in cycles.
    pub offset: f64,
    pub harmonic: f64,
    pub warp1: f64,
    pub warp2: f64,
}

impl Default for AngleProfile {
    fn default() -> Self {
        AngleProfile {
            mean: 0.0,
            amplitude: 0.5,
            shape: ProfileShape::Sine,
            offset: 0.0,
            harmonic: 0.0,
            warp1: 0.0,
            warp2: 0.0,
        }
    }
}

impl AngleProfile {
    fn warp(&self, phi: f64) -> (f64, f64) {
        let w = phi + self.warp1 * (TAU * phi).sin() / TAU + self.warp2 * (2.0 * TAU * phi).sin() / (2.0 * TAU);
        let dw = 1.0 + self.warp1 * (TAU * phi).cos() + self.warp2 * (2.0 * TAU * phi).cos();
        (w, dw)
    }

    /// Angle and its derivative with respect to phase.
    pub fn eval(&self, phi: f64) -> (f64, f64) {
        let (w, dw) = self.warp(phi);
        let p = w + self.offset;
        let (g, dg) = match self.shape {
            ProfileShape::Sine => ((TAU * p).sin(), TAU * (TAU * p).cos()),
            ProfileShape::Raised => ((1.0 - (TAU * p).cos()) / 2.0, PI * (TAU * p).sin()),
        };
        let h = (2.0 * TAU * p).sin();
        let dh = 2.0 * TAU * (2.0 * TAU * p).cos();
        (
            self.mean + self.amplitude * g + self.harmonic * h,
            (self.amplitude * dg + self.harmonic * dh) * dw,
        )
    }

    /// Second derivative with respect to phase, by central differences.
    pub fn second_derivative(&self, phi: f64) -> f64 {
        const H: f64 = 1e-4;
        (self.eval(phi + H).1 - self.eval(phi - H).1) / (2.0 * H)
    }

    fn check(&self, label: TaskLabel, joint: &str, depth: f64) -> Result<()> {
        let invalid = |reason: String| Error::InvalidArchetype { label, reason };
        if ![self.mean, self.amplitude, self.offset, self.harmonic, self.warp1, self.warp2]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(invalid(format!("{joint} profile has non-finite parameters")));
        }
        if self.warp1.abs() + self.warp2.abs() >= 1.0 {
            return Err(invalid(format!("{joint} phase warp is not monotone")));
        }
        for i in 0..=1000 {
            let (a, _) = self.eval(i as f64 / 1000.0);
            for m in [1.0 - depth, 1.0 + depth] {
                let v = self.mean + m * (a - self.mean);
                if !(-PI..=PI).contains(&v) {
                    return Err(invalid(format!("{joint} angle {v:.3} rad leaves [-π, π]")));
                }
            }
        }
        Ok(())
    }
}

/// Periodic Gaussian co-contraction burst added to both channels of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Burst {
    pub amplitude: f64,
    /// Phase of the burst peak in cycles.
    pub center: f64,
    /// Width in cycles.
    pub width: f64,
}

impl Default for Burst {
    fn default() -> Self {
        Burst {
            amplitude: 0.2,
            center: 0.25,
            width: 0.08,
        }
    }
}

impl Burst {
    pub fn eval(&self, phi: f64) -> f64 {
        // wrapped distance to the center
        let d = (phi - self.center + 0.5).rem_euclid(1.0) - 0.5;
        self.amplitude * (-0.5 * (d / self.width).powi(2)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskArchetype {
    pub label: TaskLabel,
    pub elbow: AngleProfile,
    pub wrist: AngleProfile,
    pub elbow_burst: Burst,
    pub wrist_burst: Burst,
    /// Elbow and hand sEMG thresholds before the subject's offset.
    pub thresholds: [f64; 2],
    pub cycles: f64,
    pub duration_s: f64,
    pub rate: f64,
    /// Largest per-trial phase shift, in cycles.
    pub phase_jitter: f64,
    #[serde(default)]
    pub modulation: Modulation,
}

/// Slow amplitude envelope `1 + depth·sin(2π·cycles·t / duration)` around
/// each profile's mean, shared by all trials of a task.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Modulation {
    pub depth: f64,
    /// Envelope periods over the whole trial.
    pub cycles: f64,
}

impl Modulation {
    /// Envelope and its first two time derivatives.
    fn eval(&self, t: f64, duration: f64) -> (f64, f64, f64) {
        let w = TAU * self.cycles / duration;
        let (s, c) = (w * t).sin_cos();
        (1.0 + self.depth * s, self.depth * w * c, -self.depth * w * w * s)
    }
}

impl TaskArchetype {
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidArchetype {
            label: self.label,
            reason: reason.into(),
        };
        if !(self.rate >= 10.0 && self.rate.is_finite()) {
            return Err(invalid("sample rate must be at least 10 Hz"));
        }
        if !(self.duration_s > 0.0 && self.cycles > 0.0) {
            return Err(invalid("duration and cycle count must be positive"));
        }
        if !(0.0..=0.05).contains(&self.phase_jitter) {
            return Err(invalid("phase jitter must lie in [0, 0.05] cycles"));
        }
        for b in [&self.elbow_burst, &self.wrist_burst] {
            if !(b.amplitude >= 0.0 && b.width > 0.0) {
                return Err(invalid("bursts need non-negative amplitude and positive width"));
            }
        }
        if !(self.modulation.depth >= 0.0 && self.modulation.depth < 1.0 && self.modulation.cycles.is_finite()) {
            return Err(invalid("modulation depth must lie in [0, 1)"));
        }
        self.elbow.check(self.label, "elbow", self.modulation.depth)?;
        self.wrist.check(self.label, "wrist", self.modulation.depth)
    }

    pub fn samples(&self) -> usize {
        (self.duration_s * self.rate).round() as usize
    }

    /// Cycles per second.
    pub fn frequency(&self) -> f64 {
        self.cycles / self.duration_s
    }
}

const DURATION_S: f64 = 20.0;
const RATE_HZ: f64 = 128.0;
const JITTER: f64 = 0.05;

pub fn default_archetypes() -> Vec<TaskArchetype> {
    let base = |label, elbow, wrist, cycles, bursts: (f64, f64)| TaskArchetype {
        label,
        elbow,
        wrist,
        elbow_burst: Burst {
            center: bursts.0,
            ..Default::default()
        },
        wrist_burst: Burst {
            center: bursts.1,
            amplitude: 0.15,
            ..Default::default()
        },
        thresholds: [0.3, 0.3],
        cycles,
        duration_s: DURATION_S,
        rate: RATE_HZ,
        phase_jitter: JITTER,
        modulation: Modulation {
            depth: 0.3,
            cycles: 1.5,
        },
    };
    let sine = |mean, amplitude, offset| AngleProfile {
        mean,
        amplitude,
        offset,
        ..Default::default()
    };
    let raised = |mean, amplitude, warp1, warp2| AngleProfile {
        mean,
        amplitude,
        shape: ProfileShape::Raised,
        warp1,
        warp2,
        ..Default::default()
    };
    vec![
        base(TaskLabel::H, sine(0.9, 0.8, 0.0), sine(0.0, 0.7, 0.0), 6.0, (0.25, 0.75)),
        base(TaskLabel::V, sine(0.9, 0.8, 0.25), sine(0.0, -0.7, 0.25), 6.0, (0.5, 0.0)),
        base(
            TaskLabel::LR,
            AngleProfile {
                harmonic: 0.15,
                ..sine(1.0, 0.7, 0.125)
            },
            sine(0.3, 0.8, 0.25),
            5.0,
            (0.1, 0.4),
        ),
        base(
            TaskLabel::RL,
            AngleProfile {
                harmonic: 0.15,
                ..sine(1.0, 0.7, 0.125)
            },
            sine(-0.3, -0.8, 0.25),
            5.0,
            (0.6, 0.9),
        ),
        base(TaskLabel::E, raised(0.4, 1.3, 0.6, 0.25), raised(0.0, -0.9, 0.6, 0.25), 4.0, (0.5, 0.5)),
        base(TaskLabel::P, raised(1.4, -1.1, -0.7, 0.0), raised(0.2, 0.7, -0.7, 0.0), 7.0, (0.5, 0.55)),
    ]
}

/// Passive and actuated properties of one joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointParams {
    pub gain: f64,
    pub saturation: f64,
    pub slope: f64,
    pub gate_width: f64,
    pub damping: f64,
    pub stiffness: f64,
    pub rest_angle: f64,
}

impl JointParams {
    /// Torque produced by net activation `d` against threshold `thr`.
    pub fn torque(&self, d: f64, thr: f64) -> f64 {
        let gate = 1.0 / (1.0 + (-(d.abs() - thr) / self.gate_width).exp());
        self.gain * d + self.saturation * (self.slope * d).tanh() * gate
    }

    /// Net activation producing `target` torque; `torque` is increasing in `d`.
    pub fn invert(&self, target: f64, thr: f64) -> f64 {
        let (mut lo, mut hi) = (-ACTIVATION_LIMIT, ACTIVATION_LIMIT);
        if target <= self.torque(lo, thr) {
            return lo;
        }
        if target >= self.torque(hi, thr) {
            return hi;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.torque(mid, thr) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

const ACTIVATION_LIMIT: f64 = 20.0;

/// The generating map `f(x, u, v)` for one subject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub elbow: JointParams,
    pub wrist: JointParams,
    pub dt: f64,
}

impl GroundTruth {
    /// One-step state change; `x` has 4 entries, `u` 2 and `v` 4.
    pub fn delta(&self, x: &[f64], u: &[f64], v: &[f64]) -> [f64; 4] {
        let joint = |p: &JointParams, theta: f64, omega: f64, d: f64, thr: f64| {
            let acc = p.torque(d, thr) - p.damping * omega - p.stiffness * (theta - p.rest_angle);
            (omega * self.dt, acc * self.dt)
        };
        let (a, b) = joint(&self.elbow, x[0], x[1], v[0] - v[1], u[0]);
        let (c, d) = joint(&self.wrist, x[2], x[3], v[2] - v[3], u[1]);
        [a, b, c, d]
    }
}

/// What distinguishes one synthetic subject: muscle gains, sEMG baseline
/// and threshold offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectParams {
    pub id: String,
    pub elbow_gain: f64,
    pub wrist_gain: f64,
    pub saturation: f64,
    pub emg_offset: f64,
    pub threshold_offset: [f64; 2],
}

impl Default for SubjectParams {
    fn default() -> Self {
        SubjectParams {
            id: "1".into(),
            elbow_gain: 4.0,
            wrist_gain: 3.0,
            saturation: 6.0,
            emg_offset: 0.1,
            threshold_offset: [0.0, 0.0],
        }
    }
}

impl SubjectParams {
    /// Subject `index` (0-based) drawn from `seed`; its id is `index + 1`.
    pub fn draw(index: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x5B7, index as u64]));
        SubjectParams {
            id: (index + 1).to_string(),
            elbow_gain: rng.gen_range(3.0..5.0),
            wrist_gain: rng.gen_range(2.5..4.0),
            saturation: rng.gen_range(4.0..8.0),
            emg_offset: rng.gen_range(0.05..0.15),
            threshold_offset: [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)],
        }
    }

    pub fn ground_truth(&self, rate: f64) -> GroundTruth {
        let joint = |gain, damping, stiffness, rest_angle| JointParams {
            gain,
            saturation: self.saturation,
            slope: 2.0,
            gate_width: 0.1,
            damping,
            stiffness,
            rest_angle,
        };
        GroundTruth {
            elbow: joint(self.elbow_gain, 0.8, 2.0, 0.8),
            wrist: joint(self.wrist_gain, 1.0, 3.0, 0.0),
            dt: 1.0 / rate,
        }
    }

    pub fn thresholds(&self, arch: &TaskArchetype) -> [f64; 2] {
        [
            arch.thresholds[0] + self.threshold_offset[0],
            arch.thresholds[1] + self.threshold_offset[1],
        ]
    }
}

// PD gains of the simulated user's tracking law.
const KP: f64 = 60.0;
const KD: f64 = 15.0;

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

/// Trials of one task for the default subject.
pub fn generate_task(arch: &TaskArchetype, noise: &NoiseSpec, trials: usize, seed: u64) -> Result<Vec<Trial>> {
    generate_subject_task(arch, &SubjectParams::default(), noise, trials, seed)
}

/// Simulates `trials` independent repetitions of `arch` for one subject.
/// Trial `i` gets index `i + 1`, its own noise stream and a phase shift of
/// at most `arch.phase_jitter` cycles.
pub fn generate_subject_task(
    arch: &TaskArchetype,
    subject: &SubjectParams,
    noise: &NoiseSpec,
    trials: usize,
    seed: u64,
) -> Result<Vec<Trial>> {
    arch.validate()?;
    if trials == 0 {
        return Err(Error::EmptyInput("trial count"));
    }
    if noise.dim() != 4 {
        return Err(Error::DimensionMismatch {
            what: "noise covariance",
            expected: 4,
            found: noise.dim(),
        });
    }
    (0..trials)
        .map(|i| {
            simulate(arch, subject, noise, trial_seed(seed, arch.label, i), i as u32 + 1)
        })
        .collect()
}

fn simulate(arch: &TaskArchetype, subject: &SubjectParams, noise: &NoiseSpec, seed: u64, index: u32) -> Result<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = if arch.phase_jitter > 0.0 {
        rng.gen_range(-arch.phase_jitter..=arch.phase_jitter)
    } else {
        0.0
    };
    let truth = subject.ground_truth(arch.rate);
    let thr = subject.thresholds(arch);
    let n = arch.samples();
    let freq = arch.frequency();
    let dt = truth.dt;
    let factor = (!noise.is_zero()).then(|| noise.factor());

    let phase = |t: usize| (freq * t as f64 * dt + jitter).rem_euclid(1.0);
    // reference angle, velocity and acceleration at sample t
    let reference = |p: &AngleProfile, t: usize| {
        let phi = phase(t);
        let (a, da) = p.eval(phi);
        let dda = p.second_derivative(phi);
        let (m, dm, ddm) = arch.modulation.eval(t as f64 * dt, arch.duration_s);
        let dev = a - p.mean;
        (
            p.mean + m * dev,
            dm * dev + m * da * freq,
            ddm * dev + 2.0 * dm * da * freq + m * dda * freq * freq,
        )
    };
    let mut x = {
        let (e, de, _) = reference(&arch.elbow, 0);
        let (w, dw, _) = reference(&arch.wrist, 0);
        [e, de, w, dw]
    };
    let mut data = Vec::with_capacity(n * 10);
    for t in 0..n {
        let phi = phase(t);
        let mut v = [0.0; 4];
        for (j, (profile, params, burst)) in [
            (&arch.elbow, &truth.elbow, &arch.elbow_burst),
            (&arch.wrist, &truth.wrist, &arch.wrist_burst),
        ]
        .into_iter()
        .enumerate()
        {
            let (theta, omega) = (x[2 * j], x[2 * j + 1]);
            let (r, dr, ddr) = reference(profile, t);
            let acc = ddr + KP * (r - theta) + KD * (dr - omega);
            let torque = acc + params.damping * omega + params.stiffness * (theta - params.rest_angle);
            let d = params.invert(torque, thr[j]);
            let co = burst.eval(phi);
            v[2 * j] = subject.emg_offset + softplus(d) + co;
            v[2 * j + 1] = subject.emg_offset + softplus(-d) + co;
        }
        data.extend_from_slice(&x);
        data.extend_from_slice(&thr);
        data.extend_from_slice(&v);
        if t + 1 < n {
            let f = truth.delta(&x, &thr, &v);
            for k in 0..4 {
                x[k] += f[k];
            }
            if let Some(l) = &factor {
                let z: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
                for r in 0..4 {
                    x[r] += (0..4).map(|c| l.get(r, c) * z[c]).sum::<f64>();
                }
            }
            for k in [0, 2] {
                if !(-PI..=PI).contains(&x[k]) {
                    return Err(Error::InvalidArchetype {
                        label: arch.label,
                        reason: format!("simulated angle {:.3} rad left [-π, π] at sample {}", x[k], t + 1),
                    });
                }
            }
        }
    }
    Trial::new(
        Matrix::from_vec(n, 10, data)?,
        arch.rate,
        arch.label,
        subject.id.clone(),
        index,
        DimensionProfile::default(),
    )
}

/// Generator settings, loadable from TOML or JSON. Keys absent from the
/// file keep their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub trials: usize,
    /// Variances of the four state channels' additive noise.
    pub noise_variances: [f64; 4],
    /// Overrides applied to every archetype when set.
    pub duration_s: Option<f64>,
    pub rate: Option<f64>,
    pub phase_jitter: Option<f64>,
    pub archetypes: Vec<TaskArchetype>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let a = DEFAULT_ANGLE_NOISE_STD * DEFAULT_ANGLE_NOISE_STD;
        let v = DEFAULT_VELOCITY_NOISE_STD * DEFAULT_VELOCITY_NOISE_STD;
        SynthConfig {
            trials: 4,
            noise_variances: [a, v, a, v],
            duration_s: None,
            rate: None,
            phase_jitter: None,
            archetypes: default_archetypes(),
        }
    }
}

impl SynthConfig {
    pub fn noiseless() -> Self {
        SynthConfig {
            noise_variances: [0.0; 4],
            ..Default::default()
        }
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        NoiseSpec::diagonal(&self.noise_variances)
    }

    /// Archetype for `label` with the global overrides applied.
    pub fn archetype(&self, label: TaskLabel) -> Result<TaskArchetype> {
        let mut a = self
            .archetypes
            .iter()
            .find(|a| a.label == label)
            .cloned()
            .ok_or(Error::MissingTask(label))?;
        if let Some(d) = self.duration_s {
            a.duration_s = d;
        }
        if let Some(r) = self.rate {
            a.rate = r;
        }
        if let Some(j) = self.phase_jitter {
            a.phase_jitter = j;
        }
        Ok(a)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(serde_json::from_str(&text)?),
            _ => Ok(toml::from_str(&text)?),
        }
    }
}

/// Seed of trial `i` (0-based) given its (subject, task) seed.
pub fn trial_seed(seed: u64, task: TaskLabel, i: usize) -> u64 {
    derive_seed(seed, &[task.index() as u64, i as u64])
}

/// Seed for the trials of one (subject, task) pair.
pub fn task_seed(seed: u64, subject: usize, task: TaskLabel) -> u64 {
    derive_seed(seed, &[0x7A5C, subject as u64, task.index() as u64])
}
