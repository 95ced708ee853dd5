//! Fixed-step RK4 integration of `q̇ = Σ u_i(t) g_i(q)`, periodic bracket
//! inputs, and exact-versus-approximation comparisons.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trident::{self, BodyPose, Configuration, Parametrization};
use crate::vfield::{lie_bracket, FieldError, VectorField};

pub const DEFAULT_AMPLITUDE: f64 = 0.1;
pub const DEFAULT_OMEGA: f64 = 1.0;
pub const DEFAULT_STEPS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("expected {expected} fields of dimension 6, got {got}")]
    FieldCount { expected: usize, got: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Which pair of control fields a periodic input excites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputKind {
    #[serde(rename = "12")]
    Bracket12,
    #[serde(rename = "13")]
    Bracket13,
    #[serde(rename = "23")]
    Bracket23,
    #[serde(rename = "custom")]
    Custom,
}

impl InputKind {
    pub const BUILT_IN: [InputKind; 3] = [InputKind::Bracket12, InputKind::Bracket13, InputKind::Bracket23];

    /// 0-based index pair `(i, j)`; the input drives `g_i` with `−Aω sin ωt` and `g_j` with `Aω cos ωt`.
    pub fn pair(self) -> Option<(usize, usize)> {
        match self {
            InputKind::Bracket12 => Some((0, 1)),
            InputKind::Bracket13 => Some((0, 2)),
            InputKind::Bracket23 => Some((1, 2)),
            InputKind::Custom => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            InputKind::Bracket12 => "12",
            InputKind::Bracket13 => "13",
            InputKind::Bracket23 => "23",
            InputKind::Custom => "custom",
        }
    }
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for InputKind {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "12" | "bracket12" => Ok(InputKind::Bracket12),
            "13" | "bracket13" => Ok(InputKind::Bracket13),
            "23" | "bracket23" => Ok(InputKind::Bracket23),
            other => Err(SimError::InvalidInput(format!("unknown input kind `{other}`"))),
        }
    }
}

type InputFn = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

/// Control signal `t ↦ (u1, u2, u3)`.
#[derive(Clone)]
pub struct ControlInput {
    pub kind: InputKind,
    pub amplitude: f64,
    pub omega: f64,
    custom: Option<InputFn>,
}

impl fmt::Debug for ControlInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlInput")
            .field("kind", &self.kind)
            .field("amplitude", &self.amplitude)
            .field("omega", &self.omega)
            .finish()
    }
}

impl ControlInput {
    /// Built-in periodic input; `amplitude` and `omega` must be positive.
    pub fn periodic(kind: InputKind, amplitude: f64, omega: f64) -> Result<Self, SimError> {
        if !(amplitude > 0.0) {
            return Err(SimError::InvalidInput(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        Self::with_amplitude(kind, amplitude, omega)
    }

    /// Like [`ControlInput::periodic`] but also accepts a zero amplitude.
    pub fn with_amplitude(kind: InputKind, amplitude: f64, omega: f64) -> Result<Self, SimError> {
        if kind == InputKind::Custom {
            return Err(SimError::InvalidInput(
                "custom inputs are built with ControlInput::custom".into(),
            ));
        }
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(SimError::InvalidInput(format!(
                "amplitude must be non-negative, got {amplitude}"
            )));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(SimError::InvalidInput(format!("omega must be positive, got {omega}")));
        }
        Ok(ControlInput {
            kind,
            amplitude,
            omega,
            custom: None,
        })
    }

    pub fn custom(f: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        ControlInput {
            kind: InputKind::Custom,
            amplitude: 0.0,
            omega: 1.0,
            custom: Some(Arc::new(f)),
        }
    }

    pub fn constant(u: [f64; 3]) -> Self {
        Self::custom(move |_| u)
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn eval(&self, t: f64) -> [f64; 3] {
        if let Some(f) = &self.custom {
            return f(t);
        }
        let (i, j) = self.kind.pair().expect("built-in kind");
        let (s, c) = (self.omega * t).sin_cos();
        let mut u = [0.0; 3];
        u[i] = -self.amplitude * self.omega * s;
        u[j] = self.amplitude * self.omega * c;
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTag {
    Exact,
    NilpotentX,
    NilpotentY,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub q: Configuration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub input: String,
    pub model: ModelTag,
    pub step: f64,
    pub integrator: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn endpoint(&self) -> Configuration {
        self.samples.last().expect("trajectory has samples").q
    }

    pub fn with_model(mut self, model: ModelTag) -> Self {
        self.meta.model = model;
        self
    }

    /// Planar poses along the trajectory.
    ///
    /// For the transformed parametrisation the world root is reconstructed
    /// from `ṙ = R_θ (ẋ1, ẋ2)` with the midpoint rule between samples.
    pub fn poses(&self, param: Parametrization) -> Vec<BodyPose> {
        let mut out = Vec::with_capacity(self.samples.len());
        let Some(first) = self.samples.first() else { return out };
        let mut root = [first.q.x, first.q.y];
        let mut prev = first.q;
        for s in &self.samples {
            root = match param {
                Parametrization::Original => [s.q.x, s.q.y],
                Parametrization::Transformed => {
                    let dx = s.q.x - prev.x;
                    let dy = s.q.y - prev.y;
                    let (sn, cs) = (0.5 * (s.q.theta + prev.theta)).sin_cos();
                    [root[0] + cs * dx - sn * dy, root[1] + sn * dx + cs * dy]
                }
            };
            prev = s.q;
            out.push(trident::kinematics_at(&s.q, root, param));
        }
        out
    }
}

fn velocity(fields: &[VectorField], u: &[f64; 3], q: &[f64; 6]) -> [f64; 6] {
    let mut v = [0.0; 6];
    for (g, &ui) in fields.iter().zip(u) {
        if ui == 0.0 {
            continue;
        }
        for (k, c) in g.components().iter().enumerate() {
            if !c.is_const_zero() {
                v[k] += ui * c.eval(q);
            }
        }
    }
    v
}

fn axpy(q: &[f64; 6], h: f64, k: &[f64; 6]) -> [f64; 6] {
    let mut out = *q;
    for i in 0..6 {
        out[i] += h * k[i];
    }
    out
}

/// Classical fourth-order Runge–Kutta with `steps` uniform steps over `[0, duration]`.
pub fn integrate(
    fields: &[VectorField],
    u: &ControlInput,
    q0: Configuration,
    duration: f64,
    steps: usize,
) -> Result<Trajectory, SimError> {
    if fields.is_empty() || fields.len() > 3 || fields.iter().any(|f| f.dim() != 6) {
        return Err(SimError::FieldCount {
            expected: 3,
            got: fields.len(),
        });
    }
    if steps == 0 {
        return Err(SimError::InvalidInput("steps must be at least 1".into()));
    }
    if !(duration > 0.0) {
        return Err(SimError::InvalidInput(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let h = duration / steps as f64;
    let mut q = q0.to_array();
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(Sample { t: 0.0, q: q0 });
    for n in 0..steps {
        let t = n as f64 * h;
        let u0 = u.eval(t);
        let um = u.eval(t + 0.5 * h);
        let u1 = u.eval(t + h);
        let k1 = velocity(fields, &u0, &q);
        let k2 = velocity(fields, &um, &axpy(&q, 0.5 * h, &k1));
        let k3 = velocity(fields, &um, &axpy(&q, 0.5 * h, &k2));
        let k4 = velocity(fields, &u1, &axpy(&q, h, &k3));
        for i in 0..6 {
            q[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = (n + 1) as f64 * h;
        if q.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite { t: t_next });
        }
        samples.push(Sample {
            t: t_next,
            q: Configuration::from_array(q),
        });
    }
    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta {
            input: u.kind.label().to_string(),
            model: ModelTag::Exact,
            step: h,
            integrator: "rk4",
        },
    })
}

/// Largest `|slip|` over all samples and wheels when following `fields` under `u`.
pub fn max_slip(traj: &Trajectory, fields: &[VectorField], u: &ControlInput, param: Parametrization) -> f64 {
    traj.samples
        .iter()
        .map(|s| {
            let qdot = velocity(fields, &u.eval(s.t), &s.q.to_array());
            trident::slip(&s.q, &qdot, param)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketDisplacement {
    pub endpoint: Configuration,
    /// `[g_i, g_j](0)` for the input's pair.
    pub bracket: Vec<f64>,
    pub direction_cosine: f64,
    pub magnitude: f64,
}

/// Net displacement from the origin after one period of a built-in input,
/// compared with the direction of the excited bracket.
pub fn bracket_displacement(
    fields: &[VectorField],
    kind: InputKind,
    amplitude: f64,
    omega: f64,
    steps: usize,
) -> Result<BracketDisplacement, SimError> {
    let (i, j) = kind
        .pair()
        .ok_or_else(|| SimError::InvalidInput("bracket displacement needs a built-in input".into()))?;
    if fields.len() < 3 {
        return Err(SimError::FieldCount {
            expected: 3,
            got: fields.len(),
        });
    }
    let u = ControlInput::with_amplitude(kind, amplitude, omega)?;
    let traj = integrate(fields, &u, Configuration::origin(), u.period(), steps)?;
    let endpoint = traj.endpoint();
    let disp = endpoint.to_array();
    let bracket = lie_bracket(&fields[i], &fields[j])?.eval(&[0.0; 6]);
    Ok(BracketDisplacement {
        endpoint,
        direction_cosine: cosine(&disp, &bracket),
        magnitude: norm(&disp),
        bracket,
    })
}

/// Parameters of one exact-versus-approximation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Experiment {
    pub kind: InputKind,
    pub amplitude: f64,
    pub omega: f64,
    pub periods: usize,
    /// Steps per period.
    pub steps: usize,
    pub start: Configuration,
}

impl Experiment {
    pub fn new(kind: InputKind, amplitude: f64) -> Self {
        Experiment {
            kind,
            amplitude,
            omega: DEFAULT_OMEGA,
            periods: 1,
            steps: DEFAULT_STEPS,
            start: Configuration::origin(),
        }
    }

    pub fn input(&self) -> Result<ControlInput, SimError> {
        ControlInput::with_amplitude(self.kind, self.amplitude, self.omega)
    }

    pub fn duration(&self) -> f64 {
        self.periods as f64 * 2.0 * PI / self.omega
    }

    pub fn total_steps(&self) -> usize {
        self.steps * self.periods
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub kind: InputKind,
    pub amplitude: f64,
    pub omega: f64,
    pub periods: usize,
    pub steps: usize,
    /// Largest configuration-space distance between the two models over time.
    pub max_dev: f64,
    pub endpoint_dev: f64,
    /// Largest planar distance between corresponding wheels.
    pub wheel_dev: [f64; 3],
    /// Largest wheel slip of the nilpotent model.
    pub max_slip: f64,
    pub exact_max_slip: f64,
    /// Exact-model displacement versus the excited bracket at the start point.
    pub direction_cosine: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: ComparisonReport,
    pub exact: Trajectory,
    pub nilpotent: Trajectory,
}

/// Runs both models from `experiment.start` under the same input.
pub fn compare(
    exact_fields: &[VectorField],
    hat_fields_x: &[VectorField],
    experiment: &Experiment,
    param: Parametrization,
) -> Result<Comparison, SimError> {
    let u = experiment.input()?;
    let duration = experiment.duration();
    let steps = experiment.total_steps();
    let start = experiment.start;
    let exact = integrate(exact_fields, &u, start, duration, steps)?;
    let nilpotent = integrate(hat_fields_x, &u, start, duration, steps)?.with_model(ModelTag::NilpotentX);

    let max_dev = exact
        .samples
        .iter()
        .zip(&nilpotent.samples)
        .map(|(a, b)| distance(&a.q.to_array(), &b.q.to_array()))
        .fold(0.0, f64::max);
    let endpoint_dev = distance(&exact.endpoint().to_array(), &nilpotent.endpoint().to_array());

    let mut wheel_dev = [0.0f64; 3];
    for (pa, pb) in exact.poses(param).iter().zip(nilpotent.poses(param).iter()) {
        for i in 0..3 {
            wheel_dev[i] = wheel_dev[i].max(distance(&pa.wheels[i], &pb.wheels[i]));
        }
    }

    let q0 = start.to_array();
    let disp: Vec<f64> = exact
        .endpoint()
        .to_array()
        .iter()
        .zip(&q0)
        .map(|(a, b)| a - b)
        .collect();
    let direction_cosine = match experiment.kind.pair() {
        Some((i, j)) => cosine(&disp, &lie_bracket(&exact_fields[i], &exact_fields[j])?.eval(&q0)),
        None => 0.0,
    };

    let report = ComparisonReport {
        kind: experiment.kind,
        amplitude: experiment.amplitude,
        omega: experiment.omega,
        periods: experiment.periods,
        steps: experiment.steps,
        max_dev,
        endpoint_dev,
        wheel_dev,
        max_slip: max_slip(&nilpotent, hat_fields_x, &u, param),
        exact_max_slip: max_slip(&exact, exact_fields, &u, param),
        direction_cosine,
        magnitude: norm(&disp),
    };
    Ok(Comparison {
        report,
        exact,
        nilpotent,
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Runs [`compare`] for every (kind, amplitude) pair on scoped threads; results
/// come back in input order.
pub fn sweep(
    exact_fields: &[VectorField],
    hat_fields_x: &[VectorField],
    experiments: &[Experiment],
    param: Parametrization,
) -> Result<Vec<ComparisonReport>, SimError> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = experiments
            .iter()
            .map(|e| scope.spawn(move || compare(exact_fields, hat_fields_x, e, param).map(|c| c.report)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}
