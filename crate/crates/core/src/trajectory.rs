//! Vertical two-arm trajectory of one multi-diamond interferometer with
//! instantaneous momentum kicks, and its confinement in a height window.
//!
//! The lower arm is the unkicked ballistic path z0 + v0 t − g t²/2 on
//! [0, 2QT]. The upper arm follows it plus a triangular separation of period
//! 2T that peaks at N·v_r·T at odd multiples of T and closes at even ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::golden;
use crate::model::PulseCounts;

/// Confinement tolerance in metres.
pub const CONFINEMENT_TOLERANCE: f64 = 1e-9;
/// Golden-section settings for the launch-velocity search.
pub const LAUNCH_TOLERANCE: f64 = 1e-9;
pub const LAUNCH_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseRole {
    BeamSplitter,
    Mirror,
    FinalBeamSplitter,
}

/// Pulse times with sequence durations collapsed to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTimeline {
    pub pulse_times: Vec<f64>,
    pub pulse_roles: Vec<PulseRole>,
    pub counts: PulseCounts,
    pub interrogation_time: f64,
}

impl PulseTimeline {
    pub fn len(&self) -> usize {
        self.pulse_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulse_times.is_empty()
    }
}

/// N pulses at t = 0, a (2N − 1)-pulse mirror at every t = jT for
/// j = 1…2Q−1 and N pulses at t = 2QT. Odd j are the diamond mirrors, even j
/// the mirrors between diamonds.
pub fn build_timeline(diamonds: u32, lmt_order: u32, interrogation_time: f64) -> Result<PulseTimeline> {
    if diamonds == 0 || lmt_order == 0 {
        return Err(Error::domain(format!(
            "Q and N must be at least 1, got Q = {diamonds}, N = {lmt_order}"
        )));
    }
    if !(interrogation_time > 0.0) {
        return Err(Error::domain(format!("T must be positive, got {interrogation_time}")));
    }
    let counts = PulseCounts {
        diamonds,
        lmt_order,
    };
    let total = counts.total_pulses() as usize;
    let mut pulse_times = Vec::with_capacity(total);
    let mut pulse_roles = Vec::with_capacity(total);
    let mut push = |t: f64, role: PulseRole, n: u32| {
        for _ in 0..n {
            pulse_times.push(t);
            pulse_roles.push(role);
        }
    };
    push(0.0, PulseRole::BeamSplitter, lmt_order);
    for j in 1..2 * diamonds {
        push(f64::from(j) * interrogation_time, PulseRole::Mirror, 2 * lmt_order - 1);
    }
    push(
        f64::from(2 * diamonds) * interrogation_time,
        PulseRole::FinalBeamSplitter,
        lmt_order,
    );
    Ok(PulseTimeline {
        pulse_times,
        pulse_roles,
        counts,
        interrogation_time,
    })
}

/// Δz = N·v_r·T.
pub fn arm_separation_peak(lmt_order: f64, interrogation_time: f64, recoil_velocity: f64) -> f64 {
    lmt_order * recoil_velocity * interrogation_time
}

/// Position parabola a + b t + c t² valid on [t_start, t_end].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmTrajectory {
    pub z0: f64,
    pub v0: f64,
    pub g: f64,
    pub diamonds: u32,
    pub interrogation_time: f64,
    /// Velocity difference between the arms, N·v_r.
    pub kick: f64,
}

impl ArmTrajectory {
    pub fn duration(&self) -> f64 {
        2.0 * f64::from(self.diamonds) * self.interrogation_time
    }

    pub fn separation_peak(&self) -> f64 {
        self.kick * self.interrogation_time
    }

    pub fn lower(&self, t: f64) -> f64 {
        self.z0 + self.v0 * t - 0.5 * self.g * t * t
    }

    pub fn separation(&self, t: f64) -> f64 {
        let period = 2.0 * self.interrogation_time;
        let phase = t.rem_euclid(period);
        let phase = if phase > self.interrogation_time {
            period - phase
        } else {
            phase
        };
        self.kick * phase
    }

    pub fn upper(&self, t: f64) -> f64 {
        self.lower(t) + self.separation(t)
    }

    /// Segment j covers [jT, (j+1)T]; the separation rises on even j and
    /// falls on odd j.
    pub fn segments(&self) -> Vec<Segment> {
        let t = self.interrogation_time;
        (0..2 * self.diamonds)
            .map(|j| {
                let t_start = f64::from(j) * t;
                let lower = [self.z0, self.v0, -0.5 * self.g];
                let upper = if j % 2 == 0 {
                    [self.z0 - self.kick * t_start, self.v0 + self.kick, -0.5 * self.g]
                } else {
                    [self.z0 + self.kick * (t_start + t), self.v0 - self.kick, -0.5 * self.g]
                };
                Segment {
                    t_start,
                    t_end: t_start + t,
                    lower,
                    upper,
                }
            })
            .collect()
    }

    /// Largest upper-arm height on segment j.
    fn segment_max_upper(&self, j: u32) -> f64 {
        let t = self.interrogation_time;
        let (a, b) = (f64::from(j) * t, f64::from(j + 1) * t);
        let slope = if j.is_multiple_of(2) { self.kick } else { -self.kick };
        let mut best = self.upper(a).max(self.upper(b));
        let stationary = (self.v0 + slope) / self.g;
        if stationary > a && stationary < b {
            best = best.max(self.upper(stationary));
        }
        best
    }

    /// Largest lower-arm height on segment j.
    fn segment_max_lower(&self, j: u32) -> f64 {
        let t = self.interrogation_time;
        let (a, b) = (f64::from(j) * t, f64::from(j + 1) * t);
        let apex = (self.v0 / self.g).clamp(a, b);
        self.lower(apex)
    }

    /// Exact (min lower arm, max upper arm) over [0, 2QT].
    ///
    /// Segments are visited outward from the one holding the lower-arm apex;
    /// the lower arm falls monotonically away from it, so a segment whose
    /// lower arm plus Δz cannot beat the running maximum ends the walk.
    pub fn envelope(&self) -> (f64, f64) {
        let min_lower = self.lower(0.0).min(self.lower(self.duration()));
        let count = 2 * self.diamonds;
        let apex_seg = ((self.v0 / self.g / self.interrogation_time).floor().max(0.0) as u64)
            .min(u64::from(count - 1)) as u32;
        let dz = self.separation_peak();
        let mut best = self.segment_max_upper(apex_seg);
        for j in (0..apex_seg).rev() {
            if self.segment_max_lower(j) + dz <= best {
                break;
            }
            best = best.max(self.segment_max_upper(j));
        }
        for j in apex_seg + 1..count {
            if self.segment_max_lower(j) + dz <= best {
                break;
            }
            best = best.max(self.segment_max_upper(j));
        }
        (min_lower, best)
    }

    /// Samples (t, lower, upper) every `step` seconds, always including the
    /// final time.
    pub fn sample(&self, step: f64) -> Result<Vec<(f64, f64, f64)>> {
        if !(step > 0.0) {
            return Err(Error::domain(format!("sampling step must be positive, got {step}")));
        }
        let end = self.duration();
        let n = (end / step).floor() as usize;
        let mut out: Vec<_> = (0..=n)
            .map(|i| i as f64 * step)
            .filter(|&t| t <= end)
            .map(|t| (t, self.lower(t), self.upper(t)))
            .collect();
        if out.last().is_none_or(|p| p.0 < end) {
            out.push((end, self.lower(end), self.upper(end)));
        }
        Ok(out)
    }
}

/// Trajectory of the scheme (Q, N, T) launched from z0 with velocity v0.
pub fn arm_paths(
    diamonds: u32,
    lmt_order: u32,
    interrogation_time: f64,
    z0: f64,
    v0: f64,
    recoil_velocity: f64,
    g: f64,
) -> Result<ArmTrajectory> {
    if diamonds == 0 {
        return Err(Error::domain("Q must be at least 1"));
    }
    if !(interrogation_time > 0.0 && g > 0.0) {
        return Err(Error::domain(format!(
            "T and g must be positive, got T = {interrogation_time}, g = {g}"
        )));
    }
    if !(z0.is_finite() && v0.is_finite() && recoil_velocity >= 0.0) {
        return Err(Error::domain("launch parameters must be finite"));
    }
    Ok(ArmTrajectory {
        z0,
        v0,
        g,
        diamonds,
        interrogation_time,
        kick: f64::from(lmt_order) * recoil_velocity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingConstraint {
    None,
    Bottom,
    Top,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub min_lower_arm: f64,
    pub max_upper_arm: f64,
    pub binding_constraint: BindingConstraint,
}

/// Tests whether the trajectory stays inside [0, window].
///
/// The binding constraint names the violated bound(s); a trajectory taller
/// than the window cannot be fixed by shifting it and reports both.
pub fn check_confinement(traj: &ArmTrajectory, window: f64) -> Result<FeasibilityReport> {
    if !(window > 0.0) {
        return Err(Error::domain(format!("window height must be positive, got {window}")));
    }
    let (min_lower_arm, max_upper_arm) = traj.envelope();
    let tol = CONFINEMENT_TOLERANCE;
    let bottom = min_lower_arm < -tol;
    let top = max_upper_arm > window + tol;
    let binding_constraint = if max_upper_arm - min_lower_arm > window + tol || (bottom && top) {
        BindingConstraint::Both
    } else if bottom {
        BindingConstraint::Bottom
    } else if top {
        BindingConstraint::Top
    } else {
        BindingConstraint::None
    };
    Ok(FeasibilityReport {
        feasible: binding_constraint == BindingConstraint::None,
        min_lower_arm,
        max_upper_arm,
        binding_constraint,
    })
}

/// Smallest window holding the scheme, with the launch that achieves it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequiredHeight {
    pub height: f64,
    pub z0: f64,
    pub v0: f64,
}

/// Minimizes the envelope span over v0 by golden section; the span is convex
/// in v0. z0 then places the lowest point of the lower arm at zero.
pub fn min_required_height(
    diamonds: u32,
    lmt_order: u32,
    interrogation_time: f64,
    recoil_velocity: f64,
    g: f64,
) -> Result<RequiredHeight> {
    let base = arm_paths(diamonds, lmt_order, interrogation_time, 0.0, 0.0, recoil_velocity, g)?;
    let q_t = f64::from(diamonds) * interrogation_time;
    let span = |v0: f64| {
        let (lo, hi) = ArmTrajectory { v0, ..base }.envelope();
        hi - lo
    };
    let best = golden::minimize(
        span,
        0.0,
        2.0 * g * q_t + 2.0 * base.kick,
        LAUNCH_TOLERANCE,
        LAUNCH_MAX_ITER,
    )?;
    let traj = ArmTrajectory { v0: best.x, ..base };
    let (lo, hi) = traj.envelope();
    Ok(RequiredHeight {
        height: hi - lo,
        z0: -lo,
        v0: best.x,
    })
}
