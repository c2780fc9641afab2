use serde::{Deserialize, Serialize};

/// Altitude-hold PID with a clamped integral and a clamped output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidState {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub integral: f64,
    pub prev_error: f64,
    pub setpoint: f64,
    pub i_max: f64,
    pub vz_max: f64,
}

impl Default for PidState {
    fn default() -> Self {
        PidState {
            kp: 1.5,
            ki: 0.2,
            kd: 0.4,
            integral: 0.0,
            prev_error: 0.0,
            setpoint: 2.0,
            i_max: 0.5,
            vz_max: 1.0,
        }
    }
}

/// One controller update; returns the vertical velocity command.
pub fn pid_step(state: &mut PidState, measured_z: f64, dt: f64) -> f64 {
    let e = state.setpoint - measured_z;
    state.integral = (state.integral + e * dt).clamp(-state.i_max, state.i_max);
    let derivative = (e - state.prev_error) / dt;
    state.prev_error = e;
    (state.kp * e + state.ki * state.integral + state.kd * derivative).clamp(-state.vz_max, state.vz_max)
}

/// Vertical axis as a first-order velocity lag: `τ·v̇ = vz_cmd − v`,
/// `ż = v`, integrated exactly for piecewise-constant commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltitudePlant {
    pub z: f64,
    pub vz: f64,
    pub tau: f64,
}

impl AltitudePlant {
    pub fn new(tau: f64) -> Self {
        AltitudePlant { z: 0.0, vz: 0.0, tau }
    }

    pub fn step(&mut self, cmd: f64, dt: f64) {
        if self.tau <= 0.0 {
            self.vz = cmd;
            self.z += cmd * dt;
        } else {
            let a = (-dt / self.tau).exp();
            self.z += cmd * dt + (self.vz - cmd) * self.tau * (1.0 - a);
            self.vz = cmd + (self.vz - cmd) * a;
        }
        if self.z < 0.0 {
            self.z = 0.0;
            self.vz = self.vz.max(0.0);
        }
    }
}
