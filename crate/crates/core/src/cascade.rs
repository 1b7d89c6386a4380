//! Lumped-element model of current redistribution in a parallel-wire
//! detector.
//!
//! A constant bias source feeds a shunt resistor in parallel with the
//! detector. The detector is a common series inductance followed by `n`
//! parallel wires, each a kinetic inductance plus, once armed, a fixed
//! hotspot resistance. Arming some wires pushes their current into the rest;
//! a wire whose current exceeds its share of the critical current switches
//! too. The run has cascaded once every wire is armed.
//!
//! With `I_k` the wire currents, `S = sum(I_k)`, `V = R_shunt * I_shunt`:
//!
//! ```text
//! L_series dS/dt + L_wire dI_k/dt + R_k I_k = V
//! I_bias = I_shunt + S
//! ```
//!
//! Integration is classical fixed-step RK4. Threshold crossings are located by
//! linear interpolation within the step and the step is then redone up to the
//! crossing, so switching times converge at second order in `dt`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CascadeError {
    #[error("invalid circuit parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("armed wires must be a nonempty proper subset of 0..{n_wires}, got {armed:?}")]
    InvalidArmedSet { n_wires: usize, armed: Vec<usize> },
    #[error("time step {dt:e} s is unstable for this circuit; use dt <= {suggested:e} s")]
    StepTooLarge { dt: f64, suggested: f64 },
    #[error("bias list is empty")]
    EmptySweep,
    #[error("bias points must be sorted ascending")]
    UnsortedSweep,
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> CascadeError {
    CascadeError::InvalidParameter { name, value, reason }
}

/// Circuit element values, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeCircuit {
    pub n_wires: usize,
    /// Kinetic inductance of each wire (H).
    pub wire_inductance: f64,
    /// Resistance of an armed wire (Ω).
    pub hotspot_resistance: f64,
    pub shunt_resistance: f64,
    /// Common meander inductance in series with all wires (H).
    pub series_inductance: f64,
    pub bias_current: f64,
    /// Device critical current; each wire switches above `critical_current / n_wires`.
    pub critical_current: f64,
}

impl Default for CascadeCircuit {
    fn default() -> Self {
        Self {
            n_wires: 3,
            wire_inductance: 50e-9,
            hotspot_resistance: 1e3,
            shunt_resistance: 50.0,
            series_inductance: 500e-9,
            bias_current: 0.69 * 21e-6,
            critical_current: 21e-6,
        }
    }
}

impl CascadeCircuit {
    pub fn validate(&self) -> Result<(), CascadeError> {
        if self.n_wires < 2 {
            return Err(invalid("n_wires", self.n_wires as f64, "need at least two wires"));
        }
        let positive = [
            ("wire_inductance", self.wire_inductance),
            ("hotspot_resistance", self.hotspot_resistance),
            ("shunt_resistance", self.shunt_resistance),
            ("series_inductance", self.series_inductance),
            ("bias_current", self.bias_current),
            ("critical_current", self.critical_current),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, v, "must be positive and finite"));
            }
        }
        if self.bias_current >= self.critical_current {
            return Err(invalid("bias_current", self.bias_current, "must be below the critical current"));
        }
        Ok(())
    }

    pub fn with_bias(&self, bias_current: f64) -> Self {
        Self { bias_current, ..*self }
    }

    /// Switching threshold of a single wire.
    pub fn wire_threshold(&self) -> f64 {
        self.critical_current / self.n_wires as f64
    }

    /// Largest RK4 step that is stable for the stiffest mode, with margin.
    pub fn max_stable_dt(&self) -> f64 {
        // Fastest decay is an armed wire discharging through its own inductance.
        2.5 * self.wire_inductance / self.hotspot_resistance
    }
}

/// Integration horizon and step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings {
    pub horizon: f64,
    pub dt: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            horizon: 2e-9,
            dt: 0.1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeTrace {
    pub times: Vec<f64>,
    /// `per_wire_currents[sample][wire]`.
    pub per_wire_currents: Vec<Vec<f64>>,
    pub shunt_currents: Vec<f64>,
    /// When each wire became armed; `Some(0.0)` for the initially armed ones.
    pub switch_times: Vec<Option<f64>>,
    pub cascade_latency: Option<f64>,
    pub cascaded: bool,
}

impl CascadeTrace {
    /// Largest relative violation of `I_bias = I_shunt + sum(I_k)`.
    pub fn max_conservation_error(&self, bias: f64) -> f64 {
        self.per_wire_currents
            .iter()
            .zip(&self.shunt_currents)
            .map(|(w, s)| ((w.iter().sum::<f64>() + s) - bias).abs() / bias)
            .fold(0.0, f64::max)
    }
}

struct Network<'a> {
    c: &'a CascadeCircuit,
    armed: Vec<bool>,
}

impl Network<'_> {
    /// State is `[I_0 .. I_{n-1}, I_shunt]`.
    fn derivative(&self, state: &[f64], out: &mut [f64]) {
        let n = self.c.n_wires;
        let v = self.c.shunt_resistance * state[n];
        let drop: f64 = (0..n)
            .filter(|&k| self.armed[k])
            .map(|k| self.c.hotspot_resistance * state[k])
            .sum();
        let ds = (n as f64 * v - drop) / (n as f64 * self.c.series_inductance + self.c.wire_inductance);
        let mut total = 0.0;
        for k in 0..n {
            let r = if self.armed[k] { self.c.hotspot_resistance } else { 0.0 };
            let d = (v - r * state[k] - self.c.series_inductance * ds) / self.c.wire_inductance;
            out[k] = d;
            total += d;
        }
        out[n] = -total;
    }

    fn rk4(&self, state: &[f64], h: f64) -> Vec<f64> {
        let m = state.len();
        let mut k1 = vec![0.0; m];
        let mut k2 = vec![0.0; m];
        let mut k3 = vec![0.0; m];
        let mut k4 = vec![0.0; m];
        let mut tmp = vec![0.0; m];
        self.derivative(state, &mut k1);
        for i in 0..m {
            tmp[i] = state[i] + 0.5 * h * k1[i];
        }
        self.derivative(&tmp, &mut k2);
        for i in 0..m {
            tmp[i] = state[i] + 0.5 * h * k2[i];
        }
        self.derivative(&tmp, &mut k3);
        for i in 0..m {
            tmp[i] = state[i] + h * k3[i];
        }
        self.derivative(&tmp, &mut k4);
        (0..m)
            .map(|i| state[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    }
}

/// Integrates the network from the equal-split steady state after arming
/// `armed_wires` at t = 0.
pub fn simulate_cascade(
    circuit: &CascadeCircuit,
    armed_wires: &[usize],
    settings: SimulationSettings,
) -> Result<CascadeTrace, CascadeError> {
    circuit.validate()?;
    let n = circuit.n_wires;
    let mut armed = vec![false; n];
    for &w in armed_wires {
        if w >= n {
            return Err(CascadeError::InvalidArmedSet {
                n_wires: n,
                armed: armed_wires.to_vec(),
            });
        }
        armed[w] = true;
    }
    let armed_count = armed.iter().filter(|&&a| a).count();
    if armed_count == 0 || armed_count == n {
        return Err(CascadeError::InvalidArmedSet {
            n_wires: n,
            armed: armed_wires.to_vec(),
        });
    }
    let SimulationSettings { horizon, dt } = settings;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", horizon, "must be positive"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", dt, "must be positive"));
    }
    let suggested = circuit.max_stable_dt();
    if dt > suggested {
        return Err(CascadeError::StepTooLarge { dt, suggested });
    }

    let threshold = circuit.wire_threshold();
    let bias = circuit.bias_current;
    let mut net = Network { c: circuit, armed };
    let mut switch_times: Vec<Option<f64>> = net.armed.iter().map(|&a| a.then_some(0.0)).collect();

    let mut state: Vec<f64> = vec![bias / n as f64; n];
    state.push(0.0);
    let mut t = 0.0;
    let mut trace = CascadeTrace {
        times: vec![t],
        per_wire_currents: vec![state[..n].to_vec()],
        shunt_currents: vec![state[n]],
        switch_times: Vec::new(),
        cascade_latency: None,
        cascaded: false,
    };
    let blowup = 1e3 * bias;

    while t < horizon {
        let h = dt.min(horizon - t);
        let next = net.rk4(&state, h);
        if next.iter().any(|v| !v.is_finite() || v.abs() > blowup) {
            return Err(CascadeError::StepTooLarge { dt, suggested: dt / 2.0 });
        }
        // earliest crossing among unarmed wires in this step
        let crossing = (0..n)
            .filter(|&k| !net.armed[k] && state[k] <= threshold && next[k] > threshold)
            .map(|k| (state[k] - threshold) / (state[k] - next[k]))
            .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |a| a.min(f))));

        let (new_state, new_t) = match crossing {
            Some(frac) => {
                let h_event = (h * frac).max(0.0);
                let at_event = if h_event > 0.0 { net.rk4(&state, h_event) } else { state.clone() };
                let t_event = t + h_event;
                // switch every wire at or above threshold at the event time
                for k in 0..n {
                    if !net.armed[k] && at_event[k] >= threshold * (1.0 - 1e-12) {
                        net.armed[k] = true;
                        switch_times[k] = Some(t_event);
                    }
                }
                (at_event, t_event)
            }
            None => (next, t + h),
        };
        state = new_state;
        t = new_t;
        trace.times.push(t);
        trace.per_wire_currents.push(state[..n].to_vec());
        trace.shunt_currents.push(state[n]);
        if net.armed.iter().all(|&a| a) {
            trace.cascaded = true;
            trace.cascade_latency = switch_times.iter().flatten().copied().reduce(f64::max);
            break;
        }
    }
    trace.switch_times = switch_times;
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub bias: f64,
    pub latency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySweep {
    pub armed_count: usize,
    pub points: Vec<SweepPoint>,
    /// Smallest bias that cascades within the horizon, if any point cascaded.
    pub cascade_threshold_current: Option<f64>,
}

fn latency_at(
    circuit: &CascadeCircuit,
    armed: &[usize],
    bias: f64,
    settings: SimulationSettings,
) -> Result<Option<f64>, CascadeError> {
    Ok(simulate_cascade(&circuit.with_bias(bias), armed, settings)?.cascade_latency)
}

/// Cascade latency over a sorted list of bias currents with the first
/// `armed_count` wires armed, plus the cascade threshold current bracketed by
/// bisection to `1e-3 * critical_current`.
pub fn latency_bias_sweep(
    circuit: &CascadeCircuit,
    armed_count: usize,
    bias_points: &[f64],
    settings: SimulationSettings,
) -> Result<LatencySweep, CascadeError> {
    if bias_points.is_empty() {
        return Err(CascadeError::EmptySweep);
    }
    if bias_points.windows(2).any(|w| w[1] < w[0]) {
        return Err(CascadeError::UnsortedSweep);
    }
    let armed: Vec<usize> = (0..armed_count).collect();
    let latencies = bias_points
        .par_iter()
        .map(|&bias| latency_at(circuit, &armed, bias, settings))
        .collect::<Result<Vec<_>, _>>()?;
    let points: Vec<SweepPoint> = bias_points
        .iter()
        .zip(&latencies)
        .map(|(&bias, &latency)| SweepPoint { bias, latency })
        .collect();

    let cascade_threshold_current = match points.iter().position(|p| p.latency.is_some()) {
        None => None,
        Some(first) => {
            let mut hi = points[first].bias;
            let mut lo = if first > 0 { points[first - 1].bias } else { 0.0 };
            let tol = 1e-3 * circuit.critical_current;
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if latency_at(circuit, &armed, mid, settings)?.is_some() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        }
    };
    Ok(LatencySweep {
        armed_count,
        points,
        cascade_threshold_current,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ic() -> f64 {
        CascadeCircuit::default().critical_current
    }

    #[test]
    fn low_bias_single_arm_does_not_cascade() {
        let c = CascadeCircuit::default().with_bias(0.3 * ic());
        let t = simulate_cascade(&c, &[0], SimulationSettings::default()).unwrap();
        assert!(!t.cascaded);
        assert!(t.cascade_latency.is_none());
        let max_other = t.per_wire_currents.iter().map(|w| w[1]).fold(0.0, f64::max);
        assert!(max_other < c.wire_threshold());
    }

    #[test]
    fn high_bias_single_arm_cascades() {
        let c = CascadeCircuit::default().with_bias(0.95 * ic());
        let t = simulate_cascade(&c, &[0], SimulationSettings::default()).unwrap();
        assert!(t.cascaded);
        let lat = t.cascade_latency.unwrap();
        assert!(lat > 0.0 && lat < 2e-9);
        assert_eq!(t.switch_times[0], Some(0.0));
    }

    #[test]
    fn two_armed_wires_cascade_faster() {
        let c = CascadeCircuit::default().with_bias(0.9 * ic());
        let one = simulate_cascade(&c, &[0], SimulationSettings::default()).unwrap();
        let two = simulate_cascade(&c, &[0, 1], SimulationSettings::default()).unwrap();
        assert!(two.cascade_latency.unwrap() < one.cascade_latency.unwrap());
    }

    #[test]
    fn current_is_conserved() {
        let c = CascadeCircuit::default().with_bias(0.8 * ic());
        let t = simulate_cascade(&c, &[0], SimulationSettings::default()).unwrap();
        assert!(t.max_conservation_error(c.bias_current) < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = CascadeCircuit::default();
        let s = SimulationSettings::default();
        assert!(matches!(simulate_cascade(&c, &[], s), Err(CascadeError::InvalidArmedSet { .. })));
        assert!(matches!(simulate_cascade(&c, &[0, 1, 2], s), Err(CascadeError::InvalidArmedSet { .. })));
        assert!(matches!(simulate_cascade(&c, &[5], s), Err(CascadeError::InvalidArmedSet { .. })));
        let coarse = SimulationSettings { horizon: 1e-9, dt: 1e-9 };
        assert!(matches!(simulate_cascade(&c, &[0], coarse), Err(CascadeError::StepTooLarge { .. })));
        assert!(c.with_bias(2.0 * ic()).validate().is_err());
        assert!(matches!(latency_bias_sweep(&c, 1, &[], s), Err(CascadeError::EmptySweep)));
        assert!(matches!(
            latency_bias_sweep(&c, 1, &[2e-6, 1e-6], s),
            Err(CascadeError::UnsortedSweep)
        ));
    }

    #[test]
    fn sub_threshold_sweep_has_no_latencies() {
        let c = CascadeCircuit::default();
        let biases: Vec<f64> = (1..=5).map(|i| 0.1 * i as f64 * ic()).collect();
        let sweep = latency_bias_sweep(&c, 1, &biases, SimulationSettings::default()).unwrap();
        assert!(sweep.points.iter().all(|p| p.latency.is_none()));
        assert!(sweep.cascade_threshold_current.is_none());
    }

    #[test]
    fn threshold_current_drops_with_more_armed_wires() {
        let c = CascadeCircuit::default();
        let biases: Vec<f64> = (1..=19).map(|i| 0.05 * i as f64 * ic()).collect();
        let s = SimulationSettings::default();
        let one = latency_bias_sweep(&c, 1, &biases, s).unwrap();
        let two = latency_bias_sweep(&c, 2, &biases, s).unwrap();
        let (i1, i2) = (one.cascade_threshold_current.unwrap(), two.cascade_threshold_current.unwrap());
        assert!(i2 < i1, "{i2} vs {i1}");
        // steady-state redistribution bounds: (n - a) wires must carry I_c / n each
        assert!(i1 > 2.0 / 3.0 * ic() * 0.99);
        assert!(i2 > 1.0 / 3.0 * ic() * 0.99);
    }
}
