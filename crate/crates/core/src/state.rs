//! Time-level containers for the incremental wave field and recorded runs.

use crate::error::CoreError;
use crate::field::Field;
use crate::grid::Grid;

/// One time level: displacement, velocity, time.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub u: Field,
    pub udot: Field,
    pub t: f64,
}

impl WaveState {
    pub fn zeros(grid: &Grid) -> Self {
        WaveState {
            u: Field::zeros(grid, 1),
            udot: Field::zeros(grid, 1),
            t: 0.0,
        }
    }

    pub fn assert_finite(&self, context: &str) -> Result<(), CoreError> {
        for v in self.u.as_slice().iter().chain(self.udot.as_slice()) {
            if !v.is_finite() {
                return Err(CoreError::Diverged(format!(
                    "non-finite field value at {context}"
                )));
            }
        }
        Ok(())
    }
}

/// A recorded time level. `u_prev` is the displacement one step earlier,
/// which is exactly what a leapfrog run needs to resume bit-for-bit; the
/// stored velocity is the centered two-step estimate.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub state: WaveState,
    pub u_prev: Field,
}

/// Named per-step scalar record (energy, balances, norms).
#[derive(Debug, Clone)]
pub struct MonitorSeries {
    pub name: String,
    /// (step, time, value) triples.
    pub samples: Vec<(usize, f64, f64)>,
}

/// Uniformly sampled history of a run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub snaps: Vec<Snapshot>,
    pub monitors: Vec<MonitorSeries>,
}

impl Trajectory {
    pub fn new(dt: f64) -> Self {
        Trajectory {
            dt,
            snaps: Vec::new(),
            monitors: Vec::new(),
        }
    }

    /// Builds a trajectory from displacement samples at uniform spacing `dt`
    /// starting at `t0`. Velocities are centered differences of the samples
    /// (one-sided second order at the ends), so a density evaluated on the
    /// result sees exactly the discrete rates the action quadrature assumes.
    pub fn from_samples(dt: f64, t0: f64, us: Vec<Field>) -> Result<Self, CoreError> {
        let n = us.len();
        if n < 3 {
            return Err(CoreError::invalid("need at least 3 samples"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CoreError::invalid("dt must be positive"));
        }
        let mut snaps = Vec::with_capacity(n);
        for i in 0..n {
            let mut udot = us[i].clone();
            udot.fill(0.0);
            if i == 0 {
                udot.axpy(-3.0 / (2.0 * dt), &us[0])?;
                udot.axpy(4.0 / (2.0 * dt), &us[1])?;
                udot.axpy(-1.0 / (2.0 * dt), &us[2])?;
            } else if i == n - 1 {
                udot.axpy(3.0 / (2.0 * dt), &us[n - 1])?;
                udot.axpy(-4.0 / (2.0 * dt), &us[n - 2])?;
                udot.axpy(1.0 / (2.0 * dt), &us[n - 3])?;
            } else {
                udot.axpy(1.0 / (2.0 * dt), &us[i + 1])?;
                udot.axpy(-1.0 / (2.0 * dt), &us[i - 1])?;
            }
            let u_prev = if i == 0 {
                let mut p = us[0].clone();
                p.scale(2.0);
                p.axpy(-1.0, &us[1])?;
                p
            } else {
                us[i - 1].clone()
            };
            snaps.push(Snapshot {
                step: i,
                state: WaveState {
                    u: us[i].clone(),
                    udot,
                    t: t0 + i as f64 * dt,
                },
                u_prev,
            });
        }
        Ok(Trajectory {
            dt,
            snaps,
            monitors: Vec::new(),
        })
    }

    pub fn state(&self, i: usize) -> &WaveState {
        &self.snaps[i].state
    }

    pub fn len(&self) -> usize {
        self.snaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snaps.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn centered_rates_are_exact_on_quadratic_time_dependence() {
        let g = Grid::line(8, 1.0, Boundary::Periodic).unwrap();
        let dt = 0.25;
        let us: Vec<Field> = (0..5)
            .map(|n| {
                let t = n as f64 * dt;
                let mut f = Field::zeros(&g, 1);
                f.fill(1.0 + 2.0 * t + 3.0 * t * t);
                f
            })
            .collect();
        let traj = Trajectory::from_samples(dt, 0.0, us).unwrap();
        for s in &traj.snaps {
            let t = s.state.t;
            let expect = 2.0 + 6.0 * t;
            let got = s.state.udot.v(0, 0);
            assert!((got - expect).abs() < 1e-12, "t={t} got {got}");
        }
    }

    #[test]
    fn too_short_sample_lists_are_rejected() {
        let g = Grid::line(8, 1.0, Boundary::Periodic).unwrap();
        let us = vec![Field::zeros(&g, 1), Field::zeros(&g, 1)];
        assert!(Trajectory::from_samples(0.1, 0.0, us).is_err());
    }
}
