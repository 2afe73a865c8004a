//! Body forces: an optional static load plus an incremental source with a
//! time signature. The default test source is a point force with a Ricker
//! wavelet, the usual choice for elastodynamic benchmarks.

use crate::error::CoreError;
use crate::field::Field;
use crate::grid::Grid;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TimeSignal {
    /// s(t) = A (1 - 2 pi^2 f^2 tau^2) exp(-pi^2 f^2 tau^2), tau = t - delay.
    Ricker {
        center_freq: f64,
        delay: f64,
        amplitude: f64,
    },
    Sine {
        freq: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl TimeSignal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeSignal::Ricker {
                center_freq,
                delay,
                amplitude,
            } => {
                let a = (std::f64::consts::PI * center_freq * (t - delay)).powi(2);
                amplitude * (1.0 - 2.0 * a) * (-a).exp()
            }
            TimeSignal::Sine {
                freq,
                amplitude,
                phase,
            } => amplitude * (std::f64::consts::TAU * freq * t + phase).sin(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum IncrementalSource {
    None,
    /// Point force: amplitude divided by the cell volume so the force
    /// integrates to the signal value regardless of resolution.
    Point {
        ix: usize,
        iy: usize,
        component: usize,
        signal: TimeSignal,
    },
    /// Separable distributed source f_i(x, t) = profile_i(x) s(t).
    Sampled { profile: Field, signal: TimeSignal },
}

#[derive(Debug, Clone)]
pub struct BodyForceModel {
    /// Extra static load on top of the background equilibrium force; zero in
    /// most runs.
    pub static_part: Option<Field>,
    pub source: IncrementalSource,
}

impl BodyForceModel {
    pub fn none() -> Self {
        BodyForceModel {
            static_part: None,
            source: IncrementalSource::None,
        }
    }

    pub fn point(grid: &Grid, ix: usize, iy: usize, component: usize, signal: TimeSignal) -> Result<Self, CoreError> {
        if ix >= grid.n[0] || iy >= grid.n[1] || component >= grid.dim {
            return Err(CoreError::invalid("point source outside the grid"));
        }
        Ok(BodyForceModel {
            static_part: None,
            source: IncrementalSource::Point {
                ix,
                iy,
                component,
                signal,
            },
        })
    }

    /// Incremental + static force at time t, as a vector field.
    pub fn eval(&self, grid: &Grid, t: f64) -> Result<Field, CoreError> {
        let mut f = Field::zeros(grid, 1);
        if let Some(st) = &self.static_part {
            f.axpy(1.0, st)?;
        }
        match &self.source {
            IncrementalSource::None => {}
            IncrementalSource::Point {
                ix,
                iy,
                component,
                signal,
            } => {
                let node = grid.node(*ix, *iy);
                let s = signal.eval(t) / grid.cell_volume();
                let cur = f.v(node, *component);
                f.set_v(node, *component, cur + s);
            }
            IncrementalSource::Sampled { profile, signal } => {
                f.axpy(signal.eval(t), profile)?;
            }
        }
        for v in f.as_slice() {
            if !v.is_finite() {
                return Err(CoreError::Numerical(format!("non-finite body force at t = {t}")));
            }
        }
        Ok(f)
    }

    pub fn is_zero(&self) -> bool {
        self.static_part.is_none() && matches!(self.source, IncrementalSource::None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use crate::ops;

    #[test]
    fn ricker_peaks_at_the_delay_and_crosses_zero_where_expected() {
        let s = TimeSignal::Ricker {
            center_freq: 2.0,
            delay: 1.5,
            amplitude: 3.0,
        };
        assert!((s.eval(1.5) - 3.0).abs() < 1e-15);
        let tau = 1.0 / (std::f64::consts::PI * 2.0 * 2.0_f64.sqrt());
        assert!(s.eval(1.5 + tau).abs() < 1e-13);
    }

    #[test]
    fn point_force_integrates_to_the_signal_value() {
        let g = Grid::line(64, 0.05, Boundary::Periodic).unwrap();
        let sig = TimeSignal::Sine {
            freq: 1.0,
            amplitude: 2.0,
            phase: 0.5,
        };
        let want = sig.eval(0.3);
        let m = BodyForceModel::point(&g, 10, 0, 0, sig).unwrap();
        let f = m.eval(&g, 0.3).unwrap();
        let total = ops::integrate_nodal(&g, f.comp_slice(0));
        assert!((total - want).abs() < 1e-13);
    }

    #[test]
    fn out_of_grid_point_sources_are_rejected() {
        let g = Grid::line(16, 0.1, Boundary::Periodic).unwrap();
        let sig = TimeSignal::Sine {
            freq: 1.0,
            amplitude: 1.0,
            phase: 0.0,
        };
        assert!(BodyForceModel::point(&g, 20, 0, 0, sig).is_err());
    }
}
