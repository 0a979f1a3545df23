use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::{center_of_mass, RobotParams, StateVec};
use crate::simulation::plant::AppliedInput;

pub const TRACE_CSV_HEADER: &str = "t,x1,v1,x2,v2,fa,mu1,mu2,f1,f2";

/// Uniformly sampled run: `states[n]` and `inputs[n]` belong to `t = n·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub dt: f64,
    pub states: Vec<StateVec>,
    pub inputs: Vec<AppliedInput>,
}

impl SimTrace {
    pub fn with_capacity(dt: f64, samples: usize) -> Self {
        Self {
            dt,
            states: Vec::with_capacity(samples),
            inputs: Vec::with_capacity(samples),
        }
    }

    pub fn push(&mut self, state: StateVec, input: AppliedInput) {
        self.states.push(state);
        self.inputs.push(input);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Time spanned from the first to the last sample.
    pub fn duration(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn net_displacement(&self) -> Result<(f64, f64)> {
        let (first, last) = match (self.states.first(), self.states.last()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::EmptyTrace),
        };
        Ok((last.x1 - first.x1, last.x2 - first.x2))
    }

    /// Signed mean velocity of the rear block over the trace.
    pub fn average_speed(&self) -> Result<f64> {
        let (dx1, _) = self.net_displacement()?;
        let duration = self.duration();
        if duration <= 0.0 {
            return Err(Error::invalid("trace", "needs at least two samples for a speed"));
        }
        Ok(dx1 / duration)
    }

    pub fn max_abs_center_of_mass(&self, params: &RobotParams) -> f64 {
        self.states
            .iter()
            .map(|s| center_of_mass(s, params).abs())
            .fold(0.0, f64::max)
    }

    /// Coefficient of determination of a least-squares line through `x1(t)`.
    pub fn displacement_linearity(&self) -> f64 {
        let ys: Vec<f64> = self.states.iter().map(|s| s.x1).collect();
        let ts: Vec<f64> = (0..ys.len()).map(|n| self.time(n)).collect();
        linear_fit_r2(&ts, &ys)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        for (n, (s, u)) in self.states.iter().zip(&self.inputs).enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                self.time(n),
                s.x1,
                s.v1,
                s.x2,
                s.v2,
                u.fa,
                u.mu1,
                u.mu2,
                u.f1,
                u.f2
            )?;
        }
        Ok(())
    }

    /// Parses the CSV written by [`SimTrace::write_csv`]. The sample period
    /// is recovered from the second timestamp.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty trace file".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        if header.trim() != TRACE_CSV_HEADER {
            return Err(Error::Parse(format!("unexpected header `{header}`")));
        }
        let mut times = Vec::new();
        let mut trace = SimTrace::with_capacity(0.0, 0);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", i + 2)))?;
            if vals.len() != 10 {
                return Err(Error::Parse(format!("row {}: expected 10 fields, got {}", i + 2, vals.len())));
            }
            times.push(vals[0]);
            trace.push(
                StateVec::new(vals[1], vals[2], vals[3], vals[4]),
                AppliedInput {
                    fa: vals[5],
                    mu1: vals[6],
                    mu2: vals[7],
                    f1: vals[8],
                    f2: vals[9],
                },
            );
        }
        if times.len() < 2 {
            return Err(Error::Parse("a trace needs at least two rows".into()));
        }
        trace.dt = times[1] - times[0];
        Ok(trace)
    }
}

pub fn linear_fit_r2(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 1.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if syy == 0.0 {
        return 1.0;
    }
    (sxy * sxy) / (sxx * syy)
}
