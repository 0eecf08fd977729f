//! Composite Simpson rules on geometric time grids.

/// Panel breakpoints `t_0 < t_1 < … < t_k`; each panel is integrated with
/// Simpson's rule using its arithmetic midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    breakpoints: Vec<f64>,
}

impl TimeGrid {
    pub fn from_breakpoints(breakpoints: Vec<f64>) -> Self {
        debug_assert!(breakpoints.windows(2).all(|w| w[0] < w[1]));
        Self { breakpoints }
    }

    /// Geometric breakpoints from `start` to `end` (both `> 0`) with at
    /// least `panels_per_decade` panels per factor of ten.
    pub fn geometric(start: f64, end: f64, panels_per_decade: usize) -> Self {
        assert!(start > 0.0 && end > start, "bad geometric range [{start}, {end}]");
        let decades = (end / start).log10();
        let panels = ((decades * panels_per_decade as f64).ceil() as usize).max(1);
        let ratio = (end / start).powf(1.0 / panels as f64);
        let mut breakpoints = Vec::with_capacity(panels + 1);
        let mut t = start;
        breakpoints.push(t);
        for _ in 1..panels {
            t *= ratio;
            breakpoints.push(t);
        }
        breakpoints.push(end);
        Self { breakpoints }
    }

    /// `uniform` panels on `[0, start]` followed by a geometric grid up to
    /// `end`.
    pub fn with_uniform_head(start: f64, end: f64, panels_per_decade: usize, uniform: usize) -> Self {
        let mut breakpoints: Vec<f64> = (0..uniform).map(|k| start * k as f64 / uniform as f64).collect();
        breakpoints.extend(Self::geometric(start, end, panels_per_decade).breakpoints);
        Self { breakpoints }
    }

    /// Appends the panels of `other`, whose first breakpoint must equal this
    /// grid's last one.
    pub fn concat(mut self, other: &TimeGrid) -> Self {
        assert_eq!(self.end(), other.start(), "grids must share an endpoint");
        self.breakpoints.extend_from_slice(&other.breakpoints[1..]);
        self
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn panels(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Every evaluation point: breakpoints and panel midpoints interleaved,
    /// in increasing order. Length `2·panels + 1`.
    pub fn nodes(&self) -> Vec<f64> {
        let mut nodes = Vec::with_capacity(2 * self.panels() + 1);
        for w in self.breakpoints.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.end());
        nodes
    }

    /// Simpson weights aligned with [`TimeGrid::nodes`].
    pub fn weights(&self) -> Vec<f64> {
        let mut weights = vec![0.0; 2 * self.panels() + 1];
        for (k, w) in self.breakpoints.windows(2).enumerate() {
            let h = w[1] - w[0];
            weights[2 * k] += h / 6.0;
            weights[2 * k + 1] += 4.0 * h / 6.0;
            weights[2 * k + 2] += h / 6.0;
        }
        weights
    }

    /// Simpson sum over panels `first..last` given samples at
    /// [`TimeGrid::nodes`].
    pub fn integrate_panels(&self, samples: &[f64], first: usize, last: usize) -> f64 {
        assert_eq!(samples.len(), 2 * self.panels() + 1);
        (first..last)
            .map(|k| {
                let h = self.breakpoints[k + 1] - self.breakpoints[k];
                h / 6.0 * (samples[2 * k] + 4.0 * samples[2 * k + 1] + samples[2 * k + 2])
            })
            .sum()
    }

    pub fn integrate_samples(&self, samples: &[f64]) -> f64 {
        self.integrate_panels(samples, 0, self.panels())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let samples: Vec<f64> = self.nodes().into_iter().map(f).collect();
        self.integrate_samples(&samples)
    }

    /// Index of the panel whose left breakpoint is `t` (exact match).
    pub fn panel_starting_at(&self, t: f64) -> Option<usize> {
        self.breakpoints.iter().position(|&b| b == t)
    }
}

/// Panels per decade for a target tolerance: 64 at `tol ≥ 1e-8`, growing
/// like `tol^{-1/4}` below that to track Simpson's fourth-order error.
pub fn panels_per_decade(tol: f64) -> usize {
    let factor = (1e-8 / tol).powf(0.25).max(1.0);
    (64.0 * factor).ceil() as usize
}
