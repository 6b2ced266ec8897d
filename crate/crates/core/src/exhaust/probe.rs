use serde::{Deserialize, Serialize};

/// Compactly supported test function used to watch `A(x_n, v) - <v*, v>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Probe {
    /// Piecewise-linear hat with peak 1 at `center`.
    Hat { center: f64, half_width: f64 },
    /// Indicator of `[left, right]`; not in `H^1`, so only usable with
    /// first-order forms.
    Indicator { left: f64, right: f64 },
}

impl Probe {
    /// `count` hats evenly spaced in `[p, q]` with touching supports.
    pub fn hats_in(p: f64, q: f64, count: usize) -> Vec<Probe> {
        let width = (q - p) / (count as f64 + 1.0);
        (0..count)
            .map(|i| Probe::Hat {
                center: p + (i as f64 + 1.0) * width,
                half_width: width,
            })
            .collect()
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Probe::Hat { center, half_width } => (center - half_width, center + half_width),
            Probe::Indicator { left, right } => (left, right),
        }
    }

    pub fn is_valid(&self) -> bool {
        let (a, b) = self.support();
        a.is_finite() && b.is_finite() && a < b
    }

    pub fn inside(&self, left: f64, right: f64) -> bool {
        let (a, b) = self.support();
        left <= a && b <= right
    }

    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            Probe::Hat { center, .. } => vec![center],
            Probe::Indicator { .. } => Vec::new(),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Probe::Hat { center, half_width } => (1.0 - (x - center).abs() / half_width).max(0.0),
            Probe::Indicator { left, right } => {
                if x >= left && x <= right {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative away from the kinks.
    pub fn slope(&self, x: f64) -> f64 {
        match *self {
            Probe::Hat { center, half_width } => {
                if (x - center).abs() >= half_width {
                    0.0
                } else if x < center {
                    1.0 / half_width
                } else {
                    -1.0 / half_width
                }
            }
            Probe::Indicator { .. } => 0.0,
        }
    }
}
