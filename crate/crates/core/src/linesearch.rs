//! Armijo backtracking along a (possibly projected) retraction arc.

use serde::{Deserialize, Serialize};

use crate::manifold::{Manifold, Point, Tangent};

/// How the first trial step of each Armijo search is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepPolicy {
    /// Start every search at step 1.
    Unit,
    /// Start at `1/L`; falls back to `Doubling` when `L` is unknown.
    InverseLipschitz,
    /// Start at twice the last accepted step (1 for the first search).
    Doubling,
}

/// Remembers the last accepted step for the `Doubling` policy.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StepMemory {
    last: Option<f64>,
}

impl StepMemory {
    pub fn new() -> Self {
        StepMemory { last: None }
    }

    pub fn initial(&self, policy: StepPolicy, lipschitz: Option<f64>) -> f64 {
        match (policy, lipschitz) {
            (StepPolicy::Unit, _) => 1.0,
            (StepPolicy::InverseLipschitz, Some(l)) => 1.0 / l,
            _ => self.last.map_or(1.0, |a| 2.0 * a),
        }
    }

    pub fn accept(&mut self, step: f64) {
        self.last = Some(step);
    }
}

pub(crate) struct Accepted {
    pub point: Point,
    pub f: f64,
    pub grad: Tangent,
    pub step: f64,
}

/// Backtracks from `alpha0` until `f(y) <= f(x) + c <g, log_x y>` holds for
/// `y = trial(alpha)`. Returns `None` when the step underflows without an
/// acceptable point, which happens once the achievable decrease drops below
/// floating-point resolution.
#[allow(clippy::too_many_arguments)]
pub(crate) fn backtrack(
    m: &Manifold,
    x: &Point,
    fx: f64,
    g: &Tangent,
    alpha0: f64,
    c: f64,
    factor: f64,
    mut trial: impl FnMut(f64) -> Point,
    mut eval: impl FnMut(&Point) -> (f64, Tangent),
) -> Option<Accepted> {
    const MAX_BACKTRACKS: usize = 200;
    let mut alpha = alpha0;
    for _ in 0..MAX_BACKTRACKS {
        let y = trial(alpha);
        let dir = m.log_unchecked(x, &y);
        let slope = m.inner_unchecked(g.vec(), dir.vec());
        if slope >= 0.0 {
            // no descent left along this arc
            return None;
        }
        let (fy, gy) = eval(&y);
        if fy <= fx + c * slope {
            return Some(Accepted {
                point: y,
                f: fy,
                grad: gy,
                step: alpha,
            });
        }
        alpha *= factor;
    }
    None
}
