use std::cell::Cell;

use crate::manifold::{Point, Tangent};
use crate::objective::ProblemInstance;

/// Per-run wrapper that counts objective value queries.
///
/// Every value query made by a solver goes through here; gradients come
/// bundled with the value and are not counted separately.
pub(crate) struct CountingOracle<'a> {
    problem: &'a ProblemInstance,
    evals: Cell<u64>,
}

impl<'a> CountingOracle<'a> {
    pub fn new(problem: &'a ProblemInstance) -> Self {
        CountingOracle {
            problem,
            evals: Cell::new(0),
        }
    }

    pub fn problem(&self) -> &'a ProblemInstance {
        self.problem
    }

    pub fn eval(&self, p: &Point) -> (f64, Tangent) {
        self.evals.set(self.evals.get() + 1);
        self.problem.value_and_gradient(p)
    }

    pub fn evals(&self) -> u64 {
        self.evals.get()
    }
}
