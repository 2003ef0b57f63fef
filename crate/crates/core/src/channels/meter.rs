use crate::error::{Error, Resource, Result};

/// Resource limits of an adversary class; `u64::MAX` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CostBudget {
    pub max_steps: u64,
    pub max_parallel_rounds: u64,
    pub max_space_units: u64,
    pub max_oracle_queries: u64,
}

impl CostBudget {
    pub const fn unlimited() -> Self {
        Self {
            max_steps: u64::MAX,
            max_parallel_rounds: u64::MAX,
            max_space_units: u64::MAX,
            max_oracle_queries: u64::MAX,
        }
    }

    pub const fn with_rounds(rounds: u64) -> Self {
        Self { max_parallel_rounds: rounds, ..Self::unlimited() }
    }

    /// This budget widened by `extra` on every line (closure under a reduction).
    pub fn widened(&self, extra: &CostBudget) -> Self {
        Self {
            max_steps: self.max_steps.saturating_add(extra.max_steps),
            max_parallel_rounds: self.max_parallel_rounds.saturating_add(extra.max_parallel_rounds),
            max_space_units: self.max_space_units.saturating_add(extra.max_space_units),
            max_oracle_queries: self.max_oracle_queries.saturating_add(extra.max_oracle_queries),
        }
    }
}

impl Default for CostBudget {
    fn default() -> Self {
        Self::unlimited()
    }
}

/// Monotone cost counters checked against a budget. Space is measured in
/// words held simultaneously, and the peak is what counts.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CostMeter {
    pub budget: CostBudget,
    pub steps: u64,
    pub parallel_rounds: u64,
    pub space_units: u64,
    pub oracle_queries: u64,
    /// Set once any line overflowed; later charges keep failing.
    pub exceeded: Option<Resource>,
    /// Deepest random-oracle digest obtained under this meter.
    pub max_oracle_depth: u64,
}

impl CostMeter {
    pub fn new(budget: CostBudget) -> Self {
        Self { budget, steps: 0, parallel_rounds: 0, space_units: 0, oracle_queries: 0, exceeded: None, max_oracle_depth: 0 }
    }

    pub fn unlimited() -> Self {
        Self::new(CostBudget::unlimited())
    }

    fn check(&mut self) -> Result<()> {
        if let Some(r) = self.exceeded {
            return Err(Error::BudgetExceeded(r));
        }
        let over = if self.steps > self.budget.max_steps {
            Some(Resource::Steps)
        } else if self.parallel_rounds > self.budget.max_parallel_rounds {
            Some(Resource::ParallelRounds)
        } else if self.space_units > self.budget.max_space_units {
            Some(Resource::Space)
        } else if self.oracle_queries > self.budget.max_oracle_queries {
            Some(Resource::OracleQueries)
        } else {
            None
        };
        match over {
            Some(r) => {
                self.exceeded = Some(r);
                Err(Error::BudgetExceeded(r))
            }
            None => Ok(()),
        }
    }

    pub fn charge_steps(&mut self, n: u64) -> Result<()> {
        self.steps = self.steps.saturating_add(n.max(1));
        self.check()
    }

    pub fn charge_rounds(&mut self, n: u64) -> Result<()> {
        self.parallel_rounds = self.parallel_rounds.saturating_add(n);
        self.steps = self.steps.saturating_add(1);
        self.check()
    }

    /// Records that `units` words are live at once; only a new peak raises the counter.
    pub fn hold_space(&mut self, units: u64) -> Result<()> {
        self.space_units = self.space_units.max(units);
        self.steps = self.steps.saturating_add(1);
        self.check()
    }

    pub fn charge_queries(&mut self, n: u64) -> Result<()> {
        self.oracle_queries = self.oracle_queries.saturating_add(n);
        self.steps = self.steps.saturating_add(n.max(1));
        self.check()
    }

    pub fn note_depth(&mut self, depth: u64) {
        self.max_oracle_depth = self.max_oracle_depth.max(depth);
    }

    /// No digest obtained here is deeper than the rounds spent obtaining it.
    pub fn depth_sound(&self) -> bool {
        self.max_oracle_depth <= self.parallel_rounds
    }

    pub fn snapshot(&self) -> MeterSnapshot {
        MeterSnapshot {
            steps: self.steps,
            parallel_rounds: self.parallel_rounds,
            space_units: self.space_units,
            oracle_queries: self.oracle_queries,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MeterSnapshot {
    pub steps: u64,
    pub parallel_rounds: u64,
    pub space_units: u64,
    pub oracle_queries: u64,
}

impl MeterSnapshot {
    pub fn minus(&self, earlier: &MeterSnapshot) -> MeterSnapshot {
        MeterSnapshot {
            steps: self.steps - earlier.steps,
            parallel_rounds: self.parallel_rounds - earlier.parallel_rounds,
            space_units: self.space_units.saturating_sub(earlier.space_units),
            oracle_queries: self.oracle_queries - earlier.oracle_queries,
        }
    }
}
