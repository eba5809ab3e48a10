use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Diverged,
    /// Finished the horizon without ever moving (AdaGrad with an all-zero accumulator).
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStatus {
    pub outcome: Outcome,
    pub steps_executed: u64,
    pub divergence_step: Option<u64>,
}

impl RunStatus {
    pub fn completed(steps: u64) -> Self {
        RunStatus {
            outcome: Outcome::Completed,
            steps_executed: steps,
            divergence_step: None,
        }
    }

    pub fn degenerate(steps: u64) -> Self {
        RunStatus {
            outcome: Outcome::Degenerate,
            steps_executed: steps,
            divergence_step: None,
        }
    }

    /// The step that produced a guarded state counts as executed.
    pub fn diverged(at_step: u64) -> Self {
        RunStatus {
            outcome: Outcome::Diverged,
            steps_executed: at_step,
            divergence_step: Some(at_step),
        }
    }

    pub fn is_diverged(&self) -> bool {
        self.outcome == Outcome::Diverged
    }
}
