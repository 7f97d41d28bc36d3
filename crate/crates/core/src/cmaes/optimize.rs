use std::fmt;

use super::{CmaConfig, CmaState};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// One line of the per-generation history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub generation: u64,
    pub evals: u64,
    /// Best-ever fitness after this generation.
    pub best_f: f64,
    pub sigma: f64,
    /// Condition number of `C` from the latest eigendecomposition.
    pub condition: f64,
}

impl HistoryRow {
    pub const CSV_HEADER: &'static str = "generation,evals,best_f,sigma,cond_c";

    /// Floats use shortest round-trip formatting, so parsing is exact.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.generation, self.evals, self.best_f, self.sigma, self.condition
        )
    }

    pub fn parse_csv(text: &str) -> Result<Vec<HistoryRow>> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == Self::CSV_HEADER => {}
            _ => return Err(Error::Format(format!("history must start with {:?}", Self::CSV_HEADER))),
        }
        lines
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(n, line)| {
                let bad = || Error::Format(format!("history row {}: {line:?}", n + 1));
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 5 {
                    return Err(bad());
                }
                Ok(HistoryRow {
                    generation: f[0].parse().map_err(|_| bad())?,
                    evals: f[1].parse().map_err(|_| bad())?,
                    best_f: f[2].parse().map_err(|_| bad())?,
                    sigma: f[3].parse().map_err(|_| bad())?,
                    condition: f[4].parse().map_err(|_| bad())?,
                })
            })
            .collect()
    }
}

pub fn history_csv(rows: &[HistoryRow]) -> String {
    let mut out = String::from(HistoryRow::CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Another generation would exceed the evaluation budget.
    Budget,
    /// The best-ever fitness has not improved for the stagnation window.
    Stagnation,
    /// The best-ever fitness reached the declared optimum.
    Target,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Budget => "budget",
            StopReason::Stagnation => "stagnation",
            StopReason::Target => "target",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub history: Vec<HistoryRow>,
    pub stop: StopReason,
}

/// A run that failed part-way, with the history recorded before the failure.
#[derive(Debug)]
pub struct Aborted {
    pub error: Error,
    pub history: Vec<HistoryRow>,
}

impl fmt::Display for Aborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} generations)", self.error, self.history.len())
    }
}

impl std::error::Error for Aborted {}

impl From<Aborted> for Error {
    fn from(a: Aborted) -> Self {
        a.error
    }
}

/// Budgeted ask/evaluate/tell loop around a [`CmaState`].
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    state: CmaState,
    budget: u64,
    target: Option<f64>,
    history: Vec<HistoryRow>,
}

impl Optimizer {
    pub fn new(state: CmaState, budget: u64) -> Result<Self> {
        Optimizer::resume(state, Vec::new(), budget)
    }

    /// Continues from a checkpointed state and the history written with it.
    pub fn resume(state: CmaState, history: Vec<HistoryRow>, budget: u64) -> Result<Self> {
        if budget < state.lambda() as u64 {
            return Err(Error::Argument(format!(
                "budget {budget} is smaller than one generation ({} evaluations)",
                state.lambda()
            )));
        }
        if history.len() as u64 != state.generation() {
            return Err(Error::Argument(format!(
                "history has {} rows but the state is at generation {}",
                history.len(),
                state.generation()
            )));
        }
        Ok(Optimizer {
            state,
            budget,
            target: None,
            history,
        })
    }

    /// Stops once the best-ever fitness reaches `target`, a value no
    /// candidate can exceed.
    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }

    pub fn state(&self) -> &CmaState {
        &self.state
    }

    pub fn history(&self) -> &[HistoryRow] {
        &self.history
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Generations without best-ever improvement before stopping,
    /// `ceil(50 · dim / lambda)`.
    pub fn stagnation_limit(&self) -> u64 {
        (50 * self.state.dim() as u64).div_ceil(self.state.lambda() as u64)
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        let s = &self.state;
        let reached = |(_, f): (&[f64], f64)| self.target.is_some_and(|t| f >= t);
        if s.best().is_some_and(reached) {
            Some(StopReason::Target)
        } else if s.evaluations() + s.lambda() as u64 > self.budget {
            Some(StopReason::Budget)
        } else if s.generation() > 0 && s.generation() - s.best_generation() >= self.stagnation_limit() {
            Some(StopReason::Stagnation)
        } else {
            None
        }
    }

    /// Runs one generation; `evaluate` maps the population to fitnesses in
    /// order.
    pub fn step<E>(&mut self, evaluate: E) -> Result<HistoryRow>
    where
        E: FnOnce(&[Vec<f64>]) -> Result<Vec<f64>>,
    {
        let population = self.state.ask()?;
        let fitness = evaluate(&population)?;
        self.state.tell(&fitness)?;
        let row = HistoryRow {
            generation: self.state.generation(),
            evals: self.state.evaluations(),
            best_f: self.state.best().map_or(f64::NEG_INFINITY, |(_, f)| f),
            sigma: self.state.sigma(),
            condition: self.state.condition(),
        };
        self.history.push(row);
        Ok(row)
    }

    /// Steps until a stop condition holds, calling `on_generation` after
    /// every generation.
    pub fn run<E, C>(&mut self, mut evaluate: E, mut on_generation: C) -> Result<StopReason>
    where
        E: FnMut(&[Vec<f64>]) -> Result<Vec<f64>>,
        C: FnMut(&Optimizer) -> Result<()>,
    {
        loop {
            if let Some(reason) = self.stop_reason() {
                return Ok(reason);
            }
            self.step(&mut evaluate)?;
            on_generation(self)?;
        }
    }

    pub fn result(&self, stop: StopReason) -> OptimizeResult {
        let (best_x, best_f) = self
            .state
            .best()
            .map_or((self.state.mean().to_vec(), f64::NEG_INFINITY), |(x, f)| (x.to_vec(), f));
        OptimizeResult {
            best_x,
            best_f,
            history: self.history.clone(),
            stop,
        }
    }
}

/// Maximizes `objective` from the origin. Returns the best-ever candidate.
pub fn optimize<F>(
    objective: F,
    dim: usize,
    config: &CmaConfig,
    budget: u64,
    seed: u64,
    execution: Execution,
) -> std::result::Result<OptimizeResult, Aborted>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let aborted = |error| Aborted { error, history: Vec::new() };
    let state = CmaState::new(dim, config, seed).map_err(aborted)?;
    let mut opt = Optimizer::new(state, budget).map_err(aborted)?;
    let outcome = opt.run(
        |pop| execution.map_slice(pop, |x| objective(x)).into_iter().collect(),
        |_| Ok(()),
    );
    match outcome {
        Ok(stop) => Ok(opt.result(stop)),
        Err(error) => Err(Aborted {
            error,
            history: opt.history.clone(),
        }),
    }
}
