//! Solver backends: the built-in trail search and an external command run on
//! an emitted LP file.
//!
//! External contract: the command template contains `{lp}` and `{sol}`; it is
//! run through `sh -c` after substitution. The solution file starts with
//! `status feasible|infeasible|timeout`, followed by `name value` lines when
//! feasible. Exit status 127 means the solver is not installed.

use std::fs;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::divprop::DivVector;
use crate::milp::gadgets::{AndModel, Wg7Model};
use crate::milp::model::{parse_assignment, MilpModel};
use crate::trail::{RoundSpec, TrailEngine, Verdict};
use crate::Error;

pub const SOLVER_ENV: &str = "WG7_SOLVER_CMD";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    /// Feasible, with the solver's assignment when it provides one.
    Feasible(Option<Vec<u8>>),
    Infeasible,
    Timeout,
}

impl SolveOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SolveOutcome::Feasible(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolveOutcome::Feasible(_) => "feasible",
            SolveOutcome::Infeasible => "infeasible",
            SolveOutcome::Timeout => "timeout",
        }
    }
}

pub trait SolverBackend: Sync {
    fn name(&self) -> String;
    fn solve(&self, model: &Wg7Model) -> Result<SolveOutcome, Error>;
}

/// Answers evaluation models with the trail search.
#[derive(Clone, Debug)]
pub struct BuiltinBackend {
    budget: u64,
}

impl BuiltinBackend {
    pub fn new(budget: u64) -> Self {
        BuiltinBackend { budget }
    }
}

impl Default for BuiltinBackend {
    fn default() -> Self {
        BuiltinBackend {
            budget: crate::trail::DEFAULT_BUDGET,
        }
    }
}

impl SolverBackend for BuiltinBackend {
    fn name(&self) -> String {
        "builtin".into()
    }

    fn solve(&self, model: &Wg7Model) -> Result<SolveOutcome, Error> {
        let cfg = &model.config;
        // Free key bits only add vectors dominating the minimal start, which
        // cannot change the verdict, so both key modes start from cube + key.
        let keys: Vec<usize> = cfg.key_bit.into_iter().collect();
        let init = RoundSpec::new(cfg.rounds, &cfg.cube, &keys, cfg.matrix).initial()?;
        if init.is_zero() {
            // only the literal AND gadget admits the all-zero trail to z = 1
            return Ok(if cfg.and_model == AndModel::Literal {
                SolveOutcome::Feasible(None)
            } else {
                SolveOutcome::Infeasible
            });
        }
        let engine = TrailEngine::new(cfg.matrix).with_budget(self.budget);
        match engine.search(&init, cfg.rounds).0 {
            Verdict::Reached => Ok(SolveOutcome::Feasible(None)),
            Verdict::Unreachable => Ok(SolveOutcome::Infeasible),
            Verdict::BudgetExceeded => Err(Error::BudgetExceeded {
                budget: self.budget,
            }),
        }
    }
}

/// Runs an external command on the LP text.
#[derive(Clone, Debug)]
pub struct ExternalSolver {
    template: String,
    timeout: Duration,
}

impl ExternalSolver {
    pub fn new(template: impl Into<String>, timeout: Duration) -> Self {
        ExternalSolver {
            template: template.into(),
            timeout,
        }
    }

    /// From `WG7_SOLVER_CMD`, if set and non-empty.
    pub fn from_env(timeout: Duration) -> Option<Self> {
        std::env::var(SOLVER_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .map(|t| Self::new(t, timeout))
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn solve_model(&self, model: &MilpModel) -> Result<SolveOutcome, Error> {
        let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let lp = dir.path().join("model.lp");
        let sol = dir.path().join("model.sol");
        fs::write(&lp, model.emit_lp()).map_err(|e| Error::io(&lp, e))?;
        let cmd = self
            .template
            .replace("{lp}", &lp.display().to_string())
            .replace("{sol}", &sol.display().to_string());
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::SolverUnavailable(format!("{cmd}: {e}")))?;
        let start = Instant::now();
        let status = loop {
            if let Some(st) = child
                .try_wait()
                .map_err(|e| Error::SolverFailed(e.to_string()))?
            {
                break st;
            }
            if start.elapsed() > self.timeout {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(SolveOutcome::Timeout);
            }
            std::thread::sleep(Duration::from_millis(5));
        };
        if status.code() == Some(127) {
            return Err(Error::SolverUnavailable(cmd));
        }
        if !status.success() {
            let mut err = String::new();
            if let Some(mut e) = child.stderr.take() {
                use std::io::Read;
                let _ = e.read_to_string(&mut err);
            }
            return Err(Error::SolverFailed(format!(
                "{cmd}: {status}: {}",
                err.trim()
            )));
        }
        let text = fs::read_to_string(&sol).map_err(|e| Error::io(&sol, e))?;
        let first = text.lines().next().unwrap_or("").trim();
        match first.split_whitespace().nth(1) {
            Some("feasible") => {
                let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
                let assign = parse_assignment(model, &body).map_err(Error::SolverFailed)?;
                Ok(SolveOutcome::Feasible(Some(assign)))
            }
            Some("infeasible") => Ok(SolveOutcome::Infeasible),
            Some("timeout") => Ok(SolveOutcome::Timeout),
            _ => Err(Error::SolverFailed(format!(
                "unrecognised solution header {first:?}"
            ))),
        }
    }
}

impl SolverBackend for ExternalSolver {
    fn name(&self) -> String {
        format!("external({})", self.template)
    }

    fn solve(&self, model: &Wg7Model) -> Result<SolveOutcome, Error> {
        self.solve_model(&model.model)
    }
}

pub fn solve(model: &Wg7Model, backend: &dyn SolverBackend) -> Result<SolveOutcome, Error> {
    backend.solve(model)
}

/// Why a witness failed to replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReplayError {
    ViolatedConstraints(Vec<usize>),
    BadRound { round: usize },
    BadFinal,
}

/// Checks a solver assignment: every constraint holds, each round's state is a
/// one-round successor of the previous one, and the last state reaches the
/// keystream bit. Returns the per-round division vectors.
pub fn replay_witness(model: &Wg7Model, assign: &[u8]) -> Result<Vec<DivVector>, ReplayError> {
    let bad = model.model.violated(assign);
    if !bad.is_empty() {
        return Err(ReplayError::ViolatedConstraints(bad));
    }
    let trail: Vec<DivVector> = model
        .states
        .iter()
        .map(|vars| {
            DivVector::from_indices(
                vars.len(),
                (0..vars.len()).filter(|t| assign[vars[*t].index()] == 1),
            )
            .expect("in range")
        })
        .collect();
    let engine = TrailEngine::new(model.config.matrix);
    for r in 1..trail.len() {
        if !engine.is_successor(&trail[r - 1], &trail[r]) {
            return Err(ReplayError::BadRound { round: r });
        }
    }
    let last = trail.last().expect("at least the initial state");
    let vacuous = last.is_zero() && model.config.and_model == AndModel::Literal;
    if !vacuous && !engine.is_output(last) {
        return Err(ReplayError::BadFinal);
    }
    Ok(trail)
}
