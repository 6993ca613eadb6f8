//! Synchronous slot-by-slot simulation of distributed list scheduling.
//!
//! Every slot follows the same order, always reading the start-of-slot
//! snapshot to decide who is idle and which victims hold stealable work:
//!
//! 1. every processor without work sends one steal request to a victim
//!    drawn uniformly among the other `m - 1` processors;
//! 2. every processor with work executes one unit of it;
//! 3. requests are arbitrated and splits are applied to the post-execution
//!    victim state. Successful thieves start executing in the next slot.
//!
//! Every processor-slot is therefore either one unit of work or one steal
//! request, which gives the accounting identity `m * cmax = W + R`.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::potential::{abp_log2_weight, abp_weight, phi, PotentialKind};
use crate::protocols::{
    arbitrate, even_parts, split_coop, split_unit, split_weighted_deque, Chooser, CoopSplitBase,
    ProtocolError, ProtocolOptions, RandomChoices, SplitRounding, WeightedHalf,
};
use crate::rng::sim_rng;
use crate::workloads::{
    dag_placement_error, place_unit, place_weighted, DagSpec, InitialDistribution, NodeId,
    WorkloadError, WorkloadSpec,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Unit,
    Weighted,
    Dag,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Unit => "unit",
            Mode::Weighted => "weighted",
            Mode::Dag => "dag",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "unit" => Ok(Mode::Unit),
            "weighted" => Ok(Mode::Weighted),
            "dag" => Ok(Mode::Dag),
            other => Err(format!(
                "unknown mode {other:?} (expected unit, weighted or dag)"
            )),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("m must be at least 1")]
    NoProcessors,
    #[error("mode {mode} cannot run a {workload} workload")]
    ModeMismatch { mode: Mode, workload: &'static str },
    #[error("cooperative stealing is only defined for unit tasks, not {0} mode")]
    CooperativeMode(Mode),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("step called on a terminal state: no work remains")]
    Terminal,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Full description of one simulated run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: Mode,
    pub m: usize,
    pub workload: WorkloadSpec,
    #[serde(default)]
    pub protocol: ProtocolOptions,
    #[serde(default)]
    pub initial: InitialDistribution,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub record_potential: bool,
    #[serde(default)]
    pub record_steps: bool,
    /// Potential tracked in `phi0` and telemetry; see [`default_potential`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialKind>,
}

/// The potential each scenario is analysed with.
pub fn default_potential(mode: Mode, cooperative: bool) -> PotentialKind {
    match (mode, cooperative) {
        (Mode::Unit, false) => PotentialKind::Variance,
        (Mode::Unit, true) => PotentialKind::PowerMinus { nu: 3.0 },
        (Mode::Weighted, _) => PotentialKind::PowerMinus { nu: 2.94 },
        (Mode::Dag, _) => PotentialKind::AbpSquare,
    }
}

impl SimConfig {
    pub fn unit(m: usize, w: u64, seed: u64) -> Self {
        SimConfig {
            mode: Mode::Unit,
            m,
            workload: WorkloadSpec::UnitTasks { w },
            protocol: ProtocolOptions::default(),
            initial: InitialDistribution::AllOnZero,
            seed,
            record_potential: false,
            record_steps: false,
            potential: None,
        }
    }

    pub fn weighted(m: usize, p: Vec<u64>, seed: u64) -> Self {
        SimConfig {
            mode: Mode::Weighted,
            workload: WorkloadSpec::WeightedTasks { p },
            ..SimConfig::unit(m, 0, seed)
        }
    }

    pub fn dag(m: usize, dag: DagSpec, seed: u64) -> Self {
        SimConfig {
            mode: Mode::Dag,
            workload: WorkloadSpec::DagTasks { dag },
            ..SimConfig::unit(m, 0, seed)
        }
    }

    pub fn potential_kind(&self) -> PotentialKind {
        self.potential
            .unwrap_or_else(|| default_potential(self.mode, self.protocol.cooperative))
    }

    pub fn total_work(&self) -> u64 {
        self.workload.total_work()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.m == 0 {
            return Err(ConfigError::NoProcessors);
        }
        let kind = match &self.workload {
            WorkloadSpec::UnitTasks { .. } => Mode::Unit,
            WorkloadSpec::WeightedTasks { .. } => Mode::Weighted,
            WorkloadSpec::DagTasks { .. } => Mode::Dag,
        };
        if kind != self.mode {
            return Err(ConfigError::ModeMismatch {
                mode: self.mode,
                workload: kind.as_str(),
            });
        }
        if self.protocol.cooperative && self.mode != Mode::Unit {
            return Err(ConfigError::CooperativeMode(self.mode));
        }
        self.workload.validate()?;
        if self.mode == Mode::Dag {
            if let Some(e) = dag_placement_error(&self.initial) {
                return Err(e.into());
            }
        }
        Ok(())
    }
}

/// Ready work held by one processor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Queue {
    /// Unit tasks: a bare count, including the task executing this slot.
    Unit(u64),
    /// Weighted tasks not yet started, in queue order.
    Weighted(VecDeque<u64>),
    /// Ready DAG nodes; front is the top, back is the bottom (executing) end.
    Dag(VecDeque<NodeId>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkerState {
    pub queue: Queue,
    /// Slots left on the task being executed; 0 when the processor is idle.
    pub executing_remaining: u64,
    pub tasks_executed: u64,
    pub steals_sent_ok: u64,
    pub steals_sent_fail: u64,
}

impl WorkerState {
    fn new(queue: Queue) -> Self {
        WorkerState {
            queue,
            executing_remaining: 0,
            tasks_executed: 0,
            steals_sent_ok: 0,
            steals_sent_fail: 0,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.executing_remaining == 0
    }

    /// Tasks held, the executing one included.
    pub fn task_count(&self) -> u64 {
        match &self.queue {
            Queue::Unit(w) => *w,
            Queue::Weighted(q) => q.len() as u64 + u64::from(self.executing_remaining > 0),
            Queue::Dag(d) => d.len() as u64,
        }
    }

    /// Queued tasks a thief could take at this instant.
    fn stealable(&self) -> bool {
        match &self.queue {
            Queue::Unit(w) => *w >= 2,
            Queue::Weighted(q) => !q.is_empty(),
            Queue::Dag(d) => d.len() >= 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTelemetry {
    pub t: u64,
    pub r_t: u64,
    pub succ: u64,
    pub fail: u64,
    pub phi: Option<f64>,
    /// Work left after the slot, in unit slots.
    pub w_total: u64,
}

/// Outcome of the requests that targeted one victim during a slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StealOutcome {
    pub victim: usize,
    /// Every requester, ascending.
    pub requesters: Vec<usize>,
    /// Requesters that received work (possibly an empty share).
    pub served: Vec<usize>,
    /// Tasks handed to each served thief, aligned with `served`.
    pub transfers: Vec<u64>,
    /// Victim task count at the start of the slot.
    pub victim_before: u64,
    /// Victim task count after execution and split.
    pub victim_after: u64,
}

impl StealOutcome {
    pub fn success(&self) -> bool {
        !self.served.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub cmax: u64,
    pub steals_total: u64,
    pub steals_ok: u64,
    pub steals_fail: u64,
    pub phi0: f64,
    pub work: u64,
    pub critical_path: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub telemetry: Option<Vec<StepTelemetry>>,
}

/// DAG bookkeeping shared by all processors.
#[derive(Clone, Debug)]
struct DagRuntime {
    dag: Arc<DagSpec>,
    /// Parents of each node not yet executed.
    pending: Vec<u8>,
    /// Depth in the enabling tree, known once the node is enabled.
    depth: Vec<u32>,
    trace: Option<Vec<(NodeId, NodeId)>>,
}

impl DagRuntime {
    fn height(&self, u: NodeId) -> u64 {
        self.dag.critical_path() - u64::from(self.depth[u as usize])
    }
}

/// Mutable state of a run between slots.
#[derive(Clone, Debug)]
pub struct SimState {
    mode: Mode,
    m: usize,
    rounding: SplitRounding,
    cooperative: bool,
    coop_split: CoopSplitBase,
    weighted_half: WeightedHalf,
    workers: Vec<WorkerState>,
    dag: Option<DagRuntime>,
    t: u64,
    remaining: u64,
    steals_ok: u64,
    steals_fail: u64,
    requests: Vec<(usize, usize)>,
    stealable: Vec<bool>,
    before: Vec<u64>,
}

impl SimState {
    /// Places the workload; balls-and-bins placement draws from `rng`.
    pub fn new<R: rand::Rng + ?Sized>(
        config: &SimConfig,
        rng: &mut R,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        let m = config.m;
        let workers = match &config.workload {
            WorkloadSpec::UnitTasks { w } => place_unit(&config.initial, *w, m, rng)?
                .into_iter()
                .map(|x| WorkerState::new(Queue::Unit(x)))
                .collect(),
            WorkloadSpec::WeightedTasks { p } => place_weighted(&config.initial, p, m, rng)?
                .into_iter()
                .map(|q| WorkerState::new(Queue::Weighted(q)))
                .collect(),
            WorkloadSpec::DagTasks { dag } => {
                let mut ws: Vec<WorkerState> = (0..m)
                    .map(|_| WorkerState::new(Queue::Dag(VecDeque::new())))
                    .collect();
                ws[0].queue = Queue::Dag(VecDeque::from([dag.source()]));
                ws
            }
        };
        let dag = match &config.workload {
            WorkloadSpec::DagTasks { dag } => Some(DagRuntime {
                pending: (0..dag.len() as NodeId)
                    .map(|u| dag.parents(u).len() as u8)
                    .collect(),
                depth: vec![0; dag.len()],
                dag: Arc::new(dag.clone()),
                trace: None,
            }),
            _ => None,
        };
        let mut state = SimState {
            mode: config.mode,
            m,
            rounding: config.protocol.rounding(config.mode),
            cooperative: config.protocol.cooperative,
            coop_split: config.protocol.coop_split,
            weighted_half: config.protocol.weighted_half,
            workers,
            dag,
            t: 0,
            remaining: config.total_work(),
            steals_ok: 0,
            steals_fail: 0,
            requests: Vec::with_capacity(m),
            stealable: vec![false; m],
            before: vec![0; m],
        };
        state.start_tasks();
        Ok(state)
    }

    /// Unit-task state with the given loads, for probing single slots.
    pub fn from_unit_loads(loads: &[u64], protocol: ProtocolOptions) -> Result<Self, ConfigError> {
        let mut config = SimConfig::unit(loads.len(), loads.iter().sum(), 0);
        config.protocol = protocol;
        config.initial = InitialDistribution::Explicit { w: loads.to_vec() };
        SimState::new(&config, &mut sim_rng(0))
    }

    /// Records every `(parent, child)` enabling event from now on.
    pub fn enable_trace(&mut self) {
        if let Some(d) = &mut self.dag {
            d.trace.get_or_insert_with(Vec::new);
        }
    }

    pub fn enabling_trace(&self) -> Option<&[(NodeId, NodeId)]> {
        self.dag.as_ref().and_then(|d| d.trace.as_deref())
    }

    pub fn dag(&self) -> Option<&DagSpec> {
        self.dag.as_ref().map(|d| d.dag.as_ref())
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cooperative(&self) -> bool {
        self.cooperative
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn remaining_work(&self) -> u64 {
        self.remaining
    }

    pub fn steals_ok(&self) -> u64 {
        self.steals_ok
    }

    pub fn steals_fail(&self) -> u64 {
        self.steals_fail
    }

    pub fn workers(&self) -> &[WorkerState] {
        &self.workers
    }

    pub fn is_terminal(&self) -> bool {
        self.remaining == 0
    }

    /// Number of processors that will send a steal request next slot.
    pub fn idle_count(&self) -> usize {
        self.workers.iter().filter(|w| w.is_idle()).count()
    }

    pub fn task_counts(&self) -> Vec<u64> {
        self.workers.iter().map(WorkerState::task_count).collect()
    }

    /// Instrumented heights of each DAG deque, top to bottom.
    pub fn deque_heights(&self, i: usize) -> Vec<u64> {
        match (&self.workers[i].queue, &self.dag) {
            (Queue::Dag(d), Some(rt)) => d.iter().map(|&u| rt.height(u)).collect(),
            _ => Vec::new(),
        }
    }

    /// `log2` of each processor's DAG weight; `-inf` for an empty deque.
    pub fn abp_log2_weights(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                let hs = self.deque_heights(i);
                match hs.iter().max() {
                    Some(&h) => abp_log2_weight(hs.len(), h),
                    None => f64::NEG_INFINITY,
                }
            })
            .collect()
    }

    /// Per-processor loads fed to the potential `kind`: DAG weights for
    /// [`PotentialKind::AbpSquare`] in DAG mode, task counts otherwise.
    pub fn loads(&self, kind: PotentialKind) -> Vec<f64> {
        if kind == PotentialKind::AbpSquare && self.mode == Mode::Dag {
            (0..self.m)
                .map(|i| {
                    let hs = self.deque_heights(i);
                    hs.iter().max().map_or(0.0, |&h| abp_weight(hs.len(), h))
                })
                .collect()
        } else {
            self.workers.iter().map(|w| w.task_count() as f64).collect()
        }
    }

    pub fn phi(&self, kind: PotentialKind) -> f64 {
        phi(kind, &self.loads(kind))
    }

    /// Idle processors with queued work begin their next task.
    fn start_tasks(&mut self) {
        for w in &mut self.workers {
            match &mut w.queue {
                Queue::Unit(x) => w.executing_remaining = u64::from(*x > 0),
                Queue::Weighted(q) => {
                    if w.executing_remaining == 0 {
                        if let Some(p) = q.pop_front() {
                            w.executing_remaining = p;
                        }
                    }
                }
                Queue::Dag(d) => w.executing_remaining = u64::from(!d.is_empty()),
            }
        }
    }

    pub fn step<C: Chooser + ?Sized>(
        &mut self,
        chooser: &mut C,
    ) -> Result<StepTelemetry, EngineError> {
        self.advance(chooser, None)
    }

    /// Like [`SimState::step`], also appending one [`StealOutcome`] per
    /// targeted victim to `events`.
    pub fn step_detailed<C: Chooser + ?Sized>(
        &mut self,
        chooser: &mut C,
        events: &mut Vec<StealOutcome>,
    ) -> Result<StepTelemetry, EngineError> {
        self.advance(chooser, Some(events))
    }

    fn advance<C: Chooser + ?Sized>(
        &mut self,
        chooser: &mut C,
        mut events: Option<&mut Vec<StealOutcome>>,
    ) -> Result<StepTelemetry, EngineError> {
        if self.is_terminal() {
            return Err(EngineError::Terminal);
        }
        let m = self.m;

        self.requests.clear();
        for (i, w) in self.workers.iter().enumerate() {
            self.stealable[i] = w.stealable();
            self.before[i] = w.task_count();
        }
        for thief in 0..m {
            if self.workers[thief].is_idle() {
                let victim = chooser.pick_victim(thief, m);
                self.requests.push((thief, victim));
            }
        }
        let r_t = self.requests.len() as u64;

        let active = (m as u64) - r_t;
        self.execute();
        self.remaining -= active;

        let (mut succ, mut fail) = (0u64, 0u64);
        if r_t > 0 {
            let contests = arbitrate(&self.requests, m, self.cooperative, chooser)?;
            for c in contests {
                let (served, transfers) = if self.stealable[c.victim] {
                    let transfers = self.split(c.victim, &c.served);
                    (c.served, transfers)
                } else {
                    (Vec::new(), Vec::new())
                };
                for &thief in &c.requesters {
                    if served.contains(&thief) {
                        self.workers[thief].steals_sent_ok += 1;
                        succ += 1;
                    } else {
                        self.workers[thief].steals_sent_fail += 1;
                        fail += 1;
                    }
                }
                if let Some(ev) = events.as_deref_mut() {
                    ev.push(StealOutcome {
                        victim: c.victim,
                        victim_before: self.before[c.victim],
                        victim_after: self.workers[c.victim].task_count(),
                        requesters: c.requesters,
                        served,
                        transfers,
                    });
                }
            }
        }
        self.steals_ok += succ;
        self.steals_fail += fail;
        self.start_tasks();
        self.t += 1;
        Ok(StepTelemetry {
            t: self.t - 1,
            r_t,
            succ,
            fail,
            phi: None,
            w_total: self.remaining,
        })
    }

    fn execute(&mut self) {
        match self.mode {
            Mode::Unit | Mode::Weighted => {
                for w in &mut self.workers {
                    if w.executing_remaining == 0 {
                        continue;
                    }
                    w.executing_remaining -= 1;
                    if let Queue::Unit(x) = &mut w.queue {
                        *x -= 1;
                        w.tasks_executed += 1;
                    } else if w.executing_remaining == 0 {
                        w.tasks_executed += 1;
                    }
                }
            }
            Mode::Dag => {
                let rt = self.dag.as_mut().expect("DAG mode carries a runtime");
                for w in &mut self.workers {
                    let Queue::Dag(deque) = &mut w.queue else {
                        continue;
                    };
                    let Some(u) = deque.pop_back() else { continue };
                    w.tasks_executed += 1;
                    let du = rt.depth[u as usize];
                    for &c in rt.dag.children(u) {
                        let slot = &mut rt.pending[c as usize];
                        *slot -= 1;
                        if *slot == 0 {
                            rt.depth[c as usize] = du + 1;
                            if let Some(tr) = &mut rt.trace {
                                tr.push((u, c));
                            }
                            deque.push_back(c);
                        }
                    }
                }
            }
        }
    }

    /// Applies the split for a victim whose snapshot passed the steal
    /// predicate. Returns the number of tasks handed to each served thief.
    fn split(&mut self, victim: usize, served: &[usize]) -> Vec<u64> {
        let before = self.before[victim];
        match self.mode {
            Mode::Unit => {
                let parts = if self.cooperative {
                    match self.coop_split {
                        CoopSplitBase::AfterExecution => {
                            split_coop(before, served.len()).expect("predicate guarantees w >= 2")
                        }
                        CoopSplitBase::WholeQueue => {
                            let mut parts = even_parts(before, served.len() + 1);
                            parts[0] -= 1;
                            parts
                        }
                    }
                } else {
                    let (keep, get) =
                        split_unit(before, self.rounding).expect("predicate guarantees w >= 2");
                    vec![keep, get]
                };
                self.workers[victim].queue = Queue::Unit(parts[0]);
                for (&thief, &x) in served.iter().zip(&parts[1..]) {
                    self.workers[thief].queue = Queue::Unit(x);
                }
                parts[1..].to_vec()
            }
            Mode::Weighted => {
                let Queue::Weighted(q) = &mut self.workers[victim].queue else {
                    unreachable!()
                };
                let stolen = split_weighted_deque(q, self.rounding, self.weighted_half);
                let n = stolen.len() as u64;
                self.workers[served[0]].queue = Queue::Weighted(stolen);
                vec![n]
            }
            Mode::Dag => {
                let Queue::Dag(d) = &mut self.workers[victim].queue else {
                    unreachable!()
                };
                let top = d.pop_front().expect("predicate guarantees a task to steal");
                self.workers[served[0]].queue = Queue::Dag(VecDeque::from([top]));
                vec![1]
            }
        }
    }

    /// Skips a stretch of slots in which every processor is busy. Only unit
    /// mode, where such a stretch is the minimum load, is supported; other
    /// modes return 0. No randomness is consumed, so the outcome matches
    /// stepping slot by slot.
    fn fast_forward_unit(&mut self) -> u64 {
        if self.mode != Mode::Unit {
            return 0;
        }
        let mut k = u64::MAX;
        for w in &self.workers {
            match w.queue {
                Queue::Unit(x) => k = k.min(x),
                _ => unreachable!(),
            }
        }
        // Keep at least one loaded slot for the regular path.
        if k <= 1 {
            return 0;
        }
        let k = k - 1;
        for w in &mut self.workers {
            if let Queue::Unit(x) = &mut w.queue {
                *x -= k;
            }
            w.tasks_executed += k;
        }
        self.remaining -= k * self.m as u64;
        self.t += k;
        k
    }

    fn result(&self, phi0: f64, telemetry: Option<Vec<StepTelemetry>>, work: u64) -> RunResult {
        RunResult {
            cmax: self.t,
            steals_total: self.steals_ok + self.steals_fail,
            steals_ok: self.steals_ok,
            steals_fail: self.steals_fail,
            phi0,
            work,
            critical_path: self.dag.as_ref().map(|d| d.dag.critical_path()),
            telemetry,
        }
    }
}

/// Simulates `config` to completion.
pub fn run(config: &SimConfig) -> Result<RunResult, EngineError> {
    let mut rng = sim_rng(config.seed);
    let mut state = SimState::new(config, &mut rng)?;
    let kind = config.potential_kind();
    let phi0 = state.phi(kind);
    let record = config.record_steps || config.record_potential;
    let mut telemetry = record.then(Vec::new);
    let mut chooser = RandomChoices::new(&mut rng);
    while !state.is_terminal() {
        if !record && state.fast_forward_unit() > 0 {
            continue;
        }
        let mut tel = state.step(&mut chooser)?;
        if let Some(tl) = &mut telemetry {
            if config.record_potential {
                tel.phi = Some(state.phi(kind));
            }
            tl.push(tel);
        }
    }
    Ok(state.result(phi0, telemetry, config.total_work()))
}
