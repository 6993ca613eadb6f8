//! Potential functions, their per-slot contraction, and per-event audits.
//!
//! | kind          | value                                   |
//! |---------------|-----------------------------------------|
//! | `Variance`    | `Σ (w_i - w/m)^2`                       |
//! | `Power`       | `Σ w_i^ν`                               |
//! | `PowerMinus`  | `Σ (w_i^ν - w_i)`                       |
//! | `AbpSquare`   | `Σ w_i^2` over DAG weights `(2√2)^h`    |

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, Mode, RunResult, SimConfig, SimState, StealOutcome};
use crate::protocols::{RandomChoices, ScriptedChoices};
use crate::rng::sim_rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Variance,
    Power { nu: f64 },
    PowerMinus { nu: f64 },
    AbpSquare,
}

impl std::fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PotentialKind::Variance => write!(f, "variance"),
            PotentialKind::Power { nu } => write!(f, "power(nu={nu})"),
            PotentialKind::PowerMinus { nu } => write!(f, "power_minus(nu={nu})"),
            PotentialKind::AbpSquare => write!(f, "abp_square"),
        }
    }
}

pub fn phi(kind: PotentialKind, loads: &[f64]) -> f64 {
    match kind {
        PotentialKind::Variance => {
            if loads.is_empty() {
                return 0.0;
            }
            let mean = loads.iter().sum::<f64>() / loads.len() as f64;
            loads.iter().map(|w| (w - mean) * (w - mean)).sum()
        }
        PotentialKind::Power { nu } => loads.iter().map(|w| w.powf(nu)).sum(),
        PotentialKind::PowerMinus { nu } => loads.iter().map(|w| w.powf(nu) - w).sum(),
        PotentialKind::AbpSquare => loads.iter().map(|w| w * w).sum(),
    }
}

/// `log2` of the DAG weight of a deque holding `len` tasks whose highest
/// instrumented height is `max_height`: `(2√2)^h` with two or more tasks,
/// half that with a lone executing task.
pub fn abp_log2_weight(len: usize, max_height: u64) -> f64 {
    match len {
        0 => f64::NEG_INFINITY,
        1 => 1.5 * max_height as f64 - 1.0,
        _ => 1.5 * max_height as f64,
    }
}

pub fn abp_weight(len: usize, max_height: u64) -> f64 {
    abp_log2_weight(len, max_height).exp2()
}

/// Potential trajectory of one run: `values[0]` is `Φ_0` and `values[t + 1]`
/// the value after slot `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiSeries {
    pub values: Vec<f64>,
    pub r: Vec<u64>,
    /// First index with `values[tau] < threshold`.
    pub tau: Option<usize>,
    /// Steal requests sent during slots `0..tau`.
    pub r_before_tau: u64,
}

impl PhiSeries {
    /// Built from a run recorded with `record_potential`.
    pub fn from_run(result: &RunResult) -> Option<Self> {
        let tel = result.telemetry.as_ref()?;
        let mut values = vec![result.phi0];
        for t in tel {
            values.push(t.phi?);
        }
        let r = tel.iter().map(|t| t.r_t).collect();
        Some(PhiSeries::new(values, r, 1.0))
    }

    /// `tau` is taken as the first index where `values` drops below `threshold`.
    pub fn new(values: Vec<f64>, r: Vec<u64>, threshold: f64) -> Self {
        let tau = values.iter().position(|&v| v < threshold);
        let r_before_tau = tau.map_or(r.iter().sum(), |t| r[..t.min(r.len())].iter().sum());
        PhiSeries {
            values,
            r,
            tau,
            r_before_tau,
        }
    }

    /// The same series rescaled by `1 / scale` with `tau` recomputed.
    pub fn rescaled(&self, scale: f64) -> Self {
        PhiSeries::new(
            self.values.iter().map(|v| v / scale).collect(),
            self.r.clone(),
            1.0,
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("{0} samples are too few to certify a contraction; use at least 100")]
    TooFewSamples(usize),
    #[error("state is terminal")]
    Terminal,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub r: u64,
    pub phi: f64,
    /// `h(r) * Φ`.
    pub bound: f64,
    pub mean_next: f64,
    pub std_err: f64,
    /// Exact `E[Φ']` when the state was small enough to enumerate.
    pub exact_next: Option<f64>,
    pub passed: bool,
    /// The state fell outside the hypothesis (unit tasks with `w <= 1`).
    pub skipped: bool,
}

/// Tolerance for comparisons that hold with equality in exact arithmetic.
fn slack(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

/// Largest number of victim assignments enumerated exactly.
const ENUMERATION_LIMIT: usize = 1 << 14;

/// Exact `E[Φ']` over the victim choices of the idle processors, each of the
/// `(m - 1)^r` assignments being equally likely. Winners and piece order
/// are not enumerated: every thief starts empty, and all potentials are
/// symmetric in the processors, so they do not change `Φ'`.
pub fn exact_next_phi(state: &SimState, kind: PotentialKind) -> Option<f64> {
    let m = state.m();
    if state.is_terminal() || m < 2 {
        return None;
    }
    let idle: Vec<usize> = (0..m).filter(|&i| state.workers()[i].is_idle()).collect();
    let r = idle.len();
    let count = (m - 1).checked_pow(r as u32)?;
    if count > ENUMERATION_LIMIT {
        return None;
    }
    let mut total = 0.0;
    let mut digits = vec![0usize; r];
    for _ in 0..count {
        let mut script = ScriptedChoices::new(m);
        for (k, &thief) in idle.iter().enumerate() {
            let v = if digits[k] >= thief {
                digits[k] + 1
            } else {
                digits[k]
            };
            script = script.target(thief, v);
        }
        let mut next = state.clone();
        next.step(&mut script).ok()?;
        total += next.phi(kind);
        for d in digits.iter_mut() {
            *d += 1;
            if *d < m - 1 {
                break;
            }
            *d = 0;
        }
    }
    Some(total / count as f64)
}

/// Checks `E[Φ_{t+1}] <= h(r_t) Φ_t` from `state`, by sampling `samples`
/// next slots and, when feasible, by exact enumeration. With an exact value
/// the verdict rests on it; otherwise the sample mean must lie within three
/// standard errors of the bound.
pub fn verify_one_step_decrease<R, H>(
    state: &SimState,
    kind: PotentialKind,
    h: H,
    samples: usize,
    rng: &mut R,
) -> Result<VerifyReport, VerifyError>
where
    R: Rng + ?Sized,
    H: Fn(u64) -> f64,
{
    if samples < 100 {
        return Err(VerifyError::TooFewSamples(samples));
    }
    if state.is_terminal() {
        return Err(VerifyError::Terminal);
    }
    let r = state.idle_count() as u64;
    let phi0 = state.phi(kind);
    let bound = h(r) * phi0;
    let skipped = state.mode() == Mode::Unit && state.remaining_work() <= 1;

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let mut next = state.clone();
        next.step(&mut RandomChoices::new(&mut *rng))?;
        let v = next.phi(kind);
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    let std_err = (var / n).sqrt();
    let exact = exact_next_phi(state, kind);
    let passed = skipped
        || match exact {
            Some(e) => e <= bound + slack(bound),
            None => mean <= bound + 3.0 * std_err + slack(bound),
        };
    Ok(VerifyReport {
        r,
        phi: phi0,
        bound,
        mean_next: mean,
        std_err,
        exact_next: exact,
        passed,
        skipped,
    })
}

/// Counts and failures from [`audit_run`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub unit_steals: u64,
    pub coop_splits: u64,
    pub dag_successes: u64,
    pub dag_failures: u64,
    pub dag_active_checks: u64,
    pub deque_checks: u64,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn events(&self) -> u64 {
        self.unit_steals + self.coop_splits + self.dag_successes + self.dag_failures
    }

    fn merge(&mut self, other: AuditReport) {
        self.unit_steals += other.unit_steals;
        self.coop_splits += other.coop_splits;
        self.dag_successes += other.dag_successes;
        self.dag_failures += other.dag_failures;
        self.dag_active_checks += other.dag_active_checks;
        self.deque_checks += other.deque_checks;
        self.violations.extend(other.violations);
    }
}

/// Guaranteed drop of `Σ w^2` when a standard steal hits a victim with `w` tasks.
pub fn unit_steal_decrement(w: u64) -> f64 {
    let w = w as f64;
    w * w / 2.0 + w - 1.0
}

/// Guaranteed drop of `Σ (w^ν - w)` when `k` cooperative thieves split a
/// victim holding `w` tasks.
pub fn coop_decrement(w: u64, k: usize, nu: f64) -> f64 {
    let w = w as f64;
    (1.0 - ((k + 1) as f64).powf(1.0 - nu)) * (w.powf(nu) - w)
}

fn power_minus(x: u64, nu: f64) -> f64 {
    let x = x as f64;
    x.powf(nu) - x
}

/// Runs `config` to completion and checks every steal event against the
/// per-event decrement bounds of its mode:
///
/// * standard unit steals drop `Σ w^2` by at least `w^2/2 + w - 1`;
/// * cooperative unit splits drop `Σ (w^ν - w)` by at least
///   `(1 - (k+1)^(1-ν)) (w^ν - w)`;
/// * DAG steals halve both the victim's and the thief's weight, a victim
///   whose requests all fail shrinks by `√2`, execution never grows a
///   weight, and deque heights keep their top-to-bottom order.
pub fn audit_run(config: &SimConfig, nu: f64) -> Result<AuditReport, EngineError> {
    let mut rng = sim_rng(config.seed);
    let mut state = SimState::new(config, &mut rng)?;
    let mut chooser = RandomChoices::new(&mut rng);
    let mut report = AuditReport::default();
    let mut events = Vec::new();
    while !state.is_terminal() {
        let before = (state.mode() == Mode::Dag).then(|| state.abp_log2_weights());
        events.clear();
        state.step_detailed(&mut chooser, &mut events)?;
        report.merge(audit_events(&state, before.as_deref(), &events, nu));
    }
    Ok(report)
}

/// Checks the events of one slot. `before` holds the DAG log-weights at the
/// start of the slot (DAG mode only); `state` is the state after the slot.
pub fn audit_events(
    state: &SimState,
    before: Option<&[f64]>,
    events: &[StealOutcome],
    nu: f64,
) -> AuditReport {
    let mut rep = AuditReport::default();
    let slot = state.t() - 1;
    match state.mode() {
        Mode::Unit => {
            for e in events.iter().filter(|e| e.success()) {
                let w = e.victim_before;
                if state.cooperative() {
                    rep.coop_splits += 1;
                    let after: f64 = power_minus(e.victim_after, nu)
                        + e.transfers.iter().map(|&x| power_minus(x, nu)).sum::<f64>();
                    let drop = power_minus(w, nu) - after;
                    let need = coop_decrement(w, e.served.len(), nu);
                    if drop + slack(need) < need {
                        rep.violations.push(format!(
                            "slot {slot}: cooperative split of w={w} among {} thieves dropped {drop}, bound {need}",
                            e.served.len()
                        ));
                    }
                } else {
                    rep.unit_steals += 1;
                    let sq = |x: u64| (x as f64) * (x as f64);
                    let drop = sq(w)
                        - sq(e.victim_after)
                        - e.transfers.iter().map(|&x| sq(x)).sum::<f64>();
                    let need = unit_steal_decrement(w);
                    if drop < need {
                        rep.violations.push(format!(
                            "slot {slot}: steal on w={w} dropped sum of squares by {drop}, bound {need}"
                        ));
                    }
                }
            }
        }
        Mode::Dag => {
            let Some(before) = before else { return rep };
            let after = state.abp_log2_weights();
            let eps = 1e-9;
            for (i, (&b, &a)) in before.iter().zip(&after).enumerate() {
                if b.is_finite() {
                    rep.dag_active_checks += 1;
                    if a > b + eps {
                        rep.violations.push(format!(
                            "slot {slot}: processor {i} weight grew from 2^{b} to 2^{a}"
                        ));
                    }
                }
            }
            for e in events {
                let wb = before[e.victim];
                if e.success() {
                    rep.dag_successes += 1;
                    let thief = after[e.served[0]];
                    let victim = after[e.victim];
                    if thief > wb - 1.0 + eps || victim > wb - 1.0 + eps {
                        rep.violations.push(format!(
                            "slot {slot}: steal on {} from 2^{wb} left victim 2^{victim}, thief 2^{thief}",
                            e.victim
                        ));
                    }
                } else if wb.is_finite() {
                    rep.dag_failures += 1;
                    let victim = after[e.victim];
                    if victim > wb - 0.5 + eps {
                        rep.violations.push(format!(
                            "slot {slot}: failed steals on {} left 2^{victim} from 2^{wb}",
                            e.victim
                        ));
                    }
                }
            }
            for i in 0..state.m() {
                let hs = state.deque_heights(i);
                if hs.is_empty() {
                    continue;
                }
                rep.deque_checks += 1;
                if let Err(msg) = check_deque_heights(&hs) {
                    rep.violations
                        .push(format!("slot {slot}: processor {i}: {msg}"));
                }
            }
        }
        Mode::Weighted => {}
    }
    rep
}

/// Heights from top to bottom must not increase, and must strictly
/// decrease except between the two bottom-most entries.
pub fn check_deque_heights(hs: &[u64]) -> Result<(), String> {
    let n = hs.len();
    for j in 1..n {
        let ok = if j == n - 1 {
            hs[j] <= hs[j - 1]
        } else {
            hs[j] < hs[j - 1]
        };
        if !ok {
            return Err(format!("deque heights {hs:?} out of order at {j}"));
        }
    }
    Ok(())
}

/// A state reached by running `config` for a random number of slots, for
/// spot checks of the contraction. States with an idle processor are
/// preferred, since otherwise no steal happens in the next slot.
pub fn reachable_state<R: Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
) -> Result<Option<SimState>, EngineError> {
    let mut quiet = config.clone();
    quiet.record_potential = false;
    quiet.record_steps = false;
    let cmax = crate::engine::run(&quiet)?.cmax;
    if cmax == 0 {
        return Ok(None);
    }
    let mut fallback = None;
    for _ in 0..40 {
        let t = rng.random_range(0..cmax);
        let mut srng = sim_rng(config.seed);
        let mut s = SimState::new(config, &mut srng)?;
        let mut ch = RandomChoices::new(&mut srng);
        for _ in 0..t {
            s.step(&mut ch)?;
        }
        if s.idle_count() > 0 {
            return Ok(Some(s));
        }
        fallback.get_or_insert(s);
    }
    Ok(fallback)
}
