//! Contraction factors, the `λ` constants they induce, the makespan bounds
//! built from them, and the constructive lower-bound schedule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, SimState};
use crate::protocols::{ProtocolOptions, ScriptedChoices};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("bounds need at least 2 processors, got {0}")]
    TooFewProcessors(usize),
    #[error("exponent nu must exceed 1, got {0}")]
    BadNu(f64),
    #[error("{which} needs {field}")]
    MissingInput {
        which: BoundKind,
        field: &'static str,
    },
    #[error("lower-bound construction needs k >= 1")]
    BadK,
    #[error("lower-bound schedule for k={k} finished in {cmax} slots, expected {expected}")]
    LowerBoundMismatch { k: u32, cmax: u64, expected: u64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Unit tasks, quadratic potential.
    Unit,
    /// Unit tasks, potential `Σ w^ν`.
    PowerNu,
    /// Unit tasks with cooperative thieves, potential `Σ (w^ν - w)`.
    Coop,
    /// DAG tasks, squared deque weights.
    Dag,
}

/// `1 / (1 - log2(1 + 1/e))`, the large-`m` limit of `λ` for unit tasks.
pub fn unit_lambda_limit() -> f64 {
    1.0 / (1.0 - (1.0 + (-1.0f64).exp()).log2())
}

/// Probability that a given processor receives at least one of `r` requests.
pub fn q(r: u64, m: usize) -> f64 {
    assert!(m >= 2, "q needs m >= 2");
    let miss = 1.0 - 1.0 / (m as f64 - 1.0);
    1.0 - miss.powf(r as f64)
}

/// Probabilities that a given processor receives exactly `k` of `r`
/// requests, for `k = 0..=r` (binomial with success `1/(m-1)`).
pub fn q_k_all(r: u64, m: usize) -> Vec<f64> {
    assert!(m >= 2, "q_k needs m >= 2");
    let r_us = r as usize;
    let mut out = vec![0.0; r_us + 1];
    if m == 2 {
        out[r_us] = 1.0;
        return out;
    }
    let p = 1.0 / (m as f64 - 1.0);
    let ratio = p / (1.0 - p);
    out[0] = (1.0 - p).powf(r as f64);
    for k in 0..r_us {
        out[k + 1] = out[k] * (r_us - k) as f64 / (k + 1) as f64 * ratio;
    }
    out
}

pub fn q_k(r: u64, m: usize, k: u64) -> f64 {
    if k > r {
        return 0.0;
    }
    q_k_all(r, m)[k as usize]
}

/// Contraction factor `h(r)` of the scenario.
pub fn h_of(scenario: Scenario, r: u64, m: usize, nu: f64) -> f64 {
    match scenario {
        Scenario::Unit | Scenario::Dag => 1.0 - q(r, m) / 2.0,
        Scenario::PowerNu => 1.0 - q(r, m) * (1.0 - 2f64.powf(1.0 - nu)),
        Scenario::Coop => {
            let gain: f64 = q_k_all(r, m)
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &p)| (1.0 - ((k + 1) as f64).powf(1.0 - nu)) * p)
                .sum();
            1.0 - gain
        }
    }
}

fn ratio(scenario: Scenario, r: u64, m: usize, nu: f64) -> f64 {
    r as f64 / (-(m as f64) * h_of(scenario, r, m, nu).log2())
}

/// `λ = max over r in 1..=m-1 of r / (-m log2 h(r))`, by direct scan.
pub fn lambda(scenario: Scenario, m: usize, nu: f64) -> Result<f64, BoundsError> {
    check(m, nu)?;
    Ok((1..m as u64)
        .map(|r| ratio(scenario, r, m, nu))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `λ` restricted to the endpoints `r = 1` and `r = m - 1`.
pub fn lambda_endpoints(scenario: Scenario, m: usize, nu: f64) -> Result<f64, BoundsError> {
    check(m, nu)?;
    Ok(ratio(scenario, 1, m, nu).max(ratio(scenario, m as u64 - 1, m, nu)))
}

fn check(m: usize, nu: f64) -> Result<(), BoundsError> {
    if m < 2 {
        return Err(BoundsError::TooFewProcessors(m));
    }
    if nu.is_nan() || nu <= 1.0 {
        return Err(BoundsError::BadNu(nu));
    }
    Ok(())
}

/// Minimizes `ν λ(ν)` over `ν` in `(1, 4]`: a 0.05 grid locates the basin
/// and a golden-section search refines it. Returns `(ν*, ν* λ(ν*))`.
pub fn optimize_nu(scenario: Scenario, m: usize) -> Result<(f64, f64), BoundsError> {
    check(m, 2.0)?;
    let f = |nu: f64| nu * lambda(scenario, m, nu).expect("nu > 1 and m >= 2");
    let step = 0.05;
    let grid: Vec<f64> = (1..=60).map(|i| 1.0 + step * i as f64).collect();
    let (best_i, _) =
        grid.iter()
            .map(|&x| f(x))
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
    let mut lo = if best_i == 0 {
        1.0 + 1e-6
    } else {
        grid[best_i - 1]
    };
    let mut hi = grid[(best_i + 1).min(grid.len() - 1)];
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-7 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)))
}

/// The four headline constants at `m` processors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Constants {
    pub m: usize,
    /// `2 λ(2)` for the quadratic unit-task potential.
    pub unit: f64,
    pub nu_star: f64,
    /// `min_ν ν λ(ν)`.
    pub power_min: f64,
    /// `3 λ_coop(3)`.
    pub coop3: f64,
    /// `3 λ` for DAGs.
    pub dag: f64,
}

pub fn constants(m: usize) -> Result<Constants, BoundsError> {
    let unit = 2.0 * lambda(Scenario::Unit, m, 2.0)?;
    let (nu_star, power_min) = optimize_nu(Scenario::PowerNu, m)?;
    Ok(Constants {
        m,
        unit,
        nu_star,
        power_min,
        coop3: 3.0 * lambda(Scenario::Coop, m, 3.0)?,
        dag: 3.0 * lambda(Scenario::Dag, m, 2.0)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// Unit tasks, quadratic potential, in terms of `Φ_0`.
    UnitVariance,
    /// Unit tasks, `Σ w^ν` potential.
    UnitPower,
    /// Unit tasks, cooperative thieves.
    UnitCooperative,
    /// Weighted tasks.
    Weighted,
    /// DAG tasks.
    Dag,
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundKind::UnitVariance => "unit_variance",
            BoundKind::UnitPower => "unit_power",
            BoundKind::UnitCooperative => "unit_cooperative",
            BoundKind::Weighted => "weighted",
            BoundKind::Dag => "dag",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub w: f64,
    pub m: usize,
    pub phi0: Option<f64>,
    pub n: Option<f64>,
    pub p_max: Option<f64>,
    pub d: Option<f64>,
}

/// A makespan bound: `expected` bounds `E[C_max]`; when present, the tail
/// bound at level `ε` is `tail_base + tail_coeff * log2(1/ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MakespanBound {
    pub which: BoundKind,
    pub expected: f64,
    pub tail_base: Option<f64>,
    pub tail_coeff: f64,
}

impl MakespanBound {
    /// Makespan exceeded with probability at most `eps`.
    pub fn tail(&self, eps: f64) -> Option<f64> {
        self.tail_base
            .map(|b| b + self.tail_coeff * (1.0 / eps).log2())
    }
}

const HALF_OVER_LN2: f64 = 0.5 / std::f64::consts::LN_2;

pub fn makespan_bound(which: BoundKind, inp: &BoundInputs) -> Result<MakespanBound, BoundsError> {
    let need = |v: Option<f64>, field| v.ok_or(BoundsError::MissingInput { which, field });
    let base = inp.w / inp.m as f64;
    let c = unit_lambda_limit();
    let bound = |expected, tail_base, tail_coeff| MakespanBound {
        which,
        expected,
        tail_base,
        tail_coeff,
    };
    Ok(match which {
        BoundKind::UnitVariance => {
            let lp = need(inp.phi0, "phi0")?.max(1.0).log2();
            bound(
                base + c * (lp + 1.0 / std::f64::consts::LN_2) + 1.0,
                Some(base + c * lp + 1.0),
                c,
            )
        }
        BoundKind::UnitPower => bound(
            base + 3.24 * (inp.w.log2() + HALF_OVER_LN2) + 1.0,
            None,
            0.0,
        ),
        BoundKind::UnitCooperative => {
            let lw = inp.w.log2();
            bound(base + 2.88 * lw + 3.4, Some(base + 2.88 * lw + 2.0), 1.0)
        }
        BoundKind::Weighted => {
            let n = need(inp.n, "n")?;
            let p_max = need(inp.p_max, "p_max")?;
            let mf = inp.m as f64;
            bound(
                base + (mf - 1.0) / mf * p_max + 3.24 * (n.log2() + HALF_OVER_LN2) + 1.0,
                None,
                0.0,
            )
        }
        BoundKind::Dag => {
            let d = need(inp.d, "d")?;
            bound(
                base + 5.5 * d + 1.0,
                Some(base + 3.0 * c * d + 1.0),
                3.0 * c,
            )
        }
    })
}

/// Runs the best-case schedule on `W = 2^(k+1)` unit tasks over `m = 2^k`
/// processors, all starting on processor 0: every slot, idle processors (in
/// index order) are matched one-to-one with the loaded processors holding
/// at least two tasks, heaviest first; leftover thieves aim at processors
/// nobody else is stealing from. The makespan must be `k + 2`.
pub fn lower_bound_run(k: u32) -> Result<u64, BoundsError> {
    if k == 0 {
        return Err(BoundsError::BadK);
    }
    let m = 1usize << k;
    let mut loads = vec![0u64; m];
    loads[0] = 1u64 << (k + 1);
    let mut state =
        SimState::from_unit_loads(&loads, ProtocolOptions::default()).map_err(EngineError::from)?;
    while !state.is_terminal() {
        let w = state.task_counts();
        let mut victims: Vec<usize> = (0..m).filter(|&i| w[i] >= 2).collect();
        victims.sort_by_key(|&i| std::cmp::Reverse(w[i]));
        let thieves: Vec<usize> = (0..m).filter(|&i| w[i] == 0).collect();
        let mut script = ScriptedChoices::new(m);
        let mut targeted = vec![false; m];
        for (&t, &v) in thieves.iter().zip(&victims) {
            script = script.target(t, v).winner(v, t);
            targeted[v] = true;
        }
        for &t in thieves.iter().skip(victims.len()) {
            let v = (0..m)
                .find(|&v| v != t && !targeted[v])
                .unwrap_or((t + 1) % m);
            script = script.target(t, v);
        }
        state.step(&mut script)?;
    }
    let expected = u64::from(k) + 2;
    if state.t() != expected {
        return Err(BoundsError::LowerBoundMismatch {
            k,
            cmax: state.t(),
            expected,
        });
    }
    Ok(state.t())
}
