//! Victim selection, contention arbitration and the split rules applied when
//! a steal request succeeds.
//!
//! Randomness enters the protocol in exactly three places: which victim an
//! idle processor targets, which requester wins a contested victim, and (in
//! cooperative mode) how the pieces of a split are dealt out to the thieves.
//! All three go through the [`Chooser`] trait, so the engine can be driven by
//! a seeded generator, by a script, or by an exhaustive enumerator.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Mode;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("processor {0} sent a steal request to itself")]
    SelfTarget(usize),
    #[error(
        "steal request from {thief} targets processor {victim}, but only {m} processors exist"
    )]
    VictimOutOfRange {
        thief: usize,
        victim: usize,
        m: usize,
    },
    #[error("arbiter picked {winner} for victim {victim}, which did not request it")]
    WinnerNotRequester { victim: usize, winner: usize },
    #[error("split needs a victim load of at least 2, got {0}")]
    NothingToSplit(u64),
    #[error("cooperative split needs at least one thief")]
    NoThieves,
}

/// Which side of an odd split receives the extra task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRounding {
    VictimCeil,
    ThiefCeil,
}

impl SplitRounding {
    /// Default rounding for a mode: unit tasks give the ceiling to the
    /// victim, weighted tasks give it to the thief.
    pub fn default_for(mode: Mode) -> Self {
        match mode {
            Mode::Weighted => SplitRounding::ThiefCeil,
            Mode::Unit | Mode::Dag => SplitRounding::VictimCeil,
        }
    }
}

/// What a cooperative split divides among the victim and its thieves.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoopSplitBase {
    /// The victim executes its task first; the `w - 1` remaining tasks are split.
    #[default]
    AfterExecution,
    /// All `w` tasks are split; the victim executes one task out of its part.
    WholeQueue,
}

/// Which half of the stealable weighted queue the thief takes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightedHalf {
    /// The back half in queue order.
    #[default]
    Back,
    Front,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolOptions {
    /// Serve every requester of a victim at once (unit tasks only).
    pub cooperative: bool,
    /// `None` picks [`SplitRounding::default_for`] the run's mode.
    pub split_rounding: Option<SplitRounding>,
    pub coop_split: CoopSplitBase,
    pub weighted_half: WeightedHalf,
}

impl ProtocolOptions {
    pub fn cooperative() -> Self {
        ProtocolOptions {
            cooperative: true,
            ..Default::default()
        }
    }

    pub fn rounding(&self, mode: Mode) -> SplitRounding {
        self.split_rounding
            .unwrap_or_else(|| SplitRounding::default_for(mode))
    }
}

/// Source of the protocol's random decisions.
pub trait Chooser {
    /// Victim targeted by idle processor `thief`; must differ from `thief`.
    fn pick_victim(&mut self, thief: usize, m: usize) -> usize;
    /// The requester of `victim` that wins under standard contention.
    fn pick_winner(&mut self, victim: usize, requesters: &[usize]) -> usize;
    /// Order in which cooperative thieves receive the pieces of a split.
    fn order_thieves(&mut self, victim: usize, thieves: &mut [usize]);
}

/// Uniform victim among the `m - 1` other processors.
pub fn uniform_victim<R: Rng + ?Sized>(thief: usize, m: usize, rng: &mut R) -> usize {
    debug_assert!(m >= 2);
    let v = rng.random_range(0..m - 1);
    if v >= thief {
        v + 1
    } else {
        v
    }
}

/// The protocol's randomness drawn from a generator.
pub struct RandomChoices<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> RandomChoices<'a, R> {
    pub fn new(rng: &'a mut R) -> Self {
        RandomChoices { rng }
    }
}

impl<R: Rng + ?Sized> Chooser for RandomChoices<'_, R> {
    fn pick_victim(&mut self, thief: usize, m: usize) -> usize {
        uniform_victim(thief, m, self.rng)
    }

    fn pick_winner(&mut self, _victim: usize, requesters: &[usize]) -> usize {
        if requesters.len() == 1 {
            requesters[0]
        } else {
            requesters[self.rng.random_range(0..requesters.len())]
        }
    }

    fn order_thieves(&mut self, _victim: usize, thieves: &mut [usize]) {
        thieves.shuffle(self.rng);
    }
}

/// Fully scripted decisions: a fixed target per thief and, optionally, a
/// fixed winner per victim. Unlisted winners default to the lowest requester;
/// cooperative thieves keep ascending order.
#[derive(Clone, Debug, Default)]
pub struct ScriptedChoices {
    targets: Vec<Option<usize>>,
    winners: Vec<Option<usize>>,
}

impl ScriptedChoices {
    pub fn new(m: usize) -> Self {
        ScriptedChoices {
            targets: vec![None; m],
            winners: vec![None; m],
        }
    }

    pub fn target(mut self, thief: usize, victim: usize) -> Self {
        self.targets[thief] = Some(victim);
        self
    }

    pub fn winner(mut self, victim: usize, thief: usize) -> Self {
        self.winners[victim] = Some(thief);
        self
    }
}

impl Chooser for ScriptedChoices {
    fn pick_victim(&mut self, thief: usize, m: usize) -> usize {
        // An unscripted thief aims at its neighbour.
        self.targets
            .get(thief)
            .copied()
            .flatten()
            .unwrap_or((thief + 1) % m)
    }

    fn pick_winner(&mut self, victim: usize, requesters: &[usize]) -> usize {
        self.winners
            .get(victim)
            .copied()
            .flatten()
            .unwrap_or(requesters[0])
    }

    fn order_thieves(&mut self, _victim: usize, _thieves: &mut [usize]) {}
}

/// All steal requests that landed on one victim during a slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contest {
    pub victim: usize,
    /// Requesters in ascending processor order.
    pub requesters: Vec<usize>,
    /// Standard protocol: the single winner. Cooperative: every requester,
    /// in the order they receive pieces.
    pub served: Vec<usize>,
}

/// Groups `(thief, victim)` requests by victim (ascending) and resolves
/// contention. Winning arbitration does not by itself make a steal
/// successful; the victim must also hold stealable work.
pub fn arbitrate<C: Chooser + ?Sized>(
    requests: &[(usize, usize)],
    m: usize,
    cooperative: bool,
    chooser: &mut C,
) -> Result<Vec<Contest>, ProtocolError> {
    for &(thief, victim) in requests {
        if thief == victim {
            return Err(ProtocolError::SelfTarget(thief));
        }
        if victim >= m {
            return Err(ProtocolError::VictimOutOfRange { thief, victim, m });
        }
    }
    let mut sorted: Vec<(usize, usize)> = requests.iter().map(|&(t, v)| (v, t)).collect();
    sorted.sort_unstable();

    let mut contests = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let victim = sorted[i].0;
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == victim {
            j += 1;
        }
        let requesters: Vec<usize> = sorted[i..j].iter().map(|&(_, t)| t).collect();
        let served = if cooperative {
            let mut all = requesters.clone();
            chooser.order_thieves(victim, &mut all);
            all
        } else {
            let winner = chooser.pick_winner(victim, &requesters);
            if !requesters.contains(&winner) {
                return Err(ProtocolError::WinnerNotRequester { victim, winner });
            }
            vec![winner]
        };
        contests.push(Contest {
            victim,
            requesters,
            served,
        });
        i = j;
    }
    Ok(contests)
}

/// Unit-task split of a victim holding `w_victim` tasks at the start of the
/// slot. The victim executes one task; the rest is halved. Returns
/// `(victim_keep, thief_get)`.
pub fn split_unit(w_victim: u64, rounding: SplitRounding) -> Result<(u64, u64), ProtocolError> {
    if w_victim < 2 {
        return Err(ProtocolError::NothingToSplit(w_victim));
    }
    let rest = w_victim - 1;
    let big = rest.div_ceil(2);
    let small = rest / 2;
    Ok(match rounding {
        SplitRounding::VictimCeil => (big, small),
        SplitRounding::ThiefCeil => (small, big),
    })
}

/// Splits `amount` into `parts` pieces differing by at most one, larger
/// pieces first: `amount = parts * q + b` gives `b` pieces of `q + 1`
/// followed by `parts - b` pieces of `q`.
pub fn even_parts(amount: u64, parts: usize) -> Vec<u64> {
    assert!(parts >= 1);
    let p = parts as u64;
    let q = amount / p;
    let b = (amount % p) as usize;
    (0..parts).map(|i| if i < b { q + 1 } else { q }).collect()
}

/// Cooperative split of a victim holding `w_victim` tasks among `k` thieves:
/// the victim executes one task and the remaining `w_victim - 1` are cut into
/// `k + 1` near-equal parts. The first (largest) part is the victim's.
pub fn split_coop(w_victim: u64, k: usize) -> Result<Vec<u64>, ProtocolError> {
    if w_victim < 2 {
        return Err(ProtocolError::NothingToSplit(w_victim));
    }
    if k == 0 {
        return Err(ProtocolError::NoThieves);
    }
    Ok(even_parts(w_victim - 1, k + 1))
}

/// Weighted split of the victim's stealable queue (the tasks it has not
/// started). Task counts are halved; the work they carry need not be.
/// Returns `(victim_keep, thief_get)`, both in original queue order.
pub fn split_weighted(
    queue: &[u64],
    rounding: SplitRounding,
    half: WeightedHalf,
) -> (Vec<u64>, Vec<u64>) {
    let s = queue.len();
    let thief_count = match rounding {
        SplitRounding::ThiefCeil => s.div_ceil(2),
        SplitRounding::VictimCeil => s / 2,
    };
    match half {
        WeightedHalf::Back => {
            let cut = s - thief_count;
            (queue[..cut].to_vec(), queue[cut..].to_vec())
        }
        WeightedHalf::Front => (queue[thief_count..].to_vec(), queue[..thief_count].to_vec()),
    }
}

/// Same split applied in place on a deque; returns the thief's tasks.
pub(crate) fn split_weighted_deque(
    queue: &mut VecDeque<u64>,
    rounding: SplitRounding,
    half: WeightedHalf,
) -> VecDeque<u64> {
    let s = queue.len();
    let thief_count = match rounding {
        SplitRounding::ThiefCeil => s.div_ceil(2),
        SplitRounding::VictimCeil => s / 2,
    };
    match half {
        WeightedHalf::Back => queue.split_off(s - thief_count),
        WeightedHalf::Front => {
            let rest = queue.split_off(thief_count);
            std::mem::replace(queue, rest)
        }
    }
}

/// Whether a DAG deque of `len` ready tasks can be stolen from, given whether
/// its bottom task is the one in execution this slot.
pub fn dag_stealable(len: usize, bottom_executing: bool) -> bool {
    if bottom_executing {
        len >= 2
    } else {
        len >= 1
    }
}

/// Pops the top-most task of a victim deque (front = top, back = bottom).
pub fn steal_dag<T>(deque: &mut VecDeque<T>, bottom_executing: bool) -> Option<T> {
    if dag_stealable(deque.len(), bottom_executing) {
        deque.pop_front()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::sim_rng;
    use proptest::prelude::*;

    #[test]
    fn split_unit_examples() {
        assert_eq!(split_unit(5, SplitRounding::VictimCeil).unwrap(), (2, 2));
        assert_eq!(split_unit(2, SplitRounding::VictimCeil).unwrap(), (1, 0));
        assert_eq!(split_unit(6, SplitRounding::ThiefCeil).unwrap(), (2, 3));
        assert_eq!(
            split_unit(1, SplitRounding::VictimCeil),
            Err(ProtocolError::NothingToSplit(1))
        );
    }

    #[test]
    fn split_coop_examples() {
        assert_eq!(split_coop(10, 2).unwrap(), vec![3, 3, 3]);
        assert_eq!(split_coop(11, 2).unwrap(), vec![4, 3, 3]);
        assert_eq!(split_coop(2, 3).unwrap(), vec![1, 0, 0, 0]);
        assert_eq!(split_coop(5, 0), Err(ProtocolError::NoThieves));
    }

    #[test]
    fn split_weighted_examples() {
        let (keep, get) = split_weighted(
            &[1, 1, 1, 1, 9],
            SplitRounding::ThiefCeil,
            WeightedHalf::Back,
        );
        assert_eq!(keep, vec![1, 1]);
        assert_eq!(get, vec![1, 1, 9]);
        assert_eq!(keep.iter().sum::<u64>(), 2);
        assert_eq!(get.iter().sum::<u64>(), 11);

        let (keep, get) = split_weighted(&[4], SplitRounding::ThiefCeil, WeightedHalf::Back);
        assert!(keep.is_empty());
        assert_eq!(get, vec![4]);

        let (keep, get) =
            split_weighted(&[3, 3, 3, 3], SplitRounding::ThiefCeil, WeightedHalf::Back);
        assert_eq!(keep.iter().sum::<u64>(), get.iter().sum::<u64>());
    }

    #[test]
    fn steal_dag_examples() {
        let mut d: VecDeque<&str> = ["u", "v"].into_iter().collect();
        assert_eq!(steal_dag(&mut d, true), Some("u"));
        assert_eq!(d, VecDeque::from(["v"]));
        // Only the executing task is left.
        assert_eq!(steal_dag(&mut d, true), None);
        let mut empty: VecDeque<u32> = VecDeque::new();
        assert_eq!(steal_dag(&mut empty, false), None);
    }

    #[test]
    fn arbitrate_standard_single_winner() {
        let mut rng = sim_rng(3);
        let reqs = [(1, 0), (2, 0), (3, 0)];
        let c = arbitrate(&reqs, 4, false, &mut RandomChoices::new(&mut rng)).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].requesters, vec![1, 2, 3]);
        assert_eq!(c[0].served.len(), 1);
    }

    #[test]
    fn arbitrate_cooperative_serves_all() {
        let mut rng = sim_rng(3);
        let reqs = [(1, 0), (2, 0), (3, 0)];
        let c = arbitrate(&reqs, 4, true, &mut RandomChoices::new(&mut rng)).unwrap();
        let mut served = c[0].served.clone();
        served.sort();
        assert_eq!(served, vec![1, 2, 3]);
        // The work then goes 4 ways.
        assert_eq!(split_coop(13, 3).unwrap().len(), 4);
    }

    #[test]
    fn arbitrate_independent_victims() {
        let mut rng = sim_rng(3);
        let reqs = [(2, 0), (3, 1)];
        let c = arbitrate(&reqs, 4, false, &mut RandomChoices::new(&mut rng)).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].served, vec![2]);
        assert_eq!(c[1].served, vec![3]);
    }

    #[test]
    fn arbitrate_rejects_bad_targets() {
        let mut ch = ScriptedChoices::new(3);
        assert_eq!(
            arbitrate(&[(1, 1)], 3, false, &mut ch),
            Err(ProtocolError::SelfTarget(1))
        );
        assert!(matches!(
            arbitrate(&[(1, 5)], 3, false, &mut ch),
            Err(ProtocolError::VictimOutOfRange { .. })
        ));
        let mut bad = ScriptedChoices::new(3).winner(0, 2);
        assert!(matches!(
            arbitrate(&[(1, 0)], 3, false, &mut bad),
            Err(ProtocolError::WinnerNotRequester { .. })
        ));
    }

    #[test]
    fn uniform_victim_never_self_and_covers_others() {
        let mut rng = sim_rng(11);
        let mut hits = [0u32; 5];
        for _ in 0..5000 {
            let v = uniform_victim(2, 5, &mut rng);
            assert_ne!(v, 2);
            hits[v] += 1;
        }
        assert_eq!(hits[2], 0);
        assert!(hits
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != 2)
            .all(|(_, &h)| h > 1000));
    }

    proptest! {
        #[test]
        fn unit_split_conserves(w in 2u64..100_000, thief_ceil in any::<bool>()) {
            let r = if thief_ceil { SplitRounding::ThiefCeil } else { SplitRounding::VictimCeil };
            let (k, g) = split_unit(w, r).unwrap();
            prop_assert_eq!(k + g, w - 1);
            prop_assert!(k.abs_diff(g) <= 1);
        }

        #[test]
        fn coop_parts_conserve_and_are_balanced(w in 2u64..10_000, k in 1usize..64) {
            let parts = split_coop(w, k).unwrap();
            prop_assert_eq!(parts.len(), k + 1);
            prop_assert_eq!(parts.iter().sum::<u64>(), w - 1);
            let max = *parts.iter().max().unwrap();
            let min = *parts.iter().min().unwrap();
            prop_assert!(max - min <= 1);
            prop_assert_eq!(parts[0], max);
        }

        #[test]
        fn weighted_split_conserves(q in proptest::collection::vec(1u64..10, 1..40), thief_ceil in any::<bool>(), back in any::<bool>()) {
            let r = if thief_ceil { SplitRounding::ThiefCeil } else { SplitRounding::VictimCeil };
            let h = if back { WeightedHalf::Back } else { WeightedHalf::Front };
            let (keep, get) = split_weighted(&q, r, h);
            prop_assert_eq!(keep.len() + get.len(), q.len());
            prop_assert!(keep.len().abs_diff(get.len()) <= 1);
            let mut joined = if back { [keep.clone(), get.clone()].concat() } else { [get.clone(), keep.clone()].concat() };
            prop_assert_eq!(&joined, &q);
            let mut dq: VecDeque<u64> = q.iter().copied().collect();
            let got = split_weighted_deque(&mut dq, r, h);
            joined = got.into_iter().collect();
            prop_assert_eq!(joined, get);
            prop_assert_eq!(dq.into_iter().collect::<Vec<_>>(), keep);
        }
    }
}
