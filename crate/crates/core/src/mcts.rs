//! Anytime Monte Carlo tree search with UCT over a generative model.
//!
//! The tree is open loop: a node stands for an action sequence from the
//! root, and every iteration re-samples transitions from the root state.
//! A node's action set is fixed by the state sample that created it.

use std::fmt::Debug;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{seeded, SimRng};

/// A simulator the search can query.
pub trait GenerativeModel {
    type State: Clone;
    type Action: Copy + Ord + Debug;

    fn legal_actions(&self, state: &Self::State) -> Vec<Self::Action>;

    /// Samples a successor and the reward for the transition.
    fn sample_transition(&self, state: &Self::State, action: &Self::Action, rng: &mut SimRng) -> (Self::State, f64);

    fn is_terminal(&self, _state: &Self::State) -> bool {
        false
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MctsError {
    #[error("root state has no legal actions")]
    NoLegalActions,
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RolloutPolicy {
    #[default]
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MctsConfig {
    pub discount: f64,
    pub exploration_c: f64,
    pub max_depth: usize,
    pub iteration_limit: usize,
    pub time_limit: Option<Duration>,
    pub rollout_policy: RolloutPolicy,
    /// Shrinks `max_depth` with [`depth_schedule`] when the budget is thin.
    pub adaptive_depth: bool,
    /// Independent trees searched in parallel and merged at the root.
    pub root_parallel: usize,
}

impl Default for MctsConfig {
    fn default() -> Self {
        Self {
            discount: 0.95,
            exploration_c: 100.0,
            max_depth: 3,
            iteration_limit: 1000,
            time_limit: None,
            rollout_policy: RolloutPolicy::Random,
            adaptive_depth: false,
            root_parallel: 1,
        }
    }
}

impl MctsConfig {
    pub fn validate(&self) -> Result<(), MctsError> {
        let bad = |m: &str| Err(MctsError::InvalidConfig(m.into()));
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return bad("discount must lie in (0, 1]");
        }
        if !(self.exploration_c >= 0.0) {
            return bad("exploration constant must be non-negative");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1");
        }
        if self.iteration_limit < 1 {
            return bad("iteration_limit must be at least 1");
        }
        if self.root_parallel < 1 {
            return bad("root_parallel must be at least 1");
        }
        Ok(())
    }
}

/// UCT priority of a child. Unvisited children come first.
pub fn uct_score(child_value: f64, child_visits: u32, parent_visits: u32, c: f64) -> f64 {
    if child_visits == 0 {
        return f64::INFINITY;
    }
    if c == 0.0 {
        return child_value;
    }
    child_value + c * ((parent_visits.max(1) as f64).ln() / child_visits as f64).sqrt()
}

/// Deepest search (up to 3) that still leaves two visits per action at the
/// deepest level.
pub fn depth_schedule(action_count: usize, budget_iterations: usize) -> usize {
    (1..=3)
        .rev()
        .find(|&d| {
            (action_count as u128)
                .checked_pow(d as u32)
                .is_some_and(|n| budget_iterations as u128 >= 2 * n)
        })
        .unwrap_or(1)
}

#[derive(Clone, Debug)]
pub struct Node<A> {
    pub visits: u32,
    /// Running mean of returns that start with the edge reward into this node.
    pub value: f64,
    /// Actions available here, in expansion order.
    pub actions: Vec<A>,
    /// Expanded children: `(action, node id)`.
    pub children: Vec<(A, usize)>,
}

impl<A> Node<A> {
    fn new(actions: Vec<A>) -> Self {
        Self {
            visits: 0,
            value: 0.0,
            actions,
            children: Vec::new(),
        }
    }
}

/// The search tree after a run. Node 0 is the root.
#[derive(Clone, Debug)]
pub struct SearchTree<A> {
    pub nodes: Vec<Node<A>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChildStats<A> {
    pub action: A,
    pub visits: u32,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct SearchResult<A> {
    pub action: A,
    pub iterations: usize,
    pub root_children: Vec<ChildStats<A>>,
}

/// Runs the search and returns the most visited root action.
pub fn search<M>(model: &M, root: &M::State, cfg: &MctsConfig, rng: &mut SimRng) -> Result<SearchResult<M::Action>, MctsError>
where
    M: GenerativeModel + Sync,
    M::State: Send + Sync,
    M::Action: Send + Sync,
{
    cfg.validate()?;
    let actions = model.legal_actions(root);
    if actions.is_empty() {
        return Err(MctsError::NoLegalActions);
    }
    if actions.len() == 1 {
        return Ok(SearchResult {
            action: actions[0],
            iterations: 0,
            root_children: vec![],
        });
    }
    let mut cfg = cfg.clone();
    if cfg.adaptive_depth {
        cfg.max_depth = cfg.max_depth.min(depth_schedule(actions.len(), cfg.iteration_limit));
    }
    if cfg.root_parallel <= 1 {
        let (tree, iterations) = build_tree(model, root, &cfg, rng);
        let stats = root_stats(&tree);
        return Ok(finish(stats, iterations, &actions));
    }
    let seeds: Vec<u64> = (0..cfg.root_parallel).map(|_| rng.next_u64()).collect();
    let trees: Vec<(SearchTree<M::Action>, usize)> = seeds
        .par_iter()
        .map(|&s| build_tree(model, root, &cfg, &mut seeded(s)))
        .collect();
    let mut merged: Vec<ChildStats<M::Action>> = Vec::new();
    let mut iterations = 0;
    for (tree, n) in &trees {
        iterations += n;
        for c in root_stats(tree) {
            match merged.iter_mut().find(|m| m.action == c.action) {
                Some(m) => {
                    let total = m.visits + c.visits;
                    if total > 0 {
                        m.value = (m.value * m.visits as f64 + c.value * c.visits as f64) / total as f64;
                    }
                    m.visits = total;
                }
                None => merged.push(c),
            }
        }
    }
    merged.sort_by(|a, b| a.action.cmp(&b.action));
    Ok(finish(merged, iterations, &actions))
}

fn root_stats<A: Copy>(tree: &SearchTree<A>) -> Vec<ChildStats<A>> {
    tree.nodes[0]
        .children
        .iter()
        .map(|&(a, id)| ChildStats {
            action: a,
            visits: tree.nodes[id].visits,
            value: tree.nodes[id].value,
        })
        .collect()
}

fn finish<A: Copy + Ord>(stats: Vec<ChildStats<A>>, iterations: usize, legal: &[A]) -> SearchResult<A> {
    let best = stats.iter().copied().max_by(|a, b| {
        a.visits
            .cmp(&b.visits)
            .then(a.value.total_cmp(&b.value))
            .then(b.action.cmp(&a.action))
    });
    let action = best
        .map(|b| b.action)
        .unwrap_or_else(|| *legal.iter().min().expect("non-empty"));
    SearchResult {
        action,
        iterations,
        root_children: stats,
    }
}

/// Builds a tree with the configured budget. Exposed for inspection.
pub fn build_tree<M: GenerativeModel>(model: &M, root: &M::State, cfg: &MctsConfig, rng: &mut SimRng) -> (SearchTree<M::Action>, usize) {
    let start = Instant::now();
    let mut tree = SearchTree {
        nodes: vec![Node::new(model.legal_actions(root))],
    };
    let mut iterations = 0;
    let mut path: Vec<usize> = Vec::with_capacity(cfg.max_depth + 1);
    let mut rewards: Vec<f64> = Vec::with_capacity(cfg.max_depth);
    while iterations < cfg.iteration_limit {
        if let Some(limit) = cfg.time_limit {
            if iterations > 0 && start.elapsed() >= limit {
                break;
            }
        }
        iterate(model, root, cfg, rng, &mut tree, &mut path, &mut rewards);
        iterations += 1;
    }
    (tree, iterations)
}

fn iterate<M: GenerativeModel>(
    model: &M,
    root: &M::State,
    cfg: &MctsConfig,
    rng: &mut SimRng,
    tree: &mut SearchTree<M::Action>,
    path: &mut Vec<usize>,
    rewards: &mut Vec<f64>,
) {
    path.clear();
    rewards.clear();
    path.push(0);
    let mut owned: Option<M::State> = None;
    let mut node = 0;
    let mut depth = 0;
    let mut tail = 0.0;
    // The first pass only rolls out from the root.
    let root_fresh = tree.nodes[0].visits == 0;
    if root_fresh {
        tail = rollout(model, root, cfg.max_depth, cfg.discount, rng);
    } else {
        loop {
            let state = owned.as_ref().unwrap_or(root);
            if depth >= cfg.max_depth || model.is_terminal(state) {
                break;
            }
            let n = &tree.nodes[node];
            if n.actions.is_empty() {
                break;
            }
            if n.children.len() < n.actions.len() {
                let a = n.actions[n.children.len()];
                let (next, r) = model.sample_transition(state, &a, rng);
                depth += 1;
                let child_actions = if depth < cfg.max_depth && !model.is_terminal(&next) {
                    model.legal_actions(&next)
                } else {
                    Vec::new()
                };
                let id = tree.nodes.len();
                tree.nodes.push(Node::new(child_actions));
                tree.nodes[node].children.push((a, id));
                path.push(id);
                rewards.push(r);
                tail = rollout(model, &next, cfg.max_depth - depth, cfg.discount, rng);
                break;
            }
            let parent_visits = n.visits;
            let (a, child) = n
                .children
                .iter()
                .copied()
                .max_by(|&(a1, c1), &(a2, c2)| {
                    let s1 = uct_score(tree.nodes[c1].value, tree.nodes[c1].visits, parent_visits, cfg.exploration_c);
                    let s2 = uct_score(tree.nodes[c2].value, tree.nodes[c2].visits, parent_visits, cfg.exploration_c);
                    s1.total_cmp(&s2).then(a2.cmp(&a1))
                })
                .expect("fully expanded node has children");
            let (next, r) = model.sample_transition(state, &a, rng);
            owned = Some(next);
            node = child;
            depth += 1;
            path.push(child);
            rewards.push(r);
        }
    }
    let mut ret = tail;
    for i in (0..rewards.len()).rev() {
        ret = rewards[i] + cfg.discount * ret;
        bump(&mut tree.nodes[path[i + 1]], ret);
    }
    bump(&mut tree.nodes[0], ret);
}

fn bump<A>(n: &mut Node<A>, ret: f64) {
    n.visits += 1;
    n.value += (ret - n.value) / n.visits as f64;
}

/// Discounted return of a uniformly random policy over `steps` steps.
fn rollout<M: GenerativeModel>(model: &M, start: &M::State, steps: usize, discount: f64, rng: &mut SimRng) -> f64 {
    let mut total = 0.0;
    let mut weight = 1.0;
    let mut owned: Option<M::State> = None;
    for _ in 0..steps {
        let state = owned.as_ref().unwrap_or(start);
        if model.is_terminal(state) {
            break;
        }
        let actions = model.legal_actions(state);
        let Some(a) = actions.choose(rng) else {
            break;
        };
        let (next, r) = model.sample_transition(state, a, rng);
        total += weight * r;
        weight *= discount;
        owned = Some(next);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Arms with fixed rewards; one step.
    struct Bandit(Vec<f64>);

    impl GenerativeModel for Bandit {
        type State = ();
        type Action = usize;
        fn legal_actions(&self, _: &()) -> Vec<usize> {
            (0..self.0.len()).collect()
        }
        fn sample_transition(&self, _: &(), a: &usize, _: &mut SimRng) -> ((), f64) {
            ((), self.0[*a])
        }
    }

    /// Two levels: state is the depth reached; reward `action + 10 * depth`.
    struct TwoLevel;

    impl GenerativeModel for TwoLevel {
        type State = u32;
        type Action = u32;
        fn legal_actions(&self, s: &u32) -> Vec<u32> {
            if *s < 2 {
                vec![0, 1]
            } else {
                vec![]
            }
        }
        fn sample_transition(&self, s: &u32, a: &u32, _: &mut SimRng) -> (u32, f64) {
            (s + 1, *a as f64 + 10.0 * *s as f64)
        }
        fn is_terminal(&self, s: &u32) -> bool {
            *s >= 2
        }
    }

    /// Noisy arms.
    struct Noisy;

    impl GenerativeModel for Noisy {
        type State = u8;
        type Action = u8;
        fn legal_actions(&self, _: &u8) -> Vec<u8> {
            (0..6).collect()
        }
        fn sample_transition(&self, s: &u8, a: &u8, rng: &mut SimRng) -> (u8, f64) {
            (s.wrapping_add(1), *a as f64 * 0.1 + rng.gen::<f64>())
        }
    }

    fn cfg(depth: usize, iters: usize, c: f64) -> MctsConfig {
        MctsConfig {
            discount: 1.0,
            exploration_c: c,
            max_depth: depth,
            iteration_limit: iters,
            ..MctsConfig::default()
        }
    }

    #[test]
    fn uct_examples() {
        assert_eq!(uct_score(3.0, 0, 10, 1.0), f64::INFINITY);
        assert_eq!(uct_score(0.7, 4, 10, 0.0), 0.7);
        let parent = 3u32;
        let expected = (parent as f64).ln().sqrt();
        assert!((uct_score(0.0, 1, parent, 1.0) - expected).abs() < 1e-12);
        assert!((uct_score(0.5, 4, 20, 2.0) - (0.5 + 2.0 * (20f64.ln() / 4.0).sqrt())).abs() < 1e-12);
    }

    #[test]
    fn depth_schedule_examples() {
        assert_eq!(depth_schedule(49, 10_000), 2);
        assert_eq!(depth_schedule(49, 800), 1);
        assert_eq!(depth_schedule(2, 100), 3);
        assert_eq!(depth_schedule(1000, 1), 1);
    }

    #[test]
    fn single_action_is_forced() {
        let r = search(&Bandit(vec![5.0]), &(), &cfg(1, 10, 1.0), &mut seeded(0)).unwrap();
        assert_eq!(r.action, 0);
    }

    #[test]
    fn empty_root_is_an_error() {
        let r = search(&Bandit(vec![]), &(), &cfg(1, 10, 1.0), &mut seeded(0));
        assert!(matches!(r, Err(MctsError::NoLegalActions)));
    }

    #[test]
    fn two_armed_bandit_prefers_the_paying_arm() {
        let r = search(&Bandit(vec![0.0, 1.0]), &(), &cfg(1, 100, 1.0), &mut seeded(0)).unwrap();
        assert_eq!(r.action, 1);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let c = cfg(3, 300, 2.0);
        let a = search(&Noisy, &0, &c, &mut seeded(5)).unwrap();
        let b = search(&Noisy, &0, &c, &mut seeded(5)).unwrap();
        assert_eq!(a.action, b.action);
        assert_eq!(a.root_children, b.root_children);
    }

    #[test]
    fn node_values_are_means_of_returns() {
        let (tree, _) = build_tree(&TwoLevel, &0, &cfg(2, 200, 1.0), &mut seeded(1));
        // Every root child `a` is followed by a second step worth 10 + b;
        // returns through a leaf `(a, b)` are a + 10 + b exactly.
        for &(a, id) in &tree.nodes[0].children {
            let n = &tree.nodes[id];
            for &(b, leaf) in &n.children {
                let l = &tree.nodes[leaf];
                assert!((l.value - (10.0 + b as f64)).abs() < 1e-9);
            }
            // The child's first visit rolled out randomly; the rest went
            // through its leaves.
            let through: f64 = n
                .children
                .iter()
                .map(|&(_, leaf)| tree.nodes[leaf].visits as f64 * (a as f64 + tree.nodes[leaf].value))
                .sum();
            let first = n.value * n.visits as f64 - through;
            assert!(first >= a as f64 + 10.0 - 1e-9 && first <= a as f64 + 11.0 + 1e-9);
        }
    }

    #[test]
    fn round_robin_with_large_exploration() {
        let (tree, _) = build_tree(&Bandit(vec![1.0; 5]), &(), &cfg(1, 1 + 5 * 20, 1e6), &mut seeded(0));
        let visits: Vec<u32> = tree.nodes[0].children.iter().map(|&(_, id)| tree.nodes[id].visits).collect();
        let lo = *visits.iter().min().unwrap();
        let hi = *visits.iter().max().unwrap();
        assert!(hi - lo <= 1, "{visits:?}");
    }

    #[test]
    fn time_limit_still_returns_a_legal_action() {
        let c = MctsConfig {
            time_limit: Some(Duration::from_nanos(1)),
            iteration_limit: 1_000_000,
            ..cfg(2, 1, 1.0)
        };
        let r = search(&Noisy, &0, &c, &mut seeded(0)).unwrap();
        assert!(r.action < 6);
    }

    #[test]
    fn root_parallel_is_reproducible() {
        let c = MctsConfig {
            root_parallel: 3,
            ..cfg(2, 200, 2.0)
        };
        let a = search(&Noisy, &0, &c, &mut seeded(9)).unwrap();
        let b = search(&Noisy, &0, &c, &mut seeded(9)).unwrap();
        assert_eq!(a.action, b.action);
        assert_eq!(a.iterations, 600);
    }

    proptest! {
        #[test]
        fn parent_visits_are_child_visits_plus_one(iters in 1usize..400, depth in 1usize..4, seed in 0u64..1000) {
            let (tree, _) = build_tree(&Noisy, &0, &cfg(depth, iters, 3.0), &mut seeded(seed));
            for n in &tree.nodes {
                if n.visits > 0 && !n.children.is_empty() {
                    let sum: u32 = n.children.iter().map(|&(_, id)| tree.nodes[id].visits).sum();
                    prop_assert_eq!(n.visits, sum + 1);
                }
            }
            prop_assert_eq!(tree.nodes[0].visits as usize, iters);
        }
    }
}
