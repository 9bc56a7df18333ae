//! Reduction of bunches: big-step and small-step reducts, normality,
//! normalization with a replayable step log, joins, class reduction, the
//! quasi-metric, and an exhaustive confluence checker.
//!
//! Every function works on ≅-classes: results are canonical representatives,
//! so permutation steps never need to be enumerated.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::syntax::{canonicalize, enumerate_bunches, get, remove_group, Bunch, Former, Path};

/// One reduction step, located in the canonical bunch it applies to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReductionStep {
    /// Remove the `o+` at `at` (its parent is an `Add` node).
    DropUnitPlus { at: Path },
    /// Remove the `ox` at `at` (its parent is a `Mul` node).
    DropUnitTimes { at: Path },
    /// At the `Add` node `at`, the children `removed` are a ≅-copy of the
    /// children `kept`; the copy is removed.
    Contract { at: Path, kept: Vec<usize>, removed: Vec<usize> },
}

fn fmt_path(p: &[usize]) -> String {
    let parts: Vec<String> = p.iter().map(|i| i.to_string()).collect();
    format!("[{}]", parts.join(","))
}

impl fmt::Display for ReductionStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionStep::DropUnitPlus { at } => write!(f, "drop-o+@{}", fmt_path(at)),
            ReductionStep::DropUnitTimes { at } => write!(f, "drop-ox@{}", fmt_path(at)),
            ReductionStep::Contract { at, kept, removed } => {
                let side = |v: &Vec<usize>| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("+");
                write!(f, "contract@{} {{{},{}}}", fmt_path(at), side(kept), side(removed))
            }
        }
    }
}

/// Big-step reduction removes any ≅-copy or unit; small-step reduction only
/// removes normal bunches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Big,
    Small,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("step {0} does not apply to this bunch")]
    NotApplicable(String),
}

/// Apply a step to a bunch (paths refer to `g` as given); the result is
/// canonicalized.
pub fn apply_step(g: &Bunch, step: &ReductionStep) -> Result<Bunch, StepError> {
    let bad = || StepError::NotApplicable(step.to_string());
    let out = match step {
        ReductionStep::DropUnitPlus { at } | ReductionStep::DropUnitTimes { at } => {
            let (idx, parent) = at.split_last().ok_or_else(bad)?;
            let (unit, former) = match step {
                ReductionStep::DropUnitPlus { .. } => (Bunch::UnitPlus, Former::Add),
                _ => (Bunch::UnitTimes, Former::Mul),
            };
            let node = get(g, parent).ok_or_else(bad)?;
            if node.former() != Some(former) || node.children().get(*idx) != Some(&unit) {
                return Err(bad());
            }
            remove_group(g, parent, &[*idx]).map_err(|_| bad())?
        }
        ReductionStep::Contract { at, kept, removed } => {
            let node = get(g, at).ok_or_else(bad)?;
            if node.former() != Some(Former::Add) || kept.len() != removed.len() || kept.is_empty() {
                return Err(bad());
            }
            let cs = node.children();
            let disjoint = kept.iter().all(|k| !removed.contains(k));
            if !disjoint || kept.iter().chain(removed).any(|&i| i >= cs.len()) {
                return Err(bad());
            }
            let side = |idx: &[usize]| {
                let mut v: Vec<Bunch> = idx.iter().map(|&i| canonicalize(&cs[i])).collect();
                v.sort();
                v
            };
            if side(kept) != side(removed) {
                return Err(bad());
            }
            let mut sorted = removed.clone();
            sorted.sort_unstable();
            remove_group(g, at, &sorted).map_err(|_| bad())?
        }
    };
    Ok(canonicalize(&out))
}

/// The multiset of removed children in a step, combined as a bunch.
fn removed_bunch(g: &Bunch, step: &ReductionStep) -> Bunch {
    match step {
        ReductionStep::DropUnitPlus { .. } => Bunch::UnitPlus,
        ReductionStep::DropUnitTimes { .. } => Bunch::UnitTimes,
        ReductionStep::Contract { at, removed, .. } => {
            let node = get(g, at).expect("valid step");
            Bunch::add(removed.iter().map(|&i| node.children()[i].clone()).collect())
        }
    }
}

/// Every candidate step at every node of `g` (paths valid for `g`).
fn candidate_steps(g: &Bunch) -> Vec<ReductionStep> {
    let mut out = Vec::new();
    fn walk(g: &Bunch, path: &mut Path, out: &mut Vec<ReductionStep>) {
        match g {
            Bunch::Add(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if *c == Bunch::UnitPlus {
                        let mut at = path.clone();
                        at.push(i);
                        out.push(ReductionStep::DropUnitPlus { at });
                    }
                }
                // Group children into ≅-classes, then choose how many copies
                // of each class to contract (at most half of each class).
                let mut classes: BTreeMap<Bunch, Vec<usize>> = BTreeMap::new();
                for (i, c) in cs.iter().enumerate() {
                    classes.entry(canonicalize(c)).or_default().push(i);
                }
                let classes: Vec<Vec<usize>> = classes.into_values().filter(|v| v.len() >= 2).collect();
                let limits: Vec<usize> = classes.iter().map(|v| v.len() / 2).collect();
                let mut choice = vec![0usize; classes.len()];
                loop {
                    // Advance the mixed-radix counter.
                    let mut k = 0;
                    while k < choice.len() && choice[k] == limits[k] {
                        choice[k] = 0;
                        k += 1;
                    }
                    if k == choice.len() {
                        break;
                    }
                    choice[k] += 1;
                    let mut kept = Vec::new();
                    let mut removed = Vec::new();
                    for (cls, &m) in classes.iter().zip(&choice) {
                        kept.extend_from_slice(&cls[..m]);
                        removed.extend_from_slice(&cls[m..2 * m]);
                    }
                    kept.sort_unstable();
                    removed.sort_unstable();
                    out.push(ReductionStep::Contract { at: path.clone(), kept, removed });
                }
            }
            Bunch::Mul(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if *c == Bunch::UnitTimes {
                        let mut at = path.clone();
                        at.push(i);
                        out.push(ReductionStep::DropUnitTimes { at });
                    }
                }
            }
            _ => {}
        }
        for (i, c) in g.children().iter().enumerate() {
            path.push(i);
            walk(c, path, out);
            path.pop();
        }
    }
    walk(g, &mut Vec::new(), &mut out);
    out
}

/// All proper one-step reducts of `g` up to ≅, each with one witnessing step
/// (located in `g` as given). Results are canonical and pairwise distinct.
pub fn reducts(g: &Bunch, mode: Mode) -> Vec<(ReductionStep, Bunch)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for step in candidate_steps(g) {
        if mode == Mode::Small && !is_normal(&removed_bunch(g, &step)) {
            continue;
        }
        let r = apply_step(g, &step).expect("enumerated steps apply");
        if seen.insert(r.clone()) {
            out.push((step, r));
        }
    }
    out
}

/// A bunch is normal when no reduction applies: no `Add` node has two
/// ≅-equal children or an `o+` child, and no `Mul` node has an `ox` child.
pub fn is_normal(g: &Bunch) -> bool {
    match g {
        Bunch::Add(cs) => {
            if cs.contains(&Bunch::UnitPlus) {
                return false;
            }
            let mut keys: Vec<Bunch> = cs.iter().map(canonicalize).collect();
            keys.sort();
            keys.windows(2).all(|w| w[0] != w[1]) && cs.iter().all(is_normal)
        }
        Bunch::Mul(cs) => !cs.contains(&Bunch::UnitTimes) && cs.iter().all(is_normal),
        _ => true,
    }
}

/// The leftmost-innermost small step of a canonical bunch, if any. When
/// `units_first` is set, unit removals anywhere take priority.
fn next_small_step(g: &Bunch, units_first: bool) -> Option<ReductionStep> {
    fn walk(g: &Bunch, path: &mut Path, units_only: bool) -> Option<ReductionStep> {
        for (i, c) in g.children().iter().enumerate() {
            path.push(i);
            let found = walk(c, path, units_only);
            path.pop();
            if found.is_some() {
                return found;
            }
        }
        let cs = g.children();
        match g {
            Bunch::Add(_) => {
                if let Some(i) = cs.iter().position(|c| *c == Bunch::UnitPlus) {
                    let mut at = path.clone();
                    at.push(i);
                    return Some(ReductionStep::DropUnitPlus { at });
                }
                if units_only {
                    return None;
                }
                for i in 0..cs.len() {
                    for j in i + 1..cs.len() {
                        if cs[i] == cs[j] && is_normal(&cs[i]) {
                            return Some(ReductionStep::Contract { at: path.clone(), kept: vec![i], removed: vec![j] });
                        }
                    }
                }
                None
            }
            Bunch::Mul(_) => cs.iter().position(|c| *c == Bunch::UnitTimes).map(|i| {
                let mut at = path.clone();
                at.push(i);
                ReductionStep::DropUnitTimes { at }
            }),
            _ => None,
        }
    }
    if units_first {
        if let Some(s) = walk(g, &mut Vec::new(), true) {
            return Some(s);
        }
    }
    walk(g, &mut Vec::new(), false)
}

fn normalize_with(g: &Bunch, units_first: bool) -> (Bunch, Vec<ReductionStep>) {
    let mut cur = canonicalize(g);
    let mut steps = Vec::new();
    while let Some(step) = next_small_step(&cur, units_first) {
        cur = apply_step(&cur, &step).expect("selected step applies");
        steps.push(step);
    }
    (cur, steps)
}

/// Normalize `g` by leftmost-innermost small steps. The result is canonical
/// and normal; each logged step is located in the canonical bunch produced
/// by the previous step (the first in `canonicalize(g)`).
pub fn normalize(g: &Bunch) -> (Bunch, Vec<ReductionStep>) {
    normalize_with(g, false)
}

/// Like [`normalize`], but every unit removal is performed before any
/// contraction.
pub fn normalize_units_first(g: &Bunch) -> (Bunch, Vec<ReductionStep>) {
    normalize_with(g, true)
}

/// Remove every removable unit (and nothing else) by small steps; the
/// result is the canonical unit-free representative of the ≡-class of `g`
/// up to contraction.
pub fn drop_units(g: &Bunch) -> (Bunch, Vec<ReductionStep>) {
    let mut cur = canonicalize(g);
    let mut steps = Vec::new();
    while let Some(step) = walk_units(&cur) {
        cur = apply_step(&cur, &step).expect("selected step applies");
        steps.push(step);
    }
    (cur, steps)
}

fn walk_units(g: &Bunch) -> Option<ReductionStep> {
    next_small_step(g, true).filter(|s| !matches!(s, ReductionStep::Contract { .. }))
}

/// The normal form of `g` (canonical).
pub fn normal_form(g: &Bunch) -> Bunch {
    normalize(g).0
}

/// Replay a step log from `canonicalize(g)`, returning every intermediate
/// bunch (first the start, last the result).
pub fn replay(g: &Bunch, steps: &[ReductionStep]) -> Result<Vec<Bunch>, StepError> {
    let mut cur = canonicalize(g);
    let mut out = vec![cur.clone()];
    for s in steps {
        cur = apply_step(&cur, s)?;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Every bunch reachable from `g` by zero or more steps of the given mode.
pub fn reduct_closure(g: &Bunch, mode: Mode) -> BTreeSet<Bunch> {
    let start = canonicalize(g);
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        for (_, r) in reducts(&cur, mode) {
            if seen.insert(r.clone()) {
                queue.push_back(r);
            }
        }
    }
    seen
}

/// Every bunch reachable from `g` by big-step contractions only (no unit
/// removals), including `g` itself.
pub fn contraction_closure(g: &Bunch) -> BTreeSet<Bunch> {
    let start = canonicalize(g);
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        for (step, r) in reducts(&cur, Mode::Big) {
            if matches!(step, ReductionStep::Contract { .. }) && seen.insert(r.clone()) {
                queue.push_back(r);
            }
        }
    }
    seen
}

/// A common small-step reduct of `g1` and `g2`: the first member of the
/// small-step closure of `g2` met by a breadth-first walk from `g1`. `g` is
/// the common ancestor the caller reduced from; the search does not need it.
pub fn join(_g: &Bunch, g1: &Bunch, g2: &Bunch) -> Option<Bunch> {
    let c2 = reduct_closure(g2, Mode::Small);
    let start = canonicalize(g1);
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        if c2.contains(&cur) {
            return Some(cur);
        }
        for (_, r) in reducts(&cur, Mode::Small) {
            if seen.insert(r.clone()) {
                queue.push_back(r);
            }
        }
    }
    None
}

/// Class reduction: canonical representatives of every ≅-class reachable in
/// one big step.
pub fn class_reduce(g: &Bunch) -> Vec<Bunch> {
    let mut out: Vec<Bunch> = reducts(&canonicalize(g), Mode::Big).into_iter().map(|(_, r)| r).collect();
    out.sort();
    out
}

/// The least number of big steps from `g1` to `g2`, or `None` when `g2` is
/// unreachable (the infinite distance).
pub fn quasi_metric(g1: &Bunch, g2: &Bunch) -> Option<usize> {
    let start = canonicalize(g1);
    let target = canonicalize(g2);
    let mut dist = HashMap::from([(start.clone(), 0usize)]);
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        let d = dist[&cur];
        if cur == target {
            return Some(d);
        }
        for (_, r) in reducts(&cur, Mode::Big) {
            if !dist.contains_key(&r) {
                dist.insert(r.clone(), d + 1);
                queue.push_back(r);
            }
        }
    }
    None
}

/// Every normal bunch reachable from `g` by small steps.
pub fn normal_forms(g: &Bunch) -> BTreeSet<Bunch> {
    reduct_closure(g, Mode::Small).into_iter().filter(is_normal).collect()
}

/// A finite universe of bunches: every canonical bunch with at most
/// `max_leaves` leaves drawn from `alphabet`.
#[derive(Clone, Debug)]
pub struct Universe {
    pub alphabet: Vec<Bunch>,
    pub max_leaves: usize,
}

impl Universe {
    pub fn bunches(&self) -> Vec<Bunch> {
        enumerate_bunches(&self.alphabet, self.max_leaves)
    }
}

/// A failure of local confluence or of normal-form uniqueness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub bunch: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConfluenceReport {
    /// Bunches examined.
    pub bunches: usize,
    /// Pairs of one-step reducts examined.
    pub pairs: usize,
    /// Counterexamples, in the universe's canonical order.
    pub counterexamples: Vec<Counterexample>,
}

fn check_one(g: &Bunch) -> (usize, Vec<Counterexample>) {
    let mut problems = Vec::new();
    let reds: Vec<Bunch> = reducts(g, Mode::Big).into_iter().map(|(_, r)| r).collect();
    let closures: Vec<BTreeSet<Bunch>> = reds.iter().map(|r| reduct_closure(r, Mode::Big)).collect();
    let mut pairs = 0;
    for i in 0..reds.len() {
        for j in i + 1..reds.len() {
            pairs += 1;
            if closures[i].is_disjoint(&closures[j]) {
                problems.push(Counterexample {
                    bunch: g.to_string(),
                    detail: format!("reducts {} and {} have no common reduct", reds[i], reds[j]),
                });
            }
        }
    }
    let nfs = normal_forms(g);
    if nfs.len() != 1 {
        let shown: Vec<String> = nfs.iter().map(|b| b.to_string()).collect();
        problems.push(Counterexample {
            bunch: g.to_string(),
            detail: format!("{} distinct normal forms: {}", nfs.len(), shown.join(" | ")),
        });
    }
    (pairs, problems)
}

/// Check, for every bunch of the universe, that every pair of one-step
/// reducts has a common reduct and that all maximal small-step reduction
/// sequences end in one ≅-class. Work is spread over the rayon pool; the
/// report does not depend on scheduling.
pub fn check_local_confluence(universe: &Universe) -> ConfluenceReport {
    check_bunches(&universe.bunches())
}

/// [`check_local_confluence`] over an explicit list of bunches.
pub fn check_bunches(bunches: &[Bunch]) -> ConfluenceReport {
    let results: Vec<(usize, Vec<Counterexample>)> = bunches.par_iter().map(check_one).collect();
    let mut report = ConfluenceReport { bunches: bunches.len(), ..Default::default() };
    for (pairs, problems) in results {
        report.pairs += pairs;
        report.counterexamples.extend(problems);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::bunch;

    fn mixed_bunch() -> Bunch {
        bunch("(p , (q ; o+)) ; (r ; (ox ; r))")
    }

    #[test]
    fn unit_plus_drop() {
        let rs = reducts(&bunch("q ; o+"), Mode::Big);
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].1, bunch("q"));
        assert!(matches!(rs[0].0, ReductionStep::DropUnitPlus { .. }));
    }

    #[test]
    fn mixed_bunch_small_reducts() {
        let rs: Vec<Bunch> = reducts(&mixed_bunch(), Mode::Small).into_iter().map(|(_, r)| r).collect();
        assert!(rs.contains(&canonicalize(&bunch("(p , (q ; o+)) ; (r ; ox)"))));
        assert!(rs.contains(&canonicalize(&bunch("(p , q) ; (r ; (ox ; r))"))));
    }

    #[test]
    fn no_reducts_for_mul() {
        assert!(reducts(&bunch("p , q"), Mode::Big).is_empty());
    }

    #[test]
    fn normality() {
        assert!(is_normal(&bunch("p")));
        assert!(!is_normal(&bunch("p ; p")));
        assert!(is_normal(&bunch("r ; ox")));
        assert!(is_normal(&bunch("p , o+")));
        assert!(!is_normal(&bunch("p , ox")));
    }

    #[test]
    fn normalize_mixed_bunch() {
        let (nf, steps) = normalize(&mixed_bunch());
        assert_eq!(nf, canonicalize(&bunch("(p , q) ; (r ; ox)")));
        assert_eq!(steps.len(), 2);
        assert_eq!(replay(&mixed_bunch(), &steps).unwrap().last(), Some(&nf));
    }

    #[test]
    fn normalize_trivial_and_double() {
        assert_eq!(normalize(&bunch("p")), (bunch("p"), vec![]));
        let (nf, steps) = normalize(&bunch("p ; p ; o+"));
        assert_eq!(nf, bunch("p"));
        assert_eq!(steps.len(), 2);
    }

    #[test]
    fn units_first_drops_before_contracting() {
        let (nf, steps) = normalize_units_first(&bunch("(p ; p) , ox"));
        assert_eq!(nf, bunch("p"));
        assert!(matches!(steps[0], ReductionStep::DropUnitTimes { .. }));
    }

    #[test]
    fn step_log_format() {
        let (_, steps) = normalize(&bunch("p ; p ; o+"));
        let lines: Vec<String> = steps.iter().map(|s| s.to_string()).collect();
        assert_eq!(lines, vec!["drop-o+@[0]".to_string(), "contract@[] {0,1}".to_string()]);
    }

    #[test]
    fn big_contraction_of_groups() {
        let g = bunch("(p , q) ; (p , q) ; r ; r");
        let rs: Vec<Bunch> = reducts(&g, Mode::Big).into_iter().map(|(_, r)| r).collect();
        assert!(rs.contains(&canonicalize(&bunch("(p , q) ; r"))));
        assert_eq!(rs.len(), 3);
    }

    #[test]
    fn small_mode_requires_normal_copy() {
        let g = bunch("((p ; p) , q) ; ((p ; p) , q)");
        assert!(reducts(&g, Mode::Small)
            .iter()
            .all(|(s, _)| !matches!(s, ReductionStep::Contract { at, .. } if at.is_empty())));
        assert!(reducts(&g, Mode::Big)
            .iter()
            .any(|(s, _)| matches!(s, ReductionStep::Contract { at, .. } if at.is_empty())));
    }

    #[test]
    fn joins() {
        let g = bunch("p ; p ; p");
        assert_eq!(join(&g, &bunch("p ; p"), &bunch("p ; p")), Some(bunch("p ; p")));
        let a = canonicalize(&bunch("(p , (q ; o+)) ; (r ; ox)"));
        let b = canonicalize(&bunch("(p , q) ; (r ; (ox ; r))"));
        assert_eq!(join(&mixed_bunch(), &a, &b), Some(canonicalize(&bunch("(p , q) ; (r ; ox)"))));
    }

    #[test]
    fn quasi_metric_examples() {
        let g = mixed_bunch();
        assert_eq!(quasi_metric(&g, &g), Some(0));
        assert_eq!(quasi_metric(&g, &normal_form(&g)), Some(2));
        assert_eq!(quasi_metric(&bunch("p"), &bunch("p ; p")), None);
        assert!(class_reduce(&bunch("p")).is_empty());
    }

    #[test]
    fn small_confluence_universe() {
        let u = Universe { alphabet: vec![bunch("p"), Bunch::UnitPlus, Bunch::UnitTimes], max_leaves: 3 };
        let report = check_local_confluence(&u);
        assert!(report.counterexamples.is_empty(), "{:?}", report.counterexamples);
        assert!(report.bunches > 10);
    }
}
