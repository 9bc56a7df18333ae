//! The bounded sequent space and the decision procedure.
//!
//! A goal is first normalized. Search then runs over normal canonical
//! sequents of the bounded space: from a node `N`, a macro step picks a
//! conclusion `Ĉ` obtained from `N` by duplicating normal sub-bunches (read
//! downwards, a normalizing run of `C'`), an action of dLBI at `Ĉ` whose
//! premises `P̂ᵢ` stay in the space, and the normal forms `P̄ᵢ` of those
//! premises as the new nodes (read downwards, loading runs of `W'`, `W0+`
//! and `W0x`). Provability is the least fixpoint of this AND-OR graph,
//! computed breadth first; nodes are expanded in parallel batches merged in
//! a fixed order, so verdicts and proofs do not depend on scheduling.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::calculus::{
    backward, is_duplicit_at, is_regimented_action_cached, Candidate, Derivation, RegimentCache, Rule, RuleInstance,
    System,
};
use crate::measures::{bunch_measures, sequent_measures, Measures, SearchBounds};
use crate::rewriting::{is_normal, normal_form, normalize, replay, ReductionStep};
use crate::syntax::{canonicalize, get, locations, node_paths, replace, sub_at, Bunch, Former, Formula, Loc, Sequent};

// ---------------------------------------------------------------------------
// The bounded space
// ---------------------------------------------------------------------------

/// Every subformula of every formula of the sequent.
pub fn subformula_closure(s: &Sequent) -> BTreeSet<Formula> {
    s.formulas().into_iter().flat_map(|f| f.subformulas().into_iter().cloned()).collect()
}

fn multisets_up_to(items: &[Bunch], n: usize, former: Former) -> BTreeSet<Bunch> {
    let mut out = BTreeSet::new();
    fn rec(items: &[Bunch], start: usize, n: usize, cur: &mut Vec<Bunch>, former: Former, out: &mut BTreeSet<Bunch>) {
        if !cur.is_empty() {
            out.insert(canonicalize(&Bunch::combine(former, cur.clone())));
        }
        if cur.len() == n {
            return;
        }
        for i in start..items.len() {
            cur.push(items[i].clone());
            rec(items, i, n, cur, former, out);
            cur.pop();
        }
    }
    let items: Vec<Bunch> = items.iter().map(canonicalize).collect::<BTreeSet<_>>().into_iter().collect();
    rec(&items, 0, n, &mut Vec::new(), former, &mut out);
    out
}

/// Additive combinations of between 1 and `n` elements of `b` (a multiset
/// of size one is the element itself).
pub fn oplus(n: usize, b: &[Bunch]) -> BTreeSet<Bunch> {
    multisets_up_to(b, n, Former::Add)
}

/// Multiplicative combinations of between 1 and `n` elements of `b`.
pub fn otimes(n: usize, b: &[Bunch]) -> BTreeSet<Bunch> {
    multisets_up_to(b, n, Former::Mul)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("the space has more than {0} bunches")]
    TooLarge(usize),
}

/// The bounded sequent space of a goal: contexts built from the goal's
/// subformulas and the two units, goals drawn from the subformulas, with
/// every measure within the bounds.
#[derive(Clone, Debug)]
pub struct SequentSpace {
    pub vocabulary: BTreeSet<Formula>,
    pub bounds: SearchBounds,
}

impl SequentSpace {
    pub fn new(s: &Sequent, bounds: SearchBounds) -> SequentSpace {
        SequentSpace { vocabulary: subformula_closure(s), bounds }
    }

    /// Is this bunch a possible context (vocabulary and bunch measures)?
    pub fn admits_bunch(&self, g: &Bunch) -> bool {
        let m = bunch_measures(g);
        m.mu <= self.bounds.a
            && m.omega <= self.bounds.m
            && m.delta <= self.bounds.d
            && g.formulas().into_iter().all(|f| self.vocabulary.contains(f))
    }

    /// Membership of a sequent.
    pub fn contains(&self, s: &Sequent) -> bool {
        self.vocabulary.contains(&s.goal)
            && s.context.formulas().into_iter().all(|f| self.vocabulary.contains(f))
            && self.bounds.admits(s)
    }

    fn basics(&self) -> Vec<Bunch> {
        let mut out = vec![Bunch::UnitPlus, Bunch::UnitTimes];
        out.extend(self.vocabulary.iter().cloned().map(Bunch::Leaf));
        out.retain(|b| self.admits_bunch(b));
        out
    }

    /// Every context of the space (canonical), by iterating additive and
    /// multiplicative combination from the basic bunches until nothing new
    /// appears. Fails when more than `limit` bunches would be produced.
    pub fn bunches(&self, limit: usize) -> Result<Vec<Bunch>, SpaceError> {
        let mut pool: BTreeSet<Bunch> = self.basics().into_iter().collect();
        loop {
            let mut fresh: BTreeSet<Bunch> = BTreeSet::new();
            let non_mul: Vec<Bunch> = pool.iter().filter(|b| b.former() != Some(Former::Mul)).cloned().collect();
            let non_add: Vec<Bunch> = pool.iter().filter(|b| b.former() != Some(Former::Add)).cloned().collect();
            self.combinations(&non_mul, Former::Mul, &pool, &mut fresh, limit)?;
            self.combinations(&non_add, Former::Add, &pool, &mut fresh, limit)?;
            if fresh.is_empty() {
                break;
            }
            pool.extend(fresh);
            if pool.len() > limit {
                return Err(SpaceError::TooLarge(limit));
            }
        }
        Ok(pool.into_iter().collect())
    }

    /// All combinations of at least two elements (with repetition) under
    /// `former` that the bounds admit and that are not yet in `pool`.
    fn combinations(
        &self,
        items: &[Bunch],
        former: Former,
        pool: &BTreeSet<Bunch>,
        fresh: &mut BTreeSet<Bunch>,
        limit: usize,
    ) -> Result<(), SpaceError> {
        // A `,` node of k children has width at least k - 1; a `;` node
        // holding c copies of one child has multiplicity at least c - 1.
        let max_children = match former {
            Former::Mul => self.bounds.m + 1,
            Former::Add => usize::MAX,
        };
        let max_copies = match former {
            Former::Mul => self.bounds.m + 1,
            Former::Add => self.bounds.a + 1,
        };
        let measures: Vec<Measures> = items.iter().map(bunch_measures).collect();
        struct Walk<'a> {
            space: &'a SequentSpace,
            items: &'a [Bunch],
            measures: &'a [Measures],
            former: Former,
            max_children: usize,
            max_copies: usize,
            pool: &'a BTreeSet<Bunch>,
            fresh: &'a mut BTreeSet<Bunch>,
            limit: usize,
        }
        fn rec(
            w: &mut Walk<'_>,
            start: usize,
            cur: &mut Vec<Bunch>,
            width: usize,
            mu: usize,
        ) -> Result<(), SpaceError> {
            if cur.len() >= 2 {
                let b = Bunch::combine(w.former, cur.clone());
                if !w.pool.contains(&b) && w.space.admits_bunch(&b) {
                    w.fresh.insert(b);
                    if w.fresh.len() + w.pool.len() > w.limit {
                        return Err(SpaceError::TooLarge(w.limit));
                    }
                }
            }
            if cur.len() == w.max_children {
                return Ok(());
            }
            for i in start..w.items.len() {
                let copies = cur.iter().rev().take_while(|c| **c == w.items[i]).count();
                if copies + 1 > w.max_copies {
                    continue;
                }
                let m = w.measures[i];
                let (width2, mu2) = match w.former {
                    Former::Mul => (width + m.omega + usize::from(!cur.is_empty()), mu + m.mu),
                    Former::Add => (width.max(m.omega), mu + m.mu),
                };
                let own = if w.former == Former::Add { copies } else { 0 };
                if width2 > w.space.bounds.m || mu2 + own > w.space.bounds.a {
                    continue;
                }
                cur.push(w.items[i].clone());
                rec(w, i, cur, width2, mu2)?;
                cur.pop();
            }
            Ok(())
        }
        let mut w =
            Walk { space: self, items, measures: &measures, former, max_children, max_copies, pool, fresh, limit };
        rec(&mut w, 0, &mut Vec::new(), 0, 0)
    }

    /// Every sequent of the space: contexts paired with vocabulary goals.
    pub fn sequents(&self, limit: usize) -> Result<Vec<Sequent>, SpaceError> {
        let mut out = Vec::new();
        for g in self.bunches(limit)? {
            for f in &self.vocabulary {
                let s = Sequent::new(g.clone(), f.clone());
                if self.bounds.admits(&s) {
                    out.push(s);
                    if out.len() > limit {
                        return Err(SpaceError::TooLarge(limit));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// The space generated by a goal under given bounds.
pub fn generate_space(s: &Sequent, bounds: SearchBounds) -> SequentSpace {
    SequentSpace::new(s, bounds)
}

/// The default bounds for a normal goal: multiplicity 3, width ω(S̄), and
/// depth 2δ(S̄) (at least 1).
pub fn default_bounds(normal_goal: &Sequent) -> SearchBounds {
    let m = sequent_measures(normal_goal);
    SearchBounds { a: 3, m: m.omega, d: (2 * m.delta).max(1) }
}

/// The normal form of a sequent: its context normalized, canonical.
pub fn normal_sequent(s: &Sequent) -> Sequent {
    Sequent::new(normal_form(&s.context), s.goal.clone())
}

// ---------------------------------------------------------------------------
// The decision procedure
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Explicit bounds; when absent the defaults are used, and widened once
    /// (width doubled) if the default space holds no proof.
    pub bounds: Option<SearchBounds>,
    /// Abort once this many distinct nodes have been discovered.
    pub max_nodes: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { bounds: None, max_nodes: 200_000, threads: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchStats {
    pub bounds: SearchBounds,
    /// Whether the default width bound had to be widened.
    pub widened: bool,
    /// Distinct normal sequents discovered.
    pub nodes: usize,
    /// Nodes whose macro steps were computed.
    pub expanded: usize,
    /// Macro steps recorded.
    pub edges: usize,
    /// Largest measures over every discovered node.
    pub observed: Measures,
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Provable(Derivation),
    Unprovable,
}

impl Verdict {
    pub fn is_provable(&self) -> bool {
        matches!(self, Verdict::Provable(_))
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    /// The normalized goal that was searched.
    pub goal: Sequent,
    pub verdict: Verdict,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search aborted after discovering {nodes} nodes ({frontier} awaiting expansion)")]
    ResourceLimit { nodes: usize, frontier: usize },
    #[error("could not build a thread pool: {0}")]
    Threads(String),
}

/// The rules that may act in a macro step.
fn action_rules() -> Vec<Rule> {
    System::Dlbi
        .rules()
        .into_iter()
        .filter(|r| !matches!(r, Rule::CPrime | Rule::EPrime | Rule::WUnitPlus | Rule::WUnitTimes))
        .collect()
}

/// A macro step out of a node, before its premises are interned.
#[derive(Clone, Debug)]
struct Step {
    /// Conclusions of the normalizing run, from the node up to `Ĉ`.
    chain: Vec<Sequent>,
    instance: RuleInstance,
    /// The action's premises `P̂ᵢ`.
    hats: Vec<Sequent>,
    /// Their normal forms `P̄ᵢ`.
    bars: Vec<Sequent>,
}

/// Which duplications before an action of a rule can change its premises
/// beyond what normalization undoes. A duplicated copy that the action
/// leaves untouched, next to an untouched twin, is inactive; regimented
/// proofs never have one, so only these duplications are explored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Reach {
    /// The action needs no duplication.
    Nothing,
    /// Duplicate sub-bunches enclosing the principal formula; with
    /// `siblings`, also its additive siblings (one copy may feed each
    /// premise of `→L`).
    Principal { siblings: bool },
    /// Duplicate the root and its top-level pieces (shared by `∧R`).
    Root,
}

fn reach(rule: Rule) -> Reach {
    match rule {
        Rule::ImpL | Rule::ImpL1 => Reach::Principal { siblings: true },
        // The remaining left rules are invertible: a kept copy of their
        // principal formula next to its decomposition adds nothing.
        Rule::ImpL2 | Rule::ImpL3 | Rule::WandL | Rule::WandL1 | Rule::WandL2 | Rule::WandL3 => {
            Reach::Principal { siblings: false }
        }
        Rule::AndR => Reach::Root,
        _ => Reach::Nothing,
    }
}

/// Is `f` a possible principal formula of the left rule `rule`?
fn principal_fits(rule: Rule, f: &Formula) -> bool {
    match rule {
        Rule::OneL => *f == Formula::One,
        Rule::TopL => *f == Formula::Top,
        Rule::AndL => matches!(f, Formula::And(..)),
        Rule::StarL => matches!(f, Formula::Star(..)),
        Rule::OrL => matches!(f, Formula::Or(..)),
        Rule::ImpL | Rule::ImpL1 | Rule::ImpL2 | Rule::ImpL3 => matches!(f, Formula::Imp(..)),
        Rule::WandL | Rule::WandL1 | Rule::WandL2 | Rule::WandL3 => matches!(f, Formula::Wand(..)),
        _ => false,
    }
}

/// An atom no parsed formula can contain, used to track the principal
/// occurrence through duplications and re-sorting.
fn marker() -> Formula {
    Formula::atom("\u{0}principal")
}

fn substitute(g: &Bunch, from: &Formula, to: &Formula) -> Bunch {
    match g {
        Bunch::Leaf(f) if f == from => Bunch::Leaf(to.clone()),
        Bunch::Add(cs) => Bunch::Add(cs.iter().map(|c| substitute(c, from, to)).collect()),
        Bunch::Mul(cs) => Bunch::Mul(cs.iter().map(|c| substitute(c, from, to)).collect()),
        other => other.clone(),
    }
}

fn holds_marker(g: &Bunch, mark: &Formula) -> bool {
    g.formulas().into_iter().any(|f| f == mark)
}

/// Every sequent obtainable from `n` by repeatedly duplicating a relevant
/// normal sub-bunch within the space, with the run that reaches it. With a
/// `principal` leaf, relevance is judged against that occurrence.
fn duplication_closure(
    n: &Sequent,
    space: &SequentSpace,
    principal: Option<&[usize]>,
    reach: Reach,
) -> Vec<Vec<Sequent>> {
    let mark = marker();
    let original = principal.and_then(|p| get(&n.context, p)).and_then(Bunch::as_formula).cloned();
    let unmark = |g: &Bunch| match &original {
        Some(f) => canonicalize(&substitute(g, &mark, f)),
        None => g.clone(),
    };
    let unmark_keep_order = |g: &Bunch| match &original {
        Some(f) => substitute(g, &mark, f),
        None => g.clone(),
    };
    let start = match principal {
        Some(p) => {
            canonicalize(&replace(&n.context, &Loc::Node(p.to_vec()), Bunch::Leaf(mark.clone())).expect("valid"))
        }
        None => n.context.clone(),
    };
    // Duplicating an additive node, or a group of additive siblings, is the
    // same as duplicating each member on its own; only single members are
    // considered there.
    let relevant = |g: &Bunch, loc: &Loc, x: &Bunch| -> bool {
        let under_add = match loc {
            Loc::Node(p) => p.split_last().is_some_and(|(_, q)| get(g, q).and_then(Bunch::former) == Some(Former::Add)),
            Loc::Group(q, _) => get(g, q).and_then(Bunch::former) == Some(Former::Add),
        };
        if x.former() == Some(Former::Add) || (under_add && matches!(loc, Loc::Group(..))) {
            return false;
        }
        match reach {
            Reach::Nothing => false,
            Reach::Root => match loc {
                Loc::Node(p) => p.is_empty() || (p.len() == 1 && under_add),
                Loc::Group(..) => false,
            },
            Reach::Principal { siblings } => {
                holds_marker(x, &mark)
                    || (siblings
                        && under_add
                        && matches!(loc, Loc::Node(p) if p.split_last().and_then(|(_, q)| get(g, q))
                            .is_some_and(|node| node.children().contains(&Bunch::Leaf(mark.clone())))))
            }
        }
    };
    let mut runs: Vec<Vec<Sequent>> = vec![vec![n.clone()]];
    let mut marked: Vec<Bunch> = vec![start.clone()];
    let mut index: HashMap<Bunch, usize> = HashMap::from([(start, 0)]);
    let mut i = 0;
    while i < runs.len() {
        let cur = marked[i].clone();
        for loc in locations(&cur) {
            let x = sub_at(&cur, &loc).expect("valid");
            // One extra copy is all an action can use; a third would be
            // left behind as an inactive twin.
            if !relevant(&cur, &loc, &x) || !is_normal(&unmark(&x)) || is_duplicit_at(&unmark_keep_order(&cur), &loc) {
                continue;
            }
            // Only one copy keeps tracking the principal occurrence.
            let twin = unmark_keep_order(&x);
            let dup = canonicalize(&replace(&cur, &loc, Bunch::add(vec![x, twin])).expect("valid"));
            if index.contains_key(&dup) {
                continue;
            }
            let s = Sequent::new(unmark(&dup), n.goal.clone());
            if !space.contains(&s) {
                continue;
            }
            let mut run = runs[i].clone();
            run.push(s);
            index.insert(dup.clone(), runs.len());
            runs.push(run);
            marked.push(dup);
        }
        i += 1;
    }
    runs
}

/// The intermediate sequents of the normalization of a premise.
fn loading_chain(p: &Sequent) -> (Vec<Sequent>, Vec<ReductionStep>) {
    let (_, steps) = normalize(&p.context);
    let states = replay(&p.context, &steps).expect("own steps replay");
    (states.into_iter().map(|g| Sequent::new(g, p.goal.clone())).collect(), steps)
}

fn macro_steps(n: &Sequent, space: &SequentSpace, rules: &[Rule]) -> Vec<Step> {
    let mut out = Vec::new();
    let mut seen: BTreeSet<Vec<Sequent>> = BTreeSet::new();
    let mut reg_cache = RegimentCache::default();
    let mut closures: HashMap<(Option<Vec<usize>>, Reach), Vec<Vec<Sequent>>> = HashMap::new();
    let leaves: Vec<(Vec<usize>, Formula)> = node_paths(&n.context)
        .into_iter()
        .filter_map(|p| get(&n.context, &p).and_then(Bunch::as_formula).map(|f| (p.clone(), f.clone())))
        .collect();
    for &rule in rules {
        let r = reach(rule);
        let seeds: Vec<(Option<Vec<usize>>, Option<&Formula>)> = match r {
            Reach::Principal { .. } => leaves
                .iter()
                .filter(|(_, f)| principal_fits(rule, f))
                .map(|(p, f)| (Some(p.clone()), Some(f)))
                .collect(),
            Reach::Root if !matches!(n.goal, Formula::And(..)) => continue,
            _ => vec![(None, None)],
        };
        for (seed, principal) in seeds {
            let runs = closures
                .entry((seed.clone(), r))
                .or_insert_with(|| duplication_closure(n, space, seed.as_deref(), r))
                .clone();
            for run in runs {
                let hat_c = run.last().expect("nonempty").clone();
                for Candidate { instance, premises, sigma_loc, .. } in backward(rule, &hat_c) {
                    if let Some(f) = principal {
                        let at = instance.active.first().and_then(|p| get(&hat_c.context, p));
                        if at != Some(&Bunch::Leaf(f.clone())) {
                            continue;
                        }
                    }
                    if let Some(loc) = &sigma_loc {
                        if is_duplicit_at(&hat_c.context, loc) {
                            continue;
                        }
                    }
                    if !premises.iter().all(|p| space.contains(p)) {
                        continue;
                    }
                    let mut bars = Vec::with_capacity(premises.len());
                    let mut ok = true;
                    for p in &premises {
                        let (states, _) = loading_chain(p);
                        if !states.iter().all(|s| space.contains(s)) {
                            ok = false;
                            break;
                        }
                        bars.push(states.last().expect("nonempty").clone());
                    }
                    if !ok || bars.iter().any(|b| b == n) {
                        continue;
                    }
                    let mut key = bars.clone();
                    key.sort();
                    if seen.contains(&key) {
                        continue;
                    }
                    if premises.iter().any(|p| !is_normal(&p.context))
                        && !is_regimented_action_cached(&instance, &premises, &hat_c, &mut reg_cache)
                    {
                        continue;
                    }
                    seen.insert(key);
                    out.push(Step { chain: run.clone(), instance, hats: premises, bars });
                }
            }
        }
    }
    out
}

struct Edge {
    owner: usize,
    step: Step,
    premises: Vec<usize>,
    remaining: usize,
}

struct Graph {
    nodes: Vec<Sequent>,
    ids: HashMap<Sequent, usize>,
    proved_by: Vec<Option<usize>>,
    watchers: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl Graph {
    fn intern(&mut self, s: &Sequent, next: &mut Vec<usize>) -> usize {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(s.clone());
        self.ids.insert(s.clone(), id);
        self.proved_by.push(None);
        self.watchers.push(Vec::new());
        next.push(id);
        id
    }

    fn settle(&mut self, edge: usize) {
        let mut queue = VecDeque::new();
        let owner = self.edges[edge].owner;
        if self.proved_by[owner].is_none() {
            self.proved_by[owner] = Some(edge);
            queue.push_back(owner);
        }
        while let Some(node) = queue.pop_front() {
            for e in std::mem::take(&mut self.watchers[node]) {
                let edge = &mut self.edges[e];
                edge.remaining -= 1;
                if edge.remaining == 0 && self.proved_by[edge.owner].is_none() {
                    self.proved_by[edge.owner] = Some(e);
                    queue.push_back(edge.owner);
                }
            }
        }
    }

    fn extract(&self, node: usize) -> Derivation {
        let edge = &self.edges[self.proved_by[node].expect("proved node")];
        let step = &edge.step;
        let children: Vec<Derivation> = step
            .hats
            .iter()
            .zip(&edge.premises)
            .map(|(hat, &pid)| loading_derivation(hat, self.extract(pid)))
            .collect();
        let hat_c = step.chain.last().expect("nonempty").clone();
        let mut d = Derivation::node(hat_c, step.instance.clone(), children);
        for s in step.chain.iter().rev().skip(1) {
            d = Derivation::node(s.clone(), RuleInstance::new(Rule::CPrime), vec![d]);
        }
        d
    }
}

/// Extend a proof of the normal form of `hat` to a proof of `hat` by
/// replaying its normalization backwards as weakenings.
pub fn loading_derivation(hat: &Sequent, top: Derivation) -> Derivation {
    let (states, steps) = loading_chain(hat);
    let mut d = top;
    for (state, step) in states.iter().zip(&steps).rev() {
        let inst = match step {
            ReductionStep::DropUnitPlus { .. } => RuleInstance::new(Rule::WUnitPlus),
            ReductionStep::DropUnitTimes { .. } => RuleInstance::new(Rule::WUnitTimes),
            ReductionStep::Contract { at, removed, .. } => {
                let node = get(&state.context, at).expect("valid step");
                let sigma = Bunch::add(removed.iter().map(|&i| node.children()[i].clone()).collect());
                RuleInstance::with_sigma(Rule::WPrime, sigma)
            }
        };
        d = Derivation::node(state.clone(), inst, vec![d]);
    }
    d
}

/// Remove repeated sequents from branches: when a node's sequent occurs
/// again above it, the node's subtree is replaced by the higher one,
/// provided the phase discipline is kept.
pub fn make_concise(d: Derivation) -> Derivation {
    fn find<'a>(d: &'a Derivation, target: &Sequent) -> Option<&'a Derivation> {
        for c in &d.children {
            if c.sequent.canonical() == *target {
                return Some(c);
            }
            if let Some(found) = find(c, target) {
                return Some(found);
            }
        }
        None
    }
    fn walk(mut d: Derivation, after_action: bool) -> Derivation {
        loop {
            let key = d.sequent.canonical();
            match find(&d, &key) {
                Some(higher) if crate::calculus::regimentation_failure_in(higher, after_action).is_none() => {
                    d = higher.clone();
                }
                _ => break,
            }
        }
        let phase = crate::calculus::phase_of(&d);
        let next = match phase {
            crate::calculus::Phase::Action => true,
            crate::calculus::Phase::Normalizing => false,
            _ => after_action,
        };
        let children = std::mem::take(&mut d.children);
        d.children = children.into_iter().map(|c| walk(c, next)).collect();
        d
    }
    walk(d, false)
}

/// Nodes expanded together between checks of the root and the node cap.
const BATCH: usize = 64;

fn search_once(
    goal: &Sequent,
    bounds: SearchBounds,
    max_nodes: usize,
) -> Result<(Option<Derivation>, SearchStats), SearchError> {
    let space = SequentSpace::new(goal, bounds);
    let rules = action_rules();
    let mut g = Graph {
        nodes: Vec::new(),
        ids: HashMap::new(),
        proved_by: Vec::new(),
        watchers: Vec::new(),
        edges: Vec::new(),
    };
    let mut queue = Vec::new();
    g.intern(goal, &mut queue);
    let mut queue: VecDeque<usize> = queue.into();
    let mut expanded = 0;
    // Nodes are expanded breadth-first in fixed-size batches (in parallel
    // within a batch, integrated in order), so the result does not depend on
    // the number of workers and the node cap is enforced promptly.
    while !queue.is_empty() && g.proved_by[0].is_none() {
        if g.nodes.len() > max_nodes {
            return Err(SearchError::ResourceLimit { nodes: g.nodes.len(), frontier: queue.len() });
        }
        let batch: Vec<usize> = queue.drain(..queue.len().min(BATCH)).collect();
        let sequents: Vec<Sequent> = batch.iter().map(|&i| g.nodes[i].clone()).collect();
        let steps: Vec<Vec<Step>> = sequents.par_iter().map(|s| macro_steps(s, &space, &rules)).collect();
        expanded += batch.len();
        let mut next = Vec::new();
        for (&owner, node_steps) in batch.iter().zip(steps) {
            for step in node_steps {
                let premises: Vec<usize> = step.bars.iter().map(|b| g.intern(b, &mut next)).collect();
                let distinct: BTreeSet<usize> = premises.iter().copied().collect();
                let open: Vec<usize> = distinct.iter().copied().filter(|&p| g.proved_by[p].is_none()).collect();
                let e = g.edges.len();
                g.edges.push(Edge { owner, step, premises, remaining: open.len() });
                if open.is_empty() {
                    g.settle(e);
                } else {
                    for p in open {
                        g.watchers[p].push(e);
                    }
                }
            }
        }
        queue.extend(next);
    }
    let observed = g.nodes.iter().map(sequent_measures).fold(Measures::default(), Measures::max);
    let stats = SearchStats { bounds, widened: false, nodes: g.nodes.len(), expanded, edges: g.edges.len(), observed };
    let proof = g.proved_by[0].map(|_| make_concise(g.extract(0)));
    Ok((proof, stats))
}

fn decide_inner(s: &Sequent, opts: &SearchOptions) -> Result<Outcome, SearchError> {
    let goal = normal_sequent(s);
    let explicit = opts.bounds.is_some();
    let bounds = opts.bounds.unwrap_or_else(|| default_bounds(&goal));
    let (mut proof, mut stats) = search_once(&goal, bounds, opts.max_nodes)?;
    if proof.is_none() && !explicit {
        let wide = SearchBounds { m: 2 * bounds.m, ..bounds };
        if wide != bounds {
            let (p, mut st) = search_once(&goal, wide, opts.max_nodes)?;
            st.widened = true;
            proof = p;
            stats = st;
        }
    }
    let verdict = match proof {
        Some(d) => Verdict::Provable(d),
        None => Verdict::Unprovable,
    };
    Ok(Outcome { goal, verdict, stats })
}

/// Decide provability of `s` in BI. A proof, when found, is a concise
/// regimented dLBI proof of the normal form of `s`.
pub fn decide(s: &Sequent, opts: &SearchOptions) -> Result<Outcome, SearchError> {
    match opts.threads {
        None => decide_inner(s, opts),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SearchError::Threads(e.to_string()))?;
            pool.install(|| decide_inner(s, opts))
        }
    }
}

/// Histogram of rules used in a proof, for reporting.
pub fn rule_histogram(d: &Derivation) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for (_, n) in d.nodes() {
        if let Some(r) = n.rule_id() {
            *out.entry(r.name().to_string()).or_default() += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{check_derivation, is_regimented};
    use crate::syntax::{bunch, enumerate_bunches, formula, seq};

    fn provable(text: &str) -> bool {
        let out = decide(&seq(text), &SearchOptions::default()).unwrap();
        if let Verdict::Provable(d) = &out.verdict {
            assert_eq!(check_derivation(System::Dlbi, d, &[]), Ok(()), "{text}");
            assert!(is_regimented(d), "{text}");
            assert!(d.is_concise(), "{text}");
            assert_eq!(d.sequent, out.goal);
        }
        out.verdict.is_provable()
    }

    #[test]
    fn closure_examples() {
        assert_eq!(subformula_closure(&seq("p |- p")), BTreeSet::from([formula("p")]));
        let c = subformula_closure(&seq("p * q |- q * p"));
        assert_eq!(c.len(), 4);
        let c = subformula_closure(&seq("(p -* top) -> q |- top"));
        assert_eq!(c.len(), 5);
    }

    #[test]
    fn combination_examples() {
        assert_eq!(oplus(1, &[bunch("p")]), BTreeSet::from([bunch("p")]));
        assert_eq!(oplus(2, &[bunch("p"), bunch("q")]).len(), 5);
        let t = otimes(2, &[bunch("p"), Bunch::UnitTimes]);
        assert_eq!(t.len(), 5);
        assert!(t.contains(&canonicalize(&bunch("p , ox"))));
    }

    #[test]
    fn zero_bounds_space_agrees_with_brute_force() {
        let space = generate_space(&seq("p |- p"), SearchBounds::new(0, 0, 0));
        let got: BTreeSet<Bunch> = space.bunches(10_000).unwrap().into_iter().collect();
        let brute: BTreeSet<Bunch> = enumerate_bunches(&[bunch("p"), Bunch::UnitPlus, Bunch::UnitTimes], 6)
            .into_iter()
            .filter(|b| space.admits_bunch(b))
            .collect();
        assert_eq!(got, brute);
        assert!(got.contains(&bunch("p")));
    }

    #[test]
    fn space_agrees_with_brute_force() {
        let s = seq("p /\\ q |- p");
        let space = generate_space(&s, SearchBounds::new(1, 0, 1));
        let got: BTreeSet<Bunch> = space.bunches(100_000).unwrap().into_iter().collect();
        let alphabet: Vec<Bunch> = [Bunch::UnitPlus, Bunch::UnitTimes]
            .into_iter()
            .chain(space.vocabulary.iter().cloned().map(Bunch::Leaf))
            .collect();
        for b in enumerate_bunches(&alphabet, 4) {
            assert_eq!(space.admits_bunch(&b), got.contains(&b), "{b}");
        }
    }

    #[test]
    fn space_is_monotone() {
        let s = seq("p /\\ q |- p");
        let small: BTreeSet<Bunch> =
            generate_space(&s, SearchBounds::new(0, 0, 0)).bunches(100_000).unwrap().into_iter().collect();
        let big: BTreeSet<Bunch> =
            generate_space(&s, SearchBounds::new(1, 0, 1)).bunches(100_000).unwrap().into_iter().collect();
        assert!(small.len() < big.len());
        assert!(small.is_subset(&big));
    }

    #[test]
    fn decide_examples() {
        assert!(provable("p |- p"));
        assert!(provable("p * q |- q * p"));
        assert!(!provable("p |- p * p"));
        assert!(provable("(p -* top) -> q |- top"));
        assert!(provable("p , (p -* q) |- q"));
        assert!(provable("p /\\ q |- p"));
    }
}
