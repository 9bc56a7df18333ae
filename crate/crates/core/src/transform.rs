//! Proof transformations: simulating LBI in sLBI, regimentation,
//! elimination of unit contractions (into dLBI with the radical rule),
//! elimination of the radical rule, and the well-labelling of proofs.
//!
//! Every transformation works on explicit proof trees and preserves the
//! end-sequent (up to ≅). Intermediate links between consecutive sequents
//! of a structural run are labelled by asking the checker which rule of a
//! short list fits, so every produced inference is an instance the checker
//! accepts by construction.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use crate::calculus::{
    backward, check_derivation, is_regimented, phase_of, reduced_forms, to_json, Candidate, ContextRecipe, Derivation,
    GoalRecipe, LabelSource, Phase, Piece, PremiseRecipe, Rule, RuleInstance, Side, System,
};
use crate::measures::{depth, formula_depth};
use crate::rewriting::{drop_units, is_normal, normalize, normalize_units_first, replay, ReductionStep};
use crate::search::loading_derivation;
use crate::syntax::{canonicalize, replace, sub_at, Bunch, Former, Formula, Loc, Path, Sequent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("the input does not check in {system}: {reason}")]
    InvalidInput { system: System, reason: String },
    #[error("the end-sequent {0} is not normal")]
    NotNormal(String),
    #[error("the proof has an open hypothesis {0}")]
    Hypothesis(String),
    #[error("no rule among {rules} links {premise} to {conclusion}")]
    NoLink { rules: String, premise: String, conclusion: String },
    #[error("unit contraction below {rule} at {sequent} matches no rule of dLBI+rad")]
    UncoveredUnitContraction { rule: Rule, sequent: String },
    #[error("radical at {sequent} (over {rule}) matches no rewrite")]
    UncoveredRad { rule: String, sequent: String },
    #[error("exchange (E) has no labelling; convert to sLBI first")]
    ExchangeUnlabelled,
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

type Result<T> = std::result::Result<T, TransformError>;

fn rule_list(rules: &[Rule]) -> String {
    rules.iter().map(|r| r.name()).collect::<Vec<_>>().join("/")
}

/// The first rule among `rules` with an instance from `premise` to
/// `conclusion`.
fn link(rules: &[Rule], premise: &Sequent, conclusion: &Sequent) -> Result<RuleInstance> {
    let p = premise.canonical();
    let c = conclusion.canonical();
    for &rule in rules {
        if let Some(cand) = backward(rule, &c).into_iter().find(|cand| cand.premises == [p.clone()]) {
            return Ok(cand.instance);
        }
    }
    Err(TransformError::NoLink { rules: rule_list(rules), premise: p.to_string(), conclusion: c.to_string() })
}

/// Extend `top` (a proof of `states[0]`) downwards through `states[1..]`,
/// labelling each link with one of `rules`.
fn extend_down(mut top: Derivation, states: &[Sequent], rules: &[Rule]) -> Result<Derivation> {
    for pair in states.windows(2) {
        if pair[0].canonical() == pair[1].canonical() {
            continue;
        }
        let inst = link(rules, &pair[0], &pair[1])?;
        top = Derivation::node(pair[1].canonical(), inst, vec![top]);
    }
    Ok(top)
}

const NORMALIZING: [Rule; 3] = [Rule::CUnitPlus, Rule::CUnitTimes, Rule::CPrime];
const LOADING: [Rule; 3] = [Rule::WUnitPlus, Rule::WUnitTimes, Rule::WPrime];

fn states_of(g: &Bunch, steps: &[ReductionStep]) -> Vec<Bunch> {
    replay(g, steps).expect("own steps replay")
}

/// The candidate of `rule` at `conclusion` with exactly these premises.
fn matching(rule: Rule, premises: &[Sequent], conclusion: &Sequent) -> Option<Candidate> {
    let ps: Vec<Sequent> = premises.iter().map(Sequent::canonical).collect();
    backward(rule, &conclusion.canonical()).into_iter().find(|c| c.premises == ps)
}

// ---------------------------------------------------------------------------
// LBI to sLBI
// ---------------------------------------------------------------------------

/// Simulate an LBI proof in sLBI: exchange becomes unit contractions and
/// unit weakenings around a permutation; weakening adds the normal form of
/// the new material and re-expands it; contraction normalizes both copies,
/// contracts them, and re-expands.
pub fn lbi_to_slbi(d: &Derivation) -> Result<Derivation> {
    check_derivation(System::Lbi, d, &[])
        .map_err(|e| TransformError::InvalidInput { system: System::Lbi, reason: e.to_string() })?;
    to_slbi(d)
}

fn to_slbi(d: &Derivation) -> Result<Derivation> {
    let Some(inst) = &d.rule else { return Err(TransformError::Hypothesis(d.sequent.to_string())) };
    let children = d.children.iter().map(to_slbi).collect::<Result<Vec<_>>>()?;
    let concl = d.sequent.canonical();
    let goal = concl.goal.clone();
    let at = |g: Bunch| Sequent::new(canonicalize(&g), goal.clone());
    match inst.rule {
        Rule::BotL => {
            let (nf, _) = normalize(&concl.context);
            let top = Derivation::leaf(at(nf), Rule::BotLPrime);
            Ok(loading_derivation(&concl, top))
        }
        Rule::E => {
            let top = children.into_iter().next().expect("one premise");
            let premise = top.sequent.canonical();
            let (up, up_steps) = drop_units(&premise.context);
            let (down, down_steps) = drop_units(&concl.context);
            if up != down {
                return Err(TransformError::Internal(format!("{premise} and {concl} are not coherently equal")));
            }
            let mut states: Vec<Sequent> = states_of(&premise.context, &up_steps).into_iter().map(at).collect();
            let below: Vec<Sequent> = states_of(&concl.context, &down_steps).into_iter().rev().map(at).collect();
            states.extend(below.into_iter().skip(1));
            if states.len() == 1 {
                return Ok(Derivation::node(concl, RuleInstance::new(Rule::EPrime), vec![top]));
            }
            extend_down(top, &states, &[Rule::CUnitPlus, Rule::CUnitTimes, Rule::WUnitPlus, Rule::WUnitTimes])
        }
        Rule::W => {
            let top = children.into_iter().next().expect("one premise");
            let cand = matching(Rule::W, &[top.sequent.clone()], &concl)
                .ok_or_else(|| TransformError::Internal(format!("no weakening site in {concl}")))?;
            let loc = cand.sigma_loc.expect("weakening has a site");
            let extra = sub_at(&concl.context, &loc).expect("valid");
            let (_, steps) = normalize(&extra);
            let mut states: Vec<Sequent> = states_of(&extra, &steps)
                .into_iter()
                .map(|x| at(replace(&concl.context, &loc, x).expect("valid")))
                .collect();
            states.reverse();
            states.insert(0, top.sequent.canonical());
            extend_down(top, &states, &LOADING)
        }
        Rule::C => {
            let top = children.into_iter().next().expect("one premise");
            let cand = matching(Rule::C, &[top.sequent.clone()], &concl)
                .ok_or_else(|| TransformError::Internal(format!("no contraction site in {concl}")))?;
            let loc = match &cand.recipes[0].context {
                ContextRecipe::Replace(loc, _) => loc.clone(),
                _ => unreachable!("contraction replaces a location"),
            };
            let x = sub_at(&concl.context, &loc).expect("valid");
            let (nf, steps) = normalize(&x);
            let xs = states_of(&x, &steps);
            let put = |b: Bunch| at(replace(&concl.context, &loc, b).expect("valid"));
            let mut states = vec![top.sequent.canonical()];
            states.extend(xs.iter().map(|xi| put(Bunch::add(vec![xi.clone(), x.clone()]))));
            states.extend(xs.iter().map(|xi| put(Bunch::add(vec![nf.clone(), xi.clone()]))));
            states.push(put(nf.clone()));
            let reexpand: Vec<Sequent> = xs.iter().rev().map(|xi| put(xi.clone())).collect();
            let d = extend_down(top, &states, &NORMALIZING)?;
            let mut chain = vec![d.sequent.clone()];
            chain.extend(reexpand);
            extend_down(d, &chain, &LOADING)
        }
        r if r.is_logical() => Ok(Derivation::node(concl, inst.clone(), children)),
        r => Err(TransformError::InvalidInput { system: System::Lbi, reason: format!("rule {r} is not an LBI rule") }),
    }
}

// ---------------------------------------------------------------------------
// Regimentation
// ---------------------------------------------------------------------------

/// Turn a proof (sLBI, or any system whose structural rules are the primed
/// ones) of a normal sequent into a regimented one: for the lowest action,
/// prove the normal forms of its premises recursively, load them to the
/// reduced premises of the action, apply it, and normalize its conclusion
/// (unit removals first) down to the end-sequent.
pub fn regiment(d: &Derivation) -> Result<Derivation> {
    if !is_normal(&d.sequent.context) {
        return Err(TransformError::NotNormal(d.sequent.to_string()));
    }
    regiment_normal(d)
}

fn normalizing_chain(top: Derivation, target: &Sequent, units_first: bool) -> Result<Derivation> {
    let s = top.sequent.canonical();
    let (_, steps) = if units_first { normalize_units_first(&s.context) } else { normalize(&s.context) };
    let states: Vec<Sequent> =
        states_of(&s.context, &steps).into_iter().map(|g| Sequent::new(g, s.goal.clone())).collect();
    if states.last() != Some(&target.canonical()) {
        return Err(TransformError::Internal(format!("{s} does not normalize to {target}")));
    }
    extend_down(top, &states, &NORMALIZING)
}

fn regiment_normal(d: &Derivation) -> Result<Derivation> {
    let mut action = d;
    loop {
        match phase_of(action) {
            Phase::Action => break,
            Phase::Open => return Err(TransformError::Hypothesis(action.sequent.to_string())),
            _ => action = &action.children[0],
        }
    }
    let inst = action.rule.as_ref().expect("an action has a rule");
    let premises = action.premises();
    let mut normal_proofs = Vec::with_capacity(premises.len());
    for child in &action.children {
        let p = child.sequent.canonical();
        let child = if is_normal(&p.context) {
            child.clone()
        } else {
            let target = Sequent::new(crate::rewriting::normal_form(&p.context), p.goal.clone());
            normalizing_chain(child.clone(), &target, false)?
        };
        normal_proofs.push(regiment_normal(&child)?);
    }
    let (hats, hat_c) = reduced_forms(inst, &premises, &action.sequent, true)
        .map_err(|e| TransformError::Internal(format!("{} at {}: {e}", inst.rule, action.sequent)))?;
    let cand = matching(inst.rule, &hats, &hat_c)
        .ok_or_else(|| TransformError::Internal(format!("reduced {} does not apply", inst.rule)))?;
    let children: Vec<Derivation> = hats.iter().zip(normal_proofs).map(|(h, top)| loading_derivation(h, top)).collect();
    let acted = Derivation::node(hat_c, cand.instance, children);
    normalizing_chain(acted, &d.sequent, true)
}

// ---------------------------------------------------------------------------
// Unit contractions
// ---------------------------------------------------------------------------

fn is_unit_contraction(d: &Derivation) -> bool {
    matches!(d.rule_id(), Some(Rule::CUnitPlus | Rule::CUnitTimes))
}

/// Rebuild every maximal normalizing run that sits directly on an action
/// and ends in a normal sequent so that unit removals come first.
fn eager_unit_contractions(d: &Derivation, in_run: bool) -> Result<Derivation> {
    let normalizing = phase_of(d) == Phase::Normalizing;
    if normalizing && !in_run && is_normal(&d.sequent.context) {
        let mut top = d;
        while phase_of(top) == Phase::Normalizing {
            top = &top.children[0];
        }
        if phase_of(top) == Phase::Action {
            let rebuilt_top = eager_unit_contractions(top, false)?;
            if let Ok(run) = normalizing_chain(rebuilt_top, &d.sequent, true) {
                return Ok(run);
            }
        }
    }
    let children = d.children.iter().map(|c| eager_unit_contractions(c, normalizing)).collect::<Result<Vec<_>>>()?;
    Ok(Derivation { sequent: d.sequent.clone(), rule: d.rule.clone(), children })
}

/// Remove unit contractions (C∅₊, C∅ₓ) from a regimented proof: each run of
/// them directly below an action is absorbed, together with the action,
/// into a single rule of dLBI+rad with the same premises (a variant, Inst
/// or Rad).
pub fn eliminate_unit_contractions(d: &Derivation) -> Result<Derivation> {
    let d = eager_unit_contractions(d, false)?;
    absorb_units(&d)
}

fn absorb_units(d: &Derivation) -> Result<Derivation> {
    if !is_unit_contraction(d) {
        let children = d.children.iter().map(absorb_units).collect::<Result<Vec<_>>>()?;
        return Ok(Derivation { sequent: d.sequent.clone(), rule: d.rule.clone(), children });
    }
    let mut action = d;
    while is_unit_contraction(action) {
        action = &action.children[0];
    }
    let rule = action.rule_id().ok_or_else(|| TransformError::Hypothesis(action.sequent.to_string()))?;
    if phase_of(action) != Phase::Action {
        return Err(TransformError::UncoveredUnitContraction { rule, sequent: d.sequent.to_string() });
    }
    let premises = action.premises();
    let found = System::DlbiRad
        .rules()
        .into_iter()
        .find_map(|r| matching(r, &premises, &d.sequent))
        .ok_or_else(|| TransformError::UncoveredUnitContraction { rule, sequent: d.sequent.to_string() })?;
    let children = action.children.iter().map(absorb_units).collect::<Result<Vec<_>>>()?;
    Ok(Derivation::node(d.sequent.canonical(), found.instance, children))
}

// ---------------------------------------------------------------------------
// The radical rule
// ---------------------------------------------------------------------------

/// How a premise of the replacement inference is obtained from a premise
/// of the inference above the radical.
enum Fit {
    Same,
    /// Instantiate a `o+` by `ox`.
    Inst,
    /// Remove radicals (one or two): the intermediate sequents, top first.
    Rads(Vec<Sequent>),
}

fn fit(q: &Sequent, p: &Sequent) -> Option<Fit> {
    if q == p {
        return Some(Fit::Same);
    }
    let by_inst = backward(Rule::Inst, q)
        .into_iter()
        .any(|c| c.instance.sigma == Some(Bunch::UnitTimes) && c.premises == [p.clone()]);
    if by_inst {
        return Some(Fit::Inst);
    }
    for c in backward(Rule::Rad, q) {
        if c.premises[0] == *p {
            return Some(Fit::Rads(vec![]));
        }
    }
    for c in backward(Rule::Rad, q) {
        let mid = &c.premises[0];
        if backward(Rule::Rad, mid).iter().any(|c2| c2.premises[0] == *p) {
            return Some(Fit::Rads(vec![mid.clone()]));
        }
    }
    None
}

fn cost(f: &Fit) -> usize {
    match f {
        Fit::Same => 0,
        Fit::Inst => 1,
        Fit::Rads(mid) => 2 + 2 * mid.len(),
    }
}

/// Eliminate a radical at `y` sitting on the rad-free proof `m`: find an
/// inference of dLBI at `y` whose premises are those of `m`'s last
/// inference, possibly with radicals removed (handled recursively, on
/// smaller proofs) or with `o+` instantiated to `ox`.
fn absorb_rad(y: &Sequent, m: &Derivation) -> Result<Derivation> {
    let y = y.canonical();
    let Some(inst) = &m.rule else { return Err(TransformError::Hypothesis(m.sequent.to_string())) };
    let ps: Vec<Sequent> = m.premises().iter().map(Sequent::canonical).collect();
    let mut best: Option<(usize, bool, RuleInstance, Vec<Fit>)> = None;
    for rule in System::Dlbi.rules() {
        if rule.arity() != ps.len() {
            continue;
        }
        for cand in backward(rule, &y) {
            let fits: Option<Vec<Fit>> = cand.premises.iter().zip(&ps).map(|(q, p)| fit(q, p)).collect();
            let Some(fits) = fits else { continue };
            let c: usize = fits.iter().map(cost).sum();
            let other = rule != inst.rule;
            if best.as_ref().map_or(true, |(bc, bo, _, _)| (c, other) < (*bc, *bo)) {
                best = Some((c, other, cand.instance, fits));
            }
        }
    }
    let (_, _, new_inst, fits) =
        best.ok_or_else(|| TransformError::UncoveredRad { rule: inst.rule.to_string(), sequent: y.to_string() })?;
    let mut children = Vec::with_capacity(fits.len());
    let q_premises: Vec<Sequent> = {
        let cand = backward(new_inst.rule, &y)
            .into_iter()
            .find(|c| c.instance == new_inst && c.premises.iter().zip(&ps).all(|(q, p)| fit(q, p).is_some()))
            .expect("chosen candidate");
        cand.premises
    };
    for ((fit, q), child) in fits.into_iter().zip(q_premises).zip(&m.children) {
        children.push(match fit {
            Fit::Same => child.clone(),
            Fit::Inst => {
                Derivation::node(q, RuleInstance::with_sigma(Rule::Inst, Bunch::UnitTimes), vec![child.clone()])
            }
            Fit::Rads(mids) => {
                let mut cur = child.clone();
                for mid in mids {
                    cur = absorb_rad(&mid, &cur)?;
                }
                absorb_rad(&q, &cur)?
            }
        });
    }
    Ok(Derivation::node(y, new_inst, children))
}

/// Eliminate every radical rule, topmost first (left to right among
/// parallel branches).
pub fn eliminate_rad(d: &Derivation) -> Result<Derivation> {
    let children = d.children.iter().map(eliminate_rad).collect::<Result<Vec<_>>>()?;
    if d.rule_id() == Some(Rule::Rad) {
        return absorb_rad(&d.sequent, &children[0]);
    }
    Ok(Derivation { sequent: d.sequent.clone(), rule: d.rule.clone(), children })
}

/// The whole pipeline from an LBI proof of any sequent to a regimented
/// dLBI proof of its normal form.
pub fn lbi_to_dlbi(d: &Derivation) -> Result<Derivation> {
    let s = lbi_to_slbi(d)?;
    let s = normalize_end(s)?;
    let r = regiment(&s)?;
    let u = eliminate_unit_contractions(&r)?;
    eliminate_rad(&u)
}

/// Extend a proof by normalizing its end-sequent.
pub fn normalize_end(d: Derivation) -> Result<Derivation> {
    let s = d.sequent.canonical();
    let target = Sequent::new(crate::rewriting::normal_form(&s.context), s.goal.clone());
    normalizing_chain(d, &target, false)
}

/// Is every inference of `d` in `system` and is `d` regimented?
pub fn is_regimented_in(system: System, d: &Derivation) -> bool {
    check_derivation(system, d, &[]).is_ok() && is_regimented(d)
}

// ---------------------------------------------------------------------------
// Labelling
// ---------------------------------------------------------------------------

/// A formula whose multiplicative connectives carry labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LFormula {
    Atom(Arc<str>),
    Top,
    Bot,
    One,
    And(Box<LFormula>, Box<LFormula>),
    Or(Box<LFormula>, Box<LFormula>),
    Imp(Box<LFormula>, Box<LFormula>),
    Star(u32, Box<LFormula>, Box<LFormula>),
    Wand(u32, Box<LFormula>, Box<LFormula>),
}

/// A bunch whose `,` nodes carry labels (one per variadic node).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LBunch {
    UnitPlus,
    UnitTimes,
    Leaf(LFormula),
    Add(Vec<LBunch>),
    Mul(u32, Vec<LBunch>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LSequent {
    pub context: LBunch,
    pub goal: LFormula,
}

/// A derivation whose sequents are labelled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelledDerivation {
    pub sequent: LSequent,
    pub rule: Option<RuleInstance>,
    pub children: Vec<LabelledDerivation>,
}

impl LFormula {
    fn fresh(f: &Formula, next: &mut u32) -> LFormula {
        let mut take = || {
            let n = *next;
            *next += 1;
            n
        };
        match f {
            Formula::Atom(a) => LFormula::Atom(a.clone()),
            Formula::Top => LFormula::Top,
            Formula::Bot => LFormula::Bot,
            Formula::One => LFormula::One,
            Formula::Star(l, r) | Formula::Wand(l, r) => {
                let n = take();
                let l = Box::new(LFormula::fresh(l, next));
                let r = Box::new(LFormula::fresh(r, next));
                if matches!(f, Formula::Star(..)) {
                    LFormula::Star(n, l, r)
                } else {
                    LFormula::Wand(n, l, r)
                }
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                let l = Box::new(LFormula::fresh(l, next));
                let r = Box::new(LFormula::fresh(r, next));
                match f {
                    Formula::And(..) => LFormula::And(l, r),
                    Formula::Or(..) => LFormula::Or(l, r),
                    _ => LFormula::Imp(l, r),
                }
            }
        }
    }

    pub fn erase(&self) -> Formula {
        match self {
            LFormula::Atom(a) => Formula::Atom(a.clone()),
            LFormula::Top => Formula::Top,
            LFormula::Bot => Formula::Bot,
            LFormula::One => Formula::One,
            LFormula::And(l, r) => Formula::and(l.erase(), r.erase()),
            LFormula::Or(l, r) => Formula::or(l.erase(), r.erase()),
            LFormula::Imp(l, r) => Formula::imp(l.erase(), r.erase()),
            LFormula::Star(_, l, r) => Formula::star(l.erase(), r.erase()),
            LFormula::Wand(_, l, r) => Formula::wand(l.erase(), r.erase()),
        }
    }

    /// The label of the principal connective, if multiplicative.
    pub fn label(&self) -> Option<u32> {
        match self {
            LFormula::Star(n, ..) | LFormula::Wand(n, ..) => Some(*n),
            _ => None,
        }
    }

    fn parts(&self) -> Option<(&LFormula, &LFormula)> {
        match self {
            LFormula::And(l, r) | LFormula::Or(l, r) | LFormula::Imp(l, r) => Some((l, r)),
            LFormula::Star(_, l, r) | LFormula::Wand(_, l, r) => Some((l, r)),
            _ => None,
        }
    }

    fn part(&self, side: Side) -> LFormula {
        let (l, r) = self.parts().expect("binary connective");
        match side {
            Side::Left => l.clone(),
            Side::Right => r.clone(),
        }
    }

    /// Every label, in pre-order.
    pub fn labels(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<u32>) {
        out.extend(self.label());
        if let Some((l, r)) = self.parts() {
            l.collect(out);
            r.collect(out);
        }
    }

    /// Labels along a path of maximal width: additive connectives follow
    /// their wider side (the left one on ties), multiplicative ones keep
    /// their own label and both sides.
    pub fn critical_labels(&self) -> Vec<u32> {
        match self {
            LFormula::Star(n, l, r) | LFormula::Wand(n, l, r) => {
                let mut out = vec![*n];
                out.extend(l.critical_labels());
                out.extend(r.critical_labels());
                out
            }
            LFormula::And(l, r) | LFormula::Or(l, r) | LFormula::Imp(l, r) => {
                if formula_depth(&r.erase()) > formula_depth(&l.erase()) {
                    r.critical_labels()
                } else {
                    l.critical_labels()
                }
            }
            _ => Vec::new(),
        }
    }
}

impl LBunch {
    fn fresh(g: &Bunch, next: &mut u32) -> LBunch {
        match g {
            Bunch::UnitPlus => LBunch::UnitPlus,
            Bunch::UnitTimes => LBunch::UnitTimes,
            Bunch::Leaf(f) => LBunch::Leaf(LFormula::fresh(f, next)),
            Bunch::Add(cs) => LBunch::Add(cs.iter().map(|c| LBunch::fresh(c, next)).collect()),
            Bunch::Mul(cs) => {
                let n = *next;
                *next += 1;
                LBunch::Mul(n, cs.iter().map(|c| LBunch::fresh(c, next)).collect())
            }
        }
    }

    pub fn erase(&self) -> Bunch {
        match self {
            LBunch::UnitPlus => Bunch::UnitPlus,
            LBunch::UnitTimes => Bunch::UnitTimes,
            LBunch::Leaf(f) => Bunch::Leaf(f.erase()),
            LBunch::Add(cs) => Bunch::Add(cs.iter().map(LBunch::erase).collect()),
            LBunch::Mul(_, cs) => Bunch::Mul(cs.iter().map(LBunch::erase).collect()),
        }
    }

    fn children(&self) -> &[LBunch] {
        match self {
            LBunch::Add(cs) | LBunch::Mul(_, cs) => cs,
            _ => &[],
        }
    }

    fn former(&self) -> Option<Former> {
        match self {
            LBunch::Add(_) => Some(Former::Add),
            LBunch::Mul(..) => Some(Former::Mul),
            _ => None,
        }
    }

    /// Combine under a former, splicing children headed by the same former
    /// (the new node's label wins) and collapsing trivial nodes.
    fn combine(former: Former, label: u32, children: Vec<LBunch>) -> LBunch {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match (former, c) {
                (Former::Add, LBunch::Add(cs)) | (Former::Mul, LBunch::Mul(_, cs)) => flat.extend(cs),
                (_, c) => flat.push(c),
            }
        }
        match (flat.len(), former) {
            (0, Former::Add) => LBunch::UnitPlus,
            (0, Former::Mul) => LBunch::UnitTimes,
            (1, _) => flat.pop().expect("one child"),
            (_, Former::Add) => LBunch::Add(flat),
            (_, Former::Mul) => LBunch::Mul(label, flat),
        }
    }

    /// Flatten and order children exactly as the erased bunch is ordered
    /// by [`canonicalize`] (ties keep their order).
    fn canonical(&self) -> LBunch {
        let former = self.former();
        let label = match self {
            LBunch::Mul(n, _) => *n,
            _ => 0,
        };
        match former {
            None => self.clone(),
            Some(f) => {
                let kids = self.children().iter().map(LBunch::canonical).collect();
                match LBunch::combine(f, label, kids) {
                    LBunch::Add(mut cs) => {
                        cs.sort_by_cached_key(LBunch::erase);
                        LBunch::Add(cs)
                    }
                    LBunch::Mul(n, mut cs) => {
                        cs.sort_by_cached_key(LBunch::erase);
                        LBunch::Mul(n, cs)
                    }
                    other => other,
                }
            }
        }
    }

    fn get(&self, path: &[usize]) -> &LBunch {
        path.iter().fold(self, |cur, &i| &cur.children()[i])
    }

    fn sub_at(&self, loc: &Loc) -> LBunch {
        match loc {
            Loc::Node(p) => self.get(p).clone(),
            Loc::Group(p, idxs) => {
                let node = self.get(p);
                let label = match node {
                    LBunch::Mul(n, _) => *n,
                    _ => 0,
                };
                let kids = idxs.iter().map(|&i| node.children()[i].clone()).collect();
                LBunch::combine(node.former().expect("complex"), label, kids)
            }
        }
    }

    fn replace_node(&self, path: &[usize], with: LBunch) -> LBunch {
        match path.split_first() {
            None => with,
            Some((&i, rest)) => {
                let (former, label) = match self {
                    LBunch::Mul(n, _) => (Former::Mul, *n),
                    _ => (Former::Add, 0),
                };
                let kids = self
                    .children()
                    .iter()
                    .enumerate()
                    .map(|(j, c)| if j == i { c.replace_node(rest, with.clone()) } else { c.clone() })
                    .collect();
                LBunch::combine(former, label, kids)
            }
        }
    }

    fn replace(&self, loc: &Loc, with: LBunch) -> LBunch {
        match loc {
            Loc::Node(p) => self.replace_node(p, with),
            Loc::Group(p, idxs) => {
                let node = self.get(p);
                let label = match node {
                    LBunch::Mul(n, _) => *n,
                    _ => 0,
                };
                let mut kids: Vec<LBunch> = node
                    .children()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !idxs.contains(i))
                    .map(|(_, c)| c.clone())
                    .collect();
                kids.push(with);
                self.replace_node(p, LBunch::combine(node.former().expect("complex"), label, kids))
            }
        }
    }

    /// Every label, in pre-order (node labels before their children).
    pub fn labels(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<u32>) {
        match self {
            LBunch::Leaf(f) => f.collect(out),
            LBunch::Mul(n, cs) => {
                out.push(*n);
                cs.iter().for_each(|c| c.collect(out));
            }
            LBunch::Add(cs) => cs.iter().for_each(|c| c.collect(out)),
            _ => {}
        }
    }

    /// λ of a sub-bunch: its own label for a `,` node, every label of a
    /// formula, nothing for units and `;` nodes.
    fn own_labels(&self) -> Vec<u32> {
        match self {
            LBunch::Mul(n, _) => vec![*n],
            LBunch::Leaf(f) => f.labels(),
            _ => Vec::new(),
        }
    }
}

impl LSequent {
    pub fn erase(&self) -> Sequent {
        Sequent::new(self.context.erase(), self.goal.erase())
    }

    /// Every label, context first.
    pub fn labels(&self) -> Vec<u32> {
        let mut out = self.context.labels();
        out.extend(self.goal.labels());
        out
    }
}

impl fmt::Display for LSequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.erase())
    }
}

impl LabelledDerivation {
    pub fn erase(&self) -> Derivation {
        Derivation {
            sequent: self.sequent.erase(),
            rule: self.rule.clone(),
            children: self.children.iter().map(LabelledDerivation::erase).collect(),
        }
    }

    /// Every labelled sequent, in pre-order.
    pub fn sequents(&self) -> Vec<&LSequent> {
        let mut out = vec![&self.sequent];
        for c in &self.children {
            out.extend(c.sequents());
        }
        out
    }
}

/// The label sets of every line of `g`: a line starts at the root and
/// descends through topset members to a basic bunch; its set collects λ
/// of every bunch on it.
pub fn label_sets(g: &LBunch) -> Vec<Vec<u32>> {
    let own = g.own_labels();
    if g.former().is_none() {
        return vec![own];
    }
    let mut out = Vec::new();
    for c in g.children() {
        for line in label_sets(c) {
            let mut l = own.clone();
            l.extend(line);
            out.push(l);
        }
    }
    out
}

/// The label set of a critical line (one through bunches of maximal depth,
/// leftmost on ties); its size is the depth of the bunch.
pub fn critical_label_set(g: &LBunch) -> Vec<u32> {
    match g {
        LBunch::Leaf(f) => f.critical_labels(),
        LBunch::UnitPlus | LBunch::UnitTimes => Vec::new(),
        LBunch::Add(cs) | LBunch::Mul(_, cs) => {
            let mut best = &cs[0];
            for c in &cs[1..] {
                if depth(&c.erase()) > depth(&best.erase()) {
                    best = c;
                }
            }
            let mut out = match g {
                LBunch::Mul(n, _) => vec![*n],
                _ => Vec::new(),
            };
            out.extend(critical_label_set(best));
            out
        }
    }
}

struct Labeller {
    next: u32,
}

impl Labeller {
    fn take(&mut self) -> u32 {
        let n = self.next;
        self.next += 1;
        n
    }

    fn source(&mut self, c: &LSequent, src: &LabelSource) -> u32 {
        let found = match src {
            LabelSource::Fresh => None,
            LabelSource::Leaf(p) => match c.context.get(p) {
                LBunch::Leaf(f) => f.label(),
                _ => None,
            },
            LabelSource::Goal => c.goal.label(),
            LabelSource::Node(q) => match c.context.get(q) {
                LBunch::Mul(n, _) => Some(*n),
                _ => None,
            },
        };
        found.unwrap_or_else(|| self.take())
    }

    fn piece(&mut self, c: &LSequent, piece: &Piece) -> LBunch {
        match piece {
            Piece::Sub(loc) => c.context.sub_at(loc),
            Piece::Part(p, side) => match c.context.get(p) {
                LBunch::Leaf(f) => LBunch::Leaf(f.part(*side)),
                _ => unreachable!("recipe refers to a formula leaf"),
            },
            Piece::Goal(side) => LBunch::Leaf(c.goal.part(*side)),
            Piece::Unit(Former::Add) => LBunch::UnitPlus,
            Piece::Unit(Former::Mul) => LBunch::UnitTimes,
            Piece::Combine(f, ps, src) => {
                let label = if *f == Former::Mul { self.source(c, src) } else { 0 };
                let kids = ps.iter().map(|p| self.piece(c, p)).collect();
                LBunch::combine(*f, label, kids)
            }
        }
    }

    fn premise(&mut self, c: &LSequent, r: &PremiseRecipe) -> LSequent {
        let context = match &r.context {
            ContextRecipe::Same => c.context.clone(),
            ContextRecipe::Build(p) => self.piece(c, p),
            ContextRecipe::Replace(loc, p) => {
                let with = self.piece(c, p);
                c.context.replace(loc, with)
            }
        };
        let goal = match &r.goal {
            GoalRecipe::Same => c.goal.clone(),
            GoalRecipe::Part(side) => c.goal.part(*side),
            GoalRecipe::LeafPart(p, side) => match c.context.get(p) {
                LBunch::Leaf(f) => f.part(*side),
                _ => unreachable!("recipe refers to a formula leaf"),
            },
        };
        LSequent { context: context.canonical(), goal }
    }

    fn derivation(&mut self, d: &Derivation, s: LSequent) -> Result<LabelledDerivation> {
        let Some(inst) = &d.rule else {
            return Ok(LabelledDerivation { sequent: s, rule: None, children: Vec::new() });
        };
        if inst.rule == Rule::E {
            return Err(TransformError::ExchangeUnlabelled);
        }
        let concl = d.sequent.canonical();
        let ps: Vec<Sequent> = d.children.iter().map(|c| c.sequent.canonical()).collect();
        let sigma = inst.sigma.as_ref().map(canonicalize);
        let cand = backward(inst.rule, &concl)
            .into_iter()
            .find(|c| c.premises == ps && (sigma.is_none() || c.instance.sigma == sigma))
            .ok_or_else(|| TransformError::InvalidInput {
                system: System::All,
                reason: format!("{} at {concl}", inst.rule),
            })?;
        let mut children = Vec::with_capacity(ps.len());
        for ((recipe, child), p) in cand.recipes.iter().zip(&d.children).zip(&ps) {
            let lp = self.premise(&s, recipe);
            if lp.erase() != *p {
                return Err(TransformError::Internal(format!("labelled premise {lp} differs from {p}")));
            }
            children.push(self.derivation(child, lp)?);
        }
        Ok(LabelledDerivation { sequent: s, rule: Some(inst.clone()), children })
    }
}

/// Label a proof: the end-sequent's multiplicative connectives and `,`
/// nodes get distinct labels; premises inherit them, and a `,` built by a
/// rule takes the label of the connective that justifies it (fresh when
/// there is none). Contraction copies labels.
pub fn well_label(d: &Derivation) -> Result<LabelledDerivation> {
    let mut l = Labeller { next: 0 };
    let s = d.sequent.canonical();
    let context = LBunch::fresh(&s.context, &mut l.next).canonical();
    let goal = LFormula::fresh(&s.goal, &mut l.next);
    l.derivation(d, LSequent { context, goal })
}

fn count_over(labels: impl IntoIterator<Item = u32>, limit: usize) -> Option<u32> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts.into_iter().find(|(_, n)| *n > limit).map(|(l, _)| l)
}

/// Violations of the labelling laws in a labelled proof: the end-sequent
/// labels must be distinct; on every sequent the critical label set of the
/// context and of the goal must have size equal to their depth; and every
/// label occurs at most twice across the critical label sets of two
/// additively related sub-bunches one of which is a formula, and across
/// those of the context and the goal.
pub fn label_law_violations(ld: &LabelledDerivation) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(l) = count_over(ld.sequent.labels(), 1) {
        out.push(format!("label {l} repeats in the end-sequent {}", ld.sequent));
    }
    for s in ld.sequents() {
        let ctx = critical_label_set(&s.context);
        if ctx.len() != depth(&s.context.erase()) {
            out.push(format!("critical label set of the context of {s} has size {}", ctx.len()));
        }
        let goal = s.goal.critical_labels();
        if goal.len() != formula_depth(&s.goal.erase()) {
            out.push(format!("critical label set of the goal of {s} has size {}", goal.len()));
        }
        if let Some(l) = count_over(ctx.iter().chain(&goal).copied(), 2) {
            out.push(format!("label {l} occurs more than twice across context and goal of {s}"));
        }
        let mut stack = vec![&s.context];
        while let Some(g) = stack.pop() {
            stack.extend(g.children());
            let LBunch::Add(cs) = g else { continue };
            for (i, a) in cs.iter().enumerate() {
                for (j, b) in cs.iter().enumerate() {
                    if i == j || !matches!(b, LBunch::Leaf(_)) {
                        continue;
                    }
                    let both = critical_label_set(a).into_iter().chain(critical_label_set(b));
                    if let Some(l) = count_over(both, 2) {
                        out.push(format!("label {l} occurs more than twice in related sub-bunches of {s}"));
                    }
                }
            }
        }
    }
    out
}

/// Interchange JSON for a labelled proof: the plain format plus a `labels`
/// array per node (pre-order over context then goal).
pub fn labelled_to_json(ld: &LabelledDerivation) -> Value {
    let mut v = to_json(&Derivation { sequent: ld.sequent.erase(), rule: ld.rule.clone(), children: Vec::new() });
    let obj = v.as_object_mut().expect("object");
    obj.insert("labels".into(), json!(ld.sequent.labels()));
    obj.insert("children".into(), Value::Array(ld.children.iter().map(labelled_to_json).collect()));
    v
}

/// Path helper for tests and callers: the labelled sub-bunch at a path.
pub fn labelled_at<'a>(g: &'a LBunch, path: &Path) -> &'a LBunch {
    g.get(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::check_derivation;
    use crate::syntax::seq;

    fn node(s: &str, rule: Rule, children: Vec<Derivation>) -> Derivation {
        Derivation::node(seq(s), RuleInstance::new(rule), children)
    }

    fn id(s: &str) -> Derivation {
        Derivation::leaf(seq(s), Rule::Id)
    }

    fn shape(d: &Derivation) -> Vec<(Vec<usize>, Sequent, Option<Rule>)> {
        d.nodes().into_iter().map(|(at, n)| (at, n.sequent.canonical(), n.rule_id())).collect()
    }

    fn pipeline_ok(d: &Derivation) -> Derivation {
        assert_eq!(check_derivation(System::Lbi, d, &[]), Ok(()));
        let s = lbi_to_slbi(d).unwrap();
        assert_eq!(check_derivation(System::Slbi, &s, &[]), Ok(()), "{s:#?}");
        assert_eq!(s.sequent.canonical(), d.sequent.canonical());
        let out = lbi_to_dlbi(d).unwrap();
        assert_eq!(check_derivation(System::Dlbi, &out, &[]), Ok(()), "{out:#?}");
        assert!(is_regimented(&out));
        assert_eq!(out.count_rule(Rule::Rad), 0);
        out
    }

    #[test]
    fn weakening_by_duplicates_simulates() {
        let d = node("p ; (q ; q) |- p", Rule::W, vec![id("p |- p")]);
        let s = lbi_to_slbi(&d).unwrap();
        assert_eq!(check_derivation(System::Slbi, &s, &[]), Ok(()));
        assert_eq!(s.count_rule(Rule::WPrime), 2);
        pipeline_ok(&d);
    }

    #[test]
    fn contraction_simulates() {
        let top = node(
            "p ; p ; (p -> q) ; (p -> q) |- q",
            Rule::W,
            vec![node("p ; (p -> q) |- q", Rule::ImpL, vec![id("p |- p"), id("q |- q")])],
        );
        let d = node("p ; (p -> q) |- q", Rule::C, vec![node("p ; p ; (p -> q) |- q", Rule::C, vec![top])]);
        assert_eq!(check_derivation(System::Lbi, &d, &[]), Ok(()));
        pipeline_ok(&d);
    }

    #[test]
    fn exchange_and_units_simulate() {
        // p , I ⟹ p from p ⟹ p by a unit law, then 1L.
        let d = node("p , I |- p", Rule::OneL, vec![node("p , ox |- p", Rule::E, vec![id("p |- p")])]);
        pipeline_ok(&d);
        let top = node("o+ ; q |- top", Rule::W, vec![Derivation::leaf(seq("o+ |- top"), Rule::TopR)]);
        let d = node("q |- top", Rule::E, vec![top]);
        let out = pipeline_ok(&d);
        assert_eq!(out.count_rule(Rule::Inst) + out.count_rule(Rule::WPrime), 1);
    }

    #[test]
    fn unit_contraction_becomes_variant() {
        // p -* q ⟹ p -* q via WandL with an empty Δ′ (ox) and a unit law.
        let wl = node(
            "p , ox , (p -* q) |- q",
            Rule::WandL,
            vec![id("p |- p"), node("ox , q |- q", Rule::E, vec![id("q |- q")])],
        );
        let d = node("p -* q |- p -* q", Rule::WandR, vec![node("p , (p -* q) |- q", Rule::E, vec![wl])]);
        let out = pipeline_ok(&d);
        assert!(out.count_rule(Rule::WandL1) + out.count_rule(Rule::WandL) >= 1);
    }

    #[test]
    fn regiment_keeps_regimented_proofs() {
        let d = node(
            "p * q |- q * p",
            Rule::StarL,
            vec![node("p , q |- q * p", Rule::StarR, vec![id("q |- q"), id("p |- p")])],
        );
        assert_eq!(shape(&regiment(&d).unwrap()), shape(&d));
        assert!(regiment(&node("p ; p |- p", Rule::CPrime, vec![id("p |- p")])).is_err());
    }

    #[test]
    fn rad_free_is_unchanged() {
        let d = node(
            "p * q |- q * p",
            Rule::StarL,
            vec![node("p , q |- q * p", Rule::StarR, vec![id("q |- q"), id("p |- p")])],
        );
        assert_eq!(eliminate_rad(&d).unwrap(), d);
        assert_eq!(eliminate_unit_contractions(&d).unwrap(), d);
    }

    #[test]
    fn rad_over_wandl1_becomes_wandl3() {
        // WandL1 with Δ = o+ (a radical), then rad.
        let top = Derivation::node(
            seq("o+ , (top -* q) |- q"),
            RuleInstance::new(Rule::WandL1),
            vec![
                Derivation::leaf(seq("o+ |- top"), Rule::TopR),
                node("ox , q |- q", Rule::WUnitTimes, vec![id("q |- q")]),
            ],
        );
        let d = node("top -* q |- q", Rule::Rad, vec![top]);
        assert_eq!(check_derivation(System::DlbiRad, &d, &[]), Ok(()));
        let out = eliminate_rad(&d).unwrap();
        assert_eq!(check_derivation(System::Dlbi, &out, &[]), Ok(()));
        assert_eq!(out.rule_id(), Some(Rule::WandL3));
        assert_eq!(out.children[0].rule_id(), Some(Rule::Inst));
    }

    #[test]
    fn rad_over_weakening_drops_the_radical() {
        let w = Derivation::node(
            seq("p ; (q , o+) |- p"),
            RuleInstance::with_sigma(Rule::WPrime, crate::syntax::bunch("q , o+")),
            vec![id("p |- p")],
        );
        let d = node("p ; q |- p", Rule::Rad, vec![w]);
        assert_eq!(check_derivation(System::DlbiRad, &d, &[]), Ok(()));
        let out = eliminate_rad(&d).unwrap();
        assert_eq!(out.rule_id(), Some(Rule::WPrime));
        assert_eq!(out.children[0].sequent, seq("p |- p"));
    }

    #[test]
    fn wand_weakening_labelling() {
        let a = "(p -* top) -> q";
        let left = Derivation::node(
            seq(&format!("{a} |- p -* top")),
            RuleInstance::new(Rule::WandR),
            vec![Derivation::node(
                seq(&format!("({a}) , p |- top")),
                RuleInstance::with_sigma(Rule::Inst, crate::syntax::bunch(&format!("({a}) , p"))),
                vec![Derivation::leaf(seq("o+ |- top"), Rule::TopR)],
            )],
        );
        let right = Derivation::node(
            seq("q |- top"),
            RuleInstance::with_sigma(Rule::Inst, crate::syntax::bunch("q")),
            vec![Derivation::leaf(seq("o+ |- top"), Rule::TopR)],
        );
        let imp =
            Derivation::node(seq(&format!("({a}) ; ({a}) |- top")), RuleInstance::new(Rule::ImpL), vec![left, right]);
        let d = Derivation::node(seq(&format!("{a} |- top")), RuleInstance::new(Rule::CPrime), vec![imp]);
        assert_eq!(check_derivation(System::Dlbi, &d, &[]), Ok(()));
        let ld = well_label(&d).unwrap();
        let wand_label = ld.sequent.labels()[0];
        let wandr = &ld.children[0].children[0];
        let premise = &wandr.children[0].sequent;
        match &premise.context {
            LBunch::Mul(n, _) => assert_eq!(*n, wand_label),
            other => panic!("expected a , node, got {other:?}"),
        }
        assert!(label_law_violations(&ld).is_empty());
        let v = labelled_to_json(&ld);
        assert!(v["labels"].is_array());
    }

    #[test]
    fn additive_proofs_have_no_labels() {
        let d = node("p /\\ q |- p", Rule::AndL, vec![node("p ; q |- p", Rule::WPrime, vec![id("p |- p")])]);
        let d = Derivation {
            rule: Some(RuleInstance::with_sigma(Rule::WPrime, crate::syntax::bunch("q"))),
            ..d.children[0].clone()
        };
        let ld = well_label(&d).unwrap();
        for s in ld.sequents() {
            assert!(label_sets(&s.context).iter().all(Vec::is_empty));
            assert!(critical_label_set(&s.context).is_empty());
        }
    }

    #[test]
    fn critical_sets_have_depth_size() {
        let mut next = 0;
        for text in ["(p , (q ; o+)) ; (r ; (r ; ox))", "p , (q ; (r , s))", "(p * q) , r", "p ; (q -* r)"] {
            let g = crate::syntax::bunch(text);
            let lg = LBunch::fresh(&g, &mut next).canonical();
            assert_eq!(critical_label_set(&lg).len(), depth(&g), "{text}");
            assert!(!label_sets(&lg).is_empty());
        }
    }
}
