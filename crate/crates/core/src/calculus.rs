//! Rule systems LBI, sLBI, dLBI and dLBI+rad; backward enumeration of rule
//! instances; inference and derivation checking; the proof interchange
//! format; and the action / loading / normalizing classification with the
//! regimented-proof checker.
//!
//! Every rule is read backwards from a canonical conclusion. A backward
//! instance describes each premise by a small recipe (which parts of the
//! conclusion are copied, decomposed or replaced), so the same description
//! serves plain checking and label propagation.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::measures::{sequent_measures, Measure, Measures, SearchBounds};
use crate::rewriting::{contraction_closure, is_normal, reduct_closure, reducts, Mode, ReductionStep};
use crate::syntax::{
    canonicalize, coherent_equal, get, index_subsets, locations, node_paths, parse_bunch, parse_sequent, replace,
    sub_at, Bunch, Former, Formula, Loc, Path, Sequent,
};

// ---------------------------------------------------------------------------
// Rules and systems
// ---------------------------------------------------------------------------

/// The closed catalogue of rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Id,
    BotL,
    BotLPrime,
    TopR,
    OneR,
    OneL,
    TopL,
    AndL,
    AndR,
    OrL,
    OrR1,
    OrR2,
    ImpL,
    ImpR,
    StarL,
    StarR,
    WandL,
    WandR,
    E,
    W,
    C,
    WPrime,
    WUnitPlus,
    WUnitTimes,
    CPrime,
    EPrime,
    CUnitTimes,
    CUnitPlus,
    WandL1,
    WandL2,
    WandL3,
    StarR1,
    StarR2,
    ImpL1,
    ImpL2,
    ImpL3,
    AndR1,
    AndR2,
    Inst,
    Rad,
}

impl Rule {
    pub const ALL: [Rule; 40] = [
        Rule::Id,
        Rule::BotL,
        Rule::BotLPrime,
        Rule::TopR,
        Rule::OneR,
        Rule::OneL,
        Rule::TopL,
        Rule::AndL,
        Rule::AndR,
        Rule::OrL,
        Rule::OrR1,
        Rule::OrR2,
        Rule::ImpL,
        Rule::ImpR,
        Rule::StarL,
        Rule::StarR,
        Rule::WandL,
        Rule::WandR,
        Rule::E,
        Rule::W,
        Rule::C,
        Rule::WPrime,
        Rule::WUnitPlus,
        Rule::WUnitTimes,
        Rule::CPrime,
        Rule::EPrime,
        Rule::CUnitTimes,
        Rule::CUnitPlus,
        Rule::WandL1,
        Rule::WandL2,
        Rule::WandL3,
        Rule::StarR1,
        Rule::StarR2,
        Rule::ImpL1,
        Rule::ImpL2,
        Rule::ImpL3,
        Rule::AndR1,
        Rule::AndR2,
        Rule::Inst,
        Rule::Rad,
    ];

    /// The ASCII name used in proofs and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Rule::Id => "Id",
            Rule::BotL => "BotL",
            Rule::BotLPrime => "BotL'",
            Rule::TopR => "TopR",
            Rule::OneR => "OneR",
            Rule::OneL => "OneL",
            Rule::TopL => "TopL",
            Rule::AndL => "AndL",
            Rule::AndR => "AndR",
            Rule::OrL => "OrL",
            Rule::OrR1 => "OrR1",
            Rule::OrR2 => "OrR2",
            Rule::ImpL => "ImpL",
            Rule::ImpR => "ImpR",
            Rule::StarL => "StarL",
            Rule::StarR => "StarR",
            Rule::WandL => "WandL",
            Rule::WandR => "WandR",
            Rule::E => "E",
            Rule::W => "W",
            Rule::C => "C",
            Rule::WPrime => "W'",
            Rule::WUnitPlus => "W0+",
            Rule::WUnitTimes => "W0x",
            Rule::CPrime => "C'",
            Rule::EPrime => "E'",
            Rule::CUnitTimes => "C0x",
            Rule::CUnitPlus => "C0+",
            Rule::WandL1 => "WandL1",
            Rule::WandL2 => "WandL2",
            Rule::WandL3 => "WandL3",
            Rule::StarR1 => "StarR1",
            Rule::StarR2 => "StarR2",
            Rule::ImpL1 => "ImpL1",
            Rule::ImpL2 => "ImpL2",
            Rule::ImpL3 => "ImpL3",
            Rule::AndR1 => "AndR1",
            Rule::AndR2 => "AndR2",
            Rule::Inst => "Inst",
            Rule::Rad => "Rad",
        }
    }

    pub fn from_name(name: &str) -> Option<Rule> {
        Rule::ALL.iter().copied().find(|r| r.name() == name)
    }

    /// Number of premises.
    pub fn arity(self) -> usize {
        match self {
            Rule::Id | Rule::BotL | Rule::BotLPrime | Rule::TopR | Rule::OneR => 0,
            Rule::OrL
            | Rule::AndR
            | Rule::StarR
            | Rule::ImpL
            | Rule::WandL
            | Rule::WandL1
            | Rule::WandL2
            | Rule::WandL3
            | Rule::StarR1
            | Rule::StarR2
            | Rule::ImpL1
            | Rule::ImpL2
            | Rule::ImpL3
            | Rule::AndR1
            | Rule::AndR2 => 2,
            _ => 1,
        }
    }

    pub fn is_axiom(self) -> bool {
        self.arity() == 0
    }

    /// Structural rules: weakening, contraction, exchange, their primed and
    /// unit forms, instantiation and the radical rule.
    pub fn is_structural(self) -> bool {
        matches!(
            self,
            Rule::E
                | Rule::W
                | Rule::C
                | Rule::WPrime
                | Rule::WUnitPlus
                | Rule::WUnitTimes
                | Rule::CPrime
                | Rule::EPrime
                | Rule::CUnitTimes
                | Rule::CUnitPlus
                | Rule::Inst
                | Rule::Rad
        )
    }

    /// Logical rules (including axioms and the dLBI variants).
    pub fn is_logical(self) -> bool {
        !self.is_structural()
    }

    /// Rules that introduce a bunch parameter Σ.
    pub fn has_sigma(self) -> bool {
        matches!(self, Rule::W | Rule::WPrime | Rule::Inst)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A rule system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum System {
    Lbi,
    Slbi,
    Dlbi,
    DlbiRad,
    /// The union of every rule; used for intermediate stages of the proof
    /// transformations.
    All,
}

const LOGICAL: [Rule; 16] = [
    Rule::Id,
    Rule::TopR,
    Rule::OneR,
    Rule::OneL,
    Rule::TopL,
    Rule::AndL,
    Rule::AndR,
    Rule::OrL,
    Rule::OrR1,
    Rule::OrR2,
    Rule::ImpL,
    Rule::ImpR,
    Rule::StarL,
    Rule::StarR,
    Rule::WandL,
    Rule::WandR,
];

const VARIANTS: [Rule; 11] = [
    Rule::WandL1,
    Rule::WandL2,
    Rule::WandL3,
    Rule::StarR1,
    Rule::StarR2,
    Rule::ImpL1,
    Rule::ImpL2,
    Rule::ImpL3,
    Rule::AndR1,
    Rule::AndR2,
    Rule::Inst,
];

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Lbi => "lbi",
            System::Slbi => "slbi",
            System::Dlbi => "dlbi",
            System::DlbiRad => "dlbi-rad",
            System::All => "all",
        }
    }

    pub fn from_name(name: &str) -> Option<System> {
        [System::Lbi, System::Slbi, System::Dlbi, System::DlbiRad, System::All].into_iter().find(|s| s.name() == name)
    }

    /// The rules of the system, in catalogue order.
    pub fn rules(self) -> Vec<Rule> {
        Rule::ALL.iter().copied().filter(|r| self.contains(*r)).collect()
    }

    pub fn contains(self, rule: Rule) -> bool {
        let logical = LOGICAL.contains(&rule);
        match self {
            System::Lbi => logical || matches!(rule, Rule::BotL | Rule::E | Rule::W | Rule::C),
            System::Slbi => {
                logical
                    || matches!(
                        rule,
                        Rule::BotLPrime
                            | Rule::WPrime
                            | Rule::WUnitPlus
                            | Rule::WUnitTimes
                            | Rule::CPrime
                            | Rule::EPrime
                            | Rule::CUnitTimes
                            | Rule::CUnitPlus
                    )
            }
            System::Dlbi | System::DlbiRad => {
                (logical
                    || VARIANTS.contains(&rule)
                    || matches!(
                        rule,
                        Rule::BotLPrime
                            | Rule::WPrime
                            | Rule::WUnitPlus
                            | Rule::WUnitTimes
                            | Rule::CPrime
                            | Rule::EPrime
                    ))
                    || (self == System::DlbiRad && rule == Rule::Rad)
            }
            System::All => true,
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// Premise recipes
// ---------------------------------------------------------------------------

/// Left or right immediate subformula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Where the label of a newly built `,` node comes from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LabelSource {
    /// No justifying connective: a fresh label.
    Fresh,
    /// The principal connective of the formula leaf at this path.
    Leaf(Path),
    /// The principal connective of the goal.
    Goal,
    /// The `,` node of the conclusion at this path.
    Node(Path),
}

/// A piece of a premise context, described relative to the conclusion.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Piece {
    /// A copy of the conclusion's sub-bunch at a location.
    Sub(Loc),
    /// An immediate subformula of the formula leaf at a path.
    Part(Path, Side),
    /// An immediate subformula of the goal.
    Goal(Side),
    /// A unit.
    Unit(Former),
    /// Pieces combined under a former.
    Combine(Former, Vec<Piece>, LabelSource),
}

/// How a premise context is obtained from the conclusion context.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ContextRecipe {
    Same,
    Build(Piece),
    Replace(Loc, Piece),
}

/// How a premise goal is obtained from the conclusion.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GoalRecipe {
    Same,
    Part(Side),
    LeafPart(Path, Side),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PremiseRecipe {
    pub context: ContextRecipe,
    pub goal: GoalRecipe,
}

fn formula_part(f: &Formula, side: Side) -> Formula {
    let (l, r) = f.children().expect("binary connective");
    match side {
        Side::Left => l.clone(),
        Side::Right => r.clone(),
    }
}

fn leaf_formula<'a>(g: &'a Bunch, path: &[usize]) -> &'a Formula {
    get(g, path).and_then(Bunch::as_formula).expect("recipe refers to a formula leaf")
}

fn eval_piece(c: &Sequent, piece: &Piece) -> Bunch {
    match piece {
        Piece::Sub(loc) => sub_at(&c.context, loc).expect("recipe location is valid"),
        Piece::Part(path, side) => Bunch::Leaf(formula_part(leaf_formula(&c.context, path), *side)),
        Piece::Goal(side) => Bunch::Leaf(formula_part(&c.goal, *side)),
        Piece::Unit(f) => f.unit(),
        Piece::Combine(f, ps, _) => Bunch::combine(*f, ps.iter().map(|p| eval_piece(c, p)).collect()),
    }
}

/// Build a premise (with canonical context) from a conclusion and a recipe.
pub fn eval_premise(c: &Sequent, r: &PremiseRecipe) -> Sequent {
    let context = match &r.context {
        ContextRecipe::Same => c.context.clone(),
        ContextRecipe::Build(p) => eval_piece(c, p),
        ContextRecipe::Replace(loc, p) => replace(&c.context, loc, eval_piece(c, p)).expect("recipe location is valid"),
    };
    let goal = match &r.goal {
        GoalRecipe::Same => c.goal.clone(),
        GoalRecipe::Part(side) => formula_part(&c.goal, *side),
        GoalRecipe::LeafPart(path, side) => formula_part(leaf_formula(&c.context, path), *side),
    };
    Sequent::new(canonicalize(&context), goal)
}

// ---------------------------------------------------------------------------
// Rule instances and backward enumeration
// ---------------------------------------------------------------------------

/// A rule application: the rule, the paths of its active sub-bunches in the
/// conclusion (informational), and the bunch parameter Σ when the rule has
/// one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RuleInstance {
    pub rule: Rule,
    pub active: Vec<Path>,
    pub sigma: Option<Bunch>,
}

impl RuleInstance {
    pub fn new(rule: Rule) -> RuleInstance {
        RuleInstance { rule, active: Vec::new(), sigma: None }
    }

    pub fn with_sigma(rule: Rule, sigma: Bunch) -> RuleInstance {
        RuleInstance { rule, active: Vec::new(), sigma: Some(canonicalize(&sigma)) }
    }
}

/// One backward reading of a rule at a canonical conclusion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub instance: RuleInstance,
    pub premises: Vec<Sequent>,
    pub recipes: Vec<PremiseRecipe>,
    /// Location of Σ in the conclusion, for rules with a parameter.
    pub sigma_loc: Option<Loc>,
}

struct Builder<'a> {
    concl: &'a Sequent,
    rule: Rule,
    out: Vec<Candidate>,
    seen: HashSet<(Vec<Sequent>, Option<Bunch>)>,
}

impl<'a> Builder<'a> {
    fn push(&mut self, active: Vec<Path>, sigma_loc: Option<Loc>, recipes: Vec<PremiseRecipe>) {
        let premises: Vec<Sequent> = recipes.iter().map(|r| eval_premise(self.concl, r)).collect();
        let sigma = sigma_loc.as_ref().map(|l| canonicalize(&sub_at(&self.concl.context, l).expect("valid")));
        if self.seen.insert((premises.clone(), sigma.clone())) {
            self.out.push(Candidate {
                instance: RuleInstance { rule: self.rule, active, sigma },
                premises,
                recipes,
                sigma_loc,
            });
        }
    }
}

fn pr(context: ContextRecipe, goal: GoalRecipe) -> PremiseRecipe {
    PremiseRecipe { context, goal }
}

fn child(path: &[usize], i: usize) -> Path {
    let mut p = path.to_vec();
    p.push(i);
    p
}

fn subs(path: &[usize], idxs: &[usize]) -> Vec<Piece> {
    idxs.iter().map(|&i| Piece::Sub(Loc::Node(child(path, i)))).collect()
}

/// Leaves of the context holding a formula, with their paths.
fn leaves(g: &Bunch) -> Vec<(Path, Formula)> {
    node_paths(g)
        .into_iter()
        .filter_map(|p| get(g, &p).and_then(Bunch::as_formula).map(|f| (p.clone(), f.clone())))
        .collect()
}

/// Locations whose sub-bunch is `Σ` for a weakening: proper groups of `Add`
/// children (single children as nodes).
fn weakening_sites(g: &Bunch) -> Vec<(Path, Vec<usize>, Loc)> {
    let mut out = Vec::new();
    for q in node_paths(g) {
        let node = get(g, &q).expect("valid");
        if node.former() != Some(Former::Add) {
            continue;
        }
        let n = node.children().len();
        for removed in index_subsets(n, 1) {
            if removed.len() == n {
                continue;
            }
            let loc = if removed.len() == 1 {
                Loc::Node(child(&q, removed[0]))
            } else {
                Loc::Group(q.clone(), removed.clone())
            };
            out.push((q.clone(), removed, loc));
        }
    }
    out
}

fn remove_recipe(g: &Bunch, q: &Path, removed: &[usize]) -> PremiseRecipe {
    let node = get(g, q).expect("valid");
    let former = node.former().expect("complex");
    let kept: Vec<usize> = (0..node.children().len()).filter(|i| !removed.contains(i)).collect();
    let label = if former == Former::Mul { LabelSource::Node(q.clone()) } else { LabelSource::Fresh };
    pr(ContextRecipe::Replace(Loc::Node(q.clone()), Piece::Combine(former, subs(q, &kept), label)), GoalRecipe::Same)
}

/// Every backward instance of `rule` whose conclusion is `concl` (which
/// should be canonical; paths refer to it). Exchange `E` is not
/// enumerable and yields nothing; it is checked directly.
pub fn backward(rule: Rule, concl: &Sequent) -> Vec<Candidate> {
    let mut b = Builder { concl, rule, out: Vec::new(), seen: HashSet::new() };
    let g = &concl.context;
    let goal = &concl.goal;
    use ContextRecipe as Cx;
    use GoalRecipe as Gl;
    match rule {
        Rule::Id => {
            if *g == Bunch::Leaf(goal.clone()) {
                b.push(vec![vec![]], None, vec![]);
            }
        }
        Rule::BotL | Rule::BotLPrime => {
            if rule == Rule::BotLPrime && !is_normal(g) {
                return b.out;
            }
            if let Some((p, _)) = leaves(g).into_iter().find(|(_, f)| *f == Formula::Bot) {
                b.push(vec![p], None, vec![]);
            }
        }
        Rule::TopR => {
            if *g == Bunch::UnitPlus && *goal == Formula::Top {
                b.push(vec![], None, vec![]);
            }
        }
        Rule::OneR => {
            if *g == Bunch::UnitTimes && *goal == Formula::One {
                b.push(vec![], None, vec![]);
            }
        }
        Rule::OneL | Rule::TopL | Rule::AndL | Rule::StarL | Rule::OrL => {
            for (p, f) in leaves(g) {
                let at = Loc::Node(p.clone());
                let parts = || vec![Piece::Part(p.clone(), Side::Left), Piece::Part(p.clone(), Side::Right)];
                match (rule, &f) {
                    (Rule::OneL, Formula::One) => {
                        b.push(vec![p.clone()], None, vec![pr(Cx::Replace(at, Piece::Unit(Former::Mul)), Gl::Same)])
                    }
                    (Rule::TopL, Formula::Top) => {
                        b.push(vec![p.clone()], None, vec![pr(Cx::Replace(at, Piece::Unit(Former::Add)), Gl::Same)])
                    }
                    (Rule::AndL, Formula::And(..)) => b.push(
                        vec![p.clone()],
                        None,
                        vec![pr(Cx::Replace(at, Piece::Combine(Former::Add, parts(), LabelSource::Fresh)), Gl::Same)],
                    ),
                    (Rule::StarL, Formula::Star(..)) => b.push(
                        vec![p.clone()],
                        None,
                        vec![pr(
                            Cx::Replace(at, Piece::Combine(Former::Mul, parts(), LabelSource::Leaf(p.clone()))),
                            Gl::Same,
                        )],
                    ),
                    (Rule::OrL, Formula::Or(..)) => b.push(
                        vec![p.clone()],
                        None,
                        vec![
                            pr(Cx::Replace(at.clone(), Piece::Part(p.clone(), Side::Left)), Gl::Same),
                            pr(Cx::Replace(at, Piece::Part(p.clone(), Side::Right)), Gl::Same),
                        ],
                    ),
                    _ => {}
                }
            }
        }
        Rule::ImpL
        | Rule::ImpL1
        | Rule::ImpL2
        | Rule::ImpL3
        | Rule::WandL
        | Rule::WandL1
        | Rule::WandL2
        | Rule::WandL3 => {
            let (former, want_imp) = match rule {
                Rule::ImpL | Rule::ImpL1 | Rule::ImpL2 | Rule::ImpL3 => (Former::Add, true),
                _ => (Former::Mul, false),
            };
            for (p, f) in leaves(g) {
                let matches = if want_imp { matches!(f, Formula::Imp(..)) } else { matches!(f, Formula::Wand(..)) };
                if !matches {
                    continue;
                }
                let left_goal = Gl::LeafPart(p.clone(), Side::Left);
                let psi = Piece::Part(p.clone(), Side::Right);
                let unit = Piece::Unit(former);
                let unit_left = pr(Cx::Build(unit.clone()), left_goal.clone());
                let label_leaf =
                    || if former == Former::Mul { LabelSource::Leaf(p.clone()) } else { LabelSource::Fresh };
                if matches!(rule, Rule::ImpL3 | Rule::WandL3) {
                    let right = Piece::Combine(former, vec![unit.clone(), psi.clone()], label_leaf());
                    b.push(
                        vec![p.clone()],
                        None,
                        vec![unit_left, pr(Cx::Replace(Loc::Node(p.clone()), right), Gl::Same)],
                    );
                    continue;
                }
                let Some((&k, q)) = p.split_last() else { continue };
                let q = q.to_vec();
                let parent = get(g, &q).expect("valid");
                if parent.former() != Some(former) {
                    continue;
                }
                if matches!(rule, Rule::ImpL2 | Rule::WandL2) {
                    b.push(
                        vec![p.clone()],
                        None,
                        vec![unit_left, pr(Cx::Replace(Loc::Node(p.clone()), psi.clone()), Gl::Same)],
                    );
                    continue;
                }
                let siblings: Vec<usize> = (0..parent.children().len()).filter(|&i| i != k).collect();
                let label_node =
                    || if former == Former::Mul { LabelSource::Node(q.clone()) } else { LabelSource::Fresh };
                for pick in index_subsets(siblings.len(), 1) {
                    let d: Vec<usize> = pick.iter().map(|&i| siblings[i]).collect();
                    let rest: Vec<usize> = siblings.iter().copied().filter(|i| !d.contains(i)).collect();
                    let left = pr(Cx::Build(Piece::Combine(former, subs(&q, &d), label_node())), left_goal.clone());
                    let mut right_pieces = subs(&q, &rest);
                    if matches!(rule, Rule::ImpL1 | Rule::WandL1) {
                        right_pieces.push(unit.clone());
                    }
                    right_pieces.push(psi.clone());
                    let right = pr(
                        Cx::Replace(Loc::Node(q.clone()), Piece::Combine(former, right_pieces, label_node())),
                        Gl::Same,
                    );
                    let mut active = vec![p.clone()];
                    active.extend(d.iter().map(|&i| child(&q, i)));
                    b.push(active, None, vec![left, right]);
                }
            }
        }
        Rule::OrR1 | Rule::OrR2 => {
            if matches!(goal, Formula::Or(..)) {
                let side = if rule == Rule::OrR1 { Side::Left } else { Side::Right };
                b.push(vec![], None, vec![pr(Cx::Same, Gl::Part(side))]);
            }
        }
        Rule::ImpR | Rule::WandR => {
            let (former, ok, label) = match rule {
                Rule::ImpR => (Former::Add, matches!(goal, Formula::Imp(..)), LabelSource::Fresh),
                _ => (Former::Mul, matches!(goal, Formula::Wand(..)), LabelSource::Goal),
            };
            if ok {
                let ctx = Piece::Combine(former, vec![Piece::Sub(Loc::Node(vec![])), Piece::Goal(Side::Left)], label);
                b.push(vec![], None, vec![pr(Cx::Build(ctx), Gl::Part(Side::Right))]);
            }
        }
        Rule::AndR | Rule::StarR => {
            let (former, ok) = match rule {
                Rule::AndR => (Former::Add, matches!(goal, Formula::And(..))),
                _ => (Former::Mul, matches!(goal, Formula::Star(..))),
            };
            if ok && g.former() == Some(former) {
                let n = g.children().len();
                let label = if former == Former::Mul { LabelSource::Node(vec![]) } else { LabelSource::Fresh };
                for left in index_subsets(n, 1) {
                    if left.len() == n {
                        continue;
                    }
                    let right: Vec<usize> = (0..n).filter(|i| !left.contains(i)).collect();
                    b.push(
                        vec![],
                        None,
                        vec![
                            pr(
                                Cx::Build(Piece::Combine(former, subs(&[], &left), label.clone())),
                                Gl::Part(Side::Left),
                            ),
                            pr(
                                Cx::Build(Piece::Combine(former, subs(&[], &right), label.clone())),
                                Gl::Part(Side::Right),
                            ),
                        ],
                    );
                }
            }
        }
        Rule::AndR1 | Rule::AndR2 | Rule::StarR1 | Rule::StarR2 => {
            let (unit, ok) = match rule {
                Rule::AndR1 | Rule::AndR2 => (Former::Add, matches!(goal, Formula::And(..))),
                _ => (Former::Mul, matches!(goal, Formula::Star(..))),
            };
            if ok {
                let first = matches!(rule, Rule::AndR1 | Rule::StarR1);
                let (lc, rc) = if first {
                    (Cx::Build(Piece::Unit(unit)), Cx::Same)
                } else {
                    (Cx::Same, Cx::Build(Piece::Unit(unit)))
                };
                b.push(vec![], None, vec![pr(lc, Gl::Part(Side::Left)), pr(rc, Gl::Part(Side::Right))]);
            }
        }
        Rule::E => {}
        Rule::EPrime => b.push(vec![], None, vec![pr(Cx::Same, Gl::Same)]),
        Rule::W | Rule::WPrime => {
            for (q, removed, loc) in weakening_sites(g) {
                if rule == Rule::WPrime && !is_normal(&sub_at(g, &loc).expect("valid")) {
                    continue;
                }
                let recipe = remove_recipe(g, &q, &removed);
                b.push(vec![loc.path().clone()], Some(loc), vec![recipe]);
            }
        }
        Rule::WUnitPlus | Rule::WUnitTimes => {
            let (former, unit) =
                if rule == Rule::WUnitPlus { (Former::Add, Bunch::UnitPlus) } else { (Former::Mul, Bunch::UnitTimes) };
            for q in node_paths(g) {
                let node = get(g, &q).expect("valid");
                if node.former() != Some(former) {
                    continue;
                }
                for (i, c) in node.children().iter().enumerate() {
                    if *c == unit {
                        b.push(vec![child(&q, i)], None, vec![remove_recipe(g, &q, &[i])]);
                    }
                }
            }
        }
        Rule::C | Rule::CPrime => {
            for loc in locations(g) {
                let x = sub_at(g, &loc).expect("valid");
                if rule == Rule::CPrime && !is_normal(&x) {
                    continue;
                }
                let dup = Piece::Combine(
                    Former::Add,
                    vec![Piece::Sub(loc.clone()), Piece::Sub(loc.clone())],
                    LabelSource::Fresh,
                );
                b.push(vec![loc.path().clone()], None, vec![pr(Cx::Replace(loc, dup), Gl::Same)]);
            }
        }
        Rule::CUnitTimes | Rule::CUnitPlus | Rule::Rad => {
            let (former, unit) = match rule {
                Rule::CUnitTimes => (Former::Mul, Former::Mul),
                Rule::CUnitPlus => (Former::Add, Former::Add),
                _ => (Former::Mul, Former::Add),
            };
            for loc in locations(g) {
                let label = match (&loc, former) {
                    (Loc::Group(q, _), Former::Mul) if get(g, q).and_then(Bunch::former) == Some(Former::Mul) => {
                        LabelSource::Node(q.clone())
                    }
                    _ => LabelSource::Fresh,
                };
                let piece = Piece::Combine(former, vec![Piece::Sub(loc.clone()), Piece::Unit(unit)], label);
                b.push(vec![loc.path().clone()], None, vec![pr(Cx::Replace(loc, piece), Gl::Same)]);
            }
        }
        Rule::Inst => {
            for loc in locations(g) {
                let x = sub_at(g, &loc).expect("valid");
                if x == Bunch::UnitPlus || !is_normal(&x) {
                    continue;
                }
                b.push(
                    vec![loc.path().clone()],
                    Some(loc.clone()),
                    vec![pr(Cx::Replace(loc, Piece::Unit(Former::Add)), Gl::Same)],
                );
            }
        }
    }
    b.out
}

/// Every backward instance of every rule of `system` at `concl`.
pub fn backward_all(system: System, concl: &Sequent) -> Vec<Candidate> {
    let c = concl.canonical();
    system.rules().into_iter().flat_map(|r| backward(r, &c)).collect()
}

/// Backward instances of the system's rules at `goal` whose premises all
/// respect `bounds`.
pub fn expand(system: System, goal: &Sequent, bounds: &SearchBounds) -> Vec<(RuleInstance, Vec<Sequent>)> {
    backward_all(system, goal)
        .into_iter()
        .filter(|c| c.premises.iter().all(|p| bounds.admits(p)))
        .map(|c| (c.instance, c.premises))
        .collect()
}

// ---------------------------------------------------------------------------
// Checking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("rule {rule} is not a rule of {system}")]
    NotInSystem { rule: Rule, system: System },
    #[error("rule {rule} takes {expected} premises, got {got}")]
    Arity { rule: Rule, expected: usize, got: usize },
    #[error("the parameter of {0} must be a normal bunch")]
    SigmaNotNormal(Rule),
    #[error("the premises do not match any instance of {0} at this conclusion")]
    NoMatch(Rule),
}

fn find_candidate(inst: &RuleInstance, premises: &[Sequent], conclusion: &Sequent) -> Option<Candidate> {
    let c = conclusion.canonical();
    let ps: Vec<Sequent> = premises.iter().map(Sequent::canonical).collect();
    let sigma = inst.sigma.as_ref().map(canonicalize);
    backward(inst.rule, &c)
        .into_iter()
        .find(|cand| cand.premises == ps && (sigma.is_none() || cand.instance.sigma == sigma))
}

/// Is `inst` a correct application of its rule in `system`, with these
/// premises and conclusion? Contexts are compared up to ≅.
pub fn check_inference(
    system: System,
    inst: &RuleInstance,
    premises: &[Sequent],
    conclusion: &Sequent,
) -> Result<(), CheckError> {
    let rule = inst.rule;
    if !system.contains(rule) {
        return Err(CheckError::NotInSystem { rule, system });
    }
    if premises.len() != rule.arity() {
        return Err(CheckError::Arity { rule, expected: rule.arity(), got: premises.len() });
    }
    if let Some(s) = &inst.sigma {
        if matches!(rule, Rule::WPrime | Rule::Inst) && !is_normal(s) {
            return Err(CheckError::SigmaNotNormal(rule));
        }
    }
    if rule == Rule::E {
        let p = &premises[0];
        return if p.goal == conclusion.goal && coherent_equal(&p.context, &conclusion.context) {
            Ok(())
        } else {
            Err(CheckError::NoMatch(rule))
        };
    }
    find_candidate(inst, premises, conclusion).map(|_| ()).ok_or(CheckError::NoMatch(rule))
}

// ---------------------------------------------------------------------------
// Derivations
// ---------------------------------------------------------------------------

/// A proof tree. A node without a rule is a hypothesis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub sequent: Sequent,
    pub rule: Option<RuleInstance>,
    pub children: Vec<Derivation>,
}

impl Derivation {
    pub fn leaf(sequent: Sequent, rule: Rule) -> Derivation {
        Derivation { sequent, rule: Some(RuleInstance::new(rule)), children: Vec::new() }
    }

    pub fn hypothesis(sequent: Sequent) -> Derivation {
        Derivation { sequent, rule: None, children: Vec::new() }
    }

    pub fn node(sequent: Sequent, rule: RuleInstance, children: Vec<Derivation>) -> Derivation {
        Derivation { sequent, rule: Some(rule), children }
    }

    pub fn rule_id(&self) -> Option<Rule> {
        self.rule.as_ref().map(|r| r.rule)
    }

    /// Every sequent, in pre-order.
    pub fn sequents(&self) -> Vec<&Sequent> {
        let mut out = vec![&self.sequent];
        for c in &self.children {
            out.extend(c.sequents());
        }
        out
    }

    /// Every node with its tree address (child indices from the root), in
    /// pre-order.
    pub fn nodes(&self) -> Vec<(Vec<usize>, &Derivation)> {
        let mut out = Vec::new();
        fn walk<'a>(d: &'a Derivation, at: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, &'a Derivation)>) {
            out.push((at.clone(), d));
            for (i, c) in d.children.iter().enumerate() {
                at.push(i);
                walk(c, at, out);
                at.pop();
            }
        }
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Derivation::size).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(Derivation::height).max().unwrap_or(0)
    }

    /// How many inferences use `rule`.
    pub fn count_rule(&self, rule: Rule) -> usize {
        self.nodes().iter().filter(|(_, d)| d.rule_id() == Some(rule)).count()
    }

    /// The premises of this node's inference.
    pub fn premises(&self) -> Vec<Sequent> {
        self.children.iter().map(|c| c.sequent.clone()).collect()
    }

    /// The supremum of a measure over every sequent.
    pub fn measure(&self, f: Measure) -> usize {
        self.sequents().iter().map(|s| crate::measures::measure_sequent(s, f)).max().unwrap_or(0)
    }

    pub fn measures(&self) -> Measures {
        self.sequents().iter().map(|s| sequent_measures(s)).fold(Measures::default(), Measures::max)
    }

    /// No sequent occurs twice (up to ≅) on any root-to-leaf branch.
    pub fn is_concise(&self) -> bool {
        fn walk(d: &Derivation, seen: &mut Vec<Sequent>) -> bool {
            let key = d.sequent.canonical();
            if seen.contains(&key) {
                return false;
            }
            seen.push(key);
            let ok = d.children.iter().all(|c| walk(c, seen));
            seen.pop();
            ok
        }
        walk(self, &mut Vec::new())
    }
}

/// The first failing node of a derivation check.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at node {node:?} ({sequent}): {reason}")]
pub struct DerivationError {
    pub node: Vec<usize>,
    pub sequent: String,
    pub reason: String,
}

/// Check every inference of `d` in `system`; hypothesis leaves must be
/// ≅-equal to a member of `hyps`.
pub fn check_derivation(system: System, d: &Derivation, hyps: &[Sequent]) -> Result<(), DerivationError> {
    let hyps: Vec<Sequent> = hyps.iter().map(Sequent::canonical).collect();
    for (at, node) in d.nodes() {
        let fail = |reason: String| DerivationError { node: at.clone(), sequent: node.sequent.to_string(), reason };
        match &node.rule {
            None => {
                if !node.children.is_empty() {
                    return Err(fail("a hypothesis has premises".into()));
                }
                if !hyps.contains(&node.sequent.canonical()) {
                    return Err(fail("dangling leaf: not an axiom and not a hypothesis".into()));
                }
            }
            Some(inst) => {
                check_inference(system, inst, &node.premises(), &node.sequent).map_err(|e| fail(e.to_string()))?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Proof interchange format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofFormatError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("malformed proof node: {0}")]
    Malformed(String),
}

/// The rule name used for hypothesis leaves.
pub const HYPOTHESIS: &str = "Hyp";

/// Serialize a derivation as an interchange-format JSON value.
pub fn to_json(d: &Derivation) -> Value {
    let mut params = Map::new();
    let (rule, active) = match &d.rule {
        None => (HYPOTHESIS.to_string(), Vec::new()),
        Some(inst) => {
            if let Some(s) = &inst.sigma {
                params.insert("sigma".into(), Value::String(s.to_string()));
            }
            (inst.rule.name().to_string(), inst.active.clone())
        }
    };
    params.insert("active".into(), json!(active));
    json!({
        "sequent": d.sequent.to_string(),
        "rule": rule,
        "params": Value::Object(params),
        "children": d.children.iter().map(to_json).collect::<Vec<_>>(),
    })
}

pub fn to_json_string(d: &Derivation) -> String {
    serde_json::to_string_pretty(&to_json(d)).expect("JSON values serialize")
}

/// Read a derivation from an interchange-format JSON value. Unknown fields
/// (such as labels) are ignored.
pub fn from_json(v: &Value) -> Result<Derivation, ProofFormatError> {
    let bad = |m: &str| ProofFormatError::Malformed(m.to_string());
    let obj = v.as_object().ok_or_else(|| bad("node is not an object"))?;
    let text = obj.get("sequent").and_then(Value::as_str).ok_or_else(|| bad("missing sequent"))?;
    let sequent = parse_sequent(text).map_err(|e| ProofFormatError::Malformed(format!("sequent {text:?}: {e}")))?;
    let rule_name = obj.get("rule").and_then(Value::as_str).ok_or_else(|| bad("missing rule"))?;
    let children = match obj.get("children") {
        None => Vec::new(),
        Some(c) => c
            .as_array()
            .ok_or_else(|| bad("children is not an array"))?
            .iter()
            .map(from_json)
            .collect::<Result<Vec<_>, _>>()?,
    };
    if rule_name == HYPOTHESIS {
        return Ok(Derivation { sequent, rule: None, children });
    }
    let rule =
        Rule::from_name(rule_name).ok_or_else(|| ProofFormatError::Malformed(format!("unknown rule {rule_name:?}")))?;
    let mut inst = RuleInstance::new(rule);
    if let Some(params) = obj.get("params") {
        let params = params.as_object().ok_or_else(|| bad("params is not an object"))?;
        if let Some(s) = params.get("sigma") {
            let s = s.as_str().ok_or_else(|| bad("sigma is not a string"))?;
            inst.sigma = Some(parse_bunch(s).map_err(|e| ProofFormatError::Malformed(format!("sigma {s:?}: {e}")))?);
        }
        if let Some(a) = params.get("active") {
            let arr = a.as_array().ok_or_else(|| bad("active is not an array"))?;
            for p in arr {
                let path = p
                    .as_array()
                    .ok_or_else(|| bad("active entry is not an array"))?
                    .iter()
                    .map(|i| i.as_u64().map(|i| i as usize).ok_or_else(|| bad("path index is not a number")))
                    .collect::<Result<Path, _>>()?;
                inst.active.push(path);
            }
        }
    }
    Ok(Derivation { sequent, rule: Some(inst), children })
}

pub fn from_json_str(text: &str) -> Result<Derivation, ProofFormatError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ProofFormatError::Json(e.to_string()))?;
    from_json(&v)
}

// ---------------------------------------------------------------------------
// Actions, phases and regimentation
// ---------------------------------------------------------------------------

/// Is the bunch at `loc` duplicit in `g`: additively combined with a
/// ≅-copy of itself (another child group of the same `Add` node)?
pub fn is_duplicit_at(g: &Bunch, loc: &Loc) -> bool {
    let (q, idxs) = match loc {
        Loc::Node(p) => match p.split_last() {
            None => return false,
            Some((&i, q)) => (q.to_vec(), vec![i]),
        },
        Loc::Group(q, idxs) => (q.clone(), idxs.clone()),
    };
    let Some(node) = get(g, &q) else { return false };
    if node.former() != Some(Former::Add) {
        return false;
    }
    let cs = node.children();
    let mut want: Vec<Bunch> = idxs.iter().map(|&i| canonicalize(&cs[i])).collect();
    want.sort();
    let mut others: Vec<Bunch> = (0..cs.len()).filter(|i| !idxs.contains(i)).map(|i| canonicalize(&cs[i])).collect();
    others.sort();
    // Sub-multiset test on sorted lists.
    let mut j = 0;
    for w in &want {
        while j < others.len() && others[j] < *w {
            j += 1;
        }
        if j == others.len() || others[j] != *w {
            return false;
        }
        j += 1;
    }
    true
}

/// Is this rule instance an action? Logical rules, axioms and `Rad` always
/// are; weakening and instantiation are actions exactly when the introduced
/// Σ is not duplicit in the conclusion.
pub fn is_action(inst: &RuleInstance, premises: &[Sequent], conclusion: &Sequent) -> bool {
    match inst.rule {
        Rule::W | Rule::WPrime | Rule::Inst => match find_candidate(inst, premises, conclusion) {
            Some(c) => {
                let loc = c.sigma_loc.expect("parameterised rule");
                !is_duplicit_at(&conclusion.canonical().context, &loc)
            }
            None => false,
        },
        r => r.is_logical() || r == Rule::Rad,
    }
}

fn contraction_reducts(s: &Sequent) -> Vec<Sequent> {
    reducts(&s.context, Mode::Big)
        .into_iter()
        .filter(|(step, _)| matches!(step, ReductionStep::Contract { .. }))
        .map(|(_, g)| Sequent::new(g, s.goal.clone()))
        .collect()
}

/// Is an action regimented: every duplicit sub-bunch of every premise is
/// active? A duplicit copy is inactive when removing it from the premise
/// still yields an instance of the rule whose conclusion is obtained from
/// the original conclusion by contraction alone.
pub fn is_regimented_action(inst: &RuleInstance, premises: &[Sequent], conclusion: &Sequent) -> bool {
    is_regimented_action_cached(inst, premises, conclusion, &mut RegimentCache::default())
}

/// Work shared between regimentation checks of many candidate actions: the
/// contraction closures of conclusions and the premise lists each rule
/// admits below a given conclusion.
#[derive(Default)]
pub struct RegimentCache {
    targets: HashMap<Sequent, Vec<Sequent>>,
    admitted: HashMap<(Rule, Sequent), HashSet<Vec<Sequent>>>,
}

/// [`is_regimented_action`] reusing `cache` across calls.
pub fn is_regimented_action_cached(
    inst: &RuleInstance,
    premises: &[Sequent],
    conclusion: &Sequent,
    cache: &mut RegimentCache,
) -> bool {
    let ps: Vec<Sequent> = premises.iter().map(Sequent::canonical).collect();
    let targets = cache
        .targets
        .entry(conclusion.clone())
        .or_insert_with(|| {
            contraction_closure(&conclusion.context)
                .into_iter()
                .map(|g| Sequent::new(g, conclusion.goal.clone()))
                .collect()
        })
        .clone();
    for i in 0..ps.len() {
        for reduced in contraction_reducts(&ps[i]) {
            let mut modified = ps.clone();
            modified[i] = reduced;
            for t in &targets {
                let admitted = cache
                    .admitted
                    .entry((inst.rule, t.clone()))
                    .or_insert_with(|| backward(inst.rule, t).into_iter().map(|c| c.premises).collect());
                if admitted.contains(&modified) {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HatError {
    #[error("the inference is not an instance of {0}")]
    NotAnInstance(Rule),
    #[error("the inference is not a regimented action")]
    NotRegimentedAction,
    #[error("the reduced conclusion does not reduce to a normal form of the conclusion")]
    Maintenance,
}

/// The reduced forms of an action: premises `P̂ᵢ` obtained from the `Pᵢ` by
/// reduction, and a conclusion `Ĉ` obtained from `C` by reduction, such that
/// the rule still applies, with the premises as small as possible. Unit
/// removals are allowed when `with_units` is set. Post-check: `Ĉ` and `C`
/// have the same normal form.
pub fn reduced_forms(
    inst: &RuleInstance,
    premises: &[Sequent],
    conclusion: &Sequent,
    with_units: bool,
) -> Result<(Vec<Sequent>, Sequent), HatError> {
    let ps: Vec<Sequent> = premises.iter().map(Sequent::canonical).collect();
    let closure = |g: &Bunch| -> BTreeSet<Bunch> {
        if with_units {
            reduct_closure(g, Mode::Big)
        } else {
            contraction_closure(g)
        }
    };
    let premise_closures: Vec<BTreeSet<Bunch>> = ps.iter().map(|p| closure(&p.context)).collect();
    let mut best: Option<(usize, Vec<Sequent>, Sequent)> = None;
    for t in closure(&conclusion.context) {
        let t = Sequent::new(t, conclusion.goal.clone());
        for cand in backward(inst.rule, &t) {
            let fits = cand
                .premises
                .iter()
                .zip(&ps)
                .zip(&premise_closures)
                .all(|((cp, p), cl)| cp.goal == p.goal && cl.contains(&cp.context));
            if !fits {
                continue;
            }
            let size: usize =
                cand.premises.iter().map(|p| p.context.leaf_count()).sum::<usize>() + t.context.leaf_count();
            let better = match &best {
                None => true,
                Some((s, bp, bt)) => (size, &cand.premises, &t) < (*s, bp, bt),
            };
            if better {
                best = Some((size, cand.premises.clone(), t.clone()));
            }
        }
    }
    let (_, hat_p, hat_c) = best.ok_or(HatError::NotAnInstance(inst.rule))?;
    if crate::rewriting::normal_form(&hat_c.context) != crate::rewriting::normal_form(&conclusion.context) {
        return Err(HatError::Maintenance);
    }
    Ok((hat_p, hat_c))
}

/// `P̂ᵢ` and `Ĉ` for a regimented action, removing inactive material by
/// contraction.
pub fn hat_forms(
    inst: &RuleInstance,
    premises: &[Sequent],
    conclusion: &Sequent,
) -> Result<(Vec<Sequent>, Sequent), HatError> {
    if find_candidate(inst, premises, conclusion).is_none() {
        return Err(HatError::NotAnInstance(inst.rule));
    }
    if !is_action(inst, premises, conclusion) || !is_regimented_action(inst, premises, conclusion) {
        return Err(HatError::NotRegimentedAction);
    }
    reduced_forms(inst, premises, conclusion, false)
}

/// The phase of an inference in a regimented proof.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Action,
    /// Weakenings adding duplicit material or units, feeding an action.
    Loading,
    /// Contractions removing material after an action.
    Normalizing,
    /// Exchange.
    Neutral,
    /// A hypothesis leaf.
    Open,
}

/// The phase of the inference at a node.
pub fn phase_of(d: &Derivation) -> Phase {
    let Some(inst) = &d.rule else { return Phase::Open };
    match inst.rule {
        Rule::E | Rule::EPrime => Phase::Neutral,
        Rule::C | Rule::CPrime | Rule::CUnitPlus | Rule::CUnitTimes => Phase::Normalizing,
        Rule::WUnitPlus | Rule::WUnitTimes => Phase::Loading,
        Rule::W | Rule::WPrime | Rule::Inst => {
            if is_action(inst, &d.premises(), &d.sequent) {
                Phase::Action
            } else {
                Phase::Loading
            }
        }
        _ => Phase::Action,
    }
}

/// Every node's address and phase, in pre-order.
pub fn classify_phases(d: &Derivation) -> Vec<(Vec<usize>, Phase)> {
    d.nodes().into_iter().map(|(at, n)| (at, phase_of(n))).collect()
}

/// The first reason a derivation is not regimented, if any.
pub fn regimentation_failure(d: &Derivation) -> Option<(Vec<usize>, String)> {
    regimentation_failure_in(d, false)
}

/// Like [`regimentation_failure`], for a derivation that sits above an
/// action (`after_action`), where loading steps are already allowed.
pub fn regimentation_failure_in(d: &Derivation, after_action: bool) -> Option<(Vec<usize>, String)> {
    #[derive(Clone, Copy, PartialEq, Eq)]
    enum State {
        Normalizing,
        Loading,
    }
    fn walk(d: &Derivation, state: State, at: &mut Vec<usize>) -> Option<(Vec<usize>, String)> {
        let next = match phase_of(d) {
            Phase::Open => return None,
            Phase::Neutral => state,
            Phase::Normalizing => State::Normalizing,
            Phase::Loading => {
                if state != State::Loading {
                    return Some((at.clone(), "loading step below a normalizing step without an action".into()));
                }
                State::Loading
            }
            Phase::Action => {
                let inst = d.rule.as_ref().expect("action");
                if !is_regimented_action(inst, &d.premises(), &d.sequent) {
                    return Some((at.clone(), format!("{} is an unregimented action", inst.rule)));
                }
                State::Loading
            }
        };
        for (i, c) in d.children.iter().enumerate() {
            at.push(i);
            let r = walk(c, next, at);
            at.pop();
            if r.is_some() {
                return r;
            }
        }
        None
    }
    let start = if after_action { State::Loading } else { State::Normalizing };
    walk(d, start, &mut Vec::new())
}

/// Does every branch follow the pattern (normalizing* action loading*)*
/// with regimented actions?
pub fn is_regimented(d: &Derivation) -> bool {
    regimentation_failure(d).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{bunch, seq};

    fn inf(rule: Rule, premises: &[&str], conclusion: &str) -> Result<(), CheckError> {
        let ps: Vec<Sequent> = premises.iter().map(|p| seq(p)).collect();
        check_inference(System::All, &RuleInstance::new(rule), &ps, &seq(conclusion))
    }

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(Rule::from_name(r.name()), Some(r));
        }
    }

    #[test]
    fn system_membership() {
        assert!(System::Lbi.contains(Rule::W));
        assert!(!System::Lbi.contains(Rule::WPrime));
        assert!(System::Slbi.contains(Rule::CUnitTimes));
        assert!(!System::Slbi.contains(Rule::BotL));
        assert!(!System::Dlbi.contains(Rule::CUnitTimes));
        assert!(System::Dlbi.contains(Rule::Inst));
        assert!(!System::Dlbi.contains(Rule::Rad));
        assert!(System::DlbiRad.contains(Rule::Rad));
    }

    #[test]
    fn axioms() {
        assert!(inf(Rule::Id, &[], "p |- p").is_ok());
        assert!(inf(Rule::Id, &[], "p ; q |- p").is_err());
        assert!(inf(Rule::TopR, &[], "o+ |- top").is_ok());
        assert!(inf(Rule::OneR, &[], "ox |- I").is_ok());
        assert!(inf(Rule::BotL, &[], "p , (bot ; q) |- r").is_ok());
        assert!(inf(Rule::BotLPrime, &[], "bot ; bot |- r").is_err());
    }

    #[test]
    fn implication_instance() {
        assert!(inf(Rule::ImpL, &["p |- p", "q ; q |- r"], "p ; q ; (p -> q) |- r").is_ok());
        assert!(inf(Rule::ImpL, &["p ; p |- p", "q ; q |- r"], "p ; p ; q ; (p -> q) |- r").is_ok());
    }

    #[test]
    fn wand_weakening_inst() {
        assert!(inf(Rule::Inst, &["o+ |- top"], "((p -* top) -> q) , p |- top").is_ok());
        let d = check_inference(
            System::Dlbi,
            &RuleInstance::with_sigma(Rule::Inst, bunch("q")),
            &[seq("o+ |- top")],
            &seq("((p -* top) -> q) , p |- top"),
        );
        assert!(d.is_err());
    }

    #[test]
    fn logical_shapes() {
        assert!(inf(Rule::StarR, &["p |- p", "q |- q"], "p , q |- p * q").is_ok());
        assert!(inf(Rule::StarL, &["q , p |- q * p"], "p * q |- q * p").is_ok());
        assert!(inf(Rule::WandR, &["p , q |- r"], "p |- q -* r").is_ok());
        assert!(inf(Rule::WandL, &["p |- p", "q |- q"], "p , (p -* q) |- q").is_ok());
        assert!(inf(Rule::WandL1, &["p |- p", "ox , q |- q"], "p , (p -* q) |- q").is_ok());
        assert!(inf(Rule::WandL3, &["ox |- p", "ox , q |- r"], "p -* q |- r").is_ok());
        assert!(inf(Rule::ImpL3, &["o+ |- p", "o+ ; q |- r"], "p -> q |- r").is_ok());
        assert!(inf(Rule::StarR1, &["ox |- p", "q |- q"], "q |- p * q").is_ok());
        assert!(inf(Rule::AndR, &["p |- p", "q |- q"], "p ; q |- p /\\ q").is_ok());
        assert!(inf(Rule::AndL, &["p ; q |- p"], "p /\\ q |- p").is_ok());
        assert!(inf(Rule::OrL, &["p |- r", "q |- r"], "p \\/ q |- r").is_ok());
        assert!(inf(Rule::ImpR, &["r ; p |- q"], "r |- p -> q").is_ok());
        assert!(inf(Rule::OneL, &["ox , p |- p"], "I , p |- p").is_ok());
    }

    #[test]
    fn structural_shapes() {
        assert!(inf(Rule::WPrime, &["p |- p"], "p ; q |- p").is_ok());
        assert!(inf(Rule::WPrime, &["p |- p"], "p ; (q , r) |- p").is_ok());
        assert!(inf(Rule::WPrime, &["p |- p"], "p ; q ; q |- p").is_err());
        assert!(inf(Rule::W, &["p |- p"], "p ; q ; q |- p").is_ok());
        assert!(inf(Rule::CPrime, &["p ; p |- q"], "p |- q").is_ok());
        assert!(inf(Rule::CPrime, &["(p , q) ; (p , q) |- r"], "p , q |- r").is_ok());
        assert!(inf(Rule::WUnitPlus, &["p |- p"], "p ; o+ |- p").is_ok());
        assert!(inf(Rule::WUnitTimes, &["p |- p"], "p , ox |- p").is_ok());
        assert!(inf(Rule::CUnitTimes, &["p , ox |- p"], "p |- p").is_ok());
        assert!(inf(Rule::Rad, &["p , o+ |- p"], "p |- p").is_ok());
        assert!(inf(Rule::EPrime, &["q ; p |- p"], "p ; q |- p").is_ok());
        assert!(inf(Rule::E, &["p ; o+ |- p"], "p , ox |- p").is_ok());
    }

    #[test]
    fn system_restrictions() {
        let r = check_inference(System::Dlbi, &RuleInstance::new(Rule::W), &[seq("p |- p")], &seq("p ; q |- p"));
        assert!(matches!(r, Err(CheckError::NotInSystem { .. })));
        let r = check_inference(System::Lbi, &RuleInstance::new(Rule::Id), &[seq("p |- p")], &seq("p |- p"));
        assert!(matches!(r, Err(CheckError::Arity { .. })));
    }

    fn wand_weakening() -> Derivation {
        let left = Derivation::node(
            seq("(p -* top) -> q |- p -* top"),
            RuleInstance::new(Rule::WandR),
            vec![Derivation::node(
                seq("((p -* top) -> q) , p |- top"),
                RuleInstance::with_sigma(Rule::Inst, bunch("((p -* top) -> q) , p")),
                vec![Derivation::leaf(seq("o+ |- top"), Rule::TopR)],
            )],
        );
        let right = Derivation::node(
            seq("q |- top"),
            RuleInstance::with_sigma(Rule::Inst, bunch("q")),
            vec![Derivation::leaf(seq("o+ |- top"), Rule::TopR)],
        );
        let imp = Derivation::node(
            seq("((p -* top) -> q) ; ((p -* top) -> q) |- top"),
            RuleInstance::new(Rule::ImpL),
            vec![left, right],
        );
        Derivation::node(seq("(p -* top) -> q |- top"), RuleInstance::new(Rule::CPrime), vec![imp])
    }

    #[test]
    fn wand_weakening_proof_checks_and_is_regimented() {
        let d = wand_weakening();
        assert_eq!(check_derivation(System::Dlbi, &d, &[]), Ok(()));
        assert!(is_regimented(&d));
        let phases = classify_phases(&d);
        assert_eq!(phases[0].1, Phase::Normalizing);
        assert_eq!(phases[1].1, Phase::Action);
    }

    #[test]
    fn removing_an_inference_leaves_a_dangling_leaf() {
        let mut d = wand_weakening();
        d = Derivation { rule: None, children: vec![], ..d };
        assert!(check_derivation(System::Dlbi, &d, &[]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = wand_weakening();
        let text = to_json_string(&d);
        let back = from_json_str(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(to_json_string(&back), text);
    }

    #[test]
    fn actions_and_regimentation() {
        let ps = [seq("p ; p |- p"), seq("q ; q |- r")];
        let c = seq("p ; p ; q ; (p -> q) |- r");
        let inst = RuleInstance::new(Rule::ImpL);
        assert!(is_action(&inst, &ps, &c));
        assert!(!is_regimented_action(&inst, &ps, &c));
        let ps = [seq("p |- p"), seq("q ; q |- r")];
        let c = seq("p ; q ; (p -> q) |- r");
        assert!(is_regimented_action(&inst, &ps, &c));
        let w = RuleInstance::with_sigma(Rule::WPrime, bunch("p"));
        assert!(!is_action(&w, &[seq("p |- p")], &seq("p ; p |- p")));
        assert!(is_action(&w, &[seq("q |- q")], &seq("q ; p |- q")));
    }

    #[test]
    fn hat_forms_examples() {
        let inst = RuleInstance::new(Rule::ImpL);
        let ps = [seq("p |- p"), seq("q ; q |- r")];
        let c = seq("p ; q ; (p -> q) |- r");
        let (hp, hc) = hat_forms(&inst, &ps, &c).unwrap();
        assert_eq!(hp, ps.iter().map(Sequent::canonical).collect::<Vec<_>>());
        assert_eq!(hc, c.canonical());
        let w = RuleInstance::with_sigma(Rule::WPrime, bunch("s"));
        let (_, hc) = hat_forms(&w, &[seq("p |- p")], &seq("p ; s |- p")).unwrap();
        assert_eq!(hc, seq("p ; s |- p").canonical());
    }

    #[test]
    fn expand_examples() {
        let wide = SearchBounds::new(3, 4, 4);
        let e = expand(System::Dlbi, &seq("p |- p"), &wide);
        assert!(e.iter().any(|(i, ps)| i.rule == Rule::Id && ps.is_empty()));
        let e = expand(System::Dlbi, &seq("p , q |- p * q"), &wide);
        assert!(e.iter().any(|(i, ps)| i.rule == Rule::StarR && ps == &vec![seq("p |- p"), seq("q |- q")]));
        let e = expand(System::Dlbi, &seq("o+ |- top"), &wide);
        assert!(e.iter().any(|(i, _)| i.rule == Rule::TopR));
    }
}
