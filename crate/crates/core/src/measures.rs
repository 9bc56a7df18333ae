//! Control measures on bunches and sequents: multiplicity μ (through additive
//! sets and duplicity), multiplicative width ω, and depth δ (through topsets).

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{canonicalize, get, Bunch, Formula, Path, Sequent};

/// One ∼-class of additive data of a host bunch.
///
/// Additive data are the basic sub-bunches and the sub-bunches whose
/// principal context-former is multiplicative; two of them are related when
/// the path between them crosses only `;`. With flattened nodes, a class is
/// either all children of one `Add` node, or a single datum whose parent is
/// not an `Add` node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditiveSet {
    pub members: Vec<Path>,
    /// The least sub-bunch containing every member.
    pub component: Path,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("path {0:?} is not valid for this bunch")]
    InvalidPath(Path),
    #[error("the sub-bunch at {0:?} is additive, not additive data")]
    NotAdditiveData(Path),
    #[error("the topset is only defined for complex bunches")]
    BasicBunch,
}

/// The additive sets of `g`, in pre-order of their components.
pub fn additive_sets(g: &Bunch) -> Vec<AdditiveSet> {
    let mut out = Vec::new();
    fn walk(g: &Bunch, path: &mut Path, parent_add: bool, out: &mut Vec<AdditiveSet>) {
        match g {
            Bunch::Add(cs) => {
                let members = (0..cs.len())
                    .map(|i| {
                        let mut p = path.clone();
                        p.push(i);
                        p
                    })
                    .collect();
                out.push(AdditiveSet { members, component: path.clone() });
                for (i, c) in cs.iter().enumerate() {
                    path.push(i);
                    walk(c, path, true, out);
                    path.pop();
                }
            }
            _ => {
                // A multiplicative root is the host itself, not a datum in it.
                let mul_root = path.is_empty() && matches!(g, Bunch::Mul(_));
                if !parent_add && !mul_root {
                    out.push(AdditiveSet { members: vec![path.clone()], component: path.clone() });
                }
                for (i, c) in g.children().iter().enumerate() {
                    path.push(i);
                    walk(c, path, false, out);
                    path.pop();
                }
            }
        }
    }
    walk(g, &mut Vec::new(), false, &mut out);
    out
}

/// Number of extra ≅-copies of the additive datum at `member` within its
/// additive set.
pub fn duplicity(g: &Bunch, member: &[usize]) -> Result<usize, MeasureError> {
    let node = get(g, member).ok_or_else(|| MeasureError::InvalidPath(member.to_vec()))?;
    if matches!(node, Bunch::Add(_)) {
        return Err(MeasureError::NotAdditiveData(member.to_vec()));
    }
    let Some((_, parent_path)) = member.split_last() else {
        return Ok(0);
    };
    let parent = get(g, parent_path).expect("prefix of a valid path");
    if !matches!(parent, Bunch::Add(_)) {
        return Ok(0);
    }
    let key = canonicalize(node);
    let copies = parent.children().iter().filter(|c| canonicalize(c) == key).count();
    Ok(copies - 1)
}

/// Multiplicity μ: the sum over additive sets of their largest duplicity.
pub fn multiplicity(g: &Bunch) -> usize {
    match g {
        Bunch::Add(cs) => {
            let mut counts: BTreeMap<Bunch, usize> = BTreeMap::new();
            for c in cs {
                *counts.entry(canonicalize(c)).or_default() += 1;
            }
            let own = counts.values().copied().max().unwrap_or(1) - 1;
            own + cs.iter().map(multiplicity).sum::<usize>()
        }
        Bunch::Mul(cs) => cs.iter().map(multiplicity).sum(),
        _ => 0,
    }
}

/// Multiplicative width ω of a formula.
pub fn formula_width(f: &Formula) -> usize {
    match f {
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => formula_width(l).max(formula_width(r)),
        Formula::Star(l, r) | Formula::Wand(l, r) => formula_width(l) + formula_width(r) + 1,
        _ => 0,
    }
}

/// Multiplicative width ω of a bunch. A `Mul` node with `k` children stands
/// for `k - 1` binary `,` formers.
pub fn mult_width(g: &Bunch) -> usize {
    match g {
        Bunch::Leaf(f) => formula_width(f),
        Bunch::UnitPlus | Bunch::UnitTimes => 0,
        Bunch::Add(cs) => cs.iter().map(mult_width).max().unwrap_or(0),
        Bunch::Mul(cs) => cs.iter().map(mult_width).sum::<usize>() + cs.len() - 1,
    }
}

/// The topset of a complex bunch: the maximal sub-bunches reachable from the
/// root without a context-former alternation. With flattened nodes these are
/// exactly the root's children.
pub fn topset(g: &Bunch) -> Result<Vec<Bunch>, MeasureError> {
    if g.is_basic() {
        return Err(MeasureError::BasicBunch);
    }
    Ok(g.children().to_vec())
}

/// Depth δ of a formula (equal to its multiplicative width).
pub fn formula_depth(f: &Formula) -> usize {
    formula_width(f)
}

/// Depth δ of a bunch: formulas and units contribute their width, `;` takes
/// the maximum over the topset, and `,` adds one to that maximum.
pub fn depth(g: &Bunch) -> usize {
    match g {
        Bunch::Leaf(f) => formula_depth(f),
        Bunch::UnitPlus | Bunch::UnitTimes => 0,
        Bunch::Add(cs) => cs.iter().map(depth).max().unwrap_or(0),
        Bunch::Mul(cs) => cs.iter().map(depth).max().unwrap_or(0) + 1,
    }
}

/// The three measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    Mu,
    Omega,
    Delta,
}

/// A record of all three measures, as reported by the CLI.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Measures {
    pub mu: usize,
    pub omega: usize,
    pub delta: usize,
}

impl Measures {
    /// Component-wise maximum.
    pub fn max(self, other: Measures) -> Measures {
        Measures { mu: self.mu.max(other.mu), omega: self.omega.max(other.omega), delta: self.delta.max(other.delta) }
    }
}

/// Caps on the three measures that delimit a bounded search space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SearchBounds {
    /// Multiplicity cap.
    pub a: usize,
    /// Multiplicative-width cap.
    pub m: usize,
    /// Depth cap.
    pub d: usize,
}

impl SearchBounds {
    pub fn new(a: usize, m: usize, d: usize) -> SearchBounds {
        SearchBounds { a, m, d }
    }

    /// Does a sequent respect all three caps?
    pub fn admits(&self, s: &Sequent) -> bool {
        let m = sequent_measures(s);
        m.mu <= self.a && m.omega <= self.m && m.delta <= self.d
    }
}

pub fn measure_bunch(g: &Bunch, f: Measure) -> usize {
    match f {
        Measure::Mu => multiplicity(g),
        Measure::Omega => mult_width(g),
        Measure::Delta => depth(g),
    }
}

/// A measure of a sequent: the context's value plus the goal's value (the
/// multiplicity of a formula is zero).
pub fn measure_sequent(s: &Sequent, f: Measure) -> usize {
    let goal = match f {
        Measure::Mu => 0,
        Measure::Omega => formula_width(&s.goal),
        Measure::Delta => formula_depth(&s.goal),
    };
    measure_bunch(&s.context, f) + goal
}

pub fn bunch_measures(g: &Bunch) -> Measures {
    Measures { mu: multiplicity(g), omega: mult_width(g), delta: depth(g) }
}

pub fn sequent_measures(s: &Sequent) -> Measures {
    Measures {
        mu: measure_sequent(s, Measure::Mu),
        omega: measure_sequent(s, Measure::Omega),
        delta: measure_sequent(s, Measure::Delta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{bunch, formula, seq};

    fn mixed_bunch() -> Bunch {
        bunch("(p , (q ; o+)) ; (r ; (r ; ox))")
    }

    #[test]
    fn additive_sets_of_mixed_bunch() {
        let g = mixed_bunch();
        let sets = additive_sets(&g);
        let rendered: Vec<Vec<String>> =
            sets.iter().map(|s| s.members.iter().map(|p| get(&g, p).unwrap().to_string()).collect()).collect();
        assert_eq!(
            rendered,
            vec![
                vec!["p , (q ; o+)".to_string(), "r".into(), "r".into(), "ox".into()],
                vec!["p".to_string()],
                vec!["q".to_string(), "o+".into()],
            ]
        );
    }

    #[test]
    fn additive_sets_trivial_cases() {
        assert_eq!(additive_sets(&bunch("p")).len(), 1);
        assert_eq!(additive_sets(&bunch("p , q")).len(), 2);
    }

    #[test]
    fn duplicity_examples() {
        let g = mixed_bunch();
        assert_eq!(duplicity(&g, &[1]).unwrap(), 1);
        assert_eq!(duplicity(&bunch("p ; q"), &[0]).unwrap(), 0);
        assert_eq!(duplicity(&bunch("p ; p ; p"), &[0]).unwrap(), 2);
        assert!(duplicity(&bunch("p ; q"), &[]).is_err());
        assert!(duplicity(&bunch("p ; q"), &[7]).is_err());
    }

    #[test]
    fn multiplicity_examples() {
        assert_eq!(multiplicity(&mixed_bunch()), 1);
        assert_eq!(multiplicity(&bunch("p")), 0);
        assert_eq!(multiplicity(&bunch("p , q")), 0);
        assert_eq!(multiplicity(&bunch("p ; p ; q ; q")), 1);
    }

    #[test]
    fn width_examples() {
        assert_eq!(formula_width(&formula("p * q")), 1);
        assert_eq!(mult_width(&mixed_bunch()), 1);
        assert_eq!(mult_width(&bunch("p , q , r")), 2);
    }

    #[test]
    fn topset_examples() {
        let ts = topset(&mixed_bunch()).unwrap();
        assert_eq!(ts.len(), 4);
        assert!(!ts.contains(&bunch("r ; ox")));
        assert_eq!(topset(&bunch("p , (q ; r)")).unwrap(), vec![bunch("p"), bunch("q ; r")]);
        assert!(topset(&bunch("p")).is_err());
    }

    #[test]
    fn depth_examples() {
        assert_eq!(depth(&mixed_bunch()), 1);
        assert_eq!(depth(&bunch("p")), 0);
        assert_eq!(depth(&bunch("p , (q ; (r , s))")), 2);
    }

    #[test]
    fn sequent_measure_examples() {
        assert_eq!(measure_sequent(&seq("p ; p |- q"), Measure::Mu), 1);
        assert_eq!(measure_sequent(&seq("(p -* top) -> q |- p -* top"), Measure::Delta), 2);
        let b = seq("((p -* top) -> q) ; ((p -* top) -> q) |- top");
        assert_eq!(measure_sequent(&b, Measure::Delta), 1);
    }
}
