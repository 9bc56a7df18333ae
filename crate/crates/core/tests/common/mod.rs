//! An independent, deliberately naive prover for LBI used as a test oracle.
//!
//! It shares only the data types with the library: contexts are kept up to
//! coherent equivalence (units erased, children flattened and sorted) by its
//! own code, and it explores every backward rule application, including
//! weakening and contraction anywhere, by iterative deepening with a memo
//! table. A proof it finds is a real LBI proof; failure up to the depth
//! bound is evidence (not proof) of unprovability.

#![allow(dead_code)]

use std::collections::HashMap;

use bunched::syntax::{Bunch, Formula, Sequent};

/// Erase units, flatten, sort: a representative of the ≡-class.
pub fn norm(b: &Bunch) -> Bunch {
    match b {
        Bunch::Add(cs) | Bunch::Mul(cs) => {
            let add = matches!(b, Bunch::Add(_));
            let unit = if add { Bunch::UnitPlus } else { Bunch::UnitTimes };
            let mut kids = Vec::new();
            for c in cs.iter().map(norm) {
                match (add, c) {
                    (_, c) if c == unit => {}
                    (true, Bunch::Add(gs)) | (false, Bunch::Mul(gs)) => kids.extend(gs),
                    (_, c) => kids.push(c),
                }
            }
            kids.sort();
            match kids.len() {
                0 => unit,
                1 => kids.pop().unwrap(),
                _ if add => Bunch::Add(kids),
                _ => Bunch::Mul(kids),
            }
        }
        _ => b.clone(),
    }
}

fn node_of(add: bool, kids: Vec<Bunch>) -> Bunch {
    norm(&if add { Bunch::Add(kids) } else { Bunch::Mul(kids) })
}

fn at<'a>(b: &'a Bunch, path: &[usize]) -> &'a Bunch {
    path.iter().fold(b, |cur, &i| match cur {
        Bunch::Add(cs) | Bunch::Mul(cs) => &cs[i],
        _ => unreachable!(),
    })
}

fn put(b: &Bunch, path: &[usize], with: Bunch) -> Bunch {
    match path.split_first() {
        None => with,
        Some((&i, rest)) => {
            let (add, cs) = match b {
                Bunch::Add(cs) => (true, cs),
                Bunch::Mul(cs) => (false, cs),
                _ => unreachable!(),
            };
            let mut kids = cs.clone();
            kids[i] = put(&cs[i], rest, with);
            if add {
                Bunch::Add(kids)
            } else {
                Bunch::Mul(kids)
            }
        }
    }
}

fn paths(b: &Bunch) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    if let Bunch::Add(cs) | Bunch::Mul(cs) = b {
        for (i, c) in cs.iter().enumerate() {
            for mut p in paths(c) {
                p.insert(0, i);
                out.push(p);
            }
        }
    }
    out
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n)).map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect()).collect()
}

/// Every way to pick a sub-bunch: a node, or a proper group (size ≥ 2) of a
/// node's children. Returns (path of node, chosen child indices or None).
fn locations(b: &Bunch) -> Vec<(Vec<usize>, Option<Vec<usize>>)> {
    let mut out = Vec::new();
    for p in paths(b) {
        out.push((p.clone(), None));
        if let Bunch::Add(cs) | Bunch::Mul(cs) = at(b, &p) {
            for s in subsets(cs.len()) {
                if s.len() >= 2 && s.len() < cs.len() {
                    out.push((p.clone(), Some(s)));
                }
            }
        }
    }
    out
}

fn sub(b: &Bunch, loc: &(Vec<usize>, Option<Vec<usize>>)) -> Bunch {
    let node = at(b, &loc.0);
    match &loc.1 {
        None => node.clone(),
        Some(s) => {
            let (add, cs) = match node {
                Bunch::Add(cs) => (true, cs),
                Bunch::Mul(cs) => (false, cs),
                _ => unreachable!(),
            };
            node_of(add, s.iter().map(|&i| cs[i].clone()).collect())
        }
    }
}

fn swap(b: &Bunch, loc: &(Vec<usize>, Option<Vec<usize>>), with: Bunch) -> Bunch {
    match &loc.1 {
        None => norm(&put(b, &loc.0, with)),
        Some(s) => {
            let node = at(b, &loc.0);
            let (add, cs) = match node {
                Bunch::Add(cs) => (true, cs),
                Bunch::Mul(cs) => (false, cs),
                _ => unreachable!(),
            };
            let mut kids: Vec<Bunch> = (0..cs.len()).filter(|i| !s.contains(i)).map(|i| cs[i].clone()).collect();
            kids.push(with);
            let replaced = if add { Bunch::Add(kids) } else { Bunch::Mul(kids) };
            norm(&put(b, &loc.0, replaced))
        }
    }
}

type Goal = (Bunch, Formula);

fn parts(f: &Formula) -> (Formula, Formula) {
    let (l, r) = f.children().unwrap();
    (l.clone(), r.clone())
}

/// Every backward rule application: a list of alternatives, each a list of
/// premises.
fn moves(g: &Bunch, phi: &Formula) -> Vec<Vec<Goal>> {
    let mut out: Vec<Vec<Goal>> = Vec::new();
    // Right rules.
    match phi {
        Formula::And(..) => {
            let (l, r) = parts(phi);
            out.push(vec![(g.clone(), l), (g.clone(), r)]);
        }
        Formula::Or(..) => {
            let (l, r) = parts(phi);
            out.push(vec![(g.clone(), l)]);
            out.push(vec![(g.clone(), r)]);
        }
        Formula::Imp(..) => {
            let (l, r) = parts(phi);
            out.push(vec![(node_of(true, vec![g.clone(), Bunch::Leaf(l)]), r)]);
        }
        Formula::Wand(..) => {
            let (l, r) = parts(phi);
            out.push(vec![(node_of(false, vec![g.clone(), Bunch::Leaf(l)]), r)]);
        }
        Formula::Star(..) => {
            let (l, r) = parts(phi);
            let cs: Vec<Bunch> = match g {
                Bunch::Mul(cs) => cs.clone(),
                other => vec![other.clone()],
            };
            for s in subsets(cs.len()) {
                let left = node_of(false, s.iter().map(|&i| cs[i].clone()).collect());
                let right = node_of(false, (0..cs.len()).filter(|i| !s.contains(i)).map(|i| cs[i].clone()).collect());
                out.push(vec![(left, l.clone()), (right, r.clone())]);
            }
        }
        _ => {}
    }
    // Left rules, at every formula leaf.
    for p in paths(g) {
        let Bunch::Leaf(f) = at(g, &p) else { continue };
        let here = |with: Bunch| norm(&put(g, &p, with));
        match f {
            Formula::Top => out.push(vec![(here(Bunch::UnitPlus), phi.clone())]),
            Formula::One => out.push(vec![(here(Bunch::UnitTimes), phi.clone())]),
            Formula::And(..) | Formula::Star(..) => {
                let (l, r) = parts(f);
                let add = matches!(f, Formula::And(..));
                out.push(vec![(here(node_of(add, vec![Bunch::Leaf(l), Bunch::Leaf(r)])), phi.clone())]);
            }
            Formula::Or(..) => {
                let (l, r) = parts(f);
                out.push(vec![(here(Bunch::Leaf(l)), phi.clone()), (here(Bunch::Leaf(r)), phi.clone())]);
            }
            Formula::Imp(..) | Formula::Wand(..) => {
                let (l, r) = parts(f);
                let add = matches!(f, Formula::Imp(..));
                let parent = p.split_last().map(|(_, q)| q.to_vec());
                let siblings: Option<(Vec<usize>, Vec<Bunch>, usize)> = parent.as_ref().and_then(|q| match at(g, q) {
                    Bunch::Add(cs) if add => Some((q.clone(), cs.clone(), *p.last().unwrap())),
                    Bunch::Mul(cs) if !add => Some((q.clone(), cs.clone(), *p.last().unwrap())),
                    _ => None,
                });
                match siblings {
                    None => {
                        out.push(vec![(node_of(add, vec![]), l.clone()), (here(Bunch::Leaf(r.clone())), phi.clone())])
                    }
                    Some((q, cs, k)) => {
                        let others: Vec<usize> = (0..cs.len()).filter(|&i| i != k).collect();
                        for s in subsets(others.len()) {
                            let d: Vec<usize> = s.iter().map(|&i| others[i]).collect();
                            let left = node_of(add, d.iter().map(|&i| cs[i].clone()).collect());
                            let mut rest: Vec<Bunch> =
                                others.iter().filter(|i| !d.contains(i)).map(|&i| cs[i].clone()).collect();
                            rest.push(Bunch::Leaf(r.clone()));
                            let right = norm(&put(g, &q, node_of(add, rest)));
                            out.push(vec![(left, l.clone()), (right, phi.clone())]);
                        }
                    }
                }
            }
            _ => {}
        }
    }
    // Weakening (a sub-bunch Δ′ next to an implicit o+) and contraction.
    for loc in locations(g) {
        let weakened = swap(g, &loc, Bunch::UnitPlus);
        if weakened != *g {
            out.push(vec![(weakened, phi.clone())]);
        }
        let x = sub(g, &loc);
        out.push(vec![(swap(g, &loc, Bunch::Add(vec![x.clone(), x])), phi.clone())]);
    }
    out
}

fn axiom(g: &Bunch, phi: &Formula) -> bool {
    let bot = paths(g).iter().any(|p| matches!(at(g, p), Bunch::Leaf(Formula::Bot)));
    bot || *g == Bunch::Leaf(phi.clone())
        || (*g == Bunch::UnitPlus && *phi == Formula::Top)
        || (*g == Bunch::UnitTimes && *phi == Formula::One)
}

#[derive(Default)]
pub struct Oracle {
    /// Proved, or the largest depth at which search failed.
    memo: HashMap<Goal, Result<(), usize>>,
    /// Largest context size the oracle will consider.
    pub max_leaves: usize,
}

impl Oracle {
    pub fn new(max_leaves: usize) -> Oracle {
        Oracle { memo: HashMap::new(), max_leaves }
    }

    fn prove(&mut self, g: &Bunch, phi: &Formula, depth: usize) -> bool {
        let key = (g.clone(), phi.clone());
        match self.memo.get(&key) {
            Some(Ok(())) => return true,
            Some(Err(d)) if *d >= depth => return false,
            _ => {}
        }
        let found = axiom(g, phi)
            || (depth > 1
                && moves(g, phi).into_iter().any(|alt| {
                    alt.iter().all(|(pg, _)| pg.leaf_count() <= self.max_leaves)
                        && alt.iter().all(|(pg, pf)| self.prove(pg, pf, depth - 1))
                }));
        self.memo.insert(key, if found { Ok(()) } else { Err(depth) });
        found
    }

    /// Iterative deepening up to `max_depth` inferences on a branch.
    pub fn provable(&mut self, s: &Sequent, max_depth: usize) -> bool {
        let g = norm(&s.context);
        (1..=max_depth).any(|d| self.prove(&g, &s.goal, d))
    }
}

/// Sequents the decision procedure must prove.
pub const PROVABLE: &[&str] = &[
    "p |- p",
    "p * q |- q * p",
    "p /\\ q |- p",
    "p , (p -* q) |- q",
    "p * (q \\/ r) |- (p * q) \\/ (p * r)",
    "ox |- I",
    "(p -* top) -> q |- top",
    "p ; q |- p /\\ q",
    "p |- q -> p",
    "p ; (p -> q) |- q",
    "p \\/ q |- q \\/ p",
    "(p * q) * r |- p * (q * r)",
    "p |- p * I",
    "p * I |- p",
    "p |- q -* (p * q)",
    "(p -* q) * p |- q",
    "p /\\ (q \\/ r) |- (p /\\ q) \\/ (p /\\ r)",
    "bot |- p",
    "p |- top",
    "p ; q |- q",
    "(p \\/ q) * r |- (p * r) \\/ (q * r)",
    "p -> (q -> r) |- (p /\\ q) -> r",
    "I |- top -> (I * I)",
    "(p * q) ; ((p * q) -> r) |- r",
];

/// Sequents the decision procedure must refute.
pub const UNPROVABLE: &[&str] = &[
    "p |- p * p",
    "p * q |- p",
    "top |- I",
    "top |- top -> (I * I)",
    "p |- q",
    "p -* q |- q",
    "p ; q |- p * q",
    "p \\/ q |- p",
    "p -> q |- q",
    "p , q |- p /\\ q",
    "p * p |- p",
    "p , q |- p",
    "I |- p",
    "p ; (p -* q) |- q",
    "top |- p -> p * p",
    "q * (p -* q) |- p",
];
