//! Formulas, bunches and sequents of BI: abstract syntax, the ASCII grammar,
//! sub-bunch navigation and replacement, permutation (≅), coherent
//! equivalence (≡) and canonical forms.
//!
//! Bunches are stored with variadic, flattened context-formers: an `Add`
//! node never has an `Add` child and a `Mul` node never has a `Mul` child.
//! Under this representation ≅ is recursive multiset equality, so sorting
//! children (see [`canonicalize`]) decides it by syntactic equality.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A BI formula.
///
/// The derived ordering (constructor tag, then fields) is the fixed total
/// order used to sort leaves during canonicalization.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Arc<str>),
    Top,
    Bot,
    One,
    And(Arc<Formula>, Arc<Formula>),
    Or(Arc<Formula>, Arc<Formula>),
    Imp(Arc<Formula>, Arc<Formula>),
    Star(Arc<Formula>, Arc<Formula>),
    Wand(Arc<Formula>, Arc<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(Arc::from(name))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Arc::new(l), Arc::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Arc::new(l), Arc::new(r))
    }

    pub fn imp(l: Formula, r: Formula) -> Formula {
        Formula::Imp(Arc::new(l), Arc::new(r))
    }

    pub fn star(l: Formula, r: Formula) -> Formula {
        Formula::Star(Arc::new(l), Arc::new(r))
    }

    pub fn wand(l: Formula, r: Formula) -> Formula {
        Formula::Wand(Arc::new(l), Arc::new(r))
    }

    /// The two immediate subformulas of a binary connective.
    pub fn children(&self) -> Option<(&Formula, &Formula)> {
        match self {
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) | Formula::Star(l, r) | Formula::Wand(l, r) => {
                Some((l, r))
            }
            _ => None,
        }
    }

    /// Is the principal connective multiplicative (`*`, `-*`, `I`)?
    pub fn is_multiplicative(&self) -> bool {
        matches!(self, Formula::Star(..) | Formula::Wand(..) | Formula::One)
    }

    /// Every subformula occurrence, including `self`, in pre-order.
    pub fn subformulas(&self) -> Vec<&Formula> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            if let Some((l, r)) = out[i].children() {
                out.push(l);
                out.push(r);
            }
            i += 1;
        }
        out
    }

    /// Number of connectives and constants (a size measure for tests and limits).
    pub fn size(&self) -> usize {
        match self.children() {
            Some((l, r)) => 1 + l.size() + r.size(),
            None => 1,
        }
    }
}

/// A bunch: a tree of formulas and units under the additive (`;`) and
/// multiplicative (`,`) context-formers.
///
/// Variant order is significant: it gives the canonical tag order
/// `UnitPlus < UnitTimes < Leaf < Add < Mul`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bunch {
    UnitPlus,
    UnitTimes,
    Leaf(Formula),
    Add(Vec<Bunch>),
    Mul(Vec<Bunch>),
}

/// The two context-formers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Former {
    Add,
    Mul,
}

impl Former {
    pub fn other(self) -> Former {
        match self {
            Former::Add => Former::Mul,
            Former::Mul => Former::Add,
        }
    }

    /// The unit of this former.
    pub fn unit(self) -> Bunch {
        match self {
            Former::Add => Bunch::UnitPlus,
            Former::Mul => Bunch::UnitTimes,
        }
    }
}

impl Bunch {
    pub fn leaf(f: Formula) -> Bunch {
        Bunch::Leaf(f)
    }

    /// Combine bunches under `;`, flattening nested `Add` children. A single
    /// child is returned as is; an empty list yields the additive unit.
    pub fn add(children: Vec<Bunch>) -> Bunch {
        Bunch::combine(Former::Add, children)
    }

    /// Combine bunches under `,`, flattening nested `Mul` children. A single
    /// child is returned as is; an empty list yields the multiplicative unit.
    pub fn mul(children: Vec<Bunch>) -> Bunch {
        Bunch::combine(Former::Mul, children)
    }

    /// Smart constructor shared by [`Bunch::add`] and [`Bunch::mul`].
    pub fn combine(former: Former, children: Vec<Bunch>) -> Bunch {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match (former, c) {
                (Former::Add, Bunch::Add(cs)) | (Former::Mul, Bunch::Mul(cs)) => flat.extend(cs),
                (_, c) => flat.push(c),
            }
        }
        match flat.len() {
            0 => former.unit(),
            1 => flat.pop().expect("one child"),
            _ => match former {
                Former::Add => Bunch::Add(flat),
                Former::Mul => Bunch::Mul(flat),
            },
        }
    }

    /// The principal context-former of a complex bunch.
    pub fn former(&self) -> Option<Former> {
        match self {
            Bunch::Add(_) => Some(Former::Add),
            Bunch::Mul(_) => Some(Former::Mul),
            _ => None,
        }
    }

    pub fn children(&self) -> &[Bunch] {
        match self {
            Bunch::Add(cs) | Bunch::Mul(cs) => cs,
            _ => &[],
        }
    }

    /// A bunch is basic if it is a formula or a unit.
    pub fn is_basic(&self) -> bool {
        self.former().is_none()
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Bunch::UnitPlus | Bunch::UnitTimes)
    }

    pub fn as_formula(&self) -> Option<&Formula> {
        match self {
            Bunch::Leaf(f) => Some(f),
            _ => None,
        }
    }

    /// Number of leaves (formulas and units).
    pub fn leaf_count(&self) -> usize {
        match self {
            Bunch::Add(cs) | Bunch::Mul(cs) => cs.iter().map(Bunch::leaf_count).sum(),
            _ => 1,
        }
    }

    /// All formula leaves, left to right.
    pub fn formulas(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        self.collect_formulas(&mut out);
        out
    }

    fn collect_formulas<'a>(&'a self, out: &mut Vec<&'a Formula>) {
        match self {
            Bunch::Leaf(f) => out.push(f),
            Bunch::Add(cs) | Bunch::Mul(cs) => cs.iter().for_each(|c| c.collect_formulas(out)),
            _ => {}
        }
    }

    /// Does the flattening invariant hold everywhere?
    pub fn is_well_formed(&self) -> bool {
        match self {
            Bunch::Add(cs) => cs.len() >= 2 && cs.iter().all(|c| !matches!(c, Bunch::Add(_)) && c.is_well_formed()),
            Bunch::Mul(cs) => cs.len() >= 2 && cs.iter().all(|c| !matches!(c, Bunch::Mul(_)) && c.is_well_formed()),
            _ => true,
        }
    }
}

impl From<Formula> for Bunch {
    fn from(f: Formula) -> Self {
        Bunch::Leaf(f)
    }
}

/// A sequent `Γ |- φ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequent {
    pub context: Bunch,
    pub goal: Formula,
}

impl Sequent {
    pub fn new(context: Bunch, goal: Formula) -> Sequent {
        Sequent { context, goal }
    }

    /// The sequent with its context canonicalized.
    pub fn canonical(&self) -> Sequent {
        Sequent::new(canonicalize(&self.context), self.goal.clone())
    }

    /// Equality of sequents up to permutation of the context.
    pub fn permutes(&self, other: &Sequent) -> bool {
        self.goal == other.goal && permutes(&self.context, &other.context)
    }

    pub fn formulas(&self) -> Vec<&Formula> {
        let mut out = self.context.formulas();
        out.push(&self.goal);
        out
    }
}

// ---------------------------------------------------------------------------
// Paths and locations
// ---------------------------------------------------------------------------

/// A sequence of child indices from the root of a bunch.
pub type Path = Vec<usize>;

/// A location in a bunch: a single node, or a sub-multiset (given by sorted,
/// distinct child indices) of the children of the node at `path`, read as a
/// sub-bunch combined under that node's former.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Loc {
    Node(Path),
    Group(Path, Vec<usize>),
}

impl Loc {
    pub fn path(&self) -> &Path {
        match self {
            Loc::Node(p) | Loc::Group(p, _) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path {0:?} is not valid for this bunch")]
    InvalidPath(Path),
    #[error("child group {1:?} at {0:?} is not valid")]
    InvalidGroup(Path, Vec<usize>),
}

/// The sub-bunch at `path`, if the path is valid.
pub fn get<'a>(g: &'a Bunch, path: &[usize]) -> Option<&'a Bunch> {
    let mut cur = g;
    for &i in path {
        cur = cur.children().get(i)?;
    }
    Some(cur)
}

/// The sub-bunch denoted by a location.
pub fn sub_at(g: &Bunch, loc: &Loc) -> Result<Bunch, PathError> {
    match loc {
        Loc::Node(p) => get(g, p).cloned().ok_or_else(|| PathError::InvalidPath(p.clone())),
        Loc::Group(p, idxs) => {
            let node = get(g, p).ok_or_else(|| PathError::InvalidPath(p.clone()))?;
            let former = node.former().ok_or_else(|| PathError::InvalidGroup(p.clone(), idxs.clone()))?;
            check_group(node, p, idxs)?;
            let cs = node.children();
            Ok(Bunch::combine(former, idxs.iter().map(|&i| cs[i].clone()).collect()))
        }
    }
}

fn check_group(node: &Bunch, p: &Path, idxs: &[usize]) -> Result<(), PathError> {
    let n = node.children().len();
    let sorted = idxs.windows(2).all(|w| w[0] < w[1]);
    if idxs.is_empty() || !sorted || idxs.iter().any(|&i| i >= n) {
        return Err(PathError::InvalidGroup(p.clone(), idxs.to_vec()));
    }
    Ok(())
}

/// Every node of `g` with its path, in pre-order; the root comes first.
pub fn subbunches(g: &Bunch) -> Vec<(Path, Bunch)> {
    let mut out = Vec::new();
    fn walk(g: &Bunch, path: &mut Path, out: &mut Vec<(Path, Bunch)>) {
        out.push((path.clone(), g.clone()));
        for (i, c) in g.children().iter().enumerate() {
            path.push(i);
            walk(c, path, out);
            path.pop();
        }
    }
    walk(g, &mut Vec::new(), &mut out);
    out
}

/// Every node path of `g`, in pre-order.
pub fn node_paths(g: &Bunch) -> Vec<Path> {
    let mut out = Vec::new();
    fn walk(g: &Bunch, path: &mut Path, out: &mut Vec<Path>) {
        out.push(path.clone());
        for (i, c) in g.children().iter().enumerate() {
            path.push(i);
            walk(c, path, out);
            path.pop();
        }
    }
    walk(g, &mut Vec::new(), &mut out);
    out
}

/// Every sub-multiset of at least two children of every complex node, as
/// `(path of the node, sorted child indices)`. Full child sets are included.
pub fn subbunch_groups(g: &Bunch) -> Vec<(Path, Vec<usize>)> {
    let mut out = Vec::new();
    for p in node_paths(g) {
        let node = get(g, &p).expect("path from node_paths");
        let n = node.children().len();
        if n < 2 {
            continue;
        }
        for idxs in index_subsets(n, 2) {
            out.push((p.clone(), idxs));
        }
    }
    out
}

/// All sorted subsets of `0..n` with at least `min` elements, ordered by size
/// then lexicographically.
pub fn index_subsets(n: usize, min: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for k in min.max(1)..=n {
        let mut cur = Vec::with_capacity(k);
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                if n - i < k - cur.len() {
                    break;
                }
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
    }
    out
}

/// Every location of `g`: all nodes, then all child groups of size ≥ 2 that
/// are proper (the full child set denotes the node itself and is skipped).
pub fn locations(g: &Bunch) -> Vec<Loc> {
    let mut out: Vec<Loc> = node_paths(g).into_iter().map(Loc::Node).collect();
    for (p, idxs) in subbunch_groups(g) {
        let n = get(g, &p).map(|b| b.children().len()).unwrap_or(0);
        if idxs.len() < n {
            out.push(Loc::Group(p, idxs));
        }
    }
    out
}

/// Replace the sub-bunch at `loc` by `with`.
///
/// The result is re-flattened: a replacement sharing its parent's former is
/// spliced into the parent, and a node left with a single child collapses.
pub fn replace(g: &Bunch, loc: &Loc, with: Bunch) -> Result<Bunch, PathError> {
    match loc {
        Loc::Node(p) => replace_node(g, p, with),
        Loc::Group(p, idxs) => {
            let node = get(g, p).ok_or_else(|| PathError::InvalidPath(p.clone()))?;
            let former = node.former().ok_or_else(|| PathError::InvalidGroup(p.clone(), idxs.clone()))?;
            check_group(node, p, idxs)?;
            // A replacement headed by the node's own former with one child per
            // grouped slot refills those slots in place.
            if with.former() == Some(former) && with.children().len() == idxs.len() {
                let mut kids = node.children().to_vec();
                for (&i, c) in idxs.iter().zip(with.children()) {
                    kids[i] = c.clone();
                }
                return replace_node(g, p, Bunch::combine(former, kids));
            }
            let mut kids: Vec<Bunch> = Vec::with_capacity(node.children().len());
            let mut inserted = false;
            for (i, c) in node.children().iter().enumerate() {
                if idxs.contains(&i) {
                    if !inserted {
                        kids.push(with.clone());
                        inserted = true;
                    }
                } else {
                    kids.push(c.clone());
                }
            }
            replace_node(g, p, Bunch::combine(former, kids))
        }
    }
}

/// Remove the children `idxs` of the node at `path` (at least one child must
/// remain).
pub fn remove_group(g: &Bunch, path: &[usize], idxs: &[usize]) -> Result<Bunch, PathError> {
    let node = get(g, path).ok_or_else(|| PathError::InvalidPath(path.to_vec()))?;
    let former = node.former().ok_or_else(|| PathError::InvalidGroup(path.to_vec(), idxs.to_vec()))?;
    check_group(node, &path.to_vec(), idxs)?;
    if idxs.len() >= node.children().len() {
        return Err(PathError::InvalidGroup(path.to_vec(), idxs.to_vec()));
    }
    let kids = node.children().iter().enumerate().filter(|(i, _)| !idxs.contains(i)).map(|(_, c)| c.clone()).collect();
    replace_node(g, path, Bunch::combine(former, kids))
}

fn replace_node(g: &Bunch, path: &[usize], with: Bunch) -> Result<Bunch, PathError> {
    fn go(g: &Bunch, path: &[usize], with: Bunch, full: &[usize]) -> Result<Bunch, PathError> {
        match path.split_first() {
            None => Ok(with),
            Some((&i, rest)) => {
                let former = g.former().ok_or_else(|| PathError::InvalidPath(full.to_vec()))?;
                let cs = g.children();
                if i >= cs.len() {
                    return Err(PathError::InvalidPath(full.to_vec()));
                }
                let mut kids = Vec::with_capacity(cs.len());
                for (j, c) in cs.iter().enumerate() {
                    if j == i {
                        kids.push(go(c, rest, with.clone(), full)?);
                    } else {
                        kids.push(c.clone());
                    }
                }
                Ok(Bunch::combine(former, kids))
            }
        }
    }
    go(g, path, with, path)
}

// ---------------------------------------------------------------------------
// Permutation, coherent equivalence, canonical form
// ---------------------------------------------------------------------------

/// Sort the children of every variadic node under the fixed total order on
/// bunches. Idempotent; the result is a ≅-class representative.
pub fn canonicalize(g: &Bunch) -> Bunch {
    match g {
        Bunch::Add(cs) | Bunch::Mul(cs) => {
            let kids: Vec<Bunch> = cs.iter().map(canonicalize).collect();
            // Flatten before sorting so spliced grandchildren are ordered too.
            match Bunch::combine(g.former().expect("complex"), kids) {
                Bunch::Add(mut cs) => {
                    cs.sort();
                    Bunch::Add(cs)
                }
                Bunch::Mul(mut cs) => {
                    cs.sort();
                    Bunch::Mul(cs)
                }
                other => other,
            }
        }
        _ => g.clone(),
    }
}

/// Is `g` already in canonical form?
pub fn is_canonical(g: &Bunch) -> bool {
    match g {
        Bunch::Add(cs) | Bunch::Mul(cs) => cs.windows(2).all(|w| w[0] <= w[1]) && cs.iter().all(is_canonical),
        _ => true,
    }
}

/// Permutation (≅): commutative-semigroup laws for both formers, closed
/// under congruence.
pub fn permutes(g1: &Bunch, g2: &Bunch) -> bool {
    canonicalize(g1) == canonicalize(g2)
}

/// Erase every unit that is a unit for its parent's former (`o+` under `;`,
/// `ox` under `,`), bottom-up, to a fixpoint.
pub fn erase_units(g: &Bunch) -> Bunch {
    match g {
        Bunch::Add(cs) | Bunch::Mul(cs) => {
            let former = g.former().expect("complex");
            let unit = former.unit();
            let kids: Vec<Bunch> = cs.iter().map(erase_units).filter(|c| *c != unit).collect();
            Bunch::combine(former, kids)
        }
        _ => g.clone(),
    }
}

/// Coherent equivalence (≡): permutation plus the unit laws of `o+` for `;`
/// and `ox` for `,`.
pub fn coherent_equal(g1: &Bunch, g2: &Bunch) -> bool {
    canonicalize(&erase_units(g1)) == canonicalize(&erase_units(g2))
}

/// All distinct canonical bunches with between 1 and `max_leaves` leaves
/// drawn from `alphabet` (each alphabet entry must be basic).
pub fn enumerate_bunches(alphabet: &[Bunch], max_leaves: usize) -> Vec<Bunch> {
    // by_size[k] holds the canonical bunches with exactly k leaves.
    let mut by_size: Vec<Vec<Bunch>> = vec![Vec::new(); max_leaves + 1];
    if max_leaves == 0 {
        return Vec::new();
    }
    let mut base: Vec<Bunch> = alphabet.iter().map(canonicalize).collect();
    base.sort();
    base.dedup();
    by_size[1] = base;
    for k in 2..=max_leaves {
        let mut level = Vec::new();
        for former in [Former::Add, Former::Mul] {
            // Candidate children: all smaller bunches not headed by `former`,
            // paired with their leaf counts, in canonical order.
            let mut pool: Vec<(Bunch, usize)> = Vec::new();
            for (size, bs) in by_size.iter().enumerate().take(k).skip(1) {
                for b in bs {
                    if b.former() != Some(former) {
                        pool.push((b.clone(), size));
                    }
                }
            }
            pool.sort();
            let mut cur: Vec<Bunch> = Vec::new();
            multisets_with_total(&pool, 0, k, &mut cur, &mut |kids| {
                if kids.len() >= 2 {
                    level.push(Bunch::combine(former, kids.to_vec()));
                }
            });
        }
        level.sort();
        level.dedup();
        by_size[k] = level;
    }
    by_size.into_iter().flatten().collect()
}

fn multisets_with_total(
    pool: &[(Bunch, usize)],
    start: usize,
    remaining: usize,
    cur: &mut Vec<Bunch>,
    emit: &mut dyn FnMut(&[Bunch]),
) {
    if remaining == 0 {
        emit(cur);
        return;
    }
    for i in start..pool.len() {
        let (b, size) = &pool[i];
        if *size <= remaining {
            cur.push(b.clone());
            multisets_with_total(pool, i, remaining - size, cur, emit);
            cur.pop();
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Imp(..) | Formula::Wand(..) => 1,
        Formula::Or(..) => 2,
        Formula::And(..) | Formula::Star(..) => 3,
        _ => 4,
    }
}

fn op_symbol(f: &Formula) -> &'static str {
    match f {
        Formula::And(..) => "/\\",
        Formula::Or(..) => "\\/",
        Formula::Imp(..) => "->",
        Formula::Star(..) => "*",
        Formula::Wand(..) => "-*",
        _ => "",
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Top => write!(f, "top"),
            Formula::Bot => write!(f, "bot"),
            Formula::One => write!(f, "I"),
            _ => {
                let (l, r) = self.children().expect("binary");
                let p = prec(self);
                // Right-associative: a left operand at the same level needs
                // parentheses, a right operand only when strictly looser.
                if prec(l) <= p {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, " {} ", op_symbol(self))?;
                if prec(r) < p {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

impl fmt::Display for Bunch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bunch::UnitPlus => write!(f, "o+"),
            Bunch::UnitTimes => write!(f, "ox"),
            Bunch::Leaf(x) => write!(f, "{x}"),
            Bunch::Add(cs) | Bunch::Mul(cs) => {
                let sep = if matches!(self, Bunch::Add(_)) { " ; " } else { " , " };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    if c.is_basic() {
                        write!(f, "{c}")?;
                    } else {
                        write!(f, "({c})")?;
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- {}", self.context, self.goal)
    }
}

/// Render any syntax object in the ASCII grammar.
pub fn render<T: fmt::Display>(x: &T) -> String {
    x.to_string()
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Top,
    Bot,
    One,
    UnitPlus,
    UnitTimes,
    And,
    Or,
    Imp,
    Star,
    Wand,
    Semi,
    Comma,
    LParen,
    RParen,
    Turnstile,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::Top => "`top`",
            Tok::Bot => "`bot`",
            Tok::One => "`I`",
            Tok::UnitPlus => "`o+`",
            Tok::UnitTimes => "`ox`",
            Tok::And => "`/\\`",
            Tok::Or => "`\\/`",
            Tok::Imp => "`->`",
            Tok::Star => "`*`",
            Tok::Wand => "`-*`",
            Tok::Semi => "`;`",
            Tok::Comma => "`,`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Turnstile => "`|-`",
            Tok::Eof => "end of input",
        };
        write!(f, "{s}")
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let err = |pos: usize, message: String| ParseError { pos, message };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let two = if i + 1 < bytes.len() { &bytes[i..i + 2] } else { &bytes[i..i + 1] };
        let tok = match two {
            b"/\\" => {
                i += 2;
                Tok::And
            }
            b"\\/" => {
                i += 2;
                Tok::Or
            }
            b"->" => {
                i += 2;
                Tok::Imp
            }
            b"-*" => {
                i += 2;
                Tok::Wand
            }
            b"|-" => {
                i += 2;
                Tok::Turnstile
            }
            b"o+" => {
                i += 2;
                Tok::UnitPlus
            }
            _ => match c {
                b'*' => {
                    i += 1;
                    Tok::Star
                }
                b';' => {
                    i += 1;
                    Tok::Semi
                }
                b',' => {
                    i += 1;
                    Tok::Comma
                }
                b'(' => {
                    i += 1;
                    Tok::LParen
                }
                b')' => {
                    i += 1;
                    Tok::RParen
                }
                b'a'..=b'z' | b'I' => {
                    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                        i += 1;
                    }
                    let word = &text[start..i];
                    match word {
                        "top" => Tok::Top,
                        "bot" => Tok::Bot,
                        "I" => Tok::One,
                        "ox" => Tok::UnitTimes,
                        w if w.starts_with('I') => return Err(err(start, format!("invalid identifier `{w}`"))),
                        w => Tok::Ident(w.to_string()),
                    }
                }
                _ => {
                    let ch = text[start..].chars().next().unwrap_or('?');
                    return Err(err(start, format!("unexpected character `{ch}`")));
                }
            },
        };
        toks.push((tok, start));
    }
    toks.push((Tok::Eof, text.len()));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError { pos: self.offset(), message: format!("expected {expected}, found {}", self.peek()) })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.error(what)
        }
    }

    // imp := disj (('->' | '-*') imp)?
    fn formula(&mut self) -> Result<Formula, ParseError> {
        let l = self.disj()?;
        match self.peek() {
            Tok::Imp => {
                self.bump();
                Ok(Formula::imp(l, self.formula()?))
            }
            Tok::Wand => {
                self.bump();
                Ok(Formula::wand(l, self.formula()?))
            }
            _ => Ok(l),
        }
    }

    // disj := conj ('\/' disj)?
    fn disj(&mut self) -> Result<Formula, ParseError> {
        let l = self.conj()?;
        if *self.peek() == Tok::Or {
            self.bump();
            return Ok(Formula::or(l, self.disj()?));
        }
        Ok(l)
    }

    // conj := prim (('/\' | '*') conj)?
    fn conj(&mut self) -> Result<Formula, ParseError> {
        let l = self.prim()?;
        match self.peek() {
            Tok::And => {
                self.bump();
                Ok(Formula::and(l, self.conj()?))
            }
            Tok::Star => {
                self.bump();
                Ok(Formula::star(l, self.conj()?))
            }
            _ => Ok(l),
        }
    }

    fn prim(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(Formula::atom(&name))
            }
            Tok::Top => {
                self.bump();
                Ok(Formula::Top)
            }
            Tok::Bot => {
                self.bump();
                Ok(Formula::Bot)
            }
            Tok::One => {
                self.bump();
                Ok(Formula::One)
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            _ => self.error("a formula"),
        }
    }

    // bunch := item (';' item)* | item (',' item)*
    fn bunch(&mut self) -> Result<Bunch, ParseError> {
        let first = self.item()?;
        let former = match self.peek() {
            Tok::Semi => Former::Add,
            Tok::Comma => Former::Mul,
            _ => return Ok(first),
        };
        let sep = if former == Former::Add { Tok::Semi } else { Tok::Comma };
        let mut items = vec![first];
        while *self.peek() == sep {
            self.bump();
            items.push(self.item()?);
        }
        if matches!(self.peek(), Tok::Semi | Tok::Comma) {
            return Err(ParseError {
                pos: self.offset(),
                message: "`;` and `,` cannot be mixed without parentheses".to_string(),
            });
        }
        Ok(Bunch::combine(former, items))
    }

    fn item(&mut self) -> Result<Bunch, ParseError> {
        match self.peek() {
            Tok::UnitPlus => {
                self.bump();
                return Ok(Bunch::UnitPlus);
            }
            Tok::UnitTimes => {
                self.bump();
                return Ok(Bunch::UnitTimes);
            }
            _ => {}
        }
        // A parenthesis may open either a formula or a nested bunch: try the
        // formula reading first and fall back to the bunch reading.
        let save = self.pos;
        if let Ok(f) = self.formula() {
            if matches!(self.peek(), Tok::Semi | Tok::Comma | Tok::RParen | Tok::Turnstile | Tok::Eof) {
                return Ok(Bunch::Leaf(f));
            }
        }
        self.pos = save;
        if *self.peek() == Tok::LParen {
            self.bump();
            let b = self.bunch()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(b);
        }
        // Re-run the formula parser to report its error position.
        let f = self.formula()?;
        let _ = f;
        self.error("`;`, `,` or `)`")
    }

    fn finish(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error("end of input")
        }
    }
}

fn parser(text: &str) -> Result<Parser, ParseError> {
    Ok(Parser { toks: lex(text)?, pos: 0 })
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = parser(text)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

pub fn parse_bunch(text: &str) -> Result<Bunch, ParseError> {
    let mut p = parser(text)?;
    let b = p.bunch()?;
    p.finish()?;
    Ok(b)
}

pub fn parse_sequent(text: &str) -> Result<Sequent, ParseError> {
    let mut p = parser(text)?;
    let context = p.bunch()?;
    p.expect(Tok::Turnstile, "`|-`")?;
    let goal = p.formula()?;
    p.finish()?;
    Ok(Sequent::new(context, goal))
}

/// What [`parse`] should read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Formula,
    Bunch,
    Sequent,
}

/// The result of [`parse`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Syntax {
    Formula(Formula),
    Bunch(Bunch),
    Sequent(Sequent),
}

pub fn parse(text: &str, kind: Kind) -> Result<Syntax, ParseError> {
    Ok(match kind {
        Kind::Formula => Syntax::Formula(parse_formula(text)?),
        Kind::Bunch => Syntax::Bunch(parse_bunch(text)?),
        Kind::Sequent => Syntax::Sequent(parse_sequent(text)?),
    })
}

/// Parse a sequent, panicking on malformed input. Intended for literals in
/// tests and examples.
pub fn seq(text: &str) -> Sequent {
    parse_sequent(text).unwrap_or_else(|e| panic!("bad sequent literal {text:?}: {e}"))
}

/// Parse a bunch, panicking on malformed input.
pub fn bunch(text: &str) -> Bunch {
    parse_bunch(text).unwrap_or_else(|e| panic!("bad bunch literal {text:?}: {e}"))
}

/// Parse a formula, panicking on malformed input.
pub fn formula(text: &str) -> Formula {
    parse_formula(text).unwrap_or_else(|e| panic!("bad formula literal {text:?}: {e}"))
}
