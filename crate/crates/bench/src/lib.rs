//! Shared inputs for the benchmarks.

/// Provable sequents, roughly in order of search effort.
pub const PROVABLE: &[&str] = &[
    "p |- p",
    "p * q |- q * p",
    "p , (p -* q) |- q",
    "(p -* top) -> q |- top",
    "p * (q \\/ r) |- (p * q) \\/ (p * r)",
    "(p * q) * r |- p * (q * r)",
    "p -> (q -> r) |- (p /\\ q) -> r",
];

/// Unprovable sequents.
pub const UNPROVABLE: &[&str] = &["p |- p * p", "p * q |- p", "p ; q |- p * q", "q * (p -* q) |- p"];

/// Bunches for the rewriting benchmarks.
pub const BUNCHES: &[&str] = &[
    "(p , (q ; o+)) ; (r ; (ox ; r))",
    "(p ; p ; (q , r)) , ((q , r) ; o+ ; p)",
    "((p ; q) , (p ; q)) ; ((q ; p) , (p ; q)) ; ox",
];
