mod common;

use std::time::Instant;

use bunched::calculus::{check_derivation, is_regimented, System};
use bunched::search::{decide, SearchOptions};
use bunched::syntax::seq;
use common::{Oracle, PROVABLE, UNPROVABLE};

#[test]
fn oracle_agrees_with_the_corpus() {
    let mut oracle = Oracle::new(6);
    for text in PROVABLE {
        let t = Instant::now();
        assert!(oracle.provable(&seq(text), 8), "oracle misses {text}");
        eprintln!("oracle proves {text} in {:?}", t.elapsed());
    }
    for text in UNPROVABLE {
        let t = Instant::now();
        assert!(!oracle.provable(&seq(text), 8), "oracle proves {text}");
        eprintln!("oracle refutes {text} in {:?}", t.elapsed());
    }
}

#[test]
fn corpus_verdicts() {
    for text in PROVABLE {
        let t = Instant::now();
        let out = decide(&seq(text), &SearchOptions::default()).unwrap();
        let d = match out.verdict {
            bunched::Verdict::Provable(d) => d,
            _ => panic!("{text} should be provable"),
        };
        check_derivation(System::Dlbi, &d, &[]).unwrap();
        assert!(is_regimented(&d), "{text}");
        eprintln!("proved {text} in {:?} ({} nodes)", t.elapsed(), out.stats.nodes);
    }
    for text in UNPROVABLE {
        let t = Instant::now();
        let out = decide(&seq(text), &SearchOptions::default()).unwrap();
        assert!(!out.verdict.is_provable(), "{text} should be unprovable");
        eprintln!("refuted {text} in {:?} ({} nodes)", t.elapsed(), out.stats.nodes);
    }
}

fn random_formula(rng: &mut impl rand::Rng, depth: usize) -> bunched::Formula {
    use bunched::Formula;
    if depth == 0 || rng.gen_bool(0.35) {
        return match rng.gen_range(0..6) {
            0 | 1 => Formula::atom("p"),
            2 | 3 => Formula::atom("q"),
            4 => Formula::One,
            _ => Formula::Top,
        };
    }
    let (l, r) = (random_formula(rng, depth - 1), random_formula(rng, depth - 1));
    match rng.gen_range(0..5) {
        0 => Formula::and(l, r),
        1 => Formula::or(l, r),
        2 => Formula::imp(l, r),
        3 => Formula::star(l, r),
        _ => Formula::wand(l, r),
    }
}

#[test]
fn decide_agrees_with_the_oracle_on_random_sequents() {
    use bunched::{Bunch, Sequent};
    use rand::{rngs::StdRng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(7);
    let mut oracle = Oracle::new(6);
    let (mut proved, mut refuted, mut skipped) = (0, 0, 0);
    for _ in 0..120 {
        let a = Bunch::leaf(random_formula(&mut rng, 1));
        let context = if rand::Rng::gen_bool(&mut rng, 0.5) {
            a
        } else {
            let b = Bunch::leaf(random_formula(&mut rng, 1));
            if rand::Rng::gen_bool(&mut rng, 0.5) {
                Bunch::mul(vec![a, b])
            } else {
                Bunch::add(vec![a, b])
            }
        };
        let s = Sequent::new(context, random_formula(&mut rng, 2));
        let opts = SearchOptions { max_nodes: 800, ..Default::default() };
        let res = decide(&s, &opts);
        let Ok(out) = res else {
            skipped += 1;
            continue;
        };
        match out.verdict {
            bunched::Verdict::Provable(d) => {
                check_derivation(System::Dlbi, &d, &[]).unwrap_or_else(|e| panic!("{s}: {e}"));
                proved += 1;
            }
            bunched::Verdict::Unprovable => {
                assert!(!oracle.provable(&s, 7), "oracle proves {s}, search refutes it");
                refuted += 1;
            }
        }
    }
    eprintln!("proved {proved}, refuted {refuted}, over the node cap {skipped}");
    assert!(proved > 10 && refuted > 10);
}
