mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{all_vectors, nodes, BruteSft};
use treeshift::sft::{normalize, ForbiddenSet, Pattern};
use treeshift::{Alphabets, Block, DistanceLevel, NormalizedSft, SftEngine, TruncatedTree, Word};

fn tree(depth: usize) -> impl Strategy<Value = TruncatedTree> {
    prop::collection::vec(0u8..2, nodes(2, depth))
        .prop_map(move |l| TruncatedTree::new(Block::new(2, depth, l).unwrap()))
}

fn short_word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0u8..2, 0..=max).prop_map(Word::new)
}

/// A random forbidden set of patterns of height at most 2.
fn forbidden_set() -> impl Strategy<Value = ForbiddenSet> {
    let pattern = (0u8..2, prop::option::of(0u8..2), prop::option::of(0u8..2)).prop_map(|(root, left, right)| {
        let mut entries = vec![(Word::empty(), root)];
        if let Some(l) = left {
            entries.push(("0".parse().unwrap(), l));
        }
        if let Some(r) = right {
            entries.push(("1".parse().unwrap(), r));
        }
        Pattern::new(&Alphabets::binary(), entries).unwrap()
    });
    prop::collection::vec(pattern, 0..4).prop_map(|ps| ForbiddenSet::new(Alphabets::binary(), ps))
}

proptest! {
    #[test]
    fn restrict_composes(t in tree(6), u in short_word(2), v in short_word(1), k in 1usize..=2, j in 1usize..=2) {
        prop_assume!(v.len() + j <= k);
        let inner = t.restrict(&u, k).unwrap();
        prop_assert_eq!(inner.restrict(&v, j).unwrap(), t.restrict(&u.concat(&v), j).unwrap());
    }

    #[test]
    fn shifts_compose(t in tree(6), u in short_word(2), v in short_word(2)) {
        let direct = t.shift_word(&u.concat(&v)).unwrap();
        let stepwise = t.shift_word(&u).unwrap().shift_word(&v).unwrap();
        prop_assert_eq!(&direct, &stepwise);
        prop_assert_eq!(direct.depth(), 6 - u.len() - v.len());
    }

    #[test]
    fn distance_is_first_disagreement(s in tree(4), t in tree(4)) {
        let agree = |n: usize| n == 0 || s.restrict(&Word::empty(), n).unwrap() == t.restrict(&Word::empty(), n).unwrap();
        match s.distance_level(&t).unwrap() {
            DistanceLevel::Indistinguishable => prop_assert!(agree(4)),
            DistanceLevel::Differ(r) => {
                let n = r.level();
                prop_assert!(agree(n) && !agree(n + 1));
                for k in 0..=4 {
                    prop_assert_eq!(!s.distance_level(&t).unwrap().differs_below(k), agree(k));
                }
            }
        }
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_is_neutral(f in forbidden_set(), seed in any::<u64>()) {
        let p = f.min_height();
        let engines: Vec<SftEngine> = (p..=p + 2)
            .map(|h| SftEngine::build(normalize(&f, h).unwrap()).unwrap())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let t = TruncatedTree::new(Block::new(2, 4, (0..15).map(|_| rand::Rng::gen_range(&mut rng, 0..2)).collect()).unwrap());
            let verdicts: Vec<bool> = engines.iter().map(|e| e.certify_membership(&t).unwrap().is_certified()).collect();
            prop_assert!(verdicts.iter().all(|&v| v == verdicts[0]), "{:?} on {:?}", verdicts, t);
        }
        for n in 1..=3 {
            let counts: Vec<u128> = engines.iter().map(|e| e.block_count(n).unwrap()).collect();
            prop_assert!(counts.iter().all(|&c| c == counts[0]));
        }
    }
}

proptest! {

    #[test]
    fn engine_matches_brute_force(f in forbidden_set()) {
        let sft = normalize(&f, 2).unwrap();
        let e = SftEngine::build(sft.clone()).unwrap();
        let forbidden: Vec<Vec<u8>> = sft.forbidden().iter().map(|b| b.labels().to_vec()).collect();
        let brute = BruteSft::new(2, 2, 2, &forbidden);
        prop_assert_eq!(e.viable().len(), brute.viable_count());
        for n in 1..=3 {
            prop_assert_eq!(e.block_count(n).unwrap(), brute.count(n));
            for v in all_vectors(2, nodes(2, n)) {
                let b = Block::new(2, n, v.clone()).unwrap();
                prop_assert_eq!(e.in_language(&b), brute.in_language(&v, n));
            }
        }
    }

    #[test]
    fn counts_are_monotone(f in forbidden_set()) {
        let e = SftEngine::build(normalize(&f, f.min_height()).unwrap()).unwrap();
        prop_assume!(!e.is_empty());
        let counts: Vec<u128> = (1..=4).map(|n| e.block_count(n).unwrap()).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{:?}", counts);
    }

    #[test]
    fn extensions_restrict_back(f in forbidden_set(), seed in any::<u64>()) {
        let e = SftEngine::build(normalize(&f, 2).unwrap()).unwrap();
        prop_assume!(!e.is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = e.random_tree(3, &mut rng).unwrap();
        let exts = e.extensions(t.body(), 4).unwrap();
        prop_assert_eq!(exts.len() as u128, e.extension_count(t.body(), 1).unwrap());
        prop_assert!(exts.windows(2).all(|w| w[0] < w[1]));
        for x in &exts {
            prop_assert_eq!(&x.restrict(&Word::empty(), 3).unwrap(), t.body());
            prop_assert!(e.in_language(x));
        }
        prop_assert_eq!(&e.canonical_extension(t.body(), 4).unwrap(), &exts[0]);
    }
}

#[test]
fn neutrality_on_fixed_fixtures() {
    let golden = NormalizedSft::new(
        Alphabets::binary(),
        2,
        [[1, 0, 1], [1, 1, 0], [1, 1, 1]]
            .iter()
            .map(|l| Block::new(2, 2, l.to_vec()).unwrap()),
    )
    .unwrap();
    let f = golden.to_forbidden_set();
    let engines: Vec<SftEngine> = (2..=4)
        .map(|h| SftEngine::build(normalize(&f, h).unwrap()).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..1000 {
        let t = TruncatedTree::new(
            Block::new(2, 4, (0..15).map(|_| rand::Rng::gen_range(&mut rng, 0..2)).collect()).unwrap(),
        );
        let verdicts: Vec<bool> = engines
            .iter()
            .map(|e| e.certify_membership(&t).unwrap().is_certified())
            .collect();
        assert!(verdicts.iter().all(|&v| v == verdicts[0]));
    }
}
