use std::collections::HashSet;

use dlsc::assignment::{mod1, CyclicAssignment, SystemParams};
use dlsc::costs::{r_cec, r_dec, Cost};
use dlsc::field::{FieldElement, FieldModulus, DEFAULT_Q};
use dlsc::linalg::{column_space_intersection, intersect_column_spaces, span_dim, Matrix};
use dlsc::scheme::{encode_signal, random_demand, MessageSet, WorkerEncoding};
use dlsc::seed::rng_from_seed;
use dlsc::simulator::{exhaustive_stragglers, SimConfig};
use dlsc::verify::{ladder_span, lemma1_trial, lemma3_subset};
use itertools::Itertools;
use proptest::prelude::*;

const QS: [u64; 4] = [2, 7, 101, DEFAULT_Q];

fn field(q: u64) -> FieldModulus {
    FieldModulus::new(q).unwrap()
}

fn any_q() -> impl Strategy<Value = u64> {
    prop::sample::select(QS.to_vec())
}

/// `(q, rows, cols, entries)` with entries already reduced.
fn matrix_parts(max: usize) -> impl Strategy<Value = (u64, usize, usize, Vec<u64>)> {
    (any_q(), 1..=max, 1..=max).prop_flat_map(|(q, r, c)| {
        (
            Just(q),
            Just(r),
            Just(c),
            prop::collection::vec(0..q, r * c),
        )
    })
}

fn build(q: u64, rows: usize, cols: usize, entries: &[u64]) -> Matrix {
    let f = field(q);
    Matrix::from_vec(
        f,
        rows,
        cols,
        entries.iter().map(|&x| f.from_u64(x)).collect(),
    )
    .unwrap()
}

// Naive reference arithmetic on raw integers.
fn naive_mul(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

fn naive_add(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 + b as u128) % q as u128) as u64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn field_axioms(q in any_q(), a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let f = field(q);
        let (x, y, z) = (f.from_u64(a), f.from_u64(b), f.from_u64(c));
        prop_assert_eq!(f.add(f.add(x, y), z), f.add(x, f.add(y, z)));
        prop_assert_eq!(f.mul(f.mul(x, y), z), f.mul(x, f.mul(y, z)));
        prop_assert_eq!(f.add(x, y), f.add(y, x));
        prop_assert_eq!(f.mul(x, y), f.mul(y, x));
        prop_assert_eq!(f.mul(x, f.add(y, z)), f.add(f.mul(x, y), f.mul(x, z)));
        prop_assert_eq!(f.mul(x, y).value(), naive_mul(x.value(), y.value(), q));
        prop_assert_eq!(f.add(x, y).value(), naive_add(x.value(), y.value(), q));
        prop_assert_eq!(f.add(x, f.neg(x)), FieldElement::ZERO);
        if !x.is_zero() {
            let inv = f.inv(x).unwrap();
            prop_assert_eq!(naive_mul(x.value(), inv.value(), q), 1);
        }
    }

    #[test]
    fn signed_round_trip(q in any_q(), z in any::<i64>()) {
        let f = field(q);
        let z = z.max(i64::MIN + 1);
        prop_assert_eq!(f.add(f.from_signed(z), f.from_signed(-z)), FieldElement::ZERO);
        prop_assert_eq!(f.from_signed(z).value() as i128, (z as i128).rem_euclid(q as i128));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn rank_nullity((q, r, c, e) in matrix_parts(7)) {
        let m = build(q, r, c, &e);
        let null = m.null_space_basis();
        prop_assert_eq!(m.rank() + null.dim(), c);
        for x in null.vectors() {
            prop_assert!(m.mul_vec(x).unwrap().iter().all(|v| v.is_zero()));
        }
        prop_assert!(m.rank() <= r.min(c));
        prop_assert_eq!(m.transpose().rank(), m.rank());
    }

    #[test]
    fn rref_is_idempotent((q, r, c, e) in matrix_parts(7)) {
        let m = build(q, r, c, &e);
        let once = m.rref();
        let twice = once.matrix.rref();
        prop_assert_eq!(&twice.matrix, &once.matrix);
        prop_assert_eq!(twice.pivots, once.pivots);
    }

    #[test]
    fn inverse_round_trip((q, n, e) in (any_q(), 1usize..=7).prop_flat_map(|(q, n)| (Just(q), Just(n), prop::collection::vec(0..q, n * n)))) {
        let m = build(q, n, n, &e);
        match m.inverse() {
            Ok(inv) => {
                prop_assert!(m.mat_mul(&inv).unwrap().is_identity());
                prop_assert!(inv.mat_mul(&m).unwrap().is_identity());
            }
            Err(_) => prop_assert!(m.rank() < n),
        }
    }

    #[test]
    fn intersection_matches_grassmann(
        (q, r, ca, cb, ea, eb) in (any_q(), 1usize..=6, 1usize..=4, 1usize..=4)
            .prop_flat_map(|(q, r, ca, cb)| (Just(q), Just(r), Just(ca), Just(cb),
                prop::collection::vec(0..q, r * ca), prop::collection::vec(0..q, r * cb)))
    ) {
        let a = build(q, r, ca, &ea);
        let b = build(q, r, cb, &eb);
        let joined = Matrix::hstack(&[&a, &b]).unwrap().rank();
        let expected = a.rank() + b.rank() - joined;
        prop_assert_eq!(intersect_column_spaces(&[&a, &b]).unwrap(), expected);
        prop_assert_eq!(intersect_column_spaces(&[&a]).unwrap(), a.rank());
        let basis = column_space_intersection(&[&a, &b]).unwrap();
        prop_assert_eq!(basis.rank(), expected);
        for v in basis.column_vectors() {
            prop_assert!(Matrix::hstack(&[&a, &Matrix::from_columns(a.field(), r, std::slice::from_ref(&v)).unwrap()]).unwrap().rank() == a.rank());
            prop_assert!(Matrix::hstack(&[&b, &Matrix::from_columns(b.field(), r, &[v]).unwrap()]).unwrap().rank() == b.rank());
        }
    }
}

fn param_grid() -> impl Strategy<Value = SystemParams> {
    (1usize..=6, 1usize..=3)
        .prop_flat_map(|(n, batch)| (Just(n), Just(batch), 1..=n))
        .prop_flat_map(|(n, batch, n_r)| (Just(n), Just(batch), Just(n_r), 1..=n * batch))
        .prop_map(|(n, batch, n_r, k_c)| {
            SystemParams::new(n * batch, n, n_r, k_c, field(DEFAULT_Q), 2).unwrap()
        })
}

/// Parameters where every worker has a nontrivial null space and the
/// null-space scheme applies.
fn null_space_grid() -> impl Strategy<Value = SystemParams> {
    param_grid().prop_filter("null-space regime", |p| {
        p.n_r() >= 2 && p.k_c() > p.batch() * p.n_r()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn assignment_invariants(p in param_grid()) {
        let a = CyclicAssignment::new(p);
        let (n, k) = (p.n(), p.k());
        let total: usize = (1..=n).map(|w| a.z(w).len()).sum();
        prop_assert_eq!(total, k * p.replication());
        for w in 1..=n {
            prop_assert_eq!(a.z(w).len(), p.m());
            for d in 1..=k {
                prop_assert_eq!(a.holders_of(d).contains(&w), a.z(w).contains(&d));
                prop_assert_eq!(a.holders_of(d).len(), p.replication());
            }
            // Shift every index one step within its block of N.
            let shifted: HashSet<usize> = a.z(w).iter().map(|&d| {
                let block = (d - 1) / n;
                mod1(d as i64 + 1, n) + block * n
            }).collect();
            let next: HashSet<usize> = a.z(mod1(w as i64 + 1, n)).iter().copied().collect();
            prop_assert_eq!(shifted, next);
        }
    }

    #[test]
    fn cost_relations(p in param_grid()) {
        let (k, n, n_r, k_c) = (p.k(), p.n(), p.n_r(), p.k_c());
        let dec = r_dec(k, n, n_r, k_c).unwrap();
        let cec = r_cec(k, n, n_r, k_c).unwrap();
        let batch = k / n;
        prop_assert!(dec <= cec);
        prop_assert_eq!(dec == cec, k_c <= batch * n_r || n_r == 1);
        if n_r > 1 && k_c > batch * n_r {
            prop_assert_eq!(cec - dec, Cost::from_integer((k_c - batch * n_r) as u64));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coding_vectors_annihilate_and_encode_locally(p in null_space_grid(), seed in any::<u64>()) {
        let a = CyclicAssignment::new(p);
        let mut rng = rng_from_seed(seed);
        let f = random_demand(&a, &mut rng).unwrap();
        let w = MessageSet::random(&p, &mut rng);
        let global = f.apply(&w).unwrap();
        for n in 1..=p.n() {
            let enc = WorkerEncoding::generate(&f, &a, n, &mut rng).unwrap();
            let fbar = f.unknown_columns(&a, n);
            for x in enc.u_vectors().iter().chain(enc.v_vectors()) {
                prop_assert!(fbar.vec_mul(x).unwrap().iter().all(|v| v.is_zero()));
            }
            let signal = encode_signal(&enc, &f, &w.local(&a, n)).unwrap();
            let v = Matrix::from_rows(p.field(), p.k_c(), enc.v_vectors()).unwrap();
            prop_assert_eq!(signal.payload, v.mat_mul(&global).unwrap());
        }
    }

    #[test]
    fn span_and_intersection_agree(p in null_space_grid(), seed in any::<u64>()) {
        let a = CyclicAssignment::new(p);
        let mut rng = rng_from_seed(seed);
        let f = random_demand(&a, &mut rng).unwrap();
        let bases: Vec<_> = (1..=p.n())
            .map(|n| WorkerEncoding::generate(&f, &a, n, &mut rng).unwrap().u_basis().clone())
            .collect();
        for l in 1..=p.n_r() {
            for subset in (1..=p.n()).combinations(l).take(10) {
                let check = lemma3_subset(&f, &a, &bases, &subset);
                // Exact identity: the sum of the orthogonal complements is the
                // complement of the intersection.
                prop_assert_eq!(check.span_dim + check.intersection_dim, p.k_c());
                prop_assert_eq!(check.span_bound_holds, check.intersection_bound_holds);
            }
        }
    }

    #[test]
    fn ladder_and_decodability(p in null_space_grid(), seed in any::<u64>()) {
        let a = CyclicAssignment::new(p);
        let verdict = lemma1_trial(&a, seed);
        prop_assert!(!verdict.violated, "seed {seed}");
        let mut rng = rng_from_seed(seed);
        let f = random_demand(&a, &mut rng).unwrap();
        let enc: Vec<_> = (1..=p.n()).map(|n| WorkerEncoding::generate(&f, &a, n, &mut rng).unwrap()).collect();
        let ordered: Vec<usize> = (1..=p.n_r()).collect();
        for lo in 1..p.n_r() {
            for hi in lo + 1..=p.n_r() {
                prop_assert!(ladder_span(&enc, &ordered, lo, hi) + p.batch() * (p.n_r() - hi) >= p.k_c());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn simulated_cost_is_r_dec_and_reports_repeat(p in null_space_grid(), seed in any::<u64>()) {
        let cfg = SimConfig { trials: 2, master_seed: seed, ..SimConfig::default() };
        let r1 = exhaustive_stragglers(&p, &cfg).unwrap();
        let r2 = exhaustive_stragglers(&p, &cfg).unwrap();
        prop_assert!(r1.decode_failures.is_empty());
        prop_assert_eq!(r1.worst_case_cost_r, r_dec(p.k(), p.n(), p.n_r(), p.k_c()).unwrap());
        prop_assert_eq!(r1.to_json(), r2.to_json());
    }
}

#[test]
fn holders_count_matches_brute_force() {
    for n in 1..=7 {
        for batch in 1..=3 {
            for n_r in 1..=n {
                let p = SystemParams::new(n * batch, n, n_r, 1, field(7), 1).unwrap();
                let a = CyclicAssignment::new(p);
                for k in 1..=p.k() {
                    let brute: Vec<usize> = (1..=n).filter(|&w| a.z(w).contains(&k)).collect();
                    assert_eq!(
                        a.holders_of(k),
                        brute,
                        "n={n} batch={batch} n_r={n_r} k={k}"
                    );
                }
            }
        }
    }
}

#[test]
fn inverse_is_two_sided_in_small_fields() {
    for q in [2u64, 3, 5, 7, 11, 13, 101] {
        let f = field(q);
        for a in 1..q {
            let inv = f.inv(f.from_u64(a)).unwrap().value();
            assert_eq!(naive_mul(a, inv, q), 1);
            assert_eq!(naive_mul(inv, a, q), 1);
        }
    }
}

#[test]
fn example_intersection_by_enumeration() {
    // All of C(F̄_1) and C(F̄_2) at q = 101, listed point by point.
    let q = 101i64;
    let fbar1 = [[1, 1], [3, 4], [2, 3], [1, 4]];
    let fbar2 = [[1, 1], [1, 4], [1, 3], [1, 4]];
    let span = |cols: &[[i64; 2]; 4]| -> HashSet<[i64; 4]> {
        let mut out = HashSet::new();
        for x in 0..q {
            for y in 0..q {
                out.insert(std::array::from_fn(|r| {
                    (x * cols[r][0] + y * cols[r][1]).rem_euclid(q)
                }));
            }
        }
        out
    };
    let common = span(&fbar1).intersection(&span(&fbar2)).count();
    assert_eq!(common, 101);

    let f = field(101);
    let m1 = Matrix::from_signed(f, &[&[1, 1], &[3, 4], &[2, 3], &[1, 4]]).unwrap();
    let m2 = Matrix::from_signed(f, &[&[1, 1], &[1, 4], &[1, 3], &[1, 4]]).unwrap();
    assert_eq!(intersect_column_spaces(&[&m1, &m2]).unwrap(), 1);
}

#[test]
fn example_demand_determinant() {
    // Integer cofactor expansion: nonzero mod 101 and mod 2^31 - 1.
    fn det(m: &[Vec<i64>]) -> i64 {
        if m.len() == 1 {
            return m[0][0];
        }
        (0..m.len())
            .map(|c| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(j, _)| j != c)
                            .map(|(_, &x)| x)
                            .collect()
                    })
                    .collect();
                let sign = if c % 2 == 0 { 1 } else { -1 };
                sign * m[0][c] * det(&minor)
            })
            .sum()
    }
    let rows: Vec<Vec<i64>> = dlsc::example1::F.iter().map(|r| r.to_vec()).collect();
    assert_eq!(det(&rows), 10);
    for q in [101, DEFAULT_Q] {
        let f = field(q);
        let refs: Vec<&[i64]> = dlsc::example1::F.iter().map(|r| r.as_slice()).collect();
        assert_eq!(Matrix::from_signed(f, &refs).unwrap().rank(), 4);
    }
    let all_u: Vec<Vec<FieldElement>> = dlsc::example1::U
        .iter()
        .flatten()
        .map(|u| field(101).signed_vector(u))
        .collect();
    assert_eq!(span_dim(field(101), 4, &all_u).unwrap(), 4);
}
