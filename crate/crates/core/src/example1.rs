//! Golden replay of the worked example with `K = N = 4`, `Nr = 3`, `Kc = 4`.
//!
//! The demand matrix and all coding vectors are fixed; only the messages are
//! drawn. Every vector has small integer entries, so the replay is valid in
//! any field large enough to keep `F` invertible (its integer determinant is
//! 10).

use crate::assignment::{CyclicAssignment, SystemParams};
use crate::costs::{r_cec, Cost};
use crate::field::FieldModulus;
use crate::linalg::{Matrix, SubspaceBasis};
use crate::scheme::{
    build_decoding_matrix_nonresponder, build_decoding_matrix_responder, DemandMatrix, MessageSet,
    Regime, SchemeError, WorkerEncoding,
};
use crate::seed::rng_from_seed;
use crate::simulator::{run_round, Instance, RoundOptions};
use serde::Serialize;

pub const F: [[i64; 4]; 4] = [[1, 1, 1, 1], [1, 2, 3, 4], [1, 0, 2, 3], [1, 2, 1, 4]];

/// Two null-space vectors per worker.
pub const U: [[[i64; 4]; 2]; 4] = [
    [[0, -5, 8, -1], [5, 0, -3, 1]],
    [[0, -1, 0, 1], [-1, -2, 3, 0]],
    [[2, 3, -1, -4], [-6, -2, 3, 5]],
    [[0, -1, 1, 1], [4, -4, 3, 2]],
];

/// `v_1 = u_{1,1}`, `v_2 = u_{2,2}`, `v_3 = u_{3,1} + u_{3,2}`, `v_4 = 2u_{4,1} + 3u_{4,2}`.
pub const V: [[i64; 4]; 4] = [
    [0, -5, 8, -1],
    [-1, -2, 3, 0],
    [-4, 1, 2, 1],
    [12, -14, 11, 8],
];

/// Message coefficients of each worker's broadcast, `v_n^T F`.
pub const SIGNAL_COEFFICIENTS: [[i64; 4]; 4] = [
    [2, -12, 0, 0],
    [0, -5, -1, 0],
    [0, 0, 4, 10],
    [17, 0, 0, 21],
];

pub const RESPONDERS: [usize; 3] = [1, 2, 3];

pub const L: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GoldenCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl GoldenCheck {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        GoldenCheck {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

pub fn params(q: FieldModulus) -> SystemParams {
    SystemParams::new(4, 4, 3, 4, q, L).expect("example parameters are valid")
}

pub fn demand(q: FieldModulus) -> Result<(CyclicAssignment, DemandMatrix), SchemeError> {
    let assignment = CyclicAssignment::new(params(q));
    let rows: Vec<&[i64]> = F.iter().map(|r| r.as_slice()).collect();
    let f = DemandMatrix::new(Matrix::from_signed(q, &rows)?, &assignment)?;
    Ok((assignment, f))
}

pub fn encodings(
    q: FieldModulus,
    f: &DemandMatrix,
    assignment: &CyclicAssignment,
) -> Result<Vec<WorkerEncoding>, SchemeError> {
    (1..=4)
        .map(|n| {
            let u = U[n - 1].iter().map(|v| q.signed_vector(v)).collect();
            let basis = SubspaceBasis::new(q, 4, u)?;
            WorkerEncoding::from_parts(f, assignment, n, basis, vec![q.signed_vector(&V[n - 1])])
        })
        .collect()
}

fn fmt_signed(q: FieldModulus, m: &Matrix) -> String {
    let rows: Vec<Vec<i64>> = (0..m.rows())
        .map(|r| m.row(r).iter().map(|&x| q.to_signed(x)).collect())
        .collect();
    format!("{rows:?}")
}

/// Run every golden check in the field `q`. Errors only when the fixed
/// data itself is rejected (e.g. `q` divides the determinant of `F`).
pub fn replay(q: FieldModulus, message_seed: u64) -> Result<Vec<GoldenCheck>, SchemeError> {
    let (assignment, f) = demand(q)?;
    let mut checks = Vec::new();

    let z: Vec<Vec<usize>> = (1..=4).map(|n| assignment.z(n).to_vec()).collect();
    let expected_z = vec![vec![1, 2], vec![2, 3], vec![3, 4], vec![1, 4]];
    checks.push(GoldenCheck::new(
        "assignment",
        z == expected_z,
        format!("Z = {z:?}"),
    ));

    let enc = encodings(q, &f, &assignment)?;
    let w = MessageSet::random(assignment.params(), &mut rng_from_seed(message_seed));
    let instance = Instance::with_encodings(&assignment, f.clone(), w, enc.clone())?;
    let signals = instance.signals().expect("null-space instance");
    for (n, sig) in signals.iter().enumerate() {
        let expected = Matrix::from_signed(q, &[&SIGNAL_COEFFICIENTS[n]])?;
        checks.push(GoldenCheck::new(
            format!("X{} coefficients", n + 1),
            sig.coefficients == expected,
            format!(
                "{} (expected {:?})",
                fmt_signed(q, &sig.coefficients),
                SIGNAL_COEFFICIENTS[n]
            ),
        ));
    }

    for (pos, responder) in RESPONDERS.iter().enumerate() {
        let s = build_decoding_matrix_responder(&enc, &RESPONDERS, pos)?;
        let rank = s.s.rank();
        checks.push(GoldenCheck::new(
            format!("S invertible at responder {responder}"),
            rank == 4,
            format!("rank {rank}"),
        ));
    }
    for helpers in [[1, 2], [1, 3], [2, 3]] {
        let s = build_decoding_matrix_nonresponder(&enc, &RESPONDERS, &helpers, 4)?;
        let rank = s.s.rank();
        checks.push(GoldenCheck::new(
            format!("S invertible at worker 4 via {helpers:?}"),
            rank == 4,
            format!("rank {rank}"),
        ));
    }

    let round = run_round(
        &instance,
        &RESPONDERS,
        Regime::NullSpace,
        RoundOptions {
            strict: true,
            transcript: false,
        },
    )?;
    for c in &round.checks {
        let ok = c.succeeded(&instance.target);
        checks.push(GoldenCheck::new(
            format!("worker {} decodes F W (helpers {:?})", c.worker, c.helpers),
            ok,
            match &c.outcome {
                Ok(_) if ok => "exact".to_string(),
                Ok(_) => "wrong output".to_string(),
                Err(e) => e.to_string(),
            },
        ));
    }

    let r = Cost::new(round.cost_symbols as u64, L as u64);
    checks.push(GoldenCheck::new(
        "cost R = 3",
        r == Cost::from_integer(3),
        format!("R = {r}"),
    ));
    let bench = r_cec(4, 4, 3, 4).expect("valid parameters");
    checks.push(GoldenCheck::new(
        "benchmark cost = 4",
        bench == Cost::from_integer(4),
        format!("{bench}"),
    ));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DEFAULT_Q;

    #[test]
    fn v_vectors_are_the_stated_combinations() {
        let add = |a: [i64; 4], b: [i64; 4], x: i64, y: i64| -> [i64; 4] {
            std::array::from_fn(|i| x * a[i] + y * b[i])
        };
        assert_eq!(V[0], U[0][0]);
        assert_eq!(V[1], U[1][1]);
        assert_eq!(V[2], add(U[2][0], U[2][1], 1, 1));
        assert_eq!(V[3], add(U[3][0], U[3][1], 2, 3));
    }

    #[test]
    fn golden_passes_in_both_fields() {
        for q in [101, DEFAULT_Q] {
            let checks = replay(FieldModulus::new(q).unwrap(), 1).unwrap();
            for c in &checks {
                assert!(c.passed, "q = {q}: {} ({})", c.name, c.detail);
            }
            // assignment, 4 signals, 3 + 3 S checks, 3 + 3 decodes, 2 costs
            assert_eq!(checks.len(), 1 + 4 + 6 + 6 + 2);
        }
    }

    #[test]
    fn tiny_field_dividing_the_determinant_is_rejected() {
        assert!(replay(FieldModulus::new(5).unwrap(), 1).is_err());
    }
}
