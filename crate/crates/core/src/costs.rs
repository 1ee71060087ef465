//! Closed-form communication costs, normalized by the message length L.
//!
//! * `r_dec`: cost achieved by the decentralized scheme (and, under cyclic
//!   assignment, the optimum `r_cyc_star`).
//! * `r_cec`: cost of reusing the centralized benchmark scheme between
//!   workers.

use crate::assignment::{ParamError, SystemParams};
use num_rational::Ratio;
use std::io::Write;
use std::ops::RangeInclusive;

/// Exact cost value.
pub type Cost = Ratio<u64>;

fn validate(k: usize, n: usize, n_r: usize, k_c: usize) -> Result<(), ParamError> {
    if n == 0 || k == 0 || !k.is_multiple_of(n) {
        return Err(ParamError::NotDivisible { k, n });
    }
    if !(1..=n).contains(&n_r) {
        return Err(ParamError::Range(format!(
            "need 1 <= Nr <= N (Nr = {n_r}, N = {n})"
        )));
    }
    if !(1..=k).contains(&k_c) {
        return Err(ParamError::Range(format!(
            "need 1 <= Kc <= K (Kc = {k_c}, K = {k})"
        )));
    }
    Ok(())
}

/// Achieved cost of the decentralized scheme.
pub fn r_dec(k: usize, n: usize, n_r: usize, k_c: usize) -> Result<Cost, ParamError> {
    validate(k, n, n_r, k_c)?;
    let batch = (k / n) as u64;
    let (n_r, k_c) = (n_r as u64, k_c as u64);
    // With one responder every worker holds every dataset.
    Ok(Cost::from_integer(if n_r == 1 {
        0
    } else if k_c < batch {
        n_r * k_c
    } else {
        batch * n_r
    }))
}

/// Cost of the centralized benchmark scheme run between workers.
pub fn r_cec(k: usize, n: usize, n_r: usize, k_c: usize) -> Result<Cost, ParamError> {
    validate(k, n, n_r, k_c)?;
    let batch = (k / n) as u64;
    let (n_r, k_c) = (n_r as u64, k_c as u64);
    Ok(Cost::from_integer(if n_r == 1 {
        0
    } else if k_c < batch {
        n_r * k_c
    } else if k_c <= batch * n_r {
        batch * n_r
    } else {
        k_c
    }))
}

/// Optimal cost under cyclic assignment, which coincides with `r_dec`.
pub fn r_cyc_star(k: usize, n: usize, n_r: usize, k_c: usize) -> Result<Cost, ParamError> {
    r_dec(k, n, n_r, k_c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostPoint {
    pub k: usize,
    pub n: usize,
    pub n_r: usize,
    pub k_c: usize,
    pub r_dec: Cost,
    pub r_cec: Cost,
    pub r_cyc_star: Cost,
}

impl CostPoint {
    pub fn new(k: usize, n: usize, n_r: usize, k_c: usize) -> Result<Self, ParamError> {
        Ok(CostPoint {
            k,
            n,
            n_r,
            k_c,
            r_dec: r_dec(k, n, n_r, k_c)?,
            r_cec: r_cec(k, n, n_r, k_c)?,
            r_cyc_star: r_cyc_star(k, n, n_r, k_c)?,
        })
    }

    pub fn for_params(p: &SystemParams) -> Self {
        CostPoint::new(p.k(), p.n(), p.n_r(), p.k_c())
            .expect("SystemParams are validated on construction")
    }

    /// Savings of the decentralized scheme over the benchmark.
    pub fn gain(&self) -> Cost {
        self.r_cec - self.r_dec
    }
}

/// One axis of a cost sweep; the other parameters stay fixed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sweep {
    DemandCount {
        k: usize,
        n: usize,
        n_r: usize,
        k_c: RangeInclusive<usize>,
    },
    Responders {
        k: usize,
        n: usize,
        k_c: usize,
        n_r: RangeInclusive<usize>,
    },
}

impl Sweep {
    /// `K_c = 1..=K` at fixed `(K, N, Nr)`.
    pub fn over_demand_count(k: usize, n: usize, n_r: usize) -> Self {
        Sweep::DemandCount {
            k,
            n,
            n_r,
            k_c: 1..=k,
        }
    }

    /// `Nr = 1..=N` at fixed `(K, N, Kc)`.
    pub fn over_responders(k: usize, n: usize, k_c: usize) -> Self {
        Sweep::Responders {
            k,
            n,
            k_c,
            n_r: 1..=n,
        }
    }
}

/// One point per grid value, in ascending order of the swept parameter.
/// Every grid value is validated, so out-of-range bounds fail up front.
pub fn cost_table(sweep: &Sweep) -> Result<Vec<CostPoint>, ParamError> {
    match sweep {
        Sweep::DemandCount { k, n, n_r, k_c } => k_c
            .clone()
            .map(|kc| CostPoint::new(*k, *n, *n_r, kc))
            .collect(),
        Sweep::Responders { k, n, k_c, n_r } => n_r
            .clone()
            .map(|nr| CostPoint::new(*k, *n, nr, *k_c))
            .collect(),
    }
}

pub const CSV_HEADER: [&str; 7] = ["K", "N", "Nr", "Kc", "R_dec", "R_cec", "R_cyc_star"];

/// CSV with header `K,N,Nr,Kc,R_dec,R_cec,R_cyc_star`. Integral costs print
/// as integers, others as `a/b`.
pub fn write_csv<W: Write>(points: &[CostPoint], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in points {
        w.write_record([
            p.k.to_string(),
            p.n.to_string(),
            p.n_r.to_string(),
            p.k_c.to_string(),
            p.r_dec.to_string(),
            p.r_cec.to_string(),
            p.r_cyc_star.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(c: Cost) -> u64 {
        assert!(c.is_integer());
        c.to_integer()
    }

    #[test]
    fn decentralized_cost_examples() {
        assert_eq!(int(r_dec(12, 6, 3, 8).unwrap()), 6);
        assert_eq!(int(r_dec(12, 6, 3, 1).unwrap()), 3);
        assert_eq!(int(r_dec(12, 12, 1, 8).unwrap()), 0);
        assert_eq!(int(r_dec(4, 4, 3, 4).unwrap()), 3);
    }

    #[test]
    fn benchmark_cost_examples() {
        assert_eq!(int(r_cec(12, 6, 3, 8).unwrap()), 8);
        assert_eq!(int(r_cec(12, 6, 3, 4).unwrap()), 6);
        assert_eq!(int(r_cec(12, 12, 5, 8).unwrap()), 8);
        assert_eq!(int(r_cec(4, 4, 3, 4).unwrap()), 4);
    }

    #[test]
    fn converse_matches_achievability() {
        assert_eq!(int(r_cyc_star(12, 6, 3, 8).unwrap()), 6);
        assert_eq!(int(r_cyc_star(4, 4, 3, 4).unwrap()), 3);
    }

    #[test]
    fn invalid_parameters() {
        assert!(r_dec(10, 4, 2, 3).is_err());
        assert!(r_dec(12, 6, 0, 3).is_err());
        assert!(r_cec(12, 6, 7, 3).is_err());
        assert!(r_cec(12, 6, 3, 13).is_err());
        assert!(r_dec(0, 6, 3, 1).is_err());
    }

    #[test]
    fn demand_count_sweep() {
        let t = cost_table(&Sweep::over_demand_count(12, 6, 3)).unwrap();
        let dec: Vec<u64> = t.iter().map(|p| int(p.r_dec)).collect();
        let cec: Vec<u64> = t.iter().map(|p| int(p.r_cec)).collect();
        assert_eq!(dec, [3, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6]);
        assert_eq!(cec, [3, 6, 6, 6, 6, 6, 7, 8, 9, 10, 11, 12]);
        assert!(t.iter().all(|p| p.r_cyc_star == p.r_dec));
    }

    #[test]
    fn responder_sweep() {
        let t = cost_table(&Sweep::over_responders(12, 12, 8)).unwrap();
        let dec: Vec<u64> = t.iter().map(|p| int(p.r_dec)).collect();
        let cec: Vec<u64> = t.iter().map(|p| int(p.r_cec)).collect();
        assert_eq!(dec, [0, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]);
        assert_eq!(cec, [0, 8, 8, 8, 8, 8, 8, 8, 9, 10, 11, 12]);
    }

    #[test]
    #[allow(clippy::reversed_empty_ranges)]
    fn empty_and_invalid_sweeps() {
        let empty = Sweep::DemandCount {
            k: 12,
            n: 6,
            n_r: 3,
            k_c: 5..=4,
        };
        assert!(cost_table(&empty).unwrap().is_empty());
        let too_far = Sweep::Responders {
            k: 12,
            n: 6,
            k_c: 3,
            n_r: 1..=7,
        };
        assert!(cost_table(&too_far).is_err());
    }

    #[test]
    fn csv_layout() {
        let t = cost_table(&Sweep::Responders {
            k: 12,
            n: 12,
            k_c: 8,
            n_r: 1..=2,
        })
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "K,N,Nr,Kc,R_dec,R_cec,R_cyc_star\n12,12,1,8,0,0,0\n12,12,2,8,2,8,2\n"
        );
    }
}
