//! Problem parameters and the cyclic dataset assignment.
//!
//! All dataset and worker indices in this module's public surface are
//! 1-based. `mod1` is the remainder convention the assignment is written in:
//! results land in `1..=y`, with `y` standing in for zero.

use crate::field::{FieldError, FieldModulus};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("N = {n} does not divide K = {k}; pass padding to inject empty datasets")]
    NotDivisible { k: usize, n: usize },
    #[error("invalid parameters: {0}")]
    Range(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Remainder of `x / y` in `1..=y`: `mod1(4, 4) == 4`, `mod1(-1, 4) == 3`.
pub fn mod1(x: i64, y: usize) -> usize {
    assert!(y >= 1, "mod1 needs a positive modulus");
    let r = x.rem_euclid(y as i64) as usize;
    if r == 0 {
        y
    } else {
        r
    }
}

/// One instance of the distributed computation problem.
///
/// `k` counts datasets after padding; `padding` of them are empty filler
/// injected to make `n | k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "Nr")]
    n_r: usize,
    #[serde(rename = "Kc")]
    k_c: usize,
    q: FieldModulus,
    #[serde(rename = "L")]
    l: usize,
    padding: usize,
}

impl SystemParams {
    pub fn new(
        k: usize,
        n: usize,
        n_r: usize,
        k_c: usize,
        q: FieldModulus,
        l: usize,
    ) -> Result<Self, ParamError> {
        Self::build(k, n, n_r, k_c, q, l, false)
    }

    /// Like [`SystemParams::new`], but rounds `k` up to a multiple of `n`
    /// with empty datasets instead of rejecting it.
    pub fn with_padding(
        k: usize,
        n: usize,
        n_r: usize,
        k_c: usize,
        q: FieldModulus,
        l: usize,
    ) -> Result<Self, ParamError> {
        Self::build(k, n, n_r, k_c, q, l, true)
    }

    fn build(
        k: usize,
        n: usize,
        n_r: usize,
        k_c: usize,
        q: FieldModulus,
        l: usize,
        pad: bool,
    ) -> Result<Self, ParamError> {
        if k == 0 || n == 0 {
            return Err(ParamError::Range(format!(
                "need K >= 1 and N >= 1 (K = {k}, N = {n})"
            )));
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
        if l == 0 {
            return Err(ParamError::Range("need L >= 1".into()));
        }
        let padding = (n - k % n) % n;
        if padding > 0 && !pad {
            return Err(ParamError::NotDivisible { k, n });
        }
        Ok(SystemParams {
            k: k + padding,
            n,
            n_r,
            k_c,
            q,
            l,
            padding,
        })
    }

    /// Dataset count including padding.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Dataset count as requested, before padding.
    pub fn datasets(&self) -> usize {
        self.k - self.padding
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn k_c(&self) -> usize {
        self.k_c
    }

    pub fn field(&self) -> FieldModulus {
        self.q
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// K/N, the number of coded rows each worker transmits.
    pub fn batch(&self) -> usize {
        self.k / self.n
    }

    /// Computation cost M = (K/N)(N - Nr + 1).
    pub fn m(&self) -> usize {
        self.batch() * (self.n - self.n_r + 1)
    }

    /// Replication factor N - Nr + 1.
    pub fn replication(&self) -> usize {
        self.n - self.n_r + 1
    }

    /// Datasets a worker does not hold: (K/N)(Nr - 1).
    pub fn missing(&self) -> usize {
        self.batch() * (self.n_r - 1)
    }

    /// Local null-space dimension Kc - (K/N)(Nr - 1), when positive.
    pub fn local_dim(&self) -> Option<usize> {
        self.k_c.checked_sub(self.missing()).filter(|&d| d > 0)
    }

    pub fn with_field(mut self, q: FieldModulus) -> Self {
        self.q = q;
        self
    }

    pub fn with_l(mut self, l: usize) -> Self {
        assert!(l >= 1);
        self.l = l;
        self
    }
}

/// Datasets held by each worker under the cyclic assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicAssignment {
    params: SystemParams,
    // z[n - 1] is Z_n, sorted ascending, 1-based.
    z: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentDump {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "Nr")]
    pub n_r: usize,
    #[serde(rename = "Z")]
    pub z: Vec<Vec<usize>>,
}

impl CyclicAssignment {
    /// `Z_n = ∪_p { mod1(n, N) + pN, ..., mod1(n + N - Nr, N) + pN }`.
    pub fn new(params: SystemParams) -> Self {
        let (n_workers, batch) = (params.n(), params.batch());
        let z = (1..=n_workers)
            .map(|n| {
                let mut set: Vec<usize> = (0..batch)
                    .flat_map(|p| {
                        (0..params.replication())
                            .map(move |i| mod1((n + i) as i64, n_workers) + p * n_workers)
                    })
                    .collect();
                set.sort_unstable();
                set
            })
            .collect();
        CyclicAssignment { params, z }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn m(&self) -> usize {
        self.params.m()
    }

    /// `Z_n`, 1-based worker index.
    pub fn z(&self, n: usize) -> &[usize] {
        assert!(
            (1..=self.params.n()).contains(&n),
            "worker {n} out of range"
        );
        &self.z[n - 1]
    }

    pub fn holds(&self, n: usize, k: usize) -> bool {
        self.z(n).binary_search(&k).is_ok()
    }

    /// `[K] \ Z_n`, sorted.
    pub fn complement(&self, n: usize) -> Vec<usize> {
        (1..=self.params.k())
            .filter(|&k| !self.holds(n, k))
            .collect()
    }

    /// Workers `mod1(k, N), mod1(k - 1, N), ..., mod1(k - N + Nr, N)`, sorted.
    pub fn holders_of(&self, k: usize) -> Vec<usize> {
        assert!(
            (1..=self.params.k()).contains(&k),
            "dataset {k} out of range"
        );
        let n = self.params.n();
        let mut w: Vec<usize> = (0..self.params.replication())
            .map(|i| mod1(k as i64 - i as i64, n))
            .collect();
        w.sort_unstable();
        w
    }

    pub fn dump(&self) -> AssignmentDump {
        AssignmentDump {
            k: self.params.k(),
            n: self.params.n(),
            n_r: self.params.n_r(),
            z: self.z.clone(),
        }
    }
}
