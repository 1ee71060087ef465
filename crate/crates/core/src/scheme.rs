//! The decentralized coding scheme.
//!
//! Worker `n` cannot see the messages in `Z̄_n`, so it only ever combines the
//! demanded rows `F_1..F_Kc` with coefficient vectors `w` satisfying
//! `w^T F̄_n = 0`: such combinations expand to messages it holds. It keeps a
//! basis `u_{n,*}` of that null space for itself and broadcasts `K/N` random
//! combinations `v_{n,*}` of it. Any worker then stacks the `v`-rows it hears
//! with its own `u`-rows into a square matrix `S` and inverts it.
//!
//! For `K/N <= Kc <= (K/N) Nr` the null space is too small and
//! [`recover_all_scheme`] is used instead: it ships raw random combinations
//! of local messages so every worker can rebuild the messages it is missing.

use crate::assignment::{CyclicAssignment, SystemParams};
use crate::field::{FieldElement, FieldModulus};
use crate::linalg::{LinalgError, Matrix, SubspaceBasis};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Redraw budget for zero, dependent or degenerate random draws.
pub const RETRY_BUDGET: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `Nr = 1`: every worker holds every dataset, nothing is sent.
    Local,
    /// `Kc > (K/N) Nr`: null-space coding.
    NullSpace,
    /// `K/N <= Kc <= (K/N) Nr`: recover-all stand-in.
    RecoverAll,
    /// `Kc < K/N`: needs message splitting, not simulated.
    Unsupported,
}

impl Regime {
    pub fn classify(p: &SystemParams) -> Regime {
        if p.n_r() == 1 {
            Regime::Local
        } else if p.k_c() > p.batch() * p.n_r() {
            Regime::NullSpace
        } else if p.k_c() >= p.batch() {
            Regime::RecoverAll
        } else {
            Regime::Unsupported
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Local => "local",
            Regime::NullSpace => "null-space",
            Regime::RecoverAll => "recover-all",
            Regime::Unsupported => "unsupported",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("regime error: {0}")]
    Regime(String),
    #[error("no usable demand matrix after {attempts} draws (some F̄_n is rank deficient)")]
    DegenerateDemand { attempts: usize },
    #[error("demand matrix rejected: {0}")]
    InvalidDemand(String),
    #[error("could not draw independent coding vectors after {attempts} attempts")]
    DegenerateDraw { attempts: usize },
    #[error("worker {worker} would need message W_{dataset}, which it does not hold")]
    SupportLeak { worker: usize, dataset: usize },
    #[error("no encoding for worker {0}")]
    MissingEncoding(usize),
    #[error("decode failure at worker {worker}: {source}")]
    DecodeFailure { worker: usize, source: LinalgError },
    #[error("recover-all decode failure at worker {worker}: {source}")]
    FallbackDecodeFailure { worker: usize, source: LinalgError },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl SchemeError {
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            SchemeError::DecodeFailure { worker, source } => SchemeError::DecodeFailure {
                worker,
                source: source.with_seed(seed),
            },
            SchemeError::FallbackDecodeFailure { worker, source } => {
                SchemeError::FallbackDecodeFailure {
                    worker,
                    source: source.with_seed(seed),
                }
            }
            other => other,
        }
    }
}

pub type Result<T, E = SchemeError> = std::result::Result<T, E>;

fn zero_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|&i| i - 1).collect()
}

/// The `Kc x K` demand matrix `F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandMatrix {
    f: Matrix,
}

impl DemandMatrix {
    /// Accepts `f` if it has shape `Kc x K`, full row rank, and every `F̄_n`
    /// has rank `min(Kc, (K/N)(Nr - 1))` (full column rank whenever the
    /// null-space scheme applies).
    pub fn new(f: Matrix, assignment: &CyclicAssignment) -> Result<Self> {
        let p = assignment.params();
        if f.shape() != (p.k_c(), p.k()) {
            return Err(SchemeError::InvalidDemand(format!(
                "expected {}x{}, got {}x{}",
                p.k_c(),
                p.k(),
                f.rows(),
                f.cols()
            )));
        }
        if f.field() != p.field() {
            return Err(LinalgError::FieldMismatch {
                left: f.field(),
                right: p.field(),
            }
            .into());
        }
        if f.rank() != p.k_c() {
            return Err(SchemeError::InvalidDemand(
                "F is not of full row rank".into(),
            ));
        }
        let want = p.k_c().min(p.missing());
        for n in 1..=p.n() {
            let rank = f
                .select_columns(&zero_based(&assignment.complement(n)))
                .rank();
            if rank != want {
                return Err(SchemeError::InvalidDemand(format!(
                    "F̄_{n} has rank {rank}, expected {want}"
                )));
            }
        }
        Ok(DemandMatrix { f })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.f
    }

    /// `F̄_n`: the columns of `F` indexed by `Z̄_n`.
    pub fn unknown_columns(&self, assignment: &CyclicAssignment, n: usize) -> Matrix {
        self.f
            .select_columns(&zero_based(&assignment.complement(n)))
    }

    /// `F W`, the target every worker must recover.
    pub fn apply(&self, w: &MessageSet) -> Result<Matrix> {
        Ok(self.f.mat_mul(w.matrix())?)
    }
}

/// Uniform `Kc x K` demand matrix, redrawn until [`DemandMatrix::new`]
/// accepts it.
pub fn random_demand<R: Rng + ?Sized>(
    assignment: &CyclicAssignment,
    rng: &mut R,
) -> Result<DemandMatrix> {
    random_demand_counted(assignment, rng).map(|(f, _)| f)
}

/// As [`random_demand`], also returning how many draws were rejected.
pub fn random_demand_counted<R: Rng + ?Sized>(
    assignment: &CyclicAssignment,
    rng: &mut R,
) -> Result<(DemandMatrix, usize)> {
    let p = assignment.params();
    for attempt in 0..RETRY_BUDGET {
        let f = Matrix::random(p.field(), p.k_c(), p.k(), rng);
        match DemandMatrix::new(f, assignment) {
            Ok(d) => return Ok((d, attempt)),
            Err(SchemeError::InvalidDemand(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(SchemeError::DegenerateDemand {
        attempts: RETRY_BUDGET,
    })
}

/// The messages `W_1..W_K` as rows of a `K x L` matrix. Padding rows are
/// zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageSet {
    w: Matrix,
}

impl MessageSet {
    pub fn new(w: Matrix) -> Self {
        MessageSet { w }
    }

    pub fn random<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Self {
        let mut w = Matrix::random(params.field(), params.k(), params.l(), rng);
        for k in params.datasets()..params.k() {
            for c in 0..params.l() {
                w.set(k, c, FieldElement::ZERO);
            }
        }
        MessageSet { w }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.w.rows() == 0
    }

    /// Worker `n`'s view: only the rows in `Z_n`.
    pub fn local<'a>(&'a self, assignment: &'a CyclicAssignment, n: usize) -> LocalMessages<'a> {
        LocalMessages {
            worker: n,
            held: assignment.z(n),
            set: self,
        }
    }
}

/// Read access restricted to the messages a worker holds.
#[derive(Clone, Copy, Debug)]
pub struct LocalMessages<'a> {
    worker: usize,
    held: &'a [usize],
    set: &'a MessageSet,
}

impl<'a> LocalMessages<'a> {
    pub fn worker(&self) -> usize {
        self.worker
    }

    pub fn held(&self) -> &'a [usize] {
        self.held
    }

    /// `W_k` (1-based), if held.
    pub fn get(&self, k: usize) -> Option<&'a [FieldElement]> {
        self.held
            .binary_search(&k)
            .ok()
            .map(|_| self.set.w.row(k - 1))
    }

    pub fn width(&self) -> usize {
        self.set.w.cols()
    }

    /// `sum_k coeffs[k] W_k` using held messages only; any nonzero
    /// coefficient on an unheld message is a [`SchemeError::SupportLeak`].
    pub fn combine(
        &self,
        coeffs: &[FieldElement],
        field: FieldModulus,
    ) -> Result<Vec<FieldElement>> {
        let mut out = vec![FieldElement::ZERO; self.width()];
        for (k0, &c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let row = self.get(k0 + 1).ok_or(SchemeError::SupportLeak {
                worker: self.worker,
                dataset: k0 + 1,
            })?;
            for (o, &x) in out.iter_mut().zip(row) {
                *o = field.mul_add(*o, c, x);
            }
        }
        Ok(out)
    }
}

/// Basis of `N(F̄_n^T)`: `Kc - (K/N)(Nr - 1)` vectors of length `Kc`.
pub fn build_local_nullspace(
    f: &DemandMatrix,
    assignment: &CyclicAssignment,
    n: usize,
) -> Result<SubspaceBasis> {
    let p = assignment.params();
    let Some(dim) = p.local_dim() else {
        return Err(SchemeError::Regime(format!(
            "Kc = {} <= (K/N)(Nr - 1) = {}: worker null space is trivial",
            p.k_c(),
            p.missing()
        )));
    };
    let fbar = f.unknown_columns(assignment, n);
    if fbar.rank() != fbar.cols() {
        return Err(SchemeError::DegenerateDemand { attempts: 1 });
    }
    let basis = fbar.transpose().null_space_basis();
    debug_assert_eq!(basis.dim(), dim);
    Ok(basis)
}

/// Coefficient rows and the vectors they produce.
pub type CodingDraw = (Vec<Vec<FieldElement>>, Vec<Vec<FieldElement>>);

/// `count` uniform combinations of `basis`. Zero vectors are redrawn, and
/// while `count <= dim` the set is kept linearly independent. Returns the
/// coefficient rows alongside the vectors.
pub fn draw_v_vectors<R: Rng + ?Sized>(
    basis: &SubspaceBasis,
    count: usize,
    rng: &mut R,
) -> Result<CodingDraw> {
    if basis.is_empty() {
        return Err(SchemeError::Regime(
            "cannot draw from an empty basis".into(),
        ));
    }
    let f = basis.field();
    let independent = count <= basis.dim();
    let mut coeffs: Vec<Vec<FieldElement>> = Vec::with_capacity(count);
    let mut vectors: Vec<Vec<FieldElement>> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut accepted = false;
        for _ in 0..RETRY_BUDGET {
            let c = f.rand_vector(basis.dim(), rng);
            if c.iter().all(|x| x.is_zero()) {
                continue;
            }
            // The basis is independent, so dependence of the vectors is
            // dependence of their coefficient rows.
            vectors.push(basis.combine(&c));
            coeffs.push(c);
            if independent && Matrix::from_rows(f, basis.dim(), &coeffs)?.rank() < coeffs.len() {
                coeffs.pop();
                vectors.pop();
                continue;
            }
            accepted = true;
            break;
        }
        if !accepted {
            return Err(SchemeError::DegenerateDraw {
                attempts: RETRY_BUDGET,
            });
        }
    }
    Ok((coeffs, vectors))
}

/// One worker's coding vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkerEncoding {
    worker: usize,
    u_basis: SubspaceBasis,
    v_vectors: Vec<Vec<FieldElement>>,
}

impl WorkerEncoding {
    /// Null-space basis plus `K/N` random transmit vectors for worker `n`.
    pub fn generate<R: Rng + ?Sized>(
        f: &DemandMatrix,
        assignment: &CyclicAssignment,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let u_basis = build_local_nullspace(f, assignment, n)?;
        let (_, v_vectors) = draw_v_vectors(&u_basis, assignment.params().batch(), rng)?;
        Ok(WorkerEncoding {
            worker: n,
            u_basis,
            v_vectors,
        })
    }

    /// Assemble from explicit vectors, checking that every `u` and `v`
    /// annihilates `F̄_n` and that the `v`s lie in `span(u)`.
    pub fn from_parts(
        f: &DemandMatrix,
        assignment: &CyclicAssignment,
        n: usize,
        u_basis: SubspaceBasis,
        v_vectors: Vec<Vec<FieldElement>>,
    ) -> Result<Self> {
        let fbar = f.unknown_columns(assignment, n);
        for w in u_basis.vectors().iter().chain(&v_vectors) {
            if !fbar.vec_mul(w)?.iter().all(|x| x.is_zero()) {
                return Err(SchemeError::InvalidDemand(format!(
                    "coding vector of worker {n} does not annihilate F̄_{n}"
                )));
            }
        }
        for v in &v_vectors {
            if !u_basis.contains(v)? {
                return Err(SchemeError::InvalidDemand(format!(
                    "v-vector of worker {n} is outside span(u)"
                )));
            }
        }
        Ok(WorkerEncoding {
            worker: n,
            u_basis,
            v_vectors,
        })
    }

    pub fn worker(&self) -> usize {
        self.worker
    }

    pub fn u_basis(&self) -> &SubspaceBasis {
        &self.u_basis
    }

    pub fn u_vectors(&self) -> &[Vec<FieldElement>] {
        self.u_basis.vectors()
    }

    pub fn v_vectors(&self) -> &[Vec<FieldElement>] {
        &self.v_vectors
    }
}

/// Rows `w_i^T F W` for each coding vector `w_i`, from local messages only.
/// Returns the message-coefficient rows `w_i^T F` and the payload rows.
fn coded_rows(
    vectors: &[Vec<FieldElement>],
    f: &DemandMatrix,
    local: &LocalMessages<'_>,
) -> Result<(Matrix, Matrix)> {
    let field = f.matrix().field();
    let mut coeff_rows = Vec::with_capacity(vectors.len());
    let mut payload = Vec::with_capacity(vectors.len());
    for w in vectors {
        let c = f.matrix().vec_mul(w)?;
        payload.push(local.combine(&c, field)?);
        coeff_rows.push(c);
    }
    Ok((
        Matrix::from_rows(field, f.matrix().cols(), &coeff_rows)?,
        Matrix::from_rows(field, local.width(), &payload)?,
    ))
}

/// What worker `n` broadcasts: `v_{n,i}^T [F_1; ...; F_Kc]` for each `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signal {
    pub sender: usize,
    /// Row `i` is `v_{n,i}^T F`, the message coefficients of payload row `i`.
    pub coefficients: Matrix,
    /// `K/N` rows of length `L`.
    pub payload: Matrix,
}

impl Signal {
    /// Transmitted symbols `T_n`.
    pub fn symbols(&self) -> usize {
        self.payload.rows() * self.payload.cols()
    }

    pub fn dump(&self) -> SignalDump {
        SignalDump {
            sender: self.sender,
            provenance: (0..self.payload.rows())
                .map(|index| RowSource {
                    worker: self.sender,
                    kind: RowKind::V,
                    index,
                })
                .collect(),
            rows: self.payload.to_u64_rows(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalDump {
    pub sender: usize,
    pub rows: Vec<Vec<u64>>,
    pub provenance: Vec<RowSource>,
}

pub fn encode_signal(
    encoding: &WorkerEncoding,
    f: &DemandMatrix,
    local: &LocalMessages<'_>,
) -> Result<Signal> {
    debug_assert_eq!(encoding.worker, local.worker());
    let (coefficients, payload) = coded_rows(&encoding.v_vectors, f, local)?;
    Ok(Signal {
        sender: encoding.worker,
        coefficients,
        payload,
    })
}

/// `u_{n,i}^T [F_1; ...; F_Kc]` for every `i`, computed by worker `n` itself.
pub fn local_u_rows(
    encoding: &WorkerEncoding,
    f: &DemandMatrix,
    local: &LocalMessages<'_>,
) -> Result<Matrix> {
    coded_rows(encoding.u_vectors(), f, local).map(|(_, payload)| payload)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    U,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowSource {
    pub worker: usize,
    pub kind: RowKind,
    /// 0-based index into the worker's `u` or `v` list.
    pub index: usize,
}

/// Square `Kc x Kc` stack of received `v`-rows and local `u`-rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodingMatrix {
    pub s: Matrix,
    pub row_provenance: Vec<RowSource>,
}

impl DecodingMatrix {
    pub fn workers(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.row_provenance.iter().map(|r| r.worker).collect();
        w.dedup();
        w.sort_unstable();
        w.dedup();
        w
    }
}

fn find(encodings: &[WorkerEncoding], worker: usize) -> Result<&WorkerEncoding> {
    encodings
        .iter()
        .find(|e| e.worker == worker)
        .ok_or(SchemeError::MissingEncoding(worker))
}

fn push_rows(
    rows: &mut Vec<Vec<FieldElement>>,
    prov: &mut Vec<RowSource>,
    enc: &WorkerEncoding,
    kind: RowKind,
) {
    let vectors = match kind {
        RowKind::U => enc.u_vectors(),
        RowKind::V => enc.v_vectors(),
    };
    for (index, v) in vectors.iter().enumerate() {
        rows.push(v.clone());
        prov.push(RowSource {
            worker: enc.worker,
            kind,
            index,
        });
    }
}

fn finish(
    rows: Vec<Vec<FieldElement>>,
    row_provenance: Vec<RowSource>,
    encodings: &[WorkerEncoding],
) -> Result<DecodingMatrix> {
    let first = encodings.first().ok_or(SchemeError::MissingEncoding(0))?;
    let field = first.u_basis.field();
    let k_c = first.u_basis.ambient_dim();
    let s = Matrix::from_rows(field, k_c, &rows)?;
    if !s.is_square() {
        return Err(LinalgError::NotSquare {
            rows: s.rows(),
            cols: s.cols(),
        }
        .into());
    }
    Ok(DecodingMatrix { s, row_provenance })
}

/// `S_A^{(A(i))}` for the responder at 0-based `position` of `a`: the
/// `v`-rows of earlier responders, then all of its own `u`-rows, then the
/// `v`-rows of later responders.
pub fn build_decoding_matrix_responder(
    encodings: &[WorkerEncoding],
    a: &[usize],
    position: usize,
) -> Result<DecodingMatrix> {
    assert!(
        position < a.len(),
        "position {position} outside responding set"
    );
    let mut rows = Vec::new();
    let mut prov = Vec::new();
    for (p, &w) in a.iter().enumerate() {
        let kind = if p == position {
            RowKind::U
        } else {
            RowKind::V
        };
        push_rows(&mut rows, &mut prov, find(encodings, w)?, kind);
    }
    finish(rows, prov, encodings)
}

/// `S_{A'}^{(j)}` for non-responder `j`: the `v`-rows of `helpers` (a subset
/// of `a` of size `Nr - 1`) followed by the `u`-rows of `j`.
pub fn build_decoding_matrix_nonresponder(
    encodings: &[WorkerEncoding],
    a: &[usize],
    helpers: &[usize],
    j: usize,
) -> Result<DecodingMatrix> {
    assert!(!a.contains(&j), "worker {j} is a responder");
    assert!(
        helpers.iter().all(|h| a.contains(h)),
        "helpers must respond"
    );
    assert_eq!(
        helpers.len() + 1,
        a.len(),
        "a non-responder decodes from Nr - 1 helpers"
    );
    let mut rows = Vec::new();
    let mut prov = Vec::new();
    for &h in helpers {
        push_rows(&mut rows, &mut prov, find(encodings, h)?, RowKind::V);
    }
    push_rows(&mut rows, &mut prov, find(encodings, j)?, RowKind::U);
    finish(rows, prov, encodings)
}

/// Line up what `decoder` knows in `s`'s row order: payload rows from the
/// received signals for `v`-rows, its own computed rows for `u`-rows.
pub fn stack_observations(
    s: &DecodingMatrix,
    signals: &[Signal],
    own_u_rows: &Matrix,
    decoder: usize,
) -> Result<Matrix> {
    let mut rows = Vec::with_capacity(s.row_provenance.len());
    for src in &s.row_provenance {
        let row = match src.kind {
            RowKind::U => {
                debug_assert_eq!(src.worker, decoder);
                own_u_rows.row(src.index).to_vec()
            }
            RowKind::V => signals
                .iter()
                .find(|sig| sig.sender == src.worker)
                .ok_or(SchemeError::MissingEncoding(src.worker))?
                .payload
                .row(src.index)
                .to_vec(),
        };
        rows.push(row);
    }
    Ok(Matrix::from_rows(
        own_u_rows.field(),
        own_u_rows.cols(),
        &rows,
    )?)
}

/// `S^{-1}` times the stacked observations: `[F_1; ...; F_Kc]`.
pub fn decode(s: &DecodingMatrix, stacked_rows: &Matrix, worker: usize) -> Result<Matrix> {
    s.s.solve(stacked_rows).map_err(|e| match e {
        e @ LinalgError::Singular { .. } => SchemeError::DecodeFailure { worker, source: e },
        other => other.into(),
    })
}

/// Result of one recover-all round.
#[derive(Clone, Debug)]
pub struct RecoverAllOutcome {
    /// Per worker `1..=N`: the decoded `F W` or the failure.
    pub decoded: Vec<Result<Matrix>>,
    /// Symbols put on the shared link: `(K/N) Nr L`.
    pub cost_symbols: usize,
    /// Rounds redrawn because some worker could not solve.
    pub retries: usize,
    /// `(sender, payload)` of the final round, one `K/N x L` block per
    /// responder.
    pub signals: Vec<(usize, Matrix)>,
}

/// Stand-in for `K/N <= Kc <= (K/N) Nr`, matching that regime's cost.
///
/// Each responder sends `K/N` uniform combinations of its own messages.
/// Every worker takes `Nr - 1` responders other than itself (all of `A`
/// minus itself if it responds, else the first `Nr - 1`), subtracts the
/// contributions of messages it already holds, solves the remaining square
/// system for its `(K/N)(Nr - 1)` missing messages, and evaluates `F W`.
/// A singular system triggers a redraw of every responder's combinations,
/// up to [`RETRY_BUDGET`] times.
pub fn recover_all_scheme<R: Rng + ?Sized>(
    assignment: &CyclicAssignment,
    f: &DemandMatrix,
    w: &MessageSet,
    a: &[usize],
    rng: &mut R,
) -> Result<RecoverAllOutcome> {
    let p = assignment.params();
    if p.k_c() < p.batch() {
        return Err(SchemeError::Regime(format!(
            "recover-all needs Kc >= K/N (Kc = {}, K/N = {})",
            p.k_c(),
            p.batch()
        )));
    }
    let field = p.field();
    if p.n_r() == 1 {
        let target = f.apply(w)?;
        return Ok(RecoverAllOutcome {
            decoded: (1..=p.n()).map(|_| Ok(target.clone())).collect(),
            cost_symbols: 0,
            retries: 0,
            signals: Vec::new(),
        });
    }

    let mut retries = 0;
    loop {
        // Coefficients over Z_n (in Z_n's order) for each responder.
        let coeffs: Vec<(usize, Matrix, Matrix)> = a
            .iter()
            .map(|&n| {
                let held = assignment.z(n);
                let c = Matrix::random(field, p.batch(), held.len(), rng);
                let local = w.matrix().select_rows(&zero_based(held));
                let payload = c.mat_mul(&local)?;
                Ok((n, c, payload))
            })
            .collect::<Result<_>>()?;
        let cost_symbols = coeffs.iter().map(|(_, _, x)| x.rows() * x.cols()).sum();

        let decoded: Vec<Result<Matrix>> = (1..=p.n())
            .map(|j| {
                let helpers: Vec<&(usize, Matrix, Matrix)> = coeffs
                    .iter()
                    .filter(|(n, _, _)| *n != j)
                    .take(p.n_r() - 1)
                    .collect();
                recover_at(assignment, f, w, j, &helpers)
            })
            .collect();

        let failed = decoded
            .iter()
            .any(|d| matches!(d, Err(SchemeError::FallbackDecodeFailure { .. })));
        if !failed || retries == RETRY_BUDGET {
            return Ok(RecoverAllOutcome {
                decoded,
                cost_symbols,
                retries,
                signals: coeffs.into_iter().map(|(n, _, x)| (n, x)).collect(),
            });
        }
        retries += 1;
    }
}

fn recover_at(
    assignment: &CyclicAssignment,
    f: &DemandMatrix,
    w: &MessageSet,
    j: usize,
    helpers: &[&(usize, Matrix, Matrix)],
) -> Result<Matrix> {
    let p = assignment.params();
    let field = p.field();
    let local = w.local(assignment, j);
    let missing = assignment.complement(j);
    let mut system = Vec::new();
    let mut rhs = Vec::new();
    for (n, c, payload) in helpers {
        let held = assignment.z(*n);
        for r in 0..c.rows() {
            let mut row = vec![FieldElement::ZERO; missing.len()];
            let mut known = payload.row(r).to_vec();
            for (col, &k) in held.iter().enumerate() {
                let coeff = c.get(r, col);
                if let Some(wk) = local.get(k) {
                    for (x, &y) in known.iter_mut().zip(wk) {
                        *x = field.sub(*x, field.mul(coeff, y));
                    }
                } else {
                    let slot = missing
                        .binary_search(&k)
                        .expect("unheld datasets are missing");
                    row[slot] = coeff;
                }
            }
            system.push(row);
            rhs.push(known);
        }
    }
    let system = Matrix::from_rows(field, missing.len(), &system)?;
    let rhs = Matrix::from_rows(field, p.l(), &rhs)?;
    let solved = system
        .solve(&rhs)
        .map_err(|source| SchemeError::FallbackDecodeFailure { worker: j, source })?;

    // Rebuild the full message table from held rows plus recovered rows.
    let mut full = Matrix::zeros(field, p.k(), p.l());
    for k in 1..=p.k() {
        let row = match local.get(k) {
            Some(row) => row.to_vec(),
            None => solved
                .row(missing.binary_search(&k).expect("missing"))
                .to_vec(),
        };
        for (c, x) in row.into_iter().enumerate() {
            full.set(k - 1, c, x);
        }
    }
    Ok(f.matrix().mat_mul(&full)?)
}
