//! End-to-end protocol runs over every straggler pattern.
//!
//! A trial draws a fresh instance (demand matrix, messages, coding vectors)
//! from its own derived seed, then replays the round for every responding set
//! `A` of size `Nr`: responders broadcast, every worker decodes, and the
//! result is compared with `F W`. Straggling is purely combinatorial.

use crate::assignment::{CyclicAssignment, SystemParams};
use crate::costs::{self, Cost};
use crate::linalg::Matrix;
use crate::scheme::{
    self, build_decoding_matrix_nonresponder, build_decoding_matrix_responder, decode,
    encode_signal, local_u_rows, random_demand, stack_observations, DemandMatrix, MessageSet,
    Regime, SchemeError, Signal, SignalDump, WorkerEncoding,
};
use crate::seed::{derive_seed, rng_from_seed, suite, trial_seed};
use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Enumeration limit for `C(N, Nr)` unless forced.
pub const SCENARIO_GUARD: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("regime error: {0}")]
    Regime(String),
    #[error("C(N, Nr) = {scenarios} straggler patterns exceeds the limit of {limit}; pass force to run anyway")]
    Guard { scenarios: u128, limit: u128 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Pick by regime.
    #[default]
    Auto,
    NullSpace,
    RecoverAll,
}

impl SchemeKind {
    /// The concrete regime this kind runs at `params`, or why it cannot.
    pub fn resolve(self, params: &SystemParams) -> Result<Regime, SimError> {
        let regime = Regime::classify(params);
        if regime == Regime::Local {
            return Ok(Regime::Local);
        }
        match (self, regime) {
            (_, Regime::Unsupported) => Err(SimError::Regime(format!(
                "Kc = {} < K/N = {} requires splitting messages, which is not implemented; only costs are available",
                params.k_c(),
                params.batch()
            ))),
            (SchemeKind::Auto, r) => Ok(r),
            (SchemeKind::NullSpace, Regime::NullSpace) => Ok(Regime::NullSpace),
            (SchemeKind::NullSpace, _) => Err(SimError::Regime(format!(
                "null-space scheme needs Kc > (K/N) Nr (Kc = {}, (K/N) Nr = {})",
                params.k_c(),
                params.batch() * params.n_r()
            ))),
            (SchemeKind::RecoverAll, _) => Ok(Regime::RecoverAll),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub trials: usize,
    pub master_seed: u64,
    pub scheme: SchemeKind,
    /// Check every `(Nr - 1)`-subset of helpers for non-responders instead
    /// of only the lexicographically first.
    pub strict: bool,
    pub force: bool,
    pub transcript: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            trials: 100,
            master_seed: 0,
            scheme: SchemeKind::Auto,
            strict: false,
            force: false,
            transcript: false,
        }
    }
}

/// One drawn problem instance plus everything that does not depend on `A`.
pub struct Instance {
    pub assignment: CyclicAssignment,
    pub seed: u64,
    pub f: DemandMatrix,
    pub w: MessageSet,
    pub target: Matrix,
    coded: Option<NullSpaceState>,
}

struct NullSpaceState {
    encodings: Vec<WorkerEncoding>,
    signals: Vec<Signal>,
    u_rows: Vec<Matrix>,
}

impl Instance {
    /// Draw `F`, `W` and, for the null-space regime, every worker's coding
    /// vectors and signal.
    pub fn generate(
        assignment: &CyclicAssignment,
        regime: Regime,
        seed: u64,
    ) -> Result<Self, SchemeError> {
        let mut rng = rng_from_seed(seed);
        let f = random_demand(assignment, &mut rng)?;
        let w = MessageSet::random(assignment.params(), &mut rng);
        let coded = match regime {
            Regime::NullSpace => {
                let encodings = (1..=assignment.params().n())
                    .map(|n| WorkerEncoding::generate(&f, assignment, n, &mut rng))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(NullSpaceState::new(assignment, &f, &w, encodings)?)
            }
            _ => None,
        };
        Instance::assemble(assignment, seed, f, w, coded)
    }

    /// Instance with caller-supplied demand, messages and coding vectors.
    pub fn with_encodings(
        assignment: &CyclicAssignment,
        f: DemandMatrix,
        w: MessageSet,
        encodings: Vec<WorkerEncoding>,
    ) -> Result<Self, SchemeError> {
        let coded = NullSpaceState::new(assignment, &f, &w, encodings)?;
        Instance::assemble(assignment, 0, f, w, Some(coded))
    }

    fn assemble(
        assignment: &CyclicAssignment,
        seed: u64,
        f: DemandMatrix,
        w: MessageSet,
        coded: Option<NullSpaceState>,
    ) -> Result<Self, SchemeError> {
        let target = f.apply(&w)?;
        Ok(Instance {
            assignment: assignment.clone(),
            seed,
            f,
            w,
            target,
            coded,
        })
    }

    pub fn signals(&self) -> Option<&[Signal]> {
        self.coded.as_ref().map(|c| c.signals.as_slice())
    }

    pub fn encodings(&self) -> Option<&[WorkerEncoding]> {
        self.coded.as_ref().map(|c| c.encodings.as_slice())
    }
}

impl NullSpaceState {
    fn new(
        assignment: &CyclicAssignment,
        f: &DemandMatrix,
        w: &MessageSet,
        encodings: Vec<WorkerEncoding>,
    ) -> Result<Self, SchemeError> {
        let mut signals = Vec::with_capacity(encodings.len());
        let mut u_rows = Vec::with_capacity(encodings.len());
        for enc in &encodings {
            let local = w.local(assignment, enc.worker());
            let signal = encode_signal(enc, f, &local)?;
            if cfg!(debug_assertions) {
                // Same rows with full knowledge of W.
                let global =
                    Matrix::from_rows(f.matrix().field(), f.matrix().rows(), enc.v_vectors())?
                        .mat_mul(&f.apply(w)?)?;
                assert_eq!(
                    signal.payload,
                    global,
                    "local encoding of worker {} diverged",
                    enc.worker()
                );
            }
            signals.push(signal);
            u_rows.push(local_u_rows(enc, f, &local)?);
        }
        Ok(NullSpaceState {
            encodings,
            signals,
            u_rows,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeRole {
    Responder,
    NonResponder,
}

/// One decode attempt by one worker.
#[derive(Clone, Debug)]
pub struct DecodeCheck {
    pub worker: usize,
    pub role: DecodeRole,
    /// Workers whose signals were used.
    pub helpers: Vec<usize>,
    pub outcome: Result<Matrix, SchemeError>,
}

impl DecodeCheck {
    pub fn succeeded(&self, target: &Matrix) -> bool {
        matches!(&self.outcome, Ok(m) if m == target)
    }
}

#[derive(Clone, Debug)]
pub struct RoundResult {
    pub checks: Vec<DecodeCheck>,
    /// `sum_{n in A} T_n`.
    pub cost_symbols: usize,
    pub retries: usize,
    pub transcript: Vec<SignalDump>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundOptions {
    pub strict: bool,
    pub transcript: bool,
}

/// Every worker's decode for responding set `a` (sorted, 1-based).
///
/// Responders decode from the other `Nr - 1` responders plus their own
/// rows; non-responders use the first `Nr - 1` responders, or every
/// `(Nr - 1)`-subset under `strict`.
pub fn run_round(
    instance: &Instance,
    a: &[usize],
    regime: Regime,
    opts: RoundOptions,
) -> Result<RoundResult, SchemeError> {
    let p = instance.assignment.params();
    match regime {
        Regime::Local => {
            let field = p.field();
            let checks = (1..=p.n())
                .map(|n| {
                    let local = instance.w.local(&instance.assignment, n);
                    let rows = instance
                        .f
                        .matrix()
                        .row_vectors()
                        .iter()
                        .map(|coeffs| local.combine(coeffs, field))
                        .collect::<Result<Vec<_>, _>>()
                        .and_then(|rows| Ok(Matrix::from_rows(field, p.l(), &rows)?));
                    DecodeCheck {
                        worker: n,
                        role: if a.contains(&n) {
                            DecodeRole::Responder
                        } else {
                            DecodeRole::NonResponder
                        },
                        helpers: Vec::new(),
                        outcome: rows,
                    }
                })
                .collect();
            Ok(RoundResult {
                checks,
                cost_symbols: 0,
                retries: 0,
                transcript: Vec::new(),
            })
        }
        Regime::NullSpace => {
            let state = instance.coded.as_ref().ok_or_else(|| {
                SchemeError::Regime("instance was drawn without coding vectors".into())
            })?;
            let mut checks = Vec::new();
            for j in 1..=p.n() {
                let own = &state.u_rows[j - 1];
                if let Some(pos) = a.iter().position(|&x| x == j) {
                    let outcome = build_decoding_matrix_responder(&state.encodings, a, pos)
                        .and_then(|s| {
                            let obs = stack_observations(&s, &state.signals, own, j)?;
                            decode(&s, &obs, j)
                        });
                    checks.push(DecodeCheck {
                        worker: j,
                        role: DecodeRole::Responder,
                        helpers: a.iter().copied().filter(|&x| x != j).collect(),
                        outcome: outcome.map_err(|e| e.with_seed(instance.seed)),
                    });
                } else {
                    let subsets: Vec<Vec<usize>> = if opts.strict {
                        a.iter().copied().combinations(a.len() - 1).collect()
                    } else {
                        vec![a[..a.len() - 1].to_vec()]
                    };
                    for helpers in subsets {
                        let outcome =
                            build_decoding_matrix_nonresponder(&state.encodings, a, &helpers, j)
                                .and_then(|s| {
                                    let obs = stack_observations(&s, &state.signals, own, j)?;
                                    decode(&s, &obs, j)
                                });
                        checks.push(DecodeCheck {
                            worker: j,
                            role: DecodeRole::NonResponder,
                            helpers,
                            outcome: outcome.map_err(|e| e.with_seed(instance.seed)),
                        });
                    }
                }
            }
            let sent: Vec<&Signal> = state
                .signals
                .iter()
                .filter(|s| a.contains(&s.sender))
                .collect();
            Ok(RoundResult {
                checks,
                cost_symbols: sent.iter().map(|s| s.symbols()).sum(),
                retries: 0,
                transcript: if opts.transcript {
                    sent.iter().map(|s| s.dump()).collect()
                } else {
                    Vec::new()
                },
            })
        }
        Regime::RecoverAll => {
            // Recover-all redraws its combinations per round; key the stream
            // by the responding set so rounds stay independent.
            let key: Vec<u64> = a.iter().map(|&x| x as u64).collect();
            let mut rng = rng_from_seed(derive_seed(instance.seed, &key));
            let out = scheme::recover_all_scheme(
                &instance.assignment,
                &instance.f,
                &instance.w,
                a,
                &mut rng,
            )?;
            let checks = out
                .decoded
                .into_iter()
                .enumerate()
                .map(|(i, outcome)| {
                    let j = i + 1;
                    let responder = a.contains(&j);
                    DecodeCheck {
                        worker: j,
                        role: if responder {
                            DecodeRole::Responder
                        } else {
                            DecodeRole::NonResponder
                        },
                        helpers: a
                            .iter()
                            .copied()
                            .filter(|&x| x != j)
                            .take(p.n_r() - 1)
                            .collect(),
                        outcome: outcome.map_err(|e| e.with_seed(instance.seed)),
                    }
                })
                .collect();
            let transcript = if opts.transcript {
                out.signals
                    .iter()
                    .map(|(sender, payload)| SignalDump {
                        sender: *sender,
                        rows: payload.to_u64_rows(),
                        provenance: Vec::new(),
                    })
                    .collect()
            } else {
                Vec::new()
            };
            Ok(RoundResult {
                checks,
                cost_symbols: out.cost_symbols,
                retries: out.retries,
                transcript,
            })
        }
        Regime::Unsupported => Err(SchemeError::Regime("no simulation for Kc < K/N".into())),
    }
}

fn serialize_cost<S: Serializer>(c: &Cost, s: S) -> Result<S::Ok, S::Error> {
    if c.is_integer() {
        s.serialize_u64(c.to_integer())
    } else {
        s.serialize_str(&c.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParamsSummary {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "Nr")]
    pub n_r: usize,
    #[serde(rename = "Kc")]
    pub k_c: usize,
    pub q: u64,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub padding: usize,
}

impl From<&SystemParams> for ParamsSummary {
    fn from(p: &SystemParams) -> Self {
        ParamsSummary {
            k: p.datasets(),
            n: p.n(),
            n_r: p.n_r(),
            k_c: p.k_c(),
            q: p.field().q(),
            l: p.l(),
            m: p.m(),
            padding: p.padding(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureRecord {
    pub trial: usize,
    pub seed: u64,
    #[serde(rename = "A")]
    pub responding: Vec<usize>,
    /// 0 when the instance itself could not be drawn.
    pub worker: usize,
    pub kind: Option<DecodeRole>,
    pub helpers: Vec<usize>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioCost {
    #[serde(rename = "A")]
    pub responding: Vec<usize>,
    pub symbols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranscriptEntry {
    pub trial: usize,
    #[serde(rename = "A")]
    pub responding: Vec<usize>,
    pub signals: Vec<SignalDump>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub params: ParamsSummary,
    pub scheme: Regime,
    pub master_seed: u64,
    pub trials: usize,
    /// Trials times straggler patterns.
    pub scenarios_checked: usize,
    pub decode_checks: usize,
    pub decode_failures: Vec<FailureRecord>,
    /// Per responding set; identical across trials by construction.
    pub measured_cost_symbols: Vec<ScenarioCost>,
    #[serde(rename = "worst_case_cost_R", serialize_with = "serialize_cost")]
    pub worst_case_cost_r: Cost,
    #[serde(serialize_with = "serialize_cost")]
    pub r_dec: Cost,
    /// Per worker `1..=N`: max over `A` of the fraction of trials that
    /// worker failed.
    pub empirical_error_rate: Vec<f64>,
    pub max_error_rate: f64,
    pub retries: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub transcript: Vec<TranscriptEntry>,
}

impl SimulationReport {
    pub fn within_budget(&self, budget: f64) -> bool {
        self.max_error_rate <= budget
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct TrialOutcome {
    failures: Vec<FailureRecord>,
    // [scenario][worker - 1]
    failed: Vec<Vec<bool>>,
    costs: Vec<usize>,
    checks: usize,
    retries: usize,
    transcript: Vec<TranscriptEntry>,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| {
        acc.saturating_mul((n - i) as u128) / (i as u128 + 1)
    })
}

/// Responding sets of size `Nr` in lexicographic order.
pub fn straggler_patterns(params: &SystemParams) -> Vec<Vec<usize>> {
    (1..=params.n()).combinations(params.n_r()).collect()
}

fn run_trial(
    assignment: &CyclicAssignment,
    regime: Regime,
    config: &SimConfig,
    patterns: &[Vec<usize>],
    trial: usize,
) -> TrialOutcome {
    let p = assignment.params();
    let seed = trial_seed(config.master_seed, suite::SIMULATE, trial as u64);
    let opts = RoundOptions {
        strict: config.strict,
        transcript: config.transcript,
    };
    let mut out = TrialOutcome {
        failures: Vec::new(),
        failed: vec![vec![false; p.n()]; patterns.len()],
        costs: vec![0; patterns.len()],
        checks: 0,
        retries: 0,
        transcript: Vec::new(),
    };
    let instance = match Instance::generate(assignment, regime, seed) {
        Ok(i) => i,
        Err(e) => {
            // Nothing can be decoded in any scenario.
            for (s, a) in patterns.iter().enumerate() {
                out.failed[s].iter_mut().for_each(|f| *f = true);
                out.failures.push(FailureRecord {
                    trial,
                    seed,
                    responding: a.clone(),
                    worker: 0,
                    kind: None,
                    helpers: Vec::new(),
                    reason: e.to_string(),
                });
            }
            return out;
        }
    };
    for (s, a) in patterns.iter().enumerate() {
        let round = match run_round(&instance, a, regime, opts) {
            Ok(r) => r,
            Err(e) => {
                out.failed[s].iter_mut().for_each(|f| *f = true);
                out.failures.push(FailureRecord {
                    trial,
                    seed,
                    responding: a.clone(),
                    worker: 0,
                    kind: None,
                    helpers: Vec::new(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        out.costs[s] = round.cost_symbols;
        out.retries += round.retries;
        out.checks += round.checks.len();
        for check in &round.checks {
            if check.succeeded(&instance.target) {
                continue;
            }
            out.failed[s][check.worker - 1] = true;
            out.failures.push(FailureRecord {
                trial,
                seed,
                responding: a.clone(),
                worker: check.worker,
                kind: Some(check.role),
                helpers: check.helpers.clone(),
                reason: match &check.outcome {
                    Err(e) => e.to_string(),
                    Ok(_) => "decoded output differs from F W".into(),
                },
            });
        }
        if config.transcript {
            out.transcript.push(TranscriptEntry {
                trial,
                responding: a.clone(),
                signals: round.transcript,
            });
        }
    }
    out
}

/// Run `config.trials` fresh instances against every responding set.
pub fn exhaustive_stragglers(
    params: &SystemParams,
    config: &SimConfig,
) -> Result<SimulationReport, SimError> {
    let regime = config.scheme.resolve(params)?;
    let scenarios = binomial(params.n(), params.n_r());
    if scenarios > SCENARIO_GUARD && !config.force {
        return Err(SimError::Guard {
            scenarios,
            limit: SCENARIO_GUARD,
        });
    }
    let assignment = CyclicAssignment::new(*params);
    let patterns = straggler_patterns(params);

    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(&assignment, regime, config, &patterns, t))
        .collect();

    let mut fail_counts = vec![vec![0usize; params.n()]; patterns.len()];
    let mut costs = vec![0usize; patterns.len()];
    let mut report_failures = Vec::new();
    let mut checks = 0;
    let mut retries = 0;
    let mut transcript = Vec::new();
    for o in outcomes {
        for (s, row) in o.failed.iter().enumerate() {
            for (w, &f) in row.iter().enumerate() {
                fail_counts[s][w] += f as usize;
            }
            costs[s] = costs[s].max(o.costs[s]);
        }
        report_failures.extend(o.failures);
        checks += o.checks;
        retries += o.retries;
        transcript.extend(o.transcript);
    }

    let empirical_error_rate: Vec<f64> = (0..params.n())
        .map(|w| {
            let worst = fail_counts.iter().map(|row| row[w]).max().unwrap_or(0);
            if config.trials == 0 {
                0.0
            } else {
                worst as f64 / config.trials as f64
            }
        })
        .collect();
    let max_error_rate = empirical_error_rate.iter().copied().fold(0.0, f64::max);
    let worst_symbols = costs.iter().copied().max().unwrap_or(0);

    Ok(SimulationReport {
        params: params.into(),
        scheme: regime,
        master_seed: config.master_seed,
        trials: config.trials,
        scenarios_checked: config.trials * patterns.len(),
        decode_checks: checks,
        decode_failures: report_failures,
        measured_cost_symbols: patterns
            .into_iter()
            .zip(costs)
            .map(|(responding, symbols)| ScenarioCost {
                responding,
                symbols,
            })
            .collect(),
        worst_case_cost_r: Cost::new(worst_symbols as u64, params.l() as u64),
        r_dec: costs::CostPoint::for_params(params).r_dec,
        empirical_error_rate,
        max_error_rate,
        retries,
        transcript,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldModulus, DEFAULT_Q};

    fn params(k: usize, n: usize, n_r: usize, k_c: usize, q: u64) -> SystemParams {
        SystemParams::new(k, n, n_r, k_c, FieldModulus::new(q).unwrap(), 4).unwrap()
    }

    fn config(trials: usize, seed: u64) -> SimConfig {
        SimConfig {
            trials,
            master_seed: seed,
            ..SimConfig::default()
        }
    }

    #[test]
    fn null_space_round_costs_batch_times_responders() {
        let p = params(12, 6, 3, 8, DEFAULT_Q);
        let r = exhaustive_stragglers(&p, &config(5, 1)).unwrap();
        assert_eq!(r.scheme, Regime::NullSpace);
        assert!(r.decode_failures.is_empty(), "{:?}", r.decode_failures);
        assert_eq!(r.worst_case_cost_r, Cost::from_integer(6));
        assert_eq!(r.worst_case_cost_r, r.r_dec);
        assert_eq!(r.scenarios_checked, 5 * 20);
        assert!(r.measured_cost_symbols.iter().all(|c| c.symbols == 6 * 4));
    }

    #[test]
    fn single_responder_costs_nothing() {
        let p = params(12, 12, 1, 8, DEFAULT_Q);
        let r = exhaustive_stragglers(&p, &config(3, 2)).unwrap();
        assert_eq!(r.scheme, Regime::Local);
        assert_eq!(r.worst_case_cost_r, Cost::from_integer(0));
        assert!(r.decode_failures.is_empty());
    }

    #[test]
    fn unsupported_regime_is_refused() {
        let p = params(12, 6, 3, 1, DEFAULT_Q);
        assert!(matches!(
            exhaustive_stragglers(&p, &config(1, 0)),
            Err(SimError::Regime(_))
        ));
        let p = params(12, 6, 3, 6, DEFAULT_Q);
        let forced = SimConfig {
            scheme: SchemeKind::NullSpace,
            ..config(1, 0)
        };
        assert!(matches!(
            exhaustive_stragglers(&p, &forced),
            Err(SimError::Regime(_))
        ));
    }

    #[test]
    fn guard_refuses_huge_enumerations() {
        let p = params(40, 40, 20, 40, DEFAULT_Q);
        assert!(matches!(
            exhaustive_stragglers(&p, &config(1, 0)),
            Err(SimError::Guard { .. })
        ));
        assert_eq!(binomial(40, 20), 137_846_528_820);
        assert_eq!(binomial(4, 3), 4);
    }

    #[test]
    fn strict_mode_checks_every_helper_subset() {
        let p = params(4, 4, 3, 4, DEFAULT_Q);
        let strict = SimConfig {
            strict: true,
            ..config(2, 3)
        };
        let r = exhaustive_stragglers(&p, &strict).unwrap();
        // Per scenario: 3 responders + 1 non-responder with 3 helper pairs.
        assert_eq!(r.decode_checks, 2 * 4 * (3 + 3));
        assert!(r.decode_failures.is_empty());
        let lax = exhaustive_stragglers(&p, &config(2, 3)).unwrap();
        assert_eq!(lax.decode_checks, 2 * 4 * (3 + 1));
    }

    #[test]
    fn reports_are_deterministic() {
        let p = params(8, 4, 3, 7, DEFAULT_Q);
        let a = exhaustive_stragglers(&p, &config(4, 77)).unwrap();
        let b = exhaustive_stragglers(&p, &config(4, 77)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn tiny_field_failures_are_recorded_not_thrown() {
        let p = params(4, 4, 3, 4, 7);
        let r = exhaustive_stragglers(&p, &config(200, 5)).unwrap();
        assert!(!r.decode_failures.is_empty());
        assert!(r.max_error_rate > 0.0 && r.max_error_rate <= 1.0);
        assert!(!r.within_budget(1e-3));
        for f in &r.decode_failures {
            if f.worker > 0 {
                assert!(
                    f.reason.contains("seed") || f.reason.contains("differs"),
                    "{}",
                    f.reason
                );
            }
        }
    }

    #[test]
    fn transcript_holds_responder_signals() {
        let p = params(4, 4, 3, 4, 101);
        let cfg = SimConfig {
            transcript: true,
            ..config(1, 9)
        };
        let r = exhaustive_stragglers(&p, &cfg).unwrap();
        assert_eq!(r.transcript.len(), 4);
        for entry in &r.transcript {
            let senders: Vec<usize> = entry.signals.iter().map(|s| s.sender).collect();
            assert_eq!(senders, entry.responding);
            assert!(entry
                .signals
                .iter()
                .all(|s| s.rows.len() == 1 && s.rows[0].len() == 4));
        }
    }

    #[test]
    fn recover_all_regime_runs() {
        let p = params(12, 6, 2, 3, DEFAULT_Q);
        let r = exhaustive_stragglers(&p, &config(3, 4)).unwrap();
        assert_eq!(r.scheme, Regime::RecoverAll);
        assert!(r.decode_failures.is_empty());
        assert_eq!(r.worst_case_cost_r, Cost::from_integer(4));
    }
}
