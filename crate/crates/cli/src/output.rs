//! CSV and JSON renderings of solver output.

use std::fmt::Write as _;

use degen_nlp::active_id::{ActiveSetResult, InteriorMultiplier};
use degen_nlp::driver::SolveTrace;
use degen_nlp::IndexSet;
use serde::Serialize;

pub const CSV_HEADER: &str = "k,eta,delta,mu,n_aplus,n_a0,adjusted,hshift";

/// 17 significant digits, enough to round-trip an `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_csv(trace: &SolveTrace) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            float(r.eta),
            r.delta.map(float).unwrap_or_default(),
            float(r.mu),
            r.n_aplus,
            r.n_a0,
            u8::from(r.adjusted),
            float(r.hshift)
        );
    }
    out
}

#[derive(Serialize)]
struct TraceJson<'a> {
    problem: &'a str,
    algorithm: &'a str,
    status: &'a str,
    message: Option<&'a str>,
    iterations: usize,
    final_eta: f64,
    final_delta: Option<f64>,
    q_ratios: &'a [f64],
    final_z: &'a [f64],
    final_lambda: &'a [f64],
    records: &'a [degen_nlp::driver::IterationRecord],
}

pub fn trace_json(trace: &SolveTrace) -> String {
    let view = TraceJson {
        problem: &trace.problem,
        algorithm: trace.algorithm.as_str(),
        status: trace.status.as_str(),
        message: trace.message.as_deref(),
        iterations: trace.iterations(),
        final_eta: trace.final_eta(),
        final_delta: trace.final_delta(),
        q_ratios: &trace.q_ratios,
        final_z: &trace.final_z,
        final_lambda: &trace.final_lambda,
        records: &trace.records,
    };
    serde_json::to_string_pretty(&view).expect("trace serializes") + "\n"
}

#[derive(Serialize)]
struct LoopStepJson {
    working_set: Vec<usize>,
    objective: f64,
    removed: Vec<usize>,
}

#[derive(Serialize)]
struct IdentifyJson {
    eta: f64,
    a: Vec<usize>,
    a_plus: Vec<usize>,
    a_zero: Vec<usize>,
    loop_trace: Vec<LoopStepJson>,
    t_hat: f64,
    lambda_hat: Vec<f64>,
}

fn one_based(s: &IndexSet) -> Vec<usize> {
    s.to_one_based()
}

/// Identification result with 1-based constraint indices.
pub fn identify_json(id: &ActiveSetResult, im: &InteriorMultiplier) -> String {
    let view = IdentifyJson {
        eta: id.eta,
        a: one_based(&id.estimated_active),
        a_plus: one_based(&id.strongly),
        a_zero: one_based(&id.weakly),
        loop_trace: id
            .loop_trace
            .iter()
            .map(|s| LoopStepJson {
                working_set: one_based(&s.working_set),
                objective: s.objective,
                removed: one_based(&s.removed),
            })
            .collect(),
        t_hat: im.t_hat,
        lambda_hat: im.lambda_hat.clone(),
    };
    serde_json::to_string_pretty(&view).expect("identification serializes") + "\n"
}
