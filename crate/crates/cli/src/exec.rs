//! Runs a validated [`RunConfig`] against the library.

use serde::Serialize;
use serde_json::{json, Value};
use tangent_graphs::lab::INNER_RADIUS_FRACTION;
use tangent_graphs::report::{certificate_csv, graph_sample_csv};
use tangent_graphs::zoo::zoo_entries;
use tangent_graphs::{
    analyze_counterexample, certify_du_bound, check_distance_bound, check_enlargement, check_inclusion, extract,
    lambda_cap, max_radius, verify_main_theorem, ExtractOptions, FrameContext, ParamImmersion, ParamPoint,
    PropertyKind, RadiusOptions, RadiusOutcome, VerdictStatus,
};

use crate::config::{BasePoint, Check, CommandKind, RunConfig};
use crate::error::{CliError, ExitStatus};

/// What a job produced: its verdict, the JSON result and an optional CSV.
#[derive(Debug)]
pub struct Outcome {
    pub status: ExitStatus,
    pub result: Value,
    pub csv: Option<String>,
}

impl Outcome {
    fn new(status: ExitStatus, result: impl Serialize) -> Result<Self, CliError> {
        let result = serde_json::to_value(result).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self { status, result, csv: None })
    }
}

fn holds(ok: bool) -> ExitStatus {
    if ok {
        ExitStatus::Holds
    } else {
        ExitStatus::Fails
    }
}

/// Resolves the config's defaults that depend on the immersion and runs it.
///
/// The returned config records the base points actually used.
pub fn execute(mut config: RunConfig) -> Result<(RunConfig, Outcome), CliError> {
    config.validate()?;
    let outcome = match config.command {
        CommandKind::ZooList => zoo_list()?,
        CommandKind::Counterexample => counterexample(&config)?,
        CommandKind::Extract | CommandKind::Radii | CommandKind::Verify => {
            let f = config.immersion.as_ref().expect("validated").build()?;
            let (q, sample) = config.base_points(&f)?;
            if sample.is_none() {
                config.q = q.iter().map(|p| BasePoint { chart: p.chart, coords: p.coords.clone() }).collect();
            }
            let opts = RadiusOptions { sample, ..RadiusOptions::with_grid(config.grid).tol(config.tol) };
            match config.command {
                CommandKind::Extract => extract_graph(&config, &f, &q)?,
                CommandKind::Radii => radii(&config, &f, &q, &opts)?,
                _ => verify(&config, &f, &q, &opts)?,
            }
        }
    };
    Ok((config, outcome))
}

fn zoo_list() -> Result<Outcome, CliError> {
    let entries: Vec<Value> = zoo_entries()
        .iter()
        .map(|e| {
            let defaults: serde_json::Map<String, Value> =
                e.defaults.iter().map(|(k, v)| ((*k).to_string(), json!(v))).collect();
            json!({ "name": e.name, "description": e.description, "defaults": defaults })
        })
        .collect();
    Outcome::new(ExitStatus::Holds, entries)
}

fn counterexample(c: &RunConfig) -> Result<Outcome, CliError> {
    let rep = analyze_counterexample(c.eps.unwrap_or(1e-6), c.delta.unwrap_or(1e-7), c.r.unwrap_or(0.2), c.angles)?;
    Outcome::new(holds(rep.verdict), rep)
}

fn extract_graph(c: &RunConfig, f: &ParamImmersion, q: &[ParamPoint]) -> Result<Outcome, CliError> {
    let [base] = q else {
        return Err(CliError::Config("extract takes exactly one base point".into()));
    };
    let ctx = FrameContext::canonical(f, base.clone(), c.r.expect("validated"))?;
    let sample = extract(&ctx, &ExtractOptions::with_grid(c.grid))?;
    let norms = tangent_graphs::norms(&sample).ok();
    let summary = json!({
        "nodes": sample.nodes.len(),
        "region_cells": sample.region_cells,
        "cell_size": sample.cell_size,
        "is_graph": sample.is_graph(),
        "norms": norms,
    });
    let mut outcome = Outcome::new(holds(sample.is_graph()), summary)?;
    outcome.csv = Some(graph_sample_csv(&sample));
    Ok(outcome)
}

fn radii(c: &RunConfig, f: &ParamImmersion, q: &[ParamPoint], opts: &RadiusOptions) -> Result<Outcome, CliError> {
    let kind: PropertyKind = c.kind.expect("validated");
    let rep = max_radius(f, c.lambda.expect("validated"), kind, q, opts)?;
    let status = if rep.outcome == RadiusOutcome::BelowStart { ExitStatus::Fails } else { ExitStatus::Holds };
    Outcome::new(status, rep)
}

fn verify(c: &RunConfig, f: &ParamImmersion, q: &[ParamPoint], opts: &RadiusOptions) -> Result<Outcome, CliError> {
    let extract_opts: ExtractOptions = opts.extract.into();
    let r = || c.r.expect("validated");
    let lambda = || c.lambda.expect("validated");
    match c.check.expect("validated") {
        Check::Theorem => {
            let v = verify_main_theorem(f, c.lambda.unwrap_or_else(|| lambda_cap(f.m())), q, opts)?;
            Outcome::new(holds(v.holds), v)
        }
        Check::Enlargement => {
            let v = check_enlargement(f, r(), lambda(), q, &extract_opts)?;
            let status = match v.status {
                VerdictStatus::Holds => ExitStatus::Holds,
                VerdictStatus::Fails => ExitStatus::Fails,
                VerdictStatus::Inconclusive => ExitStatus::Inconclusive,
            };
            Outcome::new(status, v)
        }
        Check::Distance => {
            let rho = c.rho.unwrap_or(INNER_RADIUS_FRACTION * r());
            let checks =
                q.iter().map(|p| check_distance_bound(f, p, rho, r(), lambda(), &extract_opts)).collect::<Result<Vec<_>, _>>()?;
            Outcome::new(holds(checks.iter().all(|d| d.holds)), checks)
        }
        Check::Inclusion => {
            let checks = q.iter().map(|p| check_inclusion(f, p, r(), lambda())).collect::<Result<Vec<_>, _>>()?;
            Outcome::new(holds(checks.iter().all(|d| d.holds)), checks)
        }
        Check::DuCert => {
            let certs =
                q.iter().map(|p| certify_du_bound(f, p, r(), lambda(), &extract_opts)).collect::<Result<Vec<_>, _>>()?;
            let status = holds(certs.iter().all(|cert| cert.is_certified()));
            let csv = c.csv.is_some().then(|| {
                let mut text = String::new();
                for (i, cert) in certs.iter().enumerate() {
                    let table = certificate_csv(cert);
                    // one header for all base points
                    let body = if i == 0 { table.as_str() } else { table.split_once('\n').map_or("", |(_, b)| b) };
                    text.push_str(body);
                }
                text
            });
            let mut outcome = Outcome::new(status, certs)?;
            outcome.csv = csv;
            Ok(outcome)
        }
    }
}
