//! Serialization helpers: JSON conventions for non-finite values and CSV
//! writers for sampled graphs and derivative certificates.

use std::fmt::Write as _;

use crate::extract::GraphSample;
use crate::lab::CertifiedDuBound;

/// Serializes an `f64` with `+∞` as `null`, and reads `null` back as `+∞`.
pub mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn push_num(out: &mut String, v: f64) {
    if v.is_finite() {
        let _ = write!(out, "{v:e}");
    } else if v.is_nan() {
        out.push_str("nan");
    } else if v > 0.0 {
        out.push_str("inf");
    } else {
        out.push_str("-inf");
    }
}

/// CSV with columns `x1..xm, u1..uk, status, du_norm`; unsolved heights are
/// written as `nan`.
pub fn graph_sample_csv(sample: &GraphSample) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=sample.m)
        .map(|i| format!("x{i}"))
        .chain((1..=sample.k).map(|i| format!("u{i}")))
        .chain(["status".to_string(), "du_norm".to_string()])
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for node in &sample.nodes {
        for v in node.x.iter() {
            push_num(&mut out, *v);
            out.push(',');
        }
        for i in 0..sample.k {
            push_num(&mut out, node.height.as_ref().map_or(f64::NAN, |h| h[i]));
            out.push(',');
        }
        out.push_str(node.status.as_str());
        out.push(',');
        push_num(&mut out, node.du_norm());
        out.push('\n');
    }
    out
}

/// CSV with columns `x1..xm, certified, actual`.
pub fn certificate_csv(cert: &CertifiedDuBound) -> String {
    let m = cert.per_node.first().map_or(0, |n| n.x.len());
    let mut out = String::new();
    let header: Vec<String> = (1..=m)
        .map(|i| format!("x{i}"))
        .chain(["certified".to_string(), "actual".to_string()])
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for node in &cert.per_node {
        for v in &node.x {
            push_num(&mut out, *v);
            out.push(',');
        }
        push_num(&mut out, node.certified_bound);
        out.push(',');
        push_num(&mut out, node.actual_lip);
        out.push('\n');
    }
    out
}
