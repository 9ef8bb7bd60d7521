//! Fixtures shared by the benchmarks.

use tangent_graphs::zoo::{params, zoo_build};
use tangent_graphs::{FrameContext, ParamImmersion, ParamPoint};

pub fn circle() -> ParamImmersion {
    zoo_build("circle", &params(&[("R", 1.0)])).expect("circle builds")
}

pub fn sphere() -> ParamImmersion {
    zoo_build("sphere2", &params(&[("R", 1.0)])).expect("sphere builds")
}

pub fn torus() -> ParamImmersion {
    zoo_build("torus", &params(&[])).expect("torus builds")
}

/// Canonical frame at the first sample point of `f`.
pub fn frame(f: &ParamImmersion, radius: f64) -> FrameContext<'_> {
    let base = ParamPoint::new(0, vec![0.0; f.m()]);
    FrameContext::canonical(f, base, radius).expect("valid frame")
}
