use std::ffi::CString;

use gadetect::gadetect;
use pyo3::prelude::*;

fn run(code: &str) -> PyResult<()> {
    let code = CString::new(code).unwrap();
    Python::attach(|py| py.run(&code, None, None))
}

#[test]
fn module_works_from_python() {
    pyo3::append_to_inittab!(gadetect);
    Python::initialize();
    run(r#"
import gadetect as g

indoor = g.synth_preset("indoor_window", seed=2)
open_sky = g.synth_preset("open_sky", seed=2)
assert g.detect(indoor) == 1
assert g.detect(open_sky) == 0
assert g.Series.from_gad_csv(open_sky.to_gad_csv()) == open_sky

session = g.DetectionSession()
phases = [session.step(e) for e in open_sky.epochs]
assert phases[0] == "initializing" and phases[-1] == "decided"
assert session.decision == 0

cfg = g.DetectorConfig(criteria=[("distinct_sats", 3)], combine="any")
assert g.assess(indoor, cfg)["criteria"] == [("distinct satellites < 3", False)]

for bad in (lambda: g.DetectorConfig(measure_duration_s=0),
            lambda: g.DetectorConfig(criteria=[("loudness", 1.0)]),
            lambda: g.Observation("GPS", 0, 30.0, 0.0, 0.0)):
    try:
        bad()
    except g.GadError:
        pass
    else:
        raise AssertionError("accepted invalid input")

try:
    g.cn0_summary(g.synth_preset("deep_indoor"), 100.0, 100.0)
except g.EmptyWindowError:
    pass
"#)
    .unwrap();
}
