#![allow(dead_code)]

use std::path::PathBuf;

use cdp_core::*;
use serde_json::Value;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn level(v: &Value) -> f64 {
    match v {
        Value::String(s) if s == "inf" => f64::INFINITY,
        other => other.as_f64().unwrap(),
    }
}

/// Instance and grids of a fixture, built directly from the JSON so the
/// tests do not depend on the binary's loader.
pub struct Fixture {
    pub prob: ProblemInstanceF64,
    pub d_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
}

pub fn load(name: &str) -> Fixture {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let inst = &v["instance"];
    let priors = floats(&inst["priors"]);
    let class1 = ProbVector::new(floats(&inst["class1"])).unwrap();
    let class2 = ProbVector::new(floats(&inst["class2"])).unwrap();
    let n = class1.len();
    let src = MixtureSource::new(priors[0], priors[1], class1, class2).unwrap();
    let degrade = Channel::from_rows(inst["degradation"].as_array().unwrap().iter().map(floats).collect()).unwrap();
    let delta = match &inst["distortion"] {
        Value::String(s) if s == "hamming" => DistortionMatrix::hamming(Alphabet::new(n).unwrap()),
        m => DistortionMatrix::new(m.as_array().unwrap().iter().map(floats).collect()).unwrap(),
    };
    assert_eq!(inst["divergence"]["kind"], "tv");
    let symbols: Vec<usize> = inst["classifier"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap() as usize).collect();
    let classifier = DecisionRegion::from_symbols(delta.restored(), &symbols).unwrap();
    Fixture {
        prob: ProblemInstance::new(src, degrade, delta, DivergenceKind::TotalVariation, classifier).unwrap(),
        d_grid: v["d_grid"].as_array().unwrap().iter().map(level).collect(),
        p_grid: v["p_grid"].as_array().unwrap().iter().map(level).collect(),
    }
}

pub fn canonical() -> ProblemInstanceF64 {
    let two = Alphabet::new(2).unwrap();
    let src = MixtureSource::new(
        0.5,
        0.5,
        ProbVector::new(vec![0.8, 0.2]).unwrap(),
        ProbVector::new(vec![0.2, 0.8]).unwrap(),
    )
    .unwrap();
    ProblemInstance::new(
        src,
        Channel::binary_symmetric(0.1).unwrap(),
        DistortionMatrix::hamming(two),
        DivergenceKind::TotalVariation,
        DecisionRegion::from_symbols(two, &[0]).unwrap(),
    )
    .unwrap()
}

pub fn noiseless() -> ProblemInstanceF64 {
    let c = canonical();
    ProblemInstance::new(
        c.source().clone(),
        Channel::identity(Alphabet::new(2).unwrap()),
        c.delta().clone(),
        c.divergence(),
        c.classifier().clone(),
    )
    .unwrap()
}

/// The three 2x2x2 oracle fixtures.
pub const ORACLE_FIXTURES: [&str; 3] = ["skewed.json", "asymmetric_channel.json", "reversed_classifier.json"];
