#![allow(dead_code)]

use std::path::{Path, PathBuf};

use datagarden_server::cli::{build_scene_text, parse_bounds, BuildArgs, Inputs};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn sample_inputs() -> Inputs {
    let dir = data_dir().join("sample");
    Inputs {
        schema: dir.join("schema.dg"),
        mapping: dir.join("mapping.dg"),
        data: dir.join("responses.csv"),
    }
}

pub fn build_args(inputs: Inputs, out: PathBuf) -> BuildArgs {
    BuildArgs {
        inputs,
        out,
        bounds: parse_bounds("40x40").unwrap(),
        min_sep: 1.5,
        seed: 42,
        title: "DataGarden".into(),
    }
}

/// Canonical scene text for the sample bundle with default build flags.
pub fn sample_scene_text() -> String {
    build_scene_text(&build_args(sample_inputs(), PathBuf::from("unused.json"))).expect("sample builds")
}
