//! Browser bindings: sample generation, an incremental training session and
//! graph-set comparison. Every export takes and returns JSON strings; the
//! `demo` module holds the same operations as plain Rust for native tests.

use wasm_bindgen::prelude::*;

pub mod demo;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// `ExperimentConfig` JSON for a named preset, shrunk to browser scale.
#[wasm_bindgen(js_name = presetConfig)]
pub fn preset_config(name: &str) -> Result<String, JsValue> {
    demo::preset_config(name).map_err(js_err)
}

/// Sample `index` of the dataset described by `config_json`.
#[wasm_bindgen(js_name = generateSample)]
pub fn generate_sample(config_json: &str, index: usize) -> Result<String, JsValue> {
    demo::generate_sample(config_json, index).map_err(js_err)
}

/// Descriptors and discrepancies between two graph sets given as
/// `{"n": .., "left": [[[i, j], ..], ..], "right": [..]}`.
#[wasm_bindgen(js_name = compareGraphSets)]
pub fn compare_graph_sets(request_json: &str) -> Result<String, JsValue> {
    demo::compare_graph_sets(request_json).map_err(js_err)
}

#[wasm_bindgen]
pub struct GlnSession(demo::Session);

#[wasm_bindgen]
impl GlnSession {
    #[wasm_bindgen(constructor)]
    pub fn new(config_json: &str) -> Result<GlnSession, JsValue> {
        demo::Session::new(config_json).map(GlnSession).map_err(js_err)
    }

    /// Runs `epochs` passes over the training split; returns the epoch losses.
    #[wasm_bindgen(js_name = trainEpochs)]
    pub fn train_epochs(&mut self, epochs: usize) -> Result<String, JsValue> {
        self.0.train_epochs(epochs).map_err(js_err)
    }

    /// Prediction for test sample `index` with its ground truth and scores.
    pub fn predict(&self, index: usize) -> Result<String, JsValue> {
        self.0.predict(index).map_err(js_err)
    }

    /// Aggregate scores over the test split.
    pub fn evaluate(&self) -> Result<String, JsValue> {
        self.0.evaluate().map_err(js_err)
    }

    #[wasm_bindgen(js_name = testSize)]
    pub fn test_size(&self) -> usize {
        self.0.test_size()
    }

    #[wasm_bindgen(js_name = epochsDone)]
    pub fn epochs_done(&self) -> usize {
        self.0.epochs_done()
    }
}
