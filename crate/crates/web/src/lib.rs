//! WebAssembly bindings for the demo page in `www/`.

pub mod demo;

use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub fn goal_update(b_prev: f64, p_plus: f64, p_minus: f64, p_plus_other: f64) -> f64 {
    demo::goal_update(b_prev, p_plus, p_minus, p_plus_other)
}

#[wasm_bindgen]
pub fn goal_surface(p_minus: f64, p_plus_other: f64, steps: usize) -> Vec<f64> {
    demo::goal_surface(p_minus, p_plus_other, steps)
}

/// JSON list of `{acts, score, correct}`.
#[wasm_bindgen]
pub fn nbest(ontology: &str, acts: &str, error_rate: f64, seed: u64) -> Result<String, JsError> {
    let h = demo::nbest(ontology, acts, error_rate, seed).map_err(|e| JsError::new(&e))?;
    Ok(serde_json::to_string(&h).expect("plain data"))
}

#[wasm_bindgen]
pub struct Chat(demo::ChatDemo);

#[wasm_bindgen]
impl Chat {
    #[wasm_bindgen(constructor)]
    pub fn new(ontology: &str, episodes: usize, seed: u64) -> Result<Chat, JsError> {
        demo::ChatDemo::train(ontology, episodes, seed).map(Chat).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(getter)]
    pub fn success_rate(&self) -> f64 {
        self.0.success_rate
    }

    pub fn opening(&self) -> String {
        self.0.opening()
    }

    /// Slot names and values, as JSON.
    pub fn slots(&self) -> String {
        let o = self.0.ontology();
        let slots: Vec<(&str, &[String])> = o.informable().iter().map(|s| (s.name.as_str(), s.values.as_slice())).collect();
        serde_json::json!({ "informable": slots, "requestable": o.requestable() }).to_string()
    }

    pub fn reset(&mut self) {
        self.0.reset();
    }

    /// The system's reply and the executed belief, as JSON.
    pub fn step(&mut self, acts: &str, confidence: f64) -> Result<String, JsError> {
        let turn = self.0.step(acts, confidence).map_err(|e| JsError::new(&e))?;
        Ok(serde_json::to_string(&turn).expect("plain data"))
    }
}
