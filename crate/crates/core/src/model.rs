//! Layered dense networks and their JSON interchange format.
//!
//! A [`Model`] is the extensional source of truth: one weight matrix and one
//! bias vector per layer, with `weights[[r, c]]` the weight of the edge from
//! input unit `c` of the layer to output unit `r`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
    Softmax,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
            Activation::Softmax => "softmax",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            "softmax" => Ok(Activation::Softmax),
            other => Err(Error::InvalidParameter(format!("unknown activation '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// rows = output units, cols = input units
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Self {
        DenseLayer { weights, bias, activation }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    pub layers: Vec<DenseLayer>,
}

impl Model {
    /// Builds a model and checks the shape invariants.
    pub fn new(name: impl Into<String>, layers: Vec<DenseLayer>) -> Result<Self> {
        let model = Model { name: name.into(), layers };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvariantViolation(format!("model '{}' has no layers", self.name)));
        }
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.inputs() == 0 || layer.outputs() == 0 {
                return Err(Error::InvariantViolation(format!("layer {i}: weight matrix is empty")));
            }
            if layer.bias.len() != layer.outputs() {
                return Err(Error::InvariantViolation(format!(
                    "layer {i}: bias length {} does not match {} output units",
                    layer.bias.len(),
                    layer.outputs()
                )));
            }
            if i > 0 && layer.inputs() != self.layers[i - 1].outputs() {
                return Err(Error::InvariantViolation(format!(
                    "layer {i}: expects {} inputs but layer {} has {} outputs",
                    layer.inputs(),
                    i - 1,
                    self.layers[i - 1].outputs()
                )));
            }
            if layer.activation == Activation::Softmax && i != last {
                return Err(Error::InvariantViolation(format!(
                    "layer {i}: softmax is only allowed on the final layer"
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    /// Unit counts per layer, input layer first.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.layers.iter().map(DenseLayer::outputs)).collect()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn output_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    pub fn from_json_str(text: &str, source_name: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::Parse { source_name: source_name.to_string(), message: e.to_string() })?;
        file.into_model()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from_model(self)).expect("model serializes")
    }
}

pub fn import_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    Model::from_json_str(&text, &path.display().to_string())
}

pub fn export_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model.to_json_string() + "\n")?;
    Ok(())
}

/// Reads a JSON array of `{"vec_id": .., "values": [..]}` objects.
pub fn import_inputs(path: impl AsRef<Path>) -> Result<Vec<InputVector>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { source_name: path.display().to_string(), message: e.to_string() })
}

pub fn export_inputs(vectors: &[InputVector], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(vectors).expect("inputs serialize") + "\n")?;
    Ok(())
}

/// One stored input vector; `values[i]` feeds input unit `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputVector {
    pub vec_id: i64,
    pub values: Vec<f64>,
}

impl InputVector {
    pub fn new(vec_id: i64, values: Vec<f64>) -> Self {
        InputVector { vec_id, values }
    }

    pub fn check_dim(&self, model: &Model) -> Result<()> {
        if self.values.len() != model.input_dim() {
            return Err(Error::InvariantViolation(format!(
                "input vector {} has length {} but the model expects {}",
                self.vec_id,
                self.values.len(),
                model.input_dim()
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    name: String,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum LayerFile {
    Dense { weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation },
}

impl ModelFile {
    fn from_model(model: &Model) -> Self {
        let layers = model
            .layers
            .iter()
            .map(|l| LayerFile::Dense {
                weights: l.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
                bias: l.bias.to_vec(),
                activation: l.activation,
            })
            .collect();
        ModelFile { name: model.name.clone(), layers }
    }

    fn into_model(self) -> Result<Model> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.into_iter().enumerate() {
            let LayerFile::Dense { weights, bias, activation } = layer;
            let cols = weights.first().map_or(0, Vec::len);
            if let Some(r) = weights.iter().position(|row| row.len() != cols) {
                return Err(Error::InvariantViolation(format!(
                    "layer {i}: weight row {r} has length {} but row 0 has {cols}",
                    weights[r].len()
                )));
            }
            let rows = weights.len();
            let flat: Vec<f64> = weights.into_iter().flatten().collect();
            let weights = Array2::from_shape_vec((rows, cols), flat).expect("rectangular rows");
            layers.push(DenseLayer::new(weights, Array1::from(bias), activation));
        }
        Model::new(self.name, layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_mismatched_bias_naming_the_layer() {
        let text = r#"{"name":"m","layers":[
            {"type":"dense","weights":[[1.0],[2.0]],"bias":[0.0,0.0],"activation":"relu"},
            {"type":"dense","weights":[[1.0,1.0]],"bias":[0.0,1.0],"activation":"identity"}]}"#;
        let err = Model::from_json_str(text, "inline").unwrap_err();
        match err {
            Error::InvariantViolation(msg) => assert!(msg.starts_with("layer 1:"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_error_carries_position() {
        let err = Model::from_json_str("{\"name\": \"m\",\n \"layers\": [ {\"type\": \"conv\"} ] }", "f.json")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("f.json") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn softmax_only_on_last_layer() {
        let l = |a| DenseLayer::new(array![[1.0]], array![0.0], a);
        assert!(Model::new("m", vec![l(Activation::Softmax), l(Activation::Identity)]).is_err());
        assert!(Model::new("m", vec![l(Activation::Relu), l(Activation::Softmax)]).is_ok());
    }

    #[test]
    fn ragged_rows_rejected() {
        let text = r#"{"name":"m","layers":[{"type":"dense","weights":[[1.0,2.0],[3.0]],"bias":[0,0],"activation":"relu"}]}"#;
        assert!(matches!(Model::from_json_str(text, "x"), Err(Error::InvariantViolation(_))));
    }
}
