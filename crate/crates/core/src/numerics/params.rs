use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use super::{NumericsError, Tensor};

/// Whether a parameter acts as a multiplicative weight or an additive bias.
///
/// Only used for accounting; the engine treats both identically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamRole {
    Weight,
    Bias,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub tensor: Tensor,
    pub trainable: bool,
    pub role: ParamRole,
}

/// Named tensors, iterated in name order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    entries: BTreeMap<String, Param>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a parameter; names must be unique.
    pub fn insert(
        &mut self,
        name: &str,
        tensor: Tensor,
        role: ParamRole,
        trainable: bool,
    ) -> Result<(), NumericsError> {
        if self.entries.contains_key(name) {
            return Err(NumericsError::DuplicateName(name.to_string()));
        }
        self.entries.insert(
            name.to_string(),
            Param {
                tensor,
                trainable,
                role,
            },
        );
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.entries.get(name)
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name).map(|p| &p.tensor)
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.get_mut(name).map(|p| &mut p.tensor)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn trainable(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.iter()
            .filter(|(_, p)| p.trainable)
            .map(|(k, p)| (k, &p.tensor))
    }

    /// Element counts of trainable tensors, split by role.
    pub fn count(&self) -> ParamCount {
        let mut count = ParamCount::default();
        for (_, p) in self.iter().filter(|(_, p)| p.trainable) {
            match p.role {
                ParamRole::Weight => count.weights += p.tensor.len(),
                ParamRole::Bias => count.biases += p.tensor.len(),
            }
        }
        count
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParamCount {
    pub weights: usize,
    pub biases: usize,
}

impl ParamCount {
    pub fn total(&self) -> usize {
        self.weights + self.biases
    }
}

/// Gradients of a scalar with respect to trainable parameters, keyed by name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    entries: BTreeMap<String, Tensor>,
}

impl Gradients {
    pub fn new() -> Self {
        Self::default()
    }

    /// Zero gradients shaped like every trainable entry of `params`.
    pub fn zeros_like(params: &ParamSet) -> Self {
        let entries = params
            .trainable()
            .map(|(k, t)| (k.to_string(), Tensor::zeros(t.shape().into())))
            .collect();
        Self { entries }
    }

    pub fn insert(&mut self, name: &str, grad: Tensor) {
        self.entries.insert(name.to_string(), grad);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `self += other`, in name order.
    pub fn accumulate(&mut self, other: &Gradients) -> Result<(), NumericsError> {
        for (name, g) in other.iter() {
            match self.entries.get_mut(name) {
                Some(acc) => {
                    if acc.shape() != g.shape() {
                        return Err(NumericsError::ShapeMismatch {
                            node: name.to_string(),
                            expected: acc.shape().into(),
                            found: g.shape().into(),
                        });
                    }
                    for (a, b) in acc.values_mut().iter_mut().zip(g.values()) {
                        *a += *b;
                    }
                }
                None => {
                    self.entries.insert(name.to_string(), g.clone());
                }
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.entries.values_mut() {
            for v in g.values_mut() {
                *v *= factor;
            }
        }
    }

    /// Euclidean norm over every entry of every tensor.
    pub fn global_norm(&self) -> f64 {
        let sq: f64 = self
            .entries
            .values()
            .flat_map(|g| g.values())
            .map(|v| v * v)
            .sum();
        crate::math::sqrt(sq)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.values().all(Tensor::is_finite)
    }
}
