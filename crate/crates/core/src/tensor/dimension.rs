// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::TensorError;

/// Separator between a dimension's base name and its particle tag (`pol:2`).
pub const PARTICLE_SEPARATOR: char = ':';

/// A named tensor axis with ordered coordinate labels.
///
/// Two dimensions are the same axis only if name, size and label order all
/// agree; operators and vectors are matched on that triple, never on position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dimension {
    name: Arc<str>,
    // Shared so that cloning and renaming axes stays cheap.
    labels: Arc<[String]>,
}

impl Dimension {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        labels: impl IntoIterator<Item = S>,
    ) -> Result<Self, TensorError> {
        let name = name.into();
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if name.is_empty() {
            return Err(TensorError::InvalidDimension {
                name,
                reason: "has an empty name".into(),
            });
        }
        if labels.is_empty() {
            return Err(TensorError::InvalidDimension {
                name,
                reason: "has no coordinates".into(),
            });
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(TensorError::InvalidDimension {
                    name,
                    reason: format!("repeats label `{label}`"),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            labels: labels.into(),
        })
    }

    /// A dimension whose labels are `0..size` rendered as decimal strings.
    pub fn indexed(name: impl Into<String>, size: usize) -> Result<Self, TensorError> {
        Self::new(name, (0..size).map(|i| i.to_string()))
    }

    /// A two-level dimension labelled `0`, `1`.
    pub fn qubit(name: impl Into<String>) -> Self {
        Self::new(name, ["0", "1"]).expect("qubit dimension is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into().into(),
            labels: Arc::clone(&self.labels),
        }
    }

    pub fn relabeled<S: Into<String>>(
        &self,
        labels: impl IntoIterator<Item = S>,
    ) -> Result<Self, TensorError> {
        Self::new(self.name.to_string(), labels)
    }

    /// Name without the particle tag.
    pub fn base_name(&self) -> &str {
        match self.name.rsplit_once(PARTICLE_SEPARATOR) {
            Some((base, tag)) if tag.parse::<usize>().is_ok() => base,
            _ => &self.name,
        }
    }

    /// Particle tag, if the name carries one.
    pub fn particle(&self) -> Option<usize> {
        self.name
            .rsplit_once(PARTICLE_SEPARATOR)
            .and_then(|(_, tag)| tag.parse().ok())
    }

    /// The same axis attached to particle `particle`; replaces an existing tag.
    pub fn tagged(&self, particle: usize) -> Self {
        self.renamed(format!(
            "{}{}{}",
            self.base_name(),
            PARTICLE_SEPARATOR,
            particle
        ))
    }

    pub fn untagged(&self) -> Self {
        self.renamed(self.base_name().to_string())
    }
}
