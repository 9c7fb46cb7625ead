// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::elements::{
    action_for, null_povm, sqrt_null_povm, validate_params, Category, ElementKind, ElementParams,
    LocalAction, ProjectionKind,
};
use crate::photon::{local_dims, Grid, MAX_PHOTONS};
use crate::tensor::{SparseOperator, SparseVector};

/// Ports accepted by a correlator.
pub const CORRELATOR_PORTS: [&str; 6] = [
    "alice_setting",
    "bob_setting",
    "alice_plus",
    "alice_minus",
    "bob_plus",
    "bob_minus",
];

/// An element placed on the board.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Element {
    pub id: String,
    pub kind: ElementKind,
    pub x: usize,
    pub y: usize,
    #[serde(default)]
    pub rotation: i32,
    #[serde(default, skip_serializing_if = "is_default_params")]
    pub params: ElementParams,
    /// Overrides applied while the element's control wire carries 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controlled: Option<ElementParams>,
}

fn is_default_params(p: &ElementParams) -> bool {
    *p == ElementParams::default()
}

impl Element {
    pub fn new(
        id: impl Into<String>,
        kind: ElementKind,
        x: usize,
        y: usize,
        rotation: i32,
    ) -> Self {
        Self {
            id: id.into(),
            kind,
            x,
            y,
            rotation,
            params: ElementParams::default(),
            controlled: None,
        }
    }

    pub fn with_params(mut self, params: ElementParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_controlled(mut self, params: ElementParams) -> Self {
        self.controlled = Some(params);
        self
    }

    /// Rotation and parameters in effect for a control bit.
    pub fn effective(&self, control: bool) -> (i32, ElementParams) {
        let params = match (&self.controlled, control) {
            (Some(c), true) => self.params.overridden_by(c),
            _ => self.params.clone(),
        };
        let rotation = params.rotation.unwrap_or(self.rotation);
        let params = ElementParams {
            rotation: None,
            ..params
        };
        (rotation, params)
    }

    /// Whether this element produces a classical value other elements can read.
    pub fn emits_signal(&self) -> bool {
        self.kind.is_detector() || matches!(self.kind.category(), Category::Input | Category::Logic)
    }
}

/// A classical wire. `port` is required for correlator inputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wire {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port: Option<String>,
}

impl Wire {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            port: None,
        }
    }

    pub fn port(from: impl Into<String>, to: impl Into<String>, port: impl Into<String>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            port: Some(port.into()),
        }
    }
}

/// A recorded detection, absorption or loss.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub step: usize,
    pub kind: EventKind,
    /// Absorbing element, `None` for photons leaving the grid.
    pub element: Option<String>,
    pub x: usize,
    pub y: usize,
    pub photon: usize,
    pub outcome: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// A detector, bomb or nondemolition detector fired.
    Detected,
    /// Absorbed by a rock, filter, polarizer or source.
    Absorbed,
    /// Left the grid.
    Lost,
}

/// Classical part of a simulation node.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalState {
    /// Switch and random-switch values.
    pub inputs: BTreeMap<String, bool>,
    /// Detectors that have fired so far; bits latch for the run.
    pub detected: BTreeSet<String>,
    /// Signal value of every wired element after the last evaluation.
    pub values: BTreeMap<String, i64>,
    pub exploded: bool,
    pub record: Vec<Event>,
}

impl ClassicalState {
    pub fn control_bit(&self, id: &str) -> bool {
        self.values.get(id).copied().unwrap_or(0) != 0
    }

    pub fn detector_bit(&self, id: &str) -> bool {
        self.detected.contains(id)
    }
}

/// A cell's precomputed physics for both control-bit values.
#[derive(Clone, Debug)]
pub(crate) struct CellPhysics {
    pub actions: [LocalAction; 2],
    /// `√M⋆` per control bit, when the cell measures.
    pub sqrt_null: [Option<SparseOperator>; 2],
}

/// A validated board: elements, wires and cached local physics.
#[derive(Clone, Debug)]
pub struct Board {
    grid: Grid,
    elements: Vec<Element>,
    wires: Vec<Wire>,
    by_cell: HashMap<(usize, usize), usize>,
    by_id: HashMap<String, usize>,
    /// Element indices in wire-evaluation order.
    order: Vec<usize>,
    /// Incoming wires per element index: (source index, port).
    inputs: Vec<Vec<(usize, Option<String>)>>,
    physics: Vec<CellPhysics>,
}

impl Board {
    pub fn new(grid: Grid, elements: Vec<Element>, wires: Vec<Wire>) -> Result<Self, EngineError> {
        if grid.width == 0 || grid.height == 0 {
            return Err(EngineError::InvalidBoard(
                "grid must be at least 1x1".into(),
            ));
        }
        let mut by_cell = HashMap::new();
        let mut by_id = HashMap::new();
        let mut photons = 0;
        let mut physics = Vec::with_capacity(elements.len());
        for (i, e) in elements.iter().enumerate() {
            let bad = |msg: String| EngineError::InvalidElement {
                id: e.id.clone(),
                reason: msg,
            };
            if e.id.is_empty() {
                return Err(EngineError::InvalidBoard(format!(
                    "element #{i} ({}) has an empty id",
                    e.kind
                )));
            }
            if by_id.insert(e.id.clone(), i).is_some() {
                return Err(bad("duplicate id".into()));
            }
            if e.x >= grid.width || e.y >= grid.height {
                return Err(bad(format!(
                    "position ({}, {}) is outside the {}x{} grid",
                    e.x, e.y, grid.width, grid.height
                )));
            }
            if let Some(other) = by_cell.insert((e.x, e.y), i) {
                return Err(bad(format!(
                    "cell ({}, {}) is already occupied by `{}`",
                    e.x, e.y, elements[other].id
                )));
            }
            let mut pair = Vec::with_capacity(2);
            for bit in [false, true] {
                let (rot, params) = e.effective(bit);
                validate_params(e.kind, rot, &params).map_err(|err| bad(err.to_string()))?;
                pair.push(action_for(e.kind, rot, &params).map_err(|err| bad(err.to_string()))?);
            }
            let sqrt_null = [0, 1].map(|b| {
                let p = pair[b].projections();
                (!p.is_empty()).then(|| sqrt_null_povm(p))
            });
            let [a0, a1]: [LocalAction; 2] = pair.try_into().expect("two actions");
            if let LocalAction::Source { emission, .. } = &a0 {
                photons += emission.directions.len();
            }
            physics.push(CellPhysics {
                actions: [a0, a1],
                sqrt_null,
            });
        }
        if photons > MAX_PHOTONS {
            return Err(EngineError::InvalidBoard(format!(
                "sources emit {photons} photons; at most {MAX_PHOTONS} are supported"
            )));
        }

        let mut inputs = vec![Vec::new(); elements.len()];
        for w in &wires {
            let from = *by_id.get(&w.from).ok_or_else(|| {
                EngineError::InvalidBoard(format!("wire source `{}` does not exist", w.from))
            })?;
            let to = *by_id.get(&w.to).ok_or_else(|| {
                EngineError::InvalidBoard(format!("wire target `{}` does not exist", w.to))
            })?;
            let src = &elements[from];
            let dst = &elements[to];
            if !src.emits_signal() {
                return Err(EngineError::InvalidElement {
                    id: src.id.clone(),
                    reason: format!("{} cannot drive a wire", src.kind),
                });
            }
            let cat = dst.kind.category();
            let accepts =
                matches!(cat, Category::Logic | Category::Sink) || dst.controlled.is_some();
            if !accepts {
                return Err(EngineError::InvalidElement {
                    id: dst.id.clone(),
                    reason: "wired as a target but has no controlled parameters".into(),
                });
            }
            match (&w.port, dst.kind) {
                (Some(p), ElementKind::Correlator) if CORRELATOR_PORTS.contains(&p.as_str()) => {}
                (Some(p), ElementKind::Correlator) => {
                    return Err(EngineError::InvalidElement {
                        id: dst.id.clone(),
                        reason: format!(
                            "unknown correlator port `{p}` (expected one of {})",
                            CORRELATOR_PORTS.join(", ")
                        ),
                    })
                }
                (None, ElementKind::Correlator) => {
                    return Err(EngineError::InvalidElement {
                        id: dst.id.clone(),
                        reason: format!("wire from `{}` needs a correlator port", w.from),
                    })
                }
                (Some(p), _) => {
                    return Err(EngineError::InvalidElement {
                        id: dst.id.clone(),
                        reason: format!("port `{p}` given but only correlators have ports"),
                    })
                }
                (None, _) => {}
            }
            inputs[to].push((from, w.port.clone()));
        }
        let order = topological_order(&elements, &inputs)?;
        Ok(Self {
            grid,
            elements,
            wires,
            by_cell,
            by_id,
            order,
            inputs,
            physics,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn element(&self, id: &str) -> Option<&Element> {
        self.by_id.get(id).map(|&i| &self.elements[i])
    }

    pub(crate) fn index_at(&self, x: usize, y: usize) -> Option<usize> {
        self.by_cell.get(&(x, y)).copied()
    }

    pub fn element_at(&self, x: usize, y: usize) -> Option<&Element> {
        self.index_at(x, y).map(|i| &self.elements[i])
    }

    pub(crate) fn physics(&self, index: usize) -> &CellPhysics {
        &self.physics[index]
    }

    /// Ids of elements whose firing is recorded as a detection.
    pub fn detector_ids(&self) -> Vec<&str> {
        self.elements
            .iter()
            .filter(|e| e.kind.is_detector())
            .map(|e| e.id.as_str())
            .collect()
    }

    pub fn ids_of(&self, pred: impl Fn(&Element) -> bool) -> Vec<&str> {
        self.elements
            .iter()
            .filter(|e| pred(e))
            .map(|e| e.id.as_str())
            .collect()
    }

    /// Wires into `id`, as (source id, port).
    pub fn inputs_of(&self, id: &str) -> Vec<(&str, Option<&str>)> {
        self.by_id
            .get(id)
            .map(|&i| {
                self.inputs[i]
                    .iter()
                    .map(|(s, p)| (self.elements[*s].id.as_str(), p.as_deref()))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Number of photons the sources emit.
    pub fn photon_count(&self) -> usize {
        self.physics
            .iter()
            .map(|p| match &p.actions[0] {
                LocalAction::Source { emission, .. } => emission.directions.len(),
                _ => 0,
            })
            .sum()
    }

    /// Random switches with their probability of outputting 1.
    pub fn random_inputs(&self) -> Vec<(&str, f64)> {
        self.elements
            .iter()
            .filter(|e| e.kind == ElementKind::RandomSwitch)
            .map(|e| (e.id.as_str(), e.params.probability.unwrap_or(0.5)))
            .collect()
    }

    /// Classical state at `t = 0` for the given random-switch values.
    pub fn initial_classical(&self, random: &BTreeMap<String, bool>) -> ClassicalState {
        let mut c = ClassicalState::default();
        for e in &self.elements {
            match e.kind {
                ElementKind::Switch => {
                    c.inputs
                        .insert(e.id.clone(), e.params.value.unwrap_or(false));
                }
                ElementKind::RandomSwitch => {
                    c.inputs
                        .insert(e.id.clone(), random.get(&e.id).copied().unwrap_or(false));
                }
                _ => {}
            }
        }
        self.evaluate_wires(&mut c);
        c
    }

    /// Recompute every signal value in topological order.
    pub fn evaluate_wires(&self, c: &mut ClassicalState) {
        for &i in &self.order {
            let e = &self.elements[i];
            let ins: Vec<i64> = self.inputs[i]
                .iter()
                .map(|(s, _)| c.values.get(&self.elements[*s].id).copied().unwrap_or(0))
                .collect();
            let value = match e.kind.category() {
                Category::Input => Some(c.inputs.get(&e.id).copied().unwrap_or(false) as i64),
                Category::Logic => e.kind.evaluate_logic(&ins),
                _ if e.kind.is_detector() => Some(c.detected.contains(&e.id) as i64),
                _ if !self.inputs[i].is_empty() && e.kind != ElementKind::Correlator => {
                    Some(ins.iter().sum())
                }
                _ => None,
            };
            if let Some(v) = value {
                c.values.insert(e.id.clone(), v);
            }
        }
    }

    /// Largest deviation of `Σ Kᵢ†Kᵢ` from the identity over every
    /// measuring cell and control setting, where the Kraus set is the
    /// weighted projections plus `√M⋆`. Also checks `(√M⋆)² = M⋆`.
    pub fn povm_deviation(&self) -> f64 {
        let id = SparseOperator::identity(local_dims()).expect("local dims");
        let mut worst: f64 = 0.0;
        for cell in &self.physics {
            for bit in 0..2 {
                let projections = cell.actions[bit].projections();
                if projections.is_empty() {
                    continue;
                }
                let root = cell.sqrt_null[bit].as_ref().expect("measuring cell");
                let mut total = root.dagger().compose(root).expect("square");
                worst = worst.max(
                    total
                        .max_deviation(&null_povm(projections))
                        .unwrap_or(f64::INFINITY),
                );
                for p in projections {
                    let kk = match &p.kind {
                        ProjectionKind::Destructive(bra) => {
                            SparseOperator::outer(bra, bra).expect("local bra")
                        }
                        ProjectionKind::Nondemolition(proj) => {
                            proj.dagger().compose(proj).expect("square")
                        }
                    }
                    .scaled(crate::tensor::c64(p.weight, 0.0));
                    total = total.add(&kk).expect("same dims");
                }
                worst = worst.max(total.max_deviation(&id).unwrap_or(f64::INFINITY));
            }
        }
        worst
    }

    /// Check that the projections at every cell are orthogonal idempotents.
    pub fn projection_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for cell in &self.physics {
            for action in &cell.actions {
                let ps: Vec<SparseOperator> =
                    action.projections().iter().map(|p| p.projector()).collect();
                for (i, a) in ps.iter().enumerate() {
                    let sq = a.compose(a).expect("square");
                    worst = worst.max(sq.max_deviation(a).unwrap_or(f64::INFINITY));
                    for b in &ps[i + 1..] {
                        let zero = SparseOperator::zeros(local_dims(), local_dims()).expect("dims");
                        let ab = a.compose(b).expect("square");
                        worst = worst.max(ab.max_deviation(&zero).unwrap_or(f64::INFINITY));
                    }
                }
            }
        }
        worst
    }

    /// Emitted photons, as (cell, emission) in element order.
    pub(crate) fn emissions(&self) -> Vec<((usize, usize), &crate::elements::Emission)> {
        self.elements
            .iter()
            .zip(&self.physics)
            .filter_map(|(e, p)| match &p.actions[0] {
                LocalAction::Source { emission, .. } => Some(((e.x, e.y), emission)),
                _ => None,
            })
            .collect()
    }

    /// Local unitary at a cell for a control bit, if any.
    pub(crate) fn unitary_at(&self, index: usize, bit: bool) -> Option<&SparseOperator> {
        match &self.physics[index].actions[bit as usize] {
            LocalAction::Unitary(u) => Some(u),
            _ => None,
        }
    }

    /// Operator shown for element `id`: its unitary, its two-photon gate, or
    /// `√M⋆` when it measures.
    pub fn local_operator(&self, id: &str, control: bool) -> Option<&SparseOperator> {
        let i = self.elements.iter().position(|e| e.id == id)?;
        let p = &self.physics[i];
        match &p.actions[control as usize] {
            LocalAction::Unitary(u) | LocalAction::TwoPhotonGate(u) => Some(u),
            LocalAction::Measurement(_) => p.sqrt_null[control as usize].as_ref(),
            _ => None,
        }
    }

    /// Every unitary the board can apply, for unitarity sweeps.
    pub fn unitaries(&self) -> Vec<(&str, &SparseOperator)> {
        let mut out = Vec::new();
        for (e, p) in self.elements.iter().zip(&self.physics) {
            for a in &p.actions {
                match a {
                    LocalAction::Unitary(u) | LocalAction::TwoPhotonGate(u) => {
                        out.push((e.id.as_str(), u))
                    }
                    _ => {}
                }
            }
        }
        out
    }

    /// Initial state of the sources' photons.
    pub fn initial_state(&self) -> Result<SparseVector, EngineError> {
        super::step::initial_state(self)
    }
}

fn topological_order(
    elements: &[Element],
    inputs: &[Vec<(usize, Option<String>)>],
) -> Result<Vec<usize>, EngineError> {
    let n = elements.len();
    let mut indegree: Vec<usize> = inputs.iter().map(Vec::len).collect();
    let mut outputs = vec![Vec::new(); n];
    for (to, ins) in inputs.iter().enumerate() {
        for (from, _) in ins {
            outputs[*from].push(to);
        }
    }
    let mut ready: std::collections::BTreeSet<usize> =
        (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &j in &outputs[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.insert(j);
            }
        }
    }
    if order.len() < n {
        let stuck: Vec<&str> = (0..n)
            .filter(|&i| indegree[i] > 0)
            .map(|i| elements[i].id.as_str())
            .collect();
        return Err(EngineError::InvalidBoard(format!(
            "wire graph has a cycle through {}",
            stuck.join(", ")
        )));
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source() -> Element {
        Element::new("src", ElementKind::SinglePhotonSource, 0, 0, 0)
    }

    #[test]
    fn rejects_overlap_and_bounds() {
        let grid = Grid::default();
        let err = Board::new(
            grid,
            vec![source(), Element::new("d", ElementKind::Detector, 0, 0, 0)],
            vec![],
        )
        .unwrap_err();
        assert!(err.to_string().contains("`d`"), "{err}");
        let err = Board::new(
            grid,
            vec![Element::new("far", ElementKind::Rock, 20, 0, 0)],
            vec![],
        )
        .unwrap_err();
        assert!(err.to_string().contains("`far`"), "{err}");
    }

    #[test]
    fn rejects_cycles() {
        let err = Board::new(
            Grid::default(),
            vec![
                Element::new("a", ElementKind::And, 0, 0, 0),
                Element::new("b", ElementKind::Or, 1, 0, 0),
            ],
            vec![Wire::new("a", "b"), Wire::new("b", "a")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("cycle"), "{err}");
    }

    #[test]
    fn evaluates_logic_in_order() {
        let mut on = Element::new("s1", ElementKind::Switch, 0, 0, 0);
        on.params.value = Some(true);
        let board = Board::new(
            Grid::default(),
            vec![
                Element::new("out", ElementKind::OutputVariable, 3, 0, 0),
                Element::new("and", ElementKind::And, 2, 0, 0),
                on,
                Element::new("s2", ElementKind::Switch, 1, 0, 0),
                Element::new("sum", ElementKind::Sum, 4, 0, 0),
            ],
            vec![
                Wire::new("s1", "and"),
                Wire::new("s2", "and"),
                Wire::new("and", "out"),
                Wire::new("s1", "sum"),
                Wire::new("s1", "sum"),
            ],
        )
        .unwrap();
        let c = board.initial_classical(&BTreeMap::new());
        assert_eq!(c.values["and"], 0);
        assert_eq!(c.values["out"], 0);
        assert_eq!(c.values["sum"], 2);
    }

    #[test]
    fn wires_into_uncontrolled_elements_are_rejected() {
        let err = Board::new(
            Grid::default(),
            vec![
                Element::new("s", ElementKind::Switch, 0, 0, 0),
                Element::new("m", ElementKind::Mirror, 1, 0, 45),
            ],
            vec![Wire::new("s", "m")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("`m`"), "{err}");
    }
}
