// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! One time step: free propagation, measurement branching, local unitaries.

use std::collections::{BTreeMap, HashMap};

use super::board::{Board, ClassicalState, Event, EventKind};
use super::EngineError;
use crate::elements::{swapped_roles, ElementKind, LocalAction, ProjectionKind};
use crate::photon::{
    photon_axis_names, symmetrized_product, tag_particle, Direction, Grid, PhotonCoordinate,
};
use crate::tensor::{c64, Block, Dimension, SparseOperator, SparseVector, PRUNE_EPSILON};

/// Branches with a smaller probability are dropped.
pub const MIN_BRANCH_WEIGHT: f64 = PRUNE_EPSILON * PRUNE_EPSILON;

/// Allowed mismatch between a parent's probability and the sum of its children.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// One outcome of a step.
#[derive(Clone, Debug)]
pub struct Branch {
    /// Probability relative to the parent.
    pub probability: f64,
    /// Normalized post-step state.
    pub state: SparseVector,
    pub classical: ClassicalState,
    /// Events of this step.
    pub events: Vec<Event>,
}

/// Axes of photon `tag` in `state`: `x, y, dir, pol`.
fn axes(state: &SparseVector, tag: usize) -> Result<[Dimension; 4], EngineError> {
    let names = photon_axis_names(tag);
    let mut out = Vec::with_capacity(4);
    for n in &names {
        out.push(
            state
                .dim(n)
                .cloned()
                .ok_or_else(|| EngineError::Internal(format!("photon {tag} has no `{n}` axis")))?,
        );
    }
    Ok(out.try_into().expect("four axes"))
}

fn positions(state: &SparseVector, tag: usize) -> [usize; 4] {
    let names = photon_axis_names(tag);
    names.map(|n| {
        state
            .dims()
            .iter()
            .position(|d| d.name() == n)
            .expect("photon axes present")
    })
}

/// Rename tags in one pass through temporary names, so `1 → 2, 2 → 3` works.
fn retag_operator(op: &SparseOperator, map: &[(usize, usize)]) -> SparseOperator {
    let base = ["x", "y", "dir", "pol"];
    let mut first = Vec::new();
    let mut second = Vec::new();
    for &(from, to) in map {
        for b in base {
            first.push((format!("{b}:{from}"), format!("{b}:tmp{from}")));
            second.push((format!("{b}:tmp{from}"), format!("{b}:{to}")));
        }
    }
    let mut out = op.clone();
    for pass in [first, second] {
        let present: Vec<(&str, &str)> = pass
            .iter()
            .filter(|(a, _)| out.in_dims().iter().any(|d| d.name() == a))
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        out = out.renamed(&present).expect("distinct temporary names");
    }
    out
}

fn retag_vector(v: &SparseVector, map: &[(usize, usize)]) -> SparseVector {
    let base = ["x", "y", "dir", "pol"];
    let mut out = v.clone();
    for stage in 0..2 {
        let mut pass = Vec::new();
        for &(from, to) in map {
            for b in base {
                if stage == 0 {
                    pass.push((format!("{b}:{from}"), format!("{b}:tmp{from}")));
                } else {
                    pass.push((format!("{b}:tmp{from}"), format!("{b}:{to}")));
                }
            }
        }
        let present: Vec<(&str, &str)> = pass
            .iter()
            .filter(|(a, _)| out.dims().iter().any(|d| d.name() == a))
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect();
        out = out.renamed(&present).expect("distinct temporary names");
    }
    out
}

fn local_to_photon(op: &SparseOperator, tag: usize) -> SparseOperator {
    op.renamed(&[
        ("dir", &format!("dir:{tag}")),
        ("pol", &format!("pol:{tag}")),
    ])
    .expect("local operator")
}

/// Canonical axis order `x:1, y:1, dir:1, pol:1, x:2, …`.
pub fn canonical(state: &SparseVector) -> Result<SparseVector, EngineError> {
    let mut names: Vec<(usize, usize, String)> = state
        .dims()
        .iter()
        .map(|d| {
            let rank = ["x", "y", "dir", "pol"]
                .iter()
                .position(|b| *b == d.base_name())
                .unwrap_or(4);
            (d.particle().unwrap_or(0), rank, d.name().to_string())
        })
        .collect();
    names.sort();
    let order: Vec<&str> = names.iter().map(|(_, _, n)| n.as_str()).collect();
    Ok(state.permuted(&order)?)
}

/// The sources' joint state at `t = 0`. Single-photon sources sharing a
/// wavelength emit indistinguishable photons and are symmetrized.
pub(crate) fn initial_state(board: &Board) -> Result<SparseVector, EngineError> {
    let grid = board.grid();
    let mut parts: Vec<SparseVector> = Vec::new();
    let mut groups: Vec<(Option<u64>, Vec<SparseVector>, Vec<usize>)> = Vec::new();
    let mut next_tag = 1;
    for ((x, y), emission) in board.emissions() {
        let n = emission.directions.len();
        if n == 1 {
            let pol = emission
                .polarization
                .iter()
                .fold([c64(0.0, 0.0); 2], |mut acc, (c, a)| {
                    acc[c[0]] = a;
                    acc
                });
            let photon = crate::photon::single_photon(
                grid,
                PhotonCoordinate::new(x, y, emission.directions[0]),
                pol,
            )?;
            let key = emission.wavelength.map(f64::to_bits);
            match groups.iter_mut().find(|g| g.0 == key) {
                Some(g) => {
                    g.1.push(photon);
                    g.2.push(next_tag);
                }
                None => groups.push((key, vec![photon], vec![next_tag])),
            }
        } else {
            let mut spatial = SparseVector::scalar(c64(1.0, 0.0));
            let mut map = Vec::new();
            for (i, d) in emission.directions.iter().enumerate() {
                let tag = next_tag + i;
                let g = grid_dims(grid, tag);
                spatial = spatial.tensor(&SparseVector::basis(g, &[x, y, d.index()])?)?;
                map.push((i + 1, tag));
            }
            parts.push(spatial.tensor(&retag_vector(&emission.polarization, &map))?);
        }
        next_tag += n;
    }
    for (_, states, tags) in groups {
        if states.len() == 1 {
            parts.push(tag_particle(&states[0], tags[0])?);
        } else {
            parts.push(symmetrized_product(&states, &tags)?);
        }
    }
    let mut state = SparseVector::scalar(c64(1.0, 0.0));
    for p in parts {
        state = state.tensor(&p)?;
    }
    canonical(&state)
}

fn grid_dims(grid: Grid, tag: usize) -> Vec<Dimension> {
    vec![
        grid.x_dim().tagged(tag),
        grid.y_dim().tagged(tag),
        crate::photon::direction_dim().tagged(tag),
    ]
}

/// A photon component that would leave the grid.
#[derive(Clone, Debug)]
pub struct LostComponent {
    pub photon: usize,
    pub x: usize,
    pub y: usize,
    pub direction: Direction,
    pub polarization: usize,
}

/// Whether photon `tag`'s basis coordinates leave the grid on the next shift.
fn leaves(grid: Grid, coords: &[usize], pos: [usize; 4]) -> bool {
    let (dx, dy) = Direction::from_index(coords[pos[2]]).delta();
    !grid.contains(coords[pos[0]] as isize + dx, coords[pos[1]] as isize + dy)
}

/// Split off the components of each photon that would leave the grid.
///
/// Returns every combination as `(lost components, unnormalized state)`;
/// the states still sit at their pre-shift positions and contain no
/// outward-bound amplitude.
pub fn split_lost(
    grid: Grid,
    state: &SparseVector,
) -> Result<Vec<(Vec<LostComponent>, SparseVector)>, EngineError> {
    let mut branches = vec![(Vec::new(), state.clone())];
    for tag in state.particles() {
        let mut next = Vec::new();
        for (lost, psi) in branches {
            if !psi.particles().contains(&tag) {
                next.push((lost, psi));
                continue;
            }
            let pos = positions(&psi, tag);
            let dims = axes(&psi, tag)?;
            let mut outward: Vec<[usize; 4]> = Vec::new();
            let mut kept = Vec::new();
            for (coords, amp) in psi.iter() {
                if leaves(grid, &coords, pos) {
                    outward.push(pos.map(|p| coords[p]));
                } else {
                    kept.push((coords, amp));
                }
            }
            if outward.is_empty() {
                next.push((lost, psi));
                continue;
            }
            outward.sort_unstable();
            outward.dedup();
            for c in outward {
                let bra = SparseVector::basis(dims.to_vec(), &c)?;
                let rest = psi.contract(&bra)?;
                if rest.norm_sqr() < MIN_BRANCH_WEIGHT {
                    continue;
                }
                let mut l = lost.clone();
                l.push(LostComponent {
                    photon: tag,
                    x: c[0],
                    y: c[1],
                    direction: Direction::from_index(c[2]),
                    polarization: c[3],
                });
                next.push((l, rest));
            }
            let kept = SparseVector::from_entries(psi.dims().to_vec(), kept)?;
            if kept.norm_sqr() >= MIN_BRANCH_WEIGHT {
                next.push((lost, kept));
            }
        }
        branches = next;
    }
    Ok(branches)
}

/// Shift every photon one cell along its direction. Components that would
/// leave the grid must have been split off first.
pub fn shift(grid: Grid, state: &SparseVector) -> Result<SparseVector, EngineError> {
    let tags = state.particles();
    let pos: Vec<[usize; 4]> = tags.iter().map(|&t| positions(state, t)).collect();
    let mut entries = Vec::with_capacity(state.len());
    for (mut coords, amp) in state.iter() {
        for p in &pos {
            let (dx, dy) = Direction::from_index(coords[p[2]]).delta();
            let nx = coords[p[0]] as isize + dx;
            let ny = coords[p[1]] as isize + dy;
            if !grid.contains(nx, ny) {
                return Err(EngineError::Internal("shift would leave the grid".into()));
            }
            coords[p[0]] = nx as usize;
            coords[p[1]] = ny as usize;
        }
        entries.push((coords, amp));
    }
    Ok(SparseVector::from_entries(state.dims().to_vec(), entries)?)
}

/// Free propagation: outward components become `lost` branches, everything
/// else moves one cell. Returns `(lost components, shifted unnormalized state)`.
pub fn propagation_step(
    grid: Grid,
    state: &SparseVector,
) -> Result<Vec<(Vec<LostComponent>, SparseVector)>, EngineError> {
    split_lost(grid, state)?
        .into_iter()
        .map(|(lost, psi)| Ok((lost, shift(grid, &psi)?)))
        .collect()
}

fn control_bit(board: &Board, index: usize, classical: &ClassicalState) -> bool {
    let e = &board.elements()[index];
    e.controlled.is_some() && classical.control_bit(&e.id)
}

/// An unnormalized measurement outcome.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub state: SparseVector,
    pub events: Vec<Event>,
}

fn event_kind(kind: ElementKind) -> EventKind {
    if kind.is_detector() {
        EventKind::Detected
    } else {
        EventKind::Absorbed
    }
}

/// Measurement branching on an (unnormalized) state. Each photon
/// independently meets one of: a destructive bra `√w⟨φ|`, a nondemolition
/// projection `√w P`, or the null outcome `√M⋆`.
pub fn measurement_step(
    board: &Board,
    state: &SparseVector,
    classical: &ClassicalState,
    step: usize,
) -> Result<Vec<Outcome>, EngineError> {
    let mut outcomes = vec![Outcome {
        state: state.clone(),
        events: Vec::new(),
    }];
    for tag in state.particles() {
        let mut next = Vec::new();
        for out in outcomes {
            if !out.state.particles().contains(&tag) {
                next.push(out);
                continue;
            }
            let psi = &out.state;
            let [xd, yd, dd, pd] = axes(psi, tag)?;
            let xn = xd.name().to_string();
            let yn = yd.name().to_string();
            let cells = psi.support_of(&[xd.clone(), yd.clone()])?;
            let mut roots: HashMap<(usize, usize), SparseOperator> = HashMap::new();
            for cell in &cells {
                let (cx, cy) = (cell[0], cell[1]);
                let Some(i) = board.index_at(cx, cy) else {
                    continue;
                };
                let bit = control_bit(board, i, classical);
                let phys = board.physics(i);
                let projections = phys.actions[bit as usize].projections();
                if projections.is_empty() {
                    continue;
                }
                let element = &board.elements()[i];
                for proj in projections {
                    let sw = proj.weight.sqrt();
                    let child = match &proj.kind {
                        ProjectionKind::Destructive(local) => {
                            let bra = SparseVector::from_entries(
                                vec![xd.clone(), yd.clone(), dd.clone(), pd.clone()],
                                local.iter().map(|(c, a)| (vec![cx, cy, c[0], c[1]], a)),
                            )?;
                            psi.contract(&bra)?.scaled(c64(sw, 0.0))
                        }
                        ProjectionKind::Nondemolition(p) => {
                            let op = local_to_photon(p, tag).scaled(c64(sw, 0.0));
                            psi.apply_blockwise(
                                &[xn.as_str(), yn.as_str()],
                                &[dd.clone(), pd.clone()],
                                |c| {
                                    if c[0] == cx && c[1] == cy {
                                        Block::Apply(&op)
                                    } else {
                                        Block::Zero
                                    }
                                },
                            )?
                        }
                    };
                    if child.norm_sqr() < MIN_BRANCH_WEIGHT {
                        continue;
                    }
                    let mut events = out.events.clone();
                    events.push(Event {
                        step,
                        kind: event_kind(element.kind),
                        element: Some(element.id.clone()),
                        x: cx,
                        y: cy,
                        photon: tag,
                        outcome: proj.label.clone(),
                    });
                    next.push(Outcome {
                        state: child,
                        events,
                    });
                }
                let root = phys.sqrt_null[bit as usize]
                    .as_ref()
                    .expect("measuring cell has a null operator");
                roots.insert((cx, cy), local_to_photon(root, tag));
            }
            let null = if roots.is_empty() {
                psi.clone()
            } else {
                psi.apply_blockwise(
                    &[xn.as_str(), yn.as_str()],
                    &[dd.clone(), pd.clone()],
                    |c| match roots.get(&(c[0], c[1])) {
                        Some(op) => Block::Apply(op),
                        None => Block::Identity,
                    },
                )?
            };
            if null.norm_sqr() >= MIN_BRANCH_WEIGHT {
                next.push(Outcome {
                    state: null,
                    events: out.events,
                });
            }
        }
        outcomes = next;
    }
    Ok(outcomes)
}

/// Two-photon operators `V_pq V_qp` for each gate kind, keyed by kind.
fn pair_gate(board: &Board, index: usize, bit: bool, p: usize, q: usize) -> Option<SparseOperator> {
    match &board.physics(index).actions[bit as usize] {
        LocalAction::TwoPhotonGate(v12) => {
            let both = v12.compose(&swapped_roles(v12)).expect("same dims");
            Some(retag_operator(&both, &[(1, p), (2, q)]))
        }
        _ => None,
    }
}

/// Apply every element's local unitary, then two-photon gates on co-located pairs.
pub fn unitary_step(
    board: &Board,
    state: &SparseVector,
    classical: &ClassicalState,
) -> Result<SparseVector, EngineError> {
    let mut psi = state.clone();
    let tags = psi.particles();
    for &tag in &tags {
        let [xd, yd, dd, pd] = axes(&psi, tag)?;
        let mut ops: HashMap<(usize, usize), SparseOperator> = HashMap::new();
        for cell in psi.support_of(&[xd.clone(), yd.clone()])? {
            if let Some(i) = board.index_at(cell[0], cell[1]) {
                if let Some(u) = board.unitary_at(i, control_bit(board, i, classical)) {
                    ops.insert((cell[0], cell[1]), local_to_photon(u, tag));
                }
            }
        }
        if ops.is_empty() {
            continue;
        }
        psi = psi.apply_blockwise(&[xd.name(), yd.name()], &[dd, pd], |c| {
            match ops.get(&(c[0], c[1])) {
                Some(op) => Block::Apply(op),
                None => Block::Identity,
            }
        })?;
    }
    for (a, &p) in tags.iter().enumerate() {
        for &q in &tags[a + 1..] {
            let [xp, yp, dp, pp] = axes(&psi, p)?;
            let [xq, yq, dq, pq] = axes(&psi, q)?;
            let cp = psi.support_of(&[xp.clone(), yp.clone()])?;
            let cq = psi.support_of(&[xq.clone(), yq.clone()])?;
            let mut ops: HashMap<(usize, usize), SparseOperator> = HashMap::new();
            for cell in cp.iter().filter(|c| cq.contains(c)) {
                if let Some(i) = board.index_at(cell[0], cell[1]) {
                    let bit = control_bit(board, i, classical);
                    if let Some(op) = pair_gate(board, i, bit, p, q) {
                        let targets = [dp.clone(), pp.clone(), dq.clone(), pq.clone()];
                        ops.insert((cell[0], cell[1]), op.aligned(&targets, &targets)?);
                    }
                }
            }
            if ops.is_empty() {
                continue;
            }
            psi = psi.apply_blockwise(
                &[xp.name(), yp.name(), xq.name(), yq.name()],
                &[dp, pp, dq, pq],
                |c| {
                    if c[0] == c[2] && c[1] == c[3] {
                        match ops.get(&(c[0], c[1])) {
                            Some(op) => Block::Apply(op),
                            None => Block::Identity,
                        }
                    } else {
                        Block::Identity
                    }
                },
            )?;
        }
    }
    Ok(psi)
}

fn apply_events(board: &Board, classical: &mut ClassicalState, events: &[Event]) {
    for e in events {
        if e.kind != EventKind::Detected {
            continue;
        }
        if let Some(id) = &e.element {
            classical.detected.insert(id.clone());
            if board.element(id).map(|el| el.kind) == Some(ElementKind::Bomb) {
                classical.exploded = true;
            }
        }
    }
    classical.record.extend_from_slice(events);
}

/// Advance one step from `(state, classical)` at time `step − 1`.
///
/// Children probabilities are relative to the parent and sum to 1 within
/// [`PROBABILITY_TOLERANCE`]; each child's state is normalized.
pub fn evolve_step(
    board: &Board,
    state: &SparseVector,
    classical: &ClassicalState,
    step: usize,
) -> Result<Vec<Branch>, EngineError> {
    let grid = board.grid();
    let mut out = Vec::new();
    let mut total = 0.0;
    for (lost, moved) in propagation_step(grid, state)? {
        let lost_events: Vec<Event> = lost
            .iter()
            .map(|l| Event {
                step,
                kind: EventKind::Lost,
                element: None,
                x: l.x,
                y: l.y,
                photon: l.photon,
                outcome: format!(
                    "{}{}",
                    l.direction,
                    if l.polarization == 0 { "H" } else { "V" }
                ),
            })
            .collect();
        for outcome in measurement_step(board, &moved, classical, step)? {
            let evolved = unitary_step(board, &outcome.state, classical)?;
            let p = evolved.norm_sqr();
            total += p;
            if p < MIN_BRANCH_WEIGHT {
                continue;
            }
            let mut events = lost_events.clone();
            events.extend(outcome.events);
            events.sort();
            let mut c = classical.clone();
            apply_events(board, &mut c, &events);
            board.evaluate_wires(&mut c);
            out.push(Branch {
                probability: p,
                state: evolved.normalized()?,
                classical: c,
                events,
            });
        }
    }
    let expected = state.norm_sqr();
    if (total - expected).abs() > PROBABILITY_TOLERANCE {
        return Err(EngineError::ProbabilityLeak {
            step,
            expected,
            found: total,
        });
    }
    Ok(out)
}

/// All assignments of the random switches with their probabilities.
pub fn input_assignments(board: &Board) -> Vec<(BTreeMap<String, bool>, f64)> {
    let mut out = vec![(BTreeMap::new(), 1.0)];
    for (id, p1) in board.random_inputs() {
        let mut next = Vec::new();
        for (assign, p) in out {
            for (bit, pb) in [(false, 1.0 - p1), (true, p1)] {
                if pb <= 0.0 {
                    continue;
                }
                let mut a: BTreeMap<String, bool> = assign.clone();
                a.insert(id.to_string(), bit);
                next.push((a, p * pb));
            }
        }
        out = next;
    }
    out
}
