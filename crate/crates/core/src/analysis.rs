//! Weight-space analysis: sweep the simplex, label each grid point with its
//! winning candidate, invert a selection back to the weights that produce it,
//! and detect when a monitored score first drops below a threshold.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::WeightVector;
use crate::scoring::CandidateScores;

/// Default score gap below which a sweep cell counts as a tie.
pub const SWEEP_TIE_THRESHOLD: f64 = 1e-6;

/// Default trigger threshold for [`monitor_scores`].
pub const MONITOR_THRESHOLD: f64 = 0.7;

/// Regular lattice on the probability simplex: every `(c_1, .., c_n) / R`
/// with non-negative integer `c_i` summing to `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexGrid {
    resolution: usize,
    dims: usize,
    lattice: Vec<Vec<usize>>,
}

impl SimplexGrid {
    /// Points are generated in lexicographic order of their lattice coordinates.
    pub fn new(dims: usize, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidArgument(
                "sweep resolution must be at least 1".into(),
            ));
        }
        if dims == 0 {
            return Err(Error::InvalidArgument(
                "simplex needs at least one dimension".into(),
            ));
        }
        let mut lattice = Vec::new();
        let mut current = Vec::with_capacity(dims);
        compositions(resolution, dims, &mut current, &mut lattice);
        Ok(SimplexGrid {
            resolution,
            dims,
            lattice,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn lattice(&self) -> &[Vec<usize>] {
        &self.lattice
    }

    /// Weight vector of a lattice point; each coordinate is divided once.
    pub fn weights(&self, index: usize, w_star: &[f64]) -> Result<WeightVector> {
        let r = self.resolution as f64;
        let w = self.lattice[index].iter().map(|c| *c as f64 / r).collect();
        WeightVector::new(w, w_star.to_vec())
    }
}

fn compositions(
    remaining: usize,
    slots: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if slots == 1 {
        current.push(remaining);
        out.push(current.clone());
        current.pop();
        return;
    }
    for c in 0..=remaining {
        current.push(c);
        compositions(remaining - c, slots - 1, current, out);
        current.pop();
    }
}

/// Winner of one weight configuration.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Best {
    Candidate(String),
    /// Top candidates closer than the tie threshold.
    Tie(Vec<String>),
}

impl Best {
    pub fn label(&self) -> &str {
        match self {
            Best::Candidate(id) => id,
            Best::Tie(_) => "tie",
        }
    }
}

/// Labels a score vector: the argmax, or a tie when the best two are within `threshold`.
pub fn classify(ids: &[String], scores: &[f64], threshold: f64) -> Best {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    let top = scores[order[0]];
    let tied: Vec<String> = order
        .iter()
        .take_while(|&&i| top - scores[i] < threshold)
        .map(|&i| ids[i].clone())
        .collect();
    if tied.len() > 1 {
        let mut tied = tied;
        tied.sort();
        Best::Tie(tied)
    } else {
        Best::Candidate(ids[order[0]].clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecisionCell {
    pub lattice: Vec<usize>,
    pub weights: WeightVector,
    pub balance: f64,
    /// Unified score per candidate, in the sweep's candidate order.
    pub scores: Vec<f64>,
    pub best: Best,
}

impl DecisionCell {
    pub fn is_edge(&self) -> bool {
        self.lattice.contains(&0)
    }
}

/// Result of sweeping the weight simplex.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub candidate_ids: Vec<String>,
    pub resolution: usize,
    pub tie_threshold: f64,
    pub cells: Vec<DecisionCell>,
}

/// Evaluates every grid point of the weight simplex.
///
/// Reason scores depend only on the trajectories, so they are taken from
/// `scores` and only the weighting and balance are recomputed per point.
pub fn simplex_sweep(
    scores: &[CandidateScores],
    w_star: &[f64],
    resolution: usize,
    tie_threshold: f64,
) -> Result<Sweep> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one candidate".into(),
        ));
    }
    let grid = SimplexGrid::new(w_star.len(), resolution)?;
    let ids: Vec<String> = scores.iter().map(|s| s.id.clone()).collect();
    let mut cells = Vec::with_capacity(grid.len());
    for (index, lattice) in grid.lattice().iter().enumerate() {
        let weights = grid.weights(index, w_star)?;
        let mut totals = Vec::with_capacity(scores.len());
        let mut b = 0.0;
        for cs in scores {
            let (_, balance, total) = cs.weighted(&weights)?;
            b = balance;
            totals.push(total);
        }
        let best = classify(&ids, &totals, tie_threshold);
        cells.push(DecisionCell {
            lattice: lattice.clone(),
            weights,
            balance: b,
            scores: totals,
            best,
        });
    }
    Ok(Sweep {
        candidate_ids: ids,
        resolution,
        tie_threshold,
        cells,
    })
}

/// Cells grouped by winner.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RegionMap {
    /// Cell indices won outright by each candidate (every candidate has an entry).
    pub regions: BTreeMap<String, Vec<usize>>,
    pub ties: Vec<usize>,
}

impl RegionMap {
    pub fn counts(&self) -> BTreeMap<String, usize> {
        let mut out: BTreeMap<String, usize> = self
            .regions
            .iter()
            .map(|(k, v)| (k.clone(), v.len()))
            .collect();
        out.insert("tie".into(), self.ties.len());
        out
    }
}

pub fn decision_regions(sweep: &Sweep) -> RegionMap {
    let mut map = RegionMap {
        regions: sweep
            .candidate_ids
            .iter()
            .map(|id| (id.clone(), Vec::new()))
            .collect(),
        ties: Vec::new(),
    };
    for (i, cell) in sweep.cells.iter().enumerate() {
        match &cell.best {
            Best::Candidate(id) => map.regions.entry(id.clone()).or_default().push(i),
            Best::Tie(_) => map.ties.push(i),
        }
    }
    map
}

/// All weight vectors under which `candidate` wins outright.
pub fn inverse_region<'a>(sweep: &'a Sweep, candidate: &str) -> Result<Vec<&'a DecisionCell>> {
    if !sweep.candidate_ids.iter().any(|id| id == candidate) {
        return Err(Error::InvalidArgument(format!(
            "unknown candidate {candidate:?}; sweep has {:?}",
            sweep.candidate_ids
        )));
    }
    Ok(sweep
        .cells
        .iter()
        .filter(|c| matches!(&c.best, Best::Candidate(id) if id == candidate))
        .collect())
}

/// Index of the first score strictly below `threshold`, if any.
pub fn monitor_scores(series: &[f64], threshold: f64) -> Result<Option<usize>> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("score series is empty".into()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    Ok(series.iter().position(|s| *s < threshold))
}
