//! Rectangular parameter sweeps of the maximal shifted phase distribution.
//!
//! Every grid cell is an independent evolution. Cells are evaluated through
//! [`parallel::map_range`] and written to the slot of their `(i, j)` index,
//! so the grid does not depend on scheduling.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Convention, QubitState, Regime, SystemParams};
use crate::observables::s_max;
use crate::parallel::{self, Execution};
use crate::propagator::{evolve, EvolutionConfig};

/// Upper bound of `S_m = |ρ10|/4` for a positive state.
pub const S_MAX_BOUND: f64 = 0.125;

/// Step-ceiling scale used by sweeps. Only the final state is sampled, and
/// at this ceiling `S_m` agrees with the default scale to better than 1e−9.
pub const SWEEP_MAX_STEP_SCALE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisName {
    Delta,
    Epsilon,
    Gamma,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::Delta => "delta",
            AxisName::Epsilon => "epsilon",
            AxisName::Gamma => "gamma",
        }
    }

    fn apply(self, params: SystemParams, value: f64) -> SystemParams {
        match self {
            AxisName::Delta => params.with_detuning(value),
            AxisName::Epsilon => params.with_drive(value),
            AxisName::Gamma => params.with_coupling(value),
        }
    }
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(AxisName::Delta),
            "epsilon" => Ok(AxisName::Epsilon),
            "gamma" => Ok(AxisName::Gamma),
            other => Err(Error::InvalidSpec(format!("unknown axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub n_points: usize,
}

impl Axis {
    pub fn new(name: AxisName, min: f64, max: f64, n_points: usize) -> Self {
        Axis {
            name,
            min,
            max,
            n_points,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.n_points == 1 {
            self.min
        } else if i + 1 == self.n_points {
            self.max
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.n_points - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.value(i)).collect()
    }

    /// Index of the grid value closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        (0..self.n_points)
            .min_by(|&a, &b| {
                (self.value(a) - x)
                    .abs()
                    .total_cmp(&(self.value(b) - x).abs())
            })
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    /// Values for the parameters not swept.
    pub fixed: SystemParams,
    pub t_eval: f64,
    pub evolution: EvolutionConfig,
    pub convention: Convention,
}

impl SweepSpec {
    /// Spec evaluating `S_m` at `t_eval` with default tolerances and
    /// [`SWEEP_MAX_STEP_SCALE`].
    pub fn new(axis1: Axis, axis2: Axis, fixed: SystemParams, t_eval: f64) -> Self {
        SweepSpec {
            axis1,
            axis2,
            fixed,
            t_eval,
            evolution: EvolutionConfig {
                max_step_scale: SWEEP_MAX_STEP_SCALE,
                ..EvolutionConfig::uniform(t_eval, 1)
            },
            convention: Convention::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for axis in [&self.axis1, &self.axis2] {
            if axis.n_points == 0 {
                return Err(Error::InvalidSpec(format!("axis {} has no points", axis.name)));
            }
            if !(axis.min.is_finite() && axis.max.is_finite()) {
                return Err(Error::InvalidSpec(format!("axis {} range is not finite", axis.name)));
            }
        }
        if self.axis1.name == self.axis2.name {
            return Err(Error::InvalidSpec("axis names must differ".into()));
        }
        self.evolution
            .validate()
            .map_err(|e| Error::InvalidSpec(e.to_string()))?;
        if !self.evolution.sample_times.contains(&self.t_eval) {
            return Err(Error::InvalidSpec(format!(
                "t_eval = {} is not among the sample times",
                self.t_eval
            )));
        }
        Ok(())
    }

    pub fn cell_params(&self, i: usize, j: usize) -> SystemParams {
        let p = self.axis1.name.apply(self.fixed, self.axis1.value(i));
        self.axis2.name.apply(p, self.axis2.value(j))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub i: usize,
    pub j: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepMetadata {
    pub version: &'static str,
    pub omega_qubit: f64,
    pub convention: Convention,
    /// Cells whose trajectory reported a positivity warning.
    pub positivity_flags: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub spec: SweepSpec,
    /// `values[i][j]` for `axis1[i]`, `axis2[j]`; NaN marks a failed cell.
    pub values: Vec<Vec<f64>>,
    pub regimes: Vec<Vec<Regime>>,
    pub failures: Vec<CellFailure>,
    pub metadata: SweepMetadata,
}

impl SweepGrid {
    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

struct CellOutcome {
    value: std::result::Result<f64, String>,
    regime: Regime,
    positivity_flag: bool,
    rhs_evals: usize,
}

/// `S_m(t_eval)` of a single cell.
pub fn run_cell(spec: &SweepSpec, initial: &QubitState, i: usize, j: usize) -> Result<f64> {
    let params = spec.cell_params(i, j);
    let traj = evolve(initial, &params, &spec.evolution)?;
    let k = traj
        .index_of(spec.t_eval)
        .ok_or_else(|| Error::InvalidSpec("t_eval not sampled".into()))?;
    Ok(s_max(&traj.observed_at(k, spec.convention)).value)
}

fn eval_cell(spec: &SweepSpec, initial: &QubitState, i: usize, j: usize) -> CellOutcome {
    let params = spec.cell_params(i, j);
    let regime = params.regime();
    match evolve(initial, &params, &spec.evolution) {
        Ok(traj) => {
            let k = traj
                .index_of(spec.t_eval)
                .expect("validated spec samples t_eval");
            CellOutcome {
                value: Ok(s_max(&traj.observed_at(k, spec.convention)).value),
                regime,
                positivity_flag: !traj.positivity_warnings.is_empty(),
                rhs_evals: traj.stats.rhs_evals,
            }
        }
        Err(e) => CellOutcome {
            value: Err(e.to_string()),
            regime,
            positivity_flag: false,
            rhs_evals: 0,
        },
    }
}

pub fn run_sweep(spec: &SweepSpec, initial: &QubitState) -> Result<SweepGrid> {
    run_sweep_with(spec, initial, Execution::default())
}

pub fn run_sweep_with(
    spec: &SweepSpec,
    initial: &QubitState,
    execution: Execution,
) -> Result<SweepGrid> {
    spec.validate()?;
    if initial.frame != spec.convention.frame() {
        return Err(Error::InvalidSpec(format!(
            "initial state is in the {} frame but the sweep uses the {} basis",
            initial.frame,
            spec.convention.name()
        )));
    }
    initial
        .validate()
        .map_err(|e| Error::InvalidSpec(e.to_string()))?;

    let (n1, n2) = (spec.axis1.n_points, spec.axis2.n_points);
    let outcomes = parallel::map_range(n1 * n2, execution, |k| {
        eval_cell(spec, initial, k / n2, k % n2)
    });

    let mut values = vec![vec![f64::NAN; n2]; n1];
    let mut regimes = vec![vec![Regime::Markov; n2]; n1];
    let mut failures = Vec::new();
    let mut positivity_flags = 0;
    let mut rhs_evals = 0;
    for (k, outcome) in outcomes.into_iter().enumerate() {
        let (i, j) = (k / n2, k % n2);
        regimes[i][j] = outcome.regime;
        positivity_flags += usize::from(outcome.positivity_flag);
        rhs_evals += outcome.rhs_evals;
        match outcome.value {
            Ok(v) => values[i][j] = v,
            Err(message) => failures.push(CellFailure { i, j, message }),
        }
    }

    Ok(SweepGrid {
        spec: spec.clone(),
        values,
        regimes,
        failures,
        metadata: SweepMetadata {
            version: env!("CARGO_PKG_VERSION"),
            omega_qubit: spec.fixed.omega_qubit,
            convention: spec.convention,
            positivity_flags,
            rhs_evals,
        },
    })
}

/// Thresholded sweep with 4-connected component labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TongueMask {
    /// `cells[i][j]` is true iff `S_m ≥ threshold`.
    pub cells: Vec<Vec<bool>>,
    /// Component id per cell; `None` outside the mask.
    pub labels: Vec<Vec<Option<usize>>>,
    /// Cell count of each component, indexed by id.
    pub component_sizes: Vec<usize>,
}

impl TongueMask {
    pub fn largest_component(&self) -> Option<usize> {
        self.component_sizes
            .iter()
            .enumerate()
            .max_by_key(|&(id, &size)| (size, std::cmp::Reverse(id)))
            .map(|(id, _)| id)
    }

    pub fn label(&self, i: usize, j: usize) -> Option<usize> {
        self.labels[i][j]
    }

    /// Length of the run of consecutive masked cells along axis1 at fixed
    /// `j` that contains `i`; zero if `(i, j)` is not masked.
    pub fn run_length_along_axis1(&self, i: usize, j: usize) -> usize {
        if !self.cells[i][j] {
            return 0;
        }
        let lo = (0..=i).rev().take_while(|&k| self.cells[k][j]).count();
        let hi = (i..self.cells.len()).take_while(|&k| self.cells[k][j]).count();
        lo + hi - 1
    }

    /// Number of cells of component `id` in column `j` (fixed axis2 value).
    pub fn component_width_at(&self, id: usize, j: usize) -> usize {
        self.labels.iter().filter(|row| row[j] == Some(id)).count()
    }
}

/// Marks cells with `S_m ≥ threshold` (threshold ∈ (0, 1/8)) and labels
/// connected regions. Failed (NaN) cells are never masked.
pub fn tongue_mask(grid: &SweepGrid, threshold: f64) -> TongueMask {
    let cells: Vec<Vec<bool>> = grid
        .values
        .iter()
        .map(|row| row.iter().map(|&v| v >= threshold).collect())
        .collect();
    let n1 = cells.len();
    let n2 = cells.first().map_or(0, Vec::len);
    let mut labels = vec![vec![None; n2]; n1];
    let mut component_sizes = Vec::new();
    let mut stack = Vec::new();
    for i0 in 0..n1 {
        for j0 in 0..n2 {
            if !cells[i0][j0] || labels[i0][j0].is_some() {
                continue;
            }
            let id = component_sizes.len();
            let mut size = 0;
            labels[i0][j0] = Some(id);
            stack.push((i0, j0));
            while let Some((i, j)) = stack.pop() {
                size += 1;
                let neighbours = [
                    (i.wrapping_sub(1), j),
                    (i + 1, j),
                    (i, j.wrapping_sub(1)),
                    (i, j + 1),
                ];
                for (a, b) in neighbours {
                    if a < n1 && b < n2 && cells[a][b] && labels[a][b].is_none() {
                        labels[a][b] = Some(id);
                        stack.push((a, b));
                    }
                }
            }
            component_sizes.push(size);
        }
    }
    TongueMask {
        cells,
        labels,
        component_sizes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Frame;

    fn small_spec() -> SweepSpec {
        let mut spec = SweepSpec::new(
            Axis::new(AxisName::Delta, -1.0, 1.0, 3),
            Axis::new(AxisName::Epsilon, 0.5, 1.0, 2),
            SystemParams::markov(),
            5.0,
        );
        spec.evolution = EvolutionConfig::uniform(5.0, 1);
        spec
    }

    fn grid_of(values: Vec<Vec<f64>>) -> SweepGrid {
        let spec = small_spec();
        let n2 = values[0].len();
        SweepGrid {
            regimes: vec![vec![Regime::Markov; n2]; values.len()],
            values,
            failures: vec![],
            metadata: SweepMetadata {
                version: "test",
                omega_qubit: spec.fixed.omega_qubit,
                convention: spec.convention,
                positivity_flags: 0,
                rhs_evals: 0,
            },
            spec,
        }
    }

    #[test]
    fn axis_values() {
        let a = Axis::new(AxisName::Delta, -2.0, 2.0, 41);
        assert_eq!(a.value(0), -2.0);
        assert_eq!(a.value(40), 2.0);
        assert_eq!(a.nearest(0.0), 20);
        assert!(a.value(20).abs() < 1e-15);
        assert_eq!(Axis::new(AxisName::Gamma, 0.3, 0.9, 1).values(), vec![0.3]);
    }

    #[test]
    fn axis_names_parse() {
        assert_eq!("epsilon".parse::<AxisName>().unwrap(), AxisName::Epsilon);
        assert!("lambda".parse::<AxisName>().is_err());
    }

    #[test]
    fn spec_validation() {
        let mut s = small_spec();
        s.axis2.name = AxisName::Delta;
        assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))));
        let mut s = small_spec();
        s.t_eval = 4.0;
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.axis1.n_points = 0;
        assert!(s.validate().is_err());
        assert!(small_spec().validate().is_ok());
    }

    #[test]
    fn initial_frame_must_match_convention() {
        let spec = small_spec();
        let err = run_sweep(&spec, &QubitState::plus(Frame::BareRotating));
        assert!(matches!(err, Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn failing_cells_are_marked() {
        // Δ = ε = 0 has no dressed basis.
        let mut spec = small_spec();
        spec.axis1 = Axis::new(AxisName::Delta, 0.0, 1.0, 2);
        spec.axis2 = Axis::new(AxisName::Epsilon, 0.0, 1.0, 2);
        let g = run_sweep(&spec, &QubitState::plus(Frame::Dressed)).unwrap();
        assert_eq!(g.failures.len(), 1);
        assert_eq!((g.failures[0].i, g.failures[0].j), (0, 0));
        assert!(g.values[0][0].is_nan());
        assert!(g.values[1][1].is_finite());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let spec = small_spec();
        let init = QubitState::plus(Frame::Dressed);
        let a = run_sweep_with(&spec, &init, Execution::Sequential).unwrap();
        let b = run_sweep_with(&spec, &init, Execution::Parallel).unwrap();
        assert_eq!(a.values, b.values);
        for v in a.values.iter().flatten() {
            assert!((0.0..=S_MAX_BOUND + 1e-9).contains(v));
        }
    }

    #[test]
    fn cell_matches_grid() {
        let spec = small_spec();
        let init = QubitState::plus(Frame::Dressed);
        let g = run_sweep(&spec, &init).unwrap();
        assert_eq!(run_cell(&spec, &init, 2, 1).unwrap(), g.values[2][1]);
    }

    #[test]
    fn empty_masks() {
        let g = grid_of(vec![vec![0.0; 4]; 3]);
        let m = tongue_mask(&g, 0.05);
        assert!(m.cells.iter().flatten().all(|&c| !c));
        assert_eq!(m.largest_component(), None);

        let g = grid_of(vec![vec![0.01, 0.02], vec![0.03, 0.04]]);
        let m = tongue_mask(&g, 0.1);
        assert!(m.cells.iter().flatten().all(|&c| !c));
    }

    #[test]
    fn components_and_runs() {
        let g = grid_of(vec![
            vec![0.1, 0.0, 0.1],
            vec![0.1, 0.0, 0.0],
            vec![0.0, 0.0, 0.1],
            vec![0.1, 0.1, 0.1],
        ]);
        let m = tongue_mask(&g, 0.05);
        assert_eq!(m.component_sizes.len(), 3);
        let big = m.largest_component().unwrap();
        assert_eq!(m.component_sizes[big], 4);
        assert_eq!(m.label(2, 2), Some(big));
        assert_eq!(m.run_length_along_axis1(0, 0), 2);
        assert_eq!(m.run_length_along_axis1(3, 2), 2);
        assert_eq!(m.run_length_along_axis1(2, 0), 0);
        assert_eq!(m.component_width_at(big, 2), 2);
        assert_eq!(m.component_width_at(big, 1), 1);
    }

    #[test]
    fn nan_cells_are_not_masked() {
        let g = grid_of(vec![vec![f64::NAN, 0.1]]);
        let m = tongue_mask(&g, 0.05);
        assert_eq!(m.cells, vec![vec![false, true]]);
    }
}
