//! Correlation strategies: the pluggable models that decide both wings'
//! outcomes.
//!
//! Locality is enforced by interface shape, not by a runtime flag: a
//! [`LocalResponder`] answers from `(hidden state, own setting, own
//! randomness)` and has no parameter through which the remote setting could
//! arrive; a [`NonlocalResponder`] receives both settings. White-box
//! strategies additionally expose their exact conditionals
//! p(o1,o2 | s1,s2, lambda) as a [`ConditionalTable`] for the factorization
//! and independence checks.

use std::fmt;
use std::str::FromStr;

use num::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use thiserror::Error;

use crate::core::{
    parse_rat, rat, rat_to_f64, render_rat, ExactCell, ExactJoint, FloatCell, HiddenPayload,
    HiddenState, Outcome, Plan, Rat, Setting, SettingLabel,
};
use crate::oracle::enumerate_plans;

/// Tolerance for recognizing angle differences that admit exact cos^2 values.
const ANGLE_EPS: f64 = 1e-9;

/// Default lambda-grid resolution for the nonlocal-deterministic toy's
/// white-box table.
pub const DEFAULT_TOY_GRID: u32 = 1024;

/// Largest accepted toy grid; keeps the white-box table's memory bounded.
pub const MAX_TOY_GRID: u32 = 1 << 16;

/// Wing-2 bias of the signaling demo: p(Plus) when the remote setting is A.
pub const SIGNALING_PLUS_GIVEN_A: (i64, i64) = (9, 10);

pub const VALID_SPECS: &str =
    "plan:+-+, mixture:uniform, mixture:w1,...,w8, local-stochastic:p, quantum, nonlocal-det[:grid], signaling";

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("unknown strategy spec {spec:?}; valid specs: {VALID_SPECS}")]
    UnknownSpec { spec: String },
    #[error("invalid strategy parameter: {0}")]
    BadParameter(String),
    #[error("mixture weights: {0}")]
    BadWeights(String),
    #[error("setting {0} carries no angle; quantum-style strategies need angle configuration")]
    MissingAngle(SettingLabel),
    #[error("no exact conditional table: {0}")]
    NoExactTable(String),
}

// ---------------------------------------------------------------------------
// Responder interfaces
// ---------------------------------------------------------------------------

/// A responder that answers for one wing in isolation. The signature is the
/// locality guarantee: there is no argument through which the remote wing's
/// setting could reach the decision.
pub trait LocalResponder: Send + Sync {
    fn respond_local(
        &self,
        hidden: &HiddenState,
        local_setting: Setting,
        rng: &mut ChaCha12Rng,
    ) -> Outcome;
}

/// A responder that decides both outcomes with both settings in view.
pub trait NonlocalResponder: Send + Sync {
    fn respond_joint(
        &self,
        hidden: &HiddenState,
        setting1: Setting,
        setting2: Setting,
        rng: &mut ChaCha12Rng,
    ) -> (Outcome, Outcome);
}

/// The responder a strategy exposes; exactly one of the two interfaces.
pub enum Responder<'a> {
    Local(&'a dyn LocalResponder),
    Nonlocal(&'a dyn NonlocalResponder),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Locality {
    LocalResponder,
    NonlocalResponder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeterminismClaim {
    Deterministic,
    Stochastic,
}

/// Static description of a strategy: which interface it exposes, whether its
/// outcomes are a function of (lambda, settings) alone, and whether it can
/// produce an exact conditional table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StrategyKind {
    pub locality: Locality,
    pub determinism_claim: DeterminismClaim,
    pub white_box: bool,
}

// ---------------------------------------------------------------------------
// Quantum joint distribution
// ---------------------------------------------------------------------------

fn delta_deg(s1: Setting, s2: Setting) -> Result<f64, StrategyError> {
    let a1 = s1.angle_deg.ok_or(StrategyError::MissingAngle(s1.label))?;
    let a2 = s2.angle_deg.ok_or(StrategyError::MissingAngle(s2.label))?;
    Ok(a1 - a2)
}

/// cos^2 of an angle difference when it has an exact rational value. Only
/// the differences produced by the default angle set are recognized; other
/// angles take the floating-point path.
fn exact_cos2(delta_deg: f64) -> Option<Rat> {
    let d = delta_deg.rem_euclid(180.0);
    if d.abs() < ANGLE_EPS || (d - 180.0).abs() < ANGLE_EPS {
        Some(Rat::one())
    } else if (d - 60.0).abs() < ANGLE_EPS || (d - 120.0).abs() < ANGLE_EPS {
        Some(rat(1, 4))
    } else {
        None
    }
}

fn cell_from_cos2(c2: Rat) -> ExactCell {
    let half = rat(1, 2);
    let same = c2 * half;
    let diff = (Rat::one() - c2) * half;
    [[same, diff], [diff, same]]
}

/// Exact outcome-pair probabilities for the singlet-analog state at the two
/// polarizer angles, when the angle difference admits one. Errors if either
/// setting carries no angle.
pub fn quantum_joint_exact(s1: Setting, s2: Setting) -> Result<Option<ExactCell>, StrategyError> {
    Ok(exact_cos2(delta_deg(s1, s2)?).map(cell_from_cos2))
}

/// Outcome-pair probabilities p(o1,o2) for the singlet-analog state:
/// p(++) = p(--) = cos^2(delta)/2, p(+-) = p(-+) = sin^2(delta)/2. Exact
/// values are used when available so that the default angle set yields
/// exactly representable cells.
pub fn quantum_joint(s1: Setting, s2: Setting) -> Result<FloatCell, StrategyError> {
    if let Some(cell) = quantum_joint_exact(s1, s2)? {
        let mut out = [[0.0; 2]; 2];
        for o1 in 0..2 {
            for o2 in 0..2 {
                out[o1][o2] = rat_to_f64(&cell[o1][o2]);
            }
        }
        return Ok(out);
    }
    let c2 = delta_deg(s1, s2)?.to_radians().cos().powi(2);
    let same = c2 / 2.0;
    let diff = (1.0 - c2) / 2.0;
    Ok([[same, diff], [diff, same]])
}

/// Outcome-pair cells in cumulative order (++, +-, -+, --).
const CELL_ORDER: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Inverse-CDF lookup of an outcome pair at position `u` in [0, 1).
fn cell_at(cell: &FloatCell, u: f64) -> (Outcome, Outcome) {
    let mut cum = 0.0;
    for (o1, o2) in CELL_ORDER {
        cum += cell[o1][o2];
        if u < cum {
            return (Outcome::from_index(o1), Outcome::from_index(o2));
        }
    }
    (Outcome::Minus, Outcome::Minus)
}

fn exact_cell_at(cell: &ExactCell, u: Rat) -> (usize, usize) {
    let mut cum = Rat::zero();
    for (o1, o2) in CELL_ORDER {
        cum += cell[o1][o2];
        if u < cum {
            return (o1, o2);
        }
    }
    (1, 1)
}

// ---------------------------------------------------------------------------
// Responders
// ---------------------------------------------------------------------------

/// Answers by looking the setting up in the trial's shared plan.
pub struct PlanResponder;

impl LocalResponder for PlanResponder {
    fn respond_local(
        &self,
        hidden: &HiddenState,
        local_setting: Setting,
        _rng: &mut ChaCha12Rng,
    ) -> Outcome {
        match &hidden.payload {
            HiddenPayload::Plan(plan) => plan.answer(local_setting.label),
            other => panic!("plan responder requires a plan payload, got {other:?}"),
        }
    }
}

/// Answers Plus with a fixed exact probability, independent of setting and
/// hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinResponder {
    pub p_plus: Rat,
}

impl CoinResponder {
    fn new(p_plus: Rat) -> Result<Self, StrategyError> {
        if p_plus < Rat::zero() || p_plus > Rat::one() {
            return Err(StrategyError::BadParameter(format!(
                "probability {} outside [0, 1]",
                render_rat(&p_plus)
            )));
        }
        Ok(CoinResponder { p_plus })
    }

    fn flip(&self, rng: &mut ChaCha12Rng) -> Outcome {
        let den = *self.p_plus.denom() as u64;
        let num = *self.p_plus.numer() as u64;
        if rng.gen_range(0..den) < num {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

impl LocalResponder for CoinResponder {
    fn respond_local(
        &self,
        _hidden: &HiddenState,
        _local_setting: Setting,
        rng: &mut ChaCha12Rng,
    ) -> Outcome {
        self.flip(rng)
    }
}

/// Samples the outcome pair from the singlet-analog joint distribution of
/// the two polarizer angles.
pub struct QuantumResponder;

impl NonlocalResponder for QuantumResponder {
    fn respond_joint(
        &self,
        _hidden: &HiddenState,
        setting1: Setting,
        setting2: Setting,
        rng: &mut ChaCha12Rng,
    ) -> (Outcome, Outcome) {
        let cell = quantum_joint(setting1, setting2)
            .expect("harness resolves angles before responders run");
        cell_at(&cell, rng.gen::<f64>())
    }
}

/// Deterministic function of (lambda, both settings): reads the outcome pair
/// off the inverse CDF of the quantum joint at the trial's uniform draw.
/// Consumes no randomness of its own.
pub struct ToyResponder;

impl NonlocalResponder for ToyResponder {
    fn respond_joint(
        &self,
        hidden: &HiddenState,
        setting1: Setting,
        setting2: Setting,
        _rng: &mut ChaCha12Rng,
    ) -> (Outcome, Outcome) {
        let u = match &hidden.payload {
            HiddenPayload::Unit(u) => *u,
            other => panic!("toy responder requires a unit payload, got {other:?}"),
        };
        let cell = quantum_joint(setting1, setting2)
            .expect("harness resolves angles before responders run");
        cell_at(&cell, u)
    }
}

/// Wing 1 flips a fair coin; wing 2's marginal depends on wing 1's setting
/// (heavily biased toward Plus exactly when it is A). Exists to give the
/// no-signaling detector something to catch.
pub struct SignalingResponder;

impl NonlocalResponder for SignalingResponder {
    fn respond_joint(
        &self,
        _hidden: &HiddenState,
        setting1: Setting,
        _setting2: Setting,
        rng: &mut ChaCha12Rng,
    ) -> (Outcome, Outcome) {
        let o1 = if rng.gen_range(0..2u32) == 0 { Outcome::Plus } else { Outcome::Minus };
        let (num, den) = SIGNALING_PLUS_GIVEN_A;
        let threshold = if setting1.label == SettingLabel::A { num } else { den - num };
        let o2 = if rng.gen_range(0..den as u32) < threshold as u32 {
            Outcome::Plus
        } else {
            Outcome::Minus
        };
        (o1, o2)
    }
}

static PLAN_RESPONDER: PlanResponder = PlanResponder;
static QUANTUM_RESPONDER: QuantumResponder = QuantumResponder;
static TOY_RESPONDER: ToyResponder = ToyResponder;
static SIGNALING_RESPONDER: SignalingResponder = SignalingResponder;

// ---------------------------------------------------------------------------
// Plan mixtures
// ---------------------------------------------------------------------------

/// A probability mixture over the 8 deterministic plans, sampled exactly by
/// an integer draw against cumulative numerators on a common denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanMixture {
    weights: [Rat; 8],
    plans: [Plan; 8],
    common_denom: i64,
    cumulative: [i64; 8],
}

impl PlanMixture {
    pub fn new(weights: [Rat; 8]) -> Result<Self, StrategyError> {
        if weights.iter().any(|w| *w < Rat::zero()) {
            return Err(StrategyError::BadWeights("negative weight".into()));
        }
        let total: Rat = weights.iter().sum();
        if total != Rat::one() {
            return Err(StrategyError::BadWeights(format!(
                "weights sum to {}, expected 1",
                render_rat(&total)
            )));
        }
        let mut denom: i128 = 1;
        for w in &weights {
            denom = num::integer::lcm(denom, *w.denom() as i128);
            if denom > (1 << 62) {
                return Err(StrategyError::BadWeights(
                    "weight denominators too large for exact sampling".into(),
                ));
            }
        }
        let common_denom = denom as i64;
        let mut cumulative = [0i64; 8];
        let mut acc = 0i64;
        for (i, w) in weights.iter().enumerate() {
            acc += *w.numer() * (common_denom / *w.denom());
            cumulative[i] = acc;
        }
        debug_assert_eq!(acc, common_denom);
        Ok(PlanMixture { weights, plans: enumerate_plans(), common_denom, cumulative })
    }

    pub fn uniform() -> Self {
        Self::new([rat(1, 8); 8]).expect("uniform weights are normalized")
    }

    pub fn weights(&self) -> &[Rat; 8] {
        &self.weights
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> Plan {
        let k = rng.gen_range(0..self.common_denom as u64) as i64;
        for (i, cum) in self.cumulative.iter().enumerate() {
            if k < *cum {
                return self.plans[i];
            }
        }
        self.plans[7]
    }

    fn is_uniform(&self) -> bool {
        self.weights.iter().all(|w| *w == rat(1, 8))
    }
}

// ---------------------------------------------------------------------------
// Conditional tables
// ---------------------------------------------------------------------------

/// Exact white-box description of a strategy: lambda weights plus, for each
/// lambda, the full conditional p(o1,o2 | s1,s2, lambda).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    /// Probability of each lambda value; sums to 1 exactly.
    pub lambda_weights: Vec<Rat>,
    /// `slices[k][s1][s2]` is the outcome-pair cell under lambda index k.
    pub slices: Vec<[[ExactCell; 3]; 3]>,
}

impl ConditionalTable {
    pub fn validate(&self) -> Result<(), StrategyError> {
        if self.lambda_weights.len() != self.slices.len() {
            return Err(StrategyError::NoExactTable(
                "lambda weight and slice counts differ".into(),
            ));
        }
        let total: Rat = self.lambda_weights.iter().sum();
        if total != Rat::one() {
            return Err(StrategyError::NoExactTable(format!(
                "lambda weights sum to {}",
                render_rat(&total)
            )));
        }
        for (k, slice) in self.slices.iter().enumerate() {
            for s1 in SettingLabel::ALL {
                for s2 in SettingLabel::ALL {
                    let sum: Rat =
                        slice[s1.index()][s2.index()].iter().flatten().sum();
                    if sum != Rat::one() {
                        return Err(StrategyError::NoExactTable(format!(
                            "lambda {k} pair ({s1},{s2}) sums to {}",
                            render_rat(&sum)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The lambda-averaged joint: sum over lambda of weight times slice.
    pub fn marginal_joint(&self) -> ExactJoint {
        ExactJoint::from_fn(|s1, s2| {
            let mut cell = [[Rat::zero(); 2]; 2];
            for (w, slice) in self.lambda_weights.iter().zip(&self.slices) {
                let s = &slice[s1.index()][s2.index()];
                for o1 in 0..2 {
                    for o2 in 0..2 {
                        cell[o1][o2] += *w * s[o1][o2];
                    }
                }
            }
            cell
        })
    }

    /// True when every conditional entry is 0 or 1: outcomes are a function
    /// of (lambda, settings).
    pub fn is_deterministic(&self) -> bool {
        self.slices.iter().all(|slice| {
            slice.iter().flatten().flatten().flatten().all(|p| p.is_zero() || p.is_one())
        })
    }

    pub fn lambda_count(&self) -> usize {
        self.lambda_weights.len()
    }
}

fn point_mass_cell(o1: Outcome, o2: Outcome) -> ExactCell {
    let mut cell = [[Rat::zero(); 2]; 2];
    cell[o1.index()][o2.index()] = Rat::one();
    cell
}

fn plan_slice(plan: &Plan) -> [[ExactCell; 3]; 3] {
    let mut slice = [[[[Rat::zero(); 2]; 2]; 3]; 3];
    for s1 in SettingLabel::ALL {
        for s2 in SettingLabel::ALL {
            slice[s1.index()][s2.index()] = point_mass_cell(plan.answer(s1), plan.answer(s2));
        }
    }
    slice
}

fn uniform_slice(cell: ExactCell) -> [[ExactCell; 3]; 3] {
    [[cell; 3]; 3]
}

// ---------------------------------------------------------------------------
// Strategy
// ---------------------------------------------------------------------------

/// One correlation model, parsed from its textual spec.
#[derive(Debug)]
pub enum Strategy {
    FixedPlan(Plan),
    PlanMixture(PlanMixture),
    LocalStochastic(CoinResponder),
    Quantum,
    NonlocalDetToy { grid: u32 },
    SignalingDemo,
}

impl Strategy {
    pub fn kind(&self) -> StrategyKind {
        let (locality, determinism_claim) = match self {
            Strategy::FixedPlan(_) | Strategy::PlanMixture(_) => {
                (Locality::LocalResponder, DeterminismClaim::Deterministic)
            }
            Strategy::LocalStochastic(coin) => {
                let claim = if coin.p_plus.is_zero() || coin.p_plus.is_one() {
                    DeterminismClaim::Deterministic
                } else {
                    DeterminismClaim::Stochastic
                };
                (Locality::LocalResponder, claim)
            }
            Strategy::Quantum => (Locality::NonlocalResponder, DeterminismClaim::Stochastic),
            Strategy::NonlocalDetToy { .. } => {
                (Locality::NonlocalResponder, DeterminismClaim::Deterministic)
            }
            Strategy::SignalingDemo => {
                (Locality::NonlocalResponder, DeterminismClaim::Stochastic)
            }
        };
        StrategyKind { locality, determinism_claim, white_box: true }
    }

    /// Draws the trial's shared state. Consumes only the source stream.
    pub fn sample_hidden(&self, trial: u64, rng: &mut ChaCha12Rng) -> HiddenState {
        let payload = match self {
            Strategy::FixedPlan(plan) => HiddenPayload::Plan(*plan),
            Strategy::PlanMixture(mixture) => HiddenPayload::Plan(mixture.sample(rng)),
            Strategy::NonlocalDetToy { .. } => HiddenPayload::Unit(rng.gen::<f64>()),
            Strategy::LocalStochastic(_) | Strategy::Quantum | Strategy::SignalingDemo => {
                HiddenPayload::Empty
            }
        };
        HiddenState { payload, trace_id: trial }
    }

    /// The single responder interface this strategy exposes.
    pub fn responder(&self) -> Responder<'_> {
        match self {
            Strategy::FixedPlan(_) | Strategy::PlanMixture(_) => {
                Responder::Local(&PLAN_RESPONDER)
            }
            Strategy::LocalStochastic(coin) => Responder::Local(coin),
            Strategy::Quantum => Responder::Nonlocal(&QUANTUM_RESPONDER),
            Strategy::NonlocalDetToy { .. } => Responder::Nonlocal(&TOY_RESPONDER),
            Strategy::SignalingDemo => Responder::Nonlocal(&SIGNALING_RESPONDER),
        }
    }

    /// The exact conditional table over an enumerable lambda support.
    ///
    /// Quantum-style strategies need every pairwise angle difference to admit
    /// an exact cos^2 value; the toy additionally needs its grid to align
    /// with every cell boundary, so the grid table describes the continuous
    /// strategy exactly.
    pub fn conditional_table(
        &self,
        settings: &[Setting; 3],
    ) -> Result<ConditionalTable, StrategyError> {
        let table = match self {
            Strategy::FixedPlan(plan) => ConditionalTable {
                lambda_weights: vec![Rat::one()],
                slices: vec![plan_slice(plan)],
            },
            Strategy::PlanMixture(mixture) => ConditionalTable {
                lambda_weights: mixture.weights.to_vec(),
                slices: mixture.plans.iter().map(plan_slice).collect(),
            },
            Strategy::LocalStochastic(coin) => {
                let p = coin.p_plus;
                let q = Rat::one() - p;
                ConditionalTable {
                    lambda_weights: vec![Rat::one()],
                    slices: vec![uniform_slice([[p * p, p * q], [q * p, q * q]])],
                }
            }
            Strategy::Quantum => {
                let mut slice = [[[[Rat::zero(); 2]; 2]; 3]; 3];
                for s1 in SettingLabel::ALL {
                    for s2 in SettingLabel::ALL {
                        let cell = quantum_joint_exact(
                            settings[s1.index()],
                            settings[s2.index()],
                        )?
                        .ok_or_else(|| {
                            StrategyError::NoExactTable(format!(
                                "angle pair ({s1},{s2}) has no exact cos^2 value"
                            ))
                        })?;
                        slice[s1.index()][s2.index()] = cell;
                    }
                }
                ConditionalTable { lambda_weights: vec![Rat::one()], slices: vec![slice] }
            }
            Strategy::NonlocalDetToy { grid } => toy_table(settings, *grid)?,
            Strategy::SignalingDemo => {
                let (num, den) = SIGNALING_PLUS_GIVEN_A;
                let half = rat(1, 2);
                let mut slice = [[[[Rat::zero(); 2]; 2]; 3]; 3];
                for s1 in SettingLabel::ALL {
                    let p2 = if s1 == SettingLabel::A { rat(num, den) } else { rat(den - num, den) };
                    let q2 = Rat::one() - p2;
                    for s2 in SettingLabel::ALL {
                        slice[s1.index()][s2.index()] =
                            [[half * p2, half * q2], [half * p2, half * q2]];
                    }
                }
                ConditionalTable { lambda_weights: vec![Rat::one()], slices: vec![slice] }
            }
        };
        debug_assert!(table.validate().is_ok());
        Ok(table)
    }
}

fn toy_table(settings: &[Setting; 3], grid: u32) -> Result<ConditionalTable, StrategyError> {
    let g = grid as i64;
    let mut cells = [[[[Rat::zero(); 2]; 2]; 3]; 3];
    for s1 in SettingLabel::ALL {
        for s2 in SettingLabel::ALL {
            let cell = quantum_joint_exact(settings[s1.index()], settings[s2.index()])?
                .ok_or_else(|| {
                    StrategyError::NoExactTable(format!(
                        "angle pair ({s1},{s2}) has no exact cos^2 value"
                    ))
                })?;
            let mut cum = Rat::zero();
            for (o1, o2) in CELL_ORDER {
                cum += cell[o1][o2];
                if !(cum * rat(g, 1)).is_integer() {
                    return Err(StrategyError::NoExactTable(format!(
                        "grid {grid} does not align with cell boundary {} of pair ({s1},{s2})",
                        render_rat(&cum)
                    )));
                }
            }
            cells[s1.index()][s2.index()] = cell;
        }
    }
    let weight = Rat::new(1, g);
    let mut slices = Vec::with_capacity(grid as usize);
    for k in 0..g {
        let u = Rat::new(k, g);
        let mut slice = [[[[Rat::zero(); 2]; 2]; 3]; 3];
        for s1 in SettingLabel::ALL {
            for s2 in SettingLabel::ALL {
                let (o1, o2) = exact_cell_at(&cells[s1.index()][s2.index()], u);
                slice[s1.index()][s2.index()] =
                    point_mass_cell(Outcome::from_index(o1), Outcome::from_index(o2));
            }
        }
        slices.push(slice);
    }
    Ok(ConditionalTable { lambda_weights: vec![weight; grid as usize], slices })
}

impl FromStr for Strategy {
    type Err = StrategyError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        match spec {
            "quantum" => return Ok(Strategy::Quantum),
            "signaling" => return Ok(Strategy::SignalingDemo),
            "nonlocal-det" => return Ok(Strategy::NonlocalDetToy { grid: DEFAULT_TOY_GRID }),
            "mixture:uniform" => return Ok(Strategy::PlanMixture(PlanMixture::uniform())),
            _ => {}
        }
        if let Some(plan) = spec.strip_prefix("plan:") {
            let plan: Plan = plan
                .parse()
                .map_err(|e| StrategyError::BadParameter(format!("{e}")))?;
            return Ok(Strategy::FixedPlan(plan));
        }
        if let Some(weights) = spec.strip_prefix("mixture:") {
            let parts: Vec<&str> = weights.split(',').collect();
            if parts.len() != 8 {
                return Err(StrategyError::BadWeights(format!(
                    "expected 8 weights, found {}",
                    parts.len()
                )));
            }
            let mut ws = [Rat::zero(); 8];
            for (i, part) in parts.iter().enumerate() {
                ws[i] = parse_rat(part).map_err(StrategyError::BadWeights)?;
            }
            return Ok(Strategy::PlanMixture(PlanMixture::new(ws)?));
        }
        if let Some(p) = spec.strip_prefix("local-stochastic:") {
            let p = parse_rat(p).map_err(StrategyError::BadParameter)?;
            return Ok(Strategy::LocalStochastic(CoinResponder::new(p)?));
        }
        if let Some(grid) = spec.strip_prefix("nonlocal-det:") {
            let grid: u32 = grid
                .parse()
                .map_err(|_| StrategyError::BadParameter(format!("invalid grid size {grid:?}")))?;
            if grid == 0 || grid > MAX_TOY_GRID {
                return Err(StrategyError::BadParameter(format!(
                    "grid size must be in 1..={MAX_TOY_GRID}"
                )));
            }
            return Ok(Strategy::NonlocalDetToy { grid });
        }
        Err(StrategyError::UnknownSpec { spec: spec.to_string() })
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::FixedPlan(plan) => write!(f, "plan:{plan}"),
            Strategy::PlanMixture(m) if m.is_uniform() => write!(f, "mixture:uniform"),
            Strategy::PlanMixture(m) => {
                let parts: Vec<String> = m.weights.iter().map(render_rat).collect();
                write!(f, "mixture:{}", parts.join(","))
            }
            Strategy::LocalStochastic(coin) => {
                write!(f, "local-stochastic:{}", render_rat(&coin.p_plus))
            }
            Strategy::Quantum => write!(f, "quantum"),
            Strategy::NonlocalDetToy { grid } if *grid == DEFAULT_TOY_GRID => {
                write!(f, "nonlocal-det")
            }
            Strategy::NonlocalDetToy { grid } => write!(f, "nonlocal-det:{grid}"),
            Strategy::SignalingDemo => write!(f, "signaling"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::DEFAULT_ANGLES_DEG;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    fn settings() -> [Setting; 3] {
        Setting::triple(DEFAULT_ANGLES_DEG)
    }

    fn empty_hidden() -> HiddenState {
        HiddenState { payload: HiddenPayload::Empty, trace_id: 0 }
    }

    #[test]
    fn spec_roundtrip() {
        for spec in [
            "plan:+-+",
            "mixture:uniform",
            "local-stochastic:1/2",
            "quantum",
            "nonlocal-det",
            "nonlocal-det:256",
            "signaling",
        ] {
            let s: Strategy = spec.parse().unwrap();
            assert_eq!(s.to_string(), spec);
        }
    }

    #[test]
    fn unknown_spec_error_names_valid_specs() {
        let err = "bogus".parse::<Strategy>().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("quantum"), "{msg}");
        assert!(msg.contains("mixture:uniform"), "{msg}");
    }

    #[test]
    fn mixture_weights_must_normalize() {
        assert!("mixture:1,0,0,0,0,0,0,0".parse::<Strategy>().is_ok());
        assert!("mixture:1,1,0,0,0,0,0,0".parse::<Strategy>().is_err());
        assert!("mixture:1,0,0,0".parse::<Strategy>().is_err());
        assert!("mixture:1/2,1/2,0,0,0,0,0,-0/1".parse::<Strategy>().is_ok());
        assert!("mixture:3/2,-1/2,0,0,0,0,0,0".parse::<Strategy>().is_err());
    }

    #[test]
    fn local_stochastic_probability_bounds() {
        assert!("local-stochastic:0.5".parse::<Strategy>().is_ok());
        assert!("local-stochastic:1".parse::<Strategy>().is_ok());
        assert!("local-stochastic:7/5".parse::<Strategy>().is_err());
    }

    #[test]
    fn fixed_plan_source_is_point_distribution() {
        let strategy: Strategy = "plan:+-+".parse().unwrap();
        let mut r = rng(1);
        let plan: Plan = "+-+".parse().unwrap();
        for trial in 0..50 {
            let h = strategy.sample_hidden(trial, &mut r);
            assert_eq!(h.payload, HiddenPayload::Plan(plan));
            assert_eq!(h.trace_id, trial);
        }
    }

    #[test]
    fn quantum_source_is_empty() {
        let strategy = Strategy::Quantum;
        let h = strategy.sample_hidden(3, &mut rng(1));
        assert_eq!(h.payload, HiddenPayload::Empty);
    }

    #[test]
    fn uniform_mixture_source_covers_plans_uniformly() {
        // Chi-square over the 8 plan bins; P(chi2_7 > 40) ~ 1.3e-6.
        let strategy: Strategy = "mixture:uniform".parse().unwrap();
        let mut r = rng(42);
        let mut counts = [0u64; 8];
        let plans = enumerate_plans();
        let n = 100_000;
        for trial in 0..n {
            match strategy.sample_hidden(trial, &mut r).payload {
                HiddenPayload::Plan(p) => {
                    let idx = plans.iter().position(|q| *q == p).unwrap();
                    counts[idx] += 1;
                }
                other => panic!("unexpected payload {other:?}"),
            }
        }
        let expected = n as f64 / 8.0;
        let chi2: f64 =
            counts.iter().map(|c| (*c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 40.0, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn plan_responder_is_a_table_lookup() {
        let hidden = HiddenState {
            payload: HiddenPayload::Plan("+--".parse().unwrap()),
            trace_id: 0,
        };
        let mut r = rng(1);
        let out = PLAN_RESPONDER.respond_local(&hidden, settings()[1], &mut r);
        assert_eq!(out, Outcome::Minus);
        // Determinism: identical inputs, identical outcome.
        let again = PLAN_RESPONDER.respond_local(&hidden, settings()[1], &mut r);
        assert_eq!(out, again);
    }

    #[test]
    fn coin_responder_rate_matches_probability() {
        let coin = CoinResponder::new(rat(1, 2)).unwrap();
        let mut r = rng(7);
        let n = 100_000;
        let hidden = empty_hidden();
        let plus = (0..n)
            .filter(|_| coin.respond_local(&hidden, settings()[0], &mut r) == Outcome::Plus)
            .count();
        let rate = plus as f64 / n as f64;
        // 3 sigma for p=1/2 at n=1e5 is ~0.0047.
        assert!((rate - 0.5).abs() < 0.005, "rate = {rate}");
    }

    #[test]
    fn quantum_same_setting_always_agrees() {
        let mut r = rng(11);
        let s = settings();
        let hidden = empty_hidden();
        for _ in 0..10_000 {
            let (o1, o2) = QUANTUM_RESPONDER.respond_joint(&hidden, s[0], s[0], &mut r);
            assert_eq!(o1, o2);
        }
    }

    #[test]
    fn quantum_different_setting_match_rate_near_quarter() {
        let mut r = rng(13);
        let s = settings();
        let hidden = empty_hidden();
        let n = 100_000;
        let matches = (0..n)
            .filter(|_| {
                let (o1, o2) = QUANTUM_RESPONDER.respond_joint(&hidden, s[0], s[1], &mut r);
                o1 == o2
            })
            .count();
        let rate = matches as f64 / n as f64;
        // 3 sigma for p=1/4 at n=1e5 is ~0.0041.
        assert!((rate - 0.25).abs() < 0.0045, "rate = {rate}");
    }

    #[test]
    fn quantum_joint_default_angles_is_exact() {
        let s = settings();
        let same = quantum_joint(s[0], s[0]).unwrap();
        assert_eq!(same, [[0.5, 0.0], [0.0, 0.5]]);
        let diff = quantum_joint(s[0], s[1]).unwrap();
        assert_eq!(diff, [[0.125, 0.375], [0.375, 0.125]]);
        let wrap = quantum_joint(s[1], s[2]).unwrap();
        assert_eq!(wrap, [[0.125, 0.375], [0.375, 0.125]]);
    }

    #[test]
    fn quantum_joint_arbitrary_angles_normalizes() {
        let a = Setting::with_angle(SettingLabel::A, 13.0);
        let b = Setting::with_angle(SettingLabel::B, 77.7);
        let cell = quantum_joint(a, b).unwrap();
        let sum: f64 = cell.iter().flatten().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(quantum_joint_exact(a, b).unwrap().is_none());
    }

    #[test]
    fn quantum_joint_requires_angles() {
        let bare = Setting::new(SettingLabel::A);
        assert!(matches!(
            quantum_joint(bare, settings()[1]),
            Err(StrategyError::MissingAngle(SettingLabel::A))
        ));
    }

    #[test]
    fn toy_responder_is_deterministic_in_hidden_and_settings() {
        let s = settings();
        let hidden = HiddenState { payload: HiddenPayload::Unit(0.3), trace_id: 0 };
        let mut r1 = rng(1);
        let mut r2 = rng(999);
        let a = TOY_RESPONDER.respond_joint(&hidden, s[0], s[1], &mut r1);
        let b = TOY_RESPONDER.respond_joint(&hidden, s[0], s[1], &mut r2);
        assert_eq!(a, b);
        // u = 0.3 lands in the (+,-) cell of the (A,B) table: [1/8, 1/2).
        assert_eq!(a, (Outcome::Plus, Outcome::Minus));
        // Same-setting table puts u = 0.3 in (+,+): [0, 1/2).
        let c = TOY_RESPONDER.respond_joint(&hidden, s[0], s[0], &mut r1);
        assert_eq!(c, (Outcome::Plus, Outcome::Plus));
    }

    #[test]
    fn signaling_wing2_marginal_depends_on_remote_setting() {
        let s = settings();
        let hidden = empty_hidden();
        let mut r = rng(5);
        let n = 10_000;
        let mut plus_when_a = 0u64;
        let mut plus_when_b = 0u64;
        for _ in 0..n {
            let (_, o2) = SIGNALING_RESPONDER.respond_joint(&hidden, s[0], s[2], &mut r);
            plus_when_a += (o2 == Outcome::Plus) as u64;
            let (_, o2) = SIGNALING_RESPONDER.respond_joint(&hidden, s[1], s[2], &mut r);
            plus_when_b += (o2 == Outcome::Plus) as u64;
        }
        let pa = plus_when_a as f64 / n as f64;
        let pb = plus_when_b as f64 / n as f64;
        assert!((pa - 0.9).abs() < 0.02, "p(+|remote=A) = {pa}");
        assert!((pb - 0.1).abs() < 0.02, "p(+|remote=B) = {pb}");
    }

    #[test]
    fn kind_matches_responder_shape() {
        for spec in [
            "plan:+++",
            "mixture:uniform",
            "local-stochastic:0.5",
            "quantum",
            "nonlocal-det",
            "signaling",
        ] {
            let strategy: Strategy = spec.parse().unwrap();
            let kind = strategy.kind();
            match strategy.responder() {
                Responder::Local(_) => assert_eq!(kind.locality, Locality::LocalResponder),
                Responder::Nonlocal(_) => {
                    assert_eq!(kind.locality, Locality::NonlocalResponder)
                }
            }
        }
    }

    #[test]
    fn fixed_plan_table_is_single_point_mass() {
        let strategy: Strategy = "plan:+-+".parse().unwrap();
        let table = strategy.conditional_table(&settings()).unwrap();
        table.validate().unwrap();
        assert_eq!(table.lambda_count(), 1);
        assert_eq!(table.lambda_weights[0], Rat::one());
        assert!(table.is_deterministic());
    }

    #[test]
    fn mixture_table_has_eight_deterministic_slices() {
        let strategy: Strategy = "mixture:uniform".parse().unwrap();
        let table = strategy.conditional_table(&settings()).unwrap();
        table.validate().unwrap();
        assert_eq!(table.lambda_count(), 8);
        assert!(table.is_deterministic());
        assert!(table.lambda_weights.iter().all(|w| *w == rat(1, 8)));
    }

    #[test]
    fn quantum_table_is_lambda_free_and_matches_joint() {
        let strategy = Strategy::Quantum;
        let s = settings();
        let table = strategy.conditional_table(&s).unwrap();
        table.validate().unwrap();
        assert_eq!(table.lambda_count(), 1);
        assert!(!table.is_deterministic());
        let expected = quantum_joint_exact(s[0], s[1]).unwrap().unwrap();
        assert_eq!(table.slices[0][0][1], expected);
    }

    #[test]
    fn quantum_table_rejects_inexact_angles() {
        let strategy = Strategy::Quantum;
        let s = Setting::triple([0.0, 45.0, 90.0]);
        assert!(matches!(
            strategy.conditional_table(&s),
            Err(StrategyError::NoExactTable(_))
        ));
    }

    #[test]
    fn toy_table_marginalizes_to_quantum_joint() {
        let strategy: Strategy = "nonlocal-det".parse().unwrap();
        let s = settings();
        let table = strategy.conditional_table(&s).unwrap();
        table.validate().unwrap();
        assert_eq!(table.lambda_count(), 1024);
        assert!(table.is_deterministic());
        let marginal = table.marginal_joint();
        for s1 in SettingLabel::ALL {
            for s2 in SettingLabel::ALL {
                let expected =
                    quantum_joint_exact(s[s1.index()], s[s2.index()]).unwrap().unwrap();
                assert_eq!(*marginal.cell(s1, s2), expected, "pair ({s1},{s2})");
            }
        }
    }

    #[test]
    fn toy_table_rejects_misaligned_grid() {
        let strategy: Strategy = "nonlocal-det:10".parse().unwrap();
        // 1/8 boundaries cannot sit on a 10-point grid.
        assert!(matches!(
            strategy.conditional_table(&settings()),
            Err(StrategyError::NoExactTable(_))
        ));
    }

    #[test]
    fn signaling_table_marginals_are_remote_dependent() {
        let strategy = Strategy::SignalingDemo;
        let table = strategy.conditional_table(&settings()).unwrap();
        table.validate().unwrap();
        let slice = &table.slices[0];
        // Wing-2 Plus marginal under (s1=A, s2=B) vs (s1=B, s2=B).
        let p_when_a: Rat = slice[0][1][0][0] + slice[0][1][1][0];
        let p_when_b: Rat = slice[1][1][0][0] + slice[1][1][1][0];
        assert_eq!(p_when_a, rat(9, 10));
        assert_eq!(p_when_b, rat(1, 10));
    }
}
