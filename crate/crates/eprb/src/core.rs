//! Shared domain types for EPRB-style trial simulation: measurement settings,
//! binary outcomes, deterministic plans, per-trial hidden state, trial logs,
//! and the exact / floating-point probability containers used by the
//! estimators and oracles.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use num::rational::Ratio;
use num::{One, Zero};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Exact probability scalar. All exact tables in this crate have small
/// denominators (plan mixtures, the default angle set, the toy strategy's
/// discretization grid), so 64-bit rationals suffice.
pub type Rat = Ratio<i64>;

/// 2x2 outcome-pair cell of exact probabilities, indexed `[o1][o2]`.
pub type ExactCell = [[Rat; 2]; 2];

/// 2x2 outcome-pair cell of floating-point probabilities, indexed `[o1][o2]`.
pub type FloatCell = [[f64; 2]; 2];

/// Rational helper: `p/q` as a [`Rat`].
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(p, q)
}

/// Renders a rational as `p/q`, or just `p` when the denominator is 1.
pub fn render_rat(r: &Rat) -> String {
    if r.denom() == &1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses an exact rational from `p/q`, integer, or decimal text
/// (`1/8`, `3`, `0.125`).
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty rational".into());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| format!("invalid numerator {num:?}"))?;
        let den: i64 = den.trim().parse().map_err(|_| format!("invalid denominator {den:?}"))?;
        if den <= 0 {
            return Err(format!("denominator must be positive, got {den}"));
        }
        return Ok(Rat::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let (sign, int_digits) = match int_part.strip_prefix('-') {
            Some(rest) => (-1i64, rest),
            None => (1i64, int_part),
        };
        if !int_digits.chars().all(|c| c.is_ascii_digit())
            || frac_part.is_empty()
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(format!("invalid decimal {s:?}"));
        }
        if frac_part.len() > 18 {
            return Err(format!("decimal {s:?} has too many digits for exact conversion"));
        }
        let int_value: i64 = if int_digits.is_empty() {
            0
        } else {
            int_digits.parse().map_err(|_| format!("invalid decimal {s:?}"))?
        };
        let frac_value: i64 =
            frac_part.parse().map_err(|_| format!("invalid decimal {s:?}"))?;
        let den = 10i64.pow(frac_part.len() as u32);
        let num = int_value
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac_value))
            .ok_or_else(|| format!("decimal {s:?} overflows exact conversion"))?;
        return Ok(Rat::new(sign * num, den));
    }
    s.parse::<i64>()
        .map(Rat::from_integer)
        .map_err(|_| format!("invalid rational {s:?}"))
}

/// Default polarizer angles for settings A, B, C in degrees. The pairwise
/// differences of 60 and 120 degrees give a different-axis match probability
/// of cos^2 = 1/4 with a symmetric configuration.
pub const DEFAULT_ANGLES_DEG: [f64; 3] = [0.0, 60.0, 120.0];

/// Tolerance for floating-point normalization checks.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("trial log is empty")]
    EmptyLog,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid plan {spec:?}: expected three characters from '+'/'-'")]
    InvalidPlan { spec: String },
    #[error("probability table not normalized: {0}")]
    NotNormalized(String),
}

// ---------------------------------------------------------------------------
// Settings and outcomes
// ---------------------------------------------------------------------------

/// The three measurement choices available to each wing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SettingLabel {
    A,
    B,
    C,
}

impl SettingLabel {
    pub const ALL: [SettingLabel; 3] = [SettingLabel::A, SettingLabel::B, SettingLabel::C];

    pub fn index(self) -> usize {
        match self {
            SettingLabel::A => 0,
            SettingLabel::B => 1,
            SettingLabel::C => 2,
        }
    }

    pub fn from_index(i: usize) -> SettingLabel {
        Self::ALL[i]
    }
}

impl fmt::Display for SettingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SettingLabel::A => "A",
            SettingLabel::B => "B",
            SettingLabel::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for SettingLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" => Ok(SettingLabel::A),
            "B" => Ok(SettingLabel::B),
            "C" => Ok(SettingLabel::C),
            _ => Err(format!("invalid setting {s:?}: expected A, B, or C")),
        }
    }
}

/// A measurement setting: its label plus, when configured, the polarizer
/// angle used by quantum-style strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setting {
    pub label: SettingLabel,
    pub angle_deg: Option<f64>,
}

impl Setting {
    pub fn new(label: SettingLabel) -> Self {
        Setting { label, angle_deg: None }
    }

    pub fn with_angle(label: SettingLabel, angle_deg: f64) -> Self {
        Setting { label, angle_deg: Some(angle_deg) }
    }

    /// The three settings with the given angles attached in A, B, C order.
    pub fn triple(angles_deg: [f64; 3]) -> [Setting; 3] {
        [
            Setting::with_angle(SettingLabel::A, angles_deg[0]),
            Setting::with_angle(SettingLabel::B, angles_deg[1]),
            Setting::with_angle(SettingLabel::C, angles_deg[2]),
        ]
    }
}

/// Checks that the three angles are pairwise distinct modulo 180 degrees
/// (polarizer orientations repeat every half turn).
pub fn validate_angles(angles_deg: &[f64; 3]) -> Result<(), CoreError> {
    for i in 0..3 {
        for j in (i + 1)..3 {
            let d = (angles_deg[i] - angles_deg[j]).rem_euclid(180.0);
            if d.abs() < 1e-9 || (180.0 - d).abs() < 1e-9 {
                return Err(CoreError::InvalidConfig(format!(
                    "angles {} and {} coincide modulo 180 degrees",
                    angles_deg[i], angles_deg[j]
                )));
            }
        }
    }
    Ok(())
}

/// Binary measurement result: the particle passes through the filter (`+`)
/// or reflects off it (`-`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn from_index(i: usize) -> Outcome {
        Self::BOTH[i]
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+",
            Outcome::Minus => "-",
        })
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+" => Ok(Outcome::Plus),
            "-" => Ok(Outcome::Minus),
            _ => Err(format!("invalid outcome {s:?}: expected '+' or '-'")),
        }
    }
}

// ---------------------------------------------------------------------------
// Plans
// ---------------------------------------------------------------------------

/// A total assignment of one outcome to each of the three settings: the
/// deterministic response table a particle pair can agree on in advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Plan {
    answers: [Outcome; 3],
}

impl Plan {
    pub fn new(a: Outcome, b: Outcome, c: Outcome) -> Self {
        Plan { answers: [a, b, c] }
    }

    pub fn answer(&self, setting: SettingLabel) -> Outcome {
        self.answers[setting.index()]
    }

    /// Number of settings assigned `Plus`.
    pub fn plus_count(&self) -> usize {
        self.answers.iter().filter(|o| **o == Outcome::Plus).count()
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.answers {
            write!(f, "{o}")?;
        }
        Ok(())
    }
}

impl FromStr for Plan {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != 3 || chars.iter().any(|c| *c != '+' && *c != '-') {
            return Err(CoreError::InvalidPlan { spec: s.to_string() });
        }
        let o = |c: char| if c == '+' { Outcome::Plus } else { Outcome::Minus };
        Ok(Plan::new(o(chars[0]), o(chars[1]), o(chars[2])))
    }
}

/// The four general shapes a plan can take, by outcome counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PlanType {
    AllPlus,
    TwoPlusOneMinus,
    TwoMinusOnePlus,
    AllMinus,
}

/// Classifies a plan into the unique [`PlanType`] matching its outcome counts.
pub fn classify_plan(plan: &Plan) -> PlanType {
    match plan.plus_count() {
        3 => PlanType::AllPlus,
        2 => PlanType::TwoPlusOneMinus,
        1 => PlanType::TwoMinusOnePlus,
        0 => PlanType::AllMinus,
        _ => unreachable!("a plan has exactly three answers"),
    }
}

// ---------------------------------------------------------------------------
// Hidden state and trials
// ---------------------------------------------------------------------------

/// Strategy-defined shared state, produced once per trial before either
/// wing's setting is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum HiddenPayload {
    /// The strategy carries no per-trial state.
    Empty,
    /// A pre-agreed deterministic response table.
    Plan(Plan),
    /// A uniform draw from [0, 1).
    Unit(f64),
}

impl HiddenPayload {
    /// Text rendering used for the optional CSV lambda column.
    pub fn render(&self) -> String {
        match self {
            HiddenPayload::Empty => String::new(),
            HiddenPayload::Plan(p) => p.to_string(),
            HiddenPayload::Unit(u) => format!("{u:?}"),
        }
    }

    pub fn parse(s: &str) -> Result<HiddenPayload, String> {
        if s.is_empty() {
            return Ok(HiddenPayload::Empty);
        }
        if let Ok(plan) = s.parse::<Plan>() {
            return Ok(HiddenPayload::Plan(plan));
        }
        s.parse::<f64>()
            .map(HiddenPayload::Unit)
            .map_err(|_| format!("invalid lambda payload {s:?}"))
    }
}

/// The shared state emitted by a strategy's source for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub payload: HiddenPayload,
    /// Index of the trial this state was produced for.
    pub trace_id: u64,
}

/// One completed trial: both settings, both outcomes, and (when tracing is
/// enabled) the hidden state that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: u64,
    pub setting1: SettingLabel,
    pub setting2: SettingLabel,
    pub outcome1: Outcome,
    pub outcome2: Outcome,
    pub hidden: Option<HiddenState>,
}

/// The record of a full experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub trials: Vec<Trial>,
    pub config_digest: String,
    pub seed: u64,
}

const CSV_HEADER: &str = "trial,setting1,setting2,outcome1,outcome2";
const CSV_HEADER_LAMBDA: &str = "trial,setting1,setting2,outcome1,outcome2,lambda";

impl TrialLog {
    pub fn new(trials: Vec<Trial>, config_digest: String, seed: u64) -> Self {
        TrialLog { trials, config_digest, seed }
    }

    fn has_lambda(&self) -> bool {
        self.trials.first().map_or(false, |t| t.hidden.is_some())
    }

    /// Writes the log as CSV. The lambda column is present exactly when
    /// tracing was enabled for the run.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let lambda = self.has_lambda();
        writeln!(w, "{}", if lambda { CSV_HEADER_LAMBDA } else { CSV_HEADER })?;
        for t in &self.trials {
            write!(w, "{},{},{},{},{}", t.index, t.setting1, t.setting2, t.outcome1, t.outcome2)?;
            if lambda {
                let payload = t.hidden.as_ref().map(|h| h.payload.render()).unwrap_or_default();
                write!(w, ",{payload}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Parses trials from CSV, reporting the 1-based line number on any
    /// malformed row.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<Trial>, CoreError> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(CoreError::Csv { line: 1, msg: "missing header".into() })?;
        let header = header.map_err(|e| CoreError::Csv { line: 1, msg: e.to_string() })?;
        let lambda = match header.trim_end() {
            CSV_HEADER => false,
            CSV_HEADER_LAMBDA => true,
            other => {
                return Err(CoreError::Csv {
                    line: 1,
                    msg: format!("unexpected header {other:?}"),
                })
            }
        };
        let fields = if lambda { 6 } else { 5 };

        let mut trials = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line.map_err(|e| CoreError::Csv { line: line_no, msg: e.to_string() })?;
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != fields {
                return Err(CoreError::Csv {
                    line: line_no,
                    msg: format!("expected {fields} fields, found {}", cols.len()),
                });
            }
            let err = |msg: String| CoreError::Csv { line: line_no, msg };
            let index: u64 = cols[0].parse().map_err(|_| err(format!("invalid trial index {:?}", cols[0])))?;
            let setting1: SettingLabel = cols[1].parse().map_err(err)?;
            let setting2: SettingLabel = cols[2].parse().map_err(err)?;
            let outcome1: Outcome = cols[3].parse().map_err(err)?;
            let outcome2: Outcome = cols[4].parse().map_err(err)?;
            let hidden = if lambda {
                let payload = HiddenPayload::parse(cols[5]).map_err(err)?;
                Some(HiddenState { payload, trace_id: index })
            } else {
                None
            };
            trials.push(Trial { index, setting1, setting2, outcome1, outcome2, hidden });
        }
        Ok(trials)
    }
}

// ---------------------------------------------------------------------------
// Probability containers
// ---------------------------------------------------------------------------

/// One setting pair's estimated outcome distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCell {
    /// `p[o1][o2]`, conditional on this setting pair.
    pub p: FloatCell,
    /// Raw counts when the cell came from trial data.
    pub counts: Option<[[u64; 2]; 2]>,
    /// Trials observed for this setting pair.
    pub n: u64,
}

impl PairCell {
    pub fn from_counts(counts: [[u64; 2]; 2]) -> PairCell {
        let n: u64 = counts.iter().flatten().sum();
        let mut p = [[0.0; 2]; 2];
        for o1 in 0..2 {
            for o2 in 0..2 {
                p[o1][o2] = counts[o1][o2] as f64 / n as f64;
            }
        }
        PairCell { p, counts: Some(counts), n }
    }

    pub fn analytic(p: FloatCell) -> PairCell {
        PairCell { p, counts: None, n: 0 }
    }
}

/// Conditional probability table p(o1, o2 | s1, s2) over the nine ordered
/// setting pairs, in 64-bit floats. Pairs never observed are absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JointDistribution {
    cells: [[Option<PairCell>; 3]; 3],
}

impl JointDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pair(&self, s1: SettingLabel, s2: SettingLabel) -> Option<&PairCell> {
        self.cells[s1.index()][s2.index()].as_ref()
    }

    pub fn set_pair(&mut self, s1: SettingLabel, s2: SettingLabel, cell: PairCell) {
        self.cells[s1.index()][s2.index()] = Some(cell);
    }

    /// Iterates over present setting pairs in (A,A), (A,B), ... row order.
    pub fn pairs(&self) -> impl Iterator<Item = (SettingLabel, SettingLabel, &PairCell)> {
        SettingLabel::ALL.iter().flat_map(move |s1| {
            SettingLabel::ALL
                .iter()
                .filter_map(move |s2| self.pair(*s1, *s2).map(|c| (*s1, *s2, c)))
        })
    }

    /// Checks that every present pair sums to 1 within [`NORMALIZATION_TOL`]
    /// and every entry lies in [0, 1].
    pub fn validate(&self) -> Result<(), CoreError> {
        for (s1, s2, cell) in self.pairs() {
            let mut sum = 0.0;
            for row in &cell.p {
                for &p in row {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(CoreError::NotNormalized(format!(
                            "pair ({s1},{s2}) entry {p} outside [0,1]"
                        )));
                    }
                    sum += p;
                }
            }
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(CoreError::NotNormalized(format!(
                    "pair ({s1},{s2}) sums to {sum}"
                )));
            }
        }
        Ok(())
    }

    /// JSON form: object keyed `"s1,s2"` mapping to the 2x2 probability
    /// array in row order (++, +-, -+, --). Unobserved pairs map to null.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for s1 in SettingLabel::ALL {
            for s2 in SettingLabel::ALL {
                let key = format!("{s1},{s2}");
                let value = match self.pair(s1, s2) {
                    Some(cell) => serde_json::json!(cell.p),
                    None => serde_json::Value::Null,
                };
                map.insert(key, value);
            }
        }
        serde_json::Value::Object(map)
    }
}

/// Exact-rational joint table over all nine ordered setting pairs: the
/// oracle-path counterpart of [`JointDistribution`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactJoint {
    cells: [[ExactCell; 3]; 3],
}

impl ExactJoint {
    pub fn from_fn(mut f: impl FnMut(SettingLabel, SettingLabel) -> ExactCell) -> Self {
        let mut cells = [[[[Rat::zero(); 2]; 2]; 3]; 3];
        for s1 in SettingLabel::ALL {
            for s2 in SettingLabel::ALL {
                cells[s1.index()][s2.index()] = f(s1, s2);
            }
        }
        ExactJoint { cells }
    }

    pub fn cell(&self, s1: SettingLabel, s2: SettingLabel) -> &ExactCell {
        &self.cells[s1.index()][s2.index()]
    }

    /// Checks exact normalization of every setting-pair slice.
    pub fn validate(&self) -> Result<(), CoreError> {
        for s1 in SettingLabel::ALL {
            for s2 in SettingLabel::ALL {
                let sum: Rat = self.cell(s1, s2).iter().flatten().sum();
                if sum != Rat::one() {
                    return Err(CoreError::NotNormalized(format!(
                        "pair ({s1},{s2}) sums to {sum}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Explicit conversion to the floating-point form.
    pub fn to_float(&self) -> JointDistribution {
        let mut joint = JointDistribution::new();
        for s1 in SettingLabel::ALL {
            for s2 in SettingLabel::ALL {
                let e = self.cell(s1, s2);
                let mut p = [[0.0; 2]; 2];
                for o1 in 0..2 {
                    for o2 in 0..2 {
                        p[o1][o2] = rat_to_f64(&e[o1][o2]);
                    }
                }
                joint.set_pair(s1, s2, PairCell::analytic(p));
            }
        }
        joint
    }
}

/// Rational-to-float conversion used at every exact/float boundary.
pub fn rat_to_f64(r: &Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Uniform per-wing setting distribution.
pub const UNIFORM_SETTINGS: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

/// Full description of an experiment run. Equal configs (and equal seeds)
/// reproduce identical trial logs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    /// Textual strategy spec, e.g. `quantum`, `plan:+-+`, `mixture:uniform`.
    pub strategy_spec: String,
    pub n_trials: u64,
    pub seed: u64,
    /// Per-wing probability vector over settings A, B, C.
    pub setting_distribution: [[f64; 3]; 2],
    /// Polarizer angles for A, B, C; `None` means the defaults.
    pub angles_deg: Option<[f64; 3]>,
    /// Record hidden-state payloads in the trial log.
    pub lambda_trace: bool,
    /// Decision threshold, in standard errors, for verdicts.
    pub significance_z: f64,
}

impl ExperimentConfig {
    pub fn new(strategy_spec: &str, n_trials: u64, seed: u64) -> Self {
        ExperimentConfig {
            strategy_spec: strategy_spec.to_string(),
            n_trials,
            seed,
            setting_distribution: [UNIFORM_SETTINGS, UNIFORM_SETTINGS],
            angles_deg: None,
            lambda_trace: false,
            significance_z: 5.0,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.n_trials == 0 {
            return Err(CoreError::InvalidConfig("n_trials must be positive".into()));
        }
        for (wing, dist) in self.setting_distribution.iter().enumerate() {
            if dist.iter().any(|w| *w < 0.0 || !w.is_finite()) {
                return Err(CoreError::InvalidConfig(format!(
                    "wing {} setting distribution has a negative or non-finite weight",
                    wing + 1
                )));
            }
            let sum: f64 = dist.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(CoreError::InvalidConfig(format!(
                    "wing {} setting distribution sums to {sum}, expected 1",
                    wing + 1
                )));
            }
        }
        if let Some(angles) = &self.angles_deg {
            validate_angles(angles)?;
        }
        if !(self.significance_z > 0.0) {
            return Err(CoreError::InvalidConfig("significance_z must be positive".into()));
        }
        Ok(())
    }

    /// The three settings with angles resolved (configured or default).
    pub fn resolved_settings(&self) -> [Setting; 3] {
        Setting::triple(self.angles_deg.unwrap_or(DEFAULT_ANGLES_DEG))
    }

    /// Short content hash identifying this configuration in logs and reports.
    pub fn digest(&self) -> String {
        let angles = match &self.angles_deg {
            Some(a) => format!("{:?},{:?},{:?}", a[0], a[1], a[2]),
            None => "default".to_string(),
        };
        let canonical = format!(
            "strategy={}\nn={}\nseed={}\ndist1={:?}:{:?}:{:?}\ndist2={:?}:{:?}:{:?}\nangles={}\ntrace={}\nz={:?}\n",
            self.strategy_spec,
            self.n_trials,
            self.seed,
            self.setting_distribution[0][0],
            self.setting_distribution[0][1],
            self.setting_distribution[0][2],
            self.setting_distribution[1][0],
            self.setting_distribution[1][1],
            self.setting_distribution[1][2],
            angles,
            self.lambda_trace,
            self.significance_z,
        );
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
