//! Seeded trial execution. Each trial derives its own independent randomness
//! streams from the master seed, the shared state is always drawn before the
//! settings, and the assembled log is byte-identical for a given
//! (config, seed) regardless of worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::core::{CoreError, ExperimentConfig, SettingLabel, Trial, TrialLog};
use crate::strategies::{Responder, Strategy, StrategyError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] CoreError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("config line {line}: {msg}")]
    ConfigFile { line: usize, msg: String },
    #[error("missing required config value {0:?}")]
    MissingValue(&'static str),
    #[error("trial log is empty")]
    EmptyLog,
}

// ---------------------------------------------------------------------------
// Randomness streams
// ---------------------------------------------------------------------------

/// Who owns a randomness stream: the shared source (and joint responder) or
/// one of the two wings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamWing {
    Shared = 0,
    Wing1 = 1,
    Wing2 = 2,
}

/// What a stream is consumed for within a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Source = 0,
    Setting = 1,
    Response = 2,
}

/// Counter-mode stream derivation: one ChaCha stream per
/// (trial, wing, role) tuple, all keyed by the master seed. Equal tuples
/// give equal streams; distinct tuples give independent streams. No state
/// is shared between trials, so evaluation order cannot matter.
#[derive(Debug, Clone, Copy)]
pub struct RngStreams {
    master_seed: u64,
}

impl RngStreams {
    pub fn new(master_seed: u64) -> Self {
        RngStreams { master_seed }
    }

    /// The stream for one (trial, wing, role) tuple. The tuple is packed
    /// into the 64-bit ChaCha stream id (trial in the upper bits), which
    /// supports up to 2^60 trials.
    pub fn stream(&self, trial: u64, wing: StreamWing, role: StreamRole) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream((trial << 4) | ((wing as u64) << 2) | role as u64);
        rng
    }
}

fn sample_setting(dist: &[f64; 3], rng: &mut ChaCha12Rng) -> SettingLabel {
    let u: f64 = rng.gen();
    if u < dist[0] {
        SettingLabel::A
    } else if u < dist[0] + dist[1] {
        SettingLabel::B
    } else {
        SettingLabel::C
    }
}

// ---------------------------------------------------------------------------
// Experiment execution
// ---------------------------------------------------------------------------

/// Runs the configured number of trials and assembles the log in trial
/// order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<TrialLog, HarnessError> {
    let strategy: Strategy = config.strategy_spec.parse()?;
    run_with_strategy(config, &strategy)
}

/// [`run_experiment`] with an already-parsed strategy.
///
/// Per trial: the shared state is drawn first and sees only the source
/// stream; each wing's setting comes from that wing's setting stream; local
/// responders then answer one wing at a time from wing-local streams, while
/// nonlocal responders answer once from the shared response stream.
pub fn run_with_strategy(
    config: &ExperimentConfig,
    strategy: &Strategy,
) -> Result<TrialLog, HarnessError> {
    config.validate()?;
    let settings = config.resolved_settings();
    let streams = RngStreams::new(config.seed);
    let dist = &config.setting_distribution;
    let trace = config.lambda_trace;

    let trials: Vec<Trial> = (0..config.n_trials)
        .into_par_iter()
        .map(|i| {
            let mut source_rng = streams.stream(i, StreamWing::Shared, StreamRole::Source);
            let hidden = strategy.sample_hidden(i, &mut source_rng);

            let s1 = sample_setting(
                &dist[0],
                &mut streams.stream(i, StreamWing::Wing1, StreamRole::Setting),
            );
            let s2 = sample_setting(
                &dist[1],
                &mut streams.stream(i, StreamWing::Wing2, StreamRole::Setting),
            );

            let (o1, o2) = match strategy.responder() {
                Responder::Local(r) => {
                    let o1 = r.respond_local(
                        &hidden,
                        settings[s1.index()],
                        &mut streams.stream(i, StreamWing::Wing1, StreamRole::Response),
                    );
                    let o2 = r.respond_local(
                        &hidden,
                        settings[s2.index()],
                        &mut streams.stream(i, StreamWing::Wing2, StreamRole::Response),
                    );
                    (o1, o2)
                }
                Responder::Nonlocal(r) => r.respond_joint(
                    &hidden,
                    settings[s1.index()],
                    settings[s2.index()],
                    &mut streams.stream(i, StreamWing::Shared, StreamRole::Response),
                ),
            };

            Trial {
                index: i,
                setting1: s1,
                setting2: s2,
                outcome1: o1,
                outcome2: o2,
                hidden: trace.then_some(hidden),
            }
        })
        .collect();

    Ok(TrialLog::new(trials, config.digest(), config.seed))
}

/// Counts how often each ordered setting pair occurred, indexed
/// `[setting1][setting2]`.
pub fn setting_pair_frequencies(log: &TrialLog) -> Result<[[u64; 3]; 3], HarnessError> {
    if log.trials.is_empty() {
        return Err(HarnessError::EmptyLog);
    }
    let mut counts = [[0u64; 3]; 3];
    for t in &log.trials {
        counts[t.setting1.index()][t.setting2.index()] += 1;
    }
    Ok(counts)
}

// ---------------------------------------------------------------------------
// Configuration sources
// ---------------------------------------------------------------------------

/// Partial configuration. The flat key=value config file and command-line
/// flags each produce one; layers merge field-wise with the later layer
/// winning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverlay {
    pub strategy: Option<String>,
    pub n: Option<u64>,
    pub seed: Option<u64>,
    pub angles: Option<[f64; 3]>,
    pub settings_dist: Option<[[f64; 3]; 2]>,
    pub z: Option<f64>,
    pub trace_lambda: Option<bool>,
    pub out: Option<String>,
}

impl ConfigOverlay {
    /// Parses the flat `key=value` config format. Blank lines and `#`
    /// comments are ignored; unknown keys are errors.
    pub fn from_key_values(text: &str) -> Result<Self, HarnessError> {
        let mut overlay = ConfigOverlay::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| HarnessError::ConfigFile {
                line: line_no,
                msg: format!("expected key=value, got {line:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let err = |msg: String| HarnessError::ConfigFile { line: line_no, msg };
            match key {
                "strategy" => overlay.strategy = Some(value.to_string()),
                "n" => {
                    overlay.n =
                        Some(value.parse().map_err(|_| err(format!("invalid n {value:?}")))?)
                }
                "seed" => {
                    overlay.seed =
                        Some(value.parse().map_err(|_| err(format!("invalid seed {value:?}")))?)
                }
                "angles" => overlay.angles = Some(parse_angles(value).map_err(err)?),
                "settings_dist" => {
                    overlay.settings_dist = Some(parse_settings_dist(value).map_err(err)?)
                }
                "z" => {
                    overlay.z =
                        Some(value.parse().map_err(|_| err(format!("invalid z {value:?}")))?)
                }
                "trace_lambda" => {
                    overlay.trace_lambda = Some(
                        value
                            .parse()
                            .map_err(|_| err(format!("invalid trace_lambda {value:?}")))?,
                    )
                }
                "out" => overlay.out = Some(value.to_string()),
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        Ok(overlay)
    }

    /// Field-wise override: values set on `self` win, `base` fills the rest.
    pub fn over(self, base: ConfigOverlay) -> ConfigOverlay {
        ConfigOverlay {
            strategy: self.strategy.or(base.strategy),
            n: self.n.or(base.n),
            seed: self.seed.or(base.seed),
            angles: self.angles.or(base.angles),
            settings_dist: self.settings_dist.or(base.settings_dist),
            z: self.z.or(base.z),
            trace_lambda: self.trace_lambda.or(base.trace_lambda),
            out: self.out.or(base.out),
        }
    }

    /// Materializes the full config. `strategy` and `n` are required; the
    /// rest default to seed 0, uniform settings, default angles, z = 5, and
    /// tracing off. The strategy spec is parsed here so a bad spec fails
    /// before any side effects.
    pub fn into_config(self) -> Result<ExperimentConfig, HarnessError> {
        let strategy = self.strategy.ok_or(HarnessError::MissingValue("strategy"))?;
        let n = self.n.ok_or(HarnessError::MissingValue("n"))?;
        let mut config = ExperimentConfig::new(&strategy, n, self.seed.unwrap_or(0));
        if let Some(dist) = self.settings_dist {
            config.setting_distribution = dist;
        }
        config.angles_deg = self.angles;
        if let Some(z) = self.z {
            config.significance_z = z;
        }
        config.lambda_trace = self.trace_lambda.unwrap_or(false);
        config.validate()?;
        let _: Strategy = config.strategy_spec.parse()?;
        Ok(config)
    }
}

/// Parses `a,b,c` polarizer angles in degrees.
pub fn parse_angles(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated angles, got {s:?}"));
    }
    let mut angles = [0.0; 3];
    for (a, part) in angles.iter_mut().zip(&parts) {
        *a = part
            .trim()
            .parse()
            .map_err(|_| format!("invalid angle {part:?}"))?;
    }
    Ok(angles)
}

/// Parses `w:w:w` (both wings) or `w:w:w,w:w:w` (per wing) setting weights.
/// Weights are relative and are normalized to a probability vector.
pub fn parse_settings_dist(s: &str) -> Result<[[f64; 3]; 2], String> {
    fn parse_wing(w: &str) -> Result<[f64; 3], String> {
        let parts: Vec<&str> = w.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected w:w:w, got {w:?}"));
        }
        let mut v = [0.0; 3];
        for (x, part) in v.iter_mut().zip(&parts) {
            *x = part
                .trim()
                .parse()
                .map_err(|_| format!("invalid weight {part:?}"))?;
        }
        if v.iter().any(|x: &f64| *x < 0.0 || !x.is_finite()) {
            return Err(format!("weights must be nonnegative and finite, got {w:?}"));
        }
        let sum: f64 = v.iter().sum();
        if sum <= 0.0 {
            return Err(format!("weights sum to zero in {w:?}"));
        }
        Ok([v[0] / sum, v[1] / sum, v[2] / sum])
    }
    let wings: Vec<&str> = s.split(',').collect();
    match wings.len() {
        1 => {
            let w = parse_wing(wings[0])?;
            Ok([w, w])
        }
        2 => Ok([parse_wing(wings[0])?, parse_wing(wings[1])?]),
        n => Err(format!("expected one or two wing distributions, got {n}")),
    }
}
