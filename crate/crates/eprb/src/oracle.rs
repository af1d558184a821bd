//! Exact rational-arithmetic oracles: plan enumeration, mixture statistics,
//! the brute-force match-rate bound, and exact quantum tables. Monte Carlo
//! estimates elsewhere in the crate are validated against these values.

use std::collections::BTreeMap;

use num::{One, Zero};
use thiserror::Error;

use crate::core::{
    rat, render_rat, validate_angles, ExactJoint, Outcome, Plan, Rat, Setting, SettingLabel,
};
use crate::strategies::{quantum_joint, quantum_joint_exact, ConditionalTable};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("mixture weights: {0}")]
    BadWeights(String),
    #[error("invalid angles: {0}")]
    Angles(String),
}

/// The three unordered different-setting pairs.
pub const DIFFERENT_PAIRS: [(SettingLabel, SettingLabel); 3] = [
    (SettingLabel::A, SettingLabel::B),
    (SettingLabel::A, SettingLabel::C),
    (SettingLabel::B, SettingLabel::C),
];

/// The ordered setting-pair cycle used by the original inequality's sums.
pub const BELL_CYCLE: [(SettingLabel, SettingLabel); 3] = [
    (SettingLabel::A, SettingLabel::B),
    (SettingLabel::B, SettingLabel::C),
    (SettingLabel::C, SettingLabel::A),
];

/// All 2^3 deterministic plans in canonical order: lexicographic over
/// (A, B, C) answers with Plus before Minus.
pub fn enumerate_plans() -> [Plan; 8] {
    let mut plans = [Plan::new(Outcome::Plus, Outcome::Plus, Outcome::Plus); 8];
    for (i, plan) in plans.iter_mut().enumerate() {
        let pick = |bit: usize| {
            if (i >> (2 - bit)) & 1 == 0 {
                Outcome::Plus
            } else {
                Outcome::Minus
            }
        };
        *plan = Plan::new(pick(0), pick(1), pick(2));
    }
    plans
}

/// Probability that both wings answer equally when their settings are drawn
/// uniformly among the three *different* unordered pairs: the number of
/// pairs the plan answers equally, over 3.
pub fn plan_match_probability(plan: &Plan) -> Rat {
    let equal = DIFFERENT_PAIRS
        .iter()
        .filter(|(s1, s2)| plan.answer(*s1) == plan.answer(*s2))
        .count();
    rat(equal as i64, 3)
}

/// The different-setting match-rate bound for plan mixtures, derived by
/// brute force: the minimum of [`plan_match_probability`] over all plans.
/// Mixtures are convex combinations, so no mixture can fall below it.
pub fn derive_bell_bound() -> Rat {
    enumerate_plans()
        .iter()
        .map(plan_match_probability)
        .min()
        .expect("plan enumeration is non-empty")
}

/// Exact statistics of a strategy under uniform setting deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactStats {
    /// Match probability when both wings get the same setting.
    pub p_same_setting_match: Rat,
    /// Match probability when the wings get different settings.
    pub p_diff_setting_match: Rat,
    /// The (+,-) and (-,+) sums over the pair cycle (A,B), (B,C), (C,A).
    pub bell_original_sums: (Rat, Rat),
    /// Per-plan different-setting match probabilities; empty for strategies
    /// without a plan decomposition.
    pub per_plan: BTreeMap<Plan, Rat>,
}

impl ExactStats {
    pub fn to_json(&self) -> serde_json::Value {
        let per_plan: serde_json::Map<String, serde_json::Value> = self
            .per_plan
            .iter()
            .map(|(plan, p)| (plan.to_string(), serde_json::json!(render_rat(p))))
            .collect();
        serde_json::json!({
            "exact": true,
            "same_setting_match": render_rat(&self.p_same_setting_match),
            "diff_setting_match": render_rat(&self.p_diff_setting_match),
            "bell_original_sum_pm": render_rat(&self.bell_original_sums.0),
            "bell_original_sum_mp": render_rat(&self.bell_original_sums.1),
            "per_plan_match": per_plan,
        })
    }
}

/// Quantum statistics: exact when the angle set admits rational cos^2
/// values, floating-point (flagged) otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumStats {
    Exact(ExactStats),
    Inexact {
        p_same_setting_match: f64,
        p_diff_setting_match: f64,
        bell_original_sums: (f64, f64),
    },
}

impl QuantumStats {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            QuantumStats::Exact(stats) => stats.to_json(),
            QuantumStats::Inexact {
                p_same_setting_match,
                p_diff_setting_match,
                bell_original_sums,
            } => serde_json::json!({
                "exact": false,
                "same_setting_match": p_same_setting_match,
                "diff_setting_match": p_diff_setting_match,
                "bell_original_sum_pm": bell_original_sums.0,
                "bell_original_sum_mp": bell_original_sums.1,
            }),
        }
    }
}

fn validate_weights(weights: &[Rat; 8]) -> Result<(), OracleError> {
    if weights.iter().any(|w| *w < Rat::zero()) {
        return Err(OracleError::BadWeights("negative weight".into()));
    }
    let total: Rat = weights.iter().sum();
    if total != Rat::one() {
        return Err(OracleError::BadWeights(format!(
            "weights sum to {}, expected 1",
            render_rat(&total)
        )));
    }
    Ok(())
}

/// Exact statistics of a plan mixture, by enumeration over the 8 plans.
/// Weights follow the canonical order of [`enumerate_plans`].
pub fn exact_stats(weights: &[Rat; 8]) -> Result<ExactStats, OracleError> {
    validate_weights(weights)?;
    let plans = enumerate_plans();

    let mut same = Rat::zero();
    let mut diff = Rat::zero();
    let mut sum_pm = Rat::zero();
    let mut sum_mp = Rat::zero();
    let mut per_plan = BTreeMap::new();
    for (plan, w) in plans.iter().zip(weights) {
        // Both wings share the plan, so same-setting answers always agree.
        let same_match: Rat = SettingLabel::ALL
            .iter()
            .map(|s| {
                if plan.answer(*s) == plan.answer(*s) {
                    rat(1, 3)
                } else {
                    Rat::zero()
                }
            })
            .sum();
        same += *w * same_match;
        let match_p = plan_match_probability(plan);
        diff += *w * match_p;
        per_plan.insert(*plan, match_p);

        for (s1, s2) in BELL_CYCLE {
            if plan.answer(s1) == Outcome::Plus && plan.answer(s2) == Outcome::Minus {
                sum_pm += *w;
            }
            if plan.answer(s1) == Outcome::Minus && plan.answer(s2) == Outcome::Plus {
                sum_mp += *w;
            }
        }
    }
    Ok(ExactStats {
        p_same_setting_match: same,
        p_diff_setting_match: diff,
        bell_original_sums: (sum_pm, sum_mp),
        per_plan,
    })
}

fn stats_from_exact_joint(joint: &ExactJoint) -> ExactStats {
    let match_of = |s1: SettingLabel, s2: SettingLabel| {
        let cell = joint.cell(s1, s2);
        cell[0][0] + cell[1][1]
    };
    let same: Rat = SettingLabel::ALL.iter().map(|s| rat(1, 3) * match_of(*s, *s)).sum();
    let mut diff = Rat::zero();
    for s1 in SettingLabel::ALL {
        for s2 in SettingLabel::ALL {
            if s1 != s2 {
                diff += rat(1, 6) * match_of(s1, s2);
            }
        }
    }
    let sum_pm: Rat = BELL_CYCLE.iter().map(|(s1, s2)| joint.cell(*s1, *s2)[0][1]).sum();
    let sum_mp: Rat = BELL_CYCLE.iter().map(|(s1, s2)| joint.cell(*s1, *s2)[1][0]).sum();
    ExactStats {
        p_same_setting_match: same,
        p_diff_setting_match: diff,
        bell_original_sums: (sum_pm, sum_mp),
        per_plan: BTreeMap::new(),
    }
}

/// Exact statistics for any white-box strategy, from its lambda-averaged
/// conditional table.
pub fn exact_stats_from_table(table: &ConditionalTable) -> ExactStats {
    stats_from_exact_joint(&table.marginal_joint())
}

/// Quantum statistics at the given angles: exact rationals when every
/// pairwise difference admits one, floating-point (flagged inexact)
/// otherwise.
pub fn exact_quantum_stats(angles_deg: [f64; 3]) -> Result<QuantumStats, OracleError> {
    validate_angles(&angles_deg).map_err(|e| OracleError::Angles(e.to_string()))?;
    let settings = Setting::triple(angles_deg);

    let mut exact = Vec::with_capacity(9);
    let mut all_exact = true;
    for s1 in SettingLabel::ALL {
        for s2 in SettingLabel::ALL {
            match quantum_joint_exact(settings[s1.index()], settings[s2.index()]) {
                Ok(Some(cell)) => exact.push(cell),
                Ok(None) => {
                    all_exact = false;
                    break;
                }
                Err(e) => return Err(OracleError::Angles(e.to_string())),
            }
        }
        if !all_exact {
            break;
        }
    }

    if all_exact {
        let joint = ExactJoint::from_fn(|s1, s2| exact[s1.index() * 3 + s2.index()]);
        return Ok(QuantumStats::Exact(stats_from_exact_joint(&joint)));
    }

    let cell_of = |s1: SettingLabel, s2: SettingLabel| {
        quantum_joint(settings[s1.index()], settings[s2.index()])
            .expect("settings carry angles")
    };
    let match_of = |s1, s2| {
        let c = cell_of(s1, s2);
        c[0][0] + c[1][1]
    };
    let same: f64 = SettingLabel::ALL.iter().map(|s| match_of(*s, *s) / 3.0).sum();
    let mut diff = 0.0;
    for s1 in SettingLabel::ALL {
        for s2 in SettingLabel::ALL {
            if s1 != s2 {
                diff += match_of(s1, s2) / 6.0;
            }
        }
    }
    let sum_pm: f64 = BELL_CYCLE.iter().map(|(s1, s2)| cell_of(*s1, *s2)[0][1]).sum();
    let sum_mp: f64 = BELL_CYCLE.iter().map(|(s1, s2)| cell_of(*s1, *s2)[1][0]).sum();
    Ok(QuantumStats::Inexact {
        p_same_setting_match: same,
        p_diff_setting_match: diff,
        bell_original_sums: (sum_pm, sum_mp),
    })
}
