//! Statistical estimators and verdicts: match-rate tests against the plan
//! bound, the original cycle-sum inequality, no-signaling detection,
//! factorization and independence checks on white-box tables, and the
//! theory-space classifier.

use num::{Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::core::{
    ExactJoint, JointDistribution, Outcome, Rat, Setting, SettingLabel, TrialLog,
};
use crate::oracle::BELL_CYCLE;
use crate::strategies::{
    ConditionalTable, DeterminismClaim, Locality, Strategy, StrategyKind,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("trial log is empty")]
    EmptyLog,
    #[error("log has no same-setting trials")]
    NoSameSettingTrials,
    #[error("log has no different-setting trials")]
    NoDifferentSettingTrials,
    #[error("zero total weight over different-setting pairs")]
    ZeroWeight,
}

/// Different-setting trial count below which the three-filter test refuses
/// to decide.
pub const MIN_DIFF_TRIALS: u64 = 100;

// ---------------------------------------------------------------------------
// Verdicts and confidence machinery
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictStatus {
    Satisfied,
    Violated,
    Inconclusive,
}

impl VerdictStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictStatus::Satisfied => "Satisfied",
            VerdictStatus::Violated => "Violated",
            VerdictStatus::Inconclusive => "Inconclusive",
        }
    }
}

/// Decision against a bound. The z-score is signed toward violation:
/// `Violated` when the statistic crosses its bound by more than
/// `threshold_z` standard errors, `Satisfied` when it stays inside by the
/// same margin (or exactly, in zero-variance cases), `Inconclusive`
/// in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub statistic: f64,
    pub z_score: f64,
    pub threshold_z: f64,
    pub n_effective: u64,
}

impl Verdict {
    pub fn from_z(statistic: f64, z_score: f64, threshold_z: f64, n_effective: u64) -> Verdict {
        let status = if z_score > threshold_z {
            VerdictStatus::Violated
        } else if z_score < -threshold_z {
            VerdictStatus::Satisfied
        } else {
            VerdictStatus::Inconclusive
        };
        Verdict { status, statistic, z_score, threshold_z, n_effective }
    }

    fn inconclusive(statistic: f64, threshold_z: f64, n_effective: u64) -> Verdict {
        Verdict {
            status: VerdictStatus::Inconclusive,
            statistic,
            z_score: 0.0,
            threshold_z,
            n_effective,
        }
    }
}

/// Wilson score interval for a binomial proportion at `z` standard errors.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Pooled two-proportion z statistic for the hypothesis p1 = p2. Degenerate
/// pools (all successes or all failures) carry no evidence of a difference
/// and give 0.
pub fn two_prop_z(x1: u64, n1: u64, x2: u64, n2: u64) -> f64 {
    if n1 == 0 || n2 == 0 {
        return 0.0;
    }
    let p1 = x1 as f64 / n1 as f64;
    let p2 = x2 as f64 / n2 as f64;
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return 0.0;
    }
    (p1 - p2) / se
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

/// Conditional relative frequencies per setting pair, with raw counts
/// retained. Pairs that never occurred are left absent.
pub fn estimate_joint(log: &TrialLog) -> Result<JointDistribution, AnalysisError> {
    if log.trials.is_empty() {
        return Err(AnalysisError::EmptyLog);
    }
    let mut counts = [[[[0u64; 2]; 2]; 3]; 3];
    for t in &log.trials {
        counts[t.setting1.index()][t.setting2.index()][t.outcome1.index()]
            [t.outcome2.index()] += 1;
    }
    let mut joint = JointDistribution::new();
    for s1 in SettingLabel::ALL {
        for s2 in SettingLabel::ALL {
            let c = counts[s1.index()][s2.index()];
            if c.iter().flatten().sum::<u64>() > 0 {
                joint.set_pair(s1, s2, crate::core::PairCell::from_counts(c));
            }
        }
    }
    Ok(joint)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub rate: f64,
    pub n_same: u64,
    pub verdict: Verdict,
}

/// Fraction of same-setting trials with equal outcomes, tested against 1.
/// A perfect rate is Satisfied outright; anything less is evidence against
/// the agreement hypothesis, z standard errors of it.
pub fn same_setting_agreement(
    log: &TrialLog,
    threshold_z: f64,
) -> Result<AgreementReport, AnalysisError> {
    let mut n = 0u64;
    let mut agree = 0u64;
    for t in &log.trials {
        if t.setting1 == t.setting2 {
            n += 1;
            agree += (t.outcome1 == t.outcome2) as u64;
        }
    }
    if n == 0 {
        return Err(AnalysisError::NoSameSettingTrials);
    }
    let rate = agree as f64 / n as f64;
    let verdict = if agree == n {
        Verdict {
            status: VerdictStatus::Satisfied,
            statistic: rate,
            z_score: 0.0,
            threshold_z,
            n_effective: n,
        }
    } else {
        let se = (rate * (1.0 - rate) / n as f64).sqrt();
        let z = if se == 0.0 { f64::INFINITY } else { (1.0 - rate) / se };
        Verdict::from_z(rate, z, threshold_z, n)
    };
    Ok(AgreementReport { rate, n_same: n, verdict })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PDiffReport {
    pub estimate: f64,
    pub interval: (f64, f64),
    pub n_diff: u64,
    pub mismatches: u64,
}

/// Fraction of different-setting trials with unequal outcomes, with a
/// Wilson interval at `interval_z` standard errors.
pub fn p_diff(log: &TrialLog, interval_z: f64) -> Result<PDiffReport, AnalysisError> {
    let mut n = 0u64;
    let mut mismatches = 0u64;
    for t in &log.trials {
        if t.setting1 != t.setting2 {
            n += 1;
            mismatches += (t.outcome1 != t.outcome2) as u64;
        }
    }
    if n == 0 {
        return Err(AnalysisError::NoDifferentSettingTrials);
    }
    Ok(PDiffReport {
        estimate: mismatches as f64 / n as f64,
        interval: wilson_interval(mismatches, n, interval_z),
        n_diff: n,
        mismatches,
    })
}

/// Weights over the six ordered different-setting pairs, indexed
/// `[s1][s2]`. Diagonal entries are ignored.
pub type PairWeights = [[f64; 3]; 3];

/// Unit weight on every different-setting pair.
pub fn uniform_pair_weights() -> PairWeights {
    let mut w = [[1.0; 3]; 3];
    for (i, row) in w.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    w
}

/// Each pair weighted by its observed trial count.
pub fn empirical_pair_weights(joint: &JointDistribution) -> PairWeights {
    let mut w = [[0.0; 3]; 3];
    for (s1, s2, cell) in joint.pairs() {
        if s1 != s2 {
            w[s1.index()][s2.index()] = cell.n as f64;
        }
    }
    w
}

/// Mismatch probability over different-setting pairs, computed the indirect
/// way: sum over pairs F of w(F)·[p(+-|F) + p(-+|F)], normalized by the
/// total weight. Pairs without data are skipped along with their weight.
///
/// When every weight equals its pair's observed count, the sums collapse to
/// the same integer ratio as [`p_diff`], so the two agree bit for bit.
pub fn p_diff_via_eq7(
    joint: &JointDistribution,
    weights: &PairWeights,
) -> Result<f64, AnalysisError> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut count_mismatches = 0u64;
    let mut count_n = 0u64;
    let mut counts_only = true;
    for s1 in SettingLabel::ALL {
        for s2 in SettingLabel::ALL {
            if s1 == s2 {
                continue;
            }
            let w = weights[s1.index()][s2.index()];
            if w == 0.0 {
                continue;
            }
            let Some(cell) = joint.pair(s1, s2) else { continue };
            num += w * (cell.p[0][1] + cell.p[1][0]);
            den += w;
            match cell.counts {
                Some(c) if w == cell.n as f64 => {
                    count_mismatches += c[0][1] + c[1][0];
                    count_n += cell.n;
                }
                _ => counts_only = false,
            }
        }
    }
    if den == 0.0 {
        return Err(AnalysisError::ZeroWeight);
    }
    if counts_only && count_n > 0 {
        Ok(count_mismatches as f64 / count_n as f64)
    } else {
        Ok(num / den)
    }
}

// ---------------------------------------------------------------------------
// Inequality tests
// ---------------------------------------------------------------------------

/// Tests the different-setting match rate against its lower bound of 1/3.
/// The z-score is positive when the rate falls below the bound (violation),
/// negative when it sits above. Fewer than [`MIN_DIFF_TRIALS`]
/// different-setting trials is Inconclusive.
pub fn bell_threefilter_test(log: &TrialLog, threshold_z: f64) -> Verdict {
    bell_threefilter_test_with_floor(log, threshold_z, MIN_DIFF_TRIALS)
}

pub fn bell_threefilter_test_with_floor(
    log: &TrialLog,
    threshold_z: f64,
    floor: u64,
) -> Verdict {
    let mut n = 0u64;
    let mut matches = 0u64;
    for t in &log.trials {
        if t.setting1 != t.setting2 {
            n += 1;
            matches += (t.outcome1 == t.outcome2) as u64;
        }
    }
    if n < floor.max(1) {
        let statistic = if n > 0 { matches as f64 / n as f64 } else { f64::NAN };
        return Verdict::inconclusive(statistic, threshold_z, n);
    }
    let rate = matches as f64 / n as f64;
    let bound = 1.0 / 3.0;
    let se = (rate * (1.0 - rate) / n as f64).sqrt();
    let z = if se == 0.0 {
        if rate < bound {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        (bound - rate) / se
    };
    Verdict::from_z(rate, z, threshold_z, n)
}

/// Tests both ordered mismatch sums over the pair cycle (A,B), (B,C), (C,A)
/// against their upper bound of 1, reporting whichever form violates more.
///
/// Empirical cells get a normal-approximation z from their counts. Cells
/// without counts are treated as analytic and compared directly, with an
/// infinite z marking the exact decision; exactness guarantees for analytic
/// tables live in the oracle, which works in rationals.
pub fn bell_original_test(joint: &JointDistribution, threshold_z: f64) -> Verdict {
    let mut cells = Vec::with_capacity(3);
    for (s1, s2) in BELL_CYCLE {
        match joint.pair(s1, s2) {
            Some(cell) => cells.push(cell),
            None => return Verdict::inconclusive(f64::NAN, threshold_z, 0),
        }
    }
    let n_total: u64 = cells.iter().map(|c| c.n).sum();
    let empirical = cells.iter().all(|c| c.counts.is_some() && c.n > 0);

    let orientation = |o1: usize, o2: usize| -> (f64, f64) {
        let sum: f64 = cells.iter().map(|c| c.p[o1][o2]).sum();
        let z = if empirical {
            let var: f64 = cells
                .iter()
                .map(|c| c.p[o1][o2] * (1.0 - c.p[o1][o2]) / c.n as f64)
                .sum();
            let se = var.sqrt();
            if se == 0.0 {
                if sum > 1.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                (sum - 1.0) / se
            }
        } else if sum > 1.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        (sum, z)
    };

    let (sum_pm, z_pm) = orientation(0, 1);
    let (sum_mp, z_mp) = orientation(1, 0);
    let (sum, z) = if z_pm >= z_mp { (sum_pm, z_pm) } else { (sum_mp, z_mp) };
    Verdict::from_z(sum, z, threshold_z, n_total)
}

// ---------------------------------------------------------------------------
// No-signaling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct NoSignalingReport {
    pub wing1: Verdict,
    pub wing2: Verdict,
    /// Pairwise comparisons actually performed (at most 9 per wing).
    pub comparisons: u32,
    /// Comparisons skipped because one side had no trials.
    pub skipped: u32,
}

impl NoSignalingReport {
    /// Combined verdict: signaling on either wing is signaling.
    pub fn overall(&self) -> Verdict {
        let status = match (self.wing1.status, self.wing2.status) {
            (VerdictStatus::Violated, _) | (_, VerdictStatus::Violated) => {
                VerdictStatus::Violated
            }
            (VerdictStatus::Inconclusive, _) | (_, VerdictStatus::Inconclusive) => {
                VerdictStatus::Inconclusive
            }
            _ => VerdictStatus::Satisfied,
        };
        let statistic = self.wing1.statistic.max(self.wing2.statistic);
        Verdict {
            status,
            statistic,
            z_score: statistic,
            threshold_z: self.wing1.threshold_z,
            n_effective: self.wing1.n_effective + self.wing2.n_effective,
        }
    }
}

/// For each wing and each of its local settings, compares the wing's Plus
/// rate across the three remote settings with pooled two-proportion
/// z-tests. A wing's statistic is the largest |z| over its (up to 9)
/// comparisons; Violated means a controllable remote influence was
/// detected. Comparisons with an empty side are skipped and make an
/// otherwise clean wing Inconclusive. No multiple-comparison correction is
/// applied; the comparison count is reported instead.
pub fn no_signaling_test(
    log: &TrialLog,
    threshold_z: f64,
) -> Result<NoSignalingReport, AnalysisError> {
    if log.trials.is_empty() {
        return Err(AnalysisError::EmptyLog);
    }
    // plus/totals indexed [wing][local setting][remote setting].
    let mut plus = [[[0u64; 3]; 3]; 2];
    let mut totals = [[[0u64; 3]; 3]; 2];
    for t in &log.trials {
        let (l1, r1) = (t.setting1.index(), t.setting2.index());
        plus[0][l1][r1] += (t.outcome1 == Outcome::Plus) as u64;
        totals[0][l1][r1] += 1;
        let (l2, r2) = (t.setting2.index(), t.setting1.index());
        plus[1][l2][r2] += (t.outcome2 == Outcome::Plus) as u64;
        totals[1][l2][r2] += 1;
    }

    let mut wings = Vec::with_capacity(2);
    let mut comparisons = 0u32;
    let mut skipped = 0u32;
    for wing in 0..2 {
        let mut max_abs_z: f64 = 0.0;
        let mut wing_skipped = 0u32;
        for local in 0..3 {
            for (r1, r2) in [(0, 1), (0, 2), (1, 2)] {
                let n1 = totals[wing][local][r1];
                let n2 = totals[wing][local][r2];
                if n1 == 0 || n2 == 0 {
                    wing_skipped += 1;
                    continue;
                }
                comparisons += 1;
                let z = two_prop_z(plus[wing][local][r1], n1, plus[wing][local][r2], n2);
                max_abs_z = max_abs_z.max(z.abs());
            }
        }
        skipped += wing_skipped;
        let n: u64 = totals[wing].iter().flatten().sum();
        let status = if max_abs_z > threshold_z {
            VerdictStatus::Violated
        } else if wing_skipped > 0 {
            VerdictStatus::Inconclusive
        } else {
            VerdictStatus::Satisfied
        };
        wings.push(Verdict {
            status,
            statistic: max_abs_z,
            z_score: max_abs_z,
            threshold_z,
            n_effective: n,
        });
    }
    let wing2 = wings.pop().expect("two wings");
    let wing1 = wings.pop().expect("two wings");
    Ok(NoSignalingReport { wing1, wing2, comparisons, skipped })
}

// ---------------------------------------------------------------------------
// White-box checks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationReport {
    pub factorizes: bool,
    pub max_deviation: Rat,
}

/// Checks, per lambda, that the conditional joint is a product of
/// wing-local response functions: p(o1,o2|s1,s2,l) = p(o1|s1,l)·p(o2|s2,l).
///
/// The candidate wing functions are the marginals at remote setting A; any
/// product form that exists must equal them, so the check is exact and
/// complete. `tol` is 0 for exact tables.
pub fn factorization_check(table: &ConditionalTable, tol: &Rat) -> FactorizationReport {
    let mut max_dev = Rat::zero();
    for slice in &table.slices {
        let mut f1 = [[Rat::zero(); 2]; 3];
        let mut f2 = [[Rat::zero(); 2]; 3];
        for s in 0..3 {
            for o in 0..2 {
                f1[s][o] = slice[s][0][o][0] + slice[s][0][o][1];
                f2[s][o] = slice[0][s][0][o] + slice[0][s][1][o];
            }
        }
        for s1 in 0..3 {
            for s2 in 0..3 {
                for o1 in 0..2 {
                    for o2 in 0..2 {
                        let dev = (slice[s1][s2][o1][o2] - f1[s1][o1] * f2[s2][o2]).abs();
                        if dev > max_dev {
                            max_dev = dev;
                        }
                    }
                }
            }
        }
    }
    FactorizationReport { factorizes: max_dev <= *tol, max_deviation: max_dev }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JarrettReport {
    pub parameter_independent: bool,
    pub outcome_independent: bool,
    pub max_pi_deviation: Rat,
    pub max_oi_deviation: Rat,
}

/// Splits the factorization condition into its two halves.
///
/// Parameter independence: each wing's conditional marginal
/// p(o | own setting, lambda) does not move with the remote setting.
/// Outcome independence: within each (s1, s2, lambda) slice the two
/// outcomes are conditionally independent, i.e. the joint equals the
/// product of that slice's own marginals. Their conjunction is equivalent
/// to the factorization check, which the tests assert on every table.
pub fn jarrett_decompose(table: &ConditionalTable, tol: &Rat) -> JarrettReport {
    let mut max_pi = Rat::zero();
    let mut max_oi = Rat::zero();
    for slice in &table.slices {
        let m1 = |s1: usize, s2: usize, o1: usize| slice[s1][s2][o1][0] + slice[s1][s2][o1][1];
        let m2 = |s1: usize, s2: usize, o2: usize| slice[s1][s2][0][o2] + slice[s1][s2][1][o2];
        for s in 0..3 {
            for o in 0..2 {
                for other in 1..3 {
                    let dev = (m1(s, other, o) - m1(s, 0, o)).abs();
                    if dev > max_pi {
                        max_pi = dev;
                    }
                    let dev = (m2(other, s, o) - m2(0, s, o)).abs();
                    if dev > max_pi {
                        max_pi = dev;
                    }
                }
            }
        }
        for s1 in 0..3 {
            for s2 in 0..3 {
                for o1 in 0..2 {
                    for o2 in 0..2 {
                        let dev =
                            (slice[s1][s2][o1][o2] - m1(s1, s2, o1) * m2(s1, s2, o2)).abs();
                        if dev > max_oi {
                            max_oi = dev;
                        }
                    }
                }
            }
        }
    }
    JarrettReport {
        parameter_independent: max_pi <= *tol,
        outcome_independent: max_oi <= *tol,
        max_pi_deviation: max_pi,
        max_oi_deviation: max_oi,
    }
}

/// Exact flags computed from a white-box table.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteBoxFlags {
    pub strongly_local: bool,
    pub deterministic: bool,
    pub parameter_independent: bool,
    pub outcome_independent: bool,
    /// Setting-independence of the lambda-averaged wing marginals: what an
    /// experimenter (who cannot see lambda) could exploit as a channel.
    pub signal_local: bool,
}

fn exact_signal_local(joint: &ExactJoint) -> bool {
    for s_local in SettingLabel::ALL {
        for o in 0..2 {
            let m1 = |remote: SettingLabel| {
                let c = joint.cell(s_local, remote);
                c[o][0] + c[o][1]
            };
            let m2 = |remote: SettingLabel| {
                let c = joint.cell(remote, s_local);
                c[0][o] + c[1][o]
            };
            let base1 = m1(SettingLabel::A);
            let base2 = m2(SettingLabel::A);
            for remote in [SettingLabel::B, SettingLabel::C] {
                if m1(remote) != base1 || m2(remote) != base2 {
                    return false;
                }
            }
        }
    }
    true
}

/// Computes every exact flag of a strategy from its conditional table.
pub fn white_box_flags(table: &ConditionalTable) -> WhiteBoxFlags {
    let zero = Rat::zero();
    let factorization = factorization_check(table, &zero);
    let jarrett = jarrett_decompose(table, &zero);
    WhiteBoxFlags {
        strongly_local: factorization.factorizes,
        deterministic: table.is_deterministic(),
        parameter_independent: jarrett.parameter_independent,
        outcome_independent: jarrett.outcome_independent,
        signal_local: exact_signal_local(&table.marginal_joint()),
    }
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    StrongLocalDeterministic,
    StrongLocalIndeterministic,
    NonlocalDetNonSignaling,
    NonlocalIndetNonSignaling,
    SignalingCapable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub strongly_local: Option<bool>,
    pub deterministic: Option<bool>,
    pub parameter_independent: Option<bool>,
    pub outcome_independent: Option<bool>,
    pub signal_local_empirical: Verdict,
    pub region: Region,
    /// True when no white-box table was available and the region rests on
    /// weaker evidence.
    pub partial: bool,
    pub notes: Vec<String>,
}

/// Places a strategy in the theory-space taxonomy.
///
/// White-box flags decide the region when available; the empirical
/// no-signaling verdict is recorded and any disagreement with the analytic
/// table is noted rather than trusted. Without a table, the region falls
/// back to the strategy's interface shape and determinism claim, flagged
/// partial.
pub fn classify(
    kind: &StrategyKind,
    flags: Option<&WhiteBoxFlags>,
    no_signaling: &Verdict,
) -> ClassificationReport {
    match flags {
        Some(f) => {
            let region = if f.strongly_local {
                if f.deterministic {
                    Region::StrongLocalDeterministic
                } else {
                    Region::StrongLocalIndeterministic
                }
            } else if !f.signal_local {
                Region::SignalingCapable
            } else if f.deterministic {
                Region::NonlocalDetNonSignaling
            } else {
                Region::NonlocalIndetNonSignaling
            };
            let mut notes = Vec::new();
            let empirically_signaling = no_signaling.status == VerdictStatus::Violated;
            if empirically_signaling && f.signal_local {
                notes.push(
                    "empirical no-signaling verdict is Violated but the analytic table is signal-local"
                        .into(),
                );
            }
            if no_signaling.status == VerdictStatus::Satisfied && !f.signal_local {
                notes.push(
                    "analytic table is signaling-capable but the empirical verdict did not detect it"
                        .into(),
                );
            }
            if kind.locality == Locality::LocalResponder && !f.strongly_local {
                notes.push("local interface shape but a non-factorizing table".into());
            }
            ClassificationReport {
                strongly_local: Some(f.strongly_local),
                deterministic: Some(f.deterministic),
                parameter_independent: Some(f.parameter_independent),
                outcome_independent: Some(f.outcome_independent),
                signal_local_empirical: no_signaling.clone(),
                region,
                partial: false,
                notes,
            }
        }
        None => {
            let region = if no_signaling.status == VerdictStatus::Violated {
                Region::SignalingCapable
            } else {
                match (kind.locality, kind.determinism_claim) {
                    (Locality::LocalResponder, DeterminismClaim::Deterministic) => {
                        Region::StrongLocalDeterministic
                    }
                    (Locality::LocalResponder, DeterminismClaim::Stochastic) => {
                        Region::StrongLocalIndeterministic
                    }
                    (Locality::NonlocalResponder, DeterminismClaim::Deterministic) => {
                        Region::NonlocalDetNonSignaling
                    }
                    (Locality::NonlocalResponder, DeterminismClaim::Stochastic) => {
                        Region::NonlocalIndetNonSignaling
                    }
                }
            };
            let mut notes =
                vec!["no white-box table; region from interface shape and determinism claim"
                    .to_string()];
            if no_signaling.status == VerdictStatus::Inconclusive {
                notes.push("no-signaling verdict inconclusive".into());
            }
            ClassificationReport {
                strongly_local: None,
                deterministic: None,
                parameter_independent: None,
                outcome_independent: None,
                signal_local_empirical: no_signaling.clone(),
                region,
                partial: true,
                notes,
            }
        }
    }
}

/// Region guess from data alone, when neither a table nor the strategy kind
/// is known. Detected signaling wins; a decisive match-rate violation rules
/// out strong locality (reported as indeterministic, the weaker claim);
/// otherwise the data are consistent with a local model, deterministic
/// exactly when same-setting agreement is perfect.
pub fn classify_from_data(
    agreement: &AgreementReport,
    bell_threefilter: &Verdict,
    no_signaling: &Verdict,
) -> ClassificationReport {
    let region = if no_signaling.status == VerdictStatus::Violated {
        Region::SignalingCapable
    } else if bell_threefilter.status == VerdictStatus::Violated {
        Region::NonlocalIndetNonSignaling
    } else if agreement.rate == 1.0 {
        Region::StrongLocalDeterministic
    } else {
        Region::StrongLocalIndeterministic
    };
    ClassificationReport {
        strongly_local: None,
        deterministic: None,
        parameter_independent: None,
        outcome_independent: None,
        signal_local_empirical: no_signaling.clone(),
        region,
        partial: true,
        notes: vec![
            "classification inferred from data only; determinism of the underlying model is not identifiable"
                .to_string(),
        ],
    }
}

// ---------------------------------------------------------------------------
// Full report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub joint: JointDistribution,
    pub same_setting_agreement: AgreementReport,
    pub p_diff: PDiffReport,
    pub bell_threefilter: Verdict,
    pub bell_original: Verdict,
    pub no_signaling: NoSignalingReport,
    pub classification: ClassificationReport,
    pub config_digest: String,
    pub seed: u64,
}

/// Runs every estimator and test over one log. When the strategy is known,
/// its white-box table (if the angle set admits one) drives the
/// classification; otherwise the classification is inferred from the data.
pub fn analyze(
    log: &TrialLog,
    strategy: Option<&Strategy>,
    settings: &[Setting; 3],
    threshold_z: f64,
) -> Result<AnalysisReport, AnalysisError> {
    let joint = estimate_joint(log)?;
    let agreement = same_setting_agreement(log, threshold_z)?;
    let pdiff = p_diff(log, threshold_z)?;
    let bell3 = bell_threefilter_test(log, threshold_z);
    let bell_orig = bell_original_test(&joint, threshold_z);
    let no_sig = no_signaling_test(log, threshold_z)?;
    let overall = no_sig.overall();

    let classification = match strategy {
        Some(s) => {
            let flags = s.conditional_table(settings).ok().map(|t| white_box_flags(&t));
            classify(&s.kind(), flags.as_ref(), &overall)
        }
        None => classify_from_data(&agreement, &bell3, &overall),
    };

    Ok(AnalysisReport {
        joint,
        same_setting_agreement: agreement,
        p_diff: pdiff,
        bell_threefilter: bell3,
        bell_original: bell_orig,
        no_signaling: no_sig,
        classification,
        config_digest: log.config_digest.clone(),
        seed: log.seed,
    })
}

fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

fn verdict_fields(v: &Verdict) -> (Value, Value, Value) {
    (json!(v.status.as_str()), json_f64(v.z_score), json!(v.threshold_z))
}

fn verdict_block(statistic: Value, interval: Value, verdict: Option<&Verdict>, n: u64) -> Value {
    let (status, z, threshold) = match verdict {
        Some(v) => verdict_fields(v),
        None => (Value::Null, Value::Null, Value::Null),
    };
    json!({
        "statistic": statistic,
        "interval": interval,
        "verdict": status,
        "z": z,
        "threshold_z": threshold,
        "n": n,
    })
}

impl AnalysisReport {
    pub fn to_json(&self) -> Value {
        let agreement = &self.same_setting_agreement;
        let pdiff = &self.p_diff;
        let ns = &self.no_signaling;
        let overall = ns.overall();
        let class = &self.classification;
        let mut ns_block = verdict_block(
            json_f64(overall.statistic),
            Value::Null,
            Some(&overall),
            overall.n_effective,
        );
        {
            let obj = ns_block.as_object_mut().expect("verdict block is an object");
            obj.insert(
                "wing1".into(),
                verdict_block(
                    json_f64(ns.wing1.statistic),
                    Value::Null,
                    Some(&ns.wing1),
                    ns.wing1.n_effective,
                ),
            );
            obj.insert(
                "wing2".into(),
                verdict_block(
                    json_f64(ns.wing2.statistic),
                    Value::Null,
                    Some(&ns.wing2),
                    ns.wing2.n_effective,
                ),
            );
            obj.insert("comparisons".into(), json!(ns.comparisons));
            obj.insert("skipped".into(), json!(ns.skipped));
        }
        json!({
            "config_digest": self.config_digest,
            "seed": self.seed,
            "joint": self.joint.to_json(),
            "same_setting_agreement": verdict_block(
                json_f64(agreement.rate),
                Value::Null,
                Some(&agreement.verdict),
                agreement.n_same,
            ),
            "p_diff": verdict_block(
                json_f64(pdiff.estimate),
                json!([pdiff.interval.0, pdiff.interval.1]),
                None,
                pdiff.n_diff,
            ),
            "bell_threefilter": verdict_block(
                json_f64(self.bell_threefilter.statistic),
                Value::Null,
                Some(&self.bell_threefilter),
                self.bell_threefilter.n_effective,
            ),
            "bell_original": verdict_block(
                json_f64(self.bell_original.statistic),
                Value::Null,
                Some(&self.bell_original),
                self.bell_original.n_effective,
            ),
            "no_signaling": ns_block,
            "classification": {
                "region": format!("{:?}", class.region),
                "strongly_local": class.strongly_local,
                "deterministic": class.deterministic,
                "parameter_independent": class.parameter_independent,
                "outcome_independent": class.outcome_independent,
                "partial": class.partial,
                "notes": class.notes,
            },
        })
    }

    /// Terse human-readable summary, one headline per line.
    pub fn summary_lines(&self) -> Vec<String> {
        let a = &self.same_setting_agreement;
        let p = &self.p_diff;
        let b3 = &self.bell_threefilter;
        let bo = &self.bell_original;
        let ns = self.no_signaling.overall();
        let class = &self.classification;
        vec![
            format!(
                "same-setting agreement: {} (rate {:.6}, n {})",
                a.verdict.status.as_str(),
                a.rate,
                a.n_same
            ),
            format!(
                "p_diff: {:.6} in [{:.6}, {:.6}] (n {})",
                p.estimate, p.interval.0, p.interval.1, p.n_diff
            ),
            format!(
                "three-filter match bound: {} (match {:.6}, z {:.2}, n {})",
                b3.status.as_str(),
                b3.statistic,
                b3.z_score,
                b3.n_effective
            ),
            format!(
                "original inequality: {} (sum {:.6}, z {:.2})",
                bo.status.as_str(),
                bo.statistic,
                bo.z_score
            ),
            format!(
                "no-signaling: {} (max |z| {:.2}, comparisons {})",
                ns.status.as_str(),
                ns.statistic,
                self.no_signaling.comparisons
            ),
            format!(
                "classification: {:?}{}",
                class.region,
                if class.partial { " (partial)" } else { "" }
            ),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{rat, PairCell, Setting, Trial, DEFAULT_ANGLES_DEG};

    fn t(
        index: u64,
        s1: SettingLabel,
        s2: SettingLabel,
        o1: Outcome,
        o2: Outcome,
    ) -> Trial {
        Trial { index, setting1: s1, setting2: s2, outcome1: o1, outcome2: o2, hidden: None }
    }

    fn log(trials: Vec<Trial>) -> TrialLog {
        TrialLog::new(trials, "test".into(), 0)
    }

    use Outcome::{Minus, Plus};
    use SettingLabel::{A, B, C};

    fn settings() -> [Setting; 3] {
        Setting::triple(DEFAULT_ANGLES_DEG)
    }

    #[test]
    fn wilson_matches_reference_values() {
        let close = |a: (f64, f64), b: (f64, f64)| {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12, "{a:?} vs {b:?}");
        };
        close(wilson_interval(30, 100, 1.96), (0.21894753866228117, 0.39585038432811953));
        close(wilson_interval(0, 50, 5.0), (0.0, 0.33333333333333337));
        close(wilson_interval(50, 50, 5.0), (0.6666666666666667, 1.0));
        close(wilson_interval(750, 1000, 5.0), (0.6760028736240241, 0.8118020044247564));
    }

    #[test]
    fn two_prop_z_matches_reference_values() {
        assert!((two_prop_z(900, 1000, 100, 1000) - 35.77708763999664).abs() < 1e-12);
        assert!((two_prop_z(55, 100, 45, 100) - 1.4142135623730956).abs() < 1e-12);
        assert_eq!(two_prop_z(0, 100, 0, 50), 0.0);
        assert_eq!(two_prop_z(10, 0, 5, 10), 0.0);
    }

    #[test]
    fn estimate_joint_counts_and_normalizes() {
        let log = log(vec![
            t(0, A, B, Plus, Minus),
            t(1, A, B, Plus, Minus),
            t(2, A, B, Minus, Plus),
            t(3, A, B, Plus, Plus),
        ]);
        let joint = estimate_joint(&log).unwrap();
        joint.validate().unwrap();
        let cell = joint.pair(A, B).unwrap();
        assert_eq!(cell.n, 4);
        assert_eq!(cell.counts.unwrap(), [[1, 2], [1, 0]]);
        assert_eq!(cell.p[0][1], 0.5);
        assert!(joint.pair(C, C).is_none());
    }

    #[test]
    fn estimate_joint_rejects_empty_logs() {
        assert!(matches!(estimate_joint(&log(vec![])), Err(AnalysisError::EmptyLog)));
    }

    #[test]
    fn perfect_agreement_is_satisfied_exactly() {
        let log = log(vec![
            t(0, A, A, Plus, Plus),
            t(1, B, B, Minus, Minus),
            t(2, A, B, Plus, Minus),
        ]);
        let report = same_setting_agreement(&log, 5.0).unwrap();
        assert_eq!(report.rate, 1.0);
        assert_eq!(report.n_same, 2);
        assert_eq!(report.verdict.status, VerdictStatus::Satisfied);
    }

    #[test]
    fn imperfect_agreement_scales_with_evidence() {
        // 3 of 6 agree: far from 1, but six trials cannot clear z = 5.
        let few = log(vec![
            t(0, A, A, Plus, Plus),
            t(1, A, A, Plus, Minus),
            t(2, B, B, Minus, Minus),
            t(3, B, B, Minus, Plus),
            t(4, C, C, Plus, Plus),
            t(5, C, C, Plus, Minus),
        ]);
        let report = same_setting_agreement(&few, 5.0).unwrap();
        assert_eq!(report.verdict.status, VerdictStatus::Inconclusive);

        // Same rate over 600 trials is decisive.
        let mut trials = Vec::new();
        for i in 0..600 {
            let o2 = if i % 2 == 0 { Plus } else { Minus };
            trials.push(t(i, A, A, Plus, o2));
        }
        let report = same_setting_agreement(&log(trials), 5.0).unwrap();
        assert_eq!(report.verdict.status, VerdictStatus::Violated);
        assert!((report.rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn agreement_requires_same_setting_trials() {
        let log = log(vec![t(0, A, B, Plus, Plus)]);
        assert!(matches!(
            same_setting_agreement(&log, 5.0),
            Err(AnalysisError::NoSameSettingTrials)
        ));
    }

    #[test]
    fn p_diff_counts_mismatches() {
        let log = log(vec![
            t(0, A, B, Plus, Minus),
            t(1, B, C, Plus, Plus),
            t(2, C, A, Minus, Plus),
            t(3, A, A, Plus, Plus),
        ]);
        let report = p_diff(&log, 5.0).unwrap();
        assert_eq!(report.n_diff, 3);
        assert_eq!(report.mismatches, 2);
        assert!((report.estimate - 2.0 / 3.0).abs() < 1e-15);
        assert!(report.interval.0 < report.estimate && report.estimate < report.interval.1);
    }

    #[test]
    fn p_diff_requires_different_setting_trials() {
        let log = log(vec![t(0, A, A, Plus, Plus)]);
        assert!(matches!(p_diff(&log, 5.0), Err(AnalysisError::NoDifferentSettingTrials)));
    }

    #[test]
    fn eq7_on_counts_is_bit_identical_to_direct_estimate() {
        let log = log(vec![
            t(0, A, B, Plus, Minus),
            t(1, A, B, Plus, Plus),
            t(2, B, C, Minus, Plus),
            t(3, C, A, Minus, Minus),
            t(4, B, A, Plus, Minus),
            t(5, A, A, Plus, Plus),
            t(6, C, B, Plus, Minus),
        ]);
        let direct = p_diff(&log, 5.0).unwrap().estimate;
        let joint = estimate_joint(&log).unwrap();
        let weights = empirical_pair_weights(&joint);
        let indirect = p_diff_via_eq7(&joint, &weights).unwrap();
        assert_eq!(direct.to_bits(), indirect.to_bits());
    }

    #[test]
    fn eq7_uniform_weights_on_analytic_quantum_joint() {
        let strategy = Strategy::Quantum;
        let table = strategy.conditional_table(&settings()).unwrap();
        let joint = table.marginal_joint().to_float();
        let value = p_diff_via_eq7(&joint, &uniform_pair_weights()).unwrap();
        assert_eq!(value, 0.75);
    }

    #[test]
    fn eq7_rejects_zero_weights() {
        let strategy = Strategy::Quantum;
        let joint = strategy
            .conditional_table(&settings())
            .unwrap()
            .marginal_joint()
            .to_float();
        let weights = [[0.0; 3]; 3];
        assert!(matches!(
            p_diff_via_eq7(&joint, &weights),
            Err(AnalysisError::ZeroWeight)
        ));
    }

    #[test]
    fn threefilter_test_is_inconclusive_below_floor() {
        let trials: Vec<Trial> =
            (0..50).map(|i| t(i, A, B, Plus, Minus)).collect();
        let verdict = bell_threefilter_test(&log(trials), 5.0);
        assert_eq!(verdict.status, VerdictStatus::Inconclusive);
        assert_eq!(verdict.n_effective, 50);
    }

    #[test]
    fn threefilter_test_detects_low_match_rates() {
        // 10 matches out of 200 different-setting trials.
        let mut trials = Vec::new();
        for i in 0..200 {
            let o2 = if i < 10 { Plus } else { Minus };
            trials.push(t(i, A, B, Plus, o2));
        }
        let verdict = bell_threefilter_test(&log(trials), 5.0);
        assert_eq!(verdict.status, VerdictStatus::Violated);
        assert!(verdict.z_score > 5.0);
    }

    #[test]
    fn threefilter_test_accepts_high_match_rates() {
        let mut trials = Vec::new();
        for i in 0..200 {
            let o2 = if i < 150 { Plus } else { Minus };
            trials.push(t(i, A, B, Plus, o2));
        }
        let verdict = bell_threefilter_test(&log(trials), 5.0);
        assert_eq!(verdict.status, VerdictStatus::Satisfied);
        assert!(verdict.z_score < -5.0);
    }

    #[test]
    fn original_test_violated_on_analytic_quantum_joint() {
        let joint = Strategy::Quantum
            .conditional_table(&settings())
            .unwrap()
            .marginal_joint()
            .to_float();
        let verdict = bell_original_test(&joint, 5.0);
        assert_eq!(verdict.status, VerdictStatus::Violated);
        assert!((verdict.statistic - 1.125).abs() < 1e-12);
    }

    #[test]
    fn original_test_satisfied_on_plan_tables() {
        for spec in ["plan:+++", "plan:++-", "mixture:uniform"] {
            let strategy: Strategy = spec.parse().unwrap();
            let joint =
                strategy.conditional_table(&settings()).unwrap().marginal_joint().to_float();
            let verdict = bell_original_test(&joint, 5.0);
            assert_eq!(verdict.status, VerdictStatus::Satisfied, "{spec}");
            assert!(verdict.statistic <= 1.0, "{spec}: {}", verdict.statistic);
        }
    }

    #[test]
    fn original_test_inconclusive_when_pairs_missing() {
        let mut joint = JointDistribution::new();
        joint.set_pair(A, B, PairCell::from_counts([[5, 5], [5, 5]]));
        let verdict = bell_original_test(&joint, 5.0);
        assert_eq!(verdict.status, VerdictStatus::Inconclusive);
    }

    #[test]
    fn no_signaling_flags_remote_dependence() {
        // Wing 2 answers Plus iff wing 1's setting is A.
        let mut trials = Vec::new();
        for i in 0..900 {
            let s1 = SettingLabel::ALL[(i % 3) as usize];
            let s2 = SettingLabel::ALL[((i / 3) % 3) as usize];
            let o2 = if s1 == A { Plus } else { Minus };
            trials.push(t(i, s1, s2, Plus, o2));
        }
        let report = no_signaling_test(&log(trials), 5.0).unwrap();
        assert_eq!(report.wing2.status, VerdictStatus::Violated);
        assert_eq!(report.wing1.status, VerdictStatus::Satisfied);
        assert_eq!(report.overall().status, VerdictStatus::Violated);
        assert_eq!(report.comparisons, 18);
    }

    #[test]
    fn no_signaling_skips_and_reports_missing_cells() {
        // Wing 1 never sees setting C on the remote side.
        let mut trials = Vec::new();
        for i in 0..300 {
            let s1 = SettingLabel::ALL[(i % 3) as usize];
            let s2 = if i % 2 == 0 { A } else { B };
            trials.push(t(i, s1, s2, Plus, Minus));
        }
        let report = no_signaling_test(&log(trials), 5.0).unwrap();
        assert!(report.skipped > 0);
        assert_eq!(report.wing1.status, VerdictStatus::Inconclusive);
    }

    #[test]
    fn factorization_verdicts_per_strategy() {
        let zero = Rat::zero();
        let s = settings();
        let check = |spec: &str| {
            let strategy: Strategy = spec.parse().unwrap();
            factorization_check(&strategy.conditional_table(&s).unwrap(), &zero)
        };
        assert!(check("mixture:uniform").factorizes);
        assert!(check("plan:+-+").factorizes);
        assert!(check("local-stochastic:0.5").factorizes);
        let quantum = check("quantum");
        assert!(!quantum.factorizes);
        // Same-setting cell: p(++) = 1/2 but the marginal product is 1/4.
        assert_eq!(quantum.max_deviation, rat(1, 4));
        assert!(!check("nonlocal-det").factorizes);
        assert!(!check("signaling").factorizes);
    }

    #[test]
    fn jarrett_matrix_per_strategy() {
        let zero = Rat::zero();
        let s = settings();
        let decompose = |spec: &str| {
            let strategy: Strategy = spec.parse().unwrap();
            let report = jarrett_decompose(&strategy.conditional_table(&s).unwrap(), &zero);
            (report.parameter_independent, report.outcome_independent)
        };
        assert_eq!(decompose("quantum"), (true, false));
        assert_eq!(decompose("nonlocal-det"), (false, true));
        assert_eq!(decompose("mixture:uniform"), (true, true));
        assert_eq!(decompose("plan:++-"), (true, true));
        assert_eq!(decompose("local-stochastic:0.3"), (true, true));
        assert_eq!(decompose("signaling"), (false, true));
    }

    #[test]
    fn jarrett_conjunction_equals_factorization() {
        let zero = Rat::zero();
        let s = settings();
        for spec in [
            "plan:+-+",
            "mixture:uniform",
            "mixture:1/2,0,0,0,0,0,0,1/2",
            "local-stochastic:0.5",
            "quantum",
            "nonlocal-det",
            "signaling",
        ] {
            let strategy: Strategy = spec.parse().unwrap();
            let table = strategy.conditional_table(&s).unwrap();
            let f = factorization_check(&table, &zero);
            let j = jarrett_decompose(&table, &zero);
            assert_eq!(
                f.factorizes,
                j.parameter_independent && j.outcome_independent,
                "{spec}"
            );
        }
    }

    #[test]
    fn signal_locality_from_averaged_marginals() {
        let s = settings();
        let flags = |spec: &str| {
            let strategy: Strategy = spec.parse().unwrap();
            white_box_flags(&strategy.conditional_table(&s).unwrap())
        };
        assert!(flags("quantum").signal_local);
        assert!(flags("nonlocal-det").signal_local);
        assert!(flags("mixture:uniform").signal_local);
        assert!(!flags("signaling").signal_local);
    }

    fn satisfied_verdict() -> Verdict {
        Verdict {
            status: VerdictStatus::Satisfied,
            statistic: 1.0,
            z_score: 1.0,
            threshold_z: 5.0,
            n_effective: 1000,
        }
    }

    #[test]
    fn classifier_regions_per_strategy() {
        let s = settings();
        let ns = satisfied_verdict();
        let region = |spec: &str| {
            let strategy: Strategy = spec.parse().unwrap();
            let flags = white_box_flags(&strategy.conditional_table(&s).unwrap());
            classify(&strategy.kind(), Some(&flags), &ns).region
        };
        assert_eq!(region("mixture:uniform"), Region::StrongLocalDeterministic);
        assert_eq!(region("plan:+++"), Region::StrongLocalDeterministic);
        assert_eq!(region("local-stochastic:0.5"), Region::StrongLocalIndeterministic);
        assert_eq!(region("quantum"), Region::NonlocalIndetNonSignaling);
        assert_eq!(region("nonlocal-det"), Region::NonlocalDetNonSignaling);
        assert_eq!(region("signaling"), Region::SignalingCapable);
    }

    #[test]
    fn classifier_records_empirical_disagreement() {
        let s = settings();
        let strategy = Strategy::Quantum;
        let flags = white_box_flags(&strategy.conditional_table(&s).unwrap());
        let violated = Verdict {
            status: VerdictStatus::Violated,
            statistic: 9.0,
            z_score: 9.0,
            threshold_z: 5.0,
            n_effective: 100,
        };
        let report = classify(&strategy.kind(), Some(&flags), &violated);
        assert_eq!(report.region, Region::NonlocalIndetNonSignaling);
        assert!(!report.notes.is_empty());
        assert!(!report.partial);
    }

    #[test]
    fn classifier_falls_back_to_kind_without_a_table() {
        let strategy = Strategy::Quantum;
        let report = classify(&strategy.kind(), None, &satisfied_verdict());
        assert_eq!(report.region, Region::NonlocalIndetNonSignaling);
        assert!(report.partial);
        assert_eq!(report.strongly_local, None);
    }

    #[test]
    fn data_only_classification_heuristics() {
        let agreement = AgreementReport {
            rate: 1.0,
            n_same: 100,
            verdict: satisfied_verdict(),
        };
        let bell_sat = satisfied_verdict();
        let bell_vio = Verdict {
            status: VerdictStatus::Violated,
            statistic: 0.25,
            z_score: 50.0,
            threshold_z: 5.0,
            n_effective: 1000,
        };
        let ns_sat = satisfied_verdict();
        let report = classify_from_data(&agreement, &bell_sat, &ns_sat);
        assert_eq!(report.region, Region::StrongLocalDeterministic);
        assert!(report.partial);
        let report = classify_from_data(&agreement, &bell_vio, &ns_sat);
        assert_eq!(report.region, Region::NonlocalIndetNonSignaling);
        let ns_vio = Verdict {
            status: VerdictStatus::Violated,
            statistic: 30.0,
            z_score: 30.0,
            threshold_z: 5.0,
            n_effective: 1000,
        };
        let report = classify_from_data(&agreement, &bell_vio, &ns_vio);
        assert_eq!(report.region, Region::SignalingCapable);
    }

    #[test]
    fn report_json_has_contract_keys() {
        let trials = vec![
            t(0, A, A, Plus, Plus),
            t(1, A, B, Plus, Minus),
            t(2, B, C, Minus, Plus),
            t(3, C, A, Minus, Minus),
            t(4, B, B, Plus, Plus),
            t(5, C, C, Minus, Minus),
        ];
        let report = analyze(&log(trials), None, &settings(), 5.0).unwrap();
        let json = report.to_json();
        for key in [
            "joint",
            "same_setting_agreement",
            "p_diff",
            "bell_threefilter",
            "bell_original",
            "no_signaling",
            "classification",
            "config_digest",
            "seed",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
        assert!(json["p_diff"]["interval"].is_array());
        assert!(json["no_signaling"]["comparisons"].is_number());
        assert!(json["classification"]["region"].is_string());
        // Serialization is deterministic.
        assert_eq!(json.to_string(), report.to_json().to_string());
    }
}
