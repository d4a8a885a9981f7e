//! The two evaluations: responsible level against random training levels,
//! compared on the local overlap ratio with either the agent's next action
//! (explainability) or the D-state of a contradicted human decision
//! (labeling errors).

mod labels;
mod report;

pub use labels::{build_icd, detect_label_errors, ExampleKey, LabelErrorExample};
pub use report::{
    EvalKind, EvalReport, ExampleTrace, KindTally, LabelTrace, SkippedExample, Tally, WinRule,
    REPORT_SCHEMA, REPORT_VERSION,
};

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::attribution::{
    training_fingerprint, Attribution, AttributionError, Explainer, SliceNorm,
};
use crate::neuralnet::{ConvLayer, SavedModel};
use crate::overlap::{local_overlap_ratio, OverlapError};
use crate::sessionlog::{
    build_training_set, sessions_to_string, Actor, LabelErrorKind, Session, SessionError,
};
use crate::tilegrid::{changeset_to_grid, ChangeSet, Legend, TileGrid};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need {needed} training levels besides the responsible one, have {available}")]
    NotEnoughTrainingLevels { needed: usize, available: usize },
    #[error("no test action adds more than {0} components")]
    NoEligibleInstances(usize),
    #[error("the test corpus contains no contradicted decisions")]
    NoExamplesFound,
    #[error("inconsistent label error example: {0}")]
    InconsistentExample(String),
    #[error(
        "training corpus does not match the run: expected fingerprint {expected}, got {found}"
    )]
    FingerprintMismatch { expected: String, found: String },
    #[error(transparent)]
    Attribution(#[from] AttributionError),
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub n_random: usize,
    /// Explainability only: actions must add strictly more components.
    pub min_added: usize,
    pub seed: u64,
    pub win_rule: WinRule,
    pub layer: ConvLayer,
    pub norm: SliceNorm,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            n_random: 20,
            min_added: 10,
            seed: 0,
            win_rule: WinRule::Mean,
            layer: ConvLayer::Conv1,
            norm: SliceNorm::L1,
        }
    }
}

/// Hex SHA-256 of a corpus in its session-log form.
pub fn corpus_fingerprint(sessions: &[Session]) -> String {
    hex::encode(Sha256::digest(sessions_to_string(sessions).as_bytes()))
}

/// Model, attribution and training corpus, verified to come from one run.
struct Context<'a> {
    explainer: Explainer<'a>,
    train: &'a [Session],
    opts: &'a EvalOptions,
    fingerprint: String,
}

impl<'a> Context<'a> {
    fn new(
        model: &'a SavedModel,
        attribution: &'a Attribution,
        train: &'a [Session],
        opts: &'a EvalOptions,
    ) -> Result<Self, EvalError> {
        let instances = build_training_set(train)?;
        let found = training_fingerprint(model.params.config(), model.meta.epochs, &instances);
        if found != attribution.fingerprint {
            return Err(EvalError::FingerprintMismatch {
                expected: attribution.fingerprint.clone(),
                found,
            });
        }
        let distinct: HashSet<&str> = train.iter().map(|s| s.session_id.as_str()).collect();
        let available = distinct.len().saturating_sub(1);
        if available < opts.n_random || opts.n_random == 0 {
            return Err(EvalError::NotEnoughTrainingLevels {
                needed: opts.n_random.max(1),
                available,
            });
        }
        let explainer = Explainer::new(model, attribution, train)?
            .with_layer(opts.layer)
            .with_norm(opts.norm);
        Ok(Self {
            explainer,
            train,
            opts,
            fingerprint: attribution.fingerprint.clone(),
        })
    }

    /// Explains `state` and scores the responsible level and `n_random`
    /// other training levels against `target`. Random draws come from the
    /// substream `example_index` of the seeded generator.
    fn score(
        &self,
        example_index: u64,
        session_id: &str,
        turn_index: usize,
        state: &TileGrid,
        target: &TileGrid,
        components: usize,
    ) -> Result<Result<ExampleTrace, SkippedExample>, EvalError> {
        let skip = |reason: String| {
            Ok(Err(SkippedExample {
                session_id: session_id.to_string(),
                turn_index,
                reason,
            }))
        };
        let exp = self.explainer.explain(state)?;
        let responsible_ratio = match local_overlap_ratio(&exp.responsible_level, target) {
            Ok(r) => r.ratio,
            Err(OverlapError::EmptyAction) => return skip("no non-empty patch to compare".into()),
            Err(e) => return skip(e.to_string()),
        };
        let pool: Vec<&Session> = self
            .train
            .iter()
            .filter(|s| s.session_id != exp.session_id)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        rng.set_stream(example_index);
        let picks = rand::seq::index::sample(&mut rng, pool.len(), self.opts.n_random);
        let mut random_sessions = Vec::with_capacity(self.opts.n_random);
        let mut random_ratios = Vec::with_capacity(self.opts.n_random);
        for i in picks.iter() {
            let s = pool[i];
            let r = match local_overlap_ratio(&s.final_level, target) {
                Ok(r) => r.ratio,
                Err(e) => return skip(e.to_string()),
            };
            random_sessions.push(s.session_id.clone());
            random_ratios.push(r);
        }
        let baseline = self.opts.win_rule.baseline(&random_ratios);
        Ok(Ok(ExampleTrace {
            session_id: session_id.to_string(),
            turn_index,
            label: None,
            components,
            responsible_instance: exp.instance_id,
            responsible_session: exp.session_id,
            filter_index: exp.filter_index,
            modal_count: exp.modal_count,
            responsible_ratio,
            random_sessions,
            random_ratios,
            baseline,
            win: responsible_ratio > baseline,
        }))
    }

    fn report(
        &self,
        evaluation: EvalKind,
        test: &[Session],
        traces: Vec<ExampleTrace>,
        skipped: Vec<SkippedExample>,
        by_kind: Vec<KindTally>,
    ) -> EvalReport {
        let all = Tally::of(&traces);
        EvalReport {
            schema: REPORT_SCHEMA.to_string(),
            version: REPORT_VERSION,
            evaluation,
            seed: self.opts.seed,
            n_random: self.opts.n_random,
            min_added: self.opts.min_added,
            win_rule: self.opts.win_rule,
            train_fingerprint: self.fingerprint.clone(),
            test_fingerprint: corpus_fingerprint(test),
            eligible_count: all.count,
            win_count: all.wins,
            win_rate: all.win_rate,
            mean_responsible_ratio: all.mean_responsible_ratio,
            mean_random_ratio: all.mean_random_ratio,
            by_kind,
            skipped,
            traces,
        }
    }
}

/// For every test AGENT turn adding more than `min_added` components: does
/// the level explaining the state before the turn overlap the turn's
/// additions more than random training levels do?
pub fn explainability_eval(
    model: &SavedModel,
    attribution: &Attribution,
    sessions_train: &[Session],
    sessions_test: &[Session],
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    let ctx = Context::new(model, attribution, sessions_train, opts)?;
    let mut traces = Vec::new();
    let mut skipped = Vec::new();
    let mut index = 0u64;
    for s in sessions_test {
        let snaps = s.snapshots()?;
        for (k, turn) in s.turns.iter().enumerate() {
            if turn.actor != Actor::Agent {
                continue;
            }
            let additions: Vec<_> = turn.changes.additions().copied().collect();
            if additions.len() <= opts.min_added {
                continue;
            }
            let cs = ChangeSet::new(additions).expect("subset of a valid change set");
            let action = changeset_to_grid(&cs, s.final_level.width(), s.final_level.height())
                .map_err(|e| EvalError::InconsistentExample(e.to_string()))?;
            match ctx.score(index, &s.session_id, k, &snaps[k], &action, cs.len())? {
                Ok(t) => traces.push(t),
                Err(sk) => skipped.push(sk),
            }
            index += 1;
        }
    }
    if traces.is_empty() && skipped.is_empty() {
        return Err(EvalError::NoEligibleInstances(opts.min_added));
    }
    Ok(ctx.report(
        EvalKind::Explainability,
        sessions_test,
        traces,
        skipped,
        Vec::new(),
    ))
}

/// For every contradicted decision in the test corpus: does the level
/// explaining the I-state overlap the D-state more than random training
/// levels do? Empty D-states are skipped and listed.
pub fn labeling_error_eval(
    model: &SavedModel,
    attribution: &Attribution,
    sessions_train: &[Session],
    sessions_test: &[Session],
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    let ctx = Context::new(model, attribution, sessions_train, opts)?;
    let legend = Legend::standard();
    let mut traces = Vec::new();
    let mut skipped = Vec::new();
    let mut found = 0usize;
    let mut index = 0u64;
    for s in sessions_test {
        for ex in detect_label_errors(s)? {
            found += 1;
            let this = index;
            index += 1;
            if ex.d_state.is_empty() {
                log::warn!(
                    "{} ({},{}): empty D-state, skipped",
                    ex.session_id,
                    ex.x,
                    ex.y
                );
                skipped.push(SkippedExample {
                    session_id: ex.session_id.clone(),
                    turn_index: ex.intro_turn,
                    reason: "empty D-state".into(),
                });
                continue;
            }
            let target =
                changeset_to_grid(&ex.d_state, s.final_level.width(), s.final_level.height())
                    .map_err(|e| EvalError::InconsistentExample(e.to_string()))?;
            match ctx.score(
                this,
                &s.session_id,
                ex.intro_turn,
                &ex.i_state,
                &target,
                ex.d_state.len(),
            )? {
                Ok(mut t) => {
                    t.label = Some(LabelTrace {
                        kind: ex.kind,
                        x: ex.x,
                        y: ex.y,
                        tile: legend.glyph(ex.tile).to_string(),
                        contradiction_turn: ex.contradiction_turn,
                    });
                    traces.push(t);
                }
                Err(sk) => skipped.push(sk),
            }
        }
    }
    if found == 0 {
        return Err(EvalError::NoExamplesFound);
    }
    let by_kind = [LabelErrorKind::FalsePositive, LabelErrorKind::FalseNegative]
        .into_iter()
        .map(|kind| KindTally {
            kind,
            tally: Tally::of(
                traces
                    .iter()
                    .filter(|t| t.label.as_ref().is_some_and(|l| l.kind == kind)),
            ),
        })
        .collect();
    Ok(ctx.report(
        EvalKind::LabelingError,
        sessions_test,
        traces,
        skipped,
        by_kind,
    ))
}
