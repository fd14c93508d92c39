use std::collections::BTreeMap;

use rand::Rng;

use super::{
    assistant_step, realize, sample_agenda, user_step, AssistantOutcome, Dialog, DialogError, SimPolicy, Speaker,
    TemplateLibrary, Turn, UserAction, Utterance,
};
use crate::memgraph::MemoryGraph;
use crate::ontology::flatten_frame;
use crate::ontology::{ApiName, DialogAct, Frame, Intent, IntentActivity};
use crate::seed::{derive_seed, rng_from_seed, SimRng};
use crate::simapi::{attributes_of, ApiResult, Engine, EngineConfig, Relation, SessionState};

const MAX_FOLLOWUPS: usize = 2;

/// Runs dialogs over one graph.
pub struct Simulator<'a, 'g> {
    engine: Engine<'g>,
    policy: &'a SimPolicy,
    templates: &'a TemplateLibrary,
}

struct Transcript<'s, 'a, 'g> {
    sim: &'s Simulator<'a, 'g>,
    text_rng: SimRng,
    turns: Vec<Turn>,
}

impl Transcript<'_, '_, '_> {
    fn user(
        &mut self,
        frame: Frame,
        api: Option<ApiName>,
        key_api: Option<ApiName>,
        relation: Option<Relation>,
        result: Option<&ApiResult>,
    ) -> Result<(), DialogError> {
        let u = Utterance { speaker: Speaker::User, frame: &frame, api: key_api, relation, result };
        let text = realize(&u, self.sim.templates, &mut self.text_rng)?;
        self.turns.push(Turn {
            index: self.turns.len(),
            speaker: Speaker::User,
            template_utterance: text,
            paraphrase: None,
            annotation: flatten_frame(&frame, api),
            frame,
            api,
            api_call: None,
            api_result: None,
            shown_memory_ids: Vec::new(),
        });
        Ok(())
    }

    fn assistant(&mut self, out: AssistantOutcome) -> Result<(), DialogError> {
        let u = Utterance {
            speaker: Speaker::Assistant,
            frame: &out.frame,
            api: out.api,
            relation: out.call.as_ref().and_then(|c| c.relation),
            result: out.result.as_ref(),
        };
        let text = realize(&u, self.sim.templates, &mut self.text_rng)?;
        self.turns.push(Turn {
            index: self.turns.len(),
            speaker: Speaker::Assistant,
            template_utterance: text,
            paraphrase: None,
            annotation: flatten_frame(&out.frame, out.api),
            frame: out.frame,
            api: out.api,
            api_call: out.call,
            api_result: out.result,
            shown_memory_ids: out.shown,
        });
        Ok(())
    }
}

fn retryable(e: &DialogError) -> bool {
    matches!(e, DialogError::DrawFailed { .. } | DialogError::IllegalGoal { .. } | DialogError::Api(_))
}

impl<'a, 'g> Simulator<'a, 'g> {
    pub fn new(
        graph: &'g MemoryGraph,
        policy: &'a SimPolicy,
        templates: &'a TemplateLibrary,
        config: EngineConfig,
    ) -> Self {
        Self { engine: Engine::new(graph, config), policy, templates }
    }

    pub fn engine(&self) -> &Engine<'g> {
        &self.engine
    }

    /// Generates one dialog. Draws that dead-end are retried with the next seed.
    pub fn run_dialog(&self, dialog_id: impl Into<String>, seed: u64) -> Result<Dialog, DialogError> {
        let dialog_id = dialog_id.into();
        for advance in 0..=self.policy.max_seed_advances {
            match self.attempt(seed.wrapping_add(u64::from(advance))) {
                Ok(mut d) => {
                    d.dialog_id = dialog_id;
                    d.seed = seed;
                    d.regenerations = advance;
                    return Ok(d);
                }
                Err(e) if retryable(&e) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(DialogError::Exhausted(self.policy.max_seed_advances + 1))
    }

    fn attempt(&self, seed: u64) -> Result<Dialog, DialogError> {
        let agenda = sample_agenda(self.policy, seed);
        let mut rng = rng_from_seed(derive_seed(seed, 1));
        let mut t = Transcript { sim: self, text_rng: rng_from_seed(derive_seed(seed, 2)), turns: Vec::new() };
        let mut session = SessionState::default();
        let engine = &self.engine;
        for goal in &agenda.goals {
            let mut reps = 1;
            while reps <= MAX_FOLLOWUPS && rng.random_bool(self.policy.p_followup) {
                reps += 1;
            }
            for _ in 0..reps {
                let action = user_step(self.policy, goal.kind, &session, engine, &mut rng)?;
                let key_api = self.policy.resolve_api(&action.frame, action.relation);
                let out = assistant_step(&action, None, &mut session, engine, self.policy)?;
                if out.call.is_some() {
                    t.user(action.frame.clone(), out.api, key_api, action.relation, None)?;
                    t.assistant(out)?;
                    continue;
                }
                t.user(action.frame.clone(), None, key_api, action.relation, None)?;
                t.assistant(out)?;
                let mut frame = Frame::new(Intent::new(DialogAct::Inform, IntentActivity::Disambiguate));
                frame.memory_refs = action.intended_refs.clone();
                let answer = UserAction {
                    goal: goal.kind,
                    frame,
                    relation: None,
                    intended_refs: action.intended_refs.clone(),
                };
                let described = answer
                    .intended_refs
                    .iter()
                    .filter_map(|id| engine.index().memory(*id))
                    .map(|m| (m.memory_id, attributes_of(engine.index(), m)))
                    .collect::<BTreeMap<_, _>>();
                let described = ApiResult::new(described.keys().copied().collect(), described);
                let out = assistant_step(&answer, Some(&action), &mut session, engine, self.policy)?;
                t.user(answer.frame, out.api, None, None, Some(&described))?;
                t.assistant(out)?;
            }
        }
        Ok(Dialog {
            dialog_id: String::new(),
            graph_id: engine.graph().graph_id.clone(),
            seed,
            regenerations: 0,
            agenda,
            turns: t.turns,
        })
    }
}

/// Runs one dialog with the bundled templates and default engine settings.
pub fn run_dialog(graph: &MemoryGraph, policy: &SimPolicy, seed: u64) -> Result<Dialog, DialogError> {
    let templates = TemplateLibrary::default();
    Simulator::new(graph, policy, &templates, EngineConfig::default()).run_dialog(format!("dialog-{seed:016x}"), seed)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayMismatch {
    pub turn: usize,
    pub detail: String,
}

/// Re-executes every logged call in order and compares with the logged results.
pub fn replay(dialog: &Dialog, graph: &MemoryGraph, config: EngineConfig) -> Result<(), ReplayMismatch> {
    let engine = Engine::new(graph, config);
    let mut session = SessionState::default();
    for turn in &dialog.turns {
        let Some(call) = &turn.api_call else { continue };
        let got = engine
            .execute(&mut session, call)
            .map_err(|e| ReplayMismatch { turn: turn.index, detail: e.to_string() })?;
        if turn.api_result.as_ref() != Some(&got) {
            return Err(ReplayMismatch { turn: turn.index, detail: format!("result differs: {got:?}") });
        }
    }
    Ok(())
}
