use super::{DialogError, SimPolicy, UserAction};
use crate::memgraph::MemoryId;
use crate::ontology::{ApiName, DialogAct, Frame, Intent, IntentActivity, SlotValue};
use crate::simapi::{ApiCall, ApiResult, Engine, Parameters, SessionState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssistantOutcome {
    pub api: Option<ApiName>,
    pub call: Option<ApiCall>,
    pub result: Option<ApiResult>,
    /// NLG frame of the assistant reply.
    pub frame: Frame,
    /// Memories displayed with the reply.
    pub shown: Vec<MemoryId>,
}

fn needs_refs(api: ApiName) -> bool {
    matches!(api, ApiName::GetInfo | ApiName::GetRelated | ApiName::Share)
}

fn text_params(engine: &Engine<'_>, frame: &Frame) -> Result<Parameters, DialogError> {
    frame
        .slots
        .iter()
        .map(|(slot, value)| Ok((*slot, SlotValue::text(engine.resolve_slot(*slot, value)?))))
        .collect()
}

/// Answers a user move. An answer to a disambiguation question completes the
/// `pending` move with the references it supplies.
pub fn assistant_step(
    action: &UserAction,
    pending: Option<&UserAction>,
    session: &mut SessionState,
    engine: &Engine<'_>,
    policy: &SimPolicy,
) -> Result<AssistantOutcome, DialogError> {
    let resolved;
    let action = if action.frame.intent.activity == IntentActivity::Disambiguate {
        let mut p = pending.ok_or(DialogError::NothingPending)?.clone();
        p.frame.memory_refs = action.frame.memory_refs.clone();
        resolved = p;
        &resolved
    } else {
        action
    };
    let frame = &action.frame;
    let api = policy
        .resolve_api(frame, action.relation)
        .ok_or(DialogError::NoApiRule(frame.intent))?;
    if needs_refs(api) && frame.memory_refs.is_empty() {
        return Ok(AssistantOutcome {
            api: None,
            call: None,
            result: None,
            frame: Frame::new(Intent::new(DialogAct::Ask, IntentActivity::Disambiguate)),
            shown: Vec::new(),
        });
    }

    let mut call = ApiCall::new(api);
    call.parameters = text_params(engine, frame)?;
    if needs_refs(api) {
        call.memory_refs = frame.memory_refs.clone();
    }
    if api == ApiName::GetInfo {
        call.request_slots = frame.request_slots.clone();
    }
    if api == ApiName::GetRelated {
        call.relation = action.relation;
    }
    let result = engine.execute(session, &call)?;

    let inform = |activity| Frame::new(Intent::new(DialogAct::Inform, activity));
    let mut nlg = match api {
        ApiName::Search | ApiName::GetRelated => {
            let mut f = inform(IntentActivity::Get);
            f.slots = call.parameters.clone();
            f
        }
        ApiName::RefineSearch => {
            let mut f = inform(IntentActivity::Refine);
            f.slots = session.last_search_parameters.clone();
            f
        }
        ApiName::GetInfo => {
            let mut f = inform(IntentActivity::Get);
            if let Some((_, attrs)) = result.attributes.iter().next() {
                f.slots = attrs.iter().map(|(s, v)| (*s, SlotValue::text(v.clone()))).collect();
            }
            f.memory_refs = call.memory_refs.clone();
            f
        }
        ApiName::Share => {
            let mut f = inform(IntentActivity::Share);
            f.memory_refs = call.memory_refs.clone();
            f
        }
    };
    if matches!(api, ApiName::Search | ApiName::RefineSearch | ApiName::GetRelated) {
        nlg.memory_refs.extend(result.memories.first().copied());
    }
    let shown = if api == ApiName::GetInfo { Vec::new() } else { result.memories.clone() };
    Ok(AssistantOutcome { api: Some(api), call: Some(call), result: Some(result), frame: nlg, shown })
}
