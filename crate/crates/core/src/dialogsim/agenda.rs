use super::policy::pick;
use super::{Agenda, DialogError, Goal, SimPolicy};
use crate::ontology::ApiName;
use crate::seed::rng_from_seed;
use crate::simapi::SessionState;

/// Draws an agenda. The first goal is always SEARCH.
pub fn sample_agenda(policy: &SimPolicy, seed: u64) -> Agenda {
    let mut rng = rng_from_seed(seed);
    let len = pick(&mut rng, &policy.agenda_length);
    let mut goals = vec![Goal::new(ApiName::Search)];
    while goals.len() < len {
        goals.push(Goal::new(pick(&mut rng, &policy.goal_weights)));
    }
    Agenda { goals, seed }
}

pub fn goal_legal(goal: ApiName, session: &SessionState) -> Result<(), DialogError> {
    match goal {
        ApiName::Search => Ok(()),
        ApiName::RefineSearch if session.last_search_parameters.is_empty() => {
            Err(DialogError::IllegalGoal { goal, reason: "no prior search" })
        }
        ApiName::GetInfo | ApiName::GetRelated | ApiName::Share if session.shown_memories.is_empty() => {
            Err(DialogError::IllegalGoal { goal, reason: "no memories shown yet" })
        }
        _ => Ok(()),
    }
}
