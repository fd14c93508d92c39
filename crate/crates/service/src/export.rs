use std::collections::BTreeMap;

use memdialog_core::corpus::Corpus;
use thiserror::Error;

use crate::types::{TaskState, TaskStatus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("store has a task for {0}, which is not in the corpus")]
    UnknownDialog(String),
    #[error("task {dialog_id} has a paraphrase for turn {index} but the dialog has {turns} turns")]
    TurnMismatch { dialog_id: String, index: usize, turns: usize },
}

/// Copies stored paraphrases into the corpus and drops reported dialogs.
pub fn export_annotated(corpus: &Corpus, tasks: &BTreeMap<String, TaskState>) -> Result<Corpus, ExportError> {
    if let Some(id) = tasks.keys().find(|id| !corpus.dialogs.iter().any(|d| &&d.dialog_id == id)) {
        return Err(ExportError::UnknownDialog(id.clone()));
    }
    let mut out = corpus.clone();
    out.dialogs.retain(|d| tasks.get(&d.dialog_id).is_none_or(|t| t.status != TaskStatus::Reported));
    for dialog in &mut out.dialogs {
        let Some(task) = tasks.get(&dialog.dialog_id) else { continue };
        let turns = dialog.turns.len();
        for (&index, text) in &task.paraphrases {
            let turn = dialog.turns.get_mut(index).ok_or_else(|| ExportError::TurnMismatch {
                dialog_id: dialog.dialog_id.clone(),
                index,
                turns,
            })?;
            turn.paraphrase = Some(text.clone());
        }
    }
    out.refresh_manifest();
    Ok(out)
}
