use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::types::{TaskState, TaskStatus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    #[error("no paraphrases submitted")]
    NothingSubmitted,
    #[error("turn {index} out of range for a {turns}-turn dialog")]
    BadTurn { index: usize, turns: usize },
    #[error("paraphrase for turn {0} is empty")]
    EmptyText(usize),
    #[error("report reason is empty")]
    EmptyReason,
    #[error("task {0} was reported and no longer accepts paraphrases")]
    Reported(String),
}

impl TaskState {
    pub fn pending(dialog_id: impl Into<String>) -> Self {
        Self {
            dialog_id: dialog_id.into(),
            status: TaskStatus::Pending,
            paraphrases: BTreeMap::new(),
            annotator_id: None,
            updated_at: None,
            report_reason: None,
        }
    }

    /// Merges texts, last writer wins per turn; full coverage completes the task.
    pub fn with_paraphrases(
        &self,
        texts: &BTreeMap<usize, String>,
        turns: usize,
        annotator: Option<&str>,
        now: DateTime<Utc>,
    ) -> Result<Self, TaskError> {
        if self.status == TaskStatus::Reported {
            return Err(TaskError::Reported(self.dialog_id.clone()));
        }
        if texts.is_empty() {
            return Err(TaskError::NothingSubmitted);
        }
        for (index, text) in texts {
            if *index >= turns {
                return Err(TaskError::BadTurn { index: *index, turns });
            }
            if text.trim().is_empty() {
                return Err(TaskError::EmptyText(*index));
            }
        }
        let mut next = self.clone();
        next.paraphrases.extend(texts.iter().map(|(k, v)| (*k, v.trim().to_string())));
        next.status = if (0..turns).all(|i| next.paraphrases.contains_key(&i)) {
            TaskStatus::Complete
        } else {
            TaskStatus::InProgress
        };
        next.annotator_id = annotator.map(str::to_string).or(next.annotator_id);
        next.updated_at = Some(now);
        Ok(next)
    }

    pub fn with_report(&self, reason: &str, annotator: Option<&str>, now: DateTime<Utc>) -> Result<Self, TaskError> {
        let reason = reason.trim();
        if reason.is_empty() {
            return Err(TaskError::EmptyReason);
        }
        let mut next = self.clone();
        next.status = TaskStatus::Reported;
        next.report_reason = Some(reason.to_string());
        next.annotator_id = annotator.map(str::to_string).or(next.annotator_id);
        next.updated_at = Some(now);
        Ok(next)
    }
}
