use std::collections::VecDeque;
use std::sync::Mutex;

use super::{ChatClient, ChatError, ChatRequest};

/// Always answers with the same text.
#[derive(Debug, Clone)]
pub struct CannedChat(pub String);

impl ChatClient for CannedChat {
    fn chat(&self, req: &ChatRequest) -> Result<String, ChatError> {
        req.validate()?;
        Ok(self.0.clone())
    }
}

/// Replays a fixed queue of results, then fails with a transport error.
#[derive(Debug, Default)]
pub struct ScriptedChat {
    replies: Mutex<VecDeque<Result<String, ChatError>>>,
    requests: Mutex<Vec<ChatRequest>>,
}

impl ScriptedChat {
    pub fn new(replies: impl IntoIterator<Item = Result<String, ChatError>>) -> Self {
        Self {
            replies: Mutex::new(replies.into_iter().collect()),
            requests: Mutex::new(Vec::new()),
        }
    }

    /// Every request received so far.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl ChatClient for ScriptedChat {
    fn chat(&self, req: &ChatRequest) -> Result<String, ChatError> {
        req.validate()?;
        self.requests
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(req.clone());
        self.replies
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .pop_front()
            .unwrap_or_else(|| Err(ChatError::Transport("script exhausted".into())))
    }
}

/// Answers with a pure function of the request.
pub struct FnChat<F>(pub F);

impl<F> ChatClient for FnChat<F>
where
    F: Fn(&ChatRequest) -> Result<String, ChatError> + Send + Sync,
{
    fn chat(&self, req: &ChatRequest) -> Result<String, ChatError> {
        req.validate()?;
        (self.0)(req)
    }
}
