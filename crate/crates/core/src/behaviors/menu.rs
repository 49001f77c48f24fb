use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Longest label the side OLED can show on one line.
pub const MAX_LABEL_CHARS: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Token {
    Next,
    Prev,
    Select,
    Back,
    StartStop,
}

impl Token {
    pub const ALL: [Token; 5] = [Token::Next, Token::Prev, Token::Select, Token::Back, Token::StartStop];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenSource {
    Gesture,
    Tag,
    #[default]
    Console,
}

/// A diver-to-robot command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H2RToken {
    pub token: Token,
    #[serde(default)]
    pub source: TokenSource,
    #[serde(default)]
    pub timestamp: f64,
}

impl H2RToken {
    pub fn console(token: Token, timestamp: f64) -> Self {
        H2RToken { token, source: TokenSource::Console, timestamp }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MenuItem {
    pub label: String,
    pub action: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MenuState {
    #[default]
    Idle,
    Browsing,
    Confirm,
    Executing,
}

impl MenuState {
    pub const ALL: [MenuState; 4] = [MenuState::Idle, MenuState::Browsing, MenuState::Confirm, MenuState::Executing];

    pub fn name(self) -> &'static str {
        match self {
            MenuState::Idle => "IDLE",
            MenuState::Browsing => "BROWSING",
            MenuState::Confirm => "CONFIRM",
            MenuState::Executing => "EXECUTING",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "action", rename_all = "snake_case")]
pub enum MenuAction {
    Start(String),
    Cancel(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MenuError {
    #[error("menu document: {0}")]
    Parse(String),
    #[error("menu needs at least one item")]
    Empty,
    #[error("items[{index}].label is {len} characters, limit is {MAX_LABEL_CHARS}")]
    LabelTooLong { index: usize, len: usize },
    #[error("items[{0}].action is empty")]
    EmptyAction(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MenuModel {
    pub items: Vec<MenuItem>,
    #[serde(default)]
    pub state: MenuState,
    #[serde(default)]
    pub cursor: usize,
}

#[derive(Deserialize)]
struct MenuDocument {
    #[serde(default)]
    title: String,
    items: Vec<MenuItem>,
}

impl MenuModel {
    pub fn new(items: Vec<MenuItem>) -> Result<Self, MenuError> {
        if items.is_empty() {
            return Err(MenuError::Empty);
        }
        for (index, item) in items.iter().enumerate() {
            let len = item.label.chars().count();
            if len > MAX_LABEL_CHARS {
                return Err(MenuError::LabelTooLong { index, len });
            }
            if item.action.is_empty() {
                return Err(MenuError::EmptyAction(index));
            }
        }
        Ok(MenuModel { items, state: MenuState::Idle, cursor: 0 })
    }

    /// Parses a menu file: `{"title": ..., "items": [{"label", "action"}]}`.
    pub fn from_json(document: &str) -> Result<Self, MenuError> {
        let doc: MenuDocument = serde_json::from_str(document).map_err(|e| MenuError::Parse(e.to_string()))?;
        let _ = doc.title;
        MenuModel::new(doc.items)
    }

    pub fn current(&self) -> &MenuItem {
        &self.items[self.cursor]
    }

    /// Action bound while executing.
    pub fn active_action(&self) -> Option<&str> {
        (self.state == MenuState::Executing).then(|| self.current().action.as_str())
    }
}

/// The menu transition table. Pairs not listed leave the model unchanged.
///
/// | state     | token      | next      | emits             |
/// |-----------|------------|-----------|-------------------|
/// | IDLE      | SELECT     | BROWSING  | (cursor reset)    |
/// | BROWSING  | NEXT/PREV  | BROWSING  | cursor ±1, wraps  |
/// | BROWSING  | SELECT     | CONFIRM   |                   |
/// | BROWSING  | BACK       | IDLE      |                   |
/// | CONFIRM   | SELECT     | EXECUTING | start(action)     |
/// | CONFIRM   | BACK       | BROWSING  |                   |
/// | EXECUTING | START_STOP | IDLE      | cancel(action)    |
pub fn menu_step(model: &MenuModel, token: Token) -> (MenuModel, Option<MenuAction>) {
    let mut next = model.clone();
    let n = model.items.len();
    let action = match (model.state, token) {
        (MenuState::Idle, Token::Select) => {
            next.state = MenuState::Browsing;
            next.cursor = 0;
            None
        }
        (MenuState::Browsing, Token::Next) => {
            next.cursor = (model.cursor + 1) % n;
            None
        }
        (MenuState::Browsing, Token::Prev) => {
            next.cursor = (model.cursor + n - 1) % n;
            None
        }
        (MenuState::Browsing, Token::Select) => {
            next.state = MenuState::Confirm;
            None
        }
        (MenuState::Browsing, Token::Back) => {
            next.state = MenuState::Idle;
            None
        }
        (MenuState::Confirm, Token::Select) => {
            next.state = MenuState::Executing;
            Some(MenuAction::Start(model.current().action.clone()))
        }
        (MenuState::Confirm, Token::Back) => {
            next.state = MenuState::Browsing;
            None
        }
        (MenuState::Executing, Token::StartStop) => {
            next.state = MenuState::Idle;
            Some(MenuAction::Cancel(model.current().action.clone()))
        }
        _ => None,
    };
    (next, action)
}
