use log::warn;
use serde::{Deserialize, Serialize};

use super::menu::{menu_step, MenuAction, MenuModel, MenuState, Token};
use super::uhri::SirenEvent;
use crate::dynamics::ThrustVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    #[default]
    Idle,
    MavFollow,
    DepthHold,
}

impl Behavior {
    pub fn state_name(self) -> &'static str {
        match self {
            Behavior::Idle => "IDLE",
            Behavior::MavFollow => "MAV",
            Behavior::DepthHold => "DEPTH_HOLD",
        }
    }
}

/// Menu action ids understood by the sequencer.
pub mod actions {
    pub const MAV_FOLLOW: &str = "mav_follow";
    pub const DEPTH_HOLD: &str = "depth_hold";
    pub const ARM: &str = "arm";
    pub const DISARM: &str = "disarm";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum MissionEvent {
    Token(Token),
    Arm,
    Disarm,
    /// Start a behavior directly, as if its menu action had executed.
    Start(String),
    /// Stop the active behavior, keeping the arming state.
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MissionEffect {
    Armed(bool),
    Behavior(Behavior),
    Menu,
    Siren(SirenEvent),
    Hreye(String),
}

/// Published on `/mission/state`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissionSnapshot {
    pub armed: bool,
    pub behavior: Behavior,
    pub menu_state: MenuState,
    pub cursor: usize,
    pub hreye: String,
}

/// Arming, behavior selection and the disarm gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Mission {
    pub menu: MenuModel,
    armed: bool,
    behavior: Behavior,
    hreye: String,
}

impl Mission {
    pub fn new(menu: MenuModel) -> Self {
        Mission { menu, armed: false, behavior: Behavior::Idle, hreye: "solid:blue".into() }
    }

    pub fn armed(&self) -> bool {
        self.armed
    }

    pub fn behavior(&self) -> Behavior {
        self.behavior
    }

    pub fn hreye_pattern(&self) -> &str {
        &self.hreye
    }

    pub fn snapshot(&self) -> MissionSnapshot {
        MissionSnapshot {
            armed: self.armed,
            behavior: self.behavior,
            menu_state: self.menu.state,
            cursor: self.menu.cursor,
            hreye: self.hreye.clone(),
        }
    }

    pub fn handle(&mut self, event: &MissionEvent) -> Vec<MissionEffect> {
        let mut fx = Vec::new();
        match event {
            MissionEvent::Token(t) => {
                let (menu, action) = menu_step(&self.menu, *t);
                if menu != self.menu {
                    self.menu = menu;
                    fx.push(MissionEffect::Menu);
                }
                match action {
                    Some(MenuAction::Start(a)) => self.start(&a, &mut fx),
                    Some(MenuAction::Cancel(_)) => {
                        self.set_behavior(Behavior::Idle, &mut fx);
                        self.set_armed(false, &mut fx);
                    }
                    None => {}
                }
            }
            MissionEvent::Arm => self.set_armed(true, &mut fx),
            MissionEvent::Disarm => self.set_armed(false, &mut fx),
            MissionEvent::Start(a) => self.start(a, &mut fx),
            MissionEvent::Stop => self.set_behavior(Behavior::Idle, &mut fx),
        }
        fx
    }

    fn start(&mut self, action: &str, fx: &mut Vec<MissionEffect>) {
        match action {
            actions::MAV_FOLLOW => self.set_behavior(Behavior::MavFollow, fx),
            actions::DEPTH_HOLD => self.set_behavior(Behavior::DepthHold, fx),
            actions::ARM => self.set_armed(true, fx),
            actions::DISARM => self.set_armed(false, fx),
            other => warn!("menu action {other:?} has no handler"),
        }
    }

    fn set_armed(&mut self, armed: bool, fx: &mut Vec<MissionEffect>) {
        if self.armed == armed {
            return;
        }
        self.armed = armed;
        fx.push(MissionEffect::Armed(armed));
        let tone = if armed { SirenEvent::Tone { frequency: 880.0, duration_ms: 300 } } else { SirenEvent::Tone { frequency: 440.0, duration_ms: 600 } };
        fx.push(MissionEffect::Siren(tone));
        self.refresh_hreye(fx);
    }

    fn set_behavior(&mut self, behavior: Behavior, fx: &mut Vec<MissionEffect>) {
        if self.behavior == behavior {
            return;
        }
        self.behavior = behavior;
        fx.push(MissionEffect::Behavior(behavior));
        let text = match behavior {
            Behavior::Idle => "Stopping",
            Behavior::MavFollow => "Following target",
            Behavior::DepthHold => "Holding depth",
        };
        fx.push(MissionEffect::Siren(SirenEvent::Speech { text: text.into() }));
        self.refresh_hreye(fx);
    }

    fn refresh_hreye(&mut self, fx: &mut Vec<MissionEffect>) {
        let pattern = match (self.armed, self.behavior) {
            (false, _) => "solid:blue",
            (true, Behavior::Idle) => "solid:green",
            (true, Behavior::MavFollow) => "spinner:purple",
            (true, Behavior::DepthHold) => "spinner:cyan",
        };
        if self.hreye != pattern {
            self.hreye = pattern.to_string();
            fx.push(MissionEffect::Hreye(self.hreye.clone()));
        }
    }

    /// The last word on thruster output: all zeros while disarmed.
    pub fn gate(&self, thrusts: ThrustVector) -> ThrustVector {
        if self.armed {
            thrusts
        } else {
            ThrustVector::zeros(thrusts.len())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviors::menu::MenuItem;

    fn mission() -> Mission {
        Mission::new(
            MenuModel::new(vec![
                MenuItem { label: "Follow target".into(), action: actions::MAV_FOLLOW.into() },
                MenuItem { label: "Arm".into(), action: actions::ARM.into() },
            ])
            .unwrap(),
        )
    }

    #[test]
    fn disarm_during_mav_zeroes_thrust() {
        let mut m = mission();
        m.handle(&MissionEvent::Arm);
        m.handle(&MissionEvent::Start(actions::MAV_FOLLOW.into()));
        assert_eq!(m.behavior(), Behavior::MavFollow);
        assert_eq!(m.gate(ThrustVector(vec![1.0, -2.0])), ThrustVector(vec![1.0, -2.0]));
        m.handle(&MissionEvent::Disarm);
        assert!(m.gate(ThrustVector(vec![1.0, -2.0])).is_zero());
    }

    #[test]
    fn menu_starts_follower() {
        let mut m = mission();
        for t in [Token::Select, Token::Select, Token::Select] {
            m.handle(&MissionEvent::Token(t));
        }
        assert_eq!(m.behavior(), Behavior::MavFollow);
        assert_eq!(m.menu.state, MenuState::Executing);
    }

    #[test]
    fn double_start_is_idempotent() {
        let mut m = mission();
        m.handle(&MissionEvent::Start(actions::MAV_FOLLOW.into()));
        let before = m.clone();
        assert!(m.handle(&MissionEvent::Start(actions::MAV_FOLLOW.into())).is_empty());
        assert_eq!(m, before);
    }

    #[test]
    fn cancel_stops_and_disarms() {
        let mut m = mission();
        m.handle(&MissionEvent::Arm);
        for t in [Token::Select, Token::Select, Token::Select, Token::StartStop] {
            m.handle(&MissionEvent::Token(t));
        }
        assert_eq!(m.behavior(), Behavior::Idle);
        assert!(!m.armed());
        assert_eq!(m.menu.state, MenuState::Idle);
    }
}
