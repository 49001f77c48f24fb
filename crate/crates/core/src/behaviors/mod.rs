//! Mission layer: the experiment menu, the target follower, the mission
//! sequencer and the virtual HREye, OLED and SIREN devices.

pub mod mav;
pub mod menu;
pub mod mission;
pub mod uhri;

pub use mav::{FollowParams, FollowStatus, MavFollower, MavOutput};
pub use menu::{menu_step, H2RToken, MenuAction, MenuError, MenuItem, MenuModel, MenuState, Token, TokenSource};
pub use mission::{actions, Behavior, Mission, MissionEffect, MissionEvent, MissionSnapshot};
pub use uhri::{front_oled, hreye_render, side_oled, HreyePattern, HreyeState, OledText, SirenEvent};
