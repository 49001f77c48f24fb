//! Virtual robot-to-human output devices: HREye LED rings, OLED panels, SIREN.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::menu::{MenuModel, MenuState, MAX_LABEL_CHARS};

pub const OUTER_LEDS: usize = 24;
pub const INNER_LEDS: usize = 16;
/// Animation phase resolution, Hz.
pub const HREYE_TICK_HZ: f64 = 10.0;
/// Spinner revolution in ticks; both rings complete one turn per period.
pub const SPINNER_PERIOD: u64 = 24;
/// Blink half-period in ticks.
pub const BLINK_HALF: u64 = 5;

pub type Rgb = [u8; 3];

pub const OFF: Rgb = [0, 0, 0];

/// Named colours accepted in pattern ids.
pub fn named_color(name: &str) -> Option<Rgb> {
    Some(match name {
        "off" | "black" => OFF,
        "red" => [255, 0, 0],
        "green" => [0, 255, 0],
        "blue" => [0, 0, 255],
        "cyan" => [0, 255, 255],
        "yellow" => [255, 255, 0],
        "purple" => [128, 0, 128],
        "white" => [255, 255, 255],
        "orange" => [255, 165, 0],
        hex if hex.len() == 7 && hex.starts_with('#') => {
            let c = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).ok();
            [c(1)?, c(3)?, c(5)?]
        }
        _ => return None,
    })
}

/// Detection class to feedback colour.
pub fn detection_color(class: &str) -> Option<Rgb> {
    named_color(match class {
        "cup" => "red",
        "mug" => "green",
        "bottle" | "plastic_bottle" => "blue",
        "starfish" => "cyan",
        "can" => "yellow",
        "bag" | "plastic_bag" => "purple",
        "glass" | "glass_bottle" => "white",
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HreyePattern {
    Off,
    Solid(Rgb),
    Spinner(Rgb),
    Blink(Rgb),
}

impl HreyePattern {
    /// Parses `off`, `solid:<c>`, `spinner:<c>`, `blink:<c>` or `detect:<class>`.
    pub fn parse(id: &str) -> Option<Self> {
        if id == "off" {
            return Some(HreyePattern::Off);
        }
        let (kind, arg) = id.split_once(':')?;
        Some(match kind {
            "solid" => HreyePattern::Solid(named_color(arg)?),
            "spinner" => HreyePattern::Spinner(named_color(arg)?),
            "blink" => HreyePattern::Blink(named_color(arg)?),
            "detect" => HreyePattern::Solid(detection_color(arg)?),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HreyeState {
    pub outer_ring: Vec<Rgb>,
    pub inner_ring: Vec<Rgb>,
    pub pattern: String,
    /// Animation tick at which the arrays were rendered.
    pub phase: u64,
}

impl HreyeState {
    pub fn is_well_formed(&self) -> bool {
        self.outer_ring.len() == OUTER_LEDS && self.inner_ring.len() == INNER_LEDS
    }
}

fn scaled(c: Rgb, num: u16, den: u16) -> Rgb {
    c.map(|v| ((v as u16 * num) / den) as u8)
}

/// Renders a pattern at time `t` (s). Unknown ids render all LEDs off.
pub fn hreye_render(pattern_id: &str, t: f64) -> HreyeState {
    let phase = if t.is_finite() && t > 0.0 { (t * HREYE_TICK_HZ + 1e-9).floor() as u64 } else { 0 };
    let mut outer = vec![OFF; OUTER_LEDS];
    let mut inner = vec![OFF; INNER_LEDS];
    let pattern = HreyePattern::parse(pattern_id);
    match pattern {
        None | Some(HreyePattern::Off) => {}
        Some(HreyePattern::Solid(c)) => {
            outer.fill(c);
            inner.fill(c);
        }
        Some(HreyePattern::Blink(c)) => {
            if (phase / BLINK_HALF) % 2 == 0 {
                outer.fill(c);
                inner.fill(c);
            }
        }
        Some(HreyePattern::Spinner(c)) => {
            let k = phase % SPINNER_PERIOD;
            // A bright head with a fading two-LED tail on each ring.
            for (ring, n) in [(&mut outer, OUTER_LEDS as u64), (&mut inner, INNER_LEDS as u64)] {
                let head = k * n / SPINNER_PERIOD;
                for (lag, (num, den)) in [(0u64, (1u16, 1u16)), (1, (1, 2)), (2, (1, 4))] {
                    ring[((head + n - lag) % n) as usize] = scaled(c, num, den);
                }
            }
        }
    }
    HreyeState {
        outer_ring: outer,
        inner_ring: inner,
        pattern: if pattern.is_some() { pattern_id.to_string() } else { "off".to_string() },
        phase,
    }
}

pub const MIN_TONE_HZ: f64 = 100.0;
pub const MAX_TONE_HZ: f64 = 10_000.0;
pub const MAX_TONE_MS: u32 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SirenEvent {
    Tone { frequency: f64, duration_ms: u32 },
    Speech { text: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SirenError {
    #[error("tone frequency {0} Hz outside 100-10000 Hz")]
    Frequency(f64),
    #[error("tone duration {0} ms exceeds 10 s")]
    Duration(u32),
    #[error("speech text is empty")]
    EmptySpeech,
}

impl SirenEvent {
    pub fn tone(frequency: f64, duration_ms: u32) -> Result<Self, SirenError> {
        let e = SirenEvent::Tone { frequency, duration_ms };
        e.validate()?;
        Ok(e)
    }

    pub fn speech(text: &str) -> Result<Self, SirenError> {
        let e = SirenEvent::Speech { text: text.to_string() };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<(), SirenError> {
        match self {
            SirenEvent::Tone { frequency, duration_ms } => {
                if !(MIN_TONE_HZ..=MAX_TONE_HZ).contains(frequency) {
                    return Err(SirenError::Frequency(*frequency));
                }
                if *duration_ms > MAX_TONE_MS {
                    return Err(SirenError::Duration(*duration_ms));
                }
                Ok(())
            }
            SirenEvent::Speech { text } if text.trim().is_empty() => Err(SirenError::EmptySpeech),
            SirenEvent::Speech { .. } => Ok(()),
        }
    }
}

/// Text on one OLED panel, one entry per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OledText {
    pub lines: Vec<String>,
}

fn line(s: impl AsRef<str>) -> String {
    s.as_ref().chars().take(MAX_LABEL_CHARS).collect()
}

/// Side panel: the experiment menu.
pub fn side_oled(menu: &MenuModel) -> OledText {
    let lines = match menu.state {
        MenuState::Idle => vec![line("MENU"), line("SELECT to open")],
        MenuState::Browsing => {
            let mut v = vec![line("MENU")];
            for (i, item) in menu.items.iter().enumerate() {
                let mark = if i == menu.cursor { '>' } else { ' ' };
                v.push(line(format!("{mark}{}", item.label)));
            }
            v
        }
        MenuState::Confirm => vec![line("CONFIRM"), line(&menu.current().label), line("SELECT=go BACK=no")],
        MenuState::Executing => vec![line("RUNNING"), line(&menu.current().label), line("START_STOP ends")],
    };
    OledText { lines }
}

/// Front panel: vehicle state.
pub fn front_oled(state: &str, armed: bool, battery_fraction: f64) -> OledText {
    OledText {
        lines: vec![
            line(format!("State {state}")),
            line(if armed { "ARMED" } else { "DISARMED" }),
            line(format!("Battery {:>3.0}%", (battery_fraction * 100.0).clamp(0.0, 100.0))),
        ],
    }
}
