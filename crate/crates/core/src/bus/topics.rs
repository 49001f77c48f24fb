//! Topic names used by the built-in nodes.

pub const AHRS: &str = "/sensors/ahrs";
pub const DEPTH: &str = "/sensors/depth";
pub const BATTERY: &str = "/sensors/battery";
pub const TARGET: &str = "/perception/target";
pub const THRUSTERS: &str = "/actuators/thrusters";
pub const PWM: &str = "/actuators/pwm";
pub const SIM_STATE: &str = "/sim/state";
pub const SIM_PATCH: &str = "/sim/patch";
pub const SIM_EVENT: &str = "/sim/event";
pub const SIM_FAULT: &str = "/sim/fault";
pub const HREYE: &str = "/uhri/hreye";
pub const OLED_FRONT: &str = "/uhri/oled/front";
pub const OLED_SIDE: &str = "/uhri/oled/side";
pub const SIREN: &str = "/uhri/siren";
pub const MISSION: &str = "/mission/state";
pub const CMD_TOKEN: &str = "/cmd/token";
pub const CMD_PILOT: &str = "/cmd/pilot";
pub const CMD_ARM: &str = "/cmd/arm";
pub const CMD_SETPOINT: &str = "/cmd/setpoint";
pub const CMD_MODE: &str = "/cmd/mode";
pub const CMD_BEHAVIOR: &str = "/cmd/behavior";
pub const GATEWAY_ERROR: &str = "/gateway/error";

/// Patterns a console may publish through the gateway.
pub const CONSOLE_ALLOWLIST: [&str; 3] = ["/cmd/*", "/sim/patch", "/cmd/token"];
