//! Decision logic for the light and temperature control units.
//!
//! Both units poll a sensor over the serial bus, convert the raw
//! reading, and drive an enable line plus a 12-bit DAC code. The
//! arithmetic here is deliberately branch-simple so every threshold can
//! be pinned by an exact test: brightness scaling is a plain shift, the
//! temperature format is the left-justified 12-bit two's-complement
//! layout the sensor emits, and DAC codes come from linear maps with
//! round-half-away rounding.

use std::fmt;

use crate::{Error, Result};

/// Highest code a 12-bit DAC accepts.
pub const DAC_MAX: u16 = 4095;

/// What a control unit decided to do with its actuator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    Off,
    LightOn,
    Cool,
    Heat,
}

impl fmt::Display for ControlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ControlMode::Off => "off",
            ControlMode::LightOn => "light_on",
            ControlMode::Cool => "cool",
            ControlMode::Heat => "heat",
        };
        f.write_str(s)
    }
}

/// Enable line plus DAC drive for one actuator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlCommand {
    pub enable: bool,
    pub mode: ControlMode,
    pub dac_code: u16,
}

impl ControlCommand {
    pub fn off() -> Self {
        Self {
            enable: false,
            mode: ControlMode::Off,
            dac_code: 0,
        }
    }
}

/// Light control unit settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LightConfig {
    /// Scaled-brightness level below which the lamp turns on.
    pub threshold: u16,
}

impl LightConfig {
    pub fn new(threshold: u16) -> Result<Self> {
        if threshold > DAC_MAX {
            return Err(Error::config(format!(
                "light threshold {threshold} exceeds the 12-bit range"
            )));
        }
        Ok(Self { threshold })
    }
}

impl Default for LightConfig {
    fn default() -> Self {
        Self { threshold: 2000 }
    }
}

/// Temperature control unit settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcuConfig {
    /// Setpoint the room is held at.
    pub reference_c: f64,
    /// Deadband: deviations at or below this are treated as noise.
    pub noise_threshold_c: f64,
    /// Degrees per LSB of the sensor's 12-bit reading.
    pub resolution_c_per_lsb: f64,
    /// Deviation that maps to a full-scale DAC code.
    pub full_scale_deviation_c: f64,
}

impl Default for TcuConfig {
    fn default() -> Self {
        Self {
            reference_c: 25.0,
            noise_threshold_c: 0.5,
            resolution_c_per_lsb: 0.0625,
            full_scale_deviation_c: 25.0,
        }
    }
}

impl TcuConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_threshold_c >= 0.0) {
            return Err(Error::config("noise threshold must be non-negative"));
        }
        if !(self.resolution_c_per_lsb > 0.0) {
            return Err(Error::config("temperature resolution must be positive"));
        }
        if !(self.full_scale_deviation_c > 0.0) {
            return Err(Error::config("full-scale deviation must be positive"));
        }
        Ok(())
    }
}

/// Reduce a raw 16-bit brightness reading to the DAC's 12-bit range.
pub fn scale_brightness(raw: u16) -> u16 {
    raw >> 4
}

/// Lamp decision: strictly below the threshold the lamp comes on, and
/// the DAC drives it harder the darker it is.
pub fn light_decision(scaled_brightness: u16, config: &LightConfig) -> ControlCommand {
    if scaled_brightness < config.threshold {
        ControlCommand {
            enable: true,
            mode: ControlMode::LightOn,
            dac_code: config.threshold - scaled_brightness,
        }
    } else {
        ControlCommand::off()
    }
}

/// Decode the sensor's big-endian register pair: the upper 12 bits are
/// a two's-complement count of `resolution` steps.
pub fn temp_celsius(msb: u8, lsb: u8, config: &TcuConfig) -> f64 {
    let word = (u16::from(msb) << 8) | u16::from(lsb);
    let steps = (word as i16) >> 4;
    f64::from(steps) * config.resolution_c_per_lsb
}

/// Inverse of [`temp_celsius`]: produce the register pair a sensor
/// would hold at `celsius`, clamped to the representable range.
pub fn encode_temp(celsius: f64, config: &TcuConfig) -> [u8; 2] {
    let steps = (celsius / config.resolution_c_per_lsb).round();
    let steps = steps.clamp(-2048.0, 2047.0) as i16;
    let word = (steps << 4) as u16;
    [(word >> 8) as u8, word as u8]
}

/// Thermostat decision: inside the deadband nothing runs; outside it,
/// cool above the setpoint and heat below, with drive proportional to
/// the deviation up to full scale.
pub fn tcu_step(celsius: f64, config: &TcuConfig) -> ControlCommand {
    let deviation = celsius - config.reference_c;
    if deviation.abs() <= config.noise_threshold_c {
        return ControlCommand::off();
    }
    let mode = if deviation > 0.0 {
        ControlMode::Cool
    } else {
        ControlMode::Heat
    };
    let drive = deviation.abs() * f64::from(DAC_MAX) / config.full_scale_deviation_c;
    let dac_code = (drive.round() as u64).min(u64::from(DAC_MAX)) as u16;
    ControlCommand {
        enable: true,
        mode,
        dac_code,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn brightness_scaling_corners() {
        assert_eq!(scale_brightness(0), 0);
        assert_eq!(scale_brightness(65535), 4095);
        assert_eq!(scale_brightness(4096), 256);
    }

    #[test]
    fn light_decision_reference_points() {
        let cfg = LightConfig::default();
        assert_eq!(cfg.threshold, 2000);

        let dark = light_decision(100, &cfg);
        assert!(dark.enable);
        assert_eq!(dark.mode, ControlMode::LightOn);
        assert_eq!(dark.dac_code, 1900);

        // At the threshold the lamp stays off: the comparison is
        // strict.
        let at = light_decision(2000, &cfg);
        assert_eq!(at, ControlCommand::off());

        let max = light_decision(0, &LightConfig::new(4095).unwrap());
        assert_eq!(max.dac_code, 4095);
    }

    #[test]
    fn light_threshold_validation() {
        assert!(LightConfig::new(4095).is_ok());
        assert!(LightConfig::new(4096).is_err());
    }

    #[test]
    fn temperature_decode_reference_points() {
        let cfg = TcuConfig::default();
        assert_eq!(temp_celsius(0x19, 0x00, &cfg), 25.0);
        assert_eq!(temp_celsius(0x00, 0x00, &cfg), 0.0);
        assert_eq!(temp_celsius(0xE7, 0x00, &cfg), -25.0);
        // Half-degree steps land exactly on the 1/16-degree grid.
        assert_eq!(temp_celsius(0x1E, 0x80, &cfg), 30.5);
    }

    #[test]
    fn temperature_encode_reference_points() {
        let cfg = TcuConfig::default();
        assert_eq!(encode_temp(25.0, &cfg), [0x19, 0x00]);
        assert_eq!(encode_temp(-25.0, &cfg), [0xE7, 0x00]);
        assert_eq!(encode_temp(0.0, &cfg), [0x00, 0x00]);
    }

    #[test]
    fn thermostat_reference_points() {
        let cfg = TcuConfig::default();

        assert_eq!(tcu_step(25.0, &cfg), ControlCommand::off());
        assert_eq!(tcu_step(25.4, &cfg), ControlCommand::off());

        let hot = tcu_step(30.25, &cfg);
        assert_eq!(hot.mode, ControlMode::Cool);
        assert_eq!(hot.dac_code, 860);

        let cold = tcu_step(0.0, &cfg);
        assert_eq!(cold.mode, ControlMode::Heat);
        assert_eq!(cold.dac_code, 4095);

        let slightly_cold = tcu_step(24.4, &cfg);
        assert_eq!(slightly_cold.mode, ControlMode::Heat);
        assert_eq!(slightly_cold.dac_code, 98);
    }

    #[test]
    fn thermostat_saturates_far_from_the_setpoint() {
        let cfg = TcuConfig::default();
        let freezing = tcu_step(-100.0, &cfg);
        assert_eq!(freezing.mode, ControlMode::Heat);
        assert_eq!(freezing.dac_code, 4095);
        let scorching = tcu_step(120.0, &cfg);
        assert_eq!(scorching.mode, ControlMode::Cool);
        assert_eq!(scorching.dac_code, 4095);
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let mut cfg = TcuConfig::default();
        cfg.noise_threshold_c = -0.1;
        assert!(cfg.validate().is_err());
        cfg = TcuConfig::default();
        cfg.resolution_c_per_lsb = 0.0;
        assert!(cfg.validate().is_err());
        assert!(TcuConfig::default().validate().is_ok());
    }

    #[test]
    fn mode_labels() {
        assert_eq!(ControlMode::Off.to_string(), "off");
        assert_eq!(ControlMode::LightOn.to_string(), "light_on");
        assert_eq!(ControlMode::Cool.to_string(), "cool");
        assert_eq!(ControlMode::Heat.to_string(), "heat");
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip_on_the_sensor_grid(steps in -2048i32..=2047) {
            let cfg = TcuConfig::default();
            let celsius = steps as f64 * cfg.resolution_c_per_lsb;
            let [msb, lsb] = encode_temp(celsius, &cfg);
            prop_assert_eq!(temp_celsius(msb, lsb, &cfg), celsius);
        }

        #[test]
        fn light_dac_decreases_as_brightness_rises(a in 0u16..4095, b in 0u16..4095) {
            let cfg = LightConfig::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let cmd_lo = light_decision(lo, &cfg);
            let cmd_hi = light_decision(hi, &cfg);
            prop_assert!(cmd_lo.dac_code >= cmd_hi.dac_code);
        }

        #[test]
        fn thermostat_drive_is_monotone_in_deviation(a in 0u16..=4000u16, b in 0u16..=4000u16) {
            let cfg = TcuConfig::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let dev_lo = lo as f64 * 0.0625;
            let dev_hi = hi as f64 * 0.0625;
            let warm_lo = tcu_step(cfg.reference_c + dev_lo, &cfg);
            let warm_hi = tcu_step(cfg.reference_c + dev_hi, &cfg);
            prop_assert!(warm_lo.dac_code <= warm_hi.dac_code);
            let cold_lo = tcu_step(cfg.reference_c - dev_lo, &cfg);
            let cold_hi = tcu_step(cfg.reference_c - dev_hi, &cfg);
            prop_assert!(cold_lo.dac_code <= cold_hi.dac_code);
        }
    }
}
