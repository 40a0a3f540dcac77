use serde::{Deserialize, Serialize};

use super::CompileError;

/// Gate timings and loss figures. All durations are in nanoseconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareParams {
    pub t_emit_ns: f64,
    pub t_1q_ns: f64,
    pub t_cz_ns: f64,
    pub t_meas_ns: f64,
    pub t2_ns: f64,
    pub sigma_cz: f64,
    pub loss_db_per_km: f64,
}

impl Default for HardwareParams {
    fn default() -> Self {
        HardwareParams {
            t_emit_ns: 0.1,
            t_1q_ns: 0.1,
            t_cz_ns: 10.0,
            t_meas_ns: 0.0,
            t2_ns: 4400.0,
            sigma_cz: 0.99,
            loss_db_per_km: 0.2,
        }
    }
}

impl HardwareParams {
    pub fn validate(&self) -> Result<(), CompileError> {
        let durations = [
            ("t_emit_ns", self.t_emit_ns),
            ("t_1q_ns", self.t_1q_ns),
            ("t_cz_ns", self.t_cz_ns),
            ("t_meas_ns", self.t_meas_ns),
        ];
        for (name, value) in durations {
            if !(value.is_finite() && value >= 0.0) {
                return Err(CompileError::Config(format!("{name} must be a finite duration >= 0")));
            }
        }
        if !(self.t2_ns.is_finite() && self.t2_ns > 0.0) {
            return Err(CompileError::Config("t2_ns must be positive".into()));
        }
        if !(self.sigma_cz > 0.0 && self.sigma_cz <= 1.0) {
            return Err(CompileError::Config("sigma_cz must lie in (0, 1]".into()));
        }
        if !(self.loss_db_per_km.is_finite() && self.loss_db_per_km >= 0.0) {
            return Err(CompileError::Config("loss_db_per_km must be >= 0".into()));
        }
        Ok(())
    }

    /// Parses `key = value` lines; omitted keys keep their defaults.
    pub fn from_config(text: &str) -> Result<Self, CompileError> {
        let hw: HardwareParams =
            toml::from_str(text).map_err(|e| CompileError::Config(e.message().to_string()))?;
        hw.validate()?;
        Ok(hw)
    }

    pub fn to_config(&self) -> String {
        toml::to_string(self).expect("flat numeric table serialises")
    }
}
