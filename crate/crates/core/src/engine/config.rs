use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::GateParams;
use crate::movement::MovementClass;
use crate::pipeline::DEFAULT_SMOOTHING_WINDOW;

/// Thresholds and tuning for one monitoring deployment. Changing washing
/// requirements only ever means changing these values.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceConfig {
    /// Minimum total active washing time.
    pub total_duration_s: f64,
    /// Movements that must each reach their minimum duration.
    pub required_movements: BTreeSet<MovementClass>,
    pub per_movement_min_s: BTreeMap<MovementClass, f64>,
    /// Movements whose time counts towards the total. Turning off the faucet
    /// happens after washing and is excluded by default.
    pub counted_movements: BTreeSet<MovementClass>,
    pub poll_period_s: f64,
    pub gate: GateParams,
    pub smoothing_window: usize,
}

impl Default for ComplianceConfig {
    fn default() -> Self {
        use MovementClass::*;
        let rubbing = [PalmToPalm, PalmOverDorsum, FingersInterlaced, BackOfFingers, ThumbRub, FingertipsToPalm];
        let mut per_movement_min_s: BTreeMap<_, _> = rubbing.iter().map(|&m| (m, 5.0)).collect();
        per_movement_min_s.insert(FaucetWithTowel, 1.0);
        ComplianceConfig {
            total_duration_s: 40.0,
            required_movements: MovementClass::WASHING.into_iter().collect(),
            per_movement_min_s,
            counted_movements: rubbing.into_iter().collect(),
            poll_period_s: 0.5,
            gate: GateParams::default(),
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
        }
    }
}

impl ComplianceConfig {
    /// A config with the given total and per-movement minimums; every listed
    /// movement is required and all washing movements count towards the total.
    pub fn with_requirements(total_duration_s: f64, minimums: &[(MovementClass, f64)]) -> Self {
        ComplianceConfig {
            total_duration_s,
            required_movements: minimums.iter().map(|&(m, _)| m).collect(),
            per_movement_min_s: minimums.iter().copied().collect(),
            counted_movements: MovementClass::WASHING.into_iter().collect(),
            ..ComplianceConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_duration_s > 0.0 && self.total_duration_s.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "total_duration_s must be positive, got {}",
                self.total_duration_s
            )));
        }
        for m in &self.required_movements {
            if !m.is_washing() {
                return Err(Error::InvalidConfig("idle cannot be a required movement".into()));
            }
            match self.per_movement_min_s.get(m) {
                None => {
                    return Err(Error::InvalidConfig(format!(
                        "missing per-movement threshold for required movement {}",
                        m.code()
                    )))
                }
                Some(&s) if !(s > 0.0 && s.is_finite()) => {
                    return Err(Error::InvalidConfig(format!(
                        "threshold for movement {} must be positive, got {s}",
                        m.code()
                    )))
                }
                Some(_) => {}
            }
        }
        if self.counted_movements.contains(&MovementClass::Idle) {
            return Err(Error::InvalidConfig("idle time cannot count towards the total".into()));
        }
        if !(self.poll_period_s > 0.0 && self.poll_period_s.is_finite()) {
            return Err(Error::InvalidConfig("poll_period_s must be positive".into()));
        }
        if self.smoothing_window == 0 {
            return Err(Error::InvalidConfig("smoothing_window must be at least 1".into()));
        }
        self.gate.validate()
    }

    pub fn min_for(&self, m: MovementClass) -> f64 {
        self.per_movement_min_s.get(&m).copied().unwrap_or(0.0)
    }

    pub fn to_document(&self) -> ConfigDocument {
        ConfigDocument {
            total_duration_s: self.total_duration_s,
            required_movements: self.required_movements.iter().map(|m| m.code()).collect(),
            per_movement_min_s: self
                .per_movement_min_s
                .iter()
                .map(|(m, s)| (m.code().to_string(), *s))
                .collect(),
            counted_movements: Some(self.counted_movements.iter().map(|m| m.code()).collect()),
            poll_period_s: self.poll_period_s,
            gate: self.gate,
            smoothing_window: self.smoothing_window,
        }
    }

    pub fn from_document(doc: &ConfigDocument) -> Result<Self> {
        let codes = |v: &[u8]| -> Result<BTreeSet<MovementClass>> {
            v.iter().map(|&c| MovementClass::from_code(c as i64)).collect()
        };
        let per_movement_min_s = doc
            .per_movement_min_s
            .iter()
            .map(|(k, v)| Ok((k.parse::<MovementClass>()?, *v)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let cfg = ComplianceConfig {
            total_duration_s: doc.total_duration_s,
            required_movements: codes(&doc.required_movements)?,
            per_movement_min_s,
            counted_movements: match &doc.counted_movements {
                Some(c) => codes(c)?,
                None => ComplianceConfig::default().counted_movements,
            },
            poll_period_s: doc.poll_period_s,
            gate: doc.gate,
            smoothing_window: doc.smoothing_window,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The serialized form of [`ComplianceConfig`], shared by the TOML config
/// file and the HTTP configuration endpoint. Movement codes are WHO numbers;
/// map keys are codes written as strings.
///
/// ```toml
/// total_duration_s = 40.0
/// required_movements = [2, 3, 4, 5, 6, 7, 10]
/// counted_movements = [2, 3, 4, 5, 6, 7]
/// poll_period_s = 0.5
/// smoothing_window = 15
///
/// [per_movement_min_s]
/// 2 = 5.0
/// 10 = 1.0
///
/// [gate]
/// on_threshold = 0.02
/// off_threshold = 0.01
/// min_duration_s = 10.0
/// max_gap_s = 2.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigDocument {
    pub total_duration_s: f64,
    pub required_movements: Vec<u8>,
    pub counted_movements: Option<Vec<u8>>,
    pub per_movement_min_s: BTreeMap<String, f64>,
    pub poll_period_s: f64,
    pub smoothing_window: usize,
    pub gate: GateParams,
}

impl Default for ConfigDocument {
    fn default() -> Self {
        ComplianceConfig::default().to_document()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use MovementClass::*;

    #[test]
    fn default_is_valid() {
        let cfg = ComplianceConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.required_movements.len(), 7);
        assert!(!cfg.counted_movements.contains(&FaucetWithTowel));
        assert_eq!(cfg.min_for(FaucetWithTowel), 1.0);
    }

    #[test]
    fn missing_threshold_for_required_movement() {
        let mut cfg = ComplianceConfig::default();
        cfg.per_movement_min_s.remove(&ThumbRub);
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("movement 6"), "{err}");
    }

    #[test]
    fn other_invalid_values() {
        let mut cfg = ComplianceConfig::default();
        cfg.total_duration_s = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = ComplianceConfig::default();
        cfg.required_movements.insert(Idle);
        assert!(cfg.validate().is_err());

        let mut cfg = ComplianceConfig::default();
        cfg.smoothing_window = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = ComplianceConfig::default();
        cfg.gate.on_threshold = 0.001;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn document_round_trip() {
        let cfg = ComplianceConfig::with_requirements(12.0, &[(PalmToPalm, 2.0), (FaucetWithTowel, 0.5)]);
        let doc = cfg.to_document();
        assert_eq!(doc.per_movement_min_s.get("10"), Some(&0.5));
        assert_eq!(ComplianceConfig::from_document(&doc).unwrap(), cfg);

        let json = serde_json::to_string(&doc).unwrap();
        let back: ConfigDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn partial_document_uses_defaults() {
        let doc: ConfigDocument = serde_json::from_str(r#"{"total_duration_s": 1.0}"#).unwrap();
        let cfg = ComplianceConfig::from_document(&doc).unwrap();
        assert_eq!(cfg.total_duration_s, 1.0);
        assert_eq!(cfg.required_movements, ComplianceConfig::default().required_movements);
    }
}
