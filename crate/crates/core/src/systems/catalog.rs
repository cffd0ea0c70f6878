//! Systems addressable by label.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::point::{CirclePoint, RotationNumber, SymbolicPoint};

use super::{
    odometer_system, skew_product_system, subshift_system, substitution_fixed_point, RotationSystem,
    SturmianSystem, SubstitutionRule, SystemHandle, ToeplitzSystem, TwoSidedExtension,
};

pub const LABELS: [&str; 8] = [
    "cantor-substitution",
    "thue-morse",
    "sturmian",
    "toeplitz-ex5",
    "odometer",
    "rotation",
    "skew-product",
    "period-doubling",
];

/// Parameters shared by the catalog constructors.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub label: String,
    pub alpha: RotationNumber,
    pub skew_base: Vec<CirclePoint>,
    /// Samplers draw shifts from `[-shift_range, shift_range]`.
    pub shift_range: i64,
}

impl SystemSpec {
    pub fn new(label: &str) -> Self {
        SystemSpec {
            label: label.to_string(),
            alpha: RotationNumber::golden_default(),
            skew_base: default_skew_base(),
            shift_range: 1 << 20,
        }
    }
}

pub fn default_skew_base() -> Vec<CirclePoint> {
    vec![
        RotationNumber::golden_default().phase,
        RotationNumber::silver_default().phase,
    ]
}

/// `golden`, `silver`, or a decimal taken as a dyadic approximation.
pub fn parse_rotation_number(text: &str) -> Result<RotationNumber> {
    match text {
        "golden" => Ok(RotationNumber::golden_default()),
        "silver" => Ok(RotationNumber::silver_default()),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(RotationNumber::from_f64)
            .ok_or_else(|| Error::invalid(format!("unknown rotation number {other:?}"))),
    }
}

/// The two-sided fixed point generating a substitution subshift of the catalog.
pub fn fixed_point(label: &str) -> Result<SymbolicPoint> {
    let seed_pair = TwoSidedExtension::SeedPair {
        left: 1,
        right: 0,
        power: 2,
    };
    match label {
        "cantor-substitution" => substitution_fixed_point(&SubstitutionRule::cantor(), 0, TwoSidedExtension::LeftConstant(1)),
        "thue-morse" => substitution_fixed_point(&SubstitutionRule::thue_morse(), 0, seed_pair),
        "period-doubling" => substitution_fixed_point(&SubstitutionRule::period_doubling(), 0, seed_pair),
        other => Err(Error::invalid(format!("{other:?} is not a substitution system"))),
    }
}

fn substitution_subshift(label: &str, rule: SubstitutionRule, shift_range: i64) -> Result<SystemHandle> {
    let extension = match label {
        "cantor-substitution" => TwoSidedExtension::LeftConstant(1),
        _ => TwoSidedExtension::SeedPair {
            left: 1,
            right: 0,
            power: 2,
        },
    };
    subshift_system(label, &rule, 0, extension, shift_range)
}

pub fn cantor_substitution(shift_range: i64) -> Result<SystemHandle> {
    substitution_subshift("cantor-substitution", SubstitutionRule::cantor(), shift_range)
}

pub fn thue_morse(shift_range: i64) -> Result<SystemHandle> {
    substitution_subshift("thue-morse", SubstitutionRule::thue_morse(), shift_range)
}

pub fn period_doubling(shift_range: i64) -> Result<SystemHandle> {
    substitution_subshift("period-doubling", SubstitutionRule::period_doubling(), shift_range)
}

pub fn build(spec: &SystemSpec) -> Result<SystemHandle> {
    match spec.label.as_str() {
        "cantor-substitution" => cantor_substitution(spec.shift_range),
        "thue-morse" => thue_morse(spec.shift_range),
        "period-doubling" => period_doubling(spec.shift_range),
        "sturmian" => Ok(Arc::new(SturmianSystem::new(spec.alpha.clone()))),
        "toeplitz-ex5" => Ok(Arc::new(ToeplitzSystem)),
        "odometer" => Ok(odometer_system()),
        "rotation" => Ok(Arc::new(RotationSystem::new(spec.alpha.clone()))),
        "skew-product" => skew_product_system(spec.skew_base.clone()),
        other => Err(Error::invalid(format!(
            "unknown system {other:?}; expected one of {}",
            LABELS.join(", ")
        ))),
    }
}
