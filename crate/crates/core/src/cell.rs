//! Risk cells: the unit of aggregation and dependence wiring.

use crate::dist::{FrequencyModel, InsurancePolicy, SeverityModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BusinessLine {
    CorporateFinance,
    TradingAndSales,
    RetailBanking,
    CommercialBanking,
    PaymentAndSettlement,
    AgencyServices,
    AssetManagement,
    RetailBrokerage,
}

impl BusinessLine {
    pub const ALL: [BusinessLine; 8] = [
        BusinessLine::CorporateFinance,
        BusinessLine::TradingAndSales,
        BusinessLine::RetailBanking,
        BusinessLine::CommercialBanking,
        BusinessLine::PaymentAndSettlement,
        BusinessLine::AgencyServices,
        BusinessLine::AssetManagement,
        BusinessLine::RetailBrokerage,
    ];

    /// Standardised-approach factor for the line.
    pub fn beta(self) -> f64 {
        match self {
            BusinessLine::CorporateFinance | BusinessLine::TradingAndSales | BusinessLine::PaymentAndSettlement => 0.18,
            BusinessLine::CommercialBanking | BusinessLine::AgencyServices => 0.15,
            BusinessLine::RetailBanking | BusinessLine::AssetManagement | BusinessLine::RetailBrokerage => 0.12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventType {
    InternalFraud,
    ExternalFraud,
    EmploymentPracticesAndWorkplaceSafety,
    ClientsProductsAndBusinessPractices,
    DamageToPhysicalAssets,
    BusinessDisruptionAndSystemFailures,
    ExecutionDeliveryAndProcessManagement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BaselMapping {
    pub line: BusinessLine,
    pub event: EventType,
}

/// How a cell's insurance policy accumulates recoveries within a year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverMode {
    /// Deductible and limit apply to each event separately.
    #[default]
    PerEvent,
    /// Recoveries are paid in event order until the limit is exhausted.
    Aggregate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskCell {
    pub label: String,
    pub frequency: FrequencyModel,
    pub severity: SeverityModel,
    pub insurance: Option<InsurancePolicy>,
    pub cover_mode: CoverMode,
    pub mapping: Option<BaselMapping>,
}

impl RiskCell {
    pub fn new(label: impl Into<String>, frequency: FrequencyModel, severity: SeverityModel) -> Self {
        Self {
            label: label.into(),
            frequency,
            severity,
            insurance: None,
            cover_mode: CoverMode::PerEvent,
            mapping: None,
        }
    }

    pub fn with_insurance(mut self, policy: InsurancePolicy, mode: CoverMode) -> Self {
        self.insurance = Some(policy);
        self.cover_mode = mode;
        self
    }

    pub fn with_mapping(mut self, mapping: BaselMapping) -> Self {
        self.mapping = Some(mapping);
        self
    }

    /// The same cell with insurance removed.
    pub fn gross(&self) -> Self {
        Self { insurance: None, ..self.clone() }
    }
}
