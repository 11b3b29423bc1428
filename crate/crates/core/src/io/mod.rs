//! Economy and scenario documents, and result export.
//!
//! Both documents are TOML and carry a `format_version` field. An economy
//! document has the sections `topology`, `parameters`, `fiscal`,
//! `trade_costs` (one row per sector and origin region, listing the cost to
//! every destination) and `base_year` (stocks, optionally observed flows).

mod export;

pub use export::{export_results, result_tables, Cell, ExportFormat, Table};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::BaseYearFlows;
use crate::economy::{
    defaults, validate_economy, Economy, FiscalInputs, ModelParameters, StockState, Topology, SKILLS,
};
use crate::fixtures::replacement_education;
use crate::public::{validate_scenario, PolicyInstrument, PolicyScenario};

pub const FORMAT_VERSION: u32 = 1;

fn at_line(line: &Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: parse error{}: {message}", at_line(line))]
    Parse {
        path: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{path}: schema violations:\n  {}", violations.join("\n  "))]
    Schema { path: String, violations: Vec<String> },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FileError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        FileError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn parse(path: &str, text: &str, err: toml::de::Error) -> Self {
        let line = err.span().map(|span| text[..span.start].matches('\n').count() + 1);
        FileError::Parse {
            path: path.to_string(),
            line,
            message: err.message().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologySection {
    regions: usize,
    countries: usize,
    region_country: Vec<usize>,
    households: Vec<f64>,
    sectors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TradeCostRow {
    sector: usize,
    origin: usize,
    /// Cost to every destination region, rest of the world last.
    costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FiscalSection {
    gov_spending: Vec<f64>,
    investment_share: Vec<f64>,
    household_transfers: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eu_transfers: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    final_subsidy_national: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    final_subsidy_eu: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    durable_subsidy_national: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    durable_subsidy_eu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rd_subsidy_national: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rd_subsidy_eu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    education: Option<Vec<[f64; SKILLS]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseYear {
    stocks: StockState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flows: Option<BaseYearFlows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EconomyDocument {
    format_version: u32,
    topology: TopologySection,
    parameters: ModelParameters,
    fiscal: FiscalSection,
    trade_costs: Vec<TradeCostRow>,
    base_year: BaseYear,
}

/// An economy read from disk, with the observed base-year flows if the
/// document has them.
#[derive(Debug, Clone, PartialEq)]
pub struct EconomyFile {
    pub economy: Economy,
    pub flows: Option<BaseYearFlows>,
}

fn or_default<T: std::fmt::Debug>(value: Option<T>, name: &str, default: impl FnOnce() -> T) -> T {
    value.unwrap_or_else(|| {
        let v = default();
        log::info!("fiscal.{name} not given; using {v:?}");
        v
    })
}

fn log_parameter_defaults(text: &str) {
    let Ok(doc) = text.parse::<toml::Table>() else { return };
    let given = doc.get("parameters").and_then(|v| v.as_table());
    for (key, value) in defaults::OPTIONAL_PARAMETERS {
        if !given.is_some_and(|t| t.contains_key(key)) {
            log::info!("parameters.{key} not given; using {value}");
        }
    }
}

fn trade_cost_table(rows: &[TradeCostRow], regions: usize, sectors: usize, violations: &mut Vec<String>) -> Vec<Vec<Vec<f64>>> {
    let mut tau = vec![vec![vec![f64::NAN; regions]; regions]; sectors];
    for (i, row) in rows.iter().enumerate() {
        if row.sector >= sectors || row.origin >= regions {
            violations.push(format!(
                "trade_costs row {i}: (sector {}, origin {}) out of range",
                row.sector, row.origin
            ));
            continue;
        }
        if row.costs.len() > regions {
            violations.push(format!(
                "trade_costs row {i}: {} destinations given for {regions} regions",
                row.costs.len()
            ));
        }
        let cell = &mut tau[row.sector][row.origin];
        if cell.iter().any(|v| !v.is_nan()) {
            violations.push(format!("trade_costs row {i}: duplicate row (sector {}, origin {})", row.sector, row.origin));
        }
        for (q, v) in row.costs.iter().take(regions).enumerate() {
            cell[q] = *v;
        }
    }
    for (s, origins) in tau.iter().enumerate() {
        for (r, row) in origins.iter().enumerate() {
            for (q, v) in row.iter().enumerate() {
                if v.is_nan() {
                    violations.push(format!("trade cost (sector {s}, origin {r}, destination {q}) missing"));
                }
            }
        }
    }
    tau
}

/// Parses an economy document; `path` only labels errors.
pub fn parse_economy(text: &str, path: &str) -> Result<EconomyFile, FileError> {
    let doc: EconomyDocument = toml::from_str(text).map_err(|e| FileError::parse(path, text, e))?;
    log_parameter_defaults(text);
    let schema = |violations: Vec<String>| FileError::Schema {
        path: path.to_string(),
        violations,
    };
    if doc.format_version != FORMAT_VERSION {
        return Err(schema(vec![format!(
            "format_version {} is not supported (expected {FORMAT_VERSION})",
            doc.format_version
        )]));
    }
    let top = doc.topology;
    let mut violations = Vec::new();
    let trade_costs = trade_cost_table(&doc.trade_costs, top.regions, top.sectors, &mut violations);
    if !violations.is_empty() {
        return Err(schema(violations));
    }
    let dr = top.regions.saturating_sub(1);
    let ds = top.sectors.saturating_sub(1);
    let nm = top.countries;
    let education = replacement_education(doc.parameters.human_capital_depreciation);
    let f = doc.fiscal;
    let fiscal = FiscalInputs {
        gov_spending: f.gov_spending,
        investment_share: f.investment_share,
        household_transfers: f.household_transfers,
        eu_transfers: or_default(f.eu_transfers, "eu_transfers", || vec![0.0; dr]),
        final_subsidy_national: or_default(f.final_subsidy_national, "final_subsidy_national", || {
            vec![vec![0.0; dr]; ds]
        }),
        final_subsidy_eu: or_default(f.final_subsidy_eu, "final_subsidy_eu", || vec![vec![0.0; dr]; ds]),
        durable_subsidy_national: or_default(f.durable_subsidy_national, "durable_subsidy_national", || {
            vec![0.0; dr]
        }),
        durable_subsidy_eu: or_default(f.durable_subsidy_eu, "durable_subsidy_eu", || vec![0.0; dr]),
        rd_subsidy_national: or_default(f.rd_subsidy_national, "rd_subsidy_national", || vec![0.0; nm]),
        rd_subsidy_eu: or_default(f.rd_subsidy_eu, "rd_subsidy_eu", || vec![0.0; nm]),
        education: or_default(f.education, "education", || vec![[education; SKILLS]; dr]),
    };
    let economy = Economy {
        topology: Topology {
            regions: top.regions,
            countries: top.countries,
            region_country: top.region_country,
            households: top.households,
            sectors: top.sectors,
            trade_costs,
        },
        params: doc.parameters,
        fiscal,
        stocks: doc.base_year.stocks,
    };
    let report = validate_economy(&economy);
    if !report.passed() {
        return Err(schema(report.violations));
    }
    Ok(EconomyFile {
        economy,
        flows: doc.base_year.flows,
    })
}

pub fn load_economy(path: &Path) -> Result<EconomyFile, FileError> {
    let text = fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    parse_economy(&text, &path.display().to_string())
}

/// Economy document text, with every optional field written out.
pub fn economy_to_string(economy: &Economy, flows: Option<&BaseYearFlows>) -> String {
    let t = &economy.topology;
    let f = economy.fiscal.clone();
    let mut trade_costs = Vec::with_capacity(t.sectors * t.regions);
    for (s, origins) in t.trade_costs.iter().enumerate() {
        for (r, row) in origins.iter().enumerate() {
            trade_costs.push(TradeCostRow {
                sector: s,
                origin: r,
                costs: row.clone(),
            });
        }
    }
    let doc = EconomyDocument {
        format_version: FORMAT_VERSION,
        topology: TopologySection {
            regions: t.regions,
            countries: t.countries,
            region_country: t.region_country.clone(),
            households: t.households.clone(),
            sectors: t.sectors,
        },
        parameters: economy.params.clone(),
        fiscal: FiscalSection {
            gov_spending: f.gov_spending,
            investment_share: f.investment_share,
            household_transfers: f.household_transfers,
            eu_transfers: Some(f.eu_transfers),
            final_subsidy_national: Some(f.final_subsidy_national),
            final_subsidy_eu: Some(f.final_subsidy_eu),
            durable_subsidy_national: Some(f.durable_subsidy_national),
            durable_subsidy_eu: Some(f.durable_subsidy_eu),
            rd_subsidy_national: Some(f.rd_subsidy_national),
            rd_subsidy_eu: Some(f.rd_subsidy_eu),
            education: Some(f.education),
        },
        trade_costs,
        base_year: BaseYear {
            stocks: economy.stocks.clone(),
            flows: flows.cloned(),
        },
    };
    toml::to_string(&doc).expect("economy documents contain only finite tables")
}

pub fn save_economy(path: &Path, economy: &Economy, flows: Option<&BaseYearFlows>) -> Result<(), FileError> {
    fs::write(path, economy_to_string(economy, flows)).map_err(|e| FileError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    format_version: u32,
    name: String,
    horizon: usize,
    #[serde(default)]
    instruments: Vec<PolicyInstrument>,
}

/// Parses a scenario document and checks it against `economy`.
pub fn parse_scenario(text: &str, path: &str, economy: &Economy) -> Result<PolicyScenario, FileError> {
    let doc: ScenarioDocument = toml::from_str(text).map_err(|e| FileError::parse(path, text, e))?;
    let schema = |violations: Vec<String>| FileError::Schema {
        path: path.to_string(),
        violations,
    };
    if doc.format_version != FORMAT_VERSION {
        return Err(schema(vec![format!(
            "format_version {} is not supported (expected {FORMAT_VERSION})",
            doc.format_version
        )]));
    }
    let scenario = PolicyScenario {
        name: doc.name,
        horizon: doc.horizon,
        instruments: doc.instruments,
    };
    validate_scenario(&scenario, economy).map_err(|e| schema(vec![e.to_string()]))?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path, economy: &Economy) -> Result<PolicyScenario, FileError> {
    let text = fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    parse_scenario(&text, &path.display().to_string(), economy)
}

pub fn scenario_to_string(scenario: &PolicyScenario) -> String {
    let doc = ScenarioDocument {
        format_version: FORMAT_VERSION,
        name: scenario.name.clone(),
        horizon: scenario.horizon,
        instruments: scenario.instruments.clone(),
    };
    toml::to_string(&doc).expect("scenario documents contain only finite tables")
}
