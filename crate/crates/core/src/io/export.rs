//! Result tables of a trajectory and their CSV and JSON writers.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde_json::{json, Value};

use super::{FileError, FORMAT_VERSION};
use crate::dynamics::Trajectory;
use crate::economy::Economy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Index(usize),
    Value(f64),
}

impl Cell {
    /// Text form: indices as integers, values in scientific notation with
    /// 12 significant digits.
    pub fn text(&self) -> String {
        match self {
            Cell::Index(i) => i.to_string(),
            Cell::Value(v) => format!("{v:.11e}"),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Index(i) => json!(i),
            Cell::Value(_) => self
                .text()
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }
}

/// The four result tables: `periods`, `regions`, `sectors` and `countries`,
/// rows ordered by period, then by the remaining keys.
pub fn result_tables(economy: &Economy, trajectory: &Trajectory) -> Vec<Table> {
    let t = &economy.topology;
    let (dr, ds, nm) = (t.domestic_regions(), t.domestic_sectors(), t.countries);
    let mut periods = Table::new(
        "periods",
        &["period", "gdp", "walras", "walras_relative", "residual_norm", "iterations", "eu_budget"],
    );
    let mut regions = Table::new(
        "regions",
        &[
            "period",
            "region",
            "country",
            "gdp",
            "consumer_price",
            "wage_low",
            "wage_medium",
            "wage_high",
            "employment_low",
            "employment_medium",
            "employment_high",
            "durable_firms",
            "durable_output",
            "capital",
            "public_capital",
            "rental_rate",
            "innovation_probability",
            "consumption",
            "savings",
        ],
    );
    let mut sectors = Table::new(
        "sectors",
        &["period", "sector", "region", "price", "output", "firms", "profit", "zero_profit_output"],
    );
    let mut countries = Table::new(
        "countries",
        &[
            "period",
            "country",
            "gdp",
            "exports",
            "imports",
            "trade_balance",
            "current_account",
            "tax_revenue",
            "deficit",
            "gov_debt",
            "bond_rate",
            "design_price",
            "new_designs",
        ],
    );
    use Cell::{Index, Value as V};
    for rec in &trajectory.periods {
        let s = &rec.solution;
        let st = &rec.stocks;
        let period = Index(rec.period);
        periods.rows.push(vec![
            period,
            V(s.gdp),
            V(s.walras),
            V(s.walras / s.gdp),
            V(s.residual_norm),
            Index(s.iterations),
            V(s.eu_budget),
        ]);
        for r in 0..dr {
            let h = t.households[r];
            let mut row = vec![period, Index(r), Index(t.country_of(r)), V(s.gdp_region[r]), V(s.consumer_prices[r])];
            row.extend(s.wages[r].iter().map(|w| V(*w)));
            row.extend(s.labour[r].iter().map(|l| V(h * l)));
            row.extend([
                V(s.durable_firms[r]),
                V(s.durable_output[r]),
                V(st.capital[r]),
                V(st.public_capital[r]),
                V(s.rental_rates[r]),
                V(s.innovation_probability[r]),
                V(s.consumption[r]),
                V(s.savings[r]),
            ]);
            regions.rows.push(row);
        }
        for sec in 0..ds {
            for r in 0..dr {
                sectors.rows.push(vec![
                    period,
                    Index(sec),
                    Index(r),
                    V(s.prices[sec][r]),
                    V(s.output[sec][r]),
                    V(s.firms[sec][r]),
                    V(s.final_profits[sec][r]),
                    V(s.output_target[sec][r]),
                ]);
            }
        }
        for m in 0..nm {
            countries.rows.push(vec![
                period,
                Index(m),
                V(s.gdp_country[m]),
                V(s.exports[m]),
                V(s.imports[m]),
                V(s.trade_balance[m]),
                V(s.current_account[m]),
                V(s.tax_revenue[m]),
                V(s.deficit[m]),
                V(st.gov_debt[m]),
                V(s.bond_rates[m]),
                V(s.design_prices[m]),
                V(s.new_designs[m]),
            ]);
        }
    }
    vec![periods, regions, sectors, countries]
}

fn write_csv(path: &Path, table: &Table) -> Result<(), FileError> {
    let io = |e: std::io::Error| FileError::io(path, e);
    let csv_err = |e: csv::Error| io(e.into());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::text)).map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

/// Writes the result tables of `trajectory` into `dir`: one
/// `<table>.csv` per table, or a single `results.json`. Returns the paths
/// written.
pub fn export_results(
    economy: &Economy,
    trajectory: &Trajectory,
    dir: &Path,
    format: ExportFormat,
) -> Result<Vec<PathBuf>, FileError> {
    if trajectory.is_empty() {
        return Err(FileError::Schema {
            path: dir.display().to_string(),
            violations: vec!["trajectory has no periods to export".into()],
        });
    }
    fs::create_dir_all(dir).map_err(|e| FileError::io(dir, e))?;
    let tables = result_tables(economy, trajectory);
    match format {
        ExportFormat::Csv => {
            let mut written = Vec::new();
            for table in &tables {
                let path = dir.join(format!("{}.csv", table.name));
                write_csv(&path, table)?;
                written.push(path);
            }
            Ok(written)
        }
        ExportFormat::Json => {
            let doc = json!({
                "format_version": FORMAT_VERSION,
                "tables": tables
                    .iter()
                    .map(|t| json!({
                        "name": t.name,
                        "columns": t.columns,
                        "rows": t.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
                    }))
                    .collect::<Vec<_>>(),
            });
            let path = dir.join("results.json");
            let mut text = serde_json::to_string_pretty(&doc).expect("result tables serialise");
            text.push('\n');
            fs::write(&path, text).map_err(|e| FileError::io(&path, e))?;
            Ok(vec![path])
        }
    }
}
