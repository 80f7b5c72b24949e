//! Historical series CSVs for calibration: one file per region, columns
//! `year,population,tfp,capital,gdp,emissions,l_a`. Empty cells mark missing
//! values; `l_a` is a per-region constant read from its first non-empty cell.

use crate::calibration::HistoricalSeries;
use crate::error::{Error, Result};

pub const SERIES_HEADER: &str = "year,population,tfp,capital,gdp,emissions,l_a";

pub fn parse_series_csv(id: &str, text: &str) -> Result<HistoricalSeries> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim_end() != SERIES_HEADER {
        return Err(Error::Parse {
            offset: 0,
            message: format!("unexpected series header '{header}', expected '{SERIES_HEADER}'"),
        });
    }
    let mut series = HistoricalSeries {
        id: id.to_string(),
        years: Vec::new(),
        population: Vec::new(),
        tfp: Vec::new(),
        capital: Vec::new(),
        gdp: Vec::new(),
        emissions: Vec::new(),
        l_a: None,
    };
    let mut offset = header.len() + 1;
    for line in lines {
        let line_start = offset;
        offset += line.len() + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Parse {
                offset: line_start,
                message: format!("series row has {} fields, expected 7", fields.len()),
            });
        }
        let year = fields[0].trim().parse::<i32>().map_err(|_| Error::Parse {
            offset: line_start,
            message: format!("'{}' is not a year", fields[0]),
        })?;
        let opt = |f: &str| -> Result<Option<f64>> {
            let f = f.trim();
            if f.is_empty() {
                return Ok(None);
            }
            f.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                offset: line_start,
                message: format!("'{f}' is not a number"),
            })
        };
        series.years.push(year);
        series.population.push(opt(fields[1])?);
        series.tfp.push(opt(fields[2])?);
        series.capital.push(opt(fields[3])?);
        series.gdp.push(opt(fields[4])?);
        series.emissions.push(opt(fields[5])?);
        if series.l_a.is_none() {
            series.l_a = opt(fields[6])?;
        }
    }
    series.validate()?;
    Ok(series)
}

pub fn write_series_csv(series: &HistoricalSeries) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    let cell = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (i, year) in series.years.iter().enumerate() {
        let l_a = if i == 0 { series.l_a } else { None };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            year,
            cell(&series.population[i]),
            cell(&series.tfp[i]),
            cell(&series.capital[i]),
            cell(&series.gdp[i]),
            cell(&series.emissions[i]),
            cell(&l_a),
        ));
    }
    out
}
