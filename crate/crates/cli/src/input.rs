//! Data-file ingestion: plain value lists, grouped class rows, and price
//! series converted to ratio gains.

use adeqboot_core::adequacy::GroupedData;
use adeqboot_core::models::Sample;

use crate::CliError;

/// Parse one real per line. A single non-numeric first line is treated as
/// a header and skipped.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let mut values = Vec::new();
    let mut first_content_line = true;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if first_content_line => {} // header
            Err(_) => {
                return Err(CliError::run(format!(
                    "line {}: cannot parse '{line}' as a number",
                    lineno + 1
                )))
            }
        }
        first_content_line = false;
    }
    if values.is_empty() {
        return Err(CliError::run("no numeric values found in input"));
    }
    Ok(values)
}

fn parse_boundary(token: &str, lineno: usize) -> Result<f64, CliError> {
    match token.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| CliError::run(format!("line {lineno}: cannot parse boundary '{t}'"))),
    }
}

/// Parse grouped rows `lower,upper,count`. Rows must be contiguous: each
/// row's lower boundary equals the previous row's upper boundary.
pub fn parse_grouped(text: &str) -> Result<GroupedData, CliError> {
    let mut boundaries: Vec<f64> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut first_content_line = true;
    for (lineno0, raw) in text.lines().enumerate() {
        let lineno = lineno0 + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            if first_content_line {
                first_content_line = false;
                continue; // header
            }
            return Err(CliError::run(format!(
                "line {lineno}: expected 'lower,upper,count', got '{line}'"
            )));
        }
        let lower = parse_boundary(parts[0], lineno);
        let upper = parse_boundary(parts[1], lineno);
        let count = parts[2].trim().parse::<u64>();
        match (lower, upper, count) {
            (Ok(lower), Ok(upper), Ok(count)) => {
                if let Some(&last) = boundaries.last() {
                    if lower != last {
                        return Err(CliError::run(format!(
                            "line {lineno}: classes must be contiguous ({lower} after {last})"
                        )));
                    }
                } else {
                    boundaries.push(lower);
                }
                boundaries.push(upper);
                counts.push(count);
            }
            _ if first_content_line => {} // header
            (l, u, c) => {
                l?;
                u?;
                c.map_err(|_| CliError::run(format!("line {lineno}: bad count")))?;
            }
        }
        first_content_line = false;
    }
    GroupedData::new(boundaries, counts).map_err(CliError::from)
}

/// Serialize grouped data back to its row format.
pub fn format_grouped(grouped: &GroupedData) -> String {
    let fmt = |b: f64| -> String {
        if b == f64::INFINITY {
            "inf".into()
        } else if b == f64::NEG_INFINITY {
            "-inf".into()
        } else {
            format!("{b}")
        }
    };
    let b = grouped.boundaries();
    let mut out = String::new();
    for (i, &c) in grouped.counts().iter().enumerate() {
        out.push_str(&format!("{},{},{c}\n", fmt(b[i]), fmt(b[i + 1])));
    }
    out
}

/// Ratio gains price[t] / price[t - lag] over non-overlapping windows:
/// t = lag, 2*lag, 3*lag, ...
pub fn gains_from_prices(prices: &[f64], lag: usize) -> Result<Vec<f64>, CliError> {
    if lag == 0 {
        return Err(CliError::config("lag must be positive"));
    }
    if prices.iter().any(|&p| p <= 0.0) {
        return Err(CliError::run("price series must be strictly positive"));
    }
    let n_windows = prices.len().saturating_sub(1) / lag;
    if n_windows == 0 {
        return Err(CliError::run(format!(
            "need more than {lag} prices to form one gain at lag {lag}"
        )));
    }
    Ok((1..=n_windows)
        .map(|i| prices[i * lag] / prices[(i - 1) * lag])
        .collect())
}

/// Keep only values at or above the limit.
pub fn truncate_values(values: Vec<f64>, limit: f64) -> Result<Vec<f64>, CliError> {
    let kept: Vec<f64> = values.into_iter().filter(|&v| v >= limit).collect();
    if kept.is_empty() {
        return Err(CliError::run(format!(
            "truncation at {limit} removes every observation"
        )));
    }
    Ok(kept)
}

pub fn to_sample(values: Vec<f64>) -> Result<Sample, CliError> {
    Sample::new(values).map_err(CliError::from)
}
