//! CSV renderings of metrics reports.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::evaluation::{Metric, MetricsReport, SizeBin};

/// Aggregate block (`metric,K,value`), a blank line, then one row per event.
pub fn write_metrics_csv<W: Write>(report: &MetricsReport, mut w: W) -> Result<()> {
    writeln!(w, "metric,K,value")?;
    for metric in Metric::ALL {
        for a in &report.aggregates {
            let v = match metric {
                Metric::Precision => a.precision,
                Metric::Recall => a.recall,
                Metric::Ndcg => a.ndcg,
            };
            writeln!(w, "{},{},{}", metric.name(), a.k, v)?;
        }
    }
    writeln!(w)?;
    write!(w, "event_id,size,rank")?;
    for &k in &report.ks {
        for metric in Metric::ALL {
            write!(w, ",{}@{k}", metric.name())?;
        }
    }
    writeln!(w)?;
    for r in &report.records {
        write!(w, "{},{},{}", r.event_id, r.size, r.rank)?;
        for m in &r.metrics {
            for metric in Metric::ALL {
                write!(w, ",{}", metric.of(m))?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Long-format rows `series,metric,K,value` for plotting.
pub fn write_long_csv<W: Write>(series: &[(String, &MetricsReport)], mut w: W) -> Result<()> {
    writeln!(w, "series,metric,K,value")?;
    for (name, report) in series {
        for metric in Metric::ALL {
            for a in &report.aggregates {
                let v = match metric {
                    Metric::Precision => a.precision,
                    Metric::Recall => a.recall,
                    Metric::Ndcg => a.ndcg,
                };
                writeln!(w, "{name},{},{},{v}", metric.name(), a.k)?;
            }
        }
    }
    Ok(())
}

/// `k_remove,metric,K,value` rows, one block per removal level.
pub fn write_ablation_csv<W: Write>(rows: &[(usize, MetricsReport)], mut w: W) -> Result<()> {
    writeln!(w, "k_remove,metric,K,value")?;
    for (k_remove, report) in rows {
        for metric in Metric::ALL {
            for a in &report.aggregates {
                let v = match metric {
                    Metric::Precision => a.precision,
                    Metric::Recall => a.recall,
                    Metric::Ndcg => a.ndcg,
                };
                writeln!(w, "{k_remove},{},{},{v}", metric.name(), a.k)?;
            }
        }
    }
    Ok(())
}

/// `bin,events,metric,K,value`; empty bins are listed with no metric rows.
pub fn write_breakdown_csv<W: Write>(rows: &[(SizeBin, Option<MetricsReport>)], mut w: W) -> Result<()> {
    writeln!(w, "bin,events,metric,K,value")?;
    for (bin, report) in rows {
        let Some(report) = report else {
            writeln!(w, "{},0,,,", bin.label())?;
            continue;
        };
        for metric in Metric::ALL {
            for a in &report.aggregates {
                let v = match metric {
                    Metric::Precision => a.precision,
                    Metric::Recall => a.recall,
                    Metric::Ndcg => a.ndcg,
                };
                writeln!(
                    w,
                    "{},{},{},{},{v}",
                    bin.label(),
                    report.records.len(),
                    metric.name(),
                    a.k
                )?;
            }
        }
    }
    Ok(())
}

/// Event ids in file order, and each metric column's values in that order.
pub type PerEventBlock = (Vec<String>, BTreeMap<String, Vec<f64>>);

/// Reads the per-event block of a metrics CSV.
pub fn read_per_event_block<R: Read>(source: R) -> Result<PerEventBlock> {
    let mut lines = BufReader::new(source).lines().enumerate();
    // Skip the aggregate block.
    for (_, line) in lines.by_ref() {
        if line?.is_empty() {
            break;
        }
    }
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format("metrics CSV has no per-event block".into()))?;
    let header: Vec<String> = header?.split(',').map(str::to_owned).collect();
    if header.first().map(String::as_str) != Some("event_id") {
        return Err(Error::Format("per-event block must start with event_id".into()));
    }
    let mut ids = Vec::new();
    let mut columns: BTreeMap<String, Vec<f64>> = header[1..].iter().map(|h| (h.clone(), Vec::new())).collect();
    for (lineno, line) in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::parse(lineno + 1, "column count differs from header"));
        }
        ids.push(fields[0].to_owned());
        for (name, raw) in header[1..].iter().zip(&fields[1..]) {
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::parse(lineno + 1, format!("bad number {raw:?}")))?;
            columns.get_mut(name).expect("header column").push(v);
        }
    }
    Ok((ids, columns))
}
