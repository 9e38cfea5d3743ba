//! Results CSV (one row per run) and the summary JSON.
//!
//! Column order: `poa, roa, pps, rps, psa`, then `pick_stations,
//! robots_per_station, sku_count, return_share, order_size`, then `seed`,
//! the nine measures and a trailing `error` that is empty for completed runs.
//! Measures without a value (no completed orders) are empty cells.

use std::io::{Read, Write};

use rmfs_core::engine::WarehouseScenario;
use rmfs_core::experiments::{RunRecord, Summary};
use rmfs_core::metrics::MetricsRecord;
use rmfs_core::orders::OrderSize;
use rmfs_core::rules::RuleConfiguration;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    poa: String,
    roa: String,
    pps: String,
    rps: String,
    psa: String,
    pick_stations: u32,
    robots_per_station: u32,
    sku_count: u32,
    return_share: f64,
    order_size: OrderSize,
    seed: u64,
    unit_throughput: Option<f64>,
    order_throughput: Option<f64>,
    order_turnover_time: Option<f64>,
    distance_traveled: Option<f64>,
    order_offset: Option<f64>,
    late_fraction: Option<f64>,
    pile_on: Option<f64>,
    station_idle_time: Option<f64>,
    unit_throughput_score: Option<f64>,
    error: String,
}

pub const COLUMNS: [&str; 21] = [
    "poa",
    "roa",
    "pps",
    "rps",
    "psa",
    "pick_stations",
    "robots_per_station",
    "sku_count",
    "return_share",
    "order_size",
    "seed",
    "unit_throughput",
    "order_throughput",
    "order_turnover_time",
    "distance_traveled",
    "order_offset",
    "late_fraction",
    "pile_on",
    "station_idle_time",
    "unit_throughput_score",
    "error",
];

impl Row {
    fn from_record(r: &RunRecord) -> Self {
        let [poa, roa, pps, rps, psa] = r.rc.names().map(String::from);
        let m = r.metrics.as_ref();
        Row {
            poa,
            roa,
            pps,
            rps,
            psa,
            pick_stations: r.ws.pick_stations,
            robots_per_station: r.ws.robots_per_station,
            sku_count: r.ws.sku_count,
            return_share: r.ws.return_share,
            order_size: r.ws.order_size,
            seed: r.seed,
            unit_throughput: m.map(|m| m.unit_throughput),
            order_throughput: m.map(|m| m.order_throughput),
            order_turnover_time: m.and_then(|m| m.order_turnover_time),
            distance_traveled: m.map(|m| m.distance_traveled),
            order_offset: m.and_then(|m| m.order_offset),
            late_fraction: m.and_then(|m| m.late_fraction),
            pile_on: m.and_then(|m| m.pile_on),
            station_idle_time: m.map(|m| m.station_idle_time),
            unit_throughput_score: m.map(|m| m.unit_throughput_score),
            error: r.error.clone().unwrap_or_default(),
        }
    }

    fn into_record(self) -> anyhow::Result<RunRecord> {
        let rc = RuleConfiguration::new(
            self.poa.parse()?,
            self.roa.parse()?,
            self.pps.parse()?,
            self.rps.parse()?,
            self.psa.parse()?,
        )?;
        let ws = WarehouseScenario {
            pick_stations: self.pick_stations,
            robots_per_station: self.robots_per_station,
            sku_count: self.sku_count,
            return_share: self.return_share,
            order_size: self.order_size,
        };
        let metrics = match (self.error.is_empty(), self.unit_throughput_score) {
            (true, Some(score)) => {
                let unit_throughput = self.unit_throughput.unwrap_or(0.0);
                Some(MetricsRecord {
                    unit_throughput,
                    order_throughput: self.order_throughput.unwrap_or(0.0),
                    order_turnover_time: self.order_turnover_time,
                    distance_traveled: self.distance_traveled.unwrap_or(0.0),
                    order_offset: self.order_offset,
                    late_fraction: self.late_fraction,
                    pile_on: self.pile_on,
                    station_idle_time: self.station_idle_time.unwrap_or(0.0),
                    unit_throughput_score: score,
                    upper_bound: if score > 0.0 { unit_throughput / score } else { 0.0 },
                })
            }
            _ => None,
        };
        Ok(RunRecord {
            rc,
            ws,
            rc_index: 0,
            ws_index: 0,
            repetition: 0,
            seed: self.seed,
            metrics,
            error: (!self.error.is_empty()).then_some(self.error),
        })
    }
}

pub struct ResultsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ResultsWriter<W> {
    pub fn new(out: W) -> Self {
        Self { inner: csv::WriterBuilder::new().has_headers(true).from_writer(out) }
    }

    pub fn write(&mut self, record: &RunRecord) -> csv::Result<()> {
        self.inner.serialize(Row::from_record(record))?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> anyhow::Result<W> {
        self.inner.into_inner().map_err(|e| anyhow::anyhow!("flushing results: {}", e.error()))
    }
}

pub fn read_results(input: impl Read) -> anyhow::Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(COLUMNS) {
        anyhow::bail!("unexpected results header: {}", headers.iter().collect::<Vec<_>>().join(","));
    }
    rdr.deserialize::<Row>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| anyhow::anyhow!("row {}: {e}", i + 2))?;
            row.into_record().map_err(|e| anyhow::anyhow!("row {}: {e}", i + 2))
        })
        .collect()
}

pub fn write_summary(summary: &Summary, out: impl Write) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(out, summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rmfs_core::experiments::benchmark;

    fn sample() -> Vec<RunRecord> {
        let m = MetricsRecord {
            unit_throughput: 300.0,
            order_throughput: 100.0,
            order_turnover_time: None,
            distance_traveled: 1234.5,
            order_offset: Some(-10.0),
            late_fraction: Some(0.25),
            pile_on: Some(2.5),
            station_idle_time: 0.375,
            unit_throughput_score: 0.625,
            upper_bound: 480.0,
        };
        let ok = RunRecord {
            rc: benchmark("Greedy").unwrap(),
            ws: WarehouseScenario::default(),
            rc_index: 0,
            ws_index: 0,
            repetition: 0,
            seed: 42,
            metrics: Some(m),
            error: None,
        };
        let failed = RunRecord { metrics: None, error: Some("livelock, robot 3".into()), seed: 43, ..ok.clone() };
        vec![ok, failed]
    }

    #[test]
    fn round_trip() {
        let recs = sample();
        let mut w = ResultsWriter::new(Vec::new());
        for r in &recs {
            w.write(r).unwrap();
        }
        let bytes = w.into_inner().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("poa,roa,pps,rps,psa,pick_stations,"));
        assert!(text.contains("PodMatch,PodBatch,PileOn,Emptiest,StationBased,2,4,1000,0.0,Mixed,42,300.0,100.0,,"));
        let back = read_results(&bytes[..]).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_results("a,b\n1,2\n".as_bytes()).is_err());
    }
}
