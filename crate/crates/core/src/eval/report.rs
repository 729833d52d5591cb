use std::fmt::Write as _;

use serde::Serialize;

use super::stats::{confidence_interval, welch_t_test};
use crate::model::Variant;

/// Per-seed values of one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub metric: String,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub variant: Variant,
    pub metric: String,
    /// Seeds that produced a defined value.
    pub n: usize,
    pub mean: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Welch two-sided p-value against the full model (absent for `full`).
    pub p_vs_full: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub variant: Variant,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<MetricRow>,
    pub failures: Vec<RunFailure>,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub provenance: String,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:?}"))
}

impl EvalReport {
    /// Aggregates per-seed samples. `samples` maps each variant to its
    /// metric samples; entries are sorted so input order does not matter.
    pub fn aggregate(
        mut samples: Vec<(Variant, Vec<MetricSample>)>,
        mut failures: Vec<RunFailure>,
        config_hash: String,
        seeds: &[u64],
        provenance: String,
    ) -> Self {
        samples.sort_by_key(|(v, _)| *v);
        for (_, metrics) in samples.iter_mut() {
            for m in metrics.iter_mut() {
                let mut pairs: Vec<(u64, f64)> = m.seeds.iter().copied().zip(m.values.iter().copied()).collect();
                pairs.sort_by_key(|(s, _)| *s);
                (m.seeds, m.values) = pairs.into_iter().unzip();
            }
        }
        failures.sort_by_key(|a| (a.variant, a.seed));
        let mut seeds = seeds.to_vec();
        seeds.sort_unstable();
        seeds.dedup();

        let full: Option<&Vec<MetricSample>> = samples.iter().find(|(v, _)| *v == Variant::Full).map(|(_, m)| m);
        let mut rows = Vec::new();
        for (variant, metrics) in &samples {
            for m in metrics {
                let n = m.values.len();
                let mean = (n > 0).then(|| m.values.iter().sum::<f64>() / n as f64);
                let ci = confidence_interval(&m.values, 0.95).ok();
                let p_vs_full = if *variant == Variant::Full {
                    None
                } else {
                    full.and_then(|f| f.iter().find(|fm| fm.metric == m.metric))
                        .and_then(|fm| welch_t_test(&fm.values, &m.values).ok())
                        .map(|w| w.p)
                };
                rows.push(MetricRow {
                    variant: *variant,
                    metric: m.metric.clone(),
                    n,
                    mean,
                    ci_low: ci.map(|c| c.low),
                    ci_high: ci.map(|c| c.high),
                    p_vs_full,
                });
            }
        }
        EvalReport {
            rows,
            failures,
            config_hash,
            seeds,
            provenance,
        }
    }

    pub fn row(&self, variant: Variant, metric: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.variant == variant && r.metric == metric)
    }

    fn seed_list(&self) -> String {
        self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
    }

    /// `variant,metric,n,mean,ci_low,ci_high,p_vs_full` after `#` metadata lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# config_hash={} seeds={}", self.config_hash, self.seed_list());
        let _ = writeln!(s, "# data={}", self.provenance);
        for f in &self.failures {
            let _ = writeln!(s, "# failed variant={} seed={}: {}", f.variant, f.seed, f.message);
        }
        s.push_str("variant,metric,n,mean,ci_low,ci_high,p_vs_full\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.variant,
                r.metric,
                r.n,
                cell(r.mean),
                cell(r.ci_low),
                cell(r.ci_high),
                cell(r.p_vs_full)
            );
        }
        s
    }

    /// One JSON object per row, each carrying the config hash and seeds.
    pub fn to_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            #[serde(flatten)]
            row: &'a MetricRow,
            config_hash: &'a str,
            seeds: &'a [u64],
        }
        let mut s = String::new();
        for row in &self.rows {
            let rec = Record {
                row,
                config_hash: &self.config_hash,
                seeds: &self.seeds,
            };
            s.push_str(&serde_json::to_string(&rec).expect("report rows serialise"));
            s.push('\n');
        }
        s
    }

    /// Human-readable table, classification metrics as percentages.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<9} {:<10} {:>26} {:>10}", "variant", "metric", "mean (95% CI)", "p vs full");
        for r in &self.rows {
            let percent = !matches!(r.metric.as_str(), "mae" | "mse");
            let value = match (r.mean, r.ci_low, r.ci_high) {
                (Some(m), Some(lo), Some(hi)) => {
                    if percent {
                        format_percent_interval(m, lo, hi)
                    } else {
                        format!("{m:.4} ({lo:.4}-{hi:.4})")
                    }
                }
                (Some(m), _, _) => {
                    if percent {
                        format!("{:.2}", m * 100.0)
                    } else {
                        format!("{m:.4}")
                    }
                }
                _ => "n/a".into(),
            };
            let p = r.p_vs_full.map_or_else(|| "-".to_string(), |p| format!("{p:.4}"));
            let _ = writeln!(s, "{:<9} {:<10} {:>26} {:>10}", r.variant.name(), r.metric, value, p);
        }
        s
    }
}

/// `96.32 (95.50-97.14)` from fractions.
pub fn format_percent_interval(mean: f64, low: f64, high: f64) -> String {
    format!("{:.2} ({:.2}-{:.2})", mean * 100.0, low * 100.0, high * 100.0)
}
