//! The `report` stage: ARI table, Sankey flows, PCA coordinates and the
//! similarity-matrix spread report, all as plot-ready CSV/JSON.

use std::fmt::Write as _;

use newsbias_core::cluster::{matrix_stddev, pca_assignments, sankey_flows, ClusterTimeline};
use newsbias_core::networks::SimilarityMatrix;
use newsbias_core::MonthKey;

use crate::config::PipelineConfig;
use crate::error::{PipelineError, Result};
use crate::formats::*;
use crate::stages::{load_month, timeline_from_file};

/// Markdown table with one row per month and its ARI against network
/// membership.
pub fn ari_markdown(rows: &[(String, Option<f64>)]) -> String {
    let mut s = String::from("| Month | ARI |\n|-------|-----|\n");
    for (month, ari) in rows {
        let value = ari.map_or_else(|| "n/a".to_string(), |a| format!("{a:.3}"));
        let _ = writeln!(s, "| {month} | {value} |");
    }
    s
}

pub fn ari_rows(timeline: &ClusterTimeline) -> Vec<(String, Option<f64>)> {
    timeline
        .months
        .iter()
        .map(|m| (m.to_string(), timeline.ari_by_month.get(m).copied()))
        .collect()
}

pub fn sankey_rows(timeline: &ClusterTimeline) -> Vec<SankeyRow> {
    sankey_flows(timeline)
        .into_iter()
        .map(|f| SankeyRow {
            from_month: f.from_month.to_string(),
            to_month: f.to_month.to_string(),
            from_cluster: f.from_cluster,
            to_cluster: f.to_cluster,
            programs: f.programs.iter().map(ToString::to_string).collect(),
            count: f.count,
        })
        .collect()
}

fn stddev(m: Option<&SimilarityMatrix>) -> Option<f64> {
    m.and_then(|m| matrix_stddev(m).ok())
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Off-diagonal standard deviation of T, S, P and the sentiment baseline
/// for every month the networks stage produced.
pub fn variance_report(cfg: &PipelineConfig) -> Result<VarianceReport> {
    let months: MonthsReport = read_json(&cfg.out_dir.join(NETWORKS_DIR).join(MONTHS_REPORT))?;
    let mut rows = Vec::new();
    for summary in &months.months {
        let month: MonthKey = summary
            .month
            .parse()
            .map_err(|e| PipelineError::Input(format!("{e}")))?;
        if !cfg.month_selected(&month) {
            continue;
        }
        let loaded = load_month(&cfg.out_dir, &month)?;
        rows.push(MonthVariance {
            month: summary.month.clone(),
            programs: loaded.combined.len(),
            topic: stddev(Some(&loaded.topic)),
            stance: stddev(Some(&loaded.stance_similarity)),
            combined: stddev(Some(&loaded.combined)),
            sentiment: stddev(loaded.sentiment_similarity.as_ref()),
        });
    }
    Ok(VarianceReport {
        mean_topic: mean(rows.iter().map(|r| r.topic)),
        mean_stance: mean(rows.iter().map(|r| r.stance)),
        mean_combined: mean(rows.iter().map(|r| r.combined)),
        mean_sentiment: mean(rows.iter().map(|r| r.sentiment)),
        months: rows,
    })
}

pub fn report(cfg: &PipelineConfig) -> Result<()> {
    let clusters: ClustersFile = read_json(&cfg.out_dir.join(CLUSTERS))?;
    let timeline = timeline_from_file(&clusters)?;

    let ari = ari_rows(&timeline);
    write_ari_csv(&cfg.out_dir.join(ARI_CSV), &ari)?;
    write_atomic(&cfg.out_dir.join(ARI_MARKDOWN), ari_markdown(&ari).as_bytes())?;

    write_json(&cfg.out_dir.join(SANKEY), &sankey_rows(&timeline))?;

    let pca = match pca_assignments(&timeline, 2) {
        Ok(p) => p
            .programs
            .iter()
            .enumerate()
            .map(|(i, id)| {
                let point = p.point(i);
                PcaRow {
                    program: id.program.clone(),
                    network: id.network.clone(),
                    x: point.first().copied().unwrap_or(0.0),
                    y: point.get(1).copied().unwrap_or(0.0),
                }
            })
            .collect(),
        Err(e) => {
            log::warn!("PCA skipped: {e}");
            Vec::new()
        }
    };
    write_pca(&cfg.out_dir.join(PCA), &pca)?;

    write_json(&cfg.out_dir.join(VARIANCE_REPORT), &variance_report(cfg)?)?;
    log::info!("reports written to {}", cfg.out_dir.display());
    Ok(())
}
