//! CSV reports for segmentation and height evaluations.

use radarsim_core::evalkit::HeightMetrics;

use crate::evaluation::{mean_std, SeedOutcome};

pub const SEG_HEADER: &str = "config,seed,iou_free,iou_occ,miou";
pub const HEIGHT_HEADER: &str = "config,seed,mae_free_cm,mae_occ_cm,mae_mean_cm";

fn pm(values: &[f64]) -> String {
    let (m, s) = mean_std(values);
    format!("{m:.4}±{s:.4}")
}

/// Per-seed rows for every configuration followed by one `mean±std` row each.
pub fn seg_report(rows: &[(String, Vec<SeedOutcome>)]) -> String {
    let mut out = String::from(SEG_HEADER);
    out.push('\n');
    for (config, runs) in rows {
        for r in runs {
            let m = &r.metrics;
            out.push_str(&format!("{config},{},{},{},{}\n", r.seed, m.iou_free, m.iou_occ, m.miou));
        }
    }
    for (config, runs) in rows {
        let col = |f: fn(&SeedOutcome) -> f64| runs.iter().map(f).collect::<Vec<_>>();
        out.push_str(&format!(
            "{config},mean±std,{},{},{}\n",
            pm(&col(|r| r.metrics.iou_free)),
            pm(&col(|r| r.metrics.iou_occ)),
            pm(&col(|r| r.metrics.miou)),
        ));
    }
    out
}

pub fn height_report(rows: &[(String, u64, HeightMetrics)]) -> String {
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from(HEIGHT_HEADER);
    out.push('\n');
    for (config, seed, m) in rows {
        out.push_str(&format!(
            "{config},{seed},{},{},{}\n",
            opt(m.mae_free_cm),
            opt(m.mae_occ_cm),
            m.mae_mean_cm
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use radarsim_core::evalkit::{Confusion, SegMetrics};

    fn outcome(seed: u64, miou: f64) -> SeedOutcome {
        SeedOutcome {
            seed,
            metrics: SegMetrics {
                counts: Confusion::default(),
                iou_free: miou,
                iou_occ: miou,
                miou,
                empty_class: [false; 2],
            },
            best_epoch: 0,
            holdout_miou: vec![],
        }
    }

    #[test]
    fn seg_rows_then_aggregates() {
        let text = seg_report(&[("e".into(), vec![outcome(0, 0.5), outcome(1, 0.7)])]);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], SEG_HEADER);
        assert_eq!(lines[1], "e,0,0.5,0.5,0.5");
        assert_eq!(lines[3], "e,mean±std,0.6000±0.1414,0.6000±0.1414,0.6000±0.1414");
    }

    #[test]
    fn absent_height_class_is_empty() {
        let m = HeightMetrics {
            mae_free_cm: Some(37.0),
            mae_occ_cm: None,
            mae_mean_cm: 37.0,
            count_free: 3,
            count_occ: 0,
        };
        let text = height_report(&[("d".into(), 2, m)]);
        assert_eq!(text.lines().nth(1).unwrap(), "d,2,37,,37");
    }
}
