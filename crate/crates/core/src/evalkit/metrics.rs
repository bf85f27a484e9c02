use serde::{Deserialize, Serialize};

use super::{Class, OccupancyGrid};
use crate::error::{Error, Result};
use crate::polargrid::{unscale_height, ElevationMap, PartialElevationMap};

/// Dataset-level TP/FP/FN tallies for the free and occupied classes.
///
/// A cell labeled free or occupied is a true positive when predicted as its
/// label and a false negative otherwise (including an unknown prediction).
/// A free or occupied prediction on a cell with any other label is a false
/// positive for the predicted class, so unknown-labeled cells only ever
/// contribute false positives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: [u64; 2],
    pub fp: [u64; 2],
    pub fn_: [u64; 2],
}

impl Confusion {
    pub fn add_cell(&mut self, pred: Class, label: Class) {
        if label != Class::Unknown {
            let l = label.index();
            if pred == label {
                self.tp[l] += 1;
                return;
            }
            self.fn_[l] += 1;
        }
        if pred != Class::Unknown && pred != label {
            self.fp[pred.index()] += 1;
        }
    }

    pub fn add(&mut self, pred: &OccupancyGrid, label: &OccupancyGrid) -> Result<()> {
        pred.spec.same_as(&label.spec)?;
        for (&p, &l) in pred.labels.iter().zip(&label.labels) {
            self.add_cell(p, l);
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Confusion) {
        for c in 0..2 {
            self.tp[c] += other.tp[c];
            self.fp[c] += other.fp[c];
            self.fn_[c] += other.fn_[c];
        }
    }

    pub fn metrics(&self) -> SegMetrics {
        let iou = |c: usize| {
            let denom = self.tp[c] + self.fp[c] + self.fn_[c];
            if denom == 0 {
                (0.0, true)
            } else {
                (self.tp[c] as f64 / denom as f64, false)
            }
        };
        let (iou_free, free_empty) = iou(0);
        let (iou_occ, occ_empty) = iou(1);
        SegMetrics {
            counts: *self,
            iou_free,
            iou_occ,
            miou: 0.5 * (iou_free + iou_occ),
            empty_class: [free_empty, occ_empty],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegMetrics {
    pub counts: Confusion,
    pub iou_free: f64,
    pub iou_occ: f64,
    pub miou: f64,
    /// Set for a class whose IoU denominator was zero (IoU reported as 0).
    pub empty_class: [bool; 2],
}

/// mIoU over a whole dataset: counts are summed over every frame before
/// any division.
pub fn compute_miou(preds: &[OccupancyGrid], labels: &[OccupancyGrid]) -> Result<SegMetrics> {
    if preds.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: (labels.len(), 0),
            got: (preds.len(), 0),
        });
    }
    let mut c = Confusion::default();
    for (p, l) in preds.iter().zip(labels) {
        c.add(p, l)?;
    }
    Ok(c.metrics())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightMetrics {
    /// `None` when no measured cell carried that label.
    pub mae_free_cm: Option<f64>,
    pub mae_occ_cm: Option<f64>,
    /// Mean over the classes present.
    pub mae_mean_cm: f64,
    pub count_free: u64,
    pub count_occ: u64,
}

/// Running sums for masked height errors, split by label.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HeightAccumulator {
    sum_cm: [f64; 2],
    count: [u64; 2],
}

impl HeightAccumulator {
    pub fn add(
        &mut self,
        pred: &ElevationMap,
        y: &PartialElevationMap,
        labels: &OccupancyGrid,
    ) -> Result<()> {
        pred.spec.same_as(&y.spec)?;
        pred.spec.same_as(&labels.spec)?;
        let spec = y.spec;
        for k in 0..spec.cells() {
            if !y.mask[k] {
                continue;
            }
            let c = match labels.labels[k] {
                Class::Free => 0,
                Class::Occupied => 1,
                Class::Unknown => continue,
            };
            let hp = unscale_height((pred.heights[k] as f64).clamp(-1.0, 1.0), &spec)?;
            let hy = unscale_height(y.heights[k] as f64, &spec)?;
            self.sum_cm[c] += (hp - hy).abs() * 100.0;
            self.count[c] += 1;
        }
        Ok(())
    }

    pub fn metrics(&self) -> HeightMetrics {
        let mean = |c: usize| (self.count[c] > 0).then(|| self.sum_cm[c] / self.count[c] as f64);
        let free = mean(0);
        let occ = mean(1);
        let present: alloc::vec::Vec<f64> = [free, occ].into_iter().flatten().collect();
        let mae_mean_cm = if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        };
        HeightMetrics {
            mae_free_cm: free,
            mae_occ_cm: occ,
            mae_mean_cm,
            count_free: self.count[0],
            count_occ: self.count[1],
        }
    }
}

/// Masked height MAE in centimeters, evaluated only where `y` has a
/// measurement and reported separately for free and occupied cells.
pub fn compute_height_mae(
    pred: &ElevationMap,
    y: &PartialElevationMap,
    labels: &OccupancyGrid,
) -> Result<HeightMetrics> {
    let mut acc = HeightAccumulator::default();
    acc.add(pred, y, labels)?;
    Ok(acc.metrics())
}
