//! ROC/AUC over block predictions and annotated overlay rendering.
//!
//! The curve is the exact empirical ROC: one operating point per distinct
//! prediction value plus sentinels beyond both extremes, with trapezoidal
//! AUC. Ground truth binarizes the face-fraction label at a recorded
//! threshold.

use crate::raster::GrayImage;
use crate::{Error, Result};
use serde::Serialize;
use std::path::Path;

/// Default ground-truth binarization: a block "contains a face" when at
/// least 10% of it is covered.
pub const DEFAULT_TAU_GT: f32 = 0.1;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RocReport {
    /// Operating points sorted by threshold descending (FPR ascending).
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub tau_gt: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Exact empirical ROC with trapezoidal AUC. Predictions are classified
/// positive when `pred >= threshold`; ground truth is `label >= tau_gt`.
pub fn roc_curve(preds: &[f32], labels: &[f32], tau_gt: f32) -> Result<RocReport> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(Error::Parameter(format!(
            "roc_curve: {} predictions vs {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let mut pairs: Vec<(f64, bool)> = preds
        .iter()
        .zip(labels)
        .map(|(&p, &l)| (p as f64, l >= tau_gt))
        .collect();
    let n_pos = pairs.iter().filter(|(_, t)| *t).count();
    let n_neg = pairs.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Numeric(format!(
            "AUC undefined: {n_pos} positives, {n_neg} negatives under tau_gt {tau_gt}"
        )));
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut points = Vec::with_capacity(pairs.len() + 2);
    let push = |points: &mut Vec<RocPoint>, threshold: f64, tp: usize, fp: usize| {
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            tp,
            fp,
            tn: n_neg - fp,
            fn_: n_pos - tp,
        });
    };
    // sentinel above every prediction: nothing classified positive
    push(&mut points, pairs[0].0 + 1.0, 0, 0);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pairs.len() {
        let t = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == t {
            if pairs[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        push(&mut points, t, tp, fp);
    }
    // sentinel below every prediction: everything classified positive
    push(&mut points, pairs[pairs.len() - 1].0 - 1.0, n_pos, n_neg);

    let mut auc = 0.0;
    for w in points.windows(2) {
        auc += (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) * 0.5;
    }
    Ok(RocReport {
        points,
        auc,
        tau_gt: tau_gt as f64,
        n_pos,
        n_neg,
    })
}

/// Confusion counts of a fixed operating point (same conventions as
/// `roc_curve`).
pub fn confusion_at(
    preds: &[f32],
    labels: &[f32],
    threshold: f32,
    tau_gt: f32,
) -> (usize, usize, usize, usize) {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &l) in preds.iter().zip(labels) {
        match (p >= threshold, l >= tau_gt) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    (tp, fp, tn, fn_)
}

/// Draws per-block verdict borders over a frame: green for true positives,
/// red for false positives, yellow for false negatives; true negatives stay
/// unmarked.
pub fn render_overlay(
    frame: &GrayImage,
    grid_preds: &[f32],
    grid_labels: &[f32],
    threshold: f32,
    tau_gt: f32,
) -> Result<image::RgbImage> {
    let block = crate::blocks::BLOCK;
    if frame.rows % block != 0 || frame.cols % block != 0 {
        return Err(Error::Parameter(format!(
            "overlay frame {}x{} is not a multiple of {block}",
            frame.rows, frame.cols
        )));
    }
    let (gr, gc) = (frame.rows / block, frame.cols / block);
    if grid_preds.len() != gr * gc || grid_labels.len() != gr * gc {
        return Err(Error::Parameter(format!(
            "overlay grids must hold {} values",
            gr * gc
        )));
    }
    let mut img = image::RgbImage::new(frame.cols as u32, frame.rows as u32);
    for r in 0..frame.rows {
        for c in 0..frame.cols {
            let v = (frame.at(r, c).clamp(0.0, 1.0) * 255.0).round() as u8;
            img.put_pixel(c as u32, r as u32, image::Rgb([v, v, v]));
        }
    }
    const GREEN: image::Rgb<u8> = image::Rgb([40, 200, 40]);
    const RED: image::Rgb<u8> = image::Rgb([220, 40, 40]);
    const YELLOW: image::Rgb<u8> = image::Rgb([230, 210, 40]);
    for gy in 0..gr {
        for gx in 0..gc {
            let pred = grid_preds[gy * gc + gx] >= threshold;
            let truth = grid_labels[gy * gc + gx] >= tau_gt;
            let color = match (pred, truth) {
                (true, true) => GREEN,
                (true, false) => RED,
                (false, true) => YELLOW,
                (false, false) => continue,
            };
            let (y0, x0) = (gy * block, gx * block);
            for d in 0..block {
                for t in 0..2 {
                    img.put_pixel((x0 + d) as u32, (y0 + t) as u32, color);
                    img.put_pixel((x0 + d) as u32, (y0 + block - 1 - t) as u32, color);
                    img.put_pixel((x0 + t) as u32, (y0 + d) as u32, color);
                    img.put_pixel((x0 + block - 1 - t) as u32, (y0 + d) as u32, color);
                }
            }
        }
    }
    Ok(img)
}

/// Counts colored rectangles in an overlay (TP green, FP red, FN yellow).
pub fn overlay_counts(img: &image::RgbImage) -> (usize, usize, usize) {
    let block = crate::blocks::BLOCK as u32;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for gy in 0..img.height() / block {
        for gx in 0..img.width() / block {
            // sample the border midpoint of each block
            match img.get_pixel(gx * block + block / 2, gy * block) {
                image::Rgb([40, 200, 40]) => tp += 1,
                image::Rgb([220, 40, 40]) => fp += 1,
                image::Rgb([230, 210, 40]) => fn_ += 1,
                _ => {}
            }
        }
    }
    (tp, fp, fn_)
}

/// Writes `threshold,fpr,tpr,tp,fp,tn,fn` rows sorted by threshold
/// descending.
pub fn write_roc_csv(report: &RocReport, path: &Path) -> Result<()> {
    let mut text = String::from("threshold,fpr,tpr,tp,fp,tn,fn\n");
    for p in &report.points {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.threshold, p.fpr, p.tpr, p.tp, p.fp, p.tn, p.fn_
        ));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct ReportJson<'a> {
    auc: f64,
    tau_gt: f64,
    n_pos: usize,
    n_neg: usize,
    n_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

pub fn write_report_json(report: &RocReport, path: &Path, note: Option<&str>) -> Result<()> {
    let body = ReportJson {
        auc: report.auc,
        tau_gt: report.tau_gt,
        n_pos: report.n_pos,
        n_neg: report.n_neg,
        n_points: report.points.len(),
        note,
    };
    let json = serde_json::to_string_pretty(&body).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Simple standalone ROC plot: axes, the chance diagonal and one polyline
/// per curve, no plotting dependency.
pub fn roc_svg(curves: &[(&RocReport, &str, &str)]) -> String {
    const SIZE: f64 = 560.0;
    const M: f64 = 60.0; // margin
    let span = SIZE - 2.0 * M;
    let sx = |fpr: f64| M + fpr * span;
    let sy = |tpr: f64| SIZE - M - tpr * span;
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" \
         viewBox=\"0 0 {SIZE} {SIZE}\">\n<rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>\n"
    ));
    // axes and ticks
    s.push_str(&format!(
        "<line x1=\"{M}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{0}\" stroke=\"black\"/>\n",
        SIZE - M,
        SIZE - M
    ));
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{:.1}</text>\n",
            sx(f),
            SIZE - M + 18.0,
            f
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\">{:.1}</text>\n",
            M - 8.0,
            sy(f) + 4.0,
            f
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">false positive rate</text>\n",
        SIZE / 2.0,
        SIZE - M + 38.0
    ));
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 {:.1} {:.1})\">true positive rate</text>\n",
        M - 38.0,
        SIZE / 2.0,
        M - 38.0,
        SIZE / 2.0
    ));
    s.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"gray\" \
         stroke-dasharray=\"6,4\"/>\n",
        sx(0.0),
        sy(0.0),
        sx(1.0),
        sy(1.0)
    ));
    for (i, (report, label, color)) in curves.iter().enumerate() {
        let pts: Vec<String> = report
            .points
            .iter()
            .map(|p| format!("{:.6},{:.6}", sx(p.fpr), sy(p.tpr)))
            .collect();
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        s.push_str(&format!
            ("<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" fill=\"{color}\">{label} (AUC = {:.4})</text>\n",
            M + 16.0,
            M + 20.0 + 18.0 * i as f64,
            report.auc
        ));
    }
    s.push_str("</svg>\n");
    s
}
