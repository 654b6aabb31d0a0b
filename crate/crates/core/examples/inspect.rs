// scratch: dump gray/fm planes of one synthetic frame for inspection
use amfm_core::blocks::{channel_planes, preprocess_frame, Mode};
use amfm_core::dca::{Boundary, DcaConfig, DcaEngine, ScaleSelection};
use amfm_core::filterbank::{build_filterbank, FilterbankConfig};
use amfm_core::synthdata::{gen_face_dataset, FacesConfig};

fn main() {
    let cfg = FacesConfig { sessions: 1, frames_per_session: 1, seed: 7, ..FacesConfig::default() };
    let records = gen_face_dataset(&cfg).unwrap();
    let rec = &records[0];
    println!("boxes: {:?}", rec.face_boxes);
    let engine = DcaEngine::new(
        build_filterbank(&FilterbankConfig::default()).unwrap(),
        DcaConfig { boundary: Boundary::Reflect, scales: ScaleSelection::Second },
    );
    let (padded, boxes) = preprocess_frame(&rec.image, &rec.face_boxes).unwrap();
    let gray = channel_planes(&padded, Mode::Gray, &engine).unwrap();
    let fm = channel_planes(&padded, Mode::Fm, &engine).unwrap();
    gray[0].save_preview_pgm(std::path::Path::new("/tmp/insp_gray.pgm"), 0.0, 1.0).unwrap();
    fm[0].save_preview_pgm(std::path::Path::new("/tmp/insp_fm.pgm"), 0.0, 1.0).unwrap();
    // fm statistics inside vs outside face boxes (downscaled coords)
    let inside = |x: usize, y: usize| boxes.iter().any(|b|
        (x as f32) >= b.x && (x as f32) < b.x + b.w && (y as f32) >= b.y && (y as f32) < b.y + b.h);
    let (mut vi, mut ni, mut vo, mut no) = (0.0f64, 0usize, 0.0f64, 0usize);
    // local coherence: correlation of fm with itself shifted by the stripe period (4 px)?
    // simpler: mean |fm - 0.5| and lag-1 autocorrelation along x
    let (mut ci, mut co) = (0.0f64, 0.0f64);
    let f = &fm[0];
    for y in 1..f.rows-1 { for x in 1..f.cols-1 {
        let v = (f.at(y, x) as f64 - 0.5) * 2.0;
        let vx = (f.at(y, x+1) as f64 - 0.5) * 2.0;
        if inside(x, y) { vi += v*v; ci += v*vx; ni += 1; } else { vo += v*v; co += v*vx; no += 1; }
    }}
    println!("fm var inside {:.3} outside {:.3}", vi/ni as f64, vo/no as f64);
    println!("fm lag1 corr inside {:.3} outside {:.3}", ci/vi, co/vo);
}
