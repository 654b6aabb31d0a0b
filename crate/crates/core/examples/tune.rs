// scratch measurement harness (not shipped): gray-vs-fm AUC at configurable scale
use amfm_core::pipeline::{run_reproduce, ReproduceConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let sessions_train: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let sessions_test: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    let frames: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(6);
    let epochs: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(10);
    let seed: u64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(7);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ReproduceConfig::new(dir.path().to_path_buf(), seed);
    cfg.sessions_train = sessions_train;
    cfg.sessions_test = sessions_test;
    cfg.frames_per_session = frames;
    cfg.epochs = epochs;
    let t0 = Instant::now();
    let s = run_reproduce(&cfg).unwrap();
    println!(
        "train/val/test blocks: {}/{}/{}  pos rate {:.3}",
        s.gray.train_blocks, s.gray.val_blocks, s.gray.test_blocks, s.corpus_positive_rate
    );
    println!("AUC gray = {:.4}   AUC fm = {:.4}", s.gray.roc.auc, s.fm.roc.auc);
    // train-set AUC for the fm model: reload dataset + model
    for mode in ["gray", "fm"] {
        let (_, train, _) = amfm_core::blocks::load_dataset(&dir.path().join(format!("dataset_{mode}/index.json"))).unwrap();
        let model = amfm_core::nn::ReducedLeNet::<f32>::load(&dir.path().join(format!("train_{mode}"))).unwrap();
        let preds = amfm_core::pipeline::predict(&model, &train);
        let labels: Vec<f32> = train.iter().map(|b| b.label).collect();
        let auc = amfm_core::eval::roc_curve(&preds, &labels, 0.1).unwrap().auc;
        println!("  {mode} train-split AUC = {auc:.4}");
    }
    println!("sec/epoch gray {:.2} fm {:.2}", s.gray.sec_per_epoch(), s.fm.sec_per_epoch());
    for (name, sec) in &s.stage_seconds {
        println!("  stage {name}: {sec:.1}s");
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
    let hist = |h: &amfm_core::train::TrainHistory| -> String {
        h.epochs.iter().map(|e| format!("{:.4}", e.train_loss)).collect::<Vec<_>>().join(" ")
    };
    println!("gray loss: {}", hist(&s.gray.history));
    println!("fm   loss: {}", hist(&s.fm.history));
}
