use std::time::Instant;

use dropout_lab::dataset::{generate_synthetic, SynthConfig};
use dropout_lab::evaluation::{nested_cv, ClassifierId, CvConfig};
use dropout_lab::features::{assemble_matrix, FeatureConfig, Lag, TaskKind};

fn main() {
    let labeled = generate_synthetic(&SynthConfig::paper_calibration(3000, 7)).unwrap();
    let fc = FeatureConfig::default();
    for (kind, week, lag, smote) in [
        (TaskKind::State, 4usize, 4usize, false),
        (TaskKind::State, 8, 8, false),
        (TaskKind::ExactWeek, 4, 4, true),
        (TaskKind::State, 2, 0, false),
    ] {
        let ds = assemble_matrix(&labeled, kind, week, Lag::Weeks(lag), true, &fc).unwrap();
        println!(
            "--- {kind:?} w={week} l={lag}: {} rows x {} cols, {} positives",
            ds.n_rows(), ds.n_cols(), ds.positives()
        );
        for classifier in [ClassifierId::Logistic, ClassifierId::Forest, ClassifierId::AdaBoost] {
            let mut cv = CvConfig::default();
            cv.smote = smote;
            cv.seed = 1;
            let t = Instant::now();
            let report = nested_cv(&ds, classifier, &cv).unwrap();
            println!(
                "{classifier}: {:.1}s  auroc={} f2={}",
                t.elapsed().as_secs_f64(), report.mean_auroc, report.mean_f2
            );
        }
    }
}
