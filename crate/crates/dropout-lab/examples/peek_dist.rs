use dropout_lab::dataset::{generate_synthetic, SynthConfig};

fn main() {
    for seed in [7u64, 100, 105] {
        let labeled = generate_synthetic(&SynthConfig::paper_calibration(3000, seed)).unwrap();
        let counts = labeled.weekly_dropouts();
        let events = labeled.cohort.forum_events.len() + labeled.cohort.activity_events.len();
        println!("seed {seed}: weekly dropouts {counts:?}, total events {events}");
    }
}
