//! Fixtures shared by the benchmarks in `benches/`.

use effortcast_core::dataset::{Dataset, FeatureValue, ProjectRecord, Provenance, Schema};
use effortcast_core::eval::PredictionSet;

/// `n` complete ISBSG-shaped records with deterministic, loosely correlated values.
pub fn isbsg_dataset(n: usize) -> Dataset {
    let schema = Schema::isbsg();
    let records = (0..n)
        .map(|i| {
            let team = 1 + i % 9;
            ProjectRecord::new(format!("B{i:05}"), 200.0 + 180.0 * team as f64 + ((i * 37) % 500) as f64)
                .with("architecture", FeatureValue::categorical(["Client server", "Stand alone", "Multi-tier"][i % 3]))
                .with("devs_under_1yr", FeatureValue::numeric((i % 4) as f64))
                .with("devs_1_to_3yr", FeatureValue::numeric(((i / 3) % 5) as f64))
                .with("devs_over_3yr", FeatureValue::numeric(((i * 7) % 3) as f64))
                .with("manager_experience_years", FeatureValue::numeric((1 + i % 12) as f64))
                .with("application_group", FeatureValue::categorical(["Business Application", "Infrastructure"][i % 2]))
                .with("application_type", FeatureValue::categorical(["Financial", "Workflow", "Billing"][i % 3]))
                .with("primary_programming_language", FeatureValue::categorical(["Java", "C#", "COBOL", "C++"][i % 4]))
                .with("max_team_size", FeatureValue::numeric(team as f64))
                .with("development_methodology", FeatureValue::categorical(["Waterfall", "Agile"][i % 2]))
        })
        .collect();
    Dataset::new(schema, records, Provenance::Synthetic).expect("bench fixture is valid")
}

/// `n` prediction pairs spread over [0, 1e5].
pub fn prediction_set(n: usize) -> PredictionSet {
    PredictionSet::from_pairs((0..n).map(|i| {
        let a = ((i * 7919) % 100_000) as f64;
        let p = ((i * 104_729) % 100_000) as f64;
        (format!("p{i}"), a, p)
    }))
}
