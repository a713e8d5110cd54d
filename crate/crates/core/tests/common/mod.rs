#![allow(dead_code)]

use effortcast_core::dataset::{Dataset, FeatureValue, ProjectRecord, Provenance, Schema};

/// Planted blank counts for the 100-record fixture: 10 complete records,
/// 50 with 1-3 blanks, 25 with 4-5 and 15 with 6-10.
pub fn planted_blank_counts() -> Vec<usize> {
    let mut counts = vec![0; 10];
    counts.extend((0..50).map(|i| 1 + i % 3));
    counts.extend((0..25).map(|i| 4 + i % 2));
    counts.extend((0..15).map(|i| 6 + i % 5));
    counts
}

fn full_value(feature: &str, i: usize) -> FeatureValue {
    match feature {
        "architecture" => FeatureValue::categorical(["Client server", "Stand alone", "Multi-tier"][i % 3]),
        "application_group" => FeatureValue::categorical(["Business Application", "Real-Time Application"][i % 2]),
        "application_type" => FeatureValue::categorical(["Financial", "Workflow", "Billing"][i % 3]),
        "primary_programming_language" => FeatureValue::categorical(["Java", "C#", "COBOL", "C++"][i % 4]),
        "development_methodology" => FeatureValue::categorical(["Waterfall", "Agile"][i % 2]),
        "max_team_size" => FeatureValue::numeric((2 + i % 9) as f64),
        "manager_experience_years" => FeatureValue::numeric((1 + i % 12) as f64),
        _ => FeatureValue::numeric((i % 5) as f64),
    }
}

/// 100 ISBSG-shaped records; record `i` has `planted_blank_counts()[i]`
/// blank features, chosen by rotating through the schema.
pub fn synthetic_100() -> Dataset {
    let schema = Schema::isbsg();
    let names: Vec<String> = schema.names().map(str::to_string).collect();
    let records = planted_blank_counts()
        .into_iter()
        .enumerate()
        .map(|(i, blanks)| {
            let mut r = ProjectRecord::new(format!("S{i:03}"), 500.0 + 37.0 * i as f64);
            for (j, name) in names.iter().enumerate() {
                let blank = (j + names.len() - i % names.len()) % names.len() < blanks;
                let v = if blank { FeatureValue::Missing } else { full_value(name, i) };
                r = r.with(name, v);
            }
            r
        })
        .collect();
    Dataset::new(schema, records, Provenance::Synthetic).unwrap()
}

/// A dataset of `n` records where the first `tier_size` are complete and the
/// rest have ten blanks.
pub fn tiered(n: usize, tier_size: usize) -> Dataset {
    let schema = Schema::isbsg();
    let names: Vec<String> = schema.names().map(str::to_string).collect();
    let records = (0..n)
        .map(|i| {
            let mut r = ProjectRecord::new(format!("T{i:05}"), 100.0 + i as f64);
            for name in &names {
                let v = if i < tier_size { full_value(name, i) } else { FeatureValue::Missing };
                r = r.with(name, v);
            }
            r
        })
        .collect();
    Dataset::new(schema, records, Provenance::Synthetic).unwrap()
}

/// Simple numeric fixture: `size`, `team` and a categorical `lang`.
pub fn small_numeric(n: usize) -> Dataset {
    use effortcast_core::dataset::{FeatureKind, FeatureSpec};
    let schema = Schema::new(vec![
        FeatureSpec::new("size", FeatureKind::Numeric),
        FeatureSpec::new("team", FeatureKind::Numeric),
        FeatureSpec::new("lang", FeatureKind::Categorical),
    ])
    .unwrap();
    let records = (0..n)
        .map(|i| {
            let size = 10.0 + (i * 7 % 23) as f64;
            let team = 1.0 + (i % 6) as f64;
            ProjectRecord::new(format!("R{i:03}"), 50.0 + 20.0 * size + 35.0 * team)
                .with("size", FeatureValue::numeric(size))
                .with("team", FeatureValue::numeric(team))
                .with("lang", FeatureValue::categorical(["Java", "Go", "C"][i % 3]))
        })
        .collect();
    Dataset::new(schema, records, Provenance::Synthetic).unwrap()
}
