#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

pub const EXAMPLE_ROW: &str =
    "P-0001,Client server,3.0,1.0,0,5.0,Business Application,\"Job, case, incident, project management;\",Java,4.0,Waterfall,1112.0";

pub const HEADER: &str = "project_id,architecture,devs_under_1yr,devs_1_to_3yr,devs_over_3yr,manager_experience_years,application_group,application_type,primary_programming_language,max_team_size,development_methodology,normalized_work_effort";

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn schema(name: &str) -> PathBuf {
    workspace_root().join("schemas").join(format!("{name}.toml"))
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Runs the binary in `dir` with a quiet default log level.
pub fn run_in(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_effortcast"));
    cmd.current_dir(dir).args(args).env("RUST_LOG", "warn").env_remove("EFFORTCAST_API_KEY");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn ok(out: &Output) -> &Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// `n` ISBSG-shaped rows; the first is the worked example and every
/// seventh row has a few blank features.
pub fn isbsg_csv(n: usize) -> String {
    let archs = ["Client server", "Stand alone", "Multi-tier", "Web"];
    let groups = ["Business Application", "Real-Time Application", "Infrastructure Software"];
    let types = ["Financial", "Workflow", "Billing", "Reporting"];
    let langs = ["Java", "C#", "COBOL", "C++", "Python"];
    let methods = ["Waterfall", "Agile", "Iterative"];
    let mut s = format!("{HEADER}\n{EXAMPLE_ROW}\n");
    for i in 1..n {
        let under = i % 4;
        let mid = (i / 3) % 5;
        let over = (i * 7) % 3;
        let mgr = 1 + i % 11;
        let team = under + mid + over + 1;
        let effort = 300.0 + 210.0 * team as f64 + 45.0 * ((i * 13) % 17) as f64 + 60.0 * (i % 5) as f64;
        let mut cells = vec![
            format!("P-{:04}", i + 1),
            archs[i % archs.len()].to_string(),
            format!("{under}.0"),
            format!("{mid}.0"),
            format!("{over}"),
            format!("{mgr}.0"),
            groups[i % groups.len()].to_string(),
            types[(i / 2) % types.len()].to_string(),
            langs[i % langs.len()].to_string(),
            format!("{team}.0"),
            methods[(i / 5) % methods.len()].to_string(),
        ];
        if i % 7 == 0 {
            for j in 0..(1 + i % 4) {
                cells[1 + (i + 3 * j) % 10] = String::new();
            }
        }
        cells.push(format!("{effort:.1}"));
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn write_isbsg_csv(path: &Path, n: usize) {
    std::fs::write(path, isbsg_csv(n)).unwrap();
}

/// Record ids in a dataset JSON written by the binary.
pub fn dataset_ids(path: &Path) -> Vec<String> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["id"].as_str().unwrap().to_string())
        .collect()
}

/// Script that answers every tenth id (by position) with text that holds no
/// number; the rest are left to the fallback oracle.
pub fn garbage_script(ids: &[String]) -> (String, usize) {
    let script: BTreeMap<&str, &str> = ids
        .iter()
        .enumerate()
        .filter(|(i, _)| i % 10 == 9)
        .map(|(_, id)| (id.as_str(), "I cannot estimate that project."))
        .collect();
    (serde_json::to_string_pretty(&script).unwrap(), script.len())
}

/// Parsed metrics.csv rows keyed by estimator.
pub fn metrics(path: &Path) -> BTreeMap<String, BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| {
            let row: BTreeMap<String, String> =
                header.iter().zip(l.split(',')).map(|(h, v)| (h.to_string(), v.to_string())).collect();
            (row["estimator"].clone(), row)
        })
        .collect()
}

pub struct Stub {
    pub base_url: String,
    pub requests: Arc<AtomicUsize>,
    pub saw_bearer: Arc<AtomicUsize>,
}

/// Answers every completion request with a fixed estimate until the test exits.
pub fn completion_stub(expected_key: &str) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base_url = format!("http://{}", listener.local_addr().unwrap());
    let requests = Arc::new(AtomicUsize::new(0));
    let saw_bearer = Arc::new(AtomicUsize::new(0));
    let (r2, b2) = (requests.clone(), saw_bearer.clone());
    let bearer = format!("bearer {}", expected_key.to_ascii_lowercase());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            if reader.read_line(&mut line).is_err() {
                continue;
            }
            let mut len = 0;
            loop {
                let mut h = String::new();
                reader.read_line(&mut h).unwrap();
                let h = h.trim_end().to_ascii_lowercase();
                if h.is_empty() {
                    break;
                }
                if let Some(v) = h.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if h.strip_prefix("authorization:").is_some_and(|v| v.trim() == bearer) {
                    b2.fetch_add(1, Ordering::SeqCst);
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            r2.fetch_add(1, Ordering::SeqCst);
            let payload = r#"{"choices":[{"text":" Estimated cost is: 100.0 hours"}]}"#;
            let resp = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
                payload.len()
            );
            let _ = stream.write_all(resp.as_bytes());
        }
    });
    Stub { base_url, requests, saw_bearer }
}

/// Every regular file below `dir`, sorted by path relative to it.
pub fn files_below(dir: &Path) -> Vec<PathBuf> {
    fn walk(dir: &Path, base: &Path, out: &mut Vec<PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, base, out);
            } else {
                out.push(p.strip_prefix(base).unwrap().to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
