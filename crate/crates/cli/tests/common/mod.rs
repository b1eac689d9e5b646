#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use lmkit_core::numstat::Rng;

pub const SEX: &str = "sex,pitch\nfemale,233\nfemale,204\nfemale,242\nmale,130\nmale,112\nmale,142\n";
pub const AGE: &str = "age,pitch\n14,252\n23,244\n35,240\n48,233\n52,212\n67,204\n";

pub const SUBJECTS: [(&str, &str); 6] = [("F1", "F"), ("F2", "F"), ("F3", "F"), ("M3", "M"), ("M4", "M"), ("M7", "M")];

/// Synthetic data with the shape of a politeness study: 6 subjects,
/// 7 scenarios, two attitudes, 84 rows, one missing frequency. The values
/// come from a seeded generator and carry no empirical meaning.
pub fn synthetic_politeness(seed: u64) -> String {
    let mut rng = Rng::seed_from(seed);
    let subj: Vec<f64> = (0..6).map(|_| 25.0 * rng.next_normal()).collect();
    let subj_slope: Vec<f64> = (0..6).map(|_| 2.0 * rng.next_normal()).collect();
    let scen: Vec<f64> = (0..7).map(|_| 15.0 * rng.next_normal()).collect();
    let mut out = String::from("subject,gender,scenario,attitude,frequency\n");
    let mut row = 0;
    for (s, (name, gender)) in SUBJECTS.iter().enumerate() {
        for sc in 0..7 {
            for att in ["pol", "inf"] {
                row += 1;
                let base = if *gender == "F" { 256.8 } else { 148.3 };
                let pol = if att == "pol" { -19.7 + subj_slope[s] } else { 0.0 };
                let y = base + pol + subj[s] + scen[sc] + 25.0 * rng.next_normal();
                let cell = if row == 39 { "NA".to_string() } else { format!("{y:.1}") };
                out.push_str(&format!("{name},{gender},{},{att},{cell}\n", sc + 1));
            }
        }
    }
    out
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lmkit")
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn lmkit(args: &[&str]) -> Run {
    let o = Command::new(bin()).args(args).output().expect("binary runs");
    Run {
        code: o.status.code().unwrap_or(-1),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Every number-looking token of a text block.
pub fn numbers(text: &str) -> Vec<f64> {
    text.split(|c: char| c.is_whitespace() || c == ',' || c == '(' || c == ')' || c == ':')
        .filter_map(|t| t.parse::<f64>().ok())
        .collect()
}

/// Whether some token in `text` is within `tol` of `want`.
pub fn has_number(text: &str, want: f64, tol: f64) -> bool {
    numbers(text).iter().any(|v| (v - want).abs() <= tol)
}

/// Parsed CSV body (header dropped) as rows of fields.
pub fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}
