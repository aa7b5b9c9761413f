use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_cluster-curves");

const MINUS_ONE: &str = r#"{"kind":"singleton","p":"-1"}"#;
const PLUS_ONE: &str = r#"{"kind":"singleton","p":"1"}"#;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cluster-curves-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("CURVE_MAX_DEGREE")
        .output()
        .expect("binary runs")
}

fn construct(out: &Path, extra: &[&str]) -> Output {
    let out = out.to_str().unwrap();
    let mut args = vec![
        "construct",
        "--kminus",
        MINUS_ONE,
        "--kplus",
        PLUS_ONE,
        "--n",
        "32",
        "--out",
        out,
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn singleton_pair_certifies_with_six_files() {
    let out = scratch("six");
    let o = construct(&out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "approximant.json",
            "polygonal.csv",
            "polynomial.csv",
            "sequence.csv",
            "smooth.csv",
            "verification.json"
        ]
    );
    let header = std::fs::read_to_string(out.join("smooth.csv")).unwrap();
    assert!(header.starts_with("t,re,im,d_re,d_im\n"));
    let report = std::fs::read_to_string(out.join("verification.json")).unwrap();
    assert!(report.contains("\"certified\": true"));
}

#[test]
fn svg_is_opt_in() {
    let out = scratch("svg");
    let o = construct(&out, &["--emit", "svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = std::fs::read_to_string(out.join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(!out.join("smooth.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    for dir in [&a, &b] {
        let o = construct(dir, &["--seed", "11"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for name in [
        "sequence.csv",
        "polygonal.csv",
        "smooth.csv",
        "polynomial.csv",
        "approximant.json",
        "verification.json",
    ] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn disconnected_net_is_an_input_error() {
    let out = scratch("disc");
    let custom = r#"{"kind":"custom","levels":[{"level":1,"points":["0","0.1","5"],"mesh":0.0,"connectivity":0.5}]}"#;
    let o = run(&[
        "construct",
        "--kminus",
        custom,
        "--kplus",
        PLUS_ONE,
        "--n",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("disconnected"), "{}", stderr(&o));
}

#[test]
fn short_sequence_is_rejected() {
    let out = scratch("short");
    let o = run(&[
        "construct",
        "--kminus",
        MINUS_ONE,
        "--kplus",
        PLUS_ONE,
        "--n",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn bad_spec_names_the_field() {
    let out = scratch("bad");
    let circle = r#"{"kind":"circle","center":"0","radius":-1}"#;
    let o = run(&[
        "construct",
        "--kminus",
        circle,
        "--kplus",
        PLUS_ONE,
        "--n",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("kminus") && err.contains("radius"), "{err}");
}

#[test]
fn spec_from_file() {
    let out = scratch("file");
    std::fs::create_dir_all(&out).unwrap();
    let spec = out.join("minus.json");
    std::fs::write(&spec, MINUS_ONE).unwrap();
    let arg = format!("@{}", spec.display());
    let o = run(&[
        "construct",
        "--kminus",
        &arg,
        "--kplus",
        PLUS_ONE,
        "--n",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn too_few_markers_in_window_fails_certification() {
    let out = scratch("window");
    let o = run(&[
        "construct",
        "--kminus",
        r#"{"kind":"segment","a":"0","b":"1"}"#,
        "--kplus",
        r#"{"kind":"circle","center":"0","radius":1}"#,
        "--n",
        "32",
        "--t",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(out.join("verification.json").exists());
}

#[test]
fn half_width_out_of_range() {
    let out = scratch("t");
    let o = construct(&out, &["--t", "40"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gallery_examples() {
    let out = scratch("gallery");
    for id in ["1", "4", "strip"] {
        let o = run(&["gallery", id, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "gallery {id}: {}", stderr(&o));
    }
    let csv = std::fs::read_to_string(out.join("example1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2002);
    let one = std::fs::read_to_string(out.join("example1.json")).unwrap();
    let four = std::fs::read_to_string(out.join("example4.json")).unwrap();
    assert!(one.contains("\"pass\": true") && four.contains("\"pass\": true"));
    assert!(out.join("strip.csv").exists() && out.join("strip.json").exists());
}

#[test]
fn unknown_gallery_id() {
    let out = scratch("nine");
    assert_eq!(
        run(&["gallery", "9", "--out", out.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn degree_cap_from_environment() {
    let out = scratch("env");
    let o = Command::new(BIN)
        .args(["gallery", "1", "--out", out.to_str().unwrap()])
        .env("CURVE_MAX_DEGREE", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
