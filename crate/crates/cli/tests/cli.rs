use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fss_core::config::load_config;
use fss_core::synth::oracle_recompute;
use fss_core::{load_dataset, InputPaths, WeightRules};
use tempfile::TempDir;

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/seed1");

fn fss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fss"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Generates seed 1 and runs `compute` on it; returns (tmp, data dir, out dir).
fn seed1(format: &str) -> (TempDir, PathBuf, PathBuf) {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    let g = fss(&["generate", "--seed", "1", "--outdir", p(&data)]);
    assert!(g.status.success(), "{}", stderr(&g));
    let conf = data.join("analysis.conf");
    let c = fss(&[
        "compute",
        "-i",
        p(&data),
        "--config",
        p(&conf),
        "--outdir",
        p(&out),
        "--format",
        format,
    ]);
    assert_eq!(c.status.code(), Some(0), "{}", stderr(&c));
    (tmp, data, out)
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref())
        .unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

/// Same rows; the `fss` column compared to 1e-12 relative, everything else exactly.
fn assert_csv_matches(got: &str, want: &str, name: &str) {
    let mut g = csv::Reader::from_reader(got.as_bytes());
    let mut w = csv::Reader::from_reader(want.as_bytes());
    let header = g.headers().unwrap().clone();
    assert_eq!(&header, w.headers().unwrap(), "{name} header");
    let fss_col = header.iter().position(|h| h == "fss");
    let (g, w): (Vec<_>, Vec<_>) = (
        g.records().map(Result::unwrap).collect(),
        w.records().map(Result::unwrap).collect(),
    );
    assert_eq!(g.len(), w.len(), "{name} row count");
    for (i, (a, b)) in g.iter().zip(&w).enumerate() {
        for (j, (x, y)) in a.iter().zip(b).enumerate() {
            if Some(j) == fss_col {
                let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
                assert!(
                    (x - y).abs() <= 1e-12 * x.abs().max(y.abs()),
                    "{name} row {i}: {x} vs {y}"
                );
            } else {
                assert_eq!(x, y, "{name} row {i} column {}", &header[j]);
            }
        }
    }
}

#[test]
fn compute_matches_golden_files() {
    let (_tmp, _, out) = seed1("csv");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for name in [
        "scores_sds.csv",
        "scores_uda.csv",
        "scores_univ.csv",
        "rankings.csv",
    ] {
        let got = read(out.join(name));
        let golden = Path::new(GOLDEN).join(name);
        if update {
            std::fs::create_dir_all(GOLDEN).unwrap();
            std::fs::write(&golden, &got).unwrap();
        }
        assert_csv_matches(&got, &read(&golden), name);
    }
}

#[test]
fn golden_rankings_agree_with_oracle() {
    let (_tmp, data, _) = seed1("csv");
    let config = load_config(data.join("analysis.conf")).unwrap();
    let (ds, _) = load_dataset(&InputPaths::in_dir(&data), config).unwrap();
    let oracle = oracle_recompute(&ds, &WeightRules::default());
    let golden = read(Path::new(GOLDEN).join("rankings.csv"));
    let mut rdr = csv::Reader::from_reader(golden.as_bytes());
    let mut rows = 0;
    for rec in rdr.records().map(Result::unwrap) {
        let level = rec[0].parse().unwrap();
        let list = &oracle.rankings[&(level, rec[1].to_string())];
        let rank: usize = rec[4].parse().unwrap();
        let o = &list[rank - 1];
        assert_eq!(o.university_id, &rec[2]);
        assert_eq!(o.class.to_string(), &rec[6]);
        assert!((o.fss - rec[3].parse::<f64>().unwrap()).abs() <= 1e-9 * o.fss.abs());
        rows += 1;
    }
    assert_eq!(rows, oracle.rankings.values().map(Vec::len).sum::<usize>());
}

#[test]
fn outputs_and_digests_are_reproducible() {
    let (_a, _, out_a) = seed1("json");
    let (_b, _, out_b) = seed1("json");
    let digests = |dir: &Path| {
        let m: serde_json::Value = serde_json::from_str(&read(dir.join("manifest.json"))).unwrap();
        (
            m["inputs"]
                .as_array()
                .unwrap()
                .iter()
                .map(|f| f["sha256"].clone())
                .collect::<Vec<_>>(),
            m["outputs"].clone(),
        )
    };
    assert_eq!(digests(&out_a), digests(&out_b));
    for name in ["scores_sds.json", "rankings.json"] {
        assert_eq!(read(out_a.join(name)), read(out_b.join(name)));
    }
    let m: serde_json::Value = serde_json::from_str(&read(out_a.join("manifest.json"))).unwrap();
    assert_eq!(m["command"], "compute");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 4);
    assert!(m["config"]["weights"]
        .as_str()
        .unwrap()
        .contains("same_university"));
}

#[test]
fn dangling_researcher_is_named_and_exits_1() {
    let (_tmp, data, _) = seed1("csv");
    let path = data.join("authorships.csv");
    let mut text = read(&path);
    text.push_str("P000001,99,ghost,R99999,UNIV_01\n");
    std::fs::write(&path, text).unwrap();
    let o = fss(&[
        "validate",
        "-i",
        p(&data),
        "--config",
        p(&data.join("analysis.conf")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let errors = report["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0]["code"], "dangling_reference");
    assert!(errors[0]["message"].as_str().unwrap().contains("R99999"));

    let out = data.join("never");
    let c = fss(&["compute", "-i", p(&data), "--outdir", p(&out)]);
    assert_eq!(c.status.code(), Some(1));
    assert!(stderr(&c).contains("R99999"));
    assert!(!out.exists());
}

#[test]
fn exit_codes_for_io_and_config_errors() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("missing");
    let o = fss(&[
        "compute",
        "-i",
        p(&missing),
        "--outdir",
        p(&tmp.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let conf = tmp.path().join("bad.conf");
    std::fs::write(&conf, "min_staff_university = twenty\n").unwrap();
    let o = fss(&[
        "compute",
        "-i",
        p(&missing),
        "--config",
        p(&conf),
        "--outdir",
        p(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let o = fss(&["compute", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(fss(&["--help"]).status.success());
}

#[test]
fn nothing_rankable_exits_1_without_score_files() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("one");
    std::fs::create_dir(&data).unwrap();
    let files = [
        (
            "taxonomy.csv",
            "sds_code,uda_code,byline_convention\nS1,U1,alphabetical\n",
        ),
        (
            "researchers.csv",
            "researcher_id,university_id,sds_code,academic_rank\nR1,UA,S1,full\n",
        ),
        ("salaries.csv", "academic_rank,annual_salary\nfull,2.0\n"),
        (
            "publications.csv",
            "pub_id,year,citation_count,categories\nP1,2005,4,X\n",
        ),
        (
            "authorships.csv",
            "pub_id,position,author_key,researcher_id,affiliation_university_id\nP1,1,k,R1,UA\n",
        ),
    ];
    for (name, text) in files {
        std::fs::write(data.join(name), text).unwrap();
    }
    let out = tmp.path().join("out");
    let o = fss(&["compute", "-i", p(&data), "--outdir", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no eligible"), "{}", stderr(&o));
    assert!(!out.join("scores_sds.csv").exists());
}

#[test]
fn rank_filters_by_level_and_scope() {
    let (_tmp, data, _) = seed1("csv");
    let conf = data.join("analysis.conf");
    let o = fss(&[
        "rank",
        "-i",
        p(&data),
        "--config",
        p(&conf),
        "--level",
        "university",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.starts_with("university,ALL,")));
    let o = fss(&[
        "rank",
        "-i",
        p(&data),
        "--config",
        p(&conf),
        "--scope",
        "NOPE",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn dispersion_on_shipped_fixtures() {
    let tmp = TempDir::new().unwrap();
    let fx = tmp.path().join("fx");
    assert!(fss(&["fixtures", "--outdir", p(&fx)]).status.success());
    let out = tmp.path().join("d");
    let o = fss(&[
        "dispersion",
        "--classes",
        p(&fx.join("uda_classes.csv")),
        "--outdir",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&read(out.join("dispersion_report.json"))).unwrap();
    assert_eq!(summary["n_profiles"], 61);
    assert_eq!(summary["n_defined"], 57);
    assert!((summary["median_r"].as_f64().unwrap() - 0.455).abs() < 0.0005);
    let rows = read(out.join("dispersion_report.csv"));
    assert_eq!(rows.lines().count(), 62);
    assert_eq!(rows.lines().filter(|l| l.ends_with(",N.A.")).count(), 4);

    let staff = fx.join("physics_staff.csv");
    let o = fss(&[
        "dispersion",
        "--classes",
        p(&fx.join("physics_classes.csv")),
        "--staff",
        p(&staff),
        "--concordance",
        "pooled",
        "--outdir",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&read(out.join("dispersion_report.json"))).unwrap();
    assert_eq!(summary["concordance"]["mode"], "pooled");
    assert!(summary["correlations"]["staff_vs_r"].is_f64());
}

#[test]
fn single_scope_university_has_undefined_r() {
    let tmp = TempDir::new().unwrap();
    let classes = tmp.path().join("c.csv");
    std::fs::write(
        &classes,
        "university_id,scope_code,class\nUA,ALL,A\nUA,F1,B\n",
    )
    .unwrap();
    let out = tmp.path().join("d");
    let o = fss(&["dispersion", "--classes", p(&classes), "--outdir", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        read(out.join("dispersion_report.csv")).lines().nth(1),
        Some("UA,A,1,N.A.,N.A.,N.A.")
    );
    let summary: serde_json::Value =
        serde_json::from_str(&read(out.join("dispersion_report.json"))).unwrap();
    assert!(summary["median_r"].is_null());
    assert_eq!(summary["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn dispersion_from_compute_rankings() {
    let (_tmp, _, out) = seed1("csv");
    let d = out.join("disp");
    let o = fss(&[
        "dispersion",
        "--rankings",
        p(&out.join("rankings.csv")),
        "--outdir",
        p(&d),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(read(d.join("dispersion_report.csv"))
        .starts_with("university_id,overall_class,n_active,staff,delta,r\n"));
}
