use std::path::Path;
use std::process::{Command, Output};

use afdm::layout::build_layout;
use afdm::{AfdmParams, Scheme};

const CONFIG: &str = r#"
[system]
n = 128
alpha_max = 2
l_max = 2

[scheme]
kind = "embedded"

[channel]
preset = "eva"

[sweep]
snr_p_db = 30.0
snr_d_db = [6.0, 12.0]
zeta = [4.0, 8.0]
trials = 40
min_bit_errors = 20
seed = 5
"#;

fn afdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afdm")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn ber_csv_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", CONFIG);
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}.csv"));
        let res = afdm(&["ber", "--config", &cfg, "--workers", workers, "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        outputs.push(std::fs::read_to_string(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let mut lines = outputs[0].lines();
    assert_eq!(lines.next(), Some("snr_d_db,zeta,snr_p_db,scheme,frames,data_bits,bit_errors,ber,seed"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn seed_and_trials_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", CONFIG);
    let res = afdm(&["ber", "--config", &cfg, "--seed", "77", "--trials", "3"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[8], "77");
        assert!(fields[4].parse::<u32>().unwrap() <= 3);
    }
}

#[test]
fn threshold_sweep_and_mimo_check_their_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", CONFIG);
    // Two SNR values: not a threshold sweep.
    assert_eq!(afdm(&["threshold-sweep", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(afdm(&["mimo", "--config", &cfg]).status.code(), Some(2));

    let single = write(dir.path(), "one.toml", &CONFIG.replace("snr_d_db = [6.0, 12.0]", "snr_d_db = 12.0"));
    let res = afdm(&["threshold-sweep", "--config", &single, "--trials", "4"]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("lowest BER at zeta ="));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &CONFIG.replace("l_max = 2", "l_max = 2\ncolour = 1"));
    let res = afdm(&["ber", "--config", &bad]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("colour"));

    let small = write(dir.path(), "small.toml", &CONFIG.replace("n = 128", "n = 20"));
    assert_eq!(afdm(&["ber", "--config", &small]).status.code(), Some(2));
    assert_eq!(afdm(&["ber", "--config", "/nonexistent/run.toml"]).status.code(), Some(2));
    assert_eq!(afdm(&["ber"]).status.code(), Some(2));
    assert_eq!(afdm(&["ber", "--config", &small, "--workers", "0"]).status.code(), Some(2));
}

#[test]
fn overhead_table() {
    let res = afdm(&["overhead", "--n-t", "3", "--alpha-max", "4", "--l-max", "2"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n_t,alpha_max,l_max,o_afdm,o_otfs,ratio");
    assert!(lines[1].starts_with("3,4,2,107,187,0.572"));

    let all = afdm(&["overhead"]);
    assert_eq!(String::from_utf8(all.stdout).unwrap().lines().count(), 1 + 4 * 6 * 4);
    assert_eq!(afdm(&["overhead", "--n-t", "4-1"]).status.code(), Some(2));
}

#[test]
fn plot_renders_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", CONFIG);
    let csv = dir.path().join("r.csv");
    assert!(afdm(&["ber", "--config", &cfg, "--out", csv.to_str().unwrap()]).status.success());
    let svg = dir.path().join("r.svg");
    let res = afdm(&["plot", csv.to_str().unwrap(), "--out", svg.to_str().unwrap(), "--title", "embedded"]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches("<polyline").count(), 2);
}

#[test]
fn golden_layout_diagrams() {
    let params = AfdmParams::new(64, 1, 1, None).unwrap();
    assert_eq!(params.q(), 5);
    let spa = &build_layout(Scheme::Spa, &params, true).unwrap()[0];
    assert_eq!(spa.diagram(), format!("p{}{}{}", "0".repeat(5), "d".repeat(53), "0".repeat(5)));
    let mpa = &build_layout(Scheme::Mpa(2), &params, true).unwrap()[0];
    assert_eq!(
        mpa.diagram(),
        format!("p{0}p{0}{1}{0}", "0".repeat(5), "d".repeat(47))
    );
    let ul = build_layout(Scheme::Uplink(2), &params, true).unwrap();
    assert_eq!(ul.len(), 2);
    let joint: String = (0..64)
        .map(|k| {
            let marks: Vec<char> = ul.iter().map(|l| l.diagram().as_bytes()[k] as char).collect();
            if marks.contains(&'p') {
                'p'
            } else if marks.contains(&'d') {
                'd'
            } else {
                '0'
            }
        })
        .collect();
    assert_eq!(
        joint,
        format!("p{0}p{0}{1}{0}{2}{0}", "0".repeat(5), "d".repeat(21), "d".repeat(21))
    );
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            afdm::sim::SimConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 10);
}
