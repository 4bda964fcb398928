use std::path::Path;
use std::process::{Command, Output};

use rfmix_core::metrics::{stft_spectrogram, Spectrogram};
use rfmix_harness::dataset::{load_manifest, read_sample};

fn rfmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfmix"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(rel: &str) -> String {
    format!("{}/configs/{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn band_power_db(sg: &Spectrogram, lo_hz: f64, hi_hz: f64) -> f64 {
    let mut p = 0.0;
    for f in 0..sg.n_frames {
        for (b, m) in sg.row(f).iter().enumerate() {
            let hz = sg.freq_of_bin(b);
            if hz >= lo_hz && hz <= hi_hz {
                p += m * m;
            }
        }
    }
    10.0 * (p / (sg.n_frames as f64 * (hi_hz - lo_hz))).log10()
}

#[test]
fn gen_writes_the_declared_length() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lte.iq");
    let o = rfmix(&["gen", "--config", &config("waveforms/lte_10mhz.json"), "--seed", "4", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(meta["standard"], "lte");
    let n = meta["file"]["n_samples"].as_u64().unwrap();
    assert_eq!(std::fs::metadata(&out).unwrap().len(), 8 * n);
    assert_eq!(meta["file"]["sample_rate_hz"], 15.36e6);
}

#[test]
fn lte_and_nr_both_show_in_the_spectrogram() {
    let dir = tempfile::tempdir().unwrap();
    let o = rfmix(&["mix", "--spec", &config("scenarios/lte_nr_coexistence.json"), "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mpath = dir.path().join("manifest.json");
    let m = load_manifest(&mpath).unwrap();
    assert_eq!(m.samples[0].components.len(), 2);

    let csv = dir.path().join("sg.csv");
    let png = dir.path().join("sg.png");
    let o = rfmix(&[
        "spectrogram", "--manifest", s(&mpath), "--id", "lte-nr", "--csv", s(&csv), "--png", s(&png),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(png.exists() && csv.exists());

    let sample = read_sample(&m, dir.path(), "lte-nr").unwrap();
    let sg = stft_spectrogram(sample.mixture(), 256, 128).unwrap();
    let lte = band_power_db(&sg, -16e6, -8e6);
    let nr = band_power_db(&sg, 2e6, 18e6);
    let empty = band_power_db(&sg, 22e6, 30e6);
    assert!(lte > empty + 15.0, "lte {lte} vs floor {empty}");
    assert!(nr > empty + 15.0, "nr {nr} vs floor {empty}");
}

#[test]
fn metrics_and_separation_on_a_mimo_sample() {
    let dir = tempfile::tempdir().unwrap();
    let o = rfmix(&["mix", "--spec", &config("scenarios/dense_mimo.json"), "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mpath = dir.path().join("manifest.json");

    let psd = dir.path().join("psd.csv");
    let o = rfmix(&["metrics", "--manifest", s(&mpath), "--id", "dense-mimo", "--psd-csv", s(&psd)]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["papr_db"].as_f64().unwrap() > 0.0);
    assert!(std::fs::read_to_string(&psd).unwrap().starts_with("freq_hz,psd_db_per_hz"));

    let est = dir.path().join("est");
    let o = rfmix(&["separate", "--manifest", s(&mpath), "--id", "dense-mimo", "--method", "ica", "--out", s(&est)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["score"]["improvement_db"].as_array().unwrap().len(), 4);
    assert!(est.join("estimate3.iq").exists());

    let o = rfmix(&["separate", "--manifest", s(&mpath), "--id", "dense-mimo", "--method", "nmf", "--grouping", "oracle"]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["divergence_monotone"], true);
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let code = |o: Output| o.status.code().unwrap();

    // validation
    assert_eq!(code(rfmix(&["gen", "--standard", "cdma2000", "--out", "x.iq"])), 1);
    assert_eq!(code(rfmix(&["bench", "--bogus"])), 1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"id":"x","duration_s":0.05,"common_rate_hz":1e6,"sources":[{"waveform":{"standard":"gsm"}}]}"#).unwrap();
    assert_eq!(code(rfmix(&["mix", "--spec", s(&bad), "--out", s(dir.path())])), 1);

    // I/O
    assert_eq!(code(rfmix(&["verify", "--manifest", s(&dir.path().join("none.json"))])), 2);

    // ICA asked to split two sources from one antenna
    let two = dir.path().join("two.json");
    std::fs::write(
        &two,
        r#"{"id":"two","duration_s":0.002,"common_rate_hz":4e6,"sources":[
            {"waveform":{"standard":"gsm"},"placement":{"freq_offset_hz":-1e6}},
            {"waveform":{"standard":"gsm"},"placement":{"freq_offset_hz":1e6}}]}"#,
    )
    .unwrap();
    let o = rfmix(&["mix", "--spec", s(&two), "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = dir.path().join("manifest.json");
    assert_eq!(code(rfmix(&["separate", "--manifest", s(&m), "--id", "two"])), 1);
    assert_eq!(code(rfmix(&["separate", "--manifest", s(&m), "--id", "other"])), 1);
    assert_eq!(code(rfmix(&["verify", "--manifest", s(&m)])), 0);

    // integrity
    let f = dir.path().join("samples/two/source0.iq");
    let bytes = std::fs::read(&f).unwrap();
    std::fs::write(&f, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(code(rfmix(&["verify", "--manifest", s(&m)])), 2);

    // numeric: all-zero input has no power to measure
    let z = dir.path().join("zero.iq");
    std::fs::write(&z, vec![0u8; 8 * 4096]).unwrap();
    assert_eq!(code(rfmix(&["metrics", "--input", s(&z), "--sample-rate-hz", "1e6"])), 3);
}

#[test]
fn bench_baseline_regression_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let o = rfmix(&["bench", "--duration-s", "1e-3", "--min-wall-s", "0", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut base: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    for row in base["standards"].as_array_mut().unwrap() {
        let x = row["realtime_multiple"].as_f64().unwrap();
        row["realtime_multiple"] = (x * 1000.0).into();
    }
    let b = dir.path().join("base.json");
    std::fs::write(&b, serde_json::to_vec(&base).unwrap()).unwrap();
    let o = rfmix(&["bench", "--duration-s", "1e-3", "--min-wall-s", "0", "--baseline", s(&b)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("regression"));
}
