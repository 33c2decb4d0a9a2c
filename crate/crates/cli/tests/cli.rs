use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn xrr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xrr"))
        .args(args)
        .env_remove("XRR_SEED")
        .output()
        .expect("spawn xrr")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["simulate", "--items", "2000", "--data", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = xrr(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    path
}

/// Parses a CSV without quoting into header -> column map for the first data row.
fn first_row(csv: &str) -> Vec<(String, String)> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    header.into_iter().map(String::from).zip(row.into_iter().map(String::from)).collect()
}

fn field<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == name).unwrap_or_else(|| panic!("no column {name}")).1
}

#[test]
fn simulate_perfect_raters() {
    let out = xrr(&["simulate", "--accuracy-x", "1", "--accuracy-y", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("kappa_x,1.0000,1.0000"), "{text}");
}

#[test]
fn report_is_deterministic_and_internally_consistent() {
    let dir = TempDir::new().unwrap();
    let data = simulate(dir.path(), "sim.csv", &["--latent-agreement", "0.8", "--annotations-x", "1..4"]);
    let args = ["report", "-i", data.to_str().unwrap(), "--rho"];
    let a = xrr(&args);
    let b = xrr(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);

    let row = first_row(&stdout(&a));
    let num = |k: &str| field(&row, k).parse::<f64>().unwrap();
    let expected = num("kx_X_Y") / (num("irr_X").sqrt() * num("irr_Y").sqrt());
    assert!((num("norm_kx_X_Y") - expected).abs() < 5e-5, "{row:?}");
    assert!(num("rho_X_Y") > 0.0);
}

#[test]
fn seed_controls_resampling() {
    let dir = TempDir::new().unwrap();
    let data = simulate(dir.path(), "sim.csv", &[]);
    let path = data.to_str().unwrap();
    let run = |seed: Option<&str>, env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_xrr"));
        cmd.args(["bootstrap", "-i", path, "--replicates", "200"]).env_remove("XRR_SEED");
        if let Some(s) = seed {
            cmd.args(["--seed", s]);
        }
        if let Some(e) = env {
            cmd.env("XRR_SEED", e);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        out.stdout
    };
    assert_eq!(run(None, None), run(Some("42"), None));
    assert_eq!(run(None, Some("7")), run(Some("7"), None));
    assert_eq!(run(Some("7"), Some("9")), run(Some("7"), None));
    assert_ne!(run(Some("7"), None), run(Some("8"), None));
}

#[test]
fn audit_verdicts_straddle_thresholds() {
    let dir = TempDir::new().unwrap();
    let audit = |data: &Path| {
        let out = xrr(&["audit", "-i", data.to_str().unwrap(), "--main", "X", "--trusted", "Y"]);
        assert!(out.status.success(), "{}", stderr(&out));
        first_row(&stdout(&out))
    };

    let same = simulate(dir.path(), "same.csv", &["--accuracy-x", "0.95", "--accuracy-y", "0.95"]);
    let row = audit(&same);
    assert_eq!(field(&row, "verdict"), "PASS", "{row:?}");
    assert_eq!(field(&row, "failed_checks"), "");

    let drift = simulate(dir.path(), "drift.csv", &["--accuracy-x", "0.95", "--accuracy-y", "0.95", "--latent-agreement", "0.5"]);
    let row = audit(&drift);
    assert_eq!(field(&row, "verdict"), "WARN");
    assert!(field(&row, "failed_checks").contains("normalized_kappa_x"), "{row:?}");
    assert!(!field(&row, "failed_checks").contains("irr_ratio"), "{row:?}");

    let noisy = simulate(dir.path(), "noisy.csv", &["--accuracy-x", "0.7", "--accuracy-y", "0.98"]);
    let row = audit(&noisy);
    assert_eq!(field(&row, "verdict"), "WARN");
    assert!(field(&row, "failed_checks").contains("irr_ratio"), "{row:?}");

    // The same data passes once the bar is lowered.
    let out = xrr(&[
        "audit", "-i", noisy.to_str().unwrap(), "--main", "X", "--trusted", "Y", "--irr-ratio-min", "0.01", "--min-normalized", "0.5",
    ]);
    assert_eq!(field(&first_row(&stdout(&out)), "verdict"), "PASS");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let constant = dir.path().join("constant.csv");
    let mut text = String::from("replication,item,rater_slot,label,value,scale\n");
    for i in 0..5 {
        for s in 0..2 {
            for rep in ["A", "B"] {
                text.push_str(&format!("{rep},{i},r{s},awe,1,categorical\n"));
            }
        }
    }
    std::fs::write(&constant, text).unwrap();
    let out = xrr(&["xrr", "-i", constant.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let broken = dir.path().join("broken.csv");
    std::fs::write(&broken, "replication,item,rater_slot,label,value,scale\nA,1,r1,awe,1,categorical\nA,1,r1,awe\n").unwrap();
    let out = xrr(&["irr", "-i", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    assert_eq!(xrr(&["irr"]).status.code(), Some(1));
    assert_eq!(xrr(&["report", "--bogus"]).status.code(), Some(1));
    assert_eq!(xrr(&["--help"]).status.code(), Some(0));
    assert_eq!(xrr(&["--version"]).status.code(), Some(0));
}

#[test]
fn wide_inputs_tagged_per_city() {
    let dir = TempDir::new().unwrap();
    let schema = dir.path().join("schema.toml");
    std::fs::write(
        &schema,
        "item_column = \"item_id\"\nreplication = \"unused\"\nlabels = [\"awe\", \"joy\"]\n\
         [slots]\nlayout = \"columns\"\nnames = [\"Rater_1\", \"Rater_2\"]\n",
    )
    .unwrap();
    let mut inputs = Vec::new();
    for (c, city) in ["MC", "KL", "Bud"].iter().enumerate() {
        let mut text = String::from("item_id,Rater_1_awe,Rater_1_joy,Rater_2_awe,Rater_2_joy\n");
        for i in 0..60 {
            let v = |salt: usize| ((i * 7 + salt) % 5 < 2) as u8;
            text.push_str(&format!("{i},{},{},{},{}\n", v(0), v(1), v(c % 2), v(1 + c)));
        }
        let path = dir.path().join(format!("{city}.csv"));
        std::fs::write(&path, text).unwrap();
        inputs.push(format!("{city}={}", path.display()));
    }
    let mut args = vec!["report", "--input-format", "wide", "--schema", schema.to_str().unwrap()];
    for i in &inputs {
        args.extend(["-i", i.as_str()]);
    }
    args.extend(["--pair", "MC:KL", "--pair", "MC:Bud", "--pair", "KL:Bud", "--labels", "awe"]);
    let out = xrr(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "label,irr_MC,irr_KL,irr_Bud,kx_MC_KL,kx_MC_Bud,kx_KL_Bud,norm_kx_MC_KL,norm_kx_MC_Bud,norm_kx_KL_Bud"
    );
    assert_eq!(lines[1].split(',').count(), 10);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let data = simulate(dir.path(), "sim.csv", &[]);
    let config = dir.path().join("xrr.conf");
    std::fs::write(&config, "# defaults\nformat = json\nsplits = 5\n").unwrap();
    let path = data.to_str().unwrap();
    let conf = config.to_str().unwrap();

    let out = xrr(&["irr", "-i", path, "--config", conf]);
    assert!(stdout(&out).starts_with('{'));
    let out = xrr(&["irr", "-i", path, "--config", conf, "-f", "markdown"]);
    assert!(stdout(&out).starts_with("| label"));

    std::fs::write(&config, "colour = blue\n").unwrap();
    let out = xrr(&["irr", "-i", path, "--config", conf]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown key `colour`"));
}

#[test]
fn scale_override_reads_categories_as_scores() {
    let dir = TempDir::new().unwrap();
    let data = simulate(dir.path(), "sim.csv", &[]);
    let path = data.to_str().unwrap();
    let nominal = stdout(&xrr(&["xrr", "-i", path]));
    let interval = stdout(&xrr(&["xrr", "-i", path, "--scale", "label=interval"]));
    // Binary 0/1 data: the squared distance equals the nominal one.
    assert_eq!(nominal, interval);
    assert_eq!(xrr(&["xrr", "-i", path, "--scale", "nope=interval"]).status.code(), Some(1));
}

#[test]
fn plotdata_histogram_and_scatter() {
    let dir = TempDir::new().unwrap();
    let data = simulate(dir.path(), "sim.csv", &[]);
    let path = data.to_str().unwrap();
    let out = xrr(&["plotdata", "-i", path, "--kind", "irr-histogram"]);
    assert_eq!(stdout(&out).lines().count(), 1 + 2 * 11);
    let out = xrr(&["plotdata", "-i", path, "--kind", "scatter"]);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2);
    assert!(text.starts_with("label,pair,normalized_kx,rho\nlabel,X-Y,"));
}
