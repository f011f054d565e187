use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use qctl_cli::{Format, RunConfig};
use qctl_core::ErrorKind;

fn qctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qctl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn sweep_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = qctl(&[
        "sweep",
        "--model",
        "commutative",
        "--lambdas",
        "0,3,5,10",
        "--eps-min",
        "-0.2",
        "--eps-max",
        "0.2",
        "--eps-step",
        "0.01",
        "--n-steps",
        "1000",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,epsilon,fidelity"));
    assert_eq!(lines.count(), 41 * 4);
}

#[test]
fn cyclic_csv_includes_both_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cyclic.csv");
    let o = qctl(&[
        "cyclic",
        "--model",
        "noncommutative",
        "--lambda",
        "5",
        "--epsilon",
        "-0.2",
        "--loops",
        "2",
        "--n-steps",
        "4800",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    assert!(text.starts_with("t,P0,P1,Pe\n"));
    assert_eq!(text.lines().count() - 1, 14401);
}

#[test]
fn audit_json_has_the_diagnostic_keys() {
    let o = qctl(&["audit", "--model", "commutative", "--lambda", "5", "--epsilon", "0.02"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["m12", "m13", "m23", "fidelity_magnus", "fidelity_numerical", "margins"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn pulse_table_columns() {
    let o = qctl(&["pulse-table", "--lambda", "5", "--n-steps", "1000"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("t,delta_e,delta_1,delta_0,omega_0,omega_1,omega_2,varphi_0,varphi_1,varphi_2\n"));
    assert_eq!(text.lines().count(), 1002);
}

#[test]
fn usage_errors_exit_one_and_name_the_field() {
    let o = qctl(&["sweep", "--epsilon", "0.9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));
    let o = qctl(&["transfer", "--lambda", "1", "--bogus", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = qctl(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn unreadable_config_exits_two() {
    let o = qctl(&["transfer", "--config", "/nonexistent/run.conf"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(
        &conf,
        "# transfer run\ncommand = transfer\nlambda = 3\nmodel = commutative\nepsilon = 0.1\nformat = json\n",
    )
    .unwrap();
    let cfg = RunConfig::from_args(["--config", conf.to_str().unwrap(), "--epsilon", "-0.2"]).unwrap();
    assert_eq!(cfg.epsilon, Some(-0.2));
    assert_eq!(cfg.lambdas, vec![3.0]);
    assert_eq!(cfg.format, Format::Json);
}

fn config() -> impl Strategy<Value = RunConfig> {
    (
        prop_oneof![Just(ErrorKind::Commutative), Just(ErrorKind::Noncommutative)],
        0.0..20.0f64,
        -0.5..=0.5f64,
        1000usize..20000,
        1usize..4,
        any::<bool>(),
    )
        .prop_map(|(model, lambda, eps, n, loops, json)| {
            let mut args = vec![
                "cyclic".to_string(),
                "--model".into(),
                model.name().into(),
                "--lambda".into(),
                format!("{lambda:?}"),
                "--epsilon".into(),
                format!("{eps:?}"),
                "--n-steps".into(),
                (2 * (n / 2)).to_string(),
                "--loops".into(),
                loops.to_string(),
            ];
            if json {
                args.extend(["--format".into(), "json".into()]);
            }
            RunConfig::from_args(args).unwrap()
        })
}

proptest! {
    #[test]
    fn config_text_round_trips(cfg in config()) {
        prop_assert_eq!(RunConfig::from_config_text(&cfg.to_config_text()).unwrap(), cfg);
    }
}
