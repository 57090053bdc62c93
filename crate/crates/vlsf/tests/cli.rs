use std::process::{Command, Output};

fn vlsf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlsf")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn curve_csv_header_and_rows() {
    let o = vlsf(&[
        "curve",
        "--channel",
        "bec:0.5",
        "--k-range",
        "4:8:4",
        "--m",
        "1",
        "--m",
        "2",
        "--eps",
        "1e-3",
        "--mode",
        "strlfc",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "source,channel,param,k,m,eps,delta_star,gamma_star,n_times,N_star,rate");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4 + 3 * 2);
    assert!(rows.iter().any(|r| r.starts_with("st_rlfc_sdo,bec,0.5,8,2,")));
    assert!(rows.iter().any(|r| r.starts_with("polyanskiy,bec,0.5,4,,")));
}

#[test]
fn sdo_jsonl_on_the_bsc() {
    let o = vlsf(&[
        "sdo",
        "--channel",
        "bsc:0.11",
        "--k",
        "5",
        "--m",
        "3",
        "--eps",
        "1e-2",
        "--delta",
        "0.5",
        "--format",
        "jsonl",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let row: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(row["m"], 3);
    assert_eq!(row["n_times"].as_str().unwrap().split(';').count(), 3);
    let n = row["N_star"].as_f64().unwrap();
    assert!((row["rate"].as_f64().unwrap() - 5.0 / n).abs() < 1e-12);
}

#[test]
fn tail_has_both_branches_and_the_switch_point() {
    let o = vlsf(&["tail", "--channel", "biawgn:0.2", "--gamma", "13.62", "--n", "10:30:10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for col in ["petrov_tail", "edgeworth_tail", "switch_point"] {
        assert!(header.contains(&col), "missing {col}");
    }
    assert_eq!(lines.count(), 3);
}

#[test]
fn bad_arguments_exit_with_usage_code() {
    let o = vlsf(&["sdo", "--channel", "bsc:0.11", "--k", "5", "--m", "2", "--eps", "2.0", "--delta", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = vlsf(&["tail", "--channel", "qam:3", "--gamma", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn output_file_is_written() {
    let dir = std::env::temp_dir().join(format!("vlsf-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("rlfc.csv");
    let o = vlsf(&["bec-rlfc", "--p", "0.5", "--k-range", "1:5", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("k,p,devassy,st_rlfc_zero_error,st_rlfc_markov,"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn single_check_runs() {
    let o = vlsf(&["check", "--only", "4"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("[PASS]  4."));
}
