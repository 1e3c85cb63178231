use std::path::Path;
use std::process::{Command, Output};

use markov_redaction::experiments::Table;
use markov_redaction::{
    build_3r_relaxation, dim_upper_bound, influence_high, three_r_utility, MarkovModel,
    MechanismFile, MechanismKind, RedactionMechanism,
};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_markov-redaction"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

fn write_file(dir: &Path, name: &str, model: MarkovModel, mech: RedactionMechanism) -> String {
    let path = dir.join(name);
    std::fs::write(&path, MechanismFile::new(model, mech).unwrap().to_text()).unwrap();
    path.to_str().unwrap().to_string()
}

const FIG4: [&str; 8] = ["--alpha", "0.01", "--beta", "0.8", "--n", "10", "--p", "1"];

#[test]
fn example1_command() {
    let o = run(&["example1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 9);
    assert!(text.lines().all(|l| l.starts_with("ok")));
}

#[test]
fn audit_command_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let model = MarkovModel::new(2, 0.25, 0.5).unwrap();
    let mech =
        RedactionMechanism::new(1, MechanismKind::Custom, vec![[1.0, 1.0], [0.125, 1.0]]).unwrap();
    let ex1 = write_file(dir.path(), "ex1.txt", model, mech);

    let o = run(&["audit", &ex1, "--eps", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let leak: f64 = field(&text, "leakage").parse().unwrap();
    assert!((leak - 0.492_476).abs() < 1e-6);
    assert_eq!(field(&text, "witness"), "⊥⊥");
    assert_eq!(field(&text, "result"), "pass");

    let o = run(&["audit", &ex1, "--eps", "0.4"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(field(&stdout(&o), "result"), "fail");

    let full = write_file(
        dir.path(),
        "full.txt",
        MarkovModel::new(6, 0.1, 0.5).unwrap(),
        RedactionMechanism::full_redaction(6, 3).unwrap(),
    );
    let o = run(&["audit", &full, "--eps", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "leakage"), "0");

    let big = write_file(
        dir.path(),
        "big.txt",
        MarkovModel::new(13, 0.1, 0.5).unwrap(),
        RedactionMechanism::full_redaction(13, 3).unwrap(),
    );
    assert_eq!(run(&["audit", &big]).status.code(), Some(3));
    assert_eq!(run(&["audit", &big, "--cap", "13"]).status.code(), Some(0));

    let bad = dir.path().join("bad.txt");
    let text = std::fs::read_to_string(&ex1)
        .unwrap()
        .replace("n: 2", "n: 2\nextra: 1");
    std::fs::write(&bad, text).unwrap();
    let o = run(&["audit", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");

    assert_eq!(run(&["audit", "/nonexistent/file"]).status.code(), Some(2));
}

#[test]
fn usage_errors() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(
        run(&["influence-curve", "--alpha", "0.1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["utility-curve", "--mechanism", "bogus"])
            .status
            .code(),
        Some(2)
    );
    let o = run(&[
        "influence-curve",
        "--alpha",
        "0.9",
        "--beta",
        "0.1",
        "--n",
        "3",
        "--p",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn influence_curve_command() {
    let o = run(&[
        "influence-curve",
        "--alpha",
        "0.25",
        "--beta",
        "0.5",
        "--n",
        "9",
        "--p",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let t = Table::from_csv(&stdout(&o)).unwrap();
    assert_eq!(t.header, vec!["t", "delta", "i_low", "i_high"]);
    assert_eq!(t.rows.len(), 9);
    assert_eq!(t.get(4, "i_low"), Some("inf"));
    assert_eq!(t.get(4, "i_high"), Some("inf"));
    let il: f64 = t.get(5, "i_low").unwrap().parse().unwrap();
    let ih: f64 = t.get(5, "i_high").unwrap().parse().unwrap();
    assert!((il - 1.5f64.ln()).abs() < 1e-15);
    assert!((ih - 2f64.ln()).abs() < 1e-15);

    let mut args = FIG4.to_vec();
    args.insert(0, "influence-curve");
    args.extend(["--t-from", "4", "--t-to", "4"]);
    let t = Table::from_csv(&stdout(&run(&args))).unwrap();
    let ih: f64 = t.get(0, "i_high").unwrap().parse().unwrap();
    assert!((ih - 0.444_311).abs() < 1e-6);
}

#[test]
fn utility_curve_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let mut args = vec!["utility-curve"];
    args.extend(FIG4);
    args.extend(["--eps", "0.05,1,2.5", "--out", out.to_str().unwrap()]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let t = Table::from_csv(&text).unwrap();
    assert_eq!(t.rows.len(), 3);
    let cell = |i, c| -> f64 { t.get(i, c).unwrap().parse().unwrap() };
    assert_eq!(cell(1, "dim_ub"), 0.7);
    assert_eq!(cell(1, "nu_mq_exact"), 0.6);
    assert!((cell(1, "nu_3r_relax") - 0.748).abs() < 1e-3);
    assert!((cell(1, "nu_3r_numerical") - 0.789).abs() < 1e-3);
    for i in 0..3 {
        assert_eq!(t.get(i, "pass_3r_relax"), Some("true"));
        assert_eq!(t.get(i, "pass_3r_numerical"), Some("true"));
    }

    // values are re-derivable from the library
    let model = MarkovModel::new(10, 0.01, 0.8).unwrap();
    for i in 0..3 {
        let eps = cell(i, "eps");
        assert_eq!(
            cell(i, "dim_ub"),
            dim_upper_bound(&model, 1, eps).unwrap().value
        );
        let (d, _) = build_3r_relaxation(&model, 1, eps, None).unwrap();
        assert_eq!(cell(i, "nu_3r_relax"), three_r_utility(&d, &model));
    }

    // byte-for-byte deterministic
    let again = dir.path().join("again.csv");
    args.pop();
    args.push(again.to_str().unwrap());
    assert_eq!(run(&args).status.code(), Some(0));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());

    // tiny budgets force full redaction for the data-independent columns
    let tiny = (influence_high(&model, 9).value() * 0.5).to_string();
    let mut args = vec!["utility-curve"];
    args.extend(FIG4);
    args.extend([
        "--eps",
        &tiny,
        "--mechanism",
        "dim-ub",
        "--mechanism",
        "mq",
        "--mechanism",
        "mq-lb",
    ]);
    let t = Table::from_csv(&stdout(&run(&args))).unwrap();
    assert_eq!(t.header, vec!["eps", "dim_ub", "nu_mq_exact", "nu_mq_lb"]);
    assert_eq!(t.rows[0][1..], ["0", "0", "0"]);
}

#[test]
fn utility_curve_monte_carlo_columns() {
    let mut args = vec!["utility-curve"];
    args.extend(FIG4);
    args.extend([
        "--eps",
        "1",
        "--mechanism",
        "3r-relaxation",
        "--trials",
        "2000",
        "--seed",
        "5",
    ]);
    let a = stdout(&run(&args));
    assert_eq!(a, stdout(&run(&args)));
    let t = Table::from_csv(&a).unwrap();
    assert!(t.column("mc_3r_relax").is_some());
    assert!(t.column("mc_se_3r_relax").is_some());
}

#[test]
fn cap_errors_exit_three() {
    let mut args = vec![
        "utility-curve",
        "--alpha",
        "0.01",
        "--beta",
        "0.8",
        "--n",
        "14",
        "--p",
        "1",
    ];
    args.extend(["--eps", "1"]);
    assert_eq!(run(&args).status.code(), Some(3));
    args.extend(["--mechanism", "mq", "--mechanism", "3r-relaxation"]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0));
    let t = Table::from_csv(&stdout(&o)).unwrap();
    assert_eq!(t.get(0, "leak_3r_relax"), Some(""));
}

#[test]
fn redaction_profile_command() {
    let mut args = vec!["redaction-profile"];
    args.extend(FIG4);
    args.extend(["--eps", "1"]);
    let t = Table::from_csv(&stdout(&run(&args))).unwrap();
    assert_eq!(t.header, vec!["t", "mechanism", "r_t0", "r_t1"]);
    assert_eq!(t.rows.len(), 30);
    for row in &t.rows {
        if row[0] == "1" {
            assert_eq!((row[2].as_str(), row[3].as_str()), ("1", "1"));
        }
        if row[0] == "2" || row[0] == "3" {
            let q: f64 = row[2].parse().unwrap();
            match row[1].as_str() {
                "3r-relaxation" => assert!((q - 0.757_414_764_826_369).abs() < 1e-5),
                "3r-numerical" => assert!((q - 0.547_547_547_547_548).abs() <= 1.0 / 999.0),
                "mq" => assert_eq!(q, 1.0),
                other => panic!("{other}"),
            }
        }
    }
}

#[test]
fn design_then_audit() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["mq", "3r-relaxation", "3r-numerical"] {
        let path = dir.path().join(format!("{kind}.txt"));
        let mut args = vec!["design"];
        args.extend([
            "--alpha", "0.1", "--beta", "0.5", "--n", "8", "--p", "3", "--eps", "1",
        ]);
        args.extend(["--mechanism", kind, "--out", path.to_str().unwrap()]);
        assert_eq!(run(&args).status.code(), Some(0), "{kind}");
        let o = run(&["audit", path.to_str().unwrap(), "--eps", "1"]);
        assert_eq!(o.status.code(), Some(0), "{kind}");
        let o = run(&[
            "utility",
            path.to_str().unwrap(),
            "--trials",
            "20000",
            "--seed",
            "1",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        let exact: f64 = field(&text, "exact").parse().unwrap();
        let est: f64 = field(&text, "estimate").parse().unwrap();
        let se: f64 = field(&text, "standard_error").parse().unwrap();
        assert!((exact - est).abs() <= 4.0 * se + 1e-12);
    }
    let mut args = vec!["design"];
    args.extend([
        "--alpha", "0.1", "--beta", "0.5", "--n", "8", "--p", "3", "--eps", "1",
    ]);
    args.extend([
        "--eps-left",
        "0.8",
        "--eps-right",
        "0.8",
        "--mechanism",
        "3r-relaxation",
    ]);
    assert_eq!(run(&args).status.code(), Some(2));
}
