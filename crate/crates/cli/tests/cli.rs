use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_replay-bench")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SYNTH: &str = r#"
roster = ["mlp", "nash", "inertia", "oracle"]
protocol = "both"
sweep_k = [1, 9]
k = 9

[corpus.synthetic]
shape = { sessions_per_game = [2, 2], pairs = 1, periods = 30 }

[corpus.synthetic.generator]
generator = "inertia_agent"
stay_prob = 0.9

[training]
max_epochs = 1
max_batches_per_epoch = 2
"#;

#[test]
fn simulate_eval_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SYNTH);
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();

    let sim = bench(&["simulate", "--config", &cfg, "--out-dir", out_s]);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let games = out.join("games.txt");
    assert!(games.is_file() && out.join("sessions.txt").is_file());

    let eval = bench(&["eval", "--config", &cfg, "--out-dir", out_s, "--seed", "4", "--jobs", "2"]);
    assert_eq!(eval.status.code(), Some(0), "{}", String::from_utf8_lossy(&eval.stderr));
    for p in ["cross_game", "game_specific"] {
        for f in ["per_game.csv", "aggregate.csv", "manifest.json"] {
            assert!(out.join(p).join(f).is_file(), "{p}/{f}");
        }
    }
    let manifest = std::fs::read_to_string(out.join("cross_game/manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 4"));

    let report = bench(&["report", "--out-dir", out_s]);
    assert!(report.status.success());
    assert!(String::from_utf8_lossy(&report.stdout).contains("oracle"));

    let solve = bench(&["solve", "--games", games.to_str().unwrap(), "--game", "1", "--concept", "pse", "--n", "3"]);
    assert!(solve.status.success());
    let v: serde_json::Value = serde_json::from_slice(&solve.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["game"], "1");
}

#[test]
fn sweep_and_train_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SYNTH);
    let sweep = bench(&["sweep", "--config", &cfg]);
    assert!(sweep.status.success(), "{}", String::from_utf8_lossy(&sweep.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let train = bench(&["train", "--config", &cfg]);
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));
    assert!(dir.path().join("out/model.ckpt").is_file());
    assert!(dir.path().join("out/train_log.json").is_file());
}

#[test]
fn failing_cell_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // row player has a dominant action, so there is no mixed equilibrium
    std::fs::write(dir.path().join("games.txt"), "game 1\n5 4 1 0\n1 0 0 1\ngame 2\n1 0 0 1\n0 1 1 0\n").unwrap();
    let mut sessions = String::new();
    for g in 1..=2 {
        sessions += &format!("session {g} 1 1 30\n{}\n{}\n", "01".repeat(15), "0011".repeat(7) + "00");
    }
    std::fs::write(dir.path().join("sessions.txt"), sessions).unwrap();
    let cfg = write_config(dir.path(), "roster = [\"nash\", \"random\"]\n[corpus]\ngames = \"games.txt\"\nsessions = \"sessions.txt\"\n");
    let eval = bench(&["eval", "--config", &cfg]);
    assert_eq!(eval.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&eval.stderr).contains("nash"));
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bench(&["eval", "--config", "/nonexistent/exp.toml"]).status.code(), Some(2));
    let cfg = write_config(dir.path(), &SYNTH.replace("roster = [\"mlp\", \"nash\", \"inertia\", \"oracle\"]", "roster = []"));
    assert_eq!(bench(&["eval", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(bench(&["eval", "--config", &cfg, "--jobs", "0"]).status.code(), Some(2));
}
