use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_deltawb"))
        .args(args)
        .current_dir(fixtures())
        .env_remove("DELTAWB_BUDGET")
        .output()
        .unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), v)
}

fn raw(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_deltawb")).args(args).current_dir(fixtures()).output().unwrap();
    (out.status.code().unwrap(), out.stdout)
}

fn failed(v: &Value) -> Vec<String> {
    v["checks"].as_array().unwrap().iter().filter(|c| c["pass"] == false).map(|c| c["name"].as_str().unwrap().to_string()).collect()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(run(&["canext", "--bogus", "diamond.lat.json"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
}

#[test]
fn missing_or_malformed_input_exits_two() {
    let (code, v) = run(&["canext", "nope.lat.json"]);
    assert_eq!(code, 2);
    assert!(v["error"].as_str().unwrap().contains("nope.lat.json"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.lat.json");
    std::fs::write(&bad, r#"{"elements": ["0", "a", "b"], "leq": [["0", "a"], ["0", "b"]]}"#).unwrap();
    assert_eq!(run(&["canext", bad.to_str().unwrap()]).0, 2);
}

#[test]
fn diamond_extension_is_iso() {
    let (code, v) = run(&["canext", "diamond.lat.json"]);
    assert_eq!(code, 0);
    assert_eq!(v["data"]["iso"], true);
    assert_eq!(v["data"]["dense"], true);
    assert_eq!(v["data"]["compact"], true);
    assert_eq!(v["data"]["primeFilterCount"], 2);
    assert_eq!(v["command"], "canext");
    assert_eq!(v["inputs"]["diamond.lat.json"].as_str().unwrap().len(), 64);
}

// brute force: every partial order on fewer than `max` labelled points, its
// downsets listed directly, lattices deduplicated by exhaustive iso search
fn oracle_counts(max: usize) -> Vec<usize> {
    type Lat = Vec<Vec<bool>>;
    fn lattice_of(k: usize, leq: &[Vec<bool>]) -> Lat {
        let downs: Vec<u32> = (0u32..1 << k)
            .filter(|&s| (0..k).all(|b| s & (1 << b) == 0 || (0..k).all(|a| !leq[a][b] || s & (1 << a) != 0)))
            .collect();
        downs.iter().map(|&x| downs.iter().map(|&y| x & !y == 0).collect()).collect()
    }
    fn iso(a: &Lat, b: &Lat) -> bool {
        let n = a.len();
        if n != b.len() {
            return false;
        }
        fn go(a: &Lat, b: &Lat, f: &mut Vec<usize>, used: &mut Vec<bool>) -> bool {
            let i = f.len();
            if i == a.len() {
                return true;
            }
            for j in 0..a.len() {
                if !used[j] && (0..i).all(|p| a[p][i] == b[f[p]][j] && a[i][p] == b[j][f[p]]) {
                    used[j] = true;
                    f.push(j);
                    if go(a, b, f, used) {
                        return true;
                    }
                    f.pop();
                    used[j] = false;
                }
            }
            false
        }
        go(a, b, &mut Vec::new(), &mut vec![false; n])
    }
    let mut found: Vec<Lat> = Vec::new();
    for k in 0..max {
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).filter(|(a, b)| a != b).collect();
        for mask in 0u64..1 << pairs.len() {
            let mut leq = vec![vec![false; k]; k];
            for (i, row) in leq.iter_mut().enumerate() {
                row[i] = true;
            }
            for (j, &(a, b)) in pairs.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    leq[a][b] = true;
                }
            }
            let order = (0..k).all(|a| {
                (0..k).all(|b| (a == b || !(leq[a][b] && leq[b][a])) && (0..k).all(|c| !(leq[a][b] && leq[b][c]) || leq[a][c]))
            });
            if !order {
                continue;
            }
            let l = lattice_of(k, &leq);
            if l.len() <= max && !found.iter().any(|m| iso(m, &l)) {
                found.push(l);
            }
        }
    }
    (1..=max).map(|n| found.iter().filter(|l| l.len() == n).count()).collect()
}

#[test]
fn enumerate_dl_matches_oracle() {
    let (code, v) = run(&["enumerate", "dl", "--max", "5"]);
    assert_eq!(code, 0);
    let counts: Vec<usize> = serde_json::from_value(v["data"]["counts"].clone()).unwrap();
    assert_eq!(counts, oracle_counts(5));
    assert_eq!(v["data"]["total"], counts.iter().sum::<usize>());
}

#[test]
fn enumerate_refuses_large_bounds() {
    let (code, v) = run(&["enumerate", "dl", "--max", "11"]);
    assert_eq!(code, 2);
    assert!(v["error"].as_str().unwrap().contains("roughly"));
    let (code, v) = run(&["enumerate", "sets", "--max", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["data"]["fragments"], serde_json::json!([[1], [0, 1], [1, 2], [0, 1, 2]]));
}

#[test]
fn corpus_chase_and_models() {
    for (theory, start) in [("t1_equivalence.chr", "2"), ("t2_colouring.chr", "2"), ("t3_successor.chr", "1")] {
        let path = format!("logic/{theory}");
        let (code, v) = run(&["chase", &path, "--start", start]);
        assert_eq!(code, 0, "{theory}");
        assert!(v["data"]["model"]["sorts"].is_object());
        assert_eq!(run(&["models", "check-m", &path]).0, 0, "{theory}");
        assert_eq!(run(&["models", "sigma-bar", &path]).0, 0, "{theory}");
    }
    let (code, v) = run(&["models", "sigma-bar", "logic/t3_successor.chr", "--without", "logic/t3_cycle.model.json"]);
    assert_eq!(code, 1);
    assert_eq!(failed(&v), vec!["M2", "embedding", "conservative"]);
    let emb = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "embedding").unwrap();
    assert!(emb["witness"].as_str().unwrap().contains("not realized"));
}

#[test]
fn chase_refutes_inconsistent_theories() {
    let dir = tempfile::tempdir().unwrap();
    let th = dir.path().join("bad.chr");
    std::fs::write(&th, "sort V;\nrel P : V;\nx:V | true |- P(x);\nP(x) |- false;\n").unwrap();
    let (code, v) = run(&["chase", th.to_str().unwrap(), "--start", "1"]);
    assert_eq!(code, 1);
    assert!(v["checks"][0]["witness"].as_str().unwrap().starts_with("refuted"));
}

#[test]
fn reports_are_byte_identical() {
    let cases: [&[&str]; 4] = [
        &["predcat", "pmodel-check", "sets12.cat.json"],
        &["tot", "sheaf-check", "diamond.cat.json"],
        &["models", "sigma-bar", "logic/t2_colouring.chr"],
        &["hyper", "canext", "restriction.hyp.json"],
    ];
    for args in cases {
        let a = raw(args);
        let b = raw(args);
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn out_file_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let dot = dir.path().join("t.dot");
    let (code, stdout) = raw(&[
        "tot",
        "site",
        "chain3.cat.json",
        "--dot",
        dot.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));
}

#[test]
fn budget_env_var_is_honoured() {
    let out = Command::new(env!("CARGO_BIN_EXE_deltawb"))
        .args(["tot", "sheaf-check", "sets012.cat.json"])
        .current_dir(fixtures())
        .env("DELTAWB_BUDGET", "1")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["data"]["budget"], 1);
    assert_eq!(v["data"]["complete"], false);
    let out = Command::new(env!("CARGO_BIN_EXE_deltawb"))
        .args(["canext", "diamond.lat.json"])
        .current_dir(fixtures())
        .env("DELTAWB_BUDGET", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn locale_fixture_pair() {
    assert_eq!(run(&["tot", "locale-check", "conservative.fun.json", "--check", "surjection"]).0, 0);
    assert_eq!(run(&["tot", "locale-check", "heyting.fun.json", "--check", "open"]).0, 0);
    let (code, v) = run(&["tot", "locale-check", "broken/nonconservative.fun.json", "--check", "surjection"]);
    assert_eq!(code, 1);
    assert_eq!(failed(&v), vec!["surjection"]);
    let (code, v) = run(&["tot", "locale-check", "conservative.fun.json", "--check", "open"]);
    assert_eq!(code, 1);
    assert!(failed(&v).iter().all(|n| n.starts_with("open.")));
}

#[test]
fn empty_cover_breaks_only_cover_preservation() {
    let (code, v) = run(&["tot", "compare", "chain3.cat.json", "--empty-cover"]);
    assert_eq!(code, 1);
    assert_eq!(failed(&v), vec!["cover_preserving", "dense_subsite.cover_preserving"]);
}

fn shipped(dir: &Path, out: &mut Vec<PathBuf>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            if p.file_name().unwrap() != "broken" {
                shipped(&p, out);
            }
        } else {
            out.push(p);
        }
    }
}

#[test]
fn every_shipped_fixture_validates() {
    let mut files = Vec::new();
    shipped(&fixtures(), &mut files);
    files.sort();
    let mut seen = 0;
    for f in &files {
        let name = f.file_name().unwrap().to_str().unwrap();
        let p = f.to_str().unwrap();
        let cmds: Vec<Vec<&str>> = if name.ends_with(".lat.json") {
            vec![vec!["canext", p]]
        } else if name.ends_with(".hyp.json") {
            vec![vec!["hyper", "validate", p], vec!["hyper", "canext", p]]
        } else if name.ends_with(".cat.json") {
            vec![vec!["hyper", "validate", p], vec!["predcat", "counit-check", p], vec!["tot", "site", p]]
        } else if name.ends_with(".fun.json") {
            vec![vec!["tot", "locale-check", p, "--check", if name.starts_with("heyting") { "open" } else { "surjection" }]]
        } else if name.ends_with(".chr") {
            vec![vec!["models", "check-m", p]]
        } else {
            continue;
        };
        for c in cmds {
            let (code, v) = run(&c);
            assert_eq!(code, 0, "{c:?}: {v}");
            seen += 1;
        }
    }
    assert!(seen >= 20, "{seen}");
}
