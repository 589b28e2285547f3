use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

const SCRIPTS: &[(&str, i32)] = &[
    ("fss_separation", 0),
    ("pmf_sensitivity", 1),
    ("audit", 1),
    ("elicitation", 0),
    ("asking", 0),
    ("product_reduction", 0),
    ("bell", 0),
];

fn golden(name: &str, ext: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/goldens").join(format!("{name}.{ext}"))
}

fn run(script: &Path) -> (String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_meadowcalc"))
        .arg(script)
        .output()
        .expect("binary runs");
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap())
}

#[test]
fn scripts_match_goldens() {
    for (name, code) in SCRIPTS {
        let (out, status) = run(&golden(name, "mc"));
        let expected = std::fs::read_to_string(golden(name, "out")).unwrap();
        assert_eq!(out, expected, "{name}");
        assert_eq!(status, *code, "{name}");
        let has_fail = out.lines().any(|l| l.starts_with("FAIL"));
        assert_eq!(has_fail, status != 0, "{name}");
    }
}

#[test]
fn replay_is_deterministic() {
    for (name, _) in SCRIPTS {
        assert_eq!(run(&golden(name, "mc")), run(&golden(name, "mc")), "{name}");
    }
}

#[test]
fn every_line_is_a_verdict() {
    for (name, _) in SCRIPTS {
        let (out, _) = run(&golden(name, "mc"));
        for line in out.lines() {
            assert!(line.starts_with("OK ") || line.starts_with("FAIL "), "{name}: {line}");
        }
    }
}

#[test]
fn repl_reads_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_meadowcalc"))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"space E events e\nthreshold 10 0 2\nbogus\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "OK space E atoms e !e\nOK threshold 10 0 2 = 4/5\nFAIL error: unknown command 'bogus'\n"
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn max_atoms_and_seed_flags() {
    let dir = std::env::temp_dir().join(format!("meadowcalc-flags-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let script = dir.join("big.mc");
    std::fs::write(&script, "space S atoms a b c d\nlaws ba S\nrandom pf P on S\n").unwrap();
    let bin = env!("CARGO_BIN_EXE_meadowcalc");
    let narrow = Command::new(bin).arg(&script).output().unwrap();
    let text = String::from_utf8(narrow.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("FAIL line 2:"), "{text}");
    assert_eq!(narrow.status.code(), Some(1));

    let wide = |seed: &str| {
        let o = Command::new(bin)
            .args(["--max-atoms", "4", "--seed", seed])
            .arg(&script)
            .output()
            .unwrap();
        (String::from_utf8(o.stdout).unwrap(), o.status.code())
    };
    let (a, code) = wide("5");
    assert_eq!(code, Some(0), "{a}");
    assert_eq!(wide("5").0, a);
    std::fs::remove_dir_all(&dir).unwrap();
}
