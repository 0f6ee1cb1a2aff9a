//! End-to-end checks of the `qtt` binary: file round trips through the
//! subcommands and the documented exit codes.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qtt"))
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("qtt-cli-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn build_ranks_invert_round_trip() {
    let qtt_path = temp_path("x2.qtt");
    let csv_path = temp_path("x2.csv");

    let out = bin()
        .args([
            "build", "--fn", "x2", "-N", "3", "-K", "10", "--mode", "basic",
        ])
        .arg("--out")
        .arg(&qtt_path)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "build failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    // The written container loads back through the library.
    let tt = qtt_core::tt::tt_read_file(&qtt_path).unwrap();
    assert_eq!(tt.depth(), 10);

    let out = bin()
        .args(["ranks", "--tol", "1e-10"])
        .arg("--in")
        .arg(&qtt_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    // x^2 has unfolding ranks at most 3 everywhere.
    for line in text.lines().skip(1) {
        let rank: usize = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(rank <= 3, "{line}");
    }

    let out = bin()
        .args(["invert", "-N", "3", "-q", "1", "--target-level", "2"])
        .arg("--in")
        .arg(&qtt_path)
        .arg("--out")
        .arg(&csv_path)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "invert failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("prefix_bits,beta,x,value"));
    assert_eq!(csv.lines().count(), 1 + 4 * 4);

    let _ = std::fs::remove_file(&qtt_path);
    let _ = std::fs::remove_file(&csv_path);
}

#[test]
fn validation_error_exits_2() {
    // Depth 1 violates the construction contract.
    let out = bin()
        .args([
            "build",
            "--fn",
            "x",
            "-N",
            "2",
            "-K",
            "1",
            "--out",
            "/dev/null",
        ])
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn io_error_exits_4() {
    let missing = temp_path("missing.qtt");
    let out = bin()
        .args(["ranks"])
        .arg("--in")
        .arg(&missing)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));

    // Corrupted container: format error is also an i/o-class failure.
    let bad = temp_path("bad.qtt");
    std::fs::write(&bad, b"not a qtt container").unwrap();
    let out = bin()
        .args(["ranks"])
        .arg("--in")
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let _ = std::fs::remove_file(&bad);
}

#[test]
fn bounds_subcommand_prints_table() {
    let out = bin()
        .args([
            "bounds",
            "--class",
            "bandlimited",
            "--omega",
            "256",
            "--eps",
            "1e-8",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("m,interp_error_bound,rank_bound"));
    assert!(text.contains("# uniform_rank_bound="));
}

#[test]
fn experiment_csv_reproducible_through_binary() {
    let p1 = temp_path("exp1.csv");
    let p2 = temp_path("exp2.csv");
    for p in [&p1, &p2] {
        let out = bin()
            .args([
                "experiment",
                "--name",
                "bivariate-serial",
                "--seed",
                "5",
                "--samples",
                "200",
            ])
            .arg("--out")
            .arg(p)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = std::fs::read(&p1).unwrap();
    let b = std::fs::read(&p2).unwrap();
    assert_eq!(a, b, "identical configuration must give byte-identical CSV");
    let _ = std::fs::remove_file(&p1);
    let _ = std::fs::remove_file(&p2);
}
