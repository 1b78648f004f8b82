//! End-to-end tests of the `curveddg` binary.

use std::io::BufReader;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_curveddg"))
}

#[test]
fn mesh_subcommand_writes_loadable_mesh() {
    let dir = std::env::temp_dir().join("curveddg_cli_mesh");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("disk.mesh");
    let out = bin()
        .args(["mesh", "--target-h", "0.4", "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let file = std::fs::File::open(&path).unwrap();
    let mesh = curveddg_core::mesh::load_mesh(BufReader::new(file)).unwrap();
    assert!(!mesh.triangles.is_empty());
}

#[test]
fn solve_writes_csv_with_expected_columns() {
    let dir = std::env::temp_dir().join("curveddg_cli_solve");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("poisson.csv");
    let out = bin()
        .args([
            "solve",
            "--problem",
            "poisson",
            "--degree",
            "1",
            "--levels",
            "2",
            "--h0",
            "0.5",
            "--out",
            path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let header = text
        .lines()
        .find(|l| l.starts_with("level,"))
        .expect("header row");
    assert_eq!(
        header,
        "level,h,dofs,err_L2,err_H1_broken,err_h1_norm,eoc_err_L2,eoc_err_H1_broken,eoc_err_h1_norm"
    );
    // EOC cells are blank on the first data row.
    let first = text.lines().find(|l| l.starts_with("0,")).unwrap();
    assert!(first.ends_with(",,,"));
}

#[test]
fn verify_is_bit_identical_for_fixed_seed() {
    let dir = std::env::temp_dir().join("curveddg_cli_verify");
    std::fs::create_dir_all(&dir).unwrap();
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for path in [&a, &b] {
        let out = bin()
            .args([
                "verify",
                "--levels",
                "2",
                "--degree",
                "2",
                "--samples",
                "10",
                "--seed",
                "11",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ca = std::fs::read(&a).unwrap();
    let cb = std::fs::read(&b).unwrap();
    assert_eq!(ca, cb, "verify output must be bit-identical across reruns");
}

#[test]
fn configuration_errors_exit_with_code_1() {
    let out = bin()
        .args(["solve", "--problem", "heat", "--degree", "1", "--out", "/tmp/x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = bin()
        .args(["solve", "--no-such-flag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Biharmonic needs p >= 2.
    let out = bin()
        .args([
            "solve",
            "--problem",
            "biharmonic",
            "--degree",
            "1",
            "--out",
            "/tmp/x.csv",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solver_failure_exits_with_code_2() {
    // Tiny plate penalties make the system indefinite; the Cholesky of an
    // element block fails and the run aborts with the partial report.
    let dir = std::env::temp_dir().join("curveddg_cli_fail");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("fail.csv");
    let out = bin()
        .args([
            "solve",
            "--problem",
            "biharmonic",
            "--degree",
            "2",
            "--levels",
            "2",
            "--eta2",
            "1e-3",
            "--eta3",
            "1e-3",
            "--eta4",
            "1e-3",
            "--out",
            path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("# aborted:"));
}
