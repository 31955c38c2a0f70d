//! End-to-end tests of the CLI surface: config parsing through the binary,
//! CSV and snapshot formats, determinism, and exit codes.

use cfm_maxwell::cli::{csv_text, parse_config, run_convergence, run_single, write_snapshot};
use cfm_maxwell::fdtd::{exact_fields, run, RunOptions, SchemeConfig};
use cfm_maxwell::geometry::LevelSet;
use cfm_maxwell::grid::{classify_nodes, FieldSet, GridSpec};
use cfm_maxwell::problems::{make_problem, Problem};
use std::path::PathBuf;
use std::process::Command;

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cfm_test_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cfm-maxwell"))
}

#[test]
fn sweep_csv_structure_and_determinism() {
    let dir = tmp_dir("csv");
    let mut cfg = parse_config("problem = circle\norder = 2\nh = 1/10, 1/14\n").unwrap();
    cfg.out_dir = dir.clone();
    let (report, path) = run_convergence(&cfg).unwrap();
    assert_eq!(report.rows.len(), 2);
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "h,dt,Linf_Hx,L1_Hx,Linf_Hy,L1_Hy,Linf_Ez,L1_Ez,Linf_divH,L1_divH"
    );
    assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 3); // header + 2 rows
    assert!(lines.iter().any(|l| l.starts_with("# fitted orders")));
    // identical config => byte-identical CSV
    let (report2, _) = run_convergence(&cfg).unwrap();
    assert_eq!(text, csv_text(&report2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn snapshot_counts_roundtrip_and_initial_data() {
    let dir = tmp_dir("snap");
    let grid = GridSpec::unit_square(2);
    let problem = make_problem("circle").unwrap();
    let masks = classify_nodes(&grid, &problem.level_set, 2);
    let fields = exact_fields(&problem, &grid, &masks, 0.0);
    let path = dir.join("t0.snap");
    write_snapshot(&fields, &grid, "circle", 2, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.iter().filter(|l| l.starts_with("Hx ")).count(), 4);
    assert_eq!(data.iter().filter(|l| l.starts_with("Hy ")).count(), 4);
    assert_eq!(data.iter().filter(|l| l.starts_with("Ez ")).count(), 4);
    assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 5);
    // 17-significant-digit text round-trips bit-exactly, and t = 0 data
    // equals the exact initial condition
    let mut seen = 0;
    for line in data {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let (fam, x, y, v) = (
            parts[0],
            parts[3].parse::<f64>().unwrap(),
            parts[4].parse::<f64>().unwrap(),
            parts[5].parse::<f64>().unwrap(),
        );
        let family = match fam {
            "Hx" => cfm_maxwell::grid::Family::Hx,
            "Hy" => cfm_maxwell::grid::Family::Hy,
            _ => cfm_maxwell::grid::Family::Ez,
        };
        let side = problem.level_set.side_of(cfm_maxwell::geometry::Vec2::new(x, y));
        let want = problem.exact(family, side, x, y, 0.0);
        assert!(v.to_bits() == want.to_bits(), "{fam} at ({x},{y}): {v} vs {want}");
        seen += 1;
    }
    assert_eq!(seen, 12);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn no_interface_run_ignores_corrections_toggle() {
    // with the interface outside the domain the corrected set is empty, so
    // corrections on and off must give identical errors
    let circle = make_problem("circle").unwrap();
    let problem = Problem {
        id: "shifted".into(),
        level_set: LevelSet::circle(5.0, 5.0, 0.25),
        physics: circle.physics,
        plus: circle.plus.clone(),
        minus: circle.minus.clone(),
    };
    let grid = GridSpec::unit_square(12);
    let scheme = SchemeConfig {
        order: 4,
        dt: grid.h() / 2.0,
        physics: problem.physics,
        degree: 3,
    };
    let on = run(
        &problem,
        &grid,
        &scheme,
        0.5,
        RunOptions {
            corrections: true,
            track_divergence: false,
            snapshots: vec![],
        },
    )
    .unwrap();
    let off = run(
        &problem,
        &grid,
        &scheme,
        0.5,
        RunOptions {
            corrections: false,
            track_divergence: false,
            snapshots: vec![],
        },
    )
    .unwrap();
    assert_eq!(on.n_corrected, 0);
    assert_eq!(on.fields.ez, off.fields.ez);
    assert_eq!(on.linf, off.linf);
}

#[test]
fn binary_exit_codes() {
    let dir = tmp_dir("exit");
    // missing config: 2
    let st = bin().args(["run", "--config", "/nonexistent/x.cfg"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    // bad usage: 2
    let st = bin().arg("frobnicate").output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    // config with an unknown key: 2
    let bad = dir.join("bad.cfg");
    std::fs::write(&bad, "problem = circle\nwidgets = 3\n").unwrap();
    let st = bin().args(["run", "--config", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    // unknown problem id: 2
    let bad2 = dir.join("bad2.cfg");
    std::fs::write(&bad2, "problem = torus\nh = 1/10\n").unwrap();
    let st = bin().args(["sweep", "--config", bad2.to_str().unwrap()]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    // wholesome run: 0, and CFM_OUT_DIR overrides the output directory
    let good = dir.join("good.cfg");
    std::fs::write(
        &good,
        "problem = circle\norder = 2\nh = 1/10\nt_final = 0.1\nsnapshots = 0.1\n",
    )
    .unwrap();
    let out_override = dir.join("override_out");
    let st = bin()
        .args(["run", "--config", good.to_str().unwrap()])
        .env("CFM_OUT_DIR", out_override.to_str().unwrap())
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    assert!(out_override.join("circle_order2_n10.csv").exists());
    assert!(out_override.read_dir().unwrap().any(|e| {
        e.unwrap().file_name().to_string_lossy().ends_with(".snap")
    }));
    // check subcommand: 0
    let st = bin().arg("check").output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn run_single_writes_snapshot_at_requested_time() {
    let dir = tmp_dir("single");
    let mut cfg = parse_config("problem = circle\norder = 2\nh = 1/10\nsnapshots = 0.25\n").unwrap();
    cfg.out_dir = dir.clone();
    cfg.t_final = 0.5;
    let (_, files) = run_single(&cfg).unwrap();
    let snap = files.iter().find(|f| f.extension().unwrap() == "snap").unwrap();
    let text = std::fs::read_to_string(snap).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# t = 2.5")));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn fieldset_snapshot_row_count_matches_grid() {
    // write_snapshot emits nx*ny rows per family regardless of field values
    let grid = GridSpec::unit_square(3);
    let fields = FieldSet::zeros(&grid, 0.0);
    let dir = tmp_dir("rows");
    let path = dir.join("z.snap");
    write_snapshot(&fields, &grid, "circle", 4, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 27);
    let _ = std::fs::remove_dir_all(&dir);
}
