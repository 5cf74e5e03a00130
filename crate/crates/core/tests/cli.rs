use std::path::Path;
use std::process::{Command, Output};

use lfmhd::cli::checkpoint::write_checkpoint;
use lfmhd::geometry::FlowMap;
use lfmhd::grid::{GridSpec, ScalarField, VectorField};
use lfmhd::linear_step::Trajectory;
use lfmhd::state::FlowState;

fn lfmhd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfmhd")).args(args).current_dir(cwd).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = "grid.n1 = 8\ngrid.n2 = 8\ngrid.n3 = 8\nscheme.dt = 0.01\nscheme.t_end = 0.04\n";

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn zero_data_run_has_static_dynamics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("{SMALL}data.amplitude = 0\nphysics.pressure_slope = 0\nphysics.c0 = 0\noutput.directory = out\n"),
    );
    let out = lfmhd(&["run", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let energy = std::fs::read_to_string(dir.path().join("out/energy.csv")).unwrap();
    assert!(energy.starts_with("# file = energy\n# time_order = 2\n"));
    let rows = data_rows(&energy);
    assert_eq!(rows.len(), 5);
    for r in &rows {
        // fluid, heat, wave, physical energy, dissipated.
        for c in [3, 4, 5, 7, 8] {
            assert_eq!(r[c], 0.0, "{r:?}");
        }
    }
}

#[test]
fn runs_are_byte_identical_and_match_energy_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}data.preset = magnetic-tube\noutput.checkpoint = true\n"));
    for sub in ["a", "b"] {
        let out = lfmhd(&["run", &cfg, "--set", &format!("output.directory={sub}")], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["energy.csv", "iteration.csv", "residuals.csv", "checkpoint.bin"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between identical runs");
    }
    let out = lfmhd(&["energy-report", "a/checkpoint.bin", "--output", "rep"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = std::fs::read_to_string(dir.path().join("a/energy.csv")).unwrap();
    let rep = std::fs::read_to_string(dir.path().join("rep/energy.csv")).unwrap();
    assert_eq!(data_rows(&run), data_rows(&rep));
}

#[test]
fn snapshot_stride_thins_rows_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}output.snapshot_stride = 3\noutput.directory = out\n"));
    let out = lfmhd(&["run", &cfg, "--set", "scheme.t_end=0.07"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&std::fs::read_to_string(dir.path().join("out/energy.csv")).unwrap());
    let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(t.len(), 4);
    assert!((t[1] - 0.03).abs() < 1e-12 && (t[3] - 0.07).abs() < 1e-12, "{t:?}");
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);

    let out = lfmhd(&["run", &cfg, "--set", "scheme.kapa=0.1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scheme.kapa"));

    let out = lfmhd(&["run", &cfg, "--set", "scheme.dt=0.05", "--set", "scheme.t_end=0.15"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failure [cfl]"));

    let out = lfmhd(&["picard-trace", &cfg, "--set", "scheme.t_end=12.8"], dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-contraction"));

    // A folded flow map stored in a checkpoint.
    let spec = GridSpec::new(8, 8, 8).unwrap();
    let dims = spec.dims();
    let mut d = VectorField::zeros(dims);
    for k in 4..dims.nz {
        d[2].plane_mut(k).fill(-(k as f64 - 4.0) / 8.0);
    }
    let snapshots = (0..4)
        .map(|j| {
            let mut s = FlowState::trivial(ScalarField::constant(dims, 1.0));
            s.t = 0.01 * j as f64;
            s.eta = FlowMap::from_displacement(d.clone());
            s
        })
        .collect();
    write_checkpoint(&dir.path().join("folded.bin"), &Trajectory { grid: spec, dt: 0.01, kappa: 0.1, snapshots })
        .unwrap();
    let out = lfmhd(&["energy-report", "folded.bin"], dir.path());
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_and_lemma_commands_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "grid.n1 = 16\ngrid.n2 = 16\ngrid.n3 = 16\nscheme.dt = 0.005\nscheme.t_end = 0.05\n\
         scheme.kappa_list = 0.2, 0.1, 0.05\noutput.directory = out\n",
    );
    let out = lfmhd(&["kappa-sweep", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert!(sweep.contains("# deltas_decreasing = true"));
    let deltas: Vec<f64> = data_rows(&sweep.replace("nan", "NaN")).iter().map(|r| r[5]).collect();
    assert!(deltas[1] < deltas[0] && deltas[2].is_nan(), "{deltas:?}");

    let out = lfmhd(&["check-lemmas", "--sizes", "8,16", "--output", "lem"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lemmas = std::fs::read_to_string(dir.path().join("lem/lemmas.csv")).unwrap();
    assert!(lemmas.contains("lemma[name],n[points],order[sobolev],min_ratio[1],max_ratio[1]"));
    assert!(lemmas.lines().any(|l| l.starts_with("hodge,16,")));
}
