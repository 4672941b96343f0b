use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn adiabat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adiabat"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

const MATHIEU: &str = r#"
[potential]
mean = 0.0
cos_coeffs = [2.0]

[profile]
mu = 0.0
nu = -2.1
bumps = [[4.2, 6.0, 2.0]]

[solver]
epsilon = 0.1
window = [11.7, 12.3]

[bands]
e_max = 170.0
"#;

#[test]
fn mathieu_bands_match_the_hill_oracle() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), MATHIEU).unwrap();
    let o = adiabat(dir.path(), &["--config", "run.toml", "bands"]);
    assert!(o.status.success(), "{}", text(&o));
    let bands = csv_rows(&dir.path().join("out/bands.csv"));
    let edges: Vec<f64> =
        bands.iter().flat_map(|r| [r[1].parse::<f64>().unwrap(), r[2].parse::<f64>().unwrap()]).take(8).collect();
    assert_eq!(edges.len(), 8);
    assert!(bands[..3].iter().all(|r| r[4] == "true"));
    let o = adiabat(dir.path(), &["--config", "run.toml", "--out", "oracle_out", "--epsilon", "0.12", "oracle"]);
    assert!(o.status.success(), "{}", text(&o));
    let hill = csv_rows(&dir.path().join("oracle_out/hill_edges.csv"));
    for (e, h) in edges.iter().zip(&hill) {
        let h: f64 = h[1].parse().unwrap();
        assert!((e - h).abs() <= 1e-6 * e.abs().max(1.0), "{e} vs {h}");
    }
    assert!(csv_rows(&dir.path().join("oracle_out/oracle.csv")).iter().all(|r| r.len() == 4));
}

#[test]
fn free_potential_warns_about_closed_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[potential]\nmean = 0.0\ntest_mode = true\n[profile]\nmu = 0.0\nnu = -1.0\n[solver]\nepsilon = 0.1\nwindow = [0.3, 0.7]\n";
    fs::write(dir.path().join("free.toml"), cfg).unwrap();
    let o = adiabat(dir.path(), &["--config", "free.toml", "bands"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("(O)"), "{}", text(&o));
    let rows = csv_rows(&dir.path().join("out/bands.csv"));
    assert!(rows.iter().all(|r| r[4] != "true"));
}

#[test]
fn malformed_configuration_exits_with_2_and_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), MATHIEU.replace("window = [11.7, 12.3]", "window = [11.7, 12.3")).unwrap();
    let o = adiabat(dir.path(), &["--config", "bad.toml", "bands"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("line"), "{}", text(&o));
    let o = adiabat(dir.path(), &["--fixture", "h6_barrier", "--epsilon", "0.9", "resonances"]);
    assert_eq!(o.status.code(), Some(2));
    let o = adiabat(dir.path(), &["--fixture", "nope", "bands"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn resonance_table_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let o = adiabat(dir.path(), &["--fixture", "h6_barrier", "resonances"]);
    assert!(o.status.success(), "{}", text(&o));
    let first = fs::read(dir.path().join("out/resonances.csv")).unwrap();
    let rows = csv_rows(&dir.path().join("out/resonances.csv"));
    let out = text(&o);
    let count: i64 = out.split("Φ₀ count ").nth(1).unwrap().split(')').next().unwrap().parse().unwrap();
    assert!((rows.len() as i64 - count).abs() <= 1);
    assert!(rows.iter().all(|r| r.len() == 7 && r[2].parse::<f64>().unwrap() > 0.0));
    let o = adiabat(dir.path(), &["--fixture", "h6_barrier", "resonances"]);
    assert!(o.status.success());
    assert_eq!(fs::read(dir.path().join("out/resonances.csv")).unwrap(), first);
}

#[test]
fn h5_gives_an_empty_table_and_general_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = adiabat(dir.path(), &["--fixture", "h5_step", "resonances"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("resonance-free"));
    assert!(csv_rows(&dir.path().join("out/resonances.csv")).is_empty());
    let general = "[potential]\ncos_coeffs = [2.0]\nmean = 0.0\n[profile]\nmu = 1.0\nnu = 0.0\nbumps = [[-4.0, -15.0, 3.0], [-4.0, 15.0, 3.0]]\n[solver]\nepsilon = 0.1\nwindow = [-0.1, 0.1]\n";
    fs::write(dir.path().join("general.toml"), general).unwrap();
    let o = adiabat(dir.path(), &["--config", "general.toml", "resonances"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("unsupported"), "{}", text(&o));
}

#[test]
fn zeta_sweep_is_periodic() {
    let dir = tempfile::tempdir().unwrap();
    let o = adiabat(dir.path(), &["--fixture", "drift_step", "--epsilon", "0.05", "--zeta", "0.2", "resonances", "--sweep-zeta", "2"]);
    assert!(o.status.success(), "{}", text(&o));
    let energies = |name: &str| -> Vec<(i64, f64)> {
        csv_rows(&dir.path().join("out").join(name)).iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect()
    };
    let (a, b) = (energies("resonances_zeta_000.csv"), energies("resonances_zeta_002.csv"));
    let mut matched = 0;
    for (l, e) in &b {
        // δκ = 1: E^l(ζ + ε) = E^{l+1}(ζ)
        if let Some((_, f)) = a.iter().find(|(k, _)| *k == l + 1) {
            assert!((e - f).abs() < 1e-10);
            matched += 1;
        }
    }
    assert!(matched >= 3);
}

#[test]
fn window_actions_and_portrait_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(adiabat(dir.path(), &["--fixture", "h6_barrier", "window", "--energy", "12"]).status.success());
    let w = fs::read_to_string(dir.path().join("out/window.toml")).unwrap();
    assert!(w.contains("classification = \"H6\""));
    assert!(adiabat(dir.path(), &["--fixture", "h6_barrier", "actions", "--points", "4"]).status.success());
    let rows = csv_rows(&dir.path().join("out/actions.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[2] == "0" && r[3] == "inf"));
    assert!(adiabat(dir.path(), &["--fixture", "h6_barrier", "portrait"]).status.success());
    let rows = csv_rows(&dir.path().join("out/portrait.csv"));
    assert!(rows.iter().any(|r| r[1].is_empty()) && rows.iter().any(|r| !r[1].is_empty()));
}

#[test]
fn verify_bound_states_and_undersized_box() {
    let dir = tempfile::tempdir().unwrap();
    let o = adiabat(dir.path(), &["--fixture", "bound_well", "--epsilon", "0.08", "verify"]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("PASS spacing"));
    let small = "[potential]\ncos_coeffs = [2.0]\nmean = 0.0\n[profile]\nmu = 1.0\nnu = 0.0\nbumps = [[-4.0, 0.0, 3.0]]\n[solver]\nepsilon = 0.08\nwindow = [-0.6, 0.6]\n[oracle]\nhalf_length = 40.0\npoints_per_period = 32\ncap_strength = 0.0\ncap_onset = 0.7\nauto_fit = false\n";
    fs::write(dir.path().join("small.toml"), small).unwrap();
    let o = adiabat(dir.path(), &["--config", "small.toml", "verify"]);
    assert_eq!(o.status.code(), Some(2));
    let t = text(&o);
    assert!(t.contains("FAIL") && t.contains("does not fit"), "{t}");
}
