//! End-to-end runs of the `mrt` binary.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mrt::output::header_value;

fn table() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/table.toml")
}

fn mrt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrt")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

// table config with extra TOML appended to the named sections
fn config_with(dir: &Path, name: &str, extra: &[(&str, &str)]) -> PathBuf {
    let mut text = std::fs::read_to_string(table()).unwrap();
    for (section, lines) in extra {
        let head = format!("[{section}]\n");
        let at = text.find(&head).expect("section exists") + head.len();
        text.insert_str(at, &format!("{lines}\n"));
    }
    // later keys would clash with the inserted ones
    let mut seen = std::collections::HashSet::new();
    let mut section = String::new();
    let text: String = text
        .lines()
        .filter(|l| {
            if l.starts_with('[') {
                section = l.to_string();
                return true;
            }
            match l.split_once('=') {
                Some((k, _)) if !l.trim_start().starts_with('#') => seen.insert(format!("{section}{}", k.trim())),
                _ => true,
            }
        })
        .map(|l| format!("{l}\n"))
        .collect();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let header: Vec<&str> = text.lines().find(|l| !l.starts_with('#')).unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows(text).iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "c.toml", &[("sweep", "start_mphi0 = 2.0\nstop_mphi0 = 2.1\nstep_mphi0 = 0.05")]);
    let c = cfg.to_str().unwrap();
    for cmd in ["levels", "sweep", "spectra"] {
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        for out in [&a, &b] {
            stdout(&mrt(&[cmd, "--config", c, "--out", out.to_str().unwrap()]));
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{cmd}");
    }
}

#[test]
fn empty_bias_range_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "c.toml", &[("sweep", "start_mphi0 = 1.0\nstop_mphi0 = 0.5")]);
    let text = stdout(&mrt(&["sweep", "--config", cfg.to_str().unwrap()]));
    assert!(rows(&text).is_empty());
    assert!(text.contains("flux_mphi0,gamma0_per_us,gamma_01_per_us,gamma_03_per_us,gamma_05_per_us\n"));
}

#[test]
fn zero_t_max_gives_the_initial_row() {
    let text = stdout(&mrt(&["dynamics", "--config", table().to_str().unwrap(), "--t-max", "0"]));
    let r = rows(&text);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0], ["0", "1e0", "0", "0", "0", "0", "0"]);
}

#[test]
fn negative_width_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "c.toml", &[("noise", "mrt_width_mk = -28.0")]);
    let o = mrt(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mrt_width_mk"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "c.toml", &[("squid", "inductance = 250.0")]);
    assert_eq!(mrt(&["levels", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn unknown_pair_lists_the_labels() {
    let o = mrt(&["spectra", "--config", table().to_str().unwrap(), "--pair", "0,9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[0, 1, 2, 3, 4, 5]"));
}

#[test]
fn diagonal_pair_spectrum_vanishes() {
    let text = stdout(&mrt(&["spectra", "--config", table().to_str().unwrap(), "--pair", "3,3"]));
    let s = column(&text, "s_mn");
    assert!(!s.is_empty());
    assert!(s.iter().all(|&v| v == 0.0));
}

#[test]
fn interwell_spectrum_is_the_flux_line_without_charge() {
    let text = stdout(&mrt(&["spectra", "--config", table().to_str().unwrap(), "--pair", "0,1", "--flux-only"]));
    let h = |k: &str| header_value(&text, k).unwrap_or_else(|| panic!("no {k}"));
    let (w, eps, g, d, t) = (
        h("pair.width_ghz"),
        h("pair.reorganization_ghz"),
        h("pair.linewidth_ghz"),
        h("abs_delta_mn_ghz"),
        h("noise.temperature_ghz"),
    );
    let th = |v: f64| if v == 0.0 { 1.0 } else { (v / t) / (1.0 - (-v / t).exp()) };
    let gl = |v: f64| (2.0 * PI).sqrt() / w * (-0.5 * ((v - eps) / w).powi(2)).exp();
    let gh = |v: f64| 2.0 * g * th(v) / (v * v + g * g);
    // trapezoid over the Gaussian, Lorentzian core resolved by a fine step
    let conv = |om: f64| {
        let (lo, hi) = ((om - eps - 14.0 * w).min(-60.0 * g), (om - eps + 14.0 * w).max(60.0 * g));
        let n = 400_000;
        let dv = (hi - lo) / n as f64;
        (0..=n)
            .map(|k| {
                let v = lo + k as f64 * dv;
                let wt = if k == 0 || k == n { 0.5 } else { 1.0 };
                wt * gl(om - v) * gh(v)
            })
            .sum::<f64>()
            * dv
            / (2.0 * PI)
    };
    let om = column(&text, "omega_ghz");
    let s = column(&text, "s_mn");
    assert!(column(&text, "s_q_term").iter().all(|&v| v == 0.0));
    let peak = s.iter().copied().fold(0.0, f64::max);
    for k in (0..om.len()).step_by(om.len() / 40) {
        let want = 0.25 * d * d * conv(om[k]);
        assert!((s[k] - want).abs() < 1e-4 * peak, "ω = {}: {} vs {want}", om[k], s[k]);
    }
}

#[test]
fn symmetric_bias_makes_ground_states_degenerate() {
    let text = stdout(&mrt(&["levels", "--config", table().to_str().unwrap()]));
    let e = column(&text, "energy_ghz");
    let label = column(&text, "label");
    let at = |l: f64| e[label.iter().position(|&x| x == l).unwrap()];
    assert!((at(0.0) - at(1.0)).abs() < 1e-6 * (at(2.0) - at(0.0)), "{} vs {}", at(0.0), at(1.0));
    assert!(header_value(&text, "barrier_height_ghz").unwrap() > 0.0);
}

#[test]
fn too_many_levels_names_the_available_count() {
    let o = mrt(&["levels", "--config", table().to_str().unwrap(), "--channels", "8"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("holds 3 metastable levels"), "{err}");
}

#[test]
fn doubling_phase_points_moves_levels_little() {
    let dir = tempfile::tempdir().unwrap();
    let biased = "flux_bias_mphi0 = 1.5";
    let a = config_with(dir.path(), "a.toml", &[("squid", biased)]);
    let b = config_with(dir.path(), "b.toml", &[("squid", biased), ("grid", "phase_points = 512")]);
    let ea = column(&stdout(&mrt(&["levels", "--config", a.to_str().unwrap()])), "energy_ghz");
    let eb = column(&stdout(&mrt(&["levels", "--config", b.to_str().unwrap()])), "energy_ghz");
    assert_eq!(ea.len(), eb.len());
    for (x, y) in ea.iter().zip(&eb) {
        assert!((x / y - 1.0).abs() < 1e-4, "{x} vs {y}");
    }
}

#[test]
fn header_echoes_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "c.toml", &[("squid", "inductance_ph = 260.0"), ("noise", "temperature_mk = 12.5")]);
    let text = stdout(&mrt(&["levels", "--config", cfg.to_str().unwrap()]));
    let close = |k: &str, v: f64| {
        let got = header_value(&text, k).unwrap();
        assert!((got / v - 1.0).abs() < 1e-12, "{k}: {got}");
    };
    close("squid.inductance_ph", 260.0);
    close("noise.temperature_mk", 12.5);
    close("noise.lambda_mk", 9.6);
    close("squid.cjj_bias_phi0", 0.24);
}

#[test]
fn right_well_growth_matches_sweep_escape_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(
        dir.path(),
        "c.toml",
        &[("squid", "flux_bias_mphi0 = 2.26"), ("sweep", "start_mphi0 = 2.26\nstop_mphi0 = 2.26")],
    );
    let c = cfg.to_str().unwrap();
    let sweep = stdout(&mrt(&["sweep", "--config", c]));
    let g0 = column(&sweep, "gamma0_per_us")[0];
    let dynamics = stdout(&mrt(&["dynamics", "--config", c]));
    let grow = header_value(&dynamics, "right_well_initial_rate_per_us").unwrap();
    assert!((grow / g0 - 1.0).abs() < 1e-4, "{grow} vs {g0}");
    assert!(header_value(&dynamics, "initial_slope_rel_error").unwrap() < 1e-4);
}

#[test]
fn validate_passes_on_the_table_config() {
    let o = mrt(&["validate", "--config", table().to_str().unwrap()]);
    let text = stdout(&o);
    assert!(text.contains("kappa_alpha_0,PASS,2e0,0\n"), "{text}");
    assert!(text.ends_with("# failed = 0\n"));
}
