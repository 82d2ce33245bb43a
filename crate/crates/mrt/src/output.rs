//! CSV with a commented header.
//!
//! Every file starts with `#` lines: the command, the SHA-256 of the resolved
//! configuration, the units and the parameters echoed back after conversion to
//! internal units and out again. Then a CSV header row and the data. Numbers
//! are printed in shortest round-trip form so identical inputs give identical
//! bytes.

use anyhow::Result;

use mrt_core::squid::PhaseGrid;
use mrt_core::units::{to_millikelvin, weber_to_mphi0, FLUX_QUANTUM};

use crate::config::RunConfig;

/// Shortest representation that parses back to the same f64.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        // −0 and 0 print the same
        return "0".into();
    }
    format!("{x:e}")
}

/// A table with comment lines before and after.
#[derive(Debug, Clone, Default)]
pub struct Report {
    header: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<String>,
}

impl Report {
    /// Standard header for `command` run with `cfg`.
    pub fn new(command: &str, cfg: &RunConfig) -> Result<Self> {
        let mut r = Report::default();
        r.comment(format!("mrt {command} {}", env!("CARGO_PKG_VERSION")));
        r.comment(format!("config_sha256 = {}", cfg.hash()));
        r.comment("units: flux mΦ₀; energy and angular frequency GHz (h·GHz, ħ = k_B = 1); rates 1/μs; time μs");
        for line in echo(cfg)? {
            r.comment(line);
        }
        Ok(r)
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.header.push(line.into());
    }

    pub fn set_columns<S: AsRef<str>>(&mut self, names: &[S]) {
        self.columns = names.iter().map(|s| s.as_ref().to_owned()).collect();
    }

    pub fn row(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| num(v)).collect());
    }

    pub fn row_fields(&mut self, fields: Vec<String>) {
        self.rows.push(fields);
    }

    pub fn footer(&mut self, line: impl Into<String>) {
        self.footer.push(line.into());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> Result<String> {
        let mut out = String::new();
        for h in &self.header {
            out.push_str("# ");
            out.push_str(h);
            out.push('\n');
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        if !self.columns.is_empty() {
            w.write_record(&self.columns)?;
        }
        for r in &self.rows {
            w.write_record(r)?;
        }
        out.push_str(std::str::from_utf8(&w.into_inner()?)?);
        for f in &self.footer {
            out.push_str("# ");
            out.push_str(f);
            out.push('\n');
        }
        Ok(out)
    }
}

// `key = value` lines after the SI → internal → SI round trip.
fn echo(cfg: &RunConfig) -> Result<Vec<String>> {
    let p = cfg.squid_params();
    let n = cfg.noise_params()?;
    let e = p.energies()?;
    let g: PhaseGrid = cfg.phase_grid();
    let o = &cfg.options;
    let kv = |k: &str, v: f64| format!("{k} = {}", num(v));
    let mut v = vec![
        kv("squid.inductance_ph", p.inductance * 1e12),
        kv("squid.cjj_inductance_ph", p.cjj_inductance * 1e12),
        kv("squid.capacitance_ff", p.capacitance * 1e15),
        kv("squid.critical_current_ua", p.critical_current * 1e6),
        kv("squid.cjj_bias_phi0", p.cjj_bias / FLUX_QUANTUM),
        kv("squid.flux_bias_mphi0", weber_to_mphi0(p.flux_bias)),
        kv("derived.charging_energy_ghz", e.charging),
        kv("derived.inductive_energy_ghz", e.inductive),
        kv("derived.josephson_energy_ghz", e.josephson),
        kv("noise.temperature_mk", to_millikelvin(n.temperature())),
        kv("noise.mrt_width_mk", to_millikelvin(n.low.mrt_width)),
        kv("noise.lambda_mk", to_millikelvin(n.high.lambda)),
        kv("noise.gamma_phi", n.high.gamma_phi_power(p.inductance)),
        kv("noise.alpha", n.high.alpha),
        kv("noise.charge_loss_tangent", n.charge_loss_tangent),
        kv("noise.temperature_ghz", n.temperature()),
        kv("grid.phase_points", g.n_points as f64),
        kv("grid.phase_min", g.min_phase),
        kv("grid.phase_max", g.max_phase),
    ];
    if let Some(h) = cfg.grid.frequency_spacing_ghz {
        v.push(kv("grid.frequency_spacing_ghz", h));
    }
    if let Some(h) = cfg.grid.frequency_half_span_ghz {
        v.push(kv("grid.frequency_half_span_ghz", h));
    }
    v.push(kv("sweep.start_mphi0", cfg.sweep.start_mphi0));
    v.push(kv("sweep.stop_mphi0", cfg.sweep.stop_mphi0));
    v.push(kv("sweep.step_mphi0", cfg.sweep.step_mphi0));
    v.push(format!(
        "options: flux_only = {}, shifts = {}, channels = {}, refine = {}",
        o.flux_only, o.shifts, o.channels, o.refine
    ));
    Ok(v)
}

/// Reads back `key = value` header lines, for tests and tooling.
pub fn header_value(text: &str, key: &str) -> Option<f64> {
    text.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(" = "))
        .find(|(k, _)| *k == key)
        .and_then(|(_, v)| v.trim().parse().ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -2.5e-300, 1.0 / 3.0, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(-0.0), "0");
    }

    #[test]
    fn header_echo_round_trips() {
        let cfg = RunConfig::default();
        let r = Report::new("levels", &cfg).unwrap().render().unwrap();
        let check = |k: &str, v: f64| {
            let got = header_value(&r, k).unwrap();
            assert!(((got - v) / v).abs() < 1e-12, "{k}: {got} vs {v}");
        };
        check("squid.inductance_ph", 250.0);
        check("squid.capacitance_ff", 110.0);
        check("squid.critical_current_ua", 2.3);
        check("squid.cjj_bias_phi0", 0.24);
        check("noise.temperature_mk", 10.0);
        check("noise.mrt_width_mk", 28.0);
        check("noise.lambda_mk", 9.6);
        assert!(r.contains(&format!("config_sha256 = {}", cfg.hash())));
    }

    #[test]
    fn render_layout() {
        let mut r = Report::default();
        r.comment("a");
        r.set_columns(&["x", "y"]);
        r.row(&[1.0, 0.5]);
        r.footer("z = 1");
        assert_eq!(r.render().unwrap(), "# a\nx,y\n1e0,5e-1\n# z = 1\n");
    }

    proptest::proptest! {
        #[test]
        fn any_finite_number_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            proptest::prop_assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
