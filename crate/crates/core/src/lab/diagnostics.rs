use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::functionals::FunctionalReport;
use crate::imethod::{energy_en, MultiplierProfile};
use crate::modulation::{fit_orthogonal, fit_translation, xdot0_estimate};
use crate::spectral::tail_fraction;
use crate::{Error, RealField, Result};

/// One time sample of every tracked quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub l2_squared: f64,
    pub hamiltonian: f64,
    pub lyapunov: f64,
    /// `E_N = L(I u)`, one entry per configured N.
    pub energies: Vec<f64>,
    pub dist_hs: f64,
    pub dist_h1: f64,
    pub center: f64,
    pub xdot0: f64,
    pub tail_fraction: f64,
}

/// Computes records for a fixed smoothing exponent and list of cutoffs.
///
/// The center and modulation speed come from the orthogonal fit with the first cutoff; if
/// that root solve fails the translation fit is used instead.
#[derive(Debug, Clone)]
pub struct Diagnostician {
    s: f64,
    profiles: Vec<MultiplierProfile>,
}

impl Diagnostician {
    pub fn new(s: f64, n_list: &[f64]) -> Result<Self> {
        if n_list.is_empty() {
            return Err(Error::Config("at least one N is required".into()));
        }
        let profiles = n_list.iter().map(|&n| MultiplierProfile::new(s, n)).collect::<Result<_>>()?;
        Ok(Self { s, profiles })
    }

    pub fn profiles(&self) -> &[MultiplierProfile] {
        &self.profiles
    }

    pub fn energies(&self, u: &RealField) -> Vec<f64> {
        self.profiles.iter().map(|p| energy_en(u, p)).collect()
    }

    pub fn record(&self, t: f64, u: &RealField) -> Result<DiagnosticsRecord> {
        let report = FunctionalReport::of(u);
        let fit_hs = fit_translation(u, self.s)?;
        let fit_h1 = fit_translation(u, 1.0)?;
        let profile = &self.profiles[0];
        let fit = match fit_orthogonal(u, profile) {
            Ok(fit) => fit,
            Err(err) => {
                log::warn!("orthogonal fit failed at t = {t}: {err}; using the translation fit");
                fit_h1.clone()
            }
        };
        let xdot0 = xdot0_estimate(u, &fit, profile)?;
        Ok(DiagnosticsRecord {
            t,
            mass: report.mass,
            l2_squared: report.l2_squared,
            hamiltonian: report.hamiltonian,
            lyapunov: report.lyapunov,
            energies: self.energies(u),
            dist_hs: fit_hs.distance,
            dist_h1: fit_h1.distance,
            center: fit.center,
            xdot0,
            tail_fraction: tail_fraction(u),
        })
    }
}

pub fn csv_header(n_list: &[f64]) -> Vec<String> {
    let mut header: Vec<String> =
        ["t", "mass", "l2_squared", "hamiltonian", "lyapunov"].iter().map(|s| s.to_string()).collect();
    header.extend(n_list.iter().map(|n| format!("E_N_{n}")));
    header.extend(["dist_Hs", "dist_H1", "center", "xdot0", "tail_fraction"].iter().map(|s| s.to_string()));
    header
}

/// Writes records with shortest round-trip float formatting.
pub fn write_csv<W: Write>(writer: W, n_list: &[f64], records: &[DiagnosticsRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(csv_header(n_list))?;
    for r in records {
        if r.energies.len() != n_list.len() {
            return Err(Error::InvalidInput("record and N-list lengths differ".into()));
        }
        let mut row: Vec<String> = [r.t, r.mass, r.l2_squared, r.hamiltonian, r.lyapunov]
            .iter()
            .map(|v| format!("{v:?}"))
            .collect();
        row.extend(r.energies.iter().map(|v| format!("{v:?}")));
        row.extend([r.dist_hs, r.dist_h1, r.center, r.xdot0, r.tail_fraction].iter().map(|v| format!("{v:?}")));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a diagnostics CSV back into its N-list and records.
pub fn read_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<DiagnosticsRecord>)> {
    let mut input = csv::Reader::from_reader(reader);
    let header = input.headers()?.clone();
    let n_list = header
        .iter()
        .filter_map(|name| name.strip_prefix("E_N_"))
        .map(|n| n.parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad column E_N_{n}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let expected = csv_header(&n_list);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::InvalidInput("unexpected diagnostics header".into()));
    }
    let m = n_list.len();
    let mut records = Vec::new();
    for row in input.records() {
        let row = row?;
        let values = row
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad value {v:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        records.push(DiagnosticsRecord {
            t: values[0],
            mass: values[1],
            l2_squared: values[2],
            hamiltonian: values[3],
            lyapunov: values[4],
            energies: values[5..5 + m].to_vec(),
            dist_hs: values[5 + m],
            dist_h1: values[6 + m],
            center: values[7 + m],
            xdot0: values[8 + m],
            tail_fraction: values[9 + m],
        });
    }
    Ok((n_list, records))
}
