//! Embedded presets that regenerate the data behind each figure.

use anyhow::{bail, Result};
use click_homodyne::witness::{minor_determinant, normally_ordered_variance, MomentMatrix};
use click_homodyne::{DetectorConfig, Execution, Signal};
use num_complex::Complex64;

use crate::commands::{build_signal, clicks_at, moments_at, noisy_at, over_grid};
use crate::config::{NoiseSection, PhaseGrid, ScenarioConfig};
use crate::output::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    /// Difference click statistics of a coherent signal against the LO phase.
    Fig1b,
    /// First moment of coherent signals with alpha = r = 2, 4, 8.
    Fig1c,
    /// First moment of |0:n> for n = 1, 3, 5, with normalizations.
    Fig2,
    /// Squeezed and anti-squeezed variance against xi.
    Fig3,
    /// Variance and the {0,1,2} minor of |0:2> over efficiency and phase.
    Fig4,
    /// Variance of squeezed vacuum under phase, amplitude and combined LO noise.
    Fig5,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1b => "fig1b",
            Figure::Fig1c => "fig1c",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }

    fn preset(self) -> &'static str {
        match self {
            Figure::Fig1b => include_str!("../presets/fig1b.toml"),
            Figure::Fig1c => include_str!("../presets/fig1c.toml"),
            Figure::Fig2 => include_str!("../presets/fig2.toml"),
            Figure::Fig3 => include_str!("../presets/fig3.toml"),
            Figure::Fig4 => include_str!("../presets/fig4.toml"),
            Figure::Fig5 => include_str!("../presets/fig5.toml"),
        }
    }

    /// Whether `--phase-grid` applies; fig3 sweeps `xi` at two fixed phases.
    pub fn uses_phase_grid(self) -> bool {
        self != Figure::Fig3
    }

    pub fn config(self, phase_grid: Option<PhaseGrid>) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::parse(self.preset(), self.name())?;
        if let Some(grid) = phase_grid {
            if !self.uses_phase_grid() {
                bail!(
                    "{} sweeps xi at phi = 0 and pi/2; --phase-grid does not apply",
                    self.name()
                );
            }
            cfg.lo.phase_grid = grid;
        }
        Ok(cfg)
    }

    /// The swept parameters, recorded next to the base scenario.
    pub fn sweep(self) -> &'static str {
        match self {
            Figure::Fig1b => "phase grid only",
            Figure::Fig1c => "alpha = r in {2, 4, 8}",
            Figure::Fig2 => "n in {1, 3, 5}",
            Figure::Fig3 => "xi = 0.1, 0.2, ..., 3.0 at phi in {0, pi/2}",
            Figure::Fig4 => "eta = 0.1, 0.2, ..., 1.0",
            Figure::Fig5 => "(sigma_x, sigma_p) in {(0, 0), (0, 1.2), (2, 0), (2, 1.2)}",
        }
    }

    pub fn run(self, cfg: &ScenarioConfig) -> Result<Vec<Table>> {
        match self {
            Figure::Fig1b => fig1b(cfg),
            Figure::Fig1c => fig1c(cfg),
            Figure::Fig2 => fig2(cfg),
            Figure::Fig3 => fig3(cfg),
            Figure::Fig4 => fig4(cfg),
            Figure::Fig5 => fig5(cfg),
        }
    }
}

fn fig1b(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let signal = build_signal(cfg)?;
    let results = over_grid(cfg, |phi| clicks_at(cfg, &signal, phi))?;
    let mut table = Table::new("difference", &["phi", "dk", "c_dk"]);
    for (phi, c) in &results {
        for (dk, p) in click_homodyne::detector::difference_distribution(c).iter() {
            table.push(vec![(*phi).into(), dk.into(), p.into()]);
        }
    }
    Ok(vec![table])
}

/// One first-moment column per variant of the base scenario.
fn first_moment_columns(variants: &[ScenarioConfig]) -> Result<Vec<Vec<f64>>> {
    variants
        .iter()
        .map(|v| {
            let signal = build_signal(v)?;
            Ok(
                over_grid(v, |phi| Ok(moments_at(v, &signal, phi, 1)?.moments()[1]))?
                    .into_iter()
                    .map(|(_, x)| x)
                    .collect(),
            )
        })
        .collect()
}

fn fig1c(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let rs = [2.0, 4.0, 8.0];
    let variants: Vec<ScenarioConfig> = rs
        .iter()
        .map(|&r| {
            let mut v = cfg.clone();
            v.signal = Signal::coherent(Complex64::new(r, 0.0));
            v.lo.r = r;
            v
        })
        .collect();
    let columns = first_moment_columns(&variants)?;
    let mut table = Table::new("quadrature", &["phi", "X_r2", "X_r4", "X_r8"]);
    for (i, phi) in cfg.lo.phase_grid.points().into_iter().enumerate() {
        let mut row: Vec<Cell> = vec![phi.into()];
        row.extend(columns.iter().map(|c| Cell::from(c[i])));
        table.push(row);
    }
    Ok(vec![table])
}

fn fig2(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let ns = [1usize, 3, 5];
    let variants: Vec<ScenarioConfig> = ns
        .iter()
        .map(|&n| {
            let mut v = cfg.clone();
            v.signal = Signal::Superposition { n };
            v
        })
        .collect();
    let columns = first_moment_columns(&variants)?;
    let mut at_zero = Vec::new();
    for v in &variants {
        let signal = build_signal(v)?;
        at_zero.push(moments_at(v, &signal, 0.0, 1)?.moments()[1]);
    }
    let mut table = Table::new(
        "quadrature",
        &[
            "phi",
            "X_n1",
            "X_n3",
            "X_n5",
            "scaled_n1",
            "scaled_n3",
            "scaled_n5",
        ],
    );
    for (i, phi) in cfg.lo.phase_grid.points().into_iter().enumerate() {
        let mut row: Vec<Cell> = vec![phi.into()];
        row.extend(columns.iter().map(|c| Cell::from(c[i])));
        row.extend(
            columns
                .iter()
                .zip(&at_zero)
                .map(|(c, x0)| Cell::from(c[i] / x0.abs())),
        );
        table.push(row);
    }
    let mut norm = Table::new("normalization", &["n", "X_at_0", "log10_abs_X_at_0"]);
    for (n, x0) in ns.iter().zip(&at_zero) {
        norm.push(vec![(*n).into(), (*x0).into(), x0.abs().log10().into()]);
    }
    Ok(vec![table, norm])
}

fn fig3(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let xis: Vec<f64> = (1..=30).map(|i| i as f64 / 10.0).collect();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let rows = Execution::Parallel.try_map(&xis, |&xi| {
        let mut v = cfg.clone();
        v.signal = Signal::Squeezed { xi };
        let signal = build_signal(&v)?;
        let var = |phi| -> Result<f64> {
            Ok(normally_ordered_variance(&moments_at(
                &v, &signal, phi, 2,
            )?)?)
        };
        Ok::<_, anyhow::Error>((xi, var(0.0)?, var(half_pi)?))
    })?;
    let mut table = Table::new("variance", &["xi", "variance_phi0", "variance_phi_pi2"]);
    for (xi, squeezed, anti) in rows {
        table.push(vec![xi.into(), squeezed.into(), anti.into()]);
    }
    Ok(vec![table])
}

fn fig4(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let mut table = Table::new("minor", &["eta", "phi", "variance", "det_0_1_2"]);
    let signal = build_signal(cfg)?;
    for i in 1..=10 {
        let eta = i as f64 / 10.0;
        let mut v = cfg.clone();
        v.detector = DetectorConfig::new(cfg.detector.n_apds(), eta, cfg.detector.nu())?;
        let results = over_grid(&v, |phi| {
            let ms = moments_at(&v, &signal, phi, 4)?;
            let det = minor_determinant(&MomentMatrix::with_dim(&ms, 3)?, &[0, 1, 2])?.determinant;
            Ok((normally_ordered_variance(&ms)?, det))
        })?;
        for (phi, (var, det)) in results {
            table.push(vec![eta.into(), phi.into(), var.into(), det.into()]);
        }
    }
    Ok(vec![table])
}

fn fig5(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let full = cfg.noise.unwrap_or(NoiseSection {
        sigma_x: 0.0,
        sigma_p: 0.0,
    });
    let curves = [
        ("noiseless", 0.0, 0.0),
        ("phase_noise", 0.0, full.sigma_p),
        ("amplitude_noise", full.sigma_x, 0.0),
        ("combined", full.sigma_x, full.sigma_p),
    ];
    let signal = build_signal(cfg)?;
    let mut columns = Vec::new();
    let mut stability = Table::new(
        "stability",
        &[
            "curve",
            "sigma_x",
            "sigma_p",
            "max_change",
            "max_nodes_x",
            "max_nodes_p",
        ],
    );
    for (name, sigma_x, sigma_p) in curves {
        let mut v = cfg.clone();
        v.noise = Some(NoiseSection { sigma_x, sigma_p });
        let results = over_grid(&v, |phi| noisy_at(&v, &signal, phi, 2))?;
        let mut column = Vec::new();
        let (mut change, mut nx, mut np) = (0.0f64, 0, 0);
        for (_, n) in &results {
            column.push(normally_ordered_variance(&n.moments)?);
            change = change.max(n.change);
            nx = nx.max(n.n_x);
            np = np.max(n.n_p);
        }
        stability.push(vec![
            name.into(),
            sigma_x.into(),
            sigma_p.into(),
            change.into(),
            nx.into(),
            np.into(),
        ]);
        columns.push(column);
    }
    let mut table = Table::new(
        "variance",
        &[
            "phi",
            "noiseless",
            "phase_noise",
            "amplitude_noise",
            "combined",
        ],
    );
    for (i, phi) in cfg.lo.phase_grid.points().into_iter().enumerate() {
        let mut row: Vec<Cell> = vec![phi.into()];
        row.extend(columns.iter().map(|c| Cell::from(c[i])));
        table.push(row);
    }
    Ok(vec![table, stability])
}
