//! The pipeline stages behind each subcommand. Every command evaluates its
//! phase grid point by point (in parallel when enabled) and returns tables
//! whose rows follow the grid order.

use anyhow::{bail, Context, Result};
use click_homodyne::detector::{difference_distribution, joint_click_distribution};
use click_homodyne::interferometer::{joint_photon_distribution, mix_on_beamsplitter};
use click_homodyne::lo_noise::{noisy_moments_with, NoisyMoments, QuadratureRule};
use click_homodyne::moments::{default_max_order, x_moments_analytic};
use click_homodyne::montecarlo::{
    estimate_moments, estimate_witness, plug_in_moments, sample_clicks,
};
use click_homodyne::witness::{
    minor_determinant, normally_ordered_variance, MomentMatrix, Verdict, DEFAULT_WITNESS_TOLERANCE,
};
use click_homodyne::{Execution, FockVector, JointClickDistribution, MomentSet};

use crate::config::ScenarioConfig;
use crate::output::{Cell, Table};

/// `f(phi)` at every grid phase, in grid order.
pub fn over_grid<T: Send>(
    cfg: &ScenarioConfig,
    f: impl Fn(f64) -> Result<T> + Sync + Send,
) -> Result<Vec<(f64, T)>> {
    let points = cfg.lo.phase_grid.points();
    Execution::Parallel.try_map(&points, |&phi| {
        f(phi)
            .map(|v| (phi, v))
            .with_context(|| format!("at phi = {phi}"))
    })
}

pub fn build_signal(cfg: &ScenarioConfig) -> Result<FockVector> {
    cfg.signal
        .build(cfg.truncation.budget)
        .with_context(|| format!("building the {} signal", cfg.signal.label()))
}

pub fn clicks_at(
    cfg: &ScenarioConfig,
    signal: &FockVector,
    phi: f64,
) -> Result<JointClickDistribution> {
    let state = mix_on_beamsplitter(signal, &cfg.lo_at(phi)?)?;
    Ok(joint_click_distribution(
        &joint_photon_distribution(&state),
        &cfg.detector,
    )?)
}

pub fn moments_at(
    cfg: &ScenarioConfig,
    signal: &FockVector,
    phi: f64,
    max_order: usize,
) -> Result<MomentSet> {
    Ok(x_moments_analytic(
        signal,
        &cfg.lo_at(phi)?,
        &cfg.detector,
        max_order,
    )?)
}

/// Principal index sets containing 0 for a `dim x dim` matrix, in a fixed order.
pub fn anchored_index_sets(dim: usize) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = (0..1usize << (dim - 1))
        .map(|mask| {
            std::iter::once(0)
                .chain((1..dim).filter(|i| mask >> (i - 1) & 1 == 1))
                .collect()
        })
        .collect();
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets
}

pub fn index_set_label(set: &[usize]) -> String {
    let parts: Vec<String> = set.iter().map(usize::to_string).collect();
    format!("det_{}", parts.join("_"))
}

/// `c_{k1,k2}` and `c_{dk}` at every phase.
pub fn clicks(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let signal = build_signal(cfg)?;
    let results = over_grid(cfg, |phi| clicks_at(cfg, &signal, phi))?;
    let n = cfg.detector.n_apds();
    let mut joint = Table::new("joint", &["phi", "k1", "k2", "c_k1k2"]);
    let mut diff = Table::new("difference", &["phi", "dk", "c_dk"]);
    for (phi, c) in &results {
        for k1 in 0..=n {
            for k2 in 0..=n {
                joint.push(vec![
                    (*phi).into(),
                    k1.into(),
                    k2.into(),
                    c.get(k1, k2).into(),
                ]);
            }
        }
        for (dk, p) in difference_distribution(c).iter() {
            diff.push(vec![(*phi).into(), dk.into(), p.into()]);
        }
    }
    Ok(vec![joint, diff])
}

/// `<:X^m(phi):>` for `m = 1..=max_order`; defaults to `max_order = N`.
pub fn moments(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let max_order = cfg.max_order.unwrap_or(cfg.detector.n_apds());
    if max_order == 0 {
        bail!("--max-order must be at least 1");
    }
    let signal = build_signal(cfg)?;
    let results = over_grid(cfg, |phi| moments_at(cfg, &signal, phi, max_order))?;
    let mut columns = vec!["phi".to_owned()];
    columns.extend((1..=max_order).map(|m| format!("X{m}")));
    let mut table = Table::with_columns("moments", columns);
    for (phi, ms) in &results {
        let mut row: Vec<Cell> = vec![(*phi).into()];
        row.extend(ms.moments()[1..].iter().map(|&v| Cell::from(v)));
        table.push(row);
    }
    Ok(vec![table])
}

/// Variance and every principal minor containing index 0.
pub fn witness(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let max_order = cfg
        .max_order
        .unwrap_or_else(|| default_max_order(&cfg.detector));
    if max_order < 2 {
        bail!("witnesses need --max-order of at least 2");
    }
    let dim = max_order / 2 + 1;
    let sets = anchored_index_sets(dim);
    let signal = build_signal(cfg)?;
    let results = over_grid(cfg, |phi| {
        let ms = moments_at(cfg, &signal, phi, 2 * (dim - 1))?;
        let matrix = MomentMatrix::with_dim(&ms, dim)?;
        let dets = sets
            .iter()
            .map(|s| Ok(minor_determinant(&matrix, s)?.determinant))
            .collect::<Result<Vec<f64>>>()?;
        Ok((normally_ordered_variance(&ms)?, dets))
    })?;
    let mut columns = vec!["phi".to_owned(), "variance".to_owned()];
    columns.extend(sets[1..].iter().map(|s| index_set_label(s)));
    columns.extend(["min_det".to_owned(), "verdict".to_owned()]);
    let mut table = Table::with_columns("witness", columns);
    for (phi, (variance, dets)) in &results {
        let min = dets[1..].iter().copied().fold(f64::INFINITY, f64::min);
        let mut row: Vec<Cell> = vec![(*phi).into(), (*variance).into()];
        row.extend(dets[1..].iter().map(|&d| Cell::from(d)));
        row.push(min.into());
        row.push(
            Verdict::from_threshold(min, DEFAULT_WITNESS_TOLERANCE)
                .label()
                .into(),
        );
        table.push(row);
    }
    Ok(vec![table])
}

pub fn noisy_at(
    cfg: &ScenarioConfig,
    signal: &FockVector,
    phi: f64,
    max_order: usize,
) -> Result<NoisyMoments> {
    let noise = cfg.noise_model(phi)?;
    Ok(noisy_moments_with(
        signal,
        &noise,
        &cfg.detector,
        max_order,
        &QuadratureRule::default(),
        Execution::Parallel,
    )?)
}

/// Noise-averaged `X1`, `X2` and variance, with the quadrature that met the
/// stability tolerance.
pub fn noise(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    if cfg.noise.is_none() {
        bail!("the noise command needs a [noise] table with sigma_x and/or sigma_p");
    }
    let signal = build_signal(cfg)?;
    let results = over_grid(cfg, |phi| noisy_at(cfg, &signal, phi, 2))?;
    let mut table = Table::new(
        "noise",
        &[
            "phi", "X1", "X2", "variance", "nodes_x", "nodes_p", "change",
        ],
    );
    for (phi, n) in &results {
        let m = n.moments.moments();
        table.push(vec![
            (*phi).into(),
            m[1].into(),
            m[2].into(),
            normally_ordered_variance(&n.moments)?.into(),
            n.n_x.into(),
            n.n_p.into(),
            n.change.into(),
        ]);
    }
    Ok(vec![table])
}

/// Sampled histograms, moment estimates and witness estimates. Grid point `i`
/// is seeded with `seed + i`.
pub fn montecarlo(cfg: &ScenarioConfig) -> Result<Vec<Table>> {
    let Some(shots) = cfg.shots else {
        bail!("the montecarlo command needs a shot count (--shots or `shots` in the config)");
    };
    let n = cfg.detector.n_apds();
    let max_order = cfg.max_order.unwrap_or(n);
    if max_order > n {
        bail!("sampled moments reach order N = {n}, requested --max-order {max_order}");
    }
    let dim = n / 2 + 1;
    let sets = anchored_index_sets(dim);
    let signal = build_signal(cfg)?;
    let points = cfg.lo.phase_grid.points();
    let indexed: Vec<(usize, f64)> = points.iter().copied().enumerate().collect();
    let results = Execution::Parallel.try_map(&indexed, |&(i, phi)| {
        let exact = clicks_at(cfg, &signal, phi)?;
        let hist = sample_clicks(&exact, shots, cfg.seed.wrapping_add(i as u64))?;
        let moments = estimate_moments(&hist, max_order)?;
        let exact_moments = plug_in_moments(&exact, (2 * (dim - 1)).max(max_order))?;
        let matrix = MomentMatrix::with_dim(&exact_moments, dim)?;
        let witnesses = sets[1..]
            .iter()
            .map(|s| {
                Ok((
                    estimate_witness(&hist, s)?,
                    minor_determinant(&matrix, s)?.determinant,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok::<_, anyhow::Error>((phi, hist, moments, exact_moments, witnesses))
    })?;

    let mut histogram = Table::new("histogram", &["phi", "k1", "k2", "count"]);
    let mut moment_table = Table::new(
        "moments",
        &["phi", "m", "estimate", "standard_error", "exact"],
    );
    let mut witness_table = Table::new(
        "witness",
        &[
            "phi",
            "index_set",
            "estimate",
            "standard_error",
            "exact",
            "verdict",
        ],
    );
    for (phi, hist, moments, exact, witnesses) in &results {
        for k1 in 0..=n {
            for k2 in 0..=n {
                histogram.push(vec![
                    (*phi).into(),
                    k1.into(),
                    k2.into(),
                    hist.get(k1, k2).into(),
                ]);
            }
        }
        for (m, e) in moments.iter().enumerate().skip(1) {
            moment_table.push(vec![
                (*phi).into(),
                m.into(),
                e.value.into(),
                e.standard_error.into(),
                exact.moments()[m].into(),
            ]);
        }
        for (w, exact_det) in witnesses {
            witness_table.push(vec![
                (*phi).into(),
                index_set_label(&w.index_set).into(),
                w.estimate.value.into(),
                w.estimate.standard_error.into(),
                (*exact_det).into(),
                w.verdict.label().into(),
            ]);
        }
    }
    Ok(vec![histogram, moment_table, witness_table])
}
