use std::path::Path;

use rayon::prelude::*;

use super::config::{ModeName, RunConfig, DEFAULT_J, MIXTURE_J};
use super::table::{Cell, SweepTable, TableSection};
use crate::dynamics::{
    build_three_level_model, conditional_ef_state, evolve_lindblad_series, sample_ensemble,
};
use crate::error::{Error, Result};
use crate::linearity::{
    linearity_scan, mixture_test_2level, mixture_test_3level, purify, renorm_ratio_series, InitialState,
    MeasuredPipeline, SimulationMode,
};
use crate::measurement::{
    ibu_correct, read_counts_csv, reconstruct_bloch, renormalize_subensemble, rotated_populations, sample_counts,
    apply_confusion, CountsRecord, ProbabilityVector, BLOCH_CONVENTION, DEFAULT_IBU_ITERATIONS,
};
use crate::qcore::{basis_ket, Axis, BlochVector, DensityMatrix, Level};
use crate::rng::derive_seed;
use crate::spectral::{classify_regime, fpt_sweep, EP_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Sweep,
    Fpt,
    Linearity,
    Mixture,
    Trajectories,
    Ingest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
            Command::Fpt => "fpt",
            Command::Linearity => "linearity",
            Command::Mixture => "mixture",
            Command::Trajectories => "trajectories",
            Command::Ingest => "ingest",
        }
    }
}

fn with_metadata(command: Command, cfg: &RunConfig, sections: Vec<TableSection>) -> SweepTable {
    let mut t = SweepTable { metadata: Vec::new(), sections };
    t.meta("nonlinq", env!("CARGO_PKG_VERSION"));
    t.meta("command", command.name());
    t.meta("seed", cfg.seed.to_string());
    t.meta("units", "t[us] J[rad/us] gamma[1/us]");
    t.meta("config", cfg.echo());
    t
}

fn pipeline(cfg: &RunConfig, seed: u64) -> Result<SimulationMode> {
    Ok(match cfg.mode {
        ModeName::Ideal => SimulationMode::Ideal,
        ModeName::Measured => {
            SimulationMode::Measured(MeasuredPipeline::new(cfg.beta.resolve()?, cfg.shots, seed, cfg.integrator_dt))
        }
    })
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<SweepTable> {
    let grid = cfg.require_sweep("spectrum")?;
    let base = cfg.params.resolve(DEFAULT_J)?;
    let mut s = TableSection::new(
        "spectrum",
        &["J", "re_lambda1", "im_lambda1", "re_lambda2", "im_lambda2", "eigenvector_overlap", "regime"],
    );
    for j in grid {
        let r = classify_regime(&base.with_coupling(j), EP_TOL)?;
        let [l1, l2] = r.eigenvalues;
        s.push(vec![
            j.into(),
            l1.re.into(),
            l1.im.into(),
            l2.re.into(),
            l2.im.into(),
            r.eigenvector_overlap.into(),
            r.regime.name().into(),
        ]);
    }
    Ok(with_metadata(Command::Spectrum, cfg, vec![s]))
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepTable> {
    let grid = cfg.require_sweep("sweep")?;
    let base = cfg.params.resolve(DEFAULT_J)?;
    let times = cfg.time_or(10.0, 0.05).points();
    let beta = cfg.beta.resolve()?;
    let rho0 = DensityMatrix::basis(Level::E, 3)?;

    let blocks: Vec<Vec<Vec<Cell>>> = grid
        .par_iter()
        .enumerate()
        .map(|(ji, &j)| -> Result<Vec<Vec<Cell>>> {
            let model = build_three_level_model(&base.with_coupling(j));
            let states = evolve_lindblad_series(&rho0, &model, &times, cfg.integrator_dt)?;
            let mut rows = Vec::with_capacity(times.len());
            for (k, (t, rho)) in times.iter().zip(&states).enumerate() {
                let p = rotated_populations(rho, Axis::Z)?;
                let p = match cfg.mode {
                    ModeName::Ideal => p,
                    ModeName::Measured => {
                        let obs = apply_confusion(&p, &beta);
                        let seed = derive_seed(cfg.seed, (ji * times.len() + k) as u64);
                        let freq = if cfg.shots == 0 {
                            obs
                        } else {
                            ProbabilityVector::from_weights(sample_counts(&obs, cfg.shots, seed).map(|c| c as f64))?
                        };
                        ibu_correct(&freq, &beta, DEFAULT_IBU_ITERATIONS, &ProbabilityVector::uniform())?
                    }
                };
                let pn = renormalize_subensemble(&p).map(|r| r.plus).ok();
                rows.push(vec![j.into(), (*t).into(), p[1].into(), pn.into()]);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut s = TableSection::new("sweep", &["J", "t", "P(+z)", "Pn(+z)"]);
    for row in blocks.into_iter().flatten() {
        s.push(row);
    }
    Ok(with_metadata(Command::Sweep, cfg, vec![s]))
}

pub fn cmd_fpt(cfg: &RunConfig) -> Result<SweepTable> {
    let grid = cfg.require_sweep("fpt")?;
    let base = cfg.params.resolve(DEFAULT_J)?;
    let time = cfg.time_or(20.0, 1e-3);
    let e = basis_ket(Level::E, 2)?;
    let rows = fpt_sweep(&base, &grid, &e, time.horizon, time.dt)?;
    let mut s = TableSection::new("fpt", &["J", "fpt", "hermitian_ref", "pi_over_j", "regime"]);
    for r in rows {
        let regime = classify_regime(&base.with_coupling(r.coupling), EP_TOL)?.regime;
        s.push(vec![
            r.coupling.into(),
            r.result.fpt.into(),
            r.result.hermitian_reference.into(),
            r.result.pi_over_j.into(),
            regime.name().into(),
        ]);
    }
    let mut t = with_metadata(Command::Fpt, cfg, vec![s]);
    t.meta("fpt_method", crate::spectral::FPT_METHOD);
    Ok(t)
}

pub fn cmd_linearity(cfg: &RunConfig) -> Result<SweepTable> {
    let base = cfg.params.resolve(DEFAULT_J)?;
    let couplings = match cfg.sweep {
        Some(s) => s.points(),
        None => vec![base.coupling],
    };
    let times = cfg.time_or(6.0, 0.05).points();

    let blocks: Vec<Vec<Vec<Cell>>> = couplings
        .par_iter()
        .enumerate()
        .map(|(ji, &j)| -> Result<Vec<Vec<Cell>>> {
            let p = base.with_coupling(j);
            let ratio = renorm_ratio_series(&p, &times)?;
            let mode = pipeline(cfg, derive_seed(cfg.seed, ji as u64))?;
            let mut rows = Vec::new();
            for init in InitialState::ALL {
                let scan = linearity_scan(&p, init, &times, &mode)?;
                for k in 0..times.len() {
                    rows.push(vec![
                        j.into(),
                        init.label().into(),
                        times[k].into(),
                        scan.ofs[k].into(),
                        ratio.ratio[k].into(),
                        ratio.time_average.into(),
                    ]);
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut s = TableSection::new("linearity", &["J", "initial_state", "t", "ofs", "ratio_rf_re", "ratio_time_average"]);
    for row in blocks.into_iter().flatten() {
        s.push(row);
    }
    let mut t = with_metadata(Command::Linearity, cfg, vec![s]);
    if cfg.mode == ModeName::Measured {
        t.meta("bloch_convention", BLOCH_CONVENTION);
    }
    Ok(t)
}

pub fn cmd_mixture(cfg: &RunConfig) -> Result<SweepTable> {
    let p = cfg.params.resolve(MIXTURE_J)?;
    let times = cfg.time_or(6.0, 0.05).points();
    let mode = pipeline(cfg, cfg.seed)?;
    let two = mixture_test_2level(&p, &times, &mode, cfg.integrator_dt)?;
    let three = mixture_test_3level(&p, &times, &mode, cfg.integrator_dt)?;
    let mut s = TableSection::new("mixture", &["system", "t", "p_mixture", "p_superposed", "deviation"]);
    for r in [&two, &three] {
        for k in 0..times.len() {
            s.push(vec![
                r.system.label().into(),
                times[k].into(),
                r.p_mixture[k].into(),
                r.p_superposed[k].into(),
                r.deviation[k].into(),
            ]);
        }
    }
    let mut t = with_metadata(Command::Mixture, cfg, vec![s]);
    t.meta("J", p.coupling.to_string());
    t.meta("max_deviation_2lvl", two.max_deviation().to_string());
    t.meta("max_deviation_3lvl", three.max_deviation().to_string());
    Ok(t)
}

fn bloch_cells(b: Option<(BlochVector, [f64; 3])>, reference: Option<BlochVector>) -> Vec<Cell> {
    let mut out = Vec::with_capacity(9);
    let comps = |v: &BlochVector| [v.x, v.y, v.z];
    for a in 0..3 {
        out.push(b.map(|(m, _)| comps(&m)[a]).into());
        out.push(b.map(|(_, s)| s[a]).into());
        out.push(reference.map(|r| comps(&r)[a]).into());
    }
    out
}

pub fn cmd_trajectories(cfg: &RunConfig) -> Result<SweepTable> {
    if cfg.shots == 0 {
        return Err(Error::Config("`trajectories` needs shots > 0 (the number of trajectories)".into()));
    }
    let p = cfg.params.resolve(DEFAULT_J)?;
    let times = cfg.time_or(6.0, 0.5).points();
    let model = build_three_level_model(&p);
    let psi0 = basis_ket(Level::E, 3)?;
    let stats = sample_ensemble(&psi0, &model, &times, cfg.integrator_dt, cfg.seed, cfg.shots as usize)?;
    let reference = evolve_lindblad_series(&DensityMatrix::pure(&psi0), &model, &times, cfg.integrator_dt)?;

    let mut rows = TableSection::new(
        "trajectories",
        &["trajectory_id", "seed", "postselected", "jump_count", "jumps_L_e", "jumps_L_f"],
    );
    for t in &stats.trajectories {
        rows.push(vec![
            t.index.into(),
            t.seed.into(),
            t.postselected.into(),
            t.jump_count.into(),
            t.jumps_by_channel[0].into(),
            t.jumps_by_channel[1].into(),
        ]);
    }

    let mut agg = TableSection::new(
        "aggregate",
        &[
            "t", "kept", "success_rate", "success_ref", "x", "x_sigma", "x_ref", "y", "y_sigma", "y_ref", "z", "z_sigma",
            "z_ref",
        ],
    );
    for (k, t) in times.iter().enumerate() {
        let cond = conditional_ef_state(&reference[k]).ok();
        let mut row: Vec<Cell> = vec![
            (*t).into(),
            stats.postselected_count(k).into(),
            stats.postselected_fraction(k).into(),
            cond.map(|c| c.success).into(),
        ];
        row.extend(bloch_cells(stats.conditioned_bloch(k), cond.map(|c| c.rho_ef.bloch_vector())));
        agg.push(row);
    }
    let mut table = with_metadata(Command::Trajectories, cfg, vec![rows, agg]);
    table.meta("trajectories", cfg.shots.to_string());
    table.meta("final_success_rate", stats.success_rate().to_string());
    Ok(table)
}

/// Groups counts rows into settings: the k-th X, Y and Z rows form setting k.
fn group_settings(records: &[CountsRecord]) -> Result<Vec<[CountsRecord; 3]>> {
    let by_axis: Vec<Vec<CountsRecord>> =
        Axis::ALL.iter().map(|a| records.iter().filter(|r| r.axis == *a).copied().collect()).collect();
    let n = by_axis[0].len();
    if by_axis.iter().any(|v| v.len() != n) || n == 0 {
        return Err(Error::DataFormat(format!(
            "need equal numbers of X, Y and Z rows, got {}, {}, {}",
            by_axis[0].len(),
            by_axis[1].len(),
            by_axis[2].len()
        )));
    }
    Ok((0..n).map(|k| [by_axis[0][k], by_axis[1][k], by_axis[2][k]]).collect())
}

pub fn cmd_ingest(counts_path: &Path, cfg: &RunConfig) -> Result<SweepTable> {
    let file = std::fs::File::open(counts_path)
        .map_err(|e| Error::DataFormat(format!("{}: {e}", counts_path.display())))?;
    let records = read_counts_csv(std::io::BufReader::new(file))?;
    let beta = cfg.beta.resolve()?;
    let settings = group_settings(&records)?;

    let mut cols: Vec<String> = vec!["setting".into()];
    for a in ["x", "y", "z"] {
        for c in ["shots", "p_g", "p_plus", "p_minus", "pn_plus", "success"] {
            cols.push(format!("{c}_{a}"));
        }
    }
    for c in ["bloch_x", "bloch_y", "bloch_z", "ket_e_re", "ket_e_im", "ket_f_re", "ket_f_im", "purity_weight", "degenerate"] {
        cols.push(c.into());
    }
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut s = TableSection::new("ingest", &col_refs);

    for (k, group) in settings.iter().enumerate() {
        let mut row: Vec<Cell> = vec![k.into()];
        let mut pairs = Vec::with_capacity(3);
        for rec in group {
            let corrected = ibu_correct(&rec.frequencies()?, &beta, DEFAULT_IBU_ITERATIONS, &ProbabilityVector::uniform())?;
            let pair = renormalize_subensemble(&corrected)?;
            row.extend([
                rec.shots.into(),
                corrected[0].into(),
                corrected[1].into(),
                corrected[2].into(),
                pair.plus.into(),
                pair.success.into(),
            ]);
            pairs.push(pair);
        }
        let b = reconstruct_bloch(&pairs[0], &pairs[1], &pairs[2]);
        let pure = purify(&b.to_density())?;
        let ket = pure.state;
        row.extend([
            b.x.into(),
            b.y.into(),
            b.z.into(),
            ket[0].re.into(),
            ket[0].im.into(),
            ket[1].re.into(),
            ket[1].im.into(),
            pure.weight.into(),
            pure.degenerate.into(),
        ]);
        s.push(row);
    }
    let mut t = with_metadata(Command::Ingest, cfg, vec![s]);
    t.meta("source", counts_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
    t.meta("bloch_convention", BLOCH_CONVENTION);
    t.meta("ibu_iterations", DEFAULT_IBU_ITERATIONS.to_string());
    Ok(t)
}
