use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use partsel_core::accounting::{dp_epsilon_for_delta, max_rho_for_dp, zcdp_to_dp};
use partsel_core::data::{generate_synthetic, load_dataset, write_synthetic, DataFormat, SyntheticSpec};
use partsel_core::engine::default_workers;
use partsel_core::mechanisms::experimental::iterated_dpsu;
use partsel_core::{
    dp_sips, dpsu_policy_gaussian, gw_greedy, weighted_gaussian, ApproxDpParams, Dataset, GwTruncation,
    MechanismConfig, PrivacyBudget, ReleaseResult, DEFAULT_SEED,
};
use serde::Serialize;

use crate::args::{Axis, ConvertArgs, DataArgs, FormatArg, GenerateArgs, MechArgs, Mechanism, RunArgs, SweepArgs, TruncationArg};
use crate::error::CliError;
use crate::report::RunReport;

pub const DEFAULT_RHO: f64 = 0.1;
pub const DEFAULT_DELTA: f64 = 1e-5;
pub const DEFAULT_EPS: f64 = 1.7;
pub const DEFAULT_DELTA_DP: f64 = 8.1142e-5;

/// The privacy parameters a mechanism runs under.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Privacy {
    Zcdp(PrivacyBudget),
    /// Laplace mechanisms; `implied` is the zCDP guarantee reported alongside.
    Dp { dp: ApproxDpParams, implied: PrivacyBudget },
}

impl Privacy {
    fn zcdp(&self) -> PrivacyBudget {
        match *self {
            Privacy::Zcdp(b) => b,
            Privacy::Dp { implied, .. } => implied,
        }
    }
}

/// Fully defaulted mechanism settings.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub mech: Mechanism,
    pub privacy: Privacy,
    pub cfg: MechanismConfig,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

pub fn resolve(m: &MechArgs) -> Result<Resolved, CliError> {
    if m.mech == Mechanism::DpsuIter && !m.experimental {
        return Err(usage("dpsu-iter is experimental; pass --experimental to run it"));
    }
    let privacy = if m.mech.uses_laplace() {
        if m.rho.is_some() || m.delta.is_some() {
            return Err(usage("gw takes --eps/--delta-dp; --rho/--delta belong to the Gaussian mechanisms"));
        }
        let dp = ApproxDpParams::new(m.eps.unwrap_or(DEFAULT_EPS), m.delta_dp.unwrap_or(DEFAULT_DELTA_DP))?;
        let rho = max_rho_for_dp(dp, m.equiv_delta_cdp)?;
        Privacy::Dp {
            dp,
            implied: PrivacyBudget::new(rho, m.equiv_delta_cdp)?,
        }
    } else {
        if m.eps.is_some() || m.delta_dp.is_some() {
            return Err(usage(format!(
                "{} takes --rho/--delta; --eps/--delta-dp belong to gw",
                m.mech.name()
            )));
        }
        Privacy::Zcdp(PrivacyBudget::new(m.rho.unwrap_or(DEFAULT_RHO), m.delta.unwrap_or(DEFAULT_DELTA))?)
    };
    let defaults = MechanismConfig::default();
    let cfg = MechanismConfig {
        delta0: m.delta0.unwrap_or(defaults.delta0),
        iterations: m.iters.unwrap_or(defaults.iterations),
        ratio: m.ratio.unwrap_or(defaults.ratio),
        seed: if m.entropy {
            rand::random()
        } else {
            m.seed.unwrap_or(DEFAULT_SEED)
        },
        workers: m.workers.unwrap_or_else(default_workers),
        buffer: m.buffer,
        gw_truncation: match m.gw_truncation {
            TruncationArg::TopFrequency => GwTruncation::TopFrequency,
            TruncationArg::Uniform => GwTruncation::Uniform,
        },
    };
    cfg.validate()?;
    Ok(Resolved {
        mech: m.mech,
        privacy,
        cfg,
    })
}

/// Loads or generates the dataset; returns it with a display name.
pub fn load(d: &DataArgs, workers: usize) -> Result<(Dataset, String), CliError> {
    let (data, name) = match (&d.data, d.synthetic) {
        (Some(path), _) => {
            let format = match d.format {
                FormatArg::Lines => DataFormat::UserLines,
                FormatArg::Csv => DataFormat::UserItemCsv { header: false },
                FormatArg::CsvHeader => DataFormat::UserItemCsv { header: true },
            };
            (load_dataset(path, format)?, path.display().to_string())
        }
        (None, Some(n)) => {
            let spec = SyntheticSpec::with_users(n, d.data_seed);
            (generate_synthetic(&spec, workers)?, format!("synthetic:{n}:{}", d.data_seed))
        }
        (None, None) => return Err(usage("one of --data or --synthetic is required")),
    };
    Ok(match d.users {
        Some(n) => (data.prefix(n), name),
        None => (data, name),
    })
}

pub fn execute(d: &Dataset, r: &Resolved) -> Result<ReleaseResult, CliError> {
    for w in r.cfg.warnings(d, r.privacy.zcdp().delta) {
        eprintln!("warning: {w}");
    }
    let out = match (r.mech, r.privacy) {
        (Mechanism::Wgauss, Privacy::Zcdp(b)) => weighted_gaussian(d, b, &r.cfg)?,
        (Mechanism::Sips, Privacy::Zcdp(b)) => dp_sips(d, b, &r.cfg)?.0,
        (Mechanism::Dpsu, Privacy::Zcdp(b)) => dpsu_policy_gaussian(d, b, &r.cfg)?,
        (Mechanism::DpsuIter, Privacy::Zcdp(b)) => iterated_dpsu(d, b, &r.cfg)?,
        (Mechanism::Gw, Privacy::Dp { dp, .. }) => gw_greedy(d, dp, &r.cfg)?,
        (m, _) => unreachable!("{} resolved with the wrong privacy namespace", m.name()),
    };
    Ok(out)
}

pub fn report(r: &Resolved, dataset: &str, d: &Dataset, out: &ReleaseResult) -> RunReport {
    let zcdp = r.privacy.zcdp();
    let (epsilon, delta_dp) = match r.privacy {
        Privacy::Dp { dp, .. } => (Some(dp.epsilon), Some(dp.delta_dp)),
        Privacy::Zcdp(_) => (None, None),
    };
    RunReport {
        mechanism: r.mech.name().to_string(),
        rho: zcdp.rho,
        delta: zcdp.delta,
        epsilon,
        delta_dp,
        delta0: r.cfg.delta0,
        iterations: r.cfg.iterations,
        ratio: r.cfg.ratio,
        seed: r.cfg.seed,
        workers: r.cfg.workers,
        buffer: r.cfg.buffer,
        gw_truncation: match r.cfg.gw_truncation {
            GwTruncation::TopFrequency => "top-frequency",
            GwTruncation::Uniform => "uniform",
        }
        .to_string(),
        dataset: dataset.to_string(),
        num_users: d.num_users(),
        partitions_released: out.count(),
        elapsed_ms: out.elapsed_ms,
        per_iteration_counts: out.per_iteration_counts.clone(),
        engine_stages: out.engine_stages,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

pub fn cmd_run(args: &RunArgs) -> Result<RunReport, CliError> {
    let resolved = resolve(&args.mech)?;
    let (d, name) = load(&args.data, resolved.cfg.workers)?;
    let out = execute(&d, &resolved)?;
    if let Some(path) = &args.released {
        let mut w = create(path)?;
        for item in d.resolve(&out.released) {
            writeln!(w, "{item}").map_err(|e| io_error(path, e))?;
        }
        w.flush().map_err(|e| io_error(path, e))?;
    }
    Ok(report(&resolved, &name, &d, &out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GenerateSummary {
    pub users: usize,
    pub observations: u64,
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<GenerateSummary, CliError> {
    let spec = SyntheticSpec {
        num_users: args.users,
        pareto_scale: args.pareto_scale,
        pareto_shape: args.pareto_shape,
        zeta_param: args.zeta,
        seed: args.seed,
        max_list_len: args.max_list_len,
    };
    spec.validate()?;
    let workers = args.workers.unwrap_or_else(default_workers).max(1);
    let observations = match &args.out {
        Some(path) => write_synthetic(&spec, create(path)?, workers),
        None => write_synthetic(&spec, BufWriter::new(io::stdout().lock()), workers),
    }?;
    Ok(GenerateSummary {
        users: args.users,
        observations,
    })
}

/// One conversion, in table column order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConversionRow {
    pub rho: f64,
    pub delta_cdp: f64,
    pub epsilon: f64,
    pub delta_dp: f64,
    /// Rényi order attaining the bound; infinite when ρ = 0.
    pub alpha: f64,
}

impl ConversionRow {
    pub const HEADER: &'static str = "rho\tdelta_cdp\tepsilon\tdelta_dp\talpha";

    pub fn table_line(&self) -> String {
        format!(
            "{}\t{:.2e}\t{}\t{:.2e}\t{:.3}",
            self.rho,
            self.delta_cdp,
            trim_float(self.epsilon),
            self.delta_dp,
            self.alpha
        )
    }
}

/// Up to six significant digits, without trailing zeros.
fn trim_float(x: f64) -> String {
    let s = format!("{:.6}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

pub fn cmd_convert(args: &ConvertArgs) -> Result<ConversionRow, CliError> {
    let budget = PrivacyBudget::new(args.rho, args.delta_cdp)?;
    let epsilon = match (args.eps, args.delta_dp) {
        (Some(eps), _) => eps,
        (None, Some(target)) => dp_epsilon_for_delta(budget, target)?,
        (None, None) => return Err(usage("one of --eps or --delta-dp is required")),
    };
    let (dp, point) = zcdp_to_dp(budget, epsilon)?;
    Ok(ConversionRow {
        rho: args.rho,
        delta_cdp: args.delta_cdp,
        epsilon,
        delta_dp: dp.delta_dp,
        alpha: point.alpha,
    })
}

fn integral(axis: Axis, v: f64) -> Result<usize, CliError> {
    if v.fract() != 0.0 || v < 0.0 || v > usize::MAX as f64 {
        return Err(usage(format!("{axis:?} values must be non-negative integers, got {v}")));
    }
    Ok(v as usize)
}

/// Sets the swept parameter on copies of the fixed arguments.
fn apply_axis(axis: Axis, v: f64, mech: &mut MechArgs, data: &mut DataArgs) -> Result<(), CliError> {
    let gw = mech.mech.uses_laplace();
    let slot_taken = |taken: bool, flag: &str| {
        if taken {
            Err(usage(format!("--{flag} is fixed but also swept by --axis")))
        } else {
            Ok(())
        }
    };
    match axis {
        Axis::Rho if gw => return Err(usage("gw is swept with --axis eps")),
        Axis::Eps if !gw => return Err(usage("--axis eps applies to gw only; use --axis rho")),
        Axis::Rho | Axis::Eps => {
            let slot = if gw { &mut mech.eps } else { &mut mech.rho };
            slot_taken(slot.is_some(), if gw { "eps" } else { "rho" })?;
            *slot = Some(v);
        }
        Axis::Delta => {
            let slot = if gw { &mut mech.delta_dp } else { &mut mech.delta };
            slot_taken(slot.is_some(), if gw { "delta-dp" } else { "delta" })?;
            *slot = Some(v);
        }
        Axis::Delta0 => {
            slot_taken(mech.delta0.is_some(), "delta0")?;
            mech.delta0 = Some(integral(axis, v)?);
        }
        Axis::Ratio => {
            slot_taken(mech.ratio.is_some(), "ratio")?;
            mech.ratio = Some(v);
        }
        Axis::Iterations => {
            slot_taken(mech.iters.is_some(), "iters")?;
            mech.iters = Some(integral(axis, v)?);
        }
        Axis::Workers => {
            slot_taken(mech.workers.is_some(), "workers")?;
            mech.workers = Some(integral(axis, v)?);
        }
        Axis::Users => {
            slot_taken(data.users.is_some(), "users")?;
            data.users = Some(integral(axis, v)?);
        }
    }
    Ok(())
}

/// Runs every (value, repetition) pair sequentially, one row each.
pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<RunReport>, CliError> {
    if args.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let base = resolve(&args.mech)?;
    // validate every value before spending time on data
    for &v in &args.values {
        let (mut m, mut d) = (args.mech.clone(), args.data.clone());
        apply_axis(args.axis, v, &mut m, &mut d)?;
        resolve(&m)?;
    }
    let (full, name) = load(
        &DataArgs {
            users: None,
            ..args.data.clone()
        },
        base.cfg.workers,
    )?;
    let mut rows = Vec::with_capacity(args.values.len() * args.reps);
    for &v in &args.values {
        let (mut m, mut d) = (args.mech.clone(), args.data.clone());
        apply_axis(args.axis, v, &mut m, &mut d)?;
        m.entropy = false;
        let data = match d.users {
            Some(n) => full.prefix(n),
            None => full.clone(),
        };
        for rep in 0..args.reps {
            m.seed = Some(base.cfg.seed.wrapping_add(rep as u64));
            let resolved = resolve(&m)?;
            let out = execute(&data, &resolved)?;
            rows.push(report(&resolved, &name, &data, &out));
        }
    }
    Ok(rows)
}
