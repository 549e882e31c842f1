use std::fmt::Write as _;
use std::time::Instant;

use binpath::bench::{format_tables, hardware_threads, run_bench, to_csv};
use binpath::exact::LARGE_ENUMERATION_STEPS;
use binpath::{
    derive_crr, estimate_basic, estimate_partitioned, estimate_partitioned_equal, estimate_shared, repeat,
    value_exact_parallel, value_exact_serial, value_leaf_formula, with_custom_probs, Estimate, MarketInputs, McConfig,
    StudySummary, TreeParams, ValuationRequest,
};

use crate::args::{BenchArgs, BenchFormat, Format, MarketArgs, MethodArg, PriceArgs, StudyArgs, TableArg};
use crate::report::RunReport;
use crate::CliError;

fn market_inputs(market: &MarketArgs, n: u32) -> Result<MarketInputs, CliError> {
    Ok(MarketInputs::new(
        market.s0,
        market.k,
        market.q,
        market.sigma,
        market.t,
        n,
    )?)
}

fn tree_params(market: &MarketArgs, inputs: &MarketInputs) -> Result<TreeParams, CliError> {
    let base = match &market.probs {
        Some(probs) => with_custom_probs(inputs, probs)?,
        None if market.override_u.is_some() => {
            // CRR p is recomputed below from the overridden factors.
            TreeParams::from_factors(inputs.dt(), 1.0, vec![0.5; inputs.steps as usize])?
        }
        None => derive_crr(inputs)?,
    };
    if market.override_u.is_none() && market.override_p.is_none() {
        return Ok(base);
    }
    let u = market.override_u.unwrap_or(base.u);
    let probs = match market.override_p {
        Some(p) => vec![p; inputs.steps as usize],
        None if market.override_u.is_some() && market.probs.is_none() => {
            let d = 1.0 / u;
            let p = ((inputs.rate * inputs.dt()).exp() - d) / (u - d);
            if !(p > 0.0 && p < 1.0) {
                return Err(binpath::Error::ProbabilityOutOfRange { step: 1, value: p }.into());
            }
            vec![p; inputs.steps as usize]
        }
        None => base.up_probs,
    };
    Ok(TreeParams::from_factors(inputs.dt(), u, probs)?)
}

fn request(market: &MarketArgs, n: u32) -> Result<ValuationRequest, CliError> {
    let inputs = market_inputs(market, n)?;
    let params = tree_params(market, &inputs)?;
    Ok(ValuationRequest::new(inputs, params, market.payoff))
}

fn mc_estimate(method: MethodArg, req: &ValuationRequest, cfg: &McConfig) -> binpath::Result<Estimate> {
    match method {
        MethodArg::Mc => estimate_basic(req, cfg),
        MethodArg::Pmc => estimate_partitioned(req, cfg),
        MethodArg::PmcEqual => estimate_partitioned_equal(req, cfg),
        MethodArg::Smc => estimate_shared(req, cfg),
        _ => unreachable!("exact methods are not Monte Carlo"),
    }
}

pub fn price(args: &PriceArgs) -> Result<String, CliError> {
    if args.method.is_exact() && args.method != MethodArg::Leaf && args.n > LARGE_ENUMERATION_STEPS && !args.force_large
    {
        return Err(CliError::Usage(format!(
            "--method {} enumerates 2^{} paths; pass --force-large to allow N > {LARGE_ENUMERATION_STEPS}",
            args.method.as_str(),
            args.n
        )));
    }
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let mut req = request(&args.market, args.n)?
        .with_workers(args.workers)
        .allow_large(args.force_large);
    if let Some(t) = args.threads {
        req = req.with_threads(t);
    }

    let start = Instant::now();
    let (estimate, reps, empirical_variance) = match args.method {
        MethodArg::Exact => (Estimate::exact(value_exact_parallel(&req)?.value), 1, None),
        MethodArg::ExactSerial => (Estimate::exact(value_exact_serial(&req)?), 1, None),
        MethodArg::Leaf => (Estimate::exact(value_leaf_formula(&req)?), 1, None),
        method => {
            let mut cfg = McConfig::new(args.samples, args.workers, args.seed).with_reps(args.reps);
            if let Some(t) = args.threads {
                cfg = cfg.with_threads(t);
            }
            if args.reps == 1 {
                (mc_estimate(method, &req, &cfg)?, 1, None)
            } else {
                let study = repeat(&cfg, |c| mc_estimate(method, &req, c))?;
                let mut mean = study.estimates[0].clone();
                mean.value = study.mean_estimate;
                mean.variance = study.mean_variance;
                mean.std_error = study.mean_variance.sqrt();
                (mean, args.reps, Some(study.empirical_variance))
            }
        }
    };
    let wall_seconds = start.elapsed().as_secs_f64();

    let is_mc = !args.method.is_exact();
    let m = match args.method {
        MethodArg::Exact | MethodArg::Pmc | MethodArg::PmcEqual | MethodArg::Smc => args.workers,
        _ => 1,
    };
    let report = RunReport {
        method: args.method.as_str().to_string(),
        payoff: args.market.payoff.to_string(),
        s0: req.inputs.spot,
        k: req.inputs.strike,
        q: req.inputs.rate,
        sigma: req.inputs.sigma,
        t: req.inputs.maturity,
        n: args.n,
        m,
        r: is_mc.then_some(args.samples),
        seed: is_mc.then_some(args.seed),
        reps,
        value: estimate.value,
        variance: estimate.variance,
        std_error: estimate.std_error,
        wall_seconds,
        empirical_variance,
    };
    Ok(match args.format {
        Format::Json => format!("{}\n", report.to_json()),
        Format::Csv => report.to_csv(),
        Format::Plain => report.to_plain(),
    })
}

const STUDY_HEADER: &str = "mean_estimate,mean_variance_estimate,empirical_variance";

fn study_row(out: &mut String, method: &str, key: u64, s: &StudySummary) {
    let _ = writeln!(
        out,
        "{method},{key},{},{},{}",
        s.mean_estimate, s.mean_variance, s.empirical_variance
    );
}

pub fn study(args: &StudyArgs) -> Result<String, CliError> {
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let req = request(&args.market, args.n)?;
    let config = |samples: u64, strata: u64| {
        let cfg = McConfig::new(samples, strata, args.seed).with_reps(args.reps);
        match args.threads {
            Some(t) => cfg.with_threads(t),
            None => cfg,
        }
    };
    let m_list = || {
        args.m_list
            .clone()
            .unwrap_or_else(|| (0..=6).map(|k| 1u64 << k).collect())
    };

    let mut out = String::new();
    match args.table {
        TableArg::McConvergence => {
            let r_list = args
                .r_list
                .clone()
                .unwrap_or_else(|| (9..=16).map(|k| 1u64 << k).collect());
            let _ = writeln!(out, "method,R,{STUDY_HEADER}");
            for r in r_list {
                let s = repeat(&config(r, 1), |c| estimate_basic(&req, c))?;
                study_row(&mut out, "mc", r, &s);
            }
        }
        TableArg::PmcVariance => {
            let _ = writeln!(out, "method,M,{STUDY_HEADER}");
            for m in m_list() {
                let s = repeat(&config(args.samples, m), |c| estimate_partitioned(&req, c))?;
                study_row(&mut out, "pmc", m, &s);
            }
        }
        TableArg::SmcVsPmc => {
            let _ = writeln!(out, "method,M,{STUDY_HEADER}");
            for m in m_list() {
                let cfg = config(args.samples, m);
                let pmc = repeat(&cfg, |c| estimate_partitioned_equal(&req, c))?;
                study_row(&mut out, "pmc-equal", m, &pmc);
                let smc = repeat(&cfg, |c| estimate_shared(&req, c))?;
                study_row(&mut out, "smc", m, &smc);
            }
        }
    }
    Ok(out)
}

pub fn bench(args: &BenchArgs) -> Result<String, CliError> {
    let market = &args.market;
    if market.probs.is_some() || market.override_u.is_some() || market.override_p.is_some() {
        return Err(CliError::Usage(
            "bench derives CRR parameters per depth; --probs and overrides are not supported".into(),
        ));
    }
    if args.repetitions == 0 {
        return Err(CliError::Usage("--repetitions must be at least 1".into()));
    }
    if args.m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("--M-list must be strictly ascending".into()));
    }
    if let Some(&n) = args
        .n_list
        .iter()
        .find(|&&n| n > LARGE_ENUMERATION_STEPS && !args.force_large)
    {
        return Err(CliError::Usage(format!(
            "N={n} enumerates 2^{n} paths; pass --force-large to allow N > {LARGE_ENUMERATION_STEPS}"
        )));
    }
    let inputs = market_inputs(market, args.n_list[0])?;
    let grid: Vec<(u32, u64)> = args
        .n_list
        .iter()
        .flat_map(|&n| args.m_list.iter().map(move |&m| (n, m)))
        .collect();
    for &(n, _) in &grid {
        market_inputs(market, n)?;
    }
    if let Some(&m) = args.m_list.iter().find(|&&m| m > hardware_threads()) {
        eprintln!(
            "note: M={m} exceeds the {} available hardware threads; workers are oversubscribed",
            hardware_threads()
        );
    }
    let records = run_bench(&grid, inputs, market.payoff, args.force_large, args.repetitions)?;
    Ok(match args.format {
        BenchFormat::Csv => to_csv(&records),
        BenchFormat::Table => format_tables(&records),
    })
}
