use crate::applications::{
    b_kappa, b_kappa_deviation, clustered_config, generate_strip_config, hs_compare, strip_bound, worst_strip, MatrixSampler,
};
use crate::error::Error;
use crate::gauss_sum::{
    expectation_sweep, fit_c3, fit_profile_constants, key_bound_rhs, ln_expectation_upper_bound, sup_f_net, sup_f_net_ascent,
    sup_f_search_probes, Frame, SearchOptions, SupEstimate,
};
use crate::ledger::ConstantsLedger;
use crate::net::{cardinality_upper_bound, enumerate_net, subgaussian_tail_check, write_net_csv, NetParams};
use crate::rng::RngStream;
use crate::slicing::{build_body, make_schedule, report_record, slicing_report, write_report_csv, DeskOverride, ReportOptions};
use crate::{sample_sphere_uniform, UnitVector};

use super::config::{ExperimentConfig, Subcommand};
use super::Failure;

/// Everything a subcommand writes besides the `# config:` line.
#[derive(Debug, Default)]
pub struct Report {
    pub header: Vec<String>,
    pub body: Vec<u8>,
}

type Rows = csv::Writer<Vec<u8>>;

fn rows() -> Rows {
    csv::Writer::from_writer(Vec::new())
}

fn finish(w: Rows) -> Result<Vec<u8>, Failure> {
    w.into_inner().map_err(|e| Failure::Run(Error::Io(e.into_error())))
}

fn unit(n: usize, stream: RngStream) -> Result<UnitVector<f64>, Failure> {
    Ok(sample_sphere_uniform(n, &mut stream.generator())?)
}

fn load_ledger(cfg: &ExperimentConfig, report: &mut Report) -> Result<ConstantsLedger<f64>, Failure> {
    let ledger = match cfg.raw("ledger") {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read ledger file {path}: {e}")))?;
            ConstantsLedger::parse(&text).map_err(|e| Failure::Usage(format!("ledger file {path}: {e}")))?
        }
        None => ConstantsLedger::default(),
    };
    let entries: Vec<String> = ledger.entries().iter().map(|(k, v)| format!("{k}={v}")).collect();
    report.header.push(format!("# ledger: {}", entries.join(";")));
    Ok(ledger)
}

fn parse_sampler(name: &str, rows: usize, cols: usize) -> Result<MatrixSampler, Failure> {
    match name {
        "gaussian" => Ok(MatrixSampler::Gaussian { rows, cols }),
        "rademacher" => Ok(MatrixSampler::Rademacher { rows, cols }),
        "heavy" => Ok(MatrixSampler::HeavyColumn { rows, cols, scale: 100.0 }),
        "student" => Ok(MatrixSampler::StudentT { rows, cols, dof: 3.0 }),
        other => Err(Failure::Usage(format!(
            "invalid value `{other}` for `sampler` (gaussian, rademacher, heavy, student)"
        ))),
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Report, Failure> {
    let stream = RngStream::new(cfg.get("seed")?);
    let mut report = Report::default();
    report.body = match cfg.subcommand {
        Subcommand::NetStats => net_stats(cfg, &mut report)?,
        Subcommand::RoundingTails => rounding_tails(cfg, stream, &mut report)?,
        Subcommand::Lemma32 => lemma32(cfg, &mut report)?,
        Subcommand::KeyBound => key_bound(cfg, stream, &mut report)?,
        Subcommand::Slicing => slicing(cfg, stream, &mut report)?,
        Subcommand::Strips => strips(cfg, stream, &mut report)?,
        Subcommand::HsNet => hs_net(cfg, stream, &mut report)?,
        Subcommand::Bkappa => bkappa(cfg, stream, &mut report)?,
    };
    Ok(report)
}

fn net_stats(cfg: &ExperimentConfig, report: &mut Report) -> Result<Vec<u8>, Failure> {
    let n: usize = cfg.get("n")?;
    let params = NetParams::new(n, cfg.get::<f64>("rho")?)?;
    let points = enumerate_net(&params, cfg.get("budget")?)?;
    report.header.push(format!("# summary: count={};bound={}", points.len(), cardinality_upper_bound(&params)));
    let mut out = Vec::new();
    write_net_csv(&points, n, &mut out)?;
    Ok(out)
}

fn rounding_tails(cfg: &ExperimentConfig, stream: RngStream, report: &mut Report) -> Result<Vec<u8>, Failure> {
    let n: usize = cfg.get("n")?;
    let rho: f64 = cfg.get("rho")?;
    let params = NetParams::new(n, rho)?;
    let trials: u64 = cfg.get("trials")?;
    let mut w = rows();
    w.write_record(["pair", "n", "rho", "beta", "empirical_prob", "hoeffding_bound", "std_error", "within_3se"])?;
    let mut all = true;
    for pair in 0..cfg.get::<u64>("directions")? {
        let s = stream.derive(pair);
        let xi = unit(n, s.derive(0))?;
        let theta = unit(n, s.derive(1))?;
        for (i, mult) in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0].into_iter().enumerate() {
            let beta = rho * mult / (n as f64).sqrt();
            let c = subgaussian_tail_check(&xi, &theta, beta, &params, trials, s.derive(2 + i as u64))?;
            all &= c.holds_within(3.0);
            w.write_record([
                pair.to_string(),
                n.to_string(),
                rho.to_string(),
                beta.to_string(),
                c.empirical_prob.to_string(),
                c.hoeffding_bound.to_string(),
                c.std_error.to_string(),
                c.holds_within(3.0).to_string(),
            ])?;
        }
    }
    report.header.push(format!("# summary: all_within_3se={all}"));
    finish(w)
}

fn lemma32(cfg: &ExperimentConfig, report: &mut Report) -> Result<Vec<u8>, Failure> {
    let ledger = load_ledger(cfg, report)?;
    let n: usize = cfg.get("n")?;
    let checks = expectation_sweep(&[n], cfg.get("rho")?)?;
    let mut w = rows();
    w.write_record(["n", "r", "t", "eta_norm", "sphere_mean", "bound", "ln_mean", "ln_bound", "c_needed"])?;
    let mut fitted = 0.0f64;
    for c in &checks {
        let ln_bound = ln_expectation_upper_bound(c.n, c.r, c.t, c.eta_norm, &ledger)?;
        fitted = fitted.max(c.c_needed);
        w.write_record([
            c.n.to_string(),
            c.r.to_string(),
            c.t.to_string(),
            c.eta_norm.to_string(),
            c.ln_mean.exp().to_string(),
            ln_bound.exp().to_string(),
            c.ln_mean.to_string(),
            ln_bound.to_string(),
            c.c_needed.to_string(),
        ])?;
    }
    report.header.push(format!("# summary: fitted_c={fitted}"));
    finish(w)
}

fn sup_record(frame: usize, seed: u64, est: &SupEstimate, key_rhs: Option<f64>) -> Vec<String> {
    let mut rec = vec![
        frame.to_string(),
        seed.to_string(),
        est.method.as_str().to_string(),
        est.value.to_string(),
        est.argmax_t.to_string(),
        est.slack.to_string(),
        key_rhs.map(|v| v.to_string()).unwrap_or_default(),
    ];
    rec.extend(est.argmax_xi.iter().map(|x| x.to_string()));
    rec
}

fn key_bound(cfg: &ExperimentConfig, stream: RngStream, report: &mut Report) -> Result<Vec<u8>, Failure> {
    let ledger = load_ledger(cfg, report)?;
    let n: usize = cfg.get("n")?;
    let big_n: usize = cfg.get("N")?;
    let r: f64 = cfg.get("r")?;
    let params = NetParams::new(n, cfg.get::<f64>("rho")?)?;
    let budget: u64 = cfg.get("budget")?;
    let opts = SearchOptions { restarts: cfg.get("restarts")?, t_max: cfg.get("t-max")?, ..SearchOptions::default() };
    let seed: u64 = cfg.get("seed")?;
    let (c4, c5) = fit_profile_constants(n, r)?;
    let mut c3 = 0.0f64;
    let mut w = rows();
    let mut header: Vec<String> =
        ["frame", "seed", "method", "value", "t", "slack", "key_rhs"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=n).map(|i| format!("xi_{i}")));
    w.write_record(&header)?;
    for f in 0..cfg.get::<usize>("trials")? {
        let s = stream.derive(f as u64);
        let frame = Frame::sample(n, big_n, r, &mut s.derive(0).generator())?;
        let (search, probes) = sup_f_search_probes(&frame, &opts, s.derive(1))?;
        let net = if cardinality_upper_bound(&params) <= budget as f64 {
            sup_f_net(&frame, &params, budget, &ledger)?
        } else {
            let starts: Vec<(Vec<f64>, f64)> = probes.iter().map(|p| (p.xi.clone(), p.t)).collect();
            sup_f_net_ascent(&frame, &params, &starts, &ledger)?
        };
        // The fluctuation term needs N r > n sqrt(n); leave the column empty otherwise.
        let rhs = |t: f64| key_bound_rhs(n, big_n, r, t.abs(), &ledger).ok();
        match fit_c3(n, big_n, r, c4, c5, &probes) {
            Ok(v) => c3 = c3.max(v),
            Err(Error::OutsideRegime(_)) => c3 = f64::NAN,
            Err(e) => return Err(e.into()),
        }
        w.write_record(sup_record(f, seed, &search, rhs(search.argmax_t)))?;
        w.write_record(sup_record(f, seed, &net, rhs(net.argmax_t)))?;
    }
    report.header.push(format!("# summary: fitted_C3={c3};fitted_C4={c4};fitted_C5={c5}"));
    finish(w)
}

fn slicing(cfg: &ExperimentConfig, stream: RngStream, report: &mut Report) -> Result<Vec<u8>, Failure> {
    let n: usize = cfg.get("n")?;
    let desk = DeskOverride { m: cfg.get("desk-m")?, n_k: cfg.get_list("desk-N")?, r_k: cfg.get_list("desk-R")? };
    let schedule = make_schedule(n, 1.0, Some(desk))?;
    let body = build_body(&schedule, cfg.get("budget")?, &mut stream.derive(0).generator())?;
    let opts = ReportOptions {
        dilation: cfg.get("dilation")?,
        mass_trials: cfg.get("trials")?,
        directions: cfg.get("directions")?,
        ..ReportOptions::default()
    };
    let rep = slicing_report(&body, &opts, stream.derive(1))?;
    report.header.push(format!(
        "# summary: functional_min={};volume={};volume_se={};section_argmax_t={}",
        rep.functional_min, rep.volume.volume, rep.volume.std_error, rep.argmax_t
    ));
    let mut out = Vec::new();
    write_report_csv(&[report_record(&body, &rep, cfg.get("seed")?)], &mut out)?;
    Ok(out)
}

fn strips(cfg: &ExperimentConfig, stream: RngStream, report: &mut Report) -> Result<Vec<u8>, Failure> {
    let n: usize = cfg.get("n")?;
    let big_n: usize = cfg.get("N")?;
    let alpha: f64 = cfg.get("alpha")?;
    let budget: usize = cfg.get("budget")?;
    let bound = strip_bound(n, big_n, alpha)?;
    let mut w = rows();
    w.write_record(["n", "N", "alpha", "seed", "worst_count", "bound_value", "fitted_C", "kind"])?;
    let mut worst_ratio = 0.0f64;
    for i in 0..cfg.get::<u64>("trials")? {
        let s = stream.derive(i);
        let uniform = generate_strip_config(n, big_n, &mut s.derive(0).generator())?;
        let clustered = clustered_config(n, big_n, 5, 0.05, &mut s.derive(1).generator())?;
        for (kind, pts, sub) in [("uniform", &uniform, 2), ("clustered", &clustered, 3)] {
            let (_, count) = worst_strip(pts, alpha, budget, s.derive(sub))?;
            let ratio = count as f64 / bound;
            if kind == "uniform" {
                worst_ratio = worst_ratio.max(ratio);
            }
            w.write_record([
                n.to_string(),
                big_n.to_string(),
                alpha.to_string(),
                i.to_string(),
                count.to_string(),
                bound.to_string(),
                ratio.to_string(),
                kind.to_string(),
            ])?;
        }
    }
    report.header.push(format!("# summary: fitted_C_tilde={worst_ratio}"));
    finish(w)
}

fn hs_net(cfg: &ExperimentConfig, stream: RngStream, report: &mut Report) -> Result<Vec<u8>, Failure> {
    let ledger = load_ledger(cfg, report)?;
    let n: usize = cfg.get("n")?;
    let big_n: usize = cfg.get("N")?;
    let params = NetParams::new(n, cfg.get::<f64>("rho")?)?;
    let sampler = parse_sampler(cfg.raw("sampler").unwrap_or("gaussian"), big_n, n)?;
    let a = sampler.sample(&mut stream.derive(0).generator())?;
    let xi = unit(n, stream.derive(1))?;
    let res = hs_compare(&a, &xi, &params, cfg.get("trials")?, stream.derive(2), &ledger)?;
    report.header.push(format!(
        "# summary: analytic_mean={};mc_mean={};mc_se={};fitted_C1={};fitted_C2={}",
        res.analytic_mean, res.mc_mean, res.mc_std_error, res.fitted_c1, res.fitted_c2
    ));
    let mut out = Vec::new();
    res.write_csv(&mut out)?;
    Ok(out)
}

fn bkappa(cfg: &ExperimentConfig, stream: RngStream, report: &mut Report) -> Result<Vec<u8>, Failure> {
    let kappa: f64 = cfg.get("kappa")?;
    let mut w = rows();
    if cfg.has("norms") {
        let norms: Vec<f64> = cfg.get_list("norms")?;
        let sol = b_kappa(&norms, kappa)?;
        let mut header: Vec<String> = ["n", "kappa", "value"].iter().map(|s| s.to_string()).collect();
        header.extend((1..=norms.len()).map(|i| format!("alpha_{i}")));
        w.write_record(&header)?;
        let mut rec = vec![norms.len().to_string(), kappa.to_string(), sol.value.to_string()];
        rec.extend(sol.alphas.iter().map(|a| a.to_string()));
        w.write_record(&rec)?;
        report.header.push(format!("# summary: constraint_active={}", sol.constraint_active));
    } else {
        let n: usize = cfg.get("n")?;
        let big_n: usize = cfg.get("N")?;
        let name = cfg.raw("sampler").unwrap_or("gaussian");
        let sampler = parse_sampler(name, big_n, n)?;
        let trials: u64 = cfg.get("trials")?;
        let d = b_kappa_deviation(&sampler, kappa, trials, trials, stream)?;
        w.write_record(["n", "N", "kappa", "sampler", "trials", "frequency", "std_error", "hs_mean", "mean_b"])?;
        w.write_record([
            n.to_string(),
            big_n.to_string(),
            kappa.to_string(),
            name.to_string(),
            trials.to_string(),
            d.frequency.to_string(),
            d.std_error.to_string(),
            d.hs_mean.to_string(),
            d.mean_b.to_string(),
        ])?;
    }
    finish(w)
}
