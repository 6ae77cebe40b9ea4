use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cea::clsp::FitConfig;
use cea::debias::{remove_discrimination, DebiasConfig};
use cea::fit::{fit_network, FittedNetwork};
use cea::model_file::ModelFile;
use cea::synth::{self, FiniteDataConfig};
use cea::unfairness::{approx_cumulative_unfairness, prioritize_fitted};
use cea::{Assignment, Cbn, CausalDag, Error, NodeId};

use crate::error::{CliError, CliResult};
use crate::output::{num, write_atomic, write_csv};

pub fn load_model(path: &Path) -> CliResult<Cbn> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(ModelFile::parse(&text)?.to_cbn()?)
}

/// Rejects tables with a zero entry, naming the first offending row.
pub fn require_positive(cbn: &Cbn) -> CliResult<()> {
    let dag = cbn.dag();
    for cpt in cbn.cpts() {
        if let Some(r) = cpt.first_zero_row() {
            let given: Vec<String> = cpt
                .parents()
                .iter()
                .zip(cpt.row_values(r))
                .map(|(&p, v)| format!("{}={}", dag.name(p), dag.node(p).labels[v]))
                .collect();
            return Err(Error::Positivity(format!(
                "table of `{}` has a zero entry in row [{}]",
                dag.name(cpt.child()),
                given.join(", ")
            ))
            .into());
        }
    }
    Ok(())
}

/// Parses `NODE=LABEL`.
pub fn parse_setting(dag: &CausalDag, text: &str) -> CliResult<(NodeId, usize)> {
    let (name, label) = text
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("expected NODE=LABEL, got `{text}`")))?;
    let id = dag.id(name.trim())?;
    Ok((id, dag.value_index(id, label.trim())?))
}

pub fn parse_assignment(dag: &CausalDag, settings: &[String]) -> CliResult<Assignment> {
    let mut a = Assignment::new();
    for s in settings {
        let (n, v) = parse_setting(dag, s)?;
        if a.insert(n, v).is_some() {
            return Err(CliError::Usage(format!("`{}` is set twice", dag.name(n))));
        }
    }
    Ok(a)
}

fn input_names(dag: &CausalDag, fitted: &FittedNetwork, child: NodeId) -> Vec<String> {
    let flows = fitted.flows.get(child).expect("non-root");
    let group = |g: &[NodeId]| g.iter().map(|&p| dag.name(p)).collect::<Vec<_>>().join("+");
    flows
        .fair
        .iter()
        .map(|t| format!("fair({})", group(t.group())))
        .chain(flows.unfair.iter().map(|t| group(t.group())))
        .collect()
}

fn unconverged(fitted: &FittedNetwork) -> Vec<String> {
    let dag = fitted.cbn.dag();
    fitted.models().filter(|m| !m.converged).map(|m| dag.name(m.child).to_string()).collect()
}

pub struct FitArgs<'a> {
    pub model: &'a Path,
    pub no_scaling: bool,
    pub seed: u64,
    pub out: Option<&'a Path>,
}

pub fn fit(args: FitArgs) -> CliResult<String> {
    let cbn = load_model(args.model)?;
    require_positive(&cbn)?;
    let config = FitConfig {
        use_scaling: !args.no_scaling,
        seed: args.seed,
        ..FitConfig::default()
    };
    let fitted = fit_network(&cbn, &config)?;
    let dag = cbn.dag();
    let mut text = String::new();
    let mut rows = Vec::new();
    for m in fitted.models() {
        let names = input_names(dag, &fitted, m.child);
        writeln!(text, "{}  mse={:.6e}", dag.name(m.child), m.mse).unwrap();
        for (name, w) in names.iter().zip(m.weights()) {
            writeln!(text, "  {name:<24} {w:.6}").unwrap();
            rows.push(vec![dag.name(m.child).to_string(), name.clone(), num(w), num(m.mse)]);
        }
    }
    if let Some(out) = args.out {
        write_csv(out, &["node", "input", "weight", "mse"], rows)?;
    }
    let bad = unconverged(&fitted);
    if !bad.is_empty() {
        return Err(CliError::NotConverged(format!("fit of {}", bad.join(", "))));
    }
    Ok(text)
}

pub struct PrioritizeArgs<'a> {
    pub model: &'a Path,
    pub sensitive: &'a [String],
    pub decision: &'a str,
    pub wu: f64,
    pub wp: f64,
    pub seed: u64,
    pub out: Option<&'a Path>,
}

pub fn prioritize(args: PrioritizeArgs) -> CliResult<String> {
    let cbn = load_model(args.model)?;
    require_positive(&cbn)?;
    let dag = cbn.dag();
    let s = parse_assignment(dag, args.sensitive)?;
    let y = parse_assignment(dag, &[args.decision.to_string()])?;
    let config = FitConfig {
        seed: args.seed,
        ..FitConfig::default()
    };
    let fitted = fit_network(&cbn, &config)?;
    let bad = unconverged(&fitted);
    let p = prioritize_fitted(fitted, &s, &y, args.wu, args.wp)?;
    let mut text = format!("approximate cumulative unfairness {:.6}\n", p.c_approx);
    writeln!(text, "{:<6} {:<10} {:>10} {:>10} {:>10}", "rank", "edge", "U_e", "potential", "priority").unwrap();
    let mut rows = Vec::new();
    for (i, e) in p.entries.iter().enumerate() {
        writeln!(
            text,
            "{:<6} {:<10} {:>10.6} {:>10.6} {:>10.6}",
            i + 1,
            e.edge,
            e.unfairness,
            e.potential,
            e.priority
        )
        .unwrap();
        rows.push(vec![
            e.edge.clone(),
            num(e.unfairness),
            num(e.potential),
            num(e.priority),
            (i + 1).to_string(),
        ]);
    }
    if let Some(out) = args.out {
        write_csv(out, &["edge", "U_e", "potential", "priority", "rank"], rows)?;
    }
    if !bad.is_empty() {
        return Err(CliError::NotConverged(format!("fit of {}", bad.join(", "))));
    }
    Ok(text)
}

pub struct DebiasArgs<'a> {
    pub model: &'a Path,
    pub utility_weight: f64,
    pub decision: Option<&'a str>,
    pub seed: u64,
    pub out: &'a Path,
    pub model_out: Option<&'a Path>,
}

/// Last node in topological order at its last value.
fn default_decision(dag: &CausalDag) -> Assignment {
    let y = *dag.topological_order().last().expect("non-empty graph");
    Assignment::new().with(y, dag.cardinality(y) - 1)
}

pub fn debias(args: DebiasArgs) -> CliResult<String> {
    let cbn = load_model(args.model)?;
    require_positive(&cbn)?;
    let dag = cbn.dag().clone();
    let y = match args.decision {
        Some(d) => parse_assignment(&dag, &[d.to_string()])?,
        None => default_decision(&dag),
    };
    let config = DebiasConfig {
        utility_weight: args.utility_weight,
        fit: FitConfig {
            seed: args.seed,
            ..FitConfig::default()
        },
        ..DebiasConfig::default()
    };
    let result = remove_discrimination(&cbn, &config)?;

    let header: Vec<&str> = dag.nodes().iter().map(|n| n.name.as_str()).chain(["probability"]).collect();
    let rows = cbn.states().zip(&result.new_joint).map(|(state, &p)| {
        state
            .iter()
            .enumerate()
            .map(|(i, &v)| dag.node(NodeId(i)).labels[v].clone())
            .chain([num(p)])
            .collect()
    });
    write_csv(args.out, &header, rows)?;
    if let Some(path) = args.model_out {
        let debiased = result.fitted.approx_cbn()?;
        write_atomic(path, ModelFile::from_cbn(&debiased).to_json().as_bytes())?;
    }

    let sensitive = dag.sensitive_nodes();
    let mut max_delta: f64 = 0.0;
    for s in Assignment::enumerate(&dag, &sensitive) {
        if s.nodes().contains(&y.nodes()[0]) {
            continue;
        }
        let before = approx_cumulative_unfairness(&result.initial, &s, &y)?.value;
        let after = approx_cumulative_unfairness(&result.fitted, &s, &y)?.value;
        max_delta = max_delta.max((after - before).abs());
    }
    let (u0, u1) = (result.unfairness_before(), result.unfairness_after());
    let mut text = String::new();
    if (u0 - u1).abs() <= 1e-6 {
        writeln!(text, "no change").unwrap();
    }
    writeln!(text, "sum of unfair-edge weights: {u0:.6} -> {u1:.6}").unwrap();
    writeln!(text, "max |change in approximate cumulative unfairness| for {}: {max_delta:.6}", y.display(&dag)).unwrap();
    writeln!(text, "joint renormalization delta: {:.3e}", result.renormalization_delta).unwrap();
    if !result.converged {
        return Err(CliError::NotConverged("discrimination removal".into()));
    }
    Ok(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Mse,
    Finite,
    Probe,
}

pub const PROBE_POINTS: usize = 21;

pub fn experiment(which: Experiment, seed: u64, outdir: &Path) -> CliResult<String> {
    fs::create_dir_all(outdir).map_err(|e| CliError::io(outdir, e))?;
    match which {
        Experiment::Mse => {
            let records = synth::run_mse_study(seed)?;
            let header = [
                "combo", "theta_R_J", "theta_G_J", "theta_C_J", "theta_E_J", "theta_T_J", "theta_R_T", "theta_A_T",
                "theta_G_T", "e_J", "e_J_unscaled", "delta_J", "w_fair", "w_R", "w_G",
            ];
            let rows = records.iter().map(|r| {
                let mut row = vec![r.combo.to_string()];
                row.extend(r.theta_j.iter().chain(&r.theta_t).map(|&x| num(x)));
                row.push(num(r.e_j));
                row.push(num(r.e_j_unscaled));
                row.push(r.delta_j.map(num).unwrap_or_default());
                row.extend(r.weights.iter().map(|&w| num(w)));
                row
            });
            let path = outdir.join("mse_study.csv");
            write_csv(&path, &header, rows)?;
            Ok(format!("{} combinations -> {}\n", records.len(), path.display()))
        }
        Experiment::Finite => {
            let config = FiniteDataConfig {
                seed,
                ..FiniteDataConfig::default()
            };
            let curves = synth::run_finite_data_study(&config)?;
            let rows = curves.iter().flat_map(|c| {
                c.points
                    .iter()
                    .map(move |&(m, e)| vec![c.dist.to_string(), c.seed.to_string(), m.to_string(), num(e)])
            });
            let path = outdir.join("finite_data.csv");
            write_csv(&path, &["dist", "seed", "m", "E"], rows)?;
            Ok(format!("{} curves -> {}\n", curves.len(), path.display()))
        }
        Experiment::Probe => {
            let probe = synth::input_correlation_probe(&synth::unit_sweep(PROBE_POINTS))?;
            let rows = probe
                .points
                .iter()
                .map(|p| vec![num(p.lambda), num(p.interventional), num(p.flow)]);
            let path = outdir.join("correlation_probe.csv");
            write_csv(&path, &["lambda", "interventional", "flow"], rows)?;
            Ok(format!(
                "slope of interventional {:.4}, slope of flow {:.4} -> {}\n",
                probe.slope_interventional,
                probe.slope_flow,
                path.display()
            ))
        }
    }
}
