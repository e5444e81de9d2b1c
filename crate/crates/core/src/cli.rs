//! Command-line front end: argument parsing, subcommands and recipe files.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cgle;
use crate::compare::{compare_hop, compare_pi, linspace, BoundaryState, CompareRow};
use crate::error::{Error, Result};
use crate::higher_order::{higher_order_kernels, hop_spectrum, hop_stability, HigherOrderOptions, HopState};
use crate::interaction::{reduce, Reduction, ReductionOptions};
use crate::locked::{
    balanced_cluster_analysis, eps_range, splay_analysis, sweep, synchrony_analysis, track_two_cluster, two_cluster_solve, LockedState,
    NetworkSpec, Selector, SplaySize, StabilityReport, TrackOptions,
};
use crate::model::{ModelDescriptor, OscillatorModel};
use crate::orbit::{find_periodic_orbit, OrbitOptions};
use crate::simulate::{detect_clusters, embed_phase_isostable, random_box, simulate_full, simulate_phase_isostable, simulate_unaveraged, SimMode, SimOptions};

#[derive(Parser, Debug)]
#[command(name = "phaseiso", version, about = "Phase-isostable reduction of coupled oscillator networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Find the limit cycle and print its period and Floquet exponent.
    Orbit(RunConfig),
    /// Emit response functions and interaction functions.
    Reduce(RunConfig),
    /// Existence and stability of a locked state at one ε.
    Locked(RunConfig),
    /// Boundary detection over an ε range.
    Sweep(RunConfig),
    /// Higher-order phase reduction boundaries.
    Hop(RunConfig),
    /// MF-CGLE closed-form boundaries.
    Oracle(RunConfig),
    /// Integrate the full or reduced network.
    Simulate(RunConfig),
    /// Pipeline boundaries against the MF-CGLE closed forms.
    Compare(RunConfig),
    /// Run a JSON recipe `{"command": ..., "args": {...}}`.
    Recipe { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Table {
    Interaction,
    Responses,
    Orbit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Reduced,
    Full,
    Unaveraged,
}

#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// `mfcgl`, `morris_lecar`, or a JSON model descriptor file.
    #[arg(long, default_value = "mfcgl")]
    pub model: String,
    /// Model parameters as `k=v`, repeatable or comma separated.
    #[arg(long, value_delimiter = ',')]
    pub params: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c2: Option<f64>,
    /// `a:b:step` grid of c1 values.
    #[arg(long, allow_hyphen_values = true)]
    pub c1_range: Option<String>,
    /// Orbit and kernel grid size.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long = "N", default_value_t = 2)]
    pub n: usize,
    /// `global` or a whitespace-separated weight matrix file.
    #[arg(long, default_value = "global")]
    pub topology: String,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// `a:b:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub eps_range: Option<String>,
    /// synchrony, antisynchrony, splay, splay-inf, balanced:M, two-cluster:NA.
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, value_enum, default_value = "interaction")]
    pub table: Table,
    #[arg(long, value_enum, default_value = "reduced")]
    pub mode: Mode,
    #[arg(long, default_value_t = 100.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial phases drawn from `a:b`.
    #[arg(long, allow_hyphen_values = true)]
    pub theta_box: Option<String>,
    /// Initial isostables drawn from `a:b`.
    #[arg(long, allow_hyphen_values = true)]
    pub psi_box: Option<String>,
    /// Averaging window `a:b` for the cluster summary (default: last fifth).
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub tol_phase: f64,
    #[arg(long, default_value_t = 0.02)]
    pub tol_psi: f64,
    /// Starting gap for two-cluster continuation.
    #[arg(long, default_value_t = 0.05)]
    pub chi: f64,
    /// Allowed deviation for `compare`.
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Parse, run and return the process exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Orbit(c) => cmd_orbit(&c, out),
        Command::Reduce(c) => cmd_reduce(&c, out),
        Command::Locked(c) => cmd_locked(&c, out),
        Command::Sweep(c) => cmd_sweep(&c, out),
        Command::Hop(c) => cmd_hop(&c, out),
        Command::Oracle(c) => cmd_oracle(&c, out),
        Command::Simulate(c) => cmd_simulate(&c, out),
        Command::Compare(c) => cmd_compare(&c, out, err),
        Command::Recipe { path } => {
            let argv = recipe_argv(&path)?;
            let mut argv_full = vec!["phaseiso".to_string()];
            argv_full.extend(argv);
            let cli = Cli::try_parse_from(argv_full).map_err(|e| Error::Config(e.to_string()))?;
            if matches!(cli.command, Command::Recipe { .. }) {
                return Err(Error::Config("recipes cannot nest".into()));
            }
            dispatch(cli.command, out, err)
        }
    }
}

/// Expand a recipe file into command-line arguments.
pub fn recipe_argv(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("recipe {}: {e}", path.display())))?;
    let command = v.get("command").and_then(Value::as_str).ok_or_else(|| Error::Config("recipe needs a \"command\" string".into()))?;
    let mut argv = vec![command.to_string()];
    if let Some(args) = v.get("args") {
        let obj = args.as_object().ok_or_else(|| Error::Config("recipe \"args\" must be an object".into()))?;
        for (k, val) in obj {
            let flag = format!("--{k}");
            match val {
                Value::Bool(true) => argv.push(flag),
                Value::Bool(false) | Value::Null => {}
                Value::Array(items) => {
                    for it in items {
                        argv.push(flag.clone());
                        argv.push(scalar(it)?);
                    }
                }
                other => {
                    argv.push(flag);
                    argv.push(scalar(other)?);
                }
            }
        }
    }
    Ok(argv)
}

fn scalar(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(Error::Config(format!("recipe value {v} is not a scalar"))),
    }
}

fn emit(c: &RunConfig, out: &mut dyn Write, text: &str) -> Result<()> {
    match &c.out {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("{what} must be a:b, got '{s}'")));
    }
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("{what}: bad number '{t}': {e}")));
    Ok((p(parts[0])?, p(parts[1])?))
}

fn parse_range(s: &str, what: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("{what} must be a:b:step, got '{s}'")));
    }
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("{what}: bad number '{t}': {e}")));
    eps_range(p(parts[0])?, p(parts[1])?, p(parts[2])?)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("--N must be at least 2, got {}", self.n)));
        }
        if let Some(r) = &self.eps_range {
            parse_range(r, "--eps-range")?;
        }
        Ok(())
    }

    pub fn descriptor(&self) -> Result<ModelDescriptor> {
        let mut d = if self.model.ends_with(".json") {
            let text = std::fs::read_to_string(&self.model)?;
            serde_json::from_str::<ModelDescriptor>(&text).map_err(|e| Error::Config(format!("{}: {e}", self.model)))?
        } else {
            ModelDescriptor { model: self.model.clone(), params: BTreeMap::new() }
        };
        for kv in &self.params {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--params entry '{kv}' is not k=v")))?;
            let v: f64 = v.trim().parse().map_err(|e| Error::Config(format!("--params {k}: {e}")))?;
            d.params.insert(k.trim().to_string(), v);
        }
        if let Some(c1) = self.c1 {
            d.params.insert("c1".into(), c1);
        }
        if let Some(c2) = self.c2 {
            d.params.insert("c2".into(), c2);
        }
        Ok(d)
    }

    pub fn model(&self) -> Result<OscillatorModel> {
        self.validate()?;
        self.descriptor()?.build()
    }

    pub fn grid_size(&self, d: &ModelDescriptor) -> usize {
        self.grid.unwrap_or(if d.model == "morris_lecar" { 512 } else { 64 })
    }

    pub fn reduction(&self) -> Result<(OscillatorModel, Reduction)> {
        let model = self.model()?;
        let m = self.grid_size(&model.descriptor);
        let red = reduce(&model, &ReductionOptions::with_grid(m))?;
        Ok((model, red))
    }

    pub fn network(&self, eps: f64) -> Result<NetworkSpec> {
        if self.topology == "global" {
            NetworkSpec::global(self.n, eps)
        } else {
            NetworkSpec::from_file(Path::new(&self.topology), eps)
        }
    }

    fn eps(&self) -> Result<f64> {
        self.eps.ok_or_else(|| Error::Config("--eps is required".into()))
    }

    fn c1_values(&self) -> Result<Vec<f64>> {
        match (&self.c1_range, self.c1) {
            (Some(r), _) => parse_range(r, "--c1-range"),
            (None, Some(c)) => Ok(vec![c]),
            (None, None) => Err(Error::Config("--c1 or --c1-range is required".into())),
        }
    }

    fn c2(&self) -> Result<f64> {
        self.c2.or_else(|| self.descriptor().ok().and_then(|d| d.params.get("c2").copied())).ok_or_else(|| Error::Config("--c2 is required".into()))
    }
}

/// Parsed `--state`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateArg {
    Synchrony,
    Antisynchrony,
    Splay,
    SplayInf,
    Balanced(usize),
    TwoCluster(usize),
}

pub fn parse_state(s: &str) -> Result<StateArg> {
    let bad = || Error::Config(format!("unknown state '{s}'"));
    let (head, tail) = match s.split_once(':') {
        Some((h, t)) => (h, Some(t.parse::<usize>().map_err(|_| bad())?)),
        None => (s, None),
    };
    match (head, tail) {
        ("synchrony", None) => Ok(StateArg::Synchrony),
        ("antisynchrony", None) => Ok(StateArg::Antisynchrony),
        ("splay", None) => Ok(StateArg::Splay),
        ("splay-inf", None) => Ok(StateArg::SplayInf),
        ("balanced", Some(m)) if m >= 1 => Ok(StateArg::Balanced(m)),
        ("two-cluster", Some(na)) if na >= 1 => Ok(StateArg::TwoCluster(na)),
        _ => Err(bad()),
    }
}

impl RunConfig {
    fn state(&self) -> Result<StateArg> {
        parse_state(self.state.as_deref().unwrap_or("synchrony"))
    }
}

fn cmd_orbit(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let model = c.model()?;
    let m = c.grid_size(&model.descriptor);
    let orbit = find_periodic_orbit(&model, &model.guess, model.period_guess, &OrbitOptions { m, ..Default::default() })?;
    let text = match c.format {
        Format::Json => pretty(&orbit.metadata_json()),
        Format::Csv => format!("key,value\nperiod,{:.12e}\nomega,{:.12e}\nkappa,{:.12e}\n", orbit.period, orbit.omega, orbit.kappa),
    };
    emit(c, out, &text)
}

fn cmd_reduce(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let (_, red) = c.reduction()?;
    let text = match c.format {
        Format::Json => pretty(&json!({
            "orbit": red.orbit.metadata_json(),
            "response": red.response.to_json(),
            "interaction": red.interaction.to_json(),
            "kernel_tail": red.kernels.tail,
        })),
        Format::Csv => match c.table {
            Table::Interaction => red.interaction.to_csv(red.orbit.m()),
            Table::Responses => red.response.to_csv(),
            Table::Orbit => red.orbit.to_csv(),
        },
    };
    emit(c, out, &text)
}

fn locked_rows(results: &[(LockedState, StabilityReport)]) -> String {
    let mut s = String::from("class,Omega,psi,max_re,max_im,verdict,residual\n");
    for (st, rep) in results {
        let mut psi: Vec<f64> = Vec::new();
        for &p in &st.psi {
            if !psi.iter().any(|q| (q - p).abs() <= 1e-12 * p.abs().max(1.0)) {
                psi.push(p);
            }
        }
        let psi = psi.iter().map(|p| format!("{p:.12e}")).collect::<Vec<_>>().join(";");
        let label = match st.class {
            crate::locked::StateClass::TwoCluster { chi, .. } => format!("{}[chi={chi:.12e}]", st.class.label()),
            _ => st.class.label(),
        };
        s.push_str(&format!(
            "{label},{:.12e},{psi},{:.12e},{:.12e},{},{:.3e}\n",
            st.big_omega,
            rep.max_re,
            rep.max_im,
            format!("{:?}", rep.verdict).to_lowercase(),
            st.residual
        ));
    }
    s
}

fn cmd_locked(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    c.validate()?;
    let eps = c.eps()?;
    let state = c.state()?;
    let (_, red) = c.reduction()?;
    let h = &red.interaction;
    let results: Vec<(LockedState, StabilityReport)> = match state {
        StateArg::Synchrony => vec![synchrony_analysis(&c.network(eps)?, h)?],
        StateArg::Antisynchrony => vec![splay_analysis(SplaySize::Finite(2), h, eps)?],
        StateArg::Splay => vec![splay_analysis(SplaySize::Finite(c.n), h, eps)?],
        StateArg::SplayInf => vec![splay_analysis(SplaySize::Infinite, h, eps)?],
        StateArg::Balanced(m) => {
            if !c.n.is_multiple_of(m) {
                return Err(Error::Config(format!("N = {} is not divisible into {m} clusters", c.n)));
            }
            vec![balanced_cluster_analysis(m, c.n / m, h, eps)?]
        }
        StateArg::TwoCluster(na) => {
            if na >= c.n {
                return Err(Error::Config(format!("two-cluster:{na} needs N > {na}")));
            }
            two_cluster_solve(na, c.n - na, h, eps)?.into_iter().filter_map(|r| r.ok()).collect()
        }
    };
    let text = match c.format {
        Format::Json => pretty(&json!(results.iter().map(|(s, r)| json!({"state": s, "report": r})).collect::<Vec<_>>())),
        Format::Csv => locked_rows(&results),
    };
    emit(c, out, &text)
}

fn cmd_sweep(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    c.validate()?;
    let eps = parse_range(c.eps_range.as_deref().ok_or_else(|| Error::Config("--eps-range is required".into()))?, "--eps-range")?;
    let state = c.state()?;
    let (_, red) = c.reduction()?;
    let h = &red.interaction;
    let sel = match state {
        StateArg::Synchrony => Selector::Synchrony(c.network(0.0)?),
        StateArg::Antisynchrony => Selector::Splay(SplaySize::Finite(2)),
        StateArg::Splay => Selector::Splay(SplaySize::Finite(c.n)),
        StateArg::SplayInf => Selector::Splay(SplaySize::Infinite),
        StateArg::Balanced(m) => {
            if !c.n.is_multiple_of(m) {
                return Err(Error::Config(format!("N = {} is not divisible into {m} clusters", c.n)));
            }
            Selector::Balanced { clusters: m, size: c.n / m }
        }
        StateArg::TwoCluster(na) => {
            if na >= c.n {
                return Err(Error::Config(format!("two-cluster:{na} needs N > {na}")));
            }
            let (start, stop) = (eps[0], *eps.last().unwrap());
            let (pts, bifs) = track_two_cluster(na, c.n - na, h, start, stop, c.chi, &TrackOptions::default());
            if pts.is_empty() {
                return Err(Error::NoLockedState(f64::NAN));
            }
            let text = match c.format {
                Format::Json => pretty(&json!({"branch": pts, "bifurcations": bifs})),
                Format::Csv => {
                    let mut s = String::from("kind,eps,chi,psi_a,psi_b,det,max_re,max_im\n");
                    for p in &pts {
                        s.push_str(&format!(
                            "point,{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                            p.eps, p.chi, p.psi[0], p.psi[1], p.det, p.max_re, p.max_im
                        ));
                    }
                    for b in &bifs {
                        s.push_str(&format!("{},{:.12e},,,,,,{:.12e}\n", b.kind.label(), b.eps, b.frequency));
                    }
                    s
                }
            };
            return emit(c, out, &text);
        }
    };
    let res = sweep(&sel, h, &eps);
    let text = match c.format {
        Format::Json => pretty(&serde_json::to_value(&res)?),
        Format::Csv => res.to_csv(),
    };
    emit(c, out, &text)
}

fn hop_state(s: StateArg) -> Result<HopState> {
    match s {
        StateArg::Synchrony => Ok(HopState::Synchrony),
        StateArg::Antisynchrony => Ok(HopState::Antisynchrony),
        StateArg::Splay | StateArg::SplayInf => Ok(HopState::Splay),
        _ => Err(Error::Config("higher-order stability covers synchrony, antisynchrony and splay".into())),
    }
}

fn cmd_hop(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    c.validate()?;
    let state = c.state()?;
    let hs = hop_state(state)?;
    let order = c.order.unwrap_or(2);
    if !(1..=3).contains(&order) {
        return Err(Error::Order(order));
    }
    let n = match state {
        StateArg::Antisynchrony => 2,
        StateArg::SplayInf => 64,
        _ => c.n,
    };
    let c1s: Vec<Option<f64>> = if c.c1_range.is_some() { c.c1_values()?.into_iter().map(Some).collect() } else { vec![c.c1] };
    let mut rows: Vec<Value> = Vec::new();
    let mut csv = String::from("c1,state,order,eps\n");
    for c1 in c1s {
        let mut cc = c.clone();
        cc.c1 = c1;
        let (_, red) = cc.reduction()?;
        let q = higher_order_kernels(&red.kernels, &HigherOrderOptions::default())?;
        let spec = hop_spectrum(&q, hs, n)?;
        let roots = spec.boundaries(order)?;
        let tag = c1.map(|v| format!("{v:.12e}")).unwrap_or_default();
        for r in &roots {
            csv.push_str(&format!("{tag},{},{order},{r:.12e}\n", state_name(state)));
        }
        let mut row = json!({"c1": c1, "state": state_name(state), "order": order, "boundaries": roots});
        if let Some(eps) = c.eps {
            let rep = hop_stability(&q, hs, order, n, eps)?;
            csv.push_str(&format!("{tag},{},{order},stability@{eps:.6e}:{}\n", state_name(state), format!("{:?}", rep.verdict).to_lowercase()));
            row["report"] = serde_json::to_value(&rep)?;
        }
        rows.push(row);
    }
    let text = match c.format {
        Format::Json => pretty(&json!(rows)),
        Format::Csv => csv,
    };
    emit(c, out, &text)
}

fn state_name(s: StateArg) -> String {
    match s {
        StateArg::Synchrony => "synchrony".into(),
        StateArg::Antisynchrony => "antisynchrony".into(),
        StateArg::Splay => "splay".into(),
        StateArg::SplayInf => "splay-inf".into(),
        StateArg::Balanced(m) => format!("balanced:{m}"),
        StateArg::TwoCluster(na) => format!("two-cluster:{na}"),
    }
}

fn cmd_oracle(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let c2 = c.c2()?;
    let sets = c.c1_values()?.into_iter().map(|c1| cgle::exact_boundaries(c1, c2)).collect::<Result<Vec<_>>>()?;
    let text = match c.format {
        Format::Json => pretty(&serde_json::to_value(&sets)?),
        Format::Csv => {
            let mut s = String::from("c1,c2,curve,eps\n");
            for b in &sets {
                for (name, e) in b.curves() {
                    s.push_str(&format!("{:.12e},{:.12e},{name},{e:.12e}\n", b.c1, b.c2));
                }
            }
            s
        }
    };
    emit(c, out, &text)
}

fn cmd_simulate(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    c.validate()?;
    let eps = c.eps()?;
    let net = c.network(eps)?;
    let n = net.n;
    let (model, red) = c.reduction()?;
    let theta_box = c.theta_box.as_deref().map(|s| parse_pair(s, "--theta-box")).transpose()?.unwrap_or((0.0, 2.0 * PI));
    let psi_box = c.psi_box.as_deref().map(|s| parse_pair(s, "--psi-box")).transpose()?.unwrap_or((0.0, 0.0));
    let seed = c.seed.unwrap_or(0);
    let (theta0, psi0) = random_box(n, theta_box, psi_box, seed);
    let opts = SimOptions { seed: Some(seed), ..Default::default() };
    let traj = match c.mode {
        Mode::Reduced => simulate_phase_isostable(&red.interaction.trimmed(1e-10), &net, &theta0, &psi0, c.t_end, c.dt, &opts)?,
        Mode::Unaveraged => simulate_unaveraged(&red.kernels, &net, &theta0, &psi0, c.t_end, c.dt, &opts)?,
        Mode::Full => {
            let x0 = theta0
                .iter()
                .zip(&psi0)
                .map(|(&th, &ps)| embed_phase_isostable(&model, &red.orbit, &red.response, th, ps))
                .collect::<Result<Vec<_>>>()?;
            simulate_full(&model, &net, &x0, c.t_end, c.dt, &opts)?
        }
    };
    let window = match &c.window {
        Some(w) => parse_pair(w, "--window")?,
        None => (0.8 * c.t_end, c.t_end),
    };
    let summary = detect_clusters(&traj, window, c.tol_phase, c.tol_psi);
    if let Some(p) = &c.out {
        let body = match c.format {
            Format::Csv => traj.to_csv(),
            Format::Json => pretty(&serde_json::to_value(&traj)?),
        };
        std::fs::write(p, body)?;
    }
    let mode = match traj.meta.mode {
        SimMode::Full => "full",
        SimMode::Reduced => "reduced",
        SimMode::Unaveraged => "unaveraged",
    };
    let text = pretty(&json!({
        "mode": mode,
        "n": n,
        "eps": eps,
        "seed": seed,
        "t_end": c.t_end,
        "window": [window.0, window.1],
        "clusters": summary.sizes(),
        "class": format!("{:?}", summary.class),
        "psi": summary.psi,
        "gaps": summary.gaps,
    }));
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn boundary_state(s: StateArg, n: usize) -> Result<BoundaryState> {
    match s {
        StateArg::Synchrony => Ok(BoundaryState::Synchrony),
        StateArg::Antisynchrony => Ok(BoundaryState::Antisynchrony),
        StateArg::Splay => Ok(BoundaryState::Splay(SplaySize::Finite(n.max(3)))),
        StateArg::SplayInf => Ok(BoundaryState::Splay(SplaySize::Infinite)),
        _ => Err(Error::Config("compare covers synchrony, antisynchrony and splay".into())),
    }
}

fn cmd_compare(c: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    c.validate()?;
    let c2 = c.c2()?;
    let state = c.state()?;
    let c1s = if c.c1_range.is_some() || c.c1.is_some() { c.c1_values()? } else { linspace(-3.0, 3.0, 200) };
    let state_b = match c.order {
        None | Some(1) => Some(boundary_state(state, c.n)?),
        Some(_) => None,
    };
    let hs = if c.order.unwrap_or(1) > 1 { Some(hop_state(state)?) } else { None };
    let one = |c1: f64| -> Result<CompareRow> {
        let mut cc = c.clone();
        cc.model = "mfcgl".into();
        cc.c1 = Some(c1);
        cc.c2 = Some(c2);
        let (_, red) = cc.reduction()?;
        match (state_b, hs) {
            (Some(sb), _) => compare_pi(sb, c1, c2, &red.interaction.trimmed(1e-12), &linspace(-1.5, 0.999, 500)),
            (None, Some(hs)) => {
                let q = higher_order_kernels(&red.kernels, &HigherOrderOptions::default())?;
                let n = match state {
                    StateArg::Antisynchrony => 2,
                    StateArg::SplayInf => 64,
                    _ => c.n.max(3),
                };
                compare_hop(&q, hs, c.order.unwrap_or(2), n, c1, c2, -10.0, 10.0)
            }
            _ => unreachable!(),
        }
    };
    let rows: Vec<CompareRow> = c1s.par_iter().map(|&c1| one(c1)).collect::<Result<_>>()?;
    let max_dev = rows.iter().map(CompareRow::max_deviation).fold(0.0, f64::max);
    let tol = c.tol.unwrap_or(if c.order.unwrap_or(1) > 1 { 1e-4 } else { 1e-5 });
    let text = match c.format {
        Format::Json => pretty(&json!({"rows": rows, "max_deviation": max_dev, "tolerance": tol})),
        Format::Csv => {
            let mut s = String::from("c1,c2,state,oracle,pipeline,deviation\n");
            for r in &rows {
                for m in &r.matches {
                    let p = m.pipeline.map(|v| format!("{v:.12e}")).unwrap_or_default();
                    s.push_str(&format!("{:.12e},{:.12e},{},{:.12e},{p},{:.6e}\n", r.c1, r.c2, r.state, m.oracle, m.deviation));
                }
            }
            s.push_str(&format!("# max_deviation={max_dev:.6e}\n"));
            s
        }
    };
    emit(c, out, &text)?;
    writeln!(err, "max deviation {max_dev:.3e} (tolerance {tol:.1e})")?;
    if max_dev > tol {
        return Err(Error::Numerical(format!("pipeline deviates from the closed form by {max_dev:.3e}")));
    }
    Ok(())
}
