use clap::{Args, Parser, Subcommand};
use g2sym::fhn::{self, Diagram, FhnParams, FhnSolution};
use g2sym::multimoment::{self, HopfPair};
use g2sym::quat::Quaternion;
use g2sym::tracer::{self, BsProfile, FhnProfile, FibrationOutcome, Profile};
use g2sym::trisymplectic::{self as tri, BuiltinT, M3};
use g2sym::{g2_linear, Error};
use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "g2sym", version, about = "Cohomogeneity-two G2 structures with T²×SU(2) symmetry")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the φ₀ and ∗φ₀ coefficient tables as CSV.
    VerifyG2Tables,
    /// Integrate the FHN system from the singular orbit; CSV on stdout.
    SolveFhn(SolveArgs),
    /// Multi-moment maps at a point, as JSON.
    Moments(MomentsArgs),
    /// Trace associative (u sin θ) or coassociative (v cos θ) level sets; CSV on stdout.
    Trace {
        #[command(flatten)]
        src: ProfileArgs,
        #[arg(long, value_parser = ["assoc", "coassoc"])]
        kind: String,
        #[arg(long, allow_hyphen_values = true)]
        level: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Check whether (θ, t) ↦ (u sin θ, v cos θ) gives a global fibration.
    FibrationTest {
        #[command(flatten)]
        src: ProfileArgs,
    },
    /// Trace several levels and write CSV (and optionally SVG).
    Render {
        #[command(flatten)]
        src: ProfileArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mu_levels: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        nu_levels: Vec<f64>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Integrate the τ matrix ODE; CSV on stdout.
    TauFlow {
        /// identity | scaled:a,b  (T = (a + bR)·Id); an optional "builtin:" prefix is accepted.
        #[arg(long = "T", default_value = "identity")]
        t_path: String,
        /// τ(R₀), nine numbers row by row.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        tau0: Vec<f64>,
        #[arg(long = "R0", allow_hyphen_values = true)]
        r0: f64,
        #[arg(long = "R1", allow_hyphen_values = true)]
        r1: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Finite-difference step for the closedness column.
        #[arg(long, default_value_t = 1e-4)]
        h: f64,
    },
}

#[derive(Args, Clone, Default)]
struct SolveArgs {
    #[arg(long, allow_hyphen_values = true)]
    c1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<f64>,
    /// delta | one-su2 | kmn:m,n | none
    #[arg(long)]
    diagram: Option<String>,
    /// Series parameters at the singular orbit (comma separated; empty = derived from c1).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Flat key = value file with the same keys as the flags (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Use the Bryant–Salamon profile in the radius r with this c instead of an FHN solve.
    #[arg(long)]
    bs: Option<f64>,
    #[arg(long, default_value_t = 5.0)]
    r_max: f64,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct MomentsArgs {
    /// CSV written by solve-fhn (columns t,a,b,adot,bdot,...).
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    c1: f64,
    #[arg(long, allow_hyphen_values = true)]
    c2: f64,
    #[arg(long)]
    diagram: String,
    /// Unit quaternion w,x,y,z.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q: Vec<f64>,
    #[arg(long)]
    t: f64,
}

type AnyResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn read_config(path: &PathBuf) -> AnyResult<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Io(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

struct Solve {
    params: FhnParams,
    alpha: Vec<f64>,
    t_end: f64,
    tol: f64,
}

impl SolveArgs {
    fn resolve(&self) -> AnyResult<Solve> {
        let cfg = match &self.config {
            Some(p) => read_config(p)?,
            None => HashMap::new(),
        };
        let num = |flag: Option<f64>, key: &str| -> AnyResult<Option<f64>> {
            match (flag, cfg.get(key)) {
                (Some(v), _) => Ok(Some(v)),
                (None, Some(s)) => Ok(Some(s.parse().map_err(|_| Error::Io(format!("bad value for {key}: {s}")))?)),
                _ => Ok(None),
            }
        };
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| Error::Io(format!("missing --{key}")));
        let c1 = need(num(self.c1, "c1")?, "c1")?;
        let c2 = need(num(self.c2, "c2")?, "c2")?;
        let diagram: Diagram = self.diagram.clone().or_else(|| cfg.get("diagram").cloned()).ok_or_else(|| Error::Io("missing --diagram".into()))?.parse()?;
        let alpha = match (&self.alpha, cfg.get("alpha")) {
            (Some(a), _) => a.clone(),
            (None, Some(s)) if !s.is_empty() => s.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>()?,
            _ => Vec::new(),
        };
        Ok(Solve {
            params: FhnParams::new(c1, c2, diagram)?,
            alpha,
            t_end: num(self.t_end, "t-end")?.unwrap_or(2.0),
            tol: num(self.tol, "tol")?.unwrap_or(1e-10),
        })
    }

    fn solve(&self) -> AnyResult<FhnSolution> {
        let s = self.resolve()?;
        Ok(fhn::solve_from_singular_orbit(&s.params, &s.alpha, s.t_end, s.tol)?)
    }
}

fn with_profile<R>(src: &ProfileArgs, f: impl FnOnce(&dyn Profile) -> AnyResult<R>) -> AnyResult<R> {
    match src.bs {
        Some(c) => f(&BsProfile { c, r_max: src.r_max }),
        None => {
            let sol = src.solve.solve()?;
            f(&FhnProfile::new(&sol))
        }
    }
}

fn quaternion(v: &[f64], name: &str) -> AnyResult<Quaternion> {
    match v {
        [w, x, y, z] => Ok(Quaternion::new(*w, *x, *y, *z)),
        _ => Err(Error::Io(format!("--{name} needs four numbers w,x,y,z")).into()),
    }
}

fn read_solution_csv(path: &PathBuf, params: &FhnParams) -> AnyResult<FhnSolution> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    let col = |name: &str| header.iter().position(|h| *h == name).ok_or_else(|| Error::Io(format!("column {name} missing")));
    let idx = [col("t")?, col("a")?, col("b")?, col("adot")?, col("bdot")?];
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let cells: Vec<f64> = line.split(',').map(|c| c.trim().parse::<f64>()).collect::<std::result::Result<_, _>>()?;
        rows.push(idx.map(|i| cells[i]));
    }
    Ok(FhnSolution::from_samples(params, &rows)?)
}

fn run(cli: Cli) -> AnyResult<()> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.cmd {
        Cmd::VerifyG2Tables => {
            writeln!(out, "form,indices,coefficient")?;
            let rows = [("phi0", g2_linear::standard_phi0().table()), ("star_phi0", g2_linear::standard_star_phi0().table())];
            for (name, table) in rows {
                for (idx, c) in table {
                    let idx: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
                    writeln!(out, "{name},{},{c}", idx.join(" "))?;
                }
            }
        }
        Cmd::SolveFhn(args) => {
            let sol = args.solve()?;
            writeln!(out, "t,a,b,adot,bdot,H,Lambda")?;
            for s in sol.samples() {
                let h = fhn::hamiltonian(&s, &sol.params).unwrap_or(f64::NAN);
                let l = fhn::lambda(s.a, s.b, &sol.params);
                writeln!(out, "{},{},{},{},{},{},{}", s.t, s.a, s.b, s.adot(), s.bdot(), h, l)?;
            }
            if let fhn::EndReason::ConeExit(t) = sol.end {
                eprintln!("trajectory left the cone at t = {t}");
            }
        }
        Cmd::Moments(m) => {
            let params = FhnParams::new(m.c1, m.c2, m.diagram.parse()?)?;
            let sol = read_solution_csv(&m.solution, &params)?;
            let pair: HopfPair = multimoment::hopf_pair(quaternion(&m.p, "p")?, quaternion(&m.q, "q")?)?;
            let v = multimoment::moment_values(&pair, m.t, &sol)?;
            let json = serde_json::json!({
                "nu": v.nu, "theta1": v.theta1, "theta2": v.theta2, "mu": v.mu, "eta": v.eta,
            });
            writeln!(out, "{json}")?;
        }
        Cmd::Trace { src, kind, level, step } => with_profile(&src, |p| {
            let curves = if kind == "assoc" { tracer::trace_associative(p, level, step)? } else { tracer::trace_coassociative(p, level, step)? };
            writeln!(out, "curve_id,kind,level,theta,t")?;
            for (id, c) in curves.iter().enumerate() {
                for q in &c.points {
                    writeln!(out, "{id},{},{},{},{}", c.kind, tracer::fmt12(c.level), tracer::fmt12(q.theta), tracer::fmt12(q.t))?;
                }
            }
            for (id, c) in curves.iter().enumerate() {
                eprintln!("curve {id}: ends {}/{}, topology {}, singular fibres {:?}", c.endpoints[0], c.endpoints[1], c.topology, c.singular_fibres);
            }
            Ok(())
        })?,
        Cmd::FibrationTest { src } => with_profile(&src, |p| {
            let rep = tracer::alpha_fibration_test(p)?;
            match rep.outcome {
                FibrationOutcome::GlobalFibration => writeln!(out, "global_fibration")?,
                FibrationOutcome::SplitRequired { u_minus, u_plus, v_minus, v_plus } => {
                    writeln!(out, "split_required u_minus={u_minus} u_plus={u_plus} v_minus={v_minus} v_plus={v_plus}")?
                }
            }
            writeln!(out, "min_jacobian={} v_flipped={}", rep.min_jacobian, rep.v_flipped)?;
            Ok(())
        })?,
        Cmd::Render { src, mu_levels, nu_levels, svg, csv, step } => with_profile(&src, |p| {
            let mut csv_out: Box<dyn Write> = match &csv {
                Some(path) => Box::new(BufWriter::new(File::create(path)?)),
                None => Box::new(io::stdout()),
            };
            let mut svg_out = svg.as_ref().map(File::create).transpose()?.map(BufWriter::new);
            let curves = tracer::render_levelsets(p, &mu_levels, &nu_levels, step, &mut *csv_out, svg_out.as_mut().map(|w| w as &mut dyn Write))?;
            csv_out.flush()?;
            eprintln!("{} curves", curves.len());
            Ok(())
        })?,
        Cmd::TauFlow { t_path, tau0, r0, r1, tol, h } => {
            let path: BuiltinT = t_path.trim_start_matches("builtin:").parse()?;
            if tau0.len() != 9 {
                return Err(Error::Io(format!("--tau0 needs 9 numbers, got {}", tau0.len())).into());
            }
            let tau0 = M3::from_row_slice(&tau0);
            let traj = tri::integrate_tau(&path, &tau0, (r0, r1), tol)?;
            writeln!(out, "R,tau11,tau12,tau13,tau21,tau22,tau23,tau31,tau32,tau33,det_tau,closedness_residual")?;
            for s in traj.samples() {
                let res = (0..3).map(|i| tri::closedness_residual_triple(&traj, i, s.r, h)).collect::<g2sym::Result<Vec<f64>>>();
                let res = res.map(|v| v.into_iter().fold(0.0, f64::max)).unwrap_or(f64::NAN);
                let cells: Vec<String> = s.tau.transpose().iter().map(|x| x.to_string()).collect();
                writeln!(out, "{},{},{},{}", s.r, cells.join(","), s.tau.determinant(), res)?;
            }
            if let Some(r) = traj.singular_at {
                eprintln!("det tau reached 0 at R = {r}; trajectory truncated");
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
