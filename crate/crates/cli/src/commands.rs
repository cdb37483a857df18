//! One function per subcommand. Each writes its files into the output
//! directory and returns the text summary printed to stdout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use psfourier::dimension::{estimate_from_shells, ShellDistances};
use psfourier::fourier::{
    decay_scan, default_directions, grid_values, select_exponent, sweep_from_grid, FrequencySpec, RadiusLadder,
    SampleMode,
};
use psfourier::holonomy::{linearization_suite, property_suite};
use psfourier::measure::{
    group_conformality_residual, patterson_orbit_measure, resolution, synthetic, unstable_conditional, AtomicMeasure,
    PsConstruction, PsSettings,
};
use psfourier::nonconc::{affine_profile, NonConcSettings};
use psfourier::schottky::SchottkyGroup;

use crate::config::{Construction, ExperimentConfig, Mode, SourceConfig};
use crate::groupfile::{parse_group, parse_measure, write_measure};
use crate::output::{header, loglog_svg, Cell, Csv, OutDir};
use crate::CliError;

pub struct RunOptions {
    pub out: PathBuf,
    pub svg: bool,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
    out: OutDir,
    svg: bool,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a ExperimentConfig, opts: &RunOptions) -> Result<Self, CliError> {
        Ok(Ctx {
            cfg,
            hash: cfg.hash(),
            out: OutDir::create(&opts.out)?,
            svg: opts.svg,
        })
    }

    fn header(&self, command: &str) -> String {
        header(command, &self.hash, self.cfg.seed)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn with_path(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

/// Parses and builds a group file without running ping-pong.
pub fn load_group_unchecked(path: &Path) -> Result<SchottkyGroup, CliError> {
    let text = read(path)?;
    let spec = parse_group(&text).map_err(|e| with_path(path, e))?;
    spec.build().map_err(|e| with_path(path, e))
}

pub fn load_group(path: &Path) -> Result<SchottkyGroup, CliError> {
    Ok(load_group_unchecked(path)?.validated()?)
}

fn delta_for(cfg: &ExperimentConfig, group: &SchottkyGroup) -> Result<f64, CliError> {
    if let Some(v) = cfg.delta.value {
        return Ok(v);
    }
    let shells = ShellDistances::compute(group, &group.params().basepoint(), cfg.delta.n_max)?;
    Ok(estimate_from_shells(&shells, group.params().d as f64, cfg.delta.tol)?.delta_hat)
}

fn ps_settings(cfg: &ExperimentConfig) -> PsSettings {
    let m = &cfg.measure;
    let mut s = match m.construction {
        Construction::TopShell => PsSettings::top_shell(m.n_max),
        Construction::OrbitSum => PsSettings::orbit_sum(m.n_max, m.eps),
    };
    s.eps = m.eps;
    s
}

/// The measure a `fourier` or `nonconc` run works on, with the critical
/// exponent when it is a PS approximation.
pub fn source_measure(cfg: &ExperimentConfig) -> Result<(AtomicMeasure, Option<f64>), CliError> {
    Ok(match &cfg.source {
        SourceConfig::Ps => {
            let g = load_group(cfg.group_path()?)?;
            let delta = delta_for(cfg, &g)?;
            (
                patterson_orbit_measure(&g, delta, &ps_settings(cfg))?.measure,
                Some(delta),
            )
        }
        SourceConfig::Conditional { window, flow } => {
            let g = load_group(cfg.group_path()?)?;
            let delta = delta_for(cfg, &g)?;
            let mu = patterson_orbit_measure(&g, delta, &ps_settings(cfg))?.measure;
            let p = g.params();
            let c = unstable_conditional(&mu, &p.geodesic_flow(*flow), *window, delta, &p.basepoint(), p.tol)?;
            if c.measure.is_empty() {
                return Err(CliError::Numerical(format!("no atoms inside window {window}")));
            }
            (c.measure.normalized(), Some(delta))
        }
        SourceConfig::Segment { n } => (synthetic::uniform_segment(*n), None),
        SourceConfig::SegmentInPlane { n, angle } => (synthetic::segment_in_plane(*n, *angle), None),
        SourceConfig::Square { n, seed } => (synthetic::uniform_square(*n, seed.unwrap_or(cfg.seed)), None),
        SourceConfig::PointMass { x } => {
            if x.is_empty() {
                return Err(CliError::Validation("point mass needs coordinates".into()));
            }
            (AtomicMeasure::point_mass(x), None)
        }
        SourceConfig::File { path } => (parse_measure(&read(path)?).map_err(|e| with_path(path, e))?, None),
    })
}

pub fn cmd_validate(cfg: &ExperimentConfig, group_path: &Path, opts: &RunOptions) -> Result<String, CliError> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let group = load_group_unchecked(group_path)?;
    let report = group.verify_ping_pong();
    let mut s = ctx.header("validate");
    let _ = writeln!(s, "group = {}", group_path.display());
    let _ = writeln!(s, "d = {}\nrank = {}", group.params().d, group.rank());
    for (i, c) in report.generators.iter().enumerate() {
        let _ = writeln!(
            s,
            "generator {i}: margin = {:e} exact = {:e} sampled = {:e}",
            c.margin, c.exact_margin, c.sampled_margin
        );
        if let Some(w) = &c.witness {
            let _ = writeln!(s, "generator {i}: witness = {w:?}");
        }
    }
    let _ = writeln!(s, "worst_margin = {:e}", report.worst_margin);
    let _ = writeln!(s, "zariski_heuristic = {}", group.zariski_heuristic());
    let _ = writeln!(s, "status = {}", if report.passed { "validated" } else { "failed" });
    ctx.out.write("validate.txt", &s)?;
    if !report.passed {
        group.validated()?;
    }
    Ok(s)
}

pub fn cmd_delta(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<String, CliError> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let g = load_group(cfg.group_path()?)?;
    let shells = ShellDistances::compute(&g, &g.params().basepoint(), cfg.delta.n_max)?;
    let d = g.params().d as f64;
    let mut summary = ctx.header("delta");
    match estimate_from_shells(&shells, d, cfg.delta.tol) {
        Ok(est) => {
            let mut csv = Csv::new(&ctx.header("delta"), &["n", "words", "delta_n", "log_shell_at_delta"]);
            for (n, dn) in &est.per_level {
                csv.row(&[
                    Cell::U(*n),
                    Cell::U(shells.level(*n).len()),
                    Cell::F(*dn),
                    Cell::F(shells.log_shell(*n, est.delta_hat)),
                ]);
            }
            ctx.out.write("delta.csv", &csv.finish())?;
            let _ = writeln!(summary, "status = ok");
            let _ = writeln!(summary, "delta_hat = {:e}", est.delta_hat);
            let _ = writeln!(summary, "spread = {:e}", est.spread);
            let _ = writeln!(summary, "n_max = {}", cfg.delta.n_max);
            ctx.out.write("delta_summary.txt", &summary)?;
            Ok(summary)
        }
        Err(e) => {
            let status = match e {
                psfourier::Error::SeriesDegenerate(_) => "degenerate",
                _ => "failed",
            };
            let _ = writeln!(summary, "status = {status}");
            let _ = writeln!(summary, "reason = {e}");
            ctx.out.write("delta_summary.txt", &summary)?;
            Err(CliError::Numerical(format!("{status}: {e}")))
        }
    }
}

pub fn cmd_measure(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<String, CliError> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let g = load_group(cfg.group_path()?)?;
    let delta = delta_for(cfg, &g)?;
    let settings = ps_settings(cfg);
    let ps = patterson_orbit_measure(&g, delta, &settings)?;
    let residual = group_conformality_residual(&g, &ps.measure, delta, 1.0);
    ctx.out
        .write("measure.txt", &write_measure(&ps.measure, &ctx.header("measure")))?;
    let mut s = ctx.header("measure");
    let construction = match settings.construction {
        PsConstruction::TopShell => "top_shell",
        PsConstruction::OrbitSum => "orbit_sum",
    };
    let _ = writeln!(s, "construction = {construction}");
    let _ = writeln!(s, "n_max = {}", settings.n_max);
    let _ = writeln!(s, "delta = {delta:e}");
    let _ = writeln!(s, "atoms = {}", ps.measure.len());
    let _ = writeln!(s, "dropped = {}", ps.dropped);
    let _ = writeln!(s, "conformality_residual = {residual:e}");
    let _ = writeln!(s, "resolution = {:e}", resolution(&ps.measure));
    if let Some(window) = cfg.measure.window {
        let p = g.params();
        let c = unstable_conditional(&ps.measure, &p.identity(), window, delta, &p.basepoint(), p.tol)?;
        ctx.out
            .write("conditional.txt", &write_measure(&c.measure, &ctx.header("measure")))?;
        let _ = writeln!(s, "conditional_atoms = {}", c.measure.len());
        let _ = writeln!(s, "conditional_outside_window = {}", c.outside_window);
        let _ = writeln!(s, "conditional_excluded = {}", c.excluded);
    }
    ctx.out.write("measure_summary.txt", &s)?;
    Ok(s)
}

pub fn cmd_fourier(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<String, CliError> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let (mu, delta) = source_measure(cfg)?;
    let f = &cfg.fourier;
    let mode = match f.mode {
        Mode::Ray => SampleMode::Ray,
        Mode::Shell => SampleMode::Shell {
            radial_samples: f.radial_samples,
        },
        Mode::Grid => SampleMode::Grid,
    };
    let directions = f.directions.clone().unwrap_or_else(|| default_directions(mu.d()));
    let ladder = RadiusLadder {
        r0: f.r0,
        ratio: f.ratio,
        count: f.count,
    };
    let mut spec = FrequencySpec::new(mode, directions, ladder, f.grid_step)?;
    spec.cap = f.cap;
    let rep = decay_scan(&mu, &spec)?;
    let head = ctx.header("fourier");
    let mut csv = Csv::new(&head, &["shell_radius", "direction_index", "re", "im", "abs"]);
    for smp in &rep.samples {
        csv.row(&[
            Cell::F(smp.radius()),
            Cell::U(smp.direction),
            Cell::F(smp.value.re),
            Cell::F(smp.value.im),
            Cell::F(smp.value.norm()),
        ]);
    }
    ctx.out.write("fourier.csv", &csv.finish())?;
    let mut shells = Csv::new(&head, &["shell_radius", "max_abs"]);
    for (r, m) in &rep.shell_max {
        shells.row(&[Cell::F(*r), Cell::F(*m)]);
    }
    ctx.out.write("shells.csv", &shells.finish())?;

    let mut s = head.clone();
    let _ = writeln!(s, "atoms = {}", mu.len());
    match rep.kappa {
        Some(k) => {
            let _ = writeln!(s, "kappa = {k:e}");
        }
        None => {
            let _ = writeln!(s, "kappa = below floor");
        }
    }
    let _ = writeln!(s, "fit_residual = {:e}", rep.fit_residual);
    let _ = writeln!(s, "resolution_cap = {:e}", rep.cap);
    let _ = writeln!(s, "capped_shells = {}", rep.capped_shells);

    let rmax = f.l2_radii.iter().chain(&f.exceptional_t).copied().fold(0.0, f64::max);
    if rmax > 0.0 {
        let grid = grid_values(&mu, rmax, f.grid_step)?;
        let _ = writeln!(s, "grid_step = {:e}", f.grid_step);
        let _ = writeln!(s, "grid_coarse = {}", grid.coarse);
        let alpha = f.alpha.or(delta);
        if !f.l2_radii.is_empty() {
            let mut cols = vec!["radius", "estimate", "ratio_to_previous"];
            if alpha.is_some() {
                cols.push("reference_power");
            }
            let mut l2 = Csv::new(&head, &cols);
            let mut prev: Option<f64> = None;
            let mut worst_ratio: f64 = 0.0;
            for &r in &f.l2_radii {
                let e = grid.l2_within(r);
                let ratio = prev.map_or(f64::NAN, |p| e / p);
                if ratio.is_finite() {
                    worst_ratio = worst_ratio.max(ratio);
                }
                let mut row = vec![Cell::F(r), Cell::F(e), Cell::F(ratio)];
                if let Some(a) = alpha {
                    row.push(Cell::F(r.powf(mu.d() as f64 - a)));
                }
                l2.row(&row);
                prev = Some(e);
            }
            ctx.out.write("l2.csv", &l2.finish())?;
            let _ = writeln!(s, "l2_worst_doubling_ratio = {worst_ratio:e}");
            if let Some(a) = alpha {
                let _ = writeln!(s, "l2_alpha = {a:e}");
                let _ = writeln!(s, "l2_ratio_bound = {:e}", 2f64.powf(mu.d() as f64 - a + 0.3));
            }
        }
        if !f.exceptional_t.is_empty() && !f.delta_exp.is_empty() {
            let rows = sweep_from_grid(&grid, &f.exceptional_t, &f.delta_exp, f.growth)?;
            let mut ex = Csv::new(&head, &["delta_exp", "t", "lebesgue", "fraction"]);
            for r in &rows {
                for (t, l, fr) in &r.points {
                    ex.row(&[Cell::F(r.delta_exp), Cell::F(*t), Cell::F(*l), Cell::F(*fr)]);
                }
            }
            ctx.out.write("exceptional.csv", &ex.finish())?;
            match select_exponent(&rows) {
                Some(r) => {
                    let _ = writeln!(s, "selected_delta_exp = {:e}", r.delta_exp);
                }
                None => {
                    let _ = writeln!(s, "selected_delta_exp = none");
                }
            }
        }
    }
    if ctx.svg {
        let fit = rep.kappa.map(|k| (-k, rep.fit_intercept));
        ctx.out.write(
            "fourier.svg",
            &loglog_svg("shell maxima of |mu_hat|", &rep.shell_max, fit),
        )?;
    }
    ctx.out.write("fourier_summary.txt", &s)?;
    Ok(s)
}

pub fn cmd_nonconc(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<String, CliError> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let (mu, _) = source_measure(cfg)?;
    let n = &cfg.nonconc;
    let settings = NonConcSettings {
        samples: n.samples,
        seed: cfg.seed,
        r_min: n.r_min,
        r_max: n.r_max,
        random_normals: n.random_normals,
    };
    let p = affine_profile(&mu, &n.eps, &settings)?;
    let mut head = ctx.header("nonconc");
    let _ = writeln!(
        head,
        "# method={} r_min={:e} r_max={:e} samples={} discarded={} concentrated={}",
        p.method,
        p.r_min,
        p.r_max,
        p.samples,
        p.discarded,
        p.concentrated()
    );
    let mut csv = Csv::new(&head, &["epsilon", "worst_ratio", "ball_count_used"]);
    for (e, r, used) in &p.pairs {
        csv.row(&[Cell::F(*e), Cell::F(*r), Cell::U(*used)]);
    }
    let text = csv.finish();
    ctx.out.write("nonconc.csv", &text)?;
    Ok(text)
}

pub fn cmd_holonomy(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<String, CliError> {
    let mut ctx = Ctx::new(cfg, opts)?;
    let h = &cfg.holonomy;
    let rep = property_suite(h.d, h.trials, cfg.seed, h.inject_sign_bug)?;
    let lin = linearization_suite(h.d, h.linearization_trials, cfg.seed.wrapping_add(1), h.t1, h.t2)?;
    let head = ctx.header("holonomy");
    let mut csv = Csv::new(&head, &["index", "phi_err", "tau_err", "residual"]);
    for r in &rep.records {
        csv.row(&[
            Cell::U(r.index),
            Cell::F(r.phi_err),
            Cell::F(r.tau_err),
            Cell::F(r.residual),
        ]);
    }
    ctx.out.write("holonomy.csv", &csv.finish())?;
    let pass = rep.all_passed() && lin.passed();
    let mut s = head;
    let _ = writeln!(s, "d = {}", h.d);
    let _ = writeln!(s, "inject_sign_bug = {}", h.inject_sign_bug);
    let _ = writeln!(s, "trials = {}", rep.trials);
    let _ = writeln!(s, "passed = {}", rep.passed);
    let _ = writeln!(s, "max_phi_err = {:e}", rep.max_phi_err);
    let _ = writeln!(s, "max_tau_err = {:e}", rep.max_tau_err);
    let _ = writeln!(s, "max_residual = {:e}", rep.max_residual);
    let _ = writeln!(s, "linearization_trials = {}", lin.ratios.len());
    let _ = writeln!(s, "linearization_max_ratio = {:e}", lin.max_ratio);
    let _ = writeln!(s, "linearization_bound = {:e}", lin.bound);
    let _ = writeln!(s, "status = {}", if pass { "pass" } else { "fail" });
    ctx.out.write("holonomy.txt", &s)?;
    if pass {
        Ok(s)
    } else {
        print!("{s}");
        Err(CliError::Numerical(format!(
            "holonomy property suite failed ({} of {} trials passed)",
            rep.passed, rep.trials
        )))
    }
}
