use std::fmt::Write as _;
use std::path::PathBuf;

use pev::doubleslit::{
    default_half_span, grid_scan, local_maxima, normalize_grid, symmetric_axis, DoubleSlitConfig,
    Factor, Which,
};
use pev::evolution::{
    branch_statistics, load_family_file, load_operator_value, luders_update, sample_path,
    transition_prob, validate_family_with_tol, ChannelFamily, FamilyDiagnostics, ZERO_PROB_TOL,
};
use pev::generators::SpacetimeGrid;
use pev::hilbert::{
    is_valid_density, spectral_decompose, DensityDiagnostics, DensityOperator, Operator, C64,
    DEFAULT_DIM_CAP,
};
use pev::io::write_atomic;
use pev::timeops::{
    causality_probability, mass_uncertainty_check, temporal_uncertainty_sweep, GridWavefunction,
};
use pev::{PevError, Result};

use crate::manifest::Manifest;
use crate::run_config::{energy, length, time, RunConfig, SystemSection};
use crate::tolerances::Tols;

/// Everything a subcommand needs: the effective config (file plus flags).
pub struct Ctx {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub source: Option<Vec<u8>>,
    pub out: PathBuf,
    pub seed: u64,
    pub tols: Tols,
}

/// A command that ran but found an invariant violated.
pub enum Status {
    Ok,
    Violated(String),
}

impl Ctx {
    fn system(&self) -> Result<&SystemSection> {
        self.config
            .system
            .as_ref()
            .ok_or_else(|| PevError::InvalidConfig("config has no [system] section".into()))
    }

    fn cap(&self) -> usize {
        self.config
            .system
            .as_ref()
            .and_then(|s| s.dim_cap)
            .unwrap_or(DEFAULT_DIM_CAP)
    }

    fn families(&self) -> Result<Vec<ChannelFamily>> {
        load_family_file(&self.base_dir.join(&self.system()?.families), self.cap())
    }

    fn operator(&self, value: &str) -> Result<Operator> {
        load_operator_value(value, &self.base_dir, self.cap())
    }

    fn rho0(&self) -> Result<DensityOperator> {
        let v = self
            .system()?
            .rho0
            .as_ref()
            .ok_or_else(|| PevError::InvalidConfig("[system] needs rho0".into()))?;
        DensityOperator::with_tolerances(self.operator(v)?, &self.tols.density)
    }

    fn diagnose(&self, f: &ChannelFamily) -> FamilyDiagnostics {
        let mut d = validate_family_with_tol(f, self.tols.family);
        self.tols.apply(&mut d);
        d
    }

    fn manifest(&self, command: &str) -> Result<Manifest> {
        Ok(Manifest::new(
            command,
            self.seed,
            &self.config.to_text()?,
            self.source.as_deref(),
        ))
    }

    /// Writes the outputs, the effective config and the manifest.
    fn finish(&self, mut manifest: Manifest, outputs: &[(&str, String)]) -> Result<()> {
        for (name, body) in outputs {
            write_atomic(&self.out.join(name), body.as_bytes())?;
            manifest.output(name, body.as_bytes());
        }
        write_atomic(
            &self.out.join("config.toml"),
            self.config.to_text()?.as_bytes(),
        )?;
        manifest.write(&self.out)
    }
}

fn e17(v: f64) -> String {
    format!("{v:.17e}")
}

struct Row {
    suite: &'static str,
    item: String,
    check: String,
    residual: f64,
    tolerance: f64,
    passed: bool,
}

fn density_rows(rows: &mut Vec<Row>, item: &str, d: &DensityDiagnostics, tols: &Tols) {
    let t = tols.density;
    for (check, residual, tolerance, passed) in [
        (
            "hermiticity",
            d.hermiticity_residual,
            t.herm,
            d.hermitian_ok,
        ),
        (
            "positivity",
            (-d.min_eigenvalue).max(0.0),
            t.pos,
            d.positive_ok,
        ),
        ("unit_trace", d.trace_error, t.trace, d.trace_ok),
    ] {
        rows.push(Row {
            suite: "density",
            item: item.to_string(),
            check: check.to_string(),
            residual,
            tolerance,
            passed,
        });
    }
}

fn family_rows(rows: &mut Vec<Row>, suite: &'static str, item: String, d: &FamilyDiagnostics) {
    for c in &d.checks {
        rows.push(Row {
            suite,
            item: item.clone(),
            check: c.name.clone(),
            residual: c.residual,
            tolerance: c.tolerance,
            passed: c.passed,
        });
    }
}

/// Channel, density and spectral invariant suites.
pub fn validate(ctx: &Ctx) -> Result<Status> {
    let sys = ctx.system()?;
    let families = ctx.families()?;
    let mut rows = Vec::new();
    for f in &families {
        family_rows(
            &mut rows,
            "channel",
            format!("tau={}", f.tau),
            &ctx.diagnose(f),
        );
    }

    if let Some(v) = &sys.rho0 {
        let op = ctx.operator(v)?;
        let d = is_valid_density(&op, &ctx.tols.density);
        density_rows(&mut rows, "rho0", &d, &ctx.tols);
        if d.valid {
            let rho = DensityOperator::with_tolerances(op, &ctx.tols.density)?;
            for f in families.iter().filter(|f| f.dim() == rho.dim()) {
                for c in f.channels() {
                    if transition_prob(c, &rho)? > ZERO_PROB_TOL {
                        let out = luders_update(c, &rho)?;
                        let d = is_valid_density(out.op(), &ctx.tols.density);
                        density_rows(
                            &mut rows,
                            &format!("update tau={} nu={}", f.tau, c.label),
                            &d,
                            &ctx.tols,
                        );
                    }
                }
            }
        }
    }

    for (i, v) in sys.observables.iter().enumerate() {
        let a = ctx.operator(v)?;
        let sd = spectral_decompose(&a, ctx.tols.cluster)?;
        let rec = sd.reconstruct().max_abs_diff(&a);
        let tol = ctx.tols.reconstruction * a.max_abs().max(1.0);
        rows.push(Row {
            suite: "spectral",
            item: format!("observable={i}"),
            check: "reconstruction".into(),
            residual: rec,
            tolerance: tol,
            passed: rec <= tol,
        });
        let fam =
            ChannelFamily::projective(1, sd.projectors.iter().map(|p| p.to_operator()).collect())?;
        family_rows(
            &mut rows,
            "spectral",
            format!("observable={i}"),
            &ctx.diagnose(&fam),
        );
    }

    let mut report = String::from("suite,item,check,residual,tolerance,passed\n");
    for r in &rows {
        writeln!(
            report,
            "{},{},{},{},{},{}",
            r.suite,
            r.item,
            r.check,
            e17(r.residual),
            e17(r.tolerance),
            r.passed
        )
        .unwrap();
    }
    let failed: Vec<&Row> = rows.iter().filter(|r| !r.passed).collect();
    let mut m = ctx.manifest("validate")?;
    m.set("checks", rows.len());
    m.set("failed", failed.len());
    ctx.finish(m, &[("validate_report.csv", report)])?;

    println!("validate: {} checks, {} failed", rows.len(), failed.len());
    if failed.is_empty() {
        return Ok(Status::Ok);
    }
    let mut msg = String::new();
    for r in &failed {
        writeln!(
            msg,
            "  {} {}: {} residual {:.3e} > {:.3e}",
            r.suite, r.item, r.check, r.residual, r.tolerance
        )
        .unwrap();
    }
    Ok(Status::Violated(msg))
}

/// Samples one path (and optionally branch statistics over many).
pub fn evolve(ctx: &Ctx) -> Result<Status> {
    let families = ctx.families()?;
    for f in &families {
        let d = ctx.diagnose(f);
        if !d.passed() {
            let names: Vec<String> = d.failed().iter().map(|c| c.name.clone()).collect();
            return Ok(Status::Violated(format!(
                "family at tau={} fails {}",
                f.tau,
                names.join(", ")
            )));
        }
    }
    let rho = ctx.rho0()?;
    let path = sample_path(&families, &rho, ctx.seed)?;
    let mut outputs = vec![("path.csv", path.to_csv())];
    let n_paths = ctx.system()?.paths.unwrap_or(1);
    let mut m = ctx.manifest("evolve")?;
    m.set("steps", families.len());
    m.set("paths", n_paths);
    if n_paths > 1 {
        let stats = branch_statistics(&families, &rho, n_paths, ctx.seed)?;
        outputs.push(("branch_frequencies.csv", stats.to_csv()));
    }
    ctx.finish(m, &outputs)?;
    println!("evolve: {} steps, {n_paths} path(s)", families.len());
    Ok(Status::Ok)
}

pub fn doubleslit(ctx: &Ctx) -> Result<Status> {
    let spec = ctx.config.doubleslit.clone().unwrap_or_default();
    let cfg = DoubleSlitConfig::from_spec(&spec)?;
    let scan = ctx.config.scan.clone().unwrap_or_default();
    let n = scan.n.unwrap_or(101);
    let half = match &scan.half_span {
        Some(s) => energy("half_span", s)?,
        None => default_half_span(cfg.epsilon_t),
    };
    let which: Which = scan.which.as_deref().unwrap_or("pion").parse()?;
    let factor: Factor = scan.factor.as_deref().unwrap_or("full").parse()?;
    let axis = symmetric_axis(n, half)?;
    let grid = normalize_grid(&grid_scan(&cfg, &axis, &axis, which, factor)?)?;
    let resum = grid.resum()?;
    let (m1, m2) = (
        local_maxima(&grid.k1_profile()).len(),
        local_maxima(&grid.k2_profile()).len(),
    );
    let mut m = ctx.manifest("doubleslit")?;
    m.set("which", which.as_str());
    m.set("factor", factor.as_str());
    m.set("n", n);
    m.set("half_span_eV", format!("{half:?}"));
    m.set("epsilon_t_inv_eV", format!("{:?}", cfg.epsilon_t));
    m.set("maxima_k1", m1);
    m.set("maxima_k2", m2);
    m.set("resum", format!("{resum:?}"));
    ctx.finish(m, &[("grid.csv", grid.to_csv())])?;
    println!("doubleslit: {n}x{n} grid, maxima along k1/k2: {m1}/{m2}, resum {resum:.12}");
    Ok(Status::Ok)
}

pub fn uncertainty(ctx: &Ctx) -> Result<Status> {
    let sec = ctx
        .config
        .uncertainty
        .as_ref()
        .ok_or_else(|| PevError::InvalidConfig("config has no [uncertainty] section".into()))?;
    let dt = time("dt", &sec.dt)?;
    let lo = time("sigma_min", &sec.sigma_min)?;
    let hi = time("sigma_max", &sec.sigma_max)?;
    if sec.count == 0 || !(lo > 0.0 && hi >= lo) {
        return Err(PevError::InvalidConfig(
            "need count >= 1 and 0 < sigma_min <= sigma_max".into(),
        ));
    }
    let sigmas: Vec<f64> = (0..sec.count)
        .map(|i| {
            if sec.count == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (sec.count - 1) as f64
            }
        })
        .collect();
    let sweep = temporal_uncertainty_sweep(sec.n_t, dt, &sigmas)?;
    let mut csv = String::from("sigma_t,var_t,var_p0,product,bound,unquartered,ratio,satisfied\n");
    let mut min_ratio = f64::INFINITY;
    let mut violated = Vec::new();
    for p in &sweep {
        let r = &p.report;
        min_ratio = min_ratio.min(r.ratio());
        if !r.satisfied {
            violated.push(format!("sigma_t = {}", p.sigma_t));
        }
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            e17(p.sigma_t),
            e17(r.var_a),
            e17(r.var_b),
            e17(r.product),
            e17(r.bound),
            e17(r.unquartered),
            e17(r.ratio()),
            r.satisfied
        )
        .unwrap();
    }
    let mut outputs = vec![("uncertainty.csv", csv)];
    if let Some(mp) = &sec.mass {
        let grid = SpacetimeGrid::centered(
            mp.n_t,
            mp.n_x,
            time("mass.dt", &mp.dt)?,
            length("mass.dx", &mp.dx)?,
        )?;
        let psi = GridWavefunction::gaussian(
            grid,
            [0.0, 0.0],
            [
                time("mass.sigma_t", &mp.sigma_t)?,
                length("mass.sigma_x", &mp.sigma_x)?,
            ],
            [energy("mass.k0", &mp.k0)?, energy("mass.k1", &mp.k1)?],
        )?;
        let mut csv = String::from("nu,var_mass_sq,var_x,product,momentum_sq,slack,satisfied\n");
        for r in mass_uncertainty_check(&psi)? {
            if !r.satisfied {
                violated.push(format!("mass relation nu = {}", r.nu));
            }
            writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                r.nu,
                e17(r.var_mass_sq),
                e17(r.var_x),
                e17(r.product),
                e17(r.momentum_sq),
                e17(r.slack),
                r.satisfied
            )
            .unwrap();
        }
        outputs.push(("mass_uncertainty.csv", csv));
    }
    let mut m = ctx.manifest("uncertainty")?;
    m.set("min_ratio", format!("{min_ratio:?}"));
    ctx.finish(m, &outputs)?;
    println!(
        "uncertainty: {} widths, min product/bound {min_ratio:.6}",
        sweep.len()
    );
    if violated.is_empty() {
        Ok(Status::Ok)
    } else {
        Ok(Status::Violated(format!(
            "bound violated at {}",
            violated.join(", ")
        )))
    }
}

/// Amplitude profile along one axis: Gaussian, or the nearest node when the
/// width is zero.
fn profile(nodes: &[f64], center: f64, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        let k = nodes
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - center).abs().total_cmp(&(b.1 - center).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (0..nodes.len()).map(|i| (i == k) as u8 as f64).collect()
    } else {
        nodes
            .iter()
            .map(|x| (-(x - center).powi(2) / (4.0 * sigma * sigma)).exp())
            .collect()
    }
}

pub fn causality(ctx: &Ctx) -> Result<Status> {
    let sec = ctx
        .config
        .causality
        .as_ref()
        .ok_or_else(|| PevError::InvalidConfig("config has no [causality] section".into()))?;
    let grid = SpacetimeGrid::with_origin(
        sec.n_t,
        sec.n_x,
        time("dt", &sec.dt)?,
        length("dx", &sec.dx)?,
        time("t0", &sec.t0)?,
        length("x0", &sec.x0)?,
    )?;
    let vertex = time("vertex_t", &sec.vertex_t)?;
    let mut csv =
        String::from("packet,center_t,center_x,sigma_t,sigma_x,vertex_t,cone_probability\n");
    for p in &sec.packet {
        let (ct, cx) = (
            time("center_t", &p.center_t)?,
            length("center_x", &p.center_x)?,
        );
        let (st, sx) = (time("sigma_t", &p.sigma_t)?, length("sigma_x", &p.sigma_x)?);
        if st < 0.0 || sx < 0.0 {
            return Err(PevError::InvalidConfig(format!(
                "packet {}: negative width",
                p.name
            )));
        }
        let ft = profile(&grid.times(), ct, st);
        let fx = profile(&grid.positions(), cx, sx);
        let amps: Vec<C64> = ft
            .iter()
            .flat_map(|a| fx.iter().map(move |b| C64::new(a * b, 0.0)))
            .collect();
        let psi = GridWavefunction::new(grid, amps)?;
        let prob = causality_probability(&psi, vertex);
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            p.name,
            e17(ct),
            e17(cx),
            e17(st),
            e17(sx),
            e17(vertex),
            e17(prob)
        )
        .unwrap();
    }
    let mut m = ctx.manifest("causality")?;
    m.set("packets", sec.packet.len());
    ctx.finish(m, &[("causality.csv", csv)])?;
    println!("causality: {} packet(s)", sec.packet.len());
    Ok(Status::Ok)
}
