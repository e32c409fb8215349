//! The six scenarios. Each validates its parameters and builds every model
//! before the first solve, then runs its tasks through [`sweep_parallel`].

use std::collections::BTreeMap;

use dynrf::correlators::{
    integrated_gn_in, normalized_integrated_g2_in, spectrum_with, two_bin_on_grid, validate_t_grid, SpectrumOptions,
    TwoBinCorrelators,
};
use dynrf::counting::{
    detection_rate, filter_copies, filtered_flux_fraction, intensity_moments_filter, intensity_moments_one_mode,
    intensity_moments_totals, intensity_moments_two_mode, pmn_one_mode_2pa, pn_from_moments, purities, two_mode_2pa,
    BinProbabilities,
};
use dynrf::engine::{MomentSystem, OdeOptions};
use dynrf::trajectories::{ensemble, estimate_probabilities, McOptions};
use dynrf::{Error, JointModel, Mode, PulseEnvelope, Sensor, SensorBank};
use serde_json::{json, Value};

use crate::config::{ConfigError, FilterConfig, Grid, ScenarioConfig, ScenarioKind};
use crate::sweep::sweep_parallel;
use crate::table::{Cell, Table};

/// Outcome of one task as recorded in the manifest.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TaskRecord {
    pub label: String,
    pub converged: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct ScenarioOutput {
    pub tables: Vec<Table>,
    pub tasks: Vec<TaskRecord>,
    /// Derived settings worth recording, such as default axis ranges.
    pub notes: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioError {
    Validation(String),
    Solver { index: usize, label: String, error: Error },
}

impl From<ConfigError> for ScenarioError {
    fn from(e: ConfigError) -> Self {
        ScenarioError::Validation(e.0)
    }
}

impl std::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioError::Validation(m) => write!(f, "invalid configuration: {m}"),
            ScenarioError::Solver { label, error, .. } => write!(f, "task {label} failed: {error}"),
        }
    }
}

type Rows = Vec<Vec<Cell>>;

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    workers: usize,
}

impl Ctx<'_> {
    fn ode(&self) -> OdeOptions {
        OdeOptions::with_tolerances(self.cfg.numerics.rtol, self.cfg.numerics.atol)
    }

    fn system(&self, m: &JointModel) -> MomentSystem {
        MomentSystem::with_options(m, self.ode())
    }

    /// Runs `tasks`, each producing rows for every table plus a record.
    fn sweep<T: Sync>(
        &self,
        tasks: &[(String, T)],
        n_tables: usize,
        f: impl Fn(usize, &T) -> dynrf::Result<(Vec<Rows>, TaskRecord)> + Sync,
    ) -> Result<(Vec<Rows>, Vec<TaskRecord>), ScenarioError> {
        let out = sweep_parallel(tasks, self.workers, |i, (label, t)| {
            log::debug!("task {i}: {label}");
            f(i, t).map(|(rows, mut rec)| {
                rec.label = label.clone();
                (rows, rec)
            })
        })
        .map_err(|e| ScenarioError::Solver {
            index: e.index,
            label: tasks[e.index].0.clone(),
            error: e.error,
        })?;
        let mut tables = vec![Vec::new(); n_tables];
        let mut records = Vec::with_capacity(out.len());
        for (rows, rec) in out {
            for (t, r) in tables.iter_mut().zip(rows) {
                t.extend(r);
            }
            records.push(rec);
        }
        Ok((tables, records))
    }
}

fn record(converged: bool, warnings: Vec<String>) -> TaskRecord {
    TaskRecord { label: String::new(), converged, warnings }
}

fn invalid(e: Error) -> ScenarioError {
    ScenarioError::Validation(e.to_string())
}

fn bare_model(theta_pi: f64, tau_d: f64, detuning: f64) -> Result<JointModel, ScenarioError> {
    if !theta_pi.is_finite() {
        return Err(ScenarioError::Validation(format!("pulse area must be finite, got {theta_pi}")));
    }
    let m = JointModel::bare(PulseEnvelope::gaussian_pi(theta_pi, tau_d).map_err(invalid)?).with_detuning(detuning);
    m.validate().map_err(invalid)?;
    Ok(m)
}

fn with_filters(m: &JointModel, filters: &[Sensor], epsilon: f64) -> Result<JointModel, ScenarioError> {
    m.clone().with_sensors(SensorBank::new(filters.to_vec(), epsilon)).map_err(invalid)
}

fn filter_sensor(f: &FilterConfig) -> Sensor {
    Sensor::new(f.detuning, f.linewidth)
}

fn t_values(g: &Grid) -> Result<Vec<f64>, ScenarioError> {
    let t = g.values()?;
    validate_t_grid(&t).map_err(invalid)?;
    if t.iter().any(|x| x.is_infinite()) {
        return Err(ScenarioError::Validation("bin edges must be finite".into()));
    }
    Ok(t)
}

fn label_theta(theta_pi: f64) -> String {
    format!("theta_pi={theta_pi}")
}

/// Frequency axis: explicit grid, or `±(peak Rabi frequency + |detuning| + 5)`.
fn omega_axis(
    explicit: &Option<Grid>,
    points: usize,
    models: &[JointModel],
    notes: &mut BTreeMap<String, Value>,
) -> Result<Vec<f64>, ScenarioError> {
    if let Some(g) = explicit {
        let w = g.values()?;
        if w.iter().any(|x| !x.is_finite()) {
            return Err(ScenarioError::Validation("frequencies must be finite".into()));
        }
        return Ok(w);
    }
    if points < 2 {
        return Err(ScenarioError::Validation("omega_points must be at least 2".into()));
    }
    let half = models.iter().map(|m| m.pulse.peak() + m.tls.detuning.abs()).fold(0.0, f64::max) + 5.0;
    notes.insert("omega_range".into(), json!([-half, half]));
    notes.insert("omega_points".into(), json!(points));
    Grid::Range { start: -half, stop: half, step: None, count: Some(points) }.values().map_err(Into::into)
}

pub fn run(cfg: &ScenarioConfig, workers: usize) -> Result<ScenarioOutput, ScenarioError> {
    cfg.validate_numerics()?;
    let ctx = Ctx { cfg, workers };
    match cfg.scenario {
        ScenarioKind::PnVsArea => pn_vs_area(&ctx),
        ScenarioKind::PmnVsT => pmn_vs_t(&ctx),
        ScenarioKind::SpectrumMap => spectrum_map(&ctx),
        ScenarioKind::G2FrequencyMap => g2_frequency_map(&ctx),
        ScenarioKind::TimebinPurities => timebin_purities(&ctx),
        ScenarioKind::McValidate => mc_validate(&ctx),
    }
}

fn pn_vs_area(ctx: &Ctx) -> Result<ScenarioOutput, ScenarioError> {
    let c = ctx.cfg.pn_vs_area()?;
    let n_max = ctx.cfg.numerics.n_max.unwrap_or(4);
    if !(1..=4).contains(&n_max) {
        return Err(ScenarioError::Validation(format!("n_max must be in 1..=4 for bare emission, got {n_max}")));
    }
    let tasks = c
        .theta_pi
        .values()?
        .into_iter()
        .map(|th| Ok((label_theta(th), (th, bare_model(th, c.tau_d, c.detuning)?))))
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    let (rows, records) = ctx.sweep(&tasks, 1, |_, (th, m)| {
        let sys = ctx.system(m);
        let init = sys.initial_moments(m);
        let higher = integrated_gn_in(&sys, &init, Mode::Emitter, n_max, &[f64::INFINITY])?;
        let mom = intensity_moments_totals(&higher, detection_rate(m, Mode::Emitter), 1.0)?;
        let p = pn_from_moments(&mom, 0, n_max)?;
        let mut row: Vec<Cell> = vec![(*th).into()];
        row.extend(p.p_n.iter().map(|v| Cell::F(*v)));
        row.push(p.converged.into());
        row.push(p.clamp_residual.into());
        Ok((vec![vec![row]], record(p.converged, p.warnings)))
    })?;
    let p_cols: Vec<String> = (0..=n_max).map(|n| format!("P{n}")).collect();
    let mut header = vec!["theta_pi"];
    header.extend(p_cols.iter().map(String::as_str));
    header.extend(["converged", "clamp_residual"]);
    let mut t = Table::new("pn", &header);
    rows.into_iter().flatten().for_each(|r| t.push(r));
    Ok(ScenarioOutput { tables: vec![t], tasks: records, notes: BTreeMap::from([("n_max".into(), json!(n_max))]) })
}

const PMN_HEADER: [&str; 9] = ["theta_pi", "T", "P00", "P10", "P01", "P20", "P11", "P02", "clamp_residual"];
const PMN_KEYS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

/// One-mode two-photon probabilities on every bin edge. `bins` are either
/// same-mode correlators or the cross correlators of two filter copies.
fn one_mode_pmn(m: &JointModel, bins: &[TwoBinCorrelators]) -> dynrf::Result<Vec<BinProbabilities>> {
    bins.iter()
        .map(|b| {
            let rate = detection_rate(m, b.a);
            let mom = if b.a == b.b {
                intensity_moments_one_mode(b, None, rate, 1.0)?
            } else {
                intensity_moments_filter(b, rate, 1.0)?
            };
            pmn_one_mode_2pa(&mom, 0)
        })
        .collect()
}

/// Bin probabilities of the bare emission, or behind the single filter of `m`
/// when it has one (computed from two copies of the filter).
fn counted_pmn(ctx: &Ctx, m: &JointModel, t: &[f64]) -> dynrf::Result<Vec<BinProbabilities>> {
    if m.sensors.count() == 0 {
        let sys = ctx.system(m);
        let bins = two_bin_on_grid(&sys, &sys.initial_moments(m), Mode::Emitter, Mode::Emitter, t)?;
        one_mode_pmn(m, &bins)
    } else {
        let copies = filter_copies(m, 0)?;
        let sys = ctx.system(&copies);
        let bins = two_bin_on_grid(&sys, &sys.initial_moments(&copies), Mode::Sensor(0), Mode::Sensor(1), t)?;
        one_mode_pmn(&copies, &bins)
    }
}

fn pmn_vs_t(ctx: &Ctx) -> Result<ScenarioOutput, ScenarioError> {
    let c = ctx.cfg.pmn_vs_t()?;
    let t = t_values(&c.t)?;
    let mut tasks = Vec::new();
    for th in c.theta_pi.values()? {
        let mut m = bare_model(th, c.tau_d, c.detuning)?;
        if let Some(f) = &c.filter {
            m = with_filters(&m, &[filter_sensor(f)], c.epsilon)?;
        }
        tasks.push((label_theta(th), (th, m)));
    }
    let mode = if c.filter.is_some() { Mode::Sensor(0) } else { Mode::Emitter };
    let (rows, records) = ctx.sweep(&tasks, 1, |_, (th, m)| {
        let mut rows = Vec::new();
        let mut warnings = m.warnings();
        for (tk, p) in t.iter().zip(counted_pmn(ctx, m, &t)?) {
            let mut row: Vec<Cell> = vec![(*th).into(), (*tk).into()];
            row.extend(PMN_KEYS.iter().map(|&(a, b)| Cell::F(p.pmn(a, b))));
            row.push(p.clamp_residual.into());
            rows.push(row);
            warnings.extend(p.warnings.into_iter().map(|w| format!("T={tk}: {w}")));
        }
        Ok((vec![rows], record(true, warnings)))
    })?;
    let mut table = Table::new("pmn", &PMN_HEADER);
    rows.into_iter().flatten().for_each(|r| table.push(r));
    let mut notes = BTreeMap::new();
    notes.insert("mode".into(), json!(mode.to_string()));
    Ok(ScenarioOutput { tables: vec![table], tasks: records, notes })
}

fn spectrum_map(ctx: &Ctx) -> Result<ScenarioOutput, ScenarioError> {
    let c = ctx.cfg.spectrum_map()?;
    if !(c.filter_width >= 0.0 && c.filter_width.is_finite()) {
        return Err(ScenarioError::Validation(format!("filter_width must be >= 0, got {}", c.filter_width)));
    }
    let thetas = c.theta_pi.values()?;
    let models = thetas.iter().map(|&th| bare_model(th, c.tau_d, c.detuning)).collect::<Result<Vec<_>, _>>()?;
    let mut notes = BTreeMap::new();
    let omega = omega_axis(&c.omega, c.omega_points, &models, &mut notes)?;
    let tasks: Vec<_> = thetas.iter().zip(models).map(|(&th, m)| (label_theta(th), (th, m))).collect();
    let opts = SpectrumOptions { step: None, filter_width: c.filter_width };
    let (rows, records) = ctx.sweep(&tasks, 1, |_, (th, m)| {
        let s = spectrum_with(m, &omega, opts)?;
        let rows = s.omega.iter().zip(&s.values).map(|(w, v)| vec![(*th).into(), (*w).into(), (*v).into()]).collect();
        Ok((vec![rows], record(true, Vec::new())))
    })?;
    let mut table = Table::new("spectrum", &["theta_pi", "omega", "S"]);
    rows.into_iter().flatten().for_each(|r| table.push(r));
    Ok(ScenarioOutput { tables: vec![table], tasks: records, notes })
}

fn g2_frequency_map(ctx: &Ctx) -> Result<ScenarioOutput, ScenarioError> {
    let c = ctx.cfg.g2_frequency_map()?;
    let thetas = c.theta_pi.values()?;
    let models = thetas.iter().map(|&th| bare_model(th, c.tau_d, c.detuning)).collect::<Result<Vec<_>, _>>()?;
    let mut notes = BTreeMap::new();
    let omega = omega_axis(&c.omega, c.omega_points, &models, &mut notes)?;
    let n = omega.len();
    // g2 is symmetric under exchanging the sensors, so only i <= j is solved
    let mut tasks = Vec::new();
    for (k, (&th, base)) in thetas.iter().zip(&models).enumerate() {
        for i in 0..n {
            for j in i..n {
                let pair = [Sensor::new(omega[i], c.linewidth), Sensor::new(omega[j], c.linewidth)];
                tasks.push((
                    format!("theta_pi={th},omega_a={},omega_b={}", omega[i], omega[j]),
                    (k, i, j, with_filters(base, &pair, c.epsilon)?),
                ));
            }
        }
    }
    let (rows, records) = ctx.sweep(&tasks, 1, |_, (_, _, _, m)| {
        let sys = ctx.system(m);
        let r = normalized_integrated_g2_in(
            &sys,
            &sys.initial_moments(m),
            Mode::Sensor(0),
            Mode::Sensor(1),
            &[f64::INFINITY],
        )?;
        let (v, warnings) = match r.into_iter().next().expect("one bin edge") {
            Ok(v) => (v, Vec::new()),
            Err(e @ Error::Degenerate(_)) => (f64::NAN, vec![e.to_string()]),
            Err(e) => return Err(e),
        };
        Ok((vec![vec![vec![Cell::F(v)]]], record(true, warnings)))
    })?;
    let mut grid = vec![vec![vec![f64::NAN; n]; n]; thetas.len()];
    for ((_, (k, i, j, _)), r) in tasks.iter().zip(rows.into_iter().flatten()) {
        let Cell::F(v) = r[0] else { unreachable!() };
        grid[*k][*i][*j] = v;
        grid[*k][*j][*i] = v;
    }
    let mut table = Table::new("g2_map", &["theta_pi", "omega_a", "omega_b", "g2"]);
    for (k, th) in thetas.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                table.push(vec![(*th).into(), omega[i].into(), omega[j].into(), grid[k][i][j].into()]);
            }
        }
    }
    let degenerate = records.iter().filter(|r| !r.warnings.is_empty()).count();
    notes.insert("degenerate_tiles".into(), json!(degenerate));
    Ok(ScenarioOutput { tables: vec![table], tasks: records, notes })
}

const PURITY_HEADER: [&str; 9] = ["theta_pi", "T", "source", "pi10", "pi01", "pi20", "pi11", "pi02", "clamp_residual"];

fn purity_row(th: f64, t: f64, source: &str, p_mn: &BTreeMap<(usize, usize), f64>, residual: f64) -> Vec<Cell> {
    let mut row: Vec<Cell> = vec![th.into(), t.into(), source.into()];
    match purities(p_mn) {
        Ok(p) => row.extend(PMN_KEYS[1..].iter().map(|&(a, b)| Cell::F(p.get(a, b)))),
        Err(_) => row.extend(std::iter::repeat_n(Cell::F(f64::NAN), 5)),
    }
    row.push(residual.into());
    row
}

fn timebin_purities(ctx: &Ctx) -> Result<ScenarioOutput, ScenarioError> {
    let c = ctx.cfg.timebin_purities()?;
    if !(1..=2).contains(&c.filters) {
        return Err(ScenarioError::Validation(format!("filters must be 1 or 2, got {}", c.filters)));
    }
    let t = t_values(&c.t)?;
    let mut tasks = Vec::new();
    for th in c.theta_pi.values()? {
        let bare = bare_model(th, c.tau_d, c.detuning)?;
        let one = with_filters(&bare, &[filter_sensor(&c.filter)], c.epsilon)?;
        let filtered = with_filters(&bare, &vec![filter_sensor(&c.filter); c.filters], c.epsilon)?;
        tasks.push((label_theta(th), (th, bare, one, filtered)));
    }
    let (rows, records) = ctx.sweep(&tasks, 2, |_, (th, bare, one, filtered)| {
        let mut warnings = filtered.warnings();
        let mut rows = Vec::new();
        let bare_p = counted_pmn(ctx, bare, &t)?;
        let filtered_p: Vec<(BTreeMap<(usize, usize), f64>, f64, Vec<String>)> = if c.filters == 1 {
            counted_pmn(ctx, one, &t)?.into_iter().map(|p| (p.p_mn, p.clamp_residual, p.warnings)).collect()
        } else {
            let sys = ctx.system(filtered);
            let init = sys.initial_moments(filtered);
            let (a, b) = (Mode::Sensor(0), Mode::Sensor(1));
            let aa = two_bin_on_grid(&sys, &init, a, a, &t)?;
            let bb = two_bin_on_grid(&sys, &init, b, b, &t)?;
            let ab = two_bin_on_grid(&sys, &init, a, b, &t)?;
            let rates = [detection_rate(filtered, a), detection_rate(filtered, b)];
            let mut out = Vec::new();
            for k in 0..t.len() {
                let mom = intensity_moments_two_mode(&aa[k], &bb[k], &ab[k], rates, [1.0, 1.0])?;
                match two_mode_2pa(&mom) {
                    Ok(p) => out.push((p.collapsed(), p.clamp_residual, p.warnings)),
                    Err(Error::Degenerate(m)) => out.push((BTreeMap::new(), 0.0, vec![m])),
                    Err(e) => return Err(e),
                }
            }
            out
        };
        for (k, tk) in t.iter().enumerate() {
            let p = &bare_p[k];
            rows.push(purity_row(*th, *tk, "bare", &p.p_mn, p.clamp_residual));
            warnings.extend(p.warnings.iter().map(|w| format!("bare T={tk}: {w}")));
        }
        for (tk, (p_mn, residual, w)) in t.iter().zip(filtered_p) {
            rows.push(purity_row(*th, *tk, "filtered", &p_mn, residual));
            warnings.extend(w.into_iter().map(|w| format!("filtered T={tk}: {w}")));
        }
        let flux = match filtered_flux_fraction(one, 0) {
            Ok(f) => f,
            Err(Error::Degenerate(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        let flux_row = vec![(*th).into(), flux.into(), (1.0 - flux).into()];
        Ok((vec![rows, vec![flux_row]], record(true, warnings)))
    })?;
    let mut iter = rows.into_iter();
    let mut pur = Table::new("purities", &PURITY_HEADER);
    iter.next().unwrap().into_iter().for_each(|r| pur.push(r));
    let mut flux = Table::new("flux", &["theta_pi", "flux_fraction", "reduction"]);
    iter.next().unwrap().into_iter().for_each(|r| flux.push(r));
    let mut notes = BTreeMap::new();
    notes.insert("filters".into(), json!(c.filters));
    Ok(ScenarioOutput { tables: vec![pur, flux], tasks: records, notes })
}

/// Standard error used for `z`: the binomial error, at least the error of a
/// single count so that empty outcomes stay finite.
fn z_scale(e: &dynrf::trajectories::Estimate, n: u64) -> f64 {
    e.std_error.max(1.0 / n as f64)
}

fn mc_validate(ctx: &Ctx) -> Result<ScenarioOutput, ScenarioError> {
    let c = ctx.cfg.mc_validate()?;
    let t = t_values(&c.t)?;
    let widths = c.linewidth.values()?;
    let n = ctx.cfg.numerics.trajectories;
    let mut tasks = Vec::new();
    for th in c.theta_pi.values()? {
        let bare = bare_model(th, c.tau_d, c.detuning)?;
        for &w in &widths {
            let m = with_filters(&bare, &[Sensor::new(c.filter_detuning, w)], c.epsilon)?;
            tasks.push((format!("theta_pi={th},linewidth={w}"), (th, w, m)));
        }
    }
    let opts = McOptions {
        max_jumps: ctx.cfg.numerics.max_jumps,
        filter_levels: ctx.cfg.numerics.filter_levels,
        ..McOptions::default()
    };
    let seed = ctx.cfg.seed;
    let (rows, records) = ctx.sweep(&tasks, 1, |i, (th, w, m)| {
        let mode = Mode::Sensor(0);
        let pa = counted_pmn(ctx, m, &t)?;
        let records = ensemble(m, seed.wrapping_add(i as u64), n, opts)?;
        let overflow = records.iter().filter(|r| r.overflow).count();
        let mut warnings = Vec::new();
        if overflow > 0 {
            warnings.push(format!("{overflow} trajectories hit the jump cap"));
        }
        let mut rows = Vec::new();
        for (tk, p) in t.iter().zip(&pa) {
            let h = estimate_probabilities(&records, *tk, &[mode]);
            for &(a, b) in &PMN_KEYS {
                let e = h.pmn(a, b);
                let z = (e.value - p.pmn(a, b)) / z_scale(&e, h.trajectories);
                rows.push(vec![
                    (*th).into(),
                    (*w).into(),
                    (*tk).into(),
                    a.into(),
                    b.into(),
                    p.pmn(a, b).into(),
                    e.value.into(),
                    e.std_error.into(),
                    z.into(),
                ]);
            }
            warnings.extend(p.warnings.iter().map(|w| format!("T={tk}: {w}")));
        }
        Ok((vec![rows], record(overflow == 0, warnings)))
    })?;
    let mut table = Table::new("pmn_mc", &["theta_pi", "linewidth", "T", "m", "n", "p_2pa", "p_mc", "stderr_mc", "z"]);
    rows.into_iter().flatten().for_each(|r| table.push(r));
    let mut notes = BTreeMap::new();
    notes.insert("trajectories".into(), json!(n));
    notes.insert("filter_levels".into(), json!(opts.filter_levels));
    notes.insert("mc_rtol".into(), json!(opts.ode.rtol));
    notes.insert("mc_atol".into(), json!(opts.ode.atol));
    notes.insert("root_tol".into(), json!(opts.root_tol));
    notes.insert("seed_rule".into(), json!("task i uses seed + i, trajectory k uses stream k"));
    Ok(ScenarioOutput { tables: vec![table], tasks: records, notes })
}
