//! One function per subcommand. Each writes its artifacts atomically and
//! returns their paths; a failed check is reported after the artifacts exist.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use lfl_core::cumulants::{empirical_cumulant, CumulantEstimate, EstimatorOptions, PointConfig, SchwingerModel};
use lfl_core::greens::{
    green_continuum_richardson, green_real_kl_periodic, spectral_propagator, ModelParams, SpectralDensity,
    SpectralNormalization,
};
use lfl_core::lattice::LatticeField;
use lfl_core::os::{
    rp_scan, trend, verify_witness, GramReport, GramVerdict, ScanPoint, Trend, Verification, VerificationStatus,
    WitnessRecord,
};
use lfl_core::quad::QuadOptions;
use lfl_core::rng::{domain, StreamKey};
use lfl_core::sampler::format::{read_ensemble, EnsembleHeader, EnsembleWriter};
use lfl_core::sampler::{Ensemble, LazyEnsemble};
use lfl_core::wightman::{
    baumann_check, make_spacelike_test, BaumannReport, BaumannSetup, IntegratorSpec, MassAssignment,
    MomentumTestFunction, Verdict,
};
use lfl_core::{par, FieldModel};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Bump, Expectation, ExperimentConfig, TestField, MAX_SEED};
use crate::output::{write_atomic, write_csv, write_json};
use crate::{CliError, CliResult, Command};

pub struct Context {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
}

impl Context {
    fn seed(&self) -> u64 {
        self.cfg.run.seed
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn envelope<T: Serialize>(&self, command: &'static str, body: T) -> Envelope<T> {
        Envelope {
            command,
            seed: self.seed(),
            config: self.cfg.for_report(),
            body,
        }
    }

    fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> CliResult<&'a T> {
        s.as_ref()
            .ok_or_else(|| CliError::Config(format!("the [{name}] section is required for this command")))
    }
}

/// Every report embeds the configuration (minus the worker count) and seed.
#[derive(Debug, Serialize)]
pub struct Envelope<T> {
    pub command: &'static str,
    pub seed: u64,
    pub config: ExperimentConfig,
    #[serde(flatten)]
    pub body: T,
}

pub fn dispatch(ctx: &Context, command: &Command) -> CliResult<Vec<PathBuf>> {
    match command {
        Command::NoiseCheck => noise_check(ctx),
        Command::Sample => sample(ctx),
        Command::Cumulants => cumulants(ctx),
        Command::Schwinger => schwinger(ctx),
        Command::RpCheck => rp_check(ctx),
        Command::RpScan => rp_scan_cmd(ctx),
        Command::Baumann => baumann(ctx),
        Command::Spectral => spectral(ctx),
        Command::VerifyWitness { witness } => verify(ctx, witness),
    }
}

/// Seed for a fresh verification ensemble, distinct from the run's own streams.
fn fresh_seed(seed: u64, tag: u64, index: usize) -> u64 {
    StreamKey::new(seed, domain::WITNESS)
        .child(tag)
        .stream(index as u64)
        .random::<u64>()
        & MAX_SEED
}

const TAG_RP: u64 = 1;
const TAG_SCAN: u64 = 2;
const TAG_VERIFY: u64 = 3;

fn test_field(model: &FieldModel, f: &TestField) -> CliResult<LatticeField> {
    let spec = model.spec;
    let field = match f {
        TestField::Constant { value } => LatticeField::from_fn(spec, |_| *value),
        TestField::Gaussian { amplitude, width } => LatticeField::from_fn(spec, |x| {
            let r2: f64 = spec.min_image_displacement(x).iter().map(|v| v * v).sum();
            amplitude * (-r2 / (2.0 * width * width)).exp()
        }),
        TestField::Cosine { amplitude, mode } => {
            let k: Vec<f64> = mode.iter().map(|&m| spec.momentum(spec.wrap(m))).collect();
            LatticeField::from_fn(spec, |x| {
                let phase: f64 = x.iter().zip(&k).map(|(&xi, ki)| xi as f64 * spec.spacing() * ki).sum();
                amplitude * phase.cos()
            })
        }
    };
    Ok(field?)
}

#[derive(Debug, Serialize)]
struct NoiseCheckRow {
    test_function: TestField,
    analytic_re: f64,
    analytic_im: f64,
    empirical_re: f64,
    empirical_im: f64,
    stderr: f64,
    z: f64,
    mean_analytic: f64,
    mean_empirical: f64,
    mean_stderr: f64,
    pass: bool,
}

fn noise_check(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let sec = ctx.section(&ctx.cfg.noise_check, "noise_check")?;
    let model = ctx.cfg.field_model()?;
    let noise = &model.noise;
    let key = StreamKey::new(ctx.seed(), domain::NOISE_CHECK);
    let k1 = noise.cumulant(1)?;
    let mut rows = Vec::new();
    for (fi, spec_f) in sec.test_functions.iter().enumerate() {
        let f = test_field(&model, spec_f)?;
        let analytic = noise.characteristic_functional(&f);
        let fkey = key.child(fi as u64);
        let draws = par::map_indexed(sec.n_draws, |i| {
            let mut rng = fkey.stream(i as u64);
            noise.sample_noise(&model.spec, &mut rng).pairing(&f)
        });
        let n = draws.len() as f64;
        let (mut re, mut im, mut m) = (0.0, 0.0, 0.0);
        for x in &draws {
            re += x.cos();
            im += x.sin();
            m += x;
        }
        let (re, im, m) = (re / n, im / n, m / n);
        let (mut vre, mut vim, mut vm) = (0.0, 0.0, 0.0);
        for x in &draws {
            vre += (x.cos() - re).powi(2);
            vim += (x.sin() - im).powi(2);
            vm += (x - m).powi(2);
        }
        let stderr = ((vre + vim) / (n - 1.0) / n).sqrt();
        let mean_stderr = (vm / (n - 1.0) / n).sqrt();
        let diff = ((re - analytic.re).powi(2) + (im - analytic.im).powi(2)).sqrt();
        let mean_analytic = k1 * f.power_sum(1);
        let within = |d: f64, se: f64| if se > 0.0 { d <= sec.sigmas * se } else { d <= 1e-12 };
        let z = if stderr > 0.0 { diff / stderr } else { 0.0 };
        rows.push(NoiseCheckRow {
            test_function: spec_f.clone(),
            analytic_re: analytic.re,
            analytic_im: analytic.im,
            empirical_re: re,
            empirical_im: im,
            stderr,
            z,
            mean_analytic,
            mean_empirical: m,
            mean_stderr,
            pass: within(diff, stderr) && within((m - mean_analytic).abs(), mean_stderr),
        });
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    #[derive(Serialize)]
    struct Body {
        n_draws: usize,
        rows: Vec<NoiseCheckRow>,
        pass: bool,
    }
    let path = write_json(
        &ctx.path("noise_check.json"),
        &ctx.envelope(
            "noise-check",
            Body {
                n_draws: sec.n_draws,
                rows,
                pass: failed == 0,
            },
        ),
    )?;
    if failed > 0 {
        return Err(CliError::CheckFailed(format!(
            "{failed} test function(s) outside {} standard errors; see {}",
            sec.sigmas,
            path.display()
        )));
    }
    Ok(vec![path])
}

/// Sidecar describing an `.lflb` file: what the binary header omits.
#[derive(Debug, Serialize, Deserialize)]
pub struct EnsembleSidecar {
    pub file: String,
    pub n_samples: usize,
    pub seed: u64,
    pub symbol: lfl_core::MomentumSymbol,
}

const SAMPLE_BATCH: usize = 64;

fn sample(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let model = ctx.cfg.field_model()?;
    let n = ctx.cfg.run.n_samples;
    let lazy = LazyEnsemble::new(model.clone(), n, ctx.seed())?;
    let bin = ctx.path("ensemble.lflb");
    let header = EnsembleHeader::for_model(&model, n as u64);
    write_atomic(&bin, |w| {
        let mut writer = EnsembleWriter::new(w, &header)?;
        for start in (0..n).step_by(SAMPLE_BATCH) {
            let len = SAMPLE_BATCH.min(n - start);
            for field in par::map_indexed(len, |i| lazy.sample(start + i)) {
                writer.write_sample(&field)?;
            }
        }
        writer.finish()?;
        Ok(())
    })?;
    let side = write_json(
        &ctx.path("ensemble.json"),
        &ctx.envelope(
            "sample",
            EnsembleSidecar {
                file: "ensemble.lflb".into(),
                n_samples: n,
                seed: ctx.seed(),
                symbol: model.params.symbol,
            },
        ),
    )?;
    Ok(vec![bin, side])
}

fn load_ensemble(path: &Path, cfg: &ExperimentConfig, model: &FieldModel) -> CliResult<Ensemble> {
    let file = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let ens = read_ensemble(BufReader::new(file), model.params.symbol, cfg.run.seed)?;
    if &ens.model != model {
        return Err(CliError::Config(format!(
            "{}: ensemble parameters differ from the configuration",
            path.display()
        )));
    }
    Ok(ens)
}

#[derive(Debug, Serialize)]
struct CumulantRow {
    points: Vec<Vec<i64>>,
    order: usize,
    analytic: f64,
    empirical: CumulantEstimate,
    z: f64,
    relative_error: Option<f64>,
}

fn cumulants(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let sec = ctx.section(&ctx.cfg.cumulants, "cumulants")?;
    let model = ctx.cfg.field_model()?;
    let schwinger = SchwingerModel::new(model.clone())?;
    let opts = EstimatorOptions {
        translation_average: sec.translation_average,
    };
    let loaded;
    let lazy;
    let source: &dyn Fn(&PointConfig) -> lfl_core::Result<CumulantEstimate> = match &sec.ensemble {
        Some(path) => {
            loaded = load_ensemble(path, &ctx.cfg, &model)?;
            &|pts| empirical_cumulant(&loaded, pts, opts)
        }
        None => {
            lazy = LazyEnsemble::new(model.clone(), ctx.cfg.run.n_samples, ctx.seed())?;
            &|pts| empirical_cumulant(&lazy, pts, opts)
        }
    };
    let mut rows = Vec::new();
    for set in &sec.point_sets {
        let pts = PointConfig::new(&model.spec, set.clone())?;
        let analytic = schwinger.truncated(pts.points())?;
        let est = source(&pts)?;
        let z = if est.stderr > 0.0 {
            (est.value - analytic) / est.stderr
        } else {
            0.0
        };
        rows.push(CumulantRow {
            points: set.clone(),
            order: set.len(),
            analytic,
            empirical: est,
            z,
            relative_error: (analytic != 0.0).then(|| (est.value - analytic).abs() / analytic.abs()),
        });
    }
    #[derive(Serialize)]
    struct Body {
        n_samples: usize,
        rows: Vec<CumulantRow>,
    }
    let n_samples = rows.first().map_or(0, |r| r.empirical.n_samples);
    Ok(vec![write_json(
        &ctx.path("cumulants.json"),
        &ctx.envelope("cumulants", Body { n_samples, rows }),
    )?])
}

fn schwinger(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let sec = ctx.section(&ctx.cfg.schwinger, "schwinger")?;
    let model = ctx.cfg.field_model()?;
    let s = SchwingerModel::new(model.clone())?;
    #[derive(Serialize)]
    struct Row {
        points: Vec<Vec<i64>>,
        truncated: f64,
        moment: Option<f64>,
        centered_moment: Option<f64>,
    }
    let mut rows = Vec::new();
    for set in &sec.point_sets {
        let pts = PointConfig::new(&model.spec, set.clone())?;
        let small = pts.len() <= lfl_core::cumulants::MAX_EMPIRICAL_ORDER;
        rows.push(Row {
            points: set.clone(),
            truncated: s.truncated(pts.points())?,
            moment: if small {
                Some(s.moment(pts.points(), false)?)
            } else {
                None
            },
            centered_moment: if small {
                Some(s.moment(pts.points(), true)?)
            } else {
                None
            },
        });
    }
    #[derive(Serialize)]
    struct Body {
        mean: f64,
        rows: Vec<Row>,
    }
    Ok(vec![write_json(
        &ctx.path("schwinger.json"),
        &ctx.envelope("schwinger", Body { mean: s.mean(), rows }),
    )?])
}

#[derive(Debug, Serialize)]
struct GramSummary {
    basis_size: usize,
    max_degree: usize,
    min_eig: f64,
    norm: f64,
    relative_min_eig: f64,
    verdict: GramVerdict,
    verdict_text: &'static str,
}

impl GramSummary {
    fn of(r: &GramReport) -> Self {
        Self {
            basis_size: r.basis.len(),
            max_degree: r.basis.max_degree(),
            min_eig: r.min_eig,
            norm: r.norm,
            relative_min_eig: r.relative_min_eig(),
            verdict: r.verdict,
            verdict_text: r.verdict.describe(),
        }
    }
}

fn rp_check(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let sec = ctx.section(&ctx.cfg.rp, "rp")?;
    let model = ctx.cfg.field_model()?;
    let basis = sec.basis.build(model.spec)?;
    let report = GramReport::compute(&model, &basis, sec.centered)?;
    let mut record = report.witness_record();
    let mut paths = Vec::new();
    if report.verdict == GramVerdict::NegativeWitness {
        if sec.verify_samples > 0 {
            record.verification = Some(verify_witness(
                &record,
                sec.verify_samples,
                fresh_seed(ctx.seed(), TAG_RP, 0),
                sec.translation,
            )?);
        }
        paths.push(write_json(&ctx.path("witnesses.json"), &vec![record.clone()])?);
    }
    #[derive(Serialize)]
    struct Body {
        #[serde(flatten)]
        summary: GramSummary,
        witness: Vec<f64>,
        verification: Option<Verification>,
        matrix: Vec<Vec<f64>>,
    }
    let verification = record.verification.clone();
    paths.insert(
        0,
        write_json(
            &ctx.path("rp_check.json"),
            &ctx.envelope(
                "rp-check",
                Body {
                    summary: GramSummary::of(&report),
                    witness: report.witness.clone(),
                    verification: verification.clone(),
                    matrix: report.matrix.clone(),
                },
            ),
        )?,
    );
    match sec.expect {
        Some(Expectation::Negative) => {
            if report.verdict != GramVerdict::NegativeWitness {
                return Err(CliError::CheckFailed(format!(
                    "expected a negative eigenvalue, got min_eig {:e} (norm {:e})",
                    report.min_eig, report.norm
                )));
            }
            if let Some(v) = verification {
                if v.status != VerificationStatus::Confirmed {
                    return Err(CliError::CheckFailed(format!("witness verification: {:?}", v.status)));
                }
            }
        }
        Some(Expectation::NoWitness) if report.verdict != GramVerdict::NoWitnessFound => {
            return Err(CliError::CheckFailed(format!(
                "expected no witness, got min_eig {:e} (norm {:e})",
                report.min_eig, report.norm
            )));
        }
        _ => {}
    }
    Ok(paths)
}

fn rp_scan_cmd(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let sec = ctx.section(&ctx.cfg.rp_scan, "rp_scan")?;
    let template = ctx.cfg.field_model()?;
    let basis = sec.basis.build(template.spec)?;
    let grid: Vec<ScanPoint> = sec
        .alphas
        .iter()
        .flat_map(|&alpha| sec.lambdas.iter().map(move |&lambda| ScanPoint { alpha, lambda }))
        .collect();
    let rows = rp_scan(&template, &grid, &basis, sec.centered)?;
    let mut archive: Vec<WitnessRecord> = Vec::new();
    let mut csv = Vec::new();
    #[derive(Serialize)]
    struct Row {
        alpha: f64,
        lambda: f64,
        summary: Option<GramSummary>,
        error: Option<String>,
        verification: Option<Verification>,
    }
    let mut json_rows = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let mut verification = None;
        if let Ok(r) = &row.report {
            if r.verdict == GramVerdict::NegativeWitness {
                let mut rec = r.witness_record();
                if sec.verify_samples > 0 {
                    let v = verify_witness(
                        &rec,
                        sec.verify_samples,
                        fresh_seed(ctx.seed(), TAG_SCAN, i),
                        sec.translation,
                    )?;
                    verification = Some(v.clone());
                    rec.verification = Some(v);
                }
                archive.push(rec);
            }
        }
        let status = verification.as_ref().map(|v| label(&v.status)).unwrap_or_default();
        csv.push(match &row.report {
            Ok(r) => vec![
                row.point.alpha.to_string(),
                row.point.lambda.to_string(),
                format!("{:e}", r.min_eig),
                format!("{:e}", r.norm),
                format!("{:e}", r.relative_min_eig()),
                label(&r.verdict),
                status,
            ],
            Err(_) => vec![
                row.point.alpha.to_string(),
                row.point.lambda.to_string(),
                String::new(),
                String::new(),
                String::new(),
                "error".into(),
                String::new(),
            ],
        });
        json_rows.push(Row {
            alpha: row.point.alpha,
            lambda: row.point.lambda,
            summary: row.report.as_ref().ok().map(GramSummary::of),
            error: row.report.as_ref().err().cloned(),
            verification,
        });
    }
    #[derive(Serialize)]
    struct AlphaTrend {
        alpha: f64,
        trend_in_lambda: Trend,
    }
    let trends: Vec<AlphaTrend> = sec
        .alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let n = sec.lambdas.len();
            AlphaTrend {
                alpha,
                trend_in_lambda: trend(&rows[i * n..(i + 1) * n]),
            }
        })
        .collect();
    let refuted = archive
        .iter()
        .filter(|r| {
            r.verification
                .as_ref()
                .is_some_and(|v| v.status == VerificationStatus::Refuted)
        })
        .count();
    #[derive(Serialize)]
    struct Body {
        basis_size: usize,
        rows: Vec<Row>,
        trends: Vec<AlphaTrend>,
        witnesses: usize,
    }
    let mut paths = vec![
        write_json(
            &ctx.path("rp_scan.json"),
            &ctx.envelope(
                "rp-scan",
                Body {
                    basis_size: basis.len(),
                    rows: json_rows,
                    trends,
                    witnesses: archive.len(),
                },
            ),
        )?,
        write_csv(
            &ctx.path("rp_scan.csv"),
            &[
                "alpha",
                "lambda",
                "min_eig",
                "norm",
                "relative_min_eig",
                "verdict",
                "verification",
            ],
            &csv,
        )?,
    ];
    if !archive.is_empty() {
        paths.push(write_json(&ctx.path("witnesses.json"), &archive)?);
    }
    if refuted > 0 {
        return Err(CliError::CheckFailed(format!(
            "{refuted} witness(es) inconsistent with their Monte-Carlo re-estimate"
        )));
    }
    Ok(paths)
}

/// The serde spelling of a unit enum variant.
fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn bump(b: &Option<Bump>, default: MomentumTestFunction) -> lfl_core::Result<MomentumTestFunction> {
    match b {
        Some(b) => MomentumTestFunction::generic(b.center, b.width, b.radius),
        None => Ok(default),
    }
}

fn baumann(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let sec = ctx.section(&ctx.cfg.baumann, "baumann")?;
    let base = BaumannSetup::standard()?;
    let spacelike = |b: &Option<Bump>, d: MomentumTestFunction| match b {
        Some(b) => make_spacelike_test(b.center, b.width, b.radius),
        None => Ok(d),
    };
    let timelike = |b: &Option<Bump>, d: MomentumTestFunction| match b {
        Some(b) => MomentumTestFunction::make_timelike_test(b.center, b.width, b.radius),
        None => Ok(d),
    };
    let setup = BaumannSetup {
        masses: MassAssignment::fixed(sec.mass)?,
        f: bump(&sec.f, base.f)?,
        g: bump(&sec.g, base.g)?,
        h1: spacelike(&sec.h1, base.h1)?,
        h2: spacelike(&sec.h2, base.h2)?,
        control_h1: timelike(&sec.control_h1, base.control_h1)?,
        control_h2: timelike(&sec.control_h2, base.control_h2)?,
    };
    let report: BaumannReport = baumann_check(&setup, &sec.epsilons, &IntegratorSpec::new(sec.samples, ctx.seed()))?;
    #[derive(Serialize)]
    struct Body<'a> {
        setup: &'a BaumannSetup,
        #[serde(flatten)]
        report: &'a BaumannReport,
    }
    let path = write_json(
        &ctx.path("baumann.json"),
        &ctx.envelope(
            "baumann",
            Body {
                setup: &setup,
                report: &report,
            },
        ),
    )?;
    if report.verdict != Verdict::Pass {
        return Err(CliError::CheckFailed(format!(
            "verdict {:?}: {}",
            report.verdict,
            report.notes.join("; ")
        )));
    }
    Ok(vec![path])
}

fn spectral(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let sec = ctx.section(&ctx.cfg.spectral, "spectral")?;
    let params = ctx.cfg.params()?;
    let spec = ctx.cfg.spec()?;
    let alphas = if sec.alphas.is_empty() {
        vec![params.alpha]
    } else {
        sec.alphas.clone()
    };
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-10,
        ..QuadOptions::default()
    };
    #[derive(Serialize)]
    struct IdentityRow {
        alpha: f64,
        q2: f64,
        superposition: f64,
        expected: f64,
        relative_error: f64,
        pass: bool,
    }
    #[derive(Serialize)]
    struct GreenRow {
        site: Vec<i64>,
        distance: f64,
        lattice: f64,
        spectral: f64,
        relative_error: f64,
        pass: bool,
    }
    let mut identity = Vec::new();
    for &alpha in &alphas {
        let sd = SpectralDensity::new(alpha, params.m0, sec.normalization)?;
        let ratio =
            sd.prefactor() / SpectralDensity::new(alpha, params.m0, SpectralNormalization::Analytic)?.prefactor();
        for &q2 in &sec.q2 {
            let v = spectral_propagator(&sd, q2, &opts)?;
            let expected = ratio * (q2 + params.m0 * params.m0).powf(-alpha);
            let rel = (v - expected).abs() / expected;
            identity.push(IdentityRow {
                alpha,
                q2,
                superposition: v,
                expected,
                relative_error: rel,
                pass: rel <= sec.kl_tolerance,
            });
        }
    }
    let mut green = Vec::new();
    for site in &sec.separations {
        let p = ModelParams { ..params };
        let lattice = green_continuum_richardson(&p, &spec, site)?;
        let x: Vec<f64> = site.iter().map(|&c| c as f64 * spec.spacing()).collect();
        let reference = green_real_kl_periodic(&p, &x, spec.period(), sec.images, &opts)?;
        let rel = (lattice - reference).abs() / reference.abs();
        green.push(GreenRow {
            site: site.clone(),
            distance: x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            lattice,
            spectral: reference,
            relative_error: rel,
            pass: rel <= sec.green_tolerance,
        });
    }
    let failed = identity.iter().filter(|r| !r.pass).count() + green.iter().filter(|r| !r.pass).count();
    #[derive(Serialize)]
    struct Body {
        identity: Vec<IdentityRow>,
        green: Vec<GreenRow>,
        pass: bool,
    }
    let path = write_json(
        &ctx.path("spectral.json"),
        &ctx.envelope(
            "spectral",
            Body {
                identity,
                green,
                pass: failed == 0,
            },
        ),
    )?;
    if failed > 0 {
        return Err(CliError::CheckFailed(format!(
            "{failed} comparison(s) outside tolerance"
        )));
    }
    Ok(vec![path])
}

/// Accepts either one record or a list.
#[derive(Deserialize)]
#[serde(untagged)]
enum Archive {
    Many(Vec<WitnessRecord>),
    One(Box<WitnessRecord>),
}

fn verify(ctx: &Context, witness: &Path) -> CliResult<Vec<PathBuf>> {
    let text = std::fs::read_to_string(witness).map_err(|e| CliError::Config(format!("{}: {e}", witness.display())))?;
    let records = match serde_json::from_str::<Archive>(&text)
        .map_err(|e| CliError::Config(format!("{}: malformed witness archive: {e}", witness.display())))?
    {
        Archive::Many(v) => v,
        Archive::One(r) => vec![*r],
    };
    if records.is_empty() {
        return Err(CliError::Config(format!("{}: archive is empty", witness.display())));
    }
    let (n, translation) = match &ctx.cfg.verify {
        Some(v) => (v.n_samples, v.translation),
        None => (ctx.cfg.run.n_samples, lfl_core::os::TranslationAverage::Time),
    };
    let mut results = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let seed = fresh_seed(ctx.seed(), TAG_VERIFY, i);
        results.push(verify_witness(r, n, seed, translation)?);
    }
    let confirmed = results.iter().all(|v| v.status == VerificationStatus::Confirmed);
    #[derive(Serialize)]
    struct Body {
        archive: String,
        results: Vec<Verification>,
        all_confirmed: bool,
    }
    let path = write_json(
        &ctx.path("verification.json"),
        &ctx.envelope(
            "verify-witness",
            Body {
                archive: witness.display().to_string(),
                results: results.clone(),
                all_confirmed: confirmed,
            },
        ),
    )?;
    if !confirmed {
        let statuses: Vec<String> = results.iter().map(|v| format!("{:?}", v.status)).collect();
        return Err(CliError::CheckFailed(format!(
            "not all witnesses confirmed: {}",
            statuses.join(", ")
        )));
    }
    Ok(vec![path])
}
