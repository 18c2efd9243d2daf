use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use transplant_core::adaptation::{evolve, AdaptError, GpConfig, HostContext, Organ};
use transplant_core::depgraph::build_sdg;
use transplant_core::extractor::{extract_over_organ, store_slices, OverOrgan};
use transplant_core::frontend::{project_units, ProjectModel};
use transplant_core::implantation::{feature_macro, implant as implant_organ, ImplantError, ImplantRecord, PostoperativeProject};
use transplant_core::platform::{Annotation, Feature, FeatureKind, Platform, PlatformError};
use transplant_core::postop::{self, PostopError, RunOptions, ValidationReport, Verdict};
use transplant_core::reconfigurator::{load_prepared, remove_features_units, FeatureDirectiveList, RemovalMode};
use transplant_core::sandbox::BuildCommand;
use transplant_core::suite::{SuiteKind, TestSuite};
use transplant_core::Error;

use crate::workspace::{write_json, RunLog, Workspace};
use crate::{
    AdaptArgs, DonorArgs, ExtractArgs, GpArgs, HostArgs, ImplantArgs, ReduceHostArgs, RunArgs, TransplantArgs,
    ValidateArgs, WorkspaceArgs,
};

/// Why a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// The pipeline ran but the product is not acceptable.
    Broken(String),
    /// Bad flags or inputs.
    Usage(String),
    Internal(anyhow::Error),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Broken(m) | Failure::Usage(m) => f.write_str(m),
            Failure::Internal(e) => write!(f, "{e:#}"),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Broken(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match &e {
            Error::Platform(
                PlatformError::DuplicateFeatureId(_)
                | PlatformError::NotInitialized(_)
                | PlatformError::UnknownFeature(_)
                | PlatformError::MissingArtifact(_),
            )
            | Error::Adapt(AdaptError::MarkerNotFound(_) | AdaptError::MarkerAmbiguous { .. } | AdaptError::InvalidConfig(_))
            | Error::Implant(ImplantError::MarkerNotFound(_) | ImplantError::MarkerAmbiguous { .. })
            | Error::Postop(PostopError::MissingSuite(_) | PostopError::DuplicateSuite(_))
            | Error::Suite(_)
            | Error::Reconfig(_)
            | Error::Sdg(_) => Failure::Usage(msg),
            Error::Adapt(AdaptError::NoViableOrganFound { .. })
            | Error::Adapt(AdaptError::Implant(ImplantError::SignatureConflict { .. }))
            | Error::Implant(ImplantError::SignatureConflict { .. } | ImplantError::BuildFailedAfterImplant(_)) => {
                Failure::Broken(msg)
            }
            _ => Failure::Internal(e.into()),
        }
    }
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}
from_core!(PlatformError, AdaptError, ImplantError, PostopError, std::io::Error);

fn internal(context: &str) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Internal(anyhow::Error::new(e).context(context.to_string()))
}

type Result<T> = std::result::Result<T, Failure>;

/// Runs a command body and writes the run log if the workspace exists.
fn logged(ws: &Path, command: &str, body: impl FnOnce(&mut RunLog) -> Result<()>) -> Result<()> {
    let mut log = RunLog::new(command);
    let result = body(&mut log);
    if let Err(e) = &result {
        log.exit_code = e.code();
        log.error = Some(e.to_string());
    }
    if ws.is_dir() {
        write_json(&Workspace::new(ws).run_log(), &log).map_err(internal("writing the run log"))?;
    }
    result
}

// Flag checks. These run before anything is written.

fn dir_arg(flag: &str, path: &Path) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--{flag}: {} is not a directory", path.display())))
    }
}

fn file_arg(flag: &str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--{flag}: {} is not a file", path.display())))
    }
}

/// Artifact ids name directories, so keep them plain.
fn id_arg(flag: &str, id: &str) -> Result<()> {
    let ok = !id.is_empty() && !id.starts_with('.') && id.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c));
    if ok {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--{flag}: {id:?} is not a valid id (letters, digits, _ - .)")))
    }
}

fn read_seeds(path: &Path) -> Result<Vec<u64>> {
    file_arg("seeds_file", path)?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("--seeds_file: {e}")))?;
    let mut seeds = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let seed = line
            .parse()
            .map_err(|_| Failure::Usage(format!("--seeds_file: line {}: {line:?} is not an unsigned integer", i + 1)))?;
        seeds.push(seed);
    }
    if seeds.is_empty() {
        return Err(Failure::Usage("--seeds_file: no seeds".into()));
    }
    Ok(seeds)
}

fn read_features(path: Option<&Path>) -> Result<Option<FeatureDirectiveList>> {
    let Some(path) = path else { return Ok(None) };
    file_arg("features_file", path)?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("--features_file: {e}")))?;
    FeatureDirectiveList::parse(&text, RemovalMode::DeleteGuardedCode)
        .map(Some)
        .map_err(|e| Failure::Usage(format!("--features_file: {e}")))
}

/// `path` relative to `root`, with `/` separators.
fn relative_to(flag: &str, root: &Path, path: &Path) -> Result<String> {
    let outside = || Failure::Usage(format!("--{flag}: {} is not inside {}", path.display(), root.display()));
    let root = root.canonicalize().map_err(|_| outside())?;
    // a bare relative name may be meant relative to the project
    let full = if path.exists() { path.to_path_buf() } else { root.join(path) };
    let full = full.canonicalize().map_err(|_| outside())?;
    let rel = full.strip_prefix(&root).map_err(|_| outside())?;
    Ok(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"))
}

fn dir_name(path: &Path) -> String {
    path.canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "project".into())
}

fn gp_config(gp: &GpArgs, run: &RunArgs, seeds: Vec<u64>) -> Result<GpConfig> {
    let config = GpConfig {
        population_size: gp.gp_pop,
        max_generations: gp.gp_gens,
        seeds,
        test_timeout: Duration::from_secs(run.test_timeout_secs),
        jobs: run.jobs as usize,
        ..GpConfig::default()
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(config)
}

fn run_options(run: &RunArgs, defines: Vec<String>) -> RunOptions {
    RunOptions {
        build: BuildCommand(run.build_command.clone()),
        defines,
        timeout: Duration::from_secs(run.test_timeout_secs),
        jobs: run.jobs as usize,
    }
}

fn load_suite(dir: &Path, kind: SuiteKind) -> Result<TestSuite> {
    let suite = TestSuite::load(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    if suite.kind != kind {
        return Err(Failure::Usage(format!("{}: expected a {} suite, found {}", dir.display(), kind.as_str(), suite.kind.as_str())));
    }
    Ok(suite)
}

// Pipeline steps shared by the subcommands.

fn reduce(host: &HostArgs, features: Option<&FeatureDirectiveList>) -> Result<ProjectModel> {
    let units = project_units(&host.host_project).map_err(Error::from)?;
    let units = match features {
        Some(list) => {
            let (units, warnings) = remove_features_units(&units, list).map_err(Error::from)?;
            for w in warnings {
                log::warn!("{w}");
            }
            units
        }
        None => units,
    };
    Ok(ProjectModel::from_units(&host.host_project, units).map_err(Error::from)?)
}

fn extract_from(donor: &DonorArgs, donor_target: Option<&str>, feature: &str) -> Result<OverOrgan> {
    let project = load_prepared(&donor.donor_folder, &BTreeSet::new())?;
    let sdg = build_sdg(&project).map_err(Error::from)?;
    if let Some(path) = &donor.emit_sdg {
        fs::write(path, sdg.to_dot()).map_err(internal("writing the dependency graph"))?;
    }
    let donor_id = dir_name(&donor.donor_folder);
    Ok(extract_over_organ(&project, &sdg, &donor.core_function_target, donor_target, feature, &donor_id)
        .map_err(Error::from)?)
}

/// Adds the feature (under the root, created if needed) and its entry point.
fn register(platform: &Platform, organ: &OverOrgan) -> Result<()> {
    let mut model = platform.feature_model()?;
    if model.features.is_empty() {
        model.features.push(Feature { id: "root".into(), parent: None, kind: FeatureKind::Mandatory });
    }
    if model.feature(&organ.feature_id).is_none() {
        let root = model.features.iter().find(|f| f.parent.is_none()).map(|f| f.id.clone());
        model.features.push(Feature { id: organ.feature_id.clone(), parent: root, kind: FeatureKind::Optional });
    }
    model.annotations.insert(
        organ.feature_id.clone(),
        Annotation { donor: organ.donor_id.clone(), entry_point: organ.entry_point.clone() },
    );
    platform.save_feature_model(&model)?;
    Ok(())
}

/// The postoperative project so far, or the product base if nothing was
/// implanted yet.
fn current_postop(ws: &Workspace, platform: &Platform, product_base: &str) -> Result<PostoperativeProject> {
    let base = platform.load_product_base(product_base)?;
    if !ws.implant_log().is_file() {
        return Ok(PostoperativeProject::new(base));
    }
    let text = fs::read_to_string(ws.implant_log()).map_err(internal("reading the implant log"))?;
    let implant_log: Vec<ImplantRecord> =
        serde_json::from_str(&text).map_err(|e| Failure::Internal(anyhow::anyhow!("corrupt implant log: {e}")))?;
    let project = ProjectModel::load(&ws.postop()).map_err(Error::from)?;
    Ok(PostoperativeProject { project, implant_log })
}

fn save_postop(ws: &Workspace, post: &PostoperativeProject) -> Result<()> {
    let tmp = ws.root.join(".postop.tmp");
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(internal("clearing a stale postop copy"))?;
    }
    post.write_to(&tmp).map_err(internal("writing the postoperative project"))?;
    if ws.postop().exists() {
        fs::remove_dir_all(ws.postop()).map_err(internal("replacing the postoperative project"))?;
    }
    fs::rename(&tmp, ws.postop()).map_err(internal("replacing the postoperative project"))?;
    write_json(&ws.implant_log(), &post.implant_log).map_err(internal("writing the implant log"))
}

fn check_host_target(ctx: &HostContext, target: Option<&str>) -> Result<()> {
    match target {
        Some(t) if t != ctx.file => Err(Failure::Usage(format!(
            "--host_target: marker /*@transplant:{}*/ is in {}, not {t}",
            ctx.marker, ctx.file
        ))),
        _ => Ok(()),
    }
}

fn adapt_step(
    ws: &Workspace,
    platform: &Platform,
    feature: &str,
    product_base: &str,
    host_target: Option<&str>,
    config: &GpConfig,
    build: &BuildCommand,
) -> Result<Organ> {
    let over = platform.load_over_organ(feature)?;
    let icebox = platform
        .load_icebox(feature)
        .map_err(|_| Failure::Usage(format!("no ice-box suite stored for {feature}; pass --icebox to extract")))?;
    let post = current_postop(ws, platform, product_base)?;
    let ctx = HostContext::new(&post.project, product_base, feature, build.clone())?;
    check_host_target(&ctx, host_target)?;
    let organ = evolve(&over, &post, &ctx, &icebox, config)?;
    write_json(&ws.organ(feature), &organ).map_err(internal("writing the organ"))?;
    Ok(organ)
}

fn implant_step(
    ws: &Workspace,
    platform: &Platform,
    feature: &str,
    product_base: &str,
    flag: Option<&str>,
    emit_report: bool,
    build: &BuildCommand,
) -> Result<()> {
    let path = ws.organ(feature);
    let text = fs::read_to_string(&path)
        .map_err(|_| Failure::Usage(format!("no adapted organ for {feature}; run adapt first")))?;
    let organ: Organ =
        serde_json::from_str(&text).map_err(|e| Failure::Internal(anyhow::anyhow!("{}: {e}", path.display())))?;
    let post = current_postop(ws, platform, product_base)?;
    let ctx = HostContext::new(&post.project, product_base, feature, build.clone())?;
    let post = implant_organ(&organ, &post, &ctx, flag, Some(build))?;
    if emit_report {
        let report = &post.implant_log.last().expect("implant recorded").report;
        write_json(&ws.clone_report(feature), report).map_err(internal("writing the clone report"))?;
    }
    save_postop(ws, &post)
}

/// Everything the product needs defined for all implanted features to be
/// active.
fn enabled_defines(post: &PostoperativeProject) -> Vec<String> {
    let mut set: BTreeSet<String> = post.defines().into_iter().collect();
    set.extend(post.implant_log.iter().filter_map(|r| r.flag.as_deref()).map(feature_macro));
    set.into_iter().collect()
}

struct Suites {
    regression: TestSuite,
    plus: TestSuite,
    acceptance: TestSuite,
}

fn load_suites(platform_tests: Option<&Path>, dir: &Path) -> Result<Suites> {
    dir_arg("suites", dir)?;
    // a regression suite grown by earlier promotions takes precedence
    let regression = match platform_tests {
        Some(p) if p.join("suite.json").is_file() => load_suite(p, SuiteKind::Regression)?,
        _ => load_suite(&dir.join("regression"), SuiteKind::Regression)?,
    };
    Ok(Suites {
        regression,
        plus: load_suite(&dir.join("regression++"), SuiteKind::RegressionPlus)?,
        acceptance: load_suite(&dir.join("acceptance"), SuiteKind::Acceptance)?,
    })
}

fn validate_step(
    ws: &Workspace,
    platform: &Platform,
    product_base: &str,
    suites: Suites,
    run: &RunArgs,
) -> Result<ValidationReport> {
    let post = current_postop(ws, platform, product_base)?;
    let opts = run_options(run, enabled_defines(&post));
    let all = [suites.regression.clone(), suites.plus.clone(), suites.acceptance.clone()];
    let report = postop::validate(&post.project, &all, &opts)?;
    report.write(&ws.validation_report()).map_err(internal("writing the validation report"))?;
    if report.verdict == Verdict::Ok {
        let promoted = postop::promote_tests(&suites.regression, &[&suites.plus, &suites.acceptance], &report)?;
        let dest = platform.product_base_tests(product_base);
        let tmp = dest.with_extension("tmp");
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(internal("clearing a stale suite copy"))?;
        }
        promoted.save(&tmp).map_err(internal("saving the promoted suite"))?;
        if dest.exists() {
            fs::remove_dir_all(&dest).map_err(internal("replacing the regression suite"))?;
        }
        fs::rename(&tmp, &dest).map_err(internal("replacing the regression suite"))?;
    }
    Ok(report)
}

fn verdict_result(report: &ValidationReport, log: &mut RunLog) -> Result<()> {
    let summary: Vec<String> =
        report.suites.iter().map(|s| format!("{} {}/{}", s.kind.as_str(), s.passed, s.total)).collect();
    println!("{}", summary.join(", "));
    match report.verdict {
        Verdict::Ok => {
            log.verdict = Some("ok".into());
            Ok(())
        }
        Verdict::Broken => {
            log.verdict = Some("broken".into());
            Err(Failure::Broken(format!("validation broken: {}", summary.join(", "))))
        }
    }
}

fn record_organ(log: &mut RunLog, organ: &Organ) {
    log.organ_statements = Some(organ.statement_count());
    log.fitness = organ.fitness.map(|f| f.to_string());
}

// Subcommands.

pub fn init(a: &WorkspaceArgs) -> Result<()> {
    fs::create_dir_all(&a.workspace).map_err(internal("creating the workspace"))?;
    logged(&a.workspace, "init", |_| {
        Platform::init(&Workspace::new(&a.workspace).platform())?;
        Ok(())
    })
}

pub fn platform_ls(a: &WorkspaceArgs) -> Result<()> {
    let platform = Platform::open(&Workspace::new(&a.workspace).platform())?;
    let rows = platform.list()?;
    println!("{:<14} {:<24} {:>5}  created", "kind", "id", "files");
    for r in rows {
        println!("{:<14} {:<24} {:>5}  {}", r.kind, r.id, r.files, r.created_at);
    }
    Ok(())
}

pub fn reduce_host(a: &ReduceHostArgs) -> Result<()> {
    dir_arg("host_project", &a.host.host_project)?;
    let features = read_features(a.host.features_file.as_deref())?;
    let id = a.product_base.clone().unwrap_or_else(|| dir_name(&a.host.host_project));
    id_arg("product-base", &id)?;
    let platform = Platform::open(&Workspace::new(&a.ws.workspace).platform())?;
    logged(&a.ws.workspace, "reduce-host", |log| {
        log.time("extraction", |_| {
            let project = reduce(&a.host, features.as_ref())?;
            platform.store_product_base(&id, &project, a.force)?;
            println!("product base {id}: {} files", project.units.len());
            Ok(())
        })
    })
}

pub fn extract(a: &ExtractArgs) -> Result<()> {
    dir_arg("donor_folder", &a.donor.donor_folder)?;
    let feature = a.feature.clone().unwrap_or_else(|| a.donor.core_function_target.clone());
    id_arg("feature", &feature)?;
    let donor_target = a.donor.donor_target.as_deref().map(|t| relative_to("donor_target", &a.donor.donor_folder, t)).transpose()?;
    let icebox = a.icebox.as_deref().map(|d| load_suite(d, SuiteKind::Icebox)).transpose()?;
    let platform = Platform::open(&Workspace::new(&a.ws.workspace).platform())?;
    if platform.has_over_organ(&feature) && !a.force {
        return Err(Failure::Usage(format!("feature {feature} already stored (use --force to replace)")));
    }
    logged(&a.ws.workspace, "extract", |log| {
        log.feature = Some(feature.clone());
        log.time("extraction", |_| {
            let organ = extract_from(&a.donor, donor_target.as_deref(), &feature)?;
            if let Some(suite) = &icebox {
                platform.store_icebox(&feature, suite, a.force)?;
            }
            store_slices(&organ, &platform, icebox.as_ref().map(|_| feature.as_str()), a.force)?;
            register(&platform, &organ)?;
            println!("over-organ {feature}: {} elements in {} files", organ.organ_elements.len(), organ.file_map.len());
            Ok(())
        })
    })
}

pub fn adapt(a: &AdaptArgs) -> Result<()> {
    let seeds = read_seeds(&a.gp.seeds_file)?;
    let config = gp_config(&a.gp, &a.run, seeds.clone())?;
    let host_target = a.host_target.as_ref().map(|p| p.to_string_lossy().replace('\\', "/"));
    let ws = Workspace::new(&a.ws.workspace);
    let platform = Platform::open(&ws.platform())?;
    let build = BuildCommand(a.run.build_command.clone());
    logged(&a.ws.workspace, "adapt", |log| {
        log.feature = Some(a.feature.clone());
        log.seeds = seeds;
        let organ = log.time("adaptation", |_| {
            adapt_step(&ws, &platform, &a.feature, &a.product_base, host_target.as_deref(), &config, &build)
        })?;
        record_organ(log, &organ);
        println!("organ {}: {} statements", a.feature, organ.statement_count());
        Ok(())
    })
}

pub fn implant(a: &ImplantArgs) -> Result<()> {
    if let Some(flag) = &a.flag {
        id_arg("flag", flag)?;
    }
    let ws = Workspace::new(&a.ws.workspace);
    let platform = Platform::open(&ws.platform())?;
    let build = BuildCommand(a.run.build_command.clone());
    logged(&a.ws.workspace, "implant", |log| {
        log.feature = Some(a.feature.clone());
        log.time("merging", |_| implant_step(&ws, &platform, &a.feature, &a.product_base, a.flag.as_deref(), a.emit_report, &build))
    })
}

pub fn validate(a: &ValidateArgs) -> Result<()> {
    let ws = Workspace::new(&a.ws.workspace);
    let platform = Platform::open(&ws.platform())?;
    let suites = load_suites(Some(&platform.product_base_tests(&a.product_base)), &a.suites)?;
    logged(&a.ws.workspace, "validate", |log| {
        let report = log.time("validation", |_| validate_step(&ws, &platform, &a.product_base, suites, &a.run))?;
        verdict_result(&report, log)
    })
}

pub fn transplant(a: &TransplantArgs) -> Result<()> {
    dir_arg("host_project", &a.host.host_project)?;
    dir_arg("donor_folder", &a.donor.donor_folder)?;
    let features = read_features(a.host.features_file.as_deref())?;
    let seeds = read_seeds(&a.gp.seeds_file)?;
    let config = gp_config(&a.gp, &a.run, seeds.clone())?;
    let feature = a.feature.clone().unwrap_or_else(|| a.donor.core_function_target.clone());
    id_arg("feature", &feature)?;
    if let Some(flag) = &a.flag {
        id_arg("flag", flag)?;
    }
    let host_target = relative_to("host_target", &a.host.host_project, &a.host_target)?;
    let donor_target = a.donor.donor_target.as_deref().map(|t| relative_to("donor_target", &a.donor.donor_folder, t)).transpose()?;
    let suites_dir = match &a.suites {
        Some(d) => d.clone(),
        None => a.host.host_project.canonicalize().map_err(Failure::from)?.parent().map(|p| p.join("tests")).unwrap_or_else(|| PathBuf::from("tests")),
    };
    let icebox = load_suite(&suites_dir.join("icebox"), SuiteKind::Icebox)?;
    let suites = load_suites(None, &suites_dir)?;
    let product_base = dir_name(&a.host.host_project);
    id_arg("host_project", &product_base)?;
    let ws = Workspace::new(&a.ws.workspace);
    if (ws.postop().exists() || ws.implant_log().exists()) && !a.force {
        return Err(Failure::Usage(format!(
            "{} already holds a postoperative project (use --force to start over)",
            ws.root.display()
        )));
    }

    fs::create_dir_all(&ws.root).map_err(internal("creating the workspace"))?;
    logged(&ws.root, "transplant", |log| {
        log.feature = Some(feature.clone());
        log.seeds = seeds;
        if ws.postop().exists() {
            fs::remove_dir_all(ws.postop()).map_err(internal("clearing the postoperative project"))?;
        }
        if ws.implant_log().exists() {
            fs::remove_file(ws.implant_log()).map_err(internal("clearing the implant log"))?;
        }
        let platform = Platform::init(&ws.platform())?;
        let build = BuildCommand(a.run.build_command.clone());
        log.time("extraction", |_| -> Result<()> {
            let host = reduce(&a.host, features.as_ref())?;
            platform.store_product_base(&product_base, &host, a.force)?;
            let organ = extract_from(&a.donor, donor_target.as_deref(), &feature)?;
            platform.store_icebox(&feature, &icebox, a.force)?;
            store_slices(&organ, &platform, Some(&feature), a.force)?;
            register(&platform, &organ)
        })?;
        let organ = log.time("adaptation", |_| {
            adapt_step(&ws, &platform, &feature, &product_base, Some(&host_target), &config, &build)
        })?;
        record_organ(log, &organ);
        log.time("merging", |_| {
            implant_step(&ws, &platform, &feature, &product_base, a.flag.as_deref(), a.emit_report, &build)
        })?;
        let report = log.time("validation", |_| validate_step(&ws, &platform, &product_base, suites, &a.run))?;
        verdict_result(&report, log)
    })
}
