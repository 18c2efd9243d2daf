use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use transplant_bench::synthetic_donor;
use transplant_core::adaptation::{materialize, synthesize_wrapper, GpIndividual, HostContext};
use transplant_core::depgraph::build_sdg;
use transplant_core::extractor::extract_over_organ;
use transplant_core::frontend::{project_units, ProjectModel};
use transplant_core::implantation::{detect_clones, PostoperativeProject};
use transplant_core::reconfigurator::{load_prepared, remove_features, FeatureDirectiveList, RemovalMode};
use transplant_core::sandbox::BuildCommand;

const SIZES: [(usize, usize); 3] = [(2, 10), (4, 25), (8, 50)];

fn sdg(c: &mut Criterion) {
    let mut g = c.benchmark_group("sdg");
    for (files, per) in SIZES {
        let p = synthetic_donor(files, per);
        let id = files * per;
        g.bench_with_input(BenchmarkId::new("build", id), &p, |b, p| b.iter(|| build_sdg(p).unwrap()));
        let sdg = build_sdg(&p).unwrap();
        g.bench_with_input(BenchmarkId::new("forward_slice", id), &sdg, |b, s| {
            b.iter(|| s.forward_slice("entry").unwrap())
        });
        g.bench_with_input(BenchmarkId::new("extract", id), &(&p, &sdg), |b, (p, s)| {
            b.iter(|| extract_over_organ(p, s, "entry", None, "entry", "bench").unwrap())
        });
    }
    g.finish();
}

fn reconfigure(c: &mut Criterion) {
    let mut g = c.benchmark_group("reconfigure");
    for mode in [RemovalMode::DeleteGuardedCode, RemovalMode::KeepCodeStripGuards] {
        let list = FeatureDirectiveList::new(["OPT_0", "OPT_2"], mode).unwrap();
        let p = synthetic_donor(4, 25);
        g.bench_function(format!("{mode:?}"), |b| b.iter(|| remove_features(&p, &list).unwrap()));
    }
    g.finish();
}

fn wordcount(c: &mut Criterion) {
    let fx = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/wordcount");
    let donor = load_prepared(&fx.join("donor"), &Default::default()).unwrap();
    let sdg = build_sdg(&donor).unwrap();
    let over = extract_over_organ(&donor, &sdg, "report_words", None, "report_words", "wc").unwrap();
    let host = ProjectModel::from_units(&fx.join("notes"), project_units(&fx.join("notes")).unwrap()).unwrap();
    let ctx = HostContext::new(&host, "notes", "report_words", BuildCommand::default()).unwrap();
    let wrapper = synthesize_wrapper(&over, &host, &ctx).unwrap();
    let organ = materialize(&over, &wrapper, &GpIndividual::full(&over, &wrapper, 0)).unwrap();
    let post = PostoperativeProject::new(host);

    let mut g = c.benchmark_group("wordcount");
    g.bench_function("load_and_extract", |b| {
        b.iter(|| {
            let donor = load_prepared(&fx.join("donor"), &Default::default()).unwrap();
            let sdg = build_sdg(&donor).unwrap();
            extract_over_organ(&donor, &sdg, "report_words", None, "report_words", "wc").unwrap()
        })
    });
    g.bench_function("detect_clones", |b| b.iter(|| detect_clones(&organ, &post).unwrap()));
    g.finish();
}

criterion_group!(benches, sdg, reconfigure, wordcount);
criterion_main!(benches);
