// leakaudit: command-line driver for the identity-leakage audit workflow.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "leakaudit/annotation_service.hpp"
#include "leakaudit/embedding_store.hpp"
#include "leakaudit/error.hpp"
#include "leakaudit/manifest.hpp"
#include "leakaudit/matcher.hpp"
#include "leakaudit/overlap.hpp"
#include "leakaudit/report.hpp"
#include "leakaudit/simd/kernels.hpp"
#include "leakaudit/subset.hpp"
#include "leakaudit/text_io.hpp"
#include "leakaudit/verifier.hpp"

namespace fs = std::filesystem;
using namespace leakaudit;

namespace {

// Settings shared by every subcommand.
struct AuditConfig {
  std::string root = ".";
  std::string out_dir = "out";
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  ThresholdPolicy policy;
  std::string isa = "auto";
  bool quiet = false;

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : fs::path(root) / path;
  }
  fs::path output(const std::string& name) const {
    const fs::path path(name);
    return path.is_absolute() ? path : resolve(out_dir) / path;
  }
  void validate() const {
    if (workers < 1) throw_usage("--workers must be at least 1");
    policy.validate();
  }
};

void note(const AuditConfig& cfg, const std::string& message) {
  if (!cfg.quiet) fmt::print(stderr, "{}\n", message);
}

void write_artifact(const AuditConfig& cfg, const fs::path& path, std::string_view contents) {
  write_file_atomic(path, contents);
  note(cfg, fmt::format("wrote {}", path.string()));
}

EmbeddingSet load_stem(const AuditConfig& cfg, const std::string& stem) {
  const fs::path p = cfg.resolve(stem);
  return load_embeddings(blob_path_for(p), sidecar_path_for(p));
}

EmbeddingSet ensure_normalized(const AuditConfig& cfg, EmbeddingSet set) {
  if (set.is_normalized()) return set;
  note(cfg, fmt::format("{}: rows are not unit norm, normalizing", set.dataset_id));
  return l2_normalize(set);
}

std::optional<simd::Isa> isa_choice(const AuditConfig& cfg) {
  if (cfg.isa == "auto") return std::nullopt;
  auto isa = simd::parse_isa(cfg.isa);
  if (!isa) throw_usage(fmt::format("unknown --isa '{}'", cfg.isa));
  return isa;
}

std::vector<double> parse_number_list(const std::string& text, std::string_view what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    out.push_back(parse_double(std::string_view(text).substr(pos, comma - pos), what));
    pos = comma + 1;
  }
  return out;
}

std::size_t distinct_labels(const EmbeddingSet& set) {
  return std::set<std::string>(set.identity_labels.begin(), set.identity_labels.end()).size();
}

// ---------------------------------------------------------------------------

struct NormalizeArgs {
  std::string input;
  std::string flipped;
  std::string output = "normalized";
  bool manifest = false;
};

void run_normalize(const AuditConfig& cfg, const NormalizeArgs& a) {
  const EmbeddingSet original = load_stem(cfg, a.input);
  const EmbeddingSet result = a.flipped.empty() ? l2_normalize(original) : fuse_flip(original, load_stem(cfg, a.flipped));
  const fs::path stem = cfg.output(a.output);
  fs::create_directories(stem.parent_path());
  write_embeddings(result, blob_path_for(stem), sidecar_path_for(stem));
  note(cfg, fmt::format("wrote {} and {}", blob_path_for(stem).string(), sidecar_path_for(stem).string()));
  if (a.manifest) {
    fs::path m = stem;
    m += ".manifest.tsv";
    write_artifact(cfg, m, format_manifest(manifest_from_embeddings(result)));
  }
}

struct MatchArgs {
  std::string probes;
  std::string gallery;
  std::size_t k = 2;
  std::size_t block_mb = 64;
  std::string output = "matches.tsv";
};

void run_match(const AuditConfig& cfg, const MatchArgs& a) {
  const EmbeddingSet probes = ensure_normalized(cfg, load_stem(cfg, a.probes));
  const EmbeddingSet gallery = ensure_normalized(cfg, load_stem(cfg, a.gallery));
  MatchOptions opt;
  opt.k = a.k;
  opt.workers = cfg.workers;
  opt.block_bytes = a.block_mb << 20;
  opt.isa = isa_choice(cfg);
  const auto results = top_k(probes, gallery, opt);
  write_artifact(cfg, cfg.output(a.output), format_matches(results));
}

struct HistArgs {
  std::string matches = "matches.tsv";
  double bin_width = 0.01;
  std::uint32_t rank = 0;
  std::string quantiles = "0.01,0.05,0.25,0.5,0.75,0.95,0.99";
  std::string output = "histogram.tsv";
};

void run_hist(const AuditConfig& cfg, const HistArgs& a) {
  const auto matches = load_matches(cfg.output(a.matches));
  std::vector<double> scores;
  for (const auto& m : matches) {
    if (a.rank == 0 || m.rank == a.rank) scores.push_back(m.similarity);
  }
  const auto probs = parse_number_list(a.quantiles, "quantile");
  const auto hist = histogram(scores, a.bin_width);
  write_artifact(cfg, cfg.output(a.output), format_histogram(hist, probs, quantiles(scores, probs)));
}

struct ClassifyArgs {
  std::string matches = "matches.tsv";
  std::string annotations;
  std::string output = "verdicts.tsv";
};

void run_classify(const AuditConfig& cfg, const ClassifyArgs& a) {
  const auto matches = load_matches(cfg.output(a.matches));
  auto verdicts = auto_classify(matches, cfg.policy);
  if (!a.annotations.empty()) {
    const auto log = read_verdict_log(cfg.output(a.annotations));
    if (log.discarded_partial + log.discarded_malformed > 0) {
      note(cfg, fmt::format("{}: skipped {} partial and {} malformed lines", a.annotations, log.discarded_partial,
                            log.discarded_malformed));
    }
    verdicts = merge_annotations(verdicts, log.records);
  }
  write_artifact(cfg, cfg.output(a.output), format_verdicts(verdicts));
}

struct ServeArgs {
  std::string matches = "matches.tsv";
  std::string verdict_log = "annotations.log";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string probe_dataset = "test";
  std::string gallery_dataset = "train";
  std::vector<std::string> image_roots;
  std::string band = "-1,1";
  bool all_pairs = false;
};

void run_serve(const AuditConfig& cfg, const ServeArgs& a) {
  SessionConfig sc;
  sc.probe_dataset = a.probe_dataset;
  sc.gallery_dataset = a.gallery_dataset;
  sc.policy = cfg.policy;
  const auto band = parse_number_list(a.band, "band");
  if (band.size() != 2 || band[0] > band[1]) throw_usage("--band must be LO,HI with LO <= HI");
  sc.default_filter = QueueFilter{band[0], band[1], !a.all_pairs};

  ServerConfig server_cfg;
  // default image roots live under <root>/images/<dataset_id>
  for (const auto& ds : {a.probe_dataset, a.gallery_dataset}) {
    server_cfg.image_roots[ds] = cfg.resolve("images") / ds;
  }
  for (const auto& spec : a.image_roots) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw_usage(fmt::format("--image-root expects DATASET=DIR, got '{}'", spec));
    server_cfg.image_roots[spec.substr(0, eq)] = cfg.resolve(spec.substr(eq + 1));
  }

  auto session = open_session(cfg.output(a.matches), cfg.output(a.verdict_log), sc);
  const auto& rec = session->recovery();
  if (rec.discarded_partial + rec.discarded_malformed > 0) {
    note(cfg, fmt::format("verdict log: recovered {} records, discarded {} partial and {} malformed lines",
                          rec.records.size(), rec.discarded_partial, rec.discarded_malformed));
  }

  // SIGINT/SIGTERM are taken synchronously on this thread; the server runs on its own.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  AnnotationServer server(*session, server_cfg);
  const int port = server.bind(a.host, a.port);
  if (port < 0) throw_io(fmt::format("cannot bind {}:{}", a.host, a.port));
  fmt::print(stderr, "listening on http://{}:{}\n", a.host, port);
  std::jthread worker([&] { server.serve(); });
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
}

struct OverlapArgs {
  std::string verdicts = "verdicts.tsv";
  std::string matches = "matches.tsv";
  std::string probes;
  std::string train_manifest;
  std::string gallery;
  std::size_t test_images = 0;
  std::string output = "overlap.json";
  std::string folders_output = "overlapped_folders.txt";
  std::string hsns_output = "hsns.tsv";
  std::string lsts_output = "lsts.tsv";
};

void run_overlap(const AuditConfig& cfg, const OverlapArgs& a) {
  const auto verdicts = load_verdicts(cfg.output(a.verdicts));
  const EmbeddingSet probes = load_stem(cfg, a.probes);
  OverlapTotals totals;
  totals.test_identities = distinct_labels(probes);
  totals.audited_probes = probes.count();
  totals.test_images = a.test_images != 0 ? a.test_images : probes.count();
  if (!a.train_manifest.empty()) {
    totals.train_folders = load_manifest(cfg.resolve(a.train_manifest)).folder_count();
  } else if (!a.gallery.empty()) {
    totals.train_folders = distinct_labels(load_stem(cfg, a.gallery));
  } else {
    throw_usage("overlap-report needs --train-manifest or --gallery for the train folder total");
  }
  const LabelMap gallery_labels = gallery_labels_from(load_matches(cfg.output(a.matches)));
  const auto report = aggregate_overlap(verdicts, labels_from(probes), gallery_labels, totals, cfg.policy);
  write_artifact(cfg, cfg.output(a.output), overlap_report_json(report));
  write_artifact(cfg, cfg.output(a.folders_output), format_label_list(report.matched_train_folders));
  write_artifact(cfg, cfg.output(a.hsns_output), format_verdicts(report.hsns));
  write_artifact(cfg, cfg.output(a.lsts_output), format_verdicts(report.lsts));
}

struct LinkArgs {
  std::string verdicts = "verdicts.tsv";
  std::string matches = "matches.tsv";
  std::string probes;
  std::string edges_output = "link_edges.tsv";
  std::string output = "merge_proposals.tsv";
};

void run_link(const AuditConfig& cfg, const LinkArgs& a) {
  const auto verdicts = load_verdicts(cfg.output(a.verdicts));
  const EmbeddingSet probes = load_stem(cfg, a.probes);
  const LabelMap gallery_labels = gallery_labels_from(load_matches(cfg.output(a.matches)));
  const auto graph = build_link_graph(verdicts, labels_from(probes), gallery_labels);
  std::string edges = "test_identity\ttrain_folder\n";
  for (const auto& [test, train] : graph.edges) edges += fmt::format("{}\t{}\n", test, train);
  write_artifact(cfg, cfg.output(a.edges_output), edges);
  write_artifact(cfg, cfg.output(a.output), format_groups(graph.merge_proposals));
  note(cfg, fmt::format("{} test identities linked to {} train folders, {} merge proposals",
                        graph.linked_test_identities(), graph.linked_train_folders(), graph.merge_proposals.size()));
}

struct SubsetArgs {
  std::string manifest;
  std::string variant = "disjoint";
  std::string overlapped;
  std::string merges;
  std::string output = "subset.manifest.tsv";
  std::string provenance_output = "subset.provenance.json";
};

void run_subset(const AuditConfig& cfg, const SubsetArgs& a) {
  const auto manifest = load_manifest(cfg.resolve(a.manifest));
  SubsetSpec spec;
  const auto variant = parse_variant(a.variant);
  if (!variant) throw_usage(fmt::format("unknown --variant '{}'", a.variant));
  spec.variant = *variant;
  spec.seed = cfg.seed;
  if (!a.overlapped.empty()) spec.overlapped_folders = load_label_list(cfg.output(a.overlapped));
  if (!a.merges.empty()) spec.accepted_merges = load_groups(cfg.output(a.merges));
  const auto result = build_subset(manifest, spec);
  write_artifact(cfg, cfg.output(a.output), format_manifest(result.manifest));
  write_artifact(cfg, cfg.output(a.provenance_output), provenance_json(result.provenance));
}

struct EvalArgs {
  std::string embeddings;
  std::string protocol;
  std::string metric = "cosine";
  std::string fusion = "original";
  std::string flipped;
  bool relaxed = false;
  std::string output = "verification.tsv";
};

void run_eval(const AuditConfig& cfg, const EvalArgs& a) {
  EvalOptions opt;
  const auto metric = parse_metric(a.metric);
  if (!metric) throw_usage(fmt::format("unknown --metric '{}'", a.metric));
  opt.metric = *metric;
  opt.workers = cfg.workers;
  if (a.fusion != "original" && a.fusion != "original+flip") {
    throw_usage(fmt::format("unknown --fusion '{}' (original or original+flip)", a.fusion));
  }
  const bool fuse = a.fusion == "original+flip";
  if (fuse && a.flipped.empty()) throw_usage("--fusion original+flip needs --flipped");

  ProtocolLoadOptions load_opt;
  load_opt.strict = !a.relaxed;
  const auto protocol = load_protocol(cfg.resolve(a.protocol), load_opt);
  const EmbeddingSet set = load_stem(cfg, a.embeddings);
  VerificationReport report;
  if (fuse) {
    const EmbeddingSet flipped = load_stem(cfg, a.flipped);
    report = evaluate(set, protocol, opt, &flipped);
  } else {
    report = evaluate(ensure_normalized(cfg, set), protocol, opt);
  }
  write_artifact(cfg, cfg.output(a.output), format_report(report));
}

struct BiasArgs {
  std::string records;
  std::string output = "bias.tsv";
  std::string curve_output = "importance_curve.csv";
};

void run_bias(const AuditConfig& cfg, const BiasArgs& a) {
  const auto records = load_records(cfg.resolve(a.records));
  const auto report = compute_bias(records);
  write_artifact(cfg, cfg.output(a.output), format_bias_ledger(report));
  write_artifact(cfg, cfg.output(a.curve_output), format_curve_series(importance_curve(report)));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train/test identity-leakage audit for face recognition benchmarks"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file supplying option values; command-line flags take precedence");

  AuditConfig cfg;
  app.add_option("--root", cfg.root, "Directory that relative input paths resolve against")
      ->envname("LEAKAGE_AUDIT_HOME");
  app.add_option("--out-dir", cfg.out_dir, "Directory for artifacts (relative to --root)");
  app.add_option("--workers", cfg.workers, "Worker threads for matching and evaluation")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "Seed for every random draw");
  app.add_option("--tau-dup", cfg.policy.tau_dup, "Similarity at or above which a pair is a duplicate");
  app.add_option("--tau-id", cfg.policy.tau_id, "Similarity at or above which a pair is the same identity");
  app.add_option("--review-low", cfg.policy.review_low, "Lower edge of the human review band");
  app.add_option("--review-high", cfg.policy.review_high, "Upper edge of the human review band");
  app.add_option("--isa", cfg.isa, "Dot-product kernel: auto, scalar, avx2 or neon");
  app.add_flag("--quiet", cfg.quiet, "Suppress progress notes on stderr");

  std::function<void()> action;

  NormalizeArgs normalize_args;
  auto* normalize = app.add_subcommand("normalize", "Scale embeddings to unit norm, optionally fusing flipped views");
  normalize->add_option("--input", normalize_args.input, "Embedding stem (stem.emb + stem.tsv)")->required();
  normalize->add_option("--flipped", normalize_args.flipped, "Flipped-image embedding stem to fuse");
  normalize->add_option("--output", normalize_args.output, "Output stem under --out-dir");
  normalize->add_flag("--manifest", normalize_args.manifest, "Also write <output>.manifest.tsv");
  normalize->callback([&] { action = [&] { run_normalize(cfg, normalize_args); }; });

  MatchArgs match_args;
  auto* match = app.add_subcommand("match", "Exact top-k gallery neighbors for every probe");
  match->add_option("--probes", match_args.probes, "Probe (test) embedding stem")->required();
  match->add_option("--gallery", match_args.gallery, "Gallery (train) embedding stem")->required();
  match->add_option("--k", match_args.k, "Neighbors per probe")->check(CLI::PositiveNumber);
  match->add_option("--block-mb", match_args.block_mb, "Gallery block budget in MiB")->check(CLI::PositiveNumber);
  match->add_option("--output", match_args.output, "Match file under --out-dir");
  match->callback([&] { action = [&] { run_match(cfg, match_args); }; });

  HistArgs hist_args;
  auto* hist = app.add_subcommand("hist", "Similarity histogram and quantiles of a match file");
  hist->add_option("--matches", hist_args.matches, "Match file under --out-dir");
  hist->add_option("--bin-width", hist_args.bin_width, "Histogram bin width");
  hist->add_option("--rank", hist_args.rank, "Only this rank (0 = all ranks)");
  hist->add_option("--quantiles", hist_args.quantiles, "Comma-separated probabilities");
  hist->add_option("--output", hist_args.output, "Histogram file under --out-dir");
  hist->callback([&] { action = [&] { run_hist(cfg, hist_args); }; });

  ClassifyArgs classify_args;
  auto* classify = app.add_subcommand("classify", "Threshold verdicts, overridden by human annotations");
  classify->add_option("--matches", classify_args.matches, "Match file under --out-dir");
  classify->add_option("--annotations", classify_args.annotations, "Verdict log written by serve");
  classify->add_option("--output", classify_args.output, "Verdict table under --out-dir");
  classify->callback([&] { action = [&] { run_classify(cfg, classify_args); }; });

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "HTTP annotation service over a match file");
  serve->add_option("--matches", serve_args.matches, "Match file under --out-dir");
  serve->add_option("--verdict-log", serve_args.verdict_log, "Append-only verdict log under --out-dir");
  serve->add_option("--host", serve_args.host, "Listen address");
  serve->add_option("--port", serve_args.port, "Listen port (0 picks a free one)");
  serve->add_option("--probe-dataset", serve_args.probe_dataset, "Dataset id used in probe image URLs");
  serve->add_option("--gallery-dataset", serve_args.gallery_dataset, "Dataset id used in gallery image URLs");
  serve->add_option("--image-root", serve_args.image_roots,
                    "DATASET=DIR image directory (default <root>/images/<dataset>); repeatable");
  serve->add_option("--band", serve_args.band, "Default queue similarity band LO,HI");
  serve->add_flag("--all-pairs", serve_args.all_pairs, "Queue annotated pairs too by default");
  serve->callback([&] { action = [&] { run_serve(cfg, serve_args); }; });

  OverlapArgs overlap_args;
  auto* overlap = app.add_subcommand("overlap-report", "Overlapped identities, duplicates and discordant pairs");
  overlap->add_option("--verdicts", overlap_args.verdicts, "Verdict table under --out-dir");
  overlap->add_option("--matches", overlap_args.matches, "Match file under --out-dir (gallery labels)");
  overlap->add_option("--probes", overlap_args.probes, "Probe embedding stem (labels and totals)")->required();
  overlap->add_option("--gallery", overlap_args.gallery, "Gallery embedding stem (folder total)");
  overlap->add_option("--train-manifest", overlap_args.train_manifest, "Train manifest (folder total)");
  overlap->add_option("--test-images", overlap_args.test_images, "Whole test set size (0 = probe count)");
  overlap->add_option("--output", overlap_args.output, "Report JSON under --out-dir");
  overlap->add_option("--folders-output", overlap_args.folders_output, "Overlapped train folder list");
  overlap->add_option("--hsns-output", overlap_args.hsns_output, "High-similarity not-same pairs");
  overlap->add_option("--lsts-output", overlap_args.lsts_output, "Low-similarity true-same pairs");
  overlap->callback([&] { action = [&] { run_overlap(cfg, overlap_args); }; });

  LinkArgs link_args;
  auto* link = app.add_subcommand("link-graph", "Test/train identity links and split-identity merge proposals");
  link->add_option("--verdicts", link_args.verdicts, "Verdict table under --out-dir");
  link->add_option("--probes", link_args.probes, "Probe embedding stem")->required();
  link->add_option("--matches", link_args.matches, "Match file under --out-dir (gallery labels)");
  link->add_option("--edges-output", link_args.edges_output, "Edge list under --out-dir");
  link->add_option("--output", link_args.output, "Merge proposals under --out-dir");
  link->callback([&] { action = [&] { run_link(cfg, link_args); }; });

  SubsetArgs subset_args;
  auto* subset = app.add_subcommand("subset", "Build an ID-Disjoint, ID-Overlap-R or ID-Overlap-C training subset");
  subset->add_option("--manifest", subset_args.manifest, "Training manifest")->required();
  subset->add_option("--variant", subset_args.variant, "disjoint, overlap-r or overlap-c");
  subset->add_option("--overlapped", subset_args.overlapped, "Overlapped folder list under --out-dir");
  subset->add_option("--merges", subset_args.merges, "Accepted merge groups under --out-dir");
  subset->add_option("--output", subset_args.output, "Subset manifest under --out-dir");
  subset->add_option("--provenance-output", subset_args.provenance_output, "Provenance JSON under --out-dir");
  subset->callback([&] { action = [&] { run_subset(cfg, subset_args); }; });

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Fold-wise verification accuracy on a pair protocol");
  eval->add_option("--embeddings", eval_args.embeddings, "Test embedding stem")->required();
  eval->add_option("--protocol", eval_args.protocol, "Pair protocol (native JSON or classic pairs file)")->required();
  eval->add_option("--metric", eval_args.metric, "cosine or euclidean");
  eval->add_option("--fusion", eval_args.fusion, "original or original+flip");
  eval->add_option("--flipped", eval_args.flipped, "Flipped-image embedding stem for original+flip");
  eval->add_flag("--relaxed", eval_args.relaxed, "Accept protocols that are not 10 x (300 + 300)");
  eval->add_option("--output", eval_args.output, "Report under --out-dir");
  eval->callback([&] { action = [&] { run_eval(cfg, eval_args); }; });

  BiasArgs bias_args;
  auto* bias = app.add_subcommand("bias-report", "Optimistic-bias ledger and importance curve");
  bias->add_option("--records", bias_args.records, "CSV: method,variant,test_set,accuracy")->required();
  bias->add_option("--output", bias_args.output, "Ledger TSV under --out-dir");
  bias->add_option("--curve-output", bias_args.curve_output, "Curve CSV under --out-dir");
  bias->callback([&] { action = [&] { run_bias(cfg, bias_args); }; });

  // Subcommand help also lists the shared flags, which may follow the subcommand.
  std::string shared = "\nShared options (see leakaudit --help):\n";
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_name() == "--help") continue;
    const std::string def = opt->get_default_str();
    const std::string env = opt->get_envname();
    shared += fmt::format("  {:<16} {}{}{}\n", opt->get_name(), opt->get_description(),
                          def.empty() ? std::string() : fmt::format(" [{}]", def),
                          env.empty() ? std::string() : fmt::format(" (env: {})", env));
  }
  for (CLI::App* sub : app.get_subcommands({})) sub->footer(shared);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code_for(ErrorKind::usage);
  }

  try {
    cfg.validate();
    action();
    return 0;
  } catch (const Error& e) {
    fmt::print(stderr, "leakaudit: {}\n", e.what());
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "leakaudit: {}\n", e.what());
    return exit_code_for(ErrorKind::io);
  } catch (const std::exception& e) {
    fmt::print(stderr, "leakaudit: {}\n", e.what());
    return exit_code_for(ErrorKind::data);
  }
}
