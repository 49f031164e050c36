// gdm: batch frontend for synthetic data, alignment, projection and
// between-subject classification. Machine-readable output (JSON lines) goes to
// stdout, diagnostics to stderr.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gdm/gdm.hpp"

namespace {

using gdm::Error;
using gdm::ErrorKind;
using gdm::Index;
using gdm::require;
using nlohmann::json;

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

void emit(const json& line) { std::cout << line.dump() << '\n' << std::flush; }

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == text.size() && used > 0, ErrorKind::parameter, "bad " + what + " value '" + text + "'");
  return v;
}

std::vector<gdm::KernelSpec> parse_kernels(const std::vector<std::string>& specs) {
  std::vector<gdm::KernelSpec> out;
  for (const auto& s : specs) out.push_back(gdm::parse_kernel(s));
  if (out.empty()) out.push_back(gdm::KernelSpec::linear());
  return out;
}

// --config <json>: a flat object of option values, optionally with one nested
// object per command ({"k": 4, "evaluate": {"leave-out": 2}}). Command sections
// win over flat keys; explicit flags win over both.
class ConfigFile {
 public:
  static std::optional<std::string> find_path(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
      if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    return std::nullopt;
  }

  explicit ConfigFile(const std::string& path) {
    try {
      doc_ = json::parse(gdm::io_detail::read_file(path));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::format, path + ": malformed JSON config: " + e.what());
    }
    require(doc_.is_object(), ErrorKind::format, path + ": config must be a JSON object");
  }

  void apply(CLI::App& command) const {
    json merged = json::object();
    for (const auto& [key, value] : doc_.items())
      if (!value.is_object() && command.get_option_no_throw("--" + key)) merged[key] = value;
    if (doc_.contains(command.get_name())) {
      for (const auto& [key, value] : doc_[command.get_name()].items()) {
        require(command.get_option_no_throw("--" + key) != nullptr, ErrorKind::parameter,
                "config key '" + key + "' is not an option of '" + command.get_name() + "'");
        merged[key] = value;
      }
    }
    for (const auto& [key, value] : merged.items()) {
      CLI::Option* opt = command.get_option("--" + key);
      if (opt->count() > 0 || key == "config") continue;
      std::vector<std::string> results;
      if (value.is_array())
        for (const auto& v : value) results.push_back(scalar(v));
      else
        results.push_back(scalar(value));
      opt->add_result(results);
      opt->run_callback();
    }
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  json doc_;
};

struct GraphChoice {
  std::string spec = "category";
  std::optional<double> temporal_weight;

  std::string name() const { return spec.rfind("file:", 0) == 0 ? "file" : spec; }
  std::optional<std::string> file() const {
    if (spec.rfind("file:", 0) == 0) return spec.substr(5);
    return std::nullopt;
  }
  void validate() const {
    require(spec == "category" || spec == "temporal" || (file() && !file()->empty()), ErrorKind::parameter,
            "--graph must be category, temporal or file:<path>, got '" + spec + "'");
  }

  gdm::CrossSubjectGraph build(const gdm::MultiSubjectDataset& data) const {
    if (auto path = file()) return gdm::read_graph(*path, data.sample_counts());
    if (spec == "temporal") {
      const auto counts = data.sample_counts();
      require(std::all_of(counts.begin(), counts.end(), [&](Index t) { return t == counts.front(); }),
              ErrorKind::invalid_graph, "temporal graph needs equal sample counts across subjects");
      return gdm::build_temporal_graph(static_cast<Index>(data.subject_count()), counts.front(), temporal_weight);
    }
    return gdm::build_category_graph(data.label_sequences());
  }
};

void add_graph_options(CLI::App* cmd, GraphChoice& graph) {
  cmd->add_option("--graph", graph.spec, "category | temporal | file:<path> (.gdm or .csv matrix)")
      ->capture_default_str();
  cmd->add_option("--temporal-weight", graph.temporal_weight, "weight of temporal pairs (default 1/M)");
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  gdm::SynthParams params;
  std::string out;
  std::string format = "gdm";
};

void run_synth(const SynthArgs& a) {
  require(!a.out.empty(), ErrorKind::parameter, "--out is required");
  require(a.format == "gdm" || a.format == "csv", ErrorKind::parameter, "--format must be gdm or csv");
  const auto [data, truth] = gdm::synth_dataset(a.params);
  const auto manifest = gdm::write_dataset(a.out, data, "." + a.format);
  gdm::write_ground_truth(a.out, truth);
  emit({{"command", "synth"},
        {"manifest", manifest.string()},
        {"subjects", data.subject_count()},
        {"voxels", a.params.voxels},
        {"samples", a.params.samples},
        {"latent", a.params.latent},
        {"classes", a.params.categories},
        {"sigma", a.params.sigma},
        {"seed", a.params.seed}});
}

// ---- graph -----------------------------------------------------------------

struct GraphArgs {
  std::string data;
  GraphChoice graph;
  std::string out;
};

void run_graph(const GraphArgs& a) {
  require(!a.data.empty() && !a.out.empty(), ErrorKind::parameter, "--data and --out are required");
  a.graph.validate();
  const auto data = gdm::read_dataset(a.data);
  const auto g = a.graph.build(data);
  gdm::write_graph(a.out, g);
  emit({{"command", "graph"}, {"graph", a.graph.name()}, {"size", g.size()}, {"out", a.out}});
}

// ---- align -----------------------------------------------------------------

struct AlignArgs {
  std::string data;
  GraphChoice graph;
  std::vector<std::string> kernels;
  std::vector<double> energies{82.0};
  Index k = 10;
  std::string solver = "gdm";
  std::string out;
  unsigned threads = default_threads();
};

void warn_if_not_unique(const gdm::AlignmentModel& model) {
  const double scale = std::max(1.0, model.reduced_eigenvalues.size() ? gdm::max_abs(model.reduced_eigenvalues) : 0.0);
  if (std::isfinite(model.eigengap) && std::abs(model.eigengap) <= 1e-10 * scale)
    warn("eigengap at K=" + std::to_string(model.k) +
         " is zero; the shared space is not unique up to rotation (eigenvalue tie at the K boundary)");
}

void run_align(const AlignArgs& a) {
  require(!a.data.empty() && !a.out.empty(), ErrorKind::parameter, "--data and --out are required");
  require(a.solver == "gdm" || a.solver == "naive", ErrorKind::parameter, "--solver must be gdm or naive");
  require(a.k >= 1, ErrorKind::parameter, "--k must be >= 1");
  a.graph.validate();
  const auto kernels = parse_kernels(a.kernels);
  const auto data = gdm::read_dataset(a.data);
  const auto graph = a.graph.build(data);

  gdm::AlignmentModel model;
  if (a.solver == "naive") {
    if (a.energies != std::vector<double>{82.0} && a.energies != std::vector<double>{100.0})
      warn("--energy is ignored by the naive solver (it keeps the full spectrum)");
    model = gdm::naive_fit(data, graph, gdm::NaiveOptions{kernels, a.k});
  } else {
    gdm::FitOptions opt;
    opt.kernels = kernels;
    opt.energies = a.energies;
    opt.k = a.k;
    opt.threads = a.threads;
    model = gdm::fit(data, graph, opt);
  }
  gdm::save_model(a.out, model);
  warn_if_not_unique(model);

  const Index head = std::min<Index>(model.reduced_eigenvalues.size(), model.k + 1);
  std::vector<double> eig(model.reduced_eigenvalues.data(), model.reduced_eigenvalues.data() + head);
  json subjects = json::array();
  for (const auto& s : model.subjects)
    subjects.push_back({{"id", s.id}, {"retained_dim", s.basis.retained_dim}, {"total_rank", s.basis.total_rank}});
  emit({{"command", "align"},
        {"solver", model.solver},
        {"graph", a.graph.name()},
        {"k", model.k},
        {"objective", model.objective},
        {"eigenvalues_head", eig},
        {"eigengap", std::isfinite(model.eigengap) ? json(model.eigengap) : json()},
        {"retained_dims", model.retained_dims()},
        {"subjects", subjects},
        {"model", a.out}});
}

// ---- transform -------------------------------------------------------------

struct TransformArgs {
  std::string model;
  std::string subject;
  std::string input;
  std::string out;
};

void run_transform(const TransformArgs& a) {
  require(!a.model.empty() && !a.subject.empty() && !a.input.empty() && !a.out.empty(), ErrorKind::parameter,
          "--model, --subject, --input and --out are required");
  const auto model = gdm::load_model(a.model);
  const auto z = gdm::read_matrix(a.input);
  const auto y = gdm::project(model, a.subject, z);
  gdm::write_matrix(a.out, y.matrix);
  emit({{"command", "transform"},
        {"subject", a.subject},
        {"rows", y.matrix.rows()},
        {"cols", y.matrix.cols()},
        {"out", a.out}});
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string data;
  GraphChoice graph;
  std::vector<std::string> kernels;
  double energy = 82.0;
  Index k = 10;
  Index leave_out = 1;
  double lambda = 1e-3;
  std::uint64_t seed = 0;
  double incomplete_q = 0.0;
  std::string energy_sweep;
  std::string q_sweep;
  bool baseline = false;
  std::string plot;
  std::string tsv;
  unsigned threads = default_threads();
};

struct SweepPoint {
  double energy;
  double q;
};

// Graphs that index the full dataset (file graphs, temporal graphs under
// incompleteness) are restricted to the retained samples first, then to each
// fold's align part.
gdm::EvalReport evaluate_point(const gdm::MultiSubjectDataset& full, const EvaluateArgs& a,
                               const std::vector<gdm::KernelSpec>& kernels, SweepPoint point) {
  gdm::EvalConfig config;
  config.graph_name = a.graph.name();
  config.kernels = kernels;
  config.energy = point.energy;
  config.k = a.k;
  config.leave_out = a.leave_out;
  config.lambda = a.lambda;
  config.seed = a.seed;
  config.threads = a.threads;

  const bool indexes_full = a.graph.file() || (a.graph.spec == "temporal" && point.q > 0.0);
  if (!indexes_full) {
    if (a.graph.spec == "temporal") config.graph = gdm::temporal_graph_builder(a.graph.temporal_weight);
    config.incomplete_q = point.q;
    return gdm::bsc_evaluate(full, config);
  }
  gdm::CrossSubjectGraph base = a.graph.build(full);
  gdm::MultiSubjectDataset data = full;
  if (point.q > 0.0) {
    const auto keep = gdm::retained_samples(full, point.q, gdm::stream_seed(a.seed, "incomplete"));
    base = gdm::build_subset_graph(base, keep).graph;
    data = full.select(keep);
  }
  config.graph = gdm::subset_graph_builder(std::move(base));
  gdm::EvalReport report = gdm::bsc_evaluate(data, config);
  report.config["incomplete_q"] = point.q;
  return report;
}

void run_evaluate(const EvaluateArgs& a) {
  require(!a.data.empty(), ErrorKind::parameter, "--data is required");
  require(a.k >= 1, ErrorKind::parameter, "--k must be >= 1");
  require(a.lambda > 0.0, ErrorKind::parameter, "--lambda must be positive");
  require(a.incomplete_q >= 0.0 && a.incomplete_q < 100.0, ErrorKind::parameter, "--incomplete-q must be in [0, 100)");
  require(a.energy_sweep.empty() || a.q_sweep.empty(), ErrorKind::parameter,
          "--energy-sweep and --q-sweep are mutually exclusive");
  a.graph.validate();
  const auto kernels = parse_kernels(a.kernels);

  std::vector<SweepPoint> points;
  std::string swept;
  if (!a.energy_sweep.empty()) {
    swept = "energy";
    for (const auto& e : split_list(a.energy_sweep)) points.push_back({parse_number(e, "--energy-sweep"), a.incomplete_q});
  } else if (!a.q_sweep.empty()) {
    swept = "incomplete_q";
    for (const auto& q : split_list(a.q_sweep)) points.push_back({a.energy, parse_number(q, "--q-sweep")});
  } else {
    points.push_back({a.energy, a.incomplete_q});
  }
  require(!points.empty(), ErrorKind::parameter, "empty sweep list");
  for (const auto& p : points) {
    require(p.energy > 0.0 && p.energy <= 100.0, ErrorKind::parameter, "energy must be in (0, 100]");
    require(p.q >= 0.0 && p.q < 100.0, ErrorKind::parameter, "incompleteness must be in [0, 100)");
  }

  const auto data = gdm::read_dataset(a.data);
  std::vector<gdm::EvalReport> reports;
  gdm::Series gdm_series{"GDM", {}, {}}, raw_series{"Without alignment", {}, {}};
  std::vector<std::string> tsv_rows;
  for (const auto& p : points) {
    gdm::EvalReport r = evaluate_point(data, a, kernels, p);
    json line = gdm::to_json(r);
    line["command"] = "evaluate";
    line["method"] = "gdm";
    emit(line);
    tsv_rows.push_back(gdm::to_tsv(r));
    const double x = swept == "incomplete_q" ? p.q : p.energy;
    gdm_series.x.push_back(x);
    gdm_series.y.push_back(r.mean);

    if (a.baseline) {
      gdm::MultiSubjectDataset subset =
          p.q > 0.0 ? gdm::remove_fraction(data, p.q, gdm::stream_seed(a.seed, "incomplete")) : data;
      gdm::EvalReport b = gdm::no_alignment_evaluate(subset, a.leave_out, a.lambda, a.seed, a.threads);
      b.config["incomplete_q"] = p.q;
      json bl = gdm::to_json(b);
      bl["command"] = "evaluate";
      bl["method"] = "none";
      emit(bl);
      raw_series.x.push_back(x);
      raw_series.y.push_back(b.mean);
    }
  }

  if (!a.tsv.empty()) {
    std::string text = gdm::tsv_header() + "\n";
    for (const auto& row : tsv_rows) text += row + "\n";
    gdm::io_detail::write_file(a.tsv, text);
  }
  if (!a.plot.empty()) {
    std::vector<gdm::Series> series{gdm_series};
    if (a.baseline) series.push_back(raw_series);
    const std::string x_label = swept == "incomplete_q" ? "incompleteness q (%)" : "energy (%)";
    if (swept.empty()) warn("--plot without a sweep draws a single point");
    gdm::io_detail::write_file(a.plot, gdm::svg_line_chart(series, x_label, "BSC accuracy"));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based multi-subject functional alignment with kernel maps"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "show help for every command");
  std::string config_path;
  app.add_option("--config", config_path, "JSON file of option values; explicit flags take precedence")
      ->configurable(false);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic multi-subject dataset with ground truth");
  synth_cmd->add_option("--subjects", synth.params.subjects, "number of subjects M")->capture_default_str();
  synth_cmd->add_option("--voxels", synth.params.voxels, "voxels per subject V")->capture_default_str();
  synth_cmd->add_option("--samples", synth.params.samples, "samples per subject T")->capture_default_str();
  synth_cmd->add_option("--latent", synth.params.latent, "shared latent dimension")->capture_default_str();
  synth_cmd->add_option("--classes", synth.params.categories, "number of categories (must divide T)")
      ->capture_default_str();
  synth_cmd->add_option("--sigma", synth.params.sigma, "voxel noise standard deviation")->capture_default_str();
  synth_cmd->add_option("--separation", synth.params.class_separation, "class mean scale")->capture_default_str();
  synth_cmd->add_option("--jitter", synth.params.jitter, "within-class jitter of shared responses")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.params.seed, "random seed")->capture_default_str();
  synth_cmd->add_option("--format", synth.format, "matrix format: gdm | csv")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "output directory");

  GraphArgs graph;
  auto* graph_cmd = app.add_subcommand("graph", "build a cross-subject graph and write its weight matrix");
  graph_cmd->add_option("--data", graph.data, "dataset manifest.json");
  add_graph_options(graph_cmd, graph.graph);
  graph_cmd->add_option("--out", graph.out, "output matrix (.gdm or .csv)");

  AlignArgs align;
  auto* align_cmd = app.add_subcommand("align", "fit an alignment model and write the model directory");
  align_cmd->add_option("--data", align.data, "dataset manifest.json");
  add_graph_options(align_cmd, align.graph);
  align_cmd->add_option("--kernel", align.kernels,
                        "kernel spec (linear | poly:degree=D,offset=C | rbf:gamma=G); repeat once per subject")
      ;
  align_cmd->add_option("--energy", align.energies, "energy percent p; one value or one per subject")
      ->capture_default_str()
      ;
  align_cmd->add_option("--k", align.k, "shared-space dimension K")->capture_default_str();
  align_cmd->add_option("--solver", align.solver, "gdm | naive")->capture_default_str();
  align_cmd->add_option("--threads", align.threads, "worker threads")->capture_default_str();
  align_cmd->add_option("--out", align.out, "model directory");

  TransformArgs transform;
  auto* transform_cmd = app.add_subcommand("transform", "project one subject's samples into the shared space");
  transform_cmd->add_option("--model", transform.model, "model directory");
  transform_cmd->add_option("--subject", transform.subject, "subject id");
  transform_cmd->add_option("--input", transform.input, "V x E matrix (.gdm or .csv)");
  transform_cmd->add_option("--out", transform.out, "K x E output matrix (.gdm or .csv)");

  EvaluateArgs evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "between-subject classification evaluation");
  eval_cmd->add_option("--data", evaluate.data, "dataset manifest.json");
  add_graph_options(eval_cmd, evaluate.graph);
  eval_cmd->add_option("--kernel", evaluate.kernels, "kernel spec; repeat once per subject");
  eval_cmd->add_option("--energy", evaluate.energy, "energy percent p")->capture_default_str();
  eval_cmd->add_option("--k", evaluate.k, "shared-space dimension K")->capture_default_str();
  eval_cmd->add_option("--leave-out", evaluate.leave_out, "subjects per test group")->capture_default_str();
  eval_cmd->add_option("--lambda", evaluate.lambda, "classifier ridge strength")->capture_default_str();
  eval_cmd->add_option("--seed", evaluate.seed, "seed for splits and sample removal")->capture_default_str();
  eval_cmd->add_option("--incomplete-q", evaluate.incomplete_q, "percent of samples removed per subject")
      ->capture_default_str();
  eval_cmd->add_option("--energy-sweep", evaluate.energy_sweep, "comma-separated energies, one report each");
  eval_cmd->add_option("--q-sweep", evaluate.q_sweep, "comma-separated incompleteness levels, one report each");
  eval_cmd->add_flag("--baseline", evaluate.baseline, "also report the no-alignment classifier");
  eval_cmd->add_option("--plot", evaluate.plot, "write an SVG chart of accuracy vs the swept variable");
  eval_cmd->add_option("--tsv", evaluate.tsv, "write report rows as TSV");
  eval_cmd->add_option("--threads", evaluate.threads, "worker threads (folds run concurrently)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (const auto path = ConfigFile::find_path(argc, argv)) {
      const ConfigFile config(*path);
      for (auto* cmd : app.get_subcommands()) config.apply(*cmd);
    }
    if (*synth_cmd) run_synth(synth);
    else if (*graph_cmd) run_graph(graph);
    else if (*align_cmd) run_align(align);
    else if (*transform_cmd) run_transform(transform);
    else if (*eval_cmd) run_evaluate(evaluate);
  } catch (const CLI::ParseError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
