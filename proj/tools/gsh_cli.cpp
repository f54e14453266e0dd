// gsh: command-line front end for the sparse Hopfield library.
//
// Exit codes: 0 ok, 2 argument/parse error, 3 numeric-domain error,
// 4 a checked bound or descent property was violated.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gsh/gsh.hpp"

namespace {

using namespace gsh;

constexpr int kExitParse = 2;
constexpr int kExitDomain = 3;
constexpr int kExitViolation = 4;

/// Comma list of numbers; empty or malformed items are reported by position.
std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  const auto cells = detail::split(text, ',');
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto v = detail::parse_double(cells[i]);
    if (!v) {
      throw ParseError(what + ": " + (cells[i].empty() ? "empty" : "malformed") + " value at position " +
                           std::to_string(i + 1),
                       i + 1);
    }
    out.push_back(*v);
  }
  return out;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw ParseError("cannot open '" + path + "' for writing", 0);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

/// "# key=value" lines for every option of `sub` (defaults included), so the
/// run can be reproduced from the output alone.
std::string config_header(const CLI::App& sub) {
  std::string out = "# gsh " + sub.get_name() + "\n";
  std::istringstream in(sub.config_to_str(true, false));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out += "# " + line + "\n";
  return out;
}

struct SourceOpts {
  std::string patterns;
  std::string labels;
  std::string synthetic;
  bool normalize = false;
  bool csv_labels = false;

  void add(CLI::App* app, const std::string& flag = "--patterns") {
    app->add_option(flag, patterns, "Pattern file (.idx, .csv, .raw)");
    app->add_option("--labels", labels, "IDX label file matching --patterns");
    app->add_option("--synthetic", synthetic, "Sphere patterns instead of a file: d,radius");
    app->add_flag("--normalize", normalize, "Divide IDX pixel values by 255");
    app->add_flag("--csv-labels", csv_labels, "Last CSV column is an integer class");
  }

  bool is_synthetic() const { return !synthetic.empty(); }

  std::pair<std::size_t, double> sphere() const {
    const auto v = parse_list(synthetic, "--synthetic");
    if (v.size() != 2 || !(v[0] >= 1) || std::floor(v[0]) != v[0]) {
      throw ParseError("--synthetic: expected d,radius with integer d >= 1", 0);
    }
    return {static_cast<std::size_t>(v[0]), v[1]};
  }

  PatternSet load() const {
    if (patterns.empty()) throw ParseError("no pattern source: give --patterns or --synthetic", 0);
    PatternSet set = load_patterns(patterns, csv_labels, {.normalize = normalize});
    if (!labels.empty()) {
      auto classes = load_idx_labels(labels);
      if (classes.size() != set.size()) {
        throw DimensionError(std::to_string(set.size()) + " patterns but " +
                             std::to_string(classes.size()) + " labels");
      }
      set.classes = std::move(classes);
    }
    set.validate();
    return set;
  }

  PatternSource source() const {
    if (is_synthetic()) {
      const auto [d, r] = sphere();
      return PatternSource::sphere(d, r);
    }
    return PatternSource::pool(load());
  }
};

struct ModelOpts {
  double alpha = 2.0;
  double beta = 1.0;
  int max_steps = 16;
  double fp_tol = 1e-8;

  void add(CLI::App* app, bool dynamics) {
    app->add_option("--alpha", alpha, "Entmax order in [1, 5]")->capture_default_str();
    app->add_option("--beta", beta, "Inverse temperature")->capture_default_str();
    if (dynamics) {
      app->add_option("--max-steps", max_steps)->capture_default_str();
      app->add_option("--fp-tol", fp_tol, "Fixed-point tolerance")->capture_default_str();
    }
  }

  HopfieldConfig config() const {
    HopfieldConfig c{Alpha(alpha), beta, max_steps, fp_tol};
    c.validate();
    return c;
  }
};

void write_row(std::ostream& os, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ',';
    os << detail::format_double(values[i]);
  }
  os << '\n';
}

void write_matrix_csv(std::ostream& os, const Matrix& m, const std::string& prefix) {
  for (std::size_t c = 0; c < m.cols(); ++c) os << (c ? "," : "") << prefix << c;
  os << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) write_row(os, m.row(r));
}

void save_any(const PatternSet& set, const std::string& path) {
  if (ends_with(path, ".csv")) {
    save_csv(set, path);
  } else if (ends_with(path, ".raw") || ends_with(path, ".gshpat")) {
    save_raw(set.patterns, path);
  } else {
    save_idx(set, path);
  }
}

// ---------------------------------------------------------------------------

struct EntmaxCmd {
  std::string z;
  ModelOpts model;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("entmax", "Map a score vector onto the simplex");
    cmd->add_option("--z", z, "Scores, comma separated (read from stdin if absent)");
    model.add(cmd, false);
    cmd->callback([this] { run(); });
  }

  void run() {
    std::string text = z;
    if (text.empty()) {
      text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
      std::replace_if(text.begin(), text.end(), [](char c) { return c == ' ' || c == '\n' || c == '\t'; }, ',');
      while (!text.empty() && text.back() == ',') text.pop_back();
      text.erase(0, text.find_first_not_of(','));
    }
    if (text.empty()) throw ParseError("--z: no scores given", 0);
    const Vector scores(parse_list(text, "--z"));
    const Alpha a(model.alpha);
    const EntmaxResult r = entmax(scores, a, model.beta);
    std::cout << "p: ";
    write_row(std::cout, r.p.values().span());
    std::cout << "tau: " << detail::format_double(r.tau) << '\n';
    std::cout << "support: ";
    for (std::size_t i = 0; i < r.p.support().size(); ++i) std::cout << (i ? "," : "") << r.p.support()[i];
    std::cout << '\n';
    std::cout << "conjugate: " << detail::format_double(conjugate_value(model.beta * scores, a)) << '\n';
  }
};

struct RetrieveCmd {
  CLI::App* cmd = nullptr;
  SourceOpts src;
  ModelOpts model;
  std::string queries;
  std::string corruption = "half";
  std::size_t memory_size = 100;
  std::size_t count = 50;
  std::uint64_t seed = 0;
  double threshold = 0.2;
  bool states = false;
  std::string out;
  std::string retrieved;
  int status = 0;

  void add(CLI::App& app) {
    cmd = app.add_subcommand("retrieve", "Run retrieval dynamics and dump energy traces");
    src.add(cmd);
    model.add(cmd, true);
    cmd->add_option("--queries", queries, "Query file; default: corrupted stored patterns");
    cmd->add_option("--corrupt", corruption, "half | gaussian:SIGMA | scaled:SCALE")->capture_default_str();
    cmd->add_option("--memory-size", memory_size, "Patterns to store (sampled)")->capture_default_str();
    cmd->add_option("--count", count, "Queries built from stored patterns")->capture_default_str();
    cmd->add_option("--seed", seed)->capture_default_str();
    cmd->add_option("--threshold", threshold, "Cosine-error success threshold")->capture_default_str();
    cmd->add_flag("--states", states, "Also emit the state vector at every step");
    cmd->add_option("--out", out, "Trace CSV (default stdout)");
    cmd->add_option("--retrieved", retrieved, "Write final states (.csv or .raw)");
    cmd->callback([this] { run(); });
  }

  CorruptionSpec corruption_spec() const {
    if (corruption == "half") return CorruptionSpec::half_mask(seed);
    const auto colon = corruption.find(':');
    const std::string kind = corruption.substr(0, colon);
    if (colon == std::string::npos) throw ParseError("--corrupt: missing amount in '" + corruption + "'", 0);
    const auto amount = parse_list(corruption.substr(colon + 1), "--corrupt");
    if (amount.size() != 1) throw ParseError("--corrupt: expected one amount", 0);
    if (kind == "gaussian") return CorruptionSpec::gaussian(amount[0], seed);
    if (kind == "scaled") return CorruptionSpec::scaled_std(amount[0], seed);
    throw ParseError("--corrupt: unknown kind '" + kind + "'", 0);
  }

  void run() {
    const HopfieldConfig cfg = model.config();
    Rng rng(mix_seed(seed, 0));
    Matrix stored = [&] {
      if (src.is_synthetic()) return src.source().sample(memory_size, rng);
      PatternSet set = src.load();
      if (memory_size >= set.size()) return set.patterns;
      return PatternSource::pool(std::move(set)).sample(memory_size, rng);
    }();
    const MemoryBank bank = MemoryBank::from_rows(stored);

    Matrix q(1, 1);
    std::optional<Matrix> targets;
    if (!queries.empty()) {
      q = load_patterns(queries, src.csv_labels, {.normalize = src.normalize}).patterns;
    } else {
      const std::size_t n = std::min(count, stored.rows());
      Matrix base(n, stored.cols());
      for (std::size_t r = 0; r < n; ++r) std::copy(stored.row(r).begin(), stored.row(r).end(), base.row(r).begin());
      q = corrupt_rows(base, corruption_spec());
      targets = base;
    }
    if (q.cols() != bank.dim()) {
      throw DimensionError("queries have dimension " + std::to_string(q.cols()) + ", patterns " +
                           std::to_string(bank.dim()));
    }

    std::vector<RetrievalTrace> traces(q.rows());
    parallel_for(q.rows(), [&](std::size_t i) { traces[i] = retrieve(bank, q.row_vector(i), cfg); });

    Output o(out);
    auto& os = o.stream();
    os << config_header(*cmd);
    os << "query,step,energy";
    if (states)
      for (std::size_t c = 0; c < bank.dim(); ++c) os << ",x" << c;
    os << '\n';
    double worst = -INFINITY;
    std::size_t converged = 0, hits = 0;
    Matrix finals(q.rows(), bank.dim());
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const auto& t = traces[i];
      for (std::size_t s = 0; s < t.states.size(); ++s) {
        std::vector<double> row{static_cast<double>(i), static_cast<double>(s), t.energies[s]};
        if (states) row.insert(row.end(), t.states[s].begin(), t.states[s].end());
        write_row(os, row);
      }
      worst = std::max(worst, t.max_energy_increase());
      if (t.converged) ++converged;
      std::copy(t.final_state().begin(), t.final_state().end(), finals.row(i).begin());
      if (targets && retrieval_cosine_error(t.final_state(), targets->row_vector(i)) <= threshold) ++hits;
    }
    os << "# max_energy_increase: " << detail::format_double(worst) << '\n';
    os << "# converged: " << converged << '/' << traces.size() << '\n';
    if (targets) {
      os << "# success_rate: "
         << detail::format_double(static_cast<double>(hits) / static_cast<double>(traces.size())) << '\n';
    }
    if (!retrieved.empty()) save_any({finals, std::nullopt, std::nullopt, "retrieved"}, retrieved);
    if (worst > 1e-10) {
      std::cerr << "gsh retrieve: energy increased by " << worst << " along a trace\n";
      status = kExitViolation;
    }
  }
};

struct SweepOpts {
  std::string alphas = "1,2";
  std::string betas = "0.01";
  double threshold = 0.2;
  int trials = 10;
  std::uint64_t seed = 0;
  std::size_t max_queries = 500;
  int max_steps = 16;
  double fp_tol = 1e-8;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--alpha", alphas, "Alpha grid")->capture_default_str();
    app->add_option("--beta", betas, "Beta grid")->capture_default_str();
    app->add_option("--threshold", threshold)->capture_default_str();
    app->add_option("--trials", trials)->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--max-queries", max_queries, "Queries per cell")->capture_default_str();
    app->add_option("--max-steps", max_steps)->capture_default_str();
    app->add_option("--fp-tol", fp_tol)->capture_default_str();
    app->add_option("--out", out, "CSV output (default stdout)");
  }

  void fill(SweepConfig& c) const {
    c.alphas = parse_list(alphas, "--alpha");
    c.betas = parse_list(betas, "--beta");
    c.threshold = threshold;
    c.trials = trials;
    c.seed = seed;
    c.max_queries = max_queries;
    c.max_steps = max_steps;
    c.fp_tol = fp_tol;
  }
};

std::vector<std::size_t> parse_counts(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  for (double v : parse_list(text, what)) {
    if (!(v >= 1) || std::floor(v) != v) throw ParseError(what + ": counts must be positive integers", 0);
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

struct CapacityCmd {
  CLI::App* cmd = nullptr;
  SourceOpts src;
  SweepOpts sweep;
  std::string counts = "100,500,1000,2000";
  bool mask_leading = false;

  void add(CLI::App& app) {
    cmd = app.add_subcommand("capacity", "Half-masked retrieval success over a grid of pattern counts");
    src.add(cmd);
    sweep.add(cmd);
    cmd->add_option("--M", counts, "Pattern-count grid")->capture_default_str();
    cmd->add_flag("--mask-leading", mask_leading, "Mask the leading half instead of the trailing half");
    cmd->callback([this] { run(); });
  }

  void run() {
    CapacityConfig cfg;
    sweep.fill(cfg);
    cfg.pattern_counts = parse_counts(counts, "--M");
    cfg.mask_leading = mask_leading;
    const Table t = capacity_sweep(src.source(), cfg);
    Output o(sweep.out);
    o.stream() << config_header(*cmd) << to_csv(t);
  }
};

struct RobustnessCmd {
  CLI::App* cmd = nullptr;
  SourceOpts src;
  SweepOpts sweep;
  std::size_t count = 100;
  std::string sigmas = "0,0.25,0.5,1,2";

  void add(CLI::App& app) {
    cmd = app.add_subcommand("robustness", "Retrieval success from Gaussian-noised patterns");
    src.add(cmd);
    sweep.add(cmd);
    cmd->add_option("--M", count, "Stored pattern count")->capture_default_str();
    cmd->add_option("--sigma", sigmas, "Noise grid")->capture_default_str();
    cmd->callback([this] { run(); });
  }

  void run() {
    RobustnessConfig cfg;
    sweep.fill(cfg);
    cfg.pattern_count = count;
    cfg.sigmas = parse_list(sigmas, "--sigma");
    const Table t = robustness_sweep(src.source(), cfg);
    Output o(sweep.out);
    o.stream() << config_header(*cmd) << to_csv(t);
  }
};

struct BoundsCmd {
  CLI::App* cmd = nullptr;
  std::size_t instances = 500;
  std::size_t banks = 500;
  double margin = 0.1;
  std::uint64_t seed = 0;
  int d = 64;
  double m = 1.0;
  double R = 0.1;
  double delta = 0.0;
  double p_fail = 0.01;
  std::string betas = "1,10,100,1000,10000";
  int refine = 0;
  std::string out;
  std::string instances_out;
  int status = 0;

  void add(CLI::App& app) {
    cmd = app.add_subcommand("bounds", "Check retrieval-error bounds, well separation and capacity bounds");
    cmd->add_option("--instances", instances, "Random bound-domination instances")->capture_default_str();
    cmd->add_option("--banks", banks, "Well-separated banks")->capture_default_str();
    cmd->add_option("--margin", margin, "Separation margin above the threshold")->capture_default_str();
    cmd->add_option("--seed", seed)->capture_default_str();
    cmd->add_option("--d", d, "Capacity: dimension")->capture_default_str();
    cmd->add_option("--m", m, "Capacity: pattern norm")->capture_default_str();
    cmd->add_option("--R", R, "Capacity: sphere radius")->capture_default_str();
    cmd->add_option("--delta", delta, "Capacity: delta (<= 0)")->capture_default_str();
    cmd->add_option("--p-fail", p_fail, "Capacity: failure probability")->capture_default_str();
    cmd->add_option("--beta", betas, "Capacity: beta grid")->capture_default_str();
    cmd->add_option("--refine", refine, "Capacity: self-consistent refinement passes")->capture_default_str();
    cmd->add_option("--out", out, "Capacity table CSV (default stdout)");
    cmd->add_option("--instances-out", instances_out, "Per-instance domination CSV");
    cmd->callback([this] { run(); });
  }

  void run() {
    const DominationReport dom = bound_domination_suite(instances, seed);
    const WellSeparationReport ws = well_separation_suite(banks, mix_seed(seed, 1), margin);
    CapacityInputs inp;
    inp.d = d;
    inp.m = m;
    inp.R = R;
    inp.delta = delta;
    inp.p_fail = p_fail;
    const auto grid = parse_list(betas, "--beta");
    const Table cap = capacity_table(inp, grid, refine);

    double worst_residual = 0.0;
    double crossover = NAN;  // first beta after which sparse >= dense holds for the rest of the grid
    const auto ge = cap.column_index("sparse_ge_dense");
    for (std::size_t i = 0; i < cap.rows.size(); ++i) {
      worst_residual = std::max({worst_residual, cap.rows[i][cap.column_index("residual")],
                                 cap.rows[i][cap.column_index("residual_dense")]});
      if (cap.rows[i][ge] != 1.0) {
        crossover = NAN;
      } else if (std::isnan(crossover)) {
        crossover = grid[i];
      }
    }

    Output o(out);
    auto& os = o.stream();
    os << config_header(*cmd);
    os << "# domination: instances=" << instances << " dense_violations=" << dom.dense_violations
       << " sparse_violations=" << dom.sparse_violations;
    for (std::size_t k = 0; k < dom.ordering_alphas.size(); ++k)
      os << " ordering_violations_alpha" << detail::format_double(dom.ordering_alphas[k]) << '='
         << dom.ordering_violations[k];
    os << '\n';
    os << "# well_separation: banks=" << ws.trials << " landed_dense=" << ws.landed_dense
       << " landed_sparse=" << ws.landed_sparse
       << " worst_ratio_dense=" << detail::format_double(ws.worst_ratio_dense)
       << " worst_ratio_sparse=" << detail::format_double(ws.worst_ratio_sparse) << '\n';
    os << "# capacity: worst_residual=" << detail::format_double(worst_residual)
       << " sparse_ge_dense_from_beta="
       << (std::isnan(crossover) ? std::string("none") : detail::format_double(crossover)) << '\n';
    os << to_csv(cap);
    if (!instances_out.empty()) save_csv(dom.instances, instances_out);

    if (dom.total_violations() > 0 || ws.landed_dense != ws.trials || ws.landed_sparse != ws.trials ||
        worst_residual > 1e-8) {
      std::cerr << "gsh bounds: violation detected\n";
      status = kExitViolation;
    }
  }
};

Matrix load_matrix_file(const std::string& path, bool csv_labels, bool normalize) {
  return load_patterns(path, csv_labels, {.normalize = normalize}).patterns;
}

std::vector<int> load_classes(const std::string& path) {
  if (ends_with(path, ".csv")) {
    const PatternSet s = load_csv(path, false);
    std::vector<int> out;
    for (std::size_t r = 0; r < s.size(); ++r) {
      const double v = s.patterns(r, 0);
      if (std::floor(v) != v) throw ParseError(path + ": non-integer class at row " + std::to_string(r + 1), r + 1);
      out.push_back(static_cast<int>(v));
    }
    return out;
  }
  return load_idx_labels(path);
}

struct PseudoLabelCmd {
  CLI::App* cmd = nullptr;
  SourceOpts memory;
  ModelOpts model;
  std::string queries;
  std::string query_labels;
  bool query_csv_labels = false;
  std::string out;

  void add(CLI::App& app) {
    cmd = app.add_subcommand("pseudolabel", "Retrieve label vectors for queries from a labelled memory");
    memory.add(cmd, "--memory");
    model.add(cmd, false);
    cmd->add_option("--queries", queries, "Query file")->required();
    cmd->add_option("--query-labels", query_labels, "True classes of the queries (.idx or one-column .csv)");
    cmd->add_flag("--query-csv-labels", query_csv_labels, "Last column of the query CSV is its class");
    cmd->add_option("--out", out, "CSV output (default stdout)");
    cmd->callback([this] { run(); });
  }

  void run() {
    const PatternSet mem = memory.load();
    if (!mem.classes && !mem.labels) throw DomainError("pseudolabel: memory has no labels (use --labels or --csv-labels)");
    const Matrix labels = mem.label_matrix();
    const PatternSet qs = load_patterns(queries, query_csv_labels, {.normalize = memory.normalize});
    std::optional<std::vector<int>> truth = qs.classes;
    if (!query_labels.empty()) truth = load_classes(query_labels);
    if (truth && truth->size() != qs.size()) {
      throw DimensionError(std::to_string(qs.size()) + " queries but " + std::to_string(truth->size()) + " labels");
    }
    const Matrix pl = pseudo_label_retrieve(qs.patterns, mem.patterns, labels, model.config());

    Output o(out);
    auto& os = o.stream();
    os << config_header(*cmd);
    os << "query";
    for (std::size_t c = 0; c < pl.cols(); ++c) os << ",l" << c;
    os << ",argmax" << (truth ? ",class" : "") << '\n';
    std::size_t agree = 0;
    for (std::size_t r = 0; r < pl.rows(); ++r) {
      auto row = pl.row(r);
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      std::vector<double> vals{static_cast<double>(r)};
      vals.insert(vals.end(), row.begin(), row.end());
      vals.push_back(static_cast<double>(best));
      if (truth) {
        vals.push_back((*truth)[r]);
        if (static_cast<int>(best) == (*truth)[r]) ++agree;
      }
      write_row(os, vals);
    }
    if (truth) {
      os << "# agreement: "
         << detail::format_double(static_cast<double>(agree) / static_cast<double>(pl.rows())) << '\n';
    }
  }
};

struct PlugMemCmd {
  CLI::App* cmd = nullptr;
  ModelOpts model;
  std::string memory;
  std::string queries;
  double eps = 1e-5;
  bool normalize = false;
  std::string out;

  void add(CLI::App& app) {
    cmd = app.add_subcommand("plugmem", "LayerNorm(R + lookup(R, Y)) with fixed parameters");
    cmd->add_option("--memory", memory, "Memory rows Y")->required();
    cmd->add_option("--queries", queries, "Query rows R (default: the memory itself)");
    cmd->add_option("--eps", eps, "LayerNorm epsilon")->capture_default_str();
    cmd->add_flag("--normalize", normalize, "Divide IDX pixel values by 255");
    model.add(cmd, false);
    cmd->add_option("--out", out, "CSV output (default stdout)");
    cmd->callback([this] { run(); });
  }

  void run() {
    const Matrix y = load_matrix_file(memory, false, normalize);
    const Matrix r = queries.empty() ? y : load_matrix_file(queries, false, normalize);
    const Matrix z = plug_memory(r, y, model.config(), eps);
    Output o(out);
    o.stream() << config_header(*cmd);
    write_matrix_csv(o.stream(), z, "y");
  }
};

struct ConvertCmd {
  SourceOpts src;
  std::string out;
  std::string labels_out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("convert", "Convert patterns between IDX, CSV and raw formats");
    src.add(cmd, "--in");
    cmd->add_option("--out", out, "Destination (.csv, .raw, or IDX otherwise)")->required();
    cmd->add_option("--labels-out", labels_out, "Also write the classes as an IDX label file");
    cmd->callback([this] { run(); });
  }

  void run() {
    if (src.is_synthetic()) throw ParseError("convert: --synthetic is not a file source", 0);
    const PatternSet set = src.load();
    save_any(set, out);
    if (!labels_out.empty()) {
      if (!set.classes) throw DomainError("convert: input has no classes to write");
      save_idx_labels(*set.classes, labels_out);
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Hopfield retrieval, bounds and experiments"};
  app.set_config("--config", "", "key=value / TOML config file (flags override it)");
  bool dump_defaults = false;
  app.add_flag("--dump-defaults", dump_defaults, "Print every option with its default and exit");
  app.require_subcommand(0, 1);

  EntmaxCmd entmax_cmd;
  RetrieveCmd retrieve_cmd;
  CapacityCmd capacity_cmd;
  RobustnessCmd robustness_cmd;
  BoundsCmd bounds_cmd;
  PseudoLabelCmd pseudo_cmd;
  PlugMemCmd plug_cmd;
  ConvertCmd convert_cmd;
  entmax_cmd.add(app);
  retrieve_cmd.add(app);
  capacity_cmd.add(app);
  robustness_cmd.add(app);
  bounds_cmd.add(app);
  pseudo_cmd.add(app);
  plug_cmd.add(app);
  convert_cmd.add(app);

  // Subcommand callbacks run inside parse(); library errors surface here too.
  try {
    app.parse(argc, argv);
    if (dump_defaults) {
      // Root output already walks every subcommand as section.key lines.
      std::cout << app.config_to_str(true, true);
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return kExitParse;
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  } catch (const gsh::ParseError& e) {
    std::cerr << "gsh: " << e.what() << '\n';
    return kExitParse;
  } catch (const gsh::DimensionError& e) {
    std::cerr << "gsh: " << e.what() << '\n';
    return kExitParse;
  } catch (const gsh::DomainError& e) {
    std::cerr << "gsh: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "gsh: internal error: " << e.what() << '\n';
    return 1;
  }
  return std::max(retrieve_cmd.status, bounds_cmd.status);
}
