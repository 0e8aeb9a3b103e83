// Command-line front end: solve a model, run a benchmark sweep, or check a file.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sfi/bench.h"
#include "sfi/decomp.h"
#include "sfi/parser.h"

namespace {

constexpr int kOk = 0;
constexpr int kInferenceError = 1;
constexpr int kUsageError = 2;

struct SolveArgs {
  std::string file;
  std::string query;
  std::vector<std::string> evidence;
  std::string decomp = "recursive";
  std::string infer = "ve";
  bool log = false;
  sfi::SolverConfig cfg;
};

struct BenchArgs {
  std::string sweep_kind;
  std::string sweep;
  int seeds = 0;
  std::vector<std::string> strategies;
  std::string out;
  std::string plot;
  int jobs = 1;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", p);
  return buf;
}

// Symbols without backquotes, everything else as written in a model.
std::string display(const sfi::Value& v) { return v.is_symbol() ? v.label() : v.literal(); }

// Accepts the value's literal (`true`, `3`, `1/2`, `` `red` ``) or its bare
// label (`red`, `T`).
sfi::Value parse_observed(const sfi::ExpandedModel& m, sfi::VarId v, const std::string& text) {
  for (const auto& value : m.support(v))
    if (value.literal() == text || value.label() == text) return value;
  throw sfi::InferenceError(sfi::InferenceError::Kind::ValueNotInSupport,
                            "value '" + text + "' is not in the support of " + m.name(v));
}

std::shared_ptr<const sfi::InferenceStrategy> make_inference(const std::string& name, const sfi::SolverConfig& cfg) {
  if (name == "ve") return sfi::make_ve(cfg);
  if (name == "bp") return sfi::make_bp(cfg);
  if (name == "gibbs") return sfi::make_gibbs(cfg);
  if (name == "hybrid") return sfi::make_hybrid(cfg);
  throw UsageError("unknown inference strategy '" + name + "' (expected ve, bp, gibbs or hybrid)");
}

int run_solve(const SolveArgs& a) {
  try {
    a.cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::shared_ptr<const sfi::DecompositionStrategy> ds;
  try {
    ds = sfi::parse_decomposition(a.decomp);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto is = make_inference(a.infer, a.cfg);

  sfi::ExpandedModel model = sfi::expand(sfi::parse_file(a.file));
  auto q = model.find(a.query);
  if (!q) throw UsageError("unknown query variable '" + a.query + "'");
  std::map<sfi::VarId, sfi::Value> evidence;
  for (const auto& e : a.evidence) {
    auto eq = e.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("evidence must look like NAME=VALUE, got '" + e + "'");
    auto v = model.find(e.substr(0, eq));
    if (!v) throw UsageError("unknown evidence variable '" + e.substr(0, eq) + "'");
    evidence[*v] = parse_observed(model, *v, e.substr(eq + 1));
  }
  model = model.with_evidence(evidence);

  sfi::QueryResult r = sfi::sfi_marginals(model, {*q}, *ds, *is);
  const sfi::Factor& f = r.marginals.at(*q);
  std::vector<std::size_t> order(f.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return f.table()[x] > f.table()[y]; });
  for (std::size_t i : order) std::cout << display(model.support(*q)[i]) << '\t' << format_prob(f.table()[i]) << '\n';
  if (a.log)
    for (const auto& c : r.log) std::cerr << c.str() << '\n';
  return kOk;
}

std::vector<int> parse_sweep(const std::string& text) {
  std::vector<int> out;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      int n = std::stoi(s, &used);
      if (used != s.size() || n < 1) throw std::invalid_argument(s);
      return n;
    } catch (const std::exception&) {
      throw UsageError("bad sweep value '" + s + "'");
    }
  };
  if (auto dots = text.find(".."); dots != std::string::npos) {
    int lo = number(text.substr(0, dots)), hi = number(text.substr(dots + 2));
    if (hi < lo) throw UsageError("empty sweep range '" + text + "'");
    for (int n = lo; n <= hi; ++n) out.push_back(n);
    return out;
  }
  std::stringstream s(text);
  for (std::string part; std::getline(s, part, ',');) out.push_back(number(part));
  if (out.empty()) throw UsageError("empty sweep");
  return out;
}

int run_bench(const BenchArgs& a) {
  bool qmr = a.sweep_kind == "qmr";
  std::vector<int> sizes = parse_sweep(a.sweep.empty() ? (qmr ? "4..10" : "2..5") : a.sweep);
  int count = a.seeds > 0 ? a.seeds : (qmr ? 20 : 10);
  std::vector<std::uint64_t> seeds;
  for (int s = 1; s <= count; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  std::vector<std::string> strategies = a.strategies;
  if (strategies.empty())
    strategies = qmr ? std::vector<std::string>{"flat-VE", "hier-VE", "flat-BP100", "hier-BP10", "hybrid-VE/BP10"}
                     : std::vector<std::string>{"flat-VE", "hier-VE", "hier-GS1000", "hybrid-VE/GS1000"};
  for (const auto& s : strategies) try {
      sfi::parse_strategy(s);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }

  auto models = qmr ? sfi::qmr_sweep(sizes, seeds) : sfi::ising_sweep(sizes, seeds);
  sfi::BenchOptions options;
  options.jobs = std::max(1, a.jobs);
  auto results = sfi::run_benchmark(models, strategies, options);

  std::ofstream out(a.out);
  if (!out) throw UsageError("cannot write " + a.out);
  sfi::write_csv(out, results);
  if (!a.plot.empty()) {
    std::filesystem::create_directories(a.plot);
    std::ofstream(std::filesystem::path(a.plot) / ("time_" + a.sweep_kind + ".svg"))
        << sfi::render_svg(results, false, a.sweep_kind + " running time");
    std::ofstream(std::filesystem::path(a.plot) / ("err_" + a.sweep_kind + ".svg"))
        << sfi::render_svg(results, true, a.sweep_kind + " error against flat VE");
  }
  std::size_t dnf = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.completed; });
  std::cerr << results.size() << " runs written to " << a.out << " (" << dnf << " did not finish)\n";
  return kOk;
}

int run_check(const std::string& file) {
  sfi::Program p = sfi::parse_file(file);
  p.validate();
  sfi::ExpandedModel m = sfi::expand(p);
  std::cout << file << ": ok (" << p.defs().size() << " definitions, " << m.size() << " expanded variables, "
            << m.chain_instances().size() << " chains)\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured factored inference over SimplePPL models"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Print the marginal of one variable");
  s->add_option("file", solve.file, "Model file (.sppl)")->required();
  s->add_option("--query", solve.query, "Variable to query")->required();
  s->add_option("--evidence", solve.evidence, "Observation NAME=VALUE (repeatable)");
  s->add_option("--decomp", solve.decomp, "flat, recursive or bounded:N")->capture_default_str();
  s->add_option("--infer", solve.infer, "ve, bp, gibbs or hybrid")->capture_default_str();
  s->add_option("--bp-iters", solve.cfg.bp_iterations, "BP iterations")->capture_default_str();
  s->add_option("--bp-damping", solve.cfg.bp_damping, "BP damping in [0,1)")->capture_default_str();
  s->add_option("--gibbs-samples", solve.cfg.gibbs_samples, "Gibbs samples")->capture_default_str();
  s->add_option("--gibbs-burnin", solve.cfg.gibbs_burnin, "Gibbs burn-in (default 10% of samples)");
  s->add_option("--seed", solve.cfg.seed, "Random seed")->capture_default_str();
  s->add_option("--ve-cost-threshold", solve.cfg.ve_cost_threshold, "Hybrid VE cost threshold")->capture_default_str();
  s->add_option("--det-threshold", solve.cfg.determinism_threshold, "Hybrid determinism threshold")
      ->capture_default_str();
  s->add_flag("--log", solve.log, "Print the algorithm choices to stderr");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Run a benchmark sweep and write CSV");
  b->add_option("model", bench.sweep_kind, "qmr or ising")->required()->check(CLI::IsMember({"qmr", "ising"}));
  b->add_option("--sweep", bench.sweep, "Sizes as LO..HI or a comma list (qmr 4..10, ising 2..5)");
  b->add_option("--seeds", bench.seeds, "Seeds per size (qmr 20, ising 10)");
  b->add_option("--strategies", bench.strategies, "Strategy names, e.g. hier-BP10")->delimiter(',');
  b->add_option("--out", bench.out, "CSV output path")->required();
  b->add_option("--plot", bench.plot, "Directory for time_<model>.svg and err_<model>.svg");
  b->add_option("--jobs", bench.jobs, "Parallel cells")->capture_default_str();

  std::string check_file;
  auto* c = app.add_subcommand("check", "Parse a model and report diagnostics");
  c->add_option("file", check_file, "Model file (.sppl)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (s->parsed()) return run_solve(solve);
    if (b->parsed()) return run_bench(bench);
    return run_check(check_file);
  } catch (const sfi::ParseError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << d.str() << '\n';
    return kUsageError;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const sfi::ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kInferenceError;
  } catch (const sfi::InferenceError& e) {
    std::cerr << "inference error: " << e.what() << '\n';
    return kInferenceError;
  } catch (const sfi::EvalError& e) {
    std::cerr << "evaluation error: " << e.what() << '\n';
    return kInferenceError;
  }
}
