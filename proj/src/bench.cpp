#include "sfi/bench.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sfi {

namespace {

std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// "BP10" -> 10 when the prefix matches.
std::optional<int> count_after(const std::string& s, const std::string& prefix) {
  if (s.rfind(prefix, 0) != 0 || s.size() == prefix.size() || s.size() > prefix.size() + 9) return std::nullopt;
  int n = 0;
  auto [ptr, ec] = std::from_chars(s.data() + prefix.size(), s.data() + s.size(), n);
  if (ec != std::errc() || ptr != s.data() + s.size() || n <= 0) return std::nullopt;
  return n;
}

void for_each_parallel(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < count;) body(i);
    });
  for (auto& t : pool) t.join();
}

double mean_abs_error(const std::map<VarId, Factor>& got, const std::map<VarId, Factor>& ref) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& [v, f] : ref) {
    const Factor& g = got.at(v);
    for (std::size_t i = 0; i < f.size(); ++i) {
      total += std::abs(f.table()[i] - g.table()[i]);
      ++n;
    }
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

}  // namespace

BenchStrategy parse_strategy(const std::string& name, const SolverConfig& base) {
  auto bad = [&]() {
    return std::invalid_argument("unknown strategy '" + name +
                                 "' (expected <flat|hier|bounded:N>-<VE|BPn|GSn> or hybrid-VE/<BPn|GSn>)");
  };
  auto dash = name.find('-');
  if (dash == std::string::npos) throw bad();
  std::string d = name.substr(0, dash), i = name.substr(dash + 1);
  SolverConfig cfg = base;
  BenchStrategy s{name, nullptr, nullptr};
  if (d == "hybrid") {
    s.decomposition = strategy_recursive();
    if (auto n = count_after(i, "VE/BP"))
      cfg.bp_iterations = *n;
    else if (auto g = count_after(i, "VE/GS"))
      cfg.gibbs_samples = *g;
    else
      throw bad();
    s.inference = make_hybrid(cfg);
    return s;
  }
  if (d == "flat")
    s.decomposition = strategy_flat();
  else if (d == "hier")
    s.decomposition = strategy_recursive();
  else if (d.rfind("bounded:", 0) == 0)
    try {
      s.decomposition = parse_decomposition(d);
    } catch (const std::invalid_argument&) {
      throw bad();
    }
  else
    throw bad();
  if (i == "VE") {
    s.inference = make_ve(cfg);
  } else if (auto n = count_after(i, "BP")) {
    cfg.bp_iterations = *n;
    s.inference = make_bp(cfg);
  } else if (auto g = count_after(i, "GS")) {
    cfg.gibbs_samples = *g;
    s.inference = make_gibbs(cfg);
  } else {
    throw bad();
  }
  return s;
}

std::vector<RunResult> run_benchmark(const std::vector<BenchModel>& models, const std::vector<std::string>& strategies,
                                     const BenchOptions& options) {
  options.solver.validate();
  // parse every name up front so a typo fails before any work
  for (const auto& s : strategies) parse_strategy(s, options.solver);

  std::vector<std::optional<std::map<VarId, Factor>>> reference(models.size());
  for_each_parallel(models.size(), options.jobs, [&](std::size_t k) {
    const auto& m = models[k].inst;
    try {
      reference[k] = sfi_marginals(m.model, m.queries, *strategy_flat(), *make_ve(options.solver), m.extra).marginals;
    } catch (const InferenceError&) {
    }
  });

  std::vector<RunResult> out(models.size() * strategies.size());
  for_each_parallel(out.size(), options.jobs, [&](std::size_t cell) {
    const BenchModel& bm = models[cell / strategies.size()];
    const std::string& sname = strategies[cell % strategies.size()];
    SolverConfig cfg = options.solver;
    cfg.seed = bm.seed;
    BenchStrategy s = parse_strategy(sname, cfg);
    RunResult& r = out[cell];
    r.model = bm.inst.id;
    r.strategy = sname;
    r.size = bm.size;
    r.seed = bm.seed;
    auto start = std::chrono::steady_clock::now();
    try {
      QueryResult q = sfi_marginals(bm.inst.model, bm.inst.queries, *s.decomposition, *s.inference, bm.inst.extra);
      r.completed = true;
      r.marginals = std::move(q.marginals);
      r.log = std::move(q.log);
      r.stats = q.stats;
    } catch (const InferenceError& e) {
      r.failure = e.what();
    }
    r.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const auto& ref = reference[cell / strategies.size()];
    if (r.completed && ref) r.mean_abs_err = mean_abs_error(r.marginals, *ref);
  });
  return out;
}

void write_csv(std::ostream& out, const std::vector<RunResult>& results) {
  out << "model,strategy,seed,time_ms,mean_abs_err,status\n";
  for (const auto& r : results) {
    out << r.model << ',' << r.strategy << ',' << r.seed << ',';
    if (r.completed)
      out << fmt(std::round(r.time_ms * 1000) / 1000) << ',' << (r.mean_abs_err ? fmt(*r.mean_abs_err) : "NA") << ",ok\n";
    else
      out << "DNF,NA,DNF\n";
  }
}

std::string render_svg(const std::vector<RunResult>& results, bool err, const std::string& title) {
  // strategy -> size -> (sum, count)
  std::map<std::string, std::map<int, std::pair<double, int>>> series;
  std::vector<std::string> order;
  for (const auto& r : results) {
    if (!series.count(r.strategy)) order.push_back(r.strategy);
    auto& cell = series[r.strategy];
    if (!r.completed || (err && !r.mean_abs_err)) continue;
    auto& [sum, n] = cell[r.size];
    sum += err ? *r.mean_abs_err : r.time_ms;
    ++n;
  }
  double xmin = 1e300, xmax = -1e300, ymax = 0;
  for (const auto& [name, pts] : series)
    for (const auto& [x, sn] : pts) {
      xmin = std::min<double>(xmin, x);
      xmax = std::max<double>(xmax, x);
      ymax = std::max(ymax, sn.first / sn.second);
    }
  if (xmin > xmax) xmin = 0, xmax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax <= 0) ymax = 1;

  const double W = 640, H = 400, L = 70, R = 170, T = 40, B = 50;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - y / ymax * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    double y = ymax * t / 4;
    s << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << fmt(std::round(y * 1e4) / 1e4)
      << "</text>\n";
  }
  std::set<int> xs;
  for (const auto& [name, pts] : series)
    for (const auto& [x, sn] : pts) xs.insert(x);
  for (int x : xs)
    s << "<text x=\"" << px(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << x << "</text>\n";
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">model size</text>\n";
  s << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2 << ")\" text-anchor=\"middle\">"
    << (err ? "mean abs error" : "time (ms)") << "</text>\n";
  for (std::size_t k = 0; k < order.size(); ++k) {
    const char* c = colors[k % 8];
    std::string pts;
    for (const auto& [x, sn] : series[order[k]]) pts += fmt(px(x)) + "," + fmt(py(sn.first / sn.second)) + " ";
    if (!pts.empty()) s << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
    double ly = T + 16.0 * static_cast<double>(k);
    s << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly << "\" stroke=\"" << c
      << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << W - R + 36 << "\" y=\"" << ly + 4 << "\">" << order[k] << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::vector<BenchModel> qmr_sweep(const std::vector<int>& sizes, const std::vector<std::uint64_t>& seeds) {
  std::vector<BenchModel> out;
  for (int n : sizes)
    for (std::uint64_t seed : seeds) {
      QmrConfig cfg;
      cfg.n_causal = n;
      cfg.n_intermediate = n;
      cfg.n_symptoms = 2 * n;
      cfg.parents_per_symptom = 2;
      cfg.seed = seed;
      out.push_back({instantiate(gen_qmr(cfg)), n, seed});
    }
  return out;
}

std::vector<BenchModel> ising_sweep(const std::vector<int>& sizes, const std::vector<std::uint64_t>& seeds) {
  std::vector<BenchModel> out;
  for (int n : sizes)
    for (std::uint64_t seed : seeds) {
      IsingConfig cfg;
      cfg.n = n;
      cfg.seed = seed;
      out.push_back({instantiate(gen_mixed_ising(cfg)), n, seed});
    }
  return out;
}

}  // namespace sfi
