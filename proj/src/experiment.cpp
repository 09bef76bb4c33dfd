#include "mivabo/experiment.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "mivabo/errors.hpp"

namespace mivabo {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kBuiltins = {"synthetic_c1", "synthetic_c2_card2", "xgboost_like_table"};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::string> builtin_task_names() { return kBuiltins; }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// config

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::string& base_dir) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const auto& t = j.at("task");
    c.task.name = t.at("name").get<std::string>();
    c.task.task_seed = t.value("seed", std::uint64_t{0});
    c.task.noise_beta = t.value("noise_beta", c.task.noise_beta);
    c.task.table_rows = t.value("rows", c.task.table_rows);
    c.task.metric_column = t.value("metric_column", c.task.metric_column);
    if (t.contains("csv")) {
      fs::path p = t.at("csv").get<std::string>();
      if (p.is_relative()) p = fs::path(base_dir) / p;
      c.task.csv_path = p.string();
    }
    if (t.contains("domain")) c.task.domain = t.at("domain");

    const bool builtin = std::find(kBuiltins.begin(), kBuiltins.end(), c.task.name) != kBuiltins.end();
    if (!builtin && c.task.name != "table") throw ConfigError("unknown task '" + c.task.name + "'");
    if (c.task.name == "table") {
      if (c.task.csv_path.empty()) throw ConfigError("task 'table' needs a csv path");
      if (!fs::exists(c.task.csv_path)) throw ConfigError("table file '" + c.task.csv_path + "' does not exist");
      if (c.task.domain.is_null()) throw ConfigError("task 'table' needs a domain");
      (void)MixedDomain::from_json(c.task.domain);
    }
    if (!(c.task.noise_beta > 0.0)) throw ConfigError("noise_beta must be positive");
    if (c.task.table_rows < 1) throw ConfigError("rows must be >= 1");

    c.T = j.value("T", c.T);
    if (c.T < 1) throw ConfigError("T must be >= 1");
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("penalty") && !j.at("penalty").is_null()) c.penalty = j.at("penalty").get<double>();
    c.workers = j.value("workers", c.workers);

    if (j.contains("seeds")) {
      c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } else {
      const int n = j.value("num_seeds", 0);
      for (int s = 0; s < n; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (c.seeds.empty()) throw ConfigError("no seeds");
    if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) {
      throw ConfigError("seeds must be distinct");
    }

    std::set<std::string> names;
    for (const auto& jm : j.at("methods")) {
      MethodSpec m;
      m.type = jm.at("type").get<std::string>();
      m.name = jm.value("name", m.type);
      if (m.type != "mivabo" && m.type != "mivabo_sa" && m.type != "random" && m.type != "sa") {
        throw ConfigError("unknown method type '" + m.type + "'");
      }
      if (!names.insert(m.name).second) throw ConfigError("duplicate method name '" + m.name + "'");
      if (jm.contains("bo")) m.bo = BoLoopConfig::from_json(jm.at("bo"));
      m.bo.T = c.T;
      if (m.type == "mivabo_sa") m.bo.optimizer = AcquisitionOptimizer::Anneal;
      if (m.type == "mivabo" || m.type == "mivabo_sa") m.bo.validate();
      if (jm.contains("features")) m.features = FeatureConfig::from_json(jm.at("features"));
      if (jm.contains("sa")) m.sa = MixedAnnealSchedule::from_json(jm.at("sa"));
      m.constraint_aware = jm.value("constraint_aware", m.type == "random");
      c.methods.push_back(std::move(m));
    }
    if (c.methods.empty()) throw ConfigError("methods list is empty");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("config domain: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return from_json(j, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json t{{"name", task.name},
                   {"seed", task.task_seed},
                   {"noise_beta", task.noise_beta},
                   {"rows", task.table_rows},
                   {"metric_column", task.metric_column}};
  if (!task.csv_path.empty()) t["csv"] = task.csv_path;
  if (!task.domain.is_null()) t["domain"] = task.domain;
  nlohmann::json ms = nlohmann::json::array();
  for (const MethodSpec& m : methods) {
    ms.push_back({{"name", m.name},
                  {"type", m.type},
                  {"bo", m.bo.to_json()},
                  {"features", m.features.to_json()},
                  {"sa", m.sa.to_json()},
                  {"constraint_aware", m.constraint_aware}});
  }
  nlohmann::json j{{"task", t}, {"methods", ms}, {"seeds", seeds}, {"T", T}, {"output_dir", output_dir},
                   {"workers", workers}};
  j["penalty"] = penalty ? nlohmann::json(*penalty) : nlohmann::json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// traces

void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  os << "seed,t,x_disc,x_cont,y,feasible,incumbent,violations,wall_ms,scaling\n";
  for (const TraceRecord& r : trace) {
    std::string bits;
    for (auto b : r.x_disc) bits.push_back(b ? '1' : '0');
    std::string cont;
    for (Eigen::Index i = 0; i < r.x_cont.size(); ++i) {
      if (i) cont.push_back(';');
      cont += num(r.x_cont[i]);
    }
    os << r.seed << ',' << r.t << ',' << bits << ',' << cont << ',' << num(r.y) << ',' << (r.feasible ? 1 : 0)
       << ',' << num(r.incumbent) << ',' << r.violations << ',' << num(r.wall_ms) << ',' << r.scaling << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(s);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw SchemaError("trace: bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<TraceRecord> read_trace_csv(std::istream& is) {
  std::string line;
  std::vector<TraceRecord> out;
  if (!std::getline(is, line)) return out;
  if (line.rfind("seed,t,", 0) != 0) throw SchemaError("trace: unexpected header");
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 10) throw SchemaError("trace: expected 10 cells per row");
    TraceRecord r;
    r.seed = std::stoull(cells[0]);
    r.t = std::stoi(cells[1]);
    for (char ch : cells[2]) {
      if (ch != '0' && ch != '1') throw SchemaError("trace: bad bit string");
      r.x_disc.push_back(static_cast<std::uint8_t>(ch - '0'));
    }
    const auto conts = cells[3].empty() ? std::vector<std::string>{} : split(cells[3], ';');
    r.x_cont.resize(static_cast<Eigen::Index>(conts.size()));
    for (std::size_t i = 0; i < conts.size(); ++i) r.x_cont[static_cast<Eigen::Index>(i)] = to_double(conts[i]);
    r.y = to_double(cells[4]);
    r.feasible = cells[5] == "1";
    r.incumbent = to_double(cells[6]);
    r.violations = std::stoi(cells[7]);
    r.wall_ms = to_double(cells[8]);
    r.scaling = cells[9];
    out.push_back(std::move(r));
  }
  return out;
}

ReplayReport replay_trace(std::istream& is) {
  const std::vector<TraceRecord> trace = read_trace_csv(is);
  ReplayReport rep;
  rep.rows = trace.size();
  double inc = std::numeric_limits<double>::infinity();
  for (const TraceRecord& r : trace) {
    if (r.feasible) inc = std::min(inc, r.y);
    if (!(r.incumbent == inc)) rep.mismatched_rows.push_back(r.t);
  }
  return rep;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << content;
    if (!out.flush()) throw Error("write to '" + tmp + "' failed");
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// running

namespace {

struct ResolvedTask {
  MixedDomain domain;
  std::optional<SyntheticLinearObjective> synthetic;
  std::optional<TableSurrogateObjective> table;
  std::optional<double> oracle;

  [[nodiscard]] ObjectiveFn noiseless() const {
    if (synthetic) return [this](BitsView d, const Eigen::VectorXd& c) { return synthetic->noiseless(d, c); };
    return [this](BitsView d, const Eigen::VectorXd& c) { return table->evaluate(d, c); };
  }

  // Noise stream depends only on the run seed, so all methods see the same
  // stream for a given seed.
  [[nodiscard]] ObjectiveFn observed(std::uint64_t seed) const {
    if (!synthetic) return noiseless();
    auto rng = std::make_shared<Rng>(seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    return [this, rng](BitsView d, const Eigen::VectorXd& c) { return synthetic->evaluate(d, c, *rng); };
  }
};

ResolvedTask resolve_task(const TaskSpec& t) {
  ResolvedTask r;
  if (t.name == "synthetic_c1" || t.name == "synthetic_c2_card2") {
    r.synthetic = t.name == "synthetic_c1" ? make_synthetic_unconstrained(t.task_seed)
                                           : make_synthetic_constrained(t.task_seed, 2);
    r.synthetic = SyntheticLinearObjective(r.synthetic->domain(), r.synthetic->features(), r.synthetic->weights(),
                                           t.noise_beta);
    r.domain = r.synthetic->domain();
    r.oracle = r.synthetic->oracle().value;
  } else if (t.name == "xgboost_like_table") {
    r.domain = make_xgboost_like_domain();
    std::istringstream csv(generate_xgboost_like_csv(t.table_rows, t.task_seed));
    r.table = TableSurrogateObjective::load(csv, r.domain, "y");
  } else {
    r.domain = MixedDomain::from_json(t.domain);
    r.table = TableSurrogateObjective::load_file(t.csv_path, r.domain, t.metric_column);
  }
  return r;
}

std::string trace_file_name(const std::string& method, std::uint64_t seed) {
  return method + "_seed" + std::to_string(seed) + ".csv";
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, bool write_outputs) {
  if (cfg.methods.empty()) throw ConfigError("methods list is empty");
  const ResolvedTask task = resolve_task(cfg.task);
  const double penalty = cfg.penalty ? *cfg.penalty : default_penalty(task.noiseless(), task.domain, cfg.task.task_seed);

  if (write_outputs) fs::create_directories(cfg.output_dir);

  struct Cell {
    const MethodSpec* method;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const MethodSpec& m : cfg.methods) {
    for (std::uint64_t s : cfg.seeds) cells.push_back({&m, s});
  }
  std::vector<RunTrace> traces(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto flush = [&](const RunTrace& tr) {
    if (!write_outputs) return;
    std::ostringstream os;
    write_trace_csv(os, tr.records);
    write_file_atomic((fs::path(cfg.output_dir) / trace_file_name(tr.method, tr.seed)).string(), os.str());
  };

  auto run_cell = [&](std::size_t i) {
    const MethodSpec& m = *cells[i].method;
    RunTrace& tr = traces[i];
    tr.method = m.name;
    tr.seed = cells[i].seed;
    PenaltyWrapper wrapped(task.observed(tr.seed), &task.domain, penalty);
    const ObjectiveFn f = [&wrapped](BitsView d, const Eigen::VectorXd& c) { return wrapped(d, c); };
    const RecordSink sink = [&tr](const TraceRecord& r) { tr.records.push_back(r); };
    try {
      if (m.type == "random") {
        random_search(f, task.domain, cfg.T, tr.seed, m.constraint_aware, sink);
      } else if (m.type == "sa") {
        sa_search(f, task.domain, cfg.T, tr.seed, m.sa, m.constraint_aware, sink);
      } else {
        BoLoopConfig bo = m.bo;
        bo.T = cfg.T;
        bo.seed = tr.seed;
        if (task.synthetic) {
          run_bo(f, task.domain, task.synthetic->features(), bo, sink);
        } else {
          const FeatureExpansion fe(task.domain.d_disc(), task.domain.d_cont(), m.features);
          run_bo(f, task.domain, fe, bo, sink);
        }
      }
    } catch (...) {
      flush(tr);
      throw;
    }
    flush(tr);
  };

  auto worker = [&]() {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        run_cell(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    }
  };

  const int hw = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  const int n_workers = std::min<int>(cfg.workers > 0 ? cfg.workers : hw, static_cast<int>(cells.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentOutcome out;
  out.traces = std::move(traces);
  out.oracle = task.oracle;
  out.penalty = penalty;
  out.metrics = compute_metrics(out.traces, task.oracle, penalty);

  if (write_outputs) {
    std::ostringstream ms;
    write_metrics_csv(ms, out.metrics);
    write_file_atomic((fs::path(cfg.output_dir) / "metrics.csv").string(), ms.str());

    const nlohmann::json resolved = cfg.to_json();
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(resolved.dump())));
    nlohmann::json files = nlohmann::json::array();
    for (const RunTrace& tr : out.traces) files.push_back(trace_file_name(tr.method, tr.seed));
    nlohmann::json manifest{{"config", resolved},
                            {"config_hash", hash},
                            {"library_version", kLibraryVersion},
                            {"penalty", penalty},
                            {"traces", files}};
    manifest["oracle"] = task.oracle ? nlohmann::json(*task.oracle) : nlohmann::json(nullptr);
    write_file_atomic((fs::path(cfg.output_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  }
  return out;
}

}  // namespace mivabo
