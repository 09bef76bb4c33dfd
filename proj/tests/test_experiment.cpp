#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mivabo/errors.hpp"
#include "mivabo/experiment.hpp"

using namespace mivabo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mivabo_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

int cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + MIVABO_CLI_PATH + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json small_config(const std::string& task, const std::string& out) {
  return nlohmann::json::parse(R"({
    "task": {"name": ")" + task + R"(", "seed": 0},
    "methods": [{"type": "mivabo", "bo": {"alt_restarts": 2, "cont_restarts": 2}}, {"type": "random"}],
    "seeds": [0, 1],
    "T": 8,
    "workers": 2,
    "output_dir": ")" + out + R"("
  })");
}

}  // namespace

TEST_CASE("config validation") {
  const fs::path dir = scratch("cfg");
  auto bad = [&](const std::string& text) {
    CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(text), dir.string()), ConfigError);
  };
  bad(R"({"task": {"name": "synthetic_c1"}, "methods": [], "seeds": [0]})");
  bad(R"({"task": {"name": "synthetic_c1"}, "methods": [{"type": "random"}], "seeds": [0, 0]})");
  bad(R"({"task": {"name": "synthetic_c1"}, "methods": [{"type": "gp"}], "seeds": [0]})");
  bad(R"({"task": {"name": "nope"}, "methods": [{"type": "random"}], "seeds": [0]})");
  bad(R"({"task": {"name": "synthetic_c1"}, "methods": [{"type": "random"}, {"type": "random"}], "seeds": [0]})");
  bad(R"({"task": {"name": "synthetic_c1"}, "methods": [{"type": "random"}], "seeds": [0], "T": 0})");
  bad(R"({"task": {"name": "table", "csv": "missing.csv", "domain": {}}, "methods": [{"type": "random"}], "seeds": [0]})");
  bad(R"({"task": {"name": "synthetic_c1"}, "methods": [{"type": "mivabo", "bo": {"delta": 2}}], "seeds": [0]})");
  bad(R"({"task": {"name": "synthetic_c1"}, "methods": [{"type": "mivabo", "bo": {"T": "x"}}], "seeds": [0]})");

  const auto c = ExperimentConfig::from_json(
      nlohmann::json::parse(R"({"task": {"name": "synthetic_c2_card2"}, "methods": [{"type": "mivabo"},
        {"name": "rs", "type": "random"}, {"type": "sa"}], "num_seeds": 3, "T": 20})"),
      dir.string());
  CHECK(c.seeds == std::vector<std::uint64_t>{0, 1, 2});
  CHECK(c.methods[1].name == "rs");
  CHECK(c.methods[1].constraint_aware);
  CHECK_FALSE(c.methods[2].constraint_aware);
  const auto again = ExperimentConfig::from_json(c.to_json(), dir.string());
  CHECK(again.to_json() == c.to_json());
  for (const auto& n : {"synthetic_c1", "synthetic_c2_card2", "xgboost_like_table"}) {
    CHECK(std::find(builtin_task_names().begin(), builtin_task_names().end(), n) != builtin_task_names().end());
  }
}

TEST_CASE("trace CSV round trip and replay") {
  std::vector<TraceRecord> trace;
  for (int t = 1; t <= 4; ++t) {
    TraceRecord r;
    r.seed = 7;
    r.t = t;
    r.x_disc = Bits{static_cast<std::uint8_t>(t % 2), 1, 0};
    r.x_cont = Eigen::Vector2d(0.1 * t, 1.0 / 3.0);
    r.y = 5.0 - t + (t == 3 ? 10.0 : 0.0);
    r.feasible = t != 2;
    r.wall_ms = 0.5;
    push_record(trace, r);
  }
  std::ostringstream os;
  write_trace_csv(os, trace);
  CHECK(os.str().rfind("seed,t,x_disc,x_cont,y,feasible,incumbent,violations,wall_ms,scaling\n", 0) == 0);
  std::istringstream is(os.str());
  const auto back = read_trace_csv(is);
  REQUIRE(back.size() == trace.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].x_disc == trace[i].x_disc);
    CHECK(back[i].x_cont == trace[i].x_cont);
    CHECK(back[i].y == trace[i].y);
    CHECK(back[i].incumbent == trace[i].incumbent);
    CHECK(back[i].violations == trace[i].violations);
  }
  std::istringstream ok(os.str());
  CHECK(replay_trace(ok).ok());

  std::string bad = os.str();
  const std::string cell = ",4,1,4,";  // y, feasible, incumbent of row 1
  const auto pos = bad.find(cell);
  REQUIRE(pos != std::string::npos);
  bad.replace(pos, cell.size(), ",4,1,2.5,");
  CHECK(bad.find(",4,1,2.5,") != std::string::npos);
  std::istringstream corrupted(bad);
  const ReplayReport rep = replay_trace(corrupted);
  CHECK_FALSE(rep.ok());

  std::istringstream empty("seed,t,x_disc,x_cont,y,feasible,incumbent,violations,wall_ms,scaling\n");
  CHECK(replay_trace(empty).ok());
  CHECK(replay_trace(empty).rows == 0);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("in-memory runs are deterministic") {
  const fs::path dir = scratch("det");
  const auto cfg = ExperimentConfig::from_json(small_config("synthetic_c1", (dir / "out").string()), dir.string());
  const ExperimentOutcome a = run_experiment(cfg, false);
  auto single = cfg;
  single.workers = 1;
  const ExperimentOutcome b = run_experiment(single, false);
  REQUIRE(a.traces.size() == 4);
  CHECK_FALSE(fs::exists(dir / "out"));
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    CHECK(a.traces[i].method == b.traces[i].method);
    REQUIRE(a.traces[i].records.size() == 8);
    for (std::size_t t = 0; t < 8; ++t) {
      const auto& ra = a.traces[i].records[t];
      const auto& rb = b.traces[i].records[t];
      CHECK(ra.x_disc == rb.x_disc);
      CHECK(ra.x_cont == rb.x_cont);
      CHECK(ra.y == rb.y);
    }
  }
  REQUIRE(a.oracle);
  for (const auto& m : a.metrics) CHECK(m.regret >= -0.3);
}

TEST_CASE("constrained task: MiVaBo never violates the cardinality constraint") {
  const fs::path dir = scratch("c2");
  auto j = small_config("synthetic_c2_card2", (dir / "out").string());
  j["methods"].push_back({{"type", "sa"}});
  const auto cfg = ExperimentConfig::from_json(j, dir.string());
  const ExperimentOutcome o = run_experiment(cfg, false);
  for (const auto& tr : o.traces) {
    if (tr.method != "mivabo" && tr.method != "random") continue;
    for (const auto& r : tr.records) CHECK(r.violations == 0);
  }
  CHECK(o.penalty > 0.0);
}

TEST_CASE("command line") {
  const fs::path dir = scratch("cli");
  const fs::path out = dir / "out";
  spit(dir / "good.json", small_config("synthetic_c1", "ignored").dump());
  spit(dir / "empty.json", R"({"task": {"name": "synthetic_c1"}, "methods": [], "seeds": [0]})");
  spit(dir / "broken.json", "{ not json");

  CHECK(cli("run " + (dir / "empty.json").string()) == 2);
  CHECK(cli("run " + (dir / "broken.json").string()) == 2);
  CHECK(cli("run " + (dir / "absent.json").string()) == 2);
  CHECK(cli("bogus") != 0);
  CHECK(cli("list-tasks") == 0);

  REQUIRE(cli("run " + (dir / "good.json").string(), "MIVABO_OUTPUT_DIR=" + out.string()) == 0);
  for (const auto& m : {"mivabo", "random"}) {
    for (int s = 0; s < 2; ++s) CHECK(fs::exists(out / (std::string(m) + "_seed" + std::to_string(s) + ".csv")));
  }
  CHECK_FALSE(fs::exists(dir / "ignored"));
  REQUIRE(fs::exists(out / "metrics.csv"));
  REQUIRE(fs::exists(out / "manifest.json"));
  const std::string metrics = slurp(out / "metrics.csv");
  CHECK(metrics.rfind("method,seed,iter,value,regret,normalized_error\n", 0) == 0);
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 1 + 4 * 8);

  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a(manifest["config"].dump())));
  CHECK(manifest["config_hash"] == hash);
  CHECK(manifest["library_version"] == kLibraryVersion);
  CHECK(manifest["config"]["output_dir"] == out.string());

  const fs::path trace = out / "mivabo_seed0.csv";
  CHECK(cli("replay " + trace.string()) == 0);
  std::string text = slurp(trace);
  const std::size_t line2 = text.find('\n', text.find('\n') + 1) + 1;  // second data row
  std::vector<std::string> cells;
  std::stringstream row(text.substr(line2, text.find('\n', line2) - line2));
  for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
  REQUIRE(cells.size() == 10);
  cells[6] = "-1000";
  std::string joined;
  for (std::size_t i = 0; i < cells.size(); ++i) joined += (i ? "," : "") + cells[i];
  text.replace(line2, text.find('\n', line2) - line2, joined);
  spit(dir / "corrupt.csv", text);
  CHECK(cli("replay " + (dir / "corrupt.csv").string()) == 1);
  spit(dir / "empty.csv", "seed,t,x_disc,x_cont,y,feasible,incumbent,violations,wall_ms,scaling\n");
  CHECK(cli("replay " + (dir / "empty.csv").string()) == 0);
  CHECK(cli("replay " + (dir / "nothing.csv").string()) == 1);

  // a CSV that exists but cannot be parsed fails at run time
  spit(dir / "table.csv", "a,y\nnot-a-number,1\n");
  spit(dir / "table.json", R"({"task": {"name": "table", "csv": "table.csv",
        "domain": {"variables": [{"name": "a", "kind": "continuous", "lo": 0, "hi": 1}]}},
        "methods": [{"type": "random"}], "seeds": [0], "T": 3})");
  CHECK(cli("run " + (dir / "table.json").string()) == 1);
}
