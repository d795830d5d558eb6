#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fracac");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = fracac::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fracac_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::string write_config(const fs::path& dir, const json& j, const std::string& name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p.string();
}

json base_1d() {
  return json::parse(R"({
    "seed": 3,
    "context": {"n": 1, "s": 0.25, "h": 0.01, "R": 8.0, "omega": {"type": "interval", "a": -1.0, "b": 1.0}},
    "potential": {"kind": "quartic"},
    "source": {"kind": "bump", "center": [0.0], "width": 0.2, "amplitude": 1.0},
    "exterior": {"kind": "sign"},
    "solve": {"grad_tol": 1e-10},
    "sweep": {"eps_list": [0.4, 0.2, 0.1, 0.05],
              "probe_region": {"type": "interval", "a": -0.75, "b": 0.75},
              "deltas": [-0.5, 0.0, 0.5], "r_list": [0.2]},
    "inverse": {"V": {"type": "interval", "a": 0.5, "b": 0.7}, "degree": 3,
                "probe": {"type": "interval", "a": -0.3, "b": 0.3}},
    "output": {"precision": 12}
  })");
}

json forward_1d() {
  return json::parse(R"({
    "context": {"n": 1, "s": 0.25, "h": 0.01, "R": 8.0, "omega": {"type": "interval", "a": -1.0, "b": 1.0}},
    "potential": {"kind": "quartic"},
    "exterior": {"kind": "mollified_sign", "mollification_width": 0.05},
    "solve": {"eps": 0.1, "grad_tol": 1e-9}
  })");
}

}  // namespace

TEST_CASE("validate rejects every invariant it can reach") {
  const fs::path dir = scratch("validate");
  struct Row {
    const char* name;
    const char* pointer;  // JSON pointer to replace, or "" to keep
    json value;
    const char* field;    // must appear in the diagnostic
  };
  const std::vector<Row> rows{
      {"s out of range", "/context/s", 0.6, "context"},
      {"s zero", "/context/s", 0.0, "context"},
      {"negative h", "/context/h", -0.01, "context"},
      {"h not dividing the box", "/context/h", 0.03, "context"},
      {"box too small", "/context/R", 2.0, "context"},
      {"dimension mismatch", "/context/n", 2, "context"},
      {"interval a >= b", "/context/omega/b", -2.0, "context.omega"},
      {"unknown shape", "/context/omega/type", "ellipse", "context.omega.type"},
      {"unknown potential", "/potential/kind", "cosine", "potential.kind"},
      {"unordered wells", "/potential", json{{"kind", "multiwell"}, {"wells", {1.0, -1.0}}}, "potential.wells"},
      {"single well", "/potential", json{{"kind", "polynomial"}, {"coeffs", {0.0, 0.0, 1.0}}}, "potential"},
      {"negative W", "/potential", json{{"kind", "polynomial"}, {"coeffs", {0.0, 0.0, -1.0, 0.0, 0.25}}}, "potential"},
      {"bump leaves omega", "/source/center", json{0.9}, "source"},
      {"bump width", "/source/width", 0.0, "source.width"},
      {"exterior kind", "/exterior/kind", "radial", "exterior.kind"},
      {"wells_map off the wells", "/exterior", json{{"kind", "wells_map"}, {"values", {-1.0, 0.5}}}, "exterior.values"},
      {"mollification width", "/exterior", json{{"kind", "mollified_sign"}, {"mollification_width", -1.0}},
       "exterior.mollification_width"},
      {"eps nonpositive", "/solve/eps", -0.1, "solve.eps"},
      {"grad_tol nonpositive", "/solve/grad_tol", 0.0, "solve.grad_tol"},
      {"max_iter", "/solve/max_iter", -1, "solve.max_iter"},
      {"init noise", "/solve/init_noise", -1.0, "solve.init_noise"},
      {"step rule", "/solve/step_rule", "newton", "solve.step_rule"},
      {"eps list increasing", "/sweep/eps_list", json{0.1, 0.2}, "sweep.eps_list"},
      {"eps list empty", "/sweep/eps_list", json::array(), "sweep.eps_list"},
      {"probe outside omega", "/sweep/probe_region", json{{"type", "interval"}, {"a", -1.5}, {"b", 0.5}},
       "sweep.probe_region"},
      {"delta outside the wells", "/sweep/deltas", json{1.5}, "sweep.deltas"},
      {"negative radius", "/sweep/r_list", json{-0.2}, "sweep.r_list"},
      {"V overlaps supp f", "/inverse/V", json{{"type", "interval"}, {"a", -0.1}, {"b", 0.3}}, "source"},
      {"V leaves omega", "/inverse/V", json{{"type", "interval"}, {"a", 0.5}, {"b", 1.5}}, "inverse.V"},
      {"V empty", "/inverse/V", json{{"type", "interval"}, {"a", 0.501}, {"b", 0.505}}, "inverse.V"},
      {"V dimension", "/inverse/V", json{{"type", "disc"}, {"r", 0.1}}, "inverse.V"},
      {"degree", "/inverse/degree", 0, "inverse.degree"},
      {"variant", "/inverse/variant", "iii", "inverse.variant"},
      {"noise", "/inverse/noise", -1e-4, "inverse.noise"},
      {"prior too long", "/inverse/well_prior", json{-1.0, 0.0, 1.0, 2.0}, "inverse.well_prior"},
      {"precision", "/output/precision", 0, "output.precision"},
      {"seed negative", "/seed", -1, "seed"},
      {"wrong type", "/context/h", "small", "context.h"},
      {"unknown key", "/solve/tolerance", 1e-6, "solve.tolerance"},
      {"geometry probe outside omega", "/geometry",
       json{{"set", {{"type", "interval"}, {"a", -0.5}, {"b", 0.5}}},
            {"probes", {{{"type", "interval"}, {"a", -2.0}, {"b", 0.0}}}}},
       "geometry.probes[0]"},
  };
  {
    const auto sharp = run_cli({"validate", "--config", write_config(dir, base_1d())});
    CHECK(sharp.code == 0);
    CHECK(sharp.err.find("exterior.kind sign") != std::string::npos);
    json j = base_1d();
    j.erase("exterior");
    const auto smooth = run_cli({"validate", "--config", write_config(dir, j)});
    CHECK(smooth.code == 0);
    CHECK(smooth.err.empty());
  }
  for (const auto& row : rows) {
    const std::string name = row.name;
    CAPTURE(name);
    json j = base_1d();
    j[json::json_pointer(row.pointer)] = row.value;
    const auto r = run_cli({"validate", "--config", write_config(dir, j)});
    CHECK(r.code == 2);
    CAPTURE(r.err);
    CHECK(r.err.find(row.field) != std::string::npos);
  }
  SUBCASE("overlap names both fields") {
    json j = base_1d();
    j["inverse"]["V"] = {{"type", "interval"}, {"a", -0.1}, {"b", 0.3}};
    const auto r = run_cli({"validate", "--config", write_config(dir, j)});
    CHECK(r.code == 2);
    CHECK(r.err.find("inverse.V") != std::string::npos);
    CHECK(r.err.find("source") != std::string::npos);
  }
  SUBCASE("malformed JSON reports the position") {
    const fs::path p = dir / "broken.json";
    std::ofstream(p) << "{\n  \"seed\": 1,\n  \"context\": {\n}}}";
    const auto r = run_cli({"validate", "--config", p.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("line") != std::string::npos);
  }
  SUBCASE("missing file and unknown flag") {
    CHECK(run_cli({"validate", "--config", (dir / "nope.json").string()}).code == 2);
    CHECK(run_cli({"validate", "--config", write_config(dir, base_1d()), "--frobnicate"}).code == 2);
    CHECK(run_cli({"launch"}).code == 2);
    CHECK(run_cli({}).code == 2);
  }
}

TEST_CASE("forward writes the field and the report") {
  const fs::path dir = scratch("forward");
  const auto cfg = write_config(dir, forward_1d());
  const auto r = run_cli({"forward", "--config", cfg, "--out", (dir / "run").string(), "--dump-stencil", "800"});
  REQUIRE(r.code == 0);
  std::ifstream u(dir / "run" / "u.csv");
  std::string line;
  std::getline(u, line);
  CHECK(line == "x,value");
  int rows = 0;
  while (std::getline(u, line)) ++rows;
  CHECK(rows == 1601);
  const json rep = read_json(dir / "run" / "report.json");
  std::vector<std::string> keys;
  for (auto it = rep.begin(); it != rep.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"eps", "final_energy", "grad_norm", "iterations", "max_principle_ok", "s",
                                         "stationarity_residual"});
  CHECK(rep["max_principle_ok"].get<bool>());
  CHECK(rep["stationarity_residual"].get<double>() < 1e-6);
  CHECK(fs::exists(dir / "run" / "stencil_800.csv"));

  SUBCASE("numerical failure leaves partial outputs") {
    json j = forward_1d();
    j["solve"]["max_iter"] = 2;
    const auto bad = run_cli({"forward", "--config", write_config(dir, j, "short.json"), "--out", (dir / "short").string()});
    CHECK(bad.code == 1);
    CHECK(fs::exists(dir / "short" / "u.csv"));
    const json fail = read_json(dir / "short" / "failure.json");
    CHECK(fail["command"] == "forward");
    CHECK(fail["iterations"] == 2);
  }
  SUBCASE("bad stencil node and unwritable output") {
    CHECK(run_cli({"forward", "--config", cfg, "--out", (dir / "x").string(), "--dump-stencil", "99999"}).code == 2);
    std::ofstream(dir / "file") << "x";
    CHECK(run_cli({"forward", "--config", cfg, "--out", (dir / "file" / "sub").string()}).code == 2);
  }
}

TEST_CASE("sweep and invert pipeline") {
  const fs::path dir = scratch("pipeline");
  const auto cfg = write_config(dir, base_1d());
  const fs::path run = dir / "run";
  REQUIRE(run_cli({"sweep", "--config", cfg, "--out", run.string()}).code == 0);
  for (const char* f : {"records.json", "conv.csv", "energy.csv", "limit_iv.csv", "levelsets.csv", "profiles.svg",
                        "energy_ratio.svg", "levelset_gaps.svg", "wprime_fit.svg", "u_3.csv", "config.json"})
    CHECK(fs::exists(run / f));
  for (const char* f : {"profiles.svg", "energy_ratio.svg", "levelset_gaps.svg", "wprime_fit.svg"})
    CHECK(fs::file_size(run / f) < 2u * 1024u * 1024u);
  const json rec = read_json(run / "records.json");
  CHECK(rec["steps"].size() == 4);
  CHECK(rec["plot_notes"].empty());

  const fs::path inv = dir / "inv";
  REQUIRE(run_cli({"invert", "--data", run.string(), "--variant", "i", "--wprime-degree", "3", "--out", inv.string()}).code == 0);
  const json w = read_json(inv / "wfit.json");
  const std::vector<double> want{0.0, -1.0, 0.0, 1.0};
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(w["coefficients"][k].get<double>() - want[k]) < 1e-2);
  CHECK(w["condition_number"].get<double>() > 1.0);
  const json v = read_json(inv / "verdict.json");
  CHECK(v["f_error_exact"].get<double>() < 0.05);
  CHECK(fs::exists(inv / "f_rec.csv"));
  CHECK(fs::exists(inv / "interface.csv"));

  SUBCASE("identical reruns are byte-identical") {
    const fs::path again = dir / "again";
    REQUIRE(run_cli({"sweep", "--config", cfg, "--out", again.string()}).code == 0);
    for (const char* f : {"profiles.svg", "energy_ratio.svg", "levelset_gaps.svg", "wprime_fit.svg", "records.json",
                          "conv.csv", "energy.csv", "limit_iv.csv", "levelsets.csv", "u_2.csv"})
      CHECK(slurp(run / f) == slurp(again / f));
  }
  SUBCASE("uniqueness against a second run") {
    REQUIRE(run_cli({"invert", "--data", run.string(), "--data2", run.string(), "--out", (dir / "u1").string()}).code == 0);
    const json u1 = read_json(dir / "u1" / "verdict.json")["uniqueness"];
    CHECK(u1["measurements_agree"].get<bool>());
    CHECK(u1["reconstructions_agree"].get<bool>());

    json j = base_1d();
    j["source"]["amplitude"] = 1.5;
    const fs::path run2 = dir / "run2";
    REQUIRE(run_cli({"sweep", "--config", write_config(dir, j, "amp.json"), "--out", run2.string()}).code == 0);
    REQUIRE(run_cli({"invert", "--data", run.string(), "--data2", run2.string(), "--out", (dir / "u2").string()}).code == 0);
    const json u2 = read_json(dir / "u2" / "verdict.json")["uniqueness"];
    CHECK_FALSE(u2["measurements_agree"].get<bool>());
    CHECK(u2.contains("distinguishing_k"));

    j = base_1d();
    j["context"]["h"] = 0.02;
    const fs::path run3 = dir / "run3";
    REQUIRE(run_cli({"sweep", "--config", write_config(dir, j, "coarse.json"), "--out", run3.string()}).code == 0);
    CHECK(run_cli({"invert", "--data", run.string(), "--data2", run3.string(), "--out", (dir / "u3").string()}).code == 2);
  }
  SUBCASE("noise follows the top-level seed") {
    auto noisy = [&](std::uint64_t seed, const std::string& tag) {
      json j = base_1d();
      j["seed"] = seed;
      j["inverse"]["noise"] = 1e-4;
      j["inverse"]["well_prior"] = {-1.0, 1.0};
      const fs::path r = dir / ("noisy" + tag);
      REQUIRE(run_cli({"sweep", "--config", write_config(dir, j, tag + ".json"), "--out", r.string()}).code == 0);
      REQUIRE(run_cli({"invert", "--data", r.string(), "--out", (r / "inv").string()}).code == 0);
      return slurp(r / "inv" / "wfit.json");
    };
    const auto a = noisy(5, "a"), b = noisy(5, "b"), c = noisy(6, "c");
    CHECK(a == b);
    CHECK(a != c);
    const json w5 = json::parse(a);
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(w5["coefficients"][k].get<double>() - want[k]) < 5e-2);
  }
  SUBCASE("variant ii uses the known potential") {
    REQUIRE(run_cli({"invert", "--data", run.string(), "--variant", "ii", "--out", (dir / "ii").string()}).code == 0);
    const json w2 = read_json(dir / "ii" / "wfit.json");
    CHECK(w2["known_W"].get<bool>());
    CHECK(w2["coefficients"] == json(want));
  }
  SUBCASE("missing data directory") {
    CHECK(run_cli({"invert", "--data", (dir / "none").string()}).code == 2);
  }
}

TEST_CASE("one-eps sweep and degenerate inversion") {
  const fs::path dir = scratch("degenerate");
  json j = base_1d();
  j["sweep"]["eps_list"] = {0.2};
  j["sweep"]["deltas"] = {0.0};
  const fs::path run = dir / "one";
  const auto r = run_cli({"sweep", "--config", write_config(dir, j), "--out", run.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(run / "profiles.svg"));
  CHECK_FALSE(fs::exists(run / "energy_ratio.svg"));
  CHECK_FALSE(fs::exists(run / "levelset_gaps.svg"));
  const json rec = read_json(run / "records.json");
  CHECK(rec["plot_notes"].size() == 2);
  CHECK(r.err.find("skipped") != std::string::npos);

  json c = base_1d();
  c["exterior"] = {{"kind", "constant"}, {"value", 1.0}};
  c["source"] = {{"kind", "none"}};
  const fs::path flat = dir / "flat";
  REQUIRE(run_cli({"sweep", "--config", write_config(dir, c, "flat.json"), "--out", flat.string()}).code == 0);
  const auto inv = run_cli({"invert", "--data", flat.string(), "--out", (flat / "inv").string()});
  CHECK(inv.code == 1);
  const json fail = read_json(flat / "inv" / "failure.json");
  CHECK(fail["command"] == "invert");
  CHECK(fail["t_min"].get<double>() == 1.0);
  CHECK(fail["t_max"].get<double>() == 1.0);
}

TEST_CASE("partition, curvature and perimeter commands") {
  const fs::path dir = scratch("geometry");
  json p = json::parse(R"({
    "context": {"n": 1, "s": 0.25, "h": 0.01, "R": 8.0, "omega": {"type": "interval", "a": -1.0, "b": 1.0}},
    "potential": {"kind": "multiwell", "wells": [-1.0, 0.0, 1.0]},
    "exterior": {"kind": "wells_map", "values": [-1.0, 1.0]},
    "solve": {"grad_tol": 1e-9},
    "sweep": {"eps_list": [0.4, 0.2, 0.1], "probe_region": {"type": "interval", "a": -0.75, "b": 0.75}, "deltas": [0.5]},
    "geometry": {"set": {"type": "interval", "a": 0.0, "b": 2.0}}
  })");
  const auto cfg = write_config(dir, p);
  REQUIRE(run_cli({"partition", "--config", cfg, "--out", (dir / "part").string()}).code == 0);
  const json rec = read_json(dir / "part" / "records.json");
  for (const auto& n : rec["interfaces"]) CHECK(n.get<int>() <= 2);
  CHECK(fs::exists(dir / "part" / "partition.csv"));
  CHECK(fs::exists(dir / "part" / "labels.csv"));

  // E = (0, 2): one boundary point at 0 inside Ω, half-line curvature is 0
  REQUIRE(run_cli({"curvature", "--config", cfg, "--out", (dir / "curv").string()}).code == 0);
  const json cj = read_json(dir / "curv" / "curvature.json");
  CHECK(cj["boundary_points"] == 1);

  REQUIRE(run_cli({"perimeter", "--config", cfg, "--out", (dir / "per").string()}).code == 0);
  const json pj = read_json(dir / "per" / "perimeter.json");
  CHECK(pj["regions"][0]["relative_gap"].get<double>() < 1e-6);

  json q = p;
  q["potential"] = {{"kind", "quartic"}};
  CHECK(run_cli({"partition", "--config", write_config(dir, q, "quartic.json"), "--out", (dir / "p2").string()}).code == 0);

  SUBCASE("curvature from a stored field") {
    REQUIRE(run_cli({"forward", "--config", write_config(dir, forward_1d(), "fw.json"), "--out", (dir / "fw").string()}).code == 0);
    REQUIRE(run_cli({"curvature", "--config", write_config(dir, forward_1d(), "fw.json"), "--field",
                     (dir / "fw" / "u.csv").string(), "--out", (dir / "fc").string()})
                .code == 0);
    CHECK(read_json(dir / "fc" / "curvature.json")["boundary_points"] == 1);
  }
}
