#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracac/asymptotics.hpp"
#include "fracac/inverse.hpp"

namespace fracac::cli {

using json = nlohmann::json;

struct ContextBlock {
  int n = 1;
  double s = 0.25;
  double h = 0.01;
  double R = 8.0;
  Shape omega = Interval{-1.0, 1.0};
};

struct SourceBlock {
  std::string kind = "none";  // none | bump
  Point center{0.0, 0.0};
  double width = 0.2;
  double amplitude = 1.0;
  bool support_check = true;
};

struct ExteriorBlock {
  std::string kind = "mollified_sign";  // sign | mollified_sign | wells_map | constant
  double mollification_width = 0.05;
  double angle = 0.0;
  std::vector<double> values;  // wells_map: left/right in 1D, equal angular sectors in 2D
  double value = 1.0;          // constant
};

struct SweepBlock {
  std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05};
  Shape probe_region = Interval{-0.75, 0.75};
  std::optional<Shape> K;  // level-set window, defaults to the probe region
  std::vector<double> deltas{0.0};
  std::vector<double> r_list{0.2};
  bool warm_start = true;
};

struct InverseBlock {
  Shape V = Interval{0.5, 0.7};
  Variant variant = Variant::i;
  std::optional<int> degree;  // default 2m - 1
  std::vector<double> well_prior;
  double noise = 0.0;
  std::optional<Shape> probe;  // f recovery region, defaults to the sweep probe
};

struct GeometryBlock {
  Shape set = Interval{-0.5, 0.5};  // E for curvature / perimeter
  std::vector<Shape> probes;
};

struct OutputBlock {
  std::string dir = "run";
  bool plots = true;
  int precision = 12;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  ContextBlock context;
  json potential = json{{"kind", "quartic"}};
  SourceBlock source;
  ExteriorBlock exterior;
  SolveConfig solve;
  std::optional<SweepBlock> sweep;
  std::optional<InverseBlock> inverse;
  std::optional<GeometryBlock> geometry;
  OutputBlock output;
  json raw;
};

// Parses and type-checks; ConfigError names the offending field as a dotted path.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::string& path);

// Objects built from a config.
struct Experiment {
  ExperimentConfig cfg;
  DomainPtr dom;
  Potential pot;
  GridFunction g;
  GridFunction f;
};

Experiment build(const ExperimentConfig& cfg);

// Cross-field checks of everything reachable from the config: grid, potential
// conditions, source support, sweep plan, V against Ω and supp f.
void validate(const Experiment& ex);

SweepPlan make_plan(const Experiment& ex);

// Independent stream seeds derived from the top-level seed.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& purpose);

Shape parse_shape(const json& j, const std::string& field);
json shape_to_json(const Shape& s);

}  // namespace fracac::cli
