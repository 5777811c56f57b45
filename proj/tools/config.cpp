#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace glp::cli {
namespace {

using nlohmann::json;

class Object {
 public:
  Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError("missing required field " + where(key));
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    return convert<T>(at(key), where(key));
  }

  template <class T>
  void maybe(const std::string& key, T& target) {
    if (has(key)) target = get<T>(key);
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + where(it.key()));
  }

  template <class T>
  static T convert(const json& value, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!value.is_boolean()) throw ConfigError(path + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!value.is_number_integer()) throw ConfigError(path + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (value.is_number_integer() && !value.is_number_unsigned() && value.get<long long>() < 0)
          throw ConfigError(path + ": expected a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!value.is_number()) throw ConfigError(path + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!value.is_string()) throw ConfigError(path + ": expected a string");
    }
    try {
      return value.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path + ": wrong type");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> number_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(Object::convert<double>(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::pair<double, double> pair_of(const json& j, const std::string& path) {
  const auto v = number_list(j, path);
  if (v.size() != 2) throw ConfigError(path + ": expected [lower, upper]");
  return {v[0], v[1]};
}

// {"name": value, ...} over every model parameter.
ParameterVector parameter_values(const json& j, const std::string& path, const ParameterSpace& space,
                                 double* p_m = nullptr) {
  Object o(j, path);
  ParameterVector out;
  for (const auto& name : space.names()) out.push_back(o.get<double>(name));
  if (p_m) o.maybe("p_m", *p_m);
  o.finish();
  return out;
}

ModelKind parse_model(const std::string& name, const std::string& path) {
  if (name == "cmp") return ModelKind::cmp;
  if (name == "randomwalk") return ModelKind::random_walk;
  throw ConfigError(path + ": model must be \"cmp\" or \"randomwalk\"");
}

}  // namespace

std::string model_name(ModelKind kind) { return kind == ModelKind::cmp ? "cmp" : "randomwalk"; }

json named(const ParameterSpace& space, const ParameterVector& values) {
  json j = json::object();
  for (std::size_t i = 0; i < space.dim(); ++i) j[space.names()[i]] = values.at(i);
  return j;
}

ExperimentConfig parse_config(const json& doc, std::string* output_dir) {
  Object root(doc, "");
  ExperimentConfig c = ExperimentConfig::defaults(parse_model(root.get<std::string>("model"), "model"));
  const bool walk = c.model == ModelKind::random_walk;
  c.seed = root.get<std::uint64_t>("seed");
  if (root.has("output_dir")) {
    const auto dir = root.get<std::string>("output_dir");
    if (output_dir) *output_dir = dir;
  }

  if (root.has("parameter_bounds")) {
    Object b(root.at("parameter_bounds"), "parameter_bounds");
    std::vector<double> lower = c.space.lower(), upper = c.space.upper();
    for (std::size_t i = 0; i < c.space.dim(); ++i) {
      const auto& name = c.space.names()[i];
      if (!b.has(name)) continue;
      std::tie(lower[i], upper[i]) = pair_of(b.at(name), b.where(name));
    }
    b.finish();
    try {
      c.space = ParameterSpace(c.space.names(), lower, upper);
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("parameter_bounds: ") + e.what());
    }
  }

  c.true_params = parameter_values(root.at("true_params"), "true_params", c.space, walk ? &c.walk.p_m : nullptr);

  if (root.has("sample")) {
    Object s(root.at("sample"), "sample");
    if (walk) {
      s.maybe("m", c.walk.m);
      s.maybe("lattice_sites", c.walk.lattice.sites);
      s.maybe("moment_order", c.walk.order);
      s.maybe("variance_resamples", c.walk.variance_resamples);
      s.maybe("max_steps", c.walk.max_steps);
      if (s.has("positions")) {
        c.walk.positions.clear();
        const json& p = s.at("positions");
        if (!p.is_array()) throw ConfigError("sample.positions: expected an array");
        for (std::size_t i = 0; i < p.size(); ++i)
          c.walk.positions.push_back(Object::convert<int>(p[i], "sample.positions[" + std::to_string(i) + "]"));
      }
    } else {
      s.maybe("n", c.n);
    }
    s.finish();
  }

  if (root.has("profiles")) {
    const json& list = root.at("profiles");
    if (!list.is_array()) throw ConfigError("profiles: expected an array");
    c.profiles.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "profiles[" + std::to_string(i) + "]";
      Object p(list[i], path);
      ProfileSpec spec{p.get<std::string>("interest"), 100, std::nullopt};
      p.maybe("M", spec.M);
      if (p.has("range")) spec.range = pair_of(p.at("range"), p.where("range"));
      p.finish();
      const auto& names = c.space.names();
      if (std::find(names.begin(), names.end(), spec.interest) == names.end())
        throw ConfigError(path + ".interest: unknown parameter " + spec.interest);
      c.profiles.push_back(std::move(spec));
    }
  }

  if (root.has("calibration")) {
    Object k(root.at("calibration"), "calibration");
    k.maybe("K", c.calibration.K);
    k.maybe("alpha", c.calibration.alpha);
    k.maybe("delta_step", c.calibration.delta_step);
    k.maybe("delta_grid_size", c.calibration.delta_grid_size);
    k.maybe("delta_grid_cap", c.calibration.delta_grid_cap);
    k.maybe("max_excluded_fraction", c.calibration.max_excluded_fraction);
    k.finish();
  }

  if (root.has("coverage")) {
    Object v(root.at("coverage"), "coverage");
    v.maybe("B", c.coverage.B);
    if (v.has("alphas")) c.coverage.alphas = number_list(v.at("alphas"), "coverage.alphas");
    v.maybe("per_alpha", c.coverage.per_alpha);
    if (v.has("theta_true")) {
      const json& list = v.at("theta_true");
      if (!list.is_array()) throw ConfigError("coverage.theta_true: expected an array");
      for (std::size_t i = 0; i < list.size(); ++i)
        c.coverage.theta_true.push_back(
            parameter_values(list[i], "coverage.theta_true[" + std::to_string(i) + "]", c.space));
    }
    if (v.has("delta_star")) {
      Object d(v.at("delta_star"), "coverage.delta_star");
      for (const auto& p : c.profiles) c.coverage.delta_star.push_back(d.get<double>(p.interest));
      d.finish();
    }
    v.finish();
  }

  if (root.has("optimizer")) {
    Object o(root.at("optimizer"), "optimizer");
    o.maybe("max_evals", c.optimizer.max_evals);
    o.maybe("f_tol", c.optimizer.f_tol);
    o.maybe("x_tol", c.optimizer.x_tol);
    o.maybe("restarts", c.optimizer.restarts);
    o.maybe("initial_simplex_scale", c.optimizer.initial_simplex_scale);
    o.maybe("restart_jitter", c.optimizer.restart_jitter);
    o.maybe("jitter_seed", c.optimizer.jitter_seed);
    o.finish();
  }
  root.finish();

  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, std::string* output_dir) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(doc, output_dir);
}

json to_json(const ExperimentConfig& c, const std::string& output_dir) {
  json j;
  j["model"] = model_name(c.model);
  j["seed"] = c.seed;
  j["output_dir"] = output_dir;
  j["true_params"] = named(c.space, c.true_params);
  json bounds = json::object();
  for (std::size_t i = 0; i < c.space.dim(); ++i)
    bounds[c.space.names()[i]] = {c.space.lower()[i], c.space.upper()[i]};
  j["parameter_bounds"] = bounds;
  if (c.model == ModelKind::random_walk) {
    j["true_params"]["p_m"] = c.walk.p_m;
    j["sample"] = {{"m", c.walk.m},
                   {"lattice_sites", c.walk.lattice.sites},
                   {"positions", c.walk.release_sites()},
                   {"moment_order", c.walk.order},
                   {"variance_resamples", c.walk.variance_resamples},
                   {"max_steps", c.walk.max_steps}};
  } else {
    j["sample"] = {{"n", c.n}};
  }
  json profiles = json::array();
  for (const auto& p : c.profiles) {
    const std::size_t i = c.space.index_of(p.interest);
    const auto range = p.range.value_or(std::pair{c.space.lower()[i], c.space.upper()[i]});
    profiles.push_back({{"interest", p.interest}, {"M", p.M}, {"range", {range.first, range.second}}});
  }
  j["profiles"] = profiles;
  j["calibration"] = {{"K", c.calibration.K},
                      {"alpha", c.calibration.alpha},
                      {"delta_step", c.calibration.delta_step},
                      {"delta_grid_size", c.calibration.delta_grid_size},
                      {"delta_grid_cap", c.calibration.delta_grid_cap},
                      {"max_excluded_fraction", c.calibration.max_excluded_fraction}};
  json cov = {{"B", c.coverage.B}, {"alphas", c.coverage.alphas}, {"per_alpha", c.coverage.per_alpha}};
  json thetas = json::array();
  for (const auto& t : c.coverage.theta_true) thetas.push_back(named(c.space, t));
  cov["theta_true"] = thetas;
  if (!c.coverage.delta_star.empty()) {
    json d = json::object();
    for (std::size_t i = 0; i < c.profiles.size(); ++i) d[c.profiles[i].interest] = c.coverage.delta_star[i];
    cov["delta_star"] = d;
  }
  j["coverage"] = cov;
  j["optimizer"] = {{"max_evals", c.optimizer.max_evals},
                    {"f_tol", c.optimizer.f_tol},
                    {"x_tol", c.optimizer.x_tol},
                    {"restarts", c.optimizer.restarts},
                    {"initial_simplex_scale", c.optimizer.initial_simplex_scale},
                    {"restart_jitter", c.optimizer.restart_jitter},
                    {"jitter_seed", c.optimizer.jitter_seed}};
  return j;
}

}  // namespace glp::cli
