#include "commands.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

#include "config.hpp"
#include "glp/errors.hpp"
#include "glp/io.hpp"

namespace glp::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

std::string config_text(const RunContext& ctx) { return to_json(ctx.config, ctx.out.string()).dump(2) + "\n"; }

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// Runs `body`, re-raising malformed-file errors as IO errors.
template <class F>
auto reading(F&& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    throw IoError(e.what());
  } catch (const std::out_of_range& e) {
    throw IoError(e.what());
  } catch (const json::exception& e) {
    throw IoError(e.what());
  }
}

// Every command leaves a config copy and adds its own entry to provenance.json.
class Stage {
 public:
  Stage(const RunContext& ctx, std::string command) : ctx_(ctx), command_(std::move(command)), started_(utc_now()) {
    std::error_code ec;
    fs::create_directories(ctx_.out, ec);
    if (ec) throw IoError("cannot create output directory " + ctx_.out.string() + ": " + ec.message());
    io::write_text(ctx_.out / "config.json", config_text(ctx_));
  }

  void finish(const json& extra = json::object()) const {
    const fs::path path = ctx_.out / "provenance.json";
    json prov = json::object();
    if (fs::exists(path)) {
      try {
        prov = json::parse(io::read_text(path));
      } catch (const json::exception&) {
        prov = json::object();
      }
      if (!prov.is_object()) prov = json::object();
    }
    const std::string hash = sha256_hex(config_text(ctx_));
    if (prov.value("config_sha256", hash) != hash) prov = json::object();
    prov["tool"] = "glp";
    prov["config_sha256"] = hash;
    prov["seed"] = ctx_.config.seed;
    prov["model"] = model_name(ctx_.config.model);
    prov["true_params"] = named(ctx_.config.space, ctx_.config.true_params);
    json entry = {{"started_at", started_}, {"finished_at", utc_now()}, {"threads", ctx_.parallelism.threads}};
    entry.update(extra);
    prov["stages"][command_] = entry;
    write_json(path, prov);
  }

 private:
  const RunContext& ctx_;
  std::string command_;
  std::string started_;
};

fs::path data_path(const RunContext& ctx, const Experiment& ex) {
  return ctx.data.value_or(ctx.out / ex.data_file_name());
}

std::string interest_name(const ExperimentConfig& c, std::size_t profile) { return c.profiles.at(profile).interest; }

json set_json(const ConfidenceSet& set) {
  return {{"lower", set.lower},
          {"upper", set.upper},
          {"hit_lower_bound", set.hit_lower_bound},
          {"hit_upper_bound", set.hit_upper_bound}};
}

ProfileStage read_profile_stage(const Experiment& ex, const fs::path& dir) {
  const auto& space = ex.config().space;
  return reading([&] {
    const json m = read_json(dir / "mgle.json");
    ProfileStage stage;
    stage.mgle.argmin = m.at("argmin").get<ParameterVector>();
    stage.mgle.value = m.at("loss").get<double>();
    stage.mgle.converged = m.at("converged").get<bool>();
    stage.mgle.evals = m.at("evals").get<int>();
    if (stage.mgle.argmin.size() != space.dim() || !space.contains(stage.mgle.argmin))
      throw InvalidInput("mgle.json: estimate does not fit the configured parameter box");
    const auto grids = ex.grids();
    for (std::size_t g = 0; g < grids.size(); ++g) {
      const fs::path file = dir / ("profile_" + interest_name(ex.config(), g) + ".csv");
      ProfileCurve curve = io::read_profile_csv(file, grids[g].partition, stage.mgle.argmin, stage.mgle.value);
      if (curve.grid.values() != grids[g].values())
        throw InvalidInput(file.string() + ": grid differs from the configured profile");
      stage.curves.push_back(std::move(curve));
    }
    return stage;
  });
}

void write_bootstrap_csv(const fs::path& path, const CalibrationResult& r, const ParameterSpace& space) {
  io::CsvTable t;
  t.header = {"replicate"};
  for (const auto& n : space.names()) t.header.push_back("theta_" + n);
  t.header.insert(t.header.end(), {"mgle_loss", "profile_at_phi_hat", "excluded"});
  for (std::size_t k = 0; k < r.bootstrap_mgles.size(); ++k) {
    std::vector<std::string> row{std::to_string(k)};
    for (double v : r.bootstrap_mgles[k]) row.push_back(io::format_double(v));
    row.push_back(io::format_double(r.bootstrap_mgle_losses[k]));
    row.push_back(io::format_double(r.bootstrap_profile_at_phi_hat[k]));
    row.push_back(r.excluded[k] ? "1" : "0");
    t.rows.push_back(std::move(row));
  }
  io::write_csv(path, t);
}

// The parts of a calibration that coverage needs: delta* and the retained replicates.
CalibrationResult read_calibration(const Experiment& ex, const fs::path& dir, std::size_t g) {
  const auto& c = ex.config();
  const std::string name = interest_name(c, g);
  return reading([&] {
    const json j = read_json(dir / ("calibration_" + name + ".json"));
    const auto grids = ex.grids();
    CalibrationResult r{grids[g].partition, j.at("mgle").get<ParameterVector>(), j.at("mgle_loss").get<double>()};
    r.delta_star = j.at("delta_star").get<double>();
    r.tau_alpha = j.at("tau_alpha").get<double>();
    if (!c.coverage.per_alpha) return r;
    const io::CsvTable t = io::read_csv(dir / ("bootstrap_" + name + ".csv"));
    const auto lc = t.column("mgle_loss"), pc = t.column("profile_at_phi_hat"), xc = t.column("excluded");
    for (const auto& row : t.rows) {
      r.bootstrap_mgles.emplace_back();
      r.bootstrap_mgle_losses.push_back(io::parse_double(row[lc]));
      r.bootstrap_profile_at_phi_hat.push_back(io::parse_double(row[pc]));
      r.excluded.push_back(row[xc] == "1");
    }
    return r;
  });
}

}  // namespace

int cmd_simulate(const RunContext& ctx) {
  const Stage stage(ctx, "simulate");
  const Experiment ex(ctx.config);
  ObservedData data = [&] {
    try {
      return ex.simulate_data(ctx.parallelism);
    } catch (const TruncationError& e) {
      throw InvalidInput(e.what());
    }
  }();
  ex.save_data(ctx.out / ex.data_file_name(), data);
  stage.finish({{"data", ex.data_file_name()}});
  return ok;
}

int cmd_profile(const RunContext& ctx) {
  const Stage stage(ctx, "profile");
  const Experiment ex(ctx.config);
  const fs::path source = data_path(ctx, ex);
  const ObservedData data = reading([&] { return ex.load_data(source); });
  const ProfileStage result = ex.profile(ex.observed_loss(data), ctx.parallelism);
  const auto& space = ctx.config.space;

  json m = {{"parameters", named(space, result.mgle.argmin)},
            {"argmin", result.mgle.argmin},
            {"loss", result.mgle.value},
            {"converged", result.mgle.converged},
            {"evals", result.mgle.evals}};
  if (ctx.config.model == ModelKind::random_walk) {
    const auto& model = static_cast<const rw::RandomWalkModel&>(ex.model());
    const auto table = rw::solve_moment_bvp(ctx.config.walk.order, model.params(result.mgle.argmin),
                                            ctx.config.walk.lattice);
    m["high_peclet"] = table.high_peclet;
    if (table.high_peclet)
      std::cerr << "warning: cell Peclet number >= 1 at the MGLE; the continuum moments are unreliable\n";
    rw::write_moment_table(ctx.out / "moments_mgle.csv", table);
  }
  write_json(ctx.out / "mgle.json", m);
  for (std::size_t g = 0; g < result.curves.size(); ++g)
    io::write_profile_csv(ctx.out / ("profile_" + interest_name(ctx.config, g) + ".csv"), result.curves[g]);
  stage.finish({{"data", source.string()}});

  if (!result.mgle.converged) {
    std::cerr << "error: the MGLE did not converge after " << result.mgle.evals << " evaluations (loss "
              << result.mgle.value << ")\n";
    return optimizer_failure;
  }
  return ok;
}

int cmd_calibrate(const RunContext& ctx) {
  const Stage stage(ctx, "calibrate");
  const Experiment ex(ctx.config);
  const fs::path source = ctx.profiles.value_or(ctx.out);
  const ProfileStage profiles = read_profile_stage(ex, source);
  const CalibrationStage cal = ex.calibrate(profiles, ctx.parallelism);
  const auto& space = ctx.config.space;

  for (std::size_t g = 0; g < cal.results.size(); ++g) {
    const CalibrationResult& r = cal.results[g];
    const std::string name = interest_name(ctx.config, g);
    const auto [qlo, qhi] = cal.quantile_bootstrap[g];
    write_json(ctx.out / ("calibration_" + name + ".json"),
               {{"interest", name},
                {"alpha", ctx.config.calibration.alpha},
                {"tau_alpha", r.tau_alpha},
                {"delta_star", r.delta_star},
                {"achieved_coverage", r.achieved_coverage},
                {"K", ctx.config.calibration.K},
                {"K_effective", r.K_effective},
                {"mgle", r.mgle},
                {"mgle_loss", r.mgle_loss},
                {"interval", set_json(cal.sets[g])},
                {"quantile_bootstrap", {{"lower", qlo}, {"upper", qhi}}}});
    io::write_coverage_curve_csv(ctx.out / ("coverage_curve_" + name + ".csv"), r);
    const auto phi = profiles.curves[g].grid.values();
    std::vector<double> members;
    for (auto j : cal.sets[g].grid_members) members.push_back(phi[j]);
    json set = set_json(cal.sets[g]);
    set["interest"] = name;
    set["delta_star"] = r.delta_star;
    set["tau_alpha"] = r.tau_alpha;
    set["grid_members"] = cal.sets[g].grid_members;
    set["member_values"] = members;
    write_json(ctx.out / ("confidence_set_" + name + ".json"), set);
    write_bootstrap_csv(ctx.out / ("bootstrap_" + name + ".csv"), r, space);
  }
  stage.finish({{"profiles", source.string()}});
  return ok;
}

int cmd_coverage(const RunContext& ctx) {
  const Stage stage(ctx, "coverage");
  const Experiment ex(ctx.config);
  std::optional<CalibrationStage> cal;
  json extra = json::object();
  if (ctx.config.coverage.delta_star.empty()) {
    const fs::path source = ctx.calibration.value_or(ctx.out);
    cal.emplace();
    for (std::size_t g = 0; g < ctx.config.profiles.size(); ++g)
      cal->results.push_back(read_calibration(ex, source, g));
    extra["calibration"] = source.string();
  }
  const auto reports = ex.coverage(cal ? &*cal : nullptr, ctx.parallelism);
  io::write_coverage_report_csv(ctx.out / "coverage.csv", reports, ctx.config.space.names());
  stage.finish(extra);
  return ok;
}

int cmd_run(const RunContext& ctx) {
  RunContext local = ctx;
  local.data.reset();
  local.profiles.reset();
  local.calibration.reset();
  for (auto step : {cmd_simulate, cmd_profile, cmd_calibrate}) {
    const int code = step(local);
    if (code != ok) return code;
  }
  return ctx.config.coverage.B > 0 ? cmd_coverage(local) : ok;
}

}  // namespace glp::cli
