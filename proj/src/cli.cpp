#include "vsgrasp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <limits>
#include <numeric>
#include <thread>

#include <CLI11.hpp>

#include "vsgrasp/analysis.hpp"
#include "vsgrasp/error.hpp"
#include "vsgrasp/servo_sim.hpp"

namespace vsgrasp {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kExitFailure = 2;

const std::vector<int> kPointCounts{5, 10, 15, 20, 25};
const std::vector<double> kNoiseLevels{0.0, 0.25, 0.5, 0.75, 1.0};
constexpr double kTransferTargetPx = 0.5;

// Runs fn(i) for i in [0, n) on a small pool; results stay indexed by i.
template <typename T>
std::vector<T> parallel_map(std::size_t n, const std::function<T(std::size_t)>& fn) {
  std::vector<T> results(n);
  const std::size_t width = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  for (std::size_t begin = 0; begin < n; begin += width) {
    const std::size_t end = std::min(n, begin + width);
    std::vector<std::future<T>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(std::launch::async, fn, i));
    }
    for (std::size_t i = begin; i < end; ++i) {
      results[i] = batch[i - begin].get();
    }
  }
  return results;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  }
  f << text;
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::InvalidArgument, "cannot create output directory '" + dir.string() + "'");
  }
}

std::vector<std::uint64_t> seeds_for(const RunManifest& m, const Scenario& s) {
  if (m.seeds) {
    return m.seeds->seeds();
  }
  return {s.seed};
}

ordered_json number_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  GraspResult result;
  std::optional<LinearFit> fit;
  double time_to_half_s = std::numeric_limits<double>::infinity();
  double setpoint_rms_px = 0.0;
};

SeedOutcome run_one(const Scenario& s, const fs::path& trace_path, const fs::path& echo_path) {
  write_text(echo_path, dump_scenario(s));
  const ServoRun run = run_servo(s);
  std::ofstream csv(trace_path);
  write_trace_csv(csv, run.trace);

  SeedOutcome o;
  o.seed = s.seed;
  o.result = run.result;
  try {
    o.fit = fit_log_error(run.trace);
  } catch (const Error&) {
    // fewer than two positive samples: nothing to fit
  }
  o.time_to_half_s = time_to_half_error(run.trace);
  for (const double e : run.setpoints.rms_error_px) {
    o.setpoint_rms_px = std::max(o.setpoint_rms_px, e);
  }
  return o;
}

ordered_json outcome_json(const SeedOutcome& o) {
  ordered_json j;
  j["seed"] = o.seed;
  j["status"] = std::string(to_string(o.result.status));
  j["converged"] = o.result.converged;
  j["steps"] = o.result.steps;
  j["final_error_px"] = o.result.final_error_px;
  j["final_alignment_error_3d_m"] = o.result.final_alignment_error_3d_m;
  j["log_fit_slope_per_s"] = o.fit ? ordered_json(o.fit->slope) : ordered_json(nullptr);
  j["log_fit_r_squared"] = o.fit ? ordered_json(o.fit->r_squared) : ordered_json(nullptr);
  j["time_to_half_error_s"] = number_or_null(o.time_to_half_s);
  j["setpoint_rms_error_px"] = o.setpoint_rms_px;
  if (!o.result.message.empty()) {
    j["message"] = o.result.message;
  }
  return j;
}

ordered_json aggregate_json(const std::vector<SeedOutcome>& outcomes) {
  std::vector<double> slopes, r2, alignment, t_half;
  int converged = 0;
  for (const auto& o : outcomes) {
    converged += o.result.converged ? 1 : 0;
    alignment.push_back(o.result.final_alignment_error_3d_m);
    if (o.fit) {
      slopes.push_back(o.fit->slope);
      r2.push_back(o.fit->r_squared);
    }
    t_half.push_back(o.time_to_half_s);
  }
  ordered_json j;
  j["runs"] = outcomes.size();
  j["convergence_rate"] = static_cast<double>(converged) / static_cast<double>(outcomes.size());
  j["median_log_fit_slope_per_s"] = slopes.empty() ? ordered_json(nullptr) : ordered_json(median(slopes));
  j["median_log_fit_r_squared"] = r2.empty() ? ordered_json(nullptr) : ordered_json(median(r2));
  j["median_time_to_half_error_s"] = number_or_null(median(t_half));
  const double mean = std::accumulate(alignment.begin(), alignment.end(), 0.0) /
                      static_cast<double>(alignment.size());
  j["final_alignment_error_3d_m"] = {{"median", median(alignment)},
                                     {"mean", mean},
                                     {"max", *std::max_element(alignment.begin(), alignment.end())}};
  return j;
}

std::vector<JacobianMode> parse_mode_list(const std::string& text) {
  std::vector<JacobianMode> modes;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    modes.push_back(parse_jacobian_mode(item));
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  if (modes.size() != 2) {
    throw Error(ErrorCode::InvalidArgument, "--modes expects exactly two comma-separated modes");
  }
  return modes;
}

}  // namespace

std::vector<std::uint64_t> SeedRange::seeds() const {
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = first; s <= last; ++s) {
    out.push_back(s);
    if (s == std::numeric_limits<std::uint64_t>::max()) {
      break;
    }
  }
  return out;
}

SeedRange parse_seed_range(const std::string& text) {
  auto parse_u64 = [&](const std::string& part) {
    if (part.empty() || !std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw Error(ErrorCode::InvalidArgument, "invalid seed range '" + text + "'");
    }
    try {
      return static_cast<std::uint64_t>(std::stoull(part));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "invalid seed range '" + text + "'");
    }
  };
  const std::size_t dots = text.find("..");
  SeedRange r;
  if (dots == std::string::npos) {
    r.first = r.last = parse_u64(text);
  } else {
    r.first = parse_u64(text.substr(0, dots));
    r.last = parse_u64(text.substr(dots + 2));
  }
  if (r.last < r.first) {
    throw Error(ErrorCode::InvalidArgument, "empty seed range '" + text + "'");
  }
  return r;
}

Scenario apply_overrides(Scenario s, const RunManifest& m) {
  if (m.mode) {
    s.jacobian_mode = *m.mode;
  }
  if (m.cameras) {
    s.cameras_used = *m.cameras;
  }
  if (m.noise_px) {
    s.noise_px = *m.noise_px;
  }
  s.validate();
  return s;
}

int cmd_run(const RunManifest& m, std::ostream& out, std::ostream& /*err*/) {
  const Scenario base = apply_overrides(load_scenario(m.scenario_path), m);
  prepare_out_dir(m.out_dir);
  const std::vector<std::uint64_t> seeds = seeds_for(m, base);

  const auto outcomes = parallel_map<SeedOutcome>(seeds.size(), [&](std::size_t i) {
    Scenario s = base;
    s.seed = seeds[i];
    const std::string tag = "seed" + std::to_string(seeds[i]);
    return run_one(s, m.out_dir / ("trace_" + tag + ".csv"), m.out_dir / ("scenario_" + tag + ".json"));
  });

  ordered_json summary;
  summary["scenario"] = base.name;
  summary["jacobian_mode"] = std::string(to_string(base.jacobian_mode));
  summary["cameras_used"] = base.cameras_used;
  summary["setpoint_source"] = std::string(to_string(base.setpoint_source));
  summary["aggregate"] = aggregate_json(outcomes);
  summary["per_seed"] = ordered_json::array();
  for (const auto& o : outcomes) {
    summary["per_seed"].push_back(outcome_json(o));
  }
  write_text(m.out_dir / "summary.json", summary.dump(2) + "\n");

  const auto& agg = summary["aggregate"];
  out << base.name << " (" << to_string(base.jacobian_mode) << ", " << base.cameras_used
      << " camera" << (base.cameras_used == 2 ? "s" : "") << "): " << seeds.size() << " run(s), convergence rate "
      << agg["convergence_rate"].get<double>() << ", median R^2 " << agg["median_log_fit_r_squared"].dump()
      << ", median 3-D error " << agg["final_alignment_error_3d_m"]["median"].get<double>() << " m\n";
  return 0;
}

int cmd_compare(const RunManifest& m, std::ostream& out, std::ostream& /*err*/) {
  const Scenario base = apply_overrides(load_scenario(m.scenario_path), m);
  prepare_out_dir(m.out_dir);
  const std::vector<std::uint64_t> seeds = seeds_for(m, base);
  const auto& modes = m.compare_modes;

  // Column order: mode a then mode b, per seed.
  const auto outcomes = parallel_map<SeedOutcome>(seeds.size() * modes.size(), [&](std::size_t i) {
    Scenario s = base;
    s.seed = seeds[i / modes.size()];
    s.jacobian_mode = modes[i % modes.size()];
    const std::string tag = std::string(to_string(s.jacobian_mode)) + "_" + std::to_string(i % modes.size()) +
                            "_seed" + std::to_string(s.seed);
    return run_one(s, m.out_dir / ("trace_" + tag + ".csv"), m.out_dir / ("scenario_" + tag + ".json"));
  });

  std::ofstream table(m.out_dir / "compare.csv");
  table << std::setprecision(17) << "seed";
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const std::string p = std::string(to_string(modes[k])) + "_" + std::to_string(k);
    table << ',' << p << "_time_to_half_s," << p << "_steps," << p << "_fit_r_squared";
  }
  table << '\n';

  out << std::left << std::setw(8) << "seed";
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const std::string name(to_string(modes[k]));
    out << std::setw(18) << (name + " t1/2") << std::setw(18) << (name + " steps") << std::setw(18)
        << (name + " R^2");
  }
  out << '\n';

  ordered_json summary;
  summary["scenario"] = base.name;
  summary["modes"] = ordered_json::array();
  for (const auto mode : modes) {
    summary["modes"].push_back(std::string(to_string(mode)));
  }
  summary["per_seed"] = ordered_json::array();

  std::vector<std::vector<double>> t_half(modes.size()), steps(modes.size()), r2(modes.size());
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    table << seeds[si];
    out << std::setw(8) << seeds[si];
    ordered_json row;
    row["seed"] = seeds[si];
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const SeedOutcome& o = outcomes[si * modes.size() + k];
      const double r = o.fit ? o.fit->r_squared : std::numeric_limits<double>::quiet_NaN();
      t_half[k].push_back(o.time_to_half_s);
      steps[k].push_back(static_cast<double>(o.result.steps));
      if (o.fit) {
        r2[k].push_back(r);
      }
      table << ',' << o.time_to_half_s << ',' << o.result.steps << ',' << r;
      out << std::setw(18) << o.time_to_half_s << std::setw(18) << o.result.steps << std::setw(18) << r;
      ordered_json cell = outcome_json(o);
      cell["jacobian_mode"] = std::string(to_string(modes[k]));
      row["modes"].push_back(cell);
    }
    table << '\n';
    out << '\n';
    summary["per_seed"].push_back(row);
  }

  summary["medians"] = ordered_json::array();
  out << std::setw(8) << "median";
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const double mt = median(t_half[k]);
    const double ms = median(steps[k]);
    const double mr = r2[k].empty() ? std::numeric_limits<double>::quiet_NaN() : median(r2[k]);
    out << std::setw(18) << mt << std::setw(18) << ms << std::setw(18) << mr;
    summary["medians"].push_back({{"jacobian_mode", std::string(to_string(modes[k]))},
                                  {"time_to_half_error_s", number_or_null(mt)},
                                  {"steps", ms},
                                  {"log_fit_r_squared", number_or_null(mr)}});
  }
  out << '\n';
  write_text(m.out_dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int cmd_transfer_eval(const RunManifest& m, std::ostream& out, std::ostream& /*err*/) {
  Scenario base = apply_overrides(load_scenario(m.scenario_path), m);
  base.setpoint_source = SetpointSource::transfer;
  if (base.runtime_rig.size() < 2 || base.planning_rig.size() < 2) {
    throw Error(ErrorCode::ScenarioInvalid, "transfer-eval needs two planning and two runtime cameras");
  }
  base.validate();
  prepare_out_dir(m.out_dir);
  write_text(m.out_dir / "scenario.json", dump_scenario(base));
  const std::vector<std::uint64_t> seeds = seeds_for(m, base);

  std::vector<int> counts;
  for (const int c : kPointCounts) {
    if (c <= static_cast<int>(base.object_points_m.size())) {
      counts.push_back(c);
    }
  }
  const std::vector<double> noises = m.noise_px ? std::vector<double>{*m.noise_px} : kNoiseLevels;

  struct Cell {
    int points;
    double noise;
  };
  std::vector<Cell> cells;
  for (const double n : noises) {
    for (const int c : counts) {
      cells.push_back({c, n});
    }
  }

  // One entry per (cell, seed); NaN marks a failed estimate.
  const auto errors = parallel_map<double>(cells.size() * seeds.size(), [&](std::size_t i) {
    const Cell& cell = cells[i / seeds.size()];
    Scenario s = base;
    s.seed = seeds[i % seeds.size()];
    s.noise_px = cell.noise;
    s.object_points_m.resize(static_cast<std::size_t>(cell.points));
    try {
      const SetpointOutcome sp = compute_setpoints(s);
      double sq = 0.0;
      for (const double e : sp.rms_error_px) {
        sq += e * e;
      }
      return std::sqrt(sq / static_cast<double>(sp.rms_error_px.size()));
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  });

  std::ofstream table(m.out_dir / "transfer_eval.csv");
  table << std::setprecision(17) << "points,noise_px,median_rms_px,mean_rms_px,max_rms_px,failures\n";
  ordered_json summary;
  summary["scenario"] = base.name;
  summary["seeds"] = seeds.size();
  summary["target_px"] = kTransferTargetPx;
  summary["cells"] = ordered_json::array();

  out << std::left << std::setw(10) << "noise_px" << std::setw(8) << "points" << std::setw(16) << "median_rms_px"
      << "failures\n";
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    std::vector<double> ok;
    int failures = 0;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const double e = errors[ci * seeds.size() + k];
      if (std::isnan(e)) {
        ++failures;
      } else {
        ok.push_back(e);
      }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double med = ok.empty() ? nan : median(ok);
    const double mean = ok.empty() ? nan : std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
    const double mx = ok.empty() ? nan : *std::max_element(ok.begin(), ok.end());
    table << cells[ci].points << ',' << cells[ci].noise << ',' << med << ',' << mean << ',' << mx << ','
          << failures << '\n';
    out << std::setw(10) << cells[ci].noise << std::setw(8) << cells[ci].points << std::setw(16) << med
        << failures << '\n';
    ordered_json cell{{"points", cells[ci].points},
                      {"noise_px", cells[ci].noise},
                      {"median_rms_px", number_or_null(med)},
                      {"mean_rms_px", number_or_null(mean)},
                      {"max_rms_px", number_or_null(mx)},
                      {"failures", failures}};
    if (cells[ci].noise == 0.5 && cells[ci].points >= 15 && cells[ci].points <= 20) {
      cell["meets_target"] = std::isfinite(med) && med <= kTransferTargetPx;
      out << "  -> " << (std::isfinite(med) && med <= kTransferTargetPx ? "meets" : "misses") << " the "
          << kTransferTargetPx << " px target\n";
    }
    summary["cells"].push_back(cell);
  }
  write_text(m.out_dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Visual servoing with an independent camera and projective grasp transfer", "vsgrasp"};
  app.require_subcommand(1);

  RunManifest m;
  std::string seeds;
  std::string mode;
  std::string modes;
  int cameras = 0;
  double noise = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", m.scenario_path, "Scenario JSON file")->required();
    sub->add_option("--out", m.out_dir, "Output directory");
    sub->add_option("--seeds", seeds, "Seed range a..b (inclusive)");
    sub->add_option("--noise-px", noise, "Image noise sigma of the planning/transfer stages (px)");
  };
  auto* run = app.add_subcommand("run", "Run the servo loop for each seed");
  add_common(run);
  run->add_option("--mode", mode, "Jacobian mode: constant|variable");
  run->add_option("--cameras", cameras, "Runtime cameras used for servoing: 1|2");

  auto* compare = app.add_subcommand("compare", "Run two Jacobian modes side by side");
  add_common(compare);
  compare->add_option("--cameras", cameras, "Runtime cameras used for servoing: 1|2");
  compare->add_option("--modes", modes, "Two comma-separated modes (default variable,constant)");
  compare->add_option("--mode", mode, "Shorthand for --modes <mode>,<mode>");

  auto* transfer = app.add_subcommand("transfer-eval", "Sweep object-point count and noise for set-point transfer");
  add_common(transfer);

  std::vector<const char*> argv;
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (!seeds.empty()) {
      m.seeds = parse_seed_range(seeds);
    }
    if (!mode.empty()) {
      m.mode = parse_jacobian_mode(mode);
    }
    if (cameras != 0) {
      m.cameras = cameras;
    }
    if (app.got_subcommand(run) ? run->count("--noise-px") > 0
        : app.got_subcommand(compare) ? compare->count("--noise-px") > 0
                                      : transfer->count("--noise-px") > 0) {
      if (!(noise >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "--noise-px must be >= 0");
      }
      m.noise_px = noise;
    }
    if (app.got_subcommand(run)) {
      return cmd_run(m, out, err);
    }
    if (app.got_subcommand(compare)) {
      if (!modes.empty()) {
        m.compare_modes = parse_mode_list(modes);
      } else if (m.mode) {
        m.compare_modes = {*m.mode, *m.mode};
      }
      m.mode.reset();
      return cmd_compare(m, out, err);
    }
    return cmd_transfer_eval(m, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace vsgrasp
