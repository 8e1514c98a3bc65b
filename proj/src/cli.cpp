#include "gradspin/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <omp.h>
#include <openssl/evp.h>

#include "gradspin/analysis.hpp"
#include "gradspin/engine.hpp"
#include "gradspin/hydro.hpp"
#include "gradspin/lattice.hpp"
#include "gradspin/measures.hpp"
#include "gradspin/models.hpp"

namespace gradspin::cli {

using nlohmann::json;
namespace fs = std::filesystem;

ValidationError::ValidationError(std::string field, const std::string& message)
    : std::invalid_argument(fmt::format("invalid {}: {}", field, message)), field_(std::move(field)) {}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "hydro", "attract", "verify", "moments"};
  return names;
}

json load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config file '{}'", path.string()));
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("config", fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
  if (!j.is_object()) throw ValidationError("config", "top level must be a JSON object");
  return j;
}

void apply_override(json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ValidationError("set", fmt::format("'{}' is not of the form key=value", assignment));
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  if (!config.is_object()) config = json::object();
  config[key] = std::move(value);
}

std::string content_hash(std::string_view content) {
  const std::string header = fmt::format("blob {}", content.size());
  std::string blob = header;
  blob.push_back('\0');
  blob.append(content);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &length, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

int configure_threads(int requested) {
  int threads = requested;
  if (threads <= 0) {
    if (const char* env = std::getenv("GRADSPIN_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && *end == '\0' && v > 0) threads = static_cast<int>(v);
    }
  }
  if (threads > 0) omp_set_num_threads(threads);
  return threads > 0 ? threads : omp_get_max_threads();
}

namespace {

// ---------------------------------------------------------------------------
// Typed access to the configuration object.
// ---------------------------------------------------------------------------

class Reader {
public:
  Reader(const json& config, std::initializer_list<const char*> allowed) : config_(config) {
    if (!config.is_object()) throw ValidationError("config", "must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : config.items()) {
      if (!ok.count(key)) throw ValidationError(key, "unknown key for this command");
    }
  }

  bool has(const char* key) const { return config_.contains(key); }

  double number(const char* key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ValidationError(key, "required");
    }
    const auto& v = config_.at(key);
    if (!v.is_number()) throw ValidationError(key, "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(key, "must be finite");
    return d;
  }

  double positive(const char* key, std::optional<double> fallback = std::nullopt) const {
    const double d = number(key, fallback);
    if (!(d > 0.0)) throw ValidationError(key, fmt::format("must be positive, got {}", d));
    return d;
  }

  std::int64_t integer(const char* key, std::int64_t min, std::optional<std::int64_t> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ValidationError(key, "required");
    }
    const auto& v = config_.at(key);
    if (!v.is_number_integer()) throw ValidationError(key, "must be an integer");
    const auto i = v.get<std::int64_t>();
    if (i < min) throw ValidationError(key, fmt::format("must be >= {}, got {}", min, i));
    return i;
  }

  std::uint64_t seed() const {
    if (!has("seed")) throw ValidationError("seed", "required");
    const auto& v = config_.at("seed");
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ValidationError("seed", "must be a non-negative integer");
    }
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }

  std::string string(const char* key, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ValidationError(key, "required");
    }
    const auto& v = config_.at(key);
    if (!v.is_string()) throw ValidationError(key, "must be a string");
    return v.get<std::string>();
  }

  bool flag(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = config_.at(key);
    if (!v.is_boolean()) throw ValidationError(key, "must be true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const char* key, std::optional<std::vector<double>> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ValidationError(key, "required");
    }
    const auto& v = config_.at(key);
    std::vector<double> out;
    if (v.is_number()) {
      out.push_back(v.get<double>());
    } else if (v.is_array()) {
      for (const auto& e : v) {
        if (!e.is_number()) throw ValidationError(key, "must be a list of numbers");
        out.push_back(e.get<double>());
      }
    } else {
      throw ValidationError(key, "must be a list of numbers");
    }
    if (out.empty()) throw ValidationError(key, "must not be empty");
    return out;
  }

  std::vector<std::string> strings(const char* key, std::vector<std::string> fallback) const {
    if (!has(key)) return fallback;
    const auto& v = config_.at(key);
    std::vector<std::string> out;
    if (v.is_string()) {
      out.push_back(v.get<std::string>());
    } else if (v.is_array()) {
      for (const auto& e : v) {
        if (!e.is_string()) throw ValidationError(key, "must be a list of strings");
        out.push_back(e.get<std::string>());
      }
    } else {
      throw ValidationError(key, "must be a list of strings");
    }
    return out;
  }

private:
  const json& config_;
};

ModelSpec read_model(const Reader& r) {
  ModelKind kind;
  try {
    kind = parse_model_kind(r.string("model"));
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const ValidationError*>(&e)) throw;
    throw ValidationError("model", e.what());
  }
  const double spin = r.number("spin", 0.5);
  try {
    return ModelSpec(kind, spin);
  } catch (const std::invalid_argument& e) {
    throw ValidationError("spin", e.what());
  }
}

Profile read_profile(const Reader& r, const char* key = "profile") {
  const std::string preset = r.string(key);
  try {
    return Profile::parse(preset);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(key, e.what());
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
}

std::vector<TestFunction> read_test_functions(const Reader& r, const char* key,
                                              std::vector<std::string> fallback) {
  std::vector<TestFunction> out;
  for (const auto& id : r.strings(key, std::move(fallback))) {
    try {
      out.push_back(TestFunction::parse(id));
    } catch (const std::invalid_argument& e) {
      throw ValidationError(key, e.what());
    }
  }
  return out;
}

std::vector<double> read_times(const Reader& r, const char* key) {
  auto times = r.numbers(key);
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError(key, fmt::format("{} is not a time >= 0", t));
  }
  if (!std::is_sorted(times.begin(), times.end())) throw ValidationError(key, "must be non-decreasing");
  return times;
}

std::size_t read_size(const Reader& r, const char* key, std::int64_t min, std::optional<std::int64_t> fallback = std::nullopt) {
  return static_cast<std::size_t>(r.integer(key, min, fallback));
}

// ---------------------------------------------------------------------------
// Output.
// ---------------------------------------------------------------------------

class Outputs {
public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", dir_.string(), ec.message()));
  }

  void write(const std::string& name, std::string_view content) {
    const fs::path path = dir_ / name;
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
    names_.push_back(name);
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  /// manifest.json: command, resolved config, content hash of the inputs.
  void manifest(std::string_view command, const json& config, std::string_view extra_input = {}) {
    std::string inputs = config.dump();
    inputs.append(extra_input);
    json m = {{"command", std::string(command)},
              {"config", config},
              {"content_hash", content_hash(inputs)},
              {"outputs", names_}};
    write_json("manifest.json", m);
  }

  const fs::path& dir() const noexcept { return dir_; }

private:
  fs::path dir_;
  std::vector<std::string> names_;
};

std::string table_input(const Profile& profile, const json& config) {
  if (profile.kind() != Profile::Kind::table) return {};
  const std::string preset = config.at("profile").get<std::string>();
  std::ifstream in(preset.substr(preset.find(':') + 1), std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Commands.
// ---------------------------------------------------------------------------

int cmd_simulate(const json& config, Outputs& io, std::ostream& out) {
  const Reader r(config, {"model", "spin", "N", "replicas", "times", "seed", "rho", "profile",
                          "pairings", "martingale", "snapshots"});
  const ModelSpec model = read_model(r);
  const std::size_t n = read_size(r, "N", 2);
  const std::size_t replicas = read_size(r, "replicas", 1, 1);
  const auto times = read_times(r, "times");
  const std::uint64_t seed = r.seed();
  const auto pairings = read_test_functions(r, "pairings", {"1", "cos1", "sin1"});
  std::optional<TestFunction> martingale;
  if (r.has("martingale")) {
    try {
      martingale = TestFunction::parse(r.string("martingale"));
    } catch (const std::invalid_argument& e) {
      if (dynamic_cast<const ValidationError*>(&e)) throw;
      throw ValidationError("martingale", e.what());
    }
  }
  const bool snapshots = r.flag("snapshots", false);

  InitialSampler initial;
  std::string extra;
  if (r.has("rho") && r.has("profile")) throw ValidationError("rho", "give either rho or profile, not both");
  if (r.has("rho")) {
    const InvariantSpec inv{model, r.positive("rho")};
    initial = [inv, n](RngStream& rng) { return sample_invariant(inv, n, rng); };
  } else if (r.has("profile")) {
    const Profile profile = read_profile(r);
    extra = table_input(profile, config);
    initial = [model, profile, n](RngStream& rng) { return sample_profile_measure(model, profile, n, rng); };
  } else {
    throw ValidationError("profile", "an initial measure is required: set rho or profile");
  }
  for (const auto& w : model.warnings()) out << "warning: " << w << "\n";

  ReplicaJob job{model, initial, {}, seed};
  job.plan.macro_times = times;
  job.plan.pairings = pairings;
  job.plan.martingale = martingale;
  job.plan.keep_final_state = snapshots;
  const auto results = run_replicas(job, replicas);

  std::string csv = "replica,t,observable,value\n";
  std::size_t failed = 0;
  std::uint64_t events = 0;
  for (const auto& res : results) {
    if (!res.ok()) {
      ++failed;
      out << fmt::format("replica {} failed: {}\n", res.replica, res.error);
      continue;
    }
    events += res.events;
    for (const auto& obs : res.observations) {
      csv += fmt::format("{},{},mass,{}\n", res.replica, obs.t, obs.mass);
      for (std::size_t i = 0; i < pairings.size(); ++i) {
        csv += fmt::format("{},{},pair:{},{}\n", res.replica, obs.t, pairings[i].id(), obs.pairings[i]);
      }
      if (martingale) {
        csv += fmt::format("{},{},martingale:{},{}\n", res.replica, obs.t, martingale->id(), obs.martingale);
        csv += fmt::format("{},{},qv:{},{}\n", res.replica, obs.t, martingale->id(), obs.quadratic_variation);
      }
    }
    if (snapshots && res.final_state) {
      std::ostringstream snap(std::ios::binary);
      write_snapshot(snap, *res.final_state);
      io.write(fmt::format("snapshots/replica_{}.gspn", res.replica), snap.str());
    }
  }
  io.write("simulate.csv", csv);
  io.manifest("simulate", config, extra);
  out << fmt::format("simulate: {} replicas, {} events, {} failed; wrote {}\n", replicas, events,
                     failed, (io.dir() / "simulate.csv").string());
  return failed == 0 ? kOk : kFailure;
}

int cmd_hydro(const json& config, Outputs& io, std::ostream& out) {
  const Reader r(config, {"model", "spin", "profile", "N_list", "t_list", "replicas", "seed", "bins",
                          "k_max", "bootstrap", "pairings"});
  const ModelSpec model = read_model(r);
  const Profile profile = read_profile(r);
  ConvergenceConfig cfg{model, profile, {}, {}, 200, 0, 32, {}, 64, 200, Execution::parallel};
  for (double v : r.numbers("N_list", std::vector<double>{64, 128, 256})) {
    if (v < 2 || v != std::floor(v)) throw ValidationError("N_list", fmt::format("{} is not an integer >= 2", v));
    cfg.n_list.push_back(static_cast<std::size_t>(v));
  }
  cfg.t_list = read_times(r, "t_list");
  cfg.replicas = read_size(r, "replicas", 1, 200);
  cfg.seed = r.seed();
  cfg.bins = read_size(r, "bins", 1, 32);
  for (std::size_t n : cfg.n_list) {
    if (n % cfg.bins != 0) throw ValidationError("bins", fmt::format("{} does not divide N = {}", cfg.bins, n));
  }
  cfg.k_max = static_cast<int>(r.integer("k_max", 1, 64));
  if (cfg.k_max >= 2048) throw ValidationError("k_max", "must be below 2048");
  cfg.bootstrap = read_size(r, "bootstrap", 0, 200);
  cfg.pairings = read_test_functions(r, "pairings", {"1", "cos1", "sin1", "cos2", "sin2"});
  for (const auto& w : model.warnings()) out << "warning: " << w << "\n";

  const auto result = convergence_experiment(cfg);
  io.write("hydro_errors.csv", rows_csv(result.rows));
  io.write("hydro_profiles.csv", profiles_csv(result.profiles));
  io.manifest("hydro", config, table_input(profile, config));
  for (const auto& row : result.rows) {
    out << fmt::format("N={} t={} {}: error={:.6g} se={:.3g}\n", row.n, row.t, to_string(row.norm),
                       row.error, row.se);
  }
  return kOk;
}

int cmd_attract(const json& config, Outputs& io, std::ostream& out) {
  const Reader r(config, {"model", "spin", "n_max", "l_max", "max_listed", "N", "micro_T", "runs",
                          "seed", "profile", "rho_hat"});
  const ModelSpec model = read_model(r);
  for (const auto& w : model.warnings()) out << "warning: " << w << "\n";

  if (model.is_particle_model()) {
    const auto n_max = r.integer("n_max", 1, 40);
    const auto l_max = r.integer("l_max", 1, 80);
    const auto listed = read_size(r, "max_listed", 0, 1000);
    const auto report = scan_criterion(model, n_max, l_max, listed);
    io.write_json("attract.json", to_json(report));
    io.write("attract_violations.csv", violations_csv(report));
    io.manifest("attract", config);
    out << fmt::format("attract {} s={}: {} checks, {} violations, worst margin {:.3g}{}\n",
                       to_string(model.kind()), model.spin(), report.checks, report.violation_count,
                       report.worst.margin, report.report_only ? " (report only)" : "");
    return report.passed() || report.report_only ? kOk : kFailure;
  }

  // gKMP: basic coupling from dominated pairs.
  const std::size_t n = read_size(r, "N", 2, 64);
  const double micro_t = r.positive("micro_T", 1000.0);
  const std::size_t runs = read_size(r, "runs", 1, 100);
  const std::uint64_t seed = r.seed();
  const Profile profile = r.has("profile") ? read_profile(r) : Profile::sine(1.0, 0.5);
  const double rho_hat =
      r.positive("rho_hat", local_parameter(model, profile.sup()) + 0.5);
  const InitialMeasureSpec spec{model, profile, rho_hat};
  try {
    check_domination(spec, n);
  } catch (const DominationError& e) {
    throw ValidationError("rho_hat", e.what());
  }

  std::vector<CouplingReport> reports(runs);
  const auto count = static_cast<std::int64_t>(runs);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    auto [low, high] = sample_dominated_pair(spec, n, rng);
    reports[static_cast<std::size_t>(i)] = basic_coupling_gkmp(
        model, std::get<EnergyConfig>(low), std::get<EnergyConfig>(high), micro_t, rng);
  }
  std::uint64_t events = 0;
  std::uint64_t violations = 0;
  double max_excess = -std::numeric_limits<double>::infinity();
  json per_run = json::array();
  for (std::size_t i = 0; i < runs; ++i) {
    events += reports[i].events;
    violations += reports[i].violations;
    max_excess = std::max(max_excess, reports[i].max_excess);
    per_run.push_back({{"run", i},
                       {"events", reports[i].events},
                       {"violations", reports[i].violations},
                       {"max_excess", reports[i].max_excess}});
  }
  json j = {{"model", "gKMP"},
            {"spin", model.spin()},
            {"N", n},
            {"micro_T", micro_t},
            {"runs", runs},
            {"events", events},
            {"violations", violations},
            {"max_excess", max_excess},
            {"passed", violations == 0},
            {"per_run", per_run}};
  io.write_json("attract.json", j);
  io.manifest("attract", config);
  out << fmt::format("attract gKMP s={}: basic coupling, {} runs, {} events, {} order violations\n",
                     model.spin(), runs, events, violations);
  return violations == 0 ? kOk : kFailure;
}

int cmd_verify(const json& config, Outputs& io, std::ostream& out) {
  const Reader r(config, {"n_max", "random_cases", "random_pairs", "seed", "debug_corrupt_D"});
  SuiteOptions opt;
  opt.n_max = r.integer("n_max", 1, 200);
  opt.random_cases = read_size(r, "random_cases", 1, 200);
  opt.random_pairs = read_size(r, "random_pairs", 1, 10000);
  opt.seed = r.has("seed") ? r.seed() : 1;
  opt.corrupt_diffusion = r.flag("debug_corrupt_D", false);
  const auto suites = run_identity_suites(opt);
  json j = json::array();
  bool all = true;
  for (const auto& s : suites) {
    j.push_back(to_json(s));
    all = all && s.passed;
    out << fmt::format("suite {}: {} (worst residual {:.3g}, tolerance {:.0e}, {} cases)\n", s.name,
                       s.passed ? "PASS" : "FAIL", s.worst_residual, s.tolerance, s.cases);
  }
  io.write_json("verify.json", {{"suites", j}, {"passed", all}});
  io.manifest("verify", config);
  return all ? kOk : kFailure;
}

int cmd_moments(const json& config, Outputs& io, std::ostream& out) {
  const Reader r(config, {"model", "spin", "rho", "m_max", "draws", "seed"});
  const ModelSpec model = read_model(r);
  const InvariantSpec inv{model, r.positive("rho")};
  const int m_max = static_cast<int>(r.integer("m_max", 1, 4));
  const std::size_t draws = read_size(r, "draws", 2, 100000);
  RngStream rng(r.seed(), 0);
  const auto sample = as_doubles(sample_invariant(inv, draws, rng));

  std::string csv = "m,kind,closed,sampled,se,z\n";
  out << fmt::format("moments {} s={} rho={} ({} draws)\n", to_string(model.kind()), model.spin(),
                     inv.rho, draws);
  for (int m = 1; m <= m_max; ++m) {
    const Moment closed = moment(inv, m);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double v : sample) {
      double term = 1.0;
      for (int j = 0; j < m; ++j) term *= closed.kind == MomentKind::raw ? v : v - j;
      sum += term;
      sum_sq += term * term;
    }
    const double nd = static_cast<double>(draws);
    const double mean = sum / nd;
    const double var = (sum_sq - nd * mean * mean) / (nd - 1.0);
    const double se = std::sqrt(std::max(var, 0.0) / nd);
    const double z = se > 0.0 ? (mean - closed.value) / se : 0.0;
    const char* kind = closed.kind == MomentKind::raw ? "raw" : "factorial";
    csv += fmt::format("{},{},{},{},{},{}\n", m, kind, closed.value, mean, se, z);
    out << fmt::format("  m={} {:9s} closed={:.6g} sampled={:.6g} se={:.3g} z={:+.2f}\n", m, kind,
                       closed.value, mean, se, z);
  }
  io.write("moments.csv", csv);
  io.manifest("moments", config);
  return kOk;
}

}  // namespace

int run_command(std::string_view command, const json& config, const fs::path& out_dir,
                std::ostream& out, std::ostream& err) {
  try {
    if (std::find(command_names().begin(), command_names().end(), command) == command_names().end()) {
      throw ValidationError("command", fmt::format("unknown subcommand '{}'", command));
    }
    Outputs io(out_dir);
    if (command == "simulate") return cmd_simulate(config, io, out);
    if (command == "hydro") return cmd_hydro(config, io, out);
    if (command == "attract") return cmd_attract(config, io, out);
    if (command == "verify") return cmd_verify(config, io, out);
    return cmd_moments(config, io, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    err << "error: invalid configuration: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace gradspin::cli
