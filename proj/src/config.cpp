#include "roaforge/config.hpp"

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace roaforge {

namespace {

using json = nlohmann::json;

std::string show(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename T>
std::string show_list(const std::vector<T>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) s += show(xs[i]);
    else s += std::to_string(xs[i]);
  }
  return s + "]";
}

// Reads one JSON object strictly: each key may be consumed once; anything left
// over is an unknown key.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string prefix, std::vector<std::string>& defaults)
      : obj_(obj), prefix_(std::move(prefix)), defaults_(defaults) {
    if (!obj_.is_object()) throw ConfigError(where("") + "expected a JSON object");
  }

  std::string field(const std::string& key) const { return prefix_ + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError("field '" + field(key) + "': " + msg);
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail(key, "must be finite");
    } else {
      defaults_.push_back(field(key) + " = " + show(out));
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      const auto x = v->get<std::int64_t>();
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) fail(key, "out of range");
      out = static_cast<int>(x);
    } else {
      defaults_.push_back(field(key) + " = " + std::to_string(out));
    }
  }

  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
        fail(key, "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    } else {
      defaults_.push_back(field(key) + " = " + std::to_string(out));
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      out = v->get<bool>();
    } else {
      defaults_.push_back(field(key) + " = " + (out ? "true" : "false"));
    }
  }

  void string(const std::string& key, std::string& out, const std::vector<std::string>& allowed) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
      if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), out) == allowed.end()) {
        std::string opts;
        for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
        fail(key, "must be one of " + opts);
      }
    } else {
      defaults_.push_back(field(key) + " = " + out);
    }
  }

  template <typename T>
  void list(const std::string& key, std::vector<T>& out, bool record_default = true) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "expected an array");
      std::vector<T> xs;
      for (const auto& e : *v) {
        if constexpr (std::is_integral_v<T>) {
          if (!e.is_number_integer()) fail(key, "expected an array of integers");
        } else {
          if (!e.is_number()) fail(key, "expected an array of numbers");
        }
        xs.push_back(e.get<T>());
      }
      out = std::move(xs);
    } else if (record_default) {
      defaults_.push_back(field(key) + " = " + show_list(out));
    }
  }

  const json* object(const std::string& key) {
    const json* v = find(key);
    if (v && !v->is_object()) fail(key, "expected an object");
    return v;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("field '" + field(it.key()) + "': unknown key");
  }

 private:
  std::string where(const std::string& key) const { return prefix_.empty() && key.empty() ? "" : field(key) + ": "; }

  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& defaults_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError("field '" + field + "': " + msg);
}

}  // namespace

RunConfig::RunConfig() : angles{std::numbers::pi / 6.0, 5.0 * std::numbers::pi / 12.0} {}

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  auto& defaults = cfg.defaults_applied;
  ObjectReader r(doc, "", defaults);

  const json* bench = r.find("benchmark");
  if (!bench) throw ConfigError("field 'benchmark': required");
  if (!bench->is_string()) r.fail("benchmark", "expected a string");
  cfg.benchmark = bench->get<std::string>();
  const auto& names = benchmark_names();
  require(std::find(names.begin(), names.end(), cfg.benchmark) != names.end(), "benchmark",
          "unknown benchmark '" + cfg.benchmark + "'");

  r.number("tau", cfg.tau);
  r.integer("grid_points", cfg.grid_points);
  std::string candidate = "quadratic";
  r.string("candidate", candidate, {"quadratic", "neural"});
  cfg.candidate = candidate == "neural" ? CandidateKind::Neural : CandidateKind::Quadratic;
  std::string step = "linear";
  r.string("step_map", step, {"linear", "nonlinear"});
  cfg.step_map = step == "nonlinear" ? StepKind::Nonlinear : StepKind::Linear;
  r.number("exemption_factor", cfg.exemption_factor);

  r.integer("num_particles", cfg.num_particles);
  r.integer("max_iter", cfg.max_iter);
  r.integer("stall_window", cfg.stall_window);
  r.string("parameter_pair", cfg.parameter_pair, {"auto", "a", "b"});
  r.unsigned64("seed", cfg.seed);
  r.number("w1", cfg.w1);
  r.number("w2", cfg.w2);
  r.integer("run_count", cfg.run_count);
  r.string("output_dir", cfg.output_dir, {});

  r.list("particle_counts", cfg.particle_counts);
  r.list("masses", cfg.masses);
  r.list("grid_sweep_points", cfg.grid_sweep_points);
  r.list("angles", cfg.angles);
  r.number("sim_duration", cfg.sim_duration);
  r.list("gain", cfg.gain, false);

  if (const json* plant = r.object("plant")) {
    std::vector<std::string> ignored;
    ObjectReader p(*plant, "plant.", ignored);
    p.optional_number("mass", cfg.mass);
    p.optional_number("length", cfg.length);
    p.optional_number("friction", cfg.friction);
    p.optional_number("u_max", cfg.u_max);
    p.list("roa_lower", cfg.roa_lower, false);
    p.list("roa_upper", cfg.roa_upper, false);
    p.list("gain_lower", cfg.gain_lower, false);
    p.list("gain_upper", cfg.gain_upper, false);
    p.finish();
  }

  if (const json* nn = r.object("neural")) {
    ObjectReader n(*nn, "neural.", defaults);
    n.list("hidden", cfg.neural.hidden);
    n.number("epsilon", cfg.neural.epsilon);
    n.number("learning_rate", cfg.neural.train.learning_rate);
    n.integer("epochs", cfg.neural.train.epochs);
    n.integer("batch_size", cfg.neural.train.batch_size);
    n.number("level_multiplier", cfg.neural.train.level_multiplier);
    n.boolean("warm_start", cfg.neural.warm_start);
    n.finish();
  } else {
    defaults.push_back("neural = {hidden: " + show_list(cfg.neural.hidden) + ", epsilon: " +
                       show(cfg.neural.epsilon) + ", learning_rate: " + show(cfg.neural.train.learning_rate) +
                       ", epochs: " + std::to_string(cfg.neural.train.epochs) +
                       ", batch_size: " + std::to_string(cfg.neural.train.batch_size) +
                       ", level_multiplier: " + show(cfg.neural.train.level_multiplier) + ", warm_start: true}");
  }
  r.finish();

  require(cfg.tau > 0.0, "tau", "must be > 0");
  require(cfg.grid_points >= 3, "grid_points", "must be >= 3");
  require(cfg.exemption_factor >= 0.0, "exemption_factor", "must be >= 0");
  require(cfg.num_particles >= 2, "num_particles", "must be >= 2");
  require(cfg.max_iter >= 1, "max_iter", "must be >= 1");
  require(cfg.stall_window >= 1, "stall_window", "must be >= 1");
  require(cfg.w1 >= 0.0, "w1", "must be >= 0");
  require(cfg.w2 >= 0.0, "w2", "must be >= 0");
  require(cfg.w1 + cfg.w2 > 0.0, "w2", "w1 + w2 must be > 0");
  require(cfg.run_count >= 1, "run_count", "must be >= 1");
  require(!cfg.output_dir.empty(), "output_dir", "must not be empty");
  for (int k : cfg.particle_counts) require(k >= 2, "particle_counts", "every entry must be >= 2");
  require(!cfg.particle_counts.empty(), "particle_counts", "must not be empty");
  for (double m : cfg.masses) require(m >= 0.1 && m <= 0.7, "masses", "every entry must lie in [0.1, 0.7]");
  require(!cfg.masses.empty(), "masses", "must not be empty");
  for (int k : cfg.grid_sweep_points) require(k >= 3, "grid_sweep_points", "every entry must be >= 3");
  require(!cfg.grid_sweep_points.empty(), "grid_sweep_points", "must not be empty");
  require(!cfg.angles.empty(), "angles", "must not be empty");
  for (double a : cfg.angles) require(std::isfinite(a), "angles", "entries must be finite");
  require(cfg.sim_duration > 0.0, "sim_duration", "must be > 0");
  for (double g : cfg.gain) require(std::isfinite(g), "gain", "entries must be finite");
  require(!cfg.mass || *cfg.mass > 0.0, "plant.mass", "must be > 0");
  require(!cfg.length || *cfg.length > 0.0, "plant.length", "must be > 0");
  require(!cfg.friction || *cfg.friction >= 0.0, "plant.friction", "must be >= 0");
  require(!cfg.u_max || *cfg.u_max > 0.0, "plant.u_max", "must be > 0");
  require(cfg.roa_lower.size() == cfg.roa_upper.size(), "plant.roa_upper", "must match plant.roa_lower in length");
  require(cfg.gain_lower.size() == cfg.gain_upper.size(), "plant.gain_upper", "must match plant.gain_lower in length");
  require(cfg.neural.epsilon > 0.0, "neural.epsilon", "must be > 0");
  require(cfg.neural.train.learning_rate > 0.0, "neural.learning_rate", "must be > 0");
  require(cfg.neural.train.epochs >= 0, "neural.epochs", "must be >= 0");
  require(cfg.neural.train.batch_size >= 1, "neural.batch_size", "must be >= 1");
  require(cfg.neural.train.level_multiplier > 1.0, "neural.level_multiplier", "must be > 1");
  require(!cfg.neural.hidden.empty(), "neural.hidden", "must not be empty");

  // Plant-dependent checks.
  const bool is_pendulum = cfg.benchmark == "pendulum_a" || cfg.benchmark == "pendulum_b";
  require(is_pendulum || (!cfg.mass && !cfg.length && !cfg.friction), "plant",
          "mass/length/friction apply to pendulum benchmarks only");
  const BenchmarkSpec spec = build_benchmark(cfg);
  const int n = spec.plant.state_dim;
  const int m = spec.plant.input_dim;
  require(cfg.gain.empty() || static_cast<int>(cfg.gain.size()) == n * m, "gain",
          "expected " + std::to_string(n * m) + " entries");
  int prev = n;
  for (int h : cfg.neural.hidden) {
    require(h >= prev, "neural.hidden", "layer widths must not shrink (input dimension " + std::to_string(n) + ")");
    prev = h;
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["benchmark"] = benchmark;
  j["tau"] = tau;
  j["grid_points"] = grid_points;
  j["candidate"] = to_string(candidate);
  j["step_map"] = step_map == StepKind::Nonlinear ? "nonlinear" : "linear";
  j["exemption_factor"] = exemption_factor;
  j["num_particles"] = num_particles;
  j["max_iter"] = max_iter;
  j["stall_window"] = stall_window;
  j["parameter_pair"] = parameter_pair;
  j["seed"] = seed;
  j["w1"] = w1;
  j["w2"] = w2;
  j["run_count"] = run_count;
  j["output_dir"] = output_dir;
  j["particle_counts"] = particle_counts;
  j["masses"] = masses;
  j["grid_sweep_points"] = grid_sweep_points;
  j["angles"] = angles;
  j["sim_duration"] = sim_duration;
  if (!gain.empty()) j["gain"] = gain;
  nlohmann::ordered_json plant = nlohmann::ordered_json::object();
  if (mass) plant["mass"] = *mass;
  if (length) plant["length"] = *length;
  if (friction) plant["friction"] = *friction;
  if (u_max) plant["u_max"] = *u_max;
  if (!roa_lower.empty()) plant["roa_lower"] = roa_lower;
  if (!roa_upper.empty()) plant["roa_upper"] = roa_upper;
  if (!gain_lower.empty()) plant["gain_lower"] = gain_lower;
  if (!gain_upper.empty()) plant["gain_upper"] = gain_upper;
  if (!plant.empty()) j["plant"] = plant;
  j["neural"] = {{"hidden", neural.hidden},
                 {"epsilon", neural.epsilon},
                 {"learning_rate", neural.train.learning_rate},
                 {"epochs", neural.train.epochs},
                 {"batch_size", neural.train.batch_size},
                 {"level_multiplier", neural.train.level_multiplier},
                 {"warm_start", neural.warm_start}};
  return j;
}

BenchmarkSpec build_benchmark(const RunConfig& cfg) {
  BenchmarkSpec spec = benchmark_by_name(cfg.benchmark);
  if (spec.pendulum && (cfg.mass || cfg.length || cfg.friction || cfg.u_max)) {
    PendulumParams p = *spec.pendulum;
    if (cfg.mass) p.mass = *cfg.mass;
    if (cfg.length) p.length = *cfg.length;
    if (cfg.friction) p.friction = *cfg.friction;
    if (cfg.u_max) p.u_max = *cfg.u_max;
    BenchmarkSpec custom = pendulum(p);
    custom.name = spec.name;
    custom.gain_lower = spec.gain_lower;
    custom.gain_upper = spec.gain_upper;
    spec = std::move(custom);
  } else if (cfg.u_max) {
    spec.plant.input_limit = *cfg.u_max;
  }
  if (!cfg.roa_lower.empty()) {
    const auto n = static_cast<std::size_t>(spec.plant.state_dim);
    require(cfg.roa_lower.size() == n, "plant.roa_lower", "expected " + std::to_string(n) + " entries");
    spec.roa_lower = Eigen::Map<const Vec>(cfg.roa_lower.data(), static_cast<Eigen::Index>(n));
    spec.roa_upper = Eigen::Map<const Vec>(cfg.roa_upper.data(), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      require(cfg.roa_lower[i] < 0.0 && cfg.roa_upper[i] > 0.0, "plant.roa_lower",
              "the box must contain the equilibrium strictly");
  }
  if (!cfg.gain_lower.empty()) {
    const auto d = static_cast<std::size_t>(spec.gain_lower.size());
    require(cfg.gain_lower.size() == d, "plant.gain_lower", "expected " + std::to_string(d) + " entries");
    for (std::size_t i = 0; i < d; ++i)
      require(cfg.gain_lower[i] < cfg.gain_upper[i], "plant.gain_lower", "must be < plant.gain_upper componentwise");
    spec.gain_lower = Eigen::Map<const Vec>(cfg.gain_lower.data(), static_cast<Eigen::Index>(d));
    spec.gain_upper = Eigen::Map<const Vec>(cfg.gain_upper.data(), static_cast<Eigen::Index>(d));
  }
  return spec;
}

ExperimentSettings build_settings(const RunConfig& cfg) {
  ExperimentSettings s;
  s.tau = cfg.tau;
  s.grid_points = cfg.grid_points;
  s.candidate = cfg.candidate;
  s.neural = cfg.neural;
  s.neural.train.seed = derive_seed(cfg.seed, 0x4e4e);
  s.exemption_factor = cfg.exemption_factor;
  s.max_iter = cfg.max_iter;
  s.stall_window = cfg.stall_window;
  s.w1 = cfg.w1;
  s.w2 = cfg.w2;
  s.run_count = cfg.run_count;
  s.seed = cfg.seed;
  if (cfg.parameter_pair == "a") s.pair = kPairA;
  if (cfg.parameter_pair == "b") s.pair = kPairB;
  return s;
}

}  // namespace roaforge
