#include "mtjfp/config.hpp"

#include "mtjfp/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace mtjfp {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(Errc::Config, path + ": " + what);
}

// A JSON object whose keys must all be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  const json* raw(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string at(const std::string& key) const { return path_ + "." + key; }

  std::optional<double> number(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) fail(at(key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) fail(at(key), "must be finite");
    return d;
  }
  std::optional<double> positive(const std::string& key) {
    auto d = number(key);
    if (d && !(*d > 0.0)) fail(at(key), "must be > 0");
    return d;
  }
  std::optional<std::uint64_t> count(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer() || v->get<long long>() < 0) {
      fail(at(key), "expected a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }
  std::optional<std::string> string(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) fail(at(key), "expected a string");
    return v->get<std::string>();
  }
  std::optional<std::vector<double>> numbers(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) fail(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v->size(); ++k) {
      if (!(*v)[k].is_number()) fail(at(key) + "[" + std::to_string(k) + "]", "expected a number");
      out.push_back((*v)[k].get<double>());
    }
    return out;
  }
  std::optional<Section> object(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    return Section(*v, at(key));
  }
  const json& value() const { return j_; }
  const std::string& path() const { return path_; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(at(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

DeviceInputs parse_device(Section s) {
  DeviceInputs d;
  auto req = [&](const std::string& key) {
    auto v = s.positive(key);
    if (!v) fail(s.at(key), "required key missing");
    return *v;
  };
  d.m_s = req("msat_a_per_m");
  d.alpha = req("alpha");
  d.h_k_eff = req("hk_eff_a_per_m");
  const auto vol = s.positive("volume_m3");
  const auto dia = s.positive("diameter_m");
  const auto thk = s.positive("thickness_m");
  if (vol && (dia || thk)) fail(s.path(), "give volume_m3 or diameter_m/thickness_m, not both");
  if (vol) {
    d.volume = *vol;
  } else if (dia && thk) {
    d.volume = std::numbers::pi / 4.0 * *dia * *dia * *thk;
  } else {
    fail(s.at("volume_m3"), "required key missing (or diameter_m and thickness_m)");
  }
  if (auto v = s.positive("delta")) d.delta = *v;
  if (auto v = s.positive("temp_k")) d.temperature = *v;
  if (auto v = s.positive("pol_p")) d.polarization = *v;
  if (auto v = s.number("eps_prime")) d.eps_prime = *v;
  if (auto v = s.numbers("m_p")) {
    if (v->size() != 3) fail(s.at("m_p"), "expected 3 components");
    d.m_p = Vec3((*v)[0], (*v)[1], (*v)[2]);
  }
  s.finish();
  try {
    DeviceParams check(d);
  } catch (const Error& e) {
    fail(s.path(), e.detail());
  }
  return d;
}

void parse_drive(Section s, DriveConfig& d) {
  d.current_a = s.number("current_a");
  d.i_norm = s.number("i");
  if (d.current_a && d.i_norm) fail(s.path(), "give current_a or i, not both");
  if (auto v = s.number("h_ext_z_a_per_m")) d.h_ext_z = *v;
  d.pulse_s = s.positive("pulse_s");
  d.pulse_tau = s.positive("pulse_tau");
  if (d.pulse_s && d.pulse_tau) fail(s.path(), "give pulse_s or pulse_tau, not both");
  s.finish();
}

void parse_solver(Section s, SolverSettings& o) {
  if (auto v = s.string("kind")) {
    if (*v != "fvm" && *v != "spectral") fail(s.at("kind"), "expected \"fvm\" or \"spectral\"");
    o.kind = parse_solver_kind(*v);
  }
  if (auto v = s.count("cells")) {
    if (*v < 2) fail(s.at("cells"), "must be >= 2");
    o.cells = *v;
  }
  if (auto v = s.string("grading")) {
    try {
      o.grading = parse_grading(*v);
    } catch (const Error& e) {
      fail(s.at("grading"), e.detail());
    }
  }
  if (auto v = s.count("order")) {
    if (*v < 2) fail(s.at("order"), "must be >= 2");
    o.order = static_cast<int>(*v);
  }
  if (auto v = s.number("dtau")) {
    if (*v < 0.0) fail(s.at("dtau"), "must be >= 0");
    o.dtau = *v;
  }
  if (auto v = s.number("theta_weight")) {
    if (*v < 0.5 || *v > 1.0) fail(s.at("theta_weight"), "must lie in [0.5, 1]");
    o.theta_weight = *v;
  }
  if (auto v = s.number("relax_s")) {
    if (*v < 0.0) fail(s.at("relax_s"), "must be >= 0");
    o.relax_time = *v;
  }
  s.finish();
}

void parse_sweep(Section s, SweepConfig& o) {
  if (auto v = s.numbers("currents_a")) o.currents_a = *v;
  if (auto v = s.numbers("pulses_s")) o.pulses_s = *v;
  if (auto v = s.numbers("read_currents_a")) o.read_currents_a = *v;
  if (auto v = s.numbers("t_read_s")) o.t_read_s = *v;
  for (double t : o.pulses_s) {
    if (!(t > 0.0)) fail(s.at("pulses_s"), "pulse widths must be > 0");
  }
  for (double t : o.t_read_s) {
    if (!(t > 0.0)) fail(s.at("t_read_s"), "read pulse widths must be > 0");
  }
  if (auto v = s.count("samples")) {
    if (*v < 1) fail(s.at("samples"), "must be >= 1");
    o.samples = *v;
  }
  s.finish();
}

void parse_fit(Section s, FitConfig& o) {
  if (auto v = s.count("seed")) o.seed = *v;
  if (auto v = s.count("hops")) o.budget.hops = static_cast<int>(*v);
  if (auto v = s.count("max_evaluations")) {
    if (*v < 1) fail(s.at("max_evaluations"), "must be >= 1");
    o.budget.max_evaluations = *v;
  }
  if (auto v = s.count("local_iterations")) o.budget.local_iterations = static_cast<int>(*v);
  if (auto v = s.number("target_loss")) o.budget.target_loss = *v;
  if (auto v = s.positive("step_sigma")) o.budget.step_sigma = *v;
  if (auto v = s.number("temperature")) {
    if (*v < 0.0) fail(s.at("temperature"), "must be >= 0");
    o.budget.temperature = *v;
  }
  if (auto v = s.string("weights")) {
    if (*v == "uniform") {
      o.weights = WeightPreset::Uniform;
    } else if (*v == "inverse-time") {
      o.weights = WeightPreset::InverseTime;
    } else {
      fail(s.at("weights"), "expected \"uniform\" or \"inverse-time\"");
    }
  }
  if (auto v = s.count("order")) {
    if (*v < 2) fail(s.at("order"), "must be >= 2");
    o.order = static_cast<int>(*v);
  }
  if (auto v = s.number("span")) {
    if (!(*v > 1.0)) fail(s.at("span"), "must be > 1");
    o.span = *v;
  }
  if (auto f = s.object("free")) {
    const auto& names = parameter_names();
    for (auto it = f->value().begin(); it != f->value().end(); ++it) {
      const std::string& name = it.key();
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        fail(f->at(name), "unknown parameter");
      }
      Section p = *f->object(name);
      FitParameter fp;
      fp.name = name;
      const auto lo = p.number("lower");
      const auto hi = p.number("upper");
      if (!lo || !hi) fail(p.path(), "lower and upper are required");
      fp.lower = *lo;
      fp.upper = *hi;
      if (auto sc = p.string("scale")) {
        if (*sc == "log") {
          fp.scale = ParamScale::Log;
        } else if (*sc == "linear") {
          fp.scale = ParamScale::Linear;
        } else {
          fail(p.at("scale"), "expected \"log\" or \"linear\"");
        }
      }
      p.finish();
      o.free.push_back(fp);
    }
    FitSpace check{o.free};
    try {
      check.validate();
    } catch (const Error& e) {
      fail(f->path(), e.detail());
    }
  }
  if (const json* v = s.raw("frozen")) {
    if (!v->is_array()) fail(s.at("frozen"), "expected an array of names");
    for (const auto& e : *v) {
      if (!e.is_string()) fail(s.at("frozen"), "expected an array of names");
      o.frozen.push_back(e.get<std::string>());
    }
  }
  s.finish();
}

void parse_sllgs(Section s, SllgsConfig& o) {
  if (auto v = s.number("dt_s")) {
    if (*v < 0.0) fail(s.at("dt_s"), "must be >= 0");
    o.dt_s = *v;
  }
  if (auto v = s.count("walks")) {
    if (*v < 1) fail(s.at("walks"), "must be >= 1");
    o.walks = *v;
  }
  if (auto v = s.count("seed")) o.seed = *v;
  s.finish();
}

void parse_calibrate(Section s, CalibrateConfig& o) {
  if (auto v = s.numbers("targets")) {
    for (double t : *v) {
      if (!(t > 0.0 && t < 1.0)) fail(s.at("targets"), "targets must lie in (0, 1)");
    }
    o.targets = *v;
  }
  o.current_a = s.number("current_a");
  o.i_norm = s.number("i");
  if (o.current_a && o.i_norm) fail(s.path(), "give current_a or i, not both");
  if (auto v = s.positive("rel_tol")) o.rel_tol = *v;
  s.finish();
}

void parse_output(Section s, OutputConfig& o) {
  if (auto v = s.string("path")) o.path = *v;
  if (auto v = s.count("decimation")) o.decimation = *v;
  s.finish();
}

}  // namespace

Grading parse_grading(const std::string& s) {
  if (s == "uniform-theta") return Grading::UniformTheta;
  if (s == "uniform-cos") return Grading::UniformCos;
  if (s == "tanh") return Grading::TanhRefined;
  throw Error(Errc::InvalidArgument,
              "unknown grading '" + s + "' (uniform-theta, uniform-cos, tanh)");
}

const char* to_string(Grading g) {
  switch (g) {
    case Grading::UniformTheta: return "uniform-theta";
    case Grading::UniformCos: return "uniform-cos";
    case Grading::TanhRefined: return "tanh";
  }
  return "?";
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::Config, std::string("$: invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  Section root(doc, "$");
  if (auto s = root.object("device")) cfg.device = parse_device(*s);
  if (auto s = root.object("drive")) parse_drive(*s, cfg.drive);
  if (auto s = root.object("solver")) parse_solver(*s, cfg.solver);
  if (auto s = root.object("sweep")) parse_sweep(*s, cfg.sweep);
  if (auto s = root.object("fit")) parse_fit(*s, cfg.fit);
  if (auto s = root.object("sllgs")) parse_sllgs(*s, cfg.sllgs);
  if (auto s = root.object("calibrate")) parse_calibrate(*s, cfg.calibrate);
  if (auto s = root.object("output")) parse_output(*s, cfg.output);
  if (auto v = root.count("jobs")) cfg.jobs = static_cast<unsigned>(*v);
  root.finish();
  cfg.solver.jobs = cfg.jobs;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Config, "cannot open config '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  try {
    return parse_config(os.str());
  } catch (const Error& e) {
    throw Error(Errc::Config, path + ": " + e.detail());
  }
}

DeviceParams RunConfig::device_params() const {
  if (!device) throw Error(Errc::Config, "$.device: section missing");
  return DeviceParams(*device);
}

double RunConfig::drive_current(const DeviceParams& params) const {
  if (drive.current_a) return *drive.current_a;
  if (drive.i_norm) {
    const NormalizedDrive unit = normalize(params, 1.0);
    return *drive.i_norm / unit.i;
  }
  throw Error(Errc::Config, "$.drive.current_a: required key missing (or $.drive.i)");
}

double RunConfig::pulse_length(const DeviceParams& params) const {
  if (drive.pulse_s) return *drive.pulse_s;
  const double tau_d = normalize(params, 0.0).tau_d;
  return (drive.pulse_tau ? *drive.pulse_tau : 10.0) * tau_d;
}

FitSpace RunConfig::fit_space() const {
  const DeviceInputs center = device_params().inputs();
  FitSpace space;
  if (fit.free.empty()) {
    space = FitSpace::defaults(center, fit.span);
  } else {
    space.params = fit.free;
  }
  for (const auto& name : fit.frozen) {
    bool found = false;
    for (auto& p : space.params) {
      if (p.name == name) {
        p.frozen = true;
        found = true;
      }
    }
    if (!found) throw Error(Errc::Config, "$.fit.frozen: '" + name + "' is not a fit parameter");
  }
  return space;
}

std::string device_json(const DeviceInputs& in, int indent) {
  json d = json::object();
  d["msat_a_per_m"] = in.m_s;
  d["volume_m3"] = in.volume;
  d["alpha"] = in.alpha;
  d["hk_eff_a_per_m"] = in.h_k_eff;
  if (in.delta) d["delta"] = *in.delta;
  d["temp_k"] = in.temperature;
  d["pol_p"] = in.polarization;
  d["eps_prime"] = in.eps_prime;
  d["m_p"] = {in.m_p.x(), in.m_p.y(), in.m_p.z()};
  json root;
  root["device"] = d;
  return root.dump(indent) + "\n";
}

}  // namespace mtjfp
