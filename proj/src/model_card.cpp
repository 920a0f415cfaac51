#include "mtjfp/model_card.hpp"

#include "mtjfp/error.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mtjfp {

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& s, int line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw Error(Errc::Config, "deck line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

const std::vector<std::string>& fixed_keys() {
  static const std::vector<std::string> keys = {"msat_a_per_m", "volume_m3", "alpha",
                                                "hk_eff_a_per_m", "delta", "temp_k",
                                                "pol_p", "eps_prime"};
  return keys;
}

}  // namespace

std::optional<double> ModelCard::cf_for(double target) const {
  for (const auto& [t, c] : cf) {
    if (t == target) return c;
  }
  return std::nullopt;
}

bool ModelCard::operator==(const ModelCard& o) const {
  const auto& a = device;
  const auto& b = o.device;
  return a.m_s == b.m_s && a.volume == b.volume && a.alpha == b.alpha && a.h_k_eff == b.h_k_eff &&
         a.delta == b.delta && a.temperature == b.temperature &&
         a.polarization == b.polarization && a.eps_prime == b.eps_prime && cf == o.cf &&
         provenance == o.provenance;
}

std::string format_target(double target) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, target);
  return std::string(buf, ptr);
}

std::string cf_key(double target) { return "cf_wer_" + format_target(target); }

ModelCard emit_model_card(const DeviceParams& params,
                          const std::vector<std::pair<double, double>>& cf_map,
                          const std::vector<double>& requested_targets,
                          std::map<std::string, std::string> provenance) {
  ModelCard card;
  card.device = params.inputs();
  card.device.delta = params.delta();
  std::vector<std::string> missing;
  for (double t : requested_targets) {
    bool found = false;
    for (const auto& [ct, c] : cf_map) {
      if (ct == t) {
        card.cf.emplace_back(ct, c);
        found = true;
        break;
      }
    }
    if (!found) missing.push_back(format_target(t));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(Errc::IncompleteCalibration, "no c_f for WER target(s) " + list);
  }
  card.provenance = std::move(provenance);
  card.provenance.emplace("tool_version", kToolVersion);
  return card;
}

std::string serialize_deck(const ModelCard& card) {
  std::ostringstream os;
  os << "# mtjfp model card\n";
  for (const auto& [k, v] : card.provenance) os << "# " << k << ": " << v << "\n";
  const auto& d = card.device;
  const double delta = d.delta ? *d.delta
                               : barrier_delta(d.m_s, d.h_k_eff, d.volume, d.temperature);
  const double values[] = {d.m_s,        d.volume,        d.alpha,      d.h_k_eff,
                           delta,        d.temperature,   d.polarization, d.eps_prime};
  for (std::size_t k = 0; k < fixed_keys().size(); ++k) {
    os << fixed_keys()[k] << " = " << g17(values[k]) << "\n";
  }
  for (const auto& [t, c] : card.cf) os << cf_key(t) << " = " << g17(c) << "\n";
  return os.str();
}

ModelCard parse_deck(const std::string& text) {
  ModelCard card;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  std::size_t next_fixed = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s[0] == '#') {
      const std::string body = trim(s.substr(1));
      const auto colon = body.find(':');
      if (colon != std::string::npos && body.find(' ') > colon) {
        card.provenance[body.substr(0, colon)] = trim(body.substr(colon + 1));
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::Config, "deck line " + std::to_string(line) + ": expected 'name = value'");
    }
    const std::string key = trim(s.substr(0, eq));
    const double value = parse_number(trim(s.substr(eq + 1)), line);
    if (next_fixed < fixed_keys().size()) {
      if (key != fixed_keys()[next_fixed]) {
        throw Error(Errc::Config, "deck line " + std::to_string(line) + ": expected key '" +
                                      fixed_keys()[next_fixed] + "', found '" + key + "'");
      }
      auto& d = card.device;
      switch (next_fixed) {
        case 0: d.m_s = value; break;
        case 1: d.volume = value; break;
        case 2: d.alpha = value; break;
        case 3: d.h_k_eff = value; break;
        case 4: d.delta = value; break;
        case 5: d.temperature = value; break;
        case 6: d.polarization = value; break;
        case 7: d.eps_prime = value; break;
        default: break;
      }
      ++next_fixed;
      continue;
    }
    if (key.rfind("cf_wer_", 0) != 0) {
      throw Error(Errc::Config, "deck line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
    const double target = parse_number(key.substr(7), line);
    card.cf.emplace_back(target, value);
  }
  if (next_fixed < fixed_keys().size()) {
    throw Error(Errc::Config, "deck ends before key '" + fixed_keys()[next_fixed] + "'");
  }
  return card;
}

ModelCard read_deck(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Config, "cannot open deck '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_deck(os.str());
}

void write_deck(const std::string& path, const ModelCard& card) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Config, "cannot write deck '" + path + "'");
  out << serialize_deck(card);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mtjfp
