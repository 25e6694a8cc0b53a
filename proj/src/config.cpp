#include "v2xsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace v2xsim {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string where(const std::string& section, const std::string& key) {
  return section + "." + key;
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid number for " + where(section, key) + ": '" + v + "'");
  }
  return out;
}

long to_long(const std::string& section, const std::string& key, const std::string& v) {
  long out = 0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid integer for " + where(section, key) + ": '" + v + "'");
  }
  return out;
}

int to_int(const std::string& section, const std::string& key, const std::string& v) {
  return static_cast<int>(to_long(section, key, v));
}

bool to_bool(const std::string& section, const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("invalid switch for " + where(section, key) + ": '" + v + "' (use on|off)");
}

std::string format_g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

}  // namespace

void apply_setting(SimConfig& c, const std::string& section, const std::string& key,
                   const std::string& value) {
  const std::string& s = section;
  const std::string& k = key;
  const std::string& v = value;
  if (s == "scenario") {
    if (k == "lanes") c.scenario.num_lanes = to_int(s, k, v);
    else if (k == "lane_width_m") c.scenario.lane_width_m = to_double(s, k, v);
    else if (k == "rsu_spacing_m") c.scenario.rsu_spacing_m = to_double(s, k, v);
    else if (k == "rsu_offset_m") c.scenario.rsu_offset_m = to_double(s, k, v);
    else if (k == "num_rsus") c.scenario.num_rsus = to_int(s, k, v);
    else if (k == "speed_kmh") c.scenario.speed_kmh = to_double(s, k, v);
    else if (k == "gap_min_m") c.scenario.gap_min_m = to_double(s, k, v);
    else if (k == "gap_max_m") c.scenario.gap_max_m = to_double(s, k, v);
    else if (k == "tx_power_dbm") c.scenario.tx_power_dbm = to_double(s, k, v);
    else throw ConfigError("unknown key " + where(s, k));
  } else if (s == "channel") {
    if (k == "carrier_ghz") c.channel.carrier_ghz = to_double(s, k, v);
    else if (k == "shadowing_sigma_db") c.channel.shadowing_sigma_db = to_double(s, k, v);
    else if (k == "decorr_m") c.channel.decorr_m = to_double(s, k, v);
    else if (k == "num_taps") c.channel.num_taps = to_int(s, k, v);
    else if (k == "delay_spread_us") c.channel.delay_spread_us = to_double(s, k, v);
    else if (k == "tap_decay_db") c.channel.tap_decay_db = to_double(s, k, v);
    else if (k == "noise_figure_db") c.channel.noise_figure_db = to_double(s, k, v);
    else if (k == "num_sinusoids") c.channel.num_sinusoids = to_int(s, k, v);
    else throw ConfigError("unknown key " + where(s, k));
  } else if (s == "phy") {
    if (k == "receiver") {
      if (v == "mrc") c.phy.receiver = phy::ReceiverKind::kMrc;
      else if (v == "lmmse") c.phy.receiver = phy::ReceiverKind::kLmmse;
      else throw ConfigError("invalid value for phy.receiver: '" + v + "' (use mrc|lmmse)");
    } else if (k == "precoding") {
      c.phy.precoding = to_bool(s, k, v);
    } else if (k == "tx_antennas") {
      c.scenario.tx_antennas = to_int(s, k, v);
    } else if (k == "rx_antennas") {
      c.scenario.rx_antennas = to_int(s, k, v);
    } else if (k == "interference") {
      c.phy.interference = to_bool(s, k, v);
    } else {
      throw ConfigError("unknown key " + where(s, k));
    }
  } else if (s == "l2s") {
    if (k == "fer_target") c.l2s.fer_target = to_double(s, k, v);
    else if (k == "fer_slope_per_db") c.l2s.fer_slope_per_db = to_double(s, k, v);
    else if (k == "gamma50_offset_db") c.l2s.gamma50_offset_db = to_double(s, k, v);
    else if (k == "mcs_table_csv") c.l2s.mcs_table_csv = v;
    else throw ConfigError("unknown key " + where(s, k));
  } else if (s == "mac") {
    if (k == "pf_horizon_tti") c.mac.pf_horizon_tti = to_int(s, k, v);
    else if (k == "harq_max_tx") c.mac.harq_max_tx = to_int(s, k, v);
    else if (k == "harq_rtt_ms") c.mac.harq_rtt_ms = to_int(s, k, v);
    else if (k == "harq_processes") c.mac.harq_processes = to_int(s, k, v);
    else if (k == "cqi_period_ms") c.mac.cqi_period_ms = to_int(s, k, v);
    else if (k == "cqi_delay_ms") c.mac.cqi_delay_ms = to_int(s, k, v);
    else if (k == "target_rate_kbps") c.mac.target_rate_kbps = to_double(s, k, v);
    else throw ConfigError("unknown key " + where(s, k));
  } else if (s == "engine") {
    if (k == "num_drops") c.engine.num_drops = to_int(s, k, v);
    else if (k == "ttis_per_drop") c.engine.ttis_per_drop = to_int(s, k, v);
    else if (k == "master_seed") c.engine.master_seed = static_cast<std::uint64_t>(to_long(s, k, v));
    else if (k == "large_scale_interval_ms") c.engine.large_scale_interval_ms = to_int(s, k, v);
    else if (k == "outage_kbps") c.engine.outage_kbps = to_double(s, k, v);
    else if (k == "target_fraction") c.engine.target_fraction = to_double(s, k, v);
    else if (k == "measured_rsus") {
      c.engine.measured_rsus.clear();
      if (v != "middle") {
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
          c.engine.measured_rsus.push_back(to_int(s, k, trim(item)));
        }
      }
    } else {
      throw ConfigError("unknown key " + where(s, k));
    }
  } else {
    throw ConfigError("unknown section [" + s + "]");
  }
}

void SimConfig::validate() const {
  auto rethrow = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(section) + ": " + e.what());
    }
  };
  rethrow("scenario", [&] { scenario.validate(); });
  rethrow("channel", [&] { channel.validate(); });
  rethrow("mac", [&] { mac.validate(); });
  if (phy.precoding && scenario.tx_antennas != 2) {
    throw ConfigError("phy.precoding requires phy.tx_antennas = 2");
  }
  if (!(l2s.fer_target > 0.0 && l2s.fer_target < 1.0)) {
    throw ConfigError("l2s.fer_target must be in (0,1)");
  }
  if (!(l2s.fer_slope_per_db > 0.0)) throw ConfigError("l2s.fer_slope_per_db must be > 0");
  if (engine.num_drops < 1) throw ConfigError("engine.num_drops must be >= 1");
  if (engine.ttis_per_drop < 1) throw ConfigError("engine.ttis_per_drop must be >= 1");
  if (engine.large_scale_interval_ms < 1) {
    throw ConfigError("engine.large_scale_interval_ms must be >= 1");
  }
  if (!(engine.target_fraction > 0.0 && engine.target_fraction <= 1.0)) {
    throw ConfigError("engine.target_fraction must be in (0,1]");
  }
  for (int r : engine.measured_rsus) {
    if (r < 0 || r >= scenario.num_rsus) {
      throw ConfigError("engine.measured_rsus: RSU " + std::to_string(r) + " does not exist");
    }
  }
}

std::vector<int> SimConfig::measured_rsus() const {
  if (!engine.measured_rsus.empty()) return engine.measured_rsus;
  return {scenario.num_rsus / 2};
}

std::string default_config_label(const SimConfig& c) {
  return "[" + format_g(c.scenario.gap_min_m) + " " + format_g(c.scenario.gap_max_m) + "]";
}

std::string receiver_label(const SimConfig& c) {
  std::string out = c.phy.receiver == phy::ReceiverKind::kMrc ? "MRC" : "LMMSE";
  if (c.phy.precoding) out += "+precoding";
  return out;
}

std::string ExperimentSpec::receiver_label() const { return v2xsim::receiver_label(config); }

BatchConfig parse_config(std::istream& in, const std::string& source) {
  struct Pending {
    std::string label;
    std::vector<std::tuple<int, std::string, std::string>> settings;  // line, key, value
  };
  static const std::set<std::string> kSections{"scenario", "channel", "phy", "l2s",
                                               "mac", "engine", "experiments"};
  BatchConfig batch;
  std::vector<Pending> pending;
  std::string section;
  std::string line;
  int line_no = 0;
  auto error = [&](const std::string& msg) {
    return ConfigError(source + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw error("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.rfind("experiments.", 0) == 0) {
        const std::string label = section.substr(std::string("experiments.").size());
        if (label.empty()) throw error("experiment label is empty");
        for (const Pending& p : pending) {
          if (p.label == label) throw error("duplicate experiment label '" + label + "'");
        }
        pending.push_back({label, {}});
      } else if (!kSections.count(section)) {
        throw error("unknown section [" + section + "]");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw error("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw error("empty key");
    if (section.empty()) throw error("key '" + key + "' outside of any section");
    if (section == "experiments") throw error("use [experiments.<label>] sections");
    if (section.rfind("experiments.", 0) == 0) {
      pending.back().settings.emplace_back(line_no, key, value);
      continue;
    }
    try {
      apply_setting(batch.base, section, key, value);
    } catch (const ConfigError& e) {
      throw error(e.what());
    }
  }

  for (const Pending& p : pending) {
    ExperimentSpec spec;
    spec.label = p.label;
    spec.config = batch.base;
    for (const auto& [ln, key, value] : p.settings) {
      line_no = ln;
      try {
        if (key == "config_label") {
          spec.config_label = value;
        } else if (key == "gap_min_m" || key == "gap_max_m") {
          apply_setting(spec.config, "scenario", key, value);
        } else if (key == "receiver" || key == "precoding" || key == "tx_antennas") {
          apply_setting(spec.config, "phy", key, value);
        } else if (const std::size_t dot = key.find('.'); dot != std::string::npos) {
          apply_setting(spec.config, key.substr(0, dot), key.substr(dot + 1), value);
        } else {
          throw ConfigError("unknown experiment key '" + key + "'");
        }
      } catch (const ConfigError& e) {
        throw error(e.what());
      }
    }
    if (spec.config_label.empty()) spec.config_label = default_config_label(spec.config);
    try {
      spec.config.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(source + ": experiment '" + spec.label + "': " + e.what());
    }
    batch.experiments.push_back(std::move(spec));
  }
  if (batch.experiments.empty()) throw ConfigError(source + ": no experiments defined");
  return batch;
}

BatchConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, path);
}

}  // namespace v2xsim
