#include "v2xsim/output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace v2xsim::output {

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ofstream open(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

}  // namespace

void write_sinr_samples(std::ostream& out, const std::vector<engine::DropMetrics>& drops) {
  out << "drop,rsu,vehicle,tti,sinr_db\n";
  for (const auto& d : drops) {
    for (const auto& s : d.sinr_samples) {
      out << s.drop << ',' << s.rsu << ',' << s.vehicle << ',' << s.tti << ','
          << format_number(s.sinr_db) << '\n';
    }
  }
}

void write_vehicle_summary(std::ostream& out, const std::vector<engine::DropMetrics>& drops) {
  out << "drop,vehicle,rsu,mean_thr_kbps,outage,achieved_target\n";
  for (const auto& d : drops) {
    for (const auto& v : d.vehicles) {
      out << v.drop << ',' << v.vehicle << ',' << v.rsu << ',' << format_number(v.mean_thr_kbps)
          << ',' << (v.outage ? 1 : 0) << ',' << (v.achieved_target ? 1 : 0) << '\n';
    }
  }
}

void write_results_table(std::ostream& out, const std::vector<engine::ResultsRow>& rows) {
  out << "config_label,receiver,target_prob,cell_edge_kbps,outage_frac,mean_vehicles_per_rsu\n";
  for (const auto& r : rows) {
    out << quote_if_needed(r.config_label) << ',' << quote_if_needed(r.receiver) << ','
        << format_number(r.target_prob) << ',' << format_number(r.cell_edge_kbps) << ','
        << format_number(r.outage_frac) << ',' << format_number(r.mean_vehicles_per_rsu) << '\n';
  }
}

void write_batch(const std::string& dir, const std::vector<engine::ExperimentResult>& results) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<engine::ResultsRow> rows;
  for (const auto& r : results) {
    const fs::path sub = fs::path(dir) / r.spec.label;
    fs::create_directories(sub);
    {
      auto f = open(sub / "sinr_samples.csv");
      write_sinr_samples(f, r.drops);
    }
    {
      auto f = open(sub / "vehicle_summary.csv");
      write_vehicle_summary(f, r.drops);
    }
    {
      auto f = open(sub / "results_table.csv");
      write_results_table(f, {r.row});
    }
    rows.push_back(r.row);
  }
  auto f = open(fs::path(dir) / "results_table.csv");
  write_results_table(f, rows);
}

void print_summary(std::ostream& out, const std::vector<engine::ExperimentResult>& results) {
  out << std::left << std::setw(14) << "config" << std::setw(18) << "receiver" << std::right
      << std::setw(12) << "P(target)" << std::setw(14) << "edge kb/s" << std::setw(12)
      << "outage" << std::setw(14) << "veh/RSU" << '\n';
  for (const auto& r : results) {
    const auto& row = r.row;
    out << std::left << std::setw(14) << row.config_label << std::setw(18) << row.receiver
        << std::right << std::setw(12) << format_number(row.target_prob) << std::setw(14)
        << format_number(row.cell_edge_kbps) << std::setw(12) << format_number(row.outage_frac)
        << std::setw(14) << format_number(row.mean_vehicles_per_rsu) << '\n';
  }
}

}  // namespace v2xsim::output
