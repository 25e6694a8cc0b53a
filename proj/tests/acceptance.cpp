// Acceptance checks. Prints one PASS/FAIL line per criterion; exit code 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "v2xsim/cli.hpp"
#include "v2xsim/config.hpp"
#include "v2xsim/engine.hpp"
#include "v2xsim/kernels.hpp"
#include "v2xsim/l2s.hpp"
#include "v2xsim/mac.hpp"
#include "v2xsim/phy.hpp"
#include "v2xsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace v2xsim;
using cd = std::complex<double>;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int failures = 0;

void report(int id, const std::string& name, const Verdict& v) {
  std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << " " << name << ":"
            << v.detail.str() << std::endl;
  if (!v.pass) ++failures;
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

SimConfig with_gaps(double lo, double hi) {
  SimConfig c;
  c.scenario.gap_min_m = lo;
  c.scenario.gap_max_m = hi;
  return c;
}

// ---------------------------------------------------------------- 1, 2

struct Density {
  double lo, hi, expected;
};
const Density kDensities[] = {{38, 116, 135}, {116, 116, 90}, {100, 200, 65}, {200, 300, 40}};

double mean_vehicles_per_rsu(double lo, double hi, int seeds) {
  const SimConfig c = with_gaps(lo, hi);
  double sum = 0.0;
  for (int s = 0; s < seeds; ++s) {
    sum += scenario::vehicles_per_rsu(scenario::deploy(c.scenario, static_cast<std::uint64_t>(s)));
  }
  return sum / seeds;
}

void deployment(double& dense_mean) {
  Verdict v;
  Stopwatch sw;
  for (const Density& d : kDensities) {
    const double m = mean_vehicles_per_rsu(d.lo, d.hi, 100);
    if (d.lo == 38) dense_mean = m;
    v.detail << " [" << d.lo << "," << d.hi << "]=" << fmt(m) << " (want " << d.expected << ")";
    v.require(std::abs(m - d.expected) <= 0.10 * d.expected, "within 10%");
  }
  const double t = sw.seconds();
  v.detail << " time=" << fmt(t, 3) << "s";
  v.require(t < 10.0, "runtime < 10 s");
  report(1, "deployment arithmetic", v);
}

void prb_deficit(double dense_mean) {
  Verdict v;
  const double deficit = dense_mean - 50.0;
  v.detail << " deficit=" << fmt(deficit);
  v.require(std::abs(deficit - 85.0) <= 14.0, "85 +- 14");
  report(2, "PRB deficit", v);
}

// ---------------------------------------------------------------- 3

phy::CVector random_vec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  phy::CVector x(n);
  for (int i = 0; i < n; ++i) x(i) = cd(g(rng), g(rng));
  return x;
}

phy::CMatrix random_mat(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  phy::CMatrix x(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) x(i, j) = cd(g(rng), g(rng));
  }
  return x;
}

std::vector<phy::Interferer> random_interferers(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 6);
  std::uniform_real_distribution<double> pdb(-20.0, 10.0);
  std::vector<phy::Interferer> out(static_cast<std::size_t>(count(rng)));
  for (auto& i : out) {
    i.channel = random_vec(rng, 2);
    i.power = std::pow(10.0, pdb(rng) / 10.0);
  }
  return out;
}

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

void receiver_math() {
  Verdict v;
  Stopwatch sw;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> n0db(-30.0, 10.0);
  long ordering_bad = 0, white_bad = 0, precoder_bad = 0, evaluator_bad = 0;
  const int instances = 10000;
  const int subband = 4;

  for (int trial = 0; trial < instances; ++trial) {
    const double n0 = std::pow(10.0, n0db(rng) / 10.0);
    // 2x1: one transmit antenna.
    {
      const phy::CVector h = random_vec(rng, 2);
      const auto intf = random_interferers(rng);
      const phy::CMatrix cov = phy::interference_covariance(intf, n0, 2);
      const double l = phy::lmmse_sinr(h, cov, 1.0);
      const double m = phy::mrc_sinr(h, intf, n0, 1.0);
      if (l < m * (1.0 - 1e-9)) ++ordering_bad;
      const double lw = phy::lmmse_sinr(h, phy::interference_covariance({}, n0, 2), 1.0);
      if (!rel_close(lw, phy::mrc_sinr(h, {}, n0, 1.0), 1e-9)) ++white_bad;
    }
    // 2x2: every codeword, then codebook search over a subband.
    {
      std::vector<phy::CMatrix> hs, covs;
      std::vector<std::vector<phy::Interferer>> intfs;
      for (int p = 0; p < subband; ++p) {
        hs.push_back(random_mat(rng, 2, 2));
        intfs.push_back(random_interferers(rng));
        covs.push_back(phy::interference_covariance(intfs.back(), n0, 2));
      }
      for (int c = 0; c < 4; ++c) {
        const phy::CVector he = hs[0] * phy::codebook()[c];
        const double l = phy::lmmse_sinr(he, covs[0], 1.0);
        const double m = phy::mrc_sinr(he, intfs[0], n0, 1.0);
        if (l < m * (1.0 - 1e-9)) ++ordering_bad;
        const double lw = phy::lmmse_sinr(he, phy::interference_covariance({}, n0, 2), 1.0);
        if (!rel_close(lw, phy::mrc_sinr(he, {}, n0, 1.0), 1e-9)) ++white_bad;
      }
      for (auto kind : {phy::ReceiverKind::kLmmse, phy::ReceiverKind::kMrc}) {
        int best = -1;
        double best_sum = 0.0;
        for (int c = 0; c < 4; ++c) {
          double sum = 0.0;
          for (int p = 0; p < subband; ++p) {
            const phy::CVector he = hs[p] * phy::codebook()[c];
            sum += kind == phy::ReceiverKind::kLmmse ? phy::lmmse_sinr(he, covs[p], 1.0)
                                                     : phy::mrc_sinr(he, intfs[p], n0, 1.0);
          }
          if (best < 0 || sum > best_sum) {
            best = c;
            best_sum = sum;
          }
        }
        if (phy::select_precoder(hs, covs, 1.0, kind) != best) ++precoder_bad;
      }
    }
  }

  // The production path: per-PRB evaluator over a random three-RSU channel set.
  phy::SinrEvaluator eval(kernels::active());
  const int prbs = 8;
  std::vector<double> lm(prbs), mr(prbs), sel(prbs), tmp(prbs);
  std::vector<std::uint8_t> cw(3 * prbs);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  std::uniform_int_distribution<int> cwd(0, 3);
  for (int trial = 0; trial < 2000; ++trial) {
    for (int tx : {1, 2}) {
      phy::VehicleChannels ch;
      ch.reset(3, tx, prbs);
      for (double& x : ch.re) x = g(rng);
      for (double& x : ch.im) x = g(rng);
      ch.rx_power = {std::pow(10.0, n0db(rng) / 10.0), std::pow(10.0, n0db(rng) / 10.0),
                     std::pow(10.0, n0db(rng) / 10.0)};
      ch.present = {true, true, true};
      for (auto& c : cw) c = static_cast<std::uint8_t>(cwd(rng));
      const double n0 = std::pow(10.0, n0db(rng) / 10.0);
      for (int c = 0; c < (tx == 2 ? 4 : 1); ++c) {
        eval.evaluate(ch, 0, c, cw, n0, phy::ReceiverKind::kLmmse, lm);
        eval.evaluate(ch, 0, c, cw, n0, phy::ReceiverKind::kMrc, mr);
        for (int p = 0; p < prbs; ++p) {
          if (lm[p] < mr[p] * (1.0 - 1e-9)) ++ordering_bad;
        }
      }
      if (tx == 2) {
        for (auto kind : {phy::ReceiverKind::kLmmse, phy::ReceiverKind::kMrc}) {
          int best = -1;
          double best_mean = 0.0;
          for (int c = 0; c < 4; ++c) {
            eval.evaluate(ch, 0, c, cw, n0, kind, tmp);
            const double mean = std::accumulate(tmp.begin(), tmp.end(), 0.0) / prbs;
            if (best < 0 || mean > best_mean) {
              best = c;
              best_mean = mean;
            }
          }
          if (eval.select_and_evaluate(ch, 0, cw, n0, kind, sel) != best) ++evaluator_bad;
        }
      }
    }
  }

  const double t = sw.seconds();
  v.detail << " lmmse<mrc=" << ordering_bad << " white_mismatch=" << white_bad
           << " precoder_mismatch=" << precoder_bad << " evaluator_mismatch=" << evaluator_bad
           << " time=" << fmt(t, 3) << "s";
  v.require(ordering_bad == 0, "LMMSE >= MRC");
  v.require(white_bad == 0, "LMMSE == MRC in white noise");
  v.require(precoder_bad == 0 && evaluator_bad == 0, "precoder equals brute force");
  v.require(t < 30.0, "runtime < 30 s");
  report(3, "receiver math", v);
}

// ---------------------------------------------------------------- 4, 5

const l2s::LinkToSystem& l2s_std() {
  static const l2s::LinkToSystem instance(l2s::McsTable::standard());
  return instance;
}

l2s::CqiReport flat_report(long tti, int cqi, int prbs = 50) {
  l2s::CqiReport r;
  r.generated_tti = tti;
  r.cqi.assign(static_cast<std::size_t>(prbs), static_cast<std::uint8_t>(cqi));
  return r;
}

mac::SinrSource constant_sinr(double s) {
  return [s](int, int, std::span<double> out) { std::fill(out.begin(), out.end(), s); };
}

struct Cell {
  mac::RsuScheduler sched;
  mac::TrafficState traffic;
  std::vector<mac::CqiFeedback> feedback;
  Rng rng{99};

  Cell(int vehicles, const mac::MacConfig& c)
      : sched(0, c, l2s_std()), traffic(vehicles, c.arrival_bits_per_ms()),
        feedback(static_cast<std::size_t>(vehicles)) {
    for (int v = 0; v < vehicles; ++v) sched.attach(v);
  }
};

void miesm_fer() {
  Verdict v;
  Stopwatch sw;
  const auto& l2s = l2s_std();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> db(-10.0, 35.0);
  std::uniform_int_distribution<int> len(1, 50);
  std::uniform_int_distribution<int> cqi_d(1, 15);

  double worst_identity = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double s = std::pow(10.0, db(rng) / 10.0);
    const std::vector<double> alloc(static_cast<std::size_t>(len(rng)), s);
    const double e = l2s.effective_sinr(alloc, cqi_d(rng));
    worst_identity = std::max(worst_identity, std::abs(e / s - 1.0));
  }

  long monotone_bad = 0;
  std::uniform_real_distribution<double> bump(0.01, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> alloc(static_cast<std::size_t>(len(rng)));
    for (double& x : alloc) x = std::pow(10.0, db(rng) / 10.0);
    const int cqi = cqi_d(rng);
    const double base = l2s.effective_sinr(alloc, cqi);
    std::uniform_int_distribution<std::size_t> pick(0, alloc.size() - 1);
    const std::size_t k = pick(rng);
    const double step = std::pow(10.0, bump(rng) / 10.0);
    std::vector<double> up = alloc, down = alloc;
    up[k] *= step;
    down[k] /= step;
    if (l2s.effective_sinr(up, cqi) < base) ++monotone_bad;
    if (l2s.effective_sinr(down, cqi) > base) ++monotone_bad;
  }

  // Decoding through the MAC: single-shot TBs at the midpoint SINR of their MCS.
  mac::MacConfig mc;
  mc.harq_max_tx = 1;
  Cell cell(1, mc);
  const int cqi = 7;
  cell.feedback[0].push(flat_report(0, cqi));
  const double gamma = std::pow(10.0, l2s.table().at(cqi).gamma50_db / 10.0);
  long trials = 0, errors = 0;
  for (long t = 2; trials < 10000; ++t) {
    cell.traffic.buffer_bits[0] += 100000;
    cell.traffic.arrived_bits[0] += 100000;
    const auto d = cell.sched.schedule_tti(t, cell.traffic, cell.feedback);
    if (d.tbs.empty() || d.tbs[0].mcs != cqi) {
      v.require(false, "MAC scheduled the reported MCS");
      break;
    }
    for (const auto& o : cell.sched.transmit_and_ack(d, cell.traffic, constant_sinr(gamma), cell.rng)) {
      ++trials;
      errors += o.ack ? 0 : 1;
    }
  }
  const double fer = static_cast<double>(errors) / static_cast<double>(std::max(1L, trials));

  const double t = sw.seconds();
  v.detail << " identity_err=" << worst_identity << " monotone_violations=" << monotone_bad
           << " fer_at_gamma50=" << fmt(fer) << " (" << trials << " trials) time=" << fmt(t, 3)
           << "s";
  v.require(worst_identity <= 1e-6, "identity 1e-6");
  v.require(monotone_bad == 0, "monotone");
  v.require(std::abs(fer - 0.5) <= 0.02, "FER 0.5 +- 0.02");
  v.require(t < 30.0, "runtime < 30 s");
  report(4, "MIESM and FER", v);
}

void harq() {
  Verdict v;
  mac::MacConfig mc;
  Cell cell(1, mc);
  cell.feedback[0].push(flat_report(0, 5));
  mac::arrive_traffic(cell.traffic, 2);
  const long t0 = 2;
  const auto d0 = cell.sched.schedule_tti(t0, cell.traffic, cell.feedback);
  if (d0.tbs.size() != 1) {
    v.require(false, "initial transmission scheduled");
    report(5, "HARQ", v);
    return;
  }
  const int proc = d0.tbs[0].harq_process;
  const double gamma = 1e-4;
  std::vector<mac::TxOutcome> out =
      cell.sched.transmit_and_ack(d0, cell.traffic, constant_sinr(gamma), cell.rng);

  std::vector<long> tx_ttis{t0};
  double combined_db = 0.0;
  bool early = false;
  int transmissions = 1;
  bool dropped = out.size() == 1 && out[0].dropped;
  for (long t = t0 + 1; t < t0 + 60 && !dropped; ++t) {
    const auto d = cell.sched.schedule_tti(t, cell.traffic, cell.feedback);
    bool retx = false;
    for (const auto& tb : d.tbs) retx = retx || tb.retransmission;
    if (retx && t != tx_ttis.back() + mc.harq_rtt_ms) early = true;
    out = cell.sched.transmit_and_ack(d, cell.traffic, constant_sinr(gamma), cell.rng);
    if (!retx) continue;
    tx_ttis.push_back(t);
    ++transmissions;
    if (transmissions == 2) combined_db = 10.0 * std::log10(out[0].effective_sinr / gamma);
    dropped = out[0].dropped;
  }
  // Nothing further for this TB once dropped.
  bool extra = false;
  for (long t = tx_ttis.back() + 1; t <= tx_ttis.back() + 3 * mc.harq_rtt_ms; ++t) {
    const auto d = cell.sched.schedule_tti(t, cell.traffic, cell.feedback);
    for (const auto& tb : d.tbs) extra = extra || tb.retransmission;
    cell.sched.transmit_and_ack(d, cell.traffic, constant_sinr(1e6), cell.rng);
  }

  v.detail << " combined_gain_db=" << fmt(combined_db, 6) << " tx_ttis=";
  for (long t : tx_ttis) v.detail << t << ' ';
  v.detail << "dropped=" << dropped << " dropped_tbs=" << cell.sched.dropped_tbs();
  v.require(std::abs(combined_db - 10.0 * std::log10(2.0)) <= 1e-9, "+3.01 dB after two");
  v.require(!early && tx_ttis == std::vector<long>{t0, t0 + 8, t0 + 16, t0 + 24}, "retx every 8 ms");
  v.require(dropped && cell.sched.dropped_tbs() == 1 && !extra, "dropped after 4");
  v.require(cell.sched.process(0, proc).state == mac::HarqState::kIdle, "process freed");
  v.require(cell.traffic.ledger_residual(0) == 0, "ledger");
  report(5, "HARQ", v);
}

// ---------------------------------------------------------------- 6

struct DropAudit {
  long idle_prb_violations = 0;
  long idle_prbs = 0;
  long rate_violations = 0;
  long vehicles = 0;
  long max_tb = 0;
  double max_rate_kbps = 0.0;
  long residual = 0;
};

// Runs one full drop and checks, right after every scheduling decision, that no
// PRB stays idle while an attached vehicle with buffered bits, an idle HARQ
// process, no retransmission this TTI and CQI >= 1 on that PRB exists.
DropAudit audit_drop(const SimConfig& c) {
  DropAudit a;
  const long ttis = c.engine.ttis_per_drop;
  const long delay = c.mac.cqi_delay_ms;
  std::vector<long> delivered;
  engine::RunHooks hooks;
  hooks.check_ledger = true;
  hooks.on_schedule = [&](const engine::TtiView& view) {
    const auto& d = *view.decision;
    std::set<int> retx;
    for (const auto& tb : d.tbs) {
      if (tb.retransmission) retx.insert(tb.vehicle);
      a.max_tb = std::max(a.max_tb, tb.tb_bits);
    }
    std::vector<std::pair<int, const l2s::CqiReport*>> eligible;
    for (int veh : view.scheduler->vehicles()) {
      if (view.traffic->buffer_bits[veh] <= 0 || retx.count(veh) != 0) continue;
      const bool scheduled_new = std::any_of(d.tbs.begin(), d.tbs.end(), [&](const auto& tb) {
        return tb.vehicle == veh;
      });
      bool idle = scheduled_new;
      for (int p = 0; p < c.mac.harq_processes && !idle; ++p) {
        idle = view.scheduler->process(veh, p).state == mac::HarqState::kIdle;
      }
      const l2s::CqiReport* r = view.feedback[veh].latest(view.tti, delay);
      if (idle && r != nullptr) eligible.emplace_back(veh, r);
    }
    for (int prb = 0; prb < c.mac.num_prbs; ++prb) {
      if (d.prb_owner[prb] >= 0) continue;
      ++a.idle_prbs;
      for (const auto& [veh, r] : eligible) {
        if (r->cqi[prb] >= 1) {
          ++a.idle_prb_violations;
          break;
        }
      }
    }
  };
  hooks.on_tti = [&](const engine::TtiView& view) {
    if (view.tti == ttis - 1) delivered = view.traffic->delivered_bits;
  };
  const auto m = engine::run_drop(c, 0, &hooks);
  a.residual = m.max_ledger_residual;
  a.vehicles = static_cast<long>(delivered.size());
  for (long bits : delivered) {
    const double kbps = static_cast<double>(bits) / static_cast<double>(ttis);
    a.max_rate_kbps = std::max(a.max_rate_kbps, kbps);
    if (kbps > c.mac.target_rate_kbps + static_cast<double>(a.max_tb) / static_cast<double>(ttis)) {
      ++a.rate_violations;
    }
  }
  return a;
}

void scheduler() {
  Verdict v;
  struct Case {
    const char* name;
    SimConfig cfg;
  };
  SimConfig dense = with_gaps(38, 116);
  SimConfig sparse_prec = with_gaps(200, 300);
  sparse_prec.scenario.tx_antennas = 2;
  sparse_prec.phy.precoding = true;
  for (const Case& k : {Case{"dense_lmmse", dense}, Case{"sparse_lmmse_prec", sparse_prec}}) {
    const DropAudit a = audit_drop(k.cfg);
    v.detail << " " << k.name << ": idle_prbs=" << a.idle_prbs
             << " violations=" << a.idle_prb_violations << " max_rate=" << fmt(a.max_rate_kbps)
             << "kb/s max_tb=" << a.max_tb << " over_cap=" << a.rate_violations << "/" << a.vehicles;
    v.require(a.idle_prb_violations == 0, std::string(k.name) + " work conservation");
    v.require(a.rate_violations == 0, std::string(k.name) + " rate <= 128 kb/s + one TB");
    v.require(a.residual == 0, std::string(k.name) + " ledger");
  }

  // Two statistically identical saturated vehicles.
  mac::MacConfig mc;
  Cell cell(2, mc);
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> cqi(1, 15);
  long share[2] = {0, 0};
  for (long t = 0; t < 10000; ++t) {
    if (t % mc.cqi_period_ms == 0) {
      for (auto& f : cell.feedback) {
        l2s::CqiReport r = flat_report(t, 1);
        for (auto& q : r.cqi) q = static_cast<std::uint8_t>(cqi(rng));
        f.push(r);
      }
    }
    for (int veh = 0; veh < 2; ++veh) {
      cell.traffic.buffer_bits[veh] += 1'000'000;
      cell.traffic.arrived_bits[veh] += 1'000'000;
    }
    const auto d = cell.sched.schedule_tti(t, cell.traffic, cell.feedback);
    for (int owner : d.prb_owner) {
      if (owner >= 0) ++share[owner];
    }
    cell.sched.transmit_and_ack(d, cell.traffic, constant_sinr(1e6), cell.rng);
  }
  const double a = static_cast<double>(share[0]), b = static_cast<double>(share[1]);
  const double imbalance = std::abs(a - b) / (0.5 * (a + b));
  v.detail << " pf_shares=" << share[0] << "/" << share[1] << " imbalance=" << fmt(imbalance);
  v.require(imbalance <= 0.05, "PF shares within 5%");
  report(6, "scheduler", v);
}

// ---------------------------------------------------------------- 7, 8, 9

struct Row {
  double target_prob = 0.0;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::map<std::pair<std::string, std::string>, Row> read_results(const fs::path& p) {
  std::map<std::pair<std::string, std::string>, Row> rows;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto f = split_csv(line);
    if (f.size() != 6) continue;
    rows[{f[0], f[1]}].target_prob = std::stod(f[2]);
  }
  return rows;
}

std::vector<double> read_sinr(const fs::path& p) {
  std::vector<double> out;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto f = split_csv(line);
    if (f.size() == 5) out.push_back(std::stod(f[4]));
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::map<std::string, std::string> csv_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") {
      out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
    }
  }
  return out;
}

int run_cli(const std::string& config, const fs::path& out_dir, int threads) {
  fs::remove_all(out_dir);
  const std::string dir = out_dir.string();
  const std::string th = std::to_string(threads);
  const char* argv[] = {"v2xsim", "--config", config.c_str(), "--output-dir", dir.c_str(),
                        "--threads", th.c_str()};
  std::ostringstream out;
  const int code = cli::run(7, argv, out, std::cerr);
  std::cout << out.str() << std::flush;
  return code;
}

enum Column { kMrc, kLmmse, kPrec };

Column column_of(const SimConfig& c) {
  if (c.phy.receiver == phy::ReceiverKind::kMrc) return kMrc;
  return c.phy.precoding ? kPrec : kLmmse;
}

void batch(const std::string& config_path, const fs::path& work, int threads) {
  const BatchConfig batch_cfg = parse_config_file(config_path);
  // Density rows ordered dense to sparse by mean gap.
  std::map<double, std::string> rows_by_gap;
  std::map<std::string, std::map<Column, const ExperimentSpec*>> grid;
  for (const auto& e : batch_cfg.experiments) {
    rows_by_gap[0.5 * (e.config.scenario.gap_min_m + e.config.scenario.gap_max_m)] = e.config_label;
    grid[e.config_label][column_of(e.config)] = &e;
  }
  std::vector<std::string> rows;
  for (const auto& [gap, label] : rows_by_gap) rows.push_back(label);

  const fs::path dir_a = work / "batch_a";
  const fs::path dir_b = work / "batch_b";
  Stopwatch sw;
  const int code_a = run_cli(config_path, dir_a, threads);
  const double time_a = sw.seconds();

  // 7
  {
    Verdict v;
    const auto table = read_results(dir_a / "results_table.csv");
    v.require(code_a == 0, "batch run succeeded");
    v.require(rows.size() == 4, "four density rows");
    auto prob = [&](const std::string& row, Column col) -> double {
      const auto git = grid[row].find(col);
      if (git == grid[row].end()) return std::nan("");
      const auto it = table.find({row, git->second->receiver_label()});
      return it == table.end() ? std::nan("") : it->second.target_prob;
    };
    const char* names[] = {"MRC", "LMMSE", "LMMSE+prec"};
    for (const auto& row : rows) {
      v.detail << " " << row << ":";
      for (Column col : {kMrc, kLmmse, kPrec}) v.detail << " " << names[col] << "=" << fmt(prob(row, col));
      v.require(prob(row, kMrc) <= prob(row, kLmmse) && prob(row, kLmmse) <= prob(row, kPrec),
                "(a) receiver ordering in " + row);
    }
    for (Column col : {kMrc, kLmmse, kPrec}) {
      for (std::size_t i = 1; i < rows.size(); ++i) {
        v.require(prob(rows[i - 1], col) <= prob(rows[i], col),
                  std::string("(b) ") + names[col] + " nondecreasing " + rows[i - 1] + " -> " + rows[i]);
      }
    }
    if (!rows.empty()) {
      v.require(prob(rows.back(), kPrec) >= 0.90, "(c) sparse LMMSE+precoding >= 0.90");
      v.require(prob(rows.front(), kMrc) <= 0.65, "(d) dense MRC <= 0.65");
    }
    v.detail << " time=" << fmt(time_a, 4) << "s threads=" << threads;
    report(7, "target probability trends", v);
  }

  // 8
  {
    Verdict v;
    std::map<Column, std::vector<double>> sinr;
    if (!rows.empty()) {
      for (const auto& [col, spec] : grid[rows.back()]) {
        sinr[col] = read_sinr(dir_a / spec->label / "sinr_samples.csv");
      }
    }
    const bool have = code_a == 0 && !sinr[kMrc].empty() && !sinr[kLmmse].empty() && !sinr[kPrec].empty();
    v.require(have, "sparse SINR samples present");
    if (have) {
      const double med_l = engine::percentile(sinr[kLmmse], 50.0);
      const double p5_l = engine::percentile(sinr[kLmmse], 5.0);
      const double med_m = engine::percentile(sinr[kMrc], 50.0);
      const double med_p = engine::percentile(sinr[kPrec], 50.0);
      v.detail << " lmmse_median=" << fmt(med_l) << " lmmse_p5=" << fmt(p5_l)
               << " mrc_gap=" << fmt(med_l - med_m) << " precoding_gain=" << fmt(med_p - med_l)
               << " samples=" << sinr[kLmmse].size();
      v.require(std::abs(med_l - 15.0) <= 4.0, "median 15 +- 4 dB");
      v.require(std::abs(p5_l - 2.0) <= 4.0, "5th percentile 2 +- 4 dB");
      v.require(std::abs((med_l - med_m) - 3.0) <= 1.5, "MRC gap 3 +- 1.5 dB");
      v.require(med_p - med_l <= 1.0, "precoding gain <= 1 dB");
    }
    report(8, "sparse SINR trends", v);
  }

  // 9
  {
    Verdict v;
    const int code_b = run_cli(config_path, dir_b, 1);
    const auto a = csv_tree(dir_a);
    const auto b = csv_tree(dir_b);
    long differing = 0;
    for (const auto& [name, bytes] : a) {
      const auto it = b.find(name);
      if (it == b.end() || it->second != bytes) {
        ++differing;
        v.detail << " differs: " << name;
      }
    }
    v.detail << " files=" << a.size() << "/" << b.size() << " threads=" << threads << " vs 1";
    v.require(code_a == 0 && code_b == 0, "both runs succeeded");
    v.require(!a.empty() && a.size() == b.size() && differing == 0, "byte-identical CSVs");
    report(9, "determinism", v);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string work_dir = "acceptance_work";
  std::string config = std::string(V2XSIM_SOURCE_DIR) + "/configs/paper.ini";
  int threads = 2;
  std::vector<int> only;
  app.add_option("--work-dir", work_dir, "Scratch directory for batch outputs");
  app.add_option("--config", config, "Batch configuration for criteria 7-9");
  app.add_option("--threads", threads, "Worker threads of the first batch run")->check(CLI::Range(2, 256));
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  fs::create_directories(work_dir);

  double dense_mean = 0.0;
  if (want(1) || want(2)) {
    deployment(dense_mean);
    prb_deficit(dense_mean);
  }
  if (want(3)) receiver_math();
  if (want(4)) miesm_fer();
  if (want(5)) harq();
  if (want(6)) scheduler();
  if (want(7) || want(8) || want(9)) batch(config, work_dir, threads);

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
