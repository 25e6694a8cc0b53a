#include <doctest.h>

#include <map>
#include <sstream>

#include "v2xsim/engine.hpp"
#include "v2xsim/output.hpp"

using namespace v2xsim;
using namespace v2xsim::engine;

namespace {

SimConfig small_sparse(int ttis) {
  SimConfig c;
  c.scenario.gap_min_m = 200;
  c.scenario.gap_max_m = 300;
  c.engine.ttis_per_drop = ttis;
  c.engine.num_drops = 2;
  return c;
}

// Three RSUs 100 m apart, one lane, six vehicles 50 m apart, no interference.
SimConfig toy() {
  SimConfig c;
  c.scenario.num_rsus = 3;
  c.scenario.rsu_spacing_m = 100;
  c.scenario.num_lanes = 1;
  c.scenario.gap_min_m = 50;
  c.scenario.gap_max_m = 50;
  c.phy.interference = false;
  c.engine.ttis_per_drop = 10;
  c.engine.measured_rsus = {0, 1, 2};
  return c;
}

std::string csv_of(const std::vector<DropMetrics>& drops) {
  std::ostringstream os;
  output::write_sinr_samples(os, drops);
  output::write_vehicle_summary(os, drops);
  return os.str();
}

}  // namespace

TEST_CASE("drops are deterministic") {
  const SimConfig c = small_sparse(200);
  const auto a = run_drop(c, 0);
  const auto b = run_drop(c, 0);
  const auto other = run_drop(c, 1);
  CHECK(csv_of({a}) == csv_of({b}));
  CHECK(csv_of({a}) != csv_of({other}));
  CHECK(a.seed == c.engine.master_seed);
  CHECK(other.seed == c.engine.master_seed + 1);
}

TEST_CASE("only measured RSUs contribute") {
  SimConfig c = small_sparse(120);
  const auto d = run_drop(c, 0);
  REQUIRE_FALSE(d.vehicles.empty());
  for (const auto& v : d.vehicles) CHECK(v.rsu == 3);
  for (const auto& s : d.sinr_samples) {
    CHECK(s.rsu == 3);
    CHECK(s.tti % 6 == 0);
  }
  CHECK(d.measured_vehicles_per_rsu == static_cast<double>(d.vehicles.size()));
}

TEST_CASE("single vehicle without interference gets the full target rate") {
  SimConfig c;
  c.scenario.num_rsus = 1;
  c.scenario.rsu_spacing_m = 300;
  c.scenario.num_lanes = 1;
  c.scenario.gap_min_m = 300;
  c.scenario.gap_max_m = 300;
  c.phy.interference = false;
  c.engine.ttis_per_drop = 2000;
  long max_tb = 0;
  RunHooks hooks;
  hooks.on_tti = [&](const TtiView& v) {
    for (const auto& tb : v.decision->tbs) max_tb = std::max(max_tb, tb.tb_bits);
  };
  const auto d = run_drop(c, 0, &hooks);
  REQUIRE(d.num_vehicles == 1);
  REQUIRE(d.vehicles.size() == 1);
  CHECK(std::abs(d.vehicles[0].mean_thr_kbps - 128.0) <= static_cast<double>(max_tb) / 2000.0);
  CHECK(d.vehicles[0].achieved_target);
  CHECK_FALSE(d.vehicles[0].outage);
}

TEST_CASE("toy network follows the hand trace for ten TTIs") {
  const SimConfig c = toy();
  std::map<long, std::vector<long>> new_tb_bits;
  std::map<long, long> arrived;
  long ledger_errors = 0;
  long prev_delivered = 0;
  long acked = 0;
  RunHooks hooks;
  hooks.check_ledger = true;
  hooks.on_tti = [&](const TtiView& v) {
    for (const auto& tb : v.decision->tbs) {
      if (!tb.retransmission) new_tb_bits[v.tti].push_back(tb.tb_bits);
    }
    for (const auto& o : *v.outcomes) acked += o.delivered_bits;
    if (v.rsu == 2) {
      long delivered = 0;
      for (int x = 0; x < v.traffic->num_vehicles(); ++x) {
        delivered += v.traffic->delivered_bits[x];
        if (v.traffic->arrived_bits[x] != 128 * (v.tti + 1)) ++ledger_errors;
      }
      if (delivered - prev_delivered != acked) ++ledger_errors;
      prev_delivered = delivered;
      acked = 0;
    }
  };
  const auto d = run_drop(c, 0, &hooks);
  REQUIRE(d.num_vehicles == 6);
  CHECK(ledger_errors == 0);
  CHECK(d.max_ledger_residual == 0);
  // TTIs 0-1: no CQI delivered yet. TTI 2: three TTIs of backlog. Then one TTI each.
  CHECK(new_tb_bits.count(0) == 0);
  CHECK(new_tb_bits.count(1) == 0);
  CHECK(new_tb_bits[2] == std::vector<long>(6, 384));
  for (long t = 3; t < 10; ++t) CHECK(new_tb_bits[t] == std::vector<long>(6, 128));
}

TEST_CASE("ledger balances over a full interfering drop") {
  RunHooks hooks;
  hooks.check_ledger = true;
  const auto d = run_drop(small_sparse(300), 0, &hooks);
  CHECK(d.max_ledger_residual == 0);
}

TEST_CASE("aggregate") {
  SimConfig c;
  DropMetrics d;
  d.measured_vehicles_per_rsu = 3;
  for (int v = 0; v < 3; ++v) d.vehicles.push_back({0, v, 3, 128.0, false, true});
  SUBCASE("everyone at target") {
    const auto row = aggregate(std::vector<DropMetrics>{d}, c, "[1 2]", "LMMSE");
    CHECK(row.target_prob == 1.0);
    CHECK(row.outage_frac == 0.0);
    CHECK(row.cell_edge_kbps == 128.0);
    CHECK(row.mean_vehicles_per_rsu == 3.0);
  }
  SUBCASE("empty input") { CHECK_THROWS(aggregate(std::vector<DropMetrics>{}, c, "", "")); }
  SUBCASE("drops are exchangeable") {
    DropMetrics e;
    e.drop = 1;
    e.measured_vehicles_per_rsu = 2;
    e.vehicles.push_back({1, 0, 3, 0.5, true, false});
    e.vehicles.push_back({1, 1, 3, 60.0, false, false});
    const auto ab = aggregate(std::vector<DropMetrics>{d, e}, c, "x", "y");
    const auto ba = aggregate(std::vector<DropMetrics>{e, d}, c, "x", "y");
    CHECK(ab.target_prob == ba.target_prob);
    CHECK(ab.cell_edge_kbps == ba.cell_edge_kbps);
    CHECK(ab.outage_frac == ba.outage_frac);
    CHECK(ab.mean_vehicles_per_rsu == ba.mean_vehicles_per_rsu);
    CHECK(ab.target_prob == doctest::Approx(0.6));
    CHECK(ab.outage_frac == doctest::Approx(0.2));
    CHECK(ab.mean_vehicles_per_rsu == 2.5);
  }
}

TEST_CASE("percentile and CDF") {
  CHECK(percentile({1, 2, 3, 4, 5}, 50) == 3.0);
  CHECK(percentile({0, 10}, 5) == doctest::Approx(0.5));
  CHECK(percentile({7}, 5) == 7.0);
  CHECK_THROWS(percentile({}, 5));
  const Cdf cdf = empirical_cdf({3, 1, 2, 2});
  for (std::size_t i = 1; i < cdf.x.size(); ++i) {
    CHECK(cdf.x[i] >= cdf.x[i - 1]);
    CHECK(cdf.p[i] > cdf.p[i - 1]);
  }
  CHECK(cdf.p.front() > 0.0);
  CHECK(cdf.p.back() == 1.0);
}

TEST_CASE("batch output is independent of the thread count") {
  ExperimentSpec a{"a", "[200 300]", small_sparse(100)};
  ExperimentSpec b{"b", "[200 300]", small_sparse(100)};
  b.config.phy.receiver = phy::ReceiverKind::kMrc;
  const auto one = run_batch({a, b}, 1);
  const auto two = run_batch({a, b}, 3);
  REQUIRE(one.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(csv_of(one[i].drops) == csv_of(two[i].drops));
    std::ostringstream x, y;
    output::write_results_table(x, {one[i].row});
    output::write_results_table(y, {two[i].row});
    CHECK(x.str() == y.str());
  }
}

TEST_CASE("CSV schemas") {
  DropMetrics d;
  d.sinr_samples.push_back({0, 3, 7, 12, 15.123456789});
  d.vehicles.push_back({0, 7, 3, 127.99999, false, true});
  std::ostringstream s, v, r;
  output::write_sinr_samples(s, {d});
  output::write_vehicle_summary(v, {d});
  output::write_results_table(r, {{"[38 116]", "LMMSE+precoding", 0.5, 1.0 / 3.0, 0.0, 135.5}});
  CHECK(s.str() == "drop,rsu,vehicle,tti,sinr_db\n0,3,7,12,15.1235\n");
  CHECK(v.str() == "drop,vehicle,rsu,mean_thr_kbps,outage,achieved_target\n0,7,3,128,0,1\n");
  CHECK(r.str() ==
        "config_label,receiver,target_prob,cell_edge_kbps,outage_frac,mean_vehicles_per_rsu\n"
        "[38 116],LMMSE+precoding,0.5,0.333333,0,135.5\n");
}
