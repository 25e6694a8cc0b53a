#include "v2xsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "v2xsim/channel.hpp"
#include "v2xsim/kernels.hpp"
#include "v2xsim/l2s.hpp"
#include "v2xsim/phy.hpp"
#include "v2xsim/scenario.hpp"

namespace v2xsim::engine {

namespace {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

l2s::LinkToSystem make_l2s(const SimConfig& c) {
  l2s::FerParams fer;
  fer.slope_per_db = c.l2s.fer_slope_per_db;
  fer.gamma50_offset_db = c.l2s.gamma50_offset_db;
  l2s::McsTable table = c.l2s.mcs_table_csv.empty() ? l2s::McsTable::standard(fer)
                                                    : l2s::McsTable::from_csv(c.l2s.mcs_table_csv);
  return l2s::LinkToSystem(std::move(table), c.l2s.fer_target);
}

/// Per-TTI channel snapshots, computed on first use.
class ChannelCache {
 public:
  ChannelCache(const channel::FadingModel& fading, const kernels::KernelTable& kernels,
               int num_rsus, int num_vehicles, bool interference)
      : fading_(&fading),
        kernels_(&kernels),
        num_rsus_(num_rsus),
        interference_(interference),
        stamp_(static_cast<std::size_t>(num_vehicles), -1),
        slots_(static_cast<std::size_t>(num_vehicles)) {}

  const phy::VehicleChannels& get(int v, long tti, int serving, const LargeScaleMap& ls,
                                  double prb_power_mw) {
    phy::VehicleChannels& ch = slots_[v];
    if (stamp_[v] == tti && ch.present[serving]) return ch;
    if (ch.num_rsus == 0) ch.reset(num_rsus_, fading_->num_tx(), fading_->num_prbs());
    for (int r = 0; r < num_rsus_; ++r) {
      const bool need = interference_ || r == serving;
      ch.present[r] = need;
      if (!need) continue;
      fading_->response(r, v, tti, *kernels_, ch.re_at(r, 0), ch.im_at(r, 0));
      ch.rx_power[r] = prb_power_mw * channel::db_to_linear(ls.gain_db(r, v));
    }
    stamp_[v] = tti;
    return ch;
  }

 private:
  const channel::FadingModel* fading_;
  const kernels::KernelTable* kernels_;
  int num_rsus_;
  bool interference_;
  std::vector<long> stamp_;
  std::vector<phy::VehicleChannels> slots_;
};

}  // namespace

std::uint64_t drop_seed(const SimConfig& config, int drop_index) {
  return config.engine.master_seed + static_cast<std::uint64_t>(drop_index);
}

DropMetrics run_drop(const SimConfig& config, int drop_index, const RunHooks* hooks) {
  config.validate();
  const std::uint64_t seed = drop_seed(config, drop_index);
  const l2s::LinkToSystem l2s = make_l2s(config);
  const kernels::KernelTable& kernels = kernels::active();

  scenario::ScenarioState state = scenario::deploy(config.scenario, seed);
  const int num_rsus = config.scenario.num_rsus;
  const int num_vehicles = static_cast<int>(state.vehicles.size());
  const int num_tx = config.scenario.tx_antennas;

  channel::OfdmGrid grid;
  grid.num_prbs = config.mac.num_prbs;
  Rng shadow_rng = make_rng(seed, Stream::kShadowing);
  channel::ShadowingField shadowing(num_rsus, num_vehicles, config.channel.shadowing_sigma_db,
                                    config.channel.decorr_m, shadow_rng);
  LargeScaleMap ls = channel::large_scale_map(state, shadowing, 0);
  state = scenario::associate(state, ls);

  const channel::FadingModel fading(config.channel, grid, config.scenario.speed_mps(), seed,
                                    num_rsus, num_vehicles, config.scenario.rx_antennas, num_tx);
  channel::NoiseModel noise_model;
  noise_model.noise_figure_db = config.channel.noise_figure_db;
  noise_model.prb_bandwidth_hz = grid.prb_bandwidth_hz;
  const double noise_mw = dbm_to_mw(channel::noise_power_dbm(noise_model));
  const double prb_power_mw = dbm_to_mw(config.scenario.tx_power_dbm) / grid.num_prbs;

  std::vector<int> measured = config.measured_rsus();
  std::vector<bool> is_measured(static_cast<std::size_t>(num_rsus), false);
  for (int r : measured) is_measured[r] = true;

  std::vector<mac::RsuScheduler> schedulers;
  schedulers.reserve(static_cast<std::size_t>(num_rsus));
  for (int r = 0; r < num_rsus; ++r) schedulers.emplace_back(r, config.mac, l2s);
  for (const auto& veh : state.vehicles) schedulers[veh.serving_rsu].attach(veh.id);

  mac::TrafficState traffic(num_vehicles, config.mac.arrival_bits_per_ms());
  std::vector<mac::CqiFeedback> feedback(static_cast<std::size_t>(num_vehicles));
  std::vector<long> served_ms(static_cast<std::size_t>(num_vehicles) * num_rsus, 0);
  Rng decode_rng = make_rng(seed, Stream::kDecoding);

  phy::SinrEvaluator evaluator(kernels);
  ChannelCache cache(fading, kernels, num_rsus, num_vehicles, config.phy.interference);
  std::vector<std::uint8_t> codewords(static_cast<std::size_t>(num_rsus) * grid.num_prbs, 0);
  std::vector<double> sinr(static_cast<std::size_t>(grid.num_prbs));

  DropMetrics metrics;
  metrics.drop = drop_index;
  metrics.seed = seed;
  metrics.num_vehicles = num_vehicles;

  const long ttis = config.engine.ttis_per_drop;
  const long ls_interval = config.engine.large_scale_interval_ms;
  const double step_m = config.scenario.speed_mps() * ls_interval * 1e-3;

  for (long tti = 0; tti < ttis; ++tti) {
    if (tti > 0 && tti % ls_interval == 0) {
      state = scenario::advance_mobility(state, ls_interval * 1e-3);
      ls = channel::update_shadowing(shadowing, state, step_m, tti, shadow_rng);
      scenario::ScenarioState next = scenario::associate(state, ls);
      for (int v = 0; v < num_vehicles; ++v) {
        const int from = state.vehicles[v].serving_rsu;
        const int to = next.vehicles[v].serving_rsu;
        if (from == to) continue;
        schedulers[from].detach(v, traffic);
        schedulers[to].attach(v);
      }
      state = std::move(next);
    }
    mac::arrive_traffic(traffic, 1);

    if (num_tx == 2) {
      for (int r = 0; r < num_rsus; ++r) {
        for (int p = 0; p < grid.num_prbs; ++p) {
          codewords[static_cast<std::size_t>(r) * grid.num_prbs + p] = static_cast<std::uint8_t>(
              hash_key({seed, static_cast<std::uint64_t>(Stream::kInterfererPrecoder),
                        static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(tti),
                        static_cast<std::uint64_t>(p)}) &
              3u);
        }
      }
    }

    if (tti % config.mac.cqi_period_ms == 0) {
      for (int v = 0; v < num_vehicles; ++v) {
        const int serving = state.vehicles[v].serving_rsu;
        const phy::VehicleChannels& ch = cache.get(v, tti, serving, ls, prb_power_mw);
        int precoder = 0;
        // The sample uses the precoder in force now, i.e. the latest delivered report.
        int in_use = 0;
        if (config.phy.precoding) {
          const l2s::CqiReport* current = feedback[v].latest(tti, config.mac.cqi_delay_ms);
          in_use = current != nullptr ? current->precoder : 0;
          precoder = evaluator.select_and_evaluate(ch, serving, codewords, noise_mw,
                                                   config.phy.receiver, sinr);
        } else {
          evaluator.evaluate(ch, serving, 0, codewords, noise_mw, config.phy.receiver, sinr);
        }
        feedback[v].push(l2s.compute_cqi(sinr, tti, precoder));
        if (is_measured[serving]) {
          if (in_use != precoder) {
            evaluator.evaluate(ch, serving, in_use, codewords, noise_mw, config.phy.receiver, sinr);
          }
          const double mean = std::accumulate(sinr.begin(), sinr.end(), 0.0) / sinr.size();
          metrics.sinr_samples.push_back({drop_index, serving, v, tti, channel::linear_to_db(mean)});
        }
      }
    }

    for (int r = 0; r < num_rsus; ++r) {
      mac::ScheduleDecision decision = schedulers[r].schedule_tti(tti, traffic, feedback);
      TtiView view;
      view.tti = tti;
      view.rsu = r;
      view.decision = &decision;
      view.traffic = &traffic;
      view.scheduler = &schedulers[r];
      view.feedback = feedback;
      if (hooks != nullptr && hooks->on_schedule) hooks->on_schedule(view);
      const mac::SinrSource source = [&](int v, int precoder, std::span<double> out) {
        const phy::VehicleChannels& ch = cache.get(v, tti, r, ls, prb_power_mw);
        evaluator.evaluate(ch, r, precoder, codewords, noise_mw, config.phy.receiver, out);
      };
      const std::vector<mac::TxOutcome> outcomes =
          schedulers[r].transmit_and_ack(decision, traffic, source, decode_rng);
      if (hooks != nullptr && hooks->on_tti) {
        view.outcomes = &outcomes;
        hooks->on_tti(view);
      }
    }

    for (int v = 0; v < num_vehicles; ++v) {
      ++served_ms[static_cast<std::size_t>(v) * num_rsus + state.vehicles[v].serving_rsu];
    }
    if (hooks != nullptr && hooks->check_ledger) {
      for (int v = 0; v < num_vehicles; ++v) {
        metrics.max_ledger_residual =
            std::max(metrics.max_ledger_residual, std::labs(traffic.ledger_residual(v)));
      }
    }
  }

  for (const auto& s : schedulers) metrics.dropped_tbs += s.dropped_tbs();
  for (int v = 0; v < num_vehicles; ++v) {
    const auto row = served_ms.begin() + static_cast<std::ptrdiff_t>(v) * num_rsus;
    const int home = static_cast<int>(std::max_element(row, row + num_rsus) - row);
    if (!is_measured[home]) continue;
    VehicleRecord rec;
    rec.drop = drop_index;
    rec.vehicle = v;
    rec.rsu = home;
    rec.mean_thr_kbps = static_cast<double>(traffic.delivered_bits[v]) / static_cast<double>(ttis);
    rec.outage = rec.mean_thr_kbps < config.engine.outage_kbps;
    rec.achieved_target =
        rec.mean_thr_kbps >= config.engine.target_fraction * config.mac.target_rate_kbps;
    metrics.vehicles.push_back(rec);
  }
  metrics.measured_vehicles_per_rsu =
      static_cast<double>(metrics.vehicles.size()) / static_cast<double>(measured.size());
  return metrics;
}

Cdf empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  Cdf cdf;
  const double n = static_cast<double>(values.size());
  cdf.p.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) cdf.p.push_back((static_cast<double>(i) + 1.0) / n);
  cdf.x = std::move(values);
  return cdf;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile q must be in [0,100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ResultsRow aggregate(std::span<const DropMetrics> drops, const SimConfig& config,
                     const std::string& config_label, const std::string& receiver) {
  (void)config;
  if (drops.empty()) throw std::invalid_argument("aggregate: no drops");
  ResultsRow row;
  row.config_label = config_label;
  row.receiver = receiver;
  std::vector<double> thr;
  std::size_t achieved = 0;
  std::size_t outage = 0;
  double per_rsu = 0.0;
  for (const DropMetrics& d : drops) {
    per_rsu += d.measured_vehicles_per_rsu;
    for (const VehicleRecord& rec : d.vehicles) {
      thr.push_back(rec.mean_thr_kbps);
      achieved += rec.achieved_target ? 1 : 0;
      outage += rec.outage ? 1 : 0;
    }
  }
  row.mean_vehicles_per_rsu = per_rsu / static_cast<double>(drops.size());
  if (thr.empty()) return row;
  const double n = static_cast<double>(thr.size());
  row.target_prob = static_cast<double>(achieved) / n;
  row.outage_frac = static_cast<double>(outage) / n;
  row.cell_edge_kbps = percentile(std::move(thr), 5.0);
  return row;
}

std::vector<ExperimentResult> run_batch(const std::vector<ExperimentSpec>& experiments,
                                        int threads) {
  struct Job {
    std::size_t experiment;
    int drop;
  };
  std::vector<Job> jobs;
  std::vector<ExperimentResult> results(experiments.size());
  for (std::size_t e = 0; e < experiments.size(); ++e) {
    experiments[e].config.validate();
    results[e].spec = experiments[e];
    results[e].drops.resize(static_cast<std::size_t>(experiments[e].config.engine.num_drops));
    for (int d = 0; d < experiments[e].config.engine.num_drops; ++d) jobs.push_back({e, d});
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      try {
        results[job.experiment].drops[static_cast<std::size_t>(job.drop)] =
            run_drop(experiments[job.experiment].config, job.drop);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(jobs.size());
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (ExperimentResult& r : results) {
    const SimConfig& c = r.spec.config;
    r.row = aggregate(r.drops, c, r.spec.config_label, r.spec.receiver_label());
    std::vector<double> sinr_db;
    std::vector<double> thr;
    for (const DropMetrics& d : r.drops) {
      for (const SinrSample& s : d.sinr_samples) sinr_db.push_back(s.sinr_db);
      for (const VehicleRecord& v : d.vehicles) thr.push_back(v.mean_thr_kbps);
    }
    r.sinr_cdf = empirical_cdf(std::move(sinr_db));
    r.throughput_cdf = empirical_cdf(std::move(thr));
  }
  return results;
}

}  // namespace v2xsim::engine
