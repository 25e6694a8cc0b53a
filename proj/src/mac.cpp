#include "v2xsim/mac.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace v2xsim::mac {

void MacConfig::validate() const {
  if (num_prbs < 1) throw std::invalid_argument("num_prbs must be >= 1");
  if (pf_horizon_tti < 1) throw std::invalid_argument("pf_horizon_tti must be >= 1");
  if (harq_max_tx < 1) throw std::invalid_argument("harq_max_tx must be >= 1");
  if (harq_rtt_ms < 1) throw std::invalid_argument("harq_rtt_ms must be >= 1");
  if (harq_processes < 1) throw std::invalid_argument("harq_processes must be >= 1");
  if (cqi_period_ms < 1) throw std::invalid_argument("cqi_period_ms must be >= 1");
  if (cqi_delay_ms < 0) throw std::invalid_argument("cqi_delay_ms must be >= 0");
  if (!(target_rate_kbps > 0.0)) throw std::invalid_argument("target_rate_kbps must be > 0");
}

TrafficState::TrafficState(int num_vehicles, long arrival_rate)
    : arrival_bits_per_ms(arrival_rate),
      buffer_bits(static_cast<std::size_t>(num_vehicles), 0),
      arrived_bits(static_cast<std::size_t>(num_vehicles), 0),
      delivered_bits(static_cast<std::size_t>(num_vehicles), 0),
      in_flight_bits(static_cast<std::size_t>(num_vehicles), 0) {}

long TrafficState::ledger_residual(int v) const {
  return arrived_bits[v] - delivered_bits[v] - buffer_bits[v] - in_flight_bits[v];
}

void arrive_traffic(TrafficState& traffic, long dt_ms) {
  if (dt_ms < 0) throw std::invalid_argument("arrive_traffic: dt must be >= 0");
  const long bits = traffic.arrival_bits_per_ms * dt_ms;
  for (int v = 0; v < traffic.num_vehicles(); ++v) {
    traffic.buffer_bits[v] += bits;
    traffic.arrived_bits[v] += bits;
  }
}

void CqiFeedback::push(l2s::CqiReport report) {
  reports_.push_back(std::move(report));
  while (reports_.size() > 4) reports_.pop_front();
}

const l2s::CqiReport* CqiFeedback::latest(long now, long delay) const {
  for (auto it = reports_.rbegin(); it != reports_.rend(); ++it) {
    if (it->generated_tti + delay <= now) return &*it;
  }
  return nullptr;
}

RsuScheduler::RsuScheduler(int rsu, const MacConfig& config, const l2s::LinkToSystem& l2s)
    : config_(config), l2s_(&l2s), rsu_(rsu) {
  config_.validate();
}

double RsuScheduler::prb_rate_bits(const l2s::McsTable& table, int cqi) {
  if (cqi < 1) return 0.0;
  return l2s::kSubcarriersPerPrb * l2s::kDataSymbolsPerTti * table.at(cqi).efficiency();
}

void RsuScheduler::attach(int vehicle) {
  UeContext ue;
  ue.avg_rate = config_.pf_floor;
  ue.harq.resize(static_cast<std::size_t>(config_.harq_processes));
  for (int i = 0; i < config_.harq_processes; ++i) ue.harq[i].process_id = i;
  ues_.emplace(vehicle, std::move(ue));
}

void RsuScheduler::detach(int vehicle, TrafficState& traffic) {
  auto it = ues_.find(vehicle);
  if (it == ues_.end()) return;
  for (const HarqProcess& p : it->second.harq) {
    if (p.state != HarqState::kIdle) {
      traffic.buffer_bits[vehicle] += p.tb_bits;
      traffic.in_flight_bits[vehicle] -= p.tb_bits;
    }
  }
  ues_.erase(it);
}

std::vector<int> RsuScheduler::vehicles() const {
  std::vector<int> out;
  out.reserve(ues_.size());
  for (const auto& [v, ue] : ues_) out.push_back(v);
  return out;
}

ScheduleDecision RsuScheduler::schedule_tti(long tti, TrafficState& traffic,
                                            std::span<const CqiFeedback> feedback) {
  const int num_prbs = config_.num_prbs;
  const l2s::McsTable& table = l2s_->table();
  ScheduleDecision decision;
  decision.tti = tti;
  decision.rsu = rsu_;
  decision.prb_owner.assign(static_cast<std::size_t>(num_prbs), -1);

  auto report_of = [&](int v) { return feedback[v].latest(tti, config_.cqi_delay_ms); };
  auto rate_on = [&](const l2s::CqiReport* r, int prb) {
    return r == nullptr ? 0.0 : prb_rate_bits(table, r->cqi[prb]);
  };

  // 1. HARQ retransmissions due now.
  std::vector<int> has_tb;
  for (auto& [v, ue] : ues_) {
    for (HarqProcess& p : ue.harq) {
      if (p.state != HarqState::kPendingRetx || p.due_tti != tti) continue;
      if (std::find(has_tb.begin(), has_tb.end(), v) != has_tb.end()) {
        p.due_tti += config_.harq_rtt_ms;
        continue;
      }
      const l2s::CqiReport* report = report_of(v);
      std::vector<int> free;
      for (int prb = 0; prb < num_prbs; ++prb) {
        if (decision.prb_owner[prb] < 0) free.push_back(prb);
      }
      const std::size_t need = p.prbs.size();
      if (free.size() < need) {
        p.due_tti += config_.harq_rtt_ms;
        continue;
      }
      std::stable_sort(free.begin(), free.end(), [&](int a, int b) {
        return rate_on(report, a) > rate_on(report, b);
      });
      free.resize(need);
      std::sort(free.begin(), free.end());
      for (int prb : free) decision.prb_owner[prb] = v;
      p.prbs = free;
      p.state = HarqState::kWaitingAck;
      ScheduledTb tb;
      tb.vehicle = v;
      tb.prbs = free;
      tb.mcs = p.mcs;
      tb.tb_bits = p.tb_bits;
      tb.harq_process = p.process_id;
      tb.precoder = p.precoder;
      tb.retransmission = true;
      tb.tx_count = p.tx_count + 1;
      decision.tbs.push_back(std::move(tb));
      has_tb.push_back(v);
    }
  }

  // 2. New data: PRB-by-PRB proportional fair among backlogged vehicles.
  struct Candidate {
    int vehicle;
    const l2s::CqiReport* report;
    double demand;
    double avg;
    std::vector<int> prbs;
    std::vector<double> implied;  // SINR implied by the reported CQI on each PRB
  };
  std::vector<Candidate> candidates;
  for (auto& [v, ue] : ues_) {
    if (traffic.buffer_bits[v] <= 0) continue;
    if (std::find(has_tb.begin(), has_tb.end(), v) != has_tb.end()) continue;
    const bool idle_process = std::any_of(ue.harq.begin(), ue.harq.end(), [](const HarqProcess& p) {
      return p.state == HarqState::kIdle;
    });
    if (!idle_process) continue;
    const l2s::CqiReport* report = report_of(v);
    if (report == nullptr) continue;
    candidates.push_back({v, report, static_cast<double>(traffic.buffer_bits[v]), ue.avg_rate, {}, {}});
  }
  for (int prb = 0; prb < num_prbs; ++prb) {
    if (decision.prb_owner[prb] >= 0) continue;
    Candidate* best = nullptr;
    double best_metric = 0.0;
    for (Candidate& c : candidates) {
      if (c.demand <= 0.0) continue;
      const double r = rate_on(c.report, prb);
      if (r <= 0.0) continue;
      const double metric = r / c.avg;
      if (best == nullptr || metric > best_metric) {
        best = &c;
        best_metric = metric;
      }
    }
    if (best == nullptr) continue;
    decision.prb_owner[prb] = best->vehicle;
    best->prbs.push_back(prb);
    best->implied.push_back(l2s_->cqi_sinr_lin(best->report->cqi[prb]));
    const int mcs = std::max(1, l2s_->select_mcs(best->implied));
    const long capacity = l2s::tb_size(static_cast<int>(best->prbs.size()), table.at(mcs).efficiency());
    best->demand = static_cast<double>(traffic.buffer_bits[best->vehicle] - capacity);
  }

  // 3. One transport block per scheduled vehicle.
  for (Candidate& c : candidates) {
    if (c.demand > 0.0) decision.unmet_demand.emplace_back(c.vehicle, c.demand);
    if (c.prbs.empty()) continue;
    const int mcs = std::max(1, l2s_->select_mcs(c.implied));
    const long capacity = l2s::tb_size(static_cast<int>(c.prbs.size()), table.at(mcs).efficiency());
    const long bits = std::min(capacity, traffic.buffer_bits[c.vehicle]);
    if (bits <= 0) {
      for (int prb : c.prbs) decision.prb_owner[prb] = -1;
      continue;
    }
    UeContext& ue = ues_.at(c.vehicle);
    HarqProcess* proc = nullptr;
    for (HarqProcess& p : ue.harq) {
      if (p.state == HarqState::kIdle) {
        proc = &p;
        break;
      }
    }
    proc->state = HarqState::kWaitingAck;
    proc->tb_bits = bits;
    proc->mcs = mcs;
    proc->precoder = c.report->precoder;
    proc->prbs = c.prbs;
    proc->tx_count = 0;
    proc->accumulated_sinr.assign(c.prbs.size(), 0.0);
    traffic.buffer_bits[c.vehicle] -= bits;
    traffic.in_flight_bits[c.vehicle] += bits;

    ScheduledTb tb;
    tb.vehicle = c.vehicle;
    tb.prbs = c.prbs;
    tb.mcs = mcs;
    tb.tb_bits = bits;
    tb.harq_process = proc->process_id;
    tb.precoder = proc->precoder;
    tb.retransmission = false;
    tb.tx_count = 1;
    decision.tbs.push_back(std::move(tb));
  }

  // 4. Exponentially smoothed served rate.
  const double alpha = 1.0 / config_.pf_horizon_tti;
  for (auto& [v, ue] : ues_) {
    double served = 0.0;
    for (const ScheduledTb& tb : decision.tbs) {
      if (tb.vehicle == v) served += static_cast<double>(tb.tb_bits);
    }
    ue.avg_rate = std::max(config_.pf_floor, (1.0 - alpha) * ue.avg_rate + alpha * served);
  }
  return decision;
}

std::vector<TxOutcome> RsuScheduler::transmit_and_ack(const ScheduleDecision& decision,
                                                      TrafficState& traffic,
                                                      const SinrSource& sinr, Rng& rng) {
  std::vector<TxOutcome> outcomes;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  sinr_scratch_.resize(static_cast<std::size_t>(config_.num_prbs));
  for (const ScheduledTb& tb : decision.tbs) {
    HarqProcess& p = ues_.at(tb.vehicle).harq.at(static_cast<std::size_t>(tb.harq_process));
    sinr(tb.vehicle, tb.precoder, sinr_scratch_);
    std::vector<double> combined(tb.prbs.size());
    for (std::size_t k = 0; k < tb.prbs.size(); ++k) {
      combined[k] = p.accumulated_sinr[k] + sinr_scratch_[static_cast<std::size_t>(tb.prbs[k])];
    }
    const double eff = l2s_->effective_sinr(combined, tb.mcs);
    const double fer = l2s_->fer(eff, tb.mcs);
    const bool ack = unit(rng) >= fer;
    p.tx_count += 1;
    p.last_tx_tti = decision.tti;

    TxOutcome out;
    out.vehicle = tb.vehicle;
    out.harq_process = tb.harq_process;
    out.ack = ack;
    out.tx_count = p.tx_count;
    out.effective_sinr = eff;
    if (ack) {
      traffic.delivered_bits[tb.vehicle] += p.tb_bits;
      traffic.in_flight_bits[tb.vehicle] -= p.tb_bits;
      out.delivered_bits = p.tb_bits;
      p.state = HarqState::kIdle;
    } else if (p.tx_count < config_.harq_max_tx) {
      p.accumulated_sinr = std::move(combined);
      p.state = HarqState::kPendingRetx;
      p.due_tti = decision.tti + config_.harq_rtt_ms;
    } else {
      traffic.buffer_bits[tb.vehicle] += p.tb_bits;
      traffic.in_flight_bits[tb.vehicle] -= p.tb_bits;
      ++dropped_tbs_;
      out.dropped = true;
      p.state = HarqState::kIdle;
    }
    if (p.state == HarqState::kIdle) {
      p.tb_bits = 0;
      p.tx_count = 0;
      p.accumulated_sinr.clear();
      p.prbs.clear();
    }
    outcomes.push_back(out);
  }
  return outcomes;
}

}  // namespace v2xsim::mac
