#pragma once

#include <deque>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "v2xsim/l2s.hpp"
#include "v2xsim/rng.hpp"

namespace v2xsim::mac {

struct MacConfig {
  int num_prbs = 50;
  int pf_horizon_tti = 100;
  int harq_max_tx = 4;
  int harq_rtt_ms = 8;
  int harq_processes = 8;
  int cqi_period_ms = 6;
  int cqi_delay_ms = 2;
  double target_rate_kbps = 128.0;
  double pf_floor = 1e-3;  // bits/ms

  void validate() const;
  /// kb/s equals bits/ms.
  long arrival_bits_per_ms() const { return static_cast<long>(target_rate_kbps); }
};

/// Per-vehicle bit ledger: arrived = delivered + buffered + in flight.
struct TrafficState {
  long arrival_bits_per_ms = 128;
  std::vector<long> buffer_bits;
  std::vector<long> arrived_bits;
  std::vector<long> delivered_bits;
  std::vector<long> in_flight_bits;

  explicit TrafficState(int num_vehicles = 0, long arrival_rate = 128);
  int num_vehicles() const { return static_cast<int>(buffer_bits.size()); }
  /// arrived - delivered - buffered - in flight; zero when the ledger balances.
  long ledger_residual(int vehicle) const;
};

void arrive_traffic(TrafficState& traffic, long dt_ms);

/// CQI reports of one vehicle, visible to the RSU once their feedback delay has elapsed.
class CqiFeedback {
 public:
  void push(l2s::CqiReport report);
  /// Most recent report with generated_tti + delay <= now, or null.
  const l2s::CqiReport* latest(long now, long delay) const;

 private:
  std::deque<l2s::CqiReport> reports_;
};

enum class HarqState { kIdle, kWaitingAck, kPendingRetx };

struct HarqProcess {
  int process_id = 0;
  HarqState state = HarqState::kIdle;
  long tb_bits = 0;
  int mcs = 0;
  int precoder = 0;
  std::vector<int> prbs;
  int tx_count = 0;
  std::vector<double> accumulated_sinr;  // linear, indexed by position in the TB
  long last_tx_tti = -1;
  long due_tti = -1;  // retransmission slot when pending
};

struct ScheduledTb {
  int vehicle = -1;
  std::vector<int> prbs;
  int mcs = 0;
  long tb_bits = 0;
  int harq_process = 0;
  int precoder = 0;
  bool retransmission = false;
  int tx_count = 1;
};

struct ScheduleDecision {
  long tti = 0;
  int rsu = 0;
  std::vector<int> prb_owner;  // vehicle id or -1
  std::vector<ScheduledTb> tbs;
  /// New-data candidates left with buffered bits beyond their transport block.
  std::vector<std::pair<int, double>> unmet_demand;
};

struct TxOutcome {
  int vehicle = -1;
  int harq_process = 0;
  bool ack = false;
  bool dropped = false;
  int tx_count = 0;
  long delivered_bits = 0;
  double effective_sinr = 0.0;
};

/// True per-PRB SINR (all PRBs) for a vehicle under a given precoder.
using SinrSource = std::function<void(int vehicle, int precoder, std::span<double> out)>;

/// One RSU's downlink MAC: buffer-gated proportional fair scheduling,
/// synchronous HARQ with chase combining.
class RsuScheduler {
 public:
  RsuScheduler(int rsu, const MacConfig& config, const l2s::LinkToSystem& l2s);

  int rsu() const { return rsu_; }
  void attach(int vehicle);
  /// Bits held by the vehicle's HARQ processes are returned to its buffer.
  void detach(int vehicle, TrafficState& traffic);
  bool serves(int vehicle) const { return ues_.count(vehicle) != 0; }
  std::vector<int> vehicles() const;

  ScheduleDecision schedule_tti(long tti, TrafficState& traffic,
                                std::span<const CqiFeedback> feedback);

  std::vector<TxOutcome> transmit_and_ack(const ScheduleDecision& decision, TrafficState& traffic,
                                          const SinrSource& sinr, Rng& rng);

  double avg_rate(int vehicle) const { return ues_.at(vehicle).avg_rate; }
  const HarqProcess& process(int vehicle, int id) const {
    return ues_.at(vehicle).harq.at(static_cast<std::size_t>(id));
  }
  long dropped_tbs() const { return dropped_tbs_; }

  /// Expected bits of one PRB at a reported CQI.
  static double prb_rate_bits(const l2s::McsTable& table, int cqi);

 private:
  struct UeContext {
    double avg_rate = 0.0;
    std::vector<HarqProcess> harq;
  };

  MacConfig config_;
  const l2s::LinkToSystem* l2s_;
  int rsu_;
  std::map<int, UeContext> ues_;
  long dropped_tbs_ = 0;
  std::vector<double> sinr_scratch_;
};

}  // namespace v2xsim::mac
