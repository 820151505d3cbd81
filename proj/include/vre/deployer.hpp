#pragma once

// Executes a SpecDiff against a CloudState under the decentralized
// (preprovisioned image + boot-time self-configuration) or centralized
// (vanilla image + external push provisioner) strategy.

#include "vre/simcloud.hpp"
#include "vre/spec_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace vre::deploy {

struct StrategyParams {
   spec::Strategy kind = spec::Strategy::decentralized;
   /// Decentralized per-node self-setup after boot.
   double selfconfig_s = 0;
   /// Centralized: WAN round trip per pushed task.
   double push_rtt_s = 0;
   int tasks_per_node = 1;
   /// Centralized: coordinator CPU cost per node.
   double provisioner_serialize_s = 0;
   int parallelism_cap = 64;
   /// Centralized: packages each vanilla node pulls through the shared uplink.
   double vanilla_download_mb = 0;
   /// Half-width of the per-trial multiplicative jitter.
   double jitter_epsilon = 0.02;

   void validate() const;
   bool operator==(const StrategyParams&) const = default;
};

struct Phases {
   double create = 0;
   double import = 0;
   double boot = 0;
   double download = 0;
   double configure = 0;

   double total() const { return create + import + boot + download + configure; }
   bool operator==(const Phases&) const = default;
};

struct DeploymentReport {
   std::string provider;
   spec::Strategy strategy = spec::Strategy::decentralized;
   int nodes_total = 0;
   int trial = 0;
   std::uint64_t seed = 0;
   double deploy_time_s = 0;
   Phases phases;
   int vms_created = 0;
   int vms_destroyed = 0;

   bool operator==(const DeploymentReport&) const = default;
};

/// Multiplicative jitter in [1-eps, 1+eps] drawn from `seed`.
double jitter_factor(std::uint64_t seed, double epsilon);

/// Timing model evaluated directly, without the event loop.
Phases predicted_phases(const cloud::ProviderProfile& profile, const StrategyParams& params, int n_create, int n_destroy,
                        bool image_cached, double jitter);

/// Applies `diff`, runs the cloud's event loop to quiescence and reports the timeline.
/// Errors from the provider (quota, flavor) propagate and leave the partially created VMs in `cloud`.
DeploymentReport apply(const spec::SpecDiff& diff, cloud::CloudState& cloud, const StrategyParams& params, std::uint64_t seed,
                       int trial = 0);

/// Recomputes deploy time from the event log slice of one apply: last vm_ready time minus `start`.
double deploy_time_from_log(const std::vector<cloud::Event>& events, double start);

/// Phase breakdown read back from the event log of one apply (critical path of the last ready VM).
Phases phases_from_log(const std::vector<cloud::Event>& events, double start);

struct TeardownReport {
   int vms_released = 0;
   int volumes_released = 0;
   int ips_released = 0;
   double teardown_s = 0;
};

/// Releases every VM, volume and public IP. A second call is a no-op.
TeardownReport destroy(cloud::CloudState& cloud);

//---------------------------------------------------------------------------
struct BenchmarkConfig {
   std::vector<int> scales;
   int trials = 5;
   std::vector<StrategyParams> strategies;
   cloud::ProviderProfile profile;
   std::uint64_t seed = 0;
};

/// Rows ordered by (strategy, scale, trial). Trials run on independent clouds;
/// the preprovisioned image is imported only by the first trial of each series.
std::vector<DeploymentReport> run_scaling_benchmark(const BenchmarkConfig& config);
/// Serial reference for run_scaling_benchmark.
std::vector<DeploymentReport> run_scaling_benchmark_serial(const BenchmarkConfig& config);

std::string report_csv_header();
std::string report_csv_row(const DeploymentReport& r);
std::string reports_csv(const std::vector<DeploymentReport>& rows);
std::string reports_json(const std::vector<DeploymentReport>& rows);
nlohmann::json report_to_json(const DeploymentReport& r);

}
