#pragma once

// Synthetic data-parallel tool runs: data is split into N partitions, one
// single-vCPU replica each, all reading from the shared storage nodes.

#include "vre/catalog.hpp"
#include "vre/orchestrator.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vre::work {

/// Synthetic constants only reproduce curve shapes; they are not measurements.
struct ToolProfile {
   std::string name;
   double cpu_seconds_per_unit = 0;
   double io_bytes_per_unit = 0;
   double fixed_overhead_s = 0;

   bool operator==(const ToolProfile&) const = default;
};

enum class Mode { strong, weak };
std::string_view to_string(Mode m);

struct RunPlan {
   ToolProfile tool;
   /// Strong mode: total units. Weak mode: units at the baseline partition count.
   double data_units = 1;
   int partitions = 1;
   Mode mode = Mode::strong;
   int storage_nodes_used = 1;
   double per_storage_bw_mbps = 1000;
   /// Weak-scaling network contention per vCPU above the baseline.
   double gamma = 0;
   int n_base = 1;
};

struct ScalingResult {
   int vcpus = 0;
   double t_seconds = 0;
   std::optional<double> speedup;
   std::optional<double> wse;
};

/// Aggregate storage read bandwidth in bytes/second.
double aggregate_bandwidth(const RunPlan& plan);

/// Closed-form runtime of one run (all replicas are homogeneous, so T_N is any replica's time).
double runtime(const RunPlan& plan);

/// Checks the cluster can host the plan, then evaluates the model.
ScalingResult run(const RunPlan& plan, const orch::ClusterState& cluster);

/// Speedup T_1/T_N for each N, sorted by N.
std::vector<ScalingResult> speedup_series(const RunPlan& plan, const orch::ClusterState& cluster, std::vector<int> vcpus);

/// Weak scaling efficiency T_base/T_N with data growing in proportion to N.
std::vector<ScalingResult> wse_series(const RunPlan& plan, const orch::ClusterState& cluster, std::vector<int> vcpus, int n_base);

/// Largest N whose strong-scaling speedup is still >= threshold * N (search bounded by `limit`).
int efficiency_knee(const RunPlan& plan, double threshold = 0.9, int limit = 1 << 20);

/// Compute-only cluster for the scaling harnesses: enough compute-flavor
/// service nodes for `vcpus` replicas plus `storage_nodes` storage nodes.
orch::ClusterState benchmark_cluster(const ProviderCatalog& catalog, int vcpus, int storage_nodes);

/// CSV `tool,mode,vcpus,t_seconds,speedup,wse`.
std::string results_csv(const std::string& tool, Mode mode, const std::vector<ScalingResult>& rows);
std::string results_json(const std::string& tool, Mode mode, const std::vector<ScalingResult>& rows);

}
