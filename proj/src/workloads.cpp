#include "vre/workloads.hpp"

#include "vre/error.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace vre::work {

std::string_view to_string(Mode m) {
   return m == Mode::strong ? "strong" : "weak";
}

double aggregate_bandwidth(const RunPlan& plan) {
   return double(plan.storage_nodes_used) * plan.per_storage_bw_mbps * 1e6 / 8.0;
}

double runtime(const RunPlan& plan) {
   if (plan.partitions < 1) throw ValidationError("partitions must be positive");
   if (!(plan.data_units > 0)) throw ValidationError("data_units must be positive");
   const auto& tool = plan.tool;
   const double n = double(plan.partitions);
   double io_time = 0;
   if (tool.io_bytes_per_unit > 0) {
      if (plan.storage_nodes_used < 1 || !(plan.per_storage_bw_mbps > 0))
         throw ValidationError("tool '" + tool.name + "' reads data but no storage bandwidth is available");
   }
   if (plan.mode == Mode::strong) {
      // concurrent readers split the aggregate bandwidth, so the read phase does not shrink with N
      if (tool.io_bytes_per_unit > 0) io_time = plan.data_units * tool.io_bytes_per_unit / aggregate_bandwidth(plan);
      return tool.fixed_overhead_s + (plan.data_units / n) * tool.cpu_seconds_per_unit + io_time;
   }
   if (plan.n_base < 1) throw ValidationError("weak scaling baseline must be positive");
   // each replica keeps the baseline partition size and bandwidth share; growth in
   // contention is carried by the gamma factor alone
   const double per_replica = plan.data_units / double(plan.n_base);
   if (tool.io_bytes_per_unit > 0) io_time = per_replica * tool.io_bytes_per_unit * double(plan.n_base) / aggregate_bandwidth(plan);
   const double base = tool.fixed_overhead_s + per_replica * tool.cpu_seconds_per_unit + io_time;
   const double contention = plan.partitions > plan.n_base ? 1.0 + plan.gamma * double(plan.partitions - plan.n_base) : 1.0;
   return base * contention;
}

ScalingResult run(const RunPlan& plan, const orch::ClusterState& cluster) {
   if (plan.partitions < 1) throw ValidationError("partitions must be positive");
   if (cluster.schedulable_free_vcpus() < double(plan.partitions))
      throw StateError(fmt::format("cluster has {} schedulable vcpus, plan needs {}", format_double(cluster.schedulable_free_vcpus()),
                                   plan.partitions));
   int storage = 0;
   for (const auto& [id, n] : cluster.nodes()) storage += n.role == spec::Role::storage && n.healthy;
   if (plan.storage_nodes_used > storage)
      throw StateError(fmt::format("plan uses {} storage nodes, cluster has {}", plan.storage_nodes_used, storage));
   if (plan.storage_nodes_used < 1 && plan.tool.io_bytes_per_unit > 0)
      throw ValidationError("tool '" + plan.tool.name + "' reads data but the plan uses zero storage nodes");
   return {plan.partitions, runtime(plan), std::nullopt, std::nullopt};
}

std::vector<ScalingResult> speedup_series(const RunPlan& plan, const orch::ClusterState& cluster, std::vector<int> vcpus) {
   std::sort(vcpus.begin(), vcpus.end());
   vcpus.erase(std::unique(vcpus.begin(), vcpus.end()), vcpus.end());
   RunPlan p = plan;
   p.mode = Mode::strong;
   p.partitions = 1;
   const double t1 = run(p, cluster).t_seconds;
   std::vector<ScalingResult> out;
   for (int n : vcpus) {
      p.partitions = n;
      auto r = run(p, cluster);
      r.speedup = t1 / r.t_seconds;
      out.push_back(r);
   }
   return out;
}

std::vector<ScalingResult> wse_series(const RunPlan& plan, const orch::ClusterState& cluster, std::vector<int> vcpus, int n_base) {
   std::sort(vcpus.begin(), vcpus.end());
   vcpus.erase(std::unique(vcpus.begin(), vcpus.end()), vcpus.end());
   if (std::find(vcpus.begin(), vcpus.end(), n_base) == vcpus.end())
      throw ValidationError(fmt::format("baseline {} must be one of the measured vcpu counts", n_base));
   RunPlan p = plan;
   p.mode = Mode::weak;
   p.n_base = n_base;
   p.partitions = n_base;
   const double t_base = run(p, cluster).t_seconds;
   std::vector<ScalingResult> out;
   for (int n : vcpus) {
      p.partitions = n;
      auto r = run(p, cluster);
      r.wse = t_base / r.t_seconds;
      out.push_back(r);
   }
   return out;
}

int efficiency_knee(const RunPlan& plan, double threshold, int limit) {
   RunPlan p = plan;
   p.mode = Mode::strong;
   p.partitions = 1;
   const double t1 = runtime(p);
   // efficiency T_1 / (N T_N) is non-increasing in N, so bisect on it
   auto efficient = [&](int n) {
      p.partitions = n;
      return t1 / runtime(p) >= threshold * double(n);
   };
   if (efficient(limit)) return limit;
   int lo = 1, hi = limit;
   while (hi - lo > 1) {
      int mid = lo + (hi - lo) / 2;
      (efficient(mid) ? lo : hi) = mid;
   }
   return lo;
}

orch::ClusterState benchmark_cluster(const ProviderCatalog& catalog, int vcpus, int storage_nodes) {
   if (vcpus < 1) throw ValidationError("vcpu count must be positive");
   if (storage_nodes < 0) throw ValidationError("storage node count must be non-negative");
   const auto& compute = *catalog.find(catalog.compute_flavor);
   const auto& basic = *catalog.find(catalog.default_flavor);
   orch::ClusterState cluster;
   std::uint32_t next_ip = Ipv4::from_octets(10, 0, 0, 2).value();
   cluster.add_node("master-000", spec::Role::master, basic.vcpus, Ipv4(next_ip++));
   const int service_nodes = (vcpus + compute.vcpus - 1) / compute.vcpus;
   for (int i = 0; i < service_nodes; ++i) cluster.add_node(indexed_name("service", i), spec::Role::service, compute.vcpus, Ipv4(next_ip++));
   for (int i = 0; i < storage_nodes; ++i) cluster.add_node(indexed_name("storage", i), spec::Role::storage, basic.vcpus, Ipv4(next_ip++));
   return cluster;
}

std::string results_csv(const std::string& tool, Mode mode, const std::vector<ScalingResult>& rows) {
   std::string out = "tool,mode,vcpus,t_seconds,speedup,wse\n";
   auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
   for (const auto& r : rows)
      out += fmt::format("{},{},{},{},{},{}\n", tool, to_string(mode), r.vcpus, format_double(r.t_seconds), opt(r.speedup), opt(r.wse));
   return out;
}

std::string results_json(const std::string& tool, Mode mode, const std::vector<ScalingResult>& rows) {
   auto arr = nlohmann::json::array();
   for (const auto& r : rows)
      arr.push_back({{"tool", tool},
                     {"mode", to_string(mode)},
                     {"vcpus", r.vcpus},
                     {"t_seconds", r.t_seconds},
                     {"speedup", r.speedup ? nlohmann::json(*r.speedup) : nlohmann::json(nullptr)},
                     {"wse", r.wse ? nlohmann::json(*r.wse) : nlohmann::json(nullptr)}});
   return arr.dump(2) + "\n";
}

}
