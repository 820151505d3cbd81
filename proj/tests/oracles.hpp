#pragma once

// Independent reference computations for the tests. None of these call the
// code under test for the quantity they check; they recompute it from the
// model definitions directly.

#include "vre/orchestrator.hpp"
#include "vre/simcloud.hpp"
#include "vre/spec_model.hpp"
#include "vre/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace oracle {

inline int ceil_div(int a, int b) {
   return a <= 0 ? 0 : (a + b - 1) / b;
}

/// Deployment time of creating `n` VMs from scratch, straight from the timing formulas.
/// No time grid: callers compare with a small tolerance.
inline double deploy_time(const vre::cloud::ProviderProfile& p, double selfconfig, bool centralized, double rtt, int tasks,
                          double serialize, int cap, double download_mb, int n, bool cached, double jitter) {
   const int width = std::min(p.api_parallelism, cap);
   const double create = p.api_call_s * ceil_div(n, width);
   double boot = jitter * p.vm_boot_s;
   if (p.knee_vms > 0 && n >= p.knee_vms) boot += jitter * p.knee_extra_boot_s;
   if (!centralized) return (cached ? 0.0 : p.image_import_s) + create + boot + jitter * selfconfig;
   const double download = jitter * n * download_mb * 8.0 / p.uplink_bw_mbps;
   const double push = jitter * tasks * rtt * ceil_div(n, cap) + n * jitter * serialize;
   return create + boot + download + push;
}

/// Names the deterministic naming rule assigns for `count` nodes of `role`.
inline std::vector<std::string> names(const std::string& role, int count) {
   std::vector<std::string> out;
   for (int i = 0; i < count; ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%s-%03d", role.c_str(), i);
      out.push_back(buf);
   }
   return out;
}

/// Greedy most-free placement of `requests` over `capacity` (node id -> vcpus), ties to
/// the lexicographically smallest id. Returns the chosen node per request ("" = pending).
inline std::vector<std::string> worst_fit(std::map<std::string, double> free, const std::vector<double>& requests) {
   std::vector<std::string> out;
   for (double r : requests) {
      std::string best;
      double best_free = -1;
      for (const auto& [id, f] : free)
         if (f >= r && f > best_free) {
            best = id;
            best_free = f;
         }
      if (!best.empty()) free[best] -= r;
      out.push_back(best);
   }
   return out;
}

/// Fluid processor-sharing simulation of one strong-scaling run on a placed set of
/// replicas. Every replica first pays its overhead, then streams its partition from
/// all storage nodes at once (data striped evenly), with each storage node's
/// bandwidth split equally among its active flows, then computes.
/// Returns the time the last replica finishes.
inline double processor_sharing_run(const vre::work::RunPlan& plan, int replicas) {
   const double units = plan.data_units / replicas;
   const int storage = plan.storage_nodes_used;
   const double node_bw = plan.per_storage_bw_mbps * 1e6 / 8.0;
   struct Flow {
      int replica;
      double remaining;
   };
   std::vector<std::vector<Flow>> flows(std::size_t(std::max(storage, 0)));
   std::vector<int> open_flows(std::size_t(replicas), 0);
   std::vector<double> read_done(std::size_t(replicas), plan.tool.fixed_overhead_s);
   const double bytes = units * plan.tool.io_bytes_per_unit;
   if (bytes > 0) {
      for (int s = 0; s < storage; ++s)
         for (int r = 0; r < replicas; ++r) flows[std::size_t(s)].push_back({r, bytes / storage});
      for (int r = 0; r < replicas; ++r) open_flows[std::size_t(r)] = storage;
      // all replicas start reading once their (equal) overhead has elapsed
      double t = plan.tool.fixed_overhead_s;
      for (;;) {
         double dt = std::numeric_limits<double>::infinity();
         for (const auto& node : flows)
            for (const auto& f : node) dt = std::min(dt, f.remaining / (node_bw / double(node.size())));
         if (!std::isfinite(dt)) break;
         t += dt;
         for (auto& node : flows) {
            const double rate = node_bw / double(node.size());
            for (auto& f : node) f.remaining -= rate * dt;
            std::vector<Flow> keep;
            for (const auto& f : node) {
               if (f.remaining <= bytes * 1e-12) {
                  if (--open_flows[std::size_t(f.replica)] == 0) read_done[std::size_t(f.replica)] = t;
               } else {
                  keep.push_back(f);
               }
            }
            node = std::move(keep);
         }
      }
   }
   double finish = 0;
   for (int r = 0; r < replicas; ++r) finish = std::max(finish, read_done[std::size_t(r)] + units * plan.tool.cpu_seconds_per_unit);
   return finish;
}

/// Parses a well-formed dotted quad by hand.
inline std::uint32_t quad(int a, int b, int c, int d) {
   return (std::uint32_t(a) << 24) | (std::uint32_t(b) << 16) | (std::uint32_t(c) << 8) | std::uint32_t(d);
}

}
