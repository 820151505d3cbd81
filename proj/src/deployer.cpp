#include "vre/deployer.hpp"

#include "vre/error.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <fmt/format.h>
#include <random>

namespace vre::deploy {

using cloud::CloudState;
using cloud::EventKind;

namespace {

int batches(int n, int width) {
   return n <= 0 ? 0 : (n + width - 1) / width;
}

int api_width(const cloud::ProviderProfile& profile, const StrategyParams& params) {
   return std::min(profile.api_parallelism, params.parallelism_cap);
}

struct StepDurations {
   double api = 0;
   double import = 0;
   double boot = 0;
   double selfconfig = 0;
   double download = 0;
   double push_wave = 0;
   double serialize = 0;
};

// Every duration is snapped to the virtual-time grid before it is combined.
StepDurations durations(const cloud::ProviderProfile& profile, const StrategyParams& params, int n_create, double jitter) {
   StepDurations d;
   d.api = quantize_time(profile.api_call_s);
   d.import = quantize_time(profile.image_import_s);
   d.boot = quantize_time(jitter * profile.boot_s(n_create));
   d.selfconfig = quantize_time(jitter * params.selfconfig_s);
   d.download = quantize_time(jitter * double(n_create) * params.vanilla_download_mb * 8.0 / profile.uplink_bw_mbps);
   d.push_wave = quantize_time(jitter * double(params.tasks_per_node) * params.push_rtt_s);
   d.serialize = quantize_time(jitter * params.provisioner_serialize_s);
   return d;
}

}

void StrategyParams::validate() const {
   if (selfconfig_s < 0 || push_rtt_s < 0 || provisioner_serialize_s < 0 || vanilla_download_mb < 0)
      throw ValidationError("strategy parameters must be non-negative");
   if (tasks_per_node < 1) throw ValidationError("tasks_per_node must be >= 1");
   if (parallelism_cap < 1) throw ValidationError("parallelism_cap must be >= 1");
   if (jitter_epsilon < 0 || jitter_epsilon >= 1) throw ValidationError("jitter epsilon must be in [0, 1)");
}

double jitter_factor(std::uint64_t seed, double epsilon) {
   if (epsilon == 0) return 1.0;
   std::mt19937_64 rng(seed);
   double u = unit_interval(rng());
   return 1.0 + epsilon * (2.0 * u - 1.0);
}

Phases predicted_phases(const cloud::ProviderProfile& profile, const StrategyParams& params, int n_create, int n_destroy,
                        bool image_cached, double jitter) {
   auto d = durations(profile, params, n_create, jitter);
   int width = api_width(profile, params);
   Phases p;
   if (n_create == 0 && n_destroy == 0) {
      p.create = d.api;
      return p;
   }
   p.create = double(batches(n_destroy, width)) * d.api + double(batches(n_create, width)) * d.api;
   if (n_create == 0) return p;
   p.boot = d.boot;
   if (params.kind == spec::Strategy::decentralized) {
      p.import = image_cached ? 0.0 : d.import;
      p.configure = d.selfconfig;
   } else {
      p.download = d.download;
      p.configure = double(batches(n_create, params.parallelism_cap)) * d.push_wave + double(n_create) * d.serialize;
   }
   return p;
}

double deploy_time_from_log(const std::vector<cloud::Event>& events, double start) {
   double last = start;
   for (const auto& e : events)
      if (e.kind == EventKind::vm_ready || e.kind == EventKind::api_call || e.kind == EventKind::vm_destroyed)
         last = std::max(last, e.time);
   return last - start;
}

Phases phases_from_log(const std::vector<cloud::Event>& events, double start) {
   double destroyed = start, imported = -1, last_created = -1, max_booted = -1, downloaded = -1, last_ready = -1;
   std::string last_vm;
   std::map<std::string, double> created, booted;
   for (const auto& e : events) {
      switch (e.kind) {
         case EventKind::vm_destroyed: destroyed = std::max(destroyed, e.time); break;
         case EventKind::image_imported: imported = e.time; break;
         case EventKind::vm_created:
            created[e.subject] = e.time;
            last_created = std::max(last_created, e.time);
            break;
         case EventKind::vm_booted:
            booted[e.subject] = e.time;
            max_booted = std::max(max_booted, e.time);
            break;
         case EventKind::download_done: downloaded = e.time; break;
         case EventKind::vm_ready:
            if (e.time >= last_ready) {
               last_ready = e.time;
               last_vm = e.subject;
            }
            break;
         default: break;
      }
   }
   Phases p;
   if (last_created < 0) {
      p.create = deploy_time_from_log(events, start);
      return p;
   }
   p.import = imported >= 0 ? imported - destroyed : 0.0;
   p.create = last_created - start - p.import;
   p.boot = booted.at(last_vm) - created.at(last_vm);
   p.download = downloaded >= 0 ? downloaded - max_booted : 0.0;
   p.configure = last_ready - std::max(max_booted, downloaded);
   return p;
}

DeploymentReport apply(const spec::SpecDiff& diff, CloudState& cloud, const StrategyParams& params, std::uint64_t seed, int trial) {
   params.validate();
   const auto& profile = cloud.profile();
   const int n_create = int(diff.to_create.size());
   const int n_destroy = int(diff.to_destroy.size());
   const double jitter = jitter_factor(seed, params.jitter_epsilon);
   const auto d = durations(profile, params, n_create, jitter);
   const int width = api_width(profile, params);
   const double t0 = cloud.clock();
   const std::size_t log_start = cloud.event_log().size();

   DeploymentReport report;
   report.provider = profile.name;
   report.strategy = params.kind;
   report.trial = trial;
   report.seed = seed;
   report.vms_created = n_create;
   report.vms_destroyed = n_destroy;
   {
      int non_master = 0;
      for (const auto& r : diff.to_create) non_master += r.role != spec::Role::master;
      for (const auto& r : diff.unchanged) non_master += r.role != spec::Role::master;
      report.nodes_total = non_master;
   }

   if (diff.empty()) {
      cloud.schedule(t0 + d.api, EventKind::api_call, "plan", "no changes");
      cloud.run_until_idle();
      report.phases.create = d.api;
      report.deploy_time_s = deploy_time_from_log(cloud.event_log(), t0);
      return report;
   }

   // destroys first, highest index first (diff order)
   for (int i = 0; i < n_destroy; ++i)
      cloud.schedule_destroy(diff.to_destroy[std::size_t(i)].name, t0 + double(i / width + 1) * d.api);
   double t = t0 + double(batches(n_destroy, width)) * d.api;
   if (n_destroy > 0) cloud.advance_to(t);

   const bool decentralized = params.kind == spec::Strategy::decentralized;
   if (decentralized && n_create > 0) t = cloud.import_image(cloud::preprovisioned_image, t);

   std::vector<std::string> created;
   double last_booted = t;
   for (int i = 0; i < n_create; ++i) {
      const auto& r = diff.to_create[std::size_t(i)];
      auto flavor = profile.flavor_catalog.find(r.flavor);
      if (flavor == profile.flavor_catalog.end())
         throw CloudError("unknown flavor '" + r.flavor + "' on provider '" + profile.name + "'");
      cloud::ProvisionRequest req;
      req.descriptor = r;
      req.node.role = r.role;
      req.node.flavor = flavor->second;
      req.node.public_ip_required = r.public_ip;
      req.node.block_volume_gb = r.volume_gb;
      req.image = decentralized ? cloud::BootImage::preprovisioned : cloud::BootImage::vanilla;
      req.created_at = t + double(i / width + 1) * d.api;
      req.boot_duration = d.boot;
      auto& vm = cloud.provision_vm(req);
      created.push_back(vm.id);
      last_booted = std::max(last_booted, req.created_at + d.boot);
      if (decentralized) cloud.schedule_ready(vm.id, req.created_at + d.boot + d.selfconfig, "self-configured");
   }

   if (!decentralized && n_create > 0) {
      const double downloaded = last_booted + d.download;
      cloud.schedule(downloaded, EventKind::download_done, "uplink",
                     fmt::format("{} nodes x {} MB", n_create, format_double(params.vanilla_download_mb)));
      for (int i = 0; i < n_create; ++i) {
         double ready = downloaded + double(i / params.parallelism_cap + 1) * d.push_wave + double(i + 1) * d.serialize;
         cloud.schedule_ready(created[std::size_t(i)], ready, "pushed");
      }
   }

   cloud.run_until_idle();
   for (const auto& id : created)
      if (cloud.vm(id).state != cloud::VmState::ready) throw CloudError("VM '" + id + "' did not become ready");

   std::vector<cloud::Event> slice(cloud.event_log().begin() + std::ptrdiff_t(log_start), cloud.event_log().end());
   report.deploy_time_s = deploy_time_from_log(slice, t0);
   report.phases = phases_from_log(slice, t0);
   return report;
}

TeardownReport destroy(CloudState& cloud) {
   TeardownReport report;
   const double t0 = cloud.clock();
   const double api = quantize_time(cloud.profile().api_call_s);
   const int width = cloud.profile().api_parallelism;
   report.ips_released = int(cloud.public_ips().size());
   std::vector<std::string> vms;
   for (const auto& [id, vm] : cloud.vms()) vms.push_back(id);
   std::vector<std::string> standalone;
   for (const auto& [id, vol] : cloud.volumes()) {
      ++report.volumes_released;
      bool owned = false;
      for (const auto& [vid, vm] : cloud.vms()) owned |= vm.owned_volume == id;
      if (!owned) standalone.push_back(id);
   }
   for (std::size_t i = 0; i < vms.size(); ++i) cloud.schedule_destroy(vms[i], t0 + double(int(i) / width + 1) * api);
   for (const auto& id : standalone) cloud.delete_volume(id);
   cloud.run_until_idle();
   report.vms_released = int(vms.size());
   report.teardown_s = cloud.clock() - t0;
   return report;
}

//---------------------------------------------------------------------------
namespace {

struct TrialTask {
   std::size_t strategy;
   int scale;
   int trial;
   bool image_cached;
};

std::vector<TrialTask> plan_trials(const BenchmarkConfig& config) {
   for (int k : config.scales)
      if (k != 1 && k != 2 && k != 4 && k != 8) throw ValidationError("benchmark scales must be drawn from {1,2,4,8}");
   if (config.trials < 1) throw ValidationError("trials must be positive");
   std::vector<TrialTask> tasks;
   for (std::size_t s = 0; s < config.strategies.size(); ++s) {
      bool first = true;
      for (int k : config.scales)
         for (int t = 0; t < config.trials; ++t) {
            tasks.push_back({s, k, t, !first});
            first = false;
         }
   }
   return tasks;
}

DeploymentReport run_trial(const BenchmarkConfig& config, const TrialTask& task) {
   const auto& params = config.strategies[task.strategy];
   CloudState cloud(config.profile);
   if (task.image_cached && params.kind == spec::Strategy::decentralized) {
      cloud.import_image(cloud::preprovisioned_image, 0.0);
      cloud.run_until_idle();
      cloud.clear_event_log();
   }
   auto spec = spec::default_benchmark_spec(task.scale, config.profile.name);
   auto diff = spec::diff_spec({}, spec);
   auto seed = mix_seed(config.seed, std::uint64_t(params.kind), std::uint64_t(task.scale), std::uint64_t(task.trial));
   return apply(diff, cloud, params, seed, task.trial);
}

}

std::vector<DeploymentReport> run_scaling_benchmark_serial(const BenchmarkConfig& config) {
   std::vector<DeploymentReport> rows;
   for (const auto& task : plan_trials(config)) rows.push_back(run_trial(config, task));
   return rows;
}

std::vector<DeploymentReport> run_scaling_benchmark(const BenchmarkConfig& config) {
   auto tasks = plan_trials(config);
   std::vector<DeploymentReport> rows(tasks.size());
   std::exception_ptr failure;
   const long count = long(tasks.size());
#pragma omp parallel for schedule(dynamic)
   for (long i = 0; i < count; ++i) {
      try {
         rows[std::size_t(i)] = run_trial(config, tasks[std::size_t(i)]);
      } catch (...) {
#pragma omp critical
         if (!failure) failure = std::current_exception();
      }
   }
   if (failure) std::rethrow_exception(failure);
   return rows;
}

//---------------------------------------------------------------------------
std::string report_csv_header() {
   return "provider,strategy,nodes_total,trial,seed,deploy_time_s,create_s,import_s,boot_s,download_s,configure_s";
}

std::string report_csv_row(const DeploymentReport& r) {
   return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", r.provider, spec::to_string(r.strategy), r.nodes_total, r.trial,
                      r.seed, format_double(r.deploy_time_s), format_double(r.phases.create), format_double(r.phases.import),
                      format_double(r.phases.boot), format_double(r.phases.download), format_double(r.phases.configure));
}

std::string reports_csv(const std::vector<DeploymentReport>& rows) {
   std::string out = report_csv_header() + "\n";
   for (const auto& r : rows) out += report_csv_row(r) + "\n";
   return out;
}

nlohmann::json report_to_json(const DeploymentReport& r) {
   return {{"provider", r.provider},          {"strategy", spec::to_string(r.strategy)}, {"nodes_total", r.nodes_total},
           {"trial", r.trial},                {"seed", r.seed},                          {"deploy_time_s", r.deploy_time_s},
           {"create_s", r.phases.create},     {"import_s", r.phases.import},             {"boot_s", r.phases.boot},
           {"download_s", r.phases.download}, {"configure_s", r.phases.configure}};
}

std::string reports_json(const std::vector<DeploymentReport>& rows) {
   auto arr = nlohmann::json::array();
   for (const auto& r : rows) arr.push_back(report_to_json(r));
   return arr.dump(2) + "\n";
}

}
