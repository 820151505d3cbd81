#pragma once

// Randomized invariant drivers shared by the unit suites (small counts) and the
// acceptance runner (full counts). Each returns the first violation, or "".

#include "vre/calibration.hpp"
#include "vre/deployer.hpp"
#include "vre/edgenet.hpp"
#include "vre/error.hpp"
#include "vre/orchestrator.hpp"
#include "vre/simcloud.hpp"
#include "vre/spec_model.hpp"
#include "vre/workloads.hpp"

#include <fmt/format.h>
#include <random>
#include <string>
#include <vector>

namespace props {

using namespace vre;

struct Deployed {
   cloud::CloudState cloud;
   orch::ClusterState cluster;
};

/// Applies `spec` on a fresh provider cloud and registers the ready VMs.
inline Deployed deploy_spec(const spec::ClusterSpec& s, const calib::CalibrationFixture& fx) {
   Deployed d{cloud::CloudState(fx.profile(s.provider)), orch::ClusterState(s.master_schedulable)};
   deploy::apply(spec::diff_spec({}, s), d.cloud, fx.strategy(s.strategy), s.seed);
   d.cluster.sync_nodes(d.cloud);
   d.cluster.advance_to(d.cloud.clock());
   return d;
}

inline spec::ClusterSpec five_service_spec() {
   return spec::parse_spec("provider: openstack-sim\nnodes:\n  service: 5\n  storage: 1\n");
}

inline orch::PackageManifest replica_manifest(int replicas) {
   orch::PackageManifest m;
   orch::GroupSpec g;
   g.name = "work";
   g.image = "tool:latest";
   g.replicas = replicas;
   g.vcpus = 1;
   g.expose = true;
   m.groups.push_back(g);
   return m;
}

/// Base state for the failure-convergence trials: 5 service nodes, 6 replicas.
inline Deployed convergence_base(const calib::CalibrationFixture& fx) {
   auto d = deploy_spec(five_service_spec(), fx);
   d.cluster.install_package(replica_manifest(6), &d.cloud, {});
   return d;
}

inline int running_members(const orch::ClusterState& c, const std::string& group) {
   int n = 0;
   for (const auto& [id, r] : c.containers()) n += r.replica_group == group && r.state == orch::ContainerState::running;
   return n;
}

/// One random interleaving: a service node fails at a random instant while
/// routing queries, short-lived jobs and clock steps are interleaved around it.
inline std::string failure_convergence_trial(const Deployed& base, std::uint64_t seed) {
   std::mt19937_64 rng(seed);
   auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
   Deployed d = base;
   std::vector<std::string> services;
   for (const auto& [id, n] : d.cluster.nodes())
      if (n.role == spec::Role::service) services.push_back(id);
   const auto victim = services[std::size_t(rng() % services.size())];
   const double t_fail = d.cloud.clock() + uniform(0.5, 60.0);
   const double deadline = t_fail + orch::reschedule_delay_s;
   d.cloud.inject_failure(victim, t_fail);

   edge::DnsZone zone;
   edge::RouteTable routes;
   edge::update_records(zone, d.cluster);
   edge::add_rule(routes, "work.example", "work", d.cluster);
   std::optional<std::string> job;

   double t = d.cloud.clock();
   bool checked_deadline = false;
   while (t < deadline + 20.0) {
      double next = t + uniform(0.0, 6.0);
      // always land exactly on the deadline once
      if (!checked_deadline && next >= deadline) next = deadline;
      for (const auto& e : d.cloud.advance_to(next)) d.cluster.on_cloud_event(e);
      d.cluster.advance_to(next);
      t = next;
      if (auto v = d.cluster.check_invariants(); !v.empty()) return fmt::format("t={}: {}", t, v);

      switch (rng() % 4) {
         case 0:
            try {
               edge::route(routes, "work.example", d.cluster);
            } catch (const edge::RouteError&) {
               // 503 while every replica is pending is legitimate
            }
            break;
         case 1:
            if (!job) {
               orch::ContainerSpec s;
               s.image = "job";
               s.kind = orch::ContainerKind::short_lived;
               job = d.cluster.create_container(s);
               d.cluster.schedule(*job);
            }
            break;
         case 2:
            if (job) {
               const auto& c = d.cluster.container(*job);
               if (c.state == orch::ContainerState::running) d.cluster.complete(*job, true);
               if (d.cluster.container(*job).terminal()) job.reset();
            }
            break;
         default: break;
      }
      if (auto v = d.cluster.check_invariants(); !v.empty()) return fmt::format("t={}: {}", t, v);
      if (t == deadline) {
         checked_deadline = true;
         int running = running_members(d.cluster, "work");
         if (running != 6) return fmt::format("only {} of 6 replicas running at failure + delay", running);
         if (d.cluster.services().at("work").endpoints.size() != 6) return "endpoints do not match running replicas";
      }
   }
   return checked_deadline ? "" : "deadline never observed";
}

/// Random sequence of cloud and orchestrator operations; checks the safety
/// invariants after every step.
inline std::string safety_sequence(const calib::CalibrationFixture& fx, std::uint64_t seed, int steps) {
   std::mt19937_64 rng(seed);
   auto pick = [&](auto n) { return std::size_t(rng() % std::uint64_t(n)); };
   auto profile = fx.profile("openstack-sim");
   cloud::CloudState cloud(profile);
   orch::ClusterState cluster(rng() % 2 == 0);
   int next_vm = 0;
   std::vector<std::string> containers;

   auto check = [&]() -> std::string {
      if (int(cloud.public_ips().size()) > profile.public_ip_quota)
         return fmt::format("{} public IPs exceed quota {}", cloud.public_ips().size(), profile.public_ip_quota);
      for (const auto& [id, v] : cloud.volumes()) {
         if (v.kind == cloud::VolumeKind::block && v.attached.size() > 1) return "block volume '" + id + "' attached twice";
         for (const auto& vm : v.attached)
            if (!cloud.vms().count(vm)) return "volume '" + id + "' attached to missing VM '" + vm + "'";
      }
      return cluster.check_invariants();
   };
   auto vm_ids = [&] {
      std::vector<std::string> ids;
      for (const auto& [id, v] : cloud.vms()) ids.push_back(id);
      return ids;
   };

   for (int step = 0; step < steps; ++step) {
      try {
         switch (rng() % 10) {
            case 0:
            case 1: {
               static constexpr spec::Role roles[] = {spec::Role::master, spec::Role::service, spec::Role::storage, spec::Role::edge};
               cloud::ProvisionRequest req;
               req.descriptor.role = roles[pick(4)];
               req.descriptor.index = next_vm;
               req.descriptor.name = fmt::format("{}-{:03d}", spec::to_string(req.descriptor.role), next_vm++);
               req.descriptor.flavor = pick(2) ? "s1.modest" : "s1.large";
               req.descriptor.public_ip = pick(2) == 0;
               req.descriptor.volume_gb = req.descriptor.role == spec::Role::storage ? 100 : 0;
               req.node.role = req.descriptor.role;
               req.node.flavor = profile.flavor_catalog.at(req.descriptor.flavor);
               req.node.public_ip_required = req.descriptor.public_ip;
               req.node.block_volume_gb = req.descriptor.volume_gb;
               req.image = cloud::BootImage::vanilla;
               req.created_at = cloud.clock() + 1.0;
               req.boot_duration = double(pick(20));
               auto& vm = cloud.provision_vm(req);
               cloud.schedule_ready(vm.id, req.created_at + req.boot_duration + 1.0);
               break;
            }
            case 2: {
               double t = cloud.clock() + double(pick(15));
               for (const auto& e : cloud.advance_to(t)) cluster.on_cloud_event(e);
               cluster.sync_nodes(cloud);
               cluster.advance_to(std::max(cluster.clock(), t));
               break;
            }
            case 3: {
               auto ids = vm_ids();
               if (!ids.empty()) cloud.schedule_destroy(ids[pick(ids.size())], cloud.clock() + 1.0);
               break;
            }
            case 4: cloud.create_volume(pick(2) ? cloud::VolumeKind::block : cloud::VolumeKind::shared_posix, 10); break;
            case 5: {
               auto ids = vm_ids();
               if (ids.empty() || cloud.volumes().empty()) break;
               auto v = cloud.volumes().begin();
               std::advance(v, std::ptrdiff_t(pick(cloud.volumes().size())));
               if (pick(3) == 0 && !v->second.attached.empty())
                  cloud.detach_volume(v->second.attached.front(), v->first);
               else
                  cloud.attach_volume(ids[pick(ids.size())], v->first);
               break;
            }
            case 6: {
               orch::ContainerSpec s;
               s.image = "img";
               s.vcpus = 0.5 * double(1 + pick(6));
               s.kind = pick(2) ? orch::ContainerKind::short_lived : orch::ContainerKind::long_running;
               if (pick(2)) s.replica_group = "g" + std::to_string(pick(3));
               auto id = cluster.create_container(s);
               containers.push_back(id);
               cluster.schedule(id);
               break;
            }
            case 7: {
               if (containers.empty()) break;
               const auto& id = containers[pick(containers.size())];
               const auto& c = cluster.container(id);
               if (c.state == orch::ContainerState::running) cluster.complete(id, c.kind == orch::ContainerKind::short_lived && pick(2));
               break;
            }
            case 8: {
               auto ids = vm_ids();
               if (!ids.empty()) cloud.inject_failure(ids[pick(ids.size())], cloud.clock() + double(pick(5)));
               break;
            }
            default: {
               if (containers.empty()) break;
               cluster.schedule(containers[pick(containers.size())]);
               break;
            }
         }
      } catch (const Error&) {
         // refused operations are part of the sequence; only invariant breaks count
      }
      if (auto v = check(); !v.empty()) return fmt::format("step {}: {}", step, v);
   }
   return "";
}

/// Random printable secret whose bytes would be visible if leaked verbatim.
inline std::string random_secret(std::mt19937_64& rng) {
   static constexpr std::string_view alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789!#$%&*+-=?@^_~";
   std::string s;
   const std::size_t len = 16 + rng() % 33;
   for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
   return s;
}

/// Installs a manifest that mounts `secret`, exercises every emitter and
/// searches their output for the secret bytes.
inline std::string secret_hygiene_trial(const Deployed& base, const std::string& secret) {
   Deployed d = base;
   orch::PackageManifest m = replica_manifest(2);
   m.groups[0].secrets = {"api-token"};
   m.secrets = {"api-token", "db-password"};
   m.claims.push_back({"scratch", orch::ClaimKind::shared_posix, 5});
   m.groups[0].claims = {"scratch"};
   d.cluster.install_package(m, &d.cloud, [&](const std::string& name) { return name == "api-token" ? secret : secret + "-db"; });
   d.cluster.put_secret("extra", secret);
   const auto& first = d.cluster.containers().begin()->first;
   d.cluster.mount_secret(first, "extra");

   edge::DnsZone zone;
   edge::RouteTable routes;
   edge::update_records(zone, d.cluster);
   edge::add_rule(routes, edge::hostname_for(zone, "work"), "work", d.cluster);

   deploy::DeploymentReport report;
   report.provider = "openstack-sim";
   std::vector<std::string> artifacts = {
      d.cluster.render_text(),
      d.cluster.render().dump(),
      edge::route_dump_csv(routes, d.cluster, zone),
      edge::to_json(zone, routes).dump(),
      cloud::event_log_csv(d.cloud.event_log()),
      nlohmann::json(d.cloud).dump(),
      deploy::reports_csv({report}),
      deploy::reports_json({report}),
      orch::ClusterState::from_json(d.cluster.render()).render_text(),
   };
   for (const auto& line : d.cluster.log()) artifacts.push_back(line);
   for (std::size_t i = 0; i < artifacts.size(); ++i)
      if (artifacts[i].find(secret) != std::string::npos) return fmt::format("secret bytes found in artifact #{}", i);
   return "";
}

}
