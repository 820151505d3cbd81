#include "vre/cli.hpp"

#include "vre/calibration.hpp"
#include "vre/catalog.hpp"
#include "vre/deployer.hpp"
#include "vre/edgenet.hpp"
#include "vre/error.hpp"
#include "vre/session.hpp"
#include "vre/workloads.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fstream>
#include <ostream>
#include <sstream>

namespace vre::cli {

namespace {

struct Globals {
   std::optional<std::uint64_t> seed;
   std::string format = "csv";
   bool quiet = false;

   bool json() const { return format == "json"; }
};

std::string read_text(const std::string& path) {
   std::ifstream in(path, std::ios::binary);
   if (!in) throw ValidationError("cannot read " + path);
   std::ostringstream ss;
   ss << in.rdbuf();
   return ss.str();
}

void emit(std::ostream& out, const std::string& text, const std::string& output) {
   if (output.empty()) {
      out << text;
      return;
   }
   std::ofstream f(output, std::ios::binary | std::ios::trunc);
   if (!f) throw StateError("cannot write " + output);
   f << text;
}

//---------------------------------------------------------------------------
nlohmann::json descriptor_json(const spec::ResourceDescriptor& r) {
   return {{"name", r.name}, {"role", spec::to_string(r.role)}, {"flavor", r.flavor}, {"public_ip", r.public_ip}, {"volume_gb", r.volume_gb}};
}

nlohmann::json plan_json(const spec::SpecDiff& diff) {
   nlohmann::json j = {{"create", nlohmann::json::array()}, {"destroy", nlohmann::json::array()}, {"unchanged", nlohmann::json::array()}};
   for (const auto& r : diff.to_create) j["create"].push_back(descriptor_json(r));
   for (const auto& r : diff.to_destroy) j["destroy"].push_back(descriptor_json(r));
   for (const auto& r : diff.unchanged) j["unchanged"].push_back(r.name);
   return j;
}

std::string plan_text(const spec::SpecDiff& diff) {
   if (diff.empty()) return "No changes.\n";
   std::string out;
   for (const auto& r : diff.to_destroy) out += fmt::format("- {} ({})\n", r.name, r.flavor);
   for (const auto& r : diff.to_create) {
      out += fmt::format("+ {} ({}{}", r.name, r.flavor, r.public_ip ? ", public ip" : "");
      out += r.volume_gb > 0 ? fmt::format(", {} GB volume)\n", r.volume_gb) : ")\n";
   }
   out += fmt::format("Plan: {} to create, {} to destroy, {} unchanged.\n", diff.to_create.size(), diff.to_destroy.size(),
                      diff.unchanged.size());
   return out;
}

spec::SpecDiff plan_for(const spec::ClusterSpec& desired, const std::optional<Deployment>& current) {
   if (current && current->spec.provider != desired.provider)
      throw StateError(fmt::format("cluster runs on '{}'; destroy it before switching to '{}'", current->spec.provider, desired.provider));
   return spec::diff_spec(current ? current->cloud.inventory() : std::vector<spec::ResourceDescriptor>{}, desired);
}

//---------------------------------------------------------------------------
int cmd_init(const Globals& g, const std::string& provider, const std::string& path, std::ostream& out) {
   DeployDirectory::init(provider, path);
   if (!g.quiet) out << "Initialized " << path << " for " << provider << "\n";
   return 0;
}

int cmd_plan(const Globals& g, const std::string& path, std::ostream& out) {
   DeployDirectory dir(path);
   auto desired = dir.read_spec();
   auto current = dir.load(calib::default_calibration());
   auto diff = plan_for(desired, current);
   out << (g.json() ? plan_json(diff).dump(2) + "\n" : plan_text(diff));
   return 0;
}

int cmd_apply(const Globals& g, const std::string& path, std::ostream& out) {
   DeployDirectory dir(path);
   dir.require_initialized();
   ApplyGuard guard(dir);
   const auto& fixture = calib::default_calibration();
   auto desired = dir.read_spec();
   const std::uint64_t seed = g.seed.value_or(desired.seed);
   auto current = dir.load(fixture);
   auto diff = plan_for(desired, current);

   Deployment d = current ? std::move(*current)
                          : Deployment{desired, cloud::CloudState(fixture.profile(desired.provider)), orch::ClusterState(desired.master_schedulable),
                                       {}, {}};
   auto report = deploy::apply(diff, d.cloud, fixture.strategy(desired.strategy), seed);
   d.spec = desired;
   d.zone.base_domain = desired.domain;
   d.zone.proxied = desired.proxy_mode;
   d.cluster.sync_nodes(d.cloud);
   d.cluster.advance_to(d.cloud.clock());
   edge::update_records(d.zone, d.cluster);
   dir.save(d, seed);

   if (g.json()) {
      out << nlohmann::json{{"plan", plan_json(diff)}, {"report", deploy::report_to_json(report)}}.dump(2) << "\n";
   } else {
      if (!g.quiet) out << plan_text(diff);
      out << deploy::reports_csv({report});
   }
   return 0;
}

int cmd_install(const Globals& g, const std::string& path, const std::string& manifest_path, std::ostream& out) {
   DeployDirectory dir(path);
   dir.require_initialized();
   auto manifest = orch::parse_manifest(read_text(manifest_path));
   ApplyGuard guard(dir);
   auto d = dir.load(calib::default_calibration());
   if (!d) throw StateError("no cluster");
   auto result = d->cluster.install_package(manifest, &d->cloud, [&](const std::string& name) { return dir.read_secret(name); });
   edge::update_records(d->zone, d->cluster);
   std::vector<std::pair<std::string, std::string>> hosts;
   for (const auto& svc : result.exposed_services) {
      auto host = edge::hostname_for(d->zone, svc);
      edge::add_rule(d->routes, host, svc, d->cluster);
      hosts.emplace_back(svc, host);
   }
   dir.save(*d, dir.read_lock()->seed);

   if (g.json()) {
      nlohmann::json j = {{"containers", result.containers}, {"services", result.services}, {"claims", result.claims},
                          {"hostnames", nlohmann::json::object()}};
      for (const auto& [svc, host] : hosts) j["hostnames"][svc] = host;
      out << j.dump(2) << "\n";
      return 0;
   }
   out << "kind,name,detail\n";
   for (const auto& c : result.containers) out << fmt::format("container,{},{}\n", c, d->cluster.container(c).node.value_or(""));
   for (const auto& s : result.services) out << fmt::format("service,{},{}\n", s, d->cluster.services().at(s).endpoints.size());
   for (const auto& c : result.claims) out << fmt::format("claim,{},{}\n", c, d->cluster.claims().at(c).backing_volume);
   for (const auto& [svc, host] : hosts) out << fmt::format("hostname,{},{}\n", svc, host);
   return 0;
}

int cmd_destroy(const Globals& g, const std::string& path, std::ostream& out) {
   DeployDirectory dir(path);
   dir.require_initialized();
   ApplyGuard guard(dir);
   deploy::TeardownReport report;
   if (auto d = dir.load(calib::default_calibration())) {
      report = deploy::destroy(d->cloud);
      dir.clear();
   }
   if (g.json()) {
      out << nlohmann::json{{"vms_released", report.vms_released},
                            {"volumes_released", report.volumes_released},
                            {"ips_released", report.ips_released},
                            {"teardown_s", report.teardown_s}}
                .dump(2)
          << "\n";
   } else {
      out << "vms_released,volumes_released,ips_released,teardown_s\n";
      out << fmt::format("{},{},{},{}\n", report.vms_released, report.volumes_released, report.ips_released,
                         format_double(report.teardown_s));
   }
   return 0;
}

int cmd_status(const Globals& g, const std::string& path, std::ostream& out) {
   DeployDirectory dir(path);
   auto d = dir.load(calib::default_calibration());
   if (!d) {
      out << (g.json() ? "{\"cluster\": null}\n" : "no cluster\n");
      return 0;
   }
   if (g.json()) {
      nlohmann::json j = {{"provider", d->spec.provider}, {"cluster", d->cluster.render()}, {"edge", edge::to_json(d->zone, d->routes)}};
      out << j.dump(2) << "\n";
      return 0;
   }
   out << "node,role,vcpus,allocated_vcpus,healthy,private_ip,public_ip\n";
   for (const auto& [id, n] : d->cluster.nodes())
      out << fmt::format("{},{},{},{},{},{},{}\n", id, spec::to_string(n.role), n.capacity_vcpus, format_double(n.allocated_vcpus),
                         n.healthy ? "true" : "false", n.private_ip.str(), n.public_ip ? n.public_ip->str() : "");
   return 0;
}

int cmd_resolve(const Globals& g, const std::string& fqdn, const std::string& path, std::ostream& out) {
   Ipv4 ip;
   if (path.empty()) {
      ip = edge::resolve_nipio(fqdn);
   } else {
      auto d = DeployDirectory(path).load(calib::default_calibration());
      if (!d) throw StateError("no cluster");
      ip = edge::resolve(d->zone, fqdn);
   }
   out << (g.json() ? nlohmann::json{{"fqdn", fqdn}, {"address", ip.str()}}.dump(2) + "\n" : ip.str() + "\n");
   return 0;
}

//---------------------------------------------------------------------------
struct BenchFlags {
   std::string scales = "1,2,4,8";
   int trials = 5;
   std::string strategies = "decentralized,centralized";
   std::string provider = "openstack-sim";
   std::string tool = "csi-like";
   std::string vcpus;
   int base = 10;
   int storage = 3;
   std::string output;
};

int bench_deploy(const Globals& g, const BenchFlags& f, std::ostream& out) {
   const auto& fixture = calib::default_calibration();
   deploy::BenchmarkConfig config;
   config.scales = parse_int_list(f.scales);
   config.trials = f.trials;
   config.profile = fixture.profile(f.provider);
   config.seed = g.seed.value_or(0);
   for (const auto& name : split(f.strategies, ',')) {
      auto kind = spec::parse_strategy(name);
      if (!kind) throw ValidationError("unknown strategy '" + name + "'");
      config.strategies.push_back(fixture.strategy(*kind));
   }
   auto rows = deploy::run_scaling_benchmark(config);
   emit(out, g.json() ? deploy::reports_json(rows) : deploy::reports_csv(rows), f.output);
   return 0;
}

int bench_scaling(const Globals& g, const BenchFlags& f, bool weak, std::ostream& out) {
   const auto& fixture = calib::default_calibration();
   auto vcpus = parse_int_list(f.vcpus.empty() ? (weak ? "10,20,30,40" : "1,2,4,8") : f.vcpus);
   int max_n = 0;
   for (int n : vcpus) {
      if (n < 1) throw ValidationError("vcpu counts must be positive");
      max_n = std::max(max_n, n);
   }
   auto cluster = work::benchmark_cluster(builtin_catalog(f.provider), std::max(max_n, 1), f.storage);
   std::vector<work::ScalingResult> rows;
   if (weak) {
      rows = work::wse_series(fixture.weak_plan(f.tool, f.storage), cluster, vcpus, f.base);
   } else {
      rows = work::speedup_series(fixture.strong_plan(f.tool, f.storage), cluster, vcpus);
   }
   auto mode = weak ? work::Mode::weak : work::Mode::strong;
   emit(out, g.json() ? work::results_json(f.tool, mode, rows) : work::results_csv(f.tool, mode, rows), f.output);
   return 0;
}

int exit_for_parse_error(const CLI::ParseError& e) {
   return e.get_exit_code() == 0 ? 0 : exit_code_for(ErrorKind::validation);
}

}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
   CLI::App app{"Plan, apply and benchmark simulated on-demand research clusters", "vre"};
   app.require_subcommand(1);
   Globals g;
   std::uint64_t seed_value = 0;
   auto* seed_opt = app.add_option("--seed", seed_value, "Seed for jitter and benchmark trials");
   app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
   app.add_flag("--quiet", g.quiet, "Suppress informational output");
   app.fallthrough();

   std::string provider, dir, manifest, fqdn, resolve_dir;
   auto* init = app.add_subcommand("init", "Create a deployment directory with a template spec");
   init->add_option("provider", provider)->required();
   init->add_option("directory", dir)->required();

   auto* plan = app.add_subcommand("plan", "Show what apply would change");
   plan->add_option("directory", dir)->required();
   auto* apply = app.add_subcommand("apply", "Create or update the cluster");
   apply->add_option("directory", dir)->required();
   auto* install = app.add_subcommand("install", "Install a package manifest on the cluster");
   install->add_option("directory", dir)->required();
   install->add_option("manifest", manifest)->required();
   auto* destroy = app.add_subcommand("destroy", "Release every cloud resource of the cluster");
   destroy->add_option("directory", dir)->required();
   auto* status = app.add_subcommand("status", "Show the applied cluster");
   status->add_option("directory", dir)->required();
   auto* resolve = app.add_subcommand("resolve", "Resolve a hostname (nip.io, or a deployment's zone with --dir)");
   resolve->add_option("fqdn", fqdn)->required();
   resolve->add_option("--dir", resolve_dir, "Deployment directory whose zone answers the query");

   BenchFlags bf;
   auto* bench = app.add_subcommand("bench", "Run a benchmark harness");
   bench->require_subcommand(1);
   auto* b_deploy = bench->add_subcommand("deploy", "Deployment time over cluster scales");
   b_deploy->add_option("--scales", bf.scales, "Scale factors k (8k nodes)");
   b_deploy->add_option("--trials", bf.trials)->check(CLI::PositiveNumber);
   b_deploy->add_option("--strategies", bf.strategies);
   b_deploy->add_option("--provider", bf.provider);
   b_deploy->add_option("--output", bf.output, "Write rows to a file instead of stdout");
   auto* b_speedup = bench->add_subcommand("speedup", "Strong scaling of a tool profile");
   auto* b_weak = bench->add_subcommand("weak", "Weak scaling efficiency of a tool profile");
   for (auto* b : {b_speedup, b_weak}) {
      b->add_option("--tool", bf.tool);
      b->add_option("--vcpus", bf.vcpus, "Comma-separated vCPU counts");
      b->add_option("--storage", bf.storage, "Storage nodes serving the data");
      b->add_option("--provider", bf.provider);
      b->add_option("--output", bf.output, "Write rows to a file instead of stdout");
   }
   b_weak->add_option("--base", bf.base, "Baseline vCPU count");
   for (auto* sub : {init, plan, apply, install, destroy, status, resolve, bench, b_deploy, b_speedup, b_weak}) sub->fallthrough();

   try {
      app.parse(argc, argv);
   } catch (const CLI::ParseError& e) {
      app.exit(e, out, err);
      return exit_for_parse_error(e);
   }
   if (*seed_opt) g.seed = seed_value;

   try {
      if (*init) return cmd_init(g, provider, dir, out);
      if (*plan) return cmd_plan(g, dir, out);
      if (*apply) return cmd_apply(g, dir, out);
      if (*install) return cmd_install(g, dir, manifest, out);
      if (*destroy) return cmd_destroy(g, dir, out);
      if (*status) return cmd_status(g, dir, out);
      if (*resolve) return cmd_resolve(g, fqdn, resolve_dir, out);
      if (*b_deploy) return bench_deploy(g, bf, out);
      if (*b_speedup) return bench_scaling(g, bf, false, out);
      if (*b_weak) return bench_scaling(g, bf, true, out);
   } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return exit_code_for(e.kind());
   } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 1;
   }
   return 0;
}

}
