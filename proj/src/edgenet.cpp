#include "vre/edgenet.hpp"

#include "vre/error.hpp"

#include <algorithm>
#include <cctype>
#include <fmt/format.h>

namespace vre::edge {

namespace {

std::string lower(std::string_view s) {
   std::string out(s);
   std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return char(std::tolower(c)); });
   return out;
}

std::string normalize(std::string_view fqdn) {
   std::string name = lower(fqdn);
   if (!name.empty() && name.back() == '.') name.pop_back();
   if (name.empty()) throw ValidationError("empty domain name");
   for (const auto& label : split(name, '.'))
      if (label.empty()) throw ValidationError("malformed domain name '" + std::string(fqdn) + "'");
   return name;
}

constexpr std::string_view nipio_suffix = ".nip.io";

}

Ipv4 resolve_nipio(std::string_view fqdn) {
   auto name = normalize(fqdn);
   if (name.size() <= nipio_suffix.size() || name.compare(name.size() - nipio_suffix.size(), nipio_suffix.size(), nipio_suffix) != 0)
      throw ValidationError("'" + std::string(fqdn) + "' is outside the nip.io zone");
   auto labels = split(std::string_view(name).substr(0, name.size() - nipio_suffix.size()), '.');
   if (labels.size() < 4) throw ValidationError("malformed nip.io address in '" + std::string(fqdn) + "'");
   std::uint32_t value = 0;
   for (std::size_t i = labels.size() - 4; i < labels.size(); ++i) {
      auto octet = parse_octet(labels[i]);
      if (!octet) throw ValidationError("malformed nip.io address: label '" + labels[i] + "' in '" + std::string(fqdn) + "' is not 0-255");
      value = (value << 8) | *octet;
   }
   return Ipv4(value);
}

Ipv4 resolve(DnsZone& zone, std::string_view fqdn) {
   if (zone.nipio()) return resolve_nipio(fqdn);
   auto name = normalize(fqdn);
   auto base = lower(zone.base_domain);
   if (name.size() <= base.size() + 1 || name.compare(name.size() - base.size(), base.size(), base) != 0 ||
       name[name.size() - base.size() - 1] != '.')
      throw ValidationError("'" + std::string(fqdn) + "' is outside the zone '" + zone.base_domain + "'");
   if (zone.wildcard_targets.empty()) throw RouteError(503, "zone '" + zone.base_domain + "' has no wildcard targets");
   auto ip = zone.wildcard_targets[zone.cursor % zone.wildcard_targets.size()];
   zone.cursor = (zone.cursor + 1) % zone.wildcard_targets.size();
   return ip;
}

std::vector<Ipv4> live_edge_ips(const orch::ClusterState& cluster) {
   std::vector<Ipv4> edges;
   bool any_edge = false;
   for (const auto& [id, n] : cluster.nodes()) {
      if (n.role != spec::Role::edge) continue;
      any_edge = true;
      if (n.healthy && n.public_ip) edges.push_back(*n.public_ip);
   }
   if (!any_edge)
      for (const auto& [id, n] : cluster.nodes())
         if (n.role == spec::Role::master && n.healthy && n.public_ip) edges.push_back(*n.public_ip);
   return edges;
}

DnsZone& update_records(DnsZone& zone, const orch::ClusterState& cluster) {
   auto targets = live_edge_ips(cluster);
   if (targets != zone.wildcard_targets) zone.cursor = 0;
   zone.wildcard_targets = std::move(targets);
   return zone;
}

std::string hostname_for(const DnsZone& zone, const std::string& service) {
   if (zone.nipio()) {
      if (zone.wildcard_targets.empty()) throw RouteError(503, "no edge address to build a nip.io name for '" + service + "'");
      return service + "." + zone.wildcard_targets.front().str() + ".nip.io";
   }
   return service + "." + zone.base_domain;
}

std::vector<Hop> external_hops(const DnsZone& zone) {
   if (zone.proxied) return {{"client", "cdn", true}, {"cdn", "edge", true}};
   return {{"client", "edge", false}};
}

void add_rule(RouteTable& table, const std::string& host, const std::string& service, const orch::ClusterState& cluster) {
   auto it = cluster.services().find(service);
   if (it == cluster.services().end()) throw StateError("cannot route '" + host + "': unknown service '" + service + "'");
   if (!it->second.exposed) throw StateError("cannot route '" + host + "': service '" + service + "' is not exposed");
   table.host_rules[lower(host)] = {service, 0};
}

Ipv4 route(RouteTable& table, std::string_view host, const orch::ClusterState& cluster) {
   auto it = table.host_rules.find(lower(host));
   if (it == table.host_rules.end()) throw RouteError(404, "no route for host '" + std::string(host) + "'");
   auto& rule = it->second;
   auto svc = cluster.services().find(rule.service);
   if (svc == cluster.services().end() || svc->second.endpoints.empty())
      throw RouteError(503, "service '" + rule.service + "' has no running backends");
   const auto& eps = svc->second.endpoints;
   auto ip = eps[rule.cursor % eps.size()];
   rule.cursor = (rule.cursor + 1) % eps.size();
   return ip;
}

std::string route_dump_csv(const RouteTable& table, const orch::ClusterState& cluster, const DnsZone& zone) {
   std::string out = "host,service,endpoint_count,proxied\n";
   for (const auto& [host, rule] : table.host_rules) {
      auto svc = cluster.services().find(rule.service);
      std::size_t count = svc == cluster.services().end() ? 0 : svc->second.endpoints.size();
      out += fmt::format("{},{},{},{}\n", host, rule.service, count, zone.proxied ? "true" : "false");
   }
   return out;
}

nlohmann::json to_json(const DnsZone& zone, const RouteTable& table) {
   nlohmann::json targets = nlohmann::json::array();
   for (auto ip : zone.wildcard_targets) targets.push_back(ip.str());
   nlohmann::json rules = nlohmann::json::object();
   for (const auto& [host, rule] : table.host_rules) rules[host] = {{"service", rule.service}, {"cursor", rule.cursor}};
   return {{"base_domain", zone.base_domain}, {"proxied", zone.proxied}, {"cursor", zone.cursor}, {"wildcard_targets", targets},
           {"routes", rules}};
}

void from_json(const nlohmann::json& j, DnsZone& zone, RouteTable& table) {
   try {
      zone.base_domain = j.at("base_domain").get<std::string>();
      zone.proxied = j.at("proxied").get<bool>();
      zone.cursor = j.at("cursor").get<std::size_t>();
      zone.wildcard_targets.clear();
      for (const auto& t : j.at("wildcard_targets")) {
         auto ip = Ipv4::parse(t.get<std::string>());
         if (!ip) throw StateError("corrupt zone state: bad target");
         zone.wildcard_targets.push_back(*ip);
      }
      table.host_rules.clear();
      for (const auto& [host, r] : j.at("routes").items())
         table.host_rules[host] = {r.at("service").get<std::string>(), r.at("cursor").get<std::size_t>()};
   } catch (const nlohmann::json::exception& e) {
      throw StateError(std::string("corrupt zone state: ") + e.what());
   }
}

}
