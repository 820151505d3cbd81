#pragma once

// Edge layer: wildcard dynamic DNS (or nip.io-style names), optional CDN
// proxying, and per-host round-robin reverse proxying.

#include "vre/error.hpp"
#include "vre/orchestrator.hpp"
#include "vre/util.hpp"

#include <map>
#include <string>
#include <vector>

namespace vre::edge {

/// Resolution or routing failure; `status` mirrors the HTTP-ish outcome.
class RouteError : public Error {
   public:
   RouteError(int status, const std::string& what) : Error(ErrorKind::state, what), status_(status) {}
   int status() const noexcept { return status_; }

   private:
   int status_;
};

/// Extracts the dotted quad in front of `.nip.io`. Throws ValidationError.
Ipv4 resolve_nipio(std::string_view fqdn);

struct DnsZone {
   std::string base_domain = "nipio";
   std::vector<Ipv4> wildcard_targets;
   bool proxied = false;
   /// Round-robin position for wildcard answers.
   std::size_t cursor = 0;

   bool nipio() const { return base_domain == "nipio"; }
};

/// nip.io mode parses the address out of the name; wildcard mode answers any
/// `<label>.<base_domain>` with the targets in rotation.
Ipv4 resolve(DnsZone& zone, std::string_view fqdn);

/// Resets targets to the live edge public IPs (master's when there are no edge nodes).
DnsZone& update_records(DnsZone& zone, const orch::ClusterState& cluster);
std::vector<Ipv4> live_edge_ips(const orch::ClusterState& cluster);

/// Public hostname of an exposed service.
std::string hostname_for(const DnsZone& zone, const std::string& service);

struct Hop {
   std::string from;
   std::string to;
   bool encrypted = false;
};

/// External path of a request; every hop through the CDN is encrypted when proxied.
std::vector<Hop> external_hops(const DnsZone& zone);

struct RouteRule {
   std::string service;
   std::size_t cursor = 0;
};

struct RouteTable {
   std::map<std::string, RouteRule> host_rules;
};

void add_rule(RouteTable& table, const std::string& host, const std::string& service, const orch::ClusterState& cluster);

/// Round-robin over the current endpoints of the host's service.
/// 404 when no rule matches, 503 when the service has no running backend.
Ipv4 route(RouteTable& table, std::string_view host, const orch::ClusterState& cluster);

/// CSV `host,service,endpoint_count,proxied`.
std::string route_dump_csv(const RouteTable& table, const orch::ClusterState& cluster, const DnsZone& zone);

nlohmann::json to_json(const DnsZone& zone, const RouteTable& table);
void from_json(const nlohmann::json& j, DnsZone& zone, RouteTable& table);

}
