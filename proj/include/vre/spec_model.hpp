#pragma once

#include "vre/catalog.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vre::spec {

/// Node roles, in creation order.
enum class Role { master, edge, storage, service };
enum class Strategy { decentralized, centralized };

std::string_view to_string(Role role);
std::string_view to_string(Strategy strategy);
std::optional<Role> parse_role(std::string_view text);
std::optional<Strategy> parse_strategy(std::string_view text);

inline constexpr std::string_view nipio_domain = "nipio";
inline constexpr int storage_volume_gb = 100;

struct NodeSpec {
   Role role = Role::service;
   Flavor flavor;
   bool public_ip_required = false;
   /// Size of the block volume attached at creation; 0 when none.
   int block_volume_gb = 0;
};

/// Declarative cluster description.
struct ClusterSpec {
   std::string provider = "openstack-sim";
   std::string domain = std::string(nipio_domain);
   int master_count = 1;
   int service_count = 0;
   int edge_count = 0;
   int storage_count = 0;
   std::map<Role, Flavor> flavors;
   bool proxy_mode = false;
   bool master_schedulable = false;
   bool external_filesystem = false;
   Strategy strategy = Strategy::decentralized;
   std::uint64_t seed = 0;

   /// With no edge nodes the master reverse-proxies exposed services.
   bool master_is_proxy() const { return edge_count == 0; }
   int total_non_master() const { return service_count + edge_count + storage_count; }
   int count(Role role) const;
   NodeSpec node_spec(Role role) const;

   bool operator==(const ClusterSpec&) const = default;
};

/// Parses and validates a spec document, filling defaults. Throws SyntaxError / ValidationError.
ClusterSpec parse_spec(std::string_view document);

/// Canonical byte-stable rendering (sorted keys, LF endings).
std::string render_spec(const ClusterSpec& spec);

/// Throws ValidationError naming the first violated invariant.
void validate(const ClusterSpec& spec);

/// Benchmark topology: master acting as edge, 5k service and 3k storage nodes.
ClusterSpec default_benchmark_spec(int scale, std::string_view provider = "openstack-sim");

//---------------------------------------------------------------------------
/// One provisionable unit; storage nodes carry their block volume.
struct ResourceDescriptor {
   std::string name;
   Role role = Role::service;
   int index = 0;
   std::string flavor;
   bool public_ip = false;
   int volume_gb = 0;

   bool operator==(const ResourceDescriptor&) const = default;
};

std::vector<ResourceDescriptor> desired_resources(const ClusterSpec& spec);

struct SpecDiff {
   std::vector<ResourceDescriptor> to_create;
   std::vector<ResourceDescriptor> to_destroy;
   std::vector<ResourceDescriptor> unchanged;

   bool empty() const { return to_create.empty() && to_destroy.empty(); }
};

/// Plans the transition from the `current` inventory to `desired`.
/// Creates are ordered by (role, index); destroys remove the highest index first.
SpecDiff diff_spec(const std::vector<ResourceDescriptor>& current, const ClusterSpec& desired);

}
