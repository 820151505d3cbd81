#include "vre/spec_model.hpp"

#include "vre/error.hpp"
#include "vre/util.hpp"
#include "yamldoc.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace vre::spec {

namespace {

constexpr std::array all_roles{Role::master, Role::edge, Role::storage, Role::service};

bool valid_hostname(std::string_view name) {
   if (name.empty() || name.size() > 253) return false;
   for (const auto& label : split(name, '.')) {
      if (label.empty() || label.size() > 63) return false;
      if (label.front() == '-' || label.back() == '-') return false;
      for (char c : label) {
         bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-';
         if (!ok) return false;
      }
   }
   return true;
}

}

std::string_view to_string(Role role) {
   switch (role) {
      case Role::master: return "master";
      case Role::edge: return "edge";
      case Role::storage: return "storage";
      case Role::service: return "service";
   }
   return "?";
}

std::string_view to_string(Strategy strategy) {
   return strategy == Strategy::decentralized ? "decentralized" : "centralized";
}

std::optional<Role> parse_role(std::string_view text) {
   for (auto r : all_roles)
      if (to_string(r) == text) return r;
   return std::nullopt;
}

std::optional<Strategy> parse_strategy(std::string_view text) {
   if (text == "decentralized") return Strategy::decentralized;
   if (text == "centralized") return Strategy::centralized;
   return std::nullopt;
}

int ClusterSpec::count(Role role) const {
   switch (role) {
      case Role::master: return master_count;
      case Role::edge: return edge_count;
      case Role::storage: return storage_count;
      case Role::service: return service_count;
   }
   return 0;
}

NodeSpec ClusterSpec::node_spec(Role role) const {
   NodeSpec n;
   n.role = role;
   n.flavor = flavors.at(role);
   n.public_ip_required = role == Role::edge || (role == Role::master && master_is_proxy());
   n.block_volume_gb = role == Role::storage ? storage_volume_gb : 0;
   return n;
}

void validate(const ClusterSpec& spec) {
   const auto& catalog = builtin_catalog(spec.provider);
   if (spec.master_count > 1) throw ValidationError("multiple masters unsupported (master count " + std::to_string(spec.master_count) + ")");
   if (spec.master_count < 1) throw ValidationError("exactly one master required");
   for (auto role : {Role::service, Role::edge, Role::storage})
      if (spec.count(role) < 0) throw ValidationError("node count for '" + std::string(to_string(role)) + "' must be non-negative");
   bool single_server = spec.service_count == 0 && spec.edge_count == 0 && spec.storage_count == 0;
   if (spec.storage_count == 0 && !spec.external_filesystem && !single_server)
      throw ValidationError("storage nodes required unless an external filesystem is set");
   for (auto role : all_roles) {
      auto it = spec.flavors.find(role);
      if (it == spec.flavors.end()) throw ValidationError("no flavor for role '" + std::string(to_string(role)) + "'");
      const auto* known = catalog.find(it->second.name);
      if (!known || !(*known == it->second))
         throw ValidationError("unknown flavor '" + it->second.name + "' for role '" + std::string(to_string(role)) +
                               "' on provider '" + spec.provider + "'");
      if (it->second.vcpus < 1 || !(it->second.ram_gb > 0)) throw ValidationError("flavor '" + it->second.name + "' must have vcpus >= 1 and ram > 0");
   }
   if (spec.domain != nipio_domain && !valid_hostname(spec.domain))
      throw ValidationError("domain '" + spec.domain + "' is not a valid hostname");
}

ClusterSpec parse_spec(std::string_view document) {
   auto root = detail::load_document(document);
   detail::MapReader top(root, "");
   ClusterSpec spec;
   spec.provider = top.required<std::string>("provider");
   const auto& catalog = builtin_catalog(spec.provider);
   spec.domain = top.get<std::string>("domain", spec.domain);
   auto strategy = top.get<std::string>("strategy", std::string(to_string(spec.strategy)));
   auto parsed_strategy = parse_strategy(strategy);
   if (!parsed_strategy) throw ValidationError("unknown strategy '" + strategy + "'");
   spec.strategy = *parsed_strategy;
   spec.seed = top.get<std::uint64_t>("seed", 0);
   spec.proxy_mode = top.get<bool>("proxy", false);

   std::map<Role, std::string> flavor_names;
   for (auto role : all_roles) flavor_names[role] = catalog.default_flavor;
   if (top.has("nodes")) {
      detail::MapReader nodes(top.child("nodes"), "nodes");
      spec.master_count = nodes.get<int>("master", 1);
      spec.service_count = nodes.get<int>("service", 0);
      spec.storage_count = nodes.get<int>("storage", 0);
      spec.edge_count = nodes.get<int>("edge", 0);
      spec.external_filesystem = nodes.get<bool>("external_filesystem", false);
      if (nodes.has("flavor")) {
         detail::MapReader flavor(nodes.child("flavor"), "nodes.flavor");
         for (auto role : all_roles) flavor_names[role] = flavor.get<std::string>(std::string(to_string(role)), flavor_names[role]);
         flavor.finish();
      }
      nodes.finish();
   } else {
      top.child("nodes");
   }
   bool single_server = spec.total_non_master() == 0;
   spec.master_schedulable = top.get<bool>("master_schedulable", single_server);
   top.finish();

   for (auto role : all_roles) {
      const auto* f = catalog.find(flavor_names[role]);
      spec.flavors[role] = f ? *f : Flavor{flavor_names[role], 0, 0.0};
   }
   validate(spec);
   return spec;
}

std::string render_spec(const ClusterSpec& spec) {
   TextNode root;
   root["provider"] = spec.provider;
   root["domain"] = spec.domain;
   root["strategy"] = std::string(to_string(spec.strategy));
   root["seed"] = std::to_string(spec.seed);
   root["proxy"] = TextNode::boolean(spec.proxy_mode);
   root["master_schedulable"] = TextNode::boolean(spec.master_schedulable);
   auto& nodes = root["nodes"];
   nodes["master"] = TextNode::integer(spec.master_count);
   nodes["service"] = TextNode::integer(spec.service_count);
   nodes["storage"] = TextNode::integer(spec.storage_count);
   nodes["edge"] = TextNode::integer(spec.edge_count);
   nodes["external_filesystem"] = TextNode::boolean(spec.external_filesystem);
   auto& flavor = nodes["flavor"];
   for (const auto& [role, f] : spec.flavors) flavor[std::string(to_string(role))] = f.name;
   return render_text(root);
}

ClusterSpec default_benchmark_spec(int scale, std::string_view provider) {
   if (scale != 1 && scale != 2 && scale != 4 && scale != 8)
      throw ValidationError("benchmark scale must be one of 1, 2, 4, 8 (got " + std::to_string(scale) + ")");
   const auto& catalog = builtin_catalog(provider);
   ClusterSpec spec;
   spec.provider = std::string(provider);
   spec.service_count = 5 * scale;
   spec.storage_count = 3 * scale;
   spec.edge_count = 0;
   for (auto role : all_roles) spec.flavors[role] = *catalog.find(catalog.default_flavor);
   validate(spec);
   return spec;
}

//---------------------------------------------------------------------------
std::vector<ResourceDescriptor> desired_resources(const ClusterSpec& spec) {
   std::vector<ResourceDescriptor> out;
   for (auto role : all_roles) {
      auto node = spec.node_spec(role);
      for (int i = 0; i < spec.count(role); ++i) {
         ResourceDescriptor d;
         d.role = role;
         d.index = i;
         d.name = indexed_name(to_string(role), i);
         d.flavor = node.flavor.name;
         d.public_ip = node.public_ip_required;
         d.volume_gb = node.block_volume_gb;
         out.push_back(std::move(d));
      }
   }
   return out;
}

SpecDiff diff_spec(const std::vector<ResourceDescriptor>& current, const ClusterSpec& desired) {
   auto wanted = desired_resources(desired);
   std::map<std::string, const ResourceDescriptor*> have;
   for (const auto& r : current) have[r.name] = &r;
   std::set<std::string> kept;
   SpecDiff diff;
   for (const auto& w : wanted) {
      auto it = have.find(w.name);
      if (it != have.end() && *it->second == w) {
         diff.unchanged.push_back(w);
         kept.insert(w.name);
      } else {
         diff.to_create.push_back(w);
      }
   }
   for (const auto& r : current)
      if (!kept.count(r.name)) diff.to_destroy.push_back(r);
   auto by_role_index = [](const ResourceDescriptor& a, const ResourceDescriptor& b) {
      return std::tie(a.role, a.index, a.name) < std::tie(b.role, b.index, b.name);
   };
   std::sort(diff.to_create.begin(), diff.to_create.end(), by_role_index);
   std::sort(diff.unchanged.begin(), diff.unchanged.end(), by_role_index);
   std::sort(diff.to_destroy.begin(), diff.to_destroy.end(), [](const auto& a, const auto& b) {
      return std::tie(a.role, b.index, a.name) < std::tie(b.role, a.index, b.name);
   });
   return diff;
}

}
