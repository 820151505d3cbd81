#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace vre {

struct Flavor {
   std::string name;
   int vcpus = 1;
   double ram_gb = 1.0;

   bool operator==(const Flavor&) const = default;
};

/// Static (non-timing) part of a simulated provider: flavors and IP quota.
struct ProviderCatalog {
   std::string name;
   std::map<std::string, Flavor> flavors;
   std::string default_flavor;
   /// Flavor used when workloads need many vCPUs per node.
   std::string compute_flavor;
   int public_ip_quota = 0;

   const Flavor* find(std::string_view flavor) const;
};

/// Names of the four built-in simulated providers, sorted.
const std::vector<std::string>& known_providers();

/// Throws ValidationError listing the known providers if `name` is unknown.
const ProviderCatalog& builtin_catalog(std::string_view name);

}
