#include "vre/catalog.hpp"

#include "vre/error.hpp"
#include "vre/util.hpp"

namespace vre {

namespace {

ProviderCatalog make(std::string name, std::vector<Flavor> flavors, std::string default_flavor, std::string compute_flavor,
                     int quota) {
   ProviderCatalog c;
   c.name = std::move(name);
   for (auto& f : flavors) c.flavors.emplace(f.name, f);
   c.default_flavor = std::move(default_flavor);
   c.compute_flavor = std::move(compute_flavor);
   c.public_ip_quota = quota;
   return c;
}

// Flavor names follow the instance types used on each real provider; sizes are nominal.
const std::map<std::string, ProviderCatalog, std::less<>>& catalogs() {
   static const std::map<std::string, ProviderCatalog, std::less<>> all = [] {
      std::map<std::string, ProviderCatalog, std::less<>> m;
      m.emplace("aws-sim", make("aws-sim", {{"t2.medium", 2, 4.0}, {"t2.xlarge", 4, 16.0}, {"t2.2xlarge", 8, 32.0}},
                                "t2.medium", "t2.2xlarge", 16));
      m.emplace("azure-sim",
                make("azure-sim", {{"Standard_DS2_v2", 2, 7.0}, {"Standard_DS4_v2", 8, 28.0}, {"Standard_D32s_v3", 32, 128.0}},
                     "Standard_DS2_v2", "Standard_D32s_v3", 10));
      m.emplace("gcp-sim", make("gcp-sim", {{"n1-standard-2", 2, 7.5}, {"n1-standard-8", 8, 30.0}}, "n1-standard-2",
                                "n1-standard-8", 12));
      m.emplace("openstack-sim", make("openstack-sim", {{"s1.modest", 2, 4.0}, {"s1.large", 8, 16.0}, {"s1.huge", 22, 36.0}},
                                      "s1.modest", "s1.large", 4));
      return m;
   }();
   return all;
}

}

const Flavor* ProviderCatalog::find(std::string_view flavor) const {
   auto it = flavors.find(std::string(flavor));
   return it == flavors.end() ? nullptr : &it->second;
}

const std::vector<std::string>& known_providers() {
   static const std::vector<std::string> names = [] {
      std::vector<std::string> v;
      for (const auto& [k, _] : catalogs()) v.push_back(k);
      return v;
   }();
   return names;
}

const ProviderCatalog& builtin_catalog(std::string_view name) {
   auto it = catalogs().find(name);
   if (it == catalogs().end())
      throw ValidationError("unknown provider '" + std::string(name) + "' (known: " + join(known_providers(), ", ") + ")");
   return it->second;
}

}
