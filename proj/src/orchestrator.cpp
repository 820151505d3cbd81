#include "vre/orchestrator.hpp"

#include "vre/error.hpp"
#include "yamldoc.hpp"

#include <algorithm>
#include <fmt/format.h>

namespace vre::orch {

namespace {

bool valid_label(std::string_view s) {
   if (s.empty() || s.size() > 63 || s.front() == '-' || s.back() == '-') return false;
   return std::all_of(s.begin(), s.end(), [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-'; });
}

std::vector<std::string> string_list(const YAML::Node& node, const std::string& path) {
   std::vector<std::string> out;
   if (!node) return out;
   if (!node.IsSequence()) throw ValidationError("'" + path + "' must be a list " + detail::where(node));
   for (const auto& item : node) {
      if (!item.IsScalar()) throw ValidationError("'" + path + "' entries must be strings " + detail::where(item));
      out.push_back(item.as<std::string>());
   }
   return out;
}

}

std::string_view to_string(ContainerKind k) {
   return k == ContainerKind::short_lived ? "short_lived" : "long_running";
}

std::string_view to_string(ContainerState s) {
   switch (s) {
      case ContainerState::pending: return "pending";
      case ContainerState::running: return "running";
      case ContainerState::succeeded: return "succeeded";
      case ContainerState::failed: return "failed";
   }
   return "?";
}

std::optional<ContainerKind> parse_container_kind(std::string_view text) {
   if (text == "short_lived") return ContainerKind::short_lived;
   if (text == "long_running") return ContainerKind::long_running;
   return std::nullopt;
}

std::optional<ClaimKind> parse_claim_kind(std::string_view text) {
   for (auto k : {ClaimKind::block, ClaimKind::shared_posix, ClaimKind::object_bucket})
      if (cloud::to_string(k) == text) return k;
   return std::nullopt;
}

//---------------------------------------------------------------------------
// manifest
//---------------------------------------------------------------------------
PackageManifest parse_manifest(std::string_view document) {
   auto root = detail::load_document(document);
   detail::MapReader top(root, "");
   PackageManifest m;
   if (auto groups = top.child("groups")) {
      if (!groups.IsSequence()) throw ValidationError("'groups' must be a list " + detail::where(groups));
      for (std::size_t i = 0; i < groups.size(); ++i) {
         std::string path = fmt::format("groups[{}]", i);
         detail::MapReader g(groups[i], path);
         GroupSpec spec;
         spec.name = g.required<std::string>("name");
         spec.image = g.required<std::string>("image");
         spec.replicas = g.get<int>("replicas", 1);
         spec.vcpus = g.get<double>("vcpus", 1.0);
         auto kind = g.get<std::string>("kind", "long_running");
         auto parsed = parse_container_kind(kind);
         if (!parsed) throw ValidationError("unknown container kind '" + kind + "' in " + path);
         spec.kind = *parsed;
         spec.expose = g.get<bool>("expose", false);
         spec.claims = string_list(g.child("claims"), path + ".claims");
         spec.secrets = string_list(g.child("secrets"), path + ".secrets");
         g.finish();
         m.groups.push_back(std::move(spec));
      }
   }
   if (auto claims = top.child("claims")) {
      if (!claims.IsSequence()) throw ValidationError("'claims' must be a list " + detail::where(claims));
      for (std::size_t i = 0; i < claims.size(); ++i) {
         std::string path = fmt::format("claims[{}]", i);
         detail::MapReader c(claims[i], path);
         ClaimSpec spec;
         spec.name = c.required<std::string>("name");
         auto kind = c.get<std::string>("kind", "shared_posix");
         auto parsed = parse_claim_kind(kind);
         if (!parsed) throw ValidationError("unknown claim kind '" + kind + "' in " + path);
         spec.kind = *parsed;
         spec.size_gb = c.get<int>("size_gb", 10);
         c.finish();
         m.claims.push_back(std::move(spec));
      }
   }
   m.secrets = string_list(top.child("secrets"), "secrets");
   top.finish();
   validate(m);
   return m;
}

void validate(const PackageManifest& manifest) {
   std::set<std::string> groups, claims, secrets;
   std::map<std::string, int> block_users;
   for (const auto& c : manifest.claims) {
      if (!valid_label(c.name)) throw ValidationError("claim name '" + c.name + "' must be a DNS label");
      if (!claims.insert(c.name).second) throw ValidationError("duplicate claim '" + c.name + "'");
      if (c.size_gb < 0) throw ValidationError("claim '" + c.name + "' has negative size");
   }
   for (const auto& s : manifest.secrets)
      if (!secrets.insert(s).second) throw ValidationError("duplicate secret '" + s + "'");
   for (const auto& g : manifest.groups) {
      if (!valid_label(g.name)) throw ValidationError("group name '" + g.name + "' must be a DNS label");
      if (!groups.insert(g.name).second) throw ValidationError("duplicate group '" + g.name + "'");
      if (g.image.empty()) throw ValidationError("group '" + g.name + "' has no image");
      if (g.replicas < 1) throw ValidationError("group '" + g.name + "' needs at least one replica");
      if (!(g.vcpus > 0)) throw ValidationError("group '" + g.name + "' must request a positive number of vcpus");
      for (const auto& c : g.claims) {
         if (!claims.count(c)) throw ValidationError("group '" + g.name + "' references undeclared claim '" + c + "'");
         auto spec = std::find_if(manifest.claims.begin(), manifest.claims.end(), [&](const auto& x) { return x.name == c; });
         if (spec->kind == ClaimKind::block) block_users[c] += g.replicas;
      }
      for (const auto& s : g.secrets)
         if (!secrets.count(s)) throw ValidationError("group '" + g.name + "' references undeclared secret '" + s + "'");
   }
   for (const auto& [claim, users] : block_users)
      if (users > 1) throw ValidationError("block claim '" + claim + "' can only be mounted by one container");
}

//---------------------------------------------------------------------------
// nodes
//---------------------------------------------------------------------------
const NodeView& ClusterState::add_node(const std::string& id, spec::Role role, int capacity_vcpus, Ipv4 private_ip,
                                       std::optional<Ipv4> public_ip) {
   if (nodes_.count(id)) throw StateError("node '" + id + "' already registered");
   if (next_node_index_ > 255) throw StateError("overlay network 10.244.0.0/16 has no free /24 for '" + id + "'");
   NodeView n;
   n.id = id;
   n.role = role;
   n.index = next_node_index_++;
   n.capacity_vcpus = capacity_vcpus;
   n.private_ip = private_ip;
   n.public_ip = public_ip;
   n.schedulable = role == spec::Role::service || role == spec::Role::edge || (role == spec::Role::master && master_schedulable_);
   auto& stored = nodes_[id] = n;
   note("node_added", id, std::string(spec::to_string(role)));
   place_pending();
   refresh_endpoints();
   return stored;
}

void ClusterState::sync_nodes(const cloud::CloudState& cloud) {
   clock_ = std::max(clock_, cloud.clock());
   for (const auto& [id, vm] : cloud.vms()) {
      auto it = nodes_.find(id);
      if (it == nodes_.end() && vm.state == cloud::VmState::ready)
         add_node(id, vm.role(), vm.flavor.vcpus, vm.private_ip, vm.public_ip);
      else if (it != nodes_.end() && vm.state == cloud::VmState::failed && it->second.healthy)
         reschedule_on_failure(id, cloud.clock());
   }
   std::vector<std::string> gone;
   for (const auto& [id, n] : nodes_)
      if (!cloud.vms().count(id)) gone.push_back(id);
   for (const auto& id : gone) {
      if (nodes_.at(id).healthy) reschedule_on_failure(id, clock_);
      nodes_.erase(id);
      note("node_removed", id);
   }
}

void ClusterState::on_cloud_event(const cloud::Event& event) {
   if (event.kind != cloud::EventKind::vm_failed) return;
   auto it = nodes_.find(event.subject);
   if (it != nodes_.end() && it->second.healthy) reschedule_on_failure(event.subject, event.time);
}

const NodeView& ClusterState::node(const std::string& id) const {
   auto it = nodes_.find(id);
   if (it == nodes_.end()) throw StateError("unknown node '" + id + "'");
   return it->second;
}

//---------------------------------------------------------------------------
// containers
//---------------------------------------------------------------------------
std::string ClusterState::create_container(const ContainerSpec& spec) {
   if (!(spec.vcpus > 0)) throw ValidationError("container vcpu request must be positive");
   for (const auto& c : spec.claims)
      if (!claims_.count(c)) throw StateError("unknown claim '" + c + "'");
   std::string id = spec.id ? *spec.id : fmt::format("ctr-{:06d}", next_container_);
   ++next_container_;
   if (containers_.count(id)) throw StateError("container '" + id + "' already exists");
   ContainerRecord c;
   c.id = id;
   c.image = spec.image;
   c.vcpus_request = spec.vcpus;
   c.kind = spec.kind;
   c.replica_group = spec.replica_group;
   c.mounted_claims = spec.claims;
   containers_[id] = std::move(c);
   note("container_created", id);
   return id;
}

const ContainerRecord& ClusterState::container(const std::string& id) const {
   auto it = containers_.find(id);
   if (it == containers_.end()) throw StateError("unknown container '" + id + "'");
   return it->second;
}

std::optional<Ipv4> ClusterState::free_overlay_ip(const NodeView& node) const {
   std::set<std::uint32_t> used;
   for (const auto& [id, c] : containers_)
      if (c.node == node.id && c.overlay_ip) used.insert(c.overlay_ip->value());
   auto subnet = Ipv4::from_octets(10, 244, std::uint8_t(node.index), 0).value();
   for (std::uint32_t host = 2; host <= 254; ++host)
      if (!used.count(subnet + host)) return Ipv4(subnet + host);
   return std::nullopt;
}

bool ClusterState::claims_mountable(const ContainerRecord& c) const {
   for (const auto& name : c.mounted_claims) {
      const auto& claim = claims_.at(name);
      if (claim.kind != ClaimKind::block) continue;
      for (const auto& [id, other] : containers_)
         if (id != c.id && other.state == ContainerState::running &&
             std::find(other.mounted_claims.begin(), other.mounted_claims.end(), name) != other.mounted_claims.end())
            return false;
   }
   return true;
}

Placement ClusterState::schedule(const std::string& id) {
   auto it = containers_.find(id);
   if (it == containers_.end()) throw StateError("unknown container '" + id + "'");
   auto& c = it->second;
   Placement p;
   if (c.state != ContainerState::pending) {
      p.outcome = c.state == ContainerState::running ? Placement::Outcome::placed : Placement::Outcome::refused;
      p.node = c.node;
      p.overlay_ip = c.overlay_ip;
      return p;
   }
   if (control_plane_down_) {
      p.outcome = Placement::Outcome::refused;
      return p;
   }
   if (!claims_mountable(c)) return p;
   const NodeView* best = nullptr;
   std::optional<Ipv4> best_ip;
   for (const auto& [nid, n] : nodes_) {
      if (!n.healthy || !n.schedulable || n.free_vcpus() < c.vcpus_request) continue;
      if (best && n.free_vcpus() <= best->free_vcpus()) continue;
      auto ip = free_overlay_ip(n);
      if (!ip) continue;
      best = &n;
      best_ip = ip;
   }
   if (!best) return p;
   nodes_.at(best->id).allocated_vcpus += c.vcpus_request;
   c.state = ContainerState::running;
   c.node = best->id;
   c.overlay_ip = best_ip;
   note("container_placed", id, fmt::format("{} {}", best->id, best_ip->str()));
   refresh_endpoints();
   p.outcome = Placement::Outcome::placed;
   p.node = c.node;
   p.overlay_ip = c.overlay_ip;
   return p;
}

void ClusterState::release(ContainerRecord& c) {
   if (c.node && c.state == ContainerState::running) {
      auto n = nodes_.find(*c.node);
      if (n != nodes_.end()) n->second.allocated_vcpus -= c.vcpus_request;
   }
   c.node.reset();
   c.overlay_ip.reset();
}

void ClusterState::complete(const std::string& id, bool success) {
   auto it = containers_.find(id);
   if (it == containers_.end()) throw StateError("unknown container '" + id + "'");
   auto& c = it->second;
   if (c.state != ContainerState::running) throw StateError("container '" + id + "' is not running");
   if (success && c.kind == ContainerKind::long_running) throw StateError("long-running container '" + id + "' cannot succeed");
   release(c);
   c.state = success ? ContainerState::succeeded : ContainerState::failed;
   note(success ? "container_succeeded" : "container_failed", id);
   place_pending();
   refresh_endpoints();
}

void ClusterState::place_pending() {
   std::vector<std::string> pending;
   for (const auto& [id, c] : containers_)
      if (c.state == ContainerState::pending) pending.push_back(id);
   for (const auto& id : pending) schedule(id);
   degraded_ = std::any_of(containers_.begin(), containers_.end(), [](const auto& kv) {
      return kv.second.state == ContainerState::pending && kv.second.replica_group.has_value();
   });
}

void ClusterState::reschedule_on_failure(const std::string& node_id, double at) {
   auto it = nodes_.find(node_id);
   if (it == nodes_.end()) throw StateError("unknown node '" + node_id + "'");
   clock_ = std::max(clock_, at);
   if (!it->second.healthy) return;
   it->second.healthy = false;
   note("node_failed", node_id);
   if (it->second.role == spec::Role::master) control_plane_down_ = true;
   bool requeued = false;
   for (auto& [id, c] : containers_) {
      if (c.node != node_id || c.terminal()) continue;
      release(c);
      if (c.replica_group) {
         c.state = ContainerState::pending;
         requeued = true;
         note("container_requeued", id);
      } else {
         c.state = ContainerState::failed;
         note("container_failed", id, "node lost");
      }
   }
   if (requeued) {
      retries_.insert(clock_ + reschedule_delay_s);
      degraded_ = true;
   }
   refresh_endpoints();
}

void ClusterState::advance_to(double t) {
   if (t < clock_) throw StateError(fmt::format("time regression: advance_to({}) with clock at {}", t, clock_));
   while (!retries_.empty() && *retries_.begin() <= t) {
      clock_ = *retries_.begin();
      retries_.erase(retries_.begin());
      place_pending();
      refresh_endpoints();
   }
   clock_ = t;
}

std::optional<double> ClusterState::next_retry() const {
   if (retries_.empty()) return std::nullopt;
   return *retries_.begin();
}

//---------------------------------------------------------------------------
// services, DNS
//---------------------------------------------------------------------------
void ClusterState::add_service(const std::string& name, const std::string& selector, bool exposed) {
   if (services_.count(name)) throw StateError("service '" + name + "' already exists");
   services_[name] = {name, selector, {}, exposed};
   refresh_endpoints();
}

void ClusterState::refresh_endpoints() {
   for (auto& [name, s] : services_) {
      s.endpoints.clear();
      for (const auto& [id, c] : containers_)
         if (c.state == ContainerState::running && c.replica_group == s.selector && c.overlay_ip) s.endpoints.push_back(*c.overlay_ip);
      std::sort(s.endpoints.begin(), s.endpoints.end());
   }
   for (auto& [name, claim] : claims_) {
      claim.concurrent_mounts = 0;
      for (const auto& [id, c] : containers_)
         if (c.state == ContainerState::running &&
             std::find(c.mounted_claims.begin(), c.mounted_claims.end(), name) != c.mounted_claims.end())
            ++claim.concurrent_mounts;
   }
}

std::vector<Ipv4> ClusterState::resolve_internal(const std::string& name, Origin origin) const {
   if (origin == Origin::outside) throw StateError("internal DNS refused: '" + name + "' is only resolvable inside the cluster");
   auto it = services_.find(name);
   if (it == services_.end()) throw StateError("unknown service '" + name + "'");
   return it->second.endpoints;
}

std::map<std::string, std::vector<Ipv4>> ClusterState::dns_internal() const {
   std::map<std::string, std::vector<Ipv4>> out;
   for (const auto& [name, s] : services_) out[name] = s.endpoints;
   return out;
}

//---------------------------------------------------------------------------
// claims, secrets
//---------------------------------------------------------------------------
void ClusterState::add_claim(const std::string& name, ClaimKind kind, const std::string& backing_volume) {
   if (claims_.count(name)) throw StateError("claim '" + name + "' already exists");
   claims_[name] = {name, kind, backing_volume, 0};
   note("claim_bound", name, backing_volume);
}

void ClusterState::put_secret(const std::string& name, std::string bytes) {
   secrets_[name] = std::move(bytes);
   note("secret_stored", name);
}

std::vector<std::string> ClusterState::secret_names() const {
   std::vector<std::string> out;
   for (const auto& [name, _] : secrets_) out.push_back(name);
   return out;
}

const ContainerRecord& ClusterState::mount_secret(const std::string& container, const std::string& secret) {
   auto it = containers_.find(container);
   if (it == containers_.end()) throw StateError("unknown container '" + container + "'");
   if (!secrets_.count(secret)) throw StateError("unknown secret '" + secret + "'");
   auto& c = it->second;
   if (c.terminal()) throw StateError("cannot mount secret on terminated container '" + container + "'");
   if (std::find(c.mounted_secrets.begin(), c.mounted_secrets.end(), secret) == c.mounted_secrets.end())
      c.mounted_secrets.push_back(secret);
   note("secret_mounted", container, secret);
   return c;
}

InstallResult ClusterState::install_package(const PackageManifest& manifest, cloud::CloudState* cloud, const SecretSource& secrets) {
   validate(manifest);
   InstallResult result;
   if (manifest.groups.empty() && manifest.claims.empty() && manifest.secrets.empty()) return result;
   if (control_plane_down_) throw StateError("cluster control plane is down; install refused");
   const ClusterState snapshot = *this;
   std::vector<std::string> created_volumes;
   try {
      for (const auto& g : manifest.groups)
         if (services_.count(g.name)) throw StateError("group '" + g.name + "' is already installed");
      for (const auto& c : manifest.claims) {
         std::string backing = "claim-" + c.name;
         if (cloud) {
            backing = cloud->create_volume(c.kind, c.size_gb, backing).id;
            created_volumes.push_back(backing);
         }
         add_claim(c.name, c.kind, backing);
         result.claims.push_back(c.name);
      }
      for (const auto& s : manifest.secrets) {
         if (has_secret(s)) continue;
         if (!secrets) throw StateError("no value source for secret '" + s + "'");
         put_secret(s, secrets(s));
      }
      for (const auto& g : manifest.groups) {
         for (int r = 0; r < g.replicas; ++r) {
            ContainerSpec spec;
            spec.image = g.image;
            spec.vcpus = g.vcpus;
            spec.kind = g.kind;
            spec.replica_group = g.name;
            spec.claims = g.claims;
            spec.id = indexed_name(g.name, r);
            auto id = create_container(spec);
            for (const auto& s : g.secrets) mount_secret(id, s);
            auto placed = schedule(id);
            if (placed.outcome != Placement::Outcome::placed && g.kind == ContainerKind::long_running)
               throw StateError(fmt::format("insufficient capacity for '{}' ({} vcpus); install rolled back", id, format_double(g.vcpus)));
            result.containers.push_back(id);
         }
         add_service(g.name, g.name, g.expose);
         result.services.push_back(g.name);
         if (g.expose) result.exposed_services.push_back(g.name);
      }
   } catch (...) {
      *this = snapshot;
      if (cloud)
         for (const auto& v : created_volumes) cloud->delete_volume(v);
      throw;
   }
   degraded_ = false;
   place_pending();
   return result;
}

double ClusterState::schedulable_free_vcpus() const {
   double total = 0;
   for (const auto& [id, n] : nodes_)
      if (n.healthy && n.schedulable) total += n.free_vcpus();
   return total;
}

void ClusterState::note(std::string kind, const std::string& subject, const std::string& detail) {
   log_.push_back(fmt::format("{},{},{},{}", format_double(clock_), kind, subject, detail));
}

//---------------------------------------------------------------------------
// invariants
//---------------------------------------------------------------------------
std::string ClusterState::check_invariants() const {
   std::map<std::string, double> allocated;
   std::set<std::uint32_t> overlay;
   for (const auto& [id, c] : containers_) {
      if (c.state == ContainerState::running) {
         if (!c.node || !c.overlay_ip) return "running container '" + id + "' lacks node or address";
         auto n = nodes_.find(*c.node);
         if (n == nodes_.end() || !n->second.healthy) return "running container '" + id + "' is on an unhealthy node";
         allocated[*c.node] += c.vcpus_request;
         if (!overlay.insert(c.overlay_ip->value()).second) return "overlay address " + c.overlay_ip->str() + " is shared";
         if (c.overlay_ip->octet(0) != 10 || c.overlay_ip->octet(1) != 244 || c.overlay_ip->octet(2) != n->second.index)
            return "container '" + id + "' address outside its node subnet";
      } else if (c.overlay_ip) {
         return "non-running container '" + id + "' holds an overlay address";
      }
      if (c.kind == ContainerKind::long_running && c.state == ContainerState::succeeded)
         return "long-running container '" + id + "' succeeded";
   }
   for (const auto& [id, n] : nodes_) {
      double a = allocated.count(id) ? allocated[id] : 0.0;
      if (a > double(n.capacity_vcpus) + 1e-9) return "node '" + id + "' over capacity";
      if (std::abs(a - n.allocated_vcpus) > 1e-9) return "node '" + id + "' allocation bookkeeping drifted";
   }
   for (const auto& [name, s] : services_) {
      std::vector<Ipv4> expect;
      for (const auto& [id, c] : containers_)
         if (c.state == ContainerState::running && c.replica_group == s.selector) expect.push_back(*c.overlay_ip);
      std::sort(expect.begin(), expect.end());
      if (expect != s.endpoints) return "service '" + name + "' endpoints are stale";
   }
   for (const auto& [name, claim] : claims_) {
      int mounts = 0;
      for (const auto& [id, c] : containers_)
         if (c.state == ContainerState::running &&
             std::find(c.mounted_claims.begin(), c.mounted_claims.end(), name) != c.mounted_claims.end())
            ++mounts;
      if (claim.kind == ClaimKind::block && mounts > 1) return "block claim '" + name + "' mounted concurrently";
   }
   return {};
}

//---------------------------------------------------------------------------
// rendering
//---------------------------------------------------------------------------
nlohmann::json ClusterState::render() const {
   using nlohmann::json;
   auto opt_str = [](const auto& o) { return o ? json(*o) : json(nullptr); };
   auto opt_ip = [](const std::optional<Ipv4>& o) { return o ? json(o->str()) : json(nullptr); };
   auto ips = [](const std::vector<Ipv4>& v) {
      json a = json::array();
      for (auto ip : v) a.push_back(ip.str());
      return a;
   };
   json nodes = json::object();
   for (const auto& [id, n] : nodes_)
      nodes[id] = {{"role", spec::to_string(n.role)},  {"index", n.index},         {"capacity_vcpus", n.capacity_vcpus},
                   {"allocated_vcpus", n.allocated_vcpus}, {"healthy", n.healthy}, {"schedulable", n.schedulable},
                   {"private_ip", n.private_ip.str()}, {"public_ip", opt_ip(n.public_ip)}};
   json containers = json::object();
   for (const auto& [id, c] : containers_)
      containers[id] = {{"image", c.image},
                        {"vcpus_request", c.vcpus_request},
                        {"kind", to_string(c.kind)},
                        {"state", to_string(c.state)},
                        {"node", opt_str(c.node)},
                        {"overlay_ip", opt_ip(c.overlay_ip)},
                        {"replica_group", opt_str(c.replica_group)},
                        {"mounted_claims", c.mounted_claims},
                        {"mounted_secrets", c.mounted_secrets}};
   json services = json::object();
   for (const auto& [name, s] : services_)
      services[name] = {{"selector", s.selector}, {"endpoints", ips(s.endpoints)}, {"exposed", s.exposed}};
   json claims = json::object();
   for (const auto& [name, c] : claims_)
      claims[name] = {{"kind", cloud::to_string(c.kind)}, {"backing_volume", c.backing_volume}, {"concurrent_mounts", c.concurrent_mounts}};
   json secrets = json::object();
   for (const auto& [name, _] : secrets_) secrets[name] = redacted;
   json dns = json::object();
   for (const auto& [name, eps] : dns_internal()) dns[name] = ips(eps);
   return json{{"clock_s", clock_},
               {"master_schedulable", master_schedulable_},
               {"degraded", degraded()},
               {"flags", {{"pending_degraded", degraded_}, {"control_plane_down", control_plane_down_}}},
               {"next_node_index", next_node_index_},
               {"next_container", next_container_},
               {"nodes", nodes},
               {"containers", containers},
               {"services", services},
               {"volume_claims", claims},
               {"secrets", secrets},
               {"dns_internal", dns},
               {"retries", std::vector<double>(retries_.begin(), retries_.end())}};
}

ClusterState ClusterState::from_json(const nlohmann::json& j) {
   try {
      ClusterState c(j.at("master_schedulable").get<bool>());
      c.clock_ = j.at("clock_s").get<double>();
      c.degraded_ = j.at("flags").at("pending_degraded").get<bool>();
      c.control_plane_down_ = j.at("flags").at("control_plane_down").get<bool>();
      c.next_node_index_ = j.at("next_node_index").get<int>();
      c.next_container_ = j.at("next_container").get<std::uint64_t>();
      auto ip = [](const nlohmann::json& v) -> std::optional<Ipv4> {
         if (v.is_null()) return std::nullopt;
         auto parsed = Ipv4::parse(v.get<std::string>());
         if (!parsed) throw StateError("corrupt cluster state: bad address");
         return parsed;
      };
      for (const auto& [id, v] : j.at("nodes").items()) {
         NodeView n;
         n.id = id;
         auto role = spec::parse_role(v.at("role").get<std::string>());
         if (!role) throw StateError("corrupt cluster state: bad role");
         n.role = *role;
         n.index = v.at("index").get<int>();
         n.capacity_vcpus = v.at("capacity_vcpus").get<int>();
         n.allocated_vcpus = v.at("allocated_vcpus").get<double>();
         n.healthy = v.at("healthy").get<bool>();
         n.schedulable = v.at("schedulable").get<bool>();
         n.private_ip = *ip(v.at("private_ip"));
         n.public_ip = ip(v.at("public_ip"));
         c.nodes_[id] = n;
      }
      for (const auto& [id, v] : j.at("containers").items()) {
         ContainerRecord r;
         r.id = id;
         r.image = v.at("image").get<std::string>();
         r.vcpus_request = v.at("vcpus_request").get<double>();
         r.kind = *parse_container_kind(v.at("kind").get<std::string>());
         auto state = v.at("state").get<std::string>();
         for (auto s : {ContainerState::pending, ContainerState::running, ContainerState::succeeded, ContainerState::failed})
            if (to_string(s) == state) r.state = s;
         if (!v.at("node").is_null()) r.node = v.at("node").get<std::string>();
         r.overlay_ip = ip(v.at("overlay_ip"));
         if (!v.at("replica_group").is_null()) r.replica_group = v.at("replica_group").get<std::string>();
         r.mounted_claims = v.at("mounted_claims").get<std::vector<std::string>>();
         r.mounted_secrets = v.at("mounted_secrets").get<std::vector<std::string>>();
         c.containers_[id] = std::move(r);
      }
      for (const auto& [name, v] : j.at("services").items())
         c.services_[name] = {name, v.at("selector").get<std::string>(), {}, v.at("exposed").get<bool>()};
      for (const auto& [name, v] : j.at("volume_claims").items()) {
         auto kind = parse_claim_kind(v.at("kind").get<std::string>());
         if (!kind) throw StateError("corrupt cluster state: bad claim kind");
         c.claims_[name] = {name, *kind, v.at("backing_volume").get<std::string>(), 0};
      }
      for (const auto& [name, _] : j.at("secrets").items()) c.secrets_[name] = {};
      for (double r : j.at("retries")) c.retries_.insert(r);
      c.refresh_endpoints();
      return c;
   } catch (const nlohmann::json::exception& e) {
      throw StateError(std::string("corrupt cluster state: ") + e.what());
   }
}

}
