#include "vre/session.hpp"

#include "vre/catalog.hpp"
#include "vre/error.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <fmt/format.h>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace vre::cli {

namespace {

std::string read_file(const fs::path& p) {
   std::ifstream in(p, std::ios::binary);
   if (!in) throw StateError("cannot read " + p.string());
   std::ostringstream ss;
   ss << in.rdbuf();
   return ss.str();
}

// Write to a sibling temp file, then rename over the target.
void write_file(const fs::path& p, std::string_view text) {
   auto tmp = p;
   tmp += ".tmp";
   {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw StateError("cannot write " + tmp.string());
      out.write(text.data(), std::streamsize(text.size()));
      if (!out) throw StateError("cannot write " + tmp.string());
   }
   fs::rename(tmp, p);
}

}

std::string template_spec(std::string_view provider) {
   const auto& catalog = builtin_catalog(provider);
   const auto& f = catalog.default_flavor;
   std::string out;
   out += fmt::format("# Cluster definition for {}.\n", catalog.name);
   out += "# Edit the counts below, then run `vre plan` and `vre apply` on this directory.\n";
   out += fmt::format("provider: {}\n", catalog.name);
   out += "# Base domain for exposed services; \"nipio\" derives names from the edge IP.\n";
   out += "domain: nipio\n";
   out += "# decentralized (preprovisioned image) or centralized (push provisioning).\n";
   out += "strategy: decentralized\n";
   out += "seed: 0\n";
   out += "proxy: false\n";
   out += "# master_schedulable: false\n";
   out += "nodes:\n";
   out += "  master: 1\n";
   out += "  service: 5\n";
   out += "  storage: 3\n";
   out += "  # With no edge nodes the master acts as reverse proxy.\n";
   out += "  edge: 0\n";
   out += "  # external_filesystem: false\n";
   out += "  flavor:\n";
   std::vector<std::string> names;
   for (const auto& [name, fl] : catalog.flavors) names.push_back(name);
   for (auto role : {"master", "edge", "storage", "service"}) out += fmt::format("    {}: {}\n", role, f);
   out += fmt::format("# Flavors on {}: {}\n", catalog.name, join(names, ", "));
   return out;
}

DeployDirectory DeployDirectory::init(std::string_view provider, const fs::path& root) {
   auto text = template_spec(provider);
   std::error_code ec;
   if (fs::exists(root)) {
      if (!fs::is_directory(root)) throw StateError(root.string() + " exists and is not a directory");
      if (!fs::is_empty(root)) throw StateError("directory " + root.string() + " is not empty");
   } else if (!fs::create_directories(root, ec) || ec) {
      throw StateError("cannot create " + root.string() + ": " + ec.message());
   }
   DeployDirectory dir(root);
   write_file(dir.spec_path(), text);
   fs::create_directories(dir.secrets_dir());
   return dir;
}

void DeployDirectory::require_initialized() const {
   if (!fs::is_regular_file(spec_path())) throw StateError(root_.string() + " is not an initialized deployment directory");
}

spec::ClusterSpec DeployDirectory::read_spec() const {
   require_initialized();
   return spec::parse_spec(read_file(spec_path()));
}

std::optional<LockRecord> DeployDirectory::read_lock() const {
   if (!fs::exists(lock_path())) return std::nullopt;
   try {
      auto j = nlohmann::json::parse(read_file(lock_path()));
      return LockRecord{j.at("provider").get<std::string>(), j.at("seed").get<std::uint64_t>(), j.at("digest").get<std::string>()};
   } catch (const nlohmann::json::exception& e) {
      throw StateError(std::string("corrupt lock file: ") + e.what());
   }
}

std::optional<Deployment> DeployDirectory::load(const calib::CalibrationFixture& fixture) const {
   require_initialized();
   if (!has_cluster()) return std::nullopt;
   auto text = read_file(state_path());
   auto lock = read_lock();
   if (!lock) throw StateError("applied state has no lock record");
   if (lock->digest != digest_hex(text)) throw StateError("state does not match the lock digest; refusing to continue");
   try {
      auto j = nlohmann::json::parse(text);
      Deployment d{spec::parse_spec(j.at("spec").get<std::string>()), cloud::CloudState(fixture.profile(lock->provider)), orch::ClusterState(), {}, {}};
      from_json(j.at("cloud"), d.cloud);
      d.cluster = orch::ClusterState::from_json(j.at("cluster"));
      edge::from_json(j.at("edge"), d.zone, d.routes);
      return d;
   } catch (const nlohmann::json::exception& e) {
      throw StateError(std::string("corrupt state file: ") + e.what());
   }
}

void DeployDirectory::save(const Deployment& d, std::uint64_t seed) const {
   fs::create_directories(state_dir());
   nlohmann::json j;
   j["spec"] = spec::render_spec(d.spec);
   j["cloud"] = d.cloud;
   j["cluster"] = d.cluster.render();
   j["edge"] = edge::to_json(d.zone, d.routes);
   auto text = j.dump(2) + "\n";
   write_file(state_path(), text);
   write_file(events_path(), cloud::event_log_csv(d.cloud.event_log()));
   nlohmann::json lock = {{"provider", d.spec.provider}, {"seed", seed}, {"digest", digest_hex(text)}};
   write_file(lock_path(), lock.dump(2) + "\n");
}

void DeployDirectory::clear() const {
   for (const auto& p : {lock_path(), state_path(), events_path()}) fs::remove(p);
}

std::string DeployDirectory::read_secret(const std::string& name) const {
   auto p = secrets_dir() / name;
   if (!fs::is_regular_file(p)) throw ValidationError("secret '" + name + "' is not provided (expected file secrets/" + name + ")");
   return read_file(p);
}

ApplyGuard::ApplyGuard(const DeployDirectory& dir) : path_(dir.apply_guard_path()) {
   fs::create_directories(dir.state_dir());
   int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
   if (fd < 0) {
      if (errno == EEXIST) throw StateError("another apply holds " + path_.string());
      throw StateError("cannot create " + path_.string() + ": " + std::strerror(errno));
   }
   ::close(fd);
}

ApplyGuard::~ApplyGuard() {
   std::error_code ec;
   fs::remove(path_, ec);
}

}
