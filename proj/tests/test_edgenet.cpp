#include "oracles.hpp"
#include "properties.hpp"

#include "vre/edgenet.hpp"
#include "vre/error.hpp"

#include <doctest.h>

#include <random>

using namespace vre;

namespace {

int status_of(const std::function<void()>& f) {
   try {
      f();
   } catch (const edge::RouteError& e) {
      return e.status();
   }
   return 0;
}

}

TEST_SUITE("edgenet") {

TEST_CASE("nip.io names resolve to the embedded address") {
   CHECK(edge::resolve_nipio("foo.10.0.0.1.nip.io").value() == oracle::quad(10, 0, 0, 1));
   CHECK(edge::resolve_nipio("bar.10.0.0.2.nip.io").value() == oracle::quad(10, 0, 0, 2));
   CHECK(edge::resolve_nipio("a.b.192.168.1.20.nip.io").value() == oracle::quad(192, 168, 1, 20));
   CHECK(edge::resolve_nipio("10.0.0.3.nip.io").value() == oracle::quad(10, 0, 0, 3));
   CHECK(edge::resolve_nipio("FOO.10.0.0.1.NIP.IO.").value() == oracle::quad(10, 0, 0, 1));
   CHECK_THROWS_AS(edge::resolve_nipio("x.10.0.0.256.nip.io"), ValidationError);
   CHECK_THROWS_AS(edge::resolve_nipio("x.10.0.1.nip.io"), ValidationError);
   CHECK_THROWS_AS(edge::resolve_nipio("x.10.0.0.1.example.org"), ValidationError);
   CHECK_THROWS_AS(edge::resolve_nipio("x..10.0.0.1.nip.io"), ValidationError);
}

TEST_CASE("any address survives the nip.io round trip") {
   std::mt19937 rng(11);
   edge::DnsZone zone;
   for (int i = 0; i < 2000; ++i) {
      Ipv4 a{std::uint32_t(rng())};
      CHECK(edge::resolve(zone, "x." + a.str() + ".nip.io") == a);
   }
}

TEST_CASE("wildcard zones rotate over the targets") {
   edge::DnsZone zone;
   zone.base_domain = "vre.example.org";
   CHECK(status_of([&] { edge::resolve(zone, "app.vre.example.org"); }) == 503);
   zone.wildcard_targets = {Ipv4(1u), Ipv4(2u)};
   CHECK(edge::resolve(zone, "app.vre.example.org") == Ipv4(1u));
   CHECK(edge::resolve(zone, "other.vre.example.org") == Ipv4(2u));
   CHECK(edge::resolve(zone, "app.vre.example.org") == Ipv4(1u));
   CHECK_THROWS_AS(edge::resolve(zone, "app.example.org"), ValidationError);
   CHECK_THROWS_AS(edge::resolve(zone, "vre.example.org"), ValidationError);
}

TEST_CASE("records follow the edge nodes, or the master without any") {
   const auto& fx = calib::default_calibration();
   auto no_edge = props::deploy_spec(props::five_service_spec(), fx);
   edge::DnsZone zone;
   edge::update_records(zone, no_edge.cluster);
   REQUIRE(zone.wildcard_targets.size() == 1);
   CHECK(zone.wildcard_targets[0] == *no_edge.cloud.vm("master-000").public_ip);

   auto with_edges = props::deploy_spec(spec::parse_spec("provider: aws-sim\nnodes:\n  service: 2\n  storage: 1\n  edge: 2\n"), fx);
   edge::update_records(zone, with_edges.cluster);
   std::vector<Ipv4> expect = {*with_edges.cloud.vm("edge-000").public_ip, *with_edges.cloud.vm("edge-001").public_ip};
   std::sort(expect.begin(), expect.end());
   auto got = zone.wildcard_targets;
   std::sort(got.begin(), got.end());
   CHECK(got == expect);
   CHECK(zone.base_domain == "nipio");

   // an edge failure drops its record
   with_edges.cloud.inject_failure("edge-001", with_edges.cloud.clock() + 1);
   for (const auto& e : with_edges.cloud.run_until_idle()) with_edges.cluster.on_cloud_event(e);
   edge::update_records(zone, with_edges.cluster);
   CHECK(zone.wildcard_targets == std::vector<Ipv4>{*with_edges.cloud.vm("edge-000").public_ip});
   CHECK(zone.wildcard_targets == edge::live_edge_ips(with_edges.cluster));
}

TEST_CASE("round robin is fair per rule") {
   auto d = props::deploy_spec(props::five_service_spec(), calib::default_calibration());
   d.cluster.install_package(props::replica_manifest(3), &d.cloud, {});
   edge::RouteTable table;
   edge::add_rule(table, "work.example", "work", d.cluster);
   std::map<Ipv4, int> hits;
   for (int i = 0; i < 6; ++i) ++hits[edge::route(table, "work.example", d.cluster)];
   CHECK(hits.size() == 3);
   for (const auto& [ip, n] : hits) CHECK(n == 2);
   for (int k = 1; k <= 5; ++k) {
      std::map<Ipv4, int> more;
      for (int i = 0; i < 3 * k; ++i) ++more[edge::route(table, "WORK.example", d.cluster)];
      for (const auto& [ip, n] : more) CHECK(n == k);
   }
   CHECK(status_of([&] { edge::route(table, "unknown.example", d.cluster); }) == 404);
}

TEST_CASE("a service with no running replica answers 503") {
   auto d = props::deploy_spec(props::five_service_spec(), calib::default_calibration());
   auto m = props::replica_manifest(1);
   d.cluster.install_package(m, &d.cloud, {});
   edge::RouteTable table;
   edge::add_rule(table, "w", "work", d.cluster);
   d.cluster.complete("work-000", false);
   CHECK(status_of([&] { edge::route(table, "w", d.cluster); }) == 503);
   auto hidden = props::replica_manifest(1);
   hidden.groups[0].name = "hidden";
   hidden.groups[0].expose = false;
   d.cluster.install_package(hidden, &d.cloud, {});
   CHECK_THROWS_AS(edge::add_rule(table, "h", "hidden", d.cluster), StateError);
   CHECK_THROWS_AS(edge::add_rule(table, "h", "absent", d.cluster), StateError);
}

TEST_CASE("hostnames and hop encryption") {
   edge::DnsZone zone;
   zone.wildcard_targets = {Ipv4::from_octets(198, 18, 0, 1)};
   CHECK(edge::hostname_for(zone, "ui") == "ui.198.18.0.1.nip.io");
   zone.base_domain = "vre.example.org";
   CHECK(edge::hostname_for(zone, "ui") == "ui.vre.example.org");
   for (const auto& h : edge::external_hops(zone)) CHECK_FALSE(h.encrypted);
   zone.proxied = true;
   auto hops = edge::external_hops(zone);
   CHECK(hops.size() == 2);
   for (const auto& h : hops) CHECK(h.encrypted);
}

TEST_CASE("route dump and state round trip") {
   auto d = props::deploy_spec(props::five_service_spec(), calib::default_calibration());
   d.cluster.install_package(props::replica_manifest(2), &d.cloud, {});
   edge::DnsZone zone;
   edge::update_records(zone, d.cluster);
   edge::RouteTable table;
   edge::add_rule(table, edge::hostname_for(zone, "work"), "work", d.cluster);
   edge::route(table, edge::hostname_for(zone, "work"), d.cluster);
   auto csv = edge::route_dump_csv(table, d.cluster, zone);
   CHECK(csv == "host,service,endpoint_count,proxied\n" + edge::hostname_for(zone, "work") + ",work,2,false\n");
   edge::DnsZone z2;
   edge::RouteTable t2;
   edge::from_json(edge::to_json(zone, table), z2, t2);
   CHECK(edge::to_json(z2, t2) == edge::to_json(zone, table));
}

}
