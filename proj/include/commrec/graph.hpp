#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace commrec {

/// Undirected communication link. Endpoints are stored with a < b.
struct Link {
  std::string a;
  std::string b;
  int channels = 1;
};

/// Communication graph with a root (operating center) and sensor placements.
struct CommNetwork {
  std::vector<std::string> nodes;  // sorted, unique
  std::vector<Link> links;         // sorted by (a, b), unique
  std::string root;
  std::map<std::string, std::string> sensor_sites;  // sensor id -> node id

  // Derived lookups, rebuilt on load.
  std::map<std::string, int> node_index;
  // node idx -> (neighbor node idx, link idx), sorted by neighbor id.
  std::vector<std::vector<std::pair<int, int>>> adjacency;

  int node_idx(const std::string& id) const;
  /// Link index for an unordered endpoint pair, -1 if absent.
  int link_index(const std::string& a, const std::string& b) const;
  int root_degree() const;
  /// Sensor ids in ascending order.
  std::vector<std::string> sensor_order() const;

  void rebuild_derived();
};

/// Parses and validates a topology document (JSON text). Throws
/// std::runtime_error on schema violations, self-loops, duplicate links,
/// missing root, or a sensor site unreachable from the root.
CommNetwork load_network(const std::string& topology_json_text);
CommNetwork load_network_file(const std::string& path);

}  // namespace commrec
