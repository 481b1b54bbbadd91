#include "commrec/graph.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace commrec {

namespace {

using nlohmann::json;

std::string node_id_from_json(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  throw std::runtime_error("topology: node id must be a string or integer");
}

}  // namespace

int CommNetwork::node_idx(const std::string& id) const {
  auto it = node_index.find(id);
  return it == node_index.end() ? -1 : it->second;
}

int CommNetwork::link_index(const std::string& a, const std::string& b) const {
  const std::string& lo = std::min(a, b);
  const std::string& hi = std::max(a, b);
  auto it = std::lower_bound(links.begin(), links.end(), std::make_pair(lo, hi),
                             [](const Link& l, const std::pair<std::string, std::string>& key) {
                               return std::tie(l.a, l.b) < std::tie(key.first, key.second);
                             });
  if (it != links.end() && it->a == lo && it->b == hi)
    return static_cast<int>(it - links.begin());
  return -1;
}

int CommNetwork::root_degree() const {
  int idx = node_idx(root);
  return idx < 0 ? 0 : static_cast<int>(adjacency[idx].size());
}

std::vector<std::string> CommNetwork::sensor_order() const {
  std::vector<std::string> out;
  out.reserve(sensor_sites.size());
  for (const auto& [id, site] : sensor_sites) out.push_back(id);
  return out;  // std::map keeps ids sorted
}

void CommNetwork::rebuild_derived() {
  node_index.clear();
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) node_index[nodes[i]] = i;
  adjacency.assign(nodes.size(), {});
  for (int li = 0; li < static_cast<int>(links.size()); ++li) {
    int ia = node_index.at(links[li].a);
    int ib = node_index.at(links[li].b);
    adjacency[ia].emplace_back(ib, li);
    adjacency[ib].emplace_back(ia, li);
  }
  for (auto& nbrs : adjacency)
    std::sort(nbrs.begin(), nbrs.end(), [this](const auto& x, const auto& y) {
      return nodes[x.first] < nodes[y.first];
    });
}

CommNetwork load_network(const std::string& topology_json_text) {
  json doc;
  try {
    doc = json::parse(topology_json_text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("topology: parse error: ") + e.what());
  }
  if (!doc.is_object()) throw std::runtime_error("topology: document must be an object");
  for (const char* key : {"nodes", "links", "root"})
    if (!doc.contains(key))
      throw std::runtime_error(std::string("topology: missing field '") + key + "'");

  CommNetwork net;
  std::set<std::string> seen_nodes;
  for (const auto& n : doc.at("nodes")) {
    std::string id = node_id_from_json(n);
    if (!seen_nodes.insert(id).second)
      throw std::runtime_error("topology: duplicate node '" + id + "'");
  }
  net.nodes.assign(seen_nodes.begin(), seen_nodes.end());

  net.root = node_id_from_json(doc.at("root"));
  if (!seen_nodes.count(net.root))
    throw std::runtime_error("topology: root missing from node list: '" + net.root + "'");

  std::set<std::pair<std::string, std::string>> seen_links;
  for (const auto& l : doc.at("links")) {
    Link link;
    link.a = node_id_from_json(l.at("a"));
    link.b = node_id_from_json(l.at("b"));
    // Absent means no declared capacity (links carry multiple channels).
    link.channels = l.contains("channels") ? l.at("channels").get<int>()
                                           : std::numeric_limits<int>::max();
    if (link.a == link.b)
      throw std::runtime_error("topology: self-loop at node '" + link.a + "'");
    if (!seen_nodes.count(link.a) || !seen_nodes.count(link.b))
      throw std::runtime_error("topology: link endpoint not in node list: (" + link.a + ", " +
                               link.b + ")");
    if (link.channels < 1)
      throw std::runtime_error("topology: link (" + link.a + ", " + link.b +
                               ") must have at least one channel");
    if (link.a > link.b) std::swap(link.a, link.b);
    if (!seen_links.insert({link.a, link.b}).second)
      throw std::runtime_error("topology: duplicate link (" + link.a + ", " + link.b + ")");
    net.links.push_back(link);
  }
  std::sort(net.links.begin(), net.links.end(),
            [](const Link& x, const Link& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });

  if (doc.contains("sensors")) {
    for (const auto& s : doc.at("sensors")) {
      std::string id = s.at("id").is_string() ? s.at("id").get<std::string>()
                                              : node_id_from_json(s.at("id"));
      std::string node = node_id_from_json(s.at("node"));
      if (!seen_nodes.count(node))
        throw std::runtime_error("topology: sensor '" + id + "' placed at unknown node '" +
                                 node + "'");
      if (net.sensor_sites.count(id))
        throw std::runtime_error("topology: duplicate sensor id '" + id + "'");
      net.sensor_sites[id] = node;
    }
  }

  net.rebuild_derived();

  // Reachability from the root.
  std::vector<char> visited(net.nodes.size(), 0);
  std::queue<int> frontier;
  int root_idx = net.node_idx(net.root);
  visited[root_idx] = 1;
  frontier.push(root_idx);
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (const auto& [v, li] : net.adjacency[u])
      if (!visited[v]) {
        visited[v] = 1;
        frontier.push(v);
      }
  }
  for (const auto& [id, site] : net.sensor_sites)
    if (!visited[net.node_idx(site)])
      throw std::runtime_error("topology: sensor '" + id + "' at node '" + site +
                               "' is not reachable from the root");

  return net;
}

CommNetwork load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("topology: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_network(buf.str());
}

}  // namespace commrec
