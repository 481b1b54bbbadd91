#include "commrec/ldst.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

namespace commrec {

namespace {

using nlohmann::json;

struct TreeState {
  std::vector<int> links;
  std::vector<char> member;        // per node idx
  std::vector<int> parent_node;    // toward root, -1 if none
  std::vector<int> parent_link;
  std::vector<int> depth;          // hops to root, -1 if absent
};

// Nodes whose in-tree path to the root still has a free channel on every
// link. The root always qualifies.
std::vector<char> feasible_attach_nodes(const TreeState& tree, const CommNetwork& net,
                                        const std::vector<int>& load, int root_idx) {
  std::vector<char> ok(net.nodes.size(), 0);
  ok[root_idx] = 1;
  // Walk outward in depth order.
  std::vector<int> order;
  for (int v = 0; v < static_cast<int>(net.nodes.size()); ++v)
    if (tree.member[v] && v != root_idx) order.push_back(v);
  std::sort(order.begin(), order.end(),
            [&tree](int x, int y) { return tree.depth[x] < tree.depth[y]; });
  for (int v : order) {
    int p = tree.parent_node[v];
    int li = tree.parent_link[v];
    ok[v] = ok[p] && load[li] < net.links[li].channels;
  }
  return ok;
}

struct Extension {
  bool found = false;
  int attach = -1;
  std::vector<int> path_nodes;  // site ... attach
  std::vector<int> path_links;  // matching links, size = nodes-1
};

// Shortest path (hop count) from the site to the nearest feasible attach
// node of a tree, using only unclaimed links. BFS over sorted adjacency,
// so the result is deterministic.
Extension bfs_to_tree(const CommNetwork& net, int site, const std::vector<int>& claimed,
                      const std::vector<char>& target) {
  Extension ext;
  if (target[site]) {
    ext.found = true;
    ext.attach = site;
    ext.path_nodes = {site};
    return ext;
  }
  std::vector<int> prev_node(net.nodes.size(), -1);
  std::vector<int> prev_link(net.nodes.size(), -1);
  std::vector<char> seen(net.nodes.size(), 0);
  seen[site] = 1;
  std::deque<int> queue{site};
  int found_node = -1;
  while (!queue.empty() && found_node < 0) {
    int u = queue.front();
    queue.pop_front();
    for (const auto& [v, li] : net.adjacency[u]) {
      if (claimed[li] >= 0 || seen[v]) continue;
      seen[v] = 1;
      prev_node[v] = u;
      prev_link[v] = li;
      if (target[v]) {
        found_node = v;
        break;
      }
      queue.push_back(v);
    }
  }
  if (found_node < 0) return ext;
  ext.found = true;
  ext.attach = found_node;
  for (int v = found_node; v != -1; v = prev_node[v]) {
    ext.path_nodes.push_back(v);
    if (prev_link[v] != -1) ext.path_links.push_back(prev_link[v]);
  }
  std::reverse(ext.path_nodes.begin(), ext.path_nodes.end());
  std::reverse(ext.path_links.begin(), ext.path_links.end());
  return ext;
}

LdstPlan build_plan(const CommNetwork& net, const ClusterAssignment& clusters, bool constrained,
                    double alpha, const std::map<int, double>& alpha_overrides, int tree_count,
                    std::uint64_t seed) {
  LdstPlan plan;
  plan.constrained = constrained;
  plan.alpha = alpha;
  plan.alpha_overrides = alpha_overrides;
  plan.seed = seed;

  if (constrained) {
    auto check_alpha = [](double a) {
      if (!(a > 0.0 && a <= 1.0))
        throw std::invalid_argument("ldst: alpha must lie in (0, 1]");
    };
    check_alpha(alpha);
    for (const auto& [k, a] : alpha_overrides) check_alpha(a);
  }

  int root_idx = net.node_idx(net.root);
  if (root_idx < 0) throw std::invalid_argument("ldst: network has no root");
  int root_degree = static_cast<int>(net.adjacency[root_idx].size());
  if (tree_count == kAutoTreeCount) tree_count = root_degree;
  if (tree_count < 1) throw std::invalid_argument("ldst: tree_count must be >= 1");
  if (tree_count > root_degree)
    throw std::invalid_argument("ldst: tree_count " + std::to_string(tree_count) +
                                " exceeds root degree " + std::to_string(root_degree));
  plan.tree_count = tree_count;

  // Cluster membership for the network's sensors.
  std::vector<std::string> sensors = net.sensor_order();
  int cluster_count = clusters.k;
  std::vector<std::vector<std::string>> cluster_members(std::max(cluster_count, 1));
  for (const auto& id : sensors) {
    auto it = clusters.membership.find(id);
    if (it == clusters.membership.end())
      throw std::invalid_argument("ldst: sensor '" + id + "' has no cluster assignment");
    if (it->second < 0 || it->second >= cluster_count)
      throw std::invalid_argument("ldst: sensor '" + id + "' has cluster index out of range");
    cluster_members[it->second].push_back(id);
    plan.cluster_of[id] = it->second;
  }

  // Spreading caps and a fail-fast feasibility check.
  std::vector<int> cap(cluster_count, std::numeric_limits<int>::max());
  if (constrained) {
    for (int k = 0; k < cluster_count; ++k) {
      int n = static_cast<int>(cluster_members[k].size());
      if (n == 0) continue;
      cap[k] = spreading_cap(n, plan.cluster_alpha(k));
      if (cap[k] < 1)
        throw std::runtime_error("ldst: infeasible: cluster " + std::to_string(k) +
                                 " of size " + std::to_string(n) + " admits no sensor per tree at alpha " +
                                 std::to_string(plan.cluster_alpha(k)));
      if (static_cast<long long>(cap[k]) * tree_count < n)
        throw std::runtime_error("ldst: infeasible: cluster " + std::to_string(k) +
                                 " needs more trees than available to honor alpha");
    }
  }

  // Seed one tree per root-adjacent link: far endpoints ordered by degree
  // (descending), ties by node id.
  std::vector<std::pair<int, int>> seeds;  // (far node idx, link idx)
  for (const auto& [v, li] : net.adjacency[root_idx]) seeds.emplace_back(v, li);
  std::sort(seeds.begin(), seeds.end(), [&net](const auto& x, const auto& y) {
    std::size_t dx = net.adjacency[x.first].size();
    std::size_t dy = net.adjacency[y.first].size();
    if (dx != dy) return dx > dy;
    return net.nodes[x.first] < net.nodes[y.first];
  });
  seeds.resize(tree_count);

  std::vector<int> claimed(net.links.size(), -1);
  std::vector<int> load(net.links.size(), 0);
  std::vector<TreeState> trees(tree_count);
  for (int m = 0; m < tree_count; ++m) {
    TreeState& t = trees[m];
    t.member.assign(net.nodes.size(), 0);
    t.parent_node.assign(net.nodes.size(), -1);
    t.parent_link.assign(net.nodes.size(), -1);
    t.depth.assign(net.nodes.size(), -1);
    t.member[root_idx] = 1;
    t.depth[root_idx] = 0;
    auto [far, li] = seeds[m];
    t.member[far] = 1;
    t.parent_node[far] = root_idx;
    t.parent_link[far] = li;
    t.depth[far] = 1;
    t.links.push_back(li);
    claimed[li] = m;
  }

  std::vector<std::vector<int>> counts(tree_count, std::vector<int>(std::max(cluster_count, 1), 0));

  for (int k = 0; k < cluster_count; ++k) {
    for (const std::string& id : cluster_members[k]) {
      int site = net.node_idx(net.sensor_sites.at(id));
      // Trees already covering the site come first (shortest root path);
      // only if none can take the sensor is the cheapest extension built.
      int best_tree = -1;
      int best_len = std::numeric_limits<int>::max();
      Extension best_ext;
      for (int m = 0; m < tree_count; ++m) {
        if (constrained && counts[m][k] >= cap[k]) continue;
        if (!trees[m].member[site]) continue;
        std::vector<char> ok = feasible_attach_nodes(trees[m], net, load, root_idx);
        if (!ok[site]) continue;  // in-tree path saturated
        if (trees[m].depth[site] < best_len) {
          best_len = trees[m].depth[site];
          best_tree = m;
          best_ext.found = true;
          best_ext.attach = site;
          best_ext.path_nodes = {site};
          best_ext.path_links.clear();
        }
      }
      if (best_tree < 0) {
        int best_ext_len = std::numeric_limits<int>::max();
        for (int m = 0; m < tree_count; ++m) {
          if (constrained && counts[m][k] >= cap[k]) continue;
          if (trees[m].member[site]) continue;
          std::vector<char> ok = feasible_attach_nodes(trees[m], net, load, root_idx);
          Extension ext = bfs_to_tree(net, site, claimed, ok);
          if (!ext.found) continue;
          int ext_len = static_cast<int>(ext.path_links.size());
          int len = ext_len + trees[m].depth[ext.attach];
          if (ext_len < best_ext_len || (ext_len == best_ext_len && len < best_len)) {
            best_ext_len = ext_len;
            best_len = len;
            best_tree = m;
            best_ext = std::move(ext);
          }
        }
      }
      if (best_tree < 0)
        throw std::runtime_error("ldst: sensor '" + id +
                                 "' unreachable by any tree with remaining capacity");

      TreeState& t = trees[best_tree];
      // Claim the extension path; parents point toward the attach node.
      for (std::size_t j = best_ext.path_nodes.size(); j-- > 1;) {
        int child = best_ext.path_nodes[j - 1];
        int parent = best_ext.path_nodes[j];
        int li = best_ext.path_links[j - 1];
        t.member[child] = 1;
        t.parent_node[child] = parent;
        t.parent_link[child] = li;
        t.depth[child] = t.depth[parent] + 1;
        t.links.push_back(li);
        claimed[li] = best_tree;
      }
      // Root path and channel loads.
      std::vector<int> path;
      for (int v = site; v != root_idx; v = t.parent_node[v]) {
        path.push_back(t.parent_link[v]);
        ++load[t.parent_link[v]];
      }
      plan.assignment[id] = best_tree;
      plan.root_paths[id] = std::move(path);
      ++counts[best_tree][k];
    }
  }

  plan.trees.resize(tree_count);
  for (int m = 0; m < tree_count; ++m) {
    plan.trees[m] = trees[m].links;
    std::sort(plan.trees[m].begin(), plan.trees[m].end());
  }
  return plan;
}

json link_to_json(const Link& l) { return json{{"a", l.a}, {"b", l.b}}; }

}  // namespace

int spreading_cap(int cluster_size, double alpha) {
  return static_cast<int>(std::floor(cluster_size * alpha + 1e-9));
}

double LdstPlan::cluster_alpha(int cluster) const {
  auto it = alpha_overrides.find(cluster);
  return it == alpha_overrides.end() ? alpha : it->second;
}

std::vector<int> LdstPlan::cluster_tree_counts(int cluster) const {
  std::vector<int> counts(trees.size(), 0);
  for (const auto& [id, m] : assignment) {
    auto it = cluster_of.find(id);
    if (it != cluster_of.end() && it->second == cluster) ++counts[m];
  }
  return counts;
}

LdstPlan build_ldst_plan(const CommNetwork& net, const ClusterAssignment& clusters, double alpha,
                         int tree_count, std::uint64_t seed,
                         const std::map<int, double>& alpha_overrides) {
  return build_plan(net, clusters, true, alpha, alpha_overrides, tree_count, seed);
}

LdstPlan build_unconstrained_plan(const CommNetwork& net, const ClusterAssignment& clusters,
                                  int tree_count, std::uint64_t seed) {
  return build_plan(net, clusters, false, 1.0, {}, tree_count, seed);
}

json plan_to_json(const LdstPlan& plan, const CommNetwork& net) {
  json doc;
  doc["format"] = "commrec-ldst-plan";
  doc["constrained"] = plan.constrained;
  doc["alpha"] = plan.alpha;
  json overrides = json::object();
  for (const auto& [k, a] : plan.alpha_overrides) overrides[std::to_string(k)] = a;
  doc["alpha_overrides"] = overrides;
  doc["seed"] = plan.seed;
  doc["tree_count"] = plan.tree_count;
  doc["root"] = net.root;
  json trees = json::array();
  for (const auto& tree : plan.trees) {
    json t = json::array();
    for (int li : tree) t.push_back(link_to_json(net.links[li]));
    trees.push_back(t);
  }
  doc["trees"] = trees;
  json assignment = json::object(), paths = json::object(), sites = json::object(),
       clusters = json::object();
  for (const auto& [id, m] : plan.assignment) {
    assignment[id] = m;
    json p = json::array();
    for (int li : plan.root_paths.at(id)) p.push_back(link_to_json(net.links[li]));
    paths[id] = p;
    sites[id] = net.sensor_sites.at(id);
    clusters[id] = plan.cluster_of.at(id);
  }
  doc["assignment"] = assignment;
  doc["root_paths"] = paths;
  doc["sites"] = sites;
  doc["clusters"] = clusters;
  return doc;
}

LdstPlan plan_from_json(const json& doc, const CommNetwork& net) {
  LdstPlan plan;
  plan.constrained = doc.at("constrained").get<bool>();
  plan.alpha = doc.at("alpha").get<double>();
  for (const auto& [k, a] : doc.value("alpha_overrides", json::object()).items())
    plan.alpha_overrides[std::stoi(k)] = a.get<double>();
  plan.seed = doc.at("seed").get<std::uint64_t>();
  plan.tree_count = doc.at("tree_count").get<int>();
  for (const auto& tree : doc.at("trees")) {
    std::vector<int> links;
    for (const auto& l : tree) {
      int li = net.link_index(l.at("a").get<std::string>(), l.at("b").get<std::string>());
      if (li < 0) throw std::runtime_error("plan: unknown link in tree");
      links.push_back(li);
    }
    std::sort(links.begin(), links.end());
    plan.trees.push_back(std::move(links));
  }
  for (const auto& [id, m] : doc.at("assignment").items()) plan.assignment[id] = m.get<int>();
  for (const auto& [id, p] : doc.at("root_paths").items()) {
    std::vector<int> path;
    for (const auto& l : p) {
      int li = net.link_index(l.at("a").get<std::string>(), l.at("b").get<std::string>());
      if (li < 0) throw std::runtime_error("plan: unknown link in root path");
      path.push_back(li);
    }
    plan.root_paths[id] = std::move(path);
  }
  for (const auto& [id, k] : doc.at("clusters").items()) plan.cluster_of[id] = k.get<int>();
  return plan;
}

std::vector<std::string> validate_plan_document(const json& doc) {
  std::vector<std::string> issues;
  for (const char* key : {"constrained", "alpha", "root", "trees", "assignment", "root_paths",
                          "sites", "clusters"})
    if (!doc.contains(key)) {
      issues.push_back(std::string("missing field '") + key + "'");
      return issues;
    }

  const std::string root = doc.at("root").get<std::string>();
  auto link_key = [](const json& l) {
    std::string a = l.at("a").get<std::string>(), b = l.at("b").get<std::string>();
    if (a > b) std::swap(a, b);
    return a + "|" + b;
  };

  // Tree shape: connected, acyclic, contains the root.
  std::map<std::string, int> link_owner;
  std::vector<std::set<std::string>> tree_nodes;
  std::vector<std::set<std::string>> tree_links;
  int tree_idx = 0;
  for (const auto& tree : doc.at("trees")) {
    std::set<std::string> nodes{root};
    std::set<std::string> links;
    std::map<std::string, std::string> uf;
    std::function<std::string(std::string)> find = [&](std::string x) {
      while (uf.count(x) && uf[x] != x) x = uf[x] = uf[uf[x]];
      if (!uf.count(x)) uf[x] = x;
      return x;
    };
    bool cycle = false;
    for (const auto& l : tree) {
      std::string a = l.at("a").get<std::string>(), b = l.at("b").get<std::string>();
      nodes.insert(a);
      nodes.insert(b);
      links.insert(link_key(l));
      std::string ra = find(a), rb = find(b);
      if (ra == rb)
        cycle = true;
      else
        uf[ra] = rb;
      auto [it, fresh] = link_owner.try_emplace(link_key(l), tree_idx);
      if (!fresh && it->second != tree_idx)
        issues.push_back("link-disjointness violated: link " + link_key(l) + " appears in trees " +
                         std::to_string(it->second) + " and " + std::to_string(tree_idx));
    }
    if (cycle) issues.push_back("tree " + std::to_string(tree_idx) + " contains a cycle");
    // Connectivity: every touched node must join the root's component.
    if (!tree.empty()) {
      std::string root_rep = find(root);
      for (const auto& n : nodes)
        if (find(n) != root_rep) {
          issues.push_back("tree " + std::to_string(tree_idx) +
                           " is not connected to the root (node " + n + ")");
          break;
        }
    }
    tree_nodes.push_back(std::move(nodes));
    tree_links.push_back(std::move(links));
    ++tree_idx;
  }

  // Assignments and root paths.
  for (const auto& [id, mj] : doc.at("assignment").items()) {
    int m = mj.get<int>();
    if (m < 0 || m >= tree_idx) {
      issues.push_back("sensor '" + id + "' assigned to unknown tree " + std::to_string(m));
      continue;
    }
    if (!doc.at("root_paths").contains(id) || !doc.at("sites").contains(id)) {
      issues.push_back("sensor '" + id + "' lacks a root path or site");
      continue;
    }
    const std::string site = doc.at("sites").at(id).get<std::string>();
    const auto& path = doc.at("root_paths").at(id);
    if (path.empty()) {
      if (site != root)
        issues.push_back("sensor '" + id + "' has an empty root path but is not at the root");
      continue;
    }
    if (!tree_nodes[m].count(site))
      issues.push_back("sensor '" + id + "' site " + site + " is not on its tree " +
                       std::to_string(m));
    std::string at = site;
    bool ok = true;
    for (const auto& l : path) {
      if (!tree_links[m].count(link_key(l))) {
        issues.push_back("sensor '" + id + "' root path uses a link outside tree " +
                         std::to_string(m));
        ok = false;
        break;
      }
      std::string a = l.at("a").get<std::string>(), b = l.at("b").get<std::string>();
      if (a == at)
        at = b;
      else if (b == at)
        at = a;
      else {
        issues.push_back("sensor '" + id + "' root path is not contiguous");
        ok = false;
        break;
      }
    }
    if (ok && at != root) issues.push_back("sensor '" + id + "' root path does not end at the root");
  }

  // Spreading caps.
  if (doc.at("constrained").get<bool>()) {
    double alpha = doc.at("alpha").get<double>();
    std::map<int, double> overrides;
    for (const auto& [k, a] : doc.value("alpha_overrides", json::object()).items())
      overrides[std::stoi(k)] = a.get<double>();
    std::map<int, int> cluster_size;
    std::map<std::pair<int, int>, int> cluster_tree;  // (cluster, tree) -> count
    for (const auto& [id, kj] : doc.at("clusters").items()) {
      int k = kj.get<int>();
      ++cluster_size[k];
      if (doc.at("assignment").contains(id))
        ++cluster_tree[{k, doc.at("assignment").at(id).get<int>()}];
    }
    for (const auto& [key, count] : cluster_tree) {
      auto [k, m] = key;
      double a = overrides.count(k) ? overrides[k] : alpha;
      int cap = spreading_cap(cluster_size[k], a);
      if (count > cap)
        issues.push_back("spreading cap violated: cluster " + std::to_string(k) + " has " +
                         std::to_string(count) + "/" + std::to_string(cluster_size[k]) +
                         " sensors on tree " + std::to_string(m) + " (alpha " +
                         std::to_string(a) + ")");
    }
  }
  return issues;
}

}  // namespace commrec
