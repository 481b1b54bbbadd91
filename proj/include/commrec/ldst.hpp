#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "commrec/clustering.hpp"
#include "commrec/graph.hpp"

namespace commrec {

/// tree_count value requesting one tree per root-adjacent link.
inline constexpr int kAutoTreeCount = 0;

/// Family of mutually link-disjoint trees rooted at the operating center,
/// plus each sensor's tree assignment and its in-tree path to the root.
struct LdstPlan {
  bool constrained = true;  // false for the routing-cap-free baseline
  double alpha = 1.0;
  std::map<int, double> alpha_overrides;  // cluster -> alpha
  std::uint64_t seed = 0;
  int tree_count = 0;

  std::vector<std::vector<int>> trees;  // link indices into net.links, each sorted
  std::map<std::string, int> assignment;
  std::map<std::string, std::vector<int>> root_paths;  // site -> root link order
  std::map<std::string, int> cluster_of;               // snapshot for validation

  double cluster_alpha(int cluster) const;
  /// Per-tree sensor count for one cluster.
  std::vector<int> cluster_tree_counts(int cluster) const;
};

/// Maximum sensors of a size-n cluster allowed on one tree under cap a.
int spreading_cap(int cluster_size, double alpha);

/// Builds the constrained plan. Trees are seeded one per root-adjacent link
/// (highest far-endpoint degree first) and grown on demand by shortest-path
/// extension over unclaimed links; sensors are assigned nearest-tree first
/// with the per-cluster spreading cap and per-link channel limits enforced.
/// Deterministic for fixed inputs. Throws on infeasibility.
LdstPlan build_ldst_plan(const CommNetwork& net, const ClusterAssignment& clusters,
                         double alpha, int tree_count, std::uint64_t seed,
                         const std::map<int, double>& alpha_overrides = {});

/// Same construction without the spreading cap (channel limits only).
LdstPlan build_unconstrained_plan(const CommNetwork& net, const ClusterAssignment& clusters,
                                  int tree_count, std::uint64_t seed);

nlohmann::json plan_to_json(const LdstPlan& plan, const CommNetwork& net);
LdstPlan plan_from_json(const nlohmann::json& doc, const CommNetwork& net);

/// Re-checks every structural plan invariant on an exported document:
/// tree shape (acyclic, connected, contains root), pairwise link
/// disjointness, root-path consistency, and the spreading cap when the
/// plan is constrained. Returns a list of violations (empty = valid).
std::vector<std::string> validate_plan_document(const nlohmann::json& doc);

}  // namespace commrec
