#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace iqcrate {

// ============================================================================
// Interaction graphs and network sector constants
// ============================================================================
// Undirected, unweighted graphs over agents 0..N-1 with a designated subset
// of informed agents (those that measure the external field).  Graph files
// and console output use 1-based agent numbers; the in-memory indices are
// 0-based.

struct InteractionGraph {
    int N = 0;
    std::vector<std::pair<int, int>> edges;  // stored with first < second
    std::vector<int> informed;               // sorted, unique

    // Throws std::invalid_argument on out-of-range endpoints, self-loops or
    // duplicate edges.
    void validate() const;
};

[[nodiscard]] InteractionGraph star_graph(int N);   // agent 0 is the hub
[[nodiscard]] InteractionGraph cycle_graph(int N);
[[nodiscard]] InteractionGraph path_graph(int N);

// Degree matrix minus adjacency matrix; rows sum to zero.
[[nodiscard]] Eigen::MatrixXd laplacian(const InteractionGraph& g);

// Grounded Laplacians L_s = L + m_psi E and L_b = L + L_psi E, with E the
// diagonal indicator of informed agents.
struct GroundedLaplacians {
    Eigen::MatrixXd L_s;
    Eigen::MatrixXd L_b;
};

[[nodiscard]] GroundedLaplacians grounded_laplacians(const InteractionGraph& g,
                                                     double m_psi, double L_psi);

struct SectorConstants {
    double m = 0.0;
    double L = 0.0;
};

// Network sector constants (lambda_min(L_s), lambda_max(L_b)).  Returns
// nullopt when lambda_min(L_s) <= 1e-12, i.e. some agent has no path to an
// informed agent and the network field is not strongly convex.
[[nodiscard]] std::optional<SectorConstants> sector_constants(const InteractionGraph& g,
                                                              double m_psi, double L_psi);

// Robust bounds when only a guaranteed-present subgraph and a degree cap are
// known: m = lambda_min of the minimal grounded Laplacian, L = 2 d_max + L_psi
// (Gershgorin bound on any admissible Laplacian).
[[nodiscard]] SectorConstants structural_bounds(const InteractionGraph& minimal_g, int d_max,
                                                double m_psi, double L_psi);

// Same bound evaluated from explicitly supplied grounded-Laplacian blocks
// (the block-diagonal pieces of the minimal grounded Laplacian after node
// reordering).  m is the smallest real eigenvalue over all blocks.
[[nodiscard]] SectorConstants structural_bounds(const std::vector<Eigen::MatrixXd>& blocks,
                                                int d_max, double L_psi);

// True when every agent has a path to an informed agent.
[[nodiscard]] bool all_reach_informed(const InteractionGraph& g);

// Text format: one "i j" edge per line, a header "informed: i,j,...", and an
// optional "nodes: N" header for isolated trailing agents; '#' starts a
// comment.  Agent numbers are 1-based in files.
[[nodiscard]] InteractionGraph parse_graph_file(const std::string& path);
[[nodiscard]] InteractionGraph parse_graph_text(const std::string& text);

}  // namespace iqcrate
