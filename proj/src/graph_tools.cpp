#include "iqcrate/graph_tools.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace iqcrate {

void InteractionGraph::validate() const {
    if (N < 1) throw std::invalid_argument("InteractionGraph: N must be >= 1");
    std::set<std::pair<int, int>> seen;
    for (auto [i, j] : edges) {
        if (i == j) throw std::invalid_argument("InteractionGraph: self-loop at agent " +
                                                std::to_string(i + 1));
        if (i < 0 || j < 0 || i >= N || j >= N)
            throw std::invalid_argument("InteractionGraph: edge (" + std::to_string(i + 1) + "," +
                                        std::to_string(j + 1) + ") out of range for N=" +
                                        std::to_string(N));
        auto key = std::minmax(i, j);
        if (!seen.insert(key).second)
            throw std::invalid_argument("InteractionGraph: duplicate edge (" +
                                        std::to_string(key.first + 1) + "," +
                                        std::to_string(key.second + 1) + ")");
    }
    for (int v : informed)
        if (v < 0 || v >= N)
            throw std::invalid_argument("InteractionGraph: informed agent " +
                                        std::to_string(v + 1) + " out of range");
}

namespace {

InteractionGraph make(int N, std::vector<std::pair<int, int>> edges) {
    InteractionGraph g;
    g.N = N;
    g.edges = std::move(edges);
    g.validate();
    return g;
}

}  // namespace

InteractionGraph star_graph(int N) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; i < N; ++i) edges.emplace_back(0, i);
    return make(N, std::move(edges));
}

InteractionGraph cycle_graph(int N) {
    if (N < 3) throw std::invalid_argument("cycle_graph: need N >= 3");
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < N; ++i) edges.emplace_back(i, i + 1);
    edges.emplace_back(0, N - 1);
    return make(N, std::move(edges));
}

InteractionGraph path_graph(int N) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < N; ++i) edges.emplace_back(i, i + 1);
    return make(N, std::move(edges));
}

Eigen::MatrixXd laplacian(const InteractionGraph& g) {
    g.validate();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(g.N, g.N);
    for (auto [i, j] : g.edges) {
        L(i, i) += 1.0;
        L(j, j) += 1.0;
        L(i, j) -= 1.0;
        L(j, i) -= 1.0;
    }
    return L;
}

GroundedLaplacians grounded_laplacians(const InteractionGraph& g, double m_psi, double L_psi) {
    if (!(m_psi > 0.0) || m_psi > L_psi)
        throw std::invalid_argument("grounded_laplacians: need 0 < m_psi <= L_psi");
    const Eigen::MatrixXd L = laplacian(g);
    Eigen::VectorXd indicator = Eigen::VectorXd::Zero(g.N);
    for (int v : g.informed) indicator[v] = 1.0;
    GroundedLaplacians out;
    out.L_s = L + m_psi * indicator.asDiagonal().toDenseMatrix();
    out.L_b = L + L_psi * indicator.asDiagonal().toDenseMatrix();
    return out;
}

std::optional<SectorConstants> sector_constants(const InteractionGraph& g, double m_psi,
                                                double L_psi) {
    const GroundedLaplacians gl = grounded_laplacians(g, m_psi, L_psi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_s(gl.L_s, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_b(gl.L_b, Eigen::EigenvaluesOnly);
    const double m = es_s.eigenvalues().minCoeff();
    if (m <= 1e-12) return std::nullopt;  // some agent cannot reach an informed agent
    return SectorConstants{m, es_b.eigenvalues().maxCoeff()};
}

SectorConstants structural_bounds(const InteractionGraph& minimal_g, int d_max, double m_psi,
                                  double L_psi) {
    const Eigen::MatrixXd L = laplacian(minimal_g);
    int max_degree = 0;
    for (int i = 0; i < minimal_g.N; ++i)
        max_degree = std::max(max_degree, static_cast<int>(std::lround(L(i, i))));
    if (d_max < max_degree)
        throw std::invalid_argument("structural_bounds: d_max=" + std::to_string(d_max) +
                                    " is below the minimal graph's max degree " +
                                    std::to_string(max_degree));
    const GroundedLaplacians gl = grounded_laplacians(minimal_g, m_psi, m_psi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gl.L_s, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().minCoeff(), 2.0 * d_max + L_psi};
}

SectorConstants structural_bounds(const std::vector<Eigen::MatrixXd>& blocks, int d_max,
                                  double L_psi) {
    if (blocks.empty()) throw std::invalid_argument("structural_bounds: no blocks given");
    double m = std::numeric_limits<double>::infinity();
    for (const auto& blk : blocks) {
        if (blk.rows() != blk.cols())
            throw std::invalid_argument("structural_bounds: blocks must be square");
        Eigen::EigenSolver<Eigen::MatrixXd> es(blk, /*computeEigenvectors=*/false);
        m = std::min(m, es.eigenvalues().real().minCoeff());
    }
    return {m, 2.0 * d_max + L_psi};
}

bool all_reach_informed(const InteractionGraph& g) {
    g.validate();
    if (g.informed.empty()) return false;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.N));
    for (auto [i, j] : g.edges) {
        adj[static_cast<std::size_t>(i)].push_back(j);
        adj[static_cast<std::size_t>(j)].push_back(i);
    }
    std::vector<char> seen(static_cast<std::size_t>(g.N), 0);
    std::vector<int> stack(g.informed.begin(), g.informed.end());
    for (int v : stack) seen[static_cast<std::size_t>(v)] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : adj[static_cast<std::size_t>(v)])
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                stack.push_back(w);
            }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

InteractionGraph parse_graph_text(const std::string& text) {
    InteractionGraph g;
    int max_index = -1;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;  // blank line

        auto fail = [&](const std::string& why) {
            throw std::invalid_argument("graph file line " + std::to_string(line_no) + ": " + why);
        };
        if (first == "informed:" || first == "informed") {
            std::string rest;
            std::getline(ls, rest);
            if (first == "informed" ) {
                if (rest.empty() || rest[0] != ':') fail("expected 'informed:'");
                rest = rest.substr(1);
            }
            std::replace(rest.begin(), rest.end(), ',', ' ');
            std::istringstream rs(rest);
            int v = 0;
            while (rs >> v) {
                if (v < 1) fail("agent numbers are 1-based");
                g.informed.push_back(v - 1);
            }
        } else if (first == "nodes:" || first == "nodes") {
            std::string rest;
            std::getline(ls, rest);
            if (first == "nodes") {
                if (rest.empty() || rest[0] != ':') fail("expected 'nodes:'");
                rest = rest.substr(1);
            }
            const int n = std::stoi(rest);
            if (n < 1) fail("nodes must be >= 1");
            max_index = std::max(max_index, n - 1);
        } else {
            int i = 0, j = 0;
            std::istringstream es(line);
            if (!(es >> i >> j)) fail("expected 'i j' edge");
            if (i < 1 || j < 1) fail("agent numbers are 1-based");
            g.edges.emplace_back(std::min(i, j) - 1, std::max(i, j) - 1);
            max_index = std::max({max_index, i - 1, j - 1});
        }
    }
    if (max_index < 0) throw std::invalid_argument("graph file: no agents found");
    g.N = max_index + 1;
    // The agent set comes from edges and the nodes: header only; an informed
    // index outside it is a mistake, not an implicit declaration.
    for (int v : g.informed)
        if (v >= g.N)
            throw std::invalid_argument("graph file: informed agent " + std::to_string(v + 1) +
                                        " exceeds declared agents (" + std::to_string(g.N) + ")");
    std::sort(g.informed.begin(), g.informed.end());
    g.informed.erase(std::unique(g.informed.begin(), g.informed.end()), g.informed.end());
    g.validate();
    return g;
}

InteractionGraph parse_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("graph file: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_graph_text(buf.str());
}

}  // namespace iqcrate
