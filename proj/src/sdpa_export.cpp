#include "iqcrate/sdp.hpp"
#include "sdp_internal.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace iqcrate {

// Writes the slack-maximization form as a sparse SDPA file (.dat-s).  The
// SDPA convention is: minimize c'x subject to  sum_i x_i F_i - F0 >= 0 per
// block.  Our form  Z = F0 + sum_k u_k F_k >= 0, maximize u_t  maps to
// F0_sdpa = -F0, F_i_sdpa = F_i and c = -e_t, so the SDPA optimum equals
// minus the achievable slack.
void write_sdpa(const SdpProblem& p, const std::string& path, const SolveOptions& opts) {
    detail::Lowered low = detail::lower(p, opts.box_radius);
    if (!low.abort_reason.empty())
        throw std::runtime_error("write_sdpa: " + low.abort_reason);
    if (low.fixed_point)
        throw std::runtime_error("write_sdpa: equalities pin all variables; nothing to export");

    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_sdpa: cannot open " + path);
    out << std::setprecision(17);

    const int nv = low.nvars;
    const std::size_t ndense = low.dense.size();
    const bool has_rows = !low.rows.empty();

    out << "* slack-maximization feasibility form; SDPA optimum = -(best slack)\n";
    out << nv << " = mDIM\n";
    out << (ndense + (has_rows ? 1 : 0)) << " = nBLOCK\n";
    for (std::size_t j = 0; j < ndense; ++j) out << low.dense[j].F0.rows() << " ";
    if (has_rows) out << "-" << low.rows.size();
    out << " = bLOCKsTRUCT\n";
    for (int k = 0; k < nv; ++k) out << (k == nv - 1 ? -1.0 : 0.0) << " ";
    out << "\n";

    auto emit = [&](int matno, int blkno, Eigen::Index i, Eigen::Index j, double v) {
        if (v != 0.0) out << matno << " " << blkno << " " << i + 1 << " " << j + 1 << " " << v << "\n";
    };
    for (std::size_t j = 0; j < ndense; ++j) {
        const int blk = static_cast<int>(j) + 1;
        const auto& db = low.dense[j];
        for (Eigen::Index r = 0; r < db.F0.rows(); ++r)
            for (Eigen::Index c = r; c < db.F0.cols(); ++c) emit(0, blk, r, c, -db.F0(r, c));
        for (const auto& [k, F] : db.terms)
            for (Eigen::Index r = 0; r < F.rows(); ++r)
                for (Eigen::Index c = r; c < F.cols(); ++c) emit(k + 1, blk, r, c, F(r, c));
    }
    if (has_rows) {
        const int blk = static_cast<int>(ndense) + 1;
        for (std::size_t rr = 0; rr < low.rows.size(); ++rr) {
            const auto i = static_cast<Eigen::Index>(rr);
            emit(0, blk, i, i, -low.rows[rr].f0);
            for (const auto& [k, c] : low.rows[rr].terms) emit(k + 1, blk, i, i, c);
        }
    }
}

}  // namespace iqcrate
