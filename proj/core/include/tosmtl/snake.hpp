#pragma once

#include <vector>

#include "tosmtl/strain_types.hpp"

namespace tosmtl {

struct SnakeConfig {
    double lambda = 0.60206;  // tension (first-derivative) weight
    double beta = 4.8778;     // rigidity (second-derivative) weight
    double gamma = 0.43512;   // gradient-descent step
    std::size_t max_iters = 2000;
    double convergence_tol = 1e-4;   // max node movement, in frames
    double onset_threshold = 0.03;   // strain below -eps counts as contracting
    double potential_smoothing_sigma = 1.0;  // frames

    void validate() const;
};

// Step-fit miscount field on integer onset candidates tau in [0, n_frames]:
//   P(s,tau) = #{u <  tau : e(s,u) <  -eps}   (contracting too early)
//            + #{u >= tau : e(s,u) >= -eps}   (not contracting after onset)
// Gaussian-smoothed along time. values[s][tau], tau = 0..n_frames.
std::vector<std::vector<double>> onset_potential(const StrainMatrix& m, double eps,
                                                 double smoothing_sigma = 0.0);

struct SnakeResult {
    TosCurve tos;
    std::vector<double> node_frames;  // converged node positions
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> energy_trace;  // energy after each accepted iteration
};

// Minimizes  sum_s [ lambda (t_{s+1}-t_s)^2 + beta (t_{s+1}-2 t_s+t_{s-1})^2
//                    + P(s, t_s) ]  with circular sector indexing, by explicit
// gradient descent with adaptive step halving. Nodes live in [0, n_frames-1]
// and start at each sector's first contracting frame.
SnakeResult snake_tos(const StrainMatrix& m, const SnakeConfig& cfg);

// Energy of a node configuration over the (already smoothed) potential.
double snake_energy(const std::vector<double>& nodes,
                    const std::vector<std::vector<double>>& potential,
                    double lambda, double beta, double max_frame);

}  // namespace tosmtl
