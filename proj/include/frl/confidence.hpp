// Visit statistics over scoped tables, empirical models, confidence widths
// and confidence-set membership.
#pragma once

#include <cstdint>

#include "frl/common.hpp"
#include "frl/factored.hpp"

namespace frl {

/// Per-scope visit counts and reward sums collected along a trajectory.
/// t is 1 plus the number of recorded steps.
struct VisitStatistics {
    std::vector<std::vector<uint64_t>> trans_visits;   // [i][x]
    std::vector<std::vector<uint64_t>> trans_counts;   // [i][x * S_i + s']
    std::vector<std::vector<uint64_t>> reward_visits;  // [i][x]
    std::vector<numvec> reward_sums;                   // [i][x]
    uint64_t t = 1;
};

VisitStatistics make_statistics(const FactoredMdp& mdp);

/// Records one transition (s, a, s') and the per-factor rewards drawn at
/// (s, a), updating every scoped table the step touches.
void record_step(VisitStatistics& stats, const FactoredMdp& mdp, size_t state,
                 size_t action, size_t next_state,
                 const numvec& factor_rewards);

/// Empirical estimates: P-hat rows N(s',x)/max{1,N(x)} (uniform when
/// N(x) = 0) and R-hat means (0 when unvisited).
struct EmpiricalModel {
    std::vector<numvec> phat;  // [i][x * S_i + s']
    std::vector<numvec> rhat;  // [i][x]
};

EmpiricalModel empirical_model(const VisitStatistics& stats,
                               const FactoredMdp& mdp);

/// Confidence widths at episode start time t_k with failure parameter rho.
/// Per transition factor i and scoped value x:
///   wp(s'|x) = min{ sqrt(c_p*phat*log(c_ik)/N) + c_p*log(c_ik)/N, phat },
///   l1(x)    = 2*sqrt(c_p*S_i*log(c_ik)/N),
/// with c_ik = 6*m*S_i*|X[Z_i^P]|*t_k/rho and N = max{1, N(x)}; per reward
/// factor, wr(x) = sqrt(c_r*log(6*l*|X[Z_i^R]|*t_k/rho)/N).
/// wp is capped at phat so that extreme dynamics stay valid distributions;
/// wp_raw keeps the uncapped concentration value, which is the quantity the
/// coverage guarantee actually concerns (the cap only tightens the interval
/// and would exclude the truth at small counts).
struct WidthTables {
    std::vector<numvec> wp;      // [i][x * S_i + s'], min{raw, phat}
    std::vector<numvec> wp_raw;  // [i][x * S_i + s'], uncapped
    std::vector<numvec> l1;     // [i][x]
    std::vector<numvec> wr;     // [i][x]
};

WidthTables width_tables(const VisitStatistics& stats, const FactoredMdp& mdp,
                         const EmpiricalModel& emp, uint64_t t_k, double rho,
                         double c_p = 18.0, double c_r = 12.0);

/// One entry outside its confidence interval.
struct MembershipViolation {
    bool transition = true;
    size_t factor = 0;
    size_t x = 0;
    size_t value = 0;  // successor value for transition entries
    double excess = 0.0;
};

struct MembershipReport {
    bool member = true;
    double min_slack = 0.0;  // smallest width minus deviation over entries
    std::vector<MembershipViolation> violations;
};

/// Whether the true model lies within the widths around the empirical model,
/// entry by entry. Transition entries are compared against the uncapped
/// widths; rewards against wr.
MembershipReport in_confidence_set(const FactoredMdp& truth,
                                   const EmpiricalModel& emp,
                                   const WidthTables& widths);

/// Transition-factor visit count projected onto a reward factor's scope:
/// the sum of N_{P_i} over scoped values consistent with x on the shared
/// components. Falls back to the reward factor's own count when there is no
/// transition factor i.
uint64_t projected_transition_count(const VisitStatistics& stats,
                                    const FactoredMdp& mdp,
                                    size_t reward_factor, size_t x);

}  // namespace frl
