#pragma once

#include "fstline/kinematics.hpp"

#include <algorithm>
#include <vector>

namespace fstline {

/// Per-charge time ranges on which a numerical solution is judged, plus
/// times where its regularity is known to drop (stencils straddling them
/// are skipped).
struct AssessmentWindow {
    double a_from = 0.0, a_to = 0.0;
    double b_from = 0.0, b_to = 0.0;
    std::vector<double> breaks;

    [[nodiscard]] double from(Charge c) const { return c == Charge::a ? a_from : b_from; }
    [[nodiscard]] double to(Charge c) const { return c == Charge::a ? a_to : b_to; }

    [[nodiscard]] bool straddles(double lo, double hi) const
    {
        return std::any_of(breaks.begin(), breaks.end(), [&](double s) { return lo < s && s < hi; });
    }

    /// Window for the time-reflected pair t -> -t.
    [[nodiscard]] AssessmentWindow reflected() const
    {
        AssessmentWindow w{-a_to, -a_from, -b_to, -b_from, {}};
        for (double s : breaks) w.breaks.push_back(-s);
        return w;
    }

    static AssessmentWindow whole(const TrajectoryPair& pair)
    {
        return {pair.upper().front(), pair.upper().back(), pair.lower().front(), pair.lower().back(), {}};
    }
};

} // namespace fstline
